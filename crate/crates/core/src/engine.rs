//! Persistence engines: something that turns an image into the diagram of
//! one fixed construction.
//!
//! The external engine runs a program with the path of an NDTEXT image as
//! its last argument and reads `dim,birth,death` CSV from its standard output.

use std::io::Write as _;
use std::process::Command;
use std::sync::Arc;

use thiserror::Error;

use crate::cubical::{Construction, CubicalError};
use crate::image::GrayscaleImage;
use crate::persistence::{
    compute_diagram, DiagramParseError, PersistenceDiagram, PersistenceError, Reducer, TwistReduction,
};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Cubical(#[from] CubicalError),
    #[error(transparent)]
    Persistence(#[from] PersistenceError),
    #[error("failed to run external engine '{program}': {source}")]
    Spawn { program: String, source: std::io::Error },
    #[error("external engine exited with {status}: {stderr}")]
    Exit { status: String, stderr: String },
    #[error("external engine produced an unreadable diagram: {0}")]
    Output(#[from] DiagramParseError),
    #[error("unknown engine '{0}'")]
    Unknown(String),
    #[error("engine configuration: {0}")]
    Config(String),
}

pub trait DiagramEngine: Send + Sync {
    fn name(&self) -> &str;
    /// The construction whose diagram [`DiagramEngine::diagram`] returns.
    fn construction(&self) -> Construction;
    fn diagram(&self, img: &GrayscaleImage) -> Result<PersistenceDiagram, EngineError>;
}

/// Builds the complex in-process and reduces it.
#[derive(Clone)]
pub struct InternalEngine {
    construction: Construction,
    periodic: bool,
    reducer: Arc<dyn Reducer>,
}

impl InternalEngine {
    pub fn new(construction: Construction) -> Self {
        InternalEngine {
            construction,
            periodic: false,
            reducer: Arc::new(TwistReduction),
        }
    }

    pub fn periodic(mut self, periodic: bool) -> Self {
        self.periodic = periodic;
        self
    }

    pub fn with_reducer(mut self, reducer: Arc<dyn Reducer>) -> Self {
        self.reducer = reducer;
        self
    }
}

impl DiagramEngine for InternalEngine {
    fn name(&self) -> &str {
        "internal"
    }

    fn construction(&self) -> Construction {
        self.construction
    }

    fn diagram(&self, img: &GrayscaleImage) -> Result<PersistenceDiagram, EngineError> {
        let cx = self.construction.build(img, self.periodic)?;
        Ok(compute_diagram(&cx, self.reducer.as_ref())?)
    }
}

/// Runs `program args... <image.ndtext>` and parses its standard output.
#[derive(Clone, Debug)]
pub struct ExternalEngine {
    construction: Construction,
    program: String,
    args: Vec<String>,
}

impl ExternalEngine {
    pub fn new(construction: Construction, program: impl Into<String>, args: Vec<String>) -> Self {
        ExternalEngine {
            construction,
            program: program.into(),
            args,
        }
    }

    /// Splits a command line on whitespace; no quoting is supported.
    pub fn from_command_line(construction: Construction, command: &str) -> Result<Self, EngineError> {
        let mut words = command.split_whitespace().map(str::to_string);
        let program = words
            .next()
            .ok_or_else(|| EngineError::Config("empty engine command".into()))?;
        Ok(ExternalEngine::new(construction, program, words.collect()))
    }
}

impl DiagramEngine for ExternalEngine {
    fn name(&self) -> &str {
        "external"
    }

    fn construction(&self) -> Construction {
        self.construction
    }

    fn diagram(&self, img: &GrayscaleImage) -> Result<PersistenceDiagram, EngineError> {
        let spawn = |source| EngineError::Spawn {
            program: self.program.clone(),
            source,
        };
        let mut file = tempfile::Builder::new().suffix(".ndtext").tempfile().map_err(spawn)?;
        file.write_all(img.to_ndtext().as_bytes()).map_err(spawn)?;
        file.flush().map_err(spawn)?;
        let output = Command::new(&self.program)
            .args(&self.args)
            .arg(file.path())
            .output()
            .map_err(spawn)?;
        if !output.status.success() {
            return Err(EngineError::Exit {
                status: output.status.to_string(),
                stderr: String::from_utf8_lossy(&output.stderr).trim().to_string(),
            });
        }
        let text = String::from_utf8_lossy(&output.stdout);
        Ok(PersistenceDiagram::from_csv(&text)?)
    }
}

/// Everything an engine factory may need.
#[derive(Clone)]
pub struct EngineConfig {
    pub construction: Construction,
    pub periodic: bool,
    pub reducer: Arc<dyn Reducer>,
    pub command: Option<String>,
}

impl EngineConfig {
    pub fn new(construction: Construction) -> Self {
        EngineConfig {
            construction,
            periodic: false,
            reducer: Arc::new(TwistReduction),
            command: None,
        }
    }
}

type EngineFactory = Box<dyn Fn(&EngineConfig) -> Result<Box<dyn DiagramEngine>, EngineError> + Send + Sync>;

/// Engines by name; `internal` and `external` are registered by default.
pub struct EngineRegistry {
    factories: Vec<(String, EngineFactory)>,
}

impl Default for EngineRegistry {
    fn default() -> Self {
        let mut registry = EngineRegistry::empty();
        registry.register("internal", |cfg| {
            Ok(Box::new(
                InternalEngine::new(cfg.construction)
                    .periodic(cfg.periodic)
                    .with_reducer(cfg.reducer.clone()),
            ))
        });
        registry.register("external", |cfg| {
            let command = cfg
                .command
                .as_deref()
                .ok_or_else(|| EngineError::Config("the external engine needs a command".into()))?;
            Ok(Box::new(ExternalEngine::from_command_line(cfg.construction, command)?))
        });
        registry
    }
}

impl EngineRegistry {
    pub fn empty() -> Self {
        EngineRegistry { factories: Vec::new() }
    }

    pub fn register(
        &mut self,
        name: &str,
        factory: impl Fn(&EngineConfig) -> Result<Box<dyn DiagramEngine>, EngineError> + Send + Sync + 'static,
    ) {
        self.factories.retain(|(n, _)| n != name);
        self.factories.push((name.to_string(), Box::new(factory)));
    }

    pub fn create(&self, name: &str, config: &EngineConfig) -> Result<Box<dyn DiagramEngine>, EngineError> {
        let (_, factory) = self
            .factories
            .iter()
            .find(|(n, _)| n == name)
            .ok_or_else(|| EngineError::Unknown(name.to_string()))?;
        factory(config)
    }

    pub fn names(&self) -> Vec<&str> {
        self.factories.iter().map(|(n, _)| n.as_str()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::persistence::Interval;

    fn checkerboard() -> GrayscaleImage {
        GrayscaleImage::new(vec![2, 2], vec![0.0, 1.0, 1.0, 0.0]).unwrap()
    }

    #[test]
    fn internal_engine_diagrams() {
        let v = InternalEngine::new(Construction::V).diagram(&checkerboard()).unwrap();
        assert_eq!(
            v,
            PersistenceDiagram::new([Interval::essential(0, 0.0), Interval::finite(0, 0.0, 1.0)])
        );
        let t = InternalEngine::new(Construction::T).diagram(&checkerboard()).unwrap();
        assert_eq!(t, PersistenceDiagram::new([Interval::essential(0, 0.0)]));
    }

    #[test]
    fn periodic_internal_engine() {
        let dgm = InternalEngine::new(Construction::V)
            .periodic(true)
            .diagram(&GrayscaleImage::filled(vec![2, 2], 1.0).unwrap())
            .unwrap();
        // torus: one component, two loops, one void
        assert_eq!(
            (dgm.essential_count(0), dgm.essential_count(1), dgm.essential_count(2)),
            (1, 2, 1)
        );
    }

    #[test]
    fn registry_creates_by_name() {
        let registry = EngineRegistry::default();
        assert_eq!(registry.names(), vec!["internal", "external"]);
        let engine = registry
            .create("internal", &EngineConfig::new(Construction::T))
            .unwrap();
        assert_eq!(engine.construction(), Construction::T);
        assert!(matches!(
            registry.create("external", &EngineConfig::new(Construction::V)),
            Err(EngineError::Config(_))
        ));
        assert!(matches!(
            registry.create("magic", &EngineConfig::new(Construction::V)),
            Err(EngineError::Unknown(_))
        ));
    }

    #[cfg(unix)]
    #[test]
    fn external_engine_reads_stdout() {
        let engine = ExternalEngine::new(
            Construction::V,
            "sh",
            vec![
                "-c".into(),
                "test -s \"$0\" && printf 'dim,birth,death\\n0,0,inf\\n'".into(),
            ],
        );
        let dgm = engine.diagram(&checkerboard()).unwrap();
        assert_eq!(dgm, PersistenceDiagram::new([Interval::essential(0, 0.0)]));
    }

    #[cfg(unix)]
    #[test]
    fn external_engine_failures() {
        let garbage = ExternalEngine::new(Construction::V, "sh", vec!["-c".into(), "echo nonsense".into()]);
        assert!(matches!(garbage.diagram(&checkerboard()), Err(EngineError::Output(_))));
        let failing = ExternalEngine::new(Construction::V, "sh", vec!["-c".into(), "exit 7".into()]);
        assert!(matches!(
            failing.diagram(&checkerboard()),
            Err(EngineError::Exit { .. })
        ));
        let missing = ExternalEngine::new(Construction::V, "/nonexistent/engine", vec![]);
        assert!(matches!(
            missing.diagram(&checkerboard()),
            Err(EngineError::Spawn { .. })
        ));
    }
}
