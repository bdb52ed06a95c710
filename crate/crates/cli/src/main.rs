//! `cubedual`: persistence diagrams of images under the V- and
//! T-constructions, and conversion between the two.
//!
//! Exit codes: 0 success, 1 verification failure, 2 parse or usage error,
//! 3 external engine failure, 4 transform integrity error.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use cubedual::cubical::Construction;
use cubedual::duality::{sphere_pair, torus_pair, DualityReport};
use cubedual::engine::{EngineConfig, EngineError, EngineRegistry};
use cubedual::image::{load_image_file, GrayscaleImage, ImageFormat};
use cubedual::persistence::{compute_diagram, PersistenceDiagram, ReducerRegistry, StandardReduction};
use cubedual::transform::{choose_n, transform_with_n, TransformError};
use cubedual::verify::{random_images, verify_images, VerifyOptions, VerifySummary};

#[derive(Parser)]
#[command(
    name = "cubedual",
    version,
    about = "Persistence diagrams of grayscale images under the V- and T-constructions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum InputFormat {
    Ndtext,
    Pgm,
}

impl From<InputFormat> for ImageFormat {
    fn from(f: InputFormat) -> Self {
        match f {
            InputFormat::Ndtext => ImageFormat::NdText,
            InputFormat::Pgm => ImageFormat::Pgm,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Csv,
    Json,
}

#[derive(clap::Args)]
struct InputArgs {
    /// Image file (NDTEXT, or PGM for `.pgm` files)
    #[arg(long)]
    input: PathBuf,
    /// Overrides the format guessed from the file extension
    #[arg(long, value_enum)]
    format: Option<InputFormat>,
}

impl InputArgs {
    fn load(&self) -> Result<GrayscaleImage, CliError> {
        load_image_file(&self.input, self.format.map(Into::into))
            .map_err(|e| CliError::usage(format!("{}: {e}", self.input.display())))
    }
}

#[derive(clap::Args)]
struct OutputArgs {
    /// Write the diagram here instead of standard output
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    out_format: OutFormat,
}

impl OutputArgs {
    fn emit(&self, dgm: &PersistenceDiagram) -> Result<(), CliError> {
        let text = match self.out_format {
            OutFormat::Csv => dgm.to_csv(),
            OutFormat::Json => dgm.to_json() + "\n",
        };
        write_text(self.output.as_deref(), &text)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Compute the persistence diagram of one construction
    Compute {
        #[arg(long)]
        construction: Construction,
        #[command(flatten)]
        input: InputArgs,
        /// Identify opposite faces of the box (every side must be >= 2)
        #[arg(long)]
        periodic: bool,
        #[command(flatten)]
        output: OutputArgs,
        /// Reduction strategy: standard, twist or rank-oracle
        #[arg(long, default_value = "twist")]
        reduction: String,
    },
    /// Compute the diagram of the other construction using an engine for `--have`
    ///
    /// The engine sees the negated image padded with a shell above its maximum.
    /// The loop over intervals runs over the diagram that engine returns, for
    /// both directions.
    Transform {
        /// The construction the engine computes
        #[arg(long)]
        have: Construction,
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        output: OutputArgs,
        /// internal, or external (requires --engine-cmd)
        #[arg(long, default_value = "internal")]
        engine: String,
        /// Program and arguments; the NDTEXT image path is appended and the
        /// program must print `dim,birth,death` CSV on standard output
        #[arg(long)]
        engine_cmd: Option<String>,
        /// Shell value; defaults to max + max(1, max - min)
        #[arg(long)]
        shell: Option<f64>,
    },
    /// Run the self-verification suite on one image or on random images
    Verify {
        #[arg(long, conflicts_with = "random", required_unless_present = "random")]
        input: Option<PathBuf>,
        #[arg(long)]
        format: Option<InputFormat>,
        /// Shape of random images, e.g. 4x4 or 3x3x3
        #[arg(long)]
        random: Option<String>,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        min: i64,
        #[arg(long, default_value_t = 9)]
        max: i64,
        /// Worker threads (default: all cores)
        #[arg(long)]
        threads: Option<usize>,
        /// Also write the first counterexample to this file
        #[arg(long)]
        counterexample: Option<PathBuf>,
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
    /// Check the dual-complex pairing correspondence on an image; prints JSON
    VerifyDuality {
        #[command(flatten)]
        input: InputArgs,
    },
}

#[derive(Debug)]
struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<TransformError> for CliError {
    fn from(e: TransformError) -> Self {
        let code = match &e {
            TransformError::Engine(EngineError::Spawn { .. } | EngineError::Exit { .. } | EngineError::Output(_)) => 3,
            TransformError::Integrity(_) => 4,
            _ => 2,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

fn write_text(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::usage(format!("{}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| CliError::usage(e.to_string()))
        }
    }
}

fn parse_shape(text: &str) -> Result<Vec<usize>, CliError> {
    let dims: Vec<usize> = text
        .split(['x', 'X'])
        .map(|s| s.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::usage(format!("invalid shape '{text}' (expected e.g. 4x4)")))?;
    if dims.contains(&0) {
        return Err(CliError::usage(format!(
            "invalid shape '{text}': sides must be positive"
        )));
    }
    Ok(dims)
}

fn run(cli: Cli) -> Result<u8, CliError> {
    match cli.command {
        Command::Compute {
            construction,
            input,
            periodic,
            output,
            reduction,
        } => {
            let img = input.load()?;
            let registry = ReducerRegistry::default();
            let reducer = registry.get(&reduction).ok_or_else(|| {
                CliError::usage(format!(
                    "unknown reduction '{reduction}' (known: {})",
                    registry.names().join(", ")
                ))
            })?;
            let cx = construction
                .build(&img, periodic)
                .map_err(|e| CliError::usage(e.to_string()))?;
            let dgm = compute_diagram(&cx, reducer).map_err(|e| CliError::usage(e.to_string()))?;
            output.emit(&dgm)?;
            Ok(0)
        }
        Command::Transform {
            have,
            input,
            output,
            engine,
            engine_cmd,
            shell,
        } => {
            let img = input.load()?;
            let mut config = EngineConfig::new(have);
            config.command = engine_cmd;
            let engine = EngineRegistry::default()
                .create(&engine, &config)
                .map_err(|e| CliError::usage(e.to_string()))?;
            let n = shell.unwrap_or_else(|| choose_n(&img));
            let dgm = transform_with_n(&img, engine.as_ref(), n)?;
            output.emit(&dgm)?;
            Ok(0)
        }
        Command::Verify {
            input,
            format,
            random,
            trials,
            seed,
            min,
            max,
            threads,
            counterexample,
            inject_fault,
        } => {
            if let Some(threads) = threads {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build_global()
                    .map_err(|e| CliError::usage(e.to_string()))?;
            }
            let images = match (input, random) {
                (Some(path), _) => vec![InputArgs { input: path, format }.load()?],
                (None, Some(shape)) => {
                    if min > max {
                        return Err(CliError::usage("--min must not exceed --max"));
                    }
                    random_images(seed, &parse_shape(&shape)?, trials, min, max)
                }
                (None, None) => return Err(CliError::usage("pass --input or --random")),
            };
            let options = VerifyOptions {
                inject_fault,
                ..VerifyOptions::default()
            };
            let summary = verify_images(&images, &options);
            print_summary(&summary, counterexample.as_deref())
        }
        Command::VerifyDuality { input } => {
            let img = input.load()?;
            let reports = duality_reports(&img).map_err(|e| CliError::usage(e.to_string()))?;
            let pass = reports.iter().all(|r| r.pass);
            let json = serde_json::json!({ "pass": pass, "reports": reports });
            let text = serde_json::to_string_pretty(&json).map_err(|e| CliError::usage(e.to_string()))?;
            write_text(None, &(text + "\n"))?;
            Ok(if pass { 0 } else { 1 })
        }
    }
}

fn duality_reports(img: &GrayscaleImage) -> Result<Vec<DualityReport>, cubedual::duality::DualityError> {
    let mut reports = Vec::new();
    if img.dims().iter().all(|&n| n >= 2) {
        for c in [Construction::V, Construction::T] {
            reports.push(torus_pair(img, c)?.check(&StandardReduction)?);
        }
    }
    for c in [Construction::T, Construction::V] {
        reports.push(sphere_pair(img, c, choose_n(img))?.check(&StandardReduction)?);
    }
    Ok(reports)
}

fn print_summary(summary: &VerifySummary, counterexample: Option<&Path>) -> Result<u8, CliError> {
    let mut text = String::new();
    for t in &summary.tallies {
        let verdict = if t.failed == 0 { "PASS" } else { "FAIL" };
        text += &format!(
            "{verdict} {:<20} passed={} failed={} skipped={}\n",
            t.name, t.passed, t.failed, t.skipped
        );
    }
    let code = match &summary.first_failure {
        None => {
            text += &format!("all checks passed on {} image(s)\n", summary.trials);
            0
        }
        Some(failure) => {
            text += &format!(
                "first failure: {} on trial {}: {}\n",
                failure.check, failure.trial, failure.detail
            );
            let ndtext = failure.image.to_ndtext();
            text += &format!(
                "# counterexample (trial {}, check {})\n{ndtext}",
                failure.trial, failure.check
            );
            if let Some(path) = counterexample {
                fs::write(path, &ndtext).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
            }
            1
        }
    };
    write_text(None, &text)?;
    Ok(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("cubedual: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
