//! Diagram of one construction from software for the other.
//!
//! Pad the image with a shell at `N > max`, negate it, and hand it to the
//! engine for the opposite construction. Every interval of that diagram not
//! born at `-N` maps to `(d - k - 1, -q, -p)`; the one essential class
//! `(0, min, inf)` is added back by hand. This is exact for any valid `N`.

use thiserror::Error;

use crate::cubical::Construction;
use crate::engine::{DiagramEngine, EngineError};
use crate::image::{GrayscaleImage, ImageError};
use crate::persistence::{Death, Interval, PersistenceDiagram};

#[derive(Debug, Error)]
pub enum TransformError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("expected an engine for the {expected} construction, got {found}")]
    WrongConstruction {
        expected: Construction,
        found: Construction,
    },
    #[error("integrity check failed: {0}")]
    Integrity(String),
    #[error("invalid shell value: {0}")]
    InvalidN(#[from] ImageError),
}

/// `max + max(1, max - min)`: a shell value strictly above every voxel.
pub fn choose_n(img: &GrayscaleImage) -> f64 {
    let (min, max) = (img.min_value(), img.max_value());
    max + (max - min).max(1.0)
}

/// T-construction diagram computed with a V-construction engine.
pub fn t_from_v(img: &GrayscaleImage, vcon: &dyn DiagramEngine) -> Result<PersistenceDiagram, TransformError> {
    t_from_v_with_n(img, vcon, choose_n(img))
}

pub fn t_from_v_with_n(
    img: &GrayscaleImage,
    vcon: &dyn DiagramEngine,
    n: f64,
) -> Result<PersistenceDiagram, TransformError> {
    expect_construction(vcon, Construction::V)?;
    transform_with_n(img, vcon, n)
}

/// V-construction diagram computed with a T-construction engine. The loop
/// runs over the diagram the engine returns, that is the T side.
pub fn v_from_t(img: &GrayscaleImage, tcon: &dyn DiagramEngine) -> Result<PersistenceDiagram, TransformError> {
    v_from_t_with_n(img, tcon, choose_n(img))
}

pub fn v_from_t_with_n(
    img: &GrayscaleImage,
    tcon: &dyn DiagramEngine,
    n: f64,
) -> Result<PersistenceDiagram, TransformError> {
    expect_construction(tcon, Construction::T)?;
    transform_with_n(img, tcon, n)
}

/// The diagram of the construction opposite to `engine`'s.
pub fn transform(img: &GrayscaleImage, engine: &dyn DiagramEngine) -> Result<PersistenceDiagram, TransformError> {
    transform_with_n(img, engine, choose_n(img))
}

pub fn transform_with_n(
    img: &GrayscaleImage,
    engine: &dyn DiagramEngine,
    n: f64,
) -> Result<PersistenceDiagram, TransformError> {
    let intermediate = intermediate_diagram(img, engine, n)?;
    skip_form(&intermediate, img.ndim(), img.min_value(), n)
}

/// The engine's diagram of the negated padded image.
pub fn intermediate_diagram(
    img: &GrayscaleImage,
    engine: &dyn DiagramEngine,
    n: f64,
) -> Result<PersistenceDiagram, TransformError> {
    let input = img.pad(n)?.negate();
    Ok(engine.diagram(&input)?)
}

fn expect_construction(engine: &dyn DiagramEngine, expected: Construction) -> Result<(), TransformError> {
    match engine.construction() {
        found if found == expected => Ok(()),
        found => Err(TransformError::WrongConstruction { expected, found }),
    }
}

/// Maps every interval not born at `-n` and adds `(0, min, inf)`.
///
/// The skipped intervals must be exactly `(0, -n, inf)` and
/// `(d - 1, -n, -min)`, and no other essential class may remain; anything
/// else means the intermediate diagram did not come from the padded image.
pub fn skip_form(
    intermediate: &PersistenceDiagram,
    d: usize,
    min_img: f64,
    n: f64,
) -> Result<PersistenceDiagram, TransformError> {
    if d == 0 {
        return Err(TransformError::Integrity("zero-dimensional image".into()));
    }
    let mut out = PersistenceDiagram::new([Interval::essential(0, min_img)]);
    let mut skipped = Vec::new();
    for iv in intermediate.iter() {
        if iv.birth == -n {
            skipped.push(*iv);
            continue;
        }
        match iv.death {
            Death::Finite(q) if iv.dim < d => out.insert(Interval::finite(d - iv.dim - 1, -q, -iv.birth)),
            Death::Finite(_) => {
                return Err(TransformError::Integrity(format!("interval {iv:?} has degree >= {d}")));
            }
            Death::Infinite => {
                return Err(TransformError::Integrity(format!(
                    "essential interval {iv:?} is not born at the shell value {}",
                    -n
                )));
            }
        }
    }
    let expected = PersistenceDiagram::new([Interval::essential(0, -n), Interval::finite(d - 1, -n, -min_img)]);
    let skipped = PersistenceDiagram::new(skipped);
    if skipped != expected {
        return Err(TransformError::Integrity(format!(
            "intervals born at the shell value are {:?}, expected {:?}",
            skipped.intervals(),
            expected.intervals()
        )));
    }
    Ok(out)
}

/// Maps all finite intervals, removes one `(0, min, n)` and adds
/// `(0, min, inf)`. Essential intervals of the input are ignored.
pub fn transform_diagram_theorem_form(
    dgm: &PersistenceDiagram,
    d: usize,
    min_img: f64,
    n: f64,
) -> Result<PersistenceDiagram, TransformError> {
    let mut out = PersistenceDiagram::default();
    for iv in dgm.finite() {
        let Death::Finite(q) = iv.death else { unreachable!() };
        let k = (d - iv.dim)
            .checked_sub(1)
            .filter(|_| iv.dim < d)
            .ok_or_else(|| TransformError::Integrity(format!("interval {iv:?} has degree >= {d}")))?;
        out.insert(Interval::finite(k, -q, -iv.birth));
    }
    let target = Interval::finite(0, min_img, n);
    if !out.remove_one(&target) {
        return Err(TransformError::Integrity(format!("mapped diagram lacks {target:?}")));
    }
    out.insert(Interval::essential(0, min_img));
    Ok(out)
}
