//! Dual filtered complexes and the correspondence of their persistence.
//!
//! Given a closed `d`-manifold complex `X` and a complex `Y` whose cell
//! `phi(i)` is the dual of cell `i` of `X`, the pairing of `X` under a
//! compatible order and the pairing of `Y` under the reversed order are
//! related by `(i, j) <-> (n - j, n - i)`, with essential positions mapped
//! the same way. Values are never compared for pairs, because ties make that
//! ambiguous; the diagram-level statement is checked separately.

use std::collections::{BTreeSet, HashMap};

use serde::Serialize;
use thiserror::Error;

use crate::complex::{ComplexError, FilteredComplex, Label};
use crate::cubical::{Construction, CubeKey, CubicalError};
use crate::image::{GrayscaleImage, ImageError};
use crate::persistence::{
    diagram, sort_cells, BoundaryMatrix, Death, Interval, Ordering, PersistenceDiagram, PersistenceError, Reducer,
    StandardReduction,
};

#[derive(Debug, Error)]
pub enum DualityError {
    #[error(transparent)]
    Complex(#[from] ComplexError),
    #[error(transparent)]
    Persistence(#[from] PersistenceError),
    #[error(transparent)]
    Cubical(#[from] CubicalError),
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error("no dual cell for cell {cell} ({label})")]
    Unmatched { cell: usize, label: String },
    #[error("interval {interval} has degree outside [0, {dim}] after dualizing")]
    Degree { interval: String, dim: usize },
}

/// One disagreement found by a duality check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Mismatch {
    pub kind: String,
    /// Positions in the primal order (for `dual-*` kinds, in the dual order).
    pub positions: Vec<usize>,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DualityReport {
    pub check: String,
    pub pass: bool,
    pub dim: usize,
    pub cells: usize,
    pub pairs: usize,
    pub essential: usize,
    /// The dual boundary matrix under the reversed order equals the
    /// anti-transpose of the primal one.
    pub anti_transpose: bool,
    /// The dual diagram equals the mapped primal diagram.
    pub diagram: bool,
    pub mismatches: Vec<Mismatch>,
}

/// A primal complex, its dual, and `correspondence[i]` = index of the dual
/// of primal cell `i`.
#[derive(Clone, Debug)]
pub struct DualPair {
    pub name: String,
    pub dim: usize,
    pub primal: FilteredComplex,
    pub dual: FilteredComplex,
    pub correspondence: Vec<usize>,
}

impl DualPair {
    pub fn check(&self, reducer: &dyn Reducer) -> Result<DualityReport, DualityError> {
        check_dual_complexes(
            &self.name,
            &self.primal,
            &self.dual,
            &self.correspondence,
            self.dim,
            reducer,
        )
    }
}

/// Dualizes `cx` and checks the pairing correspondence against it.
pub fn check_dual_pairing(cx: &FilteredComplex, d: usize) -> Result<DualityReport, DualityError> {
    let dual = cx.dualize(d)?;
    let identity: Vec<usize> = (0..cx.len()).collect();
    check_dual_complexes("dualize", cx, &dual, &identity, d, &StandardReduction)
}

/// Checks that `dual` really is dual to `primal` under `correspondence`
/// (reversed dimensions and faces, negated values), then compares the
/// pairings, the boundary matrices and the diagrams.
pub fn check_dual_complexes(
    name: &str,
    primal: &FilteredComplex,
    dual: &FilteredComplex,
    correspondence: &[usize],
    d: usize,
    reducer: &dyn Reducer,
) -> Result<DualityReport, DualityError> {
    let mut report = DualityReport {
        check: name.to_string(),
        pass: false,
        dim: d,
        cells: primal.len(),
        pairs: 0,
        essential: 0,
        anti_transpose: false,
        diagram: false,
        mismatches: structural_mismatches(primal, dual, correspondence, d),
    };
    if !report.mismatches.is_empty() {
        return Ok(report);
    }

    let ord = sort_cells(primal)?;
    let reversed: Vec<usize> = ord.perm().iter().rev().map(|&c| correspondence[c]).collect();
    let dual_ord = Ordering::from_permutation(dual, reversed)?;
    let matrix = BoundaryMatrix::from_complex(primal, &ord);
    let dual_matrix = BoundaryMatrix::from_complex(dual, &dual_ord);
    report.anti_transpose = dual_matrix.same_entries(&matrix.anti_transpose());

    let pairing = reducer.reduce(&matrix)?;
    let dual_pairing = reducer.reduce(&dual_matrix)?;
    report.pairs = pairing.pairs.len();
    report.essential = pairing.essential.len();

    let last = primal.len().saturating_sub(1);
    let expected: BTreeSet<(usize, usize)> = pairing.pairs.iter().map(|&(i, j)| (last - j, last - i)).collect();
    let found: BTreeSet<(usize, usize)> = dual_pairing.pairs.iter().copied().collect();
    for &(i, j) in expected.difference(&found) {
        report.mismatches.push(Mismatch {
            kind: "pair-missing-in-dual".into(),
            positions: vec![last - j, last - i],
            values: vec![ord.values()[last - j], ord.values()[last - i]],
        });
    }
    for &(i, j) in found.difference(&expected) {
        report.mismatches.push(Mismatch {
            kind: "dual-pair-unexpected".into(),
            positions: vec![i, j],
            values: vec![dual_ord.values()[i], dual_ord.values()[j]],
        });
    }
    let expected: BTreeSet<usize> = pairing.essential.iter().map(|&i| last - i).collect();
    let found: BTreeSet<usize> = dual_pairing.essential.iter().copied().collect();
    for &i in expected.difference(&found) {
        report.mismatches.push(Mismatch {
            kind: "essential-missing-in-dual".into(),
            positions: vec![last - i],
            values: vec![ord.values()[last - i]],
        });
    }
    for &i in found.difference(&expected) {
        report.mismatches.push(Mismatch {
            kind: "dual-essential-unexpected".into(),
            positions: vec![i],
            values: vec![dual_ord.values()[i]],
        });
    }

    // The dual diagram under its own compatible order, not the reversed one.
    let own = sort_cells(dual)?;
    let dual_dgm = diagram(&reducer.reduce(&BoundaryMatrix::from_complex(dual, &own))?, &own, dual);
    report.diagram = map_diagram_dual(&diagram(&pairing, &ord, primal), d)? == dual_dgm;

    report.pass = report.mismatches.is_empty() && report.anti_transpose && report.diagram;
    Ok(report)
}

fn structural_mismatches(
    primal: &FilteredComplex,
    dual: &FilteredComplex,
    correspondence: &[usize],
    d: usize,
) -> Vec<Mismatch> {
    let mut out = Vec::new();
    let image: BTreeSet<usize> = correspondence.iter().copied().collect();
    if primal.len() != dual.len()
        || correspondence.len() != primal.len()
        || image.len() != primal.len()
        || image.iter().any(|&i| i >= dual.len())
    {
        out.push(Mismatch {
            kind: "not-a-bijection".into(),
            positions: vec![primal.len(), dual.len(), correspondence.len()],
            values: Vec::new(),
        });
        return out;
    }
    let cofaces = primal.cofaces();
    for (i, c) in primal.cells().iter().enumerate() {
        let dc = dual.cell(correspondence[i]);
        if c.dim > d || dc.dim != d - c.dim {
            out.push(Mismatch {
                kind: "dimension".into(),
                positions: vec![i],
                values: vec![c.dim as f64, dc.dim as f64],
            });
        }
        if dc.value != -c.value {
            out.push(Mismatch {
                kind: "value".into(),
                positions: vec![i],
                values: vec![c.value, dc.value],
            });
        }
        let mut want: Vec<usize> = cofaces[i].iter().map(|&k| correspondence[k]).collect();
        let mut have = dc.facets.clone();
        want.sort_unstable();
        have.sort_unstable();
        if want != have {
            out.push(Mismatch {
                kind: "faces".into(),
                positions: vec![i],
                values: vec![c.value, dc.value],
            });
        }
    }
    out
}

/// Finite `(k, p, q)` becomes `(d - k - 1, -q, -p)`; essential `(k, b)`
/// becomes `(d - k, -b)`. Applying it twice with the same `d` is the identity.
pub fn map_diagram_dual(dgm: &PersistenceDiagram, d: usize) -> Result<PersistenceDiagram, DualityError> {
    dgm.iter()
        .map(|iv| {
            let err = || DualityError::Degree {
                interval: format!("{iv:?}"),
                dim: d,
            };
            if iv.dim > d {
                return Err(err());
            }
            match iv.death {
                Death::Finite(q) => {
                    let k = (d - iv.dim).checked_sub(1).ok_or_else(err)?;
                    Ok(Interval::finite(k, -q, -iv.birth))
                }
                Death::Infinite => Ok(Interval::essential(d - iv.dim, -iv.birth)),
            }
        })
        .collect()
}

/// Pairs every primal cell with the dual cell whose label is `key_map` of
/// its label.
pub fn correspondence_by_label(
    primal: &FilteredComplex,
    dual: &FilteredComplex,
    key_map: impl Fn(&Label) -> Option<Label>,
) -> Result<Vec<usize>, DualityError> {
    let index: HashMap<&Label, usize> = dual
        .cells()
        .iter()
        .enumerate()
        .filter_map(|(i, c)| c.label.as_ref().map(|l| (l, i)))
        .collect();
    primal
        .cells()
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let unmatched = || DualityError::Unmatched {
                cell: i,
                label: c.label.as_ref().map(|l| l.to_string()).unwrap_or_else(|| "-".into()),
            };
            let target = c.label.as_ref().and_then(&key_map).ok_or_else(unmatched)?;
            index.get(&target).copied().ok_or_else(unmatched)
        })
        .collect()
}

/// Shift every doubled coordinate by one step, up or down, optionally
/// wrapping around per-axis extents. Flips the parity of every axis.
fn step_key(key: &CubeKey, up: bool, modulus: Option<&[usize]>) -> CubeKey {
    let coords = key
        .coords()
        .iter()
        .enumerate()
        .map(|(axis, &c)| match (up, modulus) {
            (true, Some(m)) => (c + 1) % m[axis],
            (true, None) => c + 1,
            (false, Some(m)) => (c + m[axis] - 1) % m[axis],
            (false, None) => c.wrapping_sub(1),
        })
        .collect();
    CubeKey::new(coords)
}

/// The periodic complex of `img` under `primal` and the periodic complex of
/// the negated image under the other construction.
pub fn torus_pair(img: &GrayscaleImage, primal: Construction) -> Result<DualPair, DualityError> {
    let x = primal.build(img, true)?;
    let y = primal.other().build(&img.negate(), true)?;
    let extents: Vec<usize> = img.dims().iter().map(|n| 2 * n).collect();
    // V vertex 2a and T top cube 2a+1 both stand for voxel a.
    let up = primal == Construction::V;
    let correspondence = correspondence_by_label(&x, &y, |label| {
        label.cube().map(|k| Label::Cube(step_key(k, up, Some(&extents))))
    })?;
    Ok(DualPair {
        name: format!("torus-{primal}"),
        dim: img.ndim(),
        primal: x,
        dual: y,
        correspondence,
    })
}

/// Caps the primal box with a top cell at `shell` and collapses the boundary
/// of the opposite construction on the negated padded image.
///
/// With `primal = T` the primal is `T(img)`; with `primal = V` it is the V
/// complex of the padded image, so that both sides live on matching grids.
pub fn sphere_pair(img: &GrayscaleImage, primal: Construction, shell: f64) -> Result<DualPair, DualityError> {
    let padded = img.pad(shell)?;
    let x = match primal {
        Construction::T => crate::cubical::build_t_complex(img, false)?,
        Construction::V => crate::cubical::build_v_complex(&padded, false)?,
    }
    .attach_top_cell(shell)?;
    let y = primal
        .other()
        .build(&padded.negate(), false)?
        .quotient_boundary(-shell)?;
    let correspondence = correspondence_by_label(&x, &y, |label| match label {
        Label::Cube(k) => Some(Label::Cube(step_key(k, true, None))),
        Label::Kappa => Some(Label::BoundaryClass),
        Label::BoundaryClass => Some(Label::Kappa),
        Label::Dual(_) => None,
    })?;
    Ok(DualPair {
        name: format!("sphere-{primal}"),
        dim: img.ndim(),
        primal: x,
        dual: y,
        correspondence,
    })
}
