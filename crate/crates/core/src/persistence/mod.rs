//! Compatible orderings, total boundary matrices, pairings and diagrams.

mod diagram;
pub mod rank;
pub mod reduce;

use std::cmp::Ordering as CmpOrdering;

use thiserror::Error;

use crate::complex::{FilteredComplex, Label};

pub use diagram::{diagrams_equal, Death, DiagramParseError, Interval, PersistenceDiagram};
pub use rank::{rank_pairing_oracle, rank_pairing_oracle_with_limit, RankTable, DEFAULT_ORACLE_LIMIT};
pub use reduce::{reduce, Reducer, ReducerRegistry, StandardReduction, TwistReduction};

#[derive(Debug, Error, PartialEq)]
pub enum PersistenceError {
    #[error("ordering is not compatible with the filtration: {0}")]
    Incompatible(String),
    #[error("matrix of size {size} exceeds the oracle limit of {limit}")]
    OracleLimit { size: usize, limit: usize },
    #[error("matrix is not strictly upper triangular: entry ({row}, {col})")]
    NotUpperTriangular { row: usize, col: usize },
}

/// Secondary key among cells with equal value and dimension.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum TieBreak {
    #[default]
    LabelAscending,
    LabelDescending,
    CreationOrder,
}

/// Cube labels first, then symbolic labels, then unlabelled cells.
fn label_cmp(a: &Option<Label>, b: &Option<Label>) -> CmpOrdering {
    match (a, b) {
        (Some(x), Some(y)) => x.cmp(y),
        (Some(_), None) => CmpOrdering::Less,
        (None, Some(_)) => CmpOrdering::Greater,
        (None, None) => CmpOrdering::Equal,
    }
}

/// A linear order of the cells: `perm[p]` is the cell at position `p`.
#[derive(Clone, Debug, PartialEq)]
pub struct Ordering {
    perm: Vec<usize>,
    positions: Vec<usize>,
    values: Vec<f64>,
}

impl Ordering {
    /// Wraps `perm` after checking that it is a permutation that puts faces
    /// first and never decreases in value.
    pub fn from_permutation(cx: &FilteredComplex, perm: Vec<usize>) -> Result<Ordering, PersistenceError> {
        let n = cx.len();
        if perm.len() != n {
            return Err(PersistenceError::Incompatible(format!(
                "permutation has {} entries for {n} cells",
                perm.len()
            )));
        }
        let mut positions = vec![usize::MAX; n];
        for (p, &cell) in perm.iter().enumerate() {
            if cell >= n || positions[cell] != usize::MAX {
                return Err(PersistenceError::Incompatible(format!(
                    "not a permutation at position {p}"
                )));
            }
            positions[cell] = p;
        }
        let values: Vec<f64> = perm.iter().map(|&c| cx.cell(c).value).collect();
        if let Some(p) = values.windows(2).position(|w| w[0] > w[1]) {
            return Err(PersistenceError::Incompatible(format!(
                "value decreases between positions {p} and {}",
                p + 1
            )));
        }
        for (cell, c) in cx.cells().iter().enumerate() {
            if let Some(&f) = c.facets.iter().find(|&&f| positions[f] >= positions[cell]) {
                return Err(PersistenceError::Incompatible(format!(
                    "facet {f} of cell {cell} does not precede it"
                )));
            }
        }
        Ok(Ordering {
            perm,
            positions,
            values,
        })
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    pub fn cell_at(&self, position: usize) -> usize {
        self.perm[position]
    }

    pub fn position_of(&self, cell: usize) -> usize {
        self.positions[cell]
    }

    /// The reversed order, read as an order on `dual`, whose cell `i` is the
    /// dual of cell `i` here.
    pub fn reversed(&self, dual: &FilteredComplex) -> Result<Ordering, PersistenceError> {
        Ordering::from_permutation(dual, self.perm.iter().rev().copied().collect())
    }
}

/// Stable sort by `(value, dim, label)`; creation order breaks remaining ties.
pub fn sort_cells(cx: &FilteredComplex) -> Result<Ordering, PersistenceError> {
    sort_cells_with(cx, TieBreak::default())
}

pub fn sort_cells_with(cx: &FilteredComplex, tie_break: TieBreak) -> Result<Ordering, PersistenceError> {
    let cells = cx.cells();
    let mut perm: Vec<usize> = (0..cells.len()).collect();
    perm.sort_by(|&a, &b| {
        let (ca, cb) = (&cells[a], &cells[b]);
        ca.value
            .total_cmp(&cb.value)
            .then(ca.dim.cmp(&cb.dim))
            .then_with(|| match tie_break {
                TieBreak::LabelAscending => label_cmp(&ca.label, &cb.label),
                TieBreak::LabelDescending => label_cmp(&cb.label, &ca.label),
                TieBreak::CreationOrder => CmpOrdering::Equal,
            })
    });
    Ordering::from_permutation(cx, perm)
}

/// Column-sparse Z/2 matrix; column `j` lists its nonzero rows in ascending order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundaryMatrix {
    columns: Vec<Vec<usize>>,
    /// Cell dimension per column, when the matrix came from a complex.
    dims: Option<Vec<usize>>,
}

impl BoundaryMatrix {
    /// `D[i][j] = 1` iff the cell at position `i` is a facet of the cell at position `j`.
    pub fn from_complex(cx: &FilteredComplex, ord: &Ordering) -> BoundaryMatrix {
        let mut columns = Vec::with_capacity(ord.len());
        let mut dims = Vec::with_capacity(ord.len());
        for &cell in ord.perm() {
            let c = cx.cell(cell);
            let mut rows: Vec<usize> = c.facets.iter().map(|&f| ord.position_of(f)).collect();
            rows.sort_unstable();
            columns.push(rows);
            dims.push(c.dim);
        }
        BoundaryMatrix {
            columns,
            dims: Some(dims),
        }
    }

    /// Square matrix from explicit columns; repeated rows cancel mod 2.
    pub fn from_columns(columns: Vec<Vec<usize>>) -> BoundaryMatrix {
        let n = columns.len();
        let columns = columns
            .into_iter()
            .map(|mut col| {
                let col = crate::complex::odd_multiplicity(&mut col);
                assert!(col.iter().all(|&r| r < n), "row index out of range");
                col
            })
            .collect();
        BoundaryMatrix { columns, dims: None }
    }

    pub fn size(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, j: usize) -> &[usize] {
        &self.columns[j]
    }

    pub fn columns(&self) -> &[Vec<usize>] {
        &self.columns
    }

    pub fn dims(&self) -> Option<&[usize]> {
        self.dims.as_deref()
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.columns[col].binary_search(&row).is_ok()
    }

    pub fn nnz(&self) -> usize {
        self.columns.iter().map(Vec::len).sum()
    }

    pub fn check_strictly_upper_triangular(&self) -> Result<(), PersistenceError> {
        for (col, rows) in self.columns.iter().enumerate() {
            if let Some(&row) = rows.iter().find(|&&r| r >= col) {
                return Err(PersistenceError::NotUpperTriangular { row, col });
            }
        }
        Ok(())
    }

    /// Reflection across the minor diagonal: `A[i][j] = D[n - j][n - i]`
    /// where `n` is the last index.
    pub fn anti_transpose(&self) -> BoundaryMatrix {
        let size = self.size();
        let mut columns = vec![Vec::new(); size];
        for (col, rows) in self.columns.iter().enumerate() {
            for &row in rows {
                columns[size - 1 - row].push(size - 1 - col);
            }
        }
        for col in &mut columns {
            col.sort_unstable();
        }
        BoundaryMatrix { columns, dims: None }
    }

    /// Whether both matrices have the same nonzero entries, ignoring dimension metadata.
    pub fn same_entries(&self, other: &BoundaryMatrix) -> bool {
        self.columns == other.columns
    }

    pub fn to_dense(&self) -> Vec<Vec<bool>> {
        let n = self.size();
        let mut dense = vec![vec![false; n]; n];
        for (col, rows) in self.columns.iter().enumerate() {
            for &row in rows {
                dense[row][col] = true;
            }
        }
        dense
    }

    /// Deliberately corrupts the matrix by dropping the lowest entry of its
    /// first nonzero column, so every correct reduction changes its pairing.
    /// Used to exercise the failure path of verification runs.
    #[doc(hidden)]
    pub fn inject_fault(&mut self) {
        if let Some(col) = self.columns.iter_mut().find(|c| !c.is_empty()) {
            col.pop();
        }
    }
}

/// Birth/death position pairs and essential positions of an ordering.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PersistencePairing {
    pub pairs: Vec<(usize, usize)>,
    pub essential: Vec<usize>,
}

impl PersistencePairing {
    pub fn new(mut pairs: Vec<(usize, usize)>, mut essential: Vec<usize>) -> Self {
        pairs.sort_unstable();
        essential.sort_unstable();
        PersistencePairing { pairs, essential }
    }

    /// Every position in `0..size` is used exactly once, and pairs go forward.
    pub fn is_partition_of(&self, size: usize) -> bool {
        let mut seen = vec![false; size];
        let mut mark = |i: usize| i < size && !std::mem::replace(&mut seen[i], true);
        let ok =
            self.pairs.iter().all(|&(b, d)| b < d && mark(b) && mark(d)) && self.essential.iter().all(|&e| mark(e));
        ok && seen.into_iter().all(|s| s)
    }
}

/// Reads the diagram off a pairing: one interval per pair and per essential
/// position, empty intervals dropped.
pub fn diagram(pairing: &PersistencePairing, ord: &Ordering, cx: &FilteredComplex) -> PersistenceDiagram {
    let finite = pairing.pairs.iter().map(|&(b, d)| {
        let birth = cx.cell(ord.cell_at(b));
        Interval::finite(birth.dim, birth.value, ord.values()[d])
    });
    let essential = pairing.essential.iter().map(|&e| {
        let birth = cx.cell(ord.cell_at(e));
        Interval::essential(birth.dim, birth.value)
    });
    PersistenceDiagram::new(finite.chain(essential))
}

/// Sort, assemble and reduce in one go.
pub fn compute_diagram(cx: &FilteredComplex, reducer: &dyn Reducer) -> Result<PersistenceDiagram, PersistenceError> {
    let ord = sort_cells(cx)?;
    let matrix = BoundaryMatrix::from_complex(cx, &ord);
    let pairing = reducer.reduce(&matrix)?;
    Ok(diagram(&pairing, &ord, cx))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::Cell;
    use crate::cubical::{build_t_complex, build_v_complex, CubeKey};
    use crate::image::GrayscaleImage;

    fn checkerboard() -> GrayscaleImage {
        GrayscaleImage::new(vec![2, 2], vec![0.0, 1.0, 1.0, 0.0]).unwrap()
    }

    fn path() -> FilteredComplex {
        FilteredComplex::new(vec![
            Cell::new(0, vec![], 0.0),
            Cell::new(0, vec![], 0.0),
            Cell::new(1, vec![0, 1], 0.0),
        ])
    }

    fn labels(cx: &FilteredComplex, ord: &Ordering) -> Vec<String> {
        ord.perm()
            .iter()
            .map(|&c| cx.cell(c).label.as_ref().unwrap().to_string())
            .collect()
    }

    #[test]
    fn sort_checkerboard() {
        let v = build_v_complex(&checkerboard(), false).unwrap();
        let ord = sort_cells(&v).unwrap();
        assert_eq!(
            labels(&v, &ord),
            ["(0,0)", "(2,2)", "(0,2)", "(2,0)", "(0,1)", "(1,0)", "(1,2)", "(2,1)", "(1,1)"]
        );
        assert_eq!(ord.values(), &[0.0, 0.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn sort_constant_complex() {
        let v = build_v_complex(&GrayscaleImage::filled(vec![2, 2], 3.0).unwrap(), false).unwrap();
        let ord = sort_cells(&v).unwrap();
        let dims: Vec<usize> = ord.perm().iter().map(|&c| v.cell(c).dim).collect();
        assert_eq!(dims, [0, 0, 0, 0, 1, 1, 1, 1, 2]);
        let keys: Vec<&CubeKey> = ord.perm()[..4]
            .iter()
            .map(|&c| v.cell(c).label.as_ref().unwrap().cube().unwrap())
            .collect();
        assert!(keys.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn from_permutation_rejects_bad_orders() {
        let cx = path();
        assert!(Ordering::from_permutation(&cx, vec![0, 1, 2]).is_ok());
        assert!(Ordering::from_permutation(&cx, vec![0, 2, 1]).is_err());
        assert!(Ordering::from_permutation(&cx, vec![0, 0, 2]).is_err());
        assert!(Ordering::from_permutation(&cx, vec![0, 1]).is_err());
        let uneven = FilteredComplex::new(vec![Cell::new(0, vec![], 1.0), Cell::new(0, vec![], 0.0)]);
        assert!(Ordering::from_permutation(&uneven, vec![0, 1]).is_err());
        // non-monotone complexes cannot be sorted compatibly
        let bad = FilteredComplex::new(vec![Cell::new(0, vec![], 2.0), Cell::new(1, vec![0], 1.0)]);
        assert!(matches!(sort_cells(&bad), Err(PersistenceError::Incompatible(_))));
    }

    #[test]
    fn boundary_matrix_examples() {
        let cx = path();
        let ord = sort_cells(&cx).unwrap();
        let d = BoundaryMatrix::from_complex(&cx, &ord);
        assert_eq!(d.columns(), &[vec![], vec![], vec![0, 1]]);

        let single = build_v_complex(&GrayscaleImage::new(vec![1, 1], vec![5.0]).unwrap(), false).unwrap();
        let d = BoundaryMatrix::from_complex(&single, &sort_cells(&single).unwrap());
        assert_eq!(d.size(), 1);
        assert_eq!(d.nnz(), 0);

        let t = build_t_complex(&checkerboard(), false).unwrap();
        let ord = sort_cells(&t).unwrap();
        let d = BoundaryMatrix::from_complex(&t, &ord);
        for (j, &cell) in ord.perm().iter().enumerate() {
            assert_eq!(d.column(j).len(), 2 * t.cell(cell).dim);
        }
        d.check_strictly_upper_triangular().unwrap();
    }

    #[test]
    fn anti_transpose_examples() {
        let d = BoundaryMatrix::from_columns(vec![vec![], vec![0]]);
        assert_eq!(d.anti_transpose().columns(), d.columns());

        let d = BoundaryMatrix::from_columns(vec![vec![], vec![0], vec![]]);
        assert_eq!(d.anti_transpose().columns(), &[vec![], vec![], vec![1]]);
        assert!(d.anti_transpose().anti_transpose().same_entries(&d));
    }

    #[test]
    fn diagram_checkerboard() {
        let v = build_v_complex(&checkerboard(), false).unwrap();
        let dv = compute_diagram(&v, &StandardReduction).unwrap();
        assert_eq!(
            dv,
            PersistenceDiagram::new([Interval::essential(0, 0.0), Interval::finite(0, 0.0, 1.0)])
        );
        let t = build_t_complex(&checkerboard(), false).unwrap();
        let dt = compute_diagram(&t, &StandardReduction).unwrap();
        assert_eq!(dt, PersistenceDiagram::new([Interval::essential(0, 0.0)]));
    }

    #[test]
    fn diagram_constant_image() {
        let img = GrayscaleImage::filled(vec![3, 2, 2], 7.0).unwrap();
        for cx in [
            build_v_complex(&img, false).unwrap(),
            build_t_complex(&img, false).unwrap(),
        ] {
            let dgm = compute_diagram(&cx, &StandardReduction).unwrap();
            assert_eq!(dgm, PersistenceDiagram::new([Interval::essential(0, 7.0)]));
        }
    }

    #[test]
    fn pairing_partition_check() {
        let p = PersistencePairing::new(vec![(1, 2)], vec![0]);
        assert!(p.is_partition_of(3));
        assert!(!p.is_partition_of(4));
        assert!(!PersistencePairing::new(vec![(2, 1)], vec![0]).is_partition_of(3));
        assert!(!PersistencePairing::new(vec![(1, 2)], vec![1]).is_partition_of(3));
    }

    #[test]
    fn fault_injection_changes_first_column() {
        let cx = path();
        let mut d = BoundaryMatrix::from_complex(&cx, &sort_cells(&cx).unwrap());
        d.inject_fault();
        assert_eq!(d.column(2), &[0]);
    }
}
