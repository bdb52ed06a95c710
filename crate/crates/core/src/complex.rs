//! Filtered cell complexes with mod-2 incidences, and the modifications that
//! turn the two cubical models into dual complexes of the torus or sphere.

use std::collections::BTreeSet;
use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::cubical::CubeKey;
use crate::image::canonical_zero;

#[derive(Debug, Error, PartialEq)]
pub enum ComplexError {
    #[error("unsupported complex: {0}")]
    Unsupported(String),
    #[error("monotonicity violated: {0}")]
    Monotonicity(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("cell {cell} of dimension {dim} has {cofaces} top-dimensional cofaces, expected 2")]
    NotClosedManifold { cell: usize, dim: usize, cofaces: usize },
    #[error("attaching boundary is not a cycle (cells {0:?} have odd incidence)")]
    NotASphere(Vec<usize>),
}

/// Identity of a cell beyond its index.
///
/// The derived order puts cube cells before the symbolic ones, which is the
/// tie-break used when sorting cells of equal value and dimension.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    Cube(CubeKey),
    /// The top cell attached along the boundary sphere.
    Kappa,
    /// The vertex a collapsed boundary becomes.
    BoundaryClass,
    /// The dual cell of the wrapped label.
    Dual(Box<Label>),
}

impl Label {
    pub fn dual(&self) -> Label {
        match self {
            Label::Dual(inner) => (**inner).clone(),
            other => Label::Dual(Box::new(other.clone())),
        }
    }

    pub fn cube(&self) -> Option<&CubeKey> {
        match self {
            Label::Cube(key) => Some(key),
            _ => None,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Cube(key) => write!(f, "{key}"),
            Label::Kappa => f.write_str("kappa"),
            Label::BoundaryClass => f.write_str("boundary-class"),
            Label::Dual(inner) => write!(f, "dual({inner})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Cell {
    pub dim: usize,
    /// Facet indices; an incidence with coefficient 0 mod 2 is simply absent.
    pub facets: Vec<usize>,
    pub value: f64,
    pub label: Option<Label>,
}

impl Cell {
    pub fn new(dim: usize, facets: Vec<usize>, value: f64) -> Self {
        Cell {
            dim,
            facets,
            value: canonical_zero(value),
            label: None,
        }
    }

    pub fn with_label(mut self, label: Label) -> Self {
        self.label = Some(label);
        self
    }
}

/// Extents of the doubled-coordinate grid a cubical complex was built on.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoxGeometry {
    pub extents: Vec<usize>,
    pub periodic: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    FacetOutOfRange {
        cell: usize,
        facet: usize,
    },
    Dimension {
        cell: usize,
        facet: usize,
    },
    Monotonicity {
        cell: usize,
        facet: usize,
    },
    DuplicateFacet {
        cell: usize,
        facet: usize,
    },
    NonFiniteValue {
        cell: usize,
    },
    /// The mod-2 boundary of the boundary of `cell` contains `faces`.
    BoundaryNotClosed {
        cell: usize,
        faces: Vec<usize>,
    },
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct FilteredComplex {
    cells: Vec<Cell>,
    geometry: Option<BoxGeometry>,
}

impl FilteredComplex {
    pub fn new(cells: Vec<Cell>) -> Self {
        FilteredComplex { cells, geometry: None }
    }

    pub(crate) fn with_geometry(cells: Vec<Cell>, geometry: BoxGeometry) -> Self {
        FilteredComplex {
            cells,
            geometry: Some(geometry),
        }
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn cell(&self, index: usize) -> &Cell {
        &self.cells[index]
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn geometry(&self) -> Option<&BoxGeometry> {
        self.geometry.as_ref()
    }

    /// Largest cell dimension, 0 for an empty complex.
    pub fn dim(&self) -> usize {
        self.cells.iter().map(|c| c.dim).max().unwrap_or(0)
    }

    pub fn max_value(&self) -> f64 {
        self.cells.iter().map(|c| c.value).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_value(&self) -> f64 {
        self.cells.iter().map(|c| c.value).fold(f64::INFINITY, f64::min)
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.cells.iter().map(|c| if c.dim % 2 == 0 { 1 } else { -1 }).sum()
    }

    /// Number of cells per dimension.
    pub fn cell_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.dim() + 1];
        for c in &self.cells {
            counts[c.dim] += 1;
        }
        counts
    }

    pub fn cofaces(&self) -> Vec<Vec<usize>> {
        let mut cofaces = vec![Vec::new(); self.cells.len()];
        for (i, c) in self.cells.iter().enumerate() {
            for &f in &c.facets {
                cofaces[f].push(i);
            }
        }
        cofaces
    }

    /// Checks every structural invariant; an empty result means the complex
    /// is a valid monotone mod-2 chain complex.
    pub fn validate(&self) -> Vec<Violation> {
        let n = self.cells.len();
        let mut out = Vec::new();
        for (i, c) in self.cells.iter().enumerate() {
            if !c.value.is_finite() {
                out.push(Violation::NonFiniteValue { cell: i });
            }
            let mut seen = BTreeSet::new();
            for &f in &c.facets {
                if f >= n {
                    out.push(Violation::FacetOutOfRange { cell: i, facet: f });
                    continue;
                }
                if !seen.insert(f) {
                    out.push(Violation::DuplicateFacet { cell: i, facet: f });
                }
                let facet = &self.cells[f];
                if facet.dim + 1 != c.dim {
                    out.push(Violation::Dimension { cell: i, facet: f });
                }
                if facet.value > c.value {
                    out.push(Violation::Monotonicity { cell: i, facet: f });
                }
            }
            let faces = self.boundary_of_boundary(i);
            if !faces.is_empty() {
                out.push(Violation::BoundaryNotClosed { cell: i, faces });
            }
        }
        out
    }

    /// Mod-2 sum of the facets of the facets of `cell`.
    fn boundary_of_boundary(&self, cell: usize) -> Vec<usize> {
        let n = self.cells.len();
        let mut faces: Vec<usize> = self.cells[cell]
            .facets
            .iter()
            .filter(|&&f| f < n)
            .flat_map(|&f| self.cells[f].facets.iter().copied())
            .collect();
        odd_multiplicity(&mut faces)
    }

    fn box_geometry(&self) -> Result<&BoxGeometry, ComplexError> {
        match &self.geometry {
            Some(g) if !g.periodic => Ok(g),
            Some(_) => Err(ComplexError::Unsupported("periodic complexes have no boundary".into())),
            None => Err(ComplexError::Unsupported("not a box cubical complex".into())),
        }
    }

    /// Cells of the topological boundary of the box: those with some doubled
    /// coordinate equal to 0 or to the axis maximum.
    pub fn boundary_cells(&self) -> Result<BTreeSet<usize>, ComplexError> {
        let geometry = self.box_geometry()?;
        let mut out = BTreeSet::new();
        for (i, c) in self.cells.iter().enumerate() {
            let key = c
                .label
                .as_ref()
                .and_then(Label::cube)
                .ok_or_else(|| ComplexError::Unsupported(format!("cell {i} has no cube label")))?;
            let on_boundary = key
                .coords()
                .iter()
                .zip(&geometry.extents)
                .any(|(&x, &e)| x == 0 || x + 1 == e);
            if on_boundary {
                out.insert(i);
            }
        }
        Ok(out)
    }

    /// Caps the box with one top cell whose facets are the boundary
    /// (d-1)-cells.
    pub fn attach_top_cell(&self, value: f64) -> Result<FilteredComplex, ComplexError> {
        let d = self.box_geometry()?.extents.len();
        let max = self.max_value();
        if value.partial_cmp(&max).is_none_or(|o| o.is_lt()) {
            return Err(ComplexError::Monotonicity(format!(
                "top cell value {value} is below the complex maximum {max}"
            )));
        }
        let facets: Vec<usize> = self
            .boundary_cells()?
            .into_iter()
            .filter(|&i| self.cells[i].dim + 1 == d)
            .collect();
        let mut ridge: Vec<usize> = facets
            .iter()
            .flat_map(|&f| self.cells[f].facets.iter().copied())
            .collect();
        let ridge = odd_multiplicity(&mut ridge);
        if facets.is_empty() || !ridge.is_empty() {
            return Err(ComplexError::NotASphere(ridge));
        }
        let mut cells = self.cells.clone();
        cells.push(Cell::new(d, facets, value).with_label(Label::Kappa));
        Ok(FilteredComplex::new(cells))
    }

    /// Chain-level quotient by the boundary: boundary cells are dropped, one
    /// class vertex is appended, and each interior edge is incident to it iff
    /// an odd number of its endpoints lay on the boundary.
    pub fn quotient_boundary(&self, class_value: f64) -> Result<FilteredComplex, ComplexError> {
        let boundary = self.boundary_cells()?;
        if let Some(&bad) = boundary.iter().find(|&&i| self.cells[i].value != class_value) {
            return Err(ComplexError::Precondition(format!(
                "boundary cell {bad} has value {} instead of {class_value}",
                self.cells[bad].value
            )));
        }
        let min = self.min_value();
        if class_value > min {
            return Err(ComplexError::Precondition(format!(
                "class value {class_value} exceeds the complex minimum {min}"
            )));
        }

        let mut new_index = vec![usize::MAX; self.cells.len()];
        let mut next = 0;
        for (i, slot) in new_index.iter_mut().enumerate() {
            if !boundary.contains(&i) {
                *slot = next;
                next += 1;
            }
        }
        let class_index = next;
        let mut cells = Vec::with_capacity(next + 1);
        for (i, c) in self.cells.iter().enumerate() {
            if boundary.contains(&i) {
                continue;
            }
            let mut facets = Vec::with_capacity(c.facets.len());
            let mut on_boundary = 0;
            for &f in &c.facets {
                if boundary.contains(&f) {
                    on_boundary += 1;
                } else {
                    facets.push(new_index[f]);
                }
            }
            if c.dim == 1 && on_boundary % 2 == 1 {
                facets.push(class_index);
            }
            cells.push(Cell {
                dim: c.dim,
                facets,
                value: c.value,
                label: c.label.clone(),
            });
        }
        cells.push(Cell::new(0, Vec::new(), class_value).with_label(Label::BoundaryClass));
        Ok(FilteredComplex::new(cells))
    }

    /// Combinatorial dual of a closed `d`-manifold complex: cell `i` of the
    /// result is the dual of cell `i`, with reversed dimension, coface list
    /// as facets and negated value.
    pub fn dualize(&self, d: usize) -> Result<FilteredComplex, ComplexError> {
        if let Some((i, c)) = self.cells.iter().enumerate().find(|(_, c)| c.dim > d) {
            return Err(ComplexError::Unsupported(format!(
                "cell {i} has dimension {} > {d}",
                c.dim
            )));
        }
        let cofaces = self.cofaces();
        if d >= 1 {
            for (i, c) in self.cells.iter().enumerate() {
                if c.dim + 1 == d && cofaces[i].len() != 2 {
                    return Err(ComplexError::NotClosedManifold {
                        cell: i,
                        dim: c.dim,
                        cofaces: cofaces[i].len(),
                    });
                }
            }
        }
        let cells = self
            .cells
            .iter()
            .zip(cofaces)
            .map(|(c, cof)| Cell {
                dim: d - c.dim,
                facets: cof,
                value: canonical_zero(-c.value),
                label: c.label.as_ref().map(Label::dual),
            })
            .collect();
        Ok(FilteredComplex::new(cells))
    }

    /// One line per cell: `idx dim value facets label`.
    pub fn to_debug_string(&self) -> String {
        let mut out = String::new();
        for (i, c) in self.cells.iter().enumerate() {
            let facets: Vec<String> = c.facets.iter().map(|f| f.to_string()).collect();
            let label = c.label.as_ref().map(|l| l.to_string()).unwrap_or_else(|| "-".into());
            let _ = writeln!(out, "{i} {} {} [{}] {label}", c.dim, c.value, facets.join(","));
        }
        out
    }
}

/// Sorts `items` and keeps the elements that occur an odd number of times.
pub(crate) fn odd_multiplicity(items: &mut [usize]) -> Vec<usize> {
    items.sort_unstable();
    let mut out = Vec::new();
    let mut i = 0;
    while i < items.len() {
        let mut j = i;
        while j < items.len() && items[j] == items[i] {
            j += 1;
        }
        if (j - i) % 2 == 1 {
            out.push(items[i]);
        }
        i = j;
    }
    out
}
