//! V- and T-construction cubical complexes of an image.
//!
//! Cubes are addressed in doubled coordinates: an even entry `2l` is the
//! degenerate interval `[l, l]` and an odd entry `2l + 1` is `[l, l + 1]`.
//! Cells are created in row-major order of their doubled coordinates, so the
//! cell index of a cube is its linear offset in the doubled grid.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::complex::{BoxGeometry, Cell, FilteredComplex, Label};
use crate::image::{advance, GrayscaleImage};

#[derive(Debug, Error, PartialEq)]
pub enum CubicalError {
    #[error("periodic complexes need every side length >= 2, got {0:?}")]
    DegeneratePeriodic(Vec<usize>),
}

/// Which cubical model to build from an image.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Construction {
    /// Voxels are vertices; a cube takes the maximum of its vertices.
    V,
    /// Voxels are top cubes; a face takes the minimum of its top cofaces.
    T,
}

impl Construction {
    pub fn other(self) -> Construction {
        match self {
            Construction::V => Construction::T,
            Construction::T => Construction::V,
        }
    }

    pub fn build(self, img: &GrayscaleImage, periodic: bool) -> Result<FilteredComplex, CubicalError> {
        match self {
            Construction::V => build_v_complex(img, periodic),
            Construction::T => build_t_complex(img, periodic),
        }
    }
}

impl fmt::Display for Construction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Construction::V => "V",
            Construction::T => "T",
        })
    }
}

impl FromStr for Construction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "V" | "v" => Ok(Construction::V),
            "T" | "t" => Ok(Construction::T),
            other => Err(format!("unknown construction '{other}' (expected V or T)")),
        }
    }
}

/// An elementary cube in doubled coordinates.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CubeKey(Vec<usize>);

impl CubeKey {
    pub fn new(coords: Vec<usize>) -> Self {
        CubeKey(coords)
    }

    pub fn coords(&self) -> &[usize] {
        &self.0
    }

    /// Number of non-degenerate intervals.
    pub fn dim(&self) -> usize {
        self.0.iter().filter(|&&c| c % 2 == 1).count()
    }

    /// `self ⪯ other` in a non-periodic grid: every coordinate agrees, or is an
    /// even neighbour of an odd coordinate of `other`.
    pub fn is_face_of(&self, other: &CubeKey) -> bool {
        self.0.len() == other.0.len()
            && self
                .0
                .iter()
                .zip(&other.0)
                .all(|(&a, &b)| a == b || (b % 2 == 1 && a % 2 == 0 && (a + 1 == b || a == b + 1)))
    }

    /// Shift by `offset` in every axis, wrapping modulo `modulus` when given.
    pub fn shifted(&self, offset: usize, modulus: Option<&[usize]>) -> CubeKey {
        CubeKey(
            self.0
                .iter()
                .enumerate()
                .map(|(axis, &c)| match modulus {
                    Some(m) => (c + offset) % m[axis],
                    None => c + offset,
                })
                .collect(),
        )
    }
}

impl fmt::Display for CubeKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|c| c.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// The doubled-coordinate grid underlying a cubical complex.
#[derive(Clone, Debug)]
pub(crate) struct Grid {
    extents: Vec<usize>,
    periodic: bool,
}

impl Grid {
    fn len(&self) -> usize {
        self.extents.iter().product()
    }

    fn offset(&self, coords: &[usize]) -> usize {
        coords.iter().zip(&self.extents).fold(0, |acc, (&c, &e)| acc * e + c)
    }

    /// The two neighbours of `c` along `axis`, or fewer at a non-periodic edge.
    fn neighbours(&self, axis: usize, c: usize) -> [Option<usize>; 2] {
        let e = self.extents[axis];
        if self.periodic {
            [Some((c + e - 1) % e), Some((c + 1) % e)]
        } else {
            [c.checked_sub(1), (c + 1 < e).then_some(c + 1)]
        }
    }

    fn facets(&self, coords: &[usize]) -> Vec<usize> {
        let mut out = Vec::new();
        let mut scratch = coords.to_vec();
        for axis in 0..coords.len() {
            if coords[axis] % 2 == 1 {
                for n in self.neighbours(axis, coords[axis]).into_iter().flatten() {
                    scratch[axis] = n;
                    out.push(self.offset(&scratch));
                }
                scratch[axis] = coords[axis];
            }
        }
        out
    }

    fn geometry(&self) -> BoxGeometry {
        BoxGeometry {
            extents: self.extents.clone(),
            periodic: self.periodic,
        }
    }
}

/// Calls `visit` with every coordinate vector obtained by replacing each axis
/// selected by `pick` with one of its available neighbours.
fn for_each_neighbour_choice(
    grid: &Grid,
    coords: &[usize],
    pick: impl Fn(usize) -> bool,
    mut visit: impl FnMut(&[usize]),
) {
    let axes: Vec<usize> = (0..coords.len()).filter(|&a| pick(coords[a])).collect();
    let options: Vec<Vec<usize>> = axes
        .iter()
        .map(|&a| grid.neighbours(a, coords[a]).into_iter().flatten().collect())
        .collect();
    if options.iter().any(|o| o.is_empty()) {
        return;
    }
    let mut choice = vec![0usize; axes.len()];
    let mut point = coords.to_vec();
    loop {
        for (k, &axis) in axes.iter().enumerate() {
            point[axis] = options[k][choice[k]];
        }
        visit(&point);
        let mut k = axes.len();
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            choice[k] += 1;
            if choice[k] < options[k].len() {
                break;
            }
            choice[k] = 0;
        }
    }
}

fn build(grid: Grid, value_of: impl Fn(&Grid, &[usize]) -> f64) -> FilteredComplex {
    let mut cells = Vec::with_capacity(grid.len());
    let mut coords = vec![0usize; grid.extents.len()];
    for _ in 0..grid.len() {
        let dim = coords.iter().filter(|&&c| c % 2 == 1).count();
        let value = value_of(&grid, &coords);
        cells.push(Cell::new(dim, grid.facets(&coords), value).with_label(Label::Cube(CubeKey(coords.clone()))));
        advance(&mut coords, &grid.extents);
    }
    FilteredComplex::with_geometry(cells, grid.geometry())
}

fn check_periodic(img: &GrayscaleImage, periodic: bool) -> Result<(), CubicalError> {
    if periodic && img.dims().iter().any(|&n| n < 2) {
        return Err(CubicalError::DegeneratePeriodic(img.dims().to_vec()));
    }
    Ok(())
}

/// Value of the voxel sitting at a vertex (all coordinates even).
fn vertex_voxel(img: &GrayscaleImage, coords: &[usize]) -> f64 {
    let idx: Vec<usize> = coords.iter().map(|c| c / 2).collect();
    img.get(&idx)
}

/// Value of the voxel sitting at a top cube (all coordinates odd).
fn top_voxel(img: &GrayscaleImage, coords: &[usize]) -> f64 {
    let idx: Vec<usize> = coords.iter().map(|c| (c - 1) / 2).collect();
    img.get(&idx)
}

/// The V-construction: one vertex per voxel, every cube valued by the
/// maximum over its vertices.
pub fn build_v_complex(img: &GrayscaleImage, periodic: bool) -> Result<FilteredComplex, CubicalError> {
    check_periodic(img, periodic)?;
    let extents = img
        .dims()
        .iter()
        .map(|&n| if periodic { 2 * n } else { 2 * n - 1 })
        .collect();
    let grid = Grid { extents, periodic };
    Ok(build(grid, |grid, coords| {
        let mut max = f64::NEG_INFINITY;
        for_each_neighbour_choice(
            grid,
            coords,
            |c| c % 2 == 1,
            |vertex| {
                max = max.max(vertex_voxel(img, vertex));
            },
        );
        max
    }))
}

/// The T-construction: one top cube per voxel, every face valued by the
/// minimum over the top cubes containing it.
pub fn build_t_complex(img: &GrayscaleImage, periodic: bool) -> Result<FilteredComplex, CubicalError> {
    check_periodic(img, periodic)?;
    let extents = img
        .dims()
        .iter()
        .map(|&n| if periodic { 2 * n } else { 2 * n + 1 })
        .collect();
    let grid = Grid { extents, periodic };
    Ok(build(grid, |grid, coords| {
        let mut min = f64::INFINITY;
        for_each_neighbour_choice(
            grid,
            coords,
            |c| c % 2 == 0,
            |top| {
                min = min.min(top_voxel(img, top));
            },
        );
        min
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn checkerboard() -> GrayscaleImage {
        GrayscaleImage::new(vec![2, 2], vec![0.0, 1.0, 1.0, 0.0]).unwrap()
    }

    fn key(c: &[usize]) -> Option<Label> {
        Some(Label::Cube(CubeKey::new(c.to_vec())))
    }

    fn find(cx: &FilteredComplex, c: &[usize]) -> usize {
        let k = key(c);
        cx.cells().iter().position(|cell| cell.label == k).unwrap()
    }

    #[test]
    fn v_checkerboard() {
        let v = build_v_complex(&checkerboard(), false).unwrap();
        assert_eq!(v.len(), 9);
        assert_eq!(v.cell_counts(), vec![4, 4, 1]);
        let vertex_values: Vec<f64> = v.cells().iter().filter(|c| c.dim == 0).map(|c| c.value).collect();
        assert_eq!(vertex_values, vec![0.0, 1.0, 1.0, 0.0]);
        assert!(v.cells().iter().filter(|c| c.dim > 0).all(|c| c.value == 1.0));
        assert!(v.validate().is_empty());
    }

    #[test]
    fn t_checkerboard() {
        let t = build_t_complex(&checkerboard(), false).unwrap();
        assert_eq!(t.len(), 25);
        assert_eq!(t.cell_counts(), vec![9, 12, 4]);
        assert_eq!(t.cell(find(&t, &[2, 2])).value, 0.0);
        // edge between the 0-square at (1,1) and the 1-square at (1,3)
        assert_eq!(t.cell(find(&t, &[1, 2])).value, 0.0);
        assert_eq!(t.cell(find(&t, &[1, 1])).value, 0.0);
        assert_eq!(t.cell(find(&t, &[1, 3])).value, 1.0);
        // corner vertex touching only the 1-square at (1,3)
        assert_eq!(t.cell(find(&t, &[0, 4])).value, 1.0);
        assert!(t.validate().is_empty());
    }

    #[test]
    fn single_voxel() {
        let one = GrayscaleImage::new(vec![1, 1], vec![5.0]).unwrap();
        let v = build_v_complex(&one, false).unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!(v.cell(0).value, 5.0);
        let t = build_t_complex(&one, false).unwrap();
        assert_eq!(t.cell_counts(), vec![4, 4, 1]);
        assert!(t.cells().iter().all(|c| c.value == 5.0));
    }

    #[test]
    fn constant_images() {
        let img = GrayscaleImage::filled(vec![2, 3, 2], 4.0).unwrap();
        for periodic in [false, true] {
            for c in [Construction::V, Construction::T] {
                let cx = c.build(&img, periodic).unwrap();
                assert!(cx.cells().iter().all(|cell| cell.value == 4.0));
            }
        }
    }

    #[test]
    fn periodic_counts_and_rejection() {
        let img = GrayscaleImage::filled(vec![2, 3], 0.0).unwrap();
        let v = build_v_complex(&img, true).unwrap();
        let t = build_t_complex(&img, true).unwrap();
        assert_eq!(v.len(), 24);
        assert_eq!(t.len(), 24);
        assert_eq!(v.cell_counts(), vec![6, 12, 6]);
        assert_eq!(v.euler_characteristic(), 0);
        assert!(v.validate().is_empty());
        assert!(t.validate().is_empty());

        let thin = GrayscaleImage::filled(vec![1, 3], 0.0).unwrap();
        assert_eq!(
            build_v_complex(&thin, true),
            Err(CubicalError::DegeneratePeriodic(vec![1, 3]))
        );
        assert!(build_t_complex(&thin, true).is_err());
    }

    #[test]
    fn face_relation() {
        let square = CubeKey::new(vec![1, 1]);
        assert!(CubeKey::new(vec![0, 1]).is_face_of(&square));
        assert!(CubeKey::new(vec![2, 2]).is_face_of(&square));
        assert!(square.is_face_of(&square));
        assert!(!CubeKey::new(vec![3, 1]).is_face_of(&square));
        assert!(!CubeKey::new(vec![1, 2]).is_face_of(&CubeKey::new(vec![1, 4])));
        assert_eq!(square.dim(), 2);
        assert_eq!(
            CubeKey::new(vec![3, 0]).shifted(1, Some(&[4, 4])),
            CubeKey::new(vec![0, 1])
        );
    }

    #[test]
    fn construction_parse() {
        assert_eq!("V".parse::<Construction>().unwrap(), Construction::V);
        assert_eq!("t".parse::<Construction>().unwrap(), Construction::T);
        assert!("X".parse::<Construction>().is_err());
        assert_eq!(Construction::V.other(), Construction::T);
    }
}
