//! Column reduction strategies over Z/2.
//!
//! Every strategy must produce the same pairing for a given matrix; the
//! pairing is determined by the lower-left rank function, not by the order of
//! column additions.

use std::sync::Arc;

use super::rank::RankOracle;
use super::{BoundaryMatrix, PersistenceError, PersistencePairing};

pub trait Reducer: Send + Sync {
    fn name(&self) -> &'static str;
    fn reduce(&self, matrix: &BoundaryMatrix) -> Result<PersistencePairing, PersistenceError>;
}

const NONE: usize = usize::MAX;

/// `target ^= source` on sorted row lists.
fn add_column(target: &mut Vec<usize>, source: &[usize], scratch: &mut Vec<usize>) {
    scratch.clear();
    let (mut a, mut b) = (0, 0);
    while a < target.len() && b < source.len() {
        match target[a].cmp(&source[b]) {
            std::cmp::Ordering::Less => {
                scratch.push(target[a]);
                a += 1;
            }
            std::cmp::Ordering::Greater => {
                scratch.push(source[b]);
                b += 1;
            }
            std::cmp::Ordering::Equal => {
                a += 1;
                b += 1;
            }
        }
    }
    scratch.extend_from_slice(&target[a..]);
    scratch.extend_from_slice(&source[b..]);
    std::mem::swap(target, scratch);
}

/// Reduces one column against the already-reduced columns indexed by
/// `pivot_col`, returning its final lowest row if nonzero.
fn reduce_column(
    col: &mut Vec<usize>,
    reduced: &[Vec<usize>],
    pivot_col: &[usize],
    scratch: &mut Vec<usize>,
) -> Option<usize> {
    while let Some(&low) = col.last() {
        let k = pivot_col[low];
        if k == NONE {
            return Some(low);
        }
        add_column(col, &reduced[k], scratch);
    }
    None
}

fn collect_pairing(n: usize, pivot_col: &[usize], reduced: &[Vec<usize>]) -> PersistencePairing {
    let mut pairs = Vec::new();
    for (row, &col) in pivot_col.iter().enumerate() {
        if col != NONE {
            pairs.push((row, col));
        }
    }
    let essential = (0..n)
        .filter(|&i| pivot_col[i] == NONE && reduced[i].is_empty())
        .collect();
    PersistencePairing::new(pairs, essential)
}

/// Left-to-right reduction: add the earlier column with the same lowest one
/// until the lowest one is new or the column vanishes.
#[derive(Clone, Copy, Debug, Default)]
pub struct StandardReduction;

impl Reducer for StandardReduction {
    fn name(&self) -> &'static str {
        "standard"
    }

    fn reduce(&self, matrix: &BoundaryMatrix) -> Result<PersistencePairing, PersistenceError> {
        Ok(reduce(matrix))
    }
}

pub fn reduce(matrix: &BoundaryMatrix) -> PersistencePairing {
    let n = matrix.size();
    let mut reduced: Vec<Vec<usize>> = Vec::with_capacity(n);
    let mut pivot_col = vec![NONE; n];
    let mut scratch = Vec::new();
    for j in 0..n {
        let mut col = matrix.column(j).to_vec();
        if let Some(low) = reduce_column(&mut col, &reduced, &pivot_col, &mut scratch) {
            pivot_col[low] = j;
        }
        reduced.push(col);
    }
    collect_pairing(n, &pivot_col, &reduced)
}

/// Reduction by decreasing dimension with clearing: once column `j` has
/// lowest one `i`, column `i` is known to reduce to zero and is skipped.
///
/// Falls back to the standard order when the matrix carries no dimensions.
#[derive(Clone, Copy, Debug, Default)]
pub struct TwistReduction;

impl Reducer for TwistReduction {
    fn name(&self) -> &'static str {
        "twist"
    }

    fn reduce(&self, matrix: &BoundaryMatrix) -> Result<PersistencePairing, PersistenceError> {
        let Some(dims) = matrix.dims() else {
            return Ok(reduce(matrix));
        };
        let n = matrix.size();
        let top = dims.iter().copied().max().unwrap_or(0);
        let mut by_dim: Vec<Vec<usize>> = vec![Vec::new(); top + 1];
        for (j, &d) in dims.iter().enumerate() {
            by_dim[d].push(j);
        }
        let mut reduced: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut pivot_col = vec![NONE; n];
        let mut cleared = vec![false; n];
        let mut scratch = Vec::new();
        for columns in by_dim.iter().skip(1).rev() {
            for &j in columns {
                if cleared[j] {
                    continue;
                }
                let mut col = matrix.column(j).to_vec();
                if let Some(low) = reduce_column(&mut col, &reduced, &pivot_col, &mut scratch) {
                    pivot_col[low] = j;
                    cleared[low] = true;
                }
                reduced[j] = col;
            }
        }
        Ok(collect_pairing(n, &pivot_col, &reduced))
    }
}

/// Named reduction strategies, selectable at runtime.
pub struct ReducerRegistry {
    entries: Vec<Arc<dyn Reducer>>,
}

impl Default for ReducerRegistry {
    fn default() -> Self {
        let mut registry = ReducerRegistry::empty();
        registry.register(Box::new(StandardReduction));
        registry.register(Box::new(TwistReduction));
        registry.register(Box::new(RankOracle::default()));
        registry
    }
}

impl ReducerRegistry {
    pub fn empty() -> Self {
        ReducerRegistry { entries: Vec::new() }
    }

    /// Adds a strategy, replacing any existing one with the same name.
    pub fn register(&mut self, reducer: Box<dyn Reducer>) {
        self.entries.retain(|r| r.name() != reducer.name());
        self.entries.push(Arc::from(reducer));
    }

    /// A shared handle, for callers that outlive the registry borrow.
    pub fn get_shared(&self, name: &str) -> Option<Arc<dyn Reducer>> {
        self.entries.iter().find(|r| r.name() == name).cloned()
    }

    pub fn get(&self, name: &str) -> Option<&dyn Reducer> {
        self.entries.iter().find(|r| r.name() == name).map(|r| r.as_ref())
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|r| r.name()).collect()
    }
}
