//! Brute-force pairing from ranks of lower-left sub-matrices.
//!
//! `D_i^j` is the block of rows `i..=n` and columns `0..=j`. The pairing is
//! read off the inclusion-exclusion
//! `r(i, j) = rk D_i^j - rk D_i^{j-1} - rk D_{i+1}^j + rk D_{i+1}^{j-1}`,
//! which is 1 exactly on persistence pairs. Nothing here shares code with the
//! column reduction.

use super::reduce::Reducer;
use super::{BoundaryMatrix, PersistenceError, PersistencePairing};

/// Matrices larger than this are refused unless a larger limit is passed.
pub const DEFAULT_ORACLE_LIMIT: usize = 512;

/// Environment variable consulted by [`oracle_limit_from_env`].
pub const ORACLE_LIMIT_ENV: &str = "CUBEDUAL_ORACLE_LIMIT";

pub fn oracle_limit_from_env() -> usize {
    std::env::var(ORACLE_LIMIT_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_ORACLE_LIMIT)
}

fn words_for(bits: usize) -> usize {
    bits.div_ceil(64).max(1)
}

fn highest_bit(v: &[u64]) -> Option<usize> {
    v.iter()
        .enumerate()
        .rev()
        .find(|(_, w)| **w != 0)
        .map(|(k, w)| k * 64 + 63 - w.leading_zeros() as usize)
}

/// Rank of `D_i^j` by row-wise Gaussian elimination on a dense copy.
/// `j < 0` or `i > n` denote empty blocks.
pub fn lower_left_rank(matrix: &BoundaryMatrix, i: usize, j: isize) -> usize {
    let size = matrix.size();
    if j < 0 || i >= size {
        return 0;
    }
    let cols = j as usize + 1;
    let words = words_for(cols);
    let mut rows: Vec<Vec<u64>> = vec![vec![0; words]; size - i];
    for c in 0..cols {
        for &r in matrix.column(c) {
            if r >= i {
                rows[r - i][c / 64] |= 1 << (c % 64);
            }
        }
    }
    let mut rank = 0;
    for bit in 0..cols {
        let (w, mask) = (bit / 64, 1u64 << (bit % 64));
        let Some(p) = (rank..rows.len()).find(|&r| rows[r][w] & mask != 0) else {
            continue;
        };
        rows.swap(rank, p);
        let pivot = rows[rank].clone();
        for row in rows.iter_mut().skip(rank + 1) {
            if row[w] & mask != 0 {
                row.iter_mut().zip(&pivot).for_each(|(a, b)| *a ^= b);
            }
        }
        rank += 1;
    }
    rank
}

/// `rk D_i^j` for every `0 <= i <= n + 1` and `-1 <= j <= n`.
#[derive(Clone, Debug)]
pub struct RankTable {
    size: usize,
    ranks: Vec<u32>,
}

impl RankTable {
    /// For each `i`, columns restricted to rows `i..=n` are inserted left to
    /// right into a GF(2) basis keyed by highest set bit.
    pub fn new(matrix: &BoundaryMatrix) -> RankTable {
        let size = matrix.size();
        let stride = size + 1;
        let mut ranks = vec![0u32; (size + 1) * stride];
        for i in 0..size {
            let bits = size - i;
            let words = words_for(bits);
            let mut basis: Vec<Option<Vec<u64>>> = vec![None; bits];
            let mut rank = 0u32;
            for j in 0..size {
                let mut v = vec![0u64; words];
                for &r in matrix.column(j) {
                    if r >= i {
                        let b = r - i;
                        v[b / 64] |= 1 << (b % 64);
                    }
                }
                while let Some(top) = highest_bit(&v) {
                    match &basis[top] {
                        Some(b) => v.iter_mut().zip(b).for_each(|(x, y)| *x ^= y),
                        None => {
                            basis[top] = Some(v);
                            rank += 1;
                            break;
                        }
                    }
                }
                ranks[i * stride + j + 1] = rank;
            }
        }
        RankTable { size, ranks }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn rank(&self, i: usize, j: isize) -> usize {
        if j < 0 || i >= self.size {
            return 0;
        }
        self.ranks[i * (self.size + 1) + j as usize + 1] as usize
    }

    pub fn r(&self, i: usize, j: usize) -> i64 {
        let j = j as isize;
        self.rank(i, j) as i64 - self.rank(i, j - 1) as i64 - self.rank(i + 1, j) as i64
            + self.rank(i + 1, j - 1) as i64
    }
}

pub fn rank_pairing_oracle(matrix: &BoundaryMatrix) -> Result<PersistencePairing, PersistenceError> {
    rank_pairing_oracle_with_limit(matrix, DEFAULT_ORACLE_LIMIT)
}

/// Pairs are the `i < j` with `r(i, j) = 1`; positions in no pair are essential.
pub fn rank_pairing_oracle_with_limit(
    matrix: &BoundaryMatrix,
    limit: usize,
) -> Result<PersistencePairing, PersistenceError> {
    let size = matrix.size();
    if size > limit {
        return Err(PersistenceError::OracleLimit { size, limit });
    }
    matrix.check_strictly_upper_triangular()?;
    let table = RankTable::new(matrix);
    let mut used = vec![false; size];
    let mut pairs = Vec::new();
    for j in 0..size {
        for i in 0..j {
            if table.r(i, j) == 1 {
                pairs.push((i, j));
                used[i] = true;
                used[j] = true;
            }
        }
    }
    let essential = (0..size).filter(|&i| !used[i]).collect();
    Ok(PersistencePairing::new(pairs, essential))
}

/// The rank oracle as a reduction strategy, for cross-checking at runtime.
#[derive(Clone, Copy, Debug)]
pub struct RankOracle {
    pub limit: usize,
}

impl Default for RankOracle {
    fn default() -> Self {
        RankOracle {
            limit: DEFAULT_ORACLE_LIMIT,
        }
    }
}

impl Reducer for RankOracle {
    fn name(&self) -> &'static str {
        "rank-oracle"
    }

    fn reduce(&self, matrix: &BoundaryMatrix) -> Result<PersistencePairing, PersistenceError> {
        rank_pairing_oracle_with_limit(matrix, self.limit)
    }
}
