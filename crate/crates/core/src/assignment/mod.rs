//! Linear assignment problem (LAP) solvers over dense square cost matrices.
//!
//! Entries are nonnegative and may be `+inf` (forbidden pairing). Internally
//! every `+inf` is replaced by a sentinel strictly larger than the cost of any
//! finite perfect assignment, so the core loops only see finite numbers. The
//! instance is infeasible iff the optimum still uses a sentinel entry.

mod hungarian;
mod jv;

use crate::error::{GedError, Result};

pub use hungarian::lap_hungarian;
pub use jv::lap_jv;

#[derive(Clone, Debug, PartialEq)]
pub struct CostMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl CostMatrix {
    pub fn new(n: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != n * n {
            return Err(GedError::InvalidArgument(format!(
                "cost matrix needs {} entries for n = {n}, got {}",
                n * n,
                entries.len()
            )));
        }
        if let Some(bad) = entries.iter().find(|c| c.is_nan() || **c < 0.0) {
            return Err(GedError::InvalidArgument(format!("invalid cost entry {bad}")));
        }
        Ok(Self { n, entries })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                entries.push(f(i, j));
            }
        }
        Self::new(n, entries)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(GedError::InvalidArgument("cost matrix must be square".into()));
        }
        Self::new(n, rows.concat())
    }

    pub fn size(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    /// Sum of `perm[i]`-th entries, in row order.
    pub fn cost_of(&self, perm: &[usize]) -> f64 {
        perm.iter().enumerate().map(|(i, &j)| self.get(i, j)).sum()
    }

    /// Rows or columns without any finite entry make the instance trivially infeasible.
    fn has_blocked_line(&self) -> bool {
        let n = self.n;
        let row_blocked = (0..n).any(|i| (0..n).all(|j| self.get(i, j).is_infinite()));
        let col_blocked = (0..n).any(|j| (0..n).all(|i| self.get(i, j).is_infinite()));
        row_blocked || col_blocked
    }

    /// Finite copy of the matrix with `+inf` replaced by the sentinel.
    fn with_sentinel(&self) -> Vec<f64> {
        let max_finite = self
            .entries
            .iter()
            .copied()
            .filter(|c| c.is_finite())
            .fold(0.0, f64::max);
        let sentinel = self.n as f64 * max_finite + 1.0;
        self.entries
            .iter()
            .map(|&c| if c.is_finite() { c } else { sentinel })
            .collect()
    }

    fn finish(&self, perm: Vec<usize>) -> Result<Assignment> {
        let total_cost = self.cost_of(&perm);
        if total_cost.is_infinite() {
            return Err(GedError::Infeasible);
        }
        Ok(Assignment { perm, total_cost })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Assignment {
    /// `perm[i]` is the column assigned to row `i`.
    pub perm: Vec<usize>,
    pub total_cost: f64,
}
