//! Θ-parameterization of transition matrices with structural constraints.
//!
//! A transition matrix over `s` states is parameterized by the `s x (s-1)`
//! matrix Θ of leading row entries; the final column is always the row
//! remainder `1 - Σ_j θ_ij`. Entries of Θ are either free parameters or fixed
//! constants (structural zeros, absorbing rows).

use crate::error::{Error, Result};
use crate::matrix::{CountMatrix, Mat, StochasticMatrix};

/// Per-entry constraint for the leading `s-1` columns.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MaskEntry {
    Free,
    Fixed(f64),
}

/// Which entries of Θ are free versus fixed. The remainder column is implied
/// and never masked directly: fixing an entire row pins the remainder too.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstraintMask {
    s: usize,
    entries: Vec<MaskEntry>, // s * (s-1), row-major
}

impl ConstraintMask {
    pub fn new(rows: Vec<Vec<MaskEntry>>) -> Result<Self> {
        let s = rows.len();
        if s < 2 {
            return Err(Error::InvalidMask(format!("need at least 2 states, got {s}")));
        }
        let mut entries = Vec::with_capacity(s * (s - 1));
        for (i, row) in rows.iter().enumerate() {
            if row.len() != s - 1 {
                return Err(Error::InvalidMask(format!(
                    "row {i}: expected {} entries, got {}",
                    s - 1,
                    row.len()
                )));
            }
            let mut fixed_sum = 0.0;
            for (j, e) in row.iter().enumerate() {
                if let MaskEntry::Fixed(v) = e {
                    if !(0.0..=1.0).contains(v) {
                        return Err(Error::InvalidMask(format!(
                            "fixed value at ({i},{j}) = {v} outside [0,1]"
                        )));
                    }
                    fixed_sum += v;
                }
            }
            if fixed_sum > 1.0 + 1e-12 {
                return Err(Error::InvalidMask(format!(
                    "row {i}: fixed values sum to {fixed_sum} > 1"
                )));
            }
            entries.extend_from_slice(row);
        }
        Ok(ConstraintMask { s, entries })
    }

    /// All entries free.
    pub fn unconstrained(s: usize) -> Self {
        ConstraintMask {
            s,
            entries: vec![MaskEntry::Free; s * (s - 1)],
        }
    }

    /// Fixes row `i` of the matrix to the identity row `e_i` (absorbing state).
    pub fn set_absorbing(&mut self, i: usize) {
        for j in 0..self.s - 1 {
            let v = if i == j { 1.0 } else { 0.0 };
            self.entries[i * (self.s - 1) + j] = MaskEntry::Fixed(v);
        }
    }

    pub fn dim(&self) -> usize {
        self.s
    }

    #[inline]
    pub fn entry(&self, i: usize, j: usize) -> MaskEntry {
        self.entries[i * (self.s - 1) + j]
    }

    #[inline]
    pub fn is_free(&self, i: usize, j: usize) -> bool {
        matches!(self.entry(i, j), MaskEntry::Free)
    }

    /// Free coordinate positions in row-major order.
    pub fn free_positions(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.s {
            for j in 0..self.s - 1 {
                if self.is_free(i, j) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn n_free(&self) -> usize {
        self.entries.iter().filter(|e| matches!(e, MaskEntry::Free)).count()
    }

    pub fn row_free_count(&self, i: usize) -> usize {
        (0..self.s - 1).filter(|&j| self.is_free(i, j)).count()
    }

    pub fn row_fixed_sum(&self, i: usize) -> f64 {
        (0..self.s - 1)
            .filter_map(|j| match self.entry(i, j) {
                MaskEntry::Fixed(v) => Some(v),
                MaskEntry::Free => None,
            })
            .sum()
    }

    /// If every entry of row `i` is fixed, returns the full Θ row.
    pub fn fully_fixed_row(&self, i: usize) -> Option<Vec<f64>> {
        let mut row = Vec::with_capacity(self.s - 1);
        for j in 0..self.s - 1 {
            match self.entry(i, j) {
                MaskEntry::Fixed(v) => row.push(v),
                MaskEntry::Free => return None,
            }
        }
        Some(row)
    }
}

/// The `s x (s-1)` parameter matrix. Fixed entries mirror the mask; free
/// entries are the optimization variables.
#[derive(Clone, Debug, PartialEq)]
pub struct ThetaParam {
    s: usize,
    theta: Vec<f64>, // s * (s-1), row-major
}

impl ThetaParam {
    /// Validates `θ_ij >= 0` and per-row sums `<= 1` (tiny slack for roundoff).
    pub fn new(s: usize, theta: Vec<f64>) -> Result<Self> {
        if theta.len() != s * (s - 1) {
            return Err(Error::DimensionMismatch(format!(
                "expected {} entries, got {}",
                s * (s - 1),
                theta.len()
            )));
        }
        for i in 0..s {
            let row = &theta[i * (s - 1)..(i + 1) * (s - 1)];
            let mut sum = 0.0;
            for (j, &v) in row.iter().enumerate() {
                if !(v >= -1e-12) {
                    return Err(Error::InvalidParam(format!("θ({i},{j}) = {v} < 0")));
                }
                sum += v;
            }
            if sum > 1.0 + 1e-12 {
                return Err(Error::InvalidParam(format!("row {i} sums to {sum} > 1")));
            }
        }
        Ok(ThetaParam { s, theta })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let s = rows.len();
        let mut theta = Vec::with_capacity(s * (s - 1));
        for (i, row) in rows.iter().enumerate() {
            if row.len() != s - 1 {
                return Err(Error::DimensionMismatch(format!(
                    "row {i}: expected {} entries, got {}",
                    s - 1,
                    row.len()
                )));
            }
            theta.extend_from_slice(row);
        }
        ThetaParam::new(s, theta)
    }

    pub fn dim(&self) -> usize {
        self.s
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.theta[i * (self.s - 1) + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.theta
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.theta[i * (self.s - 1)..(i + 1) * (self.s - 1)].iter().sum()
    }

    /// True when every fixed mask entry is matched exactly (within roundoff).
    pub fn consistent_with(&self, mask: &ConstraintMask) -> bool {
        if mask.dim() != self.s {
            return false;
        }
        for i in 0..self.s {
            for j in 0..self.s - 1 {
                if let MaskEntry::Fixed(v) = mask.entry(i, j) {
                    if (self.get(i, j) - v).abs() > 1e-12 {
                        return false;
                    }
                }
            }
        }
        true
    }

    pub fn max_abs_diff(&self, other: &ThetaParam) -> f64 {
        self.theta
            .iter()
            .zip(&other.theta)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Assembles `P = [Θ | 1 - Θ·1]`.
pub fn theta_to_matrix(theta: &ThetaParam, mask: &ConstraintMask) -> Result<StochasticMatrix> {
    if !theta.consistent_with(mask) {
        return Err(Error::InvalidParam(
            "θ fixed entries do not match mask".into(),
        ));
    }
    let s = theta.dim();
    let mut m = Mat::zeros(s);
    for i in 0..s {
        let mut sum = 0.0;
        for j in 0..s - 1 {
            let v = theta.get(i, j);
            m.set(i, j, v);
            sum += v;
        }
        m.set(i, s - 1, 1.0 - sum);
    }
    StochasticMatrix::new(m)
}

/// Extracts the leading `s-1` columns of `P` as a Θ matrix.
pub fn matrix_to_theta(p: &StochasticMatrix) -> ThetaParam {
    let s = p.dim();
    let mut theta = Vec::with_capacity(s * (s - 1));
    for i in 0..s {
        for j in 0..s - 1 {
            theta.push(p.get(i, j));
        }
    }
    ThetaParam { s, theta }
}

/// Row-normalized count matrix: the unconstrained MLE of the transition
/// matrix over the observation interval. Rows with zero observed transitions
/// take the mask's fully fixed row (e.g. an absorbing identity row); a zero
/// row with free mask entries is unidentifiable.
pub fn interval_mle(n: &CountMatrix, mask: &ConstraintMask) -> Result<StochasticMatrix> {
    let s = n.dim();
    if mask.dim() != s {
        return Err(Error::DimensionMismatch(format!(
            "counts {s} vs mask {}",
            mask.dim()
        )));
    }
    let mut m = Mat::zeros(s);
    for i in 0..s {
        let total = n.row_sum(i);
        if total > 0 {
            let total = total as f64;
            let mut sum = 0.0;
            for j in 0..s - 1 {
                let p = n.get(i, j) as f64 / total;
                m.set(i, j, p);
                sum += p;
            }
            m.set(i, s - 1, 1.0 - sum);
        } else {
            let row = mask.fully_fixed_row(i).ok_or(Error::UnidentifiableRow(i))?;
            let sum: f64 = row.iter().sum();
            for (j, v) in row.into_iter().enumerate() {
                m.set(i, j, v);
            }
            m.set(i, s - 1, 1.0 - sum);
        }
    }
    StochasticMatrix::new(m)
}
