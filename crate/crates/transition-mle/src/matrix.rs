//! Count and transition-matrix primitives.
//!
//! State counts here are small (`s <= 5` in practice), so matrices are plain
//! row-major `Vec<f64>` buffers with hand-written products. The grid search
//! evaluates millions of small matrix powers, which makes allocation-free
//! in-place products worthwhile.

use crate::error::{Error, Result};

/// Tolerance for validating stochastic-matrix invariants. Barrier optimization
/// returns strictly interior or near-boundary points with roundoff at this
/// scale.
pub const TAU_STOCH: f64 = 1e-9;

/// Dense square matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat {
    s: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(s: usize) -> Self {
        Mat { s, data: vec![0.0; s * s] }
    }

    pub fn identity(s: usize) -> Self {
        let mut m = Mat::zeros(s);
        for i in 0..s {
            m.data[i * s + i] = 1.0;
        }
        m
    }

    /// Build from row slices; every row must have length `s`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let s = rows.len();
        let mut data = Vec::with_capacity(s * s);
        for row in rows {
            if row.len() != s {
                return Err(Error::DimensionMismatch(format!(
                    "expected {s} columns, got {}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Ok(Mat { s, data })
    }

    pub fn dim(&self) -> usize {
        self.s
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.s + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.s + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.s..(i + 1) * self.s]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn copy_from(&mut self, other: &Mat) {
        debug_assert_eq!(self.s, other.s);
        self.data.copy_from_slice(&other.data);
    }

    pub fn fill(&mut self, v: f64) {
        self.data.fill(v);
    }

    /// Resets to the identity without allocating.
    pub fn set_identity(&mut self) {
        self.data.fill(0.0);
        for i in 0..self.s {
            self.data[i * self.s + i] = 1.0;
        }
    }

    /// `out = self * rhs`. `out` must not alias either operand.
    pub fn mul_into(&self, rhs: &Mat, out: &mut Mat) {
        let s = self.s;
        debug_assert_eq!(rhs.s, s);
        debug_assert_eq!(out.s, s);
        for i in 0..s {
            let lrow = &self.data[i * s..(i + 1) * s];
            let orow = &mut out.data[i * s..(i + 1) * s];
            orow.fill(0.0);
            for (k, &lik) in lrow.iter().enumerate() {
                if lik == 0.0 {
                    continue;
                }
                let rrow = &rhs.data[k * s..(k + 1) * s];
                for j in 0..s {
                    orow[j] += lik * rrow[j];
                }
            }
        }
    }

    pub fn mul(&self, rhs: &Mat) -> Mat {
        let mut out = Mat::zeros(self.s);
        self.mul_into(rhs, &mut out);
        out
    }

    /// `self^t` by binary exponentiation; `t = 0` gives the identity.
    pub fn pow(&self, t: u32) -> Mat {
        let mut out = Mat::identity(self.s);
        let mut scratch = (Mat::zeros(self.s), Mat::zeros(self.s));
        self.pow_into(t, &mut out, &mut scratch);
        out
    }

    /// In-place binary exponentiation writing `self^t` into `out`.
    pub fn pow_into(&self, t: u32, out: &mut Mat, scratch: &mut (Mat, Mat)) {
        let (base, tmp) = scratch;
        out.set_identity();
        base.copy_from(self);
        let mut e = t;
        while e > 0 {
            if e & 1 == 1 {
                out.mul_into(base, tmp);
                std::mem::swap(out, tmp);
            }
            e >>= 1;
            if e > 0 {
                base.mul_into(base, tmp);
                std::mem::swap(base, tmp);
            }
        }
    }

    pub fn max_abs_diff(&self, other: &Mat) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Observed transition counts over one observation interval; rows are origin
/// states. Rows with zero row sum are permitted (censored or absorbing origin
/// rows), but at least one row must have observations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CountMatrix {
    s: usize,
    counts: Vec<u64>,
}

impl CountMatrix {
    pub fn new(rows: &[Vec<u64>]) -> Result<Self> {
        let s = rows.len();
        if s < 2 {
            return Err(Error::InvalidCounts(format!(
                "need at least 2 states, got {s}"
            )));
        }
        let mut counts = Vec::with_capacity(s * s);
        for row in rows {
            if row.len() != s {
                return Err(Error::InvalidCounts(format!(
                    "expected {s} columns, got {}",
                    row.len()
                )));
            }
            counts.extend_from_slice(row);
        }
        if counts.iter().all(|&c| c == 0) {
            return Err(Error::InvalidCounts("all rows have zero sum".into()));
        }
        Ok(CountMatrix { s, counts })
    }

    pub fn dim(&self) -> usize {
        self.s
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.counts[i * self.s + j]
    }

    pub fn row_sum(&self, i: usize) -> u64 {
        self.counts[i * self.s..(i + 1) * self.s].iter().sum()
    }
}

/// Transition matrix candidate: entries in `[0, 1]` and unit row sums, both
/// within [`TAU_STOCH`].
#[derive(Clone, Debug, PartialEq)]
pub struct StochasticMatrix {
    mat: Mat,
}

impl StochasticMatrix {
    pub fn new(mat: Mat) -> Result<Self> {
        let s = mat.dim();
        for i in 0..s {
            let mut sum = 0.0;
            for j in 0..s {
                let p = mat.get(i, j);
                if !(-TAU_STOCH..=1.0 + TAU_STOCH).contains(&p) {
                    return Err(Error::InvalidParam(format!(
                        "entry ({i},{j}) = {p} outside [0,1]"
                    )));
                }
                sum += p;
            }
            if (sum - 1.0).abs() > TAU_STOCH {
                return Err(Error::InvalidParam(format!(
                    "row {i} sums to {sum}, not 1"
                )));
            }
        }
        Ok(StochasticMatrix { mat })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        StochasticMatrix::new(Mat::from_rows(rows)?)
    }

    pub fn dim(&self) -> usize {
        self.mat.dim()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.mat.get(i, j)
    }

    pub fn as_mat(&self) -> &Mat {
        &self.mat
    }

    pub fn into_mat(self) -> Mat {
        self.mat
    }
}

/// `P^t` by binary exponentiation. Powers of a stochastic matrix stay
/// stochastic up to accumulated roundoff.
pub fn matrix_power(p: &StochasticMatrix, t: u32) -> StochasticMatrix {
    StochasticMatrix { mat: p.mat.pow(t) }
}

/// Largest entrywise absolute difference between two same-shape matrices.
pub fn linf_distance(a: &StochasticMatrix, b: &StochasticMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(format!(
            "{} vs {}",
            a.dim(),
            b.dim()
        )));
    }
    Ok(a.mat.max_abs_diff(&b.mat))
}

/// `||A - B||_F / ||B||_F`.
pub fn frobenius_rel_error(a: &StochasticMatrix, b: &StochasticMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(format!(
            "{} vs {}",
            a.dim(),
            b.dim()
        )));
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in a.mat.as_slice().iter().zip(b.mat.as_slice()) {
        num += (x - y) * (x - y);
        den += y * y;
    }
    if den == 0.0 {
        return Err(Error::InvalidParam("reference matrix is all zeros".into()));
    }
    Ok((num / den).sqrt())
}
