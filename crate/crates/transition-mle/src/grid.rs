//! Simplex start grids for the multi-start search.
//!
//! Each row of Θ gets equally spaced interior points `k/g` (`k = 1..g-1`) in
//! its free coordinates, kept where the row remainder stays at least `1/g`
//! (strictly interior, so every start is admissible for the barrier method).
//! The full grid is the Cartesian product of the per-row point sets; rows
//! with no free coordinates contribute their single fixed point. Only the
//! per-row sets are materialized — full grids reach tens of millions of
//! points and are enumerated lazily in a fixed row-major order.

use crate::error::{Error, Result};
use crate::params::{ConstraintMask, MaskEntry, ThetaParam};

/// Start-grid specification: a mask plus per-row spacing denominators.
#[derive(Clone, Debug)]
pub struct GridSpec {
    mask: ConstraintMask,
    denominators: Vec<u32>,
    /// per-row free-coordinate value tuples
    row_points: Vec<Vec<Vec<f64>>>,
    /// suffix strides for row-major flat indexing
    strides: Vec<u64>,
    total: u64,
}

impl GridSpec {
    pub fn new(mask: ConstraintMask, denominators: Vec<u32>) -> Result<Self> {
        let s = mask.dim();
        if denominators.len() != s {
            return Err(Error::DimensionMismatch(format!(
                "expected {s} denominators, got {}",
                denominators.len()
            )));
        }
        if denominators.iter().any(|&g| g < 2) {
            return Err(Error::InvalidParam(
                "grid spacing denominators must be >= 2".into(),
            ));
        }
        let mut row_points = Vec::with_capacity(s);
        for i in 0..s {
            let pts = row_grid(&mask, i, denominators[i]);
            if pts.is_empty() {
                return Err(Error::InvalidParam(format!(
                    "row {i}: no feasible grid points at denominator {}",
                    denominators[i]
                )));
            }
            row_points.push(pts);
        }
        let mut strides = vec![1u64; s];
        let mut total: u64 = 1;
        for i in (0..s).rev() {
            strides[i] = total;
            total = total
                .checked_mul(row_points[i].len() as u64)
                .ok_or_else(|| Error::InvalidParam("grid size overflows u64".into()))?;
        }
        Ok(GridSpec { mask, denominators, row_points, strides, total })
    }

    pub fn mask(&self) -> &ConstraintMask {
        &self.mask
    }

    pub fn denominators(&self) -> &[u32] {
        &self.denominators
    }

    pub fn row_point_count(&self, i: usize) -> usize {
        self.row_points[i].len()
    }

    /// Total number of grid points `M`.
    pub fn total_points(&self) -> u64 {
        self.total
    }

    /// Decodes a flat index into the corresponding start point.
    pub fn point(&self, index: u64) -> ThetaParam {
        debug_assert!(index < self.total);
        let s = self.mask.dim();
        let mut theta = vec![0.0; s * (s - 1)];
        for i in 0..s {
            for j in 0..s - 1 {
                if let MaskEntry::Fixed(v) = self.mask.entry(i, j) {
                    theta[i * (s - 1) + j] = v;
                }
            }
        }
        for i in 0..s {
            let choice = ((index / self.strides[i]) % self.row_points[i].len() as u64) as usize;
            let values = &self.row_points[i][choice];
            let mut vi = 0;
            for j in 0..s - 1 {
                if self.mask.is_free(i, j) {
                    theta[i * (s - 1) + j] = values[vi];
                    vi += 1;
                }
            }
        }
        ThetaParam::new(s, theta).expect("grid points are valid by construction")
    }

    /// Lazy enumeration in deterministic row-major order.
    pub fn iter(&self) -> GridIter<'_> {
        GridIter { spec: self, next: 0 }
    }
}

/// Free-coordinate tuples for one row: values `k/g`, each coordinate in the
/// open unit interval, row remainder at least `1/g` after fixed entries.
fn row_grid(mask: &ConstraintMask, i: usize, g: u32) -> Vec<Vec<f64>> {
    let f = mask.row_free_count(i);
    if f == 0 {
        return vec![Vec::new()];
    }
    let fixed = mask.row_fixed_sum(i);
    let g_f = g as f64;
    let mut out = Vec::new();
    let mut ks = vec![1u32; f];
    'outer: loop {
        let sum: u32 = ks.iter().sum();
        let remainder = 1.0 - fixed - sum as f64 / g_f;
        if remainder >= 1.0 / g_f - 1e-9 {
            out.push(ks.iter().map(|&k| k as f64 / g_f).collect());
        }
        // odometer
        let mut pos = f;
        loop {
            if pos == 0 {
                break 'outer;
            }
            pos -= 1;
            ks[pos] += 1;
            if ks[pos] <= g - 1 {
                break;
            }
            ks[pos] = 1;
        }
    }
    out
}

pub struct GridIter<'a> {
    spec: &'a GridSpec,
    next: u64,
}

impl Iterator for GridIter<'_> {
    type Item = ThetaParam;

    fn next(&mut self) -> Option<ThetaParam> {
        if self.next >= self.spec.total {
            return None;
        }
        let p = self.spec.point(self.next);
        self.next += 1;
        Some(p)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.spec.total - self.next) as usize;
        (left, Some(left))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn two_state_hand_enumeration() {
        let spec = GridSpec::new(ConstraintMask::unconstrained(2), vec![4, 4]).unwrap();
        assert_eq!(spec.row_point_count(0), 3); // {.25, .5, .75}
        assert_eq!(spec.total_points(), 9);
        let points: Vec<_> = spec.iter().collect();
        assert_eq!(points.len(), 9);
        assert_eq!(points[0].get(0, 0), 0.25);
        assert_eq!(points[8].get(1, 0), 0.75);
    }

    #[test]
    fn three_state_row_counts() {
        // two free coordinates per row: C(g-1, 2) interior points
        let spec = GridSpec::new(ConstraintMask::unconstrained(3), vec![21, 21, 21]).unwrap();
        assert_eq!(spec.row_point_count(0), 190);
        assert_eq!(spec.total_points(), 6_859_000);
        let spec8 = GridSpec::new(ConstraintMask::unconstrained(3), vec![8, 8, 8]).unwrap();
        assert_eq!(spec8.row_point_count(0), 21);
        assert_eq!(spec8.total_points(), 9_261);
    }

    #[test]
    fn four_state_row_counts() {
        let spec = GridSpec::new(ConstraintMask::unconstrained(4), vec![9, 9, 9, 9]).unwrap();
        assert_eq!(spec.row_point_count(0), 56);
        assert_eq!(spec.total_points(), 9_834_496);
    }

    #[test]
    fn five_state_row_counts() {
        let mut mask = ConstraintMask::unconstrained(5);
        mask.set_absorbing(4);
        let spec = GridSpec::new(mask, vec![9, 9, 9, 9, 9]).unwrap();
        assert_eq!(spec.row_point_count(0), 70);
        assert_eq!(spec.row_point_count(4), 1);
        assert_eq!(spec.total_points(), 24_010_000);
    }

    #[test]
    fn constrained_rows_reproduce_mixed_grid() {
        use MaskEntry::*;
        let mut mask = ConstraintMask::new(vec![
            vec![Free, Free, Free],
            vec![Fixed(0.0), Free, Free],
            vec![Fixed(0.0), Fixed(0.0), Free],
            vec![Free, Free, Free],
        ])
        .unwrap();
        mask.set_absorbing(3);
        let spec = GridSpec::new(mask, vec![21, 21, 21, 21]).unwrap();
        assert_eq!(spec.row_point_count(0), 1140); // C(20, 3)
        assert_eq!(spec.row_point_count(1), 190); // C(20, 2)
        assert_eq!(spec.row_point_count(2), 20);
        assert_eq!(spec.row_point_count(3), 1);
        assert_eq!(spec.total_points(), 4_332_000);
    }

    #[test]
    fn fully_fixed_grid_is_single_point() {
        use MaskEntry::*;
        let mask =
            ConstraintMask::new(vec![vec![Fixed(0.5)], vec![Fixed(0.25)]]).unwrap();
        let spec = GridSpec::new(mask, vec![4, 4]).unwrap();
        assert_eq!(spec.total_points(), 1);
        let p = spec.iter().next().unwrap();
        assert_eq!(p.get(0, 0), 0.5);
        assert_eq!(p.get(1, 0), 0.25);
    }

    #[test]
    fn every_point_visited_exactly_once() {
        let spec = GridSpec::new(ConstraintMask::unconstrained(3), vec![6, 5, 7]).unwrap();
        let mut seen = HashSet::new();
        let mut count = 0u64;
        for p in spec.iter() {
            let key: Vec<u64> = p.as_slice().iter().map(|v| v.to_bits()).collect();
            assert!(seen.insert(key), "duplicate grid point");
            count += 1;
        }
        assert_eq!(count, spec.total_points());
        // indexed access agrees with iteration order
        assert_eq!(spec.point(0).as_slice(), spec.iter().next().unwrap().as_slice());
    }

    #[test]
    fn points_are_strictly_interior() {
        let spec = GridSpec::new(ConstraintMask::unconstrained(3), vec![8, 8, 8]).unwrap();
        for p in spec.iter() {
            for i in 0..3 {
                let mut sum = 0.0;
                for j in 0..2 {
                    assert!(p.get(i, j) > 0.0);
                    sum += p.get(i, j);
                }
                assert!(sum < 1.0 - 1e-12, "row sum {sum} not strictly interior");
            }
        }
    }

    #[test]
    fn denominator_validation() {
        assert!(GridSpec::new(ConstraintMask::unconstrained(3), vec![1, 8, 8]).is_err());
        assert!(GridSpec::new(ConstraintMask::unconstrained(3), vec![8, 8]).is_err());
    }
}
