//! Synthetic panel-data generation for building test studies.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{Error, Result};
use crate::matrix::{matrix_power, CountMatrix, StochasticMatrix};

/// Draws one multinomial count row per state: row `i` gets `row_totals[i]`
/// transitions distributed over row `i` of `P^T`. Seeded and reproducible.
pub fn simulate_counts(
    p: &StochasticMatrix,
    t: u32,
    row_totals: &[u64],
    seed: u64,
) -> Result<CountMatrix> {
    let s = p.dim();
    if row_totals.len() != s {
        return Err(Error::DimensionMismatch(format!(
            "expected {s} row totals, got {}",
            row_totals.len()
        )));
    }
    let pt = matrix_power(p, t);
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(s);
    for (i, &total) in row_totals.iter().enumerate() {
        // conditional binomial decomposition of the multinomial draw
        let mut row = vec![0u64; s];
        let mut remaining = total;
        let mut mass_left = 1.0;
        for j in 0..s - 1 {
            if remaining == 0 {
                break;
            }
            let pj = pt.get(i, j).max(0.0);
            let cond = if mass_left > 0.0 { (pj / mass_left).clamp(0.0, 1.0) } else { 0.0 };
            let draw = Binomial::new(remaining, cond)
                .map_err(|e| Error::InvalidParam(format!("binomial draw: {e}")))?
                .sample(&mut rng);
            row[j] = draw;
            remaining -= draw;
            mass_left -= pj;
        }
        row[s - 1] = remaining;
        rows.push(row);
    }
    CountMatrix::new(&rows)
}
