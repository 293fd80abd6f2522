//! File formats: count CSVs, mask CSVs, and optimizer settings files.
//!
//! * Counts: `s` rows of `s` comma-separated nonnegative integers, no header.
//! * Mask: one line per state; either the single token `absorbing` (fixes
//!   the row to the identity row) or `s-1` tokens, each `free` or a decimal
//!   in `[0,1]`.
//! * Settings: `key = value` lines (`#` comments allowed); unknown keys are
//!   rejected, missing keys keep their defaults.

use crate::error::{Error, Result};
use crate::matrix::{CountMatrix, Mat, StochasticMatrix};
use crate::optimizer::OptimizerSettings;
use crate::params::{ConstraintMask, MaskEntry};

fn data_lines(text: &str) -> Vec<&str> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .collect()
}

pub fn parse_counts(text: &str) -> Result<CountMatrix> {
    let lines = data_lines(text);
    let mut rows = Vec::with_capacity(lines.len());
    for (i, line) in lines.iter().enumerate() {
        let row = line
            .split(',')
            .map(|tok| {
                tok.trim()
                    .parse::<u64>()
                    .map_err(|_| Error::Parse(format!("counts row {i}: bad entry {tok:?}")))
            })
            .collect::<Result<Vec<u64>>>()?;
        rows.push(row);
    }
    CountMatrix::new(&rows)
}

pub fn parse_mask(text: &str) -> Result<ConstraintMask> {
    let lines = data_lines(text);
    let s = lines.len();
    if s < 2 {
        return Err(Error::Parse(format!("mask needs at least 2 rows, got {s}")));
    }
    let mut rows = Vec::with_capacity(s);
    let mut absorbing = Vec::new();
    for (i, line) in lines.iter().enumerate() {
        if line.eq_ignore_ascii_case("absorbing") {
            // placeholder; rewritten below once s is known
            rows.push(vec![MaskEntry::Free; s - 1]);
            absorbing.push(i);
            continue;
        }
        let row = line
            .split(',')
            .map(|tok| {
                let tok = tok.trim();
                if tok.eq_ignore_ascii_case("free") {
                    Ok(MaskEntry::Free)
                } else {
                    tok.parse::<f64>().map(MaskEntry::Fixed).map_err(|_| {
                        Error::Parse(format!("mask row {i}: bad token {tok:?}"))
                    })
                }
            })
            .collect::<Result<Vec<MaskEntry>>>()?;
        if row.len() != s - 1 {
            return Err(Error::Parse(format!(
                "mask row {i}: expected {} tokens, got {}",
                s - 1,
                row.len()
            )));
        }
        rows.push(row);
    }
    let mut mask = ConstraintMask::new(rows)?;
    for i in absorbing {
        mask.set_absorbing(i);
    }
    Ok(mask)
}

/// Parses settings over a base (usually a study preset or the defaults);
/// file keys override base values, command-line flags override both.
pub fn parse_settings(text: &str, base: OptimizerSettings) -> Result<OptimizerSettings> {
    let mut out = base;
    for line in data_lines(text) {
        let (key, value) = line
            .split_once('=')
            .map(|(k, v)| (k.trim(), v.trim()))
            .ok_or_else(|| Error::Parse(format!("settings line without '=': {line:?}")))?;
        let parse_f = || {
            value
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("settings {key}: bad value {value:?}")))
        };
        let parse_u = || {
            value
                .parse::<u32>()
                .map_err(|_| Error::Parse(format!("settings {key}: bad value {value:?}")))
        };
        match key {
            "outer_rel_tol" => out.outer_rel_tol = parse_f()?,
            "inner_abs_tol" => out.inner_abs_tol = parse_f()?,
            "inner_rel_tol" => out.inner_rel_tol = parse_f()?,
            "barrier_mu" => out.barrier_mu = parse_f()?,
            "max_outer_iters" => out.max_outer_iters = parse_u()?,
            "max_inner_iters" => out.max_inner_iters = parse_u()?,
            other => return Err(Error::Parse(format!("unknown settings key {other:?}"))),
        }
    }
    if out.outer_rel_tol <= 0.0
        || out.inner_abs_tol <= 0.0
        || out.inner_rel_tol <= 0.0
        || out.barrier_mu <= 0.0
    {
        return Err(Error::Parse("tolerances and barrier_mu must be positive".into()));
    }
    Ok(out)
}

/// Stochastic matrix from a CSV of probabilities (used by `simulate`).
pub fn parse_probability_matrix(text: &str) -> Result<StochasticMatrix> {
    let lines = data_lines(text);
    let mut rows = Vec::with_capacity(lines.len());
    for (i, line) in lines.iter().enumerate() {
        let row = line
            .split(',')
            .map(|tok| {
                tok.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Parse(format!("matrix row {i}: bad entry {tok:?}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    StochasticMatrix::new(Mat::from_rows(&rows)?)
}

pub fn format_counts_csv(n: &CountMatrix) -> String {
    let s = n.dim();
    let mut out = String::new();
    for i in 0..s {
        let row: Vec<String> = (0..s).map(|j| n.get(i, j).to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn format_matrix_csv(m: &StochasticMatrix) -> String {
    let s = m.dim();
    let mut out = String::new();
    for i in 0..s {
        let row: Vec<String> = (0..s).map(|j| m.get(i, j).to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Fixed-width human-readable matrix block.
pub fn format_matrix_pretty(m: &Mat) -> String {
    let s = m.dim();
    let mut out = String::new();
    for i in 0..s {
        let row: Vec<String> = (0..s).map(|j| format!("{:>9.4}", m.get(i, j))).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_round_trip() {
        let text = "4494,1257,417,61\n0,1734,1214,36\n0,0,6724,2240\n0,0,0,0\n";
        let n = parse_counts(text).unwrap();
        assert_eq!(n.get(0, 0), 4494);
        assert_eq!(n.get(2, 3), 2240);
        assert_eq!(format_counts_csv(&n), text);
    }

    #[test]
    fn counts_rejects_negatives_and_garbage() {
        assert!(parse_counts("1,2\n-3,4\n").is_err());
        assert!(parse_counts("1,x\n3,4\n").is_err());
    }

    #[test]
    fn mask_with_absorbing_shorthand() {
        let text = "free,free,free\n0,free,free\n0,0,free\nabsorbing\n";
        let mask = parse_mask(text).unwrap();
        assert!(mask.is_free(0, 0));
        assert!(!mask.is_free(1, 0));
        assert_eq!(mask.fully_fixed_row(3), Some(vec![0.0, 0.0, 0.0]));
        assert_eq!(mask.n_free(), 6);
    }

    #[test]
    fn mask_absorbing_mid_row_uses_identity_row() {
        let text = "free,free\nabsorbing\nfree,free\n";
        let mask = parse_mask(text).unwrap();
        assert_eq!(mask.fully_fixed_row(1), Some(vec![0.0, 1.0]));
    }

    #[test]
    fn mask_wrong_arity_rejected() {
        assert!(parse_mask("free,free\nfree\nfree,free\n").is_err());
    }

    #[test]
    fn settings_override_and_validate() {
        let base = OptimizerSettings::default();
        let s = parse_settings("outer_rel_tol = 1e-13\nmax_inner_iters = 200\n# note\n", base)
            .unwrap();
        assert_eq!(s.outer_rel_tol, 1e-13);
        assert_eq!(s.max_inner_iters, 200);
        assert_eq!(s.inner_abs_tol, base.inner_abs_tol);
        assert!(parse_settings("bogus_key = 3\n", base).is_err());
        assert!(parse_settings("barrier_mu = 0\n", base).is_err());
    }

    #[test]
    fn probability_matrix_parses() {
        let p = parse_probability_matrix("0.5,0.5\n0.25,0.75\n").unwrap();
        assert_eq!(p.get(1, 0), 0.25);
        assert!(parse_probability_matrix("0.9,0.9\n0.5,0.5\n").is_err());
    }
}
