//! Regression anchors and cross-operation consistency checks beyond the
//! per-module unit tests.

use transition_mle::fixtures;
use transition_mle::likelihood::{d_power_d_theta, gradient, log_likelihood};
use transition_mle::matrix::matrix_power;
use transition_mle::params::{theta_to_matrix, ThetaParam};
use transition_mle::{maximize, ConstraintMask, CountMatrix, LikelihoodContext};

/// Log-likelihood of the study2 context at the published maximizer, frozen
/// at its first computation. Guards the whole likelihood path (matrix
/// powers, remainder handling, zero-count conventions).
const STUDY2_LOGLIK_AT_PRINTED: f64 = -12202.641316992660;

fn study2_printed_theta() -> ThetaParam {
    ThetaParam::from_rows(&[
        vec![0.973, 0.025, 0.002],
        vec![0.0, 0.956, 0.044],
        vec![0.0, 0.0, 0.978],
        vec![0.0, 0.0, 0.0],
    ])
    .unwrap()
}

#[test]
fn study2_loglik_anchor_at_printed_maximizer() {
    let fixture = fixtures::by_name("study2").unwrap();
    let ctx = fixture.context(12).unwrap();
    let ll = log_likelihood(&ctx, &study2_printed_theta());
    assert!(
        (ll - STUDY2_LOGLIK_AT_PRINTED).abs() < 1e-6,
        "anchor drifted: {ll}"
    );
}

#[test]
fn study2_single_start_reaches_the_plateau() {
    // any interior start lands within 1e-3 relative of the anchor and
    // within .005 of the printed maximizer entries
    let fixture = fixtures::by_name("study2").unwrap();
    let ctx = fixture.context(12).unwrap();
    let start = ThetaParam::from_rows(&[
        vec![0.7, 0.1, 0.05],
        vec![0.0, 0.5, 0.2],
        vec![0.0, 0.0, 0.6],
        vec![0.0, 0.0, 0.0],
    ])
    .unwrap();
    let rec = maximize(&ctx, &start, &fixture.settings(12), 0);
    assert!(rec.converged());
    let rel = (rec.loglik - STUDY2_LOGLIK_AT_PRINTED).abs() / STUDY2_LOGLIK_AT_PRINTED.abs();
    assert!(rel < 1e-3, "relative loglik gap {rel}");
    let printed = study2_printed_theta();
    assert!(
        rec.theta_final.max_abs_diff(&printed) < 5e-3,
        "θ deviates {}",
        rec.theta_final.max_abs_diff(&printed)
    );
}

#[test]
fn study5_reoptimized_gradient_matches_printed_row() {
    // the printed maximizer sits on the boundary; re-optimize from a nearby
    // interior point, then compare the first-row gradient entries
    let fixture = fixtures::by_name("study5").unwrap();
    let ctx = fixture.context(2).unwrap();
    let printed = fixture.expected_maximizer(2).unwrap();
    let s = ctx.dim();
    let mut theta = Vec::new();
    for row in printed.iter().take(s) {
        for &v in &row[..s - 1] {
            // pull strictly inside the simplex
            theta.push(v * 0.98 + 0.005);
        }
    }
    let start = ThetaParam::new(s, theta).unwrap();
    let rec = maximize(&ctx, &start, &fixture.settings(2), 0);
    assert!(rec.converged());
    let g = gradient(&ctx, &rec.theta_final).unwrap();
    for (j, expected) in [491.270, 491.270].into_iter().enumerate() {
        let got = g.get(0, j);
        assert!(
            (got - expected).abs() / expected < 0.01,
            "(0,{j}): {got} vs {expected}"
        );
    }
}

#[test]
fn loglik_invariant_under_state_relabeling() {
    let n = CountMatrix::new(&[vec![30, 10, 5], vec![4, 40, 6], vec![7, 3, 50]]).unwrap();
    let theta = ThetaParam::from_rows(&[vec![0.5, 0.2], vec![0.1, 0.6], vec![0.3, 0.3]]).unwrap();
    let mask = ConstraintMask::unconstrained(3);
    let ctx = LikelihoodContext::new(n, 3, mask.clone()).unwrap();
    let base = log_likelihood(&ctx, &theta);

    // permute states by sigma = (1 2 0): relabel counts and the full P alike
    let sigma = [1usize, 2, 0];
    let p = theta_to_matrix(&theta, &mask).unwrap();
    let mut n_perm = vec![vec![0u64; 3]; 3];
    let mut p_perm = vec![vec![0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            n_perm[sigma[i]][sigma[j]] = ctx.counts().get(i, j);
            p_perm[sigma[i]][sigma[j]] = p.get(i, j);
        }
    }
    let theta_perm =
        ThetaParam::from_rows(&[p_perm[0][..2].to_vec(), p_perm[1][..2].to_vec(), p_perm[2][..2].to_vec()])
            .unwrap();
    let ctx_perm = LikelihoodContext::new(
        CountMatrix::new(&n_perm).unwrap(),
        3,
        ConstraintMask::unconstrained(3),
    )
    .unwrap();
    let permuted = log_likelihood(&ctx_perm, &theta_perm);
    assert!(
        (base - permuted).abs() < 1e-9,
        "relabeling changed the log-likelihood: {base} vs {permuted}"
    );
}

#[test]
fn gradient_ascent_step_does_not_decrease_loglik() {
    let n = CountMatrix::new(&[vec![12, 30, 8], vec![25, 9, 16], vec![5, 11, 44]]).unwrap();
    let mask = ConstraintMask::unconstrained(3);
    let ctx = LikelihoodContext::new(n, 4, mask).unwrap();
    let theta = ThetaParam::from_rows(&[vec![0.4, 0.3], vec![0.2, 0.5], vec![0.25, 0.25]]).unwrap();
    let f0 = log_likelihood(&ctx, &theta);
    let g = gradient(&ctx, &theta).unwrap();
    // exact line search along the gradient by bisection on step size
    let eval = |alpha: f64| {
        let stepped: Vec<f64> = theta
            .as_slice()
            .iter()
            .zip(g.as_slice())
            .map(|(t, d)| t + alpha * d)
            .collect();
        match ThetaParam::new(3, stepped) {
            Ok(t) => log_likelihood(&ctx, &t),
            Err(_) => f64::NEG_INFINITY,
        }
    };
    let best = (0..60)
        .map(|k| eval(1e-8 * 1.5f64.powi(k)))
        .fold(f64::NEG_INFINITY, f64::max);
    assert!(best >= f0 - 1e-9, "line search decreased: {best} < {f0}");
}

#[test]
fn gradient_agrees_with_per_entry_power_derivatives() {
    // Eq-by-entry assembly: grad(u,v) = Σ_ij w_ij ∂(P^T)_ij/∂θ_uv
    let n = CountMatrix::new(&[vec![14, 3, 9], vec![2, 21, 7], vec![11, 6, 17]]).unwrap();
    let mask = ConstraintMask::unconstrained(3);
    let ctx = LikelihoodContext::new(n.clone(), 5, mask.clone()).unwrap();
    let theta = ThetaParam::from_rows(&[vec![0.3, 0.25], vec![0.15, 0.5], vec![0.2, 0.4]]).unwrap();
    let g = gradient(&ctx, &theta).unwrap();

    let p = theta_to_matrix(&theta, &mask).unwrap();
    let pt = matrix_power(&p, 5);
    let s = 3;
    for u in 0..s {
        for v in 0..s - 1 {
            let d = d_power_d_theta(&p, 5, u, v).unwrap();
            let mut acc = 0.0;
            for i in 0..s {
                let rem: f64 = 1.0 - (0..s - 1).map(|j| pt.get(i, j)).sum::<f64>();
                for j in 0..s - 1 {
                    let mut w = 0.0;
                    if n.get(i, j) > 0 {
                        w += n.get(i, j) as f64 / pt.get(i, j);
                    }
                    if n.get(i, s - 1) > 0 {
                        w -= n.get(i, s - 1) as f64 / rem;
                    }
                    acc += w * d.get(i, j);
                }
            }
            let rel = (g.get(u, v) - acc).abs() / acc.abs().max(1.0);
            assert!(rel < 1e-10, "({u},{v}): {} vs {acc}", g.get(u, v));
        }
    }
}
