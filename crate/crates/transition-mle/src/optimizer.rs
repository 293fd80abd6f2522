//! Log-barrier quasi-Newton maximization of the panel log-likelihood.
//!
//! The feasible region is `θ_ij >= 0` per free entry and `Σ_j θ_ij <= 1` per
//! row. A logarithmic barrier keeps iterates strictly interior; outer
//! iterations divide the barrier weight by ten so the objective approaches
//! the raw log-likelihood. Inside each outer iteration, BFGS ascent with a
//! backtracking sufficient-increase line search runs until the objective
//! change falls below the inner tolerances.

use crate::likelihood::{gradient_slice, loglik_slice, EvalWorkspace, LikelihoodContext};
use crate::params::ThetaParam;

/// Factor dividing the barrier weight at each outer iteration.
pub const BARRIER_REDUCTION: f64 = 10.0;

/// Convergence tolerances and iteration caps.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptimizerSettings {
    /// Outer loop stops when the relative change in the barrier-free
    /// log-likelihood between outer iterations falls below this.
    pub outer_rel_tol: f64,
    /// Inner BFGS stops when the absolute objective change falls below this.
    pub inner_abs_tol: f64,
    /// ... or when the relative change `|Δf| / (|f| + inner_abs_tol)` does.
    pub inner_rel_tol: f64,
    /// Initial barrier weight.
    pub barrier_mu: f64,
    pub max_outer_iters: u32,
    pub max_inner_iters: u32,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        OptimizerSettings {
            outer_rel_tol: 1e-10,
            inner_abs_tol: 1e-8,
            inner_rel_tol: 1e-8,
            barrier_mu: 1e-4,
            max_outer_iters: 100,
            max_inner_iters: 500,
        }
    }
}

impl OptimizerSettings {
    pub fn with_tolerances(outer: f64, inner_abs: f64, inner_rel: f64) -> Self {
        OptimizerSettings {
            outer_rel_tol: outer,
            inner_abs_tol: inner_abs,
            inner_rel_tol: inner_rel,
            ..Default::default()
        }
    }
}

/// Terminal state of one optimization run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Converged,
    /// Objective or gradient became nonfinite at an accepted iterate; the
    /// record keeps the last finite point.
    FailedNonfinite,
    MaxIters,
}

/// Outcome of one grid start.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRecord {
    pub start_id: u64,
    pub theta_final: ThetaParam,
    /// Barrier-free log-likelihood at the terminal point.
    pub loglik: f64,
    /// L-infinity norm of the barrier-free gradient (fixed entries zeroed);
    /// NaN when the gradient is undefined at the terminal point.
    pub grad_linf: f64,
    pub status: Status,
    pub outer_iters: u32,
}

impl ConvergenceRecord {
    pub fn converged(&self) -> bool {
        self.status == Status::Converged
    }
}

/// Barrier-augmented objective: `l(P(θ)) + mu * [Σ_free ln θ_ij + Σ_row ln(1 - Σ_j θ_ij)]`.
///
/// Barrier sums run over free coordinates and over rows containing at least
/// one free coordinate; fully fixed rows contribute constants and are
/// omitted. Returns `-inf` outside the open feasible region.
pub fn barrier_objective(ctx: &LikelihoodContext, theta: &ThetaParam, mu: f64) -> f64 {
    let mut ws = EvalWorkspace::new(ctx.dim(), ctx.cycles());
    let packed = Packed::new(ctx);
    let x = packed.pack(theta.as_slice());
    packed.barrier_value(ctx, &x, mu, &mut ws, &mut theta.as_slice().to_vec())
}

/// Free-coordinate packing for one mask: the optimizer works on the packed
/// vector; fixed entries never change.
struct Packed {
    s: usize,
    free: Vec<(usize, usize)>,
    /// rows owning at least one free coordinate
    barrier_rows: Vec<usize>,
    /// per-row fixed partial sums
    fixed_row_sum: Vec<f64>,
    template: Vec<f64>,
}

impl Packed {
    fn new(ctx: &LikelihoodContext) -> Self {
        let s = ctx.dim();
        let mask = ctx.mask();
        let free = mask.free_positions();
        let mut barrier_rows: Vec<usize> = free.iter().map(|&(i, _)| i).collect();
        barrier_rows.dedup();
        let fixed_row_sum = (0..s).map(|i| mask.row_fixed_sum(i)).collect();
        let mut template = vec![0.0; s * (s - 1)];
        for i in 0..s {
            for j in 0..s - 1 {
                if let crate::params::MaskEntry::Fixed(v) = mask.entry(i, j) {
                    template[i * (s - 1) + j] = v;
                }
            }
        }
        Packed { s, free, barrier_rows, fixed_row_sum, template }
    }

    fn pack(&self, theta: &[f64]) -> Vec<f64> {
        self.free.iter().map(|&(i, j)| theta[i * (self.s - 1) + j]).collect()
    }

    fn unpack_into(&self, x: &[f64], theta: &mut [f64]) {
        theta.copy_from_slice(&self.template);
        for (k, &(i, j)) in self.free.iter().enumerate() {
            theta[i * (self.s - 1) + j] = x[k];
        }
    }

    /// Barrier objective at packed `x`; `theta` is scratch.
    fn barrier_value(
        &self,
        ctx: &LikelihoodContext,
        x: &[f64],
        mu: f64,
        ws: &mut EvalWorkspace,
        theta: &mut Vec<f64>,
    ) -> f64 {
        self.unpack_into(x, theta);
        let mut bar = 0.0;
        for &v in x {
            if v <= 0.0 {
                return f64::NEG_INFINITY;
            }
            bar += v.ln();
        }
        for &i in &self.barrier_rows {
            let mut sum = self.fixed_row_sum[i];
            for (k, &(fi, _)) in self.free.iter().enumerate() {
                if fi == i {
                    sum += x[k];
                }
            }
            let slack = 1.0 - sum;
            if slack <= 0.0 {
                return f64::NEG_INFINITY;
            }
            bar += slack.ln();
        }
        let ll = loglik_slice(ctx, theta, ws);
        if ll.is_finite() {
            ll + mu * bar
        } else {
            f64::NEG_INFINITY
        }
    }

    /// Barrier gradient at packed `x` into `gx`; false when nonfinite.
    fn barrier_grad(
        &self,
        ctx: &LikelihoodContext,
        x: &[f64],
        mu: f64,
        ws: &mut EvalWorkspace,
        theta: &mut Vec<f64>,
        grad_full: &mut Vec<f64>,
        gx: &mut [f64],
    ) -> bool {
        self.unpack_into(x, theta);
        if !gradient_slice(ctx, theta, ws, grad_full) {
            return false;
        }
        let mut slack = vec![0.0; self.s];
        for &i in &self.barrier_rows {
            let mut sum = self.fixed_row_sum[i];
            for (k, &(fi, _)) in self.free.iter().enumerate() {
                if fi == i {
                    sum += x[k];
                }
            }
            slack[i] = 1.0 - sum;
        }
        let mut ok = true;
        for (k, &(i, j)) in self.free.iter().enumerate() {
            let g = grad_full[i * (self.s - 1) + j] + mu * (1.0 / x[k] - 1.0 / slack[i]);
            if !g.is_finite() {
                ok = false;
            }
            gx[k] = g;
        }
        ok
    }
}

/// Dense BFGS inverse-curvature state for a handful of parameters.
struct Bfgs {
    d: usize,
    h: Vec<f64>, // d x d, row-major
}

impl Bfgs {
    fn identity(d: usize) -> Self {
        let mut h = vec![0.0; d * d];
        for i in 0..d {
            h[i * d + i] = 1.0;
        }
        Bfgs { d, h }
    }

    fn reset(&mut self) {
        self.h.fill(0.0);
        for i in 0..self.d {
            self.h[i * self.d + i] = 1.0;
        }
    }

    fn scale(&mut self, c: f64) {
        for v in &mut self.h {
            *v *= c;
        }
    }

    fn apply(&self, g: &[f64], out: &mut [f64]) {
        for i in 0..self.d {
            let row = &self.h[i * self.d..(i + 1) * self.d];
            out[i] = row.iter().zip(g).map(|(a, b)| a * b).sum();
        }
    }

    /// Rank-two update in minimization form: `s = Δx`, `y = Δ(-g)`.
    fn update(&mut self, s: &[f64], y: &[f64]) {
        let d = self.d;
        let sy: f64 = s.iter().zip(y).map(|(a, b)| a * b).sum();
        let s_norm: f64 = s.iter().map(|v| v * v).sum::<f64>().sqrt();
        let y_norm: f64 = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if sy <= 1e-12 * s_norm * y_norm {
            return; // curvature too weak; keep previous H
        }
        let rho = 1.0 / sy;
        // H <- (I - rho s y') H (I - rho y s') + rho s s'
        let mut hy = vec![0.0; d];
        for i in 0..d {
            hy[i] = (0..d).map(|j| self.h[i * d + j] * y[j]).sum();
        }
        let yhy: f64 = y.iter().zip(&hy).map(|(a, b)| a * b).sum();
        // expanded form: H - rho (s hy' + hy s') + rho^2 yhy s s' + rho s s'
        for i in 0..d {
            for j in 0..d {
                self.h[i * d + j] += -rho * (s[i] * hy[j] + hy[i] * s[j])
                    + (rho * rho * yhy + rho) * s[i] * s[j];
            }
        }
    }
}

const ARMIJO_C1: f64 = 1e-4;
const MAX_BACKTRACKS: u32 = 60;

/// Maximizes the log-likelihood from a strictly interior start via the
/// barrier method. Nonfinite objectives or gradients at accepted iterates
/// yield [`Status::FailedNonfinite`] with the last finite point retained;
/// the search as a whole is never aborted by one bad start.
pub fn maximize(
    ctx: &LikelihoodContext,
    start: &ThetaParam,
    settings: &OptimizerSettings,
    start_id: u64,
) -> ConvergenceRecord {
    let s = ctx.dim();
    let packed = Packed::new(ctx);
    let d = packed.free.len();
    let mut ws = EvalWorkspace::new(s, ctx.cycles());
    let mut theta_scratch = vec![0.0; s * (s - 1)];
    let mut grad_full = vec![0.0; s * (s - 1)];

    let mut x = packed.pack(start.as_slice());
    let finish = |x: &[f64], status: Status, outer: u32, ws: &mut EvalWorkspace| {
        let mut theta = vec![0.0; s * (s - 1)];
        packed.unpack_into(x, &mut theta);
        let loglik = loglik_slice(ctx, &theta, ws);
        let mut gfull = vec![0.0; s * (s - 1)];
        let grad_linf = if gradient_slice(ctx, &theta, ws, &mut gfull) {
            gfull.iter().map(|v| v.abs()).fold(0.0, f64::max)
        } else {
            f64::NAN
        };
        ConvergenceRecord {
            start_id,
            theta_final: ThetaParam::new(s, theta)
                .unwrap_or_else(|_| start.clone()),
            loglik,
            grad_linf,
            status,
            outer_iters: outer,
        }
    };

    // degenerate fully fixed problem: nothing to optimize
    if d == 0 {
        return finish(&x, Status::Converged, 0, &mut ws);
    }

    let mut mu = settings.barrier_mu;
    let mut prev_ll: Option<f64> = None;
    let mut bfgs = Bfgs::identity(d);
    let mut g = vec![0.0; d];
    let mut dir = vec![0.0; d];
    let mut xn = vec![0.0; d];
    let mut gn = vec![0.0; d];

    for outer in 1..=settings.max_outer_iters {
        // ---- inner BFGS ascent at fixed mu ----
        let mut f = packed.barrier_value(ctx, &x, mu, &mut ws, &mut theta_scratch);
        if !f.is_finite() {
            return finish(&x, Status::FailedNonfinite, outer, &mut ws);
        }
        if !packed.barrier_grad(ctx, &x, mu, &mut ws, &mut theta_scratch, &mut grad_full, &mut g) {
            return finish(&x, Status::FailedNonfinite, outer, &mut ws);
        }
        bfgs.reset();
        let mut first_step = true;
        for _inner in 0..settings.max_inner_iters {
            bfgs.apply(&g, &mut dir);
            let mut gd: f64 = g.iter().zip(&dir).map(|(a, b)| a * b).sum();
            if gd <= 0.0 {
                bfgs.reset();
                dir.copy_from_slice(&g);
                gd = g.iter().map(|v| v * v).sum();
                if gd == 0.0 {
                    break; // exact stationary point
                }
            }
            // backtracking line search with feasibility rejection built in
            let mut alpha = 1.0;
            let mut accepted = false;
            let mut fn_val = f;
            for _ in 0..MAX_BACKTRACKS {
                for k in 0..d {
                    xn[k] = x[k] + alpha * dir[k];
                }
                let cand = packed.barrier_value(ctx, &xn, mu, &mut ws, &mut theta_scratch);
                if cand.is_finite() && cand >= f + ARMIJO_C1 * alpha * gd {
                    fn_val = cand;
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if !accepted {
                break; // no admissible step; treat as converged at x
            }
            if !packed.barrier_grad(ctx, &xn, mu, &mut ws, &mut theta_scratch, &mut grad_full, &mut gn) {
                return finish(&xn, Status::FailedNonfinite, outer, &mut ws);
            }
            // minimization-form curvature pair: s = Δx, y = -(g_new - g_old)
            let step: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
            let y: Vec<f64> = g.iter().zip(&gn).map(|(a, b)| a - b).collect();
            if first_step {
                let sy: f64 = step.iter().zip(&y).map(|(a, b)| a * b).sum();
                let yy: f64 = y.iter().map(|v| v * v).sum();
                if sy > 0.0 && yy > 0.0 {
                    bfgs.scale(sy / yy);
                }
                first_step = false;
            }
            bfgs.update(&step, &y);
            let df = (fn_val - f).abs();
            x.copy_from_slice(&xn);
            g.copy_from_slice(&gn);
            f = fn_val;
            if df < settings.inner_abs_tol
                || df < settings.inner_rel_tol * (f.abs() + settings.inner_abs_tol)
            {
                break;
            }
        }

        // ---- outer convergence on the barrier-free log-likelihood ----
        packed.unpack_into(&x, &mut theta_scratch);
        let ll = loglik_slice(ctx, &theta_scratch, &mut ws);
        if !ll.is_finite() {
            return finish(&x, Status::FailedNonfinite, outer, &mut ws);
        }
        if let Some(prev) = prev_ll {
            if (ll - prev).abs() < settings.outer_rel_tol * (ll.abs() + settings.outer_rel_tol) {
                return finish(&x, Status::Converged, outer, &mut ws);
            }
        }
        prev_ll = Some(ll);
        mu /= BARRIER_REDUCTION;
    }
    finish(&x, Status::MaxIters, settings.max_outer_iters, &mut ws)
}
