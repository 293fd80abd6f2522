//! Multinomial log-likelihood in the Θ parameterization and its analytic
//! gradient through matrix powers.
//!
//! Transitions are observed over intervals of `T` cycles, so counts inform
//! `P^T` rather than `P`. The log-likelihood is
//!
//! ```text
//! l(P) = Σ_i Σ_{j<s} n_ij ln (P^T)_ij + Σ_i n_is ln(1 - Σ_{j<s} (P^T)_ij)
//! ```
//!
//! and the gradient chains through `∂P^T/∂θ_uv = Σ_k P^{k-1} E_uv P^{T-k}`
//! with `E_uv = e_u (e_v - e_s)^T`. One power table `P^0..P^T` per gradient
//! evaluation serves every `(u,v)`.

use crate::error::{Error, Result};
use crate::matrix::{CountMatrix, Mat, StochasticMatrix};
use crate::params::{ConstraintMask, ThetaParam};

/// Values below this are treated as log-domain zero; the barrier method
/// interprets the resulting `-inf` as infeasible.
const LOG_FLOOR: f64 = 1e-300;

#[inline]
fn safe_ln(x: f64) -> f64 {
    if x < LOG_FLOOR {
        f64::NEG_INFINITY
    } else {
        x.ln()
    }
}

/// Immutable data for one estimation problem: counts, observation interval,
/// and structural constraints. Shared freely across concurrent workers.
#[derive(Clone, Debug)]
pub struct LikelihoodContext {
    n: CountMatrix,
    t: u32,
    mask: ConstraintMask,
    counts: Vec<f64>, // n as f64, row-major s*s
}

impl LikelihoodContext {
    pub fn new(n: CountMatrix, t: u32, mask: ConstraintMask) -> Result<Self> {
        if t < 1 {
            return Err(Error::InvalidParam("observation interval T must be >= 1".into()));
        }
        if n.dim() != mask.dim() {
            return Err(Error::DimensionMismatch(format!(
                "counts {} vs mask {}",
                n.dim(),
                mask.dim()
            )));
        }
        let s = n.dim();
        let counts = (0..s * s).map(|k| n.get(k / s, k % s) as f64).collect();
        Ok(LikelihoodContext { n, t, mask, counts })
    }

    pub fn dim(&self) -> usize {
        self.n.dim()
    }

    pub fn cycles(&self) -> u32 {
        self.t
    }

    pub fn counts(&self) -> &CountMatrix {
        &self.n
    }

    pub fn mask(&self) -> &ConstraintMask {
        &self.mask
    }

    #[inline]
    fn count(&self, i: usize, j: usize) -> f64 {
        self.counts[i * self.dim() + j]
    }
}

/// Reusable buffers for likelihood and gradient evaluation. One instance per
/// optimizer run keeps the hot loop allocation-free.
#[derive(Clone, Debug)]
pub struct EvalWorkspace {
    p: Mat,
    pt: Mat,
    pow_scratch: (Mat, Mat),
    pows: Vec<Mat>,
    w: Mat,
    m: Mat,
    tmp: Mat,
}

impl EvalWorkspace {
    pub fn new(s: usize, _t: u32) -> Self {
        EvalWorkspace {
            p: Mat::zeros(s),
            pt: Mat::zeros(s),
            pow_scratch: (Mat::zeros(s), Mat::zeros(s)),
            pows: Vec::new(), // grown on first gradient evaluation
            w: Mat::zeros(s),
            m: Mat::zeros(s),
            tmp: Mat::zeros(s),
        }
    }
}

/// Fills `ws.p` with `[Θ | 1 - Θ·1]` from a packed row-major θ slice.
fn fill_p(s: usize, theta: &[f64], p: &mut Mat) {
    for i in 0..s {
        let mut sum = 0.0;
        for j in 0..s - 1 {
            let v = theta[i * (s - 1) + j];
            p.set(i, j, v);
            sum += v;
        }
        p.set(i, s - 1, 1.0 - sum);
    }
}

/// Core evaluation on a packed θ slice. `-inf` signals a zero probability
/// against a positive count; terms with `n = 0` contribute nothing.
pub(crate) fn loglik_slice(ctx: &LikelihoodContext, theta: &[f64], ws: &mut EvalWorkspace) -> f64 {
    let s = ctx.dim();
    fill_p(s, theta, &mut ws.p);
    ws.p.pow_into(ctx.t, &mut ws.pt, &mut ws.pow_scratch);
    let mut ll = 0.0;
    for i in 0..s {
        let mut lead = 0.0;
        for j in 0..s - 1 {
            let ptij = ws.pt.get(i, j);
            lead += ptij;
            let n = ctx.count(i, j);
            if n > 0.0 {
                ll += n * safe_ln(ptij);
            }
        }
        let n_last = ctx.count(i, s - 1);
        if n_last > 0.0 {
            ll += n_last * safe_ln(1.0 - lead);
        }
    }
    ll
}

/// Gradient on a packed θ slice, written to `out` (length `s*(s-1)`), with
/// fixed mask positions zeroed. Returns `false` if any intermediate is
/// nonfinite (boundary evaluation).
pub(crate) fn gradient_slice(
    ctx: &LikelihoodContext,
    theta: &[f64],
    ws: &mut EvalWorkspace,
    out: &mut [f64],
) -> bool {
    let s = ctx.dim();
    let t = ctx.t as usize;
    fill_p(s, theta, &mut ws.p);
    // successive power table P^0..P^T
    if ws.pows.len() < t + 1 {
        ws.pows.resize_with(t + 1, || Mat::zeros(s));
    }
    ws.pows[0].set_identity();
    for k in 1..=t {
        let (lo, hi) = ws.pows.split_at_mut(k);
        lo[k - 1].mul_into(&ws.p, &mut hi[0]);
    }
    let pt = &ws.pows[t];

    // weight matrix: w_ij = n_ij/(P^T)_ij - n_is/rem_i for j < s-1
    let mut finite = true;
    for i in 0..s {
        let mut lead = 0.0;
        for j in 0..s - 1 {
            lead += pt.get(i, j);
        }
        let rem = 1.0 - lead;
        let n_last = ctx.count(i, s - 1);
        let tail = if n_last > 0.0 { n_last / rem } else { 0.0 };
        for j in 0..s - 1 {
            let n = ctx.count(i, j);
            let head = if n > 0.0 { n / pt.get(i, j) } else { 0.0 };
            let w = head - tail;
            if !w.is_finite() {
                finite = false;
            }
            ws.w.set(i, j, w);
        }
        ws.w.set(i, s - 1, 0.0);
        if n_last > 0.0 && !tail.is_finite() {
            finite = false;
        }
    }
    if !finite {
        return false;
    }

    // M = Σ_{k=1..T} (P^{k-1})' W (P^{T-k})'; grad(u,v) = M_uv - M_u,s-1
    ws.m.fill(0.0);
    for k in 1..=t {
        mul_wbt(&ws.w, &ws.pows[t - k], &mut ws.tmp, s); // tmp = W (P^{T-k})'
        acc_atb(&ws.pows[k - 1], &ws.tmp, &mut ws.m, s); // M += (P^{k-1})' tmp
    }
    for i in 0..s {
        let last = ws.m.get(i, s - 1);
        for j in 0..s - 1 {
            let g = if ctx.mask.is_free(i, j) {
                ws.m.get(i, j) - last
            } else {
                0.0
            };
            if !g.is_finite() {
                finite = false;
            }
            out[i * (s - 1) + j] = g;
        }
    }
    finite
}

/// out = a * b' (no aliasing)
fn mul_wbt(a: &Mat, b: &Mat, out: &mut Mat, s: usize) {
    for i in 0..s {
        for j in 0..s {
            let mut acc = 0.0;
            for k in 0..s {
                acc += a.get(i, k) * b.get(j, k);
            }
            out.set(i, j, acc);
        }
    }
}

/// out += a' * b (no aliasing)
fn acc_atb(a: &Mat, b: &Mat, out: &mut Mat, s: usize) {
    for i in 0..s {
        for j in 0..s {
            let mut acc = 0.0;
            for k in 0..s {
                acc += a.get(k, i) * b.get(k, j);
            }
            out.set(i, j, out.get(i, j) + acc);
        }
    }
}

/// Log-likelihood of the count data at `θ`; `-inf` when a positive count
/// meets a nonpositive probability.
pub fn log_likelihood(ctx: &LikelihoodContext, theta: &ThetaParam) -> f64 {
    let mut ws = EvalWorkspace::new(ctx.dim(), ctx.t);
    loglik_slice(ctx, theta.as_slice(), &mut ws)
}

/// Gradient matrix with entries at fixed mask positions set to zero.
#[derive(Clone, Debug)]
pub struct GradientMatrix {
    s: usize,
    g: Vec<f64>, // s * (s-1)
}

impl GradientMatrix {
    pub fn dim(&self) -> usize {
        self.s
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.g[i * (self.s - 1) + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.g
    }

    /// L-infinity norm over all entries.
    pub fn linf(&self) -> f64 {
        self.g.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }
}

/// Analytic gradient of [`log_likelihood`] with respect to the free entries
/// of Θ. Errors at boundary points where an intermediate is nonfinite.
pub fn gradient(ctx: &LikelihoodContext, theta: &ThetaParam) -> Result<GradientMatrix> {
    let s = ctx.dim();
    let mut ws = EvalWorkspace::new(s, ctx.t);
    let mut g = vec![0.0; s * (s - 1)];
    if !gradient_slice(ctx, theta.as_slice(), &mut ws, &mut g) {
        return Err(Error::GradientAtBoundary);
    }
    Ok(GradientMatrix { s, g })
}

/// Elementwise derivative of `P^T` with respect to `θ_uv` (0-based indices,
/// `v < s-1`):
///
/// ```text
/// ∂(P^T)_ij/∂θ_uv = Σ_{k=1..T} (P^{k-1})_iu [ (P^{T-k})_vj - (P^{T-k})_{s-1,j} ]
/// ```
pub fn d_power_d_theta(p: &StochasticMatrix, t: u32, u: usize, v: usize) -> Result<Mat> {
    let s = p.dim();
    if u >= s || v >= s - 1 {
        return Err(Error::InvalidParam(format!(
            "derivative index ({u},{v}) out of range for s = {s}"
        )));
    }
    let t = t as usize;
    let mut pows = Vec::with_capacity(t + 1);
    pows.push(Mat::identity(s));
    for k in 1..=t {
        pows.push(pows[k - 1].mul(p.as_mat()));
    }
    let mut d = Mat::zeros(s);
    for k in 1..=t {
        let left = &pows[k - 1];
        let right = &pows[t - k];
        for i in 0..s {
            let liu = left.get(i, u);
            if liu == 0.0 {
                continue;
            }
            for j in 0..s {
                let val = right.get(v, j) - right.get(s - 1, j);
                d.set(i, j, d.get(i, j) + liu * val);
            }
        }
    }
    Ok(d)
}
