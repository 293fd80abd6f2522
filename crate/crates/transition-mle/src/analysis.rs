//! Post-search analytics: rank-ordered log-likelihood curves, plateau
//! detection, maximizer-uniqueness diagnostics, and plot-data emission.
//!
//! Distinct convergence points can share one maximizer of the likelihood:
//! different `T`-th roots of the same `P^T`. Uniqueness is therefore judged
//! on `P^T`-equivalence classes, not on Θ itself.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::likelihood::LikelihoodContext;
use crate::matrix::{linf_distance, matrix_power, StochasticMatrix};
use crate::params::theta_to_matrix;
use crate::search::SearchReport;

/// L-infinity tolerance under which two `P^T` matrices count as the same
/// maximizer. Convergence scatter within one plateau stays below ~4e-4 at
/// the study tolerance presets, while genuinely distinct maximizers differ
/// by at least 0.011; this threshold separates the two regimes.
pub const TAU_EQUIV: f64 = 1e-3;

/// One point of the rank-ordered log-likelihood curve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RankPoint {
    /// Rank scaled to `(0, 1]`.
    pub rank: f64,
    pub loglik: f64,
    pub grad_linf: f64,
    pub start_id: u64,
}

/// Converged records ordered by ascending log-likelihood, ranks scaled to
/// `(0, 1]`. Ties order by grid index; failed records are excluded.
pub fn rank_curve(report: &SearchReport) -> Result<Vec<RankPoint>> {
    let mut conv: Vec<_> = report.converged().collect();
    if conv.is_empty() {
        return Err(Error::EmptyReport);
    }
    conv.sort_by(|a, b| a.loglik.total_cmp(&b.loglik).then(a.start_id.cmp(&b.start_id)));
    let n = conv.len() as f64;
    Ok(conv
        .iter()
        .enumerate()
        .map(|(k, r)| RankPoint {
            rank: (k + 1) as f64 / n,
            loglik: r.loglik,
            grad_linf: r.grad_linf,
            start_id: r.start_id,
        })
        .collect())
}

/// A cluster of convergence points sharing a log-likelihood level.
#[derive(Clone, Debug)]
pub struct Plateau {
    /// Highest log-likelihood in the cluster.
    pub level: f64,
    pub member_count: usize,
    /// Members as a fraction of the whole grid (failed starts included in
    /// the denominator).
    pub fraction_of_grid: f64,
    /// Range of gradient norms across members: near-zero ranges mark
    /// interior flats, wide or large ranges mark boundary ridges.
    pub grad_linf_range: (f64, f64),
}

/// Plateau decomposition of a search report.
#[derive(Clone, Debug)]
pub struct PlateauSummary {
    /// Descending by level; the first plateau contains the global maximizer.
    pub plateaus: Vec<Plateau>,
    /// Fraction of the grid in the top plateau.
    pub global_plateau_fraction: f64,
}

/// Default grouping tolerance: `1e-4` relative to the global maximum.
pub fn default_level_tol(report: &SearchReport) -> f64 {
    1e-4 * report.global_max_loglik.abs().max(1.0)
}

/// Single-linkage grouping of converged log-likelihoods: a gap larger than
/// `level_tol` between consecutive sorted values starts a new plateau.
pub fn detect_plateaus(report: &SearchReport, level_tol: f64) -> PlateauSummary {
    let mut lls: Vec<(f64, f64)> = report
        .converged()
        .map(|r| (r.loglik, r.grad_linf))
        .collect();
    if lls.is_empty() {
        return PlateauSummary { plateaus: Vec::new(), global_plateau_fraction: 0.0 };
    }
    lls.sort_by(|a, b| a.0.total_cmp(&b.0));
    let m = report.total_points as f64;
    let mut plateaus = Vec::new();
    let mut begin = 0;
    for k in 1..=lls.len() {
        let split = k == lls.len() || (lls[k].0 - lls[k - 1].0) > level_tol;
        if split {
            let members = &lls[begin..k];
            let grad_min = members
                .iter()
                .map(|&(_, g)| g)
                .filter(|g| g.is_finite())
                .fold(f64::INFINITY, f64::min);
            let grad_max = members
                .iter()
                .map(|&(_, g)| g)
                .filter(|g| g.is_finite())
                .fold(0.0f64, f64::max);
            plateaus.push(Plateau {
                level: members.last().unwrap().0,
                member_count: members.len(),
                fraction_of_grid: members.len() as f64 / m,
                grad_linf_range: (grad_min.min(grad_max), grad_max),
            });
            begin = k;
        }
    }
    plateaus.reverse(); // descending level
    let global_plateau_fraction = plateaus.first().map(|p| p.fraction_of_grid).unwrap_or(0.0);
    PlateauSummary { plateaus, global_plateau_fraction }
}

/// One `P^T`-equivalence class among the top convergence points.
#[derive(Clone, Debug)]
pub struct Representative {
    /// The class representative's single-cycle matrix.
    pub p_hat: StochasticMatrix,
    /// Its `T`-th power, the object maximizing the likelihood.
    pub pt_hat: StochasticMatrix,
    pub member_indices: Vec<u64>,
}

/// Maximizer-uniqueness verdict for the top band of a report.
#[derive(Clone, Debug)]
pub struct MaximizerSet {
    /// Pairwise distinct in `P^T` beyond [`TAU_EQUIV`]; the first entry is
    /// the global maximizer's class.
    pub representatives: Vec<Representative>,
    pub unique_in_pt: bool,
}

/// `(loglik, L∞ distance to the global maximizer's P^T)` per top record,
/// ascending in log-likelihood — the data behind the distance-band figures.
pub type DistanceSequence = Vec<(f64, f64)>;

/// Restricts to the `top_fraction` of converged records by log-likelihood,
/// groups them by `P^T`-equivalence, and measures every point's distance to
/// the global maximizer's `P^T`.
pub fn maximizer_uniqueness(
    report: &SearchReport,
    top_fraction: f64,
    ctx: &LikelihoodContext,
) -> Result<(MaximizerSet, DistanceSequence)> {
    if !(top_fraction > 0.0 && top_fraction <= 1.0) {
        return Err(Error::InvalidParam(format!(
            "top_fraction {top_fraction} outside (0, 1]"
        )));
    }
    let mut conv: Vec<_> = report.converged().collect();
    if conv.is_empty() {
        return Err(Error::EmptyReport);
    }
    // descending log-likelihood, deterministic tie order
    conv.sort_by(|a, b| b.loglik.total_cmp(&a.loglik).then(a.start_id.cmp(&b.start_id)));
    let keep = ((top_fraction * conv.len() as f64).ceil() as usize).clamp(1, conv.len());
    let top = &conv[..keep];

    let powers: Vec<(u64, f64, StochasticMatrix, StochasticMatrix)> = top
        .iter()
        .map(|r| -> Result<_> {
            let p = theta_to_matrix(&r.theta_final, ctx.mask())?;
            let pt = matrix_power(&p, ctx.cycles());
            Ok((r.start_id, r.loglik, p, pt))
        })
        .collect::<Result<_>>()?;

    let best_pt = powers[0].3.clone();
    let mut representatives: Vec<Representative> = Vec::new();
    let mut distances: DistanceSequence = Vec::with_capacity(powers.len());
    for (id, ll, p, pt) in &powers {
        distances.push((*ll, linf_distance(pt, &best_pt)?));
        match representatives
            .iter_mut()
            .find(|rep| linf_distance(&rep.pt_hat, pt).map(|d| d <= TAU_EQUIV).unwrap_or(false))
        {
            Some(rep) => rep.member_indices.push(*id),
            None => representatives.push(Representative {
                p_hat: p.clone(),
                pt_hat: pt.clone(),
                member_indices: vec![*id],
            }),
        }
    }
    distances.sort_by(|a, b| a.0.total_cmp(&b.0));
    let unique_in_pt = representatives.len() == 1;
    Ok((MaximizerSet { representatives, unique_in_pt }, distances))
}

/// Plot-data selector. Accepts the generic kind names `rank-curve`,
/// `gradient-loglik`, and `distance-loglik`, plus the numbered aliases used
/// by the bundled studies (`fig1`..`fig8`, `s1`..`s6`), which pin the kind
/// and the distance band's top fraction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FigureKind {
    RankCurve,
    GradientVsLoglik,
    DistanceVsLoglik { top_fraction: f64 },
}

impl FigureKind {
    pub fn parse(id: &str, top_fraction_flag: Option<f64>) -> Result<(String, FigureKind)> {
        let canonical = id.trim().to_lowercase();
        let kind = match canonical.as_str() {
            "rank-curve" | "fig1" | "fig2" | "fig3" | "fig6" => FigureKind::RankCurve,
            "gradient-loglik" | "fig4" => FigureKind::GradientVsLoglik,
            "distance-loglik" => FigureKind::DistanceVsLoglik {
                top_fraction: top_fraction_flag.unwrap_or(1.0),
            },
            "fig5" => FigureKind::DistanceVsLoglik { top_fraction: 0.9375 },
            "fig7" => FigureKind::DistanceVsLoglik { top_fraction: 0.3125 },
            "fig8" => FigureKind::DistanceVsLoglik { top_fraction: 0.01 },
            "s1" | "s3" => FigureKind::DistanceVsLoglik { top_fraction: 0.50 },
            "s2" | "s4" => FigureKind::DistanceVsLoglik { top_fraction: 0.03 },
            "s5" | "s6" => FigureKind::DistanceVsLoglik { top_fraction: 0.125 },
            _ => return Err(Error::UnknownFigure(id.to_string())),
        };
        Ok((canonical, kind))
    }
}

/// Writes one CSV per requested panel into `out_dir`, named `<id>.csv`.
/// Emission is deterministic: identical reports produce byte-identical files.
pub fn emit_plot_data(
    report: &SearchReport,
    ctx: &LikelihoodContext,
    id: &str,
    kind: FigureKind,
    out_dir: &Path,
) -> Result<PathBuf> {
    std::fs::create_dir_all(out_dir)?;
    let path = out_dir.join(format!("{id}.csv"));
    let mut text = String::new();
    match kind {
        FigureKind::RankCurve => {
            text.push_str("# rank-ordered log-likelihood at each convergence point\n");
            text.push_str("# columns: scaled_rank,loglik,grad_linf\n");
            for p in rank_curve(report)? {
                text.push_str(&format!("{},{},{}\n", p.rank, p.loglik, p.grad_linf));
            }
        }
        FigureKind::GradientVsLoglik => {
            text.push_str("# gradient Linf norm against log-likelihood per convergence point\n");
            text.push_str("# columns: loglik,grad_linf\n");
            let mut conv: Vec<_> = report.converged().collect();
            if conv.is_empty() {
                return Err(Error::EmptyReport);
            }
            conv.sort_by(|a, b| a.loglik.total_cmp(&b.loglik).then(a.start_id.cmp(&b.start_id)));
            for r in conv {
                text.push_str(&format!("{},{}\n", r.loglik, r.grad_linf));
            }
        }
        FigureKind::DistanceVsLoglik { top_fraction } => {
            text.push_str(&format!(
                "# Linf distance between each convergence point's P^T and the global maximizer's, top fraction {top_fraction}\n"
            ));
            text.push_str("# columns: loglik,linf_distance\n");
            let (_, distances) = maximizer_uniqueness(report, top_fraction, ctx)?;
            for (ll, d) in distances {
                text.push_str(&format!("{ll},{d}\n"));
            }
        }
    }
    std::fs::write(&path, text)?;
    Ok(path)
}
