//! Command-line pipeline for estimating single-cycle Markov transition
//! matrices from panel data observed every `T` cycles.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};

use transition_mle::analysis::{
    default_level_tol, detect_plateaus, emit_plot_data, maximizer_uniqueness, FigureKind,
};
use transition_mle::fixtures::{self, GridScale};
use transition_mle::grid::GridSpec;
use transition_mle::io;
use transition_mle::matrix::StochasticMatrix;
use transition_mle::params::{interval_mle, theta_to_matrix, ConstraintMask};
use transition_mle::search::{load_report, resume_search, run_search, SearchReport};
use transition_mle::spectral::{eigen_decompose, enumerate_real_roots};
use transition_mle::{CountMatrix, Error, LikelihoodContext, OptimizerSettings};

#[derive(Parser)]
#[command(
    name = "transition-mle",
    version,
    about = "Maximum likelihood estimation of single-cycle Markov transition matrices \
             from panel data observed every T cycles"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

/// Problem input: either a bundled fixture or a counts/mask file pair.
#[derive(Args)]
struct ProblemArgs {
    /// Count matrix CSV (s rows of s integers, no header)
    #[arg(long, conflicts_with = "fixture")]
    counts: Option<PathBuf>,
    /// Mask CSV: per row either `absorbing` or s-1 tokens (`free` or a decimal)
    #[arg(long, requires = "counts")]
    mask: Option<PathBuf>,
    /// Bundled study fixture name (see `fixtures list`)
    #[arg(long)]
    fixture: Option<String>,
    /// Observation interval in cycles
    #[arg(long)]
    cycles: Option<u32>,
}

#[derive(Args)]
struct SettingsArgs {
    /// Settings file with `key = value` lines
    #[arg(long)]
    settings: Option<PathBuf>,
    /// Override: outer relative tolerance
    #[arg(long)]
    outer_rel_tol: Option<f64>,
    /// Override: inner absolute tolerance
    #[arg(long)]
    inner_abs_tol: Option<f64>,
    /// Override: inner relative tolerance
    #[arg(long)]
    inner_rel_tol: Option<f64>,
    /// Override: initial barrier weight
    #[arg(long)]
    barrier_mu: Option<f64>,
    /// Override: outer iteration cap
    #[arg(long)]
    max_outer_iters: Option<u32>,
    /// Override: inner iteration cap
    #[arg(long)]
    max_inner_iters: Option<u32>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print the interval MLE (row-normalized counts) as CSV
    Mle {
        #[command(flatten)]
        problem: ProblemArgs,
    },
    /// Eigenvalues of the interval MLE and its real primary T-th roots
    Root {
        #[command(flatten)]
        problem: ProblemArgs,
        /// Maximum number of roots to enumerate
        #[arg(long, default_value_t = 4096)]
        budget: u64,
    },
    /// Multi-start barrier search over a simplex grid
    GridSearch {
        #[command(flatten)]
        problem: ProblemArgs,
        /// Per-row grid spacing denominators, comma separated (e.g. 8,8,8)
        #[arg(long)]
        grid_denominators: Option<String>,
        /// Fixture grid preset: `small` (~10^4 points) or `paper` (full scale)
        #[arg(long, default_value = "small")]
        scale: String,
        /// Worker threads
        #[arg(long, default_value_t = 8)]
        workers: usize,
        /// Record store path (created fresh unless --resume)
        #[arg(long)]
        store: PathBuf,
        /// Resume an interrupted search from the store
        #[arg(long)]
        resume: bool,
        #[command(flatten)]
        settings: SettingsArgs,
    },
    /// Analyze a search store: plateaus, uniqueness, plot data
    Analyze {
        /// Record store path from a previous grid-search run
        #[arg(long)]
        store: PathBuf,
        /// Restrict uniqueness analysis to this fraction of top log-likelihoods
        #[arg(long)]
        top_fraction: Option<f64>,
        /// Plateau grouping tolerance in log-likelihood units
        #[arg(long)]
        level_tol: Option<f64>,
        /// Comma-separated figure ids to emit as CSV
        /// (rank-curve, gradient-loglik, distance-loglik, fig1..fig8, s1..s6)
        #[arg(long)]
        emit: Option<String>,
        /// Output directory for emitted CSVs
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Budget for recovering the maximizer's other stochastic roots
        #[arg(long, default_value_t = 4096)]
        budget: u64,
    },
    /// Draw synthetic panel counts from a known transition matrix
    Simulate {
        /// Transition matrix CSV (s rows of s probabilities)
        #[arg(long)]
        matrix: PathBuf,
        /// Observation interval in cycles
        #[arg(long)]
        cycles: u32,
        /// Per-row transition totals, comma separated
        #[arg(long)]
        row_totals: String,
        /// RNG seed
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file (stdout if omitted)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Bundled study fixtures
    Fixtures {
        #[command(subcommand)]
        cmd: FixturesCmd,
    },
}

#[derive(Subcommand)]
enum FixturesCmd {
    /// List bundled fixtures with their grids and tolerance presets
    List,
}

/// Usage errors exit 2, computational errors exit 1.
enum CliError {
    Usage(String),
    Run(anyhow::Error),
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Run(e)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Run(e.into())
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

struct Problem {
    counts: CountMatrix,
    mask: ConstraintMask,
    cycles: u32,
    fixture: Option<&'static fixtures::StudyFixture>,
}

fn resolve_problem(args: &ProblemArgs, needs_cycles: bool) -> Result<Problem, CliError> {
    if let Some(name) = &args.fixture {
        let fixture = fixtures::by_name(name).map_err(|e| usage(e.to_string()))?;
        let cycles = match args.cycles {
            Some(t) => t,
            None => fixture.cycles[0],
        };
        return Ok(Problem {
            counts: fixture.counts(),
            mask: fixture.mask(),
            cycles,
            fixture: Some(fixture),
        });
    }
    let counts_path = args
        .counts
        .as_ref()
        .ok_or_else(|| usage("either --fixture or --counts is required"))?;
    let counts_text = std::fs::read_to_string(counts_path)
        .with_context(|| format!("reading {}", counts_path.display()))?;
    let counts = io::parse_counts(&counts_text)?;
    let mask = match &args.mask {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            io::parse_mask(&text)?
        }
        None => ConstraintMask::unconstrained(counts.dim()),
    };
    let cycles = match args.cycles {
        Some(t) => t,
        None if !needs_cycles => 1,
        None => return Err(usage("--cycles is required with --counts input")),
    };
    Ok(Problem { counts, mask, cycles, fixture: None })
}

fn cmd_mle(problem: &ProblemArgs) -> Result<(), CliError> {
    let p = resolve_problem(problem, false)?;
    let mle = interval_mle(&p.counts, &p.mask)?;
    print!("{}", io::format_matrix_csv(&mle));
    Ok(())
}

fn classify_roots(
    p: &StochasticMatrix,
    cycles: u32,
    budget: u64,
) -> Result<(String, Vec<String>), CliError> {
    let eig = eigen_decompose(p)?;
    let mut lines = Vec::new();
    let eigs: Vec<String> = eig
        .eigenvalues
        .iter()
        .map(|z| {
            if z.im == 0.0 {
                format!("{:.6}", z.re)
            } else {
                format!("{:.6}{:+.6}i", z.re, z.im)
            }
        })
        .collect();
    lines.push(format!("eigenvalues: {}", eigs.join(" ")));
    lines.push(format!(
        "r = {}, c = {}, negative_eigenvalue = {}, distinct = {}",
        eig.r, eig.c, eig.has_negative, eig.distinct
    ));

    if eig.has_negative && cycles % 2 == 0 {
        let neg = eig
            .eigenvalues
            .iter()
            .filter(|z| z.im == 0.0 && z.re < 0.0)
            .map(|z| format!("{:.3}", z.re))
            .collect::<Vec<_>>()
            .join(", ");
        lines.push("candidates: 0".to_string());
        return Ok((
            format!("no real roots (negative eigenvalue {neg} with even T = {cycles})"),
            lines,
        ));
    }

    if !eig.distinct {
        // repeated eigenvalues: only the principal branch is taken
        let root = transition_mle::spectral::principal_root(p, cycles)?;
        lines.push("candidates: 1 (principal only; repeated eigenvalues)".into());
        lines.push(format!(
            "candidate 0: branches={:?} min_entry={:.6} stochastic={}",
            root.branch_labels, root.min_entry, root.is_stochastic
        ));
        let verdict = if root.is_stochastic {
            "stochastic root found".to_string()
        } else {
            "real roots exist but none stochastic".to_string()
        };
        return Ok((verdict, lines));
    }

    let roots = enumerate_real_roots(p, cycles, budget)?;
    lines.push(format!("candidates: {}", roots.len()));
    let mut any_stochastic = false;
    for (k, root) in roots.iter().enumerate() {
        any_stochastic |= root.is_stochastic;
        lines.push(format!(
            "candidate {k}: branches={:?} min_entry={:.6} stochastic={}",
            root.branch_labels, root.min_entry, root.is_stochastic
        ));
    }
    let verdict = if roots.is_empty() {
        format!("no real roots for T = {cycles}")
    } else if any_stochastic {
        "stochastic root found".to_string()
    } else {
        "real roots exist but none stochastic".to_string()
    };
    Ok((verdict, lines))
}

fn cmd_root(problem: &ProblemArgs, budget: u64) -> Result<(), CliError> {
    let p = resolve_problem(problem, true)?;
    let mle = interval_mle(&p.counts, &p.mask)?;
    println!("interval MLE (T = {}):", p.cycles);
    print!("{}", io::format_matrix_pretty(mle.as_mat()));
    let (verdict, lines) = classify_roots(&mle, p.cycles, budget)?;
    for line in lines {
        println!("{line}");
    }
    println!("classification: {verdict}");
    Ok(())
}

fn build_settings(
    fixture: Option<&'static fixtures::StudyFixture>,
    cycles: u32,
    args: &SettingsArgs,
) -> Result<OptimizerSettings, CliError> {
    let mut settings = match fixture {
        Some(f) => f.settings(cycles),
        None => OptimizerSettings::default(),
    };
    if let Some(path) = &args.settings {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading {}", path.display()))?;
        settings = io::parse_settings(&text, settings)?;
    }
    if let Some(v) = args.outer_rel_tol {
        settings.outer_rel_tol = v;
    }
    if let Some(v) = args.inner_abs_tol {
        settings.inner_abs_tol = v;
    }
    if let Some(v) = args.inner_rel_tol {
        settings.inner_rel_tol = v;
    }
    if let Some(v) = args.barrier_mu {
        settings.barrier_mu = v;
    }
    if let Some(v) = args.max_outer_iters {
        settings.max_outer_iters = v;
    }
    if let Some(v) = args.max_inner_iters {
        settings.max_inner_iters = v;
    }
    Ok(settings)
}

fn print_report_summary(report: &SearchReport, ctx: &LikelihoodContext) -> Result<(), CliError> {
    println!("grid points:       {}", report.total_points);
    println!("completion rate:   {:.3}%", report.completion_rate);
    println!("global max loglik: {:.6}", report.global_max_loglik);
    println!("argmax set size:   {}", report.argmax_set.len());
    println!("wall time:         {:.1?}", report.wall_time);
    if let Some(best) = report.best_record() {
        let p = theta_to_matrix(&best.theta_final, ctx.mask())?;
        println!("global maximizer (grid index {}):", best.start_id);
        print!("{}", io::format_matrix_pretty(p.as_mat()));
    }
    Ok(())
}

fn cmd_grid_search(
    problem: &ProblemArgs,
    denominators: Option<&str>,
    scale: &str,
    workers: usize,
    store: &Path,
    resume: bool,
    settings_args: &SettingsArgs,
) -> Result<(), CliError> {
    let p = resolve_problem(problem, true)?;
    if workers < 1 {
        return Err(usage("--workers must be at least 1"));
    }
    let spec = match denominators {
        Some(list) => {
            let denoms = list
                .split(',')
                .map(|tok| tok.trim().parse::<u32>())
                .collect::<Result<Vec<u32>, _>>()
                .map_err(|_| usage(format!("bad --grid-denominators {list:?}")))?;
            GridSpec::new(p.mask.clone(), denoms)?
        }
        None => {
            let fixture = p
                .fixture
                .ok_or_else(|| usage("--grid-denominators is required with --counts input"))?;
            let scale = match scale {
                "small" => GridScale::Small,
                "paper" => GridScale::Paper,
                other => return Err(usage(format!("unknown --scale {other:?}"))),
            };
            fixture.grid(scale)?
        }
    };
    let settings = build_settings(p.fixture, p.cycles, settings_args)?;
    let ctx = LikelihoodContext::new(p.counts, p.cycles, p.mask)?;
    eprintln!(
        "running {} optimizations on {} workers (store: {})",
        spec.total_points(),
        workers,
        store.display()
    );
    let report = if resume {
        resume_search(store, &ctx, &spec, &settings, workers)?
    } else {
        run_search(&ctx, &spec, &settings, workers, store)?
    };
    print_report_summary(&report, &ctx)
}

fn cmd_analyze(
    store: &Path,
    top_fraction: Option<f64>,
    level_tol: Option<f64>,
    emit: Option<&str>,
    out: &Path,
    budget: u64,
) -> Result<(), CliError> {
    let (ctx, _spec, _settings, report) = load_report(store)?;
    print_report_summary(&report, &ctx)?;

    let tol = level_tol.unwrap_or_else(|| default_level_tol(&report));
    let summary = detect_plateaus(&report, tol);
    println!("plateaus (level tolerance {tol:.3e}):");
    println!("  #    level           members   fraction   grad Linf range");
    for (k, plat) in summary.plateaus.iter().enumerate().take(20) {
        println!(
            "  {:<4} {:<15.6} {:<9} {:<10.4} [{:.3e}, {:.3e}]",
            k,
            plat.level,
            plat.member_count,
            plat.fraction_of_grid,
            plat.grad_linf_range.0,
            plat.grad_linf_range.1
        );
    }
    if summary.plateaus.len() > 20 {
        println!("  ... {} more", summary.plateaus.len() - 20);
    }

    let fraction = top_fraction.unwrap_or(1.0);
    let (set, distances) = maximizer_uniqueness(&report, fraction, &ctx)?;
    println!("uniqueness over top {:.2}% of converged records:", fraction * 100.0);
    println!("  P^T-equivalence classes: {}", set.representatives.len());
    println!("  unique in P^T: {}", set.unique_in_pt);
    if let Some(max_d) = distances.iter().map(|&(_, d)| d).reduce(f64::max) {
        println!("  max Linf distance to maximizer: {max_d:.6}");
    }

    // look for stochastic roots of the maximizer's P^T that the grid search
    // may not have visited
    if let Some(rep) = set.representatives.first() {
        match enumerate_real_roots(&rep.pt_hat, ctx.cycles(), budget) {
            Ok(roots) => {
                let stochastic = roots.iter().filter(|r| r.is_stochastic).count();
                println!(
                    "  real roots of maximizer P^T: {} ({} stochastic)",
                    roots.len(),
                    stochastic
                );
            }
            Err(Error::EnumerationInfeasible { expected, budget }) => {
                println!("  root recovery infeasible: {expected} candidates exceed budget {budget}");
            }
            Err(e) => println!("  root recovery unavailable: {e}"),
        }
    }

    if let Some(list) = emit {
        for id in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (canonical, kind) = FigureKind::parse(id, top_fraction)?;
            let path = emit_plot_data(&report, &ctx, &canonical, kind, out)?;
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn cmd_simulate(
    matrix: &Path,
    cycles: u32,
    row_totals: &str,
    seed: u64,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let text = std::fs::read_to_string(matrix)
        .with_context(|| format!("reading {}", matrix.display()))?;
    let p = io::parse_probability_matrix(&text)?;
    let totals = row_totals
        .split(',')
        .map(|tok| tok.trim().parse::<u64>())
        .collect::<Result<Vec<u64>, _>>()
        .map_err(|_| usage(format!("bad --row-totals {row_totals:?}")))?;
    let counts = transition_mle::simulate::simulate_counts(&p, cycles, &totals, seed)?;
    let csv = io::format_counts_csv(&counts);
    match out {
        Some(path) => std::fs::write(path, csv).map_err(|e| CliError::Run(anyhow!(e)))?,
        None => print!("{csv}"),
    }
    Ok(())
}

fn cmd_fixtures_list() {
    println!(
        "{:<8} {:<7} {:<12} {:<11} {:<13} {:<13} title",
        "name", "states", "cycles", "parameters", "small grid", "paper grid"
    );
    for f in fixtures::all() {
        let cycles: Vec<String> = f.cycles.iter().map(|t| t.to_string()).collect();
        let small = f.grid(GridScale::Small).map(|g| g.total_points()).unwrap_or(0);
        let paper = f.grid(GridScale::Paper).map(|g| g.total_points()).unwrap_or(0);
        println!(
            "{:<8} {:<7} {:<12} {:<11} {:<13} {:<13} {}",
            f.name,
            f.counts().dim(),
            cycles.join(","),
            f.mask().n_free(),
            small,
            paper,
            f.title
        );
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match &cli.cmd {
        Cmd::Mle { problem } => cmd_mle(problem),
        Cmd::Root { problem, budget } => cmd_root(problem, *budget),
        Cmd::GridSearch {
            problem,
            grid_denominators,
            scale,
            workers,
            store,
            resume,
            settings,
        } => cmd_grid_search(
            problem,
            grid_denominators.as_deref(),
            scale,
            *workers,
            store,
            *resume,
            settings,
        ),
        Cmd::Analyze { store, top_fraction, level_tol, emit, out, budget } => cmd_analyze(
            store,
            *top_fraction,
            *level_tol,
            emit.as_deref(),
            out,
            *budget,
        ),
        Cmd::Simulate { matrix, cycles, row_totals, seed, out } => {
            cmd_simulate(matrix, *cycles, row_totals, *seed, out.as_deref())
        }
        Cmd::Fixtures { cmd: FixturesCmd::List } => {
            cmd_fixtures_list();
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Run(err)) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}
