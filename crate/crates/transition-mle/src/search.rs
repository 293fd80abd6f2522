//! Parallel multi-start search over a simplex grid with durable results.
//!
//! Each grid point seeds one independent [`maximize`](crate::optimizer::maximize)
//! run. Records stream to the store as they finish; aggregation is
//! associative, so the report is identical regardless of worker count or
//! completion order. With the `parallel` feature a rayon pool splits the
//! index range across workers (contiguous chunks with work stealing);
//! without it, or with `workers = 1`, the loop runs sequentially and
//! produces bit-identical records.

use std::path::Path;
use std::sync::mpsc;
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::likelihood::LikelihoodContext;
use crate::optimizer::{maximize, ConvergenceRecord, OptimizerSettings};
use crate::store::{Manifest, RecordStore};

/// Records attaining the maximum within this relative log-likelihood
/// tolerance are tied for the argmax set.
pub const ARGMAX_TIE_REL_TOL: f64 = 1e-9;

/// Aggregated outcome of a grid search.
#[derive(Clone, Debug)]
pub struct SearchReport {
    /// All records, sorted by grid index.
    pub records: Vec<ConvergenceRecord>,
    pub total_points: u64,
    /// Percentage of grid starts whose optimization converged.
    pub completion_rate: f64,
    /// Maximum log-likelihood over converged records.
    pub global_max_loglik: f64,
    /// Grid indices attaining the maximum within [`ARGMAX_TIE_REL_TOL`].
    pub argmax_set: Vec<u64>,
    pub wall_time: Duration,
}

impl SearchReport {
    pub fn converged(&self) -> impl Iterator<Item = &ConvergenceRecord> {
        self.records.iter().filter(|r| r.converged())
    }

    /// The converged record with the highest log-likelihood (lowest index on
    /// exact ties).
    pub fn best_record(&self) -> Option<&ConvergenceRecord> {
        self.converged()
            .max_by(|a, b| a.loglik.total_cmp(&b.loglik).then(b.start_id.cmp(&a.start_id)))
    }
}

/// Builds the order-independent aggregates from a full record set.
pub fn aggregate(mut records: Vec<ConvergenceRecord>, total_points: u64, wall_time: Duration) -> SearchReport {
    records.sort_by_key(|r| r.start_id);
    let n_conv = records.iter().filter(|r| r.converged()).count();
    let completion_rate = if total_points == 0 {
        0.0
    } else {
        n_conv as f64 / total_points as f64 * 100.0
    };
    let global_max_loglik = records
        .iter()
        .filter(|r| r.converged())
        .map(|r| r.loglik)
        .fold(f64::NEG_INFINITY, f64::max);
    let tie = ARGMAX_TIE_REL_TOL * global_max_loglik.abs().max(1.0);
    let argmax_set = records
        .iter()
        .filter(|r| r.converged() && r.loglik >= global_max_loglik - tie)
        .map(|r| r.start_id)
        .collect();
    SearchReport {
        records,
        total_points,
        completion_rate,
        global_max_loglik,
        argmax_set,
        wall_time,
    }
}

/// Runs `maximize` for the given grid indices, streaming records to the
/// store through a single writer. Worker results depend only on their own
/// start point, so any schedule yields the same record set.
fn execute(
    ctx: &LikelihoodContext,
    spec: &GridSpec,
    settings: &OptimizerSettings,
    workers: usize,
    indices: Vec<u64>,
    mut store: RecordStore,
) -> Result<Vec<ConvergenceRecord>> {
    let (tx, rx) = mpsc::channel::<ConvergenceRecord>();
    let expected = indices.len();

    std::thread::scope(|scope| -> Result<Vec<ConvergenceRecord>> {
        let writer = scope.spawn(move || -> Result<Vec<ConvergenceRecord>> {
            let mut acc = Vec::with_capacity(expected);
            for rec in rx {
                store.append(&rec)?;
                acc.push(rec);
            }
            store.sync()?;
            Ok(acc)
        });

        run_indices(ctx, spec, settings, workers, indices, tx);

        writer
            .join()
            .map_err(|_| Error::Store("writer thread panicked".into()))?
    })
}

#[cfg(feature = "parallel")]
fn run_indices(
    ctx: &LikelihoodContext,
    spec: &GridSpec,
    settings: &OptimizerSettings,
    workers: usize,
    indices: Vec<u64>,
    tx: mpsc::Sender<ConvergenceRecord>,
) {
    if workers <= 1 {
        run_indices_sequential(ctx, spec, settings, indices, tx);
        return;
    }
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .expect("failed to build worker pool");
    let chunk = (indices.len() / (workers * 8)).max(1);
    pool.install(|| {
        indices
            .into_par_iter()
            .with_min_len(chunk)
            .for_each_with(tx, |tx, i| {
                let rec = maximize(ctx, &spec.point(i), settings, i);
                // receiver hangup aborts the run; nothing useful to do here
                let _ = tx.send(rec);
            });
    });
}

#[cfg(not(feature = "parallel"))]
fn run_indices(
    ctx: &LikelihoodContext,
    spec: &GridSpec,
    settings: &OptimizerSettings,
    _workers: usize,
    indices: Vec<u64>,
    tx: mpsc::Sender<ConvergenceRecord>,
) {
    run_indices_sequential(ctx, spec, settings, indices, tx);
}

fn run_indices_sequential(
    ctx: &LikelihoodContext,
    spec: &GridSpec,
    settings: &OptimizerSettings,
    indices: Vec<u64>,
    tx: mpsc::Sender<ConvergenceRecord>,
) {
    for i in indices {
        let rec = maximize(ctx, &spec.point(i), settings, i);
        if tx.send(rec).is_err() {
            return;
        }
    }
}

/// Runs one optimization per grid point into a fresh store and aggregates
/// the results. Fails if the store path already exists.
pub fn run_search(
    ctx: &LikelihoodContext,
    spec: &GridSpec,
    settings: &OptimizerSettings,
    workers: usize,
    store_path: &Path,
) -> Result<SearchReport> {
    let start = Instant::now();
    let manifest = Manifest::build(ctx, spec, settings);
    let store = RecordStore::create(store_path, &manifest)?;
    let indices: Vec<u64> = (0..spec.total_points()).collect();
    let records = execute(ctx, spec, settings, workers, indices, store)?;
    Ok(aggregate(records, spec.total_points(), start.elapsed()))
}

/// Completes an interrupted search. The store's manifest must match the
/// provided problem and settings exactly; only unprocessed grid indices are
/// run, and the final report is identical to an uninterrupted run.
pub fn resume_search(
    store_path: &Path,
    ctx: &LikelihoodContext,
    spec: &GridSpec,
    settings: &OptimizerSettings,
    workers: usize,
) -> Result<SearchReport> {
    let start = Instant::now();
    let manifest = Manifest::build(ctx, spec, settings);
    let (store, existing) = RecordStore::open_resume(store_path, &manifest)?;
    let total = spec.total_points();
    let mut done = vec![false; total as usize];
    for rec in &existing {
        if rec.start_id < total {
            done[rec.start_id as usize] = true;
        }
    }
    let pending: Vec<u64> = (0..total).filter(|&i| !done[i as usize]).collect();
    let mut records = existing;
    if pending.is_empty() {
        store_noop(store)?;
    } else {
        records.extend(execute(ctx, spec, settings, workers, pending, store)?);
    }
    Ok(aggregate(records, total, start.elapsed()))
}

fn store_noop(mut store: RecordStore) -> Result<()> {
    store.sync()
}

/// Loads a completed (or partial) store for post-processing, rebuilding the
/// problem description from the manifest.
pub fn load_report(store_path: &Path) -> Result<(LikelihoodContext, GridSpec, OptimizerSettings, SearchReport)> {
    let (manifest, records) = RecordStore::read(store_path)?;
    let (ctx, spec) = manifest.to_problem()?;
    let report = aggregate(records, manifest.total_points, Duration::ZERO);
    Ok((ctx, spec, manifest.settings, report))
}
