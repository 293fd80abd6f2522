//! Durable, append-only record store for grid-search results.
//!
//! A search writes one fixed-width binary record per grid start plus a
//! human-readable text manifest (`<store>.manifest`) carrying the full
//! problem description and a fingerprint. Resuming requires an exact
//! fingerprint match; a torn trailing record from an interrupted run is
//! dropped on open.

use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::likelihood::LikelihoodContext;
use crate::matrix::CountMatrix;
use crate::optimizer::{ConvergenceRecord, OptimizerSettings, Status};
use crate::params::{ConstraintMask, MaskEntry, ThetaParam};

const FORMAT_VERSION: u32 = 1;

fn fnv1a64(text: &str) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    for b in text.as_bytes() {
        hash ^= *b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

/// Problem description stored alongside the records. Identical manifests
/// (and only identical manifests) may share a store across runs.
#[derive(Clone, Debug, PartialEq)]
pub struct Manifest {
    pub s: usize,
    pub cycles: u32,
    pub counts: Vec<Vec<u64>>,
    pub mask_rows: Vec<Vec<MaskEntry>>,
    pub denominators: Vec<u32>,
    pub settings: OptimizerSettings,
    pub total_points: u64,
}

impl Manifest {
    pub fn build(ctx: &LikelihoodContext, spec: &GridSpec, settings: &OptimizerSettings) -> Self {
        let s = ctx.dim();
        let counts = (0..s)
            .map(|i| (0..s).map(|j| ctx.counts().get(i, j)).collect())
            .collect();
        let mask_rows = (0..s)
            .map(|i| (0..s - 1).map(|j| ctx.mask().entry(i, j)).collect())
            .collect();
        Manifest {
            s,
            cycles: ctx.cycles(),
            counts,
            mask_rows,
            denominators: spec.denominators().to_vec(),
            settings: *settings,
            total_points: spec.total_points(),
        }
    }

    /// Canonical body text; the fingerprint hashes exactly this.
    fn body(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("format_version = {FORMAT_VERSION}\n"));
        out.push_str(&format!("states = {}\n", self.s));
        out.push_str(&format!("cycles = {}\n", self.cycles));
        let counts = self
            .counts
            .iter()
            .map(|row| row.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(","))
            .collect::<Vec<_>>()
            .join(";");
        out.push_str(&format!("counts = {counts}\n"));
        let mask = self
            .mask_rows
            .iter()
            .map(|row| {
                row.iter()
                    .map(|e| match e {
                        MaskEntry::Free => "free".to_string(),
                        MaskEntry::Fixed(v) => format!("{v}"),
                    })
                    .collect::<Vec<_>>()
                    .join(",")
            })
            .collect::<Vec<_>>()
            .join(";");
        out.push_str(&format!("mask = {mask}\n"));
        let denoms = self
            .denominators
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(",");
        out.push_str(&format!("grid_denominators = {denoms}\n"));
        out.push_str(&format!("outer_rel_tol = {}\n", self.settings.outer_rel_tol));
        out.push_str(&format!("inner_abs_tol = {}\n", self.settings.inner_abs_tol));
        out.push_str(&format!("inner_rel_tol = {}\n", self.settings.inner_rel_tol));
        out.push_str(&format!("barrier_mu = {}\n", self.settings.barrier_mu));
        out.push_str(&format!("max_outer_iters = {}\n", self.settings.max_outer_iters));
        out.push_str(&format!("max_inner_iters = {}\n", self.settings.max_inner_iters));
        out.push_str(&format!("total_points = {}\n", self.total_points));
        out
    }

    pub fn fingerprint(&self) -> u64 {
        fnv1a64(&self.body())
    }

    pub fn to_text(&self) -> String {
        format!("{}fingerprint = {:016x}\n", self.body(), self.fingerprint())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut fields = std::collections::HashMap::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("manifest line without '=': {line}")))?;
            fields.insert(key.trim().to_string(), value.trim().to_string());
        }
        let get = |key: &str| {
            fields
                .get(key)
                .cloned()
                .ok_or_else(|| Error::Parse(format!("manifest missing key {key}")))
        };
        let version: u32 = get("format_version")?
            .parse()
            .map_err(|e| Error::Parse(format!("format_version: {e}")))?;
        if version != FORMAT_VERSION {
            return Err(Error::Store(format!(
                "unsupported store format version {version}"
            )));
        }
        let s: usize = get("states")?.parse().map_err(|e| Error::Parse(format!("states: {e}")))?;
        let cycles: u32 = get("cycles")?.parse().map_err(|e| Error::Parse(format!("cycles: {e}")))?;
        let counts = get("counts")?
            .split(';')
            .map(|row| {
                row.split(',')
                    .map(|v| v.parse::<u64>().map_err(|e| Error::Parse(format!("counts: {e}"))))
                    .collect::<Result<Vec<u64>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let mask_rows = get("mask")?
            .split(';')
            .map(|row| {
                row.split(',')
                    .map(|tok| {
                        if tok == "free" {
                            Ok(MaskEntry::Free)
                        } else {
                            tok.parse::<f64>()
                                .map(MaskEntry::Fixed)
                                .map_err(|e| Error::Parse(format!("mask: {e}")))
                        }
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let denominators = get("grid_denominators")?
            .split(',')
            .map(|v| v.parse::<u32>().map_err(|e| Error::Parse(format!("denominators: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        let parse_f = |key: &str| -> Result<f64> {
            get(key)?.parse::<f64>().map_err(|e| Error::Parse(format!("{key}: {e}")))
        };
        let settings = OptimizerSettings {
            outer_rel_tol: parse_f("outer_rel_tol")?,
            inner_abs_tol: parse_f("inner_abs_tol")?,
            inner_rel_tol: parse_f("inner_rel_tol")?,
            barrier_mu: parse_f("barrier_mu")?,
            max_outer_iters: get("max_outer_iters")?
                .parse()
                .map_err(|e| Error::Parse(format!("max_outer_iters: {e}")))?,
            max_inner_iters: get("max_inner_iters")?
                .parse()
                .map_err(|e| Error::Parse(format!("max_inner_iters: {e}")))?,
        };
        let total_points: u64 = get("total_points")?
            .parse()
            .map_err(|e| Error::Parse(format!("total_points: {e}")))?;
        let manifest = Manifest {
            s,
            cycles,
            counts,
            mask_rows,
            denominators,
            settings,
            total_points,
        };
        let recorded = u64::from_str_radix(&get("fingerprint")?, 16)
            .map_err(|e| Error::Parse(format!("fingerprint: {e}")))?;
        if recorded != manifest.fingerprint() {
            return Err(Error::Store("manifest fingerprint does not match its body".into()));
        }
        Ok(manifest)
    }

    /// Rebuilds the likelihood context and grid described by this manifest.
    pub fn to_problem(&self) -> Result<(LikelihoodContext, GridSpec)> {
        let counts = CountMatrix::new(&self.counts)?;
        let mask = ConstraintMask::new(self.mask_rows.clone())?;
        let ctx = LikelihoodContext::new(counts, self.cycles, mask.clone())?;
        let spec = GridSpec::new(mask, self.denominators.clone())?;
        Ok((ctx, spec))
    }

    fn record_size(&self) -> usize {
        8 + 1 + 4 + 8 + 8 + 8 * self.s * (self.s - 1)
    }
}

fn manifest_path(store: &Path) -> PathBuf {
    let mut os = store.as_os_str().to_owned();
    os.push(".manifest");
    PathBuf::from(os)
}

fn encode_record(rec: &ConvergenceRecord, buf: &mut Vec<u8>) {
    buf.clear();
    buf.extend_from_slice(&rec.start_id.to_le_bytes());
    buf.push(match rec.status {
        Status::Converged => 0,
        Status::FailedNonfinite => 1,
        Status::MaxIters => 2,
    });
    buf.extend_from_slice(&rec.outer_iters.to_le_bytes());
    buf.extend_from_slice(&rec.loglik.to_le_bytes());
    buf.extend_from_slice(&rec.grad_linf.to_le_bytes());
    for v in rec.theta_final.as_slice() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
}

fn decode_record(s: usize, bytes: &[u8]) -> Result<ConvergenceRecord> {
    let take_f64 = |off: usize| f64::from_le_bytes(bytes[off..off + 8].try_into().unwrap());
    let start_id = u64::from_le_bytes(bytes[0..8].try_into().unwrap());
    let status = match bytes[8] {
        0 => Status::Converged,
        1 => Status::FailedNonfinite,
        2 => Status::MaxIters,
        other => return Err(Error::Store(format!("unknown status byte {other}"))),
    };
    let outer_iters = u32::from_le_bytes(bytes[9..13].try_into().unwrap());
    let loglik = take_f64(13);
    let grad_linf = take_f64(21);
    let mut theta = Vec::with_capacity(s * (s - 1));
    for k in 0..s * (s - 1) {
        theta.push(take_f64(29 + 8 * k));
    }
    Ok(ConvergenceRecord {
        start_id,
        theta_final: ThetaParam::new(s, theta)
            .map_err(|e| Error::Store(format!("corrupt θ in record {start_id}: {e}")))?,
        loglik,
        grad_linf,
        status,
        outer_iters,
    })
}

/// Append-only record file plus manifest sidecar.
pub struct RecordStore {
    manifest: Manifest,
    writer: BufWriter<File>,
    path: PathBuf,
    buf: Vec<u8>,
}

impl RecordStore {
    /// Creates a fresh store; refuses to clobber an existing one.
    pub fn create(path: &Path, manifest: &Manifest) -> Result<Self> {
        if path.exists() {
            return Err(Error::Store(format!(
                "store {} already exists (resume instead?)",
                path.display()
            )));
        }
        std::fs::write(manifest_path(path), manifest.to_text())?;
        let file = OpenOptions::new().create_new(true).write(true).open(path)?;
        Ok(RecordStore {
            manifest: manifest.clone(),
            writer: BufWriter::new(file),
            path: path.to_path_buf(),
            buf: Vec::new(),
        })
    }

    /// Opens an existing store for resumption, returning the records already
    /// present. A trailing partial record (interrupted write) is truncated.
    pub fn open_resume(path: &Path, expected: &Manifest) -> Result<(Self, Vec<ConvergenceRecord>)> {
        let manifest_text = std::fs::read_to_string(manifest_path(path))?;
        let on_disk = Manifest::from_text(&manifest_text)?;
        if on_disk.fingerprint() != expected.fingerprint() {
            return Err(Error::FingerprintMismatch(format!(
                "store was produced with a different problem/settings \
                 (disk {:016x}, requested {:016x})",
                on_disk.fingerprint(),
                expected.fingerprint()
            )));
        }
        let mut bytes = Vec::new();
        File::open(path)?.read_to_end(&mut bytes)?;
        let rs = on_disk.record_size();
        let whole = bytes.len() - bytes.len() % rs;
        let mut records = Vec::with_capacity(whole / rs);
        for chunk in bytes[..whole].chunks_exact(rs) {
            records.push(decode_record(on_disk.s, chunk)?);
        }
        let file = OpenOptions::new().write(true).open(path)?;
        file.set_len(whole as u64)?; // drop torn tail
        drop(file);
        let writer = BufWriter::new(OpenOptions::new().append(true).open(path)?);
        Ok((
            RecordStore {
                manifest: on_disk,
                writer,
                path: path.to_path_buf(),
                buf: Vec::new(),
            },
            records,
        ))
    }

    /// Reads a complete store without touching it.
    pub fn read(path: &Path) -> Result<(Manifest, Vec<ConvergenceRecord>)> {
        let manifest_text = std::fs::read_to_string(manifest_path(path))?;
        let manifest = Manifest::from_text(&manifest_text)?;
        let mut bytes = Vec::new();
        File::open(path)?.read_to_end(&mut bytes)?;
        let rs = manifest.record_size();
        let whole = bytes.len() - bytes.len() % rs;
        let mut records = Vec::with_capacity(whole / rs);
        for chunk in bytes[..whole].chunks_exact(rs) {
            records.push(decode_record(manifest.s, chunk)?);
        }
        Ok((manifest, records))
    }

    pub fn append(&mut self, rec: &ConvergenceRecord) -> Result<()> {
        encode_record(rec, &mut self.buf);
        self.writer
            .write_all(&self.buf)
            .map_err(|e| Error::Store(format!("append to {}: {e}", self.path.display())))?;
        Ok(())
    }

    pub fn sync(&mut self) -> Result<()> {
        self.writer.flush()?;
        self.writer.get_ref().sync_all()?;
        Ok(())
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::ConstraintMask;

    fn toy_manifest() -> (LikelihoodContext, GridSpec, OptimizerSettings, Manifest) {
        let counts = CountMatrix::new(&[vec![5, 5], vec![3, 7]]).unwrap();
        let mask = ConstraintMask::unconstrained(2);
        let ctx = LikelihoodContext::new(counts, 2, mask.clone()).unwrap();
        let spec = GridSpec::new(mask, vec![4, 4]).unwrap();
        let settings = OptimizerSettings::default();
        let manifest = Manifest::build(&ctx, &spec, &settings);
        (ctx, spec, settings, manifest)
    }

    fn toy_record(id: u64) -> ConvergenceRecord {
        ConvergenceRecord {
            start_id: id,
            theta_final: ThetaParam::new(2, vec![0.25, 0.5]).unwrap(),
            loglik: -13.5,
            grad_linf: 2.5e-7,
            status: Status::Converged,
            outer_iters: 9,
        }
    }

    #[test]
    fn manifest_round_trips() {
        let (_, _, _, manifest) = toy_manifest();
        let parsed = Manifest::from_text(&manifest.to_text()).unwrap();
        assert_eq!(parsed, manifest);
        assert_eq!(parsed.fingerprint(), manifest.fingerprint());
        let (ctx2, spec2) = parsed.to_problem().unwrap();
        assert_eq!(ctx2.dim(), 2);
        assert_eq!(spec2.total_points(), 9);
    }

    #[test]
    fn records_round_trip_through_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("toy.records");
        let (_, _, _, manifest) = toy_manifest();
        let mut store = RecordStore::create(&path, &manifest).unwrap();
        for id in 0..5 {
            store.append(&toy_record(id)).unwrap();
        }
        store.sync().unwrap();
        drop(store);
        let (m2, records) = RecordStore::read(&path).unwrap();
        assert_eq!(m2, manifest);
        assert_eq!(records.len(), 5);
        assert_eq!(records[3], toy_record(3));
    }

    #[test]
    fn create_refuses_existing_store() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("toy.records");
        let (_, _, _, manifest) = toy_manifest();
        let store = RecordStore::create(&path, &manifest).unwrap();
        drop(store);
        assert!(matches!(
            RecordStore::create(&path, &manifest),
            Err(Error::Store(_))
        ));
    }

    #[test]
    fn resume_rejects_fingerprint_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("toy.records");
        let (ctx, spec, _, manifest) = toy_manifest();
        let mut store = RecordStore::create(&path, &manifest).unwrap();
        store.append(&toy_record(0)).unwrap();
        store.sync().unwrap();
        drop(store);
        let altered = Manifest::build(
            &ctx,
            &spec,
            &OptimizerSettings::with_tolerances(1e-13, 1e-12, 1e-12),
        );
        assert!(matches!(
            RecordStore::open_resume(&path, &altered),
            Err(Error::FingerprintMismatch(_))
        ));
    }

    #[test]
    fn torn_tail_is_dropped_on_resume() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("toy.records");
        let (_, _, _, manifest) = toy_manifest();
        let mut store = RecordStore::create(&path, &manifest).unwrap();
        store.append(&toy_record(0)).unwrap();
        store.append(&toy_record(1)).unwrap();
        store.sync().unwrap();
        drop(store);
        // simulate an interrupted write
        let mut bytes = std::fs::read(&path).unwrap();
        bytes.extend_from_slice(&[1, 2, 3, 4, 5]);
        std::fs::write(&path, &bytes).unwrap();
        let (mut store, existing) = RecordStore::open_resume(&path, &manifest).unwrap();
        assert_eq!(existing.len(), 2);
        store.append(&toy_record(2)).unwrap();
        store.sync().unwrap();
        drop(store);
        let (_, records) = RecordStore::read(&path).unwrap();
        assert_eq!(records.len(), 3);
        assert_eq!(records[2], toy_record(2));
    }
}
