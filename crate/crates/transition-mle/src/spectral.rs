//! Eigendecomposition of transition matrices and enumeration of real
//! primary matrix roots.
//!
//! A primary `T`-th root picks one `T`-th-root branch per eigenvalue in the
//! diagonalization `P = A D A^{-1}`. With the unit Perron eigenvalue pinned
//! to branch `+1` (a stochastic root must satisfy `R 1 = 1`), the number of
//! real primary roots is `2^r T^c`, where `r` counts positive non-Perron
//! eigenvalues and `c` counts complex conjugate pairs. An even `T` together
//! with any negative eigenvalue leaves no real root at all.
//!
//! Eigenvalues come from a Schur decomposition (nalgebra); eigenvectors are
//! recovered per eigenvalue by a small complex null-space solve, which also
//! copes with repeated-but-diagonalizable inputs like the identity.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matrix::{Mat, StochasticMatrix, TAU_STOCH};

/// Tolerance for classifying eigenvalues (real vs complex, unit, zero,
/// coincident).
const EIG_TOL: f64 = 1e-9;
/// Rank threshold for the null-space solve, relative to the matrix scale.
const RANK_TOL: f64 = 1e-8;
/// Imaginary residue below this in a reconstructed candidate is truncated to
/// zero; anything larger disqualifies the candidate as non-real.
const IMAG_TOL: f64 = 1e-9;
/// Candidate roots must reproduce the input to this accuracy when powered.
const RECONSTRUCT_TOL: f64 = 1e-8;

/// Square complex matrix, row-major.
#[derive(Clone, Debug)]
struct CMat {
    s: usize,
    data: Vec<Complex64>,
}

impl CMat {
    fn zeros(s: usize) -> Self {
        CMat { s, data: vec![Complex64::ZERO; s * s] }
    }

    #[inline]
    fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.s + j]
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.s + j] = v;
    }

    fn mul(&self, rhs: &CMat) -> CMat {
        let s = self.s;
        let mut out = CMat::zeros(s);
        for i in 0..s {
            for k in 0..s {
                let a = self.get(i, k);
                if a == Complex64::ZERO {
                    continue;
                }
                for j in 0..s {
                    let v = out.get(i, j) + a * rhs.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    /// Scales column `j` by `c`.
    fn scale_col(&mut self, j: usize, c: Complex64) {
        for i in 0..self.s {
            let v = self.get(i, j) * c;
            self.set(i, j, v);
        }
    }

    /// Gauss-Jordan inverse with partial pivoting.
    fn inverse(&self) -> Result<CMat> {
        let s = self.s;
        let mut a = self.data.clone();
        let mut inv = CMat::zeros(s);
        for i in 0..s {
            inv.set(i, i, Complex64::ONE);
        }
        let scale = self
            .data
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
            .max(1.0);
        for col in 0..s {
            let (pivot_row, pivot_norm) = (col..s)
                .map(|r| (r, a[r * s + col].norm()))
                .max_by(|x, y| x.1.total_cmp(&y.1))
                .unwrap();
            if pivot_norm <= 1e-12 * scale {
                return Err(Error::Defective(
                    "eigenvector matrix numerically singular".into(),
                ));
            }
            if pivot_row != col {
                for j in 0..s {
                    a.swap(col * s + j, pivot_row * s + j);
                    inv.data.swap(col * s + j, pivot_row * s + j);
                }
            }
            let piv = a[col * s + col];
            for j in 0..s {
                a[col * s + j] /= piv;
                inv.data[col * s + j] /= piv;
            }
            for r in 0..s {
                if r == col {
                    continue;
                }
                let factor = a[r * s + col];
                if factor == Complex64::ZERO {
                    continue;
                }
                for j in 0..s {
                    let av = a[col * s + j];
                    let iv = inv.data[col * s + j];
                    a[r * s + j] -= factor * av;
                    inv.data[r * s + j] -= factor * iv;
                }
            }
        }
        Ok(inv)
    }
}

/// Null vector of a (near-)singular complex matrix by row echelon reduction.
/// `instance` selects among multiple independent null directions, which keeps
/// repeated diagonalizable eigenvalues (identity-like inputs) workable.
fn null_vector(b: &CMat, instance: usize) -> Result<Vec<Complex64>> {
    let s = b.s;
    let mut m = b.data.clone();
    let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
    let tol = RANK_TOL * scale;
    let mut pivot_rows: Vec<(usize, usize)> = Vec::new(); // (row, col)
    let mut row = 0;
    for col in 0..s {
        let (best_row, best_norm) = (row..s)
            .map(|r| (r, m[r * s + col].norm()))
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .unwrap_or((row, 0.0));
        if best_norm <= tol {
            continue; // free column
        }
        if best_row != row {
            for j in 0..s {
                m.swap(row * s + j, best_row * s + j);
            }
        }
        let piv = m[row * s + col];
        for r in row + 1..s {
            let factor = m[r * s + col] / piv;
            if factor == Complex64::ZERO {
                continue;
            }
            for j in col..s {
                let v = m[row * s + j];
                m[r * s + j] -= factor * v;
            }
        }
        pivot_rows.push((row, col));
        row += 1;
        if row == s {
            break;
        }
    }
    let pivot_cols: Vec<usize> = pivot_rows.iter().map(|&(_, c)| c).collect();
    let free_cols: Vec<usize> = (0..s).filter(|c| !pivot_cols.contains(c)).collect();
    if instance >= free_cols.len() {
        return Err(Error::Defective(format!(
            "eigenvalue multiplicity exceeds null-space dimension ({} free directions)",
            free_cols.len()
        )));
    }
    let mut x = vec![Complex64::ZERO; s];
    x[free_cols[instance]] = Complex64::ONE;
    for &(r, c) in pivot_rows.iter().rev() {
        let mut acc = Complex64::ZERO;
        for j in c + 1..s {
            acc += m[r * s + j] * x[j];
        }
        x[c] = -acc / m[r * s + c];
    }
    Ok(x)
}

/// Eigenstructure of a transition matrix: eigenvalues in descending modulus,
/// matched eigenvectors, and the branch-counting summary used by root
/// enumeration. `r` excludes the unit Perron eigenvalue.
#[derive(Clone, Debug)]
pub struct EigenStructure {
    /// Descending modulus; conjugate pairs adjacent with `+Im` first.
    pub eigenvalues: Vec<Complex64>,
    /// Eigenvectors as columns, matched to `eigenvalues`.
    pub eigenvectors: Vec<Vec<Complex64>>,
    /// Count of positive real eigenvalues, excluding the Perron eigenvalue.
    pub r: usize,
    /// Count of complex conjugate pairs.
    pub c: usize,
    pub has_negative: bool,
    pub distinct: bool,
    /// Index of the Perron (unit) eigenvalue within `eigenvalues`.
    perron: usize,
    a: CMat,
    a_inv: CMat,
}

impl EigenStructure {
    /// Reconstructs `A D A^{-1}` for the given diagonal and returns the
    /// largest imaginary residue alongside the real part.
    fn assemble(&self, diag: &[Complex64]) -> (Mat, f64) {
        let s = self.a.s;
        let mut ad = self.a.clone();
        for (j, &w) in diag.iter().enumerate() {
            ad.scale_col(j, w);
        }
        let full = ad.mul(&self.a_inv);
        let mut out = Mat::zeros(s);
        let mut max_imag = 0.0f64;
        for i in 0..s {
            for j in 0..s {
                let z = full.get(i, j);
                max_imag = max_imag.max(z.im.abs());
                out.set(i, j, z.re);
            }
        }
        (out, max_imag)
    }
}

/// Full complex eigendecomposition of `P` with reconstruction check.
pub fn eigen_decompose(p: &StochasticMatrix) -> Result<EigenStructure> {
    let s = p.dim();
    let dm = DMatrix::from_fn(s, s, |i, j| p.get(i, j));
    let mut eigs: Vec<Complex64> = dm.complex_eigenvalues().iter().copied().collect();
    // descending modulus; ties by descending re then descending im puts the
    // +Im member of each conjugate pair first
    eigs.sort_by(|a, b| {
        b.norm()
            .total_cmp(&a.norm())
            .then(b.re.total_cmp(&a.re))
            .then(b.im.total_cmp(&a.im))
    });
    // snap numerically real eigenvalues onto the real axis and re-pair
    // conjugates exactly
    for z in eigs.iter_mut() {
        if z.im.abs() <= EIG_TOL {
            z.im = 0.0;
        }
    }
    let mut k = 0;
    while k < s {
        if eigs[k].im > 0.0 {
            if k + 1 >= s || (eigs[k + 1].conj() - eigs[k]).norm() > 1e-6 {
                return Err(Error::Defective(
                    "complex eigenvalue without conjugate partner".into(),
                ));
            }
            eigs[k + 1] = eigs[k].conj();
            k += 2;
        } else {
            k += 1;
        }
    }

    let perron = eigs
        .iter()
        .position(|z| z.im == 0.0 && (z.re - 1.0).abs() <= EIG_TOL)
        .ok_or_else(|| Error::Defective("no unit eigenvalue found".into()))?;

    let r = eigs
        .iter()
        .enumerate()
        .filter(|&(i, z)| i != perron && z.im == 0.0 && z.re > EIG_TOL)
        .count();
    let c = eigs.iter().filter(|z| z.im > 0.0).count();
    let has_negative = eigs.iter().any(|z| z.im == 0.0 && z.re < -EIG_TOL);
    let mut distinct = true;
    for i in 0..s {
        for j in i + 1..s {
            if (eigs[i] - eigs[j]).norm() <= EIG_TOL {
                distinct = false;
            }
        }
    }

    // eigenvectors: null space of (P - λI); conjugate partners share vectors
    let mut vectors: Vec<Option<Vec<Complex64>>> = vec![None; s];
    for i in 0..s {
        if eigs[i].im < 0.0 {
            continue; // fill from the conjugate partner below
        }
        let instance = (0..i).filter(|&j| (eigs[j] - eigs[i]).norm() <= EIG_TOL).count();
        let mut b = CMat::zeros(s);
        for bi in 0..s {
            for bj in 0..s {
                let v = Complex64::new(p.get(bi, bj), 0.0)
                    - if bi == bj { eigs[i] } else { Complex64::ZERO };
                b.set(bi, bj, v);
            }
        }
        let mut v = null_vector(&b, instance)?;
        // deterministic normalization: largest-modulus component becomes 1
        let (mut best_idx, mut best) = (0, 0.0);
        for (idx, z) in v.iter().enumerate() {
            if z.norm() > best * (1.0 + 1e-12) {
                best = z.norm();
                best_idx = idx;
            }
        }
        let pivot = v[best_idx];
        for z in v.iter_mut() {
            *z /= pivot;
        }
        vectors[i] = Some(v);
    }
    for i in 0..s {
        if eigs[i].im < 0.0 {
            let partner = (0..s)
                .find(|&j| eigs[j] == eigs[i].conj() && vectors[j].is_some())
                .ok_or_else(|| Error::Defective("unpaired conjugate eigenvalue".into()))?;
            let conj_vec: Vec<Complex64> =
                vectors[partner].as_ref().unwrap().iter().map(|z| z.conj()).collect();
            vectors[i] = Some(conj_vec);
        }
    }
    let eigenvectors: Vec<Vec<Complex64>> = vectors.into_iter().map(Option::unwrap).collect();

    let mut a = CMat::zeros(s);
    for (j, v) in eigenvectors.iter().enumerate() {
        for i in 0..s {
            a.set(i, j, v[i]);
        }
    }
    let a_inv = a.inverse()?;

    let structure = EigenStructure {
        eigenvalues: eigs.clone(),
        eigenvectors,
        r,
        c,
        has_negative,
        distinct,
        perron,
        a,
        a_inv,
    };
    let (recon, max_imag) = structure.assemble(&eigs);
    let err = recon.max_abs_diff(p.as_mat());
    if err > 1e-9 || max_imag > 1e-9 {
        return Err(Error::Defective(format!(
            "eigendecomposition reconstruction error {err:.2e} (imag {max_imag:.2e})"
        )));
    }
    Ok(structure)
}

/// One enumerated root: a real matrix whose `T`-th power reproduces the
/// input, flagged for stochasticity.
#[derive(Clone, Debug)]
pub struct RootCandidate {
    pub matrix: Mat,
    /// Branch index per eigenvalue slot (Perron and negative slots are 0;
    /// positive slots 0 = principal, 1 = negated; pair slots 0..T-1).
    pub branch_labels: Vec<u32>,
    pub is_stochastic: bool,
    pub min_entry: f64,
}

/// Per-eigenvalue branch choices that keep the assembled root real.
enum BranchSlot {
    /// Perron eigenvalue, or a forced single real branch.
    Fixed(Complex64),
    /// Positive real eigenvalue: principal root, optionally its negation
    /// (even `T` only).
    PositiveReal { principal: f64, both_signs: bool },
    /// Leading (+Im) member of a conjugate pair: `T` rotated branches; the
    /// partner always mirrors conjugately.
    PairLead { modulus_root: f64, base_arg: f64, t: u32 },
    /// Trailing (-Im) member: mirrors the lead slot at `lead_index`.
    PairMirror { lead_index: usize },
}

impl BranchSlot {
    fn choice_count(&self) -> u128 {
        match self {
            BranchSlot::Fixed(_) => 1,
            BranchSlot::PositiveReal { both_signs, .. } => {
                if *both_signs {
                    2
                } else {
                    1
                }
            }
            BranchSlot::PairLead { t, .. } => *t as u128,
            BranchSlot::PairMirror { .. } => 1,
        }
    }

    fn branch_value(&self, label: u32, diag: &[Complex64]) -> Complex64 {
        match self {
            BranchSlot::Fixed(w) => *w,
            BranchSlot::PositiveReal { principal, both_signs } => {
                debug_assert!(label < if *both_signs { 2 } else { 1 });
                if label == 0 {
                    Complex64::new(*principal, 0.0)
                } else {
                    Complex64::new(-*principal, 0.0)
                }
            }
            BranchSlot::PairLead { modulus_root, base_arg, t } => {
                let arg = (base_arg + 2.0 * std::f64::consts::PI * label as f64) / *t as f64;
                Complex64::from_polar(*modulus_root, arg)
            }
            BranchSlot::PairMirror { lead_index } => diag[*lead_index].conj(),
        }
    }
}

/// Builds branch slots for every eigenvalue. Returns `None` when a negative
/// eigenvalue with even `T` rules out real roots entirely.
fn branch_slots(eig: &EigenStructure, t: u32) -> Result<Option<Vec<BranchSlot>>> {
    let mut slots = Vec::with_capacity(eig.eigenvalues.len());
    for (i, z) in eig.eigenvalues.iter().enumerate() {
        if i == eig.perron {
            slots.push(BranchSlot::Fixed(Complex64::ONE));
        } else if z.im == 0.0 {
            if z.re.abs() <= EIG_TOL {
                // nonsingular inputs are required upstream; a zero eigenvalue
                // still has the unique root 0
                slots.push(BranchSlot::Fixed(Complex64::ZERO));
            } else if z.re > 0.0 {
                slots.push(BranchSlot::PositiveReal {
                    principal: z.re.powf(1.0 / t as f64),
                    both_signs: t % 2 == 0,
                });
            } else if t % 2 == 0 {
                return Ok(None);
            } else {
                // odd T: the single real branch of a negative eigenvalue
                slots.push(BranchSlot::Fixed(Complex64::new(
                    -(-z.re).powf(1.0 / t as f64),
                    0.0,
                )));
            }
        } else if z.im > 0.0 {
            slots.push(BranchSlot::PairLead {
                modulus_root: z.norm().powf(1.0 / t as f64),
                base_arg: z.arg(),
                t,
            });
        } else {
            let lead = (0..i)
                .find(|&j| eig.eigenvalues[j] == z.conj())
                .ok_or_else(|| Error::Defective("unpaired conjugate eigenvalue".into()))?;
            slots.push(BranchSlot::PairMirror { lead_index: lead });
        }
    }
    Ok(Some(slots))
}

fn assemble_candidate(
    eig: &EigenStructure,
    slots: &[BranchSlot],
    labels: &[u32],
) -> Option<RootCandidate> {
    let s = eig.eigenvalues.len();
    let mut diag = vec![Complex64::ZERO; s];
    for i in 0..s {
        diag[i] = slots[i].branch_value(labels[i], &diag);
    }
    let (matrix, max_imag) = eig.assemble(&diag);
    if max_imag > IMAG_TOL {
        return None; // not a real candidate
    }
    let mut min_entry = f64::INFINITY;
    let mut rows_ok = true;
    for i in 0..s {
        let mut sum = 0.0;
        for j in 0..s {
            min_entry = min_entry.min(matrix.get(i, j));
            sum += matrix.get(i, j);
        }
        if (sum - 1.0).abs() > TAU_STOCH {
            rows_ok = false;
        }
    }
    let is_stochastic = rows_ok && min_entry >= -TAU_STOCH;
    Some(RootCandidate {
        matrix,
        branch_labels: labels.to_vec(),
        is_stochastic,
        min_entry,
    })
}

fn verify_candidate(cand: &RootCandidate, p: &StochasticMatrix, t: u32) -> bool {
    cand.matrix.pow(t).max_abs_diff(p.as_mat()) < RECONSTRUCT_TOL
}

/// Principal `T`-th root: the principal branch for every eigenvalue. Fails
/// when a negative eigenvalue and even `T` leave no real principal root.
pub fn principal_root(p: &StochasticMatrix, t: u32) -> Result<RootCandidate> {
    let eig = eigen_decompose(p)?;
    let slots = branch_slots(&eig, t)?.ok_or_else(|| {
        Error::NoRealRoot(format!(
            "negative eigenvalue with even T = {t}; the principal root has an imaginary part"
        ))
    })?;
    let labels = vec![0u32; slots.len()];
    let cand = assemble_candidate(&eig, &slots, &labels).ok_or_else(|| {
        Error::Defective("principal root has nonvanishing imaginary part".into())
    })?;
    if !verify_candidate(&cand, p, t) {
        return Err(Error::Defective(
            "principal root fails to reproduce the input when powered".into(),
        ));
    }
    Ok(cand)
}

/// Enumerates every real primary `T`-th root (Perron branch fixed to `+1`),
/// in lexicographic branch-label order, each verified to reproduce `P` and
/// flagged for stochasticity. Returns an empty list when a negative
/// eigenvalue with even `T` admits no real root.
pub fn enumerate_real_roots(
    p: &StochasticMatrix,
    t: u32,
    budget: u64,
) -> Result<Vec<RootCandidate>> {
    let eig = eigen_decompose(p)?;
    if !eig.distinct {
        return Err(Error::Defective(
            "repeated eigenvalues: primary-root enumeration requires distinct eigenvalues".into(),
        ));
    }
    if eig.eigenvalues.iter().any(|z| z.norm() <= EIG_TOL) {
        return Err(Error::Defective("singular input matrix".into()));
    }
    let slots = match branch_slots(&eig, t)? {
        Some(s) => s,
        None => return Ok(Vec::new()),
    };
    let expected: u128 = slots.iter().map(|s| s.choice_count()).product();
    if expected > budget as u128 {
        return Err(Error::EnumerationInfeasible { expected, budget });
    }

    let counts: Vec<u32> = slots.iter().map(|s| s.choice_count() as u32).collect();
    let mut labels = vec![0u32; slots.len()];
    let mut out = Vec::with_capacity(expected as usize);
    loop {
        if let Some(cand) = assemble_candidate(&eig, &slots, &labels) {
            if !verify_candidate(&cand, p, t) {
                return Err(Error::Defective(
                    "enumerated root fails to reproduce the input when powered".into(),
                ));
            }
            out.push(cand);
        }
        // lexicographic odometer over branch labels
        let mut pos = slots.len();
        loop {
            if pos == 0 {
                return Ok(out);
            }
            pos -= 1;
            labels[pos] += 1;
            if labels[pos] < counts[pos] {
                break;
            }
            labels[pos] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::matrix_power;
    use crate::params::{interval_mle, ConstraintMask, MaskEntry};

    fn study2_interval_mle() -> StochasticMatrix {
        use MaskEntry::*;
        let n = crate::matrix::CountMatrix::new(&[
            vec![4494, 1257, 417, 61],
            vec![0, 1734, 1214, 36],
            vec![0, 0, 6724, 2240],
            vec![0, 0, 0, 0],
        ])
        .unwrap();
        let mut mask = ConstraintMask::new(vec![
            vec![Free, Free, Free],
            vec![Fixed(0.0), Free, Free],
            vec![Fixed(0.0), Fixed(0.0), Free],
            vec![Free, Free, Free],
        ])
        .unwrap();
        mask.set_absorbing(3);
        interval_mle(&n, &mask).unwrap()
    }

    fn study6_interval_mle() -> StochasticMatrix {
        let n = crate::matrix::CountMatrix::new(&[
            vec![200, 400, 100],
            vec![100, 250, 300],
            vec![150, 200, 100],
        ])
        .unwrap();
        interval_mle(&n, &ConstraintMask::unconstrained(3)).unwrap()
    }

    #[test]
    fn study2_eigenvalues() {
        let eig = eigen_decompose(&study2_interval_mle()).unwrap();
        let expected = [1.0, 0.750, 0.721, 0.581];
        for (z, e) in eig.eigenvalues.iter().zip(expected) {
            assert!(z.im == 0.0, "unexpected complex eigenvalue {z}");
            assert!((z.re - e).abs() < 1e-3, "{} vs {e}", z.re);
        }
        assert_eq!(eig.r, 3);
        assert_eq!(eig.c, 0);
        assert!(!eig.has_negative);
        assert!(eig.distinct);
    }

    #[test]
    fn identity_eigendecomposition() {
        let p = StochasticMatrix::new(Mat::identity(3)).unwrap();
        let eig = eigen_decompose(&p).unwrap();
        assert!(eig.eigenvalues.iter().all(|z| (z.re - 1.0).abs() < 1e-12 && z.im == 0.0));
        assert!(!eig.distinct);
    }

    #[test]
    fn counting_identity_when_distinct() {
        let eig = eigen_decompose(&study6_interval_mle()).unwrap();
        // r + 2c + negatives + 1 = s for distinct spectra
        let negatives = eig
            .eigenvalues
            .iter()
            .filter(|z| z.im == 0.0 && z.re < -EIG_TOL)
            .count();
        assert_eq!(eig.r + 2 * eig.c + negatives + 1, 3);
    }

    #[test]
    fn study2_principal_root_matches_printed() {
        let p = study2_interval_mle();
        let root = principal_root(&p, 12).unwrap();
        let printed = [
            [0.973, 0.025, 0.001, 0.001],
            [0.0, 0.956, 0.049, -0.005],
            [0.0, 0.0, 0.976, 0.024],
            [0.0, 0.0, 0.0, 1.0],
        ];
        for i in 0..4 {
            for j in 0..4 {
                assert!(
                    (root.matrix.get(i, j) - printed[i][j]).abs() < 6e-4,
                    "({i},{j}): {} vs {}",
                    root.matrix.get(i, j),
                    printed[i][j]
                );
            }
        }
        assert!(!root.is_stochastic);
        assert!(root.min_entry < -4e-3);
    }

    #[test]
    fn identity_principal_root_is_identity() {
        let p = StochasticMatrix::new(Mat::identity(4)).unwrap();
        let root = principal_root(&p, 7).unwrap();
        assert!(root.matrix.max_abs_diff(&Mat::identity(4)) < 1e-12);
        assert!(root.is_stochastic);
    }

    #[test]
    fn construct_then_invert_recovers_base() {
        // known stochastic base with distinct positive eigenvalues
        let base = StochasticMatrix::from_rows(&[
            vec![0.7, 0.2, 0.1],
            vec![0.1, 0.8, 0.1],
            vec![0.05, 0.15, 0.8],
        ])
        .unwrap();
        let p6 = matrix_power(&base, 6);
        let root = principal_root(&p6, 6).unwrap();
        assert!(root.matrix.max_abs_diff(base.as_mat()) < 1e-8);
        assert!(root.is_stochastic);
    }

    #[test]
    fn study2_enumeration_eight_roots_none_stochastic() {
        let p = study2_interval_mle();
        let roots = enumerate_real_roots(&p, 12, 1 << 20).unwrap();
        assert_eq!(roots.len(), 8); // 2^3 with the Perron branch fixed
        assert!(roots.iter().all(|r| !r.is_stochastic));
        // principal root is the all-zero-label member
        let principal = principal_root(&p, 12).unwrap();
        let member = roots
            .iter()
            .find(|r| r.branch_labels.iter().all(|&l| l == 0))
            .unwrap();
        assert!(member.matrix.max_abs_diff(&principal.matrix) < 1e-12);
    }

    #[test]
    fn study6_two_square_roots() {
        let p = study6_interval_mle();
        let roots = enumerate_real_roots(&p, 2, 1 << 20).unwrap();
        assert_eq!(roots.len(), 2); // T^c = 2 with one conjugate pair
        assert!(roots.iter().all(|r| !r.is_stochastic));
        let printed_first = [
            [0.601, 0.560, -0.160],
            [-0.032, 0.502, 0.530],
            [0.357, 0.284, 0.359],
        ];
        let printed_second = [
            [-0.118, 0.337, 0.781],
            [0.515, 0.395, 0.090],
            [0.126, 0.612, 0.262],
        ];
        // match as a set: each printed root appears among the candidates
        for printed in [printed_first, printed_second] {
            let hit = roots.iter().any(|r| {
                (0..3).all(|i| (0..3).all(|j| (r.matrix.get(i, j) - printed[i][j]).abs() < 6e-4))
            });
            assert!(hit, "printed root not found");
        }
        let entry13: Vec<f64> = roots.iter().map(|r| r.matrix.get(0, 2)).collect();
        assert!(entry13.iter().any(|&v| (v - (-0.160)).abs() < 6e-4));
    }

    #[test]
    fn two_by_two_closed_form_roots() {
        // eigenvalues {1, λ}, T = 2: branches ±sqrt(λ)
        let p = StochasticMatrix::from_rows(&[vec![0.8, 0.2], vec![0.3, 0.7]]).unwrap();
        let lambda: f64 = 0.5; // trace - 1
        let roots = enumerate_real_roots(&p, 2, 16).unwrap();
        assert_eq!(roots.len(), 2);
        // closed form: R = (1/(1+r)) [[p21 + r + (λ r ... )]] is messy; verify
        // via the eigenvalue branch instead
        for root in &roots {
            let eig = eigen_decompose(&StochasticMatrix::new(root.matrix.clone()).unwrap_or(p.clone()));
            let _ = eig; // candidate may be non-stochastic; check powers instead
            assert!(root.matrix.pow(2).max_abs_diff(p.as_mat()) < 1e-9);
        }
        let branch_vals: Vec<f64> = roots
            .iter()
            .map(|r| r.matrix.get(0, 0) + r.matrix.get(1, 1) - 1.0) // trace - 1 = root eigenvalue
            .collect();
        assert!(branch_vals.iter().any(|v| (v - lambda.sqrt()).abs() < 1e-9));
        assert!(branch_vals.iter().any(|v| (v + lambda.sqrt()).abs() < 1e-9));
        // the +sqrt branch is entrywise admissible here, hence stochastic
        assert!(roots.iter().any(|r| r.is_stochastic));
    }

    #[test]
    fn negative_eigenvalue_even_t_has_no_real_roots() {
        // eigenvalues {1, -0.5}
        let p = StochasticMatrix::from_rows(&[vec![0.2, 0.8], vec![0.7, 0.3]]).unwrap();
        let roots = enumerate_real_roots(&p, 2, 16).unwrap();
        assert!(roots.is_empty());
        assert!(matches!(principal_root(&p, 2), Err(Error::NoRealRoot(_))));
        // odd T: the forced real branch exists
        let odd = enumerate_real_roots(&p, 3, 16).unwrap();
        assert_eq!(odd.len(), 1);
    }

    #[test]
    fn enumeration_budget_enforced() {
        let p = study6_interval_mle();
        let err = enumerate_real_roots(&p, 100, 10).unwrap_err();
        assert!(matches!(err, Error::EnumerationInfeasible { expected: 100, budget: 10 }));
    }

    #[test]
    fn candidates_reproduce_input_when_powered() {
        let p = study6_interval_mle();
        for t in [2u32, 4, 5] {
            for root in enumerate_real_roots(&p, t, 1 << 20).unwrap() {
                assert!(root.matrix.pow(t).max_abs_diff(p.as_mat()) < 1e-8);
            }
        }
    }

    #[test]
    fn repeated_eigenvalues_rejected_for_enumeration() {
        let p = StochasticMatrix::new(Mat::identity(3)).unwrap();
        assert!(matches!(
            enumerate_real_roots(&p, 2, 16),
            Err(Error::Defective(_))
        ));
    }
}
