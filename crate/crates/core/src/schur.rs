//! Complex Schur decomposition and the N-way Bartels–Stewart solver for
//! Kronecker-sum systems `𝓛_d(A) v = b`.
//!
//! With `A = U T U*`, `𝓛_d(A) = (U ⊗ ... ⊗ U) 𝓛_d(T) (U ⊗ ... ⊗ U)*`, and
//! `𝓛_d(T)` is upper triangular in the mode-1-slowest ordering. The solve
//! transforms the right-hand side mode by mode, back-substitutes over the
//! multi-indices from last to first, and transforms back.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::budget;
use crate::error::{PqrError, Result};
use crate::kron::{self, mode_product, ModeTensor};

/// Relative pivot threshold `εₛ / ‖T‖_F`.
pub const PIVOT_TOLERANCE: f64 = 1e-12;

/// Allowed `‖Im v‖ / ‖v‖` after back-transformation.
pub const IMAGINARY_TOLERANCE: f64 = 1e-9;

const DEFAULT_MAX_ITER: usize = 10_000;

/// Source of complex Schur factorizations.
pub trait SchurBackend {
    /// Returns `(U, T)` with `A = U T U*`, or `None` if the iteration did not converge.
    fn complex_schur(&self, a: DMatrix<Complex64>) -> Option<(DMatrix<Complex64>, DMatrix<Complex64>)>;

    fn max_iter(&self) -> usize;
}

/// Hessenberg reduction plus shifted QR, as implemented by `nalgebra`.
#[derive(Clone, Copy, Debug)]
pub struct NalgebraSchur {
    pub max_iter: usize,
}

impl Default for NalgebraSchur {
    fn default() -> Self {
        Self { max_iter: DEFAULT_MAX_ITER }
    }
}

/// Attempts on a randomly rotated copy after the direct iteration stalls.
const RESTARTS: u64 = 4;

/// Seeded random unitary matrix, the Q factor of a complex Gaussian-like draw.
fn random_unitary(n: usize, seed: u64) -> DMatrix<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z = DMatrix::from_fn(n, n, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    z.qr().q()
}

impl SchurBackend for NalgebraSchur {
    /// The shifted QR iteration can cycle on spectra with exact `±λ`
    /// pairing, as in Hamiltonian matrices. On failure the decomposition is
    /// retried on `QᴴAQ` for a few fixed random unitaries `Q`, which changes
    /// the Hessenberg starting vector; the Schur vectors are mapped back.
    fn complex_schur(&self, a: DMatrix<Complex64>) -> Option<(DMatrix<Complex64>, DMatrix<Complex64>)> {
        if let Some(s) = nalgebra::Schur::try_new(a.clone(), f64::EPSILON, self.max_iter) {
            return Some(s.unpack());
        }
        let n = a.nrows();
        (1..=RESTARTS).find_map(|seed| {
            let q = random_unitary(n, seed);
            let rotated = q.adjoint() * &a * &q;
            nalgebra::Schur::try_new(rotated, f64::EPSILON, self.max_iter).map(|s| {
                let (v, t) = s.unpack();
                (q * v, t)
            })
        })
    }

    fn max_iter(&self) -> usize {
        self.max_iter
    }
}

/// `A = U T U*` with `U` unitary and `T` upper triangular.
#[derive(Clone, Debug)]
pub struct SchurForm {
    u: DMatrix<Complex64>,
    t: DMatrix<Complex64>,
    source: DMatrix<f64>,
    source_hash: u64,
}

fn hash_matrix(a: &DMatrix<f64>) -> u64 {
    let mut h = DefaultHasher::new();
    a.nrows().hash(&mut h);
    a.ncols().hash(&mut h);
    for x in a.iter() {
        x.to_bits().hash(&mut h);
    }
    h.finish()
}

impl SchurForm {
    pub fn u(&self) -> &DMatrix<Complex64> {
        &self.u
    }

    pub fn t(&self) -> &DMatrix<Complex64> {
        &self.t
    }

    pub fn n(&self) -> usize {
        self.t.nrows()
    }

    /// Identifier of the decomposed matrix.
    pub fn source_hash(&self) -> u64 {
        self.source_hash
    }

    /// The matrix that was decomposed.
    pub fn source(&self) -> &DMatrix<f64> {
        &self.source
    }

    pub fn eigenvalues(&self) -> Vec<Complex64> {
        (0..self.n()).map(|i| self.t[(i, i)]).collect()
    }

    /// Moves every diagonal entry satisfying `select` to the leading block,
    /// keeping relative order, by adjacent unitary swaps. Returns the new form
    /// and the number of selected eigenvalues.
    pub fn reordered(&self, select: impl Fn(Complex64) -> bool) -> (SchurForm, usize) {
        let mut out = self.clone();
        let n = out.n();
        let mut placed = 0;
        for i in 0..n {
            if select(out.t[(i, i)]) {
                for k in (placed..i).rev() {
                    out.swap_adjacent(k);
                }
                placed += 1;
            }
        }
        (out, placed)
    }

    /// Exchanges diagonal entries `k` and `k + 1`.
    fn swap_adjacent(&mut self, k: usize) {
        let n = self.n();
        let a = self.t[(k, k)];
        let b = self.t[(k, k + 1)];
        let c = self.t[(k + 1, k + 1)];
        let x1 = b;
        let x2 = c - a;
        let norm = (x1.norm_sqr() + x2.norm_sqr()).sqrt();
        if norm == 0.0 {
            return;
        }
        let g1 = x1 / norm;
        let g2 = x2 / norm;

        // rows k, k+1 <- G* rows
        for j in k..n {
            let r1 = self.t[(k, j)];
            let r2 = self.t[(k + 1, j)];
            self.t[(k, j)] = g1.conj() * r1 + g2.conj() * r2;
            self.t[(k + 1, j)] = -g2 * r1 + g1 * r2;
        }
        // cols k, k+1 <- cols G
        for i in 0..=k + 1 {
            let c1 = self.t[(i, k)];
            let c2 = self.t[(i, k + 1)];
            self.t[(i, k)] = g1 * c1 + g2 * c2;
            self.t[(i, k + 1)] = -g2.conj() * c1 + g1.conj() * c2;
        }
        for i in 0..n {
            let c1 = self.u[(i, k)];
            let c2 = self.u[(i, k + 1)];
            self.u[(i, k)] = g1 * c1 + g2 * c2;
            self.u[(i, k + 1)] = -g2.conj() * c1 + g1.conj() * c2;
        }
        self.t[(k, k)] = c;
        self.t[(k + 1, k + 1)] = a;
        self.t[(k + 1, k)] = Complex64::new(0.0, 0.0);
    }
}

pub fn schur_decompose(a: &DMatrix<f64>) -> Result<SchurForm> {
    schur_decompose_with(&NalgebraSchur::default(), a)
}

pub fn schur_decompose_with(backend: &impl SchurBackend, a: &DMatrix<f64>) -> Result<SchurForm> {
    if !a.is_square() {
        return Err(PqrError::DimensionMismatch(format!(
            "Schur decomposition needs a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(PqrError::NonFinite("matrix passed to the Schur decomposition".into()));
    }
    let ac = a.map(|x| Complex64::new(x, 0.0));
    let (u, mut t) = backend
        .complex_schur(ac)
        .ok_or(PqrError::SchurNoConvergence { max_iter: backend.max_iter() })?;
    let n = t.nrows();
    for j in 0..n {
        for i in j + 1..n {
            t[(i, j)] = Complex64::new(0.0, 0.0);
        }
    }
    Ok(SchurForm { u, t, source: a.clone(), source_hash: hash_matrix(a) })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SolveStats {
    /// Complex multiply-adds spent in the triangular substitution.
    pub multiply_adds: u64,
}

/// Solves `𝓛_d(A) v = b` where `sf` is the Schur form of `A`.
pub fn nway_solve(sf: &SchurForm, d: usize, b: &ModeTensor<f64>) -> Result<ModeTensor<f64>> {
    nway_solve_with_stats(sf, d, b).map(|(v, _)| v)
}

pub fn nway_solve_with_stats(
    sf: &SchurForm,
    d: usize,
    b: &ModeTensor<f64>,
) -> Result<(ModeTensor<f64>, SolveStats)> {
    let n = sf.n();
    if d == 0 || b.modes() != d || b.dims().iter().any(|&s| s != n) {
        return Err(PqrError::DimensionMismatch(format!(
            "right-hand side must have {d} modes of size {n}, got {:?}",
            b.dims()
        )));
    }
    let len = budget::checked_pow(n, d)?;
    let dims = vec![n; d];

    let mut w: Vec<Complex64> = b.data().iter().map(|&x| Complex64::new(x, 0.0)).collect();
    let uh = sf.u.adjoint();
    for mode in 0..d {
        w = mode_product(&w, &dims, mode, &uh);
    }

    let stats = substitute(&sf.t, d, &mut w)?;
    debug_assert!(
        stats.multiply_adds <= 4 * (d as u64) * (len as u64) * (n as u64),
        "substitution used {} multiply-adds",
        stats.multiply_adds
    );

    for mode in 0..d {
        w = mode_product(&w, &dims, mode, &sf.u);
    }

    let total: f64 = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let imag: f64 = w.iter().map(|z| z.im * z.im).sum::<f64>().sqrt();
    let limit = IMAGINARY_TOLERANCE * total;
    if imag > limit {
        return Err(PqrError::NonRealSolution { imag, limit });
    }
    let v = ModeTensor::uniform(n, d, w.into_iter().map(|z| z.re).collect())?;

    #[cfg(debug_assertions)]
    check_residual(sf, d, b, &v);

    Ok((v, stats))
}

#[cfg(debug_assertions)]
fn check_residual(sf: &SchurForm, d: usize, b: &ModeTensor<f64>, v: &ModeTensor<f64>) {
    let applied = kron::lyap_sum_apply(&sf.source, d, v).expect("residual apply");
    let norm = |x: &[f64]| x.iter().map(|a| a * a).sum::<f64>().sqrt();
    let diff: Vec<f64> = applied.data().iter().zip(b.data()).map(|(a, c)| a - c).collect();
    let res = norm(&diff);
    debug_assert!(
        res <= 1e-9 * norm(b.data()).max(f64::MIN_POSITIVE),
        "N-way residual {res:e} exceeds 1e-9·‖b‖ = {:e}",
        1e-9 * norm(b.data())
    );
}

/// Back substitution for `𝓛_d(T) x = w` in place, `T` upper triangular.
///
/// Walks linear indices from last to first. Once the block of mode `l` that
/// starts at the current index is finished (all faster digits are zero), its
/// coupling `T[i', i_l]` is pushed into the earlier blocks `i' < i_l` of the
/// same parent as one contiguous update.
fn substitute(t: &DMatrix<Complex64>, d: usize, w: &mut [Complex64]) -> Result<SolveStats> {
    let n = t.nrows();
    let diag: Vec<Complex64> = (0..n).map(|i| t[(i, i)]).collect();
    let threshold = PIVOT_TOLERANCE * t.norm();
    let spectral_margin = diag.iter().map(|z| -z.re).fold(f64::INFINITY, f64::min);

    let mut digits = vec![n - 1; d];
    let mut stats = SolveStats::default();
    for idx in (0..w.len()).rev() {
        let pivot: Complex64 = digits.iter().map(|&i| diag[i]).sum();
        let magnitude = pivot.norm();
        if magnitude < threshold || magnitude == 0.0 {
            return Err(PqrError::EigenvalueSumNearZero { magnitude, threshold });
        }
        if spectral_margin > 0.0 {
            debug_assert!(
                magnitude >= d as f64 * spectral_margin * (1.0 - 1e-10),
                "pivot {magnitude:e} below d·δ = {:e}",
                d as f64 * spectral_margin
            );
        }
        w[idx] /= pivot;

        let mut block = 1usize;
        for level in (0..d).rev() {
            let digit = digits[level];
            if digit > 0 {
                let (head, tail) = w.split_at_mut(idx);
                let src = &tail[..block];
                for earlier in 0..digit {
                    let coupling = t[(earlier, digit)];
                    if coupling.re == 0.0 && coupling.im == 0.0 {
                        continue;
                    }
                    let start = idx - (digit - earlier) * block;
                    for (dst, s) in head[start..start + block].iter_mut().zip(src) {
                        *dst -= coupling * *s;
                    }
                    stats.multiply_adds += block as u64;
                }
                break;
            }
            block *= n;
        }

        for level in (0..d).rev() {
            if digits[level] > 0 {
                digits[level] -= 1;
                break;
            }
            digits[level] = n - 1;
        }
    }
    Ok(stats)
}

/// Solves `AᵀV + VA + C = 0` for symmetric `V`.
pub fn lyap2_solve(a: &DMatrix<f64>, c: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if !a.is_square() || c.shape() != (n, n) {
        return Err(PqrError::DimensionMismatch(format!(
            "Lyapunov solve needs square A and C of equal size, got {:?} and {:?}",
            a.shape(),
            c.shape()
        )));
    }
    let sf = schur_decompose(&a.transpose())?;
    let rhs = ModeTensor::uniform(n, 2, kron::vec(&(-c)))?;
    let v = nway_solve(&sf, 2, &rhs)?;
    let v = kron::unvec(v.data(), n, n)?;
    Ok((&v + v.transpose()) * 0.5)
}
