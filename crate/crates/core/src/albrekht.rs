//! Degree-by-degree power-series solution of the HJB equations for
//! polynomial-quadratic regulator problems.
//!
//! The state equation is `ẋ = Ax + Bu + Σ_k N_k x^⊗k` and the running cost
//! `xᵀQx + uᵀRu`. The value function is `Σ_k v_kᵀ x^⊗k` (k ≥ 2) and the
//! feedback `Σ_j k_j x^⊗j` (j ≥ 1). After the Riccati step, every further
//! value coefficient solves `𝓛_{d+1}(A_cᵀ) v_{d+1} = c` with the same
//! closed-loop matrix `A_c = A + Bk₁`, so a single Schur form serves all
//! degrees, and each gain follows directly from the value coefficient one
//! degree higher.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DMatrixViewMut, DVector, SymmetricEigen};
use rayon::prelude::*;

use crate::budget;
use crate::error::{PqrError, Result};
use crate::kron::{self, extend_monomial, ModeTensor};
use crate::riccati::{care_solve, spd_factor, AreSolution};
use crate::schur::{nway_solve_with_stats, schur_decompose, SchurForm, SolveStats};

#[derive(Clone, Debug)]
pub struct PolynomialSystem {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    nonlinear: BTreeMap<usize, DMatrix<f64>>,
}

impl PolynomialSystem {
    /// Linear system `ẋ = Ax + Bu`; add polynomial terms with [`Self::with_term`].
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>) -> Result<Self> {
        if !a.is_square() || b.nrows() != a.nrows() {
            return Err(PqrError::DimensionMismatch(format!(
                "A is {:?} and B is {:?}",
                a.shape(),
                b.shape()
            )));
        }
        if a.iter().chain(b.iter()).any(|x| !x.is_finite()) {
            return Err(PqrError::NonFinite("A or B".into()));
        }
        Ok(Self { a, b, nonlinear: BTreeMap::new() })
    }

    /// Adds `N_k`, an `n × n^k` matrix acting on `x^⊗k`. An existing term
    /// of the same degree is replaced.
    pub fn with_term(mut self, degree: usize, nk: DMatrix<f64>) -> Result<Self> {
        let n = self.n();
        if degree < 2 {
            return Err(PqrError::InvalidParameter(format!(
                "nonlinear terms start at degree 2, got {degree}"
            )));
        }
        let cols = budget::checked_pow(n, degree)?;
        if nk.shape() != (n, cols) {
            return Err(PqrError::DimensionMismatch(format!(
                "N_{degree} must be {n}x{cols}, got {:?}",
                nk.shape()
            )));
        }
        if nk.iter().any(|x| !x.is_finite()) {
            return Err(PqrError::NonFinite(format!("N_{degree}")));
        }
        self.nonlinear.insert(degree, nk);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn m(&self) -> usize {
        self.b.ncols()
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn nonlinearity(&self, degree: usize) -> Option<&DMatrix<f64>> {
        self.nonlinear.get(&degree)
    }

    pub fn terms(&self) -> impl Iterator<Item = (usize, &DMatrix<f64>)> {
        self.nonlinear.iter().map(|(&k, m)| (k, m))
    }

    /// Polynomial degree `p` of the right-hand side (1 when linear).
    pub fn degree(&self) -> usize {
        self.nonlinear.keys().next_back().copied().unwrap_or(1)
    }

    /// `f(x) = Σ_k N_k x^⊗k`.
    pub fn f(&self, x: &[f64]) -> DVector<f64> {
        let mut cache = MonomialCache::new(x);
        self.f_cached(&mut cache)
    }

    pub(crate) fn f_cached(&self, cache: &mut MonomialCache) -> DVector<f64> {
        let mut out = DVector::zeros(self.n());
        for (&k, nk) in &self.nonlinear {
            let z = DVector::from_column_slice(cache.power(k));
            out.gemv(1.0, nk, &z, 1.0);
        }
        out
    }

    /// `Ax + Bu + f(x)`.
    pub fn dynamics(&self, x: &[f64], u: &[f64]) -> DVector<f64> {
        let xv = DVector::from_column_slice(x);
        let uv = DVector::from_column_slice(u);
        &self.a * xv + &self.b * uv + self.f(x)
    }
}

/// Tensor powers `x^⊗j`, built incrementally.
pub(crate) struct MonomialCache {
    powers: Vec<Vec<f64>>,
}

impl MonomialCache {
    pub(crate) fn new(x: &[f64]) -> Self {
        Self { powers: vec![x.to_vec()] }
    }

    pub(crate) fn x(&self) -> &[f64] {
        &self.powers[0]
    }

    pub(crate) fn power(&mut self, j: usize) -> &[f64] {
        while self.powers.len() < j {
            let next = extend_monomial(self.powers.last().unwrap(), &self.powers[0]);
            self.powers.push(next);
        }
        &self.powers[j - 1]
    }
}

#[derive(Clone, Debug)]
pub struct QuadraticCost {
    q: DMatrix<f64>,
    r: DMatrix<f64>,
}

impl QuadraticCost {
    pub fn new(q: DMatrix<f64>, r: DMatrix<f64>) -> Result<Self> {
        for (name, mat, strict) in [("Q", &q, false), ("R", &r, true)] {
            if !mat.is_square() {
                return Err(PqrError::DimensionMismatch(format!("{name} must be square")));
            }
            if mat.iter().any(|x| !x.is_finite()) {
                return Err(PqrError::NonFinite(name.into()));
            }
            let scale = mat.norm().max(f64::MIN_POSITIVE);
            if (mat - mat.transpose()).norm() > 1e-10 * scale {
                return Err(PqrError::NotPositiveDefinite(format!("{name} is not symmetric")));
            }
            let sym = (mat + mat.transpose()) * 0.5;
            let min_eig = SymmetricEigen::new(sym).eigenvalues.min();
            let ok = if strict { min_eig > 1e-10 * scale } else { min_eig >= -1e-10 * scale };
            if !ok {
                let kind = if strict { "positive definite" } else { "positive semidefinite" };
                return Err(PqrError::NotPositiveDefinite(format!(
                    "{name} is not {kind} (smallest eigenvalue {min_eig:e})"
                )));
            }
        }
        Ok(Self { q, r })
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn r(&self) -> &DMatrix<f64> {
        &self.r
    }

    pub fn q2(&self) -> Vec<f64> {
        kron::vec(&self.q)
    }

    pub fn r2(&self) -> Vec<f64> {
        kron::vec(&self.r)
    }

    /// `xᵀQx + uᵀRu`.
    pub fn running_cost(&self, x: &[f64], u: &[f64]) -> f64 {
        let xv = DVector::from_column_slice(x);
        let uv = DVector::from_column_slice(u);
        xv.dot(&(&self.q * &xv)) + uv.dot(&(&self.r * &uv))
    }
}

/// `v(x) = Σ_{k=2}^{maxDegree} v_kᵀ x^⊗k`.
#[derive(Clone, Debug, PartialEq)]
pub struct ValueFunction {
    n: usize,
    /// `coeffs[0]` is `v₂`.
    coeffs: Vec<Vec<f64>>,
}

impl ValueFunction {
    pub fn new(n: usize, coeffs: Vec<Vec<f64>>) -> Result<Self> {
        for (i, c) in coeffs.iter().enumerate() {
            let k = i + 2;
            let expected = n.checked_pow(k as u32).unwrap_or(usize::MAX);
            if c.len() != expected {
                return Err(PqrError::LengthMismatch { expected, actual: c.len() });
            }
            if c.iter().any(|x| !x.is_finite()) {
                return Err(PqrError::NonFinite(format!("v_{k}")));
            }
        }
        Ok(Self { n, coeffs })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn max_degree(&self) -> usize {
        self.coeffs.len() + 1
    }

    /// `v_k`, for `k ≥ 2`.
    pub fn coeff(&self, k: usize) -> Option<&[f64]> {
        k.checked_sub(2).and_then(|i| self.coeffs.get(i)).map(Vec::as_slice)
    }

    /// `V₂` with `v₂ = vec(V₂)`.
    pub fn quadratic(&self) -> Option<DMatrix<f64>> {
        self.coeff(2).map(|c| DMatrix::from_column_slice(self.n, self.n, c))
    }

    /// `Σ_{k=2}^{up_to} v_kᵀ x^⊗k`; all degrees when `up_to` is `None`.
    pub fn eval(&self, x: &[f64], up_to: Option<usize>) -> f64 {
        let mut cache = MonomialCache::new(x);
        self.eval_cached(&mut cache, up_to)
    }

    pub(crate) fn eval_cached(&self, cache: &mut MonomialCache, up_to: Option<usize>) -> f64 {
        let top = up_to.unwrap_or(usize::MAX).min(self.max_degree());
        (2..=top)
            .map(|k| {
                let c = &self.coeffs[k - 2];
                c.iter().zip(cache.power(k)).map(|(a, b)| a * b).sum::<f64>()
            })
            .sum()
    }

    /// Analytic gradient of [`Self::eval`].
    pub fn gradient(&self, x: &[f64], up_to: Option<usize>) -> DVector<f64> {
        let n = self.n;
        let top = up_to.unwrap_or(usize::MAX).min(self.max_degree());
        let mut g = DVector::zeros(n);
        for k in 2..=top {
            let c = &self.coeffs[k - 2];
            for position in 0..k {
                let part = contract_all_but(c, n, k, position, x);
                for (gi, p) in g.iter_mut().zip(&part) {
                    *gi += p;
                }
            }
        }
        g
    }

    /// `‖v_k − sym(v_k)‖` where `sym` averages over all mode permutations.
    pub fn asymmetry_norm(&self, k: usize) -> Option<f64> {
        let c = self.coeff(k)?;
        let n = self.n;
        let mut sym = vec![0.0; c.len()];
        let perms = permutations(k);
        let mut digits = vec![0usize; k];
        for (idx, s) in sym.iter_mut().enumerate() {
            let mut rem = idx;
            for slot in digits.iter_mut().rev() {
                *slot = rem % n;
                rem /= n;
            }
            let total: f64 = perms
                .iter()
                .map(|p| c[p.iter().fold(0, |acc, &pos| acc * n + digits[pos])])
                .sum();
            *s = total / perms.len() as f64;
        }
        Some(c.iter().zip(&sym).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt())
    }
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for slot in 0..=p.len() {
            let mut q = p.clone();
            q.insert(slot, k - 1);
            out.push(q);
        }
    }
    out
}

/// Contracts every mode of the `k`-mode tensor `c` with `x` except `position`.
fn contract_all_but(c: &[f64], n: usize, k: usize, position: usize, x: &[f64]) -> Vec<f64> {
    let mut cur = c.to_vec();
    for _ in position + 1..k {
        cur = cur.chunks_exact(n).map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum()).collect();
    }
    for _ in 0..position {
        let rest = cur.len() / n;
        let mut next = vec![0.0; rest];
        for (j, &xj) in x.iter().enumerate() {
            for (o, v) in next.iter_mut().zip(&cur[j * rest..(j + 1) * rest]) {
                *o += xj * v;
            }
        }
        cur = next;
    }
    cur
}

/// `K(x) = Σ_{j=1}^{maxDegree} k_j x^⊗j`.
#[derive(Clone, Debug)]
pub struct FeedbackLaw {
    n: usize,
    m: usize,
    /// `gains[j - 1]` is `k_j`, `m × n^j`.
    gains: Vec<DMatrix<f64>>,
    /// Transposed copies; evaluation runs `m` contiguous dot products.
    gains_t: Vec<DMatrix<f64>>,
    zero: Vec<bool>,
}

impl PartialEq for FeedbackLaw {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.m == other.m && self.gains == other.gains
    }
}

impl FeedbackLaw {
    pub fn new(n: usize, m: usize, gains: Vec<DMatrix<f64>>) -> Result<Self> {
        for (i, g) in gains.iter().enumerate() {
            let j = i + 1;
            let cols = n.checked_pow(j as u32).unwrap_or(usize::MAX);
            if g.shape() != (m, cols) {
                return Err(PqrError::DimensionMismatch(format!(
                    "k_{j} must be {m}x{cols}, got {:?}",
                    g.shape()
                )));
            }
            if g.iter().any(|x| !x.is_finite()) {
                return Err(PqrError::NonFinite(format!("k_{j}")));
            }
        }
        let gains_t = gains.iter().map(|g| g.transpose()).collect();
        let zero = gains.iter().map(|g| g.iter().all(|&x| x == 0.0)).collect();
        Ok(Self { n, m, gains, gains_t, zero })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn max_degree(&self) -> usize {
        self.gains.len()
    }

    /// `k_j`, for `j ≥ 1`.
    pub fn gain(&self, j: usize) -> Option<&DMatrix<f64>> {
        j.checked_sub(1).and_then(|i| self.gains.get(i))
    }

    pub fn eval(&self, x: &[f64], up_to: Option<usize>) -> DVector<f64> {
        let mut cache = MonomialCache::new(x);
        self.eval_cached(&mut cache, up_to)
    }

    pub(crate) fn eval_cached(&self, cache: &mut MonomialCache, up_to: Option<usize>) -> DVector<f64> {
        let top = up_to.unwrap_or(usize::MAX).min(self.max_degree());
        let mut u = DVector::zeros(self.m);
        for j in 1..=top {
            if self.zero[j - 1] {
                continue;
            }
            let z = DVector::from_column_slice(cache.power(j));
            u.gemv_tr(1.0, &self.gains_t[j - 1], &z, 1.0);
        }
        u
    }
}

pub fn eval_feedback(law: &FeedbackLaw, x: &[f64], up_to: Option<usize>) -> DVector<f64> {
    law.eval(x, up_to)
}

pub fn eval_value(vf: &ValueFunction, x: &[f64], up_to: Option<usize>) -> f64 {
    vf.eval(x, up_to)
}

#[derive(Clone, Copy, Debug, Default)]
pub struct PqrOptions {
    /// Drop the `𝓛₂(N_dᵀ)v₂` terms (d ≥ 3) from the right-hand sides, which
    /// reproduces the shorter published degree-4/5 equations.
    pub strict_paper_rhs: bool,
}

#[derive(Clone, Debug)]
pub struct PqrSolution {
    pub value: ValueFunction,
    pub feedback: FeedbackLaw,
    pub are: AreSolution,
    /// `A_c = A + Bk₁`.
    pub closed_loop: DMatrix<f64>,
    /// Schur form of `A_cᵀ`, shared by all degrees.
    pub schur: SchurForm,
    /// Wall time per feedback degree (degree 1 is the Riccati step).
    pub timings: Vec<(usize, Duration)>,
    /// Work spent in each N-way solve, keyed by feedback degree.
    pub solve_stats: Vec<(usize, SolveStats)>,
}

pub fn pqr(system: &PolynomialSystem, cost: &QuadraticCost, degree: usize) -> Result<(ValueFunction, FeedbackLaw)> {
    let sol = pqr_with(system, cost, degree, &PqrOptions::default())?;
    Ok((sol.value, sol.feedback))
}

pub fn pqr_with(
    system: &PolynomialSystem,
    cost: &QuadraticCost,
    degree: usize,
    options: &PqrOptions,
) -> Result<PqrSolution> {
    let n = system.n();
    let m = system.m();
    if degree == 0 {
        return Err(PqrError::InvalidParameter("feedback degree must be at least 1".into()));
    }
    if cost.q().nrows() != n || cost.r().nrows() != m {
        return Err(PqrError::DimensionMismatch(format!(
            "cost weights {:?}/{:?} do not fit n = {n}, m = {m}",
            cost.q().shape(),
            cost.r().shape()
        )));
    }
    budget::checked_pow(n, degree + 2)?;

    let start = Instant::now();
    let are = care_solve(system.a(), system.b(), cost.q(), cost.r())?;
    let closed_loop = system.a() + system.b() * &are.k1;
    let schur = schur_decompose(&closed_loop.transpose())?;
    let mut timings = vec![(1, start.elapsed())];
    let mut solve_stats = Vec::new();

    let mut values: Vec<Vec<f64>> = vec![kron::vec(&are.v2)];
    let mut gains: Vec<DMatrix<f64>> = vec![are.k1.clone()];
    for d in 2..=degree {
        let start = Instant::now();
        let rhs = assemble_rhs_with(d, system, cost, &values, &gains, options)?;
        let (next, stats) = nway_solve_with_stats(&schur, d + 1, &rhs)?;
        let next = next.into_data();
        solve_stats.push((d, stats));
        let kd = compute_gain(d, system.b(), cost.r(), &next)?;
        values.push(next);
        gains.push(kd);
        timings.push((d, start.elapsed()));
    }

    Ok(PqrSolution {
        value: ValueFunction::new(n, values)?,
        feedback: FeedbackLaw::new(n, m, gains)?,
        are,
        closed_loop,
        schur,
        timings,
        solve_stats,
    })
}

/// Right-hand side `c` of `𝓛_{d+1}(A_cᵀ) v_{d+1} = c`.
///
/// `values` holds `v₂ … v_d` and `gains` holds `k₁ … k_{d−1}` (longer slices
/// are fine). With `M_i = N_i + Bk_i`,
///
/// `c = −Σ_{i=2}^{d} 𝓛_{d+2−i}(M_iᵀ) v_{d+2−i} − Σ_{i+j=d+1, 2≤i,j≤d−1} (k_iᵀ ⊗ k_jᵀ) r₂`
///
/// where `Bk_d` is left out of `M_d`: together with the `k_d`-`k₁` cost
/// cross terms it cancels because of the Riccati gain equation.
pub fn assemble_rhs(
    d: usize,
    system: &PolynomialSystem,
    cost: &QuadraticCost,
    values: &[Vec<f64>],
    gains: &[DMatrix<f64>],
) -> Result<ModeTensor<f64>> {
    assemble_rhs_with(d, system, cost, values, gains, &PqrOptions::default())
}

pub fn assemble_rhs_with(
    d: usize,
    system: &PolynomialSystem,
    cost: &QuadraticCost,
    values: &[Vec<f64>],
    gains: &[DMatrix<f64>],
    options: &PqrOptions,
) -> Result<ModeTensor<f64>> {
    let n = system.n();
    if d < 2 {
        return Err(PqrError::InvalidParameter(format!("right-hand sides start at d = 2, got {d}")));
    }
    if values.len() < d - 1 {
        return Err(PqrError::MissingCoefficient(format!("v_{} is needed for degree {d}", values.len() + 2)));
    }
    if gains.len() < d - 1 {
        return Err(PqrError::MissingCoefficient(format!("k_{} is needed for degree {d}", gains.len() + 1)));
    }
    let len = budget::checked_pow(n, d + 1)?;
    let mut c = vec![0.0; len];

    for i in 2..=d {
        let j = d + 2 - i;
        let mut term: Option<DMatrix<f64>> = None;
        if let Some(ni) = system.nonlinearity(i) {
            let dropped = options.strict_paper_rhs && j == 2 && i >= 3;
            if !dropped {
                term = Some(ni.clone());
            }
        }
        if i < d {
            let bk = system.b() * &gains[i - 1];
            if bk.iter().any(|&x| x != 0.0) {
                term = Some(match term {
                    Some(t) => t + bk,
                    None => bk,
                });
            }
        }
        let Some(mi) = term else { continue };
        let vj = ModeTensor::uniform(n, j, values[j - 2].clone())?;
        let applied = kron::lyap_sum_apply(&mi.transpose(), j, &vj)?;
        c.par_iter_mut().zip(applied.data().par_iter()).for_each(|(ci, a)| *ci -= a);
    }

    // (k_iᵀ ⊗ k_jᵀ) r₂ = vec(k_jᵀ R k_i), an n^j × n^i matrix.
    for i in 2..d {
        let j = d + 1 - i;
        if !(2..d).contains(&j) {
            continue;
        }
        let (ki, kj) = (&gains[i - 1], &gains[j - 1]);
        if ki.iter().all(|&x| x == 0.0) || kj.iter().all(|&x| x == 0.0) {
            continue;
        }
        let rk = cost.r() * ki;
        let mut view = DMatrixViewMut::from_slice(&mut c, kj.ncols(), ki.ncols());
        view.gemm_tr(-1.0, kj, &rk, 1.0);
    }

    ModeTensor::uniform(n, d + 1, c)
}

/// `k_d = −½ R⁻¹ (𝓛_{d+1}(Bᵀ) v_{d+1})ᵀ`, an `m × n^d` matrix.
///
/// Each of the `d + 1` position terms contracts one mode of `v_{d+1}` with
/// `Bᵀ`; the resulting input index is moved in front of the remaining modes
/// so that all terms share one layout before they are summed. No symmetry
/// of `v_{d+1}` is assumed.
pub fn compute_gain(d: usize, b: &DMatrix<f64>, r: &DMatrix<f64>, v_next: &[f64]) -> Result<DMatrix<f64>> {
    let n = b.nrows();
    let m = b.ncols();
    if r.shape() != (m, m) {
        return Err(PqrError::DimensionMismatch(format!("R must be {m}x{m}, got {:?}", r.shape())));
    }
    let rest = budget::checked_pow(n, d)?;
    let expected = rest * n;
    if v_next.len() != expected {
        return Err(PqrError::LengthMismatch { expected, actual: v_next.len() });
    }
    let chol = spd_factor(r, "R")?;

    // w[a * n^d + rest] collects the contraction with column a of B.
    let mut w = vec![0.0; m * rest];
    w.par_chunks_mut(rest).enumerate().for_each(|(a, wa)| {
        for position in 0..=d {
            let before = n.pow(position as u32);
            let after = n.pow((d - position) as u32);
            for p in 0..before {
                let dst = &mut wa[p * after..(p + 1) * after];
                for j in 0..n {
                    let coef = b[(j, a)];
                    if coef == 0.0 {
                        continue;
                    }
                    let src = &v_next[(p * n + j) * after..(p * n + j + 1) * after];
                    for (o, s) in dst.iter_mut().zip(src) {
                        *o += coef * s;
                    }
                }
            }
        }
    });
    // Row a of W is the slice w[a * n^d ..], so W = (n^d × m column-major)ᵀ.
    let wt = DMatrix::from_vec(rest, m, w);
    let solved = chol.solve(&wt.transpose());
    Ok(solved * -0.5)
}

/// Residuals of the two HJB equations at `x` for a truncated value
/// function and feedback law: `r₁ = ∇v·(Ax + BK + f) + ℓ(x, K)` and
/// `r₂ = ‖Bᵀ∇v + 2RK‖`.
pub fn hjb_residual(
    system: &PolynomialSystem,
    cost: &QuadraticCost,
    vf: &ValueFunction,
    law: &FeedbackLaw,
    x: &[f64],
) -> (f64, f64) {
    let u = law.eval(x, None);
    let grad = vf.gradient(x, None);
    let xdot = system.dynamics(x, u.as_slice());
    let r1 = grad.dot(&xdot) + cost.running_cost(x, u.as_slice());
    let r2 = (system.b().transpose() * &grad + cost.r() * &u * 2.0).norm();
    (r1, r2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models;
    use nalgebra::dmatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const SQRT2: f64 = std::f64::consts::SQRT_2;

    fn scalar_problem() -> (PolynomialSystem, QuadraticCost) {
        let sys = PolynomialSystem::new(dmatrix![-1.0], dmatrix![1.0])
            .unwrap()
            .with_term(2, dmatrix![1.0])
            .unwrap();
        let cost = QuadraticCost::new(dmatrix![1.0], dmatrix![1.0]).unwrap();
        (sys, cost)
    }

    /// Hand expansion of the scalar HJB equations for ẋ = −x + x² + u,
    /// q = r = 1: matching x², x³ and x² in the gain equation gives
    ///   −2v₂ − v₂² + 1 = 0,  3v₃(−1 + k₁) + 2v₂ = 0,  k₂ = −(3/2)v₃.
    fn scalar_hand_values() -> (f64, f64, f64) {
        let v2 = SQRT2 - 1.0;
        let k1 = -v2;
        let ac = -1.0 + k1;
        let v3 = -2.0 * v2 / (3.0 * ac);
        (v2, v3, -1.5 * v3)
    }

    #[test]
    fn scalar_coefficients_match_hand_expansion() {
        let (sys, cost) = scalar_problem();
        let (vf, law) = pqr(&sys, &cost, 2).unwrap();
        let (v2, v3, k2) = scalar_hand_values();
        assert!((vf.coeff(2).unwrap()[0] - v2).abs() < 1e-12);
        assert!((vf.coeff(3).unwrap()[0] - v3).abs() < 1e-12);
        assert!((law.gain(2).unwrap()[(0, 0)] - k2).abs() < 1e-12);
        assert!((v3 - 0.1952621).abs() < 1e-7);
        assert!((k2 + 0.2928932).abs() < 1e-7);
    }

    #[test]
    fn linear_system_gives_zero_higher_terms() {
        let sys = PolynomialSystem::new(dmatrix![0.0, 1.0; -2.0, 0.3], dmatrix![0.0; 1.0]).unwrap();
        let cost = QuadraticCost::new(DMatrix::identity(2, 2), dmatrix![1.0]).unwrap();
        let (vf, law) = pqr(&sys, &cost, 4).unwrap();
        for k in 3..=5 {
            assert!(vf.coeff(k).unwrap().iter().all(|&x| x == 0.0));
        }
        for j in 2..=4 {
            assert!(law.gain(j).unwrap().iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn rhs_degree_two_is_nonlinearity_only() {
        let inst = models::lorenz();
        let are = care_solve(inst.system.a(), inst.system.b(), inst.cost.q(), inst.cost.r()).unwrap();
        let v2 = kron::vec(&are.v2);
        let c = assemble_rhs(2, &inst.system, &inst.cost, &[v2.clone()], &[are.k1.clone()]).unwrap();
        let n2t = inst.system.nonlinearity(2).unwrap().transpose();
        let expected = kron::lyap_sum_apply(&n2t, 2, &ModeTensor::uniform(3, 2, v2).unwrap()).unwrap();
        for (a, b) in c.data().iter().zip(expected.data()) {
            assert_eq!(*a, -b);
        }
    }

    fn random_cubic_system(rng: &mut ChaCha8Rng, n: usize, m: usize) -> (PolynomialSystem, QuadraticCost) {
        let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let b = DMatrix::from_fn(n, m, |_, _| rng.gen_range(-1.0..1.0));
        let n2 = DMatrix::from_fn(n, n * n, |_, _| rng.gen_range(-1.0..1.0));
        let n3 = DMatrix::from_fn(n, n * n * n, |_, _| rng.gen_range(-1.0..1.0));
        let sys = PolynomialSystem::new(a, b).unwrap().with_term(2, n2).unwrap().with_term(3, n3).unwrap();
        let cost = QuadraticCost::new(DMatrix::identity(n, n), DMatrix::identity(m, m) * 0.5).unwrap();
        (sys, cost)
    }

    #[test]
    fn rhs_degree_three_with_cubic_term() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (sys, cost) = random_cubic_system(&mut rng, 2, 1);
        let sol = pqr_with(&sys, &cost, 2, &PqrOptions::default()).unwrap();
        let values: Vec<Vec<f64>> = (2..=3).map(|k| sol.value.coeff(k).unwrap().to_vec()).collect();
        let gains: Vec<DMatrix<f64>> = (1..=2).map(|j| sol.feedback.gain(j).unwrap().clone()).collect();
        let full = assemble_rhs(3, &sys, &cost, &values, &gains).unwrap();
        let strict =
            assemble_rhs_with(3, &sys, &cost, &values, &gains, &PqrOptions { strict_paper_rhs: true }).unwrap();

        // −𝓛₃((Bk₂+N₂)ᵀ)v₃ − (k₂ᵀ⊗k₂ᵀ)r₂, via dense assembly
        let m2 = sys.b() * &gains[1] + sys.nonlinearity(2).unwrap();
        let l3 = crate::oracle::lyap_sum_matrix(&m2.transpose(), 2, 3).unwrap();
        let k2t = gains[1].transpose();
        let kk = kron::kron_dense(&k2t, &k2t).unwrap();
        let expected_strict =
            -(l3 * DVector::from_column_slice(&values[1])) - kk * DVector::from_column_slice(&cost.r2());
        let l2 = crate::oracle::lyap_sum_matrix(&sys.nonlinearity(3).unwrap().transpose(), 2, 2).unwrap();
        let expected_full = &expected_strict - l2 * DVector::from_column_slice(&values[0]);

        let err = |a: &[f64], b: &DVector<f64>| (DVector::from_column_slice(a) - b).norm() / b.norm();
        assert!(err(strict.data(), &expected_strict) < 1e-13);
        assert!(err(full.data(), &expected_full) < 1e-13);
    }

    #[test]
    fn gain_examples() {
        let b = DMatrix::<f64>::zeros(2, 1);
        let v3 = vec![1.0; 8];
        let k = compute_gain(2, &b, &dmatrix![1.0], &v3).unwrap();
        assert!(k.iter().all(|&x| x == 0.0));

        let (_, v3, k2) = scalar_hand_values();
        let k = compute_gain(2, &dmatrix![1.0], &dmatrix![1.0], &[v3]).unwrap();
        assert!((k[(0, 0)] - k2).abs() < 1e-15);
    }

    #[test]
    fn gain_matches_dense_kronecker_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (n, m, d) in [(2, 1, 2), (2, 2, 3), (3, 2, 2)] {
            let b = DMatrix::from_fn(n, m, |_, _| rng.gen_range(-1.0..1.0));
            let r = DMatrix::from_fn(m, m, |i, j| if i == j { 2.0 } else { 0.3 });
            let v: Vec<f64> = (0..n.pow(d as u32 + 1)).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let k = compute_gain(d, &b, &r, &v).unwrap();

            // Position l of 𝓛_{d+1}(Bᵀ) puts the input index at mode l; a
            // permutation matrix moves it to the front before summing.
            let mut total = DVector::<f64>::zeros(m * n.pow(d as u32));
            for l in 0..=d {
                let term = crate::oracle::positioned(&b.transpose(), n, d + 1, l).unwrap()
                    * DVector::from_column_slice(&v);
                let before = n.pow(l as u32);
                let after = n.pow((d - l) as u32);
                for p in 0..before {
                    for a in 0..m {
                        for s in 0..after {
                            total[a * before * after + p * after + s] += term[(p * m + a) * after + s];
                        }
                    }
                }
            }
            let w = DMatrix::from_column_slice(n.pow(d as u32), m, total.as_slice()).transpose();
            let expected = r.clone().lu().solve(&w).unwrap() * -0.5;
            assert!((&k - &expected).norm() < 1e-13 * expected.norm().max(1.0));
        }
    }

    #[test]
    fn gain_of_symmetric_tensor_is_multiple_of_one_position() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 3;
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let v = kron::monomial(&x, 3).unwrap().into_data();
        let b = DMatrix::from_fn(n, 1, |_, _| rng.gen_range(-1.0..1.0));
        let k = compute_gain(2, &b, &dmatrix![1.0], &v).unwrap();
        // one position: (Bᵀ ⊗ I ⊗ I)(x⊗x⊗x) = (Bᵀx)(x⊗x)
        let btx = (b.transpose() * DVector::from_column_slice(&x))[0];
        let single = kron::monomial(&x, 2).unwrap().into_data();
        for (kk, s) in k.iter().zip(&single) {
            assert!((kk - (-0.5 * 3.0 * btx * s)).abs() < 1e-14);
        }
    }

    #[test]
    fn feedback_evaluation_examples() {
        let (_, _, k2) = scalar_hand_values();
        let law = FeedbackLaw::new(1, 1, vec![dmatrix![1.0 - SQRT2], dmatrix![k2]]).unwrap();
        assert_eq!(law.eval(&[0.0], None)[0], 0.0);
        let u = law.eval(&[0.1], None)[0];
        assert!((u - (-0.0443503)).abs() < 1e-7);
        assert!((law.eval(&[0.1], Some(1))[0] - (1.0 - SQRT2) * 0.1).abs() < 1e-15);
        let vf = ValueFunction::new(2, vec![vec![1.0, 0.0, 0.0, 1.0]]).unwrap();
        assert_eq!(vf.eval(&[0.0, 0.0], None), 0.0);
    }

    #[test]
    fn hjb_residual_vanishes_at_origin_and_for_lqr() {
        let (sys, cost) = scalar_problem();
        let (vf, law) = pqr(&sys, &cost, 3).unwrap();
        assert_eq!(hjb_residual(&sys, &cost, &vf, &law, &[0.0]), (0.0, 0.0));

        let lin = PolynomialSystem::new(dmatrix![0.0, 1.0; -1.0, 0.5], dmatrix![0.0; 1.0]).unwrap();
        let cost = QuadraticCost::new(DMatrix::identity(2, 2), dmatrix![1.0]).unwrap();
        let (vf, law) = pqr(&lin, &cost, 1).unwrap();
        for x in [[1.0, -2.0], [3.0, 0.5], [-10.0, 7.0]] {
            let (r1, r2) = hjb_residual(&lin, &cost, &vf, &law, &x);
            let scale = 1.0 + x.iter().map(|v| v * v).sum::<f64>().powi(2);
            assert!(r1.abs() <= 1e-9 * scale && r2 <= 1e-9 * scale, "{r1} {r2}");
        }
    }

    #[test]
    fn scalar_residual_is_fourth_order() {
        let (sys, cost) = scalar_problem();
        let (vf, law) = pqr(&sys, &cost, 2).unwrap();
        let r: Vec<f64> = [1e-1, 1e-2, 1e-3]
            .iter()
            .map(|&e| hjb_residual(&sys, &cost, &vf, &law, &[e]).0.abs())
            .collect();
        // each factor 10 in ε must shrink r₁ by about 10⁴
        assert!(r[0] / r[1] > 10f64.powf(3.5), "{r:?}");
        assert!(r[1] / r[2] > 10f64.powf(3.5), "{r:?}");
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (sys, cost) = random_cubic_system(&mut rng, 3, 2);
        let (vf, _) = pqr(&sys, &cost, 3).unwrap();
        for _ in 0..5 {
            let x: Vec<f64> = (0..3).map(|_| rng.gen_range(-0.5..0.5)).collect();
            let g = vf.gradient(&x, None);
            let h = 1e-6;
            for i in 0..3 {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[i] += h;
                xm[i] -= h;
                let fd = (vf.eval(&xp, None) - vf.eval(&xm, None)) / (2.0 * h);
                assert!((fd - g[i]).abs() <= 1e-6 * g.norm().max(1e-3), "{fd} {}", g[i]);
            }
        }
    }

    #[test]
    fn representation_invariance_of_nonlinearity() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let (sys, cost) = random_cubic_system(&mut rng, 2, 1);
        // Move the whole x₁x₂ coefficient of N₂ onto the (1,2) column.
        let mut n2 = sys.nonlinearity(2).unwrap().clone();
        for row in 0..2 {
            n2[(row, 1)] += n2[(row, 2)];
            n2[(row, 2)] = 0.0;
        }
        let alt = PolynomialSystem::new(sys.a().clone(), sys.b().clone())
            .unwrap()
            .with_term(2, n2)
            .unwrap()
            .with_term(3, sys.nonlinearity(3).unwrap().clone())
            .unwrap();
        let (vf1, law1) = pqr(&sys, &cost, 4).unwrap();
        let (vf2, law2) = pqr(&alt, &cost, 4).unwrap();
        for _ in 0..5 {
            let x: Vec<f64> = (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let (a, b) = (vf1.eval(&x, None), vf2.eval(&x, None));
            assert!((a - b).abs() <= 1e-9 * a.abs().max(1e-12));
            let (ua, ub) = (law1.eval(&x, None), law2.eval(&x, None));
            assert!((&ua - &ub).norm() <= 1e-9 * ua.norm().max(1e-12));
        }
    }

    #[test]
    fn odd_nonlinearity_gives_zero_even_gains() {
        let inst = models::vdp_ring(4, &[1, 2], 0.3).unwrap();
        let (_, law) = pqr(&inst.system, &inst.cost, 5).unwrap();
        let k1 = law.gain(1).unwrap().norm();
        for j in [2, 4] {
            assert!(law.gain(j).unwrap().norm() <= 1e-9 * k1);
        }
        assert!(law.gain(3).unwrap().norm() > 0.0);
    }

    #[test]
    fn asymmetry_of_symmetric_tensor_is_zero() {
        let x = [0.3, -1.2];
        let vf = ValueFunction::new(2, vec![kron::monomial(&x, 2).unwrap().into_data(), kron::monomial(&x, 3).unwrap().into_data()]).unwrap();
        assert!(vf.asymmetry_norm(3).unwrap() < 1e-15);
        let skew = ValueFunction::new(2, vec![vec![0.0, 1.0, -1.0, 0.0]]).unwrap();
        assert!((skew.asymmetry_norm(2).unwrap() - SQRT2).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_shapes() {
        let sys = PolynomialSystem::new(DMatrix::identity(2, 2), DMatrix::zeros(2, 1)).unwrap();
        assert!(sys.clone().with_term(2, DMatrix::zeros(2, 3)).is_err());
        assert!(sys.with_term(1, DMatrix::zeros(2, 2)).is_err());
        assert!(QuadraticCost::new(DMatrix::identity(2, 2), dmatrix![0.0]).is_err());
        assert!(QuadraticCost::new(dmatrix![1.0, 2.0; 0.0, 1.0], dmatrix![1.0]).is_err());
    }
}
