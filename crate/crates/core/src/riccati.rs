//! Continuous algebraic Riccati equation for the quadratic value term and
//! the linear gain.
//!
//! The initial solution comes from the stable invariant subspace of the
//! Hamiltonian matrix, obtained by reordering a complex Schur form. It is
//! then polished with Newton–Kleinman steps, each one a Lyapunov solve.

use nalgebra::{Cholesky, DMatrix, Dyn};
use num_complex::Complex64;

use crate::error::{PqrError, Result};
use crate::schur::{lyap2_solve, schur_decompose};

pub const MAX_NEWTON_STEPS: usize = 10;

/// Largest accepted condition number of the leading block of the stable basis.
pub const MAX_BASIS_CONDITION: f64 = 1e12;

#[derive(Clone, Debug)]
pub struct AreSolution {
    /// Symmetric solution `V₂`.
    pub v2: DMatrix<f64>,
    /// `k₁ = -R⁻¹BᵀV₂`, `m × n`.
    pub k1: DMatrix<f64>,
    pub residual_norm: f64,
    /// Residual after the subspace step and after each accepted Newton step.
    pub residual_history: Vec<f64>,
}

/// Target for `residual_norm`.
pub fn residual_target(q: &DMatrix<f64>) -> f64 {
    1e-9 * q.norm().max(1.0)
}

pub(crate) fn spd_factor(r: &DMatrix<f64>, what: &str) -> Result<Cholesky<f64, Dyn>> {
    if !r.is_square() {
        return Err(PqrError::DimensionMismatch(format!("{what} must be square")));
    }
    let asym = (r - r.transpose()).norm();
    if asym > 1e-10 * r.norm().max(f64::MIN_POSITIVE) {
        return Err(PqrError::NotPositiveDefinite(format!("{what} is not symmetric")));
    }
    Cholesky::new(r.clone()).ok_or_else(|| PqrError::NotPositiveDefinite(what.to_string()))
}

fn check_shapes(a: &DMatrix<f64>, b: &DMatrix<f64>, q: &DMatrix<f64>, r: &DMatrix<f64>) -> Result<()> {
    let n = a.nrows();
    let m = b.ncols();
    if !a.is_square() || b.nrows() != n || q.shape() != (n, n) || r.shape() != (m, m) {
        return Err(PqrError::DimensionMismatch(format!(
            "A {:?}, B {:?}, Q {:?}, R {:?}",
            a.shape(),
            b.shape(),
            q.shape(),
            r.shape()
        )));
    }
    Ok(())
}

/// `‖AᵀV + VA − VBR⁻¹BᵀV + Q‖_F`. Returns NaN if `R` is not positive definite.
pub fn care_residual(a: &DMatrix<f64>, b: &DMatrix<f64>, q: &DMatrix<f64>, r: &DMatrix<f64>, v: &DMatrix<f64>) -> f64 {
    let Some(chol) = Cholesky::new(r.clone()) else {
        return f64::NAN;
    };
    let btv = b.transpose() * v;
    let gain = chol.solve(&btv);
    let res = a.transpose() * v + v * a - btv.transpose() * gain + q;
    res.norm()
}

fn residual_matrix(a: &DMatrix<f64>, s: &DMatrix<f64>, q: &DMatrix<f64>, v: &DMatrix<f64>) -> DMatrix<f64> {
    let res = a.transpose() * v + v * a - v * s * v + q;
    (&res + res.transpose()) * 0.5
}

fn gain(chol: &Cholesky<f64, Dyn>, b: &DMatrix<f64>, v: &DMatrix<f64>) -> DMatrix<f64> {
    -chol.solve(&(b.transpose() * v))
}

/// Solves `AᵀV + VA − VBR⁻¹BᵀV + Q = 0` for the stabilizing `V`.
pub fn care_solve(a: &DMatrix<f64>, b: &DMatrix<f64>, q: &DMatrix<f64>, r: &DMatrix<f64>) -> Result<AreSolution> {
    check_shapes(a, b, q, r)?;
    for (name, mat) in [("A", a), ("B", b), ("Q", q), ("R", r)] {
        if mat.iter().any(|x| !x.is_finite()) {
            return Err(PqrError::NonFinite(format!("Riccati input {name}")));
        }
    }
    let n = a.nrows();
    let chol = spd_factor(r, "R")?;

    let rinv_bt = chol.solve(&b.transpose());
    let s = b * rinv_bt;
    let mut h = DMatrix::<f64>::zeros(2 * n, 2 * n);
    h.view_mut((0, 0), (n, n)).copy_from(a);
    h.view_mut((0, n), (n, n)).copy_from(&(-&s));
    h.view_mut((n, 0), (n, n)).copy_from(&(-q));
    h.view_mut((n, n), (n, n)).copy_from(&(-a.transpose()));

    let (ordered, stable) = schur_decompose(&h)?.reordered(|z| z.re < 0.0);
    if stable != n {
        return Err(PqrError::Unstabilizable(format!(
            "Hamiltonian has {stable} eigenvalues with negative real part, expected {n}"
        )));
    }
    let basis = ordered.u();
    let x1: DMatrix<Complex64> = basis.view((0, 0), (n, n)).into_owned();
    let x2: DMatrix<Complex64> = basis.view((n, 0), (n, n)).into_owned();

    let sv = x1.clone().svd(false, false).singular_values;
    let smax = sv.max();
    let smin = sv.min();
    if smin == 0.0 || smax / smin > MAX_BASIS_CONDITION {
        return Err(PqrError::Unstabilizable(format!(
            "stable invariant subspace is not a graph (condition number {:e})",
            smax / smin
        )));
    }
    // V = X₂ X₁⁻¹  <=>  X₁ᵀ Vᵀ = X₂ᵀ
    let vt = x1
        .transpose()
        .lu()
        .solve(&x2.transpose())
        .ok_or_else(|| PqrError::Unstabilizable("singular stable basis".into()))?;
    let v = vt.transpose().map(|z| z.re);
    let mut v = (&v + v.transpose()) * 0.5;

    let target = residual_target(q);
    let mut residual = care_residual(a, b, q, r, &v);
    let mut history = vec![residual];
    for _ in 0..MAX_NEWTON_STEPS {
        // Newton step in defect-correction form: A_kᵀΔ + ΔA_k + Res(V) = 0
        let k = gain(&chol, b, &v);
        let ak = a + b * &k;
        let Ok(delta) = lyap2_solve(&ak, &residual_matrix(a, &s, q, &v)) else {
            break;
        };
        let candidate = &v + delta;
        let cand_res = care_residual(a, b, q, r, &candidate);
        if !(cand_res < residual) {
            break;
        }
        v = candidate;
        residual = cand_res;
        history.push(residual);
    }

    let k1 = gain(&chol, b, &v);
    let closed = a + b * &k1;
    let max_re = schur_decompose(&closed)?
        .eigenvalues()
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max);
    if max_re >= 0.0 {
        return Err(PqrError::Unstabilizable(format!(
            "closed-loop matrix has an eigenvalue with real part {max_re:e}"
        )));
    }
    if residual > target || !residual.is_finite() {
        return Err(PqrError::RefinementStagnation { residual, target });
    }
    Ok(AreSolution { v2: v, k1, residual_norm: residual, residual_history: history })
}
