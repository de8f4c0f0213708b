//! Self-check suites comparing the structured solvers with dense
//! references and known closed forms on small instances.

use nalgebra::{dmatrix, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::albrekht::{compute_gain, pqr, pqr_with, PolynomialSystem, PqrOptions, QuadraticCost};
use crate::albrekht::assemble_rhs;
use crate::error::Result;
use crate::kron::{kron_apply, kron_dense, lyap_sum_apply, ModeTensor};
use crate::oracle::{dense_lyap_solve, lyap_sum_matrix};
use crate::riccati::{care_residual, care_solve};
use crate::schur::{nway_solve, schur_decompose};

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteReport {
    pub name: &'static str,
    pub passed: bool,
    /// Largest error seen, relative to the suite's own scale.
    pub worst: f64,
    pub tolerance: f64,
}

impl std::fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{verdict} {:<11} worst {:.3e} (tolerance {:.1e})", self.name, self.worst, self.tolerance)
    }
}

fn report(name: &'static str, worst: Result<f64>, tolerance: f64) -> SuiteReport {
    let worst = worst.unwrap_or(f64::INFINITY);
    SuiteReport { name, passed: worst <= tolerance, worst, tolerance }
}

fn rel(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let scale: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    diff / scale.max(f64::MIN_POSITIVE)
}

fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.gen_range(-1.0..1.0))
}

/// Random matrix shifted so that all eigenvalues have real part ≤ −0.5.
fn random_stable(rng: &mut ChaCha8Rng, n: usize) -> Result<DMatrix<f64>> {
    let a = random_matrix(rng, n, n);
    let max_re = schur_decompose(&a)?.eigenvalues().iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    Ok(a - DMatrix::identity(n, n) * (max_re + 0.5))
}

pub fn kron_suite(seed: u64) -> SuiteReport {
    let run = || -> Result<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        for _ in 0..20 {
            let n = rng.gen_range(1..=3);
            let d = rng.gen_range(1..=3);
            let factors: Vec<DMatrix<f64>> = (0..d).map(|_| random_matrix(&mut rng, n, n)).collect();
            let v: Vec<f64> = (0..n.pow(d as u32)).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let tensor = ModeTensor::uniform(n, d, v.clone())?;
            let dense = factors[1..].iter().try_fold(factors[0].clone(), |acc, f| kron_dense(&acc, f))?;
            let expected = dense * DVector::from_vec(v.clone());
            worst = worst.max(rel(kron_apply(&factors, &tensor)?.data(), expected.as_slice()));
            let x = &factors[0];
            let expected = lyap_sum_matrix(x, n, d)? * DVector::from_vec(v);
            worst = worst.max(rel(lyap_sum_apply(x, d, &tensor)?.data(), expected.as_slice()));
        }
        Ok(worst)
    };
    report("kron", run(), 1e-13)
}

pub fn nway_suite(seed: u64) -> SuiteReport {
    let run = || -> Result<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        for _ in 0..20 {
            let n = rng.gen_range(1..=3);
            let d = rng.gen_range(1..=3);
            let a = random_stable(&mut rng, n)?;
            let b: Vec<f64> = (0..n.pow(d as u32)).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let sf = schur_decompose(&a)?;
            let x = nway_solve(&sf, d, &ModeTensor::uniform(n, d, b.clone())?)?;
            worst = worst.max(rel(x.data(), &dense_lyap_solve(&a, d, &b)?));
        }
        // scalar example: 𝓛₂([−1]) x = [4] gives x = −2
        let sf = schur_decompose(&dmatrix![-1.0])?;
        let x = nway_solve(&sf, 2, &ModeTensor::uniform(1, 2, vec![4.0])?)?;
        worst = worst.max((x.data()[0] + 2.0).abs() / 2.0);
        Ok(worst)
    };
    report("nway", run(), 1e-9)
}

pub fn riccati_suite(seed: u64) -> SuiteReport {
    let run = || -> Result<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let one = dmatrix![1.0];
        let sol = care_solve(&dmatrix![0.0], &one, &one, &one)?;
        let mut worst: f64 = (sol.v2[(0, 0)] - 1.0).abs();
        let sol = care_solve(&dmatrix![-1.0], &one, &one, &one)?;
        worst = worst.max((sol.v2[(0, 0)] - (std::f64::consts::SQRT_2 - 1.0)).abs());
        for _ in 0..10 {
            let n = rng.gen_range(1..=5);
            let m = rng.gen_range(1..=n);
            let a = random_matrix(&mut rng, n, n);
            let b = random_matrix(&mut rng, n, m);
            let q = DMatrix::identity(n, n);
            let r = DMatrix::identity(m, m);
            let sol = care_solve(&a, &b, &q, &r)?;
            worst = worst.max(care_residual(&a, &b, &q, &r, &sol.v2) / q.norm());
        }
        Ok(worst)
    };
    report("riccati", run(), 1e-9)
}

pub fn albrekht_suite(seed: u64) -> SuiteReport {
    let run = || -> Result<f64> {
        // ẋ = −x + x² + u with unit weights
        let sys = PolynomialSystem::new(dmatrix![-1.0], dmatrix![1.0])?.with_term(2, dmatrix![1.0])?;
        let cost = QuadraticCost::new(dmatrix![1.0], dmatrix![1.0])?;
        let (vf, law) = pqr(&sys, &cost, 2)?;
        let v2 = std::f64::consts::SQRT_2 - 1.0;
        let v3 = 2.0 * v2 / (3.0 * std::f64::consts::SQRT_2);
        let mut worst: f64 = (vf.coeff(2).unwrap()[0] - v2).abs();
        worst = worst.max((vf.coeff(3).unwrap()[0] - v3).abs());
        worst = worst.max((law.gain(2).unwrap()[(0, 0)] + 1.5 * v3).abs());

        // no nonlinearity: every higher coefficient vanishes
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lin = PolynomialSystem::new(random_matrix(&mut rng, 3, 3), random_matrix(&mut rng, 3, 2))?;
        let cost = QuadraticCost::new(DMatrix::identity(3, 3), DMatrix::identity(2, 2))?;
        let (vf, law) = pqr(&lin, &cost, 3)?;
        let scale = DVector::from_column_slice(vf.coeff(2).unwrap()).norm();
        for k in 3..=4 {
            worst = worst.max(DVector::from_column_slice(vf.coeff(k).unwrap()).norm() / scale);
        }
        for j in 2..=3 {
            worst = worst.max(law.gain(j).unwrap().norm() / scale);
        }
        Ok(worst)
    };
    report("albrekht", run(), 1e-9)
}

/// Largest relative violation over the computed degrees of
///
/// * the cancellation `v₂ᵀ((Bk_d)⊗I + I⊗(Bk_d)) + r₂ᵀ(k_d⊗k₁ + k₁⊗k_d) = 0`, assembled densely,
/// * the linear system `𝓛_{d+1}(A_cᵀ)v_{d+1} = c_d` each value coefficient solves, and
/// * the gain formula linking `k_d` to `v_{d+1}`.
///
/// `values` holds `v₂ … v_{D+1}` and `gains` holds `k₁ … k_D`.
pub fn decoupling_check(
    system: &PolynomialSystem,
    cost: &QuadraticCost,
    values: &[Vec<f64>],
    gains: &[DMatrix<f64>],
) -> Result<f64> {
    let n = system.n();
    let b = system.b();
    let k1 = &gains[0];
    let v2 = DVector::from_column_slice(&values[0]);
    let r2 = DVector::from_vec(cost.r2());
    let eye = DMatrix::identity(n, n);
    let closed_t = (system.a() + b * k1).transpose();
    let mut worst: f64 = 0.0;
    for d in 2..=gains.len() {
        let kd = &gains[d - 1];
        let bk = b * kd;
        let left = (kron_dense(&bk, &eye)? + kron_dense(&eye, &bk)?).transpose() * &v2;
        let right = (kron_dense(kd, k1)? + kron_dense(k1, kd)?).transpose() * &r2;
        let scale = left.norm().max(right.norm()).max(f64::MIN_POSITIVE);
        worst = worst.max((left + right).norm() / scale);

        let c = assemble_rhs(d, system, cost, &values[..d - 1], &gains[..d - 1])?;
        let lhs = lyap_sum_apply(&closed_t, d + 1, &ModeTensor::uniform(n, d + 1, values[d - 1].clone())?)?;
        let c_norm = c.data().iter().map(|x| x * x).sum::<f64>().sqrt();
        let l_norm = lhs.data().iter().map(|x| x * x).sum::<f64>().sqrt();
        if c_norm.max(l_norm) > 0.0 {
            worst = worst.max(rel(lhs.data(), c.data()) * c_norm / c_norm.max(l_norm));
        }

        let recomputed = compute_gain(d, b, cost.r(), &values[d - 1])?;
        let g_scale = kd.norm().max(recomputed.norm());
        if g_scale > 0.0 {
            worst = worst.max((&recomputed - kd).norm() / g_scale);
        }
    }
    Ok(worst)
}

/// Small random instance with quadratic and cubic terms.
pub fn decoupling_instance(seed: u64) -> Result<(PolynomialSystem, QuadraticCost)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n, m) = (3, 2);
    let sys = PolynomialSystem::new(random_matrix(&mut rng, n, n), random_matrix(&mut rng, n, m))?
        .with_term(2, random_matrix(&mut rng, n, n * n))?
        .with_term(3, random_matrix(&mut rng, n, n * n * n))?;
    let cost = QuadraticCost::new(DMatrix::identity(n, n), DMatrix::identity(m, m) * 2.0)?;
    Ok((sys, cost))
}

pub fn decoupling_suite(seed: u64) -> SuiteReport {
    let run = || -> Result<f64> {
        let (sys, cost) = decoupling_instance(seed)?;
        let sol = pqr_with(&sys, &cost, 4, &PqrOptions::default())?;
        let values: Vec<Vec<f64>> = (2..=5).map(|k| sol.value.coeff(k).unwrap().to_vec()).collect();
        let gains: Vec<DMatrix<f64>> = (1..=4).map(|j| sol.feedback.gain(j).unwrap().clone()).collect();
        decoupling_check(&sys, &cost, &values, &gains)
    };
    report("decoupling", run(), 1e-8)
}

pub fn run_all(seed: u64) -> Vec<SuiteReport> {
    vec![
        kron_suite(seed),
        nway_suite(seed),
        riccati_suite(seed),
        albrekht_suite(seed),
        decoupling_suite(seed),
    ]
}
