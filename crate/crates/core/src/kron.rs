//! Kronecker-product primitives.
//!
//! Layout convention, used everywhere in this crate: matrices are stored
//! column-major (`vec` stacks columns), and a tensor with modes
//! `(i_1, ..., i_d)` is stored with mode 1 varying slowest and mode `d`
//! fastest. Under this layout `(X_1 ⊗ ... ⊗ X_d) v` applies `X_k` to mode `k`,
//! and `x ⊗ ... ⊗ x` is the tensor with entry `x[i_1] * ... * x[i_d]`.

use std::ops::{AddAssign, Mul};

use nalgebra::{DMatrix, Scalar};
use num_complex::Complex64;
use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::budget;
use crate::error::{PqrError, Result};

/// Name recorded in serialized files for the layout described above.
pub const LAYOUT: &str = "column-major-mode1-slowest";

/// Output sizes below this run on the calling thread.
const PARALLEL_THRESHOLD: usize = 1 << 16;

/// Scalars the structured operations work over (`f64` and `Complex64`).
pub trait Entry:
    Scalar + Copy + Zero + One + Mul<Output = Self> + AddAssign + Send + Sync
{
}

impl Entry for f64 {}
impl Entry for Complex64 {}

/// A vector carrying a tensor shape. Entry `(i_1, ..., i_d)` lives at
/// `((i_1 * dims[1] + i_2) * dims[2] + ...) + i_d`.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeTensor<T = f64> {
    dims: Vec<usize>,
    data: Vec<T>,
}

impl<T: Entry> ModeTensor<T> {
    pub fn new(dims: Vec<usize>, data: Vec<T>) -> Result<Self> {
        let expected = budget::checked_product(&dims)?;
        if data.len() != expected {
            return Err(PqrError::LengthMismatch { expected, actual: data.len() });
        }
        Ok(Self { dims, data })
    }

    /// `d` modes of size `n`.
    pub fn uniform(n: usize, d: usize, data: Vec<T>) -> Result<Self> {
        Self::new(vec![n; d], data)
    }

    pub fn zeros(dims: Vec<usize>) -> Result<Self> {
        let len = budget::checked_product(&dims)?;
        Ok(Self { dims, data: vec![T::zero(); len] })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn modes(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }
}

/// Column-major stacking: entry `(i, j)` goes to position `i + j * rows`.
pub fn vec<T: Entry>(m: &DMatrix<T>) -> Vec<T> {
    m.as_slice().to_vec()
}

pub fn unvec<T: Entry>(v: &[T], rows: usize, cols: usize) -> Result<DMatrix<T>> {
    let expected = rows * cols;
    if v.len() != expected {
        return Err(PqrError::LengthMismatch { expected, actual: v.len() });
    }
    Ok(DMatrix::from_column_slice(rows, cols, v))
}

/// Explicit Kronecker product. Meant for small reference computations.
pub fn kron_dense<T: Entry>(x: &DMatrix<T>, y: &DMatrix<T>) -> Result<DMatrix<T>> {
    let rows = x.nrows() * y.nrows();
    let cols = x.ncols() * y.ncols();
    budget::check(rows as u128 * cols as u128)?;
    let mut out = DMatrix::<T>::zeros(rows, cols);
    for xj in 0..x.ncols() {
        for xi in 0..x.nrows() {
            let a = x[(xi, xj)];
            if a.is_zero() {
                continue;
            }
            for yj in 0..y.ncols() {
                for yi in 0..y.nrows() {
                    out[(xi * y.nrows() + yi, xj * y.ncols() + yj)] = a * y[(yi, yj)];
                }
            }
        }
    }
    Ok(out)
}

fn is_identity<T: Entry>(x: &DMatrix<T>) -> bool {
    if !x.is_square() {
        return false;
    }
    let n = x.nrows();
    (0..n).all(|j| {
        (0..n).all(|i| {
            let e = x[(i, j)];
            if i == j {
                e == T::one()
            } else {
                e.is_zero()
            }
        })
    })
}

/// Multiplies mode `mode` of a tensor with shape `dims` by `x`. The output
/// has the same shape except that mode `mode` now has size `x.nrows()`.
pub(crate) fn mode_product<T: Entry>(v: &[T], dims: &[usize], mode: usize, x: &DMatrix<T>) -> Vec<T> {
    let before: usize = dims[..mode].iter().product();
    let cols = dims[mode];
    let after: usize = dims[mode + 1..].iter().product();
    let rows = x.nrows();
    let xs = x.as_slice();

    // Each output row (p, i, :) is a contiguous slice of length `after`.
    let row = |idx: usize, out: &mut [T]| {
        let p = idx / rows;
        let i = idx % rows;
        let base = p * cols * after;
        for j in 0..cols {
            let a = xs[i + j * rows];
            if a.is_zero() {
                continue;
            }
            let src = &v[base + j * after..base + (j + 1) * after];
            for (o, s) in out.iter_mut().zip(src) {
                *o += a * *s;
            }
        }
    };

    let mut out = vec![T::zero(); before * rows * after];
    if out.is_empty() {
        return out;
    }
    if out.len() >= PARALLEL_THRESHOLD {
        let min_len = (4096 / after).max(1);
        out.par_chunks_mut(after)
            .with_min_len(min_len)
            .enumerate()
            .for_each(|(idx, chunk)| row(idx, chunk));
    } else {
        out.chunks_mut(after).enumerate().for_each(|(idx, chunk)| row(idx, chunk));
    }
    out
}

/// Applies `x` to a single mode of `v`.
pub fn apply_mode<T: Entry>(x: &DMatrix<T>, mode: usize, v: &ModeTensor<T>) -> Result<ModeTensor<T>> {
    if mode >= v.modes() {
        return Err(PqrError::DimensionMismatch(format!(
            "mode {mode} out of range for a {}-mode tensor",
            v.modes()
        )));
    }
    if x.ncols() != v.dims[mode] {
        return Err(PqrError::DimensionMismatch(format!(
            "factor has {} columns but mode {mode} has size {}",
            x.ncols(),
            v.dims[mode]
        )));
    }
    let mut dims = v.dims.clone();
    dims[mode] = x.nrows();
    budget::checked_product(&dims)?;
    let data = mode_product(&v.data, &v.dims, mode, x);
    Ok(ModeTensor { dims, data })
}

/// `(X_1 ⊗ ... ⊗ X_d) v` by successive mode products, never assembling the
/// Kronecker matrix. Identity factors are skipped.
pub fn kron_apply<T: Entry>(factors: &[DMatrix<T>], v: &ModeTensor<T>) -> Result<ModeTensor<T>> {
    if factors.len() != v.modes() {
        return Err(PqrError::DimensionMismatch(format!(
            "{} factors for a {}-mode tensor",
            factors.len(),
            v.modes()
        )));
    }
    for (k, f) in factors.iter().enumerate() {
        if f.ncols() != v.dims[k] {
            return Err(PqrError::DimensionMismatch(format!(
                "factor {k} has {} columns but mode {k} has size {}",
                f.ncols(),
                v.dims[k]
            )));
        }
    }
    let out_dims: Vec<usize> = factors.iter().map(|f| f.nrows()).collect();
    budget::checked_product(&out_dims)?;

    let mut current = v.clone();
    for (k, f) in factors.iter().enumerate() {
        if is_identity(f) {
            continue;
        }
        current = apply_mode(f, k, &current)?;
    }
    Ok(current)
}

/// Number of modes `k` with `n^k == rows`; `None` if `rows` is not a power of `n`.
fn power_of(n: usize, rows: usize) -> Option<usize> {
    if n == 1 {
        return (rows == 1).then_some(1);
    }
    let mut k = 0;
    let mut p = 1usize;
    while p < rows {
        p = p.checked_mul(n)?;
        k += 1;
    }
    (p == rows).then_some(k)
}

/// `𝓛_d(X) v = Σ_l (I ⊗ ... ⊗ X ⊗ ... ⊗ I) v` with `X` in position `l`.
///
/// `X` is `n^k × n`. Each position term replaces one mode of size `n` by `k`
/// modes of size `n`, so every term has the layout of a `(d - 1 + k)`-mode
/// tensor and the sum is well defined. For `n = 1` the output is taken to
/// have `d` modes.
pub fn lyap_sum_apply<T: Entry>(x: &DMatrix<T>, d: usize, v: &ModeTensor<T>) -> Result<ModeTensor<T>> {
    let n = x.ncols();
    if d == 0 || v.modes() != d || v.dims.iter().any(|&s| s != n) {
        return Err(PqrError::DimensionMismatch(format!(
            "expected {d} modes of size {n}, got dims {:?}",
            v.dims
        )));
    }
    let k = power_of(n, x.nrows()).ok_or_else(|| {
        PqrError::DimensionMismatch(format!(
            "operator has {} rows, which is not a power of {n}",
            x.nrows()
        ))
    })?;
    let out_modes = d - 1 + k;
    let out_len = budget::checked_pow(n, out_modes)?;

    let mut out = vec![T::zero(); out_len];
    for mode in 0..d {
        let term = mode_product(&v.data, &v.dims, mode, x);
        for (o, t) in out.iter_mut().zip(&term) {
            *o += *t;
        }
    }
    Ok(ModeTensor { dims: vec![n; out_modes], data: out })
}

/// `x ⊗ x ⊗ ... ⊗ x` (`d` factors).
pub fn monomial(x: &[f64], d: usize) -> Result<ModeTensor<f64>> {
    if d == 0 {
        return Err(PqrError::InvalidParameter("monomial degree must be at least 1".into()));
    }
    let n = x.len();
    budget::checked_pow(n, d)?;
    let mut data = x.to_vec();
    for _ in 1..d {
        data = extend_monomial(&data, x);
    }
    Ok(ModeTensor { dims: vec![n; d], data })
}

/// `w ⊗ x`, appending `x` as the fastest mode.
pub(crate) fn extend_monomial(w: &[f64], x: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(w.len() * x.len());
    for &a in w {
        out.extend(x.iter().map(|&b| a * b));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;
    use nalgebra::dmatrix;
    use proptest::prelude::*;

    fn swap2() -> DMatrix<f64> {
        dmatrix![0.0, 1.0; 1.0, 0.0]
    }

    fn rel_err(a: &[f64], b: &[f64]) -> f64 {
        let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt().max(1e-300);
        num / den
    }

    #[test]
    fn kron_dense_identity_gives_block_diagonal() {
        let y = dmatrix![1.0, 2.0; 3.0, 4.0];
        let k = kron_dense(&DMatrix::identity(2, 2), &y).unwrap();
        let expected = dmatrix![
            1.0, 2.0, 0.0, 0.0;
            3.0, 4.0, 0.0, 0.0;
            0.0, 0.0, 1.0, 2.0;
            0.0, 0.0, 3.0, 4.0
        ];
        assert_eq!(k, expected);
    }

    #[test]
    fn kron_dense_permutation() {
        let k = kron_dense(&swap2(), &DMatrix::identity(2, 2)).unwrap();
        let expected = dmatrix![
            0.0, 0.0, 1.0, 0.0;
            0.0, 0.0, 0.0, 1.0;
            1.0, 0.0, 0.0, 0.0;
            0.0, 1.0, 0.0, 0.0
        ];
        assert_eq!(k, expected);
    }

    #[test]
    fn kron_dense_block_expansion() {
        let x = dmatrix![1.0, 2.0; 3.0, 4.0];
        let k = kron_dense(&x, &swap2()).unwrap();
        let expected = dmatrix![
            0.0, 1.0, 0.0, 2.0;
            1.0, 0.0, 2.0, 0.0;
            0.0, 3.0, 0.0, 4.0;
            3.0, 0.0, 4.0, 0.0
        ];
        assert_eq!(k, expected);
        assert_eq!(k, x.kronecker(&swap2()));
    }

    #[test]
    fn kron_dense_respects_memory_guard() {
        let big = DMatrix::<f64>::zeros(30_000, 1);
        let err = kron_dense(&big, &big.transpose()).unwrap_err();
        assert!(matches!(err, PqrError::MemoryBudget { .. }));
    }

    #[test]
    fn vec_is_column_major() {
        let m = dmatrix![1.0, 3.0; 2.0, 4.0];
        assert_eq!(vec(&m), vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(unvec(&[1.0, 2.0, 3.0, 4.0], 2, 2).unwrap(), m);
        let row = dmatrix![5.0, 6.0, 7.0];
        assert_eq!(vec(&row), vec![5.0, 6.0, 7.0]);
        assert!(matches!(
            unvec(&[1.0, 2.0, 3.0], 2, 2),
            Err(PqrError::LengthMismatch { expected: 4, actual: 3 })
        ));
    }

    #[test]
    fn kron_apply_examples() {
        let v = ModeTensor::uniform(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let id = DMatrix::identity(2, 2);
        assert_eq!(kron_apply(&[id.clone(), id.clone()], &v).unwrap().data(), &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(kron_apply(&[swap2(), id.clone()], &v).unwrap().data(), &[3.0, 4.0, 1.0, 2.0]);
        assert_eq!(kron_apply(&[id, swap2()], &v).unwrap().data(), &[2.0, 1.0, 4.0, 3.0]);
    }

    #[test]
    fn kron_apply_rejects_mismatched_factor() {
        let v = ModeTensor::uniform(2, 2, vec![1.0; 4]).unwrap();
        let bad = DMatrix::<f64>::identity(3, 3);
        assert!(matches!(
            kron_apply(&[bad, DMatrix::identity(2, 2)], &v),
            Err(PqrError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn lyap_sum_examples() {
        let v = ModeTensor::uniform(2, 3, (0..8).map(f64::from).collect()).unwrap();
        let out = lyap_sum_apply(&DMatrix::identity(2, 2), 3, &v).unwrap();
        let expected: Vec<f64> = v.data().iter().map(|x| 3.0 * x).collect();
        assert_eq!(out.data(), expected.as_slice());

        let x = DMatrix::from_diagonal(&nalgebra::dvector![-1.0, -2.0]);
        let v = ModeTensor::uniform(2, 2, vec![1.0; 4]).unwrap();
        assert_eq!(lyap_sum_apply(&x, 2, &v).unwrap().data(), &[-2.0, -3.0, -3.0, -4.0]);
    }

    #[test]
    fn lyap_sum_with_lorenz_nonlinearity_matches_dense() {
        let n2 = crate::models::lorenz().system.nonlinearity(2).unwrap().clone();
        let n2t = n2.transpose();
        let v = ModeTensor::uniform(3, 2, vec(&DMatrix::<f64>::identity(3, 3))).unwrap();
        let got = lyap_sum_apply(&n2t, 2, &v).unwrap();
        assert_eq!(got.dims(), &[3, 3, 3]);
        let dense = oracle::lyap_sum_matrix(&n2t, 3, 2).unwrap();
        let expected = &dense * nalgebra::DVector::from_column_slice(v.data());
        assert!(rel_err(got.data(), expected.as_slice()) < 1e-13);
    }

    #[test]
    fn lyap_sum_rejects_non_power_rows() {
        let x = DMatrix::<f64>::zeros(5, 2);
        let v = ModeTensor::uniform(2, 2, vec![1.0; 4]).unwrap();
        assert!(matches!(lyap_sum_apply(&x, 2, &v), Err(PqrError::DimensionMismatch(_))));
    }

    #[test]
    fn monomial_examples() {
        assert_eq!(monomial(&[1.0, 2.0], 2).unwrap().data(), &[1.0, 2.0, 2.0, 4.0]);
        assert_eq!(monomial(&[3.0, -1.0, 0.5], 1).unwrap().data(), &[3.0, -1.0, 0.5]);

        let m = monomial(&[1.0, 0.0, 2.0], 3).unwrap();
        for (idx, &val) in m.data().iter().enumerate() {
            let digits = [idx / 9, (idx / 3) % 3, idx % 3];
            if digits.contains(&1) {
                assert_eq!(val, 0.0);
            } else {
                let twos = digits.iter().filter(|&&i| i == 2).count() as i32;
                assert_eq!(val, 2f64.powi(twos));
            }
        }
        assert!(monomial(&[1.0], 0).is_err());
    }

    fn small_matrix(rows: usize, cols: usize) -> impl Strategy<Value = DMatrix<f64>> {
        prop::collection::vec(-2.0..2.0f64, rows * cols)
            .prop_map(move |d| DMatrix::from_vec(rows, cols, d))
    }

    fn shaped_pair() -> impl Strategy<Value = (DMatrix<f64>, DMatrix<f64>, Vec<f64>)> {
        (1usize..=4, 1usize..=4, 1usize..=4, 1usize..=4).prop_flat_map(|(r1, c1, r2, c2)| {
            (
                small_matrix(r1, c1),
                small_matrix(r2, c2),
                prop::collection::vec(-2.0..2.0f64, c1 * c2),
            )
        })
    }

    proptest! {
        #[test]
        fn kron_apply_matches_dense((x, y, v) in shaped_pair()) {
            let t = ModeTensor::new(vec![x.ncols(), y.ncols()], v.clone()).unwrap();
            let got = kron_apply(&[x.clone(), y.clone()], &t).unwrap();
            let expected = kron_dense(&x, &y).unwrap() * nalgebra::DVector::from_vec(v);
            prop_assert!(rel_err(got.data(), expected.as_slice()) < 1e-13);
        }

        #[test]
        fn lyap_sum_matches_dense(
            (x, d, v) in (1usize..=4, 1usize..=4).prop_flat_map(|(n, d)| {
                (small_matrix(n, n), Just(d), prop::collection::vec(-2.0..2.0f64, n.pow(d as u32)))
            })
        ) {
            let n = x.nrows();
            let t = ModeTensor::uniform(n, d, v.clone()).unwrap();
            let got = lyap_sum_apply(&x, d, &t).unwrap();
            let expected = oracle::lyap_sum_matrix(&x, n, d).unwrap() * nalgebra::DVector::from_vec(v);
            prop_assert!(rel_err(got.data(), expected.as_slice()) < 1e-13);
        }

        #[test]
        fn kronecker_vec_relationship(
            (x, y, vm) in (1usize..=4, 1usize..=4, 1usize..=4, 1usize..=4).prop_flat_map(|(r, c, p, q)| {
                (small_matrix(p, r), small_matrix(q, c), small_matrix(r, c))
            })
        ) {
            // vec(X V Yᵀ) = (Y ⊗ X) vec(V)
            let lhs = vec(&(&x * &vm * y.transpose()));
            let t = ModeTensor::new(vec![vm.ncols(), vm.nrows()], vec(&vm)).unwrap();
            let rhs = kron_apply(&[y, x], &t).unwrap();
            prop_assert!(rel_err(rhs.data(), &lhs) < 1e-13);
        }

        #[test]
        fn tensor_power_inner_product(
            (x, y, d) in (1usize..=4, 1usize..=4).prop_flat_map(|(n, d)| {
                (prop::collection::vec(-1.5..1.5f64, n), prop::collection::vec(-1.5..1.5f64, n), Just(d))
            })
        ) {
            let mx = monomial(&x, d).unwrap();
            let my = monomial(&y, d).unwrap();
            let lhs: f64 = mx.data().iter().zip(my.data()).map(|(a, b)| a * b).sum();
            let dot: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
            let rhs = dot.powi(d as i32);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
        }

        #[test]
        fn quadratic_form_directional_derivative(
            (c2, x, f) in (1usize..=4).prop_flat_map(|n| {
                (prop::collection::vec(-1.0..1.0f64, n * n),
                 prop::collection::vec(-1.0..1.0f64, n),
                 prop::collection::vec(-1.0..1.0f64, n))
            })
        ) {
            // c(x) = c₂ᵀ(x⊗x); ∂c/∂x · f = c₂ᵀ(f⊗x + x⊗f)
            let c = |z: &[f64]| -> f64 {
                monomial(z, 2).unwrap().data().iter().zip(&c2).map(|(a, b)| a * b).sum()
            };
            let analytic: f64 = extend_monomial(&f, &x).iter()
                .zip(extend_monomial(&x, &f))
                .zip(&c2)
                .map(|((a, b), w)| (a + b) * w)
                .sum();
            for h in [1e-3, 1e-4] {
                let xp: Vec<f64> = x.iter().zip(&f).map(|(a, b)| a + h * b).collect();
                let fd = (c(&xp) - c(&x)) / h;
                // forward difference error is h·c(f) exactly for a quadratic
                let bound = h * c(&f).abs() + 1e-9;
                prop_assert!((fd - analytic).abs() <= bound * 1.0001);
            }
        }
    }
}
