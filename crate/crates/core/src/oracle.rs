//! Dense reference constructions for small problems.
//!
//! Everything here assembles explicit Kronecker matrices with [`kron_dense`]
//! and solves with a dense LU factorization. It shares no code with the
//! structured apply/solve paths, so it can be used to check them.

use nalgebra::{DMatrix, DVector};

use crate::error::{PqrError, Result};
use crate::kron::{kron_dense, Entry};

/// `I_{n^l} ⊗ X ⊗ I_{n^{d-1-l}}`.
pub fn positioned<T: Entry>(x: &DMatrix<T>, n: usize, d: usize, position: usize) -> Result<DMatrix<T>> {
    let left = DMatrix::<T>::identity(n.pow(position as u32), n.pow(position as u32));
    let right_size = n.pow((d - 1 - position) as u32);
    let right = DMatrix::<T>::identity(right_size, right_size);
    kron_dense(&kron_dense(&left, x)?, &right)
}

/// `𝓛_d(X) = Σ_l I ⊗ ... ⊗ X ⊗ ... ⊗ I`, assembled.
pub fn lyap_sum_matrix<T: Entry>(x: &DMatrix<T>, n: usize, d: usize) -> Result<DMatrix<T>> {
    let mut total: Option<DMatrix<T>> = None;
    for position in 0..d {
        let term = positioned(x, n, d, position)?;
        total = Some(match total {
            None => term,
            Some(mut acc) => {
                for (a, t) in acc.iter_mut().zip(term.iter()) {
                    *a += *t;
                }
                acc
            }
        });
    }
    total.ok_or_else(|| PqrError::InvalidParameter("d must be positive".into()))
}

/// Solves `𝓛_d(A) v = b` by assembling the `n^d × n^d` matrix.
pub fn dense_lyap_solve(a: &DMatrix<f64>, d: usize, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.nrows();
    let l = lyap_sum_matrix(a, n, d)?;
    let rhs = DVector::from_column_slice(b);
    l.lu()
        .solve(&rhs)
        .map(|v| v.as_slice().to_vec())
        .ok_or_else(|| PqrError::InvalidParameter("assembled Kronecker-sum matrix is singular".into()))
}
