//! Polynomial feedback laws for polynomial-quadratic regulator problems.
//!
//! The value function and feedback are computed as power series in the
//! state, one degree at a time. Every degree beyond the Riccati step is a
//! linear system whose matrix is a Kronecker sum of the closed-loop matrix,
//! solved with an N-way Bartels–Stewart recursion on a single Schur form.

pub mod albrekht;
pub mod budget;
pub mod error;
pub mod kron;
pub mod models;
pub mod oracle;
pub mod riccati;
pub mod schur;
pub mod serialize;
pub mod sim;
pub mod table;
pub mod validate;

pub use albrekht::{
    assemble_rhs, compute_gain, eval_feedback, eval_value, hjb_residual, pqr, pqr_with, FeedbackLaw,
    PolynomialSystem, PqrOptions, PqrSolution, QuadraticCost, ValueFunction,
};
pub use error::{PqrError, Result};
pub use kron::{kron_apply, kron_dense, lyap_sum_apply, monomial, unvec, vec, ModeTensor};
pub use models::{burgers_fem, lorenz, vdp_ring, BenchmarkInstance};
pub use riccati::{care_residual, care_solve, AreSolution};
pub use schur::{lyap2_solve, nway_solve, schur_decompose, SchurForm};
pub use sim::{closed_loop_cost, integrate, open_loop_cost, IntegrationStatus, OdeOptions, SimOptions, Trajectory};
