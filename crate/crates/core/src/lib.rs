//! Decay bounds for entries of functions of banded non-normal matrices.
//!
//! The pipeline is: build a banded matrix, enclose its field of values in an
//! ellipse or disk ([`regions`]), turn the region into a decay envelope
//! ([`bounds`], [`faber`]), and check the envelope against a dense evaluation
//! of the matrix function ([`matfun`]). [`krylov`] uses the same envelopes to
//! relax matrix-vector accuracy inside an Arnoldi approximation of `f(A) v`.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod error;
pub mod faber;
pub mod krylov;
pub mod matfun;
pub mod matrix;
pub mod mtx;
pub mod quadrature;
pub mod regions;

pub use bounds::{
    exp_bound, expsqrt_bound, invsqrt_bound, kron_entry_bound, laplace_stieltjes_bound, phi1_bound, DecayEnvelope,
    StieltjesMeasure, CROUZEIX,
};
pub use error::{Error, Result};
pub use faber::{faber_coefficients, faber_tail_bound, level_curve_bound, optimize_tau, FaberCoefficients, TauGrid};
pub use krylov::{
    apriori_residual_bound, arnoldi, inexact_arnoldi_run, krylov_approx, relaxation_schedule, residual_rm,
    ArnoldiDecomposition, ExactMatVec, InexactSchedule, MatVecOracle, PerturbedMatVec,
};
pub use matfun::{column_magnitudes, eval_matfun, expm, sqrtm_pair, MatrixFunctionKind};
pub use matrix::{
    band_distance, kron, kron_sum, solve_linear, spectral_norm, toeplitz_build, BandedMatrix, ComplexMatrix,
    ToeplitzSpec, C64,
};
pub use mtx::{mtx_read, mtx_write};
pub use regions::{
    fit_disk, fit_ellipse, fov_boundary, inflate_for_perturbation, DiskRegion, EllipseRegion, FovSample, Region,
};
