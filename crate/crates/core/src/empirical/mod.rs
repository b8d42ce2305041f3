//! The empirical process `G_n = F_n - F` of a sample as an element of
//! `L²[0, 1]`, and the statistics and scalings built on it.

mod fourier;
mod normalization;
mod partial_sums;
mod process;

pub use fourier::{coefficient_sq, fourier_tail_norm_sq, fourier_tail_quadrature, sup_tail_norm, tail_bound};
pub use normalization::{normalized_statistic, raw_statistic, raw_statistics, NormalizationRule, StatKind};
pub use partial_sums::{max_partial_sum_norm, partial_sum_norms};
pub use process::{
    cvm_from_sorted, cvm_statistic, cvm_statistic_direct, empirical_process, EmpiricalProcessFn, L2Norm, Piece,
    QUADRATURE_POINTS, TIE_TOL,
};
