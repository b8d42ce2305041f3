//! Fast deterministic checks: Fourier tail bounds and agreement between the
//! exact and independent evaluations of the statistics.

use super::ExperimentSummary;
use crate::density::{estimate_density, PiecewiseDensity, DEFAULT_BINS};
use crate::empirical::{
    cvm_from_sorted, cvm_statistic_direct, fourier_tail_norm_sq, fourier_tail_quadrature, tail_bound,
    EmpiricalProcessFn,
};
use crate::error::Result;
use crate::map::GammaParam;
use crate::orbit::{generate_orbit, DEFAULT_BURN_IN};
use crate::stable::c_gamma;

/// Tail sums against `2/(π² m)` on a grid of `grid` points for
/// `m ∈ {8, 64, 512}`, and closed form against quadrature at spot points.
pub fn fourier_check(grid: usize, k_max: u64) -> Result<ExperimentSummary> {
    let mut worst = 0.0_f64;
    for m in [8u64, 64, 512] {
        let bound = tail_bound(m);
        for i in 0..grid {
            let x = i as f64 / (grid - 1) as f64;
            worst = worst.max(fourier_tail_norm_sq(x, m, k_max)? / bound);
        }
    }
    let mut quad_err = 0.0_f64;
    for (x, m, k) in [(0.5, 8, 100_000), (0.1, 8, 20_000), (0.737, 64, 20_000)] {
        let exact = fourier_tail_norm_sq(x, m, k)?;
        quad_err = quad_err.max((exact - fourier_tail_quadrature(x, m, k, 4)).abs());
    }
    let mut s = ExperimentSummary::new("fourier", serde_json::json!({ "grid": grid, "k_max": k_max }), 0);
    s.metric("max_tail_over_bound", worst)
        .metric("max_quadrature_gap", quad_err)
        .flag("tail_bound", worst <= 1.0)
        .flag("quadrature_agreement", quad_err <= 1e-6);
    Ok(s)
}

/// Exact against quadrature norms on one orbit, single-point closed forms,
/// and the limit-law constants against 40-digit references.
pub fn consistency_check(seed: u64) -> Result<ExperimentSummary> {
    let gamma = GammaParam::new(0.75)?;
    let d = estimate_density(gamma, DEFAULT_BINS)?;
    let orbit = generate_orbit(gamma, 10_000, DEFAULT_BURN_IN, seed)?;
    let ep = EmpiricalProcessFn::from_values(&orbit.values, &d)?;
    let l2 = ep.l2_norm();
    let w1_gap = (ep.wasserstein1() - ep.wasserstein1_quadrature()).abs();
    let l2_gap = (l2.exact - l2.quadrature).abs();
    let mut sorted = orbit.values.clone();
    sorted.sort_unstable_by(f64::total_cmp);
    let cvm_gap = (cvm_from_sorted(&sorted, &d)? - cvm_statistic_direct(&orbit.values, &d)?).abs();

    let unit = PiecewiseDensity::identity(gamma);
    let single = EmpiricalProcessFn::from_values(&[0.5], &unit)?;
    let closed = (single.wasserstein1() - 0.25)
        .abs()
        .max((cvm_from_sorted(&[0.5], &unit)? - 1.0 / 12.0).abs())
        .max((single.l2_norm().exact - 1.0 / 12f64.sqrt()).abs());

    let c23 = (c_gamma(GammaParam::new(2.0 / 3.0)?)? - 1.098_443_915_671_142_4).abs();
    let c34 = (c_gamma(gamma)? - 0.802_055_749_093_281_7).abs();

    let mut s = ExperimentSummary::new("consistency", serde_json::json!({ "gamma": gamma, "n": 10_000 }), seed);
    s.metric("w1_gap", w1_gap)
        .metric("l2_gap", l2_gap)
        .metric("cvm_gap", cvm_gap)
        .metric("closed_form_error", closed)
        .metric("c_gamma_error", c23.max(c34))
        .flag("exact_vs_quadrature", w1_gap <= 1e-4 && l2_gap <= 1e-4)
        .flag("cvm_two_ways", cvm_gap <= 1e-4)
        .flag("closed_forms", closed <= 1e-10)
        .flag("c_gamma", c23 <= 1e-6 && c34 <= 1e-6);
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_fourier_check_passes() {
        let s = fourier_check(101, 2000).unwrap();
        assert!(s.passed(), "{:?}", s.failing());
    }
}
