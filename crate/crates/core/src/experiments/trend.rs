use serde::{Deserialize, Serialize};

use super::ExperimentSummary;
use crate::density::{estimate_density, PiecewiseDensity, DEFAULT_BINS};
use crate::empirical::{EmpiricalProcessFn, NormalizationRule};
use crate::error::{Error, Result};
use crate::map::GammaParam;
use crate::orbit::{ForwardSampler, DEFAULT_BURN_IN};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrendPoint {
    pub n: usize,
    pub value: f64,
}

/// `rate(n) ‖G_n‖ / log(n+1)^δ` at each checkpoint of one forward orbit.
pub fn almost_sure_trend(gamma: GammaParam, delta: f64, checkpoints: &[usize], seed: u64) -> Result<Vec<TrendPoint>> {
    let d = estimate_density(gamma, DEFAULT_BINS)?;
    almost_sure_trend_with(&d, delta, checkpoints, seed)
}

pub fn almost_sure_trend_with(
    d: &PiecewiseDensity,
    delta: f64,
    checkpoints: &[usize],
    seed: u64,
) -> Result<Vec<TrendPoint>> {
    let gamma = d.gamma;
    if !(delta > gamma.get()) {
        return Err(Error::Domain {
            what: "delta",
            value: delta,
            domain: "(gamma, ∞)",
        });
    }
    if checkpoints.is_empty() || checkpoints[0] < 3 || checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("checkpoints must be increasing and at least 3"));
    }
    let rule = NormalizationRule::new(gamma)?;
    let mut sampler = ForwardSampler::new(gamma, DEFAULT_BURN_IN, seed, 0)?;
    let mut sorted: Vec<f64> = Vec::new();
    let mut chunk = Vec::new();
    let mut out = Vec::with_capacity(checkpoints.len());
    for &n in checkpoints {
        chunk.resize(n - sorted.len(), 0.0);
        sampler.fill(&mut chunk)?;
        chunk.sort_unstable_by(f64::total_cmp);
        sorted = merge(&sorted, &chunk);
        let ep = EmpiricalProcessFn::from_sorted(gamma, &sorted, &d.bin_edges, d.cdf_at_edges())?;
        out.push(TrendPoint {
            n,
            value: rule.as_rate(n, delta) * ep.l2_norm_sq().sqrt(),
        });
    }
    Ok(out)
}

fn merge(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        if a[i] <= b[j] {
            out.push(a[i]);
            i += 1;
        } else {
            out.push(b[j]);
            j += 1;
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

/// Summary over several seeds: the fraction of decreasing runs and the median
/// of last/first.
pub fn trend_summary(gamma: GammaParam, delta: f64, seeds: &[u64], runs: &[Vec<TrendPoint>]) -> ExperimentSummary {
    let ratios: Vec<f64> = runs
        .iter()
        .map(|r| r.last().map_or(f64::NAN, |l| l.value) / r.first().map_or(f64::NAN, |f| f.value))
        .collect();
    let decreasing = ratios.iter().filter(|&&r| r < 1.0).count();
    let median = super::stats::median(&ratios);
    let mut s = ExperimentSummary::new(
        "trend",
        serde_json::json!({
            "gamma": gamma,
            "delta": delta,
            "checkpoints": runs.first().map(|r| r.iter().map(|p| p.n).collect::<Vec<_>>()),
            "seeds": seeds,
        }),
        seeds.first().copied().unwrap_or(0),
    );
    let need = (seeds.len() * 4).div_ceil(5);
    s.metric("ratios", &ratios)
        .metric("decreasing_runs", decreasing)
        .metric("median_ratio", median)
        .flag("values_finite_positive", runs.iter().flatten().all(|p| p.value.is_finite() && p.value > 0.0))
        .flag("decreasing_on_most_seeds", decreasing >= need)
        .flag("median_ratio_below_half", median < 0.5);
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::empirical::EmpiricalProcessFn;
    use crate::orbit::generate_orbit;
    use approx::assert_relative_eq;

    #[test]
    fn matches_direct_prefix_evaluation() {
        let gamma = GammaParam::new(0.75).unwrap();
        let d = estimate_density(gamma, 1 << 12).unwrap();
        let pts = almost_sure_trend_with(&d, 1.0, &[100, 1000, 5000], 3).unwrap();
        let o = generate_orbit(gamma, 5000, DEFAULT_BURN_IN, 3).unwrap();
        let rule = NormalizationRule::new(gamma).unwrap();
        for p in &pts {
            let ep = EmpiricalProcessFn::from_values(&o.values[..p.n], &d).unwrap();
            let direct = rule.as_rate(p.n, 1.0) * ep.l2_norm_sq().sqrt();
            assert_relative_eq!(p.value, direct, max_relative = 1e-12);
            assert!(p.value.is_finite() && p.value > 0.0);
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        let gamma = GammaParam::new(0.75).unwrap();
        let d = PiecewiseDensity::identity(gamma);
        assert!(almost_sure_trend_with(&d, 0.7, &[10, 100], 1).is_err());
        assert!(almost_sure_trend_with(&d, 1.0, &[100, 10], 1).is_err());
        assert!(almost_sure_trend_with(&d, 1.0, &[], 1).is_err());
    }

    #[test]
    fn merge_keeps_order() {
        assert_eq!(merge(&[1.0, 3.0], &[2.0, 4.0, 5.0]), vec![1.0, 2.0, 3.0, 4.0, 5.0]);
    }
}
