use serde::{Deserialize, Serialize};

use super::stats::{correlation, ks_sorted, ks_two_sample, quantile_sorted, quantile_stderr};
use super::ExperimentSummary;
use crate::density::PiecewiseDensity;
use crate::empirical::max_partial_sum_norm;
use crate::error::{Error, Result};
use crate::map::GammaParam;
use crate::orbit::{generate_backward_chain, generate_orbit, BackwardSampler, ForwardSampler, DEFAULT_BURN_IN};
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReversalParams {
    /// Length of the single forward orbit and backward chain compared in law.
    pub n: usize,
    /// Number of paths in the maximal partial-sum comparison.
    pub replicates: usize,
    /// Length of each of those paths.
    pub path_len: usize,
    pub seed: u64,
}

impl Default for ReversalParams {
    fn default() -> Self {
        ReversalParams {
            n: 1_000_000,
            replicates: 500,
            path_len: 10_000,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantileCheck {
    pub p: f64,
    pub forward: f64,
    pub backward: f64,
    pub stderr: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReversalReport {
    pub gamma: GammaParam,
    pub params: ReversalParams,
    pub marginal_ks: f64,
    /// Lag-one correlation along the forward orbit and the backward chain.
    pub corr_forward: f64,
    pub corr_backward: f64,
    /// `E[T(x) x²]` forward against `E[X_1 X_2²]` backward.
    pub moment_forward: f64,
    pub moment_backward: f64,
    pub quantiles: Vec<QuantileCheck>,
    /// KS between the backward maxima drawn from two different seeds.
    pub self_ks: f64,
    pub self_ks_bound: f64,
    /// Sorted `max_k ‖Σ_k‖` over forward paths and `max_k ‖S_k‖` over reversed chains.
    pub forward_maxima: Vec<f64>,
    pub backward_maxima: Vec<f64>,
}

impl ReversalReport {
    pub fn summary(&self) -> ExperimentSummary {
        let mut s = ExperimentSummary::new(
            "reversal",
            serde_json::json!({
                "gamma": self.gamma,
                "n": self.params.n,
                "replicates": self.params.replicates,
                "path_len": self.params.path_len,
            }),
            self.params.seed,
        );
        s.metric("marginal_ks", self.marginal_ks)
            .metric("corr_forward", self.corr_forward)
            .metric("corr_backward", self.corr_backward)
            .metric("moment_forward", self.moment_forward)
            .metric("moment_backward", self.moment_backward)
            .metric("quantiles", &self.quantiles)
            .metric("self_ks", self.self_ks)
            .flag("marginal_ks", self.marginal_ks <= 0.01)
            .flag("pair_correlation", (self.corr_forward - self.corr_backward).abs() <= 0.01)
            .flag("pair_moment", (self.moment_forward - self.moment_backward).abs() <= 0.01)
            .flag("quantile_domination", self.quantiles.iter().all(|q| q.ok))
            .flag("self_ks", self.self_ks <= self.self_ks_bound);
        s
    }
}

fn lag_one(values: &[f64]) -> (f64, f64) {
    // pairs (later, earlier) in the direction of the deterministic map
    let (a, b) = (&values[1..], &values[..values.len() - 1]);
    let corr = correlation(a, b);
    let moment = a.iter().zip(b).map(|(x, y)| x * y * y).sum::<f64>() / a.len() as f64;
    (corr, moment)
}

fn backward_maxima(d: &PiecewiseDensity, seed: u64, replicates: usize, len: usize) -> Result<Vec<f64>> {
    let mut v = par::try_map_range(0..replicates, |r| {
        let mut s = BackwardSampler::new(d.gamma, seed, r as u64, d)?;
        let mut values = vec![0.0; len];
        s.fill(&mut values)?;
        Ok::<_, Error>(max_partial_sum_norm(&values, d))
    })?;
    v.sort_unstable_by(f64::total_cmp);
    Ok(v)
}

/// Compares forward orbits with reversed chains: one-time marginals, a
/// lag-one pair law, and the maximal partial-sum domination
/// `q_p(max ‖Σ_k‖) ≤ 2 q_p(max ‖S_k‖)`.
pub fn reversal_check(d: &PiecewiseDensity, params: ReversalParams) -> Result<ReversalReport> {
    let ReversalParams {
        n,
        replicates,
        path_len,
        seed,
    } = params;
    if n < 2 || replicates < 2 || path_len < 1 {
        return Err(Error::invalid("reversal check needs n ≥ 2 and at least two paths"));
    }
    let gamma = d.gamma;
    let fwd = generate_orbit(gamma, n, DEFAULT_BURN_IN, seed)?;
    // the backward chain runs X_1, X_2, ... with X_1 = T(X_2): reverse it so
    // consecutive pairs read in the forward direction
    let mut bwd = generate_backward_chain(gamma, n, seed, d)?.values;
    bwd.reverse();
    let marginal_ks = ks_two_sample(&fwd.values, &bwd)?;
    let (corr_forward, moment_forward) = lag_one(&fwd.values);
    let (corr_backward, moment_backward) = lag_one(&bwd);

    let mut fwd_max = par::try_map_range(0..replicates, |r| {
        let mut s = ForwardSampler::new(gamma, DEFAULT_BURN_IN, seed, r as u64)?;
        let mut values = vec![0.0; path_len];
        s.fill(&mut values)?;
        Ok::<_, Error>(max_partial_sum_norm(&values, d))
    })?;
    fwd_max.sort_unstable_by(f64::total_cmp);
    let bwd_max = backward_maxima(d, seed, replicates, path_len)?;
    let quantiles = [0.5, 0.9]
        .into_iter()
        .map(|p| {
            let (qf, qb) = (quantile_sorted(&fwd_max, p), quantile_sorted(&bwd_max, p));
            let (sf, sb) = (quantile_stderr(&fwd_max, p), quantile_stderr(&bwd_max, p));
            let stderr = (sf * sf + 4.0 * sb * sb).sqrt();
            QuantileCheck {
                p,
                forward: qf,
                backward: qb,
                stderr,
                ok: qf <= 2.0 * qb + 3.0 * stderr,
            }
        })
        .collect();
    let other = backward_maxima(d, seed.wrapping_add(1), replicates, path_len)?;
    let self_ks = ks_sorted(&bwd_max, &other);
    Ok(ReversalReport {
        gamma,
        params,
        marginal_ks,
        corr_forward,
        corr_backward,
        moment_forward,
        moment_backward,
        quantiles,
        self_ks,
        // 1% critical value of the two-sample KS statistic for equal sizes
        self_ks_bound: 1.63 * (2.0 / replicates as f64).sqrt(),
        forward_maxima: fwd_max,
        backward_maxima: bwd_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::estimate_density;
    use crate::map;

    #[test]
    fn reversed_chain_steps_are_forward_map_steps() {
        let gamma = GammaParam::new(0.75).unwrap();
        let d = estimate_density(gamma, 1 << 12).unwrap();
        let chain = generate_backward_chain(gamma, 2000, 5, &d).unwrap();
        for w in chain.values.windows(2) {
            let image = map::step(w[1], gamma.get());
            assert!((image - w[0]).abs() <= 1e-12, "{} vs {}", image, w[0]);
        }
    }

    #[test]
    fn small_report_is_sane() {
        let gamma = GammaParam::new(0.6).unwrap();
        let d = estimate_density(gamma, 1 << 12).unwrap();
        let r = reversal_check(
            &d,
            ReversalParams {
                n: 20_000,
                replicates: 50,
                path_len: 500,
                seed: 3,
            },
        )
        .unwrap();
        assert!(r.marginal_ks < 0.1, "{}", r.marginal_ks);
        assert!((r.corr_forward - r.corr_backward).abs() < 0.1);
        assert_eq!(r.quantiles.len(), 2);
        assert!(r.summary().metrics.contains_key("self_ks"));
    }
}
