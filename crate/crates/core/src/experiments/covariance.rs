use serde::{Deserialize, Serialize};

use super::stats::{ols, LineFit};
use super::ExperimentSummary;
use crate::error::{Error, Result};
use crate::map::GammaParam;
use crate::observable::ObservableG;
use crate::orbit::{ForwardSampler, DEFAULT_BURN_IN};

/// Jackknife blocks along the orbit.
const BLOCKS: usize = 100;
/// Values used for the pilot mean that centers the products.
const PILOT: usize = 100_000;
const MIN_LAGS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LagEstimate {
    pub lag: usize,
    pub covariance: f64,
    pub stderr: f64,
    pub used: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceFit {
    pub gamma: GammaParam,
    pub n: usize,
    pub variance: f64,
    pub lags: Vec<LagEstimate>,
    pub slope: f64,
    pub slope_stderr: f64,
    pub intercept: f64,
}

impl CovarianceFit {
    pub fn expected_slope(&self) -> f64 {
        -(1.0 - self.gamma.get()) / self.gamma.get()
    }

    pub fn summary(&self, seed: u64, tol: f64) -> ExperimentSummary {
        let mut s = ExperimentSummary::new(
            "covdecay",
            serde_json::json!({ "gamma": self.gamma, "n": self.n }),
            seed,
        );
        let used = self.lags.iter().filter(|l| l.used).count();
        s.metric("slope", self.slope)
            .metric("slope_stderr", self.slope_stderr)
            .metric("expected_slope", self.expected_slope())
            .metric("variance", self.variance)
            .metric("usable_lags", used)
            .flag("slope_within_tolerance", (self.slope - self.expected_slope()).abs() <= tol);
        s
    }
}

/// About 24 log-spaced integer lags in `[10, 1000]`.
pub fn default_lags() -> Vec<usize> {
    let mut lags: Vec<usize> = (0..24)
        .map(|i| (10.0 * 100f64.powf(i as f64 / 23.0)).round() as usize)
        .collect();
    lags.dedup();
    lags
}

/// Covariances of `g(x_i)` and `g(x_{i+k})` along one forward orbit of length
/// `n`, with block-jackknife errors, and the slope of `log|ρ(k)|` against
/// `log k` over the lags whose covariance exceeds three standard errors.
pub fn covariance_decay(
    gamma: GammaParam,
    g: &ObservableG,
    lags: &[usize],
    n: usize,
    seed: u64,
) -> Result<CovarianceFit> {
    let mut lags = lags.to_vec();
    lags.sort_unstable();
    lags.dedup();
    if lags.is_empty() || lags[0] == 0 {
        return Err(Error::invalid("lags must be positive"));
    }
    let max_lag = *lags.last().unwrap_or(&0);
    if n < BLOCKS * (max_lag + 1) {
        return Err(Error::invalid(format!("orbit length {n} too short for lag {max_lag}")));
    }
    let mut sampler = ForwardSampler::new(gamma, DEFAULT_BURN_IN, seed, 0)?;
    let mut pilot = vec![0.0; PILOT.min(n)];
    sampler.fill(&mut pilot)?;
    let center = pilot.iter().map(|&x| g.eval(x)).sum::<f64>() / pilot.len() as f64;
    // restart so the pilot values are also part of the analyzed orbit
    let mut sampler = ForwardSampler::new(gamma, DEFAULT_BURN_IN, seed, 0)?;

    // column 0 is lag 0; the rest follow `lags`
    let all: Vec<usize> = std::iter::once(0).chain(lags.iter().copied()).collect();
    let nl = all.len();
    let width = max_lag + 1;
    let mut ring = vec![0.0; width];
    let block_len = n.div_ceil(BLOCKS);
    // per block and lag: count, Σ a, Σ b, Σ ab with a = y_{i-k}, b = y_i
    let mut cnt = vec![0u64; BLOCKS * nl];
    let mut sa = vec![0.0; BLOCKS * nl];
    let mut sb = vec![0.0; BLOCKS * nl];
    let mut sab = vec![0.0; BLOCKS * nl];
    for i in 0..n {
        let y = g.eval(sampler.next_value()?) - center;
        ring[i % width] = y;
        for (c, &k) in all.iter().enumerate() {
            if k > i {
                break;
            }
            let a = ring[(i - k) % width];
            // a pair belongs to the block of its earlier index
            let slot = ((i - k) / block_len) * nl + c;
            cnt[slot] += 1;
            sa[slot] += a;
            sb[slot] += y;
            sab[slot] += a * y;
        }
    }
    let cov = |skip: Option<usize>, c: usize| {
        let (mut k, mut a, mut b, mut ab) = (0u64, 0.0, 0.0, 0.0);
        for blk in 0..BLOCKS {
            if Some(blk) == skip {
                continue;
            }
            let s = blk * nl + c;
            k += cnt[s];
            a += sa[s];
            b += sb[s];
            ab += sab[s];
        }
        let kf = k as f64;
        ab / kf - (a / kf) * (b / kf)
    };
    let variance = cov(None, 0);
    let mut estimates = Vec::with_capacity(lags.len());
    for (c, &lag) in all.iter().enumerate().skip(1) {
        let full = cov(None, c);
        let loo: Vec<f64> = (0..BLOCKS).map(|b| cov(Some(b), c)).collect();
        let m = loo.iter().sum::<f64>() / BLOCKS as f64;
        let var = (BLOCKS - 1) as f64 / BLOCKS as f64 * loo.iter().map(|v| (v - m) * (v - m)).sum::<f64>();
        let stderr = var.sqrt();
        estimates.push(LagEstimate {
            lag,
            covariance: full,
            stderr,
            used: full.abs() > 3.0 * stderr,
        });
    }
    let (x, y): (Vec<f64>, Vec<f64>) = estimates
        .iter()
        .filter(|e| e.used)
        .map(|e| ((e.lag as f64).ln(), e.covariance.abs().ln()))
        .unzip();
    if x.len() < MIN_LAGS {
        return Err(Error::InsufficientSignal(format!(
            "{} of {} lags exceed three standard errors",
            x.len(),
            lags.len()
        )));
    }
    let LineFit {
        slope,
        intercept,
        slope_stderr,
    } = ols(&x, &y)?;
    Ok(CovarianceFit {
        gamma,
        n,
        variance,
        lags: estimates,
        slope,
        slope_stderr,
        intercept,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orbit::generate_orbit;
    use approx::assert_relative_eq;

    #[test]
    fn default_lags_span_the_window() {
        let l = default_lags();
        assert_eq!(l[0], 10);
        assert_eq!(*l.last().unwrap(), 1000);
        assert!(l.windows(2).all(|w| w[0] < w[1]));
        assert!(l.len() >= 20);
    }

    #[test]
    fn lag_zero_is_the_sample_variance() {
        let gamma = GammaParam::new(0.75).unwrap();
        let n = 200_000;
        let fit = covariance_decay(gamma, &ObservableG::identity(), &[1, 2, 3, 5, 8, 13], n, 4).unwrap();
        let o = generate_orbit(gamma, n, DEFAULT_BURN_IN, 4).unwrap();
        let m = o.values.iter().sum::<f64>() / n as f64;
        let v = o.values.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n as f64;
        assert_relative_eq!(fit.variance, v, max_relative = 1e-9);
        assert!(fit.lags.iter().all(|l| l.covariance.abs() <= fit.variance * (1.0 + 1e-9)));
    }

    #[test]
    fn short_orbits_are_rejected() {
        let gamma = GammaParam::new(0.75).unwrap();
        assert!(covariance_decay(gamma, &ObservableG::identity(), &[1000], 10_000, 1).is_err());
        assert!(covariance_decay(gamma, &ObservableG::identity(), &[0, 5], 10_000, 1).is_err());
    }
}
