use serde::{Deserialize, Serialize};

use super::stats::{ols, LineFit};
use super::ExperimentSummary;
use crate::density::{build_ulam_matrix, stationary_vector, UlamMatrix, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::error::{Error, Result};
use crate::map::GammaParam;
use crate::par;

/// Columns of `P^k` handled together.
const BLOCK: usize = 128;

/// Estimated β(k) = E sup_t |P(X_k ≤ t | X_0) − F(t)| for the reversed chain,
/// conditioning on the Ulam bin of `X_0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixingProfile {
    pub gamma: GammaParam,
    pub m_bins: usize,
    pub lags: Vec<usize>,
    pub beta_values: Vec<f64>,
    pub note: String,
}

impl MixingProfile {
    /// Least-squares slope of `log β(k)` against `log(k + 1)` over `k_lo..=k_hi`.
    pub fn slope(&self, k_lo: usize, k_hi: usize) -> Result<LineFit> {
        let (x, y): (Vec<f64>, Vec<f64>) = self
            .lags
            .iter()
            .zip(&self.beta_values)
            .filter(|(k, b)| (k_lo..=k_hi).contains(*k) && **b > 0.0)
            .map(|(&k, &b)| (((k + 1) as f64).ln(), b.ln()))
            .unzip();
        ols(&x, &y)
    }

    /// Largest relative increase `β(k+1)/β(k) − 1` along the profile.
    pub fn max_relative_increase(&self) -> f64 {
        self.beta_values
            .windows(2)
            .map(|w| w[1] / w[0] - 1.0)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_non_increasing(&self, slack: f64) -> bool {
        self.max_relative_increase() <= slack
    }

    pub fn expected_slope(&self) -> f64 {
        -(1.0 - self.gamma.get()) / self.gamma.get()
    }

    pub fn summary(&self, seed: u64, k_lo: usize, k_hi: usize, tol: f64) -> Result<ExperimentSummary> {
        let fit = self.slope(k_lo, k_hi)?;
        let mut s = ExperimentSummary::new(
            "beta",
            serde_json::json!({
                "gamma": self.gamma,
                "m_bins": self.m_bins,
                "k_max": self.lags.last(),
                "fit_window": [k_lo, k_hi],
            }),
            seed,
        );
        let b0 = self.beta_values[0];
        s.metric("beta_0", b0)
            .metric("slope", fit.slope)
            .metric("slope_stderr", fit.slope_stderr)
            .metric("expected_slope", self.expected_slope())
            .metric("max_relative_increase", self.max_relative_increase())
            .metric("note", &self.note)
            .flag("beta_0_range", (0.70..=0.80).contains(&b0))
            .flag("non_increasing", self.is_non_increasing(0.01))
            .flag("slope_within_tolerance", (fit.slope - self.expected_slope()).abs() <= tol);
        Ok(s)
    }
}

pub fn beta_profile(gamma: GammaParam, m_bins: usize, k_max: usize) -> Result<MixingProfile> {
    let p = build_ulam_matrix(gamma, m_bins)?;
    let sv = stationary_vector(&p, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
    beta_profile_from(&p, &sv.p, k_max)
}

/// β(0..=k_max) from a transition matrix and its stationary masses.
///
/// Given `X_0 ∈ B_i`, the reversed chain puts mass `p_l (P^k)[l][i] / p_i` on
/// bin `l` after `k` steps, so only columns of `P^k` are needed. They are
/// advanced in blocks by repeated sparse products.
pub fn beta_profile_from(p: &UlamMatrix, masses: &[f64], k_max: usize) -> Result<MixingProfile> {
    let m = p.m_bins();
    if masses.len() != m {
        return Err(Error::invalid(format!("{} masses for {m} bins", masses.len())));
    }
    let mut cdf = vec![0.0; m + 1];
    for l in 0..m {
        cdf[l + 1] = cdf[l] + masses[l];
    }
    let blocks = m.div_ceil(BLOCK);
    // per block: Σ_i p_i sup_l |cond_i(l) − F(l)| for every k
    let partial = par::map_range(0..blocks, |b| {
        let c0 = b * BLOCK;
        let width = BLOCK.min(m - c0);
        // u[l * width + c] = (P^k)[l][c0 + c]
        let mut u = vec![0.0; m * width];
        for c in 0..width {
            u[(c0 + c) * width + c] = 1.0;
        }
        let mut next = vec![0.0; m * width];
        let mut acc = vec![0.0; k_max + 1];
        let mut run = vec![0.0; width];
        let mut sup = vec![0.0; width];
        for (k, slot) in acc.iter_mut().enumerate() {
            if k > 0 {
                for l in 0..m {
                    let (cols, vals) = p.row(l);
                    let out = &mut next[l * width..(l + 1) * width];
                    out.iter_mut().for_each(|v| *v = 0.0);
                    for (&j, &v) in cols.iter().zip(vals) {
                        let src = &u[j * width..(j + 1) * width];
                        for (o, s) in out.iter_mut().zip(src) {
                            *o += v * s;
                        }
                    }
                }
                std::mem::swap(&mut u, &mut next);
            }
            run.iter_mut().for_each(|v| *v = 0.0);
            sup.iter_mut().for_each(|v| *v = 0.0);
            for l in 0..m {
                let row = &u[l * width..(l + 1) * width];
                for c in 0..width {
                    run[c] += masses[l] * row[c];
                    let cond = run[c] / masses[c0 + c];
                    let gap = (cond - cdf[l + 1]).abs();
                    if gap > sup[c] {
                        sup[c] = gap;
                    }
                }
            }
            *slot = (0..width).map(|c| masses[c0 + c] * sup[c]).sum::<f64>();
        }
        acc
    });
    let mut beta_values = vec![0.0; k_max + 1];
    for part in &partial {
        for (b, v) in beta_values.iter_mut().zip(part) {
            *b += v;
        }
    }
    Ok(MixingProfile {
        gamma: p.gamma,
        m_bins: m,
        lags: (0..=k_max).collect(),
        beta_values,
        note: "theta(k) <= beta(k); beta estimated on the Ulam chain conditioning on the bin of X_0".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn beta_zero_is_about_three_quarters() {
        let prof = beta_profile(GammaParam::new(0.75).unwrap(), 256, 4).unwrap();
        let b0 = prof.beta_values[0];
        // a bin of mass p_i contributes max(F(a_i), 1 - F(b_i)), whose average is 3/4 + O(max p_i)
        assert!((b0 - 0.75).abs() < 0.02, "{b0}");
        assert!(prof.is_non_increasing(0.01));
    }

    #[test]
    fn masses_must_match() {
        let p = build_ulam_matrix(GammaParam::new(0.6).unwrap(), 64).unwrap();
        assert!(beta_profile_from(&p, &[0.5, 0.5], 2).is_err());
    }

    #[test]
    fn decays_toward_zero() {
        let prof = beta_profile(GammaParam::new(0.6).unwrap(), 512, 64).unwrap();
        assert!(prof.beta_values[64] < 0.2 * prof.beta_values[0]);
        assert!(prof.beta_values.iter().all(|b| (0.0..=1.0).contains(b)));
    }
}
