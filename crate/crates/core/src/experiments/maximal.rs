use serde::{Deserialize, Serialize};

use super::mixing::beta_profile;
use super::ExperimentSummary;
use crate::density::{estimate_density, PiecewiseDensity, DEFAULT_BINS};
use crate::empirical::max_partial_sum_norm;
use crate::error::{Error, Result};
use crate::map::GammaParam;
use crate::orbit::BackwardSampler;
use crate::par;

/// Bins of the Ulam chain used for β in the audit.
pub const AUDIT_BETA_BINS: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaximalRow {
    pub x: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaximalAudit {
    pub gamma: GammaParam,
    pub n: usize,
    pub q: usize,
    pub replicates: usize,
    pub rows: Vec<MaximalRow>,
    pub beta: Vec<f64>,
}

impl MaximalAudit {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.ok)
    }

    pub fn summary(&self, seed: u64) -> ExperimentSummary {
        let mut s = ExperimentSummary::new(
            "maxineq",
            serde_json::json!({
                "gamma": self.gamma,
                "n": self.n,
                "q": self.q,
                "replicates": self.replicates,
                "x": self.rows.iter().map(|r| r.x).collect::<Vec<_>>(),
            }),
            seed,
        );
        s.metric("rows", &self.rows)
            .metric("beta", &self.beta)
            .flag("lhs_le_rhs", self.passed())
            .flag(
                "lhs_non_increasing",
                self.rows.windows(2).all(|w| w[1].lhs <= w[0].lhs),
            );
        s
    }
}

/// `n β(q)/x 1{q<n} + (2n/x²) Σ_{k<q} β(k)` with `M = 1`.
pub fn maximal_rhs(n: usize, q: usize, x: f64, beta: &[f64]) -> Result<f64> {
    if q == 0 || q > n {
        return Err(Error::invalid(format!("q = {q} must lie in 1..={n}")));
    }
    if x < q as f64 {
        return Err(Error::Domain {
            what: "x",
            value: x,
            domain: "[q, ∞)",
        });
    }
    let need = if q < n { q + 1 } else { q };
    if beta.len() < need {
        return Err(Error::invalid(format!("need β(0..{need}), got {} values", beta.len())));
    }
    let nf = n as f64;
    let first = if q < n { nf * beta[q] / x } else { 0.0 };
    let tail: f64 = beta[..q].iter().sum();
    Ok(first + 2.0 * nf / (x * x) * tail)
}

/// Empirical `P(max_k ‖S_k‖ ≥ 4x)` over `R` reversed chains of length `n`
/// against the bound, with β estimated on the Ulam chain.
pub fn maximal_inequality_audit(
    gamma: GammaParam,
    n: usize,
    q: usize,
    xs: &[f64],
    replicates: usize,
    seed: u64,
) -> Result<MaximalAudit> {
    let d = estimate_density(gamma, DEFAULT_BINS)?;
    let beta = beta_profile(gamma, AUDIT_BETA_BINS, q)?.beta_values;
    maximal_inequality_audit_with(&d, &beta, n, q, xs, replicates, seed)
}

pub fn maximal_inequality_audit_with(
    d: &PiecewiseDensity,
    beta: &[f64],
    n: usize,
    q: usize,
    xs: &[f64],
    replicates: usize,
    seed: u64,
) -> Result<MaximalAudit> {
    if xs.is_empty() {
        return Err(Error::invalid("empty x grid"));
    }
    let rhs = xs
        .iter()
        .map(|&x| maximal_rhs(n, q, x, beta))
        .collect::<Result<Vec<_>>>()?;
    if replicates == 0 {
        return Err(Error::invalid("need at least one replicate"));
    }
    let maxima = par::try_map_range(0..replicates, |r| {
        let mut sampler = BackwardSampler::new(d.gamma, seed, r as u64, d)?;
        let mut values = vec![0.0; n];
        sampler.fill(&mut values)?;
        Ok::<_, Error>(max_partial_sum_norm(&values, d))
    })?;
    let rows = xs
        .iter()
        .zip(rhs)
        .map(|(&x, rhs)| {
            let hits = maxima.iter().filter(|&&m| m >= 4.0 * x).count();
            let lhs = hits as f64 / replicates as f64;
            MaximalRow {
                x,
                lhs,
                rhs,
                ok: lhs <= rhs,
            }
        })
        .collect();
    Ok(MaximalAudit {
        gamma: d.gamma,
        n,
        q,
        replicates,
        rows,
        beta: beta.to_vec(),
    })
}
