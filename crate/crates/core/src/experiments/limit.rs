use serde::{Deserialize, Serialize};

use super::stats::ks_two_sample;
use super::{ExperimentSummary, McSample};
use crate::density::{estimate_density, PiecewiseDensity, DEFAULT_BINS};
use crate::empirical::{raw_statistics, NormalizationRule, StatKind};
use crate::error::{Error, Result};
use crate::map::GammaParam;
use crate::orbit::{ForwardSampler, DEFAULT_BURN_IN};
use crate::par;
use crate::stable::reference_sample;

const MIN_REPLICATES: usize = 100;

/// `R` normalized values of `stat`, one per forward orbit of length `n`.
pub fn monte_carlo_limit(gamma: GammaParam, n: usize, replicates: usize, stat: StatKind, seed: u64) -> Result<McSample> {
    let d = estimate_density(gamma, DEFAULT_BINS)?;
    monte_carlo_limit_with(&d, n, replicates, stat, seed, DEFAULT_BURN_IN)
}

pub fn monte_carlo_limit_with(
    d: &PiecewiseDensity,
    n: usize,
    replicates: usize,
    stat: StatKind,
    seed: u64,
    burn_in: u64,
) -> Result<McSample> {
    let [l2, w1, cvm] = monte_carlo_all(d, n, replicates, seed, burn_in)?;
    Ok(match stat {
        StatKind::L2 => l2,
        StatKind::W1 => w1,
        StatKind::Cvm => cvm,
    })
}

/// All three statistics evaluated on the same orbits, in `StatKind::ALL` order.
pub fn monte_carlo_all(
    d: &PiecewiseDensity,
    n: usize,
    replicates: usize,
    seed: u64,
    burn_in: u64,
) -> Result<[McSample; 3]> {
    if replicates < MIN_REPLICATES {
        return Err(Error::invalid(format!("need at least {MIN_REPLICATES} replicates, got {replicates}")));
    }
    let rule = NormalizationRule::new(d.gamma)?;
    if rule.gamma.is_boundary() && n < 3 {
        return Err(Error::invalid("the boundary normalization needs n ≥ 3"));
    }
    let raw = par::try_map_range(0..replicates, |r| {
        let mut sampler = ForwardSampler::new(d.gamma, burn_in, seed, r as u64)?;
        let mut values = vec![0.0; n];
        sampler.fill(&mut values)?;
        raw_statistics(&values, d)
    })?;
    let build = |k: usize, stat: StatKind| {
        let raw: Vec<f64> = raw.iter().map(|r| r[k]).collect();
        let scale = rule.scale(n, stat);
        McSample {
            gamma: d.gamma,
            n,
            stat,
            seed,
            streams: (0..replicates as u64).collect(),
            values: raw.iter().map(|v| v * scale).collect(),
            raw,
            normalization: rule.describe(),
        }
    };
    Ok([build(0, StatKind::L2), build(1, StatKind::W1), build(2, StatKind::Cvm)])
}

/// KS distance of one statistic to its limit law at each orbit length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitComparison {
    pub gamma: GammaParam,
    pub stat: StatKind,
    pub lengths: Vec<usize>,
    pub ks: Vec<f64>,
    pub medians: Vec<f64>,
    pub reference_median: f64,
    /// Replicates where the W1 value exceeded the L2 value.
    pub w1_above_l2: usize,
}

impl LimitComparison {
    /// KS at the largest length is strictly below KS at the smallest.
    pub fn improved(&self) -> bool {
        match (self.ks.first(), self.ks.last()) {
            (Some(a), Some(b)) if self.ks.len() > 1 => b < a,
            _ => false,
        }
    }

    pub fn final_ks(&self) -> f64 {
        self.ks.last().copied().unwrap_or(f64::NAN)
    }

    /// Runs each length in `lengths` with shared seeds and compares every
    /// statistic to a reference sample of size `reference_size`.
    pub fn run(
        d: &PiecewiseDensity,
        lengths: &[usize],
        replicates: usize,
        reference_size: usize,
        seed: u64,
    ) -> Result<(Vec<LimitComparison>, Vec<[McSample; 3]>)> {
        let batches = lengths
            .iter()
            .map(|&n| monte_carlo_all(d, n, replicates, seed, DEFAULT_BURN_IN))
            .collect::<Result<Vec<_>>>()?;
        let mut out = Vec::with_capacity(3);
        for (k, stat) in StatKind::ALL.into_iter().enumerate() {
            let reference = reference_sample(d.gamma, d, stat, seed, reference_size)?;
            let mut ks = Vec::new();
            let mut medians = Vec::new();
            for b in &batches {
                ks.push(ks_two_sample(&b[k].values, &reference)?);
                medians.push(b[k].median());
            }
            let w1_above_l2 = batches
                .iter()
                .map(|b| b[0].raw.iter().zip(&b[1].raw).filter(|(l2, w1)| **w1 > **l2 + 1e-12).count())
                .sum();
            out.push(LimitComparison {
                gamma: d.gamma,
                stat,
                lengths: lengths.to_vec(),
                ks,
                medians,
                reference_median: super::stats::median(&reference),
                w1_above_l2,
            });
        }
        Ok((out, batches))
    }

    pub fn record(&self, s: &mut ExperimentSummary, ks_gate: f64) {
        let name = self.stat.name();
        s.metric(&format!("{name}_ks"), &self.ks)
            .metric(&format!("{name}_median"), &self.medians)
            .metric(&format!("{name}_reference_median"), self.reference_median)
            .flag(&format!("{name}_ks_below_gate"), self.final_ks() <= ks_gate)
            .flag(&format!("{name}_ks_improves"), self.improved())
            .flag(&format!("{name}_w1_le_l2"), self.w1_above_l2 == 0);
    }
}
