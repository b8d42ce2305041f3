//! Monte Carlo harness: limit laws, covariance and mixing decay, the maximal
//! inequality, almost-sure rates, and time reversal.

mod checks;
mod covariance;
mod limit;
mod maximal;
mod mixing;
mod reversal;
pub mod stats;
mod trend;

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

pub use checks::{consistency_check, fourier_check};
pub use covariance::{covariance_decay, default_lags, CovarianceFit, LagEstimate};
pub use limit::{monte_carlo_all, monte_carlo_limit, monte_carlo_limit_with, LimitComparison};
pub use maximal::{
    maximal_inequality_audit, maximal_inequality_audit_with, maximal_rhs, MaximalAudit, MaximalRow, AUDIT_BETA_BINS,
};
pub use mixing::{beta_profile, beta_profile_from, MixingProfile};
pub use reversal::{reversal_check, QuantileCheck, ReversalParams, ReversalReport};
pub use stats::ks_two_sample;
pub use trend::{almost_sure_trend, almost_sure_trend_with, trend_summary, TrendPoint};

use crate::empirical::StatKind;
use crate::error::Result;
use crate::map::GammaParam;

/// Normalized statistic values over replicates. Replicate `r` used the
/// random stream `(seed, r)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McSample {
    pub gamma: GammaParam,
    pub n: usize,
    pub stat: StatKind,
    pub seed: u64,
    pub streams: Vec<u64>,
    pub raw: Vec<f64>,
    pub values: Vec<f64>,
    pub normalization: String,
}

impl McSample {
    pub fn replicates(&self) -> usize {
        self.values.len()
    }

    pub fn median(&self) -> f64 {
        stats::median(&self.values)
    }
}

/// Writes batches in the `replicate,seed,n,gamma,stat_name,raw,normalized`
/// layout. Reference samples carry the `_ref` suffix and no raw value.
pub fn write_batch_csv<W: Write>(mut w: W, samples: &[&McSample]) -> Result<()> {
    w.write_all(b"replicate,seed,n,gamma,stat_name,raw,normalized\n")?;
    for s in samples {
        for (r, (raw, v)) in s.raw.iter().zip(&s.values).enumerate() {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                s.streams[r],
                s.seed,
                s.n,
                s.gamma,
                s.stat,
                crate::fmt17(*raw),
                crate::fmt17(*v)
            )?;
        }
    }
    Ok(())
}

pub fn write_reference_csv<W: Write>(mut w: W, gamma: GammaParam, stat: StatKind, seed: u64, values: &[f64]) -> Result<()> {
    w.write_all(b"replicate,seed,n,gamma,stat_name,raw,normalized\n")?;
    for (r, v) in values.iter().enumerate() {
        writeln!(w, "{r},{seed},,{gamma},{stat}_ref,,{}", crate::fmt17(*v))?;
    }
    Ok(())
}

/// JSON summary written by every experiment.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ExperimentSummary {
    pub experiment: String,
    pub params: serde_json::Value,
    pub seed: u64,
    pub metrics: BTreeMap<String, serde_json::Value>,
    pub flags: BTreeMap<String, bool>,
}

impl ExperimentSummary {
    pub fn new(experiment: &str, params: serde_json::Value, seed: u64) -> Self {
        ExperimentSummary {
            experiment: experiment.to_string(),
            params,
            seed,
            metrics: BTreeMap::new(),
            flags: BTreeMap::new(),
        }
    }

    pub fn metric(&mut self, key: &str, value: impl Serialize) -> &mut Self {
        self.metrics
            .insert(key.to_string(), serde_json::to_value(value).unwrap_or(serde_json::Value::Null));
        self
    }

    pub fn flag(&mut self, key: &str, ok: bool) -> &mut Self {
        self.flags.insert(key.to_string(), ok);
        self
    }

    pub fn passed(&self) -> bool {
        self.flags.values().all(|&v| v)
    }

    pub fn failing(&self) -> Vec<&str> {
        self.flags.iter().filter(|(_, &v)| !v).map(|(k, _)| k.as_str()).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        let mut v = serde_json::to_value(self)?;
        v["pass"] = serde_json::Value::Bool(self.passed());
        Ok(serde_json::to_string_pretty(&v)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_json_has_required_keys() {
        let mut s = ExperimentSummary::new("demo", serde_json::json!({"n": 3}), 7);
        s.metric("x", 1.5).flag("ok", true).flag("bad", false);
        assert!(!s.passed());
        assert_eq!(s.failing(), vec!["bad"]);
        let v: serde_json::Value = serde_json::from_str(&s.to_json().unwrap()).unwrap();
        for key in ["experiment", "params", "seed", "metrics", "flags", "pass"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(v["pass"], false);
    }

    #[test]
    fn batch_csv_layout() {
        let s = McSample {
            gamma: GammaParam::new(0.75).unwrap(),
            n: 10,
            stat: StatKind::W1,
            seed: 7,
            streams: vec![0, 1],
            raw: vec![0.1, 0.2],
            values: vec![1.0, 2.0],
            normalization: "n^(1-0.75)".into(),
        };
        let mut buf = Vec::new();
        write_batch_csv(&mut buf, &[&s]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "replicate,seed,n,gamma,stat_name,raw,normalized");
        assert_eq!(lines[1], "0,7,10,0.75,w1,1.0000000000000001e-1,1.0000000000000000e0");
        assert!(!text.contains('\r'));
    }
}
