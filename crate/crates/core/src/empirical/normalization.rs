use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::density::PiecewiseDensity;
use crate::empirical::process::{cvm_from_sorted, EmpiricalProcessFn};
use crate::error::{Error, Result};
use crate::map::GammaParam;
use crate::orbit::Orbit;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StatKind {
    L2,
    W1,
    Cvm,
}

impl StatKind {
    pub const ALL: [StatKind; 3] = [StatKind::L2, StatKind::W1, StatKind::Cvm];

    pub fn name(self) -> &'static str {
        match self {
            StatKind::L2 => "l2",
            StatKind::W1 => "w1",
            StatKind::Cvm => "cvm",
        }
    }

    /// Power of the rate applied to the raw statistic.
    pub fn rate_power(self) -> i32 {
        match self {
            StatKind::Cvm => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for StatKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StatKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "l2" => Ok(StatKind::L2),
            "w1" => Ok(StatKind::W1),
            "cvm" => Ok(StatKind::Cvm),
            _ => Err(Error::invalid(format!("unknown statistic `{s}` (expected l2, w1 or cvm)"))),
        }
    }
}

/// Scaling that makes `‖G_n‖` converge in law: `√(n / log n)` at `γ = 1/2`,
/// `n^(1-γ)` above.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizationRule {
    pub gamma: GammaParam,
}

impl NormalizationRule {
    pub fn new(gamma: GammaParam) -> Result<Self> {
        if !gamma.is_long_range() {
            return Err(Error::Domain {
                what: "gamma",
                value: gamma.get(),
                domain: "[1/2, 1)",
            });
        }
        Ok(NormalizationRule { gamma })
    }

    /// Requires `n ≥ 3` at `γ = 1/2`, where `log n` must exceed 1.
    pub fn rate(&self, n: usize) -> f64 {
        let nf = n as f64;
        if self.gamma.is_boundary() {
            (nf / nf.ln()).sqrt()
        } else {
            nf.powf(1.0 - self.gamma.get())
        }
    }

    /// `rate(n) / log(n + 1)^δ`, the scaling under which `‖G_n‖` tends to 0
    /// almost surely when `δ > γ`.
    pub fn as_rate(&self, n: usize, delta: f64) -> f64 {
        self.rate(n) / ((n as f64 + 1.0).ln()).powf(delta)
    }

    pub fn scale(&self, n: usize, stat: StatKind) -> f64 {
        self.rate(n).powi(stat.rate_power())
    }

    pub fn describe(&self) -> String {
        if self.gamma.is_boundary() {
            "sqrt(n/log(n))".into()
        } else {
            format!("n^(1-{})", self.gamma)
        }
    }
}

/// Raw values of all three statistics for one sample, sorting it once.
pub fn raw_statistics(values: &[f64], d: &PiecewiseDensity) -> Result<[f64; 3]> {
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let ep = EmpiricalProcessFn::from_sorted(d.gamma, &sorted, &d.bin_edges, d.cdf_at_edges())?;
    Ok([ep.l2_norm_sq().sqrt(), ep.wasserstein1(), cvm_from_sorted(&sorted, d)?])
}

pub fn raw_statistic(values: &[f64], d: &PiecewiseDensity, stat: StatKind) -> Result<f64> {
    match stat {
        StatKind::Cvm => {
            let mut sorted = values.to_vec();
            sorted.sort_unstable_by(f64::total_cmp);
            cvm_from_sorted(&sorted, d)
        }
        StatKind::L2 => Ok(EmpiricalProcessFn::from_values(values, d)?.l2_norm_sq().sqrt()),
        StatKind::W1 => Ok(EmpiricalProcessFn::from_values(values, d)?.wasserstein1()),
    }
}

pub fn normalized_statistic(orbit: &Orbit, d: &PiecewiseDensity, stat: StatKind) -> Result<f64> {
    if orbit.gamma != d.gamma {
        return Err(Error::GammaMismatch {
            left: orbit.gamma.get(),
            right: d.gamma.get(),
        });
    }
    let rule = NormalizationRule::new(orbit.gamma)?;
    let n = orbit.len();
    if rule.gamma.is_boundary() && n < 3 {
        return Err(Error::invalid("the boundary normalization needs n ≥ 3"));
    }
    Ok(raw_statistic(&orbit.values, d, stat)? * rule.scale(n, stat))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn rule(g: f64) -> NormalizationRule {
        NormalizationRule::new(GammaParam::new(g).unwrap()).unwrap()
    }

    #[test]
    fn rates() {
        assert_relative_eq!(rule(0.75).rate(10_000), 10.0, max_relative = 1e-14);
        let n = 4f64.exp().round() as usize;
        assert_relative_eq!(rule(0.5).rate(n), (n as f64).sqrt() / 2.0, max_relative = 1e-3);
    }

    #[test]
    fn short_range_is_rejected() {
        assert!(NormalizationRule::new(GammaParam::new(0.3).unwrap()).is_err());
        let orbit = crate::orbit::generate_orbit(GammaParam::new(0.3).unwrap(), 10, 0, 1).unwrap();
        let d = PiecewiseDensity::identity(orbit.gamma);
        assert!(normalized_statistic(&orbit, &d, StatKind::L2).is_err());
    }

    #[test]
    fn cvm_scaling_is_square() {
        for g in [0.5, 0.6, 0.75, 0.9] {
            let r = rule(g);
            for n in [3, 10, 1000, 123_456] {
                assert_relative_eq!(r.scale(n, StatKind::Cvm), r.scale(n, StatKind::L2).powi(2), max_relative = 1e-14);
                assert_eq!(r.scale(n, StatKind::W1), r.scale(n, StatKind::L2));
            }
        }
    }

    #[test]
    fn rate_is_non_decreasing() {
        for g in [0.5, 0.7] {
            let r = rule(g);
            for n in 3..5000 {
                assert!(r.rate(n + 1) >= r.rate(n));
            }
        }
    }

    #[test]
    fn stat_names_round_trip() {
        for s in StatKind::ALL {
            assert_eq!(s.name().parse::<StatKind>().unwrap(), s);
        }
        assert!("ks".parse::<StatKind>().is_err());
    }
}
