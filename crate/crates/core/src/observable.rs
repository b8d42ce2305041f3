//! Monotone observables `g : [0, 1] -> [0, 1]` composed with the dynamics.

use serde::{Deserialize, Serialize};

use crate::density::PiecewiseDensity;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObservableKind {
    Identity,
    CdfOfNu,
    UserPiecewiseMonotone,
}

/// A strictly monotone piecewise-linear function on `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableG {
    pub kind: ObservableKind,
    breakpoints: Vec<f64>,
    values: Vec<f64>,
    pub holder_exponent: f64,
}

impl ObservableG {
    pub fn identity() -> Self {
        ObservableG {
            kind: ObservableKind::Identity,
            breakpoints: vec![0.0, 1.0],
            values: vec![0.0, 1.0],
            holder_exponent: 1.0,
        }
    }

    /// `g = F`, the CDF of the invariant law; `g(X)` is then uniform.
    pub fn cdf_of(d: &PiecewiseDensity) -> Result<Self> {
        let mut g = Self::piecewise(d.bin_edges.clone(), d.cdf_at_edges().to_vec(), 1.0 - d.gamma.get())?;
        g.kind = ObservableKind::CdfOfNu;
        Ok(g)
    }

    pub fn piecewise(breakpoints: Vec<f64>, values: Vec<f64>, holder_exponent: f64) -> Result<Self> {
        if breakpoints.len() < 2 || breakpoints.len() != values.len() {
            return Err(Error::invalid("observable needs matching breakpoints and values (at least 2)"));
        }
        if breakpoints[0] != 0.0 || *breakpoints.last().unwrap() != 1.0 {
            return Err(Error::invalid("observable breakpoints must span [0, 1]"));
        }
        if breakpoints.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("observable breakpoints must be strictly increasing"));
        }
        if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::invalid("observable values must lie in [0, 1]"));
        }
        let up = values.windows(2).all(|w| w[1] > w[0]);
        let down = values.windows(2).all(|w| w[1] < w[0]);
        if !up && !down {
            return Err(Error::invalid("observable must be strictly monotone"));
        }
        if !(holder_exponent > 0.0 && holder_exponent <= 1.0) {
            return Err(Error::invalid("holder exponent must lie in (0, 1]"));
        }
        Ok(ObservableG {
            kind: ObservableKind::UserPiecewiseMonotone,
            breakpoints,
            values,
            holder_exponent,
        })
    }

    /// Samples `f` at `knots` equally spaced points.
    pub fn from_fn(f: impl Fn(f64) -> f64, knots: usize, holder_exponent: f64) -> Result<Self> {
        let k = knots.max(2);
        let bp: Vec<f64> = (0..k).map(|i| i as f64 / (k - 1) as f64).collect();
        let vals = bp.iter().map(|&x| f(x)).collect();
        Self::piecewise(bp, vals, holder_exponent)
    }

    pub fn is_identity(&self) -> bool {
        self.kind == ObservableKind::Identity
    }

    pub fn is_increasing(&self) -> bool {
        self.values[self.values.len() - 1] > self.values[0]
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        if self.is_identity() {
            return x;
        }
        interp(&self.breakpoints, &self.values, x)
    }

    /// The `x` with `g(x) = t`, clamped to the end of the range.
    pub fn inverse(&self, t: f64) -> f64 {
        if self.is_identity() {
            return t.clamp(0.0, 1.0);
        }
        if self.is_increasing() {
            interp(&self.values, &self.breakpoints, t)
        } else {
            let v: Vec<f64> = self.values.iter().rev().copied().collect();
            let b: Vec<f64> = self.breakpoints.iter().rev().copied().collect();
            interp(&v, &b, t)
        }
    }
}

/// Linear interpolation through increasing `xs`, constant beyond the ends.
fn interp(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[n - 1] {
        return ys[n - 1];
    }
    let k = xs.partition_point(|&v| v <= x).clamp(1, n - 1);
    let (x0, x1) = (xs[k - 1], xs[k]);
    ys[k - 1] + (ys[k] - ys[k - 1]) * ((x - x0) / (x1 - x0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::DensitySource;
    use crate::map::GammaParam;
    use approx::assert_abs_diff_eq;

    fn skewed() -> PiecewiseDensity {
        let edges: Vec<f64> = (0..=64).map(|i| (i as f64 / 64.0).powi(2)).collect();
        let masses: Vec<f64> = (0..64).map(|i| 1.0 / (1.0 + i as f64)).collect();
        PiecewiseDensity::from_masses(GammaParam::new(0.75).unwrap(), edges, &masses, DensitySource::Ulam).unwrap()
    }

    #[test]
    fn rejects_non_monotone() {
        assert!(ObservableG::piecewise(vec![0.0, 0.5, 1.0], vec![0.0, 0.7, 0.2], 1.0).is_err());
        assert!(ObservableG::piecewise(vec![0.0, 0.5, 1.0], vec![0.0, 0.5, 0.5], 1.0).is_err());
        assert!(ObservableG::piecewise(vec![0.0, 1.0], vec![0.0, 1.5], 1.0).is_err());
        assert!(ObservableG::piecewise(vec![0.0, 1.0], vec![1.0, 0.0], 1.0).is_ok());
    }

    #[test]
    fn identity_pushforward_is_unchanged() {
        let d = skewed();
        assert_eq!(d.pushforward(&ObservableG::identity()).unwrap(), d);
    }

    #[test]
    fn cdf_pushforward_is_uniform() {
        let d = skewed();
        let u = d.pushforward(&ObservableG::cdf_of(&d).unwrap()).unwrap();
        for i in 0..=1000 {
            let t = i as f64 / 1000.0;
            assert_abs_diff_eq!(u.cdf(t).unwrap(), t, epsilon = 1e-8);
        }
    }

    #[test]
    fn square_pushforward_changes_variables() {
        let d = skewed();
        let g = ObservableG::from_fn(|x| x * x, 1025, 1.0).unwrap();
        let p = d.pushforward(&g).unwrap();
        assert_abs_diff_eq!(p.cdf(0.25).unwrap(), d.cdf(0.5).unwrap(), epsilon = 1e-12);
    }

    #[test]
    fn decreasing_pushforward() {
        let d = skewed();
        let g = ObservableG::piecewise(vec![0.0, 1.0], vec![1.0, 0.0], 1.0).unwrap();
        let p = d.pushforward(&g).unwrap();
        for t in [0.1, 0.3, 0.8] {
            assert_abs_diff_eq!(p.cdf(t).unwrap(), 1.0 - d.cdf(1.0 - t).unwrap(), epsilon = 1e-12);
        }
    }

    #[test]
    fn inverse_round_trip() {
        let g = ObservableG::from_fn(|x| x.sqrt(), 257, 0.5).unwrap();
        for i in 0..=100 {
            let x = i as f64 / 100.0;
            assert_abs_diff_eq!(g.inverse(g.eval(x)), x, epsilon = 1e-12);
        }
    }
}
