use crate::density::PiecewiseDensity;
use crate::error::{Error, Result};
use crate::map::GammaParam;
use crate::orbit::Orbit;

/// Orbit values closer than this to a density knot share its breakpoint.
pub const TIE_TOL: f64 = 1e-15;
pub const QUADRATURE_POINTS: usize = 4096;

/// `G_n(t) = F_n(t) - F(t)` as an exact piecewise-linear function.
///
/// On `[knots[j], knots[j+1])` the empirical CDF is the constant
/// `step[j]` and the reference CDF is linear from `cdf[j]` to `cdf[j+1]`.
#[derive(Debug, Clone)]
pub struct EmpiricalProcessFn {
    pub n: usize,
    pub gamma: GammaParam,
    knots: Vec<f64>,
    step: Vec<f64>,
    cdf: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct L2Norm {
    pub exact: f64,
    pub quadrature: f64,
}

/// One linear piece: its length and the values of `G_n` at both ends
/// (right limit at the start, left limit at the end).
#[derive(Debug, Clone, Copy)]
pub struct Piece {
    pub len: f64,
    pub start: f64,
    pub end: f64,
}

impl Piece {
    #[inline]
    fn square_integral(self) -> f64 {
        let (a, b) = (self.start, self.end);
        self.len * (a * a + a * b + b * b) / 3.0
    }

    #[inline]
    fn abs_integral(self) -> f64 {
        let (a, b) = (self.start, self.end);
        if (a >= 0.0) == (b >= 0.0) || a == 0.0 || b == 0.0 {
            0.5 * self.len * (a.abs() + b.abs())
        } else {
            0.5 * self.len * (a * a + b * b) / (a.abs() + b.abs())
        }
    }
}

impl EmpiricalProcessFn {
    /// `sorted` must be ascending values in `[0, 1]`; the reference CDF is
    /// given by its values at increasing knots spanning `[0, 1]`.
    pub fn from_sorted(gamma: GammaParam, sorted: &[f64], ref_knots: &[f64], ref_cdf: &[f64]) -> Result<Self> {
        let n = sorted.len();
        let r = ref_knots.len();
        if r < 2 || ref_cdf.len() != r || ref_knots[0] != 0.0 || ref_knots[r - 1] != 1.0 {
            return Err(Error::invalid("reference knots must span [0, 1]"));
        }
        if n == 0 {
            return Err(Error::invalid("empirical process of an empty sample"));
        }
        if sorted[0] < 0.0 || sorted[n - 1] > 1.0 || sorted[0].is_nan() {
            return Err(Error::invalid("sample values must lie in [0, 1]"));
        }
        let inv_n = 1.0 / n as f64;
        let mut knots = Vec::with_capacity(n + ref_knots.len());
        let mut counts: Vec<usize> = Vec::with_capacity(n + ref_knots.len());
        let mut cdf = Vec::with_capacity(n + ref_knots.len());

        let (mut i, mut j) = (0usize, 0usize);
        // number of sample values ≤ the current knot
        let mut seen = 0usize;
        let mut last_is_ref = false;
        while i < n || j < r {
            let take_ref = j < r && (i >= n || ref_knots[j] <= sorted[i]);
            let (t, f) = if take_ref {
                j += 1;
                (ref_knots[j - 1], ref_cdf[j - 1])
            } else {
                let t = sorted[i];
                i += 1;
                seen += 1;
                if j == r {
                    // tied with the final knot at 1
                    (t, ref_cdf[r - 1])
                } else {
                    // j ≥ 1 here: the first reference knot is 0 and wins ties
                    let (a, b) = (ref_knots[j - 1], ref_knots[j]);
                    let (fa, fb) = (ref_cdf[j - 1], ref_cdf[j]);
                    let f = (fa + (fb - fa) * ((t - a) / (b - a))).clamp(fa.min(fb), fa.max(fb));
                    (t, f)
                }
            };
            let tied = matches!(knots.last(), Some(&last) if t - last <= TIE_TOL) && !(take_ref && last_is_ref);
            if tied {
                // a reference knot keeps its exact position
                let k = knots.len() - 1;
                if take_ref {
                    knots[k] = t;
                    cdf[k] = f;
                    last_is_ref = true;
                }
                counts[k] = seen;
            } else {
                knots.push(t);
                cdf.push(f);
                counts.push(seen);
                last_is_ref = take_ref;
            }
        }
        let step = counts.iter().map(|&c| c as f64 * inv_n).collect();
        Ok(EmpiricalProcessFn {
            n,
            gamma,
            knots,
            step,
            cdf,
        })
    }

    /// `G_n` for an arbitrary sample against the CDF of `d`.
    pub fn from_values(values: &[f64], d: &PiecewiseDensity) -> Result<Self> {
        let mut sorted = values.to_vec();
        sorted.sort_unstable_by(f64::total_cmp);
        Self::from_sorted(d.gamma, &sorted, &d.bin_edges, d.cdf_at_edges())
    }

    /// `F_n - U` for a sample against the uniform CDF `U(t) = t`.
    pub fn uniform_reference(gamma: GammaParam, sorted: &[f64]) -> Result<Self> {
        Self::from_sorted(gamma, sorted, &[0.0, 1.0], &[0.0, 1.0])
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn pieces(&self) -> impl Iterator<Item = Piece> + '_ {
        (0..self.knots.len() - 1).map(move |j| Piece {
            len: self.knots[j + 1] - self.knots[j],
            start: self.step[j] - self.cdf[j],
            end: self.step[j] - self.cdf[j + 1],
        })
    }

    /// `G_n(t)` with the right-continuous convention at jumps.
    pub fn eval(&self, t: f64) -> f64 {
        let k = self.knots.len();
        if t >= 1.0 {
            return self.step[k - 1] - self.cdf[k - 1];
        }
        if t < 0.0 {
            return 0.0;
        }
        let j = self.knots.partition_point(|&b| b <= t).clamp(1, k - 1) - 1;
        let (a, b) = (self.knots[j], self.knots[j + 1]);
        let f = self.cdf[j] + (self.cdf[j + 1] - self.cdf[j]) * ((t - a) / (b - a));
        self.step[j] - f
    }

    pub fn l2_norm_sq(&self) -> f64 {
        self.pieces().map(Piece::square_integral).sum()
    }

    pub fn l2_norm(&self) -> L2Norm {
        L2Norm {
            exact: self.l2_norm_sq().sqrt(),
            quadrature: self.midpoint_rule(|g| g * g).sqrt(),
        }
    }

    /// `∫|G_n|`, the Wasserstein distance between `F_n` and `F`.
    pub fn wasserstein1(&self) -> f64 {
        self.pieces().map(Piece::abs_integral).sum()
    }

    pub fn wasserstein1_quadrature(&self) -> f64 {
        self.midpoint_rule(f64::abs)
    }

    pub fn sup_norm(&self) -> f64 {
        self.pieces().fold(0.0, |m, p| m.max(p.start.abs()).max(p.end.abs()))
    }

    fn midpoint_rule(&self, f: impl Fn(f64) -> f64) -> f64 {
        let h = 1.0 / QUADRATURE_POINTS as f64;
        (0..QUADRATURE_POINTS).map(|k| f(self.eval((k as f64 + 0.5) * h))).sum::<f64>() * h
    }
}

pub fn empirical_process(orbit: &Orbit, d: &PiecewiseDensity) -> Result<EmpiricalProcessFn> {
    if orbit.gamma != d.gamma {
        return Err(Error::GammaMismatch {
            left: orbit.gamma.get(),
            right: d.gamma.get(),
        });
    }
    EmpiricalProcessFn::from_values(&orbit.values, d)
}

fn check_hypothesis(sorted: &[f64], hyp: &PiecewiseDensity) -> Result<()> {
    for &x in sorted {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::invalid("sample values must lie in [0, 1]"));
        }
        let i = hyp.bin_of(x);
        if hyp.mass(i) <= 0.0 {
            return Err(Error::invalid(format!(
                "hypothesized CDF is flat on [{}, {}] which contains a sample value",
                hyp.bin_edges[i],
                hyp.bin_edges[i + 1]
            )));
        }
    }
    Ok(())
}

/// `Ψ_n = ∫ (F_n - G)^2 dG` through the change of variables `u = G(x)`: the
/// squared `L²` norm of the uniform-reference process of `G(X_i)`.
pub fn cvm_from_sorted(sorted: &[f64], hypothesized: &PiecewiseDensity) -> Result<f64> {
    check_hypothesis(sorted, hypothesized)?;
    // G is non-decreasing, so the transformed sample stays sorted
    let u: Vec<f64> = sorted.iter().map(|&x| hypothesized.cdf_unchecked(x)).collect();
    Ok(EmpiricalProcessFn::uniform_reference(hypothesized.gamma, &u)?.l2_norm_sq())
}

pub fn cvm_statistic(orbit: &Orbit, d: &PiecewiseDensity, hypothesized: &PiecewiseDensity) -> Result<f64> {
    for other in [d, hypothesized] {
        if orbit.gamma != other.gamma {
            return Err(Error::GammaMismatch {
                left: orbit.gamma.get(),
                right: other.gamma.get(),
            });
        }
    }
    let mut sorted = orbit.values.clone();
    sorted.sort_unstable_by(f64::total_cmp);
    cvm_from_sorted(&sorted, hypothesized)
}

/// `Ψ_n` integrated directly against `dG = g(t) dt`, bin by bin. Serves as
/// an independent check of [`cvm_statistic`].
pub fn cvm_statistic_direct(values: &[f64], hypothesized: &PiecewiseDensity) -> Result<f64> {
    let ep = EmpiricalProcessFn::from_values(values, hypothesized)?;
    let mut acc = 0.0;
    for (j, p) in ep.pieces().enumerate() {
        if p.len <= 0.0 {
            continue;
        }
        let mid = 0.5 * (ep.knots[j] + ep.knots[j + 1]);
        acc += hypothesized.h_values[hypothesized.bin_of(mid)] * p.square_integral();
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn g(v: f64) -> GammaParam {
        GammaParam::new(v).unwrap()
    }

    fn identity() -> PiecewiseDensity {
        PiecewiseDensity::identity(g(0.75))
    }

    #[test]
    fn single_point_process() {
        let ep = EmpiricalProcessFn::from_values(&[0.3], &identity()).unwrap();
        for t in [0.0, 0.1, 0.299, 0.3, 0.5, 0.99, 1.0] {
            let expect = if t >= 0.3 { 1.0 } else { 0.0 } - t;
            assert_abs_diff_eq!(ep.eval(t), expect, epsilon = 1e-15);
        }
    }

    #[test]
    fn single_point_closed_forms() {
        let d = identity();
        let ep = EmpiricalProcessFn::from_values(&[0.5], &d).unwrap();
        assert_abs_diff_eq!(ep.l2_norm().exact, 0.288_675_134_594_812_88, epsilon = 1e-15);
        assert_abs_diff_eq!(ep.wasserstein1(), 0.25, epsilon = 1e-15);
        for x in [0.0, 1.0] {
            let ep = EmpiricalProcessFn::from_values(&[x], &d).unwrap();
            assert_abs_diff_eq!(ep.wasserstein1(), 0.5, epsilon = 1e-15);
        }
        for x in [0.1, 0.5, 0.8] {
            let psi = cvm_from_sorted(&[x], &d).unwrap();
            assert_abs_diff_eq!(psi, x.powi(3) / 3.0 + (1.0 - x).powi(3) / 3.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn zero_process() {
        // a point mass at 0 observed at 0
        let ep = EmpiricalProcessFn::from_sorted(g(0.5), &[0.0], &[0.0, 1.0], &[1.0, 1.0]).unwrap();
        assert_eq!(ep.l2_norm_sq(), 0.0);
        assert_eq!(ep.wasserstein1(), 0.0);
    }

    #[test]
    fn stratified_sample_is_close() {
        let n = 1000;
        let edges: Vec<f64> = (0..=32).map(|i| (i as f64 / 32.0).powi(3)).collect();
        let masses: Vec<f64> = (0..32).map(|i| 1.0 + i as f64).collect();
        let d = PiecewiseDensity::from_masses(g(0.75), edges, &masses, crate::density::DensitySource::Ulam).unwrap();
        let values: Vec<f64> = (1..=n).map(|i| d.quantile((i as f64 - 0.5) / n as f64).unwrap()).collect();
        let ep = EmpiricalProcessFn::from_values(&values, &d).unwrap();
        let bound = 0.5 / n as f64 + 1e-12;
        assert!(ep.sup_norm() <= bound);
        assert!(ep.wasserstein1() <= bound);
        let mut sorted = values.clone();
        sorted.sort_by(f64::total_cmp);
        let psi = cvm_from_sorted(&sorted, &d).unwrap();
        assert!(psi <= (0.5 / n as f64).powi(2) + 1e-12, "psi = {psi}");
    }

    #[test]
    fn vanishes_at_one() {
        let d = identity();
        for vals in [vec![1.0], vec![0.2, 0.2, 1.0], vec![0.0, 0.5]] {
            let ep = EmpiricalProcessFn::from_values(&vals, &d).unwrap();
            assert_eq!(ep.eval(1.0), 0.0);
        }
    }

    #[test]
    fn ties_with_knots_are_merged() {
        let edges = vec![0.0, 0.25, 0.5, 1.0];
        let d = PiecewiseDensity::from_masses(g(0.5), edges, &[1.0, 1.0, 2.0], crate::density::DensitySource::Ulam)
            .unwrap();
        let ep = EmpiricalProcessFn::from_values(&[0.25, 0.25 + 1e-16, 0.5, 0.5], &d).unwrap();
        assert_eq!(ep.knots(), &[0.0, 0.25, 0.5, 1.0]);
        assert_abs_diff_eq!(ep.eval(0.25), 0.5 - 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(ep.eval(0.5), 1.0 - 0.5, epsilon = 1e-15);
    }

    #[test]
    fn cvm_matches_classical_formula() {
        // n ω² = 1/(12n) + Σ (u_(i) - (2i-1)/(2n))²
        let u = [0.05, 0.13, 0.4, 0.41, 0.77, 0.9];
        let n = u.len() as f64;
        let classical = (1.0 / (12.0 * n)
            + u.iter().enumerate().map(|(i, &x)| (x - (2.0 * i as f64 + 1.0) / (2.0 * n)).powi(2)).sum::<f64>())
            / n;
        assert_abs_diff_eq!(cvm_from_sorted(&u, &identity()).unwrap(), classical, epsilon = 1e-15);
    }

    #[test]
    fn cvm_rejects_flat_hypothesis() {
        let edges = vec![0.0, 0.5, 1.0];
        let d = PiecewiseDensity::from_masses(g(0.5), edges, &[1.0, 0.0], crate::density::DensitySource::Ulam)
            .unwrap();
        assert!(cvm_from_sorted(&[0.7], &d).is_err());
        assert!(cvm_from_sorted(&[0.2], &d).is_ok());
    }

    #[test]
    fn gamma_mismatch_is_rejected() {
        let orbit = crate::orbit::generate_orbit(g(0.6), 10, 0, 1).unwrap();
        assert!(matches!(
            empirical_process(&orbit, &identity()),
            Err(Error::GammaMismatch { .. })
        ));
    }

    fn ramp_density() -> PiecewiseDensity {
        let edges: Vec<f64> = (0..=64).map(|i| i as f64 / 64.0).collect();
        let masses: Vec<f64> = (0..64).map(|i| 2.0 - i as f64 / 64.0).collect();
        PiecewiseDensity::from_masses(g(0.75), edges, &masses, crate::density::DensitySource::Ulam).unwrap()
    }

    proptest! {
        #[test]
        fn norm_ordering(values in proptest::collection::vec(0.0f64..=1.0, 1..200)) {
            let ep = EmpiricalProcessFn::from_values(&values, &ramp_density()).unwrap();
            let l2 = ep.l2_norm().exact;
            let w1 = ep.wasserstein1();
            let sup = ep.sup_norm();
            prop_assert!(w1 <= l2 + 1e-12);
            prop_assert!(l2 <= sup + 1e-12);
            prop_assert!(sup <= 1.0 + 1e-12);
        }

        #[test]
        fn exact_matches_quadrature(values in proptest::collection::vec(0.0f64..=1.0, 50..400)) {
            let ep = EmpiricalProcessFn::from_values(&values, &ramp_density()).unwrap();
            let l2 = ep.l2_norm();
            prop_assert!((l2.exact - l2.quadrature).abs() <= 1e-3);
            prop_assert!((ep.wasserstein1() - ep.wasserstein1_quadrature()).abs() <= 1e-3);
        }

        #[test]
        fn cvm_two_ways(values in proptest::collection::vec(0.0f64..=1.0, 1..300)) {
            let d = ramp_density();
            let mut sorted = values.clone();
            sorted.sort_by(f64::total_cmp);
            let a = cvm_from_sorted(&sorted, &d).unwrap();
            let b = cvm_statistic_direct(&values, &d).unwrap();
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }
}
