//! The intermittent map `T(x) = x + x(2x)^γ` on `[0, 1/2)`, `T(x) = 2x - 1`
//! on `[1/2, 1]`, and its two inverse branches.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default absolute tolerance for the left inverse branch.
pub const INVERSE_TOL: f64 = 1e-14;
const INVERSE_MAX_ITER: usize = 200;

/// Intermittency exponent, strictly inside `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct GammaParam(f64);

impl GammaParam {
    pub fn new(gamma: f64) -> Result<Self> {
        if gamma.is_finite() && gamma > 0.0 && gamma < 1.0 {
            Ok(GammaParam(gamma))
        } else {
            Err(Error::Domain {
                what: "gamma",
                value: gamma,
                domain: "(0, 1)",
            })
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }

    /// Stability index `1/γ` of the limit law.
    pub fn alpha(self) -> f64 {
        1.0 / self.0
    }

    /// `γ == 1/2`, the boundary (Gaussian) regime.
    pub fn is_boundary(self) -> bool {
        self.0 == 0.5
    }

    /// `γ ∈ [1/2, 1)`: the long-range dependent regime.
    pub fn is_long_range(self) -> bool {
        self.0 >= 0.5
    }
}

impl TryFrom<f64> for GammaParam {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        GammaParam::new(v)
    }
}

impl From<GammaParam> for f64 {
    fn from(g: GammaParam) -> f64 {
        g.0
    }
}

impl std::fmt::Display for GammaParam {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

fn check_unit(what: &'static str, x: f64) -> Result<()> {
    if x.is_finite() && (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::Domain {
            what,
            value: x,
            domain: "[0, 1]",
        })
    }
}

/// One step of the map without argument checks. `x` must lie in `[0, 1]`.
#[inline(always)]
pub fn step(x: f64, gamma: f64) -> f64 {
    if x < 0.5 {
        (x + x * (2.0 * x).powf(gamma)).min(1.0)
    } else {
        2.0 * x - 1.0
    }
}

pub fn apply_map(x: f64, gamma: GammaParam) -> Result<f64> {
    check_unit("x", x)?;
    Ok(step(x, gamma.get()))
}

/// `T'(x)`; the right branch has slope 2 and `x = 1/2` belongs to it.
#[inline]
pub fn derivative(x: f64, gamma: f64) -> f64 {
    if x < 0.5 {
        1.0 + (gamma + 1.0) * (2.0 * x).powf(gamma)
    } else {
        2.0
    }
}

/// `y - x` where `x` is the left-branch preimage of `y`.
///
/// Solving for the gap rather than for `x` keeps full relative precision when
/// `y` is deep in the laminar region, where `x` and `y` agree to far more
/// digits than a double carries.
pub fn left_preimage_gap(y: f64, gamma: GammaParam) -> Result<f64> {
    check_unit("y", y)?;
    let g = gamma.get();
    if y == 0.0 {
        return Ok(0.0);
    }
    // residual(d) = (y-d)(2(y-d))^γ - d is strictly decreasing on [0, y/2],
    // positive at 0 and non-positive at y/2.
    let residual = |d: f64| {
        let x = y - d;
        let p = (2.0 * x).powf(g);
        (x * p - d, -(1.0 + g) * p - 1.0)
    };
    let (mut lo, mut hi) = (0.0_f64, 0.5 * y);
    let p0 = (2.0 * y).powf(g);
    let mut d = (y * p0 / (1.0 + (1.0 + g) * p0)).clamp(lo, hi);
    for _ in 0..INVERSE_MAX_ITER {
        let (r, dr) = residual(d);
        if r == 0.0 {
            return Ok(d);
        }
        if r > 0.0 {
            lo = d;
        } else {
            hi = d;
        }
        let mut next = d - r / dr;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        let delta = (next - d).abs();
        d = next;
        if delta <= 4.0 * f64::EPSILON * d || hi - lo <= 4.0 * f64::EPSILON * hi {
            return Ok(d);
        }
    }
    Err(Error::NonConvergence {
        what: "left inverse branch",
        iterations: INVERSE_MAX_ITER,
    })
}

/// Both preimages of `y`: `(x_left ∈ [0, 1/2], x_right ∈ [1/2, 1])`.
pub fn inverse_branches(y: f64, gamma: GammaParam, tol: f64) -> Result<(f64, f64)> {
    if !(tol > 0.0) {
        return Err(Error::invalid(format!("tolerance must be positive, got {tol}")));
    }
    let gap = left_preimage_gap(y, gamma)?;
    let x_left = (y - gap).clamp(0.0, 0.5);
    let image = x_left + x_left * (2.0 * x_left).powf(gamma.get());
    if (image - y).abs() > 10.0 * tol.max(f64::EPSILON) {
        return Err(Error::NonConvergence {
            what: "left inverse branch",
            iterations: INVERSE_MAX_ITER,
        });
    }
    Ok((x_left, 0.5 * (y + 1.0)))
}
