//! Simulation and verification toolkit for the intermittent map
//! `T(x) = x + x(2x)^γ` on `[0, 1/2)`, `2x - 1` on `[1/2, 1]`.
//!
//! The crate computes the empirical process `G_n = F_n - F` of an orbit as an
//! element of `L²[0, 1]`, the Wasserstein distance and Cramér–von Mises
//! statistic built on it, the stable limit laws they converge to, and the
//! mixing quantities that control the convergence.

pub mod density;
pub mod empirical;
pub mod error;
pub mod experiments;
pub mod map;
pub mod observable;
pub mod orbit;
mod par;
pub mod rng;
pub mod stable;

pub use density::{estimate_density, PiecewiseDensity};
pub use empirical::{EmpiricalProcessFn, NormalizationRule, StatKind};
pub use error::{Error, Result};
pub use map::GammaParam;
pub use observable::ObservableG;
pub use orbit::{Direction, Orbit};
pub use stable::StableSpec;

/// A float with 17 significant digits, the precision used by every text
/// export.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}
