//! Browser bindings: orbit simulation, the invariant density, and the three
//! statistics of an orbit's empirical process.

use ilrd_core::empirical::{raw_statistics, NormalizationRule};
use ilrd_core::orbit::{generate_orbit, DEFAULT_BURN_IN};
use ilrd_core::{estimate_density, GammaParam, PiecewiseDensity, StatKind};
use wasm_bindgen::prelude::*;

fn js(e: ilrd_core::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// Orbit of length `n` after the default burn-in.
#[wasm_bindgen]
pub fn simulate_orbit(gamma: f64, n: usize, seed: u32) -> Result<Vec<f64>, JsError> {
    let g = GammaParam::new(gamma).map_err(js)?;
    Ok(generate_orbit(g, n, DEFAULT_BURN_IN, u64::from(seed)).map_err(js)?.values)
}

/// Ulam estimate of the invariant density.
#[wasm_bindgen]
pub struct Density {
    inner: PiecewiseDensity,
}

#[wasm_bindgen]
impl Density {
    pub fn edges(&self) -> Vec<f64> {
        self.inner.bin_edges.clone()
    }

    pub fn values(&self) -> Vec<f64> {
        self.inner.h_values.clone()
    }

    pub fn h_half(&self) -> f64 {
        self.inner.h_half
    }

    pub fn cdf(&self, x: f64) -> Result<f64, JsError> {
        self.inner.cdf(x).map_err(js)
    }
}

#[wasm_bindgen]
pub fn invariant_density(gamma: f64, bins: usize) -> Result<Density, JsError> {
    let g = GammaParam::new(gamma).map_err(js)?;
    Ok(Density {
        inner: estimate_density(g, bins).map_err(js)?,
    })
}

/// `[l2, w1, cvm]` of the orbit's empirical process, followed by the three
/// normalized values when `γ ≥ 1/2` (NaN otherwise).
#[wasm_bindgen]
pub fn empirical_statistics(orbit: &[f64], density: &Density) -> Result<Vec<f64>, JsError> {
    let d = &density.inner;
    let raw = raw_statistics(orbit, d).map_err(js)?;
    let mut out = raw.to_vec();
    match NormalizationRule::new(d.gamma) {
        Ok(rule) if !(rule.gamma.is_boundary() && orbit.len() < 3) => {
            out.extend(StatKind::ALL.iter().zip(raw).map(|(&s, v)| v * rule.scale(orbit.len(), s)));
        }
        _ => out.extend([f64::NAN; 3]),
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn statistics_from_simulated_orbit() {
        let orbit = simulate_orbit(0.75, 2000, 1).unwrap();
        let d = invariant_density(0.75, 1024).unwrap();
        let s = empirical_statistics(&orbit, &d).unwrap();
        assert_eq!(s.len(), 6);
        assert!(s[1] <= s[0] + 1e-12);
        assert!(s.iter().all(|v| v.is_finite() && *v >= 0.0));
        assert_eq!(d.edges().len(), d.values().len() + 1);
    }
}
