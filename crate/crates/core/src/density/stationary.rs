use crate::density::piecewise::{DensitySource, PiecewiseDensity};
use crate::density::ulam::{build_ulam_matrix, UlamMatrix};
use crate::error::{Error, Result};
use crate::map::GammaParam;

pub const DEFAULT_TOL: f64 = 1e-12;
pub const DEFAULT_MAX_ITER: usize = 100_000;
pub const DEFAULT_BINS: usize = 1 << 16;

#[derive(Debug, Clone)]
pub struct StationaryVector {
    /// Bin masses summing to one.
    pub p: Vec<f64>,
    pub iterations: usize,
    /// `‖pP − p‖₁` of the returned vector.
    pub residual: f64,
}

/// Masses of the bins left of 1/2 implied by the masses `right` of the bins in
/// `[1/2, 1]`, plus the mass flowing back into the right half. Left bins only
/// feed bins at or beyond themselves, so one forward sweep solves the left
/// block exactly.
fn sweep(p: &UlamMatrix, right: &[f64], left: &mut [f64], next_right: &mut [f64]) -> Result<()> {
    let half = p.half_index();
    left.iter_mut().for_each(|v| *v = 0.0);
    next_right.iter_mut().for_each(|v| *v = 0.0);
    for (k, &pi) in right.iter().enumerate() {
        let (cols, vals) = p.row(half + k);
        for (&j, &v) in cols.iter().zip(vals) {
            if j < half {
                left[j] += pi * v;
            } else {
                next_right[j - half] += pi * v;
            }
        }
    }
    for i in 0..half {
        let esc = p.escape[i];
        if !(esc > 0.0) {
            return Err(Error::invalid(format!("bin {i} never escapes")));
        }
        let pi = left[i] / esc;
        left[i] = pi;
        let (cols, vals) = p.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            if j == i {
                continue;
            }
            if j < half {
                left[j] += pi * v;
            } else {
                next_right[j - half] += pi * v;
            }
        }
    }
    Ok(())
}

/// Leading left fixed vector of `P`.
///
/// Power iteration runs on the chain induced on `[1/2, 1]`; excursions into
/// the laminar half are absorbed exactly by [`sweep`]. Iterating the full
/// matrix instead converges only polynomially because of the neutral fixed
/// point.
pub fn stationary_vector(p: &UlamMatrix, tol: f64, max_iter: usize) -> Result<StationaryVector> {
    let m = p.m_bins();
    let half = p.half_index();
    let nr = m - half;
    let mut right = vec![1.0 / nr as f64; nr];
    let mut next = vec![0.0; nr];
    let mut left = vec![0.0; half];
    let mut iterations = 0;
    loop {
        if iterations >= max_iter {
            return Err(Error::NonConvergence {
                what: "stationary vector",
                iterations,
            });
        }
        iterations += 1;
        sweep(p, &right, &mut left, &mut next)?;
        let s: f64 = next.iter().sum();
        let mut diff = 0.0;
        for (r, n) in right.iter_mut().zip(&next) {
            let v = n / s;
            diff += (v - *r).abs();
            *r = v;
        }
        if diff < tol {
            break;
        }
    }
    sweep(p, &right, &mut left, &mut next)?;
    let mut full: Vec<f64> = left.iter().chain(right.iter()).copied().collect();
    let total: f64 = full.iter().sum();
    full.iter_mut().for_each(|v| *v /= total);
    let residual = p.stationarity_residual(&full);
    Ok(StationaryVector {
        p: full,
        iterations,
        residual,
    })
}

pub fn stationary_density(p: &UlamMatrix, tol: f64, max_iter: usize) -> Result<PiecewiseDensity> {
    let sv = stationary_vector(p, tol, max_iter)?;
    Ok(PiecewiseDensity::from_masses(p.gamma, p.edges.clone(), &sv.p, DensitySource::Ulam)?
        .with_local_exponent(p.gamma.get()))
}

/// Ulam estimate of the invariant density with the default grid and solver
/// settings.
pub fn estimate_density(gamma: GammaParam, m_bins: usize) -> Result<PiecewiseDensity> {
    let p = build_ulam_matrix(gamma, m_bins)?;
    stationary_density(&p, DEFAULT_TOL, DEFAULT_MAX_ITER)
}
