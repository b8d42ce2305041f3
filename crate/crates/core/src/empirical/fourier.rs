//! Tails of the trigonometric expansion of `t ↦ 1{x ≤ t}` in `L²[0, 1]` on the
//! basis `1, √2 cos(2πk·), √2 sin(2πk·)`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// `a_k(x)^2 + b_k(x)^2 = 2 sin²(πkx) / (πk)²`.
#[inline]
pub fn coefficient_sq(x: f64, k: u64) -> f64 {
    let kf = k as f64;
    // sin² has period 1 in kx; reducing first keeps the argument small
    let s = (PI * (kf * x).fract()).sin();
    2.0 * s * s / (PI * PI * kf * kf)
}

/// `Σ_{k=m+1}^{k_max} (a_k(x)^2 + b_k(x)^2)`.
pub fn fourier_tail_norm_sq(x: f64, m: u64, k_max: u64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain {
            what: "x",
            value: x,
            domain: "[0, 1]",
        });
    }
    if m < 1 || k_max <= m {
        return Err(Error::invalid(format!("need k_max > m ≥ 1, got m = {m}, k_max = {k_max}")));
    }
    // smallest terms first
    Ok((m + 1..=k_max).rev().map(|k| coefficient_sq(x, k)).sum())
}

/// `2 / (π² m)`, the bound on every tail beyond `m`.
pub fn tail_bound(m: u64) -> f64 {
    2.0 / (PI * PI * m as f64)
}

/// `sup_x` of the tail norm over a uniform grid of `grid + 1` points.
pub fn sup_tail_norm(m: u64, k_max: u64, grid: usize) -> Result<f64> {
    let mut best = 0.0_f64;
    for i in 0..=grid {
        best = best.max(fourier_tail_norm_sq(i as f64 / grid as f64, m, k_max)?);
    }
    Ok(best.sqrt())
}

/// The same tail as [`fourier_tail_norm_sq`] obtained by quadrature of the
/// projection residual: `2 ∫_0^L (L - u) D(u) du` with `L = 1 - x` and the
/// band-limited kernel `D(u) = Σ_{k=m+1}^{k_max} 2 cos(2πku)`. Composite
/// Gauss–Legendre with `panels_per_period` panels per period of the highest
/// frequency.
pub fn fourier_tail_quadrature(x: f64, m: u64, k_max: u64, panels_per_period: usize) -> f64 {
    let len = 1.0 - x;
    if len <= 0.0 {
        return 0.0;
    }
    let (lo, hi) = ((2 * m + 1) as f64, (2 * k_max + 1) as f64);
    let kernel = |u: f64| {
        let s = (PI * u).sin();
        if s.abs() < 1e-300 {
            // limit u → 0 of the Dirichlet difference
            return 2.0 * (k_max - m) as f64;
        }
        ((hi * PI * u).sin() - (lo * PI * u).sin()) / s
    };
    let panels = ((len * k_max as f64).ceil() as usize).max(1) * panels_per_period.max(1);
    let h = len / panels as f64;
    let mut acc = 0.0;
    for p in 0..panels {
        let a = p as f64 * h;
        let mut part = 0.0;
        for (node, weight) in GL8 {
            let u = a + 0.5 * h * (1.0 + node);
            part += weight * (len - u) * kernel(u);
        }
        acc += 0.5 * h * part;
    }
    2.0 * acc
}

const GL8: [(f64, f64); 8] = [
    (-0.960_289_856_497_536_2, 0.101_228_536_290_376_26),
    (-0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (-0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (-0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (0.960_289_856_497_536_2, 0.101_228_536_290_376_26),
];
