//! Forward orbits of the map and the time-reversed Markov chain driven by the
//! Perron-Frobenius kernel.

use std::io::{BufRead, Read, Write};

use rand::Rng;
use rand_distr::Open01;
use serde::{Deserialize, Serialize};

use crate::density::PiecewiseDensity;
use crate::error::{Error, Result};
use crate::map::{self, GammaParam, INVERSE_TOL};
use crate::rng::{stream_rng, StreamRng};

/// Iterates below this value are treated as a numerical failure.
pub const LAMINAR_FLOOR: f64 = 1.0 / (1u64 << 60) as f64;
pub const DEFAULT_BURN_IN: u64 = 1000;

const MAGIC: &[u8; 4] = b"ILRD";
const FORMAT_VERSION: u16 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    ForwardMap,
    BackwardChain,
}

impl Direction {
    fn code(self) -> u8 {
        match self {
            Direction::ForwardMap => 0,
            Direction::BackwardChain => 1,
        }
    }

    fn from_code(c: u8) -> Result<Self> {
        match c {
            0 => Ok(Direction::ForwardMap),
            1 => Ok(Direction::BackwardChain),
            _ => Err(Error::Format(format!("unknown direction code {c}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Orbit {
    pub gamma: GammaParam,
    pub values: Vec<f64>,
    pub seed: u64,
    pub burn_in: u64,
    pub direction: Direction,
}

/// Streaming forward iteration with the laminar-underflow trap.
#[derive(Debug, Clone)]
pub struct ForwardSampler {
    x: f64,
    gamma: f64,
    steps: u64,
}

impl ForwardSampler {
    /// Draws `x0` uniformly on `(0, 1)` from stream `(seed, stream)` and
    /// discards `burn_in` iterates.
    pub fn new(gamma: GammaParam, burn_in: u64, seed: u64, stream: u64) -> Result<Self> {
        let mut rng = stream_rng(seed, stream);
        let x0: f64 = rng.sample(Open01);
        let mut s = ForwardSampler {
            x: x0,
            gamma: gamma.get(),
            steps: 0,
        };
        for _ in 0..burn_in {
            s.next_value()?;
        }
        Ok(s)
    }

    #[inline]
    pub fn next_value(&mut self) -> Result<f64> {
        self.x = map::step(self.x, self.gamma);
        self.steps += 1;
        if self.x < LAMINAR_FLOOR {
            return Err(Error::LaminarUnderflow {
                step: self.steps,
                value: self.x,
            });
        }
        Ok(self.x)
    }

    pub fn fill(&mut self, out: &mut [f64]) -> Result<()> {
        for v in out.iter_mut() {
            *v = self.next_value()?;
        }
        Ok(())
    }
}

pub fn generate_orbit(gamma: GammaParam, n: usize, burn_in: u64, seed: u64) -> Result<Orbit> {
    generate_orbit_stream(gamma, n, burn_in, seed, 0)
}

pub fn generate_orbit_stream(
    gamma: GammaParam,
    n: usize,
    burn_in: u64,
    seed: u64,
    stream: u64,
) -> Result<Orbit> {
    if n == 0 {
        return Err(Error::invalid("orbit length must be at least 1"));
    }
    let mut sampler = ForwardSampler::new(gamma, burn_in, seed, stream)?;
    let mut values = vec![0.0; n];
    sampler.fill(&mut values)?;
    Ok(Orbit {
        gamma,
        values,
        seed,
        burn_in,
        direction: Direction::ForwardMap,
    })
}

impl Orbit {
    /// Deterministic forward orbit from an explicit starting point. Records
    /// `T^(burn_in+1)(x0), ..., T^(burn_in+n)(x0)` and performs no underflow
    /// check, so exact landings on the fixed point are reproduced as-is.
    pub fn from_start(gamma: GammaParam, x0: f64, n: usize, burn_in: u64) -> Result<Orbit> {
        let mut x = map::apply_map(x0, gamma)?;
        for _ in 0..burn_in {
            x = map::step(x, gamma.get());
        }
        let mut values = Vec::with_capacity(n);
        for i in 0..n {
            if i > 0 {
                x = map::step(x, gamma.get());
            }
            values.push(x);
        }
        Ok(Orbit {
            gamma,
            values,
            seed: 0,
            burn_in,
            direction: Direction::ForwardMap,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Longest run of consecutive iterates below `threshold`.
    pub fn longest_run_below(&self, threshold: f64) -> usize {
        let (mut best, mut cur) = (0, 0);
        for &v in &self.values {
            if v < threshold {
                cur += 1;
                best = best.max(cur);
            } else {
                cur = 0;
            }
        }
        best
    }

    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        let mut header = [0u8; 16];
        header[..4].copy_from_slice(MAGIC);
        header[4..6].copy_from_slice(&FORMAT_VERSION.to_le_bytes());
        header[6] = self.direction.code();
        w.write_all(&header)?;
        w.write_all(&self.gamma.get().to_le_bytes())?;
        w.write_all(&self.seed.to_le_bytes())?;
        w.write_all(&self.burn_in.to_le_bytes())?;
        w.write_all(&(self.values.len() as u64).to_le_bytes())?;
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Orbit> {
        let mut header = [0u8; 16];
        r.read_exact(&mut header)?;
        if &header[..4] != MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let version = u16::from_le_bytes([header[4], header[5]]);
        if version != FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let direction = Direction::from_code(header[6])?;
        let mut word = [0u8; 8];
        let mut next = |r: &mut R| -> Result<[u8; 8]> {
            r.read_exact(&mut word)?;
            Ok(word)
        };
        let gamma = GammaParam::new(f64::from_le_bytes(next(&mut r)?))?;
        let seed = u64::from_le_bytes(next(&mut r)?);
        let burn_in = u64::from_le_bytes(next(&mut r)?);
        let n = u64::from_le_bytes(next(&mut r)?) as usize;
        let mut values = Vec::with_capacity(n.min(1 << 24));
        for _ in 0..n {
            let v = f64::from_le_bytes(next(&mut r)?);
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Format(format!("value {v} outside [0, 1]")));
            }
            values.push(v);
        }
        Ok(Orbit {
            gamma,
            values,
            seed,
            burn_in,
            direction,
        })
    }

    /// One value per line under the header `x`, 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(b"x\n")?;
        for v in &self.values {
            writeln!(w, "{}", crate::fmt17(*v))?;
        }
        Ok(())
    }

    pub fn read_csv_values<R: BufRead>(r: R) -> Result<Vec<f64>> {
        let mut out = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            if i == 0 {
                if line.trim() != "x" {
                    return Err(Error::Format("expected header `x`".into()));
                }
                continue;
            }
            let v: f64 = line
                .trim()
                .parse()
                .map_err(|_| Error::Format(format!("line {}: not a number", i + 1)))?;
            out.push(v);
        }
        Ok(out)
    }
}

/// Probability of stepping to the left preimage, with the two branch weights
/// `ĥ(T_i⁻¹x) / (|T'(T_i⁻¹x)| ĥ(x))` renormalized to sum to one.
#[derive(Debug, Clone, Copy)]
pub struct BranchChoice {
    pub x_left: f64,
    pub x_right: f64,
    pub p_left: f64,
    /// Sum of the raw weights before renormalization.
    pub raw_total: f64,
}

pub fn branch_choice(x: f64, gamma: GammaParam, density: &PiecewiseDensity) -> Result<BranchChoice> {
    let (x_left, x_right) = map::inverse_branches(x, gamma, INVERSE_TOL)?;
    let hx = density.density_at(x);
    if !(hx > 0.0) {
        return Err(Error::BadDensity(format!("zero density at x = {x}")));
    }
    let w_left = density.density_at(x_left) / (map::derivative(x_left, gamma.get()) * hx);
    let w_right = density.density_at(x_right) / (2.0 * hx);
    let raw_total = w_left + w_right;
    if (raw_total - 1.0).abs() > 0.05 {
        return Err(Error::BadDensity(format!(
            "branch weights at x = {x} sum to {raw_total}"
        )));
    }
    Ok(BranchChoice {
        x_left,
        x_right,
        p_left: w_left / raw_total,
        raw_total,
    })
}

/// Streaming sampler for the reversed chain `X_1, X_2, ...`, which has the law
/// of `T^n, T^(n-1), ..., T` under the invariant measure.
pub struct BackwardSampler<'a> {
    x: f64,
    gamma: GammaParam,
    density: &'a PiecewiseDensity,
    rng: StreamRng,
    started: bool,
}

impl<'a> BackwardSampler<'a> {
    pub fn new(gamma: GammaParam, seed: u64, stream: u64, density: &'a PiecewiseDensity) -> Result<Self> {
        if density.gamma != gamma {
            return Err(Error::GammaMismatch {
                left: gamma.get(),
                right: density.gamma.get(),
            });
        }
        let mut rng = stream_rng(seed, stream);
        let u: f64 = rng.sample(Open01);
        let x = density.quantile(u)?;
        Ok(BackwardSampler {
            x,
            gamma,
            density,
            rng,
            started: false,
        })
    }

    pub fn next_value(&mut self) -> Result<f64> {
        if self.started {
            let choice = branch_choice(self.x, self.gamma, self.density)?;
            let u: f64 = self.rng.random();
            self.x = if u < choice.p_left {
                choice.x_left
            } else {
                choice.x_right
            };
        }
        self.started = true;
        Ok(self.x)
    }

    pub fn fill(&mut self, out: &mut [f64]) -> Result<()> {
        for v in out.iter_mut() {
            *v = self.next_value()?;
        }
        Ok(())
    }
}

pub fn generate_backward_chain(
    gamma: GammaParam,
    n: usize,
    seed: u64,
    density: &PiecewiseDensity,
) -> Result<Orbit> {
    generate_backward_chain_stream(gamma, n, seed, 0, density)
}

pub fn generate_backward_chain_stream(
    gamma: GammaParam,
    n: usize,
    seed: u64,
    stream: u64,
    density: &PiecewiseDensity,
) -> Result<Orbit> {
    if n == 0 {
        return Err(Error::invalid("chain length must be at least 1"));
    }
    let mut sampler = BackwardSampler::new(gamma, seed, stream, density)?;
    let mut values = vec![0.0; n];
    sampler.fill(&mut values)?;
    Ok(Orbit {
        gamma,
        values,
        seed,
        burn_in: 0,
        direction: Direction::BackwardChain,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(v: f64) -> GammaParam {
        GammaParam::new(v).unwrap()
    }

    #[test]
    fn injected_start_follows_branch_formulas() {
        let orbit = Orbit::from_start(g(0.75), 0.75, 3, 0).unwrap();
        assert_eq!(orbit.values, vec![0.5, 0.0, 0.0]);
    }

    #[test]
    fn forward_orbit_is_deterministic_and_consistent() {
        let a = generate_orbit(g(0.6), 2000, 100, 42).unwrap();
        let b = generate_orbit(g(0.6), 2000, 100, 42).unwrap();
        assert_eq!(a, b);
        for w in a.values.windows(2) {
            assert_eq!(w[1], map::step(w[0], 0.6));
        }
        assert!(a.values.iter().all(|v| (0.0..=1.0).contains(v)));
        let c = generate_orbit_stream(g(0.6), 2000, 100, 42, 1).unwrap();
        assert_ne!(a.values, c.values);
    }

    #[test]
    fn zero_length_is_rejected() {
        assert!(generate_orbit(g(0.5), 0, 0, 1).is_err());
    }

    #[test]
    fn binary_round_trip() {
        let orbit = generate_orbit(g(0.75), 257, 10, 9).unwrap();
        let mut buf = Vec::new();
        orbit.write_binary(&mut buf).unwrap();
        assert_eq!(buf.len(), 16 + 32 + 8 * 257);
        assert_eq!(&buf[..4], b"ILRD");
        let back = Orbit::read_binary(buf.as_slice()).unwrap();
        assert_eq!(back, orbit);
    }

    #[test]
    fn binary_rejects_garbage() {
        assert!(matches!(Orbit::read_binary(&b"XXXX000000000000"[..]), Err(Error::Format(_))));
        let orbit = generate_orbit(g(0.75), 4, 0, 9).unwrap();
        let mut buf = Vec::new();
        orbit.write_binary(&mut buf).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(Orbit::read_binary(buf.as_slice()).is_err());
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let orbit = generate_orbit(g(0.3), 100, 0, 5).unwrap();
        let mut buf = Vec::new();
        orbit.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("x\n"));
        assert!(!text.contains('\r'));
        let back = Orbit::read_csv_values(buf.as_slice()).unwrap();
        assert_eq!(back, orbit.values);
    }
}
