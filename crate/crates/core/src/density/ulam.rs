use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::map::{self, GammaParam};

/// Bin layout for the discretized transfer operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum BinGrid {
    Uniform,
    /// Uniform on `[1/2, 1]`; on `[0, 1/2]` the edges are `(i/k)^(1/(1-γ)) / 2`,
    /// which gives bins of roughly equal invariant mass near the origin.
    #[default]
    Graded,
}

/// Smallest first edge the graded grid is allowed to produce.
const GRADED_FLOOR: f64 = 1e-280;

pub fn bin_edges(gamma: GammaParam, m: usize, grid: BinGrid) -> Vec<f64> {
    let half = m / 2;
    match grid {
        BinGrid::Uniform => (0..=m).map(|i| i as f64 / m as f64).collect(),
        BinGrid::Graded => {
            let cap = GRADED_FLOOR.ln() / (1.0 / half as f64).ln();
            let p = (1.0 / (1.0 - gamma.get())).min(cap).max(1.0);
            let mut edges = Vec::with_capacity(m + 1);
            for i in 0..half {
                edges.push(0.5 * (i as f64 / half as f64).powf(p));
            }
            for k in 0..=(m - half) {
                edges.push(0.5 + 0.5 * k as f64 / (m - half) as f64);
            }
            edges
        }
    }
}

/// Row-stochastic Ulam matrix `P[i][j] = Leb(B_i ∩ T⁻¹B_j) / Leb(B_i)` in CSR
/// form. `escape[i]` holds `Σ_{j≠i} P[i][j]` computed directly, so `1 - P[i][i]`
/// is available without cancellation for the slow bins near the origin.
#[derive(Debug, Clone)]
pub struct UlamMatrix {
    pub gamma: GammaParam,
    pub grid: BinGrid,
    pub edges: Vec<f64>,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
    pub escape: Vec<f64>,
}

impl UlamMatrix {
    pub fn m_bins(&self) -> usize {
        self.edges.len() - 1
    }

    /// First bin lying in `[1/2, 1]`.
    pub fn half_index(&self) -> usize {
        self.m_bins() / 2
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.cols[a..b], &self.vals[a..b])
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Largest `|Σ_j P[i][j] - 1|`.
    pub fn max_row_error(&self) -> f64 {
        (0..self.m_bins())
            .map(|i| (self.row(i).1.iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// `p P` for a row vector `p`.
    pub fn left_multiply(&self, p: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for (i, &pi) in p.iter().enumerate() {
            if pi == 0.0 {
                continue;
            }
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                out[j] += pi * v;
            }
        }
    }

    /// `‖pP − p‖₁`, with the diagonal handled through `escape`.
    pub fn stationarity_residual(&self, p: &[f64]) -> f64 {
        let m = self.m_bins();
        let mut inflow = vec![0.0; m];
        for (i, &pi) in p.iter().enumerate() {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                if j != i {
                    inflow[j] += pi * v;
                }
            }
        }
        (0..m).map(|j| (inflow[j] - p[j] * self.escape[j]).abs()).sum()
    }
}

/// An edge of the left-branch preimage partition, `edge - gap`, kept as a pair
/// so that overlaps of nearly coincident intervals are formed without
/// cancellation.
#[derive(Clone, Copy)]
struct Point {
    edge: f64,
    gap: f64,
}

fn overlap(lo: Point, hi: Point) -> f64 {
    ((hi.edge - lo.edge) - (hi.gap - lo.gap)).max(0.0)
}

/// Row of a bin `[a, b]` left of 1/2. Every comparison is made on the
/// preimage side (`e_j - gap_j` against `a` or `b`) because near the origin
/// `T(b)` rounds back to `b` while `gap_j` is still representable.
fn left_row(i: usize, edges: &[f64], gaps: &[f64], gamma: f64) -> Vec<(usize, f64)> {
    let m = edges.len() - 1;
    let (a, b) = (edges[i], edges[i + 1]);
    let ta = (a + a * (2.0 * a).powf(gamma)).min(1.0);
    // starting guess from the forward image, one bin early to absorb rounding
    let guess = edges.partition_point(|&e| e <= ta).clamp(1, m) - 1;
    let mut j = guess.saturating_sub(1).max(i);
    let mut row = Vec::new();
    // bin j is reached while its left preimage edge lies below b
    while j < m && edges[j] - b < gaps[j] {
        let lo = if edges[j] - a <= gaps[j] {
            Point { edge: a, gap: 0.0 }
        } else {
            Point { edge: edges[j], gap: gaps[j] }
        };
        let hi = if edges[j + 1] - b >= gaps[j + 1] {
            Point { edge: b, gap: 0.0 }
        } else {
            Point { edge: edges[j + 1], gap: gaps[j + 1] }
        };
        let len = overlap(lo, hi);
        if len > 0.0 {
            row.push((j, len));
        }
        j += 1;
    }
    row
}

fn right_row(i: usize, edges: &[f64]) -> Vec<(usize, f64)> {
    let m = edges.len() - 1;
    // image of [a, b] under 2x - 1, exact in floating point for a >= 1/2
    let (ia, ib) = (2.0 * edges[i] - 1.0, 2.0 * edges[i + 1] - 1.0);
    let first = edges.partition_point(|&e| e <= ia).clamp(1, m) - 1;
    let mut row = Vec::new();
    let mut j = first;
    while j < m && edges[j] < ib {
        let len = edges[j + 1].min(ib) - edges[j].max(ia);
        if len > 0.0 {
            // weight in the domain is len/2, the bin has width (ib - ia)/2
            row.push((j, len));
        }
        j += 1;
    }
    row
}

pub fn build_ulam_matrix(gamma: GammaParam, m_bins: usize) -> Result<UlamMatrix> {
    build_ulam_matrix_on(gamma, m_bins, BinGrid::default())
}

pub fn build_ulam_matrix_on(gamma: GammaParam, m_bins: usize, grid: BinGrid) -> Result<UlamMatrix> {
    if m_bins < 16 || !m_bins.is_power_of_two() {
        return Err(Error::invalid(format!(
            "bin count must be a power of two and at least 16, got {m_bins}"
        )));
    }
    let edges = bin_edges(gamma, m_bins, grid);
    let half = m_bins / 2;
    debug_assert_eq!(edges[half], 0.5);

    let gaps = crate::par::try_map_range(0..m_bins + 1, |j| map::left_preimage_gap(edges[j], gamma))?;
    let rows: Vec<Vec<(usize, f64)>> = crate::par::map_range(0..m_bins, |i| {
        if i < half {
            left_row(i, &edges, &gaps, gamma.get())
        } else {
            right_row(i, &edges)
        }
    });

    let nnz = rows.iter().map(Vec::len).sum();
    let mut row_ptr = Vec::with_capacity(m_bins + 1);
    let mut cols = Vec::with_capacity(nnz);
    let mut vals = Vec::with_capacity(nnz);
    let mut escape = Vec::with_capacity(m_bins);
    row_ptr.push(0);
    for (i, row) in rows.into_iter().enumerate() {
        let total: f64 = row.iter().map(|e| e.1).sum();
        if !(total > 0.0) {
            return Err(Error::invalid(format!("ulam row {i} carries no mass")));
        }
        let mut esc = 0.0;
        for (j, len) in row {
            let v = len / total;
            if j != i {
                esc += v;
            }
            cols.push(j);
            vals.push(v);
        }
        escape.push(esc);
        row_ptr.push(cols.len());
    }
    Ok(UlamMatrix {
        gamma,
        grid,
        edges,
        row_ptr,
        cols,
        vals,
        escape,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(v: f64) -> GammaParam {
        GammaParam::new(v).unwrap()
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(build_ulam_matrix(g(0.5), 8).is_err());
        assert!(build_ulam_matrix(g(0.5), 100).is_err());
    }

    #[test]
    fn graded_edges_are_increasing_and_hit_half() {
        for gamma in [0.01, 0.5, 0.75, 0.9, 0.99] {
            let e = bin_edges(g(gamma), 1024, BinGrid::Graded);
            assert_eq!(e.len(), 1025);
            assert_eq!(e[0], 0.0);
            assert_eq!(e[512], 0.5);
            assert_eq!(e[1024], 1.0);
            assert!(e.windows(2).all(|w| w[1] > w[0]), "gamma {gamma}");
        }
    }

    #[test]
    fn rows_are_stochastic_and_columns_reachable() {
        for grid in [BinGrid::Uniform, BinGrid::Graded] {
            for gamma in [0.3, 0.75] {
                let p = build_ulam_matrix_on(g(gamma), 256, grid).unwrap();
                assert!(p.max_row_error() <= 1e-12);
                assert!(p.vals.iter().all(|&v| v >= 0.0));
                let mut hit = vec![false; 256];
                for &c in &p.cols {
                    hit[c] = true;
                }
                assert!(hit.iter().all(|&h| h));
                for i in 0..256 {
                    let (cols, vals) = p.row(i);
                    let off: f64 = cols.iter().zip(vals).filter(|(&j, _)| j != i).map(|(_, v)| v).sum();
                    assert!((off - p.escape[i]).abs() <= 1e-15);
                }
            }
        }
    }

    #[test]
    fn left_rows_only_move_right() {
        let p = build_ulam_matrix(g(0.6), 512).unwrap();
        for i in 0..256 {
            assert!(p.row(i).0.iter().all(|&j| j >= i));
        }
    }

    #[test]
    fn escape_is_accurate_for_slow_bins() {
        // for bin [a, b] near 0 the off-diagonal mass is ≈ gap(b)/(b - a)
        let gamma = g(0.75);
        let p = build_ulam_matrix(gamma, 1024).unwrap();
        for i in 1..4 {
            let (a, b) = (p.edges[i], p.edges[i + 1]);
            let expect = map::left_preimage_gap(b, gamma).unwrap() / (b - a);
            assert!((p.escape[i] / expect - 1.0).abs() < 1e-6, "bin {i}");
            assert!(p.escape[i] > 0.0 && p.escape[i] < 1e-5);
        }
    }
}
