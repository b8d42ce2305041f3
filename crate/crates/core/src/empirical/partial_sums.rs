use crate::density::PiecewiseDensity;

/// Fenwick tree over value ranks.
struct Fenwick {
    count: Vec<u32>,
    sum: Vec<f64>,
}

impl Fenwick {
    fn new(n: usize) -> Self {
        Fenwick {
            count: vec![0; n + 1],
            sum: vec![0.0; n + 1],
        }
    }

    fn add(&mut self, rank: usize, v: f64) {
        let mut i = rank + 1;
        while i < self.count.len() {
            self.count[i] += 1;
            self.sum[i] += v;
            i += i & i.wrapping_neg();
        }
    }

    /// Count and sum over ranks `0..=rank`.
    fn prefix(&self, rank: usize) -> (u32, f64) {
        let (mut c, mut s) = (0, 0.0);
        let mut i = rank + 1;
        while i > 0 {
            c += self.count[i];
            s += self.sum[i];
            i -= i & i.wrapping_neg();
        }
        (c, s)
    }
}

/// `‖S_k‖` in `L²[0, 1]` for `k = 1..=n`, where
/// `S_k(t) = Σ_{i≤k} (1{x_i ≤ t} - F(t))`.
///
/// Uses `⟨Y_i, Y_k⟩ = (1 - max(x_i, x_k)) - Φ(x_i) - Φ(x_k) + Q` with
/// `Φ(x) = ∫_x^1 F` and `Q = ∫ F²`, so each step costs `O(log n)`.
pub fn partial_sum_norms(values: &[f64], d: &PiecewiseDensity) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    // stable: equal values keep index order, so earlier ties count as ≤
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut rank = vec![0usize; n];
    for (r, &i) in order.iter().enumerate() {
        rank[i] = r;
    }
    let q = d.cdf_square_integral();
    let mut tree = Fenwick::new(n);
    let mut total_tail = 0.0; // Σ_{i<k} (1 - x_i)
    let mut phi_sum = 0.0; // Σ_{i<k} Φ(x_i)
    let mut norm_sq = 0.0;
    let mut out = Vec::with_capacity(n);
    for (k, &x) in values.iter().enumerate() {
        let phi = d.cdf_tail_integral(x);
        let (le_count, le_tail) = tree.prefix(rank[k]);
        let above = total_tail - le_tail;
        let kf = k as f64;
        let cross = le_count as f64 * (1.0 - x) + above - phi_sum - kf * phi + kf * q;
        let own = (1.0 - x) - 2.0 * phi + q;
        norm_sq = (norm_sq + 2.0 * cross + own).max(0.0);
        out.push(norm_sq.sqrt());
        tree.add(rank[k], 1.0 - x);
        total_tail += 1.0 - x;
        phi_sum += phi;
    }
    out
}

/// `max_k ‖S_k‖`.
pub fn max_partial_sum_norm(values: &[f64], d: &PiecewiseDensity) -> f64 {
    partial_sum_norms(values, d).into_iter().fold(0.0, f64::max)
}
