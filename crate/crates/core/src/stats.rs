//! Order statistics shared by the windowed filters.
//!
//! One percentile convention is used everywhere: for a sorted sample `s` of
//! length `m` and fraction `p`, the position is `p * (m - 1)` and the value
//! is linearly interpolated between the two bracketing order statistics.

use std::cmp::Ordering;

/// Linear interpolation between the order statistics at `pos` and `pos + 1`.
#[inline]
pub fn interpolate(lo: f64, hi: f64, frac: f64) -> f64 {
    if frac == 0.0 {
        lo
    } else {
        lo + frac * (hi - lo)
    }
}

/// Split `p * (m - 1)` into an integer rank and its fractional part.
#[inline]
pub fn percentile_rank(m: usize, p: f64) -> (usize, f64) {
    debug_assert!(m > 0);
    let pos = p * (m - 1) as f64;
    let lo = (pos.floor() as usize).min(m - 1);
    let frac = if lo + 1 >= m { 0.0 } else { pos - lo as f64 };
    (lo, frac)
}

/// Percentile of an already sorted slice.
pub fn percentile_sorted(sorted: &[f64], p: f64) -> f64 {
    let (lo, frac) = percentile_rank(sorted.len(), p);
    let hi = if frac > 0.0 { sorted[lo + 1] } else { sorted[lo] };
    interpolate(sorted[lo], hi, frac)
}

/// Percentile of an unsorted sample (copies and sorts).
pub fn percentile(values: &[f64], p: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_unstable_by(f64::total_cmp);
    Some(percentile_sorted(&v, p))
}

/// Median of `buf`, sorting it in place.
#[inline]
pub fn median_in_place(buf: &mut [f64]) -> f64 {
    buf.sort_unstable_by(f64::total_cmp);
    percentile_sorted(buf, 0.5)
}

pub fn median_period(t: &[f64]) -> Option<f64> {
    if t.len() < 2 {
        return None;
    }
    let mut d: Vec<f64> = t.windows(2).map(|w| w[1] - w[0]).collect();
    Some(median_in_place(&mut d))
}

/// Half-open index bounds of a centered window of `width` samples around `i`,
/// truncated to `[0, n)`. Odd widths are symmetric; even widths extend one
/// sample further to the right.
#[inline]
pub fn centered_bounds(i: usize, width: usize, n: usize) -> (usize, usize) {
    let left = (width.saturating_sub(1)) / 2;
    let right = width.saturating_sub(1) - left;
    (i.saturating_sub(left), (i + right + 1).min(n))
}

/// Ranks of every sample of a sequence (ties broken by index).
pub struct Ranking {
    rank_of: Vec<usize>,
    sorted: Vec<f64>,
}

impl Ranking {
    pub fn new(values: &[f64]) -> Self {
        let n = values.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_unstable_by(|&a, &b| match values[a].total_cmp(&values[b]) {
            Ordering::Equal => a.cmp(&b),
            o => o,
        });
        let mut rank_of = vec![0usize; n];
        let mut sorted = Vec::with_capacity(n);
        for (r, &idx) in order.iter().enumerate() {
            rank_of[idx] = r;
            sorted.push(values[idx]);
        }
        Self { rank_of, sorted }
    }
}

/// Fenwick tree over value ranks, supporting k-th smallest queries on a
/// sliding multiset of sample indices.
pub struct RankWindow<'a> {
    ranking: &'a Ranking,
    tree: Vec<u32>,
    count: usize,
    top_bit: usize,
}

impl<'a> RankWindow<'a> {
    pub fn new(ranking: &'a Ranking) -> Self {
        let n = ranking.sorted.len();
        let mut top_bit = 1;
        while top_bit <= n {
            top_bit <<= 1;
        }
        Self { ranking, tree: vec![0; n + 1], count: 0, top_bit: top_bit >> 1 }
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn insert(&mut self, index: usize) {
        let mut i = self.ranking.rank_of[index] + 1;
        while i < self.tree.len() {
            self.tree[i] += 1;
            i += i & i.wrapping_neg();
        }
        self.count += 1;
    }

    pub fn remove(&mut self, index: usize) {
        let mut i = self.ranking.rank_of[index] + 1;
        while i < self.tree.len() {
            self.tree[i] -= 1;
            i += i & i.wrapping_neg();
        }
        self.count -= 1;
    }

    /// Value of the k-th smallest element currently in the window (0-based).
    pub fn kth(&self, k: usize) -> f64 {
        debug_assert!(k < self.count);
        let mut remaining = (k + 1) as u32;
        let mut pos = 0usize;
        let mut bit = self.top_bit;
        while bit > 0 {
            let next = pos + bit;
            if next < self.tree.len() && self.tree[next] < remaining {
                remaining -= self.tree[next];
                pos = next;
            }
            bit >>= 1;
        }
        self.ranking.sorted[pos]
    }

    pub fn percentile(&self, p: f64) -> f64 {
        let (lo, frac) = percentile_rank(self.count, p);
        let lo_v = self.kth(lo);
        let hi_v = if frac > 0.0 { self.kth(lo + 1) } else { lo_v };
        interpolate(lo_v, hi_v, frac)
    }
}
