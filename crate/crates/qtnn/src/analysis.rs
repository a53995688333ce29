//! Dynamic time warping between perception-switching series.
//!
//! Plain DTW with absolute-difference cost: the alignment may repeat
//! elements of either series but never reorders them, and the distance is
//! the minimal total cost over all such alignments,
//! `D(i,j) = |x_i - y_j| + min(D(i-1,j), D(i,j-1), D(i-1,j-1))`.
//! No warping window and no path-length normalization by default; both
//! are available as options.

use crate::error::{Error, Result};

/// An optimal warping alignment.
#[derive(Debug, Clone, PartialEq)]
pub struct DtwResult {
    /// Total absolute-difference cost along the optimal path.
    pub distance: f64,
    /// One optimal path from `(0, 0)` to `(n-1, m-1)`, monotone in both
    /// indices with steps from `{(1,0), (0,1), (1,1)}`. Ties during
    /// backtracking prefer the diagonal, then the vertical step, so the
    /// path is deterministic.
    pub path: Vec<(usize, usize)>,
}

impl DtwResult {
    /// Distance divided by the alignment length.
    pub fn normalized_distance(&self) -> f64 {
        self.distance / self.path.len() as f64
    }
}

/// DTW distance and one optimal path between two series.
pub fn dtw_distance(x: &[f64], y: &[f64]) -> Result<DtwResult> {
    dtw_distance_windowed(x, y, None)
}

/// DTW restricted to `|i - j| <= window` when a window is given
/// (it is widened to the minimum feasible band automatically).
pub fn dtw_distance_windowed(x: &[f64], y: &[f64], window: Option<usize>) -> Result<DtwResult> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::Usage("DTW input series must be non-empty".into()));
    }
    for &v in x.iter().chain(y) {
        if !v.is_finite() {
            return Err(Error::Domain(format!("DTW input must be finite, got {v}")));
        }
    }
    let n = x.len();
    let m = y.len();
    let band = window.map(|w| w.max(n.abs_diff(m)));

    let mut cost = vec![f64::INFINITY; n * m];
    let idx = |i: usize, j: usize| i * m + j;
    for i in 0..n {
        let (lo, hi) = match band {
            Some(w) => (i.saturating_sub(w), (i + w + 1).min(m)),
            None => (0, m),
        };
        for j in lo..hi {
            let local = (x[i] - y[j]).abs();
            let best = if i == 0 && j == 0 {
                0.0
            } else {
                let mut best = f64::INFINITY;
                if i > 0 && j > 0 {
                    best = best.min(cost[idx(i - 1, j - 1)]);
                }
                if i > 0 {
                    best = best.min(cost[idx(i - 1, j)]);
                }
                if j > 0 {
                    best = best.min(cost[idx(i, j - 1)]);
                }
                best
            };
            cost[idx(i, j)] = local + best;
        }
    }

    let distance = cost[idx(n - 1, m - 1)];
    // Backtrack, preferring diagonal, then vertical, then horizontal.
    let mut path = Vec::with_capacity(n.max(m));
    let (mut i, mut j) = (n - 1, m - 1);
    path.push((i, j));
    while i > 0 || j > 0 {
        let diagonal = (i > 0 && j > 0).then(|| cost[idx(i - 1, j - 1)]);
        let vertical = (i > 0).then(|| cost[idx(i - 1, j)]);
        let horizontal = (j > 0).then(|| cost[idx(i, j - 1)]);
        let best = [diagonal, vertical, horizontal]
            .into_iter()
            .flatten()
            .fold(f64::INFINITY, f64::min);
        if diagonal == Some(best) {
            i -= 1;
            j -= 1;
        } else if vertical == Some(best) {
            i -= 1;
        } else {
            j -= 1;
        }
        path.push((i, j));
    }
    path.reverse();
    Ok(DtwResult { distance, path })
}
