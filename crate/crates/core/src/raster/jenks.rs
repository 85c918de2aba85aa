//! Fisher-Jenks natural breaks by exact dynamic programming.

use super::RasterError;

/// Sorted distinct finite values with their multiplicities.
fn distinct(values: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut sorted: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    sorted.sort_by(f64::total_cmp);
    let mut xs: Vec<f64> = Vec::new();
    let mut ws: Vec<f64> = Vec::new();
    for v in sorted {
        match xs.last() {
            Some(&last) if last == v => *ws.last_mut().unwrap() += 1.0,
            _ => {
                xs.push(v);
                ws.push(1.0);
            }
        }
    }
    (xs, ws)
}

/// Weighted sum of squared deviations, accumulated from the top of the
/// segment down. Every caller goes through this order so objectives compare
/// exactly.
#[derive(Default)]
struct Segment {
    weight: f64,
    mean: f64,
    m2: f64,
}

impl Segment {
    fn push(&mut self, x: f64, w: f64) {
        self.weight += w;
        let delta = x - self.mean;
        self.mean += delta * w / self.weight;
        self.m2 += w * delta * (x - self.mean);
    }
}

/// `k - 1` upper bounds of the lower classes of the optimal `k`-class
/// partition. Ties go to the smaller break.
pub fn jenks_breaks(values: &[f64], k: usize) -> Result<Vec<f64>, RasterError> {
    let (xs, ws) = distinct(values);
    let m = xs.len();
    if k == 0 || m < k {
        return Err(RasterError::TooFewDistinctValues { k, distinct: m });
    }

    // best[c][j]: minimal cost of splitting xs[..=j] into c + 1 classes;
    // start[c][j]: first index of the last class in that split.
    let mut best = vec![vec![f64::INFINITY; m]; k];
    let mut start = vec![vec![0usize; m]; k];
    let mut cost = vec![0.0; m];
    for j in 0..m {
        let mut seg = Segment::default();
        for i in (0..=j).rev() {
            seg.push(xs[i], ws[i]);
            cost[i] = seg.m2;
        }
        best[0][j] = cost[0];
        for c in 1..k.min(j + 1) {
            for i in (c..=j).rev() {
                let total = best[c - 1][i - 1] + cost[i];
                if total <= best[c][j] {
                    best[c][j] = total;
                    start[c][j] = i;
                }
            }
        }
    }

    let mut breaks = vec![0.0; k - 1];
    let mut end = m - 1;
    for c in (1..k).rev() {
        let i = start[c][end];
        breaks[c - 1] = xs[i - 1];
        end = i - 1;
    }
    Ok(breaks)
}

/// Total within-class sum of squared deviations for classes bounded above
/// by `breaks` (intervals `(lower, upper]`).
pub fn within_class_ssd(values: &[f64], breaks: &[f64]) -> f64 {
    let (xs, ws) = distinct(values);
    let class_of = |x: f64| breaks.iter().filter(|&&b| x > b).count();
    let mut total = 0.0;
    let mut hi = xs.len();
    // Walk classes from the lowest so the sum order matches the DP.
    let mut bounds = Vec::new();
    while hi > 0 {
        let class = class_of(xs[hi - 1]);
        let mut lo = hi - 1;
        while lo > 0 && class_of(xs[lo - 1]) == class {
            lo -= 1;
        }
        bounds.push((lo, hi));
        hi = lo;
    }
    for &(lo, hi) in bounds.iter().rev() {
        let mut seg = Segment::default();
        for i in (lo..hi).rev() {
            seg.push(xs[i], ws[i]);
        }
        total += seg.m2;
    }
    total
}
