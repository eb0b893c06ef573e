//! K-means clustering with k-means++ seeding and Lloyd iterations.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{domain, Result};
use crate::linalg::Matrix;
use crate::rng;

const MAX_ITERATIONS: usize = 100;

#[derive(Clone, Debug, PartialEq)]
pub struct Clustering {
    pub centers: Matrix,
    pub assignment: Vec<usize>,
    /// Within-cluster sum of squares after seeding and after every Lloyd
    /// iteration.
    pub wcss: Vec<f64>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub(crate) fn distinct_rows(points: &Matrix) -> usize {
    let mut idx: Vec<usize> = (0..points.rows()).collect();
    let cmp = |&a: &usize, &b: &usize| {
        points
            .row(a)
            .iter()
            .zip(points.row(b))
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(core::cmp::Ordering::Equal)
    };
    idx.sort_by(cmp);
    let mut count = usize::from(!idx.is_empty());
    for w in idx.windows(2) {
        if points.row(w[0]) != points.row(w[1]) {
            count += 1;
        }
    }
    count
}

/// Clusters the rows of `points` into `k` groups.
pub fn kmeans(points: &Matrix, k: usize, seed: u64) -> Result<Clustering> {
    let n = points.rows();
    if k == 0 {
        return Err(domain("cluster count must be at least 1"));
    }
    let distinct = distinct_rows(points);
    if k > distinct {
        return Err(domain(format!("{k} clusters requested but only {distinct} distinct points")));
    }
    let mut rng = rng::stream(seed, &[rng::label("kmeans")]);

    // k-means++ seeding.
    let mut centers = Matrix::with_cols(points.cols());
    centers.push_row(points.row(rng.random_range(0..n)));
    let mut nearest: Vec<f64> = (0..n).map(|i| sq_dist(points.row(i), centers.row(0))).collect();
    while centers.rows() < k {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let mut t = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &d) in nearest.iter().enumerate() {
                if t < d {
                    chosen = i;
                    break;
                }
                t -= d;
            }
            // Never pick a point that already coincides with a center.
            if nearest[chosen] == 0.0 {
                farthest(&nearest)
            } else {
                chosen
            }
        } else {
            farthest(&nearest)
        };
        centers.push_row(points.row(pick));
        let c = centers.rows() - 1;
        for i in 0..n {
            nearest[i] = nearest[i].min(sq_dist(points.row(i), centers.row(c)));
        }
    }

    let mut assignment = vec![0usize; n];
    let mut wcss = Vec::new();
    let mut first = true;
    for _ in 0..=MAX_ITERATIONS {
        // Assignment step.
        let mut changed = false;
        let mut cost = 0.0;
        for i in 0..n {
            let (best, d) = (0..k)
                .map(|c| (c, sq_dist(points.row(i), centers.row(c))))
                .fold((0, f64::INFINITY), |acc, cur| if cur.1 < acc.1 { cur } else { acc });
            if best != assignment[i] {
                changed = true;
            }
            assignment[i] = best;
            cost += d;
        }
        wcss.push(cost);
        if !changed && !first {
            break;
        }
        first = false;
        if wcss.len() > MAX_ITERATIONS {
            break;
        }
        // Update step.
        let d = points.cols();
        let mut sums = Matrix::zeros(k, d);
        let mut counts = vec![0usize; k];
        for i in 0..n {
            let c = assignment[i];
            counts[c] += 1;
            for (s, v) in sums.row_mut(c).iter_mut().zip(points.row(i)) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                for (dst, s) in centers.row_mut(c).iter_mut().zip(sums.row(c)) {
                    *dst = s / counts[c] as f64;
                }
            }
        }
        // Reseed empty clusters at the point worst served by its center.
        for c in 0..k {
            if counts[c] == 0 {
                let dist: Vec<f64> = (0..n)
                    .map(|i| sq_dist(points.row(i), centers.row(assignment[i])))
                    .collect();
                let far = farthest(&dist);
                centers.row_mut(c).copy_from_slice(points.row(far));
                assignment[far] = c;
            }
        }
    }
    Ok(Clustering {
        centers,
        assignment,
        wcss,
    })
}

fn farthest(d: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in d.iter().enumerate() {
        if v > d[best] {
            best = i;
        }
    }
    best
}
