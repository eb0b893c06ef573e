//! Space-filling designs.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::linalg::Matrix;
use crate::rng;

const LHS_CANDIDATES: u64 = 20;

/// Latin hypercube of `count` points in the box `[lower, upper]`.
///
/// Several random hypercubes are drawn and the one with the largest minimum
/// pairwise distance (in unit-cube coordinates) is kept.
pub fn latin_hypercube(count: usize, lower: &[f64], upper: &[f64], seed: u64) -> Matrix {
    let dim = lower.len();
    let mut best = Matrix::zeros(count, dim);
    let mut best_score = f64::NEG_INFINITY;
    for c in 0..LHS_CANDIDATES {
        let mut rng = rng::stream(seed, &[rng::label("lhs"), c]);
        let mut unit = Matrix::zeros(count, dim);
        let mut perm: Vec<usize> = (0..count).collect();
        for j in 0..dim {
            perm.shuffle(&mut rng);
            for (i, &p) in perm.iter().enumerate() {
                unit[(i, j)] = (p as f64 + rng.random::<f64>()) / count as f64;
            }
        }
        let score = min_distance(&unit);
        if score > best_score {
            best_score = score;
            best = unit;
        }
    }
    for i in 0..count {
        for j in 0..dim {
            best[(i, j)] = lower[j] + best[(i, j)] * (upper[j] - lower[j]);
        }
    }
    best
}

fn min_distance(points: &Matrix) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..points.rows() {
        for k in 0..i {
            let d: f64 = points
                .row(i)
                .iter()
                .zip(points.row(k))
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            best = best.min(d);
        }
    }
    best
}

const PRIMES: [u32; 32] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97,
    101, 103, 107, 109, 113, 127, 131,
];

fn radical_inverse(mut i: u64, base: u32) -> f64 {
    let b = u64::from(base);
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut out = 0.0;
    while i > 0 {
        out += (i % b) as f64 * f;
        i /= b;
        f *= inv;
    }
    out
}

/// First `count` points of the Halton sequence in `[0, 1)^dim`, skipping the
/// origin, after a random Cranley-Patterson shift drawn from `seed`.
///
/// Dimensions beyond the tabulated primes fall back to uniform draws.
pub fn halton(count: usize, dim: usize, seed: u64) -> Matrix {
    let mut rng = rng::stream(seed, &[rng::label("halton")]);
    let shift: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
    let mut out = Matrix::zeros(count, dim);
    for i in 0..count {
        for j in 0..dim {
            let v = match PRIMES.get(j) {
                Some(&p) => radical_inverse(i as u64 + 1, p),
                None => rng.random::<f64>(),
            };
            out[(i, j)] = (v + shift[j]).fract();
        }
    }
    out
}
