//! Slice-within-Gibbs sampling of an unnormalized log density on a box.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng::{self, Stream};

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SliceOptions {
    /// Independent chains, each started from an exact draw obtained by
    /// rejection from the uniform law on the box.
    pub chains: usize,
    /// Uniform proposals tried when looking for starting points.
    pub max_start_trials: usize,
    /// Initial bracket width as a fraction of the box width.
    pub width_fraction: f64,
}

impl Default for SliceOptions {
    fn default() -> Self {
        Self {
            chains: 10,
            max_start_trials: 100_000,
            width_fraction: 1.0 / 20.0,
        }
    }
}

fn uniform_point(r: &mut Stream, lower: &[f64], upper: &[f64], out: &mut [f64]) {
    for ((o, &lo), &hi) in out.iter_mut().zip(lower).zip(upper) {
        *o = lo + (hi - lo) * r.random::<f64>();
    }
}

/// Starting points: rejection sampling against `exp(log_density) <= 1`,
/// falling back to the best finite trial.
fn starting_points<F>(log_density: &F, lower: &[f64], upper: &[f64], options: &SliceOptions, seed: u64) -> Result<Vec<Vec<f64>>>
where
    F: Fn(&[f64]) -> f64,
{
    let mut r = rng::stream(seed, &[rng::label("slice-start")]);
    let mut x = vec![0.0; lower.len()];
    let mut found = Vec::new();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for _ in 0..options.max_start_trials {
        uniform_point(&mut r, lower, upper, &mut x);
        let l = log_density(&x);
        if !l.is_finite() {
            continue;
        }
        if best.as_ref().map_or(true, |b| l > b.0) {
            best = Some((l, x.clone()));
        }
        if r.random::<f64>().ln() < l {
            found.push(x.clone());
            if found.len() == options.chains {
                break;
            }
        }
    }
    if found.is_empty() {
        match best {
            Some((_, b)) => found.push(b),
            None => return Err(Error::EmptyMargin),
        }
    }
    Ok(found)
}

/// Draws `count` points whose density is proportional to
/// `exp(log_density)` inside `[lower, upper]`.
///
/// Each chain performs `100 n` burn-in sweeps and keeps one state every `n`
/// sweeps, `n` being the dimension.
pub fn slice_sample<F>(
    log_density: F,
    lower: &[f64],
    upper: &[f64],
    count: usize,
    options: &SliceOptions,
    seed: u64,
) -> Result<Matrix>
where
    F: Fn(&[f64]) -> f64,
{
    let dim = lower.len();
    let starts = starting_points(&log_density, lower, upper, options, seed)?;
    let chains = starts.len();
    let widths: Vec<f64> = lower
        .iter()
        .zip(upper)
        .map(|(l, u)| (u - l) * options.width_fraction)
        .collect();
    let burn_in = 100 * dim;
    let thin = dim.max(1);
    let mut out = Matrix::zeros(count, dim);
    for (c, start) in starts.into_iter().enumerate() {
        let mut r = rng::stream(seed, &[rng::label("slice-chain"), c as u64]);
        let mut x = start;
        let mut lx = log_density(&x);
        let share = count / chains + usize::from(c < count % chains);
        let first = c * (count / chains) + c.min(count % chains);
        for s in 0..burn_in + share * thin {
            for k in 0..dim {
                lx = update(&log_density, &mut x, lx, k, widths[k], lower[k], upper[k], &mut r);
            }
            if s >= burn_in && (s - burn_in + 1) % thin == 0 {
                out.row_mut(first + (s - burn_in) / thin).copy_from_slice(&x);
            }
        }
    }
    Ok(out)
}

/// One univariate slice update of coordinate `k` with step-out and shrink.
#[allow(clippy::too_many_arguments)]
fn update<F>(log_density: &F, x: &mut [f64], lx: f64, k: usize, w: f64, lo: f64, hi: f64, r: &mut Stream) -> f64
where
    F: Fn(&[f64]) -> f64,
{
    if !(w > 0.0) {
        return lx;
    }
    let level = lx + (1.0 - r.random::<f64>()).ln();
    let x0 = x[k];
    let mut left = (x0 - w * r.random::<f64>()).max(lo);
    let mut right = (left + w).min(hi);
    let at = |v: f64, x: &mut [f64]| {
        x[k] = v;
        log_density(x)
    };
    while left > lo && at(left, x) > level {
        left = (left - w).max(lo);
    }
    while right < hi && at(right, x) > level {
        right = (right + w).min(hi);
    }
    for _ in 0..200 {
        let v = left + (right - left) * r.random::<f64>();
        let lv = at(v, x);
        if lv > level {
            return lv;
        }
        if v < x0 {
            left = v;
        } else {
            right = v;
        }
    }
    x[k] = x0;
    lx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_target_moments() {
        let n = 10_000;
        let s = slice_sample(|_: &[f64]| 0.0, &[0.0, -2.0], &[1.0, 6.0], n, &SliceOptions::default(), 3).unwrap();
        for (j, (lo, hi)) in [(0.0, 1.0), (-2.0, 6.0)].iter().enumerate() {
            let col = s.column(j);
            let mean = col.iter().sum::<f64>() / n as f64;
            let se = (hi - lo) / 12f64.sqrt() / (n as f64).sqrt();
            assert!((mean - 0.5 * (lo + hi)).abs() < 3.0 * se, "dim {j}: {mean}");
            assert!(col.iter().all(|v| (*lo..=*hi).contains(v)));
        }
    }

    #[test]
    fn gaussian_target_covariance() {
        let n = 10_000;
        let s = slice_sample(
            |x: &[f64]| -0.5 * (x[0] * x[0] + x[1] * x[1]),
            &[-10.0, -10.0],
            &[10.0, 10.0],
            n,
            &SliceOptions::default(),
            8,
        )
        .unwrap();
        let c0 = s.column(0);
        let c1 = s.column(1);
        let m0 = c0.iter().sum::<f64>() / n as f64;
        let m1 = c1.iter().sum::<f64>() / n as f64;
        let v0 = c0.iter().map(|v| (v - m0).powi(2)).sum::<f64>() / n as f64;
        let v1 = c1.iter().map(|v| (v - m1).powi(2)).sum::<f64>() / n as f64;
        let cv = c0.iter().zip(&c1).map(|(a, b)| (a - m0) * (b - m1)).sum::<f64>() / n as f64;
        assert!((v0 - 1.0).abs() < 0.1 && (v1 - 1.0).abs() < 0.1, "{v0} {v1}");
        assert!(cv.abs() < 0.1);
    }

    #[test]
    fn deterministic_under_seed() {
        let f = |x: &[f64]| -x[0].abs();
        let a = slice_sample(f, &[-3.0], &[3.0], 500, &SliceOptions::default(), 1).unwrap();
        let b = slice_sample(f, &[-3.0], &[3.0], 500, &SliceOptions::default(), 1).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn empty_density() {
        let e = slice_sample(
            |_: &[f64]| f64::NEG_INFINITY,
            &[0.0],
            &[1.0],
            10,
            &SliceOptions {
                max_start_trials: 100,
                ..SliceOptions::default()
            },
            0,
        );
        assert_eq!(e.unwrap_err(), Error::EmptyMargin);
    }
}
