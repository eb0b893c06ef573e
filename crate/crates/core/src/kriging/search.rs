//! Box-constrained quasi-Newton minimization for the likelihood search.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::linalg::dot;

const MAX_STEP: f64 = 2.0;
const ARMIJO: f64 = 1e-4;

/// Projected BFGS from `x0` inside `[lo, hi]`.
///
/// `eval` returns the objective and its gradient, or `None` where the
/// objective is undefined. Returns the best point and value found.
pub(crate) fn minimize_box<F>(mut eval: F, x0: &[f64], lo: &[f64], hi: &[f64], max_iter: usize) -> Option<(Vec<f64>, f64)>
where
    F: FnMut(&[f64]) -> Option<(f64, Vec<f64>)>,
{
    let n = x0.len();
    let mut x: Vec<f64> = (0..n).map(|i| x0[i].clamp(lo[i], hi[i])).collect();
    let (mut f, mut g) = eval(&x)?;
    let mut h = identity(n);
    for _ in 0..max_iter {
        let free: Vec<bool> = (0..n)
            .map(|i| !((x[i] <= lo[i] && g[i] > 0.0) || (x[i] >= hi[i] && g[i] < 0.0)))
            .collect();
        let pg = (0..n).filter(|&i| free[i]).map(|i| g[i].abs()).fold(0.0, f64::max);
        if pg < 1e-7 {
            break;
        }
        let mut d = direction(&h, &g, &free);
        if dot(&d, &g) >= 0.0 {
            h = identity(n);
            d = direction(&h, &g, &free);
        }
        let longest = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut step = if longest > MAX_STEP { MAX_STEP / longest } else { 1.0 };
        let mut accepted = None;
        for _ in 0..40 {
            let xn: Vec<f64> = (0..n).map(|i| (x[i] + step * d[i]).clamp(lo[i], hi[i])).collect();
            let moved: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
            if let Some((fn_, gn)) = eval(&xn) {
                if fn_ <= f + ARMIJO * dot(&g, &moved) {
                    accepted = Some((xn, fn_, gn, moved));
                    break;
                }
            }
            step *= 0.5;
        }
        let Some((xn, fn_, gn, s)) = accepted else {
            break;
        };
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            bfgs_update(&mut h, &s, &y, sy);
        }
        let done = (f - fn_).abs() <= 1e-10 * (1.0 + f.abs());
        x = xn;
        f = fn_;
        g = gn;
        if done {
            break;
        }
    }
    Some((x, f))
}

fn identity(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| {
            let mut r = vec![0.0; n];
            r[i] = 1.0;
            r
        })
        .collect()
}

fn direction(h: &[Vec<f64>], g: &[f64], free: &[bool]) -> Vec<f64> {
    let n = g.len();
    (0..n)
        .map(|i| {
            if !free[i] {
                return 0.0;
            }
            -(0..n).filter(|&j| free[j]).map(|j| h[i][j] * g[j]).sum::<f64>()
        })
        .collect()
}

/// Inverse-Hessian BFGS update.
fn bfgs_update(h: &mut [Vec<f64>], s: &[f64], y: &[f64], sy: f64) {
    let n = s.len();
    let hy: Vec<f64> = (0..n).map(|i| dot(&h[i], y)).collect();
    let yhy = dot(y, &hy);
    let rho = 1.0 / sy;
    for i in 0..n {
        for j in 0..n {
            h[i][j] += rho * ((1.0 + rho * yhy) * s[i] * s[j] - hy[i] * s[j] - s[i] * hy[j]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock_in_box() {
        let f = |x: &[f64]| {
            let (a, b) = (x[0], x[1]);
            let v = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
            let g = vec![-2.0 * (1.0 - a) - 400.0 * a * (b - a * a), 200.0 * (b - a * a)];
            Some((v, g))
        };
        let (x, v) = minimize_box(f, &[-1.2, 1.0], &[-2.0, -2.0], &[2.0, 2.0], 500).unwrap();
        assert!(v < 1e-8, "{x:?} {v}");
    }

    #[test]
    fn active_bound() {
        let f = |x: &[f64]| Some(((x[0] + 3.0).powi(2) + x[1] * x[1], vec![2.0 * (x[0] + 3.0), 2.0 * x[1]]));
        let (x, _) = minimize_box(f, &[0.5, 0.5], &[-1.0, -1.0], &[1.0, 1.0], 100).unwrap();
        assert_eq!(x[0], -1.0);
        assert!(x[1].abs() < 1e-6);
    }
}
