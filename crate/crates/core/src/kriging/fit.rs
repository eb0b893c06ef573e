//! Generalized least squares, profiled likelihood and the length search.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

use super::{
    correlation_matrix, factor_with_nugget, interpolation_error, solve_weights, scaled_correlation, search, singular, Doe,
    KrigingModel, Trend, INTERPOLATION_TOL, NUGGET_START,
};
use crate::doe::halton;
use crate::error::{domain, Error, Result};
use crate::linalg::{dot, least_squares, Cholesky, Matrix};

/// Residual variances below this fraction of the squared output scale are
/// treated as an exact trend fit.
const DEGENERATE_RATIO: f64 = 1e-16;

/// Closed-form estimates at fixed correlation lengths.
pub(crate) struct Gls {
    pub beta: Vec<f64>,
    pub sigma2: f64,
    pub f_tilde: Matrix,
    pub r_f: Matrix,
    pub alpha: Vec<f64>,
    /// The residual is round-off only: the trend alone reproduces the data.
    pub degenerate: bool,
}

impl Gls {
    pub fn new(chol: &Cholesky, trend: Trend, doe: &Doe) -> Result<Self> {
        let m = doe.len();
        let f = trend.matrix(doe.inputs());
        let p = f.cols();
        if m < p {
            return Err(Error::Identifiability {
                points: m,
                basis_size: p,
            });
        }
        let mut f_tilde = Matrix::zeros(m, p);
        let mut col = vec![0.0; m];
        for j in 0..p {
            for i in 0..m {
                col[i] = f[(i, j)];
            }
            chol.solve_lower_in_place(&mut col);
            for i in 0..m {
                f_tilde[(i, j)] = col[i];
            }
        }
        let mut y_tilde = doe.outputs().to_vec();
        chol.solve_lower_in_place(&mut y_tilde);
        let ls = least_squares(&f_tilde, &y_tilde).ok_or(Error::Identifiability {
            points: m,
            basis_size: p,
        })?;
        let mut resid: Vec<f64> = (0..m)
            .map(|i| y_tilde[i] - dot(f_tilde.row(i), &ls.solution))
            .collect();
        let mut sigma2 = dot(&resid, &resid) / m as f64;
        let scale = doe.outputs().iter().fold(0.0f64, |a, y| a.max(y * y));
        let degenerate = sigma2 <= DEGENERATE_RATIO * scale;
        if degenerate {
            sigma2 = 0.0;
            resid.iter_mut().for_each(|r| *r = 0.0);
        }
        chol.solve_upper_in_place(&mut resid);
        Ok(Self {
            beta: ls.solution,
            sigma2,
            f_tilde,
            r_f: ls.r,
            alpha: resid,
            degenerate,
        })
    }
}

/// Constant reported for an exact trend fit, where the likelihood does not
/// depend on the lengths.
fn degenerate_nll(doe: &Doe) -> f64 {
    let m = doe.len() as f64;
    let scale = doe
        .outputs()
        .iter()
        .fold(0.0f64, |a, y| a.max(y * y))
        .max(f64::MIN_POSITIVE);
    0.5 * m * ((2.0 * PI * DEGENERATE_RATIO * scale).ln() + 1.0)
}

/// Profiled negative log-likelihood at `lengths`, with β and σ² replaced by
/// their closed-form estimates. `+∞` when the correlation matrix cannot be
/// factored.
pub fn negative_log_likelihood(doe: &Doe, trend: Trend, lengths: &[f64]) -> Result<f64> {
    if lengths.len() != doe.dim() {
        return Err(Error::Dimension {
            expected: doe.dim(),
            got: lengths.len(),
        });
    }
    if lengths.iter().any(|&l| !(l > 0.0)) {
        return Err(domain("correlation lengths must be positive"));
    }
    let inv: Vec<f64> = lengths.iter().map(|l| 1.0 / l).collect();
    Ok(profile(doe, trend, &inv, false, false).map_or(f64::INFINITY, |(v, _)| v))
}

/// Factor and estimates at the smallest nugget, provided the resulting
/// weights reproduce the outputs. Lengths failing this are numerically
/// singular and excluded from the likelihood search.
fn well_conditioned(doe: &Doe, trend: Trend, inv_len: &[f64]) -> Option<(Cholesky, Gls)> {
    let r = correlation_matrix(doe.inputs(), inv_len, NUGGET_START);
    let chol = Cholesky::factor(&r)?;
    let mut gls = Gls::new(&chol, trend, doe).ok()?;
    solve_weights(doe, trend, &r, &chol, &mut gls);
    (interpolation_error(doe, trend, &r, &gls) <= INTERPOLATION_TOL).then_some((chol, gls))
}

/// Profiled NLL and, optionally, its gradient with respect to `ln ℓ`.
/// `search` restricts it to well-conditioned lengths.
fn profile(doe: &Doe, trend: Trend, inv_len: &[f64], gradient: bool, search: bool) -> Option<(f64, Vec<f64>)> {
    let (chol, gls) = if search {
        well_conditioned(doe, trend, inv_len)?
    } else {
        let (chol, _) = factor_with_nugget(doe.inputs(), inv_len)?;
        let gls = Gls::new(&chol, trend, doe).ok()?;
        (chol, gls)
    };
    let n = doe.dim();
    if gls.degenerate {
        return Some((degenerate_nll(doe), vec![0.0; n]));
    }
    let m = doe.len() as f64;
    let nll = 0.5 * m * ((2.0 * PI * gls.sigma2).ln() + 1.0) + 0.5 * chol.ln_det();
    if !nll.is_finite() {
        return None;
    }
    if !gradient {
        return Some((nll, Vec::new()));
    }
    // dNLL/dt_k = Σ_ij [½ R⁻¹_ij - α_i α_j / (2σ²)] ∂R_ij/∂t_k,
    // with ∂R_ij/∂t_k = 2 R_ij (Δ_k / ℓ_k)².
    let rinv = chol.inverse();
    let x = doe.inputs();
    let mut grad = vec![0.0; n];
    for i in 0..doe.len() {
        for j in 0..i {
            let w = rinv[(i, j)] - gls.alpha[i] * gls.alpha[j] / gls.sigma2;
            let r = scaled_correlation(x.row(i), x.row(j), inv_len);
            if r == 0.0 {
                continue;
            }
            // Both (i, j) and (j, i) terms: 2 · ½ · w · 2 r d².
            let c = 2.0 * w * r;
            for k in 0..n {
                let d = (x[(i, k)] - x[(j, k)]) * inv_len[k];
                grad[k] += c * d * d;
            }
        }
    }
    Some((nll, grad))
}

/// Options of the maximum-likelihood fit.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FitOptions {
    pub trend: Trend,
    /// Per-dimension `(min, max)` correlation lengths. Defaults to
    /// `[1e-2, 1e2]` times the range of the inputs in that dimension.
    pub length_bounds: Option<Vec<(f64, f64)>>,
    /// Number of low-discrepancy starting points; defaults to `10 n`.
    pub starts: Option<usize>,
    /// How many of the best starts are polished by the local search.
    pub polish: usize,
    /// Extra starting point, typically the lengths of a previous fit.
    pub warm_start: Option<Vec<f64>>,
    pub seed: u64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            trend: Trend::Constant,
            length_bounds: None,
            starts: None,
            polish: 3,
            warm_start: None,
            seed: 0,
        }
    }
}

pub(crate) fn default_bounds(doe: &Doe) -> Vec<(f64, f64)> {
    let x = doe.inputs();
    (0..doe.dim())
        .map(|k| {
            let (lo, hi) = x
                .iter_rows()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), r| (a.min(r[k]), b.max(r[k])));
            let range = if hi > lo { hi - lo } else { 1.0 };
            (1e-2 * range, 1e2 * range)
        })
        .collect()
}

/// Maximum-likelihood kriging fit: screened multistart in log-length space,
/// followed by a bounded quasi-Newton polish of the most promising starts.
pub fn fit(doe: Doe, options: &FitOptions) -> Result<KrigingModel> {
    let n = doe.dim();
    let p = options.trend.size(n);
    if doe.len() < p {
        return Err(Error::Identifiability {
            points: doe.len(),
            basis_size: p,
        });
    }
    let bounds = match &options.length_bounds {
        Some(b) => {
            if b.len() != n {
                return Err(Error::Dimension {
                    expected: n,
                    got: b.len(),
                });
            }
            if b.iter().any(|&(lo, hi)| !(lo > 0.0 && lo <= hi && hi.is_finite())) {
                return Err(domain("length bounds must satisfy 0 < min <= max < inf"));
            }
            b.clone()
        }
        None => default_bounds(&doe),
    };
    let lo: Vec<f64> = bounds.iter().map(|b| b.0.ln()).collect();
    let hi: Vec<f64> = bounds.iter().map(|b| b.1.ln()).collect();

    let count = options.starts.unwrap_or(10 * n).max(1);
    let unit = halton(count, n, options.seed);
    let mut starts: Vec<Vec<f64>> = Vec::with_capacity(count + 1);
    if let Some(w) = &options.warm_start {
        if w.len() == n && w.iter().all(|&l| l > 0.0) {
            starts.push((0..n).map(|k| w[k].ln().clamp(lo[k], hi[k])).collect());
        }
    }
    starts.extend(unit.iter_rows().map(|u| (0..n).map(|k| lo[k] + u[k] * (hi[k] - lo[k])).collect()));

    let objective = |t: &[f64], gradient: bool| {
        let inv: Vec<f64> = t.iter().map(|v| (-v).exp()).collect();
        profile(&doe, options.trend, &inv, gradient, true)
    };

    let mut screened: Vec<(f64, usize)> = starts
        .iter()
        .enumerate()
        .filter_map(|(i, t)| objective(t, false).map(|(v, _)| (v, i)))
        .collect();
    if screened.is_empty() {
        return Err(singular(&doe));
    }
    screened.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut best_t = starts[screened[0].1].clone();
    let mut best_v = screened[0].0;
    for &(_, i) in screened.iter().take(options.polish) {
        if let Some((t, v)) = search::minimize_box(|t| objective(t, true), &starts[i], &lo, &hi, 60) {
            if v < best_v {
                best_v = v;
                best_t = t;
            }
        }
    }
    let lengths = best_t.iter().map(|t| t.exp()).collect();
    KrigingModel::with_lengths(doe, options.trend, lengths)
}
