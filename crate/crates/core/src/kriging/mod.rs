//! Gaussian-process (kriging) emulation with a squared-exponential
//! correlation and maximum-likelihood correlation lengths.

mod fit;
mod search;

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{domain, input, Error, Result};
use crate::linalg::{dot, dot_compensated, Cholesky, Matrix};

pub use fit::{fit, negative_log_likelihood, FitOptions};

/// Regression basis of the trend.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(rename_all = "lowercase")
)]
pub enum Trend {
    #[default]
    Constant,
    Linear,
}

impl Trend {
    pub fn size(self, dim: usize) -> usize {
        match self {
            Trend::Constant => 1,
            Trend::Linear => dim + 1,
        }
    }

    pub fn eval(self, x: &[f64], out: &mut [f64]) {
        out[0] = 1.0;
        if self == Trend::Linear {
            out[1..].copy_from_slice(x);
        }
    }

    fn matrix(self, inputs: &Matrix) -> Matrix {
        let p = self.size(inputs.cols());
        let mut f = Matrix::zeros(inputs.rows(), p);
        for i in 0..inputs.rows() {
            self.eval(inputs.row(i), f.row_mut(i));
        }
        f
    }
}

/// Training inputs and outputs.
#[derive(Clone, Debug, PartialEq)]
pub struct Doe {
    inputs: Matrix,
    outputs: Vec<f64>,
}

impl Doe {
    pub fn new(inputs: Matrix, outputs: Vec<f64>) -> Result<Self> {
        if inputs.rows() != outputs.len() {
            return Err(Error::Dimension {
                expected: inputs.rows(),
                got: outputs.len(),
            });
        }
        if let Some(i) = outputs.iter().position(|y| !y.is_finite()) {
            return Err(input(format!("output #{i} is not finite")));
        }
        if inputs.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(input("design inputs must be finite"));
        }
        for i in 0..inputs.rows() {
            for k in 0..i {
                if inputs.row(i) == inputs.row(k) {
                    return Err(input(format!("design points #{k} and #{i} coincide")));
                }
            }
        }
        Ok(Self { inputs, outputs })
    }

    pub fn inputs(&self) -> &Matrix {
        &self.inputs
    }

    pub fn outputs(&self) -> &[f64] {
        &self.outputs
    }

    pub fn len(&self) -> usize {
        self.outputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outputs.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.inputs.cols()
    }

    /// Appends a point; rejects exact duplicates.
    pub fn push(&mut self, x: &[f64], y: f64) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: x.len(),
            });
        }
        if !y.is_finite() || x.iter().any(|v| !v.is_finite()) {
            return Err(input("appended design point is not finite"));
        }
        if self.inputs.iter_rows().any(|r| r == x) {
            return Err(input("appended design point duplicates an existing one"));
        }
        self.inputs.push_row(x);
        self.outputs.push(y);
        Ok(())
    }

    /// Pair of distinct rows with the smallest Euclidean distance.
    pub fn closest_pair(&self) -> Option<(usize, usize, f64)> {
        let mut best: Option<(usize, usize, f64)> = None;
        for i in 0..self.len() {
            for k in 0..i {
                let d = squared_distance(self.inputs.row(i), self.inputs.row(k));
                if best.map_or(true, |b| d < b.2) {
                    best = Some((k, i, d));
                }
            }
        }
        best.map(|(a, b, d)| (a, b, d.sqrt()))
    }
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// `exp(-Σ ((x_k - x'_k) / ℓ_k)²)`.
pub fn correlation(x: &[f64], x_prime: &[f64], lengths: &[f64]) -> Result<f64> {
    if x.len() != x_prime.len() || x.len() != lengths.len() {
        return Err(Error::Dimension {
            expected: lengths.len(),
            got: x.len().max(x_prime.len()),
        });
    }
    if lengths.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
        return Err(domain("correlation lengths must be positive and finite"));
    }
    let inv: Vec<f64> = lengths.iter().map(|l| 1.0 / l).collect();
    Ok(scaled_correlation(x, x_prime, &inv))
}

fn scaled_correlation(x: &[f64], y: &[f64], inv_len: &[f64]) -> f64 {
    let mut s = 0.0;
    for ((a, b), w) in x.iter().zip(y).zip(inv_len) {
        let d = (a - b) * w;
        s += d * d;
    }
    (-s).exp()
}

/// Correlation matrix of `inputs` plus `nugget` on the diagonal.
pub(crate) fn correlation_matrix(inputs: &Matrix, inv_len: &[f64], nugget: f64) -> Matrix {
    let m = inputs.rows();
    let mut r = Matrix::zeros(m, m);
    for i in 0..m {
        r[(i, i)] = 1.0 + nugget;
        for k in 0..i {
            let v = scaled_correlation(inputs.row(i), inputs.row(k), inv_len);
            r[(i, k)] = v;
            r[(k, i)] = v;
        }
    }
    r
}

pub(crate) const NUGGET_START: f64 = 1e-12;
pub(crate) const NUGGET_MAX: f64 = 1e-6;

/// Factors `R + nugget I`, escalating the nugget by decades on failure.
pub(crate) fn factor_with_nugget(inputs: &Matrix, inv_len: &[f64]) -> Option<(Cholesky, f64)> {
    let mut nugget = NUGGET_START;
    let mut r = correlation_matrix(inputs, inv_len, 0.0);
    loop {
        for i in 0..r.rows() {
            r[(i, i)] = 1.0 + nugget;
        }
        if let Some(c) = Cholesky::factor(&r) {
            return Some((c, nugget));
        }
        nugget *= 10.0;
        if nugget > NUGGET_MAX * 1.000_001 {
            return None;
        }
    }
}

/// Largest interpolation error at the design points, relative to `max(1, |y|)`.
pub(crate) const INTERPOLATION_TOL: f64 = 1e-10;

pub(crate) fn interpolation_error(doe: &Doe, trend: Trend, r: &Matrix, gls: &fit::Gls) -> f64 {
    let mut f = vec![0.0; gls.beta.len()];
    doe.inputs()
        .iter_rows()
        .zip(doe.outputs())
        .enumerate()
        .map(|(i, (x, y))| {
            trend.eval(x, &mut f);
            let mean = dot(&f, &gls.beta) + dot_compensated(r.row(i), &gls.alpha);
            (mean - y).abs() / y.abs().max(1.0)
        })
        .fold(0.0, f64::max)
}

/// Weights `α = (R + nugget I)⁻¹ (y - F β)` at the current `β`, improved by
/// two steps of iterative refinement with residuals accumulated in extended
/// precision. Zero for an exact trend fit.
pub(crate) fn solve_weights(doe: &Doe, trend: Trend, r: &Matrix, chol: &Cholesky, gls: &mut fit::Gls) {
    if gls.degenerate {
        gls.alpha = vec![0.0; doe.len()];
        return;
    }
    let mut f = vec![0.0; gls.beta.len()];
    let target: Vec<f64> = doe
        .inputs()
        .iter_rows()
        .zip(doe.outputs())
        .map(|(x, y)| {
            trend.eval(x, &mut f);
            y - dot(&f, &gls.beta)
        })
        .collect();
    gls.alpha.clone_from(&target);
    chol.solve_lower_in_place(&mut gls.alpha);
    chol.solve_upper_in_place(&mut gls.alpha);
    for _ in 0..2 {
        let mut d: Vec<f64> = target
            .iter()
            .enumerate()
            .map(|(i, t)| t - dot_compensated(r.row(i), &gls.alpha))
            .collect();
        chol.solve_lower_in_place(&mut d);
        chol.solve_upper_in_place(&mut d);
        gls.alpha.iter_mut().zip(&d).for_each(|(a, d)| *a += d);
    }
}

/// Mean and variance of the kriging predictor at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Prediction {
    pub mean: f64,
    pub variance: f64,
}

impl Prediction {
    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }
}

/// A fitted kriging model.
#[derive(Clone, Debug)]
pub struct KrigingModel {
    trend: Trend,
    lengths: Vec<f64>,
    inv_len: Vec<f64>,
    doe: Doe,
    sigma2: f64,
    beta: Vec<f64>,
    nugget: f64,
    chol: Cholesky,
    /// `L⁻¹ F`.
    f_tilde: Matrix,
    /// Triangular factor of `Fᵀ R⁻¹ F`.
    r_f: Matrix,
    /// `R⁻¹ (y - F β)`.
    alpha: Vec<f64>,
}

impl KrigingModel {
    /// Model at fixed correlation lengths; β and σ² take their
    /// closed-form estimates.
    pub fn with_lengths(doe: Doe, trend: Trend, lengths: Vec<f64>) -> Result<Self> {
        check_lengths(&lengths, doe.dim())?;
        let p = trend.size(doe.dim());
        if doe.len() < p {
            return Err(Error::Identifiability {
                points: doe.len(),
                basis_size: p,
            });
        }
        let inv_len: Vec<f64> = lengths.iter().map(|l| 1.0 / l).collect();
        let (mut chol, mut nugget) = factor_with_nugget(doe.inputs(), &inv_len).ok_or_else(|| singular(&doe))?;
        let mut gls = fit::Gls::new(&chol, trend, &doe)?;
        let mut r = correlation_matrix(doe.inputs(), &inv_len, nugget);
        solve_weights(&doe, trend, &r, &chol, &mut gls);
        // A successful factorization can still be too ill-conditioned for the
        // weights to reproduce the data; a larger nugget restores that.
        let mut trial = nugget;
        while interpolation_error(&doe, trend, &r, &gls) > INTERPOLATION_TOL {
            trial *= 10.0;
            if trial > NUGGET_MAX * 1.000_001 {
                break;
            }
            let r_trial = correlation_matrix(doe.inputs(), &inv_len, trial);
            if let Some(c) = Cholesky::factor(&r_trial) {
                gls = fit::Gls::new(&c, trend, &doe)?;
                solve_weights(&doe, trend, &r_trial, &c, &mut gls);
                chol = c;
                nugget = trial;
                r = r_trial;
            }
        }
        Ok(Self::assemble(doe, trend, lengths, inv_len, chol, nugget, gls))
    }

    fn assemble(
        doe: Doe,
        trend: Trend,
        lengths: Vec<f64>,
        inv_len: Vec<f64>,
        chol: Cholesky,
        nugget: f64,
        gls: fit::Gls,
    ) -> Self {
        Self {
            trend,
            lengths,
            inv_len,
            doe,
            sigma2: gls.sigma2,
            beta: gls.beta,
            nugget,
            chol,
            f_tilde: gls.f_tilde,
            r_f: gls.r_f,
            alpha: gls.alpha,
        }
    }

    pub fn trend(&self) -> Trend {
        self.trend
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn doe(&self) -> &Doe {
        &self.doe
    }

    pub fn dim(&self) -> usize {
        self.doe.dim()
    }

    pub fn process_variance(&self) -> f64 {
        self.sigma2
    }

    pub fn trend_coefficients(&self) -> &[f64] {
        &self.beta
    }

    pub fn nugget(&self) -> f64 {
        self.nugget
    }

    pub fn cholesky(&self) -> &Cholesky {
        &self.chol
    }

    /// Tolerance below which a negative variance is treated as round-off.
    fn variance_tolerance(&self) -> f64 {
        1e-10f64.max(10.0 * self.nugget) * self.sigma2
    }

    /// Correlations between `x` and every design point. An exact match gets
    /// the nugget added, so the model interpolates its own data.
    fn cross_correlation(&self, x: &[f64], r: &mut [f64]) {
        for (ri, xi) in r.iter_mut().zip(self.doe.inputs.iter_rows()) {
            *ri = if xi == x {
                1.0 + self.nugget
            } else {
                scaled_correlation(x, xi, &self.inv_len)
            };
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        self.check_dim(x)?;
        let mut scratch = Scratch::new(self);
        self.predict_with(x, &mut scratch)
    }

    /// Mean only; skips the triangular solves the variance needs.
    pub fn predict_mean(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        let mut r = vec![0.0; self.doe.len()];
        let mut f = vec![0.0; self.beta.len()];
        Ok(self.mean_with(x, &mut r, &mut f))
    }

    pub fn predict_batch(&self, points: &Matrix) -> Result<Vec<Prediction>> {
        if points.cols() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: points.cols(),
            });
        }
        let mut scratch = Scratch::new(self);
        points
            .iter_rows()
            .map(|x| self.predict_with(x, &mut scratch))
            .collect()
    }

    fn mean_with(&self, x: &[f64], r: &mut [f64], f: &mut [f64]) -> f64 {
        self.cross_correlation(x, r);
        self.trend.eval(x, f);
        dot(f, &self.beta) + dot_compensated(r, &self.alpha)
    }

    pub(crate) fn predict_with(&self, x: &[f64], s: &mut Scratch) -> Result<Prediction> {
        let mean = self.mean_with(x, &mut s.r, &mut s.f);
        self.chol.solve_lower_in_place(&mut s.r);
        let explained = dot(&s.r, &s.r);
        // u = F̃ᵀ ρ - f, then ‖R_f⁻ᵀ u‖².
        let p = s.f.len();
        for j in 0..p {
            s.u[j] = -s.f[j];
        }
        for (i, &ri) in s.r.iter().enumerate() {
            let row = self.f_tilde.row(i);
            for j in 0..p {
                s.u[j] += row[j] * ri;
            }
        }
        crate::linalg::solve_upper_transpose(&self.r_f, &mut s.u);
        let trend_term = dot(&s.u, &s.u);
        let mut variance = self.sigma2 * (1.0 - explained + trend_term);
        if variance < 0.0 {
            if -variance <= self.variance_tolerance() || self.sigma2 == 0.0 {
                variance = 0.0;
            } else {
                return Err(Error::NegativeVariance(variance));
            }
        }
        Ok(Prediction { mean, variance })
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Parameters needed to rebuild the model exactly.
    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            trend: self.trend,
            lengths: self.lengths.clone(),
            inputs: self.doe.inputs.iter_rows().map(<[f64]>::to_vec).collect(),
            outputs: self.doe.outputs.clone(),
            process_variance: self.sigma2,
            trend_coefficients: self.beta.clone(),
            nugget: self.nugget,
        }
    }

    /// Rebuilds a model from its snapshot, reusing the stored nugget and
    /// estimates.
    pub fn from_snapshot(s: &Snapshot) -> Result<Self> {
        let dim = s.lengths.len();
        let rows: Vec<&[f64]> = s.inputs.iter().map(Vec::as_slice).collect();
        let inputs = if rows.is_empty() {
            Matrix::with_cols(dim)
        } else {
            Matrix::from_rows(&rows)?
        };
        let doe = Doe::new(inputs, s.outputs.clone())?;
        check_lengths(&s.lengths, doe.dim())?;
        let inv_len: Vec<f64> = s.lengths.iter().map(|l| 1.0 / l).collect();
        let r = correlation_matrix(doe.inputs(), &inv_len, s.nugget);
        let chol = Cholesky::factor(&r).ok_or_else(|| singular(&doe))?;
        let mut gls = fit::Gls::new(&chol, s.trend, &doe)?;
        if s.trend_coefficients.len() != gls.beta.len() {
            return Err(input("snapshot trend coefficients do not match the basis"));
        }
        gls.beta.clone_from(&s.trend_coefficients);
        gls.sigma2 = s.process_variance;
        solve_weights(&doe, s.trend, &r, &chol, &mut gls);
        Ok(Self::assemble(doe, s.trend, s.lengths.clone(), inv_len, chol, s.nugget, gls))
    }
}

/// Reusable buffers for repeated predictions.
#[derive(Clone, Debug)]
pub(crate) struct Scratch {
    r: Vec<f64>,
    f: Vec<f64>,
    u: Vec<f64>,
}

impl Scratch {
    pub(crate) fn new(model: &KrigingModel) -> Self {
        let p = model.beta.len();
        Self {
            r: vec![0.0; model.doe.len()],
            f: vec![0.0; p],
            u: vec![0.0; p],
        }
    }
}

/// Serializable state of a fitted model.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Snapshot {
    pub trend: Trend,
    pub lengths: Vec<f64>,
    pub inputs: Vec<Vec<f64>>,
    pub outputs: Vec<f64>,
    pub process_variance: f64,
    pub trend_coefficients: Vec<f64>,
    pub nugget: f64,
}

fn check_lengths(lengths: &[f64], dim: usize) -> Result<()> {
    if lengths.len() != dim {
        return Err(Error::Dimension {
            expected: dim,
            got: lengths.len(),
        });
    }
    if lengths.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
        return Err(domain("correlation lengths must be positive and finite"));
    }
    Ok(())
}

pub(crate) fn singular(doe: &Doe) -> Error {
    let (first, second, distance) = doe.closest_pair().unwrap_or((0, 0, 0.0));
    Error::SingularCorrelation {
        first,
        second,
        distance,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn correlation_examples() {
        assert_eq!(correlation(&[0.3, 1.0], &[0.3, 1.0], &[1.0, 2.0]).unwrap(), 1.0);
        let e1 = correlation(&[0.0], &[1.0], &[1.0]).unwrap();
        assert!((e1 - 0.367_879_441_171_442_33).abs() < 1e-15);
        let e2 = correlation(&[0.0, 0.0], &[1.0, 2.0], &[1.0, 2.0]).unwrap();
        assert!((e2 - (-2.0f64).exp()).abs() < 1e-15);
        assert!(correlation(&[0.0], &[1.0], &[0.0]).is_err());
        assert!(correlation(&[0.0], &[1.0], &[-1.0]).is_err());
        let a = correlation(&[0.1, 0.7], &[-0.4, 2.0], &[0.5, 3.0]).unwrap();
        let b = correlation(&[-0.4, 2.0], &[0.1, 0.7], &[0.5, 3.0]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn correlation_matrix_is_symmetric_with_unit_diagonal() {
        let x = Matrix::from_rows(&[[0.0, 1.0], [0.5, -0.2], [2.0, 0.3]]).unwrap();
        let r = correlation_matrix(&x, &[1.0, 0.5], 0.0);
        for i in 0..3 {
            assert_eq!(r[(i, i)], 1.0);
            for k in 0..3 {
                assert_eq!(r[(i, k)], r[(k, i)]);
            }
        }
    }

    #[test]
    fn duplicates_rejected() {
        let x = Matrix::from_rows(&[[0.0], [0.0]]).unwrap();
        assert!(Doe::new(x, vec![1.0, 2.0]).is_err());
    }

    #[test]
    fn identifiability() {
        let x = Matrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]]).unwrap();
        let doe = Doe::new(x, vec![1.0, 2.0]).unwrap();
        assert!(matches!(
            KrigingModel::with_lengths(doe, Trend::Linear, vec![1.0, 1.0]),
            Err(Error::Identifiability { points: 2, basis_size: 3 })
        ));
    }
}
