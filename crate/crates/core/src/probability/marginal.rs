use alloc::format;
#[allow(unused_imports)]
use num_traits::Float;

use super::normal;
use crate::error::{domain, Result};

const SQRT_3: f64 = 1.732_050_807_568_877_2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(rename_all = "lowercase")
)]
pub enum Family {
    Normal,
    Lognormal,
    Uniform,
    Deterministic,
}

/// A marginal law given by its first two moments.
///
/// When `design_var` is set, the mean tracks that component of the design
/// vector while the standard deviation stays fixed.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MarginalSpec {
    pub family: Family,
    pub mean: f64,
    pub std_dev: f64,
    pub design_var: Option<usize>,
}

impl MarginalSpec {
    pub fn normal(mean: f64, std_dev: f64) -> Self {
        Self::new(Family::Normal, mean, std_dev)
    }

    pub fn lognormal(mean: f64, std_dev: f64) -> Self {
        Self::new(Family::Lognormal, mean, std_dev)
    }

    pub fn uniform(mean: f64, std_dev: f64) -> Self {
        Self::new(Family::Uniform, mean, std_dev)
    }

    pub fn deterministic(value: f64) -> Self {
        Self::new(Family::Deterministic, value, 0.0)
    }

    fn new(family: Family, mean: f64, std_dev: f64) -> Self {
        Self {
            family,
            mean,
            std_dev,
            design_var: None,
        }
    }

    /// Links the mean to design component `index`.
    pub fn linked(mut self, index: usize) -> Self {
        self.design_var = Some(index);
        self
    }

    pub fn is_stochastic(&self) -> bool {
        self.family != Family::Deterministic
    }

    pub fn validate(&self) -> Result<()> {
        if !self.mean.is_finite() || !self.std_dev.is_finite() {
            return Err(domain("marginal moments must be finite"));
        }
        match self.family {
            Family::Deterministic if self.std_dev != 0.0 => {
                Err(domain("deterministic marginal must have zero std_dev"))
            }
            Family::Deterministic => Ok(()),
            _ if self.std_dev <= 0.0 => Err(domain(format!(
                "{:?} marginal needs a positive std_dev, got {}",
                self.family, self.std_dev
            ))),
            Family::Lognormal if self.mean <= 0.0 => Err(domain(format!(
                "lognormal marginal needs a positive mean, got {}",
                self.mean
            ))),
            _ => Ok(()),
        }
    }

    /// The distribution with its mean replaced by `mean`.
    pub fn with_mean(&self, mean: f64) -> Result<Marginal> {
        Marginal::from_moments(self.family, mean, self.std_dev)
    }

    /// The distribution at the spec's own mean.
    pub fn distribution(&self) -> Result<Marginal> {
        self.with_mean(self.mean)
    }

    pub fn quantile(&self, p: f64) -> Result<f64> {
        self.distribution()?.quantile(p)
    }
}

/// `(ln-location, ln-scale)` of the lognormal law with the given mean and
/// standard deviation.
pub fn lognormal_shape_scale(mean: f64, std_dev: f64) -> Result<(f64, f64)> {
    if !(mean > 0.0) {
        return Err(domain(format!("lognormal mean must be positive, got {mean}")));
    }
    if !(std_dev >= 0.0) {
        return Err(domain(format!(
            "lognormal std_dev must be nonnegative, got {std_dev}"
        )));
    }
    let cv = std_dev / mean;
    let var_log = (cv * cv).ln_1p();
    Ok((mean.ln() - 0.5 * var_log, var_log.sqrt()))
}

/// A fully parameterised marginal distribution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Marginal {
    Normal { mean: f64, std_dev: f64 },
    Lognormal { mean: f64, std_dev: f64, location: f64, scale: f64 },
    Uniform { lower: f64, upper: f64 },
    Deterministic(f64),
}

impl Marginal {
    pub fn from_moments(family: Family, mean: f64, std_dev: f64) -> Result<Self> {
        MarginalSpec::new(family, mean, std_dev).validate()?;
        Ok(match family {
            Family::Normal => Marginal::Normal { mean, std_dev },
            Family::Lognormal => {
                let (location, scale) = lognormal_shape_scale(mean, std_dev)?;
                Marginal::Lognormal {
                    mean,
                    std_dev,
                    location,
                    scale,
                }
            }
            Family::Uniform => Marginal::Uniform {
                lower: mean - SQRT_3 * std_dev,
                upper: mean + SQRT_3 * std_dev,
            },
            Family::Deterministic => Marginal::Deterministic(mean),
        })
    }

    pub fn is_stochastic(&self) -> bool {
        !matches!(self, Marginal::Deterministic(_))
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Marginal::Normal { mean, .. } | Marginal::Lognormal { mean, .. } => mean,
            Marginal::Uniform { lower, upper } => 0.5 * (lower + upper),
            Marginal::Deterministic(v) => v,
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            Marginal::Normal { mean, std_dev } => normal::cdf((x - mean) / std_dev),
            Marginal::Lognormal {
                location, scale, ..
            } => {
                if x <= 0.0 {
                    0.0
                } else {
                    normal::cdf((x.ln() - location) / scale)
                }
            }
            Marginal::Uniform { lower, upper } => ((x - lower) / (upper - lower)).clamp(0.0, 1.0),
            Marginal::Deterministic(v) => {
                if x >= v {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match *self {
            Marginal::Normal { mean, std_dev } => normal::pdf((x - mean) / std_dev) / std_dev,
            Marginal::Lognormal {
                location, scale, ..
            } => {
                if x <= 0.0 {
                    0.0
                } else {
                    normal::pdf((x.ln() - location) / scale) / (scale * x)
                }
            }
            Marginal::Uniform { lower, upper } => {
                if (lower..=upper).contains(&x) {
                    1.0 / (upper - lower)
                } else {
                    0.0
                }
            }
            Marginal::Deterministic(_) => 0.0,
        }
    }

    /// Value at standard-normal level `u`, i.e. `F⁻¹(Φ(u))`.
    pub fn from_standard(&self, u: f64) -> f64 {
        match *self {
            Marginal::Normal { mean, std_dev } => mean + std_dev * u,
            Marginal::Lognormal {
                location, scale, ..
            } => (location + scale * u).exp(),
            Marginal::Uniform { lower, upper } => {
                // Pick the tail that keeps relative precision.
                if u <= 0.0 {
                    lower + (upper - lower) * normal::cdf(u)
                } else {
                    upper - (upper - lower) * normal::sf(u)
                }
            }
            Marginal::Deterministic(v) => v,
        }
    }

    /// `Φ⁻¹(F(x))`; deterministic components map to 0.
    pub fn to_standard(&self, x: f64) -> Result<f64> {
        match *self {
            Marginal::Normal { mean, std_dev } => Ok((x - mean) / std_dev),
            Marginal::Lognormal {
                location, scale, ..
            } => {
                if !(x > 0.0) {
                    return Err(domain(format!("{x} is outside the lognormal support")));
                }
                Ok((x.ln() - location) / scale)
            }
            Marginal::Uniform { lower, upper } => {
                if !(lower..=upper).contains(&x) {
                    return Err(domain(format!(
                        "{x} is outside the uniform support [{lower}, {upper}]"
                    )));
                }
                let mid = 0.5 * (lower + upper);
                if x <= mid {
                    Ok(normal::quantile((x - lower) / (upper - lower)))
                } else {
                    Ok(-normal::quantile((upper - x) / (upper - lower)))
                }
            }
            Marginal::Deterministic(v) => {
                if (x - v).abs() > 1e-9 * v.abs().max(1.0) {
                    return Err(domain(format!("{x} differs from the deterministic value {v}")));
                }
                Ok(0.0)
            }
        }
    }

    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(domain(format!("probability {p} is outside (0, 1)")));
        }
        Ok(self.from_standard(normal::quantile(p)))
    }

    /// `∂ ln f(x) / ∂ mean` at fixed standard deviation.
    ///
    /// `None` for the uniform law, whose support moves with the mean.
    /// Deterministic components have no density and contribute zero.
    pub fn mean_score(&self, x: f64) -> Option<f64> {
        match *self {
            Marginal::Normal { mean, std_dev } => Some((x - mean) / (std_dev * std_dev)),
            Marginal::Lognormal {
                mean,
                std_dev,
                location,
                scale,
            } => {
                if !(x > 0.0) {
                    return Some(0.0);
                }
                let var_log = scale * scale;
                let s2 = std_dev * std_dev;
                let dvar = -2.0 * s2 / (mean * (mean * mean + s2));
                let dloc = 1.0 / mean - 0.5 * dvar;
                let a = x.ln() - location;
                Some(-0.5 * dvar / var_log + a * dloc / var_log + a * a * dvar / (2.0 * var_log * var_log))
            }
            Marginal::Uniform { .. } => None,
            Marginal::Deterministic(_) => Some(0.0),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lognormal_moments(location: f64, scale: f64) -> (f64, f64) {
        let mean = (location + 0.5 * scale * scale).exp();
        let var = ((scale * scale).exp() - 1.0) * (2.0 * location + scale * scale).exp();
        (mean, var.sqrt())
    }

    #[test]
    fn shape_scale_zero_variance() {
        let (loc, scale) = lognormal_shape_scale(1.0, 0.0).unwrap();
        assert_eq!(loc, 0.0);
        assert_eq!(scale, 0.0);
    }

    #[test]
    fn shape_scale_round_trips_moments() {
        let (loc, scale) = lognormal_shape_scale(200_000.0, 10_000.0).unwrap();
        assert!((scale - 1.0025f64.ln().sqrt()).abs() < 1e-15);
        let (m, s) = lognormal_moments(loc, scale);
        assert!(((m - 200_000.0) / 200_000.0).abs() < 1e-12);
        assert!(((s - 10_000.0) / 10_000.0).abs() < 1e-12);

        // Yield stress row: 5 % coefficient of variation.
        let (loc, scale) = lognormal_shape_scale(390.0, 19.5).unwrap();
        let (m, s) = lognormal_moments(loc, scale);
        assert!(((m - 390.0) / 390.0).abs() < 1e-12);
        assert!(((s - 19.5) / 19.5).abs() < 1e-12);
    }

    #[test]
    fn shape_scale_rejects_nonpositive_mean() {
        assert!(matches!(lognormal_shape_scale(0.0, 1.0), Err(crate::Error::Domain(_))));
        assert!(lognormal_shape_scale(-2.0, 1.0).is_err());
    }

    #[test]
    fn quantiles() {
        assert_eq!(MarginalSpec::normal(0.0, 1.0).quantile(0.5).unwrap(), 0.0);
        let u = MarginalSpec::uniform(3.0, 2.0 / SQRT_3);
        assert!((u.quantile(0.25).unwrap() - (1.0 + 0.25 * 4.0)).abs() < 1e-12);
        assert_eq!(MarginalSpec::deterministic(7.0).quantile(0.3).unwrap(), 7.0);
        assert!(MarginalSpec::normal(0.0, 1.0).quantile(1.0).is_err());
        assert!(MarginalSpec::normal(0.0, 1.0).quantile(0.0).is_err());
    }

    #[test]
    fn imperfection_mean_is_a_third_of_the_upper_quantile() {
        // 50 % CoV lognormal: the 99.5 % quantile is about three times the mean.
        let a = 1.0;
        let spec = MarginalSpec::lognormal(a / 3.0, 0.5 * a / 3.0);
        let ratio = spec.quantile(0.995).unwrap() / spec.mean;
        assert!((ratio - 3.0).abs() / 3.0 < 0.05, "ratio {ratio}");
    }

    #[test]
    fn standard_transforms() {
        // Moments of the lognormal law with ln-location 0 and ln-scale 1.
        let mean = 0.5f64.exp();
        let std_dev = mean * (1.0f64.exp() - 1.0).sqrt();
        let ln = Marginal::from_moments(Family::Lognormal, mean, std_dev).unwrap();
        assert!((ln.to_standard(core::f64::consts::E).unwrap() - 1.0).abs() < 1e-12);
        let n = Marginal::from_moments(Family::Normal, 3.0, 2.0).unwrap();
        assert_eq!(n.to_standard(3.0).unwrap(), 0.0);
        let l = Marginal::from_moments(Family::Lognormal, 24.0, 0.72).unwrap();
        let median = l.from_standard(0.0);
        assert!(l.to_standard(median).unwrap().abs() < 1e-12);
        assert!(l.to_standard(-1.0).is_err());
        let u = Marginal::from_moments(Family::Uniform, 0.0, 1.0).unwrap();
        assert!(u.to_standard(5.0).is_err());
    }

    #[test]
    fn validation() {
        assert!(MarginalSpec::normal(0.0, 0.0).validate().is_err());
        assert!(MarginalSpec::lognormal(-1.0, 1.0).validate().is_err());
        assert!(MarginalSpec::deterministic(2.0).validate().is_ok());
        let bad = MarginalSpec {
            family: Family::Deterministic,
            mean: 1.0,
            std_dev: 0.5,
            design_var: None,
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn lognormal_score_matches_finite_difference() {
        let sd = 3.0;
        for &mean in &[10.0, 24.0, 80.0] {
            for &x in &[5.0, 20.0, 30.0, 90.0] {
                let lnf = |m: f64| {
                    let (loc, scale) = lognormal_shape_scale(m, sd).unwrap();
                    let z = (x.ln() - loc) / scale;
                    -scale.ln() - 0.5 * z * z
                };
                let h = 1e-5 * mean;
                let fd = (lnf(mean + h) - lnf(mean - h)) / (2.0 * h);
                let got = Marginal::from_moments(Family::Lognormal, mean, sd)
                    .unwrap()
                    .mean_score(x)
                    .unwrap();
                assert!((fd - got).abs() < 1e-6 * (1.0 + got.abs()), "mean {mean} x {x}: {fd} vs {got}");
            }
        }
    }
}
