//! Design-parameterised random vectors with independent marginals.

mod marginal;
pub mod normal;

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{domain, Error, Result};
use crate::linalg::Matrix;
use crate::rng;

pub use marginal::{lognormal_shape_scale, Family, Marginal, MarginalSpec};

/// Independent marginals, each optionally tracking a design variable.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RandomVectorSpec {
    pub names: Vec<String>,
    pub marginals: Vec<MarginalSpec>,
}

impl RandomVectorSpec {
    pub fn new(names: Vec<String>, marginals: Vec<MarginalSpec>) -> Result<Self> {
        let spec = Self { names, marginals };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.names.len() != self.marginals.len() {
            return Err(Error::Dimension {
                expected: self.marginals.len(),
                got: self.names.len(),
            });
        }
        for (i, name) in self.names.iter().enumerate() {
            if self.names[..i].contains(name) {
                return Err(domain(format!("duplicate variable name `{name}`")));
            }
        }
        for (name, m) in self.names.iter().zip(&self.marginals) {
            m.validate().map_err(|e| domain(format!("variable `{name}`: {e}")))?;
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.marginals.len()
    }

    /// Number of design variables referenced by the marginals.
    pub fn design_dim(&self) -> usize {
        self.marginals
            .iter()
            .filter_map(|m| m.design_var)
            .map(|j| j + 1)
            .max()
            .unwrap_or(0)
    }

    pub fn stochastic_dim(&self) -> usize {
        self.marginals.iter().filter(|m| m.is_stochastic()).count()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// The spec's own means, one per design variable, taken from the first
    /// marginal linked to each.
    pub fn initial_design(&self) -> Vec<f64> {
        let mut out = alloc::vec![f64::NAN; self.design_dim()];
        for m in self.marginals.iter().rev() {
            if let Some(j) = m.design_var {
                out[j] = m.mean;
            }
        }
        out
    }

    /// Distributions with design-linked means replaced by `design`.
    pub fn resolve(&self, design: &[f64]) -> Result<ResolvedVector> {
        if design.len() < self.design_dim() {
            return Err(Error::Dimension {
                expected: self.design_dim(),
                got: design.len(),
            });
        }
        let mut marginals = Vec::with_capacity(self.dim());
        for (name, m) in self.names.iter().zip(&self.marginals) {
            let mean = m.design_var.map_or(m.mean, |j| design[j]);
            let d = m
                .with_mean(mean)
                .map_err(|e| domain(format!("variable `{name}`: {e}")))?;
            marginals.push(d);
        }
        let stochastic = (0..marginals.len())
            .filter(|&i| marginals[i].is_stochastic())
            .collect();
        Ok(ResolvedVector {
            marginals,
            stochastic,
            links: self.marginals.iter().map(|m| m.design_var).collect(),
            design_dim: self.design_dim(),
        })
    }
}

/// A random vector at a fixed design.
#[derive(Clone, Debug, PartialEq)]
pub struct ResolvedVector {
    marginals: Vec<Marginal>,
    stochastic: Vec<usize>,
    links: Vec<Option<usize>>,
    design_dim: usize,
}

impl ResolvedVector {
    pub fn dim(&self) -> usize {
        self.marginals.len()
    }

    pub fn marginals(&self) -> &[Marginal] {
        &self.marginals
    }

    /// Indices of the stochastic components (the reliability dimensions).
    pub fn stochastic(&self) -> &[usize] {
        &self.stochastic
    }

    pub fn means(&self) -> Vec<f64> {
        self.marginals.iter().map(Marginal::mean).collect()
    }

    /// Physical point from a standard-normal vector over the stochastic
    /// components only.
    pub fn physical_from_reduced(&self, u: &[f64], x: &mut [f64]) {
        debug_assert_eq!(u.len(), self.stochastic.len());
        for (xi, m) in x.iter_mut().zip(&self.marginals) {
            *xi = m.from_standard(0.0);
        }
        for (&i, &ui) in self.stochastic.iter().zip(u) {
            x[i] = self.marginals[i].from_standard(ui);
        }
    }

    /// Full-length standard-normal image; deterministic components map to 0.
    pub fn to_standard(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x.len())?;
        self.marginals
            .iter()
            .zip(x)
            .map(|(m, &xi)| m.to_standard(xi))
            .collect()
    }

    pub fn from_standard(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(u.len())?;
        Ok(self
            .marginals
            .iter()
            .zip(u)
            .map(|(m, &ui)| m.from_standard(ui))
            .collect())
    }

    pub fn sample(&self, count: usize, seed: u64) -> Matrix {
        let mut rng = rng::stream(seed, &[rng::label("sample")]);
        let mut out = Matrix::zeros(count, self.dim());
        let mut u = alloc::vec![0.0; self.stochastic.len()];
        for i in 0..count {
            for ui in u.iter_mut() {
                *ui = rng.sample(StandardNormal);
            }
            self.physical_from_reduced(&u, out.row_mut(i));
        }
        out
    }

    /// `∂ ln f(x | θ) / ∂θ_j` for every design variable.
    pub fn design_scores(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        debug_assert_eq!(out.len(), self.design_dim);
        out.iter_mut().for_each(|o| *o = 0.0);
        for ((m, link), &xi) in self.marginals.iter().zip(&self.links).zip(x) {
            if let Some(j) = *link {
                out[j] += m.mean_score(xi).ok_or_else(|| {
                    domain("mean sensitivity is undefined for a design-linked uniform marginal")
                })?;
            }
        }
        Ok(())
    }

    pub fn design_dim(&self) -> usize {
        self.design_dim
    }

    fn check_dim(&self, got: usize) -> Result<()> {
        if got != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got,
            });
        }
        Ok(())
    }
}

/// Draws `count` rows of `X | θ`.
pub fn sample(spec: &RandomVectorSpec, design: &DesignVector, count: usize, seed: u64) -> Result<Matrix> {
    if count == 0 {
        return Err(domain("sample count must be at least 1"));
    }
    if !design.is_within_bounds() {
        return Err(domain("design lies outside its bounds"));
    }
    Ok(spec.resolve(&design.values)?.sample(count, seed))
}

/// Design values with their admissible box `D_θ`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DesignVector {
    pub values: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl DesignVector {
    pub fn new(values: Vec<f64>, lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let n = values.len();
        if lower.len() != n || upper.len() != n {
            return Err(Error::Dimension {
                expected: n,
                got: lower.len().min(upper.len()),
            });
        }
        for j in 0..n {
            if !(lower[j] <= upper[j]) || !lower[j].is_finite() || !upper[j].is_finite() {
                return Err(domain(format!(
                    "design bounds [{}, {}] of variable {j} are empty or not finite",
                    lower[j], upper[j]
                )));
            }
        }
        Ok(Self { values, lower, upper })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn is_within_bounds(&self) -> bool {
        self.contains(&self.values)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(&v, (&lo, &hi))| lo <= v && v <= hi)
    }

    /// Clamps `x` onto the bounds; returns whether anything moved.
    pub fn project(&self, x: &mut [f64]) -> bool {
        let mut moved = false;
        for (v, (&lo, &hi)) in x.iter_mut().zip(self.lower.iter().zip(&self.upper)) {
            let c = v.clamp(lo, hi);
            moved |= c != *v;
            *v = c;
        }
        moved
    }

    pub fn with_values(&self, values: Vec<f64>) -> Self {
        Self {
            values,
            lower: self.lower.clone(),
            upper: self.upper.clone(),
        }
    }
}

/// Axis-aligned box in physical coordinates.
///
/// Components fixed over the whole augmented space have `lower == upper`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConfidenceBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl ConfidenceBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::Dimension {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l <= u) || !l.is_finite() || !u.is_finite()) {
            return Err(domain("confidence box bounds must be finite with lower <= upper"));
        }
        Ok(Self { lower, upper })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(&v, (&lo, &hi))| lo <= v && v <= hi)
    }

    pub fn width(&self, i: usize) -> f64 {
        self.upper[i] - self.lower[i]
    }

    pub fn diagonal(&self) -> f64 {
        (0..self.dim())
            .map(|i| self.width(i) * self.width(i))
            .sum::<f64>()
            .sqrt()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| 0.5 * (l + u))
            .collect()
    }

    /// Components with a nondegenerate range.
    pub fn active_dims(&self) -> Vec<usize> {
        (0..self.dim()).filter(|&i| self.width(i) > 0.0).collect()
    }
}

/// Box covering `X` at reliability level `beta` for every design in the
/// bounds.
///
/// Every supported quantile is increasing in the mean, so the extremes are
/// reached at the two end points of each linked interval.
pub fn augmented_confidence_box(
    spec: &RandomVectorSpec,
    lower: &[f64],
    upper: &[f64],
    beta: f64,
) -> Result<ConfidenceBox> {
    if !(beta > 0.0) {
        return Err(domain(format!("confidence level must be positive, got {beta}")));
    }
    let nd = spec.design_dim();
    if lower.len() < nd || upper.len() < nd {
        return Err(Error::Dimension {
            expected: nd,
            got: lower.len().min(upper.len()),
        });
    }
    if lower.iter().zip(upper).any(|(l, u)| !(l <= u)) {
        return Err(domain("design bounds are empty"));
    }
    let mut lo = Vec::with_capacity(spec.dim());
    let mut hi = Vec::with_capacity(spec.dim());
    for (name, m) in spec.names.iter().zip(&spec.marginals) {
        let (m_lo, m_hi) = m.design_var.map_or((m.mean, m.mean), |j| (lower[j], upper[j]));
        let at = |mean: f64| {
            m.with_mean(mean)
                .map_err(|e| domain(format!("variable `{name}` at mean {mean}: {e}")))
        };
        lo.push(at(m_lo)?.from_standard(-beta));
        hi.push(at(m_hi)?.from_standard(beta));
    }
    ConfidenceBox::new(lo, hi)
}
