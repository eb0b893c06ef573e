//! Subset simulation: failure probabilities, generalized reliability
//! indices and score-function sensitivities to the design.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{domain, Error, Result};
use crate::exec::{Executor, LimitState};
use crate::linalg::Matrix;
use crate::probability::{normal, ResolvedVector};
use crate::rng;

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SubsetConfig {
    pub samples_per_level: usize,
    pub level_probability: f64,
    /// Half-width of the componentwise uniform proposal, in standard-normal
    /// units.
    pub proposal_spread: f64,
    pub max_levels: usize,
    pub seed: u64,
}

impl Default for SubsetConfig {
    fn default() -> Self {
        Self {
            samples_per_level: 10_000,
            level_probability: 0.1,
            proposal_spread: 1.0,
            max_levels: 20,
            seed: 0,
        }
    }
}

impl SubsetConfig {
    /// Number of Markov chains (seeds) per level.
    pub fn chains(&self) -> usize {
        (self.samples_per_level as f64 * self.level_probability).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let p0 = self.level_probability;
        if !(p0 > 0.0 && p0 < 1.0) {
            return Err(domain(format!("level probability {p0} is outside (0, 1)")));
        }
        let nc = self.chains();
        let exact = (self.samples_per_level as f64 * p0 - nc as f64).abs() < 1e-9;
        if !exact || nc < 2 {
            return Err(domain(format!(
                "samples_per_level × level_probability must be an integer >= 2, got {}",
                self.samples_per_level as f64 * p0
            )));
        }
        if self.samples_per_level % nc != 0 {
            return Err(domain("samples_per_level must be a multiple of the number of chains"));
        }
        if !(self.proposal_spread > 0.0 && self.proposal_spread.is_finite()) {
            return Err(domain("proposal spread must be positive"));
        }
        if self.max_levels == 0 {
            return Err(domain("max_levels must be at least 1"));
        }
        Ok(())
    }
}

/// A derivative estimate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Sensitivity {
    pub value: f64,
    pub std_error: f64,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SubsetResult {
    pub pf: f64,
    /// Coefficient of variation of `pf`, with each level's term inflated by
    /// the correlation of the chain states.
    pub cov: f64,
    /// The same, ignoring the correlation of states along each chain.
    pub cov_independent: f64,
    /// `-Φ⁻¹(pf)`; `-∞` when every sample fails.
    pub beta: f64,
    pub levels: usize,
    /// Intermediate thresholds followed by the final threshold 0.
    pub thresholds: Vec<f64>,
    /// `∂pf/∂θ_j` for every design variable; `None` when some linked
    /// marginal has no mean score.
    pub sensitivities: Option<Vec<Sensitivity>>,
    pub calls: usize,
    /// Physical samples of the last level and their limit-state values.
    pub final_points: Matrix,
    pub final_values: Vec<f64>,
    /// `level_probability^(levels - 1)`, the probability of the last
    /// conditioning event.
    pub conditioning_probability: f64,
}

impl SubsetResult {
    /// Failure probability of another limit state `h` from its values on
    /// the last level.
    ///
    /// Only meaningful when `{h <= 0}` is contained in the last
    /// conditioning event of this run.
    pub fn nested_probability(&self, values: &[f64]) -> f64 {
        let n = values.iter().filter(|&&v| v <= 0.0).count();
        self.conditioning_probability * n as f64 / values.len() as f64
    }
}

/// `-Φ⁻¹(pf)` for `pf` in (0, 1).
pub fn generalized_beta(pf: f64) -> Result<f64> {
    if !(pf > 0.0 && pf < 1.0) {
        return Err(domain(format!("failure probability {pf} is outside (0, 1)")));
    }
    Ok(-normal::quantile(pf))
}

/// Subset simulation of `P[g(X) <= 0]` with modified-Metropolis chains in
/// standard-normal space.
pub fn subset_simulate(
    g: &dyn LimitState,
    vector: &ResolvedVector,
    config: &SubsetConfig,
    exec: &dyn Executor,
) -> Result<SubsetResult> {
    config.validate()?;
    let d = vector.stochastic().len();
    if d == 0 {
        return Err(domain("the random vector has no stochastic component"));
    }
    let n = config.samples_per_level;
    let p0 = config.level_probability;
    let nc = config.chains();
    let chain_len = n / nc;
    let base = rng::label("subset");

    let mut u = Matrix::zeros(n, d);
    {
        let mut r = rng::stream(config.seed, &[base, 0]);
        for i in 0..n {
            for v in u.row_mut(i).iter_mut() {
                *v = r.sample(StandardNormal);
            }
        }
    }
    let mut x = to_physical(vector, &u);
    let mut values = vec![0.0; n];
    exec.evaluate(g, &x, &mut values);
    check_finite(&values, 0)?;
    let mut calls = n;

    let mut thresholds = Vec::new();
    let mut cov2 = 0.0;
    let mut cov2_independent = 0.0;
    let mut level = 0;
    loop {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
        let failures = values.iter().filter(|&&v| v <= 0.0).count();
        if failures >= nc {
            let frac = failures as f64 / n as f64;
            let conditioning = p0.powi(level as i32);
            let pf = conditioning * frac;
            let term = (1.0 - frac) / (n as f64 * frac);
            let gamma = if level == 0 { 0.0 } else { chain_correlation(&values, nc, chain_len, 0.0) };
            cov2 += term * (1.0 + gamma);
            cov2_independent += term;
            thresholds.push(0.0);
            let sensitivities = pf_sensitivities(pf, cov2.sqrt(), &x, &values, vector).ok();
            return Ok(SubsetResult {
                pf,
                cov: cov2.sqrt(),
                cov_independent: cov2_independent.sqrt(),
                beta: -normal::quantile(pf),
                levels: level + 1,
                thresholds,
                sensitivities,
                calls,
                final_points: x,
                final_values: values,
                conditioning_probability: conditioning,
            });
        }
        if level + 1 >= config.max_levels {
            return Err(Error::PfFloor {
                levels: level + 1,
                partial_pf: p0.powi(level as i32 + 1),
            });
        }
        let threshold = 0.5 * (values[order[nc - 1]] + values[order[nc]]);
        thresholds.push(threshold);
        let term = (1.0 - p0) / (n as f64 * p0);
        let gamma = if level == 0 { 0.0 } else { chain_correlation(&values, nc, chain_len, threshold) };
        cov2 += term * (1.0 + gamma);
        cov2_independent += term;
        level += 1;

        // Chain states: current point of every chain.
        let mut cur_u = u.select_rows(&order[..nc]);
        let mut cur_g: Vec<f64> = order[..nc].iter().map(|&i| values[i]).collect();
        let mut streams: Vec<rng::Stream> = (0..nc)
            .map(|c| rng::stream(config.seed, &[base, level as u64, c as u64]))
            .collect();
        let mut next_u = Matrix::zeros(n, d);
        let mut next_g = vec![0.0; n];
        let mut cand = Matrix::zeros(nc, d);
        let mut cand_g = vec![0.0; nc];
        for step in 0..chain_len {
            for c in 0..nc {
                let r = &mut streams[c];
                let from = cur_u.row(c);
                let to = cand.row_mut(c);
                for k in 0..d {
                    let xi = from[k] + r.random_range(-config.proposal_spread..config.proposal_spread);
                    let ratio = (-0.5 * (xi * xi - from[k] * from[k])).exp();
                    to[k] = if r.random::<f64>() < ratio { xi } else { from[k] };
                }
            }
            let cand_x = to_physical(vector, &cand);
            exec.evaluate(g, &cand_x, &mut cand_g);
            check_finite(&cand_g, level)?;
            calls += nc;
            for c in 0..nc {
                if cand_g[c] <= threshold {
                    cur_u.row_mut(c).copy_from_slice(cand.row(c));
                    cur_g[c] = cand_g[c];
                }
                let slot = c * chain_len + step;
                next_u.row_mut(slot).copy_from_slice(cur_u.row(c));
                next_g[slot] = cur_g[c];
            }
        }
        u = next_u;
        values = next_g;
        x = to_physical(vector, &u);
    }
}

/// Correlation factor `γ = 2 Σ_k (1 - k/L) ρ(k)` of the indicator
/// `g <= threshold` along the chains, stored chain after chain with `L`
/// states each.
fn chain_correlation(values: &[f64], chains: usize, chain_len: usize, threshold: f64) -> f64 {
    let n = values.len() as f64;
    let ind: Vec<f64> = values.iter().map(|&v| f64::from(u8::from(v <= threshold))).collect();
    let p = ind.iter().sum::<f64>() / n;
    let r0 = p * (1.0 - p);
    if r0 <= 0.0 {
        return 0.0;
    }
    let mut gamma = 0.0;
    for k in 1..chain_len {
        let mut sum = 0.0;
        for c in 0..chains {
            let chain = &ind[c * chain_len..(c + 1) * chain_len];
            sum += chain.iter().zip(&chain[k..]).map(|(a, b)| a * b).sum::<f64>();
        }
        let rk = sum / (n - (k * chains) as f64) - p * p;
        gamma += 2.0 * (1.0 - k as f64 / chain_len as f64) * rk / r0;
    }
    gamma.max(0.0)
}

fn to_physical(vector: &ResolvedVector, u: &Matrix) -> Matrix {
    let mut x = Matrix::zeros(u.rows(), vector.dim());
    for i in 0..u.rows() {
        vector.physical_from_reduced(u.row(i), x.row_mut(i));
    }
    x
}

fn check_finite(values: &[f64], level: usize) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite { level, index }),
        None => Ok(()),
    }
}

/// Score-function estimate of `∂pf/∂θ_j = pf · E[∂ ln f(X|θ)/∂θ_j | failure]`
/// from the failing samples of the last level.
pub fn pf_sensitivities(
    pf: f64,
    pf_cov: f64,
    points: &Matrix,
    values: &[f64],
    vector: &ResolvedVector,
) -> Result<Vec<Sensitivity>> {
    let nd = vector.design_dim();
    let mut sum = vec![0.0; nd];
    let mut sum2 = vec![0.0; nd];
    let mut score = vec![0.0; nd];
    let mut count = 0usize;
    for (x, &v) in points.iter_rows().zip(values) {
        if v > 0.0 {
            continue;
        }
        vector.design_scores(x, &mut score)?;
        for j in 0..nd {
            sum[j] += score[j];
            sum2[j] += score[j] * score[j];
        }
        count += 1;
    }
    if count == 0 {
        return Ok(vec![Sensitivity { value: 0.0, std_error: 0.0 }; nd]);
    }
    let nf = count as f64;
    Ok((0..nd)
        .map(|j| {
            let mean = sum[j] / nf;
            let var = (sum2[j] / nf - mean * mean).max(0.0);
            let se_mean = (var / nf).sqrt();
            let value = pf * mean;
            let std_error = ((pf * se_mean).powi(2) + (value * pf_cov).powi(2)).sqrt();
            Sensitivity { value, std_error }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::{Counted, Serial};
    use crate::probability::{MarginalSpec, RandomVectorSpec};
    use alloc::string::String;

    fn standard(n: usize) -> ResolvedVector {
        let names: Vec<String> = (0..n).map(|i| format!("u{i}")).collect();
        RandomVectorSpec::new(names, vec![MarginalSpec::normal(0.0, 1.0); n])
            .unwrap()
            .resolve(&[])
            .unwrap()
    }

    #[test]
    fn linear_tail() {
        let v = standard(2);
        let g = Counted::new(|u: &[f64]| 3.0 - u[0]);
        let cfg = SubsetConfig {
            seed: 3,
            ..SubsetConfig::default()
        };
        let r = subset_simulate(&g, &v, &cfg, &Serial).unwrap();
        let exact = normal::cdf(-3.0);
        assert!((r.pf - exact).abs() < 3.0 * r.cov * exact, "{} vs {exact}", r.pf);
        assert!((2.9..=3.1).contains(&r.beta));
        assert_eq!(r.calls, 10_000 * r.levels);
        assert_eq!(g.calls(), r.calls);
        assert!(r.thresholds.windows(2).all(|w| w[0] > w[1]));
        assert_eq!(*r.thresholds.last().unwrap(), 0.0);
    }

    #[test]
    fn never_failing_hits_floor() {
        let v = standard(1);
        let cfg = SubsetConfig {
            samples_per_level: 100,
            max_levels: 5,
            ..SubsetConfig::default()
        };
        let e = subset_simulate(&|_: &[f64]| 1.0, &v, &cfg, &Serial).unwrap_err();
        assert!(matches!(e, Error::PfFloor { levels: 5, .. }));
    }

    #[test]
    fn always_failing() {
        let v = standard(1);
        let cfg = SubsetConfig {
            samples_per_level: 100,
            ..SubsetConfig::default()
        };
        let r = subset_simulate(&|_: &[f64]| -1.0, &v, &cfg, &Serial).unwrap();
        assert_eq!(r.pf, 1.0);
        assert_eq!(r.levels, 1);
        assert_eq!(r.beta, f64::NEG_INFINITY);
    }

    #[test]
    fn non_finite_is_reported() {
        let v = standard(1);
        let cfg = SubsetConfig {
            samples_per_level: 100,
            ..SubsetConfig::default()
        };
        let e = subset_simulate(&|_: &[f64]| f64::NAN, &v, &cfg, &Serial).unwrap_err();
        assert!(matches!(e, Error::NonFinite { level: 0, index: 0 }));
    }

    #[test]
    fn config_validation() {
        let bad = SubsetConfig {
            samples_per_level: 15,
            ..SubsetConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = SubsetConfig {
            level_probability: 1.0,
            ..SubsetConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn beta_examples() {
        assert_eq!(generalized_beta(0.5).unwrap(), 0.0);
        assert!((generalized_beta(normal::cdf(-3.0)).unwrap() - 3.0).abs() < 1e-10);
        assert!(generalized_beta(0.68).unwrap() < 0.0);
        assert!(generalized_beta(0.0).is_err());
        assert!(generalized_beta(1.0).is_err());
    }

    #[test]
    fn unlinked_variables_have_zero_sensitivity() {
        let spec = RandomVectorSpec::new(
            vec!["a".into(), "b".into()],
            vec![MarginalSpec::normal(0.0, 1.0), MarginalSpec::normal(2.0, 1.0).linked(1)],
        )
        .unwrap();
        // No marginal tracks design variable 0.
        let v = spec.resolve(&[5.0, 2.0]).unwrap();
        let cfg = SubsetConfig {
            samples_per_level: 2000,
            seed: 1,
            ..SubsetConfig::default()
        };
        let r = subset_simulate(&|x: &[f64]| 2.0 - x[0], &v, &cfg, &Serial).unwrap();
        assert_eq!(r.sensitivities.unwrap()[0].value, 0.0);
    }
}
