//! Adaptive refinement of kriging surrogates inside their margin of
//! uncertainty, with the bracketing-probability stopping rule.

mod kmeans;
mod slice;
mod surrogate;

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{domain, Error, Result};
use crate::exec::{Executor, LimitState};
use crate::kriging::Prediction;
use crate::linalg::Matrix;
use crate::probability::{normal, ConfidenceBox, ResolvedVector};
use crate::reliability::{subset_simulate, SubsetConfig};
use crate::rng;

pub use kmeans::{kmeans, Clustering};
pub use slice::{slice_sample, SliceOptions};
pub use surrogate::Surrogate;

/// Default half-width factor of the margin, `Φ⁻¹(0.975)`.
pub const DEFAULT_K: f64 = 1.96;

/// Probability that the surrogate's Gaussian prediction falls in
/// `[-kσ, kσ]`, i.e. `Φ(k - μ/σ) - Φ(-k - μ/σ)`.
///
/// With `σ = 0` this is the indicator of `μ = 0`.
pub fn margin_probability(mean: f64, std_dev: f64, k: f64) -> f64 {
    if !(std_dev > 0.0) {
        return if mean == 0.0 { 1.0 } else { 0.0 };
    }
    let z = mean / std_dev;
    let a = k - z;
    let b = -k - z;
    // Evaluate on the side where both terms are small.
    let p = if b > 0.0 {
        normal::sf(b) - normal::sf(a)
    } else if a < 0.0 {
        normal::cdf(a) - normal::cdf(b)
    } else {
        1.0 - normal::sf(a) - normal::cdf(b)
    };
    p.clamp(0.0, 1.0)
}

/// Log of the refinement density: the margin probability weighted by the
/// uniform law on the box. `-∞` outside the box.
pub fn refinement_log_density(prediction: Prediction, inside: bool, k: f64) -> f64 {
    if !inside {
        return f64::NEG_INFINITY;
    }
    margin_probability(prediction.mean, prediction.std_dev(), k).ln()
}

/// Mean margin probability over a fixed set of reduced-coordinate points.
pub fn margin_volume(surrogate: &Surrogate, points: &Matrix, k: f64) -> Result<f64> {
    let preds = surrogate.model().predict_batch(points)?;
    Ok(preds
        .iter()
        .map(|p| margin_probability(p.mean, p.std_dev(), k))
        .sum::<f64>()
        / points.rows().max(1) as f64)
}

/// Lower, central and upper failure-probability estimates.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Bracket {
    pub pf_plus: f64,
    pub pf_zero: f64,
    pub pf_minus: f64,
    /// Coefficient of variation of the underlying simulation.
    pub cov: f64,
    /// `log10(pf_minus) - log10(pf_plus)`.
    pub spread: f64,
}

impl Bracket {
    fn new(pf_plus: f64, pf_zero: f64, pf_minus: f64, cov: f64) -> Self {
        let spread = if pf_minus == 0.0 {
            0.0
        } else if pf_plus == 0.0 {
            f64::INFINITY
        } else {
            pf_minus.log10() - pf_plus.log10()
        };
        Self {
            pf_plus,
            pf_zero,
            pf_minus,
            cov,
            spread,
        }
    }
}

/// System limit state `min_l (μ_l + s_l σ_l)`.
struct Shifted<'a> {
    surrogates: &'a [Surrogate],
    shifts: Vec<f64>,
}

impl LimitState for Shifted<'_> {
    fn evaluate(&self, x: &[f64]) -> f64 {
        let mut g = f64::INFINITY;
        for (s, &shift) in self.surrogates.iter().zip(&self.shifts) {
            let v = if shift == 0.0 {
                s.predict_mean(x)
            } else {
                s.predict(x).map(|p| p.mean + shift * p.std_dev())
            };
            match v {
                Ok(v) => g = g.min(v),
                Err(_) => return f64::NAN,
            }
        }
        g
    }
}

/// Pointwise minimum of the surrogate means.
#[derive(Clone, Copy, Debug)]
pub struct SurrogateMean<'a>(pub &'a [Surrogate]);

impl LimitState for SurrogateMean<'_> {
    fn evaluate(&self, x: &[f64]) -> f64 {
        self.0
            .iter()
            .map(|s| s.predict_mean(x).unwrap_or(f64::NAN))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Failure probabilities of the surrogate system shifted by `-kσ`, `0` and
/// `+kσ`.
///
/// `only` restricts the shift to a single surrogate. One subset simulation
/// is run on the widest failure domain; the two narrower domains are nested
/// in its last conditioning event, so their probabilities follow from the
/// same samples and the ordering `pf_plus <= pf_zero <= pf_minus` holds
/// exactly.
pub fn bracketing(
    surrogates: &[Surrogate],
    only: Option<usize>,
    vector: &ResolvedVector,
    k: f64,
    config: &SubsetConfig,
    exec: &dyn Executor,
) -> Result<Bracket> {
    if surrogates.is_empty() {
        return Err(domain("no surrogate to bracket"));
    }
    let shifts = |s: f64| -> Vec<f64> {
        (0..surrogates.len())
            .map(|l| if only.map_or(true, |o| o == l) { s } else { 0.0 })
            .collect()
    };
    let widest = Shifted {
        surrogates,
        shifts: shifts(-k),
    };
    let result = match subset_simulate(&widest, vector, config, exec) {
        Ok(r) => r,
        Err(Error::PfFloor { .. }) => return Ok(Bracket::new(0.0, 0.0, 0.0, 0.0)),
        Err(e) => return Err(e),
    };
    let nested = |s: f64| {
        let g = Shifted {
            surrogates,
            shifts: shifts(s),
        };
        let mut v = vec![0.0; result.final_points.rows()];
        exec.evaluate(&g, &result.final_points, &mut v);
        result.nested_probability(&v)
    };
    let pf_zero = nested(0.0);
    let pf_plus = nested(k);
    Ok(Bracket::new(pf_plus, pf_zero, result.pf, result.cov))
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RefineOptions {
    pub k: f64,
    /// Candidates drawn from the refinement density per round.
    pub candidates: usize,
    /// Points added per surrogate per round.
    pub clusters: usize,
    /// Target log10 spread of the bracketing probabilities.
    pub epsilon: f64,
    /// Maximum design size (true-function calls) per surrogate.
    pub budget: usize,
    pub max_rounds: usize,
    pub slice: SliceOptions,
    pub subset: SubsetConfig,
}

impl Default for RefineOptions {
    fn default() -> Self {
        Self {
            k: DEFAULT_K,
            candidates: 10_000,
            clusters: 50,
            epsilon: 0.05,
            budget: 1_000,
            max_rounds: 50,
            slice: SliceOptions::default(),
            subset: SubsetConfig::default(),
        }
    }
}

impl RefineOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.k > 0.0) {
            return Err(domain("margin factor k must be positive"));
        }
        if self.clusters == 0 || self.candidates < self.clusters {
            return Err(domain("need at least one cluster and as many candidates as clusters"));
        }
        if self.epsilon.is_nan() || self.epsilon < 0.0 {
            return Err(domain("epsilon must be nonnegative"));
        }
        self.subset.validate()
    }
}

/// One enrichment round.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RoundRecord {
    pub round: usize,
    /// Design size of every surrogate when the bracket was computed.
    pub calls: Vec<usize>,
    pub bracket: Bracket,
    /// Points added to each surrogate after this bracket.
    pub added: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RefinementState {
    pub k: f64,
    /// Candidates and cluster centers (reduced coordinates) of the last
    /// enrichment, if any.
    pub candidates: Option<Matrix>,
    pub centers: Option<Matrix>,
    pub bracket: Bracket,
    /// True-function calls made by this refinement, per surrogate.
    pub calls_used: Vec<usize>,
    pub rounds: Vec<RoundRecord>,
    pub converged: bool,
}

/// Enriches the surrogates until the system bracket spread is at most
/// `epsilon`, the budget is spent or no point can be added.
#[allow(clippy::too_many_arguments)]
pub fn enrich(
    surrogates: &mut [Surrogate],
    limit_states: &[&dyn LimitState],
    vector: &ResolvedVector,
    bounds: &ConfidenceBox,
    options: &RefineOptions,
    exec: &dyn Executor,
    seed: u64,
) -> Result<RefinementState> {
    options.validate()?;
    let n = surrogates.len();
    if limit_states.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: limit_states.len(),
        });
    }
    let active = bounds.active_dims();
    let lo: Vec<f64> = active.iter().map(|&i| bounds.lower[i]).collect();
    let hi: Vec<f64> = active.iter().map(|&i| bounds.upper[i]).collect();
    let min_gap = 1e-8 * bounds.diagonal();

    let mut state = RefinementState {
        k: options.k,
        candidates: None,
        centers: None,
        bracket: Bracket::new(0.0, 0.0, 0.0, 0.0),
        calls_used: vec![0; n],
        rounds: Vec::new(),
        converged: false,
    };
    for round in 0..=options.max_rounds {
        let bracket = bracketing(surrogates, None, vector, options.k, &options.subset, exec)?;
        state.bracket = bracket;
        let mut record = RoundRecord {
            round,
            calls: surrogates.iter().map(Surrogate::calls).collect(),
            bracket,
            added: vec![0; n],
        };
        if bracket.spread <= options.epsilon {
            state.converged = true;
            state.rounds.push(record);
            break;
        }
        if round == options.max_rounds {
            state.rounds.push(record);
            break;
        }
        let mut targets: Vec<usize> = if n == 1 {
            vec![0]
        } else {
            let mut t = Vec::new();
            for l in 0..n {
                let b = bracketing(surrogates, Some(l), vector, options.k, &options.subset, exec)?;
                if b.spread > options.epsilon {
                    t.push(l);
                }
            }
            t
        };
        if targets.is_empty() {
            targets = (0..n).collect();
        }
        for l in targets {
            let remaining = options.budget.saturating_sub(surrogates[l].calls());
            if remaining == 0 {
                continue;
            }
            let s = &surrogates[l];
            let density = |z: &[f64]| {
                let inside = z.iter().zip(lo.iter().zip(&hi)).all(|(&v, (&a, &b))| a <= v && v <= b);
                if !inside {
                    return f64::NEG_INFINITY;
                }
                match s.model().predict(z) {
                    Ok(p) => refinement_log_density(p, true, options.k),
                    Err(_) => f64::NEG_INFINITY,
                }
            };
            let label = [rng::label("enrich"), round as u64, l as u64];
            let candidates = match slice_sample(
                density,
                &lo,
                &hi,
                options.candidates,
                &options.slice,
                rng::derive(seed, &label),
            ) {
                Ok(c) => c,
                Err(Error::EmptyMargin) => continue,
                Err(e) => return Err(e),
            };
            let clusters = options.clusters.min(remaining).min(kmeans::distinct_rows(&candidates));
            let centers = kmeans(&candidates, clusters, rng::derive(seed, &label) ^ 1)?.centers;

            let doe = s.model().doe().inputs();
            let mut kept = Matrix::with_cols(active.len());
            for c in centers.iter_rows() {
                let near = |m: &Matrix| m.iter_rows().any(|r| distance(r, c) < min_gap);
                if !near(doe) && !near(&kept) {
                    kept.push_row(c);
                }
            }
            state.candidates = Some(candidates);
            state.centers = Some(centers);
            if kept.rows() == 0 {
                continue;
            }
            let full = surrogate::lift_rows(&kept, &active, &bounds.lower);
            let mut y = vec![0.0; kept.rows()];
            exec.evaluate(limit_states[l], &full, &mut y);
            if let Some(i) = y.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite { level: round, index: i });
            }
            surrogates[l].extend(&kept, &y)?;
            state.calls_used[l] += kept.rows();
            record.added[l] = kept.rows();
        }
        let stuck = record.added.iter().all(|&a| a == 0);
        state.rounds.push(record);
        if stuck {
            // Nothing could be added; confirm the spread once more and stop.
            let bracket = bracketing(surrogates, None, vector, options.k, &options.subset, exec)?;
            state.bracket = bracket;
            state.converged = bracket.spread <= options.epsilon;
            state.rounds.push(RoundRecord {
                round: round + 1,
                calls: surrogates.iter().map(Surrogate::calls).collect(),
                bracket,
                added: vec![0; n],
            });
            break;
        }
    }
    Ok(state)
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}
