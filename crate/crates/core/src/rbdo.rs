//! Surrogate-based double-loop RBDO: refined kriging surrogates of every
//! limit state, subset simulation on their means inside Polak-He iterations,
//! and the deterministic (mean-value) warm start.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{domain, input, Error, Result};
use crate::exec::{Executor, LimitState};
use crate::kriging::FitOptions;
use crate::optimizer::{
    denormalize, goldstein_armijo_step, minimize, normalize, polak_he_direction, Constraint, Iterate, Minimum,
    PolakHeOptions, StepMemory, StopRule,
};
use crate::probability::{augmented_confidence_box, normal, DesignVector, RandomVectorSpec, ResolvedVector};
use crate::refine::{bracketing, enrich, Bracket, RefineOptions, RoundRecord, Surrogate, SurrogateMean};
use crate::reliability::{subset_simulate, SubsetConfig, SubsetResult};
use crate::rng;

/// Scalar function of the design vector.
pub type DesignFn<'a> = &'a (dyn Fn(&[f64]) -> f64 + Sync);

/// How reliability constraints are formed from the limit states.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum ReliabilityMode {
    /// One constraint on the series system `min_l g_l`.
    #[default]
    System,
    /// One constraint per limit state.
    PerComponent,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RbdoSettings {
    /// Target log10 spread of the bracketing probabilities.
    pub epsilon_pf0: f64,
    pub initial_doe_size: usize,
    /// Reliability level covered by the augmented confidence box.
    pub box_beta: f64,
    /// Enrichment settings; `clusters` is the batch size and `budget` the
    /// maximum design size per limit state.
    pub refine: RefineOptions,
    pub fit: FitOptions,
    /// Subset simulation on the surrogates inside the optimizer.
    pub inner: SubsetConfig,
    pub optimizer: PolakHeOptions,
    pub max_iterations: usize,
    /// Stationarity tolerance on the optimality function.
    pub theta_tol: f64,
    /// Converged once an accepted normalized step is this short.
    pub step_tol: f64,
    /// Relative finite-difference step for cost and deterministic
    /// constraints.
    pub fd_step: f64,
    pub seed: u64,
}

impl Default for RbdoSettings {
    fn default() -> Self {
        Self {
            epsilon_pf0: 0.05,
            initial_doe_size: 50,
            box_beta: 8.0,
            refine: RefineOptions {
                budget: 500,
                ..RefineOptions::default()
            },
            fit: FitOptions::default(),
            inner: SubsetConfig::default(),
            optimizer: PolakHeOptions::default(),
            max_iterations: 50,
            theta_tol: 1e-5,
            step_tol: 1e-4,
            fd_step: 1e-6,
            seed: 0,
        }
    }
}

/// Minimize `cost(θ)` s.t. `f_i(θ) <= 0` and `P[g_l(X(θ)) <= 0] <= Φ(-β₀)`.
pub struct RbdoProblem<'a> {
    pub cost: DesignFn<'a>,
    pub deterministic_constraints: Vec<DesignFn<'a>>,
    pub limit_states: Vec<&'a dyn LimitState>,
    pub spec: RandomVectorSpec,
    pub design: DesignVector,
    pub mode: ReliabilityMode,
    /// One target in system mode, one per limit state otherwise.
    pub beta_targets: Vec<f64>,
    pub settings: RbdoSettings,
}

impl core::fmt::Debug for RbdoProblem<'_> {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("RbdoProblem")
            .field("deterministic_constraints", &self.deterministic_constraints.len())
            .field("limit_states", &self.limit_states.len())
            .field("spec", &self.spec)
            .field("design", &self.design)
            .field("mode", &self.mode)
            .field("beta_targets", &self.beta_targets)
            .field("settings", &self.settings)
            .finish()
    }
}

impl RbdoProblem<'_> {
    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        if self.limit_states.is_empty() {
            return Err(domain("at least one limit state is required"));
        }
        if self.design.dim() != self.spec.design_dim() {
            return Err(Error::Dimension {
                expected: self.spec.design_dim(),
                got: self.design.dim(),
            });
        }
        let expected = match self.mode {
            ReliabilityMode::System => 1,
            ReliabilityMode::PerComponent => self.limit_states.len(),
        };
        if self.beta_targets.len() != expected {
            return Err(Error::Dimension {
                expected,
                got: self.beta_targets.len(),
            });
        }
        if self.beta_targets.iter().any(|b| !(*b > 0.0 && b.is_finite())) {
            return Err(domain("reliability targets must be positive"));
        }
        if !(self.settings.epsilon_pf0 > 0.0) {
            return Err(domain("epsilon_pf0 must be positive"));
        }
        if !self.design.is_within_bounds() {
            return Err(domain("starting design lies outside its bounds"));
        }
        Ok(())
    }

    fn initial(&self) -> &[f64] {
        &self.design.values
    }

    fn cost_scale(&self) -> Result<f64> {
        let c = (self.cost)(self.initial());
        if !(c.is_finite() && c != 0.0) {
            return Err(input(format!("cost at the starting design is {c}")));
        }
        Ok(c.abs())
    }

    /// Normalized cost, deterministic and bound constraints at normalized
    /// design `s`, with finite-difference gradients.
    fn deterministic_part(&self, s: &[f64], scale: f64) -> Result<(f64, Vec<f64>, Vec<Constraint>)> {
        let init = self.initial();
        let h = self.settings.fd_step;
        let eval_fn = |f: DesignFn<'_>, s: &[f64]| -> Result<(f64, Vec<f64>)> {
            let theta = denormalize(s, init)?;
            let v = f(&theta);
            if v.is_nan() {
                return Err(input("cost or constraint is not a number"));
            }
            if v == f64::NEG_INFINITY {
                return Ok((v, vec![0.0; s.len()]));
            }
            let mut grad = vec![0.0; s.len()];
            let mut p = s.to_vec();
            for j in 0..s.len() {
                let step = h * s[j].abs().max(1.0);
                p[j] = s[j] + step;
                let up = f(&denormalize(&p, init)?);
                p[j] = s[j] - step;
                let down = f(&denormalize(&p, init)?);
                p[j] = s[j];
                grad[j] = (up - down) / (2.0 * step);
            }
            Ok((v, grad))
        };
        let (c, cg) = eval_fn(self.cost, s)?;
        let mut constraints = Vec::new();
        for f in &self.deterministic_constraints {
            let (value, gradient) = eval_fn(*f, s)?;
            constraints.push(Constraint { value, gradient });
        }
        let n = s.len();
        for j in 0..n {
            let lo = self.design.lower[j] / init[j];
            let hi = self.design.upper[j] / init[j];
            let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
            let mut g = vec![0.0; n];
            g[j] = -1.0;
            constraints.push(Constraint {
                value: lo - s[j],
                gradient: g.clone(),
            });
            g[j] = 1.0;
            constraints.push(Constraint {
                value: s[j] - hi,
                gradient: g,
            });
        }
        Ok((c / scale, cg.iter().map(|g| g / scale).collect(), constraints))
    }

    /// Clamps a normalized design onto the bounds.
    fn project(&self, s: &[f64]) -> Result<(Vec<f64>, bool)> {
        let mut theta = denormalize(s, self.initial())?;
        let moved = self.design.project(&mut theta);
        Ok((normalize(&theta, self.initial())?, moved))
    }
}

/// Deterministic optimum used as the RBDO starting design.
#[derive(Clone, Debug, PartialEq)]
pub struct DdoResult {
    pub design: DesignVector,
    pub cost: f64,
    /// Limit-state values at the mean vector of the optimum.
    pub limit_state_values: Vec<f64>,
    pub minimum: Minimum,
    pub converged: bool,
    pub stalled: bool,
}

/// Solves the mean-value problem: `g_l(E[X(θ)]) >= 0` as constraints.
pub fn ddo_solve(problem: &RbdoProblem<'_>) -> Result<DdoResult> {
    problem.validate()?;
    let scale = problem.cost_scale()?;
    let init = problem.initial().to_vec();
    let h = problem.settings.fd_step;
    let mean_g = |s: &[f64], l: usize| -> Result<f64> {
        let theta = denormalize(s, &init)?;
        let x = problem.spec.resolve(&theta)?.means();
        Ok(problem.limit_states[l].evaluate(&x))
    };
    let mut eval = |s: &[f64]| -> Result<Iterate> {
        let (s, _) = problem.project(s)?;
        let (cost, cost_gradient, mut constraints) = problem.deterministic_part(&s, scale)?;
        for l in 0..problem.limit_states.len() {
            let v = mean_g(&s, l)?;
            if !v.is_finite() {
                return Err(input(format!("limit state {l} is not finite at the mean vector")));
            }
            let mut gradient = vec![0.0; s.len()];
            let mut p = s.clone();
            for j in 0..s.len() {
                let step = h * s[j].abs().max(1.0);
                p[j] = s[j] + step;
                let up = mean_g(&p, l)?;
                p[j] = s[j] - step;
                let down = mean_g(&p, l)?;
                p[j] = s[j];
                gradient[j] = -(up - down) / (2.0 * step);
            }
            constraints.push(Constraint { value: -v, gradient });
        }
        Ok(Iterate {
            design: s,
            cost,
            cost_gradient,
            constraints,
        })
    };
    let s0 = vec![1.0; init.len()];
    let stop = StopRule {
        max_iterations: 500,
        ..StopRule::default()
    };
    let minimum = minimize(&s0, &mut eval, &problem.settings.optimizer, &stop)?;
    let theta = denormalize(&minimum.iterate.design, &init)?;
    let x = problem.spec.resolve(&theta)?.means();
    Ok(DdoResult {
        limit_state_values: problem.limit_states.iter().map(|g| g.evaluate(&x)).collect(),
        cost: (problem.cost)(&theta),
        design: problem.design.with_values(theta),
        converged: minimum.converged,
        stalled: minimum.stalled,
        minimum,
    })
}

/// Reliability estimate inside the optimizer.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ReliabilityEstimate {
    pub pf: f64,
    pub beta: f64,
    pub cov: f64,
    /// The estimate hit the simulation floor; `beta` is a lower bound.
    pub floored: bool,
}

/// One outer iteration.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RbdoIteration {
    pub iteration: usize,
    pub design: Vec<f64>,
    pub normalized_design: Vec<f64>,
    pub cost: f64,
    pub reliability: Vec<ReliabilityEstimate>,
    /// Deterministic constraint values.
    pub constraints: Vec<f64>,
    pub theta: f64,
    /// Accepted step exponent, `None` when the line search stalled or the
    /// loop stopped here.
    pub step_exponent: Option<usize>,
    pub bracket: Bracket,
    /// Cumulative true-function calls per limit state.
    pub calls: Vec<usize>,
    pub refinement_rounds: Vec<RoundRecord>,
    pub refinement_converged: bool,
    /// The line search had to clamp a trial design onto the bounds.
    pub projected: bool,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RbdoHistory {
    pub iterations: Vec<RbdoIteration>,
    pub converged: bool,
    pub final_design: DesignVector,
}

impl RbdoHistory {
    pub fn total_calls(&self) -> Vec<usize> {
        self.iterations.last().map(|i| i.calls.clone()).unwrap_or_default()
    }
}

#[derive(Clone, Debug)]
pub struct RbdoRun {
    pub history: RbdoHistory,
    pub surrogates: Vec<Surrogate>,
}

struct MinOf<'a>(&'a [&'a dyn LimitState]);

impl LimitState for MinOf<'_> {
    fn evaluate(&self, x: &[f64]) -> f64 {
        self.0.iter().map(|g| g.evaluate(x)).fold(f64::INFINITY, f64::min)
    }
}

/// Reliability constraints `β₀ - β(θ) <= 0` from subset simulation on the
/// surrogate means, gradients in normalized coordinates.
fn reliability_constraints(
    problem: &RbdoProblem<'_>,
    surrogates: &[Surrogate],
    vector: &ResolvedVector,
    initial: &[f64],
    config: &SubsetConfig,
    exec: &dyn Executor,
) -> Result<(Vec<ReliabilityEstimate>, Vec<Constraint>)> {
    let groups: Vec<&[Surrogate]> = match problem.mode {
        ReliabilityMode::System => vec![surrogates],
        ReliabilityMode::PerComponent => surrogates.chunks(1).collect(),
    };
    let mut estimates = Vec::new();
    let mut constraints = Vec::new();
    for (group, &target) in groups.into_iter().zip(&problem.beta_targets) {
        let g = SurrogateMean(group);
        let (estimate, dbeta) = match subset_simulate(&g, vector, config, exec) {
            Ok(r) => beta_and_gradient(&r, vector.design_dim()),
            Err(Error::PfFloor { partial_pf, .. }) => (
                ReliabilityEstimate {
                    pf: partial_pf,
                    beta: -normal::quantile(partial_pf),
                    cov: 0.0,
                    floored: true,
                },
                vec![0.0; vector.design_dim()],
            ),
            Err(e) => return Err(e),
        };
        constraints.push(Constraint {
            value: target - estimate.beta,
            gradient: dbeta.iter().zip(initial).map(|(d, i)| -d * i).collect(),
        });
        estimates.push(estimate);
    }
    Ok((estimates, constraints))
}

/// `β = -Φ⁻¹(pf)` and `∂β/∂θ = -(∂pf/∂θ) / φ(β)`, clipped to zero when `pf`
/// sits at the estimator's resolution limits.
fn beta_and_gradient(r: &SubsetResult, design_dim: usize) -> (ReliabilityEstimate, Vec<f64>) {
    let n = r.final_values.len().max(1) as f64;
    let pf = r.pf.min(1.0 - 1.0 / n);
    let beta = -normal::quantile(pf);
    let density = normal::pdf(beta);
    let grad = match &r.sensitivities {
        Some(s) if r.pf < 1.0 && density > 0.0 => s.iter().map(|v| -v.value / density).collect(),
        _ => vec![0.0; design_dim],
    };
    (
        ReliabilityEstimate {
            pf,
            beta,
            cov: r.cov,
            floored: r.pf >= 1.0,
        },
        grad,
    )
}

/// Optimizer iterate at normalized design `trial`, projected onto the
/// bounds first.
fn evaluate_point(
    problem: &RbdoProblem<'_>,
    surrogates: &[Surrogate],
    trial: &[f64],
    scale: f64,
    initial: &[f64],
    config: &SubsetConfig,
    exec: &dyn Executor,
) -> Result<(Iterate, Vec<ReliabilityEstimate>, bool)> {
    let (t, moved) = problem.project(trial)?;
    let (cost, cost_gradient, mut constraints) = problem.deterministic_part(&t, scale)?;
    let vector = problem.spec.resolve(&denormalize(&t, initial)?)?;
    let (estimates, rel) = reliability_constraints(problem, surrogates, &vector, initial, config, exec)?;
    constraints.extend(rel);
    let it = Iterate {
        design: t,
        cost,
        cost_gradient,
        constraints,
    };
    Ok((it, estimates, moved))
}

/// Surrogate-based RBDO from the problem's starting design.
pub fn rbdo_solve(problem: &RbdoProblem<'_>, exec: &dyn Executor) -> Result<RbdoRun> {
    problem.validate()?;
    let st = &problem.settings;
    let scale = problem.cost_scale()?;
    let init = problem.initial().to_vec();
    let nl = problem.limit_states.len();

    let bounds = augmented_confidence_box(&problem.spec, &problem.design.lower, &problem.design.upper, st.box_beta)?;
    let mut surrogates = Vec::with_capacity(nl);
    for (l, g) in problem.limit_states.iter().enumerate() {
        let fit = FitOptions {
            seed: rng::derive(st.seed, &[rng::label("surrogate"), l as u64]),
            ..st.fit.clone()
        };
        surrogates.push(Surrogate::initial(*g, &bounds, st.initial_doe_size, fit, exec)?);
    }
    let refine = RefineOptions {
        epsilon: st.epsilon_pf0,
        ..st.refine.clone()
    };

    let mut s = vec![1.0; init.len()];
    let mut memory = StepMemory::default();
    let mut iterations: Vec<RbdoIteration> = Vec::new();
    let mut converged = false;
    for it in 0..st.max_iterations {
        let theta = denormalize(&s, &init)?;
        let vector = problem.spec.resolve(&theta)?;
        let mut refine_it = refine.clone();
        refine_it.subset.seed = rng::derive(st.seed, &[rng::label("bracket"), it as u64]);
        let state = enrich(
            &mut surrogates,
            &problem.limit_states,
            &vector,
            &bounds,
            &refine_it,
            exec,
            rng::derive(st.seed, &[rng::label("enrich"), it as u64]),
        )?;

        // Common random numbers for every evaluation of this iteration.
        let inner = SubsetConfig {
            seed: rng::derive(st.seed, &[rng::label("inner"), it as u64]),
            ..st.inner.clone()
        };
        let point = |trial: &[f64]| evaluate_point(problem, &surrogates, trial, scale, &init, &inner, exec);
        let (current, estimates, _) = point(&s)?;
        let mut projected = false;
        let mut eval = |trial: &[f64]| -> Result<Iterate> {
            let (it, _, moved) = point(trial)?;
            projected |= moved;
            Ok(it)
        };
        let direction = polak_he_direction(&current, st.optimizer.gamma)?;
        let nd = problem.deterministic_constraints.len();
        let mut record = RbdoIteration {
            iteration: it,
            design: theta.clone(),
            normalized_design: s.clone(),
            cost: current.cost * scale,
            reliability: estimates.clone(),
            constraints: current.constraints[..nd].iter().map(|c| c.value).collect(),
            theta: direction.theta,
            step_exponent: None,
            bracket: state.bracket,
            calls: surrogates.iter().map(Surrogate::calls).collect(),
            refinement_rounds: state.rounds.clone(),
            refinement_converged: state.converged,
            projected: false,
        };

        let deterministic_ok = current.constraints[..nd].iter().all(|c| c.value <= 1e-8);
        let reliable = estimates
            .iter()
            .zip(&problem.beta_targets)
            .all(|(e, &b)| e.beta >= b - 2.0 * (e.beta * e.cov).abs());
        let feasible = deterministic_ok && reliable;
        let dnorm = crate::linalg::norm(&direction.direction);
        if feasible && state.converged && (-direction.theta <= st.theta_tol || dnorm == 0.0) {
            iterations.push(record);
            converged = true;
            break;
        }
        if dnorm == 0.0 {
            iterations.push(record);
            break;
        }
        let outcome = goldstein_armijo_step(&current, &direction, &mut memory, &st.optimizer, &mut eval)?;
        record.projected = projected;
        match outcome.accepted {
            Some((k, next)) => {
                record.step_exponent = Some(k);
                let step: f64 = next
                    .design
                    .iter()
                    .zip(&s)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                iterations.push(record);
                s = next.design;
                if feasible && state.converged && step <= st.step_tol {
                    converged = true;
                    break;
                }
            }
            None => {
                iterations.push(record);
                converged = feasible && state.converged;
                break;
            }
        }
    }

    // Final state of the last accepted design.
    let theta = denormalize(&s, &init)?;
    let final_design = problem.design.with_values(theta);
    Ok(RbdoRun {
        history: RbdoHistory {
            iterations,
            converged,
            final_design,
        },
        surrogates,
    })
}

/// Bracketing probabilities of the surrogate system at `design`.
pub fn surrogate_bracket(
    spec: &RandomVectorSpec,
    surrogates: &[Surrogate],
    design: &[f64],
    k: f64,
    config: &SubsetConfig,
    exec: &dyn Executor,
) -> Result<Bracket> {
    bracketing(surrogates, None, &spec.resolve(design)?, k, config, exec)
}

/// Outcome of one verification run.
#[derive(Clone, Debug, PartialEq)]
pub enum Verified {
    Estimate(SubsetResult),
    Floor { levels: usize, partial_pf: f64 },
}

impl Verified {
    pub fn beta(&self) -> f64 {
        match self {
            Self::Estimate(r) => r.beta,
            Self::Floor { partial_pf, .. } => -normal::quantile(*partial_pf),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Verification {
    /// One entry per reliability constraint.
    pub reliability: Vec<Verified>,
    pub deterministic: Vec<f64>,
}

/// Subset simulation on the true limit states at `design`.
pub fn verify_design(
    problem: &RbdoProblem<'_>,
    design: &[f64],
    samples_per_level: usize,
    seed: u64,
    exec: &dyn Executor,
) -> Result<Verification> {
    if !problem.design.contains(design) {
        return Err(domain("design to verify lies outside its bounds"));
    }
    let vector = problem.spec.resolve(design)?;
    let config = SubsetConfig {
        samples_per_level,
        seed,
        ..problem.settings.inner.clone()
    };
    let run = |g: &dyn LimitState, l: u64| -> Result<Verified> {
        let cfg = SubsetConfig {
            seed: rng::derive(seed, &[rng::label("verify"), l]),
            ..config.clone()
        };
        match subset_simulate(g, &vector, &cfg, exec) {
            Ok(r) => Ok(Verified::Estimate(r)),
            Err(Error::PfFloor { levels, partial_pf }) => Ok(Verified::Floor { levels, partial_pf }),
            Err(e) => Err(e),
        }
    };
    let reliability = match problem.mode {
        ReliabilityMode::System => vec![run(&MinOf(&problem.limit_states), 0)?],
        ReliabilityMode::PerComponent => problem
            .limit_states
            .iter()
            .enumerate()
            .map(|(l, g)| run(*g, l as u64))
            .collect::<Result<_>>()?,
    };
    Ok(Verification {
        reliability,
        deterministic: problem.deterministic_constraints.iter().map(|f| f(design)).collect(),
    })
}
