//! Polak-He feasible-descent method with a warm-started Goldstein-Armijo
//! line search.
//!
//! Problems are `min c(θ)` subject to `f_j(θ) <= 0`. The search direction
//! comes from the dual of the direction-finding subproblem, a small convex
//! QP over the unit simplex:
//!
//! ```text
//! min_μ  ½‖μ₀∇c + Σ μ_j ∇f_j‖² + μ₀ γ ψ₊ + Σ μ_j (ψ₊ - f_j),
//! ```
//!
//! with `ψ₊ = max(0, max_j f_j)`. The direction is
//! `δ = -(μ₀∇c + Σ μ_j ∇f_j)` and the negated minimum is the optimality
//! function `θ <= 0`, which vanishes exactly at KKT points.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{domain, input, Result};
use crate::linalg::{dot, norm, solve_dense, Matrix};

/// Constraint value (satisfied when `<= 0`) and gradient.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Constraint {
    pub value: f64,
    pub gradient: Vec<f64>,
}

/// Cost and constraints, with gradients, at one (normalized) design.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Iterate {
    pub design: Vec<f64>,
    pub cost: f64,
    pub cost_gradient: Vec<f64>,
    pub constraints: Vec<Constraint>,
}

impl Iterate {
    /// `max_j f_j`, or `-∞` without constraints.
    pub fn max_constraint(&self) -> f64 {
        self.constraints
            .iter()
            .map(|c| c.value)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn violation(&self) -> f64 {
        self.max_constraint().max(0.0)
    }

    fn check(&self) -> Result<()> {
        let n = self.design.len();
        let bad_grad = |g: &[f64]| g.len() != n || g.iter().any(|v| !v.is_finite());
        if !self.cost.is_finite() || bad_grad(&self.cost_gradient) {
            return Err(input("cost or its gradient is not finite"));
        }
        for (j, c) in self.constraints.iter().enumerate() {
            if c.value.is_nan() || bad_grad(&c.gradient) {
                return Err(input(format!("constraint #{j} or its gradient is not finite")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PolakHeOptions {
    /// Weight of the cost in the merit function when infeasible.
    pub gamma: f64,
    /// Armijo sufficient-decrease parameter.
    pub alpha: f64,
    /// Step factor base: steps are `base^k`.
    pub base: f64,
    pub max_exponent: usize,
}

impl Default for PolakHeOptions {
    fn default() -> Self {
        Self {
            gamma: 1.0,
            alpha: 0.5,
            base: 0.6,
            max_exponent: 10,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Direction {
    pub direction: Vec<f64>,
    /// Simplex weights `(μ₀, μ_1, ..)`.
    pub multipliers: Vec<f64>,
    /// Optimality function value, `<= 0`.
    pub theta: f64,
}

/// Solves `min ½ μᵀQμ + dᵀμ` over the unit simplex by a primal active-set
/// method.
pub fn simplex_qp(q: &Matrix, d: &[f64]) -> Vec<f64> {
    let n = d.len();
    let scale = (0..n).map(|i| q[(i, i)]).fold(0.0f64, f64::max).max(1.0);
    let ridge = 1e-12 * scale;
    let tol = 1e-12 * scale.max(d.iter().fold(0.0f64, |m, v| m.max(v.abs())));
    // Start from the best vertex.
    let start = (0..n)
        .min_by(|&a, &b| (0.5 * q[(a, a)] + d[a]).total_cmp(&(0.5 * q[(b, b)] + d[b])))
        .unwrap_or(0);
    let mut mu = vec![0.0; n];
    mu[start] = 1.0;
    let mut free = vec![false; n];
    free[start] = true;

    for _ in 0..(10 * n + 20) {
        let idx: Vec<usize> = (0..n).filter(|&i| free[i]).collect();
        let k = idx.len();
        // KKT system of the equality-constrained problem on the free set.
        let mut a = Matrix::zeros(k + 1, k + 1);
        let mut rhs = vec![0.0; k + 1];
        for (r, &i) in idx.iter().enumerate() {
            for (c, &j) in idx.iter().enumerate() {
                a[(r, c)] = q[(i, j)];
            }
            a[(r, r)] += ridge;
            a[(r, k)] = 1.0;
            a[(k, r)] = 1.0;
            rhs[r] = -d[i];
        }
        rhs[k] = 1.0;
        let Some(sol) = solve_dense(a, rhs) else {
            break;
        };
        let nu = sol[k];
        let target: Vec<f64> = {
            let mut t = vec![0.0; n];
            for (r, &i) in idx.iter().enumerate() {
                t[i] = sol[r];
            }
            t
        };
        if idx.iter().all(|&i| target[i] >= 0.0) {
            mu = target;
            // Multipliers of the bound constraints on the fixed set.
            let grad: Vec<f64> = (0..n)
                .map(|i| d[i] + (0..n).map(|j| q[(i, j)] * mu[j]).sum::<f64>())
                .collect();
            let worst = (0..n)
                .filter(|&i| !free[i])
                .map(|i| (grad[i] + nu, i))
                .min_by(|a, b| a.0.total_cmp(&b.0));
            match worst {
                Some((lambda, i)) if lambda < -tol => free[i] = true,
                _ => break,
            }
        } else {
            // Move toward the target until a free weight hits zero.
            let mut step = 1.0;
            let mut blocking = None;
            for &i in &idx {
                if target[i] < 0.0 {
                    let s = mu[i] / (mu[i] - target[i]);
                    if s < step {
                        step = s;
                        blocking = Some(i);
                    }
                }
            }
            for i in 0..n {
                mu[i] += step * (target[i] - mu[i]);
            }
            if let Some(b) = blocking {
                mu[b] = 0.0;
                free[b] = false;
            }
        }
    }
    // Clean round-off so the weights lie exactly on the simplex.
    mu.iter_mut().for_each(|v| *v = v.max(0.0));
    let s: f64 = mu.iter().sum();
    if s > 0.0 {
        mu.iter_mut().for_each(|v| *v /= s);
    } else {
        mu = vec![0.0; n];
        mu[start] = 1.0;
    }
    mu
}

/// Search direction and optimality function at `it`.
pub fn polak_he_direction(it: &Iterate, gamma: f64) -> Result<Direction> {
    it.check()?;
    let psi = it.violation();
    let mut grads: Vec<&[f64]> = vec![&it.cost_gradient];
    let mut d = vec![gamma * psi];
    // Constraints at -∞ can never become active and are left out.
    let mut slot = vec![0];
    for (j, c) in it.constraints.iter().enumerate() {
        if c.value == f64::NEG_INFINITY {
            continue;
        }
        grads.push(&c.gradient);
        d.push(psi - c.value);
        slot.push(j + 1);
    }
    let m = grads.len();
    let mut q = Matrix::zeros(m, m);
    for i in 0..m {
        for j in 0..=i {
            let v = dot(grads[i], grads[j]);
            q[(i, j)] = v;
            q[(j, i)] = v;
        }
    }
    let mu = simplex_qp(&q, &d);
    let n = it.design.len();
    let mut combo = vec![0.0; n];
    for (g, &w) in grads.iter().zip(&mu) {
        for k in 0..n {
            combo[k] += w * g[k];
        }
    }
    let theta = -(dot(&d, &mu) + 0.5 * dot(&combo, &combo));
    let mut multipliers = vec![0.0; it.constraints.len() + 1];
    for (&s, &w) in slot.iter().zip(&mu) {
        multipliers[s] = w;
    }
    Ok(Direction {
        direction: combo.iter().map(|v| -v).collect(),
        multipliers,
        theta: theta.min(0.0),
    })
}

/// `base^k`.
pub fn step_factor(base: f64, k: usize) -> f64 {
    base.powi(k as i32)
}

/// Merit of `trial` relative to `current`.
pub fn merit(trial: &Iterate, current: &Iterate, gamma: f64) -> f64 {
    let psi = current.violation();
    let cost_term = trial.cost - current.cost - gamma * psi;
    let constraint_term = trial.max_constraint() - psi;
    cost_term.max(constraint_term)
}

/// Step exponent carried from one iteration to the next.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StepMemory {
    pub exponent: usize,
    /// The saved exponent was accepted on its first probe.
    pub immediate: bool,
}

impl StepMemory {
    /// Exponent of the first probe of the next line search.
    pub fn first_probe(&self) -> usize {
        if self.immediate && self.exponent > 0 {
            self.exponent - 1
        } else {
            self.exponent
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepOutcome {
    /// Accepted exponent and iterate; `None` when the search stalled.
    pub accepted: Option<(usize, Iterate)>,
    /// Exponents tried, in order.
    pub probes: Vec<usize>,
}

impl StepOutcome {
    pub fn stalled(&self) -> bool {
        self.accepted.is_none()
    }
}

/// Armijo search along `direction` over `base^k`, starting from the
/// remembered exponent and increasing `k` until the merit decreases enough.
pub fn goldstein_armijo_step<E>(
    current: &Iterate,
    direction: &Direction,
    memory: &mut StepMemory,
    options: &PolakHeOptions,
    eval: &mut E,
) -> Result<StepOutcome>
where
    E: FnMut(&[f64]) -> Result<Iterate>,
{
    if norm(&direction.direction) == 0.0 {
        return Err(domain("line search needs a nonzero direction"));
    }
    let first = memory.first_probe().min(options.max_exponent);
    let mut probes = Vec::new();
    for k in first..=options.max_exponent {
        probes.push(k);
        let lambda = step_factor(options.base, k);
        let x: Vec<f64> = current
            .design
            .iter()
            .zip(&direction.direction)
            .map(|(a, d)| a + lambda * d)
            .collect();
        let trial = eval(&x)?;
        let f = merit(&trial, current, options.gamma);
        if f.is_finite() && f - options.alpha * lambda * direction.theta <= 0.0 {
            *memory = StepMemory {
                exponent: k,
                immediate: k == first,
            };
            return Ok(StepOutcome {
                accepted: Some((k, trial)),
                probes,
            });
        }
    }
    Ok(StepOutcome {
        accepted: None,
        probes,
    })
}

/// Componentwise `design / initial`.
pub fn normalize(design: &[f64], initial: &[f64]) -> Result<Vec<f64>> {
    check_initial(design, initial)?;
    Ok(design.iter().zip(initial).map(|(d, i)| d / i).collect())
}

/// Componentwise `normalized * initial`.
pub fn denormalize(normalized: &[f64], initial: &[f64]) -> Result<Vec<f64>> {
    check_initial(normalized, initial)?;
    Ok(normalized.iter().zip(initial).map(|(d, i)| d * i).collect())
}

fn check_initial(x: &[f64], initial: &[f64]) -> Result<()> {
    if x.len() != initial.len() {
        return Err(crate::Error::Dimension {
            expected: initial.len(),
            got: x.len(),
        });
    }
    if initial.iter().any(|&v| v == 0.0 || !v.is_finite()) {
        return Err(domain("initial design components must be nonzero and finite"));
    }
    Ok(())
}

/// One iteration of [`minimize`].
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IterationRecord {
    pub design: Vec<f64>,
    pub cost: f64,
    pub constraints: Vec<f64>,
    pub direction_norm: f64,
    pub theta: f64,
    /// Accepted exponent, `None` when stalled.
    pub exponent: Option<usize>,
    pub probes: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Minimum {
    pub iterate: Iterate,
    pub iterations: Vec<IterationRecord>,
    pub converged: bool,
    pub stalled: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StopRule {
    pub max_iterations: usize,
    /// Stationarity tolerance on `|θ|`.
    pub theta_tol: f64,
    /// Feasibility tolerance on `max_j f_j`.
    pub feasibility_tol: f64,
}

impl Default for StopRule {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            theta_tol: 1e-10,
            feasibility_tol: 1e-8,
        }
    }
}

/// Runs Polak-He iterations from `x0` until stationary and feasible, stalled
/// or out of iterations.
pub fn minimize<E>(x0: &[f64], eval: &mut E, options: &PolakHeOptions, stop: &StopRule) -> Result<Minimum>
where
    E: FnMut(&[f64]) -> Result<Iterate>,
{
    let mut current = eval(x0)?;
    let mut memory = StepMemory::default();
    let mut iterations = Vec::new();
    for _ in 0..stop.max_iterations {
        let dir = polak_he_direction(&current, options.gamma)?;
        let dnorm = norm(&dir.direction);
        let mut record = IterationRecord {
            design: current.design.clone(),
            cost: current.cost,
            constraints: current.constraints.iter().map(|c| c.value).collect(),
            direction_norm: dnorm,
            theta: dir.theta,
            exponent: None,
            probes: Vec::new(),
        };
        if -dir.theta <= stop.theta_tol && current.max_constraint() <= stop.feasibility_tol || dnorm == 0.0 {
            let converged = current.max_constraint() <= stop.feasibility_tol;
            iterations.push(record);
            return Ok(Minimum {
                iterate: current,
                iterations,
                converged,
                stalled: false,
            });
        }
        let outcome = goldstein_armijo_step(&current, &dir, &mut memory, options, eval)?;
        record.probes = outcome.probes.clone();
        match outcome.accepted {
            Some((k, next)) => {
                record.exponent = Some(k);
                iterations.push(record);
                current = next;
            }
            None => {
                iterations.push(record);
                let converged = current.max_constraint() <= stop.feasibility_tol;
                return Ok(Minimum {
                    iterate: current,
                    iterations,
                    converged,
                    stalled: true,
                });
            }
        }
    }
    Ok(Minimum {
        iterate: current,
        iterations,
        converged: false,
        stalled: false,
    })
}
