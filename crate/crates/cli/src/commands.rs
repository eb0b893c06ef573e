//! Subcommand drivers. Each returns the convergence flag recorded in the
//! manifest (`None` when the notion does not apply).

use rbdo_core::kriging::FitOptions;
use rbdo_core::probability::{augmented_confidence_box, ConfidenceBox, DesignVector};
use rbdo_core::rbdo::{
    ddo_solve, rbdo_solve, verify_design, DdoResult, DesignFn, RbdoHistory, RbdoProblem, RbdoSettings,
    ReliabilityMode, Verification, Verified,
};
use rbdo_core::refine::{enrich, RefineOptions, RefinementState, Surrogate};
use rbdo_core::reliability::{subset_simulate, SubsetConfig, SubsetResult};
use rbdo_core::{rng, Error, LimitState, Matrix};
use serde::Serialize;
use serde_json::json;

use crate::config::{RunConfig, StartDesign};
use crate::error::CliError;
use crate::exec::Pool;
use crate::output::{num, RunDir, Table};
use crate::problem::Problem;

/// Surrogate snapshot file layout version.
pub const SURROGATE_FORMAT: u32 = 1;

type BoxedFn<'a> = Box<dyn Fn(&[f64]) -> f64 + Sync + 'a>;

#[derive(Debug)]
pub struct Context<'a> {
    pub config: &'a RunConfig,
    pub problem: &'a Problem,
    pub exec: &'a Pool,
    pub out: &'a RunDir,
}

impl Context<'_> {
    fn seed(&self, name: &str) -> u64 {
        rng::named(self.config.seed, name)
    }

    fn subset(&self, name: &str) -> SubsetConfig {
        let r = &self.config.reliability;
        SubsetConfig {
            samples_per_level: r.samples_per_level,
            level_probability: r.level_probability,
            proposal_spread: r.proposal_spread,
            max_levels: r.max_levels,
            seed: self.seed(name),
        }
    }

    fn refine_options(&self) -> RefineOptions {
        let f = &self.config.refine;
        RefineOptions {
            k: f.k,
            candidates: f.candidates,
            clusters: f.clusters,
            epsilon: f.epsilon,
            budget: f.budget,
            max_rounds: f.max_rounds,
            subset: self.subset("bracket"),
            ..RefineOptions::default()
        }
    }

    fn fit_options(&self, l: usize) -> FitOptions {
        FitOptions {
            trend: self.config.refine.trend,
            seed: rng::derive(self.config.seed, &[rng::label("surrogate"), l as u64]),
            ..FitOptions::default()
        }
    }

    fn settings(&self) -> RbdoSettings {
        let f = &self.config.refine;
        RbdoSettings {
            epsilon_pf0: f.epsilon,
            initial_doe_size: f.initial_doe,
            box_beta: f.box_beta,
            refine: self.refine_options(),
            fit: self.fit_options(0),
            inner: self.subset("inner"),
            max_iterations: self.config.rbdo.max_iterations,
            seed: self.seed("rbdo"),
            ..RbdoSettings::default()
        }
    }

    fn bounds(&self) -> Result<ConfidenceBox, CliError> {
        let d = &self.problem.design;
        Ok(augmented_confidence_box(&self.problem.spec, &d.lower, &d.upper, self.config.refine.box_beta)?)
    }

    /// Name of every design variable: the first marginal linked to it.
    fn design_names(&self) -> Vec<String> {
        let spec = &self.problem.spec;
        (0..spec.design_dim())
            .map(|j| {
                spec.marginals
                    .iter()
                    .position(|m| m.design_var == Some(j))
                    .map_or_else(|| format!("theta{j}"), |i| spec.names[i].clone())
            })
            .collect()
    }

    /// Builds the optimization problem around `design` and hands it to `f`.
    fn with_problem<R>(
        &self,
        design: DesignVector,
        beta_targets: Vec<f64>,
        mode: ReliabilityMode,
        f: impl FnOnce(&RbdoProblem<'_>) -> R,
    ) -> R {
        let p = self.problem;
        let cost = |t: &[f64]| p.cost(t);
        let constraints: Vec<BoxedFn<'_>> = (0..p.constraint_names().len())
            .map(|i| Box::new(move |t: &[f64]| p.constraint(i, t)) as BoxedFn<'_>)
            .collect();
        let limit_states = p.limit_states();
        let problem = RbdoProblem {
            cost: &cost,
            deterministic_constraints: constraints.iter().map(|c| c.as_ref() as DesignFn).collect(),
            limit_states: limit_states.iter().map(|g| g as &dyn LimitState).collect(),
            spec: p.spec.clone(),
            design,
            mode,
            beta_targets,
            settings: self.settings(),
        };
        f(&problem)
    }
}

#[derive(Serialize)]
struct SubsetSummary<'a> {
    design: &'a [f64],
    pf: f64,
    beta: f64,
    cov: f64,
    cov_independent: f64,
    levels: usize,
    calls: usize,
    thresholds: &'a [f64],
    conditioning_probability: f64,
    sensitivities: Option<Vec<[f64; 2]>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    exact_pf: Option<f64>,
}

fn subset_summary<'a>(r: &'a SubsetResult, design: &'a [f64], exact_pf: Option<f64>) -> SubsetSummary<'a> {
    SubsetSummary {
        design,
        pf: r.pf,
        beta: r.beta,
        cov: r.cov,
        cov_independent: r.cov_independent,
        levels: r.levels,
        calls: r.calls,
        thresholds: &r.thresholds,
        conditioning_probability: r.conditioning_probability,
        sensitivities: r
            .sensitivities
            .as_ref()
            .map(|s| s.iter().map(|s| [s.value, s.std_error]).collect()),
        exact_pf,
    }
}

fn column_stats(m: &Matrix, j: usize) -> [f64; 4] {
    let n = m.rows() as f64;
    let col = || m.iter_rows().map(move |r| r[j]);
    let mean = col().sum::<f64>() / n;
    let var = col().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0).max(1.0);
    let (lo, hi) = col().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    [mean, var.sqrt(), lo, hi]
}

/// Subset simulation on the true system limit state at the configured design.
pub fn reliability(ctx: &Context<'_>) -> Result<Option<bool>, CliError> {
    let p = ctx.problem;
    let design = &p.design.values;
    let vector = p.spec.resolve(design)?;
    let g = |x: &[f64]| p.system_value(x);
    let result = match subset_simulate(&g, &vector, &ctx.subset("reliability"), ctx.exec) {
        Ok(r) => r,
        Err(Error::PfFloor { levels, partial_pf }) => {
            ctx.out.write_json(
                "result.json",
                &json!({ "design": design, "floor": { "levels": levels, "partial_pf": partial_pf } }),
            )?;
            return Ok(Some(false));
        }
        Err(e) => return Err(e.into()),
    };
    ctx.out
        .write_json("result.json", &subset_summary(&result, design, p.exact_pf(design)))?;

    let p0 = ctx.config.reliability.level_probability;
    let mut levels = Table::new(["level", "threshold", "conditional_probability"]);
    let last = result.pf / result.conditioning_probability;
    for (i, t) in result.thresholds.iter().enumerate() {
        let cp = if i + 1 == result.thresholds.len() { last } else { p0 };
        levels.push(vec![(i + 1).to_string(), num(*t), num(cp)]);
    }
    ctx.out.write_table("levels.tsv", &levels)?;

    let mut summary = Table::new(["variable", "mean", "std_dev", "min", "max"]);
    for (j, name) in p.spec.names.iter().enumerate() {
        let mut row = vec![name.clone()];
        row.extend(column_stats(&result.final_points, j).iter().map(|v| num(*v)));
        summary.push(row);
    }
    let values = Matrix::from_vec(result.final_values.len(), 1, result.final_values.clone())?;
    let mut row = vec!["g".to_string()];
    row.extend(column_stats(&values, 0).iter().map(|v| num(*v)));
    summary.push(row);
    ctx.out.write_table("samples_summary.tsv", &summary)?;
    Ok(None)
}

fn write_surrogate(ctx: &Context<'_>, out: &RunDir, name: &str, s: &Surrogate, k: f64) -> Result<(), CliError> {
    let spec = &ctx.problem.spec;
    let active: Vec<&str> = s.active().iter().map(|&i| spec.names[i].as_str()).collect();
    let anchor = s.lift(&vec![0.0; s.active().len()]);
    out.write_json(
        &format!("surrogate_{name}.json"),
        &json!({
            "format_version": SURROGATE_FORMAT,
            "limit_state": name,
            "active_variables": active,
            "anchor": anchor,
            "model": s.model().snapshot(),
        }),
    )?;

    let mut columns: Vec<String> = active.iter().map(|n| n.to_string()).collect();
    columns.extend(["output", "prediction", "std_dev", "lower", "upper"].map(String::from));
    let mut table = Table::new(columns);
    let doe = s.model().doe();
    for (z, y) in doe.inputs().iter_rows().zip(doe.outputs()) {
        let pr = s.model().predict(z)?;
        let sd = pr.std_dev();
        let mut row: Vec<f64> = z.to_vec();
        row.extend([*y, pr.mean, sd, pr.mean - k * sd, pr.mean + k * sd]);
        table.push_numbers(&row);
    }
    out.write_table(&format!("doe_{name}.tsv"), &table)
}

/// Contour data of the system surrogate over the two active variables.
fn write_grid(ctx: &Context<'_>, surrogates: &[Surrogate], bounds: &ConfidenceBox, k: f64) -> Result<(), CliError> {
    let active = surrogates[0].active();
    if active.len() != 2 {
        return Ok(());
    }
    let n = ctx.config.refine.grid_points;
    let names = &ctx.problem.spec.names;
    let mut table = Table::new([
        names[active[0]].clone(),
        names[active[1]].clone(),
        "mean".into(),
        "lower".into(),
        "upper".into(),
    ]);
    let axis = |d: usize, i: usize| {
        let (lo, hi) = (bounds.lower[active[d]], bounds.upper[active[d]]);
        lo + (hi - lo) * i as f64 / (n - 1) as f64
    };
    for i in 0..n {
        for j in 0..n {
            let z = [axis(0, i), axis(1, j)];
            let mut v = [f64::INFINITY; 3];
            for s in surrogates {
                let pr = s.model().predict(&z)?;
                let sd = pr.std_dev();
                v[0] = v[0].min(pr.mean);
                v[1] = v[1].min(pr.mean - k * sd);
                v[2] = v[2].min(pr.mean + k * sd);
            }
            table.push_numbers(&[z[0], z[1], v[0], v[1], v[2]]);
        }
    }
    ctx.out.write_table("grid.tsv", &table)
}

fn rounds_table(names: &[String], state: &RefinementState) -> Table {
    let mut columns: Vec<String> = vec!["round".into()];
    columns.extend(names.iter().map(|n| format!("calls_{n}")));
    columns.extend(["pf_plus", "pf_zero", "pf_minus", "cov", "spread"].map(String::from));
    columns.extend(names.iter().map(|n| format!("added_{n}")));
    let mut t = Table::new(columns);
    for r in &state.rounds {
        let b = &r.bracket;
        let mut row = vec![r.round.to_string()];
        row.extend(r.calls.iter().map(usize::to_string));
        row.extend([b.pf_plus, b.pf_zero, b.pf_minus, b.cov, b.spread].map(num));
        row.extend(r.added.iter().map(usize::to_string));
        t.push(row);
    }
    t
}

/// Surrogate refinement at the configured design.
pub fn refine(ctx: &Context<'_>) -> Result<Option<bool>, CliError> {
    let p = ctx.problem;
    let bounds = ctx.bounds()?;
    let limit_states = p.limit_states();
    let options = ctx.refine_options();
    let mut surrogates = limit_states
        .iter()
        .enumerate()
        .map(|(l, g)| Surrogate::initial(g, &bounds, ctx.config.refine.initial_doe, ctx.fit_options(l), ctx.exec))
        .collect::<Result<Vec<_>, _>>()?;
    let refs: Vec<&dyn LimitState> = limit_states.iter().map(|g| g as &dyn LimitState).collect();
    let vector = p.spec.resolve(&p.design.values)?;
    let outcome = enrich(&mut surrogates, &refs, &vector, &bounds, &options, ctx.exec, ctx.seed("refine"));

    // Surrogates are written even when enrichment failed part-way.
    for (s, name) in surrogates.iter().zip(&p.limit_state_names) {
        write_surrogate(ctx, ctx.out, name, s, options.k)?;
    }
    let state = outcome?;
    ctx.out.write_table("rounds.tsv", &rounds_table(&p.limit_state_names, &state))?;
    ctx.out.write_json(
        "refine.json",
        &json!({
            "converged": state.converged,
            "bracket": state.bracket,
            "k": state.k,
            "calls_used": state.calls_used,
            "total_calls": surrogates.iter().map(Surrogate::calls).collect::<Vec<_>>(),
            "rounds": state.rounds.len(),
            "limit_states": p.limit_state_names,
            "design": p.design.values,
        }),
    )?;
    write_grid(ctx, &surrogates, &bounds, options.k)?;
    Ok(Some(state.converged))
}

fn ddo_outputs(ctx: &Context<'_>, out: &RunDir, r: &DdoResult) -> Result<(), CliError> {
    let names = ctx.design_names();
    out.write_json(
        "ddo.json",
        &json!({
            "design": r.design.values,
            "design_variables": names,
            "cost": r.cost,
            "limit_state_values": r.limit_state_values,
            "converged": r.converged,
            "stalled": r.stalled,
            "iterations": r.minimum.iterations.len(),
        }),
    )?;
    let mut columns: Vec<String> = vec!["iteration".into()];
    columns.extend(names.iter().map(|n| format!("normalized_{n}")));
    columns.extend(["cost", "max_constraint", "theta"].map(String::from));
    let mut t = Table::new(columns);
    for (i, it) in r.minimum.iterations.iter().enumerate() {
        let mut row = vec![i.to_string()];
        row.extend(it.design.iter().map(|v| num(*v)));
        let worst = it.constraints.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        row.extend([it.cost, worst, it.theta].map(num));
        t.push(row);
    }
    out.write_table("ddo_trajectory.tsv", &t)
}

/// Deterministic (mean-value) optimization.
pub fn ddo(ctx: &Context<'_>) -> Result<Option<bool>, CliError> {
    ctx.problem.require_design("ddo")?;
    let r = ctx.with_problem(ctx.problem.design.clone(), vec![ctx.config.rbdo.beta_targets[0]], ReliabilityMode::System, ddo_solve)?;
    ddo_outputs(ctx, ctx.out, &r)?;
    Ok(Some(r.converged))
}

fn verification_json(ctx: &Context<'_>, v: &Verification, targets: &[f64], design: &[f64]) -> serde_json::Value {
    let ls_names: Vec<String> = if v.reliability.len() == 1 {
        vec!["system".into()]
    } else {
        ctx.problem.limit_state_names.clone()
    };
    let reliability: Vec<_> = v
        .reliability
        .iter()
        .zip(&ls_names)
        .enumerate()
        .map(|(i, (r, name))| {
            let target = targets.get(i).copied();
            match r {
                Verified::Estimate(s) => json!({
                    "limit_state": name,
                    "target_beta": target,
                    "beta": s.beta,
                    "pf": s.pf,
                    "cov": s.cov,
                    "levels": s.levels,
                    "calls": s.calls,
                }),
                Verified::Floor { levels, partial_pf } => json!({
                    "limit_state": name,
                    "target_beta": target,
                    "beta_lower_bound": r.beta(),
                    "floor": { "levels": levels, "partial_pf": partial_pf },
                }),
            }
        })
        .collect();
    let deterministic: Vec<_> = ctx
        .problem
        .constraint_names()
        .iter()
        .zip(&v.deterministic)
        .map(|(n, val)| json!({ "constraint": n, "value": val }))
        .collect();
    json!({
        "design": design,
        "cost": ctx.problem.cost(design),
        "samples_per_level": ctx.config.rbdo.verify_samples,
        "reliability": reliability,
        "deterministic": deterministic,
        "exact_pf": ctx.problem.exact_pf(design),
    })
}

fn mode_and_targets(ctx: &Context<'_>) -> Result<(ReliabilityMode, Vec<f64>), CliError> {
    let b = &ctx.config.rbdo;
    let expected = match b.mode {
        ReliabilityMode::System => 1,
        ReliabilityMode::PerComponent => ctx.problem.limit_state_names.len(),
    };
    if b.beta_targets.len() != expected {
        return Err(CliError::Config(format!(
            "rbdo.beta_targets needs {expected} value(s) in {:?} mode, got {}",
            b.mode,
            b.beta_targets.len()
        )));
    }
    Ok((b.mode, b.beta_targets.clone()))
}

/// Reliability verification of the configured design on the true limit states.
pub fn verify(ctx: &Context<'_>) -> Result<Option<bool>, CliError> {
    let (mode, targets) = mode_and_targets(ctx)?;
    let design = ctx.problem.design.clone();
    let values = design.values.clone();
    let v = ctx.with_problem(design, targets.clone(), mode, |p| {
        verify_design(p, &values, ctx.config.rbdo.verify_samples, ctx.seed("verify"), ctx.exec)
    })?;
    ctx.out.write_json("verification.json", &verification_json(ctx, &v, &targets, &values))?;
    Ok(None)
}

fn history_tables(ctx: &Context<'_>, out: &RunDir, h: &RbdoHistory, constraint_names: &[String]) -> Result<(), CliError> {
    let names = ctx.design_names();
    let mut columns: Vec<String> = vec!["iteration".into()];
    columns.extend(names.iter().cloned());
    columns.extend(names.iter().map(|n| format!("normalized_{n}")));
    let mut design = Table::new(columns);

    let mut columns: Vec<String> = vec!["iteration".into()];
    for n in constraint_names {
        columns.extend([format!("beta_{n}"), format!("pf_{n}"), format!("cov_{n}")]);
    }
    columns.extend(["spread".into()]);
    let mut beta = Table::new(columns);

    let mut cost = Table::new(["iteration", "cost", "normalized_cost", "theta", "step_exponent"]);
    let initial_cost = h.iterations.first().map_or(1.0, |i| i.cost);

    let mut columns: Vec<String> = vec!["iteration".into()];
    columns.extend(ctx.problem.limit_state_names.iter().map(|n| format!("calls_{n}")));
    columns.push("total".into());
    let mut calls = Table::new(columns);

    for it in &h.iterations {
        let i = it.iteration.to_string();
        let mut row = vec![i.clone()];
        row.extend(it.design.iter().chain(&it.normalized_design).map(|v| num(*v)));
        design.push(row);

        let mut row = vec![i.clone()];
        for r in &it.reliability {
            row.extend([r.beta, r.pf, r.cov].map(num));
        }
        row.push(num(it.bracket.spread));
        beta.push(row);

        let step = it.step_exponent.map_or_else(|| "-".to_string(), |e| e.to_string());
        cost.push(vec![i.clone(), num(it.cost), num(it.cost / initial_cost), num(it.theta), step]);

        let mut row = vec![i];
        row.extend(it.calls.iter().map(usize::to_string));
        row.push(it.calls.iter().sum::<usize>().to_string());
        calls.push(row);
    }
    out.write_table("design_trajectory.tsv", &design)?;
    out.write_table("beta_trajectory.tsv", &beta)?;
    out.write_table("cost_trajectory.tsv", &cost)?;
    out.write_table("calls_trajectory.tsv", &calls)
}

struct RbdoOutcome {
    cost: f64,
    verified: Vec<f64>,
    calls: usize,
    converged: bool,
}

fn rbdo_one(ctx: &Context<'_>, out: &RunDir, mode: ReliabilityMode, targets: Vec<f64>) -> Result<RbdoOutcome, CliError> {
    let start = match ctx.config.rbdo.start {
        StartDesign::Initial => ctx.problem.design.clone(),
        StartDesign::Ddo => {
            let r = ctx.with_problem(ctx.problem.design.clone(), targets.clone(), mode, ddo_solve)?;
            ddo_outputs(ctx, out, &r)?;
            r.design
        }
    };
    let (run, verification) = ctx.with_problem(start, targets.clone(), mode, |p| -> Result<_, CliError> {
        let run = rbdo_solve(p, ctx.exec)?;
        let v = verify_design(
            p,
            &run.history.final_design.values,
            ctx.config.rbdo.verify_samples,
            ctx.seed("verify"),
            ctx.exec,
        );
        Ok((run, v))
    })?;
    let h = &run.history;
    for (s, name) in run.surrogates.iter().zip(&ctx.problem.limit_state_names) {
        write_surrogate(ctx, out, name, s, ctx.config.refine.k)?;
    }
    out.write_json("history.json", h)?;
    let constraint_names: Vec<String> = match mode {
        ReliabilityMode::System => vec!["system".into()],
        ReliabilityMode::PerComponent => ctx.problem.limit_state_names.clone(),
    };
    history_tables(ctx, out, h, &constraint_names)?;

    let design = h.final_design.values.clone();
    let v = verification?;
    out.write_json("verification.json", &verification_json(ctx, &v, &targets, &design))?;
    Ok(RbdoOutcome {
        cost: ctx.problem.cost(&design),
        verified: v.reliability.iter().map(Verified::beta).collect(),
        calls: h.total_calls().iter().sum(),
        converged: h.converged,
    })
}

/// Full RBDO from the deterministic optimum, followed by verification.
pub fn rbdo(ctx: &Context<'_>) -> Result<Option<bool>, CliError> {
    ctx.problem.require_design("rbdo")?;
    let sweep = &ctx.config.rbdo.sweep;
    if sweep.is_empty() {
        let (mode, targets) = mode_and_targets(ctx)?;
        let o = rbdo_one(ctx, ctx.out, mode, targets)?;
        return Ok(Some(o.converged));
    }
    let mut table = Table::new(["beta_target", "cost", "verified_beta", "calls", "converged"]);
    let mut all = true;
    for &beta in sweep {
        let dir = ctx.out.subdir(&format!("beta-{}", num(beta)));
        let o = rbdo_one(ctx, &dir, ReliabilityMode::System, vec![beta])?;
        all &= o.converged;
        table.push(vec![
            num(beta),
            num(o.cost),
            num(o.verified[0]),
            o.calls.to_string(),
            o.converged.to_string(),
        ]);
        // Written after every target so a failure keeps earlier rows.
        ctx.out.write_table("sweep.tsv", &table)?;
    }
    Ok(Some(all))
}
