use rbdo_core::exec::Counted;
use rbdo_core::models::{Benchmark, BenchmarkComponent};
use rbdo_core::probability::DesignVector;
use rbdo_core::rbdo::{ddo_solve, rbdo_solve, verify_design, RbdoProblem, RbdoSettings, ReliabilityMode, Verified};
use rbdo_core::reliability::subset_simulate;
use rbdo_core::{LimitState, Serial};

fn benchmark() -> Benchmark {
    Benchmark::by_name(Benchmark::RBDO_CLOSED_FORM).unwrap()
}

fn problem<'a>(
    b: &Benchmark,
    cost: &'a (dyn Fn(&[f64]) -> f64 + Sync),
    g: &'a dyn LimitState,
    start: Vec<f64>,
    beta: f64,
) -> RbdoProblem<'a> {
    let (lo, hi) = b.design_bounds();
    RbdoProblem {
        cost,
        deterministic_constraints: Vec::new(),
        limit_states: vec![g],
        spec: b.spec(),
        design: DesignVector::new(start, lo, hi).unwrap(),
        mode: ReliabilityMode::System,
        beta_targets: vec![beta],
        settings: RbdoSettings {
            seed: 3,
            ..RbdoSettings::default()
        },
    }
}

#[test]
fn deterministic_optimum_lies_on_the_limit_state() {
    let b = benchmark();
    let cost = |t: &[f64]| b.cost(t);
    let g = b.system();
    let r = ddo_solve(&problem(&b, &cost, &g, vec![7.0, 3.0], 3.0)).unwrap();
    assert!(r.converged);
    let expect = b.ddo_optimum().unwrap();
    for (a, e) in r.design.values.iter().zip(&expect) {
        assert!((a - e).abs() < 1e-3);
    }
    assert!(r.limit_state_values[0].abs() < 1e-3);
}

#[test]
fn infeasible_start_reduces_violation() {
    let b = benchmark();
    let cost = |t: &[f64]| b.cost(t);
    let g = b.system();
    let r = ddo_solve(&problem(&b, &cost, &g, vec![1.0, 1.0], 3.0)).unwrap();
    let violations: Vec<f64> = r
        .minimum
        .iterations
        .iter()
        .map(|it| it.constraints.iter().cloned().fold(0.0, f64::max))
        .collect();
    assert!(violations[0] > 0.0);
    let first_feasible = violations.iter().position(|&v| v <= 1e-8).unwrap_or(violations.len());
    for w in violations[..first_feasible].windows(2) {
        assert!(w[1] <= w[0], "{violations:?}");
    }
}

#[test]
fn rbdo_reaches_target_reliability_without_extra_calls() {
    let b = benchmark();
    let cost = |t: &[f64]| b.cost(t);
    let g: Counted<BenchmarkComponent> = Counted::new(b.system());
    let beta0 = 3.0;
    let ddo = ddo_solve(&problem(&b, &cost, &g, vec![4.5, 4.5], beta0)).unwrap();
    let ddo_calls = g.calls();
    let p = problem(&b, &cost, &g, ddo.design.values.clone(), beta0);
    let run = rbdo_solve(&p, &Serial).unwrap();
    let h = &run.history;
    assert!(h.converged);

    // True calls only come from the initial design and enrichment.
    let surrogate_calls: usize = run.surrogates.iter().map(|s| s.calls()).sum();
    assert_eq!(g.calls() - ddo_calls, surrogate_calls);
    assert_eq!(h.total_calls(), vec![surrogate_calls]);
    for w in h.iterations.windows(2) {
        assert!(w[1].calls[0] >= w[0].calls[0]);
    }

    let optimum = b.rbdo_optimum(beta0).unwrap();
    let final_beta = h.iterations.last().unwrap().reliability[0].beta;
    assert!((final_beta - beta0).abs() <= 0.02 * beta0, "{final_beta}");
    let optimal_cost = b.cost(&optimum);
    let cost_now = b.cost(&h.final_design.values);
    assert!((cost_now - optimal_cost).abs() <= 0.02 * optimal_cost, "{cost_now} vs {optimal_cost}");

    let v = verify_design(&p, &h.final_design.values, 100_000, 21, &Serial).unwrap();
    match &v.reliability[0] {
        Verified::Estimate(r) => assert!((2.9..=3.1).contains(&r.beta), "{}", r.beta),
        other => panic!("{other:?}"),
    }
    assert!(v.deterministic.is_empty());
}

#[test]
fn verification_of_a_dominated_system() {
    // Second component far from failing: the system reliability equals the
    // first component's.
    let b = benchmark();
    let cost = |t: &[f64]| b.cost(t);
    let g1 = b.system();
    let g2 = |x: &[f64]| 50.0 + x[0] - x[1];
    let design = vec![4.0, 4.0];
    let mut p = problem(&b, &cost, &g1, design.clone(), 3.0);
    p.limit_states.push(&g2);
    let v = verify_design(&p, &design, 100_000, 2, &Serial).unwrap();
    let system = v.reliability[0].beta();
    let vector = p.spec.resolve(&design).unwrap();
    let single = subset_simulate(&g1, &vector, &rbdo_core::reliability::SubsetConfig { samples_per_level: 100_000, seed: 9, ..Default::default() }, &Serial)
        .unwrap();
    let exact = b.exact_beta(&design).unwrap();
    assert!((system - exact).abs() < 0.05, "{system} vs {exact}");
    assert!((system - single.beta).abs() < 0.05);
}
