use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use rbdo_core::exec::Counted;
use rbdo_core::kriging::{FitOptions, KrigingModel, Trend};
use rbdo_core::models::Benchmark;
use rbdo_core::probability::{augmented_confidence_box, normal, ConfidenceBox, MarginalSpec, RandomVectorSpec};
use rbdo_core::refine::{bracketing, enrich, margin_volume, RefineOptions, Surrogate};
use rbdo_core::reliability::SubsetConfig;
use rbdo_core::{doe, LimitState, Matrix, Serial};

/// Crude Monte Carlo estimate and its standard error.
fn crude_monte_carlo(g: &dyn Fn(&[f64]) -> f64, samples: usize, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fails = 0usize;
    for _ in 0..samples {
        let u = [StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)];
        if g(&u) <= 0.0 {
            fails += 1;
        }
    }
    let p = fails as f64 / samples as f64;
    (p, (p * (1.0 - p) / samples as f64).sqrt())
}

fn series_setup() -> (Benchmark, ConfidenceBox, Vec<Counted<rbdo_core::models::BenchmarkComponent>>) {
    let b = Benchmark::Series2d;
    let bounds = augmented_confidence_box(&b.spec(), &[], &[], 8.0).unwrap();
    let gs = (0..2).map(|l| Counted::new(b.component(l))).collect();
    (b, bounds, gs)
}

#[test]
fn series_benchmark_oracle_is_reproducible() {
    let b = Benchmark::Series2d;
    let g = |u: &[f64]| b.value(u);
    let (p1, s1) = crude_monte_carlo(&g, 2_000_000, 1);
    let (p2, s2) = crude_monte_carlo(&g, 2_000_000, 2);
    assert!((p1 - p2).abs() < 3.0 * (s1 * s1 + s2 * s2).sqrt(), "{p1} vs {p2}");
}

#[test]
fn series_refinement_within_budget() {
    let (b, bounds, gs) = series_setup();
    let v = b.spec().resolve(&[]).unwrap();
    let mut surrogates: Vec<Surrogate> = gs
        .iter()
        .enumerate()
        .map(|(l, g)| {
            let fit = FitOptions {
                seed: 100 + l as u64,
                ..FitOptions::default()
            };
            Surrogate::initial(g, &bounds, 10, fit, &Serial).unwrap()
        })
        .collect();
    let options = RefineOptions {
        clusters: 10,
        budget: 150,
        ..RefineOptions::default()
    };
    let ls: Vec<&dyn LimitState> = gs.iter().map(|g| g as &dyn LimitState).collect();

    let grid = doe::latin_hypercube(10_000, &bounds.lower, &bounds.upper, 5);
    let volume_before: f64 = surrogates.iter().map(|s| margin_volume(s, &grid, 1.96).unwrap()).sum();

    let state = enrich(&mut surrogates, &ls, &v, &bounds, &options, &Serial, 9).unwrap();
    let calls: usize = gs.iter().map(Counted::calls).sum();
    assert!(state.converged, "{:?}", state.rounds.last());
    assert!(state.bracket.spread <= 0.05);
    assert!(calls <= 300, "{calls}");
    assert_eq!(calls, 20 + state.calls_used.iter().sum::<usize>());

    // Every point of every design lies in the box.
    for s in &surrogates {
        for row in s.model().doe().inputs().iter_rows() {
            assert!(bounds.contains(&s.lift(row)));
        }
    }

    let volume_after: f64 = surrogates.iter().map(|s| margin_volume(s, &grid, 1.96).unwrap()).sum();
    assert!(volume_after <= volume_before * 1.05, "{volume_before} -> {volume_after}");

    let g = |u: &[f64]| b.value(u);
    let (oracle, oracle_se) = crude_monte_carlo(&g, 10_000_000, 77);
    let b0 = state.bracket;
    let se = ((b0.cov * b0.pf_zero).powi(2) + oracle_se * oracle_se).sqrt();
    assert!((b0.pf_zero - oracle).abs() <= 3.0 * se, "{} vs {oracle}", b0.pf_zero);
    assert!(b0.pf_plus <= b0.pf_zero && b0.pf_zero <= b0.pf_minus);
}

#[test]
fn infinite_tolerance_skips_enrichment() {
    let (b, bounds, gs) = series_setup();
    let v = b.spec().resolve(&[]).unwrap();
    let mut surrogates = vec![Surrogate::initial(&gs[0], &bounds, 10, FitOptions::default(), &Serial).unwrap()];
    let options = RefineOptions {
        epsilon: f64::INFINITY,
        ..RefineOptions::default()
    };
    let ls: Vec<&dyn LimitState> = vec![&gs[0]];
    let state = enrich(&mut surrogates, &ls, &v, &bounds, &options, &Serial, 1).unwrap();
    assert!(state.converged);
    assert_eq!(state.rounds.len(), 1);
    assert_eq!(state.calls_used, vec![0]);
    assert_eq!(gs[0].calls(), 10);
}

#[test]
fn exact_surrogate_collapses_bracket() {
    // A linear function is reproduced by a linear-trend model with very
    // long correlation lengths, so the three domains coincide.
    let spec = RandomVectorSpec::new(
        vec!["u1".into(), "u2".into()],
        vec![MarginalSpec::normal(0.0, 1.0); 2],
    )
    .unwrap();
    let bounds = augmented_confidence_box(&spec, &[], &[], 8.0).unwrap();
    let x = doe::latin_hypercube(20, &bounds.lower, &bounds.upper, 3);
    let y: Vec<f64> = x.iter_rows().map(|r| 2.5 - (r[0] + r[1]) / 2f64.sqrt()).collect();
    let model = KrigingModel::with_lengths(
        rbdo_core::kriging::Doe::new(x, y).unwrap(),
        Trend::Linear,
        vec![1e3, 1e3],
    )
    .unwrap();
    let s = Surrogate::from_model(&bounds, model, FitOptions::default()).unwrap();
    let v = spec.resolve(&[]).unwrap();
    let cfg = SubsetConfig {
        seed: 4,
        ..SubsetConfig::default()
    };
    let b = bracketing(std::slice::from_ref(&s), None, &v, 1.96, &cfg, &Serial).unwrap();
    assert!(b.spread < 1e-3, "{b:?}");
    let exact = normal::cdf(-2.5);
    assert!((b.pf_zero - exact).abs() < 3.0 * b.cov * exact);
}

#[test]
fn shifted_linear_bracket_matches_closed_form() {
    use rbdo_core::reliability::subset_simulate;
    // Closed form: P[β - a·u/‖a‖ + i k σ <= 0] = Φ(-(β + i k σ)).
    let (beta, sigma) = (3.0, 0.2);
    let k = 1.96;
    let spec = RandomVectorSpec::new(
        vec!["u1".into(), "u2".into()],
        vec![MarginalSpec::normal(0.0, 1.0); 2],
    )
    .unwrap();
    let v = spec.resolve(&[]).unwrap();
    for (i, seed) in [(-1.0, 1u64), (0.0, 2), (1.0, 3)] {
        let g = |u: &[f64]| beta - (u[0] + u[1]) / 2f64.sqrt() + i * k * sigma;
        let r = subset_simulate(&g, &v, &SubsetConfig { seed, ..SubsetConfig::default() }, &Serial).unwrap();
        let exact = normal::cdf(-(beta + i * k * sigma));
        assert!((r.pf - exact).abs() < 3.0 * r.cov * exact, "i={i}: {} vs {exact}", r.pf);
    }
}

#[test]
fn refinement_density_has_finite_mass() {
    // Coarse quadrature of exp(log density) over a 2-D box.
    let bounds = ConfidenceBox::new(vec![-3.0, -3.0], vec![3.0, 3.0]).unwrap();
    let x = doe::latin_hypercube(12, &bounds.lower, &bounds.upper, 8);
    let y: Vec<f64> = x.iter_rows().map(|r| 1.0 - r[0] * r[0] + r[1]).collect();
    let s = Surrogate::fit(&bounds, x, y, FitOptions::default()).unwrap();
    let n = 60;
    let mut pts = Matrix::with_cols(2);
    for i in 0..n {
        for j in 0..n {
            let a = -3.0 + 6.0 * (i as f64 + 0.5) / n as f64;
            let b = -3.0 + 6.0 * (j as f64 + 0.5) / n as f64;
            pts.push_row(&[a, b]);
        }
    }
    let mass = margin_volume(&s, &pts, 1.96).unwrap() * 36.0;
    assert!(mass.is_finite() && mass > 0.0 && mass <= 36.0);
}
