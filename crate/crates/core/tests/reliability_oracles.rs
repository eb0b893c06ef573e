use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rbdo_core::models::hull_spec;
use rbdo_core::probability::{augmented_confidence_box, normal, MarginalSpec, RandomVectorSpec};
use rbdo_core::reliability::{subset_simulate, SubsetConfig};
use rbdo_core::Serial;

fn config(seed: u64) -> SubsetConfig {
    SubsetConfig {
        seed,
        ..SubsetConfig::default()
    }
}

#[test]
fn gaussian_mean_sensitivity() {
    // g = c - x with x ~ N(θ, 1): ∂pf/∂θ = φ(c - θ).
    let (c, theta) = (3.0, 0.0);
    let spec = RandomVectorSpec::new(vec!["x".into()], vec![MarginalSpec::normal(theta, 1.0).linked(0)]).unwrap();
    let v = spec.resolve(&[theta]).unwrap();
    let g = |x: &[f64]| c - x[0];
    let r = subset_simulate(&g, &v, &config(12), &Serial).unwrap();
    let s = r.sensitivities.unwrap()[0];
    let exact = normal::pdf(c - theta);
    assert!((s.value - exact).abs() <= 0.2 * exact, "{} vs {exact}", s.value);
}

#[test]
fn score_matches_common_random_number_differences() {
    let spec = RandomVectorSpec::new(
        vec!["x1".into(), "x2".into()],
        vec![
            MarginalSpec::normal(0.0, 1.0).linked(0),
            MarginalSpec::normal(0.0, 1.0).linked(1),
        ],
    )
    .unwrap();
    let g = |x: &[f64]| 3.0 - (x[0] + x[1]) / 2f64.sqrt();
    let theta = [0.2, -0.1];
    let score = subset_simulate(&g, &spec.resolve(&theta).unwrap(), &config(5), &Serial)
        .unwrap()
        .sensitivities
        .unwrap();
    let delta = 0.05;
    for j in 0..2 {
        let mut up = theta;
        let mut down = theta;
        up[j] += delta;
        down[j] -= delta;
        let pu = subset_simulate(&g, &spec.resolve(&up).unwrap(), &config(40), &Serial).unwrap().pf;
        let pd = subset_simulate(&g, &spec.resolve(&down).unwrap(), &config(40), &Serial).unwrap().pf;
        let fd = (pu - pd) / (2.0 * delta);
        assert!((score[j].value - fd).abs() <= 0.2 * fd.abs(), "{j}: {} vs {fd}", score[j].value);
    }
}

#[test]
fn hull_confidence_box_contains_augmented_samples() {
    let spec = hull_spec();
    let init = spec.initial_design();
    let lower: Vec<f64> = init.iter().map(|v| 0.5 * v).collect();
    let upper: Vec<f64> = init.iter().map(|v| 1.5 * v).collect();
    let bx = augmented_confidence_box(&spec, &lower, &upper, 8.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let total = 1_000_000;
    let per_design = 100;
    let mut inside = 0usize;
    for d in 0..total / per_design {
        let theta: Vec<f64> = lower.iter().zip(&upper).map(|(l, u)| rng.random_range(*l..*u)).collect();
        let x = spec.resolve(&theta).unwrap().sample(per_design, d as u64);
        inside += x.iter_rows().filter(|r| bx.contains(r)).count();
    }
    assert!(inside as f64 >= (1.0 - 1e-4) * total as f64, "{inside}");
}
