use proptest::prelude::*;

use rbdo_core::kriging::{fit, Doe, FitOptions, KrigingModel};
use rbdo_core::models::{hull_cost, hull_limit_states, HullGeometry, Material};
use rbdo_core::optimizer::{denormalize, normalize};
use rbdo_core::probability::{lognormal_shape_scale, normal, Family, Marginal};
use rbdo_core::refine::{kmeans, margin_probability};
use rbdo_core::reliability::generalized_beta;
use rbdo_core::Matrix;

fn family() -> impl Strategy<Value = Family> {
    prop_oneof![Just(Family::Normal), Just(Family::Lognormal), Just(Family::Uniform)]
}

fn geometry() -> impl Strategy<Value = HullGeometry> {
    (
        10.0..40.0f64,
        80.0..300.0f64,
        5.0..20.0f64,
        50.0..200.0f64,
        10.0..40.0f64,
    )
        .prop_map(|(e, hw, ew, wf, ef)| HullGeometry {
            shell_thickness: e,
            web_height: hw,
            web_thickness: ew,
            flange_width: wf,
            flange_thickness: ef,
            frame_spacing: 600.0,
            radius: 2488.0,
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn standard_round_trip(fam in family(), mean in 1.0..100.0f64, cv in 0.01..0.5f64, p in 1e-6..(1.0 - 1e-6)) {
        let m = Marginal::from_moments(fam, mean, cv * mean).unwrap();
        let x = m.quantile(p).unwrap();
        let u = m.to_standard(x).unwrap();
        let back = m.from_standard(u);
        prop_assert!((back - x).abs() <= 1e-9 * x.abs().max(1.0), "{x} -> {u} -> {back}");
    }

    #[test]
    fn lognormal_moments_recovered(mean in 1e-3..1e6f64, cv in 1e-3..2.0f64) {
        let sd = cv * mean;
        let (location, shape) = lognormal_shape_scale(mean, sd).unwrap();
        let m = (location + 0.5 * shape * shape).exp();
        let s = m * (shape * shape).exp_m1().sqrt();
        prop_assert!((m - mean).abs() <= 1e-12 * mean);
        prop_assert!((s - sd).abs() <= 1e-12 * sd);
    }

    #[test]
    fn quantile_increasing(fam in family(), mean in 1.0..100.0f64, cv in 0.01..0.5f64, p in 0.001..0.99f64, dp in 1e-4..0.009f64) {
        let m = Marginal::from_moments(fam, mean, cv * mean).unwrap();
        prop_assert!(m.quantile(p + dp).unwrap() > m.quantile(p).unwrap());
    }

    #[test]
    fn beta_decreasing_in_pf(a in 1e-12..0.999f64, b in 1e-12..0.999f64) {
        prop_assume!(a != b);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(generalized_beta(lo).unwrap() > generalized_beta(hi).unwrap());
    }

    #[test]
    fn margin_is_probability(mean in -50.0..50.0f64, sd in 0.0..10.0f64, k in 0.01..5.0f64) {
        let p = margin_probability(mean, sd, k);
        prop_assert!((0.0..=1.0).contains(&p));
        prop_assert!(margin_probability(mean, sd, k * 1.5) >= p);
    }

    #[test]
    fn margin_matches_direct_difference(mean in -5.0..5.0f64, sd in 0.1..5.0f64, k in 0.1..4.0f64) {
        let direct = normal::cdf((k * sd - mean) / sd) - normal::cdf((-k * sd - mean) / sd);
        prop_assert!((margin_probability(mean, sd, k) - direct).abs() < 1e-14);
    }

    #[test]
    fn hull_cost_increases_with_every_dimension(g in geometry(), which in 0usize..5) {
        let m = Material::default();
        let base = hull_cost(&g, &m).unwrap();
        let mut up = g;
        let h = 1e-3;
        match which {
            0 => up.shell_thickness += h,
            1 => up.web_height += h,
            2 => up.web_thickness += h,
            3 => up.flange_width += h,
            _ => up.flange_thickness += h,
        }
        prop_assert!(hull_cost(&up, &m).unwrap() > base);
    }

    #[test]
    fn hull_cost_density_scaling(g in geometry(), a in 0.5..2.0f64, b in 0.5..2.0f64) {
        let m = Material::default();
        let scaled = Material { steel_density: a * m.steel_density, water_density: b * m.water_density, ..m };
        let ratio = hull_cost(&g, &scaled).unwrap() / hull_cost(&g, &m).unwrap();
        prop_assert!((ratio - a / b).abs() < 1e-12 * (a / b));
    }

    #[test]
    fn system_below_components(pn in 0.01..10.0f64, pm in 0.01..10.0f64, p0 in 0.1..5.0f64) {
        let v = hull_limit_states(pn, pm, p0).unwrap();
        prop_assert!(v.system <= v.overall && v.system <= v.interframe);
    }

    #[test]
    fn normalization_round_trip(x in prop::collection::vec(-1e3..1e3f64, 1..8), seed in any::<u64>()) {
        let init: Vec<f64> = x.iter().enumerate().map(|(i, _)| 1.0 + (seed.rotate_left(i as u32) % 1000) as f64).collect();
        let back = denormalize(&normalize(&x, &init).unwrap(), &init).unwrap();
        for (a, b) in back.iter().zip(&x) {
            prop_assert!((a - b).abs() <= 1e-14 * b.abs().max(1.0));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn kmeans_objective_never_increases(rows in prop::collection::vec((-10.0..10.0f64, -10.0..10.0f64), 20..200), k in 1usize..8, seed in any::<u64>()) {
        let pts = Matrix::from_rows(&rows.iter().map(|&(a, b)| vec![a, b]).collect::<Vec<_>>()).unwrap();
        let c = kmeans(&pts, k, seed).unwrap();
        for w in c.wcss.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-12));
        }
    }

    #[test]
    fn kriging_interpolates(n in 5usize..30, dim in 1usize..4, seed in any::<u64>()) {
        let lo = vec![0.0; dim];
        let hi = vec![1.0; dim];
        let x = rbdo_core::doe::latin_hypercube(n, &lo, &hi, seed);
        let y: Vec<f64> = x.iter_rows().map(|r| r.iter().map(|v| (3.0 * v).sin()).sum()).collect();
        let model = fit(Doe::new(x.clone(), y.clone()).unwrap(), &FitOptions { seed, ..FitOptions::default() }).unwrap();
        let sigma2 = model.process_variance();
        for (row, &yi) in x.iter_rows().zip(&y) {
            let p = model.predict(row).unwrap();
            prop_assert!((p.mean - yi).abs() <= 1e-8 * yi.abs().max(1.0));
            prop_assert!(p.variance <= 1e-6 * sigma2.max(f64::MIN_POSITIVE));
        }
    }

    #[test]
    fn snapshot_round_trip(n in 5usize..30, dim in 1usize..4, seed in any::<u64>(), probe in prop::collection::vec(0.0..1.0f64, 3)) {
        let x = rbdo_core::doe::latin_hypercube(n, &vec![0.0; dim], &vec![1.0; dim], seed);
        let y: Vec<f64> = x.iter_rows().map(|r| r.iter().map(|v| v * v - v).sum()).collect();
        let model = fit(Doe::new(x, y).unwrap(), &FitOptions { seed, ..FitOptions::default() }).unwrap();
        let back = KrigingModel::from_snapshot(&model.snapshot()).unwrap();
        prop_assert_eq!(back.snapshot(), model.snapshot());
        let a = model.predict(&probe[..dim]).unwrap();
        let b = back.predict(&probe[..dim]).unwrap();
        prop_assert!((a.mean - b.mean).abs() <= 1e-10 * a.mean.abs().max(1.0));
        prop_assert!((a.variance - b.variance).abs() <= 1e-10 * model.process_variance().max(1.0));
    }
}
