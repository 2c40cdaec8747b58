use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use tcl_engine::activity::ActivityModel;
use tcl_engine::levy::{LevyComposition, SubordinatorSpec};
use tcl_engine::model_zoo::*;
use tcl_engine::montecarlo::*;
use tcl_engine::rng::aux_rng;
use tcl_engine::transforms::{joint_cf_T_B, TransformNumerics};

fn cir() -> ActivityModel {
    ActivityModel::cir(1.0, 0.5)
}

fn gamma() -> SubordinatorSpec {
    SubordinatorSpec::gamma(0.2)
}

fn free(a_c: [f64; 4]) -> FreeParams {
    FreeParams {
        a_c,
        a_j: [-0.1, 0.2],
        continuous_clock: None,
        jump_clock: None,
        rho: None,
        spec: gamma(),
        rate_int: 0.0,
        dividend: 0.0,
        no_arbitrage: false,
    }
}

#[test]
fn standard_normal_case_passes_anderson_darling() {
    let d = simulate_Y(
        &ActivityModel::deterministic(),
        &LevyComposition::standard(0.0),
        &SubordinatorSpec::identity(),
        1.0,
        20_000,
        0.01,
        1,
    )
    .unwrap();
    let a2 = anderson_darling_normal(&d, 0.0, 1.0);
    assert!(a2 < AD_CRITICAL_5PCT, "A² = {a2}");
}

#[test]
fn clock_mean_is_the_horizon() {
    for t in [0.5, 1.0, 2.0] {
        let b = simulate_paths(&cir(), &LevyComposition::standard(0.0), &gamma(), t, 50_000, 2e-3, 2).unwrap();
        let d = EmpiricalDistribution::new(b.clock.clone()).unwrap();
        assert!((d.mean() - t).abs() < 3.0 * d.mean_stderr(), "t={t}: {} ± {}", d.mean(), d.mean_stderr());
    }
}

#[test]
fn leverage_makes_returns_left_skewed() {
    // a 10⁶-path pilot gives skewness ≈ −0.31 at ρ = −0.7 and clearly negative at −0.5
    let d = simulate_Y(&cir(), &LevyComposition::standard(-0.5), &gamma(), 1.0, 100_000, 5e-3, 3).unwrap();
    assert!(d.skewness() < -3.0 * d.skewness_stderr(), "{} ± {}", d.skewness(), d.skewness_stderr());
}

#[test]
fn samples_do_not_depend_on_thread_count() {
    let run = |threads| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| simulate_paths(&cir(), &LevyComposition::new(0.1, 1.0, -0.3).unwrap(), &gamma(), 1.0, 2000, 0.01, 9))
            .unwrap()
    };
    let (a, b) = (run(1), run(3));
    assert_eq!(a, b);
    assert!(a.y.iter().zip(&b.y).all(|(x, y)| x.to_bits() == y.to_bits()));
}

#[test]
fn audits() {
    let b = simulate_paths(&cir(), &LevyComposition::standard(-0.5), &gamma(), 1.0, 100_000, 5e-3, 4).unwrap();
    let c = b.correlation_audit();
    assert!(c.within(3.0), "{c:?}");
    let i = independence_audit(&cir(), &gamma(), 1.0, 0.01, 2000, 5).unwrap();
    assert!(i.within(3.0), "{i:?}");
    assert!(b.clock.iter().all(|&t| t >= 0.0));
    for r in &b.recorded {
        assert!(r.clock.windows(2).all(|w| w[1] >= w[0]) && r.rate.iter().all(|&v| v >= 0.0));
    }
}

#[test]
fn independent_seeds_pass_the_two_sample_test() {
    let levy = LevyComposition::standard(-0.3);
    let a = simulate_Y(&cir(), &levy, &gamma(), 1.0, 20_000, 0.01, 10).unwrap();
    let b = simulate_Y(&cir(), &levy, &gamma(), 1.0, 20_000, 0.01, 11).unwrap();
    assert!(two_sample_ks(&a, &b) < ks_critical_value(20_000, 20_000, 0.01));
}

#[test]
fn joint_transform_of_clock_and_driver_matches_simulation() {
    // E e^{−iT_1 − iB_{0.5}} from an independent Euler loop
    let (n, steps) = (400_000, 500);
    let h = 1.0 / steps as f64;
    let mut sum = Complex64::new(0.0, 0.0);
    let mut rng = aux_rng(77, 0);
    for _ in 0..n {
        let (mut v, mut t, mut b, mut b_half) = (1.0f64, 0.0, 0.0, 0.0);
        for k in 0..steps {
            let db = h.sqrt() * rng.sample::<f64, _>(StandardNormal);
            t += v.max(0.0) * h;
            v += (1.0 - v.max(0.0)) * h + 0.5 * v.max(0.0).sqrt() * db;
            b += db;
            if k + 1 == steps / 2 {
                b_half = b;
            }
        }
        sum += Complex64::from_polar(1.0, -t - b_half);
    }
    let mc = sum / n as f64;
    let pde = joint_cf_T_B(&cir(), 1.0, 0.5, 1.0, 1.0, &TransformNumerics::default()).unwrap();
    assert!((mc - pde).norm() < 5e-3, "{mc} vs {pde}");
}

#[test]
fn conditional_jump_factor_matches_simulation() {
    let mut f = free([0.0; 4]);
    f.continuous_clock = Some(cir());
    let m = build_sv_variant(SVVariant::Sv1, f).unwrap();
    let (r, s) = (1.0, 0.8);
    let mut rng = aux_rng(12, 0);
    let draws: Vec<f64> = (0..1_000_000)
        .map(|_| {
            let j = m.spec.sample_increment(&mut rng, s);
            let x = m.a_j[0] * j + m.a_j[1] * j.sqrt() * rng.sample::<f64, _>(StandardNormal);
            (-r * x).exp()
        })
        .collect();
    let d = EmpiricalDistribution::new(draws).unwrap();
    let exact = jump_part_conditional_laplace(&m, r, s).unwrap();
    assert!((d.mean() - exact).abs() < 3.0 * d.mean_stderr(), "{} ± {} vs {exact}", d.mean(), d.mean_stderr());
}

#[test]
fn shared_and_pinned_clocks_are_structural() {
    let mut f = free([0.05, 0.0, -0.2, 0.1]);
    f.jump_clock = Some(cir());
    let sv3 = build_sv_variant(SVVariant::Sv3, f).unwrap();
    let b = simulate_two_factor(&sv3, 1.0, 2000, 0.01, 6).unwrap();
    assert_eq!(b.clock_c, b.clock_j);
    assert!(b.recorded.iter().all(|p| p.clock_c == p.clock_j && p.rate_c == p.rate_j));

    let mut f = free([0.05, 0.2, 0.1, 0.1]);
    f.continuous_clock = Some(cir());
    let sv1 = build_sv_variant(SVVariant::Sv1, f).unwrap();
    let b = simulate_two_factor(&sv1, 1.0, 2000, 0.01, 6).unwrap();
    assert!(b.clock_j.iter().all(|&t| t == 1.0));
}

#[test]
fn frozen_clocks_with_a_floor_give_gaussian_variance() {
    let a_c = [0.05, 0.2, 0.3, 0.1];
    let model = TwoFactorModel {
        a_c,
        a_j: [0.0, 0.0],
        continuous_clock: ActivityModel::cir(1.0, 0.0).with_eps(0.5),
        jump_clock: ActivityModel::cir(1.0, 0.0),
        rho: 0.4,
        spec: gamma(),
        rate_int: 0.0,
        dividend: 0.0,
        shared_clock: false,
        no_arbitrage: true,
        variant: None,
    };
    let b = simulate_two_factor(&model, 1.0, 100_000, 0.01, 8).unwrap();
    let d = b.distribution().unwrap();
    let expected = (0.04 + 0.09 + 0.01) * 1.5;
    assert!((d.variance() - expected).abs() < 3.0 * d.variance_stderr(), "{} vs {expected}", d.variance());
    assert!((d.mean() - 0.05 * 1.5).abs() < 3.0 * d.mean_stderr());
}

#[test]
fn price_map_reproduces_returns() {
    let mut f = free([0.05, 0.0, 0.2, 0.1]);
    f.jump_clock = Some(cir());
    f.rate_int = 0.03;
    f.dividend = 0.01;
    let m = build_sv_variant(SVVariant::Sv2, f).unwrap();
    let b = simulate_two_factor(&m, 1.0, 2000, 0.01, 3).unwrap();
    for (s, &y) in b.prices(&m, 100.0).iter().zip(&b.y) {
        assert!((m.log_return(100.0, 1.0, *s) - y).abs() < 1e-12);
    }
}

#[test]
fn sv_routes_match_simulation_at_desk_scale() {
    let num = TransformNumerics::default();
    let mut f = free([0.05, 0.0, 0.2, 0.1]);
    f.jump_clock = Some(cir());
    f.continuous_clock = Some(ActivityModel::deterministic().with_eps(0.2));
    let sv2 = build_sv_variant(SVVariant::Sv2, f).unwrap();
    let mut f = free([0.05, 0.0, -0.2, 0.1]);
    f.jump_clock = Some(cir());
    let sv3 = build_sv_variant(SVVariant::Sv3, f).unwrap();
    for m in [sv2, sv3] {
        let d = simulate_two_factor(&m, 1.0, 100_000, 2e-3, 21).unwrap().distribution().unwrap();
        let (mc, se) = d.laplace(1.0);
        let a = laplace_two_factor(&m, 1.0, 1.0, &num).unwrap();
        assert!((mc - a).abs() / a < 1e-2 && (mc - a).abs() < 5.0 * se + 1e-3, "{:?}: {mc} ± {se} vs {a}", m.variant);
    }
}

#[test]
fn dumps_round_trip() {
    let b = simulate_paths(&cir(), &LevyComposition::standard(0.2), &gamma(), 1.0, 1000, 0.05, 1).unwrap();
    let dir = tempfile::tempdir().unwrap();
    b.write_dump(dir.path()).unwrap();
    assert_eq!(read_dump_column(&dir.path().join("y.f64")).unwrap(), b.y);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["columns"].as_array().unwrap().len(), 7);
    assert_eq!(manifest["n_paths"], 1000);
}
