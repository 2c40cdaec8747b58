use tcl_engine::activity::{clock_mgf, ActivityModel};
use tcl_engine::levy::{LevyComposition, SubordinatorSpec};
use tcl_engine::model_zoo::*;
use tcl_engine::transforms::{laplace_Y, TransformNumerics};
use tcl_engine::EngineError;

fn free(a_c: [f64; 4]) -> FreeParams {
    FreeParams {
        a_c,
        a_j: [-0.1, 0.2],
        continuous_clock: None,
        jump_clock: None,
        rho: None,
        spec: SubordinatorSpec::gamma(0.2),
        rate_int: 0.0,
        dividend: 0.0,
        no_arbitrage: false,
    }
}

fn sv1(a_c: [f64; 4]) -> TwoFactorModel {
    let mut f = free(a_c);
    f.continuous_clock = Some(ActivityModel::cir(1.5, 0.4));
    build_sv_variant(SVVariant::Sv1, f).unwrap()
}

fn sv2(a_c: [f64; 4], eps: f64) -> TwoFactorModel {
    let mut f = free(a_c);
    f.continuous_clock = Some(ActivityModel::deterministic().with_eps(eps));
    f.jump_clock = Some(ActivityModel::cir(1.0, 0.5));
    build_sv_variant(SVVariant::Sv2, f).unwrap()
}

fn sv3(a_c: [f64; 4]) -> TwoFactorModel {
    let mut f = free(a_c);
    f.jump_clock = Some(ActivityModel::cir(1.0, 0.5));
    build_sv_variant(SVVariant::Sv3, f).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn conditional_jump_factor_matches_gamma_laplace() {
    let mut m = sv1([0.0; 4]);
    m.a_j = [1.0, 0.0];
    let v = jump_part_conditional_laplace(&m, 1.0, 1.0).unwrap();
    assert!((v - 0.4018776).abs() < 1e-7, "{v}");
    assert_eq!(jump_part_conditional_laplace(&m, 0.0, 1.3).unwrap(), 1.0);
    m.a_j = [-10.0, 0.0];
    assert!(matches!(jump_part_conditional_laplace(&m, 1.0, 1.0), Err(EngineError::Domain(_))));
}

#[test]
fn continuous_symbols_split_the_loadings() {
    let mut m = sv1([0.1, 0.3, 0.4, 0.2]);
    m.variant = None;
    m.rho = 0.6;
    let f = continuous_factor(&m, 1.0);
    assert!((f.beta - 0.48).abs() < 1e-15 && (f.n - 0.14).abs() < 1e-15);
    assert!((f.beta * f.beta + f.n * f.n - 0.25).abs() < 1e-15);
    assert!((f.alpha - (0.1 - 0.5 * (0.04 + 0.0196))).abs() < 1e-15);
}

#[test]
fn product_route_is_one_at_zero() {
    let num = TransformNumerics::default();
    let v = laplace_Y_sv14(&sv1([0.05, 0.2, 0.1, 0.1]), 1.0, 0.0, &num).unwrap();
    assert!((v - 1.0).abs() < 1e-4, "{v}");
}

#[test]
fn sv1_without_jumps_is_a_single_correlated_levy_composition() {
    // a1 T + a2 B^c_T + a3 B^j_T + a4 W_T is αT + βZ_T with ρ = a2/β
    let num = TransformNumerics::default();
    let a_c = [0.05, 0.2, 0.1, 0.1];
    let mut m = sv1(a_c);
    m.a_j = [0.0, 0.0];
    let beta = (a_c[1] * a_c[1] + a_c[2] * a_c[2] + a_c[3] * a_c[3]).sqrt();
    let levy = LevyComposition::new(a_c[0], beta, a_c[1] / beta).unwrap();
    for r in [0.5, 1.0] {
        let a = laplace_Y_sv14(&m, 1.0, r, &num).unwrap();
        let b = laplace_Y(&m.continuous_clock, &levy, &SubordinatorSpec::identity(), 1.0, r, &num).unwrap();
        assert!(rel(a, b) < 1e-3, "r={r}: {a} vs {b}");
    }
}

#[test]
fn sv2_without_a3_is_the_product_route() {
    let num = TransformNumerics::default();
    let m = sv2([0.05, 0.0, 0.0, 0.1], 0.2);
    for r in [0.5, 1.0] {
        let a = laplace_Y_sv2(&m, 1.0, r, &num).unwrap();
        let b = laplace_Y_sv14(&m, 1.0, r, &num).unwrap();
        assert!(rel(a, b) < 1e-6, "r={r}: {a} vs {b}");
        let psi = jump_exponent(&m, r).unwrap();
        let direct = clock_mgf(&m.jump_clock, 1.0, psi).unwrap() * (-r * (0.05 - 0.5 * r * 0.01) * 1.2).exp();
        assert!(rel(a, direct) < 1e-3, "r={r}: {a} vs {direct}");
    }
}

#[test]
fn sv1_with_vanishing_a2_agrees_across_routes() {
    let num = TransformNumerics::default();
    let mut m = sv1([0.05, 0.0, 0.15, 0.1]);
    m.variant = None;
    for r in [0.5, 1.0] {
        let a = laplace_Y_sv2(&m, 1.0, r, &num).unwrap();
        let b = laplace_Y_sv14(&m, 1.0, r, &num).unwrap();
        assert!(rel(a, b) < 1e-6, "r={r}: {a} vs {b}");
    }
}

#[test]
fn sv2_kernel_routes_agree() {
    let num = TransformNumerics::default();
    let m = sv2([0.05, 0.0, 0.2, 0.1], 0.2);
    let a = laplace_Y_sv2_with(&m, 1.0, 1.0, Sv2Route::JointDensity, &num).unwrap();
    let b = laplace_Y_sv2_with(&m, 1.0, 1.0, Sv2Route::Fourier, &num).unwrap();
    assert!(rel(a, b) < 1e-6, "{a} vs {b}");
}

#[test]
fn sv2_with_a_random_continuous_clock() {
    // a3 = 0 splits into two independent clock moments
    let num = TransformNumerics::default();
    let mut m = sv2([0.05, 0.0, 0.0, 0.1], 0.0);
    m.variant = None;
    m.continuous_clock = ActivityModel::cir(1.5, 0.4);
    let r = 1.0;
    let a = laplace_Y_sv2(&m, 1.0, r, &num).unwrap();
    let psi = jump_exponent(&m, r).unwrap();
    let b = clock_mgf(&m.jump_clock, 1.0, psi).unwrap() * clock_mgf(&m.continuous_clock, 1.0, -r * (0.05 - 0.005)).unwrap();
    assert!(rel(a, b) < 1e-4, "{a} vs {b}");
}

#[test]
fn sv3_matches_the_tilted_pipeline() {
    let num = TransformNumerics::default();
    let m = sv3([0.05, 0.0, -0.2, 0.1]);
    assert!((laplace_Y_sv3(&m, 1.0, 0.0, &num).unwrap() - 1.0).abs() < 1e-4);
    for r in [0.5, 1.0] {
        let a = laplace_Y_sv3(&m, 1.0, r, &num).unwrap();
        let psi = jump_exponent(&m, r).unwrap();
        let levy = LevyComposition { alpha: 0.05 - 0.5 * r * 0.01 - psi / r, beta: -0.2, rho: 1.0 };
        let b = laplace_Y(&m.jump_clock, &levy, &SubordinatorSpec::identity(), 1.0, r, &num).unwrap();
        assert!(rel(a, b) < 1e-5, "r={r}: {a} vs {b}");
    }
}

#[test]
fn sv3_without_brownian_loadings_is_a_clock_moment() {
    let num = TransformNumerics::default();
    let mut m = sv3([0.05, 0.0, 0.0, 0.0]);
    m.a_j = [1.0, 0.0];
    let a = laplace_Y_sv3(&m, 1.0, 1.0, &num).unwrap();
    let psi = jump_exponent(&m, 1.0).unwrap();
    let b = clock_mgf(&m.jump_clock, 1.0, psi - 0.05).unwrap();
    assert!(rel(a, b) < 1e-3, "{a} vs {b}");
}

#[test]
fn dispatcher_routes_by_tag_and_rejects_general_coupling() {
    let num = TransformNumerics::default();
    let m = sv3([0.05, 0.0, -0.2, 0.1]);
    assert_eq!(laplace_two_factor(&m, 1.0, 0.5, &num).unwrap(), laplace_Y_sv3(&m, 1.0, 0.5, &num).unwrap());
    let mut g = sv1([0.05, 0.2, 0.1, 0.1]);
    g.variant = None;
    g.rho = 0.5;
    g.jump_clock = ActivityModel::cir(1.0, 0.5);
    assert!(matches!(laplace_two_factor(&g, 1.0, 0.5, &num), Err(EngineError::UnsupportedModel(_))));
    assert!(matches!(laplace_Y_sv3(&g, 1.0, 0.5, &num), Err(EngineError::UnsupportedModel(_))));
}
