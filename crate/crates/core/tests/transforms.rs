use num_complex::Complex64;
use tcl_engine::activity::{clock_mgf, clock_moments, riccati_coefficients, ActivityModel};
use tcl_engine::levy::{LevyComposition, SubordinatorSpec};
use tcl_engine::transforms::*;
use tcl_engine::EngineError;

fn cir() -> ActivityModel {
    ActivityModel::cir(1.0, 0.5).with_v0(1.0)
}

fn gamma() -> SubordinatorSpec {
    SubordinatorSpec::gamma(0.2)
}

fn num() -> TransformNumerics {
    TransformNumerics::default()
}

fn rel(a: f64, b: f64) -> f64 {
    (a / b - 1.0).abs()
}

// E e^{−rZ_{J_{T_1}}} at ρ = 0 from the two-stage conditioning formula, frozen
const INDEPENDENT_LAPLACE: [(f64, f64); 3] = [(0.5, 1.13533421168886), (1.0, 1.70357739178511), (2.0, 14.9247889729236)];

#[test]
fn independent_formula_reproduces_frozen_values() {
    let levy = LevyComposition::standard(0.0);
    for (r, frozen) in INDEPENDENT_LAPLACE {
        let v = laplace_Y_independent(&cir(), &levy, &gamma(), 1.0, r).unwrap();
        assert!(rel(v, frozen) < 1e-10, "r={r}: {v} vs {frozen}");
    }
}

#[test]
fn tilted_clock_laplace_matches_independent_values() {
    for (r, frozen) in INDEPENDENT_LAPLACE {
        let v = laplace_Z(&cir(), 0.0, &gamma(), 1.0, r, &num()).unwrap();
        assert!(rel(v, frozen) < 1e-3, "r={r}: {v} vs {frozen}");
    }
}

#[test]
fn laplace_is_one_at_zero() {
    for rho in [0.0, -0.5] {
        let v = laplace_Z(&cir(), rho, &gamma(), 1.0, 0.0, &num()).unwrap();
        assert!((v - 1.0).abs() < 1e-4, "rho={rho}: {v}");
    }
}

#[test]
fn standard_normal_through_identity_and_deterministic_clock() {
    let m = ActivityModel::deterministic().with_v0(1.0);
    let v = laplace_Z(&m, 0.0, &SubordinatorSpec::identity(), 1.0, 1.0, &num()).unwrap();
    assert!((v - 0.5f64.exp()).abs() < 1e-12);
    let c = cf_Z(&m, 0.3, &SubordinatorSpec::identity(), 1.0, 2.0, &num()).unwrap();
    assert!((c - Complex64::new((-2.0f64).exp(), 0.0)).norm() < 1e-12);
    let p = pdf_Z(&m, 0.0, &SubordinatorSpec::identity(), 1.0, &[-1.0, 0.0, 1.0], &num()).unwrap();
    assert!((p.values[1].re - 0.398_942_280_401_432_7).abs() < 1e-12);
}

#[test]
fn general_laplace_with_unit_scale_is_the_z_transform() {
    let levy = LevyComposition::new(0.0, 1.0, -0.5).unwrap();
    let y = laplace_Y(&cir(), &levy, &gamma(), 1.0, 0.5, &num()).unwrap();
    let z = laplace_Z(&cir(), -0.5, &gamma(), 1.0, 0.5, &num()).unwrap();
    assert!((y - z).abs() < 1e-10);
}

#[test]
fn laplace_grid_result_is_tagged_and_bounded() {
    let res = laplace_Z_grid(&cir(), -0.3, &gamma(), 1.0, &[0.0, 0.5], &num()).unwrap();
    assert_eq!(res.kind, TransformKind::Laplace);
    assert!((res.values[0].re - 1.0).abs() < 1e-4);
    assert!(res.values[1].re > 1.0);
    assert!(res.truncation.xi_max > 0.0 && res.truncation.j_max > 1.0);
}

#[test]
fn characteristic_function_symmetry_and_independent_case() {
    let c0 = cf_Z(&cir(), -0.5, &gamma(), 1.0, 0.0, &num()).unwrap();
    assert!((c0 - 1.0).norm() < 1e-4);
    let a = cf_Z(&cir(), -0.5, &gamma(), 1.0, 1.5, &num()).unwrap();
    let b = cf_Z(&cir(), -0.5, &gamma(), 1.0, -1.5, &num()).unwrap();
    assert!((a - b.conj()).norm() < 1e-8);
    let levy = LevyComposition::standard(0.0);
    let c = cf_Z(&cir(), 0.0, &gamma(), 1.0, 1.0, &num()).unwrap();
    let o = cf_Y_independent(&cir(), &levy, &gamma(), 1.0, 1.0).unwrap();
    assert!((c - o).norm() < 1e-3, "{c} vs {o}");
}

#[test]
fn two_characteristic_function_routes_agree() {
    let levy = LevyComposition::new(-0.1, 1.2, -0.5).unwrap();
    let a = cf_Y(&cir(), &levy, &gamma(), 1.0, 1.0, &num()).unwrap();
    let b = cf_Y_joint(&cir(), &levy, &gamma(), 1.0, 1.0, &num()).unwrap();
    assert!((a - b).norm() < 1e-5, "{a} vs {b}");
}

#[test]
fn independent_routes_reject_correlation() {
    let levy = LevyComposition::standard(0.2);
    assert!(matches!(
        laplace_Y_independent(&cir(), &levy, &gamma(), 1.0, 1.0),
        Err(EngineError::UnsupportedModel(_))
    ));
}

#[test]
fn tilted_clock_routes() {
    let m = cir();
    let n = num();
    for route in [TiltRoute::Line, TiltRoute::Plane] {
        let one = cf_tilted_clock(&m, 1.0, 0.4, 1.0, -0.5, 0.0, route, &n).unwrap();
        assert!((one - 1.0).norm() < 2e-3, "{route:?}: {one}");
    }
    // no tilt: the plain clock transform
    let (a, b) = riccati_coefficients(&m, Complex64::new(0.0, -2.0), &[1.0]).unwrap()[0];
    let exact = (a + b * m.v0).exp();
    let line = cf_tilted_clock(&m, 1.0, 0.4, 0.0, -0.5, 2.0, TiltRoute::Line, &n).unwrap();
    assert!((line - exact).norm() < 2e-3);
    let line = cf_tilted_clock(&m, 1.0, 0.4, 1.0, -0.5, 2.0, TiltRoute::Line, &n).unwrap();
    let plane = cf_tilted_clock(&m, 1.0, 0.4, 1.0, -0.5, 2.0, TiltRoute::Plane, &n).unwrap();
    assert!((line - plane).norm() < 2e-3, "{line} vs {plane}");
}

#[test]
fn factorised_form_with_identity_subordinator() {
    let id = SubordinatorSpec::identity();
    for rho in [0.0, -0.5] {
        let f = cf_factored(&cir(), rho, &id, 1.0, 1.0, &num()).unwrap();
        let l = laplace_Z(&cir(), rho, &id, 1.0, 1.0, &num()).unwrap();
        assert!((f - l).abs() < 1e-6 * l, "rho={rho}: {f} vs {l}");
    }
    let one = cf_factored(&cir(), -0.5, &id, 1.0, 0.0, &num()).unwrap();
    assert!((one - 1.0).abs() < 1e-4);
}

#[test]
fn factorised_form_carries_the_exponent_ratio() {
    // at ρ = 0 the factorised assembly equals E[(ψ/s) e^{ψT}] with ψ = log E e^{sJ_1}
    let spec = gamma().with_drift(0.1);
    let s = 0.5;
    let psi = spec.log_laplace_unit(Complex64::new(-s, 0.0)).unwrap().re;
    let expected = psi / s * clock_mgf(&cir(), 1.0, psi).unwrap();
    let f = cf_factored(&cir(), 0.0, &spec, 1.0, 1.0, &num()).unwrap();
    assert!(rel(f, expected) < 5e-3, "{f} vs {expected}");
    assert!(matches!(cf_factored(&cir(), 0.0, &gamma(), 1.0, 1.0, &num()), Err(EngineError::UnsupportedSpec(_))));
}

#[test]
fn joint_transform_margins() {
    let n = num();
    let z = joint_cf_T_B(&cir(), 1.0, 0.5, 0.0, 0.0, &n).unwrap();
    assert!((z - 1.0).norm() < 1e-4);
    for (j, eta) in [(0.5, 1.0), (1.5, 0.7)] {
        let v = joint_cf_T_B(&cir(), 1.0, j, 0.0, eta, &n).unwrap();
        assert!((v.re - (-0.5 * eta * eta * j).exp()).abs() < 2e-3, "j={j}: {v}");
        assert!(v.im.abs() < 2e-3);
    }
}

#[test]
fn joint_density_of_a_deterministic_clock_sits_on_two_cells() {
    let m = ActivityModel::deterministic().with_v0(1.0);
    let ys: Vec<f64> = (0..=40).map(|k| 0.05 * k as f64 + 0.013).collect();
    let zs: Vec<f64> = (0..=80).map(|k| -4.0 + 0.1 * k as f64).collect();
    let d = joint_density_T_B(&m, 1.0, 0.7, &ys, &zs, &num()).unwrap();
    let ym = d.y_marginal();
    let mut masses: Vec<f64> = ym.iter().map(|v| v * 0.05).collect();
    masses.sort_by(|a, b| b.total_cmp(a));
    assert!(masses[0] + masses[1] >= 0.99);
    assert!((d.mass - 1.0).abs() < 5e-3);
}

#[test]
fn joint_density_of_rate_clock_and_driver() {
    let ys: Vec<f64> = (0..=70).map(|k| 0.05 * k as f64).collect();
    let zs: Vec<f64> = (0..=80).map(|k| -4.0 + 0.1 * k as f64).collect();
    let j = 0.5;
    let d = joint_density_T_B(&cir(), 1.0, j, &ys, &zs, &num()).unwrap();
    assert!((d.mass - 1.0).abs() < 5e-3, "mass {}", d.mass);
    let l1: f64 = d
        .z_marginal()
        .iter()
        .zip(&zs)
        .map(|(v, z)| 0.1 * (v - (-0.5 * z * z / j).exp() / (2.0 * std::f64::consts::PI * j).sqrt()).abs())
        .sum();
    assert!(l1 < 1e-2, "L1 {l1}");
}

#[test]
fn subordinated_clock_law_has_unit_mass_and_right_mean() {
    let law = pdf_subordinated_clock(&cir(), &gamma(), 1.0, &num()).unwrap();
    assert!((law.mass() - 1.0).abs() < 1e-4, "{}", law.mass());
    let mean_t = clock_moments(&cir(), 1.0).unwrap().mean;
    let mean = law.expect(|j| j);
    assert!((mean - gamma().mean(1.0) * mean_t).abs() < 1e-3, "{mean}");
    let m = ActivityModel::deterministic().with_v0(1.0);
    assert_eq!(pdf_subordinated_clock(&m, &SubordinatorSpec::identity(), 2.0, &num()).unwrap(), SubordinatedLaw::Atom(2.0));
}

#[test]
fn independent_density_is_normalised() {
    let zs: Vec<f64> = (0..=200).map(|k| -10.0 + 0.1 * k as f64).collect();
    let p = pdf_Z(&cir(), 0.0, &gamma(), 1.0, &zs, &num()).unwrap();
    assert_eq!(p.kind, TransformKind::Pdf);
    assert!((p.mass() - 1.0).abs() < 5e-3);
    assert!(p.mean().abs() < 1e-6);
    assert!(p.real().iter().all(|&v| v > -1e-3));
    let cdf = p.cdf.as_ref().unwrap();
    assert!(cdf.windows(2).all(|w| w[1] >= w[0] - 1e-12));
    let levy = LevyComposition::new(0.0, 1.0, 0.0).unwrap();
    let q = pdf_Y(&cir(), &levy, &gamma(), 1.0, &zs, &num()).unwrap();
    assert!(p.values.iter().zip(&q.values).all(|(a, b)| (a - b).norm() < 1e-10));
}

#[test]
fn density_rejects_a_missing_brownian_part() {
    let levy = LevyComposition::new(0.3, 0.0, 0.0).unwrap();
    assert!(matches!(
        pdf_Y(&cir(), &levy, &gamma(), 1.0, &[0.0, 1.0], &num()),
        Err(EngineError::DegenerateModel(_))
    ));
    assert!(matches!(pdf_Z(&cir(), 0.0, &gamma(), 1.0, &[1.0, 0.0], &num()), Err(EngineError::Domain(_))));
}
