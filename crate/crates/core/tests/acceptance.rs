//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//!
//! `TCL_ACCEPTANCE_PATHS` lowers the Monte Carlo path count for quick local
//! runs; the default is the full 10⁶.

use std::time::Instant;

use num_complex::Complex64;
use tcl_engine::activity::{clock_moments, conditional_cf_exponent, ActivityModel};
use tcl_engine::cli::{prepare, ResolvedModel};
use tcl_engine::fokker_planck::*;
use tcl_engine::levy::{LevyComposition, SubordinatorSpec};
use tcl_engine::model_zoo::{laplace_two_factor, SVVariant};
use tcl_engine::montecarlo::*;
use tcl_engine::transforms::*;

type Outcome = Result<(bool, String), String>;
type Criterion = (&'static str, fn() -> Outcome);

fn cir() -> ActivityModel {
    ActivityModel::cir(1.0, 0.5).with_v0(1.0)
}

fn gamma() -> SubordinatorSpec {
    SubordinatorSpec::gamma(0.2)
}

fn paths() -> usize {
    std::env::var("TCL_ACCEPTANCE_PATHS").ok().and_then(|s| s.parse().ok()).unwrap_or(1_000_000)
}

fn e<T, E: std::fmt::Display>(r: Result<T, E>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn rel(a: f64, b: f64) -> f64 {
    (a / b - 1.0).abs()
}

/// `E e^{−iξT_t}` from the Riccati exponent.
fn riccati_cf(m: &ActivityModel, t: f64, xi: f64) -> Result<Complex64, String> {
    Ok(e(conditional_cf_exponent(m, t, 0.0, -xi))?.phi(m.v0).exp())
}

fn rate_grid(n_x: usize) -> SpatialGrid {
    SpatialGrid::rate_axis(0.0, 5.0, n_x, Stretching::Uniform, 1.0).unwrap()
}

fn independent_reduction() -> Outcome {
    let levy = LevyComposition::standard(0.0);
    let num = TransformNumerics::default();
    let mut worst = 0.0f64;
    for r in [0.5, 1.0, 2.0] {
        let pipeline = e(laplace_Z(&cir(), 0.0, &gamma(), 1.0, r, &num))?;
        let two_stage = e(laplace_Y_independent(&cir(), &levy, &gamma(), 1.0, r))?;
        worst = worst.max(rel(pipeline, two_stage));
    }
    Ok((worst < 1e-3, format!("max rel {worst:.2e} (tol 1e-3)")))
}

fn correlated_oracle() -> Outcome {
    let num = TransformNumerics::default();
    let n = paths();
    let zs: Vec<f64> = (0..=240).map(|k| -6.0 + 0.05 * k as f64).collect();
    let (mut cf, mut ks, mut lp) = (0.0f64, 0.0f64, 0.0f64);
    for (k, rho) in [-0.7, -0.3, 0.3].into_iter().enumerate() {
        let levy = LevyComposition::standard(rho);
        let b = e(simulate_paths(&cir(), &levy, &gamma(), 1.0, n, 2e-3, 100 + k as u64))?;
        let emp = e(b.distribution())?;
        let c = e(cf_Y_grid(&cir(), &levy, &gamma(), 1.0, &[0.5, 1.0, 2.0], &num))?;
        let p = e(pdf_Z(&cir(), rho, &gamma(), 1.0, &zs, &num))?;
        let l = e(laplace_Z_grid(&cir(), rho, &gamma(), 1.0, &[0.5, 1.0], &num))?;
        cf = cf.max(e(compare(&emp, &c))?.max_cf_error.unwrap());
        ks = ks.max(e(compare(&emp, &p))?.kolmogorov_smirnov.unwrap());
        lp = lp.max(e(compare(&emp, &l))?.max_laplace_rel_error.unwrap());
    }
    Ok((
        cf < 1e-2 && ks < 0.02 && lp < 1e-2,
        format!("{n} paths: cf {cf:.2e} (tol 1e-2), KS {ks:.4} (tol 0.02), laplace rel {lp:.2e} (tol 1e-2)"),
    ))
}

fn riccati_vs_fokker_planck() -> Outcome {
    let m = cir();
    let g = rate_grid(161);
    let mut line = 0.0f64;
    for t in [0.5, 1.0] {
        for xi in [0.5, 1.0, 2.0, 4.0] {
            let f = e(solve_ghat(&m, 0.0, -0.5, t, xi, &g, 0.01))?;
            line = line.max((f.mass - riccati_cf(&m, t, xi)?).norm());
        }
    }
    // tilted config: r = 1, ρ = −0.5, j = 0.4, t = 1
    let num = TransformNumerics::default();
    let mut routes = 0.0f64;
    for xi in [0.5, 1.0, 2.0] {
        let a = e(cf_tilted_clock(&m, 1.0, 0.4, 1.0, -0.5, xi, TiltRoute::Plane, &num))?;
        let b = e(cf_tilted_clock(&m, 1.0, 0.4, 1.0, -0.5, xi, TiltRoute::Line, &num))?;
        routes = routes.max((a - b).norm());
    }
    Ok((line < 2e-3 && routes < 2e-3, format!("line vs Riccati {line:.2e}, plane vs line {routes:.2e} (tol 2e-3)")))
}

fn fourier_pair() -> Outcome {
    let m = cir();
    let dz = 0.1 * 3f64.sqrt();
    let grid = SpatialGrid::rate_axis(0.0, 47.0 / 16.0, 48, Stretching::Uniform, 1.0)
        .unwrap()
        .with_y(Axis::cells(0.0, 0.02, 48))
        .with_z(Axis::cells(-24.0 * dz, dz, 48));
    let cube = e(solve_q3d(&m, 0.5, &grid, 2.5e-3))?;
    let line_grid = SpatialGrid { y: None, z: None, ..grid.clone() };
    let mut gap = 0.0f64;
    for (xi, eta) in [(0.5, 0.5), (1.0, 1.0), (2.0, 1.0), (1.0, 2.0)] {
        let q = e(solve_qhat(&m, 0.5, xi, eta, &line_grid, 2.5e-3))?;
        gap = gap.max((cube.fourier(xi, eta) - q.mass).norm());
    }
    let mass3 = (cube.field.mass - 1.0).norm();
    let mass1 = (e(solve_qhat(&m, 0.5, 0.0, 0.0, &line_grid, 2.5e-3))?.mass - 1.0).norm();
    Ok((
        gap < 2e-2 && mass3 < 1e-3 && mass1 < 1e-4,
        format!("DFT gap {gap:.2e} (tol 2e-2), mass 3-D {mass3:.1e} (tol 1e-3), 1-D {mass1:.1e} (tol 1e-4)"),
    ))
}

fn normalization() -> Outcome {
    let num = TransformNumerics::default();
    let zs: Vec<f64> = (0..=240).map(|k| -6.0 + 0.05 * k as f64).collect();
    let ig = SubordinatorSpec::inverse_gaussian(2.0);
    let cases = [
        (LevyComposition::standard(0.0), gamma()),
        (LevyComposition::standard(-0.7), gamma()),
        (LevyComposition::standard(0.3), gamma()),
        (LevyComposition::new(0.1, 1.2, -0.5).unwrap(), gamma()),
        (LevyComposition::standard(-0.3), ig),
    ];
    let (mut mass, mut lowest, mut imag, mut at_zero, mut sym) = (0.0f64, f64::INFINITY, 0.0f64, 0.0f64, 0.0f64);
    for (levy, spec) in &cases {
        let p = e(pdf_Y(&cir(), levy, spec, 1.0, &zs, &num))?;
        mass = mass.max((p.mass() - 1.0).abs());
        lowest = lowest.min(p.values.iter().map(|v| v.re).fold(f64::INFINITY, f64::min));
        imag = imag.max(p.values.iter().map(|v| v.im.abs()).fold(0.0, f64::max));
        let l = e(laplace_Y(&cir(), levy, spec, 1.0, 0.0, &num))?;
        let c = e(cf_Y(&cir(), levy, spec, 1.0, 0.0, &num))?;
        at_zero = at_zero.max((l - 1.0).abs()).max((c - 1.0).norm());
        for theta in [0.5, 1.5] {
            let a = e(cf_Y(&cir(), levy, spec, 1.0, theta, &num))?;
            let b = e(cf_Y(&cir(), levy, spec, 1.0, -theta, &num))?;
            sym = sym.max((a - b.conj()).norm());
        }
    }
    let clock = e(pdf_subordinated_clock(&cir(), &gamma(), 1.0, &num))?;
    mass = mass.max((clock.mass() - 1.0).abs());
    let passed = mass <= 5e-3 && lowest >= -1e-3 && imag < 1e-6 && at_zero < 1e-4 && sym < 1e-8;
    Ok((
        passed,
        format!(
            "{} return pdfs and the clock law: |mass−1| {mass:.1e}, min {lowest:.1e}, imag {imag:.1e}; transforms at 0 {at_zero:.1e}; conj {sym:.1e}",
            cases.len()
        ),
    ))
}

fn clock_normalization() -> Outcome {
    let n = paths();
    let (mut z, mut riccati) = (0.0f64, 0.0f64);
    for (k, t) in [0.5, 1.0, 2.0].into_iter().enumerate() {
        let b = e(simulate_paths(&cir(), &LevyComposition::standard(0.0), &gamma(), t, n, 2e-3, 200 + k as u64))?;
        let d = e(EmpiricalDistribution::new(b.clock))?;
        z = z.max((d.mean() - t).abs() / d.mean_stderr());
        riccati = riccati.max((e(clock_moments(&cir(), t))?.mean - t).abs());
    }
    Ok((z < 3.0 && riccati < 1e-6, format!("{n} paths: max |mean−t| {z:.2} stderr (tol 3), Riccati {riccati:.1e} (tol 1e-6)")))
}

fn sv_coherence() -> Outcome {
    let num = TransformNumerics::default();
    let n = paths();
    let mut worst = 0.0f64;
    let mut structural = true;
    for (k, name) in ["sv1", "sv2", "sv3", "sv4"].into_iter().enumerate() {
        let (_, resolved) = prepare(&format!("preset:{name}"), &[], &[]).map_err(|f| f.message)?;
        let ResolvedModel::TwoFactor { model } = resolved else {
            return Err(format!("{name} is not a two-factor preset"));
        };
        let b = e(simulate_two_factor(&model, 1.0, n, 2e-3, 300 + k as u64))?;
        match model.variant {
            Some(SVVariant::Sv1) => {
                structural &= model.jump_clock.is_deterministic() && b.clock_j.iter().all(|&t| t == 1.0);
            }
            Some(SVVariant::Sv3) => {
                structural &= model.shared_clock && b.clock_c == b.clock_j;
                structural &= b.recorded.iter().all(|p| p.clock_c == p.clock_j && p.rate_c == p.rate_j);
            }
            _ => {}
        }
        let d = e(b.distribution())?;
        for r in [0.5, 1.0] {
            let (mc, _) = d.laplace(r);
            worst = worst.max(rel(e(laplace_two_factor(&model, 1.0, r, &num))?, mc));
        }
    }
    Ok((
        worst < 1e-2 && structural,
        format!("{n} paths: max rel {worst:.2e} (tol 1e-2), structural identities {}", if structural { "hold" } else { "broken" }),
    ))
}

fn convergence_order() -> Outcome {
    let m = cir();
    let v: Vec<Complex64> = (0..4)
        .map(|k| {
            let g = rate_grid(40 * 2usize.pow(k) + 1);
            e(solve_qhat(&m, 1.0, 1.0, 1.0, &g, 0.04 / 2f64.powi(k as i32))).map(|f| f.mass)
        })
        .collect::<Result<_, _>>()?;
    let d: Vec<f64> = v.windows(2).map(|w| (w[1] - w[0]).norm()).collect();
    let ratios = [d[0] / d[1], d[1] / d[2]];
    let min = ratios[0].min(ratios[1]);
    Ok((min >= 3.5, format!("ratios {:.2}, {:.2} (tol ≥ 3.5)", ratios[0], ratios[1])))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("independent-case reduction", independent_reduction),
        ("correlated oracle equivalence", correlated_oracle),
        ("Riccati vs Fokker-Planck", riccati_vs_fokker_planck),
        ("Fourier-pair consistency", fourier_pair),
        ("normalization suite", normalization),
        ("clock normalization", clock_normalization),
        ("SV-variant coherence", sv_coherence),
        ("convergence order", convergence_order),
    ];
    let only: Option<usize> = std::env::args().nth(1).and_then(|a| a.parse().ok());
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        if only.is_some_and(|o| o != k + 1) {
            continue;
        }
        let start = Instant::now();
        let (ok, detail) = run().unwrap_or_else(|err| (false, format!("error: {err}")));
        failed += usize::from(!ok);
        println!(
            "criterion {} {} {name}: {detail} [{:.1}s]",
            k + 1,
            if ok { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
