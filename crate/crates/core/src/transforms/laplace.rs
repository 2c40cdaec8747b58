#![allow(non_snake_case)]

//! Laplace transform and characteristic function through the tilted clock.
//!
//! `E e^{−rY_t} = (1/2π) ∬ e^{(r²β²/2 − rα)j} F(ξ, j) E[e^{−iξT^{(j,rβ)}_t}] dξ dj`
//! with `F(ξ, j) = ∫ e^{iξy} f_{J_y}(j) dy`. The tilted clock runs with drift
//! `μ − rβρσ` up to time `j`. The characteristic function has the same shape
//! with weight `e^{−θ²β²j/2 + iθαj}` and the complex tilt `+iθβρσ`.

use super::engine::{j_cutoff, xi_integral, ClockSetup, JRule, Profile, ProfileKind};
use super::result::{TransformKind, TransformResult, Truncation};
use super::TransformNumerics;
use crate::activity::{riccati_coefficients, ActivityModel};
use crate::error::{EngineError, Result};
use crate::fokker_planck::{solve_g, Axis, LineProblem, SpatialGrid};
use crate::levy::{LevyComposition, SubordinatorSpec};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

type C = Complex64;

/// How `E e^{−iξT^{(j,r)}_t}` is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TiltRoute {
    /// Joint density of the tilted rate and clock on an (x, y) grid.
    Plane,
    /// Clock-Fourier line solve, combined with the Riccati exponent after `j`.
    Line,
}

fn check(model: &ActivityModel, levy: &LevyComposition, spec: &SubordinatorSpec, t: f64, num: &TransformNumerics) -> Result<()> {
    model.validate()?;
    levy.validate()?;
    spec.validate()?;
    num.validate()?;
    if !(t > 0.0) {
        return Err(EngineError::Domain(format!("horizon must be positive, got {t}")));
    }
    Ok(())
}

/// Exact transform when the clock is deterministic: `E e^{−sJ_c}` with `c = (v0+ε)t`.
fn deterministic_clock(model: &ActivityModel, spec: &SubordinatorSpec, t: f64, s: C) -> Result<C> {
    let c = model.deterministic_rate() * t;
    Ok((spec.log_laplace_unit(s)? * c).exp())
}

fn deterministic_truncation() -> Truncation {
    Truncation { route: "deterministic-clock".into(), ..Truncation::default() }
}

/// Core of the Laplace and characteristic-function pipelines. `problem(ξ)`
/// is the tilted line problem, `growth` the real exponential rate of the j
/// weight and `weight(j)` the full j weight.
fn tilted_pipeline(
    model: &ActivityModel,
    spec: &SubordinatorSpec,
    t: f64,
    tilt: f64,
    growth: f64,
    symmetric: bool,
    problem: impl Fn(f64) -> LineProblem + Sync,
    weight: impl Fn(f64) -> C,
    num: &TransformNumerics,
) -> Result<(C, Truncation)> {
    let setup = ClockSetup::new(model, t, tilt, num)?;
    let jr = JRule::new(t, j_cutoff(spec, setup.y_window, growth), num);
    let xi_cap = num.max_xi_nodes as f64 * setup.xi_step;
    let profile = Profile::new(spec, setup.y_window, &jr.nodes, xi_cap, ProfileKind::Density);
    let w: Vec<C> = jr.nodes.iter().zip(&jr.weights).map(|(&j, &wj)| wj * weight(j)).collect();
    let sum = xi_integral(setup.xi_step, symmetric, num.xi_tol, num.max_xi_nodes, |xi| {
        let f = profile.fourier(xi);
        let c = setup.clock_factors(&problem(xi), &jr.nodes, |_| C::new(1.0, 0.0), None)?;
        let mut total = C::new(0.0, 0.0);
        let mut env = 0.0;
        for ((w, f), c) in w.iter().zip(&f).zip(&c) {
            let v = w * f * c;
            total += v;
            env += v.norm();
        }
        Ok((vec![total], env))
    })?;
    let truncation = Truncation {
        xi_step: setup.xi_step,
        xi_max: sum.xi_max,
        xi_nodes: sum.nodes,
        j_max: jr.j_max,
        j_nodes: jr.len(),
        y_window: setup.y_window,
        estimated_error: sum.estimated_error,
        route: "tilted-clock-line".into(),
        ..Truncation::default()
    };
    Ok((sum.values[0], truncation))
}

fn laplace_detailed(
    model: &ActivityModel,
    levy: &LevyComposition,
    spec: &SubordinatorSpec,
    t: f64,
    r: f64,
    num: &TransformNumerics,
) -> Result<(f64, Truncation)> {
    check(model, levy, spec, t, num)?;
    let (alpha, beta, rho) = (levy.alpha, levy.beta, levy.rho);
    let growth = 0.5 * r * r * beta * beta - r * alpha;
    if model.is_deterministic() {
        return Ok((deterministic_clock(model, spec, t, C::new(-growth, 0.0))?.re, deterministic_truncation()));
    }
    let (v, tr) = tilted_pipeline(
        model,
        spec,
        t,
        -r * beta * rho,
        growth,
        true,
        |xi| LineProblem::ghat(r * beta, rho, xi),
        |j| C::new((growth * j).exp(), 0.0),
        num,
    )?;
    Ok((v.re, tr))
}

/// `E e^{−rY_t}`.
pub fn laplace_Y(
    model: &ActivityModel,
    levy: &LevyComposition,
    spec: &SubordinatorSpec,
    t: f64,
    r: f64,
    num: &TransformNumerics,
) -> Result<f64> {
    Ok(laplace_detailed(model, levy, spec, t, r, num)?.0)
}

/// `E e^{−rZ_{J_{T_t}}}`: the case α = 0, β = 1.
pub fn laplace_Z(
    model: &ActivityModel,
    rho: f64,
    spec: &SubordinatorSpec,
    t: f64,
    r: f64,
    num: &TransformNumerics,
) -> Result<f64> {
    laplace_Y(model, &LevyComposition::standard(rho), spec, t, r, num)
}

pub fn laplace_Y_grid(
    model: &ActivityModel,
    levy: &LevyComposition,
    spec: &SubordinatorSpec,
    t: f64,
    rs: &[f64],
    num: &TransformNumerics,
) -> Result<TransformResult> {
    let mut values = Vec::with_capacity(rs.len());
    let mut truncation = Truncation::default();
    for &r in rs {
        let (v, tr) = laplace_detailed(model, levy, spec, t, r, num)?;
        values.push(C::new(v, 0.0));
        if tr.xi_max >= truncation.xi_max {
            truncation = Truncation { estimated_error: truncation.estimated_error.max(tr.estimated_error), ..tr };
        }
    }
    Ok(TransformResult::new(TransformKind::Laplace, rs.to_vec(), values, truncation))
}

pub fn laplace_Z_grid(
    model: &ActivityModel,
    rho: f64,
    spec: &SubordinatorSpec,
    t: f64,
    rs: &[f64],
    num: &TransformNumerics,
) -> Result<TransformResult> {
    laplace_Y_grid(model, &LevyComposition::standard(rho), spec, t, rs, num)
}

fn cf_detailed(
    model: &ActivityModel,
    levy: &LevyComposition,
    spec: &SubordinatorSpec,
    t: f64,
    theta: f64,
    num: &TransformNumerics,
) -> Result<(C, Truncation)> {
    check(model, levy, spec, t, num)?;
    let (alpha, beta, rho) = (levy.alpha, levy.beta, levy.rho);
    let exponent = C::new(-0.5 * theta * theta * beta * beta, theta * alpha);
    if model.is_deterministic() {
        return Ok((deterministic_clock(model, spec, t, -exponent)?, deterministic_truncation()));
    }
    tilted_pipeline(
        model,
        spec,
        t,
        0.0,
        0.0,
        false,
        |xi| LineProblem::ghat_theta(theta * beta, rho, xi),
        |j| (exponent * j).exp(),
        num,
    )
}

/// `E e^{iθY_t}`.
pub fn cf_Y(
    model: &ActivityModel,
    levy: &LevyComposition,
    spec: &SubordinatorSpec,
    t: f64,
    theta: f64,
    num: &TransformNumerics,
) -> Result<C> {
    Ok(cf_detailed(model, levy, spec, t, theta, num)?.0)
}

/// `E e^{iθZ_{J_{T_t}}}`.
pub fn cf_Z(
    model: &ActivityModel,
    rho: f64,
    spec: &SubordinatorSpec,
    t: f64,
    theta: f64,
    num: &TransformNumerics,
) -> Result<C> {
    cf_Y(model, &LevyComposition::standard(rho), spec, t, theta, num)
}

pub fn cf_Y_grid(
    model: &ActivityModel,
    levy: &LevyComposition,
    spec: &SubordinatorSpec,
    t: f64,
    thetas: &[f64],
    num: &TransformNumerics,
) -> Result<TransformResult> {
    let mut values = Vec::with_capacity(thetas.len());
    let mut truncation = Truncation::default();
    for &theta in thetas {
        let (v, tr) = cf_detailed(model, levy, spec, t, theta, num)?;
        values.push(v);
        if tr.xi_max >= truncation.xi_max {
            truncation = Truncation { estimated_error: truncation.estimated_error.max(tr.estimated_error), ..tr };
        }
    }
    Ok(TransformResult::new(TransformKind::Cf, thetas.to_vec(), values, truncation))
}

/// `E e^{u T_t}` for complex `u` from the Riccati transform or the deterministic clock.
fn clock_transform(model: &ActivityModel, t: f64, u: C) -> Result<C> {
    if model.is_deterministic() {
        return Ok((u * model.deterministic_rate() * t).exp());
    }
    let (a, b) = riccati_coefficients(model, u, &[t])?[0];
    Ok((a + b * model.v0).exp())
}

fn require_independent(levy: &LevyComposition) -> Result<()> {
    if levy.rho != 0.0 {
        return Err(EngineError::UnsupportedModel(format!(
            "the conditioning formula needs rho = 0, got {}",
            levy.rho
        )));
    }
    Ok(())
}

/// Two-stage conditioning at ρ = 0: `E e^{−rY_t} = E exp(T_t·ψ_J(r²β²/2 − rα))`,
/// `ψ_J(s) = log E e^{sJ_1}`, with the outer expectation from the Riccati transform.
pub fn laplace_Y_independent(
    model: &ActivityModel,
    levy: &LevyComposition,
    spec: &SubordinatorSpec,
    t: f64,
    r: f64,
) -> Result<f64> {
    require_independent(levy)?;
    let growth = 0.5 * r * r * levy.beta * levy.beta - r * levy.alpha;
    let psi = spec.log_laplace_unit(C::new(-growth, 0.0))?;
    Ok(clock_transform(model, t, psi)?.re)
}

/// Two-stage conditioning at ρ = 0 for `E e^{iθY_t}`.
pub fn cf_Y_independent(
    model: &ActivityModel,
    levy: &LevyComposition,
    spec: &SubordinatorSpec,
    t: f64,
    theta: f64,
) -> Result<C> {
    require_independent(levy)?;
    let s = C::new(0.5 * theta * theta * levy.beta * levy.beta, -theta * levy.alpha);
    let psi = spec.log_laplace_unit(s)?;
    clock_transform(model, t, psi)
}

/// Factorised assembly `(1/2π) ∬ χ(ir, W_j) χ(ξ, F_j) χ(−ξ, T^{(j,r)}_t) dξ dj`
/// with `F_j` the first passage of `J` above `j`. Needs strictly increasing `J`.
///
/// `χ(ξ, F_j)` is built from `P(F_j > y) = P(J_y < j)` on the clock window:
/// `1 − e^{iξY}P(J_Y < j) + iξ ∫₀^Y e^{iξy} P(J_y < j) dy`.
pub fn cf_factored(
    model: &ActivityModel,
    rho: f64,
    spec: &SubordinatorSpec,
    t: f64,
    r: f64,
    num: &TransformNumerics,
) -> Result<f64> {
    let levy = LevyComposition::standard(rho);
    check(model, &levy, spec, t, num)?;
    if !spec.is_strictly_increasing() {
        return Err(EngineError::UnsupportedSpec(
            "the factorised form needs a strictly increasing subordinator".into(),
        ));
    }
    let growth = 0.5 * r * r;
    if model.is_deterministic() {
        let c = model.deterministic_rate() * t;
        if spec.is_atom() {
            return Ok((growth * c).exp());
        }
        // density of F_j at c, by differencing P(J_y < j) in y
        let jr = JRule::new(c, j_cutoff(spec, c, growth), num);
        let h = 1e-5 * c.max(1e-3);
        return Ok(jr
            .nodes
            .iter()
            .zip(&jr.weights)
            .map(|(&j, &w)| w * (growth * j).exp() * (spec.cdf(c - h, j) - spec.cdf(c + h, j)) / (2.0 * h))
            .sum());
    }
    let setup = ClockSetup::new(model, t, -r * rho, num)?;
    let y_window = setup.y_window;
    let jr = JRule::new(t, j_cutoff(spec, y_window, growth), num);
    let xi_cap = num.max_xi_nodes as f64 * setup.xi_step;
    let profile = Profile::new(spec, y_window, &jr.nodes, xi_cap, ProfileKind::Distribution);
    let edge: Vec<f64> = jr.nodes.iter().map(|&j| if spec.is_atom() { 0.0 } else { spec.cdf(y_window, j) }).collect();
    let w: Vec<f64> = jr.nodes.iter().zip(&jr.weights).map(|(&j, &wj)| wj * (growth * j).exp()).collect();
    let sum = xi_integral(setup.xi_step, true, num.xi_tol, num.max_xi_nodes, |xi| {
        let inner = profile.fourier(xi);
        let chi: Vec<C> = if profile.is_atom() {
            inner
        } else {
            inner
                .iter()
                .zip(&edge)
                .map(|(v, &p)| C::new(1.0, 0.0) - C::from_polar(p, xi * y_window) + C::new(0.0, xi) * v)
                .collect()
        };
        let c = setup.clock_factors(&LineProblem::ghat(r, rho, xi), &jr.nodes, |_| C::new(1.0, 0.0), None)?;
        let mut total = C::new(0.0, 0.0);
        let mut env = 0.0;
        for ((w, chi), c) in w.iter().zip(&chi).zip(&c) {
            let v = chi * c * *w;
            total += v;
            env += v.norm();
        }
        Ok((vec![total], env))
    })?;
    Ok(sum.values[0].re)
}

/// `E e^{−iξT^{(j,r)}_t}`, the clock under the drift `μ − rρσ·1_{u≤j}`.
#[allow(clippy::too_many_arguments)]
pub fn cf_tilted_clock(
    model: &ActivityModel,
    t: f64,
    j: f64,
    r: f64,
    rho: f64,
    xi: f64,
    route: TiltRoute,
    num: &TransformNumerics,
) -> Result<C> {
    model.validate()?;
    num.validate()?;
    if !(j >= 0.0) {
        return Err(EngineError::Domain(format!("switch time must be nonnegative, got {j}")));
    }
    if model.is_deterministic() {
        return Ok(C::from_polar(1.0, -xi * model.deterministic_rate() * t));
    }
    let setup = ClockSetup::new(model, t, -r * rho, num)?;
    match route {
        TiltRoute::Line => {
            if !model.is_affine() && j < t {
                return Err(EngineError::UnsupportedModel(
                    "the line route needs an affine clock after the switch time".into(),
                ));
            }
            let c = setup.clock_factors(&LineProblem::ghat(r, rho, xi), &[j], |_| C::new(1.0, 0.0), None)?;
            Ok(c[0])
        }
        TiltRoute::Plane => {
            let n_y = (setup.y_window / num.plane_dy).ceil() as usize + 2;
            let grid = SpatialGrid { y: Some(Axis::cells(0.0, num.plane_dy, n_y)), ..setup.grid.clone() };
            let y = grid.y.as_ref().unwrap();
            let nx = grid.n_x();
            let affine_after = j < t && model.is_affine();
            let stop = if affine_after { j } else { t };
            let g = solve_g(model, r, rho, j, stop, &grid, num.dt)?;
            let (a, b) = if affine_after {
                riccati_coefficients(model, C::new(0.0, -xi), &[t - j])?[0]
            } else {
                (C::new(0.0, 0.0), C::new(0.0, 0.0))
            };
            let rate_weight: Vec<C> =
                grid.x.nodes.iter().zip(&grid.x.weights).map(|(&x, &w)| w * (a + b * x).exp()).collect();
            let mut total = C::new(0.0, 0.0);
            for k in 0..n_y {
                let row: C = (0..nx).map(|i| g.values[i + nx * k] * rate_weight[i]).sum();
                total += row * C::from_polar(y.weights[k], -xi * y.nodes[k]);
            }
            Ok(total)
        }
    }
}
