//! Laplace transforms `E e^{−rY_t}` of the two-factor returns.
//!
//! Conditional on its clock the jump part contributes `e^{ψ T^j_t}` with
//! `ψ = log E e^{−s_J J_1}`, `s_J = r a^j_1 − r²|a^j_2|²/2`. Writing the
//! continuous loadings on the clock driver `B̃ = √(1−ρ²)B^c + ρB^j` and on
//! its orthogonal complement `B̂` gives
//! `a^c_2 B^c + a^c_3 B^j = β B̃ + N B̂`.
#![allow(non_snake_case)]

use super::TwoFactorModel;
use crate::activity::{clock_mgf, ActivityModel};
use crate::error::{EngineError, Result};
use crate::fokker_planck::LineProblem;
use crate::levy::{LevyComposition, SubordinatorSpec};
use crate::transforms::engine::{xi_integral, ClockSetup, JRule};
use crate::transforms::{joint_density_T_B, laplace_Y, pdf_subordinated_clock, SubordinatedLaw, TransformNumerics};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

type C = Complex64;

/// `E[e^{−rX^j_{T^j_t}} | T^j_t = y] = L_J(r a^j_1 − r²|a^j_2|²/2, y)`.
pub fn jump_part_conditional_laplace(model: &TwoFactorModel, r: f64, clock_value: f64) -> Result<f64> {
    Ok(model.spec.laplace(C::new(jump_argument(model, r), 0.0), clock_value)?.re)
}

fn jump_argument(model: &TwoFactorModel, r: f64) -> f64 {
    r * model.a_j[0] - 0.5 * r * r * model.a_j[1] * model.a_j[1]
}

/// `ψ` with `L_J(s_J, y) = e^{ψy}`.
pub fn jump_exponent(model: &TwoFactorModel, r: f64) -> Result<f64> {
    Ok(model.spec.log_laplace_unit(C::new(jump_argument(model, r), 0.0))?.re)
}

/// Symbols of the continuous factor at one `r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuousFactor {
    /// Loading on the clock driver `B̃`.
    pub beta: f64,
    /// Loading on `B̂`.
    pub n: f64,
    /// Drift of the equivalent single-driver problem, `a^c_1 − r(|a^c_4|² + N²)/2`.
    pub alpha: f64,
}

impl ContinuousFactor {
    pub fn levy(&self) -> LevyComposition {
        LevyComposition { alpha: self.alpha, beta: self.beta, rho: 1.0 }
    }
}

pub fn continuous_factor(model: &TwoFactorModel, r: f64) -> ContinuousFactor {
    let [a1, a2, a3, a4] = model.a_c;
    let rho = model.rho;
    let bar = (1.0 - rho * rho).max(0.0).sqrt();
    let beta = a2 * bar + rho * a3;
    let n = (rho * a2 - bar * a3).abs();
    ContinuousFactor { beta, n, alpha: a1 - 0.5 * r * (a4 * a4 + n * n) }
}

/// `E e^{−rX^c_{T^c_t}}`.
pub fn laplace_continuous_part(model: &TwoFactorModel, t: f64, r: f64, num: &TransformNumerics) -> Result<f64> {
    let f = continuous_factor(model, r);
    if f.beta == 0.0 {
        return clock_exp_moment(&model.continuous_clock, t, -r * f.alpha, num);
    }
    laplace_Y(&model.continuous_clock, &f.levy(), &SubordinatorSpec::identity(), t, r, num)
}

/// `E e^{u T_t}` for real `u`.
fn clock_exp_moment(model: &ActivityModel, t: f64, u: f64, num: &TransformNumerics) -> Result<f64> {
    if model.is_deterministic() {
        Ok((u * model.deterministic_rate() * t).exp())
    } else if model.is_affine() {
        clock_mgf(model, t, u)
    } else {
        Ok(pdf_subordinated_clock(model, &SubordinatorSpec::identity(), t, num)?.expect(|y| (u * y).exp()))
    }
}

fn check(model: &TwoFactorModel, t: f64, r: f64, num: &TransformNumerics) -> Result<()> {
    model.validate()?;
    num.validate()?;
    if !(t > 0.0) || !r.is_finite() {
        return Err(EngineError::Domain(format!("need t > 0 and finite r, got t={t}, r={r}")));
    }
    Ok(())
}

/// Product route: needs `T^j` independent of `(X^c, T^c)`, i.e. `ρ = 0`
/// and either `a^c_3 = 0` or a deterministic jump clock.
pub fn laplace_Y_sv14(model: &TwoFactorModel, t: f64, r: f64, num: &TransformNumerics) -> Result<f64> {
    check(model, t, r, num)?;
    if !model.jump_part_independent() {
        return Err(EngineError::UnsupportedModel(
            "product route needs rho = 0, separate clocks and a_c3 = 0 unless the jump clock is deterministic".into(),
        ));
    }
    let jump = clock_exp_moment(&model.jump_clock, t, jump_exponent(model, r)?, num)?;
    Ok(jump * laplace_continuous_part(model, t, r, num)?)
}

/// How the kernel `E[e^{−r a^c_3 B^j_s} e^{ψT^j_t}]` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sv2Route {
    /// 2-D quadrature against the joint density of `(T^j_t, B^j_s)`.
    JointDensity,
    /// Parseval in the clock variable with the tilted line problem.
    Fourier,
}

/// `T^c` independent of `(X^c, T^j)`: needs `ρ = a^c_2 = 0`. Uses the
/// Fourier kernel; the joint-density kernel agrees to about 1e-8 and costs
/// roughly 500 times more.
pub fn laplace_Y_sv2(model: &TwoFactorModel, t: f64, r: f64, num: &TransformNumerics) -> Result<f64> {
    laplace_Y_sv2_with(model, t, r, Sv2Route::Fourier, num)
}

pub fn laplace_Y_sv2_with(
    model: &TwoFactorModel,
    t: f64,
    r: f64,
    route: Sv2Route,
    num: &TransformNumerics,
) -> Result<f64> {
    check(model, t, r, num)?;
    if model.rho != 0.0 || model.a_c[1] != 0.0 || model.shared_clock {
        return Err(EngineError::UnsupportedModel("this route needs rho = 0, a_c2 = 0 and separate clocks".into()));
    }
    let [a1, _, a3, a4] = model.a_c;
    let drift = a1 - 0.5 * r * a4 * a4;
    let psi = jump_exponent(model, r)?;
    let b = r * a3;
    // a kernel exponential in s leaves a clock moment of T^c
    if b == 0.0 {
        let jump = clock_exp_moment(&model.jump_clock, t, psi, num)?;
        return Ok(jump * clock_exp_moment(&model.continuous_clock, t, -r * drift, num)?);
    }
    if model.jump_clock.is_deterministic() {
        let c = model.jump_clock.deterministic_rate() * t;
        return Ok((psi * c).exp() * clock_exp_moment(&model.continuous_clock, t, 0.5 * b * b - r * drift, num)?);
    }
    let law = pdf_subordinated_clock(&model.continuous_clock, &SubordinatorSpec::identity(), t, num)?;
    let (nodes, weights): (Vec<f64>, Vec<f64>) = match &law {
        SubordinatedLaw::Atom(c) => (vec![*c], vec![1.0]),
        SubordinatedLaw::Density { nodes, weights, values } => {
            nodes.iter().zip(weights.iter().zip(values)).map(|(&s, (w, v))| (s, w * v)).unzip()
        }
    };
    let kernel: Vec<f64> = match route {
        Sv2Route::JointDensity => {
            nodes.iter().map(|&s| kernel_by_density(&model.jump_clock, t, s, b, psi, num)).collect::<Result<_>>()?
        }
        Sv2Route::Fourier => kernel_by_fourier(&model.jump_clock, t, &nodes, b, psi, num)?,
    };
    Ok(nodes.iter().zip(&weights).zip(&kernel).map(|((&s, w), k)| w * (-r * drift * s).exp() * k).sum())
}

/// `∬ e^{ψy} e^{−bz} f_{T_t, B_s}(y, z) dy dz`.
fn kernel_by_density(clock: &ActivityModel, t: f64, s: f64, b: f64, psi: f64, num: &TransformNumerics) -> Result<f64> {
    let window = ClockSetup::new(clock, t, 0.0, num)?.y_window;
    let ny = (window / 0.05).ceil() as usize + 1;
    let ys: Vec<f64> = (0..ny).map(|k| window * k as f64 / (ny - 1) as f64).collect();
    // e^{−bz} N(0, s) is a Gaussian centred at −bs
    let (centre, half) = (-b * s, 9.0 * s.sqrt());
    let nz = 121;
    let zs: Vec<f64> = (0..nz).map(|k| centre - half + 2.0 * half * k as f64 / (nz - 1) as f64).collect();
    let d = joint_density_T_B(clock, t, s, &ys, &zs, num)?;
    let zw: Vec<f64> = zs.iter().map(|&z| (-b * z).exp()).collect();
    let rows: Vec<f64> = (0..ny).map(|iy| trapezoid(&zs, |iz| zw[iz] * d.at(iy, iz)) * (psi * ys[iy]).exp()).collect();
    Ok(trapezoid(&ys, |iy| rows[iy]))
}

fn trapezoid(x: &[f64], f: impl Fn(usize) -> f64) -> f64 {
    (1..x.len()).map(|k| 0.5 * (x[k] - x[k - 1]) * (f(k) + f(k - 1))).sum()
}

/// `∫₀^Y e^{(ψ+iξ)y} dy`.
fn window_transform(psi: f64, xi: f64, window: f64) -> C {
    let z = C::new(psi, xi);
    if z.norm() * window < 1e-8 {
        return C::new(window, 0.0) * (1.0 + 0.5 * z * window);
    }
    ((z * window).exp() - 1.0) / z
}

/// The line problem for `E[e^{−iξT_t} e^{−bB_j}]`: the joint transform at
/// the imaginary Brownian frequency `η = −ib`.
fn tilted_problem(b: f64, xi: f64) -> LineProblem {
    LineProblem { drift_shift: C::new(-b, 0.0), clock_freq: xi, damping: -0.5 * b * b }
}

/// Kernel at every `s` in `nodes` (ascending) through
/// `(1/2π)∫ E[e^{−iξT_t} e^{−bB_s}] ∫₀^Y e^{(ψ+iξ)y} dy dξ`.
fn kernel_by_fourier(clock: &ActivityModel, t: f64, nodes: &[f64], b: f64, psi: f64, num: &TransformNumerics) -> Result<Vec<f64>> {
    let setup = ClockSetup::new(clock, t, -b, num)?;
    let late = |s: f64| C::new((0.5 * b * b * (s - t)).exp(), 0.0);
    let sum = xi_integral(setup.xi_step, true, num.xi_tol, num.max_xi_nodes, |xi| {
        let lam = window_transform(psi, xi, setup.y_window);
        let c = setup.clock_factors(&tilted_problem(b, xi), nodes, late, None)?;
        let out: Vec<C> = c.into_iter().map(|v| v * lam).collect();
        let env = out.iter().fold(0.0f64, |m, v| m.max(v.norm()));
        Ok((out, env))
    })?;
    Ok(sum.values.into_iter().map(|v| v.re).collect())
}

/// One shared clock: needs `ρ = 1`, `a^c_2 = 0`. Computes
/// `∫ e^{(ψ − r a')y} E[δ(T_t − y) e^{−r a^c_3 B_y}] dy` with
/// `a' = a^c_1 − r|a^c_4|²/2`, the Brownian time running on the clock value.
pub fn laplace_Y_sv3(model: &TwoFactorModel, t: f64, r: f64, num: &TransformNumerics) -> Result<f64> {
    check(model, t, r, num)?;
    if !model.shared_clock || model.rho != 1.0 || model.a_c[1] != 0.0 {
        return Err(EngineError::UnsupportedModel("this route needs one shared clock, rho = 1 and a_c2 = 0".into()));
    }
    let [a1, _, a3, a4] = model.a_c;
    let growth = jump_exponent(model, r)? - r * (a1 - 0.5 * r * a4 * a4);
    let b = r * a3;
    let clock = &model.jump_clock;
    if clock.is_deterministic() {
        let c = clock.deterministic_rate() * t;
        return Ok(((growth + 0.5 * b * b) * c).exp());
    }
    let setup = ClockSetup::new(clock, t, -b, num)?;
    let jr = JRule::new(t, setup.y_window, num);
    let late = |y: f64| C::new((0.5 * b * b * (y - t)).exp(), 0.0);
    let weights: Vec<f64> = jr.nodes.iter().zip(&jr.weights).map(|(&y, w)| w * (growth * y).exp()).collect();
    let sum = xi_integral(setup.xi_step, true, num.xi_tol, num.max_xi_nodes, |xi| {
        let c = setup.clock_factors(&tilted_problem(b, xi), &jr.nodes, late, None)?;
        let mut total = C::new(0.0, 0.0);
        let mut env = 0.0;
        for ((v, &y), w) in c.iter().zip(&jr.nodes).zip(&weights) {
            let term = v * C::from_polar(*w, xi * y);
            total += term;
            env += term.norm();
        }
        Ok((vec![total], env))
    })?;
    Ok(sum.values[0].re)
}

/// Routes by variant tag, or by structure for untagged models.
pub fn laplace_two_factor(model: &TwoFactorModel, t: f64, r: f64, num: &TransformNumerics) -> Result<f64> {
    use super::SVVariant::*;
    match model.variant {
        Some(Sv1) | Some(Sv4) => laplace_Y_sv14(model, t, r, num),
        Some(Sv2) => laplace_Y_sv2(model, t, r, num),
        Some(Sv3) => laplace_Y_sv3(model, t, r, num),
        None if model.jump_part_independent() => laplace_Y_sv14(model, t, r, num),
        None if model.rho == 0.0 && model.a_c[1] == 0.0 && !model.shared_clock => laplace_Y_sv2(model, t, r, num),
        None if model.shared_clock && model.rho == 1.0 && model.a_c[1] == 0.0 => laplace_Y_sv3(model, t, r, num),
        None => Err(EngineError::UnsupportedModel(
            "no Laplace route for this coupling: need the jump clock independent of the continuous part, \
             rho = a_c2 = 0, or a shared clock with rho = 1 and a_c2 = 0"
                .into(),
        )),
    }
}
