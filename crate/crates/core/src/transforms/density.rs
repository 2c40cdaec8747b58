#![allow(non_snake_case)]

//! Densities by Fourier inversion.
//!
//! The joint transform `f̂(ξ, η; j) = E e^{−iξT_t − iηB_j}` comes from one
//! line solve per `(ξ, η)`. Integrating it against the subordinator profile
//! gives `φ_Y(ζ) = E e^{−iζY_t}`, which is inverted on a trapezoid grid whose
//! period contains the requested points. When `B` does not feed the
//! subordinated Brownian part (ρ ≈ 0 or a deterministic clock) the law of
//! `J_{T_t}` is computed once and mixed with Gaussians instead.

use super::engine::{j_cutoff, xi_integral, ClockSetup, JRule, Profile, ProfileKind};
use super::result::{TransformKind, TransformResult, Truncation};
use super::{TransformNumerics, RHO_CROSSOVER};
use crate::activity::{clock_moments, ActivityModel};
use crate::error::{EngineError, Result};
use crate::fokker_planck::LineProblem;
use crate::levy::{LevyComposition, SubordinatorSpec};
use num_complex::Complex64;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex};

type C = Complex64;

/// Values below this are reported as a failed inversion.
const NEGATIVE_LOBE: f64 = -1e-3;

fn normal_pdf(x: f64, var: f64) -> f64 {
    (-0.5 * x * x / var).exp() / (2.0 * PI * var).sqrt()
}

fn require_ascending(grid: &[f64], what: &str) -> Result<()> {
    if grid.is_empty() || grid.windows(2).any(|w| !(w[1] > w[0])) || grid.iter().any(|v| !v.is_finite()) {
        return Err(EngineError::Domain(format!("{what} grid must be finite, nonempty and strictly increasing")));
    }
    Ok(())
}

/// `E e^{−iξT_t − iηB_j}`.
pub fn joint_cf_T_B(model: &ActivityModel, t: f64, j: f64, xi: f64, eta: f64, num: &TransformNumerics) -> Result<C> {
    model.validate()?;
    num.validate()?;
    if !(j >= 0.0) {
        return Err(EngineError::Domain(format!("Brownian time must be nonnegative, got {j}")));
    }
    let brownian = (-0.5 * eta * eta * j).exp();
    if model.is_deterministic() {
        return Ok(C::from_polar(brownian, -xi * model.deterministic_rate() * t));
    }
    let setup = ClockSetup::new(model, t, 0.0, num)?;
    joint_cf_with(&setup, j, xi, eta)
}

fn joint_cf_with(setup: &ClockSetup, j: f64, xi: f64, eta: f64) -> Result<C> {
    let t = setup.t;
    let c = setup.clock_factors(&LineProblem::qhat(xi, eta), &[j], |j| C::new((-0.5 * eta * eta * (j - t)).exp(), 0.0), None)?;
    Ok(c[0])
}

/// Joint density of `(T_t, B_j)` on a `ys × zs` grid, stored row by row in `y`.
#[derive(Debug, Clone)]
pub struct JointDensity {
    pub ys: Vec<f64>,
    pub zs: Vec<f64>,
    pub values: Vec<f64>,
    /// Trapezoid mass over the grid.
    pub mass: f64,
}

impl JointDensity {
    pub fn at(&self, iy: usize, iz: usize) -> f64 {
        self.values[iy * self.zs.len() + iz]
    }

    /// Density of the clock coordinate.
    pub fn y_marginal(&self) -> Vec<f64> {
        (0..self.ys.len()).map(|iy| trapezoid(&self.zs, |iz| self.at(iy, iz))).collect()
    }

    /// Density of the Brownian coordinate.
    pub fn z_marginal(&self) -> Vec<f64> {
        (0..self.zs.len()).map(|iz| trapezoid(&self.ys, |iy| self.at(iy, iz))).collect()
    }
}

fn trapezoid(x: &[f64], f: impl Fn(usize) -> f64) -> f64 {
    (1..x.len()).map(|k| 0.5 * (x[k] - x[k - 1]) * (f(k) + f(k - 1))).sum()
}

/// `f_{T_t, B_j}(y, z)` by 2-D inversion of [`joint_cf_T_B`].
pub fn joint_density_T_B(
    model: &ActivityModel,
    t: f64,
    j: f64,
    ys: &[f64],
    zs: &[f64],
    num: &TransformNumerics,
) -> Result<JointDensity> {
    model.validate()?;
    num.validate()?;
    require_ascending(ys, "clock")?;
    require_ascending(zs, "Brownian")?;
    if !(j > 0.0) {
        return Err(EngineError::Domain(format!("Brownian time must be positive, got {j}")));
    }
    let (ny, nz) = (ys.len(), zs.len());
    let mut values = vec![0.0; ny * nz];
    if model.is_deterministic() {
        // point mass at c spread over the two neighbouring y nodes
        let c = model.deterministic_rate() * t;
        if let Some(k) = (0..ny.saturating_sub(1)).find(|&k| ys[k] <= c && c <= ys[k + 1]) {
            let h = ys[k + 1] - ys[k];
            // trapezoid weights of the two nodes, halved at the grid ends
            let wk = if k == 0 { h / 2.0 } else { (ys[k + 1] - ys[k - 1]) / 2.0 };
            let wk1 = if k + 2 == ny { h / 2.0 } else { (ys[k + 2] - ys[k]) / 2.0 };
            let (mk, mk1) = ((ys[k + 1] - c) / h, (c - ys[k]) / h);
            for (iz, &z) in zs.iter().enumerate() {
                let g = normal_pdf(z, j);
                values[k * nz + iz] = mk / wk * g;
                values[(k + 1) * nz + iz] = mk1 / wk1 * g;
            }
        }
    } else {
        let fine = TransformNumerics { n_x: num.joint_n_x, ..num.clone() };
        let setup = ClockSetup::new(model, t, 0.0, &fine)?;
        let lo = ys[0].min(0.0);
        let hi = ys[ny - 1].max(setup.y_window);
        let xi_step = 2.0 * PI / (1.05 * (hi - lo));
        let half = zs[nz - 1].abs().max(zs[0].abs()).max(10.0 * j.sqrt());
        let eta_step = 2.0 * PI / (2.1 * half);
        // e^{−η²j/2} bounds the ξ = 0 column only; other columns run until they decay
        let n_gauss = ((80.0 / j).sqrt() / eta_step).ceil() as usize;
        let sum = xi_integral(xi_step, false, num.xi_tol, num.max_xi_nodes, |xi| {
            let mut env = 0.0;
            let mut out = vec![C::new(0.0, 0.0); ny * nz];
            let mut quiet = 0;
            let mut l = 0;
            while l <= n_gauss || quiet < 4 {
                if l > 20 * n_gauss.max(8) {
                    return Err(EngineError::Quadrature(format!("η sum at ξ = {xi} did not decay")));
                }
                let eta = l as f64 * eta_step;
                let f = joint_cf_with(&setup, j, xi, eta)? * if l == 0 { 1.0 } else { 2.0 };
                env += f.norm();
                quiet = if f.norm() < 1e-11 { quiet + 1 } else { 0 };
                let zphase: Vec<C> = zs.iter().map(|&z| C::from_polar(1.0, eta * z)).collect();
                for (iy, &y) in ys.iter().enumerate() {
                    let fy = f * C::from_polar(1.0, xi * y);
                    for (iz, p) in zphase.iter().enumerate() {
                        out[iy * nz + iz] += fy * p;
                    }
                }
                l += 1;
            }
            Ok((out, env))
        })?;
        let scale = eta_step / (2.0 * PI);
        for (v, s) in values.iter_mut().zip(&sum.values) {
            *v = s.re * scale;
        }
    }
    if let Some(p) = values.iter().position(|&v| v < NEGATIVE_LOBE) {
        return Err(EngineError::Inversion(format!(
            "joint density reaches {:.3e} at (y, z) = ({}, {}); the frequency box is too small",
            values[p],
            ys[p / nz],
            zs[p % nz]
        )));
    }
    let mass = trapezoid(ys, |iy| trapezoid(zs, |iz| values[iy * nz + iz]));
    Ok(JointDensity { ys: ys.to_vec(), zs: zs.to_vec(), values, mass })
}

/// Law of the subordinated clock `J_{T_t}`.
#[derive(Debug, Clone, PartialEq)]
pub enum SubordinatedLaw {
    Atom(f64),
    /// Density values at quadrature nodes, with the weights of that rule.
    Density { nodes: Vec<f64>, weights: Vec<f64>, values: Vec<f64> },
}

impl SubordinatedLaw {
    pub fn mass(&self) -> f64 {
        match self {
            SubordinatedLaw::Atom(_) => 1.0,
            SubordinatedLaw::Density { weights, values, .. } => weights.iter().zip(values).map(|(w, v)| w * v).sum(),
        }
    }

    /// `Σ w_j g(j) h(j)`, or `h(c)` for an atom at `c`.
    pub fn expect(&self, h: impl Fn(f64) -> f64) -> f64 {
        match self {
            SubordinatedLaw::Atom(c) => h(*c),
            SubordinatedLaw::Density { nodes, weights, values } => {
                nodes.iter().zip(weights).zip(values).map(|((&j, w), v)| w * v * h(j)).sum()
            }
        }
    }
}

/// Law of `J_{T_t}`: `g(j) = (1/2π)∫ F(ξ, j) E e^{−iξT_t} dξ`.
pub fn pdf_subordinated_clock(
    model: &ActivityModel,
    spec: &SubordinatorSpec,
    t: f64,
    num: &TransformNumerics,
) -> Result<SubordinatedLaw> {
    Ok(subordinated_law(model, spec, t, num)?.0)
}

fn subordinated_law(
    model: &ActivityModel,
    spec: &SubordinatorSpec,
    t: f64,
    num: &TransformNumerics,
) -> Result<(SubordinatedLaw, Truncation)> {
    model.validate()?;
    spec.validate()?;
    num.validate()?;
    if model.is_deterministic() {
        let c = model.deterministic_rate() * t;
        let tr = Truncation { route: "deterministic-clock".into(), ..Truncation::default() };
        if spec.is_atom() {
            return Ok((SubordinatedLaw::Atom(c), tr));
        }
        let jr = JRule::new(c, j_cutoff(spec, c, 0.0), num);
        let values = jr.nodes.iter().map(|&j| spec.density(c, j)).collect::<Result<Vec<_>>>()?;
        let tr = Truncation { j_max: jr.j_max, j_nodes: jr.len(), ..tr };
        return Ok((SubordinatedLaw::Density { nodes: jr.nodes, weights: jr.weights, values }, tr));
    }
    let setup = ClockSetup::new(model, t, 0.0, num)?;
    let jr = JRule::new(t, j_cutoff(spec, setup.y_window, 0.0), num);
    let xi_cap = num.max_xi_nodes as f64 * setup.xi_step;
    let profile = Profile::new(spec, setup.y_window, &jr.nodes, xi_cap, ProfileKind::Density);
    let sum = xi_integral(setup.xi_step, true, num.xi_tol, num.max_xi_nodes, |xi| {
        let clock = setup.clock_factors(&LineProblem::qhat(xi, 0.0), &[t], |_| C::new(1.0, 0.0), None)?[0];
        let f = profile.fourier(xi);
        let env = clock.norm() * f.iter().fold(0.0f64, |m, v| m.max(v.norm()));
        Ok((f.into_iter().map(|v| v * clock).collect(), env))
    })?;
    let values = sum.values.iter().map(|v| v.re).collect();
    let tr = Truncation {
        xi_step: setup.xi_step,
        xi_max: sum.xi_max,
        xi_nodes: sum.nodes,
        j_max: jr.j_max,
        j_nodes: jr.len(),
        y_window: setup.y_window,
        estimated_error: sum.estimated_error,
        ..Truncation::default()
    };
    Ok((SubordinatedLaw::Density { nodes: jr.nodes, weights: jr.weights, values }, tr))
}

/// Joint-law route: `φ_Y(ζ) = E e^{−iζY_t}` through `f̂(ξ, ζβρ; j)`.
struct JointRoute<'a> {
    setup: ClockSetup<'a>,
    levy: LevyComposition,
    jr: JRule,
    profile: Profile,
    /// `profile.fourier(kΔξ)` by `k ≥ 0`; the rows are real so negative `k` are conjugates.
    fourier: Mutex<HashMap<u64, Arc<Vec<C>>>>,
    num: &'a TransformNumerics,
}

impl<'a> JointRoute<'a> {
    fn new(model: &'a ActivityModel, levy: &LevyComposition, spec: &SubordinatorSpec, t: f64, num: &'a TransformNumerics) -> Result<Self> {
        let setup = ClockSetup::new(model, t, 0.0, num)?;
        let jr = JRule::new(t, j_cutoff(spec, setup.y_window, 0.0), num);
        let xi_cap = num.max_xi_nodes as f64 * setup.xi_step;
        let profile = Profile::new(spec, setup.y_window, &jr.nodes, xi_cap, ProfileKind::Density);
        Ok(Self { setup, levy: *levy, jr, profile, fourier: Mutex::new(HashMap::new()), num })
    }

    fn profile_fourier(&self, xi: f64) -> Vec<C> {
        let k = (xi.abs() / self.setup.xi_step).round() as u64;
        let cached = self.fourier.lock().unwrap().get(&k).cloned();
        let row = cached.unwrap_or_else(|| {
            let row = Arc::new(self.profile.fourier(k as f64 * self.setup.xi_step));
            self.fourier.lock().unwrap().insert(k, row.clone());
            row
        });
        if xi < 0.0 {
            row.iter().map(|v| v.conj()).collect()
        } else {
            row.to_vec()
        }
    }

    fn phi(&self, zeta: f64) -> Result<(C, f64)> {
        let (alpha, beta, rho) = (self.levy.alpha, self.levy.beta, self.levy.rho);
        let eta = zeta * beta * rho;
        let damp = 0.5 * zeta * zeta * beta * beta * (1.0 - rho * rho);
        let t = self.setup.t;
        let w: Vec<C> = self
            .jr
            .nodes
            .iter()
            .zip(&self.jr.weights)
            .map(|(&j, &wj)| wj * C::from_polar((-damp * j).exp(), -zeta * alpha * j))
            .collect();
        let problem = LineProblem::qhat(0.0, eta);
        let sum = xi_integral(self.setup.xi_step, false, self.num.xi_tol, self.num.max_xi_nodes, |xi| {
            let f = self.profile_fourier(xi);
            let p = LineProblem { clock_freq: xi, ..problem };
            let c = self.setup.clock_factors(&p, &self.jr.nodes, |j| C::new((-0.5 * eta * eta * (j - t)).exp(), 0.0), None)?;
            let mut total = C::new(0.0, 0.0);
            let mut env = 0.0;
            for ((w, f), c) in w.iter().zip(&f).zip(&c) {
                let v = w * f * c;
                total += v;
                env += v.norm();
            }
            Ok((vec![total], env))
        })?;
        Ok((sum.values[0], sum.xi_max))
    }
}

/// `E e^{iθY_t}` through the joint law of `(T_t, B_j)`: an independent
/// cross-check of [`cf_Y`](super::cf_Y).
pub fn cf_Y_joint(
    model: &ActivityModel,
    levy: &LevyComposition,
    spec: &SubordinatorSpec,
    t: f64,
    theta: f64,
    num: &TransformNumerics,
) -> Result<C> {
    model.validate()?;
    levy.validate()?;
    spec.validate()?;
    num.validate()?;
    if model.is_deterministic() {
        let s = C::new(0.5 * theta * theta * levy.beta * levy.beta, -theta * levy.alpha);
        return Ok((spec.log_laplace_unit(s)? * model.deterministic_rate() * t).exp());
    }
    Ok(JointRoute::new(model, levy, spec, t, num)?.phi(-theta)?.0)
}

/// Rough mean and standard deviation of `Y_t`, used to size the inversion period.
fn rough_moments(model: &ActivityModel, levy: &LevyComposition, spec: &SubordinatorSpec, t: f64) -> (f64, f64) {
    let (mt, vt) = match clock_moments(model, t) {
        Ok(m) => (m.mean, m.variance),
        Err(_) => {
            let m = model.deterministic_rate() * t;
            (m, m * m)
        }
    };
    let mj = spec.mean(1.0);
    let mean_j = mj * mt;
    let var_j = spec.variance(1.0) * mt + mj * mj * vt;
    let mean = levy.alpha * mean_j;
    let var = levy.alpha * levy.alpha * var_j + levy.beta * levy.beta * mean_j;
    (mean, var.sqrt())
}

/// Density of `Y_t = αJ_{T_t} + βZ_{J_{T_t}}` on an ascending grid.
pub fn pdf_Y(
    model: &ActivityModel,
    levy: &LevyComposition,
    spec: &SubordinatorSpec,
    t: f64,
    ys: &[f64],
    num: &TransformNumerics,
) -> Result<TransformResult> {
    model.validate()?;
    levy.validate()?;
    spec.validate()?;
    num.validate()?;
    require_ascending(ys, "return")?;
    if !(t > 0.0) {
        return Err(EngineError::Domain(format!("horizon must be positive, got {t}")));
    }
    if levy.beta == 0.0 {
        return Err(EngineError::DegenerateModel(
            "beta = 0 leaves Y = alpha J_T without a Brownian part and no density of this form".into(),
        ));
    }
    let (values, truncation) = if levy.rho.abs() < RHO_CROSSOVER || model.is_deterministic() {
        mixture_route(model, levy, spec, t, ys, num)?
    } else {
        joint_route(model, levy, spec, t, ys, num)?
    };
    if let Some(v) = values.iter().copied().find(|&v| v < NEGATIVE_LOBE) {
        return Err(EngineError::Inversion(format!("density reaches {v:.3e}; frequency range too short")));
    }
    let values = values.into_iter().map(|v| C::new(v, 0.0)).collect();
    Ok(TransformResult::new(TransformKind::Pdf, ys.to_vec(), values, truncation).with_cdf())
}

/// Density of `Z_{J_{T_t}}`: the case α = 0, β = 1.
pub fn pdf_Z(
    model: &ActivityModel,
    rho: f64,
    spec: &SubordinatorSpec,
    t: f64,
    zs: &[f64],
    num: &TransformNumerics,
) -> Result<TransformResult> {
    pdf_Y(model, &LevyComposition::standard(rho), spec, t, zs, num)
}

/// `f(y) = E N(y − αJ_{T_t}; β²J_{T_t})`, valid when `B` does not enter `Z_J`
/// through the clock.
fn mixture_route(
    model: &ActivityModel,
    levy: &LevyComposition,
    spec: &SubordinatorSpec,
    t: f64,
    ys: &[f64],
    num: &TransformNumerics,
) -> Result<(Vec<f64>, Truncation)> {
    let (law, mut tr) = subordinated_law(model, spec, t, num)?;
    let (alpha, b2) = (levy.alpha, levy.beta * levy.beta);
    let values = ys
        .iter()
        .map(|&y| law.expect(|j| if j > 0.0 { normal_pdf(y - alpha * j, b2 * j) } else { 0.0 }))
        .collect();
    tr.route = "gaussian-mixture".into();
    tr.estimated_error = tr.estimated_error.max((1.0 - law.mass()).abs());
    Ok((values, tr))
}

fn joint_route(
    model: &ActivityModel,
    levy: &LevyComposition,
    spec: &SubordinatorSpec,
    t: f64,
    ys: &[f64],
    num: &TransformNumerics,
) -> Result<(Vec<f64>, Truncation)> {
    let route = JointRoute::new(model, levy, spec, t, num)?;
    let (mean, sd) = rough_moments(model, levy, spec, t);
    let reach = ys[0].abs().max(ys[ys.len() - 1].abs());
    let half = num.return_half_width.unwrap_or((mean.abs() + 12.0 * sd).max(1.05 * reach));
    let step = 2.0 * PI / (2.0 * half);
    const BATCH: usize = 8;

    let (phi0, _) = route.phi(0.0)?;
    let mut phis: Vec<C> = Vec::new();
    let mut xi_max = 0.0f64;
    let scale = step / (2.0 * PI);
    // bound on what the latest batch adds to any density value
    let mut last = f64::INFINITY;
    while phis.len() < num.max_zeta_nodes {
        let start = phis.len() + 1;
        let mut batch = 0.0;
        for l in start..start + BATCH {
            let (p, xm) = route.phi(l as f64 * step)?;
            xi_max = xi_max.max(xm);
            batch += 2.0 * scale * p.norm();
            phis.push(p);
        }
        last = batch;
        if batch < num.zeta_tol {
            break;
        }
    }
    if last > 1e-5 {
        return Err(EngineError::Quadrature(format!(
            "inversion sum still adds {last:.3e} after {} frequencies",
            phis.len()
        )));
    }
    // conjugate symmetry of the computed transform, checked at the first two nodes
    let mut residue = 0.0f64;
    for (l, p) in phis.iter().take(2).enumerate() {
        let (m, _) = route.phi(-((l + 1) as f64) * step)?;
        residue = residue.max((m - p.conj()).norm());
    }
    residue = residue.max(phi0.im.abs());
    let values = ys
        .iter()
        .map(|&y| {
            let tail: f64 = phis
                .iter()
                .enumerate()
                .map(|(l, p)| (p * C::from_polar(1.0, (l + 1) as f64 * step * y)).re)
                .sum();
            scale * (phi0.re + 2.0 * tail)
        })
        .collect();
    let tr = Truncation {
        xi_step: route.setup.xi_step,
        xi_max,
        xi_nodes: 2 * (xi_max / route.setup.xi_step).round() as usize + 1,
        zeta_step: step,
        zeta_max: phis.len() as f64 * step,
        j_max: route.jr.j_max,
        j_nodes: route.jr.len(),
        y_window: route.setup.y_window,
        estimated_error: last,
        imag_residue: residue,
        route: "joint-clock-brownian".into(),
    };
    Ok((values, tr))
}
