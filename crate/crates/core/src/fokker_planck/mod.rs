//! Forward (Fokker–Planck) solvers for the rate/clock/Brownian densities.
//!
//! Every 1-D problem here is an instance of
//! `∂_t q = ∂_x[½∂_x(σ²q) − (μ + cσ)q] − (a + iξ(x+ε)) q`, `q(0) = δ_{v0}`:
//!
//! | solver              | c       | a     | ξ   |
//! |---------------------|---------|-------|-----|
//! | `solve_qhat`        | −iη     | η²/2  | ξ   |
//! | `solve_ghat`        | −rρ     | 0     | η   |
//! | `solve_ghat_theta`  | +iθρ    | 0     | η   |

mod cube;
mod field;
mod grid;
mod line;
mod plane;

pub use cube::{solve_q3d, CubeField};
pub use field::{read_dump, PDEField};
pub use grid::{Axis, SpatialGrid, Stretching};
pub use plane::{solve_g, solve_g_snapshots, PlaneField};

use crate::activity::ActivityModel;
use crate::error::{EngineError, Result};
use line::{hat, march, time_levels, RateOperator};
use num_complex::Complex64;

/// Coefficients of one 1-D forward problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineProblem {
    /// `c` in the convection velocity `μ + cσ`.
    pub drift_shift: Complex64,
    /// Frequency multiplying the clock rate in the reaction term.
    pub clock_freq: f64,
    /// Constant damping `a`.
    pub damping: f64,
}

impl LineProblem {
    pub fn qhat(xi: f64, eta: f64) -> Self {
        Self { drift_shift: Complex64::new(0.0, -eta), clock_freq: xi, damping: 0.5 * eta * eta }
    }

    pub fn ghat(r: f64, rho: f64, eta: f64) -> Self {
        Self { drift_shift: Complex64::new(-r * rho, 0.0), clock_freq: eta, damping: 0.0 }
    }

    pub fn ghat_theta(theta: f64, rho: f64, eta: f64) -> Self {
        Self { drift_shift: Complex64::new(0.0, theta * rho), clock_freq: eta, damping: 0.0 }
    }

    /// Zero frequency with a real tilt: the solution is a probability density.
    pub fn is_density(&self) -> bool {
        self.clock_freq == 0.0 && self.damping == 0.0 && self.drift_shift.im == 0.0
    }
}

/// Streams the solution at each requested time (ascending order of `times`
/// is not required) to `visit(index_into_times, time, values)`, where the
/// values cover every rate node including the zero right edge.
pub fn solve_line_with(
    model: &ActivityModel,
    grid: &SpatialGrid,
    problem: &LineProblem,
    dt: f64,
    times: &[f64],
    mut visit: impl FnMut(usize, f64, &[Complex64]) -> Result<()>,
) -> Result<()> {
    model.validate()?;
    if !(dt > 0.0) {
        return Err(EngineError::Domain(format!("dt must be positive, got {dt}")));
    }
    if times.iter().any(|&t| !(t >= 0.0)) {
        return Err(EngineError::Domain("snapshot times must be nonnegative".into()));
    }
    if grid.x.bracket(model.v0).is_none() {
        return Err(EngineError::Config("rate axis does not contain v0".into()));
    }
    let eps = model.eps;
    let a = problem.damping;
    let xi = problem.clock_freq;
    let op = RateOperator::new(model, &grid.x, problem.drift_shift, |x| Complex64::new(-a, -xi * (x + eps)));
    let levels = time_levels(times, dt);
    let mut full = hat(&grid.x, model.v0);
    let n = op.len();
    let mut q: Vec<Complex64> = full[..n].to_vec();
    let mut order: Vec<usize> = (0..times.len()).collect();
    order.sort_by(|&a, &b| times[a].total_cmp(&times[b]));
    let mut next = 0usize;
    let check_mass = problem.is_density();
    march(&op, &mut q, &levels, |k, q| {
        let t = levels[k];
        while next < order.len() && (times[order[next]] - t).abs() < 1e-12 {
            full[..n].copy_from_slice(q);
            full[n] = Complex64::new(0.0, 0.0);
            if check_mass {
                let mass: f64 = full.iter().zip(&grid.x.weights).map(|(v, w)| v.re * w).sum();
                if (mass - 1.0).abs() > 1e-3 {
                    return Err(EngineError::Conservation(format!("mass {mass} at t={t}")));
                }
            }
            visit(order[next], t, &full)?;
            next += 1;
        }
        Ok(())
    })
}

/// Collects [`solve_line_with`] snapshots as fields.
pub fn solve_line(
    model: &ActivityModel,
    grid: &SpatialGrid,
    problem: &LineProblem,
    dt: f64,
    times: &[f64],
    node: Option<(f64, f64)>,
) -> Result<Vec<PDEField>> {
    let mut out: Vec<Option<PDEField>> = vec![None; times.len()];
    solve_line_with(model, grid, problem, dt, times, |idx, t, values| {
        out[idx] = Some(PDEField::line(grid, values, t, node));
        Ok(())
    })?;
    Ok(out.into_iter().map(|f| f.expect("every requested time is visited")).collect())
}

/// `q̂(t, x, ξ, η) = E[δ(v_t − x) e^{−iξT_t − iηB_t}]`.
pub fn solve_qhat(model: &ActivityModel, t: f64, xi: f64, eta: f64, grid: &SpatialGrid, dt: f64) -> Result<PDEField> {
    Ok(solve_line(model, grid, &LineProblem::qhat(xi, eta), dt, &[t], Some((xi, eta)))?.remove(0))
}

/// `Ĝ(t, x, η)`: clock Fourier transform of the density under the drift tilt `−rρσ`.
pub fn solve_ghat(model: &ActivityModel, r: f64, rho: f64, t: f64, eta: f64, grid: &SpatialGrid, dt: f64) -> Result<PDEField> {
    Ok(solve_line(model, grid, &LineProblem::ghat(r, rho, eta), dt, &[t], Some((eta, 0.0)))?.remove(0))
}

/// `Ĝ^θ(t, x, η)`: as [`solve_ghat`] with the complex tilt `+iθρσ`.
pub fn solve_ghat_theta(
    model: &ActivityModel,
    theta: f64,
    rho: f64,
    t: f64,
    eta: f64,
    grid: &SpatialGrid,
    dt: f64,
) -> Result<PDEField> {
    Ok(solve_line(model, grid, &LineProblem::ghat_theta(theta, rho, eta), dt, &[t], Some((eta, 0.0)))?.remove(0))
}

/// Marches `start` (values on every rate node) forward by `duration` under
/// `problem` and returns the result on every rate node.
pub fn continue_line(
    model: &ActivityModel,
    grid: &SpatialGrid,
    problem: &LineProblem,
    dt: f64,
    start: &[Complex64],
    duration: f64,
) -> Result<Vec<Complex64>> {
    let eps = model.eps;
    let a = problem.damping;
    let xi = problem.clock_freq;
    let op = RateOperator::new(model, &grid.x, problem.drift_shift, |x| Complex64::new(-a, -xi * (x + eps)));
    let n = op.len();
    let mut q = start[..n].to_vec();
    if duration > 0.0 {
        march(&op, &mut q, &time_levels(&[duration], dt), |_, _| Ok(()))?;
    }
    q.push(Complex64::new(0.0, 0.0));
    Ok(q)
}
