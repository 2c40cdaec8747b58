//! Conservative finite-volume discretisation of
//! `∂_t q = ∂_x[½∂_x(σ²q) − (μ + cσ)q] + r(x) q` on the rate axis.
//!
//! Zero flux at the left edge, `q = 0` at the right edge (the last node is
//! not an unknown). Convection uses central face values where the cell
//! Péclet number allows it and upwind values elsewhere.

use super::grid::Axis;
use crate::activity::ActivityModel;
use crate::error::{EngineError, Result};
use num_complex::Complex64;

type C = Complex64;

#[derive(Debug, Clone)]
pub(crate) struct RateOperator {
    pub lower: Vec<C>,
    pub diag: Vec<C>,
    pub upper: Vec<C>,
}

impl RateOperator {
    /// `drift_shift` is `c` in `μ + cσ`; `reaction(x)` is the zeroth-order coefficient.
    pub fn new(model: &ActivityModel, axis: &Axis, drift_shift: C, reaction: impl Fn(f64) -> C) -> Self {
        let nx = axis.len();
        let n = nx - 1;
        let x = &axis.nodes;
        let h = &axis.weights;
        let d: Vec<f64> = x.iter().map(|&xi| 0.5 * model.diffusion(xi).powi(2)).collect();
        let mut lower = vec![C::new(0.0, 0.0); n];
        let mut diag: Vec<C> = (0..n).map(|i| reaction(x[i])).collect();
        let mut upper = vec![C::new(0.0, 0.0); n];
        for i in 0..nx - 1 {
            let dx = x[i + 1] - x[i];
            let xf = 0.5 * (x[i] + x[i + 1]);
            let b = C::new(model.drift(xf), 0.0) + drift_shift * model.diffusion(xf);
            let (wl, wr) = if b.re > 2.0 * d[i + 1] / dx {
                (1.0, 0.0)
            } else if b.re < -2.0 * d[i] / dx {
                (0.0, 1.0)
            } else {
                (0.5, 0.5)
            };
            // flux F = (D_{i+1}q_{i+1} − D_i q_i)/dx − b(wl q_i + wr q_{i+1})
            let f_left = C::new(-d[i] / dx, 0.0) - b * wl;
            let f_right = C::new(d[i + 1] / dx, 0.0) - b * wr;
            // row i gains +F
            diag[i] += f_left / h[i];
            if i + 1 < n {
                upper[i] += f_right / h[i];
                // row i+1 loses F
                lower[i + 1] -= f_left / h[i + 1];
                diag[i + 1] -= f_right / h[i + 1];
            }
        }
        Self { lower, diag, upper }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn apply(&self, q: &[C], out: &mut [C]) {
        let n = self.len();
        for i in 0..n {
            let mut v = self.diag[i] * q[i];
            if i > 0 {
                v += self.lower[i] * q[i - 1];
            }
            if i + 1 < n {
                v += self.upper[i] * q[i + 1];
            }
            out[i] = v;
        }
    }

    /// Solves `(I − a·L) x = rhs` in place.
    pub fn solve_shifted(&self, a: f64, rhs: &mut [C], scratch: &mut [C]) -> Result<()> {
        let n = self.len();
        let one = C::new(1.0, 0.0);
        let mut beta = one - a * self.diag[0];
        if beta.norm() < 1e-300 {
            return Err(EngineError::Numerics("singular tridiagonal pivot".into()));
        }
        rhs[0] /= beta;
        for i in 1..n {
            scratch[i] = -a * self.upper[i - 1] / beta;
            beta = one - a * self.diag[i] - (-a * self.lower[i]) * scratch[i];
            if beta.norm() < 1e-300 {
                return Err(EngineError::Numerics("singular tridiagonal pivot".into()));
            }
            let prev = rhs[i - 1];
            rhs[i] = (rhs[i] - (-a * self.lower[i]) * prev) / beta;
        }
        for i in (0..n - 1).rev() {
            let next = rhs[i + 1];
            rhs[i] -= scratch[i + 1] * next;
        }
        Ok(())
    }
}

/// Time levels from 0 to the largest stop, hitting every stop exactly and
/// using uniform steps no larger than `dt` between consecutive stops.
pub(crate) fn time_levels(stops: &[f64], dt: f64) -> Vec<f64> {
    let mut s: Vec<f64> = stops.iter().copied().filter(|&t| t > 0.0).collect();
    s.sort_by(f64::total_cmp);
    s.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    let mut levels = vec![0.0];
    let mut prev = 0.0;
    for &stop in &s {
        let n = ((stop - prev) / dt - 1e-9).ceil().max(1.0) as usize;
        for k in 1..=n {
            levels.push(if k == n { stop } else { prev + (stop - prev) * k as f64 / n as f64 });
        }
        prev = stop;
    }
    levels
}

/// Discrete delta at `v0`: two-node hat with unit mass and first moment `v0`.
pub(crate) fn hat(axis: &Axis, v0: f64) -> Vec<C> {
    let mut q = vec![C::new(0.0, 0.0); axis.len()];
    let i = axis.bracket(v0).expect("v0 inside the rate axis");
    let (a, b) = (axis.nodes[i], axis.nodes[i + 1]);
    let right = (v0 - a) / (b - a);
    q[i] = C::new((1.0 - right) / axis.weights[i], 0.0);
    q[i + 1] = C::new(right / axis.weights[i + 1], 0.0);
    q
}

/// Marches `q` (the unknowns, last Dirichlet node excluded) through `levels`,
/// calling `visit(level_index, q)` after every step. The first step is split
/// into two implicit-Euler half steps, the rest are Crank–Nicolson.
pub(crate) fn march(
    op: &RateOperator,
    q: &mut [C],
    levels: &[f64],
    mut visit: impl FnMut(usize, &[C]) -> Result<()>,
) -> Result<()> {
    let n = op.len();
    let mut scratch = vec![C::new(0.0, 0.0); n];
    let mut work = vec![C::new(0.0, 0.0); n];
    visit(0, q)?;
    for (k, pair) in levels.windows(2).enumerate() {
        let tau = pair[1] - pair[0];
        if k == 0 {
            op.solve_shifted(0.5 * tau, q, &mut scratch)?;
            op.solve_shifted(0.5 * tau, q, &mut scratch)?;
        } else {
            op.apply(q, &mut work);
            for i in 0..n {
                q[i] += 0.5 * tau * work[i];
            }
            op.solve_shifted(0.5 * tau, q, &mut scratch)?;
        }
        if q.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(EngineError::Numerics(format!("non-finite field at t={}", pair[1])));
        }
        visit(k + 1, q)?;
    }
    Ok(())
}
