//! Shared machinery: rate grids sized for a tilt, the clock window and
//! ξ spacing, the subordinated-time rule, the y-profiles of the
//! subordinator and the truncated ξ sums.

use super::TransformNumerics;
use crate::activity::{riccati_coefficients, ActivityModel};
use crate::error::{EngineError, Result};
use crate::fokker_planck::{continue_line, solve_line_with, LineProblem, SpatialGrid, Stretching};
use crate::levy::SubordinatorSpec;
use crate::quadrature::Rule;
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

type C = Complex64;

/// Rate grid and clock window for one horizon and real drift tilt.
pub(crate) struct ClockSetup<'a> {
    pub model: &'a ActivityModel,
    pub t: f64,
    pub dt: f64,
    pub grid: SpatialGrid,
    /// Every value of `T_t` produced by the discrete dynamics lies in `[0, y_window]`.
    pub y_window: f64,
    pub xi_step: f64,
}

impl<'a> ClockSetup<'a> {
    /// `tilt` is the real `c` in the drift `μ + cσ`; the rate axis grows
    /// until the tilted density loses less than `rate_tail` through its
    /// right edge by time `t`.
    pub fn new(model: &'a ActivityModel, t: f64, tilt: f64, num: &TransformNumerics) -> Result<Self> {
        model.validate()?;
        if !(t > 0.0) {
            return Err(EngineError::Domain(format!("horizon must be positive, got {t}")));
        }
        let mut x_max = num.x_max.unwrap_or_else(|| model.rate_upper_bound(t, 1e-12));
        let problem = LineProblem { drift_shift: C::new(tilt, 0.0), clock_freq: 0.0, damping: 0.0 };
        let mut attempts = 0;
        let grid = loop {
            let grid = SpatialGrid::rate_axis(0.0, x_max, num.n_x, Stretching::Uniform, model.v0)?;
            let mut lost = 0.0;
            let run = solve_line_with(model, &grid, &problem, num.dt, &[t], |_, _, v| {
                lost = 1.0 - v.iter().zip(&grid.x.weights).map(|(q, w)| q.re * w).sum::<f64>();
                Ok(())
            });
            attempts += 1;
            match run {
                Ok(()) if lost < num.rate_tail || num.x_max.is_some() => break grid,
                Ok(()) | Err(EngineError::Conservation(_)) if attempts < 12 => x_max *= 1.3,
                Ok(()) => break grid,
                Err(e) => return Err(e),
            }
        };
        let y_window = (grid.x.hi() + model.eps) * t;
        Ok(Self { model, t, dt: num.dt, grid, y_window, xi_step: 2.0 * PI / (1.05 * y_window) })
    }

    /// Riccati coefficients `(A, B)(t − j, −iξ)` for every `j < t` in `js`.
    pub fn riccati(&self, xi: f64, js: &[f64]) -> Result<Vec<(C, C)>> {
        let taus: Vec<f64> = js.iter().filter(|&&j| j < self.t).map(|&j| self.t - j).collect();
        if taus.is_empty() || !self.model.is_affine() {
            return Ok(Vec::new());
        }
        riccati_coefficients(self.model, C::new(0.0, -xi), &taus)
    }

    /// `E[e^{−iξT_t} · (weight accumulated on [0, j])]` for every `j` in
    /// `js` (ascending). `problem` runs on `[0, min(j, t)]`; past `j` the
    /// clock evolves untilted, either through the Riccati coefficients
    /// (affine rates) or by continuing the march. For `j ≥ t` the value at
    /// `t` is multiplied by `late(j)`.
    pub fn clock_factors(
        &self,
        problem: &LineProblem,
        js: &[f64],
        late: impl Fn(f64) -> C,
        riccati: Option<&[(C, C)]>,
    ) -> Result<Vec<C>> {
        let xi = problem.clock_freq;
        let t = self.t;
        let n_early = js.iter().take_while(|&&j| j < t).count();
        let mut times: Vec<f64> = js[..n_early].to_vec();
        if n_early < js.len() {
            times.push(t);
        }
        let owned;
        let coefs: &[(C, C)] = match riccati {
            Some(c) => c,
            None => {
                owned = self.riccati(xi, &js[..n_early])?;
                &owned
            }
        };
        let w = &self.grid.x.weights;
        let x = &self.grid.x.nodes;
        let mut out = vec![C::new(0.0, 0.0); js.len()];
        let mut at_t = C::new(0.0, 0.0);
        let after = LineProblem::qhat(xi, 0.0);
        solve_line_with(self.model, &self.grid, problem, self.dt, &times, |idx, _, values| {
            if idx == n_early {
                at_t = values.iter().zip(w).map(|(q, w)| q * w).sum();
            } else if !coefs.is_empty() {
                let (a, b) = coefs[idx];
                out[idx] = values.iter().zip(w).zip(x).map(|((q, w), &x)| q * w * (a + b * x).exp()).sum();
            } else {
                let end = continue_line(self.model, &self.grid, &after, self.dt, values, t - times[idx])?;
                out[idx] = end.iter().zip(w).map(|(q, w)| q * w).sum();
            }
            Ok(())
        })?;
        for (k, &j) in js.iter().enumerate().skip(n_early) {
            out[k] = at_t * late(j);
        }
        Ok(out)
    }
}

/// Quadrature over subordinated time `j`: graded panels on `(0, t)` and
/// uniform panels on `[t, j_max]`. Nodes are ascending.
#[derive(Debug, Clone)]
pub(crate) struct JRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub j_max: f64,
}

impl JRule {
    pub fn new(t: f64, j_max: f64, num: &TransformNumerics) -> Self {
        let mut breaks = vec![0.0];
        for k in (1..=num.j_grading).rev() {
            breaks.push(t / 2f64.powi(k as i32));
        }
        breaks.push(t);
        let mut rule = Rule::on_breaks(&breaks, num.j_order);
        if j_max > t {
            let n = ((j_max - t) / num.j_panel).ceil().max(1.0) as usize;
            rule.extend(Rule::panels(t, j_max, n, num.j_order));
        }
        Self { nodes: rule.nodes, weights: rule.weights, j_max: j_max.max(t) }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }
}

/// Upper end of the j-range: beyond it `e^{growth·j} f_{J_y}(j)` is
/// negligible for every `y` in the clock window.
pub(crate) fn j_cutoff(spec: &SubordinatorSpec, y_window: f64, growth: f64) -> f64 {
    if spec.is_atom() {
        y_window
    } else {
        spec.upper_cutoff(y_window, growth.max(0.0), 1e-14)
    }
}

/// `y ↦ f_{J_y}(j)` (or `P(J_y < j)`) tabulated with quadrature weights on
/// `[0, y_window]` for every j node, stored sparsely.
pub(crate) struct Profile {
    atom: bool,
    y_window: f64,
    y: Vec<f64>,
    rows: Vec<(usize, Vec<f64>)>,
    js: Vec<f64>,
}

#[derive(Clone, Copy, PartialEq)]
pub(crate) enum ProfileKind {
    Density,
    Distribution,
}

impl Profile {
    pub fn new(spec: &SubordinatorSpec, y_window: f64, js: &[f64], xi_cap: f64, kind: ProfileKind) -> Self {
        if spec.is_atom() {
            return Self { atom: true, y_window, y: Vec::new(), rows: Vec::new(), js: js.to_vec() };
        }
        let width = (1.5 / xi_cap.max(1.0)).min(0.05);
        let n = (y_window / width).ceil().max(4.0) as usize;
        let h = y_window / n as f64;
        let mut breaks = vec![0.0, h / 16.0, h / 8.0, h / 4.0, h / 2.0];
        breaks.extend((1..=n).map(|k| k as f64 * h));
        let rule = Rule::on_breaks(&breaks, 8);
        let rows = js
            .iter()
            .map(|&j| {
                let vals: Vec<f64> = rule
                    .nodes
                    .iter()
                    .zip(&rule.weights)
                    .map(|(&y, &w)| {
                        w * match kind {
                            ProfileKind::Density => spec.density_unchecked(y, j),
                            ProfileKind::Distribution => spec.cdf(y, j),
                        }
                    })
                    .collect();
                let peak = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                let cut = 1e-18 * peak;
                let lo = vals.iter().position(|v| v.abs() > cut).unwrap_or(vals.len());
                let hi = vals.iter().rposition(|v| v.abs() > cut).map_or(lo, |i| i + 1);
                (lo, vals[lo..hi].to_vec())
            })
            .collect();
        Self { atom: false, y_window, y: rule.nodes, rows, js: js.to_vec() }
    }

    /// `∫₀^{y_window} e^{iξy} row_j(y) dy` for every j node.
    pub fn fourier(&self, xi: f64) -> Vec<C> {
        if self.atom {
            return self
                .js
                .iter()
                .map(|&j| if j <= self.y_window { C::from_polar(1.0, xi * j) } else { C::new(0.0, 0.0) })
                .collect();
        }
        let phase: Vec<C> = self.y.iter().map(|&y| C::from_polar(1.0, xi * y)).collect();
        self.rows
            .iter()
            .map(|(lo, vals)| vals.iter().zip(&phase[*lo..]).map(|(v, p)| p * *v).sum())
            .collect()
    }

    pub fn is_atom(&self) -> bool {
        self.atom
    }
}

/// Result of a truncated trapezoid sum over ξ.
#[derive(Debug, Clone)]
pub(crate) struct XiSum {
    pub values: Vec<C>,
    pub xi_max: f64,
    pub nodes: usize,
    pub estimated_error: f64,
}

/// `(step/2π) Σ_k term(kΔξ)` over the whole line for a vector of integrands,
/// stopping once a batch of nodes has envelopes below
/// `tol·max(1, max|sum|)`. With `symmetric` the terms at −ξ are the
/// conjugates of those at ξ and only the real part is kept.
pub(crate) fn xi_integral(
    step: f64,
    symmetric: bool,
    tol: f64,
    max_nodes: usize,
    term: impl Fn(f64) -> Result<(Vec<C>, f64)> + Sync,
) -> Result<XiSum> {
    const BATCH: usize = 8;
    let scale = step / (2.0 * PI);
    let (mut sum, _) = term(0.0)?;
    let mut k = 1usize;
    let last_env;
    loop {
        let ks: Vec<i64> = (k..k + BATCH)
            .flat_map(|m| if symmetric { vec![m as i64] } else { vec![m as i64, -(m as i64)] })
            .collect();
        let terms: Vec<(Vec<C>, f64)> = ks.par_iter().map(|&m| term(m as f64 * step)).collect::<Result<_>>()?;
        let mut env = 0.0f64;
        for (values, e) in &terms {
            for (s, v) in sum.iter_mut().zip(values) {
                *s += if symmetric { C::new(2.0 * v.re, 0.0) } else { *v };
            }
            env = env.max(*e);
        }
        k += BATCH;
        let size = sum.iter().fold(0.0f64, |m, v| m.max(v.norm())) * scale;
        if env * scale < tol * size.max(1.0) {
            last_env = env;
            break;
        }
        if k > max_nodes {
            if env * scale > 1e-6 * size.max(1.0) {
                return Err(EngineError::Quadrature(format!(
                    "ξ sum not converged after {max_nodes} nodes: last envelope {:.3e}",
                    env * scale
                )));
            }
            last_env = env;
            break;
        }
    }
    Ok(XiSum {
        values: sum.into_iter().map(|v| v * scale).collect(),
        xi_max: (k - 1) as f64 * step,
        nodes: if symmetric { k } else { 2 * k - 1 },
        estimated_error: last_env * scale * BATCH as f64,
    })
}
