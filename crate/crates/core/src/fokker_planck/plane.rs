//! Joint density `G(t, x, y)` of the tilted rate and its clock:
//! `∂_t G = ∂_x[½∂_x(σ²G) − (μ − rρσ·1_{t≤j})G] − (x+ε)∂_y G`.
//!
//! Strang splitting: half a rate step (Crank–Nicolson), a full clock
//! transport step, half a rate step. The clock axis is cell-centred with the
//! first centre at `y = 0`; transport uses the conservative second-order
//! upwind flux `(3G_k − G_{k−1})/2`, which keeps the discrete first moment in
//! `y` exact.

use super::field::PDEField;
use super::grid::SpatialGrid;
use super::line::{hat, time_levels, RateOperator};
use crate::activity::ActivityModel;
use crate::error::{EngineError, Result};
use num_complex::Complex64;

type C = Complex64;

pub type PlaneField = PDEField;

/// `G` at time `t` on the grid's (x, y) axes.
pub fn solve_g(model: &ActivityModel, r: f64, rho: f64, j: f64, t: f64, grid: &SpatialGrid, dt: f64) -> Result<PDEField> {
    Ok(solve_g_snapshots(model, r, rho, j, grid, dt, &[t])?.remove(0))
}

pub fn solve_g_snapshots(
    model: &ActivityModel,
    r: f64,
    rho: f64,
    j: f64,
    grid: &SpatialGrid,
    dt: f64,
    times: &[f64],
) -> Result<Vec<PDEField>> {
    model.validate()?;
    if !(j >= 0.0) {
        return Err(EngineError::Domain(format!("switch time must be nonnegative, got {j}")));
    }
    let y_axis = grid.y.as_ref().ok_or_else(|| EngineError::Config("solve_g needs a clock axis".into()))?;
    if y_axis.lo() != 0.0 {
        return Err(EngineError::Config("clock axis must start at y = 0".into()));
    }
    let nx = grid.n_x();
    let ny = y_axis.len();
    let dy = y_axis.weights[0];
    let n = nx - 1;
    let zero = C::new(0.0, 0.0);
    let tilted = RateOperator::new(model, &grid.x, C::new(-r * rho, 0.0), |_| zero);
    let plain = RateOperator::new(model, &grid.x, zero, |_| zero);
    let t_max = times.iter().copied().fold(0.0, f64::max);
    let mut stops = times.to_vec();
    if j > 0.0 && j < t_max {
        stops.push(j);
    }
    let levels = time_levels(&stops, dt);

    let mut q = vec![zero; nx * ny];
    let line0 = hat(&grid.x, model.v0);
    for i in 0..nx {
        q[i] = line0[i] / dy;
    }
    let speed: Vec<f64> = grid.x.nodes.iter().map(|&x| x + model.eps).collect();

    let mut out: Vec<Option<PDEField>> = vec![None; times.len()];
    let mut row = vec![zero; n];
    let mut work = vec![zero; n];
    let mut scratch = vec![zero; n];
    let mut col = vec![zero; ny];
    let mut next = vec![zero; ny];

    let snapshot = |q: &[C], t: f64, out: &mut Vec<Option<PDEField>>| {
        for (idx, &want) in times.iter().enumerate() {
            if (want - t).abs() < 1e-12 && out[idx].is_none() {
                let mut mass = zero;
                for k in 0..ny {
                    for i in 0..nx {
                        mass += q[i + nx * k] * grid.x.weights[i] * y_axis.weights[k];
                    }
                }
                out[idx] = Some(PDEField { shape: [nx, ny, 1], values: q.to_vec(), time: t, fourier_node: None, mass });
            }
        }
    };
    snapshot(&q, 0.0, &mut out);

    for (step, pair) in levels.windows(2).enumerate() {
        let tau = pair[1] - pair[0];
        let first = step == 0;
        let op = if pair[1] <= j + 1e-12 { &tilted } else { &plain };
        let mut rate_half = |q: &mut [C]| -> Result<()> {
            for k in 0..ny {
                let base = nx * k;
                row.copy_from_slice(&q[base..base + n]);
                if row.iter().all(|v| *v == zero) {
                    continue;
                }
                if first {
                    op.solve_shifted(0.5 * tau, &mut row, &mut scratch)?;
                } else {
                    op.apply(&row, &mut work);
                    for i in 0..n {
                        row[i] += 0.25 * tau * work[i];
                    }
                    op.solve_shifted(0.25 * tau, &mut row, &mut scratch)?;
                }
                q[base..base + n].copy_from_slice(&row);
            }
            Ok(())
        };
        rate_half(&mut q)?;
        // clock transport, column by column; θ = 1 on the first step, ½ after
        let theta = if first { 1.0 } else { 0.5 };
        for i in 0..n {
            let c = speed[i] * tau / dy;
            for k in 0..ny {
                col[k] = q[i + nx * k];
            }
            let flux = |v: &[C], k: usize| -> C {
                let a = v[k];
                let b = if k > 0 { v[k - 1] } else { zero };
                0.5 * (3.0 * a - b)
            };
            for k in 0..ny {
                let explicit = if theta < 1.0 {
                    let inflow = if k > 0 { flux(&col, k - 1) } else { zero };
                    col[k] - (1.0 - theta) * c * (flux(&col, k) - inflow)
                } else {
                    col[k]
                };
                // implicit part: θc[(3n_k − n_{k−1})/2 − (3n_{k−1} − n_{k−2})/2]
                let nk1 = if k > 0 { next[k - 1] } else { zero };
                let nk2 = if k > 1 { next[k - 2] } else { zero };
                let known = 0.5 * (-nk1) - 0.5 * (3.0 * nk1 - nk2);
                next[k] = (explicit - theta * c * known) / (1.0 + theta * c * 1.5);
            }
            for k in 0..ny {
                q[i + nx * k] = next[k];
            }
        }
        rate_half(&mut q)?;
        if q.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(EngineError::Numerics(format!("non-finite G at t={}", pair[1])));
        }
        snapshot(&q, pair[1], &mut out);
    }
    let fields: Vec<PDEField> = out.into_iter().map(|f| f.expect("snapshot taken")).collect();
    for f in &fields {
        if (f.mass.re - 1.0).abs() > 1e-3 {
            return Err(EngineError::Conservation(format!("G mass {} at t={}", f.mass.re, f.time)));
        }
    }
    Ok(fields)
}
