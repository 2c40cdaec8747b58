//! Joint density `q(t, x, y, z)` of rate, clock and clock driver:
//! `∂_t q = ½∂_xx[σ²q] + ∂_xz[σq] + ½∂_zz q − ∂_x[μq] − (x+ε)∂_y q`.
//!
//! Douglas ADI: the mixed derivative is explicit, the rate, Brownian and
//! clock directions are each corrected implicitly. Meant for small grids and
//! cross-checks of the Fourier-reduced solver.

use super::field::PDEField;
use super::grid::SpatialGrid;
use super::line::{hat, time_levels, RateOperator};
use crate::activity::ActivityModel;
use crate::error::{EngineError, Result};
use num_complex::Complex64;

const THETA: f64 = 2.0 / 3.0;
/// Steps run fully implicit before switching to `THETA`, to damp the delta.
const DAMPING_STEPS: usize = 4;

/// A solved cube together with the grid it lives on.
#[derive(Debug, Clone)]
pub struct CubeField {
    pub grid: SpatialGrid,
    pub field: PDEField,
}

impl CubeField {
    fn dims(&self) -> (usize, usize, usize) {
        (self.field.shape[0], self.field.shape[1], self.field.shape[2])
    }

    /// `Σ q e^{−iξy − iηz}` over the grid: the discrete counterpart of `∫q̂ dx`.
    pub fn fourier(&self, xi: f64, eta: f64) -> Complex64 {
        let (nx, ny, nz) = self.dims();
        let (xa, ya, za) = (&self.grid.x, self.grid.y.as_ref().unwrap(), self.grid.z.as_ref().unwrap());
        let mut total = Complex64::new(0.0, 0.0);
        for l in 0..nz {
            for k in 0..ny {
                let phase = Complex64::from_polar(ya.weights[k] * za.weights[l], -xi * ya.nodes[k] - eta * za.nodes[l]);
                let mut s = 0.0;
                for i in 0..nx {
                    s += self.field.values[i + nx * (k + ny * l)].re * xa.weights[i];
                }
                total += phase * s;
            }
        }
        total
    }

    /// Density of the Brownian coordinate at the grid's z nodes.
    pub fn z_marginal(&self) -> Vec<f64> {
        let (nx, ny, nz) = self.dims();
        let (xa, ya) = (&self.grid.x, self.grid.y.as_ref().unwrap());
        (0..nz)
            .map(|l| {
                let mut s = 0.0;
                for k in 0..ny {
                    for i in 0..nx {
                        s += self.field.values[i + nx * (k + ny * l)].re * xa.weights[i] * ya.weights[k];
                    }
                }
                s
            })
            .collect()
    }
}

/// Real tridiagonal system `(I − a·L)`.
struct RealTridiag {
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
}

impl RealTridiag {
    fn apply(&self, q: &[f64], out: &mut [f64]) {
        let n = self.diag.len();
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

    fn solve_shifted(&self, a: f64, rhs: &mut [f64], c: &mut [f64]) {
        let n = self.diag.len();
        let mut beta = 1.0 - a * self.diag[0];
        rhs[0] /= beta;
        for i in 1..n {
            c[i] = -a * self.upper[i - 1] / beta;
            beta = 1.0 - a * self.diag[i] + a * self.lower[i] * c[i];
            rhs[i] = (rhs[i] + a * self.lower[i] * rhs[i - 1]) / beta;
        }
        for i in (0..n - 1).rev() {
            rhs[i] -= c[i + 1] * rhs[i + 1];
        }
    }
}

/// Solves for `q` at time `t`. The grid needs all three axes: a uniform rate
/// axis, a cell-centred clock axis starting at 0 and a uniform Brownian axis
/// with a node at 0.
pub fn solve_q3d(model: &ActivityModel, t: f64, grid: &SpatialGrid, dt: f64) -> Result<CubeField> {
    model.validate()?;
    let ya = grid.y.as_ref().ok_or_else(|| EngineError::Config("solve_q3d needs a clock axis".into()))?;
    let za = grid.z.as_ref().ok_or_else(|| EngineError::Config("solve_q3d needs a Brownian axis".into()))?;
    let (nx, ny, nz) = (grid.n_x(), ya.len(), za.len());
    if nx * ny * nz > 64 * 64 * 64 {
        return Err(EngineError::Config("solve_q3d is limited to 64³ nodes".into()));
    }
    if ya.lo() != 0.0 {
        return Err(EngineError::Config("clock axis must start at y = 0".into()));
    }
    let l0 = za.nodes.iter().position(|&z| z.abs() < 1e-12).ok_or_else(|| EngineError::Config("Brownian axis needs a node at 0".into()))?;
    let dx = grid.x.nodes[1] - grid.x.nodes[0];
    if grid.x.nodes.windows(2).any(|w| ((w[1] - w[0]) - dx).abs() > 1e-9 * dx) {
        return Err(EngineError::Config("solve_q3d needs a uniform rate axis".into()));
    }
    let dy = ya.weights[0];
    let dz = za.nodes[1] - za.nodes[0];

    let sigma: Vec<f64> = grid.x.nodes.iter().map(|&x| model.diffusion(x)).collect();
    let sigma_max = sigma.iter().copied().fold(0.0, f64::max);
    if dt * sigma_max / (dx * dz) > 2.0 {
        return Err(EngineError::Stability(format!(
            "explicit mixed term: dt·σ/(dx·dz) = {:.3} exceeds 2",
            dt * sigma_max / (dx * dz)
        )));
    }

    let zero = Complex64::new(0.0, 0.0);
    let op = RateOperator::new(model, &grid.x, zero, |_| zero);
    let rate = RealTridiag {
        lower: op.lower.iter().map(|c| c.re).collect(),
        diag: op.diag.iter().map(|c| c.re).collect(),
        upper: op.upper.iter().map(|c| c.re).collect(),
    };
    let n = nx - 1;
    // ½∂_zz with zero flux at both ends
    let dz2 = 0.5 / (dz * dz);
    let brown = RealTridiag {
        lower: (0..nz).map(|l| if l > 0 { dz2 } else { 0.0 }).collect(),
        diag: (0..nz).map(|l| -dz2 * ((l > 0) as u8 as f64 + (l + 1 < nz) as u8 as f64)).collect(),
        upper: (0..nz).map(|l| if l + 1 < nz { dz2 } else { 0.0 }).collect(),
    };
    let speed: Vec<f64> = grid.x.nodes.iter().map(|&x| (x + model.eps) / dy).collect();
    let idx = |i: usize, k: usize, l: usize| i + nx * (k + ny * l);
    let size = nx * ny * nz;

    let mut u = vec![0.0; size];
    let h = hat(&grid.x, model.v0);
    for i in 0..nx {
        u[idx(i, 0, l0)] = h[i].re / (dy * dz);
    }

    let levels = time_levels(&[t], dt);
    let mut a_rate = vec![0.0; size];
    let mut a_brown = vec![0.0; size];
    let mut a_clock = vec![0.0; size];
    let mut a_mixed = vec![0.0; size];
    let mut y = vec![0.0; size];
    let mut line = vec![0.0; nx.max(ny).max(nz)];
    let mut work = vec![0.0; nx.max(ny).max(nz)];
    let mut scratch = vec![0.0; nx.max(ny).max(nz)];

    for (step, pair) in levels.windows(2).enumerate() {
        let tau = pair[1] - pair[0];
        let theta = if step < DAMPING_STEPS { 1.0 } else { THETA };
        // explicit operator pieces at the current state
        for l in 0..nz {
            for k in 0..ny {
                let base = idx(0, k, l);
                rate.apply(&u[base..base + n], &mut work[..n]);
                a_rate[base..base + n].copy_from_slice(&work[..n]);
                a_rate[base + n] = 0.0;
            }
        }
        for k in 0..ny {
            for i in 0..nx {
                for l in 0..nz {
                    line[l] = u[idx(i, k, l)];
                }
                brown.apply(&line[..nz], &mut work[..nz]);
                for l in 0..nz {
                    a_brown[idx(i, k, l)] = work[l];
                }
            }
        }
        for l in 0..nz {
            for i in 0..nx {
                let s = speed[i];
                for k in 0..ny {
                    let f = |kk: usize| -> f64 {
                        let a = u[idx(i, kk, l)];
                        let b = if kk > 0 { u[idx(i, kk - 1, l)] } else { 0.0 };
                        0.5 * (3.0 * a - b)
                    };
                    let inflow = if k > 0 { f(k - 1) } else { 0.0 };
                    a_clock[idx(i, k, l)] = -s * (f(k) - inflow);
                }
            }
        }
        // ∂_x[∂_z(σq)] with face fluxes averaged from the two adjacent rate nodes
        for l in 0..nz {
            for k in 0..ny {
                let dzs = |i: usize| -> f64 {
                    let up = if l + 1 < nz { sigma[i] * u[idx(i, k, l + 1)] } else { 0.0 };
                    let dn = if l > 0 { sigma[i] * u[idx(i, k, l - 1)] } else { 0.0 };
                    (up - dn) / (2.0 * dz)
                };
                let mut left_flux = 0.0;
                for i in 0..n {
                    let right_flux = 0.5 * (dzs(i) + dzs(i + 1));
                    a_mixed[idx(i, k, l)] = (right_flux - left_flux) / grid.x.weights[i];
                    left_flux = right_flux;
                }
                a_mixed[idx(n, k, l)] = 0.0;
            }
        }
        for p in 0..size {
            y[p] = u[p] + tau * (a_mixed[p] + a_rate[p] + a_brown[p] + a_clock[p]);
        }
        // rate correction
        for l in 0..nz {
            for k in 0..ny {
                let base = idx(0, k, l);
                for i in 0..n {
                    line[i] = y[base + i] - theta * tau * a_rate[base + i];
                }
                rate.solve_shifted(theta * tau, &mut line[..n], &mut scratch);
                y[base..base + n].copy_from_slice(&line[..n]);
                y[base + n] = 0.0;
            }
        }
        // Brownian correction
        for k in 0..ny {
            for i in 0..nx {
                for l in 0..nz {
                    let p = idx(i, k, l);
                    line[l] = y[p] - theta * tau * a_brown[p];
                }
                brown.solve_shifted(theta * tau, &mut line[..nz], &mut scratch);
                for l in 0..nz {
                    y[idx(i, k, l)] = line[l];
                }
            }
        }
        // clock correction: lower-triangular forward substitution
        for l in 0..nz {
            for i in 0..n {
                let c = theta * tau * speed[i];
                let mut n1 = 0.0;
                let mut n2 = 0.0;
                for k in 0..ny {
                    let p = idx(i, k, l);
                    let rhs = y[p] - theta * tau * a_clock[p];
                    let known = -2.0 * n1 + 0.5 * n2;
                    let v = (rhs - c * known) / (1.0 + 1.5 * c);
                    y[p] = v;
                    n2 = n1;
                    n1 = v;
                }
            }
        }
        std::mem::swap(&mut u, &mut y);
        if u.iter().any(|v| !v.is_finite()) {
            return Err(EngineError::Numerics(format!("non-finite q at t={}", pair[1])));
        }
    }

    let mut mass = 0.0;
    for l in 0..nz {
        for k in 0..ny {
            for i in 0..nx {
                mass += u[idx(i, k, l)] * grid.x.weights[i] * ya.weights[k] * za.weights[l];
            }
        }
    }
    if (mass - 1.0).abs() > 5e-3 {
        return Err(EngineError::Conservation(format!("3-D mass {mass} at t={t}")));
    }
    let field = PDEField {
        shape: [nx, ny, nz],
        values: u.into_iter().map(|v| Complex64::new(v, 0.0)).collect(),
        time: t,
        fourier_node: None,
        mass: Complex64::new(mass, 0.0),
    };
    Ok(CubeField { grid: grid.clone(), field })
}
