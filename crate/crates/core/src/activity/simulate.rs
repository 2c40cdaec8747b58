//! Euler simulation of `(B, v, T)`.

use super::{ActivityModel, RateDynamics};
use crate::error::{EngineError, Result};
use crate::rng::path_rng;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

/// A uniform step grid covering `[0, horizon]` with steps no larger than `dt`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepGrid {
    pub horizon: f64,
    pub n_steps: usize,
}

impl StepGrid {
    pub fn new(horizon: f64, dt: f64) -> Result<Self> {
        if !(horizon > 0.0) || !(dt > 0.0) {
            return Err(EngineError::Domain(format!("need horizon > 0 and dt > 0, got {horizon}, {dt}")));
        }
        if dt > horizon {
            return Err(EngineError::Domain(format!("dt={dt} exceeds the horizon {horizon}")));
        }
        let n_steps = ((horizon / dt) - 1e-9).ceil().max(1.0) as usize;
        Ok(Self { horizon, n_steps })
    }

    pub fn step(&self) -> f64 {
        self.horizon / self.n_steps as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        self.horizon * (k as f64 / self.n_steps as f64)
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.n_steps).map(|k| self.time(k)).collect()
    }
}

impl ActivityModel {
    /// One full-truncation Euler step of the rate: the raw state may dip
    /// below zero, the coefficients only ever see its positive part.
    #[inline]
    pub(crate) fn euler_step(&self, v: f64, dt: f64, db: f64, extra_drift: f64) -> f64 {
        let vp = v.max(0.0);
        match self.dynamics {
            RateDynamics::Cir { kappa, sigma } => {
                v + (kappa * (1.0 - vp) + extra_drift) * dt + sigma * vp.sqrt() * db
            }
            RateDynamics::LogNormal { kappa, sigma } => {
                v + (kappa * (1.0 - vp) + extra_drift) * dt + sigma * vp * db
            }
            RateDynamics::Deterministic => v,
        }
    }

    /// Runs one clock path over `grid`, feeding every Brownian increment and
    /// the post-step state to `visit(k, b, v⁺, T)` for `k = 0..=n`.
    pub(crate) fn run_path<R: Rng>(
        &self,
        grid: &StepGrid,
        rng: &mut R,
        mut visit: impl FnMut(usize, f64, f64, f64),
    ) {
        let h = grid.step();
        let sqrt_h = h.sqrt();
        let n = grid.n_steps;
        let mut b = 0.0;
        let mut v = self.v0;
        let mut clock = 0.0;
        visit(0, 0.0, v, 0.0);
        let frozen = self.is_frozen();
        let rate = self.deterministic_rate();
        for k in 1..=n {
            let z: f64 = rng.sample(StandardNormal);
            let db = sqrt_h * z;
            if frozen {
                clock = rate * grid.time(k);
            } else {
                clock += (v.max(0.0) + self.eps) * h;
                v = self.euler_step(v, h, db, 0.0);
            }
            b += db;
            visit(k, b, v.max(0.0), clock);
        }
    }

    /// The rate never moves, so the clock is exactly linear.
    pub(crate) fn is_frozen(&self) -> bool {
        match self.dynamics {
            RateDynamics::Deterministic => true,
            RateDynamics::Cir { sigma, .. } | RateDynamics::LogNormal { sigma, .. } => {
                sigma == 0.0 && self.v0 == 1.0
            }
        }
    }
}

/// Full `(B, v, T)` trajectory on the step grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecordedPath {
    pub brownian: Vec<f64>,
    pub rate: Vec<f64>,
    pub clock: Vec<f64>,
}

/// Result of a clock simulation: terminal values for every path and the
/// full trajectories of the first few.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClockPaths {
    pub grid: StepGrid,
    pub seed: u64,
    pub n_paths: usize,
    pub recorded: Vec<RecordedPath>,
    pub terminal_brownian: Vec<f64>,
    pub terminal_rate: Vec<f64>,
    pub terminal_clock: Vec<f64>,
}

impl ClockPaths {
    pub fn times(&self) -> Vec<f64> {
        self.grid.times()
    }
}

pub struct ClockSimulator<'a> {
    model: &'a ActivityModel,
    grid: StepGrid,
    seed: u64,
    record: usize,
}

impl<'a> ClockSimulator<'a> {
    pub fn new(model: &'a ActivityModel, horizon: f64, dt: f64, seed: u64) -> Result<Self> {
        model.validate()?;
        Ok(Self { model, grid: StepGrid::new(horizon, dt)?, seed, record: 4 })
    }

    /// Number of leading paths whose full trajectories are kept.
    pub fn record(mut self, n: usize) -> Self {
        self.record = n;
        self
    }

    pub fn run(&self, n_paths: usize) -> Result<ClockPaths> {
        if n_paths == 0 {
            return Err(EngineError::Domain("need at least one path".into()));
        }
        let grid = self.grid;
        let model = self.model;
        let record = self.record;
        let seed = self.seed;
        let per_path: Vec<(f64, f64, f64, Option<RecordedPath>)> = (0..n_paths)
            .into_par_iter()
            .map(|p| {
                let mut rng = path_rng(seed, p as u64);
                let keep = p < record;
                let mut rec = keep.then(|| RecordedPath {
                    brownian: Vec::with_capacity(grid.n_steps + 1),
                    rate: Vec::with_capacity(grid.n_steps + 1),
                    clock: Vec::with_capacity(grid.n_steps + 1),
                });
                let mut last = (0.0, 0.0, 0.0);
                model.run_path(&grid, &mut rng, |_, b, v, t| {
                    if let Some(r) = rec.as_mut() {
                        r.brownian.push(b);
                        r.rate.push(v);
                        r.clock.push(t);
                    }
                    last = (b, v, t);
                });
                (last.0, last.1, last.2, rec)
            })
            .collect();
        let mut out = ClockPaths {
            grid,
            seed,
            n_paths,
            recorded: Vec::new(),
            terminal_brownian: Vec::with_capacity(n_paths),
            terminal_rate: Vec::with_capacity(n_paths),
            terminal_clock: Vec::with_capacity(n_paths),
        };
        for (b, v, t, rec) in per_path {
            out.terminal_brownian.push(b);
            out.terminal_rate.push(v);
            out.terminal_clock.push(t);
            if let Some(r) = rec {
                out.recorded.push(r);
            }
        }
        Ok(out)
    }
}

/// Simulates `n_paths` clock paths, keeping the full trajectories of the first four.
pub fn simulate_clock(model: &ActivityModel, horizon: f64, dt: f64, n_paths: usize, seed: u64) -> Result<ClockPaths> {
    ClockSimulator::new(model, horizon, dt, seed)?.run(n_paths)
}

/// Exact lognormal rate along a Brownian path sampled every `dt`:
/// `v_t = e^{−κt−σ²t/2+σB_t}(v0 + κ∫₀ᵗ e^{κs+σ²s/2−σB_s}ds)`, with `B` taken
/// piecewise linear between nodes so that the inner integral is exact per step.
pub fn closed_form_lognormal_path(brownian: &[f64], dt: f64, kappa: f64, sigma: f64, v0: f64) -> Vec<f64> {
    let a = kappa + 0.5 * sigma * sigma;
    let mut out = Vec::with_capacity(brownian.len());
    let mut integral = 0.0;
    for (k, &b) in brownian.iter().enumerate() {
        let t = k as f64 * dt;
        if k > 0 {
            let t0 = (k - 1) as f64 * dt;
            let b0 = brownian[k - 1];
            // exponent a·s − σB_s is linear on the step
            let e0 = a * t0 - sigma * b0;
            let slope = a - sigma * (b - b0) / dt;
            let x = slope * dt;
            let factor = if x.abs() < 1e-8 { dt * (1.0 + 0.5 * x) } else { x.exp_m1() / slope };
            integral += e0.exp() * factor;
        }
        out.push((-a * t + sigma * b).exp() * (v0 + kappa * integral));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_clock_is_exact() {
        let m = ActivityModel::deterministic();
        let paths = simulate_clock(&m, 1.0, 0.003, 16, 9).unwrap();
        for (&t, &v) in paths.terminal_clock.iter().zip(&paths.terminal_rate) {
            assert_eq!(t, 1.0);
            assert_eq!(v, 1.0);
        }
    }

    #[test]
    fn dt_larger_than_horizon_is_rejected() {
        let m = ActivityModel::cir(1.0, 0.5);
        assert!(matches!(simulate_clock(&m, 0.1, 0.2, 1, 0), Err(EngineError::Domain(_))));
    }

    #[test]
    fn paths_are_nonnegative_and_clock_nondecreasing() {
        let m = ActivityModel::cir(0.5, 1.5);
        let paths = ClockSimulator::new(&m, 1.0, 1e-2, 1).unwrap().record(20).run(20).unwrap();
        for p in &paths.recorded {
            assert!(p.rate.iter().all(|&v| v >= 0.0));
            assert!(p.clock.windows(2).all(|w| w[1] >= w[0]));
        }
    }

    #[test]
    fn lognormal_closed_form_degenerate_cases() {
        let zero = vec![0.0; 101];
        let v = closed_form_lognormal_path(&zero, 0.01, 1.0, 0.0, 1.0);
        assert!(v.iter().all(|x| (x - 1.0).abs() < 1e-12));
    }

    #[test]
    fn reproducible_regardless_of_thread_count() {
        let m = ActivityModel::cir(1.0, 0.5);
        let a = simulate_clock(&m, 1.0, 0.01, 64, 5).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let b = pool.install(|| simulate_clock(&m, 1.0, 0.01, 64, 5).unwrap());
        assert_eq!(a, b);
    }
}
