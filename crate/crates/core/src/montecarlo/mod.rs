//! Brute-force simulation of `(B, v, T, J, W, Y)` and of the two-factor
//! returns, used as an oracle for the transform pipelines.
//!
//! Every path draws from its own ChaCha stream keyed by `(seed, path)`, and
//! outputs are collected in path order, so samples do not depend on how
//! rayon schedules the work.
#![allow(non_snake_case)]

mod compare;
mod empirical;

pub use compare::{compare, ComparisonReport, MomentGap};
pub use empirical::{
    anderson_darling_normal, ks_critical_value, pairwise_sum, two_sample_ks, EmpiricalDistribution, Histogram,
    AD_CRITICAL_5PCT,
};

use crate::activity::{ActivityModel, RecordedPath, StepGrid};
use crate::error::{EngineError, Result};
use crate::levy::{LevyComposition, SubordinatorSpec};
use crate::model_zoo::TwoFactorModel;
use crate::rng::{aux_rng, path_rng};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;
use std::path::Path;

/// Smallest sample the oracle accepts.
pub const MIN_PATHS: usize = 1000;

/// Trajectories kept in full for plotting.
const RECORDED: usize = 4;

fn check_run(t: f64, n_paths: usize, dt: f64) -> Result<StepGrid> {
    if n_paths < MIN_PATHS {
        return Err(EngineError::Config(format!("need at least {MIN_PATHS} paths, got {n_paths}")));
    }
    if !(t > 0.0) {
        return Err(EngineError::Config(format!("horizon must be positive, got {t}")));
    }
    StepGrid::new(t, dt).map_err(|e| EngineError::Config(e.to_string()))
}

fn normal<R: Rng>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// `B_s` given `B` on the uniform grid with step `h` over `[0, t]`: a
/// Brownian bridge inside the grid, a free increment beyond it.
fn brownian_at<R: Rng>(path: &[f64], h: f64, s: f64, rng: &mut R) -> f64 {
    let n = path.len() - 1;
    let t = n as f64 * h;
    if s >= t {
        return path[n] + (s - t).sqrt() * normal(rng);
    }
    let k = ((s / h) as usize).min(n - 1);
    let (a, b) = (k as f64 * h, (k + 1) as f64 * h);
    let w = (s - a) / h;
    let mean = (1.0 - w) * path[k] + w * path[k + 1];
    let var = ((s - a) * (b - s) / h).max(0.0);
    mean + var.sqrt() * normal(rng)
}

/// Terminal samples of one-factor paths plus a few full trajectories.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathBundle {
    pub grid: StepGrid,
    pub seed: u64,
    pub n_paths: usize,
    pub levy: LevyComposition,
    /// `T_t`.
    pub clock: Vec<f64>,
    /// `B_t`.
    pub brownian: Vec<f64>,
    /// `J_{T_t}`.
    pub subordinated: Vec<f64>,
    /// `B_{J_{T_t}}`, the same `B` that drives the rate.
    pub brownian_at_j: Vec<f64>,
    /// `W_{J_{T_t}}`.
    pub w: Vec<f64>,
    /// `Z_{J_{T_t}} = ρB_{J} + √(1−ρ²)W_{J}`.
    pub z: Vec<f64>,
    pub y: Vec<f64>,
    pub recorded: Vec<RecordedPath>,
}

struct OnePath {
    clock: f64,
    b_t: f64,
    j: f64,
    b_j: f64,
    w: f64,
    rec: Option<RecordedPath>,
}

/// Simulates `n_paths` one-factor paths to `t`.
pub fn simulate_paths(
    model: &ActivityModel,
    levy: &LevyComposition,
    spec: &SubordinatorSpec,
    t: f64,
    n_paths: usize,
    dt: f64,
    seed: u64,
) -> Result<PathBundle> {
    model.validate()?;
    levy.validate()?;
    spec.validate()?;
    let grid = check_run(t, n_paths, dt)?;
    let h = grid.step();
    let paths: Vec<OnePath> = (0..n_paths)
        .into_par_iter()
        .map_init(
            || vec![0.0; grid.n_steps + 1],
            |b, p| {
                let mut rng = path_rng(seed, p as u64);
                let mut rec = (p < RECORDED).then(|| RecordedPath {
                    brownian: Vec::with_capacity(grid.n_steps + 1),
                    rate: Vec::with_capacity(grid.n_steps + 1),
                    clock: Vec::with_capacity(grid.n_steps + 1),
                });
                let mut clock = 0.0;
                model.run_path(&grid, &mut rng, |k, bk, v, tk| {
                    b[k] = bk;
                    clock = tk;
                    if let Some(r) = rec.as_mut() {
                        r.brownian.push(bk);
                        r.rate.push(v);
                        r.clock.push(tk);
                    }
                });
                // J is independent of B, so one exact draw over [0, T_t] has the law of the per-step sum
                let j = spec.sample_increment(&mut rng, clock);
                let b_j = brownian_at(b, h, j, &mut rng);
                let w = j.sqrt() * normal(&mut rng);
                OnePath { clock, b_t: b[grid.n_steps], j, b_j, w, rec }
            },
        )
        .collect();
    let rho_bar = levy.orthogonal_weight();
    let mut out = PathBundle {
        grid,
        seed,
        n_paths,
        levy: *levy,
        clock: Vec::with_capacity(n_paths),
        brownian: Vec::with_capacity(n_paths),
        subordinated: Vec::with_capacity(n_paths),
        brownian_at_j: Vec::with_capacity(n_paths),
        w: Vec::with_capacity(n_paths),
        z: Vec::with_capacity(n_paths),
        y: Vec::with_capacity(n_paths),
        recorded: Vec::new(),
    };
    for p in paths {
        let z = levy.rho * p.b_j + rho_bar * p.w;
        out.clock.push(p.clock);
        out.brownian.push(p.b_t);
        out.subordinated.push(p.j);
        out.brownian_at_j.push(p.b_j);
        out.w.push(p.w);
        out.z.push(z);
        out.y.push(levy.alpha * p.j + levy.beta * z);
        if let Some(r) = p.rec {
            out.recorded.push(r);
        }
    }
    Ok(out)
}

/// Empirical law of `Y_t`.
pub fn simulate_Y(
    model: &ActivityModel,
    levy: &LevyComposition,
    spec: &SubordinatorSpec,
    t: f64,
    n_paths: usize,
    dt: f64,
    seed: u64,
) -> Result<EmpiricalDistribution> {
    EmpiricalDistribution::new(simulate_paths(model, levy, spec, t, n_paths, dt, seed)?.y)
}

impl PathBundle {
    pub fn distribution(&self) -> Result<EmpiricalDistribution> {
        EmpiricalDistribution::new(self.y.clone())
    }

    /// Loading of `Z_J` on `B_J`, both increments over `[0, J_{T_t}]`:
    /// the regression slope `cov(Z_J, B_J)/var(B_J)` targets `ρ`. The plain
    /// correlation does not, because `J` depends on `B` through the clock
    /// and `var B_J ≠ E J`.
    pub fn correlation_audit(&self) -> Audit {
        let (z, b) = (&self.z, &self.brownian_at_j);
        let n = z.len() as f64;
        let mz = pairwise_sum(z) / n;
        let mb = pairwise_sum(b) / n;
        let sxy: Vec<f64> = z.iter().zip(b).map(|(x, y)| (x - mz) * (y - mb)).collect();
        let syy: Vec<f64> = b.iter().map(|y| (y - mb) * (y - mb)).collect();
        let (sxy, syy) = (pairwise_sum(&sxy), pairwise_sum(&syy));
        let slope = sxy / syy;
        let resid: Vec<f64> = z.iter().zip(b).map(|(x, y)| (x - mz - slope * (y - mb)).powi(2)).collect();
        let stderr = (pairwise_sum(&resid) / (n - 2.0) / syy).sqrt();
        Audit { estimate: slope, target: self.levy.rho, stderr, samples: z.len() }
    }

    /// Writes one little-endian f64 file per column and `manifest.json`.
    pub fn write_dump(&self, dir: &Path) -> Result<()> {
        let columns: [(&str, &[f64]); 7] = [
            ("clock", &self.clock),
            ("brownian", &self.brownian),
            ("subordinated", &self.subordinated),
            ("brownian_at_j", &self.brownian_at_j),
            ("w", &self.w),
            ("z", &self.z),
            ("y", &self.y),
        ];
        write_columns(dir, &columns, self.seed, self.n_paths, &self.grid)
    }
}

#[derive(Serialize)]
struct ManifestColumn<'a> {
    name: &'a str,
    file: String,
    len: usize,
    dtype: &'static str,
}

#[derive(Serialize)]
struct Manifest<'a> {
    seed: u64,
    n_paths: usize,
    grid: StepGrid,
    stream: &'static str,
    columns: Vec<ManifestColumn<'a>>,
}

fn write_columns(dir: &Path, columns: &[(&str, &[f64])], seed: u64, n_paths: usize, grid: &StepGrid) -> Result<()> {
    let io = |e: std::io::Error| EngineError::Config(format!("cannot write sample dump to {}: {e}", dir.display()));
    std::fs::create_dir_all(dir).map_err(io)?;
    let mut manifest = Manifest { seed, n_paths, grid: *grid, stream: "chacha8 keyed by (seed, path)", columns: Vec::new() };
    for (name, data) in columns {
        let file = format!("{name}.f64");
        let bytes: Vec<u8> = data.iter().flat_map(|v| v.to_le_bytes()).collect();
        std::fs::write(dir.join(&file), bytes).map_err(io)?;
        manifest.columns.push(ManifestColumn { name, file, len: data.len(), dtype: "f64-le" });
    }
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serialises");
    std::fs::write(dir.join("manifest.json"), json).map_err(io)
}

/// Reads one column written by a sample dump.
pub fn read_dump_column(path: &Path) -> Result<Vec<f64>> {
    let bytes = std::fs::read(path).map_err(|e| EngineError::Config(format!("cannot read {}: {e}", path.display())))?;
    if bytes.len() % 8 != 0 {
        return Err(EngineError::Config(format!("{} is not a whole number of f64 values", path.display())));
    }
    Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect())
}

/// A sample statistic, its target and its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Audit {
    pub estimate: f64,
    pub target: f64,
    pub stderr: f64,
    pub samples: usize,
}

impl Audit {
    fn correlation(a: &[f64], b: &[f64], target: f64) -> Self {
        let n = a.len() as f64;
        let ma = pairwise_sum(a) / n;
        let mb = pairwise_sum(b) / n;
        let cov: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).collect();
        let va: Vec<f64> = a.iter().map(|x| (x - ma) * (x - ma)).collect();
        let vb: Vec<f64> = b.iter().map(|y| (y - mb) * (y - mb)).collect();
        let denom = (pairwise_sum(&va) * pairwise_sum(&vb)).sqrt();
        let estimate = if denom > 0.0 { pairwise_sum(&cov) / denom } else { 0.0 };
        Self { estimate, target, stderr: ((1.0 - target * target) / n.max(2.0)).sqrt(), samples: a.len() }
    }

    /// Within `k` standard errors of the target.
    pub fn within(&self, k: f64) -> bool {
        (self.estimate - self.target).abs() <= k * self.stderr
    }
}

/// Correlation between per-step increments of `J` (over `[T_{k−1}, T_k]`)
/// and of `B` over the same calendar step, pooled over paths and steps.
/// The target is 0.
pub fn independence_audit(
    model: &ActivityModel,
    spec: &SubordinatorSpec,
    t: f64,
    dt: f64,
    n_paths: usize,
    seed: u64,
) -> Result<Audit> {
    model.validate()?;
    spec.validate()?;
    let grid = StepGrid::new(t, dt)?;
    let pairs: Vec<Vec<(f64, f64)>> = (0..n_paths)
        .into_par_iter()
        .map(|p| {
            let mut rng = aux_rng(seed, p as u64);
            let mut jrng = path_rng(seed ^ 0x5ca1_ab1e, p as u64);
            let mut out = Vec::with_capacity(grid.n_steps);
            let (mut prev_b, mut prev_t) = (0.0, 0.0);
            model.run_path(&grid, &mut rng, |k, b, _, clock| {
                if k > 0 {
                    out.push((b - prev_b, spec.sample_increment(&mut jrng, clock - prev_t)));
                }
                prev_b = b;
                prev_t = clock;
            });
            out
        })
        .collect();
    let (db, dj): (Vec<f64>, Vec<f64>) = pairs.into_iter().flatten().unzip();
    Ok(Audit::correlation(&db, &dj, 0.0))
}

/// Terminal samples of the two-factor returns.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwoFactorBundle {
    pub grid: StepGrid,
    pub seed: u64,
    pub n_paths: usize,
    /// `T^c_t`.
    pub clock_c: Vec<f64>,
    /// `T^j_t`.
    pub clock_j: Vec<f64>,
    /// `J_{T^j_t}`.
    pub jump: Vec<f64>,
    /// `X^c_{T^c_t}`.
    pub continuous: Vec<f64>,
    pub y: Vec<f64>,
    pub recorded: Vec<TwoFactorPath>,
}

/// Full trajectories of both drivers, rates and clocks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwoFactorPath {
    pub brownian_c: Vec<f64>,
    pub brownian_j: Vec<f64>,
    pub rate_c: Vec<f64>,
    pub rate_j: Vec<f64>,
    pub clock_c: Vec<f64>,
    pub clock_j: Vec<f64>,
}

struct TwoFactorSample {
    clock_c: f64,
    clock_j: f64,
    jump: f64,
    xc: f64,
    xj: f64,
    rec: Option<TwoFactorPath>,
}

/// Both clocks share `B^j`; the continuous rate is driven by
/// `√(1−ρ²)B^c + ρB^j` and its clock carries the ε floor.
pub fn simulate_two_factor(model: &TwoFactorModel, t: f64, n_paths: usize, dt: f64, seed: u64) -> Result<TwoFactorBundle> {
    model.validate()?;
    let grid = check_run(t, n_paths, dt)?;
    let h = grid.step();
    let sqrt_h = h.sqrt();
    let n = grid.n_steps;
    let (mc, mj) = (&model.continuous_clock, &model.jump_clock);
    let rho = model.rho;
    let rho_bar = (1.0 - rho * rho).max(0.0).sqrt();
    let [a1, a2, a3, a4] = model.a_c;
    let [aj1, aj2] = model.a_j;
    let samples: Vec<TwoFactorSample> = (0..n_paths)
        .into_par_iter()
        .map_init(
            || (vec![0.0; n + 1], vec![0.0; n + 1]),
            |(bc, bj), p| {
                let mut rng = path_rng(seed, p as u64);
                let mut rec = (p < RECORDED).then(|| TwoFactorPath {
                    brownian_c: vec![0.0],
                    brownian_j: vec![0.0],
                    rate_c: vec![mc.v0],
                    rate_j: vec![mj.v0],
                    clock_c: vec![0.0],
                    clock_j: vec![0.0],
                });
                let (mut vc, mut vj) = (mc.v0, mj.v0);
                let (mut tc, mut tj) = (0.0, 0.0);
                for k in 1..=n {
                    let dbc = sqrt_h * normal(&mut rng);
                    let dbj = sqrt_h * normal(&mut rng);
                    bc[k] = bc[k - 1] + dbc;
                    bj[k] = bj[k - 1] + dbj;
                    let time = grid.time(k);
                    if mj.is_frozen() {
                        tj = mj.deterministic_rate() * time;
                    } else {
                        tj += (vj.max(0.0) + mj.eps) * h;
                        vj = mj.euler_step(vj, h, dbj, 0.0);
                    }
                    if model.shared_clock {
                        (tc, vc) = (tj, vj);
                    } else if mc.is_frozen() {
                        tc = mc.deterministic_rate() * time;
                    } else {
                        tc += (vc.max(0.0) + mc.eps) * h;
                        vc = mc.euler_step(vc, h, rho_bar * dbc + rho * dbj, 0.0);
                    }
                    if let Some(r) = rec.as_mut() {
                        r.brownian_c.push(bc[k]);
                        r.brownian_j.push(bj[k]);
                        r.rate_c.push(vc.max(0.0));
                        r.rate_j.push(vj.max(0.0));
                        r.clock_c.push(tc);
                        r.clock_j.push(tj);
                    }
                }
                let bc_at = brownian_at(bc, h, tc, &mut rng);
                let bj_at = brownian_at(bj, h, tc, &mut rng);
                let xc = a1 * tc + a2 * bc_at + a3 * bj_at + a4 * tc.sqrt() * normal(&mut rng);
                let jump = model.spec.sample_increment(&mut rng, tj);
                let xj = aj1 * jump + aj2 * jump.sqrt() * normal(&mut rng);
                TwoFactorSample { clock_c: tc, clock_j: tj, jump, xc, xj, rec }
            },
        )
        .collect();
    let mut out = TwoFactorBundle {
        grid,
        seed,
        n_paths,
        clock_c: Vec::with_capacity(n_paths),
        clock_j: Vec::with_capacity(n_paths),
        jump: Vec::with_capacity(n_paths),
        continuous: Vec::with_capacity(n_paths),
        y: Vec::with_capacity(n_paths),
        recorded: Vec::new(),
    };
    for s in samples {
        out.clock_c.push(s.clock_c);
        out.clock_j.push(s.clock_j);
        out.jump.push(s.jump);
        out.continuous.push(s.xc);
        out.y.push(s.xc + s.xj);
        if let Some(r) = s.rec {
            out.recorded.push(r);
        }
    }
    Ok(out)
}

impl TwoFactorBundle {
    pub fn distribution(&self) -> Result<EmpiricalDistribution> {
        EmpiricalDistribution::new(self.y.clone())
    }

    /// Prices `S_0 e^{(r_int − δ)t + Y_t}` of every path.
    pub fn prices(&self, model: &TwoFactorModel, s0: f64) -> Vec<f64> {
        self.y.iter().map(|&y| model.price(s0, self.grid.horizon, y)).collect()
    }

    pub fn write_dump(&self, dir: &Path) -> Result<()> {
        let columns: [(&str, &[f64]); 5] = [
            ("clock_c", &self.clock_c),
            ("clock_j", &self.clock_j),
            ("jump", &self.jump),
            ("continuous", &self.continuous),
            ("y", &self.y),
        ];
        write_columns(dir, &columns, self.seed, self.n_paths, &self.grid)
    }
}
