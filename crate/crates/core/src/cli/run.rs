use super::config::{Format, OutputSection, ResolvedModel, RunConfig, Task};
use crate::error::EngineError;
use crate::fokker_planck::{solve_qhat, SpatialGrid, Stretching};
use crate::model_zoo::{laplace_two_factor, TwoFactorModel};
use crate::montecarlo::{compare, simulate_paths, simulate_two_factor, ComparisonReport, EmpiricalDistribution};
use crate::transforms::{cf_Y_grid, laplace_Y_grid, pdf_Y, TransformKind, TransformResult, Truncation};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::json;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// A failed step, named by the module and operation that raised it.
#[derive(Debug, Clone, PartialEq)]
pub struct OpError {
    pub op: &'static str,
    pub error: EngineError,
}

type Step<T> = std::result::Result<T, OpError>;

fn at<T>(op: &'static str, r: crate::Result<T>) -> Step<T> {
    r.map_err(|error| OpError { op, error })
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Artifacts {
    pub files: Vec<PathBuf>,
    /// Set by the validate task.
    pub passed: Option<bool>,
}

struct Writer<'a> {
    out: &'a OutputSection,
    dir: &'a Path,
    files: Vec<PathBuf>,
}

impl<'a> Writer<'a> {
    fn put(&mut self, name: &str, body: &str) -> Step<()> {
        let path = self.dir.join(name);
        at(
            "cli::write",
            std::fs::create_dir_all(self.dir)
                .and_then(|_| std::fs::write(&path, body))
                .map_err(|e| EngineError::Config(format!("cannot write {}: {e}", path.display()))),
        )?;
        self.files.push(path);
        Ok(())
    }

    fn json(&mut self, name: &str, value: &impl Serialize) -> Step<()> {
        let body = serde_json::to_string_pretty(value).expect("plain data serialises");
        self.put(name, &(body + "\n"))
    }

    fn result(&mut self, stem: &str, r: &TransformResult) -> Step<()> {
        if self.out.wants(Format::Csv) {
            self.put(&format!("{stem}.csv"), &r.to_csv())?;
        }
        if self.out.wants(Format::Json) {
            self.put(&format!("{stem}.json"), &(r.to_json() + "\n"))?;
        }
        Ok(())
    }
}

/// Columns of equal length as CSV with 17 significant digits.
pub fn csv_table(header: &[String], columns: &[&[f64]]) -> String {
    let mut s = header.join(",");
    s.push('\n');
    let rows = columns.first().map_or(0, |c| c.len());
    for i in 0..rows {
        for (k, c) in columns.iter().enumerate() {
            if k > 0 {
                s.push(',');
            }
            write!(s, "{:.16e}", c[i]).unwrap();
        }
        s.push('\n');
    }
    s
}

#[derive(Serialize)]
struct Moments {
    mean: f64,
    mean_stderr: f64,
    variance: f64,
    variance_stderr: f64,
    skewness: f64,
    skewness_stderr: f64,
}

impl Moments {
    fn of(d: &EmpiricalDistribution) -> Self {
        Self {
            mean: d.mean(),
            mean_stderr: d.mean_stderr(),
            variance: d.variance(),
            variance_stderr: d.variance_stderr(),
            skewness: d.skewness(),
            skewness_stderr: d.skewness_stderr(),
        }
    }
}

fn empirical(samples: Vec<f64>) -> Step<EmpiricalDistribution> {
    at("montecarlo::EmpiricalDistribution", EmpiricalDistribution::new(samples))
}

/// Runs the task and writes its artifacts under `output.dir`.
pub fn execute(cfg: &RunConfig, model: &ResolvedModel) -> Step<Artifacts> {
    let mut w = Writer { out: &cfg.output, dir: &cfg.output.dir, files: Vec::new() };
    let passed = match model {
        ResolvedModel::SingleFactor { .. } => single_factor(cfg, model, &mut w)?,
        ResolvedModel::TwoFactor { model } => two_factor(cfg, model, &mut w)?,
    };
    Ok(Artifacts { files: w.files, passed })
}

fn single_factor(cfg: &RunConfig, resolved: &ResolvedModel, w: &mut Writer) -> Step<Option<bool>> {
    let ResolvedModel::SingleFactor { clock, levy, spec } = resolved else { unreachable!() };
    let num = &cfg.numerics.transform;
    let mc = &cfg.numerics.monte_carlo;
    match &cfg.task {
        Task::Simulate { horizon } => {
            let b = at(
                "montecarlo::simulate_paths",
                simulate_paths(clock, levy, spec, *horizon, mc.n_paths, mc.dt, mc.seed),
            )?;
            let times = b.grid.times();
            let mut head = vec!["time".to_string()];
            let mut cols: Vec<&[f64]> = vec![&times];
            for (k, r) in b.recorded.iter().enumerate() {
                head.push(format!("v_{k}"));
                cols.push(&r.rate);
            }
            w.put("v_path.csv", &csv_table(&head, &cols))?;
            let mut head = vec!["time".to_string()];
            let mut cols: Vec<&[f64]> = vec![&times];
            for (k, r) in b.recorded.iter().enumerate() {
                head.push(format!("T_{k}"));
                cols.push(&r.clock);
            }
            head.push("reference".into());
            cols.push(&times);
            w.put("t_path.csv", &csv_table(&head, &cols))?;
            let clock_law = empirical(b.clock.clone())?;
            let returns = b.distribution().map_err(|error| OpError { op: "montecarlo::distribution", error })?;
            let summary = json!({
                "horizon": horizon,
                "n_paths": mc.n_paths,
                "n_steps": b.grid.n_steps,
                "seed": mc.seed,
                "clock": Moments::of(&clock_law),
                "returns": Moments::of(&returns),
                "correlation_audit": b.correlation_audit(),
            });
            w.json("summary.json", &summary)?;
            if cfg.output.dump_samples {
                at("montecarlo::write_dump", b.write_dump(&w.dir.join("samples")))?;
            }
            Ok(None)
        }
        Task::FpSolve { horizon, xi, eta } => {
            let grid = at(
                "fokker_planck::SpatialGrid",
                match num.x_max {
                    Some(x_max) => SpatialGrid::rate_axis(0.0, x_max, num.n_x, Stretching::Uniform, clock.v0),
                    None => SpatialGrid::for_model(clock, *horizon, num.n_x),
                },
            )?;
            let field = at("fokker_planck::solve_qhat", solve_qhat(clock, *horizon, *xi, *eta, &grid, num.dt))?;
            let re: Vec<f64> = field.values.iter().map(|v| v.re).collect();
            let im: Vec<f64> = field.values.iter().map(|v| v.im).collect();
            if cfg.output.wants(Format::Csv) {
                w.put("qhat.csv", &csv_table(&["x".into(), "real".into(), "imag".into()], &[&grid.x.nodes, &re, &im]))?;
            }
            if cfg.output.wants(Format::Json) {
                let summary = json!({
                    "time": field.time,
                    "xi": xi,
                    "eta": eta,
                    "n_x": grid.n_x(),
                    "x_max": grid.x.hi(),
                    "dt": num.dt,
                    "integral": [field.mass.re, field.mass.im],
                });
                w.json("qhat.json", &summary)?;
            }
            if cfg.output.dump_samples {
                at("fokker_planck::write_dump", field.write_dump(&grid, w.dir, "qhat"))?;
            }
            Ok(None)
        }
        Task::Density { horizon, grid } => {
            let r = at("transforms::pdf_Y", pdf_Y(clock, levy, spec, *horizon, &grid.points(), num))?;
            w.result("density", &r)?;
            Ok(None)
        }
        Task::Laplace { horizon, r } => {
            let res = at("transforms::laplace_Y", laplace_Y_grid(clock, levy, spec, *horizon, r, num))?;
            w.result("laplace", &res)?;
            Ok(None)
        }
        Task::Cf { horizon, theta } => {
            let res = at("transforms::cf_Y", cf_Y_grid(clock, levy, spec, *horizon, theta, num))?;
            w.result("cf", &res)?;
            Ok(None)
        }
        Task::Validate { horizon, grid, theta, r } => {
            let b = at(
                "montecarlo::simulate_paths",
                simulate_paths(clock, levy, spec, *horizon, mc.n_paths, mc.dt, mc.seed),
            )?;
            let emp = empirical(b.y)?;
            let mut pairs = Vec::new();
            if let Some(g) = grid {
                pairs.push(("density", at("transforms::pdf_Y", pdf_Y(clock, levy, spec, *horizon, &g.points(), num))?));
            }
            if !theta.is_empty() {
                pairs.push(("cf", at("transforms::cf_Y", cf_Y_grid(clock, levy, spec, *horizon, theta, num))?));
            }
            if !r.is_empty() {
                pairs.push(("laplace", at("transforms::laplace_Y", laplace_Y_grid(clock, levy, spec, *horizon, r, num))?));
            }
            report(cfg, &emp, &pairs, w).map(Some)
        }
    }
}

fn two_factor(cfg: &RunConfig, model: &TwoFactorModel, w: &mut Writer) -> Step<Option<bool>> {
    let num = &cfg.numerics.transform;
    let mc = &cfg.numerics.monte_carlo;
    let laplace = |t: f64, rs: &[f64]| -> Step<TransformResult> {
        let values = rs
            .iter()
            .map(|&r| at("model_zoo::laplace_two_factor", laplace_two_factor(model, t, r, num)).map(|v| Complex64::new(v, 0.0)))
            .collect::<Step<Vec<_>>>()?;
        Ok(TransformResult::new(TransformKind::Laplace, rs.to_vec(), values, Truncation::default()))
    };
    match &cfg.task {
        Task::Simulate { horizon } => {
            let b = at(
                "montecarlo::simulate_two_factor",
                simulate_two_factor(model, *horizon, mc.n_paths, mc.dt, mc.seed),
            )?;
            let times = b.grid.times();
            let mut head = vec!["time".to_string()];
            let mut cols: Vec<&[f64]> = vec![&times];
            for (k, p) in b.recorded.iter().enumerate() {
                head.extend([format!("v_c_{k}"), format!("v_j_{k}")]);
                cols.extend([p.rate_c.as_slice(), p.rate_j.as_slice()]);
            }
            w.put("v_path.csv", &csv_table(&head, &cols))?;
            let mut head = vec!["time".to_string()];
            let mut cols: Vec<&[f64]> = vec![&times];
            for (k, p) in b.recorded.iter().enumerate() {
                head.extend([format!("T_c_{k}"), format!("T_j_{k}")]);
                cols.extend([p.clock_c.as_slice(), p.clock_j.as_slice()]);
            }
            head.push("reference".into());
            cols.push(&times);
            w.put("t_path.csv", &csv_table(&head, &cols))?;
            let summary = json!({
                "horizon": horizon,
                "n_paths": mc.n_paths,
                "n_steps": b.grid.n_steps,
                "seed": mc.seed,
                "continuous_clock": Moments::of(&empirical(b.clock_c.clone())?),
                "jump_clock": Moments::of(&empirical(b.clock_j.clone())?),
                "returns": Moments::of(&empirical(b.y.clone())?),
            });
            w.json("summary.json", &summary)?;
            if cfg.output.dump_samples {
                at("montecarlo::write_dump", b.write_dump(&w.dir.join("samples")))?;
            }
            Ok(None)
        }
        Task::Laplace { horizon, r } => {
            w.result("laplace", &laplace(*horizon, r)?)?;
            Ok(None)
        }
        Task::Validate { horizon, r, .. } => {
            let b = at(
                "montecarlo::simulate_two_factor",
                simulate_two_factor(model, *horizon, mc.n_paths, mc.dt, mc.seed),
            )?;
            let emp = empirical(b.y)?;
            report(cfg, &emp, &[("laplace", laplace(*horizon, r)?)], w).map(Some)
        }
        Task::FpSolve { .. } | Task::Density { .. } | Task::Cf { .. } => Err(OpError {
            op: "cli::run",
            error: EngineError::UnsupportedModel(format!("task {} needs a single-factor model", cfg.task.name())),
        }),
    }
}

#[derive(Serialize)]
struct Check {
    name: &'static str,
    value: f64,
    tolerance: f64,
    passed: bool,
}

#[derive(Serialize)]
struct Report<'a> {
    passed: bool,
    n_paths: usize,
    dt: f64,
    seed: u64,
    checks: Vec<Check>,
    comparisons: Vec<&'a ComparisonReport>,
}

fn report(cfg: &RunConfig, emp: &EmpiricalDistribution, pairs: &[(&str, TransformResult)], w: &mut Writer) -> Step<bool> {
    let tol = &cfg.numerics.tolerances;
    let mut comparisons = Vec::new();
    for (stem, res) in pairs {
        w.result(stem, res)?;
        comparisons.push(at("montecarlo::compare", compare(emp, res))?);
    }
    let mut checks = Vec::new();
    for c in &comparisons {
        let mut push = |name, value: Option<f64>, tolerance| {
            if let Some(value) = value {
                checks.push(Check { name, value, tolerance, passed: value < tolerance });
            }
        };
        push("kolmogorov_smirnov", c.kolmogorov_smirnov, tol.kolmogorov_smirnov);
        push("max_cf_error", c.max_cf_error, tol.cf_abs);
        push("max_laplace_rel_error", c.max_laplace_rel_error, tol.laplace_rel);
    }
    let passed = checks.iter().all(|c| c.passed);
    let mc = &cfg.numerics.monte_carlo;
    let rep = Report { passed, n_paths: mc.n_paths, dt: mc.dt, seed: mc.seed, checks, comparisons: comparisons.iter().collect() };
    w.json("report.json", &rep)?;
    Ok(passed)
}
