//! Batch front end: one TOML run file, dotted overrides, CSV/JSON artifacts.
//!
//! Exit codes: 0 success, 1 a `validate` run that misses a tolerance,
//! 2 unreadable or invalid configuration, 3 numerical failure.

pub mod config;
mod run;

pub use config::{ResolvedModel, RunConfig, Task};
pub use run::{csv_table, execute, Artifacts, OpError};

use crate::activity::ActivityModel;
use crate::levy::SubordinatorSpec;
use crate::transforms::engine::{j_cutoff, JRule};
use crate::transforms::TransformNumerics;
use clap::{Args, Parser, Subcommand};
use serde_json::json;
use std::f64::consts::PI;
use std::path::PathBuf;
use toml::{Table, Value};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICS: i32 = 3;

/// Shipped run files as `(name, TOML)`.
pub const PRESETS: [(&str, &str); 6] = [
    ("cir-figure1", include_str!("presets/cir-figure1.toml")),
    ("reference-correlated", include_str!("presets/reference-correlated.toml")),
    ("sv1", include_str!("presets/sv1.toml")),
    ("sv2", include_str!("presets/sv2.toml")),
    ("sv3", include_str!("presets/sv3.toml")),
    ("sv4", include_str!("presets/sv4.toml")),
];

pub fn preset(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, body)| *body)
}

#[derive(Debug, Parser)]
#[command(name = "tcl-engine", version, about = "Transforms, densities and simulations of time-changed Levy models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the task of a config file.
    Run(RunArgs),
    /// Parse and check a config file without computing anything.
    ValidateConfig(ConfigArgs),
    /// List the shipped presets, or print one with --show.
    ListPresets {
        #[arg(long, value_name = "NAME")]
        show: Option<String>,
    },
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// Path to a TOML run file, or `preset:<name>`.
    #[arg(long, value_name = "PATH")]
    pub config: String,
    /// Dotted-path override, e.g. `task.horizon=2` (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Output directory; overrides `output.dir`.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Worker threads; defaults to the available cores
    #[arg(long, env = "TCL_ENGINE_WORKERS", value_name = "N")]
    pub workers: Option<usize>,
    /// Overrides `numerics.monte_carlo.seed`.
    #[arg(long, value_name = "U64")]
    pub seed: Option<u64>,
    /// Validate and print the numeric plan without computing.
    #[arg(long)]
    pub dry_run: bool,
}

/// A message plus the exit code it maps to.
#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

fn schema(message: String) -> Failure {
    Failure { code: EXIT_CONFIG, message }
}

/// Parses `value` as a TOML value, falling back to a bare string.
fn parse_value(raw: &str) -> Value {
    format!("v = {raw}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()))
}

/// Sets `key` (dotted) in `table`, creating intermediate tables.
pub fn apply_override(table: &mut Table, key: &str, value: Value) -> Result<(), Failure> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(schema(format!("bad override key `{key}`")));
    }
    let mut cur = table;
    for (depth, part) in parts[..parts.len() - 1].iter().enumerate() {
        let entry = cur.entry(part.to_string()).or_insert_with(|| Value::Table(Table::new()));
        cur = match entry {
            Value::Table(t) => t,
            _ => return Err(schema(format!("override `{key}`: `{}` is not a table", parts[..=depth].join(".")))),
        };
    }
    cur.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

/// Reads the run file, applies overrides in order and deserialises with
/// the offending key path on failure.
pub fn load_config(source: &str, sets: &[String], extra: &[(&str, Value)]) -> Result<RunConfig, Failure> {
    let text = match source.strip_prefix("preset:") {
        Some(name) => preset(name).map(str::to_string).ok_or_else(|| schema(format!("unknown preset `{name}`")))?,
        None => std::fs::read_to_string(source).map_err(|e| schema(format!("cannot read {source}: {e}")))?,
    };
    let mut table: Table = text.parse().map_err(|e| schema(format!("{source}: {e}")))?;
    for s in sets {
        let (k, v) = s.split_once('=').ok_or_else(|| schema(format!("override `{s}` is not KEY=VALUE")))?;
        apply_override(&mut table, k.trim(), parse_value(v.trim()))?;
    }
    for (k, v) in extra {
        apply_override(&mut table, k, v.clone())?;
    }
    serde_path_to_error::deserialize(Value::Table(table)).map_err(|e| {
        let path = e.path().to_string();
        // toml repeats the key path on its own line
        let inner = e.into_inner().to_string();
        let message: Vec<&str> = inner.lines().filter(|l| !l.starts_with("in `") && !l.trim().is_empty()).collect();
        schema(format!("schema error at `{path}`: {}", message.join(" ")))
    })
}

/// Parses and resolves; any failure is a configuration error.
pub fn prepare(source: &str, sets: &[String], extra: &[(&str, Value)]) -> Result<(RunConfig, ResolvedModel), Failure> {
    let cfg = load_config(source, sets, extra)?;
    let model = cfg.resolve().map_err(|e| match e {
        crate::EngineError::Config(m) => schema(format!("invalid config: {m}")),
        e => schema(format!("invalid config: {e}")),
    })?;
    if let ResolvedModel::TwoFactor { .. } = model {
        let ok = match &cfg.task {
            Task::Simulate { .. } | Task::Laplace { .. } => true,
            Task::Validate { grid, theta, r, .. } => grid.is_none() && theta.is_empty() && !r.is_empty(),
            _ => false,
        };
        if !ok {
            return Err(schema(format!(
                "invalid config: task.kind {} is not available for two-factor models (simulate, laplace, validate over r)",
                cfg.task.name()
            )));
        }
    }
    Ok((cfg, model))
}

fn clock_plan(model: &ActivityModel, spec: &SubordinatorSpec, t: f64, num: &TransformNumerics) -> serde_json::Value {
    let x_max = num.x_max.unwrap_or_else(|| model.rate_upper_bound(t, 1e-12));
    let y_window = (x_max + model.eps) * t;
    let xi_step = 2.0 * PI / (1.05 * y_window);
    let j_max = j_cutoff(spec, y_window, 0.0);
    let rule = JRule::new(t, j_max, num);
    json!({
        "rate_axis": { "n_x": num.n_x, "joint_n_x": num.joint_n_x, "x_max_initial": x_max },
        "time_steps": (t / num.dt).ceil() as usize,
        "clock_window": y_window,
        "xi_step": xi_step,
        "xi_box": [-xi_step * num.max_xi_nodes as f64, xi_step * num.max_xi_nodes as f64],
        "j_panels": { "nodes": rule.len(), "j_max": rule.j_max, "order": num.j_order },
    })
}

/// What a run would compute, without computing it.
pub fn numeric_plan(cfg: &RunConfig, model: &ResolvedModel) -> serde_json::Value {
    let t = cfg.task.horizon();
    let num = &cfg.numerics.transform;
    let mc = &cfg.numerics.monte_carlo;
    let uses_mc = matches!(cfg.task, Task::Simulate { .. } | Task::Validate { .. });
    let uses_transforms = !matches!(cfg.task, Task::Simulate { .. });
    let transform = uses_transforms.then(|| match model {
        ResolvedModel::SingleFactor { clock, spec, .. } => clock_plan(clock, spec, t, num),
        ResolvedModel::TwoFactor { model } => json!({
            "continuous_clock": clock_plan(&model.continuous_clock, &SubordinatorSpec::identity(), t, num),
            "jump_clock": clock_plan(&model.jump_clock, &model.spec, t, num),
        }),
    });
    let arguments = match &cfg.task {
        Task::Density { grid, .. } => json!({ "density_points": grid.n }),
        Task::Laplace { r, .. } => json!({ "r": r.len() }),
        Task::Cf { theta, .. } => json!({ "theta": theta.len() }),
        Task::Validate { grid, theta, r, .. } => {
            json!({ "density_points": grid.map_or(0, |g| g.n), "theta": theta.len(), "r": r.len() })
        }
        Task::FpSolve { xi, eta, .. } => json!({ "xi": xi, "eta": eta }),
        Task::Simulate { .. } => json!({}),
    };
    json!({
        "task": cfg.task.name(),
        "horizon": t,
        "model": model,
        "arguments": arguments,
        "transform": transform,
        "monte_carlo": uses_mc.then(|| json!({
            "n_paths": mc.n_paths,
            "dt": mc.dt,
            "n_steps": ((t / mc.dt) - 1e-9).ceil().max(1.0) as usize,
            "seed": mc.seed,
        })),
        "output": { "dir": cfg.output.dir, "formats": cfg.output.formats },
    })
}

/// Runs a parsed command line and returns the process exit code.
pub fn dispatch(cli: Cli) -> i32 {
    match run_command(cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("tcl-engine: {}", f.message);
            f.code
        }
    }
}

fn run_command(cli: Cli) -> Result<i32, Failure> {
    match cli.command {
        Command::ListPresets { show: Some(name) } => {
            let body = preset(&name).ok_or_else(|| schema(format!("unknown preset `{name}`")))?;
            print!("{body}");
            Ok(EXIT_OK)
        }
        Command::ListPresets { show: None } => {
            for (name, body) in PRESETS {
                let about = body.lines().next().unwrap_or("").trim_start_matches('#').trim();
                println!("{name:<22} {about}");
            }
            Ok(EXIT_OK)
        }
        Command::ValidateConfig(args) => {
            let (cfg, _) = prepare(&args.config, &args.set, &[])?;
            println!("ok: task {} over horizon {}", cfg.task.name(), cfg.task.horizon());
            Ok(EXIT_OK)
        }
        Command::Run(args) => {
            let mut extra: Vec<(&str, Value)> = Vec::new();
            if let Some(out) = &args.out {
                extra.push(("output.dir", Value::String(out.display().to_string())));
            }
            if let Some(seed) = args.seed {
                let seed = i64::try_from(seed).map_err(|_| schema(format!("--seed {seed} exceeds the TOML integer range")))?;
                extra.push(("numerics.monte_carlo.seed", Value::Integer(seed)));
            }
            let (cfg, model) = prepare(&args.config.config, &args.config.set, &extra)?;
            if args.dry_run {
                println!("{}", serde_json::to_string_pretty(&numeric_plan(&cfg, &model)).expect("plan serialises"));
                return Ok(EXIT_OK);
            }
            let workers = match args.workers {
                Some(0) => return Err(schema("--workers must be at least 1".into())),
                Some(n) => n,
                None => std::thread::available_parallelism().map_or(1, |n| n.get()),
            };
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .map_err(|e| Failure { code: EXIT_NUMERICS, message: format!("cannot start workers: {e}") })?;
            let artifacts = pool.install(|| execute(&cfg, &model)).map_err(|e| Failure {
                code: if e.error.is_config() { EXIT_CONFIG } else { EXIT_NUMERICS },
                message: format!("{} failed: {}", e.op, e.error),
            })?;
            for f in &artifacts.files {
                println!("{}", f.display());
            }
            match artifacts.passed {
                Some(false) => {
                    eprintln!("tcl-engine: validation missed a tolerance; see report.json");
                    Ok(EXIT_VALIDATION_FAILED)
                }
                _ => Ok(EXIT_OK),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_create_nested_tables_and_parse_values() {
        let mut t = Table::new();
        apply_override(&mut t, "numerics.monte_carlo.n_paths", parse_value("5000")).unwrap();
        apply_override(&mut t, "output.dir", parse_value("some/dir")).unwrap();
        apply_override(&mut t, "task.r", parse_value("[0.0, 1.5]")).unwrap();
        assert_eq!(t["numerics"]["monte_carlo"]["n_paths"].as_integer(), Some(5000));
        assert_eq!(t["output"]["dir"].as_str(), Some("some/dir"));
        assert_eq!(t["task"]["r"].as_array().unwrap().len(), 2);
        let e = apply_override(&mut t, "output.dir.deeper", parse_value("1")).unwrap_err();
        assert_eq!(e.code, EXIT_CONFIG);
    }

    #[test]
    fn every_preset_resolves() {
        for (name, _) in PRESETS {
            prepare(&format!("preset:{name}"), &[], &[]).unwrap_or_else(|f| panic!("{name}: {}", f.message));
        }
    }

    #[test]
    fn schema_errors_name_the_key_path() {
        let e = prepare("preset:sv1", &["task.r=\"oops\"".into()], &[]).unwrap_err();
        assert_eq!(e.code, EXIT_CONFIG);
        assert!(e.message.contains("task"), "{}", e.message);
        let e = prepare("preset:cir-figure1", &["numerics.monte_carlo.n_pathz=3".into()], &[]).unwrap_err();
        assert!(e.message.contains("numerics.monte_carlo") && e.message.contains("n_pathz"), "{}", e.message);
    }

    #[test]
    fn pins_are_checked_before_running() {
        let e = prepare("preset:sv3", &["two_factor.rho=0.5".into()], &[]).unwrap_err();
        assert_eq!(e.code, EXIT_CONFIG);
        let e = prepare("preset:sv2", &["task.kind=\"validate\"".into(), "task.theta=[1.0]".into()], &[]).unwrap_err();
        assert!(e.message.contains("two-factor"), "{}", e.message);
    }
}
