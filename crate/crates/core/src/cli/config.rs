//! The run file: one TOML document, validated in full before anything runs.

use crate::activity::ActivityModel;
use crate::error::{EngineError, Result};
use crate::levy::{ClockFamily, LevyComposition, SubordinatorSpec};
use crate::model_zoo::{build_sv_variant, FreeParams, SVVariant, TwoFactorModel};
use crate::montecarlo::MIN_PATHS;
use crate::transforms::TransformNumerics;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// SV1..SV4 tag; selects the pinned two-factor variant.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<SVVariant>,
    /// Single-factor activity rate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clock: Option<ActivityModel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub two_factor: Option<TwoFactorSection>,
    #[serde(default)]
    pub levy: LevySection,
    #[serde(default)]
    pub numerics: NumericsSection,
    pub task: Task,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevySection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(default)]
    pub subordinator: SubordinatorSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyName {
    Gamma,
    InverseGaussian,
    #[default]
    Identity,
}

/// Flat form of [`SubordinatorSpec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubordinatorSection {
    #[serde(default)]
    pub family: FamilyName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub drift: f64,
    #[serde(default = "yes")]
    pub unit_mean: bool,
}

impl Default for SubordinatorSection {
    fn default() -> Self {
        Self { family: FamilyName::Identity, nu: None, lambda: None, drift: 0.0, unit_mean: true }
    }
}

fn yes() -> bool {
    true
}

impl SubordinatorSection {
    pub fn spec(&self) -> Result<SubordinatorSpec> {
        let key = "levy.subordinator";
        let family = match (self.family, self.nu, self.lambda) {
            (FamilyName::Gamma, Some(nu), None) => ClockFamily::Gamma { nu },
            (FamilyName::InverseGaussian, None, Some(lambda)) => ClockFamily::InverseGaussian { lambda },
            (FamilyName::Identity, None, None) => ClockFamily::Identity,
            (FamilyName::Gamma, _, _) => return Err(cfg(format!("{key}: family gamma takes `nu` and no `lambda`"))),
            (FamilyName::InverseGaussian, _, _) => {
                return Err(cfg(format!("{key}: family inverse-gaussian takes `lambda` and no `nu`")))
            }
            (FamilyName::Identity, _, _) => return Err(cfg(format!("{key}: family identity takes no parameters"))),
        };
        let spec = SubordinatorSpec { family, drift: self.drift, unit_mean: self.unit_mean };
        spec.validate().map_err(|e| prefix(key, e))?;
        Ok(spec)
    }
}

/// Two-factor loadings and clocks. With a top-level `variant` the pinned
/// pieces may be left out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoFactorSection {
    pub a_c: [f64; 4],
    #[serde(default)]
    pub a_j: [f64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub continuous_clock: Option<ActivityModel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jump_clock: Option<ActivityModel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(default)]
    pub rate_int: f64,
    #[serde(default)]
    pub dividend: f64,
    #[serde(default)]
    pub shared_clock: bool,
    #[serde(default)]
    pub no_arbitrage: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsSection {
    #[serde(default)]
    pub transform: TransformNumerics,
    #[serde(default)]
    pub monte_carlo: MonteCarloSection,
    #[serde(default)]
    pub tolerances: Tolerances,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloSection {
    #[serde(default = "default_paths")]
    pub n_paths: usize,
    #[serde(default = "default_mc_dt")]
    pub dt: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_paths() -> usize {
    100_000
}

fn default_mc_dt() -> f64 {
    2e-3
}

fn default_seed() -> u64 {
    1
}

impl Default for MonteCarloSection {
    fn default() -> Self {
        Self { n_paths: default_paths(), dt: default_mc_dt(), seed: default_seed() }
    }
}

/// Pass/fail thresholds of the `validate` task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_ks")]
    pub kolmogorov_smirnov: f64,
    #[serde(default = "default_transform_tol")]
    pub cf_abs: f64,
    #[serde(default = "default_transform_tol")]
    pub laplace_rel: f64,
}

fn default_ks() -> f64 {
    0.02
}

fn default_transform_tol() -> f64 {
    1e-2
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { kolmogorov_smirnov: default_ks(), cf_abs: default_transform_tol(), laplace_rel: default_transform_tol() }
    }
}

/// Uniform grid `lo, lo + h, …, hi` with `n` points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl GridSpec {
    pub fn points(&self) -> Vec<f64> {
        let h = (self.hi - self.lo) / (self.n - 1) as f64;
        (0..self.n).map(|k| if k + 1 == self.n { self.hi } else { self.lo + h * k as f64 }).collect()
    }

    fn check(&self, key: &str) -> Result<()> {
        if self.n < 2 || !(self.hi > self.lo) || !self.lo.is_finite() || !self.hi.is_finite() {
            return Err(cfg(format!("{key}: need finite lo < hi and n >= 2")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Task {
    /// Clock and return paths plus terminal statistics.
    Simulate { horizon: f64 },
    /// `q̂(t, x, ξ, η)` on the rate axis.
    FpSolve {
        horizon: f64,
        #[serde(default)]
        xi: f64,
        #[serde(default)]
        eta: f64,
    },
    Density { horizon: f64, grid: GridSpec },
    Laplace { horizon: f64, r: Vec<f64> },
    Cf { horizon: f64, theta: Vec<f64> },
    /// Transform pipelines against the Monte Carlo oracle.
    Validate {
        horizon: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        grid: Option<GridSpec>,
        #[serde(default)]
        theta: Vec<f64>,
        #[serde(default)]
        r: Vec<f64>,
    },
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Simulate { .. } => "simulate",
            Task::FpSolve { .. } => "fp-solve",
            Task::Density { .. } => "density",
            Task::Laplace { .. } => "laplace",
            Task::Cf { .. } => "cf",
            Task::Validate { .. } => "validate",
        }
    }

    pub fn horizon(&self) -> f64 {
        match *self {
            Task::Simulate { horizon }
            | Task::FpSolve { horizon, .. }
            | Task::Density { horizon, .. }
            | Task::Laplace { horizon, .. }
            | Task::Cf { horizon, .. }
            | Task::Validate { horizon, .. } => horizon,
        }
    }

    fn check(&self) -> Result<()> {
        let t = self.horizon();
        if !(t > 0.0 && t.is_finite()) {
            return Err(cfg(format!("task.horizon must be positive, got {t}")));
        }
        let finite = |key: &str, v: &[f64], nonneg: bool| {
            if v.iter().any(|x| !x.is_finite() || (nonneg && *x < 0.0)) {
                return Err(cfg(format!("task.{key}: every entry must be finite{}", if nonneg { " and >= 0" } else { "" })));
            }
            Ok(())
        };
        match self {
            Task::Density { grid, .. } => grid.check("task.grid"),
            Task::Laplace { r, .. } if r.is_empty() => Err(cfg("task.r must not be empty".into())),
            Task::Laplace { r, .. } => finite("r", r, true),
            Task::Cf { theta, .. } if theta.is_empty() => Err(cfg("task.theta must not be empty".into())),
            Task::Cf { theta, .. } => finite("theta", theta, false),
            Task::Validate { grid, theta, r, .. } => {
                if let Some(g) = grid {
                    g.check("task.grid")?;
                }
                finite("theta", theta, false)?;
                finite("r", r, true)?;
                if grid.is_none() && theta.is_empty() && r.is_empty() {
                    return Err(cfg("task: validate needs at least one of grid, theta, r".into()));
                }
                Ok(())
            }
            Task::FpSolve { xi, eta, .. } if !xi.is_finite() || !eta.is_finite() => {
                Err(cfg("task.xi and task.eta must be finite".into()))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
    /// Also write the raw Monte Carlo samples as binary columns.
    #[serde(default)]
    pub dump_samples: bool,
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Json]
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: default_dir(), formats: default_formats(), dump_samples: false }
    }
}

impl OutputSection {
    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }
}

/// The model after pins, defaults and cross-checks.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ResolvedModel {
    SingleFactor { clock: ActivityModel, levy: LevyComposition, spec: SubordinatorSpec },
    TwoFactor { model: TwoFactorModel },
}

fn cfg(msg: String) -> EngineError {
    EngineError::Config(msg)
}

fn prefix(key: &str, e: EngineError) -> EngineError {
    cfg(format!("{key}: {e}"))
}

impl RunConfig {
    /// Every cross-field rule; nothing here computes.
    pub fn resolve(&self) -> Result<ResolvedModel> {
        self.task.check()?;
        self.numerics.transform.validate()?;
        let mc = &self.numerics.monte_carlo;
        if mc.n_paths < MIN_PATHS {
            return Err(cfg(format!("numerics.monte_carlo.n_paths must be at least {MIN_PATHS}")));
        }
        if !(mc.dt > 0.0 && mc.dt <= self.task.horizon()) {
            return Err(cfg("numerics.monte_carlo.dt must lie in (0, horizon]".into()));
        }
        let tol = &self.numerics.tolerances;
        if !(tol.kolmogorov_smirnov > 0.0 && tol.cf_abs > 0.0 && tol.laplace_rel > 0.0) {
            return Err(cfg("numerics.tolerances must be positive".into()));
        }
        if self.output.formats.is_empty() {
            return Err(cfg("output.formats must name at least one format".into()));
        }
        let spec = self.levy.subordinator.spec()?;
        match (&self.clock, &self.two_factor) {
            (Some(_), Some(_)) => Err(cfg("model: give either [clock] or [two_factor], not both".into())),
            (None, None) => Err(cfg("model: missing [clock] or [two_factor]".into())),
            (Some(clock), None) => {
                if self.variant.is_some() {
                    return Err(cfg("variant: SV variants need a [two_factor] section".into()));
                }
                clock.validate().map_err(|e| prefix("clock", e))?;
                let levy = LevyComposition {
                    alpha: self.levy.alpha.unwrap_or(0.0),
                    beta: self.levy.beta.unwrap_or(1.0),
                    rho: self.levy.rho.unwrap_or(0.0),
                };
                levy.validate().map_err(|e| prefix("levy", e))?;
                Ok(ResolvedModel::SingleFactor { clock: *clock, levy, spec })
            }
            (None, Some(tf)) => {
                if self.levy.alpha.is_some() || self.levy.beta.is_some() || self.levy.rho.is_some() {
                    return Err(cfg(
                        "levy: alpha, beta and rho belong to the single-factor model; use two_factor.a_c, a_j and rho".into(),
                    ));
                }
                let model = match self.variant {
                    Some(tag) => {
                        if tf.shared_clock {
                            return Err(cfg("two_factor.shared_clock is fixed by the variant".into()));
                        }
                        let free = FreeParams {
                            a_c: tf.a_c,
                            a_j: tf.a_j,
                            continuous_clock: tf.continuous_clock,
                            jump_clock: tf.jump_clock,
                            rho: tf.rho,
                            spec,
                            rate_int: tf.rate_int,
                            dividend: tf.dividend,
                            no_arbitrage: tf.no_arbitrage,
                        };
                        build_sv_variant(tag, free).map_err(|e| prefix("two_factor", e))?
                    }
                    None => {
                        let continuous = tf
                            .continuous_clock
                            .ok_or_else(|| cfg("two_factor.continuous_clock is required without a variant".into()))?;
                        let jump = match (tf.jump_clock, tf.shared_clock) {
                            (Some(j), _) => j,
                            (None, true) => continuous,
                            (None, false) => {
                                return Err(cfg("two_factor.jump_clock is required without a variant".into()))
                            }
                        };
                        let m = TwoFactorModel {
                            a_c: tf.a_c,
                            a_j: tf.a_j,
                            continuous_clock: continuous,
                            jump_clock: jump,
                            rho: tf.rho.unwrap_or(0.0),
                            spec,
                            rate_int: tf.rate_int,
                            dividend: tf.dividend,
                            shared_clock: tf.shared_clock,
                            no_arbitrage: tf.no_arbitrage,
                            variant: None,
                        };
                        m.validate().map_err(|e| prefix("two_factor", e))?;
                        m
                    }
                };
                Ok(ResolvedModel::TwoFactor { model })
            }
        }
    }
}
