//! Subordinators and the Lévy composition `X_t = αJ_t + βZ_{J_t}`.
//!
//! A subordinator is stored as `J_y = d·y + m·K_y` where `d` is the
//! deterministic drift, `K` is a pure-jump gamma or inverse-Gaussian process
//! with `E K_y = y`, and `m` is the jump scale (`1 − d` when `unit_mean` is set,
//! `1` otherwise).

use crate::error::{EngineError, Result};
use crate::quadrature::Rule;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Gamma, InverseGaussian};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use statrs::function::gamma::{gamma_lr, ln_gamma};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ClockFamily {
    /// Gamma jumps with variance rate `nu` (`Var K_1 = nu`).
    Gamma { nu: f64 },
    /// Inverse-Gaussian jumps with shape `lambda` (`Var K_1 = 1/lambda`).
    InverseGaussian { lambda: f64 },
    /// `J_y = y`: a point mass, never a density.
    Identity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubordinatorSpec {
    pub family: ClockFamily,
    #[serde(default)]
    pub drift: f64,
    #[serde(default = "default_true")]
    pub unit_mean: bool,
}

fn default_true() -> bool {
    true
}

impl SubordinatorSpec {
    pub fn gamma(nu: f64) -> Self {
        Self { family: ClockFamily::Gamma { nu }, drift: 0.0, unit_mean: true }
    }

    pub fn inverse_gaussian(lambda: f64) -> Self {
        Self { family: ClockFamily::InverseGaussian { lambda }, drift: 0.0, unit_mean: true }
    }

    pub fn identity() -> Self {
        Self { family: ClockFamily::Identity, drift: 0.0, unit_mean: true }
    }

    pub fn with_drift(mut self, drift: f64) -> Self {
        self.drift = drift;
        self
    }

    pub fn validate(&self) -> Result<()> {
        match self.family {
            ClockFamily::Gamma { nu } if !(nu > 0.0 && nu.is_finite()) => {
                return Err(EngineError::Config(format!("gamma nu must be positive, got {nu}")))
            }
            ClockFamily::InverseGaussian { lambda } if !(lambda > 0.0 && lambda.is_finite()) => {
                return Err(EngineError::Config(format!(
                    "inverse-gaussian lambda must be positive, got {lambda}"
                )))
            }
            _ => {}
        }
        if !(self.drift >= 0.0 && self.drift.is_finite()) {
            return Err(EngineError::Config(format!("drift must be nonnegative, got {}", self.drift)));
        }
        if self.unit_mean && !self.is_atom() && self.drift >= 1.0 {
            return Err(EngineError::Config(format!(
                "unit-mean subordinator needs drift < 1, got {}",
                self.drift
            )));
        }
        Ok(())
    }

    pub fn is_atom(&self) -> bool {
        matches!(self.family, ClockFamily::Identity)
    }

    /// Paths are strictly increasing when there is a positive drift or no jumps at all.
    pub fn is_strictly_increasing(&self) -> bool {
        self.is_atom() || self.drift > 0.0
    }

    /// Multiplier of the pure-jump part.
    pub fn jump_scale(&self) -> f64 {
        if self.unit_mean {
            1.0 - self.drift
        } else {
            1.0
        }
    }

    pub fn mean(&self, y: f64) -> f64 {
        if self.is_atom() {
            y
        } else {
            (self.drift + self.jump_scale()) * y
        }
    }

    pub fn variance(&self, y: f64) -> f64 {
        let m = self.jump_scale();
        match self.family {
            ClockFamily::Gamma { nu } => m * m * nu * y,
            ClockFamily::InverseGaussian { lambda } => m * m * y / lambda,
            ClockFamily::Identity => 0.0,
        }
    }

    /// Density of `J_y` at `j`.
    pub fn density(&self, y: f64, j: f64) -> Result<f64> {
        if self.is_atom() {
            return Err(EngineError::AtomicLaw(
                "identity clock is a point mass at j = y; use the atom branch".into(),
            ));
        }
        if !(y > 0.0) || !(j > 0.0) {
            return Err(EngineError::Domain(format!("density needs y > 0 and j > 0, got y={y}, j={j}")));
        }
        Ok(self.density_unchecked(y, j))
    }

    pub(crate) fn density_unchecked(&self, y: f64, j: f64) -> f64 {
        self.log_density_at_residual(y, j - self.drift * y).exp()
    }

    /// Log-density of `J_y` at `drift·y + residual`, for callers that know
    /// the residual more precisely than `j − drift·y`.
    fn log_density_at_residual(&self, y: f64, residual: f64) -> f64 {
        let m = self.jump_scale();
        let k = residual / m;
        if !(k > 0.0) || !(y > 0.0) {
            return f64::NEG_INFINITY;
        }
        let log_f = match self.family {
            ClockFamily::Gamma { nu } => {
                let a = y / nu;
                (a - 1.0) * k.ln() - k / nu - ln_gamma(a) - a * nu.ln()
            }
            ClockFamily::InverseGaussian { lambda } => {
                y.ln() + 0.5 * (lambda / (2.0 * PI * k * k * k)).ln()
                    - lambda * (k - y) * (k - y) / (2.0 * k)
            }
            ClockFamily::Identity => return f64::NEG_INFINITY,
        };
        log_f - m.ln()
    }

    /// `P(J_y < j)`.
    pub fn cdf(&self, y: f64, j: f64) -> f64 {
        if y <= 0.0 {
            return if j > 0.0 { 1.0 } else { 0.0 };
        }
        let m = self.jump_scale();
        let k = (j - self.drift * y) / m;
        match self.family {
            ClockFamily::Identity => {
                if j > y {
                    1.0
                } else {
                    0.0
                }
            }
            _ if k <= 0.0 => 0.0,
            ClockFamily::Gamma { nu } => gamma_lr(y / nu, k / nu),
            ClockFamily::InverseGaussian { lambda } => {
                // IG(mean y, shape lambda y^2)
                let shape = lambda * y * y;
                let s = (shape / k).sqrt();
                let a = s * (k / y - 1.0);
                let b = s * (k / y + 1.0);
                let first = 0.5 * erfc(-a / std::f64::consts::SQRT_2);
                let second = (2.0 * lambda * y + ln_normal_cdf(-b)).exp();
                (first + second).clamp(0.0, 1.0)
            }
        }
    }

    /// Laplace exponent `ψ(s) = log E e^{−s J_1}` on the analytic strip.
    pub fn log_laplace_unit(&self, s: Complex64) -> Result<Complex64> {
        let m = self.jump_scale();
        match self.family {
            ClockFamily::Identity => Ok(-s),
            ClockFamily::Gamma { nu } => {
                let base = Complex64::new(1.0, 0.0) + nu * m * s;
                if base.re <= 0.0 {
                    return Err(EngineError::Domain(format!(
                        "gamma Laplace argument {s} outside the strip Re s > {}",
                        -1.0 / (nu * m)
                    )));
                }
                Ok(-s * self.drift - base.ln() / nu)
            }
            ClockFamily::InverseGaussian { lambda } => {
                let inner = Complex64::new(1.0, 0.0) + 2.0 * m * s / lambda;
                if inner.re <= 0.0 {
                    return Err(EngineError::Domain(format!(
                        "inverse-gaussian Laplace argument {s} outside the strip Re s > {}",
                        -lambda / (2.0 * m)
                    )));
                }
                Ok(-s * self.drift + lambda * (1.0 - inner.sqrt()))
            }
        }
    }

    /// `L_J(r, t) = E e^{−r J_t}`.
    pub fn laplace(&self, r: Complex64, t: f64) -> Result<Complex64> {
        if t < 0.0 {
            return Err(EngineError::Domain(format!("Laplace transform needs t >= 0, got {t}")));
        }
        Ok((self.log_laplace_unit(r)? * t).exp())
    }

    /// `∫₀^∞ e^{iξy} f_{J_y}(j) dy` with the y-range chosen from the envelope
    /// of `y ↦ f_{J_y}(j)`.
    pub fn fourier_in_y(&self, xi: f64, j: f64) -> Result<Complex64> {
        if !(j > 0.0) {
            return Err(EngineError::Domain(format!("fourier_in_y needs j > 0, got {j}")));
        }
        if self.is_atom() {
            return Ok(Complex64::from_polar(1.0, xi * j));
        }
        let (lo, hi) = self.y_support(j, 1e-10);
        // With drift, y ↦ f_{J_y}(j) ends at y_cap = j/drift, where gamma jumps
        // make it behave like s^{a−1} in the residual s = j − drift·y, with
        // a = y_cap/ν. The last stretch is integrated in s over dyadic bands
        // shrinking to 0, and the innermost band [0, δ] in closed form as
        // h·δ^a/a with h = f·s^{1−a} frozen at δ/2.
        let cap = match self.family {
            ClockFamily::Gamma { nu } if self.drift > 0.0 && hi >= j / self.drift * (1.0 - 1e-9) => {
                Some((j / self.drift, j / self.drift / nu))
            }
            _ => None,
        };
        const BANDS: i32 = 60;
        let split = cap.map_or(hi, |(y_cap, _)| lo + 0.5 * (y_cap - lo));
        let panels = (((xi.abs() * (hi - lo)) / PI).ceil() as usize).max(8) + 8;
        let term = |y: f64, w: f64| Complex64::from_polar(w * self.density_unchecked(y, j), xi * y);
        let eval = |n_panels: usize| {
            let rule = Rule::panels(lo, split, n_panels, 16);
            let mut sum: Complex64 = rule.nodes.iter().zip(&rule.weights).map(|(&y, &w)| term(y, w)).sum();
            if let Some((y_cap, a)) = cap {
                let d = self.drift;
                let span = d * (y_cap - split);
                let at = |s: f64, log_w: f64| {
                    let y = y_cap - s / d;
                    Complex64::from_polar((log_w + self.log_density_at_residual(y, s)).exp(), xi * y)
                };
                for k in 0..BANDS {
                    let (s_lo, s_hi) = (span * 0.5f64.powi(k + 1), span * 0.5f64.powi(k));
                    let band = Rule::panels(s_lo, s_hi, (n_panels / 8).max(1), 16);
                    for (&s, &w) in band.nodes.iter().zip(&band.weights) {
                        sum += at(s, (w / d).ln());
                    }
                }
                let delta = span * 0.5f64.powi(BANDS);
                let mid = 0.5 * delta;
                // h(mid)·δ^a/a with h = f·s^{1−a}
                sum += at(mid, (1.0 - a) * mid.ln() + a * delta.ln() - a.ln() - d.ln());
            }
            sum
        };
        let coarse = eval(panels);
        let fine = eval(2 * panels);
        let err = (fine - coarse).norm();
        if err > 1e-8 * fine.norm().max(1.0) {
            return Err(EngineError::Quadrature(format!(
                "fourier_in_y at xi={xi}, j={j}: estimated error {err:.3e}"
            )));
        }
        Ok(fine)
    }

    /// Interval of y outside which `f_{J_y}(j)` is below `rel` of its peak.
    pub fn y_support(&self, j: f64, rel: f64) -> (f64, f64) {
        let y_cap = if self.drift > 0.0 { j / self.drift } else { f64::INFINITY };
        let sd = self.variance(j.max(1e-3)).sqrt();
        let step = (0.05 * sd).max(1e-4 * j).min(0.1 * j.max(0.05));
        let mut peak = 0.0f64;
        let mut values = Vec::new();
        let mut y = step;
        loop {
            if y >= y_cap {
                break;
            }
            let v = self.density_unchecked(y, j);
            peak = peak.max(v);
            values.push((y, v));
            if y > j && v < rel * peak {
                break;
            }
            y += step;
            if values.len() > 200_000 {
                break;
            }
        }
        let lo = values
            .iter()
            .find(|(_, v)| *v >= rel * peak)
            .map(|(y, _)| (y - step).max(0.0))
            .unwrap_or(0.0);
        let hi = values
            .iter()
            .rev()
            .find(|(_, v)| *v >= rel * peak)
            .map(|(y, _)| y + step)
            .unwrap_or(y)
            .min(y_cap);
        (lo, hi)
    }

    /// Smallest j beyond which `f_{J_y}(j)·e^{growth·j}` stays below `rel`
    /// of its peak over j.
    pub fn upper_cutoff(&self, y: f64, growth: f64, rel: f64) -> f64 {
        if self.is_atom() {
            return y;
        }
        let sd = self.variance(y).sqrt().max(1e-6);
        let step = 0.05 * sd;
        let mean = self.mean(y);
        let mut j = step;
        let mut peak = 0.0f64;
        let mut last_above = j;
        let mut steps = 0usize;
        loop {
            let v = self.density_unchecked(y, j) * (growth * j).exp();
            if v > peak {
                peak = v;
            }
            if v >= rel * peak {
                last_above = j;
            } else if j > mean {
                break;
            }
            j += step;
            steps += 1;
            if steps > 2_000_000 {
                break;
            }
        }
        last_above + step
    }

    /// One exact increment `J_{y+dy} − J_y`.
    pub fn sample_increment<R: Rng + ?Sized>(&self, rng: &mut R, dy: f64) -> f64 {
        if dy <= 0.0 {
            return 0.0;
        }
        let m = self.jump_scale();
        match self.family {
            ClockFamily::Identity => dy,
            ClockFamily::Gamma { nu } => {
                let k: f64 = Gamma::new(dy / nu, nu).expect("valid gamma parameters").sample(rng);
                self.drift * dy + m * k
            }
            ClockFamily::InverseGaussian { lambda } => {
                let k: f64 = InverseGaussian::new(dy, lambda * dy * dy)
                    .expect("valid inverse-gaussian parameters")
                    .sample(rng);
                self.drift * dy + m * k
            }
        }
    }
}

fn ln_normal_cdf(x: f64) -> f64 {
    if x > -30.0 {
        (0.5 * erfc(-x / std::f64::consts::SQRT_2)).ln()
    } else {
        let b = -x;
        let b2 = b * b;
        -0.5 * b2 - (b * (2.0 * PI).sqrt()).ln() + (1.0 - 1.0 / b2 + 3.0 / (b2 * b2)).ln()
    }
}

/// Density of `J_y` at `j`.
pub fn subordinator_density(spec: &SubordinatorSpec, y: f64, j: f64) -> Result<f64> {
    spec.density(y, j)
}

/// `E e^{−r J_t}`.
pub fn subordinator_laplace(spec: &SubordinatorSpec, r: Complex64, t: f64) -> Result<Complex64> {
    spec.laplace(r, t)
}

/// `∫ e^{iξy} f_{J_y}(j) dy`.
pub fn fourier_in_y_of_density(spec: &SubordinatorSpec, xi: f64, j: f64) -> Result<Complex64> {
    spec.fourier_in_y(xi, j)
}

/// Loadings of `Y = α J + β Z_J` with `Z = ρB + √(1−ρ²)W`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevyComposition {
    #[serde(default)]
    pub alpha: f64,
    #[serde(default = "default_one")]
    pub beta: f64,
    #[serde(default)]
    pub rho: f64,
}

fn default_one() -> f64 {
    1.0
}

impl LevyComposition {
    pub fn new(alpha: f64, beta: f64, rho: f64) -> Result<Self> {
        let c = Self { alpha, beta, rho };
        c.validate()?;
        Ok(c)
    }

    /// `α = 0, β = 1`: the plain correlated Brownian `Z`.
    pub fn standard(rho: f64) -> Self {
        Self { alpha: 0.0, beta: 1.0, rho }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho.abs() <= 1.0) {
            return Err(EngineError::Config(format!("rho must lie in [-1, 1], got {}", self.rho)));
        }
        if !self.alpha.is_finite() || !self.beta.is_finite() {
            return Err(EngineError::Config("alpha and beta must be finite".into()));
        }
        Ok(())
    }

    pub fn orthogonal_weight(&self) -> f64 {
        (1.0 - self.rho * self.rho).max(0.0).sqrt()
    }
}
