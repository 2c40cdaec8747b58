//! The activity rate `v` and the business clock `T_t = ∫(v_s + ε) ds`.

mod riccati;
mod simulate;

pub use riccati::{
    clock_mgf, clock_moments, conditional_cf_exponent, riccati_coefficients, AffineExponent,
    ClockMoments,
};
pub use simulate::{closed_form_lognormal_path, simulate_clock, ClockPaths, ClockSimulator, RecordedPath, StepGrid};

use crate::error::{EngineError, Result};
use serde::{Deserialize, Serialize};

/// Rate dynamics, all mean-reverting to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RateDynamics {
    /// `dv = κ(1−v)dt + σ√v dB`
    Cir { kappa: f64, sigma: f64 },
    /// `dv = κ(1−v)dt + σ v dB`
    LogNormal { kappa: f64, sigma: f64 },
    /// `v ≡ v0`
    Deterministic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActivityModel {
    pub dynamics: RateDynamics,
    #[serde(default = "unit_rate")]
    pub v0: f64,
    #[serde(default)]
    pub eps: f64,
}

fn unit_rate() -> f64 {
    1.0
}

impl ActivityModel {
    pub fn cir(kappa: f64, sigma: f64) -> Self {
        Self { dynamics: RateDynamics::Cir { kappa, sigma }, v0: 1.0, eps: 0.0 }
    }

    pub fn lognormal(kappa: f64, sigma: f64) -> Self {
        Self { dynamics: RateDynamics::LogNormal { kappa, sigma }, v0: 1.0, eps: 0.0 }
    }

    pub fn deterministic() -> Self {
        Self { dynamics: RateDynamics::Deterministic, v0: 1.0, eps: 0.0 }
    }

    pub fn with_v0(mut self, v0: f64) -> Self {
        self.v0 = v0;
        self
    }

    pub fn with_eps(mut self, eps: f64) -> Self {
        self.eps = eps;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.v0 > 0.0 && self.v0.is_finite()) {
            return Err(EngineError::Config(format!("v0 must be positive, got {}", self.v0)));
        }
        if !(self.eps >= 0.0 && self.eps.is_finite()) {
            return Err(EngineError::Config(format!("eps must be nonnegative, got {}", self.eps)));
        }
        match self.dynamics {
            RateDynamics::Cir { kappa, sigma } | RateDynamics::LogNormal { kappa, sigma } => {
                if !(kappa > 0.0 && kappa.is_finite()) {
                    return Err(EngineError::Config(format!("kappa must be positive, got {kappa}")));
                }
                if !(sigma >= 0.0 && sigma.is_finite()) {
                    return Err(EngineError::Config(format!("sigma must be nonnegative, got {sigma}")));
                }
            }
            RateDynamics::Deterministic => {}
        }
        Ok(())
    }

    /// `2κ > σ²`; a violation is tolerated by the simulator and only reported.
    pub fn feller_satisfied(&self) -> bool {
        match self.dynamics {
            RateDynamics::Cir { kappa, sigma } => 2.0 * kappa > sigma * sigma,
            _ => true,
        }
    }

    pub fn is_affine(&self) -> bool {
        matches!(self.dynamics, RateDynamics::Cir { .. } | RateDynamics::Deterministic)
    }

    pub fn is_deterministic(&self) -> bool {
        match self.dynamics {
            RateDynamics::Deterministic => true,
            RateDynamics::Cir { sigma, .. } | RateDynamics::LogNormal { sigma, .. } => {
                sigma == 0.0 && self.v0 == 1.0
            }
        }
    }

    pub fn kappa(&self) -> f64 {
        match self.dynamics {
            RateDynamics::Cir { kappa, .. } | RateDynamics::LogNormal { kappa, .. } => kappa,
            RateDynamics::Deterministic => 0.0,
        }
    }

    pub fn sigma(&self) -> f64 {
        match self.dynamics {
            RateDynamics::Cir { sigma, .. } | RateDynamics::LogNormal { sigma, .. } => sigma,
            RateDynamics::Deterministic => 0.0,
        }
    }

    /// `μ(x)`; coefficients see the positive part of the state.
    pub fn drift(&self, x: f64) -> f64 {
        self.kappa() * (1.0 - x.max(0.0))
    }

    /// `σ(x)`.
    pub fn diffusion(&self, x: f64) -> f64 {
        let x = x.max(0.0);
        match self.dynamics {
            RateDynamics::Cir { sigma, .. } => sigma * x.sqrt(),
            RateDynamics::LogNormal { sigma, .. } => sigma * x,
            RateDynamics::Deterministic => 0.0,
        }
    }

    /// Rate seen by a deterministic clock: `T_t = (v0 + ε)·t`.
    pub fn deterministic_rate(&self) -> f64 {
        self.v0 + self.eps
    }

    /// Upper edge of the rate axis for PDE grids: beyond it the stationary law
    /// (and the transient law started at v0) has mass below `tail`.
    pub fn rate_upper_bound(&self, horizon: f64, tail: f64) -> f64 {
        match self.dynamics {
            RateDynamics::Cir { kappa, sigma } => {
                // stationary gamma with shape 2κ/σ² and scale σ²/(2κ)
                let shape = 2.0 * kappa / (sigma * sigma).max(1e-12);
                let scale = 1.0 / shape;
                let mut x = (1.0f64).max(self.v0) + scale;
                let step = 0.01 * (1.0 + sigma);
                loop {
                    let q = statrs::function::gamma::gamma_ur(shape, x / scale);
                    if q < tail || x > 1e3 {
                        break;
                    }
                    x += step;
                }
                // the transient law started at v0 can sit further out early on
                let transient = self.v0 + 8.0 * sigma * (self.v0.max(1.0) * horizon.max(1e-3)).sqrt();
                x.max(transient)
            }
            RateDynamics::LogNormal { sigma, .. } => {
                self.v0.max(1.0) * (7.0 * sigma * horizon.max(0.25).sqrt()).exp() + 0.5
            }
            RateDynamics::Deterministic => 2.0 * self.v0,
        }
    }

    /// Drift under the tilt `−rρσ(x)·1_{u≤j}`.
    pub fn measure_changed_drift(&self, r: f64, rho: f64, j: f64) -> impl Fn(f64, f64) -> f64 + '_ {
        move |u: f64, x: f64| {
            let tilt = if u <= j { r * rho * self.diffusion(x) } else { 0.0 };
            self.drift(x) - tilt
        }
    }
}

/// Free-function form of [`ActivityModel::measure_changed_drift`].
pub fn measure_changed_drift(
    model: &ActivityModel,
    r: f64,
    rho: f64,
    j: f64,
) -> impl Fn(f64, f64) -> f64 + '_ {
    model.measure_changed_drift(r, rho, j)
}
