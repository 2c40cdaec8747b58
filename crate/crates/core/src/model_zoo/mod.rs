//! Two-factor returns `Y_t = X^c_{T^c_t} + X^j_{T^j_t}` with
//!
//! * `X^c_s = a^c_1 s + a^c_2 B^c_s + a^c_3 B^j_s + a^c_4 W^c_s`,
//! * `X^j_s = a^j_1 J_s + a^j_2 W^j_{J_s}`,
//!
//! where the jump clock rate is driven by `B^j` and the continuous clock
//! rate by `√(1−ρ²)B^c + ρB^j`. The continuous clock carries the ε floor.

mod laplace;

pub use laplace::{
    continuous_factor, jump_exponent, jump_part_conditional_laplace, laplace_Y_sv14, laplace_Y_sv2,
    laplace_Y_sv2_with, laplace_Y_sv3, laplace_continuous_part, laplace_two_factor, ContinuousFactor,
    Sv2Route,
};

use crate::activity::{ActivityModel, RateDynamics};
use crate::error::{EngineError, Result};
use crate::levy::SubordinatorSpec;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SVVariant {
    /// Stochastic clock on the continuous part only.
    Sv1,
    /// Stochastic clock on the jump part only.
    Sv2,
    /// One clock shared by both parts.
    Sv3,
    /// Two clocks with independent drivers.
    Sv4,
}

impl SVVariant {
    pub const ALL: [SVVariant; 4] = [SVVariant::Sv1, SVVariant::Sv2, SVVariant::Sv3, SVVariant::Sv4];

    pub fn name(self) -> &'static str {
        match self {
            SVVariant::Sv1 => "sv1",
            SVVariant::Sv2 => "sv2",
            SVVariant::Sv3 => "sv3",
            SVVariant::Sv4 => "sv4",
        }
    }

    /// Correlation forced by the variant.
    pub fn pinned_rho(self) -> f64 {
        match self {
            SVVariant::Sv3 => 1.0,
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoFactorModel {
    /// `a^c_1..a^c_4`.
    pub a_c: [f64; 4],
    /// `a^j_1, a^j_2`.
    pub a_j: [f64; 2],
    /// `T^c`; its `eps` is the floor.
    pub continuous_clock: ActivityModel,
    /// `T^j`.
    pub jump_clock: ActivityModel,
    pub rho: f64,
    pub spec: SubordinatorSpec,
    #[serde(default)]
    pub rate_int: f64,
    #[serde(default)]
    pub dividend: f64,
    /// Both parts run on the jump clock.
    #[serde(default)]
    pub shared_clock: bool,
    /// Require `a^c_4 ≠ 0` whenever the floor is positive.
    #[serde(default)]
    pub no_arbitrage: bool,
    #[serde(default)]
    pub variant: Option<SVVariant>,
}

/// Parameters a variant leaves free. Supplying a pinned one with a
/// conflicting value is an error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FreeParams {
    pub a_c: [f64; 4],
    pub a_j: [f64; 2],
    #[serde(default)]
    pub continuous_clock: Option<ActivityModel>,
    #[serde(default)]
    pub jump_clock: Option<ActivityModel>,
    #[serde(default)]
    pub rho: Option<f64>,
    pub spec: SubordinatorSpec,
    #[serde(default)]
    pub rate_int: f64,
    #[serde(default)]
    pub dividend: f64,
    #[serde(default)]
    pub no_arbitrage: bool,
}

fn pin_error(tag: SVVariant, pin: &str) -> EngineError {
    EngineError::Config(format!("{} pins {pin}", tag.name()))
}

/// Unit rate with no randomness.
fn is_unit_constant(m: &ActivityModel) -> bool {
    m.v0 == 1.0 && m.sigma() == 0.0
}

fn unit_clock(eps: f64) -> ActivityModel {
    ActivityModel { dynamics: RateDynamics::Deterministic, v0: 1.0, eps }
}

pub fn build_sv_variant(tag: SVVariant, free: FreeParams) -> Result<TwoFactorModel> {
    let rho = tag.pinned_rho();
    if let Some(r) = free.rho {
        if r != rho {
            return Err(pin_error(tag, &format!("rho = {rho}, got {r}")));
        }
    }
    let require = |m: Option<ActivityModel>, which: &str| {
        m.ok_or_else(|| EngineError::Config(format!("{} needs a {which} clock", tag.name())))
    };
    let (continuous_clock, jump_clock, shared_clock) = match tag {
        SVVariant::Sv1 => {
            if let Some(j) = free.jump_clock {
                if !(is_unit_constant(&j) && j.eps == 0.0) {
                    return Err(pin_error(tag, "the jump clock to T^j_t = t (zero rate drift and volatility, v0 = 1)"));
                }
            }
            (require(free.continuous_clock, "continuous")?, unit_clock(0.0), false)
        }
        SVVariant::Sv2 => {
            let c = match free.continuous_clock {
                Some(c) if is_unit_constant(&c) => unit_clock(c.eps),
                Some(_) => {
                    return Err(pin_error(tag, "the continuous clock rate to 1 (zero rate drift and volatility, v0 = 1)"))
                }
                None => unit_clock(0.0),
            };
            if free.a_c[1] != 0.0 {
                return Err(pin_error(tag, "a_c2 = 0"));
            }
            (c, require(free.jump_clock, "jump")?, false)
        }
        SVVariant::Sv3 => {
            let j = require(free.jump_clock, "jump")?;
            if let Some(c) = free.continuous_clock {
                if c != j {
                    return Err(pin_error(tag, "the continuous clock to the jump clock"));
                }
            }
            if free.a_c[1] != 0.0 {
                return Err(pin_error(tag, "a_c2 = 0"));
            }
            (j, j, true)
        }
        SVVariant::Sv4 => (require(free.continuous_clock, "continuous")?, require(free.jump_clock, "jump")?, false),
    };
    let model = TwoFactorModel {
        a_c: free.a_c,
        a_j: free.a_j,
        continuous_clock,
        jump_clock,
        rho,
        spec: free.spec,
        rate_int: free.rate_int,
        dividend: free.dividend,
        shared_clock,
        no_arbitrage: free.no_arbitrage,
        variant: Some(tag),
    };
    model.validate()?;
    Ok(model)
}

impl TwoFactorModel {
    pub fn validate(&self) -> Result<()> {
        self.continuous_clock.validate()?;
        self.jump_clock.validate()?;
        self.spec.validate()?;
        if !(self.rho.abs() <= 1.0) {
            return Err(EngineError::Config(format!("rho must lie in [-1, 1], got {}", self.rho)));
        }
        let finite = self.a_c.iter().chain(&self.a_j).chain([&self.rate_int, &self.dividend]).all(|v| v.is_finite());
        if !finite {
            return Err(EngineError::Config("loadings and rates must be finite".into()));
        }
        if self.jump_clock.eps != 0.0 {
            return Err(EngineError::Config("the floor belongs to the continuous clock; jump_clock.eps must be 0".into()));
        }
        if self.shared_clock && self.continuous_clock != self.jump_clock {
            return Err(EngineError::Config("a shared clock needs identical continuous and jump clocks".into()));
        }
        if self.no_arbitrage && self.continuous_clock.eps > 0.0 && self.a_c[3] == 0.0 {
            return Err(EngineError::Config("a positive floor needs a_c4 != 0".into()));
        }
        if let Some(tag) = self.variant {
            self.check_pins(tag)?;
        }
        Ok(())
    }

    fn check_pins(&self, tag: SVVariant) -> Result<()> {
        if self.rho != tag.pinned_rho() {
            return Err(pin_error(tag, &format!("rho = {}, got {}", tag.pinned_rho(), self.rho)));
        }
        match tag {
            SVVariant::Sv1 if !is_unit_constant(&self.jump_clock) => Err(pin_error(tag, "the jump clock to T^j_t = t")),
            SVVariant::Sv2 if !is_unit_constant(&self.continuous_clock) => {
                Err(pin_error(tag, "the continuous clock rate to 1"))
            }
            SVVariant::Sv2 | SVVariant::Sv3 if self.a_c[1] != 0.0 => Err(pin_error(tag, "a_c2 = 0")),
            SVVariant::Sv3 if !self.shared_clock => Err(pin_error(tag, "one shared clock")),
            _ => Ok(()),
        }
    }

    /// `S_t = S_0 e^{(r_int − δ)t + Y_t}`.
    pub fn price(&self, s0: f64, t: f64, y: f64) -> f64 {
        s0 * ((self.rate_int - self.dividend) * t + y).exp()
    }

    /// Inverse of [`price`](Self::price) in `Y_t`.
    pub fn log_return(&self, s0: f64, t: f64, s: f64) -> f64 {
        (s / s0).ln() - (self.rate_int - self.dividend) * t
    }

    /// `T^j` independent of `(X^c, T^c)`.
    pub fn jump_part_independent(&self) -> bool {
        self.rho == 0.0 && !self.shared_clock && (self.a_c[2] == 0.0 || self.jump_clock.is_deterministic())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn free() -> FreeParams {
        FreeParams {
            a_c: [0.05, 0.0, 0.2, 0.1],
            a_j: [-0.1, 0.2],
            continuous_clock: None,
            jump_clock: Some(ActivityModel::cir(1.0, 0.5)),
            rho: None,
            spec: SubordinatorSpec::gamma(0.2),
            rate_int: 0.0,
            dividend: 0.0,
            no_arbitrage: false,
        }
    }

    #[test]
    fn sv1_rejects_a_jump_clock() {
        let mut f = free();
        f.continuous_clock = Some(ActivityModel::cir(1.0, 0.5));
        let err = build_sv_variant(SVVariant::Sv1, f.clone()).unwrap_err();
        assert!(err.is_config() && err.to_string().contains("jump clock"), "{err}");
        f.jump_clock = None;
        let m = build_sv_variant(SVVariant::Sv1, f).unwrap();
        assert!(m.jump_clock.is_deterministic() && m.jump_clock.v0 == 1.0 && m.rho == 0.0);
    }

    #[test]
    fn sv4_rejects_correlation() {
        let mut f = free();
        f.continuous_clock = Some(ActivityModel::cir(1.0, 0.5));
        f.rho = Some(0.3);
        let err = build_sv_variant(SVVariant::Sv4, f).unwrap_err();
        assert!(matches!(err, EngineError::Config(ref s) if s.contains("rho")), "{err}");
    }

    #[test]
    fn sv3_shares_the_clock() {
        let m = build_sv_variant(SVVariant::Sv3, free()).unwrap();
        assert!(m.shared_clock && m.continuous_clock == m.jump_clock && m.rho == 1.0);
        let mut f = free();
        f.continuous_clock = Some(ActivityModel::cir(2.0, 0.5));
        assert!(build_sv_variant(SVVariant::Sv3, f).is_err());
    }

    #[test]
    fn sv2_pins_the_continuous_clock_and_a2() {
        let m = build_sv_variant(SVVariant::Sv2, free()).unwrap();
        assert!(m.continuous_clock.is_deterministic() && m.a_c[1] == 0.0 && m.rho == 0.0);
        let mut f = free();
        f.a_c[1] = 0.1;
        assert!(build_sv_variant(SVVariant::Sv2, f).unwrap_err().to_string().contains("a_c2"));
        let mut f = free();
        f.continuous_clock = Some(ActivityModel::deterministic().with_eps(0.3));
        assert_eq!(build_sv_variant(SVVariant::Sv2, f).unwrap().continuous_clock.eps, 0.3);
    }

    #[test]
    fn pins_are_checked_on_deserialised_models() {
        let mut m = build_sv_variant(SVVariant::Sv2, free()).unwrap();
        m.rho = 0.5;
        assert!(m.validate().is_err());
    }

    #[test]
    fn floor_needs_orthogonal_loading_when_asked() {
        let mut m = build_sv_variant(SVVariant::Sv2, free()).unwrap();
        m.continuous_clock.eps = 0.2;
        m.a_c[3] = 0.0;
        assert!(m.validate().is_ok());
        m.no_arbitrage = true;
        assert!(m.validate().is_err());
    }

    #[test]
    fn price_map_round_trips() {
        let mut m = build_sv_variant(SVVariant::Sv2, free()).unwrap();
        m.rate_int = 0.03;
        m.dividend = 0.01;
        let s = m.price(100.0, 2.0, -0.123);
        assert!((m.log_return(100.0, 2.0, s) + 0.123).abs() < 1e-14);
    }
}
