//! Affine transform of the clock: `E[e^{u(T_{s+τ} − T_s)} | v_s = x] = exp(A(τ,u) + B(τ,u)·x)`.
//!
//! For the square-root rate the coefficients solve
//! `B' = u − κB + σ²B²/2`, `A' = κB + uε`, `A(0) = B(0) = 0`,
//! integrated here by an adaptive Dormand–Prince 5(4) pair in complex
//! arithmetic. Integrating the ODE directly avoids the branch cuts of the
//! closed-form logarithm.

use super::{ActivityModel, RateDynamics};
use crate::error::{EngineError, Result};
use num_complex::Complex64;

const ABS_TOL: f64 = 1e-10;
const REL_TOL: f64 = 1e-10;

/// `Φ(t, s, ξ, x, y) = constant + rate_coef·x + i·clock_coef·y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineExponent {
    pub constant: Complex64,
    pub rate_coef: Complex64,
    pub clock_coef: f64,
}

impl AffineExponent {
    /// The part of Φ that does not depend on the clock value.
    pub fn phi(&self, x: f64) -> Complex64 {
        self.constant + self.rate_coef * x
    }

    pub fn psi(&self) -> f64 {
        self.clock_coef
    }

    pub fn eval(&self, x: f64, y: f64) -> Complex64 {
        self.phi(x) + Complex64::new(0.0, self.clock_coef * y)
    }
}

/// Conditional characteristic exponent of `T_t` given `(v_s, T_s) = (x, y)`.
pub fn conditional_cf_exponent(model: &ActivityModel, t: f64, s: f64, xi: f64) -> Result<AffineExponent> {
    if s > t {
        return Err(EngineError::Domain(format!("need s <= t, got s={s}, t={t}")));
    }
    let (a, b) = riccati_coefficients(model, Complex64::new(0.0, xi), &[t - s])?[0];
    Ok(AffineExponent { constant: a, rate_coef: b, clock_coef: xi })
}

/// `E e^{u T_t}` for real `u`, started from `v0`.
pub fn clock_mgf(model: &ActivityModel, t: f64, u: f64) -> Result<f64> {
    let (a, b) = riccati_coefficients(model, Complex64::new(u, 0.0), &[t])?[0];
    let v = (a + b * model.v0).exp();
    Ok(v.re)
}

/// Coefficients `(A, B)` at every `τ` in `taus` (any order, all ≥ 0).
pub fn riccati_coefficients(model: &ActivityModel, u: Complex64, taus: &[f64]) -> Result<Vec<(Complex64, Complex64)>> {
    if taus.iter().any(|&tau| !(tau >= 0.0)) {
        return Err(EngineError::Domain("Riccati horizons must be nonnegative".into()));
    }
    let eps = model.eps;
    match model.dynamics {
        RateDynamics::Deterministic => Ok(taus.iter().map(|&tau| (u * eps * tau, u * tau)).collect()),
        RateDynamics::LogNormal { .. } => Err(EngineError::UnsupportedModel(
            "the lognormal rate has no affine transform".into(),
        )),
        RateDynamics::Cir { kappa, sigma } => {
            let half_s2 = 0.5 * sigma * sigma;
            let rhs = |_t: f64, y: &[Complex64], dy: &mut [Complex64]| {
                let b = y[1];
                dy[0] = kappa * b + u * eps;
                dy[1] = u - kappa * b + half_s2 * b * b;
            };
            let states = integrate(rhs, vec![Complex64::new(0.0, 0.0); 2], taus)?;
            Ok(states.into_iter().map(|s| (s[0], s[1])).collect())
        }
    }
}

/// First two moments of `T_t` from the Riccati sensitivities at `u = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClockMoments {
    pub mean: f64,
    pub variance: f64,
}

pub fn clock_moments(model: &ActivityModel, t: f64) -> Result<ClockMoments> {
    let v0 = model.v0;
    let eps = model.eps;
    match model.dynamics {
        RateDynamics::Deterministic => Ok(ClockMoments { mean: (v0 + eps) * t, variance: 0.0 }),
        RateDynamics::LogNormal { .. } => Err(EngineError::UnsupportedModel(
            "moments from the Riccati system need an affine rate".into(),
        )),
        RateDynamics::Cir { kappa, sigma } => {
            // state: (A_u, B_u, A_uu, B_uu), all derivatives at u = 0 where B = 0
            let s2 = sigma * sigma;
            let rhs = |_t: f64, y: &[Complex64], dy: &mut [Complex64]| {
                dy[0] = kappa * y[1] + eps;
                dy[1] = Complex64::new(1.0, 0.0) - kappa * y[1];
                dy[2] = kappa * y[3];
                dy[3] = -kappa * y[3] + s2 * y[1] * y[1];
            };
            let s = integrate(rhs, vec![Complex64::new(0.0, 0.0); 4], &[t])?.remove(0);
            let mean = s[0].re + s[1].re * v0;
            let variance = s[2].re + s[3].re * v0;
            Ok(ClockMoments { mean, variance })
        }
    }
}

// Dormand–Prince 5(4) tableau
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrates `y' = f(t, y)` from 0 and returns the state at each requested time.
fn integrate<F>(f: F, y0: Vec<Complex64>, stops: &[f64]) -> Result<Vec<Vec<Complex64>>>
where
    F: Fn(f64, &[Complex64], &mut [Complex64]),
{
    let n = y0.len();
    let mut order: Vec<usize> = (0..stops.len()).collect();
    order.sort_by(|&a, &b| stops[a].total_cmp(&stops[b]));
    let mut out = vec![Vec::new(); stops.len()];

    let mut t: f64 = 0.0;
    let mut y = y0;
    let mut h: f64 = 1e-3;
    let mut k = vec![vec![Complex64::new(0.0, 0.0); n]; 7];
    let mut tmp = vec![Complex64::new(0.0, 0.0); n];
    let mut y5 = vec![Complex64::new(0.0, 0.0); n];
    let mut steps = 0usize;

    for idx in order {
        let target = stops[idx];
        while t < target {
            let hh = h.min(target - t);
            for stage in 0..7 {
                for i in 0..n {
                    let mut acc = y[i];
                    for (p, kp) in k.iter().enumerate().take(stage) {
                        acc += hh * A[stage][p] * kp[i];
                    }
                    tmp[i] = acc;
                }
                f(t + C[stage] * hh, &tmp, &mut k[stage]);
            }
            let mut err = 0.0f64;
            for i in 0..n {
                let mut s5 = y[i];
                let mut s4 = y[i];
                for s in 0..7 {
                    s5 += hh * B5[s] * k[s][i];
                    s4 += hh * B4[s] * k[s][i];
                }
                y5[i] = s5;
                let scale = ABS_TOL + REL_TOL * y[i].norm().max(s5.norm());
                err = err.max((s5 - s4).norm() / scale);
            }
            if !err.is_finite() || y5.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
                h = 0.25 * hh;
                if h < 1e-14 {
                    return Err(EngineError::Numerics("Riccati solution blew up".into()));
                }
                continue;
            }
            if err <= 1.0 {
                t += hh;
                y.copy_from_slice(&y5);
                if y.iter().any(|v| v.norm() > 1e12) {
                    return Err(EngineError::Numerics(format!(
                        "Riccati solution explodes before tau={target}"
                    )));
                }
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h = hh * factor;
            steps += 1;
            if steps > 1_000_000 {
                return Err(EngineError::Numerics("Riccati step budget exhausted".into()));
            }
        }
        out[idx] = y.clone();
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::Rule;

    /// Closed-form `B(τ)`; `A` comes from quadrature of κB so no logarithm is needed.
    fn closed_form(kappa: f64, sigma: f64, u: Complex64, tau: f64, v0: f64) -> Complex64 {
        let s2 = sigma * sigma;
        let d = (kappa * kappa - 2.0 * s2 * u).sqrt();
        let b = |s: f64| {
            let e = (d * s).exp() - 1.0;
            2.0 * u * e / ((d + kappa) * e + 2.0 * d)
        };
        let rule = Rule::panels(0.0, tau, 20, 16);
        let a: Complex64 = rule.nodes.iter().zip(&rule.weights).map(|(&s, &w)| w * kappa * b(s)).sum();
        (a + b(tau) * v0).exp()
    }

    #[test]
    fn matches_closed_form() {
        let m = ActivityModel::cir(1.0, 0.5);
        for xi in [0.5, 1.0, 2.0, 4.0, 15.0] {
            for tau in [0.25, 1.0, 3.0] {
                let e = conditional_cf_exponent(&m, tau, 0.0, xi).unwrap();
                let got = e.eval(1.0, 0.0).exp();
                let want = closed_form(1.0, 0.5, Complex64::new(0.0, xi), tau, 1.0);
                assert!((got - want).norm() < 1e-9, "xi={xi} tau={tau}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn terminal_data() {
        let m = ActivityModel::cir(1.0, 0.5);
        let e = conditional_cf_exponent(&m, 0.7, 0.7, 3.0).unwrap();
        assert_eq!(e.phi(1.3), Complex64::new(0.0, 0.0));
        assert_eq!(e.psi(), 3.0);
    }

    #[test]
    fn deterministic_clock_adds_elapsed_time() {
        let m = ActivityModel::deterministic();
        let e = conditional_cf_exponent(&m, 1.0, 0.3, 2.0).unwrap();
        let want = Complex64::new(0.0, 2.0 * (0.4 + 0.7));
        assert!((e.eval(1.0, 0.4) - want).norm() < 1e-14);
        // the vanishing-volatility square-root rate approaches the same limit
        let m = ActivityModel::cir(1.0, 1e-8);
        let e = conditional_cf_exponent(&m, 1.0, 0.3, 2.0).unwrap();
        assert!((e.eval(1.0, 0.4) - want).norm() < 1e-9);
    }

    #[test]
    fn moments_of_unit_mean_clock() {
        let m = ActivityModel::cir(1.0, 0.5);
        let mo = clock_moments(&m, 1.0).unwrap();
        assert!((mo.mean - 1.0).abs() < 1e-10);
        // Var T_t = 2∫₀ᵗ Var(v_s)(1 − e^{−κ(t−s)})/κ ds with Var(v_s) = σ²(1 − e^{−2κs})/(2κ) when v0 = 1
        let (k, s2, t) = (1.0f64, 0.25f64, 1.0f64);
        let rule = Rule::panels(0.0, t, 8, 16);
        let var = rule.integrate(|s| {
            2.0 * s2 * (1.0 - (-2.0 * k * s).exp()) / (2.0 * k) * (1.0 - (-k * (t - s)).exp()) / k
        });
        assert!((mo.variance - var).abs() < 1e-9, "{} vs {}", mo.variance, var);
    }

    #[test]
    fn lognormal_is_not_affine() {
        let m = ActivityModel::lognormal(1.0, 0.3);
        assert!(matches!(conditional_cf_exponent(&m, 1.0, 0.0, 1.0), Err(EngineError::UnsupportedModel(_))));
    }
}
