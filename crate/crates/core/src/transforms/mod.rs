//! Transforms of `Y_t = αJ_{T_t} + βZ_{J_{T_t}}`: Laplace transform and
//! characteristic function through the tilted clock, densities through the
//! joint law of `(T_t, B_j)`, and the conditioning formulas that hold when
//! the Brownian parts are independent of the clock.
//!
//! Every integral over the clock value `y` lives on the window
//! `[0, (x_max + ε)t]`, which contains all clock values the discrete rate
//! dynamics can produce. The ξ trapezoid step is chosen so that this window
//! does not alias.

mod density;
pub(crate) mod engine;
mod laplace;
mod result;

pub use density::{
    cf_Y_joint, joint_cf_T_B, joint_density_T_B, pdf_Y, pdf_Z, pdf_subordinated_clock, JointDensity, SubordinatedLaw,
};
pub use laplace::{
    cf_Y, cf_Y_grid, cf_Y_independent, cf_Z, cf_factored, cf_tilted_clock, laplace_Y, laplace_Y_grid,
    laplace_Y_independent, laplace_Z, laplace_Z_grid, TiltRoute,
};
pub use result::{TransformKind, TransformResult, Truncation};

use serde::{Deserialize, Serialize};

/// Below this |ρ| the densities use the independent-case route.
pub const RHO_CROSSOVER: f64 = 1e-3;

/// Grid and truncation knobs shared by every transform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransformNumerics {
    /// Rate nodes of every 1-D solve.
    pub n_x: usize,
    /// Rate nodes for the joint `(T_t, B_j)` density, whose transforms
    /// oscillate in the rate variable at the scale of `1/η`.
    pub joint_n_x: usize,
    /// Fixed rate-axis edge; by default sized from the tail of the rate law.
    pub x_max: Option<f64>,
    /// Mass the tilted rate density may lose through the right edge.
    pub rate_tail: f64,
    pub dt: f64,
    /// Relative size of the last ξ batch at which the sum stops.
    pub xi_tol: f64,
    pub max_xi_nodes: usize,
    /// Largest amount the last batch of 8 frequencies may add to a density value.
    pub zeta_tol: f64,
    pub max_zeta_nodes: usize,
    /// Gauss–Legendre order of the j panels.
    pub j_order: usize,
    /// Number of dyadic panels refining `(0, t)` towards 0.
    pub j_grading: usize,
    /// Panel width on `[t, j_max]`.
    pub j_panel: f64,
    /// Clock-axis cell size of the 2-D tilted solver.
    pub plane_dy: f64,
    /// Half-width of the return window used to space the density frequencies.
    pub return_half_width: Option<f64>,
}

impl Default for TransformNumerics {
    fn default() -> Self {
        Self {
            n_x: 161,
            joint_n_x: 641,
            x_max: None,
            rate_tail: 1e-10,
            dt: 5e-3,
            xi_tol: 1e-10,
            max_xi_nodes: 160,
            zeta_tol: 1e-6,
            max_zeta_nodes: 400,
            j_order: 8,
            j_grading: 10,
            j_panel: 0.25,
            plane_dy: 0.005,
            return_half_width: None,
        }
    }
}

impl TransformNumerics {
    pub fn validate(&self) -> crate::Result<()> {
        let bad = |m: &str| Err(crate::EngineError::Config(m.into()));
        if self.n_x < 16 || self.joint_n_x < 16 {
            return bad("numerics.n_x and numerics.joint_n_x must be at least 16");
        }
        if !(self.dt > 0.0) {
            return bad("numerics.dt must be positive");
        }
        if !(self.xi_tol > 0.0 && self.zeta_tol > 0.0 && self.rate_tail > 0.0) {
            return bad("numerics tolerances must be positive");
        }
        if self.j_order < 2 || !(self.j_panel > 0.0) || !(self.plane_dy > 0.0) {
            return bad("numerics.j_order must be >= 2 and panel sizes positive");
        }
        if self.max_xi_nodes < 8 || self.max_zeta_nodes < 8 {
            return bad("numerics node caps must be at least 8");
        }
        Ok(())
    }
}
