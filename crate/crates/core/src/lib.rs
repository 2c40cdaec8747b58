//! Densities, Laplace transforms and characteristic functions of
//! correlated time-changed Lévy processes `Y_t = αJ_{T_t} + βZ_{J_{T_t}}`,
//! where `T` is an integrated activity rate driven by `B` and
//! `Z = ρB + √(1−ρ²)W`.

// `!(x > 0.0)` is the NaN-rejecting guard used throughout parameter checks
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments)]

pub mod activity;
pub mod cli;
pub mod error;
pub mod fokker_planck;
pub mod levy;
pub mod model_zoo;
pub mod montecarlo;
pub mod quadrature;
pub mod rng;
pub mod transforms;

pub use error::{EngineError, Result};
