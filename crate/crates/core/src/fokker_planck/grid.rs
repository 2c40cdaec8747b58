use crate::activity::ActivityModel;
use crate::error::{EngineError, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Stretching {
    Uniform,
    /// Nodes packed around `v0`; larger `intensity` packs harder.
    SinhClustered { intensity: f64 },
}

/// Node positions and control-volume weights on one axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Axis {
    pub fn from_nodes(nodes: Vec<f64>) -> Self {
        let n = nodes.len();
        let mut weights = vec![0.0; n];
        for i in 0..n {
            let lo = if i == 0 { nodes[0] } else { 0.5 * (nodes[i - 1] + nodes[i]) };
            let hi = if i + 1 == n { nodes[n - 1] } else { 0.5 * (nodes[i] + nodes[i + 1]) };
            weights[i] = hi - lo;
        }
        Self { nodes, weights }
    }

    pub fn uniform(lo: f64, hi: f64, n: usize) -> Self {
        let h = (hi - lo) / (n - 1) as f64;
        Self::from_nodes((0..n).map(|i| lo + i as f64 * h).collect())
    }

    /// Cell-centred axis with spacing `h`, first centre at `lo` and full-cell weights.
    pub fn cells(lo: f64, h: f64, n: usize) -> Self {
        Self { nodes: (0..n).map(|k| lo + k as f64 * h).collect(), weights: vec![h; n] }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn lo(&self) -> f64 {
        self.nodes[0]
    }

    pub fn hi(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    /// Index `i` with `nodes[i] <= x < nodes[i+1]`.
    pub fn bracket(&self, x: f64) -> Option<usize> {
        if x < self.lo() || x >= self.hi() {
            return None;
        }
        let i = self.nodes.partition_point(|&v| v <= x);
        Some(i - 1)
    }
}

/// Rate axis plus the optional clock (y) and Brownian (z) axes of the
/// multi-dimensional solvers.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialGrid {
    pub x: Axis,
    pub y: Option<Axis>,
    pub z: Option<Axis>,
    pub stretching: Stretching,
}

impl SpatialGrid {
    pub fn rate_axis(x_min: f64, x_max: f64, n_x: usize, stretching: Stretching, v0: f64) -> Result<Self> {
        if n_x < 16 {
            return Err(EngineError::Config(format!("rate axis needs at least 16 nodes, got {n_x}")));
        }
        if !(x_min >= 0.0 && x_min < v0 && v0 < x_max) {
            return Err(EngineError::Config(format!(
                "rate axis [{x_min}, {x_max}] must contain v0={v0} strictly inside"
            )));
        }
        let nodes: Vec<f64> = match stretching {
            Stretching::Uniform => Axis::uniform(x_min, x_max, n_x).nodes,
            Stretching::SinhClustered { intensity } => {
                let c = (x_max - x_min) / intensity.max(1e-6);
                let a = ((x_min - v0) / c).asinh();
                let b = ((x_max - v0) / c).asinh();
                (0..n_x)
                    .map(|i| {
                        let u = i as f64 / (n_x - 1) as f64;
                        v0 + c * (a + (b - a) * u).sinh()
                    })
                    .collect()
            }
        };
        let mut nodes = nodes;
        nodes[0] = x_min;
        nodes[n_x - 1] = x_max;
        Ok(Self { x: Axis::from_nodes(nodes), y: None, z: None, stretching })
    }

    /// Uniform rate axis on `[0, x_max]` with `x_max` from the model's tail bound.
    pub fn for_model(model: &ActivityModel, horizon: f64, n_x: usize) -> Result<Self> {
        let x_max = model.rate_upper_bound(horizon, 1e-10);
        Self::rate_axis(0.0, x_max, n_x, Stretching::Uniform, model.v0)
    }

    pub fn with_y(mut self, y: Axis) -> Self {
        self.y = Some(y);
        self
    }

    pub fn with_z(mut self, z: Axis) -> Self {
        self.z = Some(z);
        self
    }

    pub fn n_x(&self) -> usize {
        self.x.len()
    }
}
