use super::grid::SpatialGrid;
use crate::error::{EngineError, Result};
use num_complex::Complex64;
use std::io::Write;
use std::path::Path;

/// Solution snapshot. Values are stored x-fastest: index `i + n_x·(k + n_y·l)`
/// for rate node `i`, clock node `k`, Brownian node `l`.
#[derive(Debug, Clone, PartialEq)]
pub struct PDEField {
    pub shape: [usize; 3],
    pub values: Vec<Complex64>,
    pub time: f64,
    pub fourier_node: Option<(f64, f64)>,
    pub mass: Complex64,
}

impl PDEField {
    pub(crate) fn line(grid: &SpatialGrid, unknowns: &[Complex64], time: f64, node: Option<(f64, f64)>) -> Self {
        let mut values = unknowns.to_vec();
        values.resize(grid.n_x(), Complex64::new(0.0, 0.0));
        let mass = values.iter().zip(&grid.x.weights).map(|(v, w)| v * w).sum();
        Self { shape: [grid.n_x(), 1, 1], values, time, fourier_node: node, mass }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    /// `∫ f(x) q(x) dx` for a rate-only field.
    pub fn integrate_rate(&self, grid: &SpatialGrid, f: impl Fn(f64) -> Complex64) -> Complex64 {
        self.values
            .iter()
            .zip(&grid.x.weights)
            .zip(&grid.x.nodes)
            .map(|((v, w), &x)| v * w * f(x))
            .sum()
    }

    /// Writes `<stem>.bin` and `<stem>.manifest`.
    ///
    /// Binary layout, all little endian: magic `TCLF`, u32 version (1),
    /// u32 n_x, u32 n_y, u32 n_z, f64 time, u8 has_fourier_node,
    /// f64 ξ, f64 η, then the n_x rate nodes as f64, then n_y clock nodes and
    /// n_z Brownian nodes when present, then the values as (re, im) f64 pairs.
    pub fn write_dump(&self, grid: &SpatialGrid, dir: &Path, stem: &str) -> Result<()> {
        let io = |e: std::io::Error| EngineError::Config(format!("cannot write dump {stem}: {e}"));
        std::fs::create_dir_all(dir).map_err(io)?;
        let mut buf: Vec<u8> = Vec::with_capacity(64 + 16 * self.values.len());
        buf.extend_from_slice(b"TCLF");
        buf.extend_from_slice(&1u32.to_le_bytes());
        for n in self.shape {
            buf.extend_from_slice(&(n as u32).to_le_bytes());
        }
        buf.extend_from_slice(&self.time.to_le_bytes());
        let (xi, eta) = self.fourier_node.unwrap_or((0.0, 0.0));
        buf.push(self.fourier_node.is_some() as u8);
        buf.extend_from_slice(&xi.to_le_bytes());
        buf.extend_from_slice(&eta.to_le_bytes());
        let mut axes = vec![&grid.x.nodes];
        if self.shape[1] > 1 {
            axes.push(&grid.y.as_ref().expect("clock axis").nodes);
        }
        if self.shape[2] > 1 {
            axes.push(&grid.z.as_ref().expect("Brownian axis").nodes);
        }
        for axis in axes {
            for v in axis {
                buf.extend_from_slice(&v.to_le_bytes());
            }
        }
        for v in &self.values {
            buf.extend_from_slice(&v.re.to_le_bytes());
            buf.extend_from_slice(&v.im.to_le_bytes());
        }
        std::fs::write(dir.join(format!("{stem}.bin")), &buf).map_err(io)?;
        let mut m = std::fs::File::create(dir.join(format!("{stem}.manifest"))).map_err(io)?;
        writeln!(m, "format=TCLF-1").map_err(io)?;
        writeln!(m, "shape={}x{}x{}", self.shape[0], self.shape[1], self.shape[2]).map_err(io)?;
        writeln!(m, "time={:.16e}", self.time).map_err(io)?;
        match self.fourier_node {
            Some((xi, eta)) => writeln!(m, "fourier_node={xi:.16e},{eta:.16e}").map_err(io)?,
            None => writeln!(m, "fourier_node=none").map_err(io)?,
        }
        writeln!(m, "mass={:.16e},{:.16e}", self.mass.re, self.mass.im).map_err(io)?;
        writeln!(m, "x_range={:.16e},{:.16e}", grid.x.lo(), grid.x.hi()).map_err(io)?;
        writeln!(m, "bytes={}", buf.len()).map_err(io)?;
        Ok(())
    }
}

/// Reads the binary part of a dump back as (shape, time, values).
pub fn read_dump(path: &Path) -> Result<([usize; 3], f64, Vec<Complex64>)> {
    let bytes = std::fs::read(path).map_err(|e| EngineError::Config(format!("cannot read dump: {e}")))?;
    let bad = || EngineError::Config("malformed dump".into());
    if bytes.len() < 45 || &bytes[0..4] != b"TCLF" {
        return Err(bad());
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as usize;
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let shape = [u32_at(8), u32_at(12), u32_at(16)];
    let time = f64_at(20);
    let mut offset = 45;
    for (d, &n) in shape.iter().enumerate() {
        if d == 0 || n > 1 {
            offset += 8 * n;
        }
    }
    let count = shape[0] * shape[1] * shape[2];
    if bytes.len() != offset + 16 * count {
        return Err(bad());
    }
    let values = (0..count).map(|k| Complex64::new(f64_at(offset + 16 * k), f64_at(offset + 16 * k + 8))).collect();
    Ok((shape, time, values))
}
