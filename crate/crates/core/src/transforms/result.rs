use crate::error::{EngineError, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransformKind {
    Pdf,
    Laplace,
    Cf,
}

/// Where the frequency and subordinated-time integrals were cut, and how much
/// was estimated to be lost there.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Truncation {
    pub xi_step: f64,
    pub xi_max: f64,
    pub xi_nodes: usize,
    pub zeta_step: f64,
    pub zeta_max: f64,
    pub j_max: f64,
    pub j_nodes: usize,
    pub y_window: f64,
    pub estimated_error: f64,
    /// Largest imaginary part discarded when a real density was extracted.
    pub imag_residue: f64,
    pub route: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformResult {
    pub kind: TransformKind,
    pub arguments: Vec<f64>,
    #[serde(with = "complex_vec")]
    pub values: Vec<Complex64>,
    pub truncation: Truncation,
    /// Distribution function on the same grid (pdf kind only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cdf: Option<Vec<f64>>,
}

impl TransformResult {
    pub fn new(kind: TransformKind, arguments: Vec<f64>, values: Vec<Complex64>, truncation: Truncation) -> Self {
        Self { kind, arguments, values, truncation, cdf: None }
    }

    pub fn real(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    /// Trapezoid mass of a pdf on its (not necessarily uniform) grid.
    pub fn mass(&self) -> f64 {
        self.arguments
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(a, v)| 0.5 * (a[1] - a[0]) * (v[0].re + v[1].re))
            .sum()
    }

    /// Trapezoid mean of a pdf.
    pub fn mean(&self) -> f64 {
        self.arguments
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(a, v)| 0.5 * (a[1] - a[0]) * (a[0] * v[0].re + a[1] * v[1].re))
            .sum()
    }

    /// Fills `cdf` by cumulative trapezoid integration of the density.
    pub fn with_cdf(mut self) -> Self {
        let mut acc = 0.0;
        let mut cdf = Vec::with_capacity(self.values.len());
        cdf.push(0.0);
        for (a, v) in self.arguments.windows(2).zip(self.values.windows(2)) {
            acc += 0.5 * (a[1] - a[0]) * (v[0].re + v[1].re);
            cdf.push(acc);
        }
        self.cdf = Some(cdf);
        self
    }

    /// Linear interpolation of the stored distribution function, clamped to [0, 1].
    pub fn cdf_at(&self, x: f64) -> Option<f64> {
        let cdf = self.cdf.as_ref()?;
        let a = &self.arguments;
        if x <= a[0] {
            return Some(0.0);
        }
        if x >= a[a.len() - 1] {
            return Some(cdf[cdf.len() - 1].clamp(0.0, 1.0));
        }
        let i = a.partition_point(|&v| v <= x) - 1;
        let w = (x - a[i]) / (a[i + 1] - a[i]);
        Some(((1.0 - w) * cdf[i] + w * cdf[i + 1]).clamp(0.0, 1.0))
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("argument,real,imag\n");
        for (a, v) in self.arguments.iter().zip(&self.values) {
            writeln!(s, "{a:.16e},{:.16e},{:.16e}", v.re, v.im).unwrap();
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("transform results serialise")
    }

    /// Writes `<stem>.csv` and `<stem>.json` into `dir`.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<()> {
        let io = |e: std::io::Error| EngineError::Config(format!("cannot write {stem}: {e}"));
        std::fs::create_dir_all(dir).map_err(io)?;
        std::fs::write(dir.join(format!("{stem}.csv")), self.to_csv()).map_err(io)?;
        std::fs::write(dir.join(format!("{stem}.json")), self.to_json()).map_err(io)?;
        Ok(())
    }
}

mod complex_vec {
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Parts {
        real: Vec<f64>,
        imag: Vec<f64>,
    }

    pub fn serialize<S: Serializer>(v: &[Complex64], s: S) -> Result<S::Ok, S::Error> {
        Parts { real: v.iter().map(|c| c.re).collect(), imag: v.iter().map(|c| c.im).collect() }.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Complex64>, D::Error> {
        let p = Parts::deserialize(d)?;
        Ok(p.real.into_iter().zip(p.imag).map(|(re, im)| Complex64::new(re, im)).collect())
    }
}
