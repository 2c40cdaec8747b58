use super::empirical::EmpiricalDistribution;
use crate::error::{EngineError, Result};
use crate::transforms::{TransformKind, TransformResult};
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentGap {
    pub name: String,
    pub analytic: f64,
    pub empirical: f64,
    pub stderr: f64,
}

impl MomentGap {
    /// Gap in units of the empirical standard error.
    pub fn z_score(&self) -> f64 {
        (self.empirical - self.analytic).abs() / self.stderr.max(f64::MIN_POSITIVE)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub kind: TransformKind,
    pub n_samples: usize,
    /// `max |F(x_i) − F_n(x_i)|` over the sample values.
    pub kolmogorov_smirnov: Option<f64>,
    /// `∫|f_KDE − f|` over the analytic grid.
    pub l1_density: Option<f64>,
    pub max_cf_error: Option<f64>,
    pub max_laplace_rel_error: Option<f64>,
    /// Largest standard error of the empirical transform estimates.
    pub max_stderr: Option<f64>,
    pub moment_gaps: Vec<MomentGap>,
}

/// Pairs an empirical law with a transform-pipeline result of any kind.
pub fn compare(empirical: &EmpiricalDistribution, analytic: &TransformResult) -> Result<ComparisonReport> {
    let args = &analytic.arguments;
    let min = if analytic.kind == TransformKind::Pdf { 2 } else { 1 };
    if args.len() < min || args.len() != analytic.values.len() {
        return Err(EngineError::Config(format!("analytic result needs at least {min} arguments with matching values")));
    }
    let mut report = ComparisonReport {
        kind: analytic.kind,
        n_samples: empirical.len(),
        kolmogorov_smirnov: None,
        l1_density: None,
        max_cf_error: None,
        max_laplace_rel_error: None,
        max_stderr: None,
        moment_gaps: Vec::new(),
    };
    match analytic.kind {
        TransformKind::Pdf => compare_pdf(empirical, analytic, &mut report)?,
        TransformKind::Cf => {
            let (mut err, mut se) = (0.0f64, 0.0f64);
            for (&theta, v) in args.iter().zip(&analytic.values) {
                let (c, s) = empirical.cf(theta);
                err = err.max((c - v).norm());
                se = se.max(s);
            }
            report.max_cf_error = Some(err);
            report.max_stderr = Some(se);
        }
        TransformKind::Laplace => {
            let (mut err, mut se) = (0.0f64, 0.0f64);
            for (&r, v) in args.iter().zip(&analytic.values) {
                let (l, s) = empirical.laplace(r);
                err = err.max((l - v.re).abs() / v.re.abs());
                se = se.max(s / v.re.abs());
            }
            report.max_laplace_rel_error = Some(err);
            report.max_stderr = Some(se);
        }
    }
    Ok(report)
}

fn compare_pdf(empirical: &EmpiricalDistribution, analytic: &TransformResult, report: &mut ComparisonReport) -> Result<()> {
    let args = &analytic.arguments;
    let (lo, hi) = (args[0], args[args.len() - 1]);
    let inside = empirical.ecdf(hi) - empirical.ecdf(lo);
    if inside < 0.99 {
        return Err(EngineError::Config(format!(
            "the density grid [{lo}, {hi}] covers only {:.1}% of the sample",
            100.0 * inside
        )));
    }
    let with_cdf;
    let result = if analytic.cdf.is_some() {
        analytic
    } else {
        with_cdf = analytic.clone().with_cdf();
        &with_cdf
    };
    let x = empirical.samples();
    let n = x.len() as f64;
    let mut ks = 0.0f64;
    let mut i = 0;
    while i < x.len() {
        let mut k = i;
        while k + 1 < x.len() && x[k + 1] == x[i] {
            k += 1;
        }
        let f = result.cdf_at(x[i]).expect("cdf present");
        ks = ks.max((f - (k + 1) as f64 / n).abs());
        i = k + 1;
    }
    report.kolmogorov_smirnov = Some(ks);
    let diff: Vec<f64> = args.iter().zip(&analytic.values).map(|(&y, v)| (empirical.kde(y) - v.re).abs()).collect();
    report.l1_density = Some(args.windows(2).zip(diff.windows(2)).map(|(a, d)| 0.5 * (a[1] - a[0]) * (d[0] + d[1])).sum());
    let mass = analytic.mass();
    let mean = analytic.mean() / mass;
    let second: f64 = args
        .windows(2)
        .zip(analytic.values.windows(2))
        .map(|(a, v)| 0.5 * (a[1] - a[0]) * ((a[0] - mean).powi(2) * v[0].re + (a[1] - mean).powi(2) * v[1].re))
        .sum::<f64>()
        / mass;
    report.moment_gaps = vec![
        MomentGap { name: "mean".into(), analytic: mean, empirical: empirical.mean(), stderr: empirical.mean_stderr() },
        MomentGap {
            name: "variance".into(),
            analytic: second,
            empirical: empirical.variance(),
            stderr: empirical.variance_stderr(),
        },
    ];
    Ok(())
}
