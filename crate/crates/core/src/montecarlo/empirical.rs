use crate::error::{EngineError, Result};
use num_complex::Complex64;
use serde::Serialize;
use statrs::function::erf::erfc;

/// Sum in a fixed pairwise order, independent of thread count.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 64 {
        return xs.iter().sum();
    }
    let (a, b) = xs.split_at(xs.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

fn mean_of(xs: impl Iterator<Item = f64>) -> (f64, f64, usize) {
    let v: Vec<f64> = xs.collect();
    let n = v.len();
    let m = pairwise_sum(&v) / n as f64;
    let sq: Vec<f64> = v.iter().map(|x| (x - m) * (x - m)).collect();
    let var = pairwise_sum(&sq) / (n as f64 - 1.0).max(1.0);
    (m, var, n)
}

/// Sorted sample with moment, CDF, density and transform estimates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalDistribution {
    sorted: Vec<f64>,
    mean: f64,
    variance: f64,
    third: f64,
    fourth: f64,
    bandwidth: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    /// Counts normalised by the total sample size and bin width.
    pub density: Vec<f64>,
}

impl EmpiricalDistribution {
    pub fn new(mut samples: Vec<f64>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(EngineError::Config("an empirical distribution needs at least two samples".into()));
        }
        if samples.iter().any(|x| !x.is_finite()) {
            return Err(EngineError::Numerics("non-finite sample".into()));
        }
        samples.sort_by(f64::total_cmp);
        let n = samples.len() as f64;
        let mean = pairwise_sum(&samples) / n;
        let central = |p: i32| pairwise_sum(&samples.iter().map(|x| (x - mean).powi(p)).collect::<Vec<_>>()) / n;
        let (m2, third, fourth) = (central(2), central(3), central(4));
        let variance = m2 * n / (n - 1.0);
        let q = |p: f64| samples[((p * (n - 1.0)) as usize).min(samples.len() - 1)];
        let iqr = q(0.75) - q(0.25);
        let spread = if iqr > 0.0 { variance.sqrt().min(iqr / 1.34) } else { variance.sqrt() };
        let bandwidth = 0.9 * spread.max(1e-12) * n.powf(-0.2);
        Ok(Self { sorted: samples, mean, variance, third, fourth, bandwidth })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn samples(&self) -> &[f64] {
        &self.sorted
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn mean_stderr(&self) -> f64 {
        (self.variance / self.len() as f64).sqrt()
    }

    /// Standard error of the variance estimate, `√((m₄ − σ⁴)/n)`.
    pub fn variance_stderr(&self) -> f64 {
        ((self.fourth - self.variance * self.variance).max(0.0) / self.len() as f64).sqrt()
    }

    pub fn skewness(&self) -> f64 {
        let m2 = self.variance * (self.len() as f64 - 1.0) / self.len() as f64;
        self.third / m2.powf(1.5)
    }

    /// Standard error of the skewness under a normal sample.
    pub fn skewness_stderr(&self) -> f64 {
        let n = self.len() as f64;
        (6.0 * n * (n - 1.0) / ((n - 2.0) * (n + 1.0) * (n + 3.0))).sqrt()
    }

    /// Silverman's rule-of-thumb Gaussian bandwidth.
    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    /// `#{x_i ≤ x}/n`.
    pub fn ecdf(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&v| v <= x) as f64 / self.len() as f64
    }

    pub fn quantile(&self, p: f64) -> f64 {
        let n = self.len();
        let k = (p.clamp(0.0, 1.0) * (n - 1) as f64).round() as usize;
        self.sorted[k.min(n - 1)]
    }

    pub fn histogram(&self, lo: f64, hi: f64, bins: usize) -> Result<Histogram> {
        if !(hi > lo) || bins == 0 {
            return Err(EngineError::Config(format!("bad histogram range [{lo}, {hi}] with {bins} bins")));
        }
        let width = (hi - lo) / bins as f64;
        let edges: Vec<f64> = (0..=bins).map(|k| lo + width * k as f64).collect();
        let counts: Vec<usize> = edges
            .windows(2)
            .enumerate()
            .map(|(k, e)| {
                let a = self.sorted.partition_point(|&v| v < e[0]);
                let b = if k + 1 == bins {
                    self.sorted.partition_point(|&v| v <= e[1])
                } else {
                    self.sorted.partition_point(|&v| v < e[1])
                };
                b - a
            })
            .collect();
        let n = self.len() as f64;
        let density = counts.iter().map(|&c| c as f64 / (n * width)).collect();
        Ok(Histogram { edges, counts, density })
    }

    /// Gaussian kernel density estimate at `x`, kernels cut at six bandwidths.
    pub fn kde(&self, x: f64) -> f64 {
        let h = self.bandwidth;
        let a = self.sorted.partition_point(|&v| v < x - 6.0 * h);
        let b = self.sorted.partition_point(|&v| v <= x + 6.0 * h);
        let norm = 1.0 / ((2.0 * std::f64::consts::PI).sqrt() * h * self.len() as f64);
        let terms: Vec<f64> = self.sorted[a..b].iter().map(|&v| (-0.5 * ((x - v) / h).powi(2)).exp()).collect();
        pairwise_sum(&terms) * norm
    }

    /// `E e^{iθX}` and the standard error of the estimate.
    pub fn cf(&self, theta: f64) -> (Complex64, f64) {
        let (c, vc, n) = mean_of(self.sorted.iter().map(|x| (theta * x).cos()));
        let (s, vs, _) = mean_of(self.sorted.iter().map(|x| (theta * x).sin()));
        (Complex64::new(c, s), ((vc + vs) / n as f64).sqrt())
    }

    /// `E e^{−rX}` and its standard error.
    pub fn laplace(&self, r: f64) -> (f64, f64) {
        let (m, v, n) = mean_of(self.sorted.iter().map(|x| (-r * x).exp()));
        (m, (v / n as f64).sqrt())
    }
}

fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// 5% critical value of the Anderson–Darling statistic for a fully
/// specified null.
pub const AD_CRITICAL_5PCT: f64 = 2.492;

/// Anderson–Darling statistic `A²` of a sample against `N(mean, sd²)`.
pub fn anderson_darling_normal(sample: &EmpiricalDistribution, mean: f64, sd: f64) -> f64 {
    let x = sample.samples();
    let n = x.len();
    let nf = n as f64;
    let terms: Vec<f64> = (0..n)
        .map(|i| {
            let lo = normal_cdf((x[i] - mean) / sd).clamp(1e-300, 1.0 - 1e-16);
            let hi = normal_cdf((x[n - 1 - i] - mean) / sd).clamp(1e-300, 1.0 - 1e-16);
            (2.0 * i as f64 + 1.0) * (lo.ln() + (1.0 - hi).ln())
        })
        .collect();
    -nf - pairwise_sum(&terms) / nf
}

/// Two-sample Kolmogorov–Smirnov distance.
pub fn two_sample_ks(a: &EmpiricalDistribution, b: &EmpiricalDistribution) -> f64 {
    let (x, y) = (a.samples(), b.samples());
    let (n, m) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < x.len() && j < y.len() {
        let v = x[i].min(y[j]);
        while i < x.len() && x[i] <= v {
            i += 1;
        }
        while j < y.len() && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

/// Asymptotic critical value of the two-sample KS distance at level `alpha`.
pub fn ks_critical_value(n: usize, m: usize, alpha: f64) -> f64 {
    let c = (-(alpha / 2.0).ln() / 2.0).sqrt();
    c * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::aux_rng;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn normals(seed: u64, n: usize) -> EmpiricalDistribution {
        let mut rng = aux_rng(seed, 0);
        EmpiricalDistribution::new((0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()).unwrap()
    }

    #[test]
    fn pairwise_sum_is_exact_on_integers() {
        let xs: Vec<f64> = (1..=1000).map(f64::from).collect();
        assert_eq!(pairwise_sum(&xs), 500500.0);
    }

    #[test]
    fn ecdf_runs_from_zero_to_one() {
        let d = EmpiricalDistribution::new(vec![3.0, 1.0, 2.0, 2.0]).unwrap();
        assert_eq!(d.ecdf(0.0), 0.0);
        assert_eq!(d.ecdf(2.0), 0.75);
        assert_eq!(d.ecdf(9.0), 1.0);
        assert_eq!(d.quantile(0.0), 1.0);
    }

    #[test]
    fn normal_sample_statistics() {
        let d = normals(3, 20000);
        assert!(d.mean().abs() < 4.0 * d.mean_stderr());
        assert!((d.variance() - 1.0).abs() < 4.0 * d.variance_stderr());
        assert!(d.skewness().abs() < 4.0 * d.skewness_stderr());
        assert!(anderson_darling_normal(&d, 0.0, 1.0) < AD_CRITICAL_5PCT);
        assert!(anderson_darling_normal(&d, 0.1, 1.0) > AD_CRITICAL_5PCT);
        let (c, se) = d.cf(1.0);
        assert!((c.re - (-0.5f64).exp()).abs() < 4.0 * se && c.im.abs() < 4.0 * se);
        let (l, se) = d.laplace(0.5);
        assert!((l - 0.125f64.exp()).abs() < 4.0 * se);
        assert!((d.kde(0.0) - 0.398942).abs() < 0.01);
        let h = d.histogram(-1.0, 1.0, 10).unwrap();
        assert!((h.density[5] - 0.3867).abs() < 0.03);
    }

    #[test]
    fn two_sample_ks_of_independent_normals_is_small() {
        let (a, b) = (normals(1, 5000), normals(2, 5000));
        assert!(two_sample_ks(&a, &b) < ks_critical_value(5000, 5000, 0.01));
        assert_eq!(two_sample_ks(&a, &a), 0.0);
    }
}
