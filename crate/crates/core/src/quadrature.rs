//! Gauss–Legendre rules and composite panel helpers.

use std::f64::consts::PI;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Newton iteration from the Chebyshev-like initial guess.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let dp = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, dp)
}

/// A composite rule: concatenated nodes and weights.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    /// Gauss–Legendre panels of equal width covering [a, b].
    pub fn panels(a: f64, b: f64, n_panels: usize, order: usize) -> Rule {
        let mut rule = Rule::default();
        if b <= a || n_panels == 0 {
            return rule;
        }
        let (x, w) = gauss_legendre(order);
        let h = (b - a) / n_panels as f64;
        for p in 0..n_panels {
            let lo = a + p as f64 * h;
            for (xi, wi) in x.iter().zip(&w) {
                rule.nodes.push(lo + 0.5 * h * (xi + 1.0));
                rule.weights.push(0.5 * h * wi);
            }
        }
        rule
    }

    /// Gauss–Legendre panels on arbitrary breakpoints.
    pub fn on_breaks(breaks: &[f64], order: usize) -> Rule {
        let (x, w) = gauss_legendre(order);
        let mut rule = Rule::default();
        for pair in breaks.windows(2) {
            let (lo, hi) = (pair[0], pair[1]);
            if hi <= lo {
                continue;
            }
            let h = hi - lo;
            for (xi, wi) in x.iter().zip(&w) {
                rule.nodes.push(lo + 0.5 * h * (xi + 1.0));
                rule.weights.push(0.5 * h * wi);
            }
        }
        rule
    }

    pub fn extend(&mut self, other: Rule) {
        self.nodes.extend(other.nodes);
        self.weights.extend(other.weights);
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// Trapezoid nodes on [0, x_max] with the half weight at 0, used for
/// frequency integrals whose integrand is Hermitian.
pub fn half_line_trapezoid(step: f64, n: usize) -> Rule {
    let mut rule = Rule::default();
    for k in 0..n {
        rule.nodes.push(k as f64 * step);
        rule.weights.push(if k == 0 { 0.5 * step } else { step });
    }
    rule
}

/// Symmetric trapezoid nodes on [-n·step, n·step].
pub fn symmetric_trapezoid(step: f64, n: usize) -> Rule {
    let mut rule = Rule::default();
    for k in -(n as i64)..=(n as i64) {
        rule.nodes.push(k as f64 * step);
        rule.weights.push(step);
    }
    rule
}

/// Adaptive integration of `f` over [a, b] by recursive Gauss–Legendre
/// panel bisection; the error estimate compares a panel against its halves.
pub fn adaptive(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> (f64, f64) {
    let (x, w) = gauss_legendre(10);
    let panel = |lo: f64, hi: f64| -> f64 {
        let h = 0.5 * (hi - lo);
        let c = 0.5 * (hi + lo);
        x.iter().zip(&w).map(|(xi, wi)| wi * f(c + h * xi)).sum::<f64>() * h
    };
    let mut stack = vec![(a, b, panel(a, b), 0usize)];
    let mut total = 0.0;
    let mut err = 0.0;
    while let Some((lo, hi, whole, depth)) = stack.pop() {
        let mid = 0.5 * (lo + hi);
        let left = panel(lo, mid);
        let right = panel(mid, hi);
        let diff = (left + right - whole).abs();
        if diff <= tol.max(1e-15 * (left + right).abs()) || depth > 40 {
            total += left + right;
            err += diff;
        } else {
            stack.push((lo, mid, left, depth + 1));
            stack.push((mid, hi, right, depth + 1));
        }
    }
    (total, err)
}
