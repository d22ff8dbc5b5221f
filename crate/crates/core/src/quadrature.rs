//! Periodic and Gauss quadrature building blocks.
//!
//! * Kress weights for `∫₀^{2π} log(4 sin²((t−s)/2)) f(s) ds` on an
//!   equispaced grid, which make the single-layer operator spectrally
//!   accurate on smooth closed curves.
//! * Trigonometric interpolation and differentiation of nodal values.
//! * Gauss–Legendre rules for line integrals along paths.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::Float;


/// Equispaced periodic nodes `t_j = 2πj/n`.
pub fn periodic_nodes(n: usize) -> Vec<f64> {
    (0..n).map(|j| 2.0 * PI * j as f64 / n as f64).collect()
}

/// Kress weights `R_m`, indexed by node offset `m = (i − j) mod n`
/// (`n` even).
pub fn kress_log_weights(n: usize) -> Vec<f64> {
    assert!(n >= 4 && n % 2 == 0, "Kress quadrature needs an even node count");
    let half = n / 2;
    let hf = half as f64;
    (0..n)
        .map(|m| {
            let tau = 2.0 * PI * m as f64 / n as f64;
            let mut s = 0.0;
            for k in 1..half {
                s += (k as f64 * tau).cos() / k as f64;
            }
            -2.0 * PI / hf * s - PI / (hf * hf) * (hf * tau).cos()
        })
        .collect()
}

/// Real Fourier coefficients of equispaced samples: `(a_k, b_k)` with
/// `f(t) = a_0 + Σ_{k≥1} (a_k cos kt + b_k sin kt)`; the Nyquist mode is
/// kept as a cosine with half weight.
#[derive(Debug, Clone)]
pub struct TrigInterpolant {
    cos: Vec<f64>,
    sin: Vec<f64>,
    n: usize,
}

impl TrigInterpolant {
    pub fn new(values: &[f64]) -> Self {
        let n = values.len();
        let half = n / 2;
        let mut cos = vec![0.0; half + 1];
        let mut sin = vec![0.0; half + 1];
        let nodes = periodic_nodes(n);
        for k in 0..=half {
            let (mut a, mut b) = (0.0, 0.0);
            for (v, t) in values.iter().zip(&nodes) {
                let (s, c) = (k as f64 * t).sin_cos();
                a += v * c;
                b += v * s;
            }
            let scale = if k == 0 || (n % 2 == 0 && k == half) { 1.0 } else { 2.0 };
            cos[k] = a * scale / n as f64;
            sin[k] = b * scale / n as f64;
        }
        if n % 2 == 0 {
            sin[half] = 0.0;
        }
        TrigInterpolant { cos, sin, n }
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.cos
            .iter()
            .zip(&self.sin)
            .enumerate()
            .map(|(k, (a, b))| {
                let (s, c) = (k as f64 * t).sin_cos();
                a * c + b * s
            })
            .sum()
    }

    /// Derivative; the Nyquist cosine has no well-defined derivative and is
    /// dropped.
    pub fn eval_derivative(&self, t: f64) -> f64 {
        let half = self.n / 2;
        self.cos
            .iter()
            .zip(&self.sin)
            .enumerate()
            .filter(|(k, _)| !(self.n % 2 == 0 && *k == half))
            .map(|(k, (a, b))| {
                let kf = k as f64;
                let (s, c) = (kf * t).sin_cos();
                kf * (b * c - a * s)
            })
            .sum()
    }

    pub fn resample(&self, m: usize) -> Vec<f64> {
        periodic_nodes(m).into_iter().map(|t| self.eval(t)).collect()
    }
}

/// Spectral derivative of equispaced periodic samples, returned at the same
/// nodes.
pub fn spectral_derivative(values: &[f64]) -> Vec<f64> {
    let interp = TrigInterpolant::new(values);
    periodic_nodes(values.len())
        .into_iter()
        .map(|t| interp.eval_derivative(t))
        .collect()
}

/// Finite real Fourier series
/// `f(t) = c + Σ_{k≥1} (cos[k−1]·cos kt + sin[k−1]·sin kt)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrigSeries {
    pub constant: f64,
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
}

impl TrigSeries {
    pub fn constant(c: f64) -> Self {
        TrigSeries { constant: c, cos: Vec::new(), sin: Vec::new() }
    }

    pub fn new(constant: f64, cos: Vec<f64>, sin: Vec<f64>) -> Self {
        TrigSeries { constant, cos, sin }
    }

    pub fn max_mode(&self) -> usize {
        self.cos.len().max(self.sin.len())
    }

    pub fn is_finite(&self) -> bool {
        self.constant.is_finite() && self.cos.iter().chain(&self.sin).all(|v| v.is_finite())
    }

    /// Value and first two derivatives at `t`.
    pub fn eval3(&self, t: f64) -> [f64; 3] {
        let mut out = [self.constant, 0.0, 0.0];
        let modes = self.max_mode();
        for k in 1..=modes {
            let a = self.cos.get(k - 1).copied().unwrap_or(0.0);
            let b = self.sin.get(k - 1).copied().unwrap_or(0.0);
            let kf = k as f64;
            let (s, c) = (kf * t).sin_cos();
            out[0] += a * c + b * s;
            out[1] += kf * (b * c - a * s);
            out[2] -= kf * kf * (a * c + b * s);
        }
        out
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.eval3(t)[0]
    }

    pub fn derivative(&self, t: f64) -> f64 {
        self.eval3(t)[1]
    }

    /// Same series with every coefficient multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        TrigSeries {
            constant: self.constant * s,
            cos: self.cos.iter().map(|v| v * s).collect(),
            sin: self.sin.iter().map(|v| v * s).collect(),
        }
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            dp = if d != 0.0 { d } else { dp };
            nodes[i] = x;
            weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
        GaussLegendre { nodes, weights }
    }

    /// `∫_a^b f`.
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}
