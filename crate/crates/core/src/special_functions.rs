//! Gegenbauer (ultraspherical) polynomials and the constants built from them.
//!
//! All evaluation goes through the three-term recurrence
//!
//! ```text
//! l C_l(t) = 2 (l + λ - 1) t C_{l-1}(t) - (l + 2λ - 2) C_{l-2}(t),   C_0 = 1, C_1 = 2λt
//! ```
//!
//! and every factorial or gamma ratio is assembled in log space, so degrees
//! well past 170 stay finite.

use nalgebra::{DMatrix, SymmetricEigen};
use statrs::function::gamma::ln_gamma;

use crate::error::{domain, Error, Result};

/// Slack allowed on `|t| <= 1` before an argument is rejected.
pub const ARGUMENT_SLACK: f64 = 1e-12;

/// Gegenbauer order `λ`, tied to the sphere dimension by `λ = (n - 1) / 2`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, serde::Serialize, serde::Deserialize)]
pub struct GegenbauerOrder(f64);

impl GegenbauerOrder {
    pub fn new(lambda: f64) -> Result<Self> {
        if lambda > 0.0 && lambda.is_finite() {
            Ok(Self(lambda))
        } else {
            domain(format!("Gegenbauer order must be positive, got {lambda}"))
        }
    }

    /// The order attached to `S^n`.
    pub fn for_sphere(n: usize) -> Result<Self> {
        if n < 2 {
            return domain(format!("sphere dimension must be >= 2, got {n}"));
        }
        Ok(Self((n as f64 - 1.0) / 2.0))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

fn check(lambda: f64, t: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return domain(format!("Gegenbauer order must be positive, got {lambda}"));
    }
    if !(t.abs() <= 1.0 + ARGUMENT_SLACK) {
        return domain(format!("argument {t} outside [-1, 1]"));
    }
    Ok(())
}

/// `C_l^λ(t)` by the three-term recurrence.
pub fn gegenbauer(lambda: f64, l: usize, t: f64) -> Result<f64> {
    check(lambda, t)?;
    Ok(gegenbauer_unchecked(lambda, l, t))
}

pub(crate) fn gegenbauer_unchecked(lambda: f64, l: usize, t: f64) -> f64 {
    if l == 0 {
        return 1.0;
    }
    let mut prev = 1.0;
    let mut cur = 2.0 * lambda * t;
    for m in 2..=l {
        let mf = m as f64;
        let next = (2.0 * (mf + lambda - 1.0) * t * cur - (mf + 2.0 * lambda - 2.0) * prev) / mf;
        prev = cur;
        cur = next;
    }
    cur
}

/// Writes `C_m^λ(t)` into `out[m]` for every `m < out.len()`.
pub fn gegenbauer_fill(lambda: f64, t: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    if out.len() == 1 {
        return;
    }
    out[1] = 2.0 * lambda * t;
    for m in 2..out.len() {
        let mf = m as f64;
        out[m] = (2.0 * (mf + lambda - 1.0) * t * out[m - 1] - (mf + 2.0 * lambda - 2.0) * out[m - 2])
            / mf;
    }
}

/// `Σ_m coeffs[m] C_m^λ(t)` in one forward pass of the recurrence.
pub(crate) fn gegenbauer_series(lambda: f64, t: f64, coeffs: &[f64]) -> f64 {
    match coeffs.len() {
        0 => 0.0,
        1 => coeffs[0],
        _ => {
            let mut prev = 1.0;
            let mut cur = 2.0 * lambda * t;
            let mut acc = coeffs[0] + coeffs[1] * cur;
            for (m, &c) in coeffs.iter().enumerate().skip(2) {
                let mf = m as f64;
                let next =
                    (2.0 * (mf + lambda - 1.0) * t * cur - (mf + 2.0 * lambda - 2.0) * prev) / mf;
                prev = cur;
                cur = next;
                acc += c * cur;
            }
            acc
        }
    }
}

/// `2^k λ (λ+1) … (λ+k-1)`, the constant in `d^k/dt^k C_l^λ = 2^k (λ)_k C_{l-k}^{λ+k}`.
pub fn derivative_factor(lambda: f64, k: usize) -> f64 {
    (0..k).map(|i| 2.0 * (lambda + i as f64)).product()
}

/// `d^k/dt^k C_l^λ(t)`, applying `d/dt C_l^λ = 2λ C_{l-1}^{λ+1}` k times.
pub fn gegenbauer_derivative(lambda: f64, l: usize, t: f64, k: usize) -> Result<f64> {
    check(lambda, t)?;
    if k > l {
        return Ok(0.0);
    }
    Ok(derivative_factor(lambda, k) * gegenbauer_unchecked(lambda + k as f64, l - k, t))
}

/// `ln ∫_{-1}^{1} C_l^λ(t)^2 (1 - t^2)^{λ - 1/2} dt`.
pub fn ln_gegenbauer_squared_norm(lambda: f64, l: usize) -> f64 {
    let lf = l as f64;
    std::f64::consts::PI.ln() + (1.0 - 2.0 * lambda) * std::f64::consts::LN_2 + ln_gamma(lf + 2.0 * lambda)
        - ln_gamma(lf + 1.0)
        - (lf + lambda).ln()
        - 2.0 * ln_gamma(lambda)
}

/// `∫_{-1}^{1} C_l^λ(t)^2 (1 - t^2)^{λ - 1/2} dt`.
///
/// Panics if `lambda <= 0`.
pub fn gegenbauer_squared_norm(lambda: f64, l: usize) -> f64 {
    assert!(lambda > 0.0, "Gegenbauer order must be positive");
    ln_gegenbauer_squared_norm(lambda, l).exp()
}

/// Surface measure `Σ_n = 2 π^{(n+1)/2} / Γ((n+1)/2)` of `S^n` (`n >= 1`).
pub fn sphere_area(n: usize) -> f64 {
    let h = (n as f64 + 1.0) / 2.0;
    (std::f64::consts::LN_2 + h * std::f64::consts::PI.ln() - ln_gamma(h)).exp()
}

/// Funk-Hecke constant `(4π)^λ l! Γ(λ) / (2λ + l - 1)!` for `S^n`.
pub fn funk_hecke_factor(n: usize, l: usize) -> Result<f64> {
    let lambda = GegenbauerOrder::for_sphere(n)?.value();
    let lf = l as f64;
    Ok((lambda * (4.0 * std::f64::consts::PI).ln() + ln_gamma(lf + 1.0) + ln_gamma(lambda)
        - ln_gamma(2.0 * lambda + lf))
        .exp())
}

/// Nodes and weights of a Gauss rule on `[-1, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&t, &w)| w * f(t)).sum()
    }
}

/// Gauss rule for the weight `(1 - t^2)^{μ - 1/2}` with `count` nodes.
///
/// Exact for polynomials of degree `2 count - 1`. Nodes come from the
/// Golub-Welsch eigenproblem, are polished by Newton steps on `C_count^μ`, and
/// the weights are the Christoffel numbers of the orthonormalized family.
pub fn gauss_gegenbauer(count: usize, mu: f64) -> Result<GaussRule> {
    if count == 0 {
        return Err(Error::Precondition("Gauss rule needs at least one node".into()));
    }
    if !(mu > 0.0 && mu.is_finite()) {
        return domain(format!("Gegenbauer weight parameter must be positive, got {mu}"));
    }
    let mut jacobi = DMatrix::<f64>::zeros(count, count);
    for k in 1..count {
        let kf = k as f64;
        let b = (kf * (kf + 2.0 * mu - 1.0) / (4.0 * (kf + mu) * (kf + mu - 1.0))).sqrt();
        jacobi[(k, k - 1)] = b;
        jacobi[(k - 1, k)] = b;
    }
    let mut nodes: Vec<f64> = SymmetricEigen::new(jacobi).eigenvalues.iter().copied().collect();
    nodes.sort_by(|a, b| a.total_cmp(b));

    let dfac = 2.0 * mu;
    for t in nodes.iter_mut() {
        for _ in 0..3 {
            let p = gegenbauer_unchecked(mu, count, *t);
            let dp = dfac * gegenbauer_unchecked(mu + 1.0, count - 1, *t);
            if dp != 0.0 {
                *t -= p / dp;
            }
        }
    }
    // enforce the reflection symmetry of the rule
    for i in 0..count / 2 {
        let j = count - 1 - i;
        let s = 0.5 * (nodes[j] - nodes[i]);
        nodes[i] = -s;
        nodes[j] = s;
    }
    if count % 2 == 1 {
        nodes[count / 2] = 0.0;
    }

    let inv_norms: Vec<f64> = (0..count)
        .map(|k| (-ln_gegenbauer_squared_norm(mu, k)).exp())
        .collect();
    let mut buf = vec![0.0; count];
    let mut weights: Vec<f64> = nodes
        .iter()
        .map(|&t| {
            gegenbauer_fill(mu, t, &mut buf);
            1.0 / buf.iter().zip(&inv_norms).map(|(c, h)| c * c * h).sum::<f64>()
        })
        .collect();
    for i in 0..count / 2 {
        let j = count - 1 - i;
        let w = 0.5 * (weights[i] + weights[j]);
        weights[i] = w;
        weights[j] = w;
    }
    Ok(GaussRule { nodes, weights })
}

/// Gauss-Legendre rule (`μ = 1/2`).
pub fn gauss_legendre(count: usize) -> Result<GaussRule> {
    gauss_gegenbauer(count, 0.5)
}

/// A zonal function sampled on `[-1, 1]` together with quadrature weights for
/// the measure `(1 - t^2)^{λ - 1/2} dt`.
#[derive(Clone, Debug)]
pub struct ZonalProfileSamples {
    lambda: f64,
    abscissae: Vec<f64>,
    values: Vec<f64>,
    weights: Vec<f64>,
}

impl ZonalProfileSamples {
    pub fn new(lambda: f64, abscissae: Vec<f64>, values: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        GegenbauerOrder::new(lambda)?;
        if values.len() != abscissae.len() {
            return Err(Error::Mismatch {
                what: "zonal sample values",
                expected: abscissae.len(),
                got: values.len(),
            });
        }
        if weights.len() != abscissae.len() {
            return Err(Error::Mismatch {
                what: "zonal sample weights",
                expected: abscissae.len(),
                got: weights.len(),
            });
        }
        if abscissae.windows(2).any(|w| w[0] >= w[1]) {
            return domain("zonal abscissae must be strictly increasing");
        }
        if abscissae.iter().any(|t| t.abs() > 1.0 + ARGUMENT_SLACK) {
            return domain("zonal abscissae must lie in [-1, 1]");
        }
        Ok(Self {
            lambda,
            abscissae,
            values,
            weights,
        })
    }

    /// Samples `f` at the nodes of a `count`-point Gauss-Gegenbauer rule.
    pub fn from_fn(lambda: f64, count: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let rule = gauss_gegenbauer(count, lambda)?;
        let values = rule.nodes.iter().map(|&t| f(t)).collect();
        Self::new(lambda, rule.nodes, values, rule.weights)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn abscissae(&self) -> &[f64] {
        &self.abscissae
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `∫ f(t) g(t) (1 - t^2)^{λ - 1/2} dt` by the stored rule.
    pub fn integrate_against(&self, g: impl Fn(f64) -> f64) -> f64 {
        self.abscissae
            .iter()
            .zip(&self.values)
            .zip(&self.weights)
            .map(|((&t, &v), &w)| w * v * g(t))
            .sum()
    }

    /// Gegenbauer coefficient `f̂(l) = c(l, λ) ∫ f C_l^λ w dt` with
    /// `c(l, λ) = 1 / ‖C_l^λ‖²`.
    pub fn gegenbauer_coefficient(&self, l: usize) -> f64 {
        self.integrate_against(|t| gegenbauer_unchecked(self.lambda, l, t))
            / gegenbauer_squared_norm(self.lambda, l)
    }

    pub fn gegenbauer_coefficients(&self, max_degree: usize) -> Vec<f64> {
        let mut acc = vec![0.0; max_degree + 1];
        let mut buf = vec![0.0; max_degree + 1];
        for ((&t, &v), &w) in self.abscissae.iter().zip(&self.values).zip(&self.weights) {
            gegenbauer_fill(self.lambda, t, &mut buf);
            for (a, c) in acc.iter_mut().zip(&buf) {
                *a += w * v * c;
            }
        }
        acc.iter()
            .enumerate()
            .map(|(l, a)| a / gegenbauer_squared_norm(self.lambda, l))
            .collect()
    }
}
