//! Exponential spectral profiles, directional wavelets, and the admissibility
//! function `β(l)`.
//!
//! A profile fixes the Gegenbauer coefficients
//!
//! ```text
//! Ψ̂_ρ(l) = κ (ρ^a q(l)^b)^c e^{-ρ^a q(l)^b} (l + λ)/λ
//! ```
//!
//! of the zonal wavelet `ψ_ρ(t) = Σ_l Ψ̂_ρ(l) C_l^λ(t)`. The directional
//! wavelet of order `d` along the tangent axis `ς` is
//!
//! ```text
//! Ψ_ρ^{[d]}(y) = ρ^{ad/(γb)} ∂_Θ^d ψ_ρ(y_1 cos Θ + (ς·y) sin Θ) |_{Θ=0}
//! ```
//!
//! expanded by Faà di Bruno into `Σ_k ψ_ρ^{(k)}(y_1) B_{d,k}(y_1, ς·y)`.
//!
//! The rotation derivative maps each degree-`l` space into itself, so
//! `Σ_κ |a_l^κ(Ψ_ρ^{[d]})|^2 = ρ^{2ad/(γb)} |Ψ̂_ρ(l)/A_l^0|^2 S_l` with
//! `S_l = ‖∂_Θ^d Y_l^0‖^2`. `S_l` is computed once per degree by exact
//! quadrature and the scale integral by composite Gauss quadrature in `ln ρ`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;
use std::fmt;
use std::str::FromStr;

use crate::error::{domain, precondition, Error, Result};
use crate::exec::Exec;
use crate::harmonics::{
    analyze_with, build_sphere_grid, to_cartesian, zonal_normalization,
    HarmonicCoefficients,
};
use crate::special_functions::{
    derivative_factor, gauss_gegenbauer, gauss_legendre, gegenbauer_fill, gegenbauer_series,
    sphere_area, GaussRule, GegenbauerOrder,
};

/// Largest spectral cutoff the automatic truncation will accept.
pub const MAX_AUTO_BAND: usize = 4096;

/// Relative tail below which a truncated wavelet series is considered exact.
pub const TRUNCATION_TOLERANCE: f64 = 1e-14;

/// Parameters of an exponential wavelet profile.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralProfile {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// Coefficients of `q` in ascending powers of `l`.
    pub q: Vec<f64>,
    /// Derivative order.
    pub d: usize,
    /// Overall factor `κ` multiplying the whole family.
    pub amplitude: f64,
    /// Tangent axis at the north pole as components along `x_2, …, x_{n+1}`;
    /// `None` means the `x_2` axis.
    pub direction: Option<Vec<f64>>,
}

impl SpectralProfile {
    pub fn new(a: f64, b: f64, c: f64, q: Vec<f64>, d: usize) -> Self {
        Self {
            a,
            b,
            c,
            q,
            d,
            amplitude: 1.0,
            direction: None,
        }
    }

    pub fn with_amplitude(mut self, amplitude: f64) -> Self {
        self.amplitude = amplitude;
        self
    }

    pub fn with_direction(mut self, direction: Vec<f64>) -> Self {
        self.direction = Some(direction);
        self
    }

    /// Degree `γ` of `q` (0 for an empty or zero polynomial).
    pub fn gamma_degree(&self) -> usize {
        self.q.iter().rposition(|&c| c != 0.0).unwrap_or(0)
    }

    pub fn q_at(&self, l: f64) -> f64 {
        self.q.iter().rev().fold(0.0, |acc, &c| acc * l + c)
    }

    /// Exponent `ad/(γb)` of the scale prefactor.
    pub fn scale_exponent(&self) -> f64 {
        self.a * self.d as f64 / (self.gamma_degree() as f64 * self.b)
    }

    /// Location `c + d/(γb)` of the peak of `u^{2c + 2d/(γb)} e^{-2u}`.
    pub fn peak_u(&self) -> f64 {
        self.c + self.d as f64 / (self.gamma_degree() as f64 * self.b)
    }

    pub fn is_zonal(&self) -> bool {
        self.d == 0
    }

    /// Checks the parameter constraints and `q(l) > 0` for `1 <= l <= band`.
    pub fn validate(&self, n: usize, band: usize) -> Result<()> {
        GegenbauerOrder::for_sphere(n)?;
        for (name, v) in [("a", self.a), ("b", self.b), ("c", self.c), ("amplitude", self.amplitude)] {
            if !(v > 0.0 && v.is_finite()) {
                return domain(format!("profile parameter {name} must be positive, got {v}"));
            }
        }
        if self.q.iter().any(|c| !c.is_finite()) {
            return domain("q has non-finite coefficients");
        }
        if self.gamma_degree() == 0 {
            return domain("q must have degree >= 1");
        }
        if let Some(l) = (1..=band.max(1)).find(|&l| self.q_at(l as f64) <= 0.0) {
            return domain(format!("q({l}) = {} is not positive", self.q_at(l as f64)));
        }
        if let Some(dir) = &self.direction {
            if dir.len() != n {
                return Err(Error::Mismatch {
                    what: "direction components",
                    expected: n,
                    got: dir.len(),
                });
            }
            let norm: f64 = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
            if !(norm > 0.0 && norm.is_finite()) {
                return domain("direction must be a nonzero tangent vector");
            }
        }
        Ok(())
    }

    /// Unit tangent direction in ambient coordinates (first entry zero).
    pub fn ambient_direction(&self, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n + 1];
        match &self.direction {
            Some(dir) => {
                let norm: f64 = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
                for (o, x) in out[1..].iter_mut().zip(dir) {
                    *o = x / norm;
                }
            }
            None => out[1] = 1.0,
        }
        out
    }
}

/// Named parameter bundles.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    /// `a = b = c = 1`, `q(l) = l`, `d = 0`.
    AbelPoissonZonal,
    /// As above with `d = 1`.
    AbelPoisson,
    /// `a = b = c = 1`, `q(l) = l(l + 2λ)`, `d = 0`.
    GaussWeierstrassZonal,
    /// As above with `d = 1`.
    GaussWeierstrass,
    /// `a = b = 1`, `q(l) = l + λ`, `c = d = m`.
    Poisson(usize),
}

impl Preset {
    pub const ALL: [Preset; 5] = [
        Preset::AbelPoissonZonal,
        Preset::AbelPoisson,
        Preset::GaussWeierstrassZonal,
        Preset::GaussWeierstrass,
        Preset::Poisson(2),
    ];

    pub fn profile(self, n: usize) -> SpectralProfile {
        let lambda = (n as f64 - 1.0) / 2.0;
        match self {
            Preset::AbelPoissonZonal => SpectralProfile::new(1.0, 1.0, 1.0, vec![0.0, 1.0], 0),
            Preset::AbelPoisson => SpectralProfile::new(1.0, 1.0, 1.0, vec![0.0, 1.0], 1),
            Preset::GaussWeierstrassZonal => {
                SpectralProfile::new(1.0, 1.0, 1.0, vec![0.0, 2.0 * lambda, 1.0], 0)
            }
            Preset::GaussWeierstrass => {
                SpectralProfile::new(1.0, 1.0, 1.0, vec![0.0, 2.0 * lambda, 1.0], 1)
            }
            Preset::Poisson(m) => SpectralProfile::new(1.0, 1.0, m as f64, vec![lambda, 1.0], m),
        }
    }

    pub fn is_directional(self) -> bool {
        !matches!(self, Preset::AbelPoissonZonal | Preset::GaussWeierstrassZonal)
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Preset::AbelPoissonZonal => f.write_str("abel-poisson-zonal"),
            Preset::AbelPoisson => f.write_str("abel-poisson"),
            Preset::GaussWeierstrassZonal => f.write_str("gauss-weierstrass-zonal"),
            Preset::GaussWeierstrass => f.write_str("gauss-weierstrass"),
            Preset::Poisson(m) => write!(f, "poisson-{m}"),
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "abel-poisson-zonal" => Ok(Preset::AbelPoissonZonal),
            "abel-poisson" => Ok(Preset::AbelPoisson),
            "gauss-weierstrass-zonal" => Ok(Preset::GaussWeierstrassZonal),
            "gauss-weierstrass" => Ok(Preset::GaussWeierstrass),
            "poisson" => Ok(Preset::Poisson(2)),
            _ => match s.strip_prefix("poisson-").map(str::parse::<usize>) {
                Some(Ok(m)) if m >= 1 => Ok(Preset::Poisson(m)),
                _ => Err(Error::Parse(format!("unknown preset `{s}`"))),
            },
        }
    }
}

fn lambda_of(n: usize) -> f64 {
    (n as f64 - 1.0) / 2.0
}

/// `κ u^c e^{-u}` with `u = ρ^a q(l)^b`, or zero when `q(l) <= 0` (only
/// reachable at `l = 0` for a validated profile).
fn reduced_hat(profile: &SpectralProfile, rho: f64, l: usize) -> f64 {
    let q = profile.q_at(l as f64);
    if q <= 0.0 {
        return 0.0;
    }
    let ln_u = profile.a * rho.ln() + profile.b * q.ln();
    let u = ln_u.exp();
    profile.amplitude * (profile.c * ln_u - u).exp()
}

/// `Ψ̂_ρ(l)`.
pub fn zonal_hat(profile: &SpectralProfile, n: usize, rho: f64, l: usize) -> Result<f64> {
    if !(rho > 0.0 && rho.is_finite()) {
        return domain(format!("scale must be positive, got {rho}"));
    }
    profile.validate(n, l)?;
    let lambda = lambda_of(n);
    Ok(reduced_hat(profile, rho, l) * (l as f64 + lambda) / lambda)
}

/// Smallest degree beyond which the wavelet spectrum, weighted by the growth
/// of `d`-th Gegenbauer derivatives at `t = 1`, stays below `1e-16` of its
/// maximum.
pub fn spectral_cutoff(profile: &SpectralProfile, n: usize, rho: f64) -> Result<usize> {
    if !(rho > 0.0 && rho.is_finite()) {
        return domain(format!("scale must be positive, got {rho}"));
    }
    profile.validate(n, 1)?;
    let lambda = lambda_of(n);
    let growth = 2.0 * lambda + 2.0 * profile.d as f64 + 1.0;
    let weight = |l: usize| {
        let lf = l as f64;
        reduced_hat(profile, rho, l) * (lf + lambda) / lambda * (lf + 1.0).powf(growth)
    };
    let mut best: f64 = 0.0;
    for l in 0..=MAX_AUTO_BAND {
        let q = profile.q_at(l as f64);
        let w = weight(l);
        best = best.max(w);
        let past_peak = q > 0.0 && rho.powf(profile.a) * q.powf(profile.b) > profile.peak_u() + 1.0;
        let rising = profile.q_at(l as f64 + 1.0) > q;
        if l >= 1 && past_peak && rising && w <= 1e-16 * best {
            return Ok(l);
        }
    }
    Err(Error::Convergence(format!(
        "wavelet spectrum at scale {rho} does not decay within degree {MAX_AUTO_BAND}"
    )))
}

/// Polynomial in `(u, v)`; `c[i][j]` multiplies `u^i v^j`.
#[derive(Clone, Debug, PartialEq)]
struct Poly2 {
    c: Vec<Vec<f64>>,
}

impl Poly2 {
    fn zero() -> Self {
        Self { c: vec![vec![0.0]] }
    }

    fn constant(x: f64) -> Self {
        Self { c: vec![vec![x]] }
    }

    fn u(scale: f64) -> Self {
        Self {
            c: vec![vec![0.0], vec![scale]],
        }
    }

    fn v(scale: f64) -> Self {
        Self {
            c: vec![vec![0.0, scale]],
        }
    }

    fn get(&self, i: usize, j: usize) -> f64 {
        self.c.get(i).and_then(|r| r.get(j)).copied().unwrap_or(0.0)
    }

    fn rows(&self) -> usize {
        self.c.len()
    }

    fn cols(&self) -> usize {
        self.c.iter().map(Vec::len).max().unwrap_or(0)
    }

    fn add_scaled(&self, other: &Self, s: f64) -> Self {
        let (r, k) = (self.rows().max(other.rows()), self.cols().max(other.cols()));
        Self {
            c: (0..r)
                .map(|i| (0..k).map(|j| self.get(i, j) + s * other.get(i, j)).collect())
                .collect(),
        }
    }

    fn mul(&self, other: &Self) -> Self {
        let r = self.rows() + other.rows() - 1;
        let k = self.cols() + other.cols() - 1;
        let mut c = vec![vec![0.0; k]; r];
        for (i, row) in self.c.iter().enumerate() {
            for (j, &x) in row.iter().enumerate() {
                for (p, orow) in other.c.iter().enumerate() {
                    for (q, &y) in orow.iter().enumerate() {
                        c[i + p][j + q] += x * y;
                    }
                }
            }
        }
        Self { c }
    }

    fn du(&self) -> Self {
        if self.rows() <= 1 {
            return Self::zero();
        }
        Self {
            c: (1..self.rows())
                .map(|i| self.c[i].iter().map(|x| x * i as f64).collect())
                .collect(),
        }
    }

    fn dv(&self) -> Self {
        Self {
            c: self
                .c
                .iter()
                .map(|row| {
                    if row.len() <= 1 {
                        vec![0.0]
                    } else {
                        (1..row.len()).map(|j| row[j] * j as f64).collect()
                    }
                })
                .collect(),
        }
    }

    fn eval(&self, u: f64, v: f64) -> f64 {
        self.c
            .iter()
            .rev()
            .fold(0.0, |acc, row| acc * u + row.iter().rev().fold(0.0, |a, &x| a * v + x))
    }
}

/// `B_{d,k}` for `k = 0..=d` evaluated on the derivatives of
/// `t(Θ) = u cos Θ + v sin Θ` at `Θ = 0`, which cycle through `v, -u, -v, u`.
fn bell_polynomials(d: usize) -> Vec<Poly2> {
    let inner = |i: usize| match i % 4 {
        1 => Poly2::v(1.0),
        2 => Poly2::u(-1.0),
        3 => Poly2::v(-1.0),
        _ => Poly2::u(1.0),
    };
    // table[m][k] = B_{m,k}
    let mut table: Vec<Vec<Poly2>> = vec![vec![Poly2::constant(1.0)]];
    for m in 1..=d {
        let mut row = vec![Poly2::zero(); m + 1];
        for (k, slot) in row.iter_mut().enumerate().skip(1) {
            let mut acc = Poly2::zero();
            for i in 1..=(m + 1 - k) {
                if let Some(prev) = table[m - i].get(k - 1) {
                    let coef = binomial(m - 1, i - 1);
                    acc = acc.add_scaled(&inner(i).mul(prev), coef);
                }
            }
            *slot = acc;
        }
        table.push(row);
    }
    table.pop().expect("table has d + 1 rows")
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// A directional wavelet at one scale, truncated at a fixed degree.
#[derive(Clone, Debug)]
pub struct DirectionalWavelet {
    n: usize,
    lambda: f64,
    d: usize,
    rho: f64,
    band: usize,
    prefactor: f64,
    // series[k][m]: coefficient of C^{λ+k}_m in ψ^{(k)}
    series: Vec<Vec<f64>>,
    bell: Vec<Poly2>,
    bell_du: Vec<Poly2>,
    bell_dv: Vec<Poly2>,
    direction: Vec<f64>,
    tail: f64,
}

impl DirectionalWavelet {
    /// Truncates the spectrum at `band`; pass `None` for [`spectral_cutoff`].
    pub fn new(profile: &SpectralProfile, n: usize, rho: f64, band: Option<usize>) -> Result<Self> {
        let band = match band {
            Some(b) => b,
            None => spectral_cutoff(profile, n, rho)?,
        };
        profile.validate(n, band)?;
        if !(rho > 0.0 && rho.is_finite()) {
            return domain(format!("scale must be positive, got {rho}"));
        }
        let lambda = lambda_of(n);
        let hats: Vec<f64> = (0..=band + 1)
            .map(|l| reduced_hat(profile, rho, l) * (l as f64 + lambda) / lambda)
            .collect();
        let peak = hats.iter().cloned().fold(0.0, f64::max);
        let tail = if peak > 0.0 { hats[band + 1] / peak } else { 0.0 };
        if tail > TRUNCATION_TOLERANCE {
            log::debug!(
                "wavelet at scale {rho:.4e} truncated at degree {band} with relative tail {tail:.2e}"
            );
        }
        let d = profile.d;
        let series = (0..=d + 1)
            .map(|k| {
                let f = derivative_factor(lambda, k);
                (k..=band).map(|l| hats[l] * f).collect()
            })
            .collect();
        let bell = bell_polynomials(d);
        let bell_du = bell.iter().map(Poly2::du).collect();
        let bell_dv = bell.iter().map(Poly2::dv).collect();
        Ok(Self {
            n,
            lambda,
            d,
            rho,
            band,
            prefactor: rho.powf(profile.scale_exponent()),
            series,
            bell,
            bell_du,
            bell_dv,
            direction: profile.ambient_direction(n),
            tail,
        })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn band(&self) -> usize {
        self.band
    }

    /// Relative size of the first discarded spectral coefficient.
    pub fn truncation_tail(&self) -> f64 {
        self.tail
    }

    /// `ψ^{(k)}(u)` for `k = 0..=count-1`.
    fn profile_derivatives(&self, u: f64, count: usize) -> Vec<f64> {
        let u = u.clamp(-1.0, 1.0);
        (0..count)
            .map(|k| gegenbauer_series(self.lambda + k as f64, u, &self.series[k]))
            .collect()
    }

    /// Value as a function of `u = y_1` and `v = ς·y`.
    pub fn value_uv(&self, u: f64, v: f64) -> f64 {
        let psi = self.profile_derivatives(u, self.d + 1);
        self.prefactor * psi.iter().zip(&self.bell).map(|(p, b)| p * b.eval(u, v)).sum::<f64>()
    }

    /// Value and length of the tangential gradient as functions of `(u, v)`.
    pub fn value_and_gradient_uv(&self, u: f64, v: f64) -> (f64, f64) {
        let psi = self.profile_derivatives(u, self.d + 2);
        let mut f = 0.0;
        let mut fu = 0.0;
        let mut fv = 0.0;
        for k in 0..=self.d {
            let b = self.bell[k].eval(u, v);
            f += psi[k] * b;
            fu += psi[k + 1] * b + psi[k] * self.bell_du[k].eval(u, v);
            fv += psi[k] * self.bell_dv[k].eval(u, v);
        }
        // ambient gradient g = f_u e_1 + f_v ς, with |ς| = 1 and e_1 ⊥ ς
        let radial = fu * u + fv * v;
        let tangential = (fu * fu + fv * fv - radial * radial).max(0.0).sqrt();
        (self.prefactor * f, self.prefactor * tangential)
    }

    /// `(u, v)` of a point in ambient coordinates.
    pub fn coordinates(&self, y: &[f64]) -> (f64, f64) {
        let v = y.iter().zip(&self.direction).map(|(a, b)| a * b).sum();
        (y[0], v)
    }

    pub fn value(&self, y: &[f64]) -> f64 {
        let (u, v) = self.coordinates(y);
        self.value_uv(u, v)
    }

    pub fn value_at_angles(&self, point: &[f64]) -> Result<f64> {
        if point.len() != self.n {
            return Err(Error::Mismatch {
                what: "angle tuple length",
                expected: self.n,
                got: point.len(),
            });
        }
        Ok(self.value(&to_cartesian(point)))
    }
}

/// `Ψ_ρ^{[d]}` at an angle tuple, with the spectrum truncated at `band`.
///
/// The wavelets of this crate are real-valued.
pub fn eval_directional_wavelet(
    profile: &SpectralProfile,
    n: usize,
    rho: f64,
    point: &[f64],
    band: usize,
) -> Result<f64> {
    DirectionalWavelet::new(profile, n, rho, Some(band))?.value_at_angles(point)
}

/// `|k_1|`, the order of an index under rotations fixing the north pole.
pub fn azimuthal_order(k: &[i64]) -> usize {
    k[0].unsigned_abs() as usize
}

/// Harmonic coefficients of `Ψ_ρ^{[d]}` up to degree `band`.
#[derive(Clone, Debug)]
pub struct DirectionalCoefficients {
    pub rho: f64,
    pub d: usize,
    pub coeffs: HarmonicCoefficients,
    /// Largest magnitude among entries outside the admissible azimuthal orders.
    pub max_discarded: f64,
}

impl DirectionalCoefficients {
    /// `Σ_κ |a_l^κ|^2`.
    pub fn degree_energy(&self, l: usize) -> f64 {
        self.coeffs.degree_energy(l)
    }
}

/// Analysis of the truncated wavelet on an exact grid. Entries whose
/// azimuthal order exceeds `d` or has the wrong parity are zeroed.
pub fn directional_coeffs(
    profile: &SpectralProfile,
    n: usize,
    rho: f64,
    band: usize,
) -> Result<DirectionalCoefficients> {
    directional_coeffs_with(Exec::default(), profile, n, rho, band)
}

pub fn directional_coeffs_with(
    exec: Exec,
    profile: &SpectralProfile,
    n: usize,
    rho: f64,
    band: usize,
) -> Result<DirectionalCoefficients> {
    let wavelet = DirectionalWavelet::new(profile, n, rho, Some(band))?;
    let grid = build_sphere_grid(n, band)?;
    let samples: Vec<_> = exec.map(grid.len(), |i| {
        num_complex::Complex64::new(wavelet.value(&to_cartesian(grid.node(i))), 0.0)
    });
    let mut coeffs = analyze_with(exec, &samples, &grid, band)?;
    let d = profile.d;
    let mut max_discarded: f64 = 0.0;
    let mut admissible: Vec<bool> = coeffs
        .indices()
        .iter()
        .map(|idx| {
            let j = azimuthal_order(&idx.k);
            j <= d && (d - j) % 2 == 0
        })
        .collect();
    if d >= 1 {
        // the rotation derivative of a constant vanishes
        let r = coeffs.degree_range(0);
        for ok in &mut admissible[r] {
            *ok = false;
        }
    }
    for (v, ok) in coeffs.values_mut().iter_mut().zip(admissible) {
        if !ok {
            max_discarded = max_discarded.max(v.norm());
            *v = num_complex::Complex64::new(0.0, 0.0);
        }
    }
    if max_discarded > 1e-10 {
        log::warn!("directional coefficients outside the admissible orders reach {max_discarded:.2e}");
    }
    Ok(DirectionalCoefficients {
        rho,
        d,
        coeffs,
        max_discarded,
    })
}

/// `β_{l,ι}`; at `ι = 0` the factor `(2λ+ι-1)/(2λ+2ι-1)` equals one and is
/// dropped, which removes the `0/0` at `λ = 1/2`.
pub fn ladder_beta(lambda: f64, l: usize, iota: usize) -> Result<f64> {
    if !(lambda > 0.0) {
        return domain(format!("Gegenbauer order must be positive, got {lambda}"));
    }
    if iota > l {
        return domain(format!("ladder index {iota} exceeds degree {l}"));
    }
    let (lf, i) = (l as f64, iota as f64);
    let ratio = if iota == 0 {
        1.0
    } else {
        (2.0 * lambda + i - 1.0) / (2.0 * lambda + 2.0 * i - 1.0)
    };
    let radicand = (i + 1.0) * ratio / (2.0 * lambda + 2.0 * i + 1.0)
        * (lf * (2.0 * lambda + lf) - i * (2.0 * lambda + i));
    if radicand < -1e-12 * (lf + 1.0) * (lf + 2.0 * lambda) {
        return domain(format!("negative ladder radicand {radicand}"));
    }
    Ok(radicand.max(0.0).sqrt())
}

/// Quadrature on `S^n` for functions of `(x_1, x_2)` only, exact for
/// polynomials of total degree `2 band`. Returns `(u, v, weight)` triples
/// whose weights sum to `Σ_n`.
fn two_coordinate_rule(n: usize, band: usize) -> Result<Vec<[f64; 3]>> {
    let mut out = Vec::new();
    if n == 2 {
        let rule = gauss_legendre(band + 1)?;
        let nphi = 2 * band + 1;
        let wphi = 2.0 * std::f64::consts::PI / nphi as f64;
        for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
            let s = (1.0 - t * t).max(0.0).sqrt();
            for j in 0..nphi {
                let phi = 2.0 * std::f64::consts::PI * j as f64 / nphi as f64;
                out.push([t, s * phi.cos(), w * wphi]);
            }
        }
    } else {
        let first = gauss_gegenbauer(band + 1, (n as f64 - 1.0) / 2.0)?;
        let second: GaussRule = gauss_gegenbauer(band + 1, (n as f64 - 2.0) / 2.0)?;
        let inner = sphere_area(n - 2);
        for (&t, &w) in first.nodes.iter().zip(&first.weights) {
            let s = (1.0 - t * t).max(0.0).sqrt();
            for (&t2, &w2) in second.nodes.iter().zip(&second.weights) {
                out.push([t, s * t2, w * w2 * inner]);
            }
        }
    }
    Ok(out)
}

/// `S_l = ‖∂_Θ^d Y_l^0‖^2` for `l = 0..=band` under the normalized inner
/// product.
pub fn directional_norms(n: usize, d: usize, band: usize) -> Result<Vec<f64>> {
    let lambda = GegenbauerOrder::for_sphere(n)?.value();
    let rule = two_coordinate_rule(n, band)?;
    let bell = bell_polynomials(d);
    let factors: Vec<f64> = (0..=d).map(|k| derivative_factor(lambda, k)).collect();
    let mut acc = vec![0.0; band + 1];
    let mut tables = vec![vec![0.0; band + 1]; d + 1];
    let mut sums = vec![0.0; band + 1];
    for &[u, v, w] in &rule {
        for (k, t) in tables.iter_mut().enumerate() {
            gegenbauer_fill(lambda + k as f64, u, t);
        }
        sums.iter_mut().for_each(|s| *s = 0.0);
        for k in 0..=d {
            let b = bell[k].eval(u, v) * factors[k];
            for l in k..=band {
                sums[l] += tables[k][l - k] * b;
            }
        }
        for (a, s) in acc.iter_mut().zip(&sums) {
            *a += w * s * s;
        }
    }
    let area = sphere_area(n);
    Ok(acc
        .iter()
        .enumerate()
        .map(|(l, a)| {
            if d >= 1 && l == 0 {
                0.0
            } else {
                zonal_normalization(n, l).powi(2) * a / area
            }
        })
        .collect())
}

/// Degree-wise energy density `ρ ↦ (1/N(n,l)) Σ_κ |a_l^κ(Ψ_ρ^{[d]})|^2`
/// of the scale integral.
#[derive(Clone, Debug)]
pub struct ScaleDensity {
    n: usize,
    profile: SpectralProfile,
    norms: Vec<f64>,
}

impl ScaleDensity {
    pub fn new(n: usize, profile: &SpectralProfile, band: usize) -> Result<Self> {
        profile.validate(n, band)?;
        Ok(Self {
            n,
            profile: profile.clone(),
            norms: directional_norms(n, profile.d, band)?,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn band(&self) -> usize {
        self.norms.len() - 1
    }

    pub fn profile(&self) -> &SpectralProfile {
        &self.profile
    }

    /// `S_l`.
    pub fn directional_norm(&self, l: usize) -> f64 {
        self.norms[l]
    }

    /// Whether the density vanishes identically in `ρ`.
    pub fn vanishes(&self, l: usize) -> bool {
        self.norms[l] == 0.0 || self.profile.q_at(l as f64) <= 0.0
    }

    pub fn density(&self, l: usize, rho: f64) -> f64 {
        if self.vanishes(l) {
            return 0.0;
        }
        let p = &self.profile;
        let ln_u = p.a * rho.ln() + p.b * p.q_at(l as f64).ln();
        let ln = self.norms[l].ln()
            + 2.0 * p.scale_exponent() * rho.ln()
            + 2.0 * p.amplitude.ln()
            + 2.0 * (p.c * ln_u - ln_u.exp());
        ln.exp()
    }

    /// Interval of `ln ρ` outside which the density is below `tol` times its
    /// peak, or `None` when the density vanishes.
    pub fn log_support(&self, l: usize, tol: f64) -> Option<(f64, f64)> {
        if self.vanishes(l) {
            return None;
        }
        let p = &self.profile;
        let peak = p.peak_u();
        // g(w) = ln(density / peak density) in w = ln u
        let g = |w: f64| 2.0 * peak * (w - peak.ln()) - 2.0 * (w.exp() - peak);
        let target = tol.ln();
        let solve = |mut inside: f64, mut outside: f64| {
            for _ in 0..200 {
                let mid = 0.5 * (inside + outside);
                if g(mid) > target {
                    inside = mid;
                } else {
                    outside = mid;
                }
            }
            outside
        };
        let w0 = peak.ln();
        let mut lo = w0 - 1.0;
        while g(lo) > target {
            lo -= 2.0 * (w0 - lo);
        }
        let mut hi = w0 + 1.0;
        while g(hi) > target {
            hi += 2.0 * (hi - w0);
        }
        let (wl, wh) = (solve(w0, lo), solve(w0, hi));
        let shift = p.b * p.q_at(l as f64).ln();
        Some(((wl - shift) / p.a, (wh - shift) / p.a))
    }
}

/// Composite Gauss-Legendre rule in `ln ρ` with panel doubling.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleQuadrature {
    pub order: usize,
    pub initial_panels: usize,
    pub max_doublings: usize,
    /// Relative density at which the integration range is cut.
    pub support_tolerance: f64,
    /// Relative change between doublings accepted as converged.
    pub stop_tolerance: f64,
    /// Relative change above which a non-converged result is an error.
    pub failure_tolerance: f64,
}

impl Default for ScaleQuadrature {
    fn default() -> Self {
        Self {
            order: 20,
            initial_panels: 4,
            max_doublings: 12,
            support_tolerance: 1e-16,
            stop_tolerance: 1e-14,
            failure_tolerance: 1e-9,
        }
    }
}

impl ScaleQuadrature {
    /// `∫_{lo}^{hi} f(s) ds`.
    pub fn integrate(&self, f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> Result<f64> {
        let rule = gauss_legendre(self.order)?;
        let composite = |panels: usize| {
            let h = (hi - lo) / panels as f64;
            (0..panels)
                .map(|p| {
                    let mid = lo + (p as f64 + 0.5) * h;
                    rule.integrate(|t| f(mid + 0.5 * h * t)) * 0.5 * h
                })
                .sum::<f64>()
        };
        let mut panels = self.initial_panels.max(1);
        let mut prev = composite(panels);
        let mut change = f64::INFINITY;
        for _ in 0..self.max_doublings {
            panels *= 2;
            let next = composite(panels);
            change = (next - prev).abs() / next.abs().max(f64::MIN_POSITIVE);
            prev = next;
            if change <= self.stop_tolerance || next == 0.0 {
                return Ok(next);
            }
        }
        if change > self.failure_tolerance {
            return Err(Error::Convergence(format!(
                "scale quadrature still changes by {change:.2e} after {panels} panels"
            )));
        }
        Ok(prev)
    }
}

fn beta_from_density(density: &ScaleDensity, l: usize, quad: &ScaleQuadrature) -> Result<f64> {
    match density.log_support(l, quad.support_tolerance) {
        None => Ok(0.0),
        Some((lo, hi)) => quad.integrate(|s| density.density(l, s.exp()), lo, hi),
    }
}

/// `β(l) = (1/N(n,l)) Σ_κ ∫ |a_l^κ(Ψ_ρ^{[d]})|^2 dρ/ρ` by quadrature in `ln ρ`.
pub fn beta_numeric(n: usize, profile: &SpectralProfile, l: usize, quad: &ScaleQuadrature) -> Result<f64> {
    let density = ScaleDensity::new(n, profile, l)?;
    beta_from_density(&density, l, quad)
}

/// `Γ(2c + 2d/(γb)) / (4^{d/(γb)+c} γ b q(l)^{2d/γ})`, the closed form
/// without its polynomial factor.
pub fn closed_form_factor(profile: &SpectralProfile, l: usize) -> f64 {
    let g = profile.gamma_degree() as f64;
    let e = profile.d as f64 / (g * profile.b);
    let q = profile.q_at(l as f64);
    let ln = ln_gamma(2.0 * profile.c + 2.0 * e)
        - (e + profile.c) * 4f64.ln()
        - (g * profile.b).ln()
        - 2.0 * profile.d as f64 / g * q.ln();
    ln.exp()
}

/// `P_{2d}(l) Γ(2c + 2d/(γb)) / (4^{d/(γb)+c} γ b q(l)^{2d/γ})`.
pub fn beta_closed_form(_n: usize, profile: &SpectralProfile, l: usize, p2d: f64) -> f64 {
    p2d * closed_form_factor(profile, l)
}

/// Least-squares fit of `P_{2d}` over `l = 1..=band`.
#[derive(Clone, Debug)]
pub struct P2dFit {
    pub degree: usize,
    /// Values obtained by inverting the closed form, index `l - 1`.
    pub inverted: Vec<f64>,
    /// Values of the fitted polynomial, index `l - 1`.
    pub values: Vec<f64>,
    /// Fitted polynomial at `l = 0`.
    pub at_zero: f64,
    /// Coefficients in ascending powers of `l / band`.
    pub coefficients: Vec<f64>,
    /// Largest relative deviation between `inverted` and `values`.
    pub residual: f64,
}

impl P2dFit {
    pub fn eval(&self, l: f64) -> f64 {
        let x = l / self.values.len() as f64;
        self.coefficients.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }
}

pub const P2D_FIT_TOLERANCE: f64 = 1e-6;

/// Inverts the closed form against [`beta_numeric`] at `l = 1..=band` and
/// fits a polynomial of degree `2d`.
pub fn extract_p2d(n: usize, profile: &SpectralProfile, band: usize, quad: &ScaleQuadrature) -> Result<P2dFit> {
    let d = profile.d;
    if band < 2 * d + 1 {
        return precondition(format!("band limit {band} must be at least {}", 2 * d + 1));
    }
    let density = ScaleDensity::new(n, profile, band)?;
    let inverted: Vec<f64> = (1..=band)
        .map(|l| Ok(beta_from_density(&density, l, quad)? / closed_form_factor(profile, l)))
        .collect::<Result<_>>()?;
    let degree = 2 * d;
    let x: Vec<f64> = (1..=band).map(|l| l as f64 / band as f64).collect();
    // rows scaled by 1/P so the fit minimizes relative deviations
    let vandermonde = DMatrix::from_fn(band, degree + 1, |i, j| x[i].powi(j as i32) / inverted[i]);
    let rhs = DVector::from_element(band, 1.0);
    let coefficients: Vec<f64> = vandermonde
        .svd(true, true)
        .solve(&rhs, 1e-15)
        .map_err(|e| Error::Convergence(format!("least-squares fit failed: {e}")))?
        .iter()
        .copied()
        .collect();
    let horner = |x: f64| coefficients.iter().rev().fold(0.0, |acc, c| acc * x + c);
    let values: Vec<f64> = x.iter().map(|&x| horner(x)).collect();
    let residual = values
        .iter()
        .zip(&inverted)
        .map(|(f, p)| (f - p).abs() / p.abs())
        .fold(0.0, f64::max);
    if !(residual <= P2D_FIT_TOLERANCE) {
        return Err(Error::FitResidual {
            residual,
            tolerance: P2D_FIT_TOLERANCE,
        });
    }
    Ok(P2dFit {
        degree,
        at_zero: horner(0.0),
        inverted,
        values,
        coefficients,
        residual,
    })
}

/// `β(l)` for `l = 0..=band_limit`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BetaTable {
    pub n: usize,
    pub band_limit: usize,
    /// `Some(m)` when `β(l) = 0` exactly for `l <= m`.
    pub order: Option<usize>,
    pub values: Vec<f64>,
}

impl BetaTable {
    pub fn beta(&self, l: usize) -> f64 {
        self.values[l]
    }

    /// Degrees with positive `β`, i.e. `m < l <= L`.
    pub fn active_degrees(&self) -> std::ops::RangeInclusive<usize> {
        self.order.map_or(0, |m| m + 1)..=self.band_limit
    }
}

pub fn beta_table(n: usize, profile: &SpectralProfile, band_limit: usize, quad: &ScaleQuadrature) -> Result<BetaTable> {
    beta_table_with(Exec::default(), n, profile, band_limit, quad)
}

pub fn beta_table_with(
    exec: Exec,
    n: usize,
    profile: &SpectralProfile,
    band_limit: usize,
    quad: &ScaleQuadrature,
) -> Result<BetaTable> {
    let density = ScaleDensity::new(n, profile, band_limit)?;
    let values = exec.try_map(band_limit + 1, |l| beta_from_density(&density, l, quad))?;
    let zeros = values.iter().take_while(|&&b| b == 0.0).count();
    Ok(BetaTable {
        n,
        band_limit,
        order: zeros.checked_sub(1),
        values,
    })
}

/// Frame bounds of a [`BetaTable`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WaveletBounds {
    pub a: f64,
    pub b: f64,
    /// `|β(L) - β(⌊L/2⌋)| / β(L)`, or `None` when `⌊L/2⌋` is not an active degree.
    pub tail: Option<f64>,
}

impl WaveletBounds {
    pub fn ratio(&self) -> f64 {
        self.b / self.a
    }
}

pub fn wavelet_bounds(table: &BetaTable) -> Result<WaveletBounds> {
    let range = table.active_degrees();
    if range.is_empty() {
        return precondition(format!(
            "no degrees above the order {:?} up to band {}",
            table.order, table.band_limit
        ));
    }
    let active = &table.values[range.clone()];
    let a = active.iter().cloned().fold(f64::INFINITY, f64::min);
    let b = active.iter().cloned().fold(0.0, f64::max);
    let top = table.band_limit;
    let half = top / 2;
    let tail = range
        .contains(&half)
        .then(|| (table.values[top] - table.values[half]).abs() / table.values[top]);
    Ok(WaveletBounds { a, b, tail })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harmonics::{dim_harmonic, eval_harmonic, HarmonicIndex};
    use crate::special_functions::gegenbauer;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{E, PI};

    fn quad() -> ScaleQuadrature {
        ScaleQuadrature::default()
    }

    #[test]
    fn zonal_hat_examples() {
        let p = Preset::AbelPoissonZonal.profile(2);
        assert!((zonal_hat(&p, 2, 1.0, 1).unwrap() - 3.0 / E).abs() < 1e-15);
        assert_eq!(zonal_hat(&p, 2, 1.0, 0).unwrap(), 0.0);

        // independent re-implementation: q(2) = 2(2 + 2) = 8, u = 4
        let gw = Preset::GaussWeierstrassZonal.profile(3);
        let u: f64 = 0.5 * (2.0 * (2.0 + 2.0));
        let oracle = u * (-u).exp() * (2.0 + 1.0) / 1.0;
        assert!((oracle - 12.0 * (-4.0f64).exp()).abs() < 1e-15);
        assert!((zonal_hat(&gw, 3, 0.5, 2).unwrap() - oracle).abs() < 1e-15);

        assert!(zonal_hat(&p, 2, 0.0, 1).is_err());
        let bad = SpectralProfile::new(1.0, 1.0, 1.0, vec![-2.0, 1.0], 0);
        assert!(matches!(zonal_hat(&bad, 2, 1.0, 3), Err(Error::Domain(_))));
    }

    #[test]
    fn presets_parse_and_print() {
        for p in Preset::ALL {
            assert_eq!(p.to_string().parse::<Preset>().unwrap(), p);
        }
        assert_eq!("poisson-3".parse::<Preset>().unwrap(), Preset::Poisson(3));
        assert!("poisson-0".parse::<Preset>().is_err());
        assert!("mexican-hat".parse::<Preset>().is_err());
    }

    #[test]
    fn bell_polynomials_match_hand_expansion() {
        // d/dΘ ψ(t) = ψ' t',  d²/dΘ² = ψ'' t'^2 + ψ' t''
        let b2 = bell_polynomials(2);
        let (u, v) = (0.3, -0.7);
        assert_eq!(b2[0].eval(u, v), 0.0);
        assert!((b2[1].eval(u, v) + u).abs() < 1e-15);
        assert!((b2[2].eval(u, v) - v * v).abs() < 1e-15);
        // third order: ψ''' t'^3 + 3ψ'' t' t'' + ψ' t'''
        let b3 = bell_polynomials(3);
        assert!((b3[1].eval(u, v) + v).abs() < 1e-15);
        assert!((b3[2].eval(u, v) + 3.0 * u * v).abs() < 1e-15);
        assert!((b3[3].eval(u, v) - v.powi(3)).abs() < 1e-15);
    }

    #[test]
    fn poly2_calculus() {
        let p = Poly2::u(2.0).mul(&Poly2::v(3.0)).add_scaled(&Poly2::v(1.0).mul(&Poly2::v(1.0)), 1.0);
        // p = 6uv + v^2
        assert!((p.eval(0.5, 2.0) - 10.0).abs() < 1e-15);
        assert!((p.du().eval(0.5, 2.0) - 12.0).abs() < 1e-15);
        assert!((p.dv().eval(0.5, 2.0) - 7.0).abs() < 1e-15);
    }

    #[test]
    fn directional_wavelet_special_points() {
        let zonal = Preset::AbelPoissonZonal.profile(2);
        let w = DirectionalWavelet::new(&zonal, 2, 0.5, None).unwrap();
        let direct: f64 = (0..=w.band())
            .map(|l| zonal_hat(&zonal, 2, 0.5, l).unwrap() * gegenbauer(0.5, l, 1.0).unwrap())
            .sum();
        assert!((w.value_at_angles(&[0.0, 0.0]).unwrap() - direct).abs() < 1e-12 * direct);

        let dir = Preset::AbelPoisson.profile(2);
        let w = DirectionalWavelet::new(&dir, 2, 0.5, None).unwrap();
        assert_eq!(w.value(&[1.0, 0.0, 0.0]), 0.0);
        assert_eq!(w.value(&[-1.0, 0.0, 0.0]), 0.0);
        assert!(w.truncation_tail() < TRUNCATION_TOLERANCE);
    }

    fn richardson(f: impl Fn(f64) -> f64, order: usize, h: f64) -> f64 {
        let central = |h: f64| match order {
            0 => f(0.0),
            1 => (f(h) - f(-h)) / (2.0 * h),
            2 => (f(h) - 2.0 * f(0.0) + f(-h)) / (h * h),
            _ => unreachable!(),
        };
        (4.0 * central(h / 2.0) - central(h)) / 3.0
    }

    #[test]
    fn chain_rule_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in [2usize, 3] {
            for d in 0..=2usize {
                let profile = SpectralProfile::new(1.0, 1.0, d.max(1) as f64, vec![0.0, 1.0], d)
                    .with_direction({
                        let mut v = vec![0.0; n];
                        v[0] = 0.6;
                        v[n - 1] += 0.8;
                        v
                    });
                let rho = 1.0;
                let w = DirectionalWavelet::new(&profile, n, rho, None).unwrap();
                let zonal = SpectralProfile { d: 0, ..profile.clone() };
                let z = DirectionalWavelet::new(&zonal, n, rho, Some(w.band())).unwrap();
                let scale = rho.powf(profile.scale_exponent());
                for _ in 0..10 {
                    let mut p: Vec<f64> = (0..n - 1).map(|_| rng.random_range(0.0..PI)).collect();
                    p.push(rng.random_range(0.0..2.0 * PI));
                    let y = to_cartesian(&p);
                    let (u, v) = w.coordinates(&y);
                    let fd = scale
                        * richardson(|th| z.value_uv(u * th.cos() + v * th.sin(), 0.0), d, 1e-3);
                    let exact = w.value(&y);
                    assert!(
                        (fd - exact).abs() < 1e-6 * exact.abs().max(1e-3),
                        "n={n} d={d}: {fd} vs {exact}"
                    );
                }
            }
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let profile = Preset::AbelPoisson.profile(2);
        let w = DirectionalWavelet::new(&profile, 2, 0.7, None).unwrap();
        let p = [1.1, 0.4];
        let y = to_cartesian(&p);
        let (_, grad) = w.value_and_gradient_uv(y[0], y[1]);
        // orthonormal tangent frame from the angle parametrization
        let h = 1e-5;
        let dth = (w.value_at_angles(&[p[0] + h, p[1]]).unwrap()
            - w.value_at_angles(&[p[0] - h, p[1]]).unwrap())
            / (2.0 * h);
        let dphi = (w.value_at_angles(&[p[0], p[1] + h]).unwrap()
            - w.value_at_angles(&[p[0], p[1] - h]).unwrap())
            / (2.0 * h)
            / p[0].sin();
        let fd = (dth * dth + dphi * dphi).sqrt();
        assert!((grad - fd).abs() < 1e-6 * fd);
    }

    #[test]
    fn ladder_examples() {
        assert!((ladder_beta(1.0, 1, 0).unwrap() - 1.0).abs() < 1e-15);
        assert!((ladder_beta(0.5, 2, 0).unwrap() - 3f64.sqrt()).abs() < 1e-15);
        assert_eq!(ladder_beta(0.5, 1, 1).unwrap(), 0.0);
        assert!(ladder_beta(0.5, 1, 2).is_err());
    }

    #[test]
    fn first_order_norms_are_squared_ladder_values() {
        for n in 2..=4 {
            let lambda = (n as f64 - 1.0) / 2.0;
            let s = directional_norms(n, 1, 20).unwrap();
            assert_eq!(s[0], 0.0);
            for (l, sl) in s.iter().enumerate().skip(1) {
                let lb = ladder_beta(lambda, l, 0).unwrap();
                assert!((sl - lb * lb).abs() < 1e-10 * sl, "n={n} l={l}: {sl} vs {}", lb * lb);
            }
        }
    }

    #[test]
    fn zeroth_order_norms_are_one() {
        let s = directional_norms(3, 0, 12).unwrap();
        assert!(s.iter().all(|x| (x - 1.0).abs() < 1e-12));
    }

    #[test]
    fn directional_norms_match_full_analysis() {
        // ‖∂_Θ^2 Y_l^0‖² by rotating the harmonic in the (x_1, x_2) plane,
        // differentiating by finite differences and integrating on a full grid
        let n = 2;
        let l = 4;
        let grid = build_sphere_grid(n, l).unwrap();
        let idx = HarmonicIndex::zonal(n, l);
        let h = 1e-3;
        let mut acc = 0.0;
        for (p, &w) in grid.nodes().zip(grid.weights()) {
            let y = to_cartesian(p);
            let f = |th: f64| {
                let t = y[0] * th.cos() + y[1] * th.sin();
                eval_harmonic(n, &idx, &[t.clamp(-1.0, 1.0).acos(), 0.0]).unwrap().re
            };
            acc += w * richardson(f, 2, h).powi(2);
        }
        let oracle = acc / sphere_area(n);
        let s = directional_norms(n, 2, l).unwrap()[l];
        assert!((s - oracle).abs() < 1e-7 * s, "{s} vs {oracle}");
    }

    #[test]
    fn directional_coefficients_parity_and_energy() {
        for (n, band) in [(2usize, 10usize), (3, 6)] {
            for d in 0..=2usize {
                let profile = SpectralProfile::new(1.0, 1.0, 2.0, vec![0.0, 1.0], d);
                let rho = 0.9;
                let dc = directional_coeffs(&profile, n, rho, band).unwrap();
                assert!(dc.max_discarded < 1e-10, "n={n} d={d}: {}", dc.max_discarded);
                let density = ScaleDensity::new(n, &profile, band).unwrap();
                for l in 0..=band {
                    let got = dc.degree_energy(l) / dim_harmonic(n, l) as f64;
                    let want = density.density(l, rho);
                    assert!((got - want).abs() < 1e-10 * want.max(1e-12), "n={n} d={d} l={l}");
                }
                if d == 0 {
                    for (idx, v) in dc.coeffs.iter() {
                        if !idx.is_zonal() {
                            assert_eq!(v.norm(), 0.0);
                        }
                    }
                }
                if d >= 1 {
                    assert_eq!(dc.coeffs.degree(0)[0].norm(), 0.0);
                }
            }
        }
    }

    #[test]
    fn first_order_coefficient_ratio_is_ladder_squared() {
        let n = 2;
        let rho = 1.0;
        let band = 12;
        let profile = Preset::Poisson(1).profile(n);
        let zonal = SpectralProfile { d: 0, ..profile.clone() };
        let dir = directional_coeffs(&profile, n, rho, band).unwrap();
        let zon = directional_coeffs(&zonal, n, rho, band).unwrap();
        for l in 1..=4 {
            let ratio = dir.degree_energy(l)
                / (rho.powf(2.0 * profile.scale_exponent()) * zon.degree_energy(l));
            let lb = ladder_beta(0.5, l, 0).unwrap();
            assert!((ratio - lb * lb).abs() < 1e-10, "l={l}");
        }
        let lb1 = ladder_beta(0.5, 1, 0).unwrap();
        assert!((lb1 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zonal_beta_is_gamma_ratio() {
        let p = Preset::AbelPoissonZonal.profile(2);
        for l in [1usize, 5, 32] {
            assert!((beta_numeric(2, &p, l, &quad()).unwrap() - 0.25).abs() < 1e-12);
        }
        let c2 = SpectralProfile::new(1.0, 1.0, 2.0, vec![0.0, 1.0], 0);
        assert!((beta_numeric(2, &c2, 3, &quad()).unwrap() - 0.375).abs() < 1e-12);
        let d1 = Preset::AbelPoisson.profile(2);
        assert_eq!(beta_numeric(2, &d1, 0, &quad()).unwrap(), 0.0);
    }

    #[test]
    fn closed_form_examples() {
        let p = Preset::AbelPoisson.profile(2);
        for l in [1usize, 2, 7] {
            let lf = l as f64;
            assert!((beta_closed_form(2, &p, l, 1.0) - 6.0 / (16.0 * lf * lf)).abs() < 1e-15);
        }
        let fit = extract_p2d(2, &p, 16, &quad()).unwrap();
        for l in 1..=16 {
            let num = beta_numeric(2, &p, l, &quad()).unwrap();
            let cf = beta_closed_form(2, &p, l, fit.values[l - 1]);
            assert!((cf - num).abs() < 1e-8 * num);
        }
        // d = 0 reduces to Γ(2c)/(a 4^c) with P_0 = γ b / a
        let z = Preset::GaussWeierstrassZonal.profile(3);
        assert!((beta_closed_form(3, &z, 4, 2.0) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn p2d_properties() {
        let p = Preset::AbelPoisson.profile(2);
        let fit = extract_p2d(2, &p, 24, &quad()).unwrap();
        assert!(fit.residual < 1e-6);
        let top = fit.values.iter().cloned().fold(0.0, f64::max);
        assert!(fit.at_zero.abs() < 1e-6 * top);
        assert!(fit.values.iter().all(|&v| v > 0.0));
        // proportional to l(l+1): κ from a one-parameter least-squares fit
        let basis: Vec<f64> = (1..=24).map(|l| (l * (l + 1)) as f64).collect();
        let kappa = basis.iter().zip(&fit.inverted).map(|(b, v)| b * v).sum::<f64>()
            / basis.iter().map(|b| b * b).sum::<f64>();
        for (b, v) in basis.iter().zip(&fit.inverted) {
            assert!((kappa * b - v).abs() < 1e-8 * v);
        }
        assert!(extract_p2d(2, &Preset::Poisson(2).profile(2), 4, &quad()).is_err());
    }

    #[test]
    fn bounds_examples() {
        let z = beta_table(2, &Preset::AbelPoissonZonal.profile(2), 16, &quad()).unwrap();
        let b = wavelet_bounds(&z).unwrap();
        assert!((b.a - 0.25).abs() < 1e-12 && (b.b - 0.25).abs() < 1e-12);
        assert_eq!(z.order, Some(0));

        let d = beta_table(2, &Preset::AbelPoisson.profile(2), 16, &quad()).unwrap();
        let b = wavelet_bounds(&d).unwrap();
        assert!(0.0 < b.a && b.a <= b.b && b.ratio().is_finite());

        let empty = BetaTable {
            n: 2,
            band_limit: 0,
            order: Some(0),
            values: vec![0.0],
        };
        assert!(wavelet_bounds(&empty).is_err());
    }

    #[test]
    fn scale_substitution_invariance() {
        // ∫ f dρ/ρ computed in ρ̃ = ρ^{a/(γb)} with dρ/ρ = (γb/a) dρ̃/ρ̃
        let p = SpectralProfile::new(1.5, 0.7, 1.3, vec![0.0, 2.0, 1.0], 1);
        let density = ScaleDensity::new(3, &p, 8).unwrap();
        let k = p.a / (p.gamma_degree() as f64 * p.b);
        for l in 1..=8 {
            let direct = beta_numeric(3, &p, l, &quad()).unwrap();
            let (lo, hi) = density.log_support(l, 1e-16).unwrap();
            let tilde = quad()
                .integrate(|st| density.density(l, (st / k).exp()) / k, k * lo, k * hi)
                .unwrap();
            assert!((direct - tilde).abs() < 1e-10 * direct);
        }
    }

    #[test]
    fn sequential_and_parallel_tables_agree() {
        let p = Preset::GaussWeierstrass.profile(2);
        let a = beta_table_with(Exec::Sequential, 2, &p, 12, &quad()).unwrap();
        let b = beta_table_with(Exec::Parallel, 2, &p, 12, &quad()).unwrap();
        assert_eq!(a.values, b.values);
    }

    #[test]
    fn quadrature_reports_non_convergence() {
        let q = ScaleQuadrature {
            order: 2,
            initial_panels: 1,
            max_doublings: 1,
            ..ScaleQuadrature::default()
        };
        assert!(matches!(q.integrate(|s| (40.0 * s).sin(), 0.0, 3.0), Err(Error::Convergence(_))));
    }

    proptest! {
        #[test]
        fn spectrum_is_positive(rho in 1e-3f64..1e2, l in 1usize..64) {
            for p in Preset::ALL {
                let profile = p.profile(2);
                // beyond u ~ 700 the value underflows
                if rho * profile.q_at(l as f64) < 700.0 {
                    prop_assert!(zonal_hat(&profile, 2, rho, l).unwrap() > 0.0);
                }
            }
        }

        #[test]
        fn amplitude_scales_beta_quadratically(kappa in 0.1f64..10.0, l in 1usize..10) {
            let p = Preset::AbelPoisson.profile(2);
            let base = beta_numeric(2, &p, l, &quad()).unwrap();
            let scaled = beta_numeric(2, &p.clone().with_amplitude(kappa), l, &quad()).unwrap();
            prop_assert!((scaled - kappa * kappa * base).abs() < 1e-11 * scaled);
        }
    }
}
