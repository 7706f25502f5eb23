//! Hyperspherical harmonics on `S^n`, product quadrature grids, and
//! analysis/synthesis of band-limited fields.
//!
//! Points are angle tuples `(θ_1, …, θ_{n-1}, φ)` with
//!
//! ```text
//! x_1 = cos θ_1
//! x_j = sin θ_1 ⋯ sin θ_{j-1} cos θ_j          (2 <= j <= n-1)
//! x_n = sin θ_1 ⋯ sin θ_{n-1} cos φ
//! x_{n+1} = sin θ_1 ⋯ sin θ_{n-1} sin φ
//! ```
//!
//! and the harmonic with index `(l; k_1, …, k_{n-1})` is
//!
//! ```text
//! Y_l^k = A_l^k ∏_τ C^{(n-τ)/2 + |k_τ|}_{k_{τ-1} - |k_τ|}(cos θ_τ) sin^{|k_τ|} θ_τ · e^{i k_{n-1} φ}
//! ```
//!
//! with `k_0 = l`. `A_l^k` makes `(1/Σ_n) ∫ |Y_l^k|^2 dσ = 1`.

use num_complex::Complex64;
use std::f64::consts::PI;
use std::ops::Range;

use crate::error::{domain, Error, Result};
use crate::exec::Exec;
use crate::special_functions::{
    gauss_gegenbauer, gegenbauer_fill, gegenbauer_unchecked, ln_gegenbauer_squared_norm,
    sphere_area, GaussRule,
};

/// Degree `l` and the non-increasing sequence `k_1 >= … >= |k_{n-1}|`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HarmonicIndex {
    pub l: usize,
    pub k: Vec<i64>,
}

impl HarmonicIndex {
    pub fn new(n: usize, l: usize, k: Vec<i64>) -> Result<Self> {
        let idx = Self { l, k };
        if idx.is_valid_for(n) {
            Ok(idx)
        } else {
            domain(format!("invalid harmonic index {idx:?} for S^{n}"))
        }
    }

    /// The rotation-invariant index `(l; 0, …, 0)`.
    pub fn zonal(n: usize, l: usize) -> Self {
        Self {
            l,
            k: vec![0; n.saturating_sub(1)],
        }
    }

    pub fn is_valid_for(&self, n: usize) -> bool {
        if n < 2 || self.k.len() != n - 1 {
            return false;
        }
        let mut prev = self.l as i64;
        let last = self.k.len() - 1;
        for (i, &k) in self.k.iter().enumerate() {
            let m = if i == last { k.abs() } else { k };
            if m < 0 || m > prev {
                return false;
            }
            prev = m;
        }
        true
    }

    pub fn is_zonal(&self) -> bool {
        self.k.iter().all(|&k| k == 0)
    }
}

fn check_dimension(n: usize) -> Result<()> {
    if n < 2 {
        domain(format!("sphere dimension must be >= 2, got {n}"))
    } else {
        Ok(())
    }
}

fn binomial(n: u128, k: u128) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) / (i + 1))
}

/// `N(n, l) = (n + 2l - 1) (n + l - 2)! / ((n - 1)! l!)`.
///
/// Panics if `n < 2`.
pub fn dim_harmonic(n: usize, l: usize) -> usize {
    assert!(n >= 2, "sphere dimension must be >= 2");
    let (n, l) = (n as u128, l as u128);
    ((n + 2 * l - 1) * binomial(n + l - 2, l) / (n - 1)) as usize
}

/// All indices of degree `l` in ascending lexicographic order of `k`.
pub fn enumerate_indices(n: usize, l: usize) -> Vec<HarmonicIndex> {
    assert!(n >= 2, "sphere dimension must be >= 2");
    let mut out = Vec::with_capacity(dim_harmonic(n, l));
    let mut k = Vec::with_capacity(n - 1);
    fill_indices(n - 1, l as i64, l, &mut k, &mut out);
    out
}

fn fill_indices(
    slots: usize,
    bound: i64,
    l: usize,
    k: &mut Vec<i64>,
    out: &mut Vec<HarmonicIndex>,
) {
    if slots == 1 {
        for last in -bound..=bound {
            k.push(last);
            out.push(HarmonicIndex { l, k: k.clone() });
            k.pop();
        }
        return;
    }
    for next in 0..=bound {
        k.push(next);
        fill_indices(slots - 1, next, l, k, out);
        k.pop();
    }
}

/// Per-factor Gegenbauer parameters `(μ_τ, degree_τ, |k_τ|)` for τ = 1..n-1.
fn factors(n: usize, idx: &HarmonicIndex) -> impl Iterator<Item = (f64, usize, usize)> + '_ {
    let mut prev = idx.l as i64;
    idx.k.iter().enumerate().map(move |(i, &k)| {
        let tau = i + 1;
        let m = k.unsigned_abs() as usize;
        let deg = (prev - k.abs()) as usize;
        prev = k.abs();
        ((n - tau) as f64 / 2.0 + m as f64, deg, m)
    })
}

/// `A_l^k`.
pub fn normalization(n: usize, idx: &HarmonicIndex) -> f64 {
    let ln_norms: f64 = factors(n, idx)
        .map(|(mu, deg, _)| ln_gegenbauer_squared_norm(mu, deg))
        .sum();
    (0.5 * (sphere_area(n).ln() - (2.0 * PI).ln() - ln_norms)).exp()
}

/// `A_l^0 = (λ + l) / (λ √N(n, l))`.
pub fn zonal_normalization(n: usize, l: usize) -> f64 {
    let lambda = (n as f64 - 1.0) / 2.0;
    (lambda + l as f64) / (lambda * (dim_harmonic(n, l) as f64).sqrt())
}

/// Gegenbauer coefficient `f̂(l) = A_l^0 a_l^0` of a zonal function with
/// Fourier coefficient `a_l^0`.
pub fn gegenbauer_coeff_from_fourier(n: usize, l: usize, a: Complex64) -> Result<Complex64> {
    check_dimension(n)?;
    Ok(a * zonal_normalization(n, l))
}

fn check_point(n: usize, point: &[f64]) -> Result<()> {
    if point.len() != n {
        return Err(Error::Mismatch {
            what: "angle tuple length",
            expected: n,
            got: point.len(),
        });
    }
    Ok(())
}

/// `Y_l^k` at the angle tuple `point`.
pub fn eval_harmonic(n: usize, idx: &HarmonicIndex, point: &[f64]) -> Result<Complex64> {
    check_dimension(n)?;
    if !idx.is_valid_for(n) {
        return domain(format!("invalid harmonic index {idx:?} for S^{n}"));
    }
    check_point(n, point)?;
    let mut value = normalization(n, idx);
    for ((mu, deg, m), theta) in factors(n, idx).zip(point) {
        value *= gegenbauer_unchecked(mu, deg, theta.cos()) * theta.sin().powi(m as i32);
    }
    let phase = idx.k[n - 2] as f64 * point[n - 1];
    Ok(Complex64::from_polar(value, phase))
}

/// Ambient coordinates of an angle tuple.
pub fn to_cartesian(point: &[f64]) -> Vec<f64> {
    let n = point.len();
    let mut x = Vec::with_capacity(n + 1);
    let mut s = 1.0;
    for &theta in &point[..n - 1] {
        x.push(s * theta.cos());
        s *= theta.sin();
    }
    let phi = point[n - 1];
    x.push(s * phi.cos());
    x.push(s * phi.sin());
    x
}

/// Angle tuple of a nonzero vector in `R^{n+1}`; undefined trailing angles
/// are set to zero.
pub fn from_cartesian(x: &[f64]) -> Vec<f64> {
    let n = x.len() - 1;
    let mut angles = Vec::with_capacity(n);
    let mut tail: f64 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    for &xi in &x[..n - 1] {
        let theta = if tail > 0.0 {
            (xi / tail).clamp(-1.0, 1.0).acos()
        } else {
            0.0
        };
        angles.push(theta);
        tail = (tail * tail - xi * xi).max(0.0).sqrt();
    }
    let mut phi = x[n].atan2(x[n - 1]);
    if phi < 0.0 {
        phi += 2.0 * PI;
    }
    if phi >= 2.0 * PI {
        phi = 0.0;
    }
    angles.push(phi);
    angles
}

/// Product quadrature on `S^n` exact for polynomials of degree `2 band`.
///
/// Each `cos θ_τ` uses a `(band + 1)`-point Gauss rule for the weight
/// `(1 - t^2)^{(n - τ - 1)/2}`, which absorbs the `sin^{n-τ} θ_τ` Jacobian,
/// and `φ` uses `2 band + 1` equispaced points.
#[derive(Clone, Debug)]
pub struct SphereGrid {
    n: usize,
    band: usize,
    axes: Vec<GaussRule>,
    phis: Vec<f64>,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

pub fn build_sphere_grid(n: usize, band: usize) -> Result<SphereGrid> {
    check_dimension(n)?;
    let axes: Vec<GaussRule> = (1..n)
        .map(|tau| gauss_gegenbauer(band + 1, (n - tau) as f64 / 2.0))
        .collect::<Result<_>>()?;
    let nphi = 2 * band + 1;
    let phis: Vec<f64> = (0..nphi).map(|j| 2.0 * PI * j as f64 / nphi as f64).collect();
    let wphi = 2.0 * PI / nphi as f64;

    let total = (band + 1).pow((n - 1) as u32) * nphi;
    let mut nodes = Vec::with_capacity(total * n);
    let mut weights = Vec::with_capacity(total);
    let mut digits = vec![0usize; n - 1];
    loop {
        let mut w = wphi;
        let mut thetas = Vec::with_capacity(n - 1);
        for (axis, &d) in axes.iter().zip(&digits) {
            w *= axis.weights[d];
            thetas.push(axis.nodes[d].clamp(-1.0, 1.0).acos());
        }
        for &phi in &phis {
            nodes.extend_from_slice(&thetas);
            nodes.push(phi);
            weights.push(w);
        }
        // odometer over the θ axes, last axis fastest
        let mut pos = n - 1;
        loop {
            if pos == 0 {
                return Ok(SphereGrid {
                    n,
                    band,
                    axes,
                    phis,
                    nodes,
                    weights,
                });
            }
            pos -= 1;
            digits[pos] += 1;
            if digits[pos] <= band {
                break;
            }
            digits[pos] = 0;
        }
    }
}

impl SphereGrid {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Polynomial fields of degree `<= band` are analyzed exactly.
    pub fn band(&self) -> usize {
        self.band
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.nodes[i * self.n..(i + 1) * self.n]
    }

    pub fn nodes(&self) -> impl Iterator<Item = &[f64]> {
        self.nodes.chunks_exact(self.n)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Maximal deviation of the quadrature Gram matrix of all harmonics with
    /// `l <= band` from the identity.
    pub fn parseval_self_test(&self) -> f64 {
        let basis = Basis::new(self, self.band);
        let idx = all_indices(self.n, self.band);
        let cols: Vec<Vec<Complex64>> = idx
            .iter()
            .map(|i| (0..self.len()).map(|p| basis.eval(i, p)).collect())
            .collect();
        let area = sphere_area(self.n);
        let mut worst: f64 = 0.0;
        for (a, ca) in cols.iter().enumerate() {
            for (b, cb) in cols.iter().enumerate().skip(a) {
                let g: Complex64 = ca
                    .iter()
                    .zip(cb)
                    .zip(&self.weights)
                    .map(|((x, y), &w)| x.conj() * y * w)
                    .sum::<Complex64>()
                    / area;
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((g - target).norm());
            }
        }
        worst
    }
}

/// Lookup tables for evaluating every `Y_l^k` with `l <= band` on the nodes of
/// a [`SphereGrid`].
pub(crate) struct Basis<'g> {
    grid: &'g SphereGrid,
    width: usize,
    // tables[τ][node * width^2 + |k_τ| * width + degree]
    tables: Vec<Vec<f64>>,
    // phases[(k + band) * nphi + j] = e^{i k φ_j}
    phases: Vec<Complex64>,
    // node-index stride of each θ axis
    strides: Vec<usize>,
    band: usize,
}

impl<'g> Basis<'g> {
    pub(crate) fn new(grid: &'g SphereGrid, band: usize) -> Self {
        let n = grid.n;
        let width = band + 1;
        let tables = grid
            .axes
            .iter()
            .enumerate()
            .map(|(i, axis)| {
                let tau = i + 1;
                let mut t = vec![0.0; axis.len() * width * width];
                for (p, &x) in axis.nodes.iter().enumerate() {
                    let s = (1.0 - x * x).max(0.0).sqrt();
                    for m in 0..=band {
                        let mu = (n - tau) as f64 / 2.0 + m as f64;
                        let sm = s.powi(m as i32);
                        for deg in 0..=(band - m) {
                            t[p * width * width + m * width + deg] =
                                gegenbauer_unchecked(mu, deg, x) * sm;
                        }
                    }
                }
                t
            })
            .collect();
        let nphi = grid.phis.len();
        let mut phases = Vec::with_capacity((2 * band + 1) * nphi);
        for k in -(band as i64)..=(band as i64) {
            for &phi in &grid.phis {
                phases.push(Complex64::from_polar(1.0, k as f64 * phi));
            }
        }
        let strides = (0..n - 1)
            .map(|tau| (grid.band + 1).pow((n - 2 - tau) as u32))
            .collect();
        Self {
            grid,
            width,
            tables,
            phases,
            strides,
            band,
        }
    }

    /// Unnormalized product `∏_τ C(cos θ_τ) sin^{|k_τ|} θ_τ · e^{ikφ}` at node `p`.
    fn raw(&self, idx: &HarmonicIndex, p: usize) -> Complex64 {
        let n = self.grid.n;
        let nphi = self.grid.phis.len();
        let outer = p / nphi;
        let jphi = p % nphi;
        let mut value = 1.0;
        let mut prev = idx.l as i64;
        for (tau, &k) in idx.k.iter().enumerate() {
            let m = k.unsigned_abs() as usize;
            let deg = (prev - k.abs()) as usize;
            prev = k.abs();
            let digit = (outer / self.strides[tau]) % (self.grid.band + 1);
            value *= self.tables[tau][digit * self.width * self.width + m * self.width + deg];
        }
        let k = idx.k[n - 2];
        self.phases[(k + self.band as i64) as usize * nphi + jphi] * value
    }

    pub(crate) fn eval(&self, idx: &HarmonicIndex, p: usize) -> Complex64 {
        self.raw(idx, p) * normalization(self.grid.n, idx)
    }
}

fn all_indices(n: usize, band: usize) -> Vec<HarmonicIndex> {
    (0..=band).flat_map(|l| enumerate_indices(n, l)).collect()
}

/// Coefficients `a_l^k` for `l <= band_limit`, stored degree by degree in
/// the order of [`enumerate_indices`].
#[derive(Clone, Debug, PartialEq)]
pub struct HarmonicCoefficients {
    n: usize,
    band_limit: usize,
    indices: Vec<HarmonicIndex>,
    offsets: Vec<usize>,
    values: Vec<Complex64>,
}

impl HarmonicCoefficients {
    pub fn zeros(n: usize, band_limit: usize) -> Result<Self> {
        check_dimension(n)?;
        let indices = all_indices(n, band_limit);
        let mut offsets = Vec::with_capacity(band_limit + 2);
        let mut acc = 0;
        for l in 0..=band_limit {
            offsets.push(acc);
            acc += dim_harmonic(n, l);
        }
        offsets.push(acc);
        let values = vec![Complex64::new(0.0, 0.0); indices.len()];
        Ok(Self {
            n,
            band_limit,
            indices,
            offsets,
            values,
        })
    }

    pub fn from_values(n: usize, band_limit: usize, values: Vec<Complex64>) -> Result<Self> {
        let mut c = Self::zeros(n, band_limit)?;
        if values.len() != c.values.len() {
            return Err(Error::Mismatch {
                what: "harmonic coefficient count",
                expected: c.values.len(),
                got: values.len(),
            });
        }
        c.values = values;
        Ok(c)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn band_limit(&self) -> usize {
        self.band_limit
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn indices(&self) -> &[HarmonicIndex] {
        &self.indices
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (&HarmonicIndex, &Complex64)> {
        self.indices.iter().zip(&self.values)
    }

    /// Positions of degree `l` in [`Self::values`].
    pub fn degree_range(&self, l: usize) -> Range<usize> {
        self.offsets[l]..self.offsets[l + 1]
    }

    pub fn degree(&self, l: usize) -> &[Complex64] {
        &self.values[self.degree_range(l)]
    }

    pub fn degree_mut(&mut self, l: usize) -> &mut [Complex64] {
        let r = self.degree_range(l);
        &mut self.values[r]
    }

    /// `Σ_k |a_l^k|^2`.
    pub fn degree_energy(&self, l: usize) -> f64 {
        self.degree(l).iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|a| a.norm_sqr()).sum()
    }

    fn position(&self, idx: &HarmonicIndex) -> Option<usize> {
        if idx.l > self.band_limit || !idx.is_valid_for(self.n) {
            return None;
        }
        let r = self.degree_range(idx.l);
        self.indices[r.clone()]
            .binary_search_by(|probe| probe.k.cmp(&idx.k))
            .ok()
            .map(|p| r.start + p)
    }

    pub fn get(&self, idx: &HarmonicIndex) -> Option<Complex64> {
        self.position(idx).map(|p| self.values[p])
    }

    pub fn set(&mut self, idx: &HarmonicIndex, value: Complex64) -> Result<()> {
        match self.position(idx) {
            Some(p) => {
                self.values[p] = value;
                Ok(())
            }
            None => domain(format!(
                "index {idx:?} outside S^{} band {}",
                self.n, self.band_limit
            )),
        }
    }

    /// Copy truncated or zero-padded to a new band limit.
    pub fn with_band_limit(&self, band_limit: usize) -> Self {
        let mut out = Self::zeros(self.n, band_limit).expect("dimension already validated");
        let keep = self.band_limit.min(band_limit);
        let end = self.offsets[keep + 1];
        out.values[..end].copy_from_slice(&self.values[..end]);
        out
    }
}

/// `a_l^k = (1/Σ_n) Σ_nodes conj(Y_l^k) f w` for `l <= band_limit`.
pub fn analyze(samples: &[Complex64], grid: &SphereGrid, band_limit: usize) -> Result<HarmonicCoefficients> {
    analyze_with(Exec::default(), samples, grid, band_limit)
}

pub fn analyze_with(
    exec: Exec,
    samples: &[Complex64],
    grid: &SphereGrid,
    band_limit: usize,
) -> Result<HarmonicCoefficients> {
    if samples.len() != grid.len() {
        return Err(Error::Mismatch {
            what: "samples on sphere grid",
            expected: grid.len(),
            got: samples.len(),
        });
    }
    if band_limit > grid.band {
        return Err(Error::BandLimit(format!(
            "analysis to degree {band_limit} needs a grid of band >= {band_limit}, got {}",
            grid.band
        )));
    }
    let mut coeffs = HarmonicCoefficients::zeros(grid.n, band_limit)?;
    let basis = Basis::new(grid, band_limit);
    let area = sphere_area(grid.n);
    let values = exec.map(coeffs.indices.len(), |i| {
        let idx = &coeffs.indices[i];
        let s: Complex64 = samples
            .iter()
            .zip(&grid.weights)
            .enumerate()
            .map(|(p, (f, &w))| basis.raw(idx, p).conj() * f * w)
            .sum();
        s * normalization(grid.n, idx) / area
    });
    coeffs.values = values;
    Ok(coeffs)
}

/// `Σ a_l^k Y_l^k` at every grid node.
pub fn synthesize(coeffs: &HarmonicCoefficients, grid: &SphereGrid) -> Result<Vec<Complex64>> {
    synthesize_with(Exec::default(), coeffs, grid)
}

pub fn synthesize_with(
    exec: Exec,
    coeffs: &HarmonicCoefficients,
    grid: &SphereGrid,
) -> Result<Vec<Complex64>> {
    if coeffs.n != grid.n {
        return Err(Error::Mismatch {
            what: "sphere dimension",
            expected: grid.n,
            got: coeffs.n,
        });
    }
    if coeffs.band_limit > grid.band {
        return Err(Error::BandLimit(format!(
            "coefficients of band {} on a grid of band {}",
            coeffs.band_limit, grid.band
        )));
    }
    let basis = Basis::new(grid, coeffs.band_limit);
    let scaled: Vec<Complex64> = coeffs
        .iter()
        .map(|(idx, a)| a * normalization(grid.n, idx))
        .collect();
    Ok(exec.map(grid.len(), |p| {
        coeffs
            .indices
            .iter()
            .zip(&scaled)
            .filter(|(_, a)| a.norm_sqr() != 0.0)
            .map(|(idx, a)| a * basis.raw(idx, p))
            .sum()
    }))
}

/// Evaluates `Σ a_l^k Y_l^k` at arbitrary angle tuples.
#[derive(Clone, Debug)]
pub struct PointEvaluator {
    n: usize,
    band: usize,
    // (coefficient times A_l^k, index) for the nonzero coefficients
    terms: Vec<(Complex64, HarmonicIndex)>,
}

impl PointEvaluator {
    pub fn new(coeffs: &HarmonicCoefficients) -> Self {
        let terms = coeffs
            .iter()
            .filter(|(_, a)| a.norm_sqr() != 0.0)
            .map(|(idx, a)| (a * normalization(coeffs.n, idx), idx.clone()))
            .collect();
        Self {
            n: coeffs.n,
            band: coeffs.band_limit,
            terms,
        }
    }

    pub fn eval(&self, point: &[f64]) -> Result<Complex64> {
        check_point(self.n, point)?;
        let (n, band) = (self.n, self.band);
        let w = band + 1;
        // tables[τ][|k_τ| * w + degree]
        let tables: Vec<Vec<f64>> = (1..n)
            .map(|tau| {
                let (s, c) = point[tau - 1].sin_cos();
                let mut t = vec![0.0; w * w];
                let mut sm = 1.0;
                for m in 0..=band {
                    let mu = (n - tau) as f64 / 2.0 + m as f64;
                    let row = &mut t[m * w..m * w + band - m + 1];
                    gegenbauer_fill(mu, c, row);
                    row.iter_mut().for_each(|v| *v *= sm);
                    sm *= s;
                }
                t
            })
            .collect();
        let phi = point[n - 1];
        let phases: Vec<Complex64> = (-(band as i64)..=band as i64)
            .map(|k| Complex64::from_polar(1.0, k as f64 * phi))
            .collect();
        Ok(self
            .terms
            .iter()
            .map(|(a, idx)| {
                let mut prev = idx.l as i64;
                let mut v = 1.0;
                for (tau, &k) in idx.k.iter().enumerate() {
                    let m = k.unsigned_abs() as usize;
                    v *= tables[tau][m * w + (prev - k.abs()) as usize];
                    prev = k.abs();
                }
                a * phases[(idx.k[n - 2] + band as i64) as usize] * v
            })
            .sum())
    }
}
