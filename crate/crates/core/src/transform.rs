//! The wavelet transform `W f(ρ, Υ) = (1/Σ_n) ∫ conj(Ψ_ρ(Υ^{-1} x)) f(x) dσ(x)`
//! by quadrature, random band-limited test fields and the energy identity.
//!
//! The wavelet is truncated at the band limit `L` of the field: its components
//! of higher degree are orthogonal to `f`, so the truncation does not change
//! `W f`, and the integrand has degree at most `2L`.
//!
//! Two evaluation paths share that integrand. [`TransformMethod::Naive`]
//! rotates every node by `Υ^{-1}`. [`TransformMethod::Fast`] substitutes
//! `x = Υ y`, so the wavelet is sampled once per scale on the fixed nodes, and
//! splits `Υ = Υ_o R_{n,n+1}(φ)`: `f ∘ Υ_o` is sampled once per outer rotation
//! and the innermost angle `φ` only shifts the azimuth of `y`, which a discrete
//! Fourier transform along each row of nodes resolves exactly.

use num_complex::Complex64;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{precondition, Error, Result};
use crate::exec::Exec;
use crate::harmonics::{
    from_cartesian, synthesize_with, to_cartesian, HarmonicCoefficients, PointEvaluator,
    SphereGrid,
};
use crate::rotation_grid::{EulerAngles, RotationGrid};
use crate::scale_grid::ScaleGrid;
use crate::special_functions::sphere_area;
use crate::wavelet_spectra::{BetaTable, DirectionalWavelet, SpectralProfile};

/// Unit-norm band-limited field with vanishing moments through `order`.
#[derive(Clone, Debug)]
pub struct TestField {
    pub coeffs: HarmonicCoefficients,
    pub seed: u64,
    /// `Some(m)` when `a_l^k = 0` for `l <= m`.
    pub order: Option<usize>,
    /// `‖f‖` before normalization.
    pub raw_norm: f64,
}

impl TestField {
    /// Wraps given coefficients without rescaling.
    pub fn from_coefficients(coeffs: HarmonicCoefficients, order: Option<usize>) -> Self {
        let raw_norm = coeffs.norm_sqr().sqrt();
        Self {
            coeffs,
            seed: 0,
            order,
            raw_norm,
        }
    }

    pub fn n(&self) -> usize {
        self.coeffs.n()
    }

    pub fn band_limit(&self) -> usize {
        self.coeffs.band_limit()
    }

    /// `‖f‖² = Σ |a_l^k|²`.
    pub fn norm_sqr(&self) -> f64 {
        self.coeffs.norm_sqr()
    }
}

/// Standard complex Gaussian coefficients for `order < l <= band_limit`,
/// normalized to `‖f‖ = 1`.
pub fn random_bandlimited(n: usize, band_limit: usize, order: Option<usize>, seed: u64) -> Result<TestField> {
    let first = order.map_or(0, |m| m + 1);
    if first > band_limit {
        return precondition(format!(
            "no degrees between the order {order:?} and the band limit {band_limit}"
        ));
    }
    let mut coeffs = HarmonicCoefficients::zeros(n, band_limit)?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    for l in first..=band_limit {
        for a in coeffs.degree_mut(l) {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            *a = Complex64::new(re, im) * scale;
        }
    }
    let raw_norm = coeffs.norm_sqr().sqrt();
    coeffs.values_mut().iter_mut().for_each(|a| *a /= raw_norm);
    Ok(TestField {
        coeffs,
        seed,
        order,
        raw_norm,
    })
}

/// Per-trial seeds derived from a master seed.
pub fn trial_seeds(master: u64, count: usize) -> Vec<u64> {
    let mut rng = ChaCha20Rng::seed_from_u64(master);
    (0..count).map(|_| rng.next_u64()).collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransformMethod {
    #[default]
    Fast,
    Naive,
}

/// `W[j, g]` for scales `ρ_j` and rotations `Υ_g`, scale-major.
#[derive(Clone, Debug, PartialEq)]
pub struct TransformTable {
    pub scales: usize,
    pub rotations: usize,
    pub values: Vec<Complex64>,
}

impl TransformTable {
    pub fn get(&self, j: usize, g: usize) -> Complex64 {
        self.values[j * self.rotations + g]
    }

    pub fn row(&self, j: usize) -> &[Complex64] {
        &self.values[j * self.rotations..(j + 1) * self.rotations]
    }
}

fn check_inputs(
    n: usize,
    profile: &SpectralProfile,
    f: &TestField,
    scales: &ScaleGrid,
    rotations: &RotationGrid,
    grid: &SphereGrid,
) -> Result<()> {
    for (what, got) in [
        ("field dimension", f.n()),
        ("rotation grid dimension", rotations.n),
        ("sphere grid dimension", grid.n()),
    ] {
        if got != n {
            return Err(Error::Mismatch {
                what,
                expected: n,
                got,
            });
        }
    }
    if grid.band() < f.band_limit() {
        return Err(Error::BandLimit(format!(
            "the transform of a band-{} field needs a sphere grid of band >= {}, got {}",
            f.band_limit(),
            f.band_limit(),
            grid.band()
        )));
    }
    if scales.is_empty() {
        return precondition("empty scale grid");
    }
    profile.validate(n, f.band_limit())
}

fn wavelets(profile: &SpectralProfile, n: usize, scales: &ScaleGrid, band: usize) -> Result<Vec<DirectionalWavelet>> {
    scales
        .scales
        .iter()
        .map(|&rho| DirectionalWavelet::new(profile, n, rho, Some(band)))
        .collect()
}

/// Precomputed pieces of the fast path.
struct FastKernel {
    nphi: usize,
    rows: usize,
    band: usize,
    grid_points: Vec<Vec<f64>>,
    // twiddle[(m + L) * nphi + j] = e^{-i m φ_j}
    twiddle: Vec<Complex64>,
    // wave[(s * rows + r) * (2L+1) + m + L] = (nphi w_r / Σ_n) conj(p̂_{s,r,m})
    wave: Vec<Complex64>,
    scales: usize,
    // innermost arc centers
    inner_phis: Vec<f64>,
    outer: Vec<EulerAngles>,
}

impl FastKernel {
    fn new(
        exec: Exec,
        n: usize,
        waves: &[DirectionalWavelet],
        rotations: &RotationGrid,
        grid: &SphereGrid,
        band: usize,
    ) -> Self {
        let nphi = 2 * grid.band() + 1;
        let rows = grid.len() / nphi;
        let width = 2 * band + 1;
        let phis: Vec<f64> = (0..nphi).map(|j| grid.node(j)[n - 1]).collect();
        let twiddle: Vec<Complex64> = (0..width)
            .flat_map(|mi| {
                let m = mi as f64 - band as f64;
                phis.iter().map(move |&p| Complex64::from_polar(1.0, -m * p))
            })
            .collect();
        let grid_points: Vec<Vec<f64>> = grid.nodes().map(to_cartesian).collect();
        let area = sphere_area(n);
        let wave_rows = exec.map(waves.len() * rows, |sr| {
            let (s, r) = (sr / rows, sr % rows);
            let samples: Vec<f64> = (0..nphi)
                .map(|j| waves[s].value(&grid_points[r * nphi + j]))
                .collect();
            let w = grid.weights()[r * nphi] / area;
            (0..width)
                .map(|mi| {
                    let tw = &twiddle[mi * nphi..(mi + 1) * nphi];
                    // nphi · p̂_m = Σ_j p_j e^{-imφ_j}
                    let s: Complex64 = samples.iter().zip(tw).map(|(p, t)| t * p).sum();
                    s.conj() * w
                })
                .collect::<Vec<_>>()
        });
        let sizes = rotations.sizes();
        let inner = rotations.partitions.last().expect("n >= 2 levels");
        let inner_phis = inner.cells.iter().map(|c| c.center[0]).collect();
        let outer_count: usize = sizes[..sizes.len() - 1].iter().product();
        let outer = (0..outer_count)
            .map(|o| {
                let mut angles = rotations.element(o * sizes[sizes.len() - 1]).euler.angles;
                *angles.last_mut().expect("level 1 angle") = 0.0;
                EulerAngles { n, angles }
            })
            .collect();
        Self {
            nphi,
            rows,
            band,
            grid_points,
            twiddle,
            wave: wave_rows.into_iter().flatten().collect(),
            scales: waves.len(),
            inner_phis,
            outer,
        }
    }

    /// `W[s, α_1]` for outer rotation `o`, scale-major.
    fn outer_block(&self, eval: &PointEvaluator, o: usize) -> Result<Vec<Complex64>> {
        let (nphi, rows, band) = (self.nphi, self.rows, self.band);
        let width = 2 * band + 1;
        let euler = &self.outer[o];
        let h: Vec<Complex64> = self
            .grid_points
            .iter()
            .map(|y| eval.eval(&from_cartesian(&euler.rotate(y))))
            .collect::<Result<_>>()?;
        // nphi · ĥ_{r,m}
        let mut hhat = vec![Complex64::new(0.0, 0.0); rows * width];
        for r in 0..rows {
            let hr = &h[r * nphi..(r + 1) * nphi];
            for mi in 0..width {
                let tw = &self.twiddle[mi * nphi..(mi + 1) * nphi];
                hhat[r * width + mi] = hr.iter().zip(tw).map(|(a, t)| a * t).sum::<Complex64>() / nphi as f64;
            }
        }
        let phases: Vec<Complex64> = self
            .inner_phis
            .iter()
            .flat_map(|&phi| (0..width).map(move |mi| Complex64::from_polar(1.0, (mi as f64 - band as f64) * phi)))
            .collect();
        let mut out = Vec::with_capacity(self.scales * self.inner_phis.len());
        let mut g = vec![Complex64::new(0.0, 0.0); width];
        for s in 0..self.scales {
            g.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
            for r in 0..rows {
                let c = &self.wave[(s * rows + r) * width..(s * rows + r + 1) * width];
                let hh = &hhat[r * width..(r + 1) * width];
                for mi in 0..width {
                    g[mi] += c[mi] * hh[mi];
                }
            }
            for a in 0..self.inner_phis.len() {
                let ph = &phases[a * width..(a + 1) * width];
                out.push(g.iter().zip(ph).map(|(x, p)| x * p).sum());
            }
        }
        Ok(out)
    }
}

/// Naive per-rotation quadrature.
fn naive_values(
    exec: Exec,
    n: usize,
    f: &TestField,
    waves: &[DirectionalWavelet],
    rotations: &RotationGrid,
    grid: &SphereGrid,
) -> Result<Vec<Complex64>> {
    let fx = synthesize_with(Exec::Sequential, &f.coeffs.with_band_limit(f.band_limit()), grid)?;
    let points: Vec<Vec<f64>> = grid.nodes().map(to_cartesian).collect();
    let area = sphere_area(n);
    let count = rotations.len();
    let per_rotation = exec.map(count, |g| {
        let euler = rotations.element(g).euler;
        let pulled: Vec<Vec<f64>> = points.iter().map(|x| euler.rotate_inverse(x)).collect();
        waves
            .iter()
            .map(|w| {
                pulled
                    .iter()
                    .zip(&fx)
                    .zip(grid.weights())
                    .map(|((y, fv), &wt)| fv * (w.value(y) * wt))
                    .sum::<Complex64>()
                    / area
            })
            .collect::<Vec<_>>()
    });
    let mut values = vec![Complex64::new(0.0, 0.0); waves.len() * count];
    for (g, col) in per_rotation.into_iter().enumerate() {
        for (s, v) in col.into_iter().enumerate() {
            values[s * count + g] = v;
        }
    }
    Ok(values)
}

pub fn wavelet_analysis(
    n: usize,
    profile: &SpectralProfile,
    f: &TestField,
    scales: &ScaleGrid,
    rotations: &RotationGrid,
    grid: &SphereGrid,
) -> Result<TransformTable> {
    wavelet_analysis_with(Exec::default(), TransformMethod::Fast, n, profile, f, scales, rotations, grid)
}

#[allow(clippy::too_many_arguments)]
pub fn wavelet_analysis_with(
    exec: Exec,
    method: TransformMethod,
    n: usize,
    profile: &SpectralProfile,
    f: &TestField,
    scales: &ScaleGrid,
    rotations: &RotationGrid,
    grid: &SphereGrid,
) -> Result<TransformTable> {
    check_inputs(n, profile, f, scales, rotations, grid)?;
    let band = f.band_limit();
    let waves = wavelets(profile, n, scales, band)?;
    let count = rotations.len();
    let values = match method {
        TransformMethod::Naive => naive_values(exec, n, f, &waves, rotations, grid)?,
        TransformMethod::Fast => {
            let kernel = FastKernel::new(exec, n, &waves, rotations, grid, band);
            let eval = PointEvaluator::new(&f.coeffs);
            let blocks = exec.try_map(kernel.outer.len(), |o| kernel.outer_block(&eval, o))?;
            let inner = kernel.inner_phis.len();
            let mut values = vec![Complex64::new(0.0, 0.0); waves.len() * count];
            for (o, block) in blocks.into_iter().enumerate() {
                for (i, v) in block.into_iter().enumerate() {
                    let (s, a) = (i / inner, i % inner);
                    values[s * count + o * inner + a] = v;
                }
            }
            values
        }
    };
    Ok(TransformTable {
        scales: waves.len(),
        rotations: count,
        values,
    })
}

/// `Σ_j w_j Σ_g (λ(Υ_g)/∏Σ_J) |W[j, g]|²`.
pub fn frame_energy(table: &TransformTable, scales: &ScaleGrid, rotations: &RotationGrid) -> Result<f64> {
    if table.scales != scales.len() || table.rotations != rotations.len() {
        return Err(Error::Mismatch {
            what: "transform table shape",
            expected: scales.len() * rotations.len(),
            got: table.scales * table.rotations,
        });
    }
    let weights: Vec<f64> = rotations.iter().map(|r| r.weight).collect();
    let total = rotations.total_measure();
    Ok(scales
        .weights
        .iter()
        .enumerate()
        .map(|(j, wj)| {
            wj * table
                .row(j)
                .iter()
                .zip(&weights)
                .map(|(v, w)| w * v.norm_sqr())
                .sum::<f64>()
        })
        .sum::<f64>()
        / total)
}

/// Discrete frame energy by the fast path without storing the table.
pub fn discrete_energy(
    exec: Exec,
    n: usize,
    profile: &SpectralProfile,
    f: &TestField,
    scales: &ScaleGrid,
    rotations: &RotationGrid,
    grid: &SphereGrid,
) -> Result<f64> {
    check_inputs(n, profile, f, scales, rotations, grid)?;
    let band = f.band_limit();
    let waves = wavelets(profile, n, scales, band)?;
    let kernel = FastKernel::new(exec, n, &waves, rotations, grid, band);
    let eval = PointEvaluator::new(&f.coeffs);
    let inner = rotations.partitions.last().expect("n >= 2 levels");
    let sizes = rotations.sizes();
    let outer_parts = &rotations.partitions[..sizes.len() - 1];
    let partial = exec.try_map(kernel.outer.len(), |o| -> Result<f64> {
        let block = kernel.outer_block(&eval, o)?;
        // outer weight from the multi-index of the first element in the block
        let idx = rotations.multi_index(o * inner.len());
        let w_outer: f64 = outer_parts.iter().zip(&idx).map(|(p, &a)| p.cells[a].measure).product();
        let mut e = 0.0;
        for (s, wj) in scales.weights.iter().enumerate() {
            let row = &block[s * inner.len()..(s + 1) * inner.len()];
            e += wj * row.iter().zip(&inner.cells).map(|(v, c)| c.measure * v.norm_sqr()).sum::<f64>();
        }
        Ok(w_outer * e)
    })?;
    Ok(partial.iter().sum::<f64>() / rotations.total_measure())
}

/// `Σ_l β(l) Σ_k |a_l^k|²`.
pub fn energy_identity_oracle(n: usize, profile: &SpectralProfile, f: &TestField, beta: &BetaTable) -> Result<f64> {
    if f.n() != n || beta.n != n {
        return Err(Error::Mismatch {
            what: "sphere dimension",
            expected: n,
            got: if f.n() != n { f.n() } else { beta.n },
        });
    }
    if beta.band_limit < f.band_limit() {
        return Err(Error::BandLimit(format!(
            "β known to degree {} for a field of band {}",
            beta.band_limit,
            f.band_limit()
        )));
    }
    profile.validate(n, f.band_limit())?;
    Ok((0..=f.band_limit())
        .map(|l| beta.beta(l) * f.coeffs.degree_energy(l))
        .sum())
}
