//! Frame certification: β tables, scale and rotation grids and random trials
//! combined into a pass/fail report.
//!
//! The rotation deviation `δ̂` is estimated by halving every cap: for a grid
//! of spacing `δ` the error of a midpoint-type rule shrinks roughly fourfold
//! under halving, so `|E(δ) - E(δ/2)|` underestimates the error of `E(δ)` by
//! about a quarter, and the report doubles it.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{domain, precondition, Result};
use crate::exec::Exec;
use crate::harmonics::build_sphere_grid;
use crate::rotation_grid::{build_rotation_grid_capped, DEFAULT_GRID_CAP};
use crate::scale_grid::{
    build_scale_grid_with_rule, covering_grid, epsilon_report_from, ScaleGrid, WeightRule,
    DEFAULT_COVERAGE,
};
use crate::transform::{discrete_energy, energy_identity_oracle, random_bandlimited, trial_seeds};
use crate::wavelet_spectra::{
    beta_table_with, wavelet_bounds, DirectionalWavelet, ScaleDensity, ScaleQuadrature,
    SpectralProfile,
};

pub const DEFAULT_TOLERANCE: f64 = 0.1;

/// `(u, v)` samples per axis for the sup-norm estimates of [`error_budget`].
pub const BUDGET_SAMPLES: usize = 400;

/// Explicit geometric scale grid `ρ_j = ρ_max X^{-j}`, `j = 0..=count`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExplicitScales {
    pub rho_max: f64,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertifyConfig {
    pub n: usize,
    pub profile: SpectralProfile,
    pub band_limit: usize,
    /// Scale ratio `X_0`.
    pub ratio: f64,
    pub rule: WeightRule,
    /// `None` spans the covering range of the active degrees.
    pub scales: Option<ExplicitScales>,
    /// `(δ_n, …, δ_1)` of the coarsest grid tried.
    pub deltas: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub tolerance: f64,
    /// How many times all caps may be halved while the verdict is fail.
    pub max_refinements: usize,
    pub grid_cap: usize,
}

impl CertifyConfig {
    pub fn new(n: usize, profile: SpectralProfile, band_limit: usize, deltas: Vec<f64>) -> Self {
        Self {
            n,
            profile,
            band_limit,
            ratio: 1.5,
            rule: WeightRule::Midpoint,
            scales: None,
            deltas,
            trials: 20,
            seed: 0,
            tolerance: DEFAULT_TOLERANCE,
            max_refinements: 0,
            grid_cap: DEFAULT_GRID_CAP,
        }
    }

    pub fn scale_grid(&self, density: &ScaleDensity) -> Result<ScaleGrid> {
        match self.scales {
            Some(s) => build_scale_grid_with_rule(s.rho_max, self.ratio, s.count, self.rule),
            None => covering_grid(density, self.band_limit, self.ratio, self.rule, DEFAULT_COVERAGE),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub seed: u64,
    pub norm_sqr: f64,
    /// Discrete energy on the certified grid.
    pub energy: f64,
    /// Discrete energy with every rotation cap halved.
    pub refined_energy: f64,
    /// `Σ_l β(l) ‖f_l‖²`.
    pub oracle: f64,
    /// `energy / ‖f‖²`.
    pub ratio: f64,
    /// `|energy - oracle| / ‖f‖²`.
    pub discrepancy: f64,
    pub in_bounds: bool,
}

/// Frame bounds rescaled by `2/(A+B)` to the form `(1 - ε, 1 + ε)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalizedBounds {
    pub scale: f64,
    pub epsilon: f64,
    pub lower: f64,
    pub upper: f64,
    pub ratios: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameReport {
    pub n: usize,
    pub band_limit: usize,
    pub profile: SpectralProfile,
    pub a: f64,
    pub b: f64,
    /// `(B - A)/(A + B)`.
    pub epsilon_norm: f64,
    pub tail: Option<f64>,
    pub epsilon_hat: f64,
    pub delta_hat: f64,
    pub tolerance: f64,
    /// Caps of the certified grid.
    pub deltas: Vec<f64>,
    pub refinements: usize,
    pub rotation_count: usize,
    pub scale_count: usize,
    pub ratio: f64,
    /// Means over the trials.
    pub mean_energy: f64,
    pub mean_oracle: f64,
    pub mean_ratio: f64,
    pub max_discrepancy: f64,
    pub ratios_ok: bool,
    pub budget_ok: bool,
    pub discrepancy_ok: bool,
    pub verdict: Verdict,
    pub normalized: NormalizedBounds,
    pub trials: Vec<TrialReport>,
}

/// Runs the trials, halving the rotation caps up to `max_refinements` times
/// until the verdict is pass.
pub fn certify_frame(config: &CertifyConfig) -> Result<FrameReport> {
    certify_frame_with(Exec::default(), config)
}

pub fn certify_frame_with(exec: Exec, config: &CertifyConfig) -> Result<FrameReport> {
    let n = config.n;
    if config.trials == 0 {
        return precondition("at least one trial is required");
    }
    if !(config.tolerance >= 0.0 && config.tolerance.is_finite()) {
        return domain(format!("tolerance must be nonnegative, got {}", config.tolerance));
    }
    let band = config.band_limit;
    let profile = &config.profile;
    let quad = ScaleQuadrature::default();
    let beta = beta_table_with(exec, n, profile, band, &quad)?;
    let bounds = wavelet_bounds(&beta)?;
    let density = ScaleDensity::new(n, profile, band)?;
    let scales = config.scale_grid(&density)?;
    let eps = epsilon_report_from(&density, &beta, &scales)?;
    let sphere = build_sphere_grid(n, band)?;
    let fields = trial_seeds(config.seed, config.trials)
        .into_iter()
        .map(|s| random_bandlimited(n, band, beta.order, s))
        .collect::<Result<Vec<_>>>()?;
    let oracles = fields
        .iter()
        .map(|f| energy_identity_oracle(n, profile, f, &beta))
        .collect::<Result<Vec<_>>>()?;
    let energies = |deltas: &[f64]| -> Result<(Vec<f64>, usize)> {
        let rotations = build_rotation_grid_capped(n, deltas, config.grid_cap)?;
        let e = fields
            .iter()
            .map(|f| discrete_energy(exec, n, profile, f, &scales, &rotations, &sphere))
            .collect::<Result<Vec<_>>>()?;
        Ok((e, rotations.len()))
    };

    let mut deltas = config.deltas.clone();
    let (mut coarse, mut count) = energies(&deltas)?;
    let mut level = 0;
    loop {
        let halved: Vec<f64> = deltas.iter().map(|d| d / 2.0).collect();
        let (fine, fine_count) = energies(&halved)?;
        let report = assemble(config, &bounds, eps.epsilon_hat, &deltas, level, count, &scales, &fields, &oracles, &coarse, &fine)?;
        log::info!(
            "refinement {level}: {count} rotations, delta_hat {:.3e}, verdict {:?}",
            report.delta_hat,
            report.verdict
        );
        if report.verdict == Verdict::Pass || level >= config.max_refinements {
            return Ok(report);
        }
        deltas = halved;
        coarse = fine;
        count = fine_count;
        level += 1;
    }
}

#[allow(clippy::too_many_arguments)]
fn assemble(
    config: &CertifyConfig,
    bounds: &crate::wavelet_spectra::WaveletBounds,
    epsilon_hat: f64,
    deltas: &[f64],
    refinements: usize,
    rotation_count: usize,
    scales: &ScaleGrid,
    fields: &[crate::transform::TestField],
    oracles: &[f64],
    coarse: &[f64],
    fine: &[f64],
) -> Result<FrameReport> {
    let (a, b, tau) = (bounds.a, bounds.b, config.tolerance);
    let trials: Vec<TrialReport> = fields
        .iter()
        .zip(oracles)
        .zip(coarse.iter().zip(fine))
        .map(|((f, &oracle), (&energy, &refined))| {
            let norm = f.norm_sqr();
            let ratio = energy / norm;
            TrialReport {
                seed: f.seed,
                norm_sqr: norm,
                energy,
                refined_energy: refined,
                oracle,
                ratio,
                discrepancy: (energy - oracle).abs() / norm,
                in_bounds: ratio >= a * (1.0 - tau) && ratio <= b * (1.0 + tau),
            }
        })
        .collect();
    let delta_hat = trials
        .iter()
        .map(|t| 2.0 * (t.energy - t.refined_energy).abs() / t.oracle)
        .fold(0.0, f64::max);
    let epsilon_norm = (b - a) / (a + b);
    let count = trials.len() as f64;
    let max_discrepancy = trials.iter().map(|t| t.discrepancy).fold(0.0, f64::max);
    let ratios_ok = trials.iter().all(|t| t.in_bounds);
    let budget_ok = epsilon_hat + delta_hat < 1.0 - epsilon_norm;
    let mut report = FrameReport {
        n: config.n,
        band_limit: config.band_limit,
        profile: config.profile.clone(),
        a,
        b,
        epsilon_norm,
        tail: bounds.tail,
        epsilon_hat,
        delta_hat,
        tolerance: tau,
        deltas: deltas.to_vec(),
        refinements,
        rotation_count,
        scale_count: scales.len(),
        ratio: scales.ratio,
        mean_energy: trials.iter().map(|t| t.energy).sum::<f64>() / count,
        mean_oracle: trials.iter().map(|t| t.oracle).sum::<f64>() / count,
        mean_ratio: trials.iter().map(|t| t.ratio).sum::<f64>() / count,
        max_discrepancy,
        ratios_ok,
        budget_ok,
        discrepancy_ok: max_discrepancy < 1.0 - epsilon_hat,
        verdict: if ratios_ok && budget_ok { Verdict::Pass } else { Verdict::Fail },
        normalized: NormalizedBounds {
            scale: 0.0,
            epsilon: 0.0,
            lower: 0.0,
            upper: 0.0,
            ratios: Vec::new(),
        },
        trials,
    };
    report.normalized = normalize_bounds(&report)?;
    Ok(report)
}

/// Rescales the bounds by `2/(A+B)`; the bounds become `(1 - ε, 1 + ε)`
/// with `ε = (B - A)/(A + B)`.
pub fn normalize_bounds(report: &FrameReport) -> Result<NormalizedBounds> {
    let (a, b) = (report.a, report.b);
    if !(a > 0.0 && b >= a) {
        return domain(format!("frame bounds must satisfy 0 < A <= B, got A={a}, B={b}"));
    }
    let scale = 2.0 / (a + b);
    let epsilon = (b - a) / (a + b);
    Ok(NormalizedBounds {
        scale,
        epsilon,
        lower: a * scale,
        upper: b * scale,
        ratios: report.trials.iter().map(|t| t.ratio * scale).collect(),
    })
}

/// Sup-norm indicators of the rotation discretization error at one scale.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleBudget {
    pub rho: f64,
    pub sup: f64,
    pub gradient_sup: f64,
    /// `‖Ψ‖_∞ ‖∇*Ψ‖_∞ δ_J` for `J = n, …, 1`.
    pub levels: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorBudget {
    pub deltas: Vec<f64>,
    pub scales: Vec<ScaleBudget>,
    /// `E_J = Σ_j w_j ‖Ψ_j‖_∞ ‖∇*Ψ_j‖_∞ δ_J` for `J = n, …, 1`.
    pub levels: Vec<f64>,
    /// `Σ_J E_J`, with every unknown constant set to one.
    pub total: f64,
}

/// `(‖Ψ‖_∞, ‖∇*Ψ‖_∞)` by dense sampling of `u = cos θ`, `v = t sin θ`.
pub fn sup_norms(wavelet: &DirectionalWavelet, samples: usize) -> (f64, f64) {
    let samples = samples.max(2);
    let mut sup: f64 = 0.0;
    let mut grad: f64 = 0.0;
    let nt = samples / 8 + 2;
    for i in 0..=samples {
        let theta = PI * i as f64 / samples as f64;
        let (s, u) = theta.sin_cos();
        for k in 0..=nt {
            let t = -1.0 + 2.0 * k as f64 / nt as f64;
            let (f, g) = wavelet.value_and_gradient_uv(u, t * s);
            sup = sup.max(f.abs());
            grad = grad.max(g);
        }
    }
    (sup, grad)
}

/// Level indicators of the rotation discretization error. `band = None`
/// uses the automatic spectral cutoff at every scale.
pub fn error_budget(
    n: usize,
    profile: &SpectralProfile,
    scales: &ScaleGrid,
    deltas: &[f64],
    band: Option<usize>,
) -> Result<ErrorBudget> {
    error_budget_with(Exec::default(), n, profile, scales, deltas, band)
}

pub fn error_budget_with(
    exec: Exec,
    n: usize,
    profile: &SpectralProfile,
    scales: &ScaleGrid,
    deltas: &[f64],
    band: Option<usize>,
) -> Result<ErrorBudget> {
    if let Some(bad) = deltas.iter().find(|d| !(**d >= 0.0 && d.is_finite())) {
        return domain(format!("caps must be nonnegative, got {bad}"));
    }
    let per_scale = exec.try_map(scales.len(), |j| -> Result<ScaleBudget> {
        let rho = scales.scales[j];
        let w = DirectionalWavelet::new(profile, n, rho, band)?;
        let (sup, gradient_sup) = sup_norms(&w, BUDGET_SAMPLES);
        Ok(ScaleBudget {
            rho,
            sup,
            gradient_sup,
            levels: deltas.iter().map(|d| sup * gradient_sup * d).collect(),
        })
    })?;
    let levels: Vec<f64> = (0..deltas.len())
        .map(|i| per_scale.iter().zip(&scales.weights).map(|(s, w)| w * s.levels[i]).sum())
        .collect();
    Ok(ErrorBudget {
        deltas: deltas.to_vec(),
        total: levels.iter().sum(),
        levels,
        scales: per_scale,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scale_grid::build_scale_grid;
    use crate::wavelet_spectra::Preset;

    fn quick(preset: Preset, deltas: Vec<f64>) -> CertifyConfig {
        let mut c = CertifyConfig::new(2, preset.profile(2), 4, deltas);
        c.trials = 3;
        c.seed = 11;
        c
    }

    #[test]
    fn tight_zonal_family_passes() {
        let mut c = quick(Preset::AbelPoissonZonal, vec![0.3, 0.6]);
        c.profile = c.profile.with_amplitude(2.0);
        let r = certify_frame(&c).unwrap();
        assert_eq!(r.verdict, Verdict::Pass, "{r:?}");
        assert!((r.a - 1.0).abs() < 1e-8 && (r.b - 1.0).abs() < 1e-8);
        assert!(r.trials.iter().all(|t| (0.9..=1.1).contains(&t.ratio)));
        assert!(r.normalized.epsilon < 1e-8);
    }

    #[test]
    fn coarse_rotation_grid_fails() {
        let r = certify_frame(&quick(Preset::AbelPoisson, vec![PI, 2.0 * PI])).unwrap();
        assert_eq!(r.rotation_count, 1);
        assert_eq!(r.verdict, Verdict::Fail);
        assert!(r.delta_hat > 0.5, "{}", r.delta_hat);
    }

    #[test]
    fn refinement_reaches_a_pass() {
        let mut c = quick(Preset::AbelPoisson, vec![PI, 2.0 * PI]);
        c.max_refinements = 5;
        let r = certify_frame(&c).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        assert!(r.refinements >= 1);
        assert!((r.deltas[0] - PI / 2f64.powi(r.refinements as i32)).abs() < 1e-15);
    }

    #[test]
    fn precondition_errors() {
        let mut c = quick(Preset::AbelPoisson, vec![0.5, 0.5]);
        c.trials = 0;
        assert!(matches!(certify_frame(&c), Err(crate::Error::Precondition(_))));
        let mut c = quick(Preset::AbelPoisson, vec![0.001, 0.001]);
        c.grid_cap = 10_000;
        assert!(matches!(certify_frame(&c), Err(crate::Error::GridTooLarge { .. })));
    }

    #[test]
    fn amplitude_rescaling_keeps_the_verdict() {
        let base = quick(Preset::AbelPoisson, vec![0.4, 0.8]);
        let r1 = certify_frame(&base).unwrap();
        let mut scaled = base.clone();
        scaled.profile = scaled.profile.with_amplitude(3.0);
        let r2 = certify_frame(&scaled).unwrap();
        assert_eq!(r1.verdict, r2.verdict);
        assert!((r2.a / r1.a - 9.0).abs() < 1e-9 && (r2.b / r1.b - 9.0).abs() < 1e-9);
        for (t1, t2) in r1.trials.iter().zip(&r2.trials) {
            assert!((t2.ratio / t1.ratio - 9.0).abs() < 1e-9);
        }
    }

    #[test]
    fn energies_respect_the_budget() {
        let r = certify_frame(&quick(Preset::AbelPoisson, vec![0.3, 0.6])).unwrap();
        for t in &r.trials {
            assert!(t.discrepancy / (t.oracle / t.norm_sqr) <= r.epsilon_hat + r.delta_hat);
        }
        assert!(r.discrepancy_ok);
    }

    #[test]
    fn normalization_examples() {
        let mut r = certify_frame(&quick(Preset::AbelPoisson, vec![0.6, 1.2])).unwrap();
        r.a = 0.2;
        r.b = 0.3;
        let nb = normalize_bounds(&r).unwrap();
        assert!((nb.epsilon - 0.2).abs() < 1e-15);
        assert!((nb.lower - 0.8).abs() < 1e-15 && (nb.upper - 1.2).abs() < 1e-15);
        for (t, s) in r.trials.iter().zip(&nb.ratios) {
            assert!((s - t.ratio * 4.0).abs() < 1e-14);
        }
        r.b = 0.2;
        assert_eq!(normalize_bounds(&r).unwrap().epsilon, 0.0);
        r.a = 0.0;
        assert!(normalize_bounds(&r).is_err());
    }

    #[test]
    fn budget_examples() {
        let profile = Preset::AbelPoisson.profile(2);
        let scales = build_scale_grid(1.0, 2.0, 2).unwrap();
        let zero = error_budget(2, &profile, &scales, &[0.0, 0.0], Some(8)).unwrap();
        assert_eq!(zero.total, 0.0);
        let b1 = error_budget(2, &profile, &scales, &[0.3, 0.2], Some(8)).unwrap();
        let b2 = error_budget(2, &profile, &scales, &[0.3, 0.4], Some(8)).unwrap();
        assert_eq!(b2.levels[1], 2.0 * b1.levels[1]);
        assert_eq!(b2.levels[0], b1.levels[0]);
        // ρ_0 > ρ_1 > ρ_2: smaller scales are sharper
        let p: Vec<f64> = b1.scales.iter().map(|s| s.sup * s.gradient_sup).collect();
        assert!(p[0] < p[1] && p[1] < p[2], "{p:?}");
        assert!(error_budget(2, &profile, &scales, &[-1.0, 0.1], Some(8)).is_err());
    }

    #[test]
    fn sup_norm_sampling_is_consistent() {
        // zonal Abel-Poisson on S^2 peaks at the north pole
        let profile = Preset::AbelPoissonZonal.profile(2);
        let w = DirectionalWavelet::new(&profile, 2, 0.5, Some(40)).unwrap();
        let (sup, _) = sup_norms(&w, BUDGET_SAMPLES);
        assert!((sup - w.value_uv(1.0, 0.0).abs()).abs() <= 1e-12 * sup);
    }
}
