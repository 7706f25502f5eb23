//! Geometric scale grids and the deviation of the discretized `β` from the
//! continuous one.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::{domain, precondition, Error, Result};
use crate::exec::Exec;
use crate::wavelet_spectra::{beta_table_with, BetaTable, ScaleDensity, ScaleQuadrature, SpectralProfile};

/// Relative density at the grid ends above which coverage is reported as
/// insufficient.
pub const COVERAGE_WARNING: f64 = 1e-12;

/// Relative density used to size covering grids.
pub const DEFAULT_COVERAGE: f64 = 1e-16;

/// How the log-uniform weights treat the two ends of the grid.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightRule {
    /// Every scale carries `ln X` (it stands for the cell `[ρ_j/√X, ρ_j √X]`).
    #[default]
    Midpoint,
    /// `ρ_0` and `ρ_J` are the ends of the integration range and carry
    /// `ln X / 2` (trapezoid rule in `ln ρ`).
    Endpoint,
}

impl fmt::Display for WeightRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WeightRule::Midpoint => "midpoint",
            WeightRule::Endpoint => "endpoint",
        })
    }
}

impl FromStr for WeightRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "midpoint" => Ok(WeightRule::Midpoint),
            "endpoint" => Ok(WeightRule::Endpoint),
            _ => Err(Error::Parse(format!("unknown weight rule `{s}`"))),
        }
    }
}

/// Scales `ρ_j = ρ_max X^{-j}`, `j = 0..=J`, with log-uniform weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleGrid {
    pub scales: Vec<f64>,
    pub weights: Vec<f64>,
    pub ratio: f64,
    pub rule: WeightRule,
}

impl ScaleGrid {
    pub fn len(&self) -> usize {
        self.scales.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scales.is_empty()
    }

    pub fn rho_max(&self) -> f64 {
        self.scales[0]
    }

    pub fn rho_min(&self) -> f64 {
        *self.scales.last().expect("grid has at least one scale")
    }

    /// `J` in `ρ_J = ρ_max X^{-J}`.
    pub fn count(&self) -> usize {
        self.scales.len() - 1
    }
}

pub fn build_scale_grid(rho_max: f64, ratio: f64, count: usize) -> Result<ScaleGrid> {
    build_scale_grid_with_rule(rho_max, ratio, count, WeightRule::Midpoint)
}

pub fn build_scale_grid_with_rule(rho_max: f64, ratio: f64, count: usize, rule: WeightRule) -> Result<ScaleGrid> {
    if !(rho_max > 0.0 && rho_max.is_finite()) {
        return domain(format!("largest scale must be positive, got {rho_max}"));
    }
    if !(ratio > 1.0 && ratio.is_finite()) {
        return domain(format!("scale ratio must exceed 1, got {ratio}"));
    }
    let h = ratio.ln();
    let scales: Vec<f64> = (0..=count).map(|j| rho_max * (-(j as f64) * h).exp()).collect();
    let mut weights = vec![h; count + 1];
    if rule == WeightRule::Endpoint && count >= 1 {
        weights[0] *= 0.5;
        weights[count] *= 0.5;
    }
    Ok(ScaleGrid {
        scales,
        weights,
        ratio,
        rule,
    })
}

/// Interval of `ln ρ` outside which every active degree `1..=band` has
/// density below `coverage` times its peak.
pub fn covering_range(density: &ScaleDensity, band: usize, coverage: f64) -> Result<(f64, f64)> {
    let mut range: Option<(f64, f64)> = None;
    for l in 0..=band {
        if let Some((lo, hi)) = density.log_support(l, coverage) {
            range = Some(match range {
                None => (lo, hi),
                Some((a, b)) => (a.min(lo), b.max(hi)),
            });
        }
    }
    range.ok_or_else(|| Error::Precondition(format!("no active degree up to {band}")))
}

/// Geometric grid with ratio `X` spanning [`covering_range`].
pub fn covering_grid(
    density: &ScaleDensity,
    band: usize,
    ratio: f64,
    rule: WeightRule,
    coverage: f64,
) -> Result<ScaleGrid> {
    if !(ratio > 1.0 && ratio.is_finite()) {
        return domain(format!("scale ratio must exceed 1, got {ratio}"));
    }
    let (lo, hi) = covering_range(density, band, coverage)?;
    let count = ((hi - lo) / ratio.ln()).ceil().max(1.0) as usize;
    build_scale_grid_with_rule(hi.exp(), ratio, count, rule)
}

/// Largest relative density at the two grid ends for degree `l`.
pub fn end_coverage(density: &ScaleDensity, grid: &ScaleGrid, l: usize) -> f64 {
    if density.vanishes(l) {
        return 0.0;
    }
    let p = density.profile();
    // the density peaks where ρ^a q^b = c + d/(γb)
    let peak_rho = ((p.peak_u().ln() - p.b * p.q_at(l as f64).ln()) / p.a).exp();
    let peak = density.density(l, peak_rho);
    density.density(l, grid.rho_max()).max(density.density(l, grid.rho_min())) / peak
}

/// `Σ_j w_j (1/N(n,l)) Σ_κ |a_l^κ(Ψ_{ρ_j})|^2`.
pub fn discrete_beta_from(density: &ScaleDensity, grid: &ScaleGrid, l: usize) -> f64 {
    let cov = end_coverage(density, grid, l);
    if cov > COVERAGE_WARNING {
        log::warn!(
            "scale grid [{:.3e}, {:.3e}] misses part of the degree-{l} integrand (end density {cov:.2e} of peak)",
            grid.rho_min(),
            grid.rho_max()
        );
    }
    grid.scales
        .iter()
        .zip(&grid.weights)
        .map(|(&rho, &w)| w * density.density(l, rho))
        .sum()
}

pub fn discrete_beta(n: usize, profile: &SpectralProfile, grid: &ScaleGrid, l: usize) -> Result<f64> {
    let density = ScaleDensity::new(n, profile, l)?;
    Ok(discrete_beta_from(&density, grid, l))
}

/// Continuous and discrete `β` at one degree.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegreeDeviation {
    pub l: usize,
    pub beta_continuous: f64,
    pub beta_discrete: f64,
    pub rel_dev: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsilonReport {
    pub epsilon_hat: f64,
    pub ratio: f64,
    pub count: usize,
    pub rho_max: f64,
    pub rho_min: f64,
    pub rule: WeightRule,
    pub degrees: Vec<DegreeDeviation>,
}

/// `ε̂ = max_l |β_discrete(l) - β(l)| / β(l)` over the active degrees of `beta`.
pub fn epsilon_report_from(density: &ScaleDensity, beta: &BetaTable, grid: &ScaleGrid) -> Result<EpsilonReport> {
    let degrees: Vec<DegreeDeviation> = beta
        .active_degrees()
        .map(|l| {
            let cont = beta.beta(l);
            let disc = discrete_beta_from(density, grid, l);
            DegreeDeviation {
                l,
                beta_continuous: cont,
                beta_discrete: disc,
                rel_dev: (disc - cont).abs() / cont,
            }
        })
        .collect();
    if degrees.is_empty() {
        return precondition("no active degrees for the scale deviation");
    }
    Ok(EpsilonReport {
        epsilon_hat: degrees.iter().map(|d| d.rel_dev).fold(0.0, f64::max),
        ratio: grid.ratio,
        count: grid.count(),
        rho_max: grid.rho_max(),
        rho_min: grid.rho_min(),
        rule: grid.rule,
        degrees,
    })
}

pub fn epsilon_report(
    n: usize,
    profile: &SpectralProfile,
    grid: &ScaleGrid,
    band: usize,
    quad: &ScaleQuadrature,
) -> Result<EpsilonReport> {
    let density = ScaleDensity::new(n, profile, band)?;
    let beta = beta_table_with(Exec::default(), n, profile, band, quad)?;
    epsilon_report_from(&density, &beta, grid)
}

/// Largest ratio in `[1.001, max_ratio]` whose covering grid keeps
/// `ε̂ <= target`, by bisection on `ln X`.
pub fn find_ratio(
    density: &ScaleDensity,
    beta: &BetaTable,
    target: f64,
    max_ratio: f64,
    rule: WeightRule,
) -> Result<f64> {
    if !(target > 0.0) {
        return domain(format!("target deviation must be positive, got {target}"));
    }
    let band = beta.band_limit;
    let eps = |x: f64| -> Result<f64> {
        let grid = covering_grid(density, band, x, rule, DEFAULT_COVERAGE)?;
        Ok(epsilon_report_from(density, beta, &grid)?.epsilon_hat)
    };
    let (mut lo, mut hi) = (1.001f64.ln(), max_ratio.ln());
    if eps(lo.exp())? > target {
        return Err(Error::Convergence(format!(
            "even ratio {:.4} misses the target deviation {target}",
            lo.exp()
        )));
    }
    if eps(hi.exp())? <= target {
        return Ok(hi.exp());
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if eps(mid.exp())? <= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo.exp())
}
