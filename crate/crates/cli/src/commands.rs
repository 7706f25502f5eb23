use anyhow::Result;
use serde_json::json;
use std::path::Path;

use sphereframes::frame_verify::{certify_frame, error_budget, Verdict};
use sphereframes::harmonics::build_sphere_grid;
use sphereframes::output::{
    beta_csv, epsilon_csv, json_text, rotation_grid_csv, scale_grid_csv, transform_csv, trials_csv, write_file,
};
use sphereframes::rotation_grid::{build_rotation_grid_capped, RotationGrid};
use sphereframes::scale_grid::{build_scale_grid_with_rule, covering_grid, epsilon_report_from, ScaleGrid, DEFAULT_COVERAGE};
use sphereframes::transform::{
    energy_identity_oracle, frame_energy, random_bandlimited, wavelet_analysis_with, TransformMethod,
};
use sphereframes::wavelet_spectra::{
    beta_closed_form, beta_table, extract_p2d, wavelet_bounds, BetaTable, ScaleDensity, ScaleQuadrature,
    SpectralProfile,
};
use sphereframes::Exec;

use crate::config::RunConfig;

fn write(dir: &Path, name: &str, text: &str) -> Result<()> {
    let path = dir.join(name);
    write_file(&path, text)?;
    log::info!("wrote {}", path.display());
    Ok(())
}

fn betas(cfg: &RunConfig, profile: &SpectralProfile) -> Result<BetaTable> {
    Ok(beta_table(cfg.n, profile, cfg.band_limit, &ScaleQuadrature::default())?)
}

fn scales(cfg: &RunConfig, profile: &SpectralProfile) -> Result<ScaleGrid> {
    let density = ScaleDensity::new(cfg.n, profile, cfg.band_limit)?;
    Ok(match cfg.explicit_scales(&density)? {
        Some(s) => build_scale_grid_with_rule(s.rho_max, cfg.ratio, s.count, cfg.rule)?,
        None => covering_grid(&density, cfg.band_limit, cfg.ratio, cfg.rule, DEFAULT_COVERAGE)?,
    })
}

fn rotations(cfg: &RunConfig) -> Result<RotationGrid> {
    Ok(build_rotation_grid_capped(cfg.n, &cfg.resolved_deltas(), cfg.grid_cap)?)
}

/// Closed form with the fitted `P_{2d}` on the active degrees, zero elsewhere.
fn closed_form_column(cfg: &RunConfig, profile: &SpectralProfile, table: &BetaTable) -> Option<Vec<f64>> {
    match extract_p2d(cfg.n, profile, cfg.band_limit, &ScaleQuadrature::default()) {
        Ok(fit) => {
            let active = table.active_degrees();
            Some(
                (0..=cfg.band_limit)
                    .map(|l| {
                        if active.contains(&l) {
                            beta_closed_form(cfg.n, profile, l, fit.eval(l as f64))
                        } else {
                            0.0
                        }
                    })
                    .collect(),
            )
        }
        Err(e) => {
            log::warn!("no closed-form column: {e}");
            None
        }
    }
}

pub fn spectrum(cfg: &RunConfig) -> Result<()> {
    let profile = cfg.profile();
    let table = betas(cfg, &profile)?;
    let bounds = wavelet_bounds(&table)?;
    let closed = closed_form_column(cfg, &profile, &table);
    let prov = cfg.provenance("spectrum");
    write(&cfg.out, "beta.csv", &beta_csv(&prov, &table, closed.as_deref()))?;
    let payload = json!({ "table": table, "bounds": bounds, "closed_form": closed });
    write(&cfg.out, "beta.json", &json_text(&prov, "spectrum", &payload)?)?;
    println!("A = {:.6e}  B = {:.6e}  B/A = {:.6}", bounds.a, bounds.b, bounds.ratio());
    Ok(())
}

pub fn scale_grid(cfg: &RunConfig) -> Result<()> {
    let profile = cfg.profile();
    let density = ScaleDensity::new(cfg.n, &profile, cfg.band_limit)?;
    let table = betas(cfg, &profile)?;
    let grid = scales(cfg, &profile)?;
    let eps = epsilon_report_from(&density, &table, &grid)?;
    let prov = cfg.provenance("scale-grid");
    write(&cfg.out, "scales.csv", &scale_grid_csv(&prov, &grid))?;
    write(&cfg.out, "epsilon.csv", &epsilon_csv(&prov, &eps))?;
    let payload = json!({
        "epsilon_hat": eps.epsilon_hat,
        "ratio": eps.ratio,
        "count": eps.count,
        "rho_max": eps.rho_max,
        "rho_min": eps.rho_min,
        "rule": eps.rule,
    });
    write(&cfg.out, "scale_grid.json", &json_text(&prov, "scale_grid", &payload)?)?;
    println!(
        "{} scales in [{:.6e}, {:.6e}], ratio {}, epsilon_hat = {:.6e}",
        grid.len(),
        eps.rho_min,
        eps.rho_max,
        eps.ratio,
        eps.epsilon_hat
    );
    Ok(())
}

pub fn rot_grid(cfg: &RunConfig) -> Result<()> {
    let grid = rotations(cfg)?;
    let prov = cfg.provenance("rot-grid");
    write(&cfg.out, "rotations.csv", &rotation_grid_csv(&prov, &grid))?;
    let levels: Vec<_> = grid
        .partitions
        .iter()
        .zip(&grid.deltas)
        .map(|(p, d)| {
            json!({
                "dim": p.dim,
                "delta": d,
                "cells": p.len(),
                "max_diameter": p.max_diameter(),
                "total_measure": p.total_measure(),
            })
        })
        .collect();
    let payload = json!({
        "n": grid.n,
        "deltas": grid.deltas,
        "count": grid.len(),
        "total_weight": grid.total_weight(),
        "total_measure": grid.total_measure(),
        "levels": levels,
    });
    write(&cfg.out, "rot_grid.json", &json_text(&prov, "rot_grid", &payload)?)?;
    println!("{} rotations, cells per level {:?}", grid.len(), grid.sizes());
    Ok(())
}

pub fn transform(cfg: &RunConfig, naive: bool) -> Result<()> {
    let (n, band) = (cfg.n, cfg.band_limit);
    let profile = cfg.profile();
    let table = betas(cfg, &profile)?;
    let field = random_bandlimited(n, band, table.order, cfg.seed)?;
    let scales = scales(cfg, &profile)?;
    let rotations = rotations(cfg)?;
    let sphere = build_sphere_grid(n, band)?;
    let method = if naive { TransformMethod::Naive } else { TransformMethod::Fast };
    let w = wavelet_analysis_with(Exec::default(), method, n, &profile, &field, &scales, &rotations, &sphere)?;
    let energy = frame_energy(&w, &scales, &rotations)?;
    let oracle = energy_identity_oracle(n, &profile, &field, &table)?;
    let mut prov = cfg.provenance("transform");
    prov.push("transform.method", if naive { "naive" } else { "fast" });
    write(&cfg.out, "transform.csv", &transform_csv(&prov, &w))?;
    let payload = json!({
        "scale_count": scales.len(),
        "rotation_count": rotations.len(),
        "norm_sqr": field.norm_sqr(),
        "energy": energy,
        "oracle": oracle,
        "rel_dev": (energy - oracle).abs() / oracle,
    });
    write(&cfg.out, "transform.json", &json_text(&prov, "transform", &payload)?)?;
    println!(
        "{} x {} coefficients, energy {:.6e}, oracle {:.6e}",
        scales.len(),
        rotations.len(),
        energy,
        oracle
    );
    Ok(())
}

/// Returns whether the verdict is pass.
pub fn certify(cfg: &RunConfig) -> Result<bool> {
    let config = cfg.certify_config()?;
    let report = certify_frame(&config)?;
    let grid = scales(cfg, &config.profile)?;
    let budget = error_budget(cfg.n, &config.profile, &grid, &report.deltas, Some(cfg.band_limit))?;
    let prov = cfg.provenance("certify");
    write(&cfg.out, "trials.csv", &trials_csv(&prov, &report))?;
    let payload = json!({ "report": report, "error_budget": budget });
    write(&cfg.out, "report.json", &json_text(&prov, "certify", &payload)?)?;
    let pass = report.verdict == Verdict::Pass;
    println!(
        "verdict: {}  A = {:.4e}  B = {:.4e}  ratios in [{:.4e}, {:.4e}]  epsilon_hat = {:.3e}  delta_hat = {:.3e}  \
         deltas = {:?}  rotations = {}  scales = {}",
        if pass { "pass" } else { "fail" },
        report.a,
        report.b,
        report.trials.iter().map(|t| t.ratio).fold(f64::INFINITY, f64::min),
        report.trials.iter().map(|t| t.ratio).fold(0.0, f64::max),
        report.epsilon_hat,
        report.delta_hat,
        report.deltas,
        report.rotation_count,
        report.scale_count
    );
    Ok(pass)
}
