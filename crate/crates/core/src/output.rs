//! CSV and JSON files. Floats in CSV are written with 17 significant digits,
//! and every file starts with the resolved configuration that produced it.

use serde::Serialize;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::Result;
use crate::frame_verify::FrameReport;
use crate::rotation_grid::RotationGrid;
use crate::scale_grid::{EpsilonReport, ScaleGrid};
use crate::transform::TransformTable;
use crate::wavelet_spectra::BetaTable;

/// Ordered `key = value` pairs of a resolved configuration.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Provenance {
    pub entries: Vec<(String, String)>,
}

impl Provenance {
    pub fn push(&mut self, key: impl Into<String>, value: impl ToString) {
        self.entries.push((key.into(), value.to_string()));
    }

    fn json(&self) -> serde_json::Value {
        serde_json::Value::Object(
            self.entries
                .iter()
                .map(|(k, v)| (k.clone(), serde_json::Value::String(v.clone())))
                .collect(),
        )
    }
}

pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// CSV text with the configuration as leading `#` comment lines.
pub fn csv_text(config: &Provenance, columns: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut out = String::new();
    for (k, v) in &config.entries {
        let _ = writeln!(out, "# {k} = {v}");
    }
    out.push_str(&columns.join(","));
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Pretty JSON `{"config": {...}, "<key>": payload}`.
pub fn json_text(config: &Provenance, key: &str, payload: &impl Serialize) -> Result<String> {
    let mut map = serde_json::Map::new();
    map.insert("config".into(), config.json());
    map.insert(key.into(), serde_json::to_value(payload)?);
    let mut s = serde_json::to_string_pretty(&serde_json::Value::Object(map))?;
    s.push('\n');
    Ok(s)
}

pub fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    fs::write(path, text)?;
    Ok(())
}

/// Columns `l, beta` and, when given, `beta_closed_form`.
pub fn beta_csv(config: &Provenance, table: &BetaTable, closed_form: Option<&[f64]>) -> String {
    let rows = table.values.iter().enumerate().map(|(l, b)| {
        let mut row = vec![l.to_string(), fmt_float(*b)];
        if let Some(c) = closed_form {
            row.push(fmt_float(c[l]));
        }
        row
    });
    let columns: &[&str] = if closed_form.is_some() {
        &["l", "beta", "beta_closed_form"]
    } else {
        &["l", "beta"]
    };
    csv_text(config, columns, rows)
}

pub fn scale_grid_csv(config: &Provenance, grid: &ScaleGrid) -> String {
    let rows = grid
        .scales
        .iter()
        .zip(&grid.weights)
        .enumerate()
        .map(|(j, (r, w))| vec![j.to_string(), fmt_float(*r), fmt_float(*w)]);
    csv_text(config, &["j", "rho", "weight"], rows)
}

pub fn epsilon_csv(config: &Provenance, report: &EpsilonReport) -> String {
    let rows = report.degrees.iter().map(|d| {
        vec![
            d.l.to_string(),
            fmt_float(d.beta_continuous),
            fmt_float(d.beta_discrete),
            fmt_float(d.rel_dev),
        ]
    });
    csv_text(config, &["l", "beta_continuous", "beta_discrete", "rel_dev"], rows)
}

/// One row per rotation: `g`, the multi-index, the Euler angles and the weight.
pub fn rotation_grid_csv(config: &Provenance, grid: &RotationGrid) -> String {
    let n = grid.n;
    let mut columns = vec!["g".to_string()];
    columns.extend((1..=n).rev().map(|j| format!("alpha_{j}")));
    columns.extend((0..n * (n + 1) / 2).map(|i| format!("angle_{i}")));
    columns.push("weight".into());
    let columns: Vec<&str> = columns.iter().map(String::as_str).collect();
    let rows = grid.iter().enumerate().map(|(g, r)| {
        let mut row = vec![g.to_string()];
        row.extend(r.indices.iter().map(|i| i.to_string()));
        row.extend(r.euler.angles.iter().map(|a| fmt_float(*a)));
        row.push(fmt_float(r.weight));
        row
    });
    csv_text(config, &columns, rows)
}

pub fn transform_csv(config: &Provenance, table: &TransformTable) -> String {
    let rows = (0..table.scales).flat_map(|j| {
        (0..table.rotations).map(move |g| {
            let v = table.get(j, g);
            vec![j.to_string(), g.to_string(), fmt_float(v.re), fmt_float(v.im)]
        })
    });
    csv_text(config, &["j", "g", "re", "im"], rows)
}

pub fn trials_csv(config: &Provenance, report: &FrameReport) -> String {
    let rows = report.trials.iter().enumerate().map(|(i, t)| {
        vec![
            i.to_string(),
            t.seed.to_string(),
            fmt_float(t.energy),
            fmt_float(t.refined_energy),
            fmt_float(t.oracle),
            fmt_float(t.ratio),
            fmt_float(t.discrepancy),
            t.in_bounds.to_string(),
        ]
    });
    csv_text(
        config,
        &["trial", "seed", "energy", "refined_energy", "oracle", "ratio", "discrepancy", "in_bounds"],
        rows,
    )
}
