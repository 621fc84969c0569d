//! On-disk layout of a run directory:
//!
//! ```text
//! <label>/manifest.json      scenario, model and snapshot index
//! <label>/summary.json       energy drift, invariant residuals, gaps
//! <label>/series.csv         time, energy totals, residual series
//! <label>/snapshots/NNNN.csv x plus one column per field
//! ```
//!
//! Directories are assembled under a temporary name next to the target and
//! renamed into place; single files go through a temporary file and rename.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use wavelab::runner::{ModelSpec, RunRecord, Scenario};

use crate::error::{CliError, Result};

pub const RUN_SCHEMA: &str = "wavelab.run/1";
pub const SUMMARY_SCHEMA: &str = "wavelab.summary/1";
pub const COMPARE_SCHEMA: &str = "wavelab.compare/1";
pub const PROFILE_SCHEMA: &str = "wavelab.profile/1";
pub const ERROR_SCHEMA: &str = "wavelab.error/1";

/// Environment variable naming the output root.
pub const OUT_ENV: &str = "WAVELAB_OUT";

pub fn output_root() -> PathBuf {
    std::env::var_os(OUT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("wavelab-out"))
}

/// One gap entry as it appears in summaries and compare reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapEntry {
    pub a: String,
    pub b: String,
    pub mu: f64,
    pub epsilon: f64,
    pub gap: f64,
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

pub fn json_bytes(v: &impl Serialize) -> Result<Vec<u8>> {
    let mut b = serde_json::to_vec_pretty(v).map_err(|e| CliError::Config(e.to_string()))?;
    b.push(b'\n');
    Ok(b)
}

fn csv_bytes(header: &[String], rows: impl Iterator<Item = Vec<f64>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| CliError::Config(e.to_string());
    w.write_record(header).map_err(err)?;
    for r in rows {
        w.write_record(r.iter().map(|v| format!("{v:?}"))).map_err(err)?;
    }
    w.into_inner().map_err(|e| CliError::Config(e.to_string()))
}

fn energy_name(kind: &impl std::fmt::Debug) -> String {
    format!("{kind:?}").to_lowercase()
}

fn field_names(rec: &RunRecord) -> Vec<String> {
    rec.snapshots.first().map(|s| s.fields.keys().cloned().collect()).unwrap_or_default()
}

pub fn snapshot_file(k: usize) -> String {
    format!("snapshots/{k:04}.csv")
}

pub fn manifest(label: &str, spec: &ModelSpec, sc: &Scenario, rec: &RunRecord) -> Value {
    let snaps: Vec<Value> = rec.times.iter().enumerate().map(|(k, t)| json!({"index": k, "time": t, "file": snapshot_file(k)})).collect();
    json!({
        "schema": RUN_SCHEMA,
        "label": label,
        "model": rec.model,
        "model_spec": spec,
        "scenario": sc,
        "scenario_hash": rec.scenario_hash,
        "primary_field": rec.primary_field,
        "fields": field_names(rec),
        "snapshots": snaps,
    })
}

pub fn summary(label: &str, sc: &Scenario, rec: &RunRecord, gaps: &[GapEntry]) -> Value {
    let mut energy = Vec::new();
    if let (Some(first), Some(last)) = (rec.energies.first(), rec.energies.last()) {
        for (j, e) in last.iter().enumerate() {
            let max_drift = rec.energies.iter().filter_map(|s| s.get(j)).fold(0.0f64, |m, b| m.max(b.drift.abs()));
            energy.push(json!({
                "kind": energy_name(&e.kind),
                "initial": first.get(j).map(|b| b.total),
                "final": e.total,
                "drift": e.drift,
                "max_abs_drift": max_drift,
            }));
        }
    }
    let mut residuals = serde_json::Map::new();
    for (k, series) in &rec.residuals {
        let first = series.first().copied().unwrap_or(0.0);
        let last = series.last().copied().unwrap_or(0.0);
        let entry = if k == "mass" {
            let change = series.iter().fold(0.0f64, |m, v| m.max((v - first).abs()));
            json!({"initial": first, "final": last, "max_abs_change": change})
        } else {
            let max = series.iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v));
            json!({"final": last, "max": max})
        };
        residuals.insert(k.clone(), entry);
    }
    json!({
        "schema": SUMMARY_SCHEMA,
        "label": label,
        "model": rec.model,
        "scenario_hash": rec.scenario_hash,
        "params": sc.params,
        "final_time": rec.times.last(),
        "energy": energy,
        "residuals": residuals,
        "gaps": gaps,
    })
}

fn series_csv(rec: &RunRecord) -> Result<Vec<u8>> {
    let mut header = vec!["time".to_string()];
    if let Some(e) = rec.energies.first() {
        header.extend(e.iter().map(|b| format!("energy_{}", energy_name(&b.kind))));
    }
    header.extend(rec.residuals.keys().cloned());
    let rows = (0..rec.times.len()).map(|k| {
        let mut r = vec![rec.times[k]];
        r.extend(rec.energies[k].iter().map(|b| b.total));
        r.extend(rec.residuals.values().map(|s| s.get(k).copied().unwrap_or(f64::NAN)));
        r
    });
    csv_bytes(&header, rows)
}

fn snapshot_csv(rec: &RunRecord, k: usize) -> Result<Vec<u8>> {
    let names = field_names(rec);
    let mut header = vec!["x".to_string()];
    header.extend(names.iter().cloned());
    let snap = &rec.snapshots[k];
    let rows = (0..rec.x.len()).map(|i| {
        let mut r = vec![rec.x[i]];
        r.extend(names.iter().map(|n| snap.fields[n][i]));
        r
    });
    csv_bytes(&header, rows)
}

/// Writes a complete run directory at `dir`, replacing any previous one.
pub fn write_run_dir(dir: &Path, label: &str, spec: &ModelSpec, sc: &Scenario, rec: &RunRecord, gaps: &[GapEntry]) -> Result<()> {
    let parent = dir.parent().unwrap_or(Path::new("."));
    std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    let tmp = tempfile::Builder::new().prefix(".partial-").tempdir_in(parent).map_err(|e| CliError::io(parent, e))?;
    let root = tmp.path();
    let put = |rel: &str, bytes: Vec<u8>| -> Result<()> {
        let p = root.join(rel);
        if let Some(d) = p.parent() {
            std::fs::create_dir_all(d).map_err(|e| CliError::io(d, e))?;
        }
        std::fs::write(&p, bytes).map_err(|e| CliError::io(&p, e))
    };
    put("manifest.json", json_bytes(&manifest(label, spec, sc, rec))?)?;
    put("summary.json", json_bytes(&summary(label, sc, rec, gaps))?)?;
    put("series.csv", series_csv(rec)?)?;
    for k in 0..rec.times.len() {
        put(&snapshot_file(k), snapshot_csv(rec, k)?)?;
    }
    if dir.exists() {
        std::fs::remove_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let kept = tmp.keep();
    std::fs::rename(&kept, dir).map_err(|e| CliError::io(dir, e))?;
    Ok(())
}

/// CSV of the gap table: a, b, mu, epsilon, gap.
pub fn gaps_csv(gaps: &[GapEntry]) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    let err = |e: csv::Error| CliError::Config(e.to_string());
    w.write_record(["a", "b", "mu", "epsilon", "gap"]).map_err(err)?;
    for g in gaps {
        w.write_record([g.a.clone(), g.b.clone(), format!("{:?}", g.mu), format!("{:?}", g.epsilon), format!("{:?}", g.gap)]).map_err(err)?;
    }
    w.into_inner().map_err(|e| CliError::Config(e.to_string()))
}
