//! Scenario files: TOML with dotted sections (`grid.*`, `params.*`, `ic.*`,
//! `bathymetry.*`, `numerics.*`, `compare.*`) and a `[[models]]` list.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use toml::{Table, Value};
use wavelab::diagnostics::GapNorm;
use wavelab::runner::{InitialCondition, ModelSpec, Scenario};
use wavelab::scalar::ScalarModelSpec;
use wavelab::system::{Numerics, SystemModelSpec};
use wavelab::{Bathymetry, Boundary, Grid1D, SimulationParams};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryName {
    Periodic,
    Wall,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n_cells: usize,
    pub length: f64,
    #[serde(default = "periodic")]
    pub boundary: BoundaryName,
}

fn periodic() -> BoundaryName {
    BoundaryName::Periodic
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BathymetryConfig {
    #[default]
    Flat,
    GaussianBump {
        height: f64,
        width: f64,
        #[serde(default)]
        center: Option<f64>,
    },
    /// CSV with a `b` column, one row per cell
    FromFile { path: PathBuf },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareConfig {
    /// pairs of model labels
    pub pairs: Vec<[String; 2]>,
    #[serde(default = "sup")]
    pub norm: GapNorm,
    /// mu values to sweep; the scenario's own mu when empty
    #[serde(default)]
    pub mu: Vec<f64>,
    /// set eps = mu at every sweep point
    #[serde(default)]
    pub epsilon_equals_mu: bool,
}

fn sup() -> GapNorm {
    GapNorm::SupAtFinal
}

fn ten() -> usize {
    10
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    name: Option<String>,
    grid: GridConfig,
    params: SimulationParams,
    #[serde(default)]
    numerics: Numerics,
    ic: Table,
    #[serde(default)]
    bathymetry: BathymetryConfig,
    #[serde(default)]
    phi0: f64,
    t_end: f64,
    #[serde(default = "ten")]
    n_outputs: usize,
    #[serde(default)]
    dt: Option<f64>,
    models: Vec<Table>,
    #[serde(default)]
    compare: Option<CompareConfig>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelEntry {
    pub label: String,
    pub spec: ModelSpec,
}

/// A resolved configuration: one scenario shared by every model entry.
#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub name: String,
    pub scenario: Scenario,
    pub models: Vec<ModelEntry>,
    pub compare: Option<CompareConfig>,
}

impl ScenarioConfig {
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("scenario").to_string();
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, overrides, base, &stem)
    }

    /// `base` resolves relative file paths; `default_name` names the output directory.
    pub fn parse(text: &str, overrides: &[String], base: &Path, default_name: &str) -> Result<Self> {
        let mut table: Table = text.parse().map_err(|e: toml::de::Error| CliError::Config(e.message().to_string()))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let raw: RawConfig = Value::Table(table).try_into().map_err(|e: toml::de::Error| CliError::Config(e.message().to_string()))?;

        let boundary = match raw.grid.boundary {
            BoundaryName::Periodic => Boundary::Periodic,
            BoundaryName::Wall => Boundary::Wall,
        };
        let grid = Grid1D::new(raw.grid.n_cells, raw.grid.length, boundary)?;
        let bathymetry = match &raw.bathymetry {
            BathymetryConfig::Flat => None,
            BathymetryConfig::GaussianBump { height, width, center } => {
                Some(Bathymetry::gaussian(&grid, *height, *width, center.unwrap_or(0.5 * grid.length))?)
            }
            BathymetryConfig::FromFile { path } => {
                let p = base.join(path);
                let cols = read_columns(&p, &["b"])?;
                Some(Bathymetry::new(cols.into_iter().next().unwrap_or_default())?)
            }
        };
        let initial = initial_condition(raw.ic, base)?;
        let scenario = Scenario {
            grid,
            bathymetry,
            params: raw.params,
            numerics: raw.numerics,
            initial,
            phi0: raw.phi0,
            t_end: raw.t_end,
            n_outputs: raw.n_outputs,
            dt: raw.dt,
        };
        if raw.models.is_empty() {
            return Err(CliError::Config("no [[models]] entries".into()));
        }
        let models = raw.models.into_iter().map(model_entry).collect::<Result<Vec<_>>>()?;
        let mut seen = BTreeSet::new();
        for m in &models {
            if !seen.insert(m.label.clone()) {
                return Err(CliError::Config(format!("duplicate model label '{}'", m.label)));
            }
        }
        Ok(ScenarioConfig { name: raw.name.unwrap_or_else(|| default_name.to_string()), scenario, models, compare: raw.compare })
    }
}

/// `a.b.c=value`; numeric path segments index arrays (`models.0.p=0.1`).
/// The value is read as TOML and falls back to a bare string.
pub fn apply_override(table: &mut Table, item: &str) -> Result<()> {
    let (key, raw) = item.split_once('=').ok_or_else(|| CliError::Config(format!("override '{item}' is not key=value")))?;
    let value = match format!("v = {}", raw.trim()).parse::<Table>() {
        Ok(mut t) => t.remove("v").unwrap_or(Value::String(raw.trim().into())),
        Err(_) => Value::String(raw.trim().into()),
    };
    let parts: Vec<&str> = key.trim().split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::Config(format!("bad override key '{key}'")));
    }
    let first = table.entry(parts[0].to_string()).or_insert_with(|| Value::Table(Table::new()));
    if parts.len() == 1 {
        *first = value;
        return Ok(());
    }
    set_path(first, &parts[1..], value, key)
}

fn set_path(cur: &mut Value, parts: &[&str], value: Value, key: &str) -> Result<()> {
    let part = parts[0];
    let slot = match cur {
        Value::Table(t) => t.entry(part.to_string()).or_insert_with(|| Value::Table(Table::new())),
        Value::Array(a) => {
            let idx: usize = part.parse().map_err(|_| CliError::Config(format!("'{part}' in '{key}' is not an index")))?;
            let len = a.len();
            a.get_mut(idx).ok_or_else(|| CliError::Config(format!("index {idx} out of range ({len}) in '{key}'")))?
        }
        _ => return Err(CliError::Config(format!("'{key}' descends into a non-table value"))),
    };
    if parts.len() == 1 {
        *slot = value;
        Ok(())
    } else {
        set_path(slot, &parts[1..], value, key)
    }
}

fn initial_condition(mut t: Table, base: &Path) -> Result<InitialCondition> {
    if t.get("kind").and_then(Value::as_str) == Some("from_file") {
        let path = match t.remove("path") {
            Some(Value::String(p)) => base.join(p),
            _ => return Err(CliError::Config("ic.path missing".into())),
        };
        let mut cols = read_columns(&path, &["zeta", "vbar"])?.into_iter();
        let zeta = cols.next().unwrap_or_default();
        let vbar = cols.next().unwrap_or_default();
        return Ok(InitialCondition::Arrays { zeta, vbar });
    }
    let keys: Vec<String> = t.keys().cloned().collect();
    let ic: InitialCondition = Value::Table(t).try_into().map_err(|e: toml::de::Error| CliError::Config(format!("ic: {}", e.message())))?;
    reject_unknown_keys(&keys, &ic, "ic")?;
    Ok(ic)
}

// Unit variants of internally tagged enums accept stray keys, so compare
// against what the parsed value serializes back to.
fn reject_unknown_keys(keys: &[String], parsed: &impl serde::Serialize, what: &str) -> Result<()> {
    let known = serde_json::to_value(parsed).map_err(|e| CliError::Config(e.to_string()))?;
    for k in keys {
        if known.get(k).is_none() {
            return Err(CliError::Config(format!("{what}: unknown field `{k}`")));
        }
    }
    Ok(())
}

fn model_entry(mut t: Table) -> Result<ModelEntry> {
    let label = match t.remove("label") {
        Some(Value::String(s)) => Some(s),
        Some(_) => return Err(CliError::Config("model label must be a string".into())),
        None => None,
    };
    let kind = t.get("model").and_then(Value::as_str).unwrap_or("").to_string();
    let t_keys: Vec<String> = t.keys().cloned().collect();
    let system: std::result::Result<SystemModelSpec, _> = Value::Table(t.clone()).try_into();
    let spec = match system {
        Ok(s) => ModelSpec::System(s),
        Err(se) => match Value::Table(t).try_into::<ScalarModelSpec>() {
            Ok(s) => ModelSpec::Scalar(s),
            Err(ce) => {
                let (sm, cm) = (se.message(), ce.message());
                let msg = match (sm.contains("unknown variant"), cm.contains("unknown variant")) {
                    (true, true) => {
                        let list = |m: &str| m.split_once("expected one of ").map(|(_, l)| l.to_string()).unwrap_or_default();
                        format!("unknown model, expected one of {}, {}", list(sm), list(cm))
                    }
                    (true, false) => cm.to_string(),
                    _ => sm.to_string(),
                };
                return Err(CliError::Config(format!("model '{kind}': {msg}")));
            }
        },
    };
    reject_unknown_keys(&t_keys, &spec, &format!("model '{kind}'"))?;
    spec.validate()?;
    let label = label.unwrap_or_else(|| sanitize(&spec.name()));
    if label.is_empty() || label.contains('/') || label.starts_with('.') {
        return Err(CliError::Config(format!("bad model label '{label}'")));
    }
    Ok(ModelEntry { label, spec })
}

/// Model name made safe for a directory name.
pub fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' || c == '_' { c } else { '_' })
        .collect::<String>()
        .trim_matches('_')
        .to_string()
}

/// Named numeric columns of a headed CSV file.
pub fn read_columns(path: &Path, names: &[&str]) -> Result<Vec<Vec<f64>>> {
    let mut rd = csv::Reader::from_path(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let header = rd.headers().map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?.clone();
    let idx: Vec<usize> = names
        .iter()
        .map(|n| {
            header
                .iter()
                .position(|h| h.trim() == *n)
                .ok_or_else(|| CliError::Config(format!("{}: no '{n}' column", path.display())))
        })
        .collect::<Result<_>>()?;
    let mut out = vec![Vec::new(); names.len()];
    for (row, rec) in rd.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        for (c, &i) in idx.iter().enumerate() {
            let s = rec.get(i).unwrap_or("").trim();
            let v: f64 = s.parse().map_err(|_| CliError::Config(format!("{}: row {}: '{s}' is not a number", path.display(), row + 1)))?;
            out[c].push(v);
        }
    }
    Ok(out)
}
