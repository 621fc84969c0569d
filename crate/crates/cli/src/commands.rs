use std::path::Path;

use serde_json::{json, Value};
use wavelab::diagnostics::{convergence_rate, model_gap};
use wavelab::dispersion::{dispersion_table, DispersionSpec};
use wavelab::reconstruction::{linear_shear_star, pressure_nh_profile, velocity_profile, velocity_profile_rotational};
use wavelab::runner::{run as run_model, validate_run, ModelSpec, RunRecord, Scenario};
use wavelab::system::sgn::vbar_tendency;
use wavelab::system::{SystemContext, SystemModelSpec};

use crate::config::{read_columns, ModelEntry, ScenarioConfig};
use crate::error::{CliError, Result};
use crate::output::{self, GapEntry};

/// Runs every entry on its own thread; results keep the entry order.
fn run_entries(models: &[ModelEntry], sc: &Scenario) -> Vec<wavelab::Result<RunRecord>> {
    std::thread::scope(|s| {
        let handles: Vec<_> = models.iter().map(|m| s.spawn(move || run_model(&m.spec, sc))).collect();
        handles.into_iter().map(|h| h.join().expect("model thread panicked")).collect()
    })
}

fn collect(results: Vec<wavelab::Result<RunRecord>>) -> Result<Vec<RunRecord>> {
    results.into_iter().map(|r| r.map_err(CliError::from)).collect()
}

pub fn run(cfg: &ScenarioConfig, out_root: &Path) -> Result<Value> {
    for m in &cfg.models {
        validate_run(&m.spec, &cfg.scenario)?;
    }
    let records = collect(run_entries(&cfg.models, &cfg.scenario))?;
    let base = out_root.join(&cfg.name);
    let mut runs = Vec::new();
    for (m, rec) in cfg.models.iter().zip(&records) {
        let dir = base.join(&m.label);
        output::write_run_dir(&dir, &m.label, &m.spec, &cfg.scenario, rec, &[])?;
        runs.push(json!({"label": m.label, "model": rec.model, "dir": dir, "scenario_hash": rec.scenario_hash}));
    }
    Ok(json!({"schema": output::RUN_SCHEMA, "name": cfg.name, "runs": runs}))
}

struct Point {
    tag: Option<String>,
    scenario: Scenario,
}

fn sweep_points(cfg: &ScenarioConfig, mus: &[f64], eps_follows: bool) -> Result<Vec<Point>> {
    if mus.is_empty() {
        return Ok(vec![Point { tag: None, scenario: cfg.scenario.clone() }]);
    }
    mus.iter()
        .map(|&mu| {
            let mut sc = cfg.scenario.clone();
            sc.params.mu = mu;
            if eps_follows {
                sc.params.epsilon = mu;
            }
            sc.params.validate()?;
            Ok(Point { tag: Some(format!("mu_{mu}")), scenario: sc })
        })
        .collect()
}

pub fn compare(cfg: &ScenarioConfig, out_root: &Path) -> Result<Value> {
    let cmp = cfg.compare.as_ref().ok_or_else(|| CliError::Config("compare needs a [compare] section".into()))?;
    if cmp.pairs.is_empty() {
        return Err(CliError::Config("compare.pairs is empty".into()));
    }
    let index = |label: &str| cfg.models.iter().position(|m| m.label == label);
    let mut pairs = Vec::new();
    for [a, b] in &cmp.pairs {
        match (index(a), index(b)) {
            (Some(i), Some(j)) => pairs.push((i, j)),
            _ => {
                let missing = if index(a).is_none() { a } else { b };
                return Err(wavelab::Error::MismatchedRuns(format!("pair ({a}, {b}): no model labelled '{missing}'")).into());
            }
        }
    }
    let points = sweep_points(cfg, &cmp.mu, cmp.epsilon_equals_mu)?;
    for p in &points {
        for m in &cfg.models {
            validate_run(&m.spec, &p.scenario)?;
        }
    }

    let mut all = Vec::new();
    for p in &points {
        all.push(collect(run_entries(&cfg.models, &p.scenario))?);
    }

    let mut table: Vec<Vec<GapEntry>> = vec![Vec::new(); pairs.len()];
    for (p, recs) in points.iter().zip(&all) {
        for (q, &(i, j)) in pairs.iter().enumerate() {
            let gap = model_gap(&recs[i], &recs[j], cmp.norm)?;
            table[q].push(GapEntry {
                a: cfg.models[i].label.clone(),
                b: cfg.models[j].label.clone(),
                mu: p.scenario.params.mu,
                epsilon: p.scenario.params.epsilon,
                gap,
            });
        }
    }

    let base = out_root.join(&cfg.name);
    let mut runs = Vec::new();
    for (p, recs) in points.iter().zip(&all) {
        let parent = match &p.tag {
            Some(t) => base.join(t),
            None => base.clone(),
        };
        for (m, rec) in cfg.models.iter().zip(recs) {
            let mine: Vec<GapEntry> = table
                .iter()
                .flatten()
                .filter(|g| (g.a == m.label || g.b == m.label) && g.mu == p.scenario.params.mu)
                .cloned()
                .collect();
            let dir = parent.join(&m.label);
            output::write_run_dir(&dir, &m.label, &m.spec, &p.scenario, rec, &mine)?;
            runs.push(json!({"label": m.label, "mu": p.scenario.params.mu, "dir": dir}));
        }
    }

    let report: Vec<Value> = table
        .iter()
        .map(|rows| {
            let (slope, why) = if points.len() > 1 {
                let gaps: Vec<f64> = rows.iter().map(|g| g.gap).collect();
                let mus: Vec<f64> = rows.iter().map(|g| g.mu).collect();
                match convergence_rate(&gaps, &mus) {
                    Ok(s) => (Some(s), None),
                    Err(e) => (None, Some(e.to_string())),
                }
            } else {
                (None, None)
            };
            json!({
                "a": rows[0].a,
                "b": rows[0].b,
                "gaps": rows.iter().map(|g| json!({"mu": g.mu, "epsilon": g.epsilon, "gap": g.gap})).collect::<Vec<_>>(),
                "slope": slope,
                "slope_error": why,
            })
        })
        .collect();
    let flat: Vec<GapEntry> = table.into_iter().flatten().collect();
    let doc = json!({
        "schema": output::COMPARE_SCHEMA,
        "name": cfg.name,
        "norm": cmp.norm,
        "pairs": report,
        "runs": runs,
    });
    output::write_atomic(&base.join("compare.json"), &output::json_bytes(&doc)?)?;
    output::write_atomic(&base.join("gaps.csv"), &output::gaps_csv(&flat)?)?;
    Ok(doc)
}

/// Options of the `dispersion` verb beyond mu and kmax.
#[derive(Debug, Clone, Default)]
pub struct DispersionArgs {
    pub p: Option<f64>,
    pub abcd: Option<Vec<f64>>,
    pub layers: Option<Vec<f64>>,
}

pub fn dispersion_spec(model: &str, args: &DispersionArgs) -> Result<DispersionSpec> {
    let need = |what: &str| CliError::Config(format!("model '{model}' needs --{what}"));
    Ok(match model {
        "water_waves" | "ww" => DispersionSpec::WaterWaves,
        "nsw" => DispersionSpec::Nsw,
        "sgn" => DispersionSpec::Sgn,
        "ik" | "isobe_kakinuma1" => DispersionSpec::IsobeKakinuma1,
        "kdv" => DispersionSpec::KdV,
        "bbm" => DispersionSpec::Bbm,
        "whitham" => DispersionSpec::Whitham,
        "kdv_bbm" => DispersionSpec::KdVBbmFamily { p: args.p.ok_or_else(|| need("p"))? },
        "abcd" => match args.abcd.as_deref() {
            Some([a, b, c, d]) => DispersionSpec::AbcdBoussinesq { a: *a, b: *b, c: *c, d: *d },
            Some(_) => return Err(CliError::Config("--abcd takes four values a,b,c,d".into())),
            None => return Err(need("abcd")),
        },
        "multilayer" => DispersionSpec::MultiLayerBoussinesq { l: args.layers.clone().ok_or_else(|| need("layers"))? },
        other => return Err(CliError::Config(format!("unknown dispersion model '{other}'"))),
    })
}

/// CSV table with columns model, mu, k, c2_model, c2_ww, abs_error.
pub fn dispersion(model: &str, mu: f64, kmax: f64, samples: usize, args: &DispersionArgs) -> Result<String> {
    let spec = dispersion_spec(model, args)?;
    if !(mu > 0.0 && mu <= 1.0) {
        return Err(wavelab::Error::InvalidParams(format!("mu = {mu} outside (0, 1]")).into());
    }
    let rows = dispersion_table(&spec, mu, kmax, samples)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &rows {
        w.serialize(r).map_err(|e| CliError::Config(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Config(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn read_json(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::io(path, e))
}

/// Vertical profiles of one column of a stored run.
pub fn reconstruct(run_dir: &Path, x: f64, time: f64, nz: usize, omega0: Option<f64>) -> Result<Value> {
    let man = read_json(&run_dir.join("manifest.json"))?;
    if man["schema"] != output::RUN_SCHEMA {
        return Err(CliError::Config(format!("{}: not a {} manifest", run_dir.display(), output::RUN_SCHEMA)));
    }
    let bad = |what: &str, e: serde_json::Error| CliError::Config(format!("manifest {what}: {e}"));
    let spec: ModelSpec = serde_json::from_value(man["model_spec"].clone()).map_err(|e| bad("model_spec", e))?;
    let sc: Scenario = serde_json::from_value(man["scenario"].clone()).map_err(|e| bad("scenario", e))?;
    if nz < 2 {
        return Err(wavelab::Error::InvalidParams("nz must be >= 2".into()).into());
    }
    let grid = sc.grid;
    if !(x >= 0.0 && x <= grid.length) {
        return Err(wavelab::Error::InvalidGrid(format!("x = {x} outside [0, {}]", grid.length)).into());
    }
    let snaps = man["snapshots"].as_array().cloned().unwrap_or_default();
    let (file, t_snap) = snaps
        .iter()
        .filter_map(|s| Some((s["file"].as_str()?.to_string(), s["time"].as_f64()?)))
        .min_by(|a, b| (a.1 - time).abs().total_cmp(&(b.1 - time).abs()))
        .ok_or_else(|| CliError::Config("manifest lists no snapshots".into()))?;

    let has_phi = man["fields"].as_array().map(|f| f.iter().any(|v| v == "phi")).unwrap_or(false);
    let names: Vec<&str> = if has_phi { vec!["zeta", "vbar", "phi"] } else { vec!["zeta", "vbar"] };
    let cols = read_columns(&run_dir.join(&file), &names)?;
    let (zeta, vbar) = (&cols[0], &cols[1]);
    let phi = cols.get(2);

    let i = ((x / grid.dx).floor() as usize).min(grid.n_cells - 1);
    let bathy = sc.bathy();
    let p = &sc.params;
    let bottom = -1.0 + p.beta * bathy.b[i];
    let surface = p.epsilon * zeta[i];
    let z: Vec<f64> = (0..nz).map(|j| if j + 1 == nz { surface } else { bottom + (surface - bottom) * j as f64 / (nz - 1) as f64 }).collect();

    let (v, w) = match omega0 {
        Some(om) => velocity_profile_rotational(zeta, vbar, linear_shear_star(om, bottom, surface), &bathy, p, &grid, i, &z)?,
        None => velocity_profile(zeta, vbar, &bathy, p, &grid, i, &z)?,
    };
    // the pressure needs the model's own d_t vbar
    let dispersive = match &spec {
        ModelSpec::System(SystemModelSpec::Nsw) => Some(false),
        ModelSpec::System(SystemModelSpec::Sgn | SystemModelSpec::SgnVorticity) => Some(true),
        _ => None,
    };
    let pressure = match dispersive {
        Some(d) => {
            let ctx = SystemContext::new(&grid, bathy.clone(), *p, sc.numerics.clone())?;
            let dt_vbar = vbar_tendency(&ctx, zeta, vbar, phi.map(|v| v.as_slice()), d)?;
            Some(pressure_nh_profile(zeta, vbar, &dt_vbar, &bathy, p, &grid, i, &z)?.values)
        }
        None => None,
    };
    Ok(json!({
        "schema": output::PROFILE_SCHEMA,
        "model": man["model"],
        "time": t_snap,
        "x": grid.x(i),
        "x_index": i,
        "z": z,
        "velocity": v.values,
        "vertical_velocity": w.values,
        "pressure_nh": pressure,
    }))
}
