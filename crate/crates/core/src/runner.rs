//! Scenario set-up, time loop and run records shared by the CLI and tests.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{energy_nsw, energy_rotational, energy_sgn, energy_total, EnergyBudget};
use crate::dispersion::{build_t_matrix, cww2, phase_speed_abcd};
use crate::error::{Error, Result};
use crate::grid::{Bathymetry, Boundary, Grid1D};
use crate::params::SimulationParams;
use crate::scalar::{companion_field, scalar_max_dt, scalar_step, ScalarModelSpec};
use crate::spectral::SpectralOps;
use crate::state::{EnstrophyState, FieldKind, HydroState, IkState, MultiLayerState, ScalarState};
use crate::system::boussinesq::{abcd_max_dt, boussinesq_e_max_dt, multilayer_boussinesq_max_dt, peregrine_max_dt};
use crate::system::fv::fv_max_dt;
use crate::system::ik::{ik_max_dt, ik_mean_velocity, ik_single_mode};
use crate::system::linear::{linear_reference_with, right_going_mode};
use crate::system::sgn::sgn_max_dt;
use crate::system::{
    abcd_step, boussinesq_e_step, ik_constraint_residual, ik_initial_state, ik_step, multilayer_boussinesq_step, multilayer_nsw_step,
    nsw_spectral_step, nsw_step_with_residual, nsw_turbulent_step, peregrine_step, sgn_step, sgn_vorticity_step,
    wave_breaking_step_with_dissipation, BoundaryCondition, Numerics, SystemContext, SystemModelSpec,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelSpec {
    System(SystemModelSpec),
    Scalar(ScalarModelSpec),
}

impl ModelSpec {
    pub fn name(&self) -> String {
        match self {
            ModelSpec::System(s) => s.name(),
            ModelSpec::Scalar(s) => s.name(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ModelSpec::System(s) => s.validate(),
            ModelSpec::Scalar(ScalarModelSpec::CamassaHolmZeta { p, .. } | ScalarModelSpec::CamassaHolmZetaExpanded { p, .. })
            | ModelSpec::Scalar(ScalarModelSpec::CamassaHolmV { p, .. } | ScalarModelSpec::KdVBbm { p }) => {
                if p.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidParams(format!("p = {p}")))
                }
            }
            ModelSpec::Scalar(_) => Ok(()),
        }
    }
}

/// Initial surface and velocity. Lengths are in units of the grid;
/// `center` defaults to the middle of the domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialCondition {
    /// zeta = A exp(-((x - c)/w)^2), vbar = 0
    GaussianHump {
        amplitude: f64,
        width: f64,
        #[serde(default)]
        center: Option<f64>,
    },
    /// zeta = left for x < interface, right beyond; vbar = 0
    DamBreak {
        left: f64,
        right: f64,
        #[serde(default)]
        interface: Option<f64>,
    },
    /// Gaussian elevation with R- = 0, a right-going simple wave of NSW
    SimpleWaveRight {
        amplitude: f64,
        width: f64,
        #[serde(default)]
        center: Option<f64>,
    },
    /// zeta = A cos(k x), k = 2 pi mode / L, with the model's right-going velocity
    SingleMode { amplitude: f64, mode: usize },
    RestState,
    Arrays { zeta: Vec<f64>, vbar: Vec<f64> },
}

fn ten() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub grid: Grid1D,
    /// flat when absent
    #[serde(default)]
    pub bathymetry: Option<Bathymetry>,
    pub params: SimulationParams,
    #[serde(default)]
    pub numerics: Numerics,
    pub initial: InitialCondition,
    /// initial enstrophy for models that carry one
    #[serde(default)]
    pub phi0: f64,
    pub t_end: f64,
    #[serde(default = "ten")]
    pub n_outputs: usize,
    /// fixed step; the model's stability bound when absent
    #[serde(default)]
    pub dt: Option<f64>,
}

impl Scenario {
    pub fn new(grid: Grid1D, params: SimulationParams, initial: InitialCondition, t_end: f64) -> Self {
        Scenario { grid, bathymetry: None, params, numerics: Numerics::default(), initial, phi0: 0.0, t_end, n_outputs: 10, dt: None }
    }

    pub fn bathy(&self) -> Bathymetry {
        self.bathymetry.clone().unwrap_or_else(|| Bathymetry::flat(self.grid.n_cells))
    }

    pub fn output_times(&self) -> Vec<f64> {
        let n = self.n_outputs.max(1);
        (0..=n).map(|k| self.t_end * k as f64 / n as f64).collect()
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.numerics.validate()?;
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidParams(format!("t_end = {}", self.t_end)));
        }
        if self.n_outputs == 0 {
            return Err(Error::InvalidParams("n_outputs must be >= 1".into()));
        }
        if !(self.phi0 >= 0.0 && self.phi0.is_finite()) {
            return Err(Error::InvalidParams(format!("phi0 = {} must be >= 0", self.phi0)));
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::InvalidParams(format!("dt = {dt}")));
            }
        }
        if let Some(b) = &self.bathymetry {
            self.grid.check_len(&b.b)?;
            Bathymetry::new(b.b.clone())?;
        }
        Ok(())
    }

    /// FNV-1a of the model and scenario description.
    pub fn hash(&self, model: &ModelSpec) -> String {
        let text = format!("{model:?}|{self:?}");
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in text.bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        format!("{h:016x}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ModelState {
    Hydro(HydroState),
    Enstrophy(EnstrophyState),
    MultiLayer(MultiLayerState),
    Ik(IkState),
    Scalar(ScalarState),
    Linear { zeta: Vec<f64>, psi: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub fields: BTreeMap<String, Vec<f64>>,
}

/// Stored output of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub model: String,
    pub scenario_hash: String,
    /// field compared by model_gap: "zeta", or "vbar" for scalar velocity models
    pub primary_field: String,
    pub x: Vec<f64>,
    pub dx: f64,
    pub times: Vec<f64>,
    pub snapshots: Vec<Snapshot>,
    pub energies: Vec<Vec<EnergyBudget>>,
    /// per-output series: "mass", "entropy_residual_max", "constraint", "dissipated", "steps"
    pub residuals: BTreeMap<String, Vec<f64>>,
}

impl RunRecord {
    pub fn primary(&self, k: usize) -> &[f64] {
        &self.snapshots[k].fields[&self.primary_field]
    }

    pub fn field(&self, k: usize, name: &str) -> Option<&[f64]> {
        self.snapshots.get(k)?.fields.get(name).map(|v| v.as_slice())
    }
}

fn center_or_mid(c: Option<f64>, grid: &Grid1D) -> f64 {
    c.unwrap_or(0.5 * grid.length)
}

/// Base (zeta, vbar) of an initial condition before model-specific lifting.
pub fn base_fields(ic: &InitialCondition, grid: &Grid1D, params: &SimulationParams) -> Result<(Vec<f64>, Vec<f64>)> {
    let x = grid.centers();
    let n = x.len();
    let gauss = |a: f64, w: f64, c: f64| -> Result<Vec<f64>> {
        if !(w > 0.0) {
            return Err(Error::InvalidParams(format!("width = {w} must be > 0")));
        }
        Ok(x.iter().map(|x| a * (-((x - c) / w).powi(2)).exp()).collect())
    };
    Ok(match ic {
        InitialCondition::GaussianHump { amplitude, width, center } => (gauss(*amplitude, *width, center_or_mid(*center, grid))?, vec![0.0; n]),
        InitialCondition::DamBreak { left, right, interface } => {
            let xi = center_or_mid(*interface, grid);
            (x.iter().map(|x| if *x < xi { *left } else { *right }).collect(), vec![0.0; n])
        }
        InitialCondition::SimpleWaveRight { amplitude, width, center } => {
            let z = gauss(*amplitude, *width, center_or_mid(*center, grid))?;
            let eps = params.epsilon;
            let v = z
                .iter()
                .map(|z| {
                    let r = 1.0 + eps * z;
                    if !(r > 0.0) {
                        Err(Error::DepthViolation { cell: 0, depth: r, h_min: params.h_min })
                    } else if eps == 0.0 {
                        Ok(*z)
                    } else {
                        Ok(2.0 * *z / (r.sqrt() + 1.0))
                    }
                })
                .collect::<Result<Vec<f64>>>()?;
            (z, v)
        }
        InitialCondition::SingleMode { amplitude, mode } => {
            let k = 2.0 * std::f64::consts::PI * *mode as f64 / grid.length;
            (x.iter().map(|x| amplitude * (k * x).cos()).collect(), vec![0.0; n])
        }
        InitialCondition::RestState => (vec![0.0; n], vec![0.0; n]),
        InitialCondition::Arrays { zeta, vbar } => {
            grid.check_len(zeta)?;
            grid.check_len(vbar)?;
            (zeta.clone(), vbar.clone())
        }
    })
}

/// Layer velocities of the fastest right-going mode: A^-1 l / c with
/// A = diag(l) + mu k^2 T and c^2 = l^T A^-1 l.
fn multilayer_mode_shape(l: &[f64], k: f64, mu: f64) -> Result<Vec<f64>> {
    let t = build_t_matrix(l)?;
    let a = DMatrix::from_diagonal(&DVector::from_column_slice(l)) + t * (mu * k * k);
    let lv = DVector::from_column_slice(l);
    let w = a
        .cholesky()
        .ok_or_else(|| Error::SolveFailure("layer matrix not positive definite".into()))?
        .solve(&lv);
    let c = lv.dot(&w).sqrt();
    Ok(w.iter().map(|w| w / c).collect())
}

/// Ratio vbar / zeta of the model's right-going linear mode.
fn hydro_mode_ratio(spec: &SystemModelSpec, k: f64, mu: f64) -> Result<f64> {
    Ok(match spec {
        SystemModelSpec::Nsw | SystemModelSpec::NswTurbulent { boussinesq: false, .. } => 1.0,
        SystemModelSpec::AbcdBoussinesq { a, b, c, d } => {
            let s = phase_speed_abcd(k, mu, *a, *b, *c, *d)?.sqrt();
            s * (1.0 + mu * b * k * k) / (1.0 - mu * a * k * k)
        }
        // (1 - mu/3 dxx) v_t: abcd(0, 0, 0, 1/3); SGN/Peregrine share it
        _ => phase_speed_abcd(k, mu, 0.0, 0.0, 0.0, 1.0 / 3.0)?.sqrt(),
    })
}

/// psi with (tanh(sqrt(mu)|D|)/(sqrt(mu)|D|)) psi_x = vbar; the mean of vbar is dropped.
fn psi_from_vbar(ops: &SpectralOps, vbar: &[f64], mu: f64) -> Vec<f64> {
    ops.apply_fn(vbar, |j, k| {
        if k == 0.0 || ops.is_nyquist(j) {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, -1.0 / (k * cww2(k, mu)))
        }
    })
}

fn vbar_from_psi(ops: &SpectralOps, psi: &[f64], mu: f64) -> Vec<f64> {
    ops.apply_fn(psi, |j, k| if ops.is_nyquist(j) { Complex64::new(0.0, 0.0) } else { Complex64::new(0.0, k * cww2(k, mu)) })
}

/// A model, its context and the evolving state.
pub struct Simulation {
    pub model: ModelSpec,
    pub ctx: SystemContext,
    pub state: ModelState,
    pub t: f64,
    /// max entropy residual since the last output (finite-volume NSW)
    pub entropy_residual_max: f64,
    /// cumulative dissipated energy (wave breaking)
    pub dissipated: f64,
    pub steps: usize,
}

fn check_combination(model: &ModelSpec, sc: &Scenario) -> Result<()> {
    let grid = &sc.grid;
    let flat = sc.bathymetry.as_ref().map(|b| b.is_flat()).unwrap_or(true) || sc.params.beta == 0.0;
    let open = sc.numerics.left != BoundaryCondition::Wall || sc.numerics.right != BoundaryCondition::Wall;
    let transparent = sc.numerics.left == BoundaryCondition::TransparentNsw || sc.numerics.right == BoundaryCondition::TransparentNsw;
    let name = model.name();
    let (periodic_only, flat_only, fv) = match model {
        ModelSpec::Scalar(_) => (true, true, false),
        ModelSpec::System(s) => {
            let fv = s.is_finite_volume(&sc.numerics);
            let spectral_only = matches!(
                s,
                SystemModelSpec::AbcdBoussinesq { .. }
                    | SystemModelSpec::MultiLayerBoussinesq { .. }
                    | SystemModelSpec::NswTurbulent { boussinesq: true, .. }
                    | SystemModelSpec::IsobeKakinuma1
                    | SystemModelSpec::LinearReference
            );
            let flat_only = spectral_only || matches!(s, SystemModelSpec::SgnVorticity | SystemModelSpec::SgnWaveBreaking { .. });
            (spectral_only, flat_only, fv)
        }
    };
    if periodic_only && grid.boundary != Boundary::Periodic {
        return Err(Error::BoundaryUnsupported(format!("{name} requires a periodic grid")));
    }
    if flat_only && !flat {
        return Err(Error::Unsupported(format!("{name} requires a flat bottom")));
    }
    if grid.boundary == Boundary::Wall && open {
        if !fv {
            return Err(Error::Unsupported(format!("{name}: generating and transparent conditions need a finite-volume shallow water model")));
        }
        if transparent && !matches!(model, ModelSpec::System(SystemModelSpec::Nsw)) {
            return Err(Error::Unsupported(format!("{name}: the transparent condition is only defined for NSW")));
        }
    }
    if fv && !(sc.params.epsilon > 0.0) {
        return Err(Error::InvalidParams("finite-volume models need eps > 0".into()));
    }
    Ok(())
}

/// Checks a model and scenario without building any state.
pub fn validate_run(model: &ModelSpec, sc: &Scenario) -> Result<()> {
    model.validate()?;
    sc.validate()?;
    check_combination(model, sc)
}

impl Simulation {
    pub fn new(model: &ModelSpec, sc: &Scenario) -> Result<Self> {
        validate_run(model, sc)?;
        let ctx = SystemContext::new(&sc.grid, sc.bathy(), sc.params, sc.numerics.clone())?;
        let (zeta, vbar) = base_fields(&sc.initial, &sc.grid, &sc.params)?;
        let mode = match sc.initial {
            InitialCondition::SingleMode { amplitude, mode } => Some((amplitude, mode, 2.0 * std::f64::consts::PI * mode as f64 / sc.grid.length)),
            _ => None,
        };
        let p = &sc.params;
        let bathy = &ctx.bathy;
        let hydro = |ratio: f64| -> Result<HydroState> {
            let v = if mode.is_some() { zeta.iter().map(|z| ratio * z).collect() } else { vbar.clone() };
            HydroState::new(zeta.clone(), v, bathy, p)
        };
        let state = match model {
            ModelSpec::Scalar(spec) => {
                let kind = spec.field_kind();
                let u = match (&sc.initial, kind) {
                    (InitialCondition::SimpleWaveRight { .. } | InitialCondition::Arrays { .. }, FieldKind::Velocity) => vbar.clone(),
                    _ => zeta.clone(),
                };
                ModelState::Scalar(ScalarState::new(u, kind, p)?)
            }
            ModelSpec::System(spec) => {
                let k = mode.map(|m| m.2).unwrap_or(0.0);
                match spec {
                    SystemModelSpec::IsobeKakinuma1 => match mode {
                        Some((a, m, _)) => ModelState::Ik(ik_single_mode(&ctx, a, m)?),
                        None => ModelState::Ik(ik_initial_state(&zeta, &vbar, &ctx)?),
                    },
                    SystemModelSpec::LinearReference => {
                        let ops = ctx.ops.spectral("linear_reference")?;
                        match mode {
                            Some((a, m, _)) => {
                                let (z, psi) = right_going_mode(&sc.grid, p.mu, a, m);
                                ModelState::Linear { zeta: z, psi }
                            }
                            None => ModelState::Linear { zeta: zeta.clone(), psi: psi_from_vbar(ops, &vbar, p.mu) },
                        }
                    }
                    SystemModelSpec::MultiLayerNsw { l } | SystemModelSpec::MultiLayerBoussinesq { l } => {
                        let vels = match mode {
                            Some(_) => {
                                let mu_eff = if matches!(spec, SystemModelSpec::MultiLayerNsw { .. }) { 0.0 } else { p.mu };
                                let w = multilayer_mode_shape(l, k, mu_eff)?;
                                w.iter().map(|w| zeta.iter().map(|z| w * z).collect()).collect()
                            }
                            None => vec![vbar.clone(); l.len()],
                        };
                        ModelState::MultiLayer(MultiLayerState::new(zeta.clone(), l.clone(), vels, bathy, p)?)
                    }
                    SystemModelSpec::SgnVorticity | SystemModelSpec::SgnWaveBreaking { .. } | SystemModelSpec::NswTurbulent { .. } => {
                        let h = hydro(hydro_mode_ratio(spec, k, p.mu)?)?;
                        let n = h.len();
                        ModelState::Enstrophy(EnstrophyState::new(h, vec![sc.phi0; n])?)
                    }
                    _ => ModelState::Hydro(hydro(hydro_mode_ratio(spec, k, p.mu)?)?),
                }
            }
        };
        Ok(Simulation { model: model.clone(), ctx, state, t: 0.0, entropy_residual_max: f64::NEG_INFINITY, dissipated: 0.0, steps: 0 })
    }

    fn system(&self) -> Option<&SystemModelSpec> {
        match &self.model {
            ModelSpec::System(s) => Some(s),
            ModelSpec::Scalar(_) => None,
        }
    }

    /// Stability bound of the current state; infinite for the exact linear solver.
    pub fn max_dt(&self) -> Result<f64> {
        let ctx = &self.ctx;
        match (&self.model, &self.state) {
            (ModelSpec::Scalar(spec), ModelState::Scalar(s)) => {
                Ok(scalar_max_dt(spec, s, &ctx.params, ctx.ops.spectral("scalar model")?, ctx.numerics.cfl))
            }
            (ModelSpec::System(spec), state) => {
                let fv = spec.is_finite_volume(&ctx.numerics);
                match state {
                    ModelState::Hydro(h) => match spec {
                        _ if fv => fv_max_dt(spec, &h.zeta, &[&h.vbar], None, ctx),
                        SystemModelSpec::AbcdBoussinesq { a, b, c, d } => abcd_max_dt(h, ctx, *a, *b, *c, *d),
                        SystemModelSpec::Peregrine => peregrine_max_dt(h, ctx),
                        _ => sgn_max_dt(ctx, h, None),
                    },
                    ModelState::Enstrophy(e) => match spec {
                        _ if fv => fv_max_dt(spec, &e.hydro.zeta, &[&e.hydro.vbar], Some(&e.phi), ctx),
                        SystemModelSpec::NswTurbulent { alpha, .. } => boussinesq_e_max_dt(e, ctx, *alpha),
                        _ => sgn_max_dt(ctx, &e.hydro, Some(&e.phi)),
                    },
                    ModelState::MultiLayer(m) => {
                        if fv {
                            let vs: Vec<&[f64]> = m.layer_velocities.iter().map(|v| v.as_slice()).collect();
                            fv_max_dt(spec, &m.zeta, &vs, None, ctx)
                        } else {
                            multilayer_boussinesq_max_dt(m, ctx)
                        }
                    }
                    ModelState::Ik(s) => ik_max_dt(s, ctx),
                    ModelState::Linear { .. } => Ok(f64::INFINITY),
                    ModelState::Scalar(_) => Err(Error::Unsupported("scalar state for a system model".into())),
                }
            }
            _ => Err(Error::Unsupported("state does not match the model".into())),
        }
    }

    /// One step of size dt; the step functions check dt against their bound.
    pub fn step(&mut self, dt: f64) -> Result<()> {
        let ctx = &self.ctx;
        let t = self.t;
        let next = match (&self.model, &self.state) {
            (ModelSpec::Scalar(spec), ModelState::Scalar(s)) => {
                let ops = ctx.ops.spectral("scalar model")?;
                let limit = scalar_max_dt(spec, s, &ctx.params, ops, ctx.numerics.cfl);
                ModelState::Scalar(scalar_step(s, spec, &ctx.params, ops, dt, limit)?)
            }
            (ModelSpec::System(spec), state) => {
                let fv = spec.is_finite_volume(&ctx.numerics);
                match (spec, state) {
                    (SystemModelSpec::Nsw, ModelState::Hydro(h)) if fv => {
                        let (s, r) = nsw_step_with_residual(h, ctx, t, dt)?;
                        let m = r.iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v));
                        self.entropy_residual_max = self.entropy_residual_max.max(m);
                        ModelState::Hydro(s)
                    }
                    (SystemModelSpec::Nsw, ModelState::Hydro(h)) => ModelState::Hydro(nsw_spectral_step(h, ctx, dt)?),
                    (SystemModelSpec::AbcdBoussinesq { a, b, c, d }, ModelState::Hydro(h)) => {
                        ModelState::Hydro(abcd_step(h, ctx, *a, *b, *c, *d, dt)?)
                    }
                    (SystemModelSpec::Peregrine, ModelState::Hydro(h)) => ModelState::Hydro(peregrine_step(h, ctx, dt)?),
                    (SystemModelSpec::Sgn, ModelState::Hydro(h)) => ModelState::Hydro(sgn_step(h, ctx, dt)?),
                    (SystemModelSpec::SgnVorticity, ModelState::Enstrophy(e)) => ModelState::Enstrophy(sgn_vorticity_step(e, ctx, dt)?),
                    (SystemModelSpec::SgnWaveBreaking { cp, cr }, ModelState::Enstrophy(e)) => {
                        let (s, d) = wave_breaking_step_with_dissipation(e, ctx, *cp, *cr, dt)?;
                        self.dissipated += d;
                        ModelState::Enstrophy(s)
                    }
                    (SystemModelSpec::NswTurbulent { alpha, boussinesq }, ModelState::Enstrophy(e)) => {
                        if *boussinesq {
                            ModelState::Enstrophy(boussinesq_e_step(e, ctx, *alpha, dt)?)
                        } else {
                            ModelState::Enstrophy(nsw_turbulent_step(e, ctx, *alpha, t, dt)?)
                        }
                    }
                    (SystemModelSpec::MultiLayerNsw { .. }, ModelState::MultiLayer(m)) => ModelState::MultiLayer(multilayer_nsw_step(m, ctx, t, dt)?),
                    (SystemModelSpec::MultiLayerBoussinesq { .. }, ModelState::MultiLayer(m)) => {
                        ModelState::MultiLayer(multilayer_boussinesq_step(m, ctx, dt)?)
                    }
                    (SystemModelSpec::IsobeKakinuma1, ModelState::Ik(s)) => ModelState::Ik(ik_step(s, ctx, dt)?),
                    (SystemModelSpec::LinearReference, ModelState::Linear { zeta, psi }) => {
                        let ops = ctx.ops.spectral("linear_reference")?;
                        let (z, p) = linear_reference_with(ops, zeta, psi, ctx.params.mu, dt)?;
                        ModelState::Linear { zeta: z, psi: p }
                    }
                    _ => return Err(Error::Unsupported("state does not match the model".into())),
                }
            }
            _ => return Err(Error::Unsupported("state does not match the model".into())),
        };
        self.state = next;
        self.t += dt;
        self.steps += 1;
        Ok(())
    }

    /// Advance to `t_target` with the largest admissible steps, or with
    /// `fixed_dt` when given; the last step is shortened to land on the target.
    pub fn advance_to(&mut self, t_target: f64, fixed_dt: Option<f64>) -> Result<()> {
        let tol = 1e-12 * (1.0 + t_target.abs());
        while self.t < t_target - tol {
            let remaining = t_target - self.t;
            let dt = match fixed_dt {
                Some(dt) => dt,
                None => self.max_dt()?,
            };
            let dt = if dt >= remaining - tol { remaining } else { dt };
            self.step(dt).map_err(|e| Error::Run { model: self.model.name(), t: self.t, source: Box::new(e) })?;
        }
        self.t = self.t.max(t_target);
        Ok(())
    }

    /// Name of the field model_gap compares.
    pub fn primary_field(&self) -> &'static str {
        match &self.state {
            ModelState::Scalar(s) if s.field_kind == FieldKind::Velocity => "vbar",
            _ => "zeta",
        }
    }

    pub fn snapshot(&self) -> Result<Snapshot> {
        let ctx = &self.ctx;
        let mut f = BTreeMap::new();
        match &self.state {
            ModelState::Hydro(h) => {
                f.insert("zeta".into(), h.zeta.clone());
                f.insert("vbar".into(), h.vbar.clone());
            }
            ModelState::Enstrophy(e) => {
                f.insert("zeta".into(), e.hydro.zeta.clone());
                f.insert("vbar".into(), e.hydro.vbar.clone());
                f.insert("phi".into(), e.phi.clone());
            }
            ModelState::MultiLayer(m) => {
                f.insert("zeta".into(), m.zeta.clone());
                f.insert("vbar".into(), m.mean_velocity());
                for (j, v) in m.layer_velocities.iter().enumerate() {
                    f.insert(format!("v{}", j + 1), v.clone());
                }
            }
            ModelState::Ik(s) => {
                f.insert("zeta".into(), s.zeta.clone());
                f.insert("vbar".into(), ik_mean_velocity(s, ctx)?);
                f.insert("phi0".into(), s.phi0.clone());
                f.insert("phi1".into(), s.phi1.clone());
            }
            ModelState::Scalar(s) => {
                let spec = match &self.model {
                    ModelSpec::Scalar(spec) => spec,
                    _ => return Err(Error::Unsupported("scalar state for a system model".into())),
                };
                let other = companion_field(s, spec, &ctx.params, ctx.ops.spectral("scalar model")?)?;
                let (a, b) = if s.field_kind == FieldKind::Velocity { ("vbar", "zeta") } else { ("zeta", "vbar") };
                f.insert(a.into(), s.u.clone());
                f.insert(b.into(), other);
            }
            ModelState::Linear { zeta, psi } => {
                let ops = ctx.ops.spectral("linear_reference")?;
                f.insert("zeta".into(), zeta.clone());
                f.insert("vbar".into(), vbar_from_psi(ops, psi, ctx.params.mu));
                f.insert("psi".into(), psi.clone());
            }
        }
        Ok(Snapshot { fields: f })
    }

    /// Energies meaningful for the model: NSW for hyperbolic models,
    /// SGN (plus rotational and total with enstrophy) for the SGN family.
    pub fn energies(&self) -> Result<Vec<EnergyBudget>> {
        let ctx = &self.ctx;
        let g = ctx.grid();
        let flat = ctx.bathy.is_flat() || ctx.params.beta == 0.0;
        let sgn_family = matches!(
            self.system(),
            Some(SystemModelSpec::Sgn | SystemModelSpec::SgnVorticity | SystemModelSpec::SgnWaveBreaking { .. } | SystemModelSpec::Peregrine)
        );
        Ok(match &self.state {
            ModelState::Hydro(h) => {
                let mut out = vec![energy_nsw(h, &ctx.bathy, &ctx.params, g)?];
                if sgn_family && flat {
                    out.push(energy_sgn(h, &ctx.bathy, &ctx.params, g, None)?);
                }
                out
            }
            ModelState::Enstrophy(e) => {
                let mut out = vec![energy_nsw(&e.hydro, &ctx.bathy, &ctx.params, g)?, energy_rotational(e, &ctx.bathy, &ctx.params, g)?];
                if sgn_family && flat {
                    out.push(energy_sgn(&e.hydro, &ctx.bathy, &ctx.params, g, None)?);
                    out.push(energy_total(e, &ctx.bathy, &ctx.params, g, None)?);
                }
                out
            }
            ModelState::MultiLayer(m) => {
                let h = HydroState { zeta: m.zeta.clone(), vbar: m.mean_velocity() };
                vec![energy_nsw(&h, &ctx.bathy, &ctx.params, g)?]
            }
            ModelState::Ik(s) => {
                let h = HydroState { zeta: s.zeta.clone(), vbar: ik_mean_velocity(s, ctx)? };
                vec![energy_nsw(&h, &ctx.bathy, &ctx.params, g)?]
            }
            ModelState::Scalar(_) | ModelState::Linear { .. } => Vec::new(),
        })
    }

    pub fn mass(&self) -> Result<f64> {
        let s = self.snapshot()?;
        let z = s.fields.get("zeta").ok_or_else(|| Error::Unsupported("no elevation field".into()))?;
        Ok(z.iter().sum::<f64>() * self.ctx.grid().dx)
    }

    pub fn constraint_residual(&self) -> Result<Option<f64>> {
        match &self.state {
            ModelState::Ik(s) => Ok(Some(ik_constraint_residual(s, &self.ctx)?)),
            _ => Ok(None),
        }
    }
}

fn push(map: &mut BTreeMap<String, Vec<f64>>, key: &str, v: f64) {
    map.entry(key.to_string()).or_default().push(v);
}

/// Run a model over a scenario and collect the outputs.
pub fn run(model: &ModelSpec, sc: &Scenario) -> Result<RunRecord> {
    let mut sim = Simulation::new(model, sc)?;
    let mut rec = RunRecord {
        model: model.name(),
        scenario_hash: sc.hash(model),
        primary_field: sim.primary_field().to_string(),
        x: sc.grid.centers(),
        dx: sc.grid.dx,
        times: Vec::new(),
        snapshots: Vec::new(),
        energies: Vec::new(),
        residuals: BTreeMap::new(),
    };
    let mut e0: Vec<f64> = Vec::new();
    for t in sc.output_times() {
        sim.advance_to(t, sc.dt)?;
        rec.times.push(t);
        rec.snapshots.push(sim.snapshot()?);
        let mut en = sim.energies()?;
        if e0.is_empty() {
            e0 = en.iter().map(|e| e.total).collect();
        }
        en = en.into_iter().zip(&e0).map(|(e, r)| e.with_reference(*r)).collect();
        rec.energies.push(en);
        push(&mut rec.residuals, "mass", sim.mass()?);
        push(&mut rec.residuals, "steps", sim.steps as f64);
        if let Some(c) = sim.constraint_residual()? {
            push(&mut rec.residuals, "constraint", c);
        }
        match sim.system() {
            Some(SystemModelSpec::Nsw) if !sc.numerics.nsw_spectral => {
                let r = if sim.entropy_residual_max.is_finite() { sim.entropy_residual_max } else { 0.0 };
                push(&mut rec.residuals, "entropy_residual_max", r);
                sim.entropy_residual_max = f64::NEG_INFINITY;
            }
            Some(SystemModelSpec::SgnWaveBreaking { .. }) => push(&mut rec.residuals, "dissipated", sim.dissipated),
            _ => {}
        }
    }
    Ok(rec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::Signal;

    fn scenario(n: usize, ic: InitialCondition) -> Scenario {
        let g = Grid1D::periodic(n, 20.0).unwrap();
        Scenario::new(g, SimulationParams::new(0.1, 0.1, 0.0).unwrap(), ic, 1.0)
    }

    fn hump() -> InitialCondition {
        InitialCondition::GaussianHump { amplitude: 1.0, width: 2.0, center: None }
    }

    fn all_models() -> Vec<ModelSpec> {
        let sys = vec![
            SystemModelSpec::Nsw,
            SystemModelSpec::AbcdBoussinesq { a: 0.0, b: 1.0 / 6.0, c: 0.0, d: 1.0 / 6.0 },
            SystemModelSpec::Peregrine,
            SystemModelSpec::Sgn,
            SystemModelSpec::SgnVorticity,
            SystemModelSpec::SgnWaveBreaking { cp: 0.1, cr: 0.1 },
            SystemModelSpec::NswTurbulent { alpha: 0.5, boussinesq: false },
            SystemModelSpec::NswTurbulent { alpha: 0.5, boussinesq: true },
            SystemModelSpec::MultiLayerNsw { l: vec![0.5, 0.5] },
            SystemModelSpec::MultiLayerBoussinesq { l: vec![0.5, 0.5] },
            SystemModelSpec::IsobeKakinuma1,
            SystemModelSpec::LinearReference,
        ];
        let sc = vec![
            ScalarModelSpec::BurgersZeta,
            ScalarModelSpec::WhithamV,
            ScalarModelSpec::KdVBbm { p: 0.0 },
            ScalarModelSpec::CamassaHolmV { p: 0.1, eps_mu_terms: true },
        ];
        sys.into_iter().map(ModelSpec::System).chain(sc.into_iter().map(ModelSpec::Scalar)).collect()
    }

    #[test]
    fn every_model_runs_a_hump() {
        let mut sc = scenario(64, hump());
        sc.n_outputs = 2;
        for m in all_models() {
            let r = run(&m, &sc).unwrap_or_else(|e| panic!("{}: {e}", m.name()));
            assert_eq!(r.times, vec![0.0, 0.5, 1.0]);
            assert_eq!(r.snapshots.len(), 3);
            // the velocity form conserves the integral of vbar, not of its companion zeta
            let (m0, m2): (f64, f64) = (r.primary(0).iter().sum(), r.primary(2).iter().sum());
            assert!((m2 - m0).abs() < 1e-9 * (1.0 + m0.abs()), "{} mass {m0} {m2}", m.name());
        }
    }

    #[test]
    fn rest_state_stays_at_rest() {
        let sc = scenario(32, InitialCondition::RestState);
        for m in all_models() {
            let r = run(&m, &sc).unwrap();
            let last = r.snapshots.last().unwrap();
            for (k, v) in &last.fields {
                assert!(v.iter().all(|x| x.abs() < 1e-14), "{} {k}", m.name());
            }
        }
    }

    #[test]
    fn deterministic_hash_and_output() {
        let sc = scenario(32, hump());
        let m = ModelSpec::System(SystemModelSpec::Sgn);
        let (a, b) = (run(&m, &sc).unwrap(), run(&m, &sc).unwrap());
        assert_eq!(a, b);
        let mut sc2 = sc.clone();
        sc2.t_end = 2.0;
        assert_ne!(sc.hash(&m), sc2.hash(&m));
    }

    #[test]
    fn invalid_combinations() {
        let wall = Grid1D::new(32, 20.0, Boundary::Wall).unwrap();
        let mut sc = scenario(32, hump());
        sc.grid = wall;
        let abcd = ModelSpec::System(SystemModelSpec::AbcdBoussinesq { a: 0.0, b: 0.0, c: 0.0, d: 1.0 / 3.0 });
        assert!(matches!(Simulation::new(&abcd, &sc), Err(Error::BoundaryUnsupported(_))));
        sc.numerics.right = BoundaryCondition::TransparentNsw;
        let sgn = ModelSpec::System(SystemModelSpec::Sgn);
        assert!(matches!(Simulation::new(&sgn, &sc), Err(Error::Unsupported(_))));
        let ml = ModelSpec::System(SystemModelSpec::MultiLayerNsw { l: vec![1.0] });
        assert!(matches!(Simulation::new(&ml, &sc), Err(Error::Unsupported(_))));
        sc.numerics.right = BoundaryCondition::Generating { signal: Signal::Zero };
        assert!(Simulation::new(&ml, &sc).is_ok());
        let mut sc = scenario(32, hump());
        sc.params.epsilon = 0.0;
        assert!(matches!(Simulation::new(&ModelSpec::System(SystemModelSpec::Nsw), &sc), Err(Error::InvalidParams(_))));
    }

    #[test]
    fn failures_carry_time_and_model() {
        let mut sc = scenario(32, hump());
        sc.n_outputs = 1;
        sc.dt = Some(0.5);
        let e = run(&ModelSpec::System(SystemModelSpec::Sgn), &sc).unwrap_err();
        assert_eq!(e.kind(), "CFLViolation");
        assert!(e.is_numerical());
        assert!(matches!(e, Error::Run { t, .. } if t == 0.0));
    }

    #[test]
    fn single_mode_velocity_matches_linear_reference() {
        let g = Grid1D::periodic(32, 20.0).unwrap();
        let sc = Scenario::new(g, SimulationParams::new(0.0, 0.2, 0.0).unwrap(), InitialCondition::SingleMode { amplitude: 1.0, mode: 2 }, 0.0);
        let r = run(&ModelSpec::System(SystemModelSpec::LinearReference), &sc).unwrap();
        let k = 2.0 * std::f64::consts::PI * 2.0 / 20.0;
        let c = cww2(k, 0.2).sqrt();
        let (z, v) = (r.field(0, "zeta").unwrap(), r.field(0, "vbar").unwrap());
        for i in 0..32 {
            assert!((v[i] - c * z[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn linear_reference_psi_round_trip() {
        let g = Grid1D::periodic(32, 20.0).unwrap();
        let ops = SpectralOps::new(&g).unwrap();
        let v: Vec<f64> = g.centers().iter().map(|x| (0.3 * std::f64::consts::PI * x).sin() + 0.2 * (0.1 * std::f64::consts::PI * x).cos()).collect();
        let back = vbar_from_psi(&ops, &psi_from_vbar(&ops, &v, 0.3), 0.3);
        for i in 0..32 {
            assert!((back[i] - v[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn scenario_serde_round_trip() {
        let mut sc = scenario(16, InitialCondition::DamBreak { left: 1.0, right: 0.0, interface: Some(5.0) });
        sc.dt = Some(0.01);
        let s = serde_json::to_string(&sc).unwrap();
        assert_eq!(serde_json::from_str::<Scenario>(&s).unwrap(), sc);
        let m: ModelSpec = serde_json::from_str(r#"{"model":"kdv_bbm","p":0.1}"#).unwrap();
        assert_eq!(m, ModelSpec::Scalar(ScalarModelSpec::KdVBbm { p: 0.1 }));
        let m: ModelSpec = serde_json::from_str(r#"{"model":"sgn_wave_breaking","cp":0.1,"cr":0.2}"#).unwrap();
        assert_eq!(m, ModelSpec::System(SystemModelSpec::SgnWaveBreaking { cp: 0.1, cr: 0.2 }));
    }
}
