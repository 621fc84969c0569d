//! Unidirectional scalar models: Burgers simple waves, linear fully
//! dispersive, Whitham, KdV/BBM and Camassa-Holm families.

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dispersion::cww2;
use crate::error::{Error, Result};
use crate::grid::Bathymetry;
use crate::params::SimulationParams;
use crate::spectral::SpectralOps;
use crate::state::{check_finite, water_height, FieldKind, HydroState, ScalarState};
use crate::timestep::{check_dt, rk4};

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScalarModelSpec {
    BurgersZeta,
    BurgersV,
    LinearFullDispZeta,
    WhithamZeta,
    WhithamV,
    #[serde(rename = "kdv_bbm")]
    KdVBbm { p: f64 },
    /// `eps_mu_terms = false` drops the eps*mu right-hand side.
    CamassaHolmV {
        p: f64,
        #[serde(default = "yes")]
        eps_mu_terms: bool,
    },
    CamassaHolmZeta {
        p: f64,
        #[serde(default = "yes")]
        eps_mu_terms: bool,
    },
    CamassaHolmZetaExpanded {
        p: f64,
        #[serde(default = "yes")]
        eps_mu_terms: bool,
    },
}

impl ScalarModelSpec {
    pub fn field_kind(&self) -> FieldKind {
        match self {
            ScalarModelSpec::BurgersV | ScalarModelSpec::WhithamV | ScalarModelSpec::CamassaHolmV { .. } => FieldKind::Velocity,
            _ => FieldKind::SurfaceElevation,
        }
    }

    pub fn name(&self) -> String {
        match self {
            ScalarModelSpec::BurgersZeta => "burgers_zeta".into(),
            ScalarModelSpec::BurgersV => "burgers_v".into(),
            ScalarModelSpec::LinearFullDispZeta => "linear_fulldisp".into(),
            ScalarModelSpec::WhithamZeta => "whitham_zeta".into(),
            ScalarModelSpec::WhithamV => "whitham_v".into(),
            ScalarModelSpec::KdVBbm { p } => format!("kdvbbm(p={p})"),
            ScalarModelSpec::CamassaHolmV { p, .. } => format!("ch_v(p={p})"),
            ScalarModelSpec::CamassaHolmZeta { p, .. } => format!("ch_zeta(p={p})"),
            ScalarModelSpec::CamassaHolmZetaExpanded { p, .. } => format!("ch_zeta2(p={p})"),
        }
    }

    /// Linear phase speed of the model at wavenumber k.
    pub fn linear_speed(&self, k: f64, mu: f64) -> f64 {
        match self {
            ScalarModelSpec::BurgersZeta | ScalarModelSpec::BurgersV => 1.0,
            ScalarModelSpec::LinearFullDispZeta | ScalarModelSpec::WhithamZeta | ScalarModelSpec::WhithamV => cww2(k, mu).sqrt(),
            ScalarModelSpec::KdVBbm { p }
            | ScalarModelSpec::CamassaHolmV { p, .. }
            | ScalarModelSpec::CamassaHolmZeta { p, .. }
            | ScalarModelSpec::CamassaHolmZetaExpanded { p, .. } => {
                let k2 = mu * k * k;
                (1.0 - p * k2) / (1.0 + (1.0 / 6.0 - p) * k2)
            }
        }
    }
}

/// (a, b, c, d) of the Camassa-Holm family.
pub fn ch_coefficients(p: f64) -> (f64, f64, f64, f64) {
    (p, p - 1.0 / 6.0, -1.5 * p - 1.0 / 6.0, -4.5 * p - 23.0 / 24.0)
}

/// Conditions relating the family to the integrable Camassa-Holm equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChCompatibility {
    pub b_negative: bool,
    pub a_ne_b: bool,
    pub b_eq_minus_2c: bool,
    pub d_eq_2c: bool,
}

impl ChCompatibility {
    pub fn all(&self) -> bool {
        self.b_negative && self.a_ne_b && self.b_eq_minus_2c && self.d_eq_2c
    }
}

pub fn ch_compatibility(p: f64) -> ChCompatibility {
    let (a, b, c, d) = ch_coefficients(p);
    let tol = 1e-12;
    ChCompatibility {
        b_negative: b < 0.0,
        a_ne_b: (a - b).abs() > tol,
        b_eq_minus_2c: (b + 2.0 * c).abs() <= tol,
        d_eq_2c: (d - 2.0 * c).abs() <= tol,
    }
}

/// The unique p with b = -2c, if it also satisfies the remaining conditions.
pub fn ch_compatible_p() -> Option<f64> {
    // b + 2c = (p - 1/6) + (-3p - 1/3) = -2p - 1/2
    let p = -0.25;
    ch_compatibility(p).all().then_some(p)
}

fn radicand_check(u: &[f64], eps: f64, h_min: f64) -> Result<()> {
    for (cell, &z) in u.iter().enumerate() {
        let depth = 1.0 + eps * z;
        if !(depth >= h_min) {
            return Err(Error::DepthViolation { cell, depth, h_min });
        }
    }
    Ok(())
}

/// 3 eps zeta / (1 + sqrt(1 + eps zeta)).
pub fn burgers_factor(z: f64, eps: f64) -> f64 {
    3.0 * eps * z / (1.0 + (1.0 + eps * z).sqrt())
}

/// (2/eps)(sqrt(1 + eps zeta) - 1), with its series for tiny eps*zeta.
pub fn sqrt_companion(u: &[f64], eps: f64) -> Vec<f64> {
    let m = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if eps * m < 1e-8 {
        u.iter().map(|z| z - eps * z * z / 4.0 + eps * eps * z * z * z / 8.0).collect()
    } else {
        u.iter().map(|z| 2.0 / eps * ((1.0 + eps * z).sqrt() - 1.0)).collect()
    }
}

/// Apply (1 + gamma k^2)^{-1}, refusing symbols that vanish or change sign.
pub fn implicit_inverse(ops: &SpectralOps, u: &[f64], gamma: f64) -> Result<Vec<f64>> {
    if gamma < 0.0 {
        for &k in ops.wavenumbers() {
            if 1.0 + gamma * k * k <= 1e-12 {
                return Err(Error::IllPosedMode { k });
            }
        }
    }
    if gamma == 0.0 {
        return Ok(u.to_vec());
    }
    Ok(ops.helmholtz_inverse(u, gamma))
}

fn cww_dx(ops: &SpectralOps, u: &[f64], mu: f64) -> Vec<f64> {
    ops.apply_fn(u, |j, k| ops.derivative_symbol(j, 1) * Complex64::new(cww2(k, mu).sqrt(), 0.0))
}

pub fn rhs_burgers(state: &ScalarState, spec: &ScalarModelSpec, params: &SimulationParams, ops: &SpectralOps) -> Result<Vec<f64>> {
    let u = &state.u;
    let ux = ops.dx(u);
    let eps = params.epsilon;
    match spec {
        ScalarModelSpec::BurgersZeta => {
            radicand_check(u, eps, params.h_min)?;
            let nl: Vec<f64> = u.iter().map(|&z| burgers_factor(z, eps)).collect();
            let p = ops.product(&[&nl, &ux]);
            Ok(ux.iter().zip(&p).map(|(a, b)| -a - b).collect())
        }
        ScalarModelSpec::BurgersV => {
            let p = ops.product(&[u, &ux]);
            Ok(ux.iter().zip(&p).map(|(a, b)| -a - 1.5 * eps * b).collect())
        }
        other => Err(Error::Unsupported(format!("{} is not a Burgers model", other.name()))),
    }
}

pub fn rhs_kdv_bbm(state: &ScalarState, p: f64, params: &SimulationParams, ops: &SpectralOps) -> Result<Vec<f64>> {
    let u = &state.u;
    let ux = ops.dx(u);
    let uxxx = ops.dxxx(u);
    let nl = ops.product(&[u, &ux]);
    let expl: Vec<f64> = (0..u.len())
        .map(|i| -(ux[i] + params.mu * p * uxxx[i] + 1.5 * params.epsilon * nl[i]))
        .collect();
    implicit_inverse(ops, &expl, (1.0 / 6.0 - p) * params.mu)
}

pub fn rhs_whitham(state: &ScalarState, spec: &ScalarModelSpec, params: &SimulationParams, ops: &SpectralOps) -> Result<Vec<f64>> {
    let u = &state.u;
    let eps = params.epsilon;
    let disp = cww_dx(ops, u, params.mu);
    match spec {
        ScalarModelSpec::LinearFullDispZeta => Ok(disp.iter().map(|v| -v).collect()),
        ScalarModelSpec::WhithamV => {
            let ux = ops.dx(u);
            let p = ops.product(&[u, &ux]);
            Ok(disp.iter().zip(&p).map(|(a, b)| -a - 1.5 * eps * b).collect())
        }
        ScalarModelSpec::WhithamZeta => {
            radicand_check(u, eps, params.h_min)?;
            let ux = ops.dx(u);
            let nl: Vec<f64> = u.iter().map(|&z| burgers_factor(z, eps)).collect();
            let p = ops.product(&[&nl, &ux]);
            Ok(disp.iter().zip(&p).map(|(a, b)| -a - b).collect())
        }
        other => Err(Error::Unsupported(format!("{} is not a Whitham model", other.name()))),
    }
}

pub fn rhs_camassa_holm(state: &ScalarState, spec: &ScalarModelSpec, params: &SimulationParams, ops: &SpectralOps) -> Result<Vec<f64>> {
    let (p, eps_mu_terms) = match spec {
        ScalarModelSpec::CamassaHolmV { p, eps_mu_terms }
        | ScalarModelSpec::CamassaHolmZeta { p, eps_mu_terms }
        | ScalarModelSpec::CamassaHolmZetaExpanded { p, eps_mu_terms } => (*p, *eps_mu_terms),
        other => return Err(Error::Unsupported(format!("{} is not a Camassa-Holm model", other.name()))),
    };
    let (a, b, c, d) = ch_coefficients(p);
    let u = &state.u;
    let n = u.len();
    let (eps, mu) = (params.epsilon, params.mu);
    let ux = ops.dx(u);
    let uxx = ops.dxx(u);
    let uxxx = ops.dxxx(u);
    let nonlinear: Vec<f64> = match spec {
        ScalarModelSpec::CamassaHolmV { .. } => ops.product(&[u, &ux]).iter().map(|v| 1.5 * eps * v).collect(),
        ScalarModelSpec::CamassaHolmZeta { .. } => {
            radicand_check(u, eps, params.h_min)?;
            let nl: Vec<f64> = u.iter().map(|&z| burgers_factor(z, eps)).collect();
            ops.product(&[&nl, &ux])
        }
        _ => {
            let q2 = ops.product(&[u, &ux]);
            let q3 = ops.product(&[u, u, &ux]);
            let u2: Vec<f64> = ops.product(&[u, u]);
            let q4 = ops.product(&[&u2, u, &ux]);
            (0..n)
                .map(|i| 1.5 * eps * q2[i] - 0.375 * eps * eps * q3[i] + 0.1875 * eps.powi(3) * q4[i])
                .collect()
        }
    };
    let mut expl: Vec<f64> = (0..n).map(|i| -(ux[i] + nonlinear[i] + mu * a * uxxx[i])).collect();
    if eps_mu_terms && eps != 0.0 {
        let t1 = ops.product(&[u, &uxxx]);
        let t2 = ops.product(&[&ux, &uxx]);
        for i in 0..n {
            expl[i] += eps * mu * (c * t1[i] + d * t2[i]);
        }
    }
    // (1 + b mu d_xx) u_t = expl, i.e. gamma = -b mu
    implicit_inverse(ops, &expl, -b * mu)
}

/// Tendency of any scalar model.
pub fn rhs(state: &ScalarState, spec: &ScalarModelSpec, params: &SimulationParams, ops: &SpectralOps) -> Result<Vec<f64>> {
    if state.field_kind != spec.field_kind() {
        return Err(Error::Unsupported(format!("{} evolves {:?}", spec.name(), spec.field_kind())));
    }
    match spec {
        ScalarModelSpec::BurgersZeta | ScalarModelSpec::BurgersV => rhs_burgers(state, spec, params, ops),
        ScalarModelSpec::LinearFullDispZeta | ScalarModelSpec::WhithamZeta | ScalarModelSpec::WhithamV => {
            rhs_whitham(state, spec, params, ops)
        }
        ScalarModelSpec::KdVBbm { p } => rhs_kdv_bbm(state, *p, params, ops),
        _ => rhs_camassa_holm(state, spec, params, ops),
    }
}

/// The slaved field: vbar for surface models, zeta for velocity models.
pub fn companion_field(state: &ScalarState, spec: &ScalarModelSpec, params: &SimulationParams, ops: &SpectralOps) -> Result<Vec<f64>> {
    let u = &state.u;
    let eps = params.epsilon;
    if state.field_kind == FieldKind::SurfaceElevation {
        radicand_check(u, eps, params.h_min)?;
    }
    match spec {
        ScalarModelSpec::BurgersZeta | ScalarModelSpec::CamassaHolmZeta { .. } | ScalarModelSpec::CamassaHolmZetaExpanded { .. } => {
            Ok(sqrt_companion(u, eps))
        }
        ScalarModelSpec::BurgersV | ScalarModelSpec::CamassaHolmV { .. } => Ok(u.iter().map(|v| v + eps * v * v / 4.0).collect()),
        ScalarModelSpec::LinearFullDispZeta => Ok(ops.apply_fn(u, |_, k| Complex64::new(cww2(k, params.mu).sqrt(), 0.0))),
        ScalarModelSpec::WhithamZeta => {
            let c = ops.apply_fn(u, |_, k| Complex64::new(cww2(k, params.mu).sqrt(), 0.0));
            let s = sqrt_companion(u, eps);
            Ok((0..u.len()).map(|i| c[i] + (s[i] - u[i])).collect())
        }
        ScalarModelSpec::WhithamV => {
            let ci = ops.apply_fn(u, |_, k| Complex64::new(1.0 / cww2(k, params.mu).sqrt(), 0.0));
            Ok((0..u.len()).map(|i| ci[i] + eps * u[i] * u[i] / 4.0).collect())
        }
        ScalarModelSpec::KdVBbm { .. } => Ok(sqrt_companion(u, eps)),
    }
}

/// R_pm = 2(sqrt h - 1) pm eps vbar and lambda_pm = pm eps vbar + sqrt h.
pub struct RiemannInvariants {
    pub r_plus: Vec<f64>,
    pub r_minus: Vec<f64>,
    pub lambda_plus: Vec<f64>,
    pub lambda_minus: Vec<f64>,
}

pub fn riemann_invariants(state: &HydroState, bathy: &Bathymetry, params: &SimulationParams) -> Result<RiemannInvariants> {
    let h = water_height(&state.zeta, bathy, params)?;
    let eps = params.epsilon;
    let n = h.len();
    let mut out = RiemannInvariants {
        r_plus: Vec::with_capacity(n),
        r_minus: Vec::with_capacity(n),
        lambda_plus: Vec::with_capacity(n),
        lambda_minus: Vec::with_capacity(n),
    };
    for i in 0..n {
        let s = h[i].sqrt();
        let ev = eps * state.vbar[i];
        out.r_plus.push(2.0 * (s - 1.0) + ev);
        out.r_minus.push(2.0 * (s - 1.0) - ev);
        out.lambda_plus.push(ev + s);
        out.lambda_minus.push(-ev + s);
    }
    Ok(out)
}

pub fn step_rk4(state: &ScalarState, rhs_fn: impl Fn(&ScalarState) -> Result<Vec<f64>>, dt: f64) -> Result<ScalarState> {
    let kind = state.field_kind;
    let u = rk4(&state.u, dt, |y| rhs_fn(&ScalarState { u: y.to_vec(), field_kind: kind }))?;
    Ok(ScalarState { u, field_kind: kind })
}

/// min(cfl dx, dx / (2 max speed)) over linear phase speeds and the
/// nonlinear advection speed of the current state.
pub fn scalar_max_dt(spec: &ScalarModelSpec, state: &ScalarState, params: &SimulationParams, ops: &SpectralOps, cfl: f64) -> f64 {
    let dx = ops.grid().dx;
    let lin = ops.wavenumbers().iter().map(|&k| spec.linear_speed(k, params.mu).abs()).fold(0.0, f64::max);
    let umax = state.u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let speed = lin + 3.0 * params.epsilon * umax;
    (cfl * dx).min(0.5 * dx / speed)
}

pub fn scalar_step(
    state: &ScalarState,
    spec: &ScalarModelSpec,
    params: &SimulationParams,
    ops: &SpectralOps,
    dt: f64,
    dt_limit: f64,
) -> Result<ScalarState> {
    check_dt(dt, dt_limit)?;
    let out = step_rk4(state, |s| rhs(s, spec, params, ops), dt)?;
    check_finite("u", &out.u)?;
    if out.field_kind == FieldKind::SurfaceElevation {
        radicand_check(&out.u, params.epsilon, params.h_min)?;
    }
    Ok(out)
}
