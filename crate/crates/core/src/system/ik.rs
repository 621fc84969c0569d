//! Isobe-Kakinuma model with one vertical mode, in the non-characteristic
//! form where the constraint on (phi0, phi1) is propagated in time.

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::ik_block::solve_ik_block;
use crate::spectral::SpectralOps;
use crate::state::{check_finite, water_height, IkState};
use crate::system::SystemContext;
use crate::timestep::{check_dt, pack, rk4, unpack};

/// zeta_t = -d_x(h phi0_x + (mu/3) h^3 phi1_x).
fn mass_tendency(ops: &SpectralOps, h: &[f64], mu: f64, p0x: &[f64], p1x: &[f64]) -> Vec<f64> {
    let flux: Vec<f64> = (0..h.len()).map(|i| h[i] * p0x[i] + mu / 3.0 * h[i].powi(3) * p1x[i]).collect();
    ops.dx(&flux).iter().map(|d| -d).collect()
}

/// Relative size of (1/2) phi0_xx + phi1 + (mu/10) h^2 phi1_xx.
pub fn ik_constraint_residual(state: &IkState, ctx: &SystemContext) -> Result<f64> {
    let ops = ctx.ops.spectral("isobe_kakinuma")?;
    let h = water_height(&state.zeta, &ctx.bathy, &ctx.params)?;
    let d0 = ops.dxx(&state.phi0);
    let d1 = ops.dxx(&state.phi1);
    let mu = ctx.params.mu;
    let c: Vec<f64> = (0..h.len()).map(|i| 0.5 * d0[i] + state.phi1[i] + mu / 10.0 * h[i] * h[i] * d1[i]).collect();
    let cmax = c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let scale = d0.iter().fold(0.0f64, |m, v| m.max(0.5 * v.abs())) + state.phi1.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(if scale == 0.0 { cmax } else { cmax / scale })
}

/// Depth-averaged velocity (h phi0_x + (mu/3) h^3 phi1_x) / h.
pub fn ik_mean_velocity(state: &IkState, ctx: &SystemContext) -> Result<Vec<f64>> {
    let ops = ctx.ops.spectral("isobe_kakinuma")?;
    let h = water_height(&state.zeta, &ctx.bathy, &ctx.params)?;
    let p0x = ops.dx(&state.phi0);
    let p1x = ops.dx(&state.phi1);
    Ok((0..h.len()).map(|i| p0x[i] + ctx.params.mu / 3.0 * h[i] * h[i] * p1x[i]).collect())
}

/// Constraint-satisfying data from (zeta, vbar): phi1 = -vbar_x / 2 shifted
/// by a constant, then phi0 from the constraint.
pub fn ik_initial_state(zeta: &[f64], vbar: &[f64], ctx: &SystemContext) -> Result<IkState> {
    ctx.require_flat("isobe_kakinuma")?;
    let ops = ctx.ops.spectral("isobe_kakinuma")?;
    ctx.grid().check_len(zeta)?;
    ctx.grid().check_len(vbar)?;
    let h = water_height(zeta, &ctx.bathy, &ctx.params)?;
    let mu = ctx.params.mu;
    let n = h.len();
    let mut phi1: Vec<f64> = ops.dx(vbar).iter().map(|d| -0.5 * d).collect();
    let d1 = ops.dxx(&phi1);
    let g: Vec<f64> = (0..n).map(|i| -phi1[i] - mu / 10.0 * h[i] * h[i] * d1[i]).collect();
    // phi1 -> phi1 + c leaves d1 unchanged and shifts g by -c
    let c = g.iter().sum::<f64>() / n as f64;
    for p in phi1.iter_mut() {
        *p += c;
    }
    let g: Vec<f64> = g.iter().map(|v| v - c).collect();
    let phi0 = ops.apply_fn(&g, |_, k| if k == 0.0 { Complex64::new(0.0, 0.0) } else { Complex64::new(-2.0 / (k * k), 0.0) });
    Ok(IkState { zeta: zeta.to_vec(), phi0, phi1 })
}

/// Right-going linear mode cos(k x) of amplitude `amp` (eps = 0 data).
pub fn ik_single_mode(ctx: &SystemContext, amp: f64, mode: usize) -> Result<IkState> {
    let g = ctx.grid();
    let k = 2.0 * std::f64::consts::PI * mode as f64 / g.length;
    let mu = ctx.params.mu;
    let denom = 1.0 - mu * k * k / 10.0;
    if denom.abs() < 1e-12 {
        return Err(Error::IllPosedMode { k });
    }
    let r = 0.5 * k * k / denom;
    let omega = k * crate::dispersion::phase_speed_ik(k, mu).sqrt();
    let x = g.centers();
    let a0 = amp / (omega * (1.0 + mu * r));
    Ok(IkState {
        zeta: x.iter().map(|x| amp * (k * x).cos()).collect(),
        phi0: x.iter().map(|x| a0 * (k * x).sin()).collect(),
        phi1: x.iter().map(|x| r * a0 * (k * x).sin()).collect(),
    })
}

pub fn ik_max_dt(state: &IkState, ctx: &SystemContext) -> Result<f64> {
    let ops = ctx.ops.spectral("isobe_kakinuma")?;
    let h = water_height(&state.zeta, &ctx.bathy, &ctx.params)?;
    let u = ops.dx(&state.phi0);
    let s = h.iter().fold(1.0f64, |m, h| m.max(h.sqrt())) + ctx.params.epsilon * u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let dx = ctx.grid().dx;
    Ok((ctx.numerics.cfl * dx).min(0.5 * dx / s))
}

/// Potentials (phi0, phi1) carrying the surface potential psi = phi0 + mu h^2 phi1
/// and satisfying the constraint.
pub fn ik_potentials(zeta: &[f64], psi: &[f64], ctx: &SystemContext) -> Result<(Vec<f64>, Vec<f64>)> {
    let ops = ctx.ops.spectral("isobe_kakinuma")?;
    let h = water_height(zeta, &ctx.bathy, &ctx.params)?;
    solve_ik_block(&h, ctx.params.mu, ops, psi, &vec![0.0; h.len()])
}

pub fn ik_surface_potential(state: &IkState, ctx: &SystemContext) -> Result<Vec<f64>> {
    let h = water_height(&state.zeta, &ctx.bathy, &ctx.params)?;
    let mu = ctx.params.mu;
    Ok((0..h.len()).map(|i| state.phi0[i] + mu * h[i] * h[i] * state.phi1[i]).collect())
}

/// One RK4 step of (zeta, psi) with psi = phi0 + mu h^2 phi1; the potentials
/// are recovered from psi and the constraint at every stage. The constraint
/// residual is checked before and after; above 10 tol_constraint it is
/// reported as ConstraintDrift.
pub fn ik_step(state: &IkState, ctx: &SystemContext, dt: f64) -> Result<IkState> {
    ctx.require_flat("isobe_kakinuma")?;
    let ops = ctx.ops.spectral("isobe_kakinuma")?;
    let bound = 10.0 * ctx.numerics.tol_constraint;
    let r0 = ik_constraint_residual(state, ctx)?;
    if r0 > bound {
        return Err(Error::ConstraintDrift { residual: r0, bound });
    }
    check_dt(dt, ik_max_dt(state, ctx)?)?;
    let p = ctx.params;
    let (eps, mu) = (p.epsilon, p.mu);
    let psi0 = ik_surface_potential(state, ctx)?;
    let y = rk4(&pack(&[&state.zeta, &psi0]), dt, |y| {
        let f = unpack(y, 2);
        let zeta = &f[0];
        let h = water_height(zeta, &ctx.bathy, &p)?;
        let n = h.len();
        let (phi0, phi1) = solve_ik_block(&h, mu, ops, &f[1], &vec![0.0; n])?;
        let p0x = ops.dx(&phi0);
        let p1x = ops.dx(&phi1);
        let dz = mass_tendency(ops, &h, mu, &p0x, &p1x);
        let dpsi: Vec<f64> = (0..n)
            .map(|i| {
                let h2 = h[i] * h[i];
                let f1 = -h2 * p0x[i] * p1x[i] - 2.0 * h2 * phi1[i] * phi1[i];
                // d_t(phi0 + mu h^2 phi1) picks up 2 mu h h_t phi1
                -zeta[i] - 0.5 * eps * p0x[i] * p0x[i] + eps * mu * f1 + 2.0 * eps * mu * h[i] * dz[i] * phi1[i]
            })
            .collect();
        Ok(pack(&[&dz, &dpsi]))
    })?;
    let f = unpack(&y, 2);
    for (name, v) in [("zeta", &f[0]), ("psi", &f[1])] {
        check_finite(name, v)?;
    }
    let (phi0, phi1) = ik_potentials(&f[0], &f[1], ctx)?;
    let out = IkState { zeta: f[0].clone(), phi0, phi1 };
    let r1 = ik_constraint_residual(&out, ctx)?;
    if r1 > bound {
        return Err(Error::ConstraintDrift { residual: r1, bound });
    }
    Ok(out)
}
