//! Weakly nonlinear dispersive systems: abcd, Peregrine, multi-layer
//! Boussinesq and the Boussinesq system with turbulent pressure.

use nalgebra::{DMatrix, DVector};
use rustfft::num_complex::Complex64;

use crate::dispersion::{build_t_matrix, phase_speed_abcd, phase_speed_multilayer};
use crate::error::{Error, Result};
use crate::fd::Parity;
use crate::operators::peregrine_operator;
use crate::state::{check_fractions, water_height, EnstrophyState, HydroState, MultiLayerState};
use crate::system::fv::clip_enstrophy;
use crate::system::SystemContext;
use crate::timestep::{check_dt, pack, rk4, unpack};

fn bound(ctx: &SystemContext, linear_speed: f64, h: &[f64], velocities: &[&[f64]]) -> f64 {
    let eps = ctx.params.epsilon;
    let hmax = h.iter().fold(1.0f64, |m, v| m.max(*v));
    let umax = velocities.iter().flat_map(|v| v.iter()).fold(0.0f64, |m, v| m.max(v.abs()));
    let s = linear_speed * hmax.sqrt() + eps * umax;
    let dx = ctx.grid().dx;
    (ctx.numerics.cfl * dx).min(0.5 * dx / s)
}

/// Largest stable step for the abcd system on the current state.
pub fn abcd_max_dt(state: &HydroState, ctx: &SystemContext, a: f64, b: f64, c: f64, d: f64) -> Result<f64> {
    let ops = ctx.ops.spectral("abcd")?;
    let mut lin = 0.0f64;
    for &k in ops.wavenumbers() {
        lin = lin.max(phase_speed_abcd(k, ctx.params.mu, a, b, c, d)?.sqrt());
    }
    let h = water_height(&state.zeta, &ctx.bathy, &ctx.params)?;
    Ok(bound(ctx, lin, &h, &[&state.vbar]))
}

/// One RK4 step of the abcd Boussinesq system (periodic grids).
pub fn abcd_step(state: &HydroState, ctx: &SystemContext, a: f64, b: f64, c: f64, d: f64, dt: f64) -> Result<HydroState> {
    crate::dispersion::check_abcd(a, b, c, d)?;
    if b < 0.0 || d < 0.0 {
        return Err(Error::InvalidParams(format!("abcd needs b, d >= 0 (got b = {b}, d = {d})")));
    }
    let ops = ctx.ops.spectral("abcd")?;
    check_dt(dt, abcd_max_dt(state, ctx, a, b, c, d)?)?;
    let p = ctx.params;
    let y0 = pack(&[&state.zeta, &state.vbar]);
    let y = rk4(&y0, dt, |y| {
        let f = unpack(y, 2);
        let (zeta, v) = (&f[0], &f[1]);
        let h = water_height(zeta, &ctx.bathy, &p)?;
        let hv: Vec<f64> = h.iter().zip(v).map(|(h, v)| h * v).collect();
        let dhv = ops.dx(&hv);
        let v3 = ops.dxxx(v);
        let vx = ops.dx(v);
        let zx = ops.dx(zeta);
        let z3 = ops.dxxx(zeta);
        let rz: Vec<f64> = (0..h.len()).map(|i| -(dhv[i] + p.mu * a * v3[i])).collect();
        let rv: Vec<f64> = (0..h.len()).map(|i| -(zx[i] + p.epsilon * v[i] * vx[i] + p.mu * c * z3[i])).collect();
        Ok(pack(&[&ops.helmholtz_inverse(&rz, p.mu * b), &ops.helmholtz_inverse(&rv, p.mu * d)]))
    })?;
    let f = unpack(&y, 2);
    water_height(&f[0], &ctx.bathy, &p)?;
    Ok(HydroState { zeta: f[0].clone(), vbar: f[1].clone() })
}

pub fn peregrine_max_dt(state: &HydroState, ctx: &SystemContext) -> Result<f64> {
    let h = water_height(&state.zeta, &ctx.bathy, &ctx.params)?;
    Ok(bound(ctx, 1.0, &h, &[&state.vbar]))
}

/// One RK4 step of the Peregrine system (1 + mu T_b) V_t + zeta_x + eps V V_x = 0.
pub fn peregrine_step(state: &HydroState, ctx: &SystemContext, dt: f64) -> Result<HydroState> {
    ctx.require_walls("peregrine_step")?;
    let p = ctx.params;
    check_dt(dt, peregrine_max_dt(state, ctx)?)?;
    let op = peregrine_operator(&ctx.ops, &ctx.bathy.b, &p)?;
    let ops = &ctx.ops;
    let y0 = pack(&[&state.zeta, &state.vbar]);
    let y = rk4(&y0, dt, |y| {
        let f = unpack(y, 2);
        let (zeta, v) = (&f[0], &f[1]);
        let h = water_height(zeta, &ctx.bathy, &p)?;
        let hv: Vec<f64> = h.iter().zip(v).map(|(h, v)| h * v).collect();
        let dz: Vec<f64> = ops.dx(&hv, Parity::Odd).iter().map(|d| -d).collect();
        let zx = ops.dx(zeta, Parity::Even);
        let vx = ops.dx(v, Parity::Odd);
        let r: Vec<f64> = (0..h.len()).map(|i| -(zx[i] + p.epsilon * v[i] * vx[i])).collect();
        Ok(pack(&[&dz, &op.solve(&r)?]))
    })?;
    let f = unpack(&y, 2);
    water_height(&f[0], &ctx.bathy, &p)?;
    Ok(HydroState { zeta: f[0].clone(), vbar: f[1].clone() })
}

/// Per-mode inverses of diag(l) + mu k^2 T.
fn mode_inverses(ctx: &SystemContext, l: &[f64]) -> Result<Vec<DMatrix<f64>>> {
    let ops = ctx.ops.spectral("multilayer_boussinesq")?;
    let t = build_t_matrix(l)?;
    let diag = DMatrix::from_diagonal(&DVector::from_column_slice(l));
    ops.wavenumbers()
        .iter()
        .map(|&k| {
            let m = &diag + &t * (ctx.params.mu * k * k);
            m.cholesky()
                .map(|c| c.inverse())
                .ok_or_else(|| Error::SolveFailure(format!("layer matrix not positive definite at k = {k}")))
        })
        .collect()
}

pub fn multilayer_boussinesq_max_dt(state: &MultiLayerState, ctx: &SystemContext) -> Result<f64> {
    let ops = ctx.ops.spectral("multilayer_boussinesq")?;
    let mut lin = 0.0f64;
    for &k in ops.wavenumbers() {
        lin = lin.max(phase_speed_multilayer(k, ctx.params.mu, &state.layer_fractions)?[0].sqrt());
    }
    let h = water_height(&state.zeta, &ctx.bathy, &ctx.params)?;
    let vs: Vec<&[f64]> = state.layer_velocities.iter().map(|v| v.as_slice()).collect();
    Ok(bound(ctx, lin, &h, &vs))
}

/// One RK4 step of the multi-layer Boussinesq system (periodic, flat).
pub fn multilayer_boussinesq_step(state: &MultiLayerState, ctx: &SystemContext, dt: f64) -> Result<MultiLayerState> {
    ctx.require_flat("multilayer_boussinesq_step")?;
    let ops = ctx.ops.spectral("multilayer_boussinesq")?;
    let l = &state.layer_fractions;
    check_fractions(l)?;
    check_dt(dt, multilayer_boussinesq_max_dt(state, ctx)?)?;
    let inv = mode_inverses(ctx, l)?;
    let nl = l.len();
    let n = state.zeta.len();
    let p = ctx.params;
    let mut fields: Vec<&[f64]> = vec![&state.zeta];
    fields.extend(state.layer_velocities.iter().map(|v| v.as_slice()));
    let y = rk4(&pack(&fields), dt, |y| {
        let f = unpack(y, nl + 1);
        let zeta = &f[0];
        let h = water_height(zeta, &ctx.bathy, &p)?;
        let zx = ops.dx(zeta);
        let mut flux = vec![0.0; n];
        let mut rhat = Vec::with_capacity(nl);
        for j in 0..nl {
            let v = &f[j + 1];
            let vx = ops.dx(v);
            let r: Vec<f64> = (0..n).map(|i| -l[j] * (p.epsilon * v[i] * vx[i] + zx[i])).collect();
            rhat.push(ops.forward(&r));
            for i in 0..n {
                flux[i] += l[j] * h[i] * v[i];
            }
        }
        let dz: Vec<f64> = ops.dx(&flux).iter().map(|d| -d).collect();
        let mut out_hat = vec![vec![Complex64::new(0.0, 0.0); n]; nl];
        for m in 0..n {
            for j in 0..nl {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..nl {
                    acc += inv[m][(j, k)] * rhat[k][m];
                }
                out_hat[j][m] = acc;
            }
        }
        let mut out = dz;
        for hat in out_hat {
            out.extend(ops.inverse(hat));
        }
        Ok(out)
    })?;
    let mut f = unpack(&y, nl + 1);
    let zeta = f.remove(0);
    water_height(&zeta, &ctx.bathy, &p)?;
    Ok(MultiLayerState { zeta, layer_fractions: l.clone(), layer_velocities: f })
}

pub fn boussinesq_e_max_dt(state: &EnstrophyState, ctx: &SystemContext, alpha: f64) -> Result<f64> {
    let p = ctx.params;
    let weight = p.epsilon * p.mu.powf(2.0 * alpha);
    let h = water_height(&state.hydro.zeta, &ctx.bathy, &p)?;
    let phimax = state.phi.iter().fold(0.0f64, |m, v| m.max(*v));
    let hmax = h.iter().fold(0.0f64, |m, v| m.max(*v));
    let lin = (1.0 + 3.0 * p.epsilon * weight * hmax * hmax * phimax).sqrt();
    Ok(bound(ctx, lin, &h, &[&state.hydro.vbar]))
}

/// Boussinesq system with turbulent pressure:
/// (1 - mu/3 d_xx) v_t + eps v v_x + zeta_x + eps mu^(2 alpha) d_x(h^3 phi) = 0,
/// with h phi transported conservatively.
pub fn boussinesq_e_step(state: &EnstrophyState, ctx: &SystemContext, alpha: f64, dt: f64) -> Result<EnstrophyState> {
    ctx.require_flat("boussinesq_e_step")?;
    if !(alpha > 0.0 && alpha <= 0.5) {
        return Err(Error::InvalidParams(format!("alpha = {alpha} outside (0, 1/2]")));
    }
    let ops = ctx.ops.spectral("boussinesq_e")?;
    let p = ctx.params;
    let weight = p.epsilon * p.mu.powf(2.0 * alpha);
    let h = water_height(&state.hydro.zeta, &ctx.bathy, &p)?;
    check_dt(dt, boussinesq_e_max_dt(state, ctx, alpha)?)?;
    let m0: Vec<f64> = h.iter().zip(&state.phi).map(|(h, p)| h * p).collect();
    let y = rk4(&pack(&[&state.hydro.zeta, &state.hydro.vbar, &m0]), dt, |y| {
        let f = unpack(y, 3);
        let (zeta, v, m) = (&f[0], &f[1], &f[2]);
        let h = water_height(zeta, &ctx.bathy, &p)?;
        let n = h.len();
        let hv: Vec<f64> = h.iter().zip(v).map(|(h, v)| h * v).collect();
        let dz: Vec<f64> = ops.dx(&hv).iter().map(|d| -d).collect();
        let e: Vec<f64> = (0..n).map(|i| h[i] * h[i] * m[i]).collect();
        let ex = ops.dx(&e);
        let vx = ops.dx(v);
        let zx = ops.dx(zeta);
        let r: Vec<f64> = (0..n).map(|i| -(p.epsilon * v[i] * vx[i] + zx[i] + weight * ex[i])).collect();
        let vm: Vec<f64> = (0..n).map(|i| v[i] * m[i]).collect();
        let dm: Vec<f64> = ops.dx(&vm).iter().map(|d| -p.epsilon * d).collect();
        Ok(pack(&[&dz, &ops.helmholtz_inverse(&r, p.mu / 3.0), &dm]))
    })?;
    let f = unpack(&y, 3);
    let hn = water_height(&f[0], &ctx.bathy, &p)?;
    let phi = clip_enstrophy(f[2].iter().zip(&hn).map(|(m, h)| m / h).collect())?;
    Ok(EnstrophyState { hydro: HydroState { zeta: f[0].clone(), vbar: f[1].clone() }, phi })
}
