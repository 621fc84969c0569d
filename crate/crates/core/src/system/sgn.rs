//! Serre-Green-Naghdi equations in advective form, with the optional
//! enstrophy coupling and the eddy-viscosity wave-breaking closure.

use crate::error::Result;
use crate::fd::Parity;
use crate::operators::DispersiveOperator;
use crate::state::{check_depth, check_finite, water_height, EnstrophyState, HydroState};
use crate::system::fv::clip_enstrophy;
use crate::system::SystemContext;
use crate::timestep::{check_dt, pack, rk4, unpack};

fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(a, b)| a * b).collect()
}

#[derive(Clone, Copy)]
struct Closure {
    cp: f64,
    cr: f64,
}

struct Tendency {
    zeta: Vec<f64>,
    v: Vec<f64>,
    m: Vec<f64>,
    /// D dx per cell
    dissipation: Vec<f64>,
}

/// Tendencies of (zeta, vbar, m = h phi). `m = None` is plain SGN;
/// `dispersive = false` drops every mu term (NSW).
fn tendency(ctx: &SystemContext, zeta: &[f64], v: &[f64], m: Option<&[f64]>, closure: Option<Closure>, dispersive: bool) -> Result<Tendency> {
    let p = &ctx.params;
    let (eps, mu, beta) = (p.epsilon, p.mu, p.beta);
    let ops = &ctx.ops;
    let n = zeta.len();
    let b = &ctx.bathy.b;
    let h: Vec<f64> = zeta.iter().zip(b).map(|(z, b)| 1.0 + eps * z - beta * b).collect();
    check_depth(&h, p.h_min)?;
    let dzeta: Vec<f64> = ops.dx(&mul(&h, v), Parity::Odd).iter().map(|d| -d).collect();
    let vx = ops.dx(v, Parity::Odd);
    let zx = ops.dx(zeta, Parity::Even);
    let mut rhs: Vec<f64> = zx.iter().map(|z| -z).collect();
    let topo = beta != 0.0 && !ctx.bathy.is_flat();
    if dispersive && eps != 0.0 {
        let vx2 = mul(&vx, &vx);
        let h3: Vec<f64> = h.iter().map(|h| h * h * h).collect();
        let d1 = ops.dx(&mul(&h3, &vx2), Parity::Even);
        if !topo {
            for i in 0..n {
                rhs[i] -= eps * mu * 2.0 / (3.0 * h[i]) * d1[i];
            }
        } else {
            let bx = ops.dx(b, Parity::Even);
            let bxx = ops.dxx(b, Parity::Even);
            // Q1 = -2 R1(vx^2) + beta R2(v^2 bxx)
            let w2: Vec<f64> = (0..n).map(|i| v[i] * v[i] * bxx[i]).collect();
            let h2: Vec<f64> = h.iter().map(|h| h * h).collect();
            let d2 = ops.dx(&mul(&h2, &w2), Parity::Even);
            for i in 0..n {
                let r1 = -d1[i] / (3.0 * h[i]) - beta * 0.5 * h[i] * vx2[i] * bx[i];
                let r2 = d2[i] / (2.0 * h[i]) + beta * w2[i] * bx[i];
                rhs[i] -= eps * mu * (-2.0 * r1 + beta * r2);
            }
        }
    }
    let mut dm = vec![0.0; n];
    let mut dissipation = vec![0.0; n];
    if let Some(m) = m {
        let phi: Vec<f64> = m.iter().zip(&h).map(|(m, h)| (m / h).max(0.0)).collect();
        let nu: Vec<f64> = match closure {
            Some(c) => (0..n).map(|i| c.cp * h[i] * h[i] * phi[i].sqrt()).collect(),
            None => vec![0.0; n],
        };
        let t: Vec<f64> = (0..n).map(|i| h[i].powi(3) * phi[i] - nu[i] * h[i] * vx[i]).collect();
        let dt = ops.dx(&t, Parity::Even);
        for i in 0..n {
            rhs[i] -= eps * mu * dt[i] / h[i];
        }
        let flux = ops.dx(&mul(v, m), Parity::Odd);
        for i in 0..n {
            dm[i] = -eps * flux[i];
            if let Some(c) = closure {
                let d = 0.5 * c.cr * h[i] * h[i] * phi[i].powf(1.5);
                dm[i] += 2.0 * eps * nu[i] * vx[i] * vx[i] / h[i] - 2.0 * d / (mu * h[i] * h[i]);
                dissipation[i] = d * ctx.grid().dx;
            }
        }
    }
    let acc = if dispersive {
        DispersiveOperator::new(ops, &h, b, p)?.solve(&rhs)?
    } else {
        rhs
    };
    let dv: Vec<f64> = (0..n).map(|i| acc[i] - eps * v[i] * vx[i]).collect();
    Ok(Tendency { zeta: dzeta, v: dv, m: dm, dissipation })
}

/// Time derivative of vbar for the SGN family; `phi` adds the enstrophy
/// term, `dispersive = false` gives NSW.
pub fn vbar_tendency(ctx: &SystemContext, zeta: &[f64], vbar: &[f64], phi: Option<&[f64]>, dispersive: bool) -> Result<Vec<f64>> {
    ctx.grid().check_len(zeta)?;
    ctx.grid().check_len(vbar)?;
    let h = water_height(zeta, &ctx.bathy, &ctx.params)?;
    let m: Option<Vec<f64>> = phi.map(|p| p.iter().zip(&h).map(|(p, h)| p * h).collect());
    Ok(tendency(ctx, zeta, vbar, m.as_deref(), None, dispersive)?.v)
}

/// min(cfl dx, dx / (2 max(eps |vbar| + c))) with c the long-wave speed,
/// raised by the turbulent pressure when phi > 0.
pub fn sgn_max_dt(ctx: &SystemContext, state: &HydroState, phi: Option<&[f64]>) -> Result<f64> {
    let p = &ctx.params;
    let h = water_height(&state.zeta, &ctx.bathy, p)?;
    let mut s = 0.0f64;
    for i in 0..h.len() {
        let ph = phi.map(|f| f[i]).unwrap_or(0.0).max(0.0);
        let c = (h[i] * (1.0 + 3.0 * p.epsilon * p.epsilon * p.mu * h[i] * ph)).sqrt();
        s = s.max(p.epsilon * state.vbar[i].abs() + c);
    }
    let dx = ctx.grid().dx;
    Ok((ctx.numerics.cfl * dx).min(0.5 * dx / s))
}

fn hydro_step(state: &HydroState, ctx: &SystemContext, dt: f64, dispersive: bool) -> Result<HydroState> {
    ctx.require_walls("sgn_step")?;
    ctx.grid().check_len(&state.zeta)?;
    check_dt(dt, sgn_max_dt(ctx, state, None)?)?;
    let y0 = pack(&[&state.zeta, &state.vbar]);
    let y = rk4(&y0, dt, |y| {
        let f = unpack(y, 2);
        let t = tendency(ctx, &f[0], &f[1], None, None, dispersive)?;
        Ok(pack(&[&t.zeta, &t.v]))
    })?;
    let mut f = unpack(&y, 2);
    let vbar = f.pop().unwrap();
    let zeta = f.pop().unwrap();
    water_height(&zeta, &ctx.bathy, &ctx.params)?;
    Ok(HydroState { zeta, vbar })
}

/// One RK4 step of SGN (flat or topographic bottom).
pub fn sgn_step(state: &HydroState, ctx: &SystemContext, dt: f64) -> Result<HydroState> {
    hydro_step(state, ctx, dt, true)
}

/// NSW in advective form on the spectral/difference path: SGN with the
/// dispersive terms removed. Valid for smooth solutions only.
pub fn nsw_spectral_step(state: &HydroState, ctx: &SystemContext, dt: f64) -> Result<HydroState> {
    hydro_step(state, ctx, dt, false)
}

fn enstrophy_step(state: &EnstrophyState, ctx: &SystemContext, dt: f64, closure: Option<Closure>) -> Result<(EnstrophyState, f64)> {
    ctx.require_walls("sgn_vorticity_step")?;
    ctx.require_flat("sgn_vorticity_step")?;
    ctx.grid().check_len(&state.phi)?;
    check_dt(dt, sgn_max_dt(ctx, &state.hydro, Some(&state.phi))?)?;
    let h = state.hydro.height(&ctx.bathy, &ctx.params)?;
    let m0 = mul(&h, &state.phi);
    let n = h.len();
    let y0 = pack(&[&state.hydro.zeta, &state.hydro.vbar, &m0, &vec![0.0; n]]);
    let y = rk4(&y0, dt, |y| {
        let f = unpack(y, 4);
        let t = tendency(ctx, &f[0], &f[1], Some(&f[2]), closure, true)?;
        Ok(pack(&[&t.zeta, &t.v, &t.m, &t.dissipation]))
    })?;
    let f = unpack(&y, 4);
    let hn = water_height(&f[0], &ctx.bathy, &ctx.params)?;
    check_finite("m", &f[2])?;
    let phi = clip_enstrophy(f[2].iter().zip(&hn).map(|(m, h)| m / h).collect())?;
    let dissipated: f64 = f[3].iter().sum();
    Ok((EnstrophyState { hydro: HydroState { zeta: f[0].clone(), vbar: f[1].clone() }, phi }, dissipated))
}

/// SGN with the turbulent pressure eps mu (1/h) d_x(h^3 phi) and
/// conservative transport of h phi.
pub fn sgn_vorticity_step(state: &EnstrophyState, ctx: &SystemContext, dt: f64) -> Result<EnstrophyState> {
    Ok(enstrophy_step(state, ctx, dt, None)?.0)
}

/// SGN-vorticity with nu_T = cp h^2 sqrt(phi) and D = cr h^2 phi^(3/2) / 2.
pub fn wave_breaking_step(state: &EnstrophyState, ctx: &SystemContext, cp: f64, cr: f64, dt: f64) -> Result<EnstrophyState> {
    Ok(wave_breaking_step_with_dissipation(state, ctx, cp, cr, dt)?.0)
}

/// Also returns the energy dissipated during the step, the time integral
/// of sum D dx.
pub fn wave_breaking_step_with_dissipation(
    state: &EnstrophyState,
    ctx: &SystemContext,
    cp: f64,
    cr: f64,
    dt: f64,
) -> Result<(EnstrophyState, f64)> {
    if !(cp >= 0.0 && cr >= 0.0) {
        return Err(crate::Error::InvalidParams(format!("closure constants must be >= 0 (cp = {cp}, cr = {cr})")));
    }
    enstrophy_step(state, ctx, dt, Some(Closure { cp, cr }))
}
