//! Finite-volume engine for the hyperbolic models: NSW, multi-layer NSW
//! and NSW with turbulent pressure.
//!
//! Works in scaled variables h = 1 + eps zeta - beta b, u = eps vbar,
//! q = h u, topography Z = beta b (gravity 1). Rusanov flux with
//! hydrostatic reconstruction; optional MUSCL/minmod with Heun.

use crate::error::{Error, Result};
use crate::grid::Boundary;
use crate::state::{check_depth, check_finite, EnstrophyState, HydroState, MultiLayerState};
use crate::system::{BoundaryCondition, SystemContext, SystemModelSpec};
use crate::timestep::check_dt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Primitive data of a ghost cell in model variables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GhostCell {
    pub zeta: f64,
    pub vbar: f64,
}

const NG: usize = 2;

/// Primitive fields extended by two ghost cells on each side.
struct Ext {
    h: Vec<f64>,
    z: Vec<f64>,
    u: Vec<Vec<f64>>,
    phi: Vec<f64>,
}

struct Model<'a> {
    l: &'a [f64],
    /// turbulent pressure weight eps^2 mu^(2 alpha); zero when absent
    kappa: f64,
    turbulent: bool,
}

/// Evolved quantities: zeta, layer discharges q_j, and s = h phi.
#[derive(Clone)]
struct Cons {
    zeta: Vec<f64>,
    q: Vec<Vec<f64>>,
    s: Vec<f64>,
}

impl Cons {
    fn axpy(&self, dt: f64, k: &Cons, eps: f64) -> Cons {
        Cons {
            zeta: self.zeta.iter().zip(&k.zeta).map(|(a, b)| a + dt * b / eps).collect(),
            q: self.q.iter().zip(&k.q).map(|(a, b)| a.iter().zip(b).map(|(a, b)| a + dt * b).collect()).collect(),
            s: self.s.iter().zip(&k.s).map(|(a, b)| a + dt * b).collect(),
        }
    }

    fn average(&self, other: &Cons) -> Cons {
        let avg = |a: &[f64], b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(a, b)| 0.5 * a + 0.5 * b).collect() };
        Cons {
            zeta: avg(&self.zeta, &other.zeta),
            q: self.q.iter().zip(&other.q).map(|(a, b)| avg(a, b)).collect(),
            s: avg(&self.s, &other.s),
        }
    }
}

fn minmod(a: f64, b: f64) -> f64 {
    if a * b <= 0.0 {
        0.0
    } else if a.abs() < b.abs() {
        a
    } else {
        b
    }
}

fn pressure(h: f64, phi: f64, kappa: f64) -> f64 {
    0.5 * h * h + kappa * h * h * h * phi
}

fn sound_speed(h: f64, phi: f64, kappa: f64) -> f64 {
    (h + 3.0 * kappa * h * h * phi).max(0.0).sqrt()
}

fn f_branch(h: f64, hk: f64) -> (f64, f64) {
    if h > hk {
        let g = (0.5 * (1.0 / h + 1.0 / hk)).sqrt();
        ((h - hk) * g, g - (h - hk) / (4.0 * g * h * h))
    } else {
        (2.0 * (h.sqrt() - hk.sqrt()), 1.0 / h.sqrt())
    }
}

/// Largest wave speed of the exact shallow water Riemann problem.
pub(crate) fn riemann_speed_bound(hl: f64, ul: f64, hr: f64, ur: f64) -> f64 {
    let (cl, cr) = (hl.sqrt(), hr.sqrt());
    let base = (ul.abs() + cl).max(ur.abs() + cr);
    if hl == hr && ul == ur {
        return base;
    }
    if hl <= 1e-12 || hr <= 1e-12 || ur - ul >= 2.0 * (cl + cr) {
        // dry side or vacuum in the fan
        return base.max(ul.abs() + 2.0 * cl).max(ur.abs() + 2.0 * cr);
    }
    let du = ur - ul;
    let mut h = (0.5 * (cl + cr) - 0.25 * du).max(1e-8).powi(2);
    for _ in 0..50 {
        let (fl, dl) = f_branch(h, hl);
        let (fr, dr) = f_branch(h, hr);
        let step = (fl + fr + du) / (dl + dr);
        let next = (h - step).max(0.5 * h);
        let done = (next - h).abs() <= 1e-14 * h;
        h = next;
        if done {
            break;
        }
    }
    let um = 0.5 * (ul + ur) + 0.5 * (f_branch(h, hr).0 - f_branch(h, hl).0);
    let cm = h.sqrt();
    // shock speed, or head and tail of the rarefaction fan
    let w1 = if h > hl { (ul - (0.5 * h * (h + hl) / hl).sqrt()).abs() } else { (ul - cl).abs().max((um - cm).abs()) };
    let w2 = if h > hr { (ur + (0.5 * h * (h + hr) / hr).sqrt()).abs() } else { (ur + cr).abs().max((um + cm).abs()) };
    base.max(w1).max(w2)
}

fn ghost_prim(
    bc: &BoundaryCondition,
    side: Side,
    h: f64,
    z: f64,
    u: &[f64],
    ubar: f64,
    t: f64,
    ctx: &SystemContext,
) -> Result<(f64, Vec<f64>)> {
    let eps = ctx.params.epsilon;
    match bc {
        BoundaryCondition::Wall => Ok((h, u.iter().map(|v| -v).collect())),
        BoundaryCondition::Generating { signal } => {
            let hg = 1.0 + eps * signal.at(t) - z;
            check_depth(&[hg], ctx.params.h_min)?;
            let cg = hg.sqrt();
            let ug = match side {
                Side::Left => 2.0 * (cg - 1.0) - (2.0 * (h.sqrt() - 1.0) - ubar),
                Side::Right => (2.0 * (h.sqrt() - 1.0) + ubar) - 2.0 * (cg - 1.0),
            };
            Ok((hg, vec![ug; u.len()]))
        }
        BoundaryCondition::TransparentNsw => {
            // the incoming invariant vanishes, the outgoing one is extrapolated
            let (s, ug) = match side {
                Side::Right => {
                    let rp = 2.0 * (h.sqrt() - 1.0) + ubar;
                    (1.0 + 0.25 * rp, 0.5 * rp)
                }
                Side::Left => {
                    let rm = 2.0 * (h.sqrt() - 1.0) - ubar;
                    (1.0 + 0.25 * rm, -0.5 * rm)
                }
            };
            let hg = s * s;
            check_depth(&[hg], ctx.params.h_min)?;
            Ok((hg, vec![ug; u.len()]))
        }
    }
}

fn extend(model: &Model, c: &Cons, ctx: &SystemContext, t: f64) -> Result<Ext> {
    let n = c.zeta.len();
    let eps = ctx.params.epsilon;
    let beta = ctx.params.beta;
    let nl = model.l.len();
    let z0: Vec<f64> = ctx.bathy.b.iter().map(|b| beta * b).collect();
    let h0: Vec<f64> = c.zeta.iter().zip(&z0).map(|(zeta, z)| 1.0 + eps * zeta - z).collect();
    check_depth(&h0, ctx.params.h_min)?;
    let u0: Vec<Vec<f64>> = c.q.iter().map(|q| q.iter().zip(&h0).map(|(q, h)| q / h).collect()).collect();
    let phi0: Vec<f64> = if model.turbulent { c.s.iter().zip(&h0).map(|(s, h)| s / h).collect() } else { vec![0.0; n] };

    let m = n + 2 * NG;
    let mut e = Ext { h: vec![0.0; m], z: vec![0.0; m], u: vec![vec![0.0; m]; nl], phi: vec![0.0; m] };
    for i in 0..n {
        e.h[i + NG] = h0[i];
        e.z[i + NG] = z0[i];
        e.phi[i + NG] = phi0[i];
        for j in 0..nl {
            e.u[j][i + NG] = u0[j][i];
        }
    }
    let periodic = ctx.grid().boundary == Boundary::Periodic;
    for g in 0..NG {
        // ghost index, and its interior source for mirroring/wrapping
        for side in [Side::Left, Side::Right] {
            let (gi, src) = match (side, periodic) {
                (Side::Left, true) => (NG - 1 - g, n - 1 - g),
                (Side::Right, true) => (NG + n + g, g),
                (Side::Left, false) => (NG - 1 - g, g),
                (Side::Right, false) => (NG + n + g, n - 1 - g),
            };
            if periodic {
                e.h[gi] = h0[src];
                e.z[gi] = z0[src];
                e.phi[gi] = phi0[src];
                for j in 0..nl {
                    e.u[j][gi] = u0[j][src];
                }
                continue;
            }
            let (bc, edge) = match side {
                Side::Left => (&ctx.numerics.left, 0),
                Side::Right => (&ctx.numerics.right, n - 1),
            };
            // walls mirror cell by cell; the open conditions fill both ghosts alike
            let src = if *bc == BoundaryCondition::Wall { src } else { edge };
            let us: Vec<f64> = (0..nl).map(|j| u0[j][src]).collect();
            let ubar: f64 = (0..nl).map(|j| model.l[j] * us[j]).sum();
            let (hg, ug) = ghost_prim(bc, side, h0[src], z0[src], &us, ubar, t, ctx)?;
            e.h[gi] = hg;
            e.z[gi] = z0[src];
            e.phi[gi] = phi0[src];
            for j in 0..nl {
                e.u[j][gi] = ug[j];
            }
        }
    }
    Ok(e)
}

/// Face-extrapolated values (minus side, plus side) of cell `c`.
fn recon(v: &[f64], c: usize, muscl: bool) -> (f64, f64) {
    if !muscl {
        return (v[c], v[c]);
    }
    let s = minmod(v[c] - v[c - 1], v[c + 1] - v[c]);
    (v[c] - 0.5 * s, v[c] + 0.5 * s)
}

struct FaceState {
    h: f64,
    z: f64,
    u: Vec<f64>,
    phi: f64,
}

/// Values of cell `c` extrapolated to its left (`right_face = false`) or right face.
fn face_state(e: &Ext, c: usize, right_face: bool, muscl: bool) -> FaceState {
    let pick = |p: (f64, f64)| if right_face { p.1 } else { p.0 };
    let h = pick(recon(&e.h, c, muscl));
    if !muscl {
        return FaceState { h, z: e.z[c], u: e.u.iter().map(|u| u[c]).collect(), phi: e.phi[c] };
    }
    let eta: Vec<f64> = (c - 1..=c + 1).map(|k| e.h[k] + e.z[k]).collect();
    let eta_f = pick(recon(&eta, 1, true));
    FaceState {
        h,
        z: eta_f - h,
        u: e.u.iter().map(|u| pick(recon(u, c, true))).collect(),
        phi: pick(recon(&e.phi, c, true)),
    }
}

struct Tendency {
    dh: Vec<f64>,
    dq: Vec<Vec<f64>>,
    ds: Vec<f64>,
    /// numerical entropy flux at the n + 1 faces (single layer only)
    entropy_flux: Vec<f64>,
}

fn entropy_flux(h: f64, u: f64, z: f64) -> f64 {
    u * (0.5 * h * u * u + h * h + h * z)
}

fn entropy(h: f64, u: f64, z: f64) -> f64 {
    0.5 * h * u * u + 0.5 * h * h + h * z
}

fn tendency(model: &Model, c: &Cons, ctx: &SystemContext, t: f64) -> Result<Tendency> {
    let n = c.zeta.len();
    let nl = model.l.len();
    let muscl = ctx.numerics.muscl;
    let dx = ctx.grid().dx;
    let kappa = model.kappa;
    let e = extend(model, c, ctx, t)?;
    let mut out = Tendency {
        dh: vec![0.0; n],
        dq: vec![vec![0.0; n]; nl],
        ds: vec![0.0; n],
        entropy_flux: vec![0.0; n + 1],
    };
    // face fluxes seen from the left cell (fl_*) and from the right cell (fr_*)
    let mut f_h = vec![0.0; n + 1];
    let mut f_s = vec![0.0; n + 1];
    let mut fl_q = vec![vec![0.0; n + 1]; nl];
    let mut fr_q = vec![vec![0.0; n + 1]; nl];
    let mut h_minus = vec![0.0; n + 1];
    let mut h_plus = vec![0.0; n + 1];
    let mut z_minus = vec![0.0; n + 1];
    let mut z_plus = vec![0.0; n + 1];
    for f in 0..=n {
        let (cl, cr) = (NG - 1 + f, NG + f);
        let left = face_state(&e, cl, true, muscl);
        let right = face_state(&e, cr, false, muscl);
        let zs = left.z.max(right.z);
        let hl = (left.h + left.z - zs).max(0.0);
        let hr = (right.h + right.z - zs).max(0.0);
        let ubl: f64 = (0..nl).map(|j| model.l[j] * left.u[j]).sum();
        let ubr: f64 = (0..nl).map(|j| model.l[j] * right.u[j]).sum();
        let umax_l = left.u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let umax_r = right.u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let a = riemann_speed_bound(hl, ubl, hr, ubr)
            .max(umax_l + sound_speed(hl, left.phi, kappa))
            .max(umax_r + sound_speed(hr, right.phi, kappa));
        let pl = pressure(hl, left.phi, kappa);
        let pr = pressure(hr, right.phi, kappa);
        f_h[f] = 0.5 * (hl * ubl + hr * ubr) - 0.5 * a * (hr - hl);
        for j in 0..nl {
            let (ql, qr) = (hl * left.u[j], hr * right.u[j]);
            let num = 0.5 * ((ql * ubl + pl) + (qr * ubr + pr)) - 0.5 * a * (qr - ql);
            fl_q[j][f] = num - pl + pressure(left.h, left.phi, kappa);
            fr_q[j][f] = num - pr + pressure(right.h, right.phi, kappa);
        }
        if model.turbulent {
            let (sl, sr) = (hl * left.phi, hr * right.phi);
            f_s[f] = 0.5 * (sl * ubl + sr * ubr) - 0.5 * a * (sr - sl);
        }
        if nl == 1 && !model.turbulent {
            let gl = entropy_flux(hl, ubl, zs);
            let gr = entropy_flux(hr, ubr, zs);
            out.entropy_flux[f] = 0.5 * (gl + gr) - 0.5 * a * (entropy(hr, ubr, zs) - entropy(hl, ubl, zs));
        }
        h_minus[f] = left.h;
        h_plus[f] = right.h;
        z_minus[f] = left.z;
        z_plus[f] = right.z;
    }
    for i in 0..n {
        out.dh[i] = -(f_h[i + 1] - f_h[i]) / dx;
        if model.turbulent {
            out.ds[i] = -(f_s[i + 1] - f_s[i]) / dx;
        }
        let ci = NG + i;
        let source = if muscl {
            -0.5 * (h_plus[i] + h_minus[i + 1]) * (z_minus[i + 1] - z_plus[i]) / dx
        } else {
            0.0
        };
        let ubar: f64 = (0..nl).map(|j| model.l[j] * e.u[j][ci]).sum();
        for j in 0..nl {
            let mut d = -(fl_q[j][i + 1] - fr_q[j][i]) / dx + source;
            if nl > 1 {
                let ux = (e.u[j][ci + 1] - e.u[j][ci - 1]) / (2.0 * dx);
                d -= e.h[ci] * (e.u[j][ci] - ubar) * ux;
            }
            out.dq[j][i] = d;
        }
    }
    Ok(out)
}

fn max_speed(model: &Model, c: &Cons, ctx: &SystemContext) -> Result<f64> {
    let eps = ctx.params.epsilon;
    let mut lam = 0.0f64;
    for i in 0..c.zeta.len() {
        let h = 1.0 + eps * c.zeta[i] - ctx.params.beta * ctx.bathy.b[i];
        if !(h >= ctx.params.h_min) {
            return Err(Error::DepthViolation { cell: i, depth: h, h_min: ctx.params.h_min });
        }
        let phi = if model.turbulent { c.s[i] / h } else { 0.0 };
        let um = c.q.iter().fold(0.0f64, |m, q| m.max((q[i] / h).abs()));
        lam = lam.max(um + sound_speed(h, phi, model.kappa));
    }
    Ok(lam)
}

struct StepOutput {
    cons: Cons,
    entropy_residual: Vec<f64>,
}

fn advance(model: &Model, c: &Cons, ctx: &SystemContext, t: f64, dt: f64) -> Result<StepOutput> {
    let eps = ctx.params.epsilon;
    if !(eps > 0.0) {
        return Err(Error::InvalidParams("finite-volume models need eps > 0".into()));
    }
    ctx.grid().check_len(&c.zeta)?;
    let lam = max_speed(model, c, ctx)?;
    check_dt(dt, ctx.numerics.cfl * ctx.grid().dx / lam)?;
    let k0 = tendency(model, c, ctx, t)?;
    let c1 = c.axpy(dt, &Cons { zeta: k0.dh.clone(), q: k0.dq.clone(), s: k0.ds.clone() }, eps);
    let (next, gflux) = if ctx.numerics.muscl {
        let k1 = tendency(model, &c1, ctx, t + dt)?;
        let c2 = c1.axpy(dt, &Cons { zeta: k1.dh, q: k1.dq, s: k1.ds }, eps);
        let g: Vec<f64> = k0.entropy_flux.iter().zip(&k1.entropy_flux).map(|(a, b)| 0.5 * (a + b)).collect();
        (c.average(&c2), g)
    } else {
        (c1, k0.entropy_flux)
    };
    check_finite("zeta", &next.zeta)?;
    for q in &next.q {
        check_finite("discharge", q)?;
    }
    let hn: Vec<f64> = next
        .zeta
        .iter()
        .zip(&ctx.bathy.b)
        .map(|(z, b)| 1.0 + eps * z - ctx.params.beta * b)
        .collect();
    check_depth(&hn, ctx.params.h_min)?;

    let mut entropy_residual = Vec::new();
    if model.l.len() == 1 && !model.turbulent {
        let dx = ctx.grid().dx;
        let n = c.zeta.len();
        entropy_residual = (0..n)
            .map(|i| {
                let z = ctx.params.beta * ctx.bathy.b[i];
                let h0 = 1.0 + eps * c.zeta[i] - z;
                let e0 = entropy(h0, c.q[0][i] / h0, z);
                let e1 = entropy(hn[i], next.q[0][i] / hn[i], z);
                // mass flux terms cancel exactly; what is left is O(eps^2)
                ((e1 - e0) / dt + (gflux[i + 1] - gflux[i]) / dx) / (eps * eps)
            })
            .collect();
    }
    Ok(StepOutput { cons: next, entropy_residual })
}

fn hydro_to_cons(state: &HydroState, ctx: &SystemContext) -> Result<Cons> {
    let h = state.height(&ctx.bathy, &ctx.params)?;
    let eps = ctx.params.epsilon;
    Ok(Cons {
        zeta: state.zeta.clone(),
        q: vec![h.iter().zip(&state.vbar).map(|(h, v)| h * eps * v).collect()],
        s: vec![0.0; h.len()],
    })
}

fn velocity(q: &[f64], zeta: &[f64], ctx: &SystemContext) -> Vec<f64> {
    let eps = ctx.params.epsilon;
    q.iter()
        .zip(zeta)
        .zip(&ctx.bathy.b)
        .map(|((q, z), b)| q / ((1.0 + eps * z - ctx.params.beta * b) * eps))
        .collect()
}

const SINGLE: [f64; 1] = [1.0];

/// One finite-volume NSW step from time t.
pub fn nsw_step(state: &HydroState, ctx: &SystemContext, t: f64, dt: f64) -> Result<HydroState> {
    Ok(nsw_step_with_residual(state, ctx, t, dt)?.0)
}

/// NSW step plus the cell-wise discrete energy balance
/// (e^{n+1} - e^n)/dt + (G_{i+1/2} - G_{i-1/2})/dx in model energy units;
/// negative values are dissipation.
pub fn nsw_step_with_residual(state: &HydroState, ctx: &SystemContext, t: f64, dt: f64) -> Result<(HydroState, Vec<f64>)> {
    let model = Model { l: &SINGLE, kappa: 0.0, turbulent: false };
    let c = hydro_to_cons(state, ctx)?;
    let out = advance(&model, &c, ctx, t, dt)?;
    let vbar = velocity(&out.cons.q[0], &out.cons.zeta, ctx);
    Ok((HydroState { zeta: out.cons.zeta, vbar }, out.entropy_residual))
}

pub fn multilayer_nsw_step(state: &MultiLayerState, ctx: &SystemContext, t: f64, dt: f64) -> Result<MultiLayerState> {
    let model = Model { l: &state.layer_fractions, kappa: 0.0, turbulent: false };
    let hydro = HydroState { zeta: state.zeta.clone(), vbar: vec![0.0; state.zeta.len()] };
    let h = hydro.height(&ctx.bathy, &ctx.params)?;
    let eps = ctx.params.epsilon;
    let c = Cons {
        zeta: state.zeta.clone(),
        q: state
            .layer_velocities
            .iter()
            .map(|v| h.iter().zip(v).map(|(h, v)| h * eps * v).collect())
            .collect(),
        s: vec![0.0; h.len()],
    };
    let out = advance(&model, &c, ctx, t, dt)?;
    let layer_velocities = out.cons.q.iter().map(|q| velocity(q, &out.cons.zeta, ctx)).collect();
    Ok(MultiLayerState { zeta: out.cons.zeta, layer_fractions: state.layer_fractions.clone(), layer_velocities })
}

/// NSW with the turbulent pressure eps mu^(2 alpha) (1/h) d_x(h^3 phi) and
/// conservative enstrophy transport.
pub fn nsw_turbulent_step(state: &EnstrophyState, ctx: &SystemContext, alpha: f64, t: f64, dt: f64) -> Result<EnstrophyState> {
    ctx.require_flat("nsw_turbulent_step")?;
    if !(alpha > 0.0 && alpha <= 0.5) {
        return Err(Error::InvalidParams(format!("alpha = {alpha} outside (0, 1/2]")));
    }
    let eps = ctx.params.epsilon;
    let model = Model { l: &SINGLE, kappa: eps * eps * ctx.params.mu.powf(2.0 * alpha), turbulent: true };
    let mut c = hydro_to_cons(&state.hydro, ctx)?;
    let h = state.hydro.height(&ctx.bathy, &ctx.params)?;
    c.s = h.iter().zip(&state.phi).map(|(h, p)| h * p).collect();
    let out = advance(&model, &c, ctx, t, dt)?;
    let vbar = velocity(&out.cons.q[0], &out.cons.zeta, ctx);
    let hn: Vec<f64> = out.cons.zeta.iter().zip(&ctx.bathy.b).map(|(z, b)| 1.0 + eps * z - ctx.params.beta * b).collect();
    let phi = clip_enstrophy(out.cons.s.iter().zip(&hn).map(|(s, h)| s / h).collect())?;
    Ok(EnstrophyState { hydro: HydroState { zeta: out.cons.zeta, vbar }, phi })
}

/// Remove round-off negatives; anything larger is an error.
pub(crate) fn clip_enstrophy(mut phi: Vec<f64>) -> Result<Vec<f64>> {
    check_finite("phi", &phi)?;
    let scale = phi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for (cell, p) in phi.iter_mut().enumerate() {
        if *p < 0.0 {
            if *p < -1e-10 * (1.0 + scale) {
                return Err(Error::NegativeEnstrophy { cell, value: *p });
            }
            *p = 0.0;
        }
    }
    Ok(phi)
}

/// Largest stable finite-volume step: cfl dx / max(max_j |u_j| + c).
pub fn fv_max_dt(spec: &SystemModelSpec, zeta: &[f64], velocities: &[&[f64]], phi: Option<&[f64]>, ctx: &SystemContext) -> Result<f64> {
    let eps = ctx.params.epsilon;
    let kappa = match spec {
        SystemModelSpec::NswTurbulent { alpha, .. } => eps * eps * ctx.params.mu.powf(2.0 * alpha),
        _ => 0.0,
    };
    let mut lam = 0.0f64;
    for i in 0..zeta.len() {
        let h = 1.0 + eps * zeta[i] - ctx.params.beta * ctx.bathy.b[i];
        if !(h >= ctx.params.h_min) {
            return Err(Error::DepthViolation { cell: i, depth: h, h_min: ctx.params.h_min });
        }
        let p = phi.map(|p| p[i]).unwrap_or(0.0);
        let um = velocities.iter().fold(0.0f64, |m, v| m.max((eps * v[i]).abs()));
        lam = lam.max(um + sound_speed(h, p, kappa));
    }
    Ok(ctx.numerics.cfl * ctx.grid().dx / lam)
}

/// Ghost-cell data enforcing the condition at one end of a bounded grid.
pub fn boundary_apply(
    spec: &SystemModelSpec,
    state: &HydroState,
    ctx: &SystemContext,
    bc: &BoundaryCondition,
    side: Side,
    t: f64,
) -> Result<[GhostCell; 2]> {
    let hyperbolic = matches!(spec, SystemModelSpec::Nsw | SystemModelSpec::MultiLayerNsw { .. } | SystemModelSpec::NswTurbulent { boussinesq: false, .. });
    if !hyperbolic && *bc != BoundaryCondition::Wall {
        return Err(Error::Unsupported(format!(
            "{}: generating and transparent conditions are not defined for dispersive models",
            spec.name()
        )));
    }
    if matches!(bc, BoundaryCondition::TransparentNsw) && !matches!(spec, SystemModelSpec::Nsw) {
        return Err(Error::Unsupported("the transparent condition is only defined for NSW".into()));
    }
    if ctx.grid().boundary == Boundary::Periodic {
        return Err(Error::BoundaryUnsupported("periodic grids have no boundary".into()));
    }
    let eps = ctx.params.epsilon;
    if !(eps > 0.0) {
        return Err(Error::InvalidParams("ghost construction needs eps > 0".into()));
    }
    let h = state.height(&ctx.bathy, &ctx.params)?;
    let n = h.len();
    let mut out = [GhostCell { zeta: 0.0, vbar: 0.0 }; 2];
    for (g, cell) in out.iter_mut().enumerate() {
        let src = match (side, *bc == BoundaryCondition::Wall) {
            (Side::Left, true) => g,
            (Side::Right, true) => n - 1 - g,
            (Side::Left, false) => 0,
            (Side::Right, false) => n - 1,
        };
        let z = ctx.params.beta * ctx.bathy.b[src];
        let u = eps * state.vbar[src];
        let (hg, ug) = ghost_prim(bc, side, h[src], z, &[u], u, t, ctx)?;
        *cell = GhostCell { zeta: (hg + z - 1.0) / eps, vbar: ug[0] / eps };
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Bathymetry, Grid1D};
    use crate::params::SimulationParams;
    use crate::system::{Numerics, Signal};

    fn ctx(n: usize, l: f64, boundary: Boundary, eps: f64, beta: f64, numerics: Numerics) -> SystemContext {
        let g = Grid1D::new(n, l, boundary).unwrap();
        let b = if beta > 0.0 { Bathymetry::gaussian(&g, 1.0, 1.0, l / 2.0).unwrap() } else { Bathymetry::flat(n) };
        SystemContext::new(&g, b, SimulationParams::new(eps, 0.1, beta).unwrap(), numerics).unwrap()
    }

    #[test]
    fn riemann_bound_covers_shock() {
        let a = riemann_speed_bound(1.1, 0.0, 1.0, 0.0);
        // independent check of the middle state: both branch functions balance
        let equal = riemann_speed_bound(1.0, 0.2, 1.0, 0.2);
        assert_eq!(equal, 1.2);
        // symmetric two-shock collision: the shocks are slower than the incoming states
        let b = riemann_speed_bound(1.0, 1.0, 1.0, -1.0);
        assert_eq!(b, 2.0);
        // dam break middle state against the textbook value (h_m = 1.0494..., from the
        // shock/rarefaction matching condition solved by bisection)
        let f = |h: f64| 2.0 * (h.sqrt() - 1.1f64.sqrt()) + (h - 1.0) * (0.5 * (1.0 / h + 1.0)).sqrt();
        let (mut lo, mut hi) = (1.0, 1.1);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                hi = mid
            } else {
                lo = mid
            }
        }
        let s2 = (0.5 * lo * (lo + 1.0)).sqrt();
        assert!(s2 > 1.0 && s2 < 1.1f64.sqrt());
        assert_eq!(a, 1.1f64.sqrt());
        // fast right state: the shock into it is the fastest wave
        let c = riemann_speed_bound(2.0, 0.0, 1.0, 0.0);
        let f = |h: f64| 2.0 * (h.sqrt() - 2.0f64.sqrt()) + (h - 1.0) * (0.5 * (1.0 / h + 1.0)).sqrt();
        let (mut lo, mut hi) = (1.0, 2.0);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                hi = mid
            } else {
                lo = mid
            }
        }
        let s2 = (0.5 * lo * (lo + 1.0)).sqrt();
        assert!(c >= s2 - 1e-12 && c >= 2.0f64.sqrt());
    }

    #[test]
    fn lake_at_rest_bump() {
        for muscl in [false, true] {
            for boundary in [Boundary::Periodic, Boundary::Wall] {
                let c = ctx(64, 10.0, boundary, 0.2, 0.3, Numerics { muscl, ..Numerics::default() });
                let mut s = HydroState::rest(64);
                let dt = 0.5 * fv_max_dt(&SystemModelSpec::Nsw, &s.zeta, &[&s.vbar], None, &c).unwrap();
                for k in 0..50 {
                    s = nsw_step(&s, &c, k as f64 * dt, dt).unwrap();
                }
                assert!(s.zeta.iter().chain(&s.vbar).all(|v| v.abs() < 1e-12), "muscl={muscl} {boundary:?}");
            }
        }
    }

    #[test]
    fn cfl_guard() {
        let c = ctx(32, 10.0, Boundary::Periodic, 0.2, 0.0, Numerics::default());
        let s = HydroState { zeta: vec![0.1; 32], vbar: vec![0.5; 32] };
        let lim = fv_max_dt(&SystemModelSpec::Nsw, &s.zeta, &[&s.vbar], None, &c).unwrap();
        assert!(matches!(nsw_step(&s, &c, 0.0, 1.5 * lim), Err(Error::CflViolation { .. })));
        assert!(nsw_step(&s, &c, 0.0, lim).is_ok());
    }

    #[test]
    fn single_layer_matches_nsw_bitwise() {
        let c = ctx(64, 10.0, Boundary::Wall, 0.3, 0.2, Numerics { muscl: true, ..Numerics::default() });
        let x = c.grid().centers();
        let s = HydroState { zeta: x.iter().map(|x| 0.3 * (-(x - 3.0f64).powi(2)).exp()).collect(), vbar: vec![0.0; 64] };
        let m = MultiLayerState::uniform(&s, vec![1.0], &c.bathy, &c.params).unwrap();
        let dt = 0.02;
        let a = nsw_step(&s, &c, 0.0, dt).unwrap();
        let b = multilayer_nsw_step(&m, &c, 0.0, dt).unwrap();
        assert_eq!(a.zeta, b.zeta);
        assert_eq!(a.vbar, b.layer_velocities[0]);
    }

    #[test]
    fn generating_at_rest_stays_at_rest() {
        let numerics = Numerics { left: BoundaryCondition::Generating { signal: Signal::Zero }, ..Numerics::default() };
        let c = ctx(32, 10.0, Boundary::Wall, 0.2, 0.0, numerics);
        let mut s = HydroState::rest(32);
        for k in 0..20 {
            s = nsw_step(&s, &c, k as f64 * 0.05, 0.05).unwrap();
        }
        assert!(s.zeta.iter().chain(&s.vbar).all(|v| *v == 0.0));
    }

    #[test]
    fn ghost_values() {
        let c = ctx(16, 10.0, Boundary::Wall, 0.5, 0.0, Numerics::default());
        let s = HydroState { zeta: vec![0.4; 16], vbar: vec![0.3; 16] };
        let w = boundary_apply(&SystemModelSpec::Nsw, &s, &c, &BoundaryCondition::Wall, Side::Right, 0.0).unwrap();
        assert!((w[0].zeta - 0.4).abs() < 1e-14 && (w[0].vbar + 0.3).abs() < 1e-14);
        // transparent ghost carries R_- = 0 and the interior R_+
        let tr = boundary_apply(&SystemModelSpec::Nsw, &s, &c, &BoundaryCondition::TransparentNsw, Side::Right, 0.0).unwrap();
        let hg = 1.0 + 0.5 * tr[0].zeta;
        let rm = 2.0 * (hg.sqrt() - 1.0) - 0.5 * tr[0].vbar;
        let rp = 2.0 * (hg.sqrt() - 1.0) + 0.5 * tr[0].vbar;
        let rp_in = 2.0 * (1.2f64.sqrt() - 1.0) + 0.15;
        assert!(rm.abs() < 1e-14 && (rp - rp_in).abs() < 1e-14);
        let gen = BoundaryCondition::Generating { signal: Signal::Constant { value: 0.2 } };
        let gc = boundary_apply(&SystemModelSpec::Nsw, &s, &c, &gen, Side::Left, 0.0).unwrap();
        assert!((gc[0].zeta - 0.2).abs() < 1e-14);
        assert!(matches!(
            boundary_apply(&SystemModelSpec::Sgn, &s, &c, &gen, Side::Left, 0.0),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn mass_conserved_periodic() {
        let c = ctx(128, 20.0, Boundary::Periodic, 0.5, 0.0, Numerics { muscl: true, ..Numerics::default() });
        let x = c.grid().centers();
        let mut s = HydroState { zeta: x.iter().map(|x| 0.5 * (-(x - 10.0f64).powi(2)).exp()).collect(), vbar: vec![0.0; 128] };
        let m0: f64 = s.zeta.iter().sum();
        for k in 0..100 {
            s = nsw_step(&s, &c, k as f64 * 0.02, 0.02).unwrap();
        }
        let m1: f64 = s.zeta.iter().sum();
        assert!((m1 - m0).abs() < 1e-12);
    }

    #[test]
    fn identical_layers_stay_identical() {
        let c = ctx(64, 10.0, Boundary::Wall, 0.3, 0.2, Numerics::default());
        let x = c.grid().centers();
        let s = HydroState { zeta: x.iter().map(|x| 0.2 * (-(x - 3.0f64).powi(2)).exp()).collect(), vbar: vec![0.0; 64] };
        let mut m = MultiLayerState::uniform(&s, vec![0.2, 0.3, 0.5], &c.bathy, &c.params).unwrap();
        for k in 0..40 {
            m = multilayer_nsw_step(&m, &c, k as f64 * 0.02, 0.02).unwrap();
        }
        for j in 1..3 {
            let d = m.layer_velocities[j].iter().zip(&m.layer_velocities[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(d < 1e-12);
        }
    }

    #[test]
    fn turbulent_without_enstrophy_is_nsw() {
        let c = ctx(64, 10.0, Boundary::Periodic, 0.3, 0.0, Numerics::default());
        let x = c.grid().centers();
        let s = HydroState { zeta: x.iter().map(|x| 0.2 * (-(x - 3.0f64).powi(2)).exp()).collect(), vbar: vec![0.0; 64] };
        let e = EnstrophyState::new(s.clone(), vec![0.0; 64]).unwrap();
        let a = nsw_step(&s, &c, 0.0, 0.02).unwrap();
        let b = nsw_turbulent_step(&e, &c, 0.5, 0.0, 0.02).unwrap();
        assert_eq!(a, b.hydro);
        assert!(b.phi.iter().all(|p| *p == 0.0));
    }

    #[test]
    fn turbulent_momentum_conserved() {
        let c = ctx(64, 10.0, Boundary::Periodic, 0.3, 0.0, Numerics::default());
        let x = c.grid().centers();
        let s = HydroState { zeta: x.iter().map(|x| 0.2 * (-(x - 3.0f64).powi(2)).exp()).collect(), vbar: vec![0.1; 64] };
        let mut e = EnstrophyState::new(s, x.iter().map(|x| 0.5 + 0.4 * x.sin()).collect()).unwrap();
        let mom = |e: &EnstrophyState| -> f64 {
            let h = e.hydro.height(&c.bathy, &c.params).unwrap();
            h.iter().zip(&e.hydro.vbar).map(|(h, v)| h * v).sum()
        };
        let m0 = mom(&e);
        let hphi0: f64 = e.hydro.height(&c.bathy, &c.params).unwrap().iter().zip(&e.phi).map(|(h, p)| h * p).sum();
        for k in 0..50 {
            e = nsw_turbulent_step(&e, &c, 0.5, k as f64 * 0.02, 0.02).unwrap();
        }
        let hphi1: f64 = e.hydro.height(&c.bathy, &c.params).unwrap().iter().zip(&e.phi).map(|(h, p)| h * p).sum();
        assert!((mom(&e) - m0).abs() < 1e-10 * (1.0 + m0.abs()));
        assert!((hphi1 - hphi0).abs() < 1e-10 * hphi0);
    }
}
