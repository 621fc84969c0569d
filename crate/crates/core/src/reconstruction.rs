//! Vertical structure of velocity and non-hydrostatic pressure rebuilt
//! from (zeta, vbar), truncated at O(mu^2).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fd::Parity;
use crate::grid::{Bathymetry, Grid1D};
use crate::operators::Ops;
use crate::params::SimulationParams;
use crate::state::water_height;

/// Samples of one quantity along a water column.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerticalProfile {
    pub z_samples: Vec<f64>,
    pub values: Vec<f64>,
}

const GL_NODES: [f64; 8] = [
    -0.960_289_856_497_536_2,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_2,
];
const GL_WEIGHTS: [f64; 8] = [
    0.101_228_536_290_376_26,
    0.222_381_034_453_374_47,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362,
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_47,
    0.101_228_536_290_376_26,
];

/// Mean of f over [bottom, surface], 8-point Gauss-Legendre.
pub fn column_mean(f: impl Fn(f64) -> f64, bottom: f64, surface: f64) -> f64 {
    let (m, r) = (0.5 * (surface + bottom), 0.5 * (surface - bottom));
    0.5 * GL_NODES.iter().zip(&GL_WEIGHTS).map(|(x, w)| w * f(m + r * x)).sum::<f64>()
}

/// 8 Gauss-Legendre heights of the column, increasing.
pub fn column_nodes(bottom: f64, surface: f64) -> Vec<f64> {
    let (m, r) = (0.5 * (surface + bottom), 0.5 * (surface - bottom));
    GL_NODES.iter().map(|x| m + r * x).collect()
}

/// Horizontal derivatives of the averaged fields at one column.
struct Column {
    h: f64,
    zeta: f64,
    b: f64,
    bx: f64,
    v: f64,
    vx: f64,
    vxx: f64,
    /// (b_x v)_x
    bxv_x: f64,
}

fn column(zeta: &[f64], vbar: &[f64], bathy: &Bathymetry, params: &SimulationParams, grid: &Grid1D, i: usize) -> Result<(Column, Ops)> {
    grid.check_len(zeta)?;
    grid.check_len(vbar)?;
    if i >= grid.n_cells {
        return Err(Error::InvalidGrid(format!("column {i} outside grid of {} cells", grid.n_cells)));
    }
    let h = water_height(zeta, bathy, params)?;
    let ops = Ops::new(grid)?;
    let vx = ops.dx(vbar, Parity::Odd);
    let vxx = ops.dxx(vbar, Parity::Odd);
    let bx = ops.dx(&bathy.b, Parity::Even);
    let bxv: Vec<f64> = bx.iter().zip(vbar).map(|(a, b)| a * b).collect();
    let bxv_x = ops.dx(&bxv, Parity::Even);
    Ok((
        Column { h: h[i], zeta: zeta[i], b: bathy.b[i], bx: bx[i], v: vbar[i], vx: vx[i], vxx: vxx[i], bxv_x: bxv_x[i] },
        ops,
    ))
}

fn check_samples(z: &[f64], bottom: f64, surface: f64) -> Result<()> {
    let tol = 1e-12 * (1.0 + surface.abs() + bottom.abs());
    for (k, &zk) in z.iter().enumerate() {
        if !(zk >= bottom - tol && zk <= surface + tol) {
            return Err(Error::OutOfColumn { z: zk, bottom, surface });
        }
        if k > 0 && !(zk > z[k - 1]) {
            return Err(Error::InvalidParams("z samples must be strictly increasing".into()));
        }
    }
    Ok(())
}

fn bounds(c: &Column, p: &SimulationParams) -> (f64, f64) {
    (-1.0 + p.beta * c.b, p.epsilon * c.zeta)
}

fn irrotational(c: &Column, p: &SimulationParams, z: f64) -> (f64, f64) {
    let (eps, mu, beta) = (p.epsilon, p.mu, p.beta);
    let s = 1.0 + z - beta * c.b;
    let v = c.v - 0.5 * mu * (s * s - c.h * c.h / 3.0) * c.vxx
        + mu * beta * (z - eps * c.zeta + 0.5 * c.h) * (c.bx * c.vx + c.bxv_x);
    let w = -mu * (s * c.vx - beta * c.bx * c.v);
    (v, w)
}

/// Horizontal and vertical velocity at column `x_index`.
pub fn velocity_profile(
    zeta: &[f64],
    vbar: &[f64],
    bathy: &Bathymetry,
    params: &SimulationParams,
    grid: &Grid1D,
    x_index: usize,
    z_samples: &[f64],
) -> Result<(VerticalProfile, VerticalProfile)> {
    let (c, _) = column(zeta, vbar, bathy, params, grid, x_index)?;
    let (bottom, surface) = bounds(&c, params);
    check_samples(z_samples, bottom, surface)?;
    let (v, w): (Vec<f64>, Vec<f64>) = z_samples.iter().map(|&z| irrotational(&c, params, z)).unzip();
    Ok((
        VerticalProfile { z_samples: z_samples.to_vec(), values: v },
        VerticalProfile { z_samples: z_samples.to_vec(), values: w },
    ))
}

/// P_NH / eps at column `x_index`; `dt_vbar` is the model's own tendency of vbar.
#[allow(clippy::too_many_arguments)]
pub fn pressure_nh_profile(
    zeta: &[f64],
    vbar: &[f64],
    dt_vbar: &[f64],
    bathy: &Bathymetry,
    params: &SimulationParams,
    grid: &Grid1D,
    x_index: usize,
    z_samples: &[f64],
) -> Result<VerticalProfile> {
    let (c, ops) = column(zeta, vbar, bathy, params, grid, x_index)?;
    grid.check_len(dt_vbar)?;
    let (bottom, surface) = bounds(&c, params);
    check_samples(z_samples, bottom, surface)?;
    let vt = dt_vbar[x_index];
    let vxt = ops.dx(dt_vbar, Parity::Odd)[x_index];
    let (eps, mu, beta) = (params.epsilon, params.mu, params.beta);
    let gamma = vxt + eps * c.v * c.vxx - eps * c.vx * c.vx;
    let topo = beta * (c.bx * vt + eps * c.v * c.bxv_x);
    let values = z_samples
        .iter()
        .map(|&z| {
            let s = 1.0 + z - beta * c.b;
            -mu * (0.5 * c.h * c.h - 0.5 * s * s) * gamma + mu * (eps * c.zeta - z) * c.h * topo
        })
        .collect();
    Ok(VerticalProfile { z_samples: z_samples.to_vec(), values })
}

/// Irrotational profile plus sqrt(mu) V*_sh, where `vsh_star(z)` is the
/// zero-mean shear fluctuation of this column.
#[allow(clippy::too_many_arguments)]
pub fn velocity_profile_rotational(
    zeta: &[f64],
    vbar: &[f64],
    vsh_star: impl Fn(f64) -> f64,
    bathy: &Bathymetry,
    params: &SimulationParams,
    grid: &Grid1D,
    x_index: usize,
    z_samples: &[f64],
) -> Result<(VerticalProfile, VerticalProfile)> {
    let (c, _) = column(zeta, vbar, bathy, params, grid, x_index)?;
    let (bottom, surface) = bounds(&c, params);
    let mean = column_mean(&vsh_star, bottom, surface);
    if mean.abs() > 1e-10 {
        return Err(Error::NotZeroMean { mean });
    }
    let (mut v, w) = velocity_profile(zeta, vbar, bathy, params, grid, x_index, z_samples)?;
    let sm = params.mu.sqrt();
    for (val, &z) in v.values.iter_mut().zip(z_samples) {
        *val += sm * vsh_star(z);
    }
    Ok((v, w))
}

/// Starred shear profile of a constant vorticity omega0:
/// omega0 (surface - z) minus its column mean omega0 h / 2.
pub fn linear_shear_star(omega0: f64, bottom: f64, surface: f64) -> impl Fn(f64) -> f64 {
    let h = surface - bottom;
    move |z| omega0 * (surface - z) - 0.5 * omega0 * h
}
