//! Exact solution of the linearized water waves equations
//! zeta_t = omega(D)^2 psi, psi_t = -zeta.

use rustfft::num_complex::Complex64;

use crate::dispersion::cww2;
use crate::error::Result;
use crate::grid::Grid1D;
use crate::params::SimulationParams;
use crate::spectral::SpectralOps;

/// omega(k) = |k| c_ww(k).
pub fn omega_ww(k: f64, mu: f64) -> f64 {
    k.abs() * cww2(k, mu).sqrt()
}

/// Rotate every Fourier mode by its own frequency over time t.
pub fn linear_reference_evolve(zeta0: &[f64], psi0: &[f64], params: &SimulationParams, grid: &Grid1D, t: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    grid.require_periodic("linear_reference_evolve")?;
    grid.check_len(zeta0)?;
    grid.check_len(psi0)?;
    linear_reference_with(&SpectralOps::new(grid)?, zeta0, psi0, params.mu, t)
}

pub fn linear_reference_with(ops: &SpectralOps, zeta0: &[f64], psi0: &[f64], mu: f64, t: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let z = ops.forward(zeta0);
    let p = ops.forward(psi0);
    let n = z.len();
    let mut zo = vec![Complex64::new(0.0, 0.0); n];
    let mut po = vec![Complex64::new(0.0, 0.0); n];
    for j in 0..n {
        let w = omega_ww(ops.wavenumbers()[j], mu);
        if w == 0.0 {
            zo[j] = z[j];
            po[j] = p[j] - z[j] * t;
        } else {
            let (s, c) = (w * t).sin_cos();
            zo[j] = z[j] * c + p[j] * (w * s);
            po[j] = p[j] * c - z[j] * (s / w);
        }
    }
    Ok((ops.inverse(zo), ops.inverse(po)))
}

/// Right-going mode: zeta = A cos(k x), psi = (A / omega) sin(k x).
pub fn right_going_mode(grid: &Grid1D, mu: f64, amp: f64, mode: usize) -> (Vec<f64>, Vec<f64>) {
    let k = 2.0 * std::f64::consts::PI * mode as f64 / grid.length;
    let w = omega_ww(k, mu);
    let x = grid.centers();
    (x.iter().map(|x| amp * (k * x).cos()).collect(), x.iter().map(|x| amp / w * (k * x).sin()).collect())
}

/// 1/2 sum (|zeta_k|^2 + omega^2 |psi_k|^2) / n, invariant of the flow.
pub fn oscillator_energy(ops: &SpectralOps, zeta: &[f64], psi: &[f64], mu: f64) -> f64 {
    let z = ops.forward(zeta);
    let p = ops.forward(psi);
    let n = z.len() as f64;
    (0..z.len())
        .map(|j| {
            let w = omega_ww(ops.wavenumbers()[j], mu);
            0.5 * (z[j].norm_sqr() + w * w * p[j].norm_sqr())
        })
        .sum::<f64>()
        / n
}
