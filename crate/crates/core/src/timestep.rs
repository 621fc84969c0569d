//! Classical explicit Runge-Kutta stepping on packed field vectors.

use crate::error::{Error, Result};

pub fn rk4(y: &[f64], dt: f64, f: impl Fn(&[f64]) -> Result<Vec<f64>>) -> Result<Vec<f64>> {
    let n = y.len();
    let stage = |k: &[f64], c: f64| -> Vec<f64> { (0..n).map(|i| y[i] + c * dt * k[i]).collect() };
    let k1 = f(y)?;
    let k2 = f(&stage(&k1, 0.5))?;
    let k3 = f(&stage(&k2, 0.5))?;
    let k4 = f(&stage(&k3, 1.0))?;
    let out: Vec<f64> = (0..n).map(|i| y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])).collect();
    if let Some(i) = out.iter().position(|v| !v.is_finite()) {
        return Err(Error::StabilityViolation(format!("component {i} non-finite after RK4 step")));
    }
    Ok(out)
}

/// Concatenate equally long fields.
pub fn pack(fields: &[&[f64]]) -> Vec<f64> {
    fields.iter().flat_map(|f| f.iter().copied()).collect()
}

/// Split a packed vector into `m` fields.
pub fn unpack(y: &[f64], m: usize) -> Vec<Vec<f64>> {
    let n = y.len() / m;
    (0..m).map(|j| y[j * n..(j + 1) * n].to_vec()).collect()
}

pub fn check_dt(dt: f64, limit: f64) -> Result<()> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidParams(format!("time step {dt} must be positive")));
    }
    if dt > limit * (1.0 + 1e-9) {
        return Err(Error::CflViolation { dt, limit });
    }
    Ok(())
}
