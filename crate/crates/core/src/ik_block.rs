//! The coupled 2n x 2n system for the time derivatives of the
//! Isobe-Kakinuma potentials:
//!   dphi0 + mu h^2 dphi1                    = rhs0
//!   D2 dphi0 / 2 + (1 + mu h^2 D2 / 10) dphi1 = rhs1

use nalgebra::{DMatrix, DVector};
use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{gmres, norm};
use crate::spectral::SpectralOps;

pub const IK_SOLVE_TOL: f64 = 1e-12;

pub fn ik_apply(ops: &SpectralOps, h2: &[f64], mu: f64, x0: &[f64], x1: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = x0.len();
    let d0 = ops.dxx(x0);
    let d1 = ops.dxx(x1);
    let y0 = (0..n).map(|i| x0[i] + mu * h2[i] * x1[i]).collect();
    let y1 = (0..n).map(|i| 0.5 * d0[i] + x1[i] + mu * h2[i] / 10.0 * d1[i]).collect();
    (y0, y1)
}

fn split(v: &[f64]) -> (&[f64], &[f64]) {
    v.split_at(v.len() / 2)
}

/// Relative residual of a candidate solution.
pub fn ik_residual(ops: &SpectralOps, h: &[f64], mu: f64, rhs0: &[f64], rhs1: &[f64], x0: &[f64], x1: &[f64]) -> f64 {
    let h2: Vec<f64> = h.iter().map(|h| h * h).collect();
    let (y0, y1) = ik_apply(ops, &h2, mu, x0, x1);
    let r: Vec<f64> = y0.iter().zip(rhs0).chain(y1.iter().zip(rhs1)).map(|(a, b)| a - b).collect();
    let b: Vec<f64> = rhs0.iter().chain(rhs1).copied().collect();
    let bn = norm(&b);
    if bn == 0.0 {
        norm(&r)
    } else {
        norm(&r) / bn
    }
}

pub fn solve_ik_block(h: &[f64], mu: f64, ops: &SpectralOps, rhs0: &[f64], rhs1: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = ops.n();
    ops.grid().check_len(h)?;
    ops.grid().check_len(rhs0)?;
    ops.grid().check_len(rhs1)?;
    let h2: Vec<f64> = h.iter().map(|h| h * h).collect();
    let hbar2 = h2.iter().sum::<f64>() / n as f64;
    let apply = |v: &[f64]| {
        let (a, b) = split(v);
        let (mut y0, y1) = ik_apply(ops, &h2, mu, a, b);
        y0.extend(y1);
        y0
    };
    let precond = |v: &[f64]| {
        let (a, b) = split(v);
        let fa = ops.forward(a);
        let fb = ops.forward(b);
        let ks = ops.wavenumbers();
        let mut xa = vec![Complex64::new(0.0, 0.0); n];
        let mut xb = vec![Complex64::new(0.0, 0.0); n];
        for j in 0..n {
            let k2 = ks[j] * ks[j];
            let det = 1.0 + 0.4 * mu * hbar2 * k2;
            xa[j] = ((1.0 - mu * hbar2 * k2 / 10.0) * fa[j] - mu * hbar2 * fb[j]) / det;
            xb[j] = (0.5 * k2 * fa[j] + fb[j]) / det;
        }
        let mut out = ops.inverse(xa);
        out.extend(ops.inverse(xb));
        out
    };
    let b: Vec<f64> = rhs0.iter().chain(rhs1).copied().collect();
    let sol = match gmres(apply, precond, &b, IK_SOLVE_TOL, 40, 50) {
        Ok(x) => x,
        Err(_) => dense_fallback(ops, &h2, mu, &b)?,
    };
    let (a, c) = split(&sol);
    Ok((a.to_vec(), c.to_vec()))
}

fn dense_fallback(ops: &SpectralOps, h2: &[f64], mu: f64, b: &[f64]) -> Result<Vec<f64>> {
    let n = ops.n();
    let mut m = DMatrix::<f64>::zeros(2 * n, 2 * n);
    let mut e = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        let d2 = ops.dxx(&e);
        e[j] = 0.0;
        for i in 0..n {
            m[(n + i, j)] = 0.5 * d2[i];
            m[(n + i, n + j)] = mu * h2[i] / 10.0 * d2[i];
        }
        m[(j, j)] = 1.0;
        m[(j, n + j)] = mu * h2[j];
        m[(n + j, n + j)] += 1.0;
    }
    let x = m
        .lu()
        .solve(&DVector::from_column_slice(b))
        .ok_or_else(|| Error::SolveFailure("singular Isobe-Kakinuma block".into()))?;
    Ok(x.iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid1D;

    fn setup(n: usize) -> (SpectralOps, Vec<f64>, Vec<f64>) {
        let g = Grid1D::periodic(n, 10.0).unwrap();
        let ops = SpectralOps::new(&g).unwrap();
        let x = g.centers();
        let h: Vec<f64> = x.iter().map(|x| 1.0 + 0.2 * (-(x - 5.0).powi(2)).exp()).collect();
        (ops, x, h)
    }

    #[test]
    fn compatible_rhs_residual() {
        let (ops, x, _) = setup(64);
        let h = vec![1.0; 64];
        let rhs0: Vec<f64> = x.iter().map(|x| (0.6283185307179586 * 2.0 * x).cos()).collect();
        let d2 = ops.dxx(&rhs0);
        let rhs1: Vec<f64> = d2.iter().map(|v| 0.5 * v).collect();
        let (a, b) = solve_ik_block(&h, 0.1, &ops, &rhs0, &rhs1).unwrap();
        assert!(ik_residual(&ops, &h, 0.1, &rhs0, &rhs1, &a, &b) <= 1e-9);
    }

    #[test]
    fn mu_zero_is_triangular() {
        let (ops, x, h) = setup(32);
        let rhs0: Vec<f64> = x.iter().map(|x| (0.6283185307179586 * x).sin()).collect();
        let rhs1: Vec<f64> = x.iter().map(|x| (1.2566370614359172 * x).cos()).collect();
        let (a, b) = solve_ik_block(&h, 0.0, &ops, &rhs0, &rhs1).unwrap();
        let d2 = ops.dxx(&a);
        for i in 0..32 {
            assert!((a[i] - rhs0[i]).abs() < 1e-12);
            assert!((0.5 * d2[i] + b[i] - rhs1[i]).abs() < 1e-11);
        }
    }

    #[test]
    fn variable_depth_and_dense_fallback_agree() {
        let (ops, x, h) = setup(48);
        let rhs0: Vec<f64> = x.iter().map(|x| (-(x - 4.0).powi(2)).exp()).collect();
        let rhs1: Vec<f64> = x.iter().map(|x| 0.3 * (-(x - 6.0).powi(2)).exp()).collect();
        let (a, b) = solve_ik_block(&h, 0.3, &ops, &rhs0, &rhs1).unwrap();
        assert!(ik_residual(&ops, &h, 0.3, &rhs0, &rhs1, &a, &b) <= 1e-9);
        let h2: Vec<f64> = h.iter().map(|h| h * h).collect();
        let rhs: Vec<f64> = rhs0.iter().chain(&rhs1).copied().collect();
        let d = dense_fallback(&ops, &h2, 0.3, &rhs).unwrap();
        for i in 0..48 {
            assert!((d[i] - a[i]).abs() < 1e-9 && (d[48 + i] - b[i]).abs() < 1e-9);
        }
    }
}
