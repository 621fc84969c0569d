//! Krylov solvers on plain vectors.

use crate::error::{Error, Result};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Preconditioned conjugate gradients for a symmetric positive definite A.
/// Stops when ||b - A x|| <= tol ||b||.
pub fn pcg(
    apply: impl Fn(&[f64]) -> Vec<f64>,
    precond: impl Fn(&[f64]) -> Vec<f64>,
    b: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<Vec<f64>> {
    let bn = norm(b);
    let n = b.len();
    if bn == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let mut x = precond(b);
    let ax = apply(&x);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let mut z = precond(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for _ in 0..max_iter {
        if norm(&r) <= tol * bn {
            return Ok(x);
        }
        let ap = apply(&p);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::SolveFailure(format!("CG breakdown, p'Ap = {pap:e}")));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        z = precond(&r);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    // recompute the true residual before giving up
    let ax = apply(&x);
    let res = norm(&b.iter().zip(&ax).map(|(b, a)| b - a).collect::<Vec<_>>());
    if res <= tol * bn {
        Ok(x)
    } else {
        Err(Error::SolveFailure(format!("CG did not converge: relative residual {:e}", res / bn)))
    }
}

/// Restarted GMRES with right preconditioning: solves A M^{-1} y = b, x = M^{-1} y.
pub fn gmres(
    apply: impl Fn(&[f64]) -> Vec<f64>,
    precond: impl Fn(&[f64]) -> Vec<f64>,
    b: &[f64],
    tol: f64,
    restart: usize,
    max_restarts: usize,
) -> Result<Vec<f64>> {
    let n = b.len();
    let bn = norm(b);
    if bn == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let mut x = vec![0.0; n];
    let mut last = f64::INFINITY;
    for _ in 0..max_restarts {
        let ax = apply(&x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let beta = norm(&r);
        last = beta / bn;
        if beta <= tol * bn {
            return Ok(x);
        }
        let mut v: Vec<Vec<f64>> = vec![r.iter().map(|v| v / beta).collect()];
        let mut hmat = vec![vec![0.0; restart]; restart + 1];
        let mut cs = vec![0.0; restart];
        let mut sn = vec![0.0; restart];
        let mut g = vec![0.0; restart + 1];
        g[0] = beta;
        let mut used = 0;
        for j in 0..restart {
            let mut w = apply(&precond(&v[j]));
            for i in 0..=j {
                let h = dot(&w, &v[i]);
                hmat[i][j] = h;
                for (wk, vk) in w.iter_mut().zip(&v[i]) {
                    *wk -= h * vk;
                }
            }
            let wn = norm(&w);
            hmat[j + 1][j] = wn;
            for i in 0..j {
                let t = cs[i] * hmat[i][j] + sn[i] * hmat[i + 1][j];
                hmat[i + 1][j] = -sn[i] * hmat[i][j] + cs[i] * hmat[i + 1][j];
                hmat[i][j] = t;
            }
            let d = (hmat[j][j].powi(2) + hmat[j + 1][j].powi(2)).sqrt();
            if d == 0.0 {
                return Err(Error::SolveFailure("GMRES breakdown".into()));
            }
            cs[j] = hmat[j][j] / d;
            sn[j] = hmat[j + 1][j] / d;
            hmat[j][j] = d;
            hmat[j + 1][j] = 0.0;
            g[j + 1] = -sn[j] * g[j];
            g[j] *= cs[j];
            used = j + 1;
            if g[j + 1].abs() <= 0.1 * tol * bn || wn == 0.0 {
                break;
            }
            v.push(w.iter().map(|x| x / wn).collect());
        }
        let mut y = vec![0.0; used];
        for i in (0..used).rev() {
            let mut s = g[i];
            for k in i + 1..used {
                s -= hmat[i][k] * y[k];
            }
            y[i] = s / hmat[i][i];
        }
        let mut upd = vec![0.0; n];
        for (k, yk) in y.iter().enumerate() {
            for (u, vk) in upd.iter_mut().zip(&v[k]) {
                *u += yk * vk;
            }
        }
        let dxv = precond(&upd);
        for (xi, d) in x.iter_mut().zip(&dxv) {
            *xi += d;
        }
    }
    let ax = apply(&x);
    let res = norm(&b.iter().zip(&ax).map(|(b, a)| b - a).collect::<Vec<_>>()) / bn;
    if res <= tol {
        Ok(x)
    } else {
        Err(Error::SolveFailure(format!("GMRES did not converge: relative residual {:e} (previous {last:e})", res)))
    }
}
