//! Centered finite differences on walled grids with reflection ghosts.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reflection symmetry of a field across a wall.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn sign(self) -> f64 {
        match self {
            Parity::Even => 1.0,
            Parity::Odd => -1.0,
        }
    }

    pub fn flip(self) -> Parity {
        match self {
            Parity::Even => Parity::Odd,
            Parity::Odd => Parity::Even,
        }
    }

    pub fn times(self, other: Parity) -> Parity {
        if self == other {
            Parity::Even
        } else {
            Parity::Odd
        }
    }
}

#[inline]
fn ghost(u: &[f64], i: isize, p: Parity) -> f64 {
    let n = u.len() as isize;
    if i < 0 {
        p.sign() * u[(-i - 1) as usize]
    } else if i >= n {
        p.sign() * u[(2 * n - 1 - i) as usize]
    } else {
        u[i as usize]
    }
}

pub fn dx(u: &[f64], dx: f64, p: Parity) -> Vec<f64> {
    let n = u.len() as isize;
    (0..n).map(|i| (ghost(u, i + 1, p) - ghost(u, i - 1, p)) / (2.0 * dx)).collect()
}

pub fn dxx(u: &[f64], dx: f64, p: Parity) -> Vec<f64> {
    let n = u.len() as isize;
    (0..n)
        .map(|i| (ghost(u, i + 1, p) - 2.0 * u[i as usize] + ghost(u, i - 1, p)) / (dx * dx))
        .collect()
}

/// Tridiagonal system lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = rhs[i].
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiagonal {
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * x[i];
                if i > 0 {
                    s += self.lower[i] * x[i - 1];
                }
                if i + 1 < n {
                    s += self.upper[i] * x[i + 1];
                }
                s
            })
            .collect()
    }

    /// Thomas algorithm.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = rhs.len();
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let mut piv = self.diag[0];
        if piv.abs() < 1e-300 || !piv.is_finite() {
            return Err(Error::SolveFailure("zero pivot in tridiagonal solve".into()));
        }
        c[0] = self.upper[0] / piv;
        d[0] = rhs[0] / piv;
        for i in 1..n {
            piv = self.diag[i] - self.lower[i] * c[i - 1];
            if piv.abs() < 1e-300 || !piv.is_finite() {
                return Err(Error::SolveFailure("zero pivot in tridiagonal solve".into()));
            }
            c[i] = if i + 1 < n { self.upper[i] / piv } else { 0.0 };
            d[i] = (rhs[i] - self.lower[i] * d[i - 1]) / piv;
        }
        let mut x = d;
        for i in (0..n - 1).rev() {
            x[i] -= c[i] * x[i + 1];
        }
        Ok(x)
    }
}
