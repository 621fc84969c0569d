//! Derivatives and elliptic inversions on the active grid: spectral on
//! periodic grids, centered differences on walled grids.

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fd::{self, Parity, Tridiagonal};
use crate::grid::{Boundary, Grid1D};
use crate::linalg::pcg;
use crate::params::SimulationParams;
use crate::spectral::SpectralOps;
use crate::state::check_depth;

pub const SOLVE_TOL: f64 = 1e-13;

#[derive(Debug, Clone)]
pub enum Ops {
    Spectral(SpectralOps),
    Fd(Grid1D),
}

impl Ops {
    pub fn new(grid: &Grid1D) -> Result<Self> {
        match grid.boundary {
            Boundary::Periodic => Ok(Ops::Spectral(SpectralOps::new(grid)?)),
            Boundary::Wall => Ok(Ops::Fd(*grid)),
        }
    }

    pub fn grid(&self) -> &Grid1D {
        match self {
            Ops::Spectral(s) => s.grid(),
            Ops::Fd(g) => g,
        }
    }

    pub fn n(&self) -> usize {
        self.grid().n_cells
    }

    pub fn spectral(&self, what: &str) -> Result<&SpectralOps> {
        match self {
            Ops::Spectral(s) => Ok(s),
            Ops::Fd(_) => Err(Error::BoundaryUnsupported(format!("{what} requires a periodic grid"))),
        }
    }

    /// First derivative; `p` is the wall parity of `u` (ignored when periodic).
    pub fn dx(&self, u: &[f64], p: Parity) -> Vec<f64> {
        match self {
            Ops::Spectral(s) => s.dx(u),
            Ops::Fd(g) => fd::dx(u, g.dx, p),
        }
    }

    pub fn dxx(&self, u: &[f64], p: Parity) -> Vec<f64> {
        match self {
            Ops::Spectral(s) => s.dxx(u),
            Ops::Fd(g) => fd::dxx(u, g.dx, p),
        }
    }
}

/// Solve (1 - gamma d_xx) u = rhs. On walled grids `parity` selects the
/// ghost reflection: even is homogeneous Neumann, odd homogeneous Dirichlet.
pub fn solve_helmholtz(rhs: &[f64], gamma: f64, grid: &Grid1D, parity: Parity) -> Result<Vec<f64>> {
    grid.check_len(rhs)?;
    helmholtz(&Ops::new(grid)?, rhs, gamma, parity)
}

pub fn helmholtz(ops: &Ops, rhs: &[f64], gamma: f64, parity: Parity) -> Result<Vec<f64>> {
    if !(gamma >= 0.0) {
        return Err(Error::InvalidParams(format!("Helmholtz gamma = {gamma} must be >= 0")));
    }
    if gamma == 0.0 {
        return Ok(rhs.to_vec());
    }
    match ops {
        Ops::Spectral(s) => Ok(s.helmholtz_inverse(rhs, gamma)),
        Ops::Fd(g) => helmholtz_matrix(g, gamma, parity).solve(rhs),
    }
}

pub fn helmholtz_matrix(g: &Grid1D, gamma: f64, parity: Parity) -> Tridiagonal {
    let n = g.n_cells;
    let c = gamma / (g.dx * g.dx);
    let mut diag = vec![1.0 + 2.0 * c; n];
    diag[0] -= parity.sign() * c;
    diag[n - 1] -= parity.sign() * c;
    Tridiagonal { lower: vec![-c; n], diag, upper: vec![-c; n] }
}

enum Inverse {
    /// constant depth, flat bottom: exact Fourier division
    Fourier { h0: f64 },
    Cg,
    Banded(Tridiagonal),
}

/// The operator (1 + mu T[h, beta b]) of the dispersive systems, with
/// T u = -(1/3h)(h^3 u_x)_x + (beta/2h)[(h^2 b_x u)_x - h^2 b_x u_x] + beta^2 b_x^2 u.
/// h (1 + mu T) is symmetric positive definite.
pub struct DispersiveOperator {
    ops: Ops,
    h: Vec<f64>,
    h3: Vec<f64>,
    k: Vec<f64>,
    bx: Vec<f64>,
    mu: f64,
    beta: f64,
    inverse: Inverse,
    precond_h: f64,
}

pub fn assemble_sgn_operator(h: &[f64], b: &[f64], params: &SimulationParams, grid: &Grid1D) -> Result<DispersiveOperator> {
    DispersiveOperator::new(&Ops::new(grid)?, h, b, params)
}

/// (1 + mu T_b) with the still-water depth h_b = 1 - beta b.
pub fn assemble_peregrine_operator(b: &[f64], params: &SimulationParams, grid: &Grid1D) -> Result<DispersiveOperator> {
    peregrine_operator(&Ops::new(grid)?, b, params)
}

pub fn peregrine_operator(ops: &Ops, b: &[f64], params: &SimulationParams) -> Result<DispersiveOperator> {
    let hb: Vec<f64> = b.iter().map(|b| 1.0 - params.beta * b).collect();
    DispersiveOperator::new(ops, &hb, b, params)
}

impl DispersiveOperator {
    pub fn new(ops: &Ops, h: &[f64], b: &[f64], params: &SimulationParams) -> Result<Self> {
        let grid = ops.grid();
        grid.check_len(h)?;
        grid.check_len(b)?;
        check_depth(h, params.h_min)?;
        let beta = params.beta;
        let topo = beta != 0.0 && b.iter().any(|&v| v != 0.0);
        let bx = if topo { ops.dx(b, Parity::Even) } else { vec![0.0; h.len()] };
        let beta = if topo { beta } else { 0.0 };
        let h3: Vec<f64> = h.iter().map(|h| h * h * h).collect();
        let k: Vec<f64> = h.iter().zip(&bx).map(|(h, bx)| h * h * bx).collect();
        let constant = h.iter().all(|&v| v == h[0]);
        let mut op = DispersiveOperator {
            ops: ops.clone(),
            h: h.to_vec(),
            h3,
            k,
            bx,
            mu: params.mu,
            beta,
            inverse: Inverse::Cg,
            precond_h: h.iter().sum::<f64>() / h.len() as f64,
        };
        op.inverse = match ops {
            Ops::Spectral(_) if constant && !topo => Inverse::Fourier { h0: h[0] },
            Ops::Spectral(_) => Inverse::Cg,
            Ops::Fd(_) => Inverse::Banded(op.weighted_matrix()),
        };
        Ok(op)
    }

    pub fn depth(&self) -> &[f64] {
        &self.h
    }

    pub fn bottom_slope(&self) -> &[f64] {
        &self.bx
    }

    /// Force the iterative path even when the depth is constant.
    pub fn without_fast_path(mut self) -> Self {
        if let Inverse::Fourier { .. } = self.inverse {
            self.inverse = Inverse::Cg;
        }
        self
    }

    fn weighted_matrix(&self) -> Tridiagonal {
        let g = *self.ops.grid();
        let n = g.n_cells;
        let dx = g.dx;
        let (mu, beta) = (self.mu, self.beta);
        let mut lower = vec![0.0; n];
        let mut upper = vec![0.0; n];
        let mut diag: Vec<f64> = self.h.clone();
        let face = |i: usize| 0.5 * (self.h3[i] + self.h3[i + 1]);
        let c = mu / (3.0 * dx * dx);
        for i in 0..n {
            // -(mu/3)(F_{i+1/2} - F_{i-1/2})/dx with F = h^3 u_x at faces, odd ghosts
            if i + 1 < n {
                let f = face(i) * c;
                upper[i] -= f;
                diag[i] += f;
            } else {
                diag[i] += 2.0 * self.h3[i] * c;
            }
            if i > 0 {
                let f = face(i - 1) * c;
                lower[i] -= f;
                diag[i] += f;
            } else {
                diag[i] += 2.0 * self.h3[i] * c;
            }
            if beta != 0.0 {
                let kk = &self.k;
                let s = mu * beta / 2.0 / (2.0 * dx);
                if i + 1 < n {
                    upper[i] += s * (kk[i + 1] - kk[i]);
                } else {
                    diag[i] += s * 2.0 * kk[i];
                }
                if i > 0 {
                    lower[i] += s * (kk[i] - kk[i - 1]);
                } else {
                    diag[i] -= s * 2.0 * kk[i];
                }
                diag[i] += mu * beta * beta * self.h[i] * self.bx[i] * self.bx[i];
            }
        }
        Tridiagonal { lower, diag, upper }
    }

    /// h (1 + mu T) u.
    pub fn apply_weighted(&self, u: &[f64]) -> Vec<f64> {
        match (&self.inverse, &self.ops) {
            (Inverse::Banded(t), _) => t.apply(u),
            (Inverse::Fourier { h0 }, Ops::Spectral(s)) => {
                let c = self.mu / 3.0 * h0 * h0;
                let h0 = *h0;
                s.apply_fn(u, |_, k| Complex64::new(h0 * (1.0 + c * k * k), 0.0))
            }
            _ => {
                let ux = self.ops.dx(u, Parity::Odd);
                let f: Vec<f64> = self.h3.iter().zip(&ux).map(|(a, b)| a * b).collect();
                let d = self.ops.dx(&f, Parity::Odd);
                let mut out: Vec<f64> = (0..u.len()).map(|i| self.h[i] * u[i] - self.mu / 3.0 * d[i]).collect();
                if self.beta != 0.0 {
                    let ku: Vec<f64> = self.k.iter().zip(u).map(|(a, b)| a * b).collect();
                    let dku = self.ops.dx(&ku, Parity::Even);
                    for i in 0..u.len() {
                        out[i] += self.mu
                            * (0.5 * self.beta * (dku[i] - self.k[i] * ux[i])
                                + self.beta * self.beta * self.h[i] * self.bx[i] * self.bx[i] * u[i]);
                    }
                }
                out
            }
        }
    }

    /// (1 + mu T) u.
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        self.apply_weighted(u).iter().zip(&self.h).map(|(a, h)| a / h).collect()
    }

    fn precondition(&self, s: &SpectralOps, r: &[f64]) -> Vec<f64> {
        let hb = self.precond_h;
        let c = self.mu / 3.0 * hb * hb * hb;
        s.apply_fn(r, |j, k| {
            let k2 = if s.is_nyquist(j) { 0.0 } else { k * k };
            Complex64::new(1.0 / (hb + c * k2), 0.0)
        })
    }

    /// Solve (1 + mu T) u = f.
    pub fn solve(&self, f: &[f64]) -> Result<Vec<f64>> {
        let hf: Vec<f64> = f.iter().zip(&self.h).map(|(f, h)| f * h).collect();
        match (&self.inverse, &self.ops) {
            (Inverse::Fourier { h0 }, Ops::Spectral(s)) => {
                let c = self.mu / 3.0 * h0 * h0;
                Ok(s.apply_fn(f, |_, k| Complex64::new(1.0 / (1.0 + c * k * k), 0.0)))
            }
            (Inverse::Banded(t), _) => t.solve(&hf),
            (_, Ops::Spectral(s)) => pcg(|u| self.apply_weighted(u), |r| self.precondition(s, r), &hf, SOLVE_TOL, 500),
            (_, Ops::Fd(_)) => unreachable!("walled grids always use the banded inverse"),
        }
    }
}
