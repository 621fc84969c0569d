//! Fourier multipliers on periodic grids.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::dispersion::cww2;
use crate::error::{Error, Result};
use crate::grid::Grid1D;

/// Scalar symbol k -> m(k) applied mode by mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum MultiplierSymbol {
    Cww { mu: f64 },
    CwwInverse { mu: f64 },
    /// (ik)^order; odd orders vanish on the Nyquist mode.
    Derivative(u32),
    HelmholtzInverse(f64),
    /// Values in FFT bin order.
    Custom(Vec<f64>),
}

struct Plans {
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Plans {
    fn new(planner: &mut FftPlanner<f64>, n: usize) -> Self {
        Plans { fwd: planner.plan_fft_forward(n), inv: planner.plan_fft_inverse(n) }
    }
}

/// FFT plans and wavenumbers for one periodic grid. Cheap to clone.
#[derive(Clone)]
pub struct SpectralOps {
    grid: Grid1D,
    k: Arc<Vec<f64>>,
    base: Arc<Plans>,
    pad3: Arc<Plans>,
    pad4: Arc<Plans>,
}

impl std::fmt::Debug for SpectralOps {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralOps").field("grid", &self.grid).finish()
    }
}

fn padded_len(n: usize, factors: usize) -> usize {
    // exact de-aliasing of a product of `factors` fields
    let m = ((factors + 1) * n).div_ceil(2);
    m + (m % 2)
}

impl SpectralOps {
    pub fn new(grid: &Grid1D) -> Result<Self> {
        grid.require_periodic("spectral operators")?;
        let n = grid.n_cells;
        let mut planner = FftPlanner::new();
        let k = (0..n).map(|j| grid.wavenumber(j)).collect();
        Ok(SpectralOps {
            grid: *grid,
            k: Arc::new(k),
            base: Arc::new(Plans::new(&mut planner, n)),
            pad3: Arc::new(Plans::new(&mut planner, padded_len(n, 2))),
            pad4: Arc::new(Plans::new(&mut planner, padded_len(n, 3))),
        })
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn n(&self) -> usize {
        self.grid.n_cells
    }

    pub fn wavenumbers(&self) -> &[f64] {
        &self.k
    }

    pub fn is_nyquist(&self, j: usize) -> bool {
        let n = self.n();
        n % 2 == 0 && j == n / 2
    }

    pub fn forward(&self, u: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = u.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.base.fwd.process(&mut buf);
        buf
    }

    pub fn inverse(&self, mut buf: Vec<Complex64>) -> Vec<f64> {
        self.base.inv.process(&mut buf);
        let s = 1.0 / self.n() as f64;
        buf.iter().map(|c| c.re * s).collect()
    }

    /// Multiply each Fourier coefficient by `sym(j, k_j)`.
    pub fn apply_fn(&self, u: &[f64], sym: impl Fn(usize, f64) -> Complex64) -> Vec<f64> {
        let mut h = self.forward(u);
        for (j, c) in h.iter_mut().enumerate() {
            *c *= sym(j, self.k[j]);
        }
        self.inverse(h)
    }

    pub fn derivative_symbol(&self, j: usize, order: u32) -> Complex64 {
        if order % 2 == 1 && self.is_nyquist(j) {
            return Complex64::new(0.0, 0.0);
        }
        Complex64::new(0.0, self.k[j]).powu(order)
    }

    pub fn dx(&self, u: &[f64]) -> Vec<f64> {
        self.apply_fn(u, |j, _| self.derivative_symbol(j, 1))
    }

    pub fn dxx(&self, u: &[f64]) -> Vec<f64> {
        self.apply_fn(u, |_, k| Complex64::new(-k * k, 0.0))
    }

    pub fn dxxx(&self, u: &[f64]) -> Vec<f64> {
        self.apply_fn(u, |j, _| self.derivative_symbol(j, 3))
    }

    /// (1 - gamma d_xx)^{-1}.
    pub fn helmholtz_inverse(&self, u: &[f64], gamma: f64) -> Vec<f64> {
        self.apply_fn(u, |_, k| Complex64::new(1.0 / (1.0 + gamma * k * k), 0.0))
    }

    pub fn symbol_value(&self, symbol: &MultiplierSymbol, j: usize) -> Result<Complex64> {
        let k = self.k[j];
        let v = match symbol {
            MultiplierSymbol::Cww { mu } => Complex64::new(cww2(k, *mu).sqrt(), 0.0),
            MultiplierSymbol::CwwInverse { mu } => Complex64::new(1.0 / cww2(k, *mu).sqrt(), 0.0),
            MultiplierSymbol::Derivative(p) => self.derivative_symbol(j, *p),
            MultiplierSymbol::HelmholtzInverse(g) => Complex64::new(1.0 / (1.0 + g * k * k), 0.0),
            MultiplierSymbol::Custom(t) => {
                if t.len() != self.n() {
                    return Err(Error::ShapeMismatch { expected: self.n(), got: t.len() });
                }
                Complex64::new(t[j], 0.0)
            }
        };
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::InvalidParams(format!("symbol not finite at k = {k}")));
        }
        Ok(v)
    }

    /// Zero-padded product of two or three fields, free of aliasing.
    pub fn product(&self, fields: &[&[f64]]) -> Vec<f64> {
        let n = self.n();
        let plans = match fields.len() {
            1 => return fields[0].to_vec(),
            2 => &self.pad3,
            3 => &self.pad4,
            _ => panic!("de-aliased product supports 2 or 3 factors"),
        };
        let m = plans.fwd.len();
        let mut acc = vec![1.0; m];
        for f in fields {
            let up = self.upsample(f, m, plans);
            for (a, u) in acc.iter_mut().zip(&up) {
                *a *= u;
            }
        }
        let mut buf: Vec<Complex64> = acc.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        plans.fwd.process(&mut buf);
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        let half = n / 2;
        for j in 0..n {
            if n % 2 == 0 && j == half {
                continue;
            }
            let src = if j <= half { j } else { m - (n - j) };
            out[j] = buf[src] * (n as f64 / m as f64);
        }
        self.inverse(out)
    }

    fn upsample(&self, f: &[f64], m: usize, plans: &Plans) -> Vec<f64> {
        let n = self.n();
        let h = self.forward(f);
        let mut buf = vec![Complex64::new(0.0, 0.0); m];
        let half = n / 2;
        for j in 0..n {
            if n % 2 == 0 && j == half {
                continue;
            }
            let dst = if j <= half { j } else { m - (n - j) };
            buf[dst] = h[j];
        }
        plans.inv.process(&mut buf);
        let s = 1.0 / n as f64;
        buf.iter().map(|c| c.re * s).collect()
    }
}

/// Exact multiplication in Fourier space; periodic grids only.
pub fn apply_multiplier(field: &[f64], symbol: &MultiplierSymbol, grid: &Grid1D) -> Result<Vec<f64>> {
    if grid.boundary != crate::grid::Boundary::Periodic {
        return Err(Error::BoundaryUnsupported("Fourier multipliers need a periodic grid".into()));
    }
    grid.check_len(field)?;
    let ops = SpectralOps::new(grid)?;
    apply_multiplier_with(&ops, field, symbol)
}

pub fn apply_multiplier_with(ops: &SpectralOps, field: &[f64], symbol: &MultiplierSymbol) -> Result<Vec<f64>> {
    ops.grid().check_len(field)?;
    let syms = (0..ops.n()).map(|j| ops.symbol_value(symbol, j)).collect::<Result<Vec<_>>>()?;
    Ok(ops.apply_fn(field, |j, _| syms[j]))
}
