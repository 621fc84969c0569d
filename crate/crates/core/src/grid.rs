use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Boundary {
    Periodic,
    Wall,
}

/// Uniform cell-centered grid on [0, L].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    pub n_cells: usize,
    pub length: f64,
    pub boundary: Boundary,
    pub dx: f64,
}

impl Grid1D {
    pub fn new(n_cells: usize, length: f64, boundary: Boundary) -> Result<Self> {
        if n_cells < 8 {
            return Err(Error::InvalidGrid(format!("n_cells = {n_cells} < 8")));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidGrid(format!("length = {length} must be > 0")));
        }
        Ok(Grid1D { n_cells, length, boundary, dx: length / n_cells as f64 })
    }

    pub fn periodic(n_cells: usize, length: f64) -> Result<Self> {
        Self::new(n_cells, length, Boundary::Periodic)
    }

    pub fn x(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.dx
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.n_cells).map(|i| self.x(i)).collect()
    }

    /// Angular wavenumber of FFT bin `j`.
    pub fn wavenumber(&self, j: usize) -> f64 {
        let n = self.n_cells;
        let m = if j <= n / 2 { j as f64 } else { j as f64 - n as f64 };
        2.0 * std::f64::consts::PI * m / self.length
    }

    pub fn check_len(&self, a: &[f64]) -> Result<()> {
        if a.len() != self.n_cells {
            return Err(Error::ShapeMismatch { expected: self.n_cells, got: a.len() });
        }
        Ok(())
    }

    pub fn require_periodic(&self, what: &str) -> Result<()> {
        if self.boundary != Boundary::Periodic {
            return Err(Error::BoundaryUnsupported(format!("{what} requires a periodic grid")));
        }
        Ok(())
    }
}

/// Bottom profile at cell centers, |b| <= 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bathymetry {
    pub b: Vec<f64>,
}

impl Bathymetry {
    pub fn flat(n: usize) -> Self {
        Bathymetry { b: vec![0.0; n] }
    }

    pub fn new(b: Vec<f64>) -> Result<Self> {
        let m = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if !m.is_finite() || m > 1.0 + 1e-12 {
            return Err(Error::InvalidParams(format!("bathymetry max|b| = {m} exceeds 1")));
        }
        Ok(Bathymetry { b })
    }

    /// Gaussian bump `height * exp(-((x - center)/width)^2)`.
    pub fn gaussian(grid: &Grid1D, height: f64, width: f64, center: f64) -> Result<Self> {
        let b = grid.centers().iter().map(|x| height * (-((x - center) / width).powi(2)).exp()).collect();
        Self::new(b)
    }

    pub fn is_flat(&self) -> bool {
        self.b.iter().all(|&v| v == 0.0)
    }

    pub fn len(&self) -> usize {
        self.b.len()
    }

    pub fn is_empty(&self) -> bool {
        self.b.is_empty()
    }
}
