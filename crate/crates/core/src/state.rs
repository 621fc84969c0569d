use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Bathymetry;
use crate::params::SimulationParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HydroState {
    pub zeta: Vec<f64>,
    pub vbar: Vec<f64>,
}

/// h = 1 + eps*zeta - beta*b, checked against h_min.
pub fn water_height(zeta: &[f64], bathy: &Bathymetry, params: &SimulationParams) -> Result<Vec<f64>> {
    if zeta.len() != bathy.len() {
        return Err(Error::ShapeMismatch { expected: bathy.len(), got: zeta.len() });
    }
    let h: Vec<f64> = zeta
        .iter()
        .zip(&bathy.b)
        .map(|(z, b)| 1.0 + params.epsilon * z - params.beta * b)
        .collect();
    check_depth(&h, params.h_min)?;
    Ok(h)
}

pub fn check_depth(h: &[f64], h_min: f64) -> Result<()> {
    for (cell, &depth) in h.iter().enumerate() {
        if !(depth >= h_min) {
            return Err(Error::DepthViolation { cell, depth, h_min });
        }
    }
    Ok(())
}

pub(crate) fn check_finite(what: &str, a: &[f64]) -> Result<()> {
    if let Some(i) = a.iter().position(|v| !v.is_finite()) {
        return Err(Error::StabilityViolation(format!("{what}[{i}] = {}", a[i])));
    }
    Ok(())
}

impl HydroState {
    pub fn new(zeta: Vec<f64>, vbar: Vec<f64>, bathy: &Bathymetry, params: &SimulationParams) -> Result<Self> {
        if vbar.len() != zeta.len() {
            return Err(Error::ShapeMismatch { expected: zeta.len(), got: vbar.len() });
        }
        check_finite("zeta", &zeta)?;
        check_finite("vbar", &vbar)?;
        water_height(&zeta, bathy, params)?;
        Ok(HydroState { zeta, vbar })
    }

    pub fn rest(n: usize) -> Self {
        HydroState { zeta: vec![0.0; n], vbar: vec![0.0; n] }
    }

    pub fn len(&self) -> usize {
        self.zeta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.zeta.is_empty()
    }

    pub fn height(&self, bathy: &Bathymetry, params: &SimulationParams) -> Result<Vec<f64>> {
        water_height(&self.zeta, bathy, params)
    }

    /// Q = h * vbar.
    pub fn discharge(&self, bathy: &Bathymetry, params: &SimulationParams) -> Result<Vec<f64>> {
        let h = self.height(bathy, params)?;
        Ok(h.iter().zip(&self.vbar).map(|(h, v)| h * v).collect())
    }

    /// Inverse of [`HydroState::discharge`].
    pub fn from_discharge(zeta: Vec<f64>, q: &[f64], bathy: &Bathymetry, params: &SimulationParams) -> Result<Self> {
        let h = water_height(&zeta, bathy, params)?;
        if q.len() != h.len() {
            return Err(Error::ShapeMismatch { expected: h.len(), got: q.len() });
        }
        let vbar = q.iter().zip(&h).map(|(q, h)| q / h).collect();
        Ok(HydroState { zeta, vbar })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnstrophyState {
    pub hydro: HydroState,
    pub phi: Vec<f64>,
}

impl EnstrophyState {
    pub fn new(hydro: HydroState, phi: Vec<f64>) -> Result<Self> {
        if phi.len() != hydro.len() {
            return Err(Error::ShapeMismatch { expected: hydro.len(), got: phi.len() });
        }
        check_finite("phi", &phi)?;
        if let Some(cell) = phi.iter().position(|&p| p < 0.0) {
            return Err(Error::NegativeEnstrophy { cell, value: phi[cell] });
        }
        Ok(EnstrophyState { hydro, phi })
    }

    /// E = h^3 phi.
    pub fn e_field(&self, h: &[f64]) -> Vec<f64> {
        h.iter().zip(&self.phi).map(|(h, p)| h * h * h * p).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiLayerState {
    pub zeta: Vec<f64>,
    pub layer_fractions: Vec<f64>,
    pub layer_velocities: Vec<Vec<f64>>,
}

pub fn check_fractions(l: &[f64]) -> Result<()> {
    if l.is_empty() {
        return Err(Error::FractionError("no layers".into()));
    }
    if let Some(bad) = l.iter().find(|&&v| !(v > 0.0 && v <= 1.0)) {
        return Err(Error::FractionError(format!("fraction {bad} outside (0, 1]")));
    }
    let s: f64 = l.iter().sum();
    if (s - 1.0).abs() > 1e-12 {
        return Err(Error::FractionError(format!("fractions sum to {s}, not 1")));
    }
    Ok(())
}

impl MultiLayerState {
    pub fn new(
        zeta: Vec<f64>,
        layer_fractions: Vec<f64>,
        layer_velocities: Vec<Vec<f64>>,
        bathy: &Bathymetry,
        params: &SimulationParams,
    ) -> Result<Self> {
        check_fractions(&layer_fractions)?;
        if layer_velocities.len() != layer_fractions.len() {
            return Err(Error::FractionError(format!(
                "{} velocity arrays for {} layers",
                layer_velocities.len(),
                layer_fractions.len()
            )));
        }
        for v in &layer_velocities {
            if v.len() != zeta.len() {
                return Err(Error::ShapeMismatch { expected: zeta.len(), got: v.len() });
            }
            check_finite("layer velocity", v)?;
        }
        check_finite("zeta", &zeta)?;
        water_height(&zeta, bathy, params)?;
        Ok(MultiLayerState { zeta, layer_fractions, layer_velocities })
    }

    /// Every layer carries the same velocity.
    pub fn uniform(hydro: &HydroState, layer_fractions: Vec<f64>, bathy: &Bathymetry, params: &SimulationParams) -> Result<Self> {
        let n = layer_fractions.len();
        Self::new(hydro.zeta.clone(), layer_fractions, vec![hydro.vbar.clone(); n], bathy, params)
    }

    /// Depth-averaged velocity sum_j l_j V_j.
    pub fn mean_velocity(&self) -> Vec<f64> {
        let n = self.zeta.len();
        let mut u = vec![0.0; n];
        for (l, v) in self.layer_fractions.iter().zip(&self.layer_velocities) {
            for i in 0..n {
                u[i] += l * v[i];
            }
        }
        u
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IkState {
    pub zeta: Vec<f64>,
    pub phi0: Vec<f64>,
    pub phi1: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FieldKind {
    SurfaceElevation,
    Velocity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarState {
    pub u: Vec<f64>,
    pub field_kind: FieldKind,
}

impl ScalarState {
    pub fn new(u: Vec<f64>, field_kind: FieldKind, params: &SimulationParams) -> Result<Self> {
        check_finite("u", &u)?;
        if field_kind == FieldKind::SurfaceElevation {
            for (cell, &z) in u.iter().enumerate() {
                let depth = 1.0 + params.epsilon * z;
                if !(depth >= params.h_min) {
                    return Err(Error::DepthViolation { cell, depth, h_min: params.h_min });
                }
            }
        }
        Ok(ScalarState { u, field_kind })
    }
}
