//! Time steppers for the systems of two or more fields.

pub mod boussinesq;
pub mod fv;
pub mod ik;
pub mod linear;
pub mod sgn;

use serde::{Deserialize, Serialize};

use crate::dispersion::check_abcd;
use crate::error::{Error, Result};
use crate::grid::{Bathymetry, Boundary, Grid1D};
use crate::ik_block::IK_SOLVE_TOL;
use crate::operators::Ops;
use crate::params::SimulationParams;
use crate::state::check_fractions;

pub use boussinesq::{abcd_step, boussinesq_e_step, multilayer_boussinesq_step, peregrine_step};
pub use fv::{boundary_apply, multilayer_nsw_step, nsw_step, nsw_step_with_residual, nsw_turbulent_step, GhostCell, Side};
pub use ik::{ik_constraint_residual, ik_initial_state, ik_step};
pub use linear::linear_reference_evolve;
pub use sgn::{nsw_spectral_step, sgn_step, sgn_vorticity_step, wave_breaking_step, wave_breaking_step_with_dissipation};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemModelSpec {
    Nsw,
    AbcdBoussinesq { a: f64, b: f64, c: f64, d: f64 },
    Peregrine,
    Sgn,
    SgnVorticity,
    SgnWaveBreaking { cp: f64, cr: f64 },
    /// `boussinesq` adds the (1 - mu/3 d_xx) factor and runs spectrally.
    NswTurbulent {
        alpha: f64,
        #[serde(default)]
        boussinesq: bool,
    },
    MultiLayerNsw { l: Vec<f64> },
    MultiLayerBoussinesq { l: Vec<f64> },
    IsobeKakinuma1,
    LinearReference,
}

impl SystemModelSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            SystemModelSpec::AbcdBoussinesq { a, b, c, d } => {
                check_abcd(*a, *b, *c, *d)?;
                if *b < 0.0 || *d < 0.0 {
                    return Err(Error::InvalidParams(format!("abcd needs b, d >= 0 (got b = {b}, d = {d})")));
                }
                Ok(())
            }
            SystemModelSpec::SgnWaveBreaking { cp, cr } => {
                if !(*cp >= 0.0 && *cr >= 0.0) {
                    return Err(Error::InvalidParams(format!("closure constants must be >= 0 (cp = {cp}, cr = {cr})")));
                }
                Ok(())
            }
            SystemModelSpec::NswTurbulent { alpha, .. } => {
                if !(*alpha > 0.0 && *alpha <= 0.5) {
                    return Err(Error::InvalidParams(format!("alpha = {alpha} outside (0, 1/2]")));
                }
                Ok(())
            }
            SystemModelSpec::MultiLayerNsw { l } | SystemModelSpec::MultiLayerBoussinesq { l } => check_fractions(l),
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> String {
        match self {
            SystemModelSpec::Nsw => "nsw".into(),
            SystemModelSpec::AbcdBoussinesq { a, b, c, d } => format!("abcd({a},{b},{c},{d})"),
            SystemModelSpec::Peregrine => "peregrine".into(),
            SystemModelSpec::Sgn => "sgn".into(),
            SystemModelSpec::SgnVorticity => "sgn_vorticity".into(),
            SystemModelSpec::SgnWaveBreaking { cp, cr } => format!("sgn_wave_breaking(cp={cp},cr={cr})"),
            SystemModelSpec::NswTurbulent { alpha, boussinesq } => {
                if *boussinesq {
                    format!("boussinesq_e(alpha={alpha})")
                } else {
                    format!("nsw_turbulent(alpha={alpha})")
                }
            }
            SystemModelSpec::MultiLayerNsw { l } => format!("multilayer_nsw(N={})", l.len()),
            SystemModelSpec::MultiLayerBoussinesq { l } => format!("multilayer_boussinesq(N={})", l.len()),
            SystemModelSpec::IsobeKakinuma1 => "isobe_kakinuma1".into(),
            SystemModelSpec::LinearReference => "linear_reference".into(),
        }
    }

    /// Models advanced by the finite-volume engine.
    pub fn is_finite_volume(&self, numerics: &Numerics) -> bool {
        match self {
            SystemModelSpec::Nsw => !numerics.nsw_spectral,
            SystemModelSpec::MultiLayerNsw { .. } => true,
            SystemModelSpec::NswTurbulent { boussinesq, .. } => !boussinesq,
            _ => false,
        }
    }
}

/// Weight eps * mu^(2 alpha) of the turbulent pressure.
pub fn rotational_coupling_weight(alpha: f64, params: &SimulationParams) -> f64 {
    params.epsilon * params.mu.powf(2.0 * alpha)
}

/// Prescribed surface elevation at a generating boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Signal {
    Zero,
    Constant { value: f64 },
    Sine { amplitude: f64, period: f64 },
}

impl Signal {
    pub fn at(&self, t: f64) -> f64 {
        match self {
            Signal::Zero => 0.0,
            Signal::Constant { value } => *value,
            Signal::Sine { amplitude, period } => amplitude * (2.0 * std::f64::consts::PI * t / period).sin(),
        }
    }
}

/// Condition imposed at an end of a non-periodic grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundaryCondition {
    Wall,
    Generating { signal: Signal },
    TransparentNsw,
}

fn wall() -> BoundaryCondition {
    BoundaryCondition::Wall
}
fn default_cfl() -> f64 {
    0.4
}
fn default_tol() -> f64 {
    IK_SOLVE_TOL
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Numerics {
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    /// second-order MUSCL reconstruction with Heun time stepping
    #[serde(default)]
    pub muscl: bool,
    /// run NSW as SGN with the dispersive terms removed (periodic, smooth data)
    #[serde(default)]
    pub nsw_spectral: bool,
    #[serde(default = "wall")]
    pub left: BoundaryCondition,
    #[serde(default = "wall")]
    pub right: BoundaryCondition,
    #[serde(default = "default_tol")]
    pub tol_constraint: f64,
}

impl Default for Numerics {
    fn default() -> Self {
        Numerics {
            cfl: default_cfl(),
            muscl: false,
            nsw_spectral: false,
            left: wall(),
            right: wall(),
            tol_constraint: default_tol(),
        }
    }
}

impl Numerics {
    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl < 1.0) {
            return Err(Error::InvalidParams(format!("cfl = {} outside (0, 1)", self.cfl)));
        }
        if !(self.tol_constraint > 0.0) {
            return Err(Error::InvalidParams("tol_constraint must be > 0".into()));
        }
        for bc in [self.left, self.right] {
            if let BoundaryCondition::Generating { signal: Signal::Sine { period, .. } } = bc {
                if !(period > 0.0) {
                    return Err(Error::InvalidParams("signal period must be > 0".into()));
                }
            }
        }
        Ok(())
    }
}

/// Everything a step needs besides the state.
#[derive(Debug, Clone)]
pub struct SystemContext {
    pub ops: Ops,
    pub bathy: Bathymetry,
    pub params: SimulationParams,
    pub numerics: Numerics,
}

impl SystemContext {
    pub fn new(grid: &Grid1D, bathy: Bathymetry, params: SimulationParams, numerics: Numerics) -> Result<Self> {
        params.validate()?;
        numerics.validate()?;
        grid.check_len(&bathy.b)?;
        Ok(SystemContext { ops: Ops::new(grid)?, bathy, params, numerics })
    }

    pub fn grid(&self) -> &Grid1D {
        self.ops.grid()
    }

    pub(crate) fn require_flat(&self, what: &str) -> Result<()> {
        if self.bathy.is_flat() || self.params.beta == 0.0 {
            Ok(())
        } else {
            Err(Error::Unsupported(format!("{what} requires a flat bottom")))
        }
    }

    /// Dispersive models only accept reflecting walls on bounded grids.
    pub(crate) fn require_walls(&self, what: &str) -> Result<()> {
        if self.grid().boundary == Boundary::Wall
            && (self.numerics.left != BoundaryCondition::Wall || self.numerics.right != BoundaryCondition::Wall)
        {
            return Err(Error::Unsupported(format!(
                "{what}: generating and transparent conditions are only defined for the shallow water equations"
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(SystemModelSpec::AbcdBoussinesq { a: 0.0, b: 0.0, c: 0.0, d: 1.0 / 3.0 }.validate().is_ok());
        assert!(SystemModelSpec::AbcdBoussinesq { a: 0.0, b: 0.0, c: 0.0, d: 0.3 }.validate().is_err());
        assert!(SystemModelSpec::AbcdBoussinesq { a: 0.5, b: -1.0 / 6.0, c: 0.0, d: 0.0 }.validate().is_err());
        assert!(SystemModelSpec::SgnWaveBreaking { cp: -0.1, cr: 0.0 }.validate().is_err());
        assert!(SystemModelSpec::NswTurbulent { alpha: 0.6, boussinesq: false }.validate().is_err());
        assert!(SystemModelSpec::NswTurbulent { alpha: 0.5, boussinesq: true }.validate().is_ok());
        assert!(SystemModelSpec::MultiLayerNsw { l: vec![0.5, 0.4] }.validate().is_err());
    }

    #[test]
    fn half_alpha_weight_is_eps_mu() {
        let p = SimulationParams::new(0.3, 0.07, 0.0).unwrap();
        assert!((rotational_coupling_weight(0.5, &p) - 0.3 * 0.07).abs() < 1e-17);
    }

    #[test]
    fn numerics_from_toml_like_json() {
        let n: Numerics = serde_json::from_str(r#"{"cfl":0.3,"right":{"kind":"transparent_nsw"}}"#).unwrap();
        assert_eq!(n.right, BoundaryCondition::TransparentNsw);
        assert_eq!(n.left, BoundaryCondition::Wall);
        assert!(Numerics { cfl: 1.2, ..Numerics::default() }.validate().is_err());
    }
}
