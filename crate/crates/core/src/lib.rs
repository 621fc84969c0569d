//! Shallow-water model hierarchy in one horizontal dimension.
//!
//! Dimensionless variables throughout: surface elevation `zeta`, depth
//! averaged velocity `vbar`, water height `h = 1 + eps*zeta - beta*b`.

pub mod diagnostics;
pub mod dispersion;
pub mod error;
pub mod fd;
pub mod grid;
pub mod ik_block;
pub mod linalg;
pub mod operators;
pub mod params;
pub mod reconstruction;
pub mod runner;
pub mod scalar;
pub mod spectral;
pub mod state;
pub mod system;
pub mod timestep;

pub use error::{Error, Result};
pub use grid::{Bathymetry, Boundary, Grid1D};
pub use params::SimulationParams;
pub use state::{EnstrophyState, FieldKind, HydroState, IkState, MultiLayerState, ScalarState};
