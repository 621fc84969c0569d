//! Energy budgets, distances between runs and convergence rates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fd::Parity;
use crate::grid::{Bathymetry, Grid1D};
use crate::operators::Ops;
use crate::params::SimulationParams;
use crate::runner::RunRecord;
use crate::state::{water_height, EnstrophyState, HydroState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EnergyKind {
    Nsw,
    Sgn,
    Rotational,
    Total,
}

/// Energy density, its flux where available, the integral and the relative
/// drift against a reference value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyBudget {
    pub kind: EnergyKind,
    pub density: Vec<f64>,
    pub flux: Option<Vec<f64>>,
    pub total: f64,
    pub drift: f64,
}

impl EnergyBudget {
    fn new(kind: EnergyKind, density: Vec<f64>, flux: Option<Vec<f64>>, dx: f64) -> Self {
        let total = density.iter().sum::<f64>() * dx;
        EnergyBudget { kind, density, flux, total, drift: 0.0 }
    }

    /// (total - e0) / |e0|, or the plain difference when e0 = 0.
    pub fn with_reference(mut self, e0: f64) -> Self {
        self.drift = if e0 == 0.0 { self.total - e0 } else { (self.total - e0) / e0.abs() };
        self
    }
}

/// e = (zeta^2 + h vbar^2) / 2, flux (zeta + eps vbar^2 / 2) h vbar.
pub fn energy_nsw(state: &HydroState, bathy: &Bathymetry, params: &SimulationParams, grid: &Grid1D) -> Result<EnergyBudget> {
    grid.check_len(&state.vbar)?;
    let h = water_height(&state.zeta, bathy, params)?;
    let (z, v) = (&state.zeta, &state.vbar);
    let density = (0..h.len()).map(|i| 0.5 * (z[i] * z[i] + h[i] * v[i] * v[i])).collect();
    let flux = (0..h.len()).map(|i| (z[i] + 0.5 * params.epsilon * v[i] * v[i]) * h[i] * v[i]).collect();
    Ok(EnergyBudget::new(EnergyKind::Nsw, density, Some(flux), grid.dx))
}

/// SGN energy (flat bottom): the NSW density plus (mu/6) h^3 vbar_x^2.
/// The flux needs the tendency of vbar and is omitted without it.
pub fn energy_sgn(
    state: &HydroState,
    bathy: &Bathymetry,
    params: &SimulationParams,
    grid: &Grid1D,
    dt_vbar: Option<&[f64]>,
) -> Result<EnergyBudget> {
    if !(bathy.is_flat() || params.beta == 0.0) {
        return Err(Error::Unsupported("the SGN energy is defined for a flat bottom".into()));
    }
    grid.check_len(&state.vbar)?;
    let h = water_height(&state.zeta, bathy, params)?;
    let ops = Ops::new(grid)?;
    let (z, v) = (&state.zeta, &state.vbar);
    let (eps, mu) = (params.epsilon, params.mu);
    let vx = ops.dx(v, Parity::Odd);
    let n = h.len();
    let density = (0..n)
        .map(|i| 0.5 * (z[i] * z[i] + h[i] * v[i] * v[i] + mu / 3.0 * h[i].powi(3) * vx[i] * vx[i]))
        .collect();
    let flux = match dt_vbar {
        Some(vt) => {
            grid.check_len(vt)?;
            let vxt = ops.dx(vt, Parity::Odd);
            let vxx = ops.dxx(v, Parity::Odd);
            Some(
                (0..n)
                    .map(|i| {
                        let gamma = vxt[i] + eps * v[i] * vxx[i] - eps * vx[i] * vx[i];
                        h[i] * v[i]
                            * (z[i] + 0.5 * eps * v[i] * v[i] + eps * mu / 6.0 * h[i] * h[i] * vx[i] * vx[i]
                                - mu / 3.0 * h[i] * h[i] * gamma)
                    })
                    .collect(),
            )
        }
        None => None,
    };
    Ok(EnergyBudget::new(EnergyKind::Sgn, density, flux, grid.dx))
}

/// Turbulent kinetic energy h^3 phi / 2 with flux (3/2) h^3 phi vbar.
pub fn energy_rotational(state: &EnstrophyState, bathy: &Bathymetry, params: &SimulationParams, grid: &Grid1D) -> Result<EnergyBudget> {
    let h = water_height(&state.hydro.zeta, bathy, params)?;
    grid.check_len(&state.phi)?;
    let e = state.e_field(&h);
    let density = e.iter().map(|e| 0.5 * e).collect();
    let flux = e.iter().zip(&state.hydro.vbar).map(|(e, v)| 1.5 * e * v).collect();
    Ok(EnergyBudget::new(EnergyKind::Rotational, density, Some(flux), grid.dx))
}

/// E_SGN + mu E_rot.
pub fn energy_total(
    state: &EnstrophyState,
    bathy: &Bathymetry,
    params: &SimulationParams,
    grid: &Grid1D,
    dt_vbar: Option<&[f64]>,
) -> Result<EnergyBudget> {
    let s = energy_sgn(&state.hydro, bathy, params, grid, dt_vbar)?;
    let r = energy_rotational(state, bathy, params, grid)?;
    let mu = params.mu;
    let density = s.density.iter().zip(&r.density).map(|(a, b)| a + mu * b).collect();
    let flux = match (&s.flux, &r.flux) {
        (Some(a), Some(b)) => Some(a.iter().zip(b).map(|(a, b)| a + mu * b).collect()),
        _ => None,
    };
    Ok(EnergyBudget::new(EnergyKind::Total, density, flux, grid.dx))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapNorm {
    /// max_x |a - b| at the last stored time
    SupAtFinal,
    /// (int int (a - b)^2 dx dt)^(1/2), trapezoidal in time
    L2InTime,
}

fn same_initial_data(a: &RunRecord, b: &RunRecord) -> Result<()> {
    let (pa, pb) = (a.primary(0), b.primary(0));
    let scale = pa.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let diff = pa.iter().zip(pb).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    if diff > 1e-12 * scale {
        return Err(Error::MismatchedRuns(format!("initial {} differs by {diff:e}", a.primary_field)));
    }
    Ok(())
}

/// Distance between the primary fields of two runs of the same scenario.
pub fn model_gap(a: &RunRecord, b: &RunRecord, norm: GapNorm) -> Result<f64> {
    if a.x.len() != b.x.len() || (a.dx - b.dx).abs() > 1e-14 * a.dx.abs() {
        return Err(Error::MismatchedRuns(format!("grids differ ({} vs {} cells)", a.x.len(), b.x.len())));
    }
    if a.primary_field != b.primary_field {
        return Err(Error::MismatchedRuns(format!("primary fields {} and {}", a.primary_field, b.primary_field)));
    }
    if a.times.len() != b.times.len() || a.times.iter().zip(&b.times).any(|(s, t)| (s - t).abs() > 1e-12 * (1.0 + t.abs())) {
        return Err(Error::MismatchedRuns("output times differ".into()));
    }
    if a.times.is_empty() {
        return Err(Error::MismatchedRuns("no snapshots".into()));
    }
    same_initial_data(a, b)?;
    let sq = |k: usize| -> f64 { a.primary(k).iter().zip(b.primary(k)).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() * a.dx };
    let last = a.times.len() - 1;
    Ok(match norm {
        GapNorm::SupAtFinal => a.primary(last).iter().zip(b.primary(last)).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())),
        GapNorm::L2InTime => {
            if last == 0 {
                sq(0).sqrt()
            } else {
                let mut acc = 0.0;
                for k in 0..last {
                    acc += 0.5 * (a.times[k + 1] - a.times[k]) * (sq(k) + sq(k + 1));
                }
                acc.sqrt()
            }
        }
    })
}

/// Least-squares slope of log(error) against log(parameter).
pub fn convergence_rate(errors: &[f64], params: &[f64]) -> Result<f64> {
    if errors.len() != params.len() {
        return Err(Error::DegenerateFit(format!("{} errors for {} parameters", errors.len(), params.len())));
    }
    if errors.len() < 3 {
        return Err(Error::DegenerateFit("need at least three samples".into()));
    }
    if errors.iter().chain(params).any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::DegenerateFit("errors and parameters must be positive and finite".into()));
    }
    let x: Vec<f64> = params.iter().map(|p| p.ln()).collect();
    let y: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxx: f64 = x.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx < 1e-24 {
        return Err(Error::DegenerateFit("parameters are all equal".into()));
    }
    let sxy: f64 = x.iter().zip(&y).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runner::Snapshot;
    use proptest::prelude::*;
    use std::collections::BTreeMap;

    fn record(fields: Vec<Vec<f64>>, times: Vec<f64>) -> RunRecord {
        let n = fields[0].len();
        RunRecord {
            model: "test".into(),
            scenario_hash: "0".into(),
            primary_field: "zeta".into(),
            x: (0..n).map(|i| i as f64 + 0.5).collect(),
            dx: 1.0,
            times,
            snapshots: fields
                .into_iter()
                .map(|f| Snapshot { fields: BTreeMap::from([("zeta".to_string(), f)]) })
                .collect(),
            energies: Vec::new(),
            residuals: BTreeMap::new(),
        }
    }

    fn grid() -> Grid1D {
        Grid1D::periodic(16, 2.0 * std::f64::consts::PI).unwrap()
    }

    #[test]
    fn rest_energy_with_unit_elevation() {
        let p = SimulationParams::new(0.1, 0.1, 0.0).unwrap();
        let s = HydroState { zeta: vec![1.0; 16], vbar: vec![0.0; 16] };
        let e = energy_nsw(&s, &Bathymetry::flat(16), &p, &grid()).unwrap();
        assert!(e.density.iter().all(|d| *d == 0.5));
        assert!(e.flux.unwrap().iter().all(|f| *f == 0.0));
        let e2 = energy_sgn(&s, &Bathymetry::flat(16), &p, &grid(), None).unwrap();
        assert!((e2.total - e.total).abs() < 1e-14);
        assert!(e2.flux.is_none());
    }

    #[test]
    fn sgn_energy_rejects_topography() {
        let p = SimulationParams::new(0.1, 0.1, 0.2).unwrap();
        let b = Bathymetry::gaussian(&grid(), 0.5, 1.0, 3.0).unwrap();
        let s = HydroState::rest(16);
        assert!(matches!(energy_sgn(&s, &b, &p, &grid(), None), Err(Error::Unsupported(_))));
    }

    #[test]
    fn total_combines_with_mu_weight() {
        let p = SimulationParams::new(0.2, 0.3, 0.0).unwrap();
        let x = grid().centers();
        let s = EnstrophyState {
            hydro: HydroState { zeta: x.iter().map(|x| 0.3 * x.sin()).collect(), vbar: x.iter().map(|x| x.cos()).collect() },
            phi: x.iter().map(|x| 1.0 + 0.5 * x.cos()).collect(),
        };
        let b = Bathymetry::flat(16);
        let t = energy_total(&s, &b, &p, &grid(), None).unwrap();
        let a = energy_sgn(&s.hydro, &b, &p, &grid(), None).unwrap();
        let r = energy_rotational(&s, &b, &p, &grid()).unwrap();
        assert!((t.total - a.total - 0.3 * r.total).abs() < 1e-13);
        let total = t.total;
        assert_eq!(t.with_reference(total).drift, 0.0);
    }

    #[test]
    fn rates() {
        let hs = [0.1, 0.05, 0.025];
        let e: Vec<f64> = hs.iter().map(|h: &f64| 3.0 * h.powi(2)).collect();
        assert!((convergence_rate(&e, &hs).unwrap() - 2.0).abs() < 1e-12);
        assert!(matches!(convergence_rate(&[1.0], &[1.0]), Err(Error::DegenerateFit(_))));
        assert!(matches!(convergence_rate(&[1.0, 0.5], &[1.0, 0.5]), Err(Error::DegenerateFit(_))));
        assert!(matches!(convergence_rate(&[1.0, 0.0, 1.0], &[1.0, 0.5, 0.2]), Err(Error::DegenerateFit(_))));
        assert!(matches!(convergence_rate(&[1.0, 2.0, 3.0], &[0.5, 0.5, 0.5]), Err(Error::DegenerateFit(_))));
        let lin: Vec<f64> = hs.iter().map(|h| 7.0 * h).collect();
        assert!((convergence_rate(&lin, &hs).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mismatched_runs() {
        let a = record(vec![vec![0.0; 4], vec![1.0; 4]], vec![0.0, 1.0]);
        let b = record(vec![vec![0.0; 4], vec![1.0; 4]], vec![0.0, 2.0]);
        assert!(matches!(model_gap(&a, &b, GapNorm::SupAtFinal), Err(Error::MismatchedRuns(_))));
        let c = record(vec![vec![0.5; 4], vec![1.0; 4]], vec![0.0, 1.0]);
        assert!(matches!(model_gap(&a, &c, GapNorm::SupAtFinal), Err(Error::MismatchedRuns(_))));
        let d = record(vec![vec![0.0; 5], vec![1.0; 5]], vec![0.0, 1.0]);
        assert!(matches!(model_gap(&a, &d, GapNorm::L2InTime), Err(Error::MismatchedRuns(_))));
    }

    #[test]
    fn l2_in_time_trapezoid() {
        let a = record(vec![vec![0.0; 4], vec![0.0; 4]], vec![0.0, 2.0]);
        let b = record(vec![vec![0.0; 4], vec![1.0; 4]], vec![0.0, 2.0]);
        // squared norms 0 and 4 at t = 0, 2: trapezoid gives 4
        assert!((model_gap(&a, &b, GapNorm::L2InTime).unwrap() - 2.0).abs() < 1e-14);
        assert_eq!(model_gap(&a, &b, GapNorm::SupAtFinal).unwrap(), 1.0);
    }

    fn field() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-1.0f64..1.0, 8)
    }

    proptest! {
        #[test]
        fn gap_is_a_pseudometric(f in field(), g in field(), h in field()) {
            let z = vec![0.0; 8];
            let (a, b, c) = (
                record(vec![z.clone(), f], vec![0.0, 1.0]),
                record(vec![z.clone(), g], vec![0.0, 1.0]),
                record(vec![z, h], vec![0.0, 1.0]),
            );
            for norm in [GapNorm::SupAtFinal, GapNorm::L2InTime] {
                let ab = model_gap(&a, &b, norm).unwrap();
                prop_assert_eq!(model_gap(&a, &a, norm).unwrap(), 0.0);
                prop_assert!((ab - model_gap(&b, &a, norm).unwrap()).abs() < 1e-15);
                prop_assert!(ab <= model_gap(&a, &c, norm).unwrap() + model_gap(&c, &b, norm).unwrap() + 1e-12);
            }
        }

        #[test]
        fn energies_are_nonnegative(z in prop::collection::vec(-5.0f64..5.0, 16), v in prop::collection::vec(-3.0f64..3.0, 16),
                                     phi in prop::collection::vec(0.0f64..2.0, 16)) {
            let p = SimulationParams::new(0.1, 0.2, 0.0).unwrap();
            let b = Bathymetry::flat(16);
            let s = EnstrophyState { hydro: HydroState { zeta: z, vbar: v }, phi };
            prop_assert!(energy_nsw(&s.hydro, &b, &p, &grid()).unwrap().density.iter().all(|d| *d >= 0.0));
            prop_assert!(energy_sgn(&s.hydro, &b, &p, &grid(), None).unwrap().density.iter().all(|d| *d >= 0.0));
            prop_assert!(energy_total(&s, &b, &p, &grid(), None).unwrap().total >= 0.0);
        }
    }
}
