//! Linear phase speeds about the flat rest state.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::check_fractions;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DispersionSpec {
    WaterWaves,
    Nsw,
    AbcdBoussinesq { a: f64, b: f64, c: f64, d: f64 },
    Sgn,
    IsobeKakinuma1,
    MultiLayerBoussinesq { l: Vec<f64> },
    KdV,
    Bbm,
    KdVBbmFamily { p: f64 },
    Whitham,
}

impl DispersionSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            DispersionSpec::AbcdBoussinesq { a, b, c, d } => check_abcd(*a, *b, *c, *d),
            DispersionSpec::MultiLayerBoussinesq { l } => check_fractions(l),
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> String {
        match self {
            DispersionSpec::WaterWaves => "water_waves".into(),
            DispersionSpec::Nsw => "nsw".into(),
            DispersionSpec::AbcdBoussinesq { a, b, c, d } => format!("abcd({a},{b},{c},{d})"),
            DispersionSpec::Sgn => "sgn".into(),
            DispersionSpec::IsobeKakinuma1 => "ik".into(),
            DispersionSpec::MultiLayerBoussinesq { l } => format!("multilayer(N={})", l.len()),
            DispersionSpec::KdV => "kdv".into(),
            DispersionSpec::Bbm => "bbm".into(),
            DispersionSpec::KdVBbmFamily { p } => format!("kdvbbm({p})"),
            DispersionSpec::Whitham => "whitham".into(),
        }
    }

    /// Squared phase speed; for the multi-layer model the fastest branch.
    pub fn c2(&self, k: f64, mu: f64) -> Result<f64> {
        self.validate()?;
        match self {
            DispersionSpec::WaterWaves | DispersionSpec::Whitham => Ok(cww2(k, mu)),
            DispersionSpec::Nsw => Ok(1.0),
            DispersionSpec::AbcdBoussinesq { a, b, c, d } => phase_speed_abcd(k, mu, *a, *b, *c, *d),
            DispersionSpec::Sgn => phase_speed_abcd(k, mu, 0.0, 0.0, 0.0, 1.0 / 3.0),
            DispersionSpec::IsobeKakinuma1 => Ok(phase_speed_ik(k, mu)),
            DispersionSpec::MultiLayerBoussinesq { l } => Ok(phase_speed_multilayer(k, mu, l)?[0]),
            DispersionSpec::KdV | DispersionSpec::Bbm | DispersionSpec::KdVBbmFamily { .. } => {
                Ok(phase_speed_scalar(self, k, mu)?.powi(2))
            }
        }
    }
}

pub fn check_abcd(a: f64, b: f64, c: f64, d: f64) -> Result<()> {
    let s = a + b + c + d;
    if (s - 1.0 / 3.0).abs() > 1e-12 {
        return Err(Error::InvalidParams(format!("a+b+c+d = {s}, expected 1/3")));
    }
    Ok(())
}

/// tanh(s)/s with the removable singularity handled by its Taylor series.
pub fn tanh_ratio(s: f64) -> f64 {
    let s = s.abs();
    if s < 1e-8 {
        let s2 = s * s;
        1.0 - s2 / 3.0 + 2.0 * s2 * s2 / 15.0
    } else {
        s.tanh() / s
    }
}

/// c_ww(k)^2 = tanh(sqrt(mu) k) / (sqrt(mu) k).
pub fn cww2(k: f64, mu: f64) -> f64 {
    tanh_ratio(mu.sqrt() * k)
}

pub fn phase_speed_ww(k: f64, mu: f64) -> f64 {
    cww2(k, mu).sqrt()
}

pub fn phase_speed_abcd(k: f64, mu: f64, a: f64, b: f64, c: f64, d: f64) -> Result<f64> {
    let k2 = mu * k * k;
    let den_b = 1.0 + b * k2;
    let den_d = 1.0 + d * k2;
    if den_b <= 0.0 || den_d <= 0.0 {
        return Err(Error::IllPosedMode { k });
    }
    let c2 = (1.0 - a * k2) * (1.0 - c * k2) / (den_b * den_d);
    if c2 < 0.0 {
        return Err(Error::IllPosedMode { k });
    }
    Ok(c2)
}

pub fn phase_speed_ik(k: f64, mu: f64) -> f64 {
    let x = mu * k * k;
    (1.0 + x / 15.0) / (1.0 + 2.0 * x / 5.0)
}

/// Taylor coefficients of tanh(s)/s in powers of s^2.
pub fn tanh_ratio_taylor(count: usize) -> Vec<f64> {
    // (sinh x / x) / cosh x by power series division in x^2
    let mut fact = vec![1.0f64; 2 * count + 2];
    for i in 1..fact.len() {
        fact[i] = fact[i - 1] * i as f64;
    }
    let mut c: Vec<f64> = Vec::with_capacity(count);
    for n in 0..count {
        let mut v = 1.0 / fact[2 * n + 1];
        for (k, ck) in c.iter().enumerate() {
            v -= ck / fact[2 * (n - k)];
        }
        c.push(v);
    }
    c
}

/// Numerator and denominator coefficients (ascending) of the [l/m] Pade
/// approximant of the series `c`, with denominator normalized to q0 = 1.
pub fn pade(c: &[f64], l: usize, m: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if c.len() < l + m + 1 {
        return Err(Error::InvalidParams("not enough Taylor coefficients".into()));
    }
    let coef = |i: isize| if i < 0 { 0.0 } else { c[i as usize] };
    let mut q = vec![1.0];
    if m > 0 {
        let a = DMatrix::from_fn(m, m, |r, s| coef((l + 1 + r) as isize - (s + 1) as isize));
        let rhs = DVector::from_fn(m, |r, _| -coef((l + 1 + r) as isize));
        let sol = a.lu().solve(&rhs).ok_or_else(|| Error::SolveFailure("singular Pade system".into()))?;
        q.extend(sol.iter());
    }
    let p = (0..=l)
        .map(|i| (0..=i.min(m)).map(|j| q[j] * coef(i as isize - j as isize)).sum())
        .collect();
    Ok((p, q))
}

fn poly(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &v| acc * x + v)
}

/// The [2/2] Pade approximant (in k) of c_ww^2, evaluated at x = mu k^2.
pub fn pade22_cww2(x: f64) -> f64 {
    let taylor = tanh_ratio_taylor(3);
    let (p, q) = pade(&taylor, 1, 1).expect("Pade system of tanh(s)/s is regular");
    poly(&p, x) / poly(&q, x)
}

/// T_jk = -l_j^3 delta_jk / 6 + l_j l_k (l_max(j,k)/2 + sum_{m > max(j,k)} l_m).
pub fn build_t_matrix(l: &[f64]) -> Result<DMatrix<f64>> {
    check_fractions(l)?;
    let n = l.len();
    let mut tail = vec![0.0; n + 1];
    for j in (0..n).rev() {
        tail[j] = tail[j + 1] + l[j];
    }
    Ok(DMatrix::from_fn(n, n, |j, k| {
        let m = j.max(k);
        let mut t = l[j] * l[k] * (0.5 * l[m] + tail[m + 1]);
        if j == k {
            t -= l[j].powi(3) / 6.0;
        }
        t
    }))
}

/// All c^2 roots of c^2 (diag(l) + mu k^2 T) V = l l^T V, sorted descending.
pub fn phase_speed_multilayer(k: f64, mu: f64, l: &[f64]) -> Result<Vec<f64>> {
    let t = build_t_matrix(l)?;
    let n = l.len();
    let b = DMatrix::from_diagonal(&DVector::from_column_slice(l)) + t * (mu * k * k);
    let chol = b.cholesky().ok_or_else(|| Error::EigenFailure("mode matrix not positive definite".into()))?;
    let lv = DVector::from_column_slice(l);
    let y = chol.l().solve_lower_triangular(&lv).ok_or_else(|| Error::EigenFailure("triangular solve".into()))?;
    let c = &y * y.transpose();
    let eig = nalgebra::SymmetricEigen::try_new(c, 1e-15, 1000)
        .ok_or_else(|| Error::EigenFailure("symmetric eigensolver did not converge".into()))?;
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    if vals.len() != n || vals.iter().any(|v| !v.is_finite()) {
        return Err(Error::EigenFailure("non-finite eigenvalue".into()));
    }
    vals.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(vals)
}

/// Phase speed c (not squared) of the unidirectional models.
pub fn phase_speed_scalar(spec: &DispersionSpec, k: f64, mu: f64) -> Result<f64> {
    let k2 = mu * k * k;
    match spec {
        DispersionSpec::KdV => Ok(1.0 - k2 / 6.0),
        DispersionSpec::Bbm => Ok(1.0 / (1.0 + k2 / 6.0)),
        DispersionSpec::KdVBbmFamily { p } => {
            let den = 1.0 + (1.0 / 6.0 - p) * k2;
            if den <= 0.0 {
                return Err(Error::IllPosedMode { k });
            }
            Ok((1.0 - p * k2) / den)
        }
        DispersionSpec::Whitham => Ok(phase_speed_ww(k, mu)),
        other => Err(Error::Unsupported(format!("{} is not a scalar model", other.name()))),
    }
}

/// One row of a dispersion table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DispersionRow {
    pub model: String,
    pub mu: f64,
    pub k: f64,
    pub c2_model: f64,
    pub c2_ww: f64,
    pub abs_error: f64,
}

pub fn dispersion_table(spec: &DispersionSpec, mu: f64, kmax: f64, samples: usize) -> Result<Vec<DispersionRow>> {
    spec.validate()?;
    if samples < 2 || !(kmax > 0.0) {
        return Err(Error::InvalidParams("need kmax > 0 and at least 2 samples".into()));
    }
    (0..samples)
        .map(|i| {
            let k = kmax * i as f64 / (samples - 1) as f64;
            let c2_model = spec.c2(k, mu)?;
            let c2_ww = cww2(k, mu);
            Ok(DispersionRow { model: spec.name(), mu, k, c2_model, c2_ww, abs_error: (c2_model - c2_ww).abs() })
        })
        .collect()
}
