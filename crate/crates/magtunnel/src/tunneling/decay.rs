//! Gaussian decay rate of a radial state outside the potential support.

use crate::error::{Error, Result};
use crate::grid::GridField;
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

/// Samples below this fraction of `max |φ|` are discarded.
pub const DECAY_AMPLITUDE_FLOOR: f64 = 1e-12;

const MIN_SAMPLES: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayFit {
    /// Coefficient of `dist²` in the fit of `ln|φ|`; compare with `−λ/4`.
    pub slope: f64,
    /// Coefficients of `1`, `dist`, `ln r` in the same fit.
    pub intercept: f64,
    pub linear: f64,
    pub log_r: f64,
    /// Slope of the two-parameter fit `ln|φ| ≈ a + s·dist²`, for reference.
    pub plain_slope: f64,
    pub samples: usize,
    pub rms_residual: f64,
    pub annulus: [f64; 2],
}

fn least_squares(a: DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    if svd.singular_values.min() <= 1e-12 * smax {
        return Err(Error::FitRejected("regressors are collinear on the annulus".into()));
    }
    svd.solve(b, 0.0).map_err(|e| Error::FitRejected(e.to_string()))
}

/// Fit `ln|φ(x)| ≈ c₀ + c₁·dist + s·dist² + c₂·ln r` over lattice points with
/// `r1 ≤ r ≤ r2`, `dist = r − support_radius`, centred at the origin.
///
/// The `dist` and `ln r` terms absorb the prefactor of the Gaussian tail,
/// which otherwise biases the `dist²` coefficient.
pub fn gaussian_decay_fit(phi: &GridField, support_radius: f64, annulus: [f64; 2]) -> Result<DecayFit> {
    let [r1, r2] = annulus;
    if !(r1 > support_radius && r2 > r1) {
        return Err(Error::InvalidParameter(format!(
            "annulus [{r1}, {r2}] must lie outside the support radius {support_radius}"
        )));
    }
    let max = phi.values.iter().fold(0.0f64, |m, v| m.max(v.norm()));
    let mut rows = Vec::new();
    for (p, v) in phi.grid.points().zip(&phi.values) {
        let r = p.norm();
        let a = v.norm();
        if r >= r1 && r <= r2 && a > DECAY_AMPLITUDE_FLOOR * max {
            rows.push((r, a.ln()));
        }
    }
    if rows.len() < MIN_SAMPLES {
        return Err(Error::FitRejected(format!("insufficient samples above the floor: {}", rows.len())));
    }
    let mean = rows.iter().map(|r| r.1).sum::<f64>() / rows.len() as f64;
    let var = rows.iter().map(|r| (r.1 - mean).powi(2)).sum::<f64>() / rows.len() as f64;
    if var <= 1e-24 * mean.abs().max(1.0).powi(2) {
        return Err(Error::FitRejected("zero variance in ln|phi|".into()));
    }

    let m = rows.len();
    let b = DVector::from_iterator(m, rows.iter().map(|r| r.1));
    let dist = |r: f64| r - support_radius;
    let full = DMatrix::from_fn(m, 4, |i, j| {
        let r = rows[i].0;
        match j {
            0 => 1.0,
            1 => dist(r),
            2 => dist(r).powi(2),
            _ => r.ln(),
        }
    });
    let c = least_squares(full.clone(), &b)?;
    let resid = &full * &c - &b;
    let plain = DMatrix::from_fn(m, 2, |i, j| if j == 0 { 1.0 } else { dist(rows[i].0).powi(2) });
    let cp = least_squares(plain, &b)?;
    Ok(DecayFit {
        slope: c[2],
        intercept: c[0],
        linear: c[1],
        log_r: c[3],
        plain_slope: cp[1],
        samples: m,
        rms_residual: (resid.norm_squared() / m as f64).sqrt(),
        annulus,
    })
}
