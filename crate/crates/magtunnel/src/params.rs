//! Parameter ledger: (λ, M, D, ȳ) and the derived δ, τ, d and sophon centers.

use crate::error::{Error, Result};
use crate::point::Point;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelParams {
    pub lambda: f64,
    #[serde(rename = "M")]
    pub m: f64,
    #[serde(rename = "D")]
    pub d: f64,
    pub ybar: f64,
    pub nu_max: usize,
    /// Support radius of the planet profile.
    pub r0: f64,
}

impl ModelParams {
    pub fn new(lambda: f64, m: f64, d: f64, ybar: f64) -> Self {
        ModelParams { lambda, m, d, ybar, nu_max: 4, r0: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |s: String| Err(Error::InvalidParameter(s));
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return bad(format!("lambda must be positive, got {}", self.lambda));
        }
        if !(self.m > 0.0 && self.m.is_finite()) {
            return bad(format!("M must be positive, got {}", self.m));
        }
        if !(self.d > 0.0 && self.d.is_finite()) {
            return bad(format!("D must be positive, got {}", self.d));
        }
        if !(0.0..=1.0).contains(&self.ybar) {
            return bad(format!("ybar must lie in [0, 1], got {}", self.ybar));
        }
        if !(1..=4).contains(&self.nu_max) {
            return bad(format!("nu_max must be in 1..=4, got {}", self.nu_max));
        }
        if !(self.r0 > 0.0 && self.r0.is_finite()) {
            return bad(format!("r0 must be positive, got {}", self.r0));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct DeskOverrides {
    pub delta_override: Option<f64>,
    pub tau_override: Option<f64>,
    pub d1_override: Option<f64>,
}

impl DeskOverrides {
    pub fn any(&self) -> bool {
        self.delta_override.is_some() || self.tau_override.is_some() || self.d1_override.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerivedParams {
    pub delta: f64,
    pub tau: f64,
    pub d1: f64,
    pub centers: Vec<Point>,
    /// `ln δ` and `ln τ` from the closed forms, finite even when δ, τ underflow.
    pub ln_delta_exact: f64,
    pub ln_tau_exact: f64,
    pub moderate_regime: bool,
}

impl DerivedParams {
    /// Half-separation vector `d = (d1, 0)`.
    pub fn d(&self) -> Point {
        Point::new(self.d1, 0.0)
    }
}

pub fn ln_delta(p: &ModelParams) -> f64 {
    -p.m * p.lambda * p.d.powf(1.5)
}

pub fn ln_tau(p: &ModelParams) -> f64 {
    -(p.lambda / 4.0) * (2.0 * p.d.powf(2.5) - 3.0 * p.d * p.d)
}

/// Sophon centers ζ₁=(D,ȳ), ζ₂=(D,−ȳ), ζ₃=(−D,−ȳ), ζ₄=(−D,ȳ), truncated to `nu_max`.
///
/// Accepts any real ȳ so that the ȳ ↦ −ȳ reflection can be probed.
pub fn sophon_centers(d: f64, ybar: f64, nu_max: usize) -> Vec<Point> {
    [
        Point::new(d, ybar),
        Point::new(d, -ybar),
        Point::new(-d, -ybar),
        Point::new(-d, ybar),
    ]
    .into_iter()
    .take(nu_max)
    .collect()
}

pub fn derive_parameters(p: &ModelParams, o: &DeskOverrides) -> Result<DerivedParams> {
    p.validate()?;
    for (name, v) in [
        ("delta_override", o.delta_override),
        ("tau_override", o.tau_override),
        ("d1_override", o.d1_override),
    ] {
        if let Some(v) = v {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
    }
    let ln_d = ln_delta(p);
    let ln_t = ln_tau(p);
    Ok(DerivedParams {
        delta: o.delta_override.unwrap_or(ln_d.exp()),
        tau: o.tau_override.unwrap_or(ln_t.exp()),
        d1: o.d1_override.unwrap_or(p.d.powf(1.5) / 2.0),
        centers: sophon_centers(p.d, p.ybar, p.nu_max),
        ln_delta_exact: ln_d,
        ln_tau_exact: ln_t,
        moderate_regime: o.any(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderingReport {
    /// `2·d1 / D`; equals `D^{1/2}` without overrides.
    pub separation_ratio: f64,
    pub well_separated: bool,
    /// `ln(τ δ²)` for the δ, τ actually in use.
    pub ln_tau_delta2: f64,
    /// Window edges for `ln(τδ²)` with the unquantified `C λ D^{3/2}` terms dropped.
    pub window_lower: f64,
    pub window_upper: f64,
    pub lower_margin: f64,
    pub upper_margin: f64,
    pub in_window: bool,
    pub moderate_regime: bool,
    pub verdict: String,
}

/// Separation ratio at which the wells count as well separated.
pub const WELL_SEPARATED_RATIO: f64 = 5.0;

/// Diagnostic only: never fails.
///
/// The admissible window is `−(λ/2)D^{5/2} + (λ/2)D² ≪ ln(τδ²) ≪ −(λ/2)D^{5/2} + λD²`.
pub fn check_ordering(p: &ModelParams, dp: &DerivedParams) -> OrderingReport {
    let separation_ratio = 2.0 * dp.d1 / p.d;
    let ln_tau_delta2 = if dp.moderate_regime {
        dp.tau.ln() + 2.0 * dp.delta.ln()
    } else {
        dp.ln_tau_exact + 2.0 * dp.ln_delta_exact
    };
    let d52 = p.d.powf(2.5);
    let d2 = p.d * p.d;
    let window_lower = -(p.lambda / 2.0) * d52 + (p.lambda / 2.0) * d2;
    let window_upper = -(p.lambda / 2.0) * d52 + p.lambda * d2;
    let lower_margin = ln_tau_delta2 - window_lower;
    let upper_margin = window_upper - ln_tau_delta2;
    let in_window = lower_margin > 0.0 && upper_margin > 0.0;
    let verdict = if dp.moderate_regime {
        "outside asymptotic window (moderate regime, margins informational)".to_string()
    } else if in_window {
        "inside asymptotic window".to_string()
    } else {
        "outside asymptotic window".to_string()
    };
    OrderingReport {
        separation_ratio,
        well_separated: separation_ratio >= WELL_SEPARATED_RATIO,
        ln_tau_delta2,
        window_lower,
        window_upper,
        lower_margin,
        upper_margin,
        in_window,
        moderate_regime: dp.moderate_regime,
        verdict,
    }
}
