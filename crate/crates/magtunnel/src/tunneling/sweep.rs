//! ȳ sweeps and the bisection search for a vanishing splitting.

use super::{double_well_report_from, radial_reference, RadialReference, TunnelingConfig, TunnelingReport};
use crate::error::{Error, Result};
use crate::potential::WellKind;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub ybar: f64,
    pub report: Option<TunnelingReport>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSummary {
    pub succeeded: usize,
    pub failed: usize,
    /// Linear-interpolated zeros of S between consecutive successful points.
    pub crossings: Vec<f64>,
    /// Sign-change brackets of S, `[lo, hi]`.
    pub brackets: Vec<[f64; 2]>,
    /// Zeros of `cos(λ d1 ȳ)` inside the swept range.
    pub predicted_crossings: Vec<f64>,
    /// `π / (λ d1)`.
    pub reference_spacing: f64,
    /// Mean spacing of the crossings divided by `reference_spacing`.
    pub spacing_ratio: Option<f64>,
    /// Least-squares `S ≈ A cos(λ d1 ȳ) + B`.
    pub cos_fit_amplitude: Option<f64>,
    pub cos_fit_offset: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
    pub summary: SweepSummary,
}

fn check_ybar(y: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&y) {
        return Err(Error::InvalidParameter(format!("ybar must lie in [0, 1], got {y}")));
    }
    Ok(())
}

fn radial_for(cfg: &TunnelingConfig) -> Result<RadialReference> {
    let spec = cfg.potential(WellKind::SingleCentered)?;
    radial_reference(&spec, cfg.grid, cfg.phase_lambda(), &cfg.single_well_request())
}

fn thread_pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))
}

/// Full report at each ȳ, computed on up to `jobs` threads. Points are
/// independent and come back in input order; per-point failures are recorded.
pub fn sweep_ybar(cfg: &TunnelingConfig, ybars: &[f64], jobs: usize) -> Result<SweepResult> {
    if ybars.is_empty() {
        return Err(Error::InvalidParameter("empty ybar list".into()));
    }
    for &y in ybars {
        check_ybar(y)?;
    }
    let radial = radial_for(cfg)?;
    let points: Vec<SweepPoint> = thread_pool(jobs)?.install(|| {
        ybars
            .par_iter()
            .map(|&y| match double_well_report_from(&cfg.with_ybar(y), &radial) {
                Ok(r) => SweepPoint { ybar: y, report: Some(r), error: None },
                Err(e) => SweepPoint { ybar: y, report: None, error: Some(e.to_string()) },
            })
            .collect()
    });
    let d1 = cfg.derived()?.d1;
    let summary = summarize(&points, cfg.params.lambda * d1);
    Ok(SweepResult { points, summary })
}

fn summarize(points: &[SweepPoint], k: f64) -> SweepSummary {
    let ok: Vec<(f64, &TunnelingReport)> = points.iter().filter_map(|p| p.report.as_ref().map(|r| (p.ybar, r))).collect();
    let mut crossings = Vec::new();
    let mut brackets = Vec::new();
    for w in ok.windows(2) {
        let ((y0, r0), (y1, r1)) = (w[0], w[1]);
        if r0.s * r1.s < 0.0 || (r0.s == 0.0 && r1.s != 0.0) {
            brackets.push([y0, y1]);
            crossings.push(y0 + (y1 - y0) * r0.s / (r0.s - r1.s));
        }
    }
    let reference_spacing = PI / k;
    let (lo, hi) = points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.ybar), b.max(p.ybar)));
    let predicted_crossings = (0..)
        .map(|n| (n as f64 + 0.5) * reference_spacing)
        .take_while(|&y| y <= hi)
        .filter(|&y| y >= lo)
        .collect();
    let spacing_ratio = (crossings.len() >= 2).then(|| {
        let span = crossings[crossings.len() - 1] - crossings[0];
        span / (crossings.len() - 1) as f64 / reference_spacing
    });

    let (mut cos_fit_amplitude, mut cos_fit_offset) = (None, None);
    if ok.len() >= 2 {
        let n = ok.len() as f64;
        let (mut sc, mut ss, mut scc, mut scs) = (0.0, 0.0, 0.0, 0.0);
        for (y, r) in &ok {
            let c = (k * y).cos();
            sc += c;
            ss += r.s;
            scc += c * c;
            scs += c * r.s;
        }
        let det = n * scc - sc * sc;
        if det.abs() > 1e-12 * n * n {
            let a = (n * scs - sc * ss) / det;
            cos_fit_amplitude = Some(a);
            cos_fit_offset = Some((ss - a * sc) / n);
        }
    }
    SweepSummary {
        succeeded: ok.len(),
        failed: points.len() - ok.len(),
        crossings,
        brackets,
        predicted_crossings,
        reference_spacing,
        spacing_ratio,
        cos_fit_amplitude,
        cos_fit_offset,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Degeneracy {
    pub ybar_star: f64,
    pub report_star: TunnelingReport,
    pub report_lo: TunnelingReport,
    pub report_hi: TunnelingReport,
    /// Bracket width after each bisection step.
    pub widths: Vec<f64>,
    pub iterations: usize,
    /// `"splitting"` when `|S| ≤ 10·tol·|e|` ended the search, `"width"` otherwise.
    pub stopped_on: String,
    /// `parity0` has opposite signs at the two bracket ends.
    pub parity_flip: bool,
}

/// Smallest bracket width the bisection goes down to.
pub const BISECTION_WIDTH: f64 = 1e-4;

/// Bisection on `S(ȳ)` inside `[lo, hi]`.
pub fn find_degeneracy(cfg: &TunnelingConfig, bracket: [f64; 2]) -> Result<Degeneracy> {
    let [lo, hi] = bracket;
    check_ybar(lo)?;
    check_ybar(hi)?;
    if !(lo < hi) {
        return Err(Error::InvalidParameter(format!("bracket [{lo}, {hi}] is empty")));
    }
    let radial = radial_for(cfg)?;
    let at = |y: f64| double_well_report_from(&cfg.with_ybar(y), &radial);
    let report_lo = at(lo)?;
    let report_hi = at(hi)?;
    if report_lo.s * report_hi.s > 0.0 {
        return Err(Error::NoSignChange { lo, hi, s_lo: report_lo.s, s_hi: report_hi.s });
    }
    let (mut a, mut b) = (lo, hi);
    let mut s_a = report_lo.s;
    let mut widths = Vec::new();
    let mut best: Option<(f64, TunnelingReport)> = None;
    let stopped_on;
    loop {
        let m = 0.5 * (a + b);
        let r = at(m)?;
        let small = r.s.abs() <= 10.0 * cfg.solver.tol * r.e.abs();
        if best.as_ref().is_none_or(|(_, b)| r.delta < b.delta) {
            best = Some((m, r.clone()));
        }
        if small {
            stopped_on = "splitting";
            widths.push(b - a);
            break;
        }
        if (r.s < 0.0) == (s_a < 0.0) {
            a = m;
            s_a = r.s;
        } else {
            b = m;
        }
        widths.push(b - a);
        if b - a <= BISECTION_WIDTH {
            stopped_on = "width";
            break;
        }
    }
    let (ybar_star, report_star) = best.expect("at least one bisection step");
    Ok(Degeneracy {
        ybar_star,
        parity_flip: report_lo.parity0 * report_hi.parity0 < 0.0,
        report_star,
        report_lo,
        report_hi,
        iterations: widths.len(),
        widths,
        stopped_on: stopped_on.into(),
    })
}
