//! `magtunnel` command-line front end.

mod config;
mod report;

use clap::{Parser, Subcommand};
use config::{ConfigError, RunConfig, WellChoice};
use magtunnel::eigensolve::lowest_eigenpairs;
use magtunnel::grid::{inner, parity, GridField};
use magtunnel::kernels::{kernel_bounds, sho_resolvent_kernel, sho_resolvent_series, KernelQuery, SERIES_MAX_ARGUMENT};
use magtunnel::operator::MagneticOperator;
use magtunnel::params::{check_ordering, derive_parameters};
use magtunnel::potential::WellKind;
use magtunnel::tunneling::{
    auto_grid, double_well_report, find_degeneracy, gaussian_decay_fit, radial_reference, sweep_ybar,
};
use magtunnel::{Error, Point};
use serde_json::{json, Value};
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "magtunnel", version, about = "Magnetic double-well tunneling laboratory")]
struct Cli {
    /// Worker threads for sweeps.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    /// Omit the timestamp so identical runs give identical JSON.
    #[arg(long, global = true)]
    no_timestamp: bool,
    /// Write the JSON report here (tables go next to it with a `.csv` extension).
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// δ, τ, d1, sophon centers and ordering diagnostics.
    DeriveParams { config: Option<PathBuf> },
    /// Kernel bounds and series agreement on a fixed sample lattice.
    KernelCheck { config: Option<PathBuf> },
    /// Low-lying spectrum of the configured well.
    Spectrum { config: Option<PathBuf> },
    /// Tunneling report at every ȳ of the configured list.
    Sweep { config: Option<PathBuf> },
    /// Bisection for ȳ with vanishing splitting inside `bracket`.
    FindDegeneracy { config: Option<PathBuf> },
    /// Gaussian decay rate of the radial single-well state.
    DecayFit { config: Option<PathBuf> },
}

enum Failure {
    Usage(String),
    Numerical(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NotConverged(_) | Error::FitRejected(_) => Failure::Numerical(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(format!("write failed: {e}"))
    }
}

/// What a command produced: the JSON result, an optional table, a short
/// human summary and whether its numerical checks passed.
struct Outcome {
    result: Value,
    table: Option<String>,
    summary: String,
    ok: bool,
}

fn load(path: &Option<PathBuf>) -> Result<RunConfig, Failure> {
    Ok(match path {
        Some(p) => config::parse_file(p)?,
        None => config::parse_str("")?,
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, path) = match &cli.command {
        Command::DeriveParams { config } => ("derive-params", config),
        Command::KernelCheck { config } => ("kernel-check", config),
        Command::Spectrum { config } => ("spectrum", config),
        Command::Sweep { config } => ("sweep", config),
        Command::FindDegeneracy { config } => ("find-degeneracy", config),
        Command::DecayFit { config } => ("decay-fit", config),
    };
    let run = || -> Result<bool, Failure> {
        let cfg = load(path)?;
        let out = match cli.command {
            Command::DeriveParams { .. } => derive_params(&cfg)?,
            Command::KernelCheck { .. } => kernel_check(&cfg)?,
            Command::Spectrum { .. } => spectrum(&cfg)?,
            Command::Sweep { .. } => sweep(&cfg, cli.jobs)?,
            Command::FindDegeneracy { .. } => degeneracy(&cfg)?,
            Command::DecayFit { .. } => decay_fit(&cfg)?,
        };
        let doc = report::envelope(name, &cfg, !cli.no_timestamp, out.result);
        let json = report::to_pretty(&doc);
        match &cli.output {
            Some(p) => {
                std::fs::write(p, &json)?;
                if let Some(t) = &out.table {
                    std::fs::write(report::csv_path(p), t)?;
                }
                print!("{}", out.summary);
            }
            None => {
                eprint!("{}", out.summary);
                let mut stdout = std::io::stdout().lock();
                // Sweeps are table-first; everything else emits the JSON document.
                match (&out.table, name) {
                    (Some(t), "sweep") => stdout.write_all(t.as_bytes())?,
                    _ => stdout.write_all(json.as_bytes())?,
                }
            }
        }
        Ok(out.ok)
    };
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Numerical(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}

fn derive_params(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let t = &cfg.tunneling;
    let dp = derive_parameters(&t.params, &t.overrides)?;
    let ord = check_ordering(&t.params, &dp);
    let snapped = t.grid.snap_half_separation(dp.d1);
    let mut summary = String::new();
    summary += &format!("delta      {:.6e}   (ln {:.6})\n", dp.delta, dp.delta.ln());
    summary += &format!("tau        {:.6e}   (ln {:.6})\n", dp.tau, dp.tau.ln());
    summary += &format!("ln delta (closed form) {:.6}\n", dp.ln_delta_exact);
    summary += &format!("ln tau   (closed form) {:.6}\n", dp.ln_tau_exact);
    summary += &format!("d1         {:.6}   (snapped to grid: {:.6})\n", dp.d1, snapped);
    for (i, c) in dp.centers.iter().enumerate() {
        summary += &format!("zeta_{}     ({:.6}, {:.6})\n", i + 1, c.x, c.y);
    }
    summary += &format!("separation ratio {:.4}  well separated: {}\n", ord.separation_ratio, ord.well_separated);
    summary += &format!(
        "ln(tau delta^2) {:.4} window [{:.4}, {:.4}]  {}\n",
        ord.ln_tau_delta2, ord.window_lower, ord.window_upper, ord.verdict
    );
    Ok(Outcome {
        result: json!({ "params": t.params, "overrides": t.overrides, "derived": dp, "d1_snapped": snapped, "ordering": ord }),
        table: None,
        summary,
        ok: true,
    })
}

/// ω values, `z/ω` ratios and radii of the documented sample lattice.
const KC_OMEGA: [f64; 5] = [1.0, 2.0, 4.0, 6.0, 8.0];
const KC_Z_RATIO: [f64; 6] = [-4.0, -1.0, 0.0, 0.5, 0.9, 1.0];
const KC_RADIUS: [f64; 5] = [0.1, 0.4, 1.0, 1.8, 2.5];

fn kernel_check(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let quad = cfg.tunneling.quad;
    let mut samples = Vec::new();
    let mut skipped = Vec::new();
    let (mut violations, mut worst) = (0usize, 0.0f64);
    for w in KC_OMEGA {
        for zr in KC_Z_RATIO {
            for r in KC_RADIUS {
                let z = zr * w;
                let q = KernelQuery::new(w, z, Point::new(r, 0.0));
                if z >= w {
                    skipped.push(json!({ "omega": w, "z": z, "r": r, "note": "z >= omega: no resolvent" }));
                    continue;
                }
                let k = sho_resolvent_kernel(&q, &quad)?;
                let (lo, hi) = kernel_bounds(&q)?;
                let inside = lo <= k * (1.0 + 1e-12) && k <= hi * (1.0 + 1e-12);
                violations += usize::from(!inside);
                let series = if 0.5 * w * r * r <= SERIES_MAX_ARGUMENT {
                    let s = sho_resolvent_series(&q, cfg.series_terms)?;
                    worst = worst.max((k - s).abs() / s);
                    Some(s)
                } else {
                    None
                };
                samples.push(json!({
                    "omega": w, "z": z, "r": r, "K": k, "lower": lo, "upper": hi,
                    "series": series, "inside_bounds": inside,
                }));
            }
        }
    }
    let ok = violations == 0 && worst <= cfg.kernel_agreement_tol;
    let summary = format!(
        "{} samples, {} skipped, {} bound violations, max series disagreement {:.3e} (limit {:.1e})\n",
        samples.len(),
        skipped.len(),
        violations,
        worst,
        cfg.kernel_agreement_tol
    );
    Ok(Outcome {
        result: json!({
            "samples": samples, "skipped": skipped, "violations": violations,
            "max_series_disagreement": worst, "agreement_tol": cfg.kernel_agreement_tol, "passed": ok,
        }),
        table: None,
        summary,
        ok,
    })
}

/// Fraction of `|ψ|²` in the outer 20% frame of the box.
fn boundary_weight(f: &GridField) -> f64 {
    let g = f.grid;
    let edge = 0.8 * g.half_width;
    let (mut outer, mut total) = (0.0, 0.0);
    for (p, v) in g.points().zip(&f.values) {
        let a = v.norm_sqr();
        total += a;
        if p.x.abs() > edge || p.y.abs() > edge {
            outer += a;
        }
    }
    outer / total
}

fn spectrum(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let t = &cfg.tunneling;
    let lam = t.phase_lambda();
    let op = match cfg.well {
        WellChoice::Free => MagneticOperator::free(t.grid, lam),
        WellChoice::Sho => {
            let w = cfg.sho_omega;
            MagneticOperator::new(t.grid, 0.0, |x| 0.25 * w * w * x.norm_sqr())
        }
        WellChoice::Single => t.operator(&t.potential(WellKind::SingleCentered)?),
        WellChoice::Double => t.operator(&t.potential(WellKind::Double)?),
    };
    let r = lowest_eigenpairs(&op, &t.solver)?;
    let mut parities = Vec::new();
    for f in &r.eigenvectors {
        parities.push(match cfg.well {
            WellChoice::Double => Some(inner(f, &parity(f))?.re),
            _ => None,
        });
    }
    let boundary: Vec<f64> = r.eigenvectors.iter().map(boundary_weight).collect();
    let mut summary = String::new();
    for (i, e) in r.eigenvalues.iter().enumerate() {
        summary += &format!("E{i} = {e:.12}  boundary weight {:.2e}", boundary[i]);
        if let Some(p) = parities[i] {
            summary += &format!("  parity {p:+.6}");
        }
        summary.push('\n');
    }
    let mut ok = r.converged;
    let mut splitting = Value::Null;
    if cfg.well == WellChoice::Double {
        let rep = double_well_report(t)?;
        summary += &format!(
            "Delta = {:.6e}, S = {:.6e}, |Delta - |S|| = {:.2e}, identity holds: {}\n",
            rep.delta,
            rep.s,
            (rep.delta - rep.s.abs()).abs(),
            rep.split_identity_ok
        );
        ok &= rep.split_identity_ok && rep.sector_match_ok;
        splitting = serde_json::to_value(&rep).expect("report serializes");
    }
    Ok(Outcome {
        table: Some(report::spectrum_csv(&r.eigenvalues, &parities, &boundary)),
        result: json!({
            "well": format!("{:?}", cfg.well).to_lowercase(),
            "eigenvalues": r.eigenvalues,
            "residuals": r.residuals,
            "parity": parities,
            "boundary_weight": boundary,
            "iterations": r.iterations,
            "converged": r.converged,
            "method": r.method,
            "double_well_report": splitting,
        }),
        summary,
        ok,
    })
}

fn sweep(cfg: &RunConfig, jobs: usize) -> Result<Outcome, Failure> {
    if cfg.ybars.is_empty() {
        return Err(Failure::Usage("empty ybar list".into()));
    }
    let res = sweep_ybar(&cfg.tunneling, &cfg.ybars, jobs)?;
    let total = res.points.len();
    let s = &res.summary;
    let ok = s.succeeded * 10 >= total * 9;
    let mut summary = format!("{}/{} points succeeded\n", s.succeeded, total);
    summary += &format!("sign changes of S near ybar = {:?}\n", s.crossings);
    summary += &format!("predicted zeros of cos(lambda d1 ybar): {:?}\n", s.predicted_crossings);
    if let Some(r) = s.spacing_ratio {
        summary += &format!("crossing spacing / reference spacing = {r:.4}\n");
    }
    for p in res.points.iter().filter(|p| p.error.is_some()) {
        summary += &format!("ybar = {}: {}\n", p.ybar, p.error.as_deref().unwrap_or(""));
    }
    Ok(Outcome {
        table: Some(report::sweep_csv(&res)),
        result: serde_json::to_value(&res).expect("sweep serializes"),
        summary,
        ok,
    })
}

fn degeneracy(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let bracket = cfg.bracket.ok_or_else(|| Failure::Usage("find-degeneracy needs `bracket = lo,hi`".into()))?;
    let d = find_degeneracy(&cfg.tunneling, bracket)?;
    let r = &d.report_star;
    let limit = 50.0 * r.tol * r.e.abs();
    let summary = format!(
        "ybar* = {:.8}  Delta(ybar*) = {:.3e} (limit {:.3e})  S = {:.3e}\n\
         parity0 at {}: {:+.6}, at {}: {:+.6}  ({} bisection steps, stopped on {})\n",
        d.ybar_star,
        r.delta,
        limit,
        r.s,
        bracket[0],
        d.report_lo.parity0,
        bracket[1],
        d.report_hi.parity0,
        d.iterations,
        d.stopped_on
    );
    Ok(Outcome {
        ok: r.delta <= limit,
        result: serde_json::to_value(&d).expect("result serializes"),
        table: None,
        summary,
    })
}

fn decay_fit(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let fit_at = |lambda: f64| -> Result<(f64, magtunnel::tunneling::DecayFit, usize), Failure> {
        let mut t = cfg.tunneling.clone();
        t.params.lambda = lambda;
        if cfg.grid_auto {
            t.grid = auto_grid(&t.params, &t.overrides)?;
        }
        let spec = t.potential(WellKind::SingleCentered)?;
        let radial = radial_reference(&spec, t.grid, t.phase_lambda(), &t.single_well_request())?;
        let fit = gaussian_decay_fit(&radial.phi0, spec.planet.support_radius, cfg.annulus)?;
        Ok((radial.e0, fit, t.grid.n))
    };
    let lambda = cfg.tunneling.params.lambda;
    let (e0, fit, n) = fit_at(lambda)?;
    let reference = -lambda / 4.0;
    let mut summary = format!(
        "lambda = {lambda}: slope {:.6}, reference -lambda/4 = {reference:.6}, ratio {:.4}\n",
        fit.slope,
        fit.slope / reference
    );
    let mut compare = Value::Null;
    if let Some(l2) = cfg.decay_compare_lambda {
        let (e2, fit2, n2) = fit_at(l2)?;
        let ratio = fit2.slope / fit.slope;
        summary += &format!(
            "lambda = {l2}: slope {:.6}; slope ratio {:.4} (lambda ratio {:.4})\n",
            fit2.slope,
            ratio,
            l2 / lambda
        );
        compare = json!({ "lambda": l2, "e0": e2, "grid_n": n2, "fit": fit2, "slope_ratio": ratio, "lambda_ratio": l2 / lambda });
    }
    Ok(Outcome {
        result: json!({
            "lambda": lambda, "e0": e0, "grid_n": n, "fit": fit, "reference_slope": reference,
            "ratio_to_reference": fit.slope / reference, "compare": compare,
        }),
        table: None,
        summary,
        ok: true,
    })
}
