//! Acceptance run: one line per criterion, non-zero exit if any fails.

mod common;

use magtunnel::eigensolve::{dense_reference, lowest_eigenpairs, EigenRequest, Method};
use magtunnel::grid::{norm, Grid2D, GridField};
use magtunnel::kernels::{kernel_bounds, sho_resolvent_kernel, sho_resolvent_series, KernelQuery};
use magtunnel::operator::MagneticOperator;
use magtunnel::potential::WellKind;
use magtunnel::quadrature::QuadratureSpec;
use magtunnel::tunneling::{
    auto_grid, double_well_report, find_degeneracy, gaussian_decay_fit, omega_table, radial_reference,
    single_well_ground_from, sweep_ybar, OmegaOptions, TunnelingConfig, TunnelingReport,
};
use magtunnel::Point;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::process::ExitCode;
use std::time::Instant;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn failed(e: impl std::fmt::Display) -> Verdict {
    verdict(false, format!("error: {e}"))
}

fn within_time(v: Verdict, start: Instant, limit: f64) -> Verdict {
    let secs = start.elapsed().as_secs_f64();
    if secs > limit {
        return verdict(false, format!("{} (runtime {secs:.1} s exceeds {limit} s)", v.detail));
    }
    v
}

fn ybar_grid() -> Vec<f64> {
    (0..41).map(|i| i as f64 / 40.0).collect()
}

fn boundary_weight(f: &GridField) -> f64 {
    let edge = 0.8 * f.grid.half_width;
    let (mut outer, mut total) = (0.0, 0.0);
    for (p, v) in f.grid.points().zip(&f.values) {
        total += v.norm_sqr();
        if p.x.abs() > edge || p.y.abs() > edge {
            outer += v.norm_sqr();
        }
    }
    outer / total
}

fn landau_anchor() -> Verdict {
    let start = Instant::now();
    let grid = Grid2D::new(201, 8.0).unwrap();
    let op = MagneticOperator::free(grid, 4.0);
    // The lowest level is ~160-fold near-degenerate on this box, so the
    // subspace iteration stalls at residuals ~1e-4; 1e-3 is far inside 2%.
    let req = EigenRequest { k: 12, tol: 1e-3, ..EigenRequest::default() };
    let r = match lowest_eigenpairs(&op, &req) {
        Ok(r) => r,
        Err(e) => return failed(e),
    };
    let near = r.eigenvalues.iter().filter(|e| (*e - 4.0).abs() <= 0.08).count();
    let stray = r
        .eigenvalues
        .iter()
        .zip(&r.eigenvectors)
        .filter(|(e, f)| **e > 4.5 && **e < 11.0 && boundary_weight(f) <= 1e-3)
        .count();
    let v = verdict(
        r.converged && near >= 10 && stray == 0,
        format!("{near}/{} eigenvalues within 2% of 4, {stray} bulk states in (4.5, 11)", r.eigenvalues.len()),
    );
    within_time(v, start, 60.0)
}

fn sho_anchor() -> Verdict {
    let start = Instant::now();
    let grid = Grid2D::new(161, 6.0).unwrap();
    let op = MagneticOperator::new(grid, 0.0, |x| 4.0 * x.norm_sqr());
    let req = EigenRequest { k: 4, tol: 1e-9, ..EigenRequest::default() };
    let r = match lowest_eigenpairs(&op, &req) {
        Ok(r) => r,
        Err(e) => return failed(e),
    };
    let want = [4.0, 8.0, 8.0, 12.0];
    let worst = r.eigenvalues.iter().zip(want).map(|(e, w)| (e - w).abs() / w).fold(0.0, f64::max);
    let v = verdict(r.converged && worst <= 0.01, format!("eigenvalues {:.4?}, worst relative error {worst:.2e}", r.eigenvalues));
    within_time(v, start, 60.0)
}

fn kernel_sandwich() -> Verdict {
    let start = Instant::now();
    let quad = QuadratureSpec::default();
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_611);
    let mut violations = 0;
    for _ in 0..100 {
        let w = rng.random_range(0.5..10.0);
        let z = w * rng.random_range(-4.0..0.99);
        let r = rng.random_range(0.02..4.0);
        let t: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let q = KernelQuery::new(w, z, Point::new(r * t.cos(), r * t.sin()));
        match (sho_resolvent_kernel(&q, &quad), kernel_bounds(&q)) {
            (Ok(k), Ok((lo, hi))) if lo < k && k < hi => {}
            _ => violations += 1,
        }
    }
    let (mut worst_series, mut worst_reference) = (0.0f64, 0.0f64);
    for _ in 0..50 {
        let w = rng.random_range(0.5..10.0);
        let z = w * rng.random_range(-4.0..0.99);
        let u_max = 19.0f64;
        let r = rng.random_range(0.02..(2.0 * u_max / w).sqrt());
        let q = KernelQuery::new(w, z, Point::new(r, 0.0));
        let k = match sho_resolvent_kernel(&q, &quad) {
            Ok(k) => k,
            Err(e) => return failed(e),
        };
        match sho_resolvent_series(&q, 200_000) {
            Ok(s) => worst_series = worst_series.max((k - s).abs() / s.abs()),
            Err(e) => return failed(e),
        }
        let reference = common::laplace_kernel(w, z, r);
        worst_reference = worst_reference.max((k - reference).abs() / reference);
    }
    let v = verdict(
        violations == 0 && worst_series <= 1e-6,
        format!(
            "{violations} bound violations in 100 samples; quadrature vs series max rel {worst_series:.2e} on 50 points \
             (vs Laplace reference {worst_reference:.2e})"
        ),
    );
    within_time(v, start, 30.0)
}

fn dense_equivalence() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    // 23×23: the grid needs odd n so that parity is an index reversal.
    let grid = Grid2D::new(23, 2.0).unwrap();
    let mut worst = 0.0f64;
    for trial in 0..20 {
        let lambda = rng.random_range(-6.0..6.0);
        let wells: Vec<(f64, f64, f64, f64)> = (0..3)
            .map(|_| {
                (
                    rng.random_range(-8.0..4.0),
                    rng.random_range(-1.5..1.5),
                    rng.random_range(-1.5..1.5),
                    rng.random_range(0.3..1.5),
                )
            })
            .collect();
        let op = MagneticOperator::new(grid, lambda, |x| {
            wells.iter().map(|&(a, cx, cy, s)| a * (-((x.x - cx).powi(2) + (x.y - cy).powi(2)) / (s * s)).exp()).sum()
        });
        let method = if trial % 2 == 0 { Method::ChebyshevFiltered { degree: 30 } } else { Method::Lobpcg };
        let req = EigenRequest { k: 4, tol: 1e-10, method, seed: trial, ..EigenRequest::default() };
        let it = match lowest_eigenpairs(&op, &req) {
            Ok(r) if r.converged => r.eigenvalues,
            Ok(r) => return verdict(false, format!("trial {trial} did not converge: {:?}", r.residuals)),
            Err(e) => return failed(e),
        };
        let dense = match dense_reference(&op) {
            Ok(d) => d,
            Err(e) => return failed(e),
        };
        for (a, b) in it.iter().zip(&dense) {
            worst = worst.max((a - b).abs());
        }
    }
    let v = verdict(worst <= 1e-8, format!("20 random potentials on 23x23, max |E_iter - E_dense| = {worst:.2e}"));
    within_time(v, start, 120.0)
}

fn rho_reality(r: &TunnelingReport) -> Verdict {
    let rho = r.hopping.rho;
    let im = rho.im.abs() / rho.re.abs();
    verdict(
        im <= 1e-8 && r.hopping.form_gap <= 1e-8,
        format!("rho = {:.6e} {:+.2e}i, |Im|/|rho| = {im:.2e}, form gap {:.2e}", rho.re, rho.im, r.hopping.form_gap),
    )
}

fn splitting_identities(r: &TunnelingReport) -> Verdict {
    let split = (r.delta - r.s.abs()).abs();
    let (lo, hi) = (r.e_even.min(r.e_odd), r.e_even.max(r.e_odd));
    let set = (r.e_0 - lo).abs().max((r.e_1 - hi).abs());
    verdict(
        split <= 2.0 * r.tol * r.e.abs() && set <= r.tol,
        format!(
            "|Delta - |S|| = {split:.2e} (limit {:.2e}), set mismatch {set:.2e} (limit {:.0e})",
            2.0 * r.tol * r.e.abs(),
            r.tol
        ),
    )
}

fn sign_change_and_degeneracy(cfg: &TunnelingConfig) -> Verdict {
    let start = Instant::now();
    let sweep = match sweep_ybar(cfg, &ybar_grid(), 4) {
        Ok(s) => s,
        Err(e) => return failed(e),
    };
    let Some(&bracket) = sweep.summary.brackets.first() else {
        return verdict(false, format!("no sign change of S in {} points", sweep.summary.succeeded));
    };
    let deg = match find_degeneracy(cfg, bracket) {
        Ok(d) => d,
        Err(e) => return failed(e),
    };
    let limit = 50.0 * cfg.solver.tol * deg.report_star.e.abs();
    let v = verdict(
        sweep.summary.failed == 0 && deg.report_star.delta <= limit && deg.parity_flip,
        format!(
            "sign changes near {:.4?}; ybar* = {:.6}, Delta = {:.2e} (limit {limit:.2e}), parity0 {:+.3} -> {:+.3}",
            sweep.summary.crossings, deg.ybar_star, deg.report_star.delta, deg.report_lo.parity0, deg.report_hi.parity0
        ),
    );
    within_time(v, start, 600.0)
}

fn non_magnetic_control(cfg: &TunnelingConfig) -> Verdict {
    let cfg = TunnelingConfig { magnetic: false, ..cfg.clone() };
    let sweep = match sweep_ybar(&cfg, &ybar_grid(), 4) {
        Ok(s) => s,
        Err(e) => return failed(e),
    };
    let reports: Vec<&TunnelingReport> = sweep.points.iter().filter_map(|p| p.report.as_ref()).collect();
    let bad = reports.iter().filter(|r| !(r.hopping.rho.re < 0.0 && r.s > 0.0)).count();
    let max_rho = reports.iter().map(|r| r.hopping.rho.re).fold(f64::NEG_INFINITY, f64::max);
    let min_s = reports.iter().map(|r| r.s).fold(f64::INFINITY, f64::min);
    verdict(
        reports.len() == 41 && bad == 0,
        format!("{} points, {bad} violations; max rho = {max_rho:.3e}, min S = {min_s:.3e}", reports.len()),
    )
}

fn decay_slope(lambda: f64, annulus: [f64; 2]) -> magtunnel::Result<f64> {
    let mut cfg = TunnelingConfig::standard_preset();
    cfg.params.lambda = lambda;
    cfg.grid = auto_grid(&cfg.params, &cfg.overrides)?;
    let spec = cfg.potential(WellKind::SingleCentered)?;
    let radial = radial_reference(&spec, cfg.grid, cfg.phase_lambda(), &cfg.single_well_request())?;
    Ok(gaussian_decay_fit(&radial.phi0, spec.planet.support_radius, annulus)?.slope)
}

fn gaussian_decay() -> Verdict {
    let annulus = [1.5, 3.0];
    let slopes: magtunnel::Result<Vec<f64>> = [6.0, 4.0, 8.0].iter().map(|&l| decay_slope(l, annulus)).collect();
    let [s6, s4, s8] = match slopes {
        Ok(s) => [s[0], s[1], s[2]],
        Err(e) => return failed(e),
    };
    let ratio6 = s6 / -1.5;
    let doubling = s8 / s4;
    verdict(
        (ratio6 - 1.0).abs() <= 0.15 && (doubling / 2.0 - 1.0).abs() <= 0.15,
        format!("slope(6) = {s6:.4} (ratio to -1.5: {ratio6:.3}); slope(8)/slope(4) = {doubling:.3}"),
    )
}

fn decomposition(cfg: &TunnelingConfig) -> Verdict {
    let spec = match cfg.potential(WellKind::SingleCentered) {
        Ok(s) => s,
        Err(e) => return failed(e),
    };
    let req = cfg.single_well_request();
    let lam = cfg.phase_lambda();
    let ws = match radial_reference(&spec, cfg.grid, lam, &req).and_then(|r| single_well_ground_from(&spec, cfg.grid, lam, &req, &r)) {
        Ok(w) => w,
        Err(e) => return failed(e),
    };
    let opts = OmegaOptions::default();
    let table = |tau: f64| {
        let mut c = cfg.clone();
        c.overrides.tau_override = Some(tau);
        omega_table(&c, &ws, &opts)
    };
    let (t0, t3, t4) = match (table(cfg.derived().unwrap().tau), table(1e-3), table(1e-4)) {
        (Ok(a), Ok(b), Ok(c)) => (a, b, c),
        (Err(e), _, _) | (_, Err(e), _) | (_, _, Err(e)) => return failed(e),
    };
    let hermitian_limit = 1e-6;
    let scaling = t3.sophon_block / t4.sophon_block;
    verdict(
        t0.hermitian_defect <= hermitian_limit
            && t0.diagonal_imag <= hermitian_limit
            && t0.relative_gap <= 0.2
            && (scaling / 100.0 - 1.0).abs() <= 0.2,
        format!(
            "Hermitian defect {:.1e}, diagonal Im {:.1e}; |sum + rho|/|rho| = {:.3} (radial orbitals {:.3}); \
             sophon block ratio tau=1e-3/1e-4: {scaling:.3}",
            t0.hermitian_defect, t0.diagonal_imag, t0.relative_gap, t0.relative_gap_radial
        ),
    )
}

fn perturbation(cfg: &TunnelingConfig) -> Verdict {
    let spec0 = match cfg.potential(WellKind::SingleCentered) {
        Ok(s) => s,
        Err(e) => return failed(e),
    };
    let req = cfg.single_well_request();
    let lam = cfg.phase_lambda();
    let radial = match radial_reference(&spec0, cfg.grid, lam, &req) {
        Ok(r) => r,
        Err(e) => return failed(e),
    };
    let mut ratios = Vec::new();
    let mut energy_ok = true;
    for tau in [1e-2, 1e-3, 1e-4] {
        let ws = match single_well_ground_from(&spec0.with_tau(tau), cfg.grid, lam, &req, &radial) {
            Ok(w) => w,
            Err(e) => return failed(e),
        };
        energy_ok &= (ws.e - ws.e0).abs() <= tau;
        let diff = GridField { values: ws.phi.values.iter().zip(&ws.phi0.values).map(|(a, b)| a - b).collect(), grid: cfg.grid };
        ratios.push(norm(&diff) / tau);
    }
    let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
    verdict(
        energy_ok && hi.is_finite() && hi <= 2.0 * lo,
        format!(
            "|e - e0| <= tau: {energy_ok}; |phi - phi0|/tau = {}",
            ratios.iter().map(|r| format!("{r:.3e}")).collect::<Vec<_>>().join(", ")
        ),
    )
}

fn main() -> ExitCode {
    let preset = TunnelingConfig::standard_preset();
    let mut all = true;
    let mut report_line = |n: u32, name: &str, start: Instant, v: Verdict| {
        all &= v.pass;
        println!(
            "criterion {n:>2} {name}: {} [{:.1} s] {}",
            if v.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            v.detail
        );
    };

    let t = Instant::now();
    report_line(1, "Landau-level anchor", t, landau_anchor());
    let t = Instant::now();
    report_line(2, "SHO anchor", t, sho_anchor());
    let t = Instant::now();
    report_line(3, "kernel bounds sandwich", t, kernel_sandwich());
    let t = Instant::now();
    report_line(4, "dense equivalence", t, dense_equivalence());

    let t = Instant::now();
    match double_well_report(&preset) {
        Ok(r) => {
            report_line(5, "rho reality and forms", t, rho_reality(&r));
            report_line(6, "splitting identities", t, splitting_identities(&r));
        }
        Err(e) => {
            report_line(5, "rho reality and forms", t, failed(&e));
            report_line(6, "splitting identities", t, failed(&e));
        }
    }
    let t = Instant::now();
    report_line(7, "sign change and degeneracy", t, sign_change_and_degeneracy(&preset));
    let t = Instant::now();
    report_line(8, "non-magnetic control", t, non_magnetic_control(&preset));
    let t = Instant::now();
    report_line(9, "Gaussian decay", t, gaussian_decay());
    let t = Instant::now();
    report_line(10, "decomposition cross-check", t, decomposition(&preset));
    let t = Instant::now();
    report_line(11, "perturbation comparison", t, perturbation(&preset));

    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
