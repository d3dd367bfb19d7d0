//! Double-well tunneling pipeline: single-well states, translated orbitals,
//! the hopping coefficient, sector splittings and ȳ sweeps.

mod decay;
mod omega;
mod sweep;

pub use decay::{gaussian_decay_fit, DecayFit, DECAY_AMPLITUDE_FLOOR};
pub use omega::{omega_table, OmegaOptions, OmegaTable};
pub use sweep::{find_degeneracy, sweep_ybar, Degeneracy, SweepPoint, SweepResult, SweepSummary};

use crate::eigensolve::{ground_state_in_sector, lowest_eigenpairs_from, EigenRequest, EigenResult, Sector};
use crate::error::{Error, Result};
use crate::grid::{inner, magnetic_translate, norm, parity, Grid2D, GridField};
use crate::operator::MagneticOperator;
use crate::params::{derive_parameters, sophon_centers, DerivedParams, DeskOverrides, ModelParams};
use crate::point::Point;
use crate::potential::{PotentialSpec, WellKind};
use crate::quadrature::QuadratureSpec;
use num_complex::Complex64;
use serde::Serialize;

/// Complex number as `{re, im}` in reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComplexValue {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for ComplexValue {
    fn from(c: Complex64) -> Self {
        ComplexValue { re: c.re, im: c.im }
    }
}

impl From<ComplexValue> for Complex64 {
    fn from(c: ComplexValue) -> Self {
        Complex64::new(c.re, c.im)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TunnelingConfig {
    pub params: ModelParams,
    pub overrides: DeskOverrides,
    pub grid: Grid2D,
    pub solver: EigenRequest,
    /// Residual tolerance for the single-well solves, whose residual feeds
    /// directly into ρ.
    pub single_well_tol: f64,
    /// Gauge phases on the lattice links. `false` zeroes them while keeping
    /// λ in the potential scale.
    pub magnetic: bool,
    pub quad: QuadratureSpec,
    /// Also evaluate `⟨φᴸ, (H − e)φᴿ⟩` by applying the operator.
    pub operator_form_check: bool,
    /// Attach the Ω table to every report.
    pub with_omega: bool,
    pub omega: OmegaOptions,
}

impl TunnelingConfig {
    /// The shipped moderate preset: λ=6, M=1, D=2.25, δ=0.25, τ=1, auto grid,
    /// residual tolerance 1e-11.
    pub fn standard_preset() -> Self {
        let params = ModelParams::new(6.0, 1.0, 2.25, 0.1);
        let overrides =
            DeskOverrides { delta_override: Some(0.25), tau_override: Some(1.0), d1_override: None };
        let grid = auto_grid(&params, &overrides).expect("preset parameters are valid");
        TunnelingConfig {
            params,
            overrides,
            grid,
            solver: EigenRequest { tol: 1e-11, ..EigenRequest::default() },
            single_well_tol: 1e-13,
            magnetic: true,
            quad: QuadratureSpec::default(),
            operator_form_check: false,
            with_omega: false,
            omega: OmegaOptions::default(),
        }
    }

    pub fn with_ybar(&self, ybar: f64) -> Self {
        let mut c = self.clone();
        c.params.ybar = ybar;
        c
    }

    /// Derived parameters with `d1` snapped to the lattice.
    pub fn derived(&self) -> Result<DerivedParams> {
        let mut dp = derive_parameters(&self.params, &self.overrides)?;
        dp.d1 = self.grid.snap_half_separation(dp.d1);
        Ok(dp)
    }

    pub fn potential(&self, kind: WellKind) -> Result<PotentialSpec> {
        Ok(PotentialSpec::new(self.params, self.derived()?, kind))
    }

    /// Field strength carried by the link phases.
    pub fn phase_lambda(&self) -> f64 {
        if self.magnetic {
            self.params.lambda
        } else {
            0.0
        }
    }

    pub fn single_well_request(&self) -> EigenRequest {
        EigenRequest { tol: self.single_well_tol, ..self.solver }
    }

    pub fn operator(&self, spec: &PotentialSpec) -> MagneticOperator {
        MagneticOperator::new(self.grid, self.phase_lambda(), |x| spec.eval(x))
    }
}

/// Box sizing: `h = min(0.35/√λ, δ/3 if δ ≥ 0.02)`, `L = d1 + D + 1 + 6/√λ`,
/// `n` rounded up to odd.
pub fn auto_grid(params: &ModelParams, overrides: &DeskOverrides) -> Result<Grid2D> {
    let dp = derive_parameters(params, overrides)?;
    let s = params.lambda.sqrt();
    let mut h = 0.35 / s;
    if dp.delta >= 0.02 {
        h = h.min(dp.delta / 3.0);
    }
    let l = dp.d1 + params.d + 1.0 + 6.0 / s;
    Grid2D::with_max_spacing(l, h)
}

#[derive(Debug, Clone)]
pub struct RadialReference {
    pub phi0: GridField,
    pub e0: f64,
    /// Lowest radial states, used to warm-start the perturbed solve.
    pub states: Vec<GridField>,
    pub energies: Vec<f64>,
    /// Largest relative variance of `|φ°|` over lattice points of equal radius.
    pub angular_variance: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Relative variance above which φ° is flagged as not radial.
pub const RADIAL_VARIANCE_LIMIT: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct WellStates {
    pub phi: GridField,
    pub e: f64,
    pub phi0: GridField,
    pub e0: f64,
    pub gap_estimate: f64,
    /// Excited single-well states from the same solve.
    pub excited: Vec<GridField>,
    pub angular_variance: f64,
    pub radial_flag: bool,
    pub converged: bool,
    pub max_residual: f64,
    pub iterations: usize,
}

/// Make the global phase deterministic: `φ(0)` real positive, or the
/// largest-modulus sample when `|φ(0)|` is negligible.
pub fn fix_phase(f: &mut GridField) {
    let g = f.grid;
    let c = g.center();
    let at0 = f.values[g.index(c, c)];
    let max = f.values.iter().fold(0.0f64, |m, v| m.max(v.norm()));
    let anchor = if at0.norm() > 1e-3 * max {
        at0
    } else {
        *f.values.iter().max_by(|a, b| a.norm().total_cmp(&b.norm())).expect("non-empty field")
    };
    if anchor.norm() > 0.0 {
        f.scale(anchor.conj() / anchor.norm());
    }
}

const PYTHAGOREAN: [(i64, &[(i64, i64)]); 8] = [
    (5, &[(3, 4)]),
    (10, &[(6, 8)]),
    (13, &[(5, 12)]),
    (15, &[(9, 12)]),
    (17, &[(8, 15)]),
    (20, &[(12, 16)]),
    (25, &[(7, 24), (15, 20)]),
    (26, &[(10, 24)]),
];

/// Angular variance of `|f|` over lattice points with exactly equal radius
/// `≤ r_max`, relative to the squared mean; the worst radius is returned.
///
/// Radii beyond the potential support are excluded: in the Gaussian tail the
/// lattice dispersion is itself anisotropic at order `h²|∇ ln f|²`.
pub fn angular_variance(f: &GridField, r_max: f64) -> f64 {
    let g = f.grid;
    let c = g.center() as i64;
    let at = |i: i64, j: i64| -> Option<f64> {
        let (x, y) = (c + i, c + j);
        let n = g.n as i64;
        ((0..n).contains(&x) && (0..n).contains(&y)).then(|| f.values[g.index(x as usize, y as usize)].norm())
    };
    let mut worst = 0.0f64;
    for (m, others) in PYTHAGOREAN {
        if m as f64 * g.spacing > r_max {
            continue;
        }
        let mut vals = Vec::new();
        for (a, b) in std::iter::once((m, 0)).chain(others.iter().copied()) {
            for (p, q) in [(a, b), (-a, b), (a, -b), (-a, -b), (b, a), (-b, a), (b, -a), (-b, -a)] {
                if let Some(v) = at(p, q) {
                    vals.push(v);
                }
            }
        }
        if vals.len() < 2 {
            continue;
        }
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        if mean == 0.0 {
            continue;
        }
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / vals.len() as f64;
        worst = worst.max(var / (mean * mean));
    }
    worst
}

/// Radial (τ = 0) single-well reference. Independent of ȳ.
pub fn radial_reference(spec: &PotentialSpec, grid: Grid2D, phase_lambda: f64, req: &EigenRequest) -> Result<RadialReference> {
    let radial = spec.with_kind(WellKind::SingleCentered).with_tau(0.0);
    let op = MagneticOperator::new(grid, phase_lambda, |x| radial.eval(x));
    let r = lowest_eigenpairs_from(&op, &req.with_k(3), &[], None)?;
    if !r.converged {
        return Err(Error::NotConverged(format!("radial single well: residuals {:?}", r.residuals)));
    }
    let mut states = r.eigenvectors;
    fix_phase(&mut states[0]);
    let phi0 = states[0].clone();
    Ok(RadialReference {
        angular_variance: angular_variance(&phi0, radial.planet.support_radius),
        phi0,
        e0: r.eigenvalues[0],
        states,
        energies: r.eigenvalues,
        converged: r.converged,
        iterations: r.iterations,
    })
}

/// Perturbed and radial single-well ground states.
///
/// `phase_lambda` is the field carried by the link phases (0 for the
/// non-magnetic control).
pub fn single_well_ground(spec: &PotentialSpec, grid: Grid2D, phase_lambda: f64, req: &EigenRequest) -> Result<WellStates> {
    let radial = radial_reference(spec, grid, phase_lambda, req)?;
    single_well_ground_from(spec, grid, phase_lambda, req, &radial)
}

/// As [`single_well_ground`], reusing a precomputed radial reference.
pub fn single_well_ground_from(
    spec: &PotentialSpec,
    grid: Grid2D,
    phase_lambda: f64,
    req: &EigenRequest,
    radial: &RadialReference,
) -> Result<WellStates> {
    let single = spec.with_kind(WellKind::SingleCentered);
    let op = MagneticOperator::new(grid, phase_lambda, |x| single.eval(x));
    let r = lowest_eigenpairs_from(&op, &req.with_k(3), &radial.states, None)?;
    if !r.converged {
        return Err(Error::NotConverged(format!("single well: residuals {:?}", r.residuals)));
    }
    let mut vecs = r.eigenvectors;
    fix_phase(&mut vecs[0]);
    let phi = vecs.remove(0);
    Ok(WellStates {
        phi,
        e: r.eigenvalues[0],
        phi0: radial.phi0.clone(),
        e0: radial.e0,
        gap_estimate: r.eigenvalues[1] - r.eigenvalues[0],
        excited: vecs,
        angular_variance: radial.angular_variance,
        radial_flag: radial.angular_variance > RADIAL_VARIANCE_LIMIT,
        converged: r.converged,
        max_residual: r.residuals.iter().fold(0.0, |a: f64, &b| a.max(b)),
        iterations: r.iterations,
    })
}

#[derive(Debug, Clone)]
pub struct OrbitalPair {
    pub phi_l: GridField,
    pub phi_r: GridField,
    pub d: Point,
    pub overlap: Complex64,
}

/// `φᴸ = R̂^{−d} φ` and `φᴿ = 𝔓 φᴸ`.
pub fn build_orbitals(phi: &GridField, d: Point, lambda: f64) -> Result<OrbitalPair> {
    let phi_l = magnetic_translate(phi, -d, lambda)?;
    let phi_r = parity(&phi_l);
    let overlap = inner(&phi_l, &phi_r)?;
    Ok(OrbitalPair { phi_l, phi_r, d, overlap })
}

fn weighted(f: &GridField, w: &[f64]) -> GridField {
    let values = f.values.iter().zip(w).map(|(a, b)| a * b).collect();
    GridField { values, grid: f.grid }
}

fn sample(spec: &PotentialSpec, grid: Grid2D) -> Vec<f64> {
    grid.points().map(|x| spec.eval(x)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Hopping {
    /// `⟨φᴸ, vᴿ φᴿ⟩`.
    pub rho: ComplexValue,
    /// `⟨vᴸ φᴸ, φᴿ⟩`.
    pub rho_alt: ComplexValue,
    /// `|rho − rho_alt| / |rho|`.
    pub form_gap: f64,
}

/// Hopping coefficient in the potential-weighted form; `spec` supplies the
/// double-well geometry.
pub fn hopping(pair: &OrbitalPair, spec: &PotentialSpec) -> Result<Hopping> {
    pair.phi_l.check_grid(&pair.phi_r)?;
    let g = pair.phi_l.grid;
    let vr = sample(&spec.with_kind(WellKind::Right), g);
    let vl = sample(&spec.with_kind(WellKind::Left), g);
    let rho = inner(&pair.phi_l, &weighted(&pair.phi_r, &vr))?;
    let rho_alt = inner(&weighted(&pair.phi_l, &vl), &pair.phi_r)?;
    let scale = rho.norm().max(1e-300);
    Ok(Hopping { rho: rho.into(), rho_alt: rho_alt.into(), form_gap: (rho - rho_alt).norm() / scale })
}

/// `⟨φᴸ, (H − e) φᴿ⟩` with the double-well operator applied directly.
pub fn hopping_operator_form(pair: &OrbitalPair, op: &MagneticOperator, e: f64) -> Result<Complex64> {
    let mut hr = op.apply(&pair.phi_r)?;
    for (a, b) in hr.values.iter_mut().zip(&pair.phi_r.values) {
        *a -= e * b;
    }
    inner(&pair.phi_l, &hr)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LcaoEstimate {
    /// `E⁽⁻⁾ − E⁽⁺⁾` from the two-orbital energies.
    pub s_lcao: f64,
    pub minus_two_rho: f64,
    /// `⟨vᴿφᴸ, φᴸ⟩` and `⟨vᴸφᴿ, φᴿ⟩`.
    pub diag_corrections: [f64; 2],
    /// `E⁽σ⁾ − e` for σ = +1, −1.
    pub sector_shifts: [f64; 2],
    /// Set when `‖φᴸ + σφᴿ‖ < 1e-6` for some σ.
    pub degenerate_denominator: bool,
}

/// Two-orbital energies `⟨ψ_σ,(H−e)ψ_σ⟩ = [2σρ + ⟨vᴿφᴸ,φᴸ⟩ + ⟨vᴸφᴿ,φᴿ⟩] / ‖φᴸ+σφᴿ‖²`.
pub fn lcao_estimate(pair: &OrbitalPair, spec: &PotentialSpec, hop: &Hopping) -> Result<LcaoEstimate> {
    let g = pair.phi_l.grid;
    let vr = sample(&spec.with_kind(WellKind::Right), g);
    let vl = sample(&spec.with_kind(WellKind::Left), g);
    let dl = inner(&weighted(&pair.phi_l, &vr), &pair.phi_l)?.re;
    let dr = inner(&weighted(&pair.phi_r, &vl), &pair.phi_r)?.re;
    let rho = hop.rho.re;
    let mut shifts = [0.0; 2];
    let mut degenerate = false;
    for (slot, sigma) in [1.0, -1.0].into_iter().enumerate() {
        let n2 = norm(&pair.phi_l).powi(2) + norm(&pair.phi_r).powi(2) + 2.0 * sigma * pair.overlap.re;
        if n2 < 1e-12 {
            degenerate = true;
            shifts[slot] = f64::NAN;
            continue;
        }
        shifts[slot] = (2.0 * sigma * rho + dl + dr) / n2;
    }
    Ok(LcaoEstimate {
        s_lcao: shifts[1] - shifts[0],
        minus_two_rho: -2.0 * rho,
        diag_corrections: [dl, dr],
        sector_shifts: shifts,
        degenerate_denominator: degenerate,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TunnelingReport {
    pub ybar: f64,
    /// Half-separation actually used (lattice-snapped).
    pub d1: f64,
    pub e: f64,
    pub e0: f64,
    pub gap_estimate: f64,
    #[serde(rename = "E0")]
    pub e_0: f64,
    #[serde(rename = "E1")]
    pub e_1: f64,
    /// Unrestricted levels 0..4.
    pub levels: Vec<f64>,
    #[serde(rename = "E_even")]
    pub e_even: f64,
    #[serde(rename = "E_odd")]
    pub e_odd: f64,
    #[serde(rename = "Delta")]
    pub delta: f64,
    #[serde(rename = "S")]
    pub s: f64,
    pub hopping: Hopping,
    pub rho_operator_form: Option<ComplexValue>,
    pub lcao: LcaoEstimate,
    /// `cos(λ d1 ȳ)`.
    pub predicted_cos: f64,
    /// `⟨ψ₀, 𝔓ψ₀⟩` and `⟨ψ₁, 𝔓ψ₁⟩` from the unrestricted solve.
    pub parity0: f64,
    pub parity1: f64,
    pub overlap: ComplexValue,
    pub tol: f64,
    /// `Δ < 50·tol·|e|`.
    pub numerically_degenerate: bool,
    /// `|Δ − |S|| ≤ 2·tol·max(1, |e|)`.
    pub split_identity_ok: bool,
    /// `{E0, E1} = {E_even, E_odd}` within `tol·max(1, |e|)`.
    pub sector_match_ok: bool,
    /// `e ≤ e° ≤ 0`, the first inequality up to the single-well tolerance.
    pub energy_order_ok: bool,
    pub angular_variance: f64,
    pub radial_flag: bool,
    pub magnetic: bool,
    pub moderate_regime: bool,
    pub converged: bool,
    pub max_residual: f64,
    pub iterations: usize,
    pub solver_method: String,
    pub omega: Option<OmegaTable>,
}

fn max_residual(r: &EigenResult) -> f64 {
    r.residuals.iter().fold(0.0, |a: f64, &b| a.max(b))
}

fn project(f: &GridField, sector: Sector) -> GridField {
    let p = parity(f);
    let s = sector.sign();
    let values = f.values.iter().zip(&p.values).map(|(a, b)| 0.5 * (a + s * b)).collect();
    GridField { values, grid: f.grid }
}

/// Full double-well analysis at the configured ȳ.
pub fn double_well_report(cfg: &TunnelingConfig) -> Result<TunnelingReport> {
    let spec = cfg.potential(WellKind::SingleCentered)?;
    let radial = radial_reference(&spec, cfg.grid, cfg.phase_lambda(), &cfg.single_well_request())?;
    double_well_report_from(cfg, &radial)
}

/// As [`double_well_report`], reusing the radial reference (which does not
/// depend on ȳ).
pub fn double_well_report_from(cfg: &TunnelingConfig, radial: &RadialReference) -> Result<TunnelingReport> {
    let spec = cfg.potential(WellKind::SingleCentered)?;
    let lam = cfg.phase_lambda();
    let req = &cfg.solver;
    let ws = single_well_ground_from(&spec, cfg.grid, lam, &cfg.single_well_request(), radial)?;
    let d = spec.derived.d();
    let pair = build_orbitals(&ws.phi, d, lam)?;
    let double = spec.with_kind(WellKind::Double);
    let hop = hopping(&pair, &double)?;
    let lcao = lcao_estimate(&pair, &double, &hop)?;
    let op = cfg.operator(&double);
    let rho_operator_form = if cfg.operator_form_check {
        Some(hopping_operator_form(&pair, &op, ws.e)?.into())
    } else {
        None
    };

    // Bonding/antibonding guesses from the ground and excited single-well states.
    let mut start = Vec::new();
    for f in std::iter::once(&ws.phi).chain(&ws.excited) {
        let p = build_orbitals(f, d, lam)?;
        for s in [1.0, -1.0] {
            let values = p.phi_l.values.iter().zip(&p.phi_r.values).map(|(a, b)| a + s * b).collect();
            start.push(GridField { values, grid: cfg.grid });
        }
    }
    let full = lowest_eigenpairs_from(&op, &req.with_k(4), &start, None)?;

    let mut sector_energy = [0.0; 2];
    let mut sector_runs = Vec::new();
    for (slot, sector) in [Sector::Even, Sector::Odd].into_iter().enumerate() {
        let seeds: Vec<GridField> = full.eigenvectors.iter().map(|f| project(f, sector)).collect();
        let (e, _, r) = ground_state_in_sector(&op, sector, req, &seeds)?;
        sector_energy[slot] = e;
        sector_runs.push(r);
    }

    let parity_of = |f: &GridField| -> Result<f64> { Ok(inner(f, &parity(f))?.re) };
    let (e_0, e_1) = (full.eigenvalues[0], full.eigenvalues[1]);
    let [e_even, e_odd] = sector_energy;
    let delta = e_1 - e_0;
    let s = e_odd - e_even;
    let scale = ws.e.abs().max(1.0);
    let (lo, hi) = (e_even.min(e_odd), e_even.max(e_odd));
    let converged = ws.converged && full.converged && sector_runs.iter().all(|r| r.converged);
    let max_res = sector_runs.iter().map(max_residual).fold(max_residual(&full).max(ws.max_residual), f64::max);
    let omega = if cfg.with_omega { Some(omega_table(cfg, &ws, &cfg.omega)?) } else { None };

    Ok(TunnelingReport {
        ybar: cfg.params.ybar,
        d1: d.x,
        e: ws.e,
        e0: ws.e0,
        gap_estimate: ws.gap_estimate,
        e_0,
        e_1,
        levels: full.eigenvalues.clone(),
        e_even,
        e_odd,
        delta,
        s,
        hopping: hop,
        rho_operator_form,
        lcao,
        predicted_cos: (cfg.params.lambda * d.x * cfg.params.ybar).cos(),
        parity0: parity_of(&full.eigenvectors[0])?,
        parity1: parity_of(&full.eigenvectors[1])?,
        overlap: pair.overlap.into(),
        tol: req.tol,
        numerically_degenerate: delta < 50.0 * req.tol * ws.e.abs(),
        split_identity_ok: (delta - s.abs()).abs() <= 2.0 * req.tol * scale,
        sector_match_ok: (e_0 - lo).abs() <= req.tol * scale && (e_1 - hi).abs() <= req.tol * scale,
        energy_order_ok: ws.e <= ws.e0 + cfg.single_well_tol * scale && ws.e0 <= 0.0,
        angular_variance: ws.angular_variance,
        radial_flag: ws.radial_flag,
        magnetic: cfg.magnetic,
        moderate_regime: spec.derived.moderate_regime,
        converged,
        max_residual: max_res,
        iterations: ws.iterations + full.iterations + sector_runs.iter().map(|r| r.iterations).sum::<usize>(),
        solver_method: full.method.clone(),
        omega,
    })
}

/// Centers for an arbitrary (possibly negative) ȳ, bypassing validation.
pub fn spec_with_ybar(spec: &PotentialSpec, ybar: f64) -> PotentialSpec {
    let mut s = spec.clone();
    s.derived.centers = sophon_centers(s.params.d, ybar, s.params.nu_max);
    s.params.ybar = ybar;
    s
}
