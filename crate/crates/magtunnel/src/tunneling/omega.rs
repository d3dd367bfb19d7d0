//! Planet/sophon interaction table Ω(ν,ν′) by nested disc quadrature.

use super::{build_orbitals, hopping, ComplexValue, TunnelingConfig, WellStates};
use crate::error::{Error, Result};
use crate::grid::GridField;
use crate::kernels::{gamma_constant, GammaEstimate, KernelTable};
use crate::point::Point;
use crate::potential::{PotentialSpec, WellKind};
use crate::quadrature::gauss_legendre_on;
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OmegaOptions {
    /// Gauss nodes in the radial direction of each disc.
    pub radial_nodes: usize,
    /// Nodes in the angular direction.
    pub angular_nodes: usize,
    /// Radius at which Γ = φ°/K is read off.
    pub gamma_probe: f64,
    pub table_points: usize,
}

impl Default for OmegaOptions {
    fn default() -> Self {
        OmegaOptions { radial_nodes: 32, angular_nodes: 32, gamma_probe: 1.5, table_points: 600 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OmegaTable {
    /// `entries[a][b]`: `a` indexes the right-well component, `b` the left
    /// one; 0 is the planet, ν ≥ 1 the sophons.
    pub entries: Vec<Vec<ComplexValue>>,
    pub sum: ComplexValue,
    /// ρ from the computed perturbed orbitals.
    pub rho: f64,
    /// ρ from the radial orbitals φ° with the full double-well potential.
    pub rho_radial: f64,
    /// `|Σ Ω + ρ| / |ρ|`.
    pub relative_gap: f64,
    pub relative_gap_radial: f64,
    /// `max |Ω(a,b) − conj Ω(b,a)| / max |Ω|`.
    pub hermitian_defect: f64,
    /// `max |Im Ω(ν,ν)| / max |Ω|`.
    pub diagonal_imag: f64,
    /// `Σ_{ν,ν′ ≥ 1} |Ω(ν,ν′)|`.
    pub sophon_block: f64,
    pub gamma: GammaEstimate,
    pub kernel_z: f64,
    pub kernel_rel_error: f64,
    pub regime_note: String,
}

struct Disc {
    center: Point,
    radius: f64,
}

/// Polar nodes over a disc: Gauss–Legendre in the radius, trapezoid in angle.
fn disc_nodes(disc: &Disc, nr: usize, nt: usize) -> Vec<(Point, f64)> {
    let (ts, ws) = gauss_legendre_on(nr, 0.0, disc.radius);
    let dth = 2.0 * PI / nt as f64;
    let mut out = Vec::with_capacity(nr * nt);
    for (t, w) in ts.iter().zip(&ws) {
        for j in 0..nt {
            let th = (j as f64 + 0.5) * dth;
            out.push((disc.center + Point::new(t * th.cos(), t * th.sin()), w * t * dth));
        }
    }
    out
}

/// Nodes for `∫_disc g(y) dy` in polar coordinates about `p`, so that a
/// singularity of `g` at `p` is integrable term by term.
fn nodes_about(p: Point, disc: &Disc, nr: usize, nt: usize) -> Vec<(Point, f64)> {
    let rel = disc.center - p;
    let dist = rel.norm();
    let r2 = disc.radius * disc.radius;
    let mut out = Vec::with_capacity(nr * nt);
    let mut ray = |th: f64, wth: f64| {
        let u = Point::new(th.cos(), th.sin());
        let b = -rel.dot(u);
        let q = dist * dist - r2;
        let disc_ = b * b - q;
        if disc_ <= 0.0 {
            return;
        }
        let s = disc_.sqrt();
        let (t0, t1) = if q < 0.0 { (0.0, -b + s) } else { ((-b - s).max(0.0), (-b + s).max(0.0)) };
        if t1 <= t0 {
            return;
        }
        let (ts, ws) = gauss_legendre_on(nr, t0, t1);
        for (t, w) in ts.iter().zip(&ws) {
            out.push((p + *t * u, w * t * wth));
        }
    };
    if dist < disc.radius {
        let dth = 2.0 * PI / nt as f64;
        for j in 0..nt {
            ray((j as f64 + 0.5) * dth, dth);
        }
    } else {
        let alpha = (disc.radius / dist).min(1.0).asin();
        let c = rel.y.atan2(rel.x);
        // θ = c + α sin ψ removes the square-root behaviour of the chord
        // length at the tangent directions.
        let (psis, wpsis) = gauss_legendre_on(nt, -0.5 * PI, 0.5 * PI);
        for (psi, w) in psis.iter().zip(&wpsis) {
            ray(c + alpha * psi.sin(), w * alpha * psi.cos());
        }
    }
    out
}

struct Fields<'a> {
    spec: &'a PotentialSpec,
    phi0: &'a GridField,
    gamma: f64,
    table: &'a KernelTable,
    lambda: f64,
    d: Point,
    r0: f64,
}

impl Fields<'_> {
    fn radial(&self, p: Point) -> Complex64 {
        let r = p.norm();
        if r <= self.r0 {
            self.phi0.interpolate(p)
        } else {
            Complex64::new(self.gamma * self.table.eval(r), 0.0)
        }
    }

    fn component(&self, idx: usize, p: Point) -> f64 {
        if idx == 0 {
            self.spec.planet_term(p)
        } else {
            self.spec.sophon_term(idx - 1, p)
        }
    }

    /// `v_a^R(x) φ°^R(x)` with `φ°^R(x) = e^{−i(λ/2) x∧d} φ°(−x + d)`.
    fn right(&self, a: usize, x: Point) -> Complex64 {
        let q = -x + self.d;
        let v = self.component(a, q);
        if v == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        v * Complex64::from_polar(1.0, -0.5 * self.lambda * x.wedge(self.d)) * self.radial(q)
    }

    /// `v_b^L(y) φ°^L(y)` with `φ°^L(y) = e^{i(λ/2) y∧d} φ°(y + d)`.
    fn left(&self, b: usize, y: Point) -> Complex64 {
        let q = y + self.d;
        let v = self.component(b, q);
        if v == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        v * Complex64::from_polar(1.0, 0.5 * self.lambda * y.wedge(self.d)) * self.radial(q)
    }

    /// Landau resolvent kernel `e^{−i(λ/2) x∧y} K(x − y)`.
    fn green(&self, x: Point, y: Point) -> Complex64 {
        Complex64::from_polar(self.table.eval((x - y).norm()), -0.5 * self.lambda * x.wedge(y))
    }
}

fn support(spec: &PotentialSpec, idx: usize, right: bool) -> Disc {
    let d = spec.derived.d();
    let (off, radius) = if idx == 0 {
        (Point::ORIGIN, spec.planet.support_radius)
    } else {
        (spec.derived.centers[idx - 1], spec.sophon.radius)
    };
    // vᴿ(x) = v(−x + d), vᴸ(y) = v(y + d).
    let center = if right { d - off } else { off - d };
    Disc { center, radius }
}

fn entry(f: &Fields, a: usize, b: usize, opts: &OmegaOptions) -> Complex64 {
    let (nr, nt) = (opts.radial_nodes, opts.angular_nodes);
    let dr = support(f.spec, a, true);
    let dl = support(f.spec, b, false);
    let gap = (dr.center - dl.center).norm() - dr.radius - dl.radius;
    let mut acc = Complex64::new(0.0, 0.0);
    if gap > 0.25 * dr.radius.max(dl.radius) {
        let xs: Vec<(Point, Complex64)> =
            disc_nodes(&dr, nr, nt).into_iter().map(|(x, w)| (x, w * f.right(a, x).conj())).collect();
        let ys: Vec<(Point, Complex64)> =
            disc_nodes(&dl, nr, nt).into_iter().map(|(y, w)| (y, w * f.left(b, y))).collect();
        for &(x, fx) in &xs {
            if fx == Complex64::new(0.0, 0.0) {
                continue;
            }
            let mut inner = Complex64::new(0.0, 0.0);
            for &(y, fy) in &ys {
                inner += f.green(x, y) * fy;
            }
            acc += fx * inner;
        }
    } else if dr.radius <= dl.radius {
        for (x, w) in disc_nodes(&dr, nr, nt) {
            let fx = f.right(a, x).conj();
            if fx == Complex64::new(0.0, 0.0) {
                continue;
            }
            let mut inner = Complex64::new(0.0, 0.0);
            for (y, wy) in nodes_about(x, &dl, nr, nt) {
                inner += wy * f.green(x, y) * f.left(b, y);
            }
            acc += w * fx * inner;
        }
    } else {
        for (y, w) in disc_nodes(&dl, nr, nt) {
            let fy = f.left(b, y);
            if fy == Complex64::new(0.0, 0.0) {
                continue;
            }
            let mut inner = Complex64::new(0.0, 0.0);
            for (x, wx) in nodes_about(y, &dr, nr, nt) {
                inner += wx * f.right(a, x).conj() * f.green(x, y);
            }
            acc += w * fy * inner;
        }
    }
    acc
}

/// Ω(ν,ν′) with field values from the radial state φ° (grid inside the
/// planet support, Γ·K outside) and the kernel at `z = e°`.
pub fn omega_table(cfg: &TunnelingConfig, ws: &WellStates, opts: &OmegaOptions) -> Result<OmegaTable> {
    if !cfg.magnetic {
        return Err(Error::InvalidParameter("the interaction table needs the magnetic gauge".into()));
    }
    let lambda = cfg.params.lambda;
    let z = ws.e0;
    if z >= lambda {
        return Err(Error::AboveGroundLevel { z, omega: lambda });
    }
    let spec = cfg.potential(WellKind::Double)?;
    let dp = &spec.derived;
    let r0 = spec.planet.support_radius;
    let gamma = gamma_constant(&ws.phi0, lambda, z, Point::new(opts.gamma_probe, 0.0), r0, &cfg.quad)?;
    let reach = 2.0 * (dp.d1 + cfg.params.d * 1.5 + dp.delta + r0) + 1.0;
    let table = KernelTable::new(lambda, z, 1e-7, reach, opts.table_points, &cfg.quad)?;
    let fields = Fields { spec: &spec, phi0: &ws.phi0, gamma: gamma.gamma, table: &table, lambda, d: dp.d(), r0 };

    let n = dp.centers.len() + 1;
    let mut entries = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    for (a, row) in entries.iter_mut().enumerate() {
        for (b, e) in row.iter_mut().enumerate() {
            *e = entry(&fields, a, b, opts);
        }
    }

    let sum: Complex64 = entries.iter().flatten().sum();
    let max = entries.iter().flatten().fold(0.0f64, |m, v| m.max(v.norm())).max(1e-300);
    let mut herm = 0.0f64;
    let mut diag = 0.0f64;
    let mut sophon_block = 0.0;
    for a in 0..n {
        diag = diag.max(entries[a][a].im.abs());
        for b in 0..n {
            herm = herm.max((entries[a][b] - entries[b][a].conj()).norm());
            if a > 0 && b > 0 {
                sophon_block += entries[a][b].norm();
            }
        }
    }

    let rho = hopping(&build_orbitals(&ws.phi, dp.d(), lambda)?, &spec)?.rho.re;
    let rho_radial = hopping(&build_orbitals(&ws.phi0, dp.d(), lambda)?, &spec)?.rho.re;
    let gap = |r: f64| (sum + r).norm() / r.abs().max(1e-300);
    Ok(OmegaTable {
        entries: entries.iter().map(|r| r.iter().map(|&v| v.into()).collect()).collect(),
        sum: sum.into(),
        rho,
        rho_radial,
        relative_gap: gap(rho),
        relative_gap_radial: gap(rho_radial),
        hermitian_defect: herm / max,
        diagonal_imag: diag / max,
        sophon_block,
        gamma,
        kernel_z: z,
        kernel_rel_error: table.max_rel_error,
        regime_note: if dp.moderate_regime { "moderate" } else { "asymptotic" }.into(),
    })
}
