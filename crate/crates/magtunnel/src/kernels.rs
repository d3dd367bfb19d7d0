//! Harmonic-oscillator heat and resolvent kernels and the Landau resolvent.
//!
//! Conventions: `H_SHO = −Δ + (ω²/4)|x|²` on ℝ², spectrum `ω(n + 1)`;
//! `K_{ω,z}(x)` is the kernel of `(H_SHO − z)⁻¹` between `x` and the origin.

use crate::error::{Error, Result};
use crate::grid::GridField;
use crate::point::Point;
use crate::quadrature::{integrate_log, LogQuad, QuadratureSpec};
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelQuery {
    pub omega: f64,
    pub z: f64,
    pub x: Point,
}

impl KernelQuery {
    pub fn new(omega: f64, z: f64, x: Point) -> Self {
        KernelQuery { omega, z, x }
    }

    fn check(&self) -> Result<()> {
        if !(self.omega > 0.0) {
            return Err(Error::InvalidParameter(format!("omega must be positive, got {}", self.omega)));
        }
        if !(self.z < self.omega) {
            return Err(Error::AboveGroundLevel { z: self.z, omega: self.omega });
        }
        if self.x.norm_sqr() == 0.0 {
            return Err(Error::ZeroDisplacement);
        }
        Ok(())
    }
}

/// `ln sinh s` for `s > 0`, without overflow.
pub fn ln_sinh(s: f64) -> f64 {
    if s > 20.0 {
        s - std::f64::consts::LN_2 + (-(-2.0 * s).exp()).ln_1p()
    } else {
        s.sinh().ln()
    }
}

/// Natural log of the Mehler kernel.
pub fn ln_mehler_heat_kernel(omega: f64, t: f64, x: Point, y: Point) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!("time must be positive, got {t}")));
    }
    let s = omega * t;
    let coth = 1.0 / s.tanh();
    let inv_sinh = (-ln_sinh(s)).exp();
    let quad = coth * (x.norm_sqr() + y.norm_sqr()) - 2.0 * x.dot(y) * inv_sinh;
    Ok(omega.ln() - (4.0 * PI).ln() - ln_sinh(s) - 0.25 * omega * quad)
}

/// `(ω/(4π sinh ωt))·exp(−(ω/(4 sinh ωt))(cosh ωt (|x|²+|y|²) − 2x·y))`.
pub fn mehler_heat_kernel(omega: f64, t: f64, x: Point, y: Point) -> Result<f64> {
    ln_mehler_heat_kernel(omega, t, x, y).map(f64::exp)
}

/// `ln K_{ω,z}(x)` from the Laplace representation
/// `K = (1/4π) ∫₀^∞ exp(−a coth s + (z/ω) s) / sinh s ds`, `a = ω|x|²/4`.
///
/// On `(0, s₀]` the substitution `u = 1/s` followed by `u = 1/s₀ − ln(v)/a`
/// absorbs the `e^{−a u}` decay; on `[s₀, ∞)` the map `s = s₀ − ln(v)/κ`
/// with `κ = 1 − z/ω` absorbs the exponential tail. Both pieces are then
/// integrals over `v ∈ (0, 1]` with bounded integrands.
pub fn ln_sho_resolvent_kernel(q: &KernelQuery, quad: &QuadratureSpec) -> Result<LogQuad> {
    q.check()?;
    let a = 0.25 * q.omega * q.x.norm_sqr();
    let zw = q.z / q.omega;
    let kappa = 1.0 - zw;
    let s0 = quad.split_point;
    let ln_f = |s: f64| -a / s.tanh() + zw * s - ln_sinh(s);
    let u0 = 1.0 / s0;
    let near = |v: f64| {
        let u = u0 - v.ln() / a;
        ln_f(1.0 / u) - 2.0 * u.ln() - a.ln() - v.ln()
    };
    let far = |v: f64| {
        let s = s0 - v.ln() / kappa;
        ln_f(s) - kappa.ln() - v.ln()
    };
    let spec = QuadratureSpec { rel_tol: 0.5 * quad.rel_tol, ..*quad };
    let i1 = integrate_log(near, 0.0, 1.0, &spec);
    let i2 = integrate_log(far, 0.0, 1.0, &spec);
    let top = i1.ln_value.max(i2.ln_value);
    let w1 = (i1.ln_value - top).exp();
    let w2 = (i2.ln_value - top).exp();
    let ln_value = top + (w1 + w2).ln() - (4.0 * PI).ln();
    let rel_error = (w1 * i1.rel_error + w2 * i2.rel_error) / (w1 + w2);
    Ok(LogQuad { ln_value, rel_error, panels: i1.panels + i2.panels })
}

pub fn sho_resolvent_kernel(q: &KernelQuery, quad: &QuadratureSpec) -> Result<f64> {
    ln_sho_resolvent_kernel(q, quad).map(|r| r.value())
}

/// `e^{−i(λ/2)(x∧y)} K_{λ,z}(x − y)`.
pub fn landau_resolvent_kernel(lambda: f64, z: f64, x: Point, y: Point, quad: &QuadratureSpec) -> Result<Complex64> {
    let k = sho_resolvent_kernel(&KernelQuery::new(lambda, z, x - y), quad)?;
    Ok(Complex64::from_polar(k, -0.5 * lambda * x.wedge(y)))
}

/// `eˣ E₁(x)` for `x > 0`.
pub fn scaled_exp_integral(x: f64) -> f64 {
    if x < 1.0 {
        // E₁(x) = −γ − ln x − Σ (−x)ᵏ/(k·k!)
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..60 {
            term *= -x / k as f64;
            sum += term / k as f64;
        }
        x.exp() * (-0.577_215_664_901_532_9 - x.ln() - sum)
    } else {
        // Continued fraction 1/(x+1− 1²/(x+3− 2²/(x+5− …))), modified Lentz.
        let tiny = 1e-300;
        let mut b = x + 1.0;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..1000 {
            let an = -((i * i) as f64);
            b += 2.0;
            d = 1.0 / (an * d + b);
            c = b + an / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        h
    }
}

/// Largest `ω|x|²/2` for which [`sho_resolvent_series`] is used.
pub const SERIES_MAX_ARGUMENT: f64 = 20.0;

/// `K_{ω,z}(x)` from the rotationally symmetric eigenfunction expansion
/// `(ω/2π) e^{−u/2} Σₙ Lₙ(u) / (2ω(n + μ))`, `u = ω|x|²/2`, `μ = (1 − z/ω)/2`,
/// with two Kummer subtractions against the closed-form sums
/// `Σ Lₙ/(n+1) = eᵘE₁(u)` and `Σ Lₙ/(n+2) = (1+u)eᵘE₁(u) − 1`.
pub fn sho_resolvent_series(q: &KernelQuery, terms: usize) -> Result<f64> {
    q.check()?;
    let w = q.omega;
    let u = 0.5 * w * q.x.norm_sqr();
    if u > SERIES_MAX_ARGUMENT {
        return Err(Error::InvalidParameter(format!(
            "series argument ω|x|²/2 = {u} exceeds {SERIES_MAX_ARGUMENT}"
        )));
    }
    let mu = 0.5 * (1.0 - q.z / w);
    let s1 = scaled_exp_integral(u);
    let s2 = (1.0 + u) * s1 - 1.0;
    let (mut l0, mut l1) = (1.0, 1.0 - u);
    let mut rest = 0.0;
    for n in 0..terms {
        let nf = n as f64;
        rest += l0 / ((nf + 1.0) * (nf + 2.0) * (nf + mu));
        let l2 = ((2.0 * nf + 3.0 - u) * l1 - (nf + 1.0) * l0) / (nf + 2.0);
        l0 = l1;
        l1 = l2;
    }
    let sum = s1 + (1.0 - mu) * (s1 - s2) + (1.0 - mu) * (2.0 - mu) * rest;
    Ok(0.5 * w / PI * (-0.5 * u).exp() * sum / (2.0 * w))
}

/// Logs of the Gaussian lower and upper bounds on `K_{ω,z}(x)`.
pub fn ln_kernel_bounds(q: &KernelQuery) -> Result<(f64, f64)> {
    q.check()?;
    let w = q.omega;
    let r2 = q.x.norm_sqr();
    let kappa = 1.0 - q.z / w;
    let gauss = -0.25 * w * r2;
    let lower = -(2.0 * PI * std::f64::consts::E * kappa).ln() + gauss - 0.5 * kappa * (0.5 * w * r2).ln_1p();
    let zp = q.z.max(0.0);
    let e = std::f64::consts::E;
    let bracket = 1.0 / (w * r2) + w / (2.0 * (e - 1.0 / e) * (w - q.z));
    let upper = zp / w - PI.ln() + gauss + bracket.ln();
    Ok((lower, upper))
}

/// `(lower, upper)` with
/// `lower = e^{−ω|x|²/4}(1 + ω|x|²/2)^{−κ/2} / (2πeκ)`, `κ = 1 − z/ω`, and
/// `upper = (e^{z₊/ω}/π) e^{−ω|x|²/4} [1/(ω|x|²) + ω/(2(e − e⁻¹)(ω − z))]`.
pub fn kernel_bounds(q: &KernelQuery) -> Result<(f64, f64)> {
    ln_kernel_bounds(q).map(|(l, u)| (l.exp(), u.exp()))
}

/// `ln K_{ω,z}(r)` tabulated on a uniform grid in `ln r`, cubic interpolation.
#[derive(Debug, Clone)]
pub struct KernelTable {
    pub omega: f64,
    pub z: f64,
    t0: f64,
    dt: f64,
    ln_k: Vec<f64>,
    pub max_rel_error: f64,
}

impl KernelTable {
    pub fn new(omega: f64, z: f64, r_min: f64, r_max: f64, points: usize, quad: &QuadratureSpec) -> Result<Self> {
        if !(r_min > 0.0 && r_max > r_min && points >= 4) {
            return Err(Error::InvalidParameter("kernel table needs 0 < r_min < r_max and >= 4 points".into()));
        }
        let t0 = r_min.ln();
        let dt = (r_max.ln() - t0) / (points - 1) as f64;
        let mut ln_k = Vec::with_capacity(points);
        let mut max_rel_error = 0.0f64;
        for i in 0..points {
            let r = (t0 + dt * i as f64).exp();
            let v = ln_sho_resolvent_kernel(&KernelQuery::new(omega, z, Point::new(r, 0.0)), quad)?;
            max_rel_error = max_rel_error.max(v.rel_error);
            ln_k.push(v.ln_value);
        }
        Ok(KernelTable { omega, z, t0, dt, ln_k, max_rel_error })
    }

    pub fn r_range(&self) -> (f64, f64) {
        (self.t0.exp(), (self.t0 + self.dt * (self.ln_k.len() - 1) as f64).exp())
    }

    /// `K(r)`; clamps `r` into the tabulated range.
    pub fn eval(&self, r: f64) -> f64 {
        let n = self.ln_k.len();
        let t = ((r.ln() - self.t0) / self.dt).clamp(0.0, (n - 1) as f64);
        let i = (t.floor() as usize).clamp(1, n - 3);
        let f = t - i as f64;
        let (p0, p1, p2, p3) = (self.ln_k[i - 1], self.ln_k[i], self.ln_k[i + 1], self.ln_k[i + 2]);
        // Four-point Lagrange through i-1..i+2 evaluated at i + f.
        let v = -p0 * f * (f - 1.0) * (f - 2.0) / 6.0 + p1 * (f + 1.0) * (f - 1.0) * (f - 2.0) / 2.0
            - p2 * (f + 1.0) * f * (f - 2.0) / 2.0
            + p3 * (f + 1.0) * f * (f - 1.0) / 6.0;
        v.exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GammaEstimate {
    pub gamma: f64,
    pub probe_radius: f64,
    /// Relative spread (max − min)/mean of the ring samples of φ°/K.
    pub ring_spread: f64,
    /// Whether any probe fell between grid nodes.
    pub interpolated: bool,
}

pub const GAMMA_RING_PROBES: usize = 64;

/// `Γ = φ°(x)/K_{ω,z}(x)` averaged over a ring of probes at radius `|probe|`.
///
/// `phi0` must be centred at the origin with its global phase fixed; the
/// modulus is used.
pub fn gamma_constant(
    phi0: &GridField,
    omega: f64,
    z: f64,
    probe: Point,
    support_radius: f64,
    quad: &QuadratureSpec,
) -> Result<GammaEstimate> {
    let r = probe.norm();
    if r <= support_radius {
        return Err(Error::InvalidParameter(format!(
            "probe radius {r} lies inside the potential support radius {support_radius}"
        )));
    }
    let k = sho_resolvent_kernel(&KernelQuery::new(omega, z, Point::new(r, 0.0)), quad)?;
    let h = phi0.grid.spacing;
    let base = probe.y.atan2(probe.x);
    let mut interpolated = false;
    let samples: Vec<f64> = (0..GAMMA_RING_PROBES)
        .map(|j| {
            let th = base + 2.0 * PI * j as f64 / GAMMA_RING_PROBES as f64;
            let p = Point::new(r * th.cos(), r * th.sin());
            let on_node = ((p.x / h).round() - p.x / h).abs() < 1e-9 && ((p.y / h).round() - p.y / h).abs() < 1e-9;
            interpolated |= !on_node;
            phi0.interpolate(p).norm() / k
        })
        .collect();
    let mean = samples.iter().sum::<f64>() / samples.len() as f64;
    let (lo, hi) = samples.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    Ok(GammaEstimate { gamma: mean, probe_radius: r, ring_spread: (hi - lo) / mean, interpolated })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mehler_closed_form_value() {
        let v = mehler_heat_kernel(2.0, 1.0, Point::ORIGIN, Point::ORIGIN).unwrap();
        assert!((v - 2.0 / (4.0 * PI * 2.0f64.sinh())).abs() < 1e-15);
        assert!((v - 0.0438823).abs() < 1e-7);
        assert!(mehler_heat_kernel(2.0, 0.0, Point::ORIGIN, Point::ORIGIN).is_err());
        let (x, y) = (Point::new(0.3, -1.2), Point::new(-0.7, 0.4));
        assert_eq!(mehler_heat_kernel(1.3, 0.7, x, y).unwrap(), mehler_heat_kernel(1.3, 0.7, y, x).unwrap());
        // Large ωt stays finite.
        assert!(ln_mehler_heat_kernel(3.0, 400.0, x, y).unwrap().is_finite());
    }

    #[test]
    fn scaled_exp_integral_values() {
        // E₁(1) = 0.21938393439552029, E₁(0.1) = 1.8229239584193906.
        assert!((scaled_exp_integral(1.0) - 1f64.exp() * 0.219_383_934_395_520_29).abs() < 1e-14);
        assert!((scaled_exp_integral(0.1) - 0.1f64.exp() * 1.822_923_958_419_390_6).abs() < 1e-13);
        // Asymptotic series x·eˣE₁(x) ≈ 1 − 1/x + 2/x² with error below 6/x³.
        assert!((scaled_exp_integral(50.0) * 50.0 - (1.0 - 0.02 + 0.0008)).abs() < 6.0 / 125_000.0);
    }

    #[test]
    fn series_matches_quadrature() {
        let quad = QuadratureSpec::default();
        for (w, z, r) in [(2.0, -3.0, 0.7), (6.0, -21.9, 1.5), (4.0, 3.0, 0.4), (1.0, 0.0, 2.5)] {
            let q = KernelQuery::new(w, z, Point::new(r, 0.0));
            let a = sho_resolvent_kernel(&q, &quad).unwrap();
            let b = sho_resolvent_series(&q, 20_000).unwrap();
            assert!((a - b).abs() < 1e-7 * b, "ω={w} z={z} r={r}: {a} vs {b}");
        }
        assert!(sho_resolvent_series(&KernelQuery::new(6.0, 0.0, Point::new(3.0, 0.0)), 100).is_err());
    }

    #[test]
    fn resolvent_rejects_bad_queries() {
        let q = QuadratureSpec::default();
        assert!(matches!(
            sho_resolvent_kernel(&KernelQuery::new(4.0, 4.0, Point::new(1.0, 0.0)), &q),
            Err(Error::AboveGroundLevel { .. })
        ));
        assert!(matches!(
            sho_resolvent_kernel(&KernelQuery::new(4.0, 0.0, Point::ORIGIN), &q),
            Err(Error::ZeroDisplacement)
        ));
    }

    #[test]
    fn resolvent_inside_bounds_and_decreasing() {
        let quad = QuadratureSpec::default();
        let q = KernelQuery::new(4.0, 0.0, Point::new(2.0, 0.0));
        let k = ln_sho_resolvent_kernel(&q, &quad).unwrap();
        let (lo, hi) = ln_kernel_bounds(&q).unwrap();
        assert!(lo < k.ln_value && k.ln_value < hi);
        assert!(k.rel_error < 1e-9);
        let mut prev = f64::INFINITY;
        for i in 1..=20 {
            let r = 0.25 * i as f64;
            let v = sho_resolvent_kernel(&KernelQuery::new(3.0, -2.0, Point::new(r, 0.0)), &quad).unwrap();
            assert!(v < prev);
            prev = v;
        }
    }

    #[test]
    fn deep_tail_is_finite() {
        let q = KernelQuery::new(10.0, -30.0, Point::new(15.0, 0.0));
        let k = ln_sho_resolvent_kernel(&q, &QuadratureSpec::default()).unwrap();
        let (lo, hi) = ln_kernel_bounds(&q).unwrap();
        assert!(k.ln_value < -500.0);
        assert!(lo < k.ln_value && k.ln_value < hi);
    }

    #[test]
    fn resolvent_is_laplace_transform_of_mehler() {
        // K(x) = ∫₀^∞ e^{zt} K_t(x, 0) dt, integrated directly in t.
        let (w, z, x) = (2.0, -1.0, Point::new(0.8, 0.6));
        let quad = QuadratureSpec::default();
        let direct = integrate_log(
            |v: f64| {
                let t = -v.ln();
                z * t + ln_mehler_heat_kernel(w, t, x, Point::ORIGIN).unwrap() - v.ln()
            },
            0.0,
            1.0,
            &QuadratureSpec { rel_tol: 1e-11, ..quad },
        );
        let k = ln_sho_resolvent_kernel(&KernelQuery::new(w, z, x), &quad).unwrap();
        assert!((direct.ln_value - k.ln_value).abs() < 1e-8);
    }

    #[test]
    fn bounds_share_gaussian_and_z_plus() {
        let q0 = KernelQuery::new(2.0, 0.0, Point::new(1.0, 0.0));
        let (_, hi) = ln_kernel_bounds(&q0).unwrap();
        let e = std::f64::consts::E;
        let want = -PI.ln() - 0.5 + (0.5 + 1.0 / (2.0 * (e - 1.0 / e))).ln();
        assert!((hi - want).abs() < 1e-14);
        let far = |r: f64| ln_kernel_bounds(&KernelQuery::new(2.0, -1.0, Point::new(r, 0.0))).unwrap();
        let (l1, u1) = far(10.0);
        let (l2, u2) = far(20.0);
        // Both decay like −ω r²/4 up to slowly varying factors.
        assert!(((l2 - l1) / -150.0 - 1.0).abs() < 0.02);
        assert!(((u2 - u1) / -150.0 - 1.0).abs() < 0.02);
    }

    #[test]
    fn landau_kernel_phase() {
        let quad = QuadratureSpec::default();
        let (x, y) = (Point::new(0.4, 1.1), Point::new(-0.9, 0.3));
        let a = landau_resolvent_kernel(3.0, 0.5, x, y, &quad).unwrap();
        let b = landau_resolvent_kernel(3.0, 0.5, y, x, &quad).unwrap();
        assert!((a - b.conj()).norm() < 1e-15);
        let k = sho_resolvent_kernel(&KernelQuery::new(3.0, 0.5, x - y), &quad).unwrap();
        assert!((a.norm() - k).abs() < 1e-14 * k);
        let c = landau_resolvent_kernel(3.0, 0.5, x, Point::ORIGIN, &quad).unwrap();
        assert_eq!(c.im, 0.0);
    }

    #[test]
    fn table_matches_direct() {
        let quad = QuadratureSpec::default();
        let t = KernelTable::new(6.0, -20.0, 1e-4, 10.0, 1500, &quad).unwrap();
        for r in [1e-3, 0.05, 0.7, 1.9, 4.4, 8.3] {
            let d = sho_resolvent_kernel(&KernelQuery::new(6.0, -20.0, Point::new(r, 0.0)), &quad).unwrap();
            assert!((t.eval(r) / d - 1.0).abs() < 1e-6, "r={r}");
        }
    }
}
