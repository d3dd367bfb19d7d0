//! Planet and sophon profiles and the single/double-well potentials built from them.

use crate::params::{DerivedParams, ModelParams};
use crate::point::Point;
use crate::quadrature;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    /// `-exp(1 - 1/(1 - r²))` on the unit disc.
    SmoothBump,
    /// `-1` on the unit disc; only used to check averaging.
    Flat,
}

impl Shape {
    /// Profile on the unit disc as a function of `r²`, in `[-1, 0]`.
    fn eval_r2(self, r2: f64) -> f64 {
        if r2 >= 1.0 {
            return 0.0;
        }
        match self {
            Shape::SmoothBump => -(1.0 - 1.0 / (1.0 - r2)).exp(),
            Shape::Flat => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RadialProfile {
    pub depth: f64,
    pub support_radius: f64,
    pub shape: Shape,
}

impl Default for RadialProfile {
    fn default() -> Self {
        RadialProfile { depth: 1.0, support_radius: 1.0, shape: Shape::SmoothBump }
    }
}

pub fn eval_planet(prof: &RadialProfile, x: Point) -> f64 {
    let r2 = x.norm_sqr() / (prof.support_radius * prof.support_radius);
    prof.depth * prof.shape.eval_r2(r2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SophonProfile {
    pub radius: f64,
    pub shape: Shape,
    /// `c`, where the average of `W₀` over its support disc is `-c`.
    pub mean_abs: f64,
}

impl SophonProfile {
    pub fn new(radius: f64, shape: Shape) -> Self {
        let mut p = SophonProfile { radius, shape, mean_abs: 0.0 };
        p.mean_abs = sophon_mean(&p);
        p
    }

    /// `W₀(x)`, unit depth.
    pub fn eval(&self, x: Point) -> f64 {
        self.shape.eval_r2(x.norm_sqr() / (self.radius * self.radius))
    }
}

/// `c = -(1/|B_δ|) ∫_{B_δ} W₀`.
///
/// The profile is radial, so the disc integral reduces to `2∫₀¹ |w(t)| t dt`,
/// which is also why `c` does not depend on δ.
pub fn sophon_mean(prof: &SophonProfile) -> f64 {
    let shape = prof.shape;
    let (v, _) = quadrature::integrate(|t| -shape.eval_r2(t * t) * t, 0.0, 1.0, 1e-14, 0.0);
    2.0 * v
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WellKind {
    SingleCentered,
    Left,
    Right,
    Double,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PotentialSpec {
    pub params: ModelParams,
    pub derived: DerivedParams,
    pub planet: RadialProfile,
    pub sophon: SophonProfile,
    pub kind: WellKind,
}

impl PotentialSpec {
    /// Default planet (bump, depth 1, radius `r0`) and sophon (bump of radius δ).
    pub fn new(params: ModelParams, derived: DerivedParams, kind: WellKind) -> Self {
        let planet = RadialProfile { support_radius: params.r0, ..RadialProfile::default() };
        let sophon = SophonProfile::new(derived.delta, Shape::SmoothBump);
        PotentialSpec { params, derived, planet, sophon, kind }
    }

    pub fn with_kind(&self, kind: WellKind) -> Self {
        PotentialSpec { kind, ..self.clone() }
    }

    pub fn with_tau(&self, tau: f64) -> Self {
        let mut s = self.clone();
        s.derived.tau = tau;
        s
    }

    pub fn with_d1(&self, d1: f64) -> Self {
        let mut s = self.clone();
        s.derived.d1 = d1;
        s
    }

    /// `λ² v°(x)`.
    pub fn planet_term(&self, x: Point) -> f64 {
        let l = self.params.lambda;
        l * l * eval_planet(&self.planet, x)
    }

    /// `τ W₀(x − ζ_ν)`.
    pub fn sophon_term(&self, nu: usize, x: Point) -> f64 {
        self.derived.tau * self.sophon.eval(x - self.derived.centers[nu])
    }

    /// `v(x) = λ² v°(x) + τ Σ_ν W₀(x − ζ_ν)`, the well centred at the origin.
    pub fn eval_single_well(&self, x: Point) -> f64 {
        let mut v = self.planet_term(x);
        if self.derived.tau != 0.0 {
            for nu in 0..self.derived.centers.len() {
                v += self.sophon_term(nu, x);
            }
        }
        v
    }

    /// `v(x + d) + v(−x + d)`; the two terms swap under `x ↦ −x`, so the
    /// result is bitwise even.
    pub fn eval_double_well(&self, x: Point) -> f64 {
        let d = self.derived.d();
        self.eval_single_well(x + d) + self.eval_single_well(-x + d)
    }

    pub fn eval(&self, x: Point) -> f64 {
        let d = self.derived.d();
        match self.kind {
            WellKind::SingleCentered => self.eval_single_well(x),
            WellKind::Left => self.eval_single_well(x + d),
            WellKind::Right => self.eval_single_well(-x + d),
            WellKind::Double => self.eval_double_well(x),
        }
    }
}
