//! Reference computations written independently of the library code paths.
#![allow(dead_code)]

use std::f64::consts::PI;

/// Frozen value of `2∫₀¹ exp(1 − 1/(1−t²)) t dt` (= `1 − e·E₁(1)`).
pub const SOPHON_MEAN: f64 = 0.403_652_637_676_805_6;

/// `eˣ E₁(x) = ∫₀^∞ e^{−s}/(x+s) ds`, trapezoid in `ln s`.
pub fn scaled_e1(x: f64) -> f64 {
    let (a, b) = (-40.0_f64, 60.0_f64.ln());
    let n = 40_000;
    let step = (b - a) / n as f64;
    let mut sum = 0.0;
    for i in 0..=n {
        let s = (a + i as f64 * step).exp();
        let w = if i == 0 || i == n { 0.5 } else { 1.0 };
        sum += w * s * (-s).exp() / (x + s);
    }
    sum * step
}

/// `ln` of the Mehler kernel between `x` and the origin, `r2 = |x|²`.
fn ln_mehler_origin(omega: f64, t: f64, r2: f64) -> f64 {
    let s = omega * t;
    let ln_sinh = if s > 20.0 { s - std::f64::consts::LN_2 } else { s.sinh().ln() };
    (omega / (4.0 * PI)).ln() - ln_sinh - 0.25 * omega * r2 / s.tanh()
}

/// `K_{ω,z}(r) = ∫₀^∞ e^{zt} M_t(r) dt`, trapezoid in `ln t`.
pub fn laplace_kernel(omega: f64, z: f64, r: f64) -> f64 {
    let r2 = r * r;
    let ln_f = |y: f64| {
        let t = y.exp();
        z * t + ln_mehler_origin(omega, t, r2) + y
    };
    let rate = omega - z;
    let b = (60.0 / rate + r2 + 1.0).ln();
    let a = (r2 / 2000.0).max(1e-300).ln().min(b - 5.0);
    let n = 60_000;
    let step = (b - a) / n as f64;
    let peak = (0..=n).map(|i| ln_f(a + i as f64 * step)).fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for i in 0..=n {
        let w = if i == 0 || i == n { 0.5 } else { 1.0 };
        sum += w * (ln_f(a + i as f64 * step) - peak).exp();
    }
    sum * step * peak.exp()
}

/// Mehler kernel `M_t(x, y)` for `−Δ + ω²|x|²/4`.
pub fn mehler(omega: f64, t: f64, x: [f64; 2], y: [f64; 2]) -> f64 {
    let s = omega * t;
    let (xx, yy) = (x[0] * x[0] + x[1] * x[1], y[0] * y[0] + y[1] * y[1]);
    let xy = x[0] * y[0] + x[1] * y[1];
    omega / (4.0 * PI * s.sinh()) * (-0.25 * omega * ((xx + yy) / s.tanh() - 2.0 * xy / s.sinh())).exp()
}

/// `∫ M_t(x, y) M_s(y, 0) dy` by the midpoint rule on `[−b, b]²`, for any
/// kernel `m(t, x, y)`.
pub fn mehler_composition(m: impl Fn(f64, [f64; 2], [f64; 2]) -> f64, t: f64, s: f64, x: [f64; 2], b: f64, n: usize) -> f64 {
    let h = 2.0 * b / n as f64;
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            let y = [-b + (i as f64 + 0.5) * h, -b + (j as f64 + 0.5) * h];
            sum += m(t, x, y) * m(s, y, [0.0, 0.0]);
        }
    }
    sum * h * h
}

/// Mean of the smooth bump over the unit disc, midpoint rule on the square.
pub fn cartesian_sophon_mean(n: usize) -> f64 {
    let h = 2.0 / n as f64;
    let mut sum = 0.0;
    for i in 0..n {
        let x = -1.0 + (i as f64 + 0.5) * h;
        for j in 0..n {
            let y = -1.0 + (j as f64 + 0.5) * h;
            let r2 = x * x + y * y;
            if r2 < 1.0 {
                sum += (1.0 - 1.0 / (1.0 - r2)).exp();
            }
        }
    }
    sum * h * h / PI
}
