//! One-dimensional quadrature: adaptive Gauss–Kronrod (7/15) in linear and
//! log space, and Gauss–Legendre rules for tensor-product panels.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    /// Absolute error floor, in units of the integrand's peak value.
    pub abs_tol: f64,
    /// Split point of the Laplace integral in s.
    pub split_point: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec { rel_tol: 1e-9, abs_tol: 1e-30, split_point: 1.0 }
    }
}

/// Result of a log-space integration: the value is `exp(ln_value)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogQuad {
    pub ln_value: f64,
    /// Estimated relative error (max of the Kronrod estimate and the halving check).
    pub rel_error: f64,
    pub panels: usize,
}

impl LogQuad {
    pub fn value(&self) -> f64 {
        self.ln_value.exp()
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_PANELS: usize = 4000;

#[derive(Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    /// Log of the scale factored out of `kron` and `err`.
    scale: f64,
    kron: f64,
    err: f64,
}

fn gk_panel_log(ln_f: &impl Fn(f64) -> f64, a: f64, b: f64) -> Panel {
    let c = 0.5 * (a + b);
    let hw = 0.5 * (b - a);
    let mut l = [f64::NEG_INFINITY; 15];
    for i in 0..7 {
        l[2 * i] = ln_f(c - hw * XGK[i]);
        l[2 * i + 1] = ln_f(c + hw * XGK[i]);
    }
    l[14] = ln_f(c);
    let m = l.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return Panel { a, b, scale: f64::NEG_INFINITY, kron: 0.0, err: 0.0 };
    }
    let e = |v: f64| (v - m).exp();
    let mut kron = WGK[7] * e(l[14]);
    let mut gauss = WG[3] * e(l[14]);
    for i in 0..7 {
        let pair = e(l[2 * i]) + e(l[2 * i + 1]);
        kron += WGK[i] * pair;
        if i % 2 == 1 {
            gauss += WG[i / 2] * pair;
        }
    }
    Panel { a, b, scale: m + hw.ln(), kron, err: (kron - gauss).abs() }
}

fn gk_panel(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> Panel {
    let c = 0.5 * (a + b);
    let hw = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let pair = f(c - hw * XGK[i]) + f(c + hw * XGK[i]);
        kron += WGK[i] * pair;
        if i % 2 == 1 {
            gauss += WG[i / 2] * pair;
        }
    }
    Panel { a, b, scale: 0.0, kron: kron * hw, err: ((kron - gauss) * hw).abs() }
}

fn rescaled_sum(panels: &[Panel], top: f64, pick: impl Fn(&Panel) -> f64) -> f64 {
    panels
        .iter()
        .filter(|p| p.scale > f64::NEG_INFINITY)
        .map(|p| pick(p) * (p.scale - top).exp())
        .sum()
}

/// Integrate a positive function given through its logarithm over `[a, b]`.
///
/// Works entirely with log-scaled panel sums, so integrands far below the
/// smallest normal double are handled. Returns `ln_value = -inf` when the
/// integrand vanishes identically.
pub fn integrate_log(ln_f: impl Fn(f64) -> f64, a: f64, b: f64, spec: &QuadratureSpec) -> LogQuad {
    let mut panels = vec![gk_panel_log(&ln_f, a, b)];
    loop {
        let top = panels.iter().map(|p| p.scale).fold(f64::NEG_INFINITY, f64::max);
        if top == f64::NEG_INFINITY {
            return LogQuad { ln_value: f64::NEG_INFINITY, rel_error: 0.0, panels: panels.len() };
        }
        let total = rescaled_sum(&panels, top, |p| p.kron);
        let err = rescaled_sum(&panels, top, |p| p.err);
        let floor = spec.abs_tol * (b - a).abs().max(1.0);
        if err <= (spec.rel_tol * total).max(floor) || panels.len() >= MAX_PANELS {
            let halved = halving_check_log(&ln_f, &panels, top);
            let rel_error = (err.max((halved - total).abs())) / total;
            return LogQuad { ln_value: top + total.ln(), rel_error, panels: panels.len() };
        }
        let worst = (0..panels.len())
            .max_by(|&i, &j| {
                let ei = panels[i].err * (panels[i].scale - top).exp();
                let ej = panels[j].err * (panels[j].scale - top).exp();
                ei.total_cmp(&ej)
            })
            .unwrap();
        let p = panels.swap_remove(worst);
        let mid = 0.5 * (p.a + p.b);
        panels.push(gk_panel_log(&ln_f, p.a, mid));
        panels.push(gk_panel_log(&ln_f, mid, p.b));
    }
}

fn halving_check_log(ln_f: &impl Fn(f64) -> f64, panels: &[Panel], top: f64) -> f64 {
    panels
        .iter()
        .map(|p| {
            let mid = 0.5 * (p.a + p.b);
            let l = gk_panel_log(ln_f, p.a, mid);
            let r = gk_panel_log(ln_f, mid, p.b);
            let part = |q: &Panel| {
                if q.scale == f64::NEG_INFINITY {
                    0.0
                } else {
                    q.kron * (q.scale - top).exp()
                }
            };
            part(&l) + part(&r)
        })
        .sum()
}

/// Adaptive Gauss–Kronrod for ordinary real integrands on a finite interval.
/// Returns `(value, error_estimate)`.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64, abs_tol: f64) -> (f64, f64) {
    let mut panels = vec![gk_panel(&f, a, b)];
    loop {
        let total: f64 = panels.iter().map(|p| p.kron).sum();
        let err: f64 = panels.iter().map(|p| p.err).sum();
        if err <= (rel_tol * total.abs()).max(abs_tol) || panels.len() >= MAX_PANELS {
            return (total, err);
        }
        let worst = (0..panels.len()).max_by(|&i, &j| panels[i].err.total_cmp(&panels[j].err)).unwrap();
        let p = panels.swap_remove(worst);
        let mid = 0.5 * (p.a + p.b);
        panels.push(gk_panel(&f, p.a, mid));
        panels.push(gk_panel(&f, mid, p.b));
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    if n == 1 {
        return (vec![0.0], vec![2.0]);
    }
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Gauss–Legendre rule mapped to `[a, b]`.
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let c = 0.5 * (a + b);
    let hw = 0.5 * (b - a);
    (x.iter().map(|t| c + hw * t).collect(), w.iter().map(|v| v * hw).collect())
}
