//! Origin-centred uniform grid and complex fields on it.

use crate::error::{Error, Result};
use crate::point::Point;
use num_complex::Complex64;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid2D {
    pub n: usize,
    pub half_width: f64,
    pub spacing: f64,
}

impl Grid2D {
    pub fn new(n: usize, half_width: f64) -> Result<Self> {
        if n < 3 || n % 2 == 0 {
            return Err(Error::InvalidParameter(format!("grid size must be odd and >= 3, got {n}")));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::InvalidParameter(format!("half width must be positive, got {half_width}")));
        }
        Ok(Grid2D { n, half_width, spacing: 2.0 * half_width / (n - 1) as f64 })
    }

    /// Smallest odd `n` with spacing at most `h` on `[-L, L]`.
    pub fn with_max_spacing(half_width: f64, h: f64) -> Result<Self> {
        let mut n = (2.0 * half_width / h).ceil() as usize + 1;
        if n % 2 == 0 {
            n += 1;
        }
        Grid2D::new(n.max(3), half_width)
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn center(&self) -> usize {
        (self.n - 1) / 2
    }

    /// `x_j = (j − c)·h`, which equals `−L + j·h` up to rounding and makes
    /// `x_{n−1−j} = −x_j` hold exactly.
    pub fn coord(&self, j: usize) -> f64 {
        (j as f64 - self.center() as f64) * self.spacing
    }

    /// Flat row-major index; `ix` runs along x.
    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.n + ix
    }

    pub fn point(&self, k: usize) -> Point {
        Point::new(self.coord(k % self.n), self.coord(k / self.n))
    }

    pub fn points(&self) -> impl Iterator<Item = Point> + '_ {
        (0..self.len()).map(|k| self.point(k))
    }

    pub fn same_as(&self, other: &Grid2D) -> bool {
        self.n == other.n && self.half_width == other.half_width
    }

    /// Nearest even multiple of `h` to `d1` (at least `2h`), so that `±d` and
    /// `2d` are lattice vectors.
    pub fn snap_half_separation(&self, d1: f64) -> f64 {
        let m = (d1 / (2.0 * self.spacing)).round().max(1.0);
        2.0 * m * self.spacing
    }

    /// Integer lattice offset for `z`, or an error if `z` is not a lattice vector.
    pub fn lattice_offset(&self, z: Point) -> Result<(i64, i64)> {
        let h = self.spacing;
        let (fx, fy) = (z.x / h, z.y / h);
        let (sx, sy) = (fx.round(), fy.round());
        let tol = 1e-9 * (1.0 + fx.abs().max(fy.abs()));
        if (fx - sx).abs() > tol || (fy - sy).abs() > tol {
            return Err(Error::NotOnLattice(z.x, z.y, h));
        }
        Ok((sx as i64, sy as i64))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub values: Vec<Complex64>,
    pub grid: Grid2D,
}

impl GridField {
    pub fn zeros(grid: Grid2D) -> Self {
        GridField { values: vec![Complex64::new(0.0, 0.0); grid.len()], grid }
    }

    pub fn from_fn(grid: Grid2D, f: impl FnMut(Point) -> Complex64) -> Self {
        GridField { values: grid.points().map(f).collect(), grid }
    }

    pub fn from_values(grid: Grid2D, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!("{} values for a grid of {}", values.len(), grid.len())));
        }
        Ok(GridField { values, grid })
    }

    pub fn check_grid(&self, other: &GridField) -> Result<()> {
        if self.grid.same_as(&other.grid) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!("n={} L={} vs n={} L={}",
                self.grid.n, self.grid.half_width, other.grid.n, other.grid.half_width)))
        }
    }

    pub fn scale(&mut self, a: Complex64) {
        self.values.iter_mut().for_each(|v| *v *= a);
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    /// Bilinear interpolation; zero outside the box.
    pub fn interpolate(&self, p: Point) -> Complex64 {
        let g = &self.grid;
        let c = g.center() as f64;
        let fx = p.x / g.spacing + c;
        let fy = p.y / g.spacing + c;
        let last = (g.n - 1) as f64;
        if !(0.0..=last).contains(&fx) || !(0.0..=last).contains(&fy) {
            return Complex64::new(0.0, 0.0);
        }
        let ix = (fx.floor() as usize).min(g.n - 2);
        let iy = (fy.floor() as usize).min(g.n - 2);
        let tx = fx - ix as f64;
        let ty = fy - iy as f64;
        let v = |i, j| self.values[g.index(i, j)];
        v(ix, iy) * ((1.0 - tx) * (1.0 - ty))
            + v(ix + 1, iy) * (tx * (1.0 - ty))
            + v(ix, iy + 1) * ((1.0 - tx) * ty)
            + v(ix + 1, iy + 1) * (tx * ty)
    }
}

/// `⟨f, g⟩ = h² Σ conj(f_j) g_j`.
pub fn inner(f: &GridField, g: &GridField) -> Result<Complex64> {
    f.check_grid(g)?;
    let h2 = f.grid.spacing * f.grid.spacing;
    Ok(dot(&f.values, &g.values) * h2)
}

pub fn norm(f: &GridField) -> f64 {
    let h = f.grid.spacing;
    h * f.values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// Unweighted `Σ conj(a_j) b_j` in a fixed order.
pub fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    let mut re = 0.0;
    let mut im = 0.0;
    for (x, y) in a.iter().zip(b) {
        re += x.re * y.re + x.im * y.im;
        im += x.re * y.im - x.im * y.re;
    }
    Complex64::new(re, im)
}

/// `(𝔓f)(x) = f(−x)`: reversal of the flat index.
pub fn parity(f: &GridField) -> GridField {
    let mut values = f.values.clone();
    values.reverse();
    GridField { values, grid: f.grid }
}

/// `(R^z f)(x) = e^{i(λ/2) x·z^⊥} f(x − z)`, `z^⊥ = (−z₂, z₁)`; zero where
/// `x − z` leaves the box.
pub fn magnetic_translate(f: &GridField, z: Point, lambda: f64) -> Result<GridField> {
    let g = f.grid;
    let (sx, sy) = g.lattice_offset(z)?;
    let zp = z.perp();
    let n = g.n as i64;
    let mut out = GridField::zeros(g);
    for iy in 0..n {
        let jy = iy - sy;
        if jy < 0 || jy >= n {
            continue;
        }
        for ix in 0..n {
            let jx = ix - sx;
            if jx < 0 || jx >= n {
                continue;
            }
            let k = g.index(ix as usize, iy as usize);
            let x = g.point(k);
            let phase = Complex64::from_polar(1.0, 0.5 * lambda * x.dot(zp));
            out.values[k] = phase * f.values[g.index(jx as usize, jy as usize)];
        }
    }
    Ok(out)
}
