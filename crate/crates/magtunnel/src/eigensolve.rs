//! Lowest eigenpairs of the grid Hamiltonian: block LOBPCG with
//! Rayleigh–Ritz on `[X, W, P]`, optional parity-sector projection, and a
//! dense oracle for small grids.

use crate::error::{Error, Result};
use crate::grid::{dot, GridField};
use crate::operator::MagneticOperator;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

type C = Complex64;
const ZERO: C = C { re: 0.0, im: 0.0 };

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preconditioner {
    None,
    InverseDiagonal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Block LOBPCG, Rayleigh–Ritz on `[X, T R, P]`.
    Lobpcg,
    /// Subspace iteration with a Chebyshev polynomial filter of the given degree.
    ChebyshevFiltered { degree: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EigenRequest {
    pub k: usize,
    /// Residual tolerance relative to `max(1, |E|)`, floored at the
    /// rounding level [`residual_limit`].
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    /// Extra block columns beyond `k`.
    pub guard: usize,
    pub method: Method,
    pub preconditioner: Preconditioner,
}

impl Default for EigenRequest {
    fn default() -> Self {
        EigenRequest {
            k: 4,
            tol: 1e-8,
            max_iter: 1000,
            seed: 1,
            guard: 3,
            method: Method::ChebyshevFiltered { degree: 30 },
            preconditioner: Preconditioner::InverseDiagonal,
        }
    }
}

impl EigenRequest {
    pub fn with_k(self, k: usize) -> Self {
        EigenRequest { k, ..self }
    }
}

#[derive(Debug, Clone)]
pub struct EigenResult {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<GridField>,
    pub residuals: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub method: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Sector {
    Even,
    Odd,
}

impl Sector {
    pub fn sign(self) -> f64 {
        match self {
            Sector::Even => 1.0,
            Sector::Odd => -1.0,
        }
    }
}

/// Column-major block of vectors.
#[derive(Clone)]
struct Block {
    rows: usize,
    cols: usize,
    data: Vec<C>,
}

impl Block {
    fn zeros(rows: usize, cols: usize) -> Self {
        Block { rows, cols, data: vec![ZERO; rows * cols] }
    }

    fn col(&self, j: usize) -> &[C] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    fn col_mut(&mut self, j: usize) -> &mut [C] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    fn hcat(a: &Block, b: &Block) -> Block {
        let mut data = Vec::with_capacity(a.data.len() + b.data.len());
        data.extend_from_slice(&a.data);
        data.extend_from_slice(&b.data);
        Block { rows: a.rows, cols: a.cols + b.cols, data }
    }

    /// `selfᴴ other`.
    fn gram(&self, other: &Block) -> DMatrix<C> {
        let mut g = DMatrix::zeros(self.cols, other.cols);
        for i in 0..self.cols {
            for j in 0..other.cols {
                g[(i, j)] = dot(self.col(i), other.col(j));
            }
        }
        g
    }

    /// `selfᴴ self`, Hermitian by construction.
    fn gram_self(&self) -> DMatrix<C> {
        let mut g = DMatrix::zeros(self.cols, self.cols);
        for i in 0..self.cols {
            for j in i..self.cols {
                let v = dot(self.col(i), self.col(j));
                g[(i, j)] = v;
                g[(j, i)] = v.conj();
            }
            g[(i, i)].im = 0.0;
        }
        g
    }

    /// `self · c`.
    fn mul(&self, c: &DMatrix<C>) -> Block {
        let mut out = Block::zeros(self.rows, c.ncols());
        for j in 0..c.ncols() {
            let o = &mut out.data[j * self.rows..(j + 1) * self.rows];
            for i in 0..self.cols {
                let a = c[(i, j)];
                if a == ZERO {
                    continue;
                }
                for (o, x) in o.iter_mut().zip(self.col(i)) {
                    *o += a * x;
                }
            }
        }
        out
    }

    /// `self −= x · (xᴴ self)`.
    fn subtract_projection(&mut self, x: &Block) {
        let c = x.gram(self);
        let p = x.mul(&c);
        for (a, b) in self.data.iter_mut().zip(&p.data) {
            *a -= b;
        }
    }

}

/// Ascending eigen-decomposition of a small Hermitian matrix.
fn hermitian_eig(mut g: DMatrix<C>) -> (Vec<f64>, DMatrix<C>) {
    let n = g.nrows();
    for i in 0..n {
        for j in i + 1..n {
            let v = 0.5 * (g[(i, j)] + g[(j, i)].conj());
            g[(i, j)] = v;
            g[(j, i)] = v.conj();
        }
        g[(i, i)].im = 0.0;
    }
    let eig = nalgebra::SymmetricEigen::new(g);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = DMatrix::zeros(n, n);
    for (j, &i) in order.iter().enumerate() {
        vecs.set_column(j, &eig.eigenvectors.column(i));
    }
    (vals, vecs)
}

/// Orthonormalize the columns of `b` (SVQB), dropping numerically dependent
/// directions. Two passes.
fn orthonormalize(b: &Block) -> Block {
    let mut cur = b.clone();
    for _ in 0..2 {
        if cur.cols == 0 {
            return cur;
        }
        let g = cur.gram_self();
        let dscale: Vec<f64> = (0..cur.cols)
            .map(|i| {
                let d = g[(i, i)].re;
                if d > 0.0 { 1.0 / d.sqrt() } else { 0.0 }
            })
            .collect();
        let mut gs = g.clone();
        for i in 0..cur.cols {
            for j in 0..cur.cols {
                gs[(i, j)] *= dscale[i] * dscale[j];
            }
        }
        let (vals, vecs) = hermitian_eig(gs);
        let top = vals.last().copied().unwrap_or(0.0);
        let keep: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] > 1e-14 * top && top > 0.0).collect();
        let mut t = DMatrix::zeros(cur.cols, keep.len());
        for (j, &i) in keep.iter().enumerate() {
            let s = 1.0 / vals[i].sqrt();
            for r in 0..cur.cols {
                t[(r, j)] = vecs[(r, i)] * (dscale[r] * s);
            }
        }
        cur = cur.mul(&t);
    }
    cur
}

fn project_sector(v: &mut [C], sector: Sector) {
    let n = v.len();
    let s = sector.sign();
    for k in 0..n.div_ceil(2) {
        let a = v[k];
        let b = v[n - 1 - k];
        let p = (a + b * s) * 0.5;
        v[k] = p;
        v[n - 1 - k] = p * s;
    }
}

struct Solver<'a> {
    op: &'a MagneticOperator,
    sector: Option<Sector>,
    precond: Preconditioner,
}

impl Solver<'_> {
    fn apply_block(&self, x: &Block) -> Block {
        let mut y = Block::zeros(x.rows, x.cols);
        for j in 0..x.cols {
            let (xs, ys) = (x.col(j), &mut y.data[j * x.rows..(j + 1) * x.rows]);
            self.op.apply_into(xs, ys);
        }
        y
    }

    fn project(&self, b: &mut Block) {
        if let Some(s) = self.sector {
            for j in 0..b.cols {
                project_sector(b.col_mut(j), s);
            }
        }
    }

    fn precondition(&self, r: &mut [C], theta: f64) {
        match self.precond {
            Preconditioner::None => {}
            Preconditioner::InverseDiagonal => {
                let h = self.op.grid.spacing;
                let floor = 1.0 / (h * h);
                for (x, d) in r.iter_mut().zip(self.op.diagonal()) {
                    *x /= (d - theta).abs().max(floor);
                }
            }
        }
    }
}

fn random_block(rows: usize, cols: usize, seed: u64) -> Block {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = Block::zeros(rows, cols);
    for v in b.data.iter_mut() {
        *v = C::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
    }
    b
}

/// Residual bound for an eigenvalue estimate `theta`: `tol·max(1, |θ|)`, but
/// never below `4ε‖H‖`, which a matvec in floating point cannot beat.
pub fn residual_limit(op: &MagneticOperator, tol: f64, theta: f64) -> f64 {
    (tol * theta.abs().max(1.0)).max(4.0 * f64::EPSILON * op.norm_estimate())
}

/// The `k` lowest eigenpairs of `op` from a seeded random start block.
pub fn lowest_eigenpairs(op: &MagneticOperator, req: &EigenRequest) -> Result<EigenResult> {
    lowest_eigenpairs_from(op, req, &[], None)
}

/// Iterate from `start` (padded with seeded random columns), with every
/// iterate projected onto `sector` when given.
pub fn lowest_eigenpairs_from(
    op: &MagneticOperator,
    req: &EigenRequest,
    start: &[GridField],
    sector: Option<Sector>,
) -> Result<EigenResult> {
    if req.k == 0 || !(req.tol > 0.0) {
        return Err(Error::InvalidParameter("eigen request needs k >= 1 and tol > 0".into()));
    }
    for f in start {
        if !f.grid.same_as(&op.grid) {
            return Err(Error::GridMismatch("start vector grid differs from operator grid".into()));
        }
    }
    let dim = op.dim();
    let m = (req.k + req.guard).min(dim);
    if req.k > m {
        return Err(Error::InvalidParameter(format!("k = {} exceeds dimension {dim}", req.k)));
    }
    let solver = Solver { op, sector, precond: req.preconditioner };

    let mut x = None;
    for attempt in 0..2u64 {
        let mut b = random_block(dim, m, req.seed.wrapping_add(attempt.wrapping_mul(0x9e37_79b9)));
        for (j, f) in start.iter().take(m).enumerate() {
            b.col_mut(j).copy_from_slice(&f.values);
        }
        solver.project(&mut b);
        let q = orthonormalize(&b);
        if q.cols >= req.k {
            x = Some(q);
            break;
        }
    }
    let x = x.ok_or(Error::EmptySector)?;

    let (x, iterations, converged) = match req.method {
        Method::Lobpcg => lobpcg(&solver, req, x),
        Method::ChebyshevFiltered { degree } => chebyshev(&solver, req, x, degree.max(1)),
    };
    if x.cols < req.k {
        return Err(Error::NotConverged("search space collapsed below k vectors".into()));
    }

    // Refine with explicit matvecs: Rayleigh quotients and true residuals.
    let h = op.grid.spacing;
    let mut eigenvalues = Vec::with_capacity(req.k);
    let mut residuals = Vec::with_capacity(req.k);
    let mut eigenvectors = Vec::with_capacity(req.k);
    let mut hx = vec![ZERO; dim];
    for j in 0..req.k {
        let mut v = x.col(j).to_vec();
        if let Some(s) = sector {
            project_sector(&mut v, s);
        }
        let nrm = dot(&v, &v).re.sqrt();
        v.iter_mut().for_each(|a| *a /= nrm);
        op.apply_into(&v, &mut hx);
        let e = dot(&v, &hx).re;
        let res = hx.iter().zip(&v).map(|(a, b)| (a - b * e).norm_sqr()).sum::<f64>().sqrt();
        eigenvalues.push(e);
        residuals.push(res);
        v.iter_mut().for_each(|a| *a /= h);
        eigenvectors.push(GridField { values: v, grid: op.grid });
    }
    let converged = converged
        && (0..req.k).all(|j| residuals[j] <= residual_limit(op, req.tol, eigenvalues[j]) * 1.01);
    let method = match req.method {
        Method::Lobpcg => format!("lobpcg(block={m}, preconditioner={:?})", req.preconditioner),
        Method::ChebyshevFiltered { degree } => format!("chebyshev-filtered-subspace(block={m}, degree={degree})"),
    };
    Ok(EigenResult { eigenvalues, eigenvectors, residuals, iterations, converged, method })
}

fn rayleigh_ritz(solver: &Solver, x: &Block) -> (Block, Block, Vec<f64>) {
    let ax = solver.apply_block(x);
    let (theta, c) = hermitian_eig(x.gram(&ax));
    (x.mul(&c), ax.mul(&c), theta)
}

fn residual_norms(x: &Block, ax: &Block, theta: &[f64]) -> Vec<f64> {
    (0..x.cols)
        .map(|j| {
            ax.col(j)
                .iter()
                .zip(x.col(j))
                .map(|(a, b)| (a - b * theta[j]).norm_sqr())
                .sum::<f64>()
                .sqrt()
        })
        .collect()
}

fn lobpcg(solver: &Solver, req: &EigenRequest, x0: Block) -> (Block, usize, bool) {
    let (mut x, mut ax, mut theta) = rayleigh_ritz(solver, &x0);
    let mut p: Option<Block> = None;
    for it in 0..req.max_iter {
        let resid = residual_norms(&x, &ax, &theta);
        let limit = |j: usize| residual_limit(solver.op, req.tol, theta[j]);
        if (0..req.k).all(|j| resid[j] <= limit(j)) {
            return (x, it, true);
        }
        let active: Vec<usize> = (0..x.cols).filter(|&j| resid[j] > 0.1 * limit(j)).collect();
        let mut w = Block::zeros(x.rows, active.len());
        for (jj, &j) in active.iter().enumerate() {
            let t = theta[j];
            for ((wv, av), xv) in w.col_mut(jj).iter_mut().zip(ax.col(j)).zip(x.col(j)) {
                *wv = av - xv * t;
            }
            solver.precondition(w.col_mut(jj), t);
        }
        solver.project(&mut w);
        let mut z = match &p {
            Some(p) => Block::hcat(&w, p),
            None => w,
        };
        z.subtract_projection(&x);
        z.subtract_projection(&x);
        let mut z = orthonormalize(&z);
        if z.cols == 0 {
            return (x, it, false);
        }
        solver.project(&mut z);
        let az = solver.apply_block(&z);
        let q = Block::hcat(&x, &z);
        let aq = Block::hcat(&ax, &az);
        let (vals, vecs) = hermitian_eig(q.gram(&aq));
        let c = vecs.columns(0, x.cols).into_owned();
        let cz = c.rows(x.cols, z.cols).into_owned();
        p = Some(z.mul(&cz));
        x = q.mul(&c);
        ax = aq.mul(&c);
        theta = vals[..x.cols].to_vec();
        if it % 16 == 15 {
            let q = orthonormalize(&x);
            if q.cols == x.cols {
                (x, ax, theta) = rayleigh_ritz(solver, &q);
            }
        }
    }
    (x, req.max_iter, false)
}

/// `p(H) x` for the scaled Chebyshev polynomial of degree `degree` that is
/// bounded on `[a, b]` and grows below `a`, normalized near `low`.
fn chebyshev_filter(solver: &Solver, x: &Block, degree: usize, a: f64, b: f64, low: f64) -> Block {
    let e = 0.5 * (b - a);
    let c = 0.5 * (b + a);
    let sigma1 = e / (low - c);
    let tau = 2.0 / sigma1;
    let n = x.rows;
    let mut out = Block::zeros(n, x.cols);
    let mut prev = vec![ZERO; n];
    let mut cur = vec![ZERO; n];
    let mut hv = vec![ZERO; n];
    for j in 0..x.cols {
        prev.copy_from_slice(x.col(j));
        solver.op.apply_into(&prev, &mut hv);
        for i in 0..n {
            cur[i] = (hv[i] - prev[i] * c) * (sigma1 / e);
        }
        let mut sigma = sigma1;
        for _ in 1..degree {
            let sigma_new = 1.0 / (tau - sigma);
            solver.op.apply_into(&cur, &mut hv);
            let s1 = 2.0 * sigma_new / e;
            let s2 = sigma * sigma_new;
            for i in 0..n {
                let next = (hv[i] - cur[i] * c) * s1 - prev[i] * s2;
                prev[i] = cur[i];
                cur[i] = next;
            }
            sigma = sigma_new;
        }
        out.col_mut(j).copy_from_slice(&cur);
    }
    out
}

fn chebyshev(solver: &Solver, req: &EigenRequest, x0: Block, degree: usize) -> (Block, usize, bool) {
    let upper = solver.op.norm_estimate();
    let (mut x, mut ax, mut theta) = rayleigh_ritz(solver, &x0);
    for it in 0..req.max_iter {
        let resid = residual_norms(&x, &ax, &theta);
        if (0..req.k).all(|j| resid[j] <= residual_limit(solver.op, req.tol, theta[j])) {
            return (x, it, true);
        }
        let low = theta[0];
        let mut cut = theta[x.cols - 1];
        if cut - low < 1e-3 * (upper - low) {
            cut = low + 1e-3 * (upper - low);
        }
        let mut y = chebyshev_filter(solver, &x, degree, cut, upper, low);
        solver.project(&mut y);
        let y = orthonormalize(&y);
        if y.cols < req.k {
            return (x, it, false);
        }
        (x, ax, theta) = rayleigh_ritz(solver, &y);
    }
    (x, req.max_iter, false)
}

/// Ground pair of `op` restricted to the even or odd parity sector.
pub fn ground_state_in_sector(
    op: &MagneticOperator,
    sector: Sector,
    req: &EigenRequest,
    start: &[GridField],
) -> Result<(f64, GridField, EigenResult)> {
    let r = lowest_eigenpairs_from(op, &req.with_k(1), start, Some(sector))?;
    Ok((r.eigenvalues[0], r.eigenvectors[0].clone(), r))
}

/// All eigenvalues of the assembled matrix, ascending. Limited to `n ≤ 40`.
pub fn dense_reference(op: &MagneticOperator) -> Result<Vec<f64>> {
    if op.grid.n > 40 {
        return Err(Error::GridTooLarge(op.grid.n));
    }
    let (vals, _) = hermitian_eig(op.to_dense());
    Ok(vals)
}
