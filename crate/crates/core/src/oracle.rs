//! Brute-force real-space reference solver.
//!
//! Discretizes both coordinates on the same uniform grid over `[-X, X]`,
//! with a 3-point Laplacian per axis, `V(x_i) + V(x_j)` on the diagonal and
//! the contact term regularized as `lambda / dx` on the sites `x_i = x_j`.
//! The lowest eigenpair of the symmetric (exchange-even) sector is found by
//! thick-restart Lanczos. Shares no basis or quadrature code with the main
//! solver.

use faer::{Mat, Side};

use crate::error::{Error, Result};
use crate::potential::{v_eval, PotentialParams};

pub const STENCIL: &str = "3-point";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    /// Points per axis, endpoints included.
    pub n: usize,
    /// Half-width of the square domain.
    pub x: f64,
}

impl GridSpec {
    /// Smallest admissible domain for the geometry, `d + R + 2`.
    pub fn min_halfwidth(params: &PotentialParams) -> f64 {
        params.extent() + 2.0
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.x / (self.n - 1) as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        -self.x + self.dx() * i as f64
    }

    pub fn validate(&self, params: &PotentialParams) -> Result<()> {
        if self.n < 64 {
            return Err(Error::invalid("N", format!("need N >= 64, got {}", self.n)));
        }
        let min = Self::min_halfwidth(params);
        if !(self.x >= min) {
            return Err(Error::invalid(
                "X",
                format!("need X >= d + R + 2 = {min}, got {}", self.x),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOptions {
    /// Krylov subspace size before a restart.
    pub krylov_dim: usize,
    /// Ritz vectors kept across a restart.
    pub keep: usize,
    /// Ritz residual target, relative to `1 + |E|`.
    pub tol: f64,
    pub max_restarts: usize,
    pub mem_cap_mb: usize,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions {
            krylov_dim: 48,
            keep: 12,
            tol: 1e-9,
            max_restarts: 2000,
            mem_cap_mb: 3000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OracleResult {
    pub energy: f64,
    pub linear_entropy: f64,
    pub coulomb: f64,
    /// Occupation spectrum of the gridded wavefunction, descending.
    pub occupations: Vec<f64>,
    pub xs: Vec<f64>,
    /// One-particle density normalized to one.
    pub density: Vec<f64>,
    pub dx: f64,
    pub matvecs: usize,
    pub residual: f64,
    /// `max |psi_ij - psi_ji|`.
    pub symmetry_error: f64,
}

struct GridOperator {
    n: usize,
    diag: Vec<f64>,
    hop: f64,
}

impl GridOperator {
    fn new(params: &PotentialParams, grid: &GridSpec) -> Self {
        let n = grid.n;
        let dx = grid.dx();
        let hop = 0.5 / (dx * dx);
        let v: Vec<f64> = (0..n).map(|i| v_eval(params, grid.point(i))).collect();
        let mut diag = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                diag[i * n + j] = v[i] + v[j] + 4.0 * hop;
            }
            diag[i * n + i] += params.lambda / dx;
        }
        GridOperator { n, diag, hop }
    }

    /// `out = H psi`, then exchange-symmetrized.
    fn apply(&self, psi: &[f64], out: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            for j in 0..n {
                let k = i * n + j;
                let mut nb = 0.0;
                if i > 0 {
                    nb += psi[k - n];
                }
                if i + 1 < n {
                    nb += psi[k + n];
                }
                if j > 0 {
                    nb += psi[k - 1];
                }
                if j + 1 < n {
                    nb += psi[k + 1];
                }
                out[k] = self.diag[k] * psi[k] - self.hop * nb;
            }
        }
        symmetrize(out, n);
    }
}

fn symmetrize(v: &mut [f64], n: usize) {
    for i in 0..n {
        for j in i + 1..n {
            let a = 0.5 * (v[i * n + j] + v[j * n + i]);
            v[i * n + j] = a;
            v[j * n + i] = a;
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn scale(v: &mut [f64], s: f64) {
    for x in v.iter_mut() {
        *x *= s;
    }
}

/// Lowest eigenpair of `op` by thick-restart Lanczos with full
/// reorthogonalization. Returns (value, unit vector, matvecs, residual).
fn lowest_pair(op: &GridOperator, start: Vec<f64>, opts: &OracleOptions) -> Result<(f64, Vec<f64>, usize, f64)> {
    let dim = start.len();
    let m = opts.krylov_dim.max(opts.keep + 2).min(dim);
    let keep = opts.keep.min(m - 1);
    let mut vs: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
    let mut v0 = start;
    let nrm = dot(&v0, &v0).sqrt();
    scale(&mut v0, 1.0 / nrm);
    vs.push(v0);
    // upper triangle of the projected matrix, indexed [i][j] with i <= j
    let mut proj = vec![vec![0.0; m + 1]; m + 1];
    let mut locked = 0;
    let mut matvecs = 0;
    let mut w = vec![0.0; dim];
    let mut last_res = f64::INFINITY;

    for _restart in 0..opts.max_restarts {
        let mut beta = 0.0;
        while vs.len() <= m {
            let j = vs.len() - 1;
            op.apply(&vs[j], &mut w);
            matvecs += 1;
            for _pass in 0..2 {
                for (i, v) in vs.iter().enumerate() {
                    let c = dot(v, &w);
                    axpy(-c, v, &mut w);
                    proj[i][j] += c;
                }
            }
            beta = dot(&w, &w).sqrt();
            if beta < 1e-300 {
                break;
            }
            let mut next = w.clone();
            scale(&mut next, 1.0 / beta);
            vs.push(next);
        }
        let size = vs.len().min(m);
        let t = Mat::<f64>::from_fn(size, size, |i, j| {
            let (a, b) = (i.min(j), i.max(j));
            if b < locked {
                if a == b {
                    proj[a][a]
                } else {
                    0.0
                }
            } else {
                proj[a][b]
            }
        });
        let evd = t
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::eigen(t.as_ref(), format!("{e:?}")))?;
        let theta: Vec<f64> = (0..size).map(|i| evd.S().column_vector()[i]).collect();
        let y = evd.U();
        let res = (beta * y[(size - 1, 0)]).abs();
        last_res = res;
        let converged = res < opts.tol * (1.0 + theta[0].abs()) || vs.len() <= m;

        let kept = if converged { 1 } else { keep };
        let mut fresh: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
        for c in 0..kept {
            let mut u = vec![0.0; dim];
            for (r, v) in vs.iter().take(size).enumerate() {
                axpy(y[(r, c)], v, &mut u);
            }
            fresh.push(u);
        }
        if converged {
            let mut u = fresh.pop().unwrap();
            let nrm = dot(&u, &u).sqrt();
            scale(&mut u, 1.0 / nrm);
            return Ok((theta[0], u, matvecs, res));
        }
        fresh.push(vs.pop().unwrap());
        vs = fresh;
        for row in proj.iter_mut() {
            row.iter_mut().for_each(|x| *x = 0.0);
        }
        for (i, th) in theta.iter().take(kept).enumerate() {
            proj[i][i] = *th;
        }
        locked = kept;
    }
    Err(Error::NoConvergence {
        iterations: matvecs,
        residual: last_res,
    })
}

/// Memory the solve needs, in bytes.
pub fn memory_estimate(grid: &GridSpec, opts: &OracleOptions) -> usize {
    grid.n * grid.n * 8 * (opts.krylov_dim + opts.keep + 4)
}

/// Ground state of the two-electron problem on a real-space grid.
pub fn grid_solve(params: &PotentialParams, grid: &GridSpec, opts: &OracleOptions) -> Result<OracleResult> {
    params.validate()?;
    grid.validate(params)?;
    let needed = memory_estimate(grid, opts);
    if needed > opts.mem_cap_mb << 20 {
        return Err(Error::GridTooLarge {
            n: grid.n,
            needed_mb: needed >> 20,
            cap_mb: opts.mem_cap_mb,
        });
    }
    let n = grid.n;
    let dx = grid.dx();
    let op = GridOperator::new(params, grid);

    // nodeless, exchange-even start weighted toward the deep regions
    let scale_v = if params.v0 > 0.0 { params.v0 } else { 1.0 };
    let g: Vec<f64> = (0..n)
        .map(|i| {
            let x = grid.point(i);
            let cut = 1.0 / (1.0 + (2.0 * (x.abs() - params.extent())).exp());
            cut * (1.0 - v_eval(params, x) / scale_v)
        })
        .collect();
    let mut start = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            start[i * n + j] = g[i] * g[j];
        }
    }

    let (energy, mut psi, matvecs, residual) = lowest_pair(&op, start, opts)?;

    // sum psi^2 dx^2 = 1, largest entry positive
    let nrm = (dot(&psi, &psi) * dx * dx).sqrt();
    let mut big = 0;
    for k in 1..psi.len() {
        if psi[k].abs() > psi[big].abs() {
            big = k;
        }
    }
    let s = if psi[big] < 0.0 { -1.0 / nrm } else { 1.0 / nrm };
    scale(&mut psi, s);

    let mut symmetry_error = 0.0f64;
    for i in 0..n {
        for j in i + 1..n {
            symmetry_error = symmetry_error.max((psi[i * n + j] - psi[j * n + i]).abs());
        }
    }

    let a = Mat::<f64>::from_fn(n, n, |i, j| psi[i * n + j] * dx);
    let mu = a
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::eigen(a.as_ref(), format!("{e:?}")))?;
    let mut occupations: Vec<f64> = mu.iter().map(|m| m * m).collect();
    occupations.sort_by(|a, b| b.total_cmp(a));
    let purity: f64 = occupations.iter().map(|l| l * l).sum();

    let coulomb = params.lambda * (0..n).map(|i| psi[i * n + i].powi(2)).sum::<f64>() * dx;
    let density: Vec<f64> = (0..n)
        .map(|i| psi[i * n..(i + 1) * n].iter().map(|p| p * p).sum::<f64>() * dx)
        .collect();
    let xs = (0..n).map(|i| grid.point(i)).collect();

    Ok(OracleResult {
        energy,
        linear_entropy: 1.0 - purity,
        coulomb,
        occupations,
        xs,
        density,
        dx,
        matvecs,
        residual,
        symmetry_error,
    })
}
