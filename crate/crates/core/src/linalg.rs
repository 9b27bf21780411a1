//! Small linear-algebra kernels: tridiagonal solves, Sturm-sequence
//! bisection, and a restarted Lanczos eigensolver for matrix-free
//! symmetric operators.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Solves a tridiagonal system with the Thomas algorithm. `sub[i]` couples
/// rows `i+1` and `i`, `sup[i]` couples rows `i` and `i+1`.
pub fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut piv = diag[0];
    if piv == 0.0 {
        return None;
    }
    if n > 1 {
        c[0] = sup[0] / piv;
    }
    d[0] = rhs[0] / piv;
    for i in 1..n {
        piv = diag[i] - sub[i - 1] * c[i - 1];
        if piv == 0.0 || !piv.is_finite() {
            return None;
        }
        if i < n - 1 {
            c[i] = sup[i] / piv;
        }
        d[i] = (rhs[i] - sub[i - 1] * d[i - 1]) / piv;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Some(d)
}

/// Number of eigenvalues below `x` of the symmetric tridiagonal matrix with
/// diagonal `d` and off-diagonal `e`.
pub fn sturm_count(d: &[f64], e: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = d[0] - x;
    if q < 0.0 {
        count += 1;
    }
    for i in 1..d.len() {
        let prev = if q == 0.0 {
            f64::EPSILON * (e[i - 1].abs() + 1.0)
        } else {
            q
        };
        q = d[i] - x - e[i - 1] * e[i - 1] / prev;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Smallest eigenvalue of a symmetric tridiagonal matrix by bisection,
/// accurate to a few ulps of the spectral radius.
pub fn tridiagonal_lowest(d: &[f64], e: &[f64]) -> f64 {
    let n = d.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = if i > 0 { e[i - 1].abs() } else { 0.0 } + if i + 1 < n { e[i].abs() } else { 0.0 };
        lo = lo.min(d[i] - r);
        hi = hi.max(d[i] + r);
    }
    let scale = lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= 4.0 * f64::EPSILON * scale || mid == lo || mid == hi {
            break;
        }
        if sturm_count(d, e, mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// A symmetric operator applied without forming the matrix.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;
    /// `y = A x`.
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

/// Dense matrix of a small operator, column by column.
pub fn assemble_dense(op: &dyn LinearOperator) -> DMatrix<f64> {
    let n = op.dim();
    let mut m = DMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    let mut col = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        op.apply(&e, &mut col);
        m.column_mut(j).copy_from_slice(&col);
        e[j] = 0.0;
    }
    m
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LanczosOptions {
    /// Absolute residual target `‖Aψ − λψ‖` for unit `ψ`.
    pub tol: f64,
    /// Upper bound on the Krylov basis size between restarts.
    pub max_basis: usize,
    pub max_restarts: usize,
    pub seed: u64,
    /// Bytes available for the Krylov basis; shrinks the basis for big operators.
    pub memory_budget: usize,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_basis: 160,
            max_restarts: 400,
            seed: 0x5eed,
            memory_budget: 1 << 30,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub value: f64,
    /// Unit-norm eigenvector.
    pub vector: Vec<f64>,
    /// Explicit residual `‖Aψ − λψ‖`.
    pub residual: f64,
    pub matvecs: usize,
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn axpy(y: &mut [f64], s: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += s * xi;
    }
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = dot(v, v).sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

fn orthogonalize(w: &mut [f64], basis: &[Vec<f64>]) {
    orthogonalize_pair(w, basis, &[]);
}

/// Two Gram-Schmidt passes, each sweeping both bases so neither leaks back.
fn orthogonalize_pair(w: &mut [f64], first: &[Vec<f64>], second: &[Vec<f64>]) {
    for _ in 0..2 {
        for q in first.iter().chain(second) {
            let c = dot(q, w);
            axpy(w, -c, q);
        }
    }
}

/// Lowest eigenpair of the symmetric tridiagonal `T` (dense solve).
fn ritz_lowest(alpha: &[f64], beta: &[f64]) -> (f64, Vec<f64>) {
    let k = alpha.len();
    let t = DMatrix::from_fn(k, k, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j {
            beta[i]
        } else if j + 1 == i {
            beta[j]
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(t);
    let (imin, _) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap();
    (
        eig.eigenvalues[imin],
        eig.eigenvectors.column(imin).iter().copied().collect(),
    )
}

/// The `count` lowest eigenpairs, found one at a time by explicitly
/// restarted Lanczos with full reorthogonalization and deflation against
/// the pairs already converged. Deterministic for a fixed seed.
pub fn lowest_eigenpairs(op: &dyn LinearOperator, count: usize, opts: &LanczosOptions) -> Result<Vec<EigenPair>> {
    let n = op.dim();
    if count == 0 || count > n {
        return Err(Error::InvalidInput(format!(
            "cannot compute {count} eigenpairs of a {n}-dimensional operator"
        )));
    }
    let basis_cap = (opts.memory_budget / (8 * n.max(1)))
        .clamp(8, opts.max_basis.max(8))
        .min(n);
    let mut found: Vec<EigenPair> = Vec::with_capacity(count);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for _ in 0..count {
        let locked: Vec<Vec<f64>> = found.iter().map(|p| p.vector.clone()).collect();
        let mut start: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        orthogonalize(&mut start, &locked);
        if normalize(&mut start) == 0.0 {
            return Err(Error::NoConvergence("start vector collapsed under deflation".into()));
        }
        let pair = if locked.is_empty() && n >= TWO_PASS_THRESHOLD {
            two_pass_lanczos(op, start, opts)?
        } else {
            restarted_lanczos(op, start, &locked, basis_cap, opts)?
        };
        found.push(pair);
    }
    Ok(found)
}

/// Operators at least this large get the lowest pair from the two-pass
/// solver, which stores three vectors instead of a Krylov basis.
const TWO_PASS_THRESHOLD: usize = 20_000;

/// Lanczos steps per two-pass cycle.
const TWO_PASS_STEPS: usize = 400;

/// One Lanczos step from `(prev, cur)`: returns `α` and writes the
/// unnormalised next vector into `w`.
fn lanczos_step(op: &dyn LinearOperator, prev: &[f64], cur: &[f64], beta_prev: f64, w: &mut [f64]) -> f64 {
    op.apply(cur, w);
    let a = dot(cur, w);
    axpy(w, -a, cur);
    axpy(w, -beta_prev, prev);
    // local reorthogonalisation against the last two vectors
    let c = dot(cur, w);
    axpy(w, -c, cur);
    let c = dot(prev, w);
    axpy(w, -c, prev);
    a
}

/// Lowest eigenpair by Lanczos without reorthogonalisation. The first pass
/// builds the tridiagonal matrix; the second regenerates the basis to
/// assemble the Ritz vector. Spurious copies of converged Ritz values do
/// not affect the lowest one. Cycles restart from the Ritz vector.
fn two_pass_lanczos(op: &dyn LinearOperator, mut start: Vec<f64>, opts: &LanczosOptions) -> Result<EigenPair> {
    let n = op.dim();
    let steps = TWO_PASS_STEPS.min(n);
    let mut matvecs = 0usize;
    let mut best_residual = f64::INFINITY;
    let (mut prev, mut cur, mut w) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    for _ in 0..=opts.max_restarts {
        let mut alpha: Vec<f64> = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        prev.iter_mut().for_each(|x| *x = 0.0);
        cur.copy_from_slice(&start);
        let mut beta_prev = 0.0;
        loop {
            let a = lanczos_step(op, &prev, &cur, beta_prev, &mut w);
            matvecs += 1;
            alpha.push(a);
            let b = normalize(&mut w);
            let k = alpha.len();
            let breakdown = b < 1e-13 * a.abs().max(1.0);
            if k == steps || k % 20 == 0 || breakdown {
                let (_, s) = ritz_lowest(&alpha, &beta);
                if breakdown || k == steps || b * s[k - 1].abs() <= 0.1 * opts.tol {
                    break;
                }
            }
            beta.push(b);
            std::mem::swap(&mut prev, &mut cur);
            std::mem::swap(&mut cur, &mut w);
            beta_prev = b;
        }
        let (_, s) = ritz_lowest(&alpha, &beta);
        let mut psi = vec![0.0; n];
        prev.iter_mut().for_each(|x| *x = 0.0);
        cur.copy_from_slice(&start);
        for j in 0..alpha.len() {
            axpy(&mut psi, s[j], &cur);
            if j + 1 == alpha.len() {
                break;
            }
            let bp = if j == 0 { 0.0 } else { beta[j - 1] };
            lanczos_step(op, &prev, &cur, bp, &mut w);
            matvecs += 1;
            w.iter_mut().for_each(|x| *x /= beta[j]);
            std::mem::swap(&mut prev, &mut cur);
            std::mem::swap(&mut cur, &mut w);
        }
        normalize(&mut psi);
        op.apply(&psi, &mut w);
        matvecs += 1;
        let rayleigh = dot(&psi, &w);
        axpy(&mut w, -rayleigh, &psi);
        let residual = dot(&w, &w).sqrt();
        if residual <= opts.tol {
            return Ok(EigenPair {
                value: rayleigh,
                vector: psi,
                residual,
                matvecs,
            });
        }
        best_residual = best_residual.min(residual);
        start = psi;
    }
    Err(Error::NoConvergence(format!(
        "two-pass Lanczos stopped after {} cycles with residual {best_residual:.3e} (target {:.1e})",
        opts.max_restarts, opts.tol
    )))
}

fn restarted_lanczos(
    op: &dyn LinearOperator,
    mut start: Vec<f64>,
    locked: &[Vec<f64>],
    basis_cap: usize,
    opts: &LanczosOptions,
) -> Result<EigenPair> {
    let n = op.dim();
    let mut matvecs = 0usize;
    let mut w = vec![0.0; n];
    let mut best_residual = f64::INFINITY;
    let cap = basis_cap.min(n - locked.len()).max(1);
    for _ in 0..=opts.max_restarts {
        let mut q: Vec<Vec<f64>> = vec![start.clone()];
        let mut alpha: Vec<f64> = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        let mut converged_inside = false;
        loop {
            let j = q.len() - 1;
            op.apply(&q[j], &mut w);
            matvecs += 1;
            let a = dot(&q[j], &w);
            alpha.push(a);
            orthogonalize_pair(&mut w, locked, &q);
            let b = normalize(&mut w);
            let k = alpha.len();
            let check = k == cap || k % 10 == 0 || b < 1e-13 * a.abs().max(1.0);
            if check {
                let (_, s) = ritz_lowest(&alpha, &beta);
                let estimate = b * s[k - 1].abs();
                if estimate <= 0.1 * opts.tol || b < 1e-13 * a.abs().max(1.0) {
                    converged_inside = true;
                }
                if converged_inside || k == cap {
                    break;
                }
            }
            beta.push(b);
            q.push(w.clone());
        }
        let (_, s) = ritz_lowest(&alpha, &beta);
        let mut psi = vec![0.0; n];
        for (qi, si) in q.iter().zip(&s) {
            axpy(&mut psi, *si, qi);
        }
        orthogonalize(&mut psi, locked);
        normalize(&mut psi);
        op.apply(&psi, &mut w);
        matvecs += 1;
        let rayleigh = dot(&psi, &w);
        axpy(&mut w, -rayleigh, &psi);
        let residual = dot(&w, &w).sqrt();
        if residual <= opts.tol {
            return Ok(EigenPair {
                value: rayleigh,
                vector: psi,
                residual,
                matvecs,
            });
        }
        best_residual = best_residual.min(residual);
        start = psi;
    }
    Err(Error::NoConvergence(format!(
        "Lanczos stopped after {} restarts with residual {best_residual:.3e} (target {:.1e})",
        opts.max_restarts, opts.tol
    )))
}
