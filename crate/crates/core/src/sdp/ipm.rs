//! Primal-dual interior-point method for real block-diagonal SDPs.
//!
//! Primal: `max ⟨C,X⟩  s.t. ⟨A_i,X⟩ = b_i, X ⪰ 0`.
//! Dual:   `min bᵀy    s.t. Z = Σ y_i A_i − C ⪰ 0`.
//!
//! Search directions use Nesterov–Todd scaling with a Mehrotra
//! predictor-corrector step. Both starting points are supplied by the caller.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen, LU};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Sparse symmetric constraint part: entries `(row, col, value)` listing
/// both triangles.
#[derive(Debug, Clone, PartialEq)]
pub struct SparsePart<T> {
    pub block: usize,
    pub entries: Vec<(usize, usize, T)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockSdp<T: Real> {
    pub block_dims: Vec<usize>,
    pub c: Vec<DMatrix<T>>,
    pub a: Vec<Vec<SparsePart<T>>>,
    pub b: DVector<T>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IpmOptions<T> {
    pub tol: T,
    pub max_iter: usize,
}

/// One row of the iteration log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
    pub mu: f64,
}

#[derive(Debug, Clone)]
pub struct IpmResult<T: Real> {
    pub x: Vec<DMatrix<T>>,
    pub y: DVector<T>,
    pub z: Vec<DMatrix<T>>,
    pub primal_objective: T,
    pub dual_objective: T,
    pub iterations: usize,
    pub history: Vec<IterationRecord>,
}

impl<T: Real> BlockSdp<T> {
    pub fn n_constraints(&self) -> usize {
        self.a.len()
    }

    /// `A(X)`.
    pub fn apply(&self, x: &[DMatrix<T>]) -> DVector<T> {
        DVector::from_iterator(
            self.a.len(),
            self.a.iter().map(|parts| {
                parts.iter().fold(T::zero(), |acc, p| {
                    p.entries.iter().fold(acc, |s, &(r, c, v)| s + v * x[p.block][(r, c)])
                })
            }),
        )
    }

    /// `Aᵀ y = Σ y_i A_i`.
    pub fn adjoint(&self, y: &DVector<T>) -> Vec<DMatrix<T>> {
        let mut out: Vec<DMatrix<T>> = self.block_dims.iter().map(|&n| DMatrix::zeros(n, n)).collect();
        for (i, parts) in self.a.iter().enumerate() {
            let yi = y[i];
            if yi == T::zero() {
                continue;
            }
            for p in parts {
                let blk = &mut out[p.block];
                for &(r, c, v) in &p.entries {
                    blk[(r, c)] += yi * v;
                }
            }
        }
        out
    }

    fn check(&self) -> Result<()> {
        if self.c.len() != self.block_dims.len() || self.b.len() != self.a.len() {
            return Err(Error::NumericalFailure("inconsistent block SDP data".into()));
        }
        for parts in &self.a {
            for p in parts {
                let n = *self
                    .block_dims
                    .get(p.block)
                    .ok_or_else(|| Error::NumericalFailure("constraint references a missing block".into()))?;
                if p.entries.iter().any(|&(r, c, _)| r >= n || c >= n) {
                    return Err(Error::NumericalFailure("constraint entry outside its block".into()));
                }
            }
        }
        Ok(())
    }
}

fn inner<T: Real>(a: &[DMatrix<T>], b: &[DMatrix<T>]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (x, y)| acc + x.dot(y))
}

fn fro<T: Real>(a: &[DMatrix<T>]) -> T {
    inner(a, a).sqrt()
}

fn sym<T: Real>(m: &DMatrix<T>) -> DMatrix<T> {
    (m + m.transpose()) * T::lit(0.5)
}

// Per-block Nesterov–Todd scaling data.
struct Scaling<T: Real> {
    g: DMatrix<T>,
    g_inv: DMatrix<T>,
    w: DMatrix<T>,
    d: DVector<T>,
}

fn nt_scaling<T: Real>(x: &DMatrix<T>, z: &DMatrix<T>) -> Result<Scaling<T>> {
    let l = Cholesky::new(x.clone())
        .ok_or_else(|| Error::NumericalFailure("primal iterate lost positive definiteness".into()))?
        .unpack();
    let ltzl = sym(&(l.transpose() * z * &l));
    let se = SymmetricEigen::new(ltzl);
    let n = x.nrows();
    let mut d = DVector::zeros(n);
    let mut q = se.eigenvectors;
    let mut qs = q.clone();
    for k in 0..n {
        let s = se.eigenvalues[k];
        if !(s > T::zero()) {
            return Err(Error::NumericalFailure("dual iterate lost positive definiteness".into()));
        }
        let dk = s.sqrt();
        d[k] = dk;
        // G = L Q diag(d^{-1/2}), G⁻¹ = diag(d^{1/2}) Qᵀ L⁻¹
        let f = T::one() / dk.sqrt();
        qs.column_mut(k).scale_mut(f);
        q.column_mut(k).scale_mut(dk.sqrt());
    }
    let g = &l * qs;
    let l_inv = l
        .clone()
        .solve_lower_triangular(&DMatrix::identity(n, n))
        .ok_or_else(|| Error::NumericalFailure("singular Cholesky factor".into()))?;
    let g_inv = q.transpose() * l_inv;
    let w = sym(&(&g * g.transpose()));
    Ok(Scaling { g, g_inv, w, d })
}

/// Largest `α ≤ 1/ε` with `X + α dX ⪰ 0`, returned as-is (may exceed 1).
fn max_step<T: Real>(x: &DMatrix<T>, dx: &DMatrix<T>) -> Result<T> {
    let l = Cholesky::new(x.clone())
        .ok_or_else(|| Error::NumericalFailure("iterate lost positive definiteness".into()))?;
    let n = x.nrows();
    let lm = l.l();
    let a = lm
        .solve_lower_triangular(dx)
        .ok_or_else(|| Error::NumericalFailure("singular Cholesky factor".into()))?;
    let b = lm
        .solve_lower_triangular(&a.transpose())
        .ok_or_else(|| Error::NumericalFailure("singular Cholesky factor".into()))?;
    let ev = sym(&b).symmetric_eigenvalues();
    let min = (0..n).fold(T::zero(), |m, k| m.min(ev[k]));
    if min >= T::zero() {
        Ok(T::lit(1e30))
    } else {
        Ok(-T::one() / min)
    }
}

fn step_all<T: Real>(x: &[DMatrix<T>], dx: &[DMatrix<T>]) -> Result<T> {
    let steps: Vec<Result<T>> = x.par_iter().zip(dx.par_iter()).map(|(a, b)| max_step(a, b)).collect();
    let mut m = T::lit(1e30);
    for s in steps {
        m = m.min(s?);
    }
    Ok(m)
}

/// Schur complement `M_ij = Σ_k ⟨A_ik, W_k A_jk W_k⟩`.
fn schur<T: Real>(sdp: &BlockSdp<T>, by_block: &[Vec<(usize, usize)>], w: &[DMatrix<T>]) -> DMatrix<T> {
    let m = sdp.a.len();
    let rows: Vec<Vec<T>> = (0..m)
        .into_par_iter()
        .map(|i| {
            let mut row = vec![T::zero(); m];
            for pi in &sdp.a[i] {
                let wk = &w[pi.block];
                for &(j, pj_idx) in &by_block[pi.block] {
                    if j < i {
                        continue;
                    }
                    let pj = &sdp.a[j][pj_idx];
                    let mut s = T::zero();
                    for &(r, c, a) in &pi.entries {
                        for &(t, u, b) in &pj.entries {
                            s += a * b * wk[(r, t)] * wk[(u, c)];
                        }
                    }
                    row[j] += s;
                }
            }
            row
        })
        .collect();
    let mut mm = DMatrix::zeros(m, m);
    for (i, row) in rows.into_iter().enumerate() {
        for j in i..m {
            mm[(i, j)] = row[j];
            mm[(j, i)] = row[j];
        }
    }
    mm
}

enum SchurFactor<T: Real> {
    Chol(Cholesky<T, nalgebra::Dyn>),
    Lu(LU<T, nalgebra::Dyn, nalgebra::Dyn>),
}

impl<T: Real> SchurFactor<T> {
    fn new(m: DMatrix<T>) -> Result<Self> {
        if let Some(c) = Cholesky::new(m.clone()) {
            return Ok(Self::Chol(c));
        }
        let lu = LU::new(m);
        if !lu.is_invertible() {
            return Err(Error::NumericalFailure("singular Schur complement".into()));
        }
        Ok(Self::Lu(lu))
    }

    fn solve(&self, rhs: &DVector<T>) -> Result<DVector<T>> {
        match self {
            Self::Chol(c) => Ok(c.solve(rhs)),
            Self::Lu(lu) => lu
                .solve(rhs)
                .ok_or_else(|| Error::NumericalFailure("singular Schur complement".into())),
        }
    }
}

struct Direction<T: Real> {
    dx: Vec<DMatrix<T>>,
    dy: DVector<T>,
    dz: Vec<DMatrix<T>>,
}

/// Solves `A(dX) = r_p`, `Aᵀdy − dZ = R_d`, `dX + W dZ W = R_c`.
fn direction<T: Real>(
    sdp: &BlockSdp<T>,
    factor: &SchurFactor<T>,
    scal: &[Scaling<T>],
    r_p: &DVector<T>,
    r_d: &[DMatrix<T>],
    r_c: &[DMatrix<T>],
) -> Result<Direction<T>> {
    let tmp: Vec<DMatrix<T>> = scal
        .iter()
        .zip(r_c.iter().zip(r_d))
        .map(|(s, (rc, rd))| rc + &s.w * rd * &s.w)
        .collect();
    let rhs = sdp.apply(&tmp) - r_p;
    let dy = factor.solve(&rhs)?;
    let aty = sdp.adjoint(&dy);
    let dz: Vec<DMatrix<T>> = aty.iter().zip(r_d).map(|(a, rd)| sym(&(a - rd))).collect();
    let dx: Vec<DMatrix<T>> = scal
        .iter()
        .zip(r_c.iter().zip(&dz))
        .map(|(s, (rc, dzk))| sym(&(rc - &s.w * dzk * &s.w)))
        .collect();
    Ok(Direction { dx, dy, dz })
}

/// Runs the interior-point method from a strictly feasible or infeasible
/// interior start `(x0, y0)`; `Z0 = Aᵀy0 − C` must be positive definite.
pub fn solve_block_sdp<T: Real>(
    sdp: &BlockSdp<T>,
    x0: Vec<DMatrix<T>>,
    y0: DVector<T>,
    opts: &IpmOptions<T>,
) -> Result<IpmResult<T>> {
    sdp.check()?;
    let nblocks = sdp.block_dims.len();
    let mut by_block: Vec<Vec<(usize, usize)>> = vec![Vec::new(); nblocks];
    for (i, parts) in sdp.a.iter().enumerate() {
        for (pi, p) in parts.iter().enumerate() {
            by_block[p.block].push((i, pi));
        }
    }
    let n_total = T::lit(sdp.block_dims.iter().sum::<usize>() as f64);
    let mut x = x0;
    let mut y = y0;
    let mut z: Vec<DMatrix<T>> = sdp.adjoint(&y).iter().zip(&sdp.c).map(|(a, c)| sym(&(a - c))).collect();
    let b_norm = sdp.b.norm();
    let c_norm = fro(&sdp.c);
    let mut history = Vec::new();
    let tol = opts.tol;

    for it in 0..=opts.max_iter {
        let pobj = inner(&sdp.c, &x);
        let dobj = sdp.b.dot(&y);
        let r_p = &sdp.b - sdp.apply(&x);
        let aty = sdp.adjoint(&y);
        let r_d: Vec<DMatrix<T>> = (0..nblocks).map(|k| &sdp.c[k] + &z[k] - &aty[k]).collect();
        let xz = inner(&x, &z);
        let mu = xz / n_total;
        let pinf = r_p.norm() / (T::one() + b_norm);
        let dinf = fro(&r_d) / (T::one() + c_norm);
        history.push(IterationRecord {
            primal_objective: pobj.to_f64_lossy(),
            dual_objective: dobj.to_f64_lossy(),
            primal_infeasibility: pinf.to_f64_lossy(),
            dual_infeasibility: dinf.to_f64_lossy(),
            mu: mu.to_f64_lossy(),
        });
        if !(pobj.is_finite() && dobj.is_finite() && mu.is_finite()) {
            return Err(Error::NumericalFailure(format!("non-finite iterate at iteration {it}")));
        }
        let scale = T::one() + pobj.abs();
        let gap_ok = (dobj - pobj).abs() <= tol * scale && xz <= tol * scale;
        if gap_ok && pinf <= tol && dinf <= tol {
            return Ok(IpmResult { x, y, z, primal_objective: pobj, dual_objective: dobj, iterations: it, history });
        }
        if it == opts.max_iter {
            let gap = ((dobj - pobj).abs() / scale).to_f64_lossy();
            return Err(Error::MaxIterations { iterations: it, gap });
        }

        let scal: Vec<Scaling<T>> =
            x.par_iter().zip(z.par_iter()).map(|(xk, zk)| nt_scaling(xk, zk)).collect::<Result<_>>()?;
        let w: Vec<DMatrix<T>> = scal.iter().map(|s| s.w.clone()).collect();
        let factor = SchurFactor::new(schur(sdp, &by_block, &w))?;

        // predictor
        let rc_aff: Vec<DMatrix<T>> = x.iter().map(|xk| -xk).collect();
        let aff = direction(sdp, &factor, &scal, &r_p, &r_d, &rc_aff)?;
        let ap = step_all(&x, &aff.dx)?.min(T::one());
        let ad = step_all(&z, &aff.dz)?.min(T::one());
        let mut xz_aff = T::zero();
        for k in 0..nblocks {
            let xa = &x[k] + &aff.dx[k] * ap;
            let za = &z[k] + &aff.dz[k] * ad;
            xz_aff += xa.dot(&za);
        }
        let ratio = (xz_aff / xz).max(T::zero()).min(T::one());
        let sigma = ratio * ratio * ratio;

        // corrector
        let r_c: Vec<DMatrix<T>> = (0..nblocks)
            .map(|k| {
                let s = &scal[k];
                let n = s.d.len();
                let dxt = &s.g_inv * &aff.dx[k] * s.g_inv.transpose();
                let dzt = s.g.transpose() * &aff.dz[k] * &s.g;
                let prod = sym(&(&dxt * &dzt));
                let mut v = DMatrix::zeros(n, n);
                for p in 0..n {
                    for q in 0..n {
                        let mut h = -prod[(p, q)];
                        if p == q {
                            h += sigma * mu - s.d[p] * s.d[p];
                        }
                        v[(p, q)] = T::lit(2.0) * h / (s.d[p] + s.d[q]);
                    }
                }
                sym(&(&s.g * v * s.g.transpose()))
            })
            .collect();
        let dir = direction(sdp, &factor, &scal, &r_p, &r_d, &r_c)?;
        let tau = T::lit(0.9) + T::lit(0.09) * ap.min(ad);
        let alpha_p = (tau * step_all(&x, &dir.dx)?).min(T::one());
        let alpha_d = (tau * step_all(&z, &dir.dz)?).min(T::one());
        for k in 0..nblocks {
            x[k] = sym(&(&x[k] + &dir.dx[k] * alpha_p));
            z[k] = sym(&(&z[k] + &dir.dz[k] * alpha_d));
        }
        y += &dir.dy * alpha_d;
    }
    unreachable!("loop returns on the last iteration")
}
