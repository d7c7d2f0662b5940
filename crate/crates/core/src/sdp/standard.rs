//! Standard form of the tester program and its dual.
//!
//! Primal variable: `Ξ^(1) ⊕ … ⊕ Ξ^(N) ⊕ (⊕_x̂ T_x̂)`. The linear map `L` has one
//! component per level `j = 0…N`, living on `prefix(j)`:
//!
//! * `L_0 = Tr_{in,1} Ξ^(1)`
//! * `L_j = Tr_{in,j+1} Ξ^(j+1) − I_{out,j} ⊗ Ξ^(j)` for `0 < j < N`
//! * `L_N = Σ_x̂ T_x̂ − I_{out,N} ⊗ Ξ^(N)`
//!
//! and the constraint is `L(T) = K` with `K = (1, 0, …, 0)`. Dual variables
//! `S^(0) … S^(N)` pair with these components.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::estimation::EstimationProblem;
use crate::network::{CombSpace, QuantumComb};
use crate::operator::{embed_identity, max_eig, partial_trace, LabeledOperator, SystemLabel};
use crate::scalar::{cplx, creal, Complex, Real};

use super::ipm::{BlockSdp, SparsePart};

/// Sparse Hermitian matrix, both triangles listed.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseHermitian<T: Real> {
    pub entries: Vec<(usize, usize, Complex<T>)>,
}

impl<T: Real> SparseHermitian<T> {
    pub fn from_dense(m: &DMatrix<Complex<T>>, drop: T) -> Self {
        let mut entries = Vec::new();
        for c in 0..m.ncols() {
            for r in 0..m.nrows() {
                let z = m[(r, c)];
                if z.re.abs() > drop || z.im.abs() > drop {
                    entries.push((r, c, z));
                }
            }
        }
        entries.sort_by_key(|&(r, c, _)| (r, c));
        Self { entries }
    }

    pub fn to_dense(&self, n: usize) -> DMatrix<Complex<T>> {
        let mut m = DMatrix::zeros(n, n);
        for &(r, c, z) in &self.entries {
            m[(r, c)] += z;
        }
        m
    }

    /// `Re Tr[self · m]`.
    pub fn trace_with(&self, m: &DMatrix<Complex<T>>) -> T {
        self.entries.iter().fold(T::zero(), |acc, &(r, c, z)| acc + (z * m[(c, r)]).re)
    }
}

/// Real-orthonormal basis (under `Tr[AB]`) of a subspace of Hermitian
/// operators on one level.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelBasis<T: Real> {
    pub labels: Vec<SystemLabel>,
    pub elements: Vec<SparseHermitian<T>>,
}

impl<T: Real> LevelBasis<T> {
    pub fn dim(&self) -> usize {
        self.labels.iter().map(|l| l.dim).product()
    }

    /// All Hermitian operators: `e_aa`, `(e_ab + e_ba)/√2`, `i(e_ab − e_ba)/√2`.
    pub fn full(labels: Vec<SystemLabel>) -> Self {
        let n: usize = labels.iter().map(|l| l.dim).product();
        let h = T::one() / T::lit(2.0).sqrt();
        let mut elements = Vec::with_capacity(n * n);
        for a in 0..n {
            elements.push(SparseHermitian { entries: vec![(a, a, creal(T::one()))] });
            for b in a + 1..n {
                elements.push(SparseHermitian { entries: vec![(a, b, creal(h)), (b, a, creal(h))] });
                elements.push(SparseHermitian { entries: vec![(a, b, cplx(T::zero(), h)), (b, a, cplx(T::zero(), -h))] });
            }
        }
        Self { labels, elements }
    }

    /// Coordinates of a Hermitian operator in this basis.
    pub fn coordinates(&self, m: &DMatrix<Complex<T>>) -> Vec<T> {
        self.elements.iter().map(|b| b.trace_with(m)).collect()
    }

    pub fn combine(&self, coords: &[T]) -> LabeledOperator<T> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for (b, &y) in self.elements.iter().zip(coords) {
            for &(r, c, z) in &b.entries {
                m[(r, c)] += z * y;
            }
        }
        LabeledOperator::from_parts_unchecked(self.labels.clone(), m)
    }
}

/// Primal blocks: the `Ξ` chain and one operator per outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimalPoint<T: Real> {
    pub xi: Vec<LabeledOperator<T>>,
    pub outcomes: Vec<LabeledOperator<T>>,
}

/// Dual variables `S^(0) … S^(N)`; `S^(0)` is a factorless 1×1 operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DualState<T: Real> {
    pub levels: Vec<LabeledOperator<T>>,
}

impl<T: Real> DualState<T> {
    pub fn s0(&self) -> T {
        self.levels[0].data()[(0, 0)].re
    }

    pub fn top(&self) -> &LabeledOperator<T> {
        self.levels.last().expect("at least one level")
    }
}

/// The map `L` and its adjoint for a comb space and outcome count.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintMap {
    pub space: CombSpace,
    pub n_outcomes: usize,
}

impl ConstraintMap {
    pub fn level_labels(&self, j: usize) -> Vec<SystemLabel> {
        self.space.prefix_labels(j)
    }

    /// `L(T)`, one operator per level.
    pub fn apply<T: Real>(&self, p: &PrimalPoint<T>) -> Result<Vec<LabeledOperator<T>>> {
        let n = self.space.n_steps();
        let steps = self.space.steps();
        let mut out = Vec::with_capacity(n + 1);
        out.push(partial_trace(&p.xi[0], &[&steps[0].input.id])?);
        for j in 1..=n {
            let head = if j < n {
                partial_trace(&p.xi[j], &[&steps[j].input.id])?
            } else {
                let mut acc = p.outcomes[0].clone();
                for t in &p.outcomes[1..] {
                    acc = acc.add(t)?;
                }
                acc
            };
            let tail = embed_identity(&p.xi[j - 1], &steps[j - 1].output, 2 * (j - 1))?;
            out.push(head.sub(&tail.aligned_to(head.factors())?)?);
        }
        Ok(out)
    }

    /// `L†(S)`: `M_n = I_{in,n} ⊗ S^(n−1) − Tr_{out,n} S^(n)` and `M_x = S^(N)`.
    pub fn adjoint<T: Real>(&self, s: &DualState<T>) -> Result<PrimalPoint<T>> {
        let n = self.space.n_steps();
        let steps = self.space.steps();
        let mut xi = Vec::with_capacity(n);
        for k in 1..=n {
            let prev = &s.levels[k - 1];
            let up = embed_identity(prev, &steps[k - 1].input, prev.factors().len())?;
            let down = partial_trace(&s.levels[k], &[&steps[k - 1].output.id])?;
            xi.push(up.sub(&down)?);
        }
        let outcomes = vec![s.levels[n].clone(); self.n_outcomes];
        Ok(PrimalPoint { xi, outcomes })
    }

    /// Sparse `L†(B)` for an element of the level-`j` basis, as complex parts
    /// `(block, entries)`. Blocks: `Ξ^(1)…Ξ^(N)`, then outcomes.
    fn adjoint_sparse<T: Real>(&self, j: usize, b: &SparseHermitian<T>) -> Vec<(usize, Vec<(usize, usize, Complex<T>)>)> {
        let n = self.space.n_steps();
        let steps = self.space.steps();
        let mut parts = Vec::new();
        if j < n {
            // I_{in,j+1} ⊗ B with in last, on block Ξ^(j+1)
            let din = steps[j].input.dim;
            let mut e = Vec::with_capacity(b.entries.len() * din);
            for &(r, c, z) in &b.entries {
                for t in 0..din {
                    e.push((r * din + t, c * din + t, z));
                }
            }
            parts.push((j, e));
        }
        if j >= 1 {
            // −Tr_{out,j} B on block Ξ^(j)
            let (dout, din) = (steps[j - 1].output.dim, steps[j - 1].input.dim);
            let mut acc: BTreeMap<(usize, usize), Complex<T>> = BTreeMap::new();
            for &(r, c, z) in &b.entries {
                let (pr, or, ir) = (r / (dout * din), (r / din) % dout, r % din);
                let (pc, oc, ic) = (c / (dout * din), (c / din) % dout, c % din);
                if or == oc {
                    *acc.entry((pr * din + ir, pc * din + ic)).or_insert(creal(T::zero())) -= z;
                }
            }
            parts.push((j - 1, acc.into_iter().map(|((r, c), z)| (r, c, z)).collect()));
        }
        if j == n {
            for x in 0..self.n_outcomes {
                parts.push((n + x, b.entries.clone()));
            }
        }
        parts
    }
}

/// The primal program in standard form.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardSdp<T: Real> {
    pub space: CombSpace,
    pub outcome_ids: Vec<String>,
    /// `G_x̂` on the full comb space.
    pub objective: Vec<LabeledOperator<T>>,
    /// Bases of the dual variables, levels `0…N`.
    pub bases: Vec<LevelBasis<T>>,
}

fn realify<T: Real>(n: usize, entries: &[(usize, usize, Complex<T>)], scale: T) -> Vec<(usize, usize, T)> {
    let mut out = Vec::with_capacity(entries.len() * 4);
    for &(r, c, z) in entries {
        let (re, im) = (z.re * scale, z.im * scale);
        if re != T::zero() {
            out.push((r, c, re));
            out.push((r + n, c + n, re));
        }
        if im != T::zero() {
            out.push((r, c + n, -im));
            out.push((r + n, c, im));
        }
    }
    out
}

/// `[[Re H, −Im H], [Im H, Re H]]`.
pub fn real_embedding<T: Real>(h: &DMatrix<Complex<T>>) -> DMatrix<T> {
    let n = h.nrows();
    DMatrix::from_fn(2 * n, 2 * n, |r, c| {
        let z = h[(r % n, c % n)];
        match (r < n, c < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    })
}

/// Inverse of [`real_embedding`] on arbitrary symmetric input.
pub fn complex_from_real<T: Real>(x: &DMatrix<T>) -> DMatrix<Complex<T>> {
    let n = x.nrows() / 2;
    let h = T::lit(0.5);
    DMatrix::from_fn(n, n, |r, c| {
        cplx(
            (x[(r, c)] + x[(r + n, c + n)]) * h,
            (x[(r + n, c)] - x[(r, c + n)]) * h,
        )
    })
}

impl<T: Real> StandardSdp<T> {
    /// Program with full Hermitian bases at every level.
    pub fn new(space: CombSpace, outcome_ids: Vec<String>, objective: Vec<LabeledOperator<T>>) -> Result<Self> {
        let bases = (0..=space.n_steps()).map(|j| LevelBasis::full(space.prefix_labels(j))).collect();
        Self::with_bases(space, outcome_ids, objective, bases)
    }

    pub fn with_bases(
        space: CombSpace,
        outcome_ids: Vec<String>,
        objective: Vec<LabeledOperator<T>>,
        bases: Vec<LevelBasis<T>>,
    ) -> Result<Self> {
        if objective.is_empty() || objective.len() != outcome_ids.len() {
            return Err(Error::InvalidProblem("one payoff operator per outcome is required".into()));
        }
        let labels = space.labels();
        let objective = objective.iter().map(|g| g.aligned_to(&labels)).collect::<Result<Vec<_>>>()?;
        if bases.len() != space.n_steps() + 1 {
            return Err(Error::InvalidProblem("one dual basis per level is required".into()));
        }
        Ok(Self { space, outcome_ids, objective, bases })
    }

    pub fn map(&self) -> ConstraintMap {
        ConstraintMap { space: self.space.clone(), n_outcomes: self.outcome_ids.len() }
    }

    pub fn n_constraints(&self) -> usize {
        self.bases.iter().map(|b| b.elements.len()).sum()
    }

    /// Complex block sides: `Ξ^(1)…Ξ^(N)` then one per outcome.
    pub fn block_dims(&self) -> Vec<usize> {
        let n = self.space.n_steps();
        let mut d: Vec<usize> = (1..=n).map(|k| self.space.prefix_dim(k - 1) * self.space.steps()[k - 1].input.dim).collect();
        d.extend(std::iter::repeat(self.space.total_dim()).take(self.outcome_ids.len()));
        d
    }

    pub fn max_payoff_eigenvalue(&self) -> Result<T> {
        let mut m = T::zero();
        for g in &self.objective {
            m = m.max(max_eig(g)?);
        }
        Ok(m)
    }

    /// Real block program with halved constraint and objective data.
    pub fn to_block_sdp(&self) -> BlockSdp<T> {
        let dims = self.block_dims();
        let n = self.space.n_steps();
        let half = T::lit(0.5);
        let mut c: Vec<DMatrix<T>> = dims[..n].iter().map(|&d| DMatrix::zeros(2 * d, 2 * d)).collect();
        c.extend(self.objective.iter().map(|g| real_embedding(g.data()) * half));
        let map = self.map();
        let mut a = Vec::with_capacity(self.n_constraints());
        let mut b = Vec::with_capacity(self.n_constraints());
        for (j, basis) in self.bases.iter().enumerate() {
            for el in &basis.elements {
                let parts = map
                    .adjoint_sparse(j, el)
                    .into_iter()
                    .map(|(blk, e)| SparsePart { block: blk, entries: realify(dims[blk], &e, half) })
                    .filter(|p| !p.entries.is_empty())
                    .collect();
                a.push(parts);
                b.push(if j == 0 { el.trace_with(&DMatrix::identity(1, 1)) } else { T::zero() });
            }
        }
        BlockSdp { block_dims: dims.iter().map(|d| 2 * d).collect(), c, a, b: DVector::from_vec(b) }
    }

    /// Uniform tester: `Ξ^(n) = I/Π_{i≤n} d_in,i`, `T_x̂ = I/(|X| Π d_in)`.
    pub fn uniform_point(&self) -> Result<PrimalPoint<T>> {
        let n = self.space.n_steps();
        let mut xi = Vec::with_capacity(n);
        let mut prod = 1usize;
        for k in 1..=n {
            prod *= self.space.steps()[k - 1].input.dim;
            xi.push(LabeledOperator::identity(self.space.xi_labels(k))?.scale(T::one() / T::lit(prod as f64)));
        }
        let w = T::one() / T::lit((prod * self.outcome_ids.len()) as f64);
        let t = LabeledOperator::identity(self.space.labels())?.scale(w);
        Ok(PrimalPoint { xi, outcomes: vec![t; self.outcome_ids.len()] })
    }

    /// Strictly feasible dual point: `S^(N) = c·I` with
    /// `c = max(g_max, 2 max_x̂ λ_max(G_x̂))` (or 1 if that is not positive),
    /// then `S^(j−1) = 2 Tr_{out,j} Tr_{in,j} S^(j)`.
    pub fn slater_point(&self, g_max: T) -> Result<DualState<T>> {
        let n = self.space.n_steps();
        let mut c = g_max.max(T::lit(2.0) * self.max_payoff_eigenvalue()?);
        if !(c > T::zero()) {
            c = T::one();
        }
        let mut scal = vec![T::zero(); n + 1];
        scal[n] = c;
        for j in (1..=n).rev() {
            let s = &self.space.steps()[j - 1];
            scal[j - 1] = T::lit(2.0) * scal[j] * T::lit((s.input.dim * s.output.dim) as f64);
        }
        let levels = (0..=n)
            .map(|j| Ok(LabeledOperator::identity(self.space.prefix_labels(j))?.scale(scal[j])))
            .collect::<Result<Vec<_>>>()?;
        Ok(DualState { levels })
    }

    pub fn primal_to_blocks(&self, p: &PrimalPoint<T>) -> Vec<DMatrix<T>> {
        p.xi.iter().chain(&p.outcomes).map(|o| real_embedding(o.data())).collect()
    }

    pub fn blocks_to_primal(&self, x: &[DMatrix<T>]) -> PrimalPoint<T> {
        let n = self.space.n_steps();
        let xi = (1..=n)
            .map(|k| LabeledOperator::from_parts_unchecked(self.space.xi_labels(k), complex_from_real(&x[k - 1])))
            .collect();
        let labels = self.space.labels();
        let outcomes = x[n..]
            .iter()
            .map(|b| LabeledOperator::from_parts_unchecked(labels.clone(), complex_from_real(b)))
            .collect();
        PrimalPoint { xi, outcomes }
    }

    pub fn dual_to_coordinates(&self, s: &DualState<T>) -> DVector<T> {
        let mut y = Vec::with_capacity(self.n_constraints());
        for (basis, op) in self.bases.iter().zip(&s.levels) {
            y.extend(basis.coordinates(op.data()));
        }
        DVector::from_vec(y)
    }

    pub fn coordinates_to_dual(&self, y: &DVector<T>) -> DualState<T> {
        let mut off = 0;
        let levels = self
            .bases
            .iter()
            .map(|basis| {
                let k = basis.elements.len();
                let op = basis.combine(&y.as_slice()[off..off + k]);
                off += k;
                op.hermitian_part()
            })
            .collect();
        DualState { levels }
    }
}

/// The dual program: minimize `S^(0)` subject to `M_n ⪰ 0` and `S^(N) ⪰ G_x̂`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualProgram<T: Real> {
    pub sdp: StandardSdp<T>,
}

/// Inequality blocks of a dual point.
#[derive(Debug, Clone, PartialEq)]
pub struct DualBlocks<T: Real> {
    /// `M_1 … M_N`.
    pub chain: Vec<LabeledOperator<T>>,
    /// `S^(N) − G_x̂` per outcome.
    pub outcomes: Vec<LabeledOperator<T>>,
}

impl<T: Real> DualProgram<T> {
    /// `Tr[SK] = S^(0)`.
    pub fn objective(&self, s: &DualState<T>) -> T {
        s.s0()
    }

    pub fn blocks(&self, s: &DualState<T>) -> Result<DualBlocks<T>> {
        let m = self.sdp.map().adjoint(s)?;
        let outcomes = m
            .outcomes
            .iter()
            .zip(&self.sdp.objective)
            .map(|(mx, g)| mx.sub(g))
            .collect::<Result<Vec<_>>>()?;
        Ok(DualBlocks { chain: m.xi, outcomes })
    }

    /// Smallest eigenvalue over every inequality block.
    pub fn margin(&self, s: &DualState<T>) -> Result<T> {
        let b = self.blocks(s)?;
        let mut m = T::lit(f64::MAX);
        for op in b.chain.iter().chain(&b.outcomes) {
            m = m.min(crate::operator::min_eig(op)?);
        }
        Ok(m)
    }
}

pub fn build_primal<T: Real>(p: &EstimationProblem<T>) -> Result<StandardSdp<T>> {
    StandardSdp::new(p.space().clone(), p.labels().to_vec(), p.payoff_operators())
}

pub fn build_dual<T: Real>(p: &EstimationProblem<T>) -> Result<DualProgram<T>> {
    Ok(DualProgram { sdp: build_primal(p)? })
}

pub fn slater_point<T: Real>(p: &EstimationProblem<T>) -> Result<DualState<T>> {
    build_primal(p)?.slater_point(p.g_max())
}

/// Equality tightening: `S̃^(0) = S^(0)` and
/// `S̃^(k) = S^(k) + (I_{out,k}/d_{out,k}) ⊗ δ^(k)` with
/// `δ^(k) = I_{in,k} ⊗ S̃^(k−1) − Tr_{out,k} S^(k)`.
pub fn tighten<T: Real>(space: &CombSpace, s: &DualState<T>) -> Result<DualState<T>> {
    let n = space.n_steps();
    let mut levels = Vec::with_capacity(n + 1);
    levels.push(s.levels[0].clone());
    for k in 1..=n {
        let st = &space.steps()[k - 1];
        let prev: &LabeledOperator<T> = &levels[k - 1];
        let up = embed_identity(prev, &st.input, prev.factors().len())?;
        let delta = up.sub(&partial_trace(&s.levels[k], &[&st.output.id])?)?;
        let lift = embed_identity(&delta, &st.output, 2 * (k - 1))?.scale(T::one() / T::lit(st.output.dim as f64));
        levels.push(s.levels[k].add(&lift)?.hermitian_part());
    }
    Ok(DualState { levels })
}

/// `I/Π_s d_out,s`, a valid comb on any space.
pub fn uniform_comb<T: Real>(space: &CombSpace) -> Result<QuantumComb<T>> {
    let d_out: usize = space.steps().iter().map(|s| s.output.dim).product();
    let op = LabeledOperator::identity(space.labels())?.scale(T::one() / T::lit(d_out as f64));
    QuantumComb::new(space.clone(), &op)
}

/// `(λ, R)` from a dual point via [`tighten`]; falls back to the uniform
/// comb when `λ` vanishes.
pub fn extract_certificate<T: Real>(space: &CombSpace, s: &DualState<T>) -> Result<(T, QuantumComb<T>)> {
    let t = tighten(space, s)?;
    let lambda = t.s0();
    if lambda <= T::tol_floor() {
        return Ok((lambda.max(T::zero()), uniform_comb(space)?));
    }
    let r = QuantumComb::new(space.clone(), &t.top().scale(T::one() / lambda))?;
    Ok((lambda, r))
}
