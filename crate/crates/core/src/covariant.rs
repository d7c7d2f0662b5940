//! Group-covariant estimation: twirls, invariant q_max programs and the
//! closed forms of the phase-shift examples.

use std::collections::BTreeMap;

use nalgebra::{ComplexField, DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::estimation::{uniform_prior, EstimationProblem};
use crate::network::{
    choi_of_unitary, comb_of_memoryless_sequence, joint_id, CombSpace, QuantumComb, Tester,
};
use crate::operator::{partial_trace, LabeledOperator, SystemLabel};
use crate::scalar::{cplx, creal, Complex, Real};
use crate::sdp::standard::SparseHermitian;
use crate::sdp::{extract_certificate, solve_standard, LevelBasis, SolveOptions, StandardSdp};

/// Finite group with a (possibly projective) unitary representation on some
/// system labels. Labels without a representation carry the trivial one.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteGroupAction<T: Real> {
    elements: Vec<String>,
    table: Vec<Vec<usize>>,
    reps: BTreeMap<String, Vec<DMatrix<Complex<T>>>>,
    identity: usize,
}

fn max_abs<T: Real>(m: &DMatrix<Complex<T>>) -> T {
    m.iter().fold(T::zero(), |a, z| a.max(z.modulus()))
}

/// Multiplication table of `Z_n`.
pub fn cyclic_table(n: usize) -> Vec<Vec<usize>> {
    (0..n).map(|a| (0..n).map(|b| (a + b) % n).collect()).collect()
}

impl<T: Real> FiniteGroupAction<T> {
    /// `table[a][b]` is the index of `a·b`. Each representation lists one
    /// unitary per element.
    pub fn new(
        elements: Vec<String>,
        table: Vec<Vec<usize>>,
        reps: BTreeMap<String, Vec<DMatrix<Complex<T>>>>,
    ) -> Result<Self> {
        let n = elements.len();
        if n == 0 {
            return Err(Error::InvalidGroup("no elements".into()));
        }
        for (i, e) in elements.iter().enumerate() {
            if elements[..i].contains(e) {
                return Err(Error::InvalidGroup(format!("duplicate element `{e}`")));
            }
        }
        if table.len() != n || table.iter().any(|r| r.len() != n || r.iter().any(|&v| v >= n)) {
            return Err(Error::InvalidGroup("table must be a square array of element indices".into()));
        }
        for row in &table {
            let mut seen = vec![false; n];
            for &v in row {
                seen[v] = true;
            }
            if seen.iter().any(|s| !s) {
                return Err(Error::InvalidGroup("table rows are not permutations".into()));
            }
        }
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    if table[table[a][b]][c] != table[a][table[b][c]] {
                        return Err(Error::InvalidGroup("table is not associative".into()));
                    }
                }
            }
        }
        let identity = (0..n)
            .find(|&e| (0..n).all(|a| table[e][a] == a && table[a][e] == a))
            .ok_or_else(|| Error::InvalidGroup("no identity element".into()))?;
        let tol = T::lit(1e-10);
        for (label, us) in &reps {
            if us.len() != n {
                return Err(Error::InvalidGroup(format!("representation on `{label}` has {} matrices", us.len())));
            }
            let d = us[0].nrows();
            for u in us {
                if u.nrows() != d || u.ncols() != d {
                    return Err(Error::InvalidGroup(format!("representation on `{label}` has inconsistent shapes")));
                }
                if max_abs(&(u.adjoint() * u - DMatrix::identity(d, d))) > tol {
                    return Err(Error::InvalidGroup(format!("non-unitary matrix on `{label}`")));
                }
            }
            for a in 0..n {
                for b in 0..n {
                    let m = &us[a] * &us[b] * us[table[a][b]].adjoint();
                    let w = m[(0, 0)];
                    if (w.modulus() - T::one()).abs() > tol
                        || max_abs(&(&m - DMatrix::identity(d, d).map(|z: Complex<T>| z * w))) > tol
                    {
                        return Err(Error::InvalidGroup(format!(
                            "representation on `{label}` is not a projective homomorphism at ({}, {})",
                            elements[a], elements[b]
                        )));
                    }
                }
            }
        }
        Ok(Self { elements, table, reps, identity })
    }

    pub fn elements(&self) -> &[String] {
        &self.elements
    }

    pub fn table(&self) -> &[Vec<usize>] {
        &self.table
    }

    pub fn reps(&self) -> &BTreeMap<String, Vec<DMatrix<Complex<T>>>> {
        &self.reps
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn identity(&self) -> usize {
        self.identity
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.elements.iter().position(|e| e == id)
    }

    pub fn compose(&self, a: usize, b: usize) -> usize {
        self.table[a][b]
    }

    pub fn inverse(&self, a: usize) -> usize {
        (0..self.order()).find(|&b| self.table[a][b] == self.identity).expect("Latin square has inverses")
    }

    /// `⊗_l U_g^(l)` over the given factors.
    pub fn unitary_on(&self, labels: &[SystemLabel], g: usize) -> Result<DMatrix<Complex<T>>> {
        let mut u = DMatrix::from_element(1, 1, creal(T::one()));
        for l in labels {
            let f = match self.reps.get(&l.id) {
                Some(us) => {
                    if us[g].nrows() != l.dim {
                        return Err(Error::ShapeMismatch(format!(
                            "representation on `{}` has dimension {}, label has {}",
                            l.id,
                            us[g].nrows(),
                            l.dim
                        )));
                    }
                    us[g].clone()
                }
                None => DMatrix::identity(l.dim, l.dim),
            };
            u = u.kronecker(&f);
        }
        Ok(u)
    }

    /// `U_g A U_g†`.
    pub fn act(&self, op: &LabeledOperator<T>, g: usize) -> Result<LabeledOperator<T>> {
        let u = self.unitary_on(op.factors(), g)?;
        LabeledOperator::new(op.factors().to_vec(), &u * op.data() * u.adjoint())
    }
}

/// Group average `(1/|G|) Σ_g U_g A U_g†`.
pub fn twirl<T: Real>(op: &LabeledOperator<T>, action: &FiniteGroupAction<T>) -> Result<LabeledOperator<T>> {
    let us = (0..action.order()).map(|g| action.unitary_on(op.factors(), g)).collect::<Result<Vec<_>>>()?;
    Ok(LabeledOperator::from_parts_unchecked(op.factors().to_vec(), twirl_matrix(op.data(), &us)))
}

fn twirl_matrix<T: Real>(m: &DMatrix<Complex<T>>, us: &[DMatrix<Complex<T>>]) -> DMatrix<Complex<T>> {
    let mut acc = DMatrix::zeros(m.nrows(), m.ncols());
    for u in us {
        acc += u * m * u.adjoint();
    }
    let w = T::one() / T::lit(us.len() as f64);
    acc.map(|z| z * w)
}

/// Orthonormal basis of the invariant Hermitian operators on `labels`.
pub fn invariant_basis<T: Real>(labels: Vec<SystemLabel>, action: &FiniteGroupAction<T>) -> Result<LevelBasis<T>> {
    let full = LevelBasis::<T>::full(labels.clone());
    let n = full.dim();
    let us = (0..action.order()).map(|g| action.unitary_on(&labels, g)).collect::<Result<Vec<_>>>()?;
    let drop = T::lit(1e-9);
    let mut kept: Vec<DVector<T>> = Vec::new();
    let to_vec = |m: &DMatrix<Complex<T>>| {
        DVector::from_iterator(2 * n * n, m.iter().flat_map(|z| [z.re, z.im]))
    };
    for el in &full.elements {
        let tw = twirl_matrix(&el.to_dense(n), &us);
        let mut v = to_vec(&tw);
        for _ in 0..2 {
            for k in &kept {
                let c = k.dot(&v);
                v -= k * c;
            }
        }
        let norm = v.norm();
        if norm > drop {
            kept.push(v / norm);
        }
    }
    let elements = kept
        .iter()
        .map(|v| {
            let m = DMatrix::from_fn(n, n, |r, c| {
                let k = 2 * (c * n + r);
                cplx(v[k], v[k + 1])
            });
            let h = (&m + m.adjoint()).map(|z| z * T::lit(0.5));
            SparseHermitian::from_dense(&h, T::lit(1e-15))
        })
        .collect();
    Ok(LevelBasis { labels, elements })
}

/// Solution of an invariant `q_max` program.
#[derive(Debug, Clone)]
pub struct QmaxResult<T: Real> {
    pub q_max: T,
    /// Invariant comb (or state, for preparations) `R` with `q_max S_0 ⪯ R`.
    pub invariant: QuantumComb<T>,
    pub iterations: usize,
}

/// `q_max = max{q | ∃ invariant comb R: q S_0 ⪯ R}` on `space`.
pub fn qmax_comb<T: Real>(
    space: &CombSpace,
    seed: &LabeledOperator<T>,
    action: &FiniteGroupAction<T>,
    opts: &SolveOptions,
) -> Result<QmaxResult<T>> {
    let bases = (0..=space.n_steps())
        .map(|j| invariant_basis(space.prefix_labels(j), action))
        .collect::<Result<Vec<_>>>()?;
    let sdp = StandardSdp::with_bases(space.clone(), vec!["e".into()], vec![seed.clone()], bases)?;
    let raw = solve_standard(&sdp, T::zero(), opts)?;
    let (lambda, mut comb) = extract_certificate(space, &raw.dual)?;
    if !(lambda > T::zero()) {
        return Err(Error::NumericalFailure("q_max program has a vanishing optimum".into()));
    }
    comb.witness_chain = Some(crate::network::validate_comb(&comb, T::lit(opts.cert_tol.max(10.0 * opts.tol)))?);
    Ok(QmaxResult { q_max: T::one() / lambda, invariant: comb, iterations: raw.iterations })
}

/// State version of the `q_max` program; also returns the minimum-error
/// success probability `1/(|G| q_max)` of the orbit of `rho0`.
#[derive(Debug, Clone)]
pub struct QmaxState<T: Real> {
    pub q_max: T,
    pub rho: LabeledOperator<T>,
    pub p_succ: T,
}

pub fn qmax_state<T: Real>(
    rho0: &LabeledOperator<T>,
    action: &FiniteGroupAction<T>,
    opts: &SolveOptions,
) -> Result<QmaxState<T>> {
    let comb = crate::network::comb_of_state(rho0)?;
    let r = qmax_comb(&comb.space, &comb.op, action, opts)?;
    let inp = comb.space.steps()[0].input.id.clone();
    let rho = partial_trace(&r.invariant.op, &[&inp])?;
    Ok(QmaxState { p_succ: T::one() / (T::lit(action.order() as f64) * r.q_max), q_max: r.q_max, rho })
}

/// Result of [`covariant_gamma`]. `gamma_max` and `gamma_0` are in the units
/// of the stored (shifted) payoff.
#[derive(Debug, Clone)]
pub struct CovariantResult<T: Real> {
    pub gamma_max: T,
    pub q_max: T,
    pub gamma_0: T,
    pub payoff_shift: T,
    /// `S_0 = Σ_x g(e,x) R_x / (γ_0 |X|)`.
    pub seed: LabeledOperator<T>,
    pub invariant_comb: QuantumComb<T>,
}

impl<T: Real> CovariantResult<T> {
    pub fn gamma(&self) -> T {
        self.gamma_max - self.payoff_shift
    }
}

/// Maps problem labels to group elements; labels must name the elements.
fn label_elements<T: Real>(p: &EstimationProblem<T>, action: &FiniteGroupAction<T>) -> Result<Vec<usize>> {
    if p.len() != action.order() {
        return Err(Error::NotCovariant(format!("{} labels for a group of order {}", p.len(), action.order())));
    }
    p.labels()
        .iter()
        .map(|l| action.index_of(l).ok_or_else(|| Error::NotCovariant(format!("label `{l}` is not a group element"))))
        .collect()
}

/// Checks `g(y x̂, y x) = g(x̂, x)` for all `y, x̂, x`.
pub fn check_left_invariant<T: Real>(p: &EstimationProblem<T>, action: &FiniteGroupAction<T>) -> Result<()> {
    let el = label_elements(p, action)?;
    let mut pos = vec![0usize; action.order()];
    for (i, &g) in el.iter().enumerate() {
        pos[g] = i;
    }
    let g = p.payoff();
    for y in 0..action.order() {
        for r in 0..p.len() {
            for c in 0..p.len() {
                let (yr, yc) = (pos[action.compose(y, el[r])], pos[action.compose(y, el[c])]);
                let (a, b) = (g[(r, c)], g[(yr, yc)]);
                if (a - b).abs() > T::lit(1e-12) * (T::one() + a.abs()) {
                    let l = p.labels();
                    return Err(Error::NotLeftInvariant {
                        xhat: l[r].clone(),
                        x: l[c].clone(),
                        yxhat: l[yr].clone(),
                        yx: l[yc].clone(),
                    });
                }
            }
        }
    }
    Ok(())
}

/// `γ_max = γ_0 / q_max` for a problem whose combs form the orbit
/// `R_x = U_x R_e U_x†` under `action`, with uniform prior and left-invariant
/// payoff.
pub fn covariant_gamma<T: Real>(
    p: &EstimationProblem<T>,
    action: &FiniteGroupAction<T>,
    opts: &SolveOptions,
) -> Result<CovariantResult<T>> {
    let el = label_elements(p, action)?;
    check_left_invariant(p, action)?;
    let n = p.len();
    let w = T::one() / T::lit(n as f64);
    if p.prior().iter().any(|&q| (q - w).abs() > T::lit(1e-12)) {
        return Err(Error::NotCovariant("prior is not uniform".into()));
    }
    let e_pos = el.iter().position(|&g| g == action.identity()).expect("labels cover the group");
    let r_e = &p.combs()[e_pos].op;
    for (i, c) in p.combs().iter().enumerate() {
        let moved = action.act(r_e, el[i])?;
        let diff = max_abs(&(moved.data() - c.op.data()));
        if diff > T::lit(1e-9) * (T::one() + r_e.max_abs()) {
            return Err(Error::NotCovariant(format!(
                "comb `{}` differs from the orbit of the identity comb by {:e}",
                p.labels()[i],
                diff.to_f64_lossy()
            )));
        }
    }
    let row = p.payoff().row(e_pos);
    let gamma_0 = row.iter().fold(T::zero(), |a, &g| a + g) * w;
    if !(gamma_0 > T::zero()) {
        return Err(Error::InvalidProblem("γ_0 vanishes; the optimal payoff is zero".into()));
    }
    let mut seed = r_e.scale(T::zero());
    for (x, c) in p.combs().iter().enumerate() {
        seed = seed.add(&c.op.scale(row[x] * w / gamma_0))?;
    }
    let q = qmax_comb(p.space(), &seed, action, opts)?;
    Ok(CovariantResult {
        gamma_max: gamma_0 / q.q_max,
        q_max: q.q_max,
        gamma_0,
        payoff_shift: p.payoff_shift(),
        seed,
        invariant_comb: q.invariant,
    })
}

/// Orbit problem `R_x = U_x R_e U_x†` with uniform prior and payoff
/// `g(x̂, x) = f(x̂⁻¹ x)` (plus `shift`), labelled by the group elements.
pub fn covariant_problem<T: Real>(
    seed: &QuantumComb<T>,
    action: &FiniteGroupAction<T>,
    f: &[T],
    shift: T,
) -> Result<EstimationProblem<T>> {
    let n = action.order();
    if f.len() != n {
        return Err(Error::InvalidProblem(format!("{} payoff values for a group of order {n}", f.len())));
    }
    let combs = (0..n)
        .map(|g| QuantumComb::new(seed.space.clone(), &action.act(&seed.op, g)?))
        .collect::<Result<Vec<_>>>()?;
    let payoff = DMatrix::from_fn(n, n, |r, c| f[action.compose(action.inverse(r), c)] + shift);
    EstimationProblem::from_combs(seed.space.clone(), action.elements().to_vec(), uniform_prior(n), combs, payoff, shift)
}

/// `diag(e^{i n x})`, `n = 0…levels−1`.
pub fn phase_unitary<T: Real>(levels: usize, x: T) -> DMatrix<Complex<T>> {
    DMatrix::from_fn(levels, levels, |r, c| {
        if r == c {
            let a = x * T::lit(r as f64);
            cplx(a.cos(), a.sin())
        } else {
            creal(T::zero())
        }
    })
}

/// Uniform grid `2πk/d_grid`.
pub fn phase_grid<T: Real>(d_grid: usize) -> Vec<T> {
    (0..d_grid).map(|k| T::two_pi() * T::lit(k as f64) / T::lit(d_grid as f64)).collect()
}

/// Default grid: four points per unit of total output dimension.
pub fn default_d_grid(total_out_dim: usize) -> usize {
    4 * total_out_dim
}

/// Smallest grid `2·levels + 2` used for exact cos-payoff phase problems.
pub fn minimal_d_grid(levels: usize) -> usize {
    2 * levels + 2
}

fn check_grid(levels: usize, d_grid: usize) -> Result<()> {
    if levels < 2 {
        return Err(Error::BadDimension(format!("phase problems need at least 2 levels, got {levels}")));
    }
    // cos payoffs have Fourier support ±1: 2·(levels−1)+2 points make the grid exact
    if d_grid < 2 * levels {
        return Err(Error::BadParameter(format!(
            "grid of {d_grid} points is below the exactness bound {} for {levels} levels",
            2 * levels
        )));
    }
    Ok(())
}

/// `Z_{d_grid}` acting by `U_x` on the factor `out`.
pub fn phase_action<T: Real>(levels: usize, d_grid: usize, out: &str) -> Result<FiniteGroupAction<T>> {
    let grid = phase_grid::<T>(d_grid);
    let mut reps = BTreeMap::new();
    reps.insert(out.to_string(), grid.iter().map(|&x| phase_unitary(levels, x)).collect());
    FiniteGroupAction::new((0..d_grid).map(|k| k.to_string()).collect(), cyclic_table(d_grid), reps)
}

pub const PHASE_IN: &str = "phase.in";
pub const PHASE_OUT: &str = "phase.out";

/// Single phase shift `U_x` on `levels` levels, uniform grid prior and payoff
/// `cos(x̂ − x)` shifted by 1. Labels are grid indices.
pub fn phase_problem<T: Real>(levels: usize, d_grid: usize) -> Result<EstimationProblem<T>> {
    check_grid(levels, d_grid)?;
    let inp = SystemLabel::new(PHASE_IN, levels);
    let out = SystemLabel::new(PHASE_OUT, levels);
    let grid = phase_grid::<T>(d_grid);
    let combs = grid
        .iter()
        .map(|&x| comb_of_memoryless_sequence(&[choi_of_unitary(&phase_unitary(levels, x), &inp, &out)?]))
        .collect::<Result<Vec<_>>>()?;
    let payoff = DMatrix::from_fn(d_grid, d_grid, |r, c| (grid[r] - grid[c]).cos() + T::one());
    EstimationProblem::from_combs(
        CombSpace::single(inp, out)?,
        (0..d_grid).map(|k| k.to_string()).collect(),
        uniform_prior(d_grid),
        combs,
        payoff,
        T::one(),
    )
}

/// Labels of the two-phase problem: both phase shifts act in parallel on a
/// pair of qubits, basis `|00⟩, |01⟩, |10⟩, |11⟩`.
pub fn two_phase_labels() -> (SystemLabel, SystemLabel) {
    (SystemLabel::new("ab.in", 4), SystemLabel::new("ab.out", 4))
}

/// `U_x1 ⊗ U_x2` on two qubits.
pub fn two_phase_unitary<T: Real>(x1: T, x2: T) -> DMatrix<Complex<T>> {
    phase_unitary(2, x1).kronecker(&phase_unitary(2, x2))
}

/// Two qubit phase shifts applied in parallel, grid `d_grid` per phase,
/// payoff `g_p = p cos(Σ) + (1−p) cos(Δ)` of the errors' sum and
/// difference, shifted by 1. Labels are `"k1|k2"`.
pub fn two_phase_problem<T: Real>(p: T, d_grid: usize) -> Result<EstimationProblem<T>> {
    if !(p >= T::zero() && p <= T::one()) {
        return Err(Error::BadParameter(format!("p = {} outside [0, 1]", p.to_f64_lossy())));
    }
    check_grid(2, d_grid)?;
    let (inp, out) = two_phase_labels();
    let grid = phase_grid::<T>(d_grid);
    let mut labels = Vec::with_capacity(d_grid * d_grid);
    let mut combs = Vec::with_capacity(d_grid * d_grid);
    for (k1, &x1) in grid.iter().enumerate() {
        for (k2, &x2) in grid.iter().enumerate() {
            labels.push(joint_id(&[&k1.to_string(), &k2.to_string()]));
            combs.push(comb_of_memoryless_sequence(&[choi_of_unitary(&two_phase_unitary(x1, x2), &inp, &out)?])?);
        }
    }
    let n = d_grid * d_grid;
    let payoff = DMatrix::from_fn(n, n, |r, c| {
        let e1 = grid[r / d_grid] - grid[c / d_grid];
        let e2 = grid[r % d_grid] - grid[c % d_grid];
        p * (e1 + e2).cos() + (T::one() - p) * (e1 - e2).cos() + T::one()
    });
    EstimationProblem::from_combs(CombSpace::single(inp, out)?, labels, uniform_prior(n), combs, payoff, T::one())
}

/// Product tester for the two-phase problem: covariant measurements of
/// each phase with input `|e⟩ ⊗ |f⟩`.
pub fn two_phase_product_tester<T: Real>(e: &[Complex<T>], f: &[Complex<T>], d_grid: usize) -> Result<Tester<T>> {
    if e.len() != 2 || f.len() != 2 {
        return Err(Error::ShapeMismatch("qubit amplitudes expected".into()));
    }
    check_grid(2, d_grid)?;
    let (inp, out) = two_phase_labels();
    let ef = DVector::from_column_slice(e).kronecker(&DVector::from_column_slice(f));
    let rho_t = LabeledOperator::projector(vec![inp.clone()], ef.as_slice())?.data().transpose();
    let eta = DVector::from_element(2, creal(T::one()));
    let w = T::one() / T::lit(d_grid as f64);
    let grid = phase_grid::<T>(d_grid);
    let mut outcomes = Vec::with_capacity(d_grid * d_grid);
    for (k1, &x1) in grid.iter().enumerate() {
        for (k2, &x2) in grid.iter().enumerate() {
            let v = (phase_unitary(2, x1) * &eta).kronecker(&(phase_unitary(2, x2) * &eta));
            let p = (&v * v.adjoint()).map(|z| z * w * w);
            let t = LabeledOperator::new(vec![out.clone(), inp.clone()], p.kronecker(&rho_t))?;
            outcomes.push((joint_id(&[&k1.to_string(), &k2.to_string()]), t));
        }
    }
    Tester::new(CombSpace::single(inp, out)?, outcomes)
}

/// Effective payoff operator of the two-phase problem on the input pair:
/// `(p/2)(|00⟩⟨11| + h.c.) + ((1−p)/2)(|01⟩⟨10| + h.c.)`.
pub fn two_phase_payoff_operator<T: Real>(p: T) -> Result<LabeledOperator<T>> {
    let h = T::lit(0.5);
    let mut m = DMatrix::<T>::zeros(4, 4);
    m[(0, 3)] = p * h;
    m[(3, 0)] = p * h;
    m[(1, 2)] = (T::one() - p) * h;
    m[(2, 1)] = (T::one() - p) * h;
    LabeledOperator::from_real(vec![SystemLabel::new("a", 2), SystemLabel::new("b", 2)], &m)
}

/// Covariant tester `T_x̂ = P_x̂ ⊗ ρᵀ` for a single phase shift, with
/// `P_x̂ = U_x̂|η⟩⟨η|U_x̂†/d_grid`, `η = Σ_n |n⟩` and `ρ = |e⟩⟨e|`.
pub fn covariant_phase_tester<T: Real>(
    e: &[Complex<T>],
    d_grid: usize,
    input: &SystemLabel,
    output: &SystemLabel,
) -> Result<Tester<T>> {
    let levels = e.len();
    check_grid(levels, d_grid)?;
    let rho_t = LabeledOperator::projector(vec![input.clone()], e)?.data().transpose();
    let eta = vec![creal(T::one()); levels];
    let w = T::one() / T::lit(d_grid as f64);
    let outcomes = phase_grid::<T>(d_grid)
        .iter()
        .enumerate()
        .map(|(k, &x)| {
            let v = phase_unitary(levels, x) * DVector::from_vec(eta.clone());
            let p = LabeledOperator::projector(vec![output.clone()], v.as_slice())?.scale(w);
            let t = p.data().kronecker(&rho_t);
            Ok((k.to_string(), LabeledOperator::new(vec![output.clone(), input.clone()], t)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Tester::new(CombSpace::single(input.clone(), output.clone())?, outcomes)
}

/// Squared overlap `(Σ_n √p_n |t_n|)²` between the input populations of a
/// single-step tester and a target amplitude vector. `p` is the diagonal of
/// the normalized input state `Ξ^(1)`. Against diagonal phase shifts the
/// phases of the input amplitudes are absorbed by the measurement, and the
/// coherences can be carried by an ancilla purification, so the populations
/// are what identifies the optimal input.
pub fn input_population_overlap<T: Real>(t: &Tester<T>, target: &[T]) -> Result<T> {
    if t.space.n_steps() != 1 {
        return Err(Error::InvalidProblem("input populations are defined for single-step testers".into()));
    }
    let rho = match &t.xi_chain {
        Some(c) => c[0].clone(),
        None => crate::network::validate_tester(t, T::lit(1e-6))?[0].clone(),
    };
    if rho.dim() != target.len() {
        return Err(Error::ShapeMismatch(format!("input dimension {} vs target length {}", rho.dim(), target.len())));
    }
    let tr = rho.trace_re();
    let norm = target.iter().fold(T::zero(), |a, &v| a + v * v).sqrt();
    let mut s = T::zero();
    for (k, &tk) in target.iter().enumerate() {
        let pk = (rho.data()[(k, k)].re / tr).max(T::zero());
        s += pk.sqrt() * tk.abs() / norm;
    }
    Ok(s * s)
}

/// Optimal single-phase estimation with `d` levels under `cos` payoff.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseOptimum {
    /// `2(1 − λ_top)`, from the tridiagonal eigenproblem.
    pub c_min: f64,
    pub lambda_top: f64,
    /// Optimal real amplitudes `e_n`.
    pub coefficients: Vec<f64>,
    /// The printed closed form `4 sin²(π/(2d))`, for comparison only.
    pub c_min_printed: f64,
    /// Set when the printed closed form disagrees with the oracle.
    pub discrepancy: bool,
}

/// Top eigenpair of the `d×d` tridiagonal matrix with `½` off the diagonal.
pub fn phase_estimation_optimum(d: usize) -> Result<PhaseOptimum> {
    if d < 2 {
        return Err(Error::BadDimension(format!("need at least 2 levels, got {d}")));
    }
    let m = DMatrix::from_fn(d, d, |r, c| if r.abs_diff(c) == 1 { 0.5 } else { 0.0 });
    let se = SymmetricEigen::new(m);
    let (k, lambda_top) = se
        .eigenvalues
        .iter()
        .enumerate()
        .fold((0, f64::MIN), |(bk, bv), (k, &v)| if v > bv { (k, v) } else { (bk, bv) });
    let mut v: Vec<f64> = se.eigenvectors.column(k).iter().copied().collect();
    if v.iter().sum::<f64>() < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    let c_min = 2.0 * (1.0 - lambda_top);
    let c_min_printed = 4.0 * (std::f64::consts::PI / (2.0 * d as f64)).sin().powi(2);
    Ok(PhaseOptimum {
        c_min,
        lambda_top,
        coefficients: v,
        c_min_printed,
        discrepancy: (c_min - c_min_printed).abs() > 1e-9,
    })
}

/// Closed-form optimum of the two-phase example.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoPhaseOptimum {
    pub gamma: f64,
    /// Amplitudes on `|00⟩, |01⟩, |10⟩, |11⟩`.
    pub state: [f64; 4],
    /// True at `p = 1/2`, where `state` is the product representative `|+⟩|+⟩`.
    pub degenerate: bool,
}

pub fn two_phase_correlated(p: f64) -> Result<TwoPhaseOptimum> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::BadParameter(format!("p = {p} outside [0, 1]")));
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let gamma = p.max(1.0 - p) / 2.0;
    let (state, degenerate) = if (p - 0.5).abs() < 1e-12 {
        ([0.5, 0.5, 0.5, 0.5], true)
    } else if p > 0.5 {
        ([s, 0.0, 0.0, s], false)
    } else {
        ([0.0, s, s, 0.0], false)
    };
    Ok(TwoPhaseOptimum { gamma, state, degenerate })
}

/// Sum of `K` identical phase shifts estimated with one entangled `d`-level
/// probe versus `K` independent optimal probes.
#[derive(Debug, Clone, PartialEq)]
pub struct SumOfPhases {
    pub c_entangled: f64,
    /// `2{1 − [1 − c_single/2]^K}`.
    pub c_product: f64,
    pub ratio: f64,
    /// `2{1 − [1 − 2 sin²(π/(2M))]^K}` with `M` as given.
    pub c_product_printed: f64,
}

pub fn sum_of_phases(d: usize, k: usize) -> Result<SumOfPhases> {
    sum_of_phases_with(d, k, d)
}

/// As [`sum_of_phases`], with the dimension `m` used in the printed product
/// formula set explicitly.
pub fn sum_of_phases_with(d: usize, k: usize, m: usize) -> Result<SumOfPhases> {
    if k == 0 {
        return Err(Error::BadParameter("K must be at least 1".into()));
    }
    if d < 2 || m < 1 {
        return Err(Error::BadParameter(format!("need d ≥ 2 and M ≥ 1, got d = {d}, M = {m}")));
    }
    let c = phase_estimation_optimum(d)?.c_min;
    let c_product = 2.0 * (1.0 - (1.0 - c / 2.0).powi(k as i32));
    let s = (std::f64::consts::PI / (2.0 * m as f64)).sin();
    let c_product_printed = 2.0 * (1.0 - (1.0 - 2.0 * s * s).powi(k as i32));
    Ok(SumOfPhases { c_entangled: c, c_product, ratio: c_product / c, c_product_printed })
}
