//! Quantum combs, testers and the generalized Born rule.
//!
//! A comb over steps `s_1 … s_N` lives on `out_1 ⊗ in_1 ⊗ … ⊗ out_N ⊗ in_N`
//! (this is the canonical factor order). Channels enter through their Choi
//! operator `Σ_ij C(|i⟩⟨j|) ⊗ |i⟩⟨j|` on `(out, in)`, and testers act on the
//! same factors so that `p(m|R) = Tr[T_m R]` with no transposes.

use nalgebra::{ComplexField, DMatrix};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{
    embed_identity, min_eig, partial_trace, tensor, LabeledOperator, SystemLabel,
};
use crate::scalar::{Complex, Real};

/// Default residual tolerance for the comb/tester recursions.
pub const DEFAULT_NORM_TOL: f64 = 1e-8;

/// One time step: a channel from `input` to `output`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Step {
    #[serde(rename = "in")]
    pub input: SystemLabel,
    #[serde(rename = "out")]
    pub output: SystemLabel,
}

impl Step {
    pub fn new(input: SystemLabel, output: SystemLabel) -> Self {
        Self { input, output }
    }
}

/// Ordered list of time steps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CombSpace {
    steps: Vec<Step>,
}

impl CombSpace {
    pub fn new(steps: Vec<Step>) -> Result<Self> {
        if steps.is_empty() {
            return Err(Error::InvalidProblem("a comb space needs at least one step".into()));
        }
        let space = Self { steps };
        crate::operator::check_labels(&space.labels())?;
        Ok(space)
    }

    /// Single step `input → output`.
    pub fn single(input: SystemLabel, output: SystemLabel) -> Result<Self> {
        Self::new(vec![Step::new(input, output)])
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn n_steps(&self) -> usize {
        self.steps.len()
    }

    /// `[out_1, in_1, …, out_n, in_n]`.
    pub fn prefix_labels(&self, n: usize) -> Vec<SystemLabel> {
        self.steps[..n]
            .iter()
            .flat_map(|s| [s.output.clone(), s.input.clone()])
            .collect()
    }

    /// Canonical factor order of the whole comb.
    pub fn labels(&self) -> Vec<SystemLabel> {
        self.prefix_labels(self.steps.len())
    }

    /// Factors of `Ξ^(n)`: `prefix(n-1) + [in_n]`, `n` in `1..=N`.
    pub fn xi_labels(&self, n: usize) -> Vec<SystemLabel> {
        let mut l = self.prefix_labels(n - 1);
        l.push(self.steps[n - 1].input.clone());
        l
    }

    pub fn total_dim(&self) -> usize {
        self.steps.iter().map(|s| s.input.dim * s.output.dim).product()
    }

    pub fn prefix_dim(&self, n: usize) -> usize {
        self.steps[..n].iter().map(|s| s.input.dim * s.output.dim).product()
    }

    /// `Π_s dim(in_s)`, the trace of every comb on this space.
    pub fn input_dim_product(&self) -> usize {
        self.steps.iter().map(|s| s.input.dim).product()
    }

    /// Steps of `self` followed by the steps of `other`.
    pub fn concat(&self, other: &Self) -> Result<Self> {
        let mut steps = self.steps.clone();
        steps.extend(other.steps.iter().cloned());
        Self::new(steps)
    }
}

/// A positive operator meant to satisfy the comb recursion.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumComb<T: Real> {
    pub space: CombSpace,
    /// Stored in canonical factor order.
    pub op: LabeledOperator<T>,
    /// `R^(0) … R^(N-1)` once validated.
    pub witness_chain: Option<Vec<LabeledOperator<T>>>,
}

impl<T: Real> QuantumComb<T> {
    /// Wraps `op` without checking normalization. The operator is permuted
    /// into canonical order if needed.
    pub fn new(space: CombSpace, op: &LabeledOperator<T>) -> Result<Self> {
        let op = op.aligned_to(&space.labels())?;
        Ok(Self { space, op, witness_chain: None })
    }

    /// Wraps and validates in one go.
    pub fn validated(space: CombSpace, op: &LabeledOperator<T>, tol: T) -> Result<Self> {
        let mut c = Self::new(space, op)?;
        c.witness_chain = Some(validate_comb(&c, tol)?);
        Ok(c)
    }
}

/// Outcome-indexed family of positive operators on a comb space.
#[derive(Debug, Clone, PartialEq)]
pub struct Tester<T: Real> {
    pub space: CombSpace,
    pub outcomes: Vec<(String, LabeledOperator<T>)>,
    /// `Ξ^(1) … Ξ^(N)` once validated.
    pub xi_chain: Option<Vec<LabeledOperator<T>>>,
}

impl<T: Real> Tester<T> {
    pub fn new(space: CombSpace, outcomes: Vec<(String, LabeledOperator<T>)>) -> Result<Self> {
        if outcomes.is_empty() {
            return Err(Error::OutcomeMismatch("tester without outcomes".into()));
        }
        let labels = space.labels();
        let outcomes = outcomes
            .into_iter()
            .map(|(id, op)| Ok((id, op.aligned_to(&labels)?)))
            .collect::<Result<Vec<_>>>()?;
        for (i, (id, _)) in outcomes.iter().enumerate() {
            if outcomes[..i].iter().any(|(o, _)| o == id) {
                return Err(Error::OutcomeMismatch(format!("duplicate outcome `{id}`")));
            }
        }
        Ok(Self { space, outcomes, xi_chain: None })
    }

    pub fn validated(space: CombSpace, outcomes: Vec<(String, LabeledOperator<T>)>, tol: T) -> Result<Self> {
        let mut t = Self::new(space, outcomes)?;
        t.xi_chain = Some(validate_tester(&t, tol)?);
        Ok(t)
    }

    pub fn outcome_ids(&self) -> Vec<&str> {
        self.outcomes.iter().map(|(id, _)| id.as_str()).collect()
    }

    pub fn outcome(&self, id: &str) -> Option<&LabeledOperator<T>> {
        self.outcomes.iter().find(|(o, _)| o == id).map(|(_, op)| op)
    }

    pub fn sum(&self) -> LabeledOperator<T> {
        let mut acc = self.outcomes[0].1.clone();
        for (_, op) in &self.outcomes[1..] {
            acc = acc.add(op).expect("outcomes share the canonical layout");
        }
        acc
    }
}

fn check_psd<T: Real>(op: &LabeledOperator<T>, tol: T) -> Result<()> {
    let m = min_eig(op)?;
    if !(m >= -tol) {
        return Err(Error::NotPsd { min_eig: m.to_f64_lossy() });
    }
    Ok(())
}

/// Choi operator of the channel with the given Kraus operators, on `(out, in)`.
pub fn choi_of_channel<T: Real>(
    kraus: &[DMatrix<Complex<T>>],
    input: &SystemLabel,
    output: &SystemLabel,
    tol: T,
) -> Result<LabeledOperator<T>> {
    let (di, d_o) = (input.dim, output.dim);
    let mut tp = DMatrix::<Complex<T>>::zeros(di, di);
    let n = di * d_o;
    let mut data = DMatrix::<Complex<T>>::zeros(n, n);
    for k in kraus {
        if k.nrows() != d_o || k.ncols() != di {
            return Err(Error::ShapeMismatch(format!(
                "Kraus operator is {}x{}, expected {d_o}x{di}",
                k.nrows(),
                k.ncols()
            )));
        }
        tp += k.adjoint() * k;
        // vec(K)[(o, i)] = K[o, i]
        for r in 0..n {
            let kr = k[(r / di, r % di)];
            if kr == Complex::new(T::zero(), T::zero()) {
                continue;
            }
            for c in 0..n {
                data[(r, c)] += kr * k[(c / di, c % di)].conj();
            }
        }
    }
    let residual = (tp - DMatrix::<Complex<T>>::identity(di, di))
        .iter()
        .fold(T::zero(), |m, z| m.max(z.modulus()));
    if !(residual <= tol) {
        return Err(Error::NotTracePreserving { residual: residual.to_f64_lossy() });
    }
    LabeledOperator::new(vec![output.clone(), input.clone()], data)
}

/// Choi operator of `ρ ↦ U ρ U†`.
pub fn choi_of_unitary<T: Real>(
    u: &DMatrix<Complex<T>>,
    input: &SystemLabel,
    output: &SystemLabel,
) -> Result<LabeledOperator<T>> {
    choi_of_channel(std::slice::from_ref(u), input, output, T::lit(1e-8).max(T::tol_floor()))
}

/// Label of the trivial input attached to a state-preparation comb.
pub fn preparation_input(output: &SystemLabel) -> SystemLabel {
    SystemLabel::new(format!("{}.in", output.id), 1)
}

/// Single-step preparation comb of a density matrix on one factor.
pub fn comb_of_state<T: Real>(rho: &LabeledOperator<T>) -> Result<QuantumComb<T>> {
    if rho.factors().len() != 1 {
        return Err(Error::NotAState(format!(
            "expected a single factor, got {:?}; merge factors first",
            rho.label_ids()
        )));
    }
    let tol = T::lit(DEFAULT_NORM_TOL);
    if !(rho.hermitian_residual() <= tol) {
        return Err(Error::NotAState("not Hermitian".into()));
    }
    let tr = rho.trace();
    if (tr.re - T::one()).abs() > tol || tr.im.abs() > tol {
        return Err(Error::NotAState(format!("trace {} != 1", tr.re)));
    }
    let m = min_eig(rho)?;
    if !(m >= -tol) {
        return Err(Error::NotAState(format!("min eigenvalue {}", m)));
    }
    let out = rho.factors()[0].clone();
    let input = preparation_input(&out);
    let op = embed_identity(rho, &input, 1)?;
    QuantumComb::validated(CombSpace::single(input, out)?, &op, tol)
}

/// Comb of a memoryless sequence of channels given by Choi operators on
/// `(out, in)`.
pub fn comb_of_memoryless_sequence<T: Real>(chois: &[LabeledOperator<T>]) -> Result<QuantumComb<T>> {
    if chois.is_empty() {
        return Err(Error::InvalidProblem("empty channel sequence".into()));
    }
    let mut steps = Vec::with_capacity(chois.len());
    for c in chois {
        if c.factors().len() != 2 {
            return Err(Error::ShapeMismatch(format!(
                "Choi operator must have factors (out, in), got {:?}",
                c.label_ids()
            )));
        }
        steps.push(Step::new(c.factors()[1].clone(), c.factors()[0].clone()));
    }
    let mut op = chois[0].clone();
    for c in &chois[1..] {
        op = tensor(&op, c)?;
    }
    QuantumComb::validated(CombSpace::new(steps)?, &op, T::lit(DEFAULT_NORM_TOL))
}

/// Checks the comb recursion and returns `R^(0) … R^(N-1)` (`R^(0)` is the
/// scalar 1). Level `n` is the equation `Tr_{out,n}[R^(n)] = I_{in,n} ⊗ R^(n-1)`.
pub fn validate_comb<T: Real>(comb: &QuantumComb<T>, tol: T) -> Result<Vec<LabeledOperator<T>>> {
    let space = &comb.space;
    let op = comb.op.aligned_to(&space.labels())?;
    check_psd(&op, tol)?;
    let n_steps = space.n_steps();
    let mut chain = Vec::with_capacity(n_steps);
    let mut current = op;
    for n in (1..=n_steps).rev() {
        let step = &space.steps()[n - 1];
        let tr_out = partial_trace(&current, &[&step.output.id])?;
        let cand = partial_trace(&tr_out, &[&step.input.id])?.scale(T::one() / T::lit(step.input.dim as f64));
        let expected = embed_identity(&cand, &step.input, cand.factors().len())?;
        let mut residual = tr_out.sub(&expected)?.max_abs();
        if n == 1 {
            residual = residual.max((cand.trace() - Complex::new(T::one(), T::zero())).modulus());
        }
        if !(residual <= tol) {
            return Err(Error::NormalizationViolation { level: n, residual: residual.to_f64_lossy() });
        }
        chain.push(cand.clone());
        current = cand;
    }
    chain.reverse();
    Ok(chain)
}

/// Checks the tester recursion on `Σ_m T_m` and returns `Ξ^(1) … Ξ^(N)`.
/// Level `N` is `Σ_m T_m = I_{out,N} ⊗ Ξ^(N)`, level `n-1` is
/// `Tr_{in,n}[Ξ^(n)] = I_{out,n-1} ⊗ Ξ^(n-1)` and level 0 is `Tr_{in,1}[Ξ^(1)] = 1`.
pub fn validate_tester<T: Real>(tester: &Tester<T>, tol: T) -> Result<Vec<LabeledOperator<T>>> {
    let space = &tester.space;
    for (_, t) in &tester.outcomes {
        check_psd(t, tol)?;
    }
    let n_steps = space.n_steps();
    let mut chain = Vec::with_capacity(n_steps);
    // `current` is the operator that must equal I_{out,n} ⊗ Ξ^(n), on prefix(n).
    let mut current = tester.sum().aligned_to(&space.labels())?;
    for n in (1..=n_steps).rev() {
        let step = &space.steps()[n - 1];
        let xi = partial_trace(&current, &[&step.output.id])?.scale(T::one() / T::lit(step.output.dim as f64));
        let expected = embed_identity(&xi, &step.output, 2 * (n - 1))?;
        let residual = current.sub(&expected)?.max_abs();
        if !(residual <= tol) {
            return Err(Error::NormalizationViolation { level: n, residual: residual.to_f64_lossy() });
        }
        current = partial_trace(&xi, &[&step.input.id])?;
        chain.push(xi);
    }
    let residual = (current.trace() - Complex::new(T::one(), T::zero())).modulus();
    if !(residual <= tol) {
        return Err(Error::NormalizationViolation { level: 0, residual: residual.to_f64_lossy() });
    }
    chain.reverse();
    Ok(chain)
}

/// `Tr[T_m R]`; `t` is permuted to the factor order of `r` if needed.
pub fn born_probability<T: Real>(t: &LabeledOperator<T>, r: &QuantumComb<T>) -> Result<T> {
    born_trace(t, &r.op)
}

pub(crate) fn born_trace<T: Real>(t: &LabeledOperator<T>, r: &LabeledOperator<T>) -> Result<T> {
    let t = t.aligned_to(r.factors())?;
    let n = r.dim();
    let mut acc = Complex::new(T::zero(), T::zero());
    for i in 0..n {
        for j in 0..n {
            acc += t.data()[(i, j)] * r.data()[(j, i)];
        }
    }
    Ok(acc.re)
}

/// Comb of two independent processes; steps of `a` come first.
pub fn tensor_combs<T: Real>(a: &QuantumComb<T>, b: &QuantumComb<T>) -> Result<QuantumComb<T>> {
    let space = a.space.concat(&b.space)?;
    let op = tensor(&a.op, &b.op)?;
    let witness_chain = None;
    Ok(QuantumComb { space, op, witness_chain })
}

/// Joins outcome ids of a product tester or a joint problem.
pub fn joint_id(parts: &[&str]) -> String {
    parts.join("|")
}

/// Product tester with outcomes `(m, n)` encoded as `"m|n"`.
pub fn tensor_testers<T: Real>(a: &Tester<T>, b: &Tester<T>) -> Result<Tester<T>> {
    let space = a.space.concat(&b.space)?;
    let mut outcomes = Vec::with_capacity(a.outcomes.len() * b.outcomes.len());
    for (ma, ta) in &a.outcomes {
        for (mb, tb) in &b.outcomes {
            outcomes.push((joint_id(&[ma, mb]), tensor(ta, tb)?));
        }
    }
    Tester::new(space, outcomes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::cplx;
    use approx::assert_abs_diff_eq;

    fn lab(id: &str, d: usize) -> SystemLabel {
        SystemLabel::new(id, d)
    }

    fn c(re: f64) -> Complex<f64> {
        cplx(re, 0.0)
    }

    fn identity_kraus(d: usize) -> Vec<DMatrix<Complex<f64>>> {
        vec![DMatrix::identity(d, d)]
    }

    fn depolarizing_kraus() -> Vec<DMatrix<Complex<f64>>> {
        let h = 0.5;
        let x = DMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)]);
        let y = DMatrix::from_row_slice(2, 2, &[c(0.0), cplx(0.0, -1.0), cplx(0.0, 1.0), c(0.0)]);
        let z = DMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(-1.0)]);
        vec![DMatrix::identity(2, 2) * c(h), x * c(h), y * c(h), z * c(h)]
    }

    fn state(id: &str, v: &[Complex<f64>]) -> LabeledOperator<f64> {
        LabeledOperator::projector(vec![lab(id, v.len())], v).unwrap()
    }

    #[test]
    fn choi_identity_channel() {
        let r = choi_of_channel(&identity_kraus(2), &lab("i", 2), &lab("o", 2), 1e-12).unwrap();
        assert_eq!(r.label_ids(), vec!["o", "i"]);
        // Σ_ij |ii⟩⟨jj|
        for a in 0..4 {
            for b in 0..4 {
                let e = if (a == 0 || a == 3) && (b == 0 || b == 3) { 1.0 } else { 0.0 };
                assert_eq!(r.data()[(a, b)].re, e);
            }
        }
        assert_abs_diff_eq!(r.trace_re(), 2.0);
    }

    #[test]
    fn choi_depolarizing_is_maximally_mixed() {
        let r = choi_of_channel(&depolarizing_kraus(), &lab("i", 2), &lab("o", 2), 1e-12).unwrap();
        let expect = DMatrix::<Complex<f64>>::identity(4, 4) * c(0.5);
        assert_abs_diff_eq!((r.data() - expect).norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn choi_rejects_non_trace_preserving() {
        let k = vec![DMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(0.0)])];
        assert!(matches!(
            choi_of_channel(&k, &lab("i", 2), &lab("o", 2), 1e-10),
            Err(Error::NotTracePreserving { .. })
        ));
    }

    #[test]
    fn choi_phase_shift_matches_action_on_basis() {
        let x = std::f64::consts::PI;
        let u = DMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), Complex::from_polar(1.0, x)]);
        let r = choi_of_unitary(&u, &lab("i", 2), &lab("o", 2)).unwrap();
        // Oracle: assemble Σ_ij U|i⟩⟨j|U† ⊗ |i⟩⟨j| entry by entry.
        for i in 0..2 {
            for j in 0..2 {
                let mut eij = DMatrix::<Complex<f64>>::zeros(2, 2);
                eij[(i, j)] = c(1.0);
                let img = &u * eij * u.adjoint();
                for o in 0..2 {
                    for p in 0..2 {
                        let got = r.data()[(o * 2 + i, p * 2 + j)];
                        assert_abs_diff_eq!((got - img[(o, p)]).norm(), 0.0, epsilon = 1e-14);
                    }
                }
            }
        }
        assert_abs_diff_eq!((r.data()[(0, 3)] - c(-1.0)).norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn state_combs() {
        assert!(comb_of_state(&state("s", &[c(1.0), c(0.0)])).is_ok());
        let mixed = LabeledOperator::identity(vec![lab("s", 2)]).unwrap().scale(0.5);
        let comb = comb_of_state(&mixed).unwrap();
        assert_eq!(comb.space.steps()[0].input.dim, 1);
        let bad = LabeledOperator::identity(vec![lab("s", 2)]).unwrap().scale(0.45);
        assert!(matches!(comb_of_state(&bad), Err(Error::NotAState(_))));
    }

    #[test]
    fn memoryless_sequences() {
        let id = choi_of_channel(&identity_kraus(2), &lab("i1", 2), &lab("o1", 2), 1e-12).unwrap();
        let one = comb_of_memoryless_sequence(&[id.clone()]).unwrap();
        assert_eq!(one.space.n_steps(), 1);

        let u = |x: f64, i: &str, o: &str| {
            let m = DMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), Complex::from_polar(1.0, x)]);
            choi_of_unitary(&m, &lab(i, 2), &lab(o, 2)).unwrap()
        };
        let two = comb_of_memoryless_sequence(&[u(0.3, "i1", "o1"), u(1.1, "i2", "o2")]).unwrap();
        assert_eq!(two.space.n_steps(), 2);
        assert_eq!(two.witness_chain.as_ref().unwrap().len(), 2);

        let not_tp = LabeledOperator::from_real(
            vec![lab("o", 2), lab("i", 2)],
            &DMatrix::from_fn(4, 4, |a, b| if a == 0 && b == 0 { 1.0 } else { 0.0 }),
        )
        .unwrap();
        assert!(matches!(
            comb_of_memoryless_sequence(&[not_tp]),
            Err(Error::NormalizationViolation { level: 1, .. })
        ));
    }

    #[test]
    fn validate_comb_reports_level() {
        let id = choi_of_channel(&identity_kraus(2), &lab("i", 2), &lab("o", 2), 1e-12).unwrap();
        let comb = QuantumComb::new(CombSpace::single(lab("i", 2), lab("o", 2)).unwrap(), &id).unwrap();
        let chain = validate_comb(&comb, 1e-10).unwrap();
        assert_eq!(chain.len(), 1);
        assert_abs_diff_eq!(chain[0].trace_re(), 1.0);

        let p00 = LabeledOperator::from_real(
            vec![lab("o", 2), lab("i", 2)],
            &DMatrix::from_fn(4, 4, |a, b| if a == 0 && b == 0 { 1.0 } else { 0.0 }),
        )
        .unwrap();
        let bad = QuantumComb::new(comb.space.clone(), &p00).unwrap();
        match validate_comb(&bad, 1e-8) {
            Err(Error::NormalizationViolation { level, residual }) => {
                assert_eq!(level, 1);
                assert_abs_diff_eq!(residual, 0.5, epsilon = 1e-14);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn validate_comb_accepts_permuted_input() {
        let id = choi_of_channel(&identity_kraus(3), &lab("i", 3), &lab("o", 3), 1e-12).unwrap();
        let swapped = crate::operator::permute_systems(&id, &["i", "o"]).unwrap();
        let comb = QuantumComb::validated(CombSpace::single(lab("i", 3), lab("o", 3)).unwrap(), &swapped, 1e-10);
        assert!(comb.is_ok());
    }

    #[test]
    fn tester_validation() {
        let space = CombSpace::single(lab("p", 1), lab("q", 2)).unwrap();
        let povm = vec![
            ("0".to_string(), embed_identity(&state("q", &[c(1.0), c(0.0)]), &lab("p", 1), 1).unwrap()),
            ("1".to_string(), embed_identity(&state("q", &[c(0.0), c(1.0)]), &lab("p", 1), 1).unwrap()),
        ];
        let t = Tester::new(space.clone(), povm).unwrap();
        let chain = validate_tester(&t, 1e-10).unwrap();
        assert_abs_diff_eq!(chain[0].trace_re(), 1.0);

        let id = LabeledOperator::identity(space.labels()).unwrap();
        let t2 = Tester::new(space, vec![("a".into(), id.clone()), ("b".into(), id)]).unwrap();
        assert!(matches!(
            validate_tester(&t2, 1e-8),
            Err(Error::NormalizationViolation { level: 0, .. })
        ));
    }

    #[test]
    fn born_rule_examples() {
        let zero = comb_of_state(&state("q", &[c(1.0), c(0.0)])).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let plus = comb_of_state(&state("q", &[c(s), c(s)])).unwrap();
        let t0 = embed_identity(&state("q", &[c(1.0), c(0.0)]), &lab("q.in", 1), 1).unwrap();
        assert_abs_diff_eq!(born_probability(&t0, &zero).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(born_probability(&t0, &plus).unwrap(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn tensor_of_state_combs_and_povms() {
        let a = comb_of_state(&state("a", &[c(1.0), c(0.0)])).unwrap();
        let b = comb_of_state(&state("b", &[c(0.6), c(0.8)])).unwrap();
        let ab = tensor_combs(&a, &b).unwrap();
        assert_eq!(ab.space.n_steps(), 2);
        assert_eq!(validate_comb(&ab, 1e-10).unwrap().len(), 2);

        let povm = |id: &str| {
            let sp = CombSpace::single(lab(&format!("{id}.in"), 1), lab(id, 2)).unwrap();
            let outs = (0..2)
                .map(|k| {
                    let mut v = vec![c(0.0); 2];
                    v[k] = c(1.0);
                    (k.to_string(), embed_identity(&state(id, &v), &lab(&format!("{id}.in"), 1), 1).unwrap())
                })
                .collect();
            Tester::new(sp, outs).unwrap()
        };
        let t = tensor_testers(&povm("a"), &povm("b")).unwrap();
        assert_eq!(t.outcome_ids(), vec!["0|0", "0|1", "1|0", "1|1"]);
        assert!(validate_tester(&t, 1e-10).is_ok());
        let p = born_probability(t.outcome("0|1").unwrap(), &ab).unwrap();
        assert_abs_diff_eq!(p, 0.64, epsilon = 1e-14);
    }
}
