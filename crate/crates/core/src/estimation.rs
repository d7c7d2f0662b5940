//! Bayesian estimation problems over finite parameter sets.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::network::{
    born_trace, joint_id, tensor_combs, validate_comb, CombSpace, QuantumComb, Tester, DEFAULT_NORM_TOL,
};
use crate::operator::{trace_product_re, LabeledOperator};
use crate::scalar::Real;

/// Finite estimation task: prior, processes and payoff `g(x̂, x)`.
///
/// The stored payoff is the one the optimizer sees and must be nonnegative.
/// `payoff_shift` records a constant `c` added to the original payoff; all
/// reported payoffs subtract it again.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimationProblem<T: Real> {
    space: CombSpace,
    labels: Vec<String>,
    prior: Vec<T>,
    combs: Vec<QuantumComb<T>>,
    payoff: DMatrix<T>,
    payoff_shift: T,
}

/// `g + c` entrywise.
pub fn shift_payoff<T: Real>(payoff: &DMatrix<T>, c: T) -> DMatrix<T> {
    payoff.map(|g| g + c)
}

/// Smallest shift making `payoff` nonnegative (zero if it already is).
pub fn required_shift<T: Real>(payoff: &DMatrix<T>) -> T {
    let min = payoff.iter().fold(T::zero(), |m, &g| m.min(g));
    -min
}

/// `g(x̂, x) = δ_{x̂ x}`.
pub fn delta_payoff<T: Real>(n: usize) -> DMatrix<T> {
    DMatrix::identity(n, n)
}

pub fn uniform_prior<T: Real>(n: usize) -> Vec<T> {
    vec![T::one() / T::lit(n as f64); n]
}

impl<T: Real> EstimationProblem<T> {
    /// Builds and validates a problem. `payoff` has rows `x̂` and columns `x`,
    /// both in the order of `labels`.
    pub fn new(
        space: CombSpace,
        labels: Vec<String>,
        prior: Vec<T>,
        combs: Vec<LabeledOperator<T>>,
        payoff: DMatrix<T>,
    ) -> Result<Self> {
        Self::with_shift(space, labels, prior, combs, payoff, T::zero())
    }

    /// Like [`new`](Self::new) with a payoff that already includes the shift `c`.
    pub fn with_shift(
        space: CombSpace,
        labels: Vec<String>,
        prior: Vec<T>,
        combs: Vec<LabeledOperator<T>>,
        payoff: DMatrix<T>,
        payoff_shift: T,
    ) -> Result<Self> {
        let tol = T::lit(DEFAULT_NORM_TOL);
        let combs = combs
            .iter()
            .map(|op| QuantumComb::validated(space.clone(), op, tol))
            .collect::<Result<Vec<_>>>()?;
        Self::from_combs(space, labels, prior, combs, payoff, payoff_shift)
    }

    /// Builds from combs that are already wrapped; they are revalidated if
    /// they carry no witness chain.
    pub fn from_combs(
        space: CombSpace,
        labels: Vec<String>,
        prior: Vec<T>,
        combs: Vec<QuantumComb<T>>,
        payoff: DMatrix<T>,
        payoff_shift: T,
    ) -> Result<Self> {
        let n = labels.len();
        if n == 0 {
            return Err(Error::InvalidProblem("empty parameter set".into()));
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(Error::InvalidProblem(format!("duplicate parameter label `{l}`")));
            }
        }
        if prior.len() != n || combs.len() != n {
            return Err(Error::InvalidProblem(format!(
                "{n} labels but {} prior weights and {} combs",
                prior.len(),
                combs.len()
            )));
        }
        if payoff.nrows() != n || payoff.ncols() != n {
            return Err(Error::InvalidProblem(format!(
                "payoff is {}x{}, expected {n}x{n}",
                payoff.nrows(),
                payoff.ncols()
            )));
        }
        if prior.iter().any(|&p| !(p >= T::zero())) {
            return Err(Error::InvalidProblem("prior has a negative or NaN weight".into()));
        }
        let total = prior.iter().fold(T::zero(), |a, &p| a + p);
        if (total - T::one()).abs() > T::lit(1e-12).max(T::default_epsilon() * T::lit(16.0)) {
            return Err(Error::InvalidProblem(format!("prior sums to {}", total.to_f64_lossy())));
        }
        for r in 0..n {
            for c in 0..n {
                let g = payoff[(r, c)];
                if !(g >= T::zero()) {
                    return Err(Error::NegativePayoff { row: r, col: c, value: g.to_f64_lossy() });
                }
            }
        }
        let tol = T::lit(DEFAULT_NORM_TOL);
        let mut checked = Vec::with_capacity(n);
        for c in combs {
            if c.space != space {
                return Err(Error::InvalidProblem("combs do not share the problem's comb space".into()));
            }
            let mut c = c;
            if c.witness_chain.is_none() {
                c.witness_chain = Some(validate_comb(&c, tol)?);
            }
            checked.push(c);
        }
        Ok(Self { space, labels, prior, combs: checked, payoff, payoff_shift })
    }

    /// Same processes and prior with another (nonnegative, unshifted) payoff.
    pub fn with_payoff(&self, payoff: DMatrix<T>) -> Result<Self> {
        Self::from_combs(self.space.clone(), self.labels.clone(), self.prior.clone(), self.combs.clone(), payoff, T::zero())
    }

    /// Same processes and prior with `payoff + c`, recording `c`.
    pub fn with_shifted_payoff(&self, payoff: &DMatrix<T>, c: T) -> Result<Self> {
        Self::from_combs(
            self.space.clone(),
            self.labels.clone(),
            self.prior.clone(),
            self.combs.clone(),
            shift_payoff(payoff, c),
            c,
        )
    }

    pub fn space(&self) -> &CombSpace {
        &self.space
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn prior(&self) -> &[T] {
        &self.prior
    }

    pub fn combs(&self) -> &[QuantumComb<T>] {
        &self.combs
    }

    pub fn payoff(&self) -> &DMatrix<T> {
        &self.payoff
    }

    pub fn payoff_shift(&self) -> T {
        self.payoff_shift
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn g_max(&self) -> T {
        self.payoff.iter().fold(T::zero(), |m, &g| m.max(g))
    }

    /// `G_x̂ = Σ_x π(x) g(x̂,x) R_x`, indexed like `labels`.
    pub fn payoff_operators(&self) -> Vec<LabeledOperator<T>> {
        (0..self.len()).map(|r| self.weighted_sum(|c| self.prior[c] * self.payoff[(r, c)])).collect()
    }

    /// Payoff operators of the original (unshifted) payoff. These need not be
    /// positive.
    pub fn unshifted_payoff_operators(&self) -> Vec<LabeledOperator<T>> {
        let c = self.payoff_shift;
        (0..self.len())
            .map(|r| self.weighted_sum(|x| self.prior[x] * (self.payoff[(r, x)] - c)))
            .collect()
    }

    fn weighted_sum(&self, w: impl Fn(usize) -> T) -> LabeledOperator<T> {
        let first = &self.combs[0].op;
        let mut data = first.data().map(|_| crate::scalar::creal(T::zero()));
        for (x, comb) in self.combs.iter().enumerate() {
            let wx = w(x);
            if wx != T::zero() {
                data += comb.op.data().map(|z| z * wx);
            }
        }
        LabeledOperator::from_parts_unchecked(first.factors().to_vec(), data)
    }

    fn outcome_order(&self, t: &Tester<T>) -> Result<Vec<usize>> {
        if t.outcomes.len() != self.len() {
            return Err(Error::OutcomeMismatch(format!(
                "tester has {} outcomes, problem has {} labels",
                t.outcomes.len(),
                self.len()
            )));
        }
        self.labels
            .iter()
            .map(|l| {
                t.outcomes
                    .iter()
                    .position(|(id, _)| id == l)
                    .ok_or_else(|| Error::OutcomeMismatch(format!("no tester outcome for `{l}`")))
            })
            .collect()
    }

    /// `Σ_x̂ Tr[T_x̂ G_x̂]` minus the recorded shift.
    pub fn expected_payoff(&self, t: &Tester<T>) -> Result<T> {
        let order = self.outcome_order(t)?;
        let labels = self.space.labels();
        let g = self.payoff_operators();
        let mut acc = T::zero();
        for (r, &k) in order.iter().enumerate() {
            let tk = t.outcomes[k].1.aligned_to(&labels)?;
            acc += trace_product_re(tk.data(), g[r].data());
        }
        Ok(acc - self.payoff_shift)
    }

    /// `Σ_x π(x) Σ_x̂ g(x̂,x) Tr[T_x̂ R_x]` minus the shift, via the Born rule.
    pub fn expected_payoff_born(&self, t: &Tester<T>) -> Result<T> {
        let order = self.outcome_order(t)?;
        let mut acc = T::zero();
        for (x, comb) in self.combs.iter().enumerate() {
            for (r, &k) in order.iter().enumerate() {
                let p = born_trace(&t.outcomes[k].1, &comb.op)?;
                acc += self.prior[x] * self.payoff[(r, x)] * p;
            }
        }
        Ok(acc - self.payoff_shift)
    }
}

/// Joint problem of independent factor problems: Cartesian parameter set,
/// product prior, tensor-product combs and product payoff. Labels are joined
/// with `|` in factor order.
pub fn joint_problem<T: Real>(ps: &[EstimationProblem<T>]) -> Result<EstimationProblem<T>> {
    let first = ps.first().ok_or_else(|| Error::InvalidProblem("no factor problems".into()))?;
    if let Some(p) = ps.iter().find(|p| p.payoff_shift != T::zero()) {
        return Err(Error::InvalidProblem(format!(
            "factor payoff carries a shift of {}; a product of shifted payoffs is not a shifted product",
            p.payoff_shift.to_f64_lossy()
        )));
    }
    let mut acc = first.clone();
    for p in &ps[1..] {
        let space = acc.space.concat(&p.space)?;
        let mut labels = Vec::with_capacity(acc.len() * p.len());
        let mut prior = Vec::with_capacity(acc.len() * p.len());
        let mut combs = Vec::with_capacity(acc.len() * p.len());
        for (i, la) in acc.labels.iter().enumerate() {
            for (j, lb) in p.labels.iter().enumerate() {
                labels.push(joint_id(&[la, lb]));
                prior.push(acc.prior[i] * p.prior[j]);
                let mut c = tensor_combs(&acc.combs[i], &p.combs[j])?;
                c.witness_chain = Some(joint_chain(&acc.combs[i], &p.combs[j])?);
                combs.push(c);
            }
        }
        let payoff = acc.payoff.kronecker(&p.payoff);
        acc = EstimationProblem::from_combs(space, labels, prior, combs, payoff, T::zero())?;
    }
    Ok(acc)
}

// Chain of a⊗b: R_a's chain, then R_a ⊗ (chain of b).
fn joint_chain<T: Real>(a: &QuantumComb<T>, b: &QuantumComb<T>) -> Result<Vec<LabeledOperator<T>>> {
    let tol = T::lit(DEFAULT_NORM_TOL);
    let ca = match &a.witness_chain {
        Some(c) => c.clone(),
        None => validate_comb(a, tol)?,
    };
    let cb = match &b.witness_chain {
        Some(c) => c.clone(),
        None => validate_comb(b, tol)?,
    };
    let mut chain = ca;
    for r in cb {
        chain.push(crate::operator::tensor(&a.op, &r)?);
    }
    Ok(chain)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{comb_of_state, Step};
    use crate::operator::{embed_identity, SystemLabel};
    use crate::scalar::cplx;
    use approx::assert_abs_diff_eq;

    fn state(id: &str, v: &[f64]) -> LabeledOperator<f64> {
        let v: Vec<_> = v.iter().map(|&x| cplx(x, 0.0)).collect();
        LabeledOperator::projector(vec![SystemLabel::new(id, v.len())], &v).unwrap()
    }

    fn state_problem(id: &str, states: &[LabeledOperator<f64>], payoff: DMatrix<f64>) -> EstimationProblem<f64> {
        let combs: Vec<_> = states.iter().map(|s| comb_of_state(s).unwrap()).collect();
        let labels = (0..states.len()).map(|i| i.to_string()).collect();
        let _ = id;
        EstimationProblem::from_combs(combs[0].space.clone(), labels, uniform_prior(states.len()), combs, payoff, 0.0)
            .unwrap()
    }

    fn povm_tester(id: &str, effects: &[LabeledOperator<f64>], names: &[&str]) -> Tester<f64> {
        let inp = SystemLabel::new(format!("{id}.in"), 1);
        let space = CombSpace::new(vec![Step::new(inp.clone(), effects[0].factors()[0].clone())]).unwrap();
        let outs = effects
            .iter()
            .zip(names)
            .map(|(e, n)| (n.to_string(), embed_identity(e, &inp, 1).unwrap()))
            .collect();
        Tester::new(space, outs).unwrap()
    }

    #[test]
    fn payoff_operators_of_orthogonal_states() {
        let p = state_problem("q", &[state("q", &[1.0, 0.0]), state("q", &[0.0, 1.0])], delta_payoff(2));
        let g = p.payoff_operators();
        assert_abs_diff_eq!(g[0].data()[(0, 0)].re, 0.5);
        assert_abs_diff_eq!(g[0].data()[(1, 1)].re, 0.0);
        assert_abs_diff_eq!(g[1].data()[(1, 1)].re, 0.5);

        let ones = p.with_payoff(DMatrix::from_element(2, 2, 1.0)).unwrap();
        let g = ones.payoff_operators();
        assert_eq!(g[0], g[1]);
        assert_abs_diff_eq!(g[0].data()[(0, 0)].re, 0.5);
    }

    #[test]
    fn expected_payoff_examples() {
        let p = state_problem("q", &[state("q", &[1.0, 0.0]), state("q", &[0.0, 1.0])], delta_payoff(2));
        let t = povm_tester("q", &[state("q", &[1.0, 0.0]), state("q", &[0.0, 1.0])], &["0", "1"]);
        assert_abs_diff_eq!(p.expected_payoff(&t).unwrap(), 1.0, epsilon = 1e-14);

        let half = LabeledOperator::identity(vec![SystemLabel::new("q", 2)]).unwrap().scale(0.5);
        let guess = povm_tester("q", &[half.clone(), half], &["1", "0"]);
        assert_abs_diff_eq!(p.expected_payoff(&guess).unwrap(), 0.5, epsilon = 1e-14);

        let s = std::f64::consts::FRAC_1_SQRT_2;
        let hp = state_problem("q", &[state("q", &[1.0, 0.0]), state("q", &[s, s])], delta_payoff(2));
        // Helstrom measurement: eigenprojectors of ρ0 − ρ1.
        let c = (std::f64::consts::PI / 8.0).cos();
        let sn = (std::f64::consts::PI / 8.0).sin();
        let t = povm_tester("q", &[state("q", &[c, -sn]), state("q", &[sn, c])], &["0", "1"]);
        assert_abs_diff_eq!(hp.expected_payoff(&t).unwrap(), 0.5 * (1.0 + s), epsilon = 1e-12);
        assert_abs_diff_eq!(hp.expected_payoff_born(&t).unwrap(), 0.5 * (1.0 + s), epsilon = 1e-12);

        let wrong = povm_tester("q", &[state("q", &[1.0, 0.0]), state("q", &[0.0, 1.0])], &["a", "b"]);
        assert!(matches!(hp.expected_payoff(&wrong), Err(Error::OutcomeMismatch(_))));
    }

    #[test]
    fn rejects_bad_problems() {
        let a = comb_of_state(&state("q", &[1.0, 0.0])).unwrap();
        let sp = a.space.clone();
        let labels = vec!["0".to_string()];
        let neg = DMatrix::from_element(1, 1, -0.5);
        assert!(matches!(
            EstimationProblem::from_combs(sp.clone(), labels.clone(), vec![1.0], vec![a.clone()], neg.clone(), 0.0),
            Err(Error::NegativePayoff { .. })
        ));
        assert!(matches!(
            EstimationProblem::from_combs(sp.clone(), labels.clone(), vec![0.9], vec![a.clone()], DMatrix::from_element(1, 1, 1.0), 0.0),
            Err(Error::InvalidProblem(_))
        ));
        let shifted = EstimationProblem::from_combs(sp, labels, vec![1.0], vec![a], shift_payoff(&neg, 0.5), 0.5).unwrap();
        assert_eq!(required_shift(&neg), 0.5);
        assert_abs_diff_eq!(shifted.payoff()[(0, 0)], 0.0);
    }

    #[test]
    fn joint_problem_factorizes() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let a = state_problem("a", &[state("a", &[1.0, 0.0]), state("a", &[s, s])], delta_payoff(2));
        let b_states = [state("b", &[1.0, 0.0]), state("b", &[0.6, 0.8])];
        let b = state_problem("b", &b_states, DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.3, 0.9]));
        let j = joint_problem(&[a.clone(), b.clone()]).unwrap();
        assert_eq!(j.labels(), &["0|0", "0|1", "1|0", "1|1"]);
        let ga = a.payoff_operators();
        let gb = b.payoff_operators();
        let gj = j.payoff_operators();
        for (i, k) in [(0, 0), (0, 1), (1, 0), (1, 1)].iter().enumerate() {
            let expect = crate::operator::tensor(&ga[k.0], &gb[k.1]).unwrap();
            assert_abs_diff_eq!((gj[i].data() - expect.data()).norm(), 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn joint_of_trivial_problems() {
        let a = state_problem("a", &[state("a", &[1.0, 0.0])], DMatrix::from_element(1, 1, 1.0));
        let b = state_problem("b", &[state("b", &[0.0, 1.0])], DMatrix::from_element(1, 1, 1.0));
        let j = joint_problem(&[a, b]).unwrap();
        assert_eq!(j.len(), 1);
        assert_eq!(j.space().n_steps(), 2);
    }
}
