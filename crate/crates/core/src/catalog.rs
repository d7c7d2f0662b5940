//! Small standard instances shared by the command line and the tests.

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::covariant::{cyclic_table, FiniteGroupAction};
use crate::error::Result;
use crate::estimation::{delta_payoff, uniform_prior, EstimationProblem};
use crate::network::comb_of_state;
use crate::operator::{LabeledOperator, SystemLabel};
use crate::scalar::{creal, Complex, Real};

/// Pure-state discrimination problem on one factor with δ payoff.
pub fn state_problem<T: Real>(label: &SystemLabel, kets: &[Vec<Complex<T>>], prior: Vec<T>) -> Result<EstimationProblem<T>> {
    let combs = kets
        .iter()
        .map(|k| comb_of_state(&LabeledOperator::projector(vec![label.clone()], k)?))
        .collect::<Result<Vec<_>>>()?;
    let n = kets.len();
    EstimationProblem::from_combs(
        combs[0].space.clone(),
        (0..n).map(|i| i.to_string()).collect(),
        prior,
        combs,
        delta_payoff(n),
        T::zero(),
    )
}

/// `|0⟩` and `|+⟩`.
pub fn helstrom_kets<T: Real>() -> Vec<Vec<Complex<T>>> {
    let s = T::lit(std::f64::consts::FRAC_1_SQRT_2);
    vec![vec![creal(T::one()), creal(T::zero())], vec![creal(s), creal(s)]]
}

/// `{|0⟩, |+⟩}` with uniform prior and δ payoff on the factor `label`.
pub fn helstrom_problem<T: Real>(label: &str) -> Result<EstimationProblem<T>> {
    state_problem(&SystemLabel::new(label, 2), &helstrom_kets(), uniform_prior(2))
}

/// `½(1 + √(1 − 4π₀π₁|⟨ψ₀|ψ₁⟩|²))`.
pub fn helstrom_pure<T: Real>(overlap_sq: T, priors: [T; 2]) -> T {
    let four = T::lit(4.0);
    T::lit(0.5) * (T::one() + (T::one() - four * priors[0] * priors[1] * overlap_sq).max(T::zero()).sqrt())
}

/// Trine: real qubit kets at angles `πk/3`, `2πk/3` apart on the Bloch circle.
pub fn trine_kets<T: Real>() -> Vec<Vec<Complex<T>>> {
    (0..3)
        .map(|k| {
            let a = T::pi() * T::lit(k as f64) / T::lit(3.0);
            vec![creal(a.cos()), creal(a.sin())]
        })
        .collect()
}

/// Density matrices of `kets` on `label`.
pub fn density_matrices<T: Real>(label: &SystemLabel, kets: &[Vec<Complex<T>>]) -> Result<Vec<LabeledOperator<T>>> {
    kets.iter().map(|k| LabeledOperator::projector(vec![label.clone()], k)).collect()
}

/// Two independent copies of the Helstrom problem on factors `a` and `b`.
pub fn twin_helstrom<T: Real>() -> Result<Vec<EstimationProblem<T>>> {
    Ok(vec![helstrom_problem("a")?, helstrom_problem("b")?])
}

/// `Z_2` acting by the bit flip `X` on the qubit factor `label`.
pub fn bit_flip_action<T: Real>(label: &str) -> Result<FiniteGroupAction<T>> {
    let (o, z) = (creal(T::one()), creal(T::zero()));
    let x = DMatrix::from_row_slice(2, 2, &[z, o, o, z]);
    let mut reps = BTreeMap::new();
    reps.insert(label.to_string(), vec![DMatrix::identity(2, 2), x]);
    FiniteGroupAction::new(vec!["e".into(), "x".into()], cyclic_table(2), reps)
}
