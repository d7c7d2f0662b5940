//! Multiplicativity of the optimal payoff over independent problems, and
//! the ways it breaks once independence is dropped.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::covariant::{
    input_population_overlap, two_phase_correlated, two_phase_payoff_operator, two_phase_problem,
    two_phase_product_tester,
};
use crate::error::{Error, Result};
use crate::estimation::{joint_problem, EstimationProblem};
use crate::network::{tensor_combs, tensor_testers, QuantumComb};
use crate::operator::{hermitian_eigen_matrix, LabeledOperator, SystemLabel};
use crate::scalar::{cplx, creal, Complex, Real};
use crate::sdp::{certify_dual, solve, CertificateReport, SolveOptions};

/// `(λ, R)` with `λR ⪰ G_x̂` for every outcome.
#[derive(Debug, Clone)]
pub struct Certificate<T: Real> {
    pub lambda: T,
    pub comb: QuantumComb<T>,
}

#[derive(Debug, Clone)]
pub struct ProductRuleReport<T: Real> {
    pub gamma_joint: T,
    /// Dual objective of the joint solve (shift removed), an upper bound on
    /// the joint optimum.
    pub gamma_joint_upper: T,
    pub gamma_factors: Vec<T>,
    pub product: T,
    /// `|γ_joint − Π γ_k| / (1 + |Π γ_k|)`.
    pub relative_deviation: T,
    /// Whether `(Π λ_k, ⊗ R_k)` certifies the joint problem.
    pub certified: bool,
    pub factor_certificates: Vec<Certificate<T>>,
    pub joint_certificate: Certificate<T>,
    pub assembled: CertificateReport<T>,
    /// Joint payoff of the product of the factor-optimal testers.
    pub product_tester_value: T,
}

/// Checks that `joint` is the independent combination of `ps`: product prior
/// and Kronecker payoff, in the factor order.
pub fn check_product_structure<T: Real>(ps: &[EstimationProblem<T>], joint: &EstimationProblem<T>) -> Result<()> {
    if let Some(p) = ps.iter().find(|p| p.payoff_shift() != T::zero()) {
        return Err(Error::NonProductPayoff(format!(
            "factor payoff carries a shift of {}",
            p.payoff_shift().to_f64_lossy()
        )));
    }
    if joint.payoff_shift() != T::zero() {
        return Err(Error::NonProductPayoff("joint payoff carries a shift".into()));
    }
    let mut payoff = DMatrix::from_element(1, 1, T::one());
    let mut prior = vec![T::one()];
    for p in ps {
        payoff = payoff.kronecker(p.payoff());
        prior = prior.iter().flat_map(|&a| p.prior().iter().map(move |&b| a * b)).collect();
    }
    if payoff.shape() != joint.payoff().shape() {
        return Err(Error::NonProductPayoff(format!(
            "joint payoff is {:?}, factors give {:?}",
            joint.payoff().shape(),
            payoff.shape()
        )));
    }
    let tol = T::lit(1e-12);
    for r in 0..payoff.nrows() {
        for c in 0..payoff.ncols() {
            let (a, b) = (payoff[(r, c)], joint.payoff()[(r, c)]);
            if (a - b).abs() > tol * (T::one() + a.abs()) {
                return Err(Error::NonProductPayoff(format!(
                    "g({}, {}) = {} but the product of factor payoffs is {}",
                    joint.labels()[r],
                    joint.labels()[c],
                    b.to_f64_lossy(),
                    a.to_f64_lossy()
                )));
            }
        }
    }
    if prior.iter().zip(joint.prior()).any(|(&a, &b)| (a - b).abs() > tol) {
        return Err(Error::NonProductPayoff("joint prior is not the product of factor priors".into()));
    }
    Ok(())
}

/// Solves each factor and their independent combination, compares
/// `γ_joint` with `Π γ_k` and certifies the joint bound with `(Π λ_k, ⊗ R_k)`.
pub fn verify_product_rule<T: Real>(ps: &[EstimationProblem<T>], opts: &SolveOptions) -> Result<ProductRuleReport<T>> {
    if let Some(p) = ps.iter().find(|p| p.payoff_shift() != T::zero()) {
        return Err(Error::NonProductPayoff(format!(
            "factor payoff carries a shift of {}",
            p.payoff_shift().to_f64_lossy()
        )));
    }
    let joint = joint_problem(ps)?;
    verify_product_rule_with_joint(ps, &joint, opts)
}

/// As [`verify_product_rule`] for a caller-supplied joint problem, which must
/// have product structure.
pub fn verify_product_rule_with_joint<T: Real>(
    ps: &[EstimationProblem<T>],
    joint: &EstimationProblem<T>,
    opts: &SolveOptions,
) -> Result<ProductRuleReport<T>> {
    check_product_structure(ps, joint)?;
    let factors = ps.par_iter().map(|p| solve(p, opts)).collect::<Result<Vec<_>>>()?;
    let js = solve(joint, opts)?;

    let gamma_factors: Vec<T> = factors.iter().map(|s| s.gamma()).collect();
    let product = gamma_factors.iter().fold(T::one(), |a, &g| a * g);
    let gamma_joint = js.gamma();

    let mut lambda = T::one();
    let mut comb: Option<QuantumComb<T>> = None;
    let mut tester = None;
    for s in &factors {
        lambda *= s.lambda;
        comb = Some(match comb {
            None => s.comb_certificate.clone(),
            Some(c) => tensor_combs(&c, &s.comb_certificate)?,
        });
        tester = Some(match tester {
            None => s.tester.clone(),
            Some(t) => tensor_testers(&t, &s.tester)?,
        });
    }
    let comb = comb.ok_or_else(|| Error::InvalidProblem("no factor problems".into()))?;
    let tester = tester.expect("non-empty factor list");
    let assembled = certify_dual(lambda, &comb, joint, T::lit(opts.cert_tol.max(10.0 * opts.tol)))?;
    let product_tester_value = joint.expected_payoff(&tester)?;

    Ok(ProductRuleReport {
        gamma_joint,
        gamma_joint_upper: js.gamma_dual - js.payoff_shift,
        relative_deviation: (gamma_joint - product).abs() / (T::one() + product.abs()),
        gamma_factors,
        product,
        certified: assembled.passed,
        factor_certificates: factors
            .iter()
            .map(|s| Certificate { lambda: s.lambda, comb: s.comb_certificate.clone() })
            .collect(),
        joint_certificate: Certificate { lambda: js.lambda, comb: js.comb_certificate.clone() },
        assembled,
        product_tester_value,
    })
}

/// Helstrom success probabilities for `K` perfectly correlated copies.
#[derive(Debug, Clone, PartialEq)]
pub struct MulticopyReport<T: Real> {
    /// `p(k)` for `k = 1…K`.
    pub p_succ: Vec<T>,
    /// `p(1)^K`, the value multiplicativity would predict.
    pub product_prediction: T,
    /// `p(K) > p(1)^K`.
    pub exceeds_product: bool,
}

/// Largest accepted total dimension `d^K`.
pub const MULTICOPY_CAP: usize = 4096;

/// Minimum-error discrimination of `ψ_0^⊗k` against `ψ_1^⊗k`:
/// `p = ½(1 + ‖π_0 ρ_0 − π_1 ρ_1‖_1)`.
pub fn counterexample_multicopy<T: Real>(
    psi0: &[Complex<T>],
    psi1: &[Complex<T>],
    priors: [T; 2],
    k: usize,
) -> Result<MulticopyReport<T>> {
    let d = psi0.len();
    if d == 0 || psi1.len() != d {
        return Err(Error::ShapeMismatch(format!("state lengths {} and {}", d, psi1.len())));
    }
    if k == 0 {
        return Err(Error::BadParameter("K must be at least 1".into()));
    }
    if priors.iter().any(|&p| p < T::zero()) || (priors[0] + priors[1] - T::one()).abs() > T::lit(1e-12) {
        return Err(Error::InvalidProblem("priors must be nonnegative and sum to 1".into()));
    }
    let total = (0..k).try_fold(1usize, |acc, _| acc.checked_mul(d).filter(|&v| v <= MULTICOPY_CAP));
    let Some(_) = total else {
        return Err(Error::DimensionCap { dim: d.saturating_pow(k as u32), cap: MULTICOPY_CAP });
    };
    let normalize = |v: &[Complex<T>]| -> Result<DVector<Complex<T>>> {
        let v = DVector::from_column_slice(v);
        let n = v.norm();
        if !(n > T::zero()) {
            return Err(Error::NotAState("zero vector".into()));
        }
        Ok(v.unscale(n))
    };
    let (v0, v1) = (normalize(psi0)?, normalize(psi1)?);
    let (mut a, mut b) = (v0.clone(), v1.clone());
    let mut p_succ = Vec::with_capacity(k);
    for j in 1..=k {
        if j > 1 {
            a = a.kronecker(&v0);
            b = b.kronecker(&v1);
        }
        let m = (&a * a.adjoint()).map(|z| z * priors[0]) - (&b * b.adjoint()).map(|z| z * priors[1]);
        let trace_norm = hermitian_eigen_matrix(&m).values.iter().fold(T::zero(), |s, &l| s + l.abs());
        p_succ.push(T::lit(0.5) * (T::one() + trace_norm));
    }
    let product_prediction = p_succ[0].powi(k as i32);
    let tol = T::lit(1e-12);
    Ok(MulticopyReport { exceeds_product: p_succ[k - 1] > product_prediction + tol, product_prediction, p_succ })
}

/// Joint optimum of the correlated two-phase payoff against the best
/// product strategy.
#[derive(Debug, Clone)]
pub struct CorrelatedPayoffReport<T: Real> {
    pub p: T,
    /// SDP optimum with the shift removed.
    pub gamma_joint: T,
    /// `max{p, 1−p}/2`.
    pub gamma_predicted: T,
    /// Largest `⟨e⊗f|G_p|e⊗f⟩` over a grid of product inputs.
    pub product_bound: T,
    /// Payoff of the `|+⟩|+⟩` product tester on the discretized problem.
    pub product_tester_value: T,
    /// Input overlap of the SDP optimizer with the predicted optimal state;
    /// `None` at `p = 1/2`, where the optimal input is not unique.
    pub optimizer_overlap: Option<T>,
}

pub fn counterexample_correlated_payoff<T: Real>(
    p: T,
    d_grid: usize,
    opts: &SolveOptions,
) -> Result<CorrelatedPayoffReport<T>> {
    let problem = two_phase_problem(p, d_grid)?;
    let cf = two_phase_correlated(p.to_f64_lossy())?;
    let sol = solve(&problem, opts)?;
    let optimizer_overlap = if cf.degenerate {
        None
    } else {
        let target: Vec<T> = cf.state.iter().map(|&v| T::lit(v)).collect();
        Some(input_population_overlap(&sol.tester, &target)?)
    };
    let h = T::lit(std::f64::consts::FRAC_1_SQRT_2);
    let plus = [creal(h), creal(h)];
    let product_tester_value = problem.expected_payoff(&two_phase_product_tester(&plus, &plus, d_grid)?)?;
    Ok(CorrelatedPayoffReport {
        p,
        gamma_joint: sol.gamma(),
        gamma_predicted: T::lit(cf.gamma),
        product_bound: product_state_bound(&two_phase_payoff_operator(p)?, 24),
        product_tester_value,
        optimizer_overlap,
    })
}

/// `max ⟨e⊗f|G|e⊗f⟩` over qubit pairs, on a grid of `steps` polar angles
/// and `2·steps` relative phases per qubit.
pub fn product_state_bound<T: Real>(g: &LabeledOperator<T>, steps: usize) -> T {
    let qubit = |theta: T, phi: T| {
        let (c, s) = (theta.cos(), theta.sin());
        DVector::from_vec(vec![creal(c), cplx(s * phi.cos(), s * phi.sin())])
    };
    let half_pi = T::frac_pi_2();
    let angles: Vec<T> = (0..=steps).map(|i| half_pi * T::lit(i as f64) / T::lit(steps as f64)).collect();
    let phases: Vec<T> = (0..2 * steps).map(|i| T::two_pi() * T::lit(i as f64) / T::lit(2.0 * steps as f64)).collect();
    let states: Vec<_> = angles.iter().flat_map(|&t| phases.iter().map(move |&f| qubit(t, f))).collect();
    let m = g.data();
    states
        .par_iter()
        .map(|e| {
            states.iter().fold(T::lit(f64::MIN), |best, f| {
                let v = e.kronecker(f);
                best.max((v.adjoint() * m * &v)[(0, 0)].re)
            })
        })
        .reduce(|| T::lit(f64::MIN), |a, b| a.max(b))
}

/// Labels for the product form of `two_phase_payoff_operator`.
pub fn qubit_pair_labels() -> [SystemLabel; 2] {
    [SystemLabel::new("a", 2), SystemLabel::new("b", 2)]
}
