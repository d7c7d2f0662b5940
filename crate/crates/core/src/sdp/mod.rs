//! Optimal testers and comb certificates by semidefinite programming.

pub mod ipm;
pub mod standard;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::estimation::{delta_payoff, EstimationProblem};
use crate::network::{comb_of_state, validate_comb, validate_tester, CombSpace, QuantumComb, Tester};
use crate::operator::{min_eig, partial_trace, LabeledOperator};
use crate::scalar::Real;

pub use ipm::IterationRecord;
pub use standard::{
    build_dual, build_primal, extract_certificate, slater_point, tighten, uniform_comb, ConstraintMap, DualBlocks,
    DualProgram, DualState, LevelBasis, PrimalPoint, StandardSdp,
};

/// Solver settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Relative duality gap and feasibility tolerance.
    pub tol: f64,
    pub max_iter: usize,
    /// PSD tolerance of the comb certificate.
    pub cert_tol: f64,
    /// Largest accepted number of scalar equality constraints.
    pub max_constraints: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 200, cert_tol: 1e-7, max_constraints: 4096 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Optimal => "optimal",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpDiagnostics {
    pub n_constraints: usize,
    pub block_dims: Vec<usize>,
    pub history: Vec<IterationRecord>,
    pub certificate_margin: f64,
}

/// Optimal tester together with its dual certificate.
///
/// `gamma_primal`, `gamma_dual` and `lambda` refer to the (nonnegative)
/// payoff the program was solved with; [`gamma`](Self::gamma) subtracts the
/// recorded shift.
#[derive(Debug, Clone)]
pub struct SdpSolution<T: Real> {
    pub gamma_primal: T,
    pub gamma_dual: T,
    pub payoff_shift: T,
    pub tester: Tester<T>,
    pub lambda: T,
    pub comb_certificate: QuantumComb<T>,
    pub gap: T,
    pub iterations: usize,
    pub status: SolveStatus,
    pub dual: DualState<T>,
    pub diagnostics: SdpDiagnostics,
}

impl<T: Real> SdpSolution<T> {
    /// Optimal payoff in the units of the original payoff.
    pub fn gamma(&self) -> T {
        self.gamma_primal - self.payoff_shift
    }
}

/// Raw optimum of a standard-form program.
#[derive(Debug, Clone)]
pub struct RawSolution<T: Real> {
    pub primal: PrimalPoint<T>,
    pub dual: DualState<T>,
    pub primal_objective: T,
    pub dual_objective: T,
    pub iterations: usize,
    pub history: Vec<IterationRecord>,
}

/// Solves a standard-form program from the uniform tester and the
/// strictly feasible dual point.
pub fn solve_standard<T: Real>(sdp: &StandardSdp<T>, g_max: T, opts: &SolveOptions) -> Result<RawSolution<T>> {
    let m = sdp.n_constraints();
    if m > opts.max_constraints {
        return Err(Error::DimensionCap { dim: m, cap: opts.max_constraints });
    }
    let block = sdp.to_block_sdp();
    let x0 = sdp.primal_to_blocks(&sdp.uniform_point()?);
    let y0 = sdp.dual_to_coordinates(&sdp.slater_point(g_max)?);
    let r = ipm::solve_block_sdp(&block, x0, y0, &ipm::IpmOptions { tol: T::lit(opts.tol), max_iter: opts.max_iter })?;
    Ok(RawSolution {
        primal: sdp.blocks_to_primal(&r.x),
        dual: sdp.coordinates_to_dual(&r.y),
        primal_objective: r.primal_objective,
        dual_objective: r.dual_objective,
        iterations: r.iterations,
        history: r.history,
    })
}

/// Outcome of [`certify_dual`].
#[derive(Debug, Clone, PartialEq)]
pub struct CertificateReport<T: Real> {
    /// `min_eig(λR − G_x̂)` per outcome.
    pub margins: Vec<T>,
    pub min_margin: T,
    pub passed: bool,
    /// `λ` minus the payoff shift: the certified upper bound on the payoff.
    pub upper_bound: T,
}

/// Checks `λR ⪰ G_x̂` for every outcome; `R` must be a valid comb.
pub fn certify_dual<T: Real>(
    lambda: T,
    r: &QuantumComb<T>,
    p: &EstimationProblem<T>,
    tol: T,
) -> Result<CertificateReport<T>> {
    if r.space != *p.space() {
        return Err(Error::InvalidComb("certificate lives on a different comb space".into()));
    }
    validate_comb(r, tol).map_err(|e| Error::InvalidComb(e.to_string()))?;
    if lambda < -tol {
        return Err(Error::InvalidComb(format!("negative λ = {}", lambda.to_f64_lossy())));
    }
    let lr = r.op.scale(lambda);
    let margins = p
        .payoff_operators()
        .iter()
        .map(|g| min_eig(&lr.sub(g)?))
        .collect::<Result<Vec<_>>>()?;
    let min_margin = margins.iter().fold(T::lit(f64::MAX), |m, &v| m.min(v));
    Ok(CertificateReport { passed: min_margin >= -tol, margins, min_margin, upper_bound: lambda - p.payoff_shift() })
}

/// Optimal tester and certificate for `p`.
pub fn solve<T: Real>(p: &EstimationProblem<T>, opts: &SolveOptions) -> Result<SdpSolution<T>> {
    let sdp = build_primal(p)?;
    let raw = solve_standard(&sdp, p.g_max(), opts)?;
    let tol = T::lit(opts.tol);
    let check_tol = T::lit(10.0 * opts.tol);

    let outcomes: Vec<(String, LabeledOperator<T>)> = p
        .labels()
        .iter()
        .cloned()
        .zip(raw.primal.outcomes.iter().map(|t| t.hermitian_part()))
        .collect();
    let mut tester = Tester::new(p.space().clone(), outcomes)?;
    tester.xi_chain = Some(validate_tester(&tester, check_tol).map_err(|e| {
        Error::NumericalFailure(format!("optimal tester fails validation: {e}"))
    })?);

    let (lambda, mut comb) = extract_certificate(p.space(), &raw.dual)?;
    let cert_tol = T::lit(opts.cert_tol.max(10.0 * opts.tol));
    let report = certify_dual(lambda, &comb, p, cert_tol)
        .map_err(|e| Error::NumericalFailure(format!("certificate extraction failed: {e}")))?;
    if !report.passed {
        return Err(Error::NumericalFailure(format!(
            "certificate margin {:e} below tolerance",
            report.min_margin.to_f64_lossy()
        )));
    }
    comb.witness_chain = Some(validate_comb(&comb, cert_tol)?);

    let scale = T::one() + raw.primal_objective.abs();
    let gap = (raw.dual_objective - raw.primal_objective).abs();
    if gap > tol * scale {
        return Err(Error::NumericalFailure(format!("duality gap {:e} after convergence", gap.to_f64_lossy())));
    }
    Ok(SdpSolution {
        gamma_primal: raw.primal_objective,
        gamma_dual: raw.dual_objective,
        payoff_shift: p.payoff_shift(),
        tester,
        lambda,
        comb_certificate: comb,
        gap,
        iterations: raw.iterations,
        status: SolveStatus::Optimal,
        dual: raw.dual,
        diagnostics: SdpDiagnostics {
            n_constraints: sdp.n_constraints(),
            block_dims: sdp.block_dims(),
            history: raw.history,
            certificate_margin: report.min_margin.to_f64_lossy(),
        },
    })
}

/// State discrimination through its dual `min Tr Λ` s.t. `Λ ⪰ π_x ρ_x`.
#[derive(Debug, Clone)]
pub struct YklResult<T: Real> {
    pub p_succ: T,
    /// One effect per state, on the state's factor.
    pub povm: Vec<LabeledOperator<T>>,
    pub lambda_op: LabeledOperator<T>,
    /// `‖Σ_x P_x (Λ − π_x ρ_x)‖_max`.
    pub slackness_residual: T,
    pub solution: SdpSolution<T>,
}

/// Minimum-error discrimination of `states` (single-factor density matrices
/// on a common label) with the given priors.
pub fn yuen_kennedy_lax<T: Real>(
    states: &[LabeledOperator<T>],
    priors: &[T],
    opts: &SolveOptions,
) -> Result<YklResult<T>> {
    if states.is_empty() {
        return Err(Error::InvalidProblem("no states".into()));
    }
    let combs = states.iter().map(comb_of_state).collect::<Result<Vec<_>>>()?;
    let space: CombSpace = combs[0].space.clone();
    let labels = (0..states.len()).map(|i| i.to_string()).collect();
    let p = EstimationProblem::from_combs(space.clone(), labels, priors.to_vec(), combs, delta_payoff(states.len()), T::zero())?;
    let sol = solve(&p, opts)?;
    let inp = space.steps()[0].input.id.clone();
    let lambda_op = partial_trace(&tighten(&space, &sol.dual)?.top().clone(), &[&inp])?;
    let povm = sol
        .tester
        .outcomes
        .iter()
        .map(|(_, t)| partial_trace(t, &[&inp]))
        .collect::<Result<Vec<_>>>()?;
    let n = lambda_op.dim();
    let mut acc = DMatrix::zeros(n, n);
    for (x, e) in povm.iter().enumerate() {
        let diff = lambda_op.sub(&states[x].scale(priors[x]).aligned_to(lambda_op.factors())?)?;
        acc += e.data() * diff.data();
    }
    let slackness_residual = acc.iter().fold(T::zero(), |m, z| m.max(nalgebra::ComplexField::modulus(*z)));
    Ok(YklResult { p_succ: sol.gamma(), povm, lambda_op, slackness_residual, solution: sol })
}
