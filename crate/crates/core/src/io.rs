//! JSON interchange formats for operators, combs, testers, problems,
//! solutions, product-rule reports and group actions.
//!
//! Matrices are row-major nested arrays of `[re, im]` pairs with an explicit
//! `factors` header.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::DMatrix;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::covariant::FiniteGroupAction;
use crate::error::{Error, Result};
use crate::estimation::EstimationProblem;
use crate::network::{CombSpace, QuantumComb, Step, Tester};
use crate::operator::{LabeledOperator, SystemLabel};
use crate::product_rule::ProductRuleReport;
use crate::scalar::{cplx, Complex, Real};
use crate::sdp::SdpSolution;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixFile {
    pub factors: Vec<SystemLabel>,
    pub data: Vec<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombFile {
    pub steps: Vec<Step>,
    pub comb: MatrixFile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeFile {
    pub id: String,
    pub operator: MatrixFile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TesterFile {
    pub steps: Vec<Step>,
    pub outcomes: Vec<OutcomeFile>,
}

/// Either kind of network file, told apart by its fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NetworkFile {
    Comb(CombFile),
    Tester(TesterFile),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemFile {
    pub steps: Vec<Step>,
    pub labels_x: Vec<String>,
    pub prior: Vec<f64>,
    /// Rows are estimates, columns true values; already shifted.
    pub payoff: Vec<Vec<f64>>,
    pub combs: BTreeMap<String, MatrixFile>,
    #[serde(default)]
    pub payoff_shift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionFile {
    /// Optimal payoff with the shift removed.
    pub gamma: f64,
    pub gamma_primal: f64,
    pub gamma_dual: f64,
    pub lambda: f64,
    pub gap: f64,
    pub tester: TesterFile,
    pub comb_certificate: CombFile,
    pub payoff_shift: f64,
    pub iterations: usize,
    pub status: String,
    pub certificate_margin: f64,
}

/// `(λ, R)` pair read by the dual check; a solution file also parses as one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateFile {
    pub lambda: f64,
    pub comb_certificate: CombFile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductRuleFile {
    pub gamma_joint: f64,
    pub gamma_factors: Vec<f64>,
    pub product: f64,
    pub relative_deviation: f64,
    pub certified: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupFile {
    pub elements: Vec<String>,
    pub table: Vec<Vec<usize>>,
    /// Per label, one matrix per element.
    pub rep: BTreeMap<String, BTreeMap<String, MatrixFile>>,
}

pub fn read_json<D: DeserializeOwned>(path: impl AsRef<Path>) -> Result<D> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

pub fn to_json<S: Serialize>(value: &S) -> Result<String> {
    serde_json::to_string_pretty(value).map_err(|e| Error::Parse(e.to_string()))
}

pub fn write_json<S: Serialize>(path: impl AsRef<Path>, value: &S) -> Result<()> {
    let path = path.as_ref();
    let mut text = to_json(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn matrix_data<T: Real>(m: &DMatrix<Complex<T>>) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| [m[(r, c)].re.to_f64_lossy(), m[(r, c)].im.to_f64_lossy()]).collect())
        .collect()
}

pub fn operator_to_file<T: Real>(op: &LabeledOperator<T>) -> MatrixFile {
    MatrixFile { factors: op.factors().to_vec(), data: matrix_data(op.data()) }
}

pub fn operator_from_file<T: Real>(f: &MatrixFile) -> Result<LabeledOperator<T>> {
    let n = f.data.len();
    if f.data.iter().any(|row| row.len() != n) {
        return Err(Error::Parse("matrix rows must all have the matrix side length".into()));
    }
    let m = DMatrix::from_fn(n, n, |r, c| {
        let [re, im] = f.data[r][c];
        cplx(T::lit(re), T::lit(im))
    });
    LabeledOperator::new(f.factors.clone(), m)
}

pub fn comb_to_file<T: Real>(c: &QuantumComb<T>) -> CombFile {
    CombFile { steps: c.space.steps().to_vec(), comb: operator_to_file(&c.op) }
}

/// Reads a comb without checking its normalization.
pub fn comb_from_file<T: Real>(f: &CombFile) -> Result<QuantumComb<T>> {
    QuantumComb::new(CombSpace::new(f.steps.clone())?, &operator_from_file(&f.comb)?)
}

pub fn tester_to_file<T: Real>(t: &Tester<T>) -> TesterFile {
    TesterFile {
        steps: t.space.steps().to_vec(),
        outcomes: t.outcomes.iter().map(|(id, op)| OutcomeFile { id: id.clone(), operator: operator_to_file(op) }).collect(),
    }
}

/// Reads a tester without checking its normalization.
pub fn tester_from_file<T: Real>(f: &TesterFile) -> Result<Tester<T>> {
    let outcomes = f
        .outcomes
        .iter()
        .map(|o| Ok((o.id.clone(), operator_from_file(&o.operator)?)))
        .collect::<Result<Vec<_>>>()?;
    Tester::new(CombSpace::new(f.steps.clone())?, outcomes)
}

pub fn problem_to_file<T: Real>(p: &EstimationProblem<T>) -> ProblemFile {
    let g = p.payoff();
    ProblemFile {
        steps: p.space().steps().to_vec(),
        labels_x: p.labels().to_vec(),
        prior: p.prior().iter().map(|v| v.to_f64_lossy()).collect(),
        payoff: (0..g.nrows()).map(|r| (0..g.ncols()).map(|c| g[(r, c)].to_f64_lossy()).collect()).collect(),
        combs: p.labels().iter().cloned().zip(p.combs().iter().map(|c| operator_to_file(&c.op))).collect(),
        payoff_shift: p.payoff_shift().to_f64_lossy(),
    }
}

/// Builds and validates the problem described by `f`.
pub fn problem_from_file<T: Real>(f: &ProblemFile) -> Result<EstimationProblem<T>> {
    let space = CombSpace::new(f.steps.clone())?;
    let n = f.labels_x.len();
    if f.payoff.len() != n || f.payoff.iter().any(|r| r.len() != n) {
        return Err(Error::Parse(format!("payoff must be a {n}×{n} array")));
    }
    if f.combs.len() != n {
        return Err(Error::Parse(format!("{} combs for {n} labels", f.combs.len())));
    }
    let combs = f
        .labels_x
        .iter()
        .map(|x| {
            let m = f.combs.get(x).ok_or_else(|| Error::Parse(format!("no comb for label `{x}`")))?;
            QuantumComb::new(space.clone(), &operator_from_file(m)?)
        })
        .collect::<Result<Vec<_>>>()?;
    let payoff = DMatrix::from_fn(n, n, |r, c| T::lit(f.payoff[r][c]));
    EstimationProblem::from_combs(
        space,
        f.labels_x.clone(),
        f.prior.iter().map(|&v| T::lit(v)).collect(),
        combs,
        payoff,
        T::lit(f.payoff_shift),
    )
}

pub fn solution_to_file<T: Real>(s: &SdpSolution<T>) -> SolutionFile {
    SolutionFile {
        gamma: s.gamma().to_f64_lossy(),
        gamma_primal: s.gamma_primal.to_f64_lossy(),
        gamma_dual: s.gamma_dual.to_f64_lossy(),
        lambda: s.lambda.to_f64_lossy(),
        gap: s.gap.to_f64_lossy(),
        tester: tester_to_file(&s.tester),
        comb_certificate: comb_to_file(&s.comb_certificate),
        payoff_shift: s.payoff_shift.to_f64_lossy(),
        iterations: s.iterations,
        status: s.status.as_str().to_string(),
        certificate_margin: s.diagnostics.certificate_margin,
    }
}

pub fn product_rule_to_file<T: Real>(r: &ProductRuleReport<T>) -> ProductRuleFile {
    ProductRuleFile {
        gamma_joint: r.gamma_joint.to_f64_lossy(),
        gamma_factors: r.gamma_factors.iter().map(|v| v.to_f64_lossy()).collect(),
        product: r.product.to_f64_lossy(),
        relative_deviation: r.relative_deviation.to_f64_lossy(),
        certified: r.certified,
    }
}

pub fn group_to_file<T: Real>(g: &FiniteGroupAction<T>) -> GroupFile {
    let rep = g
        .reps()
        .iter()
        .map(|(label, us)| {
            let per = g
                .elements()
                .iter()
                .zip(us)
                .map(|(e, u)| {
                    (e.clone(), MatrixFile { factors: vec![SystemLabel::new(label.clone(), u.nrows())], data: matrix_data(u) })
                })
                .collect();
            (label.clone(), per)
        })
        .collect();
    GroupFile { elements: g.elements().to_vec(), table: g.table().to_vec(), rep }
}

pub fn group_from_file<T: Real>(f: &GroupFile) -> Result<FiniteGroupAction<T>> {
    let mut reps = BTreeMap::new();
    for (label, per) in &f.rep {
        let us = f
            .elements
            .iter()
            .map(|e| {
                let m = per.get(e).ok_or_else(|| Error::Parse(format!("no matrix for element `{e}` on `{label}`")))?;
                Ok(operator_from_file::<T>(m)?.into_data())
            })
            .collect::<Result<Vec<_>>>()?;
        reps.insert(label.clone(), us);
    }
    FiniteGroupAction::new(f.elements.clone(), f.table.clone(), reps)
}
