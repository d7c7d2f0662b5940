//! Random combs, testers and problems for the integration suites.
#![allow(dead_code)]

use nalgebra::DMatrix;
use qcomb::estimation::{delta_payoff, EstimationProblem};
use qcomb::network::{choi_of_channel, comb_of_state, CombSpace, QuantumComb, Step, Tester};
use qcomb::operator::{embed_identity, hermitian_eigen_matrix, permute_systems, LabeledOperator, SystemLabel};
use qcomb::Complex;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type C = Complex<f64>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn ginibre(r: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<C> {
    DMatrix::from_fn(rows, cols, |_, _| C::new(r.sample(StandardNormal), r.sample(StandardNormal)))
}

pub fn random_hermitian(r: &mut ChaCha8Rng, n: usize) -> DMatrix<C> {
    let g = ginibre(r, n, n);
    (&g + g.adjoint()).map(|z| z * 0.5)
}

pub fn random_psd(r: &mut ChaCha8Rng, n: usize, rank: usize) -> DMatrix<C> {
    let g = ginibre(r, n, rank.max(1));
    &g * g.adjoint()
}

pub fn random_density(r: &mut ChaCha8Rng, n: usize, rank: usize) -> DMatrix<C> {
    let m = random_psd(r, n, rank);
    let t = m.trace().re;
    m.map(|z| z / t)
}

/// `f(H)` through the eigendecomposition.
pub fn psd_function(m: &DMatrix<C>, f: impl Fn(f64) -> f64) -> DMatrix<C> {
    let e = hermitian_eigen_matrix(m);
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(e.values.len(), e.values.iter().map(|&v| C::new(f(v.max(0.0)), 0.0))));
    &e.vectors * d * e.vectors.adjoint()
}

/// Kraus operators `a×b` with `Σ K†K = I`, from a Haar-like isometry.
pub fn random_kraus(r: &mut ChaCha8Rng, a: usize, b: usize, rank: usize) -> Vec<DMatrix<C>> {
    let rank = rank.max(b.div_ceil(a));
    let v = ginibre(r, a * rank, b).qr().q();
    (0..rank).map(|j| v.rows(j * a, a).into_owned()).collect()
}

/// Choi-type matrix on `(P, o, i)` with `Tr_o D = I`: a channel from `P ⊗ i`
/// into `o`.
fn channel_block(r: &mut ChaCha8Rng, p: usize, dout: usize, din: usize, rank: usize) -> DMatrix<C> {
    let ks = random_kraus(r, dout, p * din, rank);
    let n = p * dout * din;
    DMatrix::from_fn(n, n, |row, col| {
        let (pr, or, ir) = (row / (dout * din), (row / din) % dout, row % din);
        let (pc, oc, ic) = (col / (dout * din), (col / din) % dout, col % din);
        ks.iter().map(|k| k[(or, pr * din + ir)] * k[(oc, pc * din + ic)].conj()).sum()
    })
}

pub fn space(dims: &[(usize, usize)]) -> CombSpace {
    CombSpace::new(
        dims.iter()
            .enumerate()
            .map(|(k, &(i, o))| Step::new(SystemLabel::new(format!("in{}", k + 1), i), SystemLabel::new(format!("out{}", k + 1), o)))
            .collect(),
    )
    .unwrap()
}

/// Comb built level by level: `R^(n) = √(R^(n−1) ⊗ I) D_n √(R^(n−1) ⊗ I)`.
pub fn random_comb(r: &mut ChaCha8Rng, sp: &CombSpace, rank: usize) -> QuantumComb<f64> {
    let mut m = DMatrix::from_element(1, 1, C::new(1.0, 0.0));
    for s in sp.steps() {
        let (din, dout) = (s.input.dim, s.output.dim);
        let p = m.nrows();
        let d = channel_block(r, p, dout, din, rank);
        let root = psd_function(&m, f64::sqrt).kronecker(&DMatrix::identity(dout * din, dout * din));
        m = &root * d * &root;
    }
    QuantumComb::new(sp.clone(), &LabeledOperator::new(sp.labels(), m).unwrap()).unwrap()
}

/// Memory comb from composite Kraus operators: step 1 writes into a memory
/// of dimension `mem`, step 2 reads it.
pub fn random_memory_comb(r: &mut ChaCha8Rng, dims: [(usize, usize); 2], mem: usize) -> QuantumComb<f64> {
    let [(i1, o1), (i2, o2)] = dims;
    let v1 = random_kraus(r, o1 * mem, i1, 2);
    let v2 = random_kraus(r, o2, mem * i2, 2);
    let mut kraus = Vec::new();
    for a in &v1 {
        for b in &v2 {
            let first = a.kronecker(&DMatrix::<C>::identity(i2, i2));
            let second = DMatrix::<C>::identity(o1, o1).kronecker(b);
            kraus.push(second * first);
        }
    }
    let inp = SystemLabel::new("in12", i1 * i2);
    let out = SystemLabel::new("out12", o1 * o2);
    let choi = choi_of_channel(&kraus, &inp, &out, 1e-9).unwrap();
    let sp = space(&[(i1, o1), (i2, o2)]);
    let [s1, s2] = [&sp.steps()[0], &sp.steps()[1]];
    let raw = LabeledOperator::new(
        vec![s1.output.clone(), s2.output.clone(), s1.input.clone(), s2.input.clone()],
        choi.into_data(),
    )
    .unwrap();
    let canon = permute_systems(&raw, &[&s1.output.id, &s1.input.id, &s2.output.id, &s2.input.id]).unwrap();
    QuantumComb::new(sp, &canon).unwrap()
}

/// Tester `T_x = √(I ⊗ Ξ^(N)) Q_x √(I ⊗ Ξ^(N))` for a random `Ξ` chain and
/// POVM `Q`.
pub fn random_tester(r: &mut ChaCha8Rng, sp: &CombSpace, outcomes: usize) -> Tester<f64> {
    let steps = sp.steps();
    let mut xi: Option<LabeledOperator<f64>> = None;
    for (k, s) in steps.iter().enumerate() {
        // I_{out,k−1} ⊗ Ξ^(k−1) on prefix(k−1)
        let lifted = match &xi {
            None => DMatrix::from_element(1, 1, C::new(1.0, 0.0)),
            Some(x) => embed_identity(x, &steps[k - 1].output, 2 * (k - 1)).unwrap().into_data(),
        };
        let d = channel_block(r, lifted.nrows(), s.input.dim, 1, 2);
        let root = psd_function(&lifted, f64::sqrt).kronecker(&DMatrix::identity(s.input.dim, s.input.dim));
        xi = Some(LabeledOperator::new(sp.xi_labels(k + 1), &root * d * &root).unwrap());
    }
    let n = steps.len();
    let top = embed_identity(&xi.unwrap(), &steps[n - 1].output, 2 * (n - 1)).unwrap().into_data();
    let gs: Vec<DMatrix<C>> = (0..outcomes).map(|_| random_psd(r, top.nrows(), top.nrows())).collect();
    let total = gs.iter().fold(DMatrix::zeros(top.nrows(), top.nrows()), |a, g| a + g);
    let inv_root = psd_function(&total, |v| 1.0 / v.sqrt());
    let root = psd_function(&top, f64::sqrt);
    let ops = gs
        .iter()
        .enumerate()
        .map(|(x, g)| {
            let t = &root * (&inv_root * g * &inv_root) * &root;
            (format!("t{x}"), LabeledOperator::new(sp.labels(), (&t + t.adjoint()).map(|z| z * 0.5)).unwrap())
        })
        .collect();
    Tester::new(sp.clone(), ops).unwrap()
}

/// Random nonnegative payoff with entries in `[0, 1)`.
pub fn random_payoff(r: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |_, _| r.random::<f64>())
}

pub fn random_prior(r: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| 0.2 + r.random::<f64>()).collect();
    let s: f64 = w.iter().sum();
    w.iter().map(|v| v / s).collect()
}

/// State problem with `n` random mixed states of dimension `d` on factor `tag`.
pub fn random_state_problem(r: &mut ChaCha8Rng, tag: &str, n: usize, d: usize, delta: bool) -> EstimationProblem<f64> {
    let q = SystemLabel::new(tag, d);
    let combs: Vec<_> = (0..n)
        .map(|_| {
            let rank = r.random_range(1..=d);
            comb_of_state(&LabeledOperator::new(vec![q.clone()], random_density(r, d, rank)).unwrap()).unwrap()
        })
        .collect();
    let payoff = if delta { delta_payoff(n) } else { random_payoff(r, n) };
    let prior = random_prior(r, n);
    EstimationProblem::from_combs(combs[0].space.clone(), (0..n).map(|i| format!("x{i}")).collect(), prior, combs, payoff, 0.0).unwrap()
}

/// Process problem on `sp` with `n` random combs.
pub fn random_comb_problem(r: &mut ChaCha8Rng, sp: &CombSpace, n: usize, delta: bool) -> EstimationProblem<f64> {
    let combs: Vec<_> = (0..n)
        .map(|_| {
            let rank = r.random_range(1..=3);
            random_comb(r, sp, rank)
        })
        .collect();
    let payoff = if delta { delta_payoff(n) } else { random_payoff(r, n) };
    let prior = random_prior(r, n);
    EstimationProblem::from_combs(sp.clone(), (0..n).map(|i| format!("x{i}")).collect(), prior, combs, payoff, 0.0).unwrap()
}
