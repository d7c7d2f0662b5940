//! Dense complex operators on labeled tensor-product spaces.
//!
//! The basis of a [`LabeledOperator`] is the lexicographic product basis of
//! its factors in declared order: the last factor varies fastest. Every
//! routine here (and every file format) uses that convention.

use nalgebra::{ComplexField, DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{creal, Complex, Real};

/// Default cap on the side of any operator.
pub const DEFAULT_MAX_DIM: usize = 4096;

/// A named tensor factor.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SystemLabel {
    pub id: String,
    pub dim: usize,
}

impl SystemLabel {
    pub fn new(id: impl Into<String>, dim: usize) -> Self {
        Self { id: id.into(), dim }
    }
}

/// Complex square matrix over an ordered list of labeled factors.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledOperator<T: Real> {
    factors: Vec<SystemLabel>,
    data: DMatrix<Complex<T>>,
}

pub(crate) fn check_labels(factors: &[SystemLabel]) -> Result<usize> {
    let mut dim = 1usize;
    for (i, f) in factors.iter().enumerate() {
        if f.dim == 0 {
            return Err(Error::BadDimension(format!("label `{}` has dimension 0", f.id)));
        }
        if factors[..i].iter().any(|g| g.id == f.id) {
            return Err(Error::DuplicateLabel(f.id.clone()));
        }
        dim = dim
            .checked_mul(f.dim)
            .ok_or(Error::DimensionCap { dim: usize::MAX, cap: DEFAULT_MAX_DIM })?;
    }
    if dim > DEFAULT_MAX_DIM {
        return Err(Error::DimensionCap { dim, cap: DEFAULT_MAX_DIM });
    }
    Ok(dim)
}

impl<T: Real> LabeledOperator<T> {
    pub fn new(factors: Vec<SystemLabel>, data: DMatrix<Complex<T>>) -> Result<Self> {
        let dim = check_labels(&factors)?;
        if data.nrows() != dim || data.ncols() != dim {
            return Err(Error::ShapeMismatch(format!(
                "factors give side {dim}, matrix is {}x{}",
                data.nrows(),
                data.ncols()
            )));
        }
        if data.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite);
        }
        Ok(Self { factors, data })
    }

    pub fn from_real(factors: Vec<SystemLabel>, data: &DMatrix<T>) -> Result<Self> {
        Self::new(factors, data.map(creal))
    }

    pub fn identity(factors: Vec<SystemLabel>) -> Result<Self> {
        let dim = check_labels(&factors)?;
        Ok(Self { factors, data: DMatrix::identity(dim, dim) })
    }

    pub fn zeros(factors: Vec<SystemLabel>) -> Result<Self> {
        let dim = check_labels(&factors)?;
        Ok(Self { factors, data: DMatrix::zeros(dim, dim) })
    }

    /// 1×1 operator with no factors.
    pub fn scalar(value: T) -> Self {
        Self { factors: Vec::new(), data: DMatrix::from_element(1, 1, creal(value)) }
    }

    /// Projector onto a (not necessarily normalized) vector.
    pub fn projector(factors: Vec<SystemLabel>, v: &[Complex<T>]) -> Result<Self> {
        let dim = check_labels(&factors)?;
        if v.len() != dim {
            return Err(Error::ShapeMismatch(format!("vector of length {} on side {dim}", v.len())));
        }
        let data = DMatrix::from_fn(dim, dim, |i, j| v[i] * v[j].conj());
        Ok(Self { factors, data })
    }

    pub fn factors(&self) -> &[SystemLabel] {
        &self.factors
    }

    pub fn data(&self) -> &DMatrix<Complex<T>> {
        &self.data
    }

    pub fn into_data(self) -> DMatrix<Complex<T>> {
        self.data
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.factors.iter().position(|f| f.id == id)
    }

    pub fn label_ids(&self) -> Vec<&str> {
        self.factors.iter().map(|f| f.id.as_str()).collect()
    }

    pub fn trace(&self) -> Complex<T> {
        self.data.trace()
    }

    /// Real part of the trace.
    pub fn trace_re(&self) -> T {
        self.data.trace().re
    }

    pub fn dagger(&self) -> Self {
        Self { factors: self.factors.clone(), data: self.data.adjoint() }
    }

    pub fn scale(&self, s: T) -> Self {
        Self { factors: self.factors.clone(), data: self.data.map(|z| z * s) }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_structure(other)?;
        Ok(Self { factors: self.factors.clone(), data: &self.data + &other.data })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.same_structure(other)?;
        Ok(Self { factors: self.factors.clone(), data: &self.data - &other.data })
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, z| m.max(z.modulus()))
    }

    /// `‖A − A†‖_max`.
    pub fn hermitian_residual(&self) -> T {
        let n = self.dim();
        let mut r = T::zero();
        for i in 0..n {
            for j in i..n {
                r = r.max((self.data[(i, j)] - self.data[(j, i)].conj()).modulus());
            }
        }
        r
    }

    /// `(A + A†)/2`.
    pub fn hermitian_part(&self) -> Self {
        let h = (&self.data + self.data.adjoint()).map(|z| z * T::lit(0.5));
        Self { factors: self.factors.clone(), data: h }
    }

    /// Collapses all factors into one label of the product dimension. The
    /// basis ordering is unchanged.
    pub fn merged(&self, id: impl Into<String>) -> Result<Self> {
        Self::new(vec![SystemLabel::new(id, self.dim())], self.data.clone())
    }

    pub(crate) fn same_structure(&self, other: &Self) -> Result<()> {
        if self.factors != other.factors {
            return Err(Error::ShapeMismatch(format!(
                "factor lists differ: {:?} vs {:?}",
                self.label_ids(),
                other.label_ids()
            )));
        }
        Ok(())
    }

    /// Permutes this operator into the factor order of `target` (same label
    /// set required).
    pub fn aligned_to(&self, target: &[SystemLabel]) -> Result<Self> {
        if self.factors == target {
            return Ok(self.clone());
        }
        let order: Vec<&str> = target.iter().map(|f| f.id.as_str()).collect();
        let out = permute_systems(self, &order)?;
        if out.factors != target {
            return Err(Error::ShapeMismatch("label dimensions differ".into()));
        }
        Ok(out)
    }

    pub(crate) fn from_parts_unchecked(factors: Vec<SystemLabel>, data: DMatrix<Complex<T>>) -> Self {
        debug_assert_eq!(factors.iter().map(|f| f.dim).product::<usize>(), data.nrows());
        Self { factors, data }
    }
}

pub(crate) fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1usize; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * dims[i + 1];
    }
    s
}

/// Flat offsets of the lexicographic enumeration of `dims`, where axis `k`
/// advances the flat index by `axis_strides[k]`.
pub(crate) fn offsets(dims: &[usize], axis_strides: &[usize]) -> Vec<usize> {
    let total: usize = dims.iter().product();
    let mut out = Vec::with_capacity(total);
    let mut idx = vec![0usize; dims.len()];
    let mut off = 0usize;
    for _ in 0..total {
        out.push(off);
        for ax in (0..dims.len()).rev() {
            idx[ax] += 1;
            off += axis_strides[ax];
            if idx[ax] < dims[ax] {
                break;
            }
            off -= axis_strides[ax] * dims[ax];
            idx[ax] = 0;
        }
    }
    out
}

/// `a ⊗ b`; factors of `a` come first.
pub fn tensor<T: Real>(a: &LabeledOperator<T>, b: &LabeledOperator<T>) -> Result<LabeledOperator<T>> {
    if let Some(f) = a.factors.iter().find(|f| b.position(&f.id).is_some()) {
        return Err(Error::DuplicateLabel(f.id.clone()));
    }
    let mut factors = a.factors.clone();
    factors.extend(b.factors.iter().cloned());
    check_labels(&factors)?;
    Ok(LabeledOperator { factors, data: a.data.kronecker(&b.data) })
}

/// Traces out the listed factors; remaining factors keep their order.
pub fn partial_trace<T: Real>(a: &LabeledOperator<T>, over: &[&str]) -> Result<LabeledOperator<T>> {
    let mut traced = vec![false; a.factors.len()];
    for id in over {
        let p = a.position(id).ok_or_else(|| Error::UnknownLabel((*id).to_string()))?;
        traced[p] = true;
    }
    if !traced.iter().any(|&t| t) {
        return Ok(a.clone());
    }
    let dims: Vec<usize> = a.factors.iter().map(|f| f.dim).collect();
    let st = strides(&dims);
    let (mut kd, mut ks, mut td, mut ts) = (vec![], vec![], vec![], vec![]);
    let mut kept = Vec::new();
    for (k, f) in a.factors.iter().enumerate() {
        if traced[k] {
            td.push(dims[k]);
            ts.push(st[k]);
        } else {
            kd.push(dims[k]);
            ks.push(st[k]);
            kept.push(f.clone());
        }
    }
    let ko = offsets(&kd, &ks);
    let to = offsets(&td, &ts);
    let n = ko.len();
    let data = DMatrix::from_fn(n, n, |r, c| {
        let (br, bc) = (ko[r], ko[c]);
        to.iter().fold(Complex::new(T::zero(), T::zero()), |acc, &t| acc + a.data[(br + t, bc + t)])
    });
    Ok(LabeledOperator { factors: kept, data })
}

/// Reorders the factors to `order`, which must be a permutation of the
/// operator's labels.
pub fn permute_systems<T: Real>(a: &LabeledOperator<T>, order: &[&str]) -> Result<LabeledOperator<T>> {
    if order.len() != a.factors.len() {
        return Err(Error::BadPermutation(format!(
            "expected {} labels, got {}",
            a.factors.len(),
            order.len()
        )));
    }
    let dims: Vec<usize> = a.factors.iter().map(|f| f.dim).collect();
    let st = strides(&dims);
    let mut seen = vec![false; order.len()];
    let mut nd = Vec::with_capacity(order.len());
    let mut ns = Vec::with_capacity(order.len());
    let mut factors = Vec::with_capacity(order.len());
    for id in order {
        let p = a
            .position(id)
            .ok_or_else(|| Error::BadPermutation(format!("label `{id}` not present")))?;
        if seen[p] {
            return Err(Error::BadPermutation(format!("label `{id}` repeated")));
        }
        seen[p] = true;
        nd.push(dims[p]);
        ns.push(st[p]);
        factors.push(a.factors[p].clone());
    }
    if factors == a.factors {
        return Ok(a.clone());
    }
    let p = offsets(&nd, &ns);
    let n = p.len();
    let data = DMatrix::from_fn(n, n, |i, j| a.data[(p[i], p[j])]);
    Ok(LabeledOperator { factors, data })
}

/// Inserts `I(new)` as the factor at `position`.
pub fn embed_identity<T: Real>(
    a: &LabeledOperator<T>,
    new: &SystemLabel,
    position: usize,
) -> Result<LabeledOperator<T>> {
    if a.position(&new.id).is_some() {
        return Err(Error::DuplicateLabel(new.id.clone()));
    }
    if position > a.factors.len() {
        return Err(Error::ShapeMismatch(format!(
            "position {position} beyond {} factors",
            a.factors.len()
        )));
    }
    let id = LabeledOperator::identity(vec![new.clone()])?;
    let joined = tensor(&id, a)?;
    let mut order: Vec<&str> = a.factors.iter().map(|f| f.id.as_str()).collect();
    order.insert(position, new.id.as_str());
    permute_systems(&joined, &order)
}

/// Default Hermiticity tolerance `1e-10·(1 + ‖A‖_max)`.
pub fn herm_tol<T: Real>(a: &LabeledOperator<T>) -> T {
    T::tol_floor() * (T::one() + a.max_abs())
}

/// Eigendecomposition of a Hermitian operator.
#[derive(Debug, Clone)]
pub struct HermitianEigen<T: Real> {
    /// Sorted descending.
    pub values: Vec<T>,
    /// Column `k` is the eigenvector of `values[k]`.
    pub vectors: DMatrix<Complex<T>>,
}

impl<T: Real> HermitianEigen<T> {
    pub fn reconstruct(&self) -> DMatrix<Complex<T>> {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for k in 0..n {
            let v = self.values[k];
            scaled.column_mut(k).iter_mut().for_each(|z| *z *= v);
        }
        scaled * self.vectors.adjoint()
    }
}

pub fn eig_hermitian<T: Real>(a: &LabeledOperator<T>) -> Result<HermitianEigen<T>> {
    eig_hermitian_with(a, herm_tol(a))
}

pub fn eig_hermitian_with<T: Real>(a: &LabeledOperator<T>, herm_tol: T) -> Result<HermitianEigen<T>> {
    check_hermitian(a, herm_tol)?;
    Ok(hermitian_eigen_matrix(&a.hermitian_part().data))
}

/// Eigendecomposition of a Hermitian matrix (only the Hermitian part is used).
pub fn hermitian_eigen_matrix<T: Real>(m: &DMatrix<Complex<T>>) -> HermitianEigen<T> {
    let se = SymmetricEigen::new(m.clone());
    let n = se.eigenvalues.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| se.eigenvalues[j].partial_cmp(&se.eigenvalues[i]).unwrap_or(std::cmp::Ordering::Equal));
    let values = idx.iter().map(|&i| se.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| se.eigenvectors[(r, idx[c])]);
    HermitianEigen { values, vectors }
}

fn check_hermitian<T: Real>(a: &LabeledOperator<T>, tol: T) -> Result<()> {
    let r = a.hermitian_residual();
    if !(r <= tol) {
        return Err(Error::NotHermitian { residual: r.to_f64_lossy() });
    }
    Ok(())
}

pub fn min_eig<T: Real>(a: &LabeledOperator<T>) -> Result<T> {
    check_hermitian(a, herm_tol(a))?;
    Ok(min_eig_matrix(&a.data))
}

pub fn max_eig<T: Real>(a: &LabeledOperator<T>) -> Result<T> {
    check_hermitian(a, herm_tol(a))?;
    let h = (&a.data + a.data.adjoint()).map(|z| z * T::lit(0.5));
    Ok(h.symmetric_eigenvalues().iter().fold(T::min_value().unwrap_or(-T::one()), |m, &v| m.max(v)))
}

pub(crate) fn min_eig_matrix<T: Real>(m: &DMatrix<Complex<T>>) -> T {
    let h = (m + m.adjoint()).map(|z| z * T::lit(0.5));
    h.symmetric_eigenvalues().iter().fold(T::max_value().unwrap_or(T::one()), |m, &v| m.min(v))
}

/// True iff the smallest eigenvalue is at least `-tol`.
pub fn is_psd<T: Real>(a: &LabeledOperator<T>, tol: T) -> Result<bool> {
    Ok(min_eig(a)? >= -tol)
}

/// Hilbert–Schmidt product `Tr[a†b]`.
pub fn hs_inner<T: Real>(a: &LabeledOperator<T>, b: &LabeledOperator<T>) -> Result<Complex<T>> {
    a.same_structure(b)?;
    Ok(a.data
        .iter()
        .zip(b.data.iter())
        .fold(Complex::new(T::zero(), T::zero()), |acc, (x, y)| acc + x.conj() * y))
}

/// `Re Tr[a b]` for Hermitian matrices of equal shape, without forming the product.
pub(crate) fn trace_product_re<T: Real>(a: &DMatrix<Complex<T>>, b: &DMatrix<Complex<T>>) -> T {
    let n = a.nrows();
    let mut acc = T::zero();
    for i in 0..n {
        for j in 0..n {
            acc += (a[(i, j)] * b[(j, i)]).re;
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::cplx;
    use approx::assert_abs_diff_eq;

    fn lab(id: &str, d: usize) -> SystemLabel {
        SystemLabel::new(id, d)
    }

    fn diag(id: &str, v: &[f64]) -> LabeledOperator<f64> {
        let n = v.len();
        LabeledOperator::from_real(vec![lab(id, n)], &DMatrix::from_fn(n, n, |i, j| if i == j { v[i] } else { 0.0 }))
            .unwrap()
    }

    fn sigma_x(id: &str) -> LabeledOperator<f64> {
        LabeledOperator::from_real(vec![lab(id, 2)], &DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])).unwrap()
    }

    #[test]
    fn tensor_identity_and_basis_products() {
        let i2a = LabeledOperator::<f64>::identity(vec![lab("a", 2)]).unwrap();
        let i2b = LabeledOperator::<f64>::identity(vec![lab("b", 2)]).unwrap();
        let t = tensor(&i2a, &i2b).unwrap();
        assert_eq!(t.data(), &DMatrix::identity(4, 4));

        let p = tensor(&diag("a", &[1.0, 0.0]), &diag("b", &[0.0, 1.0])).unwrap();
        assert_eq!(p.label_ids(), vec!["a", "b"]);
        let expect = [0.0, 1.0, 0.0, 0.0];
        for i in 0..4 {
            for j in 0..4 {
                let e = if i == j { expect[i] } else { 0.0 };
                assert_eq!(p.data()[(i, j)].re, e);
            }
        }
        assert_eq!(tensor(&i2a, &i2a), Err(Error::DuplicateLabel("a".into())));
    }

    #[test]
    fn partial_trace_examples() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let phi = LabeledOperator::<f64>::projector(
            vec![lab("a", 2), lab("b", 2)],
            &[cplx(s, 0.0), cplx(0.0, 0.0), cplx(0.0, 0.0), cplx(s, 0.0)],
        )
        .unwrap();
        let m = partial_trace(&phi, &["b"]).unwrap();
        assert_eq!(m.label_ids(), vec!["a"]);
        assert_abs_diff_eq!(m.data()[(0, 0)].re, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(m.data()[(1, 1)].re, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(m.data()[(0, 1)].norm(), 0.0, epsilon = 1e-15);

        let rho = diag("a", &[0.3, 0.9]);
        let sigma = diag("b", &[0.25, 0.5, 0.125]);
        let tr = partial_trace(&tensor(&rho, &sigma).unwrap(), &["a"]).unwrap();
        assert_abs_diff_eq!((tr.data() - sigma.data().map(|z| z * 1.2)).norm(), 0.0, epsilon = 1e-14);

        let full = partial_trace(&phi, &["a", "b"]).unwrap();
        assert_eq!(full.dim(), 1);
        assert!(full.factors().is_empty());
        assert_abs_diff_eq!(full.trace_re(), 1.0, epsilon = 1e-15);

        assert_eq!(partial_trace(&phi, &["zz"]), Err(Error::UnknownLabel("zz".into())));
    }

    #[test]
    fn embed_identity_examples() {
        let one = LabeledOperator::<f64>::scalar(1.0);
        let e = embed_identity(&one, &lab("n", 3), 0).unwrap();
        assert_eq!(e.data(), &DMatrix::identity(3, 3));

        let a = tensor(&diag("a", &[0.2, 0.7]), &sigma_x("c")).unwrap();
        let e = embed_identity(&a, &lab("b", 3), 1).unwrap();
        assert_eq!(e.label_ids(), vec!["a", "b", "c"]);
        let back = partial_trace(&e, &["b"]).unwrap();
        assert_abs_diff_eq!((back.data() - a.data().map(|z| z * 3.0)).norm(), 0.0, epsilon = 1e-14);

        let via_tensor = tensor(&a, &LabeledOperator::identity(vec![lab("b", 3)]).unwrap()).unwrap();
        let permuted = permute_systems(&e, &["a", "c", "b"]).unwrap();
        assert_eq!(permuted, via_tensor);
        assert!(matches!(embed_identity(&a, &lab("a", 2), 0), Err(Error::DuplicateLabel(_))));
    }

    #[test]
    fn permute_swap_and_identity() {
        let a = diag("a", &[1.0, 2.0]);
        let b = diag("b", &[3.0, 5.0, 7.0]);
        let ab = tensor(&a, &b).unwrap();
        let ba = tensor(&b, &a).unwrap();
        assert_eq!(permute_systems(&ab, &["b", "a"]).unwrap(), ba);
        assert_eq!(permute_systems(&ab, &["a", "b"]).unwrap(), ab);
        assert!(matches!(permute_systems(&ab, &["a", "a"]), Err(Error::BadPermutation(_))));
        assert!(matches!(permute_systems(&ab, &["a"]), Err(Error::BadPermutation(_))));
    }

    #[test]
    fn eig_examples() {
        let i3 = LabeledOperator::<f64>::identity(vec![lab("a", 3)]).unwrap();
        let e = eig_hermitian(&i3).unwrap();
        for v in e.values {
            assert_abs_diff_eq!(v, 1.0, epsilon = 1e-14);
        }
        let e = eig_hermitian(&sigma_x("a")).unwrap();
        assert_abs_diff_eq!(e.values[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(e.values[1], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!((e.reconstruct() - sigma_x("a").data()).norm(), 0.0, epsilon = 1e-14);

        let nh = LabeledOperator::<f64>::from_real(vec![lab("a", 2)], &DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]))
            .unwrap();
        assert!(matches!(eig_hermitian(&nh), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn psd_examples() {
        let i = LabeledOperator::<f64>::identity(vec![lab("a", 2)]).unwrap();
        let p0 = diag("a", &[1.0, 0.0]);
        assert!(is_psd(&i.sub(&p0).unwrap(), 1e-12).unwrap());
        assert!(!is_psd(&diag("a", &[1.0, -1e-3]), 1e-8).unwrap());
    }

    #[test]
    fn hs_inner_examples() {
        let i = LabeledOperator::<f64>::identity(vec![lab("a", 3)]).unwrap();
        assert_abs_diff_eq!(hs_inner(&i, &i).unwrap().re, 3.0);
        let sz = diag("a", &[1.0, -1.0]);
        assert_abs_diff_eq!(hs_inner(&sigma_x("a"), &sz).unwrap().norm(), 0.0);
        assert!(matches!(hs_inner(&sz, &diag("b", &[1.0, 1.0])), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn single_precision_algebra() {
        let a = LabeledOperator::<f32>::identity(vec![lab("a", 2)]).unwrap();
        let b = LabeledOperator::<f32>::identity(vec![lab("b", 3)]).unwrap();
        let t = tensor(&a, &b).unwrap();
        let r = partial_trace(&t, &["a"]).unwrap();
        assert_eq!(r.trace_re(), 6.0f32);
        assert!(is_psd(&r, 1e-5).unwrap());
    }

    #[test]
    fn dimension_cap_is_enforced() {
        let big = vec![lab("a", 64), lab("b", 65)];
        assert!(matches!(LabeledOperator::<f64>::identity(big), Err(Error::DimensionCap { .. })));
    }
}
