//! Dense complex linear algebra at the small dimensions used throughout the
//! toolkit (states up to d = 8, process matrices up to 64 x 64), plus the
//! orthogonal Hermitian operator bases used for process matrices.

use std::ops::Mul;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Tolerance for "this state is normalized".
pub const NORM_TOL: f64 = 1e-12;
/// Tolerance for "this operator is Hermitian".
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Tolerance for "this operator is unitary".
pub const UNITARY_TOL: f64 = 1e-10;
/// Smallest eigenvalue still accepted as positive semidefinite.
pub const PSD_TOL: f64 = 1e-10;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// A pure state |psi> in a d-dimensional Hilbert space.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amps: DVector<C64>,
}

impl StateVector {
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::UnsupportedDimension(0));
        }
        Ok(Self {
            amps: DVector::from_vec(amplitudes),
        })
    }

    pub fn from_dvector(amps: DVector<C64>) -> Self {
        Self { amps }
    }

    /// Computational basis vector e_index.
    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::IndexOutOfRange(format!("basis index {index} in dimension {dim}")));
        }
        let mut amps = DVector::zeros(dim);
        amps[index] = C64::new(1.0, 0.0);
        Ok(Self { amps })
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        self.amps.as_slice()
    }

    pub fn as_dvector(&self) -> &DVector<C64> {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() < NORM_TOL
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm_sqr().sqrt();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::NotNormalized(n * n));
        }
        Ok(Self {
            amps: self.amps.map(|a| a / n),
        })
    }

    /// Removes the global phase so that the first nonzero amplitude is real
    /// and nonnegative.
    pub fn with_canonical_phase(&self) -> Self {
        let lead = self
            .amps
            .iter()
            .find(|a| a.norm() > 1e-12)
            .copied()
            .unwrap_or(C64::new(1.0, 0.0));
        let phase = lead.conj() / lead.norm();
        let mut amps = self.amps.map(|a| a * phase);
        // the leading amplitude is real up to rounding; make it exactly so
        if let Some(first) = amps.iter_mut().find(|a| a.norm() > 1e-12) {
            *first = C64::new(first.norm(), 0.0);
        }
        Self { amps }
    }

    /// |psi><psi|
    pub fn projector(&self) -> Operator {
        Operator {
            m: &self.amps * self.amps.adjoint(),
        }
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self {
            amps: self.amps.map(|a| a * factor),
        }
    }

    /// Tensor product |self> (x) |other>.
    pub fn kron(&self, other: &StateVector) -> StateVector {
        Self {
            amps: self.amps.kronecker(&other.amps),
        }
    }

    /// The orthogonal complement of a qubit state, (-b*, a*).
    pub fn qubit_complement(&self) -> Result<StateVector> {
        if self.dim() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                actual: self.dim(),
            });
        }
        let a = self.amps[0];
        let b = self.amps[1];
        Ok(StateVector::new(vec![-b.conj(), a.conj()])?.with_canonical_phase())
    }
}

fn check_dims(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::DimensionMismatch { expected, actual });
    }
    Ok(())
}

/// <a|b>, conjugate-linear in the first argument.
pub fn inner(a: &StateVector, b: &StateVector) -> Result<C64> {
    check_dims(a.dim(), b.dim())?;
    Ok(a.amps.dotc(&b.amps))
}

/// |<projector|state>|^2 for two normalized states.
pub fn born_probability(state: &StateVector, projector_state: &StateVector) -> Result<f64> {
    check_dims(state.dim(), projector_state.dim())?;
    for s in [state, projector_state] {
        if !s.is_normalized() {
            return Err(Error::NotNormalized(s.norm_sqr()));
        }
    }
    Ok(inner(projector_state, state)?.norm_sqr().min(1.0))
}

/// A square complex matrix acting on a d-dimensional space.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    m: DMatrix<C64>,
}

impl Operator {
    pub fn from_matrix(m: DMatrix<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::Malformed(format!(
                "operator must be square and nonempty, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        Ok(Self { m })
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Self {
            m: DMatrix::from_fn(dim, dim, f),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            m: DMatrix::identity(dim, dim),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            m: DMatrix::zeros(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.m
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.m[(row, col)]
    }

    pub fn adjoint(&self) -> Operator {
        Self { m: self.m.adjoint() }
    }

    pub fn trace(&self) -> C64 {
        self.m.trace()
    }

    pub fn scale(&self, factor: C64) -> Operator {
        Self { m: &self.m * factor }
    }

    pub fn add(&self, other: &Operator) -> Result<Operator> {
        check_dims(self.dim(), other.dim())?;
        Ok(Self { m: &self.m + &other.m })
    }

    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        check_dims(self.dim(), state.dim())?;
        Ok(StateVector::from_dvector(&self.m * state.as_dvector()))
    }

    pub fn kron(&self, other: &Operator) -> Operator {
        Self {
            m: self.m.kronecker(&other.m),
        }
    }

    /// Max entrywise |M - M^dagger|.
    pub fn hermitian_deviation(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                worst = worst.max((self.m[(i, j)] - self.m[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian_deviation() < HERMITIAN_TOL
    }

    /// Max entrywise |M^dagger M - I|.
    pub fn unitary_deviation(&self) -> f64 {
        let p = self.m.adjoint() * &self.m;
        let d = self.dim();
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((p[(i, j)] - target).norm());
            }
        }
        worst
    }

    pub fn is_unitary(&self) -> bool {
        self.unitary_deviation() < UNITARY_TOL
    }

    /// Largest entrywise distance to another operator.
    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        self.m
            .iter()
            .zip(other.m.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

impl Mul for &Operator {
    type Output = Operator;

    fn mul(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim(), rhs.dim(), "operator dimension mismatch");
        Operator { m: &self.m * &rhs.m }
    }
}

/// A mixed state: Hermitian, unit trace, positive semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    m: DMatrix<C64>,
}

impl DensityMatrix {
    /// Validates the Hermitian, trace and positivity invariants.
    pub fn new(op: Operator) -> Result<Self> {
        let dev = op.hermitian_deviation();
        if dev >= HERMITIAN_TOL {
            return Err(Error::NotHermitian(dev));
        }
        let tr = op.trace();
        if (tr.re - 1.0).abs() > 1e-12 || tr.im.abs() > 1e-12 {
            return Err(Error::InvalidDensity(format!("trace {tr}")));
        }
        let min = eig_min_hermitian(&op)?;
        if min < -PSD_TOL {
            return Err(Error::InvalidDensity(format!("smallest eigenvalue {min:e}")));
        }
        Ok(Self { m: op.m })
    }

    pub(crate) fn from_matrix_unchecked(m: DMatrix<C64>) -> Self {
        Self { m }
    }

    pub fn from_pure(state: &StateVector) -> Result<Self> {
        if !state.is_normalized() {
            return Err(Error::NotNormalized(state.norm_sqr()));
        }
        Ok(Self {
            m: state.projector().m,
        })
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            m: DMatrix::identity(dim, dim) / C64::new(dim as f64, 0.0),
        }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.m
    }

    pub fn as_operator(&self) -> Operator {
        Operator { m: self.m.clone() }
    }

    pub fn trace(&self) -> C64 {
        self.m.trace()
    }

    /// Re Tr(rho O).
    pub fn expectation(&self, op: &Operator) -> Result<f64> {
        check_dims(self.dim(), op.dim())?;
        Ok((&self.m * op.matrix()).trace().re)
    }

    /// <phi|rho|phi>
    pub fn overlap(&self, phi: &StateVector) -> Result<f64> {
        check_dims(self.dim(), phi.dim())?;
        let v = phi.as_dvector();
        Ok(v.dotc(&(&self.m * v)).re)
    }

    pub fn kron(&self, other: &DensityMatrix) -> DensityMatrix {
        Self {
            m: self.m.kronecker(&other.m),
        }
    }

    /// Partial trace over the second factor of a `dim_a * dim_b` system.
    pub fn partial_trace_second(&self, dim_a: usize, dim_b: usize) -> Result<DensityMatrix> {
        check_dims(dim_a * dim_b, self.dim())?;
        let m = DMatrix::from_fn(dim_a, dim_a, |i, j| {
            (0..dim_b).map(|k| self.m[(i * dim_b + k, j * dim_b + k)]).sum()
        });
        Ok(Self { m })
    }

    /// Partial trace over the first factor of a `dim_a * dim_b` system.
    pub fn partial_trace_first(&self, dim_a: usize, dim_b: usize) -> Result<DensityMatrix> {
        check_dims(dim_a * dim_b, self.dim())?;
        let m = DMatrix::from_fn(dim_b, dim_b, |i, j| {
            (0..dim_a).map(|k| self.m[(k * dim_b + i, k * dim_b + j)]).sum()
        });
        Ok(Self { m })
    }
}

/// An orthogonal basis of d^2 Hermitian operators with Tr(B_i B_j) = 2 delta_ij
/// and B_0 proportional to the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianBasis {
    dim: usize,
    elements: Vec<Operator>,
    labels: Vec<String>,
}

impl HermitianBasis {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[Operator] {
        &self.elements
    }

    pub fn element(&self, i: usize) -> &Operator {
        &self.elements[i]
    }

    /// Short names of the elements, in basis order.
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Coefficients c_i = Tr(B_i M) / 2, so that M = sum_i c_i B_i.
    pub fn expand(&self, m: &Operator) -> Result<Vec<C64>> {
        check_dims(self.dim, m.dim())?;
        Ok(self
            .elements
            .iter()
            .map(|b| (b.matrix() * m.matrix()).trace() / 2.0)
            .collect())
    }

    /// Gram matrix Tr(B_i B_j).
    pub fn gram(&self) -> DMatrix<C64> {
        let n = self.len();
        DMatrix::from_fn(n, n, |i, j| {
            (self.elements[i].matrix() * self.elements[j].matrix()).trace()
        })
    }
}

/// Identity plus generalized Gell-Mann matrices, normalized to
/// Tr(B_i B_j) = 2 delta_ij. Order: B_0 = sqrt(2/d) I, then the symmetric
/// off-diagonal family over (j, k) with j < k in lexicographic order, then
/// the antisymmetric family in the same order, then the diagonal family.
/// For d = 2 this is {I, X, Y, Z}.
pub fn hermitian_basis(d: usize) -> Result<HermitianBasis> {
    if d < 2 {
        return Err(Error::UnsupportedDimension(d));
    }
    let mut elements = Vec::with_capacity(d * d);
    let mut labels = Vec::with_capacity(d * d);
    elements.push(Operator::identity(d).scale(c((2.0 / d as f64).sqrt(), 0.0)));
    labels.push("I".to_string());

    let pairs: Vec<(usize, usize)> = (0..d)
        .flat_map(|j| ((j + 1)..d).map(move |k| (j, k)))
        .collect();
    for &(j, k) in &pairs {
        let mut op = Operator::zeros(d);
        op.m[(j, k)] = c(1.0, 0.0);
        op.m[(k, j)] = c(1.0, 0.0);
        elements.push(op);
        labels.push(format!("S{j}{k}"));
    }
    for &(j, k) in &pairs {
        let mut op = Operator::zeros(d);
        op.m[(j, k)] = c(0.0, -1.0);
        op.m[(k, j)] = c(0.0, 1.0);
        elements.push(op);
        labels.push(format!("A{j}{k}"));
    }
    for l in 1..d {
        let norm = (2.0 / (l * (l + 1)) as f64).sqrt();
        let mut op = Operator::zeros(d);
        for m in 0..l {
            op.m[(m, m)] = c(norm, 0.0);
        }
        op.m[(l, l)] = c(-(l as f64) * norm, 0.0);
        elements.push(op);
        labels.push(format!("D{l}"));
    }
    if d == 2 {
        labels = ["I", "X", "Y", "Z"].iter().map(|s| s.to_string()).collect();
    }
    Ok(HermitianBasis {
        dim: d,
        elements,
        labels,
    })
}

/// Eigen-decomposition of a Hermitian operator: ascending eigenvalues and the
/// matching orthonormal eigenvectors as columns.
pub fn hermitian_eigen(m: &Operator) -> Result<(Vec<f64>, DMatrix<C64>)> {
    let dev = m.hermitian_deviation();
    let scale = m.matrix().iter().map(|z| z.norm()).fold(1.0, f64::max);
    if dev > 1e-9 * scale {
        return Err(Error::NotHermitian(dev));
    }
    // symmetrize away rounding before handing to the solver
    let h = (m.matrix() + m.matrix().adjoint()) / C64::new(2.0, 0.0);
    let eig = nalgebra::SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(m.dim(), m.dim(), |r, k| eig.eigenvectors[(r, order[k])]);
    Ok((values, vectors))
}

/// Smallest eigenvalue of a Hermitian operator.
pub fn eig_min_hermitian(m: &Operator) -> Result<f64> {
    let (values, _) = hermitian_eigen(m)?;
    Ok(values[0])
}

/// Applies `f` to the spectrum of a Hermitian operator.
pub fn hermitian_function(m: &Operator, f: impl Fn(f64) -> f64) -> Result<Operator> {
    let (values, vecs) = hermitian_eigen(m)?;
    let diag = DMatrix::from_diagonal(&DVector::from_iterator(
        values.len(),
        values.iter().map(|&v| c(f(v), 0.0)),
    ));
    Ok(Operator {
        m: &vecs * diag * vecs.adjoint(),
    })
}

/// exp(-i theta G) for Hermitian G.
pub fn unitary_exp(generator: &Operator, theta: f64) -> Result<Operator> {
    let (values, vecs) = hermitian_eigen(generator)?;
    let diag = DMatrix::from_diagonal(&DVector::from_iterator(
        values.len(),
        values.iter().map(|&v| C64::from_polar(1.0, -theta * v)),
    ));
    Ok(Operator {
        m: &vecs * diag * vecs.adjoint(),
    })
}
