//! Dense complex vectors, operators and tensor products for small Hilbert spaces.
//!
//! Everything in this module works with explicit matrices over `C64`. State
//! vectors are normalized at construction, unitaries and projectors carry
//! their defining invariant, and composite spaces are built with the Kronecker
//! product. Composite indices are big-endian: for `a ⊗ b` the index of the
//! first factor varies slowest, so entry `i·dim(b) + j` of the product holds
//! `a[i]·b[j]`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

/// Complex double-precision scalar used throughout the crate.
pub type C64 = Complex64;

/// Default tolerance for normalization, unitarity and projector checks.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Residual norm below which a candidate column counts as already spanned
/// during unitary completion.
const COMPLETION_RESIDUAL_FLOOR: f64 = 1e-8;

/// Modulus below which an entry is ignored when fixing a column's phase.
const PHASE_ENTRY_FLOOR: f64 = 1e-12;

const ONE: C64 = C64::new(1.0, 0.0);
const ZERO: C64 = C64::new(0.0, 0.0);

#[derive(Debug, Error)]
pub enum TensorError {
    #[error("vectors and operators must have dimension at least one")]
    Empty,
    #[error("entry {index} is not finite")]
    NonFinite { index: usize },
    #[error("vector norm {norm} differs from one by more than {tol:e}")]
    NotNormalized { norm: f64, tol: f64 },
    #[error("vector norm {norm:e} is too small to normalize")]
    NormTooSmall { norm: f64 },
    #[error("operator is not square: {rows} rows, {cols} columns")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("max entry of |U\u{2020}U \u{2212} I| is {deviation:e}, above {tol:e}")]
    NotUnitary { deviation: f64, tol: f64 },
    #[error("operator deviates from a projector by {deviation:e}, above {tol:e}")]
    NotProjector { deviation: f64, tol: f64 },
    #[error("column index {index} is outside a space of dimension {dim}")]
    ColumnIndexOutOfRange { index: usize, dim: usize },
    #[error("column index {index} supplied twice")]
    DuplicateColumnIndex { index: usize },
    #[error("{count} columns supplied for a space of dimension {dim}")]
    TooManyColumns { count: usize, dim: usize },
    #[error("supplied columns deviate from orthonormality by {deviation:e}, above {tol:e}")]
    ColumnsNotOrthonormal { deviation: f64, tol: f64 },
    #[error("dimension {dim} does not factor as system \u{00d7} {m1} \u{00d7} {m2}")]
    BadFactorization { dim: usize, m1: usize, m2: usize },
}

fn check_finite_slice(v: &[C64]) -> Result<(), TensorError> {
    for (index, z) in v.iter().enumerate() {
        if !z.re.is_finite() || !z.im.is_finite() {
            return Err(TensorError::NonFinite { index });
        }
    }
    Ok(())
}

/// A normalized vector in a finite-dimensional complex Hilbert space.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    pub(crate) data: DVector<C64>,
}

impl StateVector {
    /// Builds a state from amplitudes, requiring unit norm within
    /// [`DEFAULT_TOL`].
    pub fn new(amplitudes: Vec<C64>) -> Result<Self, TensorError> {
        Self::with_tolerance(amplitudes, DEFAULT_TOL)
    }

    /// Builds a state from amplitudes, requiring `|‖v‖ − 1| ≤ tol`.
    pub fn with_tolerance(amplitudes: Vec<C64>, tol: f64) -> Result<Self, TensorError> {
        if amplitudes.is_empty() {
            return Err(TensorError::Empty);
        }
        check_finite_slice(&amplitudes)?;
        let data = DVector::from_vec(amplitudes);
        let norm = data.norm();
        if (norm - 1.0).abs() > tol {
            return Err(TensorError::NotNormalized { norm, tol });
        }
        Ok(Self { data })
    }

    /// Scales an arbitrary nonzero vector to unit norm.
    pub fn normalized(amplitudes: Vec<C64>) -> Result<Self, TensorError> {
        if amplitudes.is_empty() {
            return Err(TensorError::Empty);
        }
        check_finite_slice(&amplitudes)?;
        let mut data = DVector::from_vec(amplitudes);
        let norm = data.norm();
        if norm < 1e-12 {
            return Err(TensorError::NormTooSmall { norm });
        }
        data /= C64::new(norm, 0.0);
        Ok(Self { data })
    }

    /// The computational basis state ∣index⟩ in dimension `dim`.
    ///
    /// Panics if `dim` is zero or `index` is out of range.
    pub fn basis(dim: usize, index: usize) -> Self {
        assert!(dim > 0, "basis state needs a positive dimension");
        assert!(index < dim, "basis index {index} out of range for dimension {dim}");
        Self {
            data: DVector::from_fn(dim, |i, _| if i == index { ONE } else { ZERO }),
        }
    }

    /// The uniform superposition over all basis states.
    pub fn uniform(dim: usize) -> Self {
        assert!(dim > 0, "uniform state needs a positive dimension");
        let amp = C64::new(1.0 / (dim as f64).sqrt(), 0.0);
        Self {
            data: DVector::from_element(dim, amp),
        }
    }

    pub(crate) fn from_dvector(data: DVector<C64>) -> Self {
        Self { data }
    }

    pub fn dim(&self) -> usize {
        self.data.len()
    }

    pub fn amplitude(&self, index: usize) -> C64 {
        self.data[index]
    }

    pub fn amplitudes(&self) -> &[C64] {
        self.data.as_slice()
    }

    pub fn norm(&self) -> f64 {
        self.data.norm()
    }

    /// Kronecker product `self ⊗ other`; the left factor's index varies
    /// slowest.
    pub fn tensor(&self, other: &StateVector) -> StateVector {
        StateVector {
            data: self.data.kronecker(&other.data),
        }
    }

    /// Inner product ⟨self∣other⟩, conjugate-linear in `self`.
    ///
    /// Panics on dimension mismatch.
    pub fn inner(&self, other: &StateVector) -> C64 {
        assert_eq!(self.dim(), other.dim(), "inner product needs equal dimensions");
        self.data.dotc(&other.data)
    }

    /// The modulus ∣⟨self∣other⟩∣.
    pub fn overlap(&self, other: &StateVector) -> f64 {
        self.inner(other).norm()
    }
}

/// Result of applying an operator to a state: the raw image vector together
/// with its squared norm, before any renormalization.
#[derive(Clone, Debug)]
pub struct Applied {
    vector: DVector<C64>,
    norm_sqr: f64,
}

impl Applied {
    pub(crate) fn from_dvector(vector: DVector<C64>) -> Self {
        let norm_sqr = vector.norm_squared();
        Applied { vector, norm_sqr }
    }

    pub fn amplitudes(&self) -> &[C64] {
        self.vector.as_slice()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.norm_sqr
    }

    /// Rescales the image to unit norm; `None` when the image vanishes.
    pub fn normalize(&self) -> Option<StateVector> {
        if self.norm_sqr <= 0.0 {
            return None;
        }
        let scale = C64::new(1.0 / self.norm_sqr.sqrt(), 0.0);
        Some(StateVector {
            data: &self.vector * scale,
        })
    }

    pub(crate) fn into_dvector(self) -> DVector<C64> {
        self.vector
    }
}

/// A square complex matrix acting on a single Hilbert space.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    pub(crate) data: DMatrix<C64>,
}

impl Operator {
    /// Builds an operator from rows; every row must have the same length as
    /// the number of rows.
    pub fn new(rows: Vec<Vec<C64>>) -> Result<Self, TensorError> {
        let n = rows.len();
        if n == 0 {
            return Err(TensorError::Empty);
        }
        for row in &rows {
            if row.len() != n {
                return Err(TensorError::NotSquare { rows: n, cols: row.len() });
            }
            check_finite_slice(row)?;
        }
        let data = DMatrix::from_row_iterator(n, n, rows.into_iter().flatten());
        Ok(Self { data })
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        assert!(dim > 0, "operator needs a positive dimension");
        let mut f = f;
        Self {
            data: DMatrix::from_fn(dim, dim, |i, j| f(i, j)),
        }
    }

    pub fn identity(dim: usize) -> Self {
        assert!(dim > 0, "operator needs a positive dimension");
        Self {
            data: DMatrix::identity(dim, dim),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim > 0, "operator needs a positive dimension");
        Self {
            data: DMatrix::zeros(dim, dim),
        }
    }

    /// The rank-one operator ∣ket⟩⟨bra∣.
    ///
    /// Panics on dimension mismatch.
    pub fn outer(ket: &StateVector, bra: &StateVector) -> Self {
        assert_eq!(ket.dim(), bra.dim(), "outer product needs equal dimensions");
        let bra_conj = bra.data.map(|z| z.conj()).transpose();
        Self {
            data: &ket.data * bra_conj,
        }
    }

    pub(crate) fn from_dmatrix(data: DMatrix<C64>) -> Self {
        debug_assert_eq!(data.nrows(), data.ncols());
        Self { data }
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn entry(&self, row: usize, col: usize) -> C64 {
        self.data[(row, col)]
    }

    pub fn adjoint(&self) -> Operator {
        Operator {
            data: self.data.adjoint(),
        }
    }

    /// Kronecker product `self ⊗ other`; the left factor's index varies
    /// slowest.
    pub fn tensor(&self, other: &Operator) -> Operator {
        Operator {
            data: self.data.kronecker(&other.data),
        }
    }

    pub fn scale(&self, factor: C64) -> Operator {
        Operator {
            data: &self.data * factor,
        }
    }

    /// Applies the operator to a state, returning the unnormalized image.
    pub fn apply(&self, state: &StateVector) -> Result<Applied, TensorError> {
        if self.dim() != state.dim() {
            return Err(TensorError::DimensionMismatch {
                left: self.dim(),
                right: state.dim(),
            });
        }
        Ok(Applied::from_dvector(&self.data * &state.data))
    }

    pub(crate) fn apply_raw(&self, vector: &DVector<C64>) -> DVector<C64> {
        &self.data * vector
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, z| acc.max(z.norm()))
    }

    /// Largest entrywise difference ∣self − other∣.
    ///
    /// Panics on dimension mismatch.
    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        assert_eq!(self.dim(), other.dim(), "difference needs equal dimensions");
        let mut max = 0.0f64;
        for (a, b) in self.data.iter().zip(other.data.iter()) {
            max = max.max((a - b).norm());
        }
        max
    }

    /// Largest entry of ∣M − M†∣.
    pub fn hermitian_deviation(&self) -> f64 {
        self.max_abs_diff(&self.adjoint())
    }

    /// Largest entry of ∣M² − M∣.
    pub fn idempotency_deviation(&self) -> f64 {
        let squared = Operator {
            data: &self.data * &self.data,
        };
        squared.max_abs_diff(self)
    }

    /// How far the operator is from an orthogonal projector: the worse of
    /// the Hermiticity and idempotency deviations.
    pub fn projector_deviation(&self) -> f64 {
        self.hermitian_deviation().max(self.idempotency_deviation())
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_deviation() <= tol
    }
}

impl std::ops::Add<&Operator> for &Operator {
    type Output = Operator;

    fn add(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim(), rhs.dim(), "sum needs equal dimensions");
        Operator {
            data: &self.data + &rhs.data,
        }
    }
}

impl std::ops::Sub<&Operator> for &Operator {
    type Output = Operator;

    fn sub(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim(), rhs.dim(), "difference needs equal dimensions");
        Operator {
            data: &self.data - &rhs.data,
        }
    }
}

impl std::ops::Mul<&Operator> for &Operator {
    type Output = Operator;

    fn mul(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim(), rhs.dim(), "product needs equal dimensions");
        Operator {
            data: &self.data * &rhs.data,
        }
    }
}

/// A square matrix certified (or declared) to satisfy U†U = I.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitaryOperator {
    op: Operator,
}

impl UnitaryOperator {
    /// Certifies unitarity within [`DEFAULT_TOL`].
    pub fn new(op: Operator) -> Result<Self, TensorError> {
        Self::with_tolerance(op, DEFAULT_TOL)
    }

    /// Certifies `max |U†U − I| ≤ tol`.
    pub fn with_tolerance(op: Operator, tol: f64) -> Result<Self, TensorError> {
        let unchecked = Self { op };
        let deviation = unchecked.unitarity_deviation();
        if deviation > tol {
            return Err(TensorError::NotUnitary { deviation, tol });
        }
        Ok(unchecked)
    }

    /// Wraps a matrix without checking unitarity. The caller takes over the
    /// invariant; [`Self::unitarity_deviation`] reports how far off it is.
    pub fn new_unchecked(op: Operator) -> Self {
        Self { op }
    }

    /// Largest entry of ∣U†U − I∣.
    pub fn unitarity_deviation(&self) -> f64 {
        let gram = &self.op.adjoint() * &self.op;
        gram.max_abs_diff(&Operator::identity(self.op.dim()))
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn entry(&self, row: usize, col: usize) -> C64 {
        self.op.entry(row, col)
    }

    pub fn as_operator(&self) -> &Operator {
        &self.op
    }

    pub fn into_operator(self) -> Operator {
        self.op
    }

    pub fn adjoint(&self) -> UnitaryOperator {
        UnitaryOperator {
            op: self.op.adjoint(),
        }
    }

    /// Kronecker product of unitaries, itself unitary.
    pub fn tensor(&self, other: &UnitaryOperator) -> UnitaryOperator {
        UnitaryOperator {
            op: self.op.tensor(&other.op),
        }
    }

    pub fn apply(&self, state: &StateVector) -> Result<Applied, TensorError> {
        self.op.apply(state)
    }
}

/// A Hermitian idempotent: P = P† = P².
#[derive(Clone, Debug, PartialEq)]
pub struct Projector {
    op: Operator,
}

impl Projector {
    /// Certifies the projector property within [`DEFAULT_TOL`].
    pub fn new(op: Operator) -> Result<Self, TensorError> {
        Self::with_tolerance(op, DEFAULT_TOL)
    }

    /// Certifies `max(|P − P†|, |P² − P|) ≤ tol`.
    pub fn with_tolerance(op: Operator, tol: f64) -> Result<Self, TensorError> {
        let deviation = op.projector_deviation();
        if deviation > tol {
            return Err(TensorError::NotProjector { deviation, tol });
        }
        Ok(Self { op })
    }

    /// The rank-one projector ∣state⟩⟨state∣ onto a normalized state.
    pub fn from_state(state: &StateVector) -> Self {
        Self {
            op: Operator::outer(state, state),
        }
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn as_operator(&self) -> &Operator {
        &self.op
    }

    pub fn apply(&self, state: &StateVector) -> Result<Applied, TensorError> {
        self.op.apply(state)
    }
}

/// Extends a partial isometry to a full unitary.
///
/// Each `(index, column)` pair pins a column of the result; the supplied
/// columns must be pairwise orthonormal within [`DEFAULT_TOL`]. The free
/// columns are filled deterministically: canonical basis vectors are tried in
/// index order and orthogonalized by modified Gram–Schmidt against everything
/// accepted so far, candidates with residual norm below 1e-8 are skipped, and
/// each surviving column is rescaled so its first entry of modulus above
/// 1e-12 is real and positive. Free column indices are filled in increasing
/// order, so the result is a pure function of the input.
pub fn complete_isometry_to_unitary(
    columns: &[(usize, StateVector)],
    total_dim: usize,
) -> Result<UnitaryOperator, TensorError> {
    let raw: Vec<(usize, DVector<C64>)> = columns
        .iter()
        .map(|(i, v)| (*i, v.data.clone()))
        .collect();
    complete_columns(&raw, total_dim, DEFAULT_TOL)
}

pub(crate) fn complete_columns(
    supplied: &[(usize, DVector<C64>)],
    total_dim: usize,
    tol: f64,
) -> Result<UnitaryOperator, TensorError> {
    if total_dim == 0 {
        return Err(TensorError::Empty);
    }
    if supplied.len() > total_dim {
        return Err(TensorError::TooManyColumns {
            count: supplied.len(),
            dim: total_dim,
        });
    }
    let mut taken = vec![false; total_dim];
    for (index, column) in supplied {
        if *index >= total_dim {
            return Err(TensorError::ColumnIndexOutOfRange {
                index: *index,
                dim: total_dim,
            });
        }
        if taken[*index] {
            return Err(TensorError::DuplicateColumnIndex { index: *index });
        }
        taken[*index] = true;
        if column.len() != total_dim {
            return Err(TensorError::DimensionMismatch {
                left: column.len(),
                right: total_dim,
            });
        }
    }

    let mut max_dev = 0.0f64;
    for (i, (_, a)) in supplied.iter().enumerate() {
        for (_, b) in supplied.iter().skip(i) {
            let gram = a.dotc(b);
            let target = if std::ptr::eq(a, b) { ONE } else { ZERO };
            max_dev = max_dev.max((gram - target).norm());
        }
    }
    if max_dev > tol {
        return Err(TensorError::ColumnsNotOrthonormal {
            deviation: max_dev,
            tol,
        });
    }

    let free_slots: Vec<usize> = (0..total_dim).filter(|i| !taken[*i]).collect();
    let mut accepted: Vec<DVector<C64>> = supplied.iter().map(|(_, c)| c.clone()).collect();
    let mut placed: Vec<(usize, DVector<C64>)> = supplied.to_vec();
    let mut next_slot = 0;

    for k in 0..total_dim {
        if next_slot == free_slots.len() {
            break;
        }
        let mut cand: DVector<C64> = DVector::from_fn(total_dim, |i, _| if i == k { ONE } else { ZERO });
        for a in &accepted {
            let coeff = a.dotc(&cand);
            cand.axpy(-coeff, a, ONE);
        }
        let residual = cand.norm();
        if residual < COMPLETION_RESIDUAL_FLOOR {
            continue;
        }
        cand /= C64::new(residual, 0.0);
        // A second orthogonalization pass keeps the column orthogonal to
        // machine precision even when the first residual was small.
        for a in &accepted {
            let coeff = a.dotc(&cand);
            cand.axpy(-coeff, a, ONE);
        }
        cand /= C64::new(cand.norm(), 0.0);
        let pivot = cand
            .iter()
            .position(|z| z.norm() > PHASE_ENTRY_FLOOR)
            .expect("a unit vector has an entry above the phase floor");
        let z = cand[pivot];
        cand *= z.conj() / C64::new(z.norm(), 0.0);

        placed.push((free_slots[next_slot], cand.clone()));
        next_slot += 1;
        accepted.push(cand);
    }
    assert_eq!(
        next_slot,
        free_slots.len(),
        "canonical basis exhausted before the unitary was complete"
    );

    let mut matrix = DMatrix::zeros(total_dim, total_dim);
    for (index, column) in &placed {
        matrix.set_column(*index, column);
    }
    UnitaryOperator::with_tolerance(Operator { data: matrix }, tol.max(DEFAULT_TOL))
}

/// Contracts a composite observable against fixed ancilla states.
///
/// For a unitary `u` on a space of dimension `d·m₁·m₂` (system slowest) and
/// an observable `O` on that space, returns the `d × d` matrix with entries
/// `⟨i, ξ₁, ξ₂∣ U† O U ∣j, ξ₁, ξ₂⟩`. When `O` is Hermitian the result is
/// Hermitian up to rounding.
pub fn partial_meter_contraction(
    u: &UnitaryOperator,
    observable: &Operator,
    xi1: &StateVector,
    xi2: &StateVector,
) -> Result<Operator, TensorError> {
    let total = u.dim();
    if observable.dim() != total {
        return Err(TensorError::DimensionMismatch {
            left: observable.dim(),
            right: total,
        });
    }
    let m1 = xi1.dim();
    let m2 = xi2.dim();
    let block = m1 * m2;
    if block == 0 || total % block != 0 {
        return Err(TensorError::BadFactorization {
            dim: total,
            m1,
            m2,
        });
    }
    let d = total / block;

    let xi = xi1.tensor(xi2);
    let mut images: Vec<DVector<C64>> = Vec::with_capacity(d);
    for s in 0..d {
        let mut input = DVector::zeros(total);
        for (k, amp) in xi.amplitudes().iter().enumerate() {
            input[s * block + k] = *amp;
        }
        images.push(u.as_operator().apply_raw(&input));
    }
    let weighted: Vec<DVector<C64>> = images
        .iter()
        .map(|v| observable.apply_raw(v))
        .collect();

    let data = DMatrix::from_fn(d, d, |i, j| images[i].dotc(&weighted[j]));
    Ok(Operator { data })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn r(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn basis_states_are_one_hot() {
        let e1 = StateVector::basis(3, 1);
        assert_eq!(e1.amplitudes(), &[r(0.0), r(1.0), r(0.0)]);
        assert!((e1.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn uniform_state_has_equal_amplitudes() {
        let u = StateVector::uniform(4);
        for amp in u.amplitudes() {
            assert!((amp - r(0.5)).norm() < 1e-15);
        }
    }

    #[test]
    fn construction_rejects_unnormalized_input() {
        let err = StateVector::new(vec![r(1.0), r(1.0)]).unwrap_err();
        assert!(matches!(err, TensorError::NotNormalized { .. }));
    }

    #[test]
    fn construction_rejects_non_finite_input() {
        let err = StateVector::new(vec![c(f64::NAN, 0.0)]).unwrap_err();
        assert!(matches!(err, TensorError::NonFinite { index: 0 }));
    }

    #[test]
    fn normalized_scales_to_unit_norm() {
        let v = StateVector::normalized(vec![r(3.0), c(0.0, 4.0)]).unwrap();
        assert!((v.norm() - 1.0).abs() < 1e-15);
        assert!((v.amplitude(0) - r(0.6)).norm() < 1e-15);
        assert!((v.amplitude(1) - c(0.0, 0.8)).norm() < 1e-15);
    }

    #[test]
    fn normalized_rejects_zero_vector() {
        let err = StateVector::normalized(vec![r(0.0), r(0.0)]).unwrap_err();
        assert!(matches!(err, TensorError::NormTooSmall { .. }));
    }

    // (∣0⟩ + ∣1⟩)/√2 ⊗ ∣1⟩ lives at composite indices 0·2+1 and 1·2+1.
    #[test]
    fn tensor_product_uses_big_endian_indexing() {
        let plus = StateVector::new(vec![r(1.0 / 2f64.sqrt()), r(1.0 / 2f64.sqrt())]).unwrap();
        let one = StateVector::basis(2, 1);
        let prod = plus.tensor(&one);
        let s = 1.0 / 2f64.sqrt();
        assert_eq!(prod.dim(), 4);
        assert!((prod.amplitude(0) - r(0.0)).norm() < 1e-15);
        assert!((prod.amplitude(1) - r(s)).norm() < 1e-15);
        assert!((prod.amplitude(2) - r(0.0)).norm() < 1e-15);
        assert!((prod.amplitude(3) - r(s)).norm() < 1e-15);
    }

    #[test]
    fn inner_product_is_conjugate_linear_in_the_left_slot() {
        let a = StateVector::new(vec![c(0.0, 1.0), r(0.0)]).unwrap();
        let b = StateVector::basis(2, 0);
        // ⟨ia∣b⟩ = −i·⟨a∣b⟩ for a = ∣0⟩.
        assert!((a.inner(&b) - c(0.0, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn operator_rejects_non_square_input() {
        let err = Operator::new(vec![
            vec![r(1.0), r(0.0), r(0.0)],
            vec![r(0.0), r(1.0), r(0.0)],
        ])
        .unwrap_err();
        assert!(matches!(err, TensorError::NotSquare { rows: 2, cols: 3 }));
    }

    #[test]
    fn outer_product_matches_entrywise_formula() {
        let ket = StateVector::new(vec![r(0.6), c(0.0, 0.8)]).unwrap();
        let bra = StateVector::basis(2, 1);
        let op = Operator::outer(&ket, &bra);
        assert!((op.entry(0, 0) - r(0.0)).norm() < 1e-15);
        assert!((op.entry(0, 1) - r(0.6)).norm() < 1e-15);
        assert!((op.entry(1, 1) - c(0.0, 0.8)).norm() < 1e-15);
    }

    #[test]
    fn apply_reports_norm_of_unnormalized_image() {
        let p0 = Projector::from_state(&StateVector::basis(2, 0));
        let psi = StateVector::new(vec![r(0.6), r(0.8)]).unwrap();
        let image = p0.apply(&psi).unwrap();
        assert!((image.norm_sqr() - 0.36).abs() < 1e-12);
        let post = image.normalize().unwrap();
        assert!((post.amplitude(0) - r(1.0)).norm() < 1e-12);
    }

    #[test]
    fn apply_rejects_dimension_mismatch() {
        let op = Operator::identity(3);
        let psi = StateVector::basis(2, 0);
        assert!(matches!(
            op.apply(&psi).unwrap_err(),
            TensorError::DimensionMismatch { left: 3, right: 2 }
        ));
    }

    #[test]
    fn projector_deviation_is_zero_for_a_projector_and_large_otherwise() {
        let p = Projector::from_state(&StateVector::basis(2, 0));
        assert!(p.as_operator().projector_deviation() < 1e-15);
        // A scaled identity is Hermitian but not idempotent.
        let half = Operator::identity(2).scale(r(0.5));
        assert!((half.projector_deviation() - 0.25).abs() < 1e-15);
        assert!(Projector::new(half).is_err());
    }

    #[test]
    fn unitarity_deviation_detects_a_corrupted_entry() {
        let mut rows = vec![vec![r(1.0), r(0.0)], vec![r(0.0), r(1.0)]];
        rows[0][0] += r(0.1);
        let u = UnitaryOperator::new_unchecked(Operator::new(rows).unwrap());
        assert!(u.unitarity_deviation() > 0.2);
        assert!(UnitaryOperator::new(u.into_operator()).is_err());
    }

    #[test]
    fn completion_with_no_pinned_columns_gives_the_identity() {
        let u = complete_isometry_to_unitary(&[], 3).unwrap();
        assert!(u.as_operator().max_abs_diff(&Operator::identity(3)) < 1e-15);
    }

    #[test]
    fn completion_preserves_pinned_columns_verbatim() {
        let col = StateVector::new(vec![r(0.6), c(0.0, 0.8), r(0.0)]).unwrap();
        let u = complete_isometry_to_unitary(&[(1, col.clone())], 3).unwrap();
        for i in 0..3 {
            assert!((u.entry(i, 1) - col.amplitude(i)).norm() < 1e-15);
        }
        assert!(u.unitarity_deviation() < 1e-12);
    }

    #[test]
    fn completion_skips_spanned_candidates_and_fixes_phases() {
        // Pinning column 0 to ∣0⟩ forces the completion to skip candidate
        // e₀ and fill the free slots with e₁, e₂ in index order.
        let u = complete_isometry_to_unitary(&[(0, StateVector::basis(3, 0))], 3).unwrap();
        assert!(u.as_operator().max_abs_diff(&Operator::identity(3)) < 1e-15);
        // Every completed column leads with a real positive entry.
        let col = StateVector::new(vec![
            c(0.0, 1.0 / 2f64.sqrt()),
            r(1.0 / 2f64.sqrt()),
            r(0.0),
        ])
        .unwrap();
        let u = complete_isometry_to_unitary(&[(0, col)], 3).unwrap();
        for j in 1..3 {
            let pivot = (0..3)
                .map(|i| u.entry(i, j))
                .find(|z| z.norm() > 1e-12)
                .unwrap();
            assert!(pivot.im.abs() < 1e-12 && pivot.re > 0.0);
        }
    }

    #[test]
    fn completion_rejects_bad_column_sets() {
        let e0 = StateVector::basis(2, 0);
        assert!(matches!(
            complete_isometry_to_unitary(&[(2, e0.clone())], 2).unwrap_err(),
            TensorError::ColumnIndexOutOfRange { .. }
        ));
        assert!(matches!(
            complete_isometry_to_unitary(&[(0, e0.clone()), (0, e0.clone())], 2).unwrap_err(),
            TensorError::DuplicateColumnIndex { index: 0 }
        ));
        assert!(matches!(
            complete_isometry_to_unitary(&[(0, e0.clone()), (1, e0.clone())], 2).unwrap_err(),
            TensorError::ColumnsNotOrthonormal { .. }
        ));
    }

    // Contracting a controlled-NOT against meter state ∣0⟩⊗∣anything⟩ with
    // the observable ∣target=0⟩ projector leaves ∣0⟩⟨0∣ on the system: the
    // gate copies the control into the target before the projector fires.
    #[test]
    fn contraction_of_cnot_against_ground_meter() {
        let mut rows = vec![vec![r(0.0); 4]; 4];
        rows[0][0] = r(1.0);
        rows[1][1] = r(1.0);
        rows[2][3] = r(1.0);
        rows[3][2] = r(1.0);
        let cnot = UnitaryOperator::new(Operator::new(rows).unwrap()).unwrap();
        // Observable: I ⊗ ∣0⟩⟨0∣ on the 2·2·1 split.
        let obs = Operator::identity(2)
            .tensor(Projector::from_state(&StateVector::basis(2, 0)).as_operator());
        let xi1 = StateVector::basis(2, 0);
        let xi2 = StateVector::basis(1, 0);
        let f = partial_meter_contraction(&cnot, &obs, &xi1, &xi2).unwrap();
        let expected = Projector::from_state(&StateVector::basis(2, 0));
        assert!(f.max_abs_diff(expected.as_operator()) < 1e-12);
    }

    #[test]
    fn contraction_rejects_bad_factorization() {
        let u = UnitaryOperator::new(Operator::identity(6)).unwrap();
        let obs = Operator::identity(6);
        let xi1 = StateVector::basis(2, 0);
        let xi2 = StateVector::basis(2, 0);
        assert!(matches!(
            partial_meter_contraction(&u, &obs, &xi1, &xi2).unwrap_err(),
            TensorError::BadFactorization { dim: 6, m1: 2, m2: 2 }
        ));
    }

    prop_compose! {
        fn arb_c64()(re in -1.0f64..1.0, im in -1.0f64..1.0) -> C64 {
            C64::new(re, im)
        }
    }

    prop_compose! {
        fn arb_state(dim: usize)(amps in proptest::collection::vec(arb_c64(), dim)) -> Option<StateVector> {
            StateVector::normalized(amps).ok()
        }
    }

    prop_compose! {
        fn arb_operator(dim: usize)(entries in proptest::collection::vec(arb_c64(), dim * dim)) -> Operator {
            let mut iter = entries.into_iter();
            Operator::from_fn(dim, |_, _| iter.next().unwrap())
        }
    }

    proptest! {
        #[test]
        fn adjoint_is_an_involution(op in arb_operator(4)) {
            prop_assert_eq!(op.adjoint().adjoint(), op);
        }

        #[test]
        fn tensor_product_is_associative(
            a in arb_operator(2),
            b in arb_operator(3),
            c in arb_operator(2),
        ) {
            let left = a.tensor(&b).tensor(&c);
            let right = a.tensor(&b.tensor(&c));
            prop_assert!(left.max_abs_diff(&right) <= 1e-12);
        }

        #[test]
        fn state_tensor_matches_operator_tensor(
            a in arb_state(2),
            b in arb_state(3),
        ) {
            prop_assume!(a.is_some() && b.is_some());
            let (a, b) = (a.unwrap(), b.unwrap());
            let lhs = Operator::outer(&a.tensor(&b), &a.tensor(&b));
            let rhs = Operator::outer(&a, &a).tensor(&Operator::outer(&b, &b));
            prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-12);
        }

        #[test]
        fn contraction_of_hermitian_observable_is_hermitian(
            entries in proptest::collection::vec(arb_c64(), 16),
        ) {
            let mut iter = entries.into_iter();
            let raw = Operator::from_fn(4, |_, _| iter.next().unwrap());
            let herm = Operator::from_dmatrix((&raw.data + raw.data.adjoint()).scale(0.5));
            // 4 = 2·2·1 split with trivial second meter.
            let u = complete_isometry_to_unitary(&[], 4).unwrap();
            let f = partial_meter_contraction(
                &u,
                &herm,
                &StateVector::basis(2, 0),
                &StateVector::basis(1, 0),
            ).unwrap();
            prop_assert!(f.hermitian_deviation() <= 1e-12);
        }

        #[test]
        fn completion_reproduces_pinned_columns(
            a in arb_state(6),
            seed_index in 0usize..6,
        ) {
            prop_assume!(a.is_some());
            let a = a.unwrap();
            let u = complete_isometry_to_unitary(&[(seed_index, a.clone())], 6).unwrap();
            for i in 0..6 {
                prop_assert!((u.entry(i, seed_index) - a.amplitude(i)).norm() <= 1e-12);
            }
            prop_assert!(u.unitarity_deviation() <= 1e-10);
        }
    }
}
