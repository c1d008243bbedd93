//! Seeded generators for states, unitaries and instruments.
//!
//! Every function takes the RNG by mutable reference and consumes a fixed
//! number of draws per accepted candidate, so callers that construct their
//! generator from a seed get the same object on every run, on every thread
//! count. Rejected candidates (nearly dependent columns, nearly singular
//! normalizations) trigger a redraw from the same stream, which keeps the
//! output a pure function of the seed.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::instruments::KrausInstrument;
use crate::tensor::{C64, Operator, StateVector, UnitaryOperator};

const REDRAW_RESIDUAL_FLOOR: f64 = 1e-8;
const MAX_ATTEMPTS: usize = 100;

fn gaussian(rng: &mut impl Rng) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im)
}

fn gaussian_vector(dim: usize, rng: &mut impl Rng) -> DVector<C64> {
    DVector::from_fn(dim, |_, _| gaussian(rng))
}

/// A Haar-like random state: complex Gaussian amplitudes scaled to unit norm.
pub fn random_state(dim: usize, rng: &mut impl Rng) -> StateVector {
    assert!(dim > 0, "random state needs a positive dimension");
    for _ in 0..MAX_ATTEMPTS {
        let v = gaussian_vector(dim, rng);
        if let Ok(state) = StateVector::normalized(v.as_slice().to_vec()) {
            return state;
        }
    }
    unreachable!("repeated Gaussian draws collapsed to the zero vector");
}

fn orthonormal_columns(dim: usize, count: usize, rng: &mut impl Rng) -> Vec<DVector<C64>> {
    assert!(count <= dim, "cannot fit {count} orthonormal columns in dimension {dim}");
    let one = C64::new(1.0, 0.0);
    let mut columns: Vec<DVector<C64>> = Vec::with_capacity(count);
    while columns.len() < count {
        let mut cand = gaussian_vector(dim, rng);
        for c in &columns {
            let coeff = c.dotc(&cand);
            cand.axpy(-coeff, c, one);
        }
        let residual = cand.norm();
        if residual < REDRAW_RESIDUAL_FLOOR {
            continue;
        }
        cand /= C64::new(residual, 0.0);
        for c in &columns {
            let coeff = c.dotc(&cand);
            cand.axpy(-coeff, c, one);
        }
        cand /= C64::new(cand.norm(), 0.0);
        columns.push(cand);
    }
    columns
}

/// A Haar-like random unitary from Gram–Schmidt on Gaussian columns.
pub fn random_unitary(dim: usize, rng: &mut impl Rng) -> UnitaryOperator {
    assert!(dim > 0, "random unitary needs a positive dimension");
    let columns = orthonormal_columns(dim, dim, rng);
    let mut matrix = DMatrix::zeros(dim, dim);
    for (j, column) in columns.iter().enumerate() {
        matrix.set_column(j, column);
    }
    UnitaryOperator::new(Operator::from_dmatrix(matrix))
        .expect("orthonormalized Gaussian columns form a unitary")
}

/// `count` pairwise orthonormal random states in dimension `dim`.
pub fn random_orthonormal_family(dim: usize, count: usize, rng: &mut impl Rng) -> Vec<StateVector> {
    assert!(dim > 0, "random family needs a positive dimension");
    orthonormal_columns(dim, count, rng)
        .into_iter()
        .map(StateVector::from_dvector)
        .collect()
}

/// A random instrument with `outcomes` Kraus operators on dimension `dim`.
///
/// Draws independent Gaussian matrices G₁…G_N and right-multiplies each by
/// S^(−1/2) where S = Σ G†G, which enforces the completeness sum exactly up
/// to rounding. Nearly singular draws are rejected and redrawn.
pub fn random_instrument(dim: usize, outcomes: usize, rng: &mut impl Rng) -> KrausInstrument {
    assert!(dim > 0, "random instrument needs a positive dimension");
    assert!(outcomes > 0, "random instrument needs at least one outcome");
    for _ in 0..MAX_ATTEMPTS {
        let raw: Vec<DMatrix<C64>> = (0..outcomes)
            .map(|_| DMatrix::from_fn(dim, dim, |_, _| gaussian(rng)))
            .collect();
        let mut sum = DMatrix::<C64>::zeros(dim, dim);
        for g in &raw {
            sum += g.adjoint() * g;
        }
        let eig = sum.symmetric_eigen();
        let max_l = eig.eigenvalues.iter().fold(0.0f64, |a, l| a.max(*l));
        let min_l = eig.eigenvalues.iter().fold(f64::INFINITY, |a, l| a.min(*l));
        if !(min_l > 1e-10 * max_l) {
            continue;
        }
        let inv_sqrt = &eig.eigenvectors
            * DMatrix::from_diagonal(&eig.eigenvalues.map(|l| C64::new(1.0 / l.sqrt(), 0.0)))
            * eig.eigenvectors.adjoint();
        let ops: Vec<Operator> = raw
            .iter()
            .map(|g| Operator::from_dmatrix(g * &inv_sqrt))
            .collect();
        if let Ok(instrument) = KrausInstrument::new(ops) {
            return instrument;
        }
    }
    unreachable!("repeated Gaussian draws failed to produce a complete instrument");
}
