//! Two meters watching one system: when do they have to agree?
//!
//! A scenario couples a system of dimension d to two meters of dimensions
//! m₁ and m₂ through a single unitary on the composite space (system index
//! slowest, then meter 1, then meter 2). Each party carries a projector
//! family over the same outcome set 1..=N: one on the system, one on each
//! meter. The interesting regime is *probability reproducibility*: for every
//! system state, reading either meter reproduces the statistics of measuring
//! the system projectors directly. That holds exactly when the effective
//! system observable of each meter equals the system family, which is an
//! operator identity this module checks without sampling states. Once it
//! holds, the two meters can never disagree: the joint reading distribution
//! is supported on the diagonal.
//!
//! The uncoupled builder makes the negative control: two meters that each
//! show uniformly random outcomes (fair dice) agree only by accident, and
//! their effective observables are nowhere near projectors.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::instruments::{InstrumentError, OutcomeDistribution};
use crate::random::random_state;
use crate::tensor::{
    complete_columns, partial_meter_contraction, C64, DEFAULT_TOL, Operator, Projector,
    StateVector, TensorError, UnitaryOperator,
};

/// Negative joint probabilities above this magnitude are rejected.
const CLAMP_TOL: f64 = 1e-12;

/// A joint table may miss unit total by at most this much.
const SUM_TOL: f64 = 1e-9;

/// Joint states may miss unit norm by at most this much before the
/// evolution is rejected as non-unitary.
const JOINT_NORM_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum OzawaError {
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Instrument(#[from] InstrumentError),
    #[error("a scenario needs at least one outcome")]
    EmptyFamily,
    #[error("projector families have sizes {system}, {meter1} and {meter2}; they must match")]
    OutcomeCountMismatch {
        system: usize,
        meter1: usize,
        meter2: usize,
    },
    #[error("{family} projector {index} has dimension {dim}, expected {expected}")]
    ProjectorDimension {
        family: &'static str,
        index: usize,
        dim: usize,
        expected: usize,
    },
    #[error("{family} projectors resolve the identity only up to {deviation:e}")]
    FamilyIncomplete { family: &'static str, deviation: f64 },
    #[error("unitary dimension {unitary} is not {d} \u{00d7} {m1} \u{00d7} {m2}")]
    DimsInconsistent {
        unitary: usize,
        d: usize,
        m1: usize,
        m2: usize,
    },
    #[error("state has dimension {state}, system has dimension {system}")]
    StateDimensionMismatch { state: usize, system: usize },
    #[error("joint state norm {norm} is too far from one; the evolution is not unitary")]
    JointStateNotNormalized { norm: f64 },
    #[error("joint probability ({x},{y}) is invalid: {value}")]
    InvalidJointProbability { x: usize, y: usize, value: f64 },
    #[error("joint probabilities sum to {sum}, too far from one to renormalize")]
    JointNotNormalized { sum: f64 },
    #[error("probability reproducibility fails: max operator deviation {max_deviation:e}")]
    NotReproducible { max_deviation: f64 },
    #[error("{what}: expected {expected}, got {got}")]
    WrongFamilySize {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("{family} basis is not orthonormal: deviation {deviation:e}")]
    FamilyNotOrthonormal { family: &'static str, deviation: f64 },
    #[error("uncoupled scenario needs a meter of dimension at least two, got {meter}")]
    MeterDegenerate { meter: usize },
    #[error("meter dimension {meter} cannot host {outcomes} outcomes")]
    MeterTooSmall { meter: usize, outcomes: usize },
}

/// Which of the two meters a query refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Meter {
    One,
    Two,
}

/// Outcome of the operator-level reproducibility check.
#[derive(Clone, Debug, PartialEq)]
pub struct ReproducibilityReport {
    /// True when every effective meter observable matches the system family
    /// within `tolerance`.
    pub holds: bool,
    /// Largest entry deviation across both meters and all outcomes.
    pub max_deviation: f64,
    pub tolerance: f64,
    /// Per-outcome deviation of meter 1's effective observable.
    pub meter1_deviations: Vec<f64>,
    /// Per-outcome deviation of meter 2's effective observable.
    pub meter2_deviations: Vec<f64>,
}

/// Joint distribution of the two meter readings over outcomes 1..=N.
///
/// Construction applies the same hygiene as scalar distributions: clamp
/// entries in [−1e-12, 0) to zero, then renormalize provided the total is
/// within 1e-9 of one.
#[derive(Clone, Debug, PartialEq)]
pub struct JointDistribution {
    probs: Vec<Vec<f64>>,
}

impl JointDistribution {
    pub fn new(raw: Vec<Vec<f64>>) -> Result<Self, OzawaError> {
        let n = raw.len();
        if n == 0 {
            return Err(OzawaError::EmptyFamily);
        }
        let mut probs = Vec::with_capacity(n);
        for (x0, row) in raw.into_iter().enumerate() {
            if row.len() != n {
                return Err(OzawaError::WrongFamilySize {
                    what: "joint table row",
                    expected: n,
                    got: row.len(),
                });
            }
            let mut clean = Vec::with_capacity(n);
            for (y0, p) in row.into_iter().enumerate() {
                if !p.is_finite() || p < -CLAMP_TOL || p > 1.0 + SUM_TOL {
                    return Err(OzawaError::InvalidJointProbability {
                        x: x0 + 1,
                        y: y0 + 1,
                        value: p,
                    });
                }
                clean.push(p.clamp(0.0, 1.0));
            }
            probs.push(clean);
        }
        let sum: f64 = probs.iter().flatten().sum();
        if (sum - 1.0).abs() >= SUM_TOL {
            return Err(OzawaError::JointNotNormalized { sum });
        }
        for row in &mut probs {
            for p in row {
                *p /= sum;
            }
        }
        Ok(Self { probs })
    }

    pub fn outcome_count(&self) -> usize {
        self.probs.len()
    }

    /// Probability that meter 1 reads `x` and meter 2 reads `y` (1-based).
    pub fn prob(&self, x: usize, y: usize) -> f64 {
        let n = self.probs.len();
        assert!((1..=n).contains(&x) && (1..=n).contains(&y));
        self.probs[x - 1][y - 1]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.probs
    }

    /// Marginal distribution of meter 1 (sum over meter 2 readings).
    pub fn meter1_marginals(&self) -> Vec<f64> {
        self.probs.iter().map(|row| row.iter().sum()).collect()
    }

    /// Marginal distribution of meter 2 (sum over meter 1 readings).
    pub fn meter2_marginals(&self) -> Vec<f64> {
        let n = self.probs.len();
        (0..n)
            .map(|y0| self.probs.iter().map(|row| row[y0]).sum())
            .collect()
    }

    /// Total probability that the meters disagree.
    pub fn off_diagonal_mass(&self) -> f64 {
        let mut mass = 0.0;
        for (x0, row) in self.probs.iter().enumerate() {
            for (y0, p) in row.iter().enumerate() {
                if x0 != y0 {
                    mass += p;
                }
            }
        }
        mass
    }
}

/// One system, two meters, one coupling unitary, three projector families
/// over a shared outcome set.
#[derive(Clone, Debug)]
pub struct OzawaScenario {
    unitary: UnitaryOperator,
    sys_projectors: Vec<Projector>,
    meter1_projectors: Vec<Projector>,
    meter2_projectors: Vec<Projector>,
    xi1: StateVector,
    xi2: StateVector,
    system_dim: usize,
    meter1_dim: usize,
    meter2_dim: usize,
}

fn family_deviation(projectors: &[Projector], dim: usize) -> f64 {
    let mut sum = Operator::zeros(dim);
    for p in projectors {
        sum = &sum + p.as_operator();
    }
    sum.max_abs_diff(&Operator::identity(dim))
}

fn check_family(
    family: &'static str,
    projectors: &[Projector],
    dim: usize,
) -> Result<(), OzawaError> {
    for (index, p) in projectors.iter().enumerate() {
        if p.dim() != dim {
            return Err(OzawaError::ProjectorDimension {
                family,
                index,
                dim: p.dim(),
                expected: dim,
            });
        }
    }
    let deviation = family_deviation(projectors, dim);
    if deviation > DEFAULT_TOL {
        return Err(OzawaError::FamilyIncomplete { family, deviation });
    }
    Ok(())
}

impl OzawaScenario {
    /// Validates family sizes, projector dimensions, resolutions of the
    /// identity and the composite dimension.
    ///
    /// Unitarity of the coupling is deliberately not an invariant here: the
    /// wrapper records whatever it was given, and verification reports the
    /// deviation explicitly. Construct the unitary with
    /// [`UnitaryOperator::new`] first when rejection at this point is wanted.
    pub fn new(
        unitary: UnitaryOperator,
        sys_projectors: Vec<Projector>,
        meter1_projectors: Vec<Projector>,
        meter2_projectors: Vec<Projector>,
        xi1: StateVector,
        xi2: StateVector,
    ) -> Result<Self, OzawaError> {
        let n = sys_projectors.len();
        if n == 0 {
            return Err(OzawaError::EmptyFamily);
        }
        if meter1_projectors.len() != n || meter2_projectors.len() != n {
            return Err(OzawaError::OutcomeCountMismatch {
                system: n,
                meter1: meter1_projectors.len(),
                meter2: meter2_projectors.len(),
            });
        }
        let system_dim = sys_projectors[0].dim();
        let meter1_dim = xi1.dim();
        let meter2_dim = xi2.dim();
        check_family("system", &sys_projectors, system_dim)?;
        check_family("meter-1", &meter1_projectors, meter1_dim)?;
        check_family("meter-2", &meter2_projectors, meter2_dim)?;
        if unitary.dim() != system_dim * meter1_dim * meter2_dim {
            return Err(OzawaError::DimsInconsistent {
                unitary: unitary.dim(),
                d: system_dim,
                m1: meter1_dim,
                m2: meter2_dim,
            });
        }
        Ok(Self {
            unitary,
            sys_projectors,
            meter1_projectors,
            meter2_projectors,
            xi1,
            xi2,
            system_dim,
            meter1_dim,
            meter2_dim,
        })
    }

    pub fn system_dim(&self) -> usize {
        self.system_dim
    }

    pub fn meter1_dim(&self) -> usize {
        self.meter1_dim
    }

    pub fn meter2_dim(&self) -> usize {
        self.meter2_dim
    }

    pub fn outcome_count(&self) -> usize {
        self.sys_projectors.len()
    }

    pub fn unitary(&self) -> &UnitaryOperator {
        &self.unitary
    }

    pub fn sys_projectors(&self) -> &[Projector] {
        &self.sys_projectors
    }

    pub fn meter1_projectors(&self) -> &[Projector] {
        &self.meter1_projectors
    }

    pub fn meter2_projectors(&self) -> &[Projector] {
        &self.meter2_projectors
    }

    pub fn xi1(&self) -> &StateVector {
        &self.xi1
    }

    pub fn xi2(&self) -> &StateVector {
        &self.xi2
    }

    fn check_state(&self, state: &StateVector) -> Result<(), OzawaError> {
        if state.dim() != self.system_dim {
            return Err(OzawaError::StateDimensionMismatch {
                state: state.dim(),
                system: self.system_dim,
            });
        }
        Ok(())
    }

    /// π_x = ‖Π_x ψ‖²: statistics of measuring the system family directly.
    pub fn direct_probabilities(
        &self,
        state: &StateVector,
    ) -> Result<OutcomeDistribution, OzawaError> {
        self.check_state(state)?;
        let raw: Vec<f64> = self
            .sys_projectors
            .iter()
            .map(|p| p.apply(state).map(|image| image.norm_sqr()))
            .collect::<Result<_, _>>()?;
        Ok(OutcomeDistribution::new(raw)?)
    }

    /// The composite state U(ψ ⊗ ξ₁ ⊗ ξ₂), renormalized. Rejects couplings
    /// whose image norm drifts from one by more than 1e-8, since that can
    /// only come from a non-unitary coupling.
    pub fn joint_state(&self, state: &StateVector) -> Result<StateVector, OzawaError> {
        self.check_state(state)?;
        let input = state.tensor(&self.xi1).tensor(&self.xi2);
        let image = self.unitary.apply(&input)?;
        let norm = image.norm_sqr().sqrt();
        if (norm - 1.0).abs() > JOINT_NORM_TOL {
            return Err(OzawaError::JointStateNotNormalized { norm });
        }
        let scale = C64::new(1.0 / norm, 0.0);
        Ok(StateVector::from_dvector(image.into_dvector() * scale))
    }

    fn lift_meter1(&self, p: &Projector) -> Operator {
        Operator::identity(self.system_dim)
            .tensor(p.as_operator())
            .tensor(&Operator::identity(self.meter2_dim))
    }

    fn lift_meter2(&self, p: &Projector) -> Operator {
        Operator::identity(self.system_dim * self.meter1_dim).tensor(p.as_operator())
    }

    fn lift(&self, meter: Meter, outcome_index: usize) -> Operator {
        match meter {
            Meter::One => self.lift_meter1(&self.meter1_projectors[outcome_index]),
            Meter::Two => self.lift_meter2(&self.meter2_projectors[outcome_index]),
        }
    }

    /// Reading statistics of one meter: p_x = ‖(lifted P_x) U(ψ⊗ξ₁⊗ξ₂)‖².
    pub fn meter_probabilities(
        &self,
        state: &StateVector,
        meter: Meter,
    ) -> Result<OutcomeDistribution, OzawaError> {
        let phi = self.joint_state(state)?;
        let raw: Vec<f64> = (0..self.outcome_count())
            .map(|k| {
                self.lift(meter, k)
                    .apply(&phi)
                    .map(|image| image.norm_sqr())
            })
            .collect::<Result<_, _>>()?;
        Ok(OutcomeDistribution::new(raw)?)
    }

    /// Joint reading distribution p(x, y) of meter 1 and meter 2; the two
    /// lifted projectors commute, so the order of application is irrelevant.
    pub fn joint_distribution(&self, state: &StateVector) -> Result<JointDistribution, OzawaError> {
        let phi = self.joint_state(state)?;
        let n = self.outcome_count();
        let lifts1: Vec<Operator> = (0..n).map(|k| self.lift(Meter::One, k)).collect();
        let mut raw = vec![vec![0.0f64; n]; n];
        for y0 in 0..n {
            let second = self.lift(Meter::Two, y0);
            let partial = second.apply(&phi)?.into_dvector();
            for (x0, lift) in lifts1.iter().enumerate() {
                raw[x0][y0] = lift.apply_raw(&partial).norm_squared();
            }
        }
        JointDistribution::new(raw)
    }

    /// The d × d observable a meter effectively measures on the system:
    /// the lifted outcome projector conjugated by the coupling and
    /// contracted against the meter preparation states.
    pub fn effective_system_povm(&self, meter: Meter) -> Vec<Operator> {
        (0..self.outcome_count())
            .map(|k| {
                partial_meter_contraction(&self.unitary, &self.lift(meter, k), &self.xi1, &self.xi2)
                    .expect("dimensions were validated at construction")
            })
            .collect()
    }

    /// Operator-level test of probability reproducibility: both meters'
    /// effective observables must equal the system projectors entrywise.
    /// No state sampling is involved, so the verdict covers every state.
    pub fn check_reproducibility(&self, tolerance: f64) -> ReproducibilityReport {
        let deviations = |meter: Meter| -> Vec<f64> {
            self.effective_system_povm(meter)
                .iter()
                .zip(self.sys_projectors.iter())
                .map(|(f, p)| f.max_abs_diff(p.as_operator()))
                .collect()
        };
        let meter1_deviations = deviations(Meter::One);
        let meter2_deviations = deviations(Meter::Two);
        let max_deviation = meter1_deviations
            .iter()
            .chain(meter2_deviations.iter())
            .fold(0.0f64, |a, d| a.max(*d));
        ReproducibilityReport {
            holds: max_deviation <= tolerance,
            max_deviation,
            tolerance,
            meter1_deviations,
            meter2_deviations,
        }
    }

    /// Certifies that the two meters agree on every sampled state.
    ///
    /// First requires reproducibility at the default tolerance, then samples
    /// `num_states` system states (ChaCha stream `i` of `seed` for state i,
    /// so the set is independent of thread count) and returns the largest
    /// off-diagonal mass of the joint reading distribution.
    pub fn verify_intersubjectivity(&self, num_states: usize, seed: u64) -> Result<f64, OzawaError> {
        self.verify_intersubjectivity_with_tolerance(num_states, seed, DEFAULT_TOL)
    }

    /// Same as [`Self::verify_intersubjectivity`] with an explicit
    /// reproducibility tolerance.
    pub fn verify_intersubjectivity_with_tolerance(
        &self,
        num_states: usize,
        seed: u64,
        tolerance: f64,
    ) -> Result<f64, OzawaError> {
        let report = self.check_reproducibility(tolerance);
        if !report.holds {
            return Err(OzawaError::NotReproducible {
                max_deviation: report.max_deviation,
            });
        }
        let masses: Result<Vec<f64>, OzawaError> = (0..num_states)
            .into_par_iter()
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(i as u64);
                let psi = random_state(self.system_dim, &mut rng);
                Ok(self.joint_distribution(&psi)?.off_diagonal_mass())
            })
            .collect();
        Ok(masses?.into_iter().fold(0.0, f64::max))
    }
}

/// Builds a coupling that copies a rank-one system measurement onto both
/// meters: the unitary sends ∣x⟩ ⊗ ξ₁ ⊗ ξ₂ to ψ_x ⊗ φ¹_x ⊗ φ²_x. The
/// system family is the computational one, the meter families project onto
/// the given bases, and the post-states `post_states[x]` may be arbitrary
/// normalized vectors. The result passes [`OzawaScenario::check_reproducibility`]
/// at machine precision.
pub fn build_reproducible_scenario(
    post_states: &[StateVector],
    meter1_basis: &[StateVector],
    meter2_basis: &[StateVector],
    xi1: &StateVector,
    xi2: &StateVector,
) -> Result<OzawaScenario, OzawaError> {
    let n = post_states.len();
    if n == 0 {
        return Err(OzawaError::EmptyFamily);
    }
    let d = post_states[0].dim();
    if n != d {
        return Err(OzawaError::WrongFamilySize {
            what: "system post-states (one per outcome, outcome count = system dimension)",
            expected: d,
            got: n,
        });
    }
    for (what, family) in [
        ("system post-states", post_states),
        ("meter-1 basis", meter1_basis),
        ("meter-2 basis", meter2_basis),
    ] {
        if family.len() != n {
            return Err(OzawaError::WrongFamilySize {
                what,
                expected: n,
                got: family.len(),
            });
        }
        for v in family {
            if v.dim() != n {
                return Err(OzawaError::WrongFamilySize {
                    what,
                    expected: n,
                    got: v.dim(),
                });
            }
        }
    }
    for (family, basis) in [("meter-1", meter1_basis), ("meter-2", meter2_basis)] {
        let mut deviation = 0.0f64;
        for (i, a) in basis.iter().enumerate() {
            for (j, b) in basis.iter().enumerate().skip(i) {
                let target = if i == j { 1.0 } else { 0.0 };
                deviation = deviation.max((a.inner(b) - C64::new(target, 0.0)).norm());
            }
        }
        if deviation > DEFAULT_TOL {
            return Err(OzawaError::FamilyNotOrthonormal { family, deviation });
        }
    }
    if xi1.dim() != n || xi2.dim() != n {
        return Err(OzawaError::WrongFamilySize {
            what: "meter preparation states",
            expected: n,
            got: if xi1.dim() != n { xi1.dim() } else { xi2.dim() },
        });
    }

    let total = n * n * n;
    let mut inputs: Vec<(usize, DVector<C64>)> = Vec::with_capacity(n);
    let mut outputs: Vec<(usize, DVector<C64>)> = Vec::with_capacity(n);
    for x in 0..n {
        let w = StateVector::basis(n, x).tensor(xi1).tensor(xi2);
        let v = post_states[x].tensor(&meter1_basis[x]).tensor(&meter2_basis[x]);
        inputs.push((x, w.data.clone()));
        outputs.push((x, v.data.clone()));
    }
    let w_full = complete_columns(&inputs, total, 1e-8)?;
    let v_full = complete_columns(&outputs, total, 1e-8)
        .expect("product columns of validated orthonormal bases are orthonormal");
    let coupling = v_full.as_operator() * w_full.adjoint().as_operator();
    let unitary = UnitaryOperator::with_tolerance(coupling, 1e-7)?;

    let sys = (0..n)
        .map(|x| Projector::from_state(&StateVector::basis(n, x)))
        .collect();
    let m1 = meter1_basis.iter().map(Projector::from_state).collect();
    let m2 = meter2_basis.iter().map(Projector::from_state).collect();
    OzawaScenario::new(unitary, sys, m1, m2, xi1.clone(), xi2.clone())
}

/// The all-computational instance of [`build_reproducible_scenario`]:
/// post-states, meter bases and preparations are canonical basis vectors.
pub fn canonical_reproducible_scenario(dim: usize) -> Result<OzawaScenario, OzawaError> {
    if dim == 0 {
        return Err(OzawaError::EmptyFamily);
    }
    let basis: Vec<StateVector> = (0..dim).map(|x| StateVector::basis(dim, x)).collect();
    build_reproducible_scenario(
        &basis,
        &basis,
        &basis,
        &StateVector::basis(dim, 0),
        &StateVector::basis(dim, 0),
    )
}

/// Builds the "two fair dice" negative control: the coupling is the
/// identity, both meters start in the uniform superposition and read the
/// computational basis, so each shows uniform noise and they agree only by
/// coincidence. With fewer outcomes than meter dimensions the trailing
/// meter projector lumps the remaining directions into one outcome.
pub fn build_uncoupled_scenario(
    system_dim: usize,
    meter_dim: usize,
    sys_projectors: Vec<Projector>,
) -> Result<OzawaScenario, OzawaError> {
    if system_dim == 0 || sys_projectors.is_empty() {
        return Err(OzawaError::EmptyFamily);
    }
    if meter_dim < 2 {
        return Err(OzawaError::MeterDegenerate { meter: meter_dim });
    }
    let n = sys_projectors.len();
    if n > meter_dim {
        return Err(OzawaError::MeterTooSmall {
            meter: meter_dim,
            outcomes: n,
        });
    }
    let total = system_dim * meter_dim * meter_dim;
    let unitary = UnitaryOperator::new_unchecked(Operator::identity(total));
    let xi = StateVector::uniform(meter_dim);
    let meter_family: Vec<Projector> = (0..n)
        .map(|x0| {
            let op = Operator::from_fn(meter_dim, |i, j| {
                let hit = if x0 + 1 < n {
                    i == j && i == x0
                } else {
                    i == j && i >= x0
                };
                if hit {
                    C64::new(1.0, 0.0)
                } else {
                    C64::new(0.0, 0.0)
                }
            });
            Projector::new(op).expect("a 0/1 diagonal matrix is a projector")
        })
        .collect();
    OzawaScenario::new(
        unitary,
        sys_projectors,
        meter_family.clone(),
        meter_family,
        xi.clone(),
        xi,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_orthonormal_family, random_state};

    fn r(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn computational_projectors(dim: usize) -> Vec<Projector> {
        (0..dim)
            .map(|x| Projector::from_state(&StateVector::basis(dim, x)))
            .collect()
    }

    fn qubit_dice() -> OzawaScenario {
        build_uncoupled_scenario(2, 2, computational_projectors(2)).unwrap()
    }

    #[test]
    fn canonical_scenario_copies_the_outcome_to_both_meters() {
        let scn = canonical_reproducible_scenario(2).unwrap();
        assert_eq!(scn.system_dim(), 2);
        assert_eq!(scn.outcome_count(), 2);
        assert!(scn.unitary().unitarity_deviation() <= 1e-10);
        // An eigenstate of the system family gives certainty on both meters.
        let e1 = StateVector::basis(2, 1);
        let direct = scn.direct_probabilities(&e1).unwrap();
        assert!((direct.prob(2) - 1.0).abs() < 1e-12);
        for meter in [Meter::One, Meter::Two] {
            let dist = scn.meter_probabilities(&e1, meter).unwrap();
            assert!((dist.prob(2) - 1.0).abs() < 1e-12);
        }
        // A superposition splits evenly and never lands off the diagonal.
        let plus = StateVector::uniform(2);
        let joint = scn.joint_distribution(&plus).unwrap();
        assert!((joint.prob(1, 1) - 0.5).abs() < 1e-12);
        assert!((joint.prob(2, 2) - 0.5).abs() < 1e-12);
        assert!(joint.off_diagonal_mass() < 1e-12);
    }

    #[test]
    fn canonical_scenario_passes_the_operator_check() {
        for dim in [1usize, 2, 3] {
            let scn = canonical_reproducible_scenario(dim).unwrap();
            let report = scn.check_reproducibility(1e-10);
            assert!(report.holds, "dim {dim}: {report:?}");
            let povm = scn.effective_system_povm(Meter::One);
            for (f, p) in povm.iter().zip(scn.sys_projectors()) {
                assert!(f.max_abs_diff(p.as_operator()) <= 1e-12);
            }
        }
    }

    #[test]
    fn dice_show_uniform_noise_and_fail_every_check() {
        let scn = qubit_dice();
        let psi = random_state(2, &mut ChaCha8Rng::seed_from_u64(3));
        // Direct statistics depend on ψ, meter statistics do not.
        for meter in [Meter::One, Meter::Two] {
            let dist = scn.meter_probabilities(&psi, meter).unwrap();
            assert!((dist.prob(1) - 0.5).abs() < 1e-12);
            assert!((dist.prob(2) - 0.5).abs() < 1e-12);
        }
        let joint = scn.joint_distribution(&psi).unwrap();
        for x in 1..=2 {
            for y in 1..=2 {
                assert!((joint.prob(x, y) - 0.25).abs() < 1e-12);
            }
        }
        assert!((joint.off_diagonal_mass() - 0.5).abs() < 1e-12);
        // Effective observables collapse to I/2, half an identity away
        // from any projector family.
        let report = scn.check_reproducibility(1e-10);
        assert!(!report.holds);
        assert!((report.max_deviation - 0.5).abs() < 1e-12);
        let half = Operator::identity(2).scale(r(0.5));
        for f in scn.effective_system_povm(Meter::One) {
            assert!(f.max_abs_diff(&half) < 1e-12);
        }
        match scn.verify_intersubjectivity(5, 0) {
            Err(OzawaError::NotReproducible { max_deviation }) => {
                assert!((max_deviation - 0.5).abs() < 1e-12);
            }
            other => panic!("expected a reproducibility failure, got {other:?}"),
        }
    }

    #[test]
    fn effective_observables_always_sum_to_the_identity() {
        let scn = qubit_dice();
        for meter in [Meter::One, Meter::Two] {
            let povm = scn.effective_system_povm(meter);
            let mut sum = Operator::zeros(2);
            for f in &povm {
                sum = &sum + f;
            }
            assert!(sum.max_abs_diff(&Operator::identity(2)) < 1e-12);
        }
    }

    #[test]
    fn lumped_meter_outcomes_cover_a_wide_meter() {
        // Three outcomes on five-dimensional meters: the last projector
        // absorbs meter directions 2..5.
        let scn = build_uncoupled_scenario(3, 5, computational_projectors(3)).unwrap();
        assert_eq!(scn.meter1_dim(), 5);
        let psi = StateVector::uniform(3);
        let dist = scn.meter_probabilities(&psi, Meter::One).unwrap();
        assert!((dist.prob(1) - 0.2).abs() < 1e-12);
        assert!((dist.prob(2) - 0.2).abs() < 1e-12);
        assert!((dist.prob(3) - 0.6).abs() < 1e-12);
    }

    #[test]
    fn builder_accepts_rotated_bases_and_stays_reproducible() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for dim in [2usize, 3] {
            let phi1 = random_orthonormal_family(dim, dim, &mut rng);
            let phi2 = random_orthonormal_family(dim, dim, &mut rng);
            let posts: Vec<StateVector> =
                (0..dim).map(|_| random_state(dim, &mut rng)).collect();
            let scn = build_reproducible_scenario(
                &posts,
                &phi1,
                &phi2,
                &StateVector::basis(dim, 0),
                &StateVector::basis(dim, 0),
            )
            .unwrap();
            assert!(scn.unitary().unitarity_deviation() <= 1e-10);
            let report = scn.check_reproducibility(1e-10);
            assert!(report.holds, "dim {dim}: {report:?}");
            let psi = random_state(dim, &mut rng);
            let joint = scn.joint_distribution(&psi).unwrap();
            assert!(joint.off_diagonal_mass() <= 1e-10);
            // Meter statistics match the direct ones state by state.
            let direct = scn.direct_probabilities(&psi).unwrap();
            let m1 = scn.meter_probabilities(&psi, Meter::One).unwrap();
            for x in 1..=dim {
                assert!((direct.prob(x) - m1.prob(x)).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn builder_rejects_a_skewed_meter_basis() {
        let skew = vec![
            StateVector::basis(2, 0),
            StateVector::uniform(2),
        ];
        let basis = vec![StateVector::basis(2, 0), StateVector::basis(2, 1)];
        let err = build_reproducible_scenario(
            &basis,
            &skew,
            &basis,
            &StateVector::basis(2, 0),
            &StateVector::basis(2, 0),
        )
        .unwrap_err();
        assert!(matches!(
            err,
            OzawaError::FamilyNotOrthonormal { family: "meter-1", .. }
        ));
    }

    #[test]
    fn joint_marginals_match_single_meter_statistics() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let scn = canonical_reproducible_scenario(3).unwrap();
        for _ in 0..50 {
            let psi = random_state(3, &mut rng);
            let joint = scn.joint_distribution(&psi).unwrap();
            let m1 = scn.meter_probabilities(&psi, Meter::One).unwrap();
            let m2 = scn.meter_probabilities(&psi, Meter::Two).unwrap();
            for x in 1..=3 {
                assert!((joint.meter1_marginals()[x - 1] - m1.prob(x)).abs() <= 1e-10);
                assert!((joint.meter2_marginals()[x - 1] - m2.prob(x)).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn verified_agreement_is_seed_reproducible() {
        let scn = canonical_reproducible_scenario(2).unwrap();
        let a = scn.verify_intersubjectivity(20, 42).unwrap();
        let b = scn.verify_intersubjectivity(20, 42).unwrap();
        assert_eq!(a, b);
        assert!(a <= 1e-10);
        let zero = scn.verify_intersubjectivity(0, 42).unwrap();
        assert_eq!(zero, 0.0);
    }

    #[test]
    fn scenario_construction_rejects_inconsistent_pieces() {
        let sys = computational_projectors(2);
        let meters = computational_projectors(2);
        let xi = StateVector::basis(2, 0);
        // Unitary dimension 4 cannot host 2·2·2.
        let err = OzawaScenario::new(
            UnitaryOperator::new(Operator::identity(4)).unwrap(),
            sys.clone(),
            meters.clone(),
            meters.clone(),
            xi.clone(),
            xi.clone(),
        )
        .unwrap_err();
        assert!(matches!(err, OzawaError::DimsInconsistent { unitary: 4, .. }));
        // Families must share one outcome count.
        let err = OzawaScenario::new(
            UnitaryOperator::new(Operator::identity(8)).unwrap(),
            sys.clone(),
            meters[..1].to_vec(),
            meters.clone(),
            xi.clone(),
            xi.clone(),
        )
        .unwrap_err();
        assert!(matches!(err, OzawaError::OutcomeCountMismatch { .. }));
        // Dropping a projector breaks the resolution of the identity.
        let err = OzawaScenario::new(
            UnitaryOperator::new(Operator::identity(8)).unwrap(),
            vec![sys[0].clone(), sys[0].clone()],
            meters.clone(),
            meters.clone(),
            xi.clone(),
            xi,
        )
        .unwrap_err();
        assert!(matches!(
            err,
            OzawaError::FamilyIncomplete { family: "system", .. }
        ));
    }
}
