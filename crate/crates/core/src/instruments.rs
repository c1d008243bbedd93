//! Generalized measurements described by Kraus operators.
//!
//! An instrument is a finite family A₁…A_N with Σ A†A = I. Applied to a
//! normalized state ψ it produces outcome x with probability ‖A_x ψ‖² and
//! leaves the system in A_x ψ / ‖A_x ψ‖. Outcome labels are 1-based
//! everywhere in the public API.

use thiserror::Error;

use crate::tensor::{DEFAULT_TOL, Operator, StateVector, TensorError, UnitaryOperator};

/// Probabilities below this floor count as impossible outcomes: conditioning
/// on them is refused rather than amplified out of noise.
pub const P_FLOOR: f64 = 1e-12;

/// Negative probabilities above this magnitude are rejected instead of
/// clamped to zero.
const CLAMP_TOL: f64 = 1e-12;

/// A raw probability vector may miss unit sum by at most this much before
/// renormalization is refused.
const SUM_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum InstrumentError {
    #[error("an instrument needs at least one Kraus operator")]
    Empty,
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("operator {index} has dimension {dim}, expected {expected}")]
    OperatorDimensionMismatch {
        index: usize,
        dim: usize,
        expected: usize,
    },
    #[error("max entry of |\u{2211} A\u{2020}A \u{2212} I| is {deviation:e}")]
    CompletenessViolation { deviation: f64 },
    #[error("state has dimension {state}, instrument acts on dimension {instrument}")]
    StateDimensionMismatch { state: usize, instrument: usize },
    #[error("outcome {outcome} is outside 1..={count}")]
    OutcomeOutOfRange { outcome: usize, count: usize },
    #[error("outcome {outcome} has probability {probability:e}, below the floor")]
    OutcomeImpossible { outcome: usize, probability: f64 },
    #[error("outcome {outcome} has invalid probability {value}")]
    InvalidProbability { outcome: usize, value: f64 },
    #[error("probabilities sum to {sum}, too far from one to renormalize")]
    DistributionNotNormalized { sum: f64 },
    #[error("projectors resolve the identity only up to {deviation:e}")]
    FamilyIncomplete { deviation: f64 },
    #[error("{projectors} projectors but {rotations} rotations")]
    LengthMismatch { projectors: usize, rotations: usize },
}

/// How an instrument relates to the textbook projective case.
///
/// `RepeatableProjective` means every Kraus operator is itself an orthogonal
/// projector and the family is pairwise orthogonal, so repeating the
/// measurement reproduces the first outcome with certainty.
/// `ProjectivePovm` means the outcome statistics are projective (every
/// A†A is a projector, pairwise orthogonal) but the post-states are rotated,
/// so repetitions need not agree. Everything else is `General`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeasurementClass {
    RepeatableProjective,
    ProjectivePovm,
    General,
}

impl MeasurementClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            MeasurementClass::RepeatableProjective => "repeatable-projective",
            MeasurementClass::ProjectivePovm => "projective-povm",
            MeasurementClass::General => "general",
        }
    }
}

impl std::fmt::Display for MeasurementClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A probability vector over outcomes 1..=N.
///
/// Construction clamps tiny negative entries (rounding artifacts) to zero
/// and rescales so the entries sum to one, provided the raw sum was within
/// 1e-9 of one; anything worse is an error, not a fix.
#[derive(Clone, Debug, PartialEq)]
pub struct OutcomeDistribution {
    probs: Vec<f64>,
}

impl OutcomeDistribution {
    pub fn new(raw: Vec<f64>) -> Result<Self, InstrumentError> {
        if raw.is_empty() {
            return Err(InstrumentError::Empty);
        }
        let mut probs = Vec::with_capacity(raw.len());
        for (i, &p) in raw.iter().enumerate() {
            if !p.is_finite() || p < -CLAMP_TOL || p > 1.0 + SUM_TOL {
                return Err(InstrumentError::InvalidProbability {
                    outcome: i + 1,
                    value: p,
                });
            }
            probs.push(p.clamp(0.0, 1.0));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() >= SUM_TOL {
            return Err(InstrumentError::DistributionNotNormalized { sum });
        }
        for p in &mut probs {
            *p /= sum;
        }
        Ok(Self { probs })
    }

    pub fn outcome_count(&self) -> usize {
        self.probs.len()
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    /// Probability of a 1-based outcome label.
    ///
    /// Panics when the label is out of range.
    pub fn prob(&self, outcome: usize) -> f64 {
        assert!(
            (1..=self.probs.len()).contains(&outcome),
            "outcome {outcome} outside 1..={}",
            self.probs.len()
        );
        self.probs[outcome - 1]
    }

    /// Inverse-CDF sampling: maps a uniform draw `u ∈ [0, 1)` to the first
    /// outcome whose cumulative probability exceeds `u`.
    pub fn sample(&self, u: f64) -> usize {
        let mut cumulative = 0.0;
        for (i, p) in self.probs.iter().enumerate() {
            cumulative += p;
            if u < cumulative {
                return i + 1;
            }
        }
        self.probs.len()
    }
}

/// A measurement with Kraus operators A₁…A_N satisfying Σ A†A = I.
#[derive(Clone, Debug, PartialEq)]
pub struct KrausInstrument {
    dim: usize,
    ops: Vec<Operator>,
}

impl KrausInstrument {
    /// Validates the completeness sum within [`DEFAULT_TOL`].
    pub fn new(ops: Vec<Operator>) -> Result<Self, InstrumentError> {
        Self::with_tolerance(ops, DEFAULT_TOL)
    }

    /// Validates `max |Σ A†A − I| ≤ tol`.
    pub fn with_tolerance(ops: Vec<Operator>, tol: f64) -> Result<Self, InstrumentError> {
        let first = ops.first().ok_or(InstrumentError::Empty)?;
        let dim = first.dim();
        for (index, op) in ops.iter().enumerate() {
            if op.dim() != dim {
                return Err(InstrumentError::OperatorDimensionMismatch {
                    index,
                    dim: op.dim(),
                    expected: dim,
                });
            }
        }
        let instrument = Self { dim, ops };
        let deviation = instrument.completeness_deviation();
        if deviation > tol {
            return Err(InstrumentError::CompletenessViolation { deviation });
        }
        Ok(instrument)
    }

    /// Largest entry of ∣Σ A†A − I∣.
    pub fn completeness_deviation(&self) -> f64 {
        let mut sum = Operator::zeros(self.dim);
        for op in &self.ops {
            sum = &sum + &(&op.adjoint() * op);
        }
        sum.max_abs_diff(&Operator::identity(self.dim))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn outcome_count(&self) -> usize {
        self.ops.len()
    }

    pub fn kraus_operators(&self) -> &[Operator] {
        &self.ops
    }

    /// Kraus operator for a 1-based outcome label.
    pub fn kraus_operator(&self, outcome: usize) -> Result<&Operator, InstrumentError> {
        self.check_outcome(outcome)?;
        Ok(&self.ops[outcome - 1])
    }

    fn check_outcome(&self, outcome: usize) -> Result<(), InstrumentError> {
        if outcome == 0 || outcome > self.ops.len() {
            return Err(InstrumentError::OutcomeOutOfRange {
                outcome,
                count: self.ops.len(),
            });
        }
        Ok(())
    }

    fn check_state(&self, state: &StateVector) -> Result<(), InstrumentError> {
        if state.dim() != self.dim {
            return Err(InstrumentError::StateDimensionMismatch {
                state: state.dim(),
                instrument: self.dim,
            });
        }
        Ok(())
    }

    /// The outcome distribution p_x = ‖A_x ψ‖².
    pub fn outcome_probabilities(
        &self,
        state: &StateVector,
    ) -> Result<OutcomeDistribution, InstrumentError> {
        self.check_state(state)?;
        let raw: Vec<f64> = self
            .ops
            .iter()
            .map(|op| op.apply(state).map(|image| image.norm_sqr()))
            .collect::<Result<_, _>>()?;
        OutcomeDistribution::new(raw)
    }

    /// The normalized post-measurement state A_x ψ / ‖A_x ψ‖.
    pub fn post_state(
        &self,
        state: &StateVector,
        outcome: usize,
    ) -> Result<StateVector, InstrumentError> {
        self.check_state(state)?;
        self.check_outcome(outcome)?;
        let image = self.ops[outcome - 1].apply(state)?;
        if image.norm_sqr() < P_FLOOR {
            return Err(InstrumentError::OutcomeImpossible {
                outcome,
                probability: image.norm_sqr(),
            });
        }
        Ok(image
            .normalize()
            .expect("norm above the floor admits normalization"))
    }

    /// Conditional distribution of a second run given first outcome `x`,
    /// computed directly as ‖A_y A_x ψ‖² / ‖A_x ψ‖² without normalizing the
    /// intermediate state.
    pub fn repeat_conditional(
        &self,
        state: &StateVector,
        outcome: usize,
    ) -> Result<OutcomeDistribution, InstrumentError> {
        self.check_state(state)?;
        self.check_outcome(outcome)?;
        let first = self.ops[outcome - 1].apply(state)?;
        let p_first = first.norm_sqr();
        if p_first < P_FLOOR {
            return Err(InstrumentError::OutcomeImpossible {
                outcome,
                probability: p_first,
            });
        }
        let intermediate = first.into_dvector();
        let raw: Vec<f64> = self
            .ops
            .iter()
            .map(|op| op.apply_raw(&intermediate).norm_squared() / p_first)
            .collect();
        OutcomeDistribution::new(raw)
    }

    /// The POVM element E_x = A_x† A_x for a 1-based outcome label.
    pub fn povm_element(&self, outcome: usize) -> Result<Operator, InstrumentError> {
        self.check_outcome(outcome)?;
        let op = &self.ops[outcome - 1];
        Ok(&op.adjoint() * op)
    }

    /// Classifies the instrument within [`DEFAULT_TOL`].
    pub fn classify(&self) -> MeasurementClass {
        self.classify_with_tolerance(DEFAULT_TOL)
    }

    pub fn classify_with_tolerance(&self, tol: f64) -> MeasurementClass {
        let effects: Vec<Operator> = self
            .ops
            .iter()
            .map(|op| &op.adjoint() * op)
            .collect();
        let effects_projective = effects.iter().all(|e| e.projector_deviation() <= tol);
        let zero = Operator::zeros(self.dim);
        let pairwise_orthogonal = effects.iter().enumerate().all(|(i, a)| {
            effects
                .iter()
                .skip(i + 1)
                .all(|b| (a * b).max_abs_diff(&zero) <= tol)
        });
        if effects_projective && pairwise_orthogonal {
            if self.ops.iter().all(|op| op.projector_deviation() <= tol) {
                MeasurementClass::RepeatableProjective
            } else {
                MeasurementClass::ProjectivePovm
            }
        } else {
            MeasurementClass::General
        }
    }
}

/// Builds the instrument A_x = U_x Π_x from projectors that resolve the
/// identity and per-outcome rotations. The statistics are those of the
/// projective family; the post-states are rotated by U_x.
pub fn rotated_projective(
    projectors: &[crate::tensor::Projector],
    rotations: &[UnitaryOperator],
) -> Result<KrausInstrument, InstrumentError> {
    if projectors.is_empty() {
        return Err(InstrumentError::Empty);
    }
    if projectors.len() != rotations.len() {
        return Err(InstrumentError::LengthMismatch {
            projectors: projectors.len(),
            rotations: rotations.len(),
        });
    }
    let dim = projectors[0].dim();
    let mut sum = Operator::zeros(dim);
    for (index, p) in projectors.iter().enumerate() {
        if p.dim() != dim {
            return Err(InstrumentError::OperatorDimensionMismatch {
                index,
                dim: p.dim(),
                expected: dim,
            });
        }
        sum = &sum + p.as_operator();
    }
    let deviation = sum.max_abs_diff(&Operator::identity(dim));
    if deviation > DEFAULT_TOL {
        return Err(InstrumentError::FamilyIncomplete { deviation });
    }
    for (index, u) in rotations.iter().enumerate() {
        if u.dim() != dim {
            return Err(InstrumentError::OperatorDimensionMismatch {
                index,
                dim: u.dim(),
                expected: dim,
            });
        }
    }
    let ops: Vec<Operator> = projectors
        .iter()
        .zip(rotations.iter())
        .map(|(p, u)| u.as_operator() * p.as_operator())
        .collect();
    KrausInstrument::new(ops)
}
