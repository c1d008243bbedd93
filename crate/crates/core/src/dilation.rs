//! Unitary meter models for Kraus instruments.
//!
//! A dilation couples the system (dimension d) to a meter whose dimension
//! equals the number of outcomes N. One unitary on the composite space,
//! acting on ψ ⊗ ∣meter = 0⟩, reproduces the instrument exactly: reading
//! meter value x has probability ‖A_x ψ‖² and leaves the system factor in
//! the corresponding post-state. Composite indices are big-endian with the
//! system slowest: pair (i, x) sits at i·N + x.

use nalgebra::DVector;
use thiserror::Error;

use crate::instruments::{InstrumentError, KrausInstrument, OutcomeDistribution, P_FLOOR};
use crate::tensor::{
    complete_columns, C64, DEFAULT_TOL, Operator, StateVector, TensorError, UnitaryOperator,
};

#[derive(Debug, Error)]
pub enum DilationError {
    #[error(transparent)]
    Instrument(#[from] InstrumentError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("state has dimension {state}, system has dimension {system}")]
    StateDimensionMismatch { state: usize, system: usize },
    #[error("unitary of dimension {unitary_dim} does not factor over a meter of dimension {meter_dim}")]
    MeterDimensionMismatch { unitary_dim: usize, meter_dim: usize },
    #[error("outcome {outcome} is outside 1..={count}")]
    OutcomeOutOfRange { outcome: usize, count: usize },
    #[error("outcome {outcome} has probability {probability:e}, below the floor")]
    OutcomeImpossible { outcome: usize, probability: f64 },
}

/// A unitary on system ⊗ meter that models a measurement: run the unitary
/// against the meter's ground state, then read the meter.
#[derive(Clone, Debug, PartialEq)]
pub struct DilationModel {
    system_dim: usize,
    meter_dim: usize,
    unitary: UnitaryOperator,
}

impl DilationModel {
    /// Builds the canonical dilation of an instrument.
    ///
    /// Column s·N of the unitary (input ∣s⟩ ⊗ ∣0⟩) is pinned to
    /// Σ_x (A_x ∣s⟩) ⊗ ∣x⟩; the remaining columns are filled by the
    /// deterministic completion in [`complete_columns`]. Completeness of the
    /// instrument makes the pinned columns orthonormal.
    pub fn build(instrument: &KrausInstrument) -> Result<Self, DilationError> {
        let d = instrument.dim();
        let n = instrument.outcome_count();
        let total = d * n;
        let mut pinned: Vec<(usize, DVector<C64>)> = Vec::with_capacity(d);
        for s in 0..d {
            let mut column = DVector::zeros(total);
            for (x0, op) in instrument.kraus_operators().iter().enumerate() {
                for i in 0..d {
                    column[i * n + x0] = op.entry(i, s);
                }
            }
            pinned.push((s * n, column));
        }
        let unitary = complete_columns(&pinned, total, DEFAULT_TOL)?;
        Ok(Self {
            system_dim: d,
            meter_dim: n,
            unitary,
        })
    }

    /// Wraps an existing composite unitary as a meter model.
    pub fn from_unitary(
        meter_dim: usize,
        unitary: UnitaryOperator,
    ) -> Result<Self, DilationError> {
        if meter_dim == 0 || unitary.dim() % meter_dim != 0 {
            return Err(DilationError::MeterDimensionMismatch {
                unitary_dim: unitary.dim(),
                meter_dim,
            });
        }
        Ok(Self {
            system_dim: unitary.dim() / meter_dim,
            meter_dim,
            unitary,
        })
    }

    pub fn system_dim(&self) -> usize {
        self.system_dim
    }

    pub fn meter_dim(&self) -> usize {
        self.meter_dim
    }

    pub fn unitary(&self) -> &UnitaryOperator {
        &self.unitary
    }

    /// The meter's pre-measurement state ∣0⟩.
    pub fn initial_meter_state(&self) -> StateVector {
        StateVector::basis(self.meter_dim, 0)
    }

    /// Reads the instrument back out of the unitary: A_x is the system block
    /// connecting meter input 0 to meter output x.
    pub fn induced_instrument(&self) -> Result<KrausInstrument, DilationError> {
        let d = self.system_dim;
        let n = self.meter_dim;
        let ops: Vec<Operator> = (0..n)
            .map(|x0| {
                Operator::from_fn(d, |i, j| self.unitary.entry(i * n + x0, j * n))
            })
            .collect();
        Ok(KrausInstrument::new(ops)?)
    }

    fn check_state(&self, state: &StateVector) -> Result<(), DilationError> {
        if state.dim() != self.system_dim {
            return Err(DilationError::StateDimensionMismatch {
                state: state.dim(),
                system: self.system_dim,
            });
        }
        Ok(())
    }

    fn evolved(&self, state: &StateVector) -> Result<DVector<C64>, DilationError> {
        self.check_state(state)?;
        let input = state.tensor(&self.initial_meter_state());
        Ok(self.unitary.apply(&input)?.into_dvector())
    }

    /// Meter reading distribution: p_x = Σ_i ∣Φ[i·N + (x−1)]∣² for
    /// Φ = U(ψ ⊗ ∣0⟩).
    pub fn probabilities(&self, state: &StateVector) -> Result<OutcomeDistribution, DilationError> {
        let phi = self.evolved(state)?;
        let n = self.meter_dim;
        let raw: Vec<f64> = (0..n)
            .map(|x0| {
                (0..self.system_dim)
                    .map(|i| phi[i * n + x0].norm_sqr())
                    .sum()
            })
            .collect();
        Ok(OutcomeDistribution::new(raw)?)
    }

    /// The system factor after reading meter value `outcome`, renormalized.
    pub fn post_state(
        &self,
        state: &StateVector,
        outcome: usize,
    ) -> Result<StateVector, DilationError> {
        if outcome == 0 || outcome > self.meter_dim {
            return Err(DilationError::OutcomeOutOfRange {
                outcome,
                count: self.meter_dim,
            });
        }
        let phi = self.evolved(state)?;
        let n = self.meter_dim;
        let x0 = outcome - 1;
        let block = DVector::from_fn(self.system_dim, |i, _| phi[i * n + x0]);
        let probability = block.norm_squared();
        if probability < P_FLOOR {
            return Err(DilationError::OutcomeImpossible {
                outcome,
                probability,
            });
        }
        let scale = C64::new(1.0 / probability.sqrt(), 0.0);
        Ok(StateVector::from_dvector(block * scale))
    }
}
