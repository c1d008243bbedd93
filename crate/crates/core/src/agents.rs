//! Alice measures, Bob measures what's left: do their reports agree?
//!
//! Alice performs a rank-one measurement along an orthonormal basis
//! χ₁…χ_d, which leaves the system exactly in the basis state she saw.
//! Bob then applies an arbitrary instrument to that state. Both report a
//! label from their own outcome sets; this module computes the exact
//! probability that the labels coincide and estimates it by seeded
//! Monte Carlo with a per-trial RNG stream, so results are independent of
//! thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::instruments::{InstrumentError, KrausInstrument, OutcomeDistribution, P_FLOOR};
use crate::tensor::{C64, DEFAULT_TOL, StateVector, TensorError};

#[derive(Debug, Error)]
pub enum AgentError {
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Instrument(#[from] InstrumentError),
    #[error("Alice needs at least one basis state")]
    EmptyBasis,
    #[error("Alice's basis has {states} states in dimension {dim}; it must be complete")]
    BasisSizeMismatch { states: usize, dim: usize },
    #[error("basis state {index} has dimension {dim}, expected {expected}")]
    BasisStateDimension {
        index: usize,
        dim: usize,
        expected: usize,
    },
    #[error("Alice's basis is not orthonormal: deviation {deviation:e}")]
    BasisNotOrthonormal { deviation: f64 },
    #[error("Bob's instrument acts on dimension {bob}, the system has dimension {system}")]
    BobDimensionMismatch { bob: usize, system: usize },
    #[error("outcome {outcome} is outside 1..={count}")]
    OutcomeOutOfRange { outcome: usize, count: usize },
    #[error("outcome {outcome} has probability {probability:e}, below the floor")]
    OutcomeImpossible { outcome: usize, probability: f64 },
}

/// One simulated round: Alice's label, Bob's label, and whether they match.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TrialRecord {
    alice_outcome: usize,
    bob_outcome: usize,
}

impl TrialRecord {
    pub fn new(alice_outcome: usize, bob_outcome: usize) -> Self {
        Self {
            alice_outcome,
            bob_outcome,
        }
    }

    pub fn alice_outcome(&self) -> usize {
        self.alice_outcome
    }

    pub fn bob_outcome(&self) -> usize {
        self.bob_outcome
    }

    pub fn agreed(&self) -> bool {
        self.alice_outcome == self.bob_outcome
    }
}

/// Summary of a Monte Carlo run, with the exact prediction alongside the
/// empirical frequency and a three-sigma binomial band around the
/// prediction.
#[derive(Clone, Debug, PartialEq)]
pub struct SimReport {
    pub trials: u64,
    pub agreement_count: u64,
    pub empirical_frequency: f64,
    pub predicted_probability: f64,
    pub three_sigma_lower: f64,
    pub three_sigma_upper: f64,
    /// Row `y`, column `z`: how often Alice reported y+1 and Bob z+1.
    pub contingency: Vec<Vec<u64>>,
}

impl SimReport {
    /// True when the empirical frequency falls inside the band (inclusive).
    pub fn within_band(&self) -> bool {
        self.empirical_frequency >= self.three_sigma_lower
            && self.empirical_frequency <= self.three_sigma_upper
    }
}

/// Alice's rank-one basis measurement followed by Bob's instrument on the
/// collapsed state.
#[derive(Clone, Debug)]
pub struct AgentScenario {
    alice_basis: Vec<StateVector>,
    bob: KrausInstrument,
    initial: StateVector,
    dim: usize,
}

impl AgentScenario {
    pub fn new(
        alice_basis: Vec<StateVector>,
        bob: KrausInstrument,
        initial: StateVector,
    ) -> Result<Self, AgentError> {
        if alice_basis.is_empty() {
            return Err(AgentError::EmptyBasis);
        }
        let dim = initial.dim();
        if alice_basis.len() != dim {
            return Err(AgentError::BasisSizeMismatch {
                states: alice_basis.len(),
                dim,
            });
        }
        for (index, chi) in alice_basis.iter().enumerate() {
            if chi.dim() != dim {
                return Err(AgentError::BasisStateDimension {
                    index,
                    dim: chi.dim(),
                    expected: dim,
                });
            }
        }
        let mut deviation = 0.0f64;
        for (i, a) in alice_basis.iter().enumerate() {
            for (j, b) in alice_basis.iter().enumerate().skip(i) {
                let target = if i == j { 1.0 } else { 0.0 };
                deviation = deviation.max((a.inner(b) - C64::new(target, 0.0)).norm());
            }
        }
        if deviation > DEFAULT_TOL {
            return Err(AgentError::BasisNotOrthonormal { deviation });
        }
        if bob.dim() != dim {
            return Err(AgentError::BobDimensionMismatch {
                bob: bob.dim(),
                system: dim,
            });
        }
        Ok(Self {
            alice_basis,
            bob,
            initial,
            dim,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn alice_outcome_count(&self) -> usize {
        self.alice_basis.len()
    }

    pub fn bob_outcome_count(&self) -> usize {
        self.bob.outcome_count()
    }

    pub fn alice_basis(&self) -> &[StateVector] {
        &self.alice_basis
    }

    pub fn bob_instrument(&self) -> &KrausInstrument {
        &self.bob
    }

    pub fn initial_state(&self) -> &StateVector {
        &self.initial
    }

    /// Alice's outcome distribution p_y = ∣⟨χ_y∣ψ⟩∣².
    pub fn alice_distribution(&self) -> Result<OutcomeDistribution, AgentError> {
        let raw: Vec<f64> = self
            .alice_basis
            .iter()
            .map(|chi| chi.inner(&self.initial).norm_sqr())
            .collect();
        Ok(OutcomeDistribution::new(raw)?)
    }

    /// The state Alice leaves behind after reporting `alice_outcome`: the
    /// basis state itself, independent of the input state.
    pub fn post_alice_state(&self, alice_outcome: usize) -> Result<&StateVector, AgentError> {
        self.check_alice_outcome(alice_outcome)?;
        Ok(&self.alice_basis[alice_outcome - 1])
    }

    fn check_alice_outcome(&self, outcome: usize) -> Result<(), AgentError> {
        if outcome == 0 || outcome > self.alice_basis.len() {
            return Err(AgentError::OutcomeOutOfRange {
                outcome,
                count: self.alice_basis.len(),
            });
        }
        Ok(())
    }

    /// Bob's report distribution conditioned on Alice having seen
    /// `alice_outcome`; refused when her outcome has probability below the
    /// floor, since there is then no state to hand over.
    pub fn bob_report_distribution(
        &self,
        alice_outcome: usize,
    ) -> Result<OutcomeDistribution, AgentError> {
        self.check_alice_outcome(alice_outcome)?;
        let p = self.alice_basis[alice_outcome - 1]
            .inner(&self.initial)
            .norm_sqr();
        if p < P_FLOOR {
            return Err(AgentError::OutcomeImpossible {
                outcome: alice_outcome,
                probability: p,
            });
        }
        Ok(self
            .bob
            .outcome_probabilities(&self.alice_basis[alice_outcome - 1])?)
    }

    fn bob_distributions(&self) -> Result<Vec<OutcomeDistribution>, AgentError> {
        self.alice_basis
            .iter()
            .map(|chi| Ok(self.bob.outcome_probabilities(chi)?))
            .collect()
    }

    /// Exact agreement probability Σ_y p_y · q_y(y), where q_y is Bob's
    /// distribution on the collapsed state χ_y. Labels Alice can produce
    /// but Bob cannot contribute zero.
    pub fn agreement_probability(&self) -> Result<f64, AgentError> {
        let alice = self.alice_distribution()?;
        let bob_dists = self.bob_distributions()?;
        let n_bob = self.bob.outcome_count();
        let mut total = 0.0;
        for y in 1..=self.alice_basis.len() {
            let p = alice.prob(y);
            if p < P_FLOOR || y > n_bob {
                continue;
            }
            total += p * bob_dists[y - 1].prob(y);
        }
        Ok(total)
    }

    /// One seeded round: ChaCha stream `index` of `seed` drives first
    /// Alice's draw, then Bob's.
    pub fn sample_trial(&self, seed: u64, index: u64) -> Result<TrialRecord, AgentError> {
        let alice = self.alice_distribution()?;
        let bob_dists = self.bob_distributions()?;
        Ok(run_one(&alice, &bob_dists, seed, index))
    }

    /// Seeded Monte Carlo over `trials` rounds.
    ///
    /// Trial i draws from ChaCha stream i of `seed`, and the per-thread
    /// tallies are merged by addition, so the report is byte-identical for
    /// every thread count.
    pub fn run_trials(&self, trials: u64, seed: u64) -> Result<SimReport, AgentError> {
        assert!(trials > 0, "at least one trial is needed");
        let alice = self.alice_distribution()?;
        let bob_dists = self.bob_distributions()?;
        let n_a = self.alice_basis.len();
        let n_b = self.bob.outcome_count();

        let zero = || (0u64, vec![0u64; n_a * n_b]);
        let (agreement_count, flat) = (0..trials)
            .into_par_iter()
            .map(|i| run_one(&alice, &bob_dists, seed, i))
            .fold(zero, |mut acc, trial| {
                if trial.agreed() {
                    acc.0 += 1;
                }
                acc.1[(trial.alice_outcome() - 1) * n_b + (trial.bob_outcome() - 1)] += 1;
                acc
            })
            .reduce(zero, |mut a, b| {
                a.0 += b.0;
                for (x, y) in a.1.iter_mut().zip(b.1) {
                    *x += y;
                }
                a
            });

        let predicted = self.agreement_probability()?;
        let empirical = agreement_count as f64 / trials as f64;
        let sigma = (predicted * (1.0 - predicted) / trials as f64).sqrt();
        let contingency = (0..n_a)
            .map(|y0| flat[y0 * n_b..(y0 + 1) * n_b].to_vec())
            .collect();
        Ok(SimReport {
            trials,
            agreement_count,
            empirical_frequency: empirical,
            predicted_probability: predicted,
            three_sigma_lower: predicted - 3.0 * sigma,
            three_sigma_upper: predicted + 3.0 * sigma,
            contingency,
        })
    }
}

fn run_one(
    alice: &OutcomeDistribution,
    bob_dists: &[OutcomeDistribution],
    seed: u64,
    index: u64,
) -> TrialRecord {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let y = alice.sample(rng.random::<f64>());
    let z = bob_dists[y - 1].sample(rng.random::<f64>());
    TrialRecord::new(y, z)
}
