//! Report types written to stdout.
//!
//! Every command emits exactly one report. JSON reports use the canonical
//! serializer, so two runs with the same inputs, flags and seeds produce
//! byte-identical output. Field declaration order here IS the output order;
//! do not reorder fields without a format version bump.

use serde::Serialize;

use crate::canonical::{float_repr, to_canonical_json};

#[derive(Serialize)]
pub struct ValidateInstrumentReport {
    pub command: &'static str,
    pub inputs_digest: String,
    pub kind: &'static str,
    pub valid: bool,
    pub dim: usize,
    pub outcomes: usize,
    pub class: &'static str,
    pub completeness_deviation: f64,
    pub tol: f64,
}

#[derive(Serialize)]
pub struct ValidateDilationReport {
    pub command: &'static str,
    pub inputs_digest: String,
    pub kind: &'static str,
    pub valid: bool,
    pub system_dim: usize,
    pub meter_dim: usize,
    pub unitarity_deviation: f64,
    pub tol: f64,
}

#[derive(Serialize)]
pub struct ValidateOzawaReport {
    pub command: &'static str,
    pub inputs_digest: String,
    pub kind: &'static str,
    pub valid: bool,
    pub dims: [usize; 3],
    pub outcomes: usize,
    pub unitarity_deviation: f64,
    pub tol: f64,
}

#[derive(Serialize)]
pub struct ValidateAgentsReport {
    pub command: &'static str,
    pub inputs_digest: String,
    pub kind: &'static str,
    pub valid: bool,
    pub dim: usize,
    pub alice_outcomes: usize,
    pub bob_outcomes: usize,
    pub bob_class: &'static str,
    pub tol: f64,
}

#[derive(Serialize)]
pub struct DilateReport {
    pub command: &'static str,
    pub inputs_digest: String,
    pub system_dim: usize,
    pub meter_dim: usize,
    pub unitary_dim: usize,
    pub unitarity_deviation: f64,
    pub checked: bool,
    pub states: usize,
    pub seed: u64,
    pub tol: f64,
    pub max_probability_deviation: Option<f64>,
    pub min_post_state_overlap: Option<f64>,
    pub verified: bool,
}

#[derive(Serialize)]
pub struct OzawaVerifyReport {
    pub command: &'static str,
    pub inputs_digest: String,
    pub dims: [usize; 3],
    pub outcomes: usize,
    pub states: usize,
    pub seed: u64,
    pub tol: f64,
    pub unitarity_deviation: f64,
    pub reproducible: bool,
    pub max_operator_deviation: f64,
    pub off_diagonal_mass: Option<f64>,
    pub verified: bool,
}

#[derive(Serialize)]
pub struct OzawaBuildReport {
    pub command: &'static str,
    pub dim: usize,
    pub seed: Option<u64>,
    pub out: String,
    pub output_digest: String,
}

#[derive(Serialize)]
pub struct AgentsRunReport {
    pub command: &'static str,
    pub inputs_digest: String,
    pub dim: usize,
    pub alice_outcomes: usize,
    pub bob_outcomes: usize,
    pub trials: u64,
    pub seed: u64,
    pub predicted_probability: f64,
    pub empirical_frequency: f64,
    pub agreement_count: u64,
    pub three_sigma_lower: f64,
    pub three_sigma_upper: f64,
    pub contingency: Vec<Vec<u64>>,
}

impl AgentsRunReport {
    pub fn to_json(&self) -> String {
        to_canonical_json(self)
    }

    /// Tab-separated `key<TAB>value` lines carrying the same information as
    /// the JSON form, floats in the same 17-digit representation. Matrix
    /// cells become dotted keys like `contingency.2.1` (row.column, both
    /// 1-based outcome labels).
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        let mut push = |key: &str, value: String| {
            out.push_str(key);
            out.push('\t');
            out.push_str(&value);
            out.push('\n');
        };
        push("command", self.command.to_string());
        push("inputs_digest", self.inputs_digest.clone());
        push("dim", self.dim.to_string());
        push("alice_outcomes", self.alice_outcomes.to_string());
        push("bob_outcomes", self.bob_outcomes.to_string());
        push("trials", self.trials.to_string());
        push("seed", self.seed.to_string());
        push("predicted_probability", float_repr(self.predicted_probability));
        push("empirical_frequency", float_repr(self.empirical_frequency));
        push("agreement_count", self.agreement_count.to_string());
        push("three_sigma_lower", float_repr(self.three_sigma_lower));
        push("three_sigma_upper", float_repr(self.three_sigma_upper));
        for (y, row) in self.contingency.iter().enumerate() {
            for (z, count) in row.iter().enumerate() {
                push(&format!("contingency.{}.{}", y + 1, z + 1), count.to_string());
            }
        }
        out
    }
}
