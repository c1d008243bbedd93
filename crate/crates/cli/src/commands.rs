//! Command implementations.
//!
//! Every command returns a [`CommandOutcome`]: the report text for stdout,
//! an optional diagnostic line for stderr, and whether verification passed.
//! The caller turns that into the process exit code. Errors returned from
//! here mean the input itself was unusable (exit code 1); a readable input
//! that fails its checks is a normal outcome with `verified: false`
//! (exit code 2).

use std::path::Path;

use qmeas::random::{random_orthonormal_family, random_state};
use qmeas::{
    build_reproducible_scenario, canonical_reproducible_scenario, DilationModel, StateVector,
    DEFAULT_TOL,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::canonical::to_canonical_json;
use crate::report::{
    AgentsRunReport, DilateReport, OzawaBuildReport, OzawaVerifyReport, ValidateAgentsReport,
    ValidateDilationReport, ValidateInstrumentReport, ValidateOzawaReport,
};
use crate::scenario::{parse_scenario, ozawa_file_string, sha256_hex, Scenario, ScenarioError};

/// Post-state overlap is only compared where the direct description gives
/// the outcome at least this much probability; below it the post-state is
/// numerically meaningless in both descriptions.
const OVERLAP_P_FLOOR: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("cannot write {path}: {source}")]
    Write {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Domain(String),
}

fn domain(err: impl std::fmt::Display) -> CliError {
    CliError::Domain(err.to_string())
}

/// What a successfully executed command wants the process to do.
pub struct CommandOutcome {
    pub stdout: String,
    pub diagnostic: Option<String>,
    pub verified: bool,
}

impl CommandOutcome {
    fn ok(stdout: String) -> Self {
        CommandOutcome {
            stdout,
            diagnostic: None,
            verified: true,
        }
    }
}

/// Output selector for `agents run`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Json,
    Tsv,
}

pub fn cmd_validate(path: &Path) -> Result<CommandOutcome, CliError> {
    let parsed = parse_scenario(path)?;
    let stdout = match &parsed.scenario {
        Scenario::Instrument(instr) => to_canonical_json(&ValidateInstrumentReport {
            command: "validate",
            inputs_digest: parsed.digest,
            kind: "instrument",
            valid: true,
            dim: instr.dim(),
            outcomes: instr.outcome_count(),
            class: instr.classify().as_str(),
            completeness_deviation: instr.completeness_deviation(),
            tol: DEFAULT_TOL,
        }),
        Scenario::Dilation(model) => to_canonical_json(&ValidateDilationReport {
            command: "validate",
            inputs_digest: parsed.digest,
            kind: "dilation",
            valid: true,
            system_dim: model.system_dim(),
            meter_dim: model.meter_dim(),
            unitarity_deviation: model.unitary().unitarity_deviation(),
            tol: DEFAULT_TOL,
        }),
        Scenario::Ozawa(scn) => to_canonical_json(&ValidateOzawaReport {
            command: "validate",
            inputs_digest: parsed.digest,
            kind: "ozawa",
            valid: true,
            dims: [scn.system_dim(), scn.meter1_dim(), scn.meter2_dim()],
            outcomes: scn.outcome_count(),
            unitarity_deviation: scn.unitary().unitarity_deviation(),
            tol: DEFAULT_TOL,
        }),
        Scenario::Agents(scn) => to_canonical_json(&ValidateAgentsReport {
            command: "validate",
            inputs_digest: parsed.digest,
            kind: "agents",
            valid: true,
            dim: scn.dim(),
            alice_outcomes: scn.alice_outcome_count(),
            bob_outcomes: scn.bob_outcome_count(),
            bob_class: scn.bob_instrument().classify().as_str(),
            tol: DEFAULT_TOL,
        }),
    };
    Ok(CommandOutcome::ok(stdout))
}

pub fn cmd_dilate(
    path: &Path,
    check: bool,
    states: usize,
    tol: f64,
    seed: u64,
) -> Result<CommandOutcome, CliError> {
    let parsed = parse_scenario(path)?;
    let found = parsed.scenario.kind_name();
    let Scenario::Instrument(instr) = parsed.scenario else {
        return Err(ScenarioError::WrongKind {
            expected: "instrument",
            found,
        }
        .into());
    };
    let model = DilationModel::build(&instr).map_err(domain)?;
    let mut max_probability_deviation = None;
    let mut min_post_state_overlap = None;
    let mut verified = true;
    let mut diagnostic = None;
    if check {
        let mut max_dev: f64 = 0.0;
        let mut min_overlap: f64 = 1.0;
        for index in 0..states {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(index as u64);
            let psi = random_state(instr.dim(), &mut rng);
            let direct = instr.outcome_probabilities(&psi).map_err(domain)?;
            let via_meter = model.probabilities(&psi).map_err(domain)?;
            for x in 1..=instr.outcome_count() {
                max_dev = max_dev.max((direct.prob(x) - via_meter.prob(x)).abs());
                if direct.prob(x) >= OVERLAP_P_FLOOR {
                    let post_direct = instr.post_state(&psi, x).map_err(domain)?;
                    let post_meter = model.post_state(&psi, x).map_err(domain)?;
                    min_overlap = min_overlap.min(post_direct.overlap(&post_meter));
                }
            }
        }
        verified = max_dev <= tol && min_overlap >= 1.0 - tol;
        if !verified {
            diagnostic = Some(format!(
                "verification failed: max probability deviation {max_dev:e}, \
                 min post-state overlap {min_overlap}"
            ));
        }
        max_probability_deviation = Some(max_dev);
        min_post_state_overlap = Some(min_overlap);
    }
    let stdout = to_canonical_json(&DilateReport {
        command: "dilate",
        inputs_digest: parsed.digest,
        system_dim: model.system_dim(),
        meter_dim: model.meter_dim(),
        unitary_dim: model.unitary().dim(),
        unitarity_deviation: model.unitary().unitarity_deviation(),
        checked: check,
        states,
        seed,
        tol,
        max_probability_deviation,
        min_post_state_overlap,
        verified,
    });
    Ok(CommandOutcome {
        stdout,
        diagnostic,
        verified,
    })
}

pub fn cmd_ozawa_verify(
    path: &Path,
    states: usize,
    tol: f64,
    seed: u64,
) -> Result<CommandOutcome, CliError> {
    let parsed = parse_scenario(path)?;
    let found = parsed.scenario.kind_name();
    let Scenario::Ozawa(scn) = parsed.scenario else {
        return Err(ScenarioError::WrongKind {
            expected: "ozawa",
            found,
        }
        .into());
    };
    let unitarity_deviation = scn.unitary().unitarity_deviation();
    let repro = scn.check_reproducibility(tol);
    let mut off_diagonal_mass = None;
    let mut diagnostic = None;
    let verified = if unitarity_deviation > tol {
        diagnostic = Some(format!(
            "verification failed: coupling deviates from unitarity by {unitarity_deviation:e}"
        ));
        false
    } else if !repro.holds {
        diagnostic = Some(format!(
            "verification failed: effective meter observables deviate from the \
             system family by {:e}",
            repro.max_deviation
        ));
        false
    } else {
        match scn.verify_intersubjectivity_with_tolerance(states, seed, tol) {
            Ok(mass) => {
                off_diagonal_mass = Some(mass);
                if mass <= tol {
                    true
                } else {
                    diagnostic = Some(format!(
                        "verification failed: meters disagree with joint probability {mass:e}"
                    ));
                    false
                }
            }
            Err(err) => {
                diagnostic = Some(format!("verification failed while sampling: {err}"));
                false
            }
        }
    };
    let stdout = to_canonical_json(&OzawaVerifyReport {
        command: "ozawa-verify",
        inputs_digest: parsed.digest,
        dims: [scn.system_dim(), scn.meter1_dim(), scn.meter2_dim()],
        outcomes: scn.outcome_count(),
        states,
        seed,
        tol,
        unitarity_deviation,
        reproducible: repro.holds,
        max_operator_deviation: repro.max_deviation,
        off_diagonal_mass,
        verified,
    });
    Ok(CommandOutcome {
        stdout,
        diagnostic,
        verified,
    })
}

pub fn cmd_ozawa_build(dim: usize, out: &Path, seed: Option<u64>) -> Result<CommandOutcome, CliError> {
    let scenario = match seed {
        None => canonical_reproducible_scenario(dim).map_err(domain)?,
        Some(s) => {
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let meter1_basis = random_orthonormal_family(dim, dim, &mut rng);
            let meter2_basis = random_orthonormal_family(dim, dim, &mut rng);
            let posts: Vec<StateVector> =
                (0..dim).map(|_| random_state(dim, &mut rng)).collect();
            let xi1 = StateVector::basis(dim, 0);
            let xi2 = StateVector::basis(dim, 0);
            build_reproducible_scenario(&posts, &meter1_basis, &meter2_basis, &xi1, &xi2)
                .map_err(domain)?
        }
    };
    let contents = ozawa_file_string(&scenario);
    std::fs::write(out, &contents).map_err(|source| CliError::Write {
        path: out.display().to_string(),
        source,
    })?;
    let stdout = to_canonical_json(&OzawaBuildReport {
        command: "ozawa-build",
        dim,
        seed,
        out: out.display().to_string(),
        output_digest: sha256_hex(contents.as_bytes()),
    });
    Ok(CommandOutcome::ok(stdout))
}

pub fn cmd_agents_run(
    path: &Path,
    trials: u64,
    seed: u64,
    format: OutputFormat,
) -> Result<CommandOutcome, CliError> {
    let parsed = parse_scenario(path)?;
    let found = parsed.scenario.kind_name();
    let Scenario::Agents(scn) = parsed.scenario else {
        return Err(ScenarioError::WrongKind {
            expected: "agents",
            found,
        }
        .into());
    };
    let sim = scn.run_trials(trials, seed).map_err(domain)?;
    let report = AgentsRunReport {
        command: "agents-run",
        inputs_digest: parsed.digest,
        dim: scn.dim(),
        alice_outcomes: scn.alice_outcome_count(),
        bob_outcomes: scn.bob_outcome_count(),
        trials: sim.trials,
        seed,
        predicted_probability: sim.predicted_probability,
        empirical_frequency: sim.empirical_frequency,
        agreement_count: sim.agreement_count,
        three_sigma_lower: sim.three_sigma_lower,
        three_sigma_upper: sim.three_sigma_upper,
        contingency: sim.contingency,
    };
    let stdout = match format {
        OutputFormat::Json => report.to_json(),
        OutputFormat::Tsv => report.to_tsv(),
    };
    Ok(CommandOutcome::ok(stdout))
}
