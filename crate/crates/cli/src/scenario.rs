//! Scenario file parsing and canonical serialization.
//!
//! A scenario file is a JSON object with three top-level keys:
//!
//! ```json
//! {"format_version": 1, "kind": "instrument", "payload": {…}}
//! ```
//!
//! Complex numbers are two-element arrays `[re, im]`, vectors are arrays of
//! complex numbers, and matrices are arrays of rows. The four kinds and
//! their payload keys, in canonical order:
//!
//! * `instrument`: `kraus` (list of square matrices)
//! * `dilation`: `system_dim`, `meter_dim`, `unitary`
//! * `ozawa`: `dims` (`[d, m1, m2]`), `unitary` (acting on the composite
//!   space, system index slowest), `sys_projectors`, `meter1_projectors`,
//!   `meter2_projectors`, `xi1`, `xi2`
//! * `agents`: `alice_basis`, `bob_kraus`, `initial_state`
//!
//! Parsing checks structural invariants and attaches the offending field
//! path to every error. One deliberate exception: an `ozawa` coupling matrix
//! is checked for shape only, not unitarity, so that a corrupted coupling
//! reaches the verification step and fails there rather than at parse time.

use std::path::Path;

use qmeas::{
    AgentError, AgentScenario, DilationModel, InstrumentError, KrausInstrument, Operator,
    OzawaError, OzawaScenario, Projector, StateVector, TensorError, UnitaryOperator, C64,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// The only file format version this build reads and writes.
pub const FORMAT_VERSION: u32 = 1;

pub type RawComplex = [f64; 2];
pub type RawVector = Vec<RawComplex>;
pub type RawMatrix = Vec<RawVector>;

#[derive(Debug, Deserialize)]
struct RawFile {
    format_version: u32,
    kind: String,
    payload: serde_json::Value,
}

/// Envelope used when writing scenario files; field order is canonical.
#[derive(Serialize)]
struct FileEnvelope<'a, T: Serialize> {
    format_version: u32,
    kind: &'a str,
    payload: &'a T,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct InstrumentPayload {
    pub kraus: Vec<RawMatrix>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct DilationPayload {
    pub system_dim: usize,
    pub meter_dim: usize,
    pub unitary: RawMatrix,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct OzawaPayload {
    pub dims: [usize; 3],
    pub unitary: RawMatrix,
    pub sys_projectors: Vec<RawMatrix>,
    pub meter1_projectors: Vec<RawMatrix>,
    pub meter2_projectors: Vec<RawMatrix>,
    pub xi1: RawVector,
    pub xi2: RawVector,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct AgentsPayload {
    pub alice_basis: Vec<RawVector>,
    pub bob_kraus: Vec<RawMatrix>,
    pub initial_state: RawVector,
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}:{column}: not valid JSON: {message}")]
    Syntax {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("format_version {found} is not supported; this tool reads version {expected}")]
    Version { found: u32, expected: u32 },
    #[error("unknown scenario kind {found:?} (expected \"instrument\", \"dilation\", \"ozawa\" or \"agents\")")]
    UnknownKind { found: String },
    #[error("{field}: {message}")]
    Field { field: String, message: String },
    #[error("invariant \"{invariant}\" violated at {field}: {detail}")]
    Invariant {
        field: String,
        invariant: &'static str,
        detail: String,
    },
    #[error("expected a scenario of kind \"{expected}\", found kind \"{found}\"")]
    WrongKind {
        expected: &'static str,
        found: &'static str,
    },
}

impl ScenarioError {
    fn field(field: impl Into<String>, message: impl Into<String>) -> Self {
        ScenarioError::Field {
            field: field.into(),
            message: message.into(),
        }
    }

    fn invariant(field: impl Into<String>, invariant: &'static str, detail: String) -> Self {
        ScenarioError::Invariant {
            field: field.into(),
            invariant,
            detail,
        }
    }
}

/// A parsed scenario of any kind.
#[derive(Debug)]
pub enum Scenario {
    Instrument(KrausInstrument),
    Dilation(DilationModel),
    Ozawa(OzawaScenario),
    Agents(AgentScenario),
}

impl Scenario {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Scenario::Instrument(_) => "instrument",
            Scenario::Dilation(_) => "dilation",
            Scenario::Ozawa(_) => "ozawa",
            Scenario::Agents(_) => "agents",
        }
    }
}

/// A scenario together with the SHA-256 digest of the file bytes it came from.
#[derive(Debug)]
pub struct ParsedFile {
    pub scenario: Scenario,
    pub digest: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Reads and validates a scenario file from disk.
pub fn parse_scenario(path: &Path) -> Result<ParsedFile, ScenarioError> {
    let bytes = std::fs::read(path).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_scenario_bytes(&bytes, &path.display().to_string())
}

/// Validates scenario bytes; `label` names the source in error messages.
pub fn parse_scenario_bytes(bytes: &[u8], label: &str) -> Result<ParsedFile, ScenarioError> {
    let raw: RawFile = serde_json::from_slice(bytes).map_err(|err| ScenarioError::Syntax {
        path: label.to_string(),
        line: err.line(),
        column: err.column(),
        message: err.to_string(),
    })?;
    if raw.format_version != FORMAT_VERSION {
        return Err(ScenarioError::Version {
            found: raw.format_version,
            expected: FORMAT_VERSION,
        });
    }
    let scenario = match raw.kind.as_str() {
        "instrument" => Scenario::Instrument(parse_instrument(raw.payload)?),
        "dilation" => Scenario::Dilation(parse_dilation(raw.payload)?),
        "ozawa" => Scenario::Ozawa(parse_ozawa(raw.payload)?),
        "agents" => Scenario::Agents(parse_agents(raw.payload)?),
        other => return Err(ScenarioError::UnknownKind { found: other.to_string() }),
    };
    Ok(ParsedFile {
        scenario,
        digest: sha256_hex(bytes),
    })
}

fn decode_payload<T: for<'de> Deserialize<'de>>(
    payload: serde_json::Value,
) -> Result<T, ScenarioError> {
    serde_json::from_value(payload)
        .map_err(|err| ScenarioError::field("payload", err.to_string()))
}

/// Maps a tensor-level failure onto the field that carried the bad data.
fn tensor_error(field: &str, err: TensorError) -> ScenarioError {
    match err {
        TensorError::NotSquare { rows, cols } => ScenarioError::invariant(
            field,
            "square",
            format!("{rows} rows, {cols} columns"),
        ),
        TensorError::NotNormalized { norm, tol } => ScenarioError::invariant(
            field,
            "normalization",
            format!("norm {norm} differs from one by more than {tol:e}"),
        ),
        TensorError::NotUnitary { deviation, tol } => ScenarioError::invariant(
            field,
            "unitarity",
            format!("deviation {deviation:e} exceeds {tol:e}"),
        ),
        TensorError::NotProjector { deviation, tol } => ScenarioError::invariant(
            field,
            "projector",
            format!("deviation {deviation:e} exceeds {tol:e}"),
        ),
        other => ScenarioError::field(field, other.to_string()),
    }
}

fn to_complex(raw: RawComplex) -> C64 {
    C64::new(raw[0], raw[1])
}

fn to_state(raw: &RawVector, field: &str) -> Result<StateVector, ScenarioError> {
    let amplitudes: Vec<C64> = raw.iter().map(|&z| to_complex(z)).collect();
    StateVector::new(amplitudes).map_err(|err| tensor_error(field, err))
}

fn to_operator(raw: &RawMatrix, field: &str) -> Result<Operator, ScenarioError> {
    let rows: Vec<Vec<C64>> = raw
        .iter()
        .map(|row| row.iter().map(|&z| to_complex(z)).collect())
        .collect();
    Operator::new(rows).map_err(|err| tensor_error(field, err))
}

fn to_projector(raw: &RawMatrix, field: &str) -> Result<Projector, ScenarioError> {
    let op = to_operator(raw, field)?;
    Projector::new(op).map_err(|err| tensor_error(field, err))
}

fn parse_instrument(payload: serde_json::Value) -> Result<KrausInstrument, ScenarioError> {
    let payload: InstrumentPayload = decode_payload(payload)?;
    if payload.kraus.is_empty() {
        return Err(ScenarioError::field(
            "payload.kraus",
            "an instrument needs at least one Kraus operator",
        ));
    }
    let mut ops = Vec::with_capacity(payload.kraus.len());
    for (i, raw) in payload.kraus.iter().enumerate() {
        ops.push(to_operator(raw, &format!("payload.kraus[{i}]"))?);
    }
    KrausInstrument::new(ops).map_err(|err| match err {
        InstrumentError::CompletenessViolation { deviation } => ScenarioError::invariant(
            "payload.kraus",
            "completeness",
            format!("max entry of |\u{2211} A\u{2020}A \u{2212} I| is {deviation:e}"),
        ),
        other => ScenarioError::field("payload.kraus", other.to_string()),
    })
}

fn parse_dilation(payload: serde_json::Value) -> Result<DilationModel, ScenarioError> {
    let payload: DilationPayload = decode_payload(payload)?;
    if payload.system_dim == 0 || payload.meter_dim == 0 {
        return Err(ScenarioError::field(
            "payload.system_dim",
            "system and meter dimensions must be at least one",
        ));
    }
    let op = to_operator(&payload.unitary, "payload.unitary")?;
    let expected = payload
        .system_dim
        .checked_mul(payload.meter_dim)
        .ok_or_else(|| ScenarioError::field("payload.system_dim", "dimensions overflow"))?;
    if op.dim() != expected {
        return Err(ScenarioError::field(
            "payload.unitary",
            format!(
                "dimension {} is not system_dim \u{00d7} meter_dim = {expected}",
                op.dim()
            ),
        ));
    }
    let unitary =
        UnitaryOperator::new(op).map_err(|err| tensor_error("payload.unitary", err))?;
    DilationModel::from_unitary(payload.meter_dim, unitary)
        .map_err(|err| ScenarioError::field("payload", err.to_string()))
}

fn parse_ozawa(payload: serde_json::Value) -> Result<OzawaScenario, ScenarioError> {
    let payload: OzawaPayload = decode_payload(payload)?;
    let [d, m1, m2] = payload.dims;
    if d == 0 || m1 == 0 || m2 == 0 {
        return Err(ScenarioError::field(
            "payload.dims",
            "all three dimensions must be at least one",
        ));
    }
    let total = d
        .checked_mul(m1)
        .and_then(|p| p.checked_mul(m2))
        .ok_or_else(|| ScenarioError::field("payload.dims", "dimensions overflow"))?;
    let op = to_operator(&payload.unitary, "payload.unitary")?;
    if op.dim() != total {
        return Err(ScenarioError::field(
            "payload.unitary",
            format!("dimension {} is not d \u{00d7} m1 \u{00d7} m2 = {total}", op.dim()),
        ));
    }
    // Shape is validated above; unitarity is deferred to verification so a
    // corrupted coupling is reported as a failed check, not a parse error.
    let unitary = UnitaryOperator::new_unchecked(op);
    let families = [
        ("payload.sys_projectors", &payload.sys_projectors, d),
        ("payload.meter1_projectors", &payload.meter1_projectors, m1),
        ("payload.meter2_projectors", &payload.meter2_projectors, m2),
    ];
    let mut parsed: Vec<Vec<Projector>> = Vec::with_capacity(3);
    for (field, family, dim) in families {
        let mut projectors = Vec::with_capacity(family.len());
        for (i, raw) in family.iter().enumerate() {
            let path = format!("{field}[{i}]");
            let p = to_projector(raw, &path)?;
            if p.dim() != dim {
                return Err(ScenarioError::field(
                    path,
                    format!("dimension {} does not match dims ({dim})", p.dim()),
                ));
            }
            projectors.push(p);
        }
        parsed.push(projectors);
    }
    let meter2_projectors = parsed.pop().expect("three families were pushed");
    let meter1_projectors = parsed.pop().expect("three families were pushed");
    let sys_projectors = parsed.pop().expect("three families were pushed");
    let xi1 = to_state(&payload.xi1, "payload.xi1")?;
    let xi2 = to_state(&payload.xi2, "payload.xi2")?;
    if xi1.dim() != m1 {
        return Err(ScenarioError::field(
            "payload.xi1",
            format!("dimension {} does not match dims ({m1})", xi1.dim()),
        ));
    }
    if xi2.dim() != m2 {
        return Err(ScenarioError::field(
            "payload.xi2",
            format!("dimension {} does not match dims ({m2})", xi2.dim()),
        ));
    }
    OzawaScenario::new(
        unitary,
        sys_projectors,
        meter1_projectors,
        meter2_projectors,
        xi1,
        xi2,
    )
    .map_err(|err| match err {
        OzawaError::FamilyIncomplete { family, deviation } => ScenarioError::invariant(
            family_field(family),
            "resolution-of-identity",
            format!("sums to the identity only up to {deviation:e}"),
        ),
        other => ScenarioError::field("payload", other.to_string()),
    })
}

fn family_field(family: &str) -> &'static str {
    match family {
        "system" => "payload.sys_projectors",
        "meter-1" => "payload.meter1_projectors",
        _ => "payload.meter2_projectors",
    }
}

fn parse_agents(payload: serde_json::Value) -> Result<AgentScenario, ScenarioError> {
    let payload: AgentsPayload = decode_payload(payload)?;
    let mut basis = Vec::with_capacity(payload.alice_basis.len());
    for (i, raw) in payload.alice_basis.iter().enumerate() {
        basis.push(to_state(raw, &format!("payload.alice_basis[{i}]"))?);
    }
    if payload.bob_kraus.is_empty() {
        return Err(ScenarioError::field(
            "payload.bob_kraus",
            "Bob needs at least one Kraus operator",
        ));
    }
    let mut bob_ops = Vec::with_capacity(payload.bob_kraus.len());
    for (i, raw) in payload.bob_kraus.iter().enumerate() {
        bob_ops.push(to_operator(raw, &format!("payload.bob_kraus[{i}]"))?);
    }
    let bob = KrausInstrument::new(bob_ops).map_err(|err| match err {
        InstrumentError::CompletenessViolation { deviation } => ScenarioError::invariant(
            "payload.bob_kraus",
            "completeness",
            format!("max entry of |\u{2211} A\u{2020}A \u{2212} I| is {deviation:e}"),
        ),
        other => ScenarioError::field("payload.bob_kraus", other.to_string()),
    })?;
    let initial = to_state(&payload.initial_state, "payload.initial_state")?;
    AgentScenario::new(basis, bob, initial).map_err(|err| match err {
        AgentError::BasisNotOrthonormal { deviation } => ScenarioError::invariant(
            "payload.alice_basis",
            "orthonormality",
            format!("Gram matrix deviates from the identity by {deviation:e}"),
        ),
        AgentError::BasisSizeMismatch { .. } | AgentError::EmptyBasis => {
            ScenarioError::field("payload.alice_basis", err.to_string())
        }
        AgentError::BobDimensionMismatch { .. } => {
            ScenarioError::field("payload.bob_kraus", err.to_string())
        }
        other => ScenarioError::field("payload", other.to_string()),
    })
}

fn state_to_raw(state: &StateVector) -> RawVector {
    state.amplitudes().iter().map(|z| [z.re, z.im]).collect()
}

fn operator_to_raw(op: &Operator) -> RawMatrix {
    (0..op.dim())
        .map(|i| {
            (0..op.dim())
                .map(|j| {
                    let z = op.entry(i, j);
                    [z.re, z.im]
                })
                .collect()
        })
        .collect()
}

/// Renders an ozawa scenario as canonical file bytes.
pub fn ozawa_file_string(scenario: &OzawaScenario) -> String {
    let payload = OzawaPayload {
        dims: [
            scenario.system_dim(),
            scenario.meter1_dim(),
            scenario.meter2_dim(),
        ],
        unitary: operator_to_raw(scenario.unitary().as_operator()),
        sys_projectors: scenario
            .sys_projectors()
            .iter()
            .map(|p| operator_to_raw(p.as_operator()))
            .collect(),
        meter1_projectors: scenario
            .meter1_projectors()
            .iter()
            .map(|p| operator_to_raw(p.as_operator()))
            .collect(),
        meter2_projectors: scenario
            .meter2_projectors()
            .iter()
            .map(|p| operator_to_raw(p.as_operator()))
            .collect(),
        xi1: state_to_raw(scenario.xi1()),
        xi2: state_to_raw(scenario.xi2()),
    };
    crate::canonical::to_canonical_json(&FileEnvelope {
        format_version: FORMAT_VERSION,
        kind: "ozawa",
        payload: &payload,
    })
}

/// Renders an instrument as canonical file bytes.
pub fn instrument_file_string(instrument: &KrausInstrument) -> String {
    let payload = InstrumentPayload {
        kraus: instrument
            .kraus_operators()
            .iter()
            .map(operator_to_raw)
            .collect(),
    };
    crate::canonical::to_canonical_json(&FileEnvelope {
        format_version: FORMAT_VERSION,
        kind: "instrument",
        payload: &payload,
    })
}

/// Renders an agents scenario as canonical file bytes.
pub fn agents_file_string(scenario: &AgentScenario) -> String {
    let payload = AgentsPayload {
        alice_basis: scenario.alice_basis().iter().map(state_to_raw).collect(),
        bob_kraus: scenario
            .bob_instrument()
            .kraus_operators()
            .iter()
            .map(operator_to_raw)
            .collect(),
        initial_state: state_to_raw(scenario.initial_state()),
    };
    crate::canonical::to_canonical_json(&FileEnvelope {
        format_version: FORMAT_VERSION,
        kind: "agents",
        payload: &payload,
    })
}
