use thiserror::Error;

use crate::scheme::Violation;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecisionError {
    #[error("unknown site `{0}`")]
    UnknownSite(String),
    #[error("unknown equipment `{0}`")]
    UnknownEquipment(String),
    #[error("equipment `{equipment}` is not allowed at site `{site}`")]
    NotAllowed { site: String, equipment: String },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OptimizeError {
    #[error("instance too large for exhaustive search: {decisions} decisions exceed the limit of {limit}")]
    InstanceTooLarge { decisions: u128, limit: u128 },
    #[error("invalid search parameter: {0}")]
    InvalidParams(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CalibrationError {
    #[error("scheme has no measurements")]
    NoMeasurements,
    #[error("measurement at receiver `{receiver}` is not backed by installed equipment: {reason}")]
    DanglingMeasurement { receiver: String, reason: String },
    #[error("unknown obstacle `{0}`")]
    UnknownObstacle(String),
    #[error("invalid calibration config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("malformed document: {0}")]
    Malformed(String),
    #[error("unsupported format_version {found} (expected {expected})")]
    UnsupportedVersion { found: u64, expected: u64 },
    #[error("scenario violates {} invariant(s): {}", .0.len(), summarize(.0))]
    SchemaViolation(Vec<Violation>),
}

fn summarize(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}
