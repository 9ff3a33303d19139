//! JSON scenario and decision files.
//!
//! Field names carry their units (`_dBm`, `_dB`, `_m`, `_GHz`). Bearings
//! (`azimuth_deg`) are measured from the `+col` axis, counterclockwise
//! toward `+row`. Unknown fields are rejected. [`serialize_scenario`] emits the
//! canonical form: every field written, optional fields omitted when unset,
//! two-space indentation, trailing newline.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::ScenarioError;
use crate::scalar::Scalar;
use crate::scheme::{validate_scheme, GridScheme, PlacementDecision};

pub const FORMAT_VERSION: u64 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(deserialize = "T: Scalar"))]
pub struct ScenarioFile<T> {
    pub format_version: u64,
    pub scheme: GridScheme<T>,
    #[serde(default)]
    pub annotations: Map<String, Value>,
}

impl<T: Scalar> ScenarioFile<T> {
    pub fn new(scheme: GridScheme<T>) -> Self {
        Self { format_version: FORMAT_VERSION, scheme, annotations: Map::new() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecisionFile {
    pub format_version: u64,
    pub assignment: PlacementDecision,
}

fn check_version(bytes: &[u8]) -> Result<(), ScenarioError> {
    let value: Value = serde_json::from_slice(bytes).map_err(|e| ScenarioError::Malformed(e.to_string()))?;
    let version = value
        .as_object()
        .ok_or_else(|| ScenarioError::Malformed("top level must be a JSON object".into()))?
        .get("format_version")
        .ok_or_else(|| ScenarioError::Malformed("missing format_version".into()))?;
    match version.as_u64() {
        Some(FORMAT_VERSION) => Ok(()),
        Some(found) => Err(ScenarioError::UnsupportedVersion { found, expected: FORMAT_VERSION }),
        None => Err(ScenarioError::Malformed("format_version must be a non-negative integer".into())),
    }
}

/// Parses a scenario without checking scheme invariants.
pub fn parse_scenario_unchecked<T: Scalar>(bytes: &[u8]) -> Result<ScenarioFile<T>, ScenarioError> {
    check_version(bytes)?;
    serde_json::from_slice(bytes).map_err(|e| ScenarioError::Malformed(e.to_string()))
}

/// Strict parse: syntax, version, schema and every scheme invariant.
pub fn parse_scenario<T: Scalar>(bytes: &[u8]) -> Result<ScenarioFile<T>, ScenarioError> {
    let file = parse_scenario_unchecked(bytes)?;
    let violations = validate_scheme(&file.scheme);
    if violations.is_empty() {
        Ok(file)
    } else {
        Err(ScenarioError::SchemaViolation(violations))
    }
}

fn pretty<S: Serialize>(value: &S) -> String {
    let mut out = serde_json::to_string_pretty(value).expect("in-memory serialization cannot fail");
    out.push('\n');
    out
}

pub fn serialize_scenario<T: Scalar>(file: &ScenarioFile<T>) -> String {
    pretty(file)
}

pub fn parse_decision(bytes: &[u8]) -> Result<PlacementDecision, ScenarioError> {
    check_version(bytes)?;
    let file: DecisionFile = serde_json::from_slice(bytes).map_err(|e| ScenarioError::Malformed(e.to_string()))?;
    Ok(file.assignment)
}

pub fn serialize_decision(decision: &PlacementDecision) -> String {
    pretty(&DecisionFile { format_version: FORMAT_VERSION, assignment: decision.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scheme::{Cell, ViolationCode};

    const MINIMAL: &str = r#"{
  "format_version": 1,
  "scheme": {
    "width_cells": 10,
    "height_cells": 8,
    "cell_size_m": 2.5,
    "sites": [{"id": "s", "cell": {"col": 1, "row": 1}, "infra_cost": 3}],
    "equipment": [{"id": "e", "tx_power_dBm": 18, "tx_gain_dBi": 2, "cost": 1, "pattern": {"kind": "omni"}}]
  }
}"#;

    #[test]
    fn minimal_file_takes_defaults() {
        let f: ScenarioFile<f64> = parse_scenario(MINIMAL.as_bytes()).unwrap();
        assert_eq!(f.scheme.frequency_ghz, 2.44);
        assert_eq!(f.scheme.bitrate_table.steps.len(), 3);
        assert_eq!(f.scheme.sites[0].cell, Cell::new(1, 1));
        let canonical = serialize_scenario(&f);
        let again: ScenarioFile<f64> = parse_scenario(canonical.as_bytes()).unwrap();
        assert_eq!(again, f);
        assert_eq!(serialize_scenario(&again), canonical);
        assert!(canonical.contains("\"frequency_GHz\": 2.44"));
    }

    #[test]
    fn empty_and_garbage_are_malformed() {
        assert!(matches!(parse_scenario::<f64>(b""), Err(ScenarioError::Malformed(_))));
        assert!(matches!(parse_scenario::<f64>(b"[1,2]"), Err(ScenarioError::Malformed(_))));
        assert!(matches!(parse_scenario::<f64>(b"{\"scheme\": {}}"), Err(ScenarioError::Malformed(_))));
    }

    #[test]
    fn unknown_fields_rejected() {
        let s = MINIMAL.replace("\"cell_size_m\": 2.5,", "\"cell_size_m\": 2.5, \"colour\": 1,");
        assert!(matches!(parse_scenario::<f64>(s.as_bytes()), Err(ScenarioError::Malformed(_))));
    }

    #[test]
    fn version_checked() {
        let s = MINIMAL.replace("\"format_version\": 1", "\"format_version\": 7");
        assert!(matches!(
            parse_scenario::<f64>(s.as_bytes()),
            Err(ScenarioError::UnsupportedVersion { found: 7, expected: 1 })
        ));
    }

    #[test]
    fn invariants_checked() {
        let s = MINIMAL.replace("\"col\": 1, \"row\": 1", "\"col\": 50, \"row\": 1");
        match parse_scenario::<f64>(s.as_bytes()) {
            Err(ScenarioError::SchemaViolation(v)) => {
                assert_eq!(v[0].code, ViolationCode::OutOfBounds);
                assert_eq!(v[0].subject, "s");
            }
            other => panic!("expected schema violation, got {other:?}"),
        }
        assert!(parse_scenario_unchecked::<f64>(s.as_bytes()).is_ok());
    }

    #[test]
    fn decision_file_round_trip() {
        let d: PlacementDecision = [("b", "x"), ("a", "y")].into_iter().collect();
        let text = serialize_decision(&d);
        assert_eq!(parse_decision(text.as_bytes()).unwrap(), d);
        assert!(text.find("\"a\"").unwrap() < text.find("\"b\"").unwrap());
    }

    #[test]
    fn f32_round_trip() {
        let f: ScenarioFile<f32> = parse_scenario(MINIMAL.as_bytes()).unwrap();
        let text = serialize_scenario(&f);
        assert_eq!(parse_scenario::<f32>(text.as_bytes()).unwrap(), f);
    }
}
