#![allow(dead_code)]

use serde_json::{json, Value};

const SCHEMA: &str = include_str!("../../schemas/reports.schema.json");

/// Validates `instance` against `#/$defs/<definition>` of the shipped schema.
pub fn assert_matches_schema(definition: &str, instance: &Value) {
    let mut schema: Value = serde_json::from_str(SCHEMA).expect("schema is JSON");
    assert!(schema["$defs"].get(definition).is_some(), "no definition {definition}");
    schema["$ref"] = json!(format!("#/$defs/{definition}"));
    let validator = jsonschema::validator_for(&schema).expect("schema compiles");
    let errors: Vec<String> = validator
        .iter_errors(instance)
        .map(|e| format!("{} at {}", e, e.instance_path()))
        .collect();
    assert!(errors.is_empty(), "{definition}: {errors:#?}");
}
