use std::path::PathBuf;

use robustfolio_cli::config::{schema, RunConfig};

fn docs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../docs")
}

/// Set BLESS=1 to rewrite the published schema after changing a config type.
#[test]
fn published_schema_is_current() {
    let path = docs().join("config.schema.json");
    let fresh = serde_json::to_string_pretty(&schema()).unwrap() + "\n";
    if std::env::var_os("BLESS").is_some() {
        std::fs::write(&path, &fresh).unwrap();
    }
    let published = std::fs::read_to_string(&path).unwrap();
    assert!(published == fresh, "docs/config.schema.json is stale; rerun with BLESS=1");
}

#[test]
fn examples_validate_and_parse() {
    let validator = jsonschema::validator_for(&schema()).unwrap();
    let mut n = 0;
    for entry in std::fs::read_dir(docs().join("examples")).unwrap() {
        let path = entry.unwrap().path();
        let text = std::fs::read_to_string(&path).unwrap();
        let value: serde_json::Value = serde_json::from_str(&text).unwrap();
        let errors: Vec<String> = validator.iter_errors(&value).map(|e| e.to_string()).collect();
        assert!(errors.is_empty(), "{}: {errors:?}", path.display());
        RunConfig::from_json(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        n += 1;
    }
    assert!(n >= 5);
}

#[test]
fn schema_rejects_unknown_keys() {
    let validator = jsonschema::validator_for(&schema()).unwrap();
    let bad = serde_json::json!({"model": {"kind": "binomial", "a": 0.25}, "colour": 1});
    assert!(!validator.is_valid(&bad));
    let bad = serde_json::json!({"model": {"kind": "binomial", "a": 0.25, "b": 1}});
    assert!(!validator.is_valid(&bad));
    let bad = serde_json::json!({"wasserstein_p": "infinity"});
    assert!(!validator.is_valid(&bad));
}
