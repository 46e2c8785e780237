//! Golden-file checks for the rule-spec text format: the shipped catalog
//! files are canonical, so parse-then-serialize must reproduce them
//! byte-for-byte, and loading them must reproduce the built-in rules.

use std::fs;
use std::path::PathBuf;

use scorerep::catalog::{catalog_rule, parse_rule_spec, serialize_rule_spec, CatalogName};

fn rules_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../rules")
}

#[test]
fn golden_files_are_canonical() {
    for name in ["log.rule", "brier.rule", "log_truth.rule", "improper.rule", "step_at_one.rule"]
    {
        let path = rules_dir().join(name);
        let text = fs::read_to_string(&path).unwrap();
        let doc = parse_rule_spec(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(serialize_rule_spec(&doc), text, "{name} is not canonical");
    }
}

#[test]
fn golden_log_matches_catalog() {
    let text = fs::read_to_string(rules_dir().join("log.rule")).unwrap();
    let loaded = parse_rule_spec(&text).unwrap().load().unwrap();
    let builtin = catalog_rule(CatalogName::Log);
    for i in 0..=100 {
        let x = i as f64 / 100.0;
        assert_eq!(loaded.truth_score.eval(x), builtin.truth_score.eval(x));
        assert_eq!(loaded.false_score.eval(x), builtin.false_score.eval(x));
    }
    assert_eq!(loaded.offset, builtin.offset);
}

#[test]
fn golden_brier_matches_catalog() {
    let text = fs::read_to_string(rules_dir().join("brier.rule")).unwrap();
    let loaded = parse_rule_spec(&text).unwrap().load().unwrap();
    let builtin = catalog_rule(CatalogName::Brier);
    for i in 0..=100 {
        let x = i as f64 / 100.0;
        assert_eq!(loaded.truth_score.eval(x), builtin.truth_score.eval(x));
        assert_eq!(loaded.false_score.eval(x), builtin.false_score.eval(x));
    }
}
