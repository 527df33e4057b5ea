use std::path::PathBuf;

use smoney::scenarios::{bundled, parse_scenario, render_scenario, ErrorCode};
use smoney::sim::{run, IssuerStrategy, UserStrategy};

fn dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios")
}

/// Set `SMONEY_BLESS=1` to rewrite the checked-in files from the builders.
#[test]
fn checked_in_files_match_the_builders() {
    let bless = std::env::var_os("SMONEY_BLESS").is_some();
    for s in bundled() {
        let path = dir().join(format!("{}.scn", s.name));
        let rendered = render_scenario(&s);
        if bless {
            std::fs::write(&path, &rendered).unwrap();
        }
        let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(text, rendered, "{} is stale", path.display());
        assert_eq!(parse_scenario(&text).unwrap(), s);
    }
}

#[test]
fn runs_are_reproducible_to_the_byte() {
    for s in bundled() {
        let a = run(&s, &UserStrategy::Honest, &IssuerStrategy::Honest, 7).unwrap().to_jsonl();
        let b = run(&s, &UserStrategy::Honest, &IssuerStrategy::Honest, 7).unwrap().to_jsonl();
        assert_eq!(a, b, "{}", s.name);
        let reparsed = parse_scenario(&render_scenario(&s)).unwrap();
        assert_eq!(run(&reparsed, &UserStrategy::Honest, &IssuerStrategy::Honest, 7).unwrap().to_jsonl(), a);
    }
}

#[test]
fn cyclic_graphs_are_rejected_with_a_line() {
    let text = "\
scn-version: 1
[scenario]
name: loop
[network]
model: explicit-dag
point: A t=0 site=A
point: B t=1 site=B
edge: A B delay=1
edge: B A delay=1
inputs: A
presentations: B
[scheme]
kind: free-choice-optimal
predicate: unconditional
";
    let errors = parse_scenario(text).unwrap_err();
    let cycle = errors.iter().find(|e| e.code == ErrorCode::Acyclicity).unwrap_or_else(|| panic!("{errors:?}"));
    assert!(cycle.line > 0);
}

#[test]
fn unknown_version_is_refused() {
    let errors = parse_scenario("scn-version: 9\n").unwrap_err();
    assert_eq!(errors[0].code, ErrorCode::Version);
}
