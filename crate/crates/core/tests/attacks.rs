use std::collections::BTreeSet;

use smoney::scenarios::{
    build_example3, classical_money, example1_default, example2_default, example4_default, fixed_path_small,
    subsets_small, Scenario,
};
use smoney::sim::{attack, audit_no_duplication, enumerate_user_attacks, run, IssuerStrategy, SimError, UserStrategy};
use smoney::PointId;

fn small_joint() -> Scenario {
    let s: BTreeSet<PointId> = ["P2", "P3"].map(PointId::from).into();
    build_example3(3, &[2, 5, 3], &[s.clone(), s.clone(), s]).unwrap()
}

fn small_scenarios() -> Vec<Scenario> {
    vec![example1_default(), example2_default(), small_joint(), example4_default(), subsets_small(), fixed_path_small()]
}

#[test]
fn strategy_count_matches_alphabet_product() {
    // Three inputs with four symbols each, two presentation points.
    let strategies = enumerate_user_attacks(&example1_default(), 1 << 20).unwrap();
    assert_eq!(strategies.len(), 4 * 4 * 4 * 4);
    let distinct: BTreeSet<String> = strategies.iter().map(|s| format!("{s:?}")).collect();
    assert_eq!(distinct.len(), strategies.len());
    // Two inputs: 16 statement assignments times 4 presentation sets.
    assert_eq!(enumerate_user_attacks(&subsets_small(), 1 << 20).unwrap().len(), 16 * 4);
}

#[test]
fn cap_is_enforced_with_an_estimate() {
    match enumerate_user_attacks(&example1_default(), 10) {
        Err(SimError::CapExceeded { estimate, cap }) => {
            assert_eq!(estimate, 256);
            assert_eq!(cap, 10);
        }
        other => panic!("expected a cap error, got {other:?}"),
    }
}

#[test]
fn no_inputs_gives_one_empty_statement_table_per_presentation_set() {
    let mut s = classical_money();
    s.scheme.alphabets.clear();
    s.nature_inputs.clear();
    assert_eq!(enumerate_user_attacks(&s, 100).unwrap().len(), 4);
}

#[test]
fn no_s_money_scheme_admits_duplication() {
    for s in small_scenarios() {
        assert!(s.scheme.kind.is_s_money(), "{}", s.name);
        let report = attack(&s, 1 << 16, 0).unwrap();
        assert!(report.accepted_runs > 0, "{}", s.name);
        eprintln!("{}: {} of {} strategies accepted somewhere", s.name, report.accepted_runs, report.strategies);
        assert_eq!(report.violations, 0, "{}: {:?}", s.name, report.first_violation);
    }
}

#[test]
fn classical_data_money_is_duplicated() {
    let s = classical_money();
    let report = attack(&s, 1 << 16, 0).unwrap();
    assert!(report.violations >= 1);
    let (_, pairs) = report.first_violation.unwrap();
    assert_eq!(pairs, vec![(PointId::from("Q1"), PointId::from("Q2"))]);
    let honest = run(&s, &UserStrategy::Honest, &IssuerStrategy::Honest, 0).unwrap();
    assert!(audit_no_duplication(&honest, &s.network).unwrap().clean());
}
