use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};

use smoney::scenarios::{
    build_example1, build_example2, build_example3, build_example4, example1_default, example3_fraud, example4_default,
    Scenario,
};
use smoney::scheme::{Payload, Slot, ValidityStatus};
use smoney::sim::{
    audit, issuer_view, privacy_test, run, DecisionTable, EventKind, IssuerStrategy, Trace, TransferRequest, UnveilPlan,
    UserStrategy,
};
use smoney::{PointId, SignallingModel};

fn honest(s: &Scenario) -> Trace {
    run(s, &UserStrategy::Honest, &IssuerStrategy::Honest, 0).unwrap()
}

fn valid_points(trace: &Trace) -> Vec<(String, f64)> {
    trace
        .verdicts()
        .filter(|(_, status, _)| *status == ValidityStatus::Valid)
        .map(|(e, _, _)| (e.at.to_string(), e.time))
        .collect()
}

fn ids(list: &[&str]) -> BTreeSet<PointId> {
    list.iter().map(|s| PointId::from(*s)).collect()
}

#[test]
fn pole_times_match_geometry() {
    let surface = build_example1(4, vec![ids(&["P1"])], vec![ids(&["P2"])], SignallingModel::surface(1.0)).unwrap();
    let interior = build_example1(4, vec![ids(&["P1"])], vec![ids(&["P2"])], SignallingModel::interior(1.0)).unwrap();
    let t = |s: &Scenario| s.network.point("Q1").unwrap().t;
    assert!((t(&surface) - FRAC_PI_2).abs() < 1e-9);
    assert!((t(&interior) - SQRT_2).abs() < 1e-9);
    let r3 = build_example1(2, vec![ids(&["P1"])], vec![ids(&["P2"])], SignallingModel::surface(3.0)).unwrap();
    assert!((t(&r3) - 3.0 * FRAC_PI_2).abs() < 1e-9);
}

#[test]
fn honest_summons_reach_the_chosen_pole() {
    let s = example1_default();
    let trace = honest(&s);
    assert_eq!(valid_points(&trace).into_iter().map(|v| v.0).collect::<Vec<_>>(), ["Q1"]);
    assert_eq!(trace.accepted_points(), vec![PointId::from("Q1")]);
}

#[test]
fn both_or_neither_pole_gives_no_valid_point() {
    let both = example1_default()
        .with_nature("P1", Payload::choose(["Q1", "Q2"]))
        .with_nature("P2", Payload::choose(["Q1", "Q2"]))
        .with_nature("P3", Payload::choose(["Q2"]));
    assert!(valid_points(&honest(&both)).is_empty());
    let mut neither = example1_default();
    neither.nature_inputs.clear();
    assert!(valid_points(&honest(&neither)).is_empty());
}

#[test]
fn interior_model_changes_only_the_time() {
    let a = build_example1(3, vec![ids(&["P1", "P2"])], vec![ids(&["P2", "P3"])], SignallingModel::surface(1.0)).unwrap();
    let b = build_example1(3, vec![ids(&["P1", "P2"])], vec![ids(&["P2", "P3"])], SignallingModel::interior(1.0)).unwrap();
    let statuses = |t: &Trace| t.verdicts().map(|(e, s, a)| (e.at.clone(), s, a)).collect::<Vec<_>>();
    assert_eq!(statuses(&honest(&a)), statuses(&honest(&b)));
}

#[test]
fn unique_maximum_is_valid_at_its_point() {
    let s = build_example2(3, &[3, 7, 5], SignallingModel::surface(1.0)).unwrap();
    let valid = valid_points(&honest(&s));
    assert_eq!(valid.len(), 1);
    assert_eq!(valid[0].0, "Q2");
    assert!((valid[0].1 - PI).abs() < 1e-9);
}

#[test]
fn tied_maxima_give_no_valid_point() {
    let s = build_example2(3, &[7, 7, 3], SignallingModel::surface(1.0)).unwrap();
    assert!(valid_points(&honest(&s)).is_empty());
}

#[test]
fn antipodal_pair_waits_half_a_circumference() {
    let s = build_example2(2, &[1, 4], SignallingModel::surface(1.0)).unwrap();
    assert!((s.network.point("Q1").unwrap().t - PI).abs() < 1e-9);
    let valid = valid_points(&honest(&s));
    assert_eq!(valid.len(), 1);
    assert_eq!(valid[0].0, "Q2");
}

#[test]
fn consistent_announcement_validates_at_the_restricted_max() {
    let s = ids(&["P2", "P3"]);
    let scenario = build_example3(4, &[2, 5, 3, 8], &[s.clone(), s.clone(), s.clone(), s]).unwrap();
    let trace = honest(&scenario);
    let valid = valid_points(&trace);
    assert_eq!(valid.len(), 1);
    assert_eq!(valid[0].0, "Q2");
    // P2 and P3 are a quarter circle apart.
    assert!((valid[0].1 - FRAC_PI_2).abs() < 1e-9);
    assert!(!audit(&trace, &scenario).unwrap().issuer_fraud);
}

#[test]
fn singleton_announcement_is_valid_immediately() {
    let s = ids(&["P3"]);
    let scenario = build_example3(3, &[1, 2, 3], &[s.clone(), s.clone(), s]).unwrap();
    let valid = valid_points(&honest(&scenario));
    assert_eq!(valid, vec![("Q3".to_string(), 0.0)]);
}

#[test]
fn inconsistent_announcements_are_exposed() {
    let scenario = example3_fraud();
    let trace = honest(&scenario);
    let report = audit(&trace, &scenario).unwrap();
    assert!(report.issuer_fraud);
    let two_valid = !report.duplicates.is_empty();
    assert!(two_valid || !report.consistency_failures.is_empty());
    assert_eq!(report.duplicates, vec![(PointId::from("Q1"), PointId::from("Q3"))]);
}

#[test]
fn encrypted_example_validates_after_unveiling() {
    let s = example4_default();
    let trace = honest(&s);
    assert_eq!(trace.accepted_points(), vec![PointId::from("Q2")]);
    let unveils = trace.events.iter().filter(|e| matches!(e.kind, EventKind::Unveil { accepted: true, .. })).count();
    assert!(unveils > 0);
    let tie = build_example4(3, &[3, 7, 7], ids(&["P2", "P3"]), 4).unwrap();
    assert!(honest(&tie).accepted_points().is_empty());
}

#[test]
fn encrypted_inputs_are_hidden_before_unveiling() {
    let a = example4_default();
    let b = example4_default().with_nature("P1", Payload::scalar(5)).with_nature("P3", Payload::scalar(3));
    let cut: Vec<PointId> = ["C", "P1", "P2", "P3"].map(PointId::from).to_vec();
    let verdict = privacy_test(&a, &b, &cut, 20, 0.0).unwrap();
    assert!(verdict.pass);
    assert_eq!(verdict.distance, 0.0);
    let view = issuer_view(&honest(&a), &a.network, &cut).unwrap();
    assert!(view.observed.iter().all(|e| matches!(e.kind, EventKind::Carriers { .. } | EventKind::Deliver { .. })));
    assert!(view
        .observed
        .iter()
        .all(|e| !matches!(&e.kind, EventKind::Deliver { statement, .. } if !matches!(statement.payload, Payload::CommitmentData(_)))));
}

#[test]
fn clear_inputs_leak_to_the_issuer() {
    let a = build_example2(3, &[3, 7, 5], SignallingModel::surface(1.0)).unwrap();
    let b = a.clone().with_nature("P1", Payload::scalar(5)).with_nature("P3", Payload::scalar(3));
    let cut: Vec<PointId> = ["P1", "P2", "P3"].map(PointId::from).to_vec();
    let verdict = privacy_test(&a, &b, &cut, 5, 0.0).unwrap();
    assert!(!verdict.pass);
    assert!(privacy_test(&a, &a, &cut, 5, 0.0).unwrap().pass);
    assert!(issuer_view(&honest(&a), &a.network, &[]).unwrap().observed.is_empty());
}

#[test]
fn forged_unveilings_are_rejected() {
    let s = example4_default();
    // Claim a larger value for P3 at Q3 while unveiling honestly at Q2.
    let forged = BTreeMap::from([(Slot::user("P3"), Payload::scalar(9))]);
    let table = DecisionTable {
        statements: s.nature_inputs.clone(),
        presentations: ids(&["Q2", "Q3"]),
        unveils: BTreeMap::from([(PointId::from("Q3"), UnveilPlan::Forge(forged))]),
    };
    let trace = run(&s, &UserStrategy::Adversarial(table), &IssuerStrategy::Honest, 3).unwrap();
    let rejected_forgery = trace.events.iter().any(|e| {
        e.at.as_str() == "Q3" && matches!(&e.kind, EventKind::Unveil { slot, accepted: false, .. } if *slot == Slot::user("P3"))
    });
    assert!(rejected_forgery);
    assert_eq!(trace.accepted_points(), vec![PointId::from("Q2")]);
}

#[test]
fn transferred_data_follows_its_new_owner() {
    let base = build_example2(3, &[3, 7, 5], SignallingModel::surface(1.0)).unwrap();
    let transfer = |at: &str, to: &str| TransferRequest { at: at.into(), datum: at.into(), from: "alice".into(), to: to.into() };

    // The token is made of every input datum, so all of them change hands.
    let mut to_charlie = base.clone();
    to_charlie.transfers.extend(["P1", "P2", "P3"].map(|p| transfer(p, "charlie")));
    to_charlie.presenter = "charlie".into();
    assert_eq!(honest(&to_charlie).accepted_points(), vec![PointId::from("Q2")]);

    let mut alice_again = to_charlie.clone();
    alice_again.presenter = "alice".into();
    assert!(honest(&alice_again).accepted_points().is_empty());

    let mut partial = base.clone();
    partial.transfers.push(transfer("P2", "charlie"));
    assert!(honest(&partial).accepted_points().is_empty());

    let mut to_self = base.clone();
    to_self.transfers.push(transfer("P2", "alice"));
    let trace = honest(&to_self);
    assert!(trace.events.iter().any(|e| matches!(e.kind, EventKind::Transfer { accepted: true, .. })));
    assert_eq!(trace.accepted_points(), vec![PointId::from("Q2")]);

    let mut thief = base;
    thief.transfers.push(TransferRequest { at: "P2".into(), datum: "P2".into(), from: "mallory".into(), to: "mallory".into() });
    let trace = honest(&thief);
    assert!(trace.events.iter().any(|e| matches!(e.kind, EventKind::Transfer { accepted: false, .. })));
    assert_eq!(trace.accepted_points(), vec![PointId::from("Q2")]);
}
