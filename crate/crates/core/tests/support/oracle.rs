//! Brute-force validity oracle written without the engine's validity code.
//!
//! It enumerates every assignment of every slot in the scheme, keeps those
//! that agree with what the deciding point saw, and asks whether any rival
//! point could see a potentially valid token under one of them.

use std::collections::{BTreeMap, BTreeSet};

use smoney::scheme::{
    Alphabet, Author, ParticipantSource, Payload, Predicate, SchemeKind, SchemeSpec, Slot, Statement, ValidityStatus,
};
use smoney::{Fixed, Network, PointId};

pub type Assignment = BTreeMap<Slot, Payload>;

pub fn sees(spec: &SchemeSpec, net: &Network, origin: &PointId, at: &PointId) -> bool {
    if origin == at {
        return true;
    }
    if spec.kind == SchemeKind::FreeChoiceSubsets {
        let comm = spec.comm_subsets.as_ref().expect("subsets scheme has forwarding");
        return comm.issuer_forward.get(origin).is_some_and(|s| s.contains(at));
    }
    net.precedes_or_equal(origin.as_str(), at.as_str()).unwrap()
}

fn user_value(view: &Assignment, p: &PointId) -> Option<Fixed> {
    match view.get(&Slot::user(p.clone())) {
        Some(Payload::ScalarValue(v)) => Some(*v),
        _ => None,
    }
}

fn issuer_said<'a>(view: &'a Assignment, p: &PointId) -> &'a Payload {
    view.get(&Slot::issuer(p.clone())).unwrap_or(&Payload::Null)
}

/// Whether `site`'s value beats every other reported value among `pool`.
fn beats(view: &Assignment, site: &PointId, pool: &[PointId]) -> bool {
    let Some(mine) = user_value(view, site) else { return false };
    pool.iter().filter(|p| *p != site).filter_map(|p| user_value(view, p)).all(|v| mine > v)
}

pub fn potentially_valid(spec: &SchemeSpec, q: &PointId, view: &Assignment) -> bool {
    match &spec.predicate {
        Predicate::Unconditional => true,
        Predicate::SubsetChoice { valid_subsets } => valid_subsets.get(q).into_iter().flatten().any(|subset| {
            subset.iter().all(|p| matches!(view.get(&Slot::user(p.clone())), Some(Payload::SubsetChoice(c)) if c.contains(q)))
        }),
        Predicate::Argmax { sites } => {
            let Some(site) = sites.get(q) else { return false };
            let pool: Vec<PointId> = view.keys().filter(|s| s.author == Author::User).map(|s| s.origin.clone()).collect();
            beats(view, site, &pool)
        }
        Predicate::RestrictedArgmax { sites, participants } => {
            let Some(site) = sites.get(q) else { return false };
            let announced = match participants {
                ParticipantSource::PerSite => issuer_said(view, site),
                ParticipantSource::Committed(c) => issuer_said(view, c),
            };
            let Payload::ParticipantSet(members) = announced else { return false };
            let members: Vec<PointId> = members.iter().cloned().collect();
            let agreed = *participants != ParticipantSource::PerSite || members.iter().all(|m| issuer_said(view, m) == announced);
            members.contains(site) && agreed && members.iter().all(|m| user_value(view, m).is_some()) && beats(view, site, &members)
        }
        Predicate::ValidSets { sets } => {
            let present: BTreeSet<Statement> = view
                .iter()
                .filter(|(_, p)| !p.is_null())
                .map(|(s, p)| Statement::new(s.origin.clone(), s.author, p.clone()))
                .collect();
            sets.get(q).is_some_and(|l| l.contains(&present))
        }
        Predicate::FixedPath { .. } => unimplemented!("fixed paths are checked separately"),
    }
}

/// Every assignment of every slot, `Null` included.
pub fn all_assignments(spec: &SchemeSpec) -> Vec<Assignment> {
    let mut out = vec![Assignment::new()];
    for (slot, alphabet) in &spec.alphabets {
        let Alphabet::Finite(symbols) = alphabet else { panic!("oracle needs finite alphabets") };
        let mut options = vec![Payload::Null];
        options.extend(symbols.iter().cloned());
        out = out
            .into_iter()
            .flat_map(|a| {
                options.iter().map(move |p| {
                    let mut next = a.clone();
                    next.insert(slot.clone(), p.clone());
                    next
                })
            })
            .collect();
    }
    out
}

fn restrict(spec: &SchemeSpec, net: &Network, full: &Assignment, at: &PointId) -> Assignment {
    full.iter()
        .filter(|(s, p)| !p.is_null() && sees(spec, net, &s.origin, at))
        .map(|(s, p)| (s.clone(), p.clone()))
        .collect()
}

fn honest_issuer(spec: &SchemeSpec, full: &Assignment) -> bool {
    if spec.kind != SchemeKind::JointDetermination || spec.issuer_constraint.is_none() {
        return true;
    }
    let said: BTreeSet<&Payload> = full.iter().filter(|(s, _)| s.author == Author::Issuer).map(|(_, p)| p).collect();
    said.len() <= 1
}

/// Verdict at `q` given the statements it knows.
pub fn oracle_status(spec: &SchemeSpec, net: &Network, q: &PointId, known: &[Statement]) -> ValidityStatus {
    let known: Assignment = known.iter().map(|s| (s.slot(), s.payload.clone())).collect();
    if !potentially_valid(spec, q, &known) {
        return ValidityStatus::Invalid;
    }
    if spec.kind == SchemeKind::ClassicalData {
        return ValidityStatus::Valid;
    }
    let rivals: Vec<&PointId> = net
        .presentation_points()
        .iter()
        .filter(|r| *r != q)
        .filter(|r| spec.kind == SchemeKind::FreeChoiceSubsets || net.spacelike(q.as_str(), r.as_str()).unwrap())
        .collect();
    for full in all_assignments(spec) {
        let agrees = spec.alphabets.keys().all(|slot| {
            !sees(spec, net, &slot.origin, q) || full[slot] == known.get(slot).cloned().unwrap_or(Payload::Null)
        });
        if !agrees || !honest_issuer(spec, &full) {
            continue;
        }
        if rivals.iter().any(|r| potentially_valid(spec, r, &restrict(spec, net, &full, r))) {
            return ValidityStatus::PotentialOnly;
        }
    }
    ValidityStatus::Valid
}

/// Statements visible at `q` under a full assignment.
pub fn known_at(spec: &SchemeSpec, net: &Network, full: &Assignment, q: &PointId) -> Vec<Statement> {
    restrict(spec, net, full, q).into_iter().map(|(s, p)| Statement::new(s.origin, s.author, p)).collect()
}
