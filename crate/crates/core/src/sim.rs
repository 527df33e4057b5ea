//! Deterministic discrete-event simulation of user and issuer agents.
//!
//! Statements travel at signal speed: everything said at an input point is
//! delivered to the agents at every presentation point allowed to learn it,
//! by that point's time. Presentations are decided in time order, verdicts
//! use exactly the delivered statements, and every acceptance is announced
//! to the causal future.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::causal::PointId;
use crate::coordination::{
    measure, prepare_states_with, stream_rng, verify_unveiling, BB84State, Basis, CoordinationError,
    Outcome, UnveilRecord,
};
use crate::scenarios::Scenario;
use crate::scheme::{
    evaluate_validity_as, visible_at, Alphabet, Author, Payload, Perspective, SchemeError, SchemeKind, Slot,
    Statement, ValidityStatus,
};
use crate::{Fixed, Network};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("malformed strategy: {0}")]
    MalformedStrategy(String),
    #[error("configuration error: {0}")]
    Configuration(String),
    #[error("attack space of about {estimate} strategies exceeds the cap of {cap}")]
    CapExceeded { estimate: u128, cap: u128 },
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    #[error(transparent)]
    Coordination(#[from] CoordinationError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum EventKind {
    /// Nature's data reaches the user agent.
    InputArrival { data: Payload },
    Send { statement: Statement, to: PointId, to_agent: Author },
    Deliver { statement: Statement, from: PointId },
    /// Prepared quantum carriers handed over for a commitment.
    Carriers { from_agent: Author, count: usize, handle: String },
    Unveil { slot: Slot, declared: Payload, accepted: bool },
    Present { presenter: String },
    Verdict { status: ValidityStatus, accepted: bool, reason: String, basis: Vec<PointId> },
    AcceptanceNotice { origin: PointId },
    Transfer { datum: PointId, from_owner: String, to_owner: String, accepted: bool },
    ConsistencyFailure { detail: String },
}

impl EventKind {
    fn phase(&self) -> u8 {
        match self {
            EventKind::InputArrival { .. } | EventKind::Send { .. } => 0,
            EventKind::Deliver { .. } | EventKind::Carriers { .. } | EventKind::AcceptanceNotice { .. } => 1,
            EventKind::Unveil { .. } | EventKind::Transfer { .. } => 2,
            EventKind::Present { .. } | EventKind::Verdict { .. } | EventKind::ConsistencyFailure { .. } => 3,
        }
    }

    /// Whether this records information arriving at the agent.
    fn is_reception(&self) -> bool {
        matches!(
            self,
            EventKind::Deliver { .. }
                | EventKind::Carriers { .. }
                | EventKind::Unveil { .. }
                | EventKind::Present { .. }
                | EventKind::AcceptanceNotice { .. }
                | EventKind::Transfer { .. }
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub seq: u64,
    pub time: f64,
    pub at: PointId,
    /// The agent whose log holds the event.
    pub agent: Author,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub scenario: String,
    pub seed: u64,
    pub events: Vec<Event>,
}

impl Trace {
    /// One JSON record per line: a header, then the events in order.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        let header = serde_json::json!({ "scenario": self.scenario, "seed": self.seed, "events": self.events.len() });
        let _ = writeln!(out, "{header}");
        for event in &self.events {
            let _ = writeln!(out, "{}", serde_json::to_string(event).expect("events serialize"));
        }
        out
    }

    pub fn verdicts(&self) -> impl Iterator<Item = (&Event, ValidityStatus, bool)> {
        self.events.iter().filter_map(|e| match &e.kind {
            EventKind::Verdict { status, accepted, .. } => Some((e, *status, *accepted)),
            _ => None,
        })
    }

    /// Presentation points where the token was accepted.
    pub fn accepted_points(&self) -> Vec<PointId> {
        self.verdicts().filter(|(_, _, a)| *a).map(|(e, _, _)| e.at.clone()).collect()
    }
}

/// How the committer unveils at one presentation point.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum UnveilPlan {
    Honest,
    Withhold,
    /// Claim these values for the listed slots; others unveil honestly.
    Forge(BTreeMap<Slot, Payload>),
}

/// A user strategy fixed in advance. The environment is deterministic, so
/// such tables cover every history-dependent strategy.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DecisionTable {
    pub statements: BTreeMap<PointId, Payload>,
    pub presentations: BTreeSet<PointId>,
    pub unveils: BTreeMap<PointId, UnveilPlan>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum UserStrategy {
    Honest,
    Adversarial(DecisionTable),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum IssuerStrategy {
    /// Announce the scenario's issuer inputs.
    Honest,
    /// Announce these statements instead.
    Adversarial(BTreeMap<PointId, Payload>),
}

/// Reassignment of the data introduced at `datum` to a new owner,
/// requested at `at`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransferRequest {
    pub at: PointId,
    pub datum: PointId,
    pub from: String,
    pub to: String,
}

struct Commitment {
    value: Payload,
    records: Vec<Vec<BB84State>>,
    outcomes: Vec<Vec<Outcome>>,
    handle: String,
}

fn encode(value: &Payload, inputs: &[PointId]) -> Result<Vec<bool>, SimError> {
    match value {
        Payload::ParticipantSet(set) => Ok(inputs.iter().map(|p| set.contains(p)).collect()),
        Payload::ScalarValue(v) => Ok((0..64).map(|k| (v.raw() as u64 >> k) & 1 == 1).collect()),
        other => Err(SimError::Configuration(format!("cannot commit to {other:?}"))),
    }
}

fn decode(template: &Payload, bits: &[bool], inputs: &[PointId]) -> Payload {
    match template {
        Payload::ParticipantSet(_) => {
            Payload::ParticipantSet(inputs.iter().zip(bits).filter(|(_, b)| **b).map(|(p, _)| p.clone()).collect())
        }
        _ => {
            let raw = bits.iter().enumerate().fold(0u64, |acc, (k, b)| acc | ((*b as u64) << k));
            Payload::ScalarValue(Fixed::from_raw(raw as i64))
        }
    }
}

struct Engine<'a> {
    scenario: &'a Scenario,
    net: &'a Network,
    events: Vec<Event>,
}

impl<'a> Engine<'a> {
    fn time(&self, at: &PointId) -> f64 {
        self.net.point(at.as_str()).map_or(0.0, |p| p.t)
    }

    fn push(&mut self, at: &PointId, agent: Author, kind: EventKind) {
        let time = self.time(at);
        self.events.push(Event { seq: 0, time, at: at.clone(), agent, kind });
    }

    fn visible(&self, origin: &PointId, at: &PointId, side: Perspective) -> Result<bool, SimError> {
        Ok(visible_at(&self.scenario.scheme, self.net, origin.as_str(), at.as_str(), side)?)
    }

    fn notice_reaches(&self, from: &PointId, to: &PointId, side: Perspective) -> Result<bool, SimError> {
        if !self.net.precedes(from.as_str(), to.as_str()).map_err(SchemeError::from)? {
            return Ok(false);
        }
        match (&self.scenario.scheme.comm_subsets, self.scenario.scheme.kind) {
            (Some(comm), SchemeKind::FreeChoiceSubsets) => {
                let map = match side {
                    Perspective::Issuer => &comm.issuer_notice,
                    Perspective::User => &comm.user_notice,
                };
                Ok(map.get(from).is_some_and(|s| s.contains(to)))
            }
            _ => Ok(true),
        }
    }
}

fn sort_events(events: &mut [Event]) {
    events.sort_by(|a, b| {
        a.time
            .total_cmp(&b.time)
            .then(a.at.cmp(&b.at))
            .then(a.kind.phase().cmp(&b.kind.phase()))
            .then(a.seq.cmp(&b.seq))
    });
    for (i, e) in events.iter_mut().enumerate() {
        e.seq = i as u64;
    }
}

fn check_lawful(scenario: &Scenario, statement: &Statement) -> Result<(), SimError> {
    scenario
        .scheme
        .check_statement(statement)
        .map_err(|e| SimError::MalformedStrategy(e.to_string()))
}

/// Runs one scenario under the given strategies.
pub fn run(scenario: &Scenario, user: &UserStrategy, issuer: &IssuerStrategy, seed: u64) -> Result<Trace, SimError> {
    let net = &scenario.network;
    let scheme = &scenario.scheme;
    scheme.validate(net)?;
    let encrypted = scheme.kind == SchemeKind::Encrypted;
    let mut engine = Engine { scenario, net, events: Vec::new() };

    // Statements each slot will carry, before any encryption.
    let mut spoken: BTreeMap<Slot, Payload> = BTreeMap::new();
    if let UserStrategy::Adversarial(table) = user {
        for origin in table.statements.keys() {
            if !scheme.alphabets.contains_key(&Slot::user(origin.clone())) {
                return Err(SimError::MalformedStrategy(format!("no user statements are made at `{origin}`")));
            }
        }
    }
    if let IssuerStrategy::Adversarial(table) = issuer {
        for origin in table.keys() {
            if !scheme.alphabets.contains_key(&Slot::issuer(origin.clone())) {
                return Err(SimError::MalformedStrategy(format!("no issuer statements are made at `{origin}`")));
            }
        }
    }
    for slot in scheme.slots() {
        let payload = match (slot.author, user, issuer) {
            (Author::User, UserStrategy::Honest, _) => scenario.nature_inputs.get(&slot.origin).cloned(),
            (Author::User, UserStrategy::Adversarial(t), _) => t.statements.get(&slot.origin).cloned(),
            (Author::Issuer, _, IssuerStrategy::Honest) => scenario.issuer_inputs.get(&slot.origin).cloned(),
            (Author::Issuer, _, IssuerStrategy::Adversarial(t)) => t.get(&slot.origin).cloned(),
        }
        .unwrap_or(Payload::Null);
        check_lawful(scenario, &Statement::new(slot.origin.clone(), slot.author, payload.clone()))?;
        spoken.insert(slot.clone(), payload);
    }

    // Commitments for the encrypted scheme: the other party prepares the carriers.
    let mut commitments: BTreeMap<Slot, Commitment> = BTreeMap::new();
    if encrypted {
        let enc = scenario
            .encryption
            .as_ref()
            .ok_or_else(|| SimError::Configuration("encrypted scheme without commitment parameters".into()))?;
        for (k, (slot, value)) in spoken.iter().enumerate() {
            if value.is_null() {
                continue;
            }
            let bits = encode(value, net.input_points())?;
            let mut rng = stream_rng(seed, 0x5EA1, k as u64);
            let mut records = Vec::with_capacity(bits.len());
            let mut outcomes = Vec::with_capacity(bits.len());
            for bit in &bits {
                let (record, carriers) = prepare_states_with(enc.states_per_bit, &mut rng)?;
                outcomes.push(measure(&carriers, Basis::for_bit(*bit), &enc.noise, &mut rng));
                records.push(record);
            }
            let handle = format!("commit:{slot}");
            commitments.insert(slot.clone(), Commitment { value: value.clone(), records, outcomes, handle });
        }
    }
    let public = |slot: &Slot, value: &Payload| -> Payload {
        match commitments.get(slot) {
            Some(c) => Payload::CommitmentData(c.handle.clone()),
            None => value.clone(),
        }
    };

    // Input phase.
    let mut inputs: Vec<PointId> = net.input_points().to_vec();
    inputs.sort_by(|a, b| engine.time(a).total_cmp(&engine.time(b)).then(a.cmp(b)));
    for p in &inputs {
        let data = scenario.nature_inputs.get(p).cloned().unwrap_or(Payload::Null);
        engine.push(p, Author::User, EventKind::InputArrival { data });
        for author in [Author::Issuer, Author::User] {
            let slot = Slot::new(p.clone(), author);
            let Some(value) = spoken.get(&slot) else { continue };
            if let Some(c) = commitments.get(&slot) {
                let count = c.records.iter().map(Vec::len).sum();
                let receiver = if author == Author::Issuer { Author::Issuer } else { Author::User };
                let preparer = if author == Author::Issuer { Author::User } else { Author::Issuer };
                engine.push(p, receiver, EventKind::Carriers { from_agent: preparer, count, handle: c.handle.clone() });
            }
            let shown = public(&slot, value);
            if shown.is_null() {
                continue;
            }
            let statement = Statement::new(p.clone(), author, shown);
            let other = if author == Author::User { Author::Issuer } else { Author::User };
            engine.push(p, author, EventKind::Send { statement: statement.clone(), to: p.clone(), to_agent: other });
            engine.push(p, other, EventKind::Deliver { statement: statement.clone(), from: p.clone() });
            for q in net.presentation_points() {
                if q == p {
                    continue;
                }
                for (side, agent) in [(Perspective::Issuer, Author::Issuer), (Perspective::User, Author::User)] {
                    if engine.visible(p, q, side)? {
                        engine.push(p, agent, EventKind::Send { statement: statement.clone(), to: q.clone(), to_agent: agent });
                        engine.push(q, agent, EventKind::Deliver { statement: statement.clone(), from: p.clone() });
                    }
                }
            }
        }
    }

    // Transfers, in causal order of their request points.
    let mut transfers: Vec<&TransferRequest> = scenario.transfers.iter().collect();
    transfers.sort_by(|a, b| engine.time(&a.at).total_cmp(&engine.time(&b.at)).then(a.at.cmp(&b.at)));
    let mut granted: Vec<&TransferRequest> = Vec::new();
    let owner_at = |granted: &[&TransferRequest], datum: &PointId, at: &PointId| -> Result<String, SimError> {
        let mut owner = scenario.owner.clone();
        for t in granted {
            if &t.datum == datum && net.precedes_or_equal(t.at.as_str(), at.as_str()).map_err(SchemeError::from)? {
                owner = t.to.clone();
            }
        }
        Ok(owner)
    };
    for t in transfers {
        if !net.contains(t.at.as_str()) || !net.contains(t.datum.as_str()) {
            return Err(SimError::Configuration(format!("transfer names unknown points `{}`/`{}`", t.at, t.datum)));
        }
        let reachable = net.precedes_or_equal(t.datum.as_str(), t.at.as_str()).map_err(SchemeError::from)?;
        let accepted = reachable && owner_at(&granted, &t.datum, &t.at)? == t.from;
        if accepted && t.from != t.to {
            granted.push(t);
        }
        engine.push(
            &t.at,
            Author::Issuer,
            EventKind::Transfer { datum: t.datum.clone(), from_owner: t.from.clone(), to_owner: t.to.clone(), accepted },
        );
    }

    // Presentation phase.
    let mut presentation: Vec<PointId> = net.presentation_points().to_vec();
    presentation.sort_by(|a, b| engine.time(a).total_cmp(&engine.time(b)).then(a.cmp(b)));
    let mut accepted: Vec<PointId> = Vec::new();
    let noise = scenario.encryption.as_ref().map(|e| e.noise).unwrap_or_default();
    for q in &presentation {
        // Unveilings open the commitments visible here.
        let mut opened: BTreeMap<Slot, Payload> = BTreeMap::new();
        if encrypted {
            let plan = match user {
                UserStrategy::Adversarial(t) => t.unveils.get(q).cloned().unwrap_or(UnveilPlan::Honest),
                UserStrategy::Honest => UnveilPlan::Honest,
            };
            let mut order: Vec<&Slot> = commitments.keys().collect();
            order.sort_by_key(|s| s.author != Author::Issuer);
            let mut participants: Option<BTreeSet<PointId>> = None;
            for slot in order {
                if !engine.visible(&slot.origin, q, Perspective::Issuer)? {
                    continue;
                }
                let c = &commitments[slot];
                let claim = match slot.author {
                    Author::Issuer => Some(c.value.clone()),
                    Author::User => match (&plan, user) {
                        (UnveilPlan::Withhold, _) => None,
                        (UnveilPlan::Forge(f), _) if f.contains_key(slot) => Some(f[slot].clone()),
                        (_, UserStrategy::Honest) => match &participants {
                            Some(s) if s.contains(&slot.origin) => Some(c.value.clone()),
                            _ => None,
                        },
                        _ => Some(c.value.clone()),
                    },
                };
                let Some(claim) = claim else { continue };
                let bits = encode(&claim, net.input_points())?;
                let mut ok = bits.len() == c.records.len();
                for (k, bit) in bits.iter().enumerate().take(c.records.len()) {
                    let record = UnveilRecord::new(q.clone(), *bit, c.outcomes[k].clone());
                    ok &= verify_unveiling(&c.records[k], &record, &noise)?.accepted;
                }
                let declared = decode(&c.value, &bits, net.input_points());
                let receiver = if slot.author == Author::Issuer { Author::User } else { Author::Issuer };
                engine.push(q, receiver, EventKind::Unveil { slot: slot.clone(), declared: declared.clone(), accepted: ok });
                if ok {
                    if let (Author::Issuer, Payload::ParticipantSet(s)) = (slot.author, &declared) {
                        participants = Some(s.clone());
                    }
                    opened.insert(slot.clone(), declared);
                }
            }
        }

        let known = |side: Perspective, engine: &Engine| -> Result<Vec<Statement>, SimError> {
            let mut out = Vec::new();
            for (slot, value) in &spoken {
                if value.is_null() || !engine.visible(&slot.origin, q, side)? {
                    continue;
                }
                let payload = opened.get(slot).cloned().unwrap_or_else(|| public(slot, value));
                out.push(Statement::new(slot.origin.clone(), slot.author, payload));
            }
            Ok(out)
        };
        let noticed = |side: Perspective, engine: &Engine| -> Result<Option<PointId>, SimError> {
            for a in &accepted {
                if engine.notice_reaches(a, q, side)? {
                    return Ok(Some(a.clone()));
                }
            }
            Ok(None)
        };

        let presents = match user {
            UserStrategy::Adversarial(t) => t.presentations.contains(q),
            UserStrategy::Honest => {
                // Copyable data carries no exclusion rule, so an honest holder
                // spends it at one agreed point only.
                let agreed = scheme.kind != SchemeKind::ClassicalData || presentation.first() == Some(q);
                if !agreed || noticed(Perspective::User, &engine)?.is_some() {
                    false
                } else {
                    let seen = known(Perspective::User, &engine)?;
                    let issuer_said: BTreeSet<&Payload> = seen
                        .iter()
                        .filter(|s| s.author == Author::Issuer && !matches!(s.payload, Payload::CommitmentData(_)))
                        .map(|s| &s.payload)
                        .collect();
                    if scheme.issuer_constraint.is_some() && issuer_said.len() > 1 {
                        let detail = format!("issuer announced {} different statements", issuer_said.len());
                        engine.push(q, Author::User, EventKind::ConsistencyFailure { detail });
                        false
                    } else {
                        evaluate_validity_as(scheme, net, q.as_str(), &seen, Perspective::User)?.is_valid()
                    }
                }
            }
        };
        if !presents {
            continue;
        }
        engine.push(q, Author::Issuer, EventKind::Present { presenter: scenario.presenter.clone() });
        let seen = known(Perspective::Issuer, &engine)?;
        let verdict = evaluate_validity_as(scheme, net, q.as_str(), &seen, Perspective::Issuer)?;
        let mut basis: Vec<PointId> = seen.iter().map(|s| s.origin.clone()).collect();
        basis.dedup();
        let mut reason = match verdict.status {
            ValidityStatus::Valid => "valid".to_string(),
            ValidityStatus::PotentialOnly => "not excluded elsewhere".to_string(),
            ValidityStatus::Invalid => "not potentially valid".to_string(),
        };
        let mut ok = verdict.is_valid();
        if ok {
            if let Some(origin) = noticed(Perspective::Issuer, &engine)? {
                ok = false;
                reason = format!("already accepted at {origin}");
            }
        }
        if ok {
            for s in seen.iter().filter(|s| s.author == Author::User) {
                let owner = owner_at(&granted, &s.origin, q)?;
                if owner != scenario.presenter {
                    ok = false;
                    reason = format!("datum {} belongs to {owner}", s.origin);
                    break;
                }
            }
        }
        engine.push(q, Author::Issuer, EventKind::Verdict { status: verdict.status, accepted: ok, reason, basis });
        if ok {
            for later in net.presentation_points() {
                for (side, agent) in [(Perspective::Issuer, Author::Issuer), (Perspective::User, Author::User)] {
                    if engine.notice_reaches(q, later, side)? {
                        engine.push(later, agent, EventKind::AcceptanceNotice { origin: q.clone() });
                    }
                }
            }
            accepted.push(q.clone());
        }
    }

    let mut events = engine.events;
    for (i, e) in events.iter_mut().enumerate() {
        e.seq = i as u64;
    }
    sort_events(&mut events);
    Ok(Trace { scenario: scenario.name.clone(), seed, events })
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct AuditReport {
    pub accepted: Vec<PointId>,
    /// Spacelike pairs of accepted presentations.
    pub duplicates: Vec<(PointId, PointId)>,
    /// Issuer statements break the agreed constraints.
    pub issuer_fraud: bool,
    pub consistency_failures: Vec<PointId>,
}

impl AuditReport {
    pub fn clean(&self) -> bool {
        self.duplicates.is_empty()
    }
}

/// Every pair of acceptances at spacelike separated points.
pub fn audit_no_duplication(trace: &Trace, network: &Network) -> Result<AuditReport, SimError> {
    let accepted = trace.accepted_points();
    let mut duplicates = Vec::new();
    for (i, a) in accepted.iter().enumerate() {
        for b in &accepted[i + 1..] {
            if network.spacelike(a.as_str(), b.as_str()).map_err(SchemeError::from)? {
                duplicates.push(if a <= b { (a.clone(), b.clone()) } else { (b.clone(), a.clone()) });
            }
        }
    }
    Ok(AuditReport { accepted, duplicates, ..AuditReport::default() })
}

/// Duplication audit plus issuer-fraud and consistency findings.
pub fn audit(trace: &Trace, scenario: &Scenario) -> Result<AuditReport, SimError> {
    let mut report = audit_no_duplication(trace, &scenario.network)?;
    let mut announced: BTreeMap<PointId, Payload> = BTreeMap::new();
    for e in &trace.events {
        match &e.kind {
            EventKind::Send { statement, .. } if statement.author == Author::Issuer && statement.origin == e.at => {
                announced.insert(statement.origin.clone(), statement.payload.clone());
            }
            EventKind::ConsistencyFailure { .. } => report.consistency_failures.push(e.at.clone()),
            _ => {}
        }
    }
    if let Some(constraint) = scenario.scheme.issuer_constraint {
        let all: Vec<&Payload> = scenario
            .scheme
            .slots()
            .filter(|s| s.author == Author::Issuer)
            .map(|s| announced.get(&s.origin).unwrap_or(&Payload::Null))
            .collect();
        report.issuer_fraud = !constraint.holds(all);
    }
    Ok(report)
}

fn alphabet_values(alphabet: &Alphabet, slot: &Slot) -> Result<Vec<Payload>, SimError> {
    alphabet
        .enumerate()
        .ok_or_else(|| SimError::Configuration(format!("alphabet of {slot} is unbounded")))
}

/// Every fixed user decision table: one lawful statement per input point
/// and one set of presentation points, in a deterministic order.
pub fn enumerate_user_attacks(scenario: &Scenario, cap: u128) -> Result<Vec<UserStrategy>, SimError> {
    let slots: Vec<&Slot> = scenario.scheme.slots().filter(|s| s.author == Author::User).collect();
    let presentations = scenario.network.presentation_points();
    let mut estimate: u128 = 1u128.checked_shl(presentations.len() as u32).unwrap_or(u128::MAX);
    let mut domains = Vec::with_capacity(slots.len());
    for slot in &slots {
        let values = alphabet_values(&scenario.scheme.alphabets[*slot], slot)?;
        estimate = estimate.saturating_mul(values.len() as u128);
        domains.push(values);
    }
    if estimate > cap {
        return Err(SimError::CapExceeded { estimate, cap });
    }
    let mut out = Vec::with_capacity(estimate as usize);
    let mut index = vec![0usize; slots.len()];
    loop {
        for mask in 0u64..(1u64 << presentations.len()) {
            let statements = slots
                .iter()
                .zip(&index)
                .enumerate()
                .filter(|(k, (_, i))| !domains[*k][**i].is_null())
                .map(|(k, (slot, i))| (slot.origin.clone(), domains[k][*i].clone()))
                .collect();
            let chosen =
                presentations.iter().enumerate().filter(|(j, _)| mask >> j & 1 == 1).map(|(_, q)| q.clone()).collect();
            out.push(UserStrategy::Adversarial(DecisionTable {
                statements,
                presentations: chosen,
                unveils: BTreeMap::new(),
            }));
        }
        let mut pos = 0;
        loop {
            if pos == index.len() {
                return Ok(out);
            }
            index[pos] += 1;
            if index[pos] < domains[pos].len() {
                break;
            }
            index[pos] = 0;
            pos += 1;
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AttackReport {
    pub scenario: String,
    pub scheme: String,
    pub strategies: usize,
    /// Strategies with at least one accepted presentation.
    pub accepted_runs: usize,
    pub violations: usize,
    /// Index of the first violating strategy and its duplicate pairs.
    pub first_violation: Option<(usize, Vec<(PointId, PointId)>)>,
}

/// Runs and audits every enumerated user attack against an honest issuer.
pub fn attack(scenario: &Scenario, cap: u128, seed: u64) -> Result<AttackReport, SimError> {
    let strategies = enumerate_user_attacks(scenario, cap)?;
    let findings = strategies
        .par_iter()
        .map(|s| {
            let trace = run(scenario, s, &IssuerStrategy::Honest, seed)?;
            let report = audit_no_duplication(&trace, &scenario.network)?;
            Ok((!report.accepted.is_empty(), report.duplicates))
        })
        .collect::<Result<Vec<_>, SimError>>()?;
    let accepted_runs = findings.iter().filter(|(a, _)| *a).count();
    let findings: Vec<_> = findings.into_iter().map(|(_, d)| d).collect();
    let violations = findings.iter().filter(|d| !d.is_empty()).count();
    let first_violation = findings.into_iter().enumerate().find(|(_, d)| !d.is_empty());
    Ok(AttackReport {
        scenario: scenario.name.clone(),
        scheme: scenario.scheme.kind.name().to_string(),
        strategies: strategies.len(),
        accepted_runs,
        violations,
        first_violation,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IssuerView {
    pub cut: Vec<PointId>,
    pub observed: Vec<Event>,
}

impl IssuerView {
    /// The observed records without sequence numbers, one per line.
    pub fn canonical(&self) -> String {
        self.observed
            .iter()
            .map(|e| {
                serde_json::to_string(&(e.time, &e.at, &e.kind)).expect("events serialize")
            })
            .collect::<Vec<_>>()
            .join("\n")
    }
}

/// What issuer agents received at points in the causal past of the cut.
pub fn issuer_view(trace: &Trace, network: &Network, cut: &[PointId]) -> Result<IssuerView, SimError> {
    let mut observed = Vec::new();
    for e in &trace.events {
        if e.agent != Author::Issuer || !e.kind.is_reception() {
            continue;
        }
        let mut inside = false;
        for c in cut {
            if network.precedes_or_equal(e.at.as_str(), c.as_str()).map_err(SchemeError::from)? {
                inside = true;
                break;
            }
        }
        if inside {
            observed.push(e.clone());
        }
    }
    Ok(IssuerView { cut: cut.to_vec(), observed })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PrivacyVerdict {
    pub distance: f64,
    pub samples: u64,
    pub pass: bool,
}

/// Compares the issuer's views of two runs that differ only in user inputs,
/// over seeds `0..samples`. Passes when the total-variation distance of the
/// empirical view distributions is at most `eps`.
pub fn privacy_test(
    left: &Scenario,
    right: &Scenario,
    cut: &[PointId],
    samples: u64,
    eps: f64,
) -> Result<PrivacyVerdict, SimError> {
    if left.network != right.network
        || left.scheme.kind != right.scheme.kind
        || left.scheme.alphabets.keys().ne(right.scheme.alphabets.keys())
        || left.issuer_inputs != right.issuer_inputs
    {
        return Err(SimError::Configuration("privacy test needs scenarios differing only in user inputs".into()));
    }
    let views = |s: &Scenario| -> Result<Vec<String>, SimError> {
        (0..samples)
            .map(|seed| {
                let trace = run(s, &UserStrategy::Honest, &IssuerStrategy::Honest, seed)?;
                Ok(issuer_view(&trace, &s.network, cut)?.canonical())
            })
            .collect()
    };
    let distance = crate::stats::total_variation(&views(left)?, &views(right)?);
    Ok(PrivacyVerdict { distance, samples, pass: distance <= eps })
}
