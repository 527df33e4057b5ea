use std::collections::{BTreeMap, BTreeSet};
use std::ops::ControlFlow;

use super::{
    fixed_path_validate, Author, ExclusionProof, IssuerConstraint, ParticipantSource, Payload, Predicate,
    SchemeError, SchemeKind, SchemeSpec, Slot, Statement, ValidityVerdict, Witness,
};
use crate::causal::PointId;
use crate::num::Fixed;
use crate::Network;

/// Upper bound on completions (times withholding patterns) examined per verdict.
pub const COMPLETION_CAP: u64 = 1 << 22;

type View = BTreeMap<Slot, Payload>;

/// Whose forwarding rules decide what reaches a point.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Perspective {
    Issuer,
    User,
}

/// Whether statements made at `origin` reach the agent of the given side at `at`.
pub fn visible_at(
    spec: &SchemeSpec,
    network: &Network,
    origin: &str,
    at: &str,
    perspective: Perspective,
) -> Result<bool, SchemeError> {
    if origin == at {
        return Ok(true);
    }
    match (&spec.comm_subsets, spec.kind) {
        (Some(comm), SchemeKind::FreeChoiceSubsets) => Ok(match perspective {
            Perspective::Issuer => comm.issuer_reaches(origin, at),
            Perspective::User => comm.user_reaches(origin, at),
        }),
        _ => Ok(network.precedes_or_equal(origin, at)?),
    }
}

fn build_view(spec: &SchemeSpec, statements: &[Statement]) -> Result<View, SchemeError> {
    let mut view = View::new();
    for statement in statements {
        spec.check_statement(statement)?;
        if view.insert(statement.slot(), statement.payload.clone()).is_some() {
            return Err(SchemeError::DuplicateStatement(statement.slot()));
        }
    }
    Ok(view)
}

fn unsealed(spec: &SchemeSpec, view: &View) -> View {
    if spec.kind != SchemeKind::Encrypted {
        return view.clone();
    }
    view.iter()
        .filter(|(_, p)| !matches!(p, Payload::CommitmentData(_)))
        .map(|(s, p)| (s.clone(), p.clone()))
        .collect()
}

/// Evaluates the scheme's potential-validity predicate at `q` on `known`.
/// Sealed commitments of an encrypted scheme count as absent.
pub fn potential_validity(spec: &SchemeSpec, q: &str, known: &[Statement]) -> Result<bool, SchemeError> {
    let view = build_view(spec, known)?;
    Ok(predicate_holds(&spec.predicate, q, &unsealed(spec, &view)))
}

fn payload<'a>(view: &'a View, origin: &str, author: Author) -> &'a Payload {
    view.get(&Slot::new(origin, author)).unwrap_or(&Payload::Null)
}

fn scalar(view: &View, origin: &str) -> Option<Fixed> {
    match payload(view, origin, Author::User) {
        Payload::ScalarValue(v) => Some(*v),
        _ => None,
    }
}

fn strict_max_at<'a, I>(view: &View, site: &str, others: I) -> bool
where
    I: IntoIterator<Item = &'a str>,
{
    let Some(best) = scalar(view, site) else { return false };
    others
        .into_iter()
        .filter(|o| *o != site)
        .all(|o| scalar(view, o).is_none_or(|v| v < best))
}

pub(crate) fn predicate_holds(predicate: &Predicate, q: &str, view: &View) -> bool {
    match predicate {
        Predicate::Unconditional => true,
        Predicate::SubsetChoice { valid_subsets } => valid_subsets.get(q).is_some_and(|subsets| {
            subsets.iter().any(|subset| {
                subset.iter().all(|p| match payload(view, p.as_str(), Author::User) {
                    Payload::SubsetChoice(chosen) => chosen.contains(q),
                    _ => false,
                })
            })
        }),
        Predicate::Argmax { sites } => {
            let Some(site) = sites.get(q) else { return false };
            let reporters: Vec<&str> =
                view.keys().filter(|s| s.author == Author::User).map(|s| s.origin.as_str()).collect();
            strict_max_at(view, site.as_str(), reporters)
        }
        Predicate::RestrictedArgmax { sites, participants } => {
            let Some(site) = sites.get(q) else { return false };
            let announcement = match participants {
                ParticipantSource::PerSite => payload(view, site.as_str(), Author::Issuer),
                ParticipantSource::Committed(point) => payload(view, point.as_str(), Author::Issuer),
            };
            let Payload::ParticipantSet(members) = announcement else { return false };
            if !members.contains(site) {
                return false;
            }
            if *participants == ParticipantSource::PerSite
                && members.iter().any(|m| payload(view, m.as_str(), Author::Issuer) != announcement)
            {
                return false;
            }
            members.iter().all(|m| scalar(view, m.as_str()).is_some())
                && strict_max_at(view, site.as_str(), members.iter().map(PointId::as_str))
        }
        Predicate::ValidSets { sets } => {
            let present: BTreeSet<Statement> = view
                .iter()
                .filter(|(_, p)| !p.is_null())
                .map(|(s, p)| Statement { origin: s.origin.clone(), author: s.author, payload: p.clone() })
                .collect();
            sets.get(q).is_some_and(|listed| listed.contains(&present))
        }
        Predicate::FixedPath { start } => {
            let mut current = start.as_str();
            let mut seen = BTreeSet::new();
            loop {
                if current == q {
                    return true;
                }
                if !seen.insert(current) {
                    return false;
                }
                match payload(view, current, Author::User) {
                    Payload::SubsetChoice(next) if next.len() == 1 => {
                        current = next.iter().next().map(PointId::as_str).unwrap_or_default();
                    }
                    _ => return false,
                }
            }
        }
    }
}

fn issuer_constraint_ok(spec: &SchemeSpec, full: &View) -> bool {
    let applies = matches!(spec.kind, SchemeKind::JointDetermination | SchemeKind::Encrypted);
    match (applies, spec.issuer_constraint) {
        (true, Some(constraint @ IssuerConstraint::SameEverywhere)) => {
            let issuer = spec.slots().filter(|s| s.author == Author::Issuer);
            let payloads: Vec<&Payload> =
                issuer.map(|s| full.get(s).unwrap_or(&Payload::Null)).filter(|p| !matches!(p, Payload::CommitmentData(_))).collect();
            constraint.holds(payloads)
        }
        _ => true,
    }
}

fn domains(spec: &SchemeSpec, unknown: &[Slot]) -> Result<Vec<Vec<Payload>>, SchemeError> {
    let mut total: u64 = 1;
    let mut out = Vec::with_capacity(unknown.len());
    for slot in unknown {
        let alphabet = spec.alphabets.get(slot).ok_or_else(|| SchemeError::UnknownSlot(slot.clone()))?;
        let values = alphabet.enumerate().ok_or_else(|| {
            SchemeError::CompletionInfeasible(format!("alphabet of {slot} is unbounded; declare a finite alphabet"))
        })?;
        total = total.saturating_mul(values.len() as u64);
        if total > COMPLETION_CAP {
            return Err(SchemeError::CompletionInfeasible(format!(
                "more than {COMPLETION_CAP} completions of {} unseen slots",
                unknown.len()
            )));
        }
        out.push(values);
    }
    Ok(out)
}

/// Visits every assignment of the domains in odometer order.
fn for_each_assignment<F>(domains: &[Vec<Payload>], mut visit: F) -> ControlFlow<()>
where
    F: FnMut(&[usize]) -> ControlFlow<()>,
{
    let mut index = vec![0usize; domains.len()];
    if domains.iter().any(Vec::is_empty) {
        return ControlFlow::Continue(());
    }
    loop {
        visit(&index)?;
        let mut pos = 0;
        loop {
            if pos == index.len() {
                return ControlFlow::Continue(());
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

/// Views a rival point may hold given a full assignment. Encrypted schemes
/// let the user withhold any unveiling, so every subset of the visible
/// statements is a possible view there.
fn rival_views(spec: &SchemeSpec, full: &View, visible: &BTreeSet<Slot>) -> Vec<View> {
    let base: View = full.iter().filter(|(s, p)| visible.contains(*s) && !p.is_null()).map(|(s, p)| (s.clone(), p.clone())).collect();
    if spec.kind != SchemeKind::Encrypted {
        return vec![base];
    }
    let entries: Vec<(Slot, Payload)> = base.into_iter().collect();
    (0u64..1 << entries.len())
        .map(|mask| {
            entries
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) == 0)
                .map(|(_, e)| e.clone())
                .collect()
        })
        .collect()
}

fn rivals(spec: &SchemeSpec, network: &Network, q: &str) -> Result<Vec<PointId>, SchemeError> {
    let mut out = Vec::new();
    for r in network.presentation_points() {
        if r.as_str() == q {
            continue;
        }
        let rival = match spec.kind {
            SchemeKind::FreeChoiceSubsets => true,
            _ => network.spacelike(q, r.as_str())?,
        };
        if rival {
            out.push(r.clone());
        }
    }
    Ok(out)
}

fn visible_slots(spec: &SchemeSpec, network: &Network, at: &str, perspective: Perspective) -> Result<BTreeSet<Slot>, SchemeError> {
    let mut out = BTreeSet::new();
    for slot in spec.slots() {
        if visible_at(spec, network, slot.origin.as_str(), at, perspective)? {
            out.insert(slot.clone());
        }
    }
    Ok(out)
}

fn statements_of(slots: &[Slot], domains: &[Vec<Payload>], index: &[usize]) -> Vec<Statement> {
    slots
        .iter()
        .zip(index)
        .enumerate()
        .map(|(k, (slot, &i))| Statement { origin: slot.origin.clone(), author: slot.author, payload: domains[k][i].clone() })
        .collect()
}

/// Issuer-side validity verdict at `q`.
pub fn evaluate_validity(
    spec: &SchemeSpec,
    network: &Network,
    q: &str,
    known_at_q: &[Statement],
) -> Result<ValidityVerdict, SchemeError> {
    evaluate_validity_as(spec, network, q, known_at_q, Perspective::Issuer)
}

/// Validity verdict at `q` from the statements that reach the given side's
/// agent there. Rival points are always judged on what their issuer agents
/// receive.
pub fn evaluate_validity_as(
    spec: &SchemeSpec,
    network: &Network,
    q: &str,
    known_at_q: &[Statement],
    perspective: Perspective,
) -> Result<ValidityVerdict, SchemeError> {
    if !network.contains(q) {
        return Err(crate::CausalError::UnknownPoint(q.into()).into());
    }
    let known = build_view(spec, known_at_q)?;
    for slot in known.keys() {
        if !visible_at(spec, network, slot.origin.as_str(), q, perspective)? {
            return Err(SchemeError::KnowledgeViolation { origin: slot.origin.clone(), at: q.into() });
        }
    }

    if let (SchemeKind::FixedPath, Predicate::FixedPath { start }) = (spec.kind, &spec.predicate) {
        let confirmations: Vec<(PointId, PointId)> = known
            .iter()
            .filter_map(|(slot, p)| match p {
                Payload::SubsetChoice(next) if slot.author == Author::User && next.len() == 1 => {
                    next.iter().next().map(|to| (slot.origin.clone(), to.clone()))
                }
                _ => None,
            })
            .collect();
        return fixed_path_validate(network, start.as_str(), &confirmations, q, true);
    }

    let open = unsealed(spec, &known);
    if !predicate_holds(&spec.predicate, q, &open) {
        return Ok(ValidityVerdict::invalid(Witness::None));
    }
    if spec.kind == SchemeKind::ClassicalData {
        return Ok(ValidityVerdict::valid(Witness::None));
    }

    let visible_here = visible_slots(spec, network, q, perspective)?;
    let unknown: Vec<Slot> = spec
        .slots()
        .filter(|s| {
            let sealed = known.contains_key(*s) && !open.contains_key(*s);
            sealed || !visible_here.contains(*s)
        })
        .cloned()
        .collect();
    let domains = domains(spec, &unknown)?;
    let rival_points = rivals(spec, network, q)?;
    let mut rival_sight = Vec::with_capacity(rival_points.len());
    for r in &rival_points {
        rival_sight.push(visible_slots(spec, network, r.as_str(), Perspective::Issuer)?);
    }

    let mut checked: u64 = 0;
    let mut counterexample = None;
    let flow = for_each_assignment(&domains, |index| {
        let mut full = open.clone();
        for (k, slot) in unknown.iter().enumerate() {
            full.insert(slot.clone(), domains[k][index[k]].clone());
        }
        if !issuer_constraint_ok(spec, &full) {
            return ControlFlow::Continue(());
        }
        checked += 1;
        for (r, sight) in rival_points.iter().zip(&rival_sight) {
            if rival_views(spec, &full, sight).iter().any(|v| predicate_holds(&spec.predicate, r.as_str(), v)) {
                counterexample = Some((r.clone(), statements_of(&unknown, &domains, index)));
                return ControlFlow::Break(());
            }
        }
        ControlFlow::Continue(())
    });

    if flow.is_break() {
        let (rival, completion) = counterexample.expect("break carries a counterexample");
        return Ok(ValidityVerdict::potential_only(Witness::Rival { rival, completion }));
    }
    let basis: Vec<Statement> = open
        .iter()
        .filter(|(_, p)| !p.is_null())
        .map(|(s, p)| Statement { origin: s.origin.clone(), author: s.author, payload: p.clone() })
        .collect();
    let proofs = rival_points
        .into_iter()
        .map(|rival| ExclusionProof { rival, basis: basis.clone(), unknown: unknown.clone(), completions_checked: checked })
        .collect();
    Ok(ValidityVerdict::valid(Witness::Exclusion(proofs)))
}

/// Re-checks an exclusion proof by re-evaluating potential validity at the
/// rival under every completion of the proof's unknown slots.
pub fn check_exclusion(spec: &SchemeSpec, network: &Network, proof: &ExclusionProof) -> Result<bool, SchemeError> {
    let sight = visible_slots(spec, network, proof.rival.as_str(), Perspective::Issuer)?;
    let domains = domains(spec, &proof.unknown)?;
    let mut result = Ok(true);
    let _ = for_each_assignment(&domains, |index| {
        let mut statements: Vec<Statement> =
            proof.basis.iter().filter(|s| !proof.unknown.contains(&s.slot())).cloned().collect();
        statements.extend(statements_of(&proof.unknown, &domains, index));
        let full = match build_view(spec, &statements) {
            Ok(v) => v,
            Err(e) => {
                result = Err(e);
                return ControlFlow::Break(());
            }
        };
        if !issuer_constraint_ok(spec, &full) {
            return ControlFlow::Continue(());
        }
        for view in rival_views(spec, &full, &sight) {
            let seen: Vec<Statement> = view
                .into_iter()
                .map(|(s, p)| Statement { origin: s.origin, author: s.author, payload: p })
                .collect();
            match potential_validity(spec, proof.rival.as_str(), &seen) {
                Ok(false) => {}
                Ok(true) => {
                    result = Ok(false);
                    return ControlFlow::Break(());
                }
                Err(e) => {
                    result = Err(e);
                    return ControlFlow::Break(());
                }
            }
        }
        ControlFlow::Continue(())
    });
    result
}

/// The combined form of a scheme: potential validity at each presentation
/// point becomes membership in the list of statement sets that make the
/// token valid there under `spec`.
pub fn combined_spec(spec: &SchemeSpec, network: &Network) -> Result<SchemeSpec, SchemeError> {
    if matches!(spec.kind, SchemeKind::Encrypted | SchemeKind::FixedPath) {
        return Err(SchemeError::Configuration(format!("no combined form for {} schemes", spec.kind.name())));
    }
    let mut sets = BTreeMap::new();
    for q in network.presentation_points() {
        let slots: Vec<Slot> = visible_slots(spec, network, q.as_str(), Perspective::Issuer)?.into_iter().collect();
        let domains = domains(spec, &slots)?;
        let mut listed = BTreeSet::new();
        let mut failure = None;
        let _ = for_each_assignment(&domains, |index| {
            let statements: Vec<Statement> =
                statements_of(&slots, &domains, index).into_iter().filter(|s| !s.payload.is_null()).collect();
            match evaluate_validity(spec, network, q.as_str(), &statements) {
                Ok(v) if v.is_valid() => {
                    listed.insert(statements.into_iter().collect::<BTreeSet<_>>());
                    ControlFlow::Continue(())
                }
                Ok(_) => ControlFlow::Continue(()),
                Err(e) => {
                    failure = Some(e);
                    ControlFlow::Break(())
                }
            }
        });
        if let Some(e) = failure {
            return Err(e);
        }
        sets.insert(q.clone(), listed);
    }
    Ok(SchemeSpec { predicate: Predicate::ValidSets { sets }, ..spec.clone() })
}
