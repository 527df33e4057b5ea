//! Classical emulation of a summoned quantum token: the user declares the
//! operations it would perform, and the issuer checks that they describe a
//! single lineage carrying the token state to the presentation point.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{SchemeError, ValidityVerdict, Witness};
use crate::causal::PointId;
use crate::Network;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StateRef {
    Named(String),
    /// The end of an entangled pair held at `at`.
    PairEnd { pair: String, at: PointId },
}

impl StateRef {
    pub fn named(name: impl Into<String>) -> Self {
        StateRef::Named(name.into())
    }

    pub fn pair_end(pair: impl Into<String>, at: impl Into<PointId>) -> Self {
        StateRef::PairEnd { pair: pair.into(), at: at.into() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "op")]
pub enum EmulationOp {
    /// One end of pair `pair` is created at `here`, the other at `partner`.
    /// Both ends declare the pair, each with itself as `here`.
    IntroducePair { pair: String, here: PointId, partner: PointId },
    /// Consumes `inputs` and sends `outputs[k]` to `destinations[k]`.
    ApplyUnitary { label: String, inputs: Vec<StateRef>, outputs: Vec<StateRef>, destinations: Vec<PointId> },
    PresentToken { state: StateRef },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EmulationTrace {
    /// Where the token state is handed to the user.
    pub origin: PointId,
    pub token: StateRef,
    pub ops: Vec<(PointId, EmulationOp)>,
}

struct Held {
    at: PointId,
    lineage: bool,
}

fn broken(index: Option<usize>, reason: impl Into<String>) -> Result<ValidityVerdict, SchemeError> {
    Ok(ValidityVerdict::invalid(Witness::Lineage { op_index: index, reason: reason.into() }))
}

/// Checks that the declared operations deliver the token exactly once, at `present_at`.
pub fn emulation_validate(
    network: &Network,
    trace: &EmulationTrace,
    present_at: &str,
) -> Result<ValidityVerdict, SchemeError> {
    for point in std::iter::once(&trace.origin).chain(trace.ops.iter().map(|(p, _)| p)) {
        if !network.contains(point.as_str()) {
            return Err(crate::CausalError::UnknownPoint(point.clone()).into());
        }
    }
    let mut live: BTreeMap<StateRef, Held> = BTreeMap::new();
    let mut ever: BTreeSet<StateRef> = BTreeSet::new();
    let mut pairs: BTreeMap<&str, Vec<(&PointId, &PointId)>> = BTreeMap::new();
    live.insert(trace.token.clone(), Held { at: trace.origin.clone(), lineage: true });
    ever.insert(trace.token.clone());
    let mut presented: Option<&PointId> = None;

    for (i, (at, op)) in trace.ops.iter().enumerate() {
        let here = Some(i);
        match op {
            EmulationOp::IntroducePair { pair, here: end, partner } => {
                if end != at {
                    return broken(here, format!("pair `{pair}` declared at `{at}` for an end at `{end}`"));
                }
                let intros = pairs.entry(pair.as_str()).or_default();
                match intros.as_slice() {
                    [] => {}
                    [(first_here, first_partner)] if *first_here == partner && *first_partner == end => {}
                    _ => return broken(here, format!("pair `{pair}` introduced inconsistently or twice")),
                }
                intros.push((end, partner));
                let state = StateRef::pair_end(pair.clone(), end.clone());
                if !ever.insert(state.clone()) {
                    return broken(here, format!("pair end `{pair}` at `{end}` already exists"));
                }
                live.insert(state, Held { at: end.clone(), lineage: false });
            }
            EmulationOp::ApplyUnitary { label, inputs, outputs, destinations } => {
                if outputs.len() != destinations.len() {
                    return broken(here, format!("`{label}` has {} outputs for {} destinations", outputs.len(), destinations.len()));
                }
                let mut lineage = false;
                for input in inputs {
                    match live.remove(input) {
                        Some(held) if held.at == *at => lineage |= held.lineage,
                        Some(held) => {
                            return broken(here, format!("`{label}` at `{at}` uses {input:?} held at `{}`", held.at))
                        }
                        None if ever.contains(input) => {
                            return broken(here, format!("`{label}` consumes {input:?} a second time"))
                        }
                        None => return broken(here, format!("`{label}` consumes dangling {input:?}")),
                    }
                }
                for (output, dest) in outputs.iter().zip(destinations) {
                    if !matches!(output, StateRef::Named(_)) {
                        return broken(here, format!("`{label}` cannot create pair end {output:?}"));
                    }
                    if !network.contains(dest.as_str()) {
                        return Err(crate::CausalError::UnknownPoint(dest.clone()).into());
                    }
                    if dest != at && !network.precedes(at.as_str(), dest.as_str())? {
                        return broken(here, format!("`{label}` sends {output:?} outside the future of `{at}`"));
                    }
                    if !ever.insert(output.clone()) {
                        return broken(here, format!("`{label}` reuses state id {output:?}"));
                    }
                    live.insert(output.clone(), Held { at: dest.clone(), lineage });
                }
            }
            EmulationOp::PresentToken { state } => {
                if presented.is_some() {
                    return broken(here, "second presentation");
                }
                match live.remove(state) {
                    Some(held) if held.at == *at && held.lineage => presented = Some(at),
                    Some(held) if !held.lineage => {
                        return broken(here, format!("{state:?} does not descend from the token"))
                    }
                    Some(held) => return broken(here, format!("{state:?} is held at `{}`, not `{at}`", held.at)),
                    None => return broken(here, format!("{state:?} is not available")),
                }
            }
        }
    }
    match presented {
        None => broken(None, "token never presented"),
        Some(point) if point.as_str() != present_at => {
            broken(None, format!("token presented at `{point}`, not `{present_at}`"))
        }
        Some(_) => Ok(ValidityVerdict::valid(Witness::None)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{SignallingModel, SpacetimePoint};

    fn net() -> Network {
        let p = |id: &str, t: f64, x: f64| SpacetimePoint::flat(id, t, [x, 0.0, 0.0]);
        Network::new(
            vec![p("P", 0.0, 0.0), p("Q", 1.0, 0.0), p("Qp", 1.0, 5.0), p("Z", 2.0, 0.0), p("Zs", 8.0, 5.0), p("A", 6.0, -5.0), p("B", 6.0, 5.0)],
            SignallingModel::Flat,
        )
    }

    fn unitary(label: &str, inputs: Vec<StateRef>, outputs: Vec<StateRef>, dest: &[&str]) -> EmulationOp {
        EmulationOp::ApplyUnitary {
            label: label.into(),
            inputs,
            outputs,
            destinations: dest.iter().map(|d| PointId::from(*d)).collect(),
        }
    }

    #[test]
    fn forwarding_chain() {
        let trace = EmulationTrace {
            origin: "P".into(),
            token: StateRef::named("psi"),
            ops: vec![
                ("P".into(), unitary("id", vec![StateRef::named("psi")], vec![StateRef::named("psi1")], &["Q"])),
                ("Q".into(), unitary("id", vec![StateRef::named("psi1")], vec![StateRef::named("psi2")], &["Z"])),
                ("Z".into(), EmulationOp::PresentToken { state: StateRef::named("psi2") }),
            ],
        };
        assert!(emulation_validate(&net(), &trace, "Z").unwrap().is_valid());
        assert!(!emulation_validate(&net(), &trace, "Q").unwrap().is_valid());
    }

    #[test]
    fn teleport_through_pair() {
        let trace = EmulationTrace {
            origin: "Q".into(),
            token: StateRef::named("psi"),
            ops: vec![
                ("Q".into(), EmulationOp::IntroducePair { pair: "n".into(), here: "Q".into(), partner: "Zs".into() }),
                ("Zs".into(), EmulationOp::IntroducePair { pair: "n".into(), here: "Zs".into(), partner: "Q".into() }),
                (
                    "Q".into(),
                    unitary("bell", vec![StateRef::named("psi"), StateRef::pair_end("n", "Q")], vec![StateRef::named("k")], &["Zs"]),
                ),
                (
                    "Zs".into(),
                    unitary("correct", vec![StateRef::named("k"), StateRef::pair_end("n", "Zs")], vec![StateRef::named("out")], &["Zs"]),
                ),
                ("Zs".into(), EmulationOp::PresentToken { state: StateRef::named("out") }),
            ],
        };
        assert!(emulation_validate(&net(), &trace, "Zs").unwrap().is_valid());
    }

    #[test]
    fn double_presentation_is_invalid() {
        let trace = EmulationTrace {
            origin: "P".into(),
            token: StateRef::named("psi"),
            ops: vec![
                ("P".into(), unitary("split", vec![StateRef::named("psi")], vec![StateRef::named("a"), StateRef::named("b")], &["A", "B"])),
                ("A".into(), EmulationOp::PresentToken { state: StateRef::named("a") }),
                ("B".into(), EmulationOp::PresentToken { state: StateRef::named("b") }),
            ],
        };
        let verdict = emulation_validate(&net(), &trace, "A").unwrap();
        assert_eq!(verdict.witness, Witness::Lineage { op_index: Some(2), reason: "second presentation".into() });
    }

    #[test]
    fn acausal_destination_is_invalid() {
        let trace = EmulationTrace {
            origin: "Q".into(),
            token: StateRef::named("psi"),
            ops: vec![
                ("Q".into(), unitary("id", vec![StateRef::named("psi")], vec![StateRef::named("x")], &["Qp"])),
                ("Qp".into(), EmulationOp::PresentToken { state: StateRef::named("x") }),
            ],
        };
        assert!(!emulation_validate(&net(), &trace, "Qp").unwrap().is_valid());
    }
}
