//! Statement language, scheme rules and token validity.
//!
//! A scheme fixes, for every input point and author, a finite alphabet of
//! admissible statements, and a built-in predicate deciding whether the
//! statements visible at a presentation point make the token *potentially*
//! valid there. Actual validity additionally needs *exclusion*: for every
//! rival presentation point, no completion of the statements the deciding
//! point has not seen may make the token potentially valid at the rival.

mod emulation;
mod fixed_path;
mod subtoken;
mod validity;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::causal::{CausalError, PointId};
use crate::num::{Credits, Fixed};
use crate::Network;

pub use emulation::{emulation_validate, EmulationOp, EmulationTrace, StateRef};
pub use fixed_path::fixed_path_validate;
pub use subtoken::{subtoken_validate, Clause, ConstraintSet, LocationFilter, SubtokenRequest, SubtokenRules};
pub use validity::{
    check_exclusion, combined_spec, evaluate_validity, evaluate_validity_as, potential_validity, visible_at,
    Perspective,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Author {
    User,
    Issuer,
}

impl fmt::Display for Author {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Author::User => "user",
            Author::Issuer => "issuer",
        })
    }
}

/// Content of a statement.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "value")]
pub enum Payload {
    /// No communication. Always admissible.
    Null,
    /// Presentation points the author chooses.
    SubsetChoice(BTreeSet<PointId>),
    ScalarValue(Fixed),
    /// Input points taking part in the scheme (issuer announcements).
    ParticipantSet(BTreeSet<PointId>),
    OperationDecl(EmulationOp),
    /// Handle of a sealed commitment; carries no committed content.
    CommitmentData(String),
    TransferDecl(String),
}

impl Payload {
    pub fn is_null(&self) -> bool {
        matches!(self, Payload::Null)
    }

    pub fn choose<I, P>(points: I) -> Payload
    where
        I: IntoIterator<Item = P>,
        P: Into<PointId>,
    {
        Payload::SubsetChoice(points.into_iter().map(Into::into).collect())
    }

    pub fn participants<I, P>(points: I) -> Payload
    where
        I: IntoIterator<Item = P>,
        P: Into<PointId>,
    {
        Payload::ParticipantSet(points.into_iter().map(Into::into).collect())
    }

    pub fn scalar(value: i64) -> Payload {
        Payload::ScalarValue(Fixed::from_int(value))
    }
}

/// Who speaks at which input point.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Slot {
    pub origin: PointId,
    pub author: Author,
}

impl Slot {
    pub fn new(origin: impl Into<PointId>, author: Author) -> Self {
        Slot { origin: origin.into(), author }
    }

    pub fn user(origin: impl Into<PointId>) -> Self {
        Slot::new(origin, Author::User)
    }

    pub fn issuer(origin: impl Into<PointId>) -> Self {
        Slot::new(origin, Author::Issuer)
    }
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.author, self.origin)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Statement {
    pub origin: PointId,
    pub author: Author,
    pub payload: Payload,
}

impl Statement {
    pub fn new(origin: impl Into<PointId>, author: Author, payload: Payload) -> Self {
        Statement { origin: origin.into(), author, payload }
    }

    pub fn user(origin: impl Into<PointId>, payload: Payload) -> Self {
        Statement::new(origin, Author::User, payload)
    }

    pub fn issuer(origin: impl Into<PointId>, payload: Payload) -> Self {
        Statement::new(origin, Author::Issuer, payload)
    }

    pub fn slot(&self) -> Slot {
        Slot { origin: self.origin.clone(), author: self.author }
    }
}

/// Admissible payloads for one slot. `Null` is always admissible.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Alphabet {
    Finite(BTreeSet<Payload>),
    /// Any payload; such a slot cannot be completed by enumeration.
    Unbounded,
}

impl Alphabet {
    pub fn finite<I: IntoIterator<Item = Payload>>(payloads: I) -> Self {
        Alphabet::Finite(payloads.into_iter().filter(|p| !p.is_null()).collect())
    }

    pub fn admits(&self, payload: &Payload) -> bool {
        match self {
            _ if payload.is_null() => true,
            Alphabet::Finite(set) => set.contains(payload),
            Alphabet::Unbounded => true,
        }
    }

    /// Size including `Null`; `None` when unbounded.
    pub fn size(&self) -> Option<usize> {
        match self {
            Alphabet::Finite(set) => Some(set.len() + 1),
            Alphabet::Unbounded => None,
        }
    }

    /// `Null` first, then the declared payloads in order.
    pub fn enumerate(&self) -> Option<Vec<Payload>> {
        match self {
            Alphabet::Finite(set) => Some(std::iter::once(Payload::Null).chain(set.iter().cloned()).collect()),
            Alphabet::Unbounded => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeKind {
    FixedPath,
    FreeChoiceOptimal,
    FreeChoiceSubsets,
    JointDetermination,
    Encrypted,
    /// Plain classical data money: the string is accepted wherever it is
    /// first presented. Not an S-money scheme; kept as the duplication
    /// baseline.
    ClassicalData,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 6] = [
        SchemeKind::FixedPath,
        SchemeKind::FreeChoiceOptimal,
        SchemeKind::FreeChoiceSubsets,
        SchemeKind::JointDetermination,
        SchemeKind::Encrypted,
        SchemeKind::ClassicalData,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::FixedPath => "fixed-path",
            SchemeKind::FreeChoiceOptimal => "free-choice-optimal",
            SchemeKind::FreeChoiceSubsets => "free-choice-subsets",
            SchemeKind::JointDetermination => "joint-determination",
            SchemeKind::Encrypted => "encrypted",
            SchemeKind::ClassicalData => "classical-data",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }

    /// Whether the scheme is meant to prevent duplication.
    pub fn is_s_money(self) -> bool {
        self != SchemeKind::ClassicalData
    }
}

/// Where a restricted argmax reads the participant set from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ParticipantSource {
    /// Each input point's issuer announcement; every member of the set must
    /// have announced the same set.
    PerSite,
    /// A single issuer statement made at the given commitment point.
    Committed(PointId),
}

/// Built-in potential-validity predicates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Predicate {
    /// Potentially valid at `Q` when every member of some listed input
    /// subset chose `Q`.
    SubsetChoice { valid_subsets: BTreeMap<PointId, Vec<BTreeSet<PointId>>> },
    /// Potentially valid at `Q` when the scalar reported at its site is a
    /// (possibly shared) maximum over all reported scalars.
    Argmax { sites: BTreeMap<PointId, PointId> },
    /// As `Argmax`, restricted to an issuer-announced participant set; every
    /// participant must have reported a scalar.
    RestrictedArgmax { sites: BTreeMap<PointId, PointId>, participants: ParticipantSource },
    /// Potentially valid at `Q` when the non-null statements visible there
    /// form one of the listed sets.
    ValidSets { sets: BTreeMap<PointId, BTreeSet<BTreeSet<Statement>>> },
    /// Issuer-confirmed propagation chain from `start`.
    FixedPath { start: PointId },
    /// Any presentation is potentially valid.
    Unconditional,
}

impl Predicate {
    pub fn name(&self) -> &'static str {
        match self {
            Predicate::SubsetChoice { .. } => "subset-choice",
            Predicate::Argmax { .. } => "argmax",
            Predicate::RestrictedArgmax { .. } => "restricted-argmax",
            Predicate::ValidSets { .. } => "valid-sets",
            Predicate::FixedPath { .. } => "fixed-path",
            Predicate::Unconditional => "unconditional",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IssuerConstraint {
    /// All issuer statements are identical.
    SameEverywhere,
}

impl IssuerConstraint {
    pub fn holds<'a, I: IntoIterator<Item = &'a Payload>>(&self, issuer_payloads: I) -> bool {
        match self {
            IssuerConstraint::SameEverywhere => {
                let mut iter = issuer_payloads.into_iter();
                match iter.next() {
                    Some(first) => iter.all(|p| p == first),
                    None => true,
                }
            }
        }
    }
}

/// Forwarding subsets for schemes without optimal communication.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CommSubsets {
    /// `S_i`: issuer agents that receive the statements made at `P_i`.
    pub issuer_forward: BTreeMap<PointId, BTreeSet<PointId>>,
    /// `T_i`: user agents that receive the statements made at `P_i`.
    pub user_forward: BTreeMap<PointId, BTreeSet<PointId>>,
    /// `S_Q`: issuer agents notified of an acceptance at `Q`.
    pub issuer_notice: BTreeMap<PointId, BTreeSet<PointId>>,
    /// `T_Q`: user agents notified of an acceptance at `Q`.
    pub user_notice: BTreeMap<PointId, BTreeSet<PointId>>,
}

impl CommSubsets {
    fn lookup<'a>(map: &'a BTreeMap<PointId, BTreeSet<PointId>>, from: &str) -> Option<&'a BTreeSet<PointId>> {
        map.get(from)
    }

    pub fn issuer_reaches(&self, from: &str, to: &str) -> bool {
        Self::lookup(&self.issuer_forward, from).is_some_and(|s| s.contains(to))
    }

    pub fn user_reaches(&self, from: &str, to: &str) -> bool {
        Self::lookup(&self.user_forward, from).is_some_and(|s| s.contains(to))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ValueFn {
    /// Global maximum minus global minimum of the reported scalars.
    MaxMinusMin,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SchemeSpec {
    pub kind: SchemeKind,
    pub alphabets: BTreeMap<Slot, Alphabet>,
    pub predicate: Predicate,
    pub issuer_constraint: Option<IssuerConstraint>,
    pub comm_subsets: Option<CommSubsets>,
    pub subtokens: Option<SubtokenRules>,
    pub value_fn: Option<ValueFn>,
}

impl SchemeSpec {
    pub fn new(kind: SchemeKind, predicate: Predicate) -> Self {
        SchemeSpec {
            kind,
            alphabets: BTreeMap::new(),
            predicate,
            issuer_constraint: None,
            comm_subsets: None,
            subtokens: None,
            value_fn: None,
        }
    }

    pub fn with_alphabet(mut self, slot: Slot, alphabet: Alphabet) -> Self {
        self.alphabets.insert(slot, alphabet);
        self
    }

    pub fn slots(&self) -> impl Iterator<Item = &Slot> {
        self.alphabets.keys()
    }

    /// Checks that a statement is lawful in this scheme.
    pub fn check_statement(&self, statement: &Statement) -> Result<(), SchemeError> {
        let slot = statement.slot();
        let Some(alphabet) = self.alphabets.get(&slot) else {
            return Err(SchemeError::UnknownSlot(slot));
        };
        let sealed = self.kind == SchemeKind::Encrypted && matches!(statement.payload, Payload::CommitmentData(_));
        if sealed || alphabet.admits(&statement.payload) {
            Ok(())
        } else {
            Err(SchemeError::AlphabetViolation(Box::new(statement.clone())))
        }
    }

    /// Structural invariants of the scheme against its network.
    pub fn validate(&self, network: &Network) -> Result<(), SchemeError> {
        for slot in self.alphabets.keys() {
            if !network.contains(slot.origin.as_str()) {
                return Err(SchemeError::Configuration(format!("alphabet for unknown point `{}`", slot.origin)));
            }
        }
        let has_issuer = self.alphabets.keys().any(|s| s.author == Author::Issuer);
        match self.kind {
            SchemeKind::FreeChoiceOptimal | SchemeKind::FreeChoiceSubsets if has_issuer => {
                return Err(SchemeError::Configuration(format!(
                    "{} schemes take no issuer statements",
                    self.kind.name()
                )));
            }
            SchemeKind::JointDetermination if !has_issuer => {
                return Err(SchemeError::Configuration("joint determination needs issuer alphabets".into()));
            }
            _ => {}
        }
        if self.kind == SchemeKind::FreeChoiceSubsets {
            let comm = self
                .comm_subsets
                .as_ref()
                .ok_or_else(|| SchemeError::Configuration("free-choice-subsets scheme needs forwarding subsets".into()))?;
            for map in [&comm.issuer_forward, &comm.user_forward, &comm.issuer_notice, &comm.user_notice] {
                for (from, targets) in map {
                    for to in targets {
                        if !network.precedes(from.as_str(), to.as_str())? {
                            return Err(SchemeError::Configuration(format!(
                                "forwarding target `{to}` is not in the causal future of `{from}`"
                            )));
                        }
                    }
                }
            }
        }
        match &self.predicate {
            Predicate::FixedPath { start } if !network.contains(start.as_str()) => {
                Err(SchemeError::Configuration(format!("fixed path starts at unknown point `{start}`")))
            }
            Predicate::Argmax { sites } | Predicate::RestrictedArgmax { sites, .. } => {
                for (q, p) in sites {
                    if !network.contains(q.as_str()) || !network.contains(p.as_str()) {
                        return Err(SchemeError::Configuration(format!("site map `{q}` -> `{p}` names unknown points")));
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// Status of a validity verdict.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ValidityStatus {
    Valid,
    PotentialOnly,
    Invalid,
}

/// Refutation of potential validity at one rival point: every completion of
/// the `unknown` slots, added to `basis`, leaves the rival not potentially
/// valid.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExclusionProof {
    pub rival: PointId,
    pub basis: Vec<Statement>,
    pub unknown: Vec<Slot>,
    pub completions_checked: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Witness {
    None,
    /// Valid: one refutation per rival point.
    Exclusion(Vec<ExclusionProof>),
    /// Potentially valid only: this completion makes `rival` potentially valid.
    Rival { rival: PointId, completion: Vec<Statement> },
    /// Fixed path: the confirmed chain reaching the presentation point.
    Path(Vec<PointId>),
    /// Fixed path: no confirmation leaves `from`.
    MissingHop { from: PointId },
    /// Fixed path: more than one confirmation leaves `at`.
    Fork { at: PointId },
    /// Fixed path: the token was propagated onward from the presentation point.
    Propagated { next: PointId },
    SecretMismatch,
    /// Emulation: the op at this index breaks the lineage.
    Lineage { op_index: Option<usize>, reason: String },
    /// Sub-tokens: a multiset (possibly including a completion) outside the constraints.
    Constraint { requests: Vec<SubtokenRequest> },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValidityVerdict {
    pub status: ValidityStatus,
    pub witness: Witness,
}

impl ValidityVerdict {
    pub fn valid(witness: Witness) -> Self {
        ValidityVerdict { status: ValidityStatus::Valid, witness }
    }

    pub fn invalid(witness: Witness) -> Self {
        ValidityVerdict { status: ValidityStatus::Invalid, witness }
    }

    pub fn potential_only(witness: Witness) -> Self {
        ValidityVerdict { status: ValidityStatus::PotentialOnly, witness }
    }

    pub fn is_valid(&self) -> bool {
        self.status == ValidityStatus::Valid
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SchemeError {
    #[error("malformed statement: {0:?} is outside its alphabet")]
    AlphabetViolation(Box<Statement>),
    #[error("no alphabet declared for {0}")]
    UnknownSlot(Slot),
    #[error("statement from `{origin}` cannot be known at `{at}`")]
    KnowledgeViolation { origin: PointId, at: PointId },
    #[error("duplicate statements for {0}")]
    DuplicateStatement(Slot),
    #[error("completion infeasible: {0}")]
    CompletionInfeasible(String),
    #[error("configuration error: {0}")]
    Configuration(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("hop `{from}` -> `{to}` is not causal")]
    NonCausalHop { from: PointId, to: PointId },
    #[error(transparent)]
    Causal(#[from] CausalError),
}

/// Value of a token under the scheme's value function.
pub fn token_value(spec: &SchemeSpec, statements: &[Statement]) -> Result<Credits, SchemeError> {
    let Some(rule) = spec.value_fn else {
        return Err(SchemeError::Configuration("scheme declares no value function".into()));
    };
    let mut values = Vec::new();
    for slot in spec.slots().filter(|s| s.author == Author::User) {
        let reported = statements.iter().find(|s| s.slot() == *slot).map(|s| &s.payload);
        match reported {
            Some(Payload::ScalarValue(v)) => values.push(*v),
            _ => return Err(SchemeError::InsufficientData(format!("no value reported at `{}`", slot.origin))),
        }
    }
    match rule {
        ValueFn::MaxMinusMin => {
            let max = values.iter().max().copied().unwrap_or(Fixed::ZERO);
            let min = values.iter().min().copied().unwrap_or(Fixed::ZERO);
            Ok(max - min)
        }
    }
}

/// Whether a free-choice scheme with forwarding subsets lets the user verify
/// validity wherever the issuer can (`S_i ⊆ T_i`, `S_Q ⊆ T_Q`).
pub fn user_verifiable(spec: &SchemeSpec) -> Result<bool, SchemeError> {
    if spec.kind != SchemeKind::FreeChoiceSubsets {
        return Err(SchemeError::Configuration(format!(
            "user verifiability is defined for free-choice-subsets schemes, not {}",
            spec.kind.name()
        )));
    }
    let Some(comm) = &spec.comm_subsets else {
        return Err(SchemeError::Configuration("scheme has no forwarding subsets".into()));
    };
    let included = |issuer: &BTreeMap<PointId, BTreeSet<PointId>>, user: &BTreeMap<PointId, BTreeSet<PointId>>| {
        issuer.iter().all(|(from, targets)| {
            let user_targets = user.get(from);
            targets.iter().all(|t| user_targets.is_some_and(|u| u.contains(t)))
        })
    };
    Ok(included(&comm.issuer_forward, &comm.user_forward) && included(&comm.issuer_notice, &comm.user_notice))
}
