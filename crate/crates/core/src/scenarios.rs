//! Scenario builders for the worked examples, random scenarios for property
//! tests, and the `.scn` text format.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;
use std::fmt::{self, Write as _};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::causal::{DagEdge, Finding};
use crate::coordination::{NoiseModel, ToleranceRule};
use crate::scheme::{
    Alphabet, Author, CommSubsets, IssuerConstraint, ParticipantSource, Payload, Predicate, SchemeKind, SchemeSpec,
    Slot, Statement, ValueFn,
};
use crate::sim::TransferRequest;
use crate::{Fixed, Location, Network, PointId, SignallingModel, SpacetimePoint};

/// Parameters of the quantum commitments used by the encrypted scheme.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EncryptionSpec {
    pub states_per_bit: usize,
    pub noise: NoiseModel,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub description: String,
    pub network: Network,
    pub scheme: SchemeSpec,
    /// Data nature hands the user agent at each input point.
    pub nature_inputs: BTreeMap<PointId, Payload>,
    /// What an honest issuer announces at each input point.
    pub issuer_inputs: BTreeMap<PointId, Payload>,
    pub encryption: Option<EncryptionSpec>,
    /// Initial owner of every input datum.
    pub owner: String,
    /// Who presents the token.
    pub presenter: String,
    pub transfers: Vec<TransferRequest>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("invalid scenario: {}", .0.join("; "))]
    Invalid(Vec<String>),
    #[error("{} parse error(s), first: {}", .0.len(), .0[0])]
    Parse(Vec<ParseError>),
}

impl Scenario {
    pub fn new(name: impl Into<String>, network: Network, scheme: SchemeSpec) -> Self {
        Scenario {
            name: name.into(),
            description: String::new(),
            network,
            scheme,
            nature_inputs: BTreeMap::new(),
            issuer_inputs: BTreeMap::new(),
            encryption: None,
            owner: "alice".into(),
            presenter: "alice".into(),
            transfers: Vec::new(),
        }
    }

    pub fn with_description(mut self, description: impl Into<String>) -> Self {
        self.description = description.into();
        self
    }

    pub fn with_nature(mut self, at: impl Into<PointId>, payload: Payload) -> Self {
        self.nature_inputs.insert(at.into(), payload);
        self
    }

    pub fn with_issuer(mut self, at: impl Into<PointId>, payload: Payload) -> Self {
        self.issuer_inputs.insert(at.into(), payload);
        self
    }

    /// Every problem with the scenario, as readable messages.
    pub fn problems(&self) -> Vec<String> {
        let mut out: Vec<String> = self.network.validate().findings.iter().map(ToString::to_string).collect();
        if self.network.presentation_points().is_empty() {
            out.push("no presentation points".into());
        }
        if let Err(e) = self.scheme.validate(&self.network) {
            out.push(e.to_string());
        }
        for slot in self.scheme.slots() {
            if !self.network.is_input(slot.origin.as_str()) {
                out.push(format!("statements at `{}`, which is not an input point", slot.origin));
            }
        }
        for (map, author) in [(&self.nature_inputs, Author::User), (&self.issuer_inputs, Author::Issuer)] {
            for (at, payload) in map {
                if let Err(e) = self.scheme.check_statement(&Statement::new(at.clone(), author, payload.clone())) {
                    out.push(format!("{author} input at `{at}`: {e}"));
                }
            }
        }
        if self.scheme.kind == SchemeKind::Encrypted && self.encryption.is_none() {
            out.push("encrypted scheme without commitment parameters".into());
        }
        out
    }

    pub fn checked(self) -> Result<Self, ScenarioError> {
        let problems = self.problems();
        if problems.is_empty() {
            Ok(self)
        } else {
            Err(ScenarioError::Invalid(problems))
        }
    }
}

fn ids(prefix: &str, n: usize) -> Vec<PointId> {
    (1..=n).map(|k| PointId::new(format!("{prefix}{k}"))).collect()
}

fn set<I: IntoIterator<Item = P>, P: Into<PointId>>(items: I) -> BTreeSet<PointId> {
    items.into_iter().map(Into::into).collect()
}

fn equator_lon(k: usize, n: usize) -> f64 {
    -PI + 2.0 * PI * k as f64 / n as f64
}

fn scalar_alphabet(values: &[i64]) -> Alphabet {
    Alphabet::finite(values.iter().map(|v| Payload::scalar(*v)))
}

/// Summoning to one of two poles. Inputs sit on the equator at `t = 0`;
/// both poles are presentation points at the equator-to-pole travel time.
/// Nature chooses `Q1` at the members of the first `Q1` subset and `Q2`
/// everywhere else.
pub fn build_example1(
    n_inputs: usize,
    valid_q1: Vec<BTreeSet<PointId>>,
    valid_q2: Vec<BTreeSet<PointId>>,
    model: SignallingModel,
) -> Result<Scenario, ScenarioError> {
    if n_inputs == 0 || valid_q1.is_empty() || valid_q2.is_empty() {
        return Err(ScenarioError::Invalid(vec!["need at least one input and one subset per pole".into()]));
    }
    let inputs = ids("P", n_inputs);
    let mut points: Vec<SpacetimePoint> =
        inputs.iter().enumerate().map(|(k, id)| SpacetimePoint::spherical(id.clone(), 0.0, 0.0, equator_lon(k, n_inputs))).collect();
    let t = model
        .earliest_arrival(&points[0].location, &Location::Spherical { lat: PI / 2.0, lon: 0.0 })
        .map_err(|e| ScenarioError::Invalid(vec![e.to_string()]))?;
    points.push(SpacetimePoint::spherical("Q1", t, PI / 2.0, 0.0));
    points.push(SpacetimePoint::spherical("Q2", t, -PI / 2.0, 0.0));
    let network = Network::new(points, model).with_inputs(inputs.clone()).with_presentations(["Q1", "Q2"]);

    let choices = [Payload::choose(["Q1"]), Payload::choose(["Q2"]), Payload::choose(["Q1", "Q2"])];
    let predicate = Predicate::SubsetChoice {
        valid_subsets: BTreeMap::from([(PointId::from("Q1"), valid_q1.clone()), (PointId::from("Q2"), valid_q2)]),
    };
    let mut scheme = SchemeSpec::new(SchemeKind::FreeChoiceOptimal, predicate);
    for p in &inputs {
        scheme = scheme.with_alphabet(Slot::user(p.clone()), Alphabet::finite(choices.clone()));
    }
    let mut scenario = Scenario::new("example1", network, scheme)
        .with_description("summon the token to one of the two poles from data gathered on the equator");
    for p in &inputs {
        let pole = if valid_q1[0].contains(p) { "Q1" } else { "Q2" };
        scenario = scenario.with_nature(p.clone(), Payload::choose([pole]));
    }
    scenario.checked()
}

/// Three equator inputs, `Q1` needs `{P1, P2}`, `Q2` needs `{P2, P3}`.
pub fn example1_default() -> Scenario {
    build_example1(3, vec![set(["P1", "P2"])], vec![set(["P2", "P3"])], SignallingModel::surface(1.0))
        .expect("default example is well formed")
}

/// Unit-sphere points spread by the Fibonacci lattice; two points are antipodal.
pub fn sphere_net(n: usize) -> Vec<(f64, f64)> {
    if n == 2 {
        return vec![(0.0, -PI / 2.0), (0.0, PI / 2.0)];
    }
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|k| {
            let z = 1.0 - 2.0 * (k as f64 + 0.5) / n as f64;
            let lon = (golden * k as f64).rem_euclid(2.0 * PI) - PI;
            (z.asin(), lon)
        })
        .collect()
}

/// The token becomes valid where the reported value is the unique maximum.
/// Each input has a co-located presentation point at the antipodal travel
/// time, by which every report is known everywhere.
pub fn build_example2(n_inputs: usize, f_values: &[i64], model: SignallingModel) -> Result<Scenario, ScenarioError> {
    if n_inputs < 2 || f_values.len() != n_inputs {
        return Err(ScenarioError::Invalid(vec!["need at least two inputs and one value per input".into()]));
    }
    let t = model
        .earliest_arrival(&Location::Spherical { lat: 0.0, lon: -PI / 2.0 }, &Location::Spherical { lat: 0.0, lon: PI / 2.0 })
        .map_err(|e| ScenarioError::Invalid(vec![e.to_string()]))?;
    let inputs = ids("P", n_inputs);
    let outputs = ids("Q", n_inputs);
    let mut points = Vec::new();
    for ((p, q), (lat, lon)) in inputs.iter().zip(&outputs).zip(sphere_net(n_inputs)) {
        points.push(SpacetimePoint::spherical(p.clone(), 0.0, lat, lon));
        points.push(SpacetimePoint::spherical(q.clone(), t, lat, lon));
    }
    let network = Network::new(points, model).with_inputs(inputs.clone()).with_presentations(outputs.clone());
    let sites = outputs.iter().cloned().zip(inputs.iter().cloned()).collect();
    let mut scheme = SchemeSpec::new(SchemeKind::FreeChoiceOptimal, Predicate::Argmax { sites });
    scheme.value_fn = Some(ValueFn::MaxMinusMin);
    let mut scenario = Scenario::new("example2", network, scheme)
        .with_description("valid where the reported value is the unique global maximum");
    for (p, f) in inputs.iter().zip(f_values) {
        scenario.scheme = scenario.scheme.with_alphabet(Slot::user(p.clone()), scalar_alphabet(f_values));
        scenario = scenario.with_nature(p.clone(), Payload::scalar(*f));
    }
    scenario.checked()
}

pub fn example2_default() -> Scenario {
    build_example2(3, &[3, 7, 5], SignallingModel::surface(1.0)).expect("default example is well formed")
}

fn travel(model: &SignallingModel, a: (f64, f64), b: (f64, f64)) -> Result<f64, ScenarioError> {
    model
        .earliest_arrival(&Location::Spherical { lat: a.0, lon: a.1 }, &Location::Spherical { lat: b.0, lon: b.1 })
        .map_err(|e| ScenarioError::Invalid(vec![e.to_string()]))
}

/// Joint determination on explicit unit-sphere locations. The issuer
/// announces `announcements[i]` at `P_i`; the presentation point co-located
/// with `P_i` is timed at the largest travel time between members of the
/// set announced there.
pub fn build_example3_on(
    locations: &[(f64, f64)],
    f_values: &[i64],
    announcements: &[BTreeSet<PointId>],
) -> Result<Scenario, ScenarioError> {
    let n = locations.len();
    if n == 0 || f_values.len() != n || announcements.len() != n || announcements.iter().any(BTreeSet::is_empty) {
        return Err(ScenarioError::Invalid(vec!["need one value and one nonempty announcement per input".into()]));
    }
    let model = SignallingModel::surface(1.0);
    let inputs = ids("P", n);
    let outputs = ids("Q", n);
    let index: BTreeMap<&PointId, usize> = inputs.iter().enumerate().map(|(k, p)| (p, k)).collect();
    let mut points = Vec::new();
    for (k, (p, q)) in inputs.iter().zip(&outputs).enumerate() {
        let mut t_prime: f64 = 0.0;
        for a in &announcements[k] {
            for b in &announcements[k] {
                let (Some(&i), Some(&j)) = (index.get(a), index.get(b)) else {
                    return Err(ScenarioError::Invalid(vec![format!("announcement names unknown input `{a}` or `{b}`")]));
                };
                t_prime = t_prime.max(travel(&model, locations[i], locations[j])?);
            }
        }
        let (lat, lon) = locations[k];
        points.push(SpacetimePoint::spherical(p.clone(), 0.0, lat, lon));
        points.push(SpacetimePoint::spherical(q.clone(), t_prime, lat, lon));
    }
    let network = Network::new(points, model).with_inputs(inputs.clone()).with_presentations(outputs.clone());
    let sites = outputs.iter().cloned().zip(inputs.iter().cloned()).collect();
    let mut scheme = SchemeSpec::new(
        SchemeKind::JointDetermination,
        Predicate::RestrictedArgmax { sites, participants: ParticipantSource::PerSite },
    );
    scheme.issuer_constraint = Some(IssuerConstraint::SameEverywhere);
    scheme.value_fn = Some(ValueFn::MaxMinusMin);
    let issuer_alphabet = Alphabet::finite(announcements.iter().map(|s| Payload::ParticipantSet(s.clone())));
    let mut scenario = Scenario::new("example3", network, scheme)
        .with_description("issuer and user jointly determine the valid point: argmax within an announced subset");
    for (k, p) in inputs.iter().enumerate() {
        scenario.scheme = scenario
            .scheme
            .with_alphabet(Slot::user(p.clone()), scalar_alphabet(f_values))
            .with_alphabet(Slot::issuer(p.clone()), issuer_alphabet.clone());
        scenario = scenario
            .with_nature(p.clone(), Payload::scalar(f_values[k]))
            .with_issuer(p.clone(), Payload::ParticipantSet(announcements[k].clone()));
    }
    scenario.checked()
}

/// Joint determination with inputs spread evenly along the equator.
pub fn build_example3(n_inputs: usize, f_values: &[i64], announcements: &[BTreeSet<PointId>]) -> Result<Scenario, ScenarioError> {
    let locations: Vec<(f64, f64)> = (0..n_inputs).map(|k| (0.0, equator_lon(k, n_inputs))).collect();
    build_example3_on(&locations, f_values, announcements)
}

/// Four equator inputs; the issuer honestly announces `{P2, P3}`.
pub fn example3_default() -> Scenario {
    let s = set(["P2", "P3"]);
    build_example3(4, &[2, 5, 3, 8], &[s.clone(), s.clone(), s.clone(), s]).expect("default example is well formed")
}

/// A dishonest issuer announcing `{P1, P2}` at those points and `{P3, P4}`
/// at the other two, which lie on the far side of the sphere. The points
/// announcing one set cannot learn the other announcement in time.
pub fn example3_fraud() -> Scenario {
    let locations = [(0.0, 0.0), (0.0, 0.2), (0.0, 3.0), (0.0, -3.0)];
    let s = set(["P1", "P2"]);
    let s_prime = set(["P3", "P4"]);
    let mut scenario = build_example3_on(&locations, &[5, 1, 4, 2], &[s.clone(), s, s_prime.clone(), s_prime])
        .expect("fraud geometry is well formed");
    scenario.name = "example3-fraud".into();
    scenario.description = "issuer announces different subsets on opposite sides of the sphere".into();
    scenario
}

/// Example 3 with the issuer's subset and every reported value hidden in
/// quantum bit commitments until the common presentation time. The issuer
/// commits at `C`, co-located with `P1`.
pub fn build_example4(
    n_inputs: usize,
    f_values: &[i64],
    issuer_subset: BTreeSet<PointId>,
    states_per_bit: usize,
) -> Result<Scenario, ScenarioError> {
    if n_inputs == 0 || f_values.len() != n_inputs || issuer_subset.is_empty() || states_per_bit == 0 {
        return Err(ScenarioError::Invalid(vec!["need inputs, values, a nonempty subset and N ≥ 1".into()]));
    }
    let model = SignallingModel::surface(1.0);
    let t = PI;
    let inputs = ids("P", n_inputs);
    let outputs = ids("Q", n_inputs);
    let mut points = vec![SpacetimePoint::spherical("C", 0.0, 0.0, equator_lon(0, n_inputs))];
    for (k, (p, q)) in inputs.iter().zip(&outputs).enumerate() {
        let lon = equator_lon(k, n_inputs);
        points.push(SpacetimePoint::spherical(p.clone(), 0.0, 0.0, lon));
        points.push(SpacetimePoint::spherical(q.clone(), t, 0.0, lon));
    }
    let mut all_inputs = vec![PointId::from("C")];
    all_inputs.extend(inputs.iter().cloned());
    let network = Network::new(points, model).with_inputs(all_inputs).with_presentations(outputs.clone());
    let sites = outputs.iter().cloned().zip(inputs.iter().cloned()).collect();
    let mut scheme = SchemeSpec::new(
        SchemeKind::Encrypted,
        Predicate::RestrictedArgmax { sites, participants: ParticipantSource::Committed("C".into()) },
    )
    .with_alphabet(Slot::issuer("C"), Alphabet::finite([Payload::ParticipantSet(issuer_subset.clone())]));
    scheme.issuer_constraint = Some(IssuerConstraint::SameEverywhere);
    scheme.value_fn = Some(ValueFn::MaxMinusMin);
    let mut scenario = Scenario::new("example4", network, scheme)
        .with_description("joint determination with every input committed by quantum bit commitment")
        .with_issuer("C", Payload::ParticipantSet(issuer_subset));
    scenario.encryption = Some(EncryptionSpec { states_per_bit, noise: NoiseModel::noiseless() });
    for (p, f) in inputs.iter().zip(f_values) {
        scenario.scheme = scenario.scheme.with_alphabet(Slot::user(p.clone()), scalar_alphabet(f_values));
        scenario = scenario.with_nature(p.clone(), Payload::scalar(*f));
    }
    scenario.checked()
}

pub fn example4_default() -> Scenario {
    build_example4(3, &[3, 7, 5], set(["P2", "P3"]), 4).expect("default example is well formed")
}

/// Classical data money: a token is just data, accepted wherever it is
/// presented. Two spacelike poles on a flat line.
pub fn classical_money() -> Scenario {
    let network = Network::new(
        vec![
            SpacetimePoint::flat("P1", 0.0, [0.0, 0.0, 0.0]),
            SpacetimePoint::flat("Q1", 3.0, [-2.0, 0.0, 0.0]),
            SpacetimePoint::flat("Q2", 3.0, [2.0, 0.0, 0.0]),
        ],
        SignallingModel::Flat,
    )
    .with_inputs(["P1"])
    .with_presentations(["Q1", "Q2"]);
    let scheme = SchemeSpec::new(SchemeKind::ClassicalData, Predicate::Unconditional)
        .with_alphabet(Slot::user("P1"), Alphabet::finite([Payload::TransferDecl("serial-0001".into())]));
    Scenario::new("classical", network, scheme)
        .with_description("token data copied freely; no exclusion rule")
        .with_nature("P1", Payload::TransferDecl("serial-0001".into()))
}

/// Two inputs summoning to one of two spacelike points, with restricted
/// forwarding: `P2` reports only to `Q2`. `Q1` needs `P1`'s choice, `Q2`
/// needs both.
pub fn subsets_small() -> Scenario {
    let p = |id: &str, t: f64, x: f64| SpacetimePoint::flat(id, t, [x, 0.0, 0.0]);
    let network = Network::new(vec![p("P1", 0.0, -1.0), p("P2", 0.0, 1.0), p("Q1", 5.0, -3.0), p("Q2", 5.0, 3.0)], SignallingModel::Flat)
        .with_inputs(["P1", "P2"])
        .with_presentations(["Q1", "Q2"]);
    let predicate = Predicate::SubsetChoice {
        valid_subsets: BTreeMap::from([(PointId::from("Q1"), vec![set(["P1"])]), (PointId::from("Q2"), vec![set(["P1", "P2"])])]),
    };
    let mut scheme = SchemeSpec::new(SchemeKind::FreeChoiceSubsets, predicate);
    let forward = BTreeMap::from([(PointId::from("P1"), set(["Q1", "Q2"])), (PointId::from("P2"), set(["Q2"]))]);
    scheme.comm_subsets = Some(CommSubsets {
        issuer_forward: forward.clone(),
        user_forward: forward,
        issuer_notice: BTreeMap::new(),
        user_notice: BTreeMap::new(),
    });
    let choices = [Payload::choose(["Q1"]), Payload::choose(["Q2"]), Payload::choose(["Q1", "Q2"])];
    for id in ["P1", "P2"] {
        scheme = scheme.with_alphabet(Slot::user(id), Alphabet::finite(choices.clone()));
    }
    Scenario::new("subsets-small", network, scheme)
        .with_description("free choice with forwarding restricted to subsets")
        .with_nature("P1", Payload::choose(["Q1"]))
}

/// A token that must follow confirmed hops `S -> A -> B`, with `A` and the
/// side branch `X` spacelike.
pub fn fixed_path_small() -> Scenario {
    let p = |id: &str, t: f64, x: f64| SpacetimePoint::flat(id, t, [x, 0.0, 0.0]);
    let network = Network::new(vec![p("S", 0.0, 0.0), p("A", 2.0, -1.0), p("X", 2.0, 1.0), p("B", 4.0, -1.0)], SignallingModel::Flat)
        .with_inputs(["S", "A"])
        .with_presentations(["A", "X", "B"])
        .with_start("S");
    let scheme = SchemeSpec::new(SchemeKind::FixedPath, Predicate::FixedPath { start: "S".into() })
        .with_alphabet(Slot::user("S"), Alphabet::finite([Payload::choose(["A"]), Payload::choose(["X"])]))
        .with_alphabet(Slot::user("A"), Alphabet::finite([Payload::choose(["B"])]));
    Scenario::new("fixed-path-small", network, scheme)
        .with_description("token propagated along issuer-confirmed hops")
        .with_nature("S", Payload::choose(["A"]))
        .with_nature("A", Payload::choose(["B"]))
}

/// Size limits for [`random_scenario`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RandomBounds {
    pub inputs: usize,
    pub presentations: usize,
    /// Alphabet size including `Null`.
    pub alphabet: usize,
}

impl Default for RandomBounds {
    fn default() -> Self {
        RandomBounds { inputs: 3, presentations: 3, alphabet: 4 }
    }
}

fn grid<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    let steps = ((hi - lo) * 2.0) as u32;
    lo + rng.random_range(0..=steps) as f64 * 0.5
}

fn random_subset<R: Rng>(rng: &mut R, pool: &[PointId], nonempty: bool) -> BTreeSet<PointId> {
    loop {
        let s: BTreeSet<PointId> = pool.iter().filter(|_| rng.random_bool(0.5)).cloned().collect();
        if !nonempty || !s.is_empty() || pool.is_empty() {
            return s;
        }
    }
}

fn distinct<R: Rng, F: FnMut(&mut R) -> Payload>(rng: &mut R, count: usize, mut draw: F) -> Vec<Payload> {
    let mut out = BTreeSet::new();
    for _ in 0..count * 4 {
        if out.len() == count {
            break;
        }
        out.insert(draw(rng));
    }
    out.into_iter().collect()
}

/// A deterministic pseudo-random flat-space scenario within `bounds`.
/// Coordinates lie on a half-unit grid so light-like separations occur.
pub fn random_scenario(seed: u64, bounds: RandomBounds) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_in = rng.random_range(1..=bounds.inputs.max(1));
    let n_out = rng.random_range(1..=bounds.presentations.max(1));
    let symbols = bounds.alphabet.max(2) - 1;
    let inputs = ids("P", n_in);
    let outputs = ids("Q", n_out);
    let mut points: Vec<SpacetimePoint> =
        inputs.iter().map(|p| SpacetimePoint::flat(p.clone(), 0.0, [grid(&mut rng, -3.0, 3.0), grid(&mut rng, -3.0, 3.0), 0.0])).collect();
    for q in &outputs {
        let x = [grid(&mut rng, -4.0, 4.0), grid(&mut rng, -4.0, 4.0), 0.0];
        let nearest = points[..n_in]
            .iter()
            .map(|p| match p.location {
                Location::Cartesian(y) => ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2)).sqrt(),
                _ => 0.0,
            })
            .fold(f64::INFINITY, f64::min);
        let t = grid(&mut rng, 0.0, 8.0).max((nearest * 2.0).ceil() / 2.0);
        points.push(SpacetimePoint::flat(q.clone(), t, x));
    }
    let network = Network::new(points, SignallingModel::Flat).with_inputs(inputs.clone()).with_presentations(outputs.clone());
    let precedes = |a: &PointId, b: &PointId| network.precedes(a.as_str(), b.as_str()).unwrap_or(false);

    let variant = rng.random_range(0..5u8);
    let sites: BTreeMap<PointId, PointId> =
        outputs.iter().map(|q| (q.clone(), inputs[rng.random_range(0..n_in)].clone())).collect();
    let subset_rules = |rng: &mut ChaCha8Rng| Predicate::SubsetChoice {
        valid_subsets: outputs
            .iter()
            .map(|q| (q.clone(), (0..rng.random_range(1..=2)).map(|_| random_subset(rng, &inputs, true)).collect()))
            .collect(),
    };
    let (kind, predicate) = match variant {
        0 => (SchemeKind::FreeChoiceOptimal, subset_rules(&mut rng)),
        1 => (SchemeKind::FreeChoiceOptimal, Predicate::Argmax { sites }),
        2 => (SchemeKind::FreeChoiceSubsets, subset_rules(&mut rng)),
        3 => (SchemeKind::JointDetermination, Predicate::RestrictedArgmax { sites, participants: ParticipantSource::PerSite }),
        _ => (SchemeKind::ClassicalData, subset_rules(&mut rng)),
    };
    let mut scheme = SchemeSpec::new(kind, predicate);
    let uses_scalars = matches!(variant, 1 | 3);
    for p in &inputs {
        let payloads = if uses_scalars {
            distinct(&mut rng, symbols, |r| Payload::scalar(r.random_range(1..=4)))
        } else {
            distinct(&mut rng, symbols, |r| Payload::SubsetChoice(random_subset(r, &outputs, true)))
        };
        scheme = scheme.with_alphabet(Slot::user(p.clone()), Alphabet::finite(payloads));
    }
    if kind == SchemeKind::JointDetermination {
        scheme.issuer_constraint = Some(IssuerConstraint::SameEverywhere);
        let announcements = distinct(&mut rng, symbols.min(2), |r| Payload::ParticipantSet(random_subset(r, &inputs, true)));
        for p in &inputs {
            scheme = scheme.with_alphabet(Slot::issuer(p.clone()), Alphabet::finite(announcements.clone()));
        }
    }
    if kind == SchemeKind::FreeChoiceSubsets {
        let mut comm = CommSubsets::default();
        for p in &inputs {
            let future: Vec<PointId> = outputs.iter().filter(|q| precedes(p, q)).cloned().collect();
            comm.issuer_forward.insert(p.clone(), random_subset(&mut rng, &future, false));
            comm.user_forward.insert(p.clone(), random_subset(&mut rng, &future, false));
        }
        for q in &outputs {
            let future: Vec<PointId> = outputs.iter().filter(|r| precedes(q, r)).cloned().collect();
            comm.issuer_notice.insert(q.clone(), random_subset(&mut rng, &future, false));
            comm.user_notice.insert(q.clone(), random_subset(&mut rng, &future, false));
        }
        scheme.comm_subsets = Some(comm);
    }

    let mut scenario = Scenario::new(format!("random-{seed}"), network, scheme);
    let slots: Vec<Slot> = scenario.scheme.slots().cloned().collect();
    for slot in slots {
        let options = scenario.scheme.alphabets[&slot].enumerate().unwrap_or_default();
        let pick = options[rng.random_range(0..options.len())].clone();
        if pick.is_null() {
            continue;
        }
        match slot.author {
            Author::User => scenario.nature_inputs.insert(slot.origin, pick),
            Author::Issuer => scenario.issuer_inputs.insert(slot.origin, pick),
        };
    }
    scenario
}

/// Distinct failure classes of the scenario parser.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum ErrorCode {
    Version,
    Syntax,
    UnknownSection,
    UnknownField,
    MissingField,
    Duplicate,
    BadValue,
    Alphabet,
    Geometry,
    Acyclicity,
    Scheme,
}

impl ErrorCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCode::Version => "version",
            ErrorCode::Syntax => "syntax",
            ErrorCode::UnknownSection => "unknown-section",
            ErrorCode::UnknownField => "unknown-field",
            ErrorCode::MissingField => "missing-field",
            ErrorCode::Duplicate => "duplicate",
            ErrorCode::BadValue => "bad-value",
            ErrorCode::Alphabet => "alphabet",
            ErrorCode::Geometry => "geometry",
            ErrorCode::Acyclicity => "acyclicity",
            ErrorCode::Scheme => "scheme",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    /// 1-based line; 0 when the problem concerns the file as a whole.
    pub line: usize,
    pub field: String,
    pub code: ErrorCode,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: [{}] {}: {}", self.line, self.code.as_str(), self.field, self.message)
    }
}

fn render_ids<'a, I: IntoIterator<Item = &'a PointId>>(ids: I) -> String {
    ids.into_iter().map(PointId::as_str).collect::<Vec<_>>().join(",")
}

pub fn render_payload(payload: &Payload) -> String {
    match payload {
        Payload::Null => "null".into(),
        Payload::SubsetChoice(s) => format!("choose({})", render_ids(s)),
        Payload::ScalarValue(v) => format!("scalar({v})"),
        Payload::ParticipantSet(s) => format!("participants({})", render_ids(s)),
        Payload::OperationDecl(op) => format!("op({})", serde_json::to_string(op).expect("operations serialize")),
        Payload::CommitmentData(h) => format!("commitment({h})"),
        Payload::TransferDecl(d) => format!("transfer({d})"),
    }
}

fn valid_id(text: &str) -> bool {
    !text.is_empty() && !text.chars().any(|c| c.is_whitespace() || ",()|;=@#[]".contains(c))
}

fn parse_ids(text: &str) -> Result<BTreeSet<PointId>, String> {
    let text = text.trim();
    if text.is_empty() {
        return Ok(BTreeSet::new());
    }
    text.split(',')
        .map(|s| {
            let s = s.trim();
            if valid_id(s) {
                Ok(PointId::from(s))
            } else {
                Err(format!("`{s}` is not a valid point id"))
            }
        })
        .collect()
}

pub fn parse_payload(text: &str) -> Result<Payload, String> {
    let text = text.trim();
    if text == "null" {
        return Ok(Payload::Null);
    }
    let (head, rest) = text.split_once('(').ok_or_else(|| format!("`{text}` is not a payload"))?;
    let inner = rest.strip_suffix(')').ok_or_else(|| format!("`{text}` lacks a closing parenthesis"))?;
    match head {
        "choose" => Ok(Payload::SubsetChoice(parse_ids(inner)?)),
        "participants" => Ok(Payload::ParticipantSet(parse_ids(inner)?)),
        "scalar" => inner.parse::<Fixed>().map(Payload::ScalarValue).map_err(|e| format!("scalar `{inner}`: {e}")),
        "op" => serde_json::from_str(inner).map(Payload::OperationDecl).map_err(|e| format!("operation: {e}")),
        "commitment" => Ok(Payload::CommitmentData(inner.into())),
        "transfer" => Ok(Payload::TransferDecl(inner.into())),
        other => Err(format!("unknown payload form `{other}`")),
    }
}

fn render_slot(slot: &Slot) -> String {
    format!("{}@{}", slot.author, slot.origin)
}

fn parse_slot(text: &str) -> Result<Slot, String> {
    let (author, origin) = text.split_once('@').ok_or_else(|| format!("`{text}` is not author@point"))?;
    let author = match author {
        "user" => Author::User,
        "issuer" => Author::Issuer,
        other => return Err(format!("unknown author `{other}`")),
    };
    if !valid_id(origin) {
        return Err(format!("`{origin}` is not a valid point id"));
    }
    Ok(Slot::new(origin, author))
}

fn render_statement(s: &Statement) -> String {
    format!("{}={}", render_slot(&s.slot()), render_payload(&s.payload))
}

fn parse_statement(text: &str) -> Result<Statement, String> {
    let (slot, payload) = text.trim().split_once('=').ok_or_else(|| format!("`{text}` is not slot=payload"))?;
    let slot = parse_slot(slot.trim())?;
    Ok(Statement::new(slot.origin, slot.author, parse_payload(payload)?))
}

/// Renders a scenario in the `.scn` format. Floats are written in their
/// shortest round-tripping form.
pub fn render_scenario(s: &Scenario) -> String {
    let mut o = String::new();
    let net = &s.network;
    let scheme = &s.scheme;
    let _ = writeln!(o, "scn-version: 1");
    let _ = writeln!(o, "\n[scenario]");
    let _ = writeln!(o, "name: {}", s.name);
    if !s.description.is_empty() {
        let _ = writeln!(o, "description: {}", s.description);
    }
    let _ = writeln!(o, "owner: {}", s.owner);
    let _ = writeln!(o, "presenter: {}", s.presenter);

    let _ = writeln!(o, "\n[network]");
    let model = match net.model() {
        SignallingModel::Flat => "flat".to_string(),
        SignallingModel::SphereSurface { radius, speed } => format!("sphere-surface radius={radius:?} speed={speed:?}"),
        SignallingModel::SphereInterior { radius, interior_speed } => {
            format!("sphere-interior radius={radius:?} speed={interior_speed:?}")
        }
        SignallingModel::ExplicitDag { .. } => "explicit-dag".to_string(),
    };
    let _ = writeln!(o, "model: {model}");
    for p in net.points() {
        let place = match &p.location {
            Location::Cartesian([x, y, z]) => format!("x={x:?},{y:?},{z:?}"),
            Location::Spherical { lat, lon } => format!("lat={lat:?} lon={lon:?}"),
            Location::Site(site) => format!("site={site}"),
        };
        let _ = write!(o, "point: {} t={:?} {place}", p.id, p.t);
        if p.region_radius != 0.0 {
            let _ = write!(o, " radius={:?}", p.region_radius);
        }
        if let Some(region) = &p.region {
            let _ = write!(o, " region={region}");
        }
        o.push('\n');
    }
    if let SignallingModel::ExplicitDag { edges } = net.model() {
        for e in edges {
            let _ = writeln!(o, "edge: {} {} delay={:?}", e.from, e.to, e.delay);
        }
    }
    let _ = writeln!(o, "inputs: {}", net.input_points().iter().map(PointId::as_str).collect::<Vec<_>>().join(" "));
    let _ = writeln!(o, "presentations: {}", net.presentation_points().iter().map(PointId::as_str).collect::<Vec<_>>().join(" "));
    if let Some(start) = net.start() {
        let _ = writeln!(o, "start: {start}");
    }

    let _ = writeln!(o, "\n[scheme]");
    let _ = writeln!(o, "kind: {}", scheme.kind.name());
    match &scheme.predicate {
        Predicate::SubsetChoice { valid_subsets } => {
            let _ = writeln!(o, "predicate: subset-choice");
            for (q, subsets) in valid_subsets {
                for subset in subsets {
                    let _ = writeln!(o, "valid-subset: {q} {}", render_ids(subset));
                }
            }
        }
        Predicate::Argmax { sites } | Predicate::RestrictedArgmax { sites, .. } => {
            let _ = match &scheme.predicate {
                Predicate::RestrictedArgmax { participants: ParticipantSource::Committed(c), .. } => {
                    writeln!(o, "predicate: restricted-argmax committed={c}")
                }
                Predicate::RestrictedArgmax { .. } => writeln!(o, "predicate: restricted-argmax per-site"),
                _ => writeln!(o, "predicate: argmax"),
            };
            for (q, p) in sites {
                let _ = writeln!(o, "site: {q} {p}");
            }
        }
        Predicate::ValidSets { sets } => {
            let _ = writeln!(o, "predicate: valid-sets");
            for (q, listed) in sets {
                for set in listed {
                    let body: Vec<String> = set.iter().map(render_statement).collect();
                    let _ = writeln!(o, "valid-set: {q} {}", body.join("; "));
                }
            }
        }
        Predicate::FixedPath { start } => {
            let _ = writeln!(o, "predicate: fixed-path start={start}");
        }
        Predicate::Unconditional => {
            let _ = writeln!(o, "predicate: unconditional");
        }
    }
    if let Some(IssuerConstraint::SameEverywhere) = scheme.issuer_constraint {
        let _ = writeln!(o, "issuer-constraint: same-everywhere");
    }
    if let Some(ValueFn::MaxMinusMin) = scheme.value_fn {
        let _ = writeln!(o, "value: max-minus-min");
    }
    if let Some(comm) = &scheme.comm_subsets {
        for (key, map) in [
            ("forward-issuer", &comm.issuer_forward),
            ("forward-user", &comm.user_forward),
            ("notice-issuer", &comm.issuer_notice),
            ("notice-user", &comm.user_notice),
        ] {
            for (from, to) in map {
                let _ = writeln!(o, "{key}: {from} {}", render_ids(to));
            }
        }
    }
    for (slot, alphabet) in &scheme.alphabets {
        let body = match alphabet {
            Alphabet::Unbounded => "unbounded".to_string(),
            Alphabet::Finite(set) if set.is_empty() => "null".to_string(),
            Alphabet::Finite(set) => set.iter().map(render_payload).collect::<Vec<_>>().join(" | "),
        };
        let _ = writeln!(o, "alphabet: {} {body}", render_slot(slot));
    }

    if !s.nature_inputs.is_empty() || !s.issuer_inputs.is_empty() {
        let _ = writeln!(o, "\n[inputs]");
        for (at, p) in &s.nature_inputs {
            let _ = writeln!(o, "nature: {at} {}", render_payload(p));
        }
        for (at, p) in &s.issuer_inputs {
            let _ = writeln!(o, "issuer: {at} {}", render_payload(p));
        }
    }
    if let Some(enc) = &s.encryption {
        let _ = writeln!(o, "\n[commitment]");
        let _ = writeln!(o, "states-per-bit: {}", enc.states_per_bit);
        let _ = writeln!(o, "error-rate: {:?}", enc.noise.error_rate);
        let _ = writeln!(o, "loss-rate: {:?}", enc.noise.loss_rate);
        let _ = match enc.noise.tolerance {
            ToleranceRule::ThreeSigma => writeln!(o, "tolerance: three-sigma"),
            ToleranceRule::Fixed(t) => writeln!(o, "tolerance: {t:?}"),
        };
    }
    if !s.transfers.is_empty() {
        let _ = writeln!(o, "\n[transfers]");
        for t in &s.transfers {
            let _ = writeln!(o, "transfer: at={} datum={} from={} to={}", t.at, t.datum, t.from, t.to);
        }
    }
    o
}

struct Parser {
    errors: Vec<ParseError>,
}

impl Parser {
    fn error(&mut self, line: usize, field: &str, code: ErrorCode, message: impl Into<String>) {
        self.errors.push(ParseError { line, field: field.into(), code, message: message.into() });
    }

    fn float(&mut self, line: usize, field: &str, text: &str) -> f64 {
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() => v,
            _ => {
                self.error(line, field, ErrorCode::BadValue, format!("`{text}` is not a finite number"));
                0.0
            }
        }
    }
}

/// Splits `k=v` options after positional words.
fn options(words: &[&str]) -> (Vec<String>, BTreeMap<String, String>) {
    let mut positional = Vec::new();
    let mut named = BTreeMap::new();
    for w in words {
        match w.split_once('=') {
            Some((k, v)) => {
                named.insert(k.to_string(), v.to_string());
            }
            None => positional.push(w.to_string()),
        }
    }
    (positional, named)
}

/// Parses a `.scn` file. All problems found are reported together.
pub fn parse_scenario(text: &str) -> Result<Scenario, Vec<ParseError>> {
    let mut p = Parser { errors: Vec::new() };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    match lines.next() {
        Some((_, l)) if l.trim() == "scn-version: 1" => {}
        Some((n, l)) => p.error(n, "scn-version", ErrorCode::Version, format!("expected `scn-version: 1`, found `{}`", l.trim())),
        None => p.error(0, "scn-version", ErrorCode::Version, "empty file"),
    }

    let mut name = None;
    let mut description = String::new();
    let mut owner = "alice".to_string();
    let mut presenter = "alice".to_string();
    let mut model_line = None;
    let mut model: Option<SignallingModel> = None;
    let mut points: Vec<SpacetimePoint> = Vec::new();
    let mut point_lines: BTreeMap<PointId, usize> = BTreeMap::new();
    let mut edges = Vec::new();
    let mut inputs: Option<Vec<PointId>> = None;
    let mut presentations: Option<Vec<PointId>> = None;
    let mut start = None;
    let mut kind = None;
    let mut predicate_line = 0;
    let mut predicate_head: Option<(String, BTreeMap<String, String>)> = None;
    let mut valid_subsets: BTreeMap<PointId, Vec<BTreeSet<PointId>>> = BTreeMap::new();
    let mut sites: BTreeMap<PointId, PointId> = BTreeMap::new();
    let mut valid_sets: BTreeMap<PointId, BTreeSet<BTreeSet<Statement>>> = BTreeMap::new();
    let mut issuer_constraint = None;
    let mut value_fn = None;
    let mut comm: Option<CommSubsets> = None;
    let mut alphabets: BTreeMap<Slot, Alphabet> = BTreeMap::new();
    let mut nature = BTreeMap::new();
    let mut issuer = BTreeMap::new();
    let mut input_lines: BTreeMap<(PointId, Author), usize> = BTreeMap::new();
    let mut encryption: Option<EncryptionSpec> = None;
    let mut transfers = Vec::new();
    let mut seen_sections = BTreeSet::new();
    let mut section = String::new();

    for (n, raw) in lines {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(header) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            if !["scenario", "network", "scheme", "inputs", "commitment", "transfers"].contains(&header) {
                p.error(n, header, ErrorCode::UnknownSection, format!("unknown section `[{header}]`"));
            } else if !seen_sections.insert(header.to_string()) {
                p.error(n, header, ErrorCode::Duplicate, format!("section `[{header}]` repeated"));
            }
            section = header.to_string();
            if header == "commitment" {
                encryption = Some(EncryptionSpec { states_per_bit: 0, noise: NoiseModel::noiseless() });
            }
            continue;
        }
        let Some((key, value)) = line.split_once(':') else {
            p.error(n, "", ErrorCode::Syntax, format!("expected `key: value`, found `{line}`"));
            continue;
        };
        let key = key.trim();
        let value = value.trim();
        let words: Vec<&str> = value.split_whitespace().collect();
        let bad = |p: &mut Parser, msg: String| p.error(n, key, ErrorCode::BadValue, msg);
        match (section.as_str(), key) {
            ("", _) => p.error(n, key, ErrorCode::Syntax, "field outside any section"),
            ("scenario", "name") => name = Some(value.to_string()),
            ("scenario", "description") => description = value.to_string(),
            ("scenario", "owner") => owner = value.to_string(),
            ("scenario", "presenter") => presenter = value.to_string(),
            ("network", "model") => {
                model_line = Some(n);
                let (pos, opt) = options(&words);
                let radius = opt.get("radius").map(|v| p.float(n, key, v)).unwrap_or(1.0);
                let speed = opt.get("speed").map(|v| p.float(n, key, v)).unwrap_or(1.0);
                model = match pos.first().map(String::as_str) {
                    Some("flat") => Some(SignallingModel::Flat),
                    Some("sphere-surface") => Some(SignallingModel::SphereSurface { radius, speed }),
                    Some("sphere-interior") => Some(SignallingModel::SphereInterior { radius, interior_speed: speed }),
                    Some("explicit-dag") => Some(SignallingModel::ExplicitDag { edges: Vec::new() }),
                    other => {
                        bad(&mut p, format!("unknown model {other:?}"));
                        None
                    }
                };
            }
            ("network", "point") => {
                let (pos, opt) = options(&words);
                let Some(id) = pos.first().filter(|id| valid_id(id)) else {
                    bad(&mut p, "point needs a valid id".into());
                    continue;
                };
                let t = match opt.get("t") {
                    Some(v) => p.float(n, key, v),
                    None => {
                        p.error(n, key, ErrorCode::MissingField, format!("point `{id}` has no time"));
                        0.0
                    }
                };
                let location = if let Some(xs) = opt.get("x") {
                    let c: Vec<f64> = xs.split(',').map(|v| p.float(n, key, v)).collect();
                    if c.len() != 3 {
                        bad(&mut p, format!("point `{id}` needs three cartesian coordinates"));
                        continue;
                    }
                    Location::Cartesian([c[0], c[1], c[2]])
                } else if let (Some(lat), Some(lon)) = (opt.get("lat"), opt.get("lon")) {
                    Location::Spherical { lat: p.float(n, key, lat), lon: p.float(n, key, lon) }
                } else if let Some(site) = opt.get("site") {
                    Location::Site(site.clone())
                } else {
                    p.error(n, key, ErrorCode::MissingField, format!("point `{id}` has no location"));
                    continue;
                };
                let mut point = SpacetimePoint::new(id.as_str(), t, location);
                if let Some(r) = opt.get("radius") {
                    point.region_radius = p.float(n, key, r);
                }
                point.region = opt.get("region").cloned();
                if let Some(extra) = opt.keys().find(|k| !["t", "x", "lat", "lon", "site", "radius", "region"].contains(&k.as_str())) {
                    p.error(n, key, ErrorCode::UnknownField, format!("unknown point option `{extra}`"));
                }
                point_lines.entry(point.id.clone()).or_insert(n);
                points.push(point);
            }
            ("network", "edge") => {
                let (pos, opt) = options(&words);
                match (pos.as_slice(), opt.get("delay")) {
                    ([from, to], Some(d)) => {
                        let delay = p.float(n, key, d);
                        edges.push(DagEdge { from: from.clone(), to: to.clone(), delay });
                    }
                    _ => bad(&mut p, "expected `edge: FROM TO delay=D`".into()),
                }
            }
            ("network", "inputs") | ("network", "presentations") => {
                let list: Vec<PointId> = words.iter().map(|w| PointId::from(*w)).collect();
                if key == "inputs" {
                    inputs = Some(list);
                } else {
                    presentations = Some(list);
                }
            }
            ("network", "start") => start = Some(PointId::from(value)),
            ("scheme", "kind") => match SchemeKind::from_name(value) {
                Some(k) => kind = Some(k),
                None => bad(&mut p, format!("unknown scheme kind `{value}`")),
            },
            ("scheme", "predicate") => {
                let (pos, opt) = options(&words);
                predicate_line = n;
                predicate_head = pos.first().map(|h| (h.clone(), opt));
                if pos.len() > 1 && pos[1] != "per-site" {
                    bad(&mut p, format!("unexpected `{}`", pos[1]));
                }
            }
            ("scheme", "valid-subset") => match words.as_slice() {
                [q] => valid_subsets.entry(PointId::from(*q)).or_default().push(BTreeSet::new()),
                [q, list] => match parse_ids(list) {
                    Ok(s) => valid_subsets.entry(PointId::from(*q)).or_default().push(s),
                    Err(e) => bad(&mut p, e),
                },
                _ => bad(&mut p, "expected `valid-subset: Q P1,P2`".into()),
            },
            ("scheme", "site") => match words.as_slice() {
                [q, s] => {
                    sites.insert(PointId::from(*q), PointId::from(*s));
                }
                _ => bad(&mut p, "expected `site: Q P`".into()),
            },
            ("scheme", "valid-set") => {
                let (q, rest) = value.split_once(' ').unwrap_or((value, ""));
                let parsed: Result<BTreeSet<Statement>, String> =
                    rest.split(';').filter(|s| !s.trim().is_empty()).map(parse_statement).collect();
                match parsed {
                    Ok(s) => {
                        valid_sets.entry(PointId::from(q)).or_default().insert(s);
                    }
                    Err(e) => bad(&mut p, e),
                }
            }
            ("scheme", "issuer-constraint") if value == "same-everywhere" => {
                issuer_constraint = Some(IssuerConstraint::SameEverywhere)
            }
            ("scheme", "value") if value == "max-minus-min" => value_fn = Some(ValueFn::MaxMinusMin),
            ("scheme", "issuer-constraint") | ("scheme", "value") => bad(&mut p, format!("unknown value `{value}`")),
            ("scheme", "forward-issuer" | "forward-user" | "notice-issuer" | "notice-user") => {
                let (from, list) = value.split_once(' ').unwrap_or((value, ""));
                match parse_ids(list) {
                    Ok(targets) => {
                        let c = comm.get_or_insert_with(CommSubsets::default);
                        let map = match key {
                            "forward-issuer" => &mut c.issuer_forward,
                            "forward-user" => &mut c.user_forward,
                            "notice-issuer" => &mut c.issuer_notice,
                            _ => &mut c.user_notice,
                        };
                        map.insert(PointId::from(from), targets);
                    }
                    Err(e) => bad(&mut p, e),
                }
            }
            ("scheme", "alphabet") => {
                let (slot, body) = value.split_once(' ').unwrap_or((value, "null"));
                let slot = match parse_slot(slot) {
                    Ok(s) => s,
                    Err(e) => {
                        bad(&mut p, e);
                        continue;
                    }
                };
                let alphabet = if body.trim() == "unbounded" {
                    Ok(Alphabet::Unbounded)
                } else {
                    body.split(" | ").map(parse_payload).collect::<Result<Vec<_>, _>>().map(Alphabet::finite)
                };
                match alphabet {
                    Ok(a) => {
                        if alphabets.insert(slot.clone(), a).is_some() {
                            p.error(n, key, ErrorCode::Duplicate, format!("alphabet for {slot} repeated"));
                        }
                    }
                    Err(e) => bad(&mut p, e),
                }
            }
            ("inputs", "nature" | "issuer") => {
                let (at, body) = value.split_once(' ').unwrap_or((value, "null"));
                let author = if key == "nature" { Author::User } else { Author::Issuer };
                match parse_payload(body) {
                    Ok(payload) => {
                        let target = if author == Author::User { &mut nature } else { &mut issuer };
                        target.insert(PointId::from(at), payload);
                        input_lines.insert((PointId::from(at), author), n);
                    }
                    Err(e) => bad(&mut p, e),
                }
            }
            ("commitment", field) => {
                let enc = encryption.get_or_insert(EncryptionSpec { states_per_bit: 0, noise: NoiseModel::noiseless() });
                match field {
                    "states-per-bit" => match value.parse::<usize>() {
                        Ok(v) if v > 0 => enc.states_per_bit = v,
                        _ => bad(&mut p, format!("`{value}` is not a positive count")),
                    },
                    "error-rate" => enc.noise.error_rate = p.float(n, key, value),
                    "loss-rate" => enc.noise.loss_rate = p.float(n, key, value),
                    "tolerance" if value == "three-sigma" => enc.noise.tolerance = ToleranceRule::ThreeSigma,
                    "tolerance" => enc.noise.tolerance = ToleranceRule::Fixed(p.float(n, key, value)),
                    _ => p.error(n, key, ErrorCode::UnknownField, format!("unknown field `{key}` in [commitment]")),
                }
            }
            ("transfers", "transfer") => {
                let (_, opt) = options(&words);
                match (opt.get("at"), opt.get("datum"), opt.get("from"), opt.get("to")) {
                    (Some(at), Some(datum), Some(from), Some(to)) => transfers.push(TransferRequest {
                        at: PointId::from(at.as_str()),
                        datum: PointId::from(datum.as_str()),
                        from: from.clone(),
                        to: to.clone(),
                    }),
                    _ => bad(&mut p, "expected `transfer: at=P datum=P from=A to=B`".into()),
                }
            }
            (section, key) => p.error(n, key, ErrorCode::UnknownField, format!("unknown field `{key}` in [{section}]")),
        }
    }

    if let Some(enc) = &encryption {
        if enc.states_per_bit == 0 {
            p.error(0, "states-per-bit", ErrorCode::MissingField, "commitment section needs states-per-bit");
        } else if let Err(e) = NoiseModel::new(enc.noise.error_rate, enc.noise.loss_rate, enc.noise.tolerance) {
            p.error(0, "error-rate", ErrorCode::BadValue, e.to_string());
        }
    }
    let name = name.unwrap_or_else(|| {
        p.error(0, "name", ErrorCode::MissingField, "scenario has no name");
        String::new()
    });
    if model.is_none() && model_line.is_none() {
        p.error(0, "model", ErrorCode::MissingField, "network has no model");
    }
    let inputs = inputs.unwrap_or_else(|| {
        p.error(0, "inputs", ErrorCode::MissingField, "network lists no inputs");
        Vec::new()
    });
    let presentations = match presentations {
        Some(list) if !list.is_empty() => list,
        _ => {
            p.error(0, "presentations", ErrorCode::MissingField, "network lists no presentation points");
            Vec::new()
        }
    };
    let kind = kind.unwrap_or_else(|| {
        p.error(0, "kind", ErrorCode::MissingField, "scheme has no kind");
        SchemeKind::FreeChoiceOptimal
    });
    let predicate = match predicate_head {
        None => {
            p.error(0, "predicate", ErrorCode::MissingField, "scheme has no predicate");
            Predicate::Unconditional
        }
        Some((head, opt)) => match head.as_str() {
            "subset-choice" => Predicate::SubsetChoice { valid_subsets },
            "argmax" => Predicate::Argmax { sites },
            "restricted-argmax" => Predicate::RestrictedArgmax {
                sites,
                participants: match opt.get("committed") {
                    Some(c) => ParticipantSource::Committed(c.as_str().into()),
                    None => ParticipantSource::PerSite,
                },
            },
            "valid-sets" => Predicate::ValidSets { sets: valid_sets },
            "fixed-path" => match opt.get("start") {
                Some(s) => Predicate::FixedPath { start: s.as_str().into() },
                None => {
                    p.error(predicate_line, "predicate", ErrorCode::MissingField, "fixed-path needs start=");
                    Predicate::Unconditional
                }
            },
            "unconditional" => Predicate::Unconditional,
            other => {
                p.error(predicate_line, "predicate", ErrorCode::BadValue, format!("unknown predicate `{other}`"));
                Predicate::Unconditional
            }
        },
    };
    if !p.errors.is_empty() {
        return Err(p.errors);
    }

    let model = match model {
        Some(SignallingModel::ExplicitDag { .. }) => SignallingModel::ExplicitDag { edges },
        Some(m) => m,
        None => return Err(p.errors),
    };
    let mut network = Network::new(points, model).with_inputs(inputs).with_presentations(presentations);
    if let Some(s) = start {
        network = network.with_start(s);
    }
    let network_line = model_line.unwrap_or(0);
    for finding in network.validate().findings {
        let (line, code) = match &finding {
            Finding::CyclicDag { .. } => (network_line, ErrorCode::Acyclicity),
            Finding::DuplicateId(id) | Finding::UnreachablePresentation(id) | Finding::MalformedPoint { id, .. } => {
                (point_lines.get(id).copied().unwrap_or(network_line), ErrorCode::Geometry)
            }
            Finding::RegionOverlap(a, _) => (point_lines.get(a).copied().unwrap_or(network_line), ErrorCode::Geometry),
            Finding::UnknownPoint(_) | Finding::InvalidModel(_) => (network_line, ErrorCode::Geometry),
        };
        p.error(line, "network", code, finding.to_string());
    }
    let mut scheme = SchemeSpec::new(kind, predicate);
    scheme.alphabets = alphabets;
    scheme.issuer_constraint = issuer_constraint;
    scheme.value_fn = value_fn;
    scheme.comm_subsets = comm;
    if p.errors.is_empty() {
        if let Err(e) = scheme.validate(&network) {
            p.error(predicate_line, "scheme", ErrorCode::Scheme, e.to_string());
        }
    }
    for slot in scheme.slots() {
        if !network.is_input(slot.origin.as_str()) {
            p.error(0, "alphabet", ErrorCode::Scheme, format!("statements at `{}`, which is not an input point", slot.origin));
        }
    }
    for (map, author) in [(&nature, Author::User), (&issuer, Author::Issuer)] {
        for (at, payload) in map {
            if let Err(e) = scheme.check_statement(&Statement::new(at.clone(), author, payload.clone())) {
                let line = input_lines.get(&(at.clone(), author)).copied().unwrap_or(0);
                p.error(line, if author == Author::User { "nature" } else { "issuer" }, ErrorCode::Alphabet, e.to_string());
            }
        }
    }
    if kind == SchemeKind::Encrypted && encryption.is_none() {
        p.error(0, "commitment", ErrorCode::MissingField, "encrypted scheme needs a [commitment] section");
    }
    if !p.errors.is_empty() {
        p.errors.sort_by_key(|e| (e.line, e.code));
        return Err(p.errors);
    }
    Ok(Scenario {
        name,
        description,
        network,
        scheme,
        nature_inputs: nature,
        issuer_inputs: issuer,
        encryption,
        owner,
        presenter,
        transfers,
    })
}

/// The bundled scenarios, by name.
pub fn bundled() -> Vec<Scenario> {
    vec![
        example1_default(),
        example2_default(),
        example3_default(),
        example3_fraud(),
        example4_default(),
        classical_money(),
        subsets_small(),
        fixed_path_small(),
    ]
}
