//! Relativistic bit coordination with BB84 states.
//!
//! The verifier prepares random BB84 states and hands them to the committer
//! at the commit point. To coordinate bit 0 the committer measures every
//! state in the Z basis, for bit 1 in the X basis, and ships the outcomes
//! to agents at the unveil points. Each unveiling is checked against the
//! verifier's preparation record on the states prepared in the declared
//! basis.

use std::f64::consts::{FRAC_PI_4, FRAC_PI_8, FRAC_PI_2};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::causal::PointId;
use crate::stats::{linear_fit, mutual_information, wilson_interval};
use crate::{Network, SignallingModel, SpacetimePoint};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoordinationError {
    #[error("at least one state is required")]
    NoStates,
    #[error("at least one bit is required")]
    EmptyString,
    #[error("malformed unveiling: {0}")]
    MalformedUnveiling(String),
    #[error("invalid noise model: {0}")]
    InvalidNoise(String),
    #[error("unknown strategy `{0}`")]
    UnknownStrategy(String),
    #[error("invalid setup: {0}")]
    InvalidSetup(String),
    #[error("at least one trial is required")]
    NoTrials,
}

/// Deterministic generator for sub-stream `index` of experiment `domain`.
pub fn stream_rng(seed: u64, domain: u64, index: u64) -> ChaCha8Rng {
    let mut key = seed ^ domain.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    key = (key ^ (key >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    key = (key ^ (key >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    let mut rng = ChaCha8Rng::seed_from_u64(key ^ (key >> 31));
    rng.set_stream(index);
    rng
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Basis {
    Z,
    X,
}

impl Basis {
    /// Basis the committer measures in to coordinate `bit`.
    pub fn for_bit(bit: bool) -> Basis {
        if bit {
            Basis::X
        } else {
            Basis::Z
        }
    }

    /// Measurement angle in the real plane of the qubit.
    pub fn angle(self) -> f64 {
        match self {
            Basis::Z => 0.0,
            Basis::X => FRAC_PI_4,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BB84State {
    pub basis: Basis,
    pub value: bool,
}

impl BB84State {
    /// The state is `cos a |0> + sin a |1>` for the returned angle `a`.
    pub fn angle(self) -> f64 {
        match (self.basis, self.value) {
            (Basis::Z, false) => 0.0,
            (Basis::Z, true) => FRAC_PI_2,
            (Basis::X, false) => FRAC_PI_4,
            (Basis::X, true) => -FRAC_PI_4,
        }
    }
}

/// A prepared state in transit. Its preparation can only be probed by
/// measuring it.
#[derive(Clone, Debug)]
pub struct Carrier(BB84State);

/// A measurement result; `None` marks a lost carrier.
pub type Outcome = Option<bool>;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum ToleranceRule {
    /// `e + 3 sqrt(e(1-e)/n)`, floored at 0.02, for `n` checked states.
    ThreeSigma,
    Fixed(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub error_rate: f64,
    pub loss_rate: f64,
    pub tolerance: ToleranceRule,
}

const TOLERANCE_FLOOR: f64 = 0.02;

fn three_sigma(rate: f64, n: usize) -> f64 {
    if n == 0 {
        return TOLERANCE_FLOOR;
    }
    3.0 * (rate * (1.0 - rate) / n as f64).sqrt()
}

impl NoiseModel {
    pub fn noiseless() -> Self {
        NoiseModel { error_rate: 0.0, loss_rate: 0.0, tolerance: ToleranceRule::ThreeSigma }
    }

    pub fn new(error_rate: f64, loss_rate: f64, tolerance: ToleranceRule) -> Result<Self, CoordinationError> {
        let model = NoiseModel { error_rate, loss_rate, tolerance };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<(), CoordinationError> {
        if !(0.0..0.5).contains(&self.error_rate) {
            return Err(CoordinationError::InvalidNoise(format!("error rate {} outside [0, 1/2)", self.error_rate)));
        }
        if !(0.0..1.0).contains(&self.loss_rate) {
            return Err(CoordinationError::InvalidNoise(format!("loss rate {} outside [0, 1)", self.loss_rate)));
        }
        if let ToleranceRule::Fixed(tau) = self.tolerance {
            if !(self.error_rate < tau && tau < 0.5) {
                return Err(CoordinationError::InvalidNoise(format!("tolerance {tau} must lie in (e, 1/2)")));
            }
        }
        Ok(())
    }

    /// Largest admissible mismatch fraction among `checked` states.
    pub fn tolerance_for(&self, checked: usize) -> f64 {
        match self.tolerance {
            ToleranceRule::Fixed(tau) => tau,
            ToleranceRule::ThreeSigma => (self.error_rate + three_sigma(self.error_rate, checked)).max(TOLERANCE_FLOOR),
        }
    }

    /// Largest admissible loss fraction among `total` states.
    pub fn loss_bound(&self, total: usize) -> f64 {
        self.loss_rate + three_sigma(self.loss_rate, total).max(TOLERANCE_FLOOR)
    }
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel::noiseless()
    }
}

/// Prepares `n` independent uniform BB84 states from `seed`.
pub fn prepare_states(n: usize, seed: u64) -> Result<(Vec<BB84State>, Vec<Carrier>), CoordinationError> {
    prepare_states_with(n, &mut stream_rng(seed, 0, 0))
}

pub fn prepare_states_with<R: Rng>(n: usize, rng: &mut R) -> Result<(Vec<BB84State>, Vec<Carrier>), CoordinationError> {
    if n == 0 {
        return Err(CoordinationError::NoStates);
    }
    let record: Vec<BB84State> = (0..n)
        .map(|_| BB84State { basis: if rng.random::<bool>() { Basis::X } else { Basis::Z }, value: rng.random() })
        .collect();
    let carriers = record.iter().copied().map(Carrier).collect();
    Ok((record, carriers))
}

fn measure_one<R: Rng>(carrier: &Carrier, theta: f64, noise: &NoiseModel, rng: &mut R) -> Outcome {
    if noise.loss_rate > 0.0 && rng.random::<f64>() < noise.loss_rate {
        return None;
    }
    let p_zero = (carrier.0.angle() - theta).cos().powi(2);
    let mut bit = if p_zero >= 1.0 - 1e-12 {
        false
    } else if p_zero <= 1e-12 {
        true
    } else {
        rng.random::<f64>() >= p_zero
    };
    if noise.error_rate > 0.0 && rng.random::<f64>() < noise.error_rate {
        bit = !bit;
    }
    Some(bit)
}

/// Measures every carrier along the basis at angle `theta` (0 is Z, π/4 is X).
pub fn measure_at<R: Rng>(carriers: &[Carrier], theta: f64, noise: &NoiseModel, rng: &mut R) -> Vec<Outcome> {
    carriers.iter().map(|c| measure_one(c, theta, noise, rng)).collect()
}

pub fn measure<R: Rng>(carriers: &[Carrier], basis: Basis, noise: &NoiseModel, rng: &mut R) -> Vec<Outcome> {
    measure_at(carriers, basis.angle(), noise, rng)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnveilRecord {
    pub at: PointId,
    pub declared_bit: bool,
    pub bases: Vec<Basis>,
    pub outcomes: Vec<Outcome>,
}

impl UnveilRecord {
    /// Unveiling of `bit` with every state declared in the matching basis.
    pub fn new(at: impl Into<PointId>, bit: bool, outcomes: Vec<Outcome>) -> Self {
        UnveilRecord { at: at.into(), declared_bit: bit, bases: vec![Basis::for_bit(bit); outcomes.len()], outcomes }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Verification {
    pub accepted: bool,
    pub checked: usize,
    pub mismatches: usize,
    pub lost: usize,
    pub tolerance: f64,
}

/// Checks an unveiling against the preparation record.
pub fn verify_unveiling(
    record: &[BB84State],
    unveil: &UnveilRecord,
    noise: &NoiseModel,
) -> Result<Verification, CoordinationError> {
    if unveil.bases.len() != record.len() || unveil.outcomes.len() != record.len() {
        return Err(CoordinationError::MalformedUnveiling(format!(
            "{} states prepared, {} bases and {} outcomes unveiled",
            record.len(),
            unveil.bases.len(),
            unveil.outcomes.len()
        )));
    }
    let declared = Basis::for_bit(unveil.declared_bit);
    let bases_ok = unveil.bases.iter().all(|b| *b == declared);
    let mut checked = 0;
    let mut mismatches = 0;
    let mut lost = 0;
    for (state, outcome) in record.iter().zip(&unveil.outcomes) {
        match outcome {
            None => lost += 1,
            Some(bit) if state.basis == declared => {
                checked += 1;
                if *bit != state.value {
                    mismatches += 1;
                }
            }
            Some(_) => {}
        }
    }
    let tolerance = noise.tolerance_for(checked);
    let mismatch_ok = checked == 0 || mismatches as f64 <= tolerance * checked as f64;
    let loss_ok = lost as f64 <= noise.loss_bound(record.len()) * record.len() as f64;
    Ok(Verification { accepted: bases_ok && mismatch_ok && loss_ok, checked, mismatches, lost, tolerance })
}

/// Commit point and unveil points on a network.
#[derive(Clone, Debug)]
pub struct CoordinationSetup {
    pub network: Network,
    pub commit_point: PointId,
    pub unveil_points: Vec<PointId>,
}

impl CoordinationSetup {
    pub fn new(network: Network, commit_point: impl Into<PointId>, unveil_points: Vec<PointId>) -> Result<Self, CoordinationError> {
        let setup = CoordinationSetup { network, commit_point: commit_point.into(), unveil_points };
        setup.validate()?;
        Ok(setup)
    }

    /// Commit point at the origin and `n` unveil points on a circle of
    /// radius 5 at `t = 10`, pairwise spacelike.
    pub fn flat(n: usize) -> Self {
        let mut points = vec![SpacetimePoint::flat("P", 0.0, [0.0; 3])];
        let mut unveil = Vec::with_capacity(n);
        for k in 0..n {
            let phase = std::f64::consts::TAU * k as f64 / n.max(1) as f64;
            let id = format!("Q{}", k + 1);
            points.push(SpacetimePoint::flat(id.as_str(), 10.0, [5.0 * phase.cos(), 5.0 * phase.sin(), 0.0]));
            unveil.push(PointId::from(id));
        }
        CoordinationSetup { network: Network::new(points, SignallingModel::Flat), commit_point: "P".into(), unveil_points: unveil }
    }

    pub fn validate(&self) -> Result<(), CoordinationError> {
        if self.unveil_points.is_empty() {
            return Err(CoordinationError::InvalidSetup("no unveil points".into()));
        }
        for q in &self.unveil_points {
            let ok = self
                .network
                .precedes_or_equal(self.commit_point.as_str(), q.as_str())
                .map_err(|e| CoordinationError::InvalidSetup(e.to_string()))?;
            if !ok {
                return Err(CoordinationError::InvalidSetup(format!(
                    "unveil point `{q}` is not in the causal future of `{}`",
                    self.commit_point
                )));
            }
        }
        Ok(())
    }

    /// Number of unveil-point pairs any of which could disagree.
    pub fn pair_count(&self) -> usize {
        let n = self.unveil_points.len();
        n * n.saturating_sub(1) / 2
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Party {
    Committer,
    Verifier,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    Commit,
    Unveil,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum MessageContent {
    /// Quantum carriers; only their number is observable without measuring.
    Carriers { count: usize },
    Unveiling { declared_bit: bool },
    /// Arbitrary classical data.
    Classical { bits: Vec<bool> },
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ProtocolMessage {
    pub from: Party,
    pub phase: Phase,
    pub at: PointId,
    pub content: MessageContent,
}

#[derive(Clone, Debug)]
pub struct CommitTranscript {
    pub n_states: usize,
    /// The verifier's secret preparation record.
    pub verifier_record: Vec<BB84State>,
    pub commit_point: PointId,
    pub unveil_points: Vec<PointId>,
    pub noise: NoiseModel,
    pub unveilings: Vec<UnveilRecord>,
    pub verdicts: Vec<Verification>,
    pub messages: Vec<ProtocolMessage>,
}

impl CommitTranscript {
    pub fn accepted_everywhere(&self) -> bool {
        self.verdicts.iter().all(|v| v.accepted)
    }

    /// Committer-to-verifier messages sent before any unveiling.
    pub fn pre_unveil_disclosures(&self) -> Vec<&ProtocolMessage> {
        self.messages.iter().filter(|m| m.from == Party::Committer && m.phase == Phase::Commit).collect()
    }
}

/// Honest coordination of `bit`: measurement at the commit point and the
/// same unveiling at every unveil point.
pub fn coordinate_bit<R: Rng>(
    bit: bool,
    n: usize,
    setup: &CoordinationSetup,
    noise: &NoiseModel,
    rng: &mut R,
) -> Result<CommitTranscript, CoordinationError> {
    let (record, carriers) = prepare_states_with(n, rng)?;
    let outcomes = measure(&carriers, Basis::for_bit(bit), noise, rng);
    let unveilings: Vec<UnveilRecord> =
        setup.unveil_points.iter().map(|q| UnveilRecord::new(q.clone(), bit, outcomes.clone())).collect();
    transcript(record, setup, noise, unveilings)
}

/// Builds a transcript from arbitrary unveilings, verifying each.
pub fn transcript(
    record: Vec<BB84State>,
    setup: &CoordinationSetup,
    noise: &NoiseModel,
    unveilings: Vec<UnveilRecord>,
) -> Result<CommitTranscript, CoordinationError> {
    let mut verdicts = Vec::with_capacity(unveilings.len());
    for u in &unveilings {
        verdicts.push(verify_unveiling(&record, u, noise)?);
    }
    let mut messages = vec![ProtocolMessage {
        from: Party::Verifier,
        phase: Phase::Commit,
        at: setup.commit_point.clone(),
        content: MessageContent::Carriers { count: record.len() },
    }];
    messages.extend(unveilings.iter().map(|u| ProtocolMessage {
        from: Party::Committer,
        phase: Phase::Unveil,
        at: u.at.clone(),
        content: MessageContent::Unveiling { declared_bit: u.declared_bit },
    }));
    Ok(CommitTranscript {
        n_states: record.len(),
        verifier_record: record,
        commit_point: setup.commit_point.clone(),
        unveil_points: setup.unveil_points.clone(),
        noise: *noise,
        unveilings,
        verdicts,
        messages,
    })
}

/// Component-wise composition of bit coordinations.
#[derive(Clone, Debug)]
pub struct StringTranscript {
    pub components: Vec<CommitTranscript>,
}

impl StringTranscript {
    pub fn from_components(components: Vec<CommitTranscript>) -> Result<Self, CoordinationError> {
        if components.is_empty() {
            return Err(CoordinationError::EmptyString);
        }
        Ok(StringTranscript { components })
    }

    /// Whether every component was accepted at unveil point `index`.
    pub fn accepted_at(&self, index: usize) -> bool {
        self.components.iter().all(|c| c.verdicts.get(index).is_some_and(|v| v.accepted))
    }

    /// The string declared at unveil point `index`.
    pub fn declared_at(&self, index: usize) -> Vec<bool> {
        self.components.iter().filter_map(|c| c.unveilings.get(index).map(|u| u.declared_bit)).collect()
    }

    pub fn unveil_count(&self) -> usize {
        self.components.first().map_or(0, |c| c.unveilings.len())
    }
}

/// Honest coordination of the string `bits`, `n` states per bit.
pub fn string_coordinate(
    bits: &[bool],
    n: usize,
    setup: &CoordinationSetup,
    noise: &NoiseModel,
    seed: u64,
) -> Result<StringTranscript, CoordinationError> {
    if bits.is_empty() {
        return Err(CoordinationError::EmptyString);
    }
    let components = bits
        .iter()
        .enumerate()
        .map(|(k, &bit)| coordinate_bit(bit, n, setup, noise, &mut stream_rng(seed, 1, k as u64)))
        .collect::<Result<Vec<_>, _>>()?;
    StringTranscript::from_components(components)
}

/// Catalogue of committer strategies aimed at two disagreeing acceptances.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheatStrategy {
    /// No measurement; both unveilings guess outcomes.
    GuessRandom,
    /// Measure in Z, unveil 0 at one point and claim 1 with the same outcomes at the other.
    MeasureZClaimX,
    /// Measure halfway between Z and X and unveil both bits with those outcomes.
    IntermediateBasis,
    /// Choose the bit only at unveiling from shared randomness, then measure
    /// in its basis; unveilings agree.
    DeferredChoice,
}

impl CheatStrategy {
    pub const ALL: [CheatStrategy; 4] = [
        CheatStrategy::GuessRandom,
        CheatStrategy::MeasureZClaimX,
        CheatStrategy::IntermediateBasis,
        CheatStrategy::DeferredChoice,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CheatStrategy::GuessRandom => "guess-random",
            CheatStrategy::MeasureZClaimX => "measure-z-claim-x",
            CheatStrategy::IntermediateBasis => "intermediate-basis",
            CheatStrategy::DeferredChoice => "deferred-choice",
        }
    }
}

impl fmt::Display for CheatStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CheatStrategy {
    type Err = CoordinationError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| CoordinationError::UnknownStrategy(s.to_string()))
    }
}

/// Outcome of one cheating attempt against two unveil points.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct TrialOutcome {
    pub accepted_both: bool,
    /// Both accepted with different bits.
    pub violation: bool,
}

/// One attempt of `strategy` with `n` states against the first two unveil
/// points of `setup`.
pub fn cheat_trial<R: Rng>(
    strategy: CheatStrategy,
    n: usize,
    setup: &CoordinationSetup,
    noise: &NoiseModel,
    rng: &mut R,
) -> Result<TrialOutcome, CoordinationError> {
    if setup.unveil_points.len() < 2 {
        return Err(CoordinationError::InvalidSetup("cheating needs two unveil points".into()));
    }
    let (q1, q2) = (&setup.unveil_points[0], &setup.unveil_points[1]);
    let (record, carriers) = prepare_states_with(n, rng)?;
    let (first, second) = match strategy {
        CheatStrategy::GuessRandom => {
            let guess = |rng: &mut R| (0..n).map(|_| Some(rng.random::<bool>())).collect::<Vec<_>>();
            (UnveilRecord::new(q1.clone(), false, guess(rng)), UnveilRecord::new(q2.clone(), true, guess(rng)))
        }
        CheatStrategy::MeasureZClaimX => {
            let outcomes = measure(&carriers, Basis::Z, noise, rng);
            (UnveilRecord::new(q1.clone(), false, outcomes.clone()), UnveilRecord::new(q2.clone(), true, outcomes))
        }
        CheatStrategy::IntermediateBasis => {
            let outcomes = measure_at(&carriers, FRAC_PI_8, noise, rng);
            (UnveilRecord::new(q1.clone(), false, outcomes.clone()), UnveilRecord::new(q2.clone(), true, outcomes))
        }
        CheatStrategy::DeferredChoice => {
            let bit: bool = rng.random();
            let outcomes = measure(&carriers, Basis::for_bit(bit), noise, rng);
            (UnveilRecord::new(q1.clone(), bit, outcomes.clone()), UnveilRecord::new(q2.clone(), bit, outcomes))
        }
    };
    let a = verify_unveiling(&record, &first, noise)?.accepted;
    let b = verify_unveiling(&record, &second, noise)?.accepted;
    Ok(TrialOutcome { accepted_both: a && b, violation: a && b && first.declared_bit != second.declared_bit })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheatEstimate {
    pub strategy: CheatStrategy,
    pub n: usize,
    pub trials: u64,
    pub violations: u64,
    pub accepted_both: u64,
    pub eps_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub unveil_points: usize,
    pub pairs: usize,
}

const BLOCK: u64 = 4096;

/// Monte-Carlo estimate of the probability that two unveil points accept
/// different bits.
pub fn cheat_experiment(
    strategy: CheatStrategy,
    n: usize,
    trials: u64,
    seed: u64,
    noise: &NoiseModel,
) -> Result<CheatEstimate, CoordinationError> {
    if n == 0 {
        return Err(CoordinationError::NoStates);
    }
    if trials == 0 {
        return Err(CoordinationError::NoTrials);
    }
    let setup = CoordinationSetup::flat(2);
    let blocks = trials.div_ceil(BLOCK);
    let domain = 0x100 + (strategy as u64) * 0x1_0000 + n as u64;
    let (violations, accepted) = (0..blocks)
        .into_par_iter()
        .map(|block| {
            let mut rng = stream_rng(seed, domain, block);
            let count = BLOCK.min(trials - block * BLOCK);
            let mut v = 0u64;
            let mut a = 0u64;
            for _ in 0..count {
                let outcome = cheat_trial(strategy, n, &setup, noise, &mut rng)?;
                v += outcome.violation as u64;
                a += outcome.accepted_both as u64;
            }
            Ok((v, a))
        })
        .try_reduce(|| (0, 0), |x, y| Ok((x.0 + y.0, x.1 + y.1)))?;
    let (ci_low, ci_high) = wilson_interval(violations, trials, 1.96);
    Ok(CheatEstimate {
        strategy,
        n,
        trials,
        violations,
        accepted_both: accepted,
        eps_hat: violations as f64 / trials as f64,
        ci_low,
        ci_high,
        unveil_points: setup.unveil_points.len(),
        pairs: setup.pair_count(),
    })
}

/// Fit of `ln ε̂ = a - b N` over the grid points with nonzero estimates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DecayFit {
    pub intercept: f64,
    pub rate: f64,
    pub r_squared: f64,
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepReport {
    pub strategy: CheatStrategy,
    pub rows: Vec<CheatEstimate>,
    pub fit: Option<DecayFit>,
    /// No violation observed anywhere on the grid.
    pub below_resolution: bool,
}

impl SweepReport {
    /// Exponential decay with a good fit, or nothing observable at all.
    pub fn decays(&self, min_r_squared: f64) -> bool {
        self.below_resolution || self.fit.is_some_and(|f| f.rate > 0.0 && f.r_squared > min_r_squared)
    }
}

pub const DEFAULT_GRID: [usize; 5] = [8, 12, 16, 20, 24];

pub fn security_sweep(
    strategy: CheatStrategy,
    grid: &[usize],
    trials: u64,
    seed: u64,
    noise: &NoiseModel,
) -> Result<SweepReport, CoordinationError> {
    let rows = grid
        .iter()
        .map(|&n| cheat_experiment(strategy, n, trials, seed, noise))
        .collect::<Result<Vec<_>, _>>()?;
    let nonzero: Vec<(f64, f64)> = rows.iter().filter(|r| r.violations > 0).map(|r| (r.n as f64, r.eps_hat.ln())).collect();
    let fit = if nonzero.len() >= 3 {
        linear_fit(&nonzero).map(|f| DecayFit { intercept: f.intercept, rate: -f.slope, r_squared: f.r_squared, points: nonzero.len() })
    } else {
        None
    };
    Ok(SweepReport { strategy, below_resolution: nonzero.is_empty(), rows, fit })
}

/// Information, in bits, that committer messages sent before unveiling
/// carry about the committed value. Exactly zero when no such message exists.
pub fn concealment_audit<V: Ord + Clone>(samples: &[(V, Vec<ProtocolMessage>)]) -> f64 {
    let disclosed: Vec<(V, Vec<ProtocolMessage>)> = samples
        .iter()
        .map(|(v, msgs)| {
            let pre: Vec<ProtocolMessage> = msgs
                .iter()
                .filter(|m| m.from == Party::Committer && m.phase == Phase::Commit)
                .cloned()
                .collect();
            (v.clone(), pre)
        })
        .collect();
    if disclosed.iter().all(|(_, m)| m.is_empty()) {
        return 0.0;
    }
    mutual_information(&disclosed)
}
