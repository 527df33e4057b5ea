use smoney::coordination::{
    cheat_experiment, coordinate_bit, measure, prepare_states, stream_rng, string_coordinate, verify_unveiling,
    concealment_audit, Basis, CheatStrategy, CoordinationSetup, MessageContent, NoiseModel, Party, Phase,
    ProtocolMessage, ToleranceRule, UnveilRecord,
};

const SAMPLES: usize = 100_000;

fn fraction(hits: usize, total: usize) -> f64 {
    hits as f64 / total as f64
}

#[test]
fn bases_are_chosen_uniformly() {
    let (record, _) = prepare_states(SAMPLES, 11).unwrap();
    let z = record.iter().filter(|s| s.basis == Basis::Z).count();
    assert!((fraction(z, SAMPLES) - 0.5).abs() < 0.01);
    let ones = record.iter().filter(|s| s.value).count();
    assert!((fraction(ones, SAMPLES) - 0.5).abs() < 0.01);
}

#[test]
fn conjugate_measurement_is_a_fair_coin() {
    let (record, carriers) = prepare_states(4 * SAMPLES, 12).unwrap();
    let outcomes = measure(&carriers, Basis::Z, &NoiseModel::noiseless(), &mut stream_rng(12, 7, 0));
    let plus: Vec<bool> = record
        .iter()
        .zip(&outcomes)
        .filter(|(s, _)| s.basis == Basis::X && !s.value)
        .map(|(_, o)| o.unwrap())
        .collect();
    assert!(plus.len() > SAMPLES * 9 / 10);
    assert!((fraction(plus.iter().filter(|b| **b).count(), plus.len()) - 0.5).abs() < 0.01);
    // Matching bases never err without noise.
    assert!(record.iter().zip(&outcomes).filter(|(s, _)| s.basis == Basis::Z).all(|(s, o)| *o == Some(s.value)));
}

#[test]
fn noise_flips_at_the_stated_rate() {
    let noise = NoiseModel::new(0.05, 0.0, ToleranceRule::ThreeSigma).unwrap();
    let (record, carriers) = prepare_states(4 * SAMPLES, 13).unwrap();
    let outcomes = measure(&carriers, Basis::Z, &noise, &mut stream_rng(13, 7, 0));
    let ones: Vec<bool> = record
        .iter()
        .zip(&outcomes)
        .filter(|(s, _)| s.basis == Basis::Z && s.value)
        .map(|(_, o)| o.unwrap())
        .collect();
    let flipped = ones.iter().filter(|b| !**b).count();
    assert!((fraction(flipped, ones.len()) - 0.05).abs() < 0.005, "{}", fraction(flipped, ones.len()));
}

#[test]
fn honest_noiseless_unveilings_always_pass() {
    let setup = CoordinationSetup::flat(4);
    let noise = NoiseModel::noiseless();
    for n in 1..=64 {
        for bit in [false, true] {
            for trial in 0..20 {
                let t = coordinate_bit(bit, n, &setup, &noise, &mut stream_rng(trial, 3, n as u64)).unwrap();
                assert!(t.accepted_everywhere(), "n={n} bit={bit} trial={trial}");
                assert!(t.pre_unveil_disclosures().is_empty());
            }
        }
    }
}

#[test]
fn noisy_honest_unveilings_pass_with_fixed_tolerance() {
    let setup = CoordinationSetup::flat(2);
    let noise = NoiseModel::new(0.05, 0.0, ToleranceRule::Fixed(0.15)).unwrap();
    let trials = 10_000;
    let accepted = (0..trials)
        .filter(|&k| coordinate_bit(k % 2 == 1, 500, &setup, &noise, &mut stream_rng(14, 3, k)).unwrap().accepted_everywhere())
        .count();
    assert!(fraction(accepted, trials as usize) >= 0.999);
}

#[test]
fn measuring_the_wrong_basis_is_caught() {
    let est = cheat_experiment(CheatStrategy::MeasureZClaimX, 100, 100_000, 15, &NoiseModel::noiseless()).unwrap();
    // Each of roughly fifty X-prepared states passes with probability one half.
    assert_eq!(est.violations, 0);
    assert_eq!(est.pairs, 1);
}

#[test]
fn string_acceptance_is_the_product_of_its_bits() {
    // Short strings under noise so that single bits fail often enough to measure.
    let setup = CoordinationSetup::flat(2);
    let noise = NoiseModel::new(0.05, 0.0, ToleranceRule::Fixed(0.08)).unwrap();
    let n = 24;
    let trials = 20_000u64;
    let single = (0..trials)
        .filter(|&k| coordinate_bit(k % 2 == 0, n, &setup, &noise, &mut stream_rng(16, 9, k)).unwrap().verdicts[0].accepted)
        .count();
    let p = fraction(single, trials as usize);
    let bits = [true, false, true, true, false, false, true, false];
    let strings = (0..trials / 4)
        .filter(|&k| string_coordinate(&bits, n, &setup, &noise, 1000 + k).unwrap().accepted_at(0))
        .count();
    let s = fraction(strings, (trials / 4) as usize);
    let expected = p.powi(8);
    let sigma = (expected * (1.0 - expected) / (trials / 4) as f64).sqrt() + 8.0 * p.powi(7) * (p * (1.0 - p) / trials as f64).sqrt();
    assert!(p < 0.99 && p > 0.6, "per-bit rate {p}");
    assert!((s - expected).abs() < 4.0 * sigma, "string {s} vs p^8 {expected}");
}

#[test]
fn honest_strings_decode_everywhere() {
    let setup = CoordinationSetup::flat(3);
    let bits = [true, true, false, true, false, false, false, true];
    let t = string_coordinate(&bits, 16, &setup, &NoiseModel::noiseless(), 5).unwrap();
    for j in 0..t.unveil_count() {
        assert!(t.accepted_at(j));
        assert_eq!(t.declared_at(j), bits);
    }
}

#[test]
fn one_cheated_component_spoils_the_string() {
    let setup = CoordinationSetup::flat(2);
    let noise = NoiseModel::noiseless();
    let mut t = string_coordinate(&[false; 8], 40, &setup, &noise, 6).unwrap();
    let component = &mut t.components[3];
    let flipped: Vec<_> = component.unveilings[1].outcomes.clone();
    let forged = UnveilRecord::new(component.unveil_points[1].clone(), true, flipped);
    component.verdicts[1] = verify_unveiling(&component.verifier_record, &forged, &noise).unwrap();
    component.unveilings[1] = forged;
    assert!(t.accepted_at(0));
    assert!(!t.accepted_at(1));
}

fn leak(payload: Vec<bool>) -> Vec<ProtocolMessage> {
    vec![ProtocolMessage { from: Party::Committer, phase: Phase::Commit, at: "P".into(), content: MessageContent::Classical { bits: payload } }]
}

#[test]
fn concealment_is_measured_in_bits() {
    let setup = CoordinationSetup::flat(2);
    let noise = NoiseModel::noiseless();
    let honest: Vec<(bool, Vec<ProtocolMessage>)> = (0..1000u64)
        .map(|k| {
            let bit = k % 3 == 0;
            (bit, coordinate_bit(bit, 8, &setup, &noise, &mut stream_rng(17, 3, k)).unwrap().messages)
        })
        .collect();
    assert_eq!(concealment_audit(&honest), 0.0);

    let mut rng = stream_rng(18, 0, 0);
    let clear: Vec<_> = (0..SAMPLES).map(|_| {
        let bit = rand::Rng::random::<bool>(&mut rng);
        (bit, leak(vec![bit]))
    }).collect();
    assert!((concealment_audit(&clear) - 1.0).abs() < 0.01);

    let padded: Vec<_> = (0..SAMPLES).map(|_| {
        let bit = rand::Rng::random::<bool>(&mut rng);
        let pad = rand::Rng::random::<bool>(&mut rng);
        (bit, leak(vec![bit ^ pad]))
    }).collect();
    assert!(concealment_audit(&padded) < 0.001);
}

#[test]
fn deferred_choice_is_consistent_and_never_flagged() {
    for n in [1, 8, 24, 64] {
        let est = cheat_experiment(CheatStrategy::DeferredChoice, n, 4096, 19, &NoiseModel::noiseless()).unwrap();
        assert_eq!(est.violations, 0);
        assert_eq!(est.accepted_both, est.trials);
    }
}

#[test]
fn cheating_gets_harder_with_more_states() {
    let noise = NoiseModel::noiseless();
    for strategy in [CheatStrategy::GuessRandom, CheatStrategy::IntermediateBasis] {
        let small = cheat_experiment(strategy, 2, 50_000, 20, &noise).unwrap();
        let large = cheat_experiment(strategy, 8, 50_000, 20, &noise).unwrap();
        assert!(small.violations > 0, "{strategy}");
        assert!(large.ci_high < small.ci_low, "{strategy}: {large:?} vs {small:?}");
    }
}
