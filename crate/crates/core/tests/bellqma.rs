use sepqma_core::bellqma::{
    arthur_verify, completeness_bound, computational_povm, estimate_acceptance, honest_message, measure_copies,
    preset_message, stage1_distribution, BellProtocol, FixedDistribution, MerlinMessage, MerlinStrategy,
    ProtocolParams, RejectionStage, Stage2Acceptor, YRegister,
};
use sepqma_core::random::{par_map, random_density, stream};
use sepqma_core::{HermitianOperator, MultipartiteShape};
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn single(d: usize) -> MultipartiteShape {
    MultipartiteShape::single(d).unwrap()
}

fn protocol(m: usize, r: usize, accept: f64) -> BellProtocol {
    let povms = (0..m).map(|_| computational_povm(r)).collect();
    BellProtocol::new(1, povms, Stage2Acceptor::constant(m, r, accept).unwrap()).unwrap()
}

fn mixed(d: usize) -> HermitianOperator {
    HermitianOperator::identity(single(d)).scale(1.0 / d as f64)
}

fn chi_square_p_value(counts: &[u64], probs: &[f64]) -> f64 {
    let k: u64 = counts.iter().sum();
    let stat: f64 = counts
        .iter()
        .zip(probs)
        .map(|(&n, &p)| {
            let e = k as f64 * p;
            (n as f64 - e).powi(2) / e
        })
        .sum();
    1.0 - ChiSquared::new((counts.len() - 1) as f64).unwrap().cdf(stat)
}

#[test]
fn iid_counts_are_multinomial() {
    let proto = protocol(1, 3, 1.0);
    for seed in 0..10 {
        let rho = random_density(single(3), &mut stream(100, seed));
        let probs = stage1_distribution(&proto, 0, &rho).unwrap();
        let counts = measure_copies(&proto, 0, &YRegister::Iid(rho), 10_000, &mut stream(101, seed)).unwrap();
        assert!(chi_square_p_value(&counts, &probs) > 1e-3, "seed {seed}: {counts:?} vs {probs:?}");
    }
}

#[test]
fn explicit_counts_follow_the_effective_state() {
    let proto = protocol(1, 2, 1.0);
    let mut rng = stream(102, 0);
    let copies: Vec<HermitianOperator> = (0..10_000).map(|_| random_density(single(2), &mut rng)).collect();
    let xi = copies.iter().fold(HermitianOperator::zeros(single(2)), |acc, s| acc.add(s).unwrap()).scale(1e-4);
    let q = stage1_distribution(&proto, 0, &xi).unwrap();
    let reg = YRegister::Explicit(copies);
    let freqs: Vec<f64> = par_map(200, |t| {
        let counts = measure_copies(&proto, 0, &reg, 10_000, &mut stream(103, t as u64)).unwrap();
        counts[0] as f64 / 10_000.0
    });
    let mean = freqs.iter().sum::<f64>() / freqs.len() as f64;
    // Standard error of the mean is at most 0.5 / sqrt(2·10^6).
    assert!((mean - q[0]).abs() < 5.0 * 0.5 / (2e6f64).sqrt(), "{mean} vs {}", q[0]);
}

#[test]
fn honest_step4_never_rejects_at_p20() {
    let proto = protocol(1, 2, 1.0);
    let params = ProtocolParams::new(20, 40_000, 1, 20).unwrap();
    let msg = honest_message(&proto, &[mixed(2)], &params).unwrap();
    let est = estimate_acceptance(&proto, &msg, &params, 100_000, 104).unwrap();
    let step4 = est.outcomes.iter().filter(|o| o.rejection_stage == Some(RejectionStage::Step4)).count();
    assert_eq!(step4, 0);
}

#[test]
fn more_copies_fewer_honest_rejections() {
    let proto = protocol(1, 2, 1.0);
    let rates: Vec<usize> = [1_000u64, 10_000, 100_000]
        .iter()
        .map(|&k| {
            let params = ProtocolParams::new(200, k, 1, 40).unwrap();
            let msg = honest_message(&proto, &[mixed(2)], &params).unwrap();
            let est = estimate_acceptance(&proto, &msg, &params, 20_000, 105).unwrap();
            est.outcomes.iter().filter(|o| o.rejection_stage == Some(RejectionStage::Step4)).count()
        })
        .collect();
    assert!(rates[0] > rates[1] && rates[1] > rates[2], "{rates:?}");
}

#[test]
fn lying_claim_is_detected_when_picked() {
    let proto = protocol(1, 2, 1.0);
    let params = ProtocolParams::new(20, 40_000, 50, 20).unwrap();
    let msg = MerlinMessage::new(20, vec![FixedDistribution::point_mass(20, 2, 0)], vec![YRegister::Iid(mixed(2))]).unwrap();
    let est = estimate_acceptance(&proto, &msg, &params, 10_000, 106).unwrap();
    let picked: Vec<_> = est.outcomes.iter().filter(|o| o.step4_pick == Some((0, 0))).collect();
    let rejected = picked.iter().filter(|o| o.rejection_stage == Some(RejectionStage::Step4)).count();
    assert!(picked.len() > 4_000);
    assert!(rejected as f64 / picked.len() as f64 >= 1.0 / 40.0);
}

#[test]
fn honest_acceptance_meets_completeness_bound() {
    let proto = protocol(1, 2, 1.0);
    let params = proto.default_params().unwrap();
    assert_eq!(params, ProtocolParams::new(40, 320_000, 50, 40).unwrap());
    let msg = honest_message(&proto, &[mixed(2)], &params).unwrap();
    let est = estimate_acceptance(&proto, &msg, &params, 1_000, 107).unwrap();
    assert!(est.mean >= completeness_bound(&params));
    assert!(est.mean >= 0.99);
}

#[test]
fn mixed_y_against_pure_claim_is_rejected_in_step4() {
    let proto = protocol(1, 2, 1.0);
    let params = ProtocolParams::new(20, 40_000, 50, 20).unwrap();
    let pure = computational_povm(2).remove(0);
    let msg = preset_message(&proto, &[pure], &params, MerlinStrategy::MixedY).unwrap();
    let out = arthur_verify(&proto, &msg, &params, &mut stream(108, 0)).unwrap();
    assert_eq!(out.rejection_stage, Some(RejectionStage::Step4));
}

#[test]
fn estimates_are_reproducible() {
    let proto = protocol(2, 2, 0.6);
    let params = ProtocolParams::new(20, 40_000, 51, 20).unwrap();
    let msg = honest_message(&proto, &[mixed(2), mixed(2)], &params).unwrap();
    let a = estimate_acceptance(&proto, &msg, &params, 64, 109).unwrap();
    let b = estimate_acceptance(&proto, &msg, &params, 64, 109).unwrap();
    assert_eq!(a, b);
    assert!(a.lower <= a.mean && a.mean <= a.upper);
}
