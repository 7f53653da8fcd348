use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Binomial, Distribution};

use super::message::{MerlinMessage, YRegister};
use super::params::ProtocolParams;
use super::{stage1_distribution, BellProtocol};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RejectionStage {
    Step3,
    Step4,
    Step5,
}

impl RejectionStage {
    pub fn as_str(self) -> &'static str {
        match self {
            RejectionStage::Step3 => "step3",
            RejectionStage::Step4 => "step4",
            RejectionStage::Step5 => "step5",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VerificationOutcome {
    pub accepted: bool,
    pub rejection_stage: Option<RejectionStage>,
    pub step4_pick: Option<(usize, usize)>,
    pub step4_count: Option<u64>,
}

impl VerificationOutcome {
    fn rejected(stage: RejectionStage, pick: Option<(usize, usize)>, count: Option<u64>) -> Self {
        Self { accepted: false, rejection_stage: Some(stage), step4_pick: pick, step4_count: count }
    }
}

fn binomial<R: Rng + ?Sized>(n: u64, p: f64, rng: &mut R) -> u64 {
    if n == 0 {
        return 0;
    }
    Binomial::new(n, p.clamp(0.0, 1.0)).expect("p in [0, 1]").sample(rng)
}

fn check_message(protocol: &BellProtocol, message: &MerlinMessage, params: &ProtocolParams) -> Result<()> {
    if message.provers() != protocol.provers() {
        return Err(Error::PartyMismatch { left: protocol.provers(), right: message.provers() });
    }
    if message.alpha() != params.alpha {
        return Err(Error::InvalidArgument("message precision differs from α"));
    }
    for (j, reg) in message.y().iter().enumerate() {
        if reg.dim() != protocol.local_dim(j) {
            return Err(Error::DimensionMismatch { expected: protocol.local_dim(j), found: reg.dim() });
        }
        if let YRegister::Explicit(copies) = reg {
            if copies.len() as u64 != params.k {
                return Err(Error::DimensionMismatch { expected: params.k as usize, found: copies.len() });
            }
        }
        if message.x()[j].len() != protocol.outcomes() {
            return Err(Error::DimensionMismatch { expected: protocol.outcomes(), found: message.x()[j].len() });
        }
    }
    Ok(())
}

/// Outcome counts from measuring all `k` copies of prover `j`'s register.
/// IID copies give a multinomial drawn by sequential binomials; explicit
/// copies are measured one at a time.
pub fn measure_copies<R: Rng + ?Sized>(
    protocol: &BellProtocol,
    j: usize,
    register: &YRegister,
    k: u64,
    rng: &mut R,
) -> Result<Vec<u64>> {
    let r = protocol.outcomes();
    let mut counts = alloc::vec![0u64; r];
    match register {
        YRegister::Iid(rho) => {
            let probs = stage1_distribution(protocol, j, rho)?;
            let mut left = k;
            let mut mass = 1.0;
            for i in 0..r - 1 {
                let p = if mass > 0.0 { probs[i] / mass } else { 0.0 };
                counts[i] = binomial(left, p, rng);
                left -= counts[i];
                mass -= probs[i];
            }
            counts[r - 1] = left;
        }
        YRegister::Explicit(copies) => {
            for sigma in copies {
                let probs = stage1_distribution(protocol, j, sigma)?;
                let u: f64 = rng.random();
                let mut cum = 0.0;
                let mut outcome = r - 1;
                for (i, p) in probs.iter().enumerate() {
                    cum += p;
                    if u < cum {
                        outcome = i;
                        break;
                    }
                }
                counts[outcome] += 1;
            }
        }
    }
    Ok(counts)
}

/// Count of outcome `i` alone among prover `j`'s copies.
fn count_outcome<R: Rng + ?Sized>(
    protocol: &BellProtocol,
    j: usize,
    i: usize,
    register: &YRegister,
    k: u64,
    rng: &mut R,
) -> Result<u64> {
    match register {
        YRegister::Iid(rho) => Ok(binomial(k, stage1_distribution(protocol, j, rho)?[i], rng)),
        YRegister::Explicit(copies) => {
            let mut n = 0;
            for sigma in copies {
                let p = stage1_distribution(protocol, j, sigma)?[i];
                if rng.random::<f64>() < p {
                    n += 1;
                }
            }
            Ok(n)
        }
    }
}

/// One run of Arthur's Steps 3 to 5. Errors only signal a message that does
/// not fit the protocol; every protocol failure is a rejection.
pub fn arthur_verify<R: Rng + ?Sized>(
    protocol: &BellProtocol,
    message: &MerlinMessage,
    params: &ProtocolParams,
    rng: &mut R,
) -> Result<VerificationOutcome> {
    check_message(protocol, message, params)?;
    if !message.x().iter().all(|x| x.sums_to_one()) {
        return Ok(VerificationOutcome::rejected(RejectionStage::Step3, None, None));
    }

    let j = rng.random_range(0..protocol.provers());
    let i = rng.random_range(0..protocol.outcomes());
    let n = count_outcome(protocol, j, i, &message.y()[j], params.k, rng)?;
    if message.x()[j].deviates(i, n, params.k, params.p) {
        return Ok(VerificationOutcome::rejected(RejectionStage::Step4, Some((j, i)), Some(n)));
    }

    let stage2 = protocol.stage2();
    let mut tuple = alloc::vec![0usize; protocol.provers()];
    let mut accepted_runs = 0u64;
    for _ in 0..params.q {
        for (slot, x) in tuple.iter_mut().zip(message.x()) {
            *slot = x.sample(rng);
        }
        if rng.random::<f64>() < stage2.accept_probability(&tuple) {
            accepted_runs += 1;
        }
    }
    if 2 * accepted_runs > params.q {
        Ok(VerificationOutcome { accepted: true, rejection_stage: None, step4_pick: Some((j, i)), step4_count: Some(n) })
    } else {
        Ok(VerificationOutcome::rejected(RejectionStage::Step5, Some((j, i)), Some(n)))
    }
}
