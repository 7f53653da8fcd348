use alloc::borrow::Cow;
use alloc::vec::Vec;

use super::message::MerlinMessage;
use super::params::ProtocolParams;
use super::verify::{arthur_verify, VerificationOutcome};
use super::BellProtocol;
use crate::error::{Error, Result};
use crate::random::{par_map, stream, StreamRng};

/// Normal quantile for a two-sided 95% interval.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Supplies Merlin's message for each trial.
pub trait MessageSource: Sync {
    fn message(&self, trial: u64, rng: &mut StreamRng) -> Result<Cow<'_, MerlinMessage>>;
}

impl MessageSource for MerlinMessage {
    fn message(&self, _trial: u64, _rng: &mut StreamRng) -> Result<Cow<'_, MerlinMessage>> {
        Ok(Cow::Borrowed(self))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AcceptanceEstimate {
    pub trials: u64,
    pub accepted: u64,
    pub mean: f64,
    /// Half-width of the Wilson 95% interval.
    pub ci95: f64,
    pub lower: f64,
    pub upper: f64,
    pub outcomes: Vec<VerificationOutcome>,
}

/// Wilson score interval `(lower, upper)` for `successes` out of `trials`.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let phat = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (phat + z2 / (2.0 * n)) / denom;
    let half = z * libm::sqrt(phat * (1.0 - phat) / n + z2 / (4.0 * n * n)) / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Runs `trials` independent verifications; trial `t` uses stream `t` of `seed`.
pub fn estimate_acceptance<S: MessageSource + ?Sized>(
    protocol: &BellProtocol,
    merlin: &S,
    params: &ProtocolParams,
    trials: u64,
    seed: u64,
) -> Result<AcceptanceEstimate> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1"));
    }
    let outcomes = par_map(trials as usize, |t| {
        let mut rng = stream(seed, t as u64);
        let message = merlin.message(t as u64, &mut rng)?;
        arthur_verify(protocol, &message, params, &mut rng)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let accepted = outcomes.iter().filter(|o| o.accepted).count() as u64;
    let (lower, upper) = wilson_interval(accepted, trials, Z95);
    Ok(AcceptanceEstimate {
        trials,
        accepted,
        mean: accepted as f64 / trials as f64,
        ci95: (upper - lower) / 2.0,
        lower,
        upper,
        outcomes,
    })
}
