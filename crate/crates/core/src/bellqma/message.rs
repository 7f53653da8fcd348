use alloc::vec::Vec;

use num_bigint::BigUint;

use super::fixed::{dyadic_floor, FixedDistribution};
use super::params::ProtocolParams;
use super::{stage1_distribution, BellProtocol, STATE_TOL};
use crate::error::{Error, Result};
use crate::operator::HermitianOperator;
use crate::shape::MultipartiteShape;

/// Per-copy model of prover `j`'s share of the `Y` register.
#[derive(Debug, Clone, PartialEq)]
pub enum YRegister {
    /// The same state on each of the `k` copies.
    Iid(HermitianOperator),
    /// One (possibly different) reduced state per copy.
    Explicit(Vec<HermitianOperator>),
}

impl YRegister {
    pub fn dim(&self) -> usize {
        match self {
            YRegister::Iid(rho) => rho.dim(),
            YRegister::Explicit(copies) => copies.first().map_or(0, HermitianOperator::dim),
        }
    }
}

/// Merlin's classical register `X` and quantum register `Y`.
///
/// `X_j` is not required to sum to one here: such messages are legal and are
/// rejected by Arthur at Step 3.
#[derive(Debug, Clone, PartialEq)]
pub struct MerlinMessage {
    alpha: u32,
    x: Vec<FixedDistribution>,
    y: Vec<YRegister>,
}

impl MerlinMessage {
    pub fn new(alpha: u32, x: Vec<FixedDistribution>, y: Vec<YRegister>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::PartyMismatch { left: x.len(), right: y.len() });
        }
        if x.iter().any(|d| d.alpha() != alpha) {
            return Err(Error::InvalidArgument("every X_j must use the message precision"));
        }
        for reg in &y {
            let states: &[HermitianOperator] = match reg {
                YRegister::Iid(rho) => core::slice::from_ref(rho),
                YRegister::Explicit(copies) => copies,
            };
            if states.is_empty() {
                return Err(Error::InvalidArgument("explicit Y register needs at least one copy"));
            }
            for s in states {
                if s.dim() != states[0].dim() {
                    return Err(Error::DimensionMismatch { expected: states[0].dim(), found: s.dim() });
                }
                if !s.is_density(STATE_TOL)? {
                    return Err(Error::InvalidArgument("Y register states must be density operators"));
                }
            }
        }
        Ok(Self { alpha, x, y })
    }

    pub fn alpha(&self) -> u32 {
        self.alpha
    }

    pub fn provers(&self) -> usize {
        self.x.len()
    }

    pub fn x(&self) -> &[FixedDistribution] {
        &self.x
    }

    pub fn y(&self) -> &[YRegister] {
        &self.y
    }

    pub fn x_mut(&mut self) -> &mut [FixedDistribution] {
        &mut self.x
    }
}

fn check_proofs(protocol: &BellProtocol, proofs: &[HermitianOperator]) -> Result<()> {
    if proofs.len() != protocol.provers() {
        return Err(Error::PartyMismatch { left: protocol.provers(), right: proofs.len() });
    }
    for (j, rho) in proofs.iter().enumerate() {
        if rho.dim() != protocol.local_dim(j) {
            return Err(Error::DimensionMismatch { expected: protocol.local_dim(j), found: rho.dim() });
        }
    }
    Ok(())
}

/// `X_j` = Stage-1 distribution of `ρ_j` in fixed point, `Y_j` = IID copies of `ρ_j`.
pub fn honest_message(protocol: &BellProtocol, proofs: &[HermitianOperator], params: &ProtocolParams) -> Result<MerlinMessage> {
    check_proofs(protocol, proofs)?;
    let x = proofs
        .iter()
        .enumerate()
        .map(|(j, rho)| FixedDistribution::from_probabilities(&stage1_distribution(protocol, j, rho)?, params.alpha))
        .collect::<Result<Vec<_>>>()?;
    let y = proofs.iter().map(|rho| YRegister::Iid(rho.clone())).collect();
    MerlinMessage::new(params.alpha, x, y)
}

/// Built-in prover behaviours.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MerlinStrategy {
    Honest,
    /// Honest `Y`, but prover 0's claimed distribution moves `shift` (default
    /// `1/(10mr)`) of mass from its most likely outcome `i*` to `i* + 1 mod r`.
    LyingX { shift: Option<f64> },
    /// Honest `X`, maximally mixed `Y`.
    MixedY,
}

pub fn preset_message(
    protocol: &BellProtocol,
    proofs: &[HermitianOperator],
    params: &ProtocolParams,
    strategy: MerlinStrategy,
) -> Result<MerlinMessage> {
    let mut message = honest_message(protocol, proofs, params)?;
    match strategy {
        MerlinStrategy::Honest => {}
        MerlinStrategy::LyingX { shift } => {
            let r = protocol.outcomes();
            if r < 2 {
                return Err(Error::InvalidArgument("lying about X needs at least two outcomes"));
            }
            let delta = shift.unwrap_or(1.0 / (10 * protocol.provers() * r) as f64);
            if !(delta > 0.0 && delta <= 1.0) {
                return Err(Error::InvalidArgument("shift must lie in (0, 1]"));
            }
            // Round up so the lie is at least `delta`.
            let (mut amount, frac) = dyadic_floor(delta, params.alpha);
            if frac > 0.0 {
                amount += 1u8;
            }
            let x0 = &mut message.x[0];
            let from = (0..r).max_by(|&a, &b| x0.entries()[a].cmp(&x0.entries()[b]).then(b.cmp(&a))).expect("r ≥ 2");
            let available: &BigUint = &x0.entries()[from];
            if available < &amount {
                amount = available.clone();
            }
            x0.shift_mass(from, (from + 1) % r, &amount)?;
        }
        MerlinStrategy::MixedY => {
            for (j, reg) in message.y.iter_mut().enumerate() {
                let d = protocol.local_dim(j);
                *reg = YRegister::Iid(HermitianOperator::identity(MultipartiteShape::single(d)?).scale(1.0 / d as f64));
            }
        }
    }
    Ok(message)
}

/// `ξ_j`, the average of the per-copy states of prover `j`.
pub fn effective_single_copy_state(message: &MerlinMessage, j: usize) -> Result<HermitianOperator> {
    let reg = message.y.get(j).ok_or(Error::SubsystemIndex { index: j, parties: message.provers() })?;
    match reg {
        YRegister::Iid(rho) => Ok(rho.clone()),
        YRegister::Explicit(copies) => {
            let mut sum = HermitianOperator::zeros(copies[0].shape().clone());
            for s in copies {
                sum = sum.add(s)?;
            }
            Ok(sum.scale(1.0 / copies.len() as f64))
        }
    }
}

/// Claimed `X_j(i)` against the true `q_j(i) = <Π_j(i), ξ_j>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutcomeDeviation {
    pub j: usize,
    pub i: usize,
    pub claimed: f64,
    pub actual: f64,
}

impl OutcomeDeviation {
    pub fn deviation(&self) -> f64 {
        (self.claimed - self.actual).abs()
    }
}

/// Every `(j, i)` deviation of the message, prover-major.
pub fn outcome_deviations(protocol: &BellProtocol, message: &MerlinMessage) -> Result<Vec<OutcomeDeviation>> {
    if message.provers() != protocol.provers() {
        return Err(Error::PartyMismatch { left: protocol.provers(), right: message.provers() });
    }
    let mut out = Vec::new();
    for j in 0..protocol.provers() {
        let xi = effective_single_copy_state(message, j)?;
        let q = stage1_distribution(protocol, j, &xi)?;
        let claimed = &message.x[j];
        if claimed.len() != q.len() {
            return Err(Error::DimensionMismatch { expected: q.len(), found: claimed.len() });
        }
        for (i, &actual) in q.iter().enumerate() {
            out.push(OutcomeDeviation { j, i, claimed: claimed.probability(i), actual });
        }
    }
    Ok(out)
}
