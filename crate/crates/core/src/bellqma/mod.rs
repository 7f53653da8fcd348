//! Executable model of the single-prover protocol simulating a
//! Bell-measurement verifier with `m` unentangled provers and `r` outcomes
//! per prover.
//!
//! Merlin sends a classical register `X` (claimed Stage-1 outcome
//! distributions, `α`-bit fixed point) and a quantum register `Y` (`k`
//! copies per prover). Arthur:
//!
//! 1. reads `X` in the computational basis (it is classical here already),
//! 2. rejects unless every `X_j` sums to exactly one,
//! 3. picks `(j, i)` uniformly, measures the `k` copies of prover `j` with
//!    the Stage-1 POVM and rejects if `|n_j(i)/k - X_j(i)| ≥ 1/p`,
//! 4. runs Stage 2 on outcomes sampled from `X`, `q` times, and accepts on a
//!    strict majority.
//!
//! Stage 2 is a classical acceptance table over outcome tuples. The `Y`
//! register is modelled per copy (see [`YRegister`]), never as a joint state.

mod estimate;
pub mod fixed;
mod message;
pub mod params;
mod verify;

use alloc::vec::Vec;

pub use estimate::{estimate_acceptance, wilson_interval, AcceptanceEstimate, MessageSource, Z95};
pub use fixed::{uniform_bits, FixedDistribution};
pub use message::{
    effective_single_copy_state, honest_message, outcome_deviations, preset_message, MerlinMessage, MerlinStrategy,
    OutcomeDeviation, YRegister,
};
pub use params::{completeness_bound, derive_params, soundness_bound, ProtocolParams};
pub use verify::{arthur_verify, measure_copies, RejectionStage, VerificationOutcome};

use crate::error::{Error, Result};
use crate::operator::{hs_inner, HermitianOperator};
use crate::separable::is_povm;

/// Largest Stage-2 table (`r^m` entries) accepted.
pub const STAGE2_TABLE_CAP: u128 = 1_000_000;
/// Density-operator tolerance for proofs and per-copy states.
pub const STATE_TOL: f64 = 1e-10;

/// Acceptance probability for every Stage-1 outcome tuple `(y_1,…,y_m)`,
/// stored densely with prover 0 as the most significant digit.
#[derive(Debug, Clone, PartialEq)]
pub struct Stage2Acceptor {
    m: usize,
    r: usize,
    table: Vec<f64>,
}

impl Stage2Acceptor {
    pub fn new(m: usize, r: usize, table: Vec<f64>) -> Result<Self> {
        let entries = table_size(m, r)?;
        if table.len() as u128 != entries {
            return Err(Error::DimensionMismatch { expected: entries as usize, found: table.len() });
        }
        if table.iter().any(|&a| !(0.0..=1.0).contains(&a)) {
            return Err(Error::InvalidArgument("acceptance probabilities must lie in [0, 1]"));
        }
        Ok(Self { m, r, table })
    }

    /// Same probability for every tuple.
    pub fn constant(m: usize, r: usize, value: f64) -> Result<Self> {
        let entries = table_size(m, r)? as usize;
        Self::new(m, r, alloc::vec![value; entries])
    }

    pub fn from_fn(m: usize, r: usize, mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let entries = table_size(m, r)? as usize;
        let mut tuple = alloc::vec![0usize; m];
        let mut table = Vec::with_capacity(entries);
        for idx in 0..entries {
            let mut rest = idx;
            for slot in tuple.iter_mut().rev() {
                *slot = rest % r;
                rest /= r;
            }
            table.push(f(&tuple));
        }
        Self::new(m, r, table)
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub fn index(&self, outcomes: &[usize]) -> usize {
        outcomes.iter().fold(0, |acc, &y| acc * self.r + y)
    }

    pub fn accept_probability(&self, outcomes: &[usize]) -> f64 {
        self.table[self.index(outcomes)]
    }

    /// Acceptance probability when prover `j`'s outcome is drawn from
    /// `dists[j]` independently: `Σ_y Π_j dists[j][y_j] · a(y)`.
    pub fn expected_acceptance(&self, dists: &[Vec<f64>]) -> f64 {
        let mut total = 0.0;
        let mut tuple = alloc::vec![0usize; self.m];
        for (idx, &a) in self.table.iter().enumerate() {
            let mut rest = idx;
            for slot in tuple.iter_mut().rev() {
                *slot = rest % self.r;
                rest /= self.r;
            }
            let w: f64 = tuple.iter().enumerate().map(|(j, &y)| dists[j][y]).product();
            total += w * a;
        }
        total
    }
}

fn table_size(m: usize, r: usize) -> Result<u128> {
    if m == 0 || r == 0 {
        return Err(Error::InvalidArgument("m and r must be at least 1"));
    }
    let mut entries: u128 = 1;
    for _ in 0..m {
        entries = entries.saturating_mul(r as u128);
        if entries > STAGE2_TABLE_CAP {
            return Err(Error::TableCapacity { entries, cap: STAGE2_TABLE_CAP });
        }
    }
    Ok(entries)
}

/// Stage-1 POVMs `Π_j(i)` for each prover plus the Stage-2 acceptor.
#[derive(Debug, Clone, PartialEq)]
pub struct BellProtocol {
    pub n: u64,
    m: usize,
    r: usize,
    povms: Vec<Vec<HermitianOperator>>,
    stage2: Stage2Acceptor,
}

impl BellProtocol {
    pub fn new(n: u64, povms: Vec<Vec<HermitianOperator>>, stage2: Stage2Acceptor) -> Result<Self> {
        let m = povms.len();
        if m == 0 {
            return Err(Error::InvalidArgument("at least one prover is required"));
        }
        let r = povms[0].len();
        if r == 0 {
            return Err(Error::InvalidArgument("at least one outcome is required"));
        }
        for povm in &povms {
            if povm.len() != r {
                return Err(Error::DimensionMismatch { expected: r, found: povm.len() });
            }
            if !is_povm(povm)? {
                return Err(Error::InvalidArgument("Stage-1 measurement is not a POVM"));
            }
        }
        if stage2.m != m || stage2.r != r {
            return Err(Error::DimensionMismatch { expected: table_size(m, r)? as usize, found: stage2.table.len() });
        }
        Ok(Self { n, m, r, povms, stage2 })
    }

    pub fn provers(&self) -> usize {
        self.m
    }

    pub fn outcomes(&self) -> usize {
        self.r
    }

    pub fn povm(&self, j: usize) -> &[HermitianOperator] {
        &self.povms[j]
    }

    pub fn povms(&self) -> &[Vec<HermitianOperator>] {
        &self.povms
    }

    pub fn local_dim(&self, j: usize) -> usize {
        self.povms[j][0].dim()
    }

    pub fn stage2(&self) -> &Stage2Acceptor {
        &self.stage2
    }

    /// Default parameters derived from `(n, m, r)`.
    pub fn default_params(&self) -> Result<ProtocolParams> {
        derive_params(self.n, self.m as u64, self.r as u64)
    }
}

/// `p_j(i) = <Π_j(i), ρ>`.
pub fn stage1_distribution(protocol: &BellProtocol, j: usize, rho: &HermitianOperator) -> Result<Vec<f64>> {
    if j >= protocol.m {
        return Err(Error::SubsystemIndex { index: j, parties: protocol.m });
    }
    let d = protocol.local_dim(j);
    if rho.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, found: rho.dim() });
    }
    protocol.povms[j].iter().map(|pi| hs_inner(pi, rho)).collect()
}

/// Computational-basis POVM `{|i><i|}` on `C^d`.
pub fn computational_povm(d: usize) -> Vec<HermitianOperator> {
    let shape = crate::shape::MultipartiteShape::single(d).expect("d ≥ 1");
    (0..d)
        .map(|i| crate::operator::PureState::basis(shape.clone(), i).expect("index < d").density())
        .collect()
}
