//! The cone of fully separable operators and evidence about its dual.
//!
//! Membership in `Sep` is shown constructively by an explicit decomposition
//! ([`SeparableOperator`]); non-membership by a failed PPT test
//! ([`ppt_check`]). Membership of a candidate in the dual cone `Sep*` is only
//! ever evidenced, by minimizing `<W, |φ><φ|>` over product states
//! ([`witness_min_product`]); it is never proven.

use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::operator::{partial_transpose, tensor_capped, HermitianOperator};
use crate::product::{seesaw_multistart, ProductState, SeesawConfig, Sense};
use crate::random::{fork_seed, par_map, stream};
use crate::shape::{MultipartiteShape, DEFAULT_MAX_DIM};

/// Local factors may dip this far below zero.
pub const FACTOR_PSD_TOL: f64 = 1e-10;
pub const POVM_TOL: f64 = 1e-9;
pub const PPT_TOL: f64 = 1e-9;
/// Witness minima below this are evidence of dual-cone membership failing.
pub const WITNESS_EVIDENCE_TOL: f64 = 1e-9;
/// Witness minima below this are reported as hard counterexamples.
pub const WITNESS_VIOLATION_TOL: f64 = 1e-6;
pub const DEFAULT_WITNESS_SAMPLES: usize = 20_000;
pub const DEFAULT_WITNESS_REFINE: usize = 10;

/// `Σ_i P_1(i) ⊗ … ⊗ P_m(i)` with every `P_j(i)` positive semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparableOperator {
    shape: MultipartiteShape,
    terms: Vec<Vec<HermitianOperator>>,
}

impl SeparableOperator {
    /// Factors are stored with single-subsystem shapes whatever shape they
    /// arrive with.
    pub fn new(shape: MultipartiteShape, mut terms: Vec<Vec<HermitianOperator>>) -> Result<Self> {
        for term in &mut terms {
            if term.len() != shape.parties() {
                return Err(Error::PartyMismatch { left: shape.parties(), right: term.len() });
            }
            for (factor, &d) in term.iter_mut().zip(shape.dims()) {
                if factor.dim() != d {
                    return Err(Error::DimensionMismatch { expected: d, found: factor.dim() });
                }
                let min = factor.min_eigenvalue()?;
                if min < -FACTOR_PSD_TOL {
                    return Err(Error::NotPsd { min_eigenvalue: min });
                }
                if factor.shape().parties() != 1 {
                    *factor = factor.reshaped(MultipartiteShape::single(d)?)?;
                }
            }
        }
        Ok(Self { shape, terms })
    }

    /// A single product term.
    pub fn product(factors: Vec<HermitianOperator>) -> Result<Self> {
        let dims: Vec<usize> = factors.iter().map(HermitianOperator::dim).collect();
        Self::new(MultipartiteShape::new(dims)?, alloc::vec![factors])
    }

    /// `1 ⊗ … ⊗ 1`.
    pub fn identity(shape: MultipartiteShape) -> Self {
        let term = shape
            .dims()
            .iter()
            .map(|&d| HermitianOperator::identity(MultipartiteShape::single(d).expect("d ≥ 1")))
            .collect();
        Self { shape, terms: alloc::vec![term] }
    }

    /// The zero operator (no terms).
    pub fn zero(shape: MultipartiteShape) -> Self {
        Self { shape, terms: Vec::new() }
    }

    /// A PSD operator viewed as a one-party separable operator.
    pub fn single_party(op: HermitianOperator) -> Result<Self> {
        let shape = MultipartiteShape::single(op.dim())?;
        let op = op.reshaped(shape.clone())?;
        Self::new(shape, alloc::vec![alloc::vec![op]])
    }

    pub fn shape(&self) -> &MultipartiteShape {
        &self.shape
    }

    pub fn parties(&self) -> usize {
        self.shape.parties()
    }

    pub fn terms(&self) -> &[Vec<HermitianOperator>] {
        &self.terms
    }

    pub fn scale(&self, s: f64) -> Result<Self> {
        if !(s >= 0.0) {
            return Err(Error::InvalidArgument("separable operators scale by nonnegative reals"));
        }
        let terms = self
            .terms
            .iter()
            .map(|t| {
                let mut t = t.clone();
                t[0] = t[0].scale(s);
                t
            })
            .collect();
        Ok(Self { shape: self.shape.clone(), terms })
    }

    pub fn densify(&self) -> Result<HermitianOperator> {
        densify_capped(self, DEFAULT_MAX_DIM)
    }
}

/// `Σ_i ⊗_j P_j(i)` as a dense operator.
pub fn densify(s: &SeparableOperator) -> Result<HermitianOperator> {
    densify_capped(s, DEFAULT_MAX_DIM)
}

pub fn densify_capped(s: &SeparableOperator, cap: usize) -> Result<HermitianOperator> {
    s.shape.check_cap(cap)?;
    let mut acc = HermitianOperator::zeros(s.shape.clone());
    for term in &s.terms {
        let mut prod = term[0].clone();
        for f in &term[1..] {
            prod = tensor_capped(&prod, f, cap)?;
        }
        acc = acc.add(&prod)?;
    }
    acc.reshaped(s.shape.clone())
}

/// True iff every element is PSD and the elements sum to the identity.
pub fn is_povm(ops: &[HermitianOperator]) -> Result<bool> {
    let Some(first) = ops.first() else {
        return Ok(false);
    };
    let mut sum = HermitianOperator::zeros(first.shape().clone());
    for op in ops {
        if op.dim() != first.dim() {
            return Err(Error::DimensionMismatch { expected: first.dim(), found: op.dim() });
        }
        if op.min_eigenvalue()? < -POVM_TOL {
            return Ok(false);
        }
        sum = sum.add(op)?;
    }
    let id = crate::matrix::CMatrix::identity(first.dim());
    Ok(sum.matrix().max_abs_diff(&id) <= POVM_TOL)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PptReport {
    /// Smallest eigenvalue of the partial transpose on each subsystem.
    pub min_eigenvalue_per_cut: Vec<f64>,
    pub is_ppt: bool,
}

/// Partial-transpose test on every single-subsystem cut. A negative result
/// certifies that the operator is not separable.
pub fn ppt_check(a: &HermitianOperator) -> Result<PptReport> {
    let parties = a.shape().parties();
    let min_eigenvalue_per_cut =
        (0..parties).map(|j| partial_transpose(a, j)?.min_eigenvalue()).collect::<Result<Vec<_>>>()?;
    let is_ppt = min_eigenvalue_per_cut.iter().all(|&x| x >= -PPT_TOL);
    Ok(PptReport { min_eigenvalue_per_cut, is_ppt })
}

/// A candidate element of `Sep*`, with a note on how it was built.
#[derive(Debug, Clone, PartialEq)]
pub struct DualWitnessCandidate {
    pub operator: HermitianOperator,
    pub provenance: String,
}

impl DualWitnessCandidate {
    pub fn new(operator: HermitianOperator, provenance: impl Into<String>) -> Self {
        Self { operator, provenance: provenance.into() }
    }

    pub fn shape(&self) -> &MultipartiteShape {
        self.operator.shape()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WitnessSearch {
    pub samples: usize,
    /// Lowest samples refined by seesaw descent.
    pub refine: usize,
    pub seesaw: SeesawConfig,
}

impl Default for WitnessSearch {
    fn default() -> Self {
        Self { samples: DEFAULT_WITNESS_SAMPLES, refine: DEFAULT_WITNESS_REFINE, seesaw: SeesawConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WitnessEvidence {
    /// Smallest `<W, |φ><φ|>` found after refinement.
    pub min: f64,
    /// Smallest value among the raw samples.
    pub sampled_min: f64,
    /// Product state attaining `min`.
    pub argmin: ProductState,
}

impl WitnessEvidence {
    pub fn passes(&self) -> bool {
        self.min >= -WITNESS_EVIDENCE_TOL
    }

    pub fn is_violation(&self) -> bool {
        self.min < -WITNESS_VIOLATION_TOL
    }
}

/// Minimum of `<W, |φ><φ|>` over sampled pure product states, refined by
/// seesaw descent from the best samples. A value `≥ -1e-9` is evidence that
/// `W ∈ Sep*`.
pub fn witness_min_product<R: Rng + ?Sized>(w: &DualWitnessCandidate, samples: usize, rng: &mut R) -> Result<WitnessEvidence> {
    let search = WitnessSearch { samples, ..WitnessSearch::default() };
    witness_min_product_with(w, &search, rng)
}

pub fn witness_min_product_with<R: Rng + ?Sized>(
    w: &DualWitnessCandidate,
    search: &WitnessSearch,
    rng: &mut R,
) -> Result<WitnessEvidence> {
    if search.samples == 0 {
        return Err(Error::InvalidArgument("at least one sample is required"));
    }
    let seed = fork_seed(rng);
    let op = &w.operator;
    let shape = op.shape().clone();
    let keep = search.refine.max(1);

    const CHUNKS: usize = 16;
    let per_chunk = search.samples.div_ceil(CHUNKS);
    let chunk_lows = par_map(CHUNKS, |chunk| {
        let mut rng = stream(seed, chunk as u64);
        let count = per_chunk.min(search.samples.saturating_sub(chunk * per_chunk));
        let mut low: Vec<(f64, ProductState)> = Vec::new();
        for _ in 0..count {
            let st = ProductState::random(shape.clone(), &mut rng);
            let v = st.expectation(op);
            if low.len() < keep || v < low[low.len() - 1].0 {
                let pos = low.iter().position(|(x, _)| v < *x).unwrap_or(low.len());
                low.insert(pos, (v, st));
                low.truncate(keep);
            }
        }
        low
    });
    let mut pool: Vec<(f64, ProductState)> = chunk_lows.into_iter().flatten().collect();
    pool.sort_by(|a, b| a.0.total_cmp(&b.0));
    pool.truncate(keep);
    let sampled_min = pool.first().map(|p| p.0).unwrap_or(f64::INFINITY);

    let starts = pool.into_iter().map(|(_, st)| st).collect();
    let refined = seesaw_multistart(op, starts, Sense::Minimize, &search.seesaw)?;
    let (min, argmin) = if refined.value <= sampled_min {
        (refined.value, refined.state)
    } else {
        // Unreachable in exact arithmetic: descent never increases the objective.
        (sampled_min, refined.state)
    };
    Ok(WitnessEvidence { min, sampled_min, argmin })
}
