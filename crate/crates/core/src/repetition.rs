//! Two-fold parallel repetition of protocols with separable accept operators.
//!
//! For accept operators `C1 ∈ Sep(X_1,…,X_m)` and `C2 ∈ Sep(Y_1,…,Y_m)`
//! the repeated protocol optimizes `<ρ, C1 ⊗ C2>` over
//! `Sep(X_1⊗Y_1, …, X_m⊗Y_m)`. Its value is at least `opt(C1)·opt(C2)`
//! (tensor the optimal product states), and the operator
//! `W = t1·t2·1 - C1⊗C2`, the average of `(t1·1 - C1) ⊗ (t2·1 + C2)` and
//! `(t1·1 + C1) ⊗ (t2·1 - C2)`, is a dual-feasible witness for the upper
//! bound `t1·t2`.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::matrix::kron_vec;
use crate::operator::{permute_subsystems, tensor, HermitianOperator};
use crate::product::{seesaw_max_with, OptimizationResult, ProductState, SeesawConfig, DEFAULT_RESTARTS};
use crate::random::{fork_seed, par_map, stream};
use crate::separable::{
    densify, witness_min_product_with, DualWitnessCandidate, SeparableOperator, WitnessEvidence, WitnessSearch,
    WITNESS_EVIDENCE_TOL, WITNESS_VIOLATION_TOL,
};
use crate::shape::MultipartiteShape;

/// Reordering `X_1…X_m Y_1…Y_m -> X_1 Y_1 … X_m Y_m`: position `k` of the
/// paired layout holds original subsystem `order[k]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsystemPairing {
    pub order: Vec<usize>,
}

impl SubsystemPairing {
    pub fn interleave(parties: usize) -> Self {
        let order = (0..parties).flat_map(|j| [j, parties + j]).collect();
        Self { order }
    }

    /// The permutation undoing this one.
    pub fn inverse(&self) -> Vec<usize> {
        let mut inv = alloc::vec![0; self.order.len()];
        for (k, &o) in self.order.iter().enumerate() {
            inv[o] = k;
        }
        inv
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RepetitionInstance {
    pub c1: SeparableOperator,
    pub c2: SeparableOperator,
    /// `C1 ⊗ C2` on shape `[d(X_1)·d(Y_1), …, d(X_m)·d(Y_m)]`.
    pub paired_operator: HermitianOperator,
    pub pairing: SubsystemPairing,
}

impl RepetitionInstance {
    pub fn parties(&self) -> usize {
        self.c1.parties()
    }

    pub fn paired_shape(&self) -> &MultipartiteShape {
        self.paired_operator.shape()
    }

    /// `C1 ⊗ C2` as a separable operator on the paired parties: term
    /// `(i, i')` has factor `P1_j(i) ⊗ P2_j(i')` on party `j`.
    pub fn paired_separable(&self) -> Result<SeparableOperator> {
        pair_separable(&self.c1, &self.c2)
    }

    /// Undoes the pairing, recovering `C1 ⊗ C2` in `X…Y` order.
    pub fn unpaired_operator(&self) -> Result<HermitianOperator> {
        let split_dims: Vec<usize> = self.pairing.order.iter().map(|&o| self.split_dim(o)).collect();
        let split = self.paired_operator.reshaped(MultipartiteShape::new(split_dims)?)?;
        permute_subsystems(&split, &self.pairing.inverse())
    }

    fn split_dim(&self, original: usize) -> usize {
        let m = self.parties();
        if original < m {
            self.c1.shape().dims()[original]
        } else {
            self.c2.shape().dims()[original - m]
        }
    }
}

fn check_parties(c1: &SeparableOperator, c2: &SeparableOperator) -> Result<()> {
    if c1.parties() != c2.parties() {
        return Err(Error::PartyMismatch { left: c1.parties(), right: c2.parties() });
    }
    Ok(())
}

fn paired_shape(c1: &SeparableOperator, c2: &SeparableOperator) -> Result<MultipartiteShape> {
    MultipartiteShape::new(c1.shape().dims().iter().zip(c2.shape().dims()).map(|(a, b)| a * b).collect::<Vec<_>>())
}

fn pair_separable(c1: &SeparableOperator, c2: &SeparableOperator) -> Result<SeparableOperator> {
    check_parties(c1, c2)?;
    let shape = paired_shape(c1, c2)?;
    let mut terms = Vec::with_capacity(c1.terms().len() * c2.terms().len());
    for t1 in c1.terms() {
        for t2 in c2.terms() {
            let factors = t1.iter().zip(t2).map(|(a, b)| tensor(a, b)).collect::<Result<Vec<_>>>()?;
            terms.push(factors);
        }
    }
    SeparableOperator::new(shape, terms)
}

/// `A ⊗ B` regrouped so that party `j` of the result is `X_j ⊗ Y_j`. Works
/// for any accept operators, separable or not.
pub fn pair_operators(a: &HermitianOperator, b: &HermitianOperator) -> Result<HermitianOperator> {
    let (sa, sb) = (a.shape(), b.shape());
    if sa.parties() != sb.parties() {
        return Err(Error::PartyMismatch { left: sa.parties(), right: sb.parties() });
    }
    let shape = MultipartiteShape::new(sa.dims().iter().zip(sb.dims()).map(|(x, y)| x * y).collect::<Vec<_>>())?;
    shape.check_cap(crate::shape::DEFAULT_MAX_DIM)?;
    let joint = tensor(a, b)?;
    permute_subsystems(&joint, &SubsystemPairing::interleave(sa.parties()).order)?.reshaped(shape)
}

/// Builds the two-fold instance with the `(X_j ⊗ Y_j)` pairing.
pub fn pair_instance(c1: &SeparableOperator, c2: &SeparableOperator) -> Result<RepetitionInstance> {
    check_parties(c1, c2)?;
    let paired = pair_operators(&densify(c1)?, &densify(c2)?)?;
    let pairing = SubsystemPairing::interleave(c1.parties());
    Ok(RepetitionInstance { c1: c1.clone(), c2: c2.clone(), paired_operator: paired, pairing })
}

/// Dual point `(t, W)` with `t·1 = C + W`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution {
    pub t: f64,
    pub witness: DualWitnessCandidate,
}

/// `W = t·1 - densify(c)`. Feasibility is checked downstream by witness evidence.
pub fn dual_from_primal(c: &SeparableOperator, t: f64) -> Result<DualSolution> {
    let w = densify(c)?.shifted_complement(t);
    Ok(DualSolution { t, witness: DualWitnessCandidate::new(w, format!("t·1 - C with t = {t}")) })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RepetitionWitness {
    /// `(t1·t2, t1·t2·1 - C1⊗C2)` on the paired shape.
    pub solution: DualSolution,
    /// `(t1·1 - C1) ⊗ (t2·1 + C2)`, paired.
    pub minus_plus: DualWitnessCandidate,
    /// `(t1·1 + C1) ⊗ (t2·1 - C2)`, paired.
    pub plus_minus: DualWitnessCandidate,
}

pub fn repetition_witness(c1: &SeparableOperator, t1: f64, c2: &SeparableOperator, t2: f64) -> Result<RepetitionWitness> {
    let inst = pair_instance(c1, c2)?;
    repetition_witness_for(&inst, t1, t2)
}

pub fn repetition_witness_for(inst: &RepetitionInstance, t1: f64, t2: f64) -> Result<RepetitionWitness> {
    let d1 = densify(&inst.c1)?;
    let d2 = densify(&inst.c2)?;
    let shape = inst.paired_shape().clone();
    let pair = |a: &HermitianOperator, b: &HermitianOperator| -> Result<HermitianOperator> {
        permute_subsystems(&tensor(a, b)?, &inst.pairing.order)?.reshaped(shape.clone())
    };
    let minus_plus = pair(&d1.shifted_complement(t1), &d2.add_identity(t2))?;
    let plus_minus = pair(&d1.add_identity(t1), &d2.shifted_complement(t2))?;
    let t = t1 * t2;
    let w = inst.paired_operator.shifted_complement(t);
    Ok(RepetitionWitness {
        solution: DualSolution { t, witness: DualWitnessCandidate::new(w, format!("t1·t2·1 - C1⊗C2 with t1 = {t1}, t2 = {t2}")) },
        minus_plus: DualWitnessCandidate::new(minus_plus, "(t1·1 - C1) ⊗ (t2·1 + C2)"),
        plus_minus: DualWitnessCandidate::new(plus_minus, "(t1·1 + C1) ⊗ (t2·1 - C2)"),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Perfect,
    Violated,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Perfect => "perfect",
            Verdict::Violated => "violated",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RepetitionConfig {
    pub restarts: usize,
    pub witness: WitnessSearch,
    /// Also gather evidence for the two summands of the witness.
    pub check_summands: bool,
    pub seesaw: SeesawConfig,
}

impl Default for RepetitionConfig {
    fn default() -> Self {
        Self { restarts: DEFAULT_RESTARTS, witness: WitnessSearch::default(), check_summands: false, seesaw: SeesawConfig::default() }
    }
}

pub const DEFAULT_REPETITION_TOL: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct RepetitionReport {
    pub v1: f64,
    pub v2: f64,
    pub v: f64,
    pub t1t2: f64,
    pub witness: WitnessEvidence,
    pub summands: Option<(WitnessEvidence, WitnessEvidence)>,
    pub tol: f64,
    pub verdict: Verdict,
    pub opt1: OptimizationResult,
    pub opt2: OptimizationResult,
    pub opt: OptimizationResult,
}

impl RepetitionReport {
    pub fn product_lower_bound_holds(&self) -> bool {
        self.v >= self.v1 * self.v2 - 1e-9
    }

    pub fn weak_duality_holds(&self) -> bool {
        self.v <= self.t1t2 + 1e-9
    }

    /// The product state violating the witness, when there is one.
    pub fn violator(&self) -> Option<&ProductState> {
        self.witness.is_violation().then_some(&self.witness.argmin)
    }
}

/// Interleaves optimal product states of the two factors into a product
/// state of the paired instance: local `j` is `φ_j ⊗ χ_j`.
pub fn paired_product_state(a: &ProductState, b: &ProductState) -> Result<ProductState> {
    if a.locals().len() != b.locals().len() {
        return Err(Error::PartyMismatch { left: a.locals().len(), right: b.locals().len() });
    }
    let dims: Vec<usize> = a.shape().dims().iter().zip(b.shape().dims()).map(|(x, y)| x * y).collect();
    let locals = a.locals().iter().zip(b.locals()).map(|(x, y)| kron_vec(x, y)).collect();
    ProductState::new(MultipartiteShape::new(dims)?, locals)
}

/// Numerical perfect-parallel-repetition check: computes `v1`, `v2`, the
/// paired value `v`, and witness evidence for `t1·t2 = v1·v2`.
pub fn verify_perfect_repetition<R: Rng + ?Sized>(
    c1: &SeparableOperator,
    c2: &SeparableOperator,
    tol: f64,
    config: &RepetitionConfig,
    rng: &mut R,
) -> Result<RepetitionReport> {
    let inst = pair_instance(c1, c2)?;
    let seed = fork_seed(rng);
    let dense = [densify(c1)?, densify(c2)?];
    let singles = par_map(2, |i| seesaw_max_with(&dense[i], config.restarts, &mut stream(seed, i as u64), &config.seesaw, Vec::new()));
    let mut singles = singles.into_iter();
    let opt1 = singles.next().expect("two runs")?;
    let opt2 = singles.next().expect("two runs")?;

    let honest = paired_product_state(&opt1.state, &opt2.state)?;
    let opt = seesaw_max_with(&inst.paired_operator, config.restarts, &mut stream(seed, 2), &config.seesaw, alloc::vec![honest])?;

    let (t1, t2) = (opt1.value, opt2.value);
    let wit = repetition_witness_for(&inst, t1, t2)?;
    let witness = witness_min_product_with(&wit.solution.witness, &config.witness, &mut stream(seed, 3))?;
    let summands = if config.check_summands {
        Some((
            witness_min_product_with(&wit.minus_plus, &config.witness, &mut stream(seed, 4))?,
            witness_min_product_with(&wit.plus_minus, &config.witness, &mut stream(seed, 5))?,
        ))
    } else {
        None
    };

    let (v1, v2, v) = (opt1.value, opt2.value, opt.value);
    let t1t2 = t1 * t2;
    let verdict = if witness.min < -WITNESS_VIOLATION_TOL || v > t1t2 + tol {
        Verdict::Violated
    } else if (v - v1 * v2).abs() <= tol && witness.min >= -WITNESS_EVIDENCE_TOL {
        Verdict::Perfect
    } else {
        Verdict::Inconclusive
    };
    Ok(RepetitionReport { v1, v2, v, t1t2, witness, summands, tol, verdict, opt1, opt2, opt })
}

/// Product-state value of `c` and of its `k`-fold repetition (paired
/// party-wise). `c` need not be separable.
pub fn k_fold_values<R: Rng + ?Sized>(c: &HermitianOperator, k: usize, restarts: usize, rng: &mut R) -> Result<(f64, f64)> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1"));
    }
    let seed = fork_seed(rng);
    let single = seesaw_max_with(c, restarts, &mut stream(seed, 0), &SeesawConfig::default(), Vec::new())?;
    let mut acc = c.clone();
    let mut start = single.state.clone();
    for _ in 1..k {
        acc = pair_operators(&acc, c)?;
        start = paired_product_state(&start, &single.state)?;
    }
    let value = seesaw_max_with(&acc, restarts, &mut stream(seed, 1), &SeesawConfig::default(), alloc::vec![start])?.value;
    Ok((single.value, value))
}
