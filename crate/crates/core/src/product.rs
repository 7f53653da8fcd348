//! Optimization of `<φ|C|φ>` over pure product states `|φ> = |φ_1> ⊗ … ⊗ |φ_m>`.
//!
//! The maximum over separable density operators is attained at a pure
//! product state, so this is the primal value of the acceptance program.
//! [`seesaw_max`] does coordinate ascent where every coordinate step is an
//! exact extreme-eigenvector problem of the [`effective_operator`];
//! [`brute_force_max`] is an independent sampling oracle for small instances.

use alloc::vec::Vec;

use rand::Rng;

use crate::eigen::EigenDecomposition;
use crate::error::{Error, Result};
use crate::matrix::{inner, kron_vec, vec_norm, CMatrix, C64};
use crate::operator::{eigh, HermitianOperator, PureState};
use crate::random::{fork_seed, haar_vector, par_map, stream};
use crate::shape::MultipartiteShape;

/// Tolerance for local vectors being unit norm.
pub const LOCAL_NORM_TOL: f64 = 1e-12;
/// Most negative eigenvalue accepted for an acceptance operator.
pub const PSD_PRECONDITION_TOL: f64 = 1e-6;
/// Up to this joint dimension [`seesaw_max`] also starts from every
/// computational-basis product state. Objectives that are flat to high order
/// around a basis-state optimum are otherwise approached only sublinearly.
pub const BASIS_STARTS_MAX_DIM: usize = 64;
pub const DEFAULT_RESTARTS: usize = 32;

#[derive(Debug, Clone, PartialEq)]
pub struct ProductState {
    shape: MultipartiteShape,
    locals: Vec<Vec<C64>>,
}

impl ProductState {
    pub fn new(shape: MultipartiteShape, locals: Vec<Vec<C64>>) -> Result<Self> {
        if locals.len() != shape.parties() {
            return Err(Error::PartyMismatch { left: shape.parties(), right: locals.len() });
        }
        for (v, &d) in locals.iter().zip(shape.dims()) {
            if v.len() != d {
                return Err(Error::DimensionMismatch { expected: d, found: v.len() });
            }
            let norm = vec_norm(v);
            if !((norm - 1.0).abs() <= LOCAL_NORM_TOL) {
                return Err(Error::NotNormalized { norm });
            }
        }
        Ok(Self { shape, locals })
    }

    /// Each local vector Haar-distributed.
    pub fn random<R: Rng + ?Sized>(shape: MultipartiteShape, rng: &mut R) -> Self {
        let locals = shape.dims().iter().map(|&d| haar_vector(d, rng)).collect();
        Self { shape, locals }
    }

    /// `|0…0>`.
    pub fn first_basis(shape: MultipartiteShape) -> Self {
        let locals = shape
            .dims()
            .iter()
            .map(|&d| {
                let mut v = alloc::vec![C64::new(0.0, 0.0); d];
                v[0] = C64::new(1.0, 0.0);
                v
            })
            .collect();
        Self { shape, locals }
    }

    pub fn shape(&self) -> &MultipartiteShape {
        &self.shape
    }

    pub fn locals(&self) -> &[Vec<C64>] {
        &self.locals
    }

    pub fn local(&self, j: usize) -> &[C64] {
        &self.locals[j]
    }

    /// Joint amplitude vector `⊗_j |φ_j>`.
    pub fn joint(&self) -> Vec<C64> {
        let mut out = alloc::vec![C64::new(1.0, 0.0)];
        for v in &self.locals {
            out = kron_vec(&out, v);
        }
        out
    }

    pub fn to_pure_state(&self) -> PureState {
        PureState::normalized(self.shape.clone(), self.joint()).expect("product of unit vectors")
    }

    /// `<φ|C|φ>`, computed on the joint vector.
    pub fn expectation(&self, c: &HermitianOperator) -> f64 {
        c.expectation(&self.joint())
    }

    /// Concatenation `self ⊗ other` as a product state on the concatenated shape.
    pub fn concat(&self, other: &Self) -> Result<Self> {
        let shape = self.shape.concat(&other.shape)?;
        let mut locals = self.locals.clone();
        locals.extend(other.locals.iter().cloned());
        Ok(Self { shape, locals })
    }

    fn set_local(&mut self, j: usize, v: Vec<C64>) {
        self.locals[j] = v;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult {
    pub value: f64,
    pub state: ProductState,
    /// Sweeps performed by the winning start.
    pub iterations: usize,
    pub converged: bool,
    /// Objective after each sweep of the winning start, starting with the
    /// value at the initial state.
    pub trace: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeesawConfig {
    pub max_sweeps: usize,
    /// Stop once a full sweep improves the objective by less than this.
    pub tolerance: f64,
}

impl Default for SeesawConfig {
    fn default() -> Self {
        Self { max_sweeps: 500, tolerance: 1e-10 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Maximize,
    Minimize,
}

/// Contracts `c` against every local vector of `state` except subsystem `j`.
/// The result `E` satisfies `<ψ|E|ψ> = <φ_1…ψ…φ_m| c |φ_1…ψ…φ_m>` for every `|ψ>`.
pub fn effective_operator(c: &HermitianOperator, state: &ProductState, j: usize) -> Result<HermitianOperator> {
    let shape = c.shape();
    if shape.dims() != state.shape.dims() {
        return Err(Error::DimensionMismatch { expected: shape.total(), found: state.shape.total() });
    }
    shape.check_index(j)?;
    let n = shape.total();
    let dj = shape.dims()[j];
    let stride_j = shape.strides()[j];

    // coef[r] = Π_{l≠j} φ_l[r_l]; slot[r] = r_j
    let mut coef = alloc::vec![C64::new(1.0, 0.0); n];
    let mut slot = alloc::vec![0usize; n];
    for (r, (cf, sl)) in coef.iter_mut().zip(slot.iter_mut()).enumerate() {
        let digits = shape.digits(r);
        for (l, &x) in digits.iter().enumerate() {
            if l != j {
                *cf *= state.locals[l][x];
            }
        }
        *sl = (r / stride_j) % dj;
    }

    let m = c.matrix();
    let mut eff = CMatrix::zeros(dj, dj);
    for r in 0..n {
        let wr = coef[r].conj();
        if wr == C64::new(0.0, 0.0) {
            continue;
        }
        let row = m.row(r);
        let a = slot[r];
        for (col, &entry) in row.iter().enumerate() {
            eff[(a, slot[col])] += wr * entry * coef[col];
        }
    }
    let local = MultipartiteShape::single(dj)?;
    Ok(HermitianOperator::from_hermitian_parts(local, eff))
}

/// Picks the extreme eigenvector; inside a degenerate extreme eigenspace the
/// vector of maximal overlap with `current` is chosen.
fn extreme_vector(e: &EigenDecomposition, sense: Sense, current: &[C64]) -> (f64, Vec<C64>) {
    let n = e.len();
    let (lead, order): (f64, Vec<usize>) = match sense {
        Sense::Maximize => (e.max(), (0..n).collect()),
        Sense::Minimize => (e.min(), (0..n).rev().collect()),
    };
    let tie = 1e-12 * lead.abs().max(1.0);
    let group: Vec<usize> = order.into_iter().take_while(|&k| (e.eigenvalues[k] - lead).abs() <= tie).collect();
    if group.len() > 1 {
        let mut proj = alloc::vec![C64::new(0.0, 0.0); n];
        for &k in &group {
            let v = e.vector(k);
            let c = inner(&v, current);
            for (p, x) in proj.iter_mut().zip(&v) {
                *p += c * x;
            }
        }
        let norm = vec_norm(&proj);
        if norm > 1e-8 {
            proj.iter_mut().for_each(|z| *z /= norm);
            return (lead, proj);
        }
    }
    (lead, e.vector(group[0]))
}

/// Coordinate ascent (or descent) from a single start. Works for any
/// Hermitian `c`; each local update is an exact extreme-eigenvector step,
/// so the objective is monotone across updates.
pub fn seesaw_from(c: &HermitianOperator, start: ProductState, sense: Sense, config: &SeesawConfig) -> Result<OptimizationResult> {
    if c.shape().dims() != start.shape.dims() {
        return Err(Error::DimensionMismatch { expected: c.dim(), found: start.shape.total() });
    }
    let mut state = start;
    let mut value = state.expectation(c);
    let mut trace = alloc::vec![value];
    let mut converged = false;
    let mut sweeps = 0;
    let parties = c.shape().parties();
    while sweeps < config.max_sweeps {
        sweeps += 1;
        let before = value;
        for j in 0..parties {
            let eff = effective_operator(c, &state, j)?;
            let e = eigh(&eff)?;
            let (lambda, v) = extreme_vector(&e, sense, state.local(j));
            state.set_local(j, v);
            value = lambda;
        }
        trace.push(value);
        let gain = match sense {
            Sense::Maximize => value - before,
            Sense::Minimize => before - value,
        };
        if gain < config.tolerance {
            converged = true;
            break;
        }
    }
    let value = state.expectation(c);
    Ok(OptimizationResult { value, state, iterations: sweeps, converged, trace })
}

/// Runs [`seesaw_from`] from every start (in parallel) and keeps the best.
pub fn seesaw_multistart(
    c: &HermitianOperator,
    starts: Vec<ProductState>,
    sense: Sense,
    config: &SeesawConfig,
) -> Result<OptimizationResult> {
    if starts.is_empty() {
        return Err(Error::InvalidArgument("at least one start is required"));
    }
    let runs = par_map(starts.len(), |i| seesaw_from(c, starts[i].clone(), sense, config));
    let mut best: Option<OptimizationResult> = None;
    for run in runs {
        let run = run?;
        let better = match (&best, sense) {
            (None, _) => true,
            (Some(b), Sense::Maximize) => run.value > b.value,
            (Some(b), Sense::Minimize) => run.value < b.value,
        };
        if better {
            best = Some(run);
        }
    }
    Ok(best.expect("non-empty"))
}

/// Every computational-basis product state of `shape`.
pub fn basis_starts(shape: &MultipartiteShape) -> Vec<ProductState> {
    (0..shape.total())
        .map(|idx| {
            let locals = shape
                .digits(idx)
                .into_iter()
                .zip(shape.dims())
                .map(|(k, &d)| {
                    let mut v = alloc::vec![C64::new(0.0, 0.0); d];
                    v[k] = C64::new(1.0, 0.0);
                    v
                })
                .collect();
            ProductState { shape: shape.clone(), locals }
        })
        .collect()
}

/// Random product starts drawn from independent streams of `seed`.
pub fn random_starts(shape: &MultipartiteShape, count: usize, seed: u64) -> Vec<ProductState> {
    (0..count).map(|i| ProductState::random(shape.clone(), &mut stream(seed, i as u64))).collect()
}

fn check_psd_precondition(c: &HermitianOperator) -> Result<()> {
    let min = c.min_eigenvalue()?;
    if min < -PSD_PRECONDITION_TOL {
        return Err(Error::NotPsd { min_eigenvalue: min });
    }
    Ok(())
}

/// Maximum of `<φ|c|φ>` over product states via multistart seesaw.
/// Deterministic for a fixed generator state and restart count.
pub fn seesaw_max<R: Rng + ?Sized>(c: &HermitianOperator, restarts: usize, rng: &mut R) -> Result<OptimizationResult> {
    seesaw_max_with(c, restarts, rng, &SeesawConfig::default(), Vec::new())
}

/// [`seesaw_max`] with explicit configuration and extra deterministic starts
/// evaluated alongside the random ones.
pub fn seesaw_max_with<R: Rng + ?Sized>(
    c: &HermitianOperator,
    restarts: usize,
    rng: &mut R,
    config: &SeesawConfig,
    extra_starts: Vec<ProductState>,
) -> Result<OptimizationResult> {
    check_psd_precondition(c)?;
    let seed = fork_seed(rng);
    let mut starts = random_starts(c.shape(), restarts.max(1), seed);
    if c.dim() <= BASIS_STARTS_MAX_DIM {
        starts.extend(basis_starts(c.shape()));
    }
    starts.extend(extra_starts);
    seesaw_multistart(c, starts, Sense::Maximize, config)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BruteForceConfig {
    /// Random product states drawn for all parties but the last.
    pub samples: usize,
    /// Best samples handed to the stochastic local refinement.
    pub refine_best: usize,
    pub seed: u64,
}

impl Default for BruteForceConfig {
    fn default() -> Self {
        Self { samples: 1_000_000, refine_best: 8, seed: 0 }
    }
}

pub const BRUTE_FORCE_MAX_DIM: usize = 64;

/// Sampling oracle for the product-state maximum, independent of the seesaw
/// path. The last party is optimized exactly (largest eigenvalue of the
/// block-contracted operator); the others are sampled Haar-randomly, and the
/// best samples are polished by random-perturbation hill climbing. The
/// result is a lower bound on the true optimum.
pub fn brute_force_max(c: &HermitianOperator, config: &BruteForceConfig) -> Result<f64> {
    let shape = c.shape();
    shape.check_cap(BRUTE_FORCE_MAX_DIM)?;
    let m = shape.parties();
    if m == 1 {
        return Ok(eigh(c)?.max());
    }
    let last = shape.dims()[m - 1];
    let rest_dims: Vec<usize> = shape.dims()[..m - 1].to_vec();
    let blocks = Blocks::new(c, last);

    const CHUNKS: usize = 16;
    let samples = config.samples.max(1);
    let keep = config.refine_best.max(1);
    let per_chunk = samples.div_ceil(CHUNKS);
    let chunk_best = par_map(CHUNKS, |chunk| {
        let mut rng = stream(config.seed, chunk as u64);
        let count = per_chunk.min(samples.saturating_sub(chunk * per_chunk));
        let mut best: Vec<(f64, Vec<Vec<C64>>)> = Vec::new();
        for _ in 0..count {
            let locals: Vec<Vec<C64>> = rest_dims.iter().map(|&d| haar_vector(d, &mut rng)).collect();
            let v = blocks.value(&locals);
            insert_top(&mut best, (v, locals), keep);
        }
        best
    });
    let mut pool = Vec::new();
    for b in chunk_best {
        for item in b {
            insert_top(&mut pool, item, keep);
        }
    }
    let refined = par_map(pool.len(), |i| {
        let mut rng = stream(config.seed ^ 0x0005_eed0_fb1e_5500, i as u64);
        hill_climb(&blocks, pool[i].1.clone(), pool[i].0, &mut rng)
    });
    Ok(refined.into_iter().fold(f64::NEG_INFINITY, f64::max))
}

fn insert_top(best: &mut Vec<(f64, Vec<Vec<C64>>)>, item: (f64, Vec<Vec<C64>>), keep: usize) {
    if best.len() < keep || item.0 > best[best.len() - 1].0 {
        let pos = best.iter().position(|b| item.0 > b.0).unwrap_or(best.len());
        best.insert(pos, item);
        best.truncate(keep);
    }
}

fn hill_climb<R: Rng + ?Sized>(blocks: &Blocks, mut locals: Vec<Vec<C64>>, mut value: f64, rng: &mut R) -> f64 {
    let mut sigma = 0.1;
    let mut failures = 0;
    for _ in 0..200_000 {
        if sigma < 1e-8 {
            break;
        }
        let j = rng.random_range(0..locals.len());
        let mut trial = locals[j].clone();
        for z in trial.iter_mut() {
            *z += crate::random::complex_gaussian(rng) * sigma;
        }
        let norm = vec_norm(&trial);
        trial.iter_mut().for_each(|z| *z /= norm);
        let old = core::mem::replace(&mut locals[j], trial);
        let v = blocks.value(&locals);
        if v > value {
            value = v;
            failures = 0;
        } else {
            locals[j] = old;
            failures += 1;
            if failures >= 30 {
                sigma *= 0.5;
                failures = 0;
            }
        }
    }
    value
}

/// `c` viewed as a `rest × rest` array of `last × last` blocks.
struct Blocks<'a> {
    c: &'a HermitianOperator,
    last: usize,
}

impl<'a> Blocks<'a> {
    fn new(c: &'a HermitianOperator, last: usize) -> Self {
        Self { c, last }
    }

    /// Largest eigenvalue of `Σ_{a,b} conj(φ_a) φ_b C_{ab}`.
    fn value(&self, locals: &[Vec<C64>]) -> f64 {
        let mut phi = alloc::vec![C64::new(1.0, 0.0)];
        for v in locals {
            phi = kron_vec(&phi, v);
        }
        let d = self.last;
        let m = self.c.matrix();
        let mut red = CMatrix::zeros(d, d);
        for (a, pa) in phi.iter().enumerate() {
            for (b, pb) in phi.iter().enumerate() {
                let w = pa.conj() * pb;
                for x in 0..d {
                    let row = m.row(a * d + x);
                    for y in 0..d {
                        red[(x, y)] += w * row[b * d + y];
                    }
                }
            }
        }
        if d == 2 {
            let (p, q, s) = (red[(0, 0)].re, red[(1, 1)].re, red[(0, 1)]);
            let half = 0.5 * (p - q);
            0.5 * (p + q) + libm::sqrt(half * half + s.norm_sqr())
        } else {
            red.symmetrize();
            crate::eigen::jacobi_eigh(&red, crate::eigen::DEFAULT_MAX_SWEEPS).map(|e| e.max()).unwrap_or(f64::NAN)
        }
    }
}
