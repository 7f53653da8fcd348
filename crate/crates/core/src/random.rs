//! Seeded random streams and random instance generators.
//!
//! Parallel work is split into independently seeded ChaCha streams, one per
//! work item, so results depend only on `(seed, item index)` and never on
//! scheduling.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::matrix::{vec_norm, CMatrix, C64};
use crate::operator::HermitianOperator;
use crate::separable::SeparableOperator;
use crate::shape::MultipartiteShape;

pub type StreamRng = ChaCha8Rng;

/// Stream `index` of the generator family keyed by `seed`.
pub fn stream(seed: u64, index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Draws a base seed from a caller-provided generator for later splitting.
pub fn fork_seed<R: Rng + ?Sized>(rng: &mut R) -> u64 {
    rng.random()
}

/// Evaluates `f(0..n)`, in parallel when the `std` feature is on. Output
/// order always matches the index order.
pub fn par_map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "std")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "std"))]
    {
        (0..n).map(f).collect()
    }
}

pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Haar-distributed unit vector in `C^d`.
pub fn haar_vector<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<C64> {
    loop {
        let mut v: Vec<C64> = (0..d).map(|_| complex_gaussian(rng)).collect();
        let n = vec_norm(&v);
        if n > 1e-300 {
            v.iter_mut().for_each(|z| *z /= n);
            return v;
        }
    }
}

/// `G G*` for a `d × rank` complex Ginibre matrix `G`.
pub fn ginibre_psd<R: Rng + ?Sized>(d: usize, rank: usize, rng: &mut R) -> CMatrix {
    let g = CMatrix::from_fn(d, rank, |_, _| complex_gaussian(rng));
    let mut m = g.matmul(&g.adjoint());
    m.symmetrize();
    m
}

/// Random full-rank density operator (induced measure).
pub fn random_density<R: Rng + ?Sized>(shape: MultipartiteShape, rng: &mut R) -> HermitianOperator {
    let d = shape.total();
    let m = ginibre_psd(d, d, rng);
    let t = m.trace().re;
    HermitianOperator::from_hermitian_parts(shape, m.scale(1.0 / t))
}

/// Random PSD operator rescaled so its trace is `trace`; its spectral norm
/// is then at most `trace`.
pub fn random_psd<R: Rng + ?Sized>(shape: MultipartiteShape, trace: f64, rng: &mut R) -> HermitianOperator {
    let d = shape.total();
    let rank = rng.random_range(1..=d);
    let m = ginibre_psd(d, rank, rng);
    let t = m.trace().re;
    HermitianOperator::from_hermitian_parts(shape, m.scale(trace / t))
}

/// Random Hermitian operator with i.i.d. Gaussian entries (GUE-like).
pub fn random_hermitian<R: Rng + ?Sized>(shape: MultipartiteShape, rng: &mut R) -> HermitianOperator {
    let d = shape.total();
    let g = CMatrix::from_fn(d, d, |_, _| complex_gaussian(rng));
    HermitianOperator::from_hermitian_parts(shape, g.add(&g.adjoint()).scale(0.5))
}

/// `Σ_i w_i ρ_1(i) ⊗ … ⊗ ρ_m(i)` with `terms` product terms, unit-trace PSD
/// factors and weights summing to one, so `0 ≤ C ≤ 1`.
pub fn random_separable<R: Rng + ?Sized>(shape: MultipartiteShape, terms: usize, rng: &mut R) -> SeparableOperator {
    let raw: Vec<f64> = (0..terms).map(|_| rng.random::<f64>() + 1e-3).collect();
    let total: f64 = raw.iter().sum();
    let terms = raw
        .iter()
        .map(|w| {
            shape
                .dims()
                .iter()
                .enumerate()
                .map(|(j, &d)| {
                    let weight = if j == 0 { w / total } else { 1.0 };
                    random_psd(MultipartiteShape::single(d).expect("d ≥ 1"), weight, rng)
                })
                .collect()
        })
        .collect();
    SeparableOperator::new(shape, terms).expect("factors are PSD with matching dimensions")
}
