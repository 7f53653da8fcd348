//! Probability distributions with `α` fractional bits, stored exactly.
//!
//! Entry `i` holds the integer `X_i` standing for `X_i / 2^α`. The
//! consistency checks Arthur runs on these values (sum equals one,
//! deviation from an observed frequency) are done in exact integer
//! arithmetic.

use alloc::vec::Vec;

use num_bigint::{BigInt, BigUint, Sign};
use num_traits::{ToPrimitive, Zero};
use rand::Rng;

use crate::error::{Error, Result};

/// Inputs whose sum strays further than this from one are rejected.
pub const SUM_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixedDistribution {
    alpha: u32,
    entries: Vec<BigUint>,
}

fn one(alpha: u32) -> BigUint {
    BigUint::from(1u8) << alpha
}

/// `floor(x · 2^α)` for finite `x ≥ 0`, plus the discarded fraction as a float.
pub(crate) fn dyadic_floor(x: f64, alpha: u32) -> (BigUint, f64) {
    debug_assert!(x >= 0.0 && x.is_finite());
    if x == 0.0 {
        return (BigUint::zero(), 0.0);
    }
    let bits = x.to_bits();
    let exp_bits = ((bits >> 52) & 0x7ff) as i64;
    let frac_bits = bits & ((1u64 << 52) - 1);
    // x = mantissa · 2^exp
    let (mantissa, exp) = if exp_bits == 0 { (frac_bits, -1074) } else { (frac_bits | (1u64 << 52), exp_bits - 1075) };
    let shift = exp + alpha as i64;
    if shift >= 0 {
        (BigUint::from(mantissa) << (shift as u64), 0.0)
    } else {
        let s = (-shift) as u64;
        if s >= 64 {
            (BigUint::zero(), mantissa as f64 * libm::exp2(-(s as f64)))
        } else {
            let floor = mantissa >> s;
            let rem = mantissa & ((1u64 << s) - 1);
            (BigUint::from(floor), rem as f64 / libm::exp2(s as f64))
        }
    }
}

impl FixedDistribution {
    /// Truncates each probability to `α` bits, then restores an exact sum of
    /// one by the largest-remainder rule. When the input sums to one exactly,
    /// every entry ends within `2^-α` of its input.
    pub fn from_probabilities(probs: &[f64], alpha: u32) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidArgument("distribution needs at least one outcome"));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < -SUM_TOL) {
            return Err(Error::InvalidArgument("probabilities must be finite and nonnegative"));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > SUM_TOL {
            return Err(Error::InvalidArgument("probabilities must sum to one"));
        }
        let (mut entries, fracs): (Vec<BigUint>, Vec<f64>) =
            probs.iter().map(|&p| dyadic_floor(p.clamp(0.0, 1.0), alpha)).unzip();

        let r = entries.len();
        let sum: BigUint = entries.iter().sum();
        let target = one(alpha);
        let mut deficit = BigInt::from_biguint(Sign::Plus, target) - BigInt::from_biguint(Sign::Plus, sum);

        // Float rounding in the input can leave a deficit outside [0, r);
        // fold the excess into the largest entry first.
        let max_units = BigInt::from(r as u64 - 1);
        let excess = if deficit.sign() == Sign::Minus {
            deficit.clone()
        } else if deficit > max_units {
            &deficit - &max_units
        } else {
            BigInt::zero()
        };
        if !excess.is_zero() {
            let big = (0..r).max_by(|&a, &b| entries[a].cmp(&entries[b]).then(b.cmp(&a))).expect("non-empty");
            let adjusted = BigInt::from_biguint(Sign::Plus, entries[big].clone()) + &excess;
            entries[big] = adjusted.to_biguint().ok_or(Error::InvalidArgument("probabilities must sum to one"))?;
            deficit -= excess;
        }

        let units = deficit.to_usize().expect("deficit is in [0, r)");
        let mut order: Vec<usize> = (0..r).collect();
        order.sort_by(|&a, &b| fracs[b].total_cmp(&fracs[a]).then(a.cmp(&b)));
        for &i in order.iter().take(units) {
            entries[i] += 1u8;
        }
        Ok(Self { alpha, entries })
    }

    /// Raw fixed-point words; the sum is not checked.
    pub fn from_raw(alpha: u32, entries: Vec<BigUint>) -> Self {
        Self { alpha, entries }
    }

    /// Point mass on `outcome`.
    pub fn point_mass(alpha: u32, outcomes: usize, outcome: usize) -> Self {
        let mut entries = alloc::vec![BigUint::zero(); outcomes];
        entries[outcome] = one(alpha);
        Self { alpha, entries }
    }

    pub fn alpha(&self) -> u32 {
        self.alpha
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[BigUint] {
        &self.entries
    }

    /// Exact Step-3 test: the entries add up to `2^α`.
    pub fn sums_to_one(&self) -> bool {
        self.entries.iter().sum::<BigUint>() == one(self.alpha)
    }

    pub fn probability(&self, i: usize) -> f64 {
        ratio_to_f64(&self.entries[i], self.alpha)
    }

    pub fn to_f64(&self) -> Vec<f64> {
        (0..self.entries.len()).map(|i| self.probability(i)).collect()
    }

    /// Moves `amount / 2^α` of mass from outcome `from` to outcome `to`.
    pub fn shift_mass(&mut self, from: usize, to: usize, amount: &BigUint) -> Result<()> {
        if &self.entries[from] < amount {
            return Err(Error::InvalidArgument("not enough mass to shift"));
        }
        self.entries[from] -= amount;
        self.entries[to] += amount;
        Ok(())
    }

    /// Exact Step-4 test `|n/k - X_i/2^α| ≥ 1/p`, evaluated as
    /// `|n·2^α - k·X_i| · p ≥ k·2^α`.
    pub fn deviates(&self, i: usize, n: u64, k: u64, p: u64) -> bool {
        let lhs_a = BigUint::from(n) << self.alpha;
        let lhs_b = BigUint::from(k) * &self.entries[i];
        let diff = if lhs_a >= lhs_b { lhs_a - lhs_b } else { lhs_b - lhs_a };
        diff * BigUint::from(p) >= BigUint::from(k) << self.alpha
    }

    /// Inverse-CDF sample driven by a uniform `α`-bit integer. Entries past
    /// the total mass are never returned; if the entries sum to less than one
    /// the residual maps to the last outcome.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u = uniform_bits(self.alpha, rng);
        let mut cum = BigUint::zero();
        for (i, e) in self.entries.iter().enumerate() {
            cum += e;
            if u < cum {
                return i;
            }
        }
        self.entries.len() - 1
    }
}

/// Uniform integer in `[0, 2^bits)`.
pub fn uniform_bits<R: Rng + ?Sized>(bits: u32, rng: &mut R) -> BigUint {
    let words = bits.div_ceil(32) as usize;
    let mut digits: Vec<u32> = (0..words).map(|_| rng.random()).collect();
    let spare = words as u32 * 32 - bits;
    if let Some(top) = digits.last_mut() {
        if spare > 0 {
            *top >>= spare;
        }
    }
    BigUint::from_slice(&digits)
}

fn ratio_to_f64(x: &BigUint, alpha: u32) -> f64 {
    let bits = x.bits();
    // Keep 64 significant bits before converting.
    if bits > 64 {
        let drop = bits - 64;
        let top = (x >> drop).to_u64().expect("fits in 64 bits");
        top as f64 * libm::exp2(drop as f64 - alpha as f64)
    } else {
        x.to_u64().expect("fits in 64 bits") as f64 * libm::exp2(-(alpha as f64))
    }
}
