//! Fixed-precision classical descriptions of small pure states and their
//! preparation by two-level rotations.
//!
//! A description stores every real and imaginary part as the nearest multiple
//! of `2^-f`, held exactly as a signed integer. A [`PreparationPlan`] prepares
//! a state from the first basis vector with `N - 1` real rotations acting on
//! the pairs `(0, k)` followed by a diagonal phase layer.

use alloc::vec::Vec;

use num_bigint::{BigInt, BigUint, Sign};
use num_traits::{Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::matrix::{kron_vec, vec_norm, C64};
use crate::operator::{spectral_norm, HermitianOperator, PureState};
use crate::shape::{MultipartiteShape, DEFAULT_MAX_DIM};

/// Tolerance on `‖accept‖ ≤ 1` and positivity of the accepting operator.
pub const ACCEPT_TOL: f64 = 1e-9;

/// `f = 20·N` bits.
pub fn default_precision(n: usize) -> Result<u32> {
    n.checked_mul(20).and_then(|f| u32::try_from(f).ok()).ok_or(Error::Overflow("precision bits"))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassicalStateDescription {
    precision: u32,
    re: Vec<BigInt>,
    im: Vec<BigInt>,
}

/// `x = mantissa · 2^exp` with `mantissa < 2^53`.
fn split_f64(x: f64) -> (u64, i64) {
    let bits = x.abs().to_bits();
    let exp_bits = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    if exp_bits == 0 {
        (frac, -1074)
    } else {
        (frac | (1u64 << 52), exp_bits - 1075)
    }
}

fn signed(mag: BigUint, negative: bool) -> BigInt {
    BigInt::from_biguint(if negative { Sign::Minus } else { Sign::Plus }, mag)
}

/// Nearest integer to `x · 2^f`, ties away from zero.
fn round_scaled(x: f64, f: u32) -> BigInt {
    if x == 0.0 {
        return BigInt::zero();
    }
    let (m, e) = split_f64(x);
    let shift = e + f as i64;
    let mag = if shift >= 0 {
        BigUint::from(m) << (shift as u64)
    } else {
        let s = (-shift) as u64;
        if s > 64 {
            BigUint::zero()
        } else {
            let wide = m as u128;
            BigUint::from((wide + (1u128 << (s - 1))) >> s)
        }
    };
    signed(mag, x < 0.0)
}

/// `n · 2^s` as the nearest-ish `f64`, keeping 64 significant bits.
fn big_times_pow2(n: &BigInt, s: i64) -> f64 {
    let mag = n.magnitude();
    let bits = mag.bits() as i64;
    let value = if bits > 64 {
        let drop = bits - 64;
        (mag >> (drop as u64)).to_u64().expect("64 bits") as f64 * libm::exp2((drop + s) as f64)
    } else {
        let x = mag.to_u64().expect("64 bits") as f64;
        // Split the scaling so neither factor under- or overflows early.
        let half = s / 2;
        x * libm::exp2(half as f64) * libm::exp2((s - half) as f64)
    };
    if n.is_negative() {
        -value
    } else {
        value
    }
}

/// Exact `x - n·2^-f`, rounded once to `f64`.
fn residual(x: f64, n: &BigInt, f: u32) -> f64 {
    if x == 0.0 {
        return -big_times_pow2(n, -(f as i64));
    }
    let (m, e) = split_f64(x);
    let xm = signed(BigUint::from(m), x < 0.0);
    let shift = e + f as i64;
    if shift >= 0 {
        big_times_pow2(&((xm << (shift as u64)) - n), -(f as i64))
    } else {
        big_times_pow2(&(xm - (n << ((-shift) as u64))), e)
    }
}

impl ClassicalStateDescription {
    pub fn from_parts(precision: u32, re: Vec<BigInt>, im: Vec<BigInt>) -> Result<Self> {
        if re.len() != im.len() {
            return Err(Error::DimensionMismatch { expected: re.len(), found: im.len() });
        }
        if re.is_empty() {
            return Err(Error::InvalidArgument("description needs at least one component"));
        }
        if precision == 0 {
            return Err(Error::InvalidArgument("precision must be at least one bit"));
        }
        Ok(Self { precision, re, im })
    }

    pub fn dimension(&self) -> usize {
        self.re.len()
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    pub fn real_parts(&self) -> &[BigInt] {
        &self.re
    }

    pub fn imag_parts(&self) -> &[BigInt] {
        &self.im
    }

    /// The encoded (unnormalized) vector `Σ (re_k + i·im_k) 2^-f |k>`.
    pub fn fixed_point_vector(&self) -> Vec<C64> {
        let s = -(self.precision as i64);
        self.re.iter().zip(&self.im).map(|(a, b)| C64::new(big_times_pow2(a, s), big_times_pow2(b, s))).collect()
    }

    /// Bytes per stored word: two's complement wide enough for `±2^f`.
    pub fn word_bytes(&self) -> usize {
        (self.precision as usize + 2).div_ceil(8)
    }

    /// `N` and `f` as big-endian `u32`, then each component's real and
    /// imaginary word, big-endian two's complement.
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let n = u32::try_from(self.dimension()).map_err(|_| Error::Overflow("dimension"))?;
        let w = self.word_bytes();
        let mut out = Vec::with_capacity(8 + 2 * w * self.dimension());
        out.extend_from_slice(&n.to_be_bytes());
        out.extend_from_slice(&self.precision.to_be_bytes());
        for (a, b) in self.re.iter().zip(&self.im) {
            for v in [a, b] {
                let bytes = v.to_signed_bytes_be();
                if bytes.len() > w {
                    return Err(Error::Overflow("component exceeds its word"));
                }
                let fill = if v.is_negative() { 0xff } else { 0 };
                out.extend(core::iter::repeat_n(fill, w - bytes.len()));
                out.extend_from_slice(&bytes);
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let header = bytes.get(..8).ok_or(Error::InvalidArgument("description header is truncated"))?;
        let n = u32::from_be_bytes(header[..4].try_into().expect("4 bytes")) as usize;
        let precision = u32::from_be_bytes(header[4..].try_into().expect("4 bytes"));
        if precision == 0 {
            return Err(Error::InvalidArgument("precision must be at least one bit"));
        }
        let w = (precision as usize + 2).div_ceil(8);
        let body = &bytes[8..];
        let expected = n.checked_mul(2 * w).ok_or(Error::Overflow("description length"))?;
        if body.len() != expected {
            return Err(Error::DimensionMismatch { expected: expected + 8, found: bytes.len() });
        }
        let mut words = body.chunks_exact(w).map(BigInt::from_signed_bytes_be);
        let mut re = Vec::with_capacity(n);
        let mut im = Vec::with_capacity(n);
        for _ in 0..n {
            re.push(words.next().expect("length checked"));
            im.push(words.next().expect("length checked"));
        }
        Self::from_parts(precision, re, im)
    }
}

/// Rounds every real and imaginary part of `psi` to the nearest multiple of `2^-f`.
pub fn encode_state(psi: &PureState, f: u32) -> Result<ClassicalStateDescription> {
    if f == 0 {
        return Err(Error::InvalidArgument("precision must be at least one bit"));
    }
    let re = psi.amplitudes().iter().map(|z| round_scaled(z.re, f)).collect();
    let im = psi.amplitudes().iter().map(|z| round_scaled(z.im, f)).collect();
    ClassicalStateDescription::from_parts(f, re, im)
}

/// The described vector, renormalized.
pub fn decode_state(desc: &ClassicalStateDescription) -> Result<PureState> {
    if desc.re.iter().chain(&desc.im).all(Zero::is_zero) {
        return Err(Error::ZeroVector);
    }
    PureState::normalized(MultipartiteShape::single(desc.dimension())?, desc.fixed_point_vector())
}

/// `‖ψ - ψ'‖` between `psi` and the fixed-point vector of `desc`, computed
/// from exact residuals. Componentwise rounding bounds this by
/// `sqrt(2N)·2^-(f+1)`, which is within [`encoding_bound`] for `N ≥ 2`.
pub fn encoding_error(psi: &PureState, desc: &ClassicalStateDescription) -> Result<f64> {
    if psi.amplitudes().len() != desc.dimension() {
        return Err(Error::DimensionMismatch { expected: desc.dimension(), found: psi.amplitudes().len() });
    }
    let f = desc.precision;
    let mut sum = 0.0;
    for (k, z) in psi.amplitudes().iter().enumerate() {
        let a = residual(z.re, &desc.re[k], f);
        let b = residual(z.im, &desc.im[k], f);
        sum += a * a + b * b;
    }
    Ok(libm::sqrt(sum))
}

/// Distance between `psi` and the decoded (renormalized) state after removing
/// the best global phase, computed from exact residuals so that it stays
/// meaningful far below double precision.
pub fn decode_error(psi: &PureState, desc: &ClassicalStateDescription) -> Result<f64> {
    if psi.amplitudes().len() != desc.dimension() {
        return Err(Error::DimensionMismatch { expected: desc.dimension(), found: psi.amplitudes().len() });
    }
    decode_state(desc)?;
    let f = desc.precision;
    let a = psi.amplitudes();
    // e = ψ' - ψ with ψ' the fixed-point vector
    let e: Vec<C64> = a
        .iter()
        .enumerate()
        .map(|(k, z)| -C64::new(residual(z.re, &desc.re[k], f), residual(z.im, &desc.im[k], f)))
        .collect();
    let along: C64 = a.iter().zip(&e).map(|(x, y)| x.conj() * y).sum();
    let perp: Vec<C64> = e.iter().zip(a).map(|(y, x)| y - along * x).collect();
    let e_norm = vec_norm(&e);
    let norm = libm::sqrt((1.0 + 2.0 * along.re + e_norm * e_norm).max(0.0));
    let sin = (vec_norm(&perp) / norm).min(1.0);
    // The angle between ψ and the ray of ψ' is asin(sin); the aligned
    // distance between unit vectors is 2·sin(angle/2).
    let cos_dir = 1.0 + along.re;
    let angle = if cos_dir >= 0.0 { libm::asin(sin) } else { core::f64::consts::PI - libm::asin(sin) };
    Ok(2.0 * libm::sin(angle / 2.0))
}

/// `N · 2^-(f+1)`.
pub fn encoding_bound(n: usize, f: u32) -> f64 {
    n as f64 * libm::exp2(-(f as f64 + 1.0))
}

/// Rotation by `angle` in the plane of basis vectors `i` and `j`:
/// `v_i ← cos·v_i - sin·v_j`, `v_j ← sin·v_i + cos·v_j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GivensRotation {
    pub i: usize,
    pub j: usize,
    pub angle: f64,
}

impl GivensRotation {
    fn apply(&self, v: &mut [C64], sign: f64) {
        let (s, c) = (libm::sin(sign * self.angle), libm::cos(self.angle));
        let (a, b) = (v[self.i], v[self.j]);
        v[self.i] = a * c - b * s;
        v[self.j] = a * s + b * c;
    }
}

/// Rotations in preparation order, then one phase per basis vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparationPlan {
    pub phases: Vec<f64>,
    pub rotations: Vec<GivensRotation>,
}

impl PreparationPlan {
    pub fn dimension(&self) -> usize {
        self.phases.len()
    }

    /// `U v`.
    pub fn apply(&self, v: &[C64]) -> Result<Vec<C64>> {
        self.check(v)?;
        let mut out = v.to_vec();
        for g in &self.rotations {
            g.apply(&mut out, 1.0);
        }
        for (z, &phi) in out.iter_mut().zip(&self.phases) {
            *z *= C64::from_polar(1.0, phi);
        }
        Ok(out)
    }

    /// `U† v`.
    pub fn apply_adjoint(&self, v: &[C64]) -> Result<Vec<C64>> {
        self.check(v)?;
        let mut out: Vec<C64> = v.iter().zip(&self.phases).map(|(z, &phi)| z * C64::from_polar(1.0, -phi)).collect();
        for g in self.rotations.iter().rev() {
            g.apply(&mut out, -1.0);
        }
        Ok(out)
    }

    /// `U |0>`.
    pub fn prepare(&self) -> Vec<C64> {
        let mut e0 = alloc::vec![C64::new(0.0, 0.0); self.dimension()];
        e0[0] = C64::new(1.0, 0.0);
        self.apply(&e0).expect("dimension matches")
    }

    fn check(&self, v: &[C64]) -> Result<()> {
        if v.len() != self.dimension() {
            return Err(Error::DimensionMismatch { expected: self.dimension(), found: v.len() });
        }
        Ok(())
    }
}

/// Plan with `U|0> = psi`. Reducing `psi` to `|0>` folds indices `N-1` down
/// to `1` into index 0; the plan stores the reverse of that sequence.
pub fn preparation_plan(psi: &PureState) -> PreparationPlan {
    let amps = psi.amplitudes();
    let n = amps.len();
    let mags: Vec<f64> = amps.iter().map(|z| z.norm()).collect();
    let phases = amps.iter().zip(&mags).map(|(z, &m)| if m == 0.0 { 0.0 } else { z.arg() }).collect();

    // tail[k] = a_0² + Σ_{l>k} a_l²
    let mut tail = alloc::vec![0.0; n];
    let mut acc = mags[0] * mags[0];
    for k in (1..n).rev() {
        tail[k] = acc;
        acc += mags[k] * mags[k];
    }
    let rotations = (1..n)
        .map(|k| GivensRotation { i: 0, j: k, angle: libm::atan2(mags[k], libm::sqrt(tail[k])) })
        .collect();
    PreparationPlan { phases, rotations }
}

/// Acceptance probability `<ψ'| A |ψ'>` of the decoded proofs `ψ' = ⊗ψ'_i`.
pub fn simulate_mqa_protocol(descriptions: &[ClassicalStateDescription], accept: &HermitianOperator) -> Result<f64> {
    if descriptions.is_empty() {
        return Err(Error::InvalidArgument("at least one proof is required"));
    }
    let dims: Vec<usize> = descriptions.iter().map(ClassicalStateDescription::dimension).collect();
    let shape = MultipartiteShape::new(dims)?;
    shape.check_cap(DEFAULT_MAX_DIM)?;
    if accept.dim() != shape.total() {
        return Err(Error::DimensionMismatch { expected: shape.total(), found: accept.dim() });
    }
    if accept.min_eigenvalue()? < -ACCEPT_TOL || spectral_norm(accept)? > 1.0 + ACCEPT_TOL {
        return Err(Error::InvalidArgument("accepting operator must satisfy 0 ≤ A ≤ 1"));
    }
    let mut joint = alloc::vec![C64::new(1.0, 0.0)];
    for d in descriptions {
        joint = kron_vec(&joint, decode_state(d)?.amplitudes());
    }
    Ok(accept.expectation(&joint))
}

/// `Σ_i ‖ψ_iψ_i* - ψ'_iψ'_i*‖_tr` for decoded proofs `ψ'_i`, which bounds
/// the change in acceptance probability.
pub fn acceptance_drift_bound(originals: &[PureState], descriptions: &[ClassicalStateDescription]) -> Result<f64> {
    if originals.len() != descriptions.len() {
        return Err(Error::PartyMismatch { left: originals.len(), right: descriptions.len() });
    }
    let mut total = 0.0;
    for (psi, d) in originals.iter().zip(descriptions) {
        let decoded = decode_state(d)?;
        if decoded.amplitudes().len() != psi.amplitudes().len() {
            return Err(Error::DimensionMismatch { expected: psi.amplitudes().len(), found: decoded.amplitudes().len() });
        }
        // ‖ψψ* - φφ*‖_tr = 2·sqrt(1 - |<ψ|φ>|²) = 2‖φ - <ψ|φ>ψ‖ for unit vectors
        let a = psi.amplitudes();
        let b = decoded.amplitudes();
        let ov: C64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
        let perp: Vec<C64> = b.iter().zip(a).map(|(y, x)| y - ov * x).collect();
        total += 2.0 * vec_norm(&perp);
    }
    Ok(total)
}

/// Distance between two vectors after removing the best global phase.
pub fn phase_aligned_distance(a: &[C64], b: &[C64]) -> f64 {
    let ov: C64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
    let phase = if ov.norm() > 0.0 { ov.conj() / ov.norm() } else { C64::new(1.0, 0.0) };
    let diff: Vec<C64> = a.iter().zip(b).map(|(x, y)| x - y * phase).collect();
    vec_norm(&diff)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{haar_vector, stream};

    fn state(amps: Vec<C64>) -> PureState {
        let n = amps.len();
        PureState::normalized(MultipartiteShape::single(n).unwrap(), amps).unwrap()
    }

    fn basis(n: usize, k: usize) -> PureState {
        PureState::basis(MultipartiteShape::single(n).unwrap(), k).unwrap()
    }

    fn plus() -> PureState {
        state(alloc::vec![C64::new(1.0, 0.0), C64::new(1.0, 0.0)])
    }

    #[test]
    fn rounding_is_nearest() {
        assert_eq!(round_scaled(0.5, 1), BigInt::from(1));
        assert_eq!(round_scaled(0.25, 1), BigInt::from(1));
        assert_eq!(round_scaled(-0.25, 1), BigInt::from(-1));
        assert_eq!(round_scaled(0.2, 1), BigInt::from(0));
        assert_eq!(round_scaled(1.0, 200), BigInt::from(1) << 200u32);
        assert_eq!(round_scaled(1e-300, 10), BigInt::zero());
    }

    #[test]
    fn basis_states_are_exact() {
        for f in [1, 7, 60, 500] {
            let d = encode_state(&basis(4, 1), f).unwrap();
            assert_eq!(encoding_error(&basis(4, 1), &d).unwrap(), 0.0);
            assert_eq!(decode_state(&d).unwrap(), basis(4, 1));
        }
    }

    #[test]
    fn plus_state_error_bound() {
        let d = encode_state(&plus(), 20).unwrap();
        assert!(encoding_error(&plus(), &d).unwrap() <= 2.0 * libm::exp2(-21.0));
    }

    #[test]
    fn haar_states_within_bound() {
        let mut rng = stream(11, 0);
        for _ in 0..100 {
            let psi = state(haar_vector(8, &mut rng));
            let d = encode_state(&psi, 30).unwrap();
            assert!(encoding_error(&psi, &d).unwrap() <= encoding_bound(8, 30));
            assert!(decode_error(&psi, &d).unwrap() <= encoding_bound(8, 30));
        }
    }

    #[test]
    fn decode_error_matches_float_distance_at_low_precision() {
        let mut rng = stream(16, 0);
        for _ in 0..20 {
            let psi = state(haar_vector(4, &mut rng));
            let d = encode_state(&psi, 6).unwrap();
            let direct = phase_aligned_distance(psi.amplitudes(), decode_state(&d).unwrap().amplitudes());
            assert!((decode_error(&psi, &d).unwrap() - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn single_component_states_decode_to_a_phase() {
        let psi = state(alloc::vec![C64::from_polar(1.0, 0.7)]);
        let d = encode_state(&psi, 3).unwrap();
        assert!(decode_error(&psi, &d).unwrap() < 1e-15);
    }

    #[test]
    fn round_trip_fidelity() {
        let mut rng = stream(12, 0);
        let psi = state(haar_vector(5, &mut rng));
        let back = decode_state(&encode_state(&psi, 40).unwrap()).unwrap();
        assert!(psi.fidelity(&back) >= 1.0 - 1e-20);
    }

    #[test]
    fn zero_description_rejected() {
        let d = ClassicalStateDescription::from_parts(8, alloc::vec![BigInt::zero(); 2], alloc::vec![BigInt::zero(); 2]).unwrap();
        assert!(matches!(decode_state(&d), Err(Error::ZeroVector)));
        assert!(encode_state(&plus(), 0).is_err());
    }

    #[test]
    fn bytes_round_trip() {
        let mut rng = stream(13, 0);
        for f in [1u32, 6, 7, 60, 161] {
            let psi = state(haar_vector(3, &mut rng));
            let d = encode_state(&psi, f).unwrap();
            let bytes = d.to_bytes().unwrap();
            assert_eq!(bytes.len(), 8 + 6 * d.word_bytes());
            assert_eq!(ClassicalStateDescription::from_bytes(&bytes).unwrap(), d);
        }
        assert!(ClassicalStateDescription::from_bytes(&[0, 0, 0, 1, 0, 0, 0, 8, 1]).is_err());
    }

    #[test]
    fn zero_plan_for_first_basis_state() {
        let plan = preparation_plan(&basis(4, 0));
        assert_eq!(plan.phases, alloc::vec![0.0; 4]);
        assert_eq!(plan.rotations.len(), 3);
        assert!(plan.rotations.iter().all(|g| g.angle == 0.0));
    }

    #[test]
    fn plus_state_single_quarter_turn() {
        let plan = preparation_plan(&plus());
        assert_eq!(plan.rotations.len(), 1);
        assert!((plan.rotations[0].angle - core::f64::consts::FRAC_PI_4).abs() < 1e-15);
        assert_eq!(plan.phases, alloc::vec![0.0, 0.0]);
    }

    #[test]
    fn plans_reconstruct_haar_states() {
        let mut rng = stream(14, 0);
        for _ in 0..100 {
            let psi = state(haar_vector(8, &mut rng));
            let plan = preparation_plan(&psi);
            let prepared = plan.prepare();
            let diff: Vec<C64> = prepared.iter().zip(psi.amplitudes()).map(|(a, b)| a - b).collect();
            assert!(vec_norm(&diff) <= 1e-10);
            let back = plan.apply_adjoint(psi.amplitudes()).unwrap();
            assert!((back[0] - C64::new(1.0, 0.0)).norm() <= 1e-10);
            assert!(back[1..].iter().all(|z| z.norm() <= 1e-10));
        }
    }

    #[test]
    fn embedded_classical_bits_are_exact() {
        // A classical string b embedded as the basis state |b> survives
        // encoding at one bit of precision.
        for b in 0..8 {
            let psi = basis(8, b);
            let d = encode_state(&psi, 1).unwrap();
            assert_eq!(decode_state(&d).unwrap(), psi);
        }
    }

    #[test]
    fn mqa_simulation() {
        let shape = MultipartiteShape::single(2).unwrap();
        let d = encode_state(&plus(), 30).unwrap();
        let proj = HermitianOperator::projector(&decode_state(&d).unwrap());
        assert!((simulate_mqa_protocol(std::slice::from_ref(&d), &proj).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(simulate_mqa_protocol(std::slice::from_ref(&d), &HermitianOperator::zeros(shape.clone())).unwrap(), 0.0);
        let too_big = HermitianOperator::identity(shape).scale(2.0);
        assert!(simulate_mqa_protocol(&[d], &too_big).is_err());
    }

    #[test]
    fn mqa_drift_within_trace_norm_bound() {
        let mut rng = stream(15, 0);
        let psis: Vec<PureState> = (0..3).map(|_| state(haar_vector(2, &mut rng))).collect();
        let descs: Vec<_> = psis.iter().map(|p| encode_state(p, 30).unwrap()).collect();
        let shape = MultipartiteShape::new([2, 2, 2]).unwrap();
        let accept = crate::random::random_density(shape, &mut rng);
        let mut exact = alloc::vec![C64::new(1.0, 0.0)];
        for p in &psis {
            exact = kron_vec(&exact, p.amplitudes());
        }
        let drift = (accept.expectation(&exact) - simulate_mqa_protocol(&descs, &accept).unwrap()).abs();
        let bound = acceptance_drift_bound(&psis, &descs).unwrap();
        assert!(drift <= bound + 1e-15);
        assert!(bound <= 2.0 * 3.0 * libm::exp2(-30.0) * 2.0);
    }
}
