//! Hermitian operators and pure states on multipartite spaces, with the
//! tensor, partial-trace and partial-transpose maps and the norms built on them.

use alloc::vec::Vec;

use crate::eigen::{jacobi_eigh, EigenDecomposition, DEFAULT_MAX_SWEEPS};
use crate::error::{Error, Result};
use crate::matrix::{inner, vec_norm, CMatrix, C64};
use crate::shape::{MultipartiteShape, DEFAULT_MAX_DIM};

/// Asymmetry absorbed by symmetrization at construction.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Unit-norm tolerance for pure states.
pub const NORM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    shape: MultipartiteShape,
    matrix: CMatrix,
}

impl HermitianOperator {
    /// Validates size and Hermiticity. Asymmetry up to [`HERMITIAN_TOL`] is
    /// absorbed by replacing `M` with `(M + M*)/2`.
    pub fn new(shape: MultipartiteShape, mut matrix: CMatrix) -> Result<Self> {
        let n = shape.total();
        if matrix.rows() != n || matrix.cols() != n {
            return Err(Error::DimensionMismatch { expected: n, found: matrix.rows().max(matrix.cols()) });
        }
        let asymmetry = matrix.hermitian_defect();
        if !(asymmetry <= HERMITIAN_TOL) {
            return Err(Error::NotHermitian { asymmetry });
        }
        matrix.symmetrize();
        Ok(Self { shape, matrix })
    }

    /// For matrices Hermitian by construction; float noise is symmetrized away.
    pub(crate) fn from_hermitian_parts(shape: MultipartiteShape, mut matrix: CMatrix) -> Self {
        debug_assert_eq!(matrix.rows(), shape.total());
        matrix.symmetrize();
        Self { shape, matrix }
    }

    pub fn identity(shape: MultipartiteShape) -> Self {
        let matrix = CMatrix::identity(shape.total());
        Self { shape, matrix }
    }

    pub fn zeros(shape: MultipartiteShape) -> Self {
        let n = shape.total();
        Self { shape, matrix: CMatrix::zeros(n, n) }
    }

    pub fn from_real_diagonal(shape: MultipartiteShape, diag: &[f64]) -> Result<Self> {
        if diag.len() != shape.total() {
            return Err(Error::DimensionMismatch { expected: shape.total(), found: diag.len() });
        }
        Ok(Self { shape, matrix: CMatrix::from_real_diagonal(diag) })
    }

    /// `|ψ><ψ|`.
    pub fn projector(state: &PureState) -> Self {
        Self::from_hermitian_parts(state.shape.clone(), CMatrix::outer(&state.amplitudes))
    }

    pub fn shape(&self) -> &MultipartiteShape {
        &self.shape
    }

    pub fn dim(&self) -> usize {
        self.shape.total()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.matrix[(i, j)]
    }

    /// Same entries, different factor structure of equal total dimension.
    pub fn reshaped(&self, shape: MultipartiteShape) -> Result<Self> {
        if shape.total() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: shape.total() });
        }
        Ok(Self { shape, matrix: self.matrix.clone() })
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { shape: self.shape.clone(), matrix: self.matrix.scale(s) }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_dim(other)?;
        Ok(Self::from_hermitian_parts(self.shape.clone(), self.matrix.add(&other.matrix)))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_dim(other)?;
        Ok(Self::from_hermitian_parts(self.shape.clone(), self.matrix.sub(&other.matrix)))
    }

    /// `t·1 - self`.
    pub fn shifted_complement(&self, t: f64) -> Self {
        let mut m = self.matrix.scale(-1.0);
        for i in 0..self.dim() {
            m[(i, i)].re += t;
        }
        Self { shape: self.shape.clone(), matrix: m }
    }

    /// `self + t·1`.
    pub fn add_identity(&self, t: f64) -> Self {
        let mut m = self.matrix.clone();
        for i in 0..self.dim() {
            m[(i, i)].re += t;
        }
        Self { shape: self.shape.clone(), matrix: m }
    }

    fn check_same_dim(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            Err(Error::DimensionMismatch { expected: self.dim(), found: other.dim() })
        } else {
            Ok(())
        }
    }

    /// `<ψ| self |ψ>`.
    pub fn expectation(&self, amplitudes: &[C64]) -> f64 {
        self.matrix.quadratic_form(amplitudes)
    }

    pub fn tensor(&self, other: &Self) -> Result<Self> {
        tensor_capped(self, other, DEFAULT_MAX_DIM)
    }

    pub fn partial_trace(&self, keep: &[usize]) -> Result<Self> {
        partial_trace(self, keep)
    }

    pub fn partial_transpose(&self, subsystem: usize) -> Result<Self> {
        partial_transpose(self, subsystem)
    }

    pub fn eigh(&self) -> Result<EigenDecomposition> {
        eigh(self)
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(eigh(self)?.min())
    }

    pub fn is_psd(&self, tol: f64) -> Result<bool> {
        Ok(self.min_eigenvalue()? >= -tol)
    }

    /// Checks PSD and unit trace within `tol`.
    pub fn is_density(&self, tol: f64) -> Result<bool> {
        Ok((self.trace() - 1.0).abs() <= tol && self.is_psd(tol)?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    shape: MultipartiteShape,
    amplitudes: Vec<C64>,
}

impl PureState {
    pub fn new(shape: MultipartiteShape, amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.len() != shape.total() {
            return Err(Error::DimensionMismatch { expected: shape.total(), found: amplitudes.len() });
        }
        let norm = vec_norm(&amplitudes);
        if !((norm - 1.0).abs() <= NORM_TOL) {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self { shape, amplitudes })
    }

    /// Rescales a nonzero vector to unit norm.
    pub fn normalized(shape: MultipartiteShape, mut amplitudes: Vec<C64>) -> Result<Self> {
        let norm = vec_norm(&amplitudes);
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::ZeroVector);
        }
        for a in amplitudes.iter_mut() {
            *a /= norm;
        }
        Self::new(shape, amplitudes)
    }

    pub fn basis(shape: MultipartiteShape, index: usize) -> Result<Self> {
        if index >= shape.total() {
            return Err(Error::DimensionMismatch { expected: shape.total(), found: index + 1 });
        }
        let mut amplitudes = alloc::vec![C64::new(0.0, 0.0); shape.total()];
        amplitudes[index] = C64::new(1.0, 0.0);
        Ok(Self { shape, amplitudes })
    }

    pub fn shape(&self) -> &MultipartiteShape {
        &self.shape
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amplitudes
    }

    pub fn overlap(&self, other: &Self) -> C64 {
        inner(&self.amplitudes, &other.amplitudes)
    }

    /// `|<self|other>|²`.
    pub fn fidelity(&self, other: &Self) -> f64 {
        self.overlap(other).norm_sqr()
    }

    pub fn density(&self) -> HermitianOperator {
        HermitianOperator::projector(self)
    }
}

/// `a ⊗ b` with the left factor's indices most significant.
pub fn tensor(a: &HermitianOperator, b: &HermitianOperator) -> Result<HermitianOperator> {
    tensor_capped(a, b, DEFAULT_MAX_DIM)
}

pub fn tensor_capped(a: &HermitianOperator, b: &HermitianOperator, cap: usize) -> Result<HermitianOperator> {
    let shape = a.shape.concat(&b.shape)?;
    shape.check_cap(cap)?;
    Ok(HermitianOperator { shape, matrix: a.matrix.kron(&b.matrix) })
}

/// Traces out every subsystem not listed in `keep`. The result keeps the
/// retained subsystems in their original order.
pub fn partial_trace(a: &HermitianOperator, keep: &[usize]) -> Result<HermitianOperator> {
    let shape = &a.shape;
    if keep.is_empty() {
        return Err(Error::InvalidArgument("partial trace must keep at least one subsystem"));
    }
    for &k in keep {
        shape.check_index(k)?;
    }
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    let traced: Vec<usize> = (0..shape.parties()).filter(|j| !kept.contains(j)).collect();

    let strides = shape.strides();
    let offsets = |subsystems: &[usize]| -> Vec<usize> {
        let sub_dims: Vec<usize> = subsystems.iter().map(|&j| shape.dims()[j]).collect();
        let total: usize = sub_dims.iter().product();
        let sub = MultipartiteShape::new(if sub_dims.is_empty() { alloc::vec![1] } else { sub_dims })
            .expect("dims validated");
        (0..total)
            .map(|idx| {
                if subsystems.is_empty() {
                    return 0;
                }
                sub.digits(idx).iter().zip(subsystems).map(|(&d, &j)| d * strides[j]).sum()
            })
            .collect()
    };
    let keep_off = offsets(&kept);
    let trace_off = offsets(&traced);

    let out_shape = MultipartiteShape::new(kept.iter().map(|&j| shape.dims()[j]).collect::<Vec<_>>())?;
    let n = keep_off.len();
    let mut out = CMatrix::zeros(n, n);
    for (r, &ro) in keep_off.iter().enumerate() {
        for (c, &co) in keep_off.iter().enumerate() {
            let mut s = C64::new(0.0, 0.0);
            for &t in &trace_off {
                s += a.matrix[(ro + t, co + t)];
            }
            out[(r, c)] = s;
        }
    }
    Ok(HermitianOperator::from_hermitian_parts(out_shape, out))
}

/// Transposes subsystem `subsystem`: `|a b><c d| -> |a d><c b|` when it is
/// the second factor. Entries are permuted, never recomputed, so applying it
/// twice restores the input exactly.
pub fn partial_transpose(a: &HermitianOperator, subsystem: usize) -> Result<HermitianOperator> {
    let shape = &a.shape;
    shape.check_index(subsystem)?;
    let n = shape.total();
    let stride = shape.strides()[subsystem];
    let d = shape.dims()[subsystem];
    let digit = |i: usize| (i / stride) % d;
    let mut out = CMatrix::zeros(n, n);
    for r in 0..n {
        let dr = digit(r);
        for c in 0..n {
            let dc = digit(c);
            let r2 = r - dr * stride + dc * stride;
            let c2 = c - dc * stride + dr * stride;
            out[(r2, c2)] = a.matrix[(r, c)];
        }
    }
    Ok(HermitianOperator { shape: shape.clone(), matrix: out })
}

/// Reorders tensor factors: subsystem `k` of the result is subsystem
/// `order[k]` of the input. Entries are moved, never recomputed.
pub fn permute_subsystems(a: &HermitianOperator, order: &[usize]) -> Result<HermitianOperator> {
    let shape = a.shape();
    let m = shape.parties();
    if order.len() != m {
        return Err(Error::PartyMismatch { left: m, right: order.len() });
    }
    let mut seen = alloc::vec![false; m];
    for &o in order {
        shape.check_index(o)?;
        if core::mem::replace(&mut seen[o], true) {
            return Err(Error::InvalidArgument("subsystem order is not a permutation"));
        }
    }
    let new_shape = MultipartiteShape::new(order.iter().map(|&o| shape.dims()[o]).collect::<Vec<_>>())?;
    let map: Vec<usize> = (0..shape.total())
        .map(|i| {
            let d = shape.digits(i);
            let nd: Vec<usize> = order.iter().map(|&o| d[o]).collect();
            new_shape.index(&nd)
        })
        .collect();
    let n = shape.total();
    let mut out = CMatrix::zeros(n, n);
    for r in 0..n {
        for c in 0..n {
            out[(map[r], map[c])] = a.matrix[(r, c)];
        }
    }
    Ok(HermitianOperator { shape: new_shape, matrix: out })
}

pub fn eigh(a: &HermitianOperator) -> Result<EigenDecomposition> {
    jacobi_eigh(&a.matrix, DEFAULT_MAX_SWEEPS)
}

/// Sum of singular values; for Hermitian input the sum of `|λ|`.
pub fn trace_norm(a: &HermitianOperator) -> Result<f64> {
    Ok(eigh(a)?.eigenvalues.iter().map(|x| x.abs()).sum())
}

/// Largest singular value; for Hermitian input `max |λ|`.
pub fn spectral_norm(a: &HermitianOperator) -> Result<f64> {
    let e = eigh(a)?;
    Ok(e.max().abs().max(e.min().abs()))
}

/// `Tr(a* b)`, real for Hermitian arguments.
pub fn hs_inner(a: &HermitianOperator, b: &HermitianOperator) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: b.dim() });
    }
    Ok(a.matrix.as_slice().iter().zip(b.matrix.as_slice()).map(|(x, y)| (x.conj() * y).re).sum())
}

/// `Tr(a* b)` against an arbitrary (not necessarily Hermitian) matrix, such
/// as a rank-one coherence `|x><y|`.
pub fn hs_inner_matrix(a: &HermitianOperator, b: &CMatrix) -> Result<C64> {
    if b.rows() != a.dim() || b.cols() != a.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: b.rows() });
    }
    Ok(a.matrix.as_slice().iter().zip(b.as_slice()).map(|(x, y)| x.conj() * y).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::examples::{bell_psi_plus, two_qubit_example};

    fn qubit() -> MultipartiteShape {
        MultipartiteShape::single(2).unwrap()
    }

    fn two_qubits() -> MultipartiteShape {
        MultipartiteShape::new(alloc::vec![2, 2]).unwrap()
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut m = CMatrix::identity(2);
        m[(0, 1)] = C64::new(1.0, 0.0);
        assert!(matches!(HermitianOperator::new(qubit(), m), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn absorbs_float_noise() {
        let mut m = CMatrix::identity(2);
        m[(0, 1)] = C64::new(0.5, 0.0);
        m[(1, 0)] = C64::new(0.5 + 1e-13, 0.0);
        let h = HermitianOperator::new(qubit(), m).unwrap();
        assert_eq!(h.matrix().hermitian_defect(), 0.0);
    }

    #[test]
    fn rejects_wrong_size() {
        assert!(HermitianOperator::new(two_qubits(), CMatrix::identity(3)).is_err());
    }

    #[test]
    fn identity_tensor_identity() {
        let i2 = HermitianOperator::identity(qubit());
        let i4 = tensor(&i2, &i2).unwrap();
        assert_eq!(i4.shape().dims(), &[2, 2]);
        assert_eq!(i4.matrix(), &CMatrix::identity(4));
    }

    #[test]
    fn basis_projector_tensor() {
        let p0 = PureState::basis(qubit(), 0).unwrap().density();
        let p00 = tensor(&p0, &p0).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let expect = if (i, j) == (0, 0) { 1.0 } else { 0.0 };
                assert_eq!(p00.get(i, j), C64::new(expect, 0.0));
            }
        }
    }

    #[test]
    fn tensor_respects_cap() {
        let i = HermitianOperator::identity(MultipartiteShape::single(8).unwrap());
        assert_eq!(tensor_capped(&i, &i, 32), Err(Error::Capacity { dim: 64, cap: 32 }));
    }

    #[test]
    fn partial_trace_of_product_and_bell() {
        let p0 = PureState::basis(qubit(), 0).unwrap().density();
        let p00 = tensor(&p0, &p0).unwrap();
        assert_eq!(partial_trace(&p00, &[0]).unwrap().matrix(), p0.matrix());

        let bell = bell_psi_plus().density();
        let marginal = partial_trace(&bell, &[0]).unwrap();
        assert!(marginal.matrix().max_abs_diff(&CMatrix::identity(2).scale(0.5)) < 1e-15);
    }

    #[test]
    fn partial_trace_errors() {
        let i4 = HermitianOperator::identity(two_qubits());
        assert!(partial_trace(&i4, &[]).is_err());
        assert!(matches!(partial_trace(&i4, &[2]), Err(Error::SubsystemIndex { .. })));
        let full = partial_trace(&i4, &[1, 0, 1]).unwrap();
        assert_eq!(full.matrix(), i4.matrix());
    }

    #[test]
    fn partial_transpose_swaps_second_factor() {
        // |0 1><1 0| -> |0 0><1 1| on subsystem 1.
        let s = two_qubits();
        let mut m = CMatrix::zeros(4, 4);
        m[(1, 2)] = C64::new(1.0, 0.0);
        m[(2, 1)] = C64::new(1.0, 0.0);
        let a = HermitianOperator::new(s, m).unwrap();
        let t = partial_transpose(&a, 1).unwrap();
        assert_eq!(t.get(0, 3), C64::new(1.0, 0.0));
        assert_eq!(t.get(3, 0), C64::new(1.0, 0.0));
        assert_eq!(t.get(1, 2), C64::new(0.0, 0.0));
        assert_eq!(partial_transpose(&HermitianOperator::identity(two_qubits()), 1).unwrap().matrix(), &CMatrix::identity(4));
        assert!(partial_transpose(&a, 2).is_err());
    }

    #[test]
    fn two_qubit_spectrum() {
        let c = two_qubit_example();
        let e = eigh(&c).unwrap();
        let expect = [0.5, 0.5, 0.0, 0.0];
        for (x, y) in e.eigenvalues.iter().zip(expect) {
            assert!((x - y).abs() < 1e-12, "{x} vs {y}");
        }
        assert!((spectral_norm(&c).unwrap() - 0.5).abs() < 1e-12);
        let cc = tensor(&c, &c).unwrap();
        assert!((spectral_norm(&cc).unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn two_qubit_partial_transpose_min_eigenvalue() {
        let c = two_qubit_example();
        let expect = (1.0 - libm::sqrt(2.0)) / 4.0;
        for cut in 0..2 {
            let min = partial_transpose(&c, cut).unwrap().min_eigenvalue().unwrap();
            assert!((min - expect).abs() < 1e-12, "cut {cut}: {min}");
        }
    }

    #[test]
    fn norms_of_simple_operators() {
        let z = HermitianOperator::from_real_diagonal(qubit(), &[1.0, -1.0]).unwrap();
        assert!((trace_norm(&z).unwrap() - 2.0).abs() < 1e-15);
        assert!((spectral_norm(&z).unwrap() - 1.0).abs() < 1e-15);
        let id = HermitianOperator::identity(MultipartiteShape::single(5).unwrap());
        assert!((spectral_norm(&id).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn hs_inner_two_qubit_contradiction_values() {
        let c = two_qubit_example();
        let s = two_qubits();
        let p11 = PureState::basis(s.clone(), 3).unwrap().density();
        assert_eq!(hs_inner(&c, &p11).unwrap(), 0.0);
        let mut coherence = CMatrix::zeros(4, 4);
        coherence[(1, 2)] = C64::new(1.0, 0.0);
        let v = hs_inner_matrix(&c, &coherence).unwrap();
        assert!((v - C64::new(0.25, 0.0)).norm() < 1e-15);
        let id = HermitianOperator::identity(s);
        assert!(hs_inner(&c, &HermitianOperator::identity(qubit())).is_err());
        assert!((hs_inner(&id, &c).unwrap() - c.trace()).abs() < 1e-15);
    }

    #[test]
    fn pure_state_validation() {
        let s = qubit();
        assert!(PureState::new(s.clone(), alloc::vec![C64::new(1.0, 0.0), C64::new(1.0, 0.0)]).is_err());
        assert!(PureState::normalized(s.clone(), alloc::vec![C64::new(0.0, 0.0); 2]).is_err());
        let plus = PureState::normalized(s, alloc::vec![C64::new(1.0, 0.0), C64::new(1.0, 0.0)]).unwrap();
        assert!((plus.fidelity(&plus) - 1.0).abs() < 1e-15);
    }
}
