//! Cyclic Jacobi eigensolver for dense complex Hermitian matrices.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::{CMatrix, C64};

/// Default sweep cap. Small Hermitian problems converge in well under 20.
pub const DEFAULT_MAX_SWEEPS: usize = 10_000;

/// Eigenvalues in descending order with matching orthonormal eigenvector columns.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
}

impl EigenDecomposition {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    pub fn min(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    pub fn vector(&self, k: usize) -> Vec<C64> {
        (0..self.eigenvectors.rows()).map(|i| self.eigenvectors[(i, k)]).collect()
    }

    /// `V Λ V*`.
    pub fn reconstruct(&self) -> CMatrix {
        let n = self.eigenvalues.len();
        let scaled = CMatrix::from_fn(n, n, |i, k| self.eigenvectors[(i, k)] * self.eigenvalues[k]);
        scaled.matmul(&self.eigenvectors.adjoint())
    }

    /// Largest deviation of `V* V` from the identity.
    pub fn orthonormality_defect(&self) -> f64 {
        let g = self.eigenvectors.adjoint().matmul(&self.eigenvectors);
        g.max_abs_diff(&CMatrix::identity(g.rows()))
    }
}

/// Diagonalizes a Hermitian matrix. Only the upper triangle and diagonal
/// real parts are trusted; the input should already be Hermitian.
pub fn jacobi_eigh(m: &CMatrix, max_sweeps: usize) -> Result<EigenDecomposition> {
    assert!(m.is_square(), "eigensolver needs a square matrix");
    let n = m.rows();
    let mut a = m.clone();
    a.symmetrize();
    let mut v = CMatrix::identity(n);

    let scale = a.frobenius_norm();
    if scale == 0.0 || n <= 1 {
        return Ok(sorted(a, v));
    }
    let stop = 1e-14 * scale;
    let skip = 1e-18 * scale;

    let mut converged = false;
    for _ in 0..max_sweeps {
        if off_diagonal(&a) <= stop {
            converged = true;
            break;
        }
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                let mag = apq.norm();
                if mag <= skip {
                    continue;
                }
                rotated = true;
                rotate(&mut a, &mut v, p, q, apq, mag);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged && off_diagonal(&a) > stop {
        return Err(Error::NoConvergence { sweeps: max_sweeps });
    }
    Ok(sorted(a, v))
}

fn off_diagonal(a: &CMatrix) -> f64 {
    let n = a.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            s += 2.0 * a[(i, j)].norm_sqr();
        }
    }
    libm::sqrt(s)
}

/// Applies `A <- U* A U`, `V <- V U` where `U = diag(1, e^{-iθ}) · J(c, s)`
/// on the `(p, q)` plane annihilates `A[p][q] = mag · e^{iθ}`.
fn rotate(a: &mut CMatrix, v: &mut CMatrix, p: usize, q: usize, apq: C64, mag: f64) {
    let n = a.rows();
    let phase = apq / mag;
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    let theta = (aqq - app) / (2.0 * mag);
    let t = if theta == 0.0 {
        1.0
    } else {
        theta.signum() / (theta.abs() + libm::sqrt(theta * theta + 1.0))
    };
    let c = 1.0 / libm::sqrt(t * t + 1.0);
    let s = t * c;

    let upp = C64::new(c, 0.0);
    let upq = C64::new(s, 0.0);
    let uqp = -phase.conj() * s;
    let uqq = phase.conj() * c;

    for k in 0..n {
        let (x, y) = (a[(k, p)], a[(k, q)]);
        a[(k, p)] = x * upp + y * uqp;
        a[(k, q)] = x * upq + y * uqq;
    }
    for k in 0..n {
        let (x, y) = (a[(p, k)], a[(q, k)]);
        a[(p, k)] = upp.conj() * x + uqp.conj() * y;
        a[(q, k)] = upq.conj() * x + uqq.conj() * y;
    }
    for k in 0..n {
        let (x, y) = (v[(k, p)], v[(k, q)]);
        v[(k, p)] = x * upp + y * uqp;
        v[(k, q)] = x * upq + y * uqq;
    }
    a[(p, q)] = C64::new(0.0, 0.0);
    a[(q, p)] = C64::new(0.0, 0.0);
    a[(p, p)] = C64::new(app - t * mag, 0.0);
    a[(q, q)] = C64::new(aqq + t * mag, 0.0);
}

fn sorted(a: CMatrix, v: CMatrix) -> EigenDecomposition {
    let n = a.rows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].re.total_cmp(&a[(i, i)].re));
    let eigenvalues = order.iter().map(|&i| a[(i, i)].re).collect();
    let eigenvectors = CMatrix::from_fn(n, n, |r, k| v[(r, order[k])]);
    EigenDecomposition { eigenvalues, eigenvectors }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_closed_form() {
        // [[1, i], [-i, 1]] has eigenvalues 2 and 0.
        let m = CMatrix::from_vec(
            2,
            2,
            alloc::vec![C64::new(1.0, 0.0), C64::new(0.0, 1.0), C64::new(0.0, -1.0), C64::new(1.0, 0.0)],
        );
        let e = jacobi_eigh(&m, DEFAULT_MAX_SWEEPS).unwrap();
        assert!((e.eigenvalues[0] - 2.0).abs() < 1e-14);
        assert!(e.eigenvalues[1].abs() < 1e-14);
        assert!(e.reconstruct().max_abs_diff(&m) < 1e-14);
        assert!(e.orthonormality_defect() < 1e-14);
    }

    #[test]
    fn zero_and_scalar_matrices() {
        let e = jacobi_eigh(&CMatrix::zeros(3, 3), DEFAULT_MAX_SWEEPS).unwrap();
        assert_eq!(e.eigenvalues, alloc::vec![0.0; 3]);
        let e = jacobi_eigh(&CMatrix::identity(5), DEFAULT_MAX_SWEEPS).unwrap();
        assert!(e.eigenvalues.iter().all(|&x| x == 1.0));
    }

    #[test]
    fn sweep_cap_reports_failure() {
        let m = CMatrix::from_fn(6, 6, |i, j| C64::new((i * j) as f64 + 1.0, if i < j { 0.3 } else if i > j { -0.3 } else { 0.0 }));
        assert_eq!(jacobi_eigh(&m, 0), Err(Error::NoConvergence { sweeps: 0 }));
    }
}
