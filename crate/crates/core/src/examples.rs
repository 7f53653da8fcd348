//! Named operators used across tests, docs and the CLI's bundled inputs.

use crate::matrix::{CMatrix, C64};
use crate::operator::{HermitianOperator, PureState};
use crate::shape::MultipartiteShape;

fn two_qubits() -> MultipartiteShape {
    MultipartiteShape::new(alloc::vec![2, 2]).expect("valid shape")
}

/// `|Ψ+> = (|01> + |10>)/√2`.
pub fn bell_psi_plus() -> PureState {
    let h = core::f64::consts::FRAC_1_SQRT_2;
    let z = C64::new(0.0, 0.0);
    PureState::new(two_qubits(), alloc::vec![z, C64::new(h, 0.0), C64::new(h, 0.0), z]).expect("unit vector")
}

/// `C = ½|00><00| + ½|Ψ+><Ψ+|`: PPT-violating, spectral norm ½, attained
/// by the product state `|00>`.
pub fn two_qubit_example() -> HermitianOperator {
    let mut m = CMatrix::zeros(4, 4);
    m[(0, 0)] = C64::new(0.5, 0.0);
    for (i, j) in [(1, 1), (1, 2), (2, 1), (2, 2)] {
        m[(i, j)] = C64::new(0.25, 0.0);
    }
    HermitianOperator::new(two_qubits(), m).expect("hermitian")
}
