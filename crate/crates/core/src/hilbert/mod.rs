//! Dense complex linear algebra over small qubit tensor-product spaces.
//!
//! States are stored as plain amplitude vectors in the big-endian basis of
//! their [`SpaceLayout`]; operators are dense matrices on the same basis.

mod layout;
mod observable;
mod state;

pub use layout::{Factor, SpaceLayout, MAX_DIM};
pub use observable::{
    embed_operator, expectation, is_eigenstate, outcome_distribution, spectral_decompose,
    Observable, Outcome, SpectralEntry, DEFAULT_EIGEN_TOL, EXPECTATION_IMAG_TOL, GROUPING_TOL,
    INPUT_HERMITIAN_TOL,
};
pub use state::{
    partial_trace, tensor_state, DensityMatrix, QuantumState, StateVector, DENSITY_TOL, NORM_TOL,
};

pub(crate) use observable::{eigen_residual, embed_matrix};

use nalgebra::{DMatrix, DVector};

pub type C64 = num_complex::Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

pub fn sigma_x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
}

pub fn sigma_y() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO])
}

pub fn sigma_z() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE])
}

/// `|a⟩⟨b|` for basis indices `a`, `b` of a `dim`-dimensional space.
pub fn ket_bra(dim: usize, a: usize, b: usize) -> CMatrix {
    let mut m = CMatrix::zeros(dim, dim);
    m[(a, b)] = ONE;
    m
}

/// Largest entry of `|A − A†|`.
pub fn hermitian_deviation(m: &CMatrix) -> f64 {
    if m.nrows() != m.ncols() {
        return f64::INFINITY;
    }
    let n = m.nrows();
    let mut dev = 0.0f64;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}
