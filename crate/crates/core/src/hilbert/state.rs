use crate::error::{Error, Result};

use super::layout::SpaceLayout;
use super::{hermitian_deviation, CMatrix, CVector, C64};

/// Allowed deviation of a state vector's Euclidean norm from one.
pub const NORM_TOL: f64 = 1e-12;
/// Hermiticity, trace and positivity tolerance for density matrices.
pub const DENSITY_TOL: f64 = 1e-12;

/// Anything an observable can be evaluated on.
pub trait QuantumState {
    fn layout(&self) -> &SpaceLayout;

    /// `⟨ψ|A|ψ⟩` or `Tr(ρA)` for an arbitrary square matrix on this space.
    fn expect(&self, op: &CMatrix) -> C64;

    fn to_density(&self) -> DensityMatrix;

    /// Reduced state on the factors named in `keep`.
    fn restrict(&self, keep: &[&str]) -> Result<DensityMatrix>;
}

/// Normalized pure state over a qubit layout.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    layout: SpaceLayout,
    amplitudes: CVector,
}

impl StateVector {
    pub fn new(layout: SpaceLayout, amplitudes: Vec<C64>) -> Result<Self> {
        Self::from_vector(layout, CVector::from_vec(amplitudes))
    }

    pub fn from_vector(layout: SpaceLayout, amplitudes: CVector) -> Result<Self> {
        if amplitudes.len() != layout.total_dim() {
            return Err(Error::DimensionMismatch {
                expected: layout.total_dim(),
                actual: amplitudes.len(),
            });
        }
        let norm = amplitudes.norm();
        if !norm.is_finite() || (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(norm));
        }
        Ok(Self { layout, amplitudes })
    }

    /// Rescales `amplitudes` to unit norm.
    pub fn normalized(layout: SpaceLayout, amplitudes: Vec<C64>) -> Result<Self> {
        let mut v = CVector::from_vec(amplitudes);
        let norm = v.norm();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::NotNormalized(norm));
        }
        v.unscale_mut(norm);
        Self::from_vector(layout, v)
    }

    pub fn basis(layout: SpaceLayout, index: usize) -> Result<Self> {
        let dim = layout.total_dim();
        if index >= dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: index,
            });
        }
        let mut v = CVector::zeros(dim);
        v[index] = C64::new(1.0, 0.0);
        Ok(Self {
            layout,
            amplitudes: v,
        })
    }

    /// Single-qubit state `a0|0⟩ + a1|1⟩` on a factor called `label`.
    pub fn qubit(label: &str, a0: C64, a1: C64) -> Result<Self> {
        Self::new(SpaceLayout::qubits([label])?, vec![a0, a1])
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn amplitude(&self, index: usize) -> C64 {
        self.amplitudes[index]
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        same_layout(&self.layout, &other.layout)?;
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    /// Kronecker product with `other`'s factors appended.
    pub fn tensor(&self, other: &StateVector) -> Result<StateVector> {
        let layout = self.layout.concat(&other.layout)?;
        let n = other.amplitudes.len();
        let amps = CVector::from_fn(layout.total_dim(), |i, _| {
            self.amplitudes[i / n] * other.amplitudes[i % n]
        });
        Ok(Self {
            layout,
            amplitudes: amps,
        })
    }

    /// Reduced density matrix on `keep`, computed without forming `|ψ⟩⟨ψ|`.
    pub fn reduced(&self, keep: &[&str]) -> Result<DensityMatrix> {
        let (sub, positions) = self.layout.select(keep)?;
        let (keep_idx, rest_idx) = self.layout.split_indices(&positions);
        let rest_dim = self.layout.total_dim() / sub.total_dim();
        let mut m = CMatrix::zeros(sub.total_dim(), rest_dim);
        for (i, a) in self.amplitudes.iter().enumerate() {
            m[(keep_idx[i], rest_idx[i])] = *a;
        }
        let rho = &m * m.adjoint();
        DensityMatrix::new(sub, hermitize(rho))
    }

    /// Linear combination `Σ cᵢ ψᵢ`, renormalized.
    pub fn superpose(terms: &[(C64, &StateVector)]) -> Result<StateVector> {
        let first = terms
            .first()
            .ok_or_else(|| Error::InvalidParameter("empty superposition".into()))?;
        let mut v = CVector::zeros(first.1.layout.total_dim());
        for (c, s) in terms {
            same_layout(&first.1.layout, &s.layout)?;
            v.axpy(*c, &s.amplitudes, C64::new(1.0, 0.0));
        }
        let norm = v.norm();
        if norm == 0.0 {
            return Err(Error::NotNormalized(0.0));
        }
        v.unscale_mut(norm);
        Self::from_vector(first.1.layout.clone(), v)
    }
}

impl QuantumState for StateVector {
    fn layout(&self) -> &SpaceLayout {
        &self.layout
    }

    fn expect(&self, op: &CMatrix) -> C64 {
        self.amplitudes.dotc(&(op * &self.amplitudes))
    }

    fn to_density(&self) -> DensityMatrix {
        DensityMatrix {
            layout: self.layout.clone(),
            matrix: &self.amplitudes * self.amplitudes.adjoint(),
        }
    }

    fn restrict(&self, keep: &[&str]) -> Result<DensityMatrix> {
        self.reduced(keep)
    }
}

/// Kronecker product of `parts` in the given order.
pub fn tensor_state(parts: &[StateVector]) -> Result<StateVector> {
    let (first, rest) = parts
        .split_first()
        .ok_or_else(|| Error::InvalidParameter("tensor product of zero states".into()))?;
    rest.iter().try_fold(first.clone(), |acc, s| acc.tensor(s))
}

/// Hermitian, positive, trace-one operator over a qubit layout.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    layout: SpaceLayout,
    matrix: CMatrix,
}

impl DensityMatrix {
    pub fn new(layout: SpaceLayout, matrix: CMatrix) -> Result<Self> {
        let dim = layout.total_dim();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: matrix.nrows(),
            });
        }
        let dev = hermitian_deviation(&matrix);
        if dev > DENSITY_TOL {
            return Err(Error::NotHermitian(dev));
        }
        let trace = matrix.trace();
        if (trace.re - 1.0).abs() > DENSITY_TOL || trace.im.abs() > DENSITY_TOL {
            return Err(Error::InvalidDensity(format!("trace is {trace}")));
        }
        let matrix = hermitize(matrix);
        let min_eig = matrix
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        if min_eig < -DENSITY_TOL {
            return Err(Error::InvalidDensity(format!(
                "negative eigenvalue {min_eig:e}"
            )));
        }
        Ok(Self { layout, matrix })
    }

    /// Convex combination `Σ pᵢ ρᵢ`; weights must be nonnegative and sum to one.
    pub fn mixture(terms: &[(f64, DensityMatrix)]) -> Result<Self> {
        let first = terms
            .first()
            .ok_or_else(|| Error::InvalidParameter("empty mixture".into()))?;
        let dim = first.1.layout.total_dim();
        let mut m = CMatrix::zeros(dim, dim);
        for (p, rho) in terms {
            same_layout(&first.1.layout, &rho.layout)?;
            if *p < 0.0 {
                return Err(Error::InvalidParameter(format!("negative weight {p}")));
            }
            m += &rho.matrix * C64::new(*p, 0.0);
        }
        Self::new(first.1.layout.clone(), m)
    }

    pub fn layout(&self) -> &SpaceLayout {
        &self.layout
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    /// `Tr(ρ²)`.
    pub fn purity(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self
            .matrix
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .cloned()
            .collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn tensor(&self, other: &DensityMatrix) -> Result<DensityMatrix> {
        let layout = self.layout.concat(&other.layout)?;
        Ok(Self {
            layout,
            matrix: self.matrix.kronecker(&other.matrix),
        })
    }

    pub fn partial_trace(&self, keep: &[&str]) -> Result<DensityMatrix> {
        partial_trace(self, keep)
    }
}

impl QuantumState for DensityMatrix {
    fn layout(&self) -> &SpaceLayout {
        &self.layout
    }

    fn expect(&self, op: &CMatrix) -> C64 {
        // Tr(ρA) = Σ_ij ρ_ij A_ji
        self.matrix
            .iter()
            .zip(op.transpose().iter())
            .map(|(r, a)| r * a)
            .sum()
    }

    fn to_density(&self) -> DensityMatrix {
        self.clone()
    }

    fn restrict(&self, keep: &[&str]) -> Result<DensityMatrix> {
        partial_trace(self, keep)
    }
}

/// Traces out every factor not named in `keep`. The result keeps the
/// original factor order.
pub fn partial_trace(rho: &DensityMatrix, keep: &[&str]) -> Result<DensityMatrix> {
    let (sub, positions) = rho.layout.select(keep)?;
    let (keep_idx, rest_idx) = rho.layout.split_indices(&positions);
    let dim = rho.layout.total_dim();
    let mut out = CMatrix::zeros(sub.total_dim(), sub.total_dim());
    for i in 0..dim {
        for j in 0..dim {
            if rest_idx[i] == rest_idx[j] {
                out[(keep_idx[i], keep_idx[j])] += rho.matrix[(i, j)];
            }
        }
    }
    DensityMatrix::new(sub, hermitize(out))
}

pub(crate) fn same_layout(a: &SpaceLayout, b: &SpaceLayout) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::LayoutMismatch {
            left: a.to_string(),
            right: b.to_string(),
        })
    }
}

pub(crate) fn hermitize(m: CMatrix) -> CMatrix {
    let adj = m.adjoint();
    (m + adj) * C64::new(0.5, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn basis_product() {
        let a = StateVector::qubit("A", c(1.0), c(0.0)).unwrap();
        let b = StateVector::qubit("B", c(1.0), c(0.0)).unwrap();
        let ab = tensor_state(&[a, b]).unwrap();
        let want = [1.0, 0.0, 0.0, 0.0];
        for (got, w) in ab.amplitudes().iter().zip(want) {
            assert_eq!(*got, c(w));
        }
    }

    #[test]
    fn superposition_product_expands() {
        let a = StateVector::qubit("A", c(FRAC_1_SQRT_2), c(FRAC_1_SQRT_2)).unwrap();
        let b = StateVector::qubit("B", c(0.0), c(1.0)).unwrap();
        let ab = a.tensor(&b).unwrap();
        let want = [0.0, FRAC_1_SQRT_2, 0.0, FRAC_1_SQRT_2];
        for (got, w) in ab.amplitudes().iter().zip(want) {
            assert_abs_diff_eq!(got.re, w, epsilon = 1e-15);
            assert_eq!(got.im, 0.0);
        }
    }

    #[test]
    fn three_factor_product_keeps_unit_norm() {
        let s = StateVector::qubit("S", c(0.6), c(0.8)).unwrap();
        let d = StateVector::qubit("D", c(FRAC_1_SQRT_2), c(FRAC_1_SQRT_2)).unwrap();
        let o = StateVector::qubit("O", c(FRAC_1_SQRT_2), c(FRAC_1_SQRT_2)).unwrap();
        let p = tensor_state(&[s, d, o]).unwrap();
        let norm_sq: f64 = p.amplitudes().iter().map(|z| z.norm_sqr()).sum();
        assert!((norm_sq.sqrt() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn duplicate_labels_rejected() {
        let a = StateVector::qubit("A", c(1.0), c(0.0)).unwrap();
        assert_eq!(
            a.tensor(&a).unwrap_err(),
            Error::DuplicateLabel("A".into())
        );
    }

    #[test]
    fn unnormalized_state_rejected() {
        let err = StateVector::qubit("A", c(1.0), c(1.0)).unwrap_err();
        assert!(matches!(err, Error::NotNormalized(_)));
    }

    #[test]
    fn partial_trace_of_product_returns_factor() {
        let a = StateVector::qubit("A", c(0.6), C64::new(0.0, 0.8)).unwrap();
        let b = StateVector::qubit("B", c(FRAC_1_SQRT_2), c(-FRAC_1_SQRT_2)).unwrap();
        let rho_a = a.to_density();
        let rho_b = b.to_density();
        let mixed_b =
            DensityMatrix::mixture(&[(0.3, rho_b.clone()), (0.7, b.to_density())]).unwrap();
        let joint = rho_a.tensor(&mixed_b).unwrap();
        let back = joint.partial_trace(&["A"]).unwrap();
        assert!((back.matrix() - rho_a.matrix()).norm() < 1e-14);
        let back_b = joint.partial_trace(&["B"]).unwrap();
        assert!((back_b.matrix() - mixed_b.matrix()).norm() < 1e-14);
    }

    #[test]
    fn reduced_matches_partial_trace() {
        let layout = SpaceLayout::qubits(["S", "D", "O"]).unwrap();
        let amps: Vec<C64> = (0..8)
            .map(|k| C64::new((k as f64).sin() + 0.3, (k as f64 * 0.7).cos()))
            .collect();
        let psi = StateVector::normalized(layout, amps).unwrap();
        for keep in [&["S"][..], &["D", "O"], &["S", "O"], &["O"]] {
            let a = psi.reduced(keep).unwrap();
            let b = psi.to_density().partial_trace(keep).unwrap();
            assert!((a.matrix() - b.matrix()).norm() < 1e-14);
        }
    }

    #[test]
    fn empty_keep_set_rejected() {
        let psi = StateVector::qubit("A", c(1.0), c(0.0)).unwrap();
        assert_eq!(
            psi.to_density().partial_trace(&[]).unwrap_err(),
            Error::EmptyKeepSet
        );
    }

    #[test]
    fn density_validation() {
        let l = SpaceLayout::qubits(["A"]).unwrap();
        let bad_trace = CMatrix::identity(2, 2);
        assert!(matches!(
            DensityMatrix::new(l.clone(), bad_trace),
            Err(Error::InvalidDensity(_))
        ));
        let mut non_psd = CMatrix::zeros(2, 2);
        non_psd[(0, 0)] = c(1.5);
        non_psd[(1, 1)] = c(-0.5);
        assert!(matches!(
            DensityMatrix::new(l.clone(), non_psd),
            Err(Error::InvalidDensity(_))
        ));
        let mut non_herm = CMatrix::identity(2, 2) * c(0.5);
        non_herm[(0, 1)] = c(0.1);
        assert!(matches!(
            DensityMatrix::new(l, non_herm),
            Err(Error::NotHermitian(_))
        ));
    }
}
