use serde::Serialize;

use crate::error::{Error, Result};

use super::layout::SpaceLayout;
use super::state::{hermitize, same_layout, QuantumState, StateVector};
use super::{hermitian_deviation, CMatrix, C64};

/// Hermiticity tolerance for matrices handed to [`spectral_decompose`].
pub const INPUT_HERMITIAN_TOL: f64 = 1e-10;
/// Relative width within which eigenvalues share one spectral entry.
pub const GROUPING_TOL: f64 = 1e-8;
/// Default residual-norm tolerance for [`is_eigenstate`].
pub const DEFAULT_EIGEN_TOL: f64 = 1e-9;
/// Largest imaginary part of an expectation value that is treated as rounding.
pub const EXPECTATION_IMAG_TOL: f64 = 1e-10;

/// One eigenvalue together with the orthogonal projector onto its eigenspace.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralEntry {
    pub eigenvalue: f64,
    pub projector: CMatrix,
    pub multiplicity: usize,
}

/// Hermitian operator with its grouped spectral decomposition.
#[derive(Clone, Debug, PartialEq)]
pub struct Observable {
    layout: SpaceLayout,
    matrix: CMatrix,
    spectrum: Vec<SpectralEntry>,
}

impl Observable {
    pub fn new(matrix: CMatrix, layout: &SpaceLayout) -> Result<Self> {
        spectral_decompose(matrix, layout)
    }

    pub fn identity(layout: &SpaceLayout) -> Self {
        let d = layout.total_dim();
        let id = CMatrix::identity(d, d);
        Self {
            layout: layout.clone(),
            matrix: id.clone(),
            spectrum: vec![SpectralEntry {
                eigenvalue: 1.0,
                projector: id,
                multiplicity: d,
            }],
        }
    }

    pub fn layout(&self) -> &SpaceLayout {
        &self.layout
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// Spectral entries sorted by ascending eigenvalue.
    pub fn spectrum(&self) -> &[SpectralEntry] {
        &self.spectrum
    }

    /// Distinct eigenvalues with multiplicities.
    pub fn eigenvalues(&self) -> Vec<(f64, usize)> {
        self.spectrum
            .iter()
            .map(|e| (e.eigenvalue, e.multiplicity))
            .collect()
    }

    pub fn embed(&self, targets: &[&str], layout: &SpaceLayout) -> Result<Observable> {
        embed_operator(self, targets, layout)
    }
}

/// Diagonalizes a Hermitian matrix and merges numerically equal eigenvalues.
pub fn spectral_decompose(matrix: CMatrix, layout: &SpaceLayout) -> Result<Observable> {
    let dim = layout.total_dim();
    if matrix.nrows() != dim || matrix.ncols() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: matrix.nrows(),
        });
    }
    let dev = hermitian_deviation(&matrix);
    if !dev.is_finite() || dev > INPUT_HERMITIAN_TOL {
        return Err(Error::NotHermitian(dev));
    }
    let matrix = hermitize(matrix);
    let eig = matrix.clone().symmetric_eigen();

    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let mut groups: Vec<Vec<usize>> = Vec::new();
    for &k in &order {
        let lambda = eig.eigenvalues[k];
        match groups.last_mut() {
            Some(g) if {
                let head = eig.eigenvalues[g[0]];
                (lambda - head).abs() <= GROUPING_TOL * head.abs().max(1.0)
            } =>
            {
                g.push(k)
            }
            _ => groups.push(vec![k]),
        }
    }

    let spectrum = groups
        .into_iter()
        .map(|g| {
            let mut projector = CMatrix::zeros(dim, dim);
            for &k in &g {
                let v = eig.eigenvectors.column(k);
                projector += v * v.adjoint();
            }
            let eigenvalue = g.iter().map(|&k| eig.eigenvalues[k]).sum::<f64>() / g.len() as f64;
            SpectralEntry {
                eigenvalue,
                projector: hermitize(projector),
                multiplicity: g.len(),
            }
        })
        .collect();

    Ok(Observable {
        layout: layout.clone(),
        matrix,
        spectrum,
    })
}

/// Lifts `op` to `layout`: op's factors act on `targets` (in order),
/// identity on every other factor.
pub fn embed_operator(op: &Observable, targets: &[&str], layout: &SpaceLayout) -> Result<Observable> {
    let positions = target_positions(op.layout(), targets, layout)?;
    let lift = |m: &CMatrix| embed_matrix(m, &positions, layout);
    let rest = layout.total_dim() / op.layout().total_dim();
    Ok(Observable {
        layout: layout.clone(),
        matrix: lift(&op.matrix),
        spectrum: op
            .spectrum
            .iter()
            .map(|e| SpectralEntry {
                eigenvalue: e.eigenvalue,
                projector: lift(&e.projector),
                multiplicity: e.multiplicity * rest,
            })
            .collect(),
    })
}

fn target_positions(
    op_layout: &SpaceLayout,
    targets: &[&str],
    layout: &SpaceLayout,
) -> Result<Vec<usize>> {
    if targets.len() != op_layout.len() {
        return Err(Error::DimensionMismatch {
            expected: op_layout.len(),
            actual: targets.len(),
        });
    }
    let mut positions = Vec::with_capacity(targets.len());
    for (t, f) in targets.iter().zip(op_layout.factors()) {
        let p = layout.require(t)?;
        if positions.contains(&p) {
            return Err(Error::DuplicateLabel(t.to_string()));
        }
        if layout.factors()[p].dim != f.dim {
            return Err(Error::DimensionMismatch {
                expected: f.dim,
                actual: layout.factors()[p].dim,
            });
        }
        positions.push(p);
    }
    Ok(positions)
}

/// Raw-matrix version of [`embed_operator`]; `positions` are factor positions
/// in `layout` matched to the rows/cols of `m` in order.
pub(crate) fn embed_matrix(m: &CMatrix, positions: &[usize], layout: &SpaceLayout) -> CMatrix {
    let (sel, rest) = layout.split_indices(positions);
    let dim = layout.total_dim();
    CMatrix::from_fn(dim, dim, |i, j| {
        if rest[i] == rest[j] {
            m[(sel[i], sel[j])]
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// Real expectation value of `op`.
pub fn expectation<S: QuantumState + ?Sized>(state: &S, op: &Observable) -> Result<f64> {
    same_layout(state.layout(), op.layout())?;
    let z = state.expect(op.matrix());
    if z.im.abs() > EXPECTATION_IMAG_TOL {
        return Err(Error::NotHermitian(z.im.abs()));
    }
    Ok(z.re)
}

/// `Some(λ)` with `λ = ⟨ψ|G|ψ⟩` when `‖Gψ − λψ‖ ≤ tol`.
pub fn is_eigenstate(op: &Observable, state: &StateVector, tol: f64) -> Result<Option<f64>> {
    same_layout(state.layout(), op.layout())?;
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    let (lambda, residual) = eigen_residual(op.matrix(), state);
    Ok((residual <= tol).then_some(lambda))
}

/// `(⟨ψ|G|ψ⟩, ‖Gψ − ⟨G⟩ψ‖)`.
pub(crate) fn eigen_residual(g: &CMatrix, state: &StateVector) -> (f64, f64) {
    let psi = state.amplitudes();
    let g_psi = g * psi;
    let lambda = psi.dotc(&g_psi).re;
    let residual = (g_psi - psi * C64::new(lambda, 0.0)).norm();
    (lambda, residual)
}

/// Probability of one spectral group.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Outcome {
    pub eigenvalue: f64,
    pub probability: f64,
}

/// Born distribution of `op`'s eigenvalues in `state`, one entry per
/// spectral group, ascending.
pub fn outcome_distribution<S: QuantumState + ?Sized>(
    state: &S,
    op: &Observable,
) -> Result<Vec<Outcome>> {
    same_layout(state.layout(), op.layout())?;
    Ok(op
        .spectrum
        .iter()
        .map(|e| Outcome {
            eigenvalue: e.eigenvalue,
            probability: state.expect(&e.projector).re.max(0.0),
        })
        .collect())
}
