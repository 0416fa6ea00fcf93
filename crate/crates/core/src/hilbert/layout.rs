use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};

/// Largest tensor-product dimension the dense representation accepts
/// (three chain qubits plus ten environment qubits).
pub const MAX_DIM: usize = 8192;

/// One labelled tensor factor.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Factor {
    pub label: String,
    pub dim: usize,
}

/// Ordered list of labelled tensor factors.
///
/// The first factor is the most significant digit of a basis index, so
/// `|x⟩ ⊗ |y⟩` lives at index `x * dim(y) + y`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SpaceLayout {
    factors: Vec<Factor>,
    total_dim: usize,
}

impl SpaceLayout {
    pub fn new<I, S>(factors: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, usize)>,
        S: Into<String>,
    {
        let factors: Vec<Factor> = factors
            .into_iter()
            .map(|(label, dim)| Factor {
                label: label.into(),
                dim,
            })
            .collect();
        Self::from_factors(factors)
    }

    /// Layout made of qubit factors with the given labels.
    pub fn qubits<I, S>(labels: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self::new(labels.into_iter().map(|l| (l, 2)))
    }

    fn from_factors(factors: Vec<Factor>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::EmptyLayout);
        }
        let mut total_dim = 1usize;
        for (i, f) in factors.iter().enumerate() {
            if f.dim != 2 {
                return Err(Error::NonQubitFactor {
                    label: f.label.clone(),
                    dim: f.dim,
                });
            }
            if factors[..i].iter().any(|g| g.label == f.label) {
                return Err(Error::DuplicateLabel(f.label.clone()));
            }
            total_dim *= f.dim;
            if total_dim > MAX_DIM {
                return Err(Error::TooLarge {
                    dim: total_dim,
                    max: MAX_DIM,
                });
            }
        }
        Ok(Self { factors, total_dim })
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.factors.iter().map(|f| f.label.as_str())
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn total_dim(&self) -> usize {
        self.total_dim
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.factors.iter().position(|f| f.label == label)
    }

    pub fn contains(&self, label: &str) -> bool {
        self.position(label).is_some()
    }

    pub(crate) fn require(&self, label: &str) -> Result<usize> {
        self.position(label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    /// Layout with `other`'s factors appended after ours.
    pub fn concat(&self, other: &SpaceLayout) -> Result<Self> {
        let mut factors = self.factors.clone();
        factors.extend(other.factors.iter().cloned());
        Self::from_factors(factors)
    }

    /// Sub-layout holding `labels`, kept in this layout's factor order.
    /// Returns the sub-layout and the sorted positions of the selected factors.
    pub fn select(&self, labels: &[&str]) -> Result<(Self, Vec<usize>)> {
        if labels.is_empty() {
            return Err(Error::EmptyKeepSet);
        }
        let mut positions = Vec::with_capacity(labels.len());
        for label in labels {
            let p = self.require(label)?;
            if positions.contains(&p) {
                return Err(Error::DuplicateLabel(label.to_string()));
            }
            positions.push(p);
        }
        positions.sort_unstable();
        let factors = positions.iter().map(|&p| self.factors[p].clone()).collect();
        Ok((Self::from_factors(factors)?, positions))
    }

    fn stride(&self, pos: usize) -> usize {
        self.factors[pos + 1..].iter().map(|f| f.dim).product()
    }

    /// Bit of a flat index that holds qubit factor `pos`.
    pub(crate) fn qubit_mask(&self, pos: usize) -> usize {
        self.stride(pos)
    }

    /// Basis value of factor `pos` inside the flat basis index `index`.
    pub fn digit(&self, index: usize, pos: usize) -> usize {
        (index / self.stride(pos)) % self.factors[pos].dim
    }

    /// For every flat index, its index within the `selected` factors (in the
    /// order given) and within the remaining factors (in layout order).
    pub(crate) fn split_indices(&self, selected: &[usize]) -> (Vec<usize>, Vec<usize>) {
        let strides: Vec<usize> = (0..self.len()).map(|p| self.stride(p)).collect();
        let rest: Vec<usize> = (0..self.len()).filter(|p| !selected.contains(p)).collect();
        let mut sel_idx = Vec::with_capacity(self.total_dim);
        let mut rest_idx = Vec::with_capacity(self.total_dim);
        for index in 0..self.total_dim {
            let digit = |p: usize| (index / strides[p]) % self.factors[p].dim;
            let s = selected
                .iter()
                .fold(0, |acc, &p| acc * self.factors[p].dim + digit(p));
            let r = rest
                .iter()
                .fold(0, |acc, &p| acc * self.factors[p].dim + digit(p));
            sel_idx.push(s);
            rest_idx.push(r);
        }
        (sel_idx, rest_idx)
    }
}

impl fmt::Display for SpaceLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, factor) in self.factors.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", factor.label)?;
        }
        write!(f, ")")
    }
}
