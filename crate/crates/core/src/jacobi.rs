//! Complex Jacobi coefficient model.
//!
//! A [`JacobiSpec`] holds the boundary coupling `a_0`, the off-diagonal
//! entries `a_1..a_{N-1}` and the diagonal `b_1..b_N`. Storage is 0-based:
//! `a[k - 1]` is the coefficient written `a_k` in the 1-based notation used in
//! the docs, and `b[n - 1]` is `b_n`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::{is_finite, ComplexScalar};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum JacobiError {
    /// `index` is 1-based; index 0 is the boundary coupling `a_0`.
    #[error("coefficient a_{index} is zero (complex Jacobi matrices need a_k != 0)")]
    ZeroCoefficient { index: usize },
    #[error("length mismatch: {off_diagonal} off-diagonal entries need {expected} diagonal entries, got {diagonal}")]
    LengthMismatch {
        off_diagonal: usize,
        diagonal: usize,
        expected: usize,
    },
    #[error("non-finite entry in {field}")]
    NonFiniteEntry { field: &'static str },
    #[error("requested size {requested} exceeds the {available} diagonal entries available")]
    SizeExceedsSpec { requested: usize, available: usize },
    #[error("empty diagonal: a Jacobi spec needs at least b_1")]
    Empty,
}

/// Coefficients of the complex Jacobi matrix and the boundary coupling `a_0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JacobiSpec {
    pub a0: ComplexScalar,
    /// `a_1..a_{N-1}`
    pub a: Vec<ComplexScalar>,
    /// `b_1..b_N`
    pub b: Vec<ComplexScalar>,
}

impl JacobiSpec {
    /// Builds and validates a spec.
    pub fn new(
        a0: ComplexScalar,
        a: Vec<ComplexScalar>,
        b: Vec<ComplexScalar>,
    ) -> Result<Self, JacobiError> {
        let spec = Self { a0, a, b };
        validate(&spec)?;
        Ok(spec)
    }

    /// Number of diagonal entries `N`.
    pub fn len(&self) -> usize {
        self.b.len()
    }

    pub fn is_empty(&self) -> bool {
        self.b.is_empty()
    }

    /// `a_k` in 1-based notation, with `a_0` the boundary coupling.
    pub fn a_at(&self, k: usize) -> ComplexScalar {
        if k == 0 {
            self.a0
        } else {
            self.a[k - 1]
        }
    }

    /// `b_n` in 1-based notation.
    pub fn b_at(&self, n: usize) -> ComplexScalar {
        self.b[n - 1]
    }

    /// Products `P_n = a_0 a_1 ... a_{n-1}` for `n = 1..=max_n`, returned
    /// 0-based (`out[n - 1] = P_n`).
    pub(crate) fn coupling_products(&self, max_n: usize) -> Vec<ComplexScalar> {
        let mut out = Vec::with_capacity(max_n);
        let mut acc = self.a0;
        for n in 1..=max_n {
            if n > 1 {
                acc *= self.a_at(n - 1);
            }
            out.push(acc);
        }
        out
    }

    /// Spec of the conjugate matrix, used by the auxiliary system.
    pub fn conjugate(&self) -> Self {
        Self {
            a0: self.a0.conj(),
            a: self.a.iter().map(|z| z.conj()).collect(),
            b: self.b.iter().map(|z| z.conj()).collect(),
        }
    }

    /// The same spec with `a_k` replaced by `-a_k` (1-based `k >= 1`).
    pub fn with_flipped_sign(&self, k: usize) -> Self {
        let mut out = self.clone();
        out.a[k - 1] = -out.a[k - 1];
        out
    }

    /// Leading `n`-coefficient prefix, keeping `a_0`.
    pub fn prefix(&self, n: usize) -> Result<Self, JacobiError> {
        if n == 0 {
            return Err(JacobiError::Empty);
        }
        if n > self.len() {
            return Err(JacobiError::SizeExceedsSpec {
                requested: n,
                available: self.len(),
            });
        }
        Ok(Self {
            a0: self.a0,
            a: self.a[..n - 1].to_vec(),
            b: self.b[..n].to_vec(),
        })
    }
}

pub fn validate(spec: &JacobiSpec) -> Result<(), JacobiError> {
    if spec.b.is_empty() {
        return Err(JacobiError::Empty);
    }
    if spec.b.len() != spec.a.len() + 1 {
        return Err(JacobiError::LengthMismatch {
            off_diagonal: spec.a.len(),
            diagonal: spec.b.len(),
            expected: spec.a.len() + 1,
        });
    }
    if !is_finite(spec.a0) {
        return Err(JacobiError::NonFiniteEntry { field: "a0" });
    }
    if !spec.a.iter().copied().all(is_finite) {
        return Err(JacobiError::NonFiniteEntry { field: "a" });
    }
    if !spec.b.iter().copied().all(is_finite) {
        return Err(JacobiError::NonFiniteEntry { field: "b" });
    }
    if spec.a0 == ComplexScalar::new(0.0, 0.0) {
        return Err(JacobiError::ZeroCoefficient { index: 0 });
    }
    if let Some(pos) = spec.a.iter().position(|z| *z == ComplexScalar::new(0.0, 0.0)) {
        return Err(JacobiError::ZeroCoefficient { index: pos + 1 });
    }
    Ok(())
}

/// Leading `n x n` block `A^n` of the Jacobi matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteJacobiMatrix {
    entries: DMatrix<ComplexScalar>,
}

impl FiniteJacobiMatrix {
    pub fn size(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<ComplexScalar> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<ComplexScalar> {
        self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> ComplexScalar {
        self.entries[(i, j)]
    }
}

pub fn truncate(spec: &JacobiSpec, n: usize) -> Result<FiniteJacobiMatrix, JacobiError> {
    validate(spec)?;
    if n == 0 {
        return Err(JacobiError::Empty);
    }
    if n > spec.len() {
        return Err(JacobiError::SizeExceedsSpec {
            requested: n,
            available: spec.len(),
        });
    }
    let mut entries = DMatrix::zeros(n, n);
    for i in 0..n {
        entries[(i, i)] = spec.b[i];
        if i + 1 < n {
            entries[(i, i + 1)] = spec.a[i];
            entries[(i + 1, i)] = spec.a[i];
        }
    }
    Ok(FiniteJacobiMatrix { entries })
}
