//! Moments, Hankel matrices and the integer matrix `Λ` linking moments to
//! response entries: `r_t = sum_j Λ_tj s_j`, where row `t` of `Λ` holds the
//! monomial coefficients of `T_{t+1}`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bc_operators::ConnectingMatrix;
use crate::dynamics::ResponseVector;
use crate::linalg::{max_abs_diff, CMatrix};
use crate::{c64, ComplexScalar};

/// Largest order for which `Λ` is built; binomials stay well inside `i64`.
pub const MAX_LAMBDA_ORDER: usize = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MomentError {
    #[error("need at least {needed} moments, got {got}")]
    TooFewMoments { needed: usize, got: usize },
    #[error("order {order} exceeds the supported maximum {max}")]
    OrderTooLarge { order: usize, max: usize },
}

/// `s_0, s_1, ..., s_{L-1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentSequence {
    pub s: Vec<ComplexScalar>,
}

impl MomentSequence {
    pub fn new(s: Vec<ComplexScalar>) -> Self {
        Self { s }
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    pub fn as_slice(&self) -> &[ComplexScalar] {
        &self.s
    }

    pub fn prefix(&self, len: usize) -> Self {
        Self::new(self.s[..len.min(self.s.len())].to_vec())
    }
}

/// `entries[i][j] = s_{2n-2-i-j}`: `s_{2n-2}` top left, `s_0` bottom right.
#[derive(Debug, Clone, PartialEq)]
pub struct HankelMatrix {
    pub n: usize,
    pub entries: CMatrix,
}

pub fn hankel(s: &MomentSequence, n: usize) -> Result<HankelMatrix, MomentError> {
    let needed = (2 * n).saturating_sub(1);
    if s.len() < needed {
        return Err(MomentError::TooFewMoments { needed, got: s.len() });
    }
    let entries = CMatrix::from_fn(n, n, |i, j| s.s[2 * n - 2 - i - j]);
    Ok(HankelMatrix { n, entries })
}

/// Unit lower triangular integer matrix; `(i, j)` vanishes for odd `i + j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LambdaMatrix {
    pub n: usize,
    pub entries: Vec<Vec<i64>>,
}

impl LambdaMatrix {
    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.entries[i][j]
    }

    pub fn to_complex(&self) -> CMatrix {
        CMatrix::from_fn(self.n, self.n, |i, j| c64(self.entries[i][j] as f64, 0.0))
    }

    /// `J Λ J`.
    pub fn exchanged(&self) -> LambdaMatrix {
        let n = self.n;
        let entries = (0..n)
            .map(|i| (0..n).map(|j| self.entries[n - 1 - i][n - 1 - j]).collect())
            .collect();
        LambdaMatrix { n, entries }
    }
}

fn binomial(n: u64, k: u64) -> i64 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * u128::from(n - i) / u128::from(i + 1);
    }
    i64::try_from(acc).expect("binomial fits in i64 for supported orders")
}

pub fn lambda_matrix(n: usize) -> Result<LambdaMatrix, MomentError> {
    if n > MAX_LAMBDA_ORDER {
        return Err(MomentError::OrderTooLarge {
            order: n,
            max: MAX_LAMBDA_ORDER,
        });
    }
    let entries = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if j > i || (i + j) % 2 == 1 {
                        return 0;
                    }
                    let h = (i + j) / 2;
                    let sign = if (h + j) % 2 == 0 { 1 } else { -1 };
                    sign * binomial(h as u64, j as u64)
                })
                .collect()
        })
        .collect();
    Ok(LambdaMatrix { n, entries })
}

/// Exchange matrix `J`.
pub fn exchange_matrix(n: usize) -> CMatrix {
    CMatrix::from_fn(n, n, |i, j| if i + j + 1 == n { c64(1.0, 0.0) } else { c64(0.0, 0.0) })
}

/// `r = Λ s`.
pub fn moments_to_response(s: &MomentSequence) -> Result<ResponseVector, MomentError> {
    let lambda = lambda_matrix(s.len())?;
    let r = (0..s.len())
        .map(|i| {
            (0..=i)
                .filter(|j| lambda.entries[i][*j] != 0)
                .map(|j| s.s[j] * lambda.entries[i][j] as f64)
                .fold(c64(0.0, 0.0), |acc, z| acc + z)
        })
        .collect();
    Ok(ResponseVector::new(r))
}

/// `s = Λ^{-1} r` by forward substitution.
pub fn response_to_moments(r: &ResponseVector) -> Result<MomentSequence, MomentError> {
    let lambda = lambda_matrix(r.len())?;
    let mut s: Vec<ComplexScalar> = Vec::with_capacity(r.len());
    for i in 0..r.len() {
        let known = (0..i)
            .filter(|j| lambda.entries[i][*j] != 0)
            .map(|j| s[j] * lambda.entries[i][j] as f64)
            .fold(c64(0.0, 0.0), |acc, z| acc + z);
        s.push(r.r[i] - known);
    }
    Ok(MomentSequence::new(s))
}

/// `max |C - s_0 Λ̃ S Λ̃^T|` with `Λ̃ = J Λ J`.
pub fn verify_factorization(c: &ConnectingMatrix, s: &MomentSequence) -> Result<f64, MomentError> {
    let n = c.size();
    let big_s = hankel(s, n)?.entries;
    let lt = lambda_matrix(n)?.exchanged().to_complex();
    let rhs = (&lt * big_s * lt.transpose()) * s.s[0];
    Ok(max_abs_diff(&c.entries, &rhs))
}
