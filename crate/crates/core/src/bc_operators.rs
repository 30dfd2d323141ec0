//! Control operator `W^T`, connecting operator `C^T` and the admissibility
//! test for response vectors.

use thiserror::Error;

use crate::dynamics::{goursat_kernel, DynamicsError, ResponseVector};
use crate::jacobi::JacobiSpec;
use crate::linalg::{sigma_ratio, CMatrix};
use crate::c64;

/// Relative singular-value threshold below which a matrix counts as singular.
pub const DEFAULT_SINGULAR_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BcError {
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("C^{size} needs r_0..r_{}, only {got} response entries given", 2 * size - 2)]
    TooFewResponseEntries { size: usize, got: usize },
    #[error("size must be positive")]
    ZeroSize,
}

/// Matrix of `f -> (u^f[1, T], ..., u^f[T, T])`.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlMatrix {
    pub entries: CMatrix,
}

impl ControlMatrix {
    pub fn size(&self) -> usize {
        self.entries.nrows()
    }
}

/// Complex symmetric connecting matrix `C^T`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectingMatrix {
    pub entries: CMatrix,
}

impl ConnectingMatrix {
    pub fn size(&self) -> usize {
        self.entries.nrows()
    }

    /// Exact check of `C^T = C`.
    pub fn is_complex_symmetric(&self) -> bool {
        self.entries == self.entries.transpose()
    }
}

pub fn control_matrix(spec: &JacobiSpec, size: usize) -> Result<ControlMatrix, BcError> {
    if size == 0 {
        return Err(BcError::ZeroSize);
    }
    if spec.len() < size {
        return Err(DynamicsError::InsufficientCoefficients {
            horizon: size,
            needed: size,
            available: spec.len(),
        }
        .into());
    }
    let kernel = goursat_kernel(spec, size - 1)?;
    let mut entries = CMatrix::zeros(size, size);
    // row n - 1 <-> u[n, T]; column j <-> f_j
    for n in 1..=size {
        entries[(n - 1, size - n)] += kernel.product(n).expect("n <= spec length");
        for s in n..size {
            let j = size - 1 - s;
            entries[(n - 1, j)] += kernel.w(n, s).expect("inside the kernel cone");
        }
    }
    Ok(ControlMatrix { entries })
}

/// `C^T` from the response vector:
/// `C_ij = a_0 sum_{k=0}^{T - max(i,j)} r_{|i-j| + 2k}` (1-based), `a_0 = r_0`.
pub fn connecting_from_response(r: &ResponseVector, size: usize) -> Result<ConnectingMatrix, BcError> {
    if size == 0 {
        return Err(BcError::ZeroSize);
    }
    if r.len() + 1 < 2 * size {
        return Err(BcError::TooFewResponseEntries { size, got: r.len() });
    }
    let a0 = r.r[0];
    let entries = CMatrix::from_fn(size, size, |i0, j0| {
        let (i, j) = (i0 + 1, j0 + 1);
        let offset = i.abs_diff(j);
        let mut sum = c64(0.0, 0.0);
        for k in 0..=size - i.max(j) {
            sum += r.r[offset + 2 * k];
        }
        a0 * sum
    });
    Ok(ConnectingMatrix { entries })
}

/// `C^T = W^T W`: the matrix of `(C f, g) = (W f, W_# g)` with `W_# = conj(W)`.
pub fn connecting_from_gram(spec: &JacobiSpec, size: usize) -> Result<ConnectingMatrix, BcError> {
    let w = control_matrix(spec, size)?.entries;
    let entries = w.transpose() * &w;
    // the product is symmetric only up to rounding; mirror the upper triangle
    let entries = CMatrix::from_fn(size, size, |i, j| {
        if i <= j {
            entries[(i, j)]
        } else {
            entries[(j, i)]
        }
    });
    Ok(ConnectingMatrix { entries })
}

/// Conditioning of one nested minor `C^{T-k}`.
#[derive(Debug, Clone, PartialEq)]
pub struct MinorCheck {
    pub k: usize,
    pub size: usize,
    pub sigma_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Admissibility {
    pub tol: f64,
    pub checks: Vec<MinorCheck>,
    /// First `k` (in order `0, 1, ...`) whose `C^{T-k}` is numerically singular.
    pub first_failure: Option<usize>,
}

impl Admissibility {
    pub fn is_admissible(&self) -> bool {
        self.first_failure.is_none()
    }

    /// Smallest `sigma_ratio / tol` over all minors; below 1 means rejected.
    pub fn margin(&self) -> f64 {
        self.checks
            .iter()
            .map(|c| c.sigma_ratio / self.tol)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn failing_check(&self) -> Option<&MinorCheck> {
        self.first_failure.map(|k| &self.checks[k])
    }
}

/// `r_0..r_{2T-2}` is a response vector iff every `C^{T-k}`, `k = 0..T-1`,
/// is nonsingular. Singular means `sigma_min <= tol * sigma_max`.
pub fn check_admissibility(r: &ResponseVector, size: usize, tol: f64) -> Result<Admissibility, BcError> {
    if size == 0 {
        return Err(BcError::ZeroSize);
    }
    if r.len() + 1 < 2 * size {
        return Err(BcError::TooFewResponseEntries { size, got: r.len() });
    }
    let mut checks = Vec::with_capacity(size);
    let mut first_failure = None;
    for k in 0..size {
        let m = size - k;
        let c = connecting_from_response(r, m)?;
        let ratio = sigma_ratio(&c.entries);
        if ratio <= tol && first_failure.is_none() {
            first_failure = Some(k);
        }
        checks.push(MinorCheck {
            k,
            size: m,
            sigma_ratio: ratio,
        });
    }
    Ok(Admissibility {
        tol,
        checks,
        first_failure,
    })
}
