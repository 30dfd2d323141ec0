//! Dense complex helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

use crate::{c64, ComplexScalar};

pub type CMatrix = DMatrix<ComplexScalar>;

/// Singular values in descending order.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut sv: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// `sigma_min / sigma_max`, or 0 for a zero matrix.
pub fn sigma_ratio(m: &CMatrix) -> f64 {
    let sv = singular_values(m);
    match (sv.first(), sv.last()) {
        (Some(&hi), Some(&lo)) if hi > 0.0 => lo / hi,
        _ => 0.0,
    }
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// `max |U U^* - I|`.
pub fn unitarity_residual(u: &CMatrix) -> f64 {
    let n = u.nrows();
    max_abs_diff(&(u * u.adjoint()), &CMatrix::identity(n, n))
}

/// Solves `m x = rhs` by LU with partial pivoting.
pub fn solve(m: &CMatrix, rhs: &[ComplexScalar]) -> Option<Vec<ComplexScalar>> {
    let b = DVector::from_column_slice(rhs);
    m.clone().lu().solve(&b).map(|x| x.iter().copied().collect())
}

/// Eigenvalues and right eigenvectors (columns) of a general complex matrix.
///
/// Uses the Schur form `m = Q T Q^*` and back-substitution on `T`. Columns
/// are scaled to unit 2-norm. Returns `None` if the Schur iteration fails.
pub fn eigen_decomposition(m: &CMatrix) -> Option<(Vec<ComplexScalar>, CMatrix)> {
    let n = m.nrows();
    assert_eq!(n, m.ncols());
    if n == 0 {
        return Some((Vec::new(), CMatrix::zeros(0, 0)));
    }
    let schur = nalgebra::linalg::Schur::try_new(m.clone(), f64::EPSILON, 10_000)?;
    let (q, t) = schur.unpack();
    let scale = max_abs(&t).max(f64::MIN_POSITIVE);
    let floor = f64::EPSILON * scale;

    let eigenvalues: Vec<ComplexScalar> = (0..n).map(|i| t[(i, i)]).collect();
    let mut x = CMatrix::zeros(n, n);
    for k in 0..n {
        let lambda = t[(k, k)];
        x[(k, k)] = c64(1.0, 0.0);
        for j in (0..k).rev() {
            let mut acc = c64(0.0, 0.0);
            for l in j + 1..=k {
                acc += t[(j, l)] * x[(l, k)];
            }
            let mut denom = t[(j, j)] - lambda;
            if denom.norm() < floor {
                denom = c64(floor, 0.0);
            }
            x[(j, k)] = -acc / denom;
        }
    }
    let mut vectors = q * x;
    for k in 0..n {
        let norm = vectors.column(k).norm();
        if norm > 0.0 {
            vectors.column_mut(k).unscale_mut(norm);
        }
    }
    Some((eigenvalues, vectors))
}
