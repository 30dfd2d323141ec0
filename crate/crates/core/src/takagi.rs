//! Autonne–Takagi factorization `U A U^T = diag(d)` of complex symmetric
//! matrices, plus the phase rotation that makes the diagonal pairwise
//! distinct.
//!
//! Writing `A = R + iM` and a Takagi vector `q = x + iy`, the relation
//! `A conj(q) = sigma q` is the real symmetric eigenproblem
//!
//! ```text
//! [ R   M ] [x]         [x]
//! [ M  -R ] [y] = sigma [y]
//! ```
//!
//! whose spectrum is `±sigma_i`. The eigenvectors of the positive half give
//! the columns of `Q`, with `A = Q diag(sigma) Q^T` and `U = Q^*`. An
//! orthonormal basis of a repeated eigenvalue is still a valid Takagi basis,
//! so degenerate singular values need no special handling.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::linalg::{max_abs, max_abs_diff, unitarity_residual, CMatrix};
use crate::{c64, ComplexScalar};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TakagiError {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not complex symmetric: max |A - A^T| = {residual:e}")]
    NotSymmetric { residual: f64 },
    #[error("matrix is singular: smallest Takagi value ratio {ratio:e}")]
    SingularInput { ratio: f64 },
    #[error("could not separate Takagi values: min pairwise distance {distance:e} < gap {gap:e}")]
    CannotSeparate { distance: f64, gap: f64 },
}

/// `U A U^T = diag(d)` with `U` unitary.
#[derive(Debug, Clone, PartialEq)]
pub struct TakagiFactorization {
    pub u: CMatrix,
    pub d: Vec<ComplexScalar>,
}

impl TakagiFactorization {
    pub fn size(&self) -> usize {
        self.d.len()
    }

    pub fn unitarity_residual(&self) -> f64 {
        unitarity_residual(&self.u)
    }

    /// `max |U A U^T - diag(d)|`.
    pub fn diagonalization_residual(&self, a: &CMatrix) -> f64 {
        let lhs = &self.u * a * self.u.transpose();
        max_abs_diff(&lhs, &self.diag())
    }

    /// `U^* diag(d) conj(U)`, which equals `A`.
    pub fn reconstruct(&self) -> CMatrix {
        self.u.adjoint() * self.diag() * self.u.conjugate()
    }

    fn diag(&self) -> CMatrix {
        CMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&self.d))
    }
}

/// Canonical factorization: `d` real, positive and sorted descending.
///
/// `tol` bounds both the relative asymmetry of `a` and the smallest allowed
/// ratio `d_min / d_max`.
pub fn takagi_factorize(a: &CMatrix, tol: f64) -> Result<TakagiFactorization, TakagiError> {
    let (rows, cols) = a.shape();
    if rows != cols {
        return Err(TakagiError::NotSquare { rows, cols });
    }
    let n = rows;
    let scale = max_abs(a).max(1.0);
    let asym = max_abs_diff(a, &a.transpose());
    if asym > tol * scale {
        return Err(TakagiError::NotSymmetric { residual: asym });
    }
    if n == 0 {
        return Ok(TakagiFactorization {
            u: CMatrix::zeros(0, 0),
            d: Vec::new(),
        });
    }
    let sym = (a + a.transpose()).unscale(2.0);

    let mut embed = DMatrix::<f64>::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = sym[(i, j)];
            embed[(i, j)] = z.re;
            embed[(i, j + n)] = z.im;
            embed[(i + n, j)] = z.im;
            embed[(i + n, j + n)] = -z.re;
        }
    }
    let eig = embed.symmetric_eigen();
    let mut order: Vec<usize> = (0..2 * n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let chosen = &order[..n];

    let top = eig.eigenvalues[chosen[0]];
    let bottom = eig.eigenvalues[chosen[n - 1]];
    let ratio = if top > 0.0 { bottom / top } else { 0.0 };
    if ratio <= tol {
        return Err(TakagiError::SingularInput { ratio });
    }

    let mut q = CMatrix::zeros(n, n);
    for (col, &k) in chosen.iter().enumerate() {
        let v = eig.eigenvectors.column(k);
        for i in 0..n {
            q[(i, col)] = c64(v[i], v[i + n]);
        }
    }
    let d = chosen.iter().map(|&k| c64(eig.eigenvalues[k], 0.0)).collect();
    Ok(TakagiFactorization { u: q.adjoint(), d })
}

/// Phase angles used inside each group of coincident Takagi values.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum PhaseSchedule {
    /// `phi_j = j * pi / (2m)` within a group of size `m`.
    #[default]
    Spread,
    /// `phi_j = j * phi0`.
    Uniform(f64),
}

/// Relative threshold under which two Takagi values count as coincident.
pub const COINCIDENCE_TOL: f64 = 1e-8;

/// Rotates rows of `U` by `exp(i phi_j / 2)` so that coincident values
/// `d_j` become `d_j exp(i phi_j)`, pairwise at least `gap` apart.
pub fn enforce_distinct(
    fac: &TakagiFactorization,
    schedule: PhaseSchedule,
    gap: f64,
) -> Result<TakagiFactorization, TakagiError> {
    let n = fac.size();
    let scale = fac.d.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let threshold = COINCIDENCE_TOL * scale;

    // union-find over coincident pairs
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            if (fac.d[i] - fac.d[j]).norm() < threshold {
                let (ri, rj) = (root(&mut parent, i), root(&mut parent, j));
                parent[ri.max(rj)] = ri.min(rj);
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut group_of = vec![usize::MAX; n];
    for i in 0..n {
        let r = root(&mut parent, i);
        if group_of[r] == usize::MAX {
            group_of[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[group_of[r]].push(i);
    }

    let mut out = fac.clone();
    for members in groups.iter().filter(|g| g.len() > 1) {
        let step = match schedule {
            PhaseSchedule::Spread => PI / (2.0 * members.len() as f64),
            PhaseSchedule::Uniform(phi0) => phi0,
        };
        for (j, &row) in members.iter().enumerate() {
            let phi = j as f64 * step;
            if phi == 0.0 {
                continue;
            }
            out.d[row] *= ComplexScalar::from_polar(1.0, phi);
            let half = ComplexScalar::from_polar(1.0, phi / 2.0);
            for col in 0..n {
                out.u[(row, col)] *= half;
            }
        }
    }

    let mut distance = f64::INFINITY;
    for i in 0..n {
        distance = distance.min(out.d[i].norm());
        for j in i + 1..n {
            distance = distance.min((out.d[i] - out.d[j]).norm());
        }
    }
    if n > 0 && distance < gap {
        return Err(TakagiError::CannotSeparate { distance, gap });
    }
    Ok(out)
}

/// Smallest pairwise distance between Takagi values.
pub fn min_separation(d: &[ComplexScalar]) -> f64 {
    let mut distance = f64::INFINITY;
    for i in 0..d.len() {
        for j in i + 1..d.len() {
            distance = distance.min((d[i] - d[j]).norm());
        }
    }
    distance
}
