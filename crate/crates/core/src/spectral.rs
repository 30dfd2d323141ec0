//! Spectral data of `A^N` from its Takagi factorization, the discrete
//! measure built from it, and the polynomial representation of the response
//! vector
//!
//! ```text
//! r_{t-1} = sum_k w_k T_t(omega_k),   T_{t+1} = omega T_t - T_{t-1},  T_0 = 0, T_{-1} = -1.
//! ```
//!
//! Each row `û^i` of `U` satisfies `A û^i = d_i conj(û^i)`. After normalizing
//! `u^i = û^i / û^i_1` this becomes `A u^i = d_i β_i conj(u^i)` with the
//! unimodular factor `β_i = conj(û^i_1) / û^i_1`. Expanding the walled wave
//! field as `v_t = sum_k c^k_t conj(u^k)` leads to
//!
//! ```text
//! c_{t+1} + c_{t-1} - M c_t = a_0 f_t / ρ,   M_ik = d_i β_i H_ki / ρ_i,
//! ```
//!
//! with `ρ_i = sum_n |u^i_n|^2` and `H_ki = sum_n conj(u^k_n) conj(u^i_n)`.
//! When `H` is diagonal (for example when `A^N` is real) the system
//! decouples. Then `ω_i = d_i β_i H_ii / ρ_i` with weights `1 / ρ_i`. In
//! general [`OmegaRule::Coupled`] diagonalizes `M` instead. The row-sum
//! rules are kept for comparison.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::jacobi::FiniteJacobiMatrix;
use crate::linalg::{eigen_decomposition, solve, CMatrix};
use crate::takagi::{min_separation, TakagiFactorization, COINCIDENCE_TOL};
use crate::{c64, ComplexScalar, ResponseVector};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectralError {
    #[error("first component of Takagi vector {index} vanishes")]
    ZeroFirstComponent { index: usize },
    #[error("Takagi values are not pairwise distinct (separation {separation:e})")]
    DuplicateDiagonal { separation: f64 },
    #[error("support points {first} and {second} coincide (distance {distance:e})")]
    DuplicateSupport {
        first: usize,
        second: usize,
        distance: f64,
    },
    #[error("matrix is not diagonalizable: {reason}")]
    NonDiagonalizable { reason: &'static str },
    #[error("factorization size {fac} does not match matrix size {matrix}")]
    SizeMismatch { fac: usize, matrix: usize },
}

/// How the support points are obtained from the Takagi data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OmegaRule {
    /// `ω_i = sum_k d_i H_ki / ρ_k`, as printed, without the phase factor.
    Literal,
    /// `ω_i = sum_k d_i β_i H_ki / ρ_k`.
    PhaseCorrected,
    /// `ω_i = sum_k d_i β_i H_ki / ρ_i`.
    PhaseCorrectedOwnRho,
    /// Eigenvalues of the coupling matrix `M`; exact for any `A^N`.
    #[default]
    Coupled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralData {
    pub rule: OmegaRule,
    pub d: Vec<ComplexScalar>,
    pub uhat_first: Vec<ComplexScalar>,
    /// `u^i` padded with `u^i_0 = u^i_{N+1} = 0`, so `u[i][1] = 1`.
    pub u: Vec<Vec<ComplexScalar>>,
    pub rho: Vec<f64>,
    pub h: CMatrix,
    pub beta: Vec<ComplexScalar>,
    /// `M_ik = d_i β_i H_ki / ρ_i`.
    pub coupling: CMatrix,
    pub omega: Vec<ComplexScalar>,
    /// Measure weights for `a_0 = 1`.
    pub weights: Vec<ComplexScalar>,
}

impl SpectralData {
    pub fn size(&self) -> usize {
        self.d.len()
    }

    /// Largest off-diagonal `|H_ki|` relative to the diagonal; zero when the
    /// row-sum rules are exact.
    pub fn coupling_strength(&self) -> f64 {
        let n = self.size();
        let diag = (0..n).map(|i| self.h[(i, i)].norm()).fold(0.0, f64::max);
        let mut off: f64 = 0.0;
        for i in 0..n {
            for k in 0..n {
                if i != k {
                    off = off.max(self.h[(i, k)].norm());
                }
            }
        }
        if diag > 0.0 {
            off / diag
        } else {
            off
        }
    }
}

/// `T_t(ω)` from `T_{t+1} = ω T_t - T_{t-1}`, `T_0 = 0`, `T_{-1} = -1`.
pub fn chebyshev_like(omega: ComplexScalar, t: i64) -> ComplexScalar {
    assert!(t >= -1, "T_t is defined for t >= -1");
    let (mut prev, mut cur) = (c64(-1.0, 0.0), c64(0.0, 0.0));
    if t == -1 {
        return prev;
    }
    for _ in 0..t {
        let next = omega * cur - prev;
        prev = cur;
        cur = next;
    }
    cur
}

pub fn spectral_data(
    a: &FiniteJacobiMatrix,
    fac: &TakagiFactorization,
    rule: OmegaRule,
) -> Result<SpectralData, SpectralError> {
    let n = a.size();
    if fac.size() != n {
        return Err(SpectralError::SizeMismatch {
            fac: fac.size(),
            matrix: n,
        });
    }
    let scale = fac.d.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let separation = min_separation(&fac.d);
    if separation < COINCIDENCE_TOL * scale {
        return Err(SpectralError::DuplicateDiagonal { separation });
    }

    let uhat_first: Vec<ComplexScalar> = (0..n).map(|i| fac.u[(i, 0)]).collect();
    if let Some(index) = uhat_first.iter().position(|z| z.norm() < 1e-14) {
        return Err(SpectralError::ZeroFirstComponent { index });
    }

    let mut u = Vec::with_capacity(n);
    for (i, first) in uhat_first.iter().enumerate() {
        let mut row = vec![c64(0.0, 0.0); n + 2];
        for m in 0..n {
            row[m + 1] = fac.u[(i, m)] / first;
        }
        u.push(row);
    }
    let rho: Vec<f64> = u.iter().map(|ui| ui.iter().map(|z| z.norm_sqr()).sum()).collect();

    let mut h = CMatrix::zeros(n, n);
    for k in 0..n {
        for i in k..n {
            let value = (1..=n)
                .map(|m| (u[k][m] * u[i][m]).conj())
                .fold(c64(0.0, 0.0), |acc, z| acc + z);
            h[(k, i)] = value;
            h[(i, k)] = value;
        }
    }

    let beta: Vec<ComplexScalar> = uhat_first.iter().map(|z| z.conj() / z).collect();
    let coupling = CMatrix::from_fn(n, n, |i, k| fac.d[i] * beta[i] * h[(k, i)] / rho[i]);

    let inv_rho = |i: usize| c64(1.0 / rho[i], 0.0);
    let (omega, weights) = match rule {
        OmegaRule::Literal => (
            (0..n)
                .map(|i| (0..n).map(|k| fac.d[i] * h[(k, i)] / rho[k]).sum())
                .collect(),
            (0..n).map(inv_rho).collect(),
        ),
        OmegaRule::PhaseCorrected => (
            (0..n)
                .map(|i| (0..n).map(|k| fac.d[i] * beta[i] * h[(k, i)] / rho[k]).sum())
                .collect(),
            (0..n).map(inv_rho).collect(),
        ),
        OmegaRule::PhaseCorrectedOwnRho => (
            (0..n)
                .map(|i| (0..n).map(|k| fac.d[i] * beta[i] * h[(k, i)] / rho[i]).sum())
                .collect(),
            (0..n).map(inv_rho).collect(),
        ),
        OmegaRule::Coupled => {
            let (values, vectors) =
                eigen_decomposition(&coupling).ok_or(SpectralError::NonDiagonalizable {
                    reason: "Schur iteration did not converge",
                })?;
            let rhs: Vec<ComplexScalar> = (0..n).map(inv_rho).collect();
            let y = solve(&vectors, &rhs).ok_or(SpectralError::NonDiagonalizable {
                reason: "eigenvector matrix of the coupling matrix is singular",
            })?;
            let weights = (0..n)
                .map(|j| {
                    let col_sum: ComplexScalar = vectors.column(j).iter().sum();
                    col_sum * y[j]
                })
                .collect();
            (values, weights)
        }
    };

    Ok(SpectralData {
        rule,
        d: fac.d.clone(),
        uhat_first,
        u,
        rho,
        h,
        beta,
        coupling,
        omega,
        weights,
    })
}

/// Finitely supported measure `sum_k weights_k δ(support_k)` on the complex
/// plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteMeasure {
    pub support: Vec<ComplexScalar>,
    pub weights: Vec<ComplexScalar>,
}

/// Absolute separation below which two support points count as one.
pub const SUPPORT_SEPARATION: f64 = 1e-10;

impl DiscreteMeasure {
    pub fn empty() -> Self {
        Self {
            support: Vec::new(),
            weights: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn total_mass(&self) -> ComplexScalar {
        self.weights.iter().sum()
    }

    /// `s_0..s_{count-1}`.
    pub fn moments(&self, count: usize) -> Vec<ComplexScalar> {
        (0..count).map(|k| measure_moment(self, k)).collect()
    }

    /// Sorts atoms by real part, then imaginary part.
    pub fn canonicalize(mut self) -> Self {
        let mut atoms: Vec<(ComplexScalar, ComplexScalar)> =
            self.support.iter().copied().zip(self.weights.iter().copied()).collect();
        atoms.sort_by(|x, y| cmp_complex(&x.0, &y.0));
        self.support = atoms.iter().map(|a| a.0).collect();
        self.weights = atoms.iter().map(|a| a.1).collect();
        self
    }

    /// First pair of atoms closer than [`SUPPORT_SEPARATION`].
    pub fn find_duplicate(&self) -> Option<(usize, usize, f64)> {
        for i in 0..self.len() {
            for j in i + 1..self.len() {
                let distance = (self.support[i] - self.support[j]).norm();
                if distance < SUPPORT_SEPARATION {
                    return Some((i, j, distance));
                }
            }
        }
        None
    }
}

fn cmp_complex(x: &ComplexScalar, y: &ComplexScalar) -> Ordering {
    x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im))
}

/// Support `ω_k` with weights `a_0 w_k` (`a_0 / ρ_k` for the row-sum rules).
pub fn build_measure(sd: &SpectralData, a0: ComplexScalar) -> Result<DiscreteMeasure, SpectralError> {
    let measure = DiscreteMeasure {
        support: sd.omega.clone(),
        weights: sd.weights.iter().map(|w| a0 * w).collect(),
    };
    if let Some((first, second, distance)) = measure.find_duplicate() {
        return Err(SpectralError::DuplicateSupport {
            first,
            second,
            distance,
        });
    }
    Ok(measure.canonicalize())
}

/// `r_{t-1} = sum_k w_k T_t(ω_k)` for `t = 1..=len`.
pub fn spectral_response(m: &DiscreteMeasure, len: usize) -> ResponseVector {
    ResponseVector::new(
        (1..=len as i64)
            .map(|t| {
                m.support
                    .iter()
                    .zip(&m.weights)
                    .map(|(&w, &mass)| mass * chebyshev_like(w, t))
                    .sum()
            })
            .collect(),
    )
}

/// `sum_j weights_j support_j^k`, powers by repeated multiplication and the
/// terms summed largest first with Neumaier compensation.
pub fn measure_moment(m: &DiscreteMeasure, k: usize) -> ComplexScalar {
    let mut terms: Vec<ComplexScalar> = m
        .support
        .iter()
        .zip(&m.weights)
        .map(|(&x, &w)| {
            let mut power = c64(1.0, 0.0);
            for _ in 0..k {
                power *= x;
            }
            w * power
        })
        .collect();
    terms.sort_by(|a, b| b.norm().total_cmp(&a.norm()));
    c64(
        neumaier(terms.iter().map(|z| z.re)),
        neumaier(terms.iter().map(|z| z.im)),
    )
}

fn neumaier(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for x in values {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Independent route: eigendecomposition `A = Q Λ Q^T` with `Q^T Q = I`,
/// giving the measure `{λ_j -> a_0 Q_{1j}^2}`.
pub fn eigen_measure(a: &FiniteJacobiMatrix, a0: ComplexScalar) -> Result<DiscreteMeasure, SpectralError> {
    let (values, vectors) = eigen_decomposition(a.entries()).ok_or(SpectralError::NonDiagonalizable {
        reason: "Schur iteration did not converge",
    })?;
    let mut weights = Vec::with_capacity(values.len());
    for j in 0..values.len() {
        let col = vectors.column(j);
        let bilinear: ComplexScalar = col.iter().map(|z| z * z).sum();
        if bilinear.norm() < 1e-10 {
            return Err(SpectralError::NonDiagonalizable {
                reason: "eigenvector is isotropic (v^T v = 0)",
            });
        }
        weights.push(a0 * col[0] * col[0] / bilinear);
    }
    let measure = DiscreteMeasure {
        support: values,
        weights,
    };
    if measure.find_duplicate().is_some() {
        return Err(SpectralError::NonDiagonalizable {
            reason: "repeated eigenvalue",
        });
    }
    Ok(measure.canonicalize())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jacobi::{truncate, JacobiSpec};
    use crate::takagi::{enforce_distinct, takagi_factorize, PhaseSchedule};

    fn c(re: f64, im: f64) -> ComplexScalar {
        c64(re, im)
    }

    fn data(spec: &JacobiSpec, rule: OmegaRule) -> SpectralData {
        let a = truncate(spec, spec.len()).unwrap();
        let fac = takagi_factorize(a.entries(), 1e-12).unwrap();
        let fac = enforce_distinct(&fac, PhaseSchedule::Spread, 1e-8).unwrap();
        spectral_data(&a, &fac, rule).unwrap()
    }

    #[test]
    fn chebyshev_seed_and_steps() {
        let w = c(0.7, -1.3);
        assert_eq!(chebyshev_like(w, -1), c(-1.0, 0.0));
        assert_eq!(chebyshev_like(w, 0), c(0.0, 0.0));
        assert_eq!(chebyshev_like(w, 1), c(1.0, 0.0));
        assert!((chebyshev_like(w, 3) - (w * w - 1.0)).norm() < 1e-14);
        let w2 = w * w;
        assert!((chebyshev_like(w, 5) - (w2 * w2 - 3.0 * w2 + 1.0)).norm() < 1e-13);
    }

    #[test]
    fn single_site_spectral_data() {
        let spec = JacobiSpec::new(c(1.0, 0.0), vec![], vec![c(2.0, 1.0)]).unwrap();
        for rule in [OmegaRule::PhaseCorrected, OmegaRule::Coupled] {
            let sd = data(&spec, rule);
            assert!((sd.d[0].re - 5f64.sqrt()).abs() < 1e-14);
            assert!((sd.beta[0] - c(2.0, 1.0) / 5f64.sqrt()).norm() < 1e-14);
            assert!((sd.rho[0] - 1.0).abs() < 1e-14);
            assert!((sd.h[(0, 0)] - c(1.0, 0.0)).norm() < 1e-14);
            assert!((sd.omega[0] - c(2.0, 1.0)).norm() < 1e-12);
        }
        let literal = data(&spec, OmegaRule::Literal);
        assert!((literal.omega[0] - c(5f64.sqrt(), 0.0)).norm() < 1e-12);
    }

    #[test]
    fn swap_matrix_measure() {
        let spec = JacobiSpec::new(c(1.0, 0.0), vec![c(1.0, 0.0)], vec![c(0.0, 0.0); 2]).unwrap();
        let sd = data(&spec, OmegaRule::Coupled);
        let m = build_measure(&sd, c(1.0, 0.0)).unwrap();
        assert!((m.support[0] - c(-1.0, 0.0)).norm() < 1e-12);
        assert!((m.support[1] - c(1.0, 0.0)).norm() < 1e-12);
        for w in &m.weights {
            assert!((w - c(0.5, 0.0)).norm() < 1e-12);
        }
        assert_eq!(sd.h, sd.h.transpose());
    }

    #[test]
    fn rho_is_inverse_first_component() {
        let spec = JacobiSpec::new(
            c(1.0, 0.0),
            vec![c(0.5, -1.0), c(1.5, 0.3)],
            vec![c(0.2, 0.1), c(-1.0, 1.0), c(0.4, -0.6)],
        )
        .unwrap();
        let sd = data(&spec, OmegaRule::Coupled);
        let mass: f64 = sd.rho.iter().map(|r| 1.0 / r).sum();
        assert!((mass - 1.0).abs() < 1e-12);
        for i in 0..3 {
            assert!((sd.rho[i] - 1.0 / sd.uhat_first[i].norm_sqr()).abs() < 1e-10 * sd.rho[i]);
            assert_eq!(sd.u[i][1], c(1.0, 0.0));
            assert_eq!(sd.u[i][0], c(0.0, 0.0));
            assert_eq!(sd.u[i][4], c(0.0, 0.0));
        }
        let total: ComplexScalar = sd.weights.iter().sum();
        assert!((total - c(1.0, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn spectral_response_examples() {
        let single = DiscreteMeasure {
            support: vec![c(2.0, 1.0)],
            weights: vec![c(1.0, 0.0)],
        };
        assert_eq!(
            spectral_response(&single, 3).r,
            vec![c(1.0, 0.0), c(2.0, 1.0), c(2.0, 4.0)]
        );
        let pair = DiscreteMeasure {
            support: vec![c(1.0, 0.0), c(-1.0, 0.0)],
            weights: vec![c(0.5, 0.0), c(0.5, 0.0)],
        };
        let expect: Vec<_> = [1.0, 0.0, 0.0, 0.0, -1.0].iter().map(|&x| c(x, 0.0)).collect();
        assert_eq!(spectral_response(&pair, 5).r, expect);
        assert!(spectral_response(&DiscreteMeasure::empty(), 4)
            .r
            .iter()
            .all(|z| *z == c(0.0, 0.0)));
    }

    #[test]
    fn moment_examples() {
        let pair = DiscreteMeasure {
            support: vec![c(1.0, 0.0), c(-1.0, 0.0)],
            weights: vec![c(0.5, 0.0), c(0.5, 0.0)],
        };
        assert_eq!(measure_moment(&pair, 0), c(1.0, 0.0));
        assert_eq!(measure_moment(&pair, 2), c(1.0, 0.0));
        assert_eq!(measure_moment(&pair, 3), c(0.0, 0.0));
        let single = DiscreteMeasure {
            support: vec![c(2.0, 1.0)],
            weights: vec![c(1.0, 0.0)],
        };
        assert_eq!(measure_moment(&single, 2), c(3.0, 4.0));
    }

    #[test]
    fn duplicate_support_is_reported() {
        let sd = SpectralData {
            rule: OmegaRule::Literal,
            d: vec![],
            uhat_first: vec![],
            u: vec![],
            rho: vec![],
            h: CMatrix::zeros(0, 0),
            beta: vec![],
            coupling: CMatrix::zeros(0, 0),
            omega: vec![c(1.0, 0.0), c(1.0, 1e-12)],
            weights: vec![c(0.5, 0.0), c(0.5, 0.0)],
        };
        assert!(matches!(
            build_measure(&sd, c(1.0, 0.0)),
            Err(SpectralError::DuplicateSupport { .. })
        ));
    }

    #[test]
    fn spectral_data_requires_distinct_values() {
        let spec = JacobiSpec::new(c(1.0, 0.0), vec![c(1.0, 0.0)], vec![c(0.0, 0.0); 2]).unwrap();
        let a = truncate(&spec, 2).unwrap();
        let fac = takagi_factorize(a.entries(), 1e-12).unwrap();
        assert!(matches!(
            spectral_data(&a, &fac, OmegaRule::Coupled),
            Err(SpectralError::DuplicateDiagonal { .. })
        ));
    }

    #[test]
    fn eigen_oracle_on_swap() {
        let spec = JacobiSpec::new(c(1.0, 0.0), vec![c(1.0, 0.0)], vec![c(0.0, 0.0); 2]).unwrap();
        let m = eigen_measure(&truncate(&spec, 2).unwrap(), c(1.0, 0.0)).unwrap();
        assert!((m.support[0] - c(-1.0, 0.0)).norm() < 1e-12);
        assert!((m.weights[1] - c(0.5, 0.0)).norm() < 1e-12);
    }
}
