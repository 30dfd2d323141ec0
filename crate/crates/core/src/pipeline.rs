//! Moments to measure: response vector, admissibility, coefficient recovery,
//! Takagi spectral data and the discrete measure, plus the convergence scan
//! over nested truncations.

use thiserror::Error;

use crate::bc_operators::{check_admissibility, Admissibility, BcError, DEFAULT_SINGULAR_TOL};
use crate::jacobi::{truncate, FiniteJacobiMatrix, JacobiError, JacobiSpec};
use crate::linalg::singular_values;
use crate::moments::{hankel, moments_to_response, MomentError, MomentSequence};
use crate::spectral::{
    build_measure, eigen_measure, measure_moment, spectral_data, DiscreteMeasure, OmegaRule,
    SpectralError,
};
use crate::takagi::{enforce_distinct, takagi_factorize, PhaseSchedule, TakagiError, COINCIDENCE_TOL};
use crate::{c64, ComplexScalar};

/// Conditioning below which recovery still succeeds but emits a warning.
pub const ILL_CONDITIONED_RATIO: f64 = 1e-6;

/// Default residual tolerance for moment checks.
pub const DEFAULT_RESIDUAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PipelineError {
    #[error("moment sequence has even length {len}; s_0..s_{{2N-2}} is needed")]
    EvenLength { len: usize },
    #[error("C^{size} singular (k={k}): sigma ratio {sigma_ratio:e} <= tol {tol:e}")]
    Inadmissible {
        k: usize,
        size: usize,
        sigma_ratio: f64,
        tol: f64,
    },
    #[error("Hankel minor S^{k} singular: sigma ratio {sigma_ratio:e} <= tol {tol:e}")]
    SingularMinor { k: usize, sigma_ratio: f64, tol: f64 },
    #[error("scan sizes must be nonempty, positive and strictly increasing")]
    BadScanSizes,
    #[error(transparent)]
    Moment(#[from] MomentError),
    #[error(transparent)]
    Jacobi(#[from] JacobiError),
    #[error(transparent)]
    Bc(#[from] BcError),
    #[error(transparent)]
    Takagi(#[from] TakagiError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

impl PipelineError {
    /// True for numerical rejections, false for malformed input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            PipelineError::Inadmissible { .. }
                | PipelineError::SingularMinor { .. }
                | PipelineError::Takagi(_)
                | PipelineError::Spectral(_)
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecoveryOptions {
    pub tol: f64,
    /// Value used for `b_N` when `s_{2N-1}` is not supplied.
    pub free_diagonal: ComplexScalar,
}

impl Default for RecoveryOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_SINGULAR_TOL,
            free_diagonal: c64(0.0, 0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinorCondition {
    pub k: usize,
    pub sigma_min: f64,
    pub sigma_max: f64,
}

impl MinorCondition {
    pub fn ratio(&self) -> f64 {
        if self.sigma_max > 0.0 {
            self.sigma_min / self.sigma_max
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RecoveryWarning {
    IllConditioned { k: usize, ratio: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryResult {
    pub a0: ComplexScalar,
    /// `(a_1)^2..(a_{N-1})^2`
    pub a_squared: Vec<ComplexScalar>,
    pub a_principal: Vec<ComplexScalar>,
    /// `b_1..b_N`
    pub b: Vec<ComplexScalar>,
    /// `b_N` was not determined by the data and holds the free value.
    pub b_last_free: bool,
    pub condition_report: Vec<MinorCondition>,
    pub warnings: Vec<RecoveryWarning>,
}

impl RecoveryResult {
    /// Spec built from the principal square roots.
    pub fn to_spec(&self) -> Result<JacobiSpec, JacobiError> {
        JacobiSpec::new(self.a0, self.a_principal.clone(), self.b.clone())
    }
}

/// Square root with nonnegative real part, and nonnegative imaginary part
/// when the real part vanishes.
pub fn principal_sqrt(z: ComplexScalar) -> ComplexScalar {
    let mut w = z.sqrt();
    if w.re < 0.0 || (w.re == 0.0 && w.im < 0.0) {
        w = -w;
    }
    w
}

fn minor_condition(s: &MomentSequence, k: usize) -> Result<MinorCondition, MomentError> {
    let sv = singular_values(&hankel(s, k)?.entries);
    Ok(MinorCondition {
        k,
        sigma_min: *sv.last().unwrap_or(&0.0),
        sigma_max: *sv.first().unwrap_or(&0.0),
    })
}

/// Three-term recurrence coefficients of the monic polynomials orthogonal
/// under the bilinear form `<x^i, x^j> = s_{i+j}`, computed with the
/// modified Chebyshev algorithm on ordinary moments.
pub fn recover_coefficients(
    s: &MomentSequence,
    depth: usize,
    opts: &RecoveryOptions,
) -> Result<RecoveryResult, PipelineError> {
    let needed = (2 * depth).saturating_sub(1).max(1);
    if depth == 0 || s.len() < needed {
        return Err(MomentError::TooFewMoments { needed, got: s.len() }.into());
    }
    let mut condition_report = Vec::with_capacity(depth);
    let mut warnings = Vec::new();
    for k in 1..=depth {
        let cond = minor_condition(s, k)?;
        let ratio = cond.ratio();
        if ratio <= opts.tol {
            return Err(PipelineError::SingularMinor {
                k,
                sigma_ratio: ratio,
                tol: opts.tol,
            });
        }
        if ratio < ILL_CONDITIONED_RATIO {
            warnings.push(RecoveryWarning::IllConditioned { k, ratio });
        }
        condition_report.push(cond);
    }

    let len = s.len().min(2 * depth);
    let mut prev: Vec<ComplexScalar> = vec![c64(0.0, 0.0); len];
    let mut cur: Vec<ComplexScalar> = s.s[..len].to_vec();
    let mut alpha = Vec::with_capacity(depth);
    let mut beta = Vec::with_capacity(depth);
    for k in 0..depth {
        if k > 0 {
            let next: Vec<ComplexScalar> = (k..len.saturating_sub(k))
                .map(|l| cur[l + 1] - alpha[k - 1] * cur[l] - beta[k - 1] * prev[l])
                .collect();
            let mut padded = vec![c64(0.0, 0.0); len];
            padded[k..k + next.len()].copy_from_slice(&next);
            prev = std::mem::replace(&mut cur, padded);
        }
        let diag = cur[k];
        beta.push(if k == 0 { diag } else { diag / prev[k - 1] });
        if 2 * k + 1 < len {
            let a = cur[k + 1] / diag - if k == 0 { c64(0.0, 0.0) } else { prev[k] / prev[k - 1] };
            alpha.push(a);
        } else {
            alpha.push(opts.free_diagonal);
        }
    }

    let a_squared: Vec<ComplexScalar> = beta[1..].to_vec();
    Ok(RecoveryResult {
        a0: s.s[0],
        a_principal: a_squared.iter().map(|&z| principal_sqrt(z)).collect(),
        a_squared,
        b: alpha,
        b_last_free: s.len() < 2 * depth,
        condition_report,
        warnings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Backend {
    /// Takagi factorization and spectral data.
    #[default]
    Takagi,
    /// Eigendecomposition of the Jacobi matrix.
    Eigen,
}

impl Backend {
    pub fn name(self) -> &'static str {
        match self {
            Backend::Takagi => "takagi",
            Backend::Eigen => "eigen",
        }
    }
}

/// What to do when some nested connecting minor is singular.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DegeneratePolicy {
    /// Fall back to the largest nonsingular depth and accept the smaller
    /// measure if it reproduces every moment.
    #[default]
    Reduce,
    /// Reject.
    Reject,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub backend: Backend,
    pub tol_singular: f64,
    pub tol_residual: f64,
    pub degenerate: DegeneratePolicy,
    pub phase: PhaseSchedule,
    pub omega_rule: OmegaRule,
    pub free_diagonal: ComplexScalar,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            backend: Backend::Takagi,
            tol_singular: DEFAULT_SINGULAR_TOL,
            tol_residual: DEFAULT_RESIDUAL_TOL,
            degenerate: DegeneratePolicy::Reduce,
            phase: PhaseSchedule::Spread,
            omega_rule: OmegaRule::Coupled,
            free_diagonal: c64(0.0, 0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub measure: DiscreteMeasure,
    /// `|measure_moment(m, k) - s_k|`
    pub moment_residuals: Vec<f64>,
    pub admissibility: Admissibility,
    pub recovery: RecoveryResult,
    pub backend: Backend,
    /// Depth actually used when the full problem was degenerate.
    pub reduced_to: Option<usize>,
    /// Diagonal shift applied to get a nonsingular matrix for Takagi.
    pub shift: Option<ComplexScalar>,
}

impl SolveReport {
    /// `max_k |m_k - s_k| / max(1, |s_k|)`.
    pub fn max_relative_residual(&self, s: &MomentSequence) -> f64 {
        relative_residuals(&self.moment_residuals, s)
            .into_iter()
            .fold(0.0, f64::max)
    }
}

fn relative_residuals(residuals: &[f64], s: &MomentSequence) -> Vec<f64> {
    residuals
        .iter()
        .zip(&s.s)
        .map(|(r, sk)| r / sk.norm().max(1.0))
        .collect()
}

const SHIFTS: [(f64, f64); 3] = [(0.0, 0.0), (0.5, 0.25), (-0.3, 0.7)];

/// Measure of `A^N` built from `spec` through the chosen backend. Takagi
/// needs a nonsingular matrix; a singular `A^N` is shifted along the
/// diagonal and the support shifted back.
pub fn jacobi_measure(
    spec: &JacobiSpec,
    opts: &SolveOptions,
) -> Result<(DiscreteMeasure, Option<ComplexScalar>), PipelineError> {
    let a = truncate(spec, spec.len())?;
    match opts.backend {
        Backend::Eigen => Ok((eigen_measure(&a, spec.a0)?, None)),
        Backend::Takagi => {
            let scale = a.entries().iter().map(|z| z.norm()).fold(1.0, f64::max);
            let mut last = None;
            for (re, im) in SHIFTS {
                let shift = c64(re, im) * scale;
                let shifted = JacobiSpec {
                    b: spec.b.iter().map(|b| b + shift).collect(),
                    ..spec.clone()
                };
                match takagi_measure(&truncate(&shifted, spec.len())?, spec.a0, opts) {
                    Ok(m) => {
                        let shift = (shift != c64(0.0, 0.0)).then_some(shift);
                        let m = match shift {
                            Some(sh) => DiscreteMeasure {
                                support: m.support.iter().map(|z| z - sh).collect(),
                                weights: m.weights,
                            }
                            .canonicalize(),
                            None => m,
                        };
                        return Ok((m, shift));
                    }
                    Err(e @ PipelineError::Takagi(TakagiError::SingularInput { .. })) => last = Some(e),
                    Err(e) => return Err(e),
                }
            }
            Err(last.expect("at least one shift tried"))
        }
    }
}

fn takagi_measure(
    a: &FiniteJacobiMatrix,
    a0: ComplexScalar,
    opts: &SolveOptions,
) -> Result<DiscreteMeasure, PipelineError> {
    let fac = takagi_factorize(a.entries(), opts.tol_singular)?;
    let scale = fac.d.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let fac = enforce_distinct(&fac, opts.phase, COINCIDENCE_TOL * scale)?;
    let sd = spectral_data(a, &fac, opts.omega_rule)?;
    Ok(build_measure(&sd, a0)?)
}

/// `|measure_moment(m, k) - s_k|` for every supplied `k`.
pub fn verify_measure(m: &DiscreteMeasure, s: &MomentSequence) -> Vec<f64> {
    s.s.iter()
        .enumerate()
        .map(|(k, sk)| (measure_moment(m, k) - sk).norm())
        .collect()
}

/// Solves the truncated moment problem for `s_0..s_{2N-2}`.
pub fn solve_truncated(s: &MomentSequence, opts: &SolveOptions) -> Result<SolveReport, PipelineError> {
    if s.len().is_multiple_of(2) {
        return Err(PipelineError::EvenLength { len: s.len() });
    }
    let n = s.len().div_ceil(2);
    let r = moments_to_response(s)?;
    let admissibility = check_admissibility(&r, n, opts.tol_singular)?;
    let recovery_opts = RecoveryOptions {
        tol: opts.tol_singular,
        free_diagonal: opts.free_diagonal,
    };

    if let Some(check) = admissibility.failing_check().cloned() {
        let rejection = PipelineError::Inadmissible {
            k: check.k,
            size: check.size,
            sigma_ratio: check.sigma_ratio,
            tol: opts.tol_singular,
        };
        if opts.degenerate == DegeneratePolicy::Reject {
            return Err(rejection);
        }
        let depth = (1..n)
            .take_while(|&k| {
                minor_condition(s, k).map(|c| c.ratio() > opts.tol_singular).unwrap_or(false)
            })
            .last();
        let Some(depth) = depth else {
            return Err(rejection);
        };
        let recovery = recover_coefficients(&s.prefix(2 * depth), depth, &recovery_opts)?;
        let (measure, shift) = jacobi_measure(&recovery.to_spec()?, opts)?;
        let moment_residuals = verify_measure(&measure, s);
        if relative_residuals(&moment_residuals, s).iter().any(|&e| e > opts.tol_residual) {
            return Err(rejection);
        }
        return Ok(SolveReport {
            measure,
            moment_residuals,
            admissibility,
            recovery,
            backend: opts.backend,
            reduced_to: Some(depth),
            shift,
        });
    }

    let recovery = recover_coefficients(s, n, &recovery_opts)?;
    let (measure, shift) = jacobi_measure(&recovery.to_spec()?, opts)?;
    let moment_residuals = verify_measure(&measure, s);
    Ok(SolveReport {
        measure,
        moment_residuals,
        admissibility,
        recovery,
        backend: opts.backend,
        reduced_to: None,
        shift,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanEntry {
    pub n: usize,
    pub measure: DiscreteMeasure,
    /// `s_0..s_{2N-2}` of the measure.
    pub moments: Vec<ComplexScalar>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanReport {
    pub entries: Vec<ScanEntry>,
    /// Moments `s_0..s_{shared_order}` are compared across all sizes.
    pub shared_order: usize,
    /// Largest `|s^N_k - s^{N_0}_k| / max(1, |s^{N_0}_k|)` over shared orders.
    pub max_deviation: f64,
}

impl ScanReport {
    pub fn is_stable(&self, tol: f64) -> bool {
        self.max_deviation <= tol
    }
}

/// Builds the measure of every truncation `A^N` and compares the moments
/// they share.
pub fn convergence_scan(
    spec: &JacobiSpec,
    sizes: &[usize],
    opts: &SolveOptions,
) -> Result<ScanReport, PipelineError> {
    if sizes.is_empty() || sizes[0] == 0 || sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(PipelineError::BadScanSizes);
    }
    let mut entries = Vec::with_capacity(sizes.len());
    for &n in sizes {
        let (measure, _) = jacobi_measure(&spec.prefix(n)?, opts)?;
        let moments = measure.moments(2 * n - 1);
        entries.push(ScanEntry { n, measure, moments });
    }
    let shared_order = 2 * sizes[0] - 2;
    let base = &entries[0].moments;
    let mut max_deviation: f64 = 0.0;
    for entry in &entries[1..] {
        for (m, b) in entry.moments.iter().zip(base).take(shared_order + 1) {
            max_deviation = max_deviation.max((m - b).norm() / b.norm().max(1.0));
        }
    }
    Ok(ScanReport {
        entries,
        shared_order,
        max_deviation,
    })
}
