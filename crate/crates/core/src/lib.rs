//! Truncated complex moment problem solved through the dynamic inverse
//! problem for a discrete wave system driven by a complex Jacobi matrix.
//!
//! The pipeline runs moments → response vector → admissibility check →
//! Jacobi coefficients → Takagi factorization → spectral data → discrete
//! measure. Every stage has an independent forward check. Time stepping of
//! the discrete wave system is the ground truth throughout.

pub mod bc_operators;
pub mod cli;
pub mod dynamics;
pub mod io;
pub mod jacobi;
pub mod linalg;
pub mod moments;
pub mod pipeline;
pub mod spectral;
pub mod takagi;
pub mod testing;

pub use num_complex::Complex64;

/// Complex scalar used for every coefficient, moment and response entry.
pub type ComplexScalar = Complex64;

pub use bc_operators::{
    check_admissibility, connecting_from_gram, connecting_from_response, control_matrix,
    Admissibility, BcError, ConnectingMatrix, ControlMatrix, DEFAULT_SINGULAR_TOL,
};
pub use dynamics::{
    apply_response, auxiliary_response, convolve, goursat_kernel, response_vector,
    simulate_finite, simulate_semi_infinite, solution_via_kernel, Control, DynamicsError,
    GoursatKernel, ResponseMethod, ResponseVector, WaveField,
};
pub use jacobi::{truncate, validate, FiniteJacobiMatrix, JacobiError, JacobiSpec};
pub use moments::{
    hankel, lambda_matrix, moments_to_response, response_to_moments, verify_factorization,
    HankelMatrix, LambdaMatrix, MomentError, MomentSequence,
};
pub use pipeline::{
    convergence_scan, recover_coefficients, solve_truncated, verify_measure, Backend,
    DegeneratePolicy, PipelineError, RecoveryOptions, RecoveryResult, ScanReport, SolveOptions,
    SolveReport,
};
pub use spectral::{
    build_measure, chebyshev_like, eigen_measure, measure_moment, spectral_data,
    spectral_response, DiscreteMeasure, OmegaRule, SpectralData, SpectralError,
};
pub use takagi::{enforce_distinct, takagi_factorize, PhaseSchedule, TakagiError, TakagiFactorization};

pub(crate) fn is_finite(z: ComplexScalar) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

pub(crate) const fn c64(re: f64, im: f64) -> ComplexScalar {
    Complex64::new(re, im)
}
