//! Forward problem for the discrete wave system
//!
//! ```text
//! u[n, t+1] + u[n, t-1] - a_n u[n+1, t] - a_{n-1} u[n-1, t] - b_n u[n, t] = 0
//! u[n, -1] = u[n, 0] = 0,   u[0, t] = f_t
//! ```
//!
//! on the half line, and the same system on `n = 1..N` with a Dirichlet wall
//! `u[N+1, t] = 0`. Waves travel one site per step, so `u[n, t] = 0` for
//! `n > t`. The half-line solution up to time `T` therefore equals the
//! walled solution with `N = T`, exactly.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::jacobi::{validate, JacobiError, JacobiSpec};
use crate::{c64, ComplexScalar};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("invalid Jacobi spec: {0}")]
    InvalidSpec(#[from] JacobiError),
    #[error("requested {requested} sites but the spec has {available} diagonal entries")]
    SizeExceedsSpec { requested: usize, available: usize },
    #[error("horizon {horizon} needs at least {needed} diagonal entries, spec has {available}")]
    InsufficientCoefficients {
        horizon: usize,
        needed: usize,
        available: usize,
    },
    #[error("horizon mismatch: need {needed}, have {available}")]
    HorizonMismatch { needed: usize, available: usize },
    #[error("horizon must be positive")]
    ZeroHorizon,
}

/// Boundary control `f_0, f_1, ...`; samples past the end are zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Control {
    samples: Vec<ComplexScalar>,
}

impl Control {
    pub fn new(samples: Vec<ComplexScalar>) -> Self {
        Self { samples }
    }

    /// `delta = (1, 0, ..., 0)` with `horizon` samples.
    pub fn impulse(horizon: usize) -> Self {
        let mut samples = vec![c64(0.0, 0.0); horizon.max(1)];
        samples[0] = c64(1.0, 0.0);
        Self { samples }
    }

    pub fn zeros(horizon: usize) -> Self {
        Self {
            samples: vec![c64(0.0, 0.0); horizon],
        }
    }

    /// Unit control `e_j` (1 at sample `j`).
    pub fn basis(horizon: usize, j: usize) -> Self {
        let mut samples = vec![c64(0.0, 0.0); horizon];
        samples[j] = c64(1.0, 0.0);
        Self { samples }
    }

    pub fn horizon(&self) -> usize {
        self.samples.len()
    }

    pub fn samples(&self) -> &[ComplexScalar] {
        &self.samples
    }

    /// `f_j`, zero for `j < 0` and past the last sample.
    pub fn at(&self, j: isize) -> ComplexScalar {
        if j < 0 {
            return c64(0.0, 0.0);
        }
        self.samples.get(j as usize).copied().unwrap_or(c64(0.0, 0.0))
    }
}

/// Table of `u[n, t]` for `n = 0..=last_site` and `t = -1..=horizon`.
///
/// Row 0 holds the control, the last row is the Dirichlet wall.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveField {
    sites: usize,
    horizon: usize,
    values: Vec<ComplexScalar>,
}

impl WaveField {
    fn zeros(interior: usize, horizon: usize) -> Self {
        let sites = interior + 2;
        Self {
            sites,
            horizon,
            values: vec![c64(0.0, 0.0); sites * (horizon + 2)],
        }
    }

    fn index(&self, n: usize, t: isize) -> usize {
        assert!(n < self.sites, "site {n} outside field");
        assert!(
            (-1..=self.horizon as isize).contains(&t),
            "time {t} outside field"
        );
        n * (self.horizon + 2) + (t + 1) as usize
    }

    /// Number of interior sites (the wall sits at `interior() + 1`).
    pub fn interior(&self) -> usize {
        self.sites - 2
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn get(&self, n: usize, t: isize) -> ComplexScalar {
        self.values[self.index(n, t)]
    }

    fn set(&mut self, n: usize, t: isize, z: ComplexScalar) {
        let i = self.index(n, t);
        self.values[i] = z;
    }

    /// `u[n, 1..=horizon]`.
    pub fn trace(&self, n: usize) -> Vec<ComplexScalar> {
        (1..=self.horizon as isize).map(|t| self.get(n, t)).collect()
    }

    /// Final-time profile `u[1..=upto, horizon]`.
    pub fn final_state(&self, upto: usize) -> Vec<ComplexScalar> {
        (1..=upto).map(|n| self.get(n, self.horizon as isize)).collect()
    }

    /// Iterates `(n, t, value)` in row-major order, including `t = -1`.
    pub fn iter(&self) -> impl Iterator<Item = (usize, isize, ComplexScalar)> + '_ {
        (0..self.sites).flat_map(move |n| {
            (-1..=self.horizon as isize).map(move |t| (n, t, self.get(n, t)))
        })
    }

    /// Largest componentwise difference over sites `1..=sites` and times
    /// `0..=horizon` shared by both fields.
    pub fn max_abs_diff(&self, other: &WaveField, sites: usize) -> f64 {
        let horizon = self.horizon.min(other.horizon) as isize;
        let mut worst: f64 = 0.0;
        for n in 1..=sites {
            for t in 0..=horizon {
                worst = worst.max((self.get(n, t) - other.get(n, t)).norm());
            }
        }
        worst
    }
}

/// Time-steps the walled system on sites `1..=sites` up to time `horizon`.
pub fn simulate_finite(
    spec: &JacobiSpec,
    f: &Control,
    sites: usize,
    horizon: usize,
) -> Result<WaveField, DynamicsError> {
    validate(spec)?;
    if horizon == 0 {
        return Err(DynamicsError::ZeroHorizon);
    }
    if sites == 0 || sites > spec.len() {
        return Err(DynamicsError::SizeExceedsSpec {
            requested: sites,
            available: spec.len(),
        });
    }
    let mut field = WaveField::zeros(sites, horizon);
    for t in 0..=horizon as isize {
        field.set(0, t, f.at(t));
    }
    for t in 0..horizon as isize {
        for n in 1..=sites {
            let mut next = spec.a_at(n - 1) * field.get(n - 1, t) + spec.b_at(n) * field.get(n, t)
                - field.get(n, t - 1);
            if n < sites {
                next += spec.a_at(n) * field.get(n + 1, t);
            }
            field.set(n, t + 1, next);
        }
    }
    Ok(field)
}

/// Half-line solution restricted to `n, t <= horizon`.
pub fn simulate_semi_infinite(
    spec: &JacobiSpec,
    f: &Control,
    horizon: usize,
) -> Result<WaveField, DynamicsError> {
    validate(spec)?;
    if horizon == 0 {
        return Err(DynamicsError::ZeroHorizon);
    }
    if spec.len() < horizon {
        return Err(DynamicsError::InsufficientCoefficients {
            horizon,
            needed: horizon,
            available: spec.len(),
        });
    }
    simulate_finite(spec, f, horizon, horizon)
}

/// Kernel `w[n, s]` of the solution representation
///
/// ```text
/// u[n, t] = P_n f_{t-n} + sum_{s=n}^{t-1} w[n, s] f_{t-s-1},   P_n = a_0 ... a_{n-1}
/// ```
///
/// It is stored on its computable cone `1 <= n <= s`, `n <= N`, `n + s <= 2N`,
/// `s <= horizon` for a spec with `N` diagonal entries.
#[derive(Debug, Clone, PartialEq)]
pub struct GoursatKernel {
    products: Vec<ComplexScalar>,
    rows: Vec<Vec<ComplexScalar>>,
    horizon: usize,
}

impl GoursatKernel {
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Number of rows `n` with at least the diagonal entry available.
    pub fn depth(&self) -> usize {
        self.rows.len()
    }

    /// `P_n = a_0 a_1 ... a_{n-1}`.
    pub fn product(&self, n: usize) -> Option<ComplexScalar> {
        n.checked_sub(1).and_then(|i| self.products.get(i)).copied()
    }

    /// `w[n, s]`; `w[0, s] = 0`. `None` outside the stored cone.
    pub fn w(&self, n: usize, s: usize) -> Option<ComplexScalar> {
        if n == 0 {
            return Some(c64(0.0, 0.0));
        }
        if s < n {
            return None;
        }
        self.rows.get(n - 1).and_then(|row| row.get(s - n)).copied()
    }

    /// Rows `n` whose entries cover `s = n..=last_s`.
    fn covers(&self, n: usize, last_s: usize) -> bool {
        last_s < n || self.w(n, last_s).is_some()
    }
}

/// Solves the Goursat problem for `w[n, s]` up to `s = horizon`.
pub fn goursat_kernel(spec: &JacobiSpec, horizon: usize) -> Result<GoursatKernel, DynamicsError> {
    validate(spec)?;
    let depth = spec.len();
    if horizon + 1 > 2 * depth {
        return Err(DynamicsError::InsufficientCoefficients {
            horizon,
            needed: (horizon + 2) / 2,
            available: depth,
        });
    }
    let products = spec.coupling_products(depth);
    let zero = c64(0.0, 0.0);

    // dense scratch: w[n][s] for n in 0..=depth+1, s in 0..=horizon; zero off the cone
    let mut w = vec![vec![zero; horizon + 1]; depth + 2];
    let on_cone = |n: usize, s: usize| n >= 1 && n <= depth && s >= n && n + s <= 2 * depth;

    for s in 1..=horizon {
        for n in 1..=s.min(depth) {
            if !on_cone(n, s) {
                continue;
            }
            let p_n = products[n - 1];
            w[n][s] = if n == s {
                spec.b_at(n) * p_n + spec.a_at(n - 1) * w[n - 1][n - 1]
            } else {
                // interior step taken at (n, s - 1)
                let prev = s - 1;
                let mut value = spec.a_at(n - 1) * w[n - 1][prev] + spec.b_at(n) * w[n][prev];
                if n < prev {
                    value += spec.a_at(n) * w[n + 1][prev];
                }
                if prev > n {
                    value -= w[n][prev - 1];
                }
                if prev == n {
                    let a_n = spec.a_at(n);
                    value -= (c64(1.0, 0.0) - a_n * a_n) * p_n;
                }
                value
            };
        }
    }

    let rows = (1..=depth.min(horizon.max(1)))
        .filter(|&n| n <= horizon)
        .map(|n| {
            let last = horizon.min(2 * depth - n);
            (n..=last).map(|s| w[n][s]).collect::<Vec<_>>()
        })
        .collect();

    Ok(GoursatKernel {
        products,
        rows,
        horizon,
    })
}

/// Evaluates the kernel representation of `u^f` on `n, t <= f.horizon()`.
pub fn solution_via_kernel(kernel: &GoursatKernel, f: &Control) -> Result<WaveField, DynamicsError> {
    let horizon = f.horizon();
    if horizon == 0 {
        return Err(DynamicsError::ZeroHorizon);
    }
    let needed_depth = horizon;
    if kernel.horizon + 1 < horizon || kernel.products.len() < needed_depth {
        return Err(DynamicsError::HorizonMismatch {
            needed: horizon,
            available: (kernel.horizon + 1).min(kernel.products.len()),
        });
    }
    for n in 1..needed_depth {
        if !kernel.covers(n, horizon - 1) {
            return Err(DynamicsError::HorizonMismatch {
                needed: horizon,
                available: n,
            });
        }
    }
    let mut field = WaveField::zeros(horizon, horizon);
    for t in 0..=horizon as isize {
        field.set(0, t, f.at(t));
    }
    for n in 1..=horizon {
        let p_n = kernel.products[n - 1];
        for t in 1..=horizon {
            let mut value = p_n * f.at(t as isize - n as isize);
            for s in n..t {
                let w = kernel.w(n, s).expect("kernel cone checked above");
                value += w * f.at((t - s - 1) as isize);
            }
            field.set(n, t as isize, value);
        }
    }
    Ok(field)
}

/// Response vector `r_0, r_1, ...`: the kernel of `f -> u^f[1, .]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseVector {
    pub r: Vec<ComplexScalar>,
}

impl ResponseVector {
    pub fn new(r: Vec<ComplexScalar>) -> Self {
        Self { r }
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    pub fn as_slice(&self) -> &[ComplexScalar] {
        &self.r
    }

    pub fn conj(&self) -> Self {
        Self::new(self.r.iter().map(|z| z.conj()).collect())
    }

    pub fn max_abs_diff(&self, other: &ResponseVector) -> f64 {
        self.r
            .iter()
            .zip(&other.r)
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ResponseMethod {
    /// Row `n = 1` of the time-stepped impulse response.
    #[default]
    Timestep,
    /// `r_0 = a_0`, `r_s = w[1, s]` from the Goursat kernel.
    Kernel,
}

/// `r_{t-1} = u^delta[1, t]` for `t = 1..=len`.
///
/// A spec with `N` diagonal entries determines `r_0..r_{2N-1}`.
pub fn response_vector(
    spec: &JacobiSpec,
    len: usize,
    method: ResponseMethod,
) -> Result<ResponseVector, DynamicsError> {
    validate(spec)?;
    if len == 0 {
        return Err(DynamicsError::ZeroHorizon);
    }
    if len > 2 * spec.len() {
        return Err(DynamicsError::InsufficientCoefficients {
            horizon: len,
            needed: len.div_ceil(2),
            available: spec.len(),
        });
    }
    let r = match method {
        ResponseMethod::Timestep => {
            simulate_finite(spec, &Control::impulse(len), spec.len(), len)?.trace(1)
        }
        ResponseMethod::Kernel => {
            let kernel = goursat_kernel(spec, len - 1)?;
            std::iter::once(spec.a0)
                .chain((1..len).map(|s| kernel.w(1, s).expect("row 1 is on the cone")))
                .collect()
        }
    };
    Ok(ResponseVector::new(r))
}

/// Response of the auxiliary system driven by the conjugate coefficients.
pub fn auxiliary_response(spec: &JacobiSpec, len: usize) -> Result<ResponseVector, DynamicsError> {
    response_vector(&spec.conjugate(), len, ResponseMethod::Timestep)
}

/// Full discrete convolution `c_t = sum_{s=0}^{t} f_s g_{t-s}`.
pub fn convolve(f: &[ComplexScalar], g: &[ComplexScalar]) -> Vec<ComplexScalar> {
    if f.is_empty() || g.is_empty() {
        return Vec::new();
    }
    let mut c = vec![c64(0.0, 0.0); f.len() + g.len() - 1];
    for (i, fi) in f.iter().enumerate() {
        for (j, gj) in g.iter().enumerate() {
            c[i + j] += fi * gj;
        }
    }
    c
}

/// `(R f)_t = sum_{s=0}^{t-1} r_s f_{t-1-s}` for `t = 1..=f.horizon()`.
pub fn apply_response(r: &ResponseVector, f: &Control) -> Result<Vec<ComplexScalar>, DynamicsError> {
    let horizon = f.horizon();
    if r.len() < horizon {
        return Err(DynamicsError::HorizonMismatch {
            needed: horizon,
            available: r.len(),
        });
    }
    Ok((1..=horizon)
        .map(|t| {
            (0..t)
                .map(|s| r.r[s] * f.samples()[t - 1 - s])
                .fold(c64(0.0, 0.0), |acc, z| acc + z)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> ComplexScalar {
        c64(re, im)
    }

    fn single() -> JacobiSpec {
        JacobiSpec::new(c(1.0, 0.0), vec![], vec![c(2.0, 1.0)]).unwrap()
    }

    fn swap2() -> JacobiSpec {
        JacobiSpec::new(c(1.0, 0.0), vec![c(1.0, 0.0)], vec![c(0.0, 0.0); 2]).unwrap()
    }

    #[test]
    fn finite_single_site_impulse() {
        let field = simulate_finite(&single(), &Control::impulse(3), 1, 3).unwrap();
        assert_eq!(field.trace(1), vec![c(1.0, 0.0), c(2.0, 1.0), c(2.0, 4.0)]);
    }

    #[test]
    fn finite_two_sites_impulse() {
        let field = simulate_finite(&swap2(), &Control::impulse(5), 2, 5).unwrap();
        let expect: Vec<_> = [1.0, 0.0, 0.0, 0.0, -1.0].iter().map(|&x| c(x, 0.0)).collect();
        assert_eq!(field.trace(1), expect);
        assert_eq!(field.get(2, 2), c(1.0, 0.0));
        assert_eq!(field.get(2, 4), c(-1.0, 0.0));
    }

    #[test]
    fn zero_control_gives_zero_field() {
        let field = simulate_finite(&swap2(), &Control::zeros(4), 2, 4).unwrap();
        assert!(field.iter().all(|(_, _, z)| z == c(0.0, 0.0)));
        let half = simulate_semi_infinite(&swap2(), &Control::zeros(2), 2).unwrap();
        assert!(half.iter().all(|(_, _, z)| z == c(0.0, 0.0)));
    }

    #[test]
    fn semi_infinite_needs_enough_coefficients() {
        assert!(matches!(
            simulate_semi_infinite(&single(), &Control::impulse(2), 2),
            Err(DynamicsError::InsufficientCoefficients { .. })
        ));
        assert!(matches!(
            simulate_finite(&single(), &Control::impulse(2), 2, 2),
            Err(DynamicsError::SizeExceedsSpec { .. })
        ));
    }

    #[test]
    fn semi_infinite_matches_finite_in_cone() {
        let spec = JacobiSpec::new(
            c(1.0, 0.5),
            vec![c(0.3, -1.0), c(1.2, 0.1)],
            vec![c(0.5, 0.5), c(-1.0, 0.2), c(0.0, 1.0)],
        )
        .unwrap();
        let f = Control::impulse(3);
        let half = simulate_semi_infinite(&spec, &f, 3).unwrap();
        let fin = simulate_finite(&spec, &f, 3, 3).unwrap();
        for n in 1..=3 {
            for t in n..=3 {
                assert_eq!(half.get(n, t as isize), fin.get(n, t as isize));
            }
        }
    }

    #[test]
    fn goursat_diagonal_values() {
        let k = goursat_kernel(&single(), 1).unwrap();
        assert_eq!(k.w(1, 1), Some(c(2.0, 1.0)));
        let k = goursat_kernel(&swap2(), 3).unwrap();
        assert_eq!(k.w(1, 1), Some(c(0.0, 0.0)));
        assert_eq!(k.w(0, 5), Some(c(0.0, 0.0)));
        assert_eq!(k.product(2), Some(c(1.0, 0.0)));
    }

    #[test]
    fn goursat_cone_limits() {
        // N = 2: the cone is n + s <= 4
        let k = goursat_kernel(&swap2(), 3).unwrap();
        assert!(k.w(1, 3).is_some());
        assert!(k.w(2, 2).is_some());
        assert!(k.w(2, 3).is_none());
        assert!(goursat_kernel(&swap2(), 4).is_err());
    }

    #[test]
    fn kernel_response_matches_timestep_small() {
        for spec in [single(), swap2()] {
            let len = 2 * spec.len();
            let a = response_vector(&spec, len, ResponseMethod::Timestep).unwrap();
            let b = response_vector(&spec, len, ResponseMethod::Kernel).unwrap();
            assert!(a.max_abs_diff(&b) < 1e-14);
        }
    }

    #[test]
    fn impulse_diagonal_is_coupling_product() {
        let spec = JacobiSpec::new(
            c(0.5, 1.0),
            vec![c(1.5, -0.5), c(-0.7, 0.2)],
            vec![c(0.1, 0.2), c(0.3, 0.4), c(0.5, 0.6)],
        )
        .unwrap();
        let kernel = goursat_kernel(&spec, 2).unwrap();
        let field = solution_via_kernel(&kernel, &Control::impulse(3)).unwrap();
        let p = spec.coupling_products(3);
        for n in 1..=3 {
            assert_eq!(field.get(n, n as isize), p[n - 1]);
        }
    }

    #[test]
    fn kernel_solution_rejects_short_kernel() {
        let kernel = goursat_kernel(&swap2(), 1).unwrap();
        assert!(matches!(
            solution_via_kernel(&kernel, &Control::impulse(3)),
            Err(DynamicsError::HorizonMismatch { .. })
        ));
    }

    #[test]
    fn response_examples() {
        let r = response_vector(&single(), 2, ResponseMethod::Timestep).unwrap();
        assert_eq!(r.r, vec![c(1.0, 0.0), c(2.0, 1.0)]);
        let r = response_vector(&swap2(), 4, ResponseMethod::Timestep).unwrap();
        assert_eq!(r.r[0], c(1.0, 0.0));
        assert!(response_vector(&single(), 3, ResponseMethod::Kernel).is_err());
    }

    #[test]
    fn auxiliary_conjugates() {
        let r = auxiliary_response(&single(), 2).unwrap();
        assert_eq!(r.r, vec![c(1.0, 0.0), c(2.0, -1.0)]);
    }

    #[test]
    fn convolution_basics() {
        let one = vec![c(1.0, 0.0), c(1.0, 0.0)];
        assert_eq!(convolve(&one, &one), vec![c(1.0, 0.0), c(2.0, 0.0), c(1.0, 0.0)]);
        let f = vec![c(0.5, 1.0), c(-2.0, 0.0), c(3.0, 3.0)];
        assert_eq!(convolve(&[c(1.0, 0.0)], &f), f);
        assert!(convolve(&[], &f).is_empty());
    }

    #[test]
    fn apply_response_is_shifted_convolution() {
        let r = ResponseVector::new(vec![c(1.0, 0.0), c(2.0, 1.0), c(2.0, 4.0)]);
        let f = Control::new(vec![c(1.0, 1.0), c(0.0, -1.0), c(2.0, 0.0)]);
        let out = apply_response(&r, &f).unwrap();
        let full = convolve(&r.r, f.samples());
        assert_eq!(out, full[..3].to_vec());
        assert_eq!(apply_response(&r, &Control::impulse(3)).unwrap(), r.r);
        assert!(apply_response(&r, &Control::impulse(4)).is_err());
    }
}
