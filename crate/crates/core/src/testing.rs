//! Seeded random Jacobi specs for demos and tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::jacobi::JacobiSpec;
use crate::{c64, ComplexScalar};

/// Smallest `|a_k|` accepted by the generator.
pub const MIN_COUPLING: f64 = 0.1;

/// Real and imaginary parts are drawn from `[-RANGE, RANGE]`.
pub const RANGE: f64 = 2.0;

fn entry(rng: &mut impl Rng) -> ComplexScalar {
    c64(rng.random_range(-RANGE..=RANGE), rng.random_range(-RANGE..=RANGE))
}

fn coupling(rng: &mut impl Rng) -> ComplexScalar {
    loop {
        let z = entry(rng);
        if z.norm() >= MIN_COUPLING {
            return z;
        }
    }
}

/// Random spec of size `n`. With `unit_a0` the boundary coupling is 1.
pub fn random_spec(rng: &mut impl Rng, n: usize, unit_a0: bool) -> JacobiSpec {
    assert!(n >= 1);
    let a0 = if unit_a0 { c64(1.0, 0.0) } else { coupling(rng) };
    let a = (1..n).map(|_| coupling(rng)).collect();
    let b = (0..n).map(|_| entry(rng)).collect();
    JacobiSpec::new(a0, a, b).expect("generated spec is valid")
}

/// Random spec with real coefficients.
pub fn random_real_spec(rng: &mut impl Rng, n: usize) -> JacobiSpec {
    let spec = random_spec(rng, n, false);
    let re = |z: &ComplexScalar| {
        let x = z.re;
        if x.abs() < MIN_COUPLING {
            c64(MIN_COUPLING.copysign(x), 0.0)
        } else {
            c64(x, 0.0)
        }
    };
    JacobiSpec::new(
        re(&spec.a0),
        spec.a.iter().map(re).collect(),
        spec.b.iter().map(|z| c64(z.re, 0.0)).collect(),
    )
    .expect("generated spec is valid")
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `count` specs with sizes cycling through `1..=max_n`.
pub fn corpus(seed: u64, count: usize, max_n: usize) -> Vec<JacobiSpec> {
    let mut rng = rng(seed);
    (0..count)
        .map(|i| random_spec(&mut rng, 1 + i % max_n, false))
        .collect()
}
