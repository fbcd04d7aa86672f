//! Seeded random generators for tests, examples and the CLI self-tests.
//! Coefficients are small integers (or small Gaussian rationals) so exact
//! arithmetic stays fast.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::kp::{LaxOperator, WaveOperator};
use crate::matrix::Matrix;
use crate::microdiff::{MicroOp, TruncationPolicy};
use crate::scalar::{Backend, GaussRational, Scalar};
use crate::series::TruncatedSeries;

pub fn random_scalar(rng: &mut ChaCha8Rng, backend: Backend) -> Scalar {
    let re = rng.gen_range(-3i64..=3);
    let im = rng.gen_range(-3i64..=3);
    match backend {
        Backend::Exact => Scalar::Exact(GaussRational::from_parts(re, 1, im, 1)),
        Backend::Float => Scalar::Float(num_complex::Complex64::new(re as f64, im as f64)),
    }
}

/// A polynomial of degree <= 2 with small integer coefficients, known to
/// the full policy order.
pub fn random_series(rng: &mut ChaCha8Rng, order: i32, backend: Backend) -> TruncatedSeries {
    let deg = rng.gen_range(0..=2usize);
    let coeffs: Vec<Scalar> = (0..=deg).map(|_| random_scalar(rng, backend)).collect();
    TruncatedSeries::new(coeffs, order, backend)
}

pub fn random_matrix_series(
    rng: &mut ChaCha8Rng,
    policy: TruncationPolicy,
    backend: Backend,
) -> Matrix<TruncatedSeries> {
    Matrix::from_fn(policy.n, |_, _| {
        random_series(rng, policy.series_order as i32, backend)
    })
}

/// A random microdifferential operator with orders in [lo, hi].
pub fn random_microop(
    rng: &mut ChaCha8Rng,
    policy: TruncationPolicy,
    backend: Backend,
    lo: i32,
    hi: i32,
) -> MicroOp {
    let mut terms = Vec::new();
    for k in lo..=hi {
        if rng.gen_bool(0.8) {
            terms.push((k, random_matrix_series(rng, policy, backend)));
        }
    }
    MicroOp::from_terms(policy, backend, terms)
}

/// A random Lax operator Id d + u_1 d^{-1} + ... + u_{depth-1} d^{-(depth-1)}.
pub fn random_lax(policy: TruncationPolicy, backend: Backend, rng: &mut ChaCha8Rng) -> LaxOperator {
    let u = (1..policy.depth)
        .map(|_| random_matrix_series(rng, policy, backend))
        .collect();
    LaxOperator::from_u(policy, backend, u).expect("construction preserves the normalization")
}

/// A random wave operator Id + w_1 d^{-1} + ... with series coefficients.
pub fn random_wave(policy: TruncationPolicy, backend: Backend, rng: &mut ChaCha8Rng) -> WaveOperator {
    let w = (1..=policy.depth)
        .map(|_| random_matrix_series(rng, policy, backend))
        .collect();
    WaveOperator::from_w(policy, backend, w).expect("construction preserves the normalization")
}

/// A random wave operator with constant (t-independent) coefficients; the
/// t = 0 lattice of such a W determines it completely, which is what the
/// Sato round trip exercises.
pub fn random_constant_wave(
    policy: TruncationPolicy,
    backend: Backend,
    rng: &mut ChaCha8Rng,
) -> WaveOperator {
    let order = policy.series_order as i32;
    let w = (1..=policy.depth)
        .map(|_| {
            Matrix::from_fn(policy.n, |_, _| {
                TruncatedSeries::constant(random_scalar(rng, backend), order)
            })
        })
        .collect();
    WaveOperator::from_w(policy, backend, w).expect("construction preserves the normalization")
}
