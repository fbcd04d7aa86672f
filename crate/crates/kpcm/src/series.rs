//! Truncated formal power series in one variable.
//!
//! A series value is "known modulo t^(order+1)": coefficients c_0..c_order
//! are stored (trailing zeros trimmed), everything above is unknown.
//! Binary operations use min(order_a, order_b); differentiation loses one
//! order. An order of -1 means nothing is known at all, which is how
//! truncation loss propagates honestly through long computations.

use std::ops::{Add, Mul, Neg, Sub};

use crate::error::CoreError;
use crate::scalar::{Backend, Scalar};

pub const DEFAULT_VAR: char = 't';

#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedSeries {
    pub symbol: char,
    /// Known through t^order; -1 means fully unknown.
    pub order: i32,
    /// Trimmed coefficient vector, c_0 first; len <= order + 1.
    coeffs: Vec<Scalar>,
    pub backend: Backend,
}

impl TruncatedSeries {
    pub fn new(coeffs: Vec<Scalar>, order: i32, backend: Backend) -> Self {
        Self::with_symbol(DEFAULT_VAR, coeffs, order, backend)
    }

    pub fn with_symbol(symbol: char, mut coeffs: Vec<Scalar>, order: i32, backend: Backend) -> Self {
        assert!(
            coeffs.iter().all(|c| c.backend() == backend),
            "coefficient backend mismatch"
        );
        if order < 0 {
            coeffs.clear();
        } else {
            coeffs.truncate(order as usize + 1);
            while coeffs.last().is_some_and(|c| c.is_zero()) {
                coeffs.pop();
            }
        }
        TruncatedSeries {
            symbol,
            order: order.max(-1),
            coeffs,
            backend,
        }
    }

    pub fn zero(order: i32, backend: Backend) -> Self {
        Self::new(vec![], order, backend)
    }

    pub fn one(order: i32, backend: Backend) -> Self {
        Self::constant(Scalar::one(backend), order)
    }

    pub fn constant(c: Scalar, order: i32) -> Self {
        let backend = c.backend();
        Self::new(vec![c], order, backend)
    }

    /// The variable t itself.
    pub fn var(order: i32, backend: Backend) -> Self {
        Self::new(vec![Scalar::zero(backend), Scalar::one(backend)], order, backend)
    }

    pub fn unknown(backend: Backend) -> Self {
        Self::new(vec![], -1, backend)
    }

    pub fn from_ints(ints: &[i64], order: i32, backend: Backend) -> Self {
        Self::new(
            ints.iter().map(|&n| Scalar::from_int(n, backend)).collect(),
            order,
            backend,
        )
    }

    /// Coefficient of t^k, or None when k is beyond the known range.
    pub fn coeff(&self, k: i32) -> Option<Scalar> {
        if k < 0 || k > self.order {
            return None;
        }
        Some(
            self.coeffs
                .get(k as usize)
                .cloned()
                .unwrap_or_else(|| Scalar::zero(self.backend)),
        )
    }

    pub fn is_fully_unknown(&self) -> bool {
        self.order < 0
    }

    /// True when every known coefficient vanishes (and something is known).
    pub fn is_known_zero(&self) -> bool {
        self.order >= 0 && self.coeffs.is_empty()
    }

    /// Constant term; requires at least order 0.
    pub fn eval_at_zero(&self) -> Option<Scalar> {
        self.coeff(0)
    }

    fn check_compat(&self, other: &Self) -> Result<(), CoreError> {
        if self.symbol != other.symbol {
            return Err(CoreError::VariableMismatch);
        }
        if self.backend != other.backend {
            return Err(CoreError::BackendMismatch);
        }
        Ok(())
    }

    pub fn scale(&self, c: &Scalar) -> Self {
        assert_eq!(c.backend(), self.backend, "scalar backend mismatch");
        Self::with_symbol(
            self.symbol,
            self.coeffs.iter().map(|x| x * c).collect(),
            self.order,
            self.backend,
        )
    }

    /// Termwise derivative d/dt; the result is known one order less deep.
    pub fn derivative(&self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(j, c)| &Scalar::from_int(j as i64, self.backend) * c)
            .collect();
        Self::with_symbol(self.symbol, coeffs, self.order - 1, self.backend)
    }

    /// Antiderivative with zero constant term; gains one order.
    pub fn integrate(&self) -> Self {
        if self.order < 0 {
            return Self::unknown(self.backend);
        }
        let mut coeffs = vec![Scalar::zero(self.backend)];
        for (j, c) in self.coeffs.iter().enumerate() {
            coeffs.push(c / &Scalar::from_int(j as i64 + 1, self.backend));
        }
        Self::with_symbol(self.symbol, coeffs, self.order + 1, self.backend)
    }

    /// Multiplicative inverse mod t^(order+1). Errors when c_0 = 0.
    pub fn invert(&self) -> Result<Self, CoreError> {
        let c0 = self.coeff(0).ok_or(CoreError::NonUnitConstantTerm)?;
        if c0.is_zero() {
            return Err(CoreError::NonUnitConstantTerm);
        }
        let c0_inv = c0.inv()?;
        let n = self.order as usize;
        let mut inv = vec![c0_inv.clone()];
        for k in 1..=n {
            // b_k = -c0^{-1} * sum_{j=1..k} a_j b_{k-j}
            let mut acc = Scalar::zero(self.backend);
            for j in 1..=k {
                if let Some(aj) = self.coeff(j as i32) {
                    acc = &acc + &(&aj * &inv[k - j]);
                }
            }
            inv.push(-&(&c0_inv * &acc));
        }
        Ok(Self::with_symbol(self.symbol, inv, self.order, self.backend))
    }

    /// Agreement on the commonly known prefix.
    pub fn agrees_with(&self, other: &Self) -> bool {
        if self.symbol != other.symbol || self.backend != other.backend {
            return false;
        }
        let n = self.order.min(other.order);
        (0..=n).all(|k| self.coeff(k) == other.coeff(k))
    }

    /// Maximum |.| over known coefficients of the difference (float use).
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let n = self.order.min(other.order);
        (0..=n.max(-1))
            .filter_map(|k| Some((self.coeff(k)? - other.coeff(k)?).abs()))
            .fold(0.0, f64::max)
    }
}

/// Checked product: same variable and backend, order = min.
pub fn ts_mul(a: &TruncatedSeries, b: &TruncatedSeries) -> Result<TruncatedSeries, CoreError> {
    a.check_compat(b)?;
    Ok(a * b)
}

/// Checked sum.
pub fn ts_add(a: &TruncatedSeries, b: &TruncatedSeries) -> Result<TruncatedSeries, CoreError> {
    a.check_compat(b)?;
    Ok(a + b)
}

/// Checked inverse mod t^(N+1).
pub fn ts_invert(a: &TruncatedSeries) -> Result<TruncatedSeries, CoreError> {
    a.invert()
}

impl Add for &TruncatedSeries {
    type Output = TruncatedSeries;
    fn add(self, other: &TruncatedSeries) -> TruncatedSeries {
        assert_eq!(self.symbol, other.symbol, "series variable mismatch");
        assert_eq!(self.backend, other.backend, "series backend mismatch");
        let order = self.order.min(other.order);
        let len = self.coeffs.len().max(other.coeffs.len());
        let mut coeffs = Vec::with_capacity(len);
        for k in 0..len {
            let a = self
                .coeffs
                .get(k)
                .cloned()
                .unwrap_or_else(|| Scalar::zero(self.backend));
            let b = other
                .coeffs
                .get(k)
                .cloned()
                .unwrap_or_else(|| Scalar::zero(self.backend));
            coeffs.push(&a + &b);
        }
        TruncatedSeries::with_symbol(self.symbol, coeffs, order, self.backend)
    }
}

impl Sub for &TruncatedSeries {
    type Output = TruncatedSeries;
    fn sub(self, other: &TruncatedSeries) -> TruncatedSeries {
        self + &(-other)
    }
}

impl Neg for &TruncatedSeries {
    type Output = TruncatedSeries;
    fn neg(self) -> TruncatedSeries {
        TruncatedSeries::with_symbol(
            self.symbol,
            self.coeffs.iter().map(|c| -c).collect(),
            self.order,
            self.backend,
        )
    }
}

impl Mul for &TruncatedSeries {
    type Output = TruncatedSeries;
    fn mul(self, other: &TruncatedSeries) -> TruncatedSeries {
        assert_eq!(self.symbol, other.symbol, "series variable mismatch");
        assert_eq!(self.backend, other.backend, "series backend mismatch");
        let order = self.order.min(other.order);
        if order < 0 {
            return TruncatedSeries::unknown(self.backend);
        }
        let len = (self.coeffs.len() + other.coeffs.len()).saturating_sub(1);
        let len = len.min(order as usize + 1);
        let mut coeffs = vec![Scalar::zero(self.backend); len];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                if i + j >= len {
                    break;
                }
                coeffs[i + j] = &coeffs[i + j] + &(a * b);
            }
        }
        TruncatedSeries::with_symbol(self.symbol, coeffs, order, self.backend)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const N: i32 = 8;
    const B: Backend = Backend::Exact;

    #[test]
    fn mul_difference_of_squares() {
        let a = TruncatedSeries::from_ints(&[1, 1], 3, B);
        let b = TruncatedSeries::from_ints(&[1, -1], 3, B);
        let expect = TruncatedSeries::from_ints(&[1, 0, -1], 3, B);
        assert_eq!(ts_mul(&a, &b).unwrap(), expect);
    }

    #[test]
    fn mul_telescoping() {
        let ones = TruncatedSeries::from_ints(&[1; 9], N, B);
        let fac = TruncatedSeries::from_ints(&[1, -1], N, B);
        assert_eq!(ts_mul(&ones, &fac).unwrap(), TruncatedSeries::one(N, B));
    }

    #[test]
    fn mul_hand_cauchy() {
        // (1+2t+3t^2)(2+t) mod t^3 -> 2 + 5t + 8t^2, by direct convolution.
        let a = TruncatedSeries::from_ints(&[1, 2, 3], 2, B);
        let b = TruncatedSeries::from_ints(&[2, 1], 2, B);
        assert_eq!(
            ts_mul(&a, &b).unwrap(),
            TruncatedSeries::from_ints(&[2, 5, 8], 2, B)
        );
    }

    #[test]
    fn invert_identity_and_geometric() {
        let one = TruncatedSeries::one(5, B);
        assert_eq!(one.invert().unwrap(), one);
        let a = TruncatedSeries::from_ints(&[1, -1], 3, B);
        assert_eq!(
            a.invert().unwrap(),
            TruncatedSeries::from_ints(&[1, 1, 1, 1], 3, B)
        );
    }

    // Independent oracle: long division of 1 by the series, coefficient
    // by coefficient, without using `invert`.
    fn divide_one_by(a: &TruncatedSeries) -> Vec<Scalar> {
        let n = a.order as usize;
        let mut rem = vec![Scalar::zero(B); n + 1];
        rem[0] = Scalar::one(B);
        let c0inv = a.coeff(0).unwrap().inv().unwrap();
        let mut q = Vec::new();
        for k in 0..=n {
            let qk = &rem[k] * &c0inv;
            for j in 0..=(n - k) {
                if let Some(aj) = a.coeff(j as i32) {
                    rem[k + j] = &rem[k + j] - &(&qk * &aj);
                }
            }
            q.push(qk);
        }
        q
    }

    #[test]
    fn invert_two_plus_t_against_division_oracle() {
        let a = TruncatedSeries::from_ints(&[2, 1], 2, B);
        let oracle = divide_one_by(&a);
        assert_eq!(
            oracle,
            vec![
                Scalar::from_ratio(1, 2, B),
                Scalar::from_ratio(-1, 4, B),
                Scalar::from_ratio(1, 8, B)
            ]
        );
        let inv = a.invert().unwrap();
        for (k, c) in oracle.iter().enumerate() {
            assert_eq!(inv.coeff(k as i32).unwrap(), *c);
        }
    }

    #[test]
    fn invert_rejects_zero_constant_term() {
        let a = TruncatedSeries::from_ints(&[0, 1], 3, B);
        assert!(matches!(a.invert(), Err(CoreError::NonUnitConstantTerm)));
    }

    #[test]
    fn mixed_order_takes_min() {
        let a = TruncatedSeries::from_ints(&[1, 1, 1], 6, B);
        let b = TruncatedSeries::from_ints(&[1, 2], 3, B);
        assert_eq!(ts_mul(&a, &b).unwrap().order, 3);
        assert_eq!((&a + &b).order, 3);
    }

    #[test]
    fn backend_mismatch_rejected() {
        let a = TruncatedSeries::one(3, Backend::Exact);
        let b = TruncatedSeries::one(3, Backend::Float);
        assert!(matches!(ts_mul(&a, &b), Err(CoreError::BackendMismatch)));
    }

    fn random_series(rng: &mut ChaCha8Rng) -> TruncatedSeries {
        let deg = rng.gen_range(0..=3);
        let coeffs: Vec<i64> = (0..=deg).map(|_| rng.gen_range(-3..=3)).collect();
        TruncatedSeries::from_ints(&coeffs, N, B)
    }

    #[test]
    fn ring_axioms_randomized() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let a = random_series(&mut rng);
            let b = random_series(&mut rng);
            let c = random_series(&mut rng);
            assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
            assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
            assert_eq!(&a * &b, &b * &a);
        }
    }

    #[test]
    fn mul_by_inverse_is_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..50 {
            let mut a = random_series(&mut rng);
            if a.coeff(0).unwrap().is_zero() {
                a = &a + &TruncatedSeries::one(N, B);
            }
            if a.coeff(0).unwrap().is_zero() {
                continue;
            }
            let inv = a.invert().unwrap();
            assert!((&a * &inv).agrees_with(&TruncatedSeries::one(N, B)));
        }
    }

    #[test]
    fn derivative_loses_one_order() {
        let a = TruncatedSeries::from_ints(&[5, 3, 2], 4, B);
        let d = a.derivative();
        assert_eq!(d.order, 3);
        assert_eq!(d.coeff(0).unwrap(), Scalar::from_int(3, B));
        assert_eq!(d.coeff(1).unwrap(), Scalar::from_int(4, B));
        assert!(a.derivative().integrate().agrees_with(&TruncatedSeries::from_ints(&[0, 3, 2], 4, B)));
    }
}
