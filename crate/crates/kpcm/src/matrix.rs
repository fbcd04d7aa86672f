//! Dense square matrices over any coefficient ring used in the crate.

use crate::poly::MultiPoly;
use crate::scalar::Scalar;
use crate::series::TruncatedSeries;

/// Minimal ring interface for matrix entries.
pub trait Entry: Clone {
    /// A zero value shaped like `proto` (same backend / order / symbol).
    fn zero_like(proto: &Self) -> Self;
    fn add(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn neg(&self) -> Self;
    fn is_zero(&self) -> bool;
}

impl Entry for Scalar {
    fn zero_like(proto: &Self) -> Self {
        Scalar::zero(proto.backend())
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn neg(&self) -> Self {
        -self
    }
    fn is_zero(&self) -> bool {
        Scalar::is_zero(self)
    }
}

impl Entry for TruncatedSeries {
    fn zero_like(proto: &Self) -> Self {
        TruncatedSeries::with_symbol(proto.symbol, vec![], proto.order, proto.backend)
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn neg(&self) -> Self {
        -self
    }
    fn is_zero(&self) -> bool {
        self.is_known_zero() || self.is_fully_unknown()
    }
}

impl Entry for MultiPoly {
    fn zero_like(proto: &Self) -> Self {
        MultiPoly::zero(proto.backend)
    }
    fn add(&self, other: &Self) -> Self {
        MultiPoly::add(self, other)
    }
    fn mul(&self, other: &Self) -> Self {
        MultiPoly::mul(self, other)
    }
    fn neg(&self) -> Self {
        MultiPoly::neg(self)
    }
    fn is_zero(&self) -> bool {
        MultiPoly::is_zero(self)
    }
}

/// An n-by-n matrix in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    pub n: usize,
    data: Vec<T>,
}

impl<T: Entry> Matrix<T> {
    pub fn new(n: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), n * n, "matrix must be square");
        Matrix { n, data }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Matrix { n, data }
    }

    pub fn filled(n: usize, proto: &T) -> Self {
        Matrix {
            n,
            data: vec![T::zero_like(proto); n * n],
        }
    }

    pub fn get(&self, i: usize, j: usize) -> &T {
        &self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.n + j] = v;
    }

    pub fn map<U: Entry>(&self, mut f: impl FnMut(&T) -> U) -> Matrix<U> {
        Matrix {
            n: self.n,
            data: self.data.iter().map(|x| f(x)).collect(),
        }
    }

    pub fn entries(&self) -> impl Iterator<Item = &T> {
        self.data.iter()
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        Matrix {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a.add(b))
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        Matrix {
            n: self.n,
            data: self.data.iter().map(|a| a.neg()).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let proto = &self.data[0];
        Matrix::from_fn(self.n, |i, j| {
            let mut acc = T::zero_like(proto);
            for k in 0..self.n {
                acc = acc.add(&self.get(i, k).mul(other.get(k, j)));
            }
            acc
        })
    }

    pub fn scale(&self, c: &T) -> Self {
        Matrix {
            n: self.n,
            data: self.data.iter().map(|a| a.mul(c)).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|a| a.is_zero())
    }

    /// Determinant by Laplace expansion along the first row; fine for the
    /// small matrices this crate handles.
    pub fn det(&self) -> T {
        let proto = &self.data[0];
        if self.n == 1 {
            return self.data[0].clone();
        }
        let mut acc = T::zero_like(proto);
        for j in 0..self.n {
            let a = self.get(0, j);
            if a.is_zero() {
                continue;
            }
            let minor = Matrix::from_fn(self.n - 1, |r, c| {
                let cc = if c < j { c } else { c + 1 };
                self.get(r + 1, cc).clone()
            });
            let term = a.mul(&minor.det());
            acc = if j % 2 == 0 {
                acc.add(&term)
            } else {
                acc.add(&term.neg())
            };
        }
        acc
    }
}

impl Matrix<TruncatedSeries> {
    /// Evaluate every entry at t = 0. Entries with nothing known map to None.
    pub fn eval_at_zero(&self) -> Option<Matrix<Scalar>> {
        let mut data = Vec::with_capacity(self.n * self.n);
        for e in &self.data {
            data.push(e.eval_at_zero()?);
        }
        Some(Matrix { n: self.n, data })
    }

    pub fn agrees_with(&self, other: &Self) -> bool {
        self.n == other.n
            && self
                .data
                .iter()
                .zip(&other.data)
                .all(|(a, b)| a.agrees_with(b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Backend;

    fn int(n: i64) -> Scalar {
        Scalar::from_int(n, Backend::Exact)
    }

    #[test]
    fn det_2x2_and_3x3() {
        let m = Matrix::new(2, vec![int(1), int(2), int(3), int(4)]);
        assert_eq!(m.det(), int(-2));
        let m3 = Matrix::from_fn(3, |i, j| int(if i == j { 2 } else { 1 }));
        assert_eq!(m3.det(), int(4));
    }

    #[test]
    fn mul_identity() {
        let id = Matrix::from_fn(2, |i, j| int(if i == j { 1 } else { 0 }));
        let m = Matrix::new(2, vec![int(5), int(-1), int(0), int(2)]);
        assert_eq!(id.mul(&m), m);
        assert_eq!(m.mul(&id), m);
    }
}
