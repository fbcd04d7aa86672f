//! Sparse polynomials in the first three KP times (t1, t2, t3), and
//! rational functions built from them.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::CoreError;
use crate::scalar::{Backend, Scalar};

pub const NVARS: usize = 3;

/// Sparse trivariate polynomial; no zero coefficients are stored.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiPoly {
    terms: BTreeMap<[u32; NVARS], Scalar>,
    pub backend: Backend,
}

impl MultiPoly {
    pub fn zero(backend: Backend) -> Self {
        MultiPoly {
            terms: BTreeMap::new(),
            backend,
        }
    }

    pub fn constant(c: Scalar) -> Self {
        let backend = c.backend();
        let mut p = Self::zero(backend);
        if !c.is_zero() {
            p.terms.insert([0; NVARS], c);
        }
        p
    }

    pub fn one(backend: Backend) -> Self {
        Self::constant(Scalar::one(backend))
    }

    /// The variable t_{i+1} for i in 0..3.
    pub fn var(i: usize, backend: Backend) -> Self {
        assert!(i < NVARS, "variable index out of range");
        let mut e = [0u32; NVARS];
        e[i] = 1;
        Self::monomial(e, Scalar::one(backend))
    }

    pub fn monomial(exps: [u32; NVARS], c: Scalar) -> Self {
        let backend = c.backend();
        let mut p = Self::zero(backend);
        if !c.is_zero() {
            p.terms.insert(exps, c);
        }
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms
            .keys()
            .map(|e| e.iter().sum::<u32>())
            .max()
            .unwrap_or(0)
    }

    pub fn degree_in(&self, var: usize) -> u32 {
        self.terms.keys().map(|e| e[var]).max().unwrap_or(0)
    }

    pub fn coeff(&self, exps: [u32; NVARS]) -> Scalar {
        self.terms
            .get(&exps)
            .cloned()
            .unwrap_or_else(|| Scalar::zero(self.backend))
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u32; NVARS], &Scalar)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    fn insert_add(&mut self, exps: [u32; NVARS], c: Scalar) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(exps) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let s = e.get() + &c;
                if s.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = s;
                }
            }
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.backend, other.backend, "poly backend mismatch");
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.insert_add(*e, c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        MultiPoly {
            terms: self.terms.iter().map(|(e, c)| (*e, -c)).collect(),
            backend: self.backend,
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.backend, other.backend, "poly backend mismatch");
        let mut out = Self::zero(self.backend);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e = [ea[0] + eb[0], ea[1] + eb[1], ea[2] + eb[2]];
                out.insert_add(e, ca * cb);
            }
        }
        out
    }

    pub fn scale(&self, c: &Scalar) -> Self {
        if c.is_zero() {
            return Self::zero(self.backend);
        }
        MultiPoly {
            terms: self.terms.iter().map(|(e, x)| (*e, x * c)).collect(),
            backend: self.backend,
        }
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Self::one(self.backend);
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    /// Exact evaluation at a point.
    pub fn eval(&self, point: &[Scalar]) -> Result<Scalar, CoreError> {
        if point.len() != NVARS {
            return Err(CoreError::DimensionMismatch {
                expected: NVARS,
                got: point.len(),
            });
        }
        let mut acc = Scalar::zero(self.backend);
        for (e, c) in &self.terms {
            let mut term = c.clone();
            for (i, p) in point.iter().enumerate() {
                term = &term * &p.pow(e[i]);
            }
            acc = &acc + &term;
        }
        Ok(acc)
    }

    /// Exact partial derivative with respect to variable `var`.
    pub fn partial(&self, var: usize) -> Result<Self, CoreError> {
        if var >= NVARS {
            return Err(CoreError::DimensionMismatch {
                expected: NVARS,
                got: var,
            });
        }
        let mut out = Self::zero(self.backend);
        for (e, c) in &self.terms {
            if e[var] == 0 {
                continue;
            }
            let mut ne = *e;
            ne[var] -= 1;
            out.insert_add(ne, &Scalar::from_int(e[var] as i64, self.backend) * c);
        }
        Ok(out)
    }

    /// Substitute values for t2 and t3, leaving a univariate polynomial in
    /// t1 (dense ascending coefficients).
    pub fn univariate_in_t1(&self, t2: &Scalar, t3: &Scalar) -> Vec<Scalar> {
        let deg = self.degree_in(0) as usize;
        let mut coeffs = vec![Scalar::zero(self.backend); deg + 1];
        for (e, c) in &self.terms {
            let v = &(c * &t2.pow(e[1])) * &t3.pow(e[2]);
            coeffs[e[0] as usize] = &coeffs[e[0] as usize] + &v;
        }
        coeffs
    }

    /// For the exact backend: this polynomial scaled by the least common
    /// multiple of all coefficient denominators, so every coefficient is
    /// a Gaussian integer. Keeping denominators out of the coefficients
    /// makes repeated exact multiplication dramatically cheaper, and a
    /// constant rescale is free for anything built from log-derivatives.
    /// Float polynomials are returned unchanged.
    pub fn clear_denominators(&self) -> MultiPoly {
        use num_bigint::BigInt;
        use num_integer::Integer;
        use num_rational::BigRational;
        use num_traits::One;
        let mut lcm = BigInt::one();
        for (_, c) in &self.terms {
            if let Scalar::Exact(g) = c {
                lcm = lcm.lcm(g.re.denom());
                lcm = lcm.lcm(g.im.denom());
            }
        }
        if lcm.is_one() {
            return self.clone();
        }
        let factor = Scalar::Exact(crate::scalar::GaussRational::new(
            BigRational::from(lcm),
            BigRational::from(BigInt::from(0)),
        ));
        self.scale(&factor)
    }

    pub fn to_float(&self) -> MultiPoly {
        let mut out = MultiPoly::zero(Backend::Float);
        for (e, c) in &self.terms {
            out.insert_add(*e, Scalar::from_c64(c.to_c64()));
        }
        out
    }
}

impl fmt::Display for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({c})")?;
            for (i, &p) in e.iter().enumerate() {
                if p > 0 {
                    write!(f, "*t{}^{}", i + 1, p)?;
                }
            }
        }
        Ok(())
    }
}

/// Quotient of two trivariate polynomials. Equality is tested by
/// cross-multiplication; no normal form is maintained.
#[derive(Debug, Clone)]
pub struct RationalFunction {
    pub num: MultiPoly,
    pub den: MultiPoly,
}

impl RationalFunction {
    pub fn new(num: MultiPoly, den: MultiPoly) -> Result<Self, CoreError> {
        if den.is_zero() {
            return Err(CoreError::ZeroDenominator);
        }
        Ok(RationalFunction { num, den })
    }

    pub fn from_poly(p: MultiPoly) -> Self {
        let backend = p.backend;
        RationalFunction {
            num: p,
            den: MultiPoly::one(backend),
        }
    }

    pub fn zero(backend: Backend) -> Self {
        Self::from_poly(MultiPoly::zero(backend))
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn eq_cross_mul(&self, other: &Self) -> bool {
        self.num.mul(&other.den) == other.num.mul(&self.den)
    }

    pub fn add(&self, other: &Self) -> Self {
        RationalFunction {
            num: self.num.mul(&other.den).add(&other.num.mul(&self.den)),
            den: self.den.mul(&other.den),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        RationalFunction {
            num: self.num.mul(&other.num),
            den: self.den.mul(&other.den),
        }
    }

    pub fn neg(&self) -> Self {
        RationalFunction {
            num: self.num.neg(),
            den: self.den.clone(),
        }
    }

    /// Quotient-rule derivative; denominators square, so prefer the
    /// power-tower helpers in `kp` for repeated differentiation.
    pub fn derivative(&self, var: usize) -> Result<Self, CoreError> {
        let num = self
            .num
            .partial(var)?
            .mul(&self.den)
            .sub(&self.num.mul(&self.den.partial(var)?));
        Ok(RationalFunction {
            num,
            den: self.den.mul(&self.den),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const B: Backend = Backend::Exact;

    fn int(n: i64) -> Scalar {
        Scalar::from_int(n, B)
    }

    #[test]
    fn partial_power_rule() {
        // d/dt1 (t1^2 t2) = 2 t1 t2
        let p = MultiPoly::monomial([2, 1, 0], int(1));
        let expect = MultiPoly::monomial([1, 1, 0], int(2));
        assert_eq!(p.partial(0).unwrap(), expect);
    }

    #[test]
    fn eval_direct_substitution() {
        // t1 t2 + t3 at (1,2,3) = 5
        let p = MultiPoly::monomial([1, 1, 0], int(1)).add(&MultiPoly::var(2, B));
        assert_eq!(p.eval(&[int(1), int(2), int(3)]).unwrap(), int(5));
    }

    #[test]
    fn eval_dimension_mismatch() {
        let p = MultiPoly::var(0, B);
        assert!(matches!(
            p.eval(&[int(1)]),
            Err(CoreError::DimensionMismatch { .. })
        ));
    }

    fn random_poly(rng: &mut ChaCha8Rng) -> MultiPoly {
        let mut p = MultiPoly::zero(B);
        for _ in 0..rng.gen_range(1..=5) {
            let e = [
                rng.gen_range(0..3),
                rng.gen_range(0..3),
                rng.gen_range(0..2),
            ];
            p = p.add(&MultiPoly::monomial(e, int(rng.gen_range(-4..=4))));
        }
        p
    }

    #[test]
    fn product_rule_randomized() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let p = random_poly(&mut rng);
            let q = random_poly(&mut rng);
            let lhs = p.mul(&q).partial(1).unwrap();
            let rhs = p.partial(1).unwrap().mul(&q).add(&p.mul(&q.partial(1).unwrap()));
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn ring_axioms_randomized() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let a = random_poly(&mut rng);
            let b = random_poly(&mut rng);
            let c = random_poly(&mut rng);
            assert_eq!(a.mul(&b).mul(&c), a.mul(&b.mul(&c)));
            assert_eq!(a.mul(&b.add(&c)), a.mul(&b).add(&a.mul(&c)));
        }
    }

    #[test]
    fn no_zero_terms_stored() {
        let a = MultiPoly::var(0, B);
        let d = a.sub(&a);
        assert!(d.is_zero());
        assert_eq!(d.num_terms(), 0);
        assert_eq!(a.add(&a.neg()).num_terms(), 0);
    }

    #[test]
    fn rational_function_basics() {
        let t1 = MultiPoly::var(0, B);
        let r = RationalFunction::new(t1.clone(), t1.clone()).unwrap();
        let one = RationalFunction::from_poly(MultiPoly::one(B));
        assert!(r.eq_cross_mul(&one));
        assert!(matches!(
            RationalFunction::new(t1, MultiPoly::zero(B)),
            Err(CoreError::ZeroDenominator)
        ));
    }
}
