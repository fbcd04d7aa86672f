//! Coefficient scalars: exact Gaussian rationals or complex doubles.
//!
//! Every scalar carries a backend tag. Arithmetic between mismatched
//! backends is a caller error; the public checked operations report it,
//! the operator impls (used internally after validation) panic.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::CoreError;

/// Which coefficient field a value lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Backend {
    /// Gaussian rationals, exact.
    Exact,
    /// Complex double precision.
    Float,
}

/// An element of Q(i), stored as a pair of rationals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GaussRational {
    pub re: BigRational,
    pub im: BigRational,
}

impl GaussRational {
    pub fn new(re: BigRational, im: BigRational) -> Self {
        GaussRational { re, im }
    }

    pub fn from_int(n: i64) -> Self {
        GaussRational {
            re: BigRational::from_integer(BigInt::from(n)),
            im: BigRational::zero(),
        }
    }

    pub fn from_ratio(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        GaussRational {
            re: BigRational::new(BigInt::from(num), BigInt::from(den)),
            im: BigRational::zero(),
        }
    }

    pub fn from_parts(re_num: i64, re_den: i64, im_num: i64, im_den: i64) -> Self {
        assert!(re_den != 0 && im_den != 0, "zero denominator");
        GaussRational {
            re: BigRational::new(BigInt::from(re_num), BigInt::from(re_den)),
            im: BigRational::new(BigInt::from(im_num), BigInt::from(im_den)),
        }
    }

    pub fn zero() -> Self {
        GaussRational {
            re: BigRational::zero(),
            im: BigRational::zero(),
        }
    }

    pub fn one() -> Self {
        GaussRational {
            re: BigRational::one(),
            im: BigRational::zero(),
        }
    }

    pub fn i() -> Self {
        GaussRational {
            re: BigRational::zero(),
            im: BigRational::one(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn add(&self, other: &Self) -> Self {
        GaussRational {
            re: &self.re + &other.re,
            im: &self.im + &other.im,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        GaussRational {
            re: &self.re - &other.re,
            im: &self.im - &other.im,
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        GaussRational {
            re: &self.re * &other.re - &self.im * &other.im,
            im: &self.re * &other.im + &self.im * &other.re,
        }
    }

    pub fn neg(&self) -> Self {
        GaussRational {
            re: -self.re.clone(),
            im: -self.im.clone(),
        }
    }

    pub fn inv(&self) -> Result<Self, CoreError> {
        if self.is_zero() {
            return Err(CoreError::DivisionByZero);
        }
        let norm = &self.re * &self.re + &self.im * &self.im;
        Ok(GaussRational {
            re: &self.re / &norm,
            im: -(&self.im / &norm),
        })
    }

    pub fn to_c64(&self) -> Complex64 {
        Complex64::new(
            self.re.to_f64().unwrap_or(f64::NAN),
            self.im.to_f64().unwrap_or(f64::NAN),
        )
    }
}

fn fmt_rational(r: &BigRational) -> String {
    if r.denom().is_one() {
        format!("{}", r.numer())
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

fn parse_rational(s: &str) -> Result<BigRational, CoreError> {
    let bad = || CoreError::Parse(s.to_string());
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().map_err(|_| bad())?;
            let d: BigInt = d.trim().parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(CoreError::DivisionByZero);
            }
            Ok(BigRational::new(n, d))
        }
        None => {
            let n: BigInt = s.trim().parse().map_err(|_| bad())?;
            Ok(BigRational::from_integer(n))
        }
    }
}

impl fmt::Display for GaussRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im.is_zero() {
            write!(f, "{}", fmt_rational(&self.re))
        } else if self.re.is_zero() {
            write!(f, "{}i", fmt_rational(&self.im))
        } else if self.im.is_negative() {
            write!(
                f,
                "{}-{}i",
                fmt_rational(&self.re),
                fmt_rational(&(-self.im.clone()))
            )
        } else {
            write!(f, "{}+{}i", fmt_rational(&self.re), fmt_rational(&self.im))
        }
    }
}

impl FromStr for GaussRational {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self, CoreError> {
        let s = s.trim();
        if let Some(body) = s.strip_suffix('i') {
            // Split at the last +/- that is not a leading sign or part of "/-".
            let bytes = body.as_bytes();
            let mut split = None;
            for k in (1..bytes.len()).rev() {
                if (bytes[k] == b'+' || bytes[k] == b'-') && bytes[k - 1] != b'/' {
                    split = Some(k);
                    break;
                }
            }
            match split {
                Some(k) => {
                    let re = parse_rational(&body[..k])?;
                    let sign = if bytes[k] == b'-' { -1 } else { 1 };
                    let imtxt = body[k + 1..].trim();
                    let im = if imtxt.is_empty() {
                        BigRational::one()
                    } else {
                        parse_rational(imtxt)?
                    };
                    let im = if sign < 0 { -im } else { im };
                    Ok(GaussRational { re, im })
                }
                None => {
                    let body = body.trim();
                    let im = if body.is_empty() || body == "+" {
                        BigRational::one()
                    } else if body == "-" {
                        -BigRational::one()
                    } else {
                        parse_rational(body)?
                    };
                    Ok(GaussRational {
                        re: BigRational::zero(),
                        im,
                    })
                }
            }
        } else {
            Ok(GaussRational {
                re: parse_rational(s)?,
                im: BigRational::zero(),
            })
        }
    }
}

/// A tagged field element.
#[derive(Debug, Clone, PartialEq)]
pub enum Scalar {
    Exact(GaussRational),
    Float(Complex64),
}

impl Scalar {
    pub fn backend(&self) -> Backend {
        match self {
            Scalar::Exact(_) => Backend::Exact,
            Scalar::Float(_) => Backend::Float,
        }
    }

    pub fn zero(backend: Backend) -> Self {
        match backend {
            Backend::Exact => Scalar::Exact(GaussRational::zero()),
            Backend::Float => Scalar::Float(Complex64::new(0.0, 0.0)),
        }
    }

    pub fn one(backend: Backend) -> Self {
        match backend {
            Backend::Exact => Scalar::Exact(GaussRational::one()),
            Backend::Float => Scalar::Float(Complex64::new(1.0, 0.0)),
        }
    }

    pub fn i(backend: Backend) -> Self {
        match backend {
            Backend::Exact => Scalar::Exact(GaussRational::i()),
            Backend::Float => Scalar::Float(Complex64::new(0.0, 1.0)),
        }
    }

    pub fn from_int(n: i64, backend: Backend) -> Self {
        match backend {
            Backend::Exact => Scalar::Exact(GaussRational::from_int(n)),
            Backend::Float => Scalar::Float(Complex64::new(n as f64, 0.0)),
        }
    }

    pub fn from_ratio(num: i64, den: i64, backend: Backend) -> Self {
        match backend {
            Backend::Exact => Scalar::Exact(GaussRational::from_ratio(num, den)),
            Backend::Float => Scalar::Float(Complex64::new(num as f64 / den as f64, 0.0)),
        }
    }

    pub fn from_c64(z: Complex64) -> Self {
        Scalar::Float(z)
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Scalar::Exact(g) => g.is_zero(),
            Scalar::Float(z) => z.re == 0.0 && z.im == 0.0,
        }
    }

    pub fn to_c64(&self) -> Complex64 {
        match self {
            Scalar::Exact(g) => g.to_c64(),
            Scalar::Float(z) => *z,
        }
    }

    /// Magnitude, for pivoting and tolerance checks.
    pub fn abs(&self) -> f64 {
        self.to_c64().norm()
    }

    pub fn inv(&self) -> Result<Scalar, CoreError> {
        match self {
            Scalar::Exact(g) => Ok(Scalar::Exact(g.inv()?)),
            Scalar::Float(z) => {
                if z.norm() == 0.0 {
                    Err(CoreError::DivisionByZero)
                } else {
                    Ok(Scalar::Float(z.inv()))
                }
            }
        }
    }

    pub fn checked_add(&self, other: &Scalar) -> Result<Scalar, CoreError> {
        if self.backend() != other.backend() {
            return Err(CoreError::BackendMismatch);
        }
        Ok(self + other)
    }

    pub fn checked_mul(&self, other: &Scalar) -> Result<Scalar, CoreError> {
        if self.backend() != other.backend() {
            return Err(CoreError::BackendMismatch);
        }
        Ok(self * other)
    }

    pub fn pow(&self, mut e: u32) -> Scalar {
        let mut acc = Scalar::one(self.backend());
        let mut base = self.clone();
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            e >>= 1;
        }
        acc
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Exact(g) => write!(f, "{g}"),
            Scalar::Float(z) => write!(f, "{z}"),
        }
    }
}

macro_rules! scalar_binop {
    ($trait:ident, $method:ident, $gop:ident, $fop:tt) => {
        impl $trait for &Scalar {
            type Output = Scalar;
            fn $method(self, other: &Scalar) -> Scalar {
                match (self, other) {
                    (Scalar::Exact(a), Scalar::Exact(b)) => Scalar::Exact(a.$gop(b)),
                    (Scalar::Float(a), Scalar::Float(b)) => Scalar::Float(a $fop b),
                    _ => panic!("scalar backend mismatch"),
                }
            }
        }
        impl $trait for Scalar {
            type Output = Scalar;
            fn $method(self, other: Scalar) -> Scalar {
                (&self).$method(&other)
            }
        }
    };
}

scalar_binop!(Add, add, add, +);
scalar_binop!(Sub, sub, sub, -);
scalar_binop!(Mul, mul, mul, *);

impl Div for &Scalar {
    type Output = Scalar;
    fn div(self, other: &Scalar) -> Scalar {
        self * &other.inv().expect("division by zero scalar")
    }
}

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        match self {
            Scalar::Exact(g) => Scalar::Exact(g.neg()),
            Scalar::Float(z) => Scalar::Float(-z),
        }
    }
}

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        -&self
    }
}
