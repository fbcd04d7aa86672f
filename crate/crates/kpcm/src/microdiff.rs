//! Matrix microdifferential operators truncated to a finite window of
//! partial-orders, composed via the Leibniz rule
//!     d^n . f = sum_i C(n,i) f^(i) d^(n-i)
//! with the generalized binomial defined for negative n.
//!
//! Truncation bookkeeping: an operator knows its coefficients for orders
//! >= `floor`; below that they are either exactly zero (`exact_tail`) or
//! unknown. Operations compute the deepest order of the result that is
//! fully determined and never assume an unknown tail vanishes. In the
//! t-direction the per-coefficient series orders carry the same honesty.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::MicroError;
use crate::matrix::Matrix;
use crate::scalar::{Backend, Scalar};
use crate::series::TruncatedSeries;

/// Shared truncation parameters; all operands of one computation must agree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruncationPolicy {
    /// Power-series order N_t: coefficients start out known mod t^(N_t+1).
    pub series_order: u32,
    /// Number of negative partial-orders retained (storage floor -depth).
    pub depth: u32,
    /// Matrix size.
    pub n: usize,
}

impl TruncationPolicy {
    pub fn new(series_order: u32, depth: u32, n: usize) -> Self {
        assert!(depth >= 1, "depth must be at least 1");
        assert!(n >= 1, "matrix size must be at least 1");
        TruncationPolicy {
            series_order,
            depth,
            n,
        }
    }

    pub fn storage_floor(&self) -> i32 {
        -(self.depth as i32)
    }

    fn zero_series(&self, backend: Backend) -> TruncatedSeries {
        TruncatedSeries::zero(self.series_order as i32, backend)
    }

    fn zero_matrix(&self, backend: Backend) -> Matrix<TruncatedSeries> {
        let z = self.zero_series(backend);
        Matrix::filled(self.n, &z)
    }

    pub fn identity_matrix(&self, backend: Backend) -> Matrix<TruncatedSeries> {
        let order = self.series_order as i32;
        Matrix::from_fn(self.n, |i, j| {
            if i == j {
                TruncatedSeries::one(order, backend)
            } else {
                TruncatedSeries::zero(order, backend)
            }
        })
    }

    /// Scalar (1x1-style) series promoted to a diagonal matrix coefficient.
    pub fn diagonal(&self, s: &TruncatedSeries) -> Matrix<TruncatedSeries> {
        Matrix::from_fn(self.n, |i, j| {
            if i == j {
                s.clone()
            } else {
                TruncatedSeries::zero(s.order, s.backend)
            }
        })
    }
}

/// A truncated matrix microdifferential operator sum_k a_k d^k.
#[derive(Debug, Clone)]
pub struct MicroOp {
    pub policy: TruncationPolicy,
    pub backend: Backend,
    /// Orders >= floor are determined.
    floor: i32,
    /// When true, orders below `floor` are exactly zero rather than unknown.
    exact_tail: bool,
    /// Determined coefficients, keys in [floor, top]; the top entry is
    /// nonzero (normal form).
    coeffs: BTreeMap<i32, Matrix<TruncatedSeries>>,
}

fn matrix_known_zero(m: &Matrix<TruncatedSeries>) -> bool {
    m.entries().all(|s| s.is_known_zero())
}

impl MicroOp {
    pub fn zero(policy: TruncationPolicy, backend: Backend) -> Self {
        MicroOp {
            policy,
            backend,
            floor: policy.storage_floor(),
            exact_tail: true,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn identity(policy: TruncationPolicy, backend: Backend) -> Self {
        Self::from_terms(policy, backend, vec![(0, policy.identity_matrix(backend))])
    }

    /// The operator d^k (k may be negative).
    pub fn partial_power(policy: TruncationPolicy, backend: Backend, k: i32) -> Self {
        Self::from_terms(policy, backend, vec![(k, policy.identity_matrix(backend))])
    }

    /// Build from explicit terms; the element is treated as exactly zero
    /// outside them. Terms below the storage floor are dropped, in which
    /// case the tail becomes unknown.
    pub fn from_terms(
        policy: TruncationPolicy,
        backend: Backend,
        terms: Vec<(i32, Matrix<TruncatedSeries>)>,
    ) -> Self {
        let storage_floor = policy.storage_floor();
        let mut dropped = false;
        let mut coeffs: BTreeMap<i32, Matrix<TruncatedSeries>> = BTreeMap::new();
        let mut min_key = 0i32;
        for (k, m) in terms {
            assert_eq!(m.n, policy.n, "matrix size does not match policy");
            if k < storage_floor {
                if !matrix_known_zero(&m) {
                    dropped = true;
                }
                continue;
            }
            min_key = min_key.min(k);
            match coeffs.entry(k) {
                std::collections::btree_map::Entry::Vacant(e) => {
                    e.insert(m);
                }
                std::collections::btree_map::Entry::Occupied(mut e) => {
                    let s = e.get().add(&m);
                    e.insert(s);
                }
            }
        }
        let mut op = MicroOp {
            policy,
            backend,
            floor: if dropped { storage_floor } else { min_key.min(storage_floor) },
            exact_tail: !dropped,
            coeffs,
        };
        op.fill_and_trim();
        op
    }

    /// Fill interior gaps with exact zeros and trim known-zero top entries.
    fn fill_and_trim(&mut self) {
        while let Some((&k, m)) = self.coeffs.iter().next_back() {
            if matrix_known_zero(m) {
                self.coeffs.remove(&k);
            } else {
                break;
            }
        }
        if let (Some(&lo), Some(&hi)) = (
            self.coeffs.keys().next().copied().as_ref(),
            self.coeffs.keys().next_back().copied().as_ref(),
        ) {
            for k in lo..=hi {
                self.coeffs
                    .entry(k)
                    .or_insert_with(|| self.policy.zero_matrix(self.backend));
            }
        }
    }

    /// Largest order with a (known-)nonzero coefficient.
    pub fn top(&self) -> Option<i32> {
        self.coeffs.keys().next_back().copied()
    }

    /// Deepest determined order.
    pub fn determined_floor(&self) -> i32 {
        self.floor
    }

    pub fn has_exact_tail(&self) -> bool {
        self.exact_tail
    }

    pub fn is_known_zero(&self) -> bool {
        self.coeffs.values().all(matrix_known_zero)
    }

    /// Reinterpret the operator as exactly supported on its stored window,
    /// declaring the undetermined deep tail to be zero. This is the
    /// projection onto the truncated model that numeric time stepping
    /// integrates; it is the one deliberate exception to the truncation
    /// honesty rules, so only steppers should call it.
    pub fn truncate_to_window(&self) -> Self {
        let mut out = self.clone();
        out.floor = self.policy.storage_floor().min(out.floor);
        out.exact_tail = true;
        out.fill_and_trim();
        out
    }

    /// Coefficient of d^k; None when the order is undetermined.
    pub fn coeff(&self, k: i32) -> Option<Matrix<TruncatedSeries>> {
        if let Some(m) = self.coeffs.get(&k) {
            return Some(m.clone());
        }
        if k > self.top().unwrap_or(i32::MIN) || (k < self.floor && self.exact_tail) || k >= self.floor {
            return Some(self.policy.zero_matrix(self.backend));
        }
        None
    }

    fn check_compat(&self, other: &Self) -> Result<(), MicroError> {
        if self.policy != other.policy {
            return Err(MicroError::PolicyMismatch);
        }
        if self.backend != other.backend {
            return Err(MicroError::BackendMismatch);
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self, MicroError> {
        self.check_compat(other)?;
        let exact_tail = self.exact_tail && other.exact_tail;
        let floor = if exact_tail {
            self.floor.min(other.floor)
        } else if self.exact_tail {
            other.floor
        } else if other.exact_tail {
            self.floor
        } else {
            self.floor.max(other.floor)
        };
        let mut coeffs = BTreeMap::new();
        let top = self.top().unwrap_or(floor).max(other.top().unwrap_or(floor));
        for k in floor..=top.max(floor) {
            match (self.coeff(k), other.coeff(k)) {
                (Some(a), Some(b)) => {
                    coeffs.insert(k, a.add(&b));
                }
                _ => {}
            }
        }
        let mut op = MicroOp {
            policy: self.policy,
            backend: self.backend,
            floor,
            exact_tail,
            coeffs,
        };
        op.fill_and_trim();
        Ok(op)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, MicroError> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        MicroOp {
            policy: self.policy,
            backend: self.backend,
            floor: self.floor,
            exact_tail: self.exact_tail,
            coeffs: self.coeffs.iter().map(|(k, m)| (*k, m.neg())).collect(),
        }
    }

    pub fn scale(&self, c: &Scalar) -> Self {
        let cs = TruncatedSeries::constant(c.clone(), self.policy.series_order as i32);
        MicroOp {
            policy: self.policy,
            backend: self.backend,
            floor: self.floor,
            exact_tail: self.exact_tail,
            coeffs: self
                .coeffs
                .iter()
                .map(|(k, m)| (*k, m.scale(&cs)))
                .collect(),
        }
    }

    /// Agreement of all coefficients on the commonly determined window
    /// (and commonly known t-orders).
    pub fn agrees_with(&self, other: &Self) -> bool {
        if self.policy != other.policy || self.backend != other.backend {
            return false;
        }
        let top = self
            .top()
            .unwrap_or(self.floor)
            .max(other.top().unwrap_or(other.floor));
        let lo = self.floor.max(other.floor).min(top);
        for k in lo..=top {
            if let (Some(a), Some(b)) = (self.coeff(k), other.coeff(k)) {
                if !a.agrees_with(&b) {
                    return false;
                }
            }
        }
        true
    }

    /// Largest |.| discrepancy against `other` on the common window.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let top = self
            .top()
            .unwrap_or(self.floor)
            .max(other.top().unwrap_or(other.floor));
        let lo = self.floor.max(other.floor).min(top);
        let mut worst = 0.0f64;
        for k in lo..=top {
            if let (Some(a), Some(b)) = (self.coeff(k), other.coeff(k)) {
                for (x, y) in a.entries().zip(b.entries()) {
                    worst = worst.max(x.max_abs_diff(y));
                }
            }
        }
        worst
    }
}

/// Generalized binomial C(n, i) for any integer n, by the multiplicative
/// recurrence.
pub fn generalized_binomial(n: i32, i: u32, backend: Backend) -> Scalar {
    let mut acc = Scalar::one(backend);
    for j in 0..i {
        let num = Scalar::from_int(n as i64 - j as i64, backend);
        let den = Scalar::from_int(j as i64 + 1, backend);
        acc = &(&acc * &num) / &den;
    }
    acc
}

/// Composition (operator product) via the Leibniz rule.
pub fn md_compose(a: &MicroOp, b: &MicroOp) -> Result<MicroOp, MicroError> {
    a.check_compat(b)?;
    let policy = a.policy;
    let backend = a.backend;
    if a.coeffs.is_empty() || b.coeffs.is_empty() {
        // Known-zero operand: product is zero wherever determined.
        let exact = a.exact_tail && b.exact_tail;
        let mut z = MicroOp::zero(policy, backend);
        if !exact {
            z.exact_tail = false;
        }
        return Ok(z);
    }
    let a_top = a.top().unwrap();
    let b_top = b.top().unwrap();
    let fa = if a.exact_tail {
        i32::MIN / 2
    } else {
        a.floor + b_top
    };
    let fb = if b.exact_tail {
        i32::MIN / 2
    } else {
        a_top + b.floor
    };
    let floor = fa.max(fb).max(policy.storage_floor());
    let top = a_top + b_top;
    if top < floor {
        let mut z = MicroOp::zero(policy, backend);
        z.exact_tail = false;
        z.floor = floor;
        return Ok(z);
    }

    // Successive derivative stacks for b's coefficients, built lazily.
    let mut b_derivs: BTreeMap<i32, Vec<Matrix<TruncatedSeries>>> = b
        .coeffs
        .iter()
        .map(|(k, m)| (*k, vec![m.clone()]))
        .collect();

    let mut acc: BTreeMap<i32, Matrix<TruncatedSeries>> = (floor..=top)
        .map(|k| (k, policy.zero_matrix(backend)))
        .collect();

    for (&ka, ma) in &a.coeffs {
        for &kb in b.coeffs.keys().collect::<Vec<_>>() {
            let max_i = (ka + kb - floor).max(-1);
            if max_i < 0 {
                continue;
            }
            for i in 0..=(max_i as u32) {
                let stack = b_derivs.get_mut(&kb).unwrap();
                while stack.len() <= i as usize {
                    let last = stack.last().unwrap();
                    stack.push(last.map(|s| s.derivative()));
                }
                let deriv = &stack[i as usize];
                // A derivative that is known to be zero contributes nothing;
                // one that is fully unknown must still poison the target.
                if matrix_known_zero(deriv) {
                    continue;
                }
                let m = ka + kb - i as i32;
                let coef = generalized_binomial(ka, i, backend);
                if coef.is_zero() {
                    continue;
                }
                let coef_series =
                    TruncatedSeries::constant(coef, policy.series_order as i32);
                let term = ma.mul(deriv).scale(&coef_series);
                let slot = acc.get_mut(&m).unwrap();
                *slot = slot.add(&term);
            }
        }
    }

    let mut op = MicroOp {
        policy,
        backend,
        floor,
        exact_tail: false,
        coeffs: acc,
    };
    op.fill_and_trim();
    Ok(op)
}

/// Split into the differential part (orders >= 0) and the rest.
pub fn md_split(a: &MicroOp) -> (MicroOp, MicroOp) {
    let plus_coeffs: BTreeMap<i32, _> = a
        .coeffs
        .iter()
        .filter(|(k, _)| **k >= 0)
        .map(|(k, m)| (*k, m.clone()))
        .collect();
    let minus_coeffs: BTreeMap<i32, _> = a
        .coeffs
        .iter()
        .filter(|(k, _)| **k < 0)
        .map(|(k, m)| (*k, m.clone()))
        .collect();
    let plus = MicroOp {
        policy: a.policy,
        backend: a.backend,
        floor: if a.floor <= 0 { 0 } else { a.floor },
        exact_tail: a.floor <= 0 || a.exact_tail,
        coeffs: plus_coeffs,
    };
    let minus = MicroOp {
        policy: a.policy,
        backend: a.backend,
        floor: a.floor,
        exact_tail: a.exact_tail,
        coeffs: minus_coeffs,
    };
    let mut plus = plus;
    let mut minus = minus;
    plus.fill_and_trim();
    minus.fill_and_trim();
    (plus, minus)
}

/// AB - BA.
pub fn md_commutator(a: &MicroOp, b: &MicroOp) -> Result<MicroOp, MicroError> {
    md_compose(a, b)?.sub(&md_compose(b, a)?)
}

/// Inverse of Id + (strictly negative orders), by the Neumann series
/// truncated at the policy depth.
pub fn volterra_invert(w: &MicroOp) -> Result<MicroOp, MicroError> {
    if w.top().unwrap_or(0) > 0 {
        return Err(MicroError::NotVolterra);
    }
    let id = MicroOp::identity(w.policy, w.backend);
    match w.coeff(0) {
        Some(c0) => {
            let id_mat = w.policy.identity_matrix(w.backend);
            if !c0.agrees_with(&id_mat) || c0.entries().any(|s| s.is_fully_unknown()) {
                return Err(MicroError::NotVolterra);
            }
        }
        None => return Err(MicroError::NotVolterra),
    }
    let k = id.sub(w)?; // orders <= -1
    let mut acc = id.add(&k)?;
    let mut p = k.clone();
    for _ in 2..=w.policy.depth {
        p = md_compose(&p, &k)?;
        if p.is_known_zero() {
            break;
        }
        acc = acc.add(&p)?;
    }
    Ok(acc)
}

/// The coefficient of d^{-1}.
pub fn md_residue(a: &MicroOp) -> Result<Matrix<TruncatedSeries>, MicroError> {
    a.coeff(-1).ok_or(MicroError::WindowTooShallow {
        needed: -1,
        floor: a.floor,
    })
}

// --- serialization -------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct SeriesDto {
    order: i32,
    coeffs: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct TermDto {
    order: i32,
    matrix: Vec<Vec<SeriesDto>>,
}

#[derive(Serialize, Deserialize)]
struct MicroOpDto {
    policy: TruncationPolicy,
    backend: String,
    floor: i32,
    exact_tail: bool,
    terms: Vec<TermDto>,
}

impl MicroOp {
    fn series_to_dto(s: &TruncatedSeries) -> SeriesDto {
        SeriesDto {
            order: s.order,
            coeffs: (0..=s.order.max(-1))
                .filter_map(|k| s.coeff(k))
                .map(|c| c.to_string())
                .collect(),
        }
    }

    fn series_from_dto(d: &SeriesDto, backend: Backend) -> Result<TruncatedSeries, MicroError> {
        let mut coeffs = Vec::new();
        for c in &d.coeffs {
            let v = match backend {
                Backend::Exact => Scalar::Exact(
                    c.parse()
                        .map_err(crate::error::CoreError::from)
                        .map_err(MicroError::Core)?,
                ),
                Backend::Float => {
                    let z: num_complex::Complex64 = c
                        .parse()
                        .map_err(|_| crate::error::CoreError::Parse(c.clone()))?;
                    Scalar::Float(z)
                }
            };
            coeffs.push(v);
        }
        Ok(TruncatedSeries::new(coeffs, d.order, backend))
    }

    /// Structured text dump: list of (order, n x n array of coefficient
    /// arrays).
    pub fn to_json(&self) -> String {
        let dto = MicroOpDto {
            policy: self.policy,
            backend: match self.backend {
                Backend::Exact => "exact".into(),
                Backend::Float => "float".into(),
            },
            floor: self.floor,
            exact_tail: self.exact_tail,
            terms: self
                .coeffs
                .iter()
                .map(|(k, m)| TermDto {
                    order: *k,
                    matrix: (0..m.n)
                        .map(|i| (0..m.n).map(|j| Self::series_to_dto(m.get(i, j))).collect())
                        .collect(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&dto).expect("serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self, MicroError> {
        let dto: MicroOpDto = serde_json::from_str(text)
            .map_err(|e| MicroError::Core(crate::error::CoreError::Parse(e.to_string())))?;
        let backend = match dto.backend.as_str() {
            "exact" => Backend::Exact,
            "float" => Backend::Float,
            other => {
                return Err(MicroError::Core(crate::error::CoreError::Parse(
                    other.to_string(),
                )))
            }
        };
        let mut terms = Vec::new();
        for t in &dto.terms {
            let m = Matrix::from_fn(dto.policy.n, |i, j| {
                Self::series_from_dto(&t.matrix[i][j], backend)
                    .unwrap_or_else(|_| TruncatedSeries::unknown(backend))
            });
            terms.push((t.order, m));
        }
        let mut op = MicroOp::from_terms(dto.policy, backend, terms);
        op.floor = dto.floor;
        op.exact_tail = dto.exact_tail;
        op.fill_and_trim();
        Ok(op)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const B: Backend = Backend::Exact;

    fn pol() -> TruncationPolicy {
        TruncationPolicy::new(8, 6, 1)
    }

    fn scalar_op(policy: TruncationPolicy, k: i32, s: TruncatedSeries) -> MicroOp {
        MicroOp::from_terms(policy, B, vec![(k, policy.diagonal(&s))])
    }

    fn t_series(policy: TruncationPolicy) -> TruncatedSeries {
        TruncatedSeries::var(policy.series_order as i32, B)
    }

    #[test]
    fn binomials() {
        assert_eq!(generalized_binomial(3, 2, B), Scalar::from_int(3, B));
        assert_eq!(generalized_binomial(-1, 1, B), Scalar::from_int(-1, B));
        assert_eq!(generalized_binomial(-1, 2, B), Scalar::from_int(1, B));
        assert_eq!(generalized_binomial(-2, 3, B), Scalar::from_int(-4, B));
    }

    #[test]
    fn d_compose_t() {
        // d . t = t d + 1
        let p = pol();
        let d = MicroOp::partial_power(p, B, 1);
        let t = scalar_op(p, 0, t_series(p));
        let got = md_compose(&d, &t).unwrap();
        let expect = MicroOp::from_terms(
            p,
            B,
            vec![
                (1, p.diagonal(&t_series(p))),
                (0, p.identity_matrix(B)),
            ],
        );
        assert!(got.agrees_with(&expect));
    }

    #[test]
    fn dinv_compose_t() {
        // d^{-1} . t = t d^{-1} - d^{-2}, using C(-1,1) = -1.
        let p = pol();
        let dinv = MicroOp::partial_power(p, B, -1);
        let t = scalar_op(p, 0, t_series(p));
        let got = md_compose(&dinv, &t).unwrap();
        let expect = MicroOp::from_terms(
            p,
            B,
            vec![
                (-1, p.diagonal(&t_series(p))),
                (-2, p.identity_matrix(B).neg()),
            ],
        );
        assert!(got.agrees_with(&expect));
    }

    #[test]
    fn dinv_compose_d_is_identity() {
        let p = pol();
        let d = MicroOp::partial_power(p, B, 1);
        let dinv = MicroOp::partial_power(p, B, -1);
        let id = MicroOp::identity(p, B);
        assert!(md_compose(&dinv, &d).unwrap().agrees_with(&id));
        assert!(md_compose(&d, &dinv).unwrap().agrees_with(&id));
    }

    #[test]
    fn split_partition() {
        let p = pol();
        let t = t_series(p);
        let t2 = &t * &t;
        let a = MicroOp::from_terms(
            p,
            B,
            vec![
                (2, p.diagonal(&t)),
                (0, p.identity_matrix(B)),
                (-1, p.diagonal(&t2)),
            ],
        );
        let (plus, minus) = md_split(&a);
        assert_eq!(plus.top(), Some(2));
        assert_eq!(minus.top(), Some(-1));
        assert!(plus.add(&minus).unwrap().agrees_with(&a));
    }

    #[test]
    fn commutator_d_t() {
        let p = pol();
        let d = MicroOp::partial_power(p, B, 1);
        let t = scalar_op(p, 0, t_series(p));
        let got = md_commutator(&d, &t).unwrap();
        assert!(got.agrees_with(&MicroOp::identity(p, B)));
        // [d, t^2] = 2t
        let tt = t_series(p);
        let t2 = scalar_op(p, 0, &tt * &tt);
        let two_t = scalar_op(p, 0, tt.scale(&Scalar::from_int(2, B)));
        assert!(md_commutator(&d, &t2).unwrap().agrees_with(&two_t));
        // [A, A] = 0
        let a = md_compose(&d, &t).unwrap();
        assert!(md_commutator(&a, &a).unwrap().is_known_zero());
    }

    #[test]
    fn volterra_inverse_constant() {
        // (1 + c d^{-1})^{-1} = 1 - c d^{-1} + c^2 d^{-2} - ...
        let p = pol();
        let c = Scalar::from_int(3, B);
        let w = MicroOp::from_terms(
            p,
            B,
            vec![
                (0, p.identity_matrix(B)),
                (
                    -1,
                    p.diagonal(&TruncatedSeries::constant(c.clone(), p.series_order as i32)),
                ),
            ],
        );
        let inv = volterra_invert(&w).unwrap();
        for k in 1..=p.depth as i32 {
            let expect = (-&c).pow(k as u32);
            let got = inv.coeff(-k).unwrap();
            assert_eq!(got.get(0, 0).coeff(0).unwrap(), expect, "order -{k}");
        }
        assert!(md_compose(&w, &inv)
            .unwrap()
            .agrees_with(&MicroOp::identity(p, B)));
    }

    #[test]
    fn volterra_inverse_t_coefficient() {
        // (1 + t d^{-1})^{-1} = 1 - t d^{-1} + (t^2 d^{-2} + ...) + O(d^{-3})
        let p = pol();
        let w = MicroOp::from_terms(
            p,
            B,
            vec![(0, p.identity_matrix(B)), (-1, p.diagonal(&t_series(p)))],
        );
        let inv = volterra_invert(&w).unwrap();
        let t = t_series(p);
        assert!(inv.coeff(-1).unwrap().get(0, 0).agrees_with(&(-&t)));
        // t d^{-1} t d^{-1} = t (t d^{-1} - d^{-2}) d^{-1} = t^2 d^{-2} - t d^{-3}
        assert!(inv.coeff(-2).unwrap().get(0, 0).agrees_with(&(&t * &t)));
        assert!(md_compose(&w, &inv)
            .unwrap()
            .agrees_with(&MicroOp::identity(p, B)));
    }

    #[test]
    fn volterra_rejects_non_volterra() {
        let p = pol();
        let d = MicroOp::partial_power(p, B, 1);
        assert!(matches!(volterra_invert(&d), Err(MicroError::NotVolterra)));
        let bad = MicroOp::from_terms(
            p,
            B,
            vec![(0, p.identity_matrix(B).scale(&TruncatedSeries::constant(Scalar::from_int(2, B), 8)))],
        );
        assert!(matches!(volterra_invert(&bad), Err(MicroError::NotVolterra)));
    }

    #[test]
    fn residue_reads_minus_one() {
        let p = pol();
        let d = MicroOp::partial_power(p, B, 1);
        assert!(matrix_known_zero(&md_residue(&d).unwrap()));
        let dinv = MicroOp::partial_power(p, B, -1);
        let r = md_residue(&dinv).unwrap();
        assert_eq!(r.get(0, 0).coeff(0).unwrap(), Scalar::one(B));
        let u = t_series(p);
        let a = MicroOp::from_terms(
            p,
            B,
            vec![(-1, p.diagonal(&u)), (-2, p.identity_matrix(B))],
        );
        assert!(md_residue(&a).unwrap().get(0, 0).agrees_with(&u));
    }

    #[test]
    fn policy_mismatch_rejected() {
        let a = MicroOp::identity(TruncationPolicy::new(8, 6, 1), B);
        let b = MicroOp::identity(TruncationPolicy::new(8, 5, 1), B);
        assert!(matches!(
            md_compose(&a, &b),
            Err(MicroError::PolicyMismatch)
        ));
    }

    #[test]
    fn filtration_order_bound() {
        let p = pol();
        let t = t_series(p);
        let a = MicroOp::from_terms(p, B, vec![(2, p.diagonal(&t)), (0, p.identity_matrix(B))]);
        let b = MicroOp::from_terms(p, B, vec![(1, p.identity_matrix(B))]);
        let ab = md_compose(&a, &b).unwrap();
        assert_eq!(ab.top(), Some(3));
    }

    #[test]
    fn json_roundtrip() {
        let p = pol();
        let t = t_series(p);
        let a = MicroOp::from_terms(
            p,
            B,
            vec![(1, p.diagonal(&t)), (-2, p.identity_matrix(B))],
        );
        let text = a.to_json();
        let back = MicroOp::from_json(&text).unwrap();
        assert!(a.agrees_with(&back));
        assert_eq!(a.determined_floor(), back.determined_floor());
    }
}
