//! Lax and wave operators, dressing, the KP flows dL/dt_n = [L, (L^n)_+],
//! and the scalar KP equation as an exact rational-function residual.

use crate::error::{CoreError, MicroError};
use crate::matrix::Matrix;
use crate::microdiff::{md_commutator, md_compose, md_split, volterra_invert, MicroOp, TruncationPolicy};
use crate::poly::{MultiPoly, RationalFunction};
use crate::scalar::{Backend, Scalar};
use crate::series::TruncatedSeries;

/// Sign epsilon in d/dt1 u_k = epsilon * u_k', fixed once by the exact
/// computation [L, (L^1)_+] = [L, d] = -sum u_k' d^{-k} and referenced by
/// everything downstream.
pub const TRANSLATION_SIGN: i64 = -1;

/// L = Id d + u_1 d^{-1} + u_2 d^{-2} + ...
#[derive(Debug, Clone)]
pub struct LaxOperator {
    pub op: MicroOp,
}

impl LaxOperator {
    /// Validates the Lax normalization: nothing above order 1, Id at
    /// order 1, zero at order 0 (on all known data).
    pub fn try_new(op: MicroOp) -> Result<Self, MicroError> {
        let id = op.policy.identity_matrix(op.backend);
        let zero = op.policy.identity_matrix(op.backend).sub(&id);
        // Orders above 1 must vanish on all known data. Truncation can
        // leave vacuous (fully undetermined) coefficients up there; those
        // carry no information and are not a shape violation.
        for k in 2..=op.top().unwrap_or(1) {
            match op.coeff(k) {
                Some(m) if m.agrees_with(&zero) => {}
                None => {}
                _ => return Err(MicroError::NotLax),
            }
        }
        match (op.coeff(1), op.coeff(0)) {
            (Some(a1), Some(a0)) => {
                if !a1.agrees_with(&id) || !a0.agrees_with(&zero) {
                    return Err(MicroError::NotLax);
                }
            }
            _ => return Err(MicroError::NotLax),
        }
        Ok(LaxOperator { op })
    }

    /// Id d + sum_k u[k] d^{-(k+1)}.
    pub fn from_u(
        policy: TruncationPolicy,
        backend: Backend,
        u: Vec<Matrix<TruncatedSeries>>,
    ) -> Result<Self, MicroError> {
        let mut terms = vec![(1, policy.identity_matrix(backend))];
        for (k, m) in u.into_iter().enumerate() {
            terms.push((-(k as i32) - 1, m));
        }
        Self::try_new(MicroOp::from_terms(policy, backend, terms))
    }

    pub fn vacuum(policy: TruncationPolicy, backend: Backend) -> Self {
        LaxOperator {
            op: MicroOp::partial_power(policy, backend, 1),
        }
    }

    /// u_k, the coefficient of d^{-k}.
    pub fn u(&self, k: u32) -> Option<Matrix<TruncatedSeries>> {
        self.op.coeff(-(k as i32))
    }

    pub fn agrees_with(&self, other: &Self) -> bool {
        self.op.agrees_with(&other.op)
    }

    pub fn to_json(&self) -> String {
        self.op.to_json()
    }
}

/// W = Id + w_1 d^{-1} + w_2 d^{-2} + ...
#[derive(Debug, Clone)]
pub struct WaveOperator {
    pub op: MicroOp,
}

impl WaveOperator {
    pub fn try_new(op: MicroOp) -> Result<Self, MicroError> {
        let id = op.policy.identity_matrix(op.backend);
        let zero = id.sub(&id);
        // As in LaxOperator::try_new, vacuous coefficients above the top
        // are tolerated; determined nonzero ones are not.
        for k in 1..=op.top().unwrap_or(0) {
            match op.coeff(k) {
                Some(m) if m.agrees_with(&zero) => {}
                None => {}
                _ => return Err(MicroError::NotVolterra),
            }
        }
        match op.coeff(0) {
            Some(a0) if a0.agrees_with(&id) => {}
            _ => return Err(MicroError::NotVolterra),
        }
        Ok(WaveOperator { op })
    }

    pub fn identity(policy: TruncationPolicy, backend: Backend) -> Self {
        WaveOperator {
            op: MicroOp::identity(policy, backend),
        }
    }

    /// Id + sum_k w[k] d^{-(k+1)}.
    pub fn from_w(
        policy: TruncationPolicy,
        backend: Backend,
        w: Vec<Matrix<TruncatedSeries>>,
    ) -> Result<Self, MicroError> {
        let mut terms = vec![(0, policy.identity_matrix(backend))];
        for (k, m) in w.into_iter().enumerate() {
            terms.push((-(k as i32) - 1, m));
        }
        Self::try_new(MicroOp::from_terms(policy, backend, terms))
    }

    pub fn w(&self, k: u32) -> Option<Matrix<TruncatedSeries>> {
        self.op.coeff(-(k as i32))
    }

    pub fn invert(&self) -> Result<MicroOp, MicroError> {
        volterra_invert(&self.op)
    }

    pub fn agrees_with(&self, other: &Self) -> bool {
        self.op.agrees_with(&other.op)
    }
}

/// L = W d W^{-1}.
pub fn dress(w: &WaveOperator) -> Result<LaxOperator, MicroError> {
    let winv = w.invert()?;
    let d = MicroOp::partial_power(w.op.policy, w.op.backend, 1);
    let op = md_compose(&md_compose(&w.op, &d)?, &winv)?;
    LaxOperator::try_new(op)
}

/// A wave operator with dress(W) = L on determined orders, built order by
/// order from the recursion w_k' = -(coefficient of d^{-k} in L_- W_{<k}),
/// normalizing each w_k(0) = 0.
pub fn wave_from_lax(l: &LaxOperator) -> Result<WaveOperator, MicroError> {
    let policy = l.op.policy;
    let backend = l.op.backend;
    let (_, l_minus) = md_split(&l.op);
    let mut w = MicroOp::identity(policy, backend);
    for k in 1..=policy.depth as i32 {
        let rhs = md_compose(&l_minus, &w)?;
        let c = rhs.coeff(-k).ok_or(MicroError::WindowTooShallow {
            needed: -k,
            floor: rhs.determined_floor(),
        })?;
        let wk = c.map(|s| s.integrate()).neg();
        w = w.add(&MicroOp::from_terms(policy, backend, vec![(-k, wk)]))?;
    }
    WaveOperator::try_new(w)
}

fn lax_power(l: &LaxOperator, m: u32) -> Result<MicroOp, MicroError> {
    let mut p = l.op.clone();
    for _ in 1..m {
        p = md_compose(&p, &l.op)?;
    }
    Ok(p)
}

/// [L, (L^m)_+]; a tangent vector to Lax space (orders <= -1).
pub fn kp_vector_field(l: &LaxOperator, m: u32) -> Result<MicroOp, MicroError> {
    let p = lax_power(l, m)?;
    let (plus, _) = md_split(&p);
    md_commutator(&l.op, &plus)
}

// --- jets in a formal step parameter -------------------------------------
//
// A jet is a polynomial sum_j L_j s^j with MicroOp coefficients, truncated
// at a fixed degree. The Taylor stepper and the flow-compatibility check
// both reduce to jet arithmetic; everything stays exact on the exact
// backend.

fn jet_compose(a: &[MicroOp], b: &[MicroOp], deg: usize) -> Result<Vec<MicroOp>, MicroError> {
    let policy = a[0].policy;
    let backend = a[0].backend;
    let mut out = vec![MicroOp::zero(policy, backend); deg + 1];
    for (i, ai) in a.iter().enumerate() {
        for (j, bj) in b.iter().enumerate() {
            if i + j > deg {
                continue;
            }
            out[i + j] = out[i + j].add(&md_compose(ai, bj)?)?;
        }
    }
    Ok(out)
}

fn jet_vector_field(l: &[MicroOp], m: u32, deg: usize) -> Result<Vec<MicroOp>, MicroError> {
    let mut p = l[..=deg.min(l.len() - 1)].to_vec();
    for _ in 1..m {
        p = jet_compose(&p, &l[..=deg.min(l.len() - 1)], deg)?;
    }
    let p_plus: Vec<MicroOp> = p.iter().map(|op| md_split(op).0).collect();
    let lp = jet_compose(&l[..=deg.min(l.len() - 1)], &p_plus, deg)?;
    let pl = jet_compose(&p_plus, &l[..=deg.min(l.len() - 1)], deg)?;
    lp.iter().zip(&pl).map(|(x, y)| x.sub(y)).collect()
}

/// The order-K Taylor jet of L(t_m): coefficients L_0..L_K with
/// L(t_m) = sum L_j t_m^j, solved degree by degree from L' = [L,(L^m)_+].
pub fn kp_taylor_jet(l: &LaxOperator, m: u32, k: u32) -> Result<Vec<MicroOp>, MicroError> {
    let mut jets = vec![l.op.clone()];
    for j in 0..k as usize {
        let f = jet_vector_field(&jets, m, j)?;
        let next = f[j].scale(&Scalar::from_ratio(1, j as i64 + 1, l.op.backend));
        jets.push(next);
    }
    Ok(jets)
}

/// Taylor jet of the window-projected flow: every jet coefficient is
/// re-declared exactly supported on the window, matching what RK4
/// integrates. `kp_taylor_jet` itself stays honest for identity checks.
fn kp_taylor_jet_windowed(
    l: &LaxOperator,
    m: u32,
    k: u32,
) -> Result<Vec<MicroOp>, MicroError> {
    let mut jets = vec![l.op.truncate_to_window()];
    for j in 0..k as usize {
        let f = jet_vector_field(&jets, m, j)?;
        let next = f[j]
            .scale(&Scalar::from_ratio(1, j as i64 + 1, l.op.backend))
            .truncate_to_window();
        jets.push(next);
    }
    Ok(jets)
}

/// Mixed second jet d_n(d_m L) = DV_m[V_n(L)], via a first-order jet along
/// flow n pushed through V_m.
pub fn kp_mixed_jet(l: &LaxOperator, m: u32, n: u32) -> Result<MicroOp, MicroError> {
    let vn = kp_vector_field(l, n)?;
    let jet = vec![l.op.clone(), vn];
    let f = jet_vector_field(&jet, m, 1)?;
    Ok(f[1].clone())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepMethod {
    /// Classical RK4; float backend only.
    Rk4,
    /// Exact order-K Taylor jet of the flow, then evaluation at dt.
    Taylor(u32),
}

/// Project a float operator back onto the Lax shape (identity at order 1,
/// zero at all other orders >= 0) when every deviation is roundoff-scale.
/// The KP flow preserves the normalization identically, but float stage
/// arithmetic leaves O(eps) residues at the cancelling orders that
/// `try_new` would otherwise reject as a shape violation. Deviations
/// beyond the tolerance are left in place for `try_new` to report.
fn snap_to_lax_shape(op: MicroOp) -> MicroOp {
    const SNAP_TOL: f64 = 1e-8;
    if op.backend != Backend::Float {
        return op;
    }
    let policy = op.policy;
    let id = policy.identity_matrix(op.backend);
    let zero = id.sub(&id);
    let dev = |m: &Matrix<TruncatedSeries>, t: &Matrix<TruncatedSeries>| -> f64 {
        m.entries()
            .zip(t.entries())
            .map(|(a, b)| a.max_abs_diff(b))
            .fold(0.0, f64::max)
    };
    let top = op.top().unwrap_or(1).max(1);
    let mut terms = vec![(1, id.clone())];
    for k in op.determined_floor()..=top {
        let Some(m) = op.coeff(k) else { return op };
        let target = if k == 1 { &id } else { &zero };
        if k >= 0 {
            if dev(&m, target) > SNAP_TOL {
                return op;
            }
        } else {
            terms.push((k, m));
        }
    }
    MicroOp::from_terms(policy, op.backend, terms).truncate_to_window()
}

/// Advance L along flow m by dt.
pub fn kp_step(
    l: &LaxOperator,
    m: u32,
    dt: &Scalar,
    method: StepMethod,
) -> Result<LaxOperator, MicroError> {
    if dt.backend() != l.op.backend {
        return Err(MicroError::BackendMismatch);
    }
    // Time stepping integrates the flow projected onto the finite window
    // (each stage re-declares the undetermined deep tail as zero); without
    // the projection every stage composition would shrink the determined
    // window and RK4 would lose the whole depth budget in four stages.
    let l = LaxOperator {
        op: l.op.truncate_to_window(),
    };
    let l = &l;
    match method {
        StepMethod::Taylor(k) => {
            let jets = kp_taylor_jet_windowed(l, m, k)?;
            let mut acc = MicroOp::zero(l.op.policy, l.op.backend);
            let mut power = Scalar::one(l.op.backend);
            for j in jets {
                acc = acc.add(&j.scale(&power))?;
                power = &power * dt;
            }
            LaxOperator::try_new(snap_to_lax_shape(acc))
        }
        StepMethod::Rk4 => {
            if l.op.backend != Backend::Float {
                return Err(MicroError::BackendMismatch);
            }
            let half = Scalar::from_ratio(1, 2, Backend::Float);
            let sixth = Scalar::from_ratio(1, 6, Backend::Float);
            let third = Scalar::from_ratio(1, 3, Backend::Float);
            let at = |tangent: &MicroOp, c: &Scalar| -> Result<LaxOperator, MicroError> {
                LaxOperator::try_new(snap_to_lax_shape(
                    l.op.add(&tangent.scale(&(c * dt)))?.truncate_to_window(),
                ))
            };
            let k1 = kp_vector_field(l, m)?;
            let k2 = kp_vector_field(&at(&k1, &half)?, m)?;
            let k3 = kp_vector_field(&at(&k2, &half)?, m)?;
            let k4 = kp_vector_field(&at(&k3, &Scalar::one(Backend::Float))?, m)?;
            let mut acc = l.op.add(&k1.scale(&(&sixth * dt)))?;
            acc = acc.add(&k2.scale(&(&third * dt)))?;
            acc = acc.add(&k3.scale(&(&third * dt)))?;
            acc = acc.add(&k4.scale(&(&sixth * dt)))?;
            LaxOperator::try_new(snap_to_lax_shape(acc.truncate_to_window()))
        }
    }
}

// --- the scalar KP equation ----------------------------------------------

/// Residual of the KP equation in the paper's labeling (t = t1, x = t2,
/// y = t3):
///     (3/4) u_{t2 t2} - d_{t1}( u_{t3} - (1/4)(6 u u_{t1} + u_{t1t1t1}) )
/// computed exactly.
pub fn kp_equation_residual(u: &RationalFunction) -> Result<RationalFunction, CoreError> {
    kp_equation_residual_powered(&u.num, &u.den, 1)
}

/// KP residual of u = num / base^k0. All derivatives are carried as
/// N / base^k with the rule d(N/base^k) = (N' base - k N base_var) /
/// base^(k+1), so a single power tower replaces the quotient rule's
/// denominator squaring. When the denominator is a known power (u built
/// from 2 d^2 log tau has denominator tau^2), passing the base directly
/// roughly halves every intermediate degree.
pub fn kp_equation_residual_powered(
    num: &MultiPoly,
    base: &MultiPoly,
    k0: u32,
) -> Result<RationalFunction, CoreError> {
    if base.is_zero() {
        return Err(CoreError::ZeroDenominator);
    }
    let backend = num.backend;
    let d = base;
    let dv: Vec<MultiPoly> = (0..3).map(|v| d.partial(v).unwrap()).collect();
    // (numerator, tower exponent k) representing N / base^k
    let deriv = |nk: &(MultiPoly, u32), var: usize| -> (MultiPoly, u32) {
        let (n, k) = nk;
        let num = n
            .partial(var)
            .unwrap()
            .mul(d)
            .sub(&n.mul(&dv[var]).scale(&Scalar::from_int(*k as i64, backend)));
        (num, k + 1)
    };
    let u0 = (num.clone(), k0);
    let u1 = deriv(&u0, 0);
    let u11 = deriv(&u1, 0);
    let u111 = deriv(&u11, 0);
    let u1111 = deriv(&u111, 0);
    let u2 = deriv(&u0, 1);
    let u22 = deriv(&u2, 1);
    let u3 = deriv(&u0, 2);
    let u31 = deriv(&u3, 0);
    // u * u1 as a tower term over base^(2 k0 + 1), then one more
    // t1-derivative.
    let uu1 = (u0.0.mul(&u1.0), u0.1 + u1.1);
    let uu1_1 = deriv(&uu1, 0);
    // Common denominator base^top.
    let top = u1111.1.max(u22.1).max(u31.1).max(uu1_1.1);
    let lift = |nk: &(MultiPoly, u32)| -> MultiPoly {
        nk.0.mul(&d.pow(top - nk.1))
    };
    let num = lift(&u22)
        .scale(&Scalar::from_ratio(3, 4, backend))
        .sub(&lift(&u31))
        .add(&lift(&uu1_1).scale(&Scalar::from_ratio(3, 2, backend)))
        .add(&lift(&u1111).scale(&Scalar::from_ratio(1, 4, backend)));
    RationalFunction::new(num, d.pow(top))
}
