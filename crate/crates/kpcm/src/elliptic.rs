//! Weierstrass p and zeta by direct truncated lattice summation, and the
//! three Calogero-Moser pair potentials.
//!
//! Lattice points come in symmetric pairs (omega, -omega), so the odd part
//! of the summand tail cancels and the truncation error of p is
//! O(|z|^2 R^-3 . density) — small enough at desk scale without theta
//! functions. Arguments are first reduced to the fundamental cell, which
//! makes periodicity exact.

use num_complex::Complex64;

use crate::error::{CmError, CoreError};

const POLE_TOL: f64 = 1e-9;

/// A period lattice with a precomputed, symmetric set of nonzero points of
/// modulus at most R.
#[derive(Debug, Clone)]
pub struct EllipticLattice {
    pub omega1: Complex64,
    pub omega2: Complex64,
    pub radius: f64,
    points: Vec<Complex64>,
}

impl EllipticLattice {
    pub fn new(omega1: Complex64, omega2: Complex64, radius: f64) -> Result<Self, CoreError> {
        let ratio_im = (omega2 / omega1).im;
        if !ratio_im.is_finite() || ratio_im.abs() < 1e-12 || omega1.norm() == 0.0 {
            return Err(CoreError::DegenerateInput);
        }
        // Shortest nonzero vector (searched among small combinations)
        // bounds how many steps reach radius R.
        let mut shortest = f64::MAX;
        for m in -2i32..=2 {
            for k in -2i32..=2 {
                if m == 0 && k == 0 {
                    continue;
                }
                let w = omega1.scale(m as f64) + omega2.scale(k as f64);
                shortest = shortest.min(w.norm());
            }
        }
        let reach = (radius / shortest).ceil() as i64 + 2;
        let mut points = Vec::new();
        for m in -reach..=reach {
            for k in -reach..=reach {
                if m == 0 && k == 0 {
                    continue;
                }
                let w = omega1.scale(m as f64) + omega2.scale(k as f64);
                if w.norm() <= radius {
                    points.push(w);
                }
            }
        }
        if points.is_empty() {
            return Err(CoreError::DegenerateInput);
        }
        Ok(EllipticLattice {
            omega1,
            omega2,
            radius,
            points,
        })
    }

    pub fn num_points(&self) -> usize {
        self.points.len()
    }

    /// z minus the nearest lattice translate: solve z = a w1 + b w2 over
    /// the reals and subtract the rounded coefficients.
    pub fn reduce(&self, z: Complex64) -> Complex64 {
        let det = self.omega1.re * self.omega2.im - self.omega1.im * self.omega2.re;
        let a = (z.re * self.omega2.im - z.im * self.omega2.re) / det;
        let b = (self.omega1.re * z.im - self.omega1.im * z.re) / det;
        z - self.omega1.scale(a.round()) - self.omega2.scale(b.round())
    }

    /// Crude analytic bound on the truncation tail of p at z (after
    /// reduction): pair cancellation leaves O(|z|^2 / |omega|^4) per point
    /// beyond R, integrated over the lattice density.
    pub fn tail_bound(&self, z: Complex64) -> f64 {
        let det = (self.omega1.re * self.omega2.im - self.omega1.im * self.omega2.re).abs();
        let density = 1.0 / det;
        let z2 = z.norm_sqr();
        20.0 * z2 * density / self.radius.powi(2)
    }

    /// p(z) and p'(z).
    pub fn weierstrass_p(&self, z: Complex64) -> Result<(Complex64, Complex64), CmError> {
        let z = self.reduce(z);
        if z.norm() < POLE_TOL {
            return Err(CmError::PoleAtLatticePoint);
        }
        let mut p = z.powi(-2);
        let mut dp = -2.0 * z.powi(-3);
        for w in &self.points {
            let d = z - w;
            p += d.powi(-2) - w.powi(-2);
            dp += -2.0 * d.powi(-3);
        }
        Ok((p, dp))
    }

    /// zeta(z) = 1/z + sum' [1/(z-w) + 1/w + z/w^2]; zeta' = -p.
    pub fn zeta(&self, z: Complex64) -> Result<Complex64, CmError> {
        let z = self.reduce(z);
        if z.norm() < POLE_TOL {
            return Err(CmError::PoleAtLatticePoint);
        }
        let mut s = z.inv();
        for w in &self.points {
            s += (z - w).inv() + w.inv() + z * w.powi(-2);
        }
        Ok(s)
    }
}

/// The paper's three pair-potential families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PotentialKind {
    Rational,
    /// Fixed period pi: U(q) = 1/sin^2 q.
    Trigonometric,
    Elliptic,
}

/// U(q) and U'(q) for the chosen family.
pub fn potential_u(
    q: Complex64,
    kind: PotentialKind,
    lat: Option<&EllipticLattice>,
) -> Result<(Complex64, Complex64), CmError> {
    match kind {
        PotentialKind::Rational => {
            if q.norm() < POLE_TOL {
                return Err(CmError::PoleAtOrigin);
            }
            Ok((q.powi(-2), -2.0 * q.powi(-3)))
        }
        PotentialKind::Trigonometric => {
            let s = q.sin();
            if s.norm() < POLE_TOL {
                return Err(CmError::PoleAtOrigin);
            }
            let u = s.powi(-2);
            Ok((u, -2.0 * q.cos() * s.powi(-3)))
        }
        PotentialKind::Elliptic => {
            let lat = lat.ok_or(CmError::UnsupportedKind)?;
            match lat.weierstrass_p(q) {
                Err(CmError::PoleAtLatticePoint) => Err(CmError::PoleAtOrigin),
                other => other,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn square_lattice() -> EllipticLattice {
        EllipticLattice::new(c(2.0, 0.0), c(0.0, 2.0), 30.0).unwrap()
    }

    #[test]
    fn degenerate_periods_rejected() {
        assert!(matches!(
            EllipticLattice::new(c(1.0, 0.0), c(2.0, 0.0), 10.0),
            Err(CoreError::DegenerateInput)
        ));
    }

    #[test]
    fn p_is_even() {
        let lat = square_lattice();
        let mut rng = ChaCha8Rng::seed_from_u64(59);
        for _ in 0..20 {
            let z = c(rng.gen_range(-0.9..0.9), rng.gen_range(-0.9..0.9));
            if z.norm() < 0.05 {
                continue;
            }
            let (a, da) = lat.weierstrass_p(z).unwrap();
            let (b, db) = lat.weierstrass_p(-z).unwrap();
            assert!((a - b).norm() < 1e-10, "evenness at {z}");
            assert!((da + db).norm() < 1e-10, "oddness of p' at {z}");
        }
    }

    #[test]
    fn p_principal_part() {
        let lat = square_lattice();
        let z = c(1e-3, 0.0);
        let (p, _) = lat.weierstrass_p(z).unwrap();
        assert!((p - z.powi(-2)).norm() < 1e-4);
    }

    #[test]
    fn p_periodicity_exact_after_reduction() {
        let lat = square_lattice();
        let z = c(0.31, 0.47);
        let (a, _) = lat.weierstrass_p(z).unwrap();
        let (b, _) = lat.weierstrass_p(z + lat.omega1 + lat.omega2).unwrap();
        assert!((a - b).norm() < 1e-13);
    }

    #[test]
    fn trig_limit_of_p() {
        // omega2 -> infinity: p(z) -> 1/sin^2 z - 1/3 for the pi lattice.
        let lat = EllipticLattice::new(c(std::f64::consts::PI, 0.0), c(0.0, 1e6), 6300.0).unwrap();
        for &x in &[0.3, 0.7, 1.1, 1.9, 2.6] {
            let z = c(x, 0.0);
            let (p, _) = lat.weierstrass_p(z).unwrap();
            let expect = z.sin().powi(-2) - 1.0 / 3.0;
            assert!(
                (p - expect).norm() < 1e-10,
                "trig limit at {x}: diff {:e}",
                (p - expect).norm()
            );
        }
    }

    #[test]
    fn zeta_derivative_is_minus_p() {
        let lat = square_lattice();
        let z = c(0.4, 0.3);
        let h = 1e-5;
        let d = (lat.zeta(z + c(h, 0.0)).unwrap() - lat.zeta(z - c(h, 0.0)).unwrap()) / (2.0 * h);
        let (p, _) = lat.weierstrass_p(z).unwrap();
        assert!((d + p).norm() < 1e-6);
    }

    #[test]
    fn p_prime_matches_finite_difference() {
        let lat = square_lattice();
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        for _ in 0..10 {
            let z = c(rng.gen_range(0.2..0.8), rng.gen_range(0.2..0.8));
            let h = 1e-5;
            let (pp, dp) = lat.weierstrass_p(z).unwrap();
            let _ = pp;
            let (a, _) = lat.weierstrass_p(z + c(h, 0.0)).unwrap();
            let (b, _) = lat.weierstrass_p(z - c(h, 0.0)).unwrap();
            let fd = (a - b) / (2.0 * h);
            assert!((fd - dp).norm() < 1e-4 * (1.0 + dp.norm()));
        }
    }

    #[test]
    fn double_pole_all_kinds() {
        let lat = square_lattice();
        for kind in [
            PotentialKind::Rational,
            PotentialKind::Trigonometric,
            PotentialKind::Elliptic,
        ] {
            let q = c(1e-4, 0.0);
            let (u, _) = potential_u(q, kind, Some(&lat)).unwrap();
            assert!(
                (q * q * u - c(1.0, 0.0)).norm() < 1e-6,
                "{kind:?} double pole"
            );
        }
    }

    #[test]
    fn potential_values_and_periods() {
        let (u, _) = potential_u(c(2.0, 0.0), PotentialKind::Rational, None).unwrap();
        assert!((u - c(0.25, 0.0)).norm() < 1e-15);
        let (u, _) = potential_u(
            c(std::f64::consts::FRAC_PI_2, 0.0),
            PotentialKind::Trigonometric,
            None,
        )
        .unwrap();
        assert!((u - c(1.0, 0.0)).norm() < 1e-12);
        // Period pi for trig.
        let q = c(0.4, 0.1);
        let (a, _) = potential_u(q, PotentialKind::Trigonometric, None).unwrap();
        let (b, _) =
            potential_u(q + c(std::f64::consts::PI, 0.0), PotentialKind::Trigonometric, None)
                .unwrap();
        assert!((a - b).norm() < 1e-10);
        // Lattice periodicity for elliptic.
        let lat = square_lattice();
        let (a, _) = potential_u(q, PotentialKind::Elliptic, Some(&lat)).unwrap();
        let (b, _) = potential_u(q + lat.omega2, PotentialKind::Elliptic, Some(&lat)).unwrap();
        assert!((a - b).norm() < 1e-12);
    }

    #[test]
    fn refinement_consistency() {
        // Doubling R changes p by less than the coarse tail bound.
        let lat1 = EllipticLattice::new(c(2.0, 0.0), c(0.0, 2.0), 15.0).unwrap();
        let lat2 = EllipticLattice::new(c(2.0, 0.0), c(0.0, 2.0), 30.0).unwrap();
        let z = c(0.5, 0.4);
        let (a, _) = lat1.weierstrass_p(z).unwrap();
        let (b, _) = lat2.weierstrass_p(z).unwrap();
        assert!((a - b).norm() < lat1.tail_bound(z));
    }

    #[test]
    fn pole_errors() {
        let lat = square_lattice();
        assert!(matches!(
            lat.weierstrass_p(c(2.0, 2.0)),
            Err(CmError::PoleAtLatticePoint)
        ));
        assert!(matches!(
            potential_u(c(0.0, 0.0), PotentialKind::Rational, None),
            Err(CmError::PoleAtOrigin)
        ));
        assert!(matches!(
            potential_u(c(std::f64::consts::PI, 0.0), PotentialKind::Trigonometric, None),
            Err(CmError::PoleAtOrigin)
        ));
    }
}
