//! Weierstrass special functions by truncated lattice summation.
//!
//! Demonstrates exact periodicity (arguments are reduced to the
//! fundamental cell first), the parity of p, the relation zeta' = -p, the
//! trigonometric degeneration p(z) -> 1/sin^2 z - 1/3 as the second
//! period grows, and the three Calogero-Moser pair potentials.

use num_complex::Complex64;

use kpcm::elliptic::{potential_u, EllipticLattice, PotentialKind};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let w1 = Complex64::new(std::f64::consts::PI, 0.0);
    let w2 = Complex64::new(0.3, 2.1);
    let lat = EllipticLattice::new(w1, w2, 60.0)?;
    println!("lattice truncated at R = 60: {} points", lat.num_points());

    let z = Complex64::new(0.7, 0.4);
    let (p, dp) = lat.weierstrass_p(z)?;
    println!("p({z})  = {p}");
    println!("p'({z}) = {dp}");

    // Periodicity is exact by construction.
    let (p_shift, _) = lat.weierstrass_p(z + w1 + w2)?;
    println!("p(z + w1 + w2) - p(z) = {:.3e}", (p_shift - p).norm());

    // p is even.
    let (p_neg, dp_neg) = lat.weierstrass_p(-z)?;
    println!("p(-z) - p(z)          = {:.3e}", (p_neg - p).norm());
    println!("p'(-z) + p'(z)        = {:.3e}", (dp_neg + dp).norm());

    // zeta' = -p, checked by central differences.
    let h = 1e-5;
    let dz = Complex64::new(h, 0.0);
    let numeric = (lat.zeta(z + dz)? - lat.zeta(z - dz)?) / (2.0 * h);
    println!("zeta'(z) + p(z)       = {:.3e}  (finite difference)", (numeric + p).norm());

    // Trigonometric degeneration: with periods (pi, iT), T large, p
    // approaches 1/sin^2 z - 1/3.
    for t in [4.0, 6.0, 8.0] {
        let lat = EllipticLattice::new(w1, Complex64::new(0.0, t), 2000.0)?;
        let (p, _) = lat.weierstrass_p(z)?;
        let trig = z.sin().powi(-2) - 1.0 / 3.0;
        println!(
            "T = {t}: |p(z) - (1/sin^2 z - 1/3)| = {:.3e} ({} lattice points)",
            (p - trig).norm(),
            lat.num_points()
        );
    }

    // The three pair potentials and their derivatives at the same point.
    let q = Complex64::new(0.9, -0.2);
    for kind in [
        PotentialKind::Rational,
        PotentialKind::Trigonometric,
        PotentialKind::Elliptic,
    ] {
        let (u, du) = potential_u(q, kind, Some(&lat))?;
        println!("{kind:?}: U(q) = {u}, U'(q) = {du}");
    }

    Ok(())
}
