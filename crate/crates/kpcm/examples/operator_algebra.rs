//! Microdifferential operator arithmetic on the exact backend.
//!
//! Builds a few matrix microdifferential operators, then demonstrates the
//! structural identities the whole crate leans on: the generalized Leibniz
//! composition, associativity, the splitting into differential and
//! Volterra parts, commutators, the residue, and Volterra inversion.
//! Everything here is exact Gaussian-rational arithmetic; equalities are
//! equalities, not small numbers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use kpcm::{
    md_commutator, md_compose, md_residue, md_split, volterra_invert, Backend, MicroOp,
    TruncationPolicy,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let policy = TruncationPolicy::new(8, 6, 2);
    let backend = Backend::Exact;
    let mut rng = ChaCha8Rng::seed_from_u64(7);

    // d and its formal inverse compose to the identity.
    let d = MicroOp::partial_power(policy, backend, 1);
    let dinv = MicroOp::partial_power(policy, backend, -1);
    let id = MicroOp::identity(policy, backend);
    let unit = md_compose(&d, &dinv)?;
    println!("d . d^-1 = Id          exactly: {}", unit.agrees_with(&id));

    // Composition is associative on random 2x2 operators with series
    // coefficients.
    let a = kpcm::sampling::random_microop(&mut rng, policy, backend, -3, 2);
    let b = kpcm::sampling::random_microop(&mut rng, policy, backend, -3, 2);
    let c = kpcm::sampling::random_microop(&mut rng, policy, backend, -3, 2);
    let left = md_compose(&md_compose(&a, &b)?, &c)?;
    let right = md_compose(&a, &md_compose(&b, &c)?)?;
    println!("(AB)C = A(BC)          exactly: {}", left.agrees_with(&right));

    // The commutator satisfies the Jacobi identity.
    let j1 = md_commutator(&a, &md_commutator(&b, &c)?)?;
    let j2 = md_commutator(&b, &md_commutator(&c, &a)?)?;
    let j3 = md_commutator(&c, &md_commutator(&a, &b)?)?;
    let jacobi = j1.add(&j2)?.add(&j3)?;
    println!("Jacobi identity        exactly: {}", jacobi.is_known_zero());

    // Splitting A = A_+ + A_- recovers A.
    let (plus, minus) = md_split(&a);
    println!(
        "A = A_+ + A_-          exactly: {}",
        plus.add(&minus)?.agrees_with(&a)
    );

    // res A = coefficient of d^-1; it vanishes on any commutator of
    // operators whose residue pairing is symmetric (the trace property is
    // what makes KP conserved quantities work). Here we just show the
    // residue is accessible and the commutator of d with anything has
    // residue equal to the derivative of that coefficient.
    let r = md_residue(&md_commutator(&d, &a)?)?;
    let expected = a
        .coeff(-1)
        .expect("order -1 is inside the window")
        .map(|s| s.derivative());
    println!(
        "res [d, A] = (A_-1)'   exactly: {}",
        r.agrees_with(&expected)
    );

    // A Volterra operator Id + (lower order) inverts exactly within the
    // truncation window.
    let w = kpcm::sampling::random_wave(policy, backend, &mut rng);
    let winv = volterra_invert(&w.op)?;
    let prod = md_compose(&w.op, &winv)?;
    println!("W . W^-1 = Id          exactly: {}", prod.agrees_with(&id));

    Ok(())
}
