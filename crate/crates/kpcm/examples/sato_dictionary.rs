//! The Sato dictionary in the window model: wave operators <-> points of
//! the Grassmannian, restricted to a finite window of z-powers.
//!
//! Round-trips a random constant-coefficient wave operator through its
//! D-lattice and back, shows the big-cell test rejecting a degenerate
//! basis, and applies an infinitesimal Gamma_+ deformation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use kpcm::sampling::random_constant_wave;
use kpcm::sato::{
    gamma_deform, in_big_cell, lattice_from_wave, lattice_index, wave_from_lattice, DLatticeBasis,
    Window,
};
use kpcm::{Backend, Scalar, SatoError, TruncationPolicy};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let policy = TruncationPolicy::new(8, 6, 2);
    let backend = Backend::Exact;
    let window = Window::new(-6, 6);
    let mut rng = ChaCha8Rng::seed_from_u64(5);

    // Wave operator -> lattice -> wave operator is the identity on the
    // t = 0 fiber (the window model sees only w_i(0); constant-coefficient
    // waves are that fiber's canonical representatives).
    let w = random_constant_wave(policy, backend, &mut rng);
    let lattice = lattice_from_wave(&w, window)?;
    println!("lattice: {} columns, index {}", lattice.cols.len(), lattice_index(&lattice));
    println!("in big cell: {}", in_big_cell(&lattice));
    let back = wave_from_lattice(&lattice, policy)?;
    println!("round trip exact: {}", back.agrees_with(&w));
    assert!(back.agrees_with(&w));

    // A basis with a dependent column falls outside the big cell and is
    // rejected rather than silently triangulated.
    let mut degenerate = lattice.clone();
    let copy = degenerate.cols[0].clone();
    degenerate.cols[1] = copy;
    match wave_from_lattice(&degenerate, policy) {
        Err(SatoError::NotGeneric) => println!("degenerate basis rejected: NotGeneric"),
        other => panic!("expected NotGeneric, got {other:?}"),
    }

    // Infinitesimal Gamma_+ action by P(z) = z: the tangent vector lives
    // in the quotient by the lattice, and deforming the standard lattice
    // (which is z-invariant) gives exactly zero.
    let std_basis = DLatticeBasis::standard(window, policy.n, backend);
    let p = vec![Scalar::zero(backend), Scalar::one(backend)]; // P(z) = z
    let eps = Scalar::from_ratio(1, 100, backend);
    let def = gamma_deform(&std_basis, &p, &eps)?;
    println!("z-deformation of the standard lattice vanishes: {}", def.is_zero());
    assert!(def.is_zero());

    // On a generic lattice the same deformation is nontrivial.
    let def = gamma_deform(&lattice, &p, &eps)?;
    println!("z-deformation of a generic lattice vanishes: {}", def.is_zero());

    Ok(())
}
