//! The KP hierarchy on Lax operators: vector fields, commuting flows, and
//! time stepping.
//!
//! Checks that the first flow is translation (dL/dt_1 = -L' with this
//! crate's sign convention), that the flows commute as mixed second
//! derivatives, and that RK4 and exact Taylor stepping agree on the same
//! trajectory.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use kpcm::kp::{kp_mixed_jet, kp_step, kp_vector_field, StepMethod, TRANSLATION_SIGN};
use kpcm::sampling::random_lax;
use kpcm::{Backend, Scalar, TruncationPolicy};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let policy = TruncationPolicy::new(48, 6, 1);
    let mut rng = ChaCha8Rng::seed_from_u64(11);

    // Flow 1 is translation: [L, (L)_+] = epsilon * sum u_k' d^-k.
    let l = random_lax(policy, Backend::Exact, &mut rng);
    let v1 = kp_vector_field(&l, 1)?;
    let mut translated = kpcm::MicroOp::zero(policy, Backend::Exact);
    for k in 1..=policy.depth as i32 {
        let uk = l.u(k as u32).expect("u_k inside window");
        let term = kpcm::MicroOp::from_terms(
            policy,
            Backend::Exact,
            vec![(-k, uk.map(|s| s.derivative()))],
        );
        translated = translated.add(&term)?;
    }
    let sign = Scalar::from_int(TRANSLATION_SIGN, Backend::Exact);
    println!(
        "[L,(L)_+] = {TRANSLATION_SIGN} * L'   exactly: {}",
        v1.agrees_with(&translated.scale(&sign))
    );

    // The flows commute: d_2 d_3 L = d_3 d_2 L as exact mixed jets.
    let m23 = kp_mixed_jet(&l, 2, 3)?;
    let m32 = kp_mixed_jet(&l, 3, 2)?;
    println!("d2 d3 L = d3 d2 L      exactly: {}", m23.agrees_with(&m32));

    // Float time stepping: RK4 and the order-4 Taylor jet of the windowed
    // flow track each other to O(dt^5) per step.
    let l0 = random_lax(policy, Backend::Float, &mut rng);
    let dt = Scalar::from_c64(Complex64::new(1e-3, 0.0));
    let mut rk4 = l0.clone();
    let mut taylor = l0.clone();
    for _ in 0..4 {
        rk4 = kp_step(&rk4, 2, &dt, StepMethod::Rk4)?;
        taylor = kp_step(&taylor, 2, &dt, StepMethod::Taylor(4))?;
    }
    let diff = rk4.op.max_abs_diff(&taylor.op);
    println!("RK4 vs Taylor(4), flow 2, 4 steps of 1e-3: max diff {diff:.3e}");
    assert!(diff < 1e-9, "steppers disagree");

    // The same comparison runs in exact arithmetic: one step, two Taylor
    // orders, difference of order dt^5.
    let l0 = random_lax(policy, Backend::Exact, &mut rng);
    let dt = Scalar::from_ratio(1, 1000, Backend::Exact);
    let t4 = kp_step(&l0, 2, &dt, StepMethod::Taylor(4))?;
    let t6 = kp_step(&l0, 2, &dt, StepMethod::Taylor(6))?;
    let diff = t4.op.max_abs_diff(&t6.op);
    println!("Taylor(4) vs Taylor(6), exact backend:     max diff {diff:.3e}");
    assert!(diff < 1e-9, "exact steppers disagree");

    Ok(())
}
