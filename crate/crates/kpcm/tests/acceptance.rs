//! Spec acceptance criteria 1-8, one test and one printed PASS line per
//! criterion (run with `cargo test --test acceptance -- --nocapture` to
//! see the lines and timings).

use std::time::Instant;

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use kpcm::cm::{cm_integrate, cm_integrate_dir, cm_lax_matrix, lax_traces, CMState};
use kpcm::correspondence::{
    bracket_collision, max_deviation, pair_residual, pole_collision_discriminant, poles_vs_cm,
    MatrixPair, TauData,
};
use kpcm::elliptic::{EllipticLattice, PotentialKind};
use kpcm::kp::kp_mixed_jet;
use kpcm::sampling::{random_constant_wave, random_lax, random_microop};
use kpcm::sato::{lattice_from_wave, wave_from_lattice, Window};
use kpcm::{
    md_commutator, md_compose, Backend, CmError, MicroOp, SatoError, Scalar, TruncationPolicy,
};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn report(criterion: u32, what: &str, started: Instant, budget_s: f64) {
    let dt = started.elapsed().as_secs_f64();
    println!("criterion {criterion}: PASS ({dt:.1}s / budget {budget_s:.0}s) — {what}");
    assert!(dt < budget_s, "criterion {criterion} exceeded its {budget_s}s budget: {dt:.1}s");
}

/// 1. Algebra suite: associativity, d . d^-1 = Id, Jacobi — exact, 200
///    randomized cases, policy N_t = 8, depth 6, n in {1, 2}; < 30 s.
#[test]
fn criterion_1_algebra_suite() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for case in 0..200 {
        let n = 1 + (case % 2);
        let policy = TruncationPolicy::new(8, 6, n);
        let b = Backend::Exact;
        let a = random_microop(&mut rng, policy, b, -3, 2);
        let x = random_microop(&mut rng, policy, b, -3, 2);
        let y = random_microop(&mut rng, policy, b, -3, 2);

        let left = md_compose(&md_compose(&a, &x).unwrap(), &y).unwrap();
        let right = md_compose(&a, &md_compose(&x, &y).unwrap()).unwrap();
        assert!(left.agrees_with(&right), "associativity, case {case}");

        let d = MicroOp::partial_power(policy, b, 1);
        let dinv = MicroOp::partial_power(policy, b, -1);
        let id = MicroOp::identity(policy, b);
        assert!(
            md_compose(&d, &dinv).unwrap().agrees_with(&id),
            "d . d^-1 = Id, case {case}"
        );

        let j1 = md_commutator(&a, &md_commutator(&x, &y).unwrap()).unwrap();
        let j2 = md_commutator(&x, &md_commutator(&y, &a).unwrap()).unwrap();
        let j3 = md_commutator(&y, &md_commutator(&a, &x).unwrap()).unwrap();
        let jac = j1.add(&j2).unwrap().add(&j3).unwrap();
        assert!(jac.is_known_zero(), "Jacobi identity, case {case}");
    }
    report(1, "200 exact algebra cases (associativity, inverse, Jacobi)", t0, 30.0);
}

/// 2. KP flow compatibility: mixed second jets d2 d3 L = d3 d2 L agree
///    exactly for 20 random exact Lax operators, n in {1, 2}; < 60 s.
#[test]
fn criterion_2_kp_flow_compatibility() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    for case in 0..20 {
        let n = 1 + (case % 2);
        let policy = TruncationPolicy::new(8, 6, n);
        let l = random_lax(policy, Backend::Exact, &mut rng);
        let m23 = kp_mixed_jet(&l, 2, 3).unwrap();
        let m32 = kp_mixed_jet(&l, 3, 2).unwrap();
        assert!(m23.agrees_with(&m32), "mixed jets disagree, case {case}");
    }
    report(2, "20 exact mixed-jet checks d2 d3 L = d3 d2 L", t0, 60.0);
}

/// 3. Sato round trip: wave_from_lattice . lattice_from_wave = Id on
///    determined orders for 100 random wave operators, window [-6, 6];
///    non-generic inputs rejected with NotGeneric; exact.
#[test]
fn criterion_3_sato_round_trip() {
    let t0 = Instant::now();
    let window = Window::new(-6, 6);
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    for case in 0..100 {
        let n = 1 + (case % 2);
        let policy = TruncationPolicy::new(8, 6, n);
        let w = random_constant_wave(policy, Backend::Exact, &mut rng);
        let lattice = lattice_from_wave(&w, window).unwrap();
        let back = wave_from_lattice(&lattice, policy).unwrap();
        assert!(back.agrees_with(&w), "round trip failed, case {case}");

        // A lattice with a repeated column is outside the big cell.
        let mut degenerate = lattice.clone();
        degenerate.cols[1] = degenerate.cols[0].clone();
        assert!(
            matches!(
                wave_from_lattice(&degenerate, policy),
                Err(SatoError::NotGeneric)
            ),
            "degenerate lattice accepted, case {case}"
        );
    }
    report(3, "100 exact wave <-> lattice round trips + NotGeneric rejection", t0, 60.0);
}

/// 4. CM conservation: relative energy drift < 1e-8 and (rational) tr L^k
///    drift < 1e-6 over T = 1, h = 1e-3, n <= 4, all three potentials;
///    < 60 s.
#[test]
fn criterion_4_cm_conservation() {
    let t0 = Instant::now();
    // Positions sit mid-cell (im ~ 0.9, between the lattice rows at 0 and
    // 2i) with modest momenta: the elliptic force field is steep enough
    // that a fast trajectory pushes fixed-step RK4 past the 1e-8 drift
    // budget even well away from any pole.
    let q = vec![c(-1.2, 0.9), c(-0.4, 0.85), c(0.4, 0.95), c(1.2, 0.9)];
    let p = vec![c(0.05, 0.0), c(-0.05, 0.05), c(0.05, -0.05), c(-0.05, 0.0)];
    let lat = EllipticLattice::new(c(std::f64::consts::PI, 0.0), c(0.0, 2.0), 60.0).unwrap();
    for kind in [
        PotentialKind::Rational,
        PotentialKind::Trigonometric,
        PotentialKind::Elliptic,
    ] {
        let mut s = CMState::spinless(kind, q.clone(), p.clone());
        if kind == PotentialKind::Elliptic {
            s.lattice = Some(lat.clone());
        }
        let traj = cm_integrate(&s, 1.0, 1e-3).unwrap();
        let h0 = traj[0].energy;
        let h1 = traj.last().unwrap().energy;
        let rel = (h1 - h0).norm() / h0.norm().max(1.0);
        assert!(rel < 1e-8, "{kind:?}: relative energy drift {rel:e}");
        if kind == PotentialKind::Rational {
            let tr0 = lax_traces(&cm_lax_matrix(&s).unwrap(), 4);
            let tr1 = lax_traces(&cm_lax_matrix(&traj.last().unwrap().state).unwrap(), 4);
            for (k, (a, b)) in tr0.iter().zip(&tr1).enumerate() {
                let d = (a - b).norm();
                assert!(d < 1e-6, "tr L^{} drift {d:e}", k + 1);
            }
        }
    }
    report(4, "4-body conservation for all three potentials (T=1, h=1e-3)", t0, 60.0);
}

/// 5. Weierstrass degenerations: trig-limit agreement < 1e-10, evenness,
///    principal part; < 10 s.
#[test]
fn criterion_5_weierstrass_degenerations() {
    let t0 = Instant::now();
    // omega1 = pi, omega2 = 1e6 i: only the real row of the lattice is
    // inside the truncation radius, and p collapses to 1/sin^2 - 1/3.
    let trig = EllipticLattice::new(c(std::f64::consts::PI, 0.0), c(0.0, 1e6), 6300.0).unwrap();
    for &x in &[0.3f64, 0.7, 1.1, 1.5, 2.2] {
        let (p, _) = trig.weierstrass_p(c(x, 0.0)).unwrap();
        let expect = c(x, 0.0).sin().powi(-2) - 1.0 / 3.0;
        let d = (p - expect).norm();
        assert!(d < 1e-10, "trig limit at {x}: {d:e}");
    }
    // Evenness and the 1/z^2 principal part on a generic lattice.
    let lat = EllipticLattice::new(c(std::f64::consts::PI, 0.0), c(0.4, 2.3), 60.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(105);
    for _ in 0..10 {
        let z = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        if z.norm() < 0.1 {
            continue;
        }
        let (a, da) = lat.weierstrass_p(z).unwrap();
        let (b, db) = lat.weierstrass_p(-z).unwrap();
        assert!((a - b).norm() < 1e-10, "evenness at {z}");
        assert!((da + db).norm() < 1e-10, "p' oddness at {z}");
    }
    let z = c(1e-3, 0.0);
    let (p, _) = lat.weierstrass_p(z).unwrap();
    assert!((p - z.powi(-2)).norm() < 1e-4, "principal part at {z}");
    report(5, "trig limit < 1e-10, evenness, principal part", t0, 10.0);
}

/// 6. Exact KP identity: with calibrated (c2, c3) the KP residual of
///    u = 2 d^2 log tau is the zero rational function for n = 1, 2, 3 and
///    10 random CM data sets each — no tolerance; < 120 s.
#[test]
fn criterion_6_exact_kp_identity() {
    let t0 = Instant::now();
    let data = TauData::calibrated(Backend::Exact);
    let mut rng = ChaCha8Rng::seed_from_u64(106);
    for n in 1..=3usize {
        for case in 0..10 {
            // Distinct integer positions, arbitrary small Gaussian-integer
            // momenta.
            let mut pool: Vec<i64> = (-4..=4).collect();
            pool.shuffle(&mut rng);
            let q: Vec<Scalar> = pool[..n]
                .iter()
                .map(|&v| Scalar::from_int(v, Backend::Exact))
                .collect();
            let p: Vec<Scalar> = (0..n)
                .map(|_| {
                    let re = Scalar::from_int(rng.gen_range(-3..=3), Backend::Exact);
                    let im = Scalar::from_int(rng.gen_range(-3..=3), Backend::Exact);
                    &re + &(&im * &Scalar::i(Backend::Exact))
                })
                .collect();
            let pair = MatrixPair::spinless_exact(&q, &p).unwrap();
            let r = pair_residual(&pair, &data).unwrap();
            assert!(r.is_zero(), "nonzero residual, n = {n}, case {case}");
        }
    }
    report(6, "KP residual identically zero, n = 1..3, 10 exact data sets each", t0, 120.0);
}

/// 7. Headline correspondence: poles_vs_cm max deviation < 1e-6 for n = 2
///    and n = 3 rational spinless data over t2 in [0, 0.5], 50 points;
///    < 60 s.
#[test]
fn criterion_7_pole_correspondence() {
    let t0 = Instant::now();
    let data = TauData::calibrated(Backend::Float);
    let cases: [(Vec<Complex64>, Vec<Complex64>); 2] = [
        (
            vec![c(-1.0, 0.2), c(0.9, -0.3)],
            vec![c(0.4, 0.1), c(-0.2, 0.2)],
        ),
        (
            vec![c(-1.1, 0.3), c(0.2, -0.5), c(1.3, 0.1)],
            vec![c(0.3, 0.1), c(-0.4, 0.2), c(0.1, -0.3)],
        ),
    ];
    for (q, p) in cases {
        let n = q.len();
        let s = CMState::spinless(PotentialKind::Rational, q, p);
        let rows = poles_vs_cm(&s, &data, 0.5, 50, 1e-3).unwrap();
        let dev = max_deviation(&rows);
        assert!(dev < 1e-6, "n = {n}: max deviation {dev:e}");
    }
    report(7, "tau poles track CM particles, n = 2, 3 (max dev < 1e-6)", t0, 60.0);
}

/// 8. Collision coincidence: the discriminant zero of tau(., t2, 0)
///    brackets the CM collision time to within 1e-4 on the head-on
///    two-body example.
#[test]
fn criterion_8_collision_coincidence() {
    let t0 = Instant::now();
    // q = (-1, 1), p = (-i, +i): tau = t1^2 - 1 + 4 t2 - 3 t2^2, double
    // root at t2 = 1/3.
    let pair = MatrixPair::spinless_exact(
        &[
            Scalar::from_int(-1, Backend::Exact),
            Scalar::from_int(1, Backend::Exact),
        ],
        &[-Scalar::i(Backend::Exact), Scalar::i(Backend::Exact)],
    )
    .unwrap();
    let disc = pole_collision_discriminant(&pair, &TauData::calibrated(Backend::Exact)).unwrap();
    let (lo, hi) = bracket_collision(&disc, 0.0, 0.5, 1e-4).unwrap();
    assert!(hi - lo <= 1e-4, "bracket width {:e}", hi - lo);
    assert!(lo <= 1.0 / 3.0 && 1.0 / 3.0 <= hi, "bracket misses 1/3");

    // The integrator's detected collision parameter falls in the same
    // bracket (kappa = c2 = 2i, so parameter s corresponds to t2 = s).
    let s = CMState::spinless(
        PotentialKind::Rational,
        vec![c(-1.0, 0.0), c(1.0, 0.0)],
        vec![c(0.0, -1.0), c(0.0, 1.0)],
    );
    match cm_integrate_dir(&s, 0.5, 1e-3, c(0.0, 2.0)) {
        Err(CmError::CollisionDetected { time }) => {
            assert!(
                (time - 1.0 / 3.0).abs() < 1e-4,
                "CM collision at {time}, bracket [{lo}, {hi}]"
            );
        }
        other => panic!("expected a collision, got {other:?}"),
    }
    report(8, "tau discriminant brackets the CM collision time to 1e-4", t0, 30.0);
}
