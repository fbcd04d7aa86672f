//! Spin Calogero-Moser states, Hamiltonian, equations of motion, RK4
//! integration with adaptive halving near collisions, the rational Lax
//! matrix, and Moser's matrix-flow solution oracle for the rational case.
//!
//! Dynamics are complexified throughout: positions and momenta live in C,
//! matching the complex pole dynamics of rational KP solutions.

use num_complex::Complex64;

use crate::elliptic::{potential_u, EllipticLattice, PotentialKind};
use crate::error::CmError;

/// Minimum particle separation before the integrator aborts.
pub const EPS_COLL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct CMState {
    pub kind: PotentialKind,
    pub n: usize,
    pub q: Vec<Complex64>,
    pub p: Vec<Complex64>,
    /// Spin covectors u_i in (C^k)*.
    pub u: Vec<Vec<Complex64>>,
    /// Spin vectors v_j in C^k.
    pub v: Vec<Vec<Complex64>>,
    pub lattice: Option<EllipticLattice>,
}

impl CMState {
    pub fn new(
        kind: PotentialKind,
        q: Vec<Complex64>,
        p: Vec<Complex64>,
        u: Vec<Vec<Complex64>>,
        v: Vec<Vec<Complex64>>,
        lattice: Option<EllipticLattice>,
    ) -> Self {
        let n = q.len();
        assert_eq!(p.len(), n);
        assert_eq!(u.len(), n);
        assert_eq!(v.len(), n);
        CMState {
            kind,
            n,
            q,
            p,
            u,
            v,
            lattice,
        }
    }

    /// k = 1 with all f_ij = 1: the classical (spinless) system.
    pub fn spinless(kind: PotentialKind, q: Vec<Complex64>, p: Vec<Complex64>) -> Self {
        let n = q.len();
        let ones = vec![vec![Complex64::new(1.0, 0.0)]; n];
        Self::new(kind, q, p, ones.clone(), ones, None)
    }

    /// f_ij = u_i(v_j).
    pub fn f(&self, i: usize, j: usize) -> Complex64 {
        self.u[i]
            .iter()
            .zip(&self.v[j])
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn min_separation(&self) -> f64 {
        let mut m = f64::MAX;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                m = m.min((self.q[i] - self.q[j]).norm());
            }
        }
        m
    }

    fn check_separation(&self) -> Result<(), CmError> {
        let sep = self.min_separation();
        if self.n > 1 && sep < EPS_COLL {
            return Err(CmError::ParticleCollision { sep });
        }
        Ok(())
    }
}

/// H = (1/2) sum p_i^2 + sum_{i<j} f_ij f_ji U(q_i - q_j).
pub fn cm_hamiltonian(s: &CMState) -> Result<Complex64, CmError> {
    s.check_separation()?;
    let mut h = 0.5 * s.p.iter().map(|p| p * p).sum::<Complex64>();
    for i in 0..s.n {
        for j in (i + 1)..s.n {
            let (u, _) = potential_u(s.q[i] - s.q[j], s.kind, s.lattice.as_ref())?;
            h += s.f(i, j) * s.f(j, i) * u;
        }
    }
    Ok(h)
}

/// Time derivative of a state under the canonical brackets
/// {q_i, p_j} = delta_ij, {(u_i)_a, (v_j)_b} = delta_ij delta_ab.
#[derive(Debug, Clone)]
pub struct CMDeriv {
    pub qdot: Vec<Complex64>,
    pub pdot: Vec<Complex64>,
    pub udot: Vec<Vec<Complex64>>,
    pub vdot: Vec<Vec<Complex64>>,
}

pub fn cm_eom(s: &CMState) -> Result<CMDeriv, CmError> {
    s.check_separation()?;
    let zero = Complex64::new(0.0, 0.0);
    let mut pdot = vec![zero; s.n];
    let k = s.u.first().map_or(0, Vec::len);
    let mut udot = vec![vec![zero; k]; s.n];
    let mut vdot = vec![vec![zero; k]; s.n];
    for i in 0..s.n {
        for j in 0..s.n {
            if i == j {
                continue;
            }
            let (u_val, du_val) = potential_u(s.q[i] - s.q[j], s.kind, s.lattice.as_ref())?;
            let coupling = s.f(i, j) * s.f(j, i);
            pdot[i] -= coupling * du_val;
            // u_i' = dH/dv_i = sum_j f_ij U(q_i - q_j) u_j and
            // v_i' = -dH/du_i = -sum_j f_ji U(q_i - q_j) v_j; this flow
            // conserves each f_ii and conjugates L by a diagonal gauge.
            let fij = s.f(i, j);
            let fji = s.f(j, i);
            for a in 0..k {
                udot[i][a] += fij * u_val * s.u[j][a];
                vdot[i][a] -= fji * u_val * s.v[j][a];
            }
        }
    }
    Ok(CMDeriv {
        qdot: s.p.clone(),
        pdot,
        udot,
        vdot,
    })
}

fn advance(s: &CMState, d: &CMDeriv, dt: Complex64) -> CMState {
    let mut out = s.clone();
    for i in 0..s.n {
        out.q[i] += dt * d.qdot[i];
        out.p[i] += dt * d.pdot[i];
        for a in 0..s.u[i].len() {
            out.u[i][a] += dt * d.udot[i][a];
            out.v[i][a] += dt * d.vdot[i][a];
        }
    }
    out
}

fn rk4_step(s: &CMState, dt: Complex64) -> Result<CMState, CmError> {
    let k1 = cm_eom(s)?;
    let k2 = cm_eom(&advance(s, &k1, dt * 0.5))?;
    let k3 = cm_eom(&advance(s, &k2, dt * 0.5))?;
    let k4 = cm_eom(&advance(s, &k3, dt))?;
    let mut out = s.clone();
    let sixth = dt / 6.0;
    let third = dt / 3.0;
    for i in 0..s.n {
        out.q[i] += sixth * (k1.qdot[i] + k4.qdot[i]) + third * (k2.qdot[i] + k3.qdot[i]);
        out.p[i] += sixth * (k1.pdot[i] + k4.pdot[i]) + third * (k2.pdot[i] + k3.pdot[i]);
        for a in 0..s.u[i].len() {
            out.u[i][a] +=
                sixth * (k1.udot[i][a] + k4.udot[i][a]) + third * (k2.udot[i][a] + k3.udot[i][a]);
            out.v[i][a] +=
                sixth * (k1.vdot[i][a] + k4.vdot[i][a]) + third * (k2.vdot[i][a] + k3.vdot[i][a]);
        }
    }
    Ok(out)
}

/// One recorded trajectory point.
#[derive(Debug, Clone)]
pub struct TrajectoryPoint {
    pub time: f64,
    pub state: CMState,
    pub energy: Complex64,
}

/// RK4 trajectory from 0 to T along the (complex) time direction `dir`
/// (physical time = dir * parameter). Steps are halved when particles get
/// within 100 * EPS_COLL of each other; below EPS_COLL the integration
/// aborts with CollisionDetected.
pub fn cm_integrate_dir(
    s: &CMState,
    t_final: f64,
    h: f64,
    dir: Complex64,
) -> Result<Vec<TrajectoryPoint>, CmError> {
    assert!(t_final > 0.0 && h > 0.0, "time grid must be positive");
    let mut out = Vec::new();
    let mut state = s.clone();
    let mut t = 0.0f64;
    out.push(TrajectoryPoint {
        time: t,
        energy: cm_hamiltonian(&state)?,
        state: state.clone(),
    });
    let min_h = h * 2f64.powi(-48);
    while t < t_final - 1e-12 {
        let mut step = h.min(t_final - t);
        // CFL-style guard: no particle may cross more than a quarter of
        // the current minimum separation in one step, otherwise RK4 can
        // tunnel straight through a collision between grid points. Near a
        // genuine collision this shrinks the step geometrically until the
        // separation itself drops below EPS_COLL.
        if state.n > 1 {
            let speed = state.p.iter().map(|p| p.norm()).fold(0.0, f64::max) * dir.norm();
            let sep = state.min_separation();
            if speed > 0.0 && step * speed > 0.25 * sep {
                step = 0.25 * sep / speed;
            }
        }
        if step < min_h {
            return Err(CmError::StepUnderflow { time: t });
        }
        match rk4_step(&state, dir * step) {
            Ok(next) => {
                let sep = next.min_separation();
                if next.n > 1 && sep < EPS_COLL {
                    return Err(CmError::CollisionDetected { time: t });
                }
                state = next;
            }
            Err(CmError::ParticleCollision { .. }) => {
                return Err(CmError::CollisionDetected { time: t })
            }
            Err(e) => return Err(e),
        }
        t += step;
        out.push(TrajectoryPoint {
            time: t,
            energy: cm_hamiltonian(&state)?,
            state: state.clone(),
        });
    }
    Ok(out)
}

/// Real-time RK4 trajectory.
pub fn cm_integrate(s: &CMState, t_final: f64, h: f64) -> Result<Vec<TrajectoryPoint>, CmError> {
    cm_integrate_dir(s, t_final, h, Complex64::new(1.0, 0.0))
}

/// Rational-kind Lax matrix L_jk = p_j delta_jk + (1-delta_jk) i f_jk /
/// (q_j - q_k); satisfies (1/2) tr L^2 = H.
pub fn cm_lax_matrix(s: &CMState) -> Result<Vec<Vec<Complex64>>, CmError> {
    if s.kind != PotentialKind::Rational {
        return Err(CmError::UnsupportedKind);
    }
    s.check_separation()?;
    let i_unit = Complex64::new(0.0, 1.0);
    let mut l = vec![vec![Complex64::new(0.0, 0.0); s.n]; s.n];
    for j in 0..s.n {
        for k in 0..s.n {
            l[j][k] = if j == k {
                s.p[j]
            } else {
                i_unit * s.f(j, k) / (s.q[j] - s.q[k])
            };
        }
    }
    Ok(l)
}

/// tr L^k for k = 1..=kmax.
pub fn lax_traces(l: &[Vec<Complex64>], kmax: usize) -> Vec<Complex64> {
    let n = l.len();
    let mut power: Vec<Vec<Complex64>> = l.to_vec();
    let mut traces = Vec::new();
    for _ in 0..kmax {
        traces.push((0..n).map(|i| power[i][i]).sum());
        let mut next = vec![vec![Complex64::new(0.0, 0.0); n]; n];
        for i in 0..n {
            for j in 0..n {
                for m in 0..n {
                    next[i][j] += power[i][m] * l[m][j];
                }
            }
        }
        power = next;
    }
    traces
}

/// Moser's exact solution for the rational system: the positions at time t
/// are the eigenvalues of diag(q) + t L, matched greedily to the particle
/// order at t = 0.
pub fn moser_rational_solution(s: &CMState, t: Complex64) -> Result<Vec<Complex64>, CmError> {
    let l = cm_lax_matrix(s)?;
    let n = s.n;
    let m = nalgebra::DMatrix::<nalgebra::Complex<f64>>::from_fn(n, n, |r, c| {
        let x = if r == c { s.q[r] } else { Complex64::new(0.0, 0.0) } + t * l[r][c];
        nalgebra::Complex::new(x.re, x.im)
    });
    // Complex Schur form is upper triangular, so eigenvalues always exist.
    let eig = m.eigenvalues().ok_or(CmError::UnsupportedKind)?;
    let mut poles: Vec<Complex64> = eig.iter().map(|e| Complex64::new(e.re, e.im)).collect();
    // Greedy matching to the starting order, for small t continuity.
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let (best, _) = poles
            .iter()
            .enumerate()
            .min_by(|a, b| {
                (a.1 - s.q[i])
                    .norm()
                    .partial_cmp(&(b.1 - s.q[i]).norm())
                    .unwrap()
            })
            .ok_or(CmError::UnsupportedKind)?;
        out.push(poles.remove(best));
    }
    Ok(out)
}

/// Trajectory CSV: run_id, time, particle_index, re_q, im_q, re_p, im_p,
/// energy.
pub fn trajectory_to_csv(run_id: &str, traj: &[TrajectoryPoint]) -> String {
    let mut out =
        String::from("run_id,time,particle_index,re_q,im_q,re_p,im_p,energy\n");
    for pt in traj {
        for i in 0..pt.state.n {
            out.push_str(&format!(
                "{},{:.12},{},{:.15e},{:.15e},{:.15e},{:.15e},{:.15e}\n",
                run_id,
                pt.time,
                i,
                pt.state.q[i].re,
                pt.state.q[i].im,
                pt.state.p[i].re,
                pt.state.p[i].im,
                pt.energy.re
            ));
        }
    }
    out
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

    #[test]
    fn free_particle_hamiltonian() {
        let s = CMState::spinless(PotentialKind::Rational, vec![c(0.0, 0.0)], vec![c(3.0, 0.0)]);
        assert!((cm_hamiltonian(&s).unwrap() - c(4.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn two_body_hamiltonian_value() {
        // q=(0,1), p=(0,0), spinless: H = U(-1) = 1.
        let s = CMState::spinless(
            PotentialKind::Rational,
            vec![c(0.0, 0.0), c(1.0, 0.0)],
            vec![c(0.0, 0.0), c(0.0, 0.0)],
        );
        assert!((cm_hamiltonian(&s).unwrap() - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn decoupled_spins_kinetic_only() {
        // f12 f21 = 0 -> only the kinetic term.
        let s = CMState::new(
            PotentialKind::Rational,
            vec![c(0.0, 0.0), c(1.0, 0.0)],
            vec![c(2.0, 0.0), c(0.0, 0.0)],
            vec![vec![c(1.0, 0.0), c(0.0, 0.0)], vec![c(0.0, 0.0), c(1.0, 0.0)]],
            vec![vec![c(1.0, 0.0), c(0.0, 0.0)], vec![c(0.0, 0.0), c(0.0, 0.0)]],
            None,
        );
        // f_12 = u_1 . v_2 = 0, so coupling vanishes.
        assert!((cm_hamiltonian(&s).unwrap() - c(2.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn eom_two_body_closed_form() {
        // Spinless rational: p1' = 2 f12 f21 / (q1-q2)^3.
        let s = CMState::spinless(
            PotentialKind::Rational,
            vec![c(0.0, 0.0), c(1.3, 0.0)],
            vec![c(0.1, 0.0), c(-0.2, 0.0)],
        );
        let d = cm_eom(&s).unwrap();
        let dq = s.q[0] - s.q[1];
        let expect = 2.0 * dq.powi(-3);
        assert!((d.pdot[0] - expect).norm() < 1e-13);
        assert!((d.pdot[1] + expect).norm() < 1e-13);
        assert_eq!(d.qdot, s.p);
    }

    #[test]
    fn eom_matches_finite_difference_gradient() {
        // pdot_i = -dH/dq_i and the spin derivatives follow the declared
        // bracket; both checked against central differences of H.
        let mut rng = ChaCha8Rng::seed_from_u64(67);
        let k = 2usize;
        let n = 3usize;
        let rand_vec = |rng: &mut ChaCha8Rng| -> Vec<Complex64> {
            (0..k)
                .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect()
        };
        let s = CMState::new(
            PotentialKind::Rational,
            vec![c(0.0, 0.1), c(1.1, -0.2), c(2.3, 0.4)],
            vec![c(0.3, 0.0), c(-0.1, 0.2), c(0.0, -0.3)],
            (0..n).map(|_| rand_vec(&mut rng)).collect(),
            (0..n).map(|_| rand_vec(&mut rng)).collect(),
            None,
        );
        let d = cm_eom(&s).unwrap();
        let h = 1e-6;
        for i in 0..n {
            let mut sp = s.clone();
            sp.q[i] += c(h, 0.0);
            let mut sm = s.clone();
            sm.q[i] -= c(h, 0.0);
            let grad = (cm_hamiltonian(&sp).unwrap() - cm_hamiltonian(&sm).unwrap()) / (2.0 * h);
            assert!((d.pdot[i] + grad).norm() < 1e-6, "pdot[{i}]");
            for a in 0..k {
                // udot = +dH/dv, vdot = -dH/du.
                let mut sp = s.clone();
                sp.v[i][a] += c(h, 0.0);
                let mut sm = s.clone();
                sm.v[i][a] -= c(h, 0.0);
                let dv = (cm_hamiltonian(&sp).unwrap() - cm_hamiltonian(&sm).unwrap()) / (2.0 * h);
                assert!((d.udot[i][a] - dv).norm() < 1e-6, "udot[{i}][{a}]");
                let mut sp = s.clone();
                sp.u[i][a] += c(h, 0.0);
                let mut sm = s.clone();
                sm.u[i][a] -= c(h, 0.0);
                let du = (cm_hamiltonian(&sp).unwrap() - cm_hamiltonian(&sm).unwrap()) / (2.0 * h);
                assert!((d.vdot[i][a] + du).norm() < 1e-6, "vdot[{i}][{a}]");
            }
        }
    }

    #[test]
    fn free_particle_linear_motion() {
        let s = CMState::spinless(PotentialKind::Rational, vec![c(0.5, -0.2)], vec![c(1.5, 0.7)]);
        let traj = cm_integrate(&s, 1.0, 1e-2).unwrap();
        let last = traj.last().unwrap();
        let expect = s.q[0] + s.p[0];
        assert!((last.state.q[0] - expect).norm() < 1e-12);
    }

    #[test]
    fn total_momentum_conserved() {
        let s = CMState::spinless(
            PotentialKind::Trigonometric,
            vec![c(0.3, 0.0), c(1.2, 0.1), c(2.2, -0.1)],
            vec![c(0.4, 0.0), c(-0.2, 0.0), c(0.1, 0.1)],
        );
        let traj = cm_integrate(&s, 1.0, 1e-3).unwrap();
        let p0: Complex64 = s.p.iter().sum();
        let p1: Complex64 = traj.last().unwrap().state.p.iter().sum();
        assert!((p0 - p1).norm() < 1e-10);
    }

    #[test]
    fn energy_conserved_all_kinds() {
        let lat = EllipticLattice::new(c(4.0, 0.0), c(0.0, 4.0), 40.0).unwrap();
        for kind in [
            PotentialKind::Rational,
            PotentialKind::Trigonometric,
            PotentialKind::Elliptic,
        ] {
            let mut s = CMState::spinless(
                kind,
                vec![c(0.2, 0.0), c(1.4, 0.2)],
                vec![c(0.3, 0.0), c(-0.3, 0.0)],
            );
            if kind == PotentialKind::Elliptic {
                s.lattice = Some(lat.clone());
            }
            let traj = cm_integrate(&s, 1.0, 1e-3).unwrap();
            let h0 = traj[0].energy;
            let drift = traj
                .iter()
                .map(|p| (p.energy - h0).norm())
                .fold(0.0, f64::max);
            assert!(
                drift / h0.norm().max(1.0) < 1e-8,
                "{kind:?} drift {drift:e}"
            );
        }
    }

    #[test]
    fn lax_matrix_properties() {
        let s = CMState::spinless(
            PotentialKind::Rational,
            vec![c(0.1, 0.0), c(1.2, 0.3), c(-0.9, -0.2)],
            vec![c(0.2, 0.1), c(-0.4, 0.0), c(0.3, -0.1)],
        );
        let l = cm_lax_matrix(&s).unwrap();
        let traces = lax_traces(&l, 2);
        let h = cm_hamiltonian(&s).unwrap();
        assert!((0.5 * traces[1] - h).norm() < 1e-12, "tr L^2 / 2 = H");
        // 1x1 case.
        let s1 = CMState::spinless(PotentialKind::Rational, vec![c(2.0, 0.0)], vec![c(5.0, 0.0)]);
        assert_eq!(cm_lax_matrix(&s1).unwrap()[0][0], c(5.0, 0.0));
        // Non-rational kind rejected.
        let st = CMState::spinless(
            PotentialKind::Trigonometric,
            vec![c(0.0, 0.0), c(1.0, 0.0)],
            vec![c(0.0, 0.0), c(0.0, 0.0)],
        );
        assert!(matches!(cm_lax_matrix(&st), Err(CmError::UnsupportedKind)));
    }

    #[test]
    fn rank_one_commutator_certificate() {
        // [diag(q), L] has the spinless form i(ones - Id): off-diagonal
        // entries all i, i.e. commutator minus (-i) Id is rank one.
        let s = CMState::spinless(
            PotentialKind::Rational,
            vec![c(0.1, 0.0), c(1.2, 0.3), c(-0.9, -0.2)],
            vec![c(0.2, 0.1), c(-0.4, 0.0), c(0.3, -0.1)],
        );
        let l = cm_lax_matrix(&s).unwrap();
        let n = s.n;
        for j in 0..n {
            for k in 0..n {
                let comm = (s.q[j] - s.q[k]) * l[j][k];
                let expect = if j == k { c(0.0, 0.0) } else { c(0.0, 1.0) };
                assert!((comm - expect).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn integration_matches_moser_oracle() {
        let s = CMState::spinless(
            PotentialKind::Rational,
            vec![c(0.0, 0.0), c(1.5, 0.5)],
            vec![c(0.4, -0.1), c(-0.4, 0.1)],
        );
        let traj = cm_integrate(&s, 1.0, 1e-3).unwrap();
        for pt in traj.iter().step_by(100) {
            let oracle = moser_rational_solution(&s, c(pt.time, 0.0)).unwrap();
            for i in 0..s.n {
                let nearest = oracle
                    .iter()
                    .map(|o| (o - pt.state.q[i]).norm())
                    .fold(f64::MAX, f64::min);
                assert!(nearest < 1e-6, "t={} i={i} err={nearest:e}", pt.time);
            }
        }
    }

    #[test]
    fn trace_conservation_rational() {
        let s = CMState::spinless(
            PotentialKind::Rational,
            vec![c(0.0, 0.0), c(1.5, 0.5), c(-1.2, 0.8)],
            vec![c(0.4, -0.1), c(-0.4, 0.1), c(0.1, 0.0)],
        );
        let t0 = lax_traces(&cm_lax_matrix(&s).unwrap(), 3);
        let traj = cm_integrate(&s, 1.0, 1e-3).unwrap();
        let t1 = lax_traces(&cm_lax_matrix(&traj.last().unwrap().state).unwrap(), 3);
        for (a, b) in t0.iter().zip(&t1) {
            assert!((a - b).norm() < 1e-6, "{a} vs {b}");
        }
    }

    #[test]
    fn scaling_covariance_rational() {
        // q -> kq, p -> p/k rescales H by k^-2 and time by k^2.
        let s = CMState::spinless(
            PotentialKind::Rational,
            vec![c(0.0, 0.0), c(1.5, 0.5)],
            vec![c(0.4, -0.1), c(-0.4, 0.1)],
        );
        let lam = 2.0;
        let scaled = CMState::spinless(
            PotentialKind::Rational,
            s.q.iter().map(|q| q * lam).collect(),
            s.p.iter().map(|p| p / lam).collect(),
        );
        let h = cm_hamiltonian(&s).unwrap();
        let hs = cm_hamiltonian(&scaled).unwrap();
        assert!((hs - h / (lam * lam)).norm() < 1e-12);
        let t = 0.5;
        let a = moser_rational_solution(&s, c(t, 0.0)).unwrap();
        let b = moser_rational_solution(&scaled, c(t * lam * lam, 0.0)).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x * lam - y).norm() < 1e-8);
        }
    }

    #[test]
    fn collision_detected_head_on() {
        let s = CMState::spinless(
            PotentialKind::Rational,
            vec![c(-1.0, 0.0), c(1.0, 0.0)],
            vec![c(0.0, -1.0), c(0.0, 1.0)],
        );
        // Head-on with p = -iv, +iv: collision in complex flow along 2i
        // direction (see the correspondence module); in plain real time
        // this stays separated.
        let r = cm_integrate_dir(&s, 0.5, 1e-3, c(0.0, 2.0));
        assert!(
            matches!(r, Err(CmError::CollisionDetected { .. })),
            "{r:?}"
        );
    }
}
