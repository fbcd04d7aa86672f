//! TOML experiment configuration with strict schema validation.
//!
//! Unknown keys are rejected by serde; numeric sanity checks report the
//! offending key path (for example `time.h`). Every section is optional
//! and has desk-scale defaults, so `{}` is a valid config.

use num_complex::Complex64;
use serde::Deserialize;

use crate::elliptic::{EllipticLattice, PotentialKind};
use crate::error::CliError;
use crate::microdiff::TruncationPolicy;
use crate::scalar::{Backend, GaussRational, Scalar};

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Subcommand name; the CLI subcommand overrides this.
    pub command: Option<String>,
    pub seed: Option<u64>,
    /// "exact" or "float".
    pub backend: Option<String>,
    /// Extra seeds for a parameter sweep; each runs in its own worker
    /// thread and writes artifacts tagged by run id.
    #[serde(default)]
    pub sweep_seeds: Vec<u64>,
    pub policy: Option<PolicySection>,
    pub potential: Option<PotentialSection>,
    pub particles: Option<ParticlesSection>,
    pub time: Option<TimeSection>,
    pub kp: Option<KpSection>,
    pub calibration: Option<CalibrationSection>,
    pub output: Option<OutputSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicySection {
    /// N_t: series truncation order.
    pub series_order: Option<u32>,
    pub depth: Option<u32>,
    pub n: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSection {
    /// "rational", "trigonometric" or "elliptic".
    pub kind: Option<String>,
    /// Periods as [re, im] pairs, used by the elliptic kind.
    pub omega1: Option<[f64; 2]>,
    pub omega2: Option<[f64; 2]>,
    pub radius: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParticlesSection {
    /// Positions and momenta as [re, im] pairs.
    pub q: Option<Vec<[f64; 2]>>,
    pub p: Option<Vec<[f64; 2]>>,
    /// Exact Gaussian-rational positions/momenta, e.g. "1/2+0/1i".
    pub q_exact: Option<Vec<String>>,
    pub p_exact: Option<Vec<String>>,
    /// Generate this many random well-separated particles instead.
    pub random_n: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    pub t_final: Option<f64>,
    pub h: Option<f64>,
    /// Correspondence grid: t2 in [0, t2_max] with `points` samples.
    pub t2_max: Option<f64>,
    pub points: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KpSection {
    /// Flow index m for kp-evolve.
    pub flow: Option<u32>,
    pub steps: Option<u32>,
    /// Rational step dt = dt_num / dt_den.
    pub dt_num: Option<i64>,
    pub dt_den: Option<i64>,
    /// Tolerance on the RK4-vs-Taylor cross check.
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationSection {
    /// Constant overrides in GaussRational notation, e.g. "0/1+2/1i".
    pub c2: Option<String>,
    pub c3: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<String>,
}

/// Everything the runner needs, validated and with defaults filled in.
#[derive(Debug, Clone)]
pub struct ResolvedConfig {
    pub command: String,
    pub seed: u64,
    pub sweep_seeds: Vec<u64>,
    pub backend: Backend,
    pub policy: TruncationPolicy,
    pub kind: PotentialKind,
    pub lattice: Option<EllipticLattice>,
    pub q: Vec<Complex64>,
    pub p: Vec<Complex64>,
    pub q_exact: Option<Vec<Scalar>>,
    pub p_exact: Option<Vec<Scalar>>,
    pub t_final: f64,
    pub h: f64,
    pub t2_max: f64,
    pub points: usize,
    pub flow: u32,
    pub steps: u32,
    pub dt_num: i64,
    pub dt_den: i64,
    pub kp_tol: f64,
    pub c2_override: Option<Scalar>,
    pub c3_override: Option<Scalar>,
    pub out_dir: Option<String>,
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, CliError> {
    toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))
}

fn check_positive(value: f64, key: &str) -> Result<(), CliError> {
    if !(value > 0.0 && value.is_finite()) {
        return Err(CliError::Validation {
            key: key.to_string(),
            reason: format!("must be positive and finite, got {value}"),
        });
    }
    Ok(())
}

fn parse_exact_list(items: &[String], key: &str) -> Result<Vec<Scalar>, CliError> {
    items
        .iter()
        .map(|s| {
            s.parse::<GaussRational>()
                .map(Scalar::Exact)
                .map_err(|_| CliError::Validation {
                    key: key.to_string(),
                    reason: format!("cannot parse `{s}` as a Gaussian rational"),
                })
        })
        .collect()
}

impl ExperimentConfig {
    /// Validate and fill defaults. `command` must come from the config or
    /// the CLI subcommand.
    pub fn resolve(&self) -> Result<ResolvedConfig, CliError> {
        let command = self.command.clone().ok_or_else(|| CliError::Validation {
            key: "command".into(),
            reason: "no subcommand given".into(),
        })?;
        let backend = match self.backend.as_deref() {
            None => Backend::Float,
            Some("float") => Backend::Float,
            Some("exact") => Backend::Exact,
            Some(other) => {
                return Err(CliError::Validation {
                    key: "backend".into(),
                    reason: format!("expected \"exact\" or \"float\", got `{other}`"),
                })
            }
        };

        let pol = self.policy.clone().unwrap_or(PolicySection {
            series_order: None,
            depth: None,
            n: None,
        });
        let series_order = pol.series_order.unwrap_or(8);
        let depth = pol.depth.unwrap_or(6);
        let n = pol.n.unwrap_or(1);
        if series_order == 0 {
            return Err(CliError::Validation {
                key: "policy.series_order".into(),
                reason: "must be at least 1".into(),
            });
        }
        if depth == 0 {
            return Err(CliError::Validation {
                key: "policy.depth".into(),
                reason: "must be at least 1".into(),
            });
        }
        if n == 0 || n > 4 {
            return Err(CliError::Validation {
                key: "policy.n".into(),
                reason: "matrix size must be in 1..=4".into(),
            });
        }

        let pot = self.potential.clone();
        let kind = match pot.as_ref().and_then(|p| p.kind.as_deref()) {
            None | Some("rational") => PotentialKind::Rational,
            Some("trigonometric") => PotentialKind::Trigonometric,
            Some("elliptic") => PotentialKind::Elliptic,
            Some(other) => {
                return Err(CliError::Validation {
                    key: "potential.kind".into(),
                    reason: format!("unknown potential kind `{other}`"),
                })
            }
        };
        let lattice = if kind == PotentialKind::Elliptic {
            let p = pot.as_ref().ok_or_else(|| CliError::Validation {
                key: "potential".into(),
                reason: "elliptic kind needs periods".into(),
            })?;
            let o1 = p.omega1.unwrap_or([2.0, 0.0]);
            let o2 = p.omega2.unwrap_or([0.0, 2.0]);
            let radius = p.radius.unwrap_or(30.0);
            check_positive(radius, "potential.radius")?;
            Some(
                EllipticLattice::new(
                    Complex64::new(o1[0], o1[1]),
                    Complex64::new(o2[0], o2[1]),
                    radius,
                )
                .map_err(|e| CliError::Validation {
                    key: "potential.omega2".into(),
                    reason: e.to_string(),
                })?,
            )
        } else {
            None
        };

        let parts = self.particles.clone();
        let (mut q, mut p) = (Vec::new(), Vec::new());
        let (mut q_exact, mut p_exact) = (None, None);
        if let Some(ps) = &parts {
            if let (Some(qs), Some(pm)) = (&ps.q, &ps.p) {
                if qs.len() != pm.len() {
                    return Err(CliError::Validation {
                        key: "particles.p".into(),
                        reason: format!("{} momenta for {} positions", pm.len(), qs.len()),
                    });
                }
                q = qs.iter().map(|c| Complex64::new(c[0], c[1])).collect();
                p = pm.iter().map(|c| Complex64::new(c[0], c[1])).collect();
            }
            if let (Some(qs), Some(pm)) = (&ps.q_exact, &ps.p_exact) {
                if qs.len() != pm.len() {
                    return Err(CliError::Validation {
                        key: "particles.p_exact".into(),
                        reason: format!("{} momenta for {} positions", pm.len(), qs.len()),
                    });
                }
                let qe = parse_exact_list(qs, "particles.q_exact")?;
                let pe = parse_exact_list(pm, "particles.p_exact")?;
                if q.is_empty() {
                    q = qe.iter().map(Scalar::to_c64).collect();
                    p = pe.iter().map(Scalar::to_c64).collect();
                }
                q_exact = Some(qe);
                p_exact = Some(pe);
            }
            if let Some(rn) = ps.random_n {
                if rn == 0 || rn > 6 {
                    return Err(CliError::Validation {
                        key: "particles.random_n".into(),
                        reason: "random particle count must be in 1..=6".into(),
                    });
                }
            }
        }
        if q.is_empty() {
            // Default or randomly generated particles are filled in by the
            // runner, which owns the seeded RNG.
        }

        let time = self.time.clone();
        let t_final = time.as_ref().and_then(|t| t.t_final).unwrap_or(1.0);
        let h = time.as_ref().and_then(|t| t.h).unwrap_or(1e-3);
        let t2_max = time.as_ref().and_then(|t| t.t2_max).unwrap_or(0.5);
        let points = time.as_ref().and_then(|t| t.points).unwrap_or(50);
        check_positive(t_final, "time.t_final")?;
        check_positive(h, "time.h")?;
        check_positive(t2_max, "time.t2_max")?;
        if points < 2 {
            return Err(CliError::Validation {
                key: "time.points".into(),
                reason: "need at least 2 grid points".into(),
            });
        }

        let kp = self.kp.clone();
        let flow = kp.as_ref().and_then(|k| k.flow).unwrap_or(2);
        let steps = kp.as_ref().and_then(|k| k.steps).unwrap_or(4);
        let dt_num = kp.as_ref().and_then(|k| k.dt_num).unwrap_or(1);
        let dt_den = kp.as_ref().and_then(|k| k.dt_den).unwrap_or(1000);
        let kp_tol = kp.as_ref().and_then(|k| k.tol).unwrap_or(1e-6);
        if flow == 0 || flow > 4 {
            return Err(CliError::Validation {
                key: "kp.flow".into(),
                reason: "flow index must be in 1..=4".into(),
            });
        }
        if dt_den <= 0 {
            return Err(CliError::Validation {
                key: "kp.dt_den".into(),
                reason: "denominator must be positive".into(),
            });
        }
        check_positive(kp_tol, "kp.tol")?;

        let cal = self.calibration.clone();
        let parse_const = |s: &Option<String>, key: &str| -> Result<Option<Scalar>, CliError> {
            match s {
                None => Ok(None),
                Some(text) => Ok(Some(
                    text.parse::<GaussRational>()
                        .map(Scalar::Exact)
                        .map_err(|_| CliError::Validation {
                            key: key.to_string(),
                            reason: format!("cannot parse `{text}` as a Gaussian rational"),
                        })?,
                )),
            }
        };
        let c2_override = parse_const(&cal.as_ref().and_then(|c| c.c2.clone()), "calibration.c2")?;
        let c3_override = parse_const(&cal.as_ref().and_then(|c| c.c3.clone()), "calibration.c3")?;

        Ok(ResolvedConfig {
            command,
            seed: self.seed.unwrap_or(0),
            sweep_seeds: self.sweep_seeds.clone(),
            backend,
            policy: TruncationPolicy::new(series_order, depth, n),
            kind,
            lattice,
            q,
            p,
            q_exact,
            p_exact,
            t_final,
            h,
            t2_max,
            points,
            flow,
            steps,
            dt_num,
            dt_den,
            kp_tol,
            c2_override,
            c3_override,
            out_dir: self.output.as_ref().and_then(|o| o.dir.clone()),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_defaults() {
        let mut cfg = parse_config("").unwrap();
        cfg.command = Some("cm-evolve".into());
        let r = cfg.resolve().unwrap();
        assert_eq!(r.seed, 0);
        assert_eq!(r.backend, Backend::Float);
        assert_eq!(r.h, 1e-3);
        assert_eq!(r.policy.depth, 6);
        assert_eq!(r.kind, PotentialKind::Rational);
    }

    #[test]
    fn unknown_key_rejected() {
        let err = parse_config("foo = 1").unwrap_err();
        assert!(err.to_string().contains("foo"), "{err}");
    }

    #[test]
    fn negative_h_names_key_path() {
        let mut cfg = parse_config("[time]\nh = -0.1").unwrap();
        cfg.command = Some("cm-evolve".into());
        let err = cfg.resolve().unwrap_err();
        assert!(err.to_string().contains("time.h"), "{err}");
    }

    #[test]
    fn full_document_round_trip() {
        let text = r#"
            command = "correspond-rational"
            seed = 7
            backend = "float"
            [policy]
            series_order = 6
            depth = 4
            n = 2
            [potential]
            kind = "trigonometric"
            [particles]
            q = [[0.0, 0.0], [1.5, 0.5]]
            p = [[0.4, -0.1], [-0.4, 0.1]]
            [time]
            t_final = 2.0
            h = 0.01
            t2_max = 0.3
            points = 10
            [kp]
            flow = 3
            steps = 2
            dt_num = 1
            dt_den = 50
            [calibration]
            c2 = "0/1+2/1i"
            c3 = "3"
            [output]
            dir = "artifacts"
        "#;
        let r = parse_config(text).unwrap().resolve().unwrap();
        assert_eq!(r.command, "correspond-rational");
        assert_eq!(r.seed, 7);
        assert_eq!(r.q.len(), 2);
        assert_eq!(r.kind, PotentialKind::Trigonometric);
        assert_eq!(
            r.c2_override.unwrap(),
            &Scalar::from_int(2, Backend::Exact) * &Scalar::i(Backend::Exact)
        );
        assert_eq!(r.c3_override.unwrap(), Scalar::from_int(3, Backend::Exact));
        assert_eq!(r.out_dir.as_deref(), Some("artifacts"));
    }

    #[test]
    fn exact_particles_parse() {
        let text = r#"
            command = "calibrate"
            backend = "exact"
            [particles]
            q_exact = ["0", "1"]
            p_exact = ["1/2", "-1/2"]
        "#;
        let r = parse_config(text).unwrap().resolve().unwrap();
        let qe = r.q_exact.unwrap();
        assert_eq!(qe[1], Scalar::from_int(1, Backend::Exact));
        assert_eq!(r.p_exact.unwrap()[0], Scalar::from_ratio(1, 2, Backend::Exact));
    }

    #[test]
    fn mismatched_particle_lengths_rejected() {
        let text = "command = \"cm-evolve\"\n[particles]\nq = [[0.0,0.0]]\np = []";
        let err = parse_config(text).unwrap().resolve().unwrap_err();
        assert!(err.to_string().contains("particles.p"), "{err}");
    }
}
