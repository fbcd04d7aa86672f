//! Complex polynomial root finding with multiplicity clustering.

use num_complex::Complex64;

use crate::error::CoreError;

fn eval(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for c in coeffs.iter().rev() {
        acc = acc * z + c;
    }
    acc
}

fn eval_deriv(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (k, c) in coeffs.iter().enumerate().skip(1).rev() {
        acc = acc * z + c * (k as f64);
    }
    acc
}

/// All roots of a complex polynomial (ascending coefficients), clustered
/// within `tol` into (root, multiplicity) pairs.
///
/// Simultaneous Aberth-Ehrlich iteration followed by Newton polishing; the
/// result is validated by re-expanding the monic product and comparing
/// coefficients against `tol * max|coeff|`.
pub fn poly_roots(
    coeffs: &[Complex64],
    tol: f64,
) -> Result<Vec<(Complex64, usize)>, CoreError> {
    let mut c: Vec<Complex64> = coeffs.to_vec();
    while c.last().is_some_and(|x| x.norm() == 0.0) {
        c.pop();
    }
    if c.len() < 2 {
        return Err(CoreError::DegenerateInput);
    }
    let deg = c.len() - 1;
    let lead = c[deg];
    let monic: Vec<Complex64> = c.iter().map(|x| x / lead).collect();

    // Cauchy bound for initial guesses.
    let radius = 1.0
        + monic[..deg]
            .iter()
            .map(|x| x.norm())
            .fold(0.0, f64::max);
    let mut z: Vec<Complex64> = (0..deg)
        .map(|k| {
            let theta = 2.0 * std::f64::consts::PI * (k as f64 + 0.35) / deg as f64 + 0.4;
            Complex64::from_polar(radius * (0.5 + 0.5 * (k as f64 + 1.0) / deg as f64), theta)
        })
        .collect();

    let mut converged = false;
    for _ in 0..400 {
        let mut max_step = 0.0f64;
        for i in 0..deg {
            let p = eval(&monic, z[i]);
            let dp = eval_deriv(&monic, z[i]);
            if p.norm() == 0.0 {
                continue;
            }
            let w = if dp.norm() > 0.0 { p / dp } else { p };
            let mut s = Complex64::new(0.0, 0.0);
            for j in 0..deg {
                if j != i {
                    let d = z[i] - z[j];
                    if d.norm() > 1e-300 {
                        s += d.inv();
                    }
                }
            }
            let denom = Complex64::new(1.0, 0.0) - w * s;
            let step = if denom.norm() > 1e-300 { w / denom } else { w };
            z[i] -= step;
            max_step = max_step.max(step.norm() / (1.0 + z[i].norm()));
        }
        if max_step < 1e-15 {
            converged = true;
            break;
        }
    }

    // Newton polish; near-multiple roots stall, which clustering absorbs.
    for zi in z.iter_mut() {
        for _ in 0..8 {
            let p = eval(&monic, *zi);
            let dp = eval_deriv(&monic, *zi);
            if dp.norm() < 1e-300 {
                break;
            }
            let step = p / dp;
            if step.norm() < 1e-16 * (1.0 + zi.norm()) {
                break;
            }
            *zi -= step;
        }
    }

    // Cluster within tol, report multiplicities, center each cluster.
    let mut remaining = z;
    let mut clusters: Vec<(Complex64, usize)> = Vec::new();
    while let Some(seed) = remaining.pop() {
        let mut members = vec![seed];
        remaining.retain(|&r| {
            if (r - seed).norm() <= tol {
                members.push(r);
                false
            } else {
                true
            }
        });
        let m = members.len();
        let center = members.iter().sum::<Complex64>() / m as f64;
        clusters.push((center, m));
    }

    // Validate by expansion.
    let mut expanded = vec![Complex64::new(1.0, 0.0)];
    for &(r, m) in &clusters {
        for _ in 0..m {
            let mut next = vec![Complex64::new(0.0, 0.0); expanded.len() + 1];
            for (k, &a) in expanded.iter().enumerate() {
                next[k + 1] += a;
                next[k] -= a * r;
            }
            expanded = next;
        }
    }
    // `expanded` is ascending with leading 1; compare against monic input.
    let scale = monic.iter().map(|x| x.norm()).fold(1.0, f64::max);
    let err = monic
        .iter()
        .zip(expanded.iter())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    if !converged && err > tol * scale {
        return Err(CoreError::NonConvergence);
    }
    if err > tol.max(1e-8) * scale {
        return Err(CoreError::NonConvergence);
    }
    clusters.sort_by(|a, b| {
        a.0.re
            .partial_cmp(&b.0.re)
            .unwrap()
            .then(a.0.im.partial_cmp(&b.0.im).unwrap())
    });
    Ok(clusters)
}

/// Convenience: all roots with multiplicity expanded into a flat list.
pub fn poly_roots_flat(coeffs: &[Complex64], tol: f64) -> Result<Vec<Complex64>, CoreError> {
    Ok(poly_roots(coeffs, tol)?
        .into_iter()
        .flat_map(|(r, m)| std::iter::repeat(r).take(m))
        .collect())
}
