//! Small dense complex linear algebra used in the hot paths: an in-place LU
//! solver on flat buffers (the vectorized steady-state systems are 16–26
//! rows), a 3×3 Cramer solve for the probe-coherence sector, and a
//! Durand-Kerner polynomial root finder for the partial-fraction step of the
//! analytic velocity average.

use num_complex::Complex64;

use crate::error::{Result, SimError};

pub type C64 = Complex64;

pub const ONE: C64 = C64::new(1.0, 0.0);
pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Solve `a x = b` in place by LU with partial pivoting; `a` is row-major
/// n×n and is destroyed, `b` is overwritten with the solution.
pub fn lu_solve_inplace(a: &mut [C64], b: &mut [C64], n: usize) -> Result<()> {
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(b.len(), n);
    let scale: f64 = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    let tiny = scale * 1e-14 / n as f64;

    for col in 0..n {
        // Pivot search on |.|².
        let mut piv = col;
        let mut best = a[col * n + col].norm_sqr();
        for row in (col + 1)..n {
            let m = a[row * n + col].norm_sqr();
            if m > best {
                best = m;
                piv = row;
            }
        }
        if best.sqrt() <= tiny {
            return Err(SimError::Singular(format!(
                "pivot {:.3e} below threshold {:.3e} at column {col}",
                best.sqrt(),
                tiny
            )));
        }
        if piv != col {
            for k in 0..n {
                a.swap(col * n + k, piv * n + k);
            }
            b.swap(col, piv);
        }
        let inv_piv = a[col * n + col].inv();
        for row in (col + 1)..n {
            let factor = a[row * n + col] * inv_piv;
            if factor == ZERO {
                continue;
            }
            a[row * n + col] = factor;
            for k in (col + 1)..n {
                let t = a[col * n + k];
                a[row * n + k] -= factor * t;
            }
            let t = b[col];
            b[row] -= factor * t;
        }
    }
    // Back substitution.
    for col in (0..n).rev() {
        let mut acc = b[col];
        for k in (col + 1)..n {
            acc -= a[col * n + k] * b[k];
        }
        b[col] = acc * a[col * n + col].inv();
    }
    Ok(())
}

/// Solve a 3×3 complex system by Cramer's rule.
pub fn solve3(a: &[[C64; 3]; 3], rhs: &[C64; 3]) -> Result<[C64; 3]> {
    let det = det3(a);
    let scale = a
        .iter()
        .flatten()
        .map(|z| z.norm())
        .fold(0.0f64, f64::max)
        .powi(3);
    if det.norm() <= scale.max(f64::MIN_POSITIVE) * 1e-15 {
        return Err(SimError::Singular(format!(
            "3x3 determinant {:.3e} below threshold",
            det.norm()
        )));
    }
    let mut out = [ZERO; 3];
    for k in 0..3 {
        let mut m = *a;
        for row in 0..3 {
            m[row][k] = rhs[row];
        }
        out[k] = det3(&m) / det;
    }
    Ok(out)
}

fn det3(a: &[[C64; 3]; 3]) -> C64 {
    a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
        - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
}

/// Evaluate a polynomial with ascending coefficients at `x` (Horner).
pub fn poly_eval(coeffs: &[C64], x: C64) -> C64 {
    let mut acc = ZERO;
    for &c in coeffs.iter().rev() {
        acc = acc * x + c;
    }
    acc
}

/// Multiply two polynomials given by ascending coefficients.
pub fn poly_mul(p: &[C64], q: &[C64]) -> Vec<C64> {
    let mut out = vec![ZERO; p.len() + q.len() - 1];
    for (i, &a) in p.iter().enumerate() {
        for (j, &b) in q.iter().enumerate() {
            out[i + j] += a * b;
        }
    }
    out
}

/// Add `q` into `p` (resizing as needed), returning the sum.
pub fn poly_add(p: &[C64], q: &[C64]) -> Vec<C64> {
    let mut out = vec![ZERO; p.len().max(q.len())];
    for (i, &a) in p.iter().enumerate() {
        out[i] += a;
    }
    for (i, &b) in q.iter().enumerate() {
        out[i] += b;
    }
    out
}

/// Drop leading coefficients that are negligible *at the root radius of the
/// remaining polynomial*. Comparing raw coefficient magnitudes across powers
/// is meaningless when they span many decades (widths vs Rabi² vs products),
/// so the test is whether the leading term could move any root in that disk.
pub fn poly_trim(mut p: Vec<C64>) -> Vec<C64> {
    while p.len() > 1 {
        let deg = p.len() - 1;
        let lead = p[deg].norm();
        if lead == 0.0 {
            p.pop();
            continue;
        }
        if deg == 1 {
            break;
        }
        let next = p[deg - 1].norm();
        if next == 0.0 {
            break;
        }
        // Fujiwara bound on the roots of p without its leading term.
        let radius = 2.0
            * p[..deg - 1]
                .iter()
                .enumerate()
                .map(|(k, c)| (c.norm() / next).powf(1.0 / (deg - 1 - k) as f64))
                .fold(0.0f64, f64::max);
        if lead * radius <= 1e-12 * next {
            p.pop();
        } else {
            break;
        }
    }
    p
}

/// All roots of the polynomial with ascending coefficients.
///
/// Degrees 1 and 2 use closed forms; higher degrees run deterministic
/// Durand-Kerner iterations from the standard (0.4 + 0.9i)^k start.
pub fn poly_roots(coeffs: &[C64]) -> Result<Vec<C64>> {
    let p = poly_trim(coeffs.to_vec());
    let deg = p.len() - 1;
    match deg {
        0 => Err(SimError::domain("constant polynomial has no roots")),
        1 => Ok(vec![-p[0] / p[1]]),
        2 => {
            let a = p[2];
            let b = p[1];
            let c = p[0];
            let disc = (b * b - 4.0 * a * c).sqrt();
            // Pick the sign that avoids cancellation in -b ∓ disc.
            let q = if (b.conj() * disc).re >= 0.0 {
                -0.5 * (b + disc)
            } else {
                -0.5 * (b - disc)
            };
            if q.norm() == 0.0 {
                return Ok(vec![ZERO, ZERO]);
            }
            Ok(vec![q / a, c / q])
        }
        _ => durand_kerner(&p),
    }
}

fn durand_kerner(p: &[C64]) -> Result<Vec<C64>> {
    let deg = p.len() - 1;
    let lead = p[deg];
    let monic: Vec<C64> = p.iter().map(|&c| c / lead).collect();
    // Rescale the variable so every root lands in an O(1) disk (Fujiwara
    // bound). Widths, detunings and Rabi² terms make the raw coefficients
    // span ~20 decades; without this substitution both the start circle and
    // the step tolerance are off by that whole factor.
    let scale = monic[..deg]
        .iter()
        .enumerate()
        .map(|(k, c)| c.norm().powf(1.0 / (deg - k) as f64))
        .fold(0.0f64, f64::max)
        .max(1e-300);
    let scaled: Vec<C64> = monic
        .iter()
        .enumerate()
        .map(|(k, &c)| c / scale.powi((deg - k) as i32))
        .collect();
    let radius = 2.0;
    let seed = C64::new(0.4, 0.9);
    let mut roots: Vec<C64> = (0..deg)
        .map(|k| seed.powu(k as u32 + 1) * radius)
        .collect();

    let tol = 1e-14 * radius;
    let mut converged = false;
    for _ in 0..600 {
        let mut moved = 0.0f64;
        for k in 0..deg {
            let pk = roots[k];
            let mut denom = ONE;
            for (j, &rj) in roots.iter().enumerate() {
                if j != k {
                    denom *= pk - rj;
                }
            }
            if denom.norm() == 0.0 {
                // Two iterates collided; split them apart deterministically.
                roots[k] += C64::new(tol * 1e3, tol * 1e3);
                moved = f64::MAX;
                continue;
            }
            let delta = poly_eval(&scaled, pk) / denom;
            roots[k] = pk - delta;
            moved = moved.max(delta.norm());
        }
        if moved <= tol {
            converged = true;
            break;
        }
    }
    if !converged {
        // Accept if the residuals are small even without step convergence.
        let worst = roots
            .iter()
            .map(|&r| poly_eval(&scaled, r).norm())
            .fold(0.0f64, f64::max);
        if worst > 1e-9 {
            return Err(SimError::Singular(format!(
                "root iteration stalled (worst residual {worst:.3e})"
            )));
        }
    }
    Ok(roots.into_iter().map(|r| r * scale).collect())
}

/// Partial-fraction residues of N/D where D has the given simple roots:
/// N(x)/D(x) = Σ_k res_k / (x − p_k). `den_lead` is D's leading coefficient.
pub fn partial_fractions(num: &[C64], roots: &[C64], den_lead: C64) -> Vec<C64> {
    let mut out = Vec::with_capacity(roots.len());
    for (k, &pk) in roots.iter().enumerate() {
        let mut denom = den_lead;
        for (j, &pj) in roots.iter().enumerate() {
            if j != k {
                denom *= pk - pj;
            }
        }
        out.push(poly_eval(num, pk) / denom);
    }
    out
}

/// Push near-coincident roots apart by `min_sep` so the residue formula stays
/// finite; the induced error in the reconstructed rational is O(min_sep).
pub fn separate_roots(roots: &mut [C64], min_sep: f64) {
    let n = roots.len();
    for i in 0..n {
        for j in (i + 1)..n {
            let d = roots[j] - roots[i];
            if d.norm() < min_sep {
                let dir = if d.norm() == 0.0 {
                    C64::new(0.0, 1.0)
                } else {
                    d / d.norm()
                };
                let shift = dir * (min_sep - d.norm()) * 0.5;
                roots[i] -= shift;
                roots[j] += shift;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_c(rng: &mut ChaCha8Rng) -> C64 {
        C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    }

    #[test]
    fn lu_matches_nalgebra_on_random_systems() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [2usize, 5, 17, 26] {
            let a: Vec<C64> = (0..n * n).map(|_| rand_c(&mut rng)).collect();
            let b: Vec<C64> = (0..n).map(|_| rand_c(&mut rng)).collect();

            let na = nalgebra::DMatrix::from_row_slice(n, n, &a);
            let nb = nalgebra::DVector::from_column_slice(&b);
            let reference = na.clone().lu().solve(&nb).expect("nalgebra solve");

            let mut a_work = a.clone();
            let mut x = b.clone();
            lu_solve_inplace(&mut a_work, &mut x, n).expect("lu solve");

            for i in 0..n {
                assert_relative_eq!(x[i].re, reference[i].re, max_relative = 1e-10, epsilon = 1e-12);
                assert_relative_eq!(x[i].im, reference[i].im, max_relative = 1e-10, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn lu_rejects_singular() {
        // Rank-1 matrix.
        let mut a = vec![ONE, ONE, ONE, ONE];
        let mut b = vec![ONE, ONE];
        assert!(lu_solve_inplace(&mut a, &mut b, 2).is_err());
    }

    #[test]
    fn cramer_solves_small_system() {
        let a = [
            [C64::new(2.0, 0.0), C64::new(0.0, 1.0), ZERO],
            [C64::new(0.0, -1.0), C64::new(3.0, 0.0), ONE],
            [ZERO, ONE, C64::new(1.0, 1.0)],
        ];
        let want = [C64::new(1.0, -0.5), C64::new(0.25, 2.0), C64::new(-1.0, 0.0)];
        let mut rhs = [ZERO; 3];
        for r in 0..3 {
            for c in 0..3 {
                rhs[r] += a[r][c] * want[c];
            }
        }
        let got = solve3(&a, &rhs).unwrap();
        for k in 0..3 {
            assert_relative_eq!(got[k].re, want[k].re, epsilon = 1e-12);
            assert_relative_eq!(got[k].im, want[k].im, epsilon = 1e-12);
        }
    }

    #[test]
    fn roots_of_known_cubic() {
        // (x - (1+2i)) (x - 3) (x + 0.5i)
        let r1 = C64::new(1.0, 2.0);
        let r2 = C64::new(3.0, 0.0);
        let r3 = C64::new(0.0, -0.5);
        let p = poly_mul(
            &poly_mul(&[-r1, ONE], &[-r2, ONE]),
            &[-r3, ONE],
        );
        let mut roots = poly_roots(&p).unwrap();
        for want in [r1, r2, r3] {
            let (idx, _) = roots
                .iter()
                .enumerate()
                .min_by(|(_, a), (_, b)| {
                    (*a - want).norm().partial_cmp(&(*b - want).norm()).unwrap()
                })
                .unwrap();
            let got = roots.remove(idx);
            assert!((got - want).norm() < 1e-10, "{got} vs {want}");
        }
    }

    #[test]
    fn quadratic_roots_avoid_cancellation() {
        // x² - 1e8 x + 1 has roots ~1e8 and ~1e-8.
        let p = [ONE, C64::new(-1e8, 0.0), ONE];
        let roots = poly_roots(&p).unwrap();
        let small = roots.iter().map(|r| r.norm()).fold(f64::MAX, f64::min);
        assert_relative_eq!(small, 1e-8, max_relative = 1e-9);
    }

    #[test]
    fn partial_fraction_residues() {
        // 1/((x-1)(x-2)) = -1/(x-1) + 1/(x-2)
        let roots = vec![ONE, C64::new(2.0, 0.0)];
        let res = partial_fractions(&[ONE], &roots, ONE);
        assert_relative_eq!(res[0].re, -1.0, epsilon = 1e-14);
        assert_relative_eq!(res[1].re, 1.0, epsilon = 1e-14);

        // Reconstruction check at a test point for a random rational.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let roots: Vec<C64> = (0..3).map(|_| rand_c(&mut rng) * 4.0).collect();
        let num: Vec<C64> = (0..3).map(|_| rand_c(&mut rng)).collect();
        let den = poly_mul(
            &poly_mul(&[-roots[0], ONE], &[-roots[1], ONE]),
            &[-roots[2], ONE],
        );
        let res = partial_fractions(&num, &roots, ONE);
        let x = C64::new(0.37, 1.21);
        let direct = poly_eval(&num, x) / poly_eval(&den, x);
        let via: C64 = roots.iter().zip(&res).map(|(&p, &r)| r / (x - p)).sum();
        assert!((direct - via).norm() < 1e-11 * direct.norm().max(1.0));
    }

    #[test]
    fn separate_roots_enforces_gap() {
        let mut roots = vec![ONE, ONE + C64::new(1e-12, 0.0), C64::new(5.0, 0.0)];
        separate_roots(&mut roots, 1e-6);
        for i in 0..roots.len() {
            for j in (i + 1)..roots.len() {
                assert!((roots[i] - roots[j]).norm() >= 0.99e-6);
            }
        }
    }
}
