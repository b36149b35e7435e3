//! Faddeeva function w(z) = exp(−z²) erfc(−iz) and the Gaussian-pole kernel
//! ∫ N(a; μ, σ) / (a − p) da used by the analytic part of the velocity
//! average. The rational (Weideman) approximation covers moderate |z|; a
//! Laplace continued fraction takes over far from the origin.

use once_cell::sync::Lazy;

use crate::linalg::C64;

const SQRT_PI: f64 = 1.772_453_850_905_516;

/// Order of the rational approximation.
const N_WEIDEMAN: usize = 64;

/// Fourier coefficients a_1..a_N of (L² + t²) e^{−t²} under t = L tan(θ/2).
static WEIDEMAN_COEFFS: Lazy<(f64, Vec<f64>)> = Lazy::new(|| {
    let n = N_WEIDEMAN;
    let m = 2 * n;
    let l = (n as f64 / std::f64::consts::SQRT_2).sqrt();
    let g = |theta: f64| -> f64 {
        let t = l * (theta / 2.0).tan();
        (-t * t).exp() * (l * l + t * t)
    };
    let mut coeffs = Vec::with_capacity(n);
    for order in 1..=n {
        let mut acc = g(0.0);
        for k in 1..m {
            let theta = k as f64 * std::f64::consts::PI / m as f64;
            acc += 2.0 * g(theta) * (order as f64 * theta).cos();
        }
        coeffs.push(acc / (2.0 * m as f64));
    }
    (l, coeffs)
});

/// Faddeeva function for Im z ≥ 0 (callers reflect lower-half arguments).
pub fn faddeeva_upper(z: C64) -> C64 {
    debug_assert!(z.im >= 0.0);
    if z.norm_sqr() > 144.0 {
        return faddeeva_cf(z);
    }
    let (l, a) = &*WEIDEMAN_COEFFS;
    let l = *l;
    let iz = C64::new(-z.im, z.re); // i z
    let denom = C64::new(l, 0.0) - iz;
    let zz = (C64::new(l, 0.0) + iz) / denom;
    // p(Z) = Σ a_m Z^{m−1}, Horner from the top coefficient.
    let mut p = C64::new(0.0, 0.0);
    for &c in a.iter().rev() {
        p = p * zz + c;
    }
    2.0 * p / (denom * denom) + C64::new(1.0 / SQRT_PI, 0.0) / denom
}

/// Laplace continued fraction, accurate for large |z| in the upper half plane.
fn faddeeva_cf(z: C64) -> C64 {
    let mut f = z;
    for k in (1..=24).rev() {
        f = z - (k as f64 / 2.0) / f;
    }
    C64::new(0.0, 1.0 / SQRT_PI) / f
}

/// ∫ N(a; μ, σ) / (a − p) da with N the normal density; exact through the
/// Faddeeva function, valid for any simple pole p off the real axis.
pub fn gaussian_pole_kernel(p: C64, mu: f64, sigma: f64) -> C64 {
    let s = sigma * std::f64::consts::SQRT_2;
    let mut z0 = (p - C64::new(mu, 0.0)) / s;
    let flip = z0.im < 0.0;
    if flip {
        z0 = z0.conj();
    }
    // Poles essentially on the axis get the upper-half limit; the engine keeps
    // decay rates positive so this path only guards against exact zeros.
    if z0.im < 1e-300 {
        z0.im = 1e-300;
    }
    let val = C64::new(0.0, SQRT_PI) * faddeeva_upper(z0) / s;
    if flip {
        val.conj()
    } else {
        val
    }
}
