//! Probe susceptibility: the closed-form weak-probe expression for a
//! stationary atom, extraction of χ from a computed density matrix, and the
//! dressed-state decomposition of the strong+weak coupling.

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, SimError};
use crate::linalg::{C64, I, ZERO};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Susceptibility {
    pub chi: C64,
    pub delta_p: f64,
    pub delta_s: f64,
    pub delta_w: f64,
}

impl Susceptibility {
    pub fn absorption(&self) -> f64 {
        self.chi.im
    }

    pub fn dispersion(&self) -> f64 {
        self.chi.re
    }
}

/// Weak-probe susceptibility of a stationary ground-state atom,
///
///   χ = κ (iΔ₃γ₁ − |Ω_w|²) / (Δ₃(γ₁γ₂ + |Ω_s|²) + iγ₂|Ω_w|²),
///
/// with γ₂ = Γ₁₂/2 − iΔ_p, γ₁ = (Γ₂₃+Γ₃₄)/2 − i(Δ_p+Δ_s) and the
/// three-photon detuning Δ₃ = Δ_p + Δ_s − Δ_w. Spontaneous emission only —
/// transit, pump and laser linewidths are zero here.
#[allow(clippy::too_many_arguments)]
pub fn chi_analytic(
    kappa: f64,
    gamma12: f64,
    gamma23: f64,
    gamma34: f64,
    omega_s: C64,
    omega_w: C64,
    delta_p: f64,
    delta_s: f64,
    delta_w: f64,
) -> Result<Susceptibility> {
    let gamma2 = C64::new(gamma12 / 2.0, -delta_p);
    let gamma1 = C64::new((gamma23 + gamma34) / 2.0, -(delta_p + delta_s));
    let d3 = delta_p + delta_s - delta_w;
    let ow2 = omega_w.norm_sqr();
    let num = I * d3 * gamma1 - ow2;
    let den = d3 * (gamma1 * gamma2 + omega_s.norm_sqr()) + I * gamma2 * ow2;
    let scale = d3.abs() * (gamma1.norm() * gamma2.norm() + omega_s.norm_sqr())
        + gamma2.norm() * ow2;
    if den.norm() < 1e-14 * scale.max(1e-300) {
        return Err(SimError::Singular(
            "analytic susceptibility singular: no relaxation on a resonant path".into(),
        ));
    }
    Ok(Susceptibility { chi: kappa * num / den, delta_p, delta_s, delta_w })
}

/// χ extracted from a computed stationary density matrix,
/// χ = κ ρ₂₁ / Ω_p*.
pub fn chi_numeric(rho21: C64, omega_p: C64, kappa: f64) -> Result<C64> {
    if omega_p == ZERO {
        return Err(SimError::domain(
            "susceptibility extraction needs a nonzero probe field",
        ));
    }
    Ok(kappa * rho21 / omega_p.conj())
}

/// Dressed states of the strong+weak coupling at zero detunings.
///
/// `plus`/`minus`/`zero` are the first-order vectors in |Ω_w/Ω_s|, expressed
/// over the bare levels (6³P₁, 7³S₁, 6³P₂); `exact` and `exact_shifts` come
/// from numerically diagonalizing that coupled block (the ground level
/// decouples at vanishing probe). `shifts` are the light shifts ∓√(|Ω_s|²+|Ω_w|²)
/// of |±⟩ in rad/s, in the same order as `exact_shifts`.
#[derive(Debug, Clone)]
pub struct DressedBasis {
    /// First-order |+⟩, |0⟩, |−⟩; `None` outside the perturbative window.
    pub perturbative: Option<[DVector<C64>; 3]>,
    pub shifts: [f64; 3],
    pub exact: [DVector<C64>; 3],
    pub exact_shifts: [f64; 3],
}

/// Perturbative window for the first-order expansion.
pub const DRESSED_RATIO_MAX: f64 = 0.2;

/// |±⟩ = (|2⟩ ∓ (|Ω_s|/Ω_s)|3⟩ + (Ω_w/Ω_s)|4⟩)/√2 to first order in
/// Ω_w/Ω_s, and |0⟩ = |4⟩ − (Ω_w*/Ω_s*)|2⟩: the three-photon admixture that
/// couples |0⟩ back to the ground state. Requires Ω_s ≠ 0.
pub fn dressed_states(omega_s: C64, omega_w: C64) -> Result<DressedBasis> {
    if omega_s == ZERO {
        return Err(SimError::domain(
            "dressed basis undefined without the strong coupling",
        ));
    }
    let os = omega_s.norm();
    let ow = omega_w.norm();
    let big = (os * os + ow * ow).sqrt();

    // Coupled block over (6³P₁, 7³S₁, 6³P₂) at zero detunings. The
    // Hamiltonian is −ħ times this block, so the |+⟩ state (energy +ħ·big)
    // belongs to block eigenvalue −big.
    let mut block = DMatrix::from_element(3, 3, ZERO);
    block[(0, 1)] = omega_s;
    block[(1, 0)] = omega_s.conj();
    block[(1, 2)] = omega_w.conj();
    block[(2, 1)] = omega_w;

    let eig = block.symmetric_eigen();
    // Block eigenvalues ascending = (−big, 0, +big) ↦ states (|+⟩, |0⟩, |−⟩).
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    let mut exact: Vec<DVector<C64>> = Vec::with_capacity(3);
    let mut exact_shifts = [0.0; 3];
    for (slot, &which) in order.iter().enumerate() {
        let mut v: DVector<C64> = eig.eigenvectors.column(which).into_owned();
        // Fix the overall phase: largest component real positive.
        let lead = (0..3)
            .max_by(|&a, &b| v[a].norm().partial_cmp(&v[b].norm()).unwrap())
            .unwrap();
        let phase = v[lead] / v[lead].norm().max(1e-300);
        v /= phase;
        exact.push(v);
        exact_shifts[slot] = -eig.eigenvalues[which];
    }
    let exact: [DVector<C64>; 3] = [exact[0].clone(), exact[1].clone(), exact[2].clone()];
    let shifts = [big, 0.0, -big];

    let perturbative = if ow / os <= DRESSED_RATIO_MAX {
        let us = omega_s / os; // unit phase of the strong coupling
        let admix = omega_w / omega_s;
        let inv_sqrt2 = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let mut plus =
            DVector::from_vec(vec![inv_sqrt2, -us * inv_sqrt2, admix * inv_sqrt2]);
        let mut minus =
            DVector::from_vec(vec![inv_sqrt2, us * inv_sqrt2, admix * inv_sqrt2]);
        let mut zero =
            DVector::from_vec(vec![-admix.conj(), ZERO, C64::new(1.0, 0.0)]);
        plus.normalize_mut();
        minus.normalize_mut();
        zero.normalize_mut();
        Some([plus, zero, minus])
    } else {
        None
    };

    Ok(DressedBasis { perturbative, shifts, exact, exact_shifts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn line_center_and_window_floor() {
        // Parameters of the reference spectra: Ω_s = 2π·30 MHz,
        // Ω_w = 2π·0.5 MHz.
        let os = C64::new(TAU * 30e6, 0.0);
        let ow = C64::new(TAU * 0.5e6, 0.0);
        // At Δ₃ = 0 the three-photon pole restores the two-level absorption
        // χ'' = 2κ/Γ₁₂ exactly.
        let s = chi_analytic(KAPPA_BASE, GAMMA_12, GAMMA_23, GAMMA_34, os, ow, 0.0, 0.0, 0.0)
            .unwrap();
        assert_relative_eq!(s.chi.im, 2.0 * KAPPA_BASE / GAMMA_12, max_relative = 1e-10);
        assert_abs_diff_eq!(s.chi.im, 1.897e-2, epsilon = 2e-5);
        assert_abs_diff_eq!(s.chi.re, 0.0, epsilon = 1e-12);

        // Slightly off the three-photon resonance the coupling window
        // suppresses absorption to the two-photon floor.
        let floor = chi_analytic(
            KAPPA_BASE,
            GAMMA_12,
            GAMMA_23,
            GAMMA_34,
            os,
            ow,
            0.0,
            0.0,
            TAU * 2.0e6,
        )
        .unwrap();
        assert!(floor.chi.im < 2e-4, "floor {}", floor.chi.im);
    }

    #[test]
    fn matches_sector_solve_when_widths_reduce() {
        // With transit, pump and linewidths zero, the general sector solve
        // reduces to the closed form.
        use crate::atom::{LaserField, LevelScheme};
        let scheme = LevelScheme::four_level();
        let mk = |rabi: C64, det: f64| {
            LaserField::new(rabi, det, [1.0, 0.0, 0.0], 500e-9, 0.0, true).unwrap()
        };
        let os = C64::from_polar(TAU * 30e6, 0.3);
        let ow = C64::from_polar(TAU * 0.5e6, -1.1);
        for (dp, ds, dw) in [
            (TAU * 1e6, TAU * -2e6, TAU * 0.3e6),
            (TAU * 25e6, 0.0, 0.0),
            (0.0, TAU * 80e6, TAU * -80e6),
            (TAU * 0.05e6, 0.0, 0.0),
        ] {
            let probe = mk(C64::new(1.0, 0.0), dp);
            let strong = mk(os, ds);
            let weak = mk(ow, dw);
            let closed = chi_analytic(
                KAPPA_BASE, GAMMA_12, GAMMA_23, GAMMA_34, os, ow, dp, ds, dw,
            )
            .unwrap()
            .chi;
            let sector = crate::bloch::weak_probe_chi_at(
                &scheme,
                &probe,
                &strong,
                &weak,
                0.0,
                KAPPA_BASE,
                [dp, ds, dw],
            )
            .unwrap();
            assert!(
                (closed - sector).norm() <= 1e-10 * closed.norm(),
                "({dp},{ds},{dw}): {closed} vs {sector}"
            );
        }
    }

    #[test]
    fn narrow_peak_sits_at_three_photon_resonance() {
        // The absorption revival tracks Δ_p = Δ_w − Δ_s.
        let os = C64::new(TAU * 30e6, 0.0);
        let ow = C64::new(TAU * 0.5e6, 0.0);
        for (ds, dw) in [(TAU * 80e6, 0.0), (0.0, TAU * 160e6), (TAU * -40e6, TAU * 25e6)] {
            let expected = dw - ds;
            let mut best = (f64::MIN, 0.0);
            let span = GAMMA_12;
            for k in 0..4001 {
                let dp = expected - span + 2.0 * span * (k as f64) / 4000.0;
                let s = chi_analytic(
                    KAPPA_BASE, GAMMA_12, GAMMA_23, GAMMA_34, os, ow, dp, ds, dw,
                )
                .unwrap();
                if s.chi.im > best.0 {
                    best = (s.chi.im, dp);
                }
            }
            assert!(
                (best.1 - expected).abs() <= GAMMA_12 / 10.0,
                "peak at {} expected {}",
                best.1,
                expected
            );
        }
    }

    #[test]
    fn numeric_extraction_requires_probe() {
        assert!(chi_numeric(C64::new(1e-3, 0.0), ZERO, KAPPA_BASE).is_err());
        let chi = chi_numeric(C64::new(0.0, 1e-3), C64::new(2e5, 0.0), 1e5).unwrap();
        assert_relative_eq!(chi.im, 1e5 * 1e-3 / 2e5, max_relative = 1e-12);
    }

    #[test]
    fn dressed_states_limit_and_admixture() {
        let os = C64::new(TAU * 30e6, 0.0);
        // Pure strong coupling: |±⟩ = (|2⟩ ∓ |3⟩)/√2.
        let basis = dressed_states(os, ZERO).unwrap();
        let pert = basis.perturbative.as_ref().unwrap();
        let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
        assert!((pert[0][0].re - inv_sqrt2).abs() < 1e-12);
        assert!((pert[0][1].re + inv_sqrt2).abs() < 1e-12);
        assert!(pert[0][2].norm() < 1e-12);
        assert!((pert[1][2].re - 1.0).abs() < 1e-12);
        // Exact and perturbative agree at zero weak coupling.
        for (p, e) in pert.iter().zip(basis.exact.iter()) {
            let overlap: C64 = p.dotc(e);
            assert!(overlap.norm() > 1.0 - 1e-10, "overlap {}", overlap.norm());
        }
        assert_relative_eq!(basis.shifts[0], TAU * 30e6, max_relative = 1e-12);

        // Small weak admixture: first-order vectors stay close to exact and
        // the |4⟩ weight in |±⟩ grows linearly with ε.
        let mut prev = 0.0;
        for (k, ratio) in [0.01, 0.02].iter().enumerate() {
            let ow = C64::from_polar(os.norm() * ratio, 0.4);
            let basis = dressed_states(os, ow).unwrap();
            let pert = basis.perturbative.as_ref().unwrap();
            for (p, e) in pert.iter().zip(basis.exact.iter()) {
                let overlap: C64 = p.dotc(e);
                assert!(
                    overlap.norm() > 1.0 - 1e-3,
                    "ratio {ratio}: overlap {}",
                    overlap.norm()
                );
            }
            let w4 = pert[0][2].norm();
            if k == 1 {
                // Linear to first order; normalization adds O(ε²).
                assert_relative_eq!(w4, 2.0 * prev, max_relative = 1e-3);
            }
            prev = w4;
            // Shifts match the exact splitting.
            assert_relative_eq!(
                basis.exact_shifts[0],
                (os.norm_sqr() + ow.norm_sqr()).sqrt(),
                max_relative = 1e-10
            );
        }

        // Outside the window only the numeric basis remains.
        let wide = dressed_states(os, os * 0.5).unwrap();
        assert!(wide.perturbative.is_none());
        assert!(dressed_states(ZERO, os).is_err());
    }
}
