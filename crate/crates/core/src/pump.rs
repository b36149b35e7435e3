//! Incoherent pumping: the broadband UV pump acting on the probe transition
//! (velocity-selective through its Doppler shift) and the repumper that
//! drains the 6³P₀ trap.

use crate::atom::{LaserField, LevelScheme};
use crate::constants::*;
use crate::error::{Result, SimError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PumpStrength {
    /// Optical power in W; converted to a rate via intensity and the
    /// effective spectral width.
    Power(f64),
    /// Direct on-resonance rate r₀ in rad-free 1/s.
    Rate(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PumpLineshape {
    Lorentzian,
    Gaussian,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PumpModel {
    pub enabled: bool,
    pub strength: PumpStrength,
    /// Elliptical beam full axes, m.
    pub long_axis: f64,
    pub short_axis: f64,
    /// Pump spectral width (FWHM), Hz.
    pub spectral_fwhm: f64,
    /// Center detuning from the probe transition, rad/s.
    pub detuning: f64,
    pub lineshape: PumpLineshape,
    /// Conversion r₀ = rate_scale · I / (ħω · Γ_eff), m²/s; calibrated once
    /// against the measured peak transmission.
    pub rate_scale: f64,
    /// Pump wavelength for the photon energy, m.
    pub wavelength: f64,
}

impl PumpModel {
    pub fn disabled() -> Self {
        PumpModel {
            enabled: false,
            strength: PumpStrength::Power(0.0),
            long_axis: PUMP_LONG_AXIS,
            short_axis: PUMP_SHORT_AXIS,
            spectral_fwhm: PUMP_SPECTRAL_FWHM,
            detuning: 0.0,
            lineshape: PumpLineshape::Lorentzian,
            rate_scale: PUMP_RATE_SCALE,
            wavelength: LAMBDA_PROBE,
        }
    }

    /// Effective spectral width: pump FWHM convolved (added) with the
    /// natural width of the pumped transition, rad/s.
    pub fn gamma_eff(&self, gamma12: f64) -> f64 {
        TAU * self.spectral_fwhm + gamma12
    }

    /// On-resonance rate r₀, 1/s. Spectrally broader pumps dilute the power
    /// over more of the line, so at fixed power r₀ ∝ 1/Γ_eff and the
    /// integrated spectral weight stays constant.
    pub fn peak_rate(&self, gamma12: f64) -> Result<f64> {
        if !self.enabled {
            return Ok(0.0);
        }
        match self.strength {
            PumpStrength::Rate(r0) => {
                if r0 < 0.0 {
                    return Err(SimError::domain("pump rate must be ≥ 0"));
                }
                Ok(r0)
            }
            PumpStrength::Power(p) => {
                if p < 0.0 {
                    return Err(SimError::domain("pump power must be ≥ 0"));
                }
                if self.long_axis <= 0.0 || self.short_axis <= 0.0 {
                    return Err(SimError::domain("pump beam axes must be positive"));
                }
                let area =
                    std::f64::consts::PI * (self.long_axis / 2.0) * (self.short_axis / 2.0);
                let intensity = p / area;
                let photon = PLANCK_H * C_LIGHT / self.wavelength;
                Ok(self.rate_scale * intensity / (photon * self.gamma_eff(gamma12)))
            }
        }
    }

    /// Pump rate for an atom whose Doppler-shifted pump detuning is
    /// `delta`: r(δ) = r₀ · L(δ) with a lineshape of FWHM Γ_eff.
    pub fn rate_at(&self, gamma12: f64, delta: f64) -> Result<f64> {
        let r0 = self.peak_rate(gamma12)?;
        if r0 == 0.0 {
            return Ok(0.0);
        }
        let ge = self.gamma_eff(gamma12);
        Ok(match self.lineshape {
            PumpLineshape::Lorentzian => {
                let half2 = (ge / 2.0) * (ge / 2.0);
                r0 * half2 / (delta * delta + half2)
            }
            PumpLineshape::Gaussian => {
                r0 * (-4.0 * (2.0f64).ln() * delta * delta / (ge * ge)).exp()
            }
        })
    }
}

/// Incoherent drain rate of the trap level from the repump beam:
/// R = 2|Ω_rp|²/Γ_trap. Requires a scheme with a trap level.
pub fn repump_rate(repump: &LaserField, scheme: &LevelScheme) -> Result<f64> {
    let trap = scheme.trap_extension.as_ref().ok_or_else(|| {
        SimError::config("repump laser configured but the scheme has no trap level")
    })?;
    if !repump.enabled {
        return Ok(0.0);
    }
    let omega2 = repump.rabi.norm_sqr();
    if omega2 == 0.0 {
        return Ok(0.0);
    }
    if trap.decay_rate <= 0.0 {
        return Err(SimError::config(
            "repump rate needs a positive trap branch decay rate",
        ));
    }
    Ok(2.0 * omega2 / trap.decay_rate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::C64;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn pump(power: f64, fwhm: f64) -> PumpModel {
        let mut p = PumpModel::disabled();
        p.enabled = true;
        p.strength = PumpStrength::Power(power);
        p.spectral_fwhm = fwhm;
        p
    }

    #[test]
    fn lineshape_peak_and_width() {
        let p = pump(40e-3, 0.5e6);
        let ge = p.gamma_eff(GAMMA_12);
        let r0 = p.peak_rate(GAMMA_12).unwrap();
        assert!(r0 > 0.0);
        assert_relative_eq!(p.rate_at(GAMMA_12, 0.0).unwrap(), r0, max_relative = 1e-14);
        // Half maximum at δ = Γ_eff/2, symmetric.
        assert_relative_eq!(
            p.rate_at(GAMMA_12, ge / 2.0).unwrap(),
            r0 / 2.0,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            p.rate_at(GAMMA_12, -ge / 2.0).unwrap(),
            p.rate_at(GAMMA_12, ge / 2.0).unwrap(),
            max_relative = 1e-14
        );
        // Gaussian option shares peak and FWHM.
        let mut g = p.clone();
        g.lineshape = PumpLineshape::Gaussian;
        assert_relative_eq!(
            g.rate_at(GAMMA_12, ge / 2.0).unwrap(),
            r0 / 2.0,
            max_relative = 1e-12
        );
        // Far tails differ: Lorentzian decays algebraically.
        assert!(
            p.rate_at(GAMMA_12, 20.0 * ge).unwrap()
                > 100.0 * g.rate_at(GAMMA_12, 20.0 * ge).unwrap()
        );
    }

    #[test]
    fn peak_rate_linear_in_power_and_diluted_by_width() {
        let r40 = pump(40e-3, 0.5e6).peak_rate(GAMMA_12).unwrap();
        let r80 = pump(80e-3, 0.5e6).peak_rate(GAMMA_12).unwrap();
        assert_relative_eq!(r80, 2.0 * r40, max_relative = 1e-12);

        // At fixed power, widening 0.5 → 100 MHz lowers the peak rate by the
        // Γ_eff ratio ≈ 57.2 while conserving the integrated weight.
        let narrow = pump(40e-3, 0.5e6);
        let wide = pump(40e-3, 100e6);
        let ratio = narrow.peak_rate(GAMMA_12).unwrap() / wide.peak_rate(GAMMA_12).unwrap();
        let expect = wide.gamma_eff(GAMMA_12) / narrow.gamma_eff(GAMMA_12);
        assert_relative_eq!(ratio, expect, max_relative = 1e-12);
        assert_abs_diff_eq!(ratio, 57.2, epsilon = 0.1);
        let weight_narrow =
            narrow.peak_rate(GAMMA_12).unwrap() * narrow.gamma_eff(GAMMA_12);
        let weight_wide = wide.peak_rate(GAMMA_12).unwrap() * wide.gamma_eff(GAMMA_12);
        assert_relative_eq!(weight_narrow, weight_wide, max_relative = 1e-12);
    }

    #[test]
    fn rate_mode_bypasses_power() {
        let mut p = pump(40e-3, 100e6);
        p.strength = PumpStrength::Rate(TAU * 10e6);
        assert_relative_eq!(p.peak_rate(GAMMA_12).unwrap(), TAU * 10e6);
        p.enabled = false;
        assert_eq!(p.peak_rate(GAMMA_12).unwrap(), 0.0);
        let mut neg = pump(40e-3, 0.5e6);
        neg.strength = PumpStrength::Power(-1.0);
        assert!(neg.peak_rate(GAMMA_12).is_err());
    }

    #[test]
    fn repump_mapping() {
        let scheme = LevelScheme::five_level(GAMMA_TRAP_DEFAULT, 0.0);
        let mk = |rabi: f64, enabled: bool| {
            LaserField::new(
                C64::new(rabi, 0.0),
                0.0,
                [1.0, 0.0, 0.0],
                LAMBDA_REPUMP,
                52e6,
                enabled,
            )
            .unwrap()
        };
        let r1 = repump_rate(&mk(OMEGA_REPUMP, true), &scheme).unwrap();
        assert_relative_eq!(
            r1,
            2.0 * OMEGA_REPUMP * OMEGA_REPUMP / GAMMA_TRAP_DEFAULT,
            max_relative = 1e-12
        );
        // Doubling the Rabi frequency (4× power) quadruples the rate; the
        // rate is linear in optical power.
        let r2 = repump_rate(&mk(2.0 * OMEGA_REPUMP, true), &scheme).unwrap();
        assert_relative_eq!(r2, 4.0 * r1, max_relative = 1e-12);
        assert_eq!(repump_rate(&mk(OMEGA_REPUMP, false), &scheme).unwrap(), 0.0);
        // Repump beats the transit loss comfortably at the measured power.
        assert!(r1 > 50.0 * 1.84e5);

        let four = LevelScheme::four_level();
        assert!(repump_rate(&mk(OMEGA_REPUMP, true), &four).is_err());
    }
}
