//! Physical constants (SI) and the mercury-specific defaults used by the presets.
//!
//! Internal unit convention: every rate and frequency is angular (rad/s).
//! Config files and CLI flags speak ordinary frequency (Hz/MHz); the factor
//! 2π is applied exactly once, at parse time.

use std::f64::consts::PI;

pub const TAU: f64 = 2.0 * PI;

/// Reduced Planck constant, J s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Planck constant, J s.
pub const PLANCK_H: f64 = 6.626_070_15e-34;
/// Boltzmann constant, J/K.
pub const KB: f64 = 1.380_649e-23;
/// Speed of light, m/s.
pub const C_LIGHT: f64 = 2.997_924_58e8;
/// Atomic mass unit, kg.
pub const AMU: f64 = 1.660_539_066_60e-27;

/// Atomic mass of the ²⁰²Hg isotope, u.
pub const HG202_MASS_U: f64 = 201.970_643;

/// 6¹S₀ ↔ 6³P₁ probe transition wavelength, m.
pub const LAMBDA_PROBE: f64 = 253.7e-9;
/// 6³P₁ ↔ 7³S₁ strong-coupling transition wavelength, m.
pub const LAMBDA_STRONG: f64 = 435.8e-9;
/// 7³S₁ ↔ 6³P₂ weak-coupling transition wavelength, m.
pub const LAMBDA_WEAK: f64 = 546.1e-9;
/// 7³S₁ ↔ 6³P₀ repump transition wavelength, m.
pub const LAMBDA_REPUMP: f64 = 404.7e-9;

/// Radiative rate of 6³P₁ → 6¹S₀ (Γ₁₂), rad/s.
pub const GAMMA_12: f64 = TAU * 1.27e6;
/// Radiative rate of 7³S₁ → 6³P₁ (Γ₂₃), rad/s.
pub const GAMMA_23: f64 = TAU * 8.86e6;
/// Radiative rate of 7³S₁ → 6³P₂ (Γ₃₄), rad/s.
pub const GAMMA_34: f64 = TAU * 7.75e6;
/// Radiative rate of 7³S₁ → 6³P₀ (trap branch), rad/s.
///
/// Einstein A of the 404.7 nm branch. Literature value, not part of the
/// calibrated data set of this model; configurable via `scheme.trap_decay_mhz`.
pub const GAMMA_TRAP_DEFAULT: f64 = 2.07e7;

/// Susceptibility prefactor κ = N|d₂₁|²/(ħ ε₀) of the baseline vapor cell, s⁻¹.
pub const KAPPA_BASE: f64 = 7.57e4;

/// Baseline Rabi frequencies, rad/s.
pub const OMEGA_PROBE: f64 = TAU * 0.21e6;
pub const OMEGA_STRONG: f64 = TAU * 30.8e6;
pub const OMEGA_WEAK: f64 = TAU * 6.17e6;
pub const OMEGA_REPUMP: f64 = TAU * 1.80e6;

/// Probe Rabi frequency at the reduced 15 µW probe power used for gain
/// measurements, rad/s.
pub const OMEGA_PROBE_LOW: f64 = TAU * 0.175e6;

/// Laser linewidths (FWHM), Hz.
pub const LINEWIDTH_PROBE: f64 = 60e3;
pub const LINEWIDTH_STRONG: f64 = 60e3;
pub const LINEWIDTH_WEAK: f64 = 183e3;
pub const LINEWIDTH_REPUMP: f64 = 52e6;

/// Vapor-cell defaults.
pub const CELL_TEMPERATURE: f64 = 289.15; // K (16 °C)
pub const CELL_PATH_LENGTH: f64 = 2e-3; // m
pub const PROBE_BEAM_DIAMETER: f64 = 0.84e-3; // m
pub const REFERENCE_TRANSMISSION: f64 = 0.68;

/// Incoherent pump-beam defaults.
pub const PUMP_ANGLE_DEG: f64 = 5.0;
pub const PUMP_LONG_AXIS: f64 = 2.5e-3; // m, full axis
pub const PUMP_SHORT_AXIS: f64 = 1.4e-3; // m, full axis
pub const PUMP_SPECTRAL_FWHM: f64 = 0.5e6; // Hz

/// Pump power → on-resonance rate conversion constant (see `pump::rate_at`):
/// r₀ = PUMP_RATE_SCALE · I / (ħω · Γ_eff) with I the pump intensity.
/// Units m²/s (an absorption cross-section times a rate).
/// Fixed once against the measured 86.9 % peak transmission at
/// 40 mW pump power and 0.5 MHz spectral width; not re-fit per run.
pub const PUMP_RATE_SCALE: f64 = 3.011e-7;
