//! Level schemes, laser fields and the vapor-cell description, plus the
//! conversion from lab parameters (power, beam diameter) to model parameters.

use crate::constants::*;
use crate::doppler::BeamGeometry;
use crate::error::{Result, SimError};
use crate::linalg::C64;
use crate::pump::PumpModel;

/// Index convention for the mercury scheme: 0 = 6¹S₀ (ground), 1 = 6³P₁,
/// 2 = 7³S₁, 3 = 6³P₂ (metastable), 4 = 6³P₀ (trap, five-level scheme only).
pub const GROUND: usize = 0;
pub const P1: usize = 1;
pub const S1: usize = 2;
pub const P2: usize = 3;
pub const TRAP: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct TrapExtension {
    pub trap_index: usize,
    /// Decay rate 7³S₁ → trap, rad/s.
    pub decay_rate: f64,
    /// Incoherent rate trap → 7³S₁, rad/s.
    pub repump_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelScheme {
    pub labels: Vec<String>,
    /// (from level, to level, rate Γ in rad/s); radiative decays only.
    pub decays: Vec<(usize, usize, f64)>,
    pub trap_extension: Option<TrapExtension>,
}

impl LevelScheme {
    /// The four-level core: ladder 6¹S₀ – 6³P₁ – 7³S₁ plus the metastable
    /// 6³P₂ branch.
    pub fn four_level() -> Self {
        LevelScheme {
            labels: ["6S0", "6P1", "7S1", "6P2"].map(String::from).to_vec(),
            decays: vec![(P1, GROUND, GAMMA_12), (S1, P1, GAMMA_23), (S1, P2, GAMMA_34)],
            trap_extension: None,
        }
    }

    /// Four-level core plus the 6³P₀ trap level fed by 7³S₁.
    pub fn five_level(trap_decay: f64, repump_rate: f64) -> Self {
        let mut scheme = Self::four_level();
        scheme.labels.push("6P0".into());
        scheme.trap_extension = Some(TrapExtension {
            trap_index: TRAP,
            decay_rate: trap_decay,
            repump_rate,
        });
        scheme
    }

    pub fn n_levels(&self) -> usize {
        self.labels.len()
    }

    /// Total incoherent outflow rate from a level (decays, trap branch,
    /// repump out of the trap). Governs the decay of coherences to `level`.
    pub fn outflow(&self, level: usize) -> f64 {
        let mut total: f64 = self
            .decays
            .iter()
            .filter(|(from, _, _)| *from == level)
            .map(|(_, _, g)| g)
            .sum();
        if let Some(trap) = &self.trap_extension {
            if level == S1 {
                total += trap.decay_rate;
            }
            if level == trap.trap_index {
                total += trap.repump_rate;
            }
        }
        total
    }

    /// All incoherent transfer channels (from, to, rate) including the trap
    /// branch and the repump.
    pub fn transfer_channels(&self) -> Vec<(usize, usize, f64)> {
        let mut channels = self.decays.clone();
        if let Some(trap) = &self.trap_extension {
            channels.push((S1, trap.trap_index, trap.decay_rate));
            if trap.repump_rate > 0.0 {
                channels.push((trap.trap_index, S1, trap.repump_rate));
            }
        }
        channels
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_levels();
        for &(from, to, rate) in &self.decays {
            if from >= n || to >= n {
                return Err(SimError::domain(format!(
                    "decay ({from} -> {to}) outside the {n}-level scheme"
                )));
            }
            if rate < 0.0 {
                return Err(SimError::domain("negative decay rate"));
            }
        }
        if let Some(trap) = &self.trap_extension {
            if trap.trap_index >= n {
                return Err(SimError::domain("trap index outside scheme"));
            }
            if trap.decay_rate < 0.0 || trap.repump_rate < 0.0 {
                return Err(SimError::domain("negative trap rate"));
            }
        }
        // The decay graph must drain toward the ground state: no directed
        // cycle among the radiative decays (the repump raising channel is
        // exempt by construction).
        let mut visiting = vec![0u8; n];
        fn dfs(node: usize, edges: &[(usize, usize, f64)], state: &mut [u8]) -> bool {
            state[node] = 1;
            for &(from, to, _) in edges {
                if from == node {
                    if state[to] == 1 {
                        return false;
                    }
                    if state[to] == 0 && !dfs(to, edges, state) {
                        return false;
                    }
                }
            }
            state[node] = 2;
            true
        }
        for start in 0..n {
            if visiting[start] == 0 && !dfs(start, &self.decays, &mut visiting) {
                return Err(SimError::domain("decay graph contains a cycle"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LaserField {
    /// Rabi frequency Ω, rad/s; complex to carry an optional drive phase.
    pub rabi: C64,
    /// Detuning Δ = ω_atom − ω_laser, rad/s.
    pub detuning: f64,
    /// Beam direction, unit vector.
    pub unit_k: [f64; 3],
    /// Vacuum wavelength, m.
    pub wavelength: f64,
    /// Laser linewidth (FWHM), Hz.
    pub linewidth_fwhm: f64,
    pub enabled: bool,
}

impl LaserField {
    pub fn new(
        rabi: C64,
        detuning: f64,
        unit_k: [f64; 3],
        wavelength: f64,
        linewidth_fwhm: f64,
        enabled: bool,
    ) -> Result<Self> {
        let norm = (unit_k[0].powi(2) + unit_k[1].powi(2) + unit_k[2].powi(2)).sqrt();
        if norm == 0.0 {
            return Err(SimError::domain("laser direction must be nonzero"));
        }
        if wavelength <= 0.0 {
            return Err(SimError::domain("wavelength must be positive"));
        }
        if linewidth_fwhm < 0.0 {
            return Err(SimError::domain("linewidth must be ≥ 0"));
        }
        Ok(LaserField {
            rabi,
            detuning,
            unit_k: [unit_k[0] / norm, unit_k[1] / norm, unit_k[2] / norm],
            wavelength,
            linewidth_fwhm,
            enabled,
        })
    }

    /// Rabi frequency seen by the atoms: zero when the beam is blocked.
    pub fn effective_rabi(&self) -> C64 {
        if self.enabled {
            self.rabi
        } else {
            C64::new(0.0, 0.0)
        }
    }

    /// |k| = 2π/λ, rad/m.
    pub fn k_magnitude(&self) -> f64 {
        TAU / self.wavelength
    }

    /// Linewidth as an angular rate, rad/s; zero when the beam is blocked.
    pub fn dephasing_rate(&self) -> f64 {
        if self.enabled {
            TAU * self.linewidth_fwhm
        } else {
            0.0
        }
    }

    pub fn validate(&self) -> Result<()> {
        let norm2: f64 = self.unit_k.iter().map(|c| c * c).sum();
        if (norm2.sqrt() - 1.0).abs() > 1e-12 {
            return Err(SimError::domain("laser direction is not a unit vector"));
        }
        if self.linewidth_fwhm < 0.0 {
            return Err(SimError::domain("linewidth must be ≥ 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellModel {
    pub atom_temperature: f64,
    pub path_length: f64,
    /// Atomic mass, kg.
    pub atomic_mass: f64,
    /// Susceptibility prefactor κ = N|d₂₁|²/(ħε₀), s⁻¹.
    pub kappa: f64,
    /// Line-center transmission of the undisturbed reference beam that the
    /// density calibration reproduces.
    pub reference_transmission_target: f64,
    pub beam_diameter: f64,
    /// Optional override of the transit relaxation rate, rad/s.
    pub transit_override: Option<f64>,
}

impl CellModel {
    /// 1-D rms velocity σ_v = √(kT/m), m/s.
    pub fn sigma_v(&self) -> f64 {
        (KB * self.atom_temperature / self.atomic_mass).sqrt()
    }

    /// Transit relaxation rate 1/t_int with t_int = d / v_mp, rad/s.
    pub fn transit_rate(&self) -> f64 {
        self.transit_override.unwrap_or_else(|| {
            crate::doppler::most_probable_speed(self.atom_temperature, self.atomic_mass)
                / self.beam_diameter
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.path_length <= 0.0 || self.atom_temperature <= 0.0 {
            return Err(SimError::domain("cell path and temperature must be positive"));
        }
        if self.kappa < 0.0 {
            return Err(SimError::domain("κ must be ≥ 0"));
        }
        if !(0.0 < self.reference_transmission_target
            && self.reference_transmission_target <= 1.0)
        {
            return Err(SimError::domain("reference transmission must lie in (0, 1]"));
        }
        Ok(())
    }
}

/// How the thermal average is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadratureMode {
    /// Structure-adapted panels with an analytic linear-response background.
    Adaptive,
    /// Literal Gauss-Hermite product grid over the velocity plane.
    Product,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Numerics {
    pub quadrature_order: usize,
    pub quadrature: QuadratureMode,
    /// Relative residual bound for the steady-state solve.
    pub solver_tol: f64,
}

impl Default for Numerics {
    fn default() -> Self {
        Numerics {
            quadrature_order: 16,
            quadrature: QuadratureMode::Adaptive,
            solver_tol: 1e-9,
        }
    }
}

/// A fully resolved scenario. Constructed through the config layer (or a
/// preset); `file` retains the config-file form so output sidecars reproduce
/// the run bit-exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    pub scheme: LevelScheme,
    pub probe: LaserField,
    pub strong: LaserField,
    pub weak: LaserField,
    pub repump: LaserField,
    pub pump: PumpModel,
    pub cell: CellModel,
    pub geometry: BeamGeometry,
    pub numerics: Numerics,
    pub file: crate::config::ConfigFile,
}

impl SystemConfig {
    pub fn validate(&self) -> Result<()> {
        self.scheme.validate()?;
        self.probe.validate()?;
        self.strong.validate()?;
        self.weak.validate()?;
        self.repump.validate()?;
        self.cell.validate()?;
        self.geometry.validate()?;
        if self.numerics.quadrature_order < 4 {
            return Err(SimError::domain("quadrature order must be ≥ 4"));
        }
        Ok(())
    }

    /// The same cell and probe with every other beam blocked: the reference
    /// arm of the measurement.
    pub fn reference_arm(&self) -> SystemConfig {
        let mut reference = self.clone();
        reference.strong.enabled = false;
        reference.weak.enabled = false;
        reference.repump.enabled = false;
        reference.pump.enabled = false;
        if let Some(trap) = &mut reference.scheme.trap_extension {
            trap.repump_rate = 0.0;
        }
        reference.file.blank_run_sections();
        reference
    }
}

/// Baseline four-level scenario with the measured beam parameters.
pub fn mercury_preset() -> SystemConfig {
    crate::config::preset(crate::config::Scenario::FourLevelBase)
}

/// Five-level scenario (trap level plus repumper plumbing).
pub fn mercury_five_level_preset() -> SystemConfig {
    crate::config::preset(crate::config::Scenario::D)
}

/// S₀ = I / I_sat with I = P / (π (d/2)²) and I_sat = π h c Γ / (3 λ³).
pub fn saturation_parameter(
    power: f64,
    beam_diameter: f64,
    wavelength: f64,
    gamma: f64,
) -> Result<f64> {
    if power == 0.0 {
        return Ok(0.0);
    }
    if power < 0.0 || beam_diameter <= 0.0 || wavelength <= 0.0 || gamma <= 0.0 {
        return Err(SimError::domain(
            "saturation parameter needs positive power, diameter, wavelength and Γ",
        ));
    }
    let intensity = power / (std::f64::consts::PI * (beam_diameter / 2.0).powi(2));
    let i_sat = std::f64::consts::PI * PLANCK_H * C_LIGHT * gamma / (3.0 * wavelength.powi(3));
    Ok(intensity / i_sat)
}
