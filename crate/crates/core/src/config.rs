//! TOML configuration schema, defaults, presets, and resolution into a
//! `SystemConfig`.
//!
//! File units are experiment-friendly: MHz for Rabi frequencies, detunings,
//! linewidths and decay rates (as ordinary frequencies, i.e. the 2π-free
//! numbers), nm for wavelengths, mm for lengths, mW for the pump power.
//! Internally everything becomes rad/s and meters at resolve time. Unknown
//! keys are hard errors so unit typos cannot pass silently.

use crate::atom::{CellModel, LaserField, LevelScheme, Numerics, QuadratureMode, SystemConfig};
use crate::constants::*;
use crate::doppler::BeamGeometry;
use crate::error::{Result, SimError};
use crate::linalg::C64;
use crate::pump::{self, PumpLineshape, PumpModel, PumpStrength};
use serde::{Deserialize, Serialize};

const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema_version: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scheme: Option<SchemeSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lasers: Option<LasersSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cell: Option<CellSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometry: Option<GeometrySection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pump: Option<PumpSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub numerics: Option<NumericsSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SchemeSection {
    /// 4 for the bare ladder, 5 to add the 6³P₀ trap level.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<u32>,
    /// 7³S₁ → trap decay rate /2π, MHz.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trap_decay_mhz: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct LasersSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe: Option<LaserSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strong: Option<LaserSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weak: Option<LaserSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repump: Option<LaserSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct LaserSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub enabled: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rabi_mhz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detuning_mhz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wavelength_nm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linewidth_mhz: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct CellSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature_k: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path_length_mm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beam_diameter_mm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atomic_mass_u: Option<f64>,
    /// Line-center transmission of the reference beam used to calibrate the
    /// vapor density when `kappa_per_s` is absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_transmission: Option<f64>,
    /// Explicit susceptibility prefactor; set by the resolver after density
    /// calibration so sidecar configs reproduce the run exactly.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa_per_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transit_rate_per_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    /// "doppler-free" (closed k triangle) or "collinear".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pump_angle_deg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strong_offset_deg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weak_offset_deg: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct PumpSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub enabled: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power_mw: Option<f64>,
    /// On-resonance pump rate /2π in MHz; overrides `power_mw` when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate_mhz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectral_fwhm_mhz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detuning_mhz: Option<f64>,
    /// "lorentzian" or "gaussian".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lineshape: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub long_axis_mm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub short_axis_mm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate_scale: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct NumericsSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadrature_order: Option<usize>,
    /// "adaptive" (resonance-following panels) or "product" (plain
    /// Gauss-Hermite grid).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadrature: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver_tol: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ScanSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub span_mhz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dense_span_mhz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dense_points: Option<usize>,
}

impl ConfigFile {
    /// Mark every beam except the probe as blocked, mirroring what
    /// `SystemConfig::reference_arm` does to the resolved fields.
    pub fn blank_run_sections(&mut self) {
        let lasers = self.lasers.get_or_insert_with(Default::default);
        for section in [&mut lasers.strong, &mut lasers.weak, &mut lasers.repump] {
            section.get_or_insert_with(Default::default).enabled = Some(false);
        }
        self.pump.get_or_insert_with(Default::default).enabled = Some(false);
    }

    /// Scan plan (span_hz, points, dense_span_hz, dense_points) with
    /// defaults: 7 GHz / 2001 plus a ±5 MHz / 401 dense window.
    pub fn scan_plan(&self) -> (f64, usize, f64, usize) {
        let s = self.scan.clone().unwrap_or_default();
        (
            s.span_mhz.unwrap_or(7000.0) * 1e6,
            s.points.unwrap_or(2001),
            s.dense_span_mhz.unwrap_or(10.0) * 1e6,
            s.dense_points.unwrap_or(401),
        )
    }
}

/// Parse a TOML config; unknown keys and malformed values are hard errors
/// with the parser's line/column diagnostics.
pub fn parse(text: &str) -> Result<ConfigFile> {
    toml::from_str(text).map_err(|e| SimError::config(format!("config parse: {e}")))
}

pub fn to_toml(cfg: &SystemConfig) -> Result<String> {
    toml::to_string_pretty(&cfg.file)
        .map_err(|e| SimError::config(format!("config serialize: {e}")))
}

struct LaserDefaults {
    enabled: bool,
    rabi_mhz: f64,
    wavelength_nm: f64,
    linewidth_mhz: f64,
}

const MHZ: f64 = 1e6 * TAU;

fn probe_defaults() -> LaserDefaults {
    LaserDefaults {
        enabled: true,
        rabi_mhz: OMEGA_PROBE / MHZ,
        wavelength_nm: LAMBDA_PROBE / 1e-9,
        linewidth_mhz: LINEWIDTH_PROBE / 1e6,
    }
}

fn strong_defaults() -> LaserDefaults {
    LaserDefaults {
        enabled: true,
        rabi_mhz: OMEGA_STRONG / MHZ,
        wavelength_nm: LAMBDA_STRONG / 1e-9,
        linewidth_mhz: LINEWIDTH_STRONG / 1e6,
    }
}

fn weak_defaults() -> LaserDefaults {
    LaserDefaults {
        enabled: true,
        rabi_mhz: OMEGA_WEAK / MHZ,
        wavelength_nm: LAMBDA_WEAK / 1e-9,
        linewidth_mhz: LINEWIDTH_WEAK / 1e6,
    }
}

fn repump_defaults() -> LaserDefaults {
    LaserDefaults {
        enabled: false,
        rabi_mhz: OMEGA_REPUMP / MHZ,
        wavelength_nm: LAMBDA_REPUMP / 1e-9,
        linewidth_mhz: LINEWIDTH_REPUMP / 1e6,
    }
}

fn expand_laser(section: Option<&LaserSection>, d: &LaserDefaults) -> LaserSection {
    let s = section.cloned().unwrap_or_default();
    LaserSection {
        enabled: Some(s.enabled.unwrap_or(d.enabled)),
        rabi_mhz: Some(s.rabi_mhz.unwrap_or(d.rabi_mhz)),
        detuning_mhz: Some(s.detuning_mhz.unwrap_or(0.0)),
        wavelength_nm: Some(s.wavelength_nm.unwrap_or(d.wavelength_nm)),
        linewidth_mhz: Some(s.linewidth_mhz.unwrap_or(d.linewidth_mhz)),
    }
}

/// Fill every absent field with its default so the emitted sidecar shows
/// the complete run configuration.
fn expand(file: &ConfigFile) -> ConfigFile {
    let lasers = file.lasers.clone().unwrap_or_default();
    let scheme = file.scheme.clone().unwrap_or_default();
    let cell = file.cell.clone().unwrap_or_default();
    let geometry = file.geometry.clone().unwrap_or_default();
    let pump = file.pump.clone().unwrap_or_default();
    let numerics = file.numerics.clone().unwrap_or_default();
    let scan = file.scan.clone().unwrap_or_default();
    ConfigFile {
        schema_version: Some(file.schema_version.unwrap_or(SCHEMA_VERSION)),
        scheme: Some(SchemeSection {
            levels: Some(scheme.levels.unwrap_or(4)),
            trap_decay_mhz: Some(scheme.trap_decay_mhz.unwrap_or(GAMMA_TRAP_DEFAULT / MHZ)),
        }),
        lasers: Some(LasersSection {
            probe: Some(expand_laser(lasers.probe.as_ref(), &probe_defaults())),
            strong: Some(expand_laser(lasers.strong.as_ref(), &strong_defaults())),
            weak: Some(expand_laser(lasers.weak.as_ref(), &weak_defaults())),
            repump: Some(expand_laser(lasers.repump.as_ref(), &repump_defaults())),
        }),
        cell: Some(CellSection {
            temperature_k: Some(cell.temperature_k.unwrap_or(CELL_TEMPERATURE)),
            path_length_mm: Some(cell.path_length_mm.unwrap_or(CELL_PATH_LENGTH / 1e-3)),
            beam_diameter_mm: Some(
                cell.beam_diameter_mm.unwrap_or(PROBE_BEAM_DIAMETER / 1e-3),
            ),
            atomic_mass_u: Some(cell.atomic_mass_u.unwrap_or(HG202_MASS_U)),
            reference_transmission: Some(
                cell.reference_transmission.unwrap_or(REFERENCE_TRANSMISSION),
            ),
            kappa_per_s: cell.kappa_per_s,
            transit_rate_per_s: cell.transit_rate_per_s,
        }),
        geometry: Some(GeometrySection {
            mode: Some(geometry.mode.unwrap_or_else(|| "doppler-free".into())),
            pump_angle_deg: Some(geometry.pump_angle_deg.unwrap_or(PUMP_ANGLE_DEG)),
            strong_offset_deg: Some(geometry.strong_offset_deg.unwrap_or(0.0)),
            weak_offset_deg: Some(geometry.weak_offset_deg.unwrap_or(0.0)),
        }),
        pump: Some(PumpSection {
            enabled: Some(pump.enabled.unwrap_or(false)),
            power_mw: Some(pump.power_mw.unwrap_or(40.0)),
            rate_mhz: pump.rate_mhz,
            spectral_fwhm_mhz: Some(
                pump.spectral_fwhm_mhz.unwrap_or(PUMP_SPECTRAL_FWHM / 1e6),
            ),
            detuning_mhz: Some(pump.detuning_mhz.unwrap_or(0.0)),
            lineshape: Some(pump.lineshape.unwrap_or_else(|| "lorentzian".into())),
            long_axis_mm: Some(pump.long_axis_mm.unwrap_or(PUMP_LONG_AXIS / 1e-3)),
            short_axis_mm: Some(pump.short_axis_mm.unwrap_or(PUMP_SHORT_AXIS / 1e-3)),
            rate_scale: Some(pump.rate_scale.unwrap_or(PUMP_RATE_SCALE)),
        }),
        numerics: Some(NumericsSection {
            quadrature_order: Some(numerics.quadrature_order.unwrap_or(16)),
            quadrature: Some(numerics.quadrature.unwrap_or_else(|| "adaptive".into())),
            solver_tol: Some(numerics.solver_tol.unwrap_or(1e-9)),
        }),
        scan: Some(ScanSection {
            span_mhz: Some(scan.span_mhz.unwrap_or(7000.0)),
            points: Some(scan.points.unwrap_or(2001)),
            dense_span_mhz: Some(scan.dense_span_mhz.unwrap_or(10.0)),
            dense_points: Some(scan.dense_points.unwrap_or(401)),
        }),
    }
}

fn build_laser(section: &LaserSection) -> Result<LaserField> {
    LaserField::new(
        C64::new(section.rabi_mhz.unwrap() * MHZ, 0.0),
        section.detuning_mhz.unwrap() * MHZ,
        [1.0, 0.0, 0.0],
        section.wavelength_nm.unwrap() * 1e-9,
        section.linewidth_mhz.unwrap() * 1e6,
        section.enabled.unwrap(),
    )
}

/// Resolve a (possibly sparse) config file into a validated `SystemConfig`.
/// When no explicit κ is given, the vapor density is calibrated so the
/// probe-only line-center transmission hits `reference_transmission`.
pub fn resolve(file: ConfigFile) -> Result<SystemConfig> {
    if let Some(v) = file.schema_version {
        if v != SCHEMA_VERSION {
            return Err(SimError::config(format!(
                "unsupported schema_version {v}; this build reads version {SCHEMA_VERSION}"
            )));
        }
    }
    let full = expand(&file);
    let lasers = full.lasers.as_ref().unwrap();
    let probe = build_laser(lasers.probe.as_ref().unwrap())?;
    let strong = build_laser(lasers.strong.as_ref().unwrap())?;
    let weak = build_laser(lasers.weak.as_ref().unwrap())?;
    let repump = build_laser(lasers.repump.as_ref().unwrap())?;

    let scheme_sec = full.scheme.as_ref().unwrap();
    let mut scheme = match scheme_sec.levels.unwrap() {
        4 => {
            if repump.enabled {
                return Err(SimError::config(
                    "a repump laser needs the 5-level scheme (set scheme.levels = 5)",
                ));
            }
            LevelScheme::four_level()
        }
        5 => LevelScheme::five_level(scheme_sec.trap_decay_mhz.unwrap() * MHZ, 0.0),
        n => {
            return Err(SimError::config(format!(
                "scheme.levels must be 4 or 5, got {n}"
            )))
        }
    };
    if scheme.trap_extension.is_some() {
        let rate = pump::repump_rate(&repump, &scheme)?;
        scheme.trap_extension.as_mut().unwrap().repump_rate = rate;
    }

    let geo_sec = full.geometry.as_ref().unwrap();
    let pump_angle = geo_sec.pump_angle_deg.unwrap().to_radians();
    let geometry = match geo_sec.mode.as_deref().unwrap() {
        "doppler-free" => BeamGeometry::doppler_free_with_offsets(
            probe.wavelength,
            strong.wavelength,
            weak.wavelength,
            pump_angle,
            geo_sec.strong_offset_deg.unwrap().to_radians(),
            geo_sec.weak_offset_deg.unwrap().to_radians(),
        )?,
        "collinear" => {
            let mut g =
                BeamGeometry::collinear(probe.wavelength, strong.wavelength, weak.wavelength);
            g.angle_pump = pump_angle;
            g
        }
        other => {
            return Err(SimError::config(format!(
                "geometry.mode must be \"doppler-free\" or \"collinear\", got \"{other}\""
            )))
        }
    };

    let pump_sec = full.pump.as_ref().unwrap();
    if file
        .pump
        .as_ref()
        .map_or(false, |p| p.power_mw.is_some() && p.rate_mhz.is_some())
    {
        return Err(SimError::config(
            "set either pump.power_mw or pump.rate_mhz, not both",
        ));
    }
    let strength = match pump_sec.rate_mhz {
        Some(r) => PumpStrength::Rate(r * MHZ),
        None => PumpStrength::Power(pump_sec.power_mw.unwrap() * 1e-3),
    };
    let lineshape = match pump_sec.lineshape.as_deref().unwrap() {
        "lorentzian" => PumpLineshape::Lorentzian,
        "gaussian" => PumpLineshape::Gaussian,
        other => {
            return Err(SimError::config(format!(
                "pump.lineshape must be \"lorentzian\" or \"gaussian\", got \"{other}\""
            )))
        }
    };
    let pump_model = PumpModel {
        enabled: pump_sec.enabled.unwrap(),
        strength,
        long_axis: pump_sec.long_axis_mm.unwrap() * 1e-3,
        short_axis: pump_sec.short_axis_mm.unwrap() * 1e-3,
        spectral_fwhm: pump_sec.spectral_fwhm_mhz.unwrap() * 1e6,
        detuning: pump_sec.detuning_mhz.unwrap() * MHZ,
        lineshape,
        rate_scale: pump_sec.rate_scale.unwrap(),
        wavelength: probe.wavelength,
    };

    let cell_sec = full.cell.as_ref().unwrap();
    let cell = CellModel {
        atom_temperature: cell_sec.temperature_k.unwrap(),
        path_length: cell_sec.path_length_mm.unwrap() * 1e-3,
        atomic_mass: cell_sec.atomic_mass_u.unwrap() * AMU,
        kappa: cell_sec.kappa_per_s.unwrap_or(KAPPA_BASE),
        reference_transmission_target: cell_sec.reference_transmission.unwrap(),
        beam_diameter: cell_sec.beam_diameter_mm.unwrap() * 1e-3,
        transit_override: cell_sec.transit_rate_per_s,
    };

    let num_sec = full.numerics.as_ref().unwrap();
    let quadrature = match num_sec.quadrature.as_deref().unwrap() {
        "adaptive" => QuadratureMode::Adaptive,
        "product" => QuadratureMode::Product,
        other => {
            return Err(SimError::config(format!(
                "numerics.quadrature must be \"adaptive\" or \"product\", got \"{other}\""
            )))
        }
    };
    let numerics = Numerics {
        quadrature_order: num_sec.quadrature_order.unwrap(),
        quadrature,
        solver_tol: num_sec.solver_tol.unwrap(),
    };

    let mut cfg = SystemConfig {
        scheme,
        probe,
        strong,
        weak,
        repump,
        pump: pump_model,
        cell,
        geometry,
        numerics,
        file: full,
    };
    cfg.validate()?;
    if cfg.file.cell.as_ref().unwrap().kappa_per_s.is_none() {
        let target = cfg.cell.reference_transmission_target;
        let kappa = crate::spectra::calibrate_density(&cfg, target)?;
        cfg.cell.kappa = kappa;
        cfg.file.cell.as_mut().unwrap().kappa_per_s = Some(kappa);
    }
    Ok(cfg)
}

/// Named measurement configurations: the four enable masks of the
/// experiment's summary table on the 5-level scheme, the bare 4-level
/// ladder, and the pumped gain scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    FourLevelBase,
    A,
    B,
    C,
    D,
    Awi,
}

impl std::str::FromStr for Scenario {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "base" | "four-level" | "4level" => Ok(Scenario::FourLevelBase),
            "a" => Ok(Scenario::A),
            "b" => Ok(Scenario::B),
            "c" => Ok(Scenario::C),
            "d" => Ok(Scenario::D),
            "awi" => Ok(Scenario::Awi),
            other => Err(SimError::config(format!(
                "unknown preset \"{other}\"; expected base, a, b, c, d or awi"
            ))),
        }
    }
}

fn laser_mask(enabled: bool) -> LaserSection {
    LaserSection {
        enabled: Some(enabled),
        ..Default::default()
    }
}

fn preset_file(scenario: Scenario) -> ConfigFile {
    let mut file = ConfigFile {
        schema_version: Some(SCHEMA_VERSION),
        ..Default::default()
    };
    let five = |strong: bool, weak: bool, repump: bool| -> ConfigFile {
        let mut f = file.clone();
        f.scheme = Some(SchemeSection {
            levels: Some(5),
            trap_decay_mhz: None,
        });
        f.lasers = Some(LasersSection {
            probe: Some(laser_mask(true)),
            strong: Some(laser_mask(strong)),
            weak: Some(laser_mask(weak)),
            repump: Some(laser_mask(repump)),
        });
        f
    };
    match scenario {
        Scenario::FourLevelBase => {
            file.scheme = Some(SchemeSection {
                levels: Some(4),
                trap_decay_mhz: None,
            });
            file.lasers = Some(LasersSection {
                probe: Some(laser_mask(true)),
                strong: Some(laser_mask(true)),
                weak: Some(laser_mask(true)),
                repump: Some(laser_mask(false)),
            });
            file
        }
        Scenario::A => five(false, false, false),
        Scenario::B => five(true, false, true),
        Scenario::C => five(true, true, false),
        Scenario::D => five(true, true, true),
        Scenario::Awi => {
            let mut f = five(true, true, true);
            // Weak probe (15 µW) and the reference pump drive.
            f.lasers.as_mut().unwrap().probe.as_mut().unwrap().rabi_mhz =
                Some(OMEGA_PROBE_LOW / MHZ);
            f.pump = Some(PumpSection {
                enabled: Some(true),
                power_mw: Some(40.0),
                spectral_fwhm_mhz: Some(0.5),
                ..Default::default()
            });
            f
        }
    }
}

pub fn preset(scenario: Scenario) -> SystemConfig {
    resolve(preset_file(scenario)).expect("built-in preset must resolve")
}

impl SystemConfig {
    fn file_pump(&mut self) -> &mut PumpSection {
        self.file.pump.get_or_insert_with(Default::default)
    }

    fn file_laser(&mut self, pick: fn(&mut LasersSection) -> &mut Option<LaserSection>) -> &mut LaserSection {
        let lasers = self.file.lasers.get_or_insert_with(Default::default);
        pick(lasers).get_or_insert_with(Default::default)
    }

    /// Pump drive specified as optical power; 0 W disables the pump.
    pub fn with_pump_power(&self, watts: f64) -> Self {
        let mut cfg = self.clone();
        cfg.pump.strength = PumpStrength::Power(watts);
        cfg.pump.enabled = watts > 0.0;
        let section = cfg.file_pump();
        section.power_mw = Some(watts / 1e-3);
        section.rate_mhz = None;
        section.enabled = Some(watts > 0.0);
        cfg
    }

    /// Pump drive specified directly as an on-resonance rate (rad/s-free
    /// 1/s; pass 2π·10 MHz as `TAU * 10e6`).
    pub fn with_pump_rate(&self, rate: f64) -> Self {
        let mut cfg = self.clone();
        cfg.pump.strength = PumpStrength::Rate(rate);
        cfg.pump.enabled = rate > 0.0;
        let section = cfg.file_pump();
        section.rate_mhz = Some(rate / MHZ);
        section.power_mw = None;
        section.enabled = Some(rate > 0.0);
        cfg
    }

    pub fn with_pump_width(&self, fwhm_hz: f64) -> Self {
        let mut cfg = self.clone();
        cfg.pump.spectral_fwhm = fwhm_hz;
        cfg.file_pump().spectral_fwhm_mhz = Some(fwhm_hz / 1e6);
        cfg
    }

    pub fn with_strong_detuning(&self, detuning: f64) -> Self {
        let mut cfg = self.clone();
        cfg.strong.detuning = detuning;
        cfg.file_laser(|l| &mut l.strong).detuning_mhz = Some(detuning / MHZ);
        cfg
    }

    pub fn with_weak_detuning(&self, detuning: f64) -> Self {
        let mut cfg = self.clone();
        cfg.weak.detuning = detuning;
        cfg.file_laser(|l| &mut l.weak).detuning_mhz = Some(detuning / MHZ);
        cfg
    }

    /// Change the vapor temperature without re-calibrating κ (the density
    /// anchor stays whatever the file established).
    pub fn with_temperature(&self, kelvin: f64) -> Self {
        let mut cfg = self.clone();
        cfg.cell.atom_temperature = kelvin;
        let cell = cfg.file.cell.get_or_insert_with(Default::default);
        cell.temperature_k = Some(kelvin);
        cfg
    }
}
