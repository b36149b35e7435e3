//! Command-line front end: beam angles, spectrum scans, single-point
//! susceptibilities, pump sweeps, and peak fits.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use hg3ph::atom::SystemConfig;
use hg3ph::average::Averager;
use hg3ph::config::{self, preset, Scenario, ScanSection};
use hg3ph::constants::{LAMBDA_PROBE, LAMBDA_STRONG, LAMBDA_WEAK, PUMP_ANGLE_DEG, TAU};
use hg3ph::doppler::{doppler_free_angles, BeamGeometry};
use hg3ph::error::SimError;
use hg3ph::spectra::{
    self, lorentzian_fit, merged_grid, parse_spectrum_csv, symmetric_grid, transmission,
};

#[derive(Parser)]
#[command(name = "hg3ph", version, about = "Three-photon coherence in thermal Hg vapor")]
struct Cli {
    /// Worker threads for scan points (default: all cores). The output is
    /// identical for any thread count.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Beam angles closing the wave-vector triangle k_p + k_s = k_w.
    Angles(AnglesArgs),
    /// Scan the probe spectrum to CSV, with a resolved-config sidecar.
    Scan(ScanArgs),
    /// Evaluate the susceptibility at a single probe detuning.
    Chi(ChiArgs),
    /// Peak-transmission sweep over pump power × spectral width.
    Awi(AwiArgs),
    /// Fit a Lorentzian plus linear baseline to a spectrum CSV.
    Fit(FitArgs),
}

#[derive(Args)]
struct AnglesArgs {
    /// Probe wavelength, nm.
    #[arg(long, default_value_t = LAMBDA_PROBE * 1e9)]
    lambda_probe: f64,
    /// Strong-beam wavelength, nm.
    #[arg(long, default_value_t = LAMBDA_STRONG * 1e9)]
    lambda_strong: f64,
    /// Weak-beam wavelength, nm.
    #[arg(long, default_value_t = LAMBDA_WEAK * 1e9)]
    lambda_weak: f64,
}

#[derive(Args)]
struct ConfigArgs {
    /// Built-in preset: base, a, b, c, d, or awi.
    #[arg(long, conflicts_with = "config")]
    preset: Option<Scenario>,
    /// TOML config file (see README for the format).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Strong-beam detuning, MHz.
    #[arg(long)]
    detune_strong: Option<f64>,
    /// Weak-beam detuning, MHz.
    #[arg(long)]
    detune_weak: Option<f64>,
    /// Pump power, mW (0 disables the pump).
    #[arg(long)]
    pump_power: Option<f64>,
    /// Pump spectral width (FWHM), MHz.
    #[arg(long)]
    pump_width: Option<f64>,
    /// On-resonance pump rate over 2π, MHz (overrides --pump-power).
    #[arg(long)]
    pump_rate: Option<f64>,
    /// Vapor temperature, K.
    #[arg(long)]
    temperature: Option<f64>,
}

impl ConfigArgs {
    fn build(&self) -> Result<SystemConfig> {
        let mut cfg = match (&self.preset, &self.config) {
            (Some(scenario), None) => preset(*scenario),
            (None, Some(path)) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading {}", path.display()))?;
                config::resolve(config::parse(&text)?)?
            }
            _ => preset(Scenario::D),
        };
        if let Some(mhz) = self.detune_strong {
            cfg = cfg.with_strong_detuning(TAU * mhz * 1e6);
        }
        if let Some(mhz) = self.detune_weak {
            cfg = cfg.with_weak_detuning(TAU * mhz * 1e6);
        }
        if let Some(mw) = self.pump_power {
            cfg = cfg.with_pump_power(mw * 1e-3);
        }
        if let Some(mhz) = self.pump_rate {
            cfg = cfg.with_pump_rate(TAU * mhz * 1e6);
        }
        if let Some(mhz) = self.pump_width {
            cfg = cfg.with_pump_width(mhz * 1e6);
        }
        if let Some(kelvin) = self.temperature {
            cfg = cfg.with_temperature(kelvin);
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct ScanArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Output CSV path; the resolved config lands next to it as
    /// <stem>.config.toml.
    #[arg(long, short, default_value = "spectrum.csv")]
    out: PathBuf,
    /// Full scan span, MHz.
    #[arg(long)]
    span: Option<f64>,
    /// Points across the full span.
    #[arg(long)]
    points: Option<usize>,
    /// Dense window span around zero, MHz.
    #[arg(long)]
    dense_span: Option<f64>,
    /// Points across the dense window.
    #[arg(long)]
    dense_points: Option<usize>,
}

#[derive(Args)]
struct ChiArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Probe detuning, MHz.
    #[arg(long, default_value_t = 0.0)]
    detuning: f64,
}

#[derive(Args)]
struct AwiArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Pump powers to sweep, mW (comma-separated).
    #[arg(long, value_delimiter = ',', default_value = "10,20,40,100")]
    powers: Vec<f64>,
    /// Pump spectral widths to sweep, MHz (comma-separated).
    #[arg(long, value_delimiter = ',', default_value = "0.5,10,100")]
    widths: Vec<f64>,
    /// Scan span around line center for each cell, MHz.
    #[arg(long, default_value_t = 5.0)]
    span: f64,
    /// Scan points per cell.
    #[arg(long, default_value_t = 41)]
    points: usize,
    /// Optional CSV output path (stdout otherwise).
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    /// Spectrum CSV produced by `scan`.
    input: PathBuf,
    /// Column to fit: diff or t_probe.
    #[arg(long, default_value = "diff")]
    column: String,
    /// Window center, MHz.
    #[arg(long, default_value_t = 0.0)]
    center: f64,
    /// Window width, MHz.
    #[arg(long, default_value_t = 4.0)]
    window: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        // Ignore the error if a pool already exists (repeated init in-process).
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            if err.downcast_ref::<SimError>().is_some() {
                ExitCode::from(3)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Angles(args) => angles(args),
        Command::Scan(args) => scan(args),
        Command::Chi(args) => chi(args),
        Command::Awi(args) => awi(args),
        Command::Fit(args) => fit(args),
    }
}

fn angles(args: AnglesArgs) -> Result<()> {
    let (lp, ls, lw) = (
        args.lambda_probe * 1e-9,
        args.lambda_strong * 1e-9,
        args.lambda_weak * 1e-9,
    );
    let (theta_s, theta_w) = doppler_free_angles(lp, ls, lw)?;
    let geometry = BeamGeometry::doppler_free(lp, ls, lw, PUMP_ANGLE_DEG.to_radians())?;
    println!("strong beam angle: {:.4} deg", theta_s.to_degrees());
    println!("weak beam angle:   {:.4} deg", theta_w.to_degrees());
    println!(
        "closure residual:  {:.3e} m^-1 of {:.6e} m^-1",
        geometry.closure_residual(),
        TAU / lw
    );
    Ok(())
}

fn sidecar_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().unwrap_or_default().to_string_lossy();
    out.with_file_name(format!("{stem}.config.toml"))
}

fn scan(args: ScanArgs) -> Result<()> {
    let mut cfg = args.config.build()?;
    let (mut span, mut points, mut dense_span, mut dense_points) = cfg.file.scan_plan();
    if let Some(mhz) = args.span {
        span = mhz * 1e6;
    }
    if let Some(n) = args.points {
        points = n;
    }
    if let Some(mhz) = args.dense_span {
        dense_span = mhz * 1e6;
    }
    if let Some(n) = args.dense_points {
        dense_points = n;
    }
    // Record the effective plan so the sidecar reproduces this run exactly.
    cfg.file.scan = Some(ScanSection {
        span_mhz: Some(span / 1e6),
        points: Some(points),
        dense_span_mhz: Some(dense_span / 1e6),
        dense_points: Some(dense_points),
    });
    let grid = merged_grid(&[
        symmetric_grid(span, points),
        symmetric_grid(dense_span, dense_points),
    ]);
    let spectrum = spectra::scan(&cfg, &grid)?;
    std::fs::write(&args.out, spectrum.to_csv())
        .with_context(|| format!("writing {}", args.out.display()))?;
    let sidecar = sidecar_path(&args.out);
    std::fs::write(&sidecar, config::to_toml(&spectrum.config)?)
        .with_context(|| format!("writing {}", sidecar.display()))?;
    println!(
        "wrote {} rows to {} (config: {})",
        spectrum.rows.len(),
        args.out.display(),
        sidecar.display()
    );
    println!("max transmission: {:.6}", spectrum.max_transmission());
    Ok(())
}

fn chi(args: ChiArgs) -> Result<()> {
    let cfg = args.config.build()?;
    let delta_p = TAU * args.detuning * 1e6;
    let probe_arm = Averager::new(&cfg)?;
    let ref_arm = Averager::new(&cfg.reference_arm())?;
    let chi = probe_arm.chi(delta_p)?.chi;
    let chi_ref = ref_arm.chi(delta_p)?.chi;
    let (lambda, path) = (cfg.probe.wavelength, cfg.cell.path_length);
    println!("detuning_hz: {}", args.detuning * 1e6);
    println!("chi_re: {:e}", chi.re);
    println!("chi_im: {:e}", chi.im);
    println!("t_probe: {}", transmission(chi.im, lambda, path));
    println!("t_ref: {}", transmission(chi_ref.im, lambda, path));
    Ok(())
}

fn awi(args: AwiArgs) -> Result<()> {
    let cfg = args.config.build()?;
    let powers: Vec<f64> = args.powers.iter().map(|p| p * 1e-3).collect();
    let widths: Vec<f64> = args.widths.iter().map(|w| w * 1e6).collect();
    let cells = spectra::awi_sweep(&cfg, &powers, &widths, args.span * 1e6, args.points)?;
    let csv = spectra::awi_csv(&cells);
    match &args.out {
        Some(path) => {
            std::fs::write(path, csv).with_context(|| format!("writing {}", path.display()))?
        }
        None => print!("{csv}"),
    }
    Ok(())
}

fn fit(args: FitArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.input)
        .with_context(|| format!("reading {}", args.input.display()))?;
    let rows = parse_spectrum_csv(&text)?;
    let center = args.center * 1e6;
    let window = args.window * 1e6;
    let samples: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| (r.0 - center).abs() <= 0.5 * window)
        .map(|r| match args.column.as_str() {
            "t_probe" => Ok((r.0, r.1)),
            "diff" => Ok((r.0, r.3)),
            other => Err(anyhow::anyhow!(
                "unknown fit column \"{other}\"; expected diff or t_probe"
            )),
        })
        .collect::<Result<_>>()?;
    let fit = lorentzian_fit(&samples)?;
    println!(
        "peak: center {:+.4} MHz, FWHM {:.4} MHz, amplitude {:+.4e}",
        fit.center_hz / 1e6,
        fit.fwhm_hz / 1e6,
        fit.amplitude
    );
    println!(
        "FIT: center_hz={:e} fwhm_hz={:e} amplitude={:e} offset={:e} slope={:e} rms={:e} iters={}",
        fit.center_hz,
        fit.fwhm_hz,
        fit.amplitude,
        fit.offset,
        fit.slope,
        fit.residual_rms,
        fit.iterations
    );
    Ok(())
}
