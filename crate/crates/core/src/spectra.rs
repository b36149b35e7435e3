//! Transmission spectra, density calibration, Lorentzian peak fitting, and
//! the pump power/width sweep.

use crate::atom::SystemConfig;
use crate::average::Averager;
use crate::constants::TAU;
use crate::error::{Result, SimError};
use crate::linalg::C64;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use std::fmt::Write as _;

/// Dilute-medium Beer-Lambert transmission over one pass of the cell.
pub fn transmission(chi_imag: f64, lambda_probe: f64, path_length: f64) -> f64 {
    (-(TAU / lambda_probe) * chi_imag * path_length).exp()
}

#[derive(Debug, Clone, Copy)]
pub struct SpectrumRow {
    /// Probe detuning as an ordinary frequency, Hz.
    pub detuning_hz: f64,
    pub t_probe: f64,
    pub t_ref: f64,
    pub chi: C64,
}

impl SpectrumRow {
    pub fn diff(&self) -> f64 {
        self.t_probe - self.t_ref
    }
}

#[derive(Debug, Clone)]
pub struct Spectrum {
    pub rows: Vec<SpectrumRow>,
    pub config: SystemConfig,
}

pub const CSV_HEADER: &str = "detuning_hz, t_probe, t_ref, diff, chi_re, chi_im";

impl Spectrum {
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.rows.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            writeln!(
                out,
                "{}, {}, {}, {}, {}, {}",
                r.detuning_hz,
                r.t_probe,
                r.t_ref,
                r.diff(),
                r.chi.re,
                r.chi.im
            )
            .expect("writing to a String cannot fail");
        }
        out
    }

    /// Largest probe transmission in the scan (gain shows up as > 1).
    pub fn max_transmission(&self) -> f64 {
        self.rows.iter().fold(f64::NEG_INFINITY, |m, r| m.max(r.t_probe))
    }

    /// Rows restricted to |ν − center| ≤ window/2 (Hz).
    pub fn windowed(&self, center_hz: f64, window_hz: f64) -> Vec<(f64, f64)> {
        self.rows
            .iter()
            .filter(|r| (r.detuning_hz - center_hz).abs() <= 0.5 * window_hz)
            .map(|r| (r.detuning_hz, r.diff()))
            .collect()
    }
}

/// `points` detunings (rad/s) uniformly covering ±span/2 around zero, given
/// the full span in Hz.
pub fn symmetric_grid(span_hz: f64, points: usize) -> Vec<f64> {
    if points == 0 {
        return Vec::new();
    }
    if points == 1 {
        return vec![0.0];
    }
    let half = 0.5 * span_hz * TAU;
    (0..points)
        .map(|k| -half + 2.0 * half * k as f64 / (points - 1) as f64)
        .collect()
}

/// Union of detuning grids, sorted strictly increasing.
pub fn merged_grid(grids: &[Vec<f64>]) -> Vec<f64> {
    let mut all: Vec<f64> = grids.iter().flatten().copied().collect();
    all.sort_by(f64::total_cmp);
    all.dedup();
    all
}

/// Full two-arm spectrum: probe arm with every enabled beam, reference arm
/// with the probe alone. Points run in parallel; assembly order is fixed by
/// the input grid, so the output does not depend on the thread count.
pub fn scan(cfg: &SystemConfig, detunings: &[f64]) -> Result<Spectrum> {
    if detunings.len() < 2 {
        return Err(SimError::domain("a scan needs at least 2 detuning points"));
    }
    let grid = merged_grid(&[detunings.to_vec()]);
    let probe_arm = Averager::new(cfg)?;
    let ref_arm = Averager::new(&cfg.reference_arm())?;
    let lambda = cfg.probe.wavelength;
    let path = cfg.cell.path_length;
    let rows: Result<Vec<SpectrumRow>> = grid
        .par_iter()
        .map(|&dp| {
            let chi = probe_arm.chi(dp)?.chi;
            let chi_ref = ref_arm.chi(dp)?.chi;
            Ok(SpectrumRow {
                detuning_hz: dp / TAU,
                t_probe: transmission(chi.im, lambda, path),
                t_ref: transmission(chi_ref.im, lambda, path),
                chi,
            })
        })
        .collect();
    Ok(Spectrum {
        rows: rows?,
        config: cfg.clone(),
    })
}

/// κ that makes the Doppler-averaged, probe-only, line-center transmission
/// equal `target_t`. χ'' is linear in κ, so one reference evaluation and a
/// division solve it exactly.
pub fn calibrate_density(cfg: &SystemConfig, target_t: f64) -> Result<f64> {
    if !(target_t > 0.0 && target_t < 1.0) {
        return Err(SimError::domain(format!(
            "reference transmission target {target_t} must lie strictly in (0, 1)"
        )));
    }
    let reference = cfg.reference_arm();
    let chi0 = Averager::new(&reference)?.chi(0.0)?.chi;
    let optical_depth = TAU / cfg.probe.wavelength * chi0.im * cfg.cell.path_length;
    if !(optical_depth > 0.0) {
        return Err(SimError::domain(
            "reference arm shows no absorption at line center; cannot calibrate κ",
        ));
    }
    Ok(cfg.cell.kappa * (-target_t.ln()) / optical_depth)
}

#[derive(Debug, Clone, Copy)]
pub struct FitResult {
    /// Signed peak amplitude above the linear baseline.
    pub amplitude: f64,
    pub center_hz: f64,
    pub fwhm_hz: f64,
    /// Baseline value at the window center.
    pub offset: f64,
    /// Baseline slope per Hz.
    pub slope: f64,
    pub residual_rms: f64,
    pub iterations: usize,
}

/// Damped Gauss-Newton fit of A·(Γ/2)²/((x−c)² + (Γ/2)²) + a₀ + a₁·x to
/// (x, y) samples. Initialization is deterministic: the center seeds at the
/// extremum of y minus the edge-to-edge line, the width at half the window.
pub fn lorentzian_fit(samples: &[(f64, f64)]) -> Result<FitResult> {
    if samples.len() < 10 {
        return Err(SimError::domain(
            "Lorentzian fit needs at least 10 samples in the window",
        ));
    }
    let mut data = samples.to_vec();
    data.sort_by(|p, q| p.0.total_cmp(&q.0));
    let n = data.len();
    let (x0, y0) = data[0];
    let (x1, y1) = data[n - 1];
    let span = (x1 - x0).abs();
    if span <= 0.0 {
        return Err(SimError::domain("fit window has zero width"));
    }
    let mid = 0.5 * (x0 + x1);
    // Work in scaled coordinates u = (x − mid)/span for conditioning.
    let xs: Vec<f64> = data.iter().map(|&(x, _)| (x - mid) / span).collect();
    let ys: Vec<f64> = data.iter().map(|&(_, y)| y).collect();

    // Deterministic initialization from the edge line.
    let slope0 = if x1 != x0 { (y1 - y0) / (x1 - x0) } else { 0.0 };
    let line = |x: f64| y0 + slope0 * (x - x0);
    let mut best_k = 0;
    let mut best_dev = 0.0;
    for (k, &(x, y)) in data.iter().enumerate() {
        let dev = (y - line(x)).abs();
        if dev > best_dev {
            best_dev = dev;
            best_k = k;
        }
    }
    let c0 = xs[best_k];
    // Baseline in scaled coordinates: y ≈ t3 + t4·u from the window edges.
    let a0_init = y0 + slope0 * (mid - x0);
    // Parameters θ = [A, c, w, a0, a1] in scaled units; w is the HWHM.
    let mut theta = [0.0, c0, 0.25, a0_init, slope0 * span];
    theta[0] = ys[best_k] - (theta[3] + theta[4] * c0);

    let model = |t: &[f64; 5], u: f64| -> f64 {
        let w2 = t[2] * t[2];
        let d = (u - t[1]) * (u - t[1]) + w2;
        t[3] + t[4] * u + t[0] * w2 / d
    };
    let cost = |t: &[f64; 5]| -> f64 {
        xs.iter()
            .zip(&ys)
            .map(|(&u, &y)| {
                let r = y - model(t, u);
                r * r
            })
            .sum()
    };

    let mut lambda = 1e-3;
    let mut current = cost(&theta);
    let mut iterations = 0;
    let max_iter = 200;
    while iterations < max_iter {
        iterations += 1;
        // Jacobian of the residuals r = y − m(θ).
        let mut jtj = DMatrix::<f64>::zeros(5, 5);
        let mut jtr = DVector::<f64>::zeros(5);
        for (&u, &y) in xs.iter().zip(&ys) {
            let w = theta[2];
            let w2 = w * w;
            let du = u - theta[1];
            let d = du * du + w2;
            let r = y - model(&theta, u);
            let g = [
                w2 / d,
                theta[0] * w2 * 2.0 * du / (d * d),
                2.0 * theta[0] * w * du * du / (d * d),
                1.0,
                u,
            ];
            for i in 0..5 {
                jtr[i] += g[i] * r;
                for j in 0..5 {
                    jtj[(i, j)] += g[i] * g[j];
                }
            }
        }
        let mut damped = jtj.clone();
        for i in 0..5 {
            damped[(i, i)] += lambda * (jtj[(i, i)].abs() + 1e-12);
        }
        let step = match damped.lu().solve(&jtr) {
            Some(s) => s,
            None => {
                lambda *= 10.0;
                continue;
            }
        };
        let mut trial = theta;
        for i in 0..5 {
            trial[i] += step[i];
        }
        let trial_cost = cost(&trial);
        if trial_cost.is_finite() && trial_cost < current {
            let rel_step = step.amax()
                / theta
                    .iter()
                    .map(|t| t.abs())
                    .fold(1e-12, f64::max);
            let rel_drop = (current - trial_cost) / current.max(1e-300);
            theta = trial;
            current = trial_cost;
            lambda = (lambda * 0.3).max(1e-12);
            if rel_step < 1e-12 || rel_drop < 1e-14 {
                break;
            }
        } else {
            lambda *= 10.0;
            if lambda > 1e12 {
                break;
            }
        }
    }

    let fwhm = 2.0 * theta[2].abs() * span;
    let center = mid + theta[1] * span;
    let rms = (current / n as f64).sqrt();
    if !theta.iter().all(|t| t.is_finite()) || !(fwhm > 0.0) {
        return Err(SimError::FitFailed {
            iterations,
            residual: rms,
            center,
            fwhm,
        });
    }
    Ok(FitResult {
        amplitude: theta[0],
        center_hz: center,
        fwhm_hz: fwhm,
        offset: theta[3],
        slope: theta[4] / span,
        residual_rms: rms,
        iterations,
    })
}

/// Fit the difference signal inside a window of the spectrum.
pub fn fit_spectrum_peak(
    spectrum: &Spectrum,
    center_hz: f64,
    window_hz: f64,
) -> Result<FitResult> {
    lorentzian_fit(&spectrum.windowed(center_hz, window_hz))
}

#[derive(Debug, Clone, Copy)]
pub struct AwiCell {
    pub power_w: f64,
    pub fwhm_hz: f64,
    pub max_transmission: f64,
    /// Amplification without inversion: gain of the probe, T > 1.
    pub awi: bool,
}

/// Max transmission of the three-photon peak over a pump power × spectral
/// width grid, scanning ±span/2 around zero each time.
pub fn awi_sweep(
    cfg: &SystemConfig,
    powers_w: &[f64],
    widths_hz: &[f64],
    span_hz: f64,
    points: usize,
) -> Result<Vec<AwiCell>> {
    if powers_w.is_empty() || widths_hz.is_empty() {
        return Err(SimError::domain(
            "pump sweep needs at least one power and one width",
        ));
    }
    let grid = symmetric_grid(span_hz, points);
    let mut cells = Vec::with_capacity(powers_w.len() * widths_hz.len());
    for &p in powers_w {
        for &w in widths_hz {
            let run = cfg.with_pump_power(p).with_pump_width(w);
            let spectrum = scan(&run, &grid)?;
            let max_t = spectrum.max_transmission();
            cells.push(AwiCell {
                power_w: p,
                fwhm_hz: w,
                max_transmission: max_t,
                awi: max_t > 1.0,
            });
        }
    }
    Ok(cells)
}

pub fn awi_csv(cells: &[AwiCell]) -> String {
    let mut out = String::from("power_w, fwhm_hz, max_transmission, awi\n");
    for c in cells {
        writeln!(
            out,
            "{}, {}, {}, {}",
            c.power_w, c.fwhm_hz, c.max_transmission, c.awi
        )
        .expect("writing to a String cannot fail");
    }
    out
}

/// Parse a spectrum CSV produced by `Spectrum::to_csv` back into
/// (detuning_hz, t_probe, t_ref, diff) tuples.
pub fn parse_spectrum_csv(text: &str) -> Result<Vec<(f64, f64, f64, f64)>> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| SimError::config("empty spectrum CSV"))?;
    let columns: Vec<&str> = header.split(',').map(str::trim).collect();
    let col = |name: &str| -> Result<usize> {
        columns
            .iter()
            .position(|c| *c == name)
            .ok_or_else(|| SimError::config(format!("CSV is missing a `{name}` column")))
    };
    let (ci, ti, ri, di) = (col("detuning_hz")?, col("t_probe")?, col("t_ref")?, col("diff")?);
    let mut rows = Vec::new();
    for (k, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let need = ci.max(ti).max(ri).max(di);
        if fields.len() <= need {
            return Err(SimError::config(format!(
                "CSV row {} has {} fields, expected at least {}",
                k + 2,
                fields.len(),
                need + 1
            )));
        }
        let parse = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|e| SimError::config(format!("CSV row {}: {e}", k + 2)))
        };
        rows.push((
            parse(fields[ci])?,
            parse(fields[ti])?,
            parse(fields[ri])?,
            parse(fields[di])?,
        ));
    }
    Ok(rows)
}
