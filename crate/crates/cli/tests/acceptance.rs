//! End-to-end acceptance run. Each criterion prints one
//! `CRITERION n <label> ... PASS|FAIL` line; the test panics only after all
//! ten have run so a single invocation always reports the full list. Use
//! `cargo test --test acceptance -- --nocapture` to see the lines on success.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::Instant;

use hg3ph::atom::{saturation_parameter, LaserField, LevelScheme, QuadratureMode};
use hg3ph::bloch::{hamiltonian, laser_dephasing, liouvillian};
use hg3ph::config::{preset, Scenario};
use hg3ph::constants::{
    AMU, GAMMA_12, GAMMA_23, GAMMA_34, KAPPA_BASE, LAMBDA_PROBE, LAMBDA_STRONG, LAMBDA_WEAK,
    PROBE_BEAM_DIAMETER, PUMP_ANGLE_DEG, TAU,
};
use hg3ph::doppler::{doppler_free_angles, doppler_width, most_probable_speed, BeamGeometry};
use hg3ph::linalg::C64;
use hg3ph::spectra::{fit_spectrum_peak, merged_grid, scan, symmetric_grid, Spectrum};
use hg3ph::{chi_analytic, chi_numeric, SystemConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn spectrum(cfg: &SystemConfig, grid: &[f64]) -> Result<Spectrum, String> {
    scan(cfg, grid).map_err(|e| format!("scan failed: {e}"))
}

/// Difference signal at the grid point closest to `hz`.
fn diff_at(spec: &Spectrum, hz: f64) -> f64 {
    spec.rows
        .iter()
        .min_by(|p, q| (p.detuning_hz - hz).abs().total_cmp(&(q.detuning_hz - hz).abs()))
        .expect("spectrum has rows")
        .diff()
}

/// Peak probe transmission over a symmetric scan, refined by a log-parabola
/// through the sampled maximum and its neighbours.
fn peak_transmission(cfg: &SystemConfig, span_hz: f64, points: usize) -> Result<f64, String> {
    let spec = spectrum(cfg, &symmetric_grid(span_hz, points))?;
    let t: Vec<f64> = spec.rows.iter().map(|r| r.t_probe).collect();
    let k = t.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map(|(k, _)| k).unwrap();
    if k == 0 || k + 1 == t.len() || t[k - 1] <= 0.0 || t[k] <= 0.0 || t[k + 1] <= 0.0 {
        return Ok(t[k]);
    }
    let (y0, y1, y2) = (t[k - 1].ln(), t[k].ln(), t[k + 1].ln());
    let a = 0.5 * (y0 + y2) - y1;
    let b = 0.5 * (y2 - y0);
    if a >= 0.0 {
        return Ok(t[k]);
    }
    let u = (-b / (2.0 * a)).clamp(-1.0, 1.0);
    Ok((y1 + (b + a * u) * u).exp())
}

/// Simulated spectrum of scenario (d) on the dense grid, Lorentzian-fitted
/// peak width within 704 kHz ± 15%, under the stated runtime budget.
fn criterion_1() -> Outcome {
    let started = Instant::now();
    let mut cfg = preset(Scenario::D);
    cfg.numerics.quadrature = QuadratureMode::Product;
    cfg.numerics.quadrature_order = 16;
    let spec = spectrum(&cfg, &symmetric_grid(10e6, 401))?;
    let fit = fit_spectrum_peak(&spec, 0.0, 5e6).map_err(|e| format!("fit failed: {e}"))?;
    let khz = fit.fwhm_hz / 1e3;
    let elapsed = started.elapsed().as_secs_f64();
    let detail = format!("fwhm {khz:.1} kHz vs 704 kHz +/-15%, {elapsed:.0} s");
    if (598.4..=809.6).contains(&khz) && elapsed <= 300.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Full nonlinear steady state at Omega_p/Omega_s = 1e-3 against the closed
/// weak-probe form over 100 operating points. The grid keeps a few MHz clear
/// of the exact three-photon revival and of the dressed resonances: there the
/// expansion parameter is (Omega_p/linewidth)^2 regardless of the coupling,
/// so no finite probe reaches the linear-response limit.
fn criterion_2() -> Outcome {
    let scheme = LevelScheme::four_level();
    let mut rng = ChaCha8Rng::seed_from_u64(20260814);
    let mut worst = 0.0f64;
    let mut accepted = 0usize;
    while accepted < 100 {
        let os_mag = TAU * rng.gen_range(15e6..35e6);
        let ow_mag = TAU * rng.gen_range(0.5e6..6e6);
        let os = C64::from_polar(os_mag, rng.gen_range(-PI..PI));
        let ow = C64::from_polar(ow_mag, rng.gen_range(-PI..PI));
        let dp = TAU * rng.gen_range(-40e6..40e6);
        let ds = TAU * rng.gen_range(-60e6..60e6);
        let dw = TAU * rng.gen_range(-60e6..60e6);
        if (dp + ds - dw).abs() < TAU * 3e6 {
            continue;
        }
        let disc = (ds * ds + 4.0 * os_mag * os_mag).sqrt();
        if [0.5 * (-ds + disc), 0.5 * (-ds - disc)]
            .iter()
            .any(|&pole| (dp - pole).abs() < TAU * 8e6)
        {
            continue;
        }
        accepted += 1;
        let op = C64::new(1e-3 * os_mag, 0.0);
        let mk = |rabi: C64, det: f64, lambda: f64| {
            LaserField::new(rabi, det, [1.0, 0.0, 0.0], lambda, 0.0, true).unwrap()
        };
        let probe = mk(op, dp, LAMBDA_PROBE);
        let strong = mk(os, ds, LAMBDA_STRONG);
        let weak = mk(ow, dw, LAMBDA_WEAK);
        let m = hamiltonian(4, &probe, &strong, &weak);
        let liou = liouvillian(&scheme, &m, 0.0, 0.0, &[]).map_err(|e| e.to_string())?;
        let rho = liou.steady_state(1e-11).map_err(|e| e.to_string())?;
        let numeric =
            chi_numeric(rho.coherence(1, 0), op, KAPPA_BASE).map_err(|e| e.to_string())?;
        let closed = chi_analytic(KAPPA_BASE, GAMMA_12, GAMMA_23, GAMMA_34, os, ow, dp, ds, dw)
            .map_err(|e| e.to_string())?
            .chi;
        worst = worst.max((numeric - closed).norm() / closed.norm());
    }
    let detail = format!("100 points, worst relative error {worst:.2e} vs 1e-6");
    if worst <= 1e-6 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Beam angles and closure of the Doppler-free triangle, plus invariance of
/// the narrow-peak position against the vapor temperature.
fn criterion_3() -> Outcome {
    let (a_s, a_w) =
        doppler_free_angles(LAMBDA_PROBE, LAMBDA_STRONG, LAMBDA_WEAK).map_err(|e| e.to_string())?;
    let (deg_s, deg_w) = (a_s.to_degrees(), a_w.to_degrees());
    let geometry =
        BeamGeometry::doppler_free(LAMBDA_PROBE, LAMBDA_STRONG, LAMBDA_WEAK, PUMP_ANGLE_DEG.to_radians())
            .map_err(|e| e.to_string())?;
    let closure = geometry.closure_residual() / (TAU / LAMBDA_PROBE);
    let mut centers = Vec::new();
    for kelvin in [100.0, 400.0] {
        let cfg = preset(Scenario::D).with_temperature(kelvin);
        let spec = spectrum(&cfg, &symmetric_grid(3e6, 21))?;
        let fit =
            fit_spectrum_peak(&spec, 0.0, 3e6).map_err(|e| format!("fit at {kelvin} K: {e}"))?;
        centers.push(fit.center_hz);
    }
    let drift = (centers[0] - centers[1]).abs();
    let worst = centers.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let bound = GAMMA_12 / 20.0 / TAU;
    let detail = format!(
        "angles {deg_s:.2}/{deg_w:.2} deg, closure {closure:.1e}, 100->400 K drift {:.1} kHz vs {:.1} kHz",
        drift / 1e3,
        bound / 1e3
    );
    if (deg_s - 15.3).abs() <= 0.1
        && (deg_w - 19.3).abs() <= 0.1
        && closure <= 1e-9
        && drift <= bound
        && worst <= bound
    {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_4() -> Outcome {
    let mass = 202.0 * AMU;
    let width_mhz = doppler_width(LAMBDA_PROBE, 289.15, mass) / 1e6;
    let speed = most_probable_speed(289.15, mass);
    let detail =
        format!("Doppler width {width_mhz:.1} MHz vs 1013 +/-1, v_p {speed:.1} m/s vs 155 +/-1");
    if (width_mhz - 1013.0).abs() <= 1.0 && (speed - 155.0).abs() <= 1.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_5() -> Outcome {
    let s50 = saturation_parameter(50e-6, PROBE_BEAM_DIAMETER, LAMBDA_PROBE, GAMMA_12)
        .map_err(|e| e.to_string())?;
    let s15 = saturation_parameter(15e-6, PROBE_BEAM_DIAMETER, LAMBDA_PROBE, GAMMA_12)
        .map_err(|e| e.to_string())?;
    let detail = format!("S0(50 uW) {s50:.3} vs 0.88, S0(15 uW) {s15:.3} vs 0.27");
    if (s50 / 0.88 - 1.0).abs() <= 0.03 && (s15 / 0.27 - 1.0).abs() <= 0.03 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Sign signatures of the four beam configurations: zero difference with the
/// probe alone, broad transparency with the strong coupling, a narrow extra
/// peak only once the weak coupling closes the three-photon loop, and wings
/// that absorb more with the repumper on.
fn criterion_6() -> Outcome {
    let grid = merged_grid(&[symmetric_grid(10e6, 41), symmetric_grid(100e6, 21)]);
    let mut flat_a = 0.0f64;
    let mut center = Vec::new();
    let mut contrast = Vec::new();
    let mut wings = Vec::new();
    for (k, scenario) in [Scenario::A, Scenario::B, Scenario::C, Scenario::D].iter().enumerate() {
        let spec = spectrum(&preset(*scenario), &grid)?;
        if k == 0 {
            flat_a = spec.rows.iter().map(|r| r.diff().abs()).fold(0.0, f64::max);
        }
        let d0 = diff_at(&spec, 0.0);
        center.push(d0);
        contrast.push(d0 - 0.5 * (diff_at(&spec, 2e6) + diff_at(&spec, -2e6)));
        let nodes: Vec<f64> = [10e6, 20e6, 30e6, 40e6, 50e6]
            .iter()
            .flat_map(|&v| [v, -v])
            .map(|v| diff_at(&spec, v))
            .collect();
        wings.push(nodes.iter().sum::<f64>() / nodes.len() as f64);
    }
    let detail = format!(
        "max|diff(a)| {flat_a:.1e}; diff_b(0) {:+.4}; peak contrast [{:+.1e} {:+.1e} {:+.4} {:+.4}]; wings c {:+.4} d {:+.4}",
        center[1], contrast[0], contrast[1], contrast[2], contrast[3], wings[2], wings[3]
    );
    let absent = contrast[0].abs().max(contrast[1].abs()) <= 5e-4;
    let present = contrast[2] >= 5e-3 && contrast[3] >= 5e-3;
    if flat_a <= 1e-12 && center[1] > 0.0 && absent && present && wings[3] < wings[2] {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// The narrow peak follows the coupling-laser detunings with opposite signs.
fn criterion_7() -> Outcome {
    let base = preset(Scenario::D);
    let mut notes = Vec::new();
    let mut ok = true;
    for (which, mhz) in [("strong", 80.0), ("strong", 160.0), ("weak", 80.0), ("weak", 160.0)] {
        let det = TAU * mhz * 1e6;
        let (cfg, expected_hz) = if which == "strong" {
            (base.with_strong_detuning(det), -mhz * 1e6)
        } else {
            (base.with_weak_detuning(det), mhz * 1e6)
        };
        let grid: Vec<f64> =
            symmetric_grid(5e6, 41).iter().map(|d| d + TAU * expected_hz).collect();
        let spec = spectrum(&cfg, &grid)?;
        let fit = fit_spectrum_peak(&spec, expected_hz, 5e6)
            .map_err(|e| format!("fit {which} +{mhz} MHz: {e}"))?;
        let err_khz = (fit.center_hz - expected_hz) / 1e3;
        if err_khz.abs() > 1e3 {
            ok = false;
        }
        notes.push(format!("{which} +{mhz:.0} MHz off by {err_khz:+.0} kHz"));
    }
    let detail = format!("{} (bound 1000 kHz)", notes.join(", "));
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Pumped transmission: the calibration anchor, no gain at low pump power
/// and narrow pump spectrum, gain at (100 mW, 100 MHz), an interior optimum
/// of the width response, and gain for the rate-specified pump.
fn criterion_8() -> Outcome {
    let awi = preset(Scenario::Awi);
    let anchor = peak_transmission(&awi, 5e6, 51)?;
    let mut below_unity = true;
    let mut bounded_max = 0.0f64;
    for &p in &[10e-3, 20e-3, 40e-3] {
        for &w in &[0.5e6, 10e6] {
            let t = peak_transmission(&awi.with_pump_power(p).with_pump_width(w), 5e6, 21)?;
            bounded_max = bounded_max.max(t);
            below_unity &= t < 1.0;
        }
    }
    let gain = peak_transmission(&awi.with_pump_power(0.1).with_pump_width(100e6), 5e6, 41)?;
    let widths = [0.5e6, 3e6, 10e6, 30e6, 100e6, 300e6];
    let mut curve = Vec::new();
    for &w in &widths {
        curve.push(peak_transmission(&awi.with_pump_width(w), 5e6, 21)?);
    }
    let arg = curve.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map(|(k, _)| k).unwrap();
    let interior = arg > 0 && arg + 1 < curve.len();
    let rate_cfg = preset(Scenario::D).with_pump_rate(TAU * 10e6).with_pump_width(100e6);
    let rate_mode = peak_transmission(&rate_cfg, 5e6, 41)?;
    let detail = format!(
        "anchor {anchor:.4} vs 0.869; bounded cells max {bounded_max:.4}; T(100 mW, 100 MHz) {gain:.4}; width curve argmax {:.1} MHz of {:?}; rate-mode T {rate_mode:.4}",
        widths[arg] / 1e6,
        curve.iter().map(|t| (t * 1e4).round() / 1e4).collect::<Vec<_>>()
    );
    if (anchor - 0.869).abs() <= 3e-3 && below_unity && gain > 1.0 && interior && rate_mode > 1.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Steady states of randomized generators stay physical, and the generators
/// themselves preserve the trace.
fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut worst_herm = 0.0f64;
    let mut worst_trace = 0.0f64;
    let mut min_eig = f64::INFINITY;
    let mut worst_tp = 0.0f64;
    for case in 0..100 {
        let mut scheme = if case % 2 == 0 {
            LevelScheme::four_level()
        } else {
            let repump = if rng.gen_bool(0.5) { rng.gen_range(1e4..1e7) } else { 0.0 };
            LevelScheme::five_level(rng.gen_range(1e5..1e8), repump)
        };
        for decay in scheme.decays.iter_mut() {
            decay.2 = rng.gen_range(1e5..1e8);
        }
        let n = scheme.n_levels();
        let mut mk = |lambda: f64| {
            LaserField::new(
                C64::from_polar(TAU * rng.gen_range(1e4..3e7), rng.gen_range(-PI..PI)),
                TAU * rng.gen_range(-2e8..2e8),
                [1.0, 0.0, 0.0],
                lambda,
                rng.gen_range(0.0..2e5),
                true,
            )
            .unwrap()
        };
        let probe = mk(LAMBDA_PROBE);
        let strong = mk(LAMBDA_STRONG);
        let weak = mk(LAMBDA_WEAK);
        let m = hamiltonian(n, &probe, &strong, &weak);
        let dephasing = laser_dephasing(n, &probe, &strong, &weak);
        let pump = if rng.gen_bool(0.5) { rng.gen_range(0.0..1e6) } else { 0.0 };
        let transit = rng.gen_range(1e3..3e5);
        let liou =
            liouvillian(&scheme, &m, pump, transit, &dephasing).map_err(|e| e.to_string())?;
        let rho = liou.steady_state(1e-10).map_err(|e| format!("case {case}: {e}"))?;
        for i in 0..n {
            for j in 0..n {
                let defect = (rho.matrix[(i, j)] - rho.matrix[(j, i)].conj()).norm();
                worst_herm = worst_herm.max(defect);
            }
        }
        worst_trace = worst_trace.max((rho.trace() - C64::new(1.0, 0.0)).norm());
        min_eig = min_eig.min(rho.min_eigenvalue());

        // Trace preservation of the generator on a random Hermitian input.
        let mut v = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..n {
            v[i * n + i] = C64::new(rng.gen_range(-1.0..1.0), 0.0);
            for j in (i + 1)..n {
                let z = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                v[i * n + j] = z;
                v[j * n + i] = z.conj();
            }
        }
        let image = liou.apply(&v);
        let tr: C64 = (0..n).map(|k| image[k * n + k]).sum();
        let scale =
            image.iter().map(|c| c.norm()).fold(0.0f64, f64::max).max(1e-300) * n as f64;
        worst_tp = worst_tp.max(tr.norm() / scale);
    }
    let detail = format!(
        "hermiticity {worst_herm:.1e}, trace {worst_trace:.1e}, min eigenvalue {min_eig:.1e}, generator trace leak {worst_tp:.1e}"
    );
    if worst_herm <= 1e-10 && worst_trace <= 1e-10 && min_eig >= -1e-8 && worst_tp <= 1e-12 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// The same scan through the binary gives bit-identical CSV bytes for any
/// thread count.
fn criterion_10() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut outputs = Vec::new();
    for threads in [1usize, 2, 8] {
        let path = dir.path().join(format!("scan-{threads}.csv"));
        let status = Command::new(env!("CARGO_BIN_EXE_hg3ph"))
            .args(["--threads", &threads.to_string()])
            .args(["scan", "--preset", "d", "--span", "40", "--points", "5"])
            .args(["--dense-span", "1", "--dense-points", "5", "--out"])
            .arg(&path)
            .status()
            .map_err(|e| e.to_string())?;
        if !status.success() {
            return Err(format!("scan with {threads} threads exited with {status}"));
        }
        outputs.push(std::fs::read(&path).map_err(|e| e.to_string())?);
    }
    let identical = outputs[1..].iter().all(|bytes| *bytes == outputs[0]);
    let detail = format!("{} CSV bytes, threads 1/2/8", outputs[0].len());
    if identical {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn panic_label(payload: &(dyn std::any::Any + Send)) -> String {
    if let Some(s) = payload.downcast_ref::<&str>() {
        (*s).to_string()
    } else if let Some(s) = payload.downcast_ref::<String>() {
        s.clone()
    } else {
        "non-string panic".to_string()
    }
}

#[test]
fn acceptance_criteria() {
    let checks: Vec<(&str, fn() -> Outcome)> = vec![
        ("three-photon peak width", criterion_1),
        ("weak-probe oracle equivalence", criterion_2),
        ("doppler-free geometry", criterion_3),
        ("doppler width and speed", criterion_4),
        ("saturation parameters", criterion_5),
        ("beam-configuration signatures", criterion_6),
        ("detuning shift law", criterion_7),
        ("pumped-gain reproduction", criterion_8),
        ("solver invariants", criterion_9),
        ("thread-count determinism", criterion_10),
    ];
    let mut failed = Vec::new();
    for (k, (label, check)) in checks.into_iter().enumerate() {
        let n = k + 1;
        let outcome = catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|p| Err(format!("panicked: {}", panic_label(p.as_ref()))));
        match outcome {
            Ok(detail) => println!("CRITERION {n} {label} ({detail}) ... PASS"),
            Err(detail) => {
                println!("CRITERION {n} {label} ({detail}) ... FAIL");
                failed.push(n);
            }
        }
    }
    assert!(failed.is_empty(), "criteria failed: {failed:?}");
}
