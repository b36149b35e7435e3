//! Beam geometry and thermal-velocity machinery: the non-collinear
//! wave-vector closure k_p + k_s = k_w that removes first-order Doppler
//! shifts of the three-photon resonance, Maxwell-Boltzmann grids and the
//! per-velocity detuning shifts.

use crate::constants::*;
use crate::error::{Result, SimError};
use crate::quad::gauss_hermite;

/// All beams lie in the x-y plane; the probe defines +x.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamGeometry {
    pub lambda_probe: f64,
    pub lambda_strong: f64,
    pub lambda_weak: f64,
    /// Signed angle of each beam from the probe axis, radians.
    pub angle_strong: f64,
    pub angle_weak: f64,
    pub angle_pump: f64,
}

/// Acute angle between a direction and the probe *axis* (a line, not a ray).
fn axis_angle(theta: f64) -> f64 {
    let t = theta.abs() % std::f64::consts::PI;
    t.min(std::f64::consts::PI - t)
}

/// Angles (θ_strong, θ_weak) in radians, measured from the probe axis, that
/// close the triangle k_p + k_s = k_w. Returns the acute axis angles.
///
/// Errors with `GeometryInfeasible` when no triangle exists, i.e. when the
/// required |cos| exceeds 1 beyond roundoff.
pub fn doppler_free_angles(
    lambda_probe: f64,
    lambda_strong: f64,
    lambda_weak: f64,
) -> Result<(f64, f64)> {
    let (alpha, theta_w) = closure_angles(lambda_probe, lambda_strong, lambda_weak)?;
    Ok((axis_angle(alpha), axis_angle(theta_w)))
}

/// Signed angles (α for the strong beam, θ_w for the weak beam) from +x.
fn closure_angles(lambda_p: f64, lambda_s: f64, lambda_w: f64) -> Result<(f64, f64)> {
    if lambda_p <= 0.0 || lambda_s <= 0.0 || lambda_w <= 0.0 {
        return Err(SimError::domain("wavelengths must be positive"));
    }
    let kp = TAU / lambda_p;
    let ks = TAU / lambda_s;
    let kw = TAU / lambda_w;
    // Law of cosines for |k_w|² = |k_p + k_s|².
    let cos_alpha = (kw * kw - kp * kp - ks * ks) / (2.0 * kp * ks);
    let excess = cos_alpha.abs() - 1.0;
    if excess > 1e-12 {
        return Err(SimError::GeometryInfeasible {
            lambda_p,
            lambda_s,
            lambda_w,
            cos_excess: excess,
        });
    }
    let alpha = cos_alpha.clamp(-1.0, 1.0).acos();
    let sum_x = kp + ks * alpha.cos();
    let sum_y = ks * alpha.sin();
    let theta_w = sum_y.atan2(sum_x);
    Ok((alpha, theta_w))
}

impl BeamGeometry {
    /// Closed (Doppler-free) geometry for the given wavelengths.
    pub fn doppler_free(
        lambda_probe: f64,
        lambda_strong: f64,
        lambda_weak: f64,
        pump_angle: f64,
    ) -> Result<Self> {
        let (alpha, theta_w) = closure_angles(lambda_probe, lambda_strong, lambda_weak)?;
        let geometry = BeamGeometry {
            lambda_probe,
            lambda_strong,
            lambda_weak,
            angle_strong: alpha,
            angle_weak: theta_w,
            angle_pump: pump_angle,
        };
        debug_assert!(geometry.closure_residual() <= 1e-9);
        Ok(geometry)
    }

    /// All beams along +x (maximally Doppler-sensitive reference geometry).
    pub fn collinear(lambda_probe: f64, lambda_strong: f64, lambda_weak: f64) -> Self {
        BeamGeometry {
            lambda_probe,
            lambda_strong,
            lambda_weak,
            angle_strong: 0.0,
            angle_weak: 0.0,
            angle_pump: 0.0,
        }
    }

    /// Closed geometry with deliberate misalignment of the strong / weak
    /// beams (radians added to the closure angles).
    pub fn doppler_free_with_offsets(
        lambda_probe: f64,
        lambda_strong: f64,
        lambda_weak: f64,
        pump_angle: f64,
        offset_strong: f64,
        offset_weak: f64,
    ) -> Result<Self> {
        let mut geometry =
            Self::doppler_free(lambda_probe, lambda_strong, lambda_weak, pump_angle)?;
        geometry.angle_strong += offset_strong;
        geometry.angle_weak += offset_weak;
        Ok(geometry)
    }

    pub fn k_probe(&self) -> [f64; 2] {
        [TAU / self.lambda_probe, 0.0]
    }

    pub fn k_strong(&self) -> [f64; 2] {
        let k = TAU / self.lambda_strong;
        [k * self.angle_strong.cos(), k * self.angle_strong.sin()]
    }

    pub fn k_weak(&self) -> [f64; 2] {
        let k = TAU / self.lambda_weak;
        [k * self.angle_weak.cos(), k * self.angle_weak.sin()]
    }

    /// Pump runs near the probe axis at its small tilt; same wavelength as
    /// the probe transition.
    pub fn k_pump(&self) -> [f64; 2] {
        let k = TAU / self.lambda_probe;
        [k * self.angle_pump.cos(), k * self.angle_pump.sin()]
    }

    /// |k_p + k_s − k_w| / |k_p|: zero for a closed triangle.
    pub fn closure_residual(&self) -> f64 {
        let kp = self.k_probe();
        let ks = self.k_strong();
        let kw = self.k_weak();
        let rx = kp[0] + ks[0] - kw[0];
        let ry = kp[1] + ks[1] - kw[1];
        (rx * rx + ry * ry).sqrt() / (TAU / self.lambda_probe)
    }

    pub fn validate(&self) -> Result<()> {
        if self.lambda_probe <= 0.0 || self.lambda_strong <= 0.0 || self.lambda_weak <= 0.0 {
            return Err(SimError::domain("wavelengths must be positive"));
        }
        Ok(())
    }
}

/// Detunings seen by an atom moving with in-plane velocity v:
/// Δᵢ(v) = Δᵢ − kᵢ·v for probe, strong, weak, pump.
pub fn shifted_detunings(
    geometry: &BeamGeometry,
    detunings: [f64; 4],
    v: [f64; 2],
) -> [f64; 4] {
    let ks = [geometry.k_probe(), geometry.k_strong(), geometry.k_weak(), geometry.k_pump()];
    let mut out = [0.0; 4];
    for (slot, (delta, k)) in out.iter_mut().zip(detunings.iter().zip(ks.iter())) {
        *slot = delta - (k[0] * v[0] + k[1] * v[1]);
    }
    out
}

/// Doppler FWHM of a transition: (1/λ)·√(8 k_B T ln 2 / m), Hz.
pub fn doppler_width(lambda: f64, temperature: f64, mass: f64) -> f64 {
    (8.0 * KB * temperature * (2.0f64).ln() / mass).sqrt() / lambda
}

/// Most probable speed √(2 k_B T / m), m/s.
pub fn most_probable_speed(temperature: f64, mass: f64) -> f64 {
    (2.0 * KB * temperature / mass).sqrt()
}

/// Product Gauss-Hermite grid over the in-plane velocity, weights summing
/// to one.
#[derive(Debug, Clone)]
pub struct VelocityGrid {
    pub nodes: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

impl VelocityGrid {
    pub fn product(temperature: f64, mass: f64, order: usize) -> Result<Self> {
        if order < 4 {
            return Err(SimError::domain("velocity grid order must be ≥ 4"));
        }
        if temperature <= 0.0 || mass <= 0.0 {
            return Err(SimError::domain("temperature and mass must be positive"));
        }
        let sigma = (KB * temperature / mass).sqrt();
        let (t, w) = gauss_hermite(order)?;
        let scale = sigma * std::f64::consts::SQRT_2;
        let mut nodes = Vec::with_capacity(order * order);
        let mut weights = Vec::with_capacity(order * order);
        for (ti, wi) in t.iter().zip(&w) {
            for (tj, wj) in t.iter().zip(&w) {
                nodes.push([ti * scale, tj * scale]);
                weights.push(wi * wj);
            }
        }
        Ok(VelocityGrid { nodes, weights })
    }

    /// Single node at rest — recovers the stationary-atom response.
    pub fn at_rest() -> Self {
        VelocityGrid { nodes: vec![[0.0, 0.0]], weights: vec![1.0] }
    }
}

pub use crate::average::average_chi;

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn mercury_angles() {
        let (ts, tw) =
            doppler_free_angles(LAMBDA_PROBE, LAMBDA_STRONG, LAMBDA_WEAK).unwrap();
        assert_abs_diff_eq!(ts.to_degrees(), 15.3, epsilon = 0.1);
        assert_abs_diff_eq!(tw.to_degrees(), 19.3, epsilon = 0.1);
    }

    #[test]
    fn mercury_closure_is_exact() {
        let geometry =
            BeamGeometry::doppler_free(LAMBDA_PROBE, LAMBDA_STRONG, LAMBDA_WEAK, 0.0).unwrap();
        assert!(geometry.closure_residual() <= 1e-9);
    }

    #[test]
    fn degenerate_cascade_is_collinear() {
        // λ, λ, λ/2 closes only with both beams along the probe.
        let (ts, tw) = doppler_free_angles(500e-9, 500e-9, 250e-9).unwrap();
        assert_abs_diff_eq!(ts, 0.0, epsilon = 1e-6);
        assert_abs_diff_eq!(tw, 0.0, epsilon = 1e-6);
    }

    #[test]
    fn infeasible_triangle_rejected() {
        // k_w far larger than k_p + k_s.
        let err = doppler_free_angles(1000e-9, 1000e-9, 100e-9).unwrap_err();
        match err {
            SimError::GeometryInfeasible { cos_excess, .. } => assert!(cos_excess > 0.0),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn three_photon_detuning_is_velocity_free_when_closed() {
        let geometry =
            BeamGeometry::doppler_free(LAMBDA_PROBE, LAMBDA_STRONG, LAMBDA_WEAK, 0.0).unwrap();
        let deltas = [TAU * 1e6, TAU * 2e6, TAU * 1.5e6, 0.0];
        let three0 = deltas[0] + deltas[1] - deltas[2];
        for v in [[120.0, -40.0], [-300.0, 75.0], [1.0, 1.0]] {
            let shifted = shifted_detunings(&geometry, deltas, v);
            let three = shifted[0] + shifted[1] - shifted[2];
            // Individual shifts reach ~7e9 rad/s at 300 m/s; the closed
            // combination has to cancel them down to k-vector rounding.
            assert_abs_diff_eq!(three, three0, epsilon = 1e-2);
        }
    }

    #[test]
    fn shifted_detunings_linear_in_velocity() {
        let geometry = BeamGeometry::collinear(LAMBDA_PROBE, LAMBDA_STRONG, LAMBDA_WEAK);
        let deltas = [0.0; 4];
        let a = shifted_detunings(&geometry, deltas, [10.0, 5.0]);
        let b = shifted_detunings(&geometry, deltas, [20.0, 10.0]);
        for (ai, bi) in a.iter().zip(&b) {
            assert_relative_eq!(2.0 * ai, *bi, max_relative = 1e-12);
        }
        // Collinear probe shift: −k_p v_x.
        assert_relative_eq!(a[0], -TAU / LAMBDA_PROBE * 10.0, max_relative = 1e-12);
    }

    #[test]
    fn mercury_doppler_width_and_speed() {
        let mass = HG202_MASS_U * AMU;
        let width = doppler_width(LAMBDA_PROBE, CELL_TEMPERATURE, mass);
        assert_abs_diff_eq!(width / 1e6, 1013.0, epsilon = 1.0);
        let vmp = most_probable_speed(CELL_TEMPERATURE, mass);
        assert_abs_diff_eq!(vmp, 155.0, epsilon = 1.0);
    }

    #[test]
    fn velocity_grid_moments() {
        let mass = HG202_MASS_U * AMU;
        let grid = VelocityGrid::product(CELL_TEMPERATURE, mass, 16).unwrap();
        let total: f64 = grid.weights.iter().sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
        let mean_x: f64 = grid
            .nodes
            .iter()
            .zip(&grid.weights)
            .map(|(v, w)| v[0] * w)
            .sum();
        assert_abs_diff_eq!(mean_x, 0.0, epsilon = 1e-9);
        let var_x: f64 = grid
            .nodes
            .iter()
            .zip(&grid.weights)
            .map(|(v, w)| v[0] * v[0] * w)
            .sum();
        assert_relative_eq!(var_x, KB * CELL_TEMPERATURE / mass, max_relative = 1e-10);
    }

    #[test]
    fn velocity_grid_order_floor() {
        assert!(VelocityGrid::product(300.0, 1e-25, 3).is_err());
    }
}
