//! Density-matrix dynamics: rotating-frame drive matrix, Lindblad generator
//! acting on the vectorized density matrix, steady-state solve, and the
//! weak-probe linear response of the probe coherence.

use nalgebra::DMatrix;

use crate::atom::{LaserField, LevelScheme, GROUND, P1};
use crate::error::{Result, SimError};
use crate::linalg::{lu_solve_inplace, C64, I, ZERO};

/// Rotating-frame drive matrix M in rad/s, read in the level order
/// ground, 6³P₁, 7³S₁, 6³P₂ (row 4 = trap stays zero). The Hamiltonian is
/// H = −ħ·M and the coherent evolution below is ρ̇ = i[M, ρ].
///
/// Detunings are taken from the fields as-is; apply velocity shifts before
/// calling.
pub fn hamiltonian(
    n: usize,
    probe: &LaserField,
    strong: &LaserField,
    weak: &LaserField,
) -> DMatrix<C64> {
    assert!(n >= 2, "drive matrix needs at least the probe transition");
    let mut m = DMatrix::from_element(n, n, ZERO);
    let op = probe.effective_rabi();
    m[(0, 0)] = C64::new(-probe.detuning, 0.0);
    m[(0, 1)] = op;
    m[(1, 0)] = op.conj();
    if n >= 3 {
        let os = strong.effective_rabi();
        m[(1, 2)] = os;
        m[(2, 1)] = os.conj();
        m[(2, 2)] = C64::new(strong.detuning, 0.0);
    }
    if n >= 4 {
        let ow = weak.effective_rabi();
        m[(2, 3)] = ow.conj();
        m[(3, 2)] = ow;
        m[(3, 3)] = C64::new(strong.detuning - weak.detuning, 0.0);
    }
    m
}

/// Rotating-frame phase of each level carries the accumulated laser phases
/// probe / strong / weak with these integer coefficients; a laser's phase
/// diffusion dephases every coherence whose frame phase difference contains
/// it.
const FRAME_PHASE: [[f64; 3]; 5] = [
    [0.0, 0.0, 0.0],
    [1.0, 0.0, 0.0],
    [1.0, 1.0, 0.0],
    [1.0, 1.0, -1.0],
    [0.0, 0.0, 0.0],
];

/// n×n matrix (row-major) of extra coherence decay rates from the laser
/// linewidths, rad/s. The repumper acts incoherently and contributes none.
pub fn laser_dephasing(
    n: usize,
    probe: &LaserField,
    strong: &LaserField,
    weak: &LaserField,
) -> Vec<f64> {
    let rates = [probe.dephasing_rate(), strong.dephasing_rate(), weak.dephasing_rate()];
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let mut total = 0.0;
            for l in 0..3 {
                total += (FRAME_PHASE[i][l] - FRAME_PHASE[j][l]).abs() * rates[l];
            }
            out[i * n + j] = total;
        }
    }
    out
}

/// Lindblad generator G on the vectorized density matrix,
/// d/dt vec(ρ) = G·vec(ρ), with vec index (i,j) ↦ i·n + j.
#[derive(Debug, Clone)]
pub struct Liouvillian {
    n: usize,
    gen: Vec<C64>,
}

impl Liouvillian {
    pub fn new(n: usize) -> Self {
        let dim = n * n;
        Liouvillian { n, gen: vec![ZERO; dim * dim] }
    }

    pub fn n_levels(&self) -> usize {
        self.n
    }

    /// Dimension of the vectorized space, n².
    pub fn dim(&self) -> usize {
        self.n * self.n
    }

    pub fn generator(&self) -> &[C64] {
        &self.gen
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        i * self.n + j
    }

    /// ρ̇ += i[M, ρ].
    pub fn add_drive(&mut self, m: &DMatrix<C64>) {
        let n = self.n;
        let dim = n * n;
        for i in 0..n {
            for j in 0..n {
                let row = i * n + j;
                for k in 0..n {
                    self.gen[row * dim + (k * n + j)] += I * m[(i, k)];
                    self.gen[row * dim + (i * n + k)] -= I * m[(k, j)];
                }
            }
        }
    }

    /// ρ̇ += rate · D[|to⟩⟨from|] ρ: population transfer from → to with the
    /// matching coherence decay.
    pub fn add_transfer(&mut self, from: usize, to: usize, rate: f64) {
        let n = self.n;
        let dim = n * n;
        let half = C64::new(0.5 * rate, 0.0);
        self.gen[(to * n + to) * dim + (from * n + from)] += rate;
        for j in 0..n {
            let ket = from * n + j;
            let bra = j * n + from;
            self.gen[ket * dim + ket] -= half;
            self.gen[bra * dim + bra] -= half;
        }
    }

    /// Transit relaxation: atoms leave the beam at `rate` and are replaced
    /// by ground-state atoms.
    pub fn add_transit(&mut self, rate: f64) {
        let n = self.n;
        let dim = n * n;
        for row in 0..dim {
            self.gen[row * dim + row] -= rate;
        }
        let ground = GROUND * n + GROUND;
        for k in 0..n {
            self.gen[ground * dim + (k * n + k)] += rate;
        }
    }

    /// Pure dephasing of the (i,j) and (j,i) coherences.
    pub fn add_dephasing(&mut self, i: usize, j: usize, rate: f64) {
        let dim = self.n * self.n;
        let a = self.idx(i, j);
        let b = self.idx(j, i);
        self.gen[a * dim + a] -= rate;
        self.gen[b * dim + b] -= rate;
    }

    pub fn apply(&self, rho: &[C64]) -> Vec<C64> {
        let dim = self.dim();
        assert_eq!(rho.len(), dim);
        let mut out = vec![ZERO; dim];
        for (row, slot) in out.iter_mut().enumerate() {
            let mut acc = ZERO;
            for (col, r) in rho.iter().enumerate() {
                acc += self.gen[row * dim + col] * r;
            }
            *slot = acc;
        }
        out
    }

    /// Unique stationary state with Tr ρ = 1. Replaces the (redundant)
    /// ground-population row with the trace constraint; a singular system —
    /// disconnected dark states with no transit relaxation — reports
    /// `DegenerateSteadyState`.
    pub fn steady_state(&self, tol: f64) -> Result<DensityMatrix> {
        let n = self.n;
        let dim = self.dim();
        let mut work = self.gen.clone();
        let trace_row = self.idx(GROUND, GROUND);
        for col in 0..dim {
            work[trace_row * dim + col] = ZERO;
        }
        for k in 0..n {
            work[trace_row * dim + self.idx(k, k)] = C64::new(1.0, 0.0);
        }
        let mut rhs = vec![ZERO; dim];
        rhs[trace_row] = C64::new(1.0, 0.0);
        lu_solve_inplace(&mut work, &mut rhs, dim).map_err(|e| {
            SimError::DegenerateSteadyState(format!(
                "stationary state is not unique (dark states without transit relaxation?): {e}"
            ))
        })?;

        // Residual of the original stationary equation.
        let residual = self.apply(&rhs);
        let res_norm: f64 = residual.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        let gen_scale: f64 =
            self.gen.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt().max(1.0);
        let rho_norm: f64 = rhs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if res_norm > tol.max(1e-12) * gen_scale * rho_norm.max(1e-30) {
            return Err(SimError::DegenerateSteadyState(format!(
                "stationary solve residual {res_norm:.3e} exceeds tolerance"
            )));
        }

        let mut matrix = DMatrix::from_element(n, n, ZERO);
        for i in 0..n {
            for j in 0..n {
                matrix[(i, j)] = rhs[self.idx(i, j)];
            }
        }
        // Hermitize and renormalize away roundoff.
        let adjoint = matrix.adjoint();
        matrix = (matrix + adjoint) * C64::new(0.5, 0.0);
        let trace: C64 = (0..n).map(|k| matrix[(k, k)]).sum();
        if (trace.re - 1.0).abs() > 1e-8 || trace.im.abs() > 1e-8 {
            return Err(SimError::DegenerateSteadyState(format!(
                "stationary state trace {trace} is not 1"
            )));
        }
        matrix /= C64::new(trace.re, 0.0);
        Ok(DensityMatrix { matrix })
    }
}

/// Assembled generator: radiative decays and trap channels from the scheme,
/// incoherent pump on the probe transition (raising rate `pump_rate` with
/// the matching stimulated downward channel), transit relaxation and the
/// laser-linewidth dephasing map (n×n row-major, may be empty).
pub fn liouvillian(
    scheme: &LevelScheme,
    m: &DMatrix<C64>,
    pump_rate: f64,
    transit_rate: f64,
    dephasing: &[f64],
) -> Result<Liouvillian> {
    let n = scheme.n_levels();
    if m.nrows() != n || m.ncols() != n {
        return Err(SimError::domain("drive matrix size does not match the scheme"));
    }
    if pump_rate < 0.0 || transit_rate < 0.0 {
        return Err(SimError::domain("rates must be ≥ 0"));
    }
    if !dephasing.is_empty() && dephasing.len() != n * n {
        return Err(SimError::domain("dephasing map must be n×n"));
    }
    let mut liou = Liouvillian::new(n);
    liou.add_drive(m);
    for (from, to, rate) in scheme.transfer_channels() {
        liou.add_transfer(from, to, rate);
    }
    if pump_rate > 0.0 {
        liou.add_transfer(GROUND, P1, pump_rate);
        liou.add_transfer(P1, GROUND, pump_rate);
    }
    if transit_rate > 0.0 {
        liou.add_transit(transit_rate);
    }
    if !dephasing.is_empty() {
        for i in 0..n {
            for j in (i + 1)..n {
                let rate = dephasing[i * n + j];
                if rate > 0.0 {
                    liou.add_dephasing(i, j, rate);
                }
            }
        }
    }
    Ok(liou)
}

#[derive(Debug, Clone)]
pub struct DensityMatrix {
    pub matrix: DMatrix<C64>,
}

impl DensityMatrix {
    pub fn n_levels(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn population(&self, level: usize) -> f64 {
        self.matrix[(level, level)].re
    }

    pub fn coherence(&self, i: usize, j: usize) -> C64 {
        self.matrix[(i, j)]
    }

    pub fn trace(&self) -> C64 {
        (0..self.n_levels()).map(|k| self.matrix[(k, k)]).sum()
    }

    /// Smallest eigenvalue of the (Hermitian) matrix.
    pub fn min_eigenvalue(&self) -> f64 {
        let eig = self.matrix.clone().symmetric_eigen();
        eig.eigenvalues.iter().fold(f64::INFINITY, |m, &v| m.min(v))
    }

    /// Hermitian, unit trace and positive semidefinite within `tol`.
    pub fn is_physical(&self, tol: f64) -> bool {
        let n = self.n_levels();
        for i in 0..n {
            for j in 0..n {
                let diff = self.matrix[(i, j)] - self.matrix[(j, i)].conj();
                if diff.norm() > tol {
                    return false;
                }
            }
        }
        if (self.trace() - C64::new(1.0, 0.0)).norm() > tol {
            return false;
        }
        self.min_eigenvalue() >= -tol
    }
}

/// Complex relaxation-plus-detuning parameters g = Re + i·Im of the probe
/// coherence sector (ρ₁₂, ρ₁₃, ρ₁₄) without the detuning parts: the three
/// real widths. Indices follow the probe path; `dephasing` is the
/// `laser_dephasing` map.
pub fn probe_sector_widths(
    scheme: &LevelScheme,
    dephasing: &[f64],
    transit_rate: f64,
) -> [f64; 3] {
    let mut widths = [0.0; 3];
    for (slot, level) in widths.iter_mut().zip([1usize, 2, 3]) {
        // Row 0 of the flattened map: the (ground, level) coherence.
        *slot = 0.5 * (scheme.outflow(GROUND) + scheme.outflow(level))
            + transit_rate
            + if dephasing.is_empty() { 0.0 } else { dephasing[level] };
    }
    widths
}

/// First-order probe susceptibility of a ground-state atom: solve the closed
/// coherence sector
///   g₂ρ₁₂ + iΩ_s*ρ₁₃            = −iΩ_p
///   iΩ_sρ₁₂ + g₁ρ₁₃ + iΩ_wρ₁₄  = 0
///            iΩ_w*ρ₁₃ + g₃ρ₁₄  = 0
/// and return χ = κ·ρ₂₁/Ω_p* = iκ(γ₁γ₃+|Ω_w|²) / (γ₂(γ₁γ₃+|Ω_w|²)+|Ω_s|²γ₃)
/// with γ_k = conj(g_k). The g's carry width + i·(accumulated detuning):
/// g₂ ← Δ_p, g₁ ← Δ_p+Δ_s, g₃ ← Δ_p+Δ_s−Δ_w.
pub fn weak_probe_chi(
    g2: C64,
    g1: C64,
    g3: C64,
    omega_s: C64,
    omega_w: C64,
    kappa: f64,
) -> Result<C64> {
    let gamma2 = g2.conj();
    if omega_s == ZERO {
        if gamma2.norm() < 1e-300 {
            return Err(SimError::Singular("probe coherence has no relaxation".into()));
        }
        return Ok(I * kappa / gamma2);
    }
    let gamma1 = g1.conj();
    let gamma3 = g3.conj();
    let num = gamma1 * gamma3 + omega_w.norm_sqr();
    let den = gamma2 * num + omega_s.norm_sqr() * gamma3;
    let scale = gamma2.norm() * num.norm() + omega_s.norm_sqr() * gamma3.norm();
    if den.norm() < 1e-14 * scale.max(1e-300) {
        return Err(SimError::Singular(
            "weak-probe response singular at this detuning".into(),
        ));
    }
    Ok(I * kappa * num / den)
}

/// Convenience wrapper: widths from the scheme and lasers, detunings from
/// the (possibly velocity-shifted) values supplied.
pub fn weak_probe_chi_at(
    scheme: &LevelScheme,
    probe: &LaserField,
    strong: &LaserField,
    weak: &LaserField,
    transit_rate: f64,
    kappa: f64,
    deltas: [f64; 3],
) -> Result<C64> {
    let n = scheme.n_levels();
    let dephasing = laser_dephasing(n, probe, strong, weak);
    let w = probe_sector_widths(scheme, &dephasing, transit_rate);
    let [dp, ds, dw] = deltas;
    let g2 = C64::new(w[0], dp);
    let g1 = C64::new(w[1], dp + ds);
    let g3 = C64::new(w[2], dp + ds - dw);
    weak_probe_chi(g2, g1, g3, strong.effective_rabi(), weak.effective_rabi(), kappa)
}
