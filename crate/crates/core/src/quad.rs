//! Quadrature rules: fixed Gauss-Legendre panels for the structured parts of
//! the velocity integrals and Gauss-Hermite rules (Golub-Welsch) for the
//! literal thermal product grid.

use nalgebra::DMatrix;

use crate::error::{Result, SimError};

/// Gauss-Legendre nodes on [−1, 1], abscissa/weight pairs for the orders the
/// averaging engine uses.
const GL4_X: [f64; 4] = [
    -0.861_136_311_594_052_6,
    -0.339_981_043_584_856_3,
    0.339_981_043_584_856_3,
    0.861_136_311_594_052_6,
];
const GL4_W: [f64; 4] = [
    0.347_854_845_137_453_86,
    0.652_145_154_862_546_1,
    0.652_145_154_862_546_1,
    0.347_854_845_137_453_86,
];

const GL6_X: [f64; 6] = [
    -0.932_469_514_203_152_1,
    -0.661_209_386_466_264_5,
    -0.238_619_186_083_196_9,
    0.238_619_186_083_196_9,
    0.661_209_386_466_264_5,
    0.932_469_514_203_152_1,
];
const GL6_W: [f64; 6] = [
    0.171_324_492_379_170_4,
    0.360_761_573_048_138_6,
    0.467_913_934_572_691_0,
    0.467_913_934_572_691_0,
    0.360_761_573_048_138_6,
    0.171_324_492_379_170_4,
];

const GL8_X: [f64; 8] = [
    -0.960_289_856_497_536_3,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329_0,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329_0,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL8_W: [f64; 8] = [
    0.101_228_536_290_376_3,
    0.222_381_034_453_374_5,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362_0,
    0.362_683_783_378_362_0,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// Nodes and weights on [−1, 1] for order 4, 6 or 8.
pub fn gauss_legendre(order: usize) -> (&'static [f64], &'static [f64]) {
    match order {
        4 => (&GL4_X, &GL4_W),
        6 => (&GL6_X, &GL6_W),
        8 => (&GL8_X, &GL8_W),
        _ => panic!("unsupported Gauss-Legendre order {order}"),
    }
}

/// Accumulate ∫_lo^hi f over a panel with the given rule.
pub fn map_panel(lo: f64, hi: f64, order: usize) -> impl Iterator<Item = (f64, f64)> {
    let (xs, ws) = gauss_legendre(order);
    let half = 0.5 * (hi - lo);
    let mid = 0.5 * (hi + lo);
    xs.iter()
        .zip(ws.iter())
        .map(move |(&x, &w)| (mid + half * x, half * w))
}

/// Gauss-Hermite rule for ∫ e^{−t²} f(t) dt / √π ≈ Σ w_i f(t_i); weights are
/// normalized to Σ w = 1 so they read as probabilities of a unit Gaussian in
/// the scaled variable t = v / (σ√2).
pub fn gauss_hermite(order: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if order < 1 {
        return Err(SimError::domain("Gauss-Hermite order must be ≥ 1"));
    }
    // Golub-Welsch: Jacobi matrix with off-diagonal β_k = √(k/2).
    let mut j = DMatrix::<f64>::zeros(order, order);
    for k in 1..order {
        let beta = (k as f64 / 2.0).sqrt();
        j[(k - 1, k)] = beta;
        j[(k, k - 1)] = beta;
    }
    let eig = j.symmetric_eigen();
    let mut pairs: Vec<(f64, f64)> = (0..order)
        .map(|i| {
            let node = eig.eigenvalues[i];
            let v0 = eig.eigenvectors[(0, i)];
            (node, v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    let nodes = pairs.iter().map(|p| p.0).collect();
    let weights = pairs.iter().map(|p| p.1 / total).collect();
    Ok((nodes, weights))
}
