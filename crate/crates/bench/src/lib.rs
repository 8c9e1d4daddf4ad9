//! Shared fixtures for the benchmarks.

use kmsdp::{pairwise_sq_dists, sample_dataset, CenterLayout, MixtureSpec, Noise, SymMatrix};

/// Squared-distance matrix of a two-cluster Gaussian sample with `n`
/// points in 10 dimensions and separation `snr`.
pub fn distance_matrix(n: usize, snr: f64, seed: u64) -> SymMatrix {
    let spec = MixtureSpec::with_layout(
        n,
        2,
        10,
        &CenterLayout::TwoPoint { delta: snr },
        Noise::SphericalGaussian { sigma: 1.0 },
        1.0,
    )
    .expect("valid fixture");
    let data = sample_dataset(&spec, seed).expect("fixture samples");
    pairwise_sq_dists(&data.points).expect("finite points")
}

/// A symmetric matrix with a few large positive eigenvalues and a bulk of
/// negative ones, the shape the solver projects at every iteration.
pub fn low_rank_plus_negative(n: usize, seed: u64) -> SymMatrix {
    let a = distance_matrix(n, 6.0, seed);
    let scale = a.frobenius_norm() / n as f64;
    SymMatrix::from_fn(n, |i, j| -a.get(i, j) / scale + if i == j { 1.0 } else { 0.0 })
}
