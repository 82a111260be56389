//! Shared fixtures for the criterion benches.

use marvel_core::data::gen_two_gaussians;
use marvel_core::noise::{corrupt, NoiseSpec};
use marvel_core::Dataset;

/// Two-Gaussian training set with (40%, 10%) asymmetric label noise.
pub fn noisy_gaussians(n: usize, d: usize, seed: u64) -> Dataset {
    let mut ds = gen_two_gaussians(n, d, 3.0, seed).expect("valid generator parameters");
    let spec = NoiseSpec::BinaryAsymmetric {
        rate_neg: 0.4,
        rate_pos: 0.1,
    };
    ds.labels = corrupt(&ds.labels, 2, &spec, seed).expect("valid noise").observed;
    ds
}
