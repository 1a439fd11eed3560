//! Shared inputs for the benchmarks.

use mforge_core::{DatasetSpec, PointCloud};

/// Noisy Swiss roll of `n` points with a fixed seed.
pub fn swiss(n: usize) -> PointCloud {
    DatasetSpec::swiss_roll(n, 0.02, 0)
        .build()
        .expect("valid dataset spec")
}
