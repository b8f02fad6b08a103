//! Shared fixtures for the criterion benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use synthseg_core::geom::Point3;
use synthseg_core::{PointCloud, Rgb};

/// A seeded random labeled cloud spread over a town-scale box.
pub fn random_cloud(n: usize, seed: u64) -> PointCloud {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let positions: Vec<Point3> = (0..n)
        .map(|_| {
            Point3::new(
                rng.random_range(-50.0..50.0),
                rng.random_range(-50.0..50.0),
                rng.random_range(0.0..8.0),
            )
            .unwrap()
        })
        .collect();
    let colors = (0..n).map(|_| Rgb::new(rng.random(), rng.random(), rng.random())).collect();
    let labels = (0..n).map(|_| rng.random_range(0..13u16)).collect();
    PointCloud::from_positions(positions)
        .with_colors(colors)
        .unwrap()
        .with_labels(labels, "carla12")
        .unwrap()
}
