//! Helpers shared by the integration test targets.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tdacnn::diagram::{BirthPersistence, BirthPersistenceDiagram};
use tdacnn::homology::{pairwise_distances, DistanceMatrix};
use tdacnn::ingest::PointCloud;
use tdacnn::nn::Tensor;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_cloud(rng: &mut ChaCha8Rng, n: usize) -> PointCloud {
    let pts = (0..n)
        .map(|_| (rng.gen::<f64>(), rng.gen::<f64>()))
        .collect();
    PointCloud::new(pts).unwrap()
}

pub fn distances(points: &[(f64, f64)]) -> DistanceMatrix {
    pairwise_distances(&PointCloud::new(points.to_vec()).unwrap())
}

/// Dense matrix of Euclidean distances between arbitrary planar points.
pub fn dense_distances(points: &[(f64, f64)]) -> DistanceMatrix {
    let n = points.len();
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let (a, b) = (points[i], points[j]);
            d[i * n + j] = ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt();
        }
    }
    DistanceMatrix::from_dense(n, d).unwrap()
}

pub fn random_tensor(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(
        shape.to_vec(),
        (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
    )
    .unwrap()
}

pub fn random_bp(rng: &mut ChaCha8Rng, n: usize) -> BirthPersistenceDiagram {
    let pts = (0..n)
        .map(|_| BirthPersistence::new(rng.gen_range(0.0..1.5), rng.gen_range(0.0..1.5)))
        .collect();
    BirthPersistenceDiagram::new(1, pts).unwrap()
}

/// Finite-difference step for gradient checks.
pub const FD_STEP: f64 = 1e-5;
/// Entries whose gradient magnitudes are both below this are compared absolutely.
pub const FD_FLOOR: f64 = 1e-6;

/// Largest elementwise relative error between `analytic` and the central
/// difference of `f` at `x`.
pub fn fd_max_rel_error(f: impl Fn(&[f64]) -> f64, x: &[f64], analytic: &[f64]) -> f64 {
    assert_eq!(x.len(), analytic.len());
    let mut probe = x.to_vec();
    let mut worst = 0.0f64;
    for i in 0..x.len() {
        probe[i] = x[i] + FD_STEP;
        let up = f(&probe);
        probe[i] = x[i] - FD_STEP;
        let down = f(&probe);
        probe[i] = x[i];
        let numeric = (up - down) / (2.0 * FD_STEP);
        let scale = analytic[i].abs().max(numeric.abs()).max(FD_FLOOR);
        worst = worst.max((analytic[i] - numeric).abs() / scale);
    }
    worst
}

/// `sum(y * r)`, the scalar used to turn a tensor output into a loss.
pub fn dot(y: &Tensor, r: &Tensor) -> f64 {
    y.data().iter().zip(r.data()).map(|(a, b)| a * b).sum()
}

pub fn with_data(t: &Tensor, data: &[f64]) -> Tensor {
    Tensor::new(t.shape().to_vec(), data.to_vec()).unwrap()
}

pub mod grad;

/// Compares the fast and brute-force persistence on `count` seeded clouds of
/// 3 to 10 points, cycling through the given filtration caps. Returns the
/// descriptions of any disagreements.
pub fn oracle_sweep(seed: u64, count: usize, caps: &[f64]) -> Vec<String> {
    use tdacnn::homology::{brute_force_persistence, rips_persistence, RipsConfig};
    let mut r = rng(seed);
    let mut failures = Vec::new();
    for i in 0..count {
        let n = r.gen_range(3..=10);
        let cloud = random_cloud(&mut r, n);
        let cfg = RipsConfig::new(caps[i % caps.len()]).unwrap();
        let dm = pairwise_distances(&cloud);
        let fast = rips_persistence(&dm, &cfg);
        let slow = brute_force_persistence(&dm, &cfg).unwrap();
        if !(fast.0.multiset_eq(&slow.0) && fast.1.multiset_eq(&slow.1)) {
            failures.push(format!(
                "cloud {i} ({n} points, eps {}): {fast:?} vs {slow:?}",
                cfg.epsilon
            ));
        }
    }
    failures
}
pub mod pi;
