//! Analytic and stability checks for persistence images.

use rand::Rng;
use tdacnn::diagram::{BirthPersistence, BirthPersistenceDiagram};
use tdacnn::persistence_image::{rasterize, PIConfig};

use super::{random_bp, rng};

fn diagram(points: &[(f64, f64)]) -> BirthPersistenceDiagram {
    BirthPersistenceDiagram::new(
        1,
        points
            .iter()
            .map(|&(b, p)| BirthPersistence::new(b, p))
            .collect(),
    )
    .unwrap()
}

/// Returns descriptions of every violated analytic property.
pub fn analytic_failures() -> Vec<String> {
    let cfg = PIConfig::default();
    let mut failures = Vec::new();

    let (row, col) = (9, 20);
    let (x, y) = cfg.pixel_center(row, col);
    let centered = rasterize(&diagram(&[(x, y)]), &cfg);
    if centered.get(row, col) != 1.0 {
        failures.push(format!("centered pixel is {}", centered.get(row, col)));
    }

    // A point one bandwidth to the left of a pixel center.
    let shifted = rasterize(&diagram(&[(x - cfg.xi, y)]), &cfg);
    let expected = (-0.5f64).exp();
    if (shifted.get(row, col) - expected).abs() > 1e-12 {
        failures.push(format!(
            "distance-xi pixel is {}, want {expected}",
            shifted.get(row, col)
        ));
    }

    let empty = rasterize(&diagram(&[]), &cfg);
    if empty.values().iter().any(|&v| v != 0.0) {
        failures.push("empty diagram gives a nonzero image".into());
    }

    let pts = [(0.1, 0.3), (0.7, 0.05), (1.2, 0.9)];
    let once = rasterize(&diagram(&pts), &cfg);
    let doubled: Vec<_> = pts.iter().chain(&pts).copied().collect();
    let twice = rasterize(&diagram(&doubled), &cfg);
    let worst = once
        .values()
        .iter()
        .zip(twice.values())
        .map(|(a, b)| (2.0 * a - b).abs())
        .fold(0.0, f64::max);
    if worst > 1e-12 {
        failures.push(format!("doubling points is off by {worst:e}"));
    }
    failures
}

/// Perturbs one point of each of `count` random diagrams by `delta` in a
/// random direction and checks the sup-norm Lipschitz bound.
pub fn stability_failures(seed: u64, count: usize, delta: f64) -> Vec<String> {
    let cfg = PIConfig::default();
    let bound = delta / (cfg.xi * std::f64::consts::E.sqrt()) + 1e-12;
    let mut r = rng(seed);
    let mut failures = Vec::new();
    for i in 0..count {
        let n = r.gen_range(1..20);
        let base = random_bp(&mut r, n);
        let mut moved = base.clone();
        let k = r.gen_range(0..n);
        let angle = r.gen_range(0.0..std::f64::consts::TAU);
        moved.points[k].birth += delta * angle.cos();
        // Keep the persistence coordinate nonnegative by moving up when needed.
        let dy = delta * angle.sin();
        moved.points[k].persistence += if moved.points[k].persistence + dy < 0.0 {
            -dy
        } else {
            dy
        };
        let a = rasterize(&base, &cfg);
        let b = rasterize(&moved, &cfg);
        let change = a
            .values()
            .iter()
            .zip(b.values())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        if change > bound {
            failures.push(format!("diagram {i}: change {change:e} exceeds {bound:e}"));
        }
    }
    failures
}
