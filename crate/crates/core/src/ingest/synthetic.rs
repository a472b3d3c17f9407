//! Topology-separable synthetic images: filled disks (no hole), annuli (one
//! hole) and pairs of disjoint annuli (two holes).

use std::f64::consts::PI;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::GrayscaleImage;
use crate::error::{Error, Result};

pub const NUM_CLASSES: usize = 3;
pub const CLASS_NAMES: [&str; NUM_CLASSES] = ["disk", "annulus", "two_annuli"];

/// Probability that a background pixel is switched on.
pub const SALT_PROBABILITY: f64 = 0.005;

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledImage {
    pub image: GrayscaleImage,
    pub label: usize,
}

/// Elliptic ring in unit coordinates; `inner == 0` gives a filled ellipse.
#[derive(Debug, Clone, Copy)]
struct Ring {
    cx: f64,
    cy: f64,
    inner: f64,
    outer: f64,
    aspect: f64,
    angle: f64,
}

impl Ring {
    fn contains(&self, x: f64, y: f64) -> bool {
        let (s, c) = self.angle.sin_cos();
        let (dx, dy) = (x - self.cx, y - self.cy);
        let u = c * dx + s * dy;
        let v = (-s * dx + c * dy) / self.aspect;
        let r = (u * u + v * v).sqrt();
        r >= self.inner && r <= self.outer
    }
}

const MARGIN: f64 = 0.04;

fn centered<R: Rng>(rng: &mut R, extent: f64) -> (f64, f64) {
    let lo = extent + MARGIN;
    let hi = 1.0 - extent - MARGIN;
    (rng.gen_range(lo..=hi), rng.gen_range(lo..=hi))
}

fn shapes_for<R: Rng>(rng: &mut R, label: usize) -> Vec<Ring> {
    let aspect = rng.gen_range(0.85..=1.0);
    let angle = rng.gen_range(0.0..PI);
    match label {
        0 => {
            let outer = rng.gen_range(0.18..=0.30);
            let (cx, cy) = centered(rng, outer);
            vec![Ring {
                cx,
                cy,
                inner: 0.0,
                outer,
                aspect,
                angle,
            }]
        }
        1 => {
            let inner = rng.gen_range(0.14..=0.20);
            let outer = inner + rng.gen_range(0.08..=0.12);
            let (cx, cy) = centered(rng, outer);
            vec![Ring {
                cx,
                cy,
                inner,
                outer,
                aspect,
                angle,
            }]
        }
        _ => {
            let inner = rng.gen_range(0.11..=0.13);
            let outer = inner + rng.gen_range(0.06..=0.075);
            let half_gap = rng.gen_range(0.015..=0.03);
            let offset = outer + half_gap;
            let theta = rng.gen_range(0.0..2.0 * PI);
            let (ox, oy) = (offset * theta.cos(), offset * theta.sin());
            let reach_x = ox.abs() + outer + MARGIN;
            let reach_y = oy.abs() + outer + MARGIN;
            let mx = rng.gen_range(reach_x..=1.0 - reach_x);
            let my = rng.gen_range(reach_y..=1.0 - reach_y);
            [1.0, -1.0]
                .iter()
                .map(|sign| Ring {
                    cx: mx + sign * ox,
                    cy: my + sign * oy,
                    inner,
                    outer,
                    aspect: 1.0,
                    angle,
                })
                .collect()
        }
    }
}

fn render<R: Rng>(rng: &mut R, size: usize, shapes: &[Ring]) -> GrayscaleImage {
    let mut img = GrayscaleImage::zeros(size, size).expect("size checked by caller");
    let scale = (size - 1) as f64;
    for row in 0..size {
        for col in 0..size {
            let (x, y) = (col as f64 / scale, 1.0 - row as f64 / scale);
            let on = shapes.iter().any(|s| s.contains(x, y));
            // the noise draw happens for every pixel so the stream layout is fixed
            let salt = rng.gen_bool(SALT_PROBABILITY);
            if on || salt {
                img.set(row, col, 1.0);
            }
        }
    }
    img
}

/// Emits `n_per_class` images of each class, interleaved by class, fully
/// determined by `seed`.
pub fn generate_synthetic_dataset(
    n_per_class: usize,
    image_size: usize,
    seed: u64,
) -> Result<Vec<LabeledImage>> {
    if image_size < 32 {
        return Err(Error::InvalidSize(image_size));
    }
    if n_per_class == 0 {
        return Err(Error::InvalidConfig(
            "n_per_class must be at least 1".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n_per_class * NUM_CLASSES);
    for _ in 0..n_per_class {
        for label in 0..NUM_CLASSES {
            let shapes = shapes_for(&mut rng, label);
            let image = render(&mut rng, image_size, &shapes);
            out.push(LabeledImage { image, label });
        }
    }
    Ok(out)
}
