use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::GrayscaleImage;
use crate::error::{Error, Result};

/// Nonempty set of planar points inside the unit square.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: Vec<(f64, f64)>,
}

impl PointCloud {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyPointCloud);
        }
        for &(x, y) in &points {
            let inside = |v: f64| v.is_finite() && (0.0..=1.0).contains(&v);
            if !inside(x) || !inside(y) {
                return Err(Error::InvalidConfig(format!(
                    "point ({x}, {y}) outside the unit square"
                )));
            }
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Foreground extraction parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IngestConfig {
    pub threshold: f64,
    pub max_points: usize,
}

impl Default for IngestConfig {
    fn default() -> Self {
        Self {
            threshold: 0.5,
            max_points: 128,
        }
    }
}

impl IngestConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "threshold must lie in (0, 1), got {}",
                self.threshold
            )));
        }
        if self.max_points == 0 {
            return Err(Error::InvalidConfig("max_points must be positive".into()));
        }
        Ok(())
    }
}

fn axis_coordinate(index: usize, len: usize) -> f64 {
    if len == 1 {
        0.5
    } else {
        index as f64 / (len - 1) as f64
    }
}

/// Maps every pixel at or above `threshold` to `(col/(W-1), 1 - row/(H-1))`.
///
/// When more than `max_points` pixels qualify, a uniform subset is drawn
/// without replacement from a ChaCha8 stream seeded with `seed`; the kept
/// points stay in raster order.
pub fn image_to_point_cloud(
    img: &GrayscaleImage,
    threshold: f64,
    max_points: usize,
    seed: u64,
) -> Result<PointCloud> {
    IngestConfig {
        threshold,
        max_points,
    }
    .validate()?;

    let (h, w) = (img.height(), img.width());
    let mut points = Vec::new();
    for row in 0..h {
        for col in 0..w {
            if img.get(row, col) >= threshold {
                points.push((axis_coordinate(col, w), 1.0 - axis_coordinate(row, h)));
            }
        }
    }
    if points.is_empty() {
        return Err(Error::EmptyPointCloud);
    }
    if points.len() > max_points {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut keep = rand::seq::index::sample(&mut rng, points.len(), max_points).into_vec();
        keep.sort_unstable();
        points = keep.into_iter().map(|i| points[i]).collect();
    }
    PointCloud::new(points)
}
