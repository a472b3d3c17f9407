//! Gaussian rasterization of birth-persistence diagrams and the three-channel
//! `(PI_0, PI_1, max(PI_0, PI_1))` stack.

use serde::{Deserialize, Serialize};

use crate::diagram::BirthPersistenceDiagram;
use crate::error::{Error, Result};
use crate::io::{fmt_real, parse_real, parse_usize};

/// Grid bounds `(x_min, x_max, y_min, y_max)` in birth/persistence units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bounds {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PIConfig {
    pub resolution: usize,
    pub xi: f64,
    pub bounds: Bounds,
}

impl Default for PIConfig {
    fn default() -> Self {
        Self {
            resolution: 32,
            xi: 0.05,
            bounds: Bounds {
                x_min: 0.0,
                x_max: 1.5,
                y_min: 0.0,
                y_max: 1.5,
            },
        }
    }
}

impl PIConfig {
    pub fn validate(&self) -> Result<()> {
        let b = &self.bounds;
        if self.resolution == 0 {
            return Err(Error::InvalidConfig("resolution must be positive".into()));
        }
        if !(self.xi > 0.0 && self.xi.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "xi must be positive, got {}",
                self.xi
            )));
        }
        let ordered = |lo: f64, hi: f64| lo.is_finite() && hi.is_finite() && hi > lo;
        if !ordered(b.x_min, b.x_max) || !ordered(b.y_min, b.y_max) {
            return Err(Error::InvalidConfig(format!("degenerate bounds {b:?}")));
        }
        Ok(())
    }

    /// Center of pixel `(row, col)`: columns run along birth from `x_min`,
    /// rows run along persistence from `y_max` down, so larger lifetimes sit
    /// higher in the image.
    pub fn pixel_center(&self, row: usize, col: usize) -> (f64, f64) {
        let r = self.resolution as f64;
        let b = &self.bounds;
        let dx = (b.x_max - b.x_min) / r;
        let dy = (b.y_max - b.y_min) / r;
        (
            b.x_min + (col as f64 + 0.5) * dx,
            b.y_max - (row as f64 + 0.5) * dy,
        )
    }
}

/// Row-major nonnegative raster.
#[derive(Debug, Clone, PartialEq)]
pub struct PersistenceImage {
    height: usize,
    width: usize,
    values: Vec<f64>,
}

impl PersistenceImage {
    pub fn new(height: usize, width: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != height * width {
            return Err(Error::SizeMismatch(format!(
                "{height}x{width} image needs {} values, got {}",
                height * width,
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::NonFiniteValue(format!(
                "persistence image value {v} must be finite and nonnegative"
            )));
        }
        Ok(Self {
            height,
            width,
            values,
        })
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            values: vec![0.0; height * width],
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width + col]
    }
}

/// Unweighted sum of isotropic Gaussians, one per diagram point, sampled at
/// the pixel centers. Points are summed in (birth, persistence) order so the
/// result does not depend on input order.
pub fn rasterize(bp: &BirthPersistenceDiagram, cfg: &PIConfig) -> PersistenceImage {
    let res = cfg.resolution;
    let denom = 2.0 * cfg.xi * cfg.xi;
    let points = bp.canonical();
    let mut values = vec![0.0; res * res];
    for row in 0..res {
        for col in 0..res {
            let (x, y) = cfg.pixel_center(row, col);
            values[row * res + col] = points
                .iter()
                .map(|p| {
                    let (dx, dy) = (x - p.birth, y - p.persistence);
                    (-(dx * dx + dy * dy) / denom).exp()
                })
                .sum();
        }
    }
    PersistenceImage {
        height: res,
        width: res,
        values,
    }
}

fn pad_to(img: &PersistenceImage, height: usize, width: usize) -> PersistenceImage {
    if img.height == height && img.width == width {
        return img.clone();
    }
    let mut out = PersistenceImage::zeros(height, width);
    for row in 0..img.height {
        let src = &img.values[row * img.width..(row + 1) * img.width];
        out.values[row * width..row * width + img.width].copy_from_slice(src);
    }
    out
}

/// Pads both images with zeros (bottom and right) to the larger height and width.
pub fn zero_pad_align(
    a: &PersistenceImage,
    b: &PersistenceImage,
) -> (PersistenceImage, PersistenceImage) {
    let height = a.height.max(b.height);
    let width = a.width.max(b.width);
    (pad_to(a, height, width), pad_to(b, height, width))
}

pub fn max_stack(pi0: &PersistenceImage, pi1: &PersistenceImage) -> Result<PersistenceImage> {
    if (pi0.height, pi0.width) != (pi1.height, pi1.width) {
        return Err(Error::SizeMismatch(format!(
            "cannot stack {}x{} with {}x{}",
            pi0.height, pi0.width, pi1.height, pi1.width
        )));
    }
    Ok(PersistenceImage {
        height: pi0.height,
        width: pi0.width,
        values: pi0
            .values
            .iter()
            .zip(&pi1.values)
            .map(|(a, b)| a.max(*b))
            .collect(),
    })
}

/// Three equally sized planes in the order `(PI_0, PI_1, PI_s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiChannelPI {
    planes: [PersistenceImage; 3],
}

impl MultiChannelPI {
    pub const CHANNELS: usize = 3;

    pub fn planes(&self) -> &[PersistenceImage; 3] {
        &self.planes
    }

    pub fn height(&self) -> usize {
        self.planes[0].height
    }

    pub fn width(&self) -> usize {
        self.planes[0].width
    }

    pub fn channels(&self) -> usize {
        Self::CHANNELS
    }

    /// Header `PIMG v1 <H> <W> <C>` followed by channel-major values, one
    /// image row per line.
    pub fn to_text(&self) -> String {
        let (h, w) = (self.height(), self.width());
        let mut out = format!("PIMG v1 {h} {w} {}\n", Self::CHANNELS);
        for plane in &self.planes {
            for row in plane.values.chunks(w) {
                let line: Vec<String> = row.iter().map(|&v| fmt_real(v)).collect();
                out.push_str(&line.join(" "));
                out.push('\n');
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut tokens = text.split_whitespace();
        let header: Vec<&str> = tokens.by_ref().take(5).collect();
        if header.len() != 5 || header[0] != "PIMG" || header[1] != "v1" {
            return Err(Error::Parse("expected header `PIMG v1 <H> <W> <C>`".into()));
        }
        let h = parse_usize(header[2])?;
        let w = parse_usize(header[3])?;
        let c = parse_usize(header[4])?;
        if c != Self::CHANNELS {
            return Err(Error::Parse(format!("expected 3 channels, got {c}")));
        }
        let values = tokens.map(parse_real).collect::<Result<Vec<_>>>()?;
        if values.len() != h * w * c {
            return Err(Error::Parse(format!(
                "expected {} values, got {}",
                h * w * c,
                values.len()
            )));
        }
        let mut planes = values
            .chunks(h * w)
            .map(|chunk| PersistenceImage::new(h, w, chunk.to_vec()))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| Error::Parse(e.to_string()))?;
        let pi_s = planes.pop().expect("three planes");
        let pi_1 = planes.pop().expect("three planes");
        let pi_0 = planes.pop().expect("three planes");
        Ok(Self {
            planes: [pi_0, pi_1, pi_s],
        })
    }

    /// Interleaved `(H, W, 3)` buffer, the layout the network consumes.
    pub fn to_hwc(&self) -> Vec<f64> {
        let n = self.height() * self.width();
        let mut out = Vec::with_capacity(n * 3);
        for i in 0..n {
            for plane in &self.planes {
                out.push(plane.values[i]);
            }
        }
        out
    }
}

pub fn assemble_pi(pi0: &PersistenceImage, pi1: &PersistenceImage) -> MultiChannelPI {
    let (a, b) = zero_pad_align(pi0, pi1);
    let s = max_stack(&a, &b).expect("aligned planes share a size");
    MultiChannelPI { planes: [a, b, s] }
}
