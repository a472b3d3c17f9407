use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::io::{fmt_real, parse_real, parse_usize};

/// Single-channel image with row-major intensities in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayscaleImage {
    height: usize,
    width: usize,
    pixels: Vec<f64>,
}

impl GrayscaleImage {
    pub fn new(height: usize, width: usize, pixels: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidConfig(format!(
                "image dimensions must be positive, got {height}x{width}"
            )));
        }
        if pixels.len() != height * width {
            return Err(Error::SizeMismatch(format!(
                "{height}x{width} image needs {} pixels, got {}",
                height * width,
                pixels.len()
            )));
        }
        if let Some(p) = pixels.iter().find(|p| !p.is_finite()) {
            return Err(Error::NonFiniteValue(format!("pixel value {p}")));
        }
        if let Some(p) = pixels.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::Parse(format!("pixel value {p} outside [0, 1]")));
        }
        Ok(Self {
            height,
            width,
            pixels,
        })
    }

    pub fn zeros(height: usize, width: usize) -> Result<Self> {
        Self::new(height, width, vec![0.0; height * width])
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.width + col]
    }

    pub(crate) fn set(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!((0.0..=1.0).contains(&value));
        self.pixels[row * self.width + col] = value;
    }

    /// Reads a PGM (`P2`/`P5`) or `IMG v1` file, chosen by its magic bytes.
    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::decode(&bytes)
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        if bytes.starts_with(b"P2") || bytes.starts_with(b"P5") {
            Self::from_pgm(bytes)
        } else if bytes.starts_with(b"IMG") {
            let text = std::str::from_utf8(bytes)
                .map_err(|_| Error::Parse("IMG file is not valid UTF-8".into()))?;
            Self::from_img_text(text)
        } else {
            Err(Error::Parse("unrecognized image format".into()))
        }
    }

    pub fn from_pgm(bytes: &[u8]) -> Result<Self> {
        let mut pos = 0usize;
        let magic = pgm_token(bytes, &mut pos)?;
        let binary = match magic.as_str() {
            "P2" => false,
            "P5" => true,
            other => return Err(Error::Parse(format!("bad PGM magic {other:?}"))),
        };
        let width = parse_usize(&pgm_token(bytes, &mut pos)?)?;
        let height = parse_usize(&pgm_token(bytes, &mut pos)?)?;
        let maxval = parse_usize(&pgm_token(bytes, &mut pos)?)?;
        if maxval == 0 || maxval > 65535 {
            return Err(Error::Parse(format!("PGM maxval {maxval} out of range")));
        }
        let count = width * height;
        let scale = maxval as f64;
        let raw: Vec<usize> = if binary {
            // exactly one whitespace byte separates the header from the raster
            pos += 1;
            let bpp = if maxval < 256 { 1 } else { 2 };
            let data = bytes
                .get(pos..pos + count * bpp)
                .ok_or_else(|| Error::Parse("truncated PGM raster".into()))?;
            if bpp == 1 {
                data.iter().map(|&b| b as usize).collect()
            } else {
                data.chunks_exact(2)
                    .map(|c| u16::from_be_bytes([c[0], c[1]]) as usize)
                    .collect()
            }
        } else {
            let mut values = Vec::with_capacity(count);
            for _ in 0..count {
                values.push(parse_usize(&pgm_token(bytes, &mut pos)?)?);
            }
            values
        };
        if let Some(v) = raw.iter().find(|&&v| v > maxval) {
            return Err(Error::Parse(format!(
                "PGM sample {v} exceeds maxval {maxval}"
            )));
        }
        Self::new(
            height,
            width,
            raw.into_iter().map(|v| v as f64 / scale).collect(),
        )
    }

    /// Binary PGM with maxval 255; intensities are rounded to the nearest level.
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend(self.pixels.iter().map(|p| (p * 255.0).round() as u8));
        out
    }

    /// Parses `IMG v1 <H> <W>` followed by `H*W` reals.
    pub fn from_img_text(text: &str) -> Result<Self> {
        let mut tokens = text.split_whitespace();
        let header: Vec<&str> = tokens.by_ref().take(4).collect();
        if header.len() != 4 || header[0] != "IMG" || header[1] != "v1" {
            return Err(Error::Parse("expected header `IMG v1 <H> <W>`".into()));
        }
        let height = parse_usize(header[2])?;
        let width = parse_usize(header[3])?;
        let pixels = tokens.map(parse_real).collect::<Result<Vec<_>>>()?;
        Self::new(height, width, pixels)
    }

    pub fn to_img_text(&self) -> String {
        let mut out = format!("IMG v1 {} {}\n", self.height, self.width);
        for row in self.pixels.chunks(self.width) {
            let line: Vec<String> = row.iter().map(|&p| fmt_real(p)).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }
}

fn pgm_token(bytes: &[u8], pos: &mut usize) -> Result<String> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    if start == *pos {
        return Err(Error::Parse("truncated PGM header".into()));
    }
    Ok(String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range_pixels() {
        assert!(GrayscaleImage::new(1, 2, vec![0.5, 1.5]).is_err());
        assert!(GrayscaleImage::new(0, 2, vec![]).is_err());
        assert!(GrayscaleImage::new(2, 2, vec![0.0; 3]).is_err());
    }

    #[test]
    fn ascii_pgm_with_comment() {
        let src = b"P2\n# a comment\n3 2\n4\n0 1 2\n3 4 0\n";
        let img = GrayscaleImage::from_pgm(src).unwrap();
        assert_eq!((img.height(), img.width()), (2, 3));
        assert_eq!(img.pixels(), &[0.0, 0.25, 0.5, 0.75, 1.0, 0.0]);
    }

    #[test]
    fn binary_pgm_round_trip() {
        let img = GrayscaleImage::new(2, 2, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        let bytes = img.to_pgm();
        assert_eq!(GrayscaleImage::decode(&bytes).unwrap(), img);
    }

    #[test]
    fn sixteen_bit_pgm() {
        let mut src = b"P5 1 1 65535\n".to_vec();
        src.extend_from_slice(&[0xff, 0xff]);
        assert_eq!(GrayscaleImage::from_pgm(&src).unwrap().pixels(), &[1.0]);
    }

    #[test]
    fn img_text_round_trip() {
        let img = GrayscaleImage::new(2, 3, vec![0.1, 0.2, 0.3, 0.0, 1.0, 0.7]).unwrap();
        let text = img.to_img_text();
        assert!(text.starts_with("IMG v1 2 3\n"));
        assert_eq!(GrayscaleImage::from_img_text(&text).unwrap(), img);
        assert!(GrayscaleImage::from_img_text("IMG v1 2 2\n0 0 0").is_err());
    }
}
