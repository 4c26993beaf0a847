//! In-memory pixel grid. Samples are sRGB-encoded and normalized to `[0, 1]`.

use std::path::Path;

use crate::color;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ImageGrid {
    width: usize,
    height: usize,
    pixels: Vec<[f64; 3]>,
}

impl ImageGrid {
    pub fn new(width: usize, height: usize, pixels: Vec<[f64; 3]>) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(Error::Domain(format!(
                "{} pixels for a {width}x{height} grid",
                pixels.len()
            )));
        }
        if let Some(bad) = pixels
            .iter()
            .flatten()
            .find(|c| !c.is_finite() || !(0.0..=1.0).contains(*c))
        {
            return Err(Error::Domain(format!("pixel channel {bad} not in [0, 1]")));
        }
        Ok(ImageGrid {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, value: [f64; 3]) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    /// Reads a PNG or JPEG; 8-bit channels are divided by 255.
    pub fn load(path: &Path) -> Result<Self> {
        let img = image::open(path).map_err(|source| Error::Image {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(Self::from_rgb8(&img.to_rgb8()))
    }

    pub fn from_rgb8(img: &image::RgbImage) -> Self {
        let pixels = img
            .pixels()
            .map(|p| p.0.map(|c| c as f64 / 255.0))
            .collect();
        ImageGrid {
            width: img.width() as usize,
            height: img.height() as usize,
            pixels,
        }
    }

    pub fn to_rgb8(&self) -> image::RgbImage {
        let mut out = image::RgbImage::new(self.width as u32, self.height as u32);
        for (dst, src) in out.pixels_mut().zip(&self.pixels) {
            dst.0 = src.map(|c| (c * 255.0).round().clamp(0.0, 255.0) as u8);
        }
        out
    }

    pub fn save_png(&self, path: &Path) -> Result<()> {
        self.to_rgb8()
            .save_with_format(path, image::ImageFormat::Png)
            .map_err(|source| Error::Image {
                path: path.to_path_buf(),
                source,
            })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> [f64; 3] {
        self.pixels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: [f64; 3]) {
        self.pixels[y * self.width + x] = value;
    }

    pub fn pixels(&self) -> &[f64] {
        self.pixels.as_flattened()
    }

    /// Linear-RGB value at `(x, y)`.
    #[inline]
    pub fn linear(&self, x: usize, y: usize) -> [f64; 3] {
        color::decode(self.get(x, y))
    }

    /// Translates the content by `(dx, dy)`, filling exposed pixels with `fill`.
    pub fn shifted(&self, dx: i64, dy: i64, fill: [f64; 3]) -> Self {
        let mut out = vec![fill; self.pixels.len()];
        for y in 0..self.height {
            for x in 0..self.width {
                let (sx, sy) = (x as i64 - dx, y as i64 - dy);
                if sx >= 0 && sy >= 0 && (sx as usize) < self.width && (sy as usize) < self.height {
                    out[y * self.width + x] = self.get(sx as usize, sy as usize);
                }
            }
        }
        ImageGrid {
            width: self.width,
            height: self.height,
            pixels: out,
        }
    }
}
