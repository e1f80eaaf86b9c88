//! RGB images and the nine 8-bit color components derived from them.
//!
//! Planes are row-major: sample `(x, y)` (column `x`, row `y`) lives at
//! index `y * width + x`. Every derived component (H, S, V, Y, Cb, Cr) is
//! quantized to 8 bits so that residuals of all components live on the same
//! integer grid.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One 8-bit color component of an image.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ImagePlane {
    width: usize,
    height: usize,
    samples: Vec<u8>,
}

impl ImagePlane {
    pub fn new(width: usize, height: usize, samples: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage(format!("empty plane {width}x{height}")));
        }
        if samples.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "{} samples for a {width}x{height} plane",
                samples.len()
            )));
        }
        Ok(Self {
            width,
            height,
            samples,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        Self {
            width,
            height,
            samples: vec![value; width * height],
        }
    }

    /// Builds a plane by evaluating `f(x, y)` at every position.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        let mut samples = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                samples.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            samples,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.samples[y * self.width + x]
    }

    pub fn samples(&self) -> &[u8] {
        &self.samples
    }

    /// Row `y` as a slice.
    pub fn row(&self, y: usize) -> &[u8] {
        &self.samples[y * self.width..(y + 1) * self.width]
    }
}

/// An 8-bit RGB raster, at least 2x2.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    r: ImagePlane,
    g: ImagePlane,
    b: ImagePlane,
}

impl RgbImage {
    pub fn new(r: ImagePlane, g: ImagePlane, b: ImagePlane) -> Result<Self> {
        let dims = (r.width, r.height);
        if (g.width, g.height) != dims || (b.width, b.height) != dims {
            return Err(Error::DimensionMismatch(format!(
                "channel planes {}x{}, {}x{}, {}x{}",
                r.width, r.height, g.width, g.height, b.width, b.height
            )));
        }
        if dims.0 < 2 || dims.1 < 2 {
            return Err(Error::InvalidImage(format!(
                "image must be at least 2x2, got {}x{}",
                dims.0, dims.1
            )));
        }
        Ok(Self { r, g, b })
    }

    /// Builds an image from interleaved `RGBRGB...` bytes.
    pub fn from_interleaved(width: usize, height: usize, data: &[u8]) -> Result<Self> {
        if data.len() != width * height * 3 {
            return Err(Error::DimensionMismatch(format!(
                "{} bytes for a {width}x{height} RGB image",
                data.len()
            )));
        }
        let channel = |c: usize| data.iter().skip(c).step_by(3).copied().collect::<Vec<_>>();
        Self::new(
            ImagePlane::new(width, height, channel(0))?,
            ImagePlane::new(width, height, channel(1))?,
            ImagePlane::new(width, height, channel(2))?,
        )
    }

    /// Builds an image by evaluating `f(x, y) -> [r, g, b]` at every position.
    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> [u8; 3],
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height * 3);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(x, y));
            }
        }
        Self::from_interleaved(width, height, &data)
    }

    pub fn width(&self) -> usize {
        self.r.width
    }

    pub fn height(&self) -> usize {
        self.r.height
    }

    pub fn r(&self) -> &ImagePlane {
        &self.r
    }

    pub fn g(&self) -> &ImagePlane {
        &self.g
    }

    pub fn b(&self) -> &ImagePlane {
        &self.b
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        [self.r.get(x, y), self.g.get(x, y), self.b.get(x, y)]
    }

    /// Interleaved `RGBRGB...` bytes, row-major.
    pub fn to_interleaved(&self) -> Vec<u8> {
        self.r
            .samples
            .iter()
            .zip(&self.g.samples)
            .zip(&self.b.samples)
            .flat_map(|((&r, &g), &b)| [r, g, b])
            .collect()
    }

    fn map_pixels(&self, f: impl Fn([u8; 3]) -> [u8; 3]) -> (ImagePlane, ImagePlane, ImagePlane) {
        let n = self.r.samples.len();
        let (mut p0, mut p1, mut p2) = (
            Vec::with_capacity(n),
            Vec::with_capacity(n),
            Vec::with_capacity(n),
        );
        for i in 0..n {
            let [a, b, c] = f([self.r.samples[i], self.g.samples[i], self.b.samples[i]]);
            p0.push(a);
            p1.push(b);
            p2.push(c);
        }
        let plane = |samples| ImagePlane {
            width: self.r.width,
            height: self.r.height,
            samples,
        };
        (plane(p0), plane(p1), plane(p2))
    }
}

/// The nine color components used by the analysis and feature modules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ColorComponent {
    R,
    G,
    B,
    H,
    S,
    V,
    Y,
    Cb,
    Cr,
}

impl ColorComponent {
    pub const ALL: [ColorComponent; 9] = [
        ColorComponent::R,
        ColorComponent::G,
        ColorComponent::B,
        ColorComponent::H,
        ColorComponent::S,
        ColorComponent::V,
        ColorComponent::Y,
        ColorComponent::Cb,
        ColorComponent::Cr,
    ];

    /// The chrominance components whose truncated residuals feed the features.
    pub const CHROMA: [ColorComponent; 4] = [
        ColorComponent::H,
        ColorComponent::S,
        ColorComponent::Cb,
        ColorComponent::Cr,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ColorComponent::R => "R",
            ColorComponent::G => "G",
            ColorComponent::B => "B",
            ColorComponent::H => "H",
            ColorComponent::S => "S",
            ColorComponent::V => "V",
            ColorComponent::Y => "Y",
            ColorComponent::Cb => "Cb",
            ColorComponent::Cr => "Cr",
        }
    }
}

impl fmt::Display for ColorComponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ColorComponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ColorComponent::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidHyperparameter(format!("unknown color component {s:?}")))
    }
}

/// `round(p / q)` for `p >= 0`, `q > 0`, ties rounding up.
#[inline]
fn round_div(p: i64, q: i64) -> i64 {
    (2 * p + q) / (2 * q)
}

/// Hexcone HSV of one pixel, each component scaled to `[0, 255]`.
///
/// Hue is stored linearly as `round(255 * angle / 360)`; achromatic pixels
/// get hue 0. Everything is evaluated exactly in integers, so values that
/// land on a half level always round up.
pub fn hsv_pixel([r, g, b]: [u8; 3]) -> [u8; 3] {
    let (r, g, b) = (r as i64, g as i64, b as i64);
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;

    // angle / 60 = sector + (difference / delta), all in [0, 6)
    let hue = if delta == 0 {
        0
    } else {
        let sixths = if max == r {
            (g - b).rem_euclid(6 * delta)
        } else if max == g {
            2 * delta + b - r
        } else {
            4 * delta + r - g
        };
        round_div(255 * sixths, 6 * delta)
    };
    let sat = if max == 0 {
        0
    } else {
        round_div(255 * delta, max)
    };

    // hue can reach 255 only from angles just below 360
    [hue.min(255) as u8, sat as u8, max as u8]
}

/// Full-range BT.601 YCbCr of one pixel, evaluated exactly in millionths.
pub fn ycbcr_pixel([r, g, b]: [u8; 3]) -> [u8; 3] {
    const ONE: i64 = 1_000_000;
    let (r, g, b) = (r as i64, g as i64, b as i64);
    let y = 299_000 * r + 587_000 * g + 114_000 * b;
    let cb = 128 * ONE - 168_736 * r - 331_264 * g + 500_000 * b;
    let cr = 128 * ONE + 500_000 * r - 418_688 * g - 81_312 * b;
    // Cb and Cr bottom out at 0.5, so every numerator is positive.
    [y, cb, cr].map(|v| round_div(v, ONE).clamp(0, 255) as u8)
}

/// Converts to (H, S, V) planes.
pub fn to_hsv(img: &RgbImage) -> (ImagePlane, ImagePlane, ImagePlane) {
    img.map_pixels(hsv_pixel)
}

/// Converts to (Y, Cb, Cr) planes.
pub fn to_ycbcr(img: &RgbImage) -> (ImagePlane, ImagePlane, ImagePlane) {
    img.map_pixels(ycbcr_pixel)
}

/// Returns the requested component plane, converting on demand.
pub fn component(img: &RgbImage, c: ColorComponent) -> ImagePlane {
    let single = |f: fn([u8; 3]) -> [u8; 3], idx: usize| {
        let samples = (0..img.r.samples.len())
            .map(|i| f([img.r.samples[i], img.g.samples[i], img.b.samples[i]])[idx])
            .collect();
        ImagePlane {
            width: img.width(),
            height: img.height(),
            samples,
        }
    };
    match c {
        ColorComponent::R => img.r.clone(),
        ColorComponent::G => img.g.clone(),
        ColorComponent::B => img.b.clone(),
        ColorComponent::H => single(hsv_pixel, 0),
        ColorComponent::S => single(hsv_pixel, 1),
        ColorComponent::V => single(hsv_pixel, 2),
        ColorComponent::Y => single(ycbcr_pixel, 0),
        ColorComponent::Cb => single(ycbcr_pixel, 1),
        ColorComponent::Cr => single(ycbcr_pixel, 2),
    }
}
