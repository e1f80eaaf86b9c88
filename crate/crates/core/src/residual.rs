//! First-order difference residuals and their quantization into code planes.

use serde::{Deserialize, Serialize};

use crate::colorspace::ImagePlane;
use crate::error::{Error, Result};

/// One of the two first-order difference operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterKind {
    /// Column filter `[1; -1]`: `out(x, y) = p(x, y) - p(x, y + 1)`.
    Vertical,
    /// Row filter `[1 -1]`: `out(x, y) = p(x, y) - p(x + 1, y)`.
    Horizontal,
}

impl FilterKind {
    pub const BOTH: [FilterKind; 2] = [FilterKind::Vertical, FilterKind::Horizontal];
}

/// Signed residual samples over the valid filtering region.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResidualPlane {
    width: usize,
    height: usize,
    samples: Vec<i16>,
}

impl ResidualPlane {
    /// Declared value range of every residual of an 8-bit plane.
    pub const RANGE: (i16, i16) = (-255, 255);

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> i16 {
        self.samples[y * self.width + x]
    }

    pub fn samples(&self) -> &[i16] {
        &self.samples
    }
}

/// Integer codes in `[0, levels)`, ready for co-occurrence counting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodePlane {
    width: usize,
    height: usize,
    levels: usize,
    codes: Vec<u8>,
}

impl CodePlane {
    pub fn new(width: usize, height: usize, levels: usize, codes: Vec<u8>) -> Result<Self> {
        if codes.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "{} codes for a {width}x{height} plane",
                codes.len()
            )));
        }
        if levels == 0 || levels > 256 {
            return Err(Error::InvalidHyperparameter(format!(
                "{levels} code levels"
            )));
        }
        if let Some(bad) = codes.iter().find(|&&c| c as usize >= levels) {
            return Err(Error::InvalidHyperparameter(format!(
                "code {bad} outside [0, {levels})"
            )));
        }
        Ok(Self {
            width,
            height,
            levels,
            codes,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.codes[y * self.width + x]
    }

    pub fn codes(&self) -> &[u8] {
        &self.codes
    }
}

/// Valid-region difference filtering; no padding.
pub fn highpass(plane: &ImagePlane, filter: FilterKind) -> Result<ResidualPlane> {
    let (w, h) = (plane.width(), plane.height());
    match filter {
        FilterKind::Horizontal => {
            if w < 2 {
                return Err(Error::DimensionTooSmall {
                    axis: "width",
                    len: w,
                    min: 2,
                });
            }
            let mut samples = Vec::with_capacity((w - 1) * h);
            for y in 0..h {
                let row = plane.row(y);
                samples.extend(row.windows(2).map(|p| p[0] as i16 - p[1] as i16));
            }
            Ok(ResidualPlane {
                width: w - 1,
                height: h,
                samples,
            })
        }
        FilterKind::Vertical => {
            if h < 2 {
                return Err(Error::DimensionTooSmall {
                    axis: "height",
                    len: h,
                    min: 2,
                });
            }
            let mut samples = Vec::with_capacity(w * (h - 1));
            for y in 0..h - 1 {
                let (top, bottom) = (plane.row(y), plane.row(y + 1));
                samples.extend(top.iter().zip(bottom).map(|(&a, &b)| a as i16 - b as i16));
            }
            Ok(ResidualPlane {
                width: w,
                height: h - 1,
                samples,
            })
        }
    }
}

/// Sign code: 1 where the residual is strictly positive, 0 otherwise.
pub fn binarize(residual: &ResidualPlane) -> CodePlane {
    CodePlane {
        width: residual.width,
        height: residual.height,
        levels: 2,
        codes: residual.samples.iter().map(|&r| u8::from(r > 0)).collect(),
    }
}

/// Packs three binary planes into one 8-level plane: `r + 2g + 4b`.
pub fn assemble_rgb(r: &CodePlane, g: &CodePlane, b: &CodePlane) -> Result<CodePlane> {
    let dims = (r.width, r.height);
    if (g.width, g.height) != dims || (b.width, b.height) != dims {
        return Err(Error::DimensionMismatch(format!(
            "binary planes {}x{}, {}x{}, {}x{}",
            r.width, r.height, g.width, g.height, b.width, b.height
        )));
    }
    if r.levels != 2 || g.levels != 2 || b.levels != 2 {
        return Err(Error::InvalidHyperparameter(
            "assemble_rgb needs binary planes".into(),
        ));
    }
    let codes = r
        .codes
        .iter()
        .zip(&g.codes)
        .zip(&b.codes)
        .map(|((&r, &g), &b)| r | (g << 1) | (b << 2))
        .collect();
    Ok(CodePlane {
        width: dims.0,
        height: dims.1,
        levels: 8,
        codes,
    })
}

/// Clamps residuals to `[-tau, tau]` and shifts them to codes `[0, 2 tau]`.
pub fn truncate(residual: &ResidualPlane, tau: u8) -> Result<CodePlane> {
    if tau == 0 || tau > 127 {
        return Err(Error::InvalidHyperparameter(format!(
            "truncation threshold {tau} outside [1, 127]"
        )));
    }
    let t = tau as i16;
    Ok(CodePlane {
        width: residual.width,
        height: residual.height,
        levels: 2 * tau as usize + 1,
        codes: residual
            .samples
            .iter()
            .map(|&r| (r.clamp(-t, t) + t) as u8)
            .collect(),
    })
}
