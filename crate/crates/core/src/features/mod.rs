//! The color co-occurrence feature set.
//!
//! For an image, the R, G and B residuals are binarized and packed into one
//! 8-level plane; the H, S, Cb and Cr residuals are truncated to `2 tau + 1`
//! levels. Each of these five planes yields one co-occurrence matrix per
//! (filter, offset) pair. The matrices of a plane are averaged, folded by
//! [`symmetric_merge`] and concatenated. With the default configuration the
//! result has 288 + 4 x 75 = 588 entries.

mod cooccurrence;
pub mod file;

use serde::{Deserialize, Serialize};

pub use cooccurrence::{
    bin_count, cooccurrence, merged_len, symmetric_merge, CooccurrenceMatrix, Offset,
};

use crate::colorspace::{component, ColorComponent, RgbImage};
use crate::error::{Error, Result};
use crate::residual::{assemble_rgb, binarize, highpass, truncate, CodePlane, FilterKind};

/// Feature dimension of the default configuration.
pub const FEATURE_DIM: usize = 588;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractorConfig {
    /// Truncation threshold for chrominance residuals.
    pub tau: u8,
    /// Co-occurrence order.
    pub order: usize,
    pub offsets: Vec<Offset>,
    pub filters: Vec<FilterKind>,
}

impl Default for ExtractorConfig {
    fn default() -> Self {
        Self {
            tau: 2,
            order: 3,
            offsets: vec![Offset::DOWN, Offset::RIGHT],
            filters: FilterKind::BOTH.to_vec(),
        }
    }
}

impl ExtractorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.order < 2 {
            return Err(Error::InvalidHyperparameter(format!(
                "co-occurrence order {} < 2",
                self.order
            )));
        }
        if self.tau == 0 || self.tau > 127 {
            return Err(Error::InvalidHyperparameter(format!(
                "tau {} outside [1, 127]",
                self.tau
            )));
        }
        if self.offsets.is_empty() || self.filters.is_empty() {
            return Err(Error::InvalidHyperparameter(
                "need at least one offset and one filter".into(),
            ));
        }
        if self.offsets.iter().any(|o| o.dx == 0 && o.dy == 0) {
            return Err(Error::InvalidHyperparameter("zero offset".into()));
        }
        let rgb_bins = bin_count(8, self.order);
        let chroma_bins = bin_count(self.chroma_levels(), self.order);
        if rgb_bins.max(chroma_bins) > 1 << 26 {
            return Err(Error::InvalidHyperparameter(format!(
                "co-occurrence matrices with {} bins are too large",
                rgb_bins.max(chroma_bins)
            )));
        }
        Ok(())
    }

    pub fn chroma_levels(&self) -> usize {
        2 * self.tau as usize + 1
    }

    /// Lengths of the five feature segments: RGB, H, S, Cb, Cr.
    pub fn segment_lengths(&self) -> [usize; 5] {
        let chroma = merged_len(self.chroma_levels(), self.order);
        [merged_len(8, self.order), chroma, chroma, chroma, chroma]
    }

    pub fn dimension(&self) -> usize {
        self.segment_lengths().iter().sum()
    }
}

/// One global feature vector per image: `[RGB | H | S | Cb | Cr]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    values: Vec<f64>,
    segments: [usize; 5],
}

impl FeatureVector {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// The five segments in layout order.
    pub fn segments(&self) -> [&[f64]; 5] {
        let mut out: [&[f64]; 5] = [&[]; 5];
        let mut start = 0;
        for (slot, &len) in out.iter_mut().zip(&self.segments) {
            *slot = &self.values[start..start + len];
            start += len;
        }
        out
    }
}

fn merged_mean(planes: &[CodePlane], cfg: &ExtractorConfig) -> Result<Vec<f64>> {
    let mut matrices = Vec::with_capacity(planes.len() * cfg.offsets.len());
    for plane in planes {
        for &offset in &cfg.offsets {
            matrices.push(cooccurrence(plane, cfg.order, offset)?);
        }
    }
    Ok(symmetric_merge(&CooccurrenceMatrix::mean(&matrices)?))
}

/// Extracts the feature vector of one image.
pub fn extract(img: &RgbImage, cfg: &ExtractorConfig) -> Result<FeatureVector> {
    cfg.validate()?;
    let mut values = Vec::with_capacity(cfg.dimension());

    let mut rgb_planes = Vec::with_capacity(cfg.filters.len());
    for &filter in &cfg.filters {
        let r = binarize(&highpass(img.r(), filter)?);
        let g = binarize(&highpass(img.g(), filter)?);
        let b = binarize(&highpass(img.b(), filter)?);
        rgb_planes.push(assemble_rgb(&r, &g, &b)?);
    }
    values.extend(merged_mean(&rgb_planes, cfg)?);

    for c in ColorComponent::CHROMA {
        let plane = component(img, c);
        let codes = cfg
            .filters
            .iter()
            .map(|&f| truncate(&highpass(&plane, f)?, cfg.tau))
            .collect::<Result<Vec<_>>>()?;
        values.extend(merged_mean(&codes, cfg)?);
    }

    debug_assert_eq!(values.len(), cfg.dimension());
    Ok(FeatureVector {
        values,
        segments: cfg.segment_lengths(),
    })
}
