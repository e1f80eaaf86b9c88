//! Histogram statistics that measure how well each color component separates
//! real from generated images.
//!
//! The study runs in two phases on disjoint image sets: the first yields the
//! mean histogram of each class, the second scores every image by its
//! similarity index against those means. The chi-square distance between the
//! per-class score histograms is the component's discernibility.

use serde::Serialize;

use crate::colorspace::{component, ColorComponent, ImagePlane, RgbImage};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    bins: Vec<f64>,
    normalized: bool,
}

impl Histogram {
    pub fn from_counts(counts: &[u64]) -> Self {
        let total: u64 = counts.iter().sum();
        let bins = counts
            .iter()
            .map(|&c| {
                if total == 0 {
                    0.0
                } else {
                    c as f64 / total as f64
                }
            })
            .collect();
        Self {
            bins,
            normalized: total > 0,
        }
    }

    /// Wraps already-normalized bin values.
    pub fn from_probs(bins: Vec<f64>) -> Result<Self> {
        if bins.iter().any(|&b| !b.is_finite() || b < 0.0) {
            return Err(Error::InvalidHyperparameter(
                "histogram bins must be finite and nonnegative".into(),
            ));
        }
        let sum: f64 = bins.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidHyperparameter(format!(
                "histogram sums to {sum}, not 1"
            )));
        }
        Ok(Self {
            bins,
            normalized: true,
        })
    }

    pub fn bins(&self) -> &[f64] {
        &self.bins
    }

    pub fn bin_count(&self) -> usize {
        self.bins.len()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Unweighted mean of normalized histograms.
    pub fn mean(hists: &[Histogram]) -> Result<Self> {
        let first = hists
            .first()
            .ok_or_else(|| Error::InvalidHyperparameter("mean of zero histograms".into()))?;
        let mut bins = vec![0.0; first.bin_count()];
        for h in hists {
            if h.bin_count() != bins.len() {
                return Err(Error::BinCountMismatch(bins.len(), h.bin_count()));
            }
            bins.iter_mut().zip(&h.bins).for_each(|(a, &b)| *a += b);
        }
        let n = hists.len() as f64;
        bins.iter_mut().for_each(|b| *b /= n);
        Ok(Self {
            bins,
            normalized: hists.iter().all(|h| h.normalized),
        })
    }
}

/// 256-bin histogram of sample values, normalized by pixel count.
pub fn component_histogram(plane: &ImagePlane) -> Histogram {
    let mut counts = [0u64; 256];
    for &s in plane.samples() {
        counts[s as usize] += 1;
    }
    Histogram::from_counts(&counts)
}

/// 512-bin joint histogram with each channel quantized to 3 bits:
/// bin = r/32 + 8 (g/32) + 64 (b/32).
pub fn rgb_assembled_histogram(img: &RgbImage) -> Histogram {
    let mut counts = [0u64; 512];
    for ((&r, &g), &b) in img
        .r()
        .samples()
        .iter()
        .zip(img.g().samples())
        .zip(img.b().samples())
    {
        let bin = (r >> 5) as usize + 8 * (g >> 5) as usize + 64 * (b >> 5) as usize;
        counts[bin] += 1;
    }
    Histogram::from_counts(&counts)
}

/// `0.5 * sum (p - q)^2 / (p + q)`, skipping bins empty in both.
pub fn chi_square(p: &Histogram, q: &Histogram) -> Result<f64> {
    if p.bin_count() != q.bin_count() {
        return Err(Error::BinCountMismatch(p.bin_count(), q.bin_count()));
    }
    Ok(0.5
        * p.bins
            .iter()
            .zip(&q.bins)
            .filter(|(&a, &b)| a + b > 0.0)
            .map(|(&a, &b)| (a - b) * (a - b) / (a + b))
            .sum::<f64>())
}

/// Per-class mean histograms of one component.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanHistogramPair {
    pub dng_mean: Histogram,
    pub real_mean: Histogram,
}

impl MeanHistogramPair {
    pub fn new(dng_mean: Histogram, real_mean: Histogram) -> Result<Self> {
        if dng_mean.bin_count() != real_mean.bin_count() {
            return Err(Error::BinCountMismatch(
                dng_mean.bin_count(),
                real_mean.bin_count(),
            ));
        }
        Ok(Self {
            dng_mean,
            real_mean,
        })
    }
}

/// Distance to the real mean over distance to the generated mean.
pub fn similarity_index(h: &Histogram, means: &MeanHistogramPair) -> Result<f64> {
    let to_dng = chi_square(h, &means.dng_mean)?;
    if to_dng == 0.0 {
        return Err(Error::DegenerateDenominator);
    }
    Ok(chi_square(h, &means.real_mean)? / to_dng)
}

/// Uniform binning of similarity indices; values past `upper` land in the last bin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SiBinning {
    pub bins: usize,
    pub upper: f64,
}

impl Default for SiBinning {
    fn default() -> Self {
        Self {
            bins: 50,
            upper: 2.5,
        }
    }
}

impl SiBinning {
    pub fn bin_of(&self, si: f64) -> usize {
        let idx = (si / self.upper * self.bins as f64).floor();
        if idx.is_nan() || idx < 0.0 {
            0
        } else {
            (idx as usize).min(self.bins - 1)
        }
    }

    pub fn histogram(&self, values: &[f64]) -> Histogram {
        let mut counts = vec![0u64; self.bins];
        for &v in values {
            counts[self.bin_of(v)] += 1;
        }
        Histogram::from_counts(&counts)
    }
}

/// Chi-square distance between the similarity-index histograms of the two classes.
pub fn discernibility(real_sis: &[f64], dng_sis: &[f64], binning: SiBinning) -> Result<f64> {
    if real_sis.is_empty() || dng_sis.is_empty() {
        return Err(Error::MissingClass(
            "discernibility needs scores from both classes".into(),
        ));
    }
    if binning.bins == 0 || binning.upper.is_nan() || binning.upper <= 0.0 {
        return Err(Error::InvalidHyperparameter(format!("{binning:?}")));
    }
    chi_square(&binning.histogram(real_sis), &binning.histogram(dng_sis))
}

/// What a row of the discernibility report describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum AnalysisTarget {
    Component(ColorComponent),
    /// Joint 3-bit-per-channel RGB histogram.
    RgbAssembled,
}

impl AnalysisTarget {
    pub fn all() -> Vec<AnalysisTarget> {
        ColorComponent::ALL
            .into_iter()
            .map(AnalysisTarget::Component)
            .chain([AnalysisTarget::RgbAssembled])
            .collect()
    }

    pub fn name(self) -> &'static str {
        match self {
            AnalysisTarget::Component(c) => c.name(),
            AnalysisTarget::RgbAssembled => "RGB",
        }
    }

    pub fn histogram(self, img: &RgbImage) -> Histogram {
        match self {
            AnalysisTarget::Component(c) => component_histogram(&component(img, c)),
            AnalysisTarget::RgbAssembled => rgb_assembled_histogram(img),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ComponentDiscernibility {
    pub target: AnalysisTarget,
    pub d_chi2: f64,
    /// Per-bin similarity-index histogram of real images.
    pub real_si_hist: Vec<f64>,
    /// Per-bin similarity-index histogram of generated images.
    pub dng_si_hist: Vec<f64>,
    /// Images skipped because their histogram equals the generated mean.
    pub skipped: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct DiscernibilityReport {
    pub binning: SiBinning,
    pub rows: Vec<ComponentDiscernibility>,
}

impl DiscernibilityReport {
    pub fn get(&self, target: AnalysisTarget) -> Option<&ComponentDiscernibility> {
        self.rows.iter().find(|r| r.target == target)
    }
}

/// Runs the two-phase study for every component and the assembled RGB
/// histogram. `*_means` images build the class means; `*_scored` images are
/// scored against them.
pub fn discernibility_report(
    real_means: &[RgbImage],
    dng_means: &[RgbImage],
    real_scored: &[RgbImage],
    dng_scored: &[RgbImage],
    binning: SiBinning,
) -> Result<DiscernibilityReport> {
    if [real_means, dng_means, real_scored, dng_scored]
        .iter()
        .any(|s| s.is_empty())
    {
        return Err(Error::MissingClass(
            "each of the four analysis image sets must be nonempty".into(),
        ));
    }
    let mut rows = Vec::new();
    for target in AnalysisTarget::all() {
        let hists =
            |imgs: &[RgbImage]| imgs.iter().map(|i| target.histogram(i)).collect::<Vec<_>>();
        let means = MeanHistogramPair::new(
            Histogram::mean(&hists(dng_means))?,
            Histogram::mean(&hists(real_means))?,
        )?;
        let mut skipped = 0;
        let mut scores = |imgs: &[RgbImage]| -> Result<Vec<f64>> {
            let mut out = Vec::with_capacity(imgs.len());
            for h in hists(imgs) {
                match similarity_index(&h, &means) {
                    Ok(si) => out.push(si),
                    Err(Error::DegenerateDenominator) => skipped += 1,
                    Err(e) => return Err(e),
                }
            }
            Ok(out)
        };
        let real_sis = scores(real_scored)?;
        let dng_sis = scores(dng_scored)?;
        rows.push(ComponentDiscernibility {
            target,
            d_chi2: discernibility(&real_sis, &dng_sis, binning)?,
            real_si_hist: binning.histogram(&real_sis).bins,
            dng_si_hist: binning.histogram(&dng_sis).bins,
            skipped,
        });
    }
    Ok(DiscernibilityReport { binning, rows })
}
