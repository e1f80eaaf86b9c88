//! Image loading, center-crop preprocessing, corpus manifests and seeded
//! stratified train/test splits.

use std::collections::HashSet;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::colorspace::RgbImage;
use crate::error::{Error, Result};
use crate::label::Label;

/// Decoder identification recorded in reports.
pub const DECODER: &str = "image-rs 0.25 (png, zune-jpeg baseline)";

/// Decodes a PNG or JPEG file to 8-bit RGB. Alpha is dropped and grayscale
/// is replicated into all three channels.
pub fn load_image(path: &Path) -> Result<RgbImage> {
    let bytes = std::fs::read(path)?;
    decode_image(&bytes, path)
}

/// Decodes in-memory PNG or JPEG bytes; `path` only labels errors.
pub fn decode_image(bytes: &[u8], path: &Path) -> Result<RgbImage> {
    let format = match image::guess_format(bytes) {
        Ok(f @ (image::ImageFormat::Png | image::ImageFormat::Jpeg)) => f,
        _ => return Err(Error::UnsupportedFormat(path.to_path_buf())),
    };
    let decoded =
        image::load_from_memory_with_format(bytes, format).map_err(|e| Error::Decode {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
    let rgb = decoded.to_rgb8();
    RgbImage::from_interleaved(rgb.width() as usize, rgb.height() as usize, rgb.as_raw())
}

/// Writes an image as 8-bit RGB PNG.
pub fn save_png(img: &RgbImage, path: &Path) -> Result<()> {
    let buf = image::RgbImage::from_raw(
        img.width() as u32,
        img.height() as u32,
        img.to_interleaved(),
    )
    .expect("buffer length matches dimensions");
    buf.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| match e {
            image::ImageError::IoError(io) => Error::Io(io),
            other => Error::Decode {
                path: path.to_path_buf(),
                reason: other.to_string(),
            },
        })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreprocessSpec {
    /// Side of the centered square crop.
    pub crop_side: usize,
    /// Side of the bilinearly resized output.
    pub out_side: usize,
}

/// Center-crops a `crop_side` square (origin rounded down) and resizes it
/// bilinearly to `out_side`, sampling at pixel centers.
pub fn center_crop_resize(img: &RgbImage, spec: PreprocessSpec) -> Result<RgbImage> {
    let (w, h) = (img.width(), img.height());
    let crop = spec.crop_side;
    if crop == 0 || crop > w || crop > h {
        return Err(Error::CropTooLarge {
            crop,
            width: w,
            height: h,
        });
    }
    if spec.out_side < 4 {
        return Err(Error::InvalidHyperparameter(format!(
            "output side {} < 4",
            spec.out_side
        )));
    }
    let (x0, y0) = ((w - crop) / 2, (h - crop) / 2);
    let out = spec.out_side;
    let scale = crop as f64 / out as f64;

    let taps = |d: usize| {
        let s = ((d as f64 + 0.5) * scale - 0.5).clamp(0.0, (crop - 1) as f64);
        let lo = s.floor() as usize;
        let hi = (lo + 1).min(crop - 1);
        (lo, hi, s - lo as f64)
    };
    let xs: Vec<_> = (0..out).map(taps).collect();
    let ys: Vec<_> = (0..out).map(taps).collect();

    RgbImage::from_fn(out, out, |dx, dy| {
        let (xl, xh, fx) = xs[dx];
        let (yl, yh, fy) = ys[dy];
        let p00 = img.pixel(x0 + xl, y0 + yl);
        let p10 = img.pixel(x0 + xh, y0 + yl);
        let p01 = img.pixel(x0 + xl, y0 + yh);
        let p11 = img.pixel(x0 + xh, y0 + yh);
        std::array::from_fn(|c| {
            let top = p00[c] as f64 * (1.0 - fx) + p10[c] as f64 * fx;
            let bottom = p01[c] as f64 * (1.0 - fx) + p11[c] as f64 * fx;
            (top * (1.0 - fy) + bottom * fy).round().clamp(0.0, 255.0) as u8
        })
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub label: Label,
    pub source: String,
}

/// Labeled image list, kept sorted by path.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct CorpusManifest {
    entries: Vec<ManifestEntry>,
}

impl CorpusManifest {
    pub fn new(mut entries: Vec<ManifestEntry>) -> Result<Self> {
        entries.sort_by(|a, b| a.path.cmp(&b.path));
        let mut seen = HashSet::new();
        for e in &entries {
            if !seen.insert(&e.path) {
                return Err(Error::InvalidHyperparameter(format!(
                    "duplicate manifest path {}",
                    e.path.display()
                )));
            }
            let path = e.path.to_string_lossy();
            if path.is_empty() || path.contains(['\t', '\n']) || e.source.contains(['\t', '\n']) {
                return Err(Error::InvalidHyperparameter(format!(
                    "manifest fields may not contain tabs or newlines: {path:?}"
                )));
            }
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[ManifestEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn labels(&self) -> Vec<Label> {
        self.entries.iter().map(|e| e.label).collect()
    }

    /// One `path\tlabel\tsource` record per line.
    pub fn write_to(&self, mut out: impl Write) -> Result<()> {
        for e in &self.entries {
            writeln!(out, "{}\t{}\t{}", e.path.display(), e.label, e.source)?;
        }
        out.flush()?;
        Ok(())
    }

    /// Reads records; blank lines and `#` comments are skipped. A missing
    /// source tag defaults to the empty string.
    pub fn read_from(input: impl BufRead) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields = line.split('\t');
            let path = fields.next().unwrap_or_default();
            let label = fields.next().ok_or_else(|| Error::Format {
                what: "manifest",
                line: i + 1,
                reason: "missing label".into(),
            })?;
            let label: Label = label.parse().map_err(|e: Error| Error::Format {
                what: "manifest",
                line: i + 1,
                reason: e.to_string(),
            })?;
            entries.push(ManifestEntry {
                path: PathBuf::from(path),
                label,
                source: fields.next().unwrap_or_default().to_string(),
            });
        }
        Self::new(entries)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::read_from(std::io::BufReader::new(std::fs::File::open(path)?))
    }

    /// Entries whose relative paths are joined onto `base`.
    pub fn resolved(&self, base: &Path) -> Vec<ManifestEntry> {
        self.entries
            .iter()
            .map(|e| ManifestEntry {
                path: if e.path.is_absolute() {
                    e.path.clone()
                } else {
                    base.join(&e.path)
                },
                ..e.clone()
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub repetitions: usize,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train_fraction: 0.25,
            repetitions: 10,
            seed: 0,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::InvalidHyperparameter(format!(
                "train fraction {} outside (0, 1)",
                self.train_fraction
            )));
        }
        if self.repetitions == 0 {
            return Err(Error::InvalidHyperparameter("zero repetitions".into()));
        }
        Ok(())
    }
}

/// Stratified split of item indices. Each class is shuffled with a generator
/// keyed by `(seed, repetition)` and its first `ceil(fraction * n_class)`
/// members go to training. Both returned lists are in ascending order.
pub fn split_indices(
    labels: &[Label],
    spec: &SplitSpec,
    repetition: usize,
) -> Result<(Vec<usize>, Vec<usize>)> {
    spec.validate()?;
    if repetition >= spec.repetitions {
        return Err(Error::InvalidHyperparameter(format!(
            "repetition {repetition} >= {}",
            spec.repetitions
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(repetition as u64);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in [Label::Real, Label::Dng] {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        members.shuffle(&mut rng);
        let n_train = (spec.train_fraction * members.len() as f64).ceil() as usize;
        train.extend_from_slice(&members[..n_train]);
        test.extend_from_slice(&members[n_train..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// Splits a manifest into (train, test) entries.
pub fn split(
    manifest: &CorpusManifest,
    spec: &SplitSpec,
    repetition: usize,
) -> Result<(Vec<ManifestEntry>, Vec<ManifestEntry>)> {
    let (train, test) = split_indices(&manifest.labels(), spec, repetition)?;
    let pick = |idx: Vec<usize>| {
        idx.into_iter()
            .map(|i| manifest.entries[i].clone())
            .collect()
    };
    Ok((pick(train), pick(test)))
}

#[cfg(test)]
#[allow(clippy::needless_range_loop)]
mod tests {
    use super::*;
    use rand::Rng;

    fn gradient(w: usize, h: usize) -> RgbImage {
        RgbImage::from_fn(w, h, |x, y| {
            [
                (x * 255 / (w - 1)) as u8,
                (y * 255 / (h - 1)) as u8,
                ((x + y) * 255 / (w + h - 2)) as u8,
            ]
        })
        .unwrap()
    }

    #[test]
    fn crop_identity() {
        let img = gradient(9, 9);
        let out = center_crop_resize(
            &img,
            PreprocessSpec {
                crop_side: 9,
                out_side: 9,
            },
        )
        .unwrap();
        assert_eq!(out, img);
    }

    #[test]
    fn crop_center_block() {
        let img = RgbImage::from_fn(4, 4, |x, y| [(10 * x + y) as u8, 0, 0]).unwrap();
        // out_side must be at least 4, so check the crop on an 8x8 source.
        let big = RgbImage::from_fn(8, 8, |x, y| [(10 * x + y) as u8, x as u8, y as u8]).unwrap();
        let out = center_crop_resize(
            &big,
            PreprocessSpec {
                crop_side: 4,
                out_side: 4,
            },
        )
        .unwrap();
        for y in 0..4 {
            for x in 0..4 {
                assert_eq!(out.pixel(x, y), big.pixel(x + 2, y + 2));
            }
        }
        assert!(matches!(
            center_crop_resize(
                &img,
                PreprocessSpec {
                    crop_side: 5,
                    out_side: 4
                }
            ),
            Err(Error::CropTooLarge { .. })
        ));
    }

    #[test]
    fn odd_margin_rounds_down() {
        let img = RgbImage::from_fn(7, 6, |x, y| [x as u8, y as u8, 0]).unwrap();
        let out = center_crop_resize(
            &img,
            PreprocessSpec {
                crop_side: 4,
                out_side: 4,
            },
        )
        .unwrap();
        assert_eq!(out.pixel(0, 0), [1, 1, 0]);
    }

    // Separable two-pass reference: interpolate rows first, then columns,
    // with weights computed from the half-pixel mapping directly.
    fn reference_resize(img: &RgbImage, out: usize) -> Vec<[f64; 3]> {
        let n = img.width();
        let weight = |dst: usize, src: usize| -> f64 {
            let centre =
                ((dst as f64 + 0.5) * n as f64 / out as f64 - 0.5).clamp(0.0, (n - 1) as f64);
            (1.0 - (centre - src as f64).abs()).max(0.0)
        };
        let mut rows = vec![[0.0; 3]; out * n];
        for y in 0..n {
            for dx in 0..out {
                for sx in 0..n {
                    let w = weight(dx, sx);
                    for c in 0..3 {
                        rows[y * out + dx][c] += w * img.pixel(sx, y)[c] as f64;
                    }
                }
            }
        }
        let mut result = vec![[0.0; 3]; out * out];
        for dy in 0..out {
            for dx in 0..out {
                for sy in 0..n {
                    let w = weight(dy, sy);
                    for c in 0..3 {
                        result[dy * out + dx][c] += w * rows[sy * out + dx][c];
                    }
                }
            }
        }
        result
    }

    #[test]
    fn downscale_matches_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(138);
        let img = RgbImage::from_fn(138, 138, |x, y| {
            let base = [x * 255 / 137, y * 255 / 137, (x + y) * 255 / 274];
            base.map(|v| (v as i32 + rng.random_range(-3..=3)).clamp(0, 255) as u8)
        })
        .unwrap();
        let out = center_crop_resize(
            &img,
            PreprocessSpec {
                crop_side: 138,
                out_side: 64,
            },
        )
        .unwrap();
        let reference = reference_resize(&img, 64);
        for y in 0..64 {
            for x in 0..64 {
                for c in 0..3 {
                    let diff = (out.pixel(x, y)[c] as f64 - reference[y * 64 + x][c]).abs();
                    assert!(diff <= 1.0, "({x},{y},{c}) off by {diff}");
                }
            }
        }
    }

    fn manifest(n_real: usize, n_dng: usize) -> CorpusManifest {
        let entries = (0..n_real)
            .map(|i| (format!("real/{i:04}.png"), Label::Real))
            .chain((0..n_dng).map(|i| (format!("dng/{i:04}.png"), Label::Dng)))
            .map(|(p, label)| ManifestEntry {
                path: p.into(),
                label,
                source: "test".into(),
            })
            .collect();
        CorpusManifest::new(entries).unwrap()
    }

    #[test]
    fn split_counts() {
        let m = manifest(100, 100);
        let spec = SplitSpec {
            seed: 3,
            ..Default::default()
        };
        let (train, test) = split(&m, &spec, 0).unwrap();
        let count = |v: &[ManifestEntry], l| v.iter().filter(|e| e.label == l).count();
        assert_eq!(
            (count(&train, Label::Real), count(&train, Label::Dng)),
            (25, 25)
        );
        assert_eq!(
            (count(&test, Label::Real), count(&test, Label::Dng)),
            (75, 75)
        );
        assert_eq!(split(&m, &spec, 0).unwrap(), (train.clone(), test));
        assert_ne!(split(&m, &spec, 1).unwrap().0, train);
        assert!(split(&m, &spec, 10).is_err());
    }

    #[test]
    fn manifest_round_trip_and_validation() {
        let m = manifest(3, 2);
        let mut buf = Vec::new();
        m.write_to(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("dng/0000.png\tdng\ttest\n"));
        assert_eq!(CorpusManifest::read_from(buf.as_slice()).unwrap(), m);

        let dup = "a.png\treal\tx\na.png\tdng\ty\n";
        assert!(CorpusManifest::read_from(dup.as_bytes()).is_err());
        assert!(CorpusManifest::read_from("a.png\tmaybe\n".as_bytes()).is_err());
        let sparse = "# comment\n\nb.png\t1\n";
        let m = CorpusManifest::read_from(sparse.as_bytes()).unwrap();
        assert_eq!(m.entries()[0].label, Label::Dng);
    }

    #[test]
    fn png_round_trip_and_decode_errors() {
        let dir = tempfile::tempdir().unwrap();
        let img = gradient(5, 4);
        let path = dir.path().join("g.png");
        save_png(&img, &path).unwrap();
        assert_eq!(load_image(&path).unwrap(), img);

        let white = dir.path().join("white.png");
        image::RgbImage::from_pixel(2, 2, image::Rgb([255, 255, 255]))
            .save(&white)
            .unwrap();
        assert_eq!(load_image(&white).unwrap().pixel(1, 1), [255, 255, 255]);

        let rgba = dir.path().join("rgba.png");
        image::RgbaImage::from_fn(3, 2, |x, y| image::Rgba([x as u8 * 50, y as u8 * 70, 9, 3]))
            .save(&rgba)
            .unwrap();
        let loaded = load_image(&rgba).unwrap();
        assert_eq!(loaded.pixel(2, 1), [100, 70, 9]);

        let gray = dir.path().join("gray.png");
        image::GrayImage::from_fn(2, 2, |x, _| image::Luma([x as u8 * 200]))
            .save(&gray)
            .unwrap();
        assert_eq!(load_image(&gray).unwrap().pixel(1, 0), [200, 200, 200]);

        let bytes = std::fs::read(&path).unwrap();
        let cut = dir.path().join("cut.png");
        std::fs::write(&cut, &bytes[..bytes.len() / 2]).unwrap();
        assert!(matches!(load_image(&cut), Err(Error::Decode { .. })));

        let text = dir.path().join("x.png");
        std::fs::write(&text, b"hello world").unwrap();
        assert!(matches!(
            load_image(&text),
            Err(Error::UnsupportedFormat(_))
        ));
    }

    #[test]
    fn jpeg_decodes() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.jpg");
        image::RgbImage::from_pixel(8, 8, image::Rgb([200, 30, 60]))
            .save(&path)
            .unwrap();
        let img = load_image(&path).unwrap();
        assert_eq!((img.width(), img.height()), (8, 8));
        let [r, g, b] = img.pixel(4, 4);
        assert!(r > 180 && g < 60 && b < 90);
    }
}
