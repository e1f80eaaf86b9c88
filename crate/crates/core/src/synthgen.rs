//! Seeded stand-ins for the two image populations.
//!
//! [`generate_dng_like`] pushes random latent vectors through a fixed,
//! untrained stack of stride-2 transposed convolutions whose last layer
//! produces R, G and B from three independent weight groups.
//! [`generate_real_proxy`] builds smooth multi-scale textures whose channels
//! share a common luminance field, then adds per-pixel sensor noise with
//! cross-channel coupling.
//!
//! Both are pure functions of their spec. All arithmetic is IEEE `f64`; the
//! only platform-dependent step is `tanh`, whose last-ulp differences can
//! flip a rounding at most by one level.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::colorspace::RgbImage;
use crate::error::{Error, Result};

const KERNEL: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenSpec {
    pub seed: u64,
    /// Output side; a multiple of 8 (three 2x upsampling stages).
    pub out_side: usize,
    pub latent_dim: usize,
    /// Input channel counts of the three transposed-convolution stages.
    pub widths: [usize; 3],
    /// Scale applied before the final `tanh`.
    pub output_gain: f64,
}

impl Default for GenSpec {
    fn default() -> Self {
        Self {
            seed: 0,
            out_side: 64,
            latent_dim: 16,
            widths: [64, 32, 16],
            output_gain: 1.0,
        }
    }
}

impl GenSpec {
    pub fn validate(&self) -> Result<()> {
        if self.out_side == 0 || !self.out_side.is_multiple_of(8) {
            return Err(Error::InvalidHyperparameter(format!(
                "generator output side {} is not a positive multiple of 8",
                self.out_side
            )));
        }
        if self.latent_dim == 0 || self.widths.contains(&0) {
            return Err(Error::InvalidHyperparameter(
                "generator widths must be at least 1".into(),
            ));
        }
        if !(self.output_gain > 0.0 && self.output_gain.is_finite()) {
            return Err(Error::InvalidHyperparameter(format!(
                "output gain {}",
                self.output_gain
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProxySpec {
    pub seed: u64,
    pub out_side: usize,
    /// Cell size in pixels of the coarsest texture octave.
    pub texture_scale: f64,
    /// Variance of the additive per-pixel noise, in 8-bit levels squared.
    pub noise_variance: f64,
    /// Share of each channel's noise taken from a component common to all
    /// three channels, in `[0, 1]`.
    pub coupling: f64,
    /// Share of scene variance carried by the common luminance field, in `[0, 1]`.
    pub channel_correlation: f64,
    /// Scale applied before the `tanh` tone curve.
    pub output_gain: f64,
}

impl Default for ProxySpec {
    fn default() -> Self {
        Self {
            seed: 0,
            out_side: 64,
            texture_scale: 16.0,
            noise_variance: 4.0,
            coupling: 0.5,
            channel_correlation: 0.9,
            output_gain: 1.0,
        }
    }
}

impl ProxySpec {
    pub fn validate(&self) -> Result<()> {
        if self.out_side < 2 {
            return Err(Error::InvalidHyperparameter(format!(
                "proxy output side {} < 2",
                self.out_side
            )));
        }
        if !(self.texture_scale >= 1.0 && self.texture_scale.is_finite()) {
            return Err(Error::InvalidHyperparameter(format!(
                "texture scale {} < 1",
                self.texture_scale
            )));
        }
        if !(self.noise_variance >= 0.0 && self.noise_variance.is_finite()) {
            return Err(Error::InvalidHyperparameter(format!(
                "noise variance {} < 0",
                self.noise_variance
            )));
        }
        for (name, v) in [
            ("coupling", self.coupling),
            ("channel correlation", self.channel_correlation),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidHyperparameter(format!(
                    "{name} {v} outside [0, 1]"
                )));
            }
        }
        if !(self.output_gain > 0.0 && self.output_gain.is_finite()) {
            return Err(Error::InvalidHyperparameter(format!(
                "output gain {}",
                self.output_gain
            )));
        }
        Ok(())
    }
}

/// Generator for image `index` of a corpus: stream 0 is reserved for
/// network weights.
fn image_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64 + 1);
    rng
}

fn normal(rng: &mut impl Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Channel-major feature maps: `data[c][y * side + x]`.
struct Maps {
    side: usize,
    data: Vec<Vec<f64>>,
}

impl Maps {
    /// Per-channel standardization over spatial positions.
    fn normalize(&mut self) {
        for ch in &mut self.data {
            let n = ch.len() as f64;
            let mean = ch.iter().sum::<f64>() / n;
            let var = ch.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            let inv = 1.0 / (var + 1e-8).sqrt();
            ch.iter_mut().for_each(|v| *v = (*v - mean) * inv);
        }
    }

    fn relu(&mut self) {
        self.data.iter_mut().flatten().for_each(|v| *v = v.max(0.0));
    }
}

/// Stride-2, kernel-4, padding-1 transposed convolution.
struct TransposedConv {
    c_in: usize,
    c_out: usize,
    /// `weights[((o * c_in + i) * KERNEL + ky) * KERNEL + kx]`
    weights: Vec<f64>,
}

impl TransposedConv {
    fn random(c_in: usize, c_out: usize, rng: &mut impl Rng) -> Self {
        let scale = 1.0 / ((c_in * KERNEL) as f64).sqrt();
        let weights = (0..c_out * c_in * KERNEL * KERNEL)
            .map(|_| normal(rng) * scale)
            .collect();
        Self {
            c_in,
            c_out,
            weights,
        }
    }

    fn forward(&self, input: &Maps) -> Maps {
        let s = input.side;
        let out_side = 2 * s;
        let data = (0..self.c_out)
            .map(|o| {
                let mut out = vec![0.0; out_side * out_side];
                for (i, plane) in input.data.iter().enumerate() {
                    let w =
                        &self.weights[(o * self.c_in + i) * KERNEL * KERNEL..][..KERNEL * KERNEL];
                    for iy in 0..s {
                        for ix in 0..s {
                            let v = plane[iy * s + ix];
                            if v == 0.0 {
                                continue;
                            }
                            for ky in 0..KERNEL {
                                let oy = (2 * iy + ky) as isize - 1;
                                if oy < 0 || oy >= out_side as isize {
                                    continue;
                                }
                                let row = oy as usize * out_side;
                                for kx in 0..KERNEL {
                                    let ox = (2 * ix + kx) as isize - 1;
                                    if ox < 0 || ox >= out_side as isize {
                                        continue;
                                    }
                                    out[row + ox as usize] += v * w[ky * KERNEL + kx];
                                }
                            }
                        }
                    }
                }
                out
            })
            .collect();
        Maps {
            side: out_side,
            data,
        }
    }
}

struct Generator {
    base_side: usize,
    base_channels: usize,
    /// `(base_channels * base_side^2) x latent_dim`, row-major.
    project: Vec<f64>,
    stages: [TransposedConv; 3],
    gain: f64,
}

impl Generator {
    fn new(spec: &GenSpec) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let base_side = spec.out_side / 8;
        let [w0, w1, w2] = spec.widths;
        let scale = 1.0 / (spec.latent_dim as f64).sqrt();
        let project = (0..w0 * base_side * base_side * spec.latent_dim)
            .map(|_| normal(&mut rng) * scale)
            .collect();
        let stages = [
            TransposedConv::random(w0, w1, &mut rng),
            TransposedConv::random(w1, w2, &mut rng),
            // One independent weight group per output color channel.
            TransposedConv::random(w2, 3, &mut rng),
        ];
        Self {
            base_side,
            base_channels: w0,
            project,
            stages,
            gain: spec.output_gain,
        }
    }

    fn render(&self, latent: &[f64]) -> RgbImage {
        let area = self.base_side * self.base_side;
        let data = (0..self.base_channels)
            .map(|c| {
                (0..area)
                    .map(|p| {
                        let row = &self.project[(c * area + p) * latent.len()..][..latent.len()];
                        row.iter().zip(latent).map(|(w, z)| w * z).sum()
                    })
                    .collect()
            })
            .collect();
        let mut maps = Maps {
            side: self.base_side,
            data,
        };
        maps.normalize();
        maps.relu();
        for (k, stage) in self.stages.iter().enumerate() {
            maps = stage.forward(&maps);
            maps.normalize();
            if k < 2 {
                maps.relu();
            }
        }
        let side = maps.side;
        RgbImage::from_fn(side, side, |x, y| {
            std::array::from_fn(|c| tone(self.gain * maps.data[c][y * side + x]))
        })
        .expect("generator output is at least 8x8")
    }
}

#[inline]
fn tone(z: f64) -> u8 {
    (127.5 * (1.0 + z.tanh())).round().clamp(0.0, 255.0) as u8
}

/// `n` images from the fixed random generator described by `spec`.
pub fn generate_dng_like(spec: &GenSpec, n: usize) -> Result<Vec<RgbImage>> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::InvalidHyperparameter("n must be at least 1".into()));
    }
    let generator = Generator::new(spec);
    Ok((0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = image_rng(spec.seed, i);
            let latent: Vec<f64> = (0..spec.latent_dim).map(|_| normal(&mut rng)).collect();
            generator.render(&latent)
        })
        .collect())
}

/// Smooth value-noise field: three octaves of bilinearly interpolated
/// Gaussian lattices, standardized to zero mean and unit variance.
fn texture(side: usize, scale: f64, rng: &mut impl Rng) -> Vec<f64> {
    let mut field = vec![0.0; side * side];
    let mut cell = scale;
    let mut amplitude = 1.0;
    for _ in 0..3 {
        let cell_size = cell.max(1.0);
        let lattice = (side as f64 / cell_size).ceil() as usize + 2;
        let grid: Vec<f64> = (0..lattice * lattice).map(|_| normal(rng)).collect();
        for y in 0..side {
            let gy = y as f64 / cell_size;
            let (y0, fy) = (gy.floor() as usize, gy.fract());
            for x in 0..side {
                let gx = x as f64 / cell_size;
                let (x0, fx) = (gx.floor() as usize, gx.fract());
                let at = |i: usize, j: usize| grid[j * lattice + i];
                let top = at(x0, y0) * (1.0 - fx) + at(x0 + 1, y0) * fx;
                let bottom = at(x0, y0 + 1) * (1.0 - fx) + at(x0 + 1, y0 + 1) * fx;
                field[y * side + x] += amplitude * (top * (1.0 - fy) + bottom * fy);
            }
        }
        cell /= 2.0;
        amplitude *= 0.5;
    }
    standardize(&mut field);
    field
}

fn standardize(v: &mut [f64]) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    let inv = 1.0 / (var + 1e-12).sqrt();
    v.iter_mut().for_each(|x| *x = (*x - mean) * inv);
}

fn render_proxy(spec: &ProxySpec, index: usize) -> RgbImage {
    let mut rng = image_rng(spec.seed, index);
    let side = spec.out_side;
    let shared = texture(side, spec.texture_scale, &mut rng);
    let rho = spec.channel_correlation;
    let channels: Vec<Vec<f64>> = (0..3)
        .map(|_| {
            let own = texture(side, spec.texture_scale, &mut rng);
            let mut mixed: Vec<f64> = shared
                .iter()
                .zip(&own)
                .map(|(s, o)| rho.sqrt() * s + (1.0 - rho).sqrt() * o)
                .collect();
            standardize(&mut mixed);
            mixed
        })
        .collect();

    let sigma = spec.noise_variance.sqrt();
    let k = spec.coupling;
    let mut data = Vec::with_capacity(side * side * 3);
    for p in 0..side * side {
        let common = normal(&mut rng);
        for ch in &channels {
            let own = normal(&mut rng);
            let noise = sigma * ((1.0 - k) * own + k * common);
            let v = 127.5 * (1.0 + (spec.output_gain * ch[p]).tanh()) + noise;
            data.push(v.round().clamp(0.0, 255.0) as u8);
        }
    }
    RgbImage::from_interleaved(side, side, &data).expect("proxy output is at least 2x2")
}

/// `n` proxy camera images described by `spec`.
pub fn generate_real_proxy(spec: &ProxySpec, n: usize) -> Result<Vec<RgbImage>> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::InvalidHyperparameter("n must be at least 1".into()));
    }
    Ok((0..n)
        .into_par_iter()
        .map(|i| render_proxy(spec, i))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_gen() -> GenSpec {
        GenSpec {
            seed: 7,
            out_side: 16,
            widths: [8, 6, 4],
            ..Default::default()
        }
    }

    #[test]
    fn dng_like_is_deterministic() {
        let a = generate_dng_like(&small_gen(), 3).unwrap();
        let b = generate_dng_like(&small_gen(), 3).unwrap();
        assert_eq!(a, b);
        assert_ne!(a[0], a[1]);
        assert_eq!((a[0].width(), a[0].height()), (16, 16));
        // A prefix of a larger corpus is the smaller corpus.
        let c = generate_dng_like(&small_gen(), 5).unwrap();
        assert_eq!(&c[..3], a.as_slice());
    }

    #[test]
    fn proxy_is_deterministic() {
        let spec = ProxySpec {
            seed: 3,
            out_side: 20,
            ..Default::default()
        };
        let a = generate_real_proxy(&spec, 2).unwrap();
        assert_eq!(a, generate_real_proxy(&spec, 2).unwrap());
        assert_ne!(a[0], a[1]);
    }

    #[test]
    fn noiseless_proxy_is_smooth() {
        let spec = ProxySpec {
            seed: 4,
            out_side: 32,
            noise_variance: 0.0,
            coupling: 0.0,
            ..Default::default()
        };
        let img = &generate_real_proxy(&spec, 1).unwrap()[0];
        let noisy = &generate_real_proxy(
            &ProxySpec {
                noise_variance: 100.0,
                ..spec
            },
            1,
        )
        .unwrap()[0];
        // Mean absolute second difference along rows: near zero for a
        // piecewise-linear texture, dominated by noise otherwise.
        let roughness = |img: &RgbImage| {
            let mut sum = 0.0;
            let mut n = 0.0;
            for y in 0..32 {
                for x in 0..30 {
                    for c in 0..3 {
                        let p = |dx: usize| img.pixel(x + dx, y)[c] as f64;
                        sum += (p(0) - 2.0 * p(1) + p(2)).abs();
                        n += 1.0;
                    }
                }
            }
            sum / n
        };
        let (smooth, rough) = (roughness(img), roughness(noisy));
        assert!(smooth < 10.0, "{smooth}");
        assert!(rough > 2.0 * smooth, "{rough} vs {smooth}");
    }

    #[test]
    fn invalid_specs() {
        assert!(generate_dng_like(
            &GenSpec {
                out_side: 12,
                ..Default::default()
            },
            1
        )
        .is_err());
        assert!(generate_dng_like(
            &GenSpec {
                widths: [1, 0, 1],
                ..Default::default()
            },
            1
        )
        .is_err());
        assert!(generate_dng_like(&small_gen(), 0).is_err());
        assert!(generate_real_proxy(
            &ProxySpec {
                noise_variance: -1.0,
                ..Default::default()
            },
            1
        )
        .is_err());
        assert!(generate_real_proxy(
            &ProxySpec {
                coupling: 1.5,
                ..Default::default()
            },
            1
        )
        .is_err());
    }
}
