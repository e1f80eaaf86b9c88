#![allow(dead_code)]

pub mod oracle;

use colorstat::colorspace::RgbImage;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Uniformly random pixels.
pub fn random_image(w: usize, h: usize, seed: u64) -> RgbImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    RgbImage::from_fn(w, h, |_, _| rng.random()).unwrap()
}

/// Random pixels drawn around a smooth gradient, so that residuals are
/// small and the truncated codes use all levels.
pub fn textured_image(w: usize, h: usize, seed: u64) -> RgbImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    RgbImage::from_fn(w, h, |x, y| {
        std::array::from_fn(|c| {
            let base = (40 * c + 3 * x + 2 * y) as i32 % 200 + 28;
            (base + rng.random_range(-3..=3)).clamp(0, 255) as u8
        })
    })
    .unwrap()
}

pub fn to_pixels(img: &RgbImage) -> oracle::Pixels {
    (0..img.height())
        .map(|y| (0..img.width()).map(|x| img.pixel(x, y)).collect())
        .collect()
}
