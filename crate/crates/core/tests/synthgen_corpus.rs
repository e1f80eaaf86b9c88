use colorstat::evaluation::{ClassifierConfig, ScenarioKind};
use colorstat::features::{extract, ExtractorConfig};
use colorstat::synthgen::{generate_dng_like, generate_real_proxy, GenSpec, ProxySpec};
use colorstat::Label;
use rayon::prelude::*;

fn features(spec: &ProxySpec, n: usize) -> Vec<Vec<f64>> {
    generate_real_proxy(spec, n)
        .unwrap()
        .par_iter()
        .map(|img| {
            extract(img, &ExtractorConfig::default())
                .unwrap()
                .into_values()
        })
        .collect()
}

#[test]
fn proxies_are_inliers_of_a_model_trained_on_other_proxies() {
    let nu = 0.1;
    let train = features(
        &ProxySpec {
            seed: 1,
            ..Default::default()
        },
        2000,
    );
    let held = features(
        &ProxySpec {
            seed: 2,
            ..Default::default()
        },
        500,
    );
    let model = ClassifierConfig::default()
        .train(
            ScenarioKind::ModelUnaware,
            &train,
            &vec![Label::Real; train.len()],
            3,
        )
        .unwrap();
    let inliers = held
        .iter()
        .filter(|x| model.predict(x).unwrap().class.as_label() == Label::Real)
        .count();
    let rate = inliers as f64 / held.len() as f64;
    assert!(rate >= 1.0 - nu - 0.05, "inlier rate {rate}");
}

#[test]
fn generated_pixels_cover_the_range_without_escaping_it() {
    let imgs = generate_dng_like(
        &GenSpec {
            seed: 5,
            ..Default::default()
        },
        4,
    )
    .unwrap();
    let (mut lo, mut hi) = (255u8, 0u8);
    for img in &imgs {
        assert_eq!((img.width(), img.height()), (64, 64));
        for v in img.to_interleaved() {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    assert!(lo < 32 && hi > 224, "{lo}..{hi}");
}
