use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Component, Path, PathBuf};

use colorstat::analysis::{discernibility_report, SiBinning};
use colorstat::classifier::{ModelHeader, TrainedModel};
use colorstat::colorspace::RgbImage;
use colorstat::dataset::{
    center_crop_resize, load_image, save_png, split_indices, CorpusManifest, ManifestEntry,
    PreprocessSpec, SplitSpec, DECODER,
};
use colorstat::evaluation::{
    run_scenario, LabeledData, ScenarioConfig, ScenarioKind, TABLE_HEADER,
};
use colorstat::features::file::{FeatureRecord, FeatureSet};
use colorstat::features::{extract as extract_features, ExtractorConfig};
use colorstat::synthgen::{generate_dng_like, generate_real_proxy, GenSpec, ProxySpec};
use colorstat::Label;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::ConfigEcho;
use crate::exit::{self, Failure};
use crate::{
    AnalyzeArgs, DetectArgs, EvaluateArgs, ExtractArgs, ModelKind, PreprocessArgs, Scenario,
    SynthArgs, TrainArgs,
};

const MANIFEST_NAME: &str = "manifest.tsv";
const RESIZE_KERNEL: &str = "bilinear, half-pixel centers";

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)
            .map_err(|e| Failure::io(format!("cannot create {}: {e}", parent.display())))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::io(format!("cannot create {}: {e}", path.display())))
}

fn create_dir(path: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(path)
        .map_err(|e| Failure::io(format!("cannot create {}: {e}", path.display())))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), Failure> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| Failure::io(e.to_string()))?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

fn read_manifest(path: &Path) -> Result<(CorpusManifest, PathBuf), Failure> {
    let manifest = CorpusManifest::read(path)
        .map_err(|e| Failure::from(e).prefixed(&path.display().to_string()))?;
    let base = path.parent().unwrap_or(Path::new("")).to_path_buf();
    Ok((manifest, base))
}

fn read_features(path: &Path) -> Result<FeatureSet, Failure> {
    let file = File::open(path)
        .map_err(|e| Failure::io(format!("cannot open {}: {e}", path.display())))?;
    FeatureSet::read_from(BufReader::new(file))
        .map_err(|e| Failure::from(e).prefixed(&path.display().to_string()))
}

impl Failure {
    fn prefixed(mut self, what: &str) -> Self {
        self.message = format!("{what}: {}", self.message);
        self
    }
}

/// Prints per-item failures and turns them into the partial-failure code.
fn finish(failures: &[(String, String)], succeeded: usize) -> u8 {
    for (item, reason) in failures {
        eprintln!("colorstat: skipped {item}: {reason}");
    }
    if failures.is_empty() {
        exit::OK
    } else {
        eprintln!(
            "colorstat: {} of {} inputs failed",
            failures.len(),
            failures.len() + succeeded
        );
        exit::PARTIAL
    }
}

/// Successes with their input index, and `(name, reason)` failures.
type Outcomes<U> = (Vec<(usize, U)>, Vec<(String, String)>);

/// Runs `f` over `items` in parallel, keeping input order and separating
/// failures from successes.
fn each<T: Sync, U: Send>(
    items: &[T],
    name: impl Fn(&T) -> String + Sync,
    f: impl Fn(&T) -> colorstat::Result<U> + Sync,
) -> Outcomes<U> {
    let results: Vec<_> = items.par_iter().map(&f).collect();
    let mut ok = Vec::new();
    let mut failed = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(v) => ok.push((i, v)),
            Err(e) => failed.push((name(&items[i]), e.to_string())),
        }
    }
    (ok, failed)
}

pub fn synth(args: &SynthArgs, config: &ConfigEcho) -> Result<u8, Failure> {
    if args.real + args.dng == 0 {
        return Err(Failure::usage(
            "nothing to generate: pass --real and/or --dng",
        ));
    }
    let settings = &config.effective;
    let generator = GenSpec {
        seed: args.seed,
        out_side: args.side.unwrap_or(settings.generator.out_side),
        ..settings.generator.clone()
    };
    let proxy = ProxySpec {
        seed: args.seed.wrapping_add(1),
        out_side: args.side.unwrap_or(settings.proxy.out_side),
        ..settings.proxy.clone()
    };
    generator.validate()?;
    proxy.validate()?;

    let mut entries = Vec::new();
    let mut write_set = |imgs: Vec<RgbImage>, label: Label, source: &str| -> Result<(), Failure> {
        let dir = label.as_str();
        create_dir(&args.out.join(dir))?;
        let paths: Vec<PathBuf> = (0..imgs.len())
            .map(|i| PathBuf::from(format!("{dir}/{dir}_{i:05}.png")))
            .collect();
        imgs.par_iter()
            .zip(&paths)
            .map(|(img, p)| save_png(img, &args.out.join(p)))
            .collect::<colorstat::Result<Vec<()>>>()?;
        entries.extend(paths.into_iter().map(|path| ManifestEntry {
            path,
            label,
            source: source.to_string(),
        }));
        Ok(())
    };
    if args.dng > 0 {
        write_set(
            generate_dng_like(&generator, args.dng)?,
            Label::Dng,
            "generator",
        )?;
    }
    if args.real > 0 {
        write_set(
            generate_real_proxy(&proxy, args.real)?,
            Label::Real,
            "proxy",
        )?;
    }
    let manifest = CorpusManifest::new(entries)?;
    manifest.write_to(create(&args.out.join(MANIFEST_NAME))?)?;
    eprintln!(
        "colorstat: wrote {} images and {}",
        manifest.len(),
        args.out.join(MANIFEST_NAME).display()
    );
    Ok(exit::OK)
}

/// Output location of a manifest path under `out`, never outside it.
fn output_path(out: &Path, path: &Path) -> PathBuf {
    let relative: PathBuf = path
        .components()
        .filter(|c| matches!(c, Component::Normal(_)))
        .collect();
    out.join(relative.with_extension("png"))
}

pub fn preprocess(args: &PreprocessArgs) -> Result<u8, Failure> {
    if args.side < 4 {
        return Err(Failure::usage("--side must be at least 4"));
    }
    if args.crop < 2 {
        return Err(Failure::usage("--crop must be at least 2"));
    }
    let spec = PreprocessSpec {
        crop_side: args.crop,
        out_side: args.side,
    };
    let (manifest, base) = read_manifest(&args.manifest)?;
    let resolved = manifest.resolved(&base);
    create_dir(&args.out)?;

    let (ok, failed) = each(
        &resolved,
        |e| e.path.display().to_string(),
        |e| {
            let target = output_path(&args.out, &e.path);
            if target == e.path {
                return Err(colorstat::Error::InvalidHyperparameter(
                    "output would overwrite its input".into(),
                ));
            }
            if let Some(parent) = target.parent() {
                std::fs::create_dir_all(parent)?;
            }
            save_png(&center_crop_resize(&load_image(&e.path)?, spec)?, &target)?;
            Ok(())
        },
    );
    let entries = ok
        .iter()
        .map(|&(i, ())| {
            let e = &manifest.entries()[i];
            let relative = output_path(Path::new(""), &e.path);
            ManifestEntry {
                path: relative,
                ..e.clone()
            }
        })
        .collect();
    let out_manifest = CorpusManifest::new(entries)?;
    out_manifest.write_to(create(&args.out.join(MANIFEST_NAME))?)?;
    eprintln!(
        "colorstat: {} images cropped to {} and resized to {} ({RESIZE_KERNEL}; decoder {DECODER})",
        ok.len(),
        args.crop,
        args.side
    );
    Ok(finish(&failed, ok.len()))
}

pub fn extract(args: &ExtractArgs, config: &ConfigEcho) -> Result<u8, Failure> {
    let cfg = &config.effective.extractor;
    cfg.validate()?;
    // (id, file to read, label)
    let items: Vec<(String, PathBuf, Option<Label>)> = match &args.manifest {
        Some(path) => {
            let (manifest, base) = read_manifest(path)?;
            manifest
                .entries()
                .iter()
                .zip(manifest.resolved(&base))
                .map(|(e, r)| (e.path.display().to_string(), r.path, Some(e.label)))
                .collect()
        }
        None => args
            .images
            .iter()
            .map(|p| (p.display().to_string(), p.clone(), None))
            .collect(),
    };
    for (id, _, _) in &items {
        if id.contains(['\t', '\n', '\r']) {
            return Err(Failure::usage(format!(
                "path {id:?} contains a tab or newline"
            )));
        }
    }

    let (ok, failed) = each(
        &items,
        |(id, _, _)| id.clone(),
        |(_, path, _)| Ok(extract_features(&load_image(path)?, cfg)?.into_values()),
    );
    if ok.is_empty() {
        finish(&failed, 0);
        eprintln!("colorstat: no image could be processed; nothing written");
        return Ok(exit::PARTIAL);
    }
    let mut set = FeatureSet::new(cfg.dimension());
    for (i, values) in ok.iter().cloned() {
        let (id, _, label) = &items[i];
        set.push(FeatureRecord {
            id: id.clone(),
            label: *label,
            values,
        })?;
    }
    set.write_to(create(&args.out)?)?;
    eprintln!(
        "colorstat: {} feature vectors of dimension {} written to {} (decoder {DECODER})",
        ok.len(),
        cfg.dimension(),
        args.out.display()
    );
    Ok(finish(&failed, ok.len()))
}

#[derive(Serialize)]
struct AnalyzeReport<'a> {
    format: &'static str,
    command: &'static str,
    manifest: &'a Path,
    seed: u64,
    mean_fraction: f64,
    decoder: &'static str,
    images: ClassCounts,
    config: &'a ConfigEcho,
    report: colorstat::analysis::DiscernibilityReport,
}

#[derive(Serialize)]
struct ClassCounts {
    real_mean: usize,
    dng_mean: usize,
    real_scored: usize,
    dng_scored: usize,
    failed: usize,
}

pub fn analyze(args: &AnalyzeArgs, config: &ConfigEcho) -> Result<u8, Failure> {
    let split = SplitSpec {
        train_fraction: args.mean_fraction,
        repetitions: 1,
        seed: args.seed,
    };
    split.validate()?;
    let (manifest, base) = read_manifest(&args.manifest)?;
    let resolved = manifest.resolved(&base);
    let (ok, failed) = each(
        &resolved,
        |e| e.path.display().to_string(),
        |e| load_image(&e.path),
    );

    let labels: Vec<Label> = ok.iter().map(|&(i, _)| resolved[i].label).collect();
    let (mean_idx, scored_idx) = split_indices(&labels, &split, 0)?;
    let pick = |idx: &[usize], class: Label| -> Vec<RgbImage> {
        idx.iter()
            .filter(|&&k| labels[k] == class)
            .map(|&k| ok[k].1.clone())
            .collect()
    };
    let (real_mean, dng_mean) = (pick(&mean_idx, Label::Real), pick(&mean_idx, Label::Dng));
    let (real_scored, dng_scored) = (
        pick(&scored_idx, Label::Real),
        pick(&scored_idx, Label::Dng),
    );
    let report = discernibility_report(
        &real_mean,
        &dng_mean,
        &real_scored,
        &dng_scored,
        SiBinning::default(),
    )?;

    let mut stdout = std::io::stdout().lock();
    writeln!(stdout, "component\td_chi2\tskipped")?;
    for row in &report.rows {
        writeln!(
            stdout,
            "{}\t{:.6}\t{}",
            row.target.name(),
            row.d_chi2,
            row.skipped
        )?;
    }
    if let Some(out) = &args.out {
        write_json(
            out,
            &AnalyzeReport {
                format: "v1",
                command: "analyze",
                manifest: &args.manifest,
                seed: args.seed,
                mean_fraction: args.mean_fraction,
                decoder: DECODER,
                images: ClassCounts {
                    real_mean: real_mean.len(),
                    dng_mean: dng_mean.len(),
                    real_scored: real_scored.len(),
                    dng_scored: dng_scored.len(),
                    failed: failed.len(),
                },
                config,
                report,
            },
        )?;
    }
    Ok(finish(&failed, ok.len()))
}

/// Labeled records only, with a note about the others.
fn labeled(set: &FeatureSet, path: &Path) -> LabeledData {
    let mut x = Vec::new();
    let mut y = Vec::new();
    for r in &set.records {
        if let Some(label) = r.label {
            x.push(r.values.clone());
            y.push(label);
        }
    }
    let skipped = set.records.len() - x.len();
    if skipped > 0 {
        eprintln!(
            "colorstat: ignoring {skipped} unlabeled records in {}",
            path.display()
        );
    }
    LabeledData { x, y }
}

fn check_dimension(set: &FeatureSet, cfg: &ExtractorConfig, path: &Path) -> Result<(), Failure> {
    if set.dim != cfg.dimension() {
        return Err(Failure::usage(format!(
            "{} holds {}-dimensional features but the extractor settings give {}",
            path.display(),
            set.dim,
            cfg.dimension()
        )));
    }
    Ok(())
}

pub fn train(args: &TrainArgs, config: &ConfigEcho) -> Result<u8, Failure> {
    let settings = &config.effective;
    let set = read_features(&args.features)?;
    check_dimension(&set, &settings.extractor, &args.features)?;
    let data = labeled(&set, &args.features);

    let (kind, x, y) = match args.kind {
        ModelKind::Ensemble => (ScenarioKind::SampleAware, data.x, data.y),
        ModelKind::Oneclass => {
            let (x, y): (Vec<_>, Vec<_>) = data
                .x
                .into_iter()
                .zip(data.y)
                .filter(|(_, l)| *l == Label::Real)
                .unzip();
            (ScenarioKind::ModelUnaware, x, y)
        }
    };
    let model = settings
        .classifier
        .train(kind, &x, &y, args.seed)
        .map_err(Failure::model)?;
    let header = ModelHeader {
        extractor: settings.extractor.clone(),
    };
    let mut out = create(&args.out)?;
    model.save(&header, &mut out)?;
    out.flush()?;
    eprintln!(
        "colorstat: {} model trained on {} vectors written to {}",
        model.kind(),
        x.len(),
        args.out.display()
    );
    Ok(exit::OK)
}

#[derive(Serialize)]
struct EvaluateReport<'a> {
    format: &'static str,
    command: &'static str,
    train: &'a Path,
    test: Option<&'a Path>,
    seed: u64,
    config: &'a ConfigEcho,
    report: colorstat::evaluation::EvalReport,
}

pub fn evaluate(args: &EvaluateArgs, config: &ConfigEcho) -> Result<u8, Failure> {
    let settings = &config.effective;
    let mut split = SplitSpec {
        seed: args.seed,
        ..settings.split
    };
    if let Some(r) = args.repetitions {
        split.repetitions = r;
    }
    if let Some(f) = args.train_fraction {
        split.train_fraction = f;
    }
    split.validate()?;
    let kind = match args.scenario {
        Scenario::SampleAware => ScenarioKind::SampleAware,
        Scenario::ModelAware => ScenarioKind::ModelAware,
        Scenario::ModelUnaware => ScenarioKind::ModelUnaware,
    };
    match (kind, &args.test) {
        (ScenarioKind::SampleAware, Some(_)) => {
            return Err(Failure::usage(
                "sample-aware evaluation takes no --test file",
            ))
        }
        (ScenarioKind::ModelAware, None) => {
            return Err(Failure::usage("model-aware evaluation needs --test"))
        }
        _ => {}
    }

    let train_set = read_features(&args.train)?;
    check_dimension(&train_set, &settings.extractor, &args.train)?;
    let mut train = labeled(&train_set, &args.train);
    let mut test = match &args.test {
        Some(path) => {
            let set = read_features(path)?;
            check_dimension(&set, &settings.extractor, path)?;
            Some(labeled(&set, path))
        }
        None => None,
    };
    if kind == ScenarioKind::ModelUnaware {
        // Generated images in the training file are never trained on; they
        // join the test set instead.
        let mut moved = LabeledData::default();
        let mut kept = LabeledData::default();
        for (x, y) in train.x.into_iter().zip(train.y) {
            let dst = if y == Label::Real {
                &mut kept
            } else {
                &mut moved
            };
            dst.x.push(x);
            dst.y.push(y);
        }
        train = kept;
        if !moved.is_empty() {
            let t = test.get_or_insert_with(LabeledData::default);
            t.x.extend(moved.x);
            t.y.extend(moved.y);
        }
    }

    let testing_set = args.testing_set.clone().unwrap_or_else(|| {
        args.test
            .as_deref()
            .unwrap_or(&args.train)
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default()
    });
    let scenario = ScenarioConfig {
        kind,
        split,
        classifier: settings.classifier.clone(),
        detector: args.detector.clone(),
        testing_set,
    };
    let report = run_scenario(&scenario, &train, test.as_ref()).map_err(|e| match e {
        colorstat::Error::SingleClassInput => Failure::model(e),
        e => Failure::from(e),
    })?;

    let mut stdout = std::io::stdout().lock();
    writeln!(stdout, "{TABLE_HEADER}")?;
    writeln!(stdout, "{}", report.table_row())?;
    if let Some(out) = &args.out {
        write_json(
            out,
            &EvaluateReport {
                format: "v1",
                command: "evaluate",
                train: &args.train,
                test: args.test.as_deref(),
                seed: args.seed,
                config,
                report,
            },
        )?;
    }
    Ok(exit::OK)
}

pub fn detect(args: &DetectArgs) -> Result<u8, Failure> {
    let file = File::open(&args.model).map_err(|e| {
        Failure::model(colorstat::Error::Io(e)).prefixed(&args.model.display().to_string())
    })?;
    let (model, header) = TrainedModel::load(BufReader::new(file))
        .map_err(|e| Failure::model(e).prefixed(&args.model.display().to_string()))?;
    let cfg = &header.extractor;
    if model.feature_dim() != cfg.dimension() {
        return Err(Failure::model(colorstat::Error::DimensionMismatch(
            format!(
                "model expects {} features but its extractor settings give {}",
                model.feature_dim(),
                cfg.dimension()
            ),
        )));
    }

    let (ok, failed) = each(
        &args.images,
        |p| p.display().to_string(),
        |p| model.predict(extract_features(&load_image(p)?, cfg)?.values()),
    );
    let mut stdout = std::io::stdout().lock();
    for (i, pred) in &ok {
        writeln!(
            stdout,
            "{}\t{}\t{}",
            args.images[*i].display(),
            pred.class.as_label(),
            pred.score
        )?;
    }
    Ok(finish(&failed, ok.len()))
}
