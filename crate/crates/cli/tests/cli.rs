use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

use colorstat::colorspace::RgbImage;
use colorstat::dataset::save_png;

fn colorstat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_colorstat"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Small synthetic corpus with its feature file, built once.
struct Fixture {
    _dir: tempfile::TempDir,
    root: PathBuf,
    features: PathBuf,
}

fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().join("corpus");
        let out = colorstat(&[
            "synth",
            "--out",
            s(&root),
            "--real",
            "24",
            "--dng",
            "24",
            "--seed",
            "11",
            "--side",
            "32",
        ]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        let features = dir.path().join("features.tsv");
        let out = colorstat(&[
            "extract",
            "--manifest",
            s(&root.join("manifest.tsv")),
            "--out",
            s(&features),
        ]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        Fixture {
            _dir: dir,
            root,
            features,
        }
    })
}

fn manifest_images(root: &Path) -> Vec<(PathBuf, String)> {
    fs::read_to_string(root.join("manifest.tsv"))
        .unwrap()
        .lines()
        .map(|l| {
            let mut f = l.split('\t');
            (root.join(f.next().unwrap()), f.next().unwrap().to_string())
        })
        .collect()
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(code(&colorstat(&["--help"])), 0);
    assert_eq!(code(&colorstat(&["--version"])), 0);
    assert_eq!(code(&colorstat(&["detect", "--help"])), 0);
}

#[test]
fn usage_errors_exit_64() {
    assert_eq!(code(&colorstat(&["frobnicate"])), 64);
    assert_eq!(
        code(&colorstat(&[
            "--format", "v9", "synth", "--out", "x", "--seed", "1"
        ])),
        64
    );
    assert_eq!(code(&colorstat(&["synth", "--out", "x", "--dng", "1"])), 64);
    let dir = tempfile::tempdir().unwrap();
    let out = colorstat(&[
        "--workers",
        "0",
        "synth",
        "--out",
        s(dir.path()),
        "--dng",
        "1",
        "--seed",
        "1",
    ]);
    assert_eq!(code(&out), 64);
}

#[test]
fn unknown_config_keys_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "[classifier.ensemble]\nlearners = 3\n").unwrap();
    let out = colorstat(&[
        "--config",
        s(&cfg),
        "synth",
        "--out",
        s(dir.path()),
        "--dng",
        "1",
        "--seed",
        "1",
    ]);
    assert_eq!(code(&out), 64);
    assert!(stderr(&out).contains("learners"), "{}", stderr(&out));
}

#[test]
fn missing_model_exits_3_with_a_diagnostic() {
    let f = fixture();
    let (img, _) = &manifest_images(&f.root)[0];
    let out = colorstat(&["detect", "--model", "/nonexistent/model.txt", s(img)]);
    assert_eq!(code(&out), 3);
    assert!(
        stderr(&out).contains("/nonexistent/model.txt"),
        "{}",
        stderr(&out)
    );
}

#[test]
fn corrupt_model_exits_3() {
    let f = fixture();
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("model.txt");
    fs::write(&model, "colorstat-model v1\nnonsense\n").unwrap();
    let (img, _) = &manifest_images(&f.root)[0];
    assert_eq!(
        code(&colorstat(&["detect", "--model", s(&model), s(img)])),
        3
    );
}

#[test]
fn reextraction_is_byte_identical_across_worker_counts() {
    let f = fixture();
    let dir = tempfile::tempdir().unwrap();
    let manifest = f.root.join("manifest.tsv");
    let one = dir.path().join("one.tsv");
    let three = dir.path().join("three.tsv");
    for (workers, out) in [("1", &one), ("3", &three)] {
        let o = colorstat(&[
            "--workers",
            workers,
            "extract",
            "--manifest",
            s(&manifest),
            "--out",
            s(out),
        ]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    let reference = fs::read(&f.features).unwrap();
    assert_eq!(fs::read(&one).unwrap(), reference);
    assert_eq!(fs::read(&three).unwrap(), reference);
}

#[test]
fn training_is_deterministic_and_detect_recovers_training_labels() {
    let f = fixture();
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.model");
    let b = dir.path().join("b.model");
    for m in [&a, &b] {
        let o = colorstat(&[
            "train",
            "--features",
            s(&f.features),
            "--kind",
            "ensemble",
            "--seed",
            "5",
            "--out",
            s(m),
        ]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

    let images = manifest_images(&f.root);
    let mut args = vec!["detect".to_string(), "--model".into(), s(&a).into()];
    args.extend(images.iter().map(|(p, _)| s(p).to_string()));
    let args: Vec<&str> = args.iter().map(String::as_str).collect();
    let out = colorstat(&args);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let stdout = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = stdout.lines().collect();
    assert_eq!(rows.len(), images.len());
    for (row, (path, label)) in rows.iter().zip(&images) {
        let fields: Vec<&str> = row.split('\t').collect();
        assert_eq!(fields[0], s(path));
        assert_eq!(fields[1], label, "{row}");
        assert!(fields[2].parse::<f64>().unwrap().is_finite());
    }
}

#[test]
fn unreadable_images_are_skipped_with_exit_2() {
    let f = fixture();
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("m.model");
    let o = colorstat(&[
        "train",
        "--features",
        s(&f.features),
        "--kind",
        "ensemble",
        "--seed",
        "1",
        "--out",
        s(&model),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let bad = dir.path().join("bad.png");
    fs::write(&bad, b"not an image").unwrap();
    let tiny = dir.path().join("tiny.png");
    save_png(&RgbImage::from_interleaved(2, 2, &[90; 12]).unwrap(), &tiny).unwrap();
    let (good, _) = &manifest_images(&f.root)[0];

    let out = colorstat(&["detect", "--model", s(&model), s(&tiny), s(good), s(&bad)]);
    assert_eq!(code(&out), 2);
    let err = stderr(&out);
    assert!(err.contains("bad.png") && err.contains("tiny.png"), "{err}");
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(stdout.lines().count(), 1);
    assert!(stdout.starts_with(s(good)));
}

#[test]
fn extract_with_only_failures_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.png");
    fs::write(&bad, b"junk").unwrap();
    let out_file = dir.path().join("f.tsv");
    let out = colorstat(&["extract", "--out", s(&out_file), s(&bad)]);
    assert_eq!(code(&out), 2);
    assert!(!out_file.exists());
}

#[test]
fn reports_echo_the_configuration() {
    let f = fixture();
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("settings.toml");
    fs::write(
        &cfg,
        "[classifier.ensemble]\nsubspace_dim = 32\nlearner_count = 11\n",
    )
    .unwrap();

    let eval = dir.path().join("eval.json");
    let out = colorstat(&[
        "--config",
        s(&cfg),
        "evaluate",
        "--scenario",
        "sample-aware",
        "--train",
        s(&f.features),
        "--seed",
        "3",
        "--repetitions",
        "2",
        "--out",
        s(&eval),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(
        stdout.lines().next(),
        Some("Detector\tTesting set\tFPR%\tFNR%\tACC%")
    );

    let analyze = dir.path().join("analyze.json");
    let out = colorstat(&[
        "--config",
        s(&cfg),
        "analyze",
        "--manifest",
        s(&f.root.join("manifest.tsv")),
        "--seed",
        "3",
        "--out",
        s(&analyze),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));

    for path in [&eval, &analyze] {
        let json: serde_json::Value = serde_json::from_slice(&fs::read(path).unwrap()).unwrap();
        let config = &json["config"];
        assert_eq!(config["file"], s(&cfg));
        assert!(config["contents"]
            .as_str()
            .unwrap()
            .contains("learner_count = 11"));
        assert_eq!(
            config["effective"]["classifier"]["ensemble"]["learner_count"],
            11
        );
        assert_eq!(
            config["effective"]["classifier"]["ensemble"]["subspace_dim"],
            32
        );
    }
}
