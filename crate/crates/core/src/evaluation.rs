//! Detection scenarios and error rates.
//!
//! Generated images are the positive class: a false positive is a camera
//! image flagged as generated, a false negative is a generated image that
//! passes as real.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::{
    grid_search_gamma, power_of_two_grid, search_subspace_dim, train_ensemble, train_oneclass,
    EnsembleConfig, TrainedModel, SUBSPACE_DIM_CANDIDATES,
};
use crate::dataset::{split_indices, SplitSpec};
use crate::error::{Error, Result};
use crate::label::Label;

/// Raw outcome counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Counts {
    pub true_positive: usize,
    pub true_negative: usize,
    pub false_positive: usize,
    pub false_negative: usize,
}

impl Counts {
    pub fn tally(preds: &[Label], truths: &[Label]) -> Result<Self> {
        if preds.len() != truths.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} predictions for {} labels",
                preds.len(),
                truths.len()
            )));
        }
        let mut c = Counts::default();
        for (&p, &t) in preds.iter().zip(truths) {
            match (t, p) {
                (Label::Dng, Label::Dng) => c.true_positive += 1,
                (Label::Real, Label::Real) => c.true_negative += 1,
                (Label::Real, Label::Dng) => c.false_positive += 1,
                (Label::Dng, Label::Real) => c.false_negative += 1,
            }
        }
        Ok(c)
    }

    pub fn positives(&self) -> usize {
        self.true_positive + self.false_negative
    }

    pub fn negatives(&self) -> usize {
        self.true_negative + self.false_positive
    }

    pub fn metrics(&self) -> Result<Metrics> {
        if self.negatives() == 0 {
            return Err(Error::MissingClass(
                "no real images among the truths".into(),
            ));
        }
        if self.positives() == 0 {
            return Err(Error::MissingClass("no dng images among the truths".into()));
        }
        let total = (self.positives() + self.negatives()) as f64;
        Ok(Metrics {
            fpr: self.false_positive as f64 / self.negatives() as f64,
            fnr: self.false_negative as f64 / self.positives() as f64,
            acc: (self.true_positive + self.true_negative) as f64 / total,
        })
    }
}

/// Error rates, all in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Metrics {
    pub fpr: f64,
    pub fnr: f64,
    pub acc: f64,
}

/// False positive rate, false negative rate and accuracy.
pub fn confusion(preds: &[Label], truths: &[Label]) -> Result<Metrics> {
    Counts::tally(preds, truths)?.metrics()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    /// Split one labeled corpus; train and test the binary ensemble on it.
    SampleAware,
    /// Train the ensemble on one corpus and test on another.
    ModelAware,
    /// Train a one-class model on camera images only.
    ModelUnaware,
}

impl ScenarioKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioKind::SampleAware => "sample_aware",
            ScenarioKind::ModelAware => "model_aware",
            ScenarioKind::ModelUnaware => "model_unaware",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OneClassConfig {
    pub nu: f64,
    /// Fixed kernel width; `None` searches `2^gamma_exponents.0 ..= 2^gamma_exponents.1`.
    pub gamma: Option<f64>,
    pub gamma_exponents: (i32, i32),
    pub holdout_fraction: f64,
}

impl Default for OneClassConfig {
    fn default() -> Self {
        Self {
            nu: 0.1,
            gamma: None,
            gamma_exponents: (-5, 15),
            holdout_fraction: 0.2,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierConfig {
    pub ensemble: EnsembleConfig,
    /// Choose the subspace dimension by out-of-bag error on each training set.
    pub search_subspace: bool,
    pub oneclass: OneClassConfig,
}

impl ClassifierConfig {
    /// Trains the model a scenario calls for. `seed` drives every random
    /// choice made here.
    pub fn train(
        &self,
        kind: ScenarioKind,
        x: &[Vec<f64>],
        y: &[Label],
        seed: u64,
    ) -> Result<TrainedModel> {
        match kind {
            ScenarioKind::SampleAware | ScenarioKind::ModelAware => {
                let mut cfg = EnsembleConfig {
                    seed,
                    ..self.ensemble
                };
                if self.search_subspace {
                    cfg.subspace_dim = search_subspace_dim(
                        x,
                        y,
                        &SUBSPACE_DIM_CANDIDATES,
                        cfg.learner_count,
                        seed,
                    )?;
                }
                train_ensemble(x, y, &cfg).map(TrainedModel::Ensemble)
            }
            ScenarioKind::ModelUnaware => {
                if y.iter().any(|&l| l != Label::Real) {
                    return Err(Error::InvalidHyperparameter(
                        "one-class training data must be camera images only".into(),
                    ));
                }
                let oc = &self.oneclass;
                let gamma = match oc.gamma {
                    Some(g) => g,
                    None => {
                        let mut shuffled = x.to_vec();
                        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
                        let (lo, hi) = oc.gamma_exponents;
                        grid_search_gamma(
                            &shuffled,
                            oc.nu,
                            &power_of_two_grid(lo, hi),
                            oc.holdout_fraction,
                        )?
                    }
                };
                train_oneclass(x, oc.nu, gamma).map(TrainedModel::OneClass)
            }
        }
    }
}

/// Feature vectors with ground-truth labels.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabeledData {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<Label>,
}

impl LabeledData {
    pub fn new(x: Vec<Vec<f64>>, y: Vec<Label>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} vectors for {} labels",
                x.len(),
                y.len()
            )));
        }
        Ok(Self { x, y })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    fn subset(&self, idx: &[usize]) -> (Vec<Vec<f64>>, Vec<Label>) {
        (
            idx.iter().map(|&i| self.x[i].clone()).collect(),
            idx.iter().map(|&i| self.y[i]).collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    pub split: SplitSpec,
    pub classifier: ClassifierConfig,
    /// Row labels for the results table.
    pub detector: String,
    pub testing_set: String,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            kind: ScenarioKind::SampleAware,
            split: SplitSpec::default(),
            classifier: ClassifierConfig::default(),
            detector: "colorstat".into(),
            testing_set: String::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RepetitionResult {
    pub repetition: usize,
    pub train_count: usize,
    pub counts: Counts,
    pub metrics: Metrics,
    /// Kernel width used by a one-class model.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    /// Subspace dimension used by an ensemble.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subspace_dim: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub config: ScenarioConfig,
    pub repetitions: Vec<RepetitionResult>,
    /// Unweighted mean over repetitions.
    pub mean: Metrics,
    /// Sample standard deviation over repetitions (zero for one repetition).
    pub std: Metrics,
    /// Wall-clock seconds; the only nondeterministic field.
    pub elapsed_seconds: f64,
}

pub const TABLE_HEADER: &str = "Detector\tTesting set\tFPR%\tFNR%\tACC%";

impl EvalReport {
    /// One results-table row, percentages with two decimals.
    pub fn table_row(&self) -> String {
        format!(
            "{}\t{}\t{:.2}\t{:.2}\t{:.2}",
            self.config.detector,
            self.config.testing_set,
            100.0 * self.mean.fpr,
            100.0 * self.mean.fnr,
            100.0 * self.mean.acc
        )
    }
}

/// Seed of the model trained in repetition `rep`.
pub fn repetition_seed(seed: u64, rep: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::MAX - rep as u64);
    rng.next_u64()
}

fn aggregate(reps: &[RepetitionResult]) -> (Metrics, Metrics) {
    let n = reps.len() as f64;
    let pick = |f: fn(&Metrics) -> f64| {
        let vals: Vec<f64> = reps.iter().map(|r| f(&r.metrics)).collect();
        let mean = vals.iter().sum::<f64>() / n;
        let std = if reps.len() > 1 {
            (vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        (mean, std)
    };
    let (fpr, fpr_s) = pick(|m| m.fpr);
    let (fnr, fnr_s) = pick(|m| m.fnr);
    let (acc, acc_s) = pick(|m| m.acc);
    (
        Metrics { fpr, fnr, acc },
        Metrics {
            fpr: fpr_s,
            fnr: fnr_s,
            acc: acc_s,
        },
    )
}

fn evaluate(model: &TrainedModel, x: &[Vec<f64>], y: &[Label]) -> Result<Counts> {
    let preds = x
        .iter()
        .map(|v| model.predict(v).map(|p| p.class.as_label()))
        .collect::<Result<Vec<_>>>()?;
    Counts::tally(&preds, y)
}

fn describe(model: &TrainedModel) -> (Option<f64>, Option<usize>) {
    match model {
        TrainedModel::Ensemble(m) => (None, Some(m.subspace_dim())),
        TrainedModel::OneClass(m) => (Some(m.gamma()), None),
    }
}

/// Runs a detection scenario.
///
/// * sample-aware: each repetition splits `train` and tests on the held-out part;
///   `test` must be `None`.
/// * model-aware: each repetition trains on all of `train` (with its own
///   ensemble seed) and tests on all of `test`.
/// * model-unaware: `train` holds camera images only. Each repetition trains
///   on a split of it and tests on the held-out camera images plus all of `test`;
///   outliers count as generated.
pub fn run_scenario(
    cfg: &ScenarioConfig,
    train: &LabeledData,
    test: Option<&LabeledData>,
) -> Result<EvalReport> {
    let start = Instant::now();
    cfg.split.validate()?;
    if train.is_empty() {
        return Err(Error::MissingClass("empty training corpus".into()));
    }
    let kind = cfg.kind;
    match kind {
        ScenarioKind::SampleAware => {
            if test.is_some() {
                return Err(Error::InvalidHyperparameter(
                    "sample-aware evaluation splits a single corpus".into(),
                ));
            }
            require_both(&train.y, "training")?;
        }
        ScenarioKind::ModelAware => {
            require_both(&train.y, "training")?;
            let t = test.ok_or_else(|| {
                Error::InvalidHyperparameter("model-aware evaluation needs a test corpus".into())
            })?;
            require_both(&t.y, "test")?;
        }
        ScenarioKind::ModelUnaware => {
            if train.y.iter().any(|&l| l != Label::Real) {
                return Err(Error::InvalidHyperparameter(
                    "model-unaware training corpus must contain camera images only".into(),
                ));
            }
        }
    }

    let reps: Vec<RepetitionResult> = (0..cfg.split.repetitions)
        .into_par_iter()
        .map(|rep| {
            let seed = repetition_seed(cfg.split.seed, rep);
            let (train_x, train_y, test_x, test_y) = match kind {
                ScenarioKind::SampleAware => {
                    let (tr, te) = split_indices(&train.y, &cfg.split, rep)?;
                    let (a, b) = train.subset(&tr);
                    let (c, d) = train.subset(&te);
                    (a, b, c, d)
                }
                ScenarioKind::ModelAware => {
                    let t = test.expect("checked above");
                    (train.x.clone(), train.y.clone(), t.x.clone(), t.y.clone())
                }
                ScenarioKind::ModelUnaware => {
                    let (tr, te) = split_indices(&train.y, &cfg.split, rep)?;
                    let (a, b) = train.subset(&tr);
                    let (mut c, mut d) = train.subset(&te);
                    if let Some(t) = test {
                        c.extend(t.x.iter().cloned());
                        d.extend(t.y.iter().copied());
                    }
                    (a, b, c, d)
                }
            };
            let model = cfg.classifier.train(kind, &train_x, &train_y, seed)?;
            let counts = evaluate(&model, &test_x, &test_y)?;
            let (gamma, subspace_dim) = describe(&model);
            Ok(RepetitionResult {
                repetition: rep,
                train_count: train_x.len(),
                metrics: counts.metrics()?,
                counts,
                gamma,
                subspace_dim,
            })
        })
        .collect::<Result<_>>()?;

    let (mean, std) = aggregate(&reps);
    Ok(EvalReport {
        config: cfg.clone(),
        repetitions: reps,
        mean,
        std,
        elapsed_seconds: start.elapsed().as_secs_f64(),
    })
}

fn require_both(y: &[Label], which: &str) -> Result<()> {
    for class in [Label::Real, Label::Dng] {
        if !y.contains(&class) {
            return Err(Error::MissingClass(format!(
                "no {class} images in the {which} corpus"
            )));
        }
    }
    Ok(())
}
