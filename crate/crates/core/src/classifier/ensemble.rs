use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fld::{train_fld, FldLearner};
use super::{PredictedClass, Prediction};
use crate::error::{Error, Result};
use crate::label::Label;

/// Candidate subspace dimensions for [`search_subspace_dim`].
pub const SUBSPACE_DIM_CANDIDATES: [usize; 5] = [32, 64, 96, 128, 192];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleConfig {
    pub subspace_dim: usize,
    /// Must be odd so the majority vote never ties.
    pub learner_count: usize,
    pub seed: u64,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            subspace_dim: 96,
            learner_count: 51,
            seed: 0,
        }
    }
}

impl EnsembleConfig {
    pub fn validate(&self, feature_dim: usize) -> Result<()> {
        if self.learner_count == 0 || self.learner_count.is_multiple_of(2) {
            return Err(Error::InvalidHyperparameter(format!(
                "learner count {} must be odd and positive",
                self.learner_count
            )));
        }
        if self.subspace_dim == 0 || self.subspace_dim > feature_dim {
            return Err(Error::InvalidHyperparameter(format!(
                "subspace dimension {} outside [1, {feature_dim}]",
                self.subspace_dim
            )));
        }
        Ok(())
    }
}

/// Majority vote over Fisher discriminants trained on random feature subspaces.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleModel {
    pub(crate) feature_dim: usize,
    pub(crate) subspace_dim: usize,
    pub(crate) seed: u64,
    pub(crate) learners: Vec<FldLearner>,
}

impl EnsembleModel {
    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn subspace_dim(&self) -> usize {
        self.subspace_dim
    }

    pub fn learner_count(&self) -> usize {
        self.learners.len()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn learners(&self) -> &[FldLearner] {
        &self.learners
    }

    /// Same model with its learners reordered.
    pub fn with_learners(&self, learners: Vec<FldLearner>) -> Self {
        Self {
            learners,
            ..self.clone()
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        if x.len() != self.feature_dim {
            return Err(Error::DimensionMismatch(format!(
                "feature vector of length {}, model expects {}",
                x.len(),
                self.feature_dim
            )));
        }
        let votes = self
            .learners
            .iter()
            .filter(|l| l.predict(x) == Label::Dng)
            .count();
        Ok(majority(votes, self.learners.len()))
    }
}

fn majority(dng_votes: usize, total: usize) -> Prediction {
    Prediction {
        class: if 2 * dng_votes > total {
            PredictedClass::Dng
        } else {
            PredictedClass::Real
        },
        score: dng_votes as f64 / total as f64,
    }
}

fn check_training_set(x: &[Vec<f64>], y: &[Label]) -> Result<usize> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} samples, {} labels",
            x.len(),
            y.len()
        )));
    }
    let dim = x.first().ok_or(Error::SingleClassInput)?.len();
    if x.iter().any(|row| row.len() != dim) {
        return Err(Error::DimensionMismatch("ragged feature matrix".into()));
    }
    if !(y.contains(&Label::Real) && y.contains(&Label::Dng)) {
        return Err(Error::SingleClassInput);
    }
    Ok(dim)
}

fn draw_subspace(rng: &mut impl Rng, dim: usize, k: usize) -> Vec<usize> {
    let mut s = index::sample(rng, dim, k).into_vec();
    s.sort_unstable();
    s
}

/// Trains `learner_count` discriminants on subspaces drawn up front from the
/// seed, so the result does not depend on how training is scheduled.
pub fn train_ensemble(x: &[Vec<f64>], y: &[Label], cfg: &EnsembleConfig) -> Result<EnsembleModel> {
    let dim = check_training_set(x, y)?;
    cfg.validate(dim)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let subspaces: Vec<Vec<usize>> = (0..cfg.learner_count)
        .map(|_| draw_subspace(&mut rng, dim, cfg.subspace_dim))
        .collect();
    let learners = subspaces
        .par_iter()
        .map(|s| train_fld(x, y, s))
        .collect::<Result<Vec<_>>>()?;
    Ok(EnsembleModel {
        feature_dim: dim,
        subspace_dim: cfg.subspace_dim,
        seed: cfg.seed,
        learners,
    })
}

/// Out-of-bag majority-vote error of an ensemble whose learners each see a
/// bootstrap resample.
pub fn out_of_bag_error(
    x: &[Vec<f64>],
    y: &[Label],
    subspace_dim: usize,
    learner_count: usize,
    seed: u64,
) -> Result<f64> {
    let dim = check_training_set(x, y)?;
    EnsembleConfig {
        subspace_dim,
        learner_count,
        seed,
    }
    .validate(dim)?;
    let n = x.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let plans: Vec<(Vec<usize>, Vec<usize>)> = (0..learner_count)
        .map(|_| {
            let subspace = draw_subspace(&mut rng, dim, subspace_dim);
            let bag = (0..n).map(|_| rng.random_range(0..n)).collect();
            (subspace, bag)
        })
        .collect();

    let per_learner: Vec<Vec<(usize, bool)>> = plans
        .par_iter()
        .map(|(subspace, bag)| {
            let bx: Vec<Vec<f64>> = bag.iter().map(|&i| x[i].clone()).collect();
            let by: Vec<Label> = bag.iter().map(|&i| y[i]).collect();
            let mut in_bag = vec![false; n];
            bag.iter().for_each(|&i| in_bag[i] = true);
            match train_fld(&bx, &by, subspace) {
                Ok(fld) => Ok((0..n)
                    .filter(|&i| !in_bag[i])
                    .map(|i| (i, fld.predict(&x[i]) == Label::Dng))
                    .collect()),
                // A resample can miss a class entirely; that learner abstains.
                Err(Error::SingleClassInput) => Ok(Vec::new()),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;

    let mut votes = vec![(0usize, 0usize); n];
    for (i, dng) in per_learner.into_iter().flatten() {
        votes[i].0 += usize::from(dng);
        votes[i].1 += 1;
    }
    let (wrong, counted) = votes
        .iter()
        .zip(y)
        .filter(|((_, total), _)| *total > 0)
        .fold((0usize, 0usize), |(w, c), (&(dng, total), &label)| {
            let predicted = if 2 * dng > total {
                Label::Dng
            } else {
                Label::Real
            };
            (w + usize::from(predicted != label), c + 1)
        });
    if counted == 0 {
        return Err(Error::InvalidHyperparameter(
            "no out-of-bag samples; increase the learner count".into(),
        ));
    }
    Ok(wrong as f64 / counted as f64)
}

/// Picks the subspace dimension with the lowest out-of-bag error; ties go to
/// the smaller dimension. Candidates above the feature dimension are skipped.
pub fn search_subspace_dim(
    x: &[Vec<f64>],
    y: &[Label],
    candidates: &[usize],
    learner_count: usize,
    seed: u64,
) -> Result<usize> {
    let dim = check_training_set(x, y)?;
    let mut sorted: Vec<usize> = candidates
        .iter()
        .copied()
        .filter(|&k| k >= 1 && k <= dim)
        .collect();
    sorted.sort_unstable();
    sorted.dedup();
    let mut best: Option<(usize, f64)> = None;
    for k in sorted {
        let err = out_of_bag_error(x, y, k, learner_count, seed)?;
        if best.is_none_or(|(_, e)| err < e) {
            best = Some((k, err));
        }
    }
    best.map(|(k, _)| k).ok_or_else(|| {
        Error::InvalidHyperparameter(format!("no candidate subspace dimension fits {dim}"))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, StandardNormal};

    fn clouds(n: usize, dim: usize, shift: f64, seed: u64) -> (Vec<Vec<f64>>, Vec<Label>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = Vec::with_capacity(n);
        let mut y = Vec::with_capacity(n);
        for i in 0..n {
            let label = if i % 2 == 0 { Label::Real } else { Label::Dng };
            let s = if label == Label::Dng { shift } else { 0.0 };
            x.push(
                (0..dim)
                    .map(|_| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        z + s
                    })
                    .collect(),
            );
            y.push(label);
        }
        (x, y)
    }

    #[test]
    fn deterministic_given_seed() {
        let (x, y) = clouds(120, 30, 0.5, 1);
        let cfg = EnsembleConfig {
            subspace_dim: 10,
            learner_count: 7,
            seed: 99,
        };
        let a = train_ensemble(&x, &y, &cfg).unwrap();
        let b = train_ensemble(&x, &y, &cfg).unwrap();
        assert_eq!(a, b);
        let c = train_ensemble(&x, &y, &EnsembleConfig { seed: 100, ..cfg }).unwrap();
        assert_ne!(a.learners[0].subspace, c.learners[0].subspace);
    }

    #[test]
    fn single_learner_matches_fld() {
        let (x, y) = clouds(80, 12, 0.8, 2);
        let cfg = EnsembleConfig {
            subspace_dim: 5,
            learner_count: 1,
            seed: 4,
        };
        let model = train_ensemble(&x, &y, &cfg).unwrap();
        let fld = &model.learners()[0];
        for row in &x {
            let p = model.predict(row).unwrap();
            assert_eq!(p.class.as_label(), fld.predict(row));
        }
    }

    #[test]
    fn vote_fraction() {
        let p = majority(26, 51);
        assert_eq!(p.class, PredictedClass::Dng);
        assert_eq!(p.score, 26.0 / 51.0);
        let p = majority(25, 51);
        assert_eq!(p.class, PredictedClass::Real);
        assert_eq!(majority(51, 51).score, 1.0);
    }

    #[test]
    fn permutation_invariant() {
        let (x, y) = clouds(100, 20, 0.4, 3);
        let cfg = EnsembleConfig {
            subspace_dim: 6,
            learner_count: 9,
            seed: 5,
        };
        let model = train_ensemble(&x, &y, &cfg).unwrap();
        let mut learners = model.learners().to_vec();
        learners.reverse();
        learners.rotate_left(3);
        let shuffled = model.with_learners(learners);
        for row in &x {
            assert_eq!(model.predict(row).unwrap(), shuffled.predict(row).unwrap());
        }
    }

    #[test]
    fn training_points_of_separable_data() {
        let (x, y) = clouds(200, 40, 3.0, 4);
        let model = train_ensemble(
            &x,
            &y,
            &EnsembleConfig {
                subspace_dim: 10,
                learner_count: 11,
                seed: 1,
            },
        )
        .unwrap();
        for (row, &label) in x.iter().zip(&y) {
            assert_eq!(model.predict(row).unwrap().class.as_label(), label);
        }
    }

    #[test]
    fn validation_errors() {
        let (x, y) = clouds(20, 8, 1.0, 5);
        let even = EnsembleConfig {
            subspace_dim: 4,
            learner_count: 4,
            seed: 0,
        };
        assert!(train_ensemble(&x, &y, &even).is_err());
        let wide = EnsembleConfig {
            subspace_dim: 9,
            learner_count: 3,
            seed: 0,
        };
        assert!(train_ensemble(&x, &y, &wide).is_err());
        let model = train_ensemble(
            &x,
            &y,
            &EnsembleConfig {
                subspace_dim: 4,
                learner_count: 3,
                seed: 0,
            },
        )
        .unwrap();
        assert!(matches!(
            model.predict(&[0.0; 7]),
            Err(Error::DimensionMismatch(_))
        ));
        let reals = vec![Label::Real; 20];
        assert!(matches!(
            train_ensemble(
                &x,
                &reals,
                &EnsembleConfig {
                    subspace_dim: 4,
                    learner_count: 3,
                    seed: 0
                }
            ),
            Err(Error::SingleClassInput)
        ));
    }

    #[test]
    fn subspace_search_prefers_informative_dims() {
        // Signal spread thinly over all coordinates: wider subspaces win.
        let (x, y) = clouds(400, 64, 0.25, 6);
        let k = search_subspace_dim(&x, &y, &[2, 48], 15, 8).unwrap();
        assert_eq!(k, 48);
        let err = out_of_bag_error(&x, &y, 48, 15, 8).unwrap();
        assert!(err < 0.2, "{err}");
    }
}
