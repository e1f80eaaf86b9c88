//! Binary (ensemble of Fisher discriminants) and one-class (Gaussian-kernel
//! novelty detector) classifiers over feature vectors.

mod ensemble;
mod fld;
mod model_file;
mod oneclass;

use serde::Serialize;

pub use ensemble::{
    out_of_bag_error, search_subspace_dim, train_ensemble, EnsembleConfig, EnsembleModel,
    SUBSPACE_DIM_CANDIDATES,
};
pub use fld::{train_fld, FldLearner};
pub use model_file::ModelHeader;
pub use oneclass::{
    fit_oneclass, grid_search_gamma, power_of_two_grid, train_oneclass, OneClassFit, OneClassModel,
    DEFAULT_TOLERANCE,
};

use crate::error::Result;
use crate::label::Label;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PredictedClass {
    Real,
    Dng,
    /// Rejected by a one-class model; treated as generated.
    Outlier,
}

impl PredictedClass {
    pub fn as_label(self) -> Label {
        match self {
            PredictedClass::Real => Label::Real,
            PredictedClass::Dng | PredictedClass::Outlier => Label::Dng,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PredictedClass::Real => "real",
            PredictedClass::Dng => "dng",
            PredictedClass::Outlier => "outlier",
        }
    }
}

/// A verdict plus its score: the generated-vote fraction for ensembles, the
/// decision value for one-class models.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Prediction {
    pub class: PredictedClass,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrainedModel {
    Ensemble(EnsembleModel),
    OneClass(OneClassModel),
}

impl TrainedModel {
    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        match self {
            TrainedModel::Ensemble(m) => m.predict(x),
            TrainedModel::OneClass(m) => m.predict(x),
        }
    }

    pub fn feature_dim(&self) -> usize {
        match self {
            TrainedModel::Ensemble(m) => m.feature_dim(),
            TrainedModel::OneClass(m) => m.feature_dim(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            TrainedModel::Ensemble(_) => "ensemble",
            TrainedModel::OneClass(_) => "oneclass",
        }
    }
}
