//! Optional TOML settings file.
//!
//! Every table is optional and missing keys keep their defaults:
//!
//! ```toml
//! [extractor]
//! tau = 2
//! order = 3
//! offsets = [{ dx = 0, dy = 1 }, { dx = 1, dy = 0 }]
//! filters = ["vertical", "horizontal"]
//!
//! [classifier.ensemble]
//! subspace_dim = 96
//! learner_count = 51
//!
//! [classifier.oneclass]
//! nu = 0.1
//! gamma_exponents = [-5, 15]
//!
//! [split]
//! train_fraction = 0.25
//! repetitions = 10
//! ```
//!
//! Seeds in the file are ignored; each randomized subcommand takes `--seed`.

use std::path::{Path, PathBuf};

use colorstat::dataset::SplitSpec;
use colorstat::evaluation::ClassifierConfig;
use colorstat::features::ExtractorConfig;
use colorstat::synthgen::{GenSpec, ProxySpec};
use serde::{Deserialize, Serialize};

use crate::exit::Failure;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    pub extractor: ExtractorConfig,
    pub classifier: ClassifierConfig,
    pub split: SplitSpec,
    pub generator: GenSpec,
    pub proxy: ProxySpec,
}

/// Settings plus where they came from, echoed into reports.
#[derive(Debug, Clone, Serialize)]
pub struct ConfigEcho {
    pub file: Option<PathBuf>,
    /// Verbatim file contents.
    pub contents: Option<String>,
    pub effective: Settings,
}

impl ConfigEcho {
    pub fn load(path: Option<&Path>) -> Result<Self, Failure> {
        let Some(path) = path else {
            return Ok(Self {
                file: None,
                contents: None,
                effective: Settings::default(),
            });
        };
        let contents = std::fs::read_to_string(path)
            .map_err(|e| Failure::io(format!("cannot read {}: {e}", path.display())))?;
        let effective: Settings = toml::from_str(&contents)
            .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
        effective.extractor.validate()?;
        effective.split.validate()?;
        Ok(Self {
            file: Some(path.to_path_buf()),
            contents: Some(contents),
            effective,
        })
    }
}
