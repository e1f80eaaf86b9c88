//! `colorstat-model v1`: line-oriented text, one `key value...` pair per
//! line, reals at 17 significant digits so a reload predicts bit-identically.
//!
//! ```text
//! colorstat-model v1
//! kind ensemble | oneclass
//! extractor tau=2 order=3 offsets=0:1,1:0 filters=vertical,horizontal
//! feature_dim 588
//! ... kind-specific hyperparameters and payload ...
//! end
//! ```

use std::io::{BufRead, Write};

use super::{EnsembleModel, FldLearner, OneClassModel, TrainedModel};
use crate::error::{Error, Result};
use crate::features::{ExtractorConfig, Offset};
use crate::residual::FilterKind;

const MAGIC: &str = "colorstat-model v1";

/// Metadata stored alongside the classifier.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ModelHeader {
    /// Extractor settings the model's features were computed with.
    pub extractor: ExtractorConfig,
}

fn real(v: f64) -> String {
    format!("{v:.16e}")
}

fn reals(values: &[f64]) -> String {
    values
        .iter()
        .map(|&v| real(v))
        .collect::<Vec<_>>()
        .join(" ")
}

fn extractor_line(cfg: &ExtractorConfig) -> String {
    let offsets = cfg
        .offsets
        .iter()
        .map(|o| format!("{}:{}", o.dx, o.dy))
        .collect::<Vec<_>>()
        .join(",");
    let filters = cfg
        .filters
        .iter()
        .map(|f| match f {
            FilterKind::Vertical => "vertical",
            FilterKind::Horizontal => "horizontal",
        })
        .collect::<Vec<_>>()
        .join(",");
    format!(
        "extractor tau={} order={} offsets={offsets} filters={filters}",
        cfg.tau, cfg.order
    )
}

impl TrainedModel {
    pub fn save(&self, header: &ModelHeader, mut out: impl Write) -> Result<()> {
        writeln!(out, "{MAGIC}")?;
        writeln!(out, "kind {}", self.kind())?;
        writeln!(out, "{}", extractor_line(&header.extractor))?;
        writeln!(out, "feature_dim {}", self.feature_dim())?;
        match self {
            TrainedModel::Ensemble(m) => {
                writeln!(out, "subspace_dim {}", m.subspace_dim)?;
                writeln!(out, "learner_count {}", m.learners.len())?;
                writeln!(out, "seed {}", m.seed)?;
                for l in &m.learners {
                    writeln!(out, "learner")?;
                    let idx: Vec<String> = l.subspace.iter().map(|i| i.to_string()).collect();
                    writeln!(out, "subspace {}", idx.join(" "))?;
                    writeln!(out, "weights {}", reals(&l.weights))?;
                    writeln!(out, "bias {}", real(l.bias))?;
                }
            }
            TrainedModel::OneClass(m) => {
                writeln!(out, "nu {}", real(m.nu))?;
                writeln!(out, "gamma {}", real(m.gamma))?;
                writeln!(out, "rho {}", real(m.rho))?;
                writeln!(out, "support_vectors {}", m.support_vectors.len())?;
                for (sv, &a) in m.support_vectors.iter().zip(&m.alphas) {
                    writeln!(out, "sv {} {}", real(a), reals(sv))?;
                }
            }
        }
        writeln!(out, "end")?;
        out.flush()?;
        Ok(())
    }

    pub fn load(input: impl BufRead) -> Result<(TrainedModel, ModelHeader)> {
        let mut p = Parser {
            lines: input.lines(),
            line_no: 0,
        };
        let magic = p.next_line()?;
        if magic != MAGIC {
            return Err(p.err(format!("bad header {magic:?}")));
        }
        let kind = p.field("kind")?;
        let extractor = parse_extractor(&p.field("extractor")?).map_err(|e| p.err(e))?;
        let feature_dim: usize = p.parse_field("feature_dim")?;
        if feature_dim == 0 {
            return Err(p.err("feature_dim 0"));
        }

        let model = match kind.as_str() {
            "ensemble" => {
                let subspace_dim: usize = p.parse_field("subspace_dim")?;
                let count: usize = p.parse_field("learner_count")?;
                let seed: u64 = p.parse_field("seed")?;
                if count == 0 || count.is_multiple_of(2) {
                    return Err(p.err(format!("learner count {count} must be odd")));
                }
                let mut learners = Vec::with_capacity(count);
                for _ in 0..count {
                    let marker = p.next_line()?;
                    if marker != "learner" {
                        return Err(p.err(format!("expected learner, got {marker:?}")));
                    }
                    let subspace: Vec<usize> = p.parse_list("subspace")?;
                    let weights: Vec<f64> = p.parse_list("weights")?;
                    let bias: f64 = p.parse_field("bias")?;
                    if subspace.len() != subspace_dim || subspace.iter().any(|&i| i >= feature_dim)
                    {
                        return Err(p.err("subspace does not fit the declared dimensions"));
                    }
                    learners.push(
                        FldLearner::from_parts(subspace, weights, bias)
                            .map_err(|e| p.err(e.to_string()))?,
                    );
                }
                TrainedModel::Ensemble(EnsembleModel {
                    feature_dim,
                    subspace_dim,
                    seed,
                    learners,
                })
            }
            "oneclass" => {
                let nu: f64 = p.parse_field("nu")?;
                let gamma: f64 = p.parse_field("gamma")?;
                let rho: f64 = p.parse_field("rho")?;
                let count: usize = p.parse_field("support_vectors")?;
                let mut support_vectors = Vec::with_capacity(count);
                let mut alphas = Vec::with_capacity(count);
                for _ in 0..count {
                    let mut row: Vec<f64> = p.parse_list("sv")?;
                    if row.len() != feature_dim + 1 {
                        return Err(p.err(format!(
                            "support vector with {} values, expected {}",
                            row.len().saturating_sub(1),
                            feature_dim
                        )));
                    }
                    alphas.push(row.remove(0));
                    support_vectors.push(row);
                }
                if !(nu > 0.0 && nu <= 1.0 && gamma > 0.0 && rho.is_finite()) {
                    return Err(p.err("invalid one-class hyperparameters"));
                }
                TrainedModel::OneClass(OneClassModel {
                    support_vectors,
                    alphas,
                    rho,
                    gamma,
                    nu,
                    feature_dim,
                })
            }
            other => return Err(p.err(format!("unknown model kind {other:?}"))),
        };
        let end = p.next_line()?;
        if end != "end" {
            return Err(p.err(format!("expected end, got {end:?}")));
        }
        Ok((model, ModelHeader { extractor }))
    }
}

fn parse_extractor(s: &str) -> std::result::Result<ExtractorConfig, String> {
    let mut cfg = ExtractorConfig::default();
    for part in s.split_whitespace() {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| format!("bad extractor field {part:?}"))?;
        match key {
            "tau" => cfg.tau = value.parse().map_err(|_| format!("bad tau {value:?}"))?,
            "order" => cfg.order = value.parse().map_err(|_| format!("bad order {value:?}"))?,
            "offsets" => {
                cfg.offsets = value
                    .split(',')
                    .map(|o| {
                        let (dx, dy) = o.split_once(':').ok_or("bad offset")?;
                        let dx = dx.parse().map_err(|_| "bad offset")?;
                        let dy = dy.parse().map_err(|_| "bad offset")?;
                        Offset::new(dx, dy).map_err(|_| "zero offset")
                    })
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e: &str| e.to_string())?
            }
            "filters" => {
                cfg.filters = value
                    .split(',')
                    .map(|f| match f {
                        "vertical" => Ok(FilterKind::Vertical),
                        "horizontal" => Ok(FilterKind::Horizontal),
                        other => Err(format!("unknown filter {other:?}")),
                    })
                    .collect::<std::result::Result<_, _>>()?
            }
            other => return Err(format!("unknown extractor field {other:?}")),
        }
    }
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

struct Parser<L> {
    lines: L,
    line_no: usize,
}

impl<L: Iterator<Item = std::io::Result<String>>> Parser<L> {
    fn err(&self, reason: impl Into<String>) -> Error {
        Error::Format {
            what: "model file",
            line: self.line_no,
            reason: reason.into(),
        }
    }

    fn next_line(&mut self) -> Result<String> {
        self.line_no += 1;
        match self.lines.next() {
            Some(line) => Ok(line?.trim_end().to_string()),
            None => Err(self.err("unexpected end of file")),
        }
    }

    fn field(&mut self, key: &str) -> Result<String> {
        let line = self.next_line()?;
        match line.split_once(' ') {
            Some((k, v)) if k == key => Ok(v.to_string()),
            _ => Err(self.err(format!("expected {key}, got {line:?}"))),
        }
    }

    fn parse_field<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let v = self.field(key)?;
        v.parse()
            .map_err(|_| self.err(format!("cannot parse {key} value {v:?}")))
    }

    fn parse_list<T: std::str::FromStr>(&mut self, key: &str) -> Result<Vec<T>> {
        let v = self.field(key)?;
        v.split(' ')
            .map(|item| {
                item.parse()
                    .map_err(|_| self.err(format!("cannot parse {key} item {item:?}")))
            })
            .collect()
    }
}
