//! Tab-separated feature files.
//!
//! ```text
//! colorstat-features v1, dim=588
//! <image id>\t<label: 0 | 1 | -1>\t<v_1>\t...\t<v_dim>
//! ```
//!
//! Values are written with 9 significant digits. Reading a file and writing
//! it back reproduces it byte for byte.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::label::Label;

const MAGIC: &str = "colorstat-features v1";

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRecord {
    pub id: String,
    /// `None` for images of unknown class.
    pub label: Option<Label>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    pub dim: usize,
    pub records: Vec<FeatureRecord>,
}

/// Formats a value the way feature files store it.
pub fn format_value(v: f64) -> String {
    format!("{v:.8e}")
}

/// The value a feature file holds after writing `v`.
pub fn quantize_value(v: f64) -> f64 {
    format_value(v).parse().expect("formatted float parses")
}

fn format_err(line: usize, reason: impl Into<String>) -> Error {
    Error::Format {
        what: "feature file",
        line,
        reason: reason.into(),
    }
}

impl FeatureSet {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            records: Vec::new(),
        }
    }

    pub fn push(&mut self, record: FeatureRecord) -> Result<()> {
        if record.values.len() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "record {} has {} values, file dimension is {}",
                record.id,
                record.values.len(),
                self.dim
            )));
        }
        if record.id.is_empty() || record.id.contains(['\t', '\n', '\r']) {
            return Err(Error::InvalidHyperparameter(format!(
                "image id {:?} is empty or contains tabs/newlines",
                record.id
            )));
        }
        self.records.push(record);
        Ok(())
    }

    /// Records with a known label, as (features, label) pairs.
    pub fn labeled(&self) -> (Vec<Vec<f64>>, Vec<Label>) {
        self.records
            .iter()
            .filter_map(|r| r.label.map(|l| (r.values.clone(), l)))
            .unzip()
    }

    pub fn write_to(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "{MAGIC}, dim={}", self.dim)?;
        let mut line = String::new();
        for rec in &self.records {
            line.clear();
            line.push_str(&rec.id);
            line.push('\t');
            line.push_str(&rec.label.map_or(-1, Label::code).to_string());
            for &v in &rec.values {
                line.push('\t');
                line.push_str(&format_value(v));
            }
            line.push('\n');
            out.write_all(line.as_bytes())?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_from(input: impl BufRead) -> Result<Self> {
        let mut lines = input.lines();
        let header = lines.next().ok_or_else(|| format_err(1, "empty file"))??;
        let dim = header
            .strip_prefix(MAGIC)
            .and_then(|rest| rest.strip_prefix(", dim="))
            .and_then(|d| d.parse::<usize>().ok())
            .ok_or_else(|| format_err(1, format!("bad header {header:?}")))?;

        let mut set = FeatureSet::new(dim);
        for (i, line) in lines.enumerate() {
            let line_no = i + 2;
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split('\t');
            let id = fields.next().unwrap_or_default().to_string();
            let code = fields
                .next()
                .and_then(|l| l.parse::<i32>().ok())
                .ok_or_else(|| format_err(line_no, "missing or non-integer label"))?;
            let label = Label::from_code(code)
                .ok_or_else(|| format_err(line_no, format!("label {code}")))?;
            let values = fields
                .map(|f| {
                    f.parse::<f64>()
                        .map_err(|_| format_err(line_no, format!("bad value {f:?}")))
                })
                .collect::<Result<Vec<_>>>()?;
            if values.len() != dim {
                return Err(format_err(
                    line_no,
                    format!("{} values, expected {dim}", values.len()),
                ));
            }
            set.push(FeatureRecord { id, label, values })
                .map_err(|e| format_err(line_no, e.to_string()))?;
        }
        Ok(set)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> FeatureSet {
        let mut set = FeatureSet::new(3);
        set.push(FeatureRecord {
            id: "a/b.png".into(),
            label: Some(Label::Dng),
            values: vec![0.1, 1.0 / 3.0, 0.0],
        })
        .unwrap();
        set.push(FeatureRecord {
            id: "c.png".into(),
            label: None,
            values: vec![1.0, 2.5e-7, 0.123456789123],
        })
        .unwrap();
        set
    }

    #[test]
    fn layout() {
        let mut buf = Vec::new();
        sample().write_to(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("colorstat-features v1, dim=3"));
        assert_eq!(
            lines.next(),
            Some("a/b.png\t1\t1.00000000e-1\t3.33333333e-1\t0.00000000e0")
        );
        assert!(lines.next().unwrap().starts_with("c.png\t-1\t"));
    }

    #[test]
    fn byte_exact_rewrite() {
        let mut first = Vec::new();
        sample().write_to(&mut first).unwrap();
        let reread = FeatureSet::read_from(first.as_slice()).unwrap();
        let mut second = Vec::new();
        reread.write_to(&mut second).unwrap();
        assert_eq!(first, second);
        assert_eq!(reread.records[1].label, None);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(FeatureSet::read_from("nope\n".as_bytes()).is_err());
        assert!(
            FeatureSet::read_from("colorstat-features v1, dim=2\nx\t0\t1\n".as_bytes()).is_err()
        );
        assert!(
            FeatureSet::read_from("colorstat-features v1, dim=1\nx\t7\t1\n".as_bytes()).is_err()
        );
        let mut set = FeatureSet::new(1);
        assert!(set
            .push(FeatureRecord {
                id: "tab\there".into(),
                label: None,
                values: vec![0.0]
            })
            .is_err());
    }

    proptest! {
        #[test]
        fn quantization_is_a_fixed_point(v in 0.0f64..=1.0) {
            let q = quantize_value(v);
            prop_assert_eq!(quantize_value(q).to_bits(), q.to_bits());
            prop_assert!((q - v).abs() <= v.abs() * 1e-8 + f64::MIN_POSITIVE);
        }
    }
}
