//! Text formats for datasets, models, witnesses and reports.
//!
//! Numbers are written with 17 significant digits so every file round-trips
//! exactly and repeated runs produce byte-identical output.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::features::feature_vector;
use crate::qcore::{n_paulis, ComplexMatrix, PauliString};
use crate::states::{DatasetConfig, Label, LabeledSample};
use crate::svm::{SvmModel, TrainingSet};
use crate::witness::{Normalization, WitnessOperator};

/// Fixed-width scientific notation with 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_num(s: &str, line: usize) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|e| Error::Parse {
        line,
        message: format!("bad number {s:?}: {e}"),
    })
}

fn parse_list(s: &str, line: usize) -> Result<Vec<f64>> {
    s.split_whitespace().map(|t| parse_num(t, line)).collect()
}

/// Ordered key-value text with optional matrix blocks.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeyValues {
    pub entries: Vec<(String, String)>,
}

impl KeyValues {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, key: impl Into<String>, value: impl ToString) -> &mut Self {
        self.entries.push((key.into(), value.to_string()));
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key).ok_or_else(|| Error::Parse {
            line: 0,
            message: format!("missing key {key:?}"),
        })
    }

    pub fn require_num(&self, key: &str) -> Result<f64> {
        parse_num(self.require(key)?, 0)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    /// Parses `key = value` lines; blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut kv = Self::new();
        for (i, line) in text.lines().enumerate() {
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let (k, v) = t.split_once('=').ok_or_else(|| Error::Parse {
                line: i + 1,
                message: format!("expected key = value, got {t:?}"),
            })?;
            kv.push(k.trim(), v.trim());
        }
        Ok(kv)
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    fs::write(path, text)?;
    Ok(())
}

/// Sidecar path: the dataset path with `.meta` appended.
pub fn meta_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_os_string();
    s.push(".meta");
    PathBuf::from(s)
}

fn label_str(l: Label) -> &'static str {
    match l {
        Label::Separable => "+1",
        Label::Entangled => "-1",
    }
}

pub fn dataset_csv(samples: &[LabeledSample]) -> Result<String> {
    let n = samples
        .first()
        .map(|s| s.rho.n_qubits())
        .ok_or_else(|| Error::DegenerateDataset("empty dataset".into()))?;
    let mut out = String::from("label");
    for p in PauliString::all(n) {
        let _ = write!(out, ",{p}");
    }
    out.push('\n');
    for s in samples {
        out.push_str(label_str(s.label));
        for x in feature_vector(&s.rho)?.values() {
            out.push(',');
            out.push_str(&num(*x));
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn dataset_meta(samples: &[LabeledSample], config: &DatasetConfig) -> KeyValues {
    let mut kv = KeyValues::new();
    kv.push("format", "ewsvm-dataset 1")
        .push("family", config.family.tag())
        .push("n_qubits", config.n_qubits())
        .push("per_class", config.per_class)
        .push("p_min", num(config.p_min))
        .push("p_max", num(config.p_max))
        .push("mixture_fraction", num(config.mixture_fraction))
        .push("max_mixture_terms", config.max_mixture_terms)
        .push("seed", config.seed);
    for (i, s) in samples.iter().enumerate() {
        kv.push(format!("sample.{i}"), &s.provenance);
    }
    kv
}

/// Writes the CSV and its metadata sidecar.
pub fn write_dataset(path: &Path, samples: &[LabeledSample], config: &DatasetConfig) -> Result<()> {
    write_text(path, &dataset_csv(samples)?)?;
    write_text(&meta_path(path), &dataset_meta(samples, config).render())
}

/// Parses a dataset CSV into a training set and its qubit count.
pub fn parse_dataset(text: &str) -> Result<(TrainingSet, usize)> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        message: "empty file".into(),
    })?;
    let cols = header.split(',').count();
    let n = (1..=6)
        .find(|&n| n_paulis(n) + 1 == cols)
        .ok_or(Error::Parse {
            line: 1,
            message: format!("{cols} columns is not 1 + 4^N"),
        })?;
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let label = match fields.next().map(str::trim) {
            Some("+1") | Some("1") => Label::Separable,
            Some("-1") => Label::Entangled,
            other => {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("bad label {other:?}"),
                })
            }
        };
        let row = fields
            .map(|f| parse_num(f, i + 1))
            .collect::<Result<Vec<_>>>()?;
        if row.len() != cols - 1 {
            return Err(Error::Parse {
                line: i + 1,
                message: format!("expected {} features, got {}", cols - 1, row.len()),
            });
        }
        features.push(row);
        labels.push(label);
    }
    Ok((TrainingSet::new(features, labels)?, n))
}

pub fn read_dataset(path: &Path) -> Result<(TrainingSet, usize)> {
    parse_dataset(&fs::read_to_string(path)?)
}

pub fn model_text(model: &SvmModel, meta: &KeyValues) -> String {
    let mut kv = KeyValues::new();
    kv.push("format", "ewsvm-model 1")
        .push("dim", model.weights.len())
        .push("C", num(model.c))
        .push("b", num(model.bias))
        .push(
            "w",
            model
                .weights
                .iter()
                .map(|x| num(*x))
                .collect::<Vec<_>>()
                .join(" "),
        );
    kv.entries.extend(meta.entries.iter().cloned());
    kv.render()
}

pub fn parse_model(text: &str) -> Result<SvmModel> {
    let kv = KeyValues::parse(text)?;
    let weights = parse_list(kv.require("w")?, 0)?;
    let dim = kv.require_num("dim")? as usize;
    if weights.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: weights.len(),
        });
    }
    Ok(SvmModel {
        weights,
        bias: kv.require_num("b")?,
        c: kv.require_num("C")?,
    })
}

fn grid(out: &mut String, title: &str, m: &ComplexMatrix, part: impl Fn(Complex64) -> f64) {
    let _ = writeln!(out, "[{title}]");
    for r in 0..m.rows() {
        let row: Vec<String> = (0..m.cols()).map(|c| num(part(m.get(r, c)))).collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
}

/// Witness file: header keys, coefficient list, dense matrix grids, then report keys.
pub fn witness_text(w: &WitnessOperator, report: &KeyValues) -> String {
    let mut kv = KeyValues::new();
    kv.push("format", "ewsvm-witness 1")
        .push("n_qubits", w.n_qubits())
        .push("normalization", w.normalization().tag())
        .push(
            "coefficients",
            w.coefficients()
                .iter()
                .map(|x| num(*x))
                .collect::<Vec<_>>()
                .join(" "),
        );
    let mut out = kv.render();
    grid(&mut out, "matrix.re", w.matrix(), |z| z.re);
    grid(&mut out, "matrix.im", w.matrix(), |z| z.im);
    out.push_str("[report]\n");
    out.push_str(&report.render());
    out
}

/// Parsed witness and its report section.
pub fn parse_witness(text: &str) -> Result<(WitnessOperator, KeyValues)> {
    let mut header = String::new();
    let mut sections: Vec<(String, Vec<(usize, String)>)> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.starts_with('[') && t.ends_with(']') {
            sections.push((t[1..t.len() - 1].to_string(), Vec::new()));
        } else if let Some((_, body)) = sections.last_mut() {
            body.push((i + 1, line.to_string()));
        } else {
            header.push_str(line);
            header.push('\n');
        }
    }
    let kv = KeyValues::parse(&header)?;
    let n = kv.require_num("n_qubits")? as usize;
    let normalization =
        Normalization::from_tag(kv.require("normalization")?).ok_or(Error::Parse {
            line: 0,
            message: "unknown normalization tag".into(),
        })?;
    let coefficients = parse_list(kv.require("coefficients")?, 0)?;
    let w = WitnessOperator::from_coefficients(n, coefficients, normalization)?;

    let d = 1usize << n;
    let read_grid = |name: &str| -> Result<Option<Vec<Vec<f64>>>> {
        let Some((_, body)) = sections.iter().find(|(s, _)| s == name) else {
            return Ok(None);
        };
        let rows: Vec<Vec<f64>> = body
            .iter()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| parse_list(l, *i))
            .collect::<Result<_>>()?;
        if rows.len() != d || rows.iter().any(|r| r.len() != d) {
            return Err(Error::Parse {
                line: 0,
                message: format!("{name} is not {d}x{d}"),
            });
        }
        Ok(Some(rows))
    };
    if let (Some(re), Some(im)) = (read_grid("matrix.re")?, read_grid("matrix.im")?) {
        let m = ComplexMatrix::from_fn(d, d, |r, c| Complex64::new(re[r][c], im[r][c]));
        let diff = m.max_abs_diff(w.matrix());
        if diff > 1e-12 {
            return Err(Error::Parse {
                line: 0,
                message: format!("matrix grid disagrees with coefficients by {diff:e}"),
            });
        }
    }
    let report = match sections.iter().find(|(s, _)| s == "report") {
        Some((_, body)) => {
            let text: String = body.iter().map(|(_, l)| format!("{l}\n")).collect();
            KeyValues::parse(&text)?
        }
        None => KeyValues::new(),
    };
    Ok((w, report))
}

pub fn read_witness(path: &Path) -> Result<(WitnessOperator, KeyValues)> {
    parse_witness(&fs::read_to_string(path)?)
}
