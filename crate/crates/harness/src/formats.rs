//! Line-oriented text formats for datasets and models.
//!
//! Dataset:
//!
//! ```text
//! setmatch-dataset v1
//! meta {"alpha":0.5,...}
//! dim 2
//! counts 50 50
//! pair +1 3 4
//! x 0.12 -1.5
//! ...
//! y 0.3 0.7
//! ```
//!
//! Each `pair` line gives the label and the sizes of its two sets, followed by
//! one `x` line per item of the first set and one `y` line per item of the
//! second. Positives come first.
//!
//! Model:
//!
//! ```text
//! setmatch-model v1
//! kernel {"kind":"rbf","gamma":0.1}
//! radius 1
//! dataset <sha256 of the anchor dataset file>
//! anchors 100
//! c 0.013
//! ...
//! ```

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use setmatch::kernels::{BaseKernel, PairKernel, RkhsScoreFunction};
use setmatch::set_core::{ItemSet, SetPair};
use setmatch::MatchingDataset64;
use sha2::{Digest, Sha256};

use crate::error::{io_err, HarnessError, Result};

pub const DATASET_HEADER: &str = "setmatch-dataset v1";
pub const MODEL_HEADER: &str = "setmatch-model v1";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    Ok(sha256_hex(&std::fs::read(path).map_err(io_err(path))?))
}

fn push_row(out: &mut String, tag: &str, coords: &[f64]) {
    out.push_str(tag);
    for c in coords {
        write!(out, " {c}").expect("write to string");
    }
    out.push('\n');
}

pub fn dataset_to_string(s: &MatchingDataset64, meta: &serde_json::Value) -> String {
    let mut out = String::new();
    writeln!(out, "{DATASET_HEADER}").unwrap();
    writeln!(out, "meta {meta}").unwrap();
    writeln!(out, "dim {}", s.dim()).unwrap();
    writeln!(out, "counts {} {}", s.m_pos(), s.m_neg()).unwrap();
    let labelled = s
        .positives()
        .iter()
        .map(|z| ("+1", z))
        .chain(s.negatives().iter().map(|z| ("-1", z)));
    for (label, z) in labelled {
        writeln!(out, "pair {label} {} {}", z.first.len(), z.second.len()).unwrap();
        for x in z.first.iter() {
            push_row(&mut out, "x", x.as_slice());
        }
        for y in z.second.iter() {
            push_row(&mut out, "y", y.as_slice());
        }
    }
    out
}

pub struct LoadedDataset {
    pub dataset: MatchingDataset64,
    pub meta: serde_json::Value,
    pub sha256: String,
}

struct Lines<'a> {
    path: PathBuf,
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn new(path: &Path, text: &'a str) -> Self {
        Self {
            path: path.to_path_buf(),
            inner: text.lines().enumerate(),
            line: 0,
        }
    }

    fn err(&self, message: impl Into<String>) -> HarnessError {
        HarnessError::Parse {
            path: self.path.clone(),
            line: self.line,
            message: message.into(),
        }
    }

    fn next_line(&mut self) -> Result<&'a str> {
        match self.inner.next() {
            Some((k, l)) => {
                self.line = k + 1;
                Ok(l)
            }
            None => Err(self.err("unexpected end of file")),
        }
    }

    /// Next line, which must start with `tag`; returns the remainder.
    fn tagged(&mut self, tag: &str) -> Result<&'a str> {
        let l = self.next_line()?;
        match l.split_once(' ') {
            Some((t, rest)) if t == tag => Ok(rest),
            _ if l == tag => Ok(""),
            _ => Err(self.err(format!("expected a `{tag}` line"))),
        }
    }

    fn numbers<N: std::str::FromStr>(&self, rest: &str) -> Result<Vec<N>> {
        rest.split_whitespace()
            .map(|tok| {
                tok.parse()
                    .map_err(|_| self.err(format!("cannot parse `{tok}`")))
            })
            .collect()
    }

    fn finish(&mut self) -> Result<()> {
        for (k, l) in self.inner.by_ref() {
            if !l.trim().is_empty() {
                self.line = k + 1;
                return Err(self.err("trailing content"));
            }
        }
        Ok(())
    }
}

fn read_set(lines: &mut Lines, tag: &str, n: usize, dim: usize) -> Result<ItemSet<f64>> {
    let mut rows = Vec::with_capacity(n);
    for _ in 0..n {
        let rest = lines.tagged(tag)?;
        let row: Vec<f64> = lines.numbers(rest)?;
        if row.len() != dim {
            return Err(lines.err(format!("expected {dim} coordinates, got {}", row.len())));
        }
        rows.push(row);
    }
    ItemSet::from_rows(rows).map_err(|e| lines.err(e.to_string()))
}

pub fn parse_dataset(path: &Path, text: &str) -> Result<(MatchingDataset64, serde_json::Value)> {
    let mut lines = Lines::new(path, text);
    if lines.next_line()? != DATASET_HEADER {
        return Err(lines.err(format!("expected header `{DATASET_HEADER}`")));
    }
    let meta_text = lines.tagged("meta")?;
    let meta: serde_json::Value =
        serde_json::from_str(meta_text).map_err(|e| lines.err(e.to_string()))?;
    let rest = lines.tagged("dim")?;
    let dim: Vec<usize> = lines.numbers(rest)?;
    let rest = lines.tagged("counts")?;
    let counts: Vec<usize> = lines.numbers(rest)?;
    let (&[dim], &[m_pos, m_neg]) = (dim.as_slice(), counts.as_slice()) else {
        return Err(lines.err("malformed dim or counts line"));
    };
    let mut positives = Vec::with_capacity(m_pos);
    let mut negatives = Vec::with_capacity(m_neg);
    for k in 0..m_pos + m_neg {
        let rest = lines.tagged("pair")?;
        let mut toks = rest.split_whitespace();
        let label = toks.next().unwrap_or("");
        let expected = if k < m_pos { "+1" } else { "-1" };
        if label != expected {
            return Err(lines.err(format!("expected label {expected}, got `{label}`")));
        }
        let sizes: Vec<usize> = lines.numbers(&toks.collect::<Vec<_>>().join(" "))?;
        let &[n, m] = sizes.as_slice() else {
            return Err(lines.err("pair line needs two set sizes"));
        };
        let x = read_set(&mut lines, "x", n, dim)?;
        let y = read_set(&mut lines, "y", m, dim)?;
        let z = SetPair::new(x, y).map_err(|e| lines.err(e.to_string()))?;
        if k < m_pos {
            positives.push(z);
        } else {
            negatives.push(z);
        }
    }
    lines.finish()?;
    Ok((MatchingDataset64::new(positives, negatives)?, meta))
}

pub fn load_dataset(path: &Path) -> Result<LoadedDataset> {
    let bytes = std::fs::read(path).map_err(io_err(path))?;
    let text = String::from_utf8(bytes.clone()).map_err(|_| HarnessError::Parse {
        path: path.to_path_buf(),
        line: 0,
        message: "not UTF-8".into(),
    })?;
    let (dataset, meta) = parse_dataset(path, &text)?;
    Ok(LoadedDataset {
        dataset,
        meta,
        sha256: sha256_hex(&bytes),
    })
}

/// Serialized model: everything but the anchors, which live in the dataset file.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub kernel: BaseKernel<f64>,
    pub radius: f64,
    pub dataset_sha256: String,
    pub coefficients: Vec<f64>,
}

impl ModelFile {
    pub fn from_function(f: &RkhsScoreFunction<f64>, radius: f64, dataset_sha256: &str) -> Self {
        Self {
            kernel: f.kernel().base,
            radius,
            dataset_sha256: dataset_sha256.to_string(),
            coefficients: f.coefficients().to_vec(),
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{MODEL_HEADER}").unwrap();
        writeln!(
            out,
            "kernel {}",
            serde_json::to_string(&self.kernel).expect("kernel serializes")
        )
        .unwrap();
        writeln!(out, "radius {}", self.radius).unwrap();
        writeln!(out, "dataset {}", self.dataset_sha256).unwrap();
        writeln!(out, "anchors {}", self.coefficients.len()).unwrap();
        for c in &self.coefficients {
            writeln!(out, "c {c}").unwrap();
        }
        out
    }

    pub fn parse(path: &Path, text: &str) -> Result<Self> {
        let mut lines = Lines::new(path, text);
        if lines.next_line()? != MODEL_HEADER {
            return Err(lines.err(format!("expected header `{MODEL_HEADER}`")));
        }
        let kernel_text = lines.tagged("kernel")?;
        let kernel: BaseKernel<f64> =
            serde_json::from_str(kernel_text).map_err(|e| lines.err(e.to_string()))?;
        kernel.validate().map_err(|e| lines.err(e.to_string()))?;
        let rest = lines.tagged("radius")?;
        let radius = lines.numbers::<f64>(rest)?;
        let &[radius] = radius.as_slice() else {
            return Err(lines.err("radius line needs one value"));
        };
        let dataset_sha256 = lines.tagged("dataset")?.trim().to_string();
        let rest = lines.tagged("anchors")?;
        let n = lines.numbers::<usize>(rest)?;
        let &[n] = n.as_slice() else {
            return Err(lines.err("anchors line needs one count"));
        };
        let mut coefficients = Vec::with_capacity(n);
        for _ in 0..n {
            let rest = lines.tagged("c")?;
            let v = lines.numbers::<f64>(rest)?;
            let &[v] = v.as_slice() else {
                return Err(lines.err("coefficient line needs one value"));
            };
            coefficients.push(v);
        }
        lines.finish()?;
        Ok(Self {
            kernel,
            radius,
            dataset_sha256,
            coefficients,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        Self::parse(path, &text)
    }

    /// Rebuilds the score function over the dataset it was trained on.
    pub fn bind(&self, data: &LoadedDataset) -> Result<RkhsScoreFunction<f64>> {
        if data.sha256 != self.dataset_sha256 {
            return Err(HarnessError::DatasetHashMismatch {
                expected: self.dataset_sha256.clone(),
                got: data.sha256.clone(),
            });
        }
        let pk = PairKernel::new(self.kernel)?;
        Ok(RkhsScoreFunction::new(
            self.coefficients.clone(),
            data.dataset.all_pairs().into(),
            pk,
        )?)
    }
}
