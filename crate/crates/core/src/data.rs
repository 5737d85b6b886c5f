//! LIBSVM text ingestion, class-grouped datasets and synthetic generators.
//!
//! Format: one point per line, `<label> <index>:<value> ...`, with 1-based
//! strictly ascending indices. `#` starts a comment; blank lines are skipped;
//! LF and CRLF line endings are both accepted.

use std::fmt::Write as _;
use std::io::BufRead;

use crate::error::{Error, Result};
use crate::linalg;
use crate::rng::RandomSource;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseVector {
    /// 1-based, strictly increasing.
    pub indices: Vec<u32>,
    pub values: Vec<f64>,
}

impl SparseVector {
    pub fn new(indices: Vec<u32>, values: Vec<f64>) -> Result<Self> {
        if indices.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: indices.len(),
                found: values.len(),
            });
        }
        if indices.first() == Some(&0) {
            return Err(Error::arg("feature indices are 1-based"));
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::arg("feature indices must be strictly increasing"));
        }
        if !linalg::all_finite(&values) {
            return Err(Error::NonFinite("sparse vector"));
        }
        Ok(Self { indices, values })
    }

    pub fn from_dense(dense: &[f64]) -> Self {
        Self {
            indices: (1..=dense.len() as u32).collect(),
            values: dense.to_vec(),
        }
    }

    /// Largest index present (0 for the empty vector).
    pub fn max_index(&self) -> u32 {
        self.indices.last().copied().unwrap_or(0)
    }

    pub fn norm(&self) -> f64 {
        linalg::norm(&self.values)
    }

    pub fn to_dense(&self, dim: usize) -> Result<Vec<f64>> {
        if self.max_index() as usize > dim {
            return Err(Error::Data(format!(
                "index {} exceeds feature dimension {dim}",
                self.max_index()
            )));
        }
        let mut out = vec![0.0; dim];
        for (i, v) in self.indices.iter().zip(&self.values) {
            out[*i as usize - 1] = *v;
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledClass {
    pub label: i64,
    pub points: Vec<SparseVector>,
}

/// Points grouped by label. Classes are kept in order of first appearance;
/// class 0 in that order is the objective class of the Neyman-Pearson problem.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassGroupedDataset {
    classes: Vec<LabeledClass>,
    feature_dim: usize,
    normalized: bool,
}

impl ClassGroupedDataset {
    pub fn new(classes: Vec<LabeledClass>, feature_dim: usize) -> Result<Self> {
        if classes.is_empty() {
            return Err(Error::Data("dataset has no classes".into()));
        }
        for c in &classes {
            if c.points.is_empty() {
                return Err(Error::Data(format!("class {} is empty", c.label)));
            }
            if let Some(p) = c
                .points
                .iter()
                .find(|p| p.max_index() as usize > feature_dim)
            {
                return Err(Error::Data(format!(
                    "class {} has index {} beyond feature dimension {feature_dim}",
                    c.label,
                    p.max_index()
                )));
            }
        }
        let mut labels: Vec<i64> = classes.iter().map(|c| c.label).collect();
        labels.sort_unstable();
        if labels.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Data("duplicate class label".into()));
        }
        Ok(Self {
            classes,
            feature_dim,
            normalized: false,
        })
    }

    pub fn parse<R: BufRead>(reader: R) -> Result<Self> {
        parse_libsvm(reader)
    }

    pub fn parse_str(text: &str) -> Result<Self> {
        parse_libsvm(text.as_bytes())
    }

    pub fn classes(&self) -> &[LabeledClass] {
        &self.classes
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn num_points(&self) -> usize {
        self.classes.iter().map(|c| c.points.len()).sum()
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn labels(&self) -> Vec<i64> {
        self.classes.iter().map(|c| c.label).collect()
    }

    /// Copy with every nonzero vector scaled to unit Euclidean norm.
    pub fn normalized(&self) -> Self {
        let classes = self
            .classes
            .iter()
            .map(|c| LabeledClass {
                label: c.label,
                points: c
                    .points
                    .iter()
                    .map(|p| {
                        let n = p.norm();
                        if n > 0.0 {
                            SparseVector {
                                indices: p.indices.clone(),
                                values: linalg::scale(&p.values, 1.0 / n),
                            }
                        } else {
                            p.clone()
                        }
                    })
                    .collect(),
            })
            .collect();
        Self {
            classes,
            feature_dim: self.feature_dim,
            normalized: true,
        }
    }

    /// Moves the class with `label` to the front (the objective class).
    pub fn with_objective_class(mut self, label: i64) -> Result<Self> {
        let pos = self
            .classes
            .iter()
            .position(|c| c.label == label)
            .ok_or_else(|| Error::Data(format!("no class with label {label}")))?;
        let c = self.classes.remove(pos);
        self.classes.insert(0, c);
        Ok(self)
    }

    /// Keeps at most `max_per_class` points per class, chosen uniformly
    /// without replacement and kept in their original order.
    pub fn subsample(&self, max_per_class: usize, rng: &mut RandomSource) -> Result<Self> {
        if max_per_class == 0 {
            return Err(Error::arg("max_per_class must be positive"));
        }
        let classes = self
            .classes
            .iter()
            .map(|c| {
                let n = c.points.len();
                if n <= max_per_class {
                    return c.clone();
                }
                let mut idx: Vec<usize> = (0..n).collect();
                // partial Fisher-Yates
                for i in 0..max_per_class {
                    let j = i + rng.index(n - i);
                    idx.swap(i, j);
                }
                let mut keep = idx[..max_per_class].to_vec();
                keep.sort_unstable();
                LabeledClass {
                    label: c.label,
                    points: keep.into_iter().map(|i| c.points[i].clone()).collect(),
                }
            })
            .collect();
        Ok(Self {
            classes,
            feature_dim: self.feature_dim,
            normalized: self.normalized,
        })
    }

    pub fn dense_classes(&self) -> Result<Vec<Vec<Vec<f64>>>> {
        self.classes
            .iter()
            .map(|c| {
                c.points
                    .iter()
                    .map(|p| p.to_dense(self.feature_dim))
                    .collect()
            })
            .collect()
    }

    /// LIBSVM text, classes in order, one point per line.
    pub fn to_libsvm_string(&self) -> String {
        let mut out = String::new();
        for c in &self.classes {
            for p in &c.points {
                write!(out, "{}", c.label).unwrap();
                for (i, v) in p.indices.iter().zip(&p.values) {
                    write!(out, " {i}:{v}").unwrap();
                }
                out.push('\n');
            }
        }
        out
    }
}

fn parse_label(tok: &str, line: usize) -> Result<i64> {
    if let Ok(v) = tok.parse::<i64>() {
        return Ok(v);
    }
    match tok.parse::<f64>() {
        Ok(v) if v.is_finite() && v.fract() == 0.0 && v.abs() < 9.0e15 => Ok(v as i64),
        _ => Err(Error::Parse {
            line,
            message: format!("invalid label '{tok}'"),
        }),
    }
}

fn parse_line(content: &str, line: usize) -> Result<(i64, SparseVector)> {
    let mut tokens = content.split_whitespace();
    let label = parse_label(tokens.next().expect("nonempty line"), line)?;
    let mut indices = Vec::new();
    let mut values = Vec::new();
    for tok in tokens {
        let (i, v) = tok.split_once(':').ok_or_else(|| Error::Parse {
            line,
            message: format!("expected <index>:<value>, found '{tok}'"),
        })?;
        let index: u32 = i.parse().map_err(|_| Error::Parse {
            line,
            message: format!("invalid index '{i}'"),
        })?;
        if index == 0 {
            return Err(Error::Parse {
                line,
                message: "indices are 1-based; found 0".into(),
            });
        }
        let value: f64 = match v.parse::<f64>() {
            Ok(x) if x.is_finite() => x,
            _ => {
                return Err(Error::Parse {
                    line,
                    message: format!("invalid value '{v}'"),
                })
            }
        };
        if let Some(&prev) = indices.last() {
            if index <= prev {
                return Err(Error::Parse {
                    line,
                    message: format!("indices not ascending: {index} after {prev}"),
                });
            }
        }
        indices.push(index);
        values.push(value);
    }
    Ok((label, SparseVector { indices, values }))
}

/// Parses LIBSVM text into a dataset grouped by label.
pub fn parse_libsvm<R: BufRead>(reader: R) -> Result<ClassGroupedDataset> {
    let mut classes: Vec<LabeledClass> = Vec::new();
    let mut feature_dim = 0usize;
    for (i, raw) in reader.lines().enumerate() {
        let line_no = i + 1;
        let raw = raw.map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (label, v) = parse_line(content, line_no)?;
        feature_dim = feature_dim.max(v.max_index() as usize);
        match classes.iter_mut().find(|c| c.label == label) {
            Some(c) => c.points.push(v),
            None => classes.push(LabeledClass {
                label,
                points: vec![v],
            }),
        }
    }
    if classes.is_empty() {
        return Err(Error::Data("input contains no data lines".into()));
    }
    ClassGroupedDataset::new(classes, feature_dim)
}

/// `m_classes` Gaussian clouds in `R^n_dim`; class `i` (0-based) is shifted by
/// `separation * e_{i mod n_dim}`. Labels are `1..=m_classes`.
pub fn synth_gaussian_classes(
    rng: &mut RandomSource,
    m_classes: usize,
    n_dim: usize,
    points_per_class: usize,
    separation: f64,
) -> Result<ClassGroupedDataset> {
    if m_classes < 2 {
        return Err(Error::arg("need at least 2 classes"));
    }
    if points_per_class == 0 || n_dim == 0 {
        return Err(Error::arg("points_per_class and n_dim must be positive"));
    }
    if !separation.is_finite() {
        return Err(Error::NonFinite("separation"));
    }
    let classes = (0..m_classes)
        .map(|i| LabeledClass {
            label: i as i64 + 1,
            points: (0..points_per_class)
                .map(|_| {
                    let mut v: Vec<f64> = (0..n_dim).map(|_| rng.standard_normal()).collect();
                    v[i % n_dim] += separation;
                    SparseVector::from_dense(&v)
                })
                .collect(),
        })
        .collect();
    ClassGroupedDataset::new(classes, n_dim)
}
