//! Tabular input, supervised binarization and duplicate merging.

mod io;
mod mdlp;
mod split;
mod unique;

pub use io::{load_csv, read_binarized_csv, write_binarized_csv, LabelColumn};
pub use mdlp::{mdlp_binarize, mdlp_cut_points};
pub use split::split;
pub use unique::reduce_unique;

use serde::{Deserialize, Serialize};

use crate::error::DataError;

#[derive(Clone, Debug, PartialEq)]
pub enum FeatureValue {
    Numeric(f64),
    Categorical(String),
}

/// Rows as read from disk, before any discretization.
#[derive(Clone, Debug)]
pub struct RawDataset {
    pub feature_names: Vec<String>,
    pub rows: Vec<Vec<FeatureValue>>,
    pub labels: Vec<String>,
}

impl RawDataset {
    pub fn new(
        feature_names: Vec<String>,
        rows: Vec<Vec<FeatureValue>>,
        labels: Vec<String>,
    ) -> Result<Self, DataError> {
        if rows.is_empty() || rows.len() != labels.len() {
            return Err(DataError::Malformed(format!(
                "{} rows but {} labels",
                rows.len(),
                labels.len()
            )));
        }
        for (r, row) in rows.iter().enumerate() {
            if row.len() != feature_names.len() {
                return Err(DataError::InconsistentArity {
                    row: r + 1,
                    expected: feature_names.len(),
                    found: row.len(),
                });
            }
        }
        Ok(Self {
            feature_names,
            rows,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    /// Distinct labels in class-index order: numeric order when every label
    /// parses as a number, lexicographic otherwise.
    pub fn class_names(&self) -> Vec<String> {
        let mut names: Vec<String> = self.labels.clone();
        names.sort();
        names.dedup();
        if names.iter().all(|s| s.parse::<f64>().is_ok()) {
            names.sort_by(|a, b| {
                a.parse::<f64>()
                    .unwrap()
                    .total_cmp(&b.parse::<f64>().unwrap())
            });
        }
        names
    }

    pub fn column(&self, a: usize) -> impl Iterator<Item = &FeatureValue> + '_ {
        self.rows.iter().map(move |r| &r[a])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AttributeRule {
    /// Sorted thresholds; bin `j` holds values in `(cut[j-1], cut[j]]`.
    CutPoints { cuts: Vec<f64> },
    Categories { values: Vec<String> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttributeBinning {
    pub name: String,
    #[serde(flatten)]
    pub rule: AttributeRule,
    /// No usable split: the attribute contributes one constant-0 column.
    #[serde(default)]
    pub degenerate: bool,
}

impl AttributeBinning {
    /// Number of admissible bins `m_a`.
    pub fn arity(&self) -> usize {
        match &self.rule {
            AttributeRule::CutPoints { cuts } => cuts.len() + 1,
            AttributeRule::Categories { values } => values.len(),
        }
    }

    /// Number of binary columns this attribute produces.
    pub fn n_columns(&self) -> usize {
        if self.degenerate {
            1
        } else {
            self.arity()
        }
    }

    pub fn column_names(&self) -> Vec<String> {
        if self.degenerate {
            return vec![format!("{}=const", self.name)];
        }
        match &self.rule {
            AttributeRule::CutPoints { cuts } => {
                let mut names = Vec::with_capacity(cuts.len() + 1);
                for j in 0..=cuts.len() {
                    let name = match (j.checked_sub(1).map(|p| cuts[p]), cuts.get(j)) {
                        (None, Some(hi)) => format!("{}<={}", self.name, hi),
                        (Some(lo), Some(hi)) => format!("{}<{}<={}", lo, self.name, hi),
                        (Some(lo), None) => format!("{}>{}", self.name, lo),
                        (None, None) => format!("{}=any", self.name),
                    };
                    names.push(name);
                }
                names
            }
            AttributeRule::Categories { values } => values
                .iter()
                .map(|v| format!("{}={}", self.name, v))
                .collect(),
        }
    }

    /// One-hot encoding of a single value (bin membership semantics).
    pub fn encode(&self, value: &FeatureValue, out: &mut Vec<u8>) {
        let start = out.len();
        out.resize(start + self.n_columns(), 0);
        if self.degenerate {
            return;
        }
        match (&self.rule, value) {
            (AttributeRule::CutPoints { cuts }, FeatureValue::Numeric(v)) => {
                let bin = cuts.partition_point(|c| *v > *c);
                out[start + bin] = 1;
            }
            (AttributeRule::Categories { values }, v) => {
                let text = match v {
                    FeatureValue::Categorical(s) => s.clone(),
                    FeatureValue::Numeric(x) => format_number(*x),
                };
                if let Some(pos) = values.iter().position(|c| *c == text) {
                    out[start + pos] = 1;
                }
            }
            // A categorical value under a numeric rule cannot be placed.
            (AttributeRule::CutPoints { .. }, FeatureValue::Categorical(_)) => {}
        }
    }
}

pub(crate) fn format_number(x: f64) -> String {
    if x.fract() == 0.0 && x.abs() < 1e15 {
        format!("{}", x as i64)
    } else {
        format!("{}", x)
    }
}

/// Per-attribute binarization rules learned from training data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinRules {
    pub attributes: Vec<AttributeBinning>,
    pub classes: Vec<String>,
}

impl BinRules {
    pub fn n_columns(&self) -> usize {
        self.attributes.iter().map(|a| a.n_columns()).sum()
    }

    /// Product of the attribute arities, the `∏ m_a` factor of the unique-count bound.
    pub fn arity_product(&self) -> f64 {
        self.attributes.iter().map(|a| a.arity() as f64).product()
    }

    pub fn column_names(&self) -> Vec<String> {
        self.attributes
            .iter()
            .flat_map(|a| a.column_names())
            .collect()
    }

    pub fn degenerate_columns(&self) -> Vec<bool> {
        self.attributes
            .iter()
            .flat_map(|a| vec![a.degenerate; a.n_columns()])
            .collect()
    }

    /// Applies learned rules to (possibly unseen) raw data. Labels not seen
    /// during learning are rejected.
    pub fn apply(&self, data: &RawDataset) -> Result<BinarizedDataset, DataError> {
        if data.n_features() != self.attributes.len() {
            return Err(DataError::Malformed(format!(
                "data has {} attributes, rules describe {}",
                data.n_features(),
                self.attributes.len()
            )));
        }
        let mut x = Vec::with_capacity(data.len());
        let mut y = Vec::with_capacity(data.len());
        for (row, label) in data.rows.iter().zip(&data.labels) {
            let mut bits = Vec::with_capacity(self.n_columns());
            for (attr, value) in self.attributes.iter().zip(row) {
                attr.encode(value, &mut bits);
            }
            x.push(bits);
            let k = self
                .classes
                .iter()
                .position(|c| c == label)
                .ok_or_else(|| DataError::Malformed(format!("unknown label {label:?}")))?;
            y.push(k);
        }
        BinarizedDataset::from_parts(
            x,
            y,
            self.column_names(),
            self.classes.clone(),
            self.degenerate_columns(),
            false,
        )
    }

    pub fn to_json(&self) -> Result<String, DataError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self, DataError> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Binary feature matrix with class indices.
#[derive(Clone, Debug, PartialEq)]
pub struct BinarizedDataset {
    x: Vec<Vec<u8>>,
    y: Vec<usize>,
    feature_names: Vec<String>,
    class_names: Vec<String>,
    degenerate: Vec<bool>,
}

impl BinarizedDataset {
    /// Validates the 0/1 matrix and requires every class to be present.
    pub fn new(
        x: Vec<Vec<u8>>,
        y: Vec<usize>,
        feature_names: Vec<String>,
        class_names: Vec<String>,
    ) -> Result<Self, DataError> {
        let degenerate = vec![false; feature_names.len()];
        Self::from_parts(x, y, feature_names, class_names, degenerate, true)
    }

    /// Convenience constructor with generated names `f0, f1, …` and classes `0..k`.
    pub fn from_matrix(x: Vec<Vec<u8>>, y: Vec<usize>) -> Result<Self, DataError> {
        let n_features = x.first().map_or(0, |r| r.len());
        let n_classes = y.iter().copied().max().map_or(0, |m| m + 1).max(2);
        Self::new(
            x,
            y,
            (0..n_features).map(|f| format!("f{f}")).collect(),
            (0..n_classes).map(|k| k.to_string()).collect(),
        )
    }

    pub(crate) fn from_parts(
        x: Vec<Vec<u8>>,
        y: Vec<usize>,
        feature_names: Vec<String>,
        class_names: Vec<String>,
        degenerate: Vec<bool>,
        require_all_classes: bool,
    ) -> Result<Self, DataError> {
        if x.is_empty() || x.len() != y.len() {
            return Err(DataError::Malformed(format!(
                "{} rows but {} labels",
                x.len(),
                y.len()
            )));
        }
        let n_features = feature_names.len();
        for (r, row) in x.iter().enumerate() {
            if row.len() != n_features {
                return Err(DataError::InconsistentArity {
                    row: r + 1,
                    expected: n_features,
                    found: row.len(),
                });
            }
            if row.iter().any(|&v| v > 1) {
                return Err(DataError::Malformed(format!("row {} is not binary", r + 1)));
            }
        }
        let k = class_names.len();
        if let Some(bad) = y.iter().find(|&&c| c >= k) {
            return Err(DataError::Malformed(format!(
                "label index {bad} outside 0..{k}"
            )));
        }
        if require_all_classes {
            let mut seen = vec![false; k];
            y.iter().for_each(|&c| seen[c] = true);
            if let Some(missing) = seen.iter().position(|s| !s) {
                return Err(DataError::Malformed(format!(
                    "class {:?} has no instances",
                    class_names[missing]
                )));
            }
        }
        Ok(Self {
            x,
            y,
            feature_names,
            class_names,
            degenerate,
        })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn rows(&self) -> &[Vec<u8>] {
        &self.x
    }

    pub fn labels(&self) -> &[usize] {
        &self.y
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn degenerate(&self) -> &[bool] {
        &self.degenerate
    }

    /// Rows at `indices`, in that order. Class presence is not re-checked,
    /// so a small split may miss a class.
    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            x: indices.iter().map(|&i| self.x[i].clone()).collect(),
            y: indices.iter().map(|&i| self.y[i]).collect(),
            feature_names: self.feature_names.clone(),
            class_names: self.class_names.clone(),
            degenerate: self.degenerate.clone(),
        }
    }
}

/// Duplicate-merged training data with integer multiplicities.
#[derive(Clone, Debug, PartialEq)]
pub struct UniqueDataset {
    x: Vec<Vec<u8>>,
    y: Vec<usize>,
    w: Vec<u64>,
    origin: Vec<Vec<usize>>,
    feature_names: Vec<String>,
    class_names: Vec<String>,
    degenerate: Vec<bool>,
}

impl UniqueDataset {
    /// Builds a weighted dataset directly. Each row becomes its own unique
    /// instance; `(row, label)` pairs must be distinct and weights positive.
    pub fn from_weighted(
        x: Vec<Vec<u8>>,
        y: Vec<usize>,
        w: Vec<u64>,
        n_classes: usize,
    ) -> Result<Self, DataError> {
        if x.len() != w.len() || w.contains(&0) {
            return Err(DataError::Malformed("weights must be positive, one per row".into()));
        }
        let n_features = x.first().map_or(0, |r| r.len());
        let binarized = BinarizedDataset::from_parts(
            x,
            y,
            (0..n_features).map(|f| format!("f{f}")).collect(),
            (0..n_classes).map(|k| k.to_string()).collect(),
            vec![false; n_features],
            false,
        )?;
        let mut seen = std::collections::HashSet::new();
        for (row, label) in binarized.x.iter().zip(&binarized.y) {
            if !seen.insert((row, label)) {
                return Err(DataError::Malformed("duplicate (row, label) pair".into()));
            }
        }
        let mut next = 0;
        let origin = w
            .iter()
            .map(|&m| {
                let ids: Vec<usize> = (next..next + m as usize).collect();
                next += m as usize;
                ids
            })
            .collect();
        Ok(Self {
            x: binarized.x,
            y: binarized.y,
            w,
            origin,
            feature_names: binarized.feature_names,
            class_names: binarized.class_names,
            degenerate: binarized.degenerate,
        })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn rows(&self) -> &[Vec<u8>] {
        &self.x
    }

    pub fn row(&self, i: usize) -> &[u8] {
        &self.x[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.y
    }

    pub fn label(&self, i: usize) -> usize {
        self.y[i]
    }

    pub fn weights(&self) -> &[u64] {
        &self.w
    }

    pub fn weight(&self, i: usize) -> u64 {
        self.w[i]
    }

    pub fn origin_map(&self) -> &[Vec<usize>] {
        &self.origin
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn degenerate(&self) -> &[bool] {
        &self.degenerate
    }

    /// `|I|`, the number of original rows.
    pub fn total_weight(&self) -> u64 {
        self.w.iter().sum()
    }

    /// Weighted class totals, indexed by class.
    pub fn class_weights(&self) -> Vec<u64> {
        let mut totals = vec![0; self.n_classes()];
        for (&k, &w) in self.y.iter().zip(&self.w) {
            totals[k] += w;
        }
        totals
    }

    /// `(n⁺, n⁻)` for binary data: class 1 is positive.
    pub fn positives_negatives(&self) -> (u64, u64) {
        let totals = self.class_weights();
        (
            totals.get(1).copied().unwrap_or(0),
            totals.first().copied().unwrap_or(0),
        )
    }

    /// Rebuilds the original row multiset in original order.
    pub fn expand(&self) -> BinarizedDataset {
        let n: usize = self.origin.iter().map(|o| o.len()).sum();
        let mut x = vec![Vec::new(); n];
        let mut y = vec![0; n];
        for (u, ids) in self.origin.iter().enumerate() {
            for &i in ids {
                x[i] = self.x[u].clone();
                y[i] = self.y[u];
            }
        }
        BinarizedDataset {
            x,
            y,
            feature_names: self.feature_names.clone(),
            class_names: self.class_names.clone(),
            degenerate: self.degenerate.clone(),
        }
    }

    /// Restricts to the given feature columns and re-merges duplicates.
    /// Column `j` of the result is `features[j]` of `self`.
    pub fn project(&self, features: &[usize]) -> UniqueDataset {
        let x: Vec<Vec<u8>> = self
            .x
            .iter()
            .map(|row| features.iter().map(|&f| row[f]).collect())
            .collect();
        let mut index: std::collections::HashMap<(Vec<u8>, usize), usize> = std::collections::HashMap::new();
        let mut out = UniqueDataset {
            x: Vec::new(),
            y: Vec::new(),
            w: Vec::new(),
            origin: Vec::new(),
            feature_names: features.iter().map(|&f| self.feature_names[f].clone()).collect(),
            class_names: self.class_names.clone(),
            degenerate: features.iter().map(|&f| self.degenerate[f]).collect(),
        };
        for (u, row) in x.into_iter().enumerate() {
            let key = (row.clone(), self.y[u]);
            match index.get(&key) {
                Some(&j) => {
                    out.w[j] += self.w[u];
                    out.origin[j].extend(self.origin[u].iter().copied());
                }
                None => {
                    index.insert(key, out.x.len());
                    out.x.push(row);
                    out.y.push(self.y[u]);
                    out.w.push(self.w[u]);
                    out.origin.push(self.origin[u].clone());
                }
            }
        }
        for ids in &mut out.origin {
            ids.sort_unstable();
        }
        out
    }
}
