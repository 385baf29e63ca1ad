//! Confusion counts, metric closed forms and the objective scores that the
//! MIP encodings are built to reproduce.

use serde::{Deserialize, Serialize};

use crate::dataset::UniqueDataset;
use crate::error::TreeError;

/// Weighted binary confusion matrix; class 1 is the positive class.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn new(tp: u64, tn: u64, n_plus: u64, n_minus: u64) -> Self {
        assert!(tp <= n_plus && tn <= n_minus, "counts exceed class totals");
        Self {
            tp,
            tn,
            fp: n_minus - tn,
            fn_: n_plus - tp,
        }
    }

    pub fn n_plus(&self) -> u64 {
        self.tp + self.fn_
    }

    pub fn n_minus(&self) -> u64 {
        self.tn + self.fp
    }

    pub fn total(&self) -> u64 {
        self.n_plus() + self.n_minus()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "metric", rename_all = "snake_case")]
pub enum MetricSpec {
    Accuracy,
    FBeta { beta: f64 },
    Mcc,
    BalancedAccuracy,
    CostSensitive { c_pos: f64, c_neg: f64 },
    /// Per-unique-instance reward for a correct prediction.
    InstanceCost { kappa: Vec<f64> },
    GMean,
    FowlkesMallows,
    IoU,
    Dor { bound: f64 },
    /// `α₁·F_β + (α₂/|I|)·Σ w_i g_i`
    Combination { alpha1: f64, alpha2: f64, beta: f64 },
}

impl MetricSpec {
    pub fn name(&self) -> &'static str {
        match self {
            MetricSpec::Accuracy => "accuracy",
            MetricSpec::FBeta { .. } => "fbeta",
            MetricSpec::Mcc => "mcc",
            MetricSpec::BalancedAccuracy => "ba",
            MetricSpec::CostSensitive { .. } => "cost",
            MetricSpec::InstanceCost { .. } => "icost",
            MetricSpec::GMean => "gmean",
            MetricSpec::FowlkesMallows => "fm",
            MetricSpec::IoU => "iou",
            MetricSpec::Dor { .. } => "dor",
            MetricSpec::Combination { .. } => "combo",
        }
    }

    pub fn f1() -> Self {
        MetricSpec::FBeta { beta: 1.0 }
    }

    /// Metrics whose score is a ratio of counts, encoded with auxiliary variables.
    pub fn is_nonlinear(&self) -> bool {
        matches!(
            self,
            MetricSpec::FBeta { .. }
                | MetricSpec::Mcc
                | MetricSpec::GMean
                | MetricSpec::FowlkesMallows
                | MetricSpec::IoU
                | MetricSpec::Dor { .. }
                | MetricSpec::Combination { .. }
        )
    }

    /// Whether the score never decreases when one more instance becomes
    /// correct. True for every metric whose parameters pass [`Self::validate`].
    pub fn is_monotone(&self) -> bool {
        match self {
            MetricSpec::CostSensitive { c_pos, c_neg } => *c_pos >= 0.0 && *c_neg >= 0.0,
            MetricSpec::InstanceCost { kappa } => kappa.iter().all(|k| *k >= 0.0),
            MetricSpec::Combination { alpha1, alpha2, .. } => *alpha1 >= 0.0 && *alpha2 >= 0.0,
            _ => true,
        }
    }

    pub fn requires_binary(&self) -> bool {
        self.is_nonlinear() || matches!(self, MetricSpec::CostSensitive { .. })
    }

    pub fn validate(&self, data: &UniqueDataset) -> Result<(), TreeError> {
        if self.requires_binary() && data.n_classes() != 2 {
            return Err(TreeError::NotBinary(self.name().to_string()));
        }
        let bad = |msg: String| Err(TreeError::InvalidParameter(msg));
        match self {
            MetricSpec::FBeta { beta } if !(beta.is_finite() && *beta > 0.0) => bad(format!("beta = {beta}")),
            MetricSpec::CostSensitive { c_pos, c_neg } if !(*c_pos >= 0.0 && *c_neg >= 0.0) => {
                bad(format!("costs ({c_pos}, {c_neg}) must be non-negative"))
            }
            MetricSpec::InstanceCost { kappa } if kappa.len() != data.len() => bad(format!(
                "{} instance costs for {} unique instances",
                kappa.len(),
                data.len()
            )),
            MetricSpec::InstanceCost { kappa } if kappa.iter().any(|k| !(k.is_finite() && *k >= 0.0)) => {
                bad("instance costs must be finite and non-negative".into())
            }
            MetricSpec::Dor { bound } if !(bound.is_finite() && *bound > 0.0) => bad(format!("DOR bound = {bound}")),
            MetricSpec::Combination { alpha1, alpha2, beta } => {
                if !(*alpha1 >= 0.0 && *alpha2 >= 0.0) {
                    bad(format!("weights ({alpha1}, {alpha2}) must be non-negative"))
                } else if !(beta.is_finite() && *beta > 0.0) {
                    bad(format!("beta = {beta}"))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }
}

/// `(1+β²)TP / (β²n⁺ + n⁻ + TP − TN)`, 0 when the denominator vanishes.
pub fn f_beta(c: &ConfusionCounts, beta: f64) -> f64 {
    let b2 = beta * beta;
    let den = b2 * c.n_plus() as f64 + c.n_minus() as f64 + c.tp as f64 - c.tn as f64;
    if den <= 0.0 {
        0.0
    } else {
        (1.0 + b2) * c.tp as f64 / den
    }
}

/// Precision/recall form of F-beta, used to cross-check [`f_beta`].
pub fn f_beta_pr(c: &ConfusionCounts, beta: f64) -> f64 {
    if c.tp == 0 {
        return 0.0;
    }
    let precision = c.tp as f64 / (c.tp + c.fp) as f64;
    let recall = c.tp as f64 / c.n_plus() as f64;
    let b2 = beta * beta;
    (1.0 + b2) * precision * recall / (b2 * precision + recall)
}

/// `(A, U, V)` with `A = n⁺TN + n⁻TP − n⁺n⁻`, `U = TP − TN + n⁻`, `V = TN − TP + n⁺`.
pub fn mcc_parts(c: &ConfusionCounts) -> (i128, i128, i128) {
    let (tp, tn) = (c.tp as i128, c.tn as i128);
    let (np, nm) = (c.n_plus() as i128, c.n_minus() as i128);
    (np * tn + nm * tp - np * nm, tp - tn + nm, tn - tp + np)
}

pub fn mcc(c: &ConfusionCounts) -> f64 {
    let (a, u, v) = mcc_parts(c);
    let den = (c.n_plus() as f64) * (c.n_minus() as f64) * (u as f64) * (v as f64);
    if den <= 0.0 {
        0.0
    } else {
        a as f64 / den.sqrt()
    }
}

pub fn balanced_accuracy(c: &ConfusionCounts) -> f64 {
    let mut recalls = Vec::new();
    if c.n_plus() > 0 {
        recalls.push(c.tp as f64 / c.n_plus() as f64);
    }
    if c.n_minus() > 0 {
        recalls.push(c.tn as f64 / c.n_minus() as f64);
    }
    if recalls.is_empty() {
        0.0
    } else {
        recalls.iter().sum::<f64>() / recalls.len() as f64
    }
}

/// `TP·TN / (n⁺n⁻)`, the square of the G-Mean.
pub fn gmean_sq(c: &ConfusionCounts) -> f64 {
    let den = c.n_plus() as f64 * c.n_minus() as f64;
    if den == 0.0 {
        0.0
    } else {
        c.tp as f64 * c.tn as f64 / den
    }
}

/// `TP² / (n⁺(TP + FP))`, the square of the Fowlkes–Mallows index.
pub fn fm_sq(c: &ConfusionCounts) -> f64 {
    if c.tp == 0 {
        0.0
    } else {
        let tp = c.tp as f64;
        tp * tp / (c.n_plus() as f64 * (c.tp + c.fp) as f64)
    }
}

pub fn iou(c: &ConfusionCounts) -> f64 {
    let den = c.total() - c.tn;
    if den == 0 {
        0.0
    } else {
        c.tp as f64 / den as f64
    }
}

/// Diagnostic odds ratio clamped to `bound`; a vanishing `FP·FN` gives `bound`.
pub fn dor(c: &ConfusionCounts, bound: f64) -> f64 {
    let den = c.fp as f64 * c.fn_ as f64;
    if den == 0.0 {
        bound
    } else {
        (c.tp as f64 * c.tn as f64 / den).min(bound)
    }
}

/// Outcome of applying a classifier to a unique dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub correct: Vec<bool>,
    pub correct_weight: u64,
    pub total_weight: u64,
    pub class_correct: Vec<u64>,
    pub class_totals: Vec<u64>,
}

impl Evaluation {
    pub fn from_predictions(data: &UniqueDataset, predictions: Vec<usize>) -> Self {
        let correct = predictions
            .iter()
            .zip(data.labels())
            .map(|(p, y)| p == y)
            .collect();
        Self::from_correct(data, correct)
    }

    /// Builds the evaluation from per-instance correctness flags `g`.
    pub fn from_correct(data: &UniqueDataset, correct: Vec<bool>) -> Self {
        let mut class_correct = vec![0u64; data.n_classes()];
        for (i, &ok) in correct.iter().enumerate() {
            if ok {
                class_correct[data.label(i)] += data.weight(i);
            }
        }
        Self {
            correct_weight: class_correct.iter().sum(),
            total_weight: data.total_weight(),
            class_totals: data.class_weights(),
            class_correct,
            correct,
        }
    }

    pub fn counts(&self) -> Option<ConfusionCounts> {
        (self.class_totals.len() == 2).then(|| {
            ConfusionCounts::new(
                self.class_correct[1],
                self.class_correct[0],
                self.class_totals[1],
                self.class_totals[0],
            )
        })
    }

    fn binary(&self, spec: &MetricSpec) -> Result<ConfusionCounts, TreeError> {
        self.counts().ok_or_else(|| TreeError::NotBinary(spec.name().to_string()))
    }

    pub fn accuracy(&self) -> f64 {
        self.correct_weight as f64 / self.total_weight as f64
    }

    /// The reported value of `spec` (MCC, G-Mean and FM unsquared).
    pub fn metric(&self, spec: &MetricSpec, data: &UniqueDataset) -> Result<f64, TreeError> {
        Ok(match spec {
            MetricSpec::Mcc => mcc(&self.binary(spec)?),
            MetricSpec::GMean => gmean_sq(&self.binary(spec)?).sqrt(),
            MetricSpec::FowlkesMallows => fm_sq(&self.binary(spec)?).sqrt(),
            MetricSpec::Accuracy => self.accuracy(),
            _ => self.score(spec, data)?,
        })
    }

    /// The quantity the master objective maximizes, before the split penalty.
    /// Accuracy is scored as the raw correct weight.
    pub fn score(&self, spec: &MetricSpec, data: &UniqueDataset) -> Result<f64, TreeError> {
        Ok(match spec {
            MetricSpec::Accuracy => self.correct_weight as f64,
            MetricSpec::FBeta { beta } => f_beta(&self.binary(spec)?, *beta),
            MetricSpec::Mcc => mcc(&self.binary(spec)?).max(0.0).powi(2),
            MetricSpec::BalancedAccuracy => {
                let recalls: Vec<f64> = self
                    .class_correct
                    .iter()
                    .zip(&self.class_totals)
                    .filter(|(_, &t)| t > 0)
                    .map(|(&c, &t)| c as f64 / t as f64)
                    .collect();
                recalls.iter().sum::<f64>() / recalls.len().max(1) as f64
            }
            MetricSpec::CostSensitive { c_pos, c_neg } => {
                let c = self.binary(spec)?;
                c_pos * c.tp as f64 + c_neg * c.tn as f64
            }
            MetricSpec::InstanceCost { kappa } => self
                .correct
                .iter()
                .enumerate()
                .filter(|(_, &ok)| ok)
                .map(|(i, _)| kappa[i] * data.weight(i) as f64)
                .sum(),
            MetricSpec::GMean => gmean_sq(&self.binary(spec)?),
            MetricSpec::FowlkesMallows => fm_sq(&self.binary(spec)?),
            MetricSpec::IoU => iou(&self.binary(spec)?),
            MetricSpec::Dor { bound } => dor(&self.binary(spec)?, *bound),
            MetricSpec::Combination { alpha1, alpha2, beta } => {
                alpha1 * f_beta(&self.binary(spec)?, *beta)
                    + alpha2 * self.correct_weight as f64 / self.total_weight as f64
            }
        })
    }

    /// Full objective: `(1−λ)·Σwg − λ·splits` for accuracy, `score − λ·splits` otherwise.
    pub fn objective(
        &self,
        spec: &MetricSpec,
        data: &UniqueDataset,
        lambda: f64,
        n_splits: usize,
    ) -> Result<f64, TreeError> {
        let score = self.score(spec, data)?;
        let scale = if matches!(spec, MetricSpec::Accuracy) { 1.0 - lambda } else { 1.0 };
        Ok(scale * score - lambda * n_splits as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn f1_example() {
        let c = ConfusionCounts::new(5, 3, 6, 4);
        assert!((f_beta(&c, 1.0) - 10.0 / 12.0).abs() < 1e-15);
        assert!((f_beta_pr(&c, 1.0) - 10.0 / 12.0).abs() < 1e-12);
    }

    #[test]
    fn all_negative_and_perfect() {
        let neg = ConfusionCounts::new(0, 4, 6, 4);
        assert_eq!(mcc_parts(&neg).0, 0);
        assert_eq!(mcc(&neg), 0.0);
        assert_eq!(f_beta(&neg, 1.0), 0.0);
        let perfect = ConfusionCounts::new(6, 4, 6, 4);
        for v in [
            f_beta(&perfect, 1.0),
            mcc(&perfect),
            balanced_accuracy(&perfect),
            gmean_sq(&perfect).sqrt(),
            fm_sq(&perfect).sqrt(),
            iou(&perfect),
        ] {
            assert!((v - 1.0).abs() < 1e-12);
        }
        assert_eq!(dor(&perfect, 50.0), 50.0);
    }

    fn counts() -> impl Strategy<Value = ConfusionCounts> {
        (0u64..200, 0u64..200).prop_flat_map(|(np, nm)| {
            (0..=np, 0..=nm).prop_map(move |(tp, tn)| ConfusionCounts::new(tp, tn, np, nm))
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]
        #[test]
        fn metric_ranges_and_identities(c in counts(), beta in 0.05f64..5.0) {
            let f = f_beta(&c, beta);
            prop_assert!((0.0..=1.0 + 1e-12).contains(&f));
            prop_assert!((f - f_beta_pr(&c, beta)).abs() < 1e-12);
            let m = mcc(&c);
            prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&m));
            let (a, u, v) = mcc_parts(&c);
            if u * v > 0 && c.n_plus() * c.n_minus() > 0 {
                let sq = (a * a) as f64 / (c.n_plus() as f64 * c.n_minus() as f64 * u as f64 * v as f64);
                prop_assert!((m * m - sq).abs() < 1e-12);
            }
            for v in [balanced_accuracy(&c), gmean_sq(&c), fm_sq(&c), iou(&c)] {
                prop_assert!((0.0..=1.0 + 1e-12).contains(&v));
            }
        }
    }
}
