//! Entropy-based supervised discretization with the MDL stopping rule.

use super::{AttributeBinning, AttributeRule, BinRules, BinarizedDataset, FeatureValue, RawDataset};
use crate::error::DataError;

fn entropy(counts: &[usize], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}

fn classes_present(counts: &[usize]) -> usize {
    counts.iter().filter(|&&c| c > 0).count()
}

/// Recursive MDLP cut points for one numeric attribute, sorted ascending.
///
/// Candidate thresholds are midpoints between adjacent distinct values;
/// among equal-entropy candidates the smallest threshold wins.
pub fn mdlp_cut_points(values: &[f64], labels: &[usize], n_classes: usize) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let v: Vec<f64> = order.iter().map(|&i| values[i]).collect();
    let y: Vec<usize> = order.iter().map(|&i| labels[i]).collect();
    let mut cuts = Vec::new();
    split_range(&v, &y, n_classes, 0, v.len(), &mut cuts);
    cuts.sort_by(f64::total_cmp);
    cuts
}

fn split_range(v: &[f64], y: &[usize], k: usize, lo: usize, hi: usize, cuts: &mut Vec<f64>) {
    let n = hi - lo;
    if n < 2 {
        return;
    }
    let mut total = vec![0usize; k];
    for &c in &y[lo..hi] {
        total[c] += 1;
    }
    let ent_s = entropy(&total, n);
    if ent_s == 0.0 {
        return;
    }

    let mut left = vec![0usize; k];
    let mut best: Option<(f64, usize, Vec<usize>)> = None;
    for p in lo + 1..hi {
        left[y[p - 1]] += 1;
        if v[p - 1] == v[p] {
            continue;
        }
        let n1 = p - lo;
        let right: Vec<usize> = total.iter().zip(&left).map(|(t, l)| t - l).collect();
        let e = (n1 as f64 * entropy(&left, n1) + (n - n1) as f64 * entropy(&right, n - n1)) / n as f64;
        if best.as_ref().map_or(true, |(be, _, _)| e < *be - 1e-12) {
            best = Some((e, p, left.clone()));
        }
    }
    let Some((e, p, left)) = best else {
        return;
    };

    let n1 = p - lo;
    let right: Vec<usize> = total.iter().zip(&left).map(|(t, l)| t - l).collect();
    let (ent1, ent2) = (entropy(&left, n1), entropy(&right, n - n1));
    let (k_s, k1, k2) = (
        classes_present(&total) as f64,
        classes_present(&left) as f64,
        classes_present(&right) as f64,
    );
    let gain = ent_s - e;
    let delta = (3f64.powf(k_s) - 2.0).log2() - (k_s * ent_s - k1 * ent1 - k2 * ent2);
    let threshold = ((n as f64 - 1.0).log2() + delta) / n as f64;
    if gain <= threshold {
        return;
    }
    cuts.push((v[p - 1] + v[p]) / 2.0);
    split_range(v, y, k, lo, p, cuts);
    split_range(v, y, k, p, hi, cuts);
}

fn numeric_rule(name: &str, values: &[f64], labels: &[usize], n_classes: usize) -> AttributeBinning {
    let mut distinct: Vec<f64> = values.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    let cuts = match distinct.len() {
        0 | 1 => Vec::new(),
        // Already binary: keep both levels as they are.
        2 => vec![(distinct[0] + distinct[1]) / 2.0],
        _ => mdlp_cut_points(values, labels, n_classes),
    };
    AttributeBinning {
        name: name.to_string(),
        degenerate: cuts.is_empty(),
        rule: AttributeRule::CutPoints { cuts },
    }
}

/// Learns binarization rules on `data` and applies them.
///
/// Numeric attributes are discretized by MDLP (two-valued attributes pass
/// through unchanged), categorical attributes are one-hot encoded, and an
/// attribute without a usable split yields a single constant-0 column
/// flagged as degenerate.
pub fn mdlp_binarize(data: &RawDataset) -> Result<(BinRules, BinarizedDataset), DataError> {
    let classes = data.class_names();
    if classes.len() < 2 {
        return Err(DataError::SingleClass);
    }
    let labels: Vec<usize> = data
        .labels
        .iter()
        .map(|l| classes.iter().position(|c| c == l).unwrap())
        .collect();

    let mut attributes = Vec::with_capacity(data.n_features());
    for (a, name) in data.feature_names.iter().enumerate() {
        let numeric: Option<Vec<f64>> = data
            .column(a)
            .map(|v| match v {
                FeatureValue::Numeric(x) => Some(*x),
                FeatureValue::Categorical(_) => None,
            })
            .collect();
        let binning = match numeric {
            Some(values) => numeric_rule(name, &values, &labels, classes.len()),
            None => {
                let mut values: Vec<String> = data
                    .column(a)
                    .map(|v| match v {
                        FeatureValue::Categorical(s) => s.clone(),
                        FeatureValue::Numeric(x) => super::format_number(*x),
                    })
                    .collect();
                values.sort();
                values.dedup();
                let degenerate = values.len() < 2;
                AttributeBinning {
                    name: name.clone(),
                    rule: AttributeRule::Categories { values },
                    degenerate,
                }
            }
        };
        attributes.push(binning);
    }
    let rules = BinRules { attributes, classes };
    let binarized = rules.apply(data)?;
    // Every class is present by construction; re-check the invariant.
    let binarized = BinarizedDataset::from_parts(
        binarized.x,
        binarized.y,
        binarized.feature_names,
        binarized.class_names,
        binarized.degenerate,
        true,
    )?;
    Ok((rules, binarized))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// MDL acceptance test written out directly for one candidate split.
    fn mdl_accepts(left: &[usize], right: &[usize]) -> (f64, f64) {
        let n1: usize = left.iter().sum();
        let n2: usize = right.iter().sum();
        let n = n1 + n2;
        let total: Vec<usize> = left.iter().zip(right).map(|(a, b)| a + b).collect();
        let h = |c: &[usize], m: usize| -> f64 {
            c.iter()
                .filter(|&&x| x > 0)
                .map(|&x| {
                    let p = x as f64 / m as f64;
                    -p * p.log2()
                })
                .sum()
        };
        let e = (n1 as f64 * h(left, n1) + n2 as f64 * h(right, n2)) / n as f64;
        let gain = h(&total, n) - e;
        let kk = |c: &[usize]| c.iter().filter(|&&x| x > 0).count() as f64;
        let delta = (3f64.powf(kk(&total)) - 2.0).log2()
            - (kk(&total) * h(&total, n) - kk(left) * h(left, n1) - kk(right) * h(right, n2));
        (gain, ((n as f64 - 1.0).log2() + delta) / n as f64)
    }

    #[test]
    fn single_boundary_example() {
        // Candidates 1.5, 5, 8.5; only 5 separates the classes.
        let (gain, thr) = mdl_accepts(&[2, 0], &[0, 2]);
        assert!((gain - 1.0).abs() < 1e-12);
        assert!(thr < gain);
        let (gain_15, _) = mdl_accepts(&[1, 0], &[1, 2]);
        assert!(gain_15 < gain);
        let cuts = mdlp_cut_points(&[1.0, 2.0, 8.0, 9.0], &[0, 0, 1, 1], 2);
        assert_eq!(cuts, vec![5.0]);
        assert!(cuts[0] > 2.0 && cuts[0] <= 8.0);
    }

    #[test]
    fn uninformative_split_is_rejected() {
        let cuts = mdlp_cut_points(&[1.0, 2.0, 3.0, 4.0], &[0, 1, 0, 1], 2);
        assert!(cuts.is_empty());
    }

    #[test]
    fn equal_gain_takes_smallest_threshold() {
        // Two symmetric best boundaries; both have the same entropy.
        let values = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let labels = [0, 0, 1, 1, 0, 0];
        let mut v: Vec<f64> = values.to_vec();
        let mut y: Vec<usize> = labels.to_vec();
        let mut cuts = Vec::new();
        split_range(&v, &y, 2, 0, 6, &mut cuts);
        if let Some(first) = cuts.first() {
            assert_eq!(*first, 2.5);
        }
        v.reverse();
        y.reverse();
        assert_eq!(mdlp_cut_points(&values, &labels, 2), mdlp_cut_points(&v, &y, 2));
    }

    fn raw(cols: Vec<Vec<FeatureValue>>, labels: &[&str]) -> RawDataset {
        let n = labels.len();
        let rows = (0..n).map(|r| cols.iter().map(|c| c[r].clone()).collect()).collect();
        RawDataset::new(
            (0..cols.len()).map(|a| format!("a{a}")).collect(),
            rows,
            labels.iter().map(|s| s.to_string()).collect(),
        )
        .unwrap()
    }

    fn nums(v: &[f64]) -> Vec<FeatureValue> {
        v.iter().map(|&x| FeatureValue::Numeric(x)).collect()
    }

    #[test]
    fn binarize_example_and_degenerate() {
        let data = raw(
            vec![nums(&[1.0, 2.0, 8.0, 9.0]), nums(&[3.0, 3.0, 3.0, 3.0]), nums(&[0.0, 1.0, 0.0, 1.0])],
            &["0", "0", "1", "1"],
        );
        let (rules, bin) = mdlp_binarize(&data).unwrap();
        assert_eq!(rules.attributes[0].rule, AttributeRule::CutPoints { cuts: vec![5.0] });
        assert_eq!(rules.attributes[0].arity(), 2);
        assert!(rules.attributes[1].degenerate);
        assert_eq!(rules.attributes[2].arity(), 2);
        assert!(!rules.attributes[2].degenerate);
        assert_eq!(bin.n_features(), 2 + 1 + 2);
        assert_eq!(bin.rows()[0], vec![1, 0, 0, 1, 0]);
        assert_eq!(bin.rows()[3], vec![0, 1, 0, 0, 1]);
        assert_eq!(bin.degenerate(), &[false, false, true, false, false]);
    }

    #[test]
    fn categorical_one_hot() {
        let cats = ["x", "y", "x", "z"]
            .iter()
            .map(|s| FeatureValue::Categorical(s.to_string()))
            .collect();
        let data = raw(vec![cats], &["a", "b", "a", "b"]);
        let (rules, bin) = mdlp_binarize(&data).unwrap();
        assert_eq!(rules.attributes[0].arity(), 3);
        assert_eq!(bin.rows()[3], vec![0, 0, 1]);
        assert_eq!(rules.column_names(), vec!["a0=x", "a0=y", "a0=z"]);
    }

    #[test]
    fn single_class_is_an_error() {
        let data = raw(vec![nums(&[1.0, 2.0])], &["a", "a"]);
        assert!(matches!(mdlp_binarize(&data), Err(DataError::SingleClass)));
    }

    #[test]
    fn rules_json_round_trip() {
        let data = raw(vec![nums(&[1.0, 2.0, 8.0, 9.0])], &["0", "0", "1", "1"]);
        let (rules, _) = mdlp_binarize(&data).unwrap();
        let text = rules.to_json().unwrap();
        assert!(text.contains("\"cut_points\""));
        assert_eq!(BinRules::from_json(&text).unwrap(), rules);
    }
}
