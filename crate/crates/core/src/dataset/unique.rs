use std::collections::HashMap;

use super::{BinarizedDataset, UniqueDataset};

/// Merges rows with identical `(features, label)` into weighted unique
/// instances, kept in first-occurrence order.
pub fn reduce_unique(data: &BinarizedDataset) -> UniqueDataset {
    let mut index: HashMap<(&[u8], usize), usize> = HashMap::new();
    let mut x = Vec::new();
    let mut y = Vec::new();
    let mut w = Vec::new();
    let mut origin: Vec<Vec<usize>> = Vec::new();
    for (i, (row, &label)) in data.rows().iter().zip(data.labels()).enumerate() {
        match index.get(&(row.as_slice(), label)) {
            Some(&u) => {
                w[u] += 1;
                origin[u].push(i);
            }
            None => {
                index.insert((row.as_slice(), label), x.len());
                x.push(row.clone());
                y.push(label);
                w.push(1);
                origin.push(vec![i]);
            }
        }
    }
    UniqueDataset {
        x,
        y,
        w,
        origin,
        feature_names: data.feature_names().to_vec(),
        class_names: data.class_names().to_vec(),
        degenerate: data.degenerate().to_vec(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn all_distinct_rows_keep_unit_weights() {
        let data = BinarizedDataset::from_matrix(
            vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]],
            vec![0, 1, 0, 1],
        )
        .unwrap();
        let u = reduce_unique(&data);
        assert_eq!(u.len(), 4);
        assert!(u.weights().iter().all(|&w| w == 1));
    }

    #[test]
    fn same_features_different_labels_stay_separate() {
        let data = BinarizedDataset::from_matrix(
            vec![vec![0, 1], vec![0, 1], vec![0, 1], vec![1, 1]],
            vec![0, 1, 0, 1],
        )
        .unwrap();
        let u = reduce_unique(&data);
        assert_eq!(u.len(), 3);
        assert_eq!(u.weights(), &[2, 1, 1]);
        assert_eq!(u.origin_map()[0], vec![0, 2]);
    }

    fn arb_dataset() -> impl Strategy<Value = BinarizedDataset> {
        (1usize..6, 2usize..4).prop_flat_map(|(f, k)| {
            proptest::collection::vec(
                (proptest::collection::vec(0u8..2, f), 0..k),
                k..40,
            )
            .prop_map(move |rows| {
                let (x, mut y): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
                for c in 0..k {
                    y[c] = c;
                }
                BinarizedDataset::from_matrix(x, y).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn expansion_restores_the_multiset(data in arb_dataset()) {
            let u = reduce_unique(&data);
            prop_assert_eq!(u.total_weight() as usize, data.len());
            let back = u.expand();
            prop_assert_eq!(back.rows(), data.rows());
            prop_assert_eq!(back.labels(), data.labels());
            let mut covered: Vec<usize> = u.origin_map().concat();
            covered.sort_unstable();
            prop_assert_eq!(covered, (0..data.len()).collect::<Vec<_>>());
            let bound = (data.n_classes() as f64 * 2f64.powi(data.n_features() as i32))
                .min(data.len() as f64);
            prop_assert!(u.len() as f64 <= bound);
        }

        #[test]
        fn projection_preserves_weight(data in arb_dataset()) {
            let u = reduce_unique(&data);
            let p = u.project(&[0]);
            prop_assert_eq!(p.total_weight(), u.total_weight());
            prop_assert!(p.len() <= 2 * data.n_classes());
        }
    }
}
