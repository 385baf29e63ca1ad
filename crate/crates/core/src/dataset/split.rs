use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::BinarizedDataset;
use crate::error::DataError;

/// Largest-remainder apportionment of `total` across groups of sizes `sizes`.
fn apportion(total: usize, sizes: &[usize], n: usize) -> Vec<usize> {
    let quotas: Vec<f64> = sizes
        .iter()
        .map(|&s| total as f64 * s as f64 / n as f64)
        .collect();
    let mut alloc: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let mut left = total - alloc.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..sizes.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = quotas[a] - quotas[a].floor();
        let fb = quotas[b] - quotas[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    for &g in order.iter().cycle() {
        if left == 0 {
            break;
        }
        if alloc[g] < sizes[g] {
            alloc[g] += 1;
            left -= 1;
        }
    }
    alloc
}

/// Seeded train/validation/test partition.
///
/// Rounding rule: `n_val = round(n·f_val)`, `n_test = round(n·f_test)` and
/// the training set takes the rest; an empty training set is an error. When
/// every class has at least three members the split is stratified, with each
/// part's size apportioned over classes by largest remainder.
pub fn split(
    data: &BinarizedDataset,
    seed: u64,
    fractions: (f64, f64, f64),
) -> Result<(BinarizedDataset, BinarizedDataset, BinarizedDataset), DataError> {
    let (ft, fv, fs) = fractions;
    if [ft, fv, fs].iter().any(|f| !(f.is_finite() && *f > 0.0)) {
        return Err(DataError::InvalidFractions(format!(
            "{ft}, {fv}, {fs} must all be positive"
        )));
    }
    if (ft + fv + fs - 1.0).abs() > 1e-9 {
        return Err(DataError::InvalidFractions(format!(
            "{ft} + {fv} + {fs} does not sum to 1"
        )));
    }
    let n = data.len();
    let n_val = (n as f64 * fv).round() as usize;
    let n_test = (n as f64 * fs).round() as usize;
    if n_val + n_test >= n {
        return Err(DataError::EmptyTrain);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); data.n_classes()];
    for (i, &k) in data.labels().iter().enumerate() {
        by_class[k].push(i);
    }
    let stratify = by_class.iter().all(|members| members.len() >= 3);

    let (mut train, mut val, mut test) = (Vec::new(), Vec::new(), Vec::new());
    if stratify {
        let sizes: Vec<usize> = by_class.iter().map(Vec::len).collect();
        let val_alloc = apportion(n_val, &sizes, n);
        let remaining: Vec<usize> = sizes.iter().zip(&val_alloc).map(|(s, v)| s - v).collect();
        let test_alloc = apportion(n_test, &remaining, remaining.iter().sum());
        for (k, members) in by_class.iter_mut().enumerate() {
            members.shuffle(&mut rng);
            let (v, t) = (val_alloc[k], test_alloc[k]);
            val.extend_from_slice(&members[..v]);
            test.extend_from_slice(&members[v..v + t]);
            train.extend_from_slice(&members[v + t..]);
        }
    } else {
        let mut all: Vec<usize> = (0..n).collect();
        all.shuffle(&mut rng);
        val.extend_from_slice(&all[..n_val]);
        test.extend_from_slice(&all[n_val..n_val + n_test]);
        train.extend_from_slice(&all[n_val + n_test..]);
    }
    for part in [&mut train, &mut val, &mut test] {
        part.sort_unstable();
    }
    Ok((data.subset(&train), data.subset(&val), data.subset(&test)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data(n: usize) -> BinarizedDataset {
        let x = (0..n).map(|i| vec![(i % 2) as u8, (i / 2 % 2) as u8]).collect();
        let y = (0..n).map(|i| i % 3 % 2).collect();
        BinarizedDataset::from_matrix(x, y).unwrap()
    }

    fn sizes(p: &(BinarizedDataset, BinarizedDataset, BinarizedDataset)) -> (usize, usize, usize) {
        (p.0.len(), p.1.len(), p.2.len())
    }

    #[test]
    fn fifty_quarter_quarter() {
        let parts = split(&data(100), 7, (0.5, 0.25, 0.25)).unwrap();
        assert_eq!(sizes(&parts), (50, 25, 25));
        let again = split(&data(100), 7, (0.5, 0.25, 0.25)).unwrap();
        assert_eq!(parts, again);
    }

    #[test]
    fn stratified_parts_cover_and_are_disjoint() {
        let d = data(37);
        let (a, b, c) = split(&d, 3, (0.5, 0.25, 0.25)).unwrap();
        assert_eq!(a.len() + b.len() + c.len(), 37);
        // class balance roughly preserved
        let ones = |p: &BinarizedDataset| p.labels().iter().filter(|&&k| k == 1).count();
        assert_eq!(ones(&a) + ones(&b) + ones(&c), ones(&d));
        assert!(ones(&b) >= 1 && ones(&c) >= 1);
    }

    #[test]
    fn tiny_fractions_round_to_empty_parts() {
        let d = data(4);
        let parts = split(&d, 1, (0.999, 0.0005, 0.0005)).unwrap();
        assert_eq!(sizes(&parts), (4, 0, 0));
    }

    #[test]
    fn invalid_fractions() {
        let d = data(4);
        assert!(matches!(
            split(&d, 1, (0.5, 0.5, 0.0)),
            Err(DataError::InvalidFractions(_))
        ));
        assert!(matches!(
            split(&d, 1, (0.5, 0.4, 0.4)),
            Err(DataError::InvalidFractions(_))
        ));
        assert!(matches!(split(&d, 1, (0.1, 0.45, 0.45)), Err(DataError::EmptyTrain)));
    }
}
