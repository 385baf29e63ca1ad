//! Greedy gini trees over weighted binary data, and random-forest feature
//! importances built from them.

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::UniqueDataset;
use crate::exec::Exec;
use crate::tree::{ClassTree, NodeRole, TreeTopology};

/// Class histogram of `members` under per-instance weights `w`.
fn histogram(data: &UniqueDataset, members: &[usize], w: &[f64]) -> Vec<f64> {
    let mut h = vec![0.0; data.n_classes()];
    for &i in members {
        h[data.label(i)] += w[i];
    }
    h
}

/// Total weight times gini impurity.
fn weighted_gini(h: &[f64]) -> f64 {
    let total: f64 = h.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    total - h.iter().map(|c| c * c).sum::<f64>() / total
}

fn majority(h: &[f64]) -> usize {
    let mut best = 0;
    for (k, &v) in h.iter().enumerate() {
        if v > h[best] {
            best = k;
        }
    }
    best
}

/// Best split among `features`: lowest child impurity, ties to the first
/// feature listed. `None` if no split separates the members.
fn best_split(data: &UniqueDataset, members: &[usize], w: &[f64], features: &[usize]) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for &f in features {
        let (left, right): (Vec<usize>, Vec<usize>) = members.iter().partition(|&&i| data.row(i)[f] == 0);
        let wl: f64 = left.iter().map(|&i| w[i]).sum();
        let wr: f64 = right.iter().map(|&i| w[i]).sum();
        if wl <= 0.0 || wr <= 0.0 {
            continue;
        }
        let imp = weighted_gini(&histogram(data, &left, w)) + weighted_gini(&histogram(data, &right, w));
        if best.map_or(true, |(_, b)| imp < b - 1e-12) {
            best = Some((f, imp));
        }
    }
    best
}

/// Greedy depth-bounded CART with gini impurity and instance weights.
pub fn fit_cart(data: &UniqueDataset, depth: u32) -> ClassTree {
    let topo = TreeTopology::new(depth).expect("depth validated by caller");
    let w: Vec<f64> = data.weights().iter().map(|&v| v as f64).collect();
    let all: Vec<usize> = (0..data.n_features()).collect();
    let mut roles = vec![NodeRole::Pruned; topo.node_count()];
    let mut stack = vec![(1usize, (0..data.len()).collect::<Vec<usize>>())];
    while let Some((n, members)) = stack.pop() {
        let h = histogram(data, &members, &w);
        let parent = weighted_gini(&h);
        let split = if topo.is_branch(n) && parent > 1e-12 {
            best_split(data, &members, &w, &all).filter(|&(_, imp)| imp < parent - 1e-12)
        } else {
            None
        };
        match split {
            Some((f, _)) => {
                roles[n - 1] = NodeRole::Branch { feature: f };
                let (left, right): (Vec<usize>, Vec<usize>) =
                    members.iter().partition(|&&i| data.row(i)[f] == 0);
                stack.push((topo.left(n), left));
                stack.push((topo.right(n), right));
            }
            None => roles[n - 1] = NodeRole::Leaf { label: majority(&h) },
        }
    }
    ClassTree::new(topo, data.n_features(), roles).expect("greedy growth yields a valid tree")
}

/// Per-feature importances and the features ordered by them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureRanking {
    pub importance: Vec<f64>,
    /// Features by non-increasing importance, ties by index.
    pub order: Vec<usize>,
}

impl FeatureRanking {
    pub fn from_importance(importance: Vec<f64>) -> Self {
        let mut order: Vec<usize> = (0..importance.len()).collect();
        order.sort_by(|&a, &b| importance[b].total_cmp(&importance[a]).then(a.cmp(&b)));
        Self { importance, order }
    }

    /// `feature,importance` rows in ranking order.
    pub fn to_csv(&self, feature_names: &[String]) -> String {
        let mut out = String::from("feature,importance\n");
        for &f in &self.order {
            let name = feature_names.get(f).cloned().unwrap_or_else(|| format!("f{f}"));
            out.push_str(&format!("{name},{}\n", self.importance[f]));
        }
        out
    }
}

/// Mean decrease in impurity of one unpruned tree grown on bootstrap
/// weights, normalized to sum to one (all zeros if the root is pure).
fn tree_importance(data: &UniqueDataset, w: &[f64], mtry: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let nf = data.n_features();
    let mut imp = vec![0.0; nf];
    let mut stack = vec![(0..data.len()).filter(|&i| w[i] > 0.0).collect::<Vec<usize>>()];
    while let Some(members) = stack.pop() {
        let parent = weighted_gini(&histogram(data, &members, w));
        if parent <= 1e-12 {
            continue;
        }
        let mut features: Vec<usize> = sample(rng, nf, mtry.min(nf)).into_vec();
        features.sort_unstable();
        let Some((f, child)) = best_split(data, &members, w, &features) else {
            continue;
        };
        if child >= parent - 1e-12 {
            continue;
        }
        imp[f] += parent - child;
        let (left, right): (Vec<usize>, Vec<usize>) = members.iter().partition(|&&i| data.row(i)[f] == 0);
        stack.push(left);
        stack.push(right);
    }
    let total: f64 = imp.iter().sum();
    if total > 0.0 {
        imp.iter_mut().for_each(|v| *v /= total);
    }
    imp
}

/// Random-forest importances: `n_trees` bootstrap trees with `⌊√|F|⌋`
/// candidate features per split. Tree `t` draws from its own stream seeded
/// by `(seed, t)`, so results do not depend on the execution mode.
pub fn rf_ranking(data: &UniqueDataset, n_trees: usize, seed: u64, exec: Exec) -> FeatureRanking {
    let nf = data.n_features();
    if nf == 0 || data.is_empty() {
        return FeatureRanking::from_importance(vec![0.0; nf]);
    }
    let mtry = ((nf as f64).sqrt().floor() as usize).max(1);
    let dist = WeightedIndex::new(data.weights()).expect("weights are positive");
    let n_draws = data.total_weight() as usize;
    let per_tree = exec.map_range(n_trees.max(1), |t| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(t as u64);
        let mut w = vec![0.0; data.len()];
        for _ in 0..n_draws {
            w[dist.sample(&mut rng)] += 1.0;
        }
        tree_importance(data, &w, mtry, &mut rng)
    });
    let mut importance = vec![0.0; nf];
    for imp in &per_tree {
        for (a, b) in importance.iter_mut().zip(imp) {
            *a += b;
        }
    }
    importance.iter_mut().for_each(|v| *v /= per_tree.len() as f64);
    FeatureRanking::from_importance(importance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formulations::tests::example1;

    fn decisive() -> UniqueDataset {
        // Label equals feature 2; features 0 and 1 are noise.
        let mut x = Vec::new();
        let mut y = Vec::new();
        for m in 0u8..8 {
            let row = vec![m & 1, (m >> 1) & 1, (m >> 2) & 1];
            y.push(row[2] as usize);
            x.push(row);
        }
        UniqueDataset::from_weighted(x, y, vec![1; 8], 2).unwrap()
    }

    #[test]
    fn separable_data_gives_perfect_stump() {
        let data = decisive();
        let tree = fit_cart(&data, 1);
        assert_eq!(tree.role(1), NodeRole::Branch { feature: 2 });
        assert_eq!(tree.evaluate(&data).unwrap().accuracy(), 1.0);
        let deeper = fit_cart(&data, 3);
        assert_eq!(deeper.n_splits(), 1);
    }

    #[test]
    fn pure_data_is_a_single_leaf() {
        let data = UniqueDataset::from_weighted(vec![vec![0, 1], vec![1, 1]], vec![1, 1], vec![3, 2], 2).unwrap();
        let tree = fit_cart(&data, 2);
        assert_eq!(tree.role(1), NodeRole::Leaf { label: 1 });
    }

    #[test]
    fn example1_stump_is_bounded_by_the_conflict() {
        let data = example1();
        let tree = fit_cart(&data, 1);
        let eval = tree.evaluate(&data).unwrap();
        assert!(eval.correct_weight <= 3);
        assert!(!(eval.correct[0] && eval.correct[1]));
    }

    #[test]
    fn ranking_finds_the_decisive_feature_and_is_deterministic() {
        let data = decisive();
        let a = rf_ranking(&data, 50, 7, Exec::Parallel);
        let b = rf_ranking(&data, 50, 7, Exec::Sequential);
        assert_eq!(a, b);
        assert_eq!(a.order[0], 2);
        let mut sorted = a.order.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, vec![0, 1, 2]);
        assert!(a.importance.iter().all(|v| v.is_finite() && *v >= 0.0));
        assert!(a.to_csv(data.feature_names()).starts_with("feature,importance\nf2,"));
    }
}
