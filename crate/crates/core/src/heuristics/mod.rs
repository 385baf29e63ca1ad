//! Primal heuristics: greedy CART, forest-based feature ranking, warm starts
//! grown depth by depth over expanding feature sets, and LP-guided
//! sub-MIPs on small feature subsets during the search.

mod cart;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

pub use cart::{fit_cart, rf_ranking, FeatureRanking};

use crate::dataset::UniqueDataset;
use crate::error::{SolveError, TreeError};
use crate::formulations::Artifacts;
use crate::metrics::MetricSpec;
use crate::tree::{ClassTree, NodeRole};

/// Default number of ranked features added per depth in the warm start.
pub const DEFAULT_FEATURE_INCREMENT: usize = 5;
/// Features added beyond the incumbent's in a node heuristic attempt.
pub const NODE_HEURISTIC_FEATURES: usize = 3;

/// The data restricted to `features` (in that column order), with the
/// metric adjusted so every tree on those features scores the same on both.
pub fn restrict(data: &UniqueDataset, spec: &MetricSpec, features: &[usize]) -> (UniqueDataset, MetricSpec) {
    let sub = data.project(features);
    let spec = match spec {
        MetricSpec::InstanceCost { kappa } => {
            // A merged instance carries the weight-averaged cost of its parts.
            let mut num = vec![0.0; sub.len()];
            for i in 0..data.len() {
                let key: Vec<u8> = features.iter().map(|&f| data.row(i)[f]).collect();
                let j = (0..sub.len())
                    .find(|&j| sub.row(j) == key.as_slice() && sub.label(j) == data.label(i))
                    .expect("projection keeps every pattern");
                num[j] += kappa[i] * data.weight(i) as f64;
            }
            let kappa = num
                .iter()
                .enumerate()
                .map(|(j, v)| v / sub.weight(j) as f64)
                .collect();
            MetricSpec::InstanceCost { kappa }
        }
        other => other.clone(),
    };
    (sub, spec)
}

/// Renames split features through `map` (old id → new id) and sets the
/// feature count to `n_features`. Fails if a used feature has no image.
pub fn remap_features(tree: &ClassTree, map: impl Fn(usize) -> Option<usize>, n_features: usize) -> Result<ClassTree, TreeError> {
    let roles = tree
        .roles()
        .iter()
        .map(|&r| match r {
            NodeRole::Branch { feature } => map(feature)
                .map(|f| NodeRole::Branch { feature: f })
                .ok_or_else(|| TreeError::InvalidStructure(format!("feature {feature} not in the target set"))),
            other => Ok(other),
        })
        .collect::<Result<Vec<_>, _>>()?;
    ClassTree::new(tree.topology(), n_features, roles)
}

/// Maps a tree on `features`-restricted data back to the full feature space.
pub fn expand_tree(tree: &ClassTree, features: &[usize], n_features: usize) -> Result<ClassTree, TreeError> {
    remap_features(tree, |f| features.get(f).copied(), n_features)
}

/// Maps a full-space tree onto `features`-restricted data.
pub fn shrink_tree(tree: &ClassTree, features: &[usize]) -> Result<ClassTree, TreeError> {
    remap_features(tree, |f| features.iter().position(|&g| g == f), features.len())
}

/// The depth-`depth` version of `tree` with identical predictions.
pub fn lift_tree(tree: &ClassTree, depth: u32) -> Result<ClassTree, TreeError> {
    tree.lift(depth)
}

/// Master assignment for `tree` (lifted if shallower than the master).
pub fn tree_to_assignment(tree: &ClassTree, art: &Artifacts, data: &UniqueDataset, n_vars: usize) -> Result<Vec<f64>, TreeError> {
    art.tree_to_assignment(tree, data, n_vars)
}

/// Master objective of `tree`: score minus the split penalty.
pub fn tree_objective(tree: &ClassTree, data: &UniqueDataset, spec: &MetricSpec, lambda: f64) -> Result<f64, TreeError> {
    tree.evaluate(data)?.objective(spec, data, lambda, tree.n_splits())
}

/// Feature subsets already tried by the node heuristic, plus the features
/// of the current incumbent.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistorySet {
    pub attempted: BTreeSet<Vec<usize>>,
    pub incumbent_features: Vec<usize>,
}

impl HistorySet {
    pub fn contains(&self, subset: &[usize]) -> bool {
        let mut key = subset.to_vec();
        key.sort_unstable();
        self.attempted.contains(&key)
    }

    pub fn insert(&mut self, subset: &[usize]) -> bool {
        let mut key = subset.to_vec();
        key.sort_unstable();
        self.attempted.insert(key)
    }
}

/// Split mass per feature, `Σ_n b*[n,f]`.
pub fn feature_scores(art: &Artifacts, x: &[f64]) -> Vec<f64> {
    (0..art.n_features)
        .map(|f| art.b.iter().map(|row| x[row[f]]).sum())
        .collect()
}

/// The incumbent's features plus the `extra` best-scoring others, sorted.
/// Ties go to the lower feature id.
pub fn candidate_subset(scores: &[f64], incumbent: &[usize], extra: usize) -> Vec<usize> {
    let mut others: Vec<usize> = (0..scores.len()).filter(|f| !incumbent.contains(f)).collect();
    others.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut subset: Vec<usize> = incumbent.to_vec();
    subset.extend(others.into_iter().take(extra));
    subset.sort_unstable();
    subset.dedup();
    subset
}

/// Sub-MIP solver used by the heuristics: `(data, spec, depth, warm start)`
/// to the best tree found. Trees live in the feature space of `data`.
pub type SubSolver<'a> = dyn FnMut(&UniqueDataset, &MetricSpec, u32, Option<&ClassTree>) -> Result<ClassTree, SolveError> + 'a;

/// One LP-guided attempt: pick a feature subset from the LP split mass,
/// solve the restricted problem, and return a full master assignment if it
/// beats `incumbent_value`. The subset is recorded in `history` exactly
/// when a solve is attempted.
#[allow(clippy::too_many_arguments)]
pub fn node_heuristic_injection(
    art: &Artifacts,
    data: &UniqueDataset,
    x: &[f64],
    n_vars: usize,
    history: &mut HistorySet,
    incumbent: Option<(&ClassTree, f64)>,
    solver: &mut SubSolver<'_>,
) -> Option<Vec<f64>> {
    let scores = feature_scores(art, x);
    let subset = candidate_subset(&scores, &history.incumbent_features, NODE_HEURISTIC_FEATURES);
    if subset.is_empty() || history.contains(&subset) {
        return None;
    }
    history.insert(&subset);
    let (sub, sub_spec) = restrict(data, &art.spec, &subset);
    let warm = incumbent.and_then(|(t, _)| shrink_tree(t, &subset).ok());
    let found = solver(&sub, &sub_spec, art.depth, warm.as_ref()).ok()?;
    let tree = expand_tree(&found, &subset, art.n_features).ok()?;
    let value = tree_objective(&tree, data, &art.spec, art.lambda).ok()?;
    if let Some((_, best)) = incumbent {
        if value <= best + 1e-9 * best.abs().max(1.0) {
            return None;
        }
    }
    art.tree_to_assignment(&tree, data, n_vars).ok()
}

/// Warm-start result for one depth.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WarmLevel {
    pub depth: u32,
    pub features: Vec<usize>,
    pub tree: ClassTree,
    pub objective: f64,
    /// Objective of the previous level's tree lifted to this depth.
    pub lifted_objective: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct WarmStartState {
    pub levels: Vec<WarmLevel>,
}

impl WarmStartState {
    pub fn best(&self) -> Option<&ClassTree> {
        self.levels.last().map(|l| &l.tree)
    }
}

/// Grows warm starts for depths 2..=`depth`. Each depth solves the problem
/// restricted to a feature set that gains `k` ranked features per level,
/// starting from CART's features. Intermediate depths are re-optimized on
/// all features; the last depth is left to the caller's full solve.
/// A failed or weaker solve falls back to the lifted previous tree.
pub fn feasible_solution_injection(
    data: &UniqueDataset,
    spec: &MetricSpec,
    lambda: f64,
    depth: u32,
    ranking: &FeatureRanking,
    k: usize,
    solver: &mut SubSolver<'_>,
) -> Result<WarmStartState, SolveError> {
    if depth < 2 {
        return Err(SolveError::InvalidConfig("warm start needs depth ≥ 2".into()));
    }
    let nf = data.n_features();
    let objective = |t: &ClassTree| tree_objective(t, data, spec, lambda);
    let mut features: Vec<usize> = fit_cart(data, depth).used_features();
    let mut state = WarmStartState::default();
    let mut prev: Option<ClassTree> = None;
    for d in 2..=depth {
        let fresh: Vec<usize> = ranking.order.iter().copied().filter(|f| !features.contains(f)).take(k).collect();
        features.extend(fresh);
        features.sort_unstable();
        if features.is_empty() {
            features.push(ranking.order.first().copied().unwrap_or(0).min(nf.saturating_sub(1)));
        }
        let embedded = match &prev {
            Some(t) => lift_tree(t, d)?,
            None => {
                let (sub, _) = restrict(data, spec, &features);
                expand_tree(&fit_cart(&sub, d), &features, nf)?
            }
        };
        let lifted_objective = prev.as_ref().map(|_| objective(&embedded)).transpose()?;
        let floor = objective(&embedded)?;
        let mut best = embedded.clone();
        let mut best_value = floor;
        let consider = |t: ClassTree, best: &mut ClassTree, best_value: &mut f64| -> Result<(), SolveError> {
            let v = objective(&t)?;
            if v > *best_value + 1e-12 {
                *best = t;
                *best_value = v;
            }
            Ok(())
        };
        if features.len() < nf {
            let (sub, sub_spec) = restrict(data, spec, &features);
            let warm = shrink_tree(&embedded, &features)?;
            if let Ok(t) = solver(&sub, &sub_spec, d, Some(&warm)) {
                consider(expand_tree(&t, &features, nf)?, &mut best, &mut best_value)?;
            }
        }
        if d < depth {
            if let Ok(t) = solver(data, spec, d, Some(&best)) {
                consider(t, &mut best, &mut best_value)?;
            }
        }
        state.levels.push(WarmLevel {
            depth: d,
            features: features.clone(),
            tree: best.clone(),
            objective: best_value,
            lifted_objective,
        });
        prev = Some(best);
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formulations::tests::example1;
    use crate::tree::TreeTopology;

    #[test]
    fn candidate_subset_follows_scores() {
        let s = candidate_subset(&[0.2, 1.7, 0.9, 1.1], &[1], 3);
        assert_eq!(s, vec![0, 1, 2, 3]);
        let s = candidate_subset(&[0.2, 1.7, 0.9, 1.1, 0.0], &[1], 2);
        assert_eq!(s, vec![1, 2, 3]);
    }

    #[test]
    fn history_is_canonical() {
        let mut h = HistorySet::default();
        assert!(h.insert(&[3, 1]));
        assert!(h.contains(&[1, 3]));
        assert!(!h.insert(&[1, 3]));
    }

    #[test]
    fn remapping_round_trips() {
        let t = ClassTree::new(
            TreeTopology::new(1).unwrap(),
            4,
            vec![NodeRole::Branch { feature: 2 }, NodeRole::Leaf { label: 0 }, NodeRole::Leaf { label: 1 }],
        )
        .unwrap();
        let small = shrink_tree(&t, &[0, 2]).unwrap();
        assert_eq!(small.role(1), NodeRole::Branch { feature: 1 });
        assert_eq!(expand_tree(&small, &[0, 2], 4).unwrap(), t);
        assert!(shrink_tree(&t, &[0, 1]).is_err());
    }

    #[test]
    fn restricted_instance_costs_preserve_objectives() {
        let data = example1();
        let spec = MetricSpec::InstanceCost { kappa: vec![1.0, 2.0, 3.0, 0.5] };
        let (sub, sub_spec) = restrict(&data, &spec, &[0]);
        let t = ClassTree::new(
            TreeTopology::new(1).unwrap(),
            1,
            vec![NodeRole::Branch { feature: 0 }, NodeRole::Leaf { label: 1 }, NodeRole::Leaf { label: 0 }],
        )
        .unwrap();
        let full = expand_tree(&t, &[0], 4).unwrap();
        let a = tree_objective(&t, &sub, &sub_spec, 0.0).unwrap();
        let b = tree_objective(&full, &data, &spec, 0.0).unwrap();
        assert!((a - b).abs() < 1e-12);
    }
}
