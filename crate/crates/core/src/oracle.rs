//! Exhaustive search over every tree of depth at most two. Small enough to
//! be obviously right, and used as ground truth for the solver.

use serde::{Deserialize, Serialize};

use crate::dataset::UniqueDataset;
use crate::error::SolveError;
use crate::exec::Exec;
use crate::metrics::MetricSpec;
use crate::tree::{ClassTree, NodeRole, TreeTopology};

pub const MAX_DEPTH: u32 = 2;
pub const MAX_FEATURES: usize = 8;
pub const MAX_INSTANCES: usize = 16;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub best_objective: f64,
    pub tree: ClassTree,
    /// Trees enumerated (after the branch-node cap, if any).
    pub count: u64,
}

#[derive(Clone, Debug)]
enum Shape {
    Leaf(usize),
    Split(usize, Box<Shape>, Box<Shape>),
}

impl Shape {
    fn all(height: u32, nf: usize, nk: usize) -> Vec<Shape> {
        let mut out: Vec<Shape> = (0..nk).map(Shape::Leaf).collect();
        if height > 0 {
            let below = Shape::all(height - 1, nf, nk);
            for f in 0..nf {
                for l in &below {
                    for r in &below {
                        out.push(Shape::Split(f, Box::new(l.clone()), Box::new(r.clone())));
                    }
                }
            }
        }
        out
    }

    fn place(&self, n: usize, roles: &mut [NodeRole]) {
        match self {
            Shape::Leaf(k) => roles[n - 1] = NodeRole::Leaf { label: *k },
            Shape::Split(f, l, r) => {
                roles[n - 1] = NodeRole::Branch { feature: *f };
                l.place(2 * n, roles);
                r.place(2 * n + 1, roles);
            }
        }
    }
}

/// Best objective over all trees of depth ≤ `depth`, scored exactly as the
/// master scores them. Ties keep the first tree in enumeration order.
pub fn enumerate_optimal(
    data: &UniqueDataset,
    depth: u32,
    spec: &MetricSpec,
    lambda: f64,
    max_branch_nodes: Option<usize>,
    exec: Exec,
) -> Result<OracleResult, SolveError> {
    if depth == 0 || depth > MAX_DEPTH || data.n_features() > MAX_FEATURES || data.len() > MAX_INSTANCES {
        return Err(SolveError::LimitsExceeded(format!(
            "depth {depth}, {} features, {} unique instances (limits {MAX_DEPTH}, {MAX_FEATURES}, {MAX_INSTANCES})",
            data.n_features(),
            data.len()
        )));
    }
    spec.validate(data)?;
    let topo = TreeTopology::new(depth)?;
    let shapes = Shape::all(depth, data.n_features(), data.n_classes());
    let scored = exec.map(&shapes, |shape| -> Result<Option<(f64, ClassTree)>, SolveError> {
        let mut roles = vec![NodeRole::Pruned; topo.node_count()];
        shape.place(1, &mut roles);
        let tree = ClassTree::new(topo, data.n_features(), roles)?;
        if max_branch_nodes.is_some_and(|cap| tree.n_splits() > cap) {
            return Ok(None);
        }
        let value = tree.evaluate(data)?.objective(spec, data, lambda, tree.n_splits())?;
        Ok(Some((value, tree)))
    });
    let mut best: Option<(f64, ClassTree)> = None;
    let mut count = 0u64;
    for item in scored {
        let Some((value, tree)) = item? else {
            continue;
        };
        count += 1;
        if best.as_ref().map_or(true, |(b, _)| value > *b) {
            best = Some((value, tree));
        }
    }
    let (best_objective, tree) = best.expect("a single leaf always fits");
    Ok(OracleResult {
        best_objective,
        tree,
        count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formulations::tests::example1;

    #[test]
    fn example1_optimum() {
        let r = enumerate_optimal(&example1(), 2, &MetricSpec::Accuracy, 0.0, None, Exec::Sequential).unwrap();
        assert_eq!(r.best_objective, 3.0);
        let (k, f) = (2u64, 4u64);
        let d1 = k + f * k * k;
        assert_eq!(r.count, k + f * d1 * d1);
    }

    #[test]
    fn depth1_count() {
        let data = UniqueDataset::from_weighted(vec![vec![0, 1], vec![1, 0]], vec![0, 1], vec![1, 1], 2).unwrap();
        let r = enumerate_optimal(&data, 1, &MetricSpec::Accuracy, 0.0, None, Exec::Parallel).unwrap();
        assert_eq!(r.count, 2 + 2 * 4);
        assert_eq!(r.best_objective, 2.0);
    }

    #[test]
    fn single_class_prefers_root_leaf() {
        let data = UniqueDataset::from_weighted(vec![vec![0], vec![1]], vec![1, 1], vec![2, 1], 2).unwrap();
        let r = enumerate_optimal(&data, 2, &MetricSpec::Accuracy, 0.01, None, Exec::Sequential).unwrap();
        assert_eq!(r.tree.role(1), NodeRole::Leaf { label: 1 });
        assert!((r.best_objective - 0.99 * 3.0).abs() < 1e-12);
    }

    #[test]
    fn cap_limits_splits_and_limits_are_enforced() {
        let data = example1();
        let r = enumerate_optimal(&data, 2, &MetricSpec::Accuracy, 0.0, Some(1), Exec::Sequential).unwrap();
        assert!(r.tree.n_splits() <= 1);
        assert!(enumerate_optimal(&data, 3, &MetricSpec::Accuracy, 0.0, None, Exec::Sequential).is_err());
    }
}
