//! Complete binary tree topologies and fitted classification trees.
//!
//! Nodes are numbered breadth-first from 1: the root is 1, node `n` has
//! children `2n` and `2n + 1`, and its parent is `n / 2`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::dataset::UniqueDataset;
use crate::error::TreeError;
use crate::metrics::Evaluation;

pub const MAX_DEPTH: u32 = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TreeTopology {
    depth: u32,
}

impl TreeTopology {
    pub fn new(depth: u32) -> Result<Self, TreeError> {
        if !(1..=MAX_DEPTH).contains(&depth) {
            return Err(TreeError::DepthOutOfRange(depth));
        }
        Ok(Self { depth })
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    /// `2^(D+1) - 1`
    pub fn node_count(&self) -> usize {
        (1usize << (self.depth + 1)) - 1
    }

    pub fn branch_nodes(&self) -> std::ops::RangeInclusive<usize> {
        1..=self.node_count() / 2
    }

    pub fn leaf_nodes(&self) -> std::ops::RangeInclusive<usize> {
        self.node_count() / 2 + 1..=self.node_count()
    }

    pub fn nodes(&self) -> std::ops::RangeInclusive<usize> {
        1..=self.node_count()
    }

    pub fn n_branch(&self) -> usize {
        self.node_count() / 2
    }

    pub fn is_branch(&self, n: usize) -> bool {
        n >= 1 && n <= self.node_count() / 2
    }

    pub fn is_leaf(&self, n: usize) -> bool {
        n > self.node_count() / 2 && n <= self.node_count()
    }

    pub fn parent(&self, n: usize) -> Option<usize> {
        (n > 1).then_some(n / 2)
    }

    pub fn left(&self, n: usize) -> usize {
        2 * n
    }

    pub fn right(&self, n: usize) -> usize {
        2 * n + 1
    }

    /// Proper ancestors of `n`, root first.
    pub fn ancestors(&self, n: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut m = n / 2;
        while m >= 1 {
            out.push(m);
            m /= 2;
        }
        out.reverse();
        out
    }

    /// Distance from the root (root has level 0).
    pub fn level(n: usize) -> u32 {
        usize::BITS - 1 - n.leading_zeros()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "role", rename_all = "snake_case")]
pub enum NodeRole {
    Branch { feature: usize },
    Leaf { label: usize },
    Pruned,
}

/// A fitted tree over a fixed topology. Instances with `x_f = 0` go left.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "TreeDoc", into = "TreeDoc")]
pub struct ClassTree {
    topology: TreeTopology,
    n_features: usize,
    roles: Vec<NodeRole>,
}

#[derive(Serialize, Deserialize)]
struct NodeDoc {
    id: usize,
    #[serde(flatten)]
    role: NodeRole,
}

#[derive(Serialize, Deserialize)]
struct TreeDoc {
    depth: u32,
    n_features: usize,
    nodes: Vec<NodeDoc>,
}

impl From<ClassTree> for TreeDoc {
    fn from(tree: ClassTree) -> Self {
        TreeDoc {
            depth: tree.depth(),
            n_features: tree.n_features,
            nodes: tree
                .roles
                .iter()
                .enumerate()
                .map(|(i, &role)| NodeDoc { id: i + 1, role })
                .collect(),
        }
    }
}

impl TryFrom<TreeDoc> for ClassTree {
    type Error = TreeError;

    fn try_from(doc: TreeDoc) -> Result<Self, TreeError> {
        let topology = TreeTopology::new(doc.depth)?;
        let mut roles = vec![None; topology.node_count()];
        for node in doc.nodes {
            if node.id == 0 || node.id > roles.len() {
                return Err(TreeError::InvalidStructure(format!("node id {} out of range", node.id)));
            }
            if roles[node.id - 1].replace(node.role).is_some() {
                return Err(TreeError::InvalidStructure(format!("node id {} repeated", node.id)));
            }
        }
        let roles = roles
            .into_iter()
            .map(|r| r.unwrap_or(NodeRole::Pruned))
            .collect();
        Self::new(topology, doc.n_features, roles)
    }
}

impl ClassTree {
    /// Builds a tree from per-node roles indexed by `node id - 1` and checks
    /// the structural rules.
    pub fn new(topology: TreeTopology, n_features: usize, roles: Vec<NodeRole>) -> Result<Self, TreeError> {
        let tree = Self {
            topology,
            n_features,
            roles,
        };
        tree.validate()?;
        Ok(tree)
    }

    /// A single root leaf; every descendant is pruned.
    pub fn constant(topology: TreeTopology, n_features: usize, label: usize) -> Self {
        let mut roles = vec![NodeRole::Pruned; topology.node_count()];
        roles[0] = NodeRole::Leaf { label };
        Self {
            topology,
            n_features,
            roles,
        }
    }

    /// Builds a tree from the roles of the reachable nodes only. Anything
    /// not mentioned below a leaf is pruned.
    pub fn from_partial(
        topology: TreeTopology,
        n_features: usize,
        assigned: &[(usize, NodeRole)],
    ) -> Result<Self, TreeError> {
        let mut roles = vec![NodeRole::Pruned; topology.node_count()];
        for &(n, role) in assigned {
            if n == 0 || n > roles.len() {
                return Err(TreeError::InvalidStructure(format!("node {n} outside topology")));
            }
            roles[n - 1] = role;
        }
        Self::new(topology, n_features, roles)
    }

    fn validate(&self) -> Result<(), TreeError> {
        let t = &self.topology;
        if self.roles.len() != t.node_count() {
            return Err(TreeError::InvalidStructure(format!(
                "{} roles for {} nodes",
                self.roles.len(),
                t.node_count()
            )));
        }
        for n in t.nodes() {
            let role = self.roles[n - 1];
            let parent_branches = match t.parent(n) {
                None => true,
                Some(a) => matches!(self.roles[a - 1], NodeRole::Branch { .. }),
            };
            match role {
                NodeRole::Pruned if parent_branches => {
                    return Err(TreeError::InvalidStructure(format!("node {n} is reachable but pruned")));
                }
                NodeRole::Branch { .. } | NodeRole::Leaf { .. } if !parent_branches => {
                    return Err(TreeError::InvalidStructure(format!(
                        "node {n} sits below a leaf but is not pruned"
                    )));
                }
                NodeRole::Branch { .. } if t.is_leaf(n) => {
                    return Err(TreeError::InvalidStructure(format!("bottom node {n} cannot branch")));
                }
                NodeRole::Branch { feature } if feature >= self.n_features => {
                    return Err(TreeError::InvalidStructure(format!(
                        "node {n} splits on feature {feature} of {}",
                        self.n_features
                    )));
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn topology(&self) -> TreeTopology {
        self.topology
    }

    pub fn depth(&self) -> u32 {
        self.topology.depth()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn role(&self, n: usize) -> NodeRole {
        self.roles[n - 1]
    }

    pub fn roles(&self) -> &[NodeRole] {
        &self.roles
    }

    pub fn n_splits(&self) -> usize {
        self.roles
            .iter()
            .filter(|r| matches!(r, NodeRole::Branch { .. }))
            .count()
    }

    /// Sorted, deduplicated features used by some branch node.
    pub fn used_features(&self) -> Vec<usize> {
        let mut f: Vec<usize> = self
            .roles
            .iter()
            .filter_map(|r| match r {
                NodeRole::Branch { feature } => Some(*feature),
                _ => None,
            })
            .collect();
        f.sort_unstable();
        f.dedup();
        f
    }

    /// Routes `x` from the root; returns the node where it stops and the label there.
    pub fn route(&self, x: &[u8]) -> Result<(usize, usize), TreeError> {
        if x.len() != self.n_features {
            return Err(TreeError::ArityMismatch {
                expected: self.n_features,
                found: x.len(),
            });
        }
        Ok(self.route_unchecked(x))
    }

    pub(crate) fn route_unchecked(&self, x: &[u8]) -> (usize, usize) {
        let mut n = 1;
        loop {
            match self.roles[n - 1] {
                NodeRole::Branch { feature } => {
                    n = if x[feature] == 0 { 2 * n } else { 2 * n + 1 };
                }
                NodeRole::Leaf { label } => return (n, label),
                NodeRole::Pruned => unreachable!("validated tree routes into a pruned node"),
            }
        }
    }

    pub fn predict(&self, x: &[u8]) -> Result<usize, TreeError> {
        self.route(x).map(|(_, k)| k)
    }

    /// Weighted evaluation on unique instances.
    pub fn evaluate(&self, data: &UniqueDataset) -> Result<Evaluation, TreeError> {
        if data.n_features() != self.n_features {
            return Err(TreeError::ArityMismatch {
                expected: self.n_features,
                found: data.n_features(),
            });
        }
        let predictions = data.rows().iter().map(|x| self.route_unchecked(x).1).collect();
        Ok(Evaluation::from_predictions(data, predictions))
    }

    /// Re-expresses the same routing function at a larger depth: roles are
    /// copied by node id and the new bottom levels are pruned.
    pub fn lift(&self, depth: u32) -> Result<Self, TreeError> {
        let topology = TreeTopology::new(depth)?;
        if depth < self.depth() {
            return Err(TreeError::InvalidStructure(format!(
                "cannot lift depth {} to {depth}",
                self.depth()
            )));
        }
        let mut roles = vec![NodeRole::Pruned; topology.node_count()];
        roles[..self.roles.len()].copy_from_slice(&self.roles);
        Self::new(topology, self.n_features, roles)
    }

    pub fn to_json(&self) -> Result<String, TreeError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self, TreeError> {
        Ok(serde_json::from_str(text)?)
    }

    /// Graphviz rendering of the reachable nodes.
    pub fn to_dot(&self, feature_names: Option<&[String]>, class_names: Option<&[String]>) -> String {
        let mut out = String::from("digraph tree {\n  node [shape=box];\n");
        for (i, role) in self.roles.iter().enumerate() {
            let n = i + 1;
            match *role {
                NodeRole::Branch { feature } => {
                    let name = feature_names
                        .and_then(|f| f.get(feature).cloned())
                        .unwrap_or_else(|| format!("x{feature}"));
                    let _ = writeln!(out, "  n{n} [label=\"{}\"];", name.replace('"', "\\\""));
                    let _ = writeln!(out, "  n{n} -> n{} [label=\"0\"];", 2 * n);
                    let _ = writeln!(out, "  n{n} -> n{} [label=\"1\"];", 2 * n + 1);
                }
                NodeRole::Leaf { label } => {
                    let name = class_names
                        .and_then(|c| c.get(label).cloned())
                        .unwrap_or_else(|| label.to_string());
                    let _ = writeln!(
                        out,
                        "  n{n} [label=\"{}\", shape=ellipse];",
                        name.replace('"', "\\\"")
                    );
                }
                NodeRole::Pruned => {}
            }
        }
        out.push_str("}\n");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{reduce_unique, BinarizedDataset};

    pub(crate) fn example1() -> UniqueDataset {
        let data = BinarizedDataset::from_matrix(
            vec![vec![0, 1, 0, 0], vec![0, 1, 0, 0], vec![1, 0, 1, 0], vec![1, 0, 1, 1]],
            vec![0, 1, 0, 1],
        )
        .unwrap();
        reduce_unique(&data)
    }

    #[test]
    fn topology_index_sets() {
        let t = TreeTopology::new(2).unwrap();
        assert_eq!(t.branch_nodes().collect::<Vec<_>>(), vec![1, 2, 3]);
        assert_eq!(t.leaf_nodes().collect::<Vec<_>>(), vec![4, 5, 6, 7]);
        let t1 = TreeTopology::new(1).unwrap();
        assert_eq!(t1.branch_nodes().collect::<Vec<_>>(), vec![1]);
        assert_eq!(t1.leaf_nodes().collect::<Vec<_>>(), vec![2, 3]);
        let t3 = TreeTopology::new(3).unwrap();
        assert_eq!((t3.n_branch(), t3.leaf_nodes().count(), t3.node_count()), (7, 8, 15));
        assert!(TreeTopology::new(0).is_err());
        assert!(TreeTopology::new(21).is_err());
    }

    #[test]
    fn parent_child_and_ancestors() {
        let t = TreeTopology::new(4).unwrap();
        for n in t.branch_nodes() {
            assert_eq!(t.parent(t.left(n)), Some(n));
            assert_eq!(t.parent(t.right(n)), Some(n));
        }
        for n in t.nodes() {
            let anc = t.ancestors(n);
            assert_eq!(anc.len() as u32, TreeTopology::level(n));
            assert!(anc.iter().all(|&m| t.is_branch(m)));
        }
        assert_eq!(t.ancestors(11), vec![1, 2, 5]);
    }

    fn stump(feature: usize, left: usize, right: usize, n_features: usize) -> ClassTree {
        ClassTree::from_partial(
            TreeTopology::new(1).unwrap(),
            n_features,
            &[
                (1, NodeRole::Branch { feature }),
                (2, NodeRole::Leaf { label: left }),
                (3, NodeRole::Leaf { label: right }),
            ],
        )
        .unwrap()
    }

    #[test]
    fn routing() {
        let t = stump(0, 0, 1, 2);
        assert_eq!(t.route(&[0, 1]).unwrap(), (2, 0));
        assert_eq!(t.route(&[1, 0]).unwrap(), (3, 1));
        assert!(matches!(t.route(&[1]), Err(TreeError::ArityMismatch { .. })));
        let c = ClassTree::constant(TreeTopology::new(3).unwrap(), 2, 1);
        assert_eq!(c.predict(&[0, 0]).unwrap(), 1);
        assert_eq!(c.predict(&[1, 1]).unwrap(), 1);
    }

    #[test]
    fn example1_root_split() {
        let data = example1();
        let t = stump(0, 0, 1, 4);
        let routes: Vec<usize> = data.rows().iter().map(|x| t.route(x).unwrap().0).collect();
        assert_eq!(routes, vec![2, 2, 3, 3]);
        let ev = t.evaluate(&data).unwrap();
        assert_eq!(ev.correct, vec![true, false, false, true]);
        assert_eq!(ev.correct_weight, 2);
    }

    #[test]
    fn structural_violations() {
        let t = TreeTopology::new(1).unwrap();
        assert!(ClassTree::new(t, 2, vec![NodeRole::Leaf { label: 0 }, NodeRole::Leaf { label: 0 }, NodeRole::Pruned]).is_err());
        assert!(ClassTree::new(t, 2, vec![NodeRole::Branch { feature: 0 }, NodeRole::Pruned, NodeRole::Leaf { label: 0 }]).is_err());
        assert!(ClassTree::new(t, 2, vec![NodeRole::Branch { feature: 5 }, NodeRole::Leaf { label: 0 }, NodeRole::Leaf { label: 0 }]).is_err());
        let t2 = TreeTopology::new(2).unwrap();
        let mut roles = vec![NodeRole::Branch { feature: 0 }; 7];
        roles[3] = NodeRole::Leaf { label: 0 };
        assert!(ClassTree::new(t2, 2, roles).is_err());
    }

    #[test]
    fn json_and_lift_round_trip() {
        let t = stump(1, 1, 0, 3);
        let back = ClassTree::from_json(&t.to_json().unwrap()).unwrap();
        assert_eq!(back, t);
        assert!(t.to_json().unwrap().contains("\"role\": \"branch\""));
        let lifted = t.lift(2).unwrap();
        assert_eq!(lifted.role(2), NodeRole::Leaf { label: 1 });
        assert!((4..=7).all(|n| lifted.role(n) == NodeRole::Pruned));
        assert_eq!(t.lift(3).unwrap(), lifted.lift(3).unwrap());
        for bits in 0..8u8 {
            let x = [bits & 1, (bits >> 1) & 1, (bits >> 2) & 1];
            assert_eq!(t.predict(&x).unwrap(), lifted.predict(&x).unwrap());
        }
        let dot = t.to_dot(None, None);
        assert!(dot.contains("n1 -> n2"));
    }
}
