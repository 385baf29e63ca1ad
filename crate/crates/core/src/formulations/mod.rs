//! MIP models over the [`crate::milp`] IR: the flow formulations, the
//! Benders master, and the linear encodings of every supported metric.

mod encodings;
mod flow;

use serde::{Deserialize, Serialize};

pub use encodings::Encoding;
pub use flow::{build_flowoct, build_wflowoct, FlowArtifacts};

use crate::dataset::UniqueDataset;
use crate::error::{SolveError, TreeError};
use crate::metrics::MetricSpec;
use crate::milp::{Model, ObjSense, Sense};
use crate::tree::{ClassTree, NodeRole, TreeTopology};

/// Affine expression `Σ coef·x_j + constant`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LinExpr {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

impl LinExpr {
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|&(j, a)| a * x[j]).sum::<f64>()
    }
}

/// Coarse variable families, in branching priority order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum VarFamily {
    Split,
    Leaf,
    Label,
    Correct,
    Auxiliary,
}

/// Maps the structural symbols of the master to model columns.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Artifacts {
    pub depth: u32,
    pub n_features: usize,
    pub n_classes: usize,
    pub lambda: f64,
    pub spec: MetricSpec,
    /// `b[n-1][f]` for branch nodes.
    pub b: Vec<Vec<usize>>,
    /// `p[n-1]` for every node.
    pub p: Vec<usize>,
    /// `c[n-1][k]` for every node.
    pub c: Vec<Vec<usize>>,
    /// `g[i]` per unique instance.
    pub g: Vec<usize>,
    pub encoding: Encoding,
    pub max_branch_nodes: Option<usize>,
}

impl Artifacts {
    pub fn topology(&self) -> TreeTopology {
        TreeTopology::new(self.depth).expect("artifacts hold a valid depth")
    }

    pub fn family(&self, j: usize) -> VarFamily {
        let c_end = self.c.last().and_then(|row| row.last()).map_or(0, |&v| v + 1);
        let g_end = self.g.last().map_or(c_end, |&v| v + 1);
        if j < self.p[0] {
            VarFamily::Split
        } else if j < self.c[0][0] {
            VarFamily::Leaf
        } else if j < c_end {
            VarFamily::Label
        } else if j < g_end {
            VarFamily::Correct
        } else {
            VarFamily::Auxiliary
        }
    }

    /// All split columns, node-major.
    pub fn all_b(&self) -> impl Iterator<Item = usize> + '_ {
        self.b.iter().flatten().copied()
    }

    /// Capacity of the cut between `S ∪ {s}` and its complement in the
    /// flow network of instance `i`. `s_nodes` lists the tree nodes of `S`.
    pub fn cut_capacity(&self, data: &UniqueDataset, i: usize, s_nodes: &[usize]) -> Result<LinExpr, SolveError> {
        let t = self.topology();
        let mut expr = LinExpr::default();
        if s_nodes.iter().any(|&n| n == 0 || n > t.node_count()) {
            return Err(SolveError::InvalidConfig(format!("cut set {s_nodes:?} has nodes outside the tree")));
        }
        if !s_nodes.contains(&1) {
            expr.constant = 1.0;
        }
        let x = data.row(i);
        for &n in s_nodes {
            if t.is_branch(n) {
                for (side, child) in [(0u8, t.left(n)), (1u8, t.right(n))] {
                    if !s_nodes.contains(&child) {
                        for (f, &bf) in self.b[n - 1].iter().enumerate() {
                            if x[f] == side {
                                expr.terms.push((bf, 1.0));
                            }
                        }
                    }
                }
            }
            expr.terms.push((self.c[n - 1][data.label(i)], 1.0));
        }
        Ok(expr)
    }

    /// Reads a tree off an integral structural assignment.
    pub fn extract_tree(&self, x: &[f64]) -> Result<ClassTree, TreeError> {
        let t = self.topology();
        let on = |j: usize| x[j] > 0.5;
        let mut roles = vec![NodeRole::Pruned; t.node_count()];
        for n in t.nodes() {
            let mut role = None;
            if t.is_branch(n) {
                let fs: Vec<usize> = (0..self.n_features).filter(|&f| on(self.b[n - 1][f])).collect();
                if fs.len() > 1 {
                    return Err(TreeError::InvalidStructure(format!("node {n} selects several features")));
                }
                if let Some(&f) = fs.first() {
                    role = Some(NodeRole::Branch { feature: f });
                }
            }
            if on(self.p[n - 1]) {
                if role.is_some() {
                    return Err(TreeError::InvalidStructure(format!("node {n} both branches and predicts")));
                }
                let ks: Vec<usize> = (0..self.n_classes).filter(|&k| on(self.c[n - 1][k])).collect();
                if ks.len() != 1 {
                    return Err(TreeError::InvalidStructure(format!("leaf {n} has {} labels", ks.len())));
                }
                role = Some(NodeRole::Leaf { label: ks[0] });
            }
            if let Some(r) = role {
                roles[n - 1] = r;
            }
        }
        ClassTree::new(t, self.n_features, roles)
    }

    /// Complete master assignment encoding `tree`: structure, routing-based
    /// `g`, and every auxiliary column of the objective encoding.
    pub fn tree_to_assignment(&self, tree: &ClassTree, data: &UniqueDataset, n_vars: usize) -> Result<Vec<f64>, TreeError> {
        let topo = self.topology();
        let tree = if tree.depth() < self.depth {
            tree.lift(self.depth)?
        } else if tree.depth() > self.depth {
            return Err(TreeError::InvalidStructure(format!(
                "depth {} tree does not fit a depth {} master",
                tree.depth(),
                self.depth
            )));
        } else {
            tree.clone()
        };
        if tree.n_features() != self.n_features {
            return Err(TreeError::ArityMismatch {
                expected: self.n_features,
                found: tree.n_features(),
            });
        }
        let mut x = vec![0.0; n_vars];
        for n in topo.nodes() {
            match tree.role(n) {
                NodeRole::Branch { feature } => x[self.b[n - 1][feature]] = 1.0,
                NodeRole::Leaf { label } => {
                    x[self.p[n - 1]] = 1.0;
                    x[self.c[n - 1][label]] = 1.0;
                }
                NodeRole::Pruned => {}
            }
        }
        let eval = tree.evaluate(data)?;
        for (i, &ok) in eval.correct.iter().enumerate() {
            x[self.g[i]] = if ok { 1.0 } else { 0.0 };
        }
        self.encoding.fill(&mut x, &eval, &self.spec);
        Ok(x)
    }
}

/// Column indices of `b`, `p`, `c` and `g`.
type StructureColumns = (Vec<Vec<usize>>, Vec<usize>, Vec<Vec<usize>>, Vec<usize>);

/// Adds `b`, `p`, `c`, `g` and the structural rows shared by the master and
/// the flow models. Returns the artifacts skeleton with a linear encoding.
fn add_structure(model: &mut Model, data: &UniqueDataset, topo: TreeTopology, with_g: bool) -> StructureColumns {
    let nf = data.n_features();
    let nk = data.n_classes();
    let b: Vec<Vec<usize>> = topo
        .branch_nodes()
        .map(|n| (0..nf).map(|f| model.add_binary(format!("b[{n},{f}]"))).collect())
        .collect();
    let p: Vec<usize> = topo.nodes().map(|n| model.add_binary(format!("p[{n}]"))).collect();
    let c: Vec<Vec<usize>> = topo
        .nodes()
        .map(|n| (0..nk).map(|k| model.add_binary(format!("c[{n},{k}]"))).collect())
        .collect();
    let g: Vec<usize> = if with_g {
        (0..data.len()).map(|i| model.add_binary(format!("g[{i}]"))).collect()
    } else {
        Vec::new()
    };
    for n in topo.nodes() {
        let mut terms: Vec<(usize, f64)> = Vec::new();
        if topo.is_branch(n) {
            terms.extend(b[n - 1].iter().map(|&j| (j, 1.0)));
        }
        terms.push((p[n - 1], 1.0));
        terms.extend(topo.ancestors(n).into_iter().map(|m| (p[m - 1], 1.0)));
        let name = if topo.is_branch(n) { format!("branch_or_leaf[{n}]") } else { format!("leaf_reached[{n}]") };
        model.add_row(name, terms, Sense::Eq, 1.0).expect("structural columns exist");
    }
    for n in topo.nodes() {
        let mut terms: Vec<(usize, f64)> = c[n - 1].iter().map(|&j| (j, 1.0)).collect();
        terms.push((p[n - 1], -1.0));
        model.add_row(format!("one_label[{n}]"), terms, Sense::Eq, 0.0).expect("structural columns exist");
    }
    (b, p, c, g)
}

/// Adds `Σ b ≤ cap`.
pub fn add_branch_node_cap(model: &mut Model, b: &[Vec<usize>], cap: usize) {
    let terms = b.iter().flatten().map(|&j| (j, 1.0)).collect();
    model
        .add_row("max_branch_nodes", terms, Sense::Le, cap as f64)
        .expect("split columns exist");
}

/// Benders master: structure, `g`, and the objective encoding of `spec`.
/// Benders cuts linking `g` to the tree are added later by the engine.
pub fn build_benders_master(
    data: &UniqueDataset,
    depth: u32,
    lambda: f64,
    spec: &MetricSpec,
    max_branch_nodes: Option<usize>,
) -> Result<(Model, Artifacts), SolveError> {
    let topo = TreeTopology::new(depth)?;
    spec.validate(data)?;
    if !(0.0..1.0).contains(&lambda) {
        return Err(SolveError::InvalidConfig(format!("lambda = {lambda} outside [0, 1)")));
    }
    let mut model = Model::new(format!("master_{}", spec.name()));
    let (b, p, c, g) = add_structure(&mut model, data, topo, true);
    if let Some(cap) = max_branch_nodes {
        add_branch_node_cap(&mut model, &b, cap);
    }
    let (encoding, mut objective) = encodings::encode(&mut model, data, spec, lambda, &g)?;
    objective.extend(b.iter().flatten().map(|&j| (j, -lambda)));
    objective.retain(|&(_, a)| a != 0.0);
    model.set_objective(ObjSense::Maximize, objective)?;
    let artifacts = Artifacts {
        depth,
        n_features: data.n_features(),
        n_classes: data.n_classes(),
        lambda,
        spec: spec.clone(),
        b,
        p,
        c,
        g,
        encoding,
        max_branch_nodes,
    };
    Ok((model, artifacts))
}
