//! Flow formulations: one unit of flow per instance travels from the source
//! through the tree and reaches the sink only at a leaf carrying its label.

use serde::{Deserialize, Serialize};

use super::{add_branch_node_cap, add_structure};
use crate::dataset::{BinarizedDataset, UniqueDataset};
use crate::error::SolveError;
use crate::milp::{Model, ObjSense, Sense, VarType};
use crate::tree::TreeTopology;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowArtifacts {
    pub depth: u32,
    pub b: Vec<Vec<usize>>,
    pub p: Vec<usize>,
    pub c: Vec<Vec<usize>>,
    /// Per instance, the source arc `(s, 1)`.
    pub z_source: Vec<usize>,
    /// Per instance and node, the sink arc `(n, t)`.
    pub z_sink: Vec<Vec<usize>>,
}

impl FlowArtifacts {
    /// Arcs per instance: the source arc, two child arcs per branch node
    /// and one sink arc per node.
    pub fn arcs_per_instance(topo: TreeTopology) -> usize {
        1 + 2 * topo.n_branch() + topo.node_count()
    }
}

#[allow(clippy::too_many_arguments)]
fn build(
    name: &str,
    shape: &UniqueDataset,
    rows: &[Vec<u8>],
    labels: &[usize],
    weights: &[f64],
    depth: u32,
    lambda: f64,
    z_type: VarType,
    max_branch_nodes: Option<usize>,
) -> Result<(Model, FlowArtifacts), SolveError> {
    let topo = TreeTopology::new(depth)?;
    if !(0.0..1.0).contains(&lambda) {
        return Err(SolveError::InvalidConfig(format!("lambda = {lambda} outside [0, 1)")));
    }
    let mut model = Model::new(name);
    let (b, p, c, _) = add_structure(&mut model, shape, topo, false);
    if let Some(cap) = max_branch_nodes {
        add_branch_node_cap(&mut model, &b, cap);
    }
    let mut objective: Vec<(usize, f64)> = b.iter().flatten().map(|&j| (j, -lambda)).collect();
    let mut z_source = Vec::with_capacity(rows.len());
    let mut z_sink = Vec::with_capacity(rows.len());
    for (i, (x, &y)) in rows.iter().zip(labels).enumerate() {
        let z = |model: &mut Model, arc: String| {
            model.add_var(format!("z[{i},{arc}]"), 0.0, 1.0, z_type).expect("unit bounds")
        };
        let src = z(&mut model, "s,1".into());
        let left: Vec<usize> = topo.branch_nodes().map(|n| z(&mut model, format!("{n},{}", 2 * n))).collect();
        let right: Vec<usize> = topo.branch_nodes().map(|n| z(&mut model, format!("{n},{}", 2 * n + 1))).collect();
        let sink: Vec<usize> = topo.nodes().map(|n| z(&mut model, format!("{n},t"))).collect();
        for n in topo.nodes() {
            let inflow = match topo.parent(n) {
                None => src,
                Some(a) if n % 2 == 0 => left[a - 1],
                Some(a) => right[a - 1],
            };
            let mut terms = vec![(inflow, 1.0), (sink[n - 1], -1.0)];
            if topo.is_branch(n) {
                terms.push((left[n - 1], -1.0));
                terms.push((right[n - 1], -1.0));
                for (side, arc) in [(0u8, left[n - 1]), (1u8, right[n - 1])] {
                    let mut cap = vec![(arc, 1.0)];
                    cap.extend((0..x.len()).filter(|&f| x[f] == side).map(|f| (b[n - 1][f], -1.0)));
                    model.add_row(format!("cap_{side}[{i},{n}]"), cap, Sense::Le, 0.0)?;
                }
            }
            model.add_row(format!("flow[{i},{n}]"), terms, Sense::Eq, 0.0)?;
            model.add_row(
                format!("sink[{i},{n}]"),
                vec![(sink[n - 1], 1.0), (c[n - 1][y], -1.0)],
                Sense::Le,
                0.0,
            )?;
            objective.push((sink[n - 1], (1.0 - lambda) * weights[i]));
        }
        z_source.push(src);
        z_sink.push(sink);
    }
    model.set_objective(ObjSense::Maximize, objective)?;
    Ok((
        model,
        FlowArtifacts {
            depth,
            b,
            p,
            c,
            z_source,
            z_sink,
        },
    ))
}

/// Unweighted flow model over every original row, with binary flows.
pub fn build_flowoct(
    data: &BinarizedDataset,
    depth: u32,
    lambda: f64,
    max_branch_nodes: Option<usize>,
) -> Result<(Model, FlowArtifacts), SolveError> {
    let shape = crate::dataset::reduce_unique(data);
    let weights = vec![1.0; data.len()];
    build(
        "flowoct",
        &shape,
        data.rows(),
        data.labels(),
        &weights,
        depth,
        lambda,
        VarType::Binary,
        max_branch_nodes,
    )
}

/// Flow model over unique instances with objective weights `w_i` and
/// continuous flows in `[0, 1]`.
pub fn build_wflowoct(
    data: &UniqueDataset,
    depth: u32,
    lambda: f64,
    max_branch_nodes: Option<usize>,
) -> Result<(Model, FlowArtifacts), SolveError> {
    let weights: Vec<f64> = data.weights().iter().map(|&w| w as f64).collect();
    build(
        "wflowoct",
        data,
        data.rows(),
        data.labels(),
        &weights,
        depth,
        lambda,
        VarType::Continuous,
        max_branch_nodes,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formulations::tests::example1;

    #[test]
    fn flowoct_variable_count() {
        let data = example1().expand();
        let (m, _) = build_flowoct(&data, 1, 0.0, None).unwrap();
        let topo = TreeTopology::new(1).unwrap();
        let expected = topo.n_branch() * 4 + topo.node_count() + topo.node_count() * 2 + 4 * FlowArtifacts::arcs_per_instance(topo);
        assert_eq!(m.n_vars(), expected);
        assert_eq!(expected, 4 + 3 + 6 + 24);
    }

    #[test]
    fn weighted_model_shrinks_with_duplicates() {
        let u = example1();
        let data = u.expand();
        let (flow, _) = build_flowoct(&data, 2, 0.0, None).unwrap();
        let (wflow, _) = build_wflowoct(&u, 2, 0.0, None).unwrap();
        assert_eq!(u.len(), 4);
        assert_eq!(flow.n_vars(), wflow.n_vars());
        assert!(flow.vars().iter().all(|v| !v.name.starts_with("z[") || v.vtype == VarType::Binary));
    }
}
