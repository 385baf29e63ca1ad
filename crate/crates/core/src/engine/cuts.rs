//! Separation routines for the Benders master: min-cut rows linking `g` to
//! the tree, and conflict inequalities over instances that no tree can
//! tell apart.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dataset::UniqueDataset;
use crate::error::SolveError;
use crate::formulations::{Artifacts, LinExpr};
use crate::milp::{Constraint, Sense, INT_TOL};

/// `Σ_{i∈members} g_i ≤ rhs + coefficient · Σ_n Σ_{f∈activating} b[n,f]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConflictCut {
    /// Unique-instance ids, ascending.
    pub members: Vec<usize>,
    /// Number of members per class.
    pub class_sizes: Vec<usize>,
    /// `max_k |G_sk|`.
    pub rhs: usize,
    /// Features whose use breaks the conflict; empty for static cuts.
    pub activating: Vec<usize>,
    /// `|G_s| − max_k |G_sk|`, zero for static cuts.
    pub coefficient: usize,
}

impl ConflictCut {
    fn from_group(data: &UniqueDataset, members: Vec<usize>, activating: Vec<usize>) -> Option<Self> {
        let mut class_sizes = vec![0usize; data.n_classes()];
        for &i in &members {
            class_sizes[data.label(i)] += 1;
        }
        if class_sizes.iter().filter(|&&s| s > 0).count() < 2 {
            return None;
        }
        let rhs = *class_sizes.iter().max().expect("at least two classes");
        let coefficient = if activating.is_empty() { 0 } else { members.len() - rhs };
        Some(Self {
            members,
            class_sizes,
            rhs,
            activating,
            coefficient,
        })
    }

    /// Left side minus right side at `x`; positive means violated.
    pub fn violation(&self, art: &Artifacts, x: &[f64]) -> f64 {
        let lhs: f64 = self.members.iter().map(|&i| x[art.g[i]]).sum();
        let used: f64 = art
            .b
            .iter()
            .flat_map(|row| self.activating.iter().map(move |&f| row[f]))
            .map(|j| x[j])
            .sum();
        lhs - self.rhs as f64 - self.coefficient as f64 * used
    }

    pub fn to_constraint(&self, art: &Artifacts, name: impl Into<String>) -> Constraint {
        let mut terms: Vec<(usize, f64)> = self.members.iter().map(|&i| (art.g[i], 1.0)).collect();
        if self.coefficient > 0 {
            for row in &art.b {
                for &f in &self.activating {
                    terms.push((row[f], -(self.coefficient as f64)));
                }
            }
        }
        Constraint::new(name, terms, Sense::Le, self.rhs as f64)
    }

    /// Canonical identity used to deduplicate cuts.
    pub fn key(&self) -> (Vec<usize>, Vec<usize>) {
        (self.members.clone(), self.activating.clone())
    }
}

/// One cut per group of unique instances with identical features and at
/// least two labels.
pub fn static_conflict_cuts(data: &UniqueDataset) -> Vec<ConflictCut> {
    let mut groups: BTreeMap<&[u8], Vec<usize>> = BTreeMap::new();
    for i in 0..data.len() {
        groups.entry(data.row(i)).or_default().push(i);
    }
    let mut cuts: Vec<ConflictCut> = groups
        .into_values()
        .filter_map(|members| ConflictCut::from_group(data, members, Vec::new()))
        .collect();
    cuts.sort_by(|a, b| a.members.cmp(&b.members));
    cuts
}

/// Conflict cuts that hold while the features unused by the LP point stay
/// unused. Only cuts violated by `x` are returned; groups whose members
/// already agree on every feature are left to the static cuts.
pub fn separate_feature_activated(art: &Artifacts, data: &UniqueDataset, x: &[f64], eps_b: f64) -> Vec<ConflictCut> {
    let unused: Vec<usize> = (0..art.n_features)
        .filter(|&f| art.b.iter().map(|row| x[row[f]]).sum::<f64>() <= eps_b)
        .collect();
    if unused.is_empty() {
        return Vec::new();
    }
    let kept: Vec<usize> = (0..art.n_features).filter(|f| !unused.contains(f)).collect();
    let mut groups: BTreeMap<Vec<u8>, Vec<usize>> = BTreeMap::new();
    for i in 0..data.len() {
        let key = kept.iter().map(|&f| data.row(i)[f]).collect();
        groups.entry(key).or_default().push(i);
    }
    let mut out = Vec::new();
    for members in groups.into_values() {
        let first = data.row(members[0]);
        if members.iter().all(|&i| data.row(i) == first) {
            continue;
        }
        if let Some(cut) = ConflictCut::from_group(data, members, unused.clone()) {
            if cut.violation(art, x) > 1e-6 {
                out.push(cut);
            }
        }
    }
    out
}

fn integral(v: f64) -> bool {
    (v - v.round()).abs() <= INT_TOL
}

/// Path trace for an assignment whose tree columns are integral. `g_i` may
/// be fractional; the cut is emitted when it exceeds the reached leaf's
/// label indicator.
pub(crate) fn trace_cut(art: &Artifacts, data: &UniqueDataset, x: &[f64], i: usize) -> Option<Vec<usize>> {
    let g = x[art.g[i]];
    if g <= 1e-6 {
        return None;
    }
    let topo = art.topology();
    let row = data.row(i);
    let mut s = Vec::new();
    let mut n = 1usize;
    loop {
        s.push(n);
        if x[art.p[n - 1]] > 0.5 || !topo.is_branch(n) {
            break;
        }
        let f = art.b[n - 1].iter().position(|&j| x[j] > 0.5)?;
        n = if row[f] == 0 { topo.left(n) } else { topo.right(n) };
    }
    (g > x[art.c[n - 1][data.label(i)]] + 1e-6).then_some(s)
}

/// Integer separation for instance `i`: returns the source side `S` of a
/// violated min cut, or `None` when every cut for `i` holds.
pub fn separate_benders(art: &Artifacts, data: &UniqueDataset, x: &[f64], i: usize) -> Result<Option<Vec<usize>>, SolveError> {
    let structural = art
        .all_b()
        .chain(art.p.iter().copied())
        .chain(art.c.iter().flatten().copied())
        .chain(std::iter::once(art.g[i]));
    if let Some(j) = structural.into_iter().find(|&j| !integral(x[j])) {
        return Err(SolveError::NonInteger(format!("column {j} = {}", x[j])));
    }
    Ok(trace_cut(art, data, x, i))
}

/// Exact separation at any point: the min cut of instance `i`'s network,
/// computed bottom-up over the tree. Returns `S` when `g_i` exceeds it.
pub fn separate_benders_fractional(art: &Artifacts, data: &UniqueDataset, x: &[f64], i: usize) -> Option<Vec<usize>> {
    let topo = art.topology();
    let row = data.row(i);
    let y = data.label(i);
    let arc = |n: usize, side: u8| -> f64 {
        art.b[n - 1]
            .iter()
            .enumerate()
            .filter(|&(f, _)| row[f] == side)
            .map(|(_, &j)| x[j])
            .sum()
    };
    // flow[n]: most flow node n can pass to the sink.
    let mut flow = vec![0.0; topo.node_count() + 1];
    for n in topo.nodes().rev() {
        let mut v = x[art.c[n - 1][y]];
        if topo.is_branch(n) {
            v += arc(n, 0).min(flow[topo.left(n)]) + arc(n, 1).min(flow[topo.right(n)]);
        }
        flow[n] = v;
    }
    let g = x[art.g[i]];
    if flow[1] >= 1.0 || g <= flow[1] + 1e-6 {
        return None;
    }
    let mut s = Vec::new();
    let mut stack = vec![1usize];
    while let Some(n) = stack.pop() {
        s.push(n);
        if topo.is_branch(n) {
            for (side, child) in [(0u8, topo.left(n)), (1u8, topo.right(n))] {
                if flow[child] < arc(n, side) {
                    stack.push(child);
                }
            }
        }
    }
    s.sort_unstable();
    Some(s)
}

/// Row `g_i − capacity(S) ≤ constant`.
pub fn benders_row(art: &Artifacts, data: &UniqueDataset, i: usize, s: &[usize], name: impl Into<String>) -> Result<Constraint, SolveError> {
    let cap: LinExpr = art.cut_capacity(data, i, s)?;
    let mut merged: BTreeMap<usize, f64> = BTreeMap::new();
    merged.insert(art.g[i], 1.0);
    for (j, a) in cap.terms {
        *merged.entry(j).or_insert(0.0) -= a;
    }
    let terms = merged.into_iter().filter(|&(_, a)| a != 0.0).collect();
    Ok(Constraint::new(name, terms, Sense::Le, cap.constant))
}
