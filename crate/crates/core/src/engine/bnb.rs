//! Best-bound branch-and-bound over [`DualSimplex`] with callback hooks for
//! lazy constraints, cutting planes and primal heuristics.
//!
//! The search is single-threaded and deterministic: open nodes are ordered
//! by (bound, depth, creation id) and callbacks see nodes in that order.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::SolveError;
use crate::milp::{Constraint, DualSimplex, LpStatus, Model, ObjSense, INT_TOL};

/// What a callback knows about the current node.
#[derive(Clone, Copy, Debug)]
pub struct NodeContext {
    /// Sequence number of the node being processed (root = 0).
    pub node: u64,
    pub depth: usize,
    /// Cut rounds already performed at this node.
    pub round: usize,
    /// Whether every integer column is integral in the current LP point.
    pub integral: bool,
    /// LP objective of the current point, in maximization sense.
    pub lp_bound: f64,
    pub incumbent: Option<f64>,
}

/// Problem-specific hooks. All defaults do nothing.
pub trait Callbacks {
    /// Lower number = branched on first.
    fn priority(&self, _j: usize) -> u8 {
        0
    }

    /// Lazy rows violated by `x`. For integral `x` the answer must be
    /// complete: an empty list certifies feasibility.
    fn lazy(&mut self, _x: &[f64], _ctx: &NodeContext) -> Vec<Constraint> {
        Vec::new()
    }

    /// Whether an integral point satisfies every lazy row. Used to vet
    /// heuristic candidates; the default asks [`Callbacks::lazy`].
    fn verify(&mut self, x: &[f64], ctx: &NodeContext) -> bool {
        self.lazy(x, ctx).is_empty()
    }

    /// Optional cutting planes at a fractional point.
    fn user_cuts(&mut self, _x: &[f64], _ctx: &NodeContext) -> Vec<Constraint> {
        Vec::new()
    }

    /// Candidate full assignments; the engine verifies them before use.
    fn heuristic(&mut self, _x: &[f64], _ctx: &NodeContext) -> Vec<Vec<f64>> {
        Vec::new()
    }

    /// Notification of a new incumbent.
    fn on_incumbent(&mut self, _x: &[f64], _value: f64) {}

    /// Branching decision at a node whose LP point is not integral, after
    /// heuristics ran. `bounds(j)` gives the node's bounds on column `j`.
    fn branching(&mut self, _x: &[f64], _bounds: &dyn Fn(usize) -> (f64, f64)) -> Branching {
        Branching::Default
    }
}

/// How a fractional node is split.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branching {
    /// Most fractional column of the highest-priority family.
    Default,
    /// The node's subtree holds nothing better than what the callbacks
    /// already offered as candidates.
    Prune,
    /// Split on this column. An integral value `v` yields the children
    /// `x = v` and `x ≠ v`.
    On(usize),
}

/// A no-op callback set, for plain MIPs.
pub struct NoCallbacks;

impl Callbacks for NoCallbacks {}

#[derive(Clone, Debug)]
pub struct BnbSettings {
    pub time_limit: Option<Duration>,
    pub node_limit: Option<u64>,
    /// Relative gap `(UB − LB)/|UB|` at which a node is pruned.
    pub gap_tolerance: f64,
    /// If every feasible objective value is a multiple of this step, nodes
    /// whose bound cannot reach the next multiple are pruned.
    pub objective_step: Option<f64>,
    /// Maximum cut rounds at the root and at other nodes (fractional points).
    pub root_cut_rounds: usize,
    pub node_cut_rounds: usize,
    /// Assignments tried as incumbents before the search starts.
    pub initial: Vec<Vec<f64>>,
    /// Emit a progress line every this many nodes.
    pub log_every: u64,
}

impl Default for BnbSettings {
    fn default() -> Self {
        Self {
            time_limit: None,
            node_limit: None,
            gap_tolerance: 0.0,
            objective_step: None,
            root_cut_rounds: 50,
            node_cut_rounds: 5,
            initial: Vec::new(),
            log_every: 1000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BnbStatus {
    Optimal,
    Infeasible,
    TimeLimit,
    NodeLimit,
}

#[derive(Clone, Debug)]
pub struct BnbOutcome {
    pub status: BnbStatus,
    pub incumbent: Option<Vec<f64>>,
    /// Incumbent objective in model sense (NaN without incumbent).
    pub incumbent_value: f64,
    /// Best bound in model sense.
    pub bound: f64,
    pub nodes: u64,
    pub lp_iterations: u64,
    pub rows_added: usize,
    pub log: Vec<String>,
}

struct OpenNode {
    bound: f64,
    depth: usize,
    id: u64,
    fixings: Vec<(usize, f64, f64)>,
}

impl PartialEq for OpenNode {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for OpenNode {}

impl PartialOrd for OpenNode {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OpenNode {
    fn cmp(&self, other: &Self) -> Ordering {
        self.bound
            .total_cmp(&other.bound)
            .then(self.depth.cmp(&other.depth))
            .then(other.id.cmp(&self.id))
    }
}

struct Search<'a> {
    model: &'a Model,
    lp: DualSimplex,
    sign: f64,
    settings: &'a BnbSettings,
    integer_cols: Vec<usize>,
    added: Vec<Constraint>,
    incumbent: Option<Vec<f64>>,
    /// Incumbent value in maximization sense.
    best: f64,
    start: Instant,
    log: Vec<String>,
}

impl Search<'_> {
    fn max_value(&self, x: &[f64]) -> f64 {
        self.sign * self.model.objective_value(x)
    }

    fn is_integral(&self, x: &[f64]) -> bool {
        self.integer_cols
            .iter()
            .all(|&j| (x[j] - x[j].round()).abs() <= INT_TOL)
    }

    /// Largest bound a node may have and still be pruned.
    fn prune_level(&self) -> f64 {
        if self.incumbent.is_none() {
            return f64::NEG_INFINITY;
        }
        let tol = 1e-9 * self.best.abs().max(1.0);
        let mut level = self.best + tol;
        if let Some(step) = self.settings.objective_step {
            level = level.max(self.best + step - 1e-6 * step);
        }
        if self.settings.gap_tolerance > 0.0 {
            // bound − best ≤ gap·|bound|  ⇔  bound ≤ best / (1 − gap) for positive values.
            let g = self.settings.gap_tolerance;
            if self.best >= 0.0 {
                level = level.max(self.best / (1.0 - g));
            } else {
                level = level.max(self.best / (1.0 + g));
            }
        }
        level
    }

    fn prunable(&self, bound: f64) -> bool {
        bound <= self.prune_level()
    }

    fn try_candidate<C: Callbacks + ?Sized>(&mut self, cb: &mut C, x: Vec<f64>, ctx: &NodeContext) -> bool {
        if x.len() != self.model.n_vars() || !self.is_integral(&x) {
            return false;
        }
        let tol = 1e-6;
        for (j, v) in self.model.vars().iter().enumerate() {
            if x[j] < v.lower - tol || x[j] > v.upper + tol {
                return false;
            }
        }
        if !self.model.is_feasible(&x, tol) || self.added.iter().any(|c| c.violation(&x) > tol) {
            return false;
        }
        if !cb.verify(&x, &NodeContext { integral: true, ..*ctx }) {
            return false;
        }
        let value = self.max_value(&x);
        if self.incumbent.is_some() && value <= self.best + 1e-9 * self.best.abs().max(1.0) {
            return false;
        }
        self.best = value;
        cb.on_incumbent(&x, self.sign * value);
        self.incumbent = Some(x);
        true
    }

    fn timed_out(&self) -> bool {
        self.settings
            .time_limit
            .is_some_and(|t| self.start.elapsed() >= t)
    }
}

/// Solves `model` by LP-based branch-and-bound, consulting `cb` for lazy
/// rows, cuts and heuristic solutions.
pub fn branch_and_bound<C: Callbacks + ?Sized>(
    model: &Model,
    cb: &mut C,
    settings: &BnbSettings,
) -> Result<BnbOutcome, SolveError> {
    let sign = match model.sense() {
        ObjSense::Maximize => 1.0,
        ObjSense::Minimize => -1.0,
    };
    let mut search = Search {
        model,
        lp: DualSimplex::new(model)?,
        sign,
        settings,
        integer_cols: (0..model.n_vars()).filter(|&j| model.var(j).is_integral()).collect(),
        added: Vec::new(),
        incumbent: None,
        best: f64::NEG_INFINITY,
        start: Instant::now(),
        log: Vec::new(),
    };
    let root_bounds: Vec<(f64, f64)> = (0..model.n_vars()).map(|j| search.lp.bounds(j)).collect();
    let ctx0 = NodeContext {
        node: 0,
        depth: 0,
        round: 0,
        integral: true,
        lp_bound: f64::INFINITY,
        incumbent: None,
    };
    for x in &settings.initial {
        if search.try_candidate(cb, x.clone(), &ctx0) {
            search.log.push(format!("warm start accepted: objective {:.9}", sign * search.best));
        } else {
            search.log.push("warm start rejected".to_string());
        }
    }

    let mut heap = BinaryHeap::new();
    heap.push(OpenNode {
        bound: f64::INFINITY,
        depth: 0,
        id: 0,
        fixings: Vec::new(),
    });
    let mut next_id = 1u64;
    let mut processed = 0u64;
    let mut touched: Vec<usize> = Vec::new();
    let mut status = None;

    while let Some(node) = heap.pop() {
        if search.prunable(node.bound) {
            continue;
        }
        if search.timed_out() {
            heap.push(node);
            status = Some(BnbStatus::TimeLimit);
            break;
        }
        if settings.node_limit.is_some_and(|l| processed >= l) {
            heap.push(node);
            status = Some(BnbStatus::NodeLimit);
            break;
        }
        let node_seq = processed;
        processed += 1;
        for j in touched.drain(..) {
            let (lo, hi) = root_bounds[j];
            search.lp.set_bounds(j, lo, hi);
        }
        for &(j, lo, hi) in &node.fixings {
            search.lp.set_bounds(j, lo, hi);
            touched.push(j);
        }

        let max_rounds = if node.depth == 0 { settings.root_cut_rounds } else { settings.node_cut_rounds };
        let mut round = 0usize;
        let outcome = loop {
            let cutoff = search
                .incumbent
                .as_ref()
                .map(|_| sign * search.prune_level());
            let sol = search.lp.solve(cutoff);
            match sol.status {
                LpStatus::Optimal => {}
                LpStatus::Infeasible | LpStatus::Cutoff => break None,
                LpStatus::IterationLimit => return Err(SolveError::IterationLimit),
            }
            let bound = sign * sol.objective;
            if search.prunable(bound) {
                break None;
            }
            let integral = search.is_integral(&sol.values);
            let ctx = NodeContext {
                node: node_seq,
                depth: node.depth,
                round,
                integral,
                lp_bound: bound,
                incumbent: search.incumbent.as_ref().map(|_| sign * search.best),
            };
            let mut rows = cb.lazy(&sol.values, &ctx);
            if integral && !rows.is_empty() {
                // Lazy rows must cut off an integral point; keep going regardless of the round cap.
            } else if !integral {
                if round >= max_rounds {
                    rows.clear();
                } else {
                    rows.extend(cb.user_cuts(&sol.values, &ctx));
                }
            }
            if rows.is_empty() {
                break Some((sol.values, bound, integral, ctx));
            }
            for row in rows {
                search.lp.add_row(&row)?;
                search.added.push(row);
            }
            round += 1;
        };
        let Some((x, bound, integral, ctx)) = outcome else {
            continue;
        };

        if integral {
            if search.try_candidate(cb, x.clone(), &ctx) {
                search.log.push(format!(
                    "node {node_seq}: integral incumbent {:.9}",
                    sign * search.best
                ));
            }
            continue;
        }
        for cand in cb.heuristic(&x, &ctx) {
            if search.try_candidate(cb, cand, &ctx) {
                search.log.push(format!(
                    "node {node_seq}: heuristic incumbent {:.9}",
                    sign * search.best
                ));
            }
        }
        if search.prunable(bound) {
            continue;
        }

        let decision = {
            let lp = &search.lp;
            cb.branching(&x, &|j| lp.bounds(j))
        };
        let j = match decision {
            Branching::Prune => continue,
            Branching::On(j) => j,
            Branching::Default => {
                // Most fractional column of the highest-priority family.
                let mut pick: Option<(u8, f64, usize)> = None;
                for &j in &search.integer_cols {
                    let frac = (x[j] - x[j].floor()).min(x[j].ceil() - x[j]);
                    if frac <= INT_TOL {
                        continue;
                    }
                    let key = (cb.priority(j), -frac, j);
                    if pick.map_or(true, |p| key < p) {
                        pick = Some(key);
                    }
                }
                pick.expect("a non-integral point has a fractional column").2
            }
        };
        let (lo, hi) = search.lp.bounds(j);
        let v = x[j];
        let children: Vec<(f64, f64)> = if (v - v.round()).abs() <= INT_TOL {
            let v = v.round();
            let mut c = vec![(v, v)];
            if v + 1.0 <= hi {
                c.push((v + 1.0, hi));
            }
            if v - 1.0 >= lo {
                c.push((lo, v - 1.0));
            }
            c
        } else {
            vec![(v.ceil(), hi), (lo, v.floor())]
        };
        for (clo, chi) in children {
            let mut fixings = node.fixings.clone();
            fixings.push((j, clo, chi));
            heap.push(OpenNode {
                bound,
                depth: node.depth + 1,
                id: next_id,
                fixings,
            });
            next_id += 1;
        }

        if settings.log_every > 0 && processed % settings.log_every == 0 {
            let ub = heap.peek().map_or(bound, |n| n.bound);
            search.log.push(format!(
                "node {processed}: open {} bound {:.9} incumbent {} rows {}",
                heap.len(),
                sign * ub,
                search.incumbent.as_ref().map_or("none".to_string(), |_| format!("{:.9}", sign * search.best)),
                search.added.len()
            ));
        }
    }

    let open_bound = heap
        .iter()
        .filter(|n| !search.prunable(n.bound))
        .map(|n| n.bound)
        .fold(f64::NEG_INFINITY, f64::max);
    let status = status.unwrap_or(if search.incumbent.is_some() {
        BnbStatus::Optimal
    } else {
        BnbStatus::Infeasible
    });
    let (bound, status) = if heap.is_empty() || open_bound == f64::NEG_INFINITY {
        let s = if matches!(status, BnbStatus::TimeLimit | BnbStatus::NodeLimit) && search.incumbent.is_some() {
            BnbStatus::Optimal
        } else {
            status
        };
        (search.best, s)
    } else {
        (open_bound.max(search.best), status)
    };
    // An unexplored root has no finite bound; fall back to the LP-free value.
    let bound = if bound.is_finite() { bound } else { f64::INFINITY };
    Ok(BnbOutcome {
        status,
        incumbent_value: if search.incumbent.is_some() { sign * search.best } else { f64::NAN },
        incumbent: search.incumbent,
        bound: sign * bound,
        nodes: processed,
        lp_iterations: search.lp.total_iterations(),
        rows_added: search.added.len(),
        log: search.log,
    })
}
