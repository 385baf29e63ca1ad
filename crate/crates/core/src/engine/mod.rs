//! Branch-and-cut for the Benders master.
//!
//! [`solve`] runs the generic search in [`bnb`] with callbacks that add
//! min-cut rows for `g` lazily, separate conflict cuts, turn integral tree
//! columns into incumbents and run LP-guided sub-MIPs. [`train`] wraps it
//! with model construction and the depth-by-depth warm start.

pub mod bnb;
pub mod cuts;
mod envelope;

use std::collections::HashSet;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

pub use bnb::{branch_and_bound, BnbOutcome, BnbSettings, BnbStatus, Branching, Callbacks, NoCallbacks, NodeContext};
pub use cuts::{
    benders_row, separate_benders, separate_benders_fractional, separate_feature_activated, static_conflict_cuts,
    ConflictCut,
};

use crate::dataset::UniqueDataset;
use crate::error::SolveError;
use crate::exec::Exec;
use crate::formulations::{build_benders_master, Artifacts, VarFamily};
use crate::heuristics::{self, fit_cart, HistorySet};
use crate::metrics::MetricSpec;
use crate::milp::{Constraint, Model, INT_TOL};
use crate::tree::ClassTree;

/// Feature-activated cuts are never added beyond this many.
pub const FEATURE_CUT_POOL: usize = 5000;
/// Feature-activated cuts are separated at the root and every this many nodes.
pub const FEATURE_CUT_EVERY: u64 = 10;
/// The node heuristic runs at the root and every this many nodes.
pub const NODE_HEURISTIC_EVERY: u64 = 50;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveConfig {
    /// Seconds.
    pub time_limit: f64,
    /// Relative gap at which the search stops, in `[0, 1)`.
    pub gap_tolerance: f64,
    pub lambda: f64,
    pub enable_conflict_cuts: bool,
    pub enable_feature_cuts: bool,
    /// Planes bounding a nonlinear score by the true counts it can reach.
    pub enable_envelope_cuts: bool,
    pub enable_warm_start: bool,
    pub enable_node_heuristic: bool,
    /// Also separate min-cut rows at fractional LP points.
    pub fractional_benders: bool,
    pub seed: u64,
    /// Split mass below which a feature counts as unused.
    pub eps_b: f64,
    pub max_branch_nodes: Option<usize>,
    pub node_limit: Option<u64>,
    /// Ranked features added per depth by the warm start.
    pub feature_increment: usize,
    pub rf_trees: usize,
    /// Budget of each node-heuristic sub-MIP.
    pub heuristic_time_limit: f64,
    pub heuristic_node_limit: u64,
    /// Extra starting tree, tried before the search.
    pub warm_start: Option<ClassTree>,
    #[serde(skip)]
    pub exec: Exec,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            time_limit: 600.0,
            gap_tolerance: 0.0,
            lambda: 0.0,
            enable_conflict_cuts: true,
            enable_feature_cuts: true,
            enable_envelope_cuts: true,
            enable_warm_start: true,
            enable_node_heuristic: true,
            fractional_benders: true,
            seed: 0,
            eps_b: 1e-6,
            max_branch_nodes: None,
            node_limit: None,
            feature_increment: heuristics::DEFAULT_FEATURE_INCREMENT,
            rf_trees: 100,
            heuristic_time_limit: 5.0,
            heuristic_node_limit: 500,
            warm_start: None,
            exec: Exec::default(),
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<(), SolveError> {
        if !(self.time_limit > 0.0) {
            return Err(SolveError::InvalidConfig(format!("time limit {} must be positive", self.time_limit)));
        }
        if !(0.0..1.0).contains(&self.gap_tolerance) {
            return Err(SolveError::InvalidConfig(format!("gap tolerance {} outside [0, 1)", self.gap_tolerance)));
        }
        if !(0.0..1.0).contains(&self.lambda) {
            return Err(SolveError::InvalidConfig(format!("lambda {} outside [0, 1)", self.lambda)));
        }
        if !(self.eps_b >= 0.0) {
            return Err(SolveError::InvalidConfig("eps_b must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    TimeLimit,
    NodeLimit,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CutStats {
    /// Min-cut rows found by the path trace at integral tree columns.
    pub benders: usize,
    /// Min-cut rows found at fractional points.
    pub benders_fractional: usize,
    pub conflict_static: usize,
    pub feature_activated: usize,
    #[serde(default)]
    pub envelope: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct HeuristicStats {
    pub warm_start_objective: Option<f64>,
    pub node_heuristic_attempts: usize,
    pub node_heuristic_successes: usize,
}

/// Wall-clock data, kept apart so the rest of the result is reproducible.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub wall_seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub metric: String,
    pub depth: u32,
    pub lambda: f64,
    pub tree: ClassTree,
    /// Objective of `tree` (the incumbent), equal to `lower_bound`.
    pub objective: f64,
    /// Reported metric value of `tree` on the training data.
    pub metric_value: f64,
    pub upper_bound: f64,
    pub lower_bound: f64,
    /// Percent, `100·(UB − LB)/UB`.
    pub gap: f64,
    pub nodes: u64,
    pub lp_iterations: u64,
    pub cuts: CutStats,
    pub heuristics: HeuristicStats,
    pub timing: Timing,
    #[serde(skip)]
    pub log: Vec<String>,
}

/// `100·(UB − LB)/UB`; zero when both are zero, 100 when only UB is.
pub fn compute_gap(ub: f64, lb: f64) -> f64 {
    if ub == 0.0 {
        return if lb == 0.0 { 0.0 } else { 100.0 };
    }
    100.0 * (ub - lb) / ub.abs()
}

/// Reads the tree encoded by the structural columns of `x`.
pub fn extract_tree(art: &Artifacts, x: &[f64]) -> Result<ClassTree, SolveError> {
    Ok(art.extract_tree(x)?)
}

struct OctCallbacks<'a> {
    art: &'a Artifacts,
    data: &'a UniqueDataset,
    cfg: &'a SolveConfig,
    n_vars: usize,
    deadline: Instant,
    structural: Vec<usize>,
    /// Whether the score never drops when an instance becomes correct.
    monotone: bool,
    stats: CutStats,
    feature_keys: HashSet<(Vec<usize>, Vec<usize>)>,
    envelope: Option<envelope::ScoreEnvelope>,
    history: HistorySet,
    incumbent: Option<(ClassTree, f64)>,
    heur: HeuristicStats,
    rows: usize,
}

impl OctCallbacks<'_> {
    fn structure_integral(&self, x: &[f64]) -> bool {
        self.structural.iter().all(|&j| (x[j] - x[j].round()).abs() <= INT_TOL)
    }

    fn name(&mut self, family: &str) -> String {
        self.rows += 1;
        format!("{family}#{}", self.rows)
    }

    fn benders_sets(&self, x: &[f64], integral: bool) -> Vec<(usize, Vec<usize>)> {
        let found = self.cfg.exec.map_range(self.data.len(), |i| {
            if integral {
                cuts::trace_cut(self.art, self.data, x, i)
            } else {
                separate_benders_fractional(self.art, self.data, x, i)
            }
        });
        found.into_iter().enumerate().filter_map(|(i, s)| s.map(|s| (i, s))).collect()
    }

    fn sub_solver(&self) -> impl FnMut(&UniqueDataset, &MetricSpec, u32, Option<&ClassTree>) -> Result<ClassTree, SolveError> + '_ {
        move |sub, spec, depth, warm| {
            let remaining = self.deadline.saturating_duration_since(Instant::now()).as_secs_f64();
            let limit = self.cfg.heuristic_time_limit.min(remaining);
            if limit <= 0.0 {
                return Err(SolveError::InvalidConfig("no time left for the sub-MIP".into()));
            }
            let cfg = SolveConfig {
                time_limit: limit,
                node_limit: Some(self.cfg.heuristic_node_limit),
                enable_node_heuristic: false,
                warm_start: warm.cloned(),
                exec: Exec::Sequential,
                ..self.cfg.clone()
            };
            let (model, art) = build_benders_master(sub, depth, self.art.lambda, spec, self.art.max_branch_nodes)?;
            Ok(solve(&model, &art, sub, &cfg)?.tree)
        }
    }
}

impl Callbacks for OctCallbacks<'_> {
    fn priority(&self, j: usize) -> u8 {
        match self.art.family(j) {
            VarFamily::Split => 0,
            VarFamily::Leaf => 1,
            VarFamily::Label => 2,
            VarFamily::Correct => 3,
            VarFamily::Auxiliary => 4,
        }
    }

    fn lazy(&mut self, x: &[f64], _ctx: &NodeContext) -> Vec<Constraint> {
        let integral = self.structure_integral(x);
        if !integral && !self.cfg.fractional_benders {
            return Vec::new();
        }
        let mut rows = Vec::new();
        for (i, s) in self.benders_sets(x, integral) {
            let name = self.name("benders");
            let row = benders_row(self.art, self.data, i, &s, name).expect("cut sets come from the tree");
            if row.violation(x) > 1e-6 {
                rows.push(row);
            }
        }
        if integral {
            self.stats.benders += rows.len();
        } else {
            self.stats.benders_fractional += rows.len();
        }
        rows
    }

    fn verify(&mut self, x: &[f64], _ctx: &NodeContext) -> bool {
        self.structure_integral(x) && (0..self.data.len()).all(|i| cuts::trace_cut(self.art, self.data, x, i).is_none())
    }

    fn user_cuts(&mut self, x: &[f64], ctx: &NodeContext) -> Vec<Constraint> {
        let mut rows = Vec::new();
        let envelope = self.envelope.as_mut().filter(|e| e.active(ctx.node));
        if let Some(plane) = envelope.and_then(|e| e.separate(x)) {
            let name = self.name("envelope");
            rows.push(self.envelope.as_ref().expect("just separated").row(plane, name));
            self.stats.envelope += 1;
        }
        if !self.cfg.enable_feature_cuts
            || ctx.node % FEATURE_CUT_EVERY != 0
            || self.stats.feature_activated >= FEATURE_CUT_POOL
        {
            return rows;
        }
        for cut in separate_feature_activated(self.art, self.data, x, self.cfg.eps_b) {
            if self.stats.feature_activated >= FEATURE_CUT_POOL {
                break;
            }
            if self.feature_keys.insert(cut.key()) {
                let name = self.name("feature_cut");
                rows.push(cut.to_constraint(self.art, name));
                self.stats.feature_activated += 1;
            }
        }
        rows
    }

    fn heuristic(&mut self, x: &[f64], ctx: &NodeContext) -> Vec<Vec<f64>> {
        let mut out = Vec::new();
        if self.structure_integral(x) {
            if let Ok(tree) = self.art.extract_tree(x) {
                if let Ok(a) = self.art.tree_to_assignment(&tree, self.data, self.n_vars) {
                    out.push(a);
                }
            }
        }
        if self.cfg.enable_node_heuristic && ctx.node % NODE_HEURISTIC_EVERY == 0 && Instant::now() < self.deadline {
            let before = self.history.attempted.len();
            let incumbent = self.incumbent.clone();
            let art = self.art;
            let data = self.data;
            let n_vars = self.n_vars;
            let mut history = std::mem::take(&mut self.history);
            let found = {
                let mut solver = self.sub_solver();
                heuristics::node_heuristic_injection(
                    art,
                    data,
                    x,
                    n_vars,
                    &mut history,
                    incumbent.as_ref().map(|(t, v)| (t, *v)),
                    &mut solver,
                )
            };
            self.history = history;
            if self.history.attempted.len() > before {
                self.heur.node_heuristic_attempts += 1;
            }
            if let Some(a) = found {
                self.heur.node_heuristic_successes += 1;
                out.push(a);
            }
        }
        out
    }

    fn branching(&mut self, x: &[f64], bounds: &dyn Fn(usize) -> (f64, f64)) -> Branching {
        if !self.monotone || !self.structure_integral(x) {
            return Branching::Default;
        }
        // Columns at one determine the whole tree through the equality rows;
        // once all of them are fixed the tree is settled, and a monotone
        // score cannot beat the tree already offered as a candidate.
        match self.structural.iter().copied().find(|&j| x[j] > 0.5 && bounds(j).0 < 0.5) {
            Some(j) => Branching::On(j),
            None => Branching::Prune,
        }
    }

    fn on_incumbent(&mut self, x: &[f64], value: f64) {
        if let Ok(tree) = self.art.extract_tree(x) {
            self.history.incumbent_features = tree.used_features();
            self.incumbent = Some((tree, value));
        }
    }
}

/// Solves a master built by [`build_benders_master`] for `data`.
pub fn solve(master: &Model, art: &Artifacts, data: &UniqueDataset, cfg: &SolveConfig) -> Result<SolveResult, SolveError> {
    cfg.validate()?;
    if art.g.len() != data.len() || art.n_features != data.n_features() {
        return Err(SolveError::InvalidConfig("master was built for different data".into()));
    }
    let start = Instant::now();
    let time_limit = Duration::from_secs_f64(cfg.time_limit.min(1e9));
    let n_vars = master.n_vars();
    let mut model = master.clone();
    let mut stats = CutStats::default();
    if cfg.enable_conflict_cuts {
        for (s, cut) in static_conflict_cuts(data).into_iter().enumerate() {
            model.add_constraint(cut.to_constraint(art, format!("conflict[{s}]")))?;
            stats.conflict_static += 1;
        }
    }

    let mut heur = HeuristicStats::default();
    let mut initial = Vec::new();
    let mut starts: Vec<ClassTree> = Vec::new();
    if let Some(t) = &cfg.warm_start {
        starts.push(t.clone());
    }
    if cfg.enable_warm_start {
        starts.push(fit_cart(data, art.depth));
    }
    for t in &starts {
        if let Ok(x) = art.tree_to_assignment(t, data, n_vars) {
            let v = master.objective_value(&x);
            heur.warm_start_objective = Some(heur.warm_start_objective.map_or(v, |w: f64| w.max(v)));
            initial.push(x);
        }
    }

    let step = match art.spec {
        MetricSpec::Accuracy if art.lambda == 0.0 => Some(1.0),
        _ => None,
    };
    let settings = BnbSettings {
        time_limit: Some(time_limit),
        node_limit: cfg.node_limit,
        gap_tolerance: cfg.gap_tolerance,
        objective_step: step,
        initial,
        ..BnbSettings::default()
    };
    let structural = art
        .all_b()
        .chain(art.p.iter().copied())
        .chain(art.c.iter().flatten().copied())
        .collect();
    let mut cb = OctCallbacks {
        art,
        data,
        cfg,
        n_vars,
        deadline: start + time_limit,
        structural,
        monotone: art.spec.is_monotone(),
        stats: CutStats::default(),
        feature_keys: HashSet::new(),
        envelope: if cfg.enable_envelope_cuts {
            envelope::ScoreEnvelope::new(art, data)
        } else {
            None
        },
        history: HistorySet::default(),
        incumbent: None,
        heur,
        rows: 0,
    };
    let out = branch_and_bound(&model, &mut cb, &settings)?;
    let mut stats_all = cb.stats.clone();
    stats_all.conflict_static = stats.conflict_static;
    stats = stats_all;
    let heur = cb.heur.clone();

    let (tree, lower) = match &out.incumbent {
        Some(x) => (art.extract_tree(x)?, out.incumbent_value),
        None => {
            if out.status == BnbStatus::Infeasible {
                return Err(SolveError::InfeasibleMaster);
            }
            // No incumbent before the limit: fall back to the best single leaf.
            let mut best: Option<(ClassTree, f64)> = None;
            for k in 0..art.n_classes {
                let t = ClassTree::constant(art.topology(), art.n_features, k);
                let v = heuristics::tree_objective(&t, data, &art.spec, art.lambda)?;
                if best.as_ref().map_or(true, |(_, b)| v > *b) {
                    best = Some((t, v));
                }
            }
            best.expect("at least one class")
        }
    };
    let status = match out.status {
        BnbStatus::Optimal => SolveStatus::Optimal,
        BnbStatus::TimeLimit => SolveStatus::TimeLimit,
        BnbStatus::NodeLimit => SolveStatus::NodeLimit,
        BnbStatus::Infeasible => return Err(SolveError::InfeasibleMaster),
    };
    let upper = if status == SolveStatus::Optimal { lower.max(out.bound.min(f64::MAX)) } else { out.bound };
    let upper = if upper.is_finite() { upper.max(lower) } else { upper };
    let eval = tree.evaluate(data)?;
    let mut log = out.log;
    log.push(format!(
        "done: status {:?} nodes {} UB {:.9} LB {:.9} gap {:.6}% cuts benders {} fractional {} conflict {} feature {}",
        status,
        out.nodes,
        upper,
        lower,
        compute_gap(upper, lower),
        stats.benders,
        stats.benders_fractional,
        stats.conflict_static,
        stats.feature_activated
    ));
    Ok(SolveResult {
        status,
        metric: art.spec.name().to_string(),
        depth: art.depth,
        lambda: art.lambda,
        metric_value: eval.metric(&art.spec, data)?,
        objective: lower,
        upper_bound: upper,
        lower_bound: lower,
        gap: compute_gap(upper, lower),
        nodes: out.nodes,
        lp_iterations: out.lp_iterations,
        cuts: stats,
        heuristics: heur,
        timing: Timing {
            wall_seconds: start.elapsed().as_secs_f64(),
        },
        log,
        tree,
    })
}

/// Builds the master for `spec`, runs the depth-by-depth warm start when
/// enabled, and solves.
pub fn train(data: &UniqueDataset, depth: u32, spec: &MetricSpec, cfg: &SolveConfig) -> Result<SolveResult, SolveError> {
    cfg.validate()?;
    let start = Instant::now();
    let (model, art) = build_benders_master(data, depth, cfg.lambda, spec, cfg.max_branch_nodes)?;
    let mut cfg_main = cfg.clone();
    if cfg.enable_warm_start && depth >= 2 {
        let ranking = heuristics::rf_ranking(data, cfg.rf_trees, cfg.seed, cfg.exec);
        let budget = cfg.time_limit / (4.0 * depth as f64);
        let mut solver = |sub: &UniqueDataset, sub_spec: &MetricSpec, d: u32, warm: Option<&ClassTree>| {
            let sub_cfg = SolveConfig {
                time_limit: budget,
                warm_start: warm.cloned(),
                ..cfg.clone()
            };
            let (m, a) = build_benders_master(sub, d, cfg.lambda, sub_spec, cfg.max_branch_nodes)?;
            Ok(solve(&m, &a, sub, &sub_cfg)?.tree)
        };
        let state = heuristics::feasible_solution_injection(
            data,
            spec,
            cfg.lambda,
            depth,
            &ranking,
            cfg.feature_increment,
            &mut solver,
        )?;
        if let Some(t) = state.best() {
            cfg_main.warm_start = Some(t.clone());
        }
    }
    cfg_main.time_limit = (cfg.time_limit - start.elapsed().as_secs_f64()).max(1e-3);
    let mut result = solve(&model, &art, data, &cfg_main)?;
    result.timing.wall_seconds = start.elapsed().as_secs_f64();
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formulations::tests::example1;

    fn quick() -> SolveConfig {
        SolveConfig {
            time_limit: 60.0,
            exec: Exec::Sequential,
            ..SolveConfig::default()
        }
    }

    #[test]
    fn gap_formula() {
        assert_eq!(compute_gap(1.0, 1.0), 0.0);
        assert_eq!(compute_gap(2.0, 1.0), 50.0);
        assert_eq!(compute_gap(0.0, 0.0), 0.0);
        assert_eq!(compute_gap(0.0, 0.5), 100.0);
        assert!((compute_gap(0.229, 0.2) - 100.0 * 0.029 / 0.229).abs() < 1e-9);
    }

    #[test]
    fn example1_depth2_accuracy() {
        let data = example1();
        let (m, a) = build_benders_master(&data, 2, 0.0, &MetricSpec::Accuracy, None).unwrap();
        let r = solve(&m, &a, &data, &quick()).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert_eq!(r.objective, 3.0);
        assert_eq!(r.gap, 0.0);
        assert_eq!(r.cuts.conflict_static, 1);
    }

    #[test]
    fn example1_without_helpers() {
        let data = example1();
        let cfg = SolveConfig {
            enable_conflict_cuts: false,
            enable_feature_cuts: false,
            enable_warm_start: false,
            enable_node_heuristic: false,
            fractional_benders: false,
            ..quick()
        };
        let (m, a) = build_benders_master(&data, 2, 0.0, &MetricSpec::Accuracy, None).unwrap();
        let r = solve(&m, &a, &data, &cfg).unwrap();
        assert_eq!(r.objective, 3.0);
        assert!(r.cuts.benders > 0);
    }

    #[test]
    fn perfect_tree_reaches_total_weight() {
        let data = UniqueDataset::from_weighted(
            vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]],
            vec![0, 1, 1, 0],
            vec![2, 1, 3, 1],
            2,
        )
        .unwrap();
        let r = train(&data, 2, &MetricSpec::Accuracy, &quick()).unwrap();
        assert_eq!(r.objective, 7.0);
        assert_eq!(r.gap, 0.0);
        assert_eq!(r.metric_value, 1.0);
    }

    #[test]
    fn deterministic_results() {
        let data = example1();
        let (m, a) = build_benders_master(&data, 2, 0.01, &MetricSpec::f1(), None).unwrap();
        let mut r1 = solve(&m, &a, &data, &quick()).unwrap();
        let mut r2 = solve(&m, &a, &data, &quick()).unwrap();
        r1.timing = Timing::default();
        r2.timing = Timing::default();
        assert_eq!(r1, r2);
    }
}
