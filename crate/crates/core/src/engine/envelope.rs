//! Planes over the `(TP, TN)` grid lying above the encoded score.
//!
//! A nonlinear score column `s` only ever equals `f(TP, TN)` at integer
//! counts, so any plane with `a + b·tp + c·tn ≥ f(tp, tn)` on the whole grid
//! gives a valid row `s - b·TP - c·TN ≤ a`. At an LP point we look for the
//! lowest such plane through the concave envelope of `f`, found from the
//! duals of a three-row LP over convex weights on the grid points.

use std::collections::HashSet;

use crate::dataset::UniqueDataset;
use crate::formulations::Artifacts;
use crate::metrics::ConfusionCounts;
use crate::milp::{Constraint, DualSimplex, LpStatus, Model, ObjSense, Sense};

/// Grids larger than this are not separated.
pub const MAX_GRID_POINTS: usize = 4096;
/// Grids up to this size are cheap enough to separate at every node.
const CHEAP_GRID_POINTS: usize = 256;
/// Larger grids stop separating after this many fruitless attempts in a row.
const MAX_MISSES: u32 = 3;

pub(crate) struct ScoreEnvelope {
    score: usize,
    pos_terms: Vec<(usize, f64)>,
    neg_terms: Vec<(usize, f64)>,
    n_plus: f64,
    n_minus: f64,
    /// `(tp, tn, f)` for every grid point.
    grid: Vec<(f64, f64, f64)>,
    base: Model,
    seen: HashSet<[i64; 3]>,
    misses: u32,
}

impl ScoreEnvelope {
    pub fn new(art: &Artifacts, data: &UniqueDataset) -> Option<Self> {
        let score = art.encoding.score_var()?;
        if data.n_classes() != 2 {
            return None;
        }
        let (np, nm) = data.positives_negatives();
        if ((np + 1) * (nm + 1)) as usize > MAX_GRID_POINTS {
            return None;
        }
        let mut grid = Vec::new();
        for tp in 0..=np {
            for tn in 0..=nm {
                let f = art.encoding.score_value(&art.spec, &ConfusionCounts::new(tp, tn, np, nm))?;
                grid.push((tp as f64, tn as f64, f));
            }
        }
        let mut base = Model::new("envelope");
        let mut objective = Vec::with_capacity(grid.len());
        for (p, &(_, _, f)) in grid.iter().enumerate() {
            let mu = base.add_continuous(format!("mu{p}"), 0.0, 1.0).ok()?;
            objective.push((mu, f));
        }
        base.set_objective(ObjSense::Maximize, objective).ok()?;
        let mut pos_terms = Vec::new();
        let mut neg_terms = Vec::new();
        for (i, &g) in art.g.iter().enumerate() {
            let w = data.weight(i) as f64;
            if data.label(i) == 1 {
                pos_terms.push((g, w));
            } else {
                neg_terms.push((g, w));
            }
        }
        Some(Self {
            score,
            pos_terms,
            neg_terms,
            n_plus: np as f64,
            n_minus: nm as f64,
            grid,
            base,
            seen: HashSet::new(),
            misses: 0,
        })
    }

    /// Whether separation is worth trying at this node.
    pub fn active(&self, node: u64) -> bool {
        self.grid.len() <= CHEAP_GRID_POINTS || (self.misses < MAX_MISSES && node % 10 == 0)
    }

    fn count(terms: &[(usize, f64)], x: &[f64]) -> f64 {
        terms.iter().map(|&(j, w)| w * x[j]).sum()
    }

    /// Smallest intercept that keeps the plane with slopes `(b, c)` above `f`.
    fn intercept(&self, b: f64, c: f64) -> f64 {
        self.grid
            .iter()
            .map(|&(tp, tn, f)| f - b * tp - c * tn)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Returns `(a, b, c)` when the plane cuts off `x`.
    pub fn separate(&mut self, x: &[f64]) -> Option<(f64, f64, f64)> {
        let plane = self.find_plane(x);
        self.misses = if plane.is_some() { 0 } else { self.misses + 1 };
        plane
    }

    fn find_plane(&mut self, x: &[f64]) -> Option<(f64, f64, f64)> {
        let tp = Self::count(&self.pos_terms, x).clamp(0.0, self.n_plus);
        let tn = Self::count(&self.neg_terms, x).clamp(0.0, self.n_minus);
        let s = x[self.score];
        let mut model = self.base.clone();
        let all: Vec<(usize, f64)> = (0..self.grid.len()).map(|p| (p, 1.0)).collect();
        let tps = self.grid.iter().enumerate().map(|(p, g)| (p, g.0)).collect();
        let tns = self.grid.iter().enumerate().map(|(p, g)| (p, g.1)).collect();
        model.add_row("weights", all, Sense::Eq, 1.0).ok()?;
        model.add_row("tp", tps, Sense::Eq, tp).ok()?;
        model.add_row("tn", tns, Sense::Eq, tn).ok()?;
        let mut lp = DualSimplex::new(&model).ok()?;
        if lp.solve(None).status != LpStatus::Optimal {
            return None;
        }
        let y = lp.row_duals();
        let (b, c) = (y[1], y[2]);
        let a = self.intercept(b, c) + 1e-9;
        if s <= a + b * tp + c * tn + 1e-6 {
            return None;
        }
        let key = [(a * 1e8).round() as i64, (b * 1e8).round() as i64, (c * 1e8).round() as i64];
        self.seen.insert(key).then_some((a, b, c))
    }

    pub fn row(&self, (a, b, c): (f64, f64, f64), name: String) -> Constraint {
        let mut terms = vec![(self.score, 1.0)];
        terms.extend(self.pos_terms.iter().map(|&(j, w)| (j, -b * w)));
        terms.extend(self.neg_terms.iter().map(|&(j, w)| (j, -c * w)));
        Constraint::new(name, terms, Sense::Le, a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formulations::build_benders_master;
    use crate::metrics::MetricSpec;

    fn data() -> UniqueDataset {
        UniqueDataset::from_weighted(
            vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]],
            vec![1, 0, 1, 0],
            vec![2, 1, 1, 3],
            2,
        )
        .unwrap()
    }

    #[test]
    fn planes_stay_above_every_grid_point_and_cut_the_all_correct_point() {
        let d = data();
        for spec in [MetricSpec::Mcc, MetricSpec::f1(), MetricSpec::GMean, MetricSpec::FowlkesMallows] {
            let (m, art) = build_benders_master(&d, 1, 0.0, &spec, None).unwrap();
            let mut env = ScoreEnvelope::new(&art, &d).unwrap();
            // Half of every instance correct, score claimed perfect.
            let mut x = vec![0.0; m.n_vars()];
            for &g in &art.g {
                x[g] = 0.5;
            }
            x[art.encoding.score_var().unwrap()] = 1.0;
            let (a, b, c) = env.separate(&x).expect("a half-correct point cannot score 1");
            for &(tp, tn, f) in &env.grid {
                assert!(a + b * tp + c * tn >= f - 1e-12, "{}", spec.name());
            }
            let row = env.row((a, b, c), "e".into());
            assert!(row.violation(&x) > 1e-6);
            // The same plane is not offered twice.
            assert!(env.separate(&x).is_none());
        }
    }

    #[test]
    fn linear_objectives_have_no_envelope() {
        let d = data();
        let (_, art) = build_benders_master(&d, 1, 0.0, &MetricSpec::Accuracy, None).unwrap();
        assert!(ScoreEnvelope::new(&art, &d).is_none());
    }
}
