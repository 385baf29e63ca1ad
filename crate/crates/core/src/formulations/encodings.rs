//! Exact linear encodings of the metric objectives.
//!
//! Integer counts such as TP are written in binary, each product of a
//! bounded score with a bit is replaced by a McCormick variable, and each
//! product of two bits by an AND variable. All encodings are exact at
//! integral `g`.

use serde::{Deserialize, Serialize};

use crate::dataset::UniqueDataset;
use crate::error::SolveError;
use crate::metrics::{mcc_parts, Evaluation, MetricSpec};
use crate::milp::{Model, Sense, VarType};

/// Auxiliary columns introduced by an objective encoding.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Encoding {
    Linear,
    FBeta {
        f: usize,
        delta: Vec<usize>,
        gamma: Vec<usize>,
    },
    Mcc {
        mcc2: usize,
        u: Vec<usize>,
        v: Vec<usize>,
        chi: Vec<Vec<usize>>,
        theta: Vec<Vec<usize>>,
        a_bits: Vec<usize>,
        pi: Vec<Vec<usize>>,
        a_negative: usize,
    },
    GMean {
        g2: usize,
        tp_bits: Vec<usize>,
        tn_bits: Vec<usize>,
        eta: Vec<Vec<usize>>,
    },
    FowlkesMallows {
        fm2: usize,
        tp_bits: Vec<usize>,
        tn_bits: Vec<usize>,
        delta_pos: Vec<usize>,
        delta_neg: Vec<usize>,
        xi: Vec<Vec<usize>>,
    },
    IoU {
        iou: usize,
        tn_bits: Vec<usize>,
        delta_neg: Vec<usize>,
    },
    Dor {
        dor: usize,
        bound: f64,
        tp_bits: Vec<usize>,
        tn_bits: Vec<usize>,
        delta_pos: Vec<usize>,
        delta_neg: Vec<usize>,
        eta: Vec<Vec<usize>>,
        zeta: Vec<Vec<usize>>,
    },
}

/// Smallest `l` with `2^l ≥ n` (0 for `n ≤ 1`).
pub fn ceil_log2(n: u64) -> u32 {
    if n <= 1 {
        0
    } else {
        64 - (n - 1).leading_zeros()
    }
}

/// `⌊log2 n⌋`, with 0 for `n = 0`.
pub fn floor_log2(n: u64) -> u32 {
    if n == 0 {
        0
    } else {
        63 - n.leading_zeros()
    }
}

fn pow2(k: usize) -> f64 {
    (1u64 << k) as f64
}

fn bits(model: &mut Model, name: &str, top: u32) -> Vec<usize> {
    (0..=top).map(|k| model.add_binary(format!("{name}[{k}]"))).collect()
}

fn cont(model: &mut Model, name: String, ub: f64) -> usize {
    model.add_continuous(name, 0.0, ub).expect("finite non-negative bounds")
}

fn row(model: &mut Model, name: String, terms: Vec<(usize, f64)>, sense: Sense, rhs: f64) {
    model.add_row(name, terms, sense, rhs).expect("encoding columns exist");
}

/// `z = x ∧ y` via `z ≤ x`, `z ≤ y`, `z ≥ x + y − 1`.
fn and_var(model: &mut Model, name: String, x: usize, y: usize, binary: bool) -> usize {
    let z = if binary {
        model.add_binary(name.clone())
    } else {
        cont(model, name.clone(), 1.0)
    };
    row(model, format!("{name}_x"), vec![(z, 1.0), (x, -1.0)], Sense::Le, 0.0);
    row(model, format!("{name}_y"), vec![(z, 1.0), (y, -1.0)], Sense::Le, 0.0);
    row(model, format!("{name}_xy"), vec![(z, 1.0), (x, -1.0), (y, -1.0)], Sense::Ge, -1.0);
    z
}

/// `d = s·bit` for `s ∈ [0, ub]` via `d ≤ ub·bit`, `d ≤ s`, `d ≥ s − ub(1 − bit)`.
fn mccormick(model: &mut Model, name: String, s: usize, ub: f64, bit: usize) -> usize {
    let d = cont(model, name.clone(), ub);
    row(model, format!("{name}_b"), vec![(d, 1.0), (bit, -ub)], Sense::Le, 0.0);
    row(model, format!("{name}_s"), vec![(d, 1.0), (s, -1.0)], Sense::Le, 0.0);
    row(model, format!("{name}_sb"), vec![(d, 1.0), (s, -1.0), (bit, -ub)], Sense::Ge, -ub);
    d
}

fn count_terms(data: &UniqueDataset, g: &[usize], class: usize, sign: f64) -> Vec<(usize, f64)> {
    (0..data.len())
        .filter(|&i| data.label(i) == class)
        .map(|i| (g[i], sign * data.weight(i) as f64))
        .collect()
}

fn expand(bits: &[usize]) -> Vec<(usize, f64)> {
    bits.iter().enumerate().map(|(k, &v)| (v, pow2(k))).collect()
}

/// `Σ 2^k bit_k = count(class)`.
fn link_bits(model: &mut Model, name: &str, bits: &[usize], data: &UniqueDataset, g: &[usize], class: usize) {
    let mut terms = expand(bits);
    terms.extend(count_terms(data, g, class, -1.0));
    row(model, format!("{name}_link"), terms, Sense::Eq, 0.0);
}

fn fbeta_rows(model: &mut Model, data: &UniqueDataset, g: &[usize], beta: f64) -> Encoding {
    let (n_plus, n_minus) = data.positives_negatives();
    let l = ceil_log2(data.total_weight());
    let f = cont(model, "F".into(), 1.0);
    let delta = bits(model, "delta", l);
    // n⁻ + TP − TN = Σ 2^k δ_k
    let mut terms = expand(&delta);
    terms.extend(count_terms(data, g, 1, -1.0));
    terms.extend(count_terms(data, g, 0, 1.0));
    row(model, "fbeta_bits".into(), terms, Sense::Eq, n_minus as f64);
    let gamma: Vec<usize> = delta
        .iter()
        .enumerate()
        .map(|(k, &d)| mccormick(model, format!("gamma[{k}]"), f, 1.0, d))
        .collect();
    // F·β²n⁺ + Σ 2^k γ_k ≤ (1+β²)·TP
    let b2 = beta * beta;
    let mut terms = vec![(f, b2 * n_plus as f64)];
    terms.extend(expand(&gamma));
    terms.extend(count_terms(data, g, 1, -(1.0 + b2)));
    row(model, "fbeta".into(), terms, Sense::Le, 0.0);
    Encoding::FBeta { f, delta, gamma }
}

fn mcc_rows(model: &mut Model, data: &UniqueDataset, g: &[usize]) -> Encoding {
    let (np, nm) = data.positives_negatives();
    let l = ceil_log2(data.total_weight());
    let t = ceil_log2(np * nm);
    let npnm = (np * nm) as f64;
    let mcc2 = cont(model, "MCC2".into(), 1.0);
    let u = bits(model, "u", l);
    let v = bits(model, "v", l);
    // U = TP − TN + n⁻,  V = TN − TP + n⁺
    let mut terms = expand(&u);
    terms.extend(count_terms(data, g, 1, -1.0));
    terms.extend(count_terms(data, g, 0, 1.0));
    row(model, "mcc_u".into(), terms, Sense::Eq, nm as f64);
    let mut terms = expand(&v);
    terms.extend(count_terms(data, g, 1, 1.0));
    terms.extend(count_terms(data, g, 0, -1.0));
    row(model, "mcc_v".into(), terms, Sense::Eq, np as f64);

    let chi: Vec<Vec<usize>> = (0..u.len())
        .map(|r| (0..v.len()).map(|s| and_var(model, format!("chi[{r},{s}]"), u[r], v[s], true)).collect())
        .collect();
    let theta: Vec<Vec<usize>> = (0..u.len())
        .map(|r| (0..v.len()).map(|s| mccormick(model, format!("theta[{r},{s}]"), mcc2, 1.0, chi[r][s])).collect())
        .collect();

    // A = n⁺TN + n⁻TP − n⁺n⁻, written in binary unless ν flags A < 0.
    let a_bits = bits(model, "abits", t);
    let a_negative = model.add_binary("a_negative");
    let mut a_minus_bits: Vec<(usize, f64)> = count_terms(data, g, 0, np as f64);
    a_minus_bits.extend(count_terms(data, g, 1, nm as f64));
    a_minus_bits.extend(expand(&a_bits).into_iter().map(|(j, c)| (j, -c)));
    // A − Σ2^t a_t − n⁺n⁻ν ≤ n⁺n⁻ (constant moved) and A − Σ2^t a_t + n⁺n⁻ν ≥ n⁺n⁻
    let mut lo = a_minus_bits.clone();
    lo.push((a_negative, -npnm));
    row(model, "mcc_abits_lo".into(), lo, Sense::Le, npnm);
    let mut hi = a_minus_bits;
    hi.push((a_negative, npnm));
    row(model, "mcc_abits_hi".into(), hi, Sense::Ge, npnm);
    row(model, "mcc_nonneg".into(), vec![(mcc2, 1.0), (a_negative, 1.0)], Sense::Le, 1.0);
    let mut terms = vec![(mcc2, 1.0)];
    terms.extend(expand(&a_bits).into_iter().map(|(j, c)| (j, -c)));
    row(model, "mcc_zero_a".into(), terms, Sense::Le, 0.0);

    let pi: Vec<Vec<usize>> = (0..a_bits.len())
        .map(|r| {
            (0..a_bits.len())
                .map(|s| and_var(model, format!("pi[{r},{s}]"), a_bits[r], a_bits[s], true))
                .collect()
        })
        .collect();
    // n⁺n⁻ Σ 2^{r+s} θ_rs ≤ Σ 2^{t+t'} π_tt'
    let mut terms = Vec::new();
    for (r, row_t) in theta.iter().enumerate() {
        for (s, &th) in row_t.iter().enumerate() {
            terms.push((th, npnm * pow2(r + s)));
        }
    }
    for (r, row_p) in pi.iter().enumerate() {
        for (s, &p) in row_p.iter().enumerate() {
            terms.push((p, -pow2(r + s)));
        }
    }
    row(model, "mcc".into(), terms, Sense::Le, 0.0);
    Encoding::Mcc {
        mcc2,
        u,
        v,
        chi,
        theta,
        a_bits,
        pi,
        a_negative,
    }
}

fn tp_tn_bits(model: &mut Model, data: &UniqueDataset, g: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let (np, nm) = data.positives_negatives();
    let tp = bits(model, "tp_bits", floor_log2(np));
    let tn = bits(model, "tn_bits", floor_log2(nm));
    link_bits(model, "tp_bits", &tp, data, g, 1);
    link_bits(model, "tn_bits", &tn, data, g, 0);
    (tp, tn)
}

fn and_grid(model: &mut Model, name: &str, a: &[usize], b: &[usize]) -> Vec<Vec<usize>> {
    (0..a.len())
        .map(|r| (0..b.len()).map(|s| and_var(model, format!("{name}[{r},{s}]"), a[r], b[s], false)).collect())
        .collect()
}

fn grid_terms(grid: &[Vec<usize>], scale: f64) -> Vec<(usize, f64)> {
    let mut out = Vec::new();
    for (r, row) in grid.iter().enumerate() {
        for (s, &v) in row.iter().enumerate() {
            out.push((v, scale * pow2(r + s)));
        }
    }
    out
}

fn gmean_rows(model: &mut Model, data: &UniqueDataset, g: &[usize]) -> Encoding {
    let (np, nm) = data.positives_negatives();
    let g2 = cont(model, "G2".into(), 1.0);
    let (tp_bits, tn_bits) = tp_tn_bits(model, data, g);
    let eta = and_grid(model, "eta", &tp_bits, &tn_bits);
    let mut terms = vec![(g2, (np * nm) as f64)];
    terms.extend(grid_terms(&eta, -1.0));
    row(model, "gmean".into(), terms, Sense::Le, 0.0);
    Encoding::GMean {
        g2,
        tp_bits,
        tn_bits,
        eta,
    }
}

fn fm_rows(model: &mut Model, data: &UniqueDataset, g: &[usize]) -> Encoding {
    let (np, nm) = data.positives_negatives();
    let fm2 = cont(model, "FM2".into(), 1.0);
    let (tp_bits, tn_bits) = tp_tn_bits(model, data, g);
    let delta_pos: Vec<usize> = tp_bits
        .iter()
        .enumerate()
        .map(|(k, &b)| mccormick(model, format!("delta_pos[{k}]"), fm2, 1.0, b))
        .collect();
    let delta_neg: Vec<usize> = tn_bits
        .iter()
        .enumerate()
        .map(|(k, &b)| mccormick(model, format!("delta_neg[{k}]"), fm2, 1.0, b))
        .collect();
    let xi = and_grid(model, "xi", &tp_bits, &tp_bits);
    // FM2·n⁺(TP + n⁻ − TN) ≤ TP²
    let mut terms = vec![(fm2, (np * nm) as f64)];
    terms.extend(expand(&delta_pos).into_iter().map(|(j, c)| (j, np as f64 * c)));
    terms.extend(expand(&delta_neg).into_iter().map(|(j, c)| (j, -(np as f64) * c)));
    terms.extend(grid_terms(&xi, -1.0));
    row(model, "fm".into(), terms, Sense::Le, 0.0);
    let mut terms = vec![(fm2, 1.0)];
    terms.extend(count_terms(data, g, 1, -1.0));
    row(model, "fm_zero_tp".into(), terms, Sense::Le, 0.0);
    Encoding::FowlkesMallows {
        fm2,
        tp_bits,
        tn_bits,
        delta_pos,
        delta_neg,
        xi,
    }
}

fn iou_rows(model: &mut Model, data: &UniqueDataset, g: &[usize]) -> Encoding {
    let (_, nm) = data.positives_negatives();
    let iou = cont(model, "IoU".into(), 1.0);
    let tn_bits = bits(model, "tn_bits", floor_log2(nm));
    link_bits(model, "tn_bits", &tn_bits, data, g, 0);
    let delta_neg: Vec<usize> = tn_bits
        .iter()
        .enumerate()
        .map(|(k, &b)| mccormick(model, format!("delta_neg[{k}]"), iou, 1.0, b))
        .collect();
    // IoU·(|I| − TN) ≤ TP
    let mut terms = vec![(iou, data.total_weight() as f64)];
    terms.extend(expand(&delta_neg).into_iter().map(|(j, c)| (j, -c)));
    terms.extend(count_terms(data, g, 1, -1.0));
    row(model, "iou".into(), terms, Sense::Le, 0.0);
    Encoding::IoU {
        iou,
        tn_bits,
        delta_neg,
    }
}

fn dor_rows(model: &mut Model, data: &UniqueDataset, g: &[usize], bound: f64) -> Encoding {
    let (np, nm) = data.positives_negatives();
    let dor = cont(model, "DOR".into(), bound);
    let (tp_bits, tn_bits) = tp_tn_bits(model, data, g);
    let delta_pos: Vec<usize> = tp_bits
        .iter()
        .enumerate()
        .map(|(k, &b)| mccormick(model, format!("delta_pos[{k}]"), dor, bound, b))
        .collect();
    let delta_neg: Vec<usize> = tn_bits
        .iter()
        .enumerate()
        .map(|(k, &b)| mccormick(model, format!("delta_neg[{k}]"), dor, bound, b))
        .collect();
    let eta = and_grid(model, "eta", &tp_bits, &tn_bits);
    let zeta: Vec<Vec<usize>> = eta
        .iter()
        .enumerate()
        .map(|(r, row_e)| {
            row_e
                .iter()
                .enumerate()
                .map(|(s, &e)| mccormick(model, format!("zeta[{r},{s}]"), dor, bound, e))
                .collect()
        })
        .collect();
    // DOR·FP·FN ≤ TP·TN
    let mut terms = vec![(dor, (np * nm) as f64)];
    terms.extend(expand(&delta_neg).into_iter().map(|(j, c)| (j, -(np as f64) * c)));
    terms.extend(expand(&delta_pos).into_iter().map(|(j, c)| (j, -(nm as f64) * c)));
    terms.extend(grid_terms(&zeta, 1.0));
    terms.extend(grid_terms(&eta, -1.0));
    row(model, "dor".into(), terms, Sense::Le, 0.0);
    Encoding::Dor {
        dor,
        bound,
        tp_bits,
        tn_bits,
        delta_pos,
        delta_neg,
        eta,
        zeta,
    }
}

/// Adds the encoding of `spec` and returns it with the objective terms
/// other than the split penalty.
pub(super) fn encode(
    model: &mut Model,
    data: &UniqueDataset,
    spec: &MetricSpec,
    lambda: f64,
    g: &[usize],
) -> Result<(Encoding, Vec<(usize, f64)>), SolveError> {
    let weighted = |coef: &dyn Fn(usize) -> f64| -> Vec<(usize, f64)> {
        (0..data.len()).map(|i| (g[i], coef(i) * data.weight(i) as f64)).collect()
    };
    Ok(match spec {
        MetricSpec::Accuracy => (Encoding::Linear, weighted(&|_| 1.0 - lambda)),
        MetricSpec::BalancedAccuracy => {
            let totals = data.class_weights();
            let present = totals.iter().filter(|&&t| t > 0).count() as f64;
            (Encoding::Linear, weighted(&|i| 1.0 / (present * totals[data.label(i)] as f64)))
        }
        MetricSpec::CostSensitive { c_pos, c_neg } => (
            Encoding::Linear,
            weighted(&|i| if data.label(i) == 1 { *c_pos } else { *c_neg }),
        ),
        MetricSpec::InstanceCost { kappa } => (Encoding::Linear, weighted(&|i| kappa[i])),
        MetricSpec::FBeta { beta } => {
            let enc = fbeta_rows(model, data, g, *beta);
            let Encoding::FBeta { f, .. } = enc else { unreachable!() };
            (enc, vec![(f, 1.0)])
        }
        MetricSpec::Combination { alpha1, alpha2, beta } => {
            let enc = fbeta_rows(model, data, g, *beta);
            let Encoding::FBeta { f, .. } = enc else { unreachable!() };
            let total = data.total_weight() as f64;
            let mut obj = vec![(f, *alpha1)];
            obj.extend(weighted(&|_| alpha2 / total));
            (enc, obj)
        }
        MetricSpec::Mcc => {
            let enc = mcc_rows(model, data, g);
            let Encoding::Mcc { mcc2, .. } = enc else { unreachable!() };
            (enc, vec![(mcc2, 1.0)])
        }
        MetricSpec::GMean => {
            let enc = gmean_rows(model, data, g);
            let Encoding::GMean { g2, .. } = enc else { unreachable!() };
            (enc, vec![(g2, 1.0)])
        }
        MetricSpec::FowlkesMallows => {
            let enc = fm_rows(model, data, g);
            let Encoding::FowlkesMallows { fm2, .. } = enc else { unreachable!() };
            (enc, vec![(fm2, 1.0)])
        }
        MetricSpec::IoU => {
            let enc = iou_rows(model, data, g);
            let Encoding::IoU { iou, .. } = enc else { unreachable!() };
            (enc, vec![(iou, 1.0)])
        }
        MetricSpec::Dor { bound } => {
            let enc = dor_rows(model, data, g, *bound);
            let Encoding::Dor { dor, .. } = enc else { unreachable!() };
            (enc, vec![(dor, 1.0)])
        }
    })
}

fn set_bits(x: &mut [f64], bits: &[usize], value: u64) {
    for (k, &b) in bits.iter().enumerate() {
        x[b] = ((value >> k) & 1) as f64;
    }
}

fn set_and_grid(x: &mut [f64], grid: &[Vec<usize>], a: &[usize], b: &[usize]) {
    for (r, row) in grid.iter().enumerate() {
        for (s, &v) in row.iter().enumerate() {
            x[v] = x[a[r]] * x[b[s]];
        }
    }
}

fn set_products(x: &mut [f64], out: &[usize], score: f64, bits: &[usize]) {
    for (&d, &b) in out.iter().zip(bits) {
        x[d] = score * x[b];
    }
}

impl Encoding {
    /// Column holding the encoded score, if any.
    pub fn score_var(&self) -> Option<usize> {
        match self {
            Encoding::Linear => None,
            Encoding::FBeta { f, .. } => Some(*f),
            Encoding::Mcc { mcc2, .. } => Some(*mcc2),
            Encoding::GMean { g2, .. } => Some(*g2),
            Encoding::FowlkesMallows { fm2, .. } => Some(*fm2),
            Encoding::IoU { iou, .. } => Some(*iou),
            Encoding::Dor { dor, .. } => Some(*dor),
        }
    }

    /// Integer columns introduced by the encoding.
    pub fn binary_count(&self, model: &Model, first_aux: usize) -> usize {
        model.vars()[first_aux..]
            .iter()
            .filter(|v| v.vtype != VarType::Continuous)
            .count()
    }

    /// Value the score column takes when the tree has counts `c`.
    pub fn score_value(&self, spec: &MetricSpec, c: &crate::metrics::ConfusionCounts) -> Option<f64> {
        Some(match self {
            Encoding::Linear => return None,
            Encoding::FBeta { .. } => {
                let beta = match spec {
                    MetricSpec::FBeta { beta } | MetricSpec::Combination { beta, .. } => *beta,
                    _ => 1.0,
                };
                crate::metrics::f_beta(c, beta)
            }
            Encoding::Mcc { .. } => {
                let (a, uu, vv) = mcc_parts(c);
                if a > 0 && uu * vv > 0 {
                    (a * a) as f64 / ((c.n_plus() * c.n_minus()) as f64 * (uu * vv) as f64)
                } else {
                    0.0
                }
            }
            Encoding::GMean { .. } => crate::metrics::gmean_sq(c),
            Encoding::FowlkesMallows { .. } => crate::metrics::fm_sq(c),
            Encoding::IoU { .. } => crate::metrics::iou(c),
            Encoding::Dor { bound, .. } => crate::metrics::dor(c, *bound),
        })
    }

    /// Sets the auxiliary columns to the values implied by `eval`.
    pub(super) fn fill(&self, x: &mut [f64], eval: &Evaluation, spec: &MetricSpec) {
        let Some(c) = eval.counts() else {
            return;
        };
        let (np, nm) = (c.n_plus(), c.n_minus());
        match self {
            Encoding::Linear => {}
            Encoding::FBeta { f, delta, gamma } => {
                let beta = match spec {
                    MetricSpec::FBeta { beta } | MetricSpec::Combination { beta, .. } => *beta,
                    _ => 1.0,
                };
                let score = crate::metrics::f_beta(&c, beta);
                x[*f] = score;
                set_bits(x, delta, nm + c.tp - c.tn);
                set_products(x, gamma, score, delta);
            }
            Encoding::Mcc {
                mcc2,
                u,
                v,
                chi,
                theta,
                a_bits,
                pi,
                a_negative,
            } => {
                let (a, uu, vv) = mcc_parts(&c);
                let score = if a > 0 && uu * vv > 0 {
                    (a * a) as f64 / ((np * nm) as f64 * (uu * vv) as f64)
                } else {
                    0.0
                };
                x[*mcc2] = score;
                set_bits(x, u, uu as u64);
                set_bits(x, v, vv as u64);
                set_and_grid(x, chi, u, v);
                for (r, row) in theta.iter().enumerate() {
                    for (s, &t) in row.iter().enumerate() {
                        x[t] = score * x[chi[r][s]];
                    }
                }
                x[*a_negative] = if a < 0 { 1.0 } else { 0.0 };
                set_bits(x, a_bits, a.max(0) as u64);
                set_and_grid(x, pi, a_bits, a_bits);
            }
            Encoding::GMean {
                g2,
                tp_bits,
                tn_bits,
                eta,
            } => {
                x[*g2] = crate::metrics::gmean_sq(&c);
                set_bits(x, tp_bits, c.tp);
                set_bits(x, tn_bits, c.tn);
                set_and_grid(x, eta, tp_bits, tn_bits);
            }
            Encoding::FowlkesMallows {
                fm2,
                tp_bits,
                tn_bits,
                delta_pos,
                delta_neg,
                xi,
            } => {
                let score = crate::metrics::fm_sq(&c);
                x[*fm2] = score;
                set_bits(x, tp_bits, c.tp);
                set_bits(x, tn_bits, c.tn);
                set_products(x, delta_pos, score, tp_bits);
                set_products(x, delta_neg, score, tn_bits);
                set_and_grid(x, xi, tp_bits, tp_bits);
            }
            Encoding::IoU {
                iou,
                tn_bits,
                delta_neg,
            } => {
                let score = crate::metrics::iou(&c);
                x[*iou] = score;
                set_bits(x, tn_bits, c.tn);
                set_products(x, delta_neg, score, tn_bits);
            }
            Encoding::Dor {
                dor,
                bound,
                tp_bits,
                tn_bits,
                delta_pos,
                delta_neg,
                eta,
                zeta,
            } => {
                let score = crate::metrics::dor(&c, *bound);
                x[*dor] = score;
                set_bits(x, tp_bits, c.tp);
                set_bits(x, tn_bits, c.tn);
                set_products(x, delta_pos, score, tp_bits);
                set_products(x, delta_neg, score, tn_bits);
                set_and_grid(x, eta, tp_bits, tn_bits);
                for (r, row) in zeta.iter().enumerate() {
                    for (s, &z) in row.iter().enumerate() {
                        x[z] = score * x[eta[r][s]];
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{reduce_unique, BinarizedDataset};
    use crate::formulations::build_benders_master;

    fn dataset(n_plus: usize, n_minus: usize) -> UniqueDataset {
        let n = n_plus + n_minus;
        let x = (0..n).map(|i| (0..8).map(|b| ((i >> b) & 1) as u8).collect()).collect();
        let y = (0..n).map(|i| usize::from(i < n_plus)).collect();
        reduce_unique(&BinarizedDataset::from_matrix(x, y).unwrap())
    }

    #[test]
    fn log_helpers() {
        assert_eq!(ceil_log2(106), 7);
        assert_eq!(ceil_log2(1), 0);
        assert_eq!(ceil_log2(16), 4);
        assert_eq!(ceil_log2(64), 6);
        assert_eq!(floor_log2(8), 3);
        assert_eq!(floor_log2(7), 2);
    }

    #[test]
    fn fbeta_sizes() {
        let data = dataset(50, 56);
        let (m, a) = build_benders_master(&data, 1, 0.0, &MetricSpec::f1(), None).unwrap();
        let Encoding::FBeta { delta, gamma, .. } = &a.encoding else { panic!() };
        assert_eq!((delta.len(), gamma.len()), (8, 8));
        let mc = m.constraints().iter().filter(|c| c.name.starts_with("gamma[")).count();
        assert_eq!(mc, 24);
    }

    #[test]
    fn linear_specs_add_nothing() {
        let data = dataset(3, 4);
        let (m0, _) = build_benders_master(&data, 2, 0.0, &MetricSpec::Accuracy, None).unwrap();
        let (m1, _) = build_benders_master(&data, 2, 0.0, &MetricSpec::BalancedAccuracy, None).unwrap();
        assert_eq!(m0.n_vars(), m1.n_vars());
        assert_eq!(m0.n_constraints(), m1.n_constraints());
    }

    #[test]
    fn mcc_binary_count() {
        let data = dataset(8, 8);
        let (m, a) = build_benders_master(&data, 1, 0.0, &MetricSpec::Mcc, None).unwrap();
        let Encoding::Mcc { u, a_bits, .. } = &a.encoding else { panic!() };
        assert_eq!((u.len(), a_bits.len()), (5, 7));
        let first_aux = a.g.last().unwrap() + 1;
        // 2(L+1) + (L+1)² + (T+1) + (T+1)² with L = 4, T = 6, plus the sign indicator.
        assert_eq!(a.encoding.binary_count(&m, first_aux), 10 + 25 + 7 + 49 + 1);
    }

    #[test]
    fn mccormick_grid_is_exact() {
        for bit in [0.0f64, 1.0] {
            for step in 0..=20 {
                let f = step as f64 / 20.0;
                // Feasible interval for γ under the three rows.
                let hi = bit.min(f);
                let lo = (f + bit - 1.0).max(0.0);
                assert!((hi - f * bit).abs() < 1e-15 && (lo - f * bit).abs() < 1e-15);
            }
        }
    }
}
