//! Greedy CART growth over presorted columns with integer row weights.
//!
//! Every feature keeps its own ordering of the in-bag rows (observed values
//! ascending, missing rows at the tail). A node is the same position range
//! `[lo, hi)` in every ordering, and a split stably partitions each range, so
//! children inherit sorted order without re-sorting.

use rand::seq::index;

use super::split::{MissingDirection, SplitRule};
use super::tree::{Node, NodeKind, Tree};
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Criterion {
    Variance,
    Gini,
}

#[derive(Debug, Clone)]
pub(crate) struct GrowParams {
    pub max_depth: usize,
    /// Minimum weighted row count in each child.
    pub min_node: u32,
    /// Features tried per split; `None` tries all.
    pub mtry: Option<usize>,
    pub criterion: Criterion,
    pub mia: bool,
}

/// Row orderings of each column, computed once per dataset.
#[derive(Debug, Clone)]
pub(crate) struct Presort {
    order: Vec<Vec<u32>>,
}

impl Presort {
    /// Sorts the rows of every listed column; other columns get empty orderings.
    pub fn new(columns: &[&[f64]], features: &[usize]) -> Self {
        let mut order = vec![Vec::new(); columns.len()];
        for &f in features {
            let col = columns[f];
            let mut obs: Vec<u32> = (0..col.len() as u32).filter(|&r| !col[r as usize].is_nan()).collect();
            obs.sort_by(|&a, &b| col[a as usize].total_cmp(&col[b as usize]).then(a.cmp(&b)));
            obs.extend((0..col.len() as u32).filter(|&r| col[r as usize].is_nan()));
            order[f] = obs;
        }
        Self { order }
    }
}

#[derive(Clone, Copy)]
struct Candidate {
    gain: f64,
    feature: usize,
    local: usize,
    threshold: f64,
    missing: MissingDirection,
    w_left: f64,
    s_left: f64,
}

impl Candidate {
    fn beats(&self, other: &Option<Candidate>) -> bool {
        match other {
            None => true,
            Some(o) => {
                if self.gain != o.gain {
                    return self.gain > o.gain;
                }
                let (a, b) = (self.missing.rule_index(), o.missing.rule_index());
                if a != b {
                    return a < b;
                }
                if self.feature != o.feature {
                    return self.feature < o.feature;
                }
                self.threshold < o.threshold
            }
        }
    }
}

struct Pending {
    node: usize,
    lo: usize,
    hi: usize,
    w: f64,
    s: f64,
}

pub(crate) struct Grown {
    pub tree: Tree,
    /// Leaf reached by each in-bag row; `u32::MAX` for out-of-bag rows.
    pub leaf_of: Vec<u32>,
    /// Column indices drawn as split candidates at any node, ascending.
    pub tried: Vec<usize>,
}

/// Grows one tree. `weights[r]` is the multiplicity of row `r` (0 = unused).
pub(crate) fn grow(
    columns: &[&[f64]],
    presort: &Presort,
    features: &[usize],
    target: &[f64],
    weights: &[u32],
    params: &GrowParams,
    rng: &mut Rng,
) -> Grown {
    let n = target.len();
    let mut arrs: Vec<Vec<u32>> = features
        .iter()
        .map(|&f| {
            presort.order[f]
                .iter()
                .copied()
                .filter(|&r| weights[r as usize] > 0)
                .collect()
        })
        .collect();
    let in_bag: Vec<u32> = if arrs.is_empty() {
        (0..n as u32).filter(|&r| weights[r as usize] > 0).collect()
    } else {
        Vec::new()
    };
    let mut leaf_of = vec![u32::MAX; n];
    let m = if arrs.is_empty() { in_bag.len() } else { arrs[0].len() };
    let rows_of = |arrs: &Vec<Vec<u32>>, lo: usize, hi: usize| -> Vec<u32> {
        if arrs.is_empty() {
            in_bag[lo..hi].to_vec()
        } else {
            arrs[0][lo..hi].to_vec()
        }
    };

    let (w0, s0) = {
        let rows = rows_of(&arrs, 0, m);
        rows.iter().fold((0.0, 0.0), |(w, s), &r| {
            let wr = weights[r as usize] as f64;
            (w + wr, s + wr * target[r as usize])
        })
    };
    let mut nodes = vec![Node {
        parent: None,
        depth: 0,
        n_train: w0 as u32,
        kind: NodeKind::Leaf { value: 0.0 },
    }];
    let mut stack = vec![Pending {
        node: 0,
        lo: 0,
        hi: m,
        w: w0,
        s: s0,
    }];
    let gain_scale = match params.criterion {
        Criterion::Variance => 1.0,
        Criterion::Gini => 2.0,
    };
    let min_node = params.min_node.max(1) as f64;
    let mut side = vec![false; n];
    let mut tmp: Vec<u32> = Vec::with_capacity(m);
    let mut tried_mask = vec![false; features.len()];

    while let Some(p) = stack.pop() {
        let depth = nodes[p.node].depth;
        let mean = if p.w > 0.0 { p.s / p.w } else { 0.0 };
        let rows = rows_of(&arrs, p.lo, p.hi);
        let sse: f64 = rows
            .iter()
            .map(|&r| {
                let d = target[r as usize] - mean;
                weights[r as usize] as f64 * d * d
            })
            .sum();
        let splittable = !arrs.is_empty()
            && depth < params.max_depth
            && p.w >= 2.0 * min_node
            && sse > 1e-12 * (1.0 + mean * mean) * p.w;
        let best = if splittable {
            let tried: Vec<usize> = match params.mtry {
                Some(k) if k < features.len() => {
                    let mut v = index::sample(rng, features.len(), k.max(1)).into_vec();
                    v.sort_unstable();
                    v
                }
                _ => (0..features.len()).collect(),
            };
            let mut best: Option<Candidate> = None;
            for local in tried {
                tried_mask[local] = true;
                best_split_on(
                    columns[features[local]],
                    &arrs[local][p.lo..p.hi],
                    target,
                    weights,
                    p.w,
                    p.s,
                    min_node,
                    params.mia,
                    features[local],
                    local,
                    &mut best,
                );
            }
            best.filter(|b| b.gain * gain_scale > 1e-10 * sse)
        } else {
            None
        };

        let Some(b) = best else {
            nodes[p.node].kind = NodeKind::Leaf { value: mean };
            for &r in &rows {
                leaf_of[r as usize] = p.node as u32;
            }
            continue;
        };

        let rule = SplitRule::new(b.feature, b.threshold, b.missing);
        let col = columns[b.feature];
        for &r in &arrs[b.local][p.lo..p.hi] {
            side[r as usize] = rule.goes_left(col[r as usize]);
        }
        let mut mid = p.lo;
        for arr in arrs.iter_mut() {
            tmp.clear();
            let seg = &mut arr[p.lo..p.hi];
            let mut k = 0;
            for i in 0..seg.len() {
                let r = seg[i];
                if side[r as usize] {
                    seg[k] = r;
                    k += 1;
                } else {
                    tmp.push(r);
                }
            }
            seg[k..].copy_from_slice(&tmp);
            mid = p.lo + k;
        }
        let (wl, sl) = (b.w_left, b.s_left);
        let (wr, sr) = (p.w - wl, p.s - sl);
        let left = nodes.len();
        let right = left + 1;
        for (w, _) in [(wl, sl), (wr, sr)] {
            nodes.push(Node {
                parent: Some(p.node),
                depth: depth + 1,
                n_train: w.round() as u32,
                kind: NodeKind::Leaf { value: 0.0 },
            });
        }
        nodes[p.node].kind = NodeKind::Split {
            rule,
            left,
            right,
            gain: b.gain * gain_scale,
        };
        stack.push(Pending {
            node: right,
            lo: mid,
            hi: p.hi,
            w: wr,
            s: sr,
        });
        stack.push(Pending {
            node: left,
            lo: p.lo,
            hi: mid,
            w: wl,
            s: sl,
        });
    }
    Grown {
        tree: Tree { nodes },
        leaf_of,
        tried: features
            .iter()
            .zip(&tried_mask)
            .filter(|(_, &t)| t)
            .map(|(&f, _)| f)
            .collect(),
    }
}

#[allow(clippy::too_many_arguments)]
#[inline]
fn best_split_on(
    col: &[f64],
    seg: &[u32],
    target: &[f64],
    weights: &[u32],
    w_total: f64,
    s_total: f64,
    min_node: f64,
    mia: bool,
    feature: usize,
    local: usize,
    best: &mut Option<Candidate>,
) {
    let base = s_total * s_total / w_total;
    let mut obs_end = seg.len();
    let (mut wm, mut sm) = (0.0, 0.0);
    while obs_end > 0 && col[seg[obs_end - 1] as usize].is_nan() {
        let r = seg[obs_end - 1] as usize;
        let w = weights[r] as f64;
        wm += w;
        sm += w * target[r];
        obs_end -= 1;
    }
    let wo = w_total - wm;
    let mut consider = |wl: f64, sl: f64, threshold: f64, missing: MissingDirection| {
        let wr = w_total - wl;
        if wl < min_node || wr < min_node {
            return;
        }
        let sr = s_total - sl;
        let gain = sl * sl / wl + sr * sr / wr - base;
        let c = Candidate {
            gain,
            feature,
            local,
            threshold,
            missing,
            w_left: wl,
            s_left: sl,
        };
        if c.beats(best) {
            *best = Some(c);
        }
    };
    let has_missing = wm > 0.0;
    if has_missing && !mia {
        // Non-MIA growth never sees missing predictors; refuse to split on them.
        return;
    }
    if has_missing && wo > 0.0 {
        consider(wm, sm, 0.0, MissingDirection::MissingOnlyLeft);
    }
    if obs_end < 2 {
        return;
    }
    let (mut wl, mut sl) = (0.0, 0.0);
    for p in 0..obs_end - 1 {
        let r = seg[p] as usize;
        let w = weights[r] as f64;
        wl += w;
        sl += w * target[r];
        let v = col[r];
        let vn = col[seg[p + 1] as usize];
        if vn <= v {
            continue;
        }
        let mid = v + 0.5 * (vn - v);
        let threshold = if mid < vn { mid } else { v };
        if has_missing {
            consider(wl + wm, sl + sm, threshold, MissingDirection::Left);
            consider(wl, sl, threshold, MissingDirection::Right);
        } else {
            consider(wl, sl, threshold, MissingDirection::Left);
        }
    }
}
