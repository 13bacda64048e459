//! Metropolis-Hastings tree moves for one tree of the ensemble, with leaf
//! values integrated out (unit error variance, normal leaf prior).

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use super::BartParams;
use crate::rng::Rng;
use crate::trees::{MissingDirection, Node, NodeKind, SplitRule, Tree};

const NONE: u32 = u32::MAX;

#[derive(Debug, Clone)]
struct SNode {
    parent: u32,
    left: u32,
    right: u32,
    depth: u32,
    rule: SplitRule,
    mu: f64,
    live: bool,
}

impl SNode {
    fn is_leaf(&self) -> bool {
        self.left == NONE
    }
}

/// Predictor columns plus the split-value grid the rule prior draws from.
pub(crate) struct Design<'a> {
    pub columns: Vec<&'a [f64]>,
    /// Candidate thresholds per predictor: unique observed values except the largest.
    pub cuts: Vec<Vec<f64>>,
    pub has_missing: Vec<bool>,
    pub mia: bool,
}

impl<'a> Design<'a> {
    pub fn new(columns: Vec<&'a [f64]>, mia: bool) -> Self {
        let mut cuts = Vec::with_capacity(columns.len());
        let mut has_missing = Vec::with_capacity(columns.len());
        for c in &columns {
            let mut v: Vec<f64> = c.iter().copied().filter(|x| !x.is_nan()).collect();
            has_missing.push(v.len() < c.len());
            v.sort_by(|a, b| a.total_cmp(b));
            v.dedup();
            v.pop();
            cuts.push(v);
        }
        Self {
            columns,
            cuts,
            has_missing,
            mia,
        }
    }

    /// Draws a rule from the prior: uniform variable, uniform missing rule
    /// (when the variable has holes under MIA), uniform cut. `None` when the
    /// chosen variable offers no admissible rule.
    fn draw_rule(&self, rng: &mut Rng) -> Option<SplitRule> {
        let v = rng.random_range(0..self.columns.len());
        let dir = if self.mia && self.has_missing[v] {
            match rng.random_range(0..3) {
                0 => MissingDirection::Left,
                1 => MissingDirection::Right,
                _ => return Some(SplitRule::new(v, f64::NAN, MissingDirection::MissingOnlyLeft)),
            }
        } else {
            MissingDirection::Left
        };
        let cuts = &self.cuts[v];
        if cuts.is_empty() {
            return None;
        }
        Some(SplitRule::new(v, cuts[rng.random_range(0..cuts.len())], dir))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MoveCounts {
    pub proposed: u64,
    pub accepted: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AcceptanceStats {
    pub grow: MoveCounts,
    pub prune: MoveCounts,
    pub change: MoveCounts,
}

impl MoveCounts {
    /// Accepted over proposed; 0 when nothing was proposed.
    pub fn rate(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }
}

/// Hyperparameters the moves need, precomputed.
pub(crate) struct Prior {
    pub tau2: f64,
    pub base: f64,
    pub power: f64,
    pub max_depth: Option<usize>,
    pub p_grow: f64,
    pub p_prune: f64,
    pub p_change: f64,
}

impl Prior {
    pub fn new(p: &BartParams) -> Self {
        let tau = p.leaf_sd();
        Self {
            tau2: tau * tau,
            base: p.base,
            power: p.power,
            max_depth: p.max_depth,
            p_grow: p.proposals.grow,
            p_prune: p.proposals.prune,
            p_change: p.proposals.change,
        }
    }

    fn p_split(&self, depth: u32) -> f64 {
        if self.max_depth.is_some_and(|d| depth as usize >= d) {
            return 0.0;
        }
        self.base * (1.0 + depth as f64).powf(-self.power)
    }

    fn growable(&self, depth: u32) -> bool {
        self.p_split(depth) > 0.0
    }

    /// Log marginal likelihood of a leaf holding `n` residuals summing to `s`,
    /// up to terms that cancel in every ratio.
    fn leaf_lml(&self, n: f64, s: f64) -> f64 {
        let a = 1.0 + n * self.tau2;
        -0.5 * a.ln() + self.tau2 * s * s / (2.0 * a)
    }

    /// Move probabilities renormalized over the moves available to a tree
    /// with `b` growable leaves and `w` singly-internal nodes.
    fn move_probs(&self, b: usize, w: usize) -> (f64, f64, f64) {
        let g = if b > 0 { self.p_grow } else { 0.0 };
        let (p, c) = if w > 0 {
            (self.p_prune, self.p_change)
        } else {
            (0.0, 0.0)
        };
        let tot = g + p + c;
        (g / tot, p / tot, c / tot)
    }
}

/// One tree of the ensemble with the leaf each training row falls in.
#[derive(Debug, Clone)]
pub(crate) struct SampledTree {
    nodes: Vec<SNode>,
    free: Vec<u32>,
    pub leaf_of: Vec<u32>,
}

impl SampledTree {
    pub fn stump(n_rows: usize) -> Self {
        Self {
            nodes: vec![SNode {
                parent: NONE,
                left: NONE,
                right: NONE,
                depth: 0,
                rule: SplitRule::new(0, 0.0, MissingDirection::Left),
                mu: 0.0,
                live: true,
            }],
            free: Vec::new(),
            leaf_of: vec![0; n_rows],
        }
    }

    #[inline]
    pub fn fitted(&self, row: usize) -> f64 {
        self.nodes[self.leaf_of[row] as usize].mu
    }

    fn live(&self) -> impl Iterator<Item = (usize, &SNode)> {
        self.nodes.iter().enumerate().filter(|(_, n)| n.live)
    }

    fn is_nog(&self, i: usize) -> bool {
        let n = &self.nodes[i];
        !n.is_leaf() && self.nodes[n.left as usize].is_leaf() && self.nodes[n.right as usize].is_leaf()
    }

    fn growable_leaves(&self, prior: &Prior) -> Vec<usize> {
        self.live()
            .filter(|(_, n)| n.is_leaf() && prior.growable(n.depth))
            .map(|(i, _)| i)
            .collect()
    }

    fn nogs(&self) -> Vec<usize> {
        self.live().map(|(i, _)| i).filter(|&i| self.is_nog(i)).collect()
    }

    /// Split variables of all internal nodes.
    pub fn split_variables(&self) -> impl Iterator<Item = usize> + '_ {
        self.live().filter(|(_, n)| !n.is_leaf()).map(|(_, n)| n.rule.variable)
    }

    fn alloc(&mut self, node: SNode) -> u32 {
        if let Some(i) = self.free.pop() {
            self.nodes[i as usize] = node;
            i
        } else {
            self.nodes.push(node);
            (self.nodes.len() - 1) as u32
        }
    }

    /// Sufficient statistics of the residuals in `node`, split by `rule`.
    fn split_stats(&self, node: u32, rule: &SplitRule, design: &Design, resid: &[f64]) -> (f64, f64, f64, f64) {
        let col = design.columns[rule.variable];
        let (mut nl, mut sl, mut nr, mut sr) = (0.0, 0.0, 0.0, 0.0);
        for (i, &leaf) in self.leaf_of.iter().enumerate() {
            if leaf == node {
                if rule.goes_left(col[i]) {
                    nl += 1.0;
                    sl += resid[i];
                } else {
                    nr += 1.0;
                    sr += resid[i];
                }
            }
        }
        (nl, sl, nr, sr)
    }

    /// One grow, prune or change proposal, tallied in `stats`.
    pub fn mh_step(
        &mut self,
        design: &Design,
        resid: &[f64],
        prior: &Prior,
        stats: &mut AcceptanceStats,
        rng: &mut Rng,
    ) {
        let growable = self.growable_leaves(prior);
        let nogs = self.nogs();
        if growable.is_empty() && nogs.is_empty() {
            return;
        }
        let (pg, pp, _) = prior.move_probs(growable.len(), nogs.len());
        let u: f64 = rng.random();
        if u < pg {
            stats.grow.proposed += 1;
            if self.grow(design, resid, prior, &growable, nogs.len(), rng) {
                stats.grow.accepted += 1;
            }
        } else if u < pg + pp {
            stats.prune.proposed += 1;
            if self.prune(resid, prior, growable.len(), &nogs, rng) {
                stats.prune.accepted += 1;
            }
        } else {
            stats.change.proposed += 1;
            if self.change(design, resid, prior, &nogs, rng) {
                stats.change.accepted += 1;
            }
        }
    }

    fn grow(
        &mut self,
        design: &Design,
        resid: &[f64],
        prior: &Prior,
        growable: &[usize],
        n_nog: usize,
        rng: &mut Rng,
    ) -> bool {
        let eta = growable[rng.random_range(0..growable.len())] as u32;
        let Some(rule) = design.draw_rule(rng) else {
            return false;
        };
        let (nl, sl, nr, sr) = self.split_stats(eta, &rule, design, resid);
        if nl == 0.0 || nr == 0.0 {
            return false;
        }
        let d = self.nodes[eta as usize].depth;
        let ps = prior.p_split(d);
        let ps1 = prior.p_split(d + 1);
        let lr = prior.leaf_lml(nl, sl) + prior.leaf_lml(nr, sr) - prior.leaf_lml(nl + nr, sl + sr);
        let tree_ratio = ps.ln() + 2.0 * (1.0 - ps1).ln() - (1.0 - ps).ln();
        // state after the move
        let parent = self.nodes[eta as usize].parent;
        let parent_was_nog = parent != NONE && self.is_nog(parent as usize);
        let w_new = n_nog + 1 - usize::from(parent_was_nog);
        let b_new = growable.len() - 1 + if prior.growable(d + 1) { 2 } else { 0 };
        let (pg_old, _, _) = prior.move_probs(growable.len(), n_nog);
        let (_, pp_new, _) = prior.move_probs(b_new, w_new);
        let proposal_ratio = (pp_new / w_new as f64).ln() - (pg_old / growable.len() as f64).ln();
        let log_alpha = lr + tree_ratio + proposal_ratio;
        if log_alpha < 0.0 && rng.random::<f64>().ln() >= log_alpha {
            return false;
        }
        let child = |mu| SNode {
            parent: eta,
            left: NONE,
            right: NONE,
            depth: d + 1,
            rule: SplitRule::new(0, 0.0, MissingDirection::Left),
            mu,
            live: true,
        };
        let mu = self.nodes[eta as usize].mu;
        let l = self.alloc(child(mu));
        let r = self.alloc(child(mu));
        let n = &mut self.nodes[eta as usize];
        n.left = l;
        n.right = r;
        n.rule = rule;
        let col = design.columns[rule.variable];
        for (i, leaf) in self.leaf_of.iter_mut().enumerate() {
            if *leaf == eta {
                *leaf = if rule.goes_left(col[i]) { l } else { r };
            }
        }
        true
    }

    fn prune(&mut self, resid: &[f64], prior: &Prior, n_growable: usize, nogs: &[usize], rng: &mut Rng) -> bool {
        let eta = nogs[rng.random_range(0..nogs.len())] as u32;
        let (l, r) = {
            let n = &self.nodes[eta as usize];
            (n.left, n.right)
        };
        let (mut nl, mut sl, mut nr, mut sr) = (0.0, 0.0, 0.0, 0.0);
        for (i, &leaf) in self.leaf_of.iter().enumerate() {
            if leaf == l {
                nl += 1.0;
                sl += resid[i];
            } else if leaf == r {
                nr += 1.0;
                sr += resid[i];
            }
        }
        let d = self.nodes[eta as usize].depth;
        let ps = prior.p_split(d);
        let ps1 = prior.p_split(d + 1);
        let lr = prior.leaf_lml(nl + nr, sl + sr) - prior.leaf_lml(nl, sl) - prior.leaf_lml(nr, sr);
        let tree_ratio = (1.0 - ps).ln() - ps.ln() - 2.0 * (1.0 - ps1).ln();
        let parent = self.nodes[eta as usize].parent;
        // the parent becomes singly-internal when its other child is a leaf
        let parent_becomes_nog = parent != NONE && {
            let p = &self.nodes[parent as usize];
            let sib = if p.left == eta { p.right } else { p.left };
            self.nodes[sib as usize].is_leaf()
        };
        let b_new = n_growable + 1 - if prior.growable(d + 1) { 2 } else { 0 };
        let w_new = nogs.len() - 1 + usize::from(parent_becomes_nog);
        let (_, pp_old, _) = prior.move_probs(n_growable, nogs.len());
        let (pg_new, _, _) = prior.move_probs(b_new, w_new);
        let proposal_ratio = (pg_new / b_new as f64).ln() - (pp_old / nogs.len() as f64).ln();
        let log_alpha = lr + tree_ratio + proposal_ratio;
        if log_alpha < 0.0 && rng.random::<f64>().ln() >= log_alpha {
            return false;
        }
        for leaf in self.leaf_of.iter_mut() {
            if *leaf == l || *leaf == r {
                *leaf = eta;
            }
        }
        for c in [l, r] {
            self.nodes[c as usize].live = false;
            self.free.push(c);
        }
        let n = &mut self.nodes[eta as usize];
        n.left = NONE;
        n.right = NONE;
        true
    }

    fn change(&mut self, design: &Design, resid: &[f64], prior: &Prior, nogs: &[usize], rng: &mut Rng) -> bool {
        let eta = nogs[rng.random_range(0..nogs.len())] as u32;
        let Some(rule) = design.draw_rule(rng) else {
            return false;
        };
        let (nl, sl, nr, sr) = {
            // rows of eta are exactly the rows of its two leaf children
            let n = &self.nodes[eta as usize];
            let (l, r) = (n.left, n.right);
            let col = design.columns[rule.variable];
            let (mut nl, mut sl, mut nr, mut sr) = (0.0, 0.0, 0.0, 0.0);
            for (i, &leaf) in self.leaf_of.iter().enumerate() {
                if leaf == l || leaf == r {
                    if rule.goes_left(col[i]) {
                        nl += 1.0;
                        sl += resid[i];
                    } else {
                        nr += 1.0;
                        sr += resid[i];
                    }
                }
            }
            (nl, sl, nr, sr)
        };
        if nl == 0.0 || nr == 0.0 {
            return false;
        }
        let (l, r) = {
            let n = &self.nodes[eta as usize];
            (n.left, n.right)
        };
        let (mut ol, mut osl, mut or, mut osr) = (0.0, 0.0, 0.0, 0.0);
        for (i, &leaf) in self.leaf_of.iter().enumerate() {
            if leaf == l {
                ol += 1.0;
                osl += resid[i];
            } else if leaf == r {
                or += 1.0;
                osr += resid[i];
            }
        }
        let log_alpha =
            prior.leaf_lml(nl, sl) + prior.leaf_lml(nr, sr) - prior.leaf_lml(ol, osl) - prior.leaf_lml(or, osr);
        if log_alpha < 0.0 && rng.random::<f64>().ln() >= log_alpha {
            return false;
        }
        self.nodes[eta as usize].rule = rule;
        let col = design.columns[rule.variable];
        for (i, leaf) in self.leaf_of.iter_mut().enumerate() {
            if *leaf == l || *leaf == r {
                *leaf = if rule.goes_left(col[i]) { l } else { r };
            }
        }
        true
    }

    /// Gibbs draw of every leaf value given the residuals.
    pub fn draw_leaves(&mut self, resid: &[f64], prior: &Prior, rng: &mut Rng) {
        let mut n = vec![0.0; self.nodes.len()];
        let mut s = vec![0.0; self.nodes.len()];
        for (i, &leaf) in self.leaf_of.iter().enumerate() {
            n[leaf as usize] += 1.0;
            s[leaf as usize] += resid[i];
        }
        for (i, node) in self.nodes.iter_mut().enumerate() {
            if node.live && node.is_leaf() {
                let a = 1.0 + n[i] * prior.tau2;
                let mean = prior.tau2 * s[i] / a;
                let sd = (prior.tau2 / a).sqrt();
                let z: f64 = StandardNormal.sample(rng);
                node.mu = mean + sd * z;
            }
        }
    }

    /// Snapshot as a plain [`Tree`] (leaf `n_train` = training rows in the leaf).
    pub fn to_tree(&self) -> Tree {
        let mut counts = vec![0u32; self.nodes.len()];
        for &leaf in &self.leaf_of {
            counts[leaf as usize] += 1;
        }
        let mut out: Vec<Node> = Vec::new();
        // (arena index, parent in output)
        let mut stack = vec![(0u32, None::<usize>, None::<bool>)];
        while let Some((i, parent, is_left)) = stack.pop() {
            let idx = out.len();
            let n = &self.nodes[i as usize];
            out.push(Node {
                parent,
                depth: n.depth as usize,
                n_train: 0,
                kind: NodeKind::Leaf { value: n.mu },
            });
            if let (Some(p), Some(left)) = (parent, is_left) {
                if let NodeKind::Split { left: l, right: r, .. } = &mut out[p].kind {
                    if left {
                        *l = idx;
                    } else {
                        *r = idx;
                    }
                }
            }
            if n.is_leaf() {
                out[idx].n_train = counts[i as usize];
            } else {
                out[idx].kind = NodeKind::Split {
                    rule: n.rule,
                    left: usize::MAX,
                    right: usize::MAX,
                    gain: 0.0,
                };
                stack.push((n.right, Some(idx), Some(false)));
                stack.push((n.left, Some(idx), Some(true)));
            }
        }
        // internal counts from leaves upward
        for i in (0..out.len()).rev() {
            if let NodeKind::Split { left, right, .. } = out[i].kind {
                out[i].n_train = out[left].n_train + out[right].n_train;
            }
        }
        Tree { nodes: out }
    }
}
