use std::fmt::Write as _;

use crate::error::{Error, Result};

use super::split::{MissingDirection, SplitRule};

#[derive(Debug, Clone, PartialEq)]
pub enum NodeKind {
    Split {
        rule: SplitRule,
        left: usize,
        right: usize,
        /// Impurity reduction achieved by this split on the training rows.
        gain: f64,
    },
    Leaf {
        value: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub parent: Option<usize>,
    pub depth: usize,
    /// Training rows reaching the node, counted with bootstrap multiplicity.
    pub n_train: u32,
    pub kind: NodeKind,
}

/// A fitted binary tree; node 0 is the root.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    pub(crate) nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf(value: f64, n_train: u32) -> Self {
        Self {
            nodes: vec![Node {
                parent: None,
                depth: 0,
                n_train,
                kind: NodeKind::Leaf { value },
            }],
        }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn depth(&self) -> usize {
        self.nodes.iter().map(|n| n.depth).max().unwrap_or(0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n.kind, NodeKind::Leaf { .. }))
            .count()
    }

    pub fn splits(&self) -> impl Iterator<Item = (&SplitRule, f64)> {
        self.nodes.iter().filter_map(|n| match &n.kind {
            NodeKind::Split { rule, gain, .. } => Some((rule, *gain)),
            NodeKind::Leaf { .. } => None,
        })
    }

    /// Index of the leaf reached by a row; `value_of(variable)` returns the
    /// cell, `NaN` when missing.
    #[inline]
    pub fn leaf_index(&self, value_of: impl Fn(usize) -> f64) -> usize {
        let mut i = 0;
        loop {
            match &self.nodes[i].kind {
                NodeKind::Leaf { .. } => return i,
                NodeKind::Split { rule, left, right, .. } => {
                    i = if rule.goes_left(value_of(rule.variable)) {
                        *left
                    } else {
                        *right
                    }
                }
            }
        }
    }

    #[inline]
    pub fn predict(&self, value_of: impl Fn(usize) -> f64) -> f64 {
        match self.nodes[self.leaf_index(value_of)].kind {
            NodeKind::Leaf { value } => value,
            NodeKind::Split { .. } => unreachable!(),
        }
    }

    /// Prediction for row `row` of column-major data.
    #[inline]
    pub fn predict_row(&self, columns: &[&[f64]], row: usize) -> f64 {
        self.predict(|v| columns[v][row])
    }

    pub(crate) fn set_leaf_value(&mut self, node: usize, value: f64) {
        if let NodeKind::Leaf { value: v } = &mut self.nodes[node].kind {
            *v = value;
        }
    }

    /// Self-describing text form: a header line, then one line per node with
    /// its parent link, split fields or leaf value.
    pub fn to_text(&self) -> String {
        let mut out = format!("tree nodes={}\n", self.nodes.len());
        for (i, n) in self.nodes.iter().enumerate() {
            let parent = n.parent.map_or("-".to_string(), |p| p.to_string());
            let _ = write!(out, "node {i} parent={parent} depth={} n={} ", n.depth, n.n_train);
            match &n.kind {
                NodeKind::Split {
                    rule,
                    left,
                    right,
                    gain,
                } => {
                    let _ = writeln!(
                        out,
                        "split var={} thr={:?} miss={} gain={:?} left={left} right={right}",
                        rule.variable,
                        rule.threshold,
                        rule.missing.code(),
                        gain
                    );
                }
                NodeKind::Leaf { value } => {
                    let _ = writeln!(out, "leaf value={value:?}");
                }
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |msg: &str| Error::InvalidInput(format!("tree text: {msg}"));
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| bad("empty"))?;
        let count: usize = header
            .strip_prefix("tree nodes=")
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| bad("bad header"))?;
        let mut nodes = Vec::with_capacity(count);
        for (i, line) in lines.enumerate() {
            let mut fields = std::collections::HashMap::new();
            let mut words = line.split_whitespace();
            if words.next() != Some("node") {
                return Err(bad("expected `node`"));
            }
            let idx: usize = words
                .next()
                .and_then(|w| w.parse().ok())
                .ok_or_else(|| bad("bad node index"))?;
            if idx != i {
                return Err(bad("node indices out of order"));
            }
            let mut kind_word = None;
            for w in words {
                match w.split_once('=') {
                    Some((k, v)) => {
                        fields.insert(k, v);
                    }
                    None => kind_word = Some(w),
                }
            }
            let get = |k: &str| fields.get(k).copied().ok_or_else(|| bad(&format!("missing {k}")));
            let num = |k: &str| -> Result<f64> { get(k)?.parse::<f64>().map_err(|_| bad(&format!("bad {k}"))) };
            let int = |k: &str| -> Result<usize> { get(k)?.parse::<usize>().map_err(|_| bad(&format!("bad {k}"))) };
            let parent = match get("parent")? {
                "-" => None,
                p => Some(p.parse().map_err(|_| bad("bad parent"))?),
            };
            let kind = match kind_word {
                Some("leaf") => NodeKind::Leaf { value: num("value")? },
                Some("split") => NodeKind::Split {
                    rule: SplitRule {
                        variable: int("var")?,
                        threshold: num("thr")?,
                        missing: MissingDirection::from_code(get("miss")?).ok_or_else(|| bad("bad miss"))?,
                    },
                    left: int("left")?,
                    right: int("right")?,
                    gain: num("gain")?,
                },
                _ => return Err(bad("node kind must be leaf or split")),
            };
            nodes.push(Node {
                parent,
                depth: int("depth")?,
                n_train: int("n")? as u32,
                kind,
            });
        }
        if nodes.len() != count || nodes.is_empty() {
            return Err(bad("node count mismatch"));
        }
        Ok(Self { nodes })
    }
}
