//! Flattened tree pairs shared by the distance engines.
//!
//! Each side interns its distinct labels; variables become label ids whose
//! relabel costs against the other side depend on the current variable
//! pairing. A [`PairCosts`] table is the complete cost function for one
//! pairing (or a relaxation of a partial one).

use std::collections::HashMap;

use crate::cost::{CostModel, EffectiveLabel};
use crate::model::Tree;

pub(crate) const NO_PARENT: usize = usize::MAX;

/// Tree arrays in preorder plus the postorder data used by the keyroot DP.
#[derive(Debug, Clone)]
pub(crate) struct Indexed {
    pub n: usize,
    pub label: Vec<u32>,
    pub parent: Vec<usize>,
    pub size: Vec<usize>,
    /// Postorder position -> preorder id.
    pub post: Vec<usize>,
    /// Leftmost leaf (postorder position) of each postorder position.
    pub lml: Vec<usize>,
    pub keyroots: Vec<usize>,
}

impl Indexed {
    fn new(tree: &Tree, label: Vec<u32>) -> Self {
        let n = tree.size();
        let parent = (0..n).map(|v| tree.parent(v).unwrap_or(NO_PARENT)).collect();
        let size = (0..n).map(|v| tree.subtree_size(v)).collect();
        let post = tree.postorder();
        let mut pos = vec![0usize; n];
        for (i, &v) in post.iter().enumerate() {
            pos[v] = i;
        }
        let mut lml = vec![0usize; n];
        for (i, &v) in post.iter().enumerate() {
            // descendants precede in postorder; the leftmost leaf is the first
            // of the subtree's postorder block
            lml[i] = i + 1 - tree.subtree_size(v);
            debug_assert!(tree.children(v).first().is_none_or(|&c| lml[pos[c]] == lml[i]));
        }
        let mut seen = vec![false; n];
        let mut keyroots = Vec::new();
        for i in (0..n).rev() {
            if !seen[lml[i]] {
                seen[lml[i]] = true;
                keyroots.push(i);
            }
        }
        keyroots.reverse();
        Indexed { n, label, parent, size, post, lml, keyroots }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum SideLabel {
    Constant(String),
    Variable(usize),
}

/// One tree with its interned labels.
#[derive(Debug, Clone)]
pub(crate) struct Side {
    pub tree: Indexed,
    pub labels: Vec<SideLabel>,
    /// Sorted distinct variable symbols.
    pub vars: Vec<String>,
    /// Variable index -> label id.
    pub var_label: Vec<u32>,
}

impl Side {
    pub fn new(tree: &Tree) -> Self {
        let vars: Vec<String> = tree.variables().into_iter().collect();
        let mut labels: Vec<SideLabel> = Vec::new();
        let mut index: HashMap<SideLabel, u32> = HashMap::new();
        let mut var_label = vec![0u32; vars.len()];
        let ids = tree
            .labels()
            .iter()
            .map(|l| {
                let key = if l.is_variable() {
                    SideLabel::Variable(vars.binary_search_by(|s| s.as_str().cmp(l.symbol())).expect("listed"))
                } else {
                    SideLabel::Constant(l.symbol().to_string())
                };
                *index.entry(key.clone()).or_insert_with(|| {
                    labels.push(key.clone());
                    let id = labels.len() as u32 - 1;
                    if let SideLabel::Variable(k) = key {
                        var_label[k] = id;
                    }
                    id
                })
            })
            .collect();
        Side { tree: Indexed::new(tree, ids), labels, vars, var_label }
    }
}

impl std::hash::Hash for SideLabel {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        match self {
            SideLabel::Constant(s) => {
                0u8.hash(state);
                s.hash(state);
            }
            SideLabel::Variable(k) => {
                1u8.hash(state);
                k.hash(state);
            }
        }
    }
}

/// Complete cost tables between the label ids of two sides.
#[derive(Debug, Clone)]
pub(crate) struct PairCosts {
    pub cols: usize,
    pub relabel: Vec<f64>,
    pub del: Vec<f64>,
    pub ins: Vec<f64>,
    /// Equivalence classes of effective labels; `None` for relaxed tables
    /// where zero cost does not imply equality.
    pub classes: Option<(Vec<u32>, Vec<u32>)>,
}

impl PairCosts {
    #[inline]
    pub fn rel(&self, a: u32, b: u32) -> f64 {
        self.relabel[a as usize * self.cols + b as usize]
    }

    pub fn min_delete(&self) -> f64 {
        self.del.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn min_insert(&self) -> f64 {
        self.ins.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// A prepared tree pair: both sides plus the cost table for the empty
/// pairing, from which per-pairing tables are derived.
#[derive(Debug, Clone)]
pub(crate) struct Prepared {
    pub left: Side,
    pub right: Side,
    base: PairCosts,
}

impl Prepared {
    pub fn new(t1: &Tree, t2: &Tree, c: &CostModel) -> Self {
        let left = Side::new(t1);
        let right = Side::new(t2);
        let cols = right.labels.len();
        let mut symbols: HashMap<String, u32> = HashMap::new();
        let mut relabel = Vec::with_capacity(left.labels.len() * cols);
        let eff = |l: &SideLabel, base: u32| match l {
            SideLabel::Constant(s) => EffectiveLabel::Constant(s.clone()),
            SideLabel::Variable(k) => EffectiveLabel::Fresh(base + *k as u32),
        };
        let right_base = left.vars.len() as u32;
        for a in &left.labels {
            for b in &right.labels {
                relabel.push(c.relabel_cost(&eff(a, 0), &eff(b, right_base)));
            }
        }
        let del = left.labels.iter().map(|a| c.delete_cost(&eff(a, 0))).collect();
        let ins = right.labels.iter().map(|b| c.insert_cost(&eff(b, right_base))).collect();
        let mut next_class = 0u32;
        let mut class_of = |l: &SideLabel, var_base: u32| match l {
            SideLabel::Constant(s) => *symbols.entry(s.clone()).or_insert_with(|| {
                next_class += 1;
                next_class - 1
            }),
            SideLabel::Variable(k) => u32::MAX / 2 + var_base + *k as u32,
        };
        let c1: Vec<u32> = left.labels.iter().map(|l| class_of(l, 0)).collect();
        let c2: Vec<u32> = right.labels.iter().map(|l| class_of(l, right_base)).collect();
        let base = PairCosts { cols, relabel, del, ins, classes: Some((c1, c2)) };
        Prepared { left, right, base }
    }

    pub fn base(&self) -> &PairCosts {
        &self.base
    }

    /// Cost table when the listed (left var, right var) pairs share a fresh
    /// constant and every other variable keeps its own.
    pub fn costs_for(&self, pairs: &[(usize, usize)]) -> PairCosts {
        let mut out = self.base.clone();
        if let Some((_, c2)) = out.classes.as_mut() {
            for &(k, l) in pairs {
                let a = self.left.var_label[k] as usize;
                let b = self.right.var_label[l] as usize;
                out.relabel[a * self.base.cols + b] = 0.0;
                c2[b] = u32::MAX / 2 + k as u32;
            }
        }
        out
    }

    /// Relaxation for a partial pairing: assigned pairs as in
    /// [`Prepared::costs_for`], and every still-free left variable may pair
    /// with every still-free right variable at zero cost.
    pub fn relaxed_costs(&self, pairs: &[(usize, usize)], free_left: &[usize], free_right: &[usize]) -> PairCosts {
        let mut out = self.base.clone();
        out.classes = None;
        let cols = self.base.cols;
        for &(k, l) in pairs {
            let a = self.left.var_label[k] as usize;
            let b = self.right.var_label[l] as usize;
            out.relabel[a * cols + b] = 0.0;
        }
        for &k in free_left {
            let a = self.left.var_label[k] as usize;
            for &l in free_right {
                let b = self.right.var_label[l] as usize;
                out.relabel[a * cols + b] = 0.0;
            }
        }
        out
    }
}

/// Symmetric size-difference bound.
pub(crate) fn size_bound(n1: usize, n2: usize, costs: &PairCosts) -> f64 {
    if n1 > n2 {
        (n1 - n2) as f64 * costs.min_delete()
    } else if n2 > n1 {
        (n2 - n1) as f64 * costs.min_insert()
    } else {
        0.0
    }
}

/// Label-histogram bound between two node multisets (given as label ids of
/// their sides). Equal classes are matched first; the residual is bounded by
/// the cheaper of each node's own cheapest operation, summed per side.
pub(crate) fn histogram_bound(costs: &PairCosts, left: &[u32], right: &[u32], scratch: &mut HistScratch) -> f64 {
    let (res1, res2): (&[u32], &[u32]) = match &costs.classes {
        Some((c1, c2)) => {
            scratch.counts.clear();
            for &a in left {
                *scratch.counts.entry(c1[a as usize]).or_insert(0) += 1;
            }
            scratch.res2.clear();
            for &b in right {
                match scratch.counts.get_mut(&c2[b as usize]) {
                    Some(n) if *n > 0 => *n -= 1,
                    _ => scratch.res2.push(b),
                }
            }
            // counts now hold the unmatched multiplicity of each left class
            scratch.res1.clear();
            for &a in left {
                let n = scratch.counts.get_mut(&c1[a as usize]).expect("counted");
                if *n > 0 {
                    *n -= 1;
                    scratch.res1.push(a);
                }
            }
            (&scratch.res1, &scratch.res2)
        }
        None => (left, right),
    };
    per_node_bound(costs, res1, res2)
}

fn per_node_bound(costs: &PairCosts, left: &[u32], right: &[u32]) -> f64 {
    if left.is_empty() {
        return right.iter().map(|&b| costs.ins[b as usize]).sum();
    }
    if right.is_empty() {
        return left.iter().map(|&a| costs.del[a as usize]).sum();
    }
    let s1: f64 = left.iter().map(|&a| right.iter().fold(costs.del[a as usize], |m, &b| m.min(costs.rel(a, b)))).sum();
    let s2: f64 = right.iter().map(|&b| left.iter().fold(costs.ins[b as usize], |m, &a| m.min(costs.rel(a, b)))).sum();
    s1.max(s2)
}

#[derive(Debug, Default)]
pub(crate) struct HistScratch {
    counts: HashMap<u32, u32>,
    res1: Vec<u32>,
    res2: Vec<u32>,
}

/// Minimum-cost assignment between the two node multisets where every node
/// is relabeled to a node of the other side, deleted or inserted. Valid for
/// any cost table, including relaxed ones.
pub(crate) fn assignment_bound(costs: &PairCosts, left: &[u32], right: &[u32]) -> f64 {
    let (a, b) = (left.len(), right.len());
    let n = a + b;
    if n == 0 {
        return 0.0;
    }
    let cost = |i: usize, j: usize| -> f64 {
        match (i < a, j < b) {
            (true, true) => costs.rel(left[i], right[j]),
            (true, false) => costs.del[left[i] as usize],
            (false, true) => costs.ins[right[j] as usize],
            (false, false) => 0.0,
        }
    };
    crate::matching::solve_assignment(n, cost).0
}
