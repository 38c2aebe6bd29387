//! Hardness gadgets and the brute-force oracles that check them.
//!
//! * [`clique_to_trees`] turns a graph and a clique size into an ordered tree
//!   pair whose distance with variables is at most `n2 - n1` exactly when the
//!   graph has a clique of that size.
//! * [`gi_gadget`] and [`gi_gadget_bounded`] turn a tree into a labeled graph
//!   such that two trees are at unordered distance zero exactly when their
//!   graphs are isomorphic.
//! * [`star_encode`] bounds the outdegree of a tree without changing which
//!   pairs are at ordered distance zero.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::model::{Label, Tree, TreeBuilder, TreeError};

/// Largest graph accepted by the exhaustive oracles.
pub const ORACLE_MAX_VERTICES: usize = 10;

/// Internal label used by [`star_encode`].
pub const CAT_LABEL: &str = "$cat";

/// Vertex label of the per-variable hub (or copy) vertices of the GI gadgets.
pub const HUB_LABEL: &str = "$a";
/// Vertex label of former variable leaves in the GI gadgets.
pub const VAR_LEAF_LABEL: &str = "$b";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReductionError {
    #[error("clique size {k} must be between 1 and the vertex count {n}")]
    CliqueSize { k: usize, n: usize },
    #[error("graph has {n} vertices; the exhaustive oracle accepts at most {max}")]
    TooLarge { n: usize, max: usize },
    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),
    #[error("edge {0}-{1} listed twice")]
    DuplicateEdge(usize, usize),
    #[error("vertex {v} out of range for a graph with {n} vertices")]
    VertexOutOfRange { v: usize, n: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("outdegree bound must be at least 2, got {0}")]
    BadBound(usize),
    #[error("input tree already uses the reserved label {0}")]
    ReservedLabel(String),
    #[error(transparent)]
    Tree(#[from] TreeError),
}

/// Undirected simple graph with a text label per vertex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledGraph {
    labels: Vec<String>,
    adj: Vec<BTreeSet<usize>>,
}

impl LabeledGraph {
    /// `n` vertices with empty labels and no edges.
    pub fn new(n: usize) -> Self {
        LabeledGraph { labels: vec![String::new(); n], adj: vec![BTreeSet::new(); n] }
    }

    pub fn with_labels(labels: Vec<String>) -> Self {
        let n = labels.len();
        LabeledGraph { labels, adj: vec![BTreeSet::new(); n] }
    }

    pub fn add_vertex(&mut self, label: impl Into<String>) -> usize {
        self.labels.push(label.into());
        self.adj.push(BTreeSet::new());
        self.labels.len() - 1
    }

    pub fn add_edge(&mut self, u: usize, v: usize) -> Result<(), ReductionError> {
        let n = self.len();
        for x in [u, v] {
            if x >= n {
                return Err(ReductionError::VertexOutOfRange { v: x, n });
            }
        }
        if u == v {
            return Err(ReductionError::SelfLoop(u));
        }
        if !self.adj[u].insert(v) {
            return Err(ReductionError::DuplicateEdge(u.min(v), u.max(v)));
        }
        self.adj[v].insert(u);
        Ok(())
    }

    pub fn set_label(&mut self, v: usize, label: impl Into<String>) {
        self.labels[v] = label.into();
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, v: usize) -> &str {
        &self.labels[v]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u].contains(&v)
    }

    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.adj[v].iter().copied()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(BTreeSet::len).max().unwrap_or(0)
    }

    /// Edges as `(u, v)` with `u < v`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (u, ns) in self.adj.iter().enumerate() {
            out.extend(ns.iter().filter(|&&v| v > u).map(|&v| (u, v)));
        }
        out
    }

    /// Same graph with vertex `v` renamed to `perm[v]`.
    pub fn permuted(&self, perm: &[usize]) -> LabeledGraph {
        let mut g = LabeledGraph::new(self.len());
        for (v, l) in self.labels.iter().enumerate() {
            g.labels[perm[v]] = l.clone();
        }
        for (u, v) in self.edges() {
            g.add_edge(perm[u], perm[v]).expect("permutation of a simple graph");
        }
        g
    }
}

/// Text format: a header line with the vertex count, then one `u v` line per
/// edge (0-based) and optional `label v symbol` lines. `#` starts a comment.
impl FromStr for LabeledGraph {
    type Err = ReductionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut g: Option<LabeledGraph> = None;
        for (k, raw) in s.lines().enumerate() {
            let line = k + 1;
            let text = raw.split('#').next().unwrap_or("").trim();
            if text.is_empty() {
                continue;
            }
            let err = |message: String| ReductionError::Parse { line, message };
            let words: Vec<&str> = text.split_whitespace().collect();
            let num = |w: &str| w.parse::<usize>().map_err(|_| err(format!("expected a vertex number, found {w:?}")));
            match (&mut g, words.as_slice()) {
                (None, [n]) => g = Some(LabeledGraph::new(num(n)?)),
                (None, _) => return Err(err("expected the vertex count".into())),
                (Some(g), ["label", v, sym]) => {
                    let v = num(v)?;
                    if v >= g.len() {
                        return Err(err(format!("vertex {v} out of range")));
                    }
                    g.set_label(v, *sym);
                }
                (Some(g), [u, v]) => g.add_edge(num(u)?, num(v)?).map_err(|e| err(e.to_string()))?,
                (Some(_), _) => return Err(err(format!("cannot parse {text:?}"))),
            }
        }
        g.ok_or(ReductionError::Parse { line: 1, message: "missing vertex count".into() })
    }
}

impl fmt::Display for LabeledGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.len())?;
        for (u, v) in self.edges() {
            writeln!(f, "{u} {v}")?;
        }
        for (v, l) in self.labels.iter().enumerate() {
            if !l.is_empty() {
                writeln!(f, "label {v} {l}")?;
            }
        }
        Ok(())
    }
}

/// Tree pair and threshold produced by [`clique_to_trees`].
#[derive(Debug, Clone, PartialEq)]
pub struct CliqueGadget {
    pub t1: Tree,
    pub t2: Tree,
    pub threshold: f64,
}

/// Builds the clique gadget for graph `g` and clique size `k`.
///
/// `t1` is a root with `k` children, the `i`-th having leaves `X_i_j`
/// (`j = 1..k`, with `X_i_j` and `X_j_i` the same variable). `t2` is a root
/// with `n` children, the `i`-th having leaves labeled `Y_i_j` when `{i, j}`
/// is an edge or `i = j`, and a distinct constant `b_i_j` otherwise. All
/// internal nodes are labeled `a`. The threshold is `n2 - n1` under unit
/// cost.
pub fn clique_to_trees(g: &LabeledGraph, k: usize) -> Result<CliqueGadget, ReductionError> {
    let n = g.len();
    if k == 0 || k > n {
        return Err(ReductionError::CliqueSize { k, n });
    }
    let a = Label::constant("a")?;
    let pair = |p: &str, i: usize, j: usize| format!("{p}_{}_{}", i.min(j) + 1, i.max(j) + 1);
    let mut left = Vec::with_capacity(k);
    for i in 0..k {
        let leaves = (0..k).map(|j| Label::variable(pair("X", i, j)).map(Tree::leaf)).collect::<Result<_, _>>()?;
        left.push(Tree::node(a.clone(), leaves)?);
    }
    let mut right = Vec::with_capacity(n);
    for i in 0..n {
        let leaves = (0..n)
            .map(|j| {
                let l = if i == j || g.has_edge(i, j) {
                    Label::variable(pair("Y", i, j))
                } else {
                    Label::constant(format!("b_{}_{}", i + 1, j + 1))
                };
                l.map(Tree::leaf)
            })
            .collect::<Result<_, _>>()?;
        right.push(Tree::node(a.clone(), leaves)?);
    }
    let t1 = Tree::node(a.clone(), left)?;
    let t2 = Tree::node(a, right)?;
    let threshold = (t2.size() - t1.size()) as f64;
    Ok(CliqueGadget { t1, t2, threshold })
}

fn tree_vertex_label(t: &Tree, v: usize) -> String {
    let l = t.label(v);
    let base = if l.is_variable() { VAR_LEAF_LABEL.to_string() } else { format!("={}", l.symbol()) };
    if v == t.root() {
        format!("^{base}")
    } else {
        base
    }
}

fn tree_graph(t: &Tree) -> LabeledGraph {
    let mut g = LabeledGraph::with_labels((0..t.size()).map(|v| tree_vertex_label(t, v)).collect());
    for v in 1..t.size() {
        g.add_edge(t.parent(v).expect("non-root"), v).expect("tree edges are simple");
    }
    g
}

fn leaves_by_variable(t: &Tree) -> Vec<Vec<usize>> {
    let vars: Vec<String> = t.variables().into_iter().collect();
    let mut out = vec![Vec::new(); vars.len()];
    for v in 0..t.size() {
        let l = t.label(v);
        if l.is_variable() {
            out[vars.binary_search_by(|s| s.as_str().cmp(l.symbol())).expect("listed")].push(v);
        }
    }
    out
}

/// Graph of the tree (vertex `v` is tree node `v`) plus one hub vertex per
/// variable adjacent to all of that variable's leaves.
///
/// Vertex labels: constants become `=symbol`, variable leaves `$b`, hubs
/// `$a`; the root's label is prefixed with `^` so that isomorphisms must
/// respect it.
pub fn gi_gadget(t: &Tree) -> LabeledGraph {
    let mut g = tree_graph(t);
    for leaves in leaves_by_variable(t) {
        let hub = g.add_vertex(HUB_LABEL);
        for v in leaves {
            g.add_edge(hub, v).expect("fresh hub");
        }
    }
    g
}

/// Degree-preserving variant of [`gi_gadget`]. For every variable with at
/// least two leaves, the nodes having two or more children whose subtrees
/// contain that variable are copied as `$a` vertices; each copy and each of
/// the variable's leaves is joined to the copy of its nearest copied proper
/// ancestor. The maximum degree never exceeds the tree's own.
pub fn gi_gadget_bounded(t: &Tree) -> LabeledGraph {
    let mut g = tree_graph(t);
    let n = t.size();
    for leaves in leaves_by_variable(t) {
        if leaves.len() < 2 {
            continue;
        }
        let mut count = vec![0usize; n];
        for &v in &leaves {
            count[v] = 1;
        }
        for v in (0..n).rev() {
            if let Some(p) = t.parent(v) {
                count[p] += count[v];
            }
        }
        let mut copy = vec![usize::MAX; n];
        // nearest copied ancestor, filled in preorder
        let mut above = vec![usize::MAX; n];
        for v in 0..n {
            if let Some(p) = t.parent(v) {
                above[v] = if copy[p] != usize::MAX { copy[p] } else { above[p] };
            }
            let branching = t.children(v).iter().filter(|&&c| count[c] > 0).count() >= 2;
            if branching {
                copy[v] = g.add_vertex(HUB_LABEL);
                if above[v] != usize::MAX {
                    g.add_edge(above[v], copy[v]).expect("fresh copy");
                }
            } else if count[v] > 0 && t.is_leaf(v) {
                g.add_edge(above[v], v).expect("leaf below a branching node");
            }
        }
    }
    g
}

/// Exhaustive check for a clique of size `k`.
pub fn bruteforce_clique(g: &LabeledGraph, k: usize) -> Result<bool, ReductionError> {
    let n = g.len();
    if n > ORACLE_MAX_VERTICES {
        return Err(ReductionError::TooLarge { n, max: ORACLE_MAX_VERTICES });
    }
    if k == 0 {
        return Ok(true);
    }
    Ok((0u32..1 << n).filter(|m| m.count_ones() as usize == k).any(|m| {
        let vs: Vec<usize> = (0..n).filter(|&v| m >> v & 1 == 1).collect();
        vs.iter().enumerate().all(|(a, &u)| vs[a + 1..].iter().all(|&v| g.has_edge(u, v)))
    }))
}

/// Exhaustive label-preserving isomorphism test.
pub fn graph_iso_bruteforce(g1: &LabeledGraph, g2: &LabeledGraph) -> Result<bool, ReductionError> {
    for g in [g1, g2] {
        if g.len() > ORACLE_MAX_VERTICES {
            return Err(ReductionError::TooLarge { n: g.len(), max: ORACLE_MAX_VERTICES });
        }
    }
    if g1.len() != g2.len() || g1.edges().len() != g2.edges().len() {
        return Ok(false);
    }
    let mut image = vec![usize::MAX; g1.len()];
    let mut taken = vec![false; g2.len()];
    Ok(extend_iso(g1, g2, 0, &mut image, &mut taken))
}

fn extend_iso(g1: &LabeledGraph, g2: &LabeledGraph, v: usize, image: &mut [usize], taken: &mut [bool]) -> bool {
    if v == g1.len() {
        return true;
    }
    for w in 0..g2.len() {
        if taken[w] || g1.label(v) != g2.label(w) || g1.degree(v) != g2.degree(w) {
            continue;
        }
        let consistent = (0..v).all(|u| g1.has_edge(u, v) == g2.has_edge(image[u], w));
        if !consistent {
            continue;
        }
        image[v] = w;
        taken[w] = true;
        if extend_iso(g1, g2, v + 1, image, taken) {
            return true;
        }
        taken[w] = false;
    }
    image[v] = usize::MAX;
    false
}

/// Rewrites every node with more than `max_out` children: while too many
/// children remain, the first `max_out` of them are wrapped under a new
/// `$cat` node. Leaf order is preserved.
pub fn star_encode(t: &Tree, max_out: usize) -> Result<Tree, ReductionError> {
    if max_out < 2 {
        return Err(ReductionError::BadBound(max_out));
    }
    if t.labels().iter().any(|l| !l.is_variable() && l.symbol() == CAT_LABEL) {
        return Err(ReductionError::ReservedLabel(CAT_LABEL.into()));
    }
    let cat = Label::constant(CAT_LABEL)?;
    let mut b = TreeBuilder::new();
    let mut built = vec![usize::MAX; t.size()];
    for v in t.postorder() {
        let mut kids: Vec<usize> = t.children(v).iter().map(|&c| built[c]).collect();
        while kids.len() > max_out {
            let rest = kids.split_off(max_out);
            let joined = b.add(cat.clone(), kids)?;
            kids = std::iter::once(joined).chain(rest).collect();
        }
        built[v] = b.add(t.label(v).clone(), kids)?;
    }
    Ok(b.build(built[t.root()])?)
}
