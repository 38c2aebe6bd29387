//! Expression trees, labels, Euler strings and Tai edit mappings.
//!
//! Trees are stored as arenas whose node ids are the DFS preorder positions,
//! with the root at id `0`. Every public operation in the crate reports nodes
//! by these ids.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cost::{CostModel, EffectiveLabel};

/// Index of a node in a [`Tree`]; equal to its DFS preorder position.
pub type NodeId = usize;

/// Default upper bound on the number of nodes accepted by the parsers.
pub const DEFAULT_MAX_NODES: usize = 10_000;

const RESERVED: &[char] = &['(', ')', ',', ';'];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("label symbol must not be empty")]
    EmptySymbol,
    #[error("label symbol {0:?} contains whitespace or reserved punctuation")]
    InvalidSymbol(String),
    #[error("tree must contain at least one node")]
    Empty,
    #[error("variable {0} labels a non-leaf node")]
    VariableNotLeaf(String),
    #[error("node {0} has more than one parent")]
    MultipleParents(usize),
    #[error("child id {0} is out of range")]
    UnknownNode(usize),
    #[error("expected exactly one root, found {0}")]
    RootCount(usize),
    #[error("node graph contains a cycle or unreachable nodes")]
    Unreachable,
}

/// Whether node symbols are interpreted as constants or variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelKind {
    Constant,
    Variable,
}

/// A node symbol. Two labels are equal iff both kind and symbol match.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Label {
    kind: LabelKind,
    symbol: String,
}

impl Label {
    pub fn new(kind: LabelKind, symbol: impl Into<String>) -> Result<Self, TreeError> {
        let symbol = symbol.into();
        check_symbol(&symbol)?;
        Ok(Label { kind, symbol })
    }

    pub fn constant(symbol: impl Into<String>) -> Result<Self, TreeError> {
        Self::new(LabelKind::Constant, symbol)
    }

    pub fn variable(symbol: impl Into<String>) -> Result<Self, TreeError> {
        Self::new(LabelKind::Variable, symbol)
    }

    pub fn kind(&self) -> LabelKind {
        self.kind
    }

    pub fn symbol(&self) -> &str {
        &self.symbol
    }

    pub fn is_variable(&self) -> bool {
        self.kind == LabelKind::Variable
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.symbol)
    }
}

pub(crate) fn check_symbol(symbol: &str) -> Result<(), TreeError> {
    if symbol.is_empty() {
        return Err(TreeError::EmptySymbol);
    }
    if symbol.chars().any(|c| c.is_whitespace() || RESERVED.contains(&c)) {
        return Err(TreeError::InvalidSymbol(symbol.to_string()));
    }
    Ok(())
}

/// Comparison mode: whether sibling order is significant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Ordered,
    Unordered,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Ordered => f.write_str("ordered"),
            Mode::Unordered => f.write_str("unordered"),
        }
    }
}

/// A rooted, child-ordered labeled tree.
///
/// Immutable once built. Node ids follow DFS preorder, so the subtree of `v`
/// occupies the id range `v..v + subtree_size(v)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Tree {
    labels: Vec<Label>,
    children: Vec<Vec<NodeId>>,
    parent: Vec<Option<NodeId>>,
    subtree_size: Vec<usize>,
}

impl Tree {
    pub fn leaf(label: Label) -> Tree {
        Tree { labels: vec![label], children: vec![Vec::new()], parent: vec![None], subtree_size: vec![1] }
    }

    /// Builds `label(children...)`, copying the child trees.
    pub fn node(label: Label, children: Vec<Tree>) -> Result<Tree, TreeError> {
        if label.is_variable() && !children.is_empty() {
            return Err(TreeError::VariableNotLeaf(label.symbol));
        }
        let mut builder = TreeBuilder::new();
        let ids = children.iter().map(|c| builder.graft(c)).collect::<Vec<_>>();
        let root = builder.add(label, ids)?;
        builder.build(root)
    }

    /// Builds a tree from arbitrary node ids, validating the structure and
    /// renumbering nodes into preorder.
    pub fn from_nodes(labels: Vec<Label>, children: Vec<Vec<usize>>) -> Result<Tree, TreeError> {
        if labels.is_empty() {
            return Err(TreeError::Empty);
        }
        let n = labels.len();
        if children.len() != n {
            return Err(TreeError::UnknownNode(children.len().min(n)));
        }
        let mut has_parent = vec![false; n];
        for kids in &children {
            for &c in kids {
                if c >= n {
                    return Err(TreeError::UnknownNode(c));
                }
                if has_parent[c] {
                    return Err(TreeError::MultipleParents(c));
                }
                has_parent[c] = true;
            }
        }
        let roots: Vec<usize> = (0..n).filter(|&v| !has_parent[v]).collect();
        if roots.len() != 1 {
            return Err(TreeError::RootCount(roots.len()));
        }
        let builder = TreeBuilder { labels, children };
        builder.build(roots[0])
    }

    pub fn size(&self) -> usize {
        self.labels.len()
    }

    pub fn root(&self) -> NodeId {
        0
    }

    pub fn label(&self, v: NodeId) -> &Label {
        &self.labels[v]
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn children(&self, v: NodeId) -> &[NodeId] {
        &self.children[v]
    }

    pub fn parent(&self, v: NodeId) -> Option<NodeId> {
        self.parent[v]
    }

    pub fn subtree_size(&self, v: NodeId) -> usize {
        self.subtree_size[v]
    }

    pub fn is_leaf(&self, v: NodeId) -> bool {
        self.children[v].is_empty()
    }

    /// True iff `a` is a proper ancestor of `d`.
    pub fn is_ancestor(&self, a: NodeId, d: NodeId) -> bool {
        a < d && d < a + self.subtree_size[a]
    }

    pub fn depth(&self, mut v: NodeId) -> usize {
        let mut depth = 0;
        while let Some(p) = self.parent[v] {
            depth += 1;
            v = p;
        }
        depth
    }

    pub fn max_outdegree(&self) -> usize {
        self.children.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Largest number of tree neighbours (parent plus children) of any node.
    pub fn max_degree(&self) -> usize {
        (0..self.size()).map(|v| self.children[v].len() + usize::from(self.parent[v].is_some())).max().unwrap_or(0)
    }

    /// Distinct variable symbols occurring in the tree.
    pub fn variables(&self) -> BTreeSet<String> {
        self.labels.iter().filter(|l| l.is_variable()).map(|l| l.symbol.clone()).collect()
    }

    pub fn has_variables(&self) -> bool {
        self.labels.iter().any(Label::is_variable)
    }

    /// Node ids in postorder.
    pub fn postorder(&self) -> Vec<NodeId> {
        let mut out = Vec::with_capacity(self.size());
        let mut stack = vec![(0usize, 0usize)];
        while let Some((v, next)) = stack.pop() {
            if next < self.children[v].len() {
                stack.push((v, next + 1));
                stack.push((self.children[v][next], 0));
            } else {
                out.push(v);
            }
        }
        out
    }

    pub fn euler_string(&self) -> EulerString {
        let mut numbering: Vec<(String, u32)> = Vec::new();
        let mut tokens = Vec::with_capacity(2 * self.size());
        let mut canon = Vec::with_capacity(self.size());
        // Preorder ids give first-occurrence order directly.
        for l in &self.labels {
            let c = if l.is_variable() {
                let id = match numbering.iter().find(|(s, _)| *s == l.symbol) {
                    Some((_, id)) => *id,
                    None => {
                        let id = numbering.len() as u32 + 1;
                        numbering.push((l.symbol.clone(), id));
                        id
                    }
                };
                CanonicalLabel::Variable(id)
            } else {
                CanonicalLabel::Constant(l.symbol.clone())
            };
            canon.push(c);
        }
        let mut stack = vec![(0usize, 0usize)];
        tokens.push(EulerToken { direction: Direction::Open, label: canon[0].clone() });
        while let Some((v, next)) = stack.pop() {
            if next < self.children[v].len() {
                let c = self.children[v][next];
                stack.push((v, next + 1));
                tokens.push(EulerToken { direction: Direction::Open, label: canon[c].clone() });
                stack.push((c, 0));
            } else {
                tokens.push(EulerToken { direction: Direction::Close, label: canon[v].clone() });
            }
        }
        EulerString { tokens }
    }

    /// Effective labels under the empty substitution: every distinct variable
    /// becomes its own fresh constant.
    pub(crate) fn unsubstituted_labels(&self, fresh_base: u32) -> Vec<EffectiveLabel> {
        let vars: Vec<String> = self.variables().into_iter().collect();
        self.labels
            .iter()
            .map(|l| {
                if l.is_variable() {
                    let k = vars.binary_search(&l.symbol).expect("variable listed");
                    EffectiveLabel::Fresh(fresh_base + k as u32)
                } else {
                    EffectiveLabel::Constant(l.symbol.clone())
                }
            })
            .collect()
    }
}

impl fmt::Display for Tree {
    /// Canonical dump: `label(child,child,...)`, leaves printed bare.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut stack = vec![(0usize, 0usize)];
        f.write_str(&self.labels[0].symbol)?;
        while let Some((v, next)) = stack.pop() {
            let kids = &self.children[v];
            if next < kids.len() {
                f.write_str(if next == 0 { "(" } else { "," })?;
                f.write_str(&self.labels[kids[next]].symbol)?;
                stack.push((v, next + 1));
                stack.push((kids[next], 0));
            } else if !kids.is_empty() {
                f.write_str(")")?;
            }
        }
        Ok(())
    }
}

/// Arena builder; nodes may be added in any order and are renumbered into
/// preorder by [`TreeBuilder::build`].
#[derive(Debug, Default)]
pub struct TreeBuilder {
    labels: Vec<Label>,
    children: Vec<Vec<usize>>,
}

impl TreeBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn add(&mut self, label: Label, children: Vec<usize>) -> Result<usize, TreeError> {
        if label.is_variable() && !children.is_empty() {
            return Err(TreeError::VariableNotLeaf(label.symbol));
        }
        if let Some(&c) = children.iter().find(|&&c| c >= self.labels.len()) {
            return Err(TreeError::UnknownNode(c));
        }
        self.labels.push(label);
        self.children.push(children);
        Ok(self.labels.len() - 1)
    }

    /// Copies `tree` into the arena and returns the id of its root.
    pub fn graft(&mut self, tree: &Tree) -> usize {
        let offset = self.labels.len();
        self.labels.extend(tree.labels.iter().cloned());
        self.children.extend(tree.children.iter().map(|k| k.iter().map(|&c| c + offset).collect()));
        offset
    }

    pub fn build(self, root: usize) -> Result<Tree, TreeError> {
        let n = self.labels.len();
        if n == 0 {
            return Err(TreeError::Empty);
        }
        if root >= n {
            return Err(TreeError::UnknownNode(root));
        }
        let mut order = Vec::with_capacity(n);
        let mut seen = vec![false; n];
        let mut stack = vec![root];
        while let Some(v) = stack.pop() {
            if seen[v] {
                return Err(TreeError::Unreachable);
            }
            seen[v] = true;
            order.push(v);
            if order.len() > n {
                return Err(TreeError::Unreachable);
            }
            stack.extend(self.children[v].iter().rev().copied());
        }
        if order.len() != n {
            return Err(TreeError::Unreachable);
        }
        let mut new_id = vec![0usize; n];
        for (i, &v) in order.iter().enumerate() {
            new_id[v] = i;
        }
        let mut labels = Vec::with_capacity(n);
        let mut children = Vec::with_capacity(n);
        let mut parent = vec![None; n];
        let mut slots: Vec<Option<Label>> = self.labels.into_iter().map(Some).collect();
        for &v in &order {
            let label = slots[v].take().expect("each node visited once");
            if label.is_variable() && !self.children[v].is_empty() {
                return Err(TreeError::VariableNotLeaf(label.symbol));
            }
            labels.push(label);
            let kids: Vec<usize> = self.children[v].iter().map(|&c| new_id[c]).collect();
            for &c in &kids {
                parent[c] = Some(new_id[v]);
            }
            children.push(kids);
        }
        let mut subtree_size = vec![1usize; n];
        for v in (0..n).rev() {
            if let Some(p) = parent[v] {
                subtree_size[p] += subtree_size[v];
            }
        }
        Ok(Tree { labels, children, parent, subtree_size })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Open,
    Close,
}

/// Label as it appears in an Euler string: constants verbatim, variables
/// renumbered `$1, $2, ...` by first occurrence.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum CanonicalLabel {
    Constant(String),
    Variable(u32),
}

impl fmt::Display for CanonicalLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CanonicalLabel::Constant(s) => f.write_str(s),
            CanonicalLabel::Variable(k) => write!(f, "${k}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EulerToken {
    pub direction: Direction,
    pub label: CanonicalLabel,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EulerString {
    tokens: Vec<EulerToken>,
}

impl EulerString {
    pub fn tokens(&self) -> &[EulerToken] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

impl fmt::Display for EulerString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, t) in self.tokens.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            match t.direction {
                Direction::Open => write!(f, "<{}", t.label)?,
                Direction::Close => write!(f, "{}>", t.label)?,
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MappingError {
    #[error("pair ({0}, {1}) refers to a node outside the trees")]
    OutOfRange(NodeId, NodeId),
    #[error("node {0} of the first tree is mapped twice")]
    DuplicateLeft(NodeId),
    #[error("node {0} of the second tree is mapped twice")]
    DuplicateRight(NodeId),
    #[error("pairs ({0}, {1}) and ({2}, {3}) violate ancestor order")]
    Ancestry(NodeId, NodeId, NodeId, NodeId),
    #[error("pairs ({0}, {1}) and ({2}, {3}) violate sibling order")]
    SiblingOrder(NodeId, NodeId, NodeId, NodeId),
}

/// A Tai mapping between two trees, stored as pairs sorted by
/// `(t1 node, t2 node)`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EditMapping {
    pairs: Vec<(NodeId, NodeId)>,
}

impl EditMapping {
    pub fn new(mut pairs: Vec<(NodeId, NodeId)>) -> Self {
        pairs.sort_unstable();
        EditMapping { pairs }
    }

    pub fn identity(n: usize) -> Self {
        EditMapping { pairs: (0..n).map(|v| (v, v)).collect() }
    }

    pub fn pairs(&self) -> &[(NodeId, NodeId)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Checks one-to-one, ancestor preservation, and in ordered mode
    /// sibling-order preservation.
    pub fn validate(&self, t1: &Tree, t2: &Tree, mode: Mode) -> Result<(), MappingError> {
        let mut left = vec![false; t1.size()];
        let mut right = vec![false; t2.size()];
        for &(v, w) in &self.pairs {
            if v >= t1.size() || w >= t2.size() {
                return Err(MappingError::OutOfRange(v, w));
            }
            if std::mem::replace(&mut left[v], true) {
                return Err(MappingError::DuplicateLeft(v));
            }
            if std::mem::replace(&mut right[w], true) {
                return Err(MappingError::DuplicateRight(w));
            }
        }
        for (i, &(v, w)) in self.pairs.iter().enumerate() {
            for &(v2, w2) in &self.pairs[i + 1..] {
                if t1.is_ancestor(v, v2) != t2.is_ancestor(w, w2) || t1.is_ancestor(v2, v) != t2.is_ancestor(w2, w) {
                    return Err(MappingError::Ancestry(v, w, v2, w2));
                }
                if mode == Mode::Ordered && (v < v2) != (w < w2) {
                    return Err(MappingError::SiblingOrder(v, w, v2, w2));
                }
            }
        }
        Ok(())
    }

    /// T1 nodes left unmapped.
    pub fn deleted(&self, t1: &Tree) -> Vec<NodeId> {
        let mut mapped = vec![false; t1.size()];
        for &(v, _) in &self.pairs {
            mapped[v] = true;
        }
        (0..t1.size()).filter(|&v| !mapped[v]).collect()
    }

    /// T2 nodes left unmapped.
    pub fn inserted(&self, t2: &Tree) -> Vec<NodeId> {
        let mut mapped = vec![false; t2.size()];
        for &(_, w) in &self.pairs {
            mapped[w] = true;
        }
        (0..t2.size()).filter(|&w| !mapped[w]).collect()
    }
}

/// Cost of a mapping on trees whose variables are left unsubstituted (each
/// distinct variable behaves as its own fresh constant).
///
/// Validation uses the unordered constraints, which any ordered mapping also
/// satisfies.
pub fn mapping_cost(m: &EditMapping, t1: &Tree, t2: &Tree, c: &CostModel) -> Result<f64, MappingError> {
    let l1 = t1.unsubstituted_labels(0);
    let l2 = t2.unsubstituted_labels(t1.variables().len() as u32);
    effective_mapping_cost(m, t1, &l1, t2, &l2, c)
}

pub(crate) fn effective_mapping_cost(
    m: &EditMapping,
    t1: &Tree,
    l1: &[EffectiveLabel],
    t2: &Tree,
    l2: &[EffectiveLabel],
    c: &CostModel,
) -> Result<f64, MappingError> {
    m.validate(t1, t2, Mode::Unordered)?;
    let mut total = 0.0;
    for &(v, w) in m.pairs() {
        total += c.relabel_cost(&l1[v], &l2[w]);
    }
    for v in m.deleted(t1) {
        total += c.delete_cost(&l1[v]);
    }
    for w in m.inserted(t2) {
        total += c.insert_cost(&l2[w]);
    }
    Ok(total)
}
