//! Edit distance between trees with variables.
//!
//! A substitution is represented by the pairing it induces between the two
//! trees' variable sets: paired variables share one fresh constant, every
//! other variable gets its own. Pairing two variables never raises any edit
//! cost, so only total injective pairings of the smaller set are searched.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::budget::Budget;
use crate::cost::{CostModel, EffectiveLabel};
use crate::model::{effective_mapping_cost, EditMapping, MappingError, Mode, Tree};
use crate::ordered::{ordered_distance, ordered_with_mapping, ZsScratch};
use crate::pair::{assignment_bound, histogram_bound, size_bound, HistScratch, PairCosts, Prepared};
use crate::unordered::{search, Goal, Start, EPS};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SubstitutionError {
    #[error("variable {0} is paired more than once")]
    Repeated(String),
}

/// A pairing between variables of a left and a right tree, sorted by the
/// left variable.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize)]
pub struct Substitution {
    pairs: Vec<(String, String)>,
}

impl Substitution {
    pub fn new(mut pairs: Vec<(String, String)>) -> Result<Self, SubstitutionError> {
        pairs.sort();
        for (i, a) in pairs.iter().enumerate() {
            for b in &pairs[i + 1..] {
                if a.0 == b.0 {
                    return Err(SubstitutionError::Repeated(a.0.clone()));
                }
                if a.1 == b.1 {
                    return Err(SubstitutionError::Repeated(a.1.clone()));
                }
            }
        }
        Ok(Substitution { pairs })
    }

    pub fn empty() -> Self {
        Substitution::default()
    }

    pub fn pairs(&self) -> &[(String, String)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Partner of a left-tree variable.
    pub fn image(&self, left: &str) -> Option<&str> {
        self.pairs.iter().find(|(a, _)| a == left).map(|(_, b)| b.as_str())
    }

    /// Partner of a right-tree variable.
    pub fn preimage(&self, right: &str) -> Option<&str> {
        self.pairs.iter().find(|(_, b)| b == right).map(|(a, _)| a.as_str())
    }

    /// The same pairing seen from the other side.
    pub fn swapped(&self) -> Substitution {
        let mut pairs: Vec<(String, String)> = self.pairs.iter().map(|(a, b)| (b.clone(), a.clone())).collect();
        pairs.sort();
        Substitution { pairs }
    }

    fn from_indices(pairs: &[(usize, usize)], left: &[String], right: &[String]) -> Self {
        let mut pairs: Vec<(String, String)> =
            pairs.iter().map(|&(i, j)| (left[i].clone(), right[j].clone())).collect();
        pairs.sort();
        Substitution { pairs }
    }

    fn indices(&self, left: &[String], right: &[String]) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = self
            .pairs
            .iter()
            .filter_map(|(a, b)| Some((left.binary_search(a).ok()?, right.binary_search(b).ok()?)))
            .collect();
        out.sort_unstable();
        out
    }
}

impl fmt::Display for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (k, (a, b)) in self.pairs.iter().enumerate() {
            if k > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{a}={b}")?;
        }
        f.write_str("}")
    }
}

/// Iterator over all total injective pairings of the smaller variable set
/// into the larger (the left set when sizes tie), in lexicographic order of
/// the smaller side's images.
#[derive(Debug, Clone)]
pub struct Substitutions {
    small: Vec<String>,
    large: Vec<String>,
    small_is_left: bool,
    images: Vec<usize>,
    used: Vec<bool>,
    done: bool,
}

pub fn enumerate_substitutions<S: AsRef<str>>(vars1: &[S], vars2: &[S]) -> Substitutions {
    let mut v1: Vec<String> = vars1.iter().map(|s| s.as_ref().to_string()).collect();
    let mut v2: Vec<String> = vars2.iter().map(|s| s.as_ref().to_string()).collect();
    v1.sort();
    v1.dedup();
    v2.sort();
    v2.dedup();
    let small_is_left = v1.len() <= v2.len();
    let (small, large) = if small_is_left { (v1, v2) } else { (v2, v1) };
    let m = small.len();
    let mut used = vec![false; large.len()];
    for u in used.iter_mut().take(m) {
        *u = true;
    }
    Substitutions { images: (0..m).collect(), used, small, large, small_is_left, done: false }
}

impl Substitutions {
    /// Number of items the iterator yields in total.
    pub fn count_total(&self) -> u128 {
        let (m, n) = (self.small.len() as u128, self.large.len() as u128);
        (n - m + 1..=n).product()
    }

    fn advance(&mut self) {
        let m = self.images.len();
        let n = self.large.len();
        for k in (0..m).rev() {
            self.used[self.images[k]] = false;
            let mut j = self.images[k] + 1;
            while j < n && self.used[j] {
                j += 1;
            }
            if j < n {
                self.images[k] = j;
                self.used[j] = true;
                // refill the tail with the smallest free images
                let mut next = 0;
                for slot in k + 1..m {
                    while self.used[next] {
                        next += 1;
                    }
                    self.images[slot] = next;
                    self.used[next] = true;
                }
                return;
            }
        }
        self.done = true;
    }
}

impl Iterator for Substitutions {
    type Item = Substitution;

    fn next(&mut self) -> Option<Substitution> {
        if self.done {
            return None;
        }
        let pairs = self
            .images
            .iter()
            .enumerate()
            .map(|(k, &j)| {
                let (s, l) = (self.small[k].clone(), self.large[j].clone());
                if self.small_is_left {
                    (s, l)
                } else {
                    (l, s)
                }
            })
            .collect();
        let out = Substitution::new(pairs).expect("injective by construction");
        self.advance();
        Some(out)
    }
}

/// Which input a tree is when a substitution is applied to it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// A tree together with the effective label of every node after a
/// substitution.
#[derive(Debug, Clone, PartialEq)]
pub struct SubstitutedTree {
    pub tree: Tree,
    pub labels: Vec<EffectiveLabel>,
}

/// Relabels variable leaves with fresh classes: the `k`-th pair of `theta`
/// becomes class `3k`, the `i`-th unpaired left variable (in sorted order of
/// the tree's own variables) class `3i+1`, an unpaired right variable `3i+2`.
pub fn apply_substitution(t: &Tree, theta: &Substitution, side: Side) -> SubstitutedTree {
    let vars: Vec<String> = t.variables().into_iter().collect();
    let class: Vec<u32> = vars
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let paired = theta.pairs.iter().position(|(a, b)| match side {
                Side::Left => a == x,
                Side::Right => b == x,
            });
            match (paired, side) {
                (Some(k), _) => 3 * k as u32,
                (None, Side::Left) => 3 * i as u32 + 1,
                (None, Side::Right) => 3 * i as u32 + 2,
            }
        })
        .collect();
    let labels = t
        .labels()
        .iter()
        .map(|l| {
            if l.is_variable() {
                EffectiveLabel::Fresh(class[vars.binary_search_by(|s| s.as_str().cmp(l.symbol())).expect("listed")])
            } else {
                EffectiveLabel::Constant(l.symbol().to_string())
            }
        })
        .collect();
    SubstitutedTree { tree: t.clone(), labels }
}

/// Cost of an edit mapping between two substituted trees.
pub fn substituted_mapping_cost(
    m: &EditMapping,
    s1: &SubstitutedTree,
    s2: &SubstitutedTree,
    c: &CostModel,
) -> Result<f64, MappingError> {
    effective_mapping_cost(m, &s1.tree, &s1.labels, &s2.tree, &s2.labels, c)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VarDistResult {
    /// Best distance found; exact when `optimal`.
    pub distance: f64,
    /// Proven lower bound; equals `distance` when `optimal`.
    pub lower_bound: f64,
    pub theta: Substitution,
    #[serde(serialize_with = "serialize_mapping")]
    pub mapping: EditMapping,
    pub optimal: bool,
}

fn serialize_mapping<S: serde::Serializer>(m: &EditMapping, s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(m.pairs())
}

/// Distance under one fixed substitution (the inner edit distance of the
/// substituted trees).
pub fn dist_under(
    t1: &Tree,
    t2: &Tree,
    theta: &Substitution,
    mode: Mode,
    c: &CostModel,
    budget: &Budget,
) -> VarDistResult {
    let prep = Prepared::new(t1, t2, c);
    let pairs = theta.indices(&prep.left.vars, &prep.right.vars);
    let e = evaluate(&prep, &pairs, mode, budget, f64::INFINITY, &mut Scratch::default());
    let mapping =
        e.mapping.unwrap_or_else(|| ordered_with_mapping(&prep.left.tree, &prep.right.tree, &prep.costs_for(&pairs)).1);
    VarDistResult {
        distance: e.cost,
        lower_bound: if e.complete { e.cost } else { 0.0 },
        theta: Substitution::from_indices(&pairs, &prep.left.vars, &prep.right.vars),
        mapping: EditMapping::new(mapping),
        optimal: e.complete,
    }
}

/// Tree edit distance with variables: the minimum inner distance over all
/// substitutions. The witness is the first optimal substitution in
/// enumeration order.
pub fn dist_with_vars(t1: &Tree, t2: &Tree, mode: Mode, c: &CostModel, budget: &Budget) -> VarDistResult {
    let prep = Prepared::new(t1, t2, c);
    dist_prepared(&prep, mode, budget)
}

pub(crate) fn dist_prepared(prep: &Prepared, mode: Mode, budget: &Budget) -> VarDistResult {
    let mut s = ThetaSearch::new(prep, mode, budget, None);
    s.run();
    if s.best_pairs.is_none() {
        // stopped before any leaf: fall back to the first pairing's ordered alignment
        let pairs = s.first_pairs();
        let (d, m) = ordered_with_mapping(&prep.left.tree, &prep.right.tree, &prep.costs_for(&pairs));
        s.best = d;
        s.best_pairs = Some(pairs);
        s.best_mapping = Some(m);
        s.optimal = false;
    }
    let pairs = s.best_pairs.clone().expect("set above");
    let mapping = match s.best_mapping.take() {
        Some(m) => m,
        None => ordered_with_mapping(&prep.left.tree, &prep.right.tree, &prep.costs_for(&pairs)).1,
    };
    let optimal = s.optimal;
    VarDistResult {
        distance: s.best,
        lower_bound: if optimal { s.best } else { s.root_lb.min(s.best) },
        theta: Substitution::from_indices(&pairs, &prep.left.vars, &prep.right.vars),
        mapping: EditMapping::new(mapping),
        optimal,
    }
}

/// Answer to "is the distance at most `threshold`?".
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdResult {
    /// `Some(true)` with a witness, `Some(false)` when the search proved no
    /// substitution reaches the threshold, `None` when the budget ran out
    /// first.
    pub within: Option<bool>,
    pub distance: Option<f64>,
    pub theta: Option<Substitution>,
    #[serde(serialize_with = "serialize_opt_mapping")]
    pub mapping: Option<EditMapping>,
}

fn serialize_opt_mapping<S: serde::Serializer>(m: &Option<EditMapping>, s: S) -> Result<S::Ok, S::Error> {
    match m {
        Some(m) => s.collect_seq(m.pairs()),
        None => s.serialize_none(),
    }
}

/// Decision version of [`dist_with_vars`]; stops at the first substitution
/// whose distance is at most `threshold`.
pub fn dist_with_vars_within(
    t1: &Tree,
    t2: &Tree,
    mode: Mode,
    c: &CostModel,
    budget: &Budget,
    threshold: f64,
) -> ThresholdResult {
    let prep = Prepared::new(t1, t2, c);
    let mut s = ThetaSearch::new(&prep, mode, budget, Some(threshold));
    s.run();
    match s.best_pairs.clone() {
        Some(pairs) if s.best <= threshold + EPS => {
            let mapping = match s.best_mapping.take() {
                Some(m) => m,
                None => ordered_with_mapping(&prep.left.tree, &prep.right.tree, &prep.costs_for(&pairs)).1,
            };
            ThresholdResult {
                within: Some(true),
                distance: Some(s.best),
                theta: Some(Substitution::from_indices(&pairs, &prep.left.vars, &prep.right.vars)),
                mapping: Some(EditMapping::new(mapping)),
            }
        }
        _ => ThresholdResult {
            within: if s.optimal { Some(false) } else { None },
            distance: None,
            theta: None,
            mapping: None,
        },
    }
}

#[derive(Debug, Default)]
pub(crate) struct Scratch {
    zs: ZsScratch,
    hist: HistScratch,
}

/// Result of evaluating one pairing.
#[derive(Debug, Clone)]
pub(crate) struct Eval {
    /// The inner distance when `improved`, otherwise no better than the cutoff.
    pub cost: f64,
    /// Unordered witness; ordered witnesses are recomputed on demand.
    pub mapping: Option<Vec<(usize, usize)>>,
    pub improved: bool,
    pub complete: bool,
}

/// Inner distance under a pairing, looking only for values strictly below
/// `cutoff` (pass infinity for the exact value).
pub(crate) fn evaluate(
    prep: &Prepared,
    pairs: &[(usize, usize)],
    mode: Mode,
    budget: &Budget,
    cutoff: f64,
    scratch: &mut Scratch,
) -> Eval {
    let (t1, t2) = (&prep.left.tree, &prep.right.tree);
    let costs = prep.costs_for(pairs);
    let skip = Eval { cost: cutoff, mapping: None, improved: false, complete: true };
    if cutoff.is_finite() {
        let lb = histogram_bound(&costs, &t1.label, &t2.label, &mut scratch.hist).max(size_bound(t1.n, t2.n, &costs));
        if lb >= cutoff - EPS {
            return skip;
        }
    }
    match mode {
        Mode::Ordered => {
            let d = ordered_distance(t1, t2, &costs, &mut scratch.zs);
            if d < cutoff - EPS {
                Eval { cost: d, mapping: None, improved: true, complete: true }
            } else {
                skip
            }
        }
        Mode::Unordered => {
            let (zs, zs_pairs) = ordered_with_mapping(t1, t2, &costs);
            let start = if zs < cutoff - EPS {
                Start { cost: zs, pairs: Some(zs_pairs), strict: false }
            } else {
                Start { cost: cutoff, pairs: None, strict: true }
            };
            let heuristic = start.pairs.is_some();
            let mut limits = budget.start_search();
            let out = search(t1, t2, &costs, start, Goal::Minimize, &mut limits);
            if heuristic || out.improved {
                Eval { cost: out.cost, mapping: out.pairs, improved: true, complete: out.complete }
            } else {
                Eval { cost: cutoff, mapping: None, improved: false, complete: out.complete }
            }
        }
    }
}

/// First pairing (in enumeration order) whose inner distance is at most
/// `threshold`, if the search finds one.
fn decide_leaf(
    prep: &Prepared,
    costs: &PairCosts,
    mode: Mode,
    budget: &Budget,
    threshold: f64,
    scratch: &mut Scratch,
) -> Eval {
    let (t1, t2) = (&prep.left.tree, &prep.right.tree);
    let no = Eval { cost: f64::INFINITY, mapping: None, improved: false, complete: true };
    let lb = histogram_bound(costs, &t1.label, &t2.label, &mut scratch.hist).max(size_bound(t1.n, t2.n, costs));
    if lb > threshold + EPS {
        return no;
    }
    match mode {
        Mode::Ordered => {
            let d = ordered_distance(t1, t2, costs, &mut scratch.zs);
            if d <= threshold + EPS {
                Eval { cost: d, mapping: None, improved: true, complete: true }
            } else {
                no
            }
        }
        Mode::Unordered => {
            let (zs, zs_pairs) = ordered_with_mapping(t1, t2, costs);
            let mut limits = budget.start_search();
            let start = Start { cost: zs, pairs: Some(zs_pairs), strict: false };
            let out = search(t1, t2, costs, start, Goal::Decide(threshold), &mut limits);
            if out.cost <= threshold + EPS {
                Eval { cost: out.cost, mapping: out.pairs, improved: true, complete: true }
            } else {
                Eval { complete: out.complete, ..no }
            }
        }
    }
}

/// Branch-and-bound over pairings: the smaller variable set is assigned in
/// sorted order, images ascending; internal nodes are bounded by relaxing
/// all still-free variables to pair with each other at zero cost.
struct ThetaSearch<'a> {
    prep: &'a Prepared,
    mode: Mode,
    budget: &'a Budget,
    threshold: Option<f64>,
    small_is_left: bool,
    m_small: usize,
    m_large: usize,
    best: f64,
    best_pairs: Option<Vec<(usize, usize)>>,
    best_mapping: Option<Vec<(usize, usize)>>,
    optimal: bool,
    root_lb: f64,
    scratch: Scratch,
    images: Vec<usize>,
    used: Vec<bool>,
}

impl<'a> ThetaSearch<'a> {
    fn new(prep: &'a Prepared, mode: Mode, budget: &'a Budget, threshold: Option<f64>) -> Self {
        let (m1, m2) = (prep.left.vars.len(), prep.right.vars.len());
        let small_is_left = m1 <= m2;
        let (m_small, m_large) = if small_is_left { (m1, m2) } else { (m2, m1) };
        ThetaSearch {
            prep,
            mode,
            budget,
            threshold,
            small_is_left,
            m_small,
            m_large,
            best: f64::INFINITY,
            best_pairs: None,
            best_mapping: None,
            optimal: true,
            root_lb: 0.0,
            scratch: Scratch::default(),
            images: Vec::with_capacity(m_small),
            used: vec![false; m_large],
        }
    }

    fn pairs(&self) -> Vec<(usize, usize)> {
        self.images.iter().enumerate().map(|(k, &j)| if self.small_is_left { (k, j) } else { (j, k) }).collect()
    }

    fn first_pairs(&self) -> Vec<(usize, usize)> {
        (0..self.m_small).map(|k| (k, k)).collect()
    }

    fn relaxed_bound(&mut self) -> f64 {
        let pairs = self.pairs();
        let k = self.images.len();
        let free_small: Vec<usize> = (k..self.m_small).collect();
        let free_large: Vec<usize> = (0..self.m_large).filter(|&j| !self.used[j]).collect();
        let (fl, fr) = if self.small_is_left { (free_small, free_large) } else { (free_large, free_small) };
        let costs = self.prep.relaxed_costs(&pairs, &fl, &fr);
        let (t1, t2) = (&self.prep.left.tree, &self.prep.right.tree);
        match self.mode {
            Mode::Ordered => ordered_distance(t1, t2, &costs, &mut self.scratch.zs),
            Mode::Unordered => assignment_bound(&costs, &t1.label, &t2.label),
        }
    }

    fn pruned(&self, lb: f64) -> bool {
        match self.threshold {
            Some(d) => lb > d + EPS,
            None => lb >= self.best - EPS,
        }
    }

    fn run(&mut self) {
        if self.m_small > 0 {
            self.root_lb = self.relaxed_bound();
        }
        self.descend();
    }

    /// Returns false when the search should stop.
    fn descend(&mut self) -> bool {
        if self.budget.deadline_passed() {
            self.optimal = false;
            return false;
        }
        if self.images.len() == self.m_small {
            return self.leaf();
        }
        for j in 0..self.m_large {
            if self.used[j] {
                continue;
            }
            self.images.push(j);
            self.used[j] = true;
            let go = if self.images.len() < self.m_small {
                let lb = self.relaxed_bound();
                !self.pruned(lb)
            } else {
                true
            };
            let keep = !go || self.descend();
            self.used[j] = false;
            self.images.pop();
            if !keep {
                return false;
            }
        }
        true
    }

    fn leaf(&mut self) -> bool {
        let pairs = self.pairs();
        match self.threshold {
            Some(d) => {
                let costs = self.prep.costs_for(&pairs);
                let e = decide_leaf(self.prep, &costs, self.mode, self.budget, d, &mut self.scratch);
                self.optimal &= e.complete;
                if e.improved {
                    self.best = e.cost;
                    self.best_pairs = Some(pairs);
                    self.best_mapping = e.mapping;
                    return false;
                }
                true
            }
            None => {
                let e = evaluate(self.prep, &pairs, self.mode, self.budget, self.best, &mut self.scratch);
                self.optimal &= e.complete;
                if e.improved && (e.cost < self.best - EPS || self.best_pairs.is_none()) {
                    self.best = e.cost;
                    self.best_pairs = Some(pairs);
                    self.best_mapping = e.mapping;
                    if self.best <= self.root_lb + EPS && self.optimal {
                        return false;
                    }
                }
                true
            }
        }
    }
}
