//! Exact unordered tree edit distance by branch-and-bound over Tai mappings.
//!
//! Nodes of the first tree are decided in preorder. Each one is mapped to a
//! compatible node of the second tree (ascending id) or deleted, which is
//! tried last. A complete search therefore visits mappings in lexicographic
//! order of their image vectors with "deleted" sorting after every node, and
//! the first optimum it accepts is the canonical witness.
//!
//! The bound at a search node partitions the undecided nodes into regions
//! keyed by their nearest mapped ancestor; a node of the second tree can only
//! be matched inside the region of its nearest used ancestor. Nodes that can
//! no longer be matched at all count as insertions.

use crate::budget::{Budget, SearchLimits};
use crate::cost::CostModel;
use crate::model::{EditMapping, Tree};
use crate::ordered::{ordered_with_mapping, reject_variables, TedError, TedResult};
use crate::pair::{histogram_bound, size_bound, HistScratch, Indexed, PairCosts, Prepared, NO_PARENT};

pub(crate) const EPS: f64 = 1e-9;

const NONE: usize = usize::MAX;

/// Exact unordered edit distance between variable-free trees. When the
/// budget runs out the best mapping found so far is returned with
/// `optimal == false`.
pub fn ted_unordered(t1: &Tree, t2: &Tree, c: &CostModel, budget: &Budget) -> Result<TedResult, TedError> {
    reject_variables(t1, t2)?;
    let prep = Prepared::new(t1, t2, c);
    let mut limits = budget.start_search();
    let out = exact(&prep.left.tree, &prep.right.tree, prep.base(), &mut limits);
    Ok(TedResult {
        distance: out.cost,
        mapping: EditMapping::new(out.pairs.unwrap_or_default()),
        optimal: out.complete,
        expansions: out.expansions,
    })
}

/// Admissible lower bound on the unordered (and hence the ordered) edit
/// distance: the larger of the size-difference bound and the label-histogram
/// bound. Variables are treated as distinct fresh constants.
pub fn lower_bound(t1: &Tree, t2: &Tree, c: &CostModel) -> f64 {
    let prep = Prepared::new(t1, t2, c);
    let costs = prep.base();
    let hist = histogram_bound(costs, &prep.left.tree.label, &prep.right.tree.label, &mut HistScratch::default());
    hist.max(size_bound(t1.size(), t2.size(), costs))
}

/// Ordered incumbent followed by the exact search.
pub(crate) fn exact(t1: &Indexed, t2: &Indexed, c: &PairCosts, limits: &mut SearchLimits) -> Outcome {
    let (zs, pairs) = ordered_with_mapping(t1, t2, c);
    search(t1, t2, c, Start { cost: zs, pairs: Some(pairs), strict: false }, Goal::Minimize, limits)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Goal {
    /// Find the canonical minimum-cost mapping.
    Minimize,
    /// Stop at the first mapping of cost at most the threshold.
    Decide(f64),
}

/// Initial incumbent. With `strict` set only mappings strictly cheaper than
/// `cost` are accepted (used when `cost` is an external cutoff or already a
/// canonical optimum); otherwise mappings of equal cost replace it.
#[derive(Debug, Clone)]
pub(crate) struct Start {
    pub cost: f64,
    pub pairs: Option<Vec<(usize, usize)>>,
    pub strict: bool,
}

#[derive(Debug, Clone)]
pub(crate) struct Outcome {
    pub cost: f64,
    /// Witness of `cost`; `None` when nothing beat a witness-less cutoff.
    pub pairs: Option<Vec<(usize, usize)>>,
    /// True when the search finished (or proved its answer) within budget.
    pub complete: bool,
    /// True when at least one mapping was accepted by the search itself.
    pub improved: bool,
    pub expansions: u64,
}

struct Frame {
    p: usize,
    acc_before: f64,
    next_w: usize,
    end: usize,
    tried_delete: bool,
    applied: bool,
}

struct State<'a> {
    t1: &'a Indexed,
    t2: &'a Indexed,
    c: &'a PairCosts,
    img: Vec<usize>,
    pre: Vec<usize>,
    used_sub: Vec<u32>,
    nma: Vec<usize>,
    region1: Vec<usize>,
    region2: Vec<usize>,
    left: Vec<Vec<u32>>,
    right: Vec<Vec<u32>>,
    scratch: HistScratch,
}

impl State<'_> {
    fn set(&mut self, p: usize, w: usize) {
        self.img[p] = w;
        self.pre[w] = p;
        let mut u = w;
        while u != NO_PARENT {
            self.used_sub[u] += 1;
            u = self.t2.parent[u];
        }
    }

    fn unset(&mut self, p: usize) {
        let w = self.img[p];
        if w == NONE {
            return;
        }
        self.img[p] = NONE;
        self.pre[w] = NONE;
        let mut u = w;
        while u != NO_PARENT {
            self.used_sub[u] -= 1;
            u = self.t2.parent[u];
        }
    }

    /// Bound on the cost of completing a partial mapping in which nodes
    /// `0..decided` of the first tree are decided.
    fn remaining_bound(&mut self, decided: usize) -> f64 {
        let (t1, t2) = (self.t1, self.t2);
        for b in self.left.iter_mut().chain(self.right.iter_mut()) {
            b.clear();
        }
        for v in decided..t1.n {
            let q = t1.parent[v];
            // region key: nearest decided mapped ancestor + 1, or 0
            self.region1[v] = if q == NO_PARENT {
                0
            } else if q < decided {
                if self.img[q] != NONE {
                    q + 1
                } else if self.nma[q] == NONE {
                    0
                } else {
                    self.nma[q] + 1
                }
            } else {
                self.region1[q]
            };
            self.left[self.region1[v]].push(t1.label[v]);
        }
        let mut dead = 0.0;
        for w in 0..t2.n {
            let u = t2.parent[w];
            self.region2[w] = if u == NO_PARENT {
                0
            } else if self.pre[u] != NONE {
                self.pre[u] + 1
            } else {
                self.region2[u]
            };
            if self.pre[w] != NONE {
                continue;
            }
            if self.used_sub[w] > 0 {
                dead += self.c.ins[t2.label[w] as usize];
            } else {
                self.right[self.region2[w]].push(t2.label[w]);
            }
        }
        let mut lb = dead;
        for k in 0..self.left.len() {
            if !self.left[k].is_empty() || !self.right[k].is_empty() {
                lb += histogram_bound(self.c, &self.left[k], &self.right[k], &mut self.scratch);
            }
        }
        lb
    }
}

pub(crate) fn search(
    t1: &Indexed,
    t2: &Indexed,
    c: &PairCosts,
    start: Start,
    goal: Goal,
    limits: &mut SearchLimits,
) -> Outcome {
    let before = limits.expansions;
    let mut best = start.cost;
    let mut best_pairs = start.pairs;
    let mut strict = start.strict;
    let mut improved = false;
    let done =
        |best_pairs: Option<Vec<(usize, usize)>>, best: f64, improved: bool, complete: bool, limits: &SearchLimits| {
            Outcome { cost: best, pairs: best_pairs, complete, improved, expansions: limits.expansions - before }
        };
    if let Goal::Decide(d) = goal {
        if best_pairs.is_some() && best <= d + EPS {
            return done(best_pairs, best, improved, true, limits);
        }
    }
    let mut st = State {
        t1,
        t2,
        c,
        img: vec![NONE; t1.n],
        pre: vec![NONE; t2.n],
        used_sub: vec![0; t2.n],
        nma: vec![NONE; t1.n],
        region1: vec![0; t1.n],
        region2: vec![0; t2.n],
        left: vec![Vec::new(); t1.n + 1],
        right: vec![Vec::new(); t1.n + 1],
        scratch: HistScratch::default(),
    };
    let root_lb = st.remaining_bound(0);
    let beaten = |lb: f64, best: f64, strict: bool| match goal {
        Goal::Decide(d) => lb > d + EPS,
        Goal::Minimize if strict => lb >= best - EPS,
        Goal::Minimize => lb > best + EPS,
    };
    if beaten(root_lb, best, strict) {
        return done(best_pairs, best, improved, true, limits);
    }
    let mut stack: Vec<Frame> = vec![frame(&st, 0, 0.0).frame];
    while let Some(f) = stack.last_mut() {
        let p = f.p;
        if f.applied {
            f.applied = false;
            st.unset(p);
        }
        // next option: the next compatible node of the second tree, then delete
        let mut choice = None;
        let mut w = f.next_w;
        while w < f.end {
            if st.pre[w] != NONE {
                w += t2.size[w];
            } else if st.used_sub[w] > 0 {
                w += 1;
            } else {
                choice = Some(w);
                break;
            }
        }
        let step = match choice {
            Some(w) => {
                f.next_w = w + 1;
                st.set(p, w);
                c.rel(t1.label[p], t2.label[w])
            }
            None if !f.tried_delete => {
                f.next_w = f.end;
                f.tried_delete = true;
                c.del[t1.label[p] as usize]
            }
            None => {
                stack.pop();
                continue;
            }
        };
        f.applied = true;
        let acc = f.acc_before + step;
        if !limits.expand() {
            return done(best_pairs, best, improved, false, limits);
        }
        let lb = acc + st.remaining_bound(p + 1);
        if beaten(lb, best, strict) {
            continue;
        }
        if p + 1 < t1.n {
            let next = frame(&st, p + 1, acc);
            st.nma[p + 1] = next.end_owner;
            stack.push(next.frame);
            continue;
        }
        // complete mapping; the bound is exact here
        let cost = lb;
        let accept = match goal {
            Goal::Decide(d) => cost <= d + EPS,
            Goal::Minimize if strict => cost < best - EPS,
            Goal::Minimize => cost <= best + EPS,
        };
        if accept {
            best = cost;
            best_pairs = Some((0..t1.n).filter(|&v| st.img[v] != NONE).map(|v| (v, st.img[v])).collect());
            strict = true;
            improved = true;
            if matches!(goal, Goal::Decide(_)) || best <= root_lb + EPS {
                return done(best_pairs, best, improved, true, limits);
            }
        }
    }
    done(best_pairs, best, improved, true, limits)
}

struct NewFrame {
    frame: Frame,
    end_owner: usize,
}

/// Frame for deciding node `p`, scanning the subtree of its nearest mapped
/// ancestor's image (or the whole second tree).
fn frame(st: &State<'_>, p: usize, acc: f64) -> NewFrame {
    let q = st.t1.parent[p];
    let a = if q == NO_PARENT {
        NONE
    } else if st.img[q] != NONE {
        q
    } else {
        st.nma[q]
    };
    let (start, end) = if a == NONE {
        (0, st.t2.n)
    } else {
        let w = st.img[a];
        (w + 1, w + st.t2.size[w])
    };
    NewFrame {
        frame: Frame { p, acc_before: acc, next_w: start, end, tried_delete: false, applied: false },
        end_owner: a,
    }
}
