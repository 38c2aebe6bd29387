//! Distances between systems of first-order differential equations.
//!
//! `system_dist` pairs equations through one global pairing of the system
//! variables, which is also the substitution applied to every right-hand
//! side. `system_pdist` lets every equation pair choose its own substitution
//! and matches equations by a minimum-weight perfect matching, which makes it
//! a lower bound of `system_dist`.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::budget::Budget;
use crate::cost::{CostModel, EffectiveLabel};
use crate::matching::solve_assignment;
use crate::model::{Mode, Tree};
use crate::pair::Prepared;
use crate::unordered::EPS;
use crate::vars::{dist_prepared, evaluate, Scratch, Substitution, VarDistResult};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SystemError {
    #[error("empty system")]
    Empty,
    #[error("variable {0} has more than one equation")]
    DuplicateLhs(String),
    #[error("equation for {lhs} uses variable {var}, which has no equation")]
    UnknownVariable { lhs: String, var: String },
    #[error("equation for {0}: the left-hand side must be a plain identifier")]
    BadLhs(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Equation {
    pub lhs: String,
    pub rhs: Tree,
}

/// An elementary system: one equation per variable, right-hand sides over
/// the system's own variables.
#[derive(Debug, Clone, PartialEq)]
pub struct OdeSystem {
    equations: Vec<Equation>,
}

impl OdeSystem {
    pub fn new(equations: Vec<Equation>) -> Result<Self, SystemError> {
        if equations.is_empty() {
            return Err(SystemError::Empty);
        }
        let mut seen = std::collections::BTreeSet::new();
        for e in &equations {
            crate::model::check_symbol(&e.lhs).map_err(|_| SystemError::BadLhs(e.lhs.clone()))?;
            if !seen.insert(e.lhs.as_str()) {
                return Err(SystemError::DuplicateLhs(e.lhs.clone()));
            }
        }
        for e in &equations {
            if let Some(var) = e.rhs.variables().into_iter().find(|v| !seen.contains(v.as_str())) {
                return Err(SystemError::UnknownVariable { lhs: e.lhs.clone(), var });
            }
        }
        Ok(OdeSystem { equations })
    }

    pub fn equations(&self) -> &[Equation] {
        &self.equations
    }

    pub fn len(&self) -> usize {
        self.equations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.equations.is_empty()
    }

    /// Left-hand sides in equation order.
    pub fn variables(&self) -> Vec<&str> {
        self.equations.iter().map(|e| e.lhs.as_str()).collect()
    }
}

/// Cost of deleting every node of `t`; variables count as fresh constants.
pub fn delete_cost(t: &Tree, c: &CostModel) -> f64 {
    t.labels()
        .iter()
        .map(|l| {
            if l.is_variable() {
                c.delete_cost(&EffectiveLabel::Fresh(0))
            } else {
                c.delete_cost(&EffectiveLabel::Constant(l.symbol().to_string()))
            }
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SystemSide {
    Left,
    Right,
}

/// One matched equation pair; indices are 0-based equation positions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairEntry {
    pub left: usize,
    pub right: usize,
    pub left_lhs: String,
    pub right_lhs: String,
    pub distance: f64,
    pub optimal: bool,
    /// Variable pairing used for this equation pair.
    pub theta: Substitution,
}

/// An unmatched equation, deleted whole.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeletedEntry {
    pub side: SystemSide,
    pub equation: usize,
    pub lhs: String,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SystemDistResult {
    pub distance: f64,
    /// Proven lower bound; equals `distance` when `optimal`.
    pub lower_bound: f64,
    /// Matched equations as `(left, right)` 0-based indices, sorted.
    pub pairing: Vec<(usize, usize)>,
    pub per_pair: Vec<PairEntry>,
    pub deleted: Vec<DeletedEntry>,
    pub optimal: bool,
}

impl SystemDistResult {
    fn transposed(mut self) -> Self {
        for p in self.pairing.iter_mut() {
            *p = (p.1, p.0);
        }
        self.pairing.sort_unstable();
        for e in self.per_pair.iter_mut() {
            std::mem::swap(&mut e.left, &mut e.right);
            std::mem::swap(&mut e.left_lhs, &mut e.right_lhs);
            e.theta = e.theta.swapped();
        }
        self.per_pair.sort_by_key(|e| e.left);
        for d in self.deleted.iter_mut() {
            d.side = match d.side {
                SystemSide::Left => SystemSide::Right,
                SystemSide::Right => SystemSide::Left,
            };
        }
        self
    }
}

/// Per-pair distances with independent substitutions, computed in parallel.
fn cell_matrix(sx: &OdeSystem, sy: &OdeSystem, mode: Mode, c: &CostModel, budget: &Budget) -> Vec<Vec<VarDistResult>> {
    let (m1, m2) = (sx.len(), sy.len());
    let cells: Vec<VarDistResult> = (0..m1 * m2)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k / m2, k % m2);
            let prep = Prepared::new(&sx.equations[i].rhs, &sy.equations[j].rhs, c);
            dist_prepared(&prep, mode, budget)
        })
        .collect();
    let mut rows = Vec::with_capacity(m1);
    let mut it = cells.into_iter();
    for _ in 0..m1 {
        rows.push(it.by_ref().take(m2).collect());
    }
    rows
}

/// Pseudo distance: independent substitutions per equation pair and a
/// minimum-weight perfect matching over the padded weight matrix.
pub fn system_pdist(sx: &OdeSystem, sy: &OdeSystem, mode: Mode, c: &CostModel, budget: &Budget) -> SystemDistResult {
    if sx.len() > sy.len() {
        return system_pdist(sy, sx, mode, c, budget).transposed();
    }
    let (m1, m2) = (sx.len(), sy.len());
    let cells = cell_matrix(sx, sy, mode, c, budget);
    let del: Vec<f64> = sy.equations.iter().map(|e| delete_cost(&e.rhs, c)).collect();
    let weight = |i: usize, j: usize| if i < m1 { cells[i][j].distance } else { del[j] };
    let (total, assignment) = solve_assignment(m2, weight);
    let lower = |i: usize, j: usize| if i < m1 { cells[i][j].lower_bound } else { del[j] };
    let (lower_total, _) = solve_assignment(m2, lower);
    let optimal = cells.iter().flatten().all(|r| r.optimal);
    let mut per_pair = Vec::with_capacity(m1);
    let mut deleted = Vec::new();
    for (i, &j) in assignment.iter().enumerate() {
        if i < m1 {
            let r = &cells[i][j];
            per_pair.push(PairEntry {
                left: i,
                right: j,
                left_lhs: sx.equations[i].lhs.clone(),
                right_lhs: sy.equations[j].lhs.clone(),
                distance: r.distance,
                optimal: r.optimal,
                theta: r.theta.clone(),
            });
        } else {
            deleted.push(DeletedEntry {
                side: SystemSide::Right,
                equation: j,
                lhs: sy.equations[j].lhs.clone(),
                cost: del[j],
            });
        }
    }
    deleted.sort_by_key(|d| d.equation);
    SystemDistResult {
        distance: total,
        lower_bound: if optimal { total } else { lower_total.min(total) },
        pairing: per_pair.iter().map(|e| (e.left, e.right)).collect(),
        per_pair,
        deleted,
        optimal,
    }
}

/// Edit distance between systems under one global variable pairing, which
/// also determines which equations are compared.
pub fn system_dist(sx: &OdeSystem, sy: &OdeSystem, mode: Mode, c: &CostModel, budget: &Budget) -> SystemDistResult {
    if sx.len() > sy.len() {
        return system_dist(sy, sx, mode, c, budget).transposed();
    }
    let cells = cell_matrix(sx, sy, mode, c, budget);
    let mut s = DistSearch::new(sx, sy, mode, c, budget, cells);
    s.run();
    s.result()
}

type MemoKey = (usize, usize, Vec<(usize, usize)>);

/// Tree pair data for the branch-and-bound over equation pairings.
struct PairData {
    prep: Prepared,
    /// System index of each left-tree variable (sorted as in `prep`).
    left_sys: Vec<usize>,
    /// System index of each right-tree variable.
    right_idx: HashMap<usize, usize>,
}

struct DistSearch<'a> {
    sx: &'a OdeSystem,
    sy: &'a OdeSystem,
    mode: Mode,
    budget: &'a Budget,
    m1: usize,
    m2: usize,
    /// Lower bound of each equation pair over all substitutions.
    w: Vec<Vec<f64>>,
    del: Vec<f64>,
    pairs: Vec<Vec<PairData>>,
    /// Largest system variable index in each left right-hand side, plus one.
    needed: Vec<usize>,
    /// Exact cost of `(i, j)` under the induced variable pairs: `(cost, optimal)`.
    memo: HashMap<MemoKey, (f64, bool)>,
    scratch: Scratch,
    assign: Vec<usize>,
    used: Vec<bool>,
    best: f64,
    best_assign: Option<Vec<usize>>,
    optimal: bool,
    root_lb: f64,
}

impl<'a> DistSearch<'a> {
    fn new(
        sx: &'a OdeSystem,
        sy: &'a OdeSystem,
        mode: Mode,
        c: &CostModel,
        budget: &'a Budget,
        cells: Vec<Vec<VarDistResult>>,
    ) -> Self {
        let (m1, m2) = (sx.len(), sy.len());
        let xi: HashMap<&str, usize> = sx.variables().into_iter().enumerate().map(|(i, v)| (v, i)).collect();
        let yi: HashMap<&str, usize> = sy.variables().into_iter().enumerate().map(|(j, v)| (v, j)).collect();
        let pairs = (0..m1)
            .map(|i| {
                (0..m2)
                    .map(|j| {
                        let prep = Prepared::new(&sx.equations[i].rhs, &sy.equations[j].rhs, c);
                        let left_sys = prep.left.vars.iter().map(|v| xi[v.as_str()]).collect();
                        let right_idx = prep.right.vars.iter().enumerate().map(|(k, v)| (yi[v.as_str()], k)).collect();
                        PairData { prep, left_sys, right_idx }
                    })
                    .collect()
            })
            .collect();
        let needed = (0..m1)
            .map(|i| sx.equations[i].rhs.variables().iter().map(|v| xi[v.as_str()] + 1).max().unwrap_or(0))
            .collect();
        let w = cells.iter().map(|row| row.iter().map(|r| r.lower_bound).collect()).collect();
        let del = sy.equations.iter().map(|e| delete_cost(&e.rhs, c)).collect();
        DistSearch {
            sx,
            sy,
            mode,
            budget,
            m1,
            m2,
            w,
            del,
            pairs,
            needed,
            memo: HashMap::new(),
            scratch: Scratch::default(),
            assign: Vec::with_capacity(m1),
            used: vec![false; m2],
            best: f64::INFINITY,
            best_assign: None,
            optimal: true,
            root_lb: 0.0,
        }
    }

    /// Variable pairs induced on tree pair `(i, j)` by the current assignment.
    fn induced(&self, i: usize, j: usize, assign: &[usize]) -> Vec<(usize, usize)> {
        let pd = &self.pairs[i][j];
        pd.left_sys.iter().enumerate().filter_map(|(k, &x)| pd.right_idx.get(&assign[x]).map(|&l| (k, l))).collect()
    }

    fn pair_cost(&mut self, i: usize, j: usize) -> f64 {
        let key = (i, j, self.induced(i, j, &self.assign));
        if let Some(&(d, ok)) = self.memo.get(&key) {
            self.optimal &= ok;
            return d;
        }
        let e = evaluate(&self.pairs[i][j].prep, &key.2, self.mode, self.budget, f64::INFINITY, &mut self.scratch);
        self.optimal &= e.complete;
        self.memo.insert(key, (e.cost, e.complete));
        e.cost
    }

    fn bound(&mut self) -> f64 {
        let depth = self.assign.len();
        let mut lb = 0.0;
        for i in 0..depth {
            let j = self.assign[i];
            lb += if self.needed[i] <= depth { self.pair_cost(i, j) } else { self.w[i][j] };
        }
        let free: Vec<usize> = (0..self.m2).filter(|&j| !self.used[j]).collect();
        let rows = self.m2 - depth;
        let (rest, _) = solve_assignment(rows, |r, col| {
            let j = free[col];
            let i = depth + r;
            if i < self.m1 {
                self.w[i][j]
            } else {
                self.del[j]
            }
        });
        lb + rest
    }

    fn run(&mut self) {
        self.root_lb = self.bound();
        self.descend();
    }

    fn descend(&mut self) -> bool {
        if self.budget.deadline_passed() {
            self.optimal = false;
            return false;
        }
        if self.assign.len() == self.m1 {
            let total = self.bound();
            if total < self.best - EPS {
                self.best = total;
                self.best_assign = Some(self.assign.clone());
                if total <= self.root_lb + EPS {
                    return false;
                }
            }
            return true;
        }
        for j in 0..self.m2 {
            if self.used[j] {
                continue;
            }
            self.assign.push(j);
            self.used[j] = true;
            let lb = self.bound();
            let keep = lb >= self.best - EPS || self.descend();
            self.used[j] = false;
            self.assign.pop();
            if !keep {
                return false;
            }
        }
        true
    }

    fn result(mut self) -> SystemDistResult {
        let assign = match self.best_assign.clone() {
            Some(a) => a,
            None => {
                // stopped before any complete pairing: report the identity-order pairing
                self.optimal = false;
                let a: Vec<usize> = (0..self.m1).collect();
                self.assign = a.clone();
                self.used = (0..self.m2).map(|j| j < self.m1).collect();
                self.best = self.bound();
                a
            }
        };
        self.assign = assign.clone();
        let mut per_pair = Vec::with_capacity(self.m1);
        for (i, &j) in assign.iter().enumerate() {
            let d = self.pair_cost(i, j);
            let induced = self.induced(i, j, &assign);
            let key = (i, j, induced.clone());
            let pd = &self.pairs[i][j];
            let theta = Substitution::new(
                induced.iter().map(|&(k, l)| (pd.prep.left.vars[k].clone(), pd.prep.right.vars[l].clone())).collect(),
            )
            .expect("induced pairing is injective");
            per_pair.push(PairEntry {
                left: i,
                right: j,
                left_lhs: self.sx.equations[i].lhs.clone(),
                right_lhs: self.sy.equations[j].lhs.clone(),
                distance: d,
                optimal: self.memo.get(&key).is_some_and(|e| e.1),
                theta,
            });
        }
        let mut deleted: Vec<DeletedEntry> = (0..self.m2)
            .filter(|j| !assign.contains(j))
            .map(|j| DeletedEntry {
                side: SystemSide::Right,
                equation: j,
                lhs: self.sy.equations[j].lhs.clone(),
                cost: self.del[j],
            })
            .collect();
        deleted.sort_by_key(|d| d.equation);
        let total = per_pair.iter().map(|e| e.distance).sum::<f64>() + deleted.iter().map(|d| d.cost).sum::<f64>();
        let optimal = self.optimal;
        SystemDistResult {
            distance: total,
            lower_bound: if optimal { total } else { self.root_lb.min(total) },
            pairing: per_pair.iter().map(|e| (e.left, e.right)).collect(),
            per_pair,
            deleted,
            optimal,
        }
    }
}
