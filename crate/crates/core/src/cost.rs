//! Edit-operation cost model and metric validation.
//!
//! Substituted variables never become concrete symbols. They are represented
//! by [`EffectiveLabel::Fresh`] classes: two fresh labels are equal iff their
//! class ids are equal, and a fresh label never equals a constant.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::model::check_symbol;

/// A node label after substitution.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EffectiveLabel {
    Constant(String),
    Fresh(u32),
}

impl fmt::Display for EffectiveLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EffectiveLabel::Constant(s) => f.write_str(s),
            EffectiveLabel::Fresh(k) => write!(f, "#{k}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CostError {
    #[error("cost of mapping the gap symbol to itself is undefined")]
    BothGaps,
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
}

/// The cost function over labels and the gap symbol.
///
/// Relabel entries are looked up in the order `(a, b)`, then `(b, a)`, then the
/// default. Deleting or inserting a fresh constant uses the default
/// delete/insert cost.
#[derive(Debug, Clone, PartialEq)]
pub struct CostModel {
    relabel: BTreeMap<(String, String), f64>,
    delete: BTreeMap<String, f64>,
    insert: BTreeMap<String, f64>,
    default_relabel: f64,
    default_delete: f64,
    default_insert: f64,
    var_pair: f64,
    var_const: f64,
}

impl Default for CostModel {
    fn default() -> Self {
        Self::unit()
    }
}

impl CostModel {
    /// Every change between distinct labels costs 1.
    pub fn unit() -> Self {
        CostModel {
            relabel: BTreeMap::new(),
            delete: BTreeMap::new(),
            insert: BTreeMap::new(),
            default_relabel: 1.0,
            default_delete: 1.0,
            default_insert: 1.0,
            var_pair: 1.0,
            var_const: 1.0,
        }
    }

    pub fn set_relabel(&mut self, a: &str, b: &str, cost: f64) -> &mut Self {
        self.relabel.insert((a.to_string(), b.to_string()), cost);
        self
    }

    pub fn set_delete(&mut self, a: &str, cost: f64) -> &mut Self {
        self.delete.insert(a.to_string(), cost);
        self
    }

    pub fn set_insert(&mut self, a: &str, cost: f64) -> &mut Self {
        self.insert.insert(a.to_string(), cost);
        self
    }

    /// Sets the relabel, delete and insert defaults at once.
    pub fn set_default(&mut self, cost: f64) -> &mut Self {
        self.default_relabel = cost;
        self.default_delete = cost;
        self.default_insert = cost;
        self
    }

    pub fn set_var_pair(&mut self, cost: f64) -> &mut Self {
        self.var_pair = cost;
        self
    }

    pub fn set_var_const(&mut self, cost: f64) -> &mut Self {
        self.var_const = cost;
        self
    }

    pub fn var_pair(&self) -> f64 {
        self.var_pair
    }

    pub fn var_const(&self) -> f64 {
        self.var_const
    }

    /// Constant symbols mentioned anywhere in the tables.
    pub fn declared_symbols(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        let mut push = |s: &String| {
            if !out.contains(s) {
                out.push(s.clone());
            }
        };
        for (a, b) in self.relabel.keys() {
            push(a);
            push(b);
        }
        self.delete.keys().for_each(&mut push);
        self.insert.keys().for_each(&mut push);
        out
    }

    /// `γ(l1, l2)` where `None` stands for the gap symbol.
    pub fn gamma(&self, l1: Option<&EffectiveLabel>, l2: Option<&EffectiveLabel>) -> Result<f64, CostError> {
        match (l1, l2) {
            (None, None) => Err(CostError::BothGaps),
            (Some(a), None) => Ok(self.delete_cost(a)),
            (None, Some(b)) => Ok(self.insert_cost(b)),
            (Some(a), Some(b)) => Ok(self.relabel_cost(a, b)),
        }
    }

    pub fn relabel_cost(&self, a: &EffectiveLabel, b: &EffectiveLabel) -> f64 {
        use EffectiveLabel::*;
        match (a, b) {
            (Constant(x), Constant(y)) => self.constant_relabel(x, y),
            (Fresh(x), Fresh(y)) => {
                if x == y {
                    0.0
                } else {
                    self.var_pair
                }
            }
            _ => self.var_const,
        }
    }

    pub fn delete_cost(&self, a: &EffectiveLabel) -> f64 {
        match a {
            EffectiveLabel::Constant(s) => self.constant_delete(s),
            EffectiveLabel::Fresh(_) => self.default_delete,
        }
    }

    pub fn insert_cost(&self, b: &EffectiveLabel) -> f64 {
        match b {
            EffectiveLabel::Constant(s) => self.constant_insert(s),
            EffectiveLabel::Fresh(_) => self.default_insert,
        }
    }

    pub(crate) fn constant_relabel(&self, x: &str, y: &str) -> f64 {
        if self.relabel.is_empty() {
            return if x == y { 0.0 } else { self.default_relabel };
        }
        let key = (x.to_string(), y.to_string());
        if let Some(&c) = self.relabel.get(&key) {
            return c;
        }
        let key = (key.1, key.0);
        if let Some(&c) = self.relabel.get(&key) {
            return c;
        }
        if x == y {
            0.0
        } else {
            self.default_relabel
        }
    }

    pub(crate) fn constant_delete(&self, x: &str) -> f64 {
        self.delete.get(x).copied().unwrap_or(self.default_delete)
    }

    pub(crate) fn constant_insert(&self, x: &str) -> f64 {
        self.insert.get(x).copied().unwrap_or(self.default_insert)
    }

    fn term_cost(&self, a: &MetricTerm, b: &MetricTerm) -> f64 {
        match (a.as_label(), b.as_label()) {
            (None, None) => 0.0,
            (x, y) => self.gamma(x.as_ref(), y.as_ref()).expect("not both gaps"),
        }
    }
}

/// Element of the extended alphabet checked by [`validate_metric`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MetricTerm {
    Label(String),
    Gap,
    /// One of the two representative fresh-constant classes (1 or 2).
    Fresh(u8),
}

impl MetricTerm {
    fn as_label(&self) -> Option<EffectiveLabel> {
        match self {
            MetricTerm::Label(s) => Some(EffectiveLabel::Constant(s.clone())),
            MetricTerm::Gap => None,
            MetricTerm::Fresh(k) => Some(EffectiveLabel::Fresh(u32::from(*k))),
        }
    }
}

impl fmt::Display for MetricTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricTerm::Label(s) => f.write_str(s),
            MetricTerm::Gap => f.write_str("ε"),
            MetricTerm::Fresh(k) => write!(f, "fresh#{k}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricViolation {
    #[error("identity violated: γ({x},{x}) = {value}")]
    Identity { x: MetricTerm, value: f64 },
    #[error("negative cost: γ({x},{y}) = {value}")]
    Negative { x: MetricTerm, y: MetricTerm, value: f64 },
    #[error("symmetry violated: γ({x},{y}) = {forward} but γ({y},{x}) = {backward}")]
    Symmetry { x: MetricTerm, y: MetricTerm, forward: f64, backward: f64 },
    #[error("triangle violated: γ({x},{z}) = {direct} > γ({x},{y}) + γ({y},{z}) = {via}")]
    Triangle { x: MetricTerm, y: MetricTerm, z: MetricTerm, direct: f64, via: f64 },
}

/// Checks the metric axioms over `alphabet` plus the gap symbol and two
/// fresh-constant classes, returning the first violation found.
///
/// Checks run in the order identity, non-negativity and symmetry over pairs,
/// then triangles `(x, y, z)` with `x` and `z` outermost.
pub fn validate_metric<S: AsRef<str>>(c: &CostModel, alphabet: &[S]) -> Result<(), MetricViolation> {
    let mut terms: Vec<MetricTerm> = Vec::new();
    for s in alphabet {
        let t = MetricTerm::Label(s.as_ref().to_string());
        if !terms.contains(&t) {
            terms.push(t);
        }
    }
    terms.extend([MetricTerm::Gap, MetricTerm::Fresh(1), MetricTerm::Fresh(2)]);
    let n = terms.len();
    let g: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| c.term_cost(&terms[i], &terms[j])).collect()).collect();
    for i in 0..n {
        if g[i][i] != 0.0 {
            return Err(MetricViolation::Identity { x: terms[i].clone(), value: g[i][i] });
        }
    }
    for i in 0..n {
        for j in 0..n {
            // NaN fails this test too
            if g[i][j].is_nan() || g[i][j] < 0.0 {
                return Err(MetricViolation::Negative { x: terms[i].clone(), y: terms[j].clone(), value: g[i][j] });
            }
            if j > i && g[i][j] != g[j][i] {
                return Err(MetricViolation::Symmetry {
                    x: terms[i].clone(),
                    y: terms[j].clone(),
                    forward: g[i][j],
                    backward: g[j][i],
                });
            }
        }
    }
    for x in 0..n {
        for z in 0..n {
            for y in 0..n {
                let via = g[x][y] + g[y][z];
                if g[x][z] > via + 1e-12 * via.abs().max(1.0) {
                    return Err(MetricViolation::Triangle {
                        x: terms[x].clone(),
                        y: terms[y].clone(),
                        z: terms[z].clone(),
                        direct: g[x][z],
                        via,
                    });
                }
            }
        }
    }
    Ok(())
}

fn parse_cost_value(tok: &str, line: usize) -> Result<f64, CostError> {
    let v: f64 = tok.parse().map_err(|_| CostError::Syntax { line, message: format!("invalid cost {tok:?}") })?;
    if !v.is_finite() {
        return Err(CostError::Syntax { line, message: format!("cost {tok:?} is not finite") });
    }
    Ok(v)
}

fn parse_cost_symbol(tok: &str, line: usize) -> Result<&str, CostError> {
    check_symbol(tok).map_err(|e| CostError::Syntax { line, message: e.to_string() })?;
    Ok(tok)
}

impl FromStr for CostModel {
    type Err = CostError;

    /// Line-oriented format: `relabel a b 2.5`, `delete a 1.0`,
    /// `insert a 1.0`, `default 1.0`, `varpair 1.0`, `varconst 1.0`.
    /// Unset entries keep their unit values; `#` starts a comment.
    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let mut model = CostModel::unit();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("");
            let toks: Vec<&str> = content.split_whitespace().collect();
            let Some(&head) = toks.first() else { continue };
            let arity = match head {
                "relabel" => 4,
                "delete" | "insert" => 3,
                "default" | "varpair" | "varconst" => 2,
                other => {
                    return Err(CostError::Syntax { line, message: format!("unknown directive {other:?}") });
                }
            };
            if toks.len() != arity {
                return Err(CostError::Syntax {
                    line,
                    message: format!("{head} expects {} arguments, got {}", arity - 1, toks.len() - 1),
                });
            }
            let value = parse_cost_value(toks[arity - 1], line)?;
            match head {
                "relabel" => {
                    let a = parse_cost_symbol(toks[1], line)?;
                    let b = parse_cost_symbol(toks[2], line)?;
                    model.set_relabel(a, b, value);
                }
                "delete" => {
                    model.set_delete(parse_cost_symbol(toks[1], line)?, value);
                }
                "insert" => {
                    model.set_insert(parse_cost_symbol(toks[1], line)?, value);
                }
                "default" => {
                    model.set_default(value);
                }
                "varpair" => {
                    model.set_var_pair(value);
                }
                _ => {
                    model.set_var_const(value);
                }
            }
        }
        Ok(model)
    }
}

impl fmt::Display for CostModel {
    /// Writes the model in the cost-file format. Separate relabel, delete
    /// and insert defaults cannot be expressed by a single `default` line, so
    /// only models built with [`CostModel::set_default`] round-trip exactly.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "default {:?}", self.default_relabel)?;
        writeln!(f, "varpair {:?}", self.var_pair)?;
        writeln!(f, "varconst {:?}", self.var_const)?;
        for ((a, b), v) in &self.relabel {
            writeln!(f, "relabel {a} {b} {v:?}")?;
        }
        for (a, v) in &self.delete {
            writeln!(f, "delete {a} {v:?}")?;
        }
        for (a, v) in &self.insert {
            writeln!(f, "insert {a} {v:?}")?;
        }
        Ok(())
    }
}
