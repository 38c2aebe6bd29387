//! Ordered tree edit distance by the keyroot dynamic program, and the
//! Euler-string zero-distance test for ordered trees with variables.

use thiserror::Error;

use crate::cost::CostModel;
use crate::model::{EditMapping, Tree};
use crate::pair::{Indexed, PairCosts, Prepared};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TedError {
    #[error("tree {0} contains variables; substitute before computing the plain edit distance")]
    HasVariables(u8),
}

/// A plain edit distance with the mapping that attains it.
#[derive(Debug, Clone, PartialEq)]
pub struct TedResult {
    pub distance: f64,
    pub mapping: EditMapping,
    /// False when an exact search stopped on its budget; `distance` is then
    /// an upper bound attained by `mapping`.
    pub optimal: bool,
    pub expansions: u64,
}

pub(crate) fn reject_variables(t1: &Tree, t2: &Tree) -> Result<(), TedError> {
    if t1.has_variables() {
        return Err(TedError::HasVariables(1));
    }
    if t2.has_variables() {
        return Err(TedError::HasVariables(2));
    }
    Ok(())
}

/// Exact ordered edit distance between variable-free trees.
pub fn ted_ordered(t1: &Tree, t2: &Tree, c: &CostModel) -> Result<TedResult, TedError> {
    reject_variables(t1, t2)?;
    let prep = Prepared::new(t1, t2, c);
    let (distance, pairs) = ordered_with_mapping(&prep.left.tree, &prep.right.tree, prep.base());
    Ok(TedResult { distance, mapping: EditMapping::new(pairs), optimal: true, expansions: 0 })
}

/// True iff the two trees are at distance zero as ordered trees with
/// variables, decided by comparing canonical Euler strings.
pub fn iso_ordered_vars(t1: &Tree, t2: &Tree) -> bool {
    t1.size() == t2.size() && t1.euler_string() == t2.euler_string()
}

/// Reusable buffers for the keyroot DP.
#[derive(Debug, Default)]
pub(crate) struct ZsScratch {
    td: Vec<f64>,
    fd: Vec<f64>,
}

pub(crate) fn ordered_distance(t1: &Indexed, t2: &Indexed, c: &PairCosts, scratch: &mut ZsScratch) -> f64 {
    fill_treedist(t1, t2, c, scratch);
    scratch.td[(t1.n - 1) * t2.n + (t2.n - 1)]
}

fn fill_treedist(t1: &Indexed, t2: &Indexed, c: &PairCosts, s: &mut ZsScratch) {
    let (n1, n2) = (t1.n, t2.n);
    s.td.clear();
    s.td.resize(n1 * n2, 0.0);
    s.fd.resize((n1 + 1) * (n2 + 1), 0.0);
    for &i in &t1.keyroots {
        for &j in &t2.keyroots {
            forest(t1, t2, c, i, j, &mut s.td, &mut s.fd);
        }
    }
}

/// Fills the forest-distance table for the keyroot pair `(i, j)` (postorder
/// positions) and records subtree distances along the left paths.
fn forest(t1: &Indexed, t2: &Indexed, c: &PairCosts, i: usize, j: usize, td: &mut [f64], fd: &mut [f64]) {
    let (li, lj) = (t1.lml[i], t2.lml[j]);
    let rows = i - li + 2;
    let cols = j - lj + 2;
    let n2 = t2.n;
    let del = |x: usize| c.del[t1.label[t1.post[x]] as usize];
    let ins = |y: usize| c.ins[t2.label[t2.post[y]] as usize];
    fd[0] = 0.0;
    for x in 1..rows {
        fd[x * cols] = fd[(x - 1) * cols] + del(li + x - 1);
    }
    for y in 1..cols {
        fd[y] = fd[y - 1] + ins(lj + y - 1);
    }
    for x in 1..rows {
        let a = li + x - 1;
        let la = t1.lml[a];
        let da = del(a);
        let lab_a = t1.label[t1.post[a]];
        for y in 1..cols {
            let b = lj + y - 1;
            let lb = t2.lml[b];
            let d = fd[(x - 1) * cols + y] + da;
            let e = fd[x * cols + y - 1] + ins(b);
            let best = d.min(e);
            if la == li && lb == lj {
                let r = fd[(x - 1) * cols + y - 1] + c.rel(lab_a, t2.label[t2.post[b]]);
                let v = best.min(r);
                fd[x * cols + y] = v;
                td[a * n2 + b] = v;
            } else {
                let r = fd[(la - li) * cols + (lb - lj)] + td[a * n2 + b];
                fd[x * cols + y] = best.min(r);
            }
        }
    }
}

/// Distance plus a witness mapping in preorder ids. Ties prefer mapping
/// (relabel) over deletion, deletion over insertion.
pub(crate) fn ordered_with_mapping(t1: &Indexed, t2: &Indexed, c: &PairCosts) -> (f64, Vec<(usize, usize)>) {
    let mut s = ZsScratch::default();
    fill_treedist(t1, t2, c, &mut s);
    let n2 = t2.n;
    let distance = s.td[(t1.n - 1) * n2 + (n2 - 1)];
    let mut pairs = Vec::new();
    let mut todo = vec![(t1.n - 1, n2 - 1)];
    while let Some((i, j)) = todo.pop() {
        forest(t1, t2, c, i, j, &mut s.td, &mut s.fd);
        let (li, lj) = (t1.lml[i], t2.lml[j]);
        let cols = j - lj + 2;
        let fd = &s.fd;
        let del = |x: usize| c.del[t1.label[t1.post[x]] as usize];
        let ins = |y: usize| c.ins[t2.label[t2.post[y]] as usize];
        let (mut x, mut y) = (i - li + 1, j - lj + 1);
        while x > 0 || y > 0 {
            if x == 0 {
                y -= 1;
                continue;
            }
            if y == 0 {
                x -= 1;
                continue;
            }
            let a = li + x - 1;
            let b = lj + y - 1;
            let cur = fd[x * cols + y];
            let (la, lb) = (t1.lml[a], t2.lml[b]);
            if la == li && lb == lj {
                if cur == fd[(x - 1) * cols + y - 1] + c.rel(t1.label[t1.post[a]], t2.label[t2.post[b]]) {
                    pairs.push((t1.post[a], t2.post[b]));
                    x -= 1;
                    y -= 1;
                    continue;
                }
            } else if cur == fd[(la - li) * cols + (lb - lj)] + s.td[a * n2 + b] {
                todo.push((a, b));
                x = la - li;
                y = lb - lj;
                continue;
            }
            if cur == fd[(x - 1) * cols + y] + del(a) {
                x -= 1;
            } else {
                debug_assert!(cur == fd[x * cols + y - 1] + ins(b));
                y -= 1;
            }
        }
    }
    pairs.sort_unstable();
    (distance, pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Label, Mode};
    use crate::parser::{parse_dump, VarPolicy};

    fn t(s: &str) -> Tree {
        parse_dump(s, &VarPolicy::CaseConvention).unwrap()
    }

    fn d(a: &str, b: &str) -> f64 {
        ted_ordered(&t(a), &t(b), &CostModel::unit()).unwrap().distance
    }

    #[test]
    fn identical_is_zero() {
        let r = ted_ordered(&t("f(a,g(b,c))"), &t("f(a,g(b,c))"), &CostModel::unit()).unwrap();
        assert_eq!(r.distance, 0.0);
        assert_eq!(r.mapping, EditMapping::identity(5));
    }

    #[test]
    fn swapped_children() {
        // brute force over the ordered mappings of these 3-node trees gives 2
        assert_eq!(d("f(a,b)", "f(b,a)"), 2.0);
    }

    #[test]
    fn classic_small_cases() {
        assert_eq!(d("a", "b"), 1.0);
        assert_eq!(d("a", "a(b)"), 1.0);
        assert_eq!(d("a(b,c)", "a(c)"), 1.0);
        assert_eq!(d("f(d(a,c(b)),e)", "f(c(d(a,b)),e)"), 2.0);
        assert_eq!(d("a(b(c,d),e)", "a(c,d,e)"), 1.0);
    }

    #[test]
    fn witness_attains_distance() {
        let (a, b) = (t("f(d(a,c(b)),e)"), t("f(c(d(a,b)),e)"));
        let r = ted_ordered(&a, &b, &CostModel::unit()).unwrap();
        r.mapping.validate(&a, &b, Mode::Ordered).unwrap();
        let cost = crate::model::mapping_cost(&r.mapping, &a, &b, &CostModel::unit()).unwrap();
        assert_eq!(cost, r.distance);
    }

    #[test]
    fn rejects_variables() {
        let r = ted_ordered(&t("f(X)"), &t("f(a)"), &CostModel::unit());
        assert_eq!(r, Err(TedError::HasVariables(1)));
    }

    #[test]
    fn euler_iso() {
        assert!(iso_ordered_vars(&t("f(X,g(Y))"), &t("f(Z,g(W))")));
        assert!(!iso_ordered_vars(&t("*(+(X,Y),Z)"), &t("*(+(X,Y),X)")));
        let x = t("*(+(X,Y),Z)");
        assert!(iso_ordered_vars(&x, &x));
        let leaf = Tree::leaf(Label::constant("a").unwrap());
        assert!(!iso_ordered_vars(&leaf, &x));
    }
}
