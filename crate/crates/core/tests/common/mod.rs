//! Independent brute-force oracles and random instance generators shared by
//! the integration tests. Nothing here calls into the library's distance
//! code; only the `Tree` accessors are used.

#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use vted::{Equation, Label, Mode, OdeSystem, Tree};

pub fn rng(seed: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random tree with exactly `n` nodes. Internal nodes get constants; leaves
/// become a variable with probability `var_prob` when `vars` is non-empty.
pub fn random_tree(r: &mut ChaCha8Rng, n: usize, consts: &[&str], vars: &[&str], var_prob: f64) -> Tree {
    assert!(n >= 1);
    let mut children = vec![Vec::new(); n];
    for v in 1..n {
        let p = r.gen_range(0..v);
        children[p].push(v);
    }
    let labels = (0..n)
        .map(|v| {
            if children[v].is_empty() && !vars.is_empty() && r.gen_bool(var_prob) {
                Label::variable(*vars.choose(r).unwrap()).unwrap()
            } else {
                Label::constant(*consts.choose(r).unwrap()).unwrap()
            }
        })
        .collect();
    Tree::from_nodes(labels, children).unwrap()
}

/// Random tree with between 1 and `max_n` nodes.
pub fn random_tree_upto(r: &mut ChaCha8Rng, max_n: usize, consts: &[&str], vars: &[&str], var_prob: f64) -> Tree {
    let n = r.gen_range(1..=max_n);
    random_tree(r, n, consts, vars, var_prob)
}

/// Renames variables through `f` and optionally shuffles every child list.
pub fn relabel_clone(r: &mut ChaCha8Rng, t: &Tree, f: impl Fn(&str) -> String, shuffle: bool) -> Tree {
    let n = t.size();
    let labels = (0..n)
        .map(|v| {
            let l = t.label(v);
            if l.is_variable() {
                Label::variable(f(l.symbol())).unwrap()
            } else {
                l.clone()
            }
        })
        .collect();
    let children = (0..n)
        .map(|v| {
            let mut k = t.children(v).to_vec();
            if shuffle {
                k.shuffle(r);
            }
            k
        })
        .collect();
    Tree::from_nodes(labels, children).unwrap()
}

struct Shape {
    n: usize,
    /// `anc[a][d]`: `a` is a proper ancestor of `d`.
    anc: Vec<Vec<bool>>,
    pre: Vec<usize>,
}

impl Shape {
    #[allow(clippy::needless_range_loop)]
    fn new(t: &Tree) -> Self {
        let n = t.size();
        let mut pre = vec![0; n];
        let mut order = 0;
        let mut stack = vec![0usize];
        while let Some(v) = stack.pop() {
            pre[v] = order;
            order += 1;
            for &c in t.children(v).iter().rev() {
                stack.push(c);
            }
        }
        let mut anc = vec![vec![false; n]; n];
        for d in 0..n {
            let mut p = t.parent(d);
            while let Some(a) = p {
                anc[a][d] = true;
                p = t.parent(a);
            }
        }
        Shape { n, anc, pre }
    }

    fn left_of(&self, a: usize, b: usize) -> bool {
        !self.anc[a][b] && !self.anc[b][a] && self.pre[a] < self.pre[b]
    }
}

/// Labels after a substitution, encoded as strings so that label equality
/// is plain string equality.
fn effective(t: &Tree, theta: &[(String, String)], left: bool) -> Vec<String> {
    (0..t.size())
        .map(|v| {
            let l = t.label(v);
            if !l.is_variable() {
                return format!("c:{}", l.symbol());
            }
            let s = l.symbol();
            let hit = theta.iter().find(|(x, y)| if left { x == s } else { y == s });
            match (hit, left) {
                (Some((x, _)), _) => format!("p:{x}"),
                (None, true) => format!("l:{s}"),
                (None, false) => format!("r:{s}"),
            }
        })
        .collect()
}

/// Whether a set of node pairs is a Tai mapping.
pub fn is_tai_mapping(t1: &Tree, t2: &Tree, pairs: &[(usize, usize)], mode: Mode) -> bool {
    let (s1, s2) = (Shape::new(t1), Shape::new(t2));
    for (i, &(v, w)) in pairs.iter().enumerate() {
        if v >= s1.n || w >= s2.n {
            return false;
        }
        for &(v2, w2) in &pairs[..i] {
            if !compatible(&s1, &s2, mode, v, w, v2, w2) {
                return false;
            }
        }
    }
    true
}

fn compatible(s1: &Shape, s2: &Shape, mode: Mode, v: usize, w: usize, v2: usize, w2: usize) -> bool {
    if v == v2 || w == w2 {
        return false;
    }
    if s1.anc[v][v2] != s2.anc[w][w2] || s1.anc[v2][v] != s2.anc[w2][w] {
        return false;
    }
    mode == Mode::Unordered || (s1.left_of(v, v2) == s2.left_of(w, w2))
}

/// Unit cost of a mapping under a substitution.
pub fn unit_mapping_cost(t1: &Tree, t2: &Tree, theta: &[(String, String)], pairs: &[(usize, usize)]) -> usize {
    let (e1, e2) = (effective(t1, theta, true), effective(t2, theta, false));
    let rel = pairs.iter().filter(|&&(v, w)| e1[v] != e2[w]).count();
    rel + (t1.size() - pairs.len()) + (t2.size() - pairs.len())
}

/// Minimum unit cost over all Tai mappings, by exhaustive enumeration.
pub fn brute_ted(t1: &Tree, t2: &Tree, theta: &[(String, String)], mode: Mode) -> usize {
    let (s1, s2) = (Shape::new(t1), Shape::new(t2));
    let (e1, e2) = (effective(t1, theta, true), effective(t2, theta, false));
    let mut best = t1.size() + t2.size();
    let mut chosen: Vec<(usize, usize)> = Vec::new();
    let mut used = vec![false; t2.size()];
    enumerate(&s1, &s2, &e1, &e2, mode, 0, 0, &mut chosen, &mut used, &mut best);
    best
}

#[allow(clippy::too_many_arguments)]
fn enumerate(
    s1: &Shape,
    s2: &Shape,
    e1: &[String],
    e2: &[String],
    mode: Mode,
    v: usize,
    rel: usize,
    chosen: &mut Vec<(usize, usize)>,
    used: &mut [bool],
    best: &mut usize,
) {
    let deleted = v - chosen.len();
    if rel + deleted >= *best {
        return;
    }
    if v == s1.n {
        let cost = rel + deleted + (s2.n - chosen.len());
        *best = (*best).min(cost);
        return;
    }
    for w in 0..s2.n {
        if used[w] || !chosen.iter().all(|&(v2, w2)| compatible(s1, s2, mode, v, w, v2, w2)) {
            continue;
        }
        used[w] = true;
        chosen.push((v, w));
        enumerate(s1, s2, e1, e2, mode, v + 1, rel + usize::from(e1[v] != e2[w]), chosen, used, best);
        chosen.pop();
        used[w] = false;
    }
    enumerate(s1, s2, e1, e2, mode, v + 1, rel, chosen, used, best);
}

fn sorted_vars(t: &Tree) -> Vec<String> {
    let mut v: Vec<String> =
        (0..t.size()).filter(|&x| t.label(x).is_variable()).map(|x| t.label(x).symbol().to_string()).collect();
    v.sort();
    v.dedup();
    v
}

/// Every injective partial pairing between two variable lists.
pub fn all_pairings(a: &[String], b: &[String]) -> Vec<Vec<(String, String)>> {
    fn go(
        a: &[String],
        b: &[String],
        i: usize,
        used: &mut Vec<bool>,
        cur: &mut Vec<(String, String)>,
        out: &mut Vec<Vec<(String, String)>>,
    ) {
        if i == a.len() {
            out.push(cur.clone());
            return;
        }
        go(a, b, i + 1, used, cur, out);
        for j in 0..b.len() {
            if !used[j] {
                used[j] = true;
                cur.push((a[i].clone(), b[j].clone()));
                go(a, b, i + 1, used, cur, out);
                cur.pop();
                used[j] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(a, b, 0, &mut vec![false; b.len()], &mut Vec::new(), &mut out);
    out
}

/// `min_θ dist_0(T1θ, T2θ)` by enumerating every pairing and every mapping.
pub fn brute_dist_vars(t1: &Tree, t2: &Tree, mode: Mode) -> usize {
    all_pairings(&sorted_vars(t1), &sorted_vars(t2)).iter().map(|th| brute_ted(t1, t2, th, mode)).min().unwrap()
}

/// System distance by enumerating every global pairing of system variables.
/// Unmatched equations cost their tree size (unit cost).
pub fn brute_system_dist(sx: &OdeSystem, sy: &OdeSystem, mode: Mode) -> usize {
    let xs: Vec<String> = sx.equations().iter().map(|e| e.lhs.clone()).collect();
    let ys: Vec<String> = sy.equations().iter().map(|e| e.lhs.clone()).collect();
    let mut best = usize::MAX;
    for th in all_pairings(&xs, &ys) {
        let mut total = 0;
        for (i, e) in sx.equations().iter().enumerate() {
            match th.iter().find(|(x, _)| *x == xs[i]) {
                Some((_, y)) => {
                    let f = sy.equations().iter().find(|g| &g.lhs == y).unwrap();
                    total += brute_ted(&e.rhs, &f.rhs, &restrict(&th, &e.rhs, &f.rhs), mode);
                }
                None => total += e.rhs.size(),
            }
        }
        for f in sy.equations() {
            if !th.iter().any(|(_, y)| *y == f.lhs) {
                total += f.rhs.size();
            }
        }
        best = best.min(total);
    }
    best
}

/// The part of a pairing that concerns variables of the two trees.
fn restrict(th: &[(String, String)], t1: &Tree, t2: &Tree) -> Vec<(String, String)> {
    let (a, b) = (sorted_vars(t1), sorted_vars(t2));
    th.iter().filter(|(x, y)| a.contains(x) && b.contains(y)).cloned().collect()
}

/// Random elementary system with `m` equations over `prefix1..prefixm`.
pub fn random_system(r: &mut ChaCha8Rng, m: usize, max_n: usize, prefix: &str) -> OdeSystem {
    let names: Vec<String> = (1..=m).map(|i| format!("{prefix}{i}")).collect();
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let equations = names
        .iter()
        .map(|lhs| Equation { lhs: lhs.clone(), rhs: random_tree_upto(r, max_n, &["+", "*", "k"], &refs, 0.6) })
        .collect();
    OdeSystem::new(equations).unwrap()
}
