mod common;

use common::*;
use rand::seq::SliceRandom;
use rand::Rng;
use vted::reductions::CAT_LABEL;
use vted::{
    bruteforce_clique, clique_to_trees, dist_with_vars, dist_with_vars_within, gi_gadget, gi_gadget_bounded,
    graph_iso_bruteforce, star_encode, Budget, CostModel, LabeledGraph, Mode, ReductionError, Tree,
};

fn random_graph(r: &mut rand_chacha::ChaCha8Rng, n: usize, p: f64) -> LabeledGraph {
    let mut g = LabeledGraph::new(n);
    for u in 0..n {
        for v in u + 1..n {
            if r.gen_bool(p) {
                g.add_edge(u, v).unwrap();
            }
        }
    }
    g
}

#[test]
fn graph_text_round_trips() {
    let mut r = rng(201);
    for _ in 0..20 {
        let mut g = random_graph(&mut r, 6, 0.4);
        g.set_label(2, "red");
        let back: LabeledGraph = g.to_string().parse().unwrap();
        assert_eq!(back.to_string(), g.to_string());
        assert_eq!(back.edges(), g.edges());
    }
    assert!("3\n0 0\n".parse::<LabeledGraph>().is_err());
    assert!("3\n0 5\n".parse::<LabeledGraph>().is_err());
    assert!("x\n".parse::<LabeledGraph>().is_err());
    let g: LabeledGraph = "# triangle\n3\n0 1\n1 2\n2 0 # closing edge\n".parse().unwrap();
    assert_eq!(g.edges().len(), 3);
}

#[test]
fn clique_gadget_sizes() {
    let mut r = rng(202);
    for n in 1..=6 {
        let g = random_graph(&mut r, n, 0.5);
        for k in 1..=n {
            let gadget = clique_to_trees(&g, k).unwrap();
            assert_eq!(gadget.t1.size(), 1 + k + k * k);
            assert_eq!(gadget.t2.size(), 1 + n + n * n);
            assert_eq!(gadget.threshold, (n * n + n - k * k - k) as f64);
            assert_eq!(gadget.t1.variables().len(), k * (k + 1) / 2);
        }
        assert!(matches!(clique_to_trees(&g, 0), Err(ReductionError::CliqueSize { .. })));
        assert!(matches!(clique_to_trees(&g, n + 1), Err(ReductionError::CliqueSize { .. })));
    }
}

#[test]
fn clique_gadget_decides_clique_on_five_vertices() {
    let mut r = rng(203);
    let unit = CostModel::unit();
    for _ in 0..12 {
        let g = random_graph(&mut r, 5, 0.5);
        for k in [2, 3] {
            let gadget = clique_to_trees(&g, k).unwrap();
            let w = dist_with_vars_within(
                &gadget.t1,
                &gadget.t2,
                Mode::Ordered,
                &unit,
                &Budget::default(),
                gadget.threshold,
            );
            assert_eq!(w.within, Some(bruteforce_clique(&g, k).unwrap()), "graph {g:?} k={k}");
        }
    }
}

#[test]
fn clique_oracle_small_cases() {
    let mut g = LabeledGraph::new(4);
    assert!(bruteforce_clique(&g, 1).unwrap());
    assert!(!bruteforce_clique(&g, 2).unwrap());
    g.add_edge(0, 1).unwrap();
    g.add_edge(1, 2).unwrap();
    assert!(bruteforce_clique(&g, 2).unwrap());
    assert!(!bruteforce_clique(&g, 3).unwrap());
    g.add_edge(0, 2).unwrap();
    assert!(bruteforce_clique(&g, 3).unwrap());
    assert!(bruteforce_clique(&LabeledGraph::new(11), 1).is_err());
}

#[test]
fn isomorphism_oracle_respects_structure_and_labels() {
    let mut r = rng(204);
    for _ in 0..50 {
        let n = r.gen_range(2..=8);
        let mut g = random_graph(&mut r, n, 0.4);
        g.set_label(0, "x");
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut r);
        let h = g.permuted(&perm);
        assert!(graph_iso_bruteforce(&g, &h).unwrap());
        let mut relabeled = h.clone();
        relabeled.set_label(perm[0], "y");
        assert!(!graph_iso_bruteforce(&g, &relabeled).unwrap());
        let (u, v) = (perm[0], perm[1]);
        let mut toggled = LabeledGraph::with_labels((0..n).map(|w| h.label(w).to_string()).collect());
        for (a, b) in h.edges() {
            if (a.min(b), a.max(b)) != (u.min(v), u.max(v)) {
                toggled.add_edge(a, b).unwrap();
            }
        }
        if !h.has_edge(u, v) {
            toggled.add_edge(u, v).unwrap();
        }
        assert!(!graph_iso_bruteforce(&g, &toggled).unwrap());
    }
}

#[test]
fn bounded_gadget_keeps_degree() {
    let mut r = rng(205);
    for _ in 0..200 {
        let t = random_tree_upto(&mut r, 10, &["a", "b"], &["X", "Y", "Z"], 0.7);
        let plain = gi_gadget(&t);
        let bounded = gi_gadget_bounded(&t);
        assert!(bounded.max_degree() <= t.max_degree().max(1), "{t}");
        assert_eq!(plain.len(), t.size() + t.variables().len());
        for v in 0..t.size() {
            assert_eq!(plain.label(v), bounded.label(v));
        }
    }
}

#[test]
fn gadgets_decide_zero_distance_for_larger_variable_sets() {
    let mut r = rng(206);
    let unit = CostModel::unit();
    for k in 0..120 {
        let t1 = random_tree_upto(&mut r, 7, &["a", "b"], &["X", "Y", "Z"], 0.7);
        let t2 = if k % 2 == 0 {
            relabel_clone(&mut r, &t1, |s| format!("{s}1"), true)
        } else {
            random_tree_upto(&mut r, 7, &["a", "b"], &["U", "V", "W"], 0.7)
        };
        let (g1, g2) = (gi_gadget(&t1), gi_gadget(&t2));
        if g1.len() > 10 || g2.len() > 10 {
            continue;
        }
        let zero = dist_with_vars(&t1, &t2, Mode::Unordered, &unit, &Budget::default()).distance == 0.0;
        assert_eq!(graph_iso_bruteforce(&g1, &g2).unwrap(), zero, "{t1} / {t2}");
        let (b1, b2) = (gi_gadget_bounded(&t1), gi_gadget_bounded(&t2));
        if b1.len() <= 10 && b2.len() <= 10 {
            assert_eq!(graph_iso_bruteforce(&b1, &b2).unwrap(), zero, "bounded {t1} / {t2}");
        }
    }
}

fn leaves(t: &Tree) -> Vec<String> {
    t.postorder().into_iter().filter(|&v| t.is_leaf(v)).map(|v| t.label(v).symbol().to_string()).collect()
}

#[test]
fn star_encoding_bounds_outdegree() {
    let mut r = rng(207);
    for _ in 0..200 {
        let t = random_tree_upto(&mut r, 15, &["a", "b"], &["X"], 0.3);
        for d in 2..5 {
            let s = star_encode(&t, d).unwrap();
            assert!(s.max_outdegree() <= d);
            assert_eq!(leaves(&s), leaves(&t));
            let cats = s.labels().iter().filter(|l| l.symbol() == CAT_LABEL).count();
            assert_eq!(s.size(), t.size() + cats);
            if t.max_outdegree() <= d {
                assert_eq!(s, t);
            }
        }
    }
    let t = random_tree(&mut r, 4, &["a"], &[], 0.0);
    assert!(matches!(star_encode(&t, 1), Err(ReductionError::BadBound(1))));
    let with_cat = Tree::node(vted::Label::constant(CAT_LABEL).unwrap(), vec![]).unwrap();
    assert!(star_encode(&with_cat, 2).is_err());
}
