mod common;

use common::*;
use proptest::prelude::*;
use rand::Rng;
use vted::{
    dist_under, dist_with_vars, dist_with_vars_within, iso_ordered_vars, lower_bound, ted_ordered, ted_unordered,
    Budget, CostModel, EditMapping, Mode, Substitution, Tree,
};

const MODES: [Mode; 2] = [Mode::Ordered, Mode::Unordered];

fn theta_pairs(t: &Substitution) -> Vec<(String, String)> {
    t.pairs().to_vec()
}

fn check_witness(t1: &Tree, t2: &Tree, mode: Mode, theta: &Substitution, m: &EditMapping, distance: f64) {
    assert!(is_tai_mapping(t1, t2, m.pairs(), mode), "{t1} / {t2}: witness is not a Tai mapping");
    let cost = unit_mapping_cost(t1, t2, &theta_pairs(theta), m.pairs());
    assert_eq!(cost as f64, distance, "{t1} / {t2}: witness cost");
}

#[test]
fn vars_match_exhaustive_search() {
    let mut r = rng(101);
    let unit = CostModel::unit();
    for _ in 0..300 {
        let t1 = random_tree_upto(&mut r, 6, &["a", "b"], &["X", "Y", "Z"], 0.5);
        let t2 = random_tree_upto(&mut r, 6, &["a", "b"], &["U", "V"], 0.5);
        for mode in MODES {
            let d = dist_with_vars(&t1, &t2, mode, &unit, &Budget::default());
            assert!(d.optimal);
            assert_eq!(d.distance, brute_dist_vars(&t1, &t2, mode) as f64, "{mode:?} {t1} / {t2}");
            assert_eq!(d.lower_bound, d.distance);
            check_witness(&t1, &t2, mode, &d.theta, &d.mapping, d.distance);
        }
    }
}

#[test]
fn fixed_substitution_matches_exhaustive_search() {
    let mut r = rng(102);
    let unit = CostModel::unit();
    for _ in 0..200 {
        let t1 = random_tree_upto(&mut r, 6, &["a", "b"], &["X", "Y"], 0.5);
        let t2 = random_tree_upto(&mut r, 6, &["a", "b"], &["U", "V"], 0.5);
        let v1: Vec<String> = t1.variables().into_iter().collect();
        let v2: Vec<String> = t2.variables().into_iter().collect();
        let all = all_pairings(&v1, &v2);
        let th = all[r.gen_range(0..all.len())].clone();
        let theta = Substitution::new(th.clone()).unwrap();
        for mode in MODES {
            let d = dist_under(&t1, &t2, &theta, mode, &unit, &Budget::default());
            assert_eq!(d.distance, brute_ted(&t1, &t2, &th, mode) as f64, "{mode:?} {t1} / {t2} under {theta}");
            check_witness(&t1, &t2, mode, &theta, &d.mapping, d.distance);
        }
    }
}

#[test]
fn plain_witnesses_are_valid() {
    let mut r = rng(103);
    let unit = CostModel::unit();
    for _ in 0..300 {
        let t1 = random_tree_upto(&mut r, 7, &["a", "b", "c"], &[], 0.0);
        let t2 = random_tree_upto(&mut r, 7, &["a", "b", "c"], &[], 0.0);
        let o = ted_ordered(&t1, &t2, &unit).unwrap();
        check_witness(&t1, &t2, Mode::Ordered, &Substitution::empty(), &o.mapping, o.distance);
        let u = ted_unordered(&t1, &t2, &unit, &Budget::default()).unwrap();
        check_witness(&t1, &t2, Mode::Unordered, &Substitution::empty(), &u.mapping, u.distance);
        assert!(u.distance <= o.distance);
    }
}

#[test]
fn plain_distance_rejects_variables() {
    let mut r = rng(104);
    let t1 = random_tree(&mut r, 3, &["a"], &["X"], 1.0);
    let t2 = random_tree(&mut r, 3, &["a"], &[], 0.0);
    assert!(ted_ordered(&t1, &t2, &CostModel::unit()).is_err());
    assert!(ted_unordered(&t2, &t1, &CostModel::unit(), &Budget::default()).is_err());
}

#[test]
fn lower_bound_is_admissible() {
    let mut r = rng(105);
    let unit = CostModel::unit();
    for _ in 0..300 {
        let t1 = random_tree_upto(&mut r, 9, &["a", "b", "c"], &[], 0.0);
        let t2 = random_tree_upto(&mut r, 9, &["a", "b", "c"], &[], 0.0);
        let exact = ted_unordered(&t1, &t2, &unit, &Budget::default()).unwrap();
        assert!(exact.optimal);
        assert!(lower_bound(&t1, &t2, &unit) <= exact.distance, "{t1} / {t2}");
    }
}

#[test]
fn exhausted_budget_keeps_an_upper_bound() {
    let mut r = rng(106);
    let unit = CostModel::unit();
    let tiny = Budget::default().with_expansions(1);
    let mut flagged = 0;
    for _ in 0..100 {
        let t1 = random_tree(&mut r, 9, &["a", "b"], &[], 0.0);
        let t2 = random_tree(&mut r, 9, &["a", "b"], &[], 0.0);
        let exact = ted_unordered(&t1, &t2, &unit, &Budget::default()).unwrap();
        let cut = ted_unordered(&t1, &t2, &unit, &tiny).unwrap();
        assert!(cut.distance >= exact.distance);
        if !cut.optimal {
            flagged += 1;
        } else {
            assert_eq!(cut.distance, exact.distance);
        }
        check_witness(&t1, &t2, Mode::Unordered, &Substitution::empty(), &cut.mapping, cut.distance);
    }
    assert!(flagged > 0, "a one-expansion budget never ran out");
}

#[test]
fn threshold_agrees_with_distance() {
    let mut r = rng(107);
    let unit = CostModel::unit();
    for _ in 0..200 {
        let t1 = random_tree_upto(&mut r, 6, &["a", "b"], &["X", "Y"], 0.5);
        let t2 = random_tree_upto(&mut r, 6, &["a", "b"], &["U", "V"], 0.5);
        let k = r.gen_range(0..6) as f64;
        for mode in MODES {
            let d = dist_with_vars(&t1, &t2, mode, &unit, &Budget::default()).distance;
            let w = dist_with_vars_within(&t1, &t2, mode, &unit, &Budget::default(), k);
            assert_eq!(w.within, Some(d <= k), "{mode:?} {t1} / {t2} at {k}");
            if let (Some(dist), Some(theta), Some(m)) = (w.distance, &w.theta, &w.mapping) {
                assert!(dist <= k);
                check_witness(&t1, &t2, mode, theta, m, dist);
            }
        }
    }
}

#[test]
fn weighted_costs_scale() {
    // doubling every cost doubles the distance
    let mut r = rng(108);
    let mut double = CostModel::unit();
    double.set_default(2.0).set_var_pair(2.0).set_var_const(2.0);
    for _ in 0..100 {
        let t1 = random_tree_upto(&mut r, 6, &["a", "b"], &["X", "Y"], 0.5);
        let t2 = random_tree_upto(&mut r, 6, &["a", "b"], &["U"], 0.5);
        for mode in MODES {
            let d1 = dist_with_vars(&t1, &t2, mode, &CostModel::unit(), &Budget::default()).distance;
            let d2 = dist_with_vars(&t1, &t2, mode, &double, &Budget::default()).distance;
            assert_eq!(d2, 2.0 * d1);
        }
    }
}

#[test]
fn cheaper_relabel_is_used() {
    let t1 = vted::parse_expr("f(a,b)", &vted::VarPolicy::CaseConvention).unwrap();
    let t2 = vted::parse_expr("f(c,b)", &vted::VarPolicy::CaseConvention).unwrap();
    let mut c = CostModel::unit();
    c.set_relabel("a", "c", 0.25);
    assert_eq!(ted_ordered(&t1, &t2, &c).unwrap().distance, 0.25);
    assert_eq!(ted_unordered(&t2, &t1, &c, &Budget::default()).unwrap().distance, 0.25);
}

fn arb_tree(vars: &'static [&'static str]) -> impl Strategy<Value = Tree> {
    any::<u64>().prop_map(move |seed| {
        let mut r = rng(seed);
        random_tree_upto(&mut r, 7, &["a", "b"], vars, 0.5)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn euler_iso_iff_ordered_zero(t1 in arb_tree(&["X", "Y"]), t2 in arb_tree(&["U", "V"])) {
        let d = dist_with_vars(&t1, &t2, Mode::Ordered, &CostModel::unit(), &Budget::default());
        prop_assert_eq!(iso_ordered_vars(&t1, &t2), d.distance == 0.0);
    }

    #[test]
    fn renamed_clone_is_at_distance_zero(t in arb_tree(&["X", "Y", "Z"]), seed in any::<u64>()) {
        let mut r = rng(seed);
        let ordered = relabel_clone(&mut r, &t, |s| format!("{s}{s}"), false);
        let shuffled = relabel_clone(&mut r, &t, |s| format!("{s}{s}"), true);
        prop_assert!(iso_ordered_vars(&t, &ordered));
        let unit = CostModel::unit();
        prop_assert_eq!(dist_with_vars(&t, &ordered, Mode::Ordered, &unit, &Budget::default()).distance, 0.0);
        prop_assert_eq!(dist_with_vars(&t, &shuffled, Mode::Unordered, &unit, &Budget::default()).distance, 0.0);
    }

    #[test]
    fn distance_is_symmetric(t1 in arb_tree(&["X", "Y"]), t2 in arb_tree(&["U"])) {
        let unit = CostModel::unit();
        for mode in MODES {
            let a = dist_with_vars(&t1, &t2, mode, &unit, &Budget::default());
            let b = dist_with_vars(&t2, &t1, mode, &unit, &Budget::default());
            prop_assert_eq!(a.distance, b.distance);
            prop_assert_eq!(a.theta.swapped(), b.theta.clone());
        }
    }

    #[test]
    fn unordered_never_exceeds_ordered(t1 in arb_tree(&["X", "Y"]), t2 in arb_tree(&["U", "V"])) {
        let unit = CostModel::unit();
        let o = dist_with_vars(&t1, &t2, Mode::Ordered, &unit, &Budget::default()).distance;
        let u = dist_with_vars(&t1, &t2, Mode::Unordered, &unit, &Budget::default()).distance;
        prop_assert!(u <= o);
    }
}
