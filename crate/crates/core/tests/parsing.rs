mod common;

use std::collections::BTreeSet;

use common::*;
use proptest::prelude::*;
use vted::parser::{parse_expr_with_limit, ParseErrorKind, MAX_DEPTH};
use vted::{parse_dump, parse_expr, parse_system, VarPolicy};

const CC: VarPolicy = VarPolicy::CaseConvention;

/// An expression as infix text plus its expected dump.
#[derive(Debug, Clone)]
enum Expr {
    Leaf(String),
    Bin(char, Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Call(String, Vec<Expr>),
}

impl Expr {
    fn infix(&self) -> String {
        match self {
            Expr::Leaf(s) => s.clone(),
            Expr::Bin(op, a, b) => format!("({} {op} {})", a.infix(), b.infix()),
            Expr::Neg(a) => format!("(-{})", a.infix()),
            Expr::Call(f, args) => format!("{f}({})", args.iter().map(Expr::infix).collect::<Vec<_>>().join(", ")),
        }
    }

    fn dump(&self) -> String {
        match self {
            Expr::Leaf(s) => s.clone(),
            Expr::Bin(op, a, b) => format!("{op}({},{})", a.dump(), b.dump()),
            Expr::Neg(a) => format!("neg({})", a.dump()),
            Expr::Call(f, args) => format!("{f}({})", args.iter().map(Expr::dump).collect::<Vec<_>>().join(",")),
        }
    }
}

fn arb_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        "[a-z][a-z0-9_]{0,3}".prop_map(Expr::Leaf),
        "[A-Z][a-z0-9]{0,2}".prop_map(Expr::Leaf),
        (0u32..1000).prop_map(|n| Expr::Leaf(n.to_string())),
        "[0-9]{1,3}\\.[0-9]{1,2}".prop_map(Expr::Leaf),
    ];
    leaf.prop_recursive(5, 40, 4, |inner| {
        prop_oneof![
            (prop::sample::select(vec!['+', '-', '*', '/', '^']), inner.clone(), inner.clone())
                .prop_map(|(op, a, b)| Expr::Bin(op, Box::new(a), Box::new(b))),
            inner.clone().prop_map(|a| Expr::Neg(Box::new(a))),
            ("[a-z]{1,4}", prop::collection::vec(inner, 1..4)).prop_map(|(f, args)| Expr::Call(f, args)),
        ]
    })
}

proptest! {
    #[test]
    fn infix_parses_to_expected_tree(e in arb_expr()) {
        let t = parse_expr(&e.infix(), &CC).unwrap();
        prop_assert_eq!(t.to_string(), e.dump());
    }

    #[test]
    fn dump_round_trips(seed in any::<u64>()) {
        let mut r = rng(seed);
        let t = random_tree_upto(&mut r, 12, &["f", "g", "k1", "+"], &["X", "Yy"], 0.4);
        let back = parse_dump(&t.to_string(), &CC).unwrap();
        prop_assert_eq!(back, t);
    }
}

#[test]
fn variables_follow_policy() {
    let t = parse_expr("X*y + Z", &CC).unwrap();
    assert_eq!(t.variables().into_iter().collect::<Vec<_>>(), vec!["X", "Z"]);
    let explicit = VarPolicy::ExplicitSet(BTreeSet::from(["y".to_string()]));
    let t = parse_expr("X*y + Z", &explicit).unwrap();
    assert_eq!(t.variables().into_iter().collect::<Vec<_>>(), vec!["y"]);
}

#[test]
fn errors_carry_positions() {
    let e = parse_expr("a + * b", &CC).unwrap_err();
    assert_eq!((e.span.line, e.span.column), (1, 5));
    let e = parse_expr("a + b)", &CC).unwrap_err();
    assert_eq!(e.span.column, 6);
    let e = parse_expr("a $ b", &CC).unwrap_err();
    assert_eq!(e.kind, ParseErrorKind::UnexpectedChar('$'));
    assert!(matches!(parse_expr("F(x)", &CC).unwrap_err().kind, ParseErrorKind::VariableFunction(_)));
    assert!(parse_expr("", &CC).is_err());
    assert!(parse_expr("f()", &CC).is_err());
}

#[test]
fn limits_are_enforced() {
    let deep = format!("{}x{}", "(".repeat(MAX_DEPTH + 1), ")".repeat(MAX_DEPTH + 1));
    assert_eq!(parse_expr(&deep, &CC).unwrap_err().kind, ParseErrorKind::TooDeep);
    let wide = vec!["x"; 50].join("+");
    assert_eq!(parse_expr_with_limit(&wide, &CC, 20).unwrap_err().kind, ParseErrorKind::TooManyNodes(20));
    assert!(parse_expr_with_limit(&wide, &CC, 99).is_ok());
}

#[test]
fn systems_parse_both_notations() {
    let text = "# comment\ndA/dt = k*A - B  # trailing\n\nB' = A\n";
    let p = parse_system(text).unwrap();
    let eqs = p.system.equations();
    assert_eq!(eqs.len(), 2);
    assert_eq!((eqs[0].lhs.as_str(), eqs[0].rhs.to_string()), ("A", "-(*(k,A),B)".to_string()));
    assert_eq!(eqs[1].rhs.to_string(), "A");
    assert!(p.warnings.is_empty());
}

#[test]
fn system_variables_are_the_left_hand_sides() {
    // lowercase names with equations are variables, uppercase ones without are constants
    let p = parse_system("x' = x*Km\ny' = x + y").unwrap();
    let eqs = p.system.equations();
    assert_eq!(eqs[0].rhs.variables().into_iter().collect::<Vec<_>>(), vec!["x"]);
    assert_eq!(p.warnings.len(), 1);
    assert!(p.warnings[0].message.contains("Km"));
    assert_eq!((p.warnings[0].span.line, p.warnings[0].span.column), (1, 8));
}

#[test]
fn bad_systems_are_rejected() {
    assert_eq!(parse_system("# nothing\n").unwrap_err().kind, ParseErrorKind::EmptySystem);
    assert!(matches!(parse_system("x' = 1\nx' = 2").unwrap_err().kind, ParseErrorKind::DuplicateLhs(_)));
    let e = parse_system("x' = 1\nx + 1\n").unwrap_err();
    assert_eq!((e.span.line, e.kind), (2, ParseErrorKind::BadEquation));
    let e = parse_system("x' = 1 +").unwrap_err();
    assert_eq!(e.span.line, 1);
}
