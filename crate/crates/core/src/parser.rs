//! Infix expression, tree-dump and ODE-system parsers.
//!
//! Infix precedence, tightest first: `^` (right-associative), unary minus
//! (node `neg`), `* /`, `+ -` (both left-associative). Operators stay binary;
//! `x+y+z` is `+(+(x,y),z)`. Numeric literals keep their source text.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::model::{Label, LabelKind, Tree, TreeBuilder, TreeError, DEFAULT_MAX_NODES};
use crate::system::{Equation, OdeSystem};

/// Nesting beyond this depth is rejected instead of risking stack overflow.
pub const MAX_DEPTH: usize = 512;

/// Position in the source text, both 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct SourceSpan {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("unexpected character {0:?}")]
    UnexpectedChar(char),
    #[error("expected {expected}, found {found}")]
    Unexpected { expected: &'static str, found: String },
    #[error("function {0} is named like a variable")]
    VariableFunction(String),
    #[error("expression nested deeper than {MAX_DEPTH} levels")]
    TooDeep,
    #[error("expression has more than {0} nodes")]
    TooManyNodes(usize),
    #[error("empty system")]
    EmptySystem,
    #[error("variable {0} has more than one equation")]
    DuplicateLhs(String),
    #[error("expected `dX/dt = expr` or `X' = expr`")]
    BadEquation,
    #[error(transparent)]
    Label(#[from] TreeError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{span}: {kind}")]
pub struct ParseError {
    pub span: SourceSpan,
    pub kind: ParseErrorKind,
}

/// Which identifiers are variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VarPolicy {
    /// Identifiers starting with an uppercase letter.
    CaseConvention,
    /// Exactly the listed identifiers.
    ExplicitSet(BTreeSet<String>),
}

impl VarPolicy {
    fn is_variable(&self, name: &str) -> bool {
        match self {
            VarPolicy::CaseConvention => name.chars().next().is_some_and(char::is_uppercase),
            VarPolicy::ExplicitSet(s) => s.contains(name),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(String),
    Op(char),
    LParen,
    RParen,
    Comma,
    End,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) | Tok::Number(s) => write!(f, "{s:?}"),
            Tok::Op(c) => write!(f, "{c:?}"),
            Tok::LParen => f.write_str("'('"),
            Tok::RParen => f.write_str("')'"),
            Tok::Comma => f.write_str("','"),
            Tok::End => f.write_str("end of input"),
        }
    }
}

fn lex(text: &str, origin: SourceSpan) -> Result<Vec<(Tok, SourceSpan)>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut line, mut col) = (origin.line, origin.column);
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let span = SourceSpan { line, column: col };
        let start = i;
        if c == '\n' {
            line += 1;
            col = 1;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
        } else if c.is_alphabetic() || c == '_' {
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((Tok::Ident(chars[start..i].iter().collect()), span));
        } else if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(char::is_ascii_digit)) {
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let s: String = chars[start..i].iter().collect();
            if s.matches('.').count() > 1 {
                return Err(ParseError {
                    span,
                    kind: ParseErrorKind::Unexpected { expected: "a number", found: format!("{s:?}") },
                });
            }
            out.push((Tok::Number(s), span));
        } else {
            let tok = match c {
                '+' | '-' | '*' | '/' | '^' => Tok::Op(c),
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                ',' => Tok::Comma,
                _ => return Err(ParseError { span, kind: ParseErrorKind::UnexpectedChar(c) }),
            };
            out.push((tok, span));
            i += 1;
        }
        col += i - start;
    }
    out.push((Tok::End, SourceSpan { line, column: col }));
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, SourceSpan)>,
    pos: usize,
    policy: &'a VarPolicy,
    builder: TreeBuilder,
    max_nodes: usize,
    depth: usize,
    /// Leaf identifiers with their positions.
    leaves: Vec<(String, SourceSpan)>,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn span(&self) -> SourceSpan {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, SourceSpan) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn fail<T>(&self, expected: &'static str) -> Result<T, ParseError> {
        Err(ParseError {
            span: self.span(),
            kind: ParseErrorKind::Unexpected { expected, found: self.peek().to_string() },
        })
    }

    fn node(&mut self, label: Label, children: Vec<usize>, span: SourceSpan) -> Result<usize, ParseError> {
        if self.builder.len() >= self.max_nodes {
            return Err(ParseError { span, kind: ParseErrorKind::TooManyNodes(self.max_nodes) });
        }
        self.builder.add(label, children).map_err(|e| ParseError { span, kind: e.into() })
    }

    fn constant(&mut self, symbol: &str, children: Vec<usize>, span: SourceSpan) -> Result<usize, ParseError> {
        let label = Label::constant(symbol).map_err(|e| ParseError { span, kind: e.into() })?;
        self.node(label, children, span)
    }

    fn expr(&mut self, min_bp: u8) -> Result<usize, ParseError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(ParseError { span: self.span(), kind: ParseErrorKind::TooDeep });
        }
        let mut lhs = self.prefix()?;
        while let Tok::Op(c) = self.peek() {
            let (op, span) = (*c, self.span());
            let (lbp, rbp) = match op {
                '+' | '-' => (1, 2),
                '*' | '/' => (3, 4),
                _ => (7, 6),
            };
            if lbp < min_bp {
                break;
            }
            self.bump();
            let rhs = self.expr(rbp)?;
            lhs = self.constant(&op.to_string(), vec![lhs, rhs], span)?;
        }
        self.depth -= 1;
        Ok(lhs)
    }

    fn prefix(&mut self) -> Result<usize, ParseError> {
        let (tok, span) = self.bump();
        match tok {
            Tok::Op('-') => {
                let inner = self.expr(5)?;
                self.constant("neg", vec![inner], span)
            }
            Tok::Number(s) => self.constant(&s, Vec::new(), span),
            Tok::LParen => {
                let inner = self.expr(0)?;
                match self.peek() {
                    Tok::RParen => {
                        self.bump();
                        Ok(inner)
                    }
                    _ => self.fail("')'"),
                }
            }
            Tok::Ident(name) => {
                if *self.peek() != Tok::LParen {
                    let kind = if self.policy.is_variable(&name) { LabelKind::Variable } else { LabelKind::Constant };
                    let label = Label::new(kind, name.clone()).map_err(|e| ParseError { span, kind: e.into() })?;
                    self.leaves.push((name, span));
                    return self.node(label, Vec::new(), span);
                }
                if self.policy.is_variable(&name) {
                    return Err(ParseError { span, kind: ParseErrorKind::VariableFunction(name) });
                }
                self.bump();
                let mut args = vec![self.expr(0)?];
                loop {
                    match self.peek() {
                        Tok::Comma => {
                            self.bump();
                            args.push(self.expr(0)?);
                        }
                        Tok::RParen => {
                            self.bump();
                            break;
                        }
                        _ => return self.fail("',' or ')'"),
                    }
                }
                self.constant(&name, args, span)
            }
            other => Err(ParseError {
                span,
                kind: ParseErrorKind::Unexpected { expected: "an expression", found: other.to_string() },
            }),
        }
    }
}

fn parse_expr_at(
    text: &str,
    policy: &VarPolicy,
    max_nodes: usize,
    origin: SourceSpan,
) -> Result<(Tree, Vec<(String, SourceSpan)>), ParseError> {
    let toks = lex(text, origin)?;
    let mut p = Parser { toks, pos: 0, policy, builder: TreeBuilder::new(), max_nodes, depth: 0, leaves: Vec::new() };
    let root = p.expr(0)?;
    if *p.peek() != Tok::End {
        return p.fail("an operator or end of input");
    }
    let tree = p.builder.build(root).map_err(|e| ParseError { span: origin, kind: e.into() })?;
    Ok((tree, p.leaves))
}

/// Parses one infix expression.
pub fn parse_expr(text: &str, policy: &VarPolicy) -> Result<Tree, ParseError> {
    parse_expr_with_limit(text, policy, DEFAULT_MAX_NODES)
}

pub fn parse_expr_with_limit(text: &str, policy: &VarPolicy, max_nodes: usize) -> Result<Tree, ParseError> {
    parse_expr_at(text, policy, max_nodes, SourceSpan { line: 1, column: 1 }).map(|(t, _)| t)
}

/// Parses the canonical dump `label(child,child,...)`.
pub fn parse_dump(text: &str, policy: &VarPolicy) -> Result<Tree, ParseError> {
    let chars: Vec<(char, SourceSpan)> = {
        let (mut line, mut column) = (1, 1);
        text.chars()
            .map(|c| {
                let s = SourceSpan { line, column };
                if c == '\n' {
                    line += 1;
                    column = 1;
                } else {
                    column += 1;
                }
                (c, s)
            })
            .collect()
    };
    let end = chars
        .last()
        .map_or(SourceSpan { line: 1, column: 1 }, |&(_, s)| SourceSpan { line: s.line, column: s.column + 1 });
    let mut pos = 0;
    let skip_ws = |pos: &mut usize| {
        while *pos < chars.len() && chars[*pos].0.is_whitespace() {
            *pos += 1;
        }
    };
    let at = |pos: usize| chars.get(pos).map_or(end, |&(_, s)| s);
    let found = |pos: usize| chars.get(pos).map_or("end of input".to_string(), |&(c, _)| format!("{c:?}"));
    let mut b = TreeBuilder::new();
    // explicit stack of (label, span, children) for open nodes
    let mut stack: Vec<(String, SourceSpan, Vec<usize>)> = Vec::new();
    let mut root = None;
    loop {
        skip_ws(&mut pos);
        let span = at(pos);
        let start = pos;
        while pos < chars.len() && !chars[pos].0.is_whitespace() && !"(),;".contains(chars[pos].0) {
            pos += 1;
        }
        if start == pos {
            return Err(ParseError {
                span,
                kind: ParseErrorKind::Unexpected { expected: "a label", found: found(pos) },
            });
        }
        let sym: String = chars[start..pos].iter().map(|&(c, _)| c).collect();
        skip_ws(&mut pos);
        if pos < chars.len() && chars[pos].0 == '(' {
            if stack.len() >= MAX_DEPTH {
                return Err(ParseError { span, kind: ParseErrorKind::TooDeep });
            }
            if policy.is_variable(&sym) {
                return Err(ParseError { span, kind: TreeError::VariableNotLeaf(sym).into() });
            }
            pos += 1;
            stack.push((sym, span, Vec::new()));
            continue;
        }
        let kind = if policy.is_variable(&sym) { LabelKind::Variable } else { LabelKind::Constant };
        let label = Label::new(kind, sym).map_err(|e| ParseError { span, kind: e.into() })?;
        if b.len() >= DEFAULT_MAX_NODES {
            return Err(ParseError { span, kind: ParseErrorKind::TooManyNodes(DEFAULT_MAX_NODES) });
        }
        let mut done = b.add(label, Vec::new()).map_err(|e| ParseError { span, kind: e.into() })?;
        // close as many nodes as the following ')' say
        loop {
            skip_ws(&mut pos);
            match (stack.last_mut(), chars.get(pos).map(|&(c, _)| c)) {
                (None, None) => {
                    root = Some(done);
                    break;
                }
                (None, _) => {
                    return Err(ParseError {
                        span: at(pos),
                        kind: ParseErrorKind::Unexpected { expected: "end of input", found: found(pos) },
                    })
                }
                (Some(top), Some(',')) => {
                    top.2.push(done);
                    pos += 1;
                    break;
                }
                (Some(_), Some(')')) => {
                    pos += 1;
                    let (sym, span, mut kids) = stack.pop().expect("non-empty");
                    kids.push(done);
                    let label = Label::constant(sym).map_err(|e| ParseError { span, kind: e.into() })?;
                    if b.len() >= DEFAULT_MAX_NODES {
                        return Err(ParseError { span, kind: ParseErrorKind::TooManyNodes(DEFAULT_MAX_NODES) });
                    }
                    done = b.add(label, kids).map_err(|e| ParseError { span, kind: e.into() })?;
                }
                (Some(_), _) => {
                    return Err(ParseError {
                        span: at(pos),
                        kind: ParseErrorKind::Unexpected { expected: "',' or ')'", found: found(pos) },
                    })
                }
            }
        }
        if let Some(r) = root {
            return b.build(r).map_err(|e| ParseError { span: SourceSpan { line: 1, column: 1 }, kind: e.into() });
        }
    }
}

/// A non-fatal remark produced while parsing a system.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Warning {
    pub span: SourceSpan,
    pub message: String,
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.span, self.message)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedSystem {
    pub system: OdeSystem,
    pub warnings: Vec<Warning>,
}

fn split_lhs(lhs: &str) -> Option<String> {
    let compact: String = lhs.chars().filter(|c| !c.is_whitespace()).collect();
    let name = if let Some(rest) = compact.strip_suffix('\'') {
        rest
    } else {
        compact.strip_prefix('d')?.strip_suffix("/dt")?
    };
    let mut cs = name.chars();
    let first = cs.next()?;
    ((first.is_alphabetic() || first == '_') && cs.all(|c| c.is_alphanumeric() || c == '_')).then(|| name.to_string())
}

/// Parses a system file: one `dX/dt = expr` or `X' = expr` per line, `#`
/// comments. The left-hand sides are the variables of every right-hand
/// side; any other identifier is a constant.
pub fn parse_system(text: &str) -> Result<ParsedSystem, ParseError> {
    let mut rows = Vec::new();
    let mut names = BTreeSet::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let body = raw.split('#').next().unwrap_or("");
        if body.trim().is_empty() {
            continue;
        }
        let indent = body.chars().take_while(|c| c.is_whitespace()).count();
        let lhs_span = SourceSpan { line, column: indent + 1 };
        let Some(eq) = body.find('=') else {
            return Err(ParseError { span: lhs_span, kind: ParseErrorKind::BadEquation });
        };
        let lhs = split_lhs(&body[..eq]).ok_or(ParseError { span: lhs_span, kind: ParseErrorKind::BadEquation })?;
        if !names.insert(lhs.clone()) {
            return Err(ParseError { span: lhs_span, kind: ParseErrorKind::DuplicateLhs(lhs) });
        }
        let rhs_col = body[..eq + 1].chars().count() + 1;
        rows.push((lhs, body[eq + 1..].to_string(), SourceSpan { line, column: rhs_col }));
    }
    if rows.is_empty() {
        return Err(ParseError { span: SourceSpan { line: 1, column: 1 }, kind: ParseErrorKind::EmptySystem });
    }
    let policy = VarPolicy::ExplicitSet(names.clone());
    let mut equations = Vec::with_capacity(rows.len());
    let mut warnings = Vec::new();
    for (lhs, rhs, origin) in rows {
        let (tree, leaves) = parse_expr_at(&rhs, &policy, DEFAULT_MAX_NODES, origin)?;
        for (name, span) in leaves {
            if !names.contains(&name) && VarPolicy::CaseConvention.is_variable(&name) {
                warnings.push(Warning {
                    span,
                    message: format!("{name} looks like a variable but has no equation; treated as a constant"),
                });
            }
        }
        equations.push(Equation { lhs, rhs: tree });
    }
    let system = OdeSystem::new(equations).expect("left-hand sides checked while parsing");
    Ok(ParsedSystem { system, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cc(s: &str) -> Tree {
        parse_expr(s, &VarPolicy::CaseConvention).unwrap()
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(cc("a+b*c").to_string(), "+(a,*(b,c))");
        assert_eq!(cc("x+y+z").to_string(), "+(+(x,y),z)");
        assert_eq!(cc("a-b-c").to_string(), "-(-(a,b),c)");
        assert_eq!(cc("a^b^c").to_string(), "^(a,^(b,c))");
        assert_eq!(cc("-x^2").to_string(), "neg(^(x,2))");
        assert_eq!(cc("-x*y").to_string(), "*(neg(x),y)");
        assert_eq!(cc("2^-x").to_string(), "^(2,neg(x))");
        assert_eq!(cc("(x+y)*z").to_string(), "*(+(x,y),z)");
        assert_eq!(cc("f(x, g(y), 1.50)").to_string(), "f(x,g(y),1.50)");
        assert_eq!(cc("1e-3*k").to_string(), "*(1e-3,k)");
    }

    #[test]
    fn variables_by_case() {
        let t = cc("(X+Y)*X");
        assert_eq!(t.size(), 5);
        assert_eq!(t.variables().into_iter().collect::<Vec<_>>(), vec!["X", "Y"]);
        assert!(cc("(x+y)*z").variables().is_empty());
    }

    #[test]
    fn errors_have_spans() {
        let e = parse_expr("a +\n  * b", &VarPolicy::CaseConvention).unwrap_err();
        assert_eq!(e.span, SourceSpan { line: 2, column: 3 });
        let e = parse_expr("F(x)", &VarPolicy::CaseConvention).unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::VariableFunction("F".into()));
        assert!(matches!(
            parse_expr("a $ b", &VarPolicy::CaseConvention).unwrap_err().kind,
            ParseErrorKind::UnexpectedChar('$')
        ));
        assert!(parse_expr("(a+b", &VarPolicy::CaseConvention).is_err());
        assert!(parse_expr("a b", &VarPolicy::CaseConvention).is_err());
        assert!(parse_expr("", &VarPolicy::CaseConvention).is_err());
        assert!(parse_expr("f()", &VarPolicy::CaseConvention).is_err());
    }

    #[test]
    fn depth_and_size_limits() {
        let deep = format!("{}x{}", "(".repeat(600), ")".repeat(600));
        assert_eq!(parse_expr(&deep, &VarPolicy::CaseConvention).unwrap_err().kind, ParseErrorKind::TooDeep);
        let e = parse_expr_with_limit("a+b+c", &VarPolicy::CaseConvention, 4).unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::TooManyNodes(4));
    }

    #[test]
    fn dump_round_trip() {
        for s in ["*(+(X,Y),Z)", "f(a,g(b,c),1.5)", "x", "neg(^(x,2))"] {
            let t = parse_dump(s, &VarPolicy::CaseConvention).unwrap();
            assert_eq!(t.to_string(), s);
        }
        let t = parse_dump(" f ( a , b ) ", &VarPolicy::CaseConvention).unwrap();
        assert_eq!(t.to_string(), "f(a,b)");
        assert!(parse_dump("f(a,", &VarPolicy::CaseConvention).is_err());
        assert!(parse_dump("f(a))", &VarPolicy::CaseConvention).is_err());
        assert!(parse_dump("X(a)", &VarPolicy::CaseConvention).is_err());
    }

    #[test]
    fn systems() {
        let p = parse_system("dX/dt = k*X\n# comment\nY' = X - Y  # trailing\n").unwrap();
        let s = &p.system;
        assert_eq!(s.variables(), vec!["X", "Y"]);
        assert_eq!(s.equations()[0].rhs.variables().into_iter().collect::<Vec<_>>(), vec!["X"]);
        assert!(p.warnings.is_empty());
        let p = parse_system("dx/dt = K*x").unwrap();
        assert_eq!(p.warnings.len(), 1);
        assert_eq!(p.warnings[0].span, SourceSpan { line: 1, column: 9 });
        assert!(p.system.equations()[0].rhs.variables().contains("x"));
        assert_eq!(parse_system("\n# nothing\n").unwrap_err().kind, ParseErrorKind::EmptySystem);
        assert_eq!(parse_system("dX/dt = 1\ndX/dt = 2").unwrap_err().kind, ParseErrorKind::DuplicateLhs("X".into()));
        let e = parse_system("dX/dt = X +").unwrap_err();
        assert_eq!(e.span.line, 1);
        assert_eq!(parse_system("X = 1").unwrap_err().kind, ParseErrorKind::BadEquation);
    }
}
