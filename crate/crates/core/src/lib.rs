//! Tree edit distance with variables for mathematical expression trees, and
//! distances between systems of first-order differential equations built on
//! it.
//!
//! Trees whose leaves may carry variables are compared under the best
//! consistent renaming of variables: a substitution pairs variables of the
//! two trees, paired variables become the same fresh constant and every
//! other variable a constant of its own. Both ordered and unordered trees are
//! supported; the unordered distance is computed exactly by branch-and-bound
//! under a configurable [`Budget`].
//!
//! ```
//! use vted::{dist_with_vars, parse_expr, Budget, CostModel, Mode, VarPolicy};
//!
//! let f = parse_expr("(X+Y)*Z", &VarPolicy::CaseConvention).unwrap();
//! let g = parse_expr("W*(U+V)", &VarPolicy::CaseConvention).unwrap();
//! let r = dist_with_vars(&f, &g, Mode::Unordered, &CostModel::unit(), &Budget::default());
//! assert_eq!(r.distance, 0.0);
//! ```

pub mod budget;
pub mod cli;
pub mod cost;
pub mod matching;
pub mod model;
pub mod ordered;
mod pair;
pub mod parser;
pub mod reductions;
pub mod system;
pub mod unordered;
pub mod vars;

pub use budget::Budget;
pub use cost::{validate_metric, CostError, CostModel, EffectiveLabel, MetricTerm, MetricViolation};
pub use matching::{hungarian, Matching, MatchingError};
pub use model::{
    mapping_cost, CanonicalLabel, Direction, EditMapping, EulerString, EulerToken, Label, LabelKind, MappingError,
    Mode, NodeId, Tree, TreeBuilder, TreeError,
};
pub use ordered::{iso_ordered_vars, ted_ordered, TedError, TedResult};
pub use parser::{parse_dump, parse_expr, parse_system, ParseError, ParsedSystem, SourceSpan, VarPolicy};
pub use reductions::{
    bruteforce_clique, clique_to_trees, gi_gadget, gi_gadget_bounded, graph_iso_bruteforce, star_encode, CliqueGadget,
    LabeledGraph, ReductionError,
};
pub use system::{delete_cost, system_dist, system_pdist, Equation, OdeSystem, SystemDistResult};
pub use unordered::{lower_bound, ted_unordered};
pub use vars::{
    apply_substitution, dist_under, dist_with_vars, dist_with_vars_within, enumerate_substitutions, Side,
    SubstitutedTree, Substitution, ThresholdResult, VarDistResult,
};
