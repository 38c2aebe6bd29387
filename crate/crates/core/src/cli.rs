//! Command-line front end. [`run`] is the whole program minus process exit,
//! so it can be driven from tests.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 budget exhausted (the
//! best result found is still printed, flagged non-optimal), 3 cost model
//! violating the metric axioms.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::budget::Budget;
use crate::cost::{validate_metric, CostModel};
use crate::model::{EditMapping, Mode, Tree};
use crate::ordered::{iso_ordered_vars, ted_ordered, TedResult};
use crate::parser::{parse_dump, parse_expr, parse_system, VarPolicy};
use crate::reductions::{clique_to_trees, gi_gadget, gi_gadget_bounded, LabeledGraph};
use crate::system::{system_dist, system_pdist, OdeSystem, SystemDistResult};
use crate::unordered::{lower_bound, ted_unordered};
use crate::vars::{dist_with_vars, dist_with_vars_within};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_BUDGET: i32 = 2;
pub const EXIT_METRIC: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "vted", version, about = "Tree edit distance with variables")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Ordered,
    Unordered,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Ordered => Mode::Ordered,
            ModeArg::Unordered => Mode::Unordered,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Syntax {
    /// `.tree` files use the dump syntax, everything else infix.
    Auto,
    Infix,
    Tree,
}

#[derive(Debug, Args)]
struct Common {
    /// Cost file (`relabel a b c`, `delete a c`, `insert a c`, `default c`,
    /// `varpair c`, `varconst c`); unit costs when omitted.
    #[arg(long)]
    cost: Option<PathBuf>,
    /// Maximum node expansions per exact unordered search.
    #[arg(long)]
    budget: Option<u64>,
    /// Wall-clock limit in seconds for the whole command.
    #[arg(long)]
    timeout: Option<f64>,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
    /// Worker threads (falls back to VTED_JOBS, then all cores).
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Debug, Args)]
struct TreeInputs {
    t1: String,
    t2: String,
    #[arg(long, value_enum, default_value = "unordered")]
    mode: ModeArg,
    #[arg(long, value_enum, default_value = "auto")]
    syntax: Syntax,
    /// Treat the positional arguments as expressions instead of file names.
    #[arg(long)]
    inline: bool,
    /// Print the edit mapping.
    #[arg(long)]
    witness: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Edit distance between variable-free trees.
    Ted {
        #[command(flatten)]
        trees: TreeInputs,
        #[command(flatten)]
        common: Common,
    },
    /// Edit distance with variables.
    Vted {
        #[command(flatten)]
        trees: TreeInputs,
        /// Only decide whether the distance is at most this value.
        #[arg(long)]
        threshold: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Whether two trees with variables are at distance zero.
    Iso {
        #[command(flatten)]
        trees: TreeInputs,
        #[command(flatten)]
        common: Common,
    },
    /// Distance between two ODE systems under one global variable pairing.
    Sysdist {
        sx: PathBuf,
        sy: PathBuf,
        #[arg(long, value_enum, default_value = "unordered")]
        mode: ModeArg,
        #[command(flatten)]
        common: Common,
    },
    /// Pseudo distance between two ODE systems (per-pair substitutions).
    Syspdist {
        sx: PathBuf,
        sy: PathBuf,
        #[arg(long, value_enum, default_value = "unordered")]
        mode: ModeArg,
        #[command(flatten)]
        common: Common,
    },
    /// Emit the clique gadget for a graph file and clique size.
    ReduceClique {
        graph: PathBuf,
        k: usize,
        /// Write t1.tree, t2.tree and threshold.txt into this directory.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Emit the graph-isomorphism gadget of a tree.
    GadgetGi {
        tree: String,
        #[arg(long)]
        bounded: bool,
        #[arg(long, value_enum, default_value = "auto")]
        syntax: Syntax,
        #[arg(long)]
        inline: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Check a cost file against the metric axioms.
    ValidateCost {
        file: PathBuf,
        /// Extra symbols to include, comma separated.
        #[arg(long, value_delimiter = ',')]
        alphabet: Vec<String>,
        #[command(flatten)]
        common: Common,
    },
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Ted { common, .. }
            | Command::Vted { common, .. }
            | Command::Iso { common, .. }
            | Command::Sysdist { common, .. }
            | Command::Syspdist { common, .. }
            | Command::ReduceClique { common, .. }
            | Command::GadgetGi { common, .. }
            | Command::ValidateCost { common, .. } => common,
        }
    }
}

/// A failure carrying its exit code.
struct Failure {
    code: i32,
    message: String,
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: EXIT_USAGE, message: message.into() }
}

type Outcome = Result<(String, i32), Failure>;

/// Runs the program on `args` (including the program name), writing results
/// to `out` and diagnostics to `err`. Returns the exit code.
pub fn run(args: &[String], out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{text}");
                    EXIT_USAGE
                }
            };
        }
    };
    let jobs =
        cli.command.common().jobs.or_else(|| std::env::var("VTED_JOBS").ok().and_then(|v| v.trim().parse().ok()));
    let mut warnings = Vec::new();
    let result = match jobs {
        Some(0) => Err(usage("--jobs must be at least 1")),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| dispatch(&cli.command, &mut warnings)),
            Err(e) => Err(usage(format!("cannot start worker pool: {e}"))),
        },
        None => dispatch(&cli.command, &mut warnings),
    };
    for w in &warnings {
        let _ = writeln!(err, "warning: {w}");
    }
    match result {
        Ok((text, code)) => {
            let _ = write!(out, "{text}");
            code
        }
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn dispatch(cmd: &Command, warnings: &mut Vec<String>) -> Outcome {
    let start = Instant::now();
    let common = cmd.common();
    let budget = make_budget(common)?;
    match cmd {
        Command::Ted { trees, common } => {
            let (t1, t2) = load_pair(trees)?;
            let c = load_cost(common, &[&t1, &t2])?;
            let r = match trees.mode {
                ModeArg::Ordered => ted_ordered(&t1, &t2, &c),
                ModeArg::Unordered => ted_unordered(&t1, &t2, &c, &budget),
            }
            .map_err(|e| usage(e.to_string()))?;
            let lower = if r.optimal { r.distance } else { lower_bound(&t1, &t2, &c).min(r.distance) };
            Ok(report_ted(&r, lower, trees, common.format, start))
        }
        Command::Vted { trees, threshold, common } => {
            let (t1, t2) = load_pair(trees)?;
            let c = load_cost(common, &[&t1, &t2])?;
            let mode = Mode::from(trees.mode);
            match threshold {
                Some(d) => {
                    let r = dist_with_vars_within(&t1, &t2, mode, &c, &budget, *d);
                    let answer = match r.within {
                        Some(true) => "yes",
                        Some(false) => "no",
                        None => "unknown",
                    };
                    let code = if r.within.is_some() { EXIT_OK } else { EXIT_BUDGET };
                    let text = match common.format {
                        Format::Json => json_line(&json!({
                            "threshold": d,
                            "answer": answer,
                            "distance": r.distance,
                            "theta": r.theta,
                            "optimal": r.within.is_some(),
                            "wall_ms": wall_ms(start),
                        })),
                        Format::Table => {
                            let mut s = format!("{answer}\n");
                            if let (Some(dist), Some(theta)) = (r.distance, &r.theta) {
                                s += &format!("witness distance {}\ntheta {}\n", num(dist), theta);
                            }
                            if trees.witness {
                                if let Some(m) = &r.mapping {
                                    s += &format!("mapping {}\n", mapping_text(m));
                                }
                            }
                            s
                        }
                    };
                    Ok((text, code))
                }
                None => {
                    let r = dist_with_vars(&t1, &t2, mode, &c, &budget);
                    let code = if r.optimal { EXIT_OK } else { EXIT_BUDGET };
                    let text = match common.format {
                        Format::Json => {
                            let mut v = json!({
                                "distance": r.distance,
                                "lower_bound": r.lower_bound,
                                "theta": r.theta,
                                "optimal": r.optimal,
                                "wall_ms": wall_ms(start),
                            });
                            if trees.witness {
                                v["mapping"] = json!(r.mapping.pairs());
                            }
                            json_line(&v)
                        }
                        Format::Table => {
                            let mut s =
                                format!("distance {}\ntheta {}\noptimal {}\n", num(r.distance), r.theta, r.optimal);
                            if !r.optimal {
                                s += &format!("lower_bound {}\n", num(r.lower_bound));
                            }
                            if trees.witness {
                                s += &format!("mapping {}\n", mapping_text(&r.mapping));
                            }
                            s
                        }
                    };
                    Ok((text, code))
                }
            }
        }
        Command::Iso { trees, common } => {
            let (t1, t2) = load_pair(trees)?;
            let c = load_cost(common, &[&t1, &t2])?;
            let (answer, theta) = match trees.mode {
                ModeArg::Ordered => (Some(iso_ordered_vars(&t1, &t2)), None),
                ModeArg::Unordered => {
                    let r = dist_with_vars_within(&t1, &t2, Mode::Unordered, &c, &budget, 0.0);
                    (r.within, r.theta)
                }
            };
            let code = if answer.is_some() { EXIT_OK } else { EXIT_BUDGET };
            let word = match answer {
                Some(true) => "true",
                Some(false) => "false",
                None => "unknown",
            };
            let text = match common.format {
                Format::Json => json_line(&json!({
                    "isomorphic": answer,
                    "theta": theta,
                    "optimal": answer.is_some(),
                    "wall_ms": wall_ms(start),
                })),
                Format::Table => match &theta {
                    Some(t) if trees.witness => format!("{word}\ntheta {t}\n"),
                    _ => format!("{word}\n"),
                },
            };
            Ok((text, code))
        }
        Command::Sysdist { sx, sy, mode, common } | Command::Syspdist { sx, sy, mode, common } => {
            let a = load_system(sx, warnings)?;
            let b = load_system(sy, warnings)?;
            let trees: Vec<&Tree> = a.equations().iter().chain(b.equations()).map(|e| &e.rhs).collect();
            let c = load_cost(common, &trees)?;
            let r = if matches!(cmd, Command::Sysdist { .. }) {
                system_dist(&a, &b, (*mode).into(), &c, &budget)
            } else {
                system_pdist(&a, &b, (*mode).into(), &c, &budget)
            };
            let code = if r.optimal { EXIT_OK } else { EXIT_BUDGET };
            Ok((report_system(&r, common.format, start), code))
        }
        Command::ReduceClique { graph, k, out_dir, common } => {
            let text = read(graph)?;
            let g: LabeledGraph = text.parse().map_err(|e| usage(format!("{}: {e}", graph.display())))?;
            let gadget = clique_to_trees(&g, *k).map_err(|e| usage(e.to_string()))?;
            let (d1, d2) = (gadget.t1.to_string(), gadget.t2.to_string());
            if let Some(dir) = out_dir {
                fs::create_dir_all(dir).map_err(|e| usage(format!("{}: {e}", dir.display())))?;
                for (name, body) in [("t1.tree", &d1), ("t2.tree", &d2), ("threshold.txt", &num(gadget.threshold))] {
                    let p = dir.join(name);
                    fs::write(&p, format!("{body}\n")).map_err(|e| usage(format!("{}: {e}", p.display())))?;
                }
            }
            let text = match common.format {
                Format::Json => json_line(&json!({
                    "t1": d1,
                    "t2": d2,
                    "n1": gadget.t1.size(),
                    "n2": gadget.t2.size(),
                    "threshold": gadget.threshold,
                })),
                Format::Table => format!("t1 {d1}\nt2 {d2}\nthreshold {}\n", num(gadget.threshold)),
            };
            Ok((text, EXIT_OK))
        }
        Command::GadgetGi { tree, bounded, syntax, inline, common } => {
            let t = load_tree(tree, *syntax, *inline)?;
            let g = if *bounded { gi_gadget_bounded(&t) } else { gi_gadget(&t) };
            let text = match common.format {
                Format::Json => {
                    let labels: Vec<&str> = (0..g.len()).map(|v| g.label(v)).collect();
                    json_line(&json!({ "vertices": g.len(), "labels": labels, "edges": g.edges() }))
                }
                Format::Table => g.to_string(),
            };
            Ok((text, EXIT_OK))
        }
        Command::ValidateCost { file, alphabet, common } => {
            let c: CostModel = read(file)?.parse().map_err(|e| usage(format!("{}: {e}", file.display())))?;
            let symbols = metric_alphabet(&c, alphabet.iter().cloned());
            let verdict = validate_metric(&c, &symbols);
            let text = match (common.format, &verdict) {
                (Format::Json, Ok(())) => json_line(&json!({ "valid": true })),
                (Format::Json, Err(v)) => json_line(&json!({ "valid": false, "violation": v.to_string() })),
                (Format::Table, Ok(())) => "ok\n".to_string(),
                (Format::Table, Err(v)) => format!("violation: {v}\n"),
            };
            Ok((text, if verdict.is_ok() { EXIT_OK } else { EXIT_METRIC }))
        }
    }
}

fn make_budget(common: &Common) -> Result<Budget, Failure> {
    let mut b = Budget::default();
    if let Some(n) = common.budget {
        b = b.with_expansions(n);
    }
    if let Some(secs) = common.timeout {
        let d = Duration::try_from_secs_f64(secs).map_err(|_| usage(format!("invalid --timeout {secs}")))?;
        b = b.with_timeout(d);
    }
    Ok(b)
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn load_tree(arg: &str, syntax: Syntax, inline: bool) -> Result<Tree, Failure> {
    let (text, dump) = if inline {
        (arg.to_string(), syntax == Syntax::Tree)
    } else {
        let p = Path::new(arg);
        let dump = match syntax {
            Syntax::Auto => p.extension().is_some_and(|e| e == "tree"),
            Syntax::Tree => true,
            Syntax::Infix => false,
        };
        (read(p)?, dump)
    };
    let policy = VarPolicy::CaseConvention;
    let text = text.trim();
    let parsed = if dump { parse_dump(text, &policy) } else { parse_expr(text, &policy) };
    parsed.map_err(|e| usage(format!("{arg}: {e}")))
}

fn load_pair(t: &TreeInputs) -> Result<(Tree, Tree), Failure> {
    Ok((load_tree(&t.t1, t.syntax, t.inline)?, load_tree(&t.t2, t.syntax, t.inline)?))
}

fn load_system(path: &Path, warnings: &mut Vec<String>) -> Result<OdeSystem, Failure> {
    let p = parse_system(&read(path)?).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    warnings.extend(p.warnings.iter().map(|w| format!("{}: {w}", path.display())));
    Ok(p.system)
}

/// Declared symbols and two representatives of all undeclared constants
/// (which share every cost and so behave identically).
fn metric_alphabet(c: &CostModel, extra: impl Iterator<Item = String>) -> Vec<String> {
    let mut symbols = c.declared_symbols();
    symbols.extend(extra);
    for base in ["undeclared_1", "undeclared_2"] {
        let mut s = base.to_string();
        while symbols.contains(&s) {
            s.push('_');
        }
        symbols.push(s);
    }
    symbols
}

fn load_cost(common: &Common, trees: &[&Tree]) -> Result<CostModel, Failure> {
    let Some(path) = &common.cost else {
        return Ok(CostModel::unit());
    };
    let c: CostModel = read(path)?.parse().map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let used =
        trees.iter().flat_map(|t| t.labels().iter().filter(|l| !l.is_variable()).map(|l| l.symbol().to_string()));
    let mut declared = c.declared_symbols();
    declared.sort();
    let relevant: Vec<String> = used.filter(|s| declared.binary_search(s).is_ok()).collect();
    validate_metric(&c, &metric_alphabet(&c, relevant.into_iter())).map_err(|v| Failure {
        code: EXIT_METRIC,
        message: format!("{}: cost model is not a metric: {v}", path.display()),
    })?;
    Ok(c)
}

fn wall_ms(start: Instant) -> u64 {
    start.elapsed().as_millis() as u64
}

fn json_line(v: &Value) -> String {
    format!("{}\n", serde_json::to_string_pretty(v).expect("serializable"))
}

/// Integral costs print without a fractional part.
fn num(x: f64) -> String {
    if x.fract() == 0.0 && x.abs() < 1e15 {
        format!("{}", x as i64)
    } else {
        format!("{x}")
    }
}

fn mapping_text(m: &EditMapping) -> String {
    m.pairs().iter().map(|(v, w)| format!("{v}->{w}")).collect::<Vec<_>>().join(" ")
}

fn report_ted(r: &TedResult, lower: f64, trees: &TreeInputs, format: Format, start: Instant) -> (String, i32) {
    let code = if r.optimal { EXIT_OK } else { EXIT_BUDGET };
    let text = match format {
        Format::Json => {
            let mut v = json!({
                "distance": r.distance,
                "lower_bound": lower,
                "optimal": r.optimal,
                "wall_ms": wall_ms(start),
            });
            if trees.witness {
                v["mapping"] = json!(r.mapping.pairs());
            }
            json_line(&v)
        }
        Format::Table => {
            let mut s = format!("distance {}\noptimal {}\n", num(r.distance), r.optimal);
            if !r.optimal {
                s += &format!("lower_bound {}\n", num(lower));
            }
            if trees.witness {
                s += &format!("mapping {}\n", mapping_text(&r.mapping));
            }
            s
        }
    };
    (text, code)
}

fn report_system(r: &SystemDistResult, format: Format, start: Instant) -> String {
    match format {
        Format::Json => json_line(&json!({
            "distance": r.distance,
            "lower_bound": r.lower_bound,
            "pairing": r.pairing,
            "per_pair": r.per_pair,
            "deleted": r.deleted,
            "optimal": r.optimal,
            "wall_ms": wall_ms(start),
        })),
        Format::Table => {
            let mut s = format!("distance {}\noptimal {}\n", num(r.distance), r.optimal);
            if !r.optimal {
                s += &format!("lower_bound {}\n", num(r.lower_bound));
            }
            for e in &r.per_pair {
                s += &format!("pair {} -> {} {} {}\n", e.left_lhs, e.right_lhs, num(e.distance), e.theta);
            }
            for d in &r.deleted {
                s += &format!("deleted {} {}\n", d.lhs, num(d.cost));
            }
            s
        }
    }
}
