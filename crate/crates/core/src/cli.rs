//! Command-line front end. `run` returns the process exit code:
//! 0 success, 2 verification failure, 3 precondition failure, 4 parse error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::dot::{clique_graph_dot, model_graph_dot};
use crate::error::{Error, Result};
use crate::expr::{parse_expr, FactorExpr, TraceFile};
use crate::factorize::{
    build_clique_graph, ctx, factorize_bn, factorize_chain_crf, factorize_markov, factorize_tcg, factorize_tree_mn, is_tcg,
    mrf_expression, mrf_factorize, rmrf_factorize,
};
use crate::model::{parse_model, GraphKind, JointTable, Model};
use crate::random::{parse_graph_spec, random_model, RandomKind};
use crate::separation::{graph_separated, CiQuery};
use crate::verify::{verify_conditional, verify_joint, VerificationReport, DEFAULT_TOL};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY: i32 = 2;
pub const EXIT_PRECONDITION: i32 = 3;
pub const EXIT_PARSE: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "crfactor", version, about = "Co-occurrence rate factorization of discrete graphical models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Bn,
    Tree,
    Partition,
    ChainCrf,
    Mrf,
    Rmrf,
    Tcg,
    Trace,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Kind {
    Gibbs,
    Bn,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Factorize a model and check the result against its joint table.
    Factorize {
        #[arg(long, value_enum)]
        method: Method,
        #[arg(long)]
        model: PathBuf,
        /// Trace file to replay (method `trace`).
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Comma-separated chain labels (method `chain-crf`).
        #[arg(long, value_delimiter = ',')]
        chain: Vec<String>,
        /// Write the rewrite trace of the derivation as JSON.
        #[arg(long)]
        emit_trace: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[arg(long)]
        no_verify: bool,
    },
    /// Compare an expression with the model's joint at every assignment.
    Verify {
        #[arg(long)]
        model: PathBuf,
        /// File holding the expression.
        #[arg(long, conflicts_with = "expr_text", required_unless_present = "expr_text")]
        expr: Option<PathBuf>,
        #[arg(long)]
        expr_text: Option<String>,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
    },
    /// Print a random model file.
    GenRandom {
        #[arg(long, value_enum)]
        kind: Kind,
        /// Edges such as `a-b,b-c` (gibbs) or `D>G,I>G` (bn); bare names add nodes.
        #[arg(long)]
        graph: String,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 2)]
        card: usize,
    },
    /// Run the clique-graph reduction test.
    Istcg {
        #[arg(long)]
        model: PathBuf,
    },
    /// Decide a statement `X _|_ Y | Z` from the graph.
    Indep {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        query: String,
    },
    /// Print the model graph (or its clique graph) as DOT.
    ExportDot {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        clique_graph: bool,
    },
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse { .. } | Error::ExprParse { .. } | Error::InvalidModel(_) | Error::Io(_) => EXIT_PARSE,
        Error::UndefinedCr(_) | Error::UndefinedConditional(_) => EXIT_VERIFY,
        _ => EXIT_PRECONDITION,
    }
}

pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                EXIT_PARSE
            } else {
                let _ = write!(out, "{text}");
                EXIT_OK
            };
        }
    };
    match execute(cli.command, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn load(path: &Path) -> Result<Model> {
    parse_model(&read(path)?)
}

fn io(e: std::io::Error) -> Error {
    Error::Io(e.to_string())
}

fn execute(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    match command {
        Command::Factorize {
            method,
            model,
            trace,
            chain,
            emit_trace,
            tol,
            no_verify,
        } => {
            let model = load(&model)?;
            factorize(&model, method, trace.as_deref(), &chain, emit_trace.as_deref(), tol, no_verify, out, err)
        }
        Command::Verify { model, expr, expr_text, tol } => {
            let model = load(&model)?;
            let text = match (expr, expr_text) {
                (Some(p), _) => read(&p)?,
                (None, Some(t)) => t,
                (None, None) => unreachable!("clap requires one of them"),
            };
            let e = parse_expr(text.trim())?;
            let report = verify_joint(&e, &model.joint()?, tol)?;
            writeln!(out, "{report}").map_err(io)?;
            Ok(if report.pass { EXIT_OK } else { EXIT_VERIFY })
        }
        Command::GenRandom { kind, graph, seed, card } => {
            let (gk, rk) = match kind {
                Kind::Gibbs => (GraphKind::Undirected, RandomKind::Gibbs),
                Kind::Bn => (GraphKind::Directed, RandomKind::Bn),
            };
            let g = parse_graph_spec(&graph, gk)?;
            let m = random_model(rk, &g, seed, card)?;
            write!(out, "{}", crate::model::write_model(&m)).map_err(io)?;
            Ok(EXIT_OK)
        }
        Command::Istcg { model } => {
            let model = load(&model)?;
            let g = undirected_view(&model);
            let check = is_tcg(&g)?;
            writeln!(out, "TCG: {}", check.is_tcg).map_err(io)?;
            for e in &check.eliminations {
                writeln!(out, "remove {{{}}} via {{{}}}", e.clique.members().join(" "), e.max_adjacent.members().join(" ")).map_err(io)?;
            }
            if let Some(r) = &check.root {
                writeln!(out, "root {{{}}}", r.members().join(" ")).map_err(io)?;
            }
            Ok(EXIT_OK)
        }
        Command::Indep { model, query } => {
            let model = load(&model)?;
            let q: CiQuery = query.parse()?;
            let sep = graph_separated(&model.graph, &q)?;
            let label = if model.graph.is_directed() { "d-separated" } else { "separated" };
            writeln!(out, "{label}: {sep}").map_err(io)?;
            Ok(EXIT_OK)
        }
        Command::ExportDot { model, clique_graph } => {
            let model = load(&model)?;
            let text = if clique_graph {
                clique_graph_dot(&build_clique_graph(&undirected_view(&model))?)
            } else {
                model_graph_dot(&model.graph)
            };
            write!(out, "{text}").map_err(io)?;
            Ok(EXIT_OK)
        }
    }
}

/// Clique queries on a directed model run on its moral graph.
fn undirected_view(model: &Model) -> crate::model::ModelGraph {
    if model.graph.is_directed() {
        model.graph.moral_graph()
    } else {
        model.graph.clone()
    }
}

enum Target<'a> {
    Joint,
    Conditional(&'a [String], Vec<String>),
}

#[allow(clippy::too_many_arguments)]
fn factorize(
    model: &Model,
    method: Method,
    trace: Option<&Path>,
    chain: &[String],
    emit_trace: Option<&Path>,
    tol: f64,
    no_verify: bool,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32> {
    let table: JointTable = model.joint()?;
    let g = &model.graph;
    if method != Method::Trace && trace.is_some() {
        return Err(Error::precondition("--trace is only used with --method trace"));
    }
    let mut target = Target::Joint;
    let (expr, derivation): (FactorExpr, Option<TraceFile>) = match method {
        Method::Bn => {
            let f = factorize_bn(g, None)?;
            (f.expr.clone(), Some(TraceFile::new(&f.initial, f.trace, Some(&f.expr))))
        }
        Method::Tree => {
            let f = factorize_tree_mn(g)?;
            (f.expr.clone(), Some(TraceFile::new(&f.initial, f.trace, Some(&f.expr))))
        }
        Method::Partition => {
            let f = factorize_markov(g, Some(&table), None)?;
            (f.expr.clone(), Some(TraceFile::new(&f.initial, f.trace, Some(&f.expr))))
        }
        Method::ChainCrf => {
            if chain.is_empty() {
                return Err(Error::precondition("chain-crf needs --chain y1,y2,..."));
            }
            let f = factorize_chain_crf(&table, chain)?;
            let given = table.names().into_iter().filter(|n| !chain.iter().any(|y| y == n)).map(String::from).collect();
            target = Target::Conditional(chain, given);
            (f.expr.clone(), Some(TraceFile::new(&f.initial, f.trace, Some(&f.expr))))
        }
        Method::Mrf => (mrf_expression(&mrf_factorize(&table, g, &model.defaults)?), None),
        Method::Rmrf => (rmrf_factorize(&table, g, &model.defaults)?, None),
        Method::Tcg => {
            let r = factorize_tcg(&table, g)?;
            let f = &r.derivation;
            (r.expr(), Some(TraceFile::new(&f.initial, f.trace.clone(), Some(&f.expr))))
        }
        Method::Trace => {
            let path = trace.ok_or_else(|| Error::precondition("method trace needs --trace FILE"))?;
            let file = TraceFile::from_json(&read(path)?)?;
            let positive = Some(&table).filter(|t| t.is_strictly_positive());
            let result = file.replay(&ctx(g, positive))?;
            (result, None)
        }
    };

    if let Some(path) = emit_trace {
        let file = derivation.ok_or_else(|| Error::precondition("this method does not produce a rewrite trace"))?;
        std::fs::write(path, file.to_json()).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    }
    if no_verify {
        writeln!(out, "{expr}").map_err(io)?;
        return Ok(EXIT_OK);
    }
    let report: VerificationReport = match &target {
        Target::Joint => verify_joint(&expr, &table, tol)?,
        Target::Conditional(labels, given) => verify_conditional(&expr, &table, labels, given, tol)?,
    };
    if !report.pass {
        writeln!(err, "{report}").map_err(io)?;
        return Ok(EXIT_VERIFY);
    }
    writeln!(out, "{expr}").map_err(io)?;
    writeln!(out, "{report}").map_err(io)?;
    Ok(EXIT_OK)
}
