use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use mwtree::charlike::bound_report_from;
use mwtree::harness::{run_checks, CheckConfig, ALL_CLASSES};
use mwtree::pseudoinverse::pinv_grounded_at;
use mwtree::report::summarize_charlike;
use mwtree::{
    algebraic_connectivity, induce, laplacian, locate_from, parse_tree, scalar_characteristic,
    triangular_equivalence_check, Error, ReportDocument, Tree, VertexId, WeightClass,
    DEFAULT_TIE_TOL,
};

#[derive(Parser)]
#[command(
    name = "mwtree",
    version,
    about = "Spectral analysis of trees with matrix edge weights"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Full spectral report: characteristic-like object, kappa, mu, Perron values
    Analyze(TreeArgs),
    /// Locate the characteristic-like vertex or edge and print the walk
    Charlike(TreeArgs),
    /// Print kappa and mu
    Kappa(TreeArgs),
    /// Export the Laplacian and its Moore-Penrose inverse as JSON
    Pinv {
        #[command(flatten)]
        tree: TreeArgs,
        /// Vertex to ground at (defaults to the last vertex)
        #[arg(long)]
        grounded_at: Option<String>,
    },
    /// Induced scalar trees of a triangular-weight tree
    Induced(TreeArgs),
    /// Run the randomized property suite
    Check(CheckArgs),
}

#[derive(Args)]
struct TreeArgs {
    /// Tree file (JSON)
    input: PathBuf,
    /// Write output here instead of stdout
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Emit JSON instead of text
    #[arg(long)]
    json: bool,
    /// Relative tolerance for tied Perron values
    #[arg(long, default_value_t = DEFAULT_TIE_TOL)]
    tie_tol: f64,
    /// Vertex label where the Perron walk starts
    #[arg(long)]
    start_vertex: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ClassFilter {
    Pd,
    Lower,
    Upper,
    Nonsingular,
    All,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long, value_enum, default_value = "all")]
    class: ClassFilter,
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    trials: u64,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(2..))]
    n_max: u64,
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u64).range(1..))]
    s_max: u64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_TIE_TOL)]
    tie_tol: f64,
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

/// Failure classes mapped to exit codes.
enum Failure {
    Input(anyhow::Error),
    Property(String),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Input(e)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::PenroseFailure { .. }
            | Error::NonTermination { .. }
            | Error::Bracket { .. }
            | Error::RankAnomaly { .. }
            | Error::Inconsistent { .. } => Failure::Property(e.to_string()),
            other => Failure::Input(other.into()),
        }
    }
}

fn load(path: &Path) -> anyhow::Result<Tree> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    parse_tree(&text).with_context(|| format!("invalid tree file {}", path.display()))
}

fn resolve_vertex(tree: &Tree, name: &str) -> anyhow::Result<VertexId> {
    tree.vertex_by_label(name)
        .ok_or_else(|| anyhow!("unknown vertex {name:?}"))
}

fn emit(output: &Option<PathBuf>, text: &str) -> anyhow::Result<()> {
    match output {
        Some(path) => {
            fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn pretty(value: &impl serde::Serialize) -> String {
    serde_json::to_string_pretty(value).expect("reports serialize") + "\n"
}

fn start_of(tree: &Tree, args: &TreeArgs) -> anyhow::Result<VertexId> {
    args.start_vertex
        .as_deref()
        .map_or(Ok(0), |name| resolve_vertex(tree, name))
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Analyze(args) => {
            let tree = load(&args.input)?;
            let report = bound_report_from(&tree, start_of(&tree, &args)?, args.tie_tol)?;
            let doc = ReportDocument::new(&tree, &report);
            let text = if args.json {
                pretty(&doc)
            } else {
                doc.render_text()
            };
            emit(&args.output, &text)?;
            if !doc.bound_holds {
                return Err(Failure::Property(format!(
                    "kappa = {} exceeds mu = {}",
                    doc.kappa, doc.mu
                )));
            }
        }
        Command::Charlike(args) => {
            let tree = load(&args.input)?;
            let result = locate_from(&tree, start_of(&tree, &args)?, args.tie_tol)?;
            let summary = summarize_charlike(&tree, &result);
            let text = if args.json {
                pretty(&summary)
            } else {
                let mut t = summary.describe();
                if let Some(nu) = summary.nu {
                    t += &format!(", nu = {nu:.9}");
                }
                t + &format!("\nwalk: {}\n", summary.walk_trace.join(" -> "))
            };
            emit(&args.output, &text)?;
        }
        Command::Kappa(args) => {
            let tree = load(&args.input)?;
            let report = bound_report_from(&tree, start_of(&tree, &args)?, args.tie_tol)?;
            let text = if args.json {
                pretty(&json!({
                    "kappa": report.kappa,
                    "mu": report.mu,
                    "bound_holds": report.bound_holds,
                }))
            } else {
                format!("kappa = {:.9}\nmu    = {:.9}\n", report.kappa, report.mu)
            };
            emit(&args.output, &text)?;
            if !report.bound_holds {
                return Err(Failure::Property(format!(
                    "kappa = {} exceeds mu = {}",
                    report.kappa, report.mu
                )));
            }
        }
        Command::Pinv {
            tree: args,
            grounded_at,
        } => {
            let tree = load(&args.input)?;
            let v = match grounded_at.as_deref() {
                Some(name) => resolve_vertex(&tree, name)?,
                None => tree.n() - 1,
            };
            let r = pinv_grounded_at(&tree, v)?;
            let doc = json!({
                "s": tree.s(),
                "vertices": tree.labels(),
                "laplacian": laplacian(&tree).data.to_rows(),
                "pinv": r.pinv.data.to_rows(),
                "penrose_residuals": r.penrose_residuals,
                "projector_residual": r.projector_residual,
                "tolerance": r.tolerance,
            });
            emit(&args.output, &pretty(&doc))?;
        }
        Command::Induced(args) => {
            let tree = load(&args.input)?;
            let induced = induce(&tree)?;
            let equivalence = triangular_equivalence_check(&tree)?;
            let mut trees = Vec::new();
            for st in &induced {
                let c = scalar_characteristic(st)?;
                let located: Vec<&str> = c
                    .kind
                    .vertices()
                    .into_iter()
                    .map(|v| tree.label(v))
                    .collect();
                trees.push(json!({
                    "index": st.origin.map(|j| j + 1),
                    "weights": st.weights(),
                    "characteristic": c.kind,
                    "characteristic_vertices": located,
                    "algebraic_connectivity": algebraic_connectivity(st)?,
                }));
            }
            let text = if args.json {
                pretty(&json!({ "induced": trees, "equivalence": equivalence }))
            } else {
                let mut t = String::new();
                for (st, entry) in induced.iter().zip(&trees) {
                    t += &format!(
                        "T({}): weights {:?}; characteristic {}; algebraic connectivity {:.9}\n",
                        st.origin.unwrap() + 1,
                        st.weights(),
                        entry["characteristic_vertices"],
                        entry["algebraic_connectivity"].as_f64().unwrap()
                    );
                }
                t + &format!(
                    "permutation residual {:e}; diagonal blocks match: {}; block triangular: {}\n",
                    equivalence.residual,
                    equivalence.diagonal_blocks_match,
                    equivalence.block_triangular
                )
            };
            emit(&args.output, &text)?;
            if !equivalence.passed() {
                return Err(Failure::Property(
                    "triangular permutation equivalence failed".into(),
                ));
            }
        }
        Command::Check(args) => {
            let classes = match args.class {
                ClassFilter::Pd => vec![WeightClass::PositiveDefinite],
                ClassFilter::Lower => vec![WeightClass::LowerTriangular],
                ClassFilter::Upper => vec![WeightClass::UpperTriangular],
                ClassFilter::Nonsingular => vec![WeightClass::GeneralNonsingular],
                ClassFilter::All => ALL_CLASSES.to_vec(),
            };
            let config = CheckConfig {
                classes,
                trials: args.trials as usize,
                n_max: args.n_max as usize,
                s_max: args.s_max as usize,
                seed: args.seed,
                tie_tol: args.tie_tol,
            };
            let report = run_checks(&config);
            let text = if args.json {
                pretty(&report)
            } else {
                report.render()
            };
            emit(&args.output, &text)?;
            if !report.all_pass() {
                return Err(Failure::Property("property check failed".into()));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    // Usage errors count as validation failures, not property failures.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(1);
        }
        Err(e) => e.exit(),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Property(msg)) => {
            eprintln!("property failure: {msg}");
            ExitCode::from(2)
        }
    }
}
