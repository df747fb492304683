use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use pathgate::blueprint::{export_dot, graph_to_blueprint, BlueprintStyle};
use pathgate::catalog::{self, Catalog, CatalogError};
use pathgate::discovery::{discover, DiscoveryError, OptimizerConfig};
use pathgate::graph::{graph_from_json, graph_to_json, graph_to_value, Graph};
use pathgate::objective::{verify_gate, ObjectiveError, DEFAULT_TOL};
use pathgate::{graph_state, GateSpec};

const EXIT_OK: u8 = 0;
const EXIT_FAILED: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_EXHAUSTED: u8 = 3;
const EXIT_IO: u8 = 4;

#[derive(Parser)]
#[command(name = "pathgate", version, about = "Design and verify post-selected photonic gates as colored weighted graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Search for a graph implementing a gate
    Discover(DiscoverArgs),
    /// Check a graph against a gate
    Verify {
        graph: PathBuf,
        gate: String,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        /// Write the JSON report here ("-" for stdout)
        #[arg(long)]
        report: Option<String>,
    },
    /// Print the post-selected state of a graph
    State {
        graph: PathBuf,
        #[arg(long)]
        normalize: bool,
    },
    /// Convert a graph to another representation
    Export {
        graph: PathBuf,
        #[arg(long, value_enum)]
        format: ExportFormat,
    },
    /// Work with the pinned fixture catalog
    Fixtures {
        #[command(subcommand)]
        action: FixturesAction,
        #[arg(long, global = true)]
        dir: Option<PathBuf>,
    },
}

#[derive(clap::Args)]
struct DiscoverArgs {
    /// Gate spec, e.g. cx:2,2 or ccx:3
    gate: String,
    #[arg(long)]
    ancillas: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    real_only: bool,
    #[arg(long)]
    snap: bool,
    /// Seed ancillas only in their heralding mode
    #[arg(long)]
    herald_only: bool,
    /// Vertex pair that may not share an edge, as "a-b"
    #[arg(long = "forbid", value_parser = parse_pair)]
    forbid: Vec<(usize, usize)>,
    /// JSON file with optimizer settings; flags take precedence
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output graph path ("-" for stdout)
    #[arg(short = 'o', long)]
    output: Option<String>,
    /// Write the loss trace as CSV
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Subcommand)]
enum FixturesAction {
    List,
    /// Load and verify every fixture
    Check,
    /// Re-run a fixture's recipe
    Regen {
        id: String,
        /// Permit recipes tagged long-running
        #[arg(long)]
        allow_long: bool,
        /// Overwrite the stored fixture with the result
        #[arg(long)]
        write: bool,
        #[arg(long, default_value = "unspecified")]
        date: String,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ExportFormat {
    Dot,
    Json,
    Blueprint,
    BlueprintPe,
    BlueprintJson,
    BlueprintPeJson,
}

fn parse_pair(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once('-').ok_or_else(|| format!("expected a-b, got {s:?}"))?;
    let a = a.trim().parse().map_err(|_| format!("bad vertex {a:?}"))?;
    let b = b.trim().parse().map_err(|_| format!("bad vertex {b:?}"))?;
    Ok((a, b))
}

/// Failure carrying the process exit code.
struct Fail(u8, String);

impl Fail {
    fn usage(msg: impl ToString) -> Self {
        Fail(EXIT_USAGE, msg.to_string())
    }
    fn io(msg: impl ToString) -> Self {
        Fail(EXIT_IO, msg.to_string())
    }
}

fn read_graph(path: &Path) -> Result<Graph, Fail> {
    let text = fs::read_to_string(path).map_err(|e| Fail::io(format!("{}: {e}", path.display())))?;
    graph_from_json(&text).map_err(|e| Fail::io(format!("{}: {e}", path.display())))
}

fn parse_gate(text: &str) -> Result<GateSpec, Fail> {
    text.parse().map_err(Fail::usage)
}

fn emit(dest: &str, text: &str) -> Result<(), Fail> {
    if dest == "-" {
        println!("{}", text.trim_end());
        Ok(())
    } else {
        fs::write(dest, format!("{}\n", text.trim_end())).map_err(|e| Fail::io(format!("{dest}: {e}")))
    }
}

fn load_config(args: &DiscoverArgs) -> Result<(OptimizerConfig, usize), Fail> {
    let (mut cfg, mut ancillas) = (OptimizerConfig::default(), 0);
    if let Some(path) = &args.config {
        let text = fs::read_to_string(path).map_err(|e| Fail::io(format!("{}: {e}", path.display())))?;
        let mut value: Value =
            serde_json::from_str(&text).map_err(|e| Fail::io(format!("{}: {e}", path.display())))?;
        if let Some(n) = value.as_object_mut().and_then(|o| o.remove("ancillas")) {
            ancillas = n.as_u64().ok_or_else(|| Fail::io("config: ancillas must be an integer"))? as usize;
        }
        cfg = serde_json::from_value(value).map_err(|e| Fail::io(format!("{}: {e}", path.display())))?;
    }
    if let Some(n) = args.ancillas {
        ancillas = n;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(r) = args.restarts {
        cfg.max_restarts = r;
    }
    if let Some(s) = args.steps {
        cfg.steps_per_optimize = s;
    }
    cfg.real_only |= args.real_only;
    cfg.snap_weights |= args.snap;
    cfg.herald_only |= args.herald_only;
    if !args.forbid.is_empty() {
        cfg.forbidden = args.forbid.clone();
    }
    Ok((cfg, ancillas))
}

fn run_discover(args: DiscoverArgs) -> Result<u8, Fail> {
    let spec = parse_gate(&args.gate)?;
    let (cfg, ancillas) = load_config(&args)?;
    let result = match discover(&spec, ancillas, &cfg) {
        Ok(r) => r,
        Err(e @ DiscoveryError::NoSolution { .. }) => return Err(Fail(EXIT_EXHAUSTED, e.to_string())),
        Err(e @ (DiscoveryError::Unmatchable | DiscoveryError::PolishFailed { .. })) => {
            return Err(Fail(EXIT_EXHAUSTED, e.to_string()))
        }
        Err(e) => return Err(Fail::usage(e)),
    };
    let mut graph = result.graph.clone();
    let trace: Vec<Value> = result.loss_trace.iter().map(|p| json!([p.edge_count, p.loss])).collect();
    graph.meta.insert(
        "discovery".into(),
        json!({
            "gate": spec.name,
            "ancillas": ancillas,
            "seed": result.seed,
            "restart": result.restart,
            "fidelity": result.fidelity,
            "loss": result.loss,
            "edge_count": graph.edge_count(),
            "cfg_digest": cfg.digest(),
            "loss_trace": trace,
        }),
    );
    if let Some(path) = &args.trace {
        fs::write(path, result.trace_csv()).map_err(|e| Fail::io(format!("{}: {e}", path.display())))?;
    }
    let summary = format!(
        "{}: {} edges, {} ancillas, fidelity {:.12}, seed {} restart {}",
        spec.name,
        graph.edge_count(),
        ancillas,
        result.fidelity,
        result.seed,
        result.restart
    );
    match args.output.as_deref() {
        Some("-") => emit("-", &graph_to_json(&graph))?,
        Some(path) => {
            emit(path, &graph_to_json(&graph))?;
            eprintln!("{summary}");
        }
        None => {
            println!("{summary}");
            for e in &graph.edges {
                println!(
                    "  {:>2} -- {:<2} modes ({},{})  w = {:+.6}{:+.6}i",
                    e.a, e.b, e.mode_a, e.mode_b, e.weight.re, e.weight.im
                );
            }
        }
    }
    Ok(EXIT_OK)
}

fn run_verify(graph: &Path, gate: &str, tol: f64, report: Option<&str>) -> Result<u8, Fail> {
    let spec = parse_gate(gate)?;
    let g = read_graph(graph)?;
    let r = match verify_gate(&g, &spec, tol) {
        Ok(r) => r,
        Err(e @ (ObjectiveError::Gate(_) | ObjectiveError::LayoutMismatch)) => return Err(Fail::usage(e)),
        Err(e) => return Err(Fail::io(e)),
    };
    match report {
        Some(dest) => emit(dest, &r.to_json())?,
        None => {
            println!("gate {}  fidelity {:.12}  count rate {:.6e}", r.gate, r.fidelity, r.count_rate);
            println!("ancillas {}  feed-forwardable {}", r.ancilla_count, r.feed_forwardable);
            for row in &r.truth_table {
                let observed = match &row.observed {
                    Some(y) => format!("{y:?}"),
                    None if row.supported => "superposed".to_string(),
                    None => "unsupported".to_string(),
                };
                println!(
                    "  {:?} -> {:?}  observed {:<12} F = {:.12}  {}",
                    row.input,
                    row.expected,
                    observed,
                    row.conditional_fidelity,
                    if row.pass { "pass" } else { "FAIL" }
                );
            }
        }
    }
    Ok(if r.passed() { EXIT_OK } else { EXIT_FAILED })
}

fn run_fixtures(action: FixturesAction, dir: Option<PathBuf>) -> Result<u8, Fail> {
    let cat = dir.map(Catalog::open).unwrap_or_default();
    match action {
        FixturesAction::List => {
            for e in catalog::registry() {
                let tag = if e.long_running { " (long-running)" } else { "" };
                println!("{}\t{}{}", e.id, e.gate, tag);
            }
            Ok(EXIT_OK)
        }
        FixturesAction::Check => {
            let mut code = EXIT_OK;
            for id in catalog::list_fixtures() {
                match cat.load_fixture(id) {
                    Ok(f) => println!(
                        "ok    {id}: {} edges, {} ancillas, fidelity {:.12}",
                        f.graph.edge_count(),
                        f.expected.ancilla_count,
                        f.expected.fidelity
                    ),
                    Err(e) => {
                        println!("FAIL  {id}");
                        eprintln!("{e}");
                        code = code.max(match e {
                            CatalogError::Drift { .. } => EXIT_FAILED,
                            _ => EXIT_IO,
                        });
                    }
                }
            }
            Ok(code)
        }
        FixturesAction::Regen { id, allow_long, write, date } => {
            let regen = match cat.regenerate_fixture(&id, None, allow_long, &date) {
                Ok(r) => r,
                Err(e @ CatalogError::UnknownId(_)) => return Err(Fail::usage(e)),
                Err(e @ (CatalogError::Discovery { .. } | CatalogError::LongRunning(_))) => {
                    return Err(Fail(EXIT_EXHAUSTED, e.to_string()))
                }
                Err(e) => return Err(Fail::io(e)),
            };
            let f = &regen.fixture;
            println!(
                "{id}: {} edges (stored {}), {} ancillas, fidelity {:.12}, consistent {}",
                f.graph.edge_count(),
                regen.stored_edges.map_or("-".to_string(), |n| n.to_string()),
                f.expected.ancilla_count,
                f.expected.fidelity,
                regen.consistent
            );
            if write {
                let path = cat.save(f).map_err(Fail::io)?;
                eprintln!("wrote {}", path.display());
            }
            Ok(if regen.consistent { EXIT_OK } else { EXIT_FAILED })
        }
    }
}

fn run(cli: Cli) -> Result<u8, Fail> {
    match cli.command {
        Command::Discover(args) => run_discover(args),
        Command::Verify { graph, gate, tol, report } => run_verify(&graph, &gate, tol, report.as_deref()),
        Command::State { graph, normalize } => {
            let g = read_graph(&graph)?;
            let mut psi = graph_state(&g);
            if normalize {
                psi = psi.normalized().unwrap_or(psi);
            }
            println!("{psi}");
            Ok(EXIT_OK)
        }
        Command::Export { graph, format } => {
            let g = read_graph(&graph)?;
            let text = match format {
                ExportFormat::Dot => export_dot(&g),
                ExportFormat::Json => {
                    let mut text = serde_json::to_string_pretty(&graph_to_value(&g)).expect("serializes");
                    text.push('\n');
                    text
                }
                ExportFormat::Blueprint | ExportFormat::BlueprintJson => {
                    let doc = graph_to_blueprint(&g, BlueprintStyle::PathIdentity).map_err(Fail::io)?;
                    if matches!(format, ExportFormat::Blueprint) { doc.to_string() } else { doc.to_json() }
                }
                ExportFormat::BlueprintPe | ExportFormat::BlueprintPeJson => {
                    let doc = graph_to_blueprint(&g, BlueprintStyle::PathErasure).map_err(Fail::io)?;
                    if matches!(format, ExportFormat::BlueprintPe) { doc.to_string() } else { doc.to_json() }
                }
            };
            print!("{}", text);
            if !text.ends_with('\n') {
                println!();
            }
            Ok(EXIT_OK)
        }
        Command::Fixtures { action, dir } => run_fixtures(action, dir),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Fail(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
