use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};

use womcode::codec::{EncodeResult, WriteOutcome, WriteSession};
use womcode::generate::{load_dag, DeviceKind};
use womcode::graph::NodeId;
use womcode::regions::TieBreak;
use womcode::tablefile;
use womcode::verify::{verify_table, BoundKind};

use womcode_cli::golden;
use womcode_cli::harness::{construct_code, device_graph, run_table};

// Exit codes: 0 success / all cells match, 1 verification failure or table
// mismatch, 2 input error (also used by argument parsing), 3 solver budget
// exhausted.
const EXIT_FAIL: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_TIMEOUT: u8 = 3;

#[derive(Parser)]
#[command(
    name = "womcode",
    version,
    about = "Construct, persist, exercise, and verify fixed-rate WOM codes over DAG-modeled storage"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(ValueEnum, Clone, Copy)]
enum BoundArg {
    Flash,
    Ici,
}

#[derive(Subcommand)]
enum Command {
    /// Construct a code table for a device model and write it to a file.
    Construct {
        /// Flash device: `<CELLS> <LEVELS>`
        #[arg(long, num_args = 2, value_names = ["CELLS", "LEVELS"])]
        flash: Option<Vec<u32>>,
        /// Imbalance-constrained device: `<CELLS> <LEVELS> <D>`
        #[arg(long, num_args = 3, value_names = ["CELLS", "LEVELS", "D"], conflicts_with = "flash")]
        ici: Option<Vec<u32>>,
        /// Custom device from a DAG text file.
        #[arg(long, conflicts_with_all = ["flash", "ici"])]
        dag: Option<PathBuf>,
        /// Message alphabet size M.
        #[arg(long)]
        messages: u32,
        /// Encoding region size (defaults to M).
        #[arg(long)]
        k: Option<u32>,
        /// Labeling budget in seconds.
        #[arg(long, default_value_t = 60)]
        budget: u64,
        /// Seeded tie-break for the greedy region construction
        /// (omitted = deterministic smallest-id order).
        #[arg(long)]
        seed: Option<u64>,
        /// Output table file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Encode one message or a message sequence over a saved table.
    Encode {
        #[arg(long)]
        table: PathBuf,
        /// Starting state (defaults to the root in sequence mode).
        #[arg(long)]
        state: Option<u32>,
        /// Single message to encode.
        #[arg(long, conflicts_with = "sequence")]
        message: Option<u32>,
        /// File with one message per line.
        #[arg(long)]
        sequence: Option<PathBuf>,
    },
    /// Read the message carried by a state.
    Decode {
        #[arg(long)]
        table: PathBuf,
        #[arg(long)]
        state: u32,
    },
    /// Re-validate a saved table: formula vs. simulation, consistency sweep,
    /// optional upper-bound comparison.
    Verify {
        #[arg(long)]
        table: PathBuf,
        #[arg(long, value_enum)]
        bound: Option<BoundArg>,
    },
    /// Reconstruct a published table and compare cell by cell.
    Tables {
        /// 1, 2, 3, 4, ici-ub, ici-n3, or ici-n4.
        #[arg(long)]
        which: String,
        /// Labeling budget per cell, in seconds.
        #[arg(long, default_value_t = 60)]
        budget: u64,
        #[arg(long)]
        seed: Option<u64>,
        /// Also save every realized cell as a table file into this directory.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

struct CliError {
    message: String,
    code: u8,
}

impl CliError {
    fn input(message: impl Into<String>) -> CliError {
        CliError {
            message: message.into(),
            code: EXIT_INPUT,
        }
    }
}

impl<E: std::error::Error> From<E> for CliError {
    fn from(e: E) -> CliError {
        CliError::input(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("womcode: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

fn run(cli: Cli) -> Result<u8, CliError> {
    match cli.command {
        Command::Construct {
            flash,
            ici,
            dag,
            messages,
            k,
            budget,
            seed,
            out,
        } => cmd_construct(flash, ici, dag, messages, k, budget, seed, &out),
        Command::Encode {
            table,
            state,
            message,
            sequence,
        } => cmd_encode(&table, state, message, sequence.as_deref()),
        Command::Decode { table, state } => cmd_decode(&table, state),
        Command::Verify { table, bound } => cmd_verify(&table, bound),
        Command::Tables {
            which,
            budget,
            seed,
            out_dir,
        } => cmd_tables(&which, budget, seed, out_dir.as_deref()),
    }
}

fn tie_break(seed: Option<u64>) -> TieBreak {
    match seed {
        None => TieBreak::ById,
        Some(s) => TieBreak::Seeded(s),
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_construct(
    flash: Option<Vec<u32>>,
    ici: Option<Vec<u32>>,
    dag: Option<PathBuf>,
    messages: u32,
    k: Option<u32>,
    budget: u64,
    seed: Option<u64>,
    out: &Path,
) -> Result<u8, CliError> {
    if messages < 1 {
        return Err(CliError::input("--messages must be at least 1"));
    }
    let k = k.unwrap_or(messages);
    if k < messages {
        return Err(CliError::input(format!(
            "--k {k} is smaller than --messages {messages}"
        )));
    }
    let (kind, graph) = match (flash, ici, dag) {
        (Some(args), None, None) => {
            let kind = DeviceKind::Flash {
                cells: args[0],
                levels: args[1],
            };
            (kind, device_graph(kind)?)
        }
        (None, Some(args), None) => {
            let kind = DeviceKind::Ici {
                cells: args[0],
                levels: args[1],
                imbalance: args[2],
            };
            (kind, device_graph(kind)?)
        }
        (None, None, Some(path)) => (DeviceKind::Custom, load_dag(&path)?),
        _ => {
            return Err(CliError::input(
                "select exactly one device model: --flash, --ici, or --dag",
            ))
        }
    };

    let built = construct_code(
        graph,
        kind,
        messages,
        k,
        Some(Duration::from_secs(budget)),
        tie_break(seed),
    )?;
    let table = &built.table;
    tablefile::save(table, out)?;

    println!("kind = {}", table.kind());
    println!("nodes = {}", table.graph().node_count());
    println!("edges = {}", table.graph().edges().len());
    println!("k = {k}");
    println!("regions = {}", table.regions().nonempty_start_points().count());
    println!("messages-requested = {messages}");
    println!("m-star = {}", table.message_count());
    println!("t-star = {}", table.t_star());
    println!(
        "solver = {}",
        if built.timed_out { "timeout-incumbent" } else { "optimal" }
    );
    println!("out = {}", out.display());
    Ok(if built.timed_out { EXIT_TIMEOUT } else { 0 })
}

fn parse_node(table: &womcode::CodeTable, id: u32) -> Result<NodeId, CliError> {
    let node = NodeId::new(id);
    table.graph().check_node(node)?;
    Ok(node)
}

fn cmd_encode(
    table_path: &Path,
    state: Option<u32>,
    message: Option<u32>,
    sequence: Option<&Path>,
) -> Result<u8, CliError> {
    let table = tablefile::load(table_path)?;
    match (message, sequence) {
        (Some(m), None) => {
            let s = state.ok_or_else(|| CliError::input("--message mode requires --state"))?;
            let s = parse_node(&table, s)?;
            match table.encode(s, m)? {
                EncodeResult::Next(next) => println!("{next}"),
                EncodeResult::Fail => println!("FAIL"),
            }
            Ok(0)
        }
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)?;
            let mut messages = Vec::new();
            for (i, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let m: u32 = line
                    .parse()
                    .map_err(|_| CliError::input(format!("line {}: not a message", i + 1)))?;
                messages.push(m);
            }
            let outcome = match state {
                None => table.write_sequence(&messages)?,
                Some(s) => {
                    let start = parse_node(&table, s)?;
                    let mut session = WriteSession::starting_at(&table, start)?;
                    let mut states = Vec::new();
                    let mut failed = None;
                    for (i, &m) in messages.iter().enumerate() {
                        match session.write(m)? {
                            EncodeResult::Next(next) => states.push(next),
                            EncodeResult::Fail => {
                                failed = Some(i as u32 + 1);
                                break;
                            }
                        }
                    }
                    match failed {
                        None => WriteOutcome::Complete(states),
                        Some(index) => WriteOutcome::FailedAt { index, states },
                    }
                }
            };
            match outcome {
                WriteOutcome::Complete(states) => {
                    println!("{}", join_ids(&states));
                }
                WriteOutcome::FailedAt { index, states } => {
                    if !states.is_empty() {
                        println!("{}", join_ids(&states));
                    }
                    println!("FAIL at {index}");
                }
            }
            Ok(0)
        }
        _ => Err(CliError::input(
            "encode needs exactly one of --message or --sequence",
        )),
    }
}

fn join_ids(states: &[NodeId]) -> String {
    states
        .iter()
        .map(|s| s.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

fn cmd_decode(table_path: &Path, state: u32) -> Result<u8, CliError> {
    let table = tablefile::load(table_path)?;
    let s = parse_node(&table, state)?;
    println!("{}", table.decode(s)?);
    Ok(0)
}

fn cmd_verify(table_path: &Path, bound: Option<BoundArg>) -> Result<u8, CliError> {
    let table = tablefile::load(table_path)?;
    let bound = bound.map(|b| match b {
        BoundArg::Flash => BoundKind::Flash,
        BoundArg::Ici => BoundKind::Ici,
    });
    if bound.is_some() && table.kind() == DeviceKind::Custom {
        return Err(CliError::input(
            "bound comparison needs a generated device model (custom graphs have no q)",
        ));
    }
    let report = verify_table(&table, bound);

    println!("instance = {}", report.instance);
    println!("nodes = {}", table.graph().node_count());
    println!("messages = {}", table.message_count());
    println!("k = {}", table.regions().k());
    println!("t-star-formula = {}", report.t_star_formula);
    println!("t-star-simulated = {}", report.t_star_simulated);
    println!(
        "formula-matches-simulation = {}",
        if report.formula_matches_simulation { "yes" } else { "no" }
    );
    match &report.witness {
        Some(w) => println!(
            "witness = {}",
            w.iter().map(|m| m.to_string()).collect::<Vec<_>>().join(" ")
        ),
        None => println!("witness = none"),
    }
    println!("consistency = {}", if report.consistency_ok { "ok" } else { "fail" });
    println!("monotonic = {}", if report.monotonic_ok { "ok" } else { "fail" });
    println!("checked-pairs = {}", report.checked_pairs);
    if let Some(violation) = &report.violation {
        println!("violation = {violation}");
    }
    if let Some(check) = report.bound {
        println!("bound-kind = {}", check.kind);
        println!("bound = {}", check.value);
        println!(
            "bound-in-range = {}",
            if check.in_stated_range { "yes" } else { "no" }
        );
        println!("meets-bound = {}", if check.meets { "yes" } else { "no" });
    }
    println!("elapsed-ms = {}", report.elapsed.as_millis());
    let passed = report.passed();
    println!("result = {}", if passed { "pass" } else { "fail" });
    Ok(if passed { 0 } else { EXIT_FAIL })
}

fn cmd_tables(
    which: &str,
    budget: u64,
    seed: Option<u64>,
    out_dir: Option<&Path>,
) -> Result<u8, CliError> {
    let table = golden::table_by_id(which).ok_or_else(|| {
        CliError::input(format!(
            "unknown table `{which}`; choose 1, 2, 3, 4, ici-ub, ici-n3, or ici-n4"
        ))
    })?;
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
    }
    let run = run_table(
        table,
        Duration::from_secs(budget),
        tie_break(seed),
        out_dir,
    )
    .map_err(|e| CliError::input(e.to_string()))?;
    print!("{}", run.output);
    Ok(if run.mismatches > 0 {
        EXIT_FAIL
    } else if run.timeouts > 0 {
        EXIT_TIMEOUT
    } else {
        0
    })
}
