//! Construction pipeline and the table-reproduction harness.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Duration;

use womcode::codec::CodeTable;
use womcode::generate::{flash_graph, ici_graph, DeviceKind, FlashSpec, GenerateError};
use womcode::labeling::{build_problem, solve_exact, Labeling, LabelingError, SolveOutcome};
use womcode::regions::{build_regions, TieBreak, WorstWrites};
use womcode::tablefile;
use womcode::verify::{upper_bound_flash, upper_bound_ici, BoundKind};

use crate::golden::{Column, PublishedTable};

#[derive(Debug, thiserror::Error)]
pub enum ConstructError {
    #[error(transparent)]
    Generate(#[from] GenerateError),
    #[error(transparent)]
    Labeling(#[from] LabelingError),
    #[error("assembled table failed validation: {0}")]
    Assemble(#[from] womcode::codec::AssembleError),
}

/// Result of one full construction run: the realized code table (always
/// assembled, possibly with a smaller alphabet than requested) plus solver
/// provenance.
pub struct Construction {
    pub table: CodeTable,
    pub requested_messages: u32,
    pub timed_out: bool,
}

impl Construction {
    pub fn achieved_alphabet(&self) -> bool {
        self.table.message_count() == self.requested_messages
    }
}

pub fn device_graph(kind: DeviceKind) -> Result<womcode::TransitionGraph, GenerateError> {
    match kind {
        DeviceKind::Flash { cells, levels } => flash_graph(&FlashSpec::unconstrained(cells, levels)),
        DeviceKind::Ici {
            cells,
            levels,
            imbalance,
        } => ici_graph(&FlashSpec::with_imbalance(cells, levels, imbalance)),
        DeviceKind::Custom => unreachable!("custom graphs are loaded, not generated"),
    }
}

/// Runs generator -> regions -> labeling -> assembly for one device. The
/// labeling targets alphabet `messages` with region size `k`; on a solver
/// timeout the incumbent labeling still yields a working (smaller) code.
pub fn construct_code(
    graph: womcode::TransitionGraph,
    kind: DeviceKind,
    messages: u32,
    k: u32,
    budget: Option<Duration>,
    tie: TieBreak,
) -> Result<Construction, ConstructError> {
    let family = build_regions(&graph, k, tie);
    let (labeling, timed_out) = match build_problem(&family) {
        Ok(problem) => match solve_exact(&problem, budget) {
            SolveOutcome::Optimal(l) => (l, false),
            SolveOutcome::Timeout { incumbent, .. } => (incumbent, true),
        },
        Err(LabelingError::EmptyProblem) => (Labeling::empty(), false),
        Err(other) => return Err(other.into()),
    };
    let table = CodeTable::assemble(kind, graph, family, labeling)?;
    Ok(Construction {
        table,
        requested_messages: messages,
        timed_out,
    })
}

/// Outcome of one harness cell.
pub enum CellOutcome {
    /// Realized an M-message code with this worst number of writes.
    Code { t_star: u32, table: Box<CodeTable> },
    /// Proved the family supports only `m_star < M` messages.
    Shortfall { m_star: u32, t_star: u32 },
    /// Budget exhausted before the labeling was settled.
    Timeout,
}

pub fn run_cell(
    cells: u32,
    column: Column,
    messages: u32,
    budget: Duration,
    tie: TieBreak,
) -> Result<CellOutcome, ConstructError> {
    let kind = match column.imbalance {
        None => DeviceKind::Flash {
            cells,
            levels: column.levels,
        },
        Some(d) => DeviceKind::Ici {
            cells,
            levels: column.levels,
            imbalance: d,
        },
    };
    let graph = device_graph(kind)?;
    let built = construct_code(graph, kind, messages, messages, Some(budget), tie)?;
    let t_star = match built.table.t_star() {
        WorstWrites::Finite(t) => t,
        WorstWrites::Unbounded => u32::MAX,
    };
    if built.timed_out {
        Ok(CellOutcome::Timeout)
    } else if built.achieved_alphabet() {
        Ok(CellOutcome::Code {
            t_star,
            table: Box::new(built.table),
        })
    } else {
        Ok(CellOutcome::Shortfall {
            m_star: built.table.message_count(),
            t_star,
        })
    }
}

pub struct TableRun {
    pub output: String,
    pub cells: usize,
    pub matches: usize,
    pub mismatches: usize,
    pub timeouts: usize,
    pub unpublished: usize,
}

impl TableRun {
    pub fn all_match(&self) -> bool {
        self.mismatches == 0 && self.timeouts == 0
    }
}

fn column_header(c: &Column) -> String {
    match c.imbalance {
        None => c.levels.to_string(),
        Some(d) => format!("d{d}q{}", c.levels),
    }
}

fn file_name(cells: u32, c: &Column, messages: u32) -> String {
    match c.imbalance {
        None => format!("flash-n{cells}-q{}-m{messages}.table", c.levels),
        Some(d) => format!("ici-n{cells}-q{}-d{d}-m{messages}.table", c.levels),
    }
}

/// Reconstructs every cell of a published table and renders the comparison
/// grid. Cell marks: `t=` match, `t!p` differs from the published value,
/// `mX!p` the family provably supports only X messages, `t?` solved where
/// no value was published, `--` solver budget exhausted.
pub fn run_table(
    table: &PublishedTable,
    budget: Duration,
    tie: TieBreak,
    out_dir: Option<&Path>,
) -> Result<TableRun, Box<dyn std::error::Error>> {
    let mut run = TableRun {
        output: String::new(),
        cells: 0,
        matches: 0,
        mismatches: 0,
        timeouts: 0,
        unpublished: 0,
    };
    let out = &mut run.output;
    writeln!(out, "table {}: {}", table.id, table.title)?;

    let label_width = 6;
    let col_width = 7;
    let corner = if table.bound.is_some() { "q" } else { "M\\q" };
    write!(out, "{corner:<label_width$}")?;
    for column in table.columns {
        write!(out, "{:>col_width$}", column_header(column))?;
    }
    writeln!(out)?;

    if let Some(kind) = table.bound {
        write!(out, "{:<label_width$}", "bound")?;
        for column in table.columns {
            let b = match kind {
                BoundKind::Flash => upper_bound_flash(column.levels),
                BoundKind::Ici => upper_bound_ici(column.levels),
            };
            write!(out, "{b:>col_width$}")?;
        }
        writeln!(out)?;
    }

    for (ri, &messages) in table.row_messages.iter().enumerate() {
        let row_label = if table.bound.is_some() {
            "ours".to_string()
        } else {
            messages.to_string()
        };
        write!(out, "{row_label:<label_width$}")?;
        for (ci, column) in table.columns.iter().enumerate() {
            run.cells += 1;
            let published = table.published[ri][ci];
            let outcome = run_cell(table.cells, *column, messages, budget, tie)?;
            let mark = match (outcome, published) {
                (CellOutcome::Code { t_star, table: cell_table }, published) => {
                    if let Some(dir) = out_dir {
                        let path = dir.join(file_name(table.cells, column, messages));
                        tablefile::save(&cell_table, &path)?;
                    }
                    match published {
                        Some(p) if p == t_star => {
                            run.matches += 1;
                            format!("{t_star}=")
                        }
                        Some(p) => {
                            run.mismatches += 1;
                            format!("{t_star}!{p}")
                        }
                        None => {
                            run.unpublished += 1;
                            format!("{t_star}?")
                        }
                    }
                }
                (CellOutcome::Shortfall { m_star, .. }, Some(p)) => {
                    run.mismatches += 1;
                    format!("m{m_star}!{p}")
                }
                (CellOutcome::Shortfall { m_star, .. }, None) => {
                    run.unpublished += 1;
                    format!("m{m_star}?")
                }
                (CellOutcome::Timeout, _) => {
                    run.timeouts += 1;
                    "--".to_string()
                }
            };
            write!(out, "{mark:>col_width$}")?;
        }
        writeln!(out)?;
    }

    writeln!(out, "cells = {}", run.cells)?;
    writeln!(out, "match = {}", run.matches)?;
    writeln!(out, "mismatch = {}", run.mismatches)?;
    writeln!(out, "timeout = {}", run.timeouts)?;
    writeln!(out, "unpublished = {}", run.unpublished)?;
    let result = if run.mismatches > 0 {
        "mismatch"
    } else if run.timeouts > 0 {
        "timeout"
    } else {
        "pass"
    };
    writeln!(out, "result = {result}")?;
    Ok(run)
}
