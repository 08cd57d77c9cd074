//! Versioned plain-text persistence for code tables.
//!
//! The format is line oriented and canonical: saving is deterministic, so
//! identical tables produce byte-identical files, and `save(load(f)) == f`
//! for any file `f` written by [`save`]. Loading re-validates every region,
//! layer, and labeling invariant, so a tampered file is rejected rather than
//! producing an inconsistent table.
//!
//! ```text
//! womcode-table v1
//! kind flash 2 4          # or: kind ici 2 4 2 | kind custom
//! root 1
//! nodes 16
//! k 5
//! messages 5
//! t-star 2                # or: t-star inf
//! solver optimal          # or: solver unproven
//! node 1 0,0 1            # id, level vector or '-', message or '-'
//! edge 1 2                # custom graphs only
//! region 1 1 2 5 6 11     # start point, then its k members
//! layer 0 1               # layer index, then its members
//! end
//! ```

use std::fmt::Write as _;
use std::path::Path;

use crate::codec::{AssembleError, CodeTable};
use crate::generate::{DeviceKind, GenerateError};
use crate::graph::{GraphError, NodeId, TransitionGraph};
use crate::labeling::Labeling;
use crate::regions::{FamilyError, RegionFamily, WorstWrites};

#[derive(Debug, thiserror::Error)]
pub enum TableFileError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("inconsistent table file: {0}")]
    Inconsistent(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Generate(#[from] GenerateError),
    #[error(transparent)]
    Family(#[from] FamilyError),
    #[error(transparent)]
    Assemble(#[from] AssembleError),
}

/// Renders a table in the canonical format.
pub fn render(table: &CodeTable) -> String {
    let mut out = String::new();
    out.push_str("womcode-table v1\n");
    match table.kind() {
        DeviceKind::Flash { cells, levels } => {
            writeln!(out, "kind flash {cells} {levels}").unwrap();
        }
        DeviceKind::Ici {
            cells,
            levels,
            imbalance,
        } => {
            writeln!(out, "kind ici {cells} {levels} {imbalance}").unwrap();
        }
        DeviceKind::Custom => out.push_str("kind custom\n"),
    }
    writeln!(out, "root {}", table.graph().root()).unwrap();
    writeln!(out, "nodes {}", table.graph().node_count()).unwrap();
    writeln!(out, "k {}", table.regions().k()).unwrap();
    writeln!(out, "messages {}", table.message_count()).unwrap();
    writeln!(out, "t-star {}", table.t_star()).unwrap();
    writeln!(
        out,
        "solver {}",
        if table.labeling().is_proven_optimal() {
            "optimal"
        } else {
            "unproven"
        }
    )
    .unwrap();
    for node in table.graph().nodes() {
        let coords = match table.graph().coordinates(node) {
            Some(levels) => levels
                .iter()
                .map(|l| l.to_string())
                .collect::<Vec<_>>()
                .join(","),
            None => "-".to_string(),
        };
        let label = match table.labeling().message_of(node) {
            Some(m) => m.to_string(),
            None => "-".to_string(),
        };
        writeln!(out, "node {node} {coords} {label}").unwrap();
    }
    if table.kind() == DeviceKind::Custom {
        for &(from, to) in table.graph().edges() {
            writeln!(out, "edge {from} {to}").unwrap();
        }
    }
    for owner in table.regions().nonempty_start_points() {
        write!(out, "region {owner}").unwrap();
        for member in table.regions().region(owner) {
            write!(out, " {member}").unwrap();
        }
        out.push('\n');
    }
    for (i, layer) in table.regions().layers().iter().enumerate() {
        write!(out, "layer {i}").unwrap();
        for member in layer {
            write!(out, " {member}").unwrap();
        }
        out.push('\n');
    }
    out.push_str("end\n");
    out
}

pub fn save(table: &CodeTable, path: &Path) -> Result<(), TableFileError> {
    std::fs::write(path, render(table)).map_err(|source| TableFileError::Io {
        path: path.display().to_string(),
        source,
    })
}

struct RawTable {
    kind: DeviceKind,
    root: u32,
    nodes: usize,
    k: u32,
    messages: u32,
    t_star: Option<WorstWrites>,
    proven: Option<bool>,
    node_lines: Vec<(u32, Option<Vec<u16>>, Option<u32>)>,
    edges: Vec<(u32, u32)>,
    regions: Vec<(NodeId, Vec<NodeId>)>,
    layers: Vec<(u32, Vec<NodeId>)>,
}

/// Parses and fully re-validates a table document.
pub fn parse(text: &str) -> Result<CodeTable, TableFileError> {
    let raw = parse_raw(text)?;
    build_table(raw)
}

pub fn load(path: &Path) -> Result<CodeTable, TableFileError> {
    let text = std::fs::read_to_string(path).map_err(|source| TableFileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse(&text)
}

fn parse_raw(text: &str) -> Result<RawTable, TableFileError> {
    let err = |line: usize, message: String| TableFileError::Parse { line, message };
    let mut lines = text.lines().enumerate();

    let (_, first) = lines
        .next()
        .ok_or_else(|| err(1, "empty file".into()))?;
    if first.trim() != "womcode-table v1" {
        return Err(err(1, "expected header `womcode-table v1`".into()));
    }

    let mut kind: Option<DeviceKind> = None;
    let mut root: Option<u32> = None;
    let mut nodes: Option<usize> = None;
    let mut k: Option<u32> = None;
    let mut messages: Option<u32> = None;
    let mut t_star: Option<WorstWrites> = None;
    let mut proven: Option<bool> = None;
    let mut node_lines = Vec::new();
    let mut edges = Vec::new();
    let mut regions = Vec::new();
    let mut layers = Vec::new();
    let mut saw_end = false;

    for (idx, raw_line) in lines {
        let line = idx + 1;
        let content = raw_line.split('#').next().unwrap_or("");
        let mut fields = content.split_whitespace();
        let Some(keyword) = fields.next() else {
            continue;
        };
        if saw_end {
            return Err(err(line, "content after `end`".into()));
        }
        let rest: Vec<&str> = fields.collect();
        let int = |s: &str, what: &str| -> Result<u32, TableFileError> {
            s.parse::<u32>()
                .map_err(|_| err(line, format!("{what} is not a decimal integer: `{s}`")))
        };
        match keyword {
            "kind" => {
                let parsed = match rest.as_slice() {
                    ["flash", cells, levels] => DeviceKind::Flash {
                        cells: int(cells, "cell count")?,
                        levels: int(levels, "level count")?,
                    },
                    ["ici", cells, levels, d] => DeviceKind::Ici {
                        cells: int(cells, "cell count")?,
                        levels: int(levels, "level count")?,
                        imbalance: int(d, "imbalance bound")?,
                    },
                    ["custom"] => DeviceKind::Custom,
                    _ => return Err(err(line, "malformed kind line".into())),
                };
                kind = Some(parsed);
            }
            "root" => root = Some(int(rest.first().ok_or_else(|| err(line, "missing root id".into()))?, "root id")?),
            "nodes" => {
                nodes = Some(int(
                    rest.first().ok_or_else(|| err(line, "missing node count".into()))?,
                    "node count",
                )? as usize)
            }
            "k" => k = Some(int(rest.first().ok_or_else(|| err(line, "missing k".into()))?, "k")?),
            "messages" => {
                messages = Some(int(
                    rest.first().ok_or_else(|| err(line, "missing message count".into()))?,
                    "message count",
                )?)
            }
            "t-star" => {
                let value = rest.first().ok_or_else(|| err(line, "missing t-star".into()))?;
                t_star = Some(if *value == "inf" {
                    WorstWrites::Unbounded
                } else {
                    WorstWrites::Finite(int(value, "t-star")?)
                });
            }
            "solver" => {
                proven = Some(match rest.as_slice() {
                    ["optimal"] => true,
                    ["unproven"] => false,
                    _ => return Err(err(line, "solver must be `optimal` or `unproven`".into())),
                });
            }
            "node" => {
                let [id, coords, label] = rest.as_slice() else {
                    return Err(err(line, "node line needs id, coordinates, label".into()));
                };
                let id = int(id, "node id")?;
                let coords = if *coords == "-" {
                    None
                } else {
                    let mut levels = Vec::new();
                    for piece in coords.split(',') {
                        levels.push(int(piece, "level")? as u16);
                    }
                    Some(levels)
                };
                let label = if *label == "-" {
                    None
                } else {
                    Some(int(label, "message label")?)
                };
                node_lines.push((id, coords, label));
            }
            "edge" => {
                let [from, to] = rest.as_slice() else {
                    return Err(err(line, "edge line needs two ids".into()));
                };
                edges.push((int(from, "edge source")?, int(to, "edge target")?));
            }
            "region" => {
                let mut ids = rest.iter();
                let owner = int(
                    ids.next().ok_or_else(|| err(line, "region line needs an owner".into()))?,
                    "region owner",
                )?;
                let mut members = Vec::new();
                for id in ids {
                    members.push(NodeId::new(int(id, "region member")?));
                }
                regions.push((NodeId::new(owner), members));
            }
            "layer" => {
                let mut ids = rest.iter();
                let index = int(
                    ids.next().ok_or_else(|| err(line, "layer line needs an index".into()))?,
                    "layer index",
                )?;
                let mut members = Vec::new();
                for id in ids {
                    members.push(NodeId::new(int(id, "layer member")?));
                }
                layers.push((index, members));
            }
            "end" => saw_end = true,
            other => return Err(err(line, format!("unknown directive `{other}`"))),
        }
    }
    if !saw_end {
        return Err(TableFileError::Inconsistent("missing `end` line".into()));
    }

    let missing = |what: &str| TableFileError::Inconsistent(format!("missing `{what}` line"));
    Ok(RawTable {
        kind: kind.ok_or_else(|| missing("kind"))?,
        root: root.ok_or_else(|| missing("root"))?,
        nodes: nodes.ok_or_else(|| missing("nodes"))?,
        k: k.ok_or_else(|| missing("k"))?,
        messages: messages.ok_or_else(|| missing("messages"))?,
        t_star,
        proven,
        node_lines,
        edges,
        regions,
        layers,
    })
}

fn build_table(raw: RawTable) -> Result<CodeTable, TableFileError> {
    let inconsistent = |m: String| TableFileError::Inconsistent(m);

    if raw.k == 0 {
        return Err(inconsistent("region size k must be positive".into()));
    }
    let graph = match raw.kind {
        DeviceKind::Custom => {
            let edges: Vec<(NodeId, NodeId)> = raw
                .edges
                .iter()
                .map(|&(a, b)| (NodeId::new(a), NodeId::new(b)))
                .collect();
            TransitionGraph::build(raw.nodes, &edges, NodeId::new(raw.root))?
        }
        generated => {
            if !raw.edges.is_empty() {
                return Err(inconsistent(
                    "edge lines are only valid for custom graphs".into(),
                ));
            }
            let graph = generated
                .generate()
                .expect("generated kinds regenerate")?;
            if graph.node_count() != raw.nodes {
                return Err(inconsistent(format!(
                    "kind regenerates {} nodes but file declares {}",
                    graph.node_count(),
                    raw.nodes
                )));
            }
            if graph.root().get() != raw.root {
                return Err(inconsistent("root does not match the generated graph".into()));
            }
            graph
        }
    };

    // Node lines: exactly one per node, in any order; coordinates must match
    // the generated device, labels feed the labeling.
    if raw.node_lines.len() != raw.nodes {
        return Err(inconsistent(format!(
            "expected {} node lines, found {}",
            raw.nodes,
            raw.node_lines.len()
        )));
    }
    let mut seen = vec![false; raw.nodes];
    let mut entries: Vec<(NodeId, u32)> = Vec::new();
    for (id, coords, label) in &raw.node_lines {
        let node = NodeId::new(*id);
        graph.check_node(node)?;
        if std::mem::replace(&mut seen[node.index()], true) {
            return Err(inconsistent(format!("duplicate node line for {node}")));
        }
        match (coords, graph.coordinates(node)) {
            (Some(stored), Some(generated)) if stored.as_slice() == generated => {}
            (None, None) => {}
            _ => {
                return Err(inconsistent(format!(
                    "coordinates of node {node} do not match the device model"
                )))
            }
        }
        if let Some(message) = label {
            entries.push((node, *message));
        }
    }
    entries.sort_unstable_by_key(|&(node, _)| node);

    let mut layer_list: Vec<Vec<NodeId>> = Vec::with_capacity(raw.layers.len());
    for (i, (index, members)) in raw.layers.iter().enumerate() {
        if *index as usize != i {
            return Err(inconsistent(format!(
                "layer indices must be contiguous from 0; found {index} at position {i}"
            )));
        }
        let mut members = members.clone();
        members.sort_unstable();
        members.dedup();
        layer_list.push(members);
    }

    let family = RegionFamily::from_parts(&graph, raw.k, &raw.regions, &layer_list)?;
    let labeling = Labeling::from_messages(entries, raw.messages, raw.proven.unwrap_or(true));
    let table = CodeTable::assemble(raw.kind, graph, family, labeling)?;

    if let Some(declared) = raw.t_star {
        if declared != table.t_star() {
            return Err(inconsistent(format!(
                "declared t-star {declared} but the family yields {}",
                table.t_star()
            )));
        }
    }
    Ok(table)
}
