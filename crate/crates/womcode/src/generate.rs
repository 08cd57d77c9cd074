//! Device-model generators: multilevel flash grids, imbalance-constrained
//! grids, and graphs loaded from the plain-text DAG format.
//!
//! Generated node ids follow the lexicographic order of the level vectors
//! `(l_1, ..., l_n)`, so the all-zero root is always id 1 and every table or
//! trajectory is reproducible.

use std::path::Path;

use crate::graph::{GraphError, NodeId, TransitionGraph};

/// Hard cap on generated state counts; the closure stores |V|^2 bits.
const MAX_STATES: u64 = 100_000;

/// Parameters of an `n`-cell, `q`-level flash device, optionally constrained
/// so that any two cell levels differ by at most `imbalance`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlashSpec {
    pub cells: u32,
    pub levels: u32,
    pub imbalance: Option<u32>,
}

impl FlashSpec {
    pub fn unconstrained(cells: u32, levels: u32) -> FlashSpec {
        FlashSpec {
            cells,
            levels,
            imbalance: None,
        }
    }

    pub fn with_imbalance(cells: u32, levels: u32, imbalance: u32) -> FlashSpec {
        FlashSpec {
            cells,
            levels,
            imbalance: Some(imbalance),
        }
    }

    fn validate(&self) -> Result<(), GenerateError> {
        if self.cells < 1 {
            return Err(GenerateError::InvalidSpec("cell count must be >= 1".into()));
        }
        if self.levels < 2 {
            return Err(GenerateError::InvalidSpec("level count must be >= 2".into()));
        }
        if self.levels > u16::MAX as u32 {
            return Err(GenerateError::InvalidSpec(format!(
                "level count {} exceeds the supported maximum of {}",
                self.levels,
                u16::MAX
            )));
        }
        if let Some(d) = self.imbalance {
            if d < 1 || d > self.levels - 1 {
                return Err(GenerateError::InvalidSpec(format!(
                    "imbalance bound must satisfy 1 <= d <= q-1, got d={d}, q={}",
                    self.levels
                )));
            }
        }
        let mut states: u64 = 1;
        for _ in 0..self.cells {
            states = states.saturating_mul(self.levels as u64);
            if states > MAX_STATES {
                return Err(GenerateError::InvalidSpec(format!(
                    "state space q^n exceeds the supported maximum of {MAX_STATES}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GenerateError {
    #[error("invalid device spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Provenance of a transition graph, carried through code tables so that
/// persisted artifacts can regenerate their device model and reports can
/// name their instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeviceKind {
    Flash { cells: u32, levels: u32 },
    Ici { cells: u32, levels: u32, imbalance: u32 },
    Custom,
}

impl DeviceKind {
    /// Regenerates the device graph; `None` for custom graphs, whose edges
    /// must be carried explicitly.
    pub fn generate(&self) -> Option<Result<TransitionGraph, GenerateError>> {
        match *self {
            DeviceKind::Flash { cells, levels } => {
                Some(flash_graph(&FlashSpec::unconstrained(cells, levels)))
            }
            DeviceKind::Ici {
                cells,
                levels,
                imbalance,
            } => Some(ici_graph(&FlashSpec::with_imbalance(cells, levels, imbalance))),
            DeviceKind::Custom => None,
        }
    }

    pub fn cells(&self) -> Option<u32> {
        match *self {
            DeviceKind::Flash { cells, .. } | DeviceKind::Ici { cells, .. } => Some(cells),
            DeviceKind::Custom => None,
        }
    }

    pub fn levels(&self) -> Option<u32> {
        match *self {
            DeviceKind::Flash { levels, .. } | DeviceKind::Ici { levels, .. } => Some(levels),
            DeviceKind::Custom => None,
        }
    }

    pub fn imbalance(&self) -> Option<u32> {
        match *self {
            DeviceKind::Ici { imbalance, .. } => Some(imbalance),
            _ => None,
        }
    }
}

impl std::fmt::Display for DeviceKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match *self {
            DeviceKind::Flash { cells, levels } => write!(f, "flash n={cells} q={levels}"),
            DeviceKind::Ici {
                cells,
                levels,
                imbalance,
            } => write!(f, "ici n={cells} q={levels} d={imbalance}"),
            DeviceKind::Custom => write!(f, "custom"),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// All level vectors in `{0..q-1}^n` in lexicographic order.
fn level_vectors(cells: u32, levels: u32, keep: impl Fn(&[u16]) -> bool) -> Vec<Vec<u16>> {
    let mut out = Vec::new();
    let mut current = vec![0u16; cells as usize];
    loop {
        if keep(&current) {
            out.push(current.clone());
        }
        // Odometer increment.
        let mut pos = cells as usize;
        loop {
            if pos == 0 {
                return out;
            }
            pos -= 1;
            if current[pos] + 1 < levels as u16 {
                current[pos] += 1;
                for later in current.iter_mut().skip(pos + 1) {
                    *later = 0;
                }
                break;
            }
        }
    }
}

fn grid_graph(spec: &FlashSpec, keep: impl Fn(&[u16]) -> bool) -> Result<TransitionGraph, GenerateError> {
    let vectors = level_vectors(spec.cells, spec.levels, keep);
    if vectors.is_empty() || vectors[0].iter().any(|&l| l != 0) {
        return Err(GenerateError::InvalidSpec(
            "constraint excludes the all-zero root state".into(),
        ));
    }
    let rank = |v: &[u16]| -> Option<usize> {
        vectors.binary_search_by(|probe| probe.as_slice().cmp(v)).ok()
    };

    let mut edges = Vec::new();
    let mut scratch = Vec::new();
    for (i, v) in vectors.iter().enumerate() {
        for cell in 0..spec.cells as usize {
            if u32::from(v[cell]) + 1 > spec.levels - 1 {
                continue;
            }
            scratch.clear();
            scratch.extend_from_slice(v);
            scratch[cell] += 1;
            if let Some(j) = rank(&scratch) {
                edges.push((NodeId::from_index(i), NodeId::from_index(j)));
            }
        }
    }

    let graph = TransitionGraph::build_with_coordinates(
        vectors.len(),
        &edges,
        NodeId::new(1),
        vectors,
    )?;
    Ok(graph)
}

/// State transition graph of an unconstrained flash device: all level vectors
/// in `{0..q-1}^n`, edges are unit increments on a single cell.
pub fn flash_graph(spec: &FlashSpec) -> Result<TransitionGraph, GenerateError> {
    spec.validate()?;
    if spec.imbalance.is_some() {
        return Err(GenerateError::InvalidSpec(
            "flash_graph takes an unconstrained spec; use ici_graph for d-imbalance devices".into(),
        ));
    }
    grid_graph(spec, |_| true)
}

/// State transition graph under the d-imbalance constraint: only level
/// vectors whose pairwise level differences stay within `d`, and only unit
/// increments between two such vectors. Reachability is computed on the
/// constrained graph, so paths never leave the valid states.
pub fn ici_graph(spec: &FlashSpec) -> Result<TransitionGraph, GenerateError> {
    spec.validate()?;
    let d = spec.imbalance.ok_or_else(|| {
        GenerateError::InvalidSpec("ici_graph requires an imbalance bound d".into())
    })? as u16;
    grid_graph(spec, |v| {
        let min = v.iter().min().copied().unwrap_or(0);
        let max = v.iter().max().copied().unwrap_or(0);
        max - min <= d
    })
}

/// Parses the plain-text DAG format:
///
/// ```text
/// # comment
/// dag <node_count> <root_id>
/// edge <from> <to>
/// ```
pub fn parse_dag(text: &str) -> Result<TransitionGraph, LoadError> {
    let mut header: Option<(usize, u32)> = None;
    let mut edges: Vec<(NodeId, NodeId)> = Vec::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let content = raw.split('#').next().unwrap_or("");
        let mut fields = content.split_whitespace();
        let Some(keyword) = fields.next() else {
            continue;
        };
        let parse_int = |field: Option<&str>, what: &str| -> Result<u32, LoadError> {
            field
                .ok_or_else(|| LoadError::Parse {
                    line,
                    message: format!("missing {what}"),
                })?
                .parse::<u32>()
                .map_err(|_| LoadError::Parse {
                    line,
                    message: format!("{what} is not a decimal integer"),
                })
        };
        match keyword {
            "dag" => {
                if header.is_some() {
                    return Err(LoadError::Parse {
                        line,
                        message: "duplicate dag header".into(),
                    });
                }
                let count = parse_int(fields.next(), "node count")?;
                let root = parse_int(fields.next(), "root id")?;
                header = Some((count as usize, root));
            }
            "edge" => {
                if header.is_none() {
                    return Err(LoadError::Parse {
                        line,
                        message: "edge before dag header".into(),
                    });
                }
                let from = parse_int(fields.next(), "edge source")?;
                let to = parse_int(fields.next(), "edge target")?;
                edges.push((NodeId::new(from), NodeId::new(to)));
            }
            other => {
                return Err(LoadError::Parse {
                    line,
                    message: format!("unknown directive `{other}`"),
                });
            }
        }
        if fields.next().is_some() {
            return Err(LoadError::Parse {
                line,
                message: "trailing fields".into(),
            });
        }
    }

    let (node_count, root) = header.ok_or(LoadError::Parse {
        line: 0,
        message: "missing dag header".into(),
    })?;
    Ok(TransitionGraph::build(node_count, &edges, NodeId::new(root))?)
}

/// Loads a transition graph from a file in the plain-text DAG format.
pub fn load_dag(path: &Path) -> Result<TransitionGraph, LoadError> {
    let text = std::fs::read_to_string(path).map_err(|source| LoadError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_dag(&text)
}
