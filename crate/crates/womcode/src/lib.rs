//! Fixed-rate non-binary WOM codes over DAG-modeled storage devices.
//!
//! A write-once device is modeled as a DAG of states; a code guarantees that
//! any sequence of `t*` messages from a fixed alphabet of size `M` can be
//! written, each write moving the device state forward along reachability.
//! This crate constructs such codes and checks them:
//!
//! - [`graph`] — transition graphs with precomputed reachability, frontiers;
//! - [`generate`] — flash grids, imbalance-constrained grids, DAG files;
//! - [`regions`] — greedy encoding-region families, layers, `t*`;
//! - [`labeling`] — exact maximum-alphabet labeling by backtracking search;
//! - [`codec`] — the encoder/decoder realized over an assembled table;
//! - [`verify`] — adversarial write simulation, consistency sweeps, bounds;
//! - [`tablefile`] — canonical text persistence for code tables.
//!
//! ```
//! use womcode::generate::{flash_graph, DeviceKind, FlashSpec};
//! use womcode::labeling::{build_problem, solve_exact};
//! use womcode::regions::{build_regions, TieBreak, WorstWrites};
//! use womcode::codec::CodeTable;
//!
//! let spec = FlashSpec::unconstrained(2, 4);
//! let graph = flash_graph(&spec).unwrap();
//! let family = build_regions(&graph, 5, TieBreak::ById);
//! let labeling = solve_exact(&build_problem(&family).unwrap(), None).into_labeling();
//! let table = CodeTable::assemble(
//!     DeviceKind::Flash { cells: 2, levels: 4 },
//!     graph,
//!     family,
//!     labeling,
//! )
//! .unwrap();
//! assert_eq!(table.message_count(), 5);
//! assert_eq!(table.t_star(), WorstWrites::Finite(2));
//! ```

mod bitset;
mod mix;

pub mod codec;
pub mod generate;
pub mod graph;
pub mod labeling;
pub mod regions;
pub mod tablefile;
pub mod verify;

pub use codec::{CodeTable, EncodeResult, WriteOutcome, WriteSession};
pub use generate::{DeviceKind, FlashSpec};
pub use graph::{NodeId, TransitionGraph};
pub use labeling::{Labeling, LabelingProblem, SolveOutcome};
pub use regions::{RegionFamily, TieBreak, WorstWrites};
pub use verify::VerificationReport;
