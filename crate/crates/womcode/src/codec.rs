//! Encoder and decoder realized over an assembled code table.
//!
//! Encoding looks up the smallest region containing the current state (the
//! encoding window), picks the smallest node of the window that carries the
//! requested message, and — when that node is not reachable — slides the
//! window forward once to a frontier start point of the current layer. One
//! slide always suffices for a valid table: every member of the new window is
//! reachable from the new start point, which is reachable from the current
//! state. The decoder just reads the node's message label.

use crate::generate::DeviceKind;
use crate::graph::{GraphError, NodeId, TransitionGraph};
use crate::labeling::Labeling;
use crate::regions::{worst_writes, RegionFamily, WorstWrites};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CodecError {
    #[error("message {message} outside alphabet 1..={alphabet}")]
    InvalidMessage { message: u32, alphabet: u32 },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("state {0} carries no message label")]
    Unlabeled(NodeId),
    #[error("window of {window} holds no node with message {message}; table is malformed")]
    MissingMessage { window: NodeId, message: u32 },
    #[error("state {0} lies in a region but in no layer; table is malformed")]
    NoLayer(NodeId),
    #[error("window moves exceeded the node count; table is malformed")]
    WindowLoop,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AssembleError {
    #[error("labeling uses {m_star} messages but regions have size {k}")]
    AlphabetExceedsRegionSize { m_star: u32, k: u32 },
    #[error("node {0} is in Gamma but carries no message label")]
    UnlabeledGammaNode(NodeId),
    #[error("node {node} carries message {message} outside 1..={alphabet}")]
    MessageOutOfRange { node: NodeId, message: u32, alphabet: u32 },
    #[error("node {0} carries a label but is outside Gamma")]
    LabelOutsideGamma(NodeId),
    #[error("region of {owner} is missing message {message}")]
    RegionMissesMessage { owner: NodeId, message: u32 },
    #[error("family has nonempty regions but the labeling is empty")]
    EmptyLabeling,
}

/// The result of one encoding step. `Fail` is a legitimate codomain value
/// signaling device exhaustion, not an error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EncodeResult {
    Next(NodeId),
    Fail,
}

impl EncodeResult {
    pub fn next_state(self) -> Option<NodeId> {
        match self {
            EncodeResult::Next(s) => Some(s),
            EncodeResult::Fail => None,
        }
    }
}

/// Everything the encoder and decoder need: the device graph, the region
/// family, the message labeling, and the derived worst number of writes.
#[derive(Debug, Clone)]
pub struct CodeTable {
    kind: DeviceKind,
    graph: TransitionGraph,
    regions: RegionFamily,
    labeling: Labeling,
    t_star: WorstWrites,
}

impl CodeTable {
    /// Couples a family and a labeling, validating that the labeling is a
    /// message function for the family: every `Γ` node carries exactly one
    /// in-range message and every nonempty region contains every message.
    pub fn assemble(
        kind: DeviceKind,
        graph: TransitionGraph,
        regions: RegionFamily,
        labeling: Labeling,
    ) -> Result<CodeTable, AssembleError> {
        let m = labeling.m_star();
        if m > regions.k() {
            return Err(AssembleError::AlphabetExceedsRegionSize {
                m_star: m,
                k: regions.k(),
            });
        }
        let has_regions = regions.nonempty_start_points().next().is_some();
        if has_regions && m == 0 {
            return Err(AssembleError::EmptyLabeling);
        }
        if m > 0 {
            for &node in regions.gamma() {
                match labeling.message_of(node) {
                    None => return Err(AssembleError::UnlabeledGammaNode(node)),
                    Some(msg) if msg < 1 || msg > m => {
                        return Err(AssembleError::MessageOutOfRange {
                            node,
                            message: msg,
                            alphabet: m,
                        })
                    }
                    Some(_) => {}
                }
            }
        }
        for (node, _) in labeling.labeled_nodes() {
            if !regions.in_gamma(node) {
                return Err(AssembleError::LabelOutsideGamma(node));
            }
        }
        for owner in regions.nonempty_start_points() {
            for message in 1..=m {
                if !regions
                    .region(owner)
                    .iter()
                    .any(|&j| labeling.message_of(j) == Some(message))
                {
                    return Err(AssembleError::RegionMissesMessage { owner, message });
                }
            }
        }
        let t_star = worst_writes(&regions);
        Ok(CodeTable {
            kind,
            graph,
            regions,
            labeling,
            t_star,
        })
    }

    /// Bypasses validation; only for exercising the verifier on broken
    /// tables.
    #[cfg(test)]
    pub(crate) fn assemble_unchecked(
        kind: DeviceKind,
        graph: TransitionGraph,
        regions: RegionFamily,
        labeling: Labeling,
    ) -> CodeTable {
        let t_star = worst_writes(&regions);
        CodeTable {
            kind,
            graph,
            regions,
            labeling,
            t_star,
        }
    }

    pub fn kind(&self) -> DeviceKind {
        self.kind
    }

    pub fn graph(&self) -> &TransitionGraph {
        &self.graph
    }

    pub fn regions(&self) -> &RegionFamily {
        &self.regions
    }

    pub fn labeling(&self) -> &Labeling {
        &self.labeling
    }

    /// Message alphabet size `M = M*`.
    pub fn message_count(&self) -> u32 {
        self.labeling.m_star()
    }

    pub fn t_star(&self) -> WorstWrites {
        self.t_star
    }

    /// One encoding step from state `s` with message `m`.
    pub fn encode(&self, s: NodeId, m: u32) -> Result<EncodeResult, CodecError> {
        self.encode_traced(s, m).map(|(result, _)| result)
    }

    /// Like [`CodeTable::encode`], also reporting how many times the window
    /// moved; a valid table never needs more than one move.
    pub fn encode_traced(&self, s: NodeId, m: u32) -> Result<(EncodeResult, u32), CodecError> {
        self.graph.check_node(s)?;
        let alphabet = self.message_count();
        if m < 1 || m > alphabet {
            return Err(CodecError::InvalidMessage {
                message: m,
                alphabet,
            });
        }

        // Initial window: the smallest start point whose region contains s.
        let mut window = self.regions.owners_of(s).first().copied();
        let mut moves = 0u32;
        loop {
            let Some(d) = window else {
                return Ok((EncodeResult::Fail, moves));
            };
            let region = self.regions.region(d);
            if region.is_empty() {
                return Ok((EncodeResult::Fail, moves));
            }
            let y = region
                .iter()
                .copied()
                .find(|&x| self.labeling.message_of(x) == Some(m))
                .ok_or(CodecError::MissingMessage { window: d, message: m })?;
            if self.graph.reaches(s, y) {
                return Ok((EncodeResult::Next(y), moves));
            }
            moves += 1;
            if moves as usize > self.graph.node_count() {
                return Err(CodecError::WindowLoop);
            }
            let layer = self
                .regions
                .layers_containing(s)
                .first()
                .copied()
                .ok_or(CodecError::NoLayer(s))?;
            window = self
                .regions
                .frontier_of_layer(layer as usize)
                .iter()
                .copied()
                .find(|&x| self.graph.reaches(s, x));
        }
    }

    /// Reads the message carried by state `s`.
    pub fn decode(&self, s: NodeId) -> Result<u32, CodecError> {
        self.graph.check_node(s)?;
        self.labeling.message_of(s).ok_or(CodecError::Unlabeled(s))
    }

    /// Encodes a message sequence starting from the root.
    pub fn write_sequence(&self, messages: &[u32]) -> Result<WriteOutcome, CodecError> {
        let mut session = WriteSession::new(self);
        let mut states = Vec::with_capacity(messages.len());
        for (i, &m) in messages.iter().enumerate() {
            match session.write(m)? {
                EncodeResult::Next(s) => states.push(s),
                EncodeResult::Fail => {
                    return Ok(WriteOutcome::FailedAt {
                        index: i as u32 + 1,
                        states,
                    })
                }
            }
        }
        Ok(WriteOutcome::Complete(states))
    }
}

/// Outcome of encoding a whole message sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WriteOutcome {
    Complete(Vec<NodeId>),
    /// The 1-based index of the first failing write, with the states reached
    /// before it.
    FailedAt { index: u32, states: Vec<NodeId> },
}

/// Encoder state for a sequence of writes over one table. Single-owner;
/// independent sessions over a shared table may run in parallel.
#[derive(Debug)]
pub struct WriteSession<'t> {
    table: &'t CodeTable,
    current: NodeId,
    writes_done: u32,
}

impl<'t> WriteSession<'t> {
    /// A fresh session at the device root.
    pub fn new(table: &'t CodeTable) -> WriteSession<'t> {
        WriteSession {
            table,
            current: table.graph.root(),
            writes_done: 0,
        }
    }

    /// A session resuming from an arbitrary device state.
    pub fn starting_at(table: &'t CodeTable, state: NodeId) -> Result<WriteSession<'t>, CodecError> {
        table.graph.check_node(state)?;
        Ok(WriteSession {
            table,
            current: state,
            writes_done: 0,
        })
    }

    pub fn current(&self) -> NodeId {
        self.current
    }

    pub fn writes_done(&self) -> u32 {
        self.writes_done
    }

    /// Encodes one message; on success the session advances to the new state.
    /// A `Fail` leaves the session untouched.
    pub fn write(&mut self, m: u32) -> Result<EncodeResult, CodecError> {
        let result = self.table.encode(self.current, m)?;
        if let EncodeResult::Next(next) = result {
            self.current = next;
            self.writes_done += 1;
        }
        Ok(result)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{flash_graph, FlashSpec};
    use crate::graph::build_graph;
    use crate::labeling::{build_problem, solve_exact, Labeling};
    use crate::regions::{build_regions, TieBreak};

    fn six_node_graph() -> TransitionGraph {
        build_graph(
            6,
            &[(1, 2), (1, 3), (2, 4), (3, 4), (2, 6), (3, 5), (4, 6), (5, 6)],
            1,
        )
        .unwrap()
    }

    /// The worked-example table: the six-node graph with k = 3 regions and
    /// the reference labeling g = {1:1, 2:3, 3:2, 4:1, 5:3, 6:2}.
    pub(crate) fn worked_example_table() -> CodeTable {
        let g = six_node_graph();
        let rf = build_regions(&g, 3, TieBreak::ById);
        let labeling = Labeling::from_messages(
            vec![
                (NodeId::new(1), 1),
                (NodeId::new(2), 3),
                (NodeId::new(3), 2),
                (NodeId::new(4), 1),
                (NodeId::new(5), 3),
                (NodeId::new(6), 2),
            ],
            3,
            true,
        );
        CodeTable::assemble(DeviceKind::Custom, g, rf, labeling).unwrap()
    }

    fn n(id: u32) -> NodeId {
        NodeId::new(id)
    }

    #[test]
    fn first_write_uses_root_window() {
        let table = worked_example_table();
        // (s=1, m=2): window ω(1), node 3 carries message 2, 1 ⪯ 3.
        assert_eq!(table.encode(n(1), 2).unwrap(), EncodeResult::Next(n(3)));
    }

    #[test]
    fn second_write_moves_the_window() {
        let table = worked_example_table();
        // (s=3, m=3): ω(1) offers node 2, unreachable from 3; the window
        // moves to ω(3) via F(L_1) and lands on node 5.
        let (result, moves) = table.encode_traced(n(3), 3).unwrap();
        assert_eq!(result, EncodeResult::Next(n(5)));
        assert_eq!(moves, 1);
    }

    #[test]
    fn rewrite_in_place() {
        let table = worked_example_table();
        // g(1) = 1 and 1 is the smallest message-1 node of its window.
        assert_eq!(table.encode(n(1), 1).unwrap(), EncodeResult::Next(n(1)));
        assert_eq!(table.encode(n(6), 2).unwrap(), EncodeResult::Next(n(6)));
    }

    #[test]
    fn exhausted_state_fails() {
        let table = worked_example_table();
        // From 6, message 1 needs node 4 (unreachable); the window moves to
        // ω(6), which is empty.
        assert_eq!(table.encode(n(6), 1).unwrap(), EncodeResult::Fail);
    }

    #[test]
    fn decode_matches_the_reference_labeling() {
        let table = worked_example_table();
        assert_eq!(table.decode(n(3)).unwrap(), 2);
        assert_eq!(table.decode(n(5)).unwrap(), 3);
    }

    #[test]
    fn invalid_messages_rejected() {
        let table = worked_example_table();
        assert!(matches!(
            table.encode(n(1), 0),
            Err(CodecError::InvalidMessage { .. })
        ));
        assert!(matches!(
            table.encode(n(1), 4),
            Err(CodecError::InvalidMessage { .. })
        ));
    }

    #[test]
    fn write_sequence_walks_the_example() {
        let table = worked_example_table();
        assert_eq!(
            table.write_sequence(&[2, 3]).unwrap(),
            WriteOutcome::Complete(vec![n(3), n(5)])
        );
        assert_eq!(
            table.write_sequence(&[]).unwrap(),
            WriteOutcome::Complete(vec![])
        );
    }

    #[test]
    fn write_sequence_reports_first_failure() {
        let table = worked_example_table();
        // Third write exhausts the device on this path.
        match table.write_sequence(&[2, 3, 1]).unwrap() {
            WriteOutcome::FailedAt { index, states } => {
                assert_eq!(index, 3);
                assert_eq!(states, vec![n(3), n(5)]);
            }
            other => panic!("expected failure, got {other:?}"),
        }
    }

    #[test]
    fn session_tracks_state_and_count() {
        let table = worked_example_table();
        let mut session = WriteSession::new(&table);
        assert_eq!(session.current(), n(1));
        session.write(2).unwrap();
        session.write(3).unwrap();
        assert_eq!(session.current(), n(5));
        assert_eq!(session.writes_done(), 2);
        // A failing write leaves the session where it was.
        let mut exhausted = WriteSession::starting_at(&table, n(6)).unwrap();
        assert_eq!(exhausted.write(1).unwrap(), EncodeResult::Fail);
        assert_eq!(exhausted.current(), n(6));
        assert_eq!(exhausted.writes_done(), 0);
    }

    #[test]
    fn consistency_on_the_worked_example() {
        let table = worked_example_table();
        for s in table.graph().nodes() {
            for m in 1..=table.message_count() {
                match table.encode(s, m).unwrap() {
                    EncodeResult::Next(next) => {
                        assert!(table.graph().precedes(s, next).unwrap());
                        assert_eq!(table.decode(next).unwrap(), m);
                        assert!(table.regions().in_gamma(next));
                    }
                    EncodeResult::Fail => {}
                }
            }
        }
    }

    #[test]
    fn unlabeled_state_cannot_decode() {
        let g = flash_graph(&FlashSpec::unconstrained(2, 4)).unwrap();
        let rf = build_regions(&g, 5, TieBreak::ById);
        let labeling = solve_exact(&build_problem(&rf).unwrap(), None).into_labeling();
        let table =
            CodeTable::assemble(DeviceKind::Flash { cells: 2, levels: 4 }, g, rf, labeling)
                .unwrap();
        // The all-max state is in no layer of this family.
        let sink = NodeId::new(16);
        assert!(!table.regions().in_gamma(sink));
        assert_eq!(table.decode(sink), Err(CodecError::Unlabeled(sink)));
        // Encoding from an unregioned state fails outright.
        assert_eq!(table.encode(sink, 1).unwrap(), EncodeResult::Fail);
    }

    #[test]
    fn assemble_rejects_broken_labelings() {
        let g = six_node_graph();
        let rf = build_regions(&g, 3, TieBreak::ById);

        // Missing a label for a Gamma node.
        let partial = Labeling::from_messages(
            vec![(n(1), 1), (n(2), 3), (n(3), 2), (n(4), 1), (n(5), 3)],
            3,
            true,
        );
        assert_eq!(
            CodeTable::assemble(DeviceKind::Custom, g.clone(), rf.clone(), partial).unwrap_err(),
            AssembleError::UnlabeledGammaNode(n(6))
        );

        // A region missing one message: relabel 5 so ω(3) = {3,4,5} has no 3.
        let missing = Labeling::from_messages(
            vec![(n(1), 1), (n(2), 3), (n(3), 2), (n(4), 1), (n(5), 2), (n(6), 2)],
            3,
            true,
        );
        assert_eq!(
            CodeTable::assemble(DeviceKind::Custom, g.clone(), rf.clone(), missing).unwrap_err(),
            AssembleError::RegionMissesMessage {
                owner: n(3),
                message: 3
            }
        );

        // Empty labeling over nonempty regions.
        assert_eq!(
            CodeTable::assemble(DeviceKind::Custom, g, rf, Labeling::empty()).unwrap_err(),
            AssembleError::EmptyLabeling
        );
    }
}
