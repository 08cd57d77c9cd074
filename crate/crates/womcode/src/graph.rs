//! Directed acyclic state-transition graphs with precomputed reachability.
//!
//! A [`TransitionGraph`] models a write-once device: nodes are device states,
//! edges are single-step state changes, and a write may move the state along
//! any directed path. Reachability (reflexive) is computed once at build time
//! and stored as one bit row per node, so `precedes` and region construction
//! are O(1) and O(|V|) bit operations respectively.

use std::fmt;

use crate::bitset::BitSet;

/// 1-based node index. Ids are contiguous `1..=|V|` and double as the
/// canonical total order used by every `min` and tie-break in the toolkit.
#[derive(Copy, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct NodeId(u32);

impl NodeId {
    pub fn new(id: u32) -> NodeId {
        NodeId(id)
    }

    pub fn get(self) -> u32 {
        self.0
    }

    /// 0-based index into per-node arrays. Only valid for in-range ids.
    pub(crate) fn index(self) -> usize {
        (self.0 - 1) as usize
    }

    pub(crate) fn from_index(index: usize) -> NodeId {
        NodeId(index as u32 + 1)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GraphError {
    #[error("graph contains a directed cycle")]
    CyclicGraph,
    #[error("node id {id} out of range 1..={node_count}")]
    InvalidNode { id: u32, node_count: usize },
}

/// A DAG `(V, E, r)` with reflexive transitive closure and optional per-node
/// cell-level coordinates (attached by the device generators).
#[derive(Clone)]
pub struct TransitionGraph {
    node_count: usize,
    root: NodeId,
    edges: Vec<(NodeId, NodeId)>,
    successors: Vec<Vec<NodeId>>,
    reach: Vec<BitSet>,
    reach_count: Vec<u32>,
    topo_order: Vec<NodeId>,
    coordinates: Option<Vec<Vec<u16>>>,
}

impl TransitionGraph {
    /// Builds a graph, rejecting out-of-range endpoints and directed cycles.
    /// Duplicate edges are collapsed.
    pub fn build(
        node_count: usize,
        edges: &[(NodeId, NodeId)],
        root: NodeId,
    ) -> Result<TransitionGraph, GraphError> {
        Self::build_inner(node_count, edges, root, None)
    }

    /// Same as [`TransitionGraph::build`], with one level vector per node.
    pub fn build_with_coordinates(
        node_count: usize,
        edges: &[(NodeId, NodeId)],
        root: NodeId,
        coordinates: Vec<Vec<u16>>,
    ) -> Result<TransitionGraph, GraphError> {
        assert_eq!(coordinates.len(), node_count);
        Self::build_inner(node_count, edges, root, Some(coordinates))
    }

    fn build_inner(
        node_count: usize,
        edges: &[(NodeId, NodeId)],
        root: NodeId,
        coordinates: Option<Vec<Vec<u16>>>,
    ) -> Result<TransitionGraph, GraphError> {
        let check = |id: NodeId| -> Result<(), GraphError> {
            if id.get() == 0 || id.get() as usize > node_count {
                Err(GraphError::InvalidNode {
                    id: id.get(),
                    node_count,
                })
            } else {
                Ok(())
            }
        };
        check(root)?;

        let mut sorted: Vec<(NodeId, NodeId)> = Vec::with_capacity(edges.len());
        for &(from, to) in edges {
            check(from)?;
            check(to)?;
            sorted.push((from, to));
        }
        sorted.sort_unstable();
        sorted.dedup();

        let mut successors = vec![Vec::new(); node_count];
        let mut in_degree = vec![0usize; node_count];
        for &(from, to) in &sorted {
            successors[from.index()].push(to);
            in_degree[to.index()] += 1;
        }

        // Kahn's algorithm: doubles as the cycle check.
        let mut topo_order: Vec<NodeId> = Vec::with_capacity(node_count);
        let mut queue: Vec<NodeId> = (0..node_count)
            .filter(|&i| in_degree[i] == 0)
            .map(NodeId::from_index)
            .collect();
        while let Some(node) = queue.pop() {
            topo_order.push(node);
            for &next in &successors[node.index()] {
                in_degree[next.index()] -= 1;
                if in_degree[next.index()] == 0 {
                    queue.push(next);
                }
            }
        }
        if topo_order.len() != node_count {
            return Err(GraphError::CyclicGraph);
        }

        // Reflexive closure, filled sinks-first so successor rows are ready.
        let mut reach: Vec<BitSet> = (0..node_count).map(|_| BitSet::new(node_count)).collect();
        for &node in topo_order.iter().rev() {
            let i = node.index();
            let mut row = std::mem::replace(&mut reach[i], BitSet::new(0));
            row.insert(i);
            for &next in &successors[i] {
                row.union_with(&reach[next.index()]);
            }
            reach[i] = row;
        }
        let reach_count = reach.iter().map(|r| r.count() as u32).collect();

        Ok(TransitionGraph {
            node_count,
            root,
            edges: sorted,
            successors,
            reach,
            reach_count,
            topo_order,
            coordinates,
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        (1..=self.node_count as u32).map(NodeId::new)
    }

    pub fn edges(&self) -> &[(NodeId, NodeId)] {
        &self.edges
    }

    pub fn successors(&self, s: NodeId) -> &[NodeId] {
        &self.successors[s.index()]
    }

    /// A topological order of `V` (not unique; fixed per build).
    pub fn topo_order(&self) -> &[NodeId] {
        &self.topo_order
    }

    /// Level vector of `s`, if this graph was produced by a device generator.
    pub fn coordinates(&self, s: NodeId) -> Option<&[u16]> {
        self.coordinates.as_ref().map(|c| c[s.index()].as_slice())
    }

    pub fn has_coordinates(&self) -> bool {
        self.coordinates.is_some()
    }

    pub fn check_node(&self, id: NodeId) -> Result<(), GraphError> {
        if id.get() == 0 || id.get() as usize > self.node_count {
            Err(GraphError::InvalidNode {
                id: id.get(),
                node_count: self.node_count,
            })
        } else {
            Ok(())
        }
    }

    /// The reachable region `R(s)`: every node reachable from `s`, including
    /// `s` itself, in ascending id order.
    pub fn reachable_region(&self, s: NodeId) -> Result<Vec<NodeId>, GraphError> {
        self.check_node(s)?;
        Ok(self.reach[s.index()].iter().map(NodeId::from_index).collect())
    }

    /// `|R(s)|` without materializing the set.
    pub fn reach_size(&self, s: NodeId) -> u32 {
        self.reach_count[s.index()]
    }

    /// True iff `t` is reachable from `s` (reflexive: `precedes(s, s)` holds).
    pub fn precedes(&self, s: NodeId, t: NodeId) -> Result<bool, GraphError> {
        self.check_node(s)?;
        self.check_node(t)?;
        Ok(self.reach[s.index()].contains(t.index()))
    }

    /// Unchecked `precedes` for validated ids on hot paths.
    pub(crate) fn reaches(&self, s: NodeId, t: NodeId) -> bool {
        self.reach[s.index()].contains(t.index())
    }

    pub(crate) fn reach_bits(&self, s: NodeId) -> &BitSet {
        &self.reach[s.index()]
    }

    /// The frontier `F(X)`: nodes of `X` whose reachable region meets `X`
    /// only in themselves. Duplicates in the input are ignored;
    /// `frontier(∅) = ∅`. Result is in ascending id order.
    pub fn frontier(&self, xs: &[NodeId]) -> Vec<NodeId> {
        let mut in_x = BitSet::new(self.node_count);
        for &x in xs {
            in_x.insert(x.index());
        }
        in_x
            .iter()
            .filter(|&i| self.reach[i].intersection_count(&in_x) == 1)
            .map(NodeId::from_index)
            .collect()
    }
}

impl fmt::Debug for TransitionGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TransitionGraph")
            .field("node_count", &self.node_count)
            .field("root", &self.root)
            .field("edges", &self.edges.len())
            .finish()
    }
}

/// Convenience constructor for tests and examples: edges as raw id pairs.
pub fn build_graph(
    node_count: usize,
    edges: &[(u32, u32)],
    root: u32,
) -> Result<TransitionGraph, GraphError> {
    let edges: Vec<(NodeId, NodeId)> = edges
        .iter()
        .map(|&(a, b)| (NodeId::new(a), NodeId::new(b)))
        .collect();
    TransitionGraph::build(node_count, &edges, NodeId::new(root))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// The 6-node example graph: 1 -> {2,3}, 2 -> {4,6}, 3 -> {4,5},
    /// 4 -> 6, 5 -> 6.
    pub(crate) fn six_node_graph() -> TransitionGraph {
        build_graph(
            6,
            &[(1, 2), (1, 3), (2, 4), (3, 4), (2, 6), (3, 5), (4, 6), (5, 6)],
            1,
        )
        .unwrap()
    }

    fn ids(v: &[u32]) -> Vec<NodeId> {
        v.iter().map(|&i| NodeId::new(i)).collect()
    }

    #[test]
    fn six_node_graph_builds_and_root_reaches_all() {
        let g = six_node_graph();
        assert_eq!(g.node_count(), 6);
        assert!(g.precedes(NodeId::new(1), NodeId::new(6)).unwrap());
        assert_eq!(g.reach_size(NodeId::new(1)), 6);
        assert_eq!(g.reachable_region(NodeId::new(2)).unwrap(), ids(&[2, 4, 6]));
        assert_eq!(g.reachable_region(NodeId::new(3)).unwrap(), ids(&[3, 4, 5, 6]));
    }

    #[test]
    fn single_node_reaches_itself() {
        let g = build_graph(1, &[], 1).unwrap();
        assert_eq!(g.reachable_region(NodeId::new(1)).unwrap(), ids(&[1]));
        assert_eq!(g.reach_size(NodeId::new(1)), 1);
    }

    #[test]
    fn two_cycle_rejected() {
        assert_eq!(
            build_graph(2, &[(1, 2), (2, 1)], 1).unwrap_err(),
            GraphError::CyclicGraph
        );
    }

    #[test]
    fn self_loop_rejected() {
        assert_eq!(
            build_graph(2, &[(1, 1)], 1).unwrap_err(),
            GraphError::CyclicGraph
        );
    }

    #[test]
    fn out_of_range_edge_rejected() {
        let err = build_graph(6, &[(1, 7)], 1).unwrap_err();
        assert_eq!(err, GraphError::InvalidNode { id: 7, node_count: 6 });
    }

    #[test]
    fn precedes_is_reflexive() {
        let g = six_node_graph();
        for s in g.nodes() {
            assert!(g.precedes(s, s).unwrap());
        }
    }

    #[test]
    fn frontier_of_layers_matches_worked_example() {
        // F(L1) = {2,3} and F(L2) = {6} for the layers of the 6-node example.
        let g = six_node_graph();
        assert_eq!(g.frontier(&ids(&[1, 2, 3])), ids(&[2, 3]));
        assert_eq!(g.frontier(&ids(&[2, 3, 4, 5, 6])), ids(&[6]));
    }

    #[test]
    fn frontier_edge_cases() {
        let g = six_node_graph();
        assert!(g.frontier(&[]).is_empty());
        for s in g.nodes() {
            assert_eq!(g.frontier(&[s]), vec![s]);
        }
        // Duplicates in the input do not change the result.
        assert_eq!(g.frontier(&ids(&[2, 2, 3])), ids(&[2, 3]));
    }

    #[test]
    fn non_frontier_nodes_reach_some_frontier_node() {
        let g = six_node_graph();
        let x = ids(&[1, 2, 3, 4]);
        let f = g.frontier(&x);
        for &node in &x {
            if !f.contains(&node) {
                assert!(f.iter().any(|&y| g.reaches(node, y)));
            }
        }
    }

    #[test]
    fn invalid_node_queries_are_rejected() {
        let g = six_node_graph();
        assert!(g.reachable_region(NodeId::new(0)).is_err());
        assert!(g.reachable_region(NodeId::new(7)).is_err());
        assert!(g.precedes(NodeId::new(1), NodeId::new(9)).is_err());
    }
}
