//! Greedy construction of the encoding-region family, its layers and
//! frontiers, the start-point set, and the worst number of writes.
//!
//! An encoding region of a start point `s` is either empty or a size-`k`
//! subset of `R(s)`; the greedy rule keeps the `k` states with the largest
//! reachable regions so that future writes stay possible for as long as they
//! can. Layers chain regions together: `L_0 = {root}` and `L_i` is the union
//! of the regions of the previous layer's frontier nodes.

use std::collections::BTreeSet;

use crate::graph::{NodeId, TransitionGraph};
use crate::mix::splitmix64;

/// How equal reachable-region sizes are ordered inside the greedy selection.
///
/// `ById` is the deterministic default. `Seeded` draws a per-node priority
/// from a fixed-width mix of the seed and the node id, for exploring
/// alternative families without losing reproducibility.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TieBreak {
    ById,
    Seeded(u64),
}

impl TieBreak {
    /// Tie key for candidate `node` while building the region of `owner`.
    /// The seeded mode mixes the owner in, so each region draws its own
    /// priorities, mirroring an independent coin flip per selection.
    fn key(&self, owner: NodeId, node: NodeId) -> (u64, u32) {
        match *self {
            TieBreak::ById => (0, node.get()),
            TieBreak::Seeded(seed) => (
                splitmix64(
                    seed ^ (u64::from(owner.get()) << 32) ^ u64::from(node.get()),
                ),
                node.get(),
            ),
        }
    }
}

/// The outcome of the worst-number-of-writes formula.
///
/// `Unbounded` arises only for degenerate families in which no layer frontier
/// ever contains an empty-region node (e.g. `k = 1`, where every write can be
/// absorbed in place forever).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WorstWrites {
    Finite(u32),
    Unbounded,
}

impl WorstWrites {
    pub fn finite(self) -> Option<u32> {
        match self {
            WorstWrites::Finite(t) => Some(t),
            WorstWrites::Unbounded => None,
        }
    }
}

impl std::fmt::Display for WorstWrites {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            WorstWrites::Finite(t) => write!(f, "{t}"),
            WorstWrites::Unbounded => write!(f, "inf"),
        }
    }
}

/// The family `{omega(s)}` together with the layers, their frontiers, the
/// start-point set, and lookup caches used by the encoder.
#[derive(Debug, Clone)]
pub struct RegionFamily {
    k: u32,
    /// Region per node, ascending ids; empty vec = empty region.
    omega: Vec<Vec<NodeId>>,
    /// Distinct layers `L_0, L_1, ...` in construction order, each sorted.
    layers: Vec<Vec<NodeId>>,
    /// `F(L_i)` for each stored layer.
    frontiers: Vec<Vec<NodeId>>,
    /// Start points `V*`, sorted.
    start_points: Vec<NodeId>,
    /// Union of all layers, sorted.
    gamma: Vec<NodeId>,
    /// Per node: region owners whose region contains it, ascending.
    owners: Vec<Vec<NodeId>>,
    /// Per node: layer indices containing it, ascending.
    layer_memberships: Vec<Vec<u32>>,
}

impl RegionFamily {
    pub fn k(&self) -> u32 {
        self.k
    }

    /// `omega(s)`; empty slice when the region is empty.
    pub fn region(&self, s: NodeId) -> &[NodeId] {
        &self.omega[s.index()]
    }

    pub fn layers(&self) -> &[Vec<NodeId>] {
        &self.layers
    }

    pub fn frontier_of_layer(&self, i: usize) -> &[NodeId] {
        &self.frontiers[i]
    }

    pub fn start_points(&self) -> &[NodeId] {
        &self.start_points
    }

    pub fn gamma(&self) -> &[NodeId] {
        &self.gamma
    }

    pub fn in_gamma(&self, s: NodeId) -> bool {
        self.gamma.binary_search(&s).is_ok()
    }

    /// Start points with nonempty regions, ascending.
    pub fn nonempty_start_points(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.start_points
            .iter()
            .copied()
            .filter(|&s| !self.omega[s.index()].is_empty())
    }

    /// Region owners whose region contains `s`, ascending id order.
    pub fn owners_of(&self, s: NodeId) -> &[NodeId] {
        &self.owners[s.index()]
    }

    /// Indices of the layers containing `s`, ascending.
    pub fn layers_containing(&self, s: NodeId) -> &[u32] {
        &self.layer_memberships[s.index()]
    }
}

/// The greedy region of `s`: the `k` elements of `R(s)` with the largest
/// reachable regions (ties to the smaller tie-break key), or empty when
/// `|R(s)| < k`. Result in ascending id order.
pub fn greedy_region(g: &TransitionGraph, s: NodeId, k: u32, tie: TieBreak) -> Vec<NodeId> {
    assert!(k >= 1, "region size k must be >= 1");
    if g.reach_size(s) < k {
        return Vec::new();
    }
    let mut candidates: Vec<NodeId> = g
        .reach_bits(s)
        .iter()
        .map(NodeId::from_index)
        .collect();
    candidates.sort_by_key(|&x| {
        let (tie_key, id) = tie.key(s, x);
        (std::cmp::Reverse(g.reach_size(x)), tie_key, id)
    });
    candidates.truncate(k as usize);
    candidates.sort_unstable();
    candidates
}

/// Builds the region family by iterating the layer recursion from
/// `L_0 = {root}` until a layer is empty or repeats an earlier one.
/// A trailing empty layer is kept so degenerate outcomes stay observable.
pub fn build_regions(g: &TransitionGraph, k: u32, tie: TieBreak) -> RegionFamily {
    assert!(k >= 1, "region size k must be >= 1");
    let n = g.node_count();
    let mut omega: Vec<Option<Vec<NodeId>>> = vec![None; n];
    let mut layers: Vec<Vec<NodeId>> = vec![vec![g.root()]];
    let mut frontiers: Vec<Vec<NodeId>> = Vec::new();
    let mut seen: BTreeSet<Vec<NodeId>> = BTreeSet::new();
    seen.insert(layers[0].clone());
    let mut start_points: BTreeSet<NodeId> = BTreeSet::new();

    loop {
        let i = frontiers.len();
        let frontier = g.frontier(&layers[i]);
        let mut next: BTreeSet<NodeId> = BTreeSet::new();
        for &x in &frontier {
            start_points.insert(x);
            let region = omega[x.index()]
                .get_or_insert_with(|| greedy_region(g, x, k, tie));
            next.extend(region.iter().copied());
        }
        frontiers.push(frontier);
        if layers[i].is_empty() {
            break;
        }
        let next: Vec<NodeId> = next.into_iter().collect();
        if !seen.insert(next.clone()) {
            break;
        }
        layers.push(next);
    }

    let omega: Vec<Vec<NodeId>> = omega.into_iter().map(Option::unwrap_or_default).collect();
    let gamma: Vec<NodeId> = layers
        .iter()
        .flatten()
        .copied()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();

    let mut owners = vec![Vec::new(); n];
    for owner in g.nodes() {
        for &member in &omega[owner.index()] {
            owners[member.index()].push(owner);
        }
    }
    let mut layer_memberships = vec![Vec::new(); n];
    for (i, layer) in layers.iter().enumerate() {
        for &s in layer {
            layer_memberships[s.index()].push(i as u32);
        }
    }

    RegionFamily {
        k,
        omega,
        layers,
        frontiers,
        start_points: start_points.into_iter().collect(),
        gamma,
        owners,
        layer_memberships,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FamilyError {
    #[error(transparent)]
    Graph(#[from] crate::graph::GraphError),
    #[error("region of {owner} has {got} members, expected {k} or none")]
    WrongRegionSize { owner: NodeId, got: usize, k: u32 },
    #[error("region of {owner} contains {member}, which is not reachable from it")]
    MemberOutsideReach { owner: NodeId, member: NodeId },
    #[error("region attached to {owner}, which is not a start point")]
    RegionOutsideStartPoints { owner: NodeId },
    #[error("stored layers do not match the layer recursion at layer {index}")]
    LayerMismatch { index: usize },
    #[error("duplicate region for {owner}")]
    DuplicateRegion { owner: NodeId },
}

impl RegionFamily {
    /// Reassembles a family from persisted parts, re-running the layer
    /// recursion with the given regions and rejecting anything that violates
    /// the family invariants. Greediness of the regions is not required, so
    /// hand-built families load as long as they are structurally sound.
    pub fn from_parts(
        g: &TransitionGraph,
        k: u32,
        regions: &[(NodeId, Vec<NodeId>)],
        stored_layers: &[Vec<NodeId>],
    ) -> Result<RegionFamily, FamilyError> {
        let n = g.node_count();
        let mut omega: Vec<Vec<NodeId>> = vec![Vec::new(); n];
        for (owner, members) in regions {
            g.check_node(*owner)?;
            for &member in members {
                g.check_node(member)?;
            }
            let mut members = members.clone();
            members.sort_unstable();
            members.dedup();
            if !omega[owner.index()].is_empty() {
                return Err(FamilyError::DuplicateRegion { owner: *owner });
            }
            if members.len() != k as usize {
                return Err(FamilyError::WrongRegionSize {
                    owner: *owner,
                    got: members.len(),
                    k,
                });
            }
            for &member in &members {
                if !g.reaches(*owner, member) {
                    return Err(FamilyError::MemberOutsideReach {
                        owner: *owner,
                        member,
                    });
                }
            }
            omega[owner.index()] = members;
        }

        // Re-run the layer recursion with the given regions.
        let mut layers: Vec<Vec<NodeId>> = vec![vec![g.root()]];
        let mut frontiers: Vec<Vec<NodeId>> = Vec::new();
        let mut seen: BTreeSet<Vec<NodeId>> = BTreeSet::new();
        seen.insert(layers[0].clone());
        let mut start_points: BTreeSet<NodeId> = BTreeSet::new();
        loop {
            let i = frontiers.len();
            let frontier = g.frontier(&layers[i]);
            let mut next: BTreeSet<NodeId> = BTreeSet::new();
            for &x in &frontier {
                start_points.insert(x);
                next.extend(omega[x.index()].iter().copied());
            }
            frontiers.push(frontier);
            if layers[i].is_empty() {
                break;
            }
            let next: Vec<NodeId> = next.into_iter().collect();
            if !seen.insert(next.clone()) {
                break;
            }
            layers.push(next);
        }

        if layers.len() != stored_layers.len() {
            return Err(FamilyError::LayerMismatch {
                index: layers.len().min(stored_layers.len()),
            });
        }
        for (i, (built, stored)) in layers.iter().zip(stored_layers).enumerate() {
            if built != stored {
                return Err(FamilyError::LayerMismatch { index: i });
            }
        }
        for (owner, _) in regions {
            if !start_points.contains(owner) {
                return Err(FamilyError::RegionOutsideStartPoints { owner: *owner });
            }
        }

        let gamma: Vec<NodeId> = layers
            .iter()
            .flatten()
            .copied()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let mut owners = vec![Vec::new(); n];
        for owner in g.nodes() {
            for &member in &omega[owner.index()] {
                owners[member.index()].push(owner);
            }
        }
        let mut layer_memberships = vec![Vec::new(); n];
        for (i, layer) in layers.iter().enumerate() {
            for &s in layer {
                layer_memberships[s.index()].push(i as u32);
            }
        }

        Ok(RegionFamily {
            k,
            omega,
            layers,
            frontiers,
            start_points: start_points.into_iter().collect(),
            gamma,
            owners,
            layer_memberships,
        })
    }
}

/// The worst number of writes: the smallest `i > 0` such that `F(L_i)`
/// contains a node with an empty region; 0 when the root's own region is
/// empty (no write is possible at all).
pub fn worst_writes(rf: &RegionFamily) -> WorstWrites {
    let root_frontier = &rf.frontiers[0];
    if root_frontier.iter().all(|&x| rf.region(x).is_empty()) {
        return WorstWrites::Finite(0);
    }
    for i in 1..rf.frontiers.len() {
        if rf.frontiers[i].iter().any(|&x| rf.region(x).is_empty()) {
            return WorstWrites::Finite(i as u32);
        }
    }
    WorstWrites::Unbounded
}
