//! Message labeling by exact combinatorial search.
//!
//! Given a region family, the labeling problem asks for the largest message
//! alphabet `M*` such that every node of `Γ` (the union of all layers) gets
//! exactly one label and every nonempty encoding region contains every active
//! label at least once. Labels are interchangeable, so the search fixes the
//! introduction order of label values and explores assignments in ascending
//! node-id order with per-region counting and domain propagation. Optimality
//! is proved by decreasing the target alphabet size from `k` until a target
//! is feasible; since regions have exactly `k` members, the `k`-target forces
//! every region to carry all `k` labels pairwise distinct.

use std::time::{Duration, Instant};

use crate::graph::NodeId;
use crate::mix::{luby, splitmix64};
use crate::regions::RegionFamily;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LabelingError {
    #[error("no nonempty encoding regions; the alphabet size is 0 by convention")]
    EmptyProblem,
    #[error("region size k={k} exceeds the supported maximum of {max} labels")]
    KTooLarge { k: u32, max: u32 },
    #[error("instance too large for exhaustive enumeration (|Gamma|={gamma}, k={k})")]
    TooLarge { gamma: usize, k: u32 },
}

/// One coverage constraint: the region of `owner` must contain every active
/// label among its members.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverageSet {
    pub owner: NodeId,
    pub members: Vec<NodeId>,
}

/// The labeling instance extracted from a region family.
#[derive(Debug, Clone)]
pub struct LabelingProblem {
    k: u32,
    gamma: Vec<NodeId>,
    coverage_sets: Vec<CoverageSet>,
}

impl LabelingProblem {
    /// Builds an instance directly from its parts. `gamma` must be sorted and
    /// cover every member of every set; intended for tests and small tools.
    pub fn new(k: u32, gamma: Vec<NodeId>, coverage_sets: Vec<CoverageSet>) -> LabelingProblem {
        debug_assert!(gamma.windows(2).all(|w| w[0] < w[1]));
        LabelingProblem {
            k,
            gamma,
            coverage_sets,
        }
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn gamma(&self) -> &[NodeId] {
        &self.gamma
    }

    pub fn coverage_sets(&self) -> &[CoverageSet] {
        &self.coverage_sets
    }
}

/// Extracts the labeling problem of a region family: one coverage set per
/// nonempty region of a start point.
pub fn build_problem(rf: &RegionFamily) -> Result<LabelingProblem, LabelingError> {
    const MAX_LABELS: u32 = 64;
    if rf.k() > MAX_LABELS {
        return Err(LabelingError::KTooLarge {
            k: rf.k(),
            max: MAX_LABELS,
        });
    }
    let coverage_sets: Vec<CoverageSet> = rf
        .nonempty_start_points()
        .map(|owner| CoverageSet {
            owner,
            members: rf.region(owner).to_vec(),
        })
        .collect();
    if coverage_sets.is_empty() {
        return Err(LabelingError::EmptyProblem);
    }
    Ok(LabelingProblem {
        k: rf.k(),
        gamma: rf.gamma().to_vec(),
        coverage_sets,
    })
}

/// An optimal (or incumbent) solution of the labeling problem.
///
/// `label_of` is the raw per-node label `z*`; `message_of` composes it with
/// the rank bijection from the active label set onto `1..=M*`. The solver
/// always activates labels `1..=M*`, so both views coincide there, but files
/// may carry any active set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Labeling {
    m_star: u32,
    active: Vec<u32>,
    entries: Vec<(NodeId, u32)>,
    proven_optimal: bool,
}

impl Labeling {
    /// A labeling whose labels are already messages `1..=m` (rank bijection
    /// is the identity). Entries must be sorted by node id.
    pub fn from_messages(entries: Vec<(NodeId, u32)>, m: u32, proven_optimal: bool) -> Labeling {
        debug_assert!(entries.windows(2).all(|w| w[0].0 < w[1].0));
        Labeling {
            m_star: m,
            active: (1..=m).collect(),
            entries,
            proven_optimal,
        }
    }

    /// The empty labeling for families with no writable region.
    pub fn empty() -> Labeling {
        Labeling {
            m_star: 0,
            active: Vec::new(),
            entries: Vec::new(),
            proven_optimal: true,
        }
    }

    pub fn m_star(&self) -> u32 {
        self.m_star
    }

    pub fn active_labels(&self) -> &[u32] {
        &self.active
    }

    pub fn is_proven_optimal(&self) -> bool {
        self.proven_optimal
    }

    pub fn label_of(&self, s: NodeId) -> Option<u32> {
        self.entries
            .binary_search_by_key(&s, |&(node, _)| node)
            .ok()
            .map(|i| self.entries[i].1)
    }

    /// The message carried by `s`: the 1-based rank of its label among the
    /// active labels.
    pub fn message_of(&self, s: NodeId) -> Option<u32> {
        let label = self.label_of(s)?;
        self.active
            .binary_search(&label)
            .ok()
            .map(|rank| rank as u32 + 1)
    }

    pub fn labeled_nodes(&self) -> impl Iterator<Item = (NodeId, u32)> + '_ {
        self.entries.iter().copied()
    }
}

/// Result of the exact solver.
#[derive(Debug, Clone)]
pub enum SolveOutcome {
    /// `m_star` is the proven maximum of the labeling program.
    Optimal(Labeling),
    /// The budget ran out; `incumbent` is the best feasible labeling found
    /// (optimality unproven).
    Timeout { incumbent: Labeling, budget: Duration },
}

impl SolveOutcome {
    pub fn labeling(&self) -> &Labeling {
        match self {
            SolveOutcome::Optimal(l) => l,
            SolveOutcome::Timeout { incumbent, .. } => incumbent,
        }
    }

    pub fn into_labeling(self) -> Labeling {
        match self {
            SolveOutcome::Optimal(l) => l,
            SolveOutcome::Timeout { incumbent, .. } => incumbent,
        }
    }

    pub fn is_optimal(&self) -> bool {
        matches!(self, SolveOutcome::Optimal(_))
    }
}

/// Solves the labeling program exactly: targets `m = k, k-1, ...` in turn and
/// returns the first feasible target, which is optimal. `budget` of `None`
/// searches without a deadline.
pub fn solve_exact(problem: &LabelingProblem, budget: Option<Duration>) -> SolveOutcome {
    let deadline = budget.map(|b| Instant::now() + b);
    for m in (1..=problem.k).rev() {
        match Search::new(problem, m, deadline).run() {
            SearchResult::Feasible(assignment) => {
                let entries = problem
                    .gamma
                    .iter()
                    .copied()
                    .zip(assignment)
                    .collect();
                return SolveOutcome::Optimal(Labeling::from_messages(entries, m, true));
            }
            SearchResult::Infeasible => continue,
            SearchResult::TimedOut => {
                // All-ones is feasible for any instance, so it is the
                // incumbent of last resort when the sweep never completed a
                // feasible target.
                let entries = problem.gamma.iter().map(|&s| (s, 1)).collect();
                return SolveOutcome::Timeout {
                    incumbent: Labeling::from_messages(entries, 1, false),
                    budget: budget.unwrap_or_default(),
                };
            }
        }
    }
    // m = 1 is always feasible (label everything 1), so the sweep cannot
    // fall through.
    unreachable!("labeling feasibility sweep exhausted without a feasible target");
}

enum SearchResult {
    Feasible(Vec<u32>),
    Infeasible,
    TimedOut,
}

enum TrailEntry {
    Assign(u32),
    Domain(u32, u64),
}

/// Backtracking feasibility search for a fixed target alphabet `1..=m`.
///
/// State per coverage set: how many members already carry each label, how
/// many members are unassigned, how many labels are still missing, and per
/// label how many members could still supply it (unassigned with the label
/// in the domain, or assigned to it). The propagation rules:
///
/// - a set with more missing labels than unassigned members is dead;
/// - in a rainbow search (`m = k`) an assigned label leaves the domains of
///   its set mates;
/// - when missing labels and unassigned members are in bijection, those
///   members' domains shrink to the missing labels;
/// - a label with no possible supplier in some set is dead;
/// - a label with exactly one possible supplier in a set is forced there.
struct Search {
    m: u32,
    rainbow: bool,
    /// Member variable indices per coverage set.
    set_members: Vec<Vec<u32>>,
    /// Coverage sets containing each variable.
    var_sets: Vec<Vec<u32>>,
    assignment: Vec<u32>,
    domain: Vec<u64>,
    /// Per set and label: members currently assigned that label.
    label_count: Vec<Vec<u16>>,
    /// Per set and label: members that could still end up with that label.
    supplier_count: Vec<Vec<u16>>,
    unassigned_in: Vec<u32>,
    missing_in: Vec<u32>,
    max_used: u32,
    trail: Vec<TrailEntry>,
    queue: Vec<(u32, u32)>,
    touched: Vec<(u32, u32)>,
    deadline: Option<Instant>,
    expansions: u64,
    cutoff: u64,
    cutoff_hit: bool,
    restart: u64,
    timed_out: bool,
}

impl Search {
    fn new(problem: &LabelingProblem, m: u32, deadline: Option<Instant>) -> Search {
        let var_count = problem.gamma.len();
        let var_of = |node: NodeId| -> u32 {
            problem
                .gamma
                .binary_search(&node)
                .expect("coverage member outside gamma") as u32
        };
        let set_members: Vec<Vec<u32>> = problem
            .coverage_sets
            .iter()
            .map(|s| s.members.iter().map(|&n| var_of(n)).collect())
            .collect();
        let mut var_sets = vec![Vec::new(); var_count];
        for (si, members) in set_members.iter().enumerate() {
            for &v in members {
                var_sets[v as usize].push(si as u32);
            }
        }
        let full_mask = if m == 64 { u64::MAX } else { (1u64 << m) - 1 };
        let set_count = set_members.len();
        Search {
            m,
            rainbow: m == problem.k,
            unassigned_in: set_members.iter().map(|s| s.len() as u32).collect(),
            supplier_count: set_members
                .iter()
                .map(|s| vec![s.len() as u16; m as usize])
                .collect(),
            set_members,
            var_sets,
            assignment: vec![0; var_count],
            domain: vec![full_mask; var_count],
            label_count: vec![vec![0; m as usize]; set_count],
            missing_in: vec![m; set_count],
            max_used: 0,
            trail: Vec::new(),
            queue: Vec::new(),
            touched: Vec::new(),
            deadline,
            expansions: 0,
            cutoff: u64::MAX,
            cutoff_hit: false,
            restart: 0,
            timed_out: false,
        }
    }

    fn run(mut self) -> SearchResult {
        if let Some(deadline) = self.deadline {
            if Instant::now() >= deadline {
                return SearchResult::TimedOut;
            }
        }
        if self
            .unassigned_in
            .iter()
            .zip(&self.missing_in)
            .any(|(u, miss)| miss > u)
        {
            return SearchResult::Infeasible;
        }
        // Restarts on the Luby schedule, each with a fresh deterministic
        // value-order perturbation; feasibility can surface on any restart,
        // infeasibility only from a run that exhausted the space without
        // hitting its cutoff. Cutoffs grow unboundedly, so the search stays
        // complete.
        const BASE_CUTOFF: u64 = 8192;
        for restart in 0.. {
            self.restart = restart;
            self.expansions = 0;
            self.cutoff = BASE_CUTOFF.saturating_mul(luby(restart + 1));
            self.cutoff_hit = false;
            let found = self.dfs();
            if self.timed_out {
                return SearchResult::TimedOut;
            }
            if found {
                return SearchResult::Feasible(self.assignment);
            }
            if !self.cutoff_hit {
                return SearchResult::Infeasible;
            }
            debug_assert!(self.trail.is_empty());
        }
        unreachable!()
    }

    fn dfs(&mut self) -> bool {
        self.expansions += 1;
        if self.expansions >= self.cutoff {
            self.cutoff_hit = true;
            return false;
        }
        if self.expansions.is_multiple_of(1024) {
            if let Some(deadline) = self.deadline {
                if Instant::now() >= deadline {
                    self.timed_out = true;
                    return false;
                }
            }
        }
        let Some(var) = self.pick_variable() else {
            return true;
        };
        // Label-introduction symmetry break: a fresh label may only be the
        // next unused one. Any order over the allowed labels keeps the
        // enumeration complete, so later restarts shuffle it.
        let cap = (self.max_used + 1).min(self.m);
        let cap_mask = if cap == 64 { u64::MAX } else { (1u64 << cap) - 1 };
        let candidates = self.domain[var] & cap_mask;
        let mut order: [u32; 64] = [0; 64];
        let mut count = 0;
        let mut bits = candidates;
        while bits != 0 {
            order[count] = bits.trailing_zeros() + 1;
            count += 1;
            bits &= bits - 1;
        }
        if self.restart > 0 {
            order[..count].sort_unstable_by_key(|&l| {
                splitmix64(self.restart ^ ((var as u64) << 32) ^ (u64::from(l) << 8))
            });
        }
        for &label in &order[..count] {
            let mark = self.trail.len();
            let saved_max = self.max_used;
            if self.assign_and_propagate(var as u32, label) && self.dfs() {
                return true;
            }
            self.undo_to(mark);
            self.max_used = saved_max;
            if self.timed_out || self.cutoff_hit {
                return false;
            }
        }
        false
    }

    /// First-fail branching: the unassigned variable with the smallest
    /// domain, ties to the one in more coverage sets, then to the smaller
    /// index. Depends only on label-permutation-invariant state, so the
    /// introduction-order symmetry break stays complete.
    fn pick_variable(&self) -> Option<usize> {
        let mut best: Option<(u32, usize, usize)> = None;
        for v in 0..self.assignment.len() {
            if self.assignment[v] != 0 {
                continue;
            }
            let key = (
                self.domain[v].count_ones(),
                usize::MAX - self.var_sets[v].len(),
                v,
            );
            if best.is_none_or(|b| key < b) {
                best = Some(key);
            }
        }
        best.map(|(_, _, v)| v)
    }

    /// Assigns `var = label` plus every forced consequence. Returns false on
    /// conflict; the trail stays exact either way, so the caller unwinds it.
    fn assign_and_propagate(&mut self, var: u32, label: u32) -> bool {
        self.queue.clear();
        self.queue.push((var, label));
        while let Some((v, l)) = self.queue.pop() {
            let current = self.assignment[v as usize];
            if current != 0 {
                if current == l {
                    continue;
                }
                return false;
            }
            if self.domain[v as usize] & (1 << (l - 1)) == 0 {
                return false;
            }
            self.assignment[v as usize] = l;
            self.trail.push(TrailEntry::Assign(v));
            self.max_used = self.max_used.max(l);
            // Complete every counter update of this assignment before any
            // conflict can bail, so that undoing the trail entry reverses
            // exactly what happened.
            self.touched.clear();
            for si in 0..self.var_sets[v as usize].len() {
                let s = self.var_sets[v as usize][si] as usize;
                let count = &mut self.label_count[s][(l - 1) as usize];
                *count += 1;
                if *count == 1 {
                    self.missing_in[s] -= 1;
                }
                self.unassigned_in[s] -= 1;
            }
            let mut dropped = self.domain[v as usize] & !(1u64 << (l - 1));
            while dropped != 0 {
                let gone = dropped.trailing_zeros() + 1;
                dropped &= dropped - 1;
                for si in 0..self.var_sets[v as usize].len() {
                    let s = self.var_sets[v as usize][si];
                    self.supplier_count[s as usize][(gone - 1) as usize] -= 1;
                    self.touched.push((s, gone));
                }
            }
            if !self.evaluate_touched() {
                return false;
            }
            for si in 0..self.var_sets[v as usize].len() {
                let s = self.var_sets[v as usize][si] as usize;
                if self.missing_in[s] > self.unassigned_in[s] {
                    return false;
                }
                if self.rainbow {
                    if self.label_count[s][(l - 1) as usize] > 1 {
                        return false;
                    }
                    if !self.restrict_unassigned(s, !(1u64 << (l - 1))) {
                        return false;
                    }
                } else if self.missing_in[s] > 0 && self.missing_in[s] == self.unassigned_in[s] {
                    let mut missing_mask = 0u64;
                    for lab in 0..self.m as usize {
                        if self.label_count[s][lab] == 0 {
                            missing_mask |= 1 << lab;
                        }
                    }
                    if !self.restrict_unassigned(s, missing_mask) {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Intersects the domains of the unassigned members of set `s` with
    /// `mask`, maintaining supplier counts and queueing singletons. Returns
    /// false on a wipeout or a dead label.
    fn restrict_unassigned(&mut self, s: usize, mask: u64) -> bool {
        for mi in 0..self.set_members[s].len() {
            let w = self.set_members[s][mi];
            if self.assignment[w as usize] != 0 {
                continue;
            }
            let old = self.domain[w as usize];
            let new = old & mask;
            if new == old {
                continue;
            }
            self.domain[w as usize] = new;
            self.trail.push(TrailEntry::Domain(w, old));
            self.touched.clear();
            let mut removed = old & !new;
            while removed != 0 {
                let gone = removed.trailing_zeros() + 1;
                removed &= removed - 1;
                for si in 0..self.var_sets[w as usize].len() {
                    let other = self.var_sets[w as usize][si];
                    self.supplier_count[other as usize][(gone - 1) as usize] -= 1;
                    self.touched.push((other, gone));
                }
            }
            if new == 0 {
                return false;
            }
            if !self.evaluate_touched() {
                return false;
            }
            if new.count_ones() == 1 {
                self.queue.push((w, new.trailing_zeros() + 1));
            }
        }
        true
    }

    /// Checks each (set, label) pair whose supplier count just dropped:
    /// zero suppliers for an uncovered label kills the branch, exactly one
    /// forces that supplier.
    fn evaluate_touched(&mut self) -> bool {
        for ti in 0..self.touched.len() {
            let (s, l) = self.touched[ti];
            let s = s as usize;
            if self.label_count[s][(l - 1) as usize] > 0 {
                continue;
            }
            match self.supplier_count[s][(l - 1) as usize] {
                0 => return false,
                1 => {
                    let supplier = self.set_members[s]
                        .iter()
                        .copied()
                        .find(|&w| {
                            self.assignment[w as usize] == 0
                                && self.domain[w as usize] & (1 << (l - 1)) != 0
                        })
                        .expect("supplier count 1 without a candidate");
                    self.queue.push((supplier, l));
                }
                _ => {}
            }
        }
        true
    }

    fn undo_to(&mut self, mark: usize) {
        while self.trail.len() > mark {
            match self.trail.pop().unwrap() {
                TrailEntry::Assign(v) => {
                    let l = self.assignment[v as usize];
                    self.assignment[v as usize] = 0;
                    for si in 0..self.var_sets[v as usize].len() {
                        let s = self.var_sets[v as usize][si] as usize;
                        let count = &mut self.label_count[s][(l - 1) as usize];
                        *count -= 1;
                        if *count == 0 {
                            self.missing_in[s] += 1;
                        }
                        self.unassigned_in[s] += 1;
                    }
                    let mut dropped = self.domain[v as usize] & !(1u64 << (l - 1));
                    while dropped != 0 {
                        let gone = dropped.trailing_zeros() + 1;
                        dropped &= dropped - 1;
                        for si in 0..self.var_sets[v as usize].len() {
                            let s = self.var_sets[v as usize][si] as usize;
                            self.supplier_count[s][(gone - 1) as usize] += 1;
                        }
                    }
                }
                TrailEntry::Domain(v, old) => {
                    let mut restored = old & !self.domain[v as usize];
                    while restored != 0 {
                        let back = restored.trailing_zeros() + 1;
                        restored &= restored - 1;
                        for si in 0..self.var_sets[v as usize].len() {
                            let s = self.var_sets[v as usize][si] as usize;
                            self.supplier_count[s][(back - 1) as usize] += 1;
                        }
                    }
                    self.domain[v as usize] = old;
                }
            }
        }
    }
}

/// Exhaustive reference optimum for small instances: enumerates every label
/// assignment of the constrained nodes and takes the best achievable active
/// set. Guarded by an enumeration bound; independent of the search above.
pub fn brute_force_oracle(problem: &LabelingProblem) -> Result<u32, LabelingError> {
    if problem.gamma.len() > 12 || problem.k > 4 {
        return Err(LabelingError::TooLarge {
            gamma: problem.gamma.len(),
            k: problem.k,
        });
    }
    let k = problem.k as usize;
    // Only nodes that appear in some coverage set constrain the optimum;
    // free nodes can always copy any active label.
    let mut constrained: Vec<NodeId> = problem
        .coverage_sets
        .iter()
        .flat_map(|s| s.members.iter().copied())
        .collect();
    constrained.sort_unstable();
    constrained.dedup();
    let member_idx: Vec<Vec<usize>> = problem
        .coverage_sets
        .iter()
        .map(|s| {
            s.members
                .iter()
                .map(|n| constrained.binary_search(n).unwrap())
                .collect()
        })
        .collect();

    let mut best = 0u32;
    let mut labels = vec![0usize; constrained.len()];
    loop {
        // Labels present in every coverage set under this assignment.
        let mut everywhere: u32 = (1 << k) - 1;
        for members in &member_idx {
            let mut present = 0u32;
            for &mi in members {
                present |= 1 << labels[mi];
            }
            everywhere &= present;
        }
        let mut used = 0u32;
        for &l in &labels {
            used |= 1 << l;
        }
        // Every used label must be active, i.e. present in every set.
        if used & !everywhere == 0 {
            best = best.max(everywhere.count_ones());
        }

        let mut pos = labels.len();
        loop {
            if pos == 0 {
                return Ok(best);
            }
            pos -= 1;
            if labels[pos] + 1 < k {
                labels[pos] += 1;
                for later in labels.iter_mut().skip(pos + 1) {
                    *later = 0;
                }
                break;
            }
        }
    }
}
