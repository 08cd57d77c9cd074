//! Independent validation of assembled code tables: exhaustive adversarial
//! write simulation, consistency and monotonicity sweeps, and the published
//! upper-bound formulas for two-cell devices.

use std::time::{Duration, Instant};

use crate::codec::{CodeTable, EncodeResult};
use crate::generate::DeviceKind;
use crate::graph::NodeId;
use crate::regions::WorstWrites;

/// Exhaustive worst-case write search. The adversary's best play depends only
/// on the current state (the encoder is memoryless beyond it), so the
/// guaranteed write count per state is computed once, sinks first:
/// `f(s) = min over messages of (0 on fail, 1 + f(next))`, saturated at
/// `limit`. An in-place rewrite (`next = s`) can never be the adversary's
/// best move, so it contributes the saturation value.
#[derive(Debug, Clone)]
pub struct WorstCaseSearch {
    /// Guaranteed writes from the root, capped at the search limit.
    pub t_star: u32,
    /// A message sequence of length `t_star + 1` whose last write fails;
    /// absent when the search hit the limit without finding a failure.
    pub witness: Option<Vec<u32>>,
    pub hit_limit: bool,
}

pub fn explore_worst_writes(table: &CodeTable, limit: u32) -> WorstCaseSearch {
    assert!(limit >= 1, "search limit must be >= 1");
    let alphabet = table.message_count();
    if alphabet == 0 {
        // No messages can be written at all.
        return WorstCaseSearch {
            t_star: 0,
            witness: None,
            hit_limit: false,
        };
    }
    let graph = table.graph();
    let mut guaranteed: Vec<u32> = vec![0; graph.node_count()];
    for &state in graph.topo_order().iter().rev() {
        let mut worst = limit;
        for m in 1..=alphabet {
            let branch = match table.encode(state, m) {
                Ok(EncodeResult::Next(next)) if next == state => limit,
                Ok(EncodeResult::Next(next)) => (1 + guaranteed[next.index()]).min(limit),
                Ok(EncodeResult::Fail) => 0,
                // A malformed table cannot guarantee the write.
                Err(_) => 0,
            };
            worst = worst.min(branch);
        }
        guaranteed[state.index()] = worst;
    }

    let t_star = guaranteed[graph.root().index()];
    if t_star >= limit {
        return WorstCaseSearch {
            t_star: limit,
            witness: None,
            hit_limit: true,
        };
    }

    // Reconstruct a worst-case sequence by descending along the minimum.
    let mut witness = Vec::with_capacity(t_star as usize + 1);
    let mut state = graph.root();
    let mut remaining = t_star;
    'steps: while remaining > 0 {
        for m in 1..=alphabet {
            if let Ok(EncodeResult::Next(next)) = table.encode(state, m) {
                if next != state && guaranteed[next.index()] == remaining - 1 {
                    witness.push(m);
                    state = next;
                    remaining -= 1;
                    continue 'steps;
                }
            }
        }
        unreachable!("no branch attains the memoized write count");
    }
    for m in 1..=alphabet {
        match table.encode(state, m) {
            Ok(EncodeResult::Fail) | Err(_) => {
                witness.push(m);
                break;
            }
            Ok(EncodeResult::Next(_)) => {}
        }
    }
    debug_assert_eq!(witness.len() as u32, t_star + 1);

    WorstCaseSearch {
        t_star,
        witness: Some(witness),
        hit_limit: false,
    }
}

/// The largest `t <= limit` such that every message sequence of length `t`
/// encodes from the root without a failure.
pub fn simulate_worst_writes(table: &CodeTable, limit: u32) -> u32 {
    explore_worst_writes(table, limit).t_star
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    NotMonotone { state: NodeId, message: u32, next: NodeId },
    DecodeMismatch { state: NodeId, message: u32, next: NodeId, decoded: u32 },
    OutsideGamma { state: NodeId, message: u32, next: NodeId },
    TooManyWindowMoves { state: NodeId, message: u32, moves: u32 },
    EncodeError { state: NodeId, message: u32, error: String },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::NotMonotone { state, message, next } => {
                write!(f, "encode({state}, {message}) = {next} is not reachable from {state}")
            }
            Violation::DecodeMismatch { state, message, next, decoded } => {
                write!(f, "decode(encode({state}, {message}) = {next}) = {decoded} != {message}")
            }
            Violation::OutsideGamma { state, message, next } => {
                write!(f, "encode({state}, {message}) = {next} lies outside Gamma")
            }
            Violation::TooManyWindowMoves { state, message, moves } => {
                write!(f, "encode({state}, {message}) moved the window {moves} times")
            }
            Violation::EncodeError { state, message, error } => {
                write!(f, "encode({state}, {message}) errored: {error}")
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct ConsistencyReport {
    pub ok: bool,
    pub checked_pairs: usize,
    pub violation: Option<Violation>,
}

/// Sweeps every state reachable from the root and every message: each encode
/// must fail or yield a reachable successor inside `Γ` that decodes back to
/// the message, using at most one window move.
pub fn check_consistency(table: &CodeTable) -> ConsistencyReport {
    let graph = table.graph();
    let mut checked_pairs = 0;
    for state in graph
        .reachable_region(graph.root())
        .expect("root is always in range")
    {
        for message in 1..=table.message_count() {
            checked_pairs += 1;
            let violation = match table.encode_traced(state, message) {
                Err(error) => Some(Violation::EncodeError {
                    state,
                    message,
                    error: error.to_string(),
                }),
                Ok((EncodeResult::Fail, _)) => None,
                Ok((EncodeResult::Next(next), moves)) => {
                    if !graph.reaches(state, next) {
                        Some(Violation::NotMonotone { state, message, next })
                    } else if !table.regions().in_gamma(next) {
                        Some(Violation::OutsideGamma { state, message, next })
                    } else if moves > 1 {
                        Some(Violation::TooManyWindowMoves { state, message, moves })
                    } else {
                        match table.decode(next) {
                            Ok(decoded) if decoded == message => None,
                            Ok(decoded) => Some(Violation::DecodeMismatch {
                                state,
                                message,
                                next,
                                decoded,
                            }),
                            Err(error) => Some(Violation::EncodeError {
                                state,
                                message,
                                error: error.to_string(),
                            }),
                        }
                    }
                }
            };
            if let Some(violation) = violation {
                return ConsistencyReport {
                    ok: false,
                    checked_pairs,
                    violation: Some(violation),
                };
            }
        }
    }
    ConsistencyReport {
        ok: true,
        checked_pairs,
        violation: None,
    }
}

/// Upper bound on `t*` for two-cell flash codes: `ceil(2(q-1)/3) - 1`.
/// Stated for `n = 2`, `M >= 8`.
pub fn upper_bound_flash(q: u32) -> u32 {
    (2 * (q - 1)).div_ceil(3) - 1
}

/// Upper bound on `t*` for two-cell codes under the 3-imbalance constraint:
/// `floor(3(q-1)/5)`. Stated for `n = 2`, `M = 8`, `d = 3`.
pub fn upper_bound_ici(q: u32) -> u32 {
    3 * (q - 1) / 5
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundKind {
    Flash,
    Ici,
}

impl std::fmt::Display for BoundKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BoundKind::Flash => write!(f, "flash"),
            BoundKind::Ici => write!(f, "ici"),
        }
    }
}

/// A bound comparison plus the annotation whether the instance actually lies
/// in the regime for which the bound is stated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundCheck {
    pub kind: BoundKind,
    pub value: u32,
    pub in_stated_range: bool,
    pub meets: bool,
}

/// Evaluates a bound against a table. `None` when the device kind carries no
/// level count (custom graphs have no `q`).
pub fn bound_check(kind: BoundKind, table: &CodeTable) -> Option<BoundCheck> {
    let q = table.kind().levels()?;
    let m = table.message_count();
    let (value, in_stated_range) = match kind {
        BoundKind::Flash => (
            upper_bound_flash(q),
            table.kind().cells() == Some(2) && table.kind().imbalance().is_none() && m >= 8,
        ),
        BoundKind::Ici => (
            upper_bound_ici(q),
            table.kind().cells() == Some(2) && table.kind().imbalance() == Some(3) && m == 8,
        ),
    };
    let meets = match table.t_star() {
        WorstWrites::Finite(t) => t <= value,
        WorstWrites::Unbounded => false,
    };
    Some(BoundCheck {
        kind,
        value,
        in_stated_range,
        meets,
    })
}

/// Full verification: formula vs. simulation, consistency sweep, and an
/// optional bound comparison.
#[derive(Debug, Clone)]
pub struct VerificationReport {
    pub instance: DeviceKind,
    pub t_star_formula: WorstWrites,
    pub t_star_simulated: u32,
    pub simulation_limit: u32,
    pub formula_matches_simulation: bool,
    /// Worst-case sequence of length `t* + 1` whose last write fails.
    pub witness: Option<Vec<u32>>,
    pub consistency_ok: bool,
    pub monotonic_ok: bool,
    pub checked_pairs: usize,
    pub violation: Option<Violation>,
    pub bound: Option<BoundCheck>,
    pub elapsed: Duration,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.formula_matches_simulation
            && self.consistency_ok
            && self.monotonic_ok
            && self.bound.is_none_or(|b| b.meets)
    }
}

pub fn verify_table(table: &CodeTable, bound: Option<BoundKind>) -> VerificationReport {
    let started = Instant::now();
    let t_star_formula = table.t_star();

    // One step beyond the formula value must expose a failure; for the
    // degenerate unbounded family just probe a little beyond the node count.
    let limit = match t_star_formula {
        WorstWrites::Finite(t) => t + 1,
        WorstWrites::Unbounded => table.graph().node_count() as u32 + 1,
    };
    let search = explore_worst_writes(table, limit.max(1));
    // A failing sequence of length t*+1 must exist, except for the empty
    // alphabet (no message can be formed at all, and t* = 0). The witness is
    // replayed through the encoder rather than trusted.
    let witness_replays = |witness: &Option<Vec<u32>>, t: u32| -> bool {
        match witness {
            None => table.message_count() == 0,
            Some(seq) => {
                seq.len() as u32 == t + 1
                    && matches!(
                        table.write_sequence(seq),
                        Ok(crate::codec::WriteOutcome::FailedAt { index, .. }) if index == t + 1
                    )
            }
        }
    };
    let formula_matches_simulation = match t_star_formula {
        WorstWrites::Finite(t) => search.t_star == t && witness_replays(&search.witness, t),
        WorstWrites::Unbounded => search.hit_limit,
    };

    let sweep = check_consistency(table);
    let monotonic_ok = !matches!(sweep.violation, Some(Violation::NotMonotone { .. }));

    VerificationReport {
        instance: table.kind(),
        t_star_formula,
        t_star_simulated: search.t_star,
        simulation_limit: limit,
        formula_matches_simulation,
        witness: search.witness,
        consistency_ok: sweep.ok,
        monotonic_ok,
        checked_pairs: sweep.checked_pairs,
        violation: sweep.violation,
        bound: bound.and_then(|kind| bound_check(kind, table)),
        elapsed: started.elapsed(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::CodeTable;
    use crate::generate::{flash_graph, FlashSpec};
    use crate::graph::build_graph;
    use crate::labeling::{build_problem, solve_exact, Labeling};
    use crate::regions::{build_regions, TieBreak};

    fn flash_table(n: u32, q: u32, k: u32) -> CodeTable {
        let g = flash_graph(&FlashSpec::unconstrained(n, q)).unwrap();
        let rf = build_regions(&g, k, TieBreak::ById);
        let labeling = solve_exact(&build_problem(&rf).unwrap(), None).into_labeling();
        CodeTable::assemble(DeviceKind::Flash { cells: n, levels: q }, g, rf, labeling).unwrap()
    }

    #[test]
    fn flash_2x4_simulates_two_writes() {
        let table = flash_table(2, 4, 5);
        assert_eq!(table.message_count(), 5);
        assert_eq!(simulate_worst_writes(&table, 10), 2);
        let search = explore_worst_writes(&table, 3);
        assert_eq!(search.t_star, 2);
        let witness = search.witness.unwrap();
        assert_eq!(witness.len(), 3);
        // The witness really does fail on its last write.
        match table.write_sequence(&witness).unwrap() {
            crate::codec::WriteOutcome::FailedAt { index, .. } => assert_eq!(index, 3),
            other => panic!("witness did not fail: {other:?}"),
        }
        // Every length-2 sequence succeeds.
        for a in 1..=5 {
            for b in 1..=5 {
                match table.write_sequence(&[a, b]).unwrap() {
                    crate::codec::WriteOutcome::Complete(_) => {}
                    other => panic!("({a},{b}) failed early: {other:?}"),
                }
            }
        }
    }

    #[test]
    fn worked_example_family_achieves_two_writes() {
        let g = build_graph(
            6,
            &[(1, 2), (1, 3), (2, 4), (3, 4), (2, 6), (3, 5), (4, 6), (5, 6)],
            1,
        )
        .unwrap();
        let rf = build_regions(&g, 3, TieBreak::ById);
        let labeling = solve_exact(&build_problem(&rf).unwrap(), None).into_labeling();
        let table = CodeTable::assemble(DeviceKind::Custom, g, rf, labeling).unwrap();
        assert_eq!(table.t_star(), WorstWrites::Finite(2));
        assert_eq!(simulate_worst_writes(&table, 5), 2);
        assert!(check_consistency(&table).ok);
    }

    #[test]
    fn single_node_table_simulates_zero() {
        let g = build_graph(1, &[], 1).unwrap();
        let rf = build_regions(&g, 2, TieBreak::ById);
        let table =
            CodeTable::assemble(DeviceKind::Custom, g, rf, Labeling::empty()).unwrap();
        assert_eq!(simulate_worst_writes(&table, 4), 0);
        assert_eq!(table.t_star(), WorstWrites::Finite(0));
        assert!(check_consistency(&table).ok);
    }

    #[test]
    fn consistency_sweep_passes_on_pipeline_tables() {
        for (n, q, k) in [(2, 4, 5), (2, 5, 4), (2, 8, 8)] {
            let table = flash_table(n, q, k);
            let report = check_consistency(&table);
            assert!(report.ok, "violation: {:?}", report.violation);
            assert_eq!(
                report.checked_pairs,
                table.graph().node_count() * table.message_count() as usize
            );
        }
    }

    #[test]
    fn corrupted_label_is_caught() {
        let table = flash_table(2, 4, 5);
        // Swap one label after assembly (assembly itself would reject it).
        let mut entries: Vec<(NodeId, u32)> = table.labeling().labeled_nodes().collect();
        entries[2].1 = entries[1].1;
        let corrupted = Labeling::from_messages(entries, table.message_count(), true);
        assert!(CodeTable::assemble(
            table.kind(),
            table.graph().clone(),
            table.regions().clone(),
            corrupted.clone()
        )
        .is_err());
        let bad_table = CodeTable::assemble_unchecked(
            table.kind(),
            table.graph().clone(),
            table.regions().clone(),
            corrupted,
        );
        let report = check_consistency(&bad_table);
        assert!(!report.ok);
        assert!(report.violation.is_some(), "sweep must carry a counterexample");
    }

    #[test]
    fn flash_bound_values() {
        assert_eq!(upper_bound_flash(4), 1);
        assert_eq!(upper_bound_flash(5), 2);
        assert_eq!(upper_bound_flash(6), 3);
        assert_eq!(upper_bound_flash(7), 3);
        assert_eq!(upper_bound_flash(8), 4);
        assert_eq!(upper_bound_flash(16), 9);
        assert_eq!(upper_bound_flash(32), 20);
        assert_eq!(upper_bound_flash(48), 31);
    }

    #[test]
    fn ici_bound_values() {
        assert_eq!(upper_bound_ici(4), 1);
        assert_eq!(upper_bound_ici(5), 2);
        assert_eq!(upper_bound_ici(6), 3);
        assert_eq!(upper_bound_ici(7), 3);
        assert_eq!(upper_bound_ici(8), 4);
        assert_eq!(upper_bound_ici(16), 9);
        assert_eq!(upper_bound_ici(32), 18);
        assert_eq!(upper_bound_ici(48), 28);
    }

    #[test]
    fn bound_check_annotates_range() {
        let table = flash_table(2, 8, 8);
        let check = bound_check(BoundKind::Flash, &table).unwrap();
        assert_eq!(check.value, 4);
        assert!(check.in_stated_range);
        assert!(check.meets);

        // M = 5 is outside the stated regime; the number is still produced.
        let table = flash_table(2, 4, 5);
        let check = bound_check(BoundKind::Flash, &table).unwrap();
        assert!(!check.in_stated_range);
    }

    #[test]
    fn verify_report_passes_on_good_table() {
        let table = flash_table(2, 8, 8);
        let report = verify_table(&table, Some(BoundKind::Flash));
        assert!(report.passed());
        assert_eq!(report.t_star_formula, WorstWrites::Finite(4));
        assert_eq!(report.t_star_simulated, 4);
        assert_eq!(report.witness.as_ref().unwrap().len(), 5);
    }
}
