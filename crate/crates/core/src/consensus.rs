//! Constraints-consensus algorithms over synchronous networks.
//!
//! Each node holds one constraint of a distributed abstract program plus a
//! candidate basis of fixed cardinality `delta`, initialized to copies of its
//! own constraint. Per round a node broadcasts its basis, pools its own
//! constraint (the constraint re-examination rule), its basis and its
//! in-neighbors' bases, and replaces the basis by a `SUBEX_lp` solution of the
//! pool. Three variants are provided: the nominal per-round update, a
//! multi-round variant where each solver invocation occupies a fixed number of
//! rounds, and a cycling variant for static networks that processes bounded
//! groups of in-neighbors per round under a memory cap.
//!
//! The runner instruments everything the analysis talks about: per-round value
//! snapshots, monotonicity violations, completion against a centralized
//! oracle value, the value-unchanged halting rule, message counts and memory
//! high-water marks.

use std::cmp::Ordering;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::network::{graph_metrics, is_jointly_strongly_connected, TimeVaryingDigraph};
use crate::opt::{
    brute_force_basis, subex_lp_budgeted, Basis, Problem, SolveError, BRUTE_FORCE_GUARD,
    DEFAULT_PRIMITIVE_BUDGET,
};
use crate::util::derive_seed;

#[derive(Debug, Error)]
pub enum ConsensusError {
    #[error("communication graph is not jointly strongly connected")]
    NotJointlyConnected,
    #[error("assignment must map exactly one constraint to each of the {expected} nodes, got {found}")]
    NotBijective { expected: usize, found: usize },
    #[error("cycling constraints consensus requires a static graph")]
    TimeVaryingNotSupported,
    #[error("the diameter halting rule requires a static strongly connected graph")]
    HaltingRequiresStatic,
    #[error(transparent)]
    Solve(#[from] SolveError),
}

/// Algorithm variant.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    Nominal,
    /// Solver invocations take `compute_latency` rounds; messages carry the
    /// last completed basis and inputs are snapshot at invocation start.
    MultiRound,
    /// Static networks only: in-neighbors are partitioned into groups of at
    /// most `memory_bound` and processed round-robin.
    Cycling,
}

/// Distributed halting policy.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Halting {
    None,
    /// Halt once the basis value is unchanged for `2 * diam + 1` consecutive
    /// rounds; the diameter is supplied by the caller.
    DiameterRule(usize),
    /// Halt after a fixed number of value-unchanged rounds.
    Fixed(usize),
}

impl Halting {
    fn threshold(&self) -> Option<usize> {
        match self {
            Halting::None => None,
            Halting::DiameterRule(diam) => Some(2 * diam + 1),
            Halting::Fixed(k) => Some(*k),
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub variant: Variant,
    pub max_rounds: usize,
    pub halting: Halting,
    /// Rounds per solver invocation (multi-round variant), at least 1.
    pub compute_latency: usize,
    /// Stored-message cap `D` (cycling variant), at least 1.
    pub memory_bound: usize,
    pub seed: u64,
    /// Re-include the node's own constraint in every pool. Disabling this is
    /// a test-only switch demonstrating why re-examination is necessary.
    pub re_examine: bool,
    /// Record per-round value snapshots in the trace.
    pub record_values: bool,
    /// Primitive-call budget handed to each solver invocation.
    pub primitive_budget: u64,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            variant: Variant::Nominal,
            max_rounds: 10_000,
            halting: Halting::None,
            compute_latency: 1,
            memory_bound: 1,
            seed: 0,
            re_examine: true,
            record_values: true,
            primitive_budget: DEFAULT_PRIMITIVE_BUDGET,
        }
    }
}

/// Everything recorded about one consensus run.
#[derive(Clone, Debug)]
pub struct ConsensusTrace<C, V> {
    pub node_count: usize,
    pub rounds_run: usize,
    /// First round index (0 = initial state) at which every node's value
    /// equals the oracle value; `None` when the run never got there.
    pub completion_round: Option<usize>,
    /// `[round][node]` value snapshots including round 0; empty when value
    /// recording is off.
    pub per_round_values: Vec<Vec<V>>,
    pub per_round_halted: Vec<Vec<bool>>,
    pub final_values: Vec<V>,
    pub final_bases: Vec<Vec<C>>,
    pub halt_rounds: Vec<Option<usize>>,
    /// Peak stored constraints per node (own constraint + basis + processed
    /// messages or snapshot).
    pub memory_high_water: Vec<usize>,
    /// Per-node variant bound the high-water mark is asserted against.
    pub memory_bound: Vec<usize>,
    pub message_count: u64,
    pub primitive_calls: u64,
    /// Centralized reference value of the full constraint set.
    pub target_value: V,
    /// All final node values equal the reference value.
    pub oracle_match: bool,
    pub monotonicity_violations: usize,
    /// Value changes observed after the first node halted.
    pub post_halt_value_changes: usize,
    /// Trailing rounds with no value change anywhere (stability indicator).
    pub stable_rounds: usize,
}

impl<C, V> ConsensusTrace<C, V> {
    pub fn converged(&self) -> bool {
        self.completion_round.is_some()
    }

    pub fn memory_within_bounds(&self) -> bool {
        self.memory_high_water.iter().zip(&self.memory_bound).all(|(m, b)| m <= b)
    }
}

struct NodeRuntime<P: Problem> {
    basis: Basis<P::Constraint, P::Value>,
    halted: bool,
    halt_round: Option<usize>,
    unchanged_rounds: usize,
    memory_high_water: usize,
    rng: ChaCha8Rng,
    /// Multi-round: round at which the running invocation completes, plus the
    /// input pool snapshot taken when it started.
    busy: Option<(usize, Vec<P::Constraint>)>,
}

/// Runs a constraints-consensus algorithm and returns its trace.
///
/// `assignment[i]` is the constraint of node `i + 1`; the map must be
/// bijective (exactly one constraint per node). The reference value used for
/// completion detection is the brute-force value for small sets and a
/// centralized seeded `SUBEX_lp` solution otherwise.
pub fn run_constraints_consensus<P: Problem>(
    problem: &P,
    graph: &TimeVaryingDigraph,
    assignment: &[P::Constraint],
    opts: &RunOptions,
) -> Result<ConsensusTrace<P::Constraint, P::Value>, ConsensusError> {
    let n = graph.node_count();
    if assignment.len() != n {
        return Err(ConsensusError::NotBijective { expected: n, found: assignment.len() });
    }
    if !is_jointly_strongly_connected(graph, graph.period()) {
        return Err(ConsensusError::NotJointlyConnected);
    }
    match opts.variant {
        Variant::Cycling if !graph.is_static() => {
            return Err(ConsensusError::TimeVaryingNotSupported)
        }
        Variant::MultiRound => assert!(opts.compute_latency >= 1),
        Variant::Cycling => assert!(opts.memory_bound >= 1),
        _ => {}
    }
    if matches!(opts.halting, Halting::DiameterRule(_))
        && !(graph.is_static() && graph_metrics(graph, 0).strongly_connected)
    {
        return Err(ConsensusError::HaltingRequiresStatic);
    }

    let delta = problem.delta();
    let target = reference_value(problem, assignment, opts.seed)?;

    let mut nodes: Vec<NodeRuntime<P>> = (0..n)
        .map(|i| NodeRuntime {
            basis: Basis::from_single(problem, &assignment[i]),
            halted: false,
            halt_round: None,
            unchanged_rounds: 0,
            memory_high_water: 1 + delta,
            rng: ChaCha8Rng::seed_from_u64(derive_seed(opts.seed, &[i as u64 + 1])),
            busy: None,
        })
        .collect();

    let halt_threshold = opts.halting.threshold();
    let mut trace = ConsensusTrace {
        node_count: n,
        rounds_run: 0,
        completion_round: None,
        per_round_values: Vec::new(),
        per_round_halted: Vec::new(),
        final_values: Vec::new(),
        final_bases: Vec::new(),
        halt_rounds: vec![None; n],
        memory_high_water: vec![0; n],
        memory_bound: memory_bounds(graph, delta, opts),
        message_count: 0,
        primitive_calls: 0,
        target_value: target.clone(),
        oracle_match: false,
        monotonicity_violations: 0,
        post_halt_value_changes: 0,
        stable_rounds: 0,
    };

    let all_at_target = |nodes: &[NodeRuntime<P>]| {
        nodes
            .iter()
            .all(|s| problem.cmp_values(s.basis.value(), &target) == Ordering::Equal)
    };

    let record = |trace: &mut ConsensusTrace<P::Constraint, P::Value>, nodes: &[NodeRuntime<P>]| {
        if opts.record_values {
            trace.per_round_values.push(nodes.iter().map(|s| s.basis.value().clone()).collect());
            trace.per_round_halted.push(nodes.iter().map(|s| s.halted).collect());
        }
    };

    record(&mut trace, &nodes);
    if all_at_target(&nodes) {
        trace.completion_round = Some(0);
    }

    let mut any_halted = false;
    let mut stable_rounds = 0usize;

    for round in 1..=opts.max_rounds {
        let edge_time = round - 1;
        // snapshot of the previous round's bases; halted nodes send null
        let messages: Vec<Option<Vec<P::Constraint>>> = nodes
            .iter()
            .map(|s| if s.halted { None } else { Some(s.basis.constraints().to_vec()) })
            .collect();
        for (i, s) in nodes.iter().enumerate() {
            if !s.halted {
                trace.message_count += graph.out_neighbors(i + 1, edge_time).len() as u64;
            }
        }

        let mut any_value_change = false;
        for i in 0..n {
            if nodes[i].halted {
                continue;
            }
            let received: Vec<&Vec<P::Constraint>> = match opts.variant {
                Variant::Cycling => {
                    let mut incoming = graph.in_neighbors(i + 1, edge_time);
                    incoming.sort_unstable();
                    let groups = incoming.len().div_ceil(opts.memory_bound);
                    if groups == 0 {
                        Vec::new()
                    } else {
                        let g = edge_time % groups;
                        incoming
                            .iter()
                            .skip(g * opts.memory_bound)
                            .take(opts.memory_bound)
                            .filter_map(|&j| messages[j - 1].as_ref())
                            .collect()
                    }
                }
                _ => graph
                    .in_neighbors(i + 1, edge_time)
                    .into_iter()
                    .filter_map(|j| messages[j - 1].as_ref())
                    .collect(),
            };

            let build_pool = |node: &NodeRuntime<P>| {
                let mut pool: Vec<P::Constraint> = Vec::new();
                if opts.re_examine {
                    pool.push(assignment[i].clone());
                }
                pool.extend_from_slice(node.basis.constraints());
                for basis in &received {
                    pool.extend_from_slice(basis);
                }
                pool
            };

            let previous_value = nodes[i].basis.value().clone();
            match opts.variant {
                Variant::MultiRound if opts.compute_latency > 1 => {
                    let node = &mut nodes[i];
                    if node.busy.is_none() {
                        let pool = build_pool(node);
                        node.memory_high_water = node.memory_high_water.max(pool.len().max(1 + delta));
                        node.busy = Some((round + opts.compute_latency - 1, pool));
                    }
                    if let Some((due, _)) = node.busy {
                        if due == round {
                            let (_, pool) = node.busy.take().expect("busy checked");
                            let run = subex_lp_budgeted(
                                problem,
                                &pool,
                                &node.basis,
                                &mut node.rng,
                                opts.primitive_budget,
                            )?;
                            trace.primitive_calls += run.primitive_calls;
                            node.basis = run.basis;
                        }
                    }
                }
                _ => {
                    let node = &mut nodes[i];
                    let pool = build_pool(node);
                    node.memory_high_water = node.memory_high_water.max(pool.len().max(1 + delta));
                    let run = subex_lp_budgeted(
                        problem,
                        &pool,
                        &node.basis,
                        &mut node.rng,
                        opts.primitive_budget,
                    )?;
                    trace.primitive_calls += run.primitive_calls;
                    node.basis = run.basis;
                }
            }

            let node = &mut nodes[i];
            match problem.cmp_values(node.basis.value(), &previous_value) {
                Ordering::Equal => node.unchanged_rounds += 1,
                Ordering::Greater => {
                    node.unchanged_rounds = 0;
                    any_value_change = true;
                    if any_halted {
                        trace.post_halt_value_changes += 1;
                    }
                }
                Ordering::Less => {
                    node.unchanged_rounds = 0;
                    any_value_change = true;
                    trace.monotonicity_violations += 1;
                    if any_halted {
                        trace.post_halt_value_changes += 1;
                    }
                }
            }
            if let Some(threshold) = halt_threshold {
                if !node.halted && node.unchanged_rounds >= threshold {
                    node.halted = true;
                    node.halt_round = Some(round);
                }
            }
        }

        any_halted = any_halted || nodes.iter().any(|s| s.halted);
        stable_rounds = if any_value_change { 0 } else { stable_rounds + 1 };
        record(&mut trace, &nodes);
        trace.rounds_run = round;

        if trace.completion_round.is_none() && all_at_target(&nodes) {
            trace.completion_round = Some(round);
        }

        let all_halted = nodes.iter().all(|s| s.halted);
        let done = match opts.halting {
            Halting::None => trace.completion_round.is_some(),
            _ => all_halted,
        };
        if done {
            break;
        }
    }

    trace.stable_rounds = stable_rounds;
    trace.final_values = nodes.iter().map(|s| s.basis.value().clone()).collect();
    trace.final_bases = nodes.iter().map(|s| s.basis.constraints().to_vec()).collect();
    trace.halt_rounds = nodes.iter().map(|s| s.halt_round).collect();
    for (i, s) in nodes.iter().enumerate() {
        trace.memory_high_water[i] = s.memory_high_water;
    }
    trace.oracle_match = all_at_target(&nodes);
    Ok(trace)
}

/// Centralized reference value: brute force when tractable, otherwise a
/// seeded centralized solver run.
fn reference_value<P: Problem>(
    problem: &P,
    constraints: &[P::Constraint],
    seed: u64,
) -> Result<P::Value, SolveError> {
    if constraints.len() <= BRUTE_FORCE_GUARD {
        Ok(brute_force_basis(problem, constraints)?.value().clone())
    } else {
        let start = Basis::from_single(problem, &constraints[0]);
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[u64::MAX]));
        let run = subex_lp_budgeted(problem, constraints, &start, &mut rng, DEFAULT_PRIMITIVE_BUDGET)?;
        Ok(run.basis.value().clone())
    }
}

/// Per-node stored-constraint bounds for the chosen variant: the own
/// constraint plus `delta * (1 + processed in-bases)`.
fn memory_bounds(graph: &TimeVaryingDigraph, delta: usize, opts: &RunOptions) -> Vec<usize> {
    let n = graph.node_count();
    (1..=n)
        .map(|i| {
            let indeg = (0..graph.period()).map(|t| graph.in_degree(i, t)).max().unwrap_or(0);
            match opts.variant {
                Variant::Cycling => 1 + delta * (1 + opts.memory_bound.min(indeg.max(1))),
                _ => 1 + delta * (1 + indeg),
            }
        })
        .collect()
}

/// Renders a trace as CSV rows `round,node,halted,v0,v1,...` using the
/// problem's numeric value components. Requires value recording.
pub fn trace_to_csv<P: Problem>(
    problem: &P,
    trace: &ConsensusTrace<P::Constraint, P::Value>,
) -> String {
    let mut out = String::from("round,node,halted");
    let width = trace
        .per_round_values
        .first()
        .and_then(|row| row.first())
        .map(|v| problem.value_components(v).len())
        .unwrap_or(0);
    for k in 0..width {
        out.push_str(&format!(",v{k}"));
    }
    out.push('\n');
    for (round, (values, halted)) in
        trace.per_round_values.iter().zip(&trace.per_round_halted).enumerate()
    {
        for (node, value) in values.iter().enumerate() {
            out.push_str(&format!("{round},{},{}", node + 1, u8::from(halted[node])));
            for c in problem.value_components(value) {
                out.push_str(&format!(",{c}"));
            }
            out.push('\n');
        }
    }
    out
}

/// JSON summary of a run: completion, halts, memory and check counters.
pub fn trace_summary_json<C, V>(trace: &ConsensusTrace<C, V>) -> String {
    let summary = serde_json::json!({
        "node_count": trace.node_count,
        "rounds_run": trace.rounds_run,
        "completion_round": trace.completion_round,
        "oracle_match": trace.oracle_match,
        "halt_rounds": trace.halt_rounds,
        "memory_high_water": trace.memory_high_water,
        "memory_bound": trace.memory_bound,
        "memory_within_bounds": trace.memory_within_bounds(),
        "message_count": trace.message_count,
        "monotonicity_violations": trace.monotonicity_violations,
        "post_halt_value_changes": trace.post_halt_value_changes,
    });
    serde_json::to_string_pretty(&summary).expect("serializable")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{BallProblem, Point2};
    use crate::lp::{gen_model_a, HalfSpace, LpProblem, ValueOrder};
    use crate::network::gen_line;
    use rand::Rng;

    fn line_options(seed: u64, n: usize) -> RunOptions {
        RunOptions { seed, max_rounds: 40 * n, ..RunOptions::default() }
    }

    #[test]
    fn single_node_completes_at_round_zero() {
        use crate::network::TimeVaryingDigraph;
        let problem = BallProblem;
        let g = TimeVaryingDigraph::from_static(1, Vec::new()).unwrap();
        let p = Point2::new(1.0, 2.0);
        let trace =
            run_constraints_consensus(&problem, &g, &[p], &line_options(1, 1)).unwrap();
        assert_eq!(trace.completion_round, Some(0));
        assert!(trace.oracle_match);
        // same check when two nodes hold identical constraints
        let g = gen_line(2);
        let trace =
            run_constraints_consensus(&problem, &g, &[p, p], &line_options(1, 2)).unwrap();
        assert_eq!(trace.completion_round, Some(0));
    }

    #[test]
    fn line_graph_lp_reaches_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for trial in 0..5 {
            let n = 10;
            let lp = gen_model_a(n, 2, &mut rng);
            let problem = lp.as_problem();
            let g = gen_line(n);
            let trace = run_constraints_consensus(
                &problem,
                &g,
                &lp.constraints,
                &line_options(100 + trial, n),
            )
            .unwrap();
            assert!(trace.converged(), "trial {trial} did not converge");
            assert!(trace.oracle_match);
            assert_eq!(trace.monotonicity_violations, 0);
            let bound = (n as u64).pow(problem.delta() as u32 + 1);
            assert!((trace.completion_round.unwrap() as u64) <= bound);
        }
    }

    #[test]
    fn values_monotone_every_round() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 8;
        let lp = gen_model_a(n, 3, &mut rng);
        let problem = lp.as_problem();
        let g = gen_line(n);
        let trace =
            run_constraints_consensus(&problem, &g, &lp.constraints, &line_options(3, n)).unwrap();
        assert_eq!(trace.monotonicity_violations, 0);
        for node in 0..n {
            for w in trace.per_round_values.windows(2) {
                assert_ne!(
                    problem.cmp_values(&w[1][node], &w[0][node]),
                    Ordering::Less,
                    "value decreased at node {node}"
                );
            }
        }
    }

    #[test]
    fn decisive_constraints_at_both_ends_need_full_propagation() {
        // minimize y over two crossing half-planes placed at the line ends;
        // every interior constraint is far below and redundant.
        let n = 8;
        let mut constraints = Vec::new();
        // y >= x  <=>  x - y <= 0 at node 1
        constraints.push(HalfSpace::new(vec![1.0, -1.0], 0.0).unwrap());
        for k in 0..n - 2 {
            // y >= -10 - k, far from binding
            constraints.push(HalfSpace::new(vec![0.0, -1.0], 10.0 + k as f64).unwrap());
        }
        // y >= -x  <=>  -x - y <= 0 at node n
        constraints.push(HalfSpace::new(vec![-1.0, -1.0], 0.0).unwrap());
        let problem = LpProblem::new(vec![0.0, 1.0], ValueOrder::CostThenLex);
        let g = gen_line(n);
        let trace =
            run_constraints_consensus(&problem, &g, &constraints, &line_options(5, n)).unwrap();
        assert!(trace.oracle_match);
        assert!(
            trace.completion_round.unwrap() >= n - 1,
            "information needs at least n-1 rounds to cross the line"
        );
    }

    #[test]
    fn deterministic_per_seed() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 7;
        let lp = gen_model_a(n, 2, &mut rng);
        let problem = lp.as_problem();
        let g = gen_line(n);
        let a = run_constraints_consensus(&problem, &g, &lp.constraints, &line_options(77, n))
            .unwrap();
        let b = run_constraints_consensus(&problem, &g, &lp.constraints, &line_options(77, n))
            .unwrap();
        assert_eq!(a.completion_round, b.completion_round);
        assert_eq!(a.message_count, b.message_count);
        assert_eq!(a.primitive_calls, b.primitive_calls);
        for (x, y) in a.final_values.iter().zip(&b.final_values) {
            assert_eq!(problem.cmp_values(x, y), Ordering::Equal);
        }
    }

    #[test]
    fn multi_round_latency_one_matches_nominal() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 8;
        let lp = gen_model_a(n, 2, &mut rng);
        let problem = lp.as_problem();
        let g = gen_line(n);
        let nominal =
            run_constraints_consensus(&problem, &g, &lp.constraints, &line_options(4, n)).unwrap();
        let mut opts = line_options(4, n);
        opts.variant = Variant::MultiRound;
        opts.compute_latency = 1;
        let multi = run_constraints_consensus(&problem, &g, &lp.constraints, &opts).unwrap();
        assert_eq!(nominal.completion_round, multi.completion_round);
        assert_eq!(nominal.primitive_calls, multi.primitive_calls);
        for (a, b) in nominal.per_round_values.iter().zip(&multi.per_round_values) {
            for (x, y) in a.iter().zip(b) {
                assert_eq!(problem.cmp_values(x, y), Ordering::Equal);
            }
        }
    }

    #[test]
    fn multi_round_latency_three_converges_monotonically() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let n = 8;
        let lp = gen_model_a(n, 2, &mut rng);
        let problem = lp.as_problem();
        let g = gen_line(n);
        let mut opts = line_options(6, n);
        opts.variant = Variant::MultiRound;
        opts.compute_latency = 3;
        let trace = run_constraints_consensus(&problem, &g, &lp.constraints, &opts).unwrap();
        assert!(trace.converged());
        assert!(trace.oracle_match);
        assert_eq!(trace.monotonicity_violations, 0);

        opts.compute_latency = 5;
        let trace = run_constraints_consensus(&problem, &g, &lp.constraints, &opts).unwrap();
        assert!(trace.oracle_match);
        assert_eq!(trace.monotonicity_violations, 0);
    }

    #[test]
    fn cycling_converges_and_respects_memory() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let n = 10;
        let lp = gen_model_a(n, 2, &mut rng);
        let problem = lp.as_problem();
        let g = gen_line(n);
        for d in [1usize, 2] {
            let mut opts = line_options(8, n);
            opts.variant = Variant::Cycling;
            opts.memory_bound = d;
            let trace = run_constraints_consensus(&problem, &g, &lp.constraints, &opts).unwrap();
            assert!(trace.oracle_match, "cycling D={d} missed the oracle");
            assert!(trace.memory_within_bounds());
            let delta = problem.delta();
            for &m in &trace.memory_high_water {
                assert!(m <= 1 + delta * (1 + d));
            }
        }
    }

    #[test]
    fn cycling_with_large_d_matches_nominal() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let n = 6;
        let lp = gen_model_a(n, 2, &mut rng);
        let problem = lp.as_problem();
        let g = gen_line(n);
        let nominal =
            run_constraints_consensus(&problem, &g, &lp.constraints, &line_options(2, n)).unwrap();
        let mut opts = line_options(2, n);
        opts.variant = Variant::Cycling;
        opts.memory_bound = 10; // above any in-degree: one group, nominal behavior
        let cycling = run_constraints_consensus(&problem, &g, &lp.constraints, &opts).unwrap();
        assert_eq!(nominal.completion_round, cycling.completion_round);
        assert_eq!(nominal.primitive_calls, cycling.primitive_calls);
    }

    #[test]
    fn cycling_rejects_time_varying() {
        use crate::network::{Schedule, TimeVaryingDigraph};
        let g = TimeVaryingDigraph::new(
            2,
            Schedule::Periodic(vec![vec![(1, 2), (2, 1)], vec![(2, 1), (1, 2)]]),
        )
        .unwrap();
        let problem = BallProblem;
        let pts = [Point2::new(0.0, 0.0), Point2::new(1.0, 0.0)];
        let opts = RunOptions { variant: Variant::Cycling, ..RunOptions::default() };
        assert!(matches!(
            run_constraints_consensus(&problem, &g, &pts, &opts),
            Err(ConsensusError::TimeVaryingNotSupported)
        ));
    }

    #[test]
    fn halting_rule_thresholds() {
        assert_eq!(Halting::DiameterRule(1).threshold(), Some(3));
        assert_eq!(Halting::DiameterRule(9).threshold(), Some(19));
    }

    #[test]
    fn halting_freezes_network_at_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let n = 9;
        let lp = gen_model_a(n, 2, &mut rng);
        let problem = lp.as_problem();
        let g = gen_line(n);
        let diam = graph_metrics(&g, 0).diameter.unwrap();
        let mut opts = line_options(12, n);
        opts.halting = Halting::DiameterRule(diam);
        opts.max_rounds = 200 * n;
        let trace = run_constraints_consensus(&problem, &g, &lp.constraints, &opts).unwrap();
        assert!(trace.halt_rounds.iter().all(|h| h.is_some()), "all nodes halt");
        assert_eq!(trace.post_halt_value_changes, 0);
        assert!(trace.oracle_match);
        // a node halts only after 2*diam+1 unchanged rounds
        let first_halt = trace.halt_rounds.iter().flatten().min().unwrap();
        assert!(*first_halt > 2 * diam);
    }

    #[test]
    fn wrong_assignment_length_rejected() {
        let problem = BallProblem;
        let g = gen_line(3);
        let pts = [Point2::new(0.0, 0.0)];
        assert!(matches!(
            run_constraints_consensus(&problem, &g, &pts, &RunOptions::default()),
            Err(ConsensusError::NotBijective { expected: 3, found: 1 })
        ));
    }

    #[test]
    fn ball_consensus_on_random_geometric_graph() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let n = 12;
        let pts: Vec<Point2> = (0..n)
            .map(|_| Point2::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)))
            .collect();
        let g = crate::network::gen_random_geometric(n, &mut rng);
        let problem = BallProblem;
        let trace =
            run_constraints_consensus(&problem, &g, &pts, &line_options(31, n)).unwrap();
        assert!(trace.oracle_match);
        assert!(trace.memory_within_bounds());
    }

    #[test]
    fn csv_and_summary_export() {
        let problem = BallProblem;
        let g = gen_line(2);
        let pts = [Point2::new(0.0, 0.0), Point2::new(2.0, 0.0)];
        let trace =
            run_constraints_consensus(&problem, &g, &pts, &line_options(1, 2)).unwrap();
        let csv = trace_to_csv(&problem, &trace);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "round,node,halted,v0,v1,v2");
        assert!(csv.lines().count() >= 3);
        let summary = trace_summary_json(&trace);
        let parsed: serde_json::Value = serde_json::from_str(&summary).unwrap();
        assert_eq!(parsed["node_count"], 2);
        assert_eq!(parsed["memory_within_bounds"], true);
    }
}
