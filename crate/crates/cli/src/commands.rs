//! Subcommand implementations.

use std::cmp::Ordering;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ccons_core::checks::{check_axioms, find_nonpersistent_lp};
use ccons_core::consensus::{
    run_constraints_consensus, trace_summary_json, trace_to_csv, Halting, RunOptions, Variant,
};
use ccons_core::formation::{
    formation_summary_json, formation_trace_to_csv, random_connected_positions,
    run_move_to_consensus_shape, FormationConfig, ShapeKind,
};
use ccons_core::geometry::{
    smallest_annulus_value, smallest_enclosing_ball, smallest_stripe, stripe_generic_check,
    AnnulusProblem, BallProblem, Point2, StripeProblem,
};
use ccons_core::localization::{
    localization_summary_json, localization_trace_to_csv, run_eight_half_planes,
};
use ccons_core::lp::{gen_model_a, gen_model_b, HalfSpace, LinearProgram, LpProblem, ValueOrder};
use ccons_core::montecarlo::{
    export_plot_data, run_sweep, ExperimentConfig, LpModel, MonteCarloError,
};
use ccons_core::network::{gen_erdos_renyi, gen_line, gen_random_geometric, graph_metrics};
use ccons_core::opt::{brute_force_basis, subex_lp, Basis, Problem};
use ccons_core::util::derive_seed;

use crate::config::{
    ConsensusCmdConfig, FormationCmdConfig, GraphSpec, HaltingSpec, LocalizeCmdConfig,
    ProblemSpec, VariantSpec,
};
use crate::AppError;

fn read_config<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, AppError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| AppError::Usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| AppError::Usage(format!("cannot parse {}: {e}", path.display())))
}

fn write_output(dir: &Path, name: &str, contents: &str) -> Result<(), AppError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| AppError::Internal(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    std::fs::write(&path, contents)
        .map_err(|e| AppError::Internal(format!("cannot write {}: {e}", path.display())))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn materialize_lp(
    lp: &Option<LinearProgram>,
    generate: &Option<crate::config::GenerateSpec>,
    seed: u64,
) -> Result<LinearProgram, AppError> {
    match (lp, generate) {
        (Some(lp), None) => Ok(lp.clone()),
        (None, Some(spec)) => {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[0x1b]));
            Ok(match spec.model {
                LpModel::A => gen_model_a(spec.n, spec.d, &mut rng),
                LpModel::B => gen_model_b(spec.n, spec.d, &mut rng),
            })
        }
        _ => Err(AppError::Usage(
            "lp problems need exactly one of `lp` (inline) or `generate`".into(),
        )),
    }
}

fn solve_one<P: Problem>(
    problem: &P,
    constraints: &[P::Constraint],
    seed: u64,
    oracle: bool,
    render: impl Fn(&P::Constraint) -> serde_json::Value,
) -> Result<serde_json::Value, AppError> {
    let start = Basis::from_single(problem, &constraints[0]);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let run = subex_lp(problem, constraints, &start, &mut rng)
        .map_err(|e| AppError::Internal(e.to_string()))?;
    let mut oracle_match = serde_json::Value::Null;
    if oracle {
        let reference = brute_force_basis(problem, constraints)
            .map_err(|e| AppError::Usage(format!("oracle cross-check unavailable: {e}")))?;
        let matched =
            problem.cmp_values(run.basis.value(), reference.value()) == Ordering::Equal;
        if !matched {
            return Err(AppError::Invariant(format!(
                "solver value {:?} disagrees with brute-force value {:?}",
                run.basis.value(),
                reference.value()
            )));
        }
        oracle_match = serde_json::Value::Bool(true);
    }
    Ok(serde_json::json!({
        "value": problem.value_components(run.basis.value()),
        "value_debug": format!("{:?}", run.basis.value()),
        "basis": run.basis.constraints().iter().map(render).collect::<Vec<_>>(),
        "primitive_call_count": run.primitive_calls,
        "oracle_match": oracle_match,
    }))
}

fn point_json(p: &Point2) -> serde_json::Value {
    serde_json::json!([p.x, p.y])
}

fn row_json(h: &HalfSpace) -> serde_json::Value {
    serde_json::json!({"a": h.a, "b": h.b})
}

pub fn cmd_solve(
    path: &Path,
    seed: Option<u64>,
    out: &Path,
    oracle: bool,
) -> Result<(), AppError> {
    let seed = seed.ok_or_else(|| AppError::Usage("--seed is required for solve".into()))?;
    let spec: ProblemSpec = read_config(path)?;
    let solution = match &spec {
        ProblemSpec::Ball { points } => {
            require_nonempty(points)?;
            solve_one(&BallProblem, points, seed, oracle, point_json)?
        }
        ProblemSpec::Stripe { points } => {
            require_nonempty(points)?;
            if !stripe_generic_check(points)
                .map_err(|e| AppError::Usage(e.to_string()))?
            {
                return Err(AppError::Usage(
                    "stripe problems need points in stripe-generic position".into(),
                ));
            }
            solve_one(&StripeProblem, points, seed, oracle, point_json)?
        }
        ProblemSpec::Annulus { points } => {
            require_nonempty(points)?;
            solve_one(&AnnulusProblem, points, seed, oracle, point_json)?
        }
        ProblemSpec::Lp { lp, generate } => {
            let lp = materialize_lp(lp, generate, seed)?;
            let problem = lp.as_problem();
            solve_one(&problem, &lp.constraints, seed, oracle, row_json)?
        }
    };
    println!(
        "value = {}",
        solution["value_debug"].as_str().unwrap_or_default()
    );
    write_output(out, "solution.json", &serde_json::to_string_pretty(&solution).unwrap())
}

fn require_nonempty(points: &[Point2]) -> Result<(), AppError> {
    if points.is_empty() {
        Err(AppError::Usage("problem needs at least one point".into()))
    } else {
        Ok(())
    }
}

fn build_graph(
    spec: GraphSpec,
    n: usize,
    seed: u64,
) -> Result<ccons_core::network::TimeVaryingDigraph, AppError> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[0x90]));
    Ok(match spec {
        GraphSpec::Line => gen_line(n),
        GraphSpec::ErdosRenyi { epsilon } => gen_erdos_renyi(n, epsilon, &mut rng)
            .map_err(|e| AppError::Internal(e.to_string()))?,
        GraphSpec::Rgg => gen_random_geometric(n, &mut rng),
    })
}

pub fn cmd_consensus(path: &Path, seed: Option<u64>, out: &Path) -> Result<(), AppError> {
    let cfg: ConsensusCmdConfig = read_config(path)?;
    let seed = seed
        .or(cfg.seed)
        .ok_or_else(|| AppError::Usage("a seed is required (config `seed` or --seed)".into()))?;

    // resolve the constraint set and dispatch on the problem kind
    match &cfg.problem {
        ProblemSpec::Ball { points } => run_consensus_kind(&cfg, &BallProblem, points, seed, out),
        ProblemSpec::Stripe { points } => {
            if !stripe_generic_check(points).map_err(|e| AppError::Usage(e.to_string()))? {
                return Err(AppError::Usage("points are not stripe-generic".into()));
            }
            run_consensus_kind(&cfg, &StripeProblem, points, seed, out)
        }
        ProblemSpec::Annulus { points } => {
            run_consensus_kind(&cfg, &AnnulusProblem, points, seed, out)
        }
        ProblemSpec::Lp { lp, generate } => {
            let lp = materialize_lp(lp, generate, seed)?;
            let problem = lp.as_problem();
            run_consensus_kind(&cfg, &problem, &lp.constraints, seed, out)
        }
    }
}

fn run_consensus_kind<P: Problem>(
    cfg: &ConsensusCmdConfig,
    problem: &P,
    constraints: &[P::Constraint],
    seed: u64,
    out: &Path,
) -> Result<(), AppError> {
    let n = constraints.len();
    if n < 2 {
        return Err(AppError::Usage("consensus needs at least two constraints".into()));
    }
    let graph = build_graph(cfg.graph, n, seed)?;
    let halting = match cfg.halting {
        HaltingSpec::None => Halting::None,
        HaltingSpec::Fixed { rounds } => Halting::Fixed(rounds),
        HaltingSpec::DiameterRule => {
            let diam = graph_metrics(&graph, 0)
                .diameter
                .ok_or_else(|| AppError::Usage("graph is not strongly connected".into()))?;
            Halting::DiameterRule(diam)
        }
    };
    let (variant, latency, memory) = match cfg.variant {
        VariantSpec::Nominal => (Variant::Nominal, 1, 1),
        VariantSpec::MultiRound { latency } => (Variant::MultiRound, latency, 1),
        VariantSpec::Cycling { memory } => (Variant::Cycling, 1, memory),
    };
    let opts = RunOptions {
        variant,
        compute_latency: latency,
        memory_bound: memory,
        halting,
        max_rounds: cfg.max_rounds.unwrap_or(40 * n),
        seed,
        ..RunOptions::default()
    };
    let trace = run_constraints_consensus(problem, &graph, constraints, &opts)
        .map_err(|e| AppError::Internal(e.to_string()))?;

    write_output(out, "trace.csv", &trace_to_csv(problem, &trace))?;
    write_output(out, "summary.json", &trace_summary_json(&trace))?;

    if trace.monotonicity_violations > 0 {
        return Err(AppError::Invariant("node values decreased during the run".into()));
    }
    if trace.post_halt_value_changes > 0 {
        return Err(AppError::Invariant("a value changed after the first halt".into()));
    }
    if !trace.memory_within_bounds() {
        return Err(AppError::Invariant("memory high-water exceeded its bound".into()));
    }
    if !trace.oracle_match {
        return Err(AppError::Invariant(
            "final node values disagree with the centralized reference".into(),
        ));
    }
    println!(
        "completed in {} rounds (completion round {:?})",
        trace.rounds_run, trace.completion_round
    );
    Ok(())
}

pub fn cmd_montecarlo(
    path: &Path,
    seed: Option<u64>,
    out: &Path,
    jobs: usize,
) -> Result<(), AppError> {
    let mut cfg: ExperimentConfig = read_config(path)?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    let result = run_sweep(&cfg, jobs).map_err(|e| match e {
        MonteCarloError::BudgetExceeded { .. } | MonteCarloError::BadConfig(_) => {
            AppError::Usage(e.to_string())
        }
        other => AppError::Internal(other.to_string()),
    })?;
    let (data, fit) = export_plot_data(&result, out)
        .map_err(|e| AppError::Internal(e.to_string()))?;
    println!("wrote {}", data.display());
    println!("wrote {}", fit.display());

    let t_tests = result
        .ratio_t_tests(1.5)
        .map_err(|e| AppError::Internal(e.to_string()))?;
    let summary = serde_json::json!({
        "config": result.config,
        "fit": {"slope": result.fit_slope, "intercept": result.fit_intercept, "r2": result.fit_r2},
        "points": result.points.iter().map(|p| serde_json::json!({
            "n": p.n,
            "mean_completion": p.mean_completion,
            "std": p.std_completion,
            "diameter": p.mean_diameter,
            "ratio": p.mean_ratio,
            "ci_low": p.ci_low,
            "ci_high": p.ci_high,
        })).collect::<Vec<_>>(),
        "ratio_t_tests_vs_1_5": t_tests.iter().map(|(n, t)| serde_json::json!({
            "n": n, "t": t.t, "df": t.df, "p_one_sided": t.p_one_sided,
        })).collect::<Vec<_>>(),
    });
    write_output(out, "summary.json", &serde_json::to_string_pretty(&summary).unwrap())?;

    let unconverged: usize = result
        .points
        .iter()
        .flat_map(|p| &p.runs)
        .filter(|r| !r.converged)
        .count();
    if unconverged > 0 {
        return Err(AppError::Invariant(format!(
            "{unconverged} runs did not reach the centralized value within the round cap"
        )));
    }
    Ok(())
}

pub fn cmd_localize(path: &Path, seed: Option<u64>, out: &Path) -> Result<(), AppError> {
    let mut cfg: LocalizeCmdConfig = read_config(path)?;
    if let Some(seed) = seed {
        cfg.scenario.seed = seed;
    }
    if cfg.n_sensors < 2 {
        return Err(AppError::Usage("need at least two sensors".into()));
    }
    let graph = build_graph(cfg.graph, cfg.n_sensors, cfg.scenario.seed)?;
    let trace = run_eight_half_planes(&graph, &cfg.scenario)
        .map_err(|e| AppError::Internal(e.to_string()))?;
    write_output(out, "trace.csv", &localization_trace_to_csv(&trace))?;
    write_output(out, "summary.json", &localization_summary_json(&trace))?;
    if trace.containment_violations > 0 {
        return Err(AppError::Invariant(format!(
            "{} containment violations: the target escaped a node's estimate",
            trace.containment_violations
        )));
    }
    if !trace.memory_within_bounds() {
        return Err(AppError::Invariant("memory high-water exceeded its bound".into()));
    }
    println!(
        "ran {} rounds, convergence round {:?}",
        trace.rounds, trace.convergence_round
    );
    Ok(())
}

pub fn cmd_formation(path: &Path, seed: Option<u64>, out: &Path) -> Result<(), AppError> {
    let mut cfg: FormationCmdConfig = read_config(path)?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    let positions = match (&cfg.positions, &cfg.random) {
        (Some(p), None) => p.clone(),
        (None, Some(cluster)) => {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[0x05]));
            random_connected_positions(
                cluster.n,
                cfg.r_cmm,
                cluster.spread,
                cfg.shape == ShapeKind::Line,
                &mut rng,
            )
        }
        _ => {
            return Err(AppError::Usage(
                "formation needs exactly one of `positions` or `random`".into(),
            ))
        }
    };
    let run_cfg = FormationConfig {
        shape: cfg.shape,
        positions,
        r_cmm: cfg.r_cmm,
        r_ctr: cfg.r_ctr,
        max_rounds: cfg.max_rounds,
        seed: cfg.seed,
    };
    let trace = run_move_to_consensus_shape(&run_cfg)
        .map_err(|e| AppError::Internal(e.to_string()))?;
    write_output(out, "trace.csv", &formation_trace_to_csv(&trace))?;
    write_output(out, "summary.json", &formation_summary_json(&trace))?;
    if trace.max_step > run_cfg.r_ctr * (1.0 + 1e-9) + 1e-12 {
        return Err(AppError::Invariant("a robot exceeded its per-round motion budget".into()));
    }
    if trace.broken_edges_unhalted > 0 {
        return Err(AppError::Invariant(format!(
            "{} edges between unhalted robots broke",
            trace.broken_edges_unhalted
        )));
    }
    println!(
        "ran {} rounds; value consensus at {:?}; first halt at {:?}",
        trace.rounds_run, trace.value_consensus_round, trace.first_halt_round
    );
    Ok(())
}

struct Suite {
    name: &'static str,
    passed: bool,
    detail: String,
}

pub fn cmd_check(seed: u64, broken_lex_order: bool) -> Result<(), AppError> {
    let mut suites: Vec<Suite> = Vec::new();
    let order = if broken_lex_order { ValueOrder::CostOnly } else { ValueOrder::CostThenLex };

    // the planar program whose cost-only order breaks locality:
    // minimize x2 over {x2 >= 0}, {x1 >= 0} and {x2 >= x1 + 1}
    let constructed = vec![
        HalfSpace::new(vec![0.0, -1.0], 0.0).unwrap(),
        HalfSpace::new(vec![-1.0, 0.0], 0.0).unwrap(),
        HalfSpace::new(vec![1.0, -1.0], -1.0).unwrap(),
    ];

    // axiom suites for the LP transcription under the active order
    for (name, d, tag) in [("axioms-lp-model-a", 2usize, 1u64), ("axioms-lp-model-b", 3, 2)] {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[tag]));
        let lp = if tag == 1 {
            gen_model_a(8, d, &mut rng)
        } else {
            gen_model_b(8, d, &mut rng)
        };
        let problem = LpProblem::new(lp.c.clone(), order);
        let report = check_axioms(&problem, &lp.constraints, 500, &mut rng)
            .map_err(|e| AppError::Internal(e.to_string()))?;
        suites.push(Suite {
            name,
            passed: report.passed(),
            detail: format!("{} failures over {} trials", report.failure_count(), report.trials),
        });
    }

    // locality on the constructed instance under the active order
    {
        let problem = LpProblem::new(vec![0.0, 1.0], order);
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[3]));
        let report = check_axioms(&problem, &constructed, 500, &mut rng)
            .map_err(|e| AppError::Internal(e.to_string()))?;
        suites.push(Suite {
            name: "locality",
            passed: report.passed(),
            detail: format!("{} locality failures", report.locality_failures.len()),
        });
    }

    // the cost-only order must fail locality on the constructed instance
    {
        let problem = LpProblem::new(vec![0.0, 1.0], ValueOrder::CostOnly);
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[4]));
        let report = check_axioms(&problem, &constructed, 500, &mut rng)
            .map_err(|e| AppError::Internal(e.to_string()))?;
        suites.push(Suite {
            name: "broken-order-detection",
            passed: !report.locality_failures.is_empty(),
            detail: format!(
                "cost-only order produced {} locality failures (nonzero expected)",
                report.locality_failures.len()
            ),
        });
    }

    // geometric axiom suites
    {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[5]));
        let points: Vec<Point2> = (0..8)
            .map(|_| {
                Point2::new(
                    rand::Rng::gen_range(&mut rng, -4.0..4.0),
                    rand::Rng::gen_range(&mut rng, -4.0..4.0),
                )
            })
            .collect();
        let report = check_axioms(&BallProblem, &points, 500, &mut rng)
            .map_err(|e| AppError::Internal(e.to_string()))?;
        suites.push(Suite {
            name: "axioms-ball",
            passed: report.passed(),
            detail: format!("{} failures", report.failure_count()),
        });
        let report = check_axioms(&AnnulusProblem, &points, 500, &mut rng)
            .map_err(|e| AppError::Internal(e.to_string()))?;
        suites.push(Suite {
            name: "axioms-annulus",
            passed: report.passed(),
            detail: format!("{} failures", report.failure_count()),
        });
        // stripe needs a stripe-generic sample
        let stripe_points = loop {
            let pts: Vec<Point2> = (0..8)
                .map(|_| {
                    Point2::new(
                        rand::Rng::gen_range(&mut rng, -4.0..4.0),
                        rand::Rng::gen_range(&mut rng, -4.0..4.0),
                    )
                })
                .collect();
            if stripe_generic_check(&pts).unwrap_or(false) {
                break pts;
            }
        };
        let report = check_axioms(&StripeProblem, &stripe_points, 500, &mut rng)
            .map_err(|e| AppError::Internal(e.to_string()))?;
        suites.push(Suite {
            name: "axioms-stripe",
            passed: report.passed(),
            detail: format!("{} failures", report.failure_count()),
        });
    }

    // persistency search
    {
        let found = find_nonpersistent_lp(derive_seed(seed, &[6]), 500);
        suites.push(Suite {
            name: "persistency-search",
            passed: found.is_some(),
            detail: match &found {
                Some((_, witness)) => format!(
                    "constraint {} leaves the basis of subset {:?}",
                    witness.constraint_index, witness.subset_indices
                ),
                None => "no non-persistent instance found".into(),
            },
        });
    }

    // solver-vs-oracle equivalence
    {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[7]));
        let mut mismatches = 0usize;
        let mut count = 0usize;
        for _ in 0..10 {
            let lp = gen_model_a(10, 2, &mut rng);
            let problem = lp.as_problem();
            let start = Basis::from_single(&problem, &lp.constraints[0]);
            let run = subex_lp(&problem, &lp.constraints, &start, &mut rng)
                .map_err(|e| AppError::Internal(e.to_string()))?;
            let reference = brute_force_basis(&problem, &lp.constraints)
                .map_err(|e| AppError::Internal(e.to_string()))?;
            if problem.cmp_values(run.basis.value(), reference.value()) != Ordering::Equal {
                mismatches += 1;
            }
            count += 1;
        }
        for _ in 0..10 {
            let points: Vec<Point2> = (0..10)
                .map(|_| {
                    Point2::new(
                        rand::Rng::gen_range(&mut rng, -4.0..4.0),
                        rand::Rng::gen_range(&mut rng, -4.0..4.0),
                    )
                })
                .collect();
            let oracle = smallest_enclosing_ball(&points);
            let start = Basis::from_single(&BallProblem, &points[0]);
            let run = subex_lp(&BallProblem, &points, &start, &mut rng)
                .map_err(|e| AppError::Internal(e.to_string()))?;
            if (run.basis.value().radius - oracle.radius).abs() > 1e-9 {
                mismatches += 1;
            }
            let annulus = smallest_annulus_value(&points);
            let start = Basis::from_single(&AnnulusProblem, &points[0]);
            let run = subex_lp(&AnnulusProblem, &points, &start, &mut rng)
                .map_err(|e| AppError::Internal(e.to_string()))?;
            if (run.basis.value().squared_width() - annulus.squared_width()).abs() > 1e-9 {
                mismatches += 1;
            }
            if stripe_generic_check(&points).unwrap_or(false) {
                let oracle = smallest_stripe(&points).unwrap();
                let closure = brute_force_basis(&StripeProblem, &points)
                    .map_err(|e| AppError::Internal(e.to_string()))?;
                // skip instances whose optimum needs more than 5 support points
                if StripeProblem.cmp_values(closure.value(), &oracle) == Ordering::Equal {
                    let start = Basis::from_single(&StripeProblem, &points[0]);
                    let run = subex_lp(&StripeProblem, &points, &start, &mut rng)
                        .map_err(|e| AppError::Internal(e.to_string()))?;
                    if (run.basis.value().width - oracle.width).abs() > 1e-9 {
                        mismatches += 1;
                    }
                }
            }
            count += 3;
        }
        suites.push(Suite {
            name: "oracle-equivalence",
            passed: mismatches == 0,
            detail: format!("{mismatches} mismatches over {count} instances"),
        });
    }

    let mut all_passed = true;
    for suite in &suites {
        let status = if suite.passed { "pass" } else { "FAIL" };
        println!("[{status}] {}: {}", suite.name, suite.detail);
        all_passed &= suite.passed;
    }
    if all_passed {
        println!("all {} suites passed", suites.len());
        Ok(())
    } else {
        Err(AppError::Invariant("one or more self-test suites failed".into()))
    }
}
