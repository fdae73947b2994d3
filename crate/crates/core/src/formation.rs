//! Formation control for a disk-graph robotic network.
//!
//! Robots agree on a target shape — the point, line or circle equidistant
//! from the boundary of the smallest enclosing ball, stripe or annulus of the
//! initial positions — by running constraints consensus over the
//! state-dependent disk graph, while moving toward the current shape estimate
//! under a connectivity-preserving motion rule: each step stays inside the
//! intersection of radius `r_cmm/2` disks centered at the midpoints to all
//! current neighbors, clipped to the per-round motion budget `r_ctr`. A robot
//! whose basis has been stable for `2n` rounds sets its halt flag and drops
//! the connectivity constraint, keeping only the motion budget.

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{
    smallest_annulus_value, smallest_enclosing_ball, smallest_stripe, stripe_generic_check,
    AnnulusProblem, BallProblem, GeometryError, Point2, StripeProblem,
};
use crate::network::{graph_metrics, TimeVaryingDigraph};
use crate::opt::{brute_force_basis, subex_lp, Basis, Problem, SolveError};
use crate::util::derive_seed;

#[derive(Debug, Error)]
pub enum FormationError {
    #[error("initial disk graph is disconnected")]
    InitialGraphDisconnected,
    #[error("motion target outside the constraint region")]
    PNotInQ,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("invalid configuration: {0}")]
    BadConfig(&'static str),
}

/// Shape family the formation converges to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeKind {
    Point,
    Line,
    Circle,
}

/// A concrete target shape.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Shape {
    Point(Point2),
    /// A line through `point` with unit `direction`.
    Line { point: Point2, direction: Point2 },
    Circle { center: Point2, radius: f64 },
}

impl Shape {
    /// Euclidean distance from `p` to the shape.
    pub fn distance(&self, p: &Point2) -> f64 {
        match self {
            Shape::Point(q) => p.dist(q),
            Shape::Line { point, direction } => {
                let rel = p.sub(point);
                direction.cross(&rel).abs()
            }
            Shape::Circle { center, radius } => (center.dist(p) - radius).abs(),
        }
    }
}

/// The point, centerline or mid-circle equidistant from the boundary of the
/// smallest enclosing ball, stripe or annulus of `points`.
pub fn target_set(points: &[Point2], kind: ShapeKind) -> Result<Shape, FormationError> {
    match kind {
        ShapeKind::Point => {
            let ball = smallest_enclosing_ball(points);
            Ok(Shape::Point(ball.center))
        }
        ShapeKind::Line => {
            let stripe = smallest_stripe(points)?;
            let normal = stripe.normal;
            let mid = stripe.lo + stripe.width / 2.0;
            Ok(Shape::Line {
                point: normal.scale(mid),
                direction: Point2::new(-normal.y, normal.x),
            })
        }
        ShapeKind::Circle => {
            let value = smallest_annulus_value(points);
            let annulus = value.annulus()?;
            Ok(Shape::Circle {
                center: annulus.center,
                radius: (annulus.r + annulus.big_r) / 2.0,
            })
        }
    }
}

/// Euclidean projection onto a shape. A point at a circle's center projects
/// toward the positive x axis.
pub fn closest_point_on_shape(p: &Point2, shape: &Shape) -> Point2 {
    match shape {
        Shape::Point(q) => *q,
        Shape::Line { point, direction } => {
            let along = p.sub(point).dot(direction);
            point.add(&direction.scale(along))
        }
        Shape::Circle { center, radius } => {
            let rel = p.sub(center);
            let dist = rel.norm();
            if dist < 1e-12 {
                center.add(&Point2::new(*radius, 0.0))
            } else {
                center.add(&rel.scale(radius / dist))
            }
        }
    }
}

/// Disk graph over positions: bidirected edges between robots within
/// `r_cmm` of each other (boundary inclusive).
pub fn disk_graph(positions: &[Point2], r_cmm: f64) -> TimeVaryingDigraph {
    let n = positions.len();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if positions[i].dist(&positions[j]) <= r_cmm {
                edges.push((i + 1, j + 1));
                edges.push((j + 1, i + 1));
            }
        }
    }
    TimeVaryingDigraph::from_static(n, edges).expect("disk edges are valid")
}

/// Closed disk used by the motion constraint region.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Disk {
    pub center: Point2,
    pub radius: f64,
}

impl Disk {
    pub fn contains(&self, p: &Point2, tol: f64) -> bool {
        self.center.dist(p) <= self.radius + tol
    }
}

/// Connectivity-preserving motion region: one disk of radius `r_cmm / 2` per
/// neighbor, centered at the midpoint between the robot and that neighbor.
pub fn motion_constraint_set(own: &Point2, neighbors: &[Point2], r_cmm: f64) -> Vec<Disk> {
    neighbors
        .iter()
        .map(|q| Disk {
            center: Point2::new((own.x + q.x) / 2.0, (own.y + q.y) / 2.0),
            radius: r_cmm / 2.0,
        })
        .collect()
}

/// From-to-inside: the point of the segment `[p, q]` closest to `q` that
/// still lies in the intersection of the disks. `p` must be inside. Exit
/// parameters come from the quadratic ray-disk intersection per disk.
pub fn fti(p: &Point2, q: &Point2, disks: &[Disk]) -> Result<Point2, FormationError> {
    for disk in disks {
        if !disk.contains(p, 1e-9) {
            return Err(FormationError::PNotInQ);
        }
    }
    let dir = q.sub(p);
    let len2 = dir.dot(&dir);
    if len2 < 1e-300 {
        return Ok(*p);
    }
    if disks.iter().all(|d| d.contains(q, 0.0)) {
        return Ok(*q);
    }
    let mut t_exit = 1.0f64;
    for disk in disks {
        let rel = p.sub(&disk.center);
        let b = 2.0 * rel.dot(&dir);
        let c = rel.dot(&rel) - disk.radius * disk.radius;
        // largest t with |p + t dir - center| <= radius; p inside means c <= 0
        let disc = b * b - 4.0 * len2 * c;
        if disc < 0.0 {
            t_exit = 0.0;
            continue;
        }
        let t = (-b + disc.sqrt()) / (2.0 * len2);
        t_exit = t_exit.min(t.max(0.0));
    }
    Ok(p.add(&dir.scale(t_exit.clamp(0.0, 1.0))))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FormationConfig {
    pub shape: ShapeKind,
    pub positions: Vec<Point2>,
    pub r_cmm: f64,
    pub r_ctr: f64,
    pub max_rounds: usize,
    pub seed: u64,
}

/// Per-round record of one robot.
#[derive(Clone, Debug)]
pub struct RobotSnapshot {
    pub position: Point2,
    pub halted: bool,
    /// Numeric components of the robot's basis value.
    pub value: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct FormationTrace {
    pub node_count: usize,
    pub rounds_run: usize,
    /// `[round][robot]`, round 0 included.
    pub per_round: Vec<Vec<RobotSnapshot>>,
    pub final_positions: Vec<Point2>,
    pub halt_rounds: Vec<Option<usize>>,
    /// Largest single-round displacement observed.
    pub max_step: f64,
    /// Edges between two unhalted robots that disappeared the next round.
    pub broken_edges_unhalted: usize,
    /// Edges lost in rounds where at least one endpoint had halted (recorded,
    /// not an error: halted robots drop the connectivity constraint).
    pub broken_edges_after_halt: usize,
    /// Round at which all robots' basis values first agreed with the
    /// centralized value over the initial positions.
    pub value_consensus_round: Option<usize>,
    /// First halt among all robots.
    pub first_halt_round: Option<usize>,
    /// The consensus shape every robot ended up steering to, if the final
    /// bases agree on one.
    pub consensus_shape: Option<Shape>,
    /// Distance of each robot to the consensus shape at the end of the run.
    pub final_shape_distances: Vec<f64>,
}

struct Robot<P: Problem<Constraint = Point2>> {
    position: Point2,
    basis: Basis<Point2, P::Value>,
    halted: bool,
    halt_round: Option<usize>,
    unchanged_rounds: usize,
    rng: ChaCha8Rng,
}

/// Runs move-to-consensus-shape and returns the trace.
pub fn run_move_to_consensus_shape(cfg: &FormationConfig) -> Result<FormationTrace, FormationError> {
    match cfg.shape {
        ShapeKind::Point => run_with_problem(cfg, BallProblem),
        ShapeKind::Line => {
            if !stripe_generic_check(&cfg.positions)? {
                return Err(FormationError::Geometry(GeometryError::NotStripeGeneric));
            }
            run_with_problem(cfg, StripeProblem)
        }
        ShapeKind::Circle => run_with_problem(cfg, AnnulusProblem),
    }
}

fn run_with_problem<P>(cfg: &FormationConfig, problem: P) -> Result<FormationTrace, FormationError>
where
    P: Problem<Constraint = Point2>,
{
    let n = cfg.positions.len();
    if n < 2 {
        return Err(FormationError::BadConfig("need at least two robots"));
    }
    if !(cfg.r_cmm > 0.0 && cfg.r_ctr > 0.0) {
        return Err(FormationError::BadConfig("r_cmm and r_ctr must be positive"));
    }
    if !graph_metrics(&disk_graph(&cfg.positions, cfg.r_cmm), 0).strongly_connected {
        return Err(FormationError::InitialGraphDisconnected);
    }

    let initial_positions = cfg.positions.clone();
    let centralized = brute_force_basis(&problem, &initial_positions)?;

    let mut robots: Vec<Robot<P>> = initial_positions
        .iter()
        .enumerate()
        .map(|(i, p)| Robot {
            position: *p,
            basis: Basis::from_single(&problem, p),
            halted: false,
            halt_round: None,
            unchanged_rounds: 0,
            rng: ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[i as u64 + 1])),
        })
        .collect();

    let mut trace = FormationTrace {
        node_count: n,
        rounds_run: 0,
        per_round: Vec::new(),
        final_positions: Vec::new(),
        halt_rounds: vec![None; n],
        max_step: 0.0,
        broken_edges_unhalted: 0,
        broken_edges_after_halt: 0,
        value_consensus_round: None,
        first_halt_round: None,
        consensus_shape: None,
        final_shape_distances: Vec::new(),
    };

    let snapshot_row = |robots: &[Robot<P>]| -> Vec<RobotSnapshot> {
        robots
            .iter()
            .map(|r| RobotSnapshot {
                position: r.position,
                halted: r.halted,
                value: problem.value_components(r.basis.value()),
            })
            .collect()
    };
    trace.per_round.push(snapshot_row(&robots));

    let check_value_consensus = |robots: &[Robot<P>]| {
        robots.iter().all(|r| {
            problem.cmp_values(r.basis.value(), centralized.value()) == Ordering::Equal
        })
    };
    if check_value_consensus(&robots) {
        trace.value_consensus_round = Some(0);
    }

    for round in 1..=cfg.max_rounds {
        let positions: Vec<Point2> = robots.iter().map(|r| r.position).collect();
        let graph = disk_graph(&positions, cfg.r_cmm);
        let bases: Vec<Vec<Point2>> =
            robots.iter().map(|r| r.basis.constraints().to_vec()).collect();

        let mut max_step = 0.0f64;
        for i in 0..n {
            let neighbors = graph.in_neighbors(i + 1, 0);

            // state transition: constraints consensus over own initial
            // position, own basis and neighbor bases
            let mut pool: Vec<Point2> = vec![initial_positions[i]];
            pool.extend_from_slice(&bases[i]);
            for &j in &neighbors {
                pool.extend_from_slice(&bases[j - 1]);
            }
            let robot = &mut robots[i];
            let run = subex_lp(&problem, &pool, &robot.basis, &mut robot.rng)?;
            let basis_unchanged = run.basis.same_constraints(&robot.basis);
            robot.basis = run.basis;
            if basis_unchanged {
                robot.unchanged_rounds += 1;
            } else {
                robot.unchanged_rounds = 0;
            }
            if !robot.halted && robot.unchanged_rounds >= 2 * n {
                robot.halted = true;
                robot.halt_round = Some(round);
            }

            // control: steer toward the closest point of the current shape
            // estimate inside the allowed motion region
            let shape = target_set(&robot.basis.distinct(), cfg.shape)?;
            let target = closest_point_on_shape(&robot.position, &shape);
            let mut disks = vec![Disk { center: robot.position, radius: cfg.r_ctr }];
            if !robot.halted {
                let neighbor_positions: Vec<Point2> =
                    neighbors.iter().map(|&j| positions[j - 1]).collect();
                let mut pair_disks =
                    motion_constraint_set(&robot.position, &neighbor_positions, cfg.r_cmm);
                for disk in &mut pair_disks {
                    // one-ulp safety margin: both endpoints staying in the
                    // exact half-radius disks can still round the new edge
                    // length to just above r_cmm
                    disk.radius -= cfg.r_cmm * 1e-12;
                }
                disks.extend(pair_disks);
            }
            let next = fti(&robot.position, &target, &disks)?;
            max_step = max_step.max(robot.position.dist(&next));
            robot.position = next;
        }
        trace.max_step = trace.max_step.max(max_step);

        // edge bookkeeping against the new positions
        let new_positions: Vec<Point2> = robots.iter().map(|r| r.position).collect();
        for &(a, b) in graph.edges_at(0) {
            if a < b && new_positions[a - 1].dist(&new_positions[b - 1]) > cfg.r_cmm {
                if robots[a - 1].halted || robots[b - 1].halted {
                    trace.broken_edges_after_halt += 1;
                } else {
                    trace.broken_edges_unhalted += 1;
                }
            }
        }

        trace.per_round.push(snapshot_row(&robots));
        trace.rounds_run = round;
        if trace.value_consensus_round.is_none() && check_value_consensus(&robots) {
            trace.value_consensus_round = Some(round);
        }
        if trace.first_halt_round.is_none() {
            trace.first_halt_round = robots.iter().filter_map(|r| r.halt_round).min();
        }

        let all_halted = robots.iter().all(|r| r.halted);
        if all_halted && max_step < 1e-12 {
            break;
        }
    }

    trace.halt_rounds = robots.iter().map(|r| r.halt_round).collect();
    trace.final_positions = robots.iter().map(|r| r.position).collect();

    // consensus shape from the final bases, when they agree on the value
    let agree = robots.windows(2).all(|w| {
        problem.cmp_values(w[0].basis.value(), w[1].basis.value()) == Ordering::Equal
    });
    if agree {
        let shape = target_set(&robots[0].basis.distinct(), cfg.shape)?;
        trace.final_shape_distances =
            robots.iter().map(|r| shape.distance(&r.position)).collect();
        trace.consensus_shape = Some(shape);
    }
    Ok(trace)
}

/// CSV rows `round,robot,x,y,halted,v0,v1,...`.
pub fn formation_trace_to_csv(trace: &FormationTrace) -> String {
    let width = trace
        .per_round
        .first()
        .and_then(|row| row.first())
        .map(|snap| snap.value.len())
        .unwrap_or(0);
    let mut out = String::from("round,robot,x,y,halted");
    for k in 0..width {
        out.push_str(&format!(",v{k}"));
    }
    out.push('\n');
    for (round, row) in trace.per_round.iter().enumerate() {
        for (i, snap) in row.iter().enumerate() {
            out.push_str(&format!(
                "{round},{},{},{},{}",
                i + 1,
                snap.position.x,
                snap.position.y,
                u8::from(snap.halted)
            ));
            for v in &snap.value {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
    }
    out
}

/// JSON summary of a formation run.
pub fn formation_summary_json(trace: &FormationTrace) -> String {
    let shape = trace.consensus_shape.as_ref().map(|s| match s {
        Shape::Point(p) => serde_json::json!({"kind": "point", "x": p.x, "y": p.y}),
        Shape::Line { point, direction } => serde_json::json!({
            "kind": "line",
            "point": [point.x, point.y],
            "direction": [direction.x, direction.y],
        }),
        Shape::Circle { center, radius } => serde_json::json!({
            "kind": "circle",
            "center": [center.x, center.y],
            "radius": radius,
        }),
    });
    let summary = serde_json::json!({
        "node_count": trace.node_count,
        "rounds_run": trace.rounds_run,
        "value_consensus_round": trace.value_consensus_round,
        "first_halt_round": trace.first_halt_round,
        "halt_rounds": trace.halt_rounds,
        "max_step": trace.max_step,
        "broken_edges_unhalted": trace.broken_edges_unhalted,
        "broken_edges_after_halt": trace.broken_edges_after_halt,
        "consensus_shape": shape,
        "final_shape_distances": trace.final_shape_distances,
    });
    serde_json::to_string_pretty(&summary).expect("serializable")
}

/// Samples `n` positions uniformly from a disk of radius `spread`, retrying
/// until the disk graph at `r_cmm` is connected (and, for lines, the set is
/// stripe-generic).
pub fn random_connected_positions<R: Rng + ?Sized>(
    n: usize,
    r_cmm: f64,
    spread: f64,
    require_stripe_generic: bool,
    rng: &mut R,
) -> Vec<Point2> {
    loop {
        let positions: Vec<Point2> = (0..n)
            .map(|_| {
                let r = spread * rng.gen::<f64>().sqrt();
                let theta = rng.gen::<f64>() * 2.0 * std::f64::consts::PI;
                Point2::new(r * theta.cos(), r * theta.sin())
            })
            .collect();
        if !graph_metrics(&disk_graph(&positions, r_cmm), 0).strongly_connected {
            continue;
        }
        if require_stripe_generic && !stripe_generic_check(&positions).unwrap_or(false) {
            continue;
        }
        return positions;
    }
}
