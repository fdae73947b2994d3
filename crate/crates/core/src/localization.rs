//! Set-membership localization of a moving target by a sensor network.
//!
//! Sensors measure half-planes guaranteed to contain the target. The feasible
//! position set is over-approximated by the half-planes active in a few
//! axis-direction linear programs (four by default, giving eight planes): the
//! projection keeps the region inside the smallest axis-aligned bounding box
//! while storing a constant number of constraints. A centralized recursion
//! (initialize, time-translate by the speed bound, re-project with fresh
//! measurements) serves as the reference; the distributed algorithm runs the
//! same recursion per node while exchanging candidate planes with neighbors
//! and re-introducing a ring buffer of recent own measurements.

use std::collections::VecDeque;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Point2;
use crate::lp::{HalfSpace, LpProblem, LpValue, ValueOrder};
use crate::network::{graph_metrics, TimeVaryingDigraph};
use crate::opt::{subex_lp, Basis, SolveError};
use crate::util::{derive_seed, VALUE_TOL};

#[derive(Debug, Error)]
pub enum LocalizationError {
    #[error("constraint set is infeasible; measurements are inconsistent")]
    Infeasible,
    #[error("half-plane normal must be nonzero")]
    ZeroNormal,
    #[error("communication graph must be connected")]
    Disconnected,
    #[error("invalid configuration: {0}")]
    BadConfig(&'static str),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

/// Closed half-plane `{x : a·x <= b}` with a unit normal.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitHalfPlane {
    pub ax: f64,
    pub ay: f64,
    pub b: f64,
}

impl UnitHalfPlane {
    /// Builds the half-plane, scaling the normal to unit length.
    pub fn new(ax: f64, ay: f64, b: f64) -> Result<Self, LocalizationError> {
        let norm = (ax * ax + ay * ay).sqrt();
        if norm < 1e-300 {
            return Err(LocalizationError::ZeroNormal);
        }
        Ok(UnitHalfPlane { ax: ax / norm, ay: ay / norm, b: b / norm })
    }

    pub fn slack(&self, p: &Point2) -> f64 {
        self.b - (self.ax * p.x + self.ay * p.y)
    }

    pub fn contains(&self, p: &Point2, tol: f64) -> bool {
        self.slack(p) >= -tol
    }

    /// Relaxes the offset by `amount` (time translation under a speed bound).
    pub fn time_update(&self, amount: f64) -> UnitHalfPlane {
        UnitHalfPlane { b: self.b + amount, ..*self }
    }

    fn to_halfspace(self) -> HalfSpace {
        HalfSpace { a: vec![self.ax, self.ay], b: self.b }
    }

    fn from_halfspace(h: &HalfSpace) -> UnitHalfPlane {
        UnitHalfPlane { ax: h.a[0], ay: h.a[1], b: h.b }
    }

    pub fn approx_eq(&self, other: &UnitHalfPlane, tol: f64) -> bool {
        (self.ax - other.ax).abs() <= tol
            && (self.ay - other.ay).abs() <= tol
            && (self.b - other.b).abs() <= tol
    }
}

/// Axis-aligned operating region the target is known to stay in.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxBounds {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl BoxBounds {
    pub fn contains(&self, p: &Point2, tol: f64) -> bool {
        p.x >= self.x_min - tol
            && p.x <= self.x_max + tol
            && p.y >= self.y_min - tol
            && p.y <= self.y_max + tol
    }

    /// The four box edges as unit-normal half-planes.
    pub fn half_planes(&self) -> [UnitHalfPlane; 4] {
        [
            UnitHalfPlane { ax: 1.0, ay: 0.0, b: self.x_max },
            UnitHalfPlane { ax: -1.0, ay: 0.0, b: -self.x_min },
            UnitHalfPlane { ax: 0.0, ay: 1.0, b: self.y_max },
            UnitHalfPlane { ax: 0.0, ay: -1.0, b: -self.y_min },
        ]
    }

    fn clamp_reflect(&self, mut x: f64, lo: f64, hi: f64) -> f64 {
        // reflect across whichever side is crossed until inside
        let span = hi - lo;
        for _ in 0..64 {
            if x < lo {
                x = 2.0 * lo - x;
            } else if x > hi {
                x = 2.0 * hi - x;
            } else {
                return x;
            }
        }
        x.clamp(lo, hi.max(lo + span))
    }
}

/// Polytope in H-representation: the candidate optimal planes of one node
/// (eight entries for the default four directions; repeats allowed).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HPolytope {
    pub planes: Vec<UnitHalfPlane>,
}

impl HPolytope {
    pub fn contains(&self, p: &Point2, tol: f64) -> bool {
        self.planes.iter().all(|h| h.contains(p, tol))
    }

    /// Multiset equality of planes under a coefficient tolerance.
    pub fn same_planes(&self, other: &HPolytope, tol: f64) -> bool {
        if self.planes.len() != other.planes.len() {
            return false;
        }
        let mut used = vec![false; other.planes.len()];
        'outer: for h in &self.planes {
            for (i, g) in other.planes.iter().enumerate() {
                if !used[i] && h.approx_eq(g, tol) {
                    used[i] = true;
                    continue 'outer;
                }
            }
            return false;
        }
        true
    }
}

/// Random walk with bounded per-step displacement, reflected at the box
/// boundary. Returns `steps + 1` positions.
pub fn simulate_target<R: Rng + ?Sized>(
    steps: usize,
    v_max: f64,
    bbox: &BoxBounds,
    rng: &mut R,
) -> Vec<Point2> {
    assert!(v_max >= 0.0);
    let mut p = Point2::new(
        rng.gen_range(bbox.x_min..=bbox.x_max),
        rng.gen_range(bbox.y_min..=bbox.y_max),
    );
    let mut traj = Vec::with_capacity(steps + 1);
    traj.push(p);
    for _ in 0..steps {
        let speed = rng.gen::<f64>() * v_max;
        let theta = rng.gen::<f64>() * 2.0 * PI;
        let x = bbox.clamp_reflect(p.x + speed * theta.cos(), bbox.x_min, bbox.x_max);
        let y = bbox.clamp_reflect(p.y + speed * theta.sin(), bbox.y_min, bbox.y_max);
        p = Point2::new(x, y);
        traj.push(p);
    }
    traj
}

/// One half-plane measurement: a uniformly random unit normal with a
/// nonnegative offset, so the target is always contained.
pub fn sense<R: Rng + ?Sized>(target: &Point2, noise_width: f64, rng: &mut R) -> UnitHalfPlane {
    assert!(noise_width >= 0.0);
    let theta = rng.gen::<f64>() * 2.0 * PI;
    let (ax, ay) = (theta.cos(), theta.sin());
    let b = ax * target.x + ay * target.y + rng.gen::<f64>() * noise_width;
    UnitHalfPlane { ax, ay, b }
}

/// Largest extent of the region cut out by `planes` and the box along the
/// direction `theta`, i.e. the optimum of the corresponding linear program.
pub fn directional_extent(
    planes: &[UnitHalfPlane],
    bbox: &BoxBounds,
    theta: f64,
    rng: &mut ChaCha8Rng,
) -> Result<f64, LocalizationError> {
    let (value, _) = solve_direction(planes, bbox, theta, rng)?;
    Ok(value)
}

/// Snaps trigonometric cost components to exact 0 and ±1: a residue like
/// `cos(pi/2) ~ 6e-17` times a probe-box coordinate of 1e9 would otherwise
/// tilt the objective by more than the comparison tolerance.
fn snap_trig(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        0.0
    } else if (x.abs() - 1.0).abs() < 1e-12 {
        x.signum()
    } else {
        x
    }
}

fn solve_direction(
    planes: &[UnitHalfPlane],
    bbox: &BoxBounds,
    theta: f64,
    rng: &mut ChaCha8Rng,
) -> Result<(f64, [UnitHalfPlane; 2]), LocalizationError> {
    // maximize [cos t, sin t]·x  ==  minimize the negated cost
    let problem =
        LpProblem::new(vec![snap_trig(-theta.cos()), snap_trig(-theta.sin())], ValueOrder::CostThenLex);
    let mut pool: Vec<HalfSpace> = Vec::with_capacity(planes.len() + 4);
    pool.extend(planes.iter().map(|h| h.to_halfspace()));
    pool.extend(bbox.half_planes().iter().map(|h| h.to_halfspace()));
    let start = Basis::from_single(&problem, &pool[0]);
    let run = subex_lp(&problem, &pool, &start, rng)?;
    match run.basis.value() {
        LpValue::Infeasible => Err(LocalizationError::Infeasible),
        LpValue::Optimum { cost, .. } => {
            let planes = run.basis.constraints();
            debug_assert_eq!(planes.len(), 2);
            Ok((
                -cost,
                [
                    UnitHalfPlane::from_halfspace(&planes[0]),
                    UnitHalfPlane::from_halfspace(&planes[1]),
                ],
            ))
        }
    }
}

/// Projects a half-plane collection onto the planes active in `directions`
/// evenly spaced directional linear programs (two planes per direction; box
/// edges participate and may be returned). The result contains the input
/// region and is contained in its axis-aligned bounding box.
pub fn pi_lp(
    planes: &[UnitHalfPlane],
    bbox: &BoxBounds,
    directions: usize,
    rng: &mut ChaCha8Rng,
) -> Result<HPolytope, LocalizationError> {
    assert!(directions >= 3, "at least three directions are needed for a bounded polygon");
    let mut out = Vec::with_capacity(2 * directions);
    for k in 0..directions {
        let theta = 2.0 * PI * k as f64 / directions as f64;
        let (_, pair) = solve_direction(planes, bbox, theta, rng)?;
        out.extend_from_slice(&pair);
    }
    Ok(HPolytope { planes: out })
}

/// Centralized set-membership recursion over a measurement stream.
///
/// `measurements[t]` holds every half-plane measured at step `t` (possibly
/// empty). Produces the corrected estimate per step.
pub fn centralized_recursion(
    measurements: &[Vec<UnitHalfPlane>],
    v_max: f64,
    bbox: &BoxBounds,
    directions: usize,
    seed: u64,
) -> Result<Vec<HPolytope>, LocalizationError> {
    assert!(!measurements.is_empty() && !measurements[0].is_empty());
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[0x0c]));
    let mut estimates = Vec::with_capacity(measurements.len());
    let mut current = pi_lp(&measurements[0], bbox, directions, &mut rng)?;
    estimates.push(current.clone());
    for stream in &measurements[1..] {
        let mut pool: Vec<UnitHalfPlane> =
            current.planes.iter().map(|h| h.time_update(v_max)).collect();
        pool.extend_from_slice(stream);
        current = pi_lp(&pool, bbox, directions, &mut rng)?;
        estimates.push(current.clone());
    }
    Ok(estimates)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LocalizationConfig {
    pub steps: usize,
    pub v_max: f64,
    /// Upper bound on the sensing noise offset.
    pub noise_width: f64,
    pub bbox: BoxBounds,
    /// Ring-buffer capacity for own measurements (m >= 1).
    pub memory: usize,
    /// Sense at rounds `0, k, 2k, …` when `k > 0`; only at round 0 when 0.
    pub sense_every: usize,
    /// Directional LP count (4 gives the eight-half-planes algorithm).
    #[serde(default = "default_directions")]
    pub directions: usize,
    pub seed: u64,
}

fn default_directions() -> usize {
    4
}

#[derive(Clone, Debug)]
pub struct LocalizationTrace {
    pub node_count: usize,
    pub rounds: usize,
    /// `[round][node]` candidate polytopes, round 0 included.
    pub per_round: Vec<Vec<HPolytope>>,
    pub target: Vec<Point2>,
    pub containment_violations: usize,
    pub memory_high_water: Vec<usize>,
    pub memory_bound: Vec<usize>,
    /// First round at which every node matches the centralized projection of
    /// all round-0 measurements (checked for static single-measurement runs).
    pub convergence_round: Option<usize>,
}

impl LocalizationTrace {
    pub fn memory_within_bounds(&self) -> bool {
        self.memory_high_water.iter().zip(&self.memory_bound).all(|(m, b)| m <= b)
    }
}

struct SensorState {
    h_opt: Vec<UnitHalfPlane>,
    h_meas: VecDeque<UnitHalfPlane>,
    memory_high_water: usize,
    rng: ChaCha8Rng,
}

/// Distributed eight-half-planes consensus over a sensor network.
///
/// Every round the sensors exchange candidate planes, time-translate all
/// stored and received planes by the speed bound, take a fresh measurement on
/// sensing rounds (dropping the oldest beyond the ring capacity) and project
/// the pool back to `2 * directions` planes.
pub fn run_eight_half_planes(
    graph: &TimeVaryingDigraph,
    cfg: &LocalizationConfig,
) -> Result<LocalizationTrace, LocalizationError> {
    let n = graph.node_count();
    if cfg.memory < 1 {
        return Err(LocalizationError::BadConfig("memory must be at least 1"));
    }
    if cfg.directions < 3 {
        return Err(LocalizationError::BadConfig("need at least 3 directions"));
    }
    if !graph_metrics(graph, 0).strongly_connected {
        return Err(LocalizationError::Disconnected);
    }

    let mut target_rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[0x7a]));
    let target = simulate_target(cfg.steps, cfg.v_max, &cfg.bbox, &mut target_rng);
    let senses_at = |round: usize| -> bool {
        if round == 0 {
            true
        } else if cfg.sense_every == 0 {
            false
        } else {
            round.is_multiple_of(cfg.sense_every)
        }
    };

    let width = 2 * cfg.directions;
    let mut nodes: Vec<SensorState> = (0..n)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[i as u64 + 1]));
            let first = sense(&target[0], cfg.noise_width, &mut rng);
            SensorState {
                h_opt: vec![first; width],
                h_meas: VecDeque::from([first]),
                memory_high_water: width + 1,
                rng,
            }
        })
        .collect();

    let mut trace = LocalizationTrace {
        node_count: n,
        rounds: cfg.steps,
        per_round: Vec::with_capacity(cfg.steps + 1),
        target: target.clone(),
        containment_violations: 0,
        memory_high_water: vec![0; n],
        memory_bound: (1..=n)
            .map(|i| {
                let indeg =
                    (0..graph.period()).map(|t| graph.in_degree(i, t)).max().unwrap_or(0);
                width + cfg.memory + width * indeg
            })
            .collect(),
        convergence_round: None,
    };

    let record =
        |trace: &mut LocalizationTrace, nodes: &[SensorState], round: usize, target: &Point2| {
            let mut row = Vec::with_capacity(nodes.len());
            for s in nodes {
                let polytope = HPolytope { planes: s.h_opt.clone() };
                if !polytope.contains(target, VALUE_TOL) {
                    trace.containment_violations += 1;
                }
                row.push(polytope);
            }
            let _ = round;
            trace.per_round.push(row);
        };

    record(&mut trace, &nodes, 0, &target[0]);

    // reference fixed point for static single-measurement scenarios
    let reference: Option<HPolytope> = if cfg.v_max == 0.0 && cfg.sense_every == 0 {
        let all_first: Vec<UnitHalfPlane> =
            nodes.iter().map(|s| *s.h_meas.front().expect("initialized")).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[0x0c]));
        Some(pi_lp(&all_first, &cfg.bbox, cfg.directions, &mut rng)?)
    } else {
        None
    };
    if let Some(reference) = &reference {
        if trace.per_round[0].iter().all(|p| p.same_planes(reference, 1e-9)) {
            trace.convergence_round = Some(0);
        }
    }

    for round in 1..=cfg.steps {
        let edge_time = round - 1;
        let snapshot: Vec<Vec<UnitHalfPlane>> =
            nodes.iter().map(|s| s.h_opt.clone()).collect();
        for i in 0..n {
            let node = &mut nodes[i];
            // time-translate stored measurements in place
            for h in node.h_meas.iter_mut() {
                *h = h.time_update(cfg.v_max);
            }
            if senses_at(round) {
                let fresh = sense(&target[round], cfg.noise_width, &mut node.rng);
                node.h_meas.push_back(fresh);
                while node.h_meas.len() > cfg.memory {
                    node.h_meas.pop_front();
                }
            }
            let mut pool: Vec<UnitHalfPlane> = Vec::new();
            pool.extend(node.h_meas.iter().copied());
            pool.extend(node.h_opt.iter().map(|h| h.time_update(cfg.v_max)));
            let mut received = 0usize;
            for j in graph.in_neighbors(i + 1, edge_time) {
                received += snapshot[j - 1].len();
                pool.extend(snapshot[j - 1].iter().map(|h| h.time_update(cfg.v_max)));
            }
            node.memory_high_water = node
                .memory_high_water
                .max(width + node.h_meas.len() + received);
            node.h_opt = pi_lp(&pool, &cfg.bbox, cfg.directions, &mut node.rng)?.planes;
        }
        record(&mut trace, &nodes, round, &target[round]);
        if let (Some(reference), None) = (&reference, trace.convergence_round) {
            if trace.per_round[round].iter().all(|p| p.same_planes(reference, 1e-9)) {
                trace.convergence_round = Some(round);
            }
        }
    }

    for (i, s) in nodes.iter().enumerate() {
        trace.memory_high_water[i] = s.memory_high_water;
    }
    Ok(trace)
}

/// CSV rows `round,node,a0x,a0y,b0,…,target_x,target_y`.
pub fn localization_trace_to_csv(trace: &LocalizationTrace) -> String {
    let width = trace.per_round.first().and_then(|r| r.first()).map(|p| p.planes.len()).unwrap_or(0);
    let mut out = String::from("round,node");
    for k in 0..width {
        out.push_str(&format!(",a{k}x,a{k}y,b{k}"));
    }
    out.push_str(",target_x,target_y\n");
    for (round, row) in trace.per_round.iter().enumerate() {
        for (node, polytope) in row.iter().enumerate() {
            out.push_str(&format!("{round},{}", node + 1));
            for h in &polytope.planes {
                out.push_str(&format!(",{},{},{}", h.ax, h.ay, h.b));
            }
            out.push_str(&format!(",{},{}\n", trace.target[round].x, trace.target[round].y));
        }
    }
    out
}

/// JSON summary: convergence round, violations and memory accounting.
pub fn localization_summary_json(trace: &LocalizationTrace) -> String {
    let summary = serde_json::json!({
        "node_count": trace.node_count,
        "rounds": trace.rounds,
        "convergence_round": trace.convergence_round,
        "containment_violations": trace.containment_violations,
        "memory_high_water": trace.memory_high_water,
        "memory_bound": trace.memory_bound,
        "memory_within_bounds": trace.memory_within_bounds(),
    });
    serde_json::to_string_pretty(&summary).expect("serializable")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::gen_line;

    const BOX: BoxBounds = BoxBounds { x_min: -10.0, x_max: 10.0, y_min: -10.0, y_max: 10.0 };

    #[test]
    fn static_target_stays_put() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let traj = simulate_target(20, 0.0, &BOX, &mut rng);
        assert!(traj.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn target_displacement_bounded_and_in_box() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let v_max = 0.7;
        let traj = simulate_target(500, v_max, &BOX, &mut rng);
        for w in traj.windows(2) {
            assert!(w[0].dist(&w[1]) <= v_max + 1e-12);
        }
        assert!(traj.iter().all(|p| BOX.contains(p, 0.0)));
    }

    #[test]
    fn sense_contains_target() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = Point2::new(1.5, -2.0);
        for _ in 0..200 {
            let h = sense(&p, 0.5, &mut rng);
            assert!(h.contains(&p, 0.0));
            let norm = (h.ax * h.ax + h.ay * h.ay).sqrt();
            assert!((norm - 1.0).abs() < 1e-12);
        }
        // zero noise produces a supporting half-plane through the target
        let h = sense(&p, 0.0, &mut rng);
        assert!(h.slack(&p).abs() < 1e-12);
    }

    #[test]
    fn pi_lp_of_axis_rectangle_returns_its_sides() {
        // The projection of a rectangle is the rectangle itself: every
        // returned plane is one of the four sides and every side shows up.
        // (Each directional program returns a corner pair under the
        // lexicographic tie-break, so the multiplicities are uneven.)
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let rect = vec![
            UnitHalfPlane::new(1.0, 0.0, 2.0).unwrap(),
            UnitHalfPlane::new(-1.0, 0.0, 1.0).unwrap(),
            UnitHalfPlane::new(0.0, 1.0, 3.0).unwrap(),
            UnitHalfPlane::new(0.0, -1.0, 0.5).unwrap(),
        ];
        let envelope = pi_lp(&rect, &BOX, 4, &mut rng).unwrap();
        assert_eq!(envelope.planes.len(), 8);
        for h in &envelope.planes {
            assert!(rect.iter().any(|side| h.approx_eq(side, 1e-9)));
        }
        for side in &rect {
            assert!(envelope.planes.iter().any(|h| h.approx_eq(side, 1e-9)));
        }
    }

    #[test]
    fn pi_lp_contains_input_and_respects_bounding_box() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let target = Point2::new(0.7, -0.9);
        let planes: Vec<UnitHalfPlane> =
            (0..12).map(|_| sense(&target, 1.0, &mut rng)).collect();
        let envelope = pi_lp(&planes, &BOX, 4, &mut rng).unwrap();

        // directional extents of the envelope match the pool, certifying both
        // containment and the bounding-box property along the axes
        let extents: Vec<f64> = (0..4)
            .map(|k| {
                directional_extent(&planes, &BOX, 2.0 * PI * k as f64 / 4.0, &mut rng).unwrap()
            })
            .collect();
        for (x, y) in crate::util::halton_points(1000, BOX.x_min, BOX.x_max, BOX.y_min, BOX.y_max)
        {
            let p = Point2::new(x, y);
            let in_pool = planes.iter().all(|h| h.contains(&p, 0.0));
            if in_pool {
                assert!(envelope.contains(&p, 1e-9), "envelope must contain the pool region");
            }
            if envelope.contains(&p, 0.0) {
                assert!(p.x <= extents[0] + 1e-9);
                assert!(p.y <= extents[1] + 1e-9);
                assert!(-p.x <= extents[2] + 1e-9);
                assert!(-p.y <= extents[3] + 1e-9);
            }
        }
    }

    #[test]
    fn time_update_adds_offsets() {
        let h = UnitHalfPlane::new(0.6, 0.8, 1.0).unwrap();
        assert_eq!(h.time_update(0.0), h);
        let twice = h.time_update(0.3).time_update(0.3);
        assert!((twice.b - (h.b + 0.6)).abs() < 1e-12);
    }

    #[test]
    fn centralized_recursion_static_fixed_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let target = Point2::new(2.0, 1.0);
        let first: Vec<UnitHalfPlane> = (0..6).map(|_| sense(&target, 0.8, &mut rng)).collect();
        let streams = vec![first, Vec::new(), Vec::new()];
        let estimates = centralized_recursion(&streams, 0.0, &BOX, 4, 9).unwrap();
        assert_eq!(estimates.len(), 3);
        for e in &estimates {
            assert!(e.contains(&target, 1e-9));
            assert!(e.same_planes(&estimates[0], 1e-9), "no measurements, no motion: fixed point");
        }

        // one sensor repeating the identical measurement: fixed point from
        // the very first step
        let h = sense(&target, 0.5, &mut rng);
        let streams = vec![vec![h], vec![h], vec![h], vec![h]];
        let estimates = centralized_recursion(&streams, 0.0, &BOX, 4, 9).unwrap();
        for e in &estimates {
            assert!(e.same_planes(&estimates[0], 1e-9));
        }
    }

    #[test]
    fn distributed_static_converges_to_centralized() {
        let n = 6;
        let cfg = LocalizationConfig {
            steps: 4 * (n - 1),
            v_max: 0.0,
            noise_width: 1.0,
            bbox: BOX,
            memory: 1,
            sense_every: 0,
            directions: 4,
            seed: 31,
        };
        let g = gen_line(n);
        let trace = run_eight_half_planes(&g, &cfg).unwrap();
        assert_eq!(trace.containment_violations, 0);
        assert!(trace.memory_within_bounds());
        let diam = graph_metrics(&g, 0).diameter.unwrap();
        let convergence = trace.convergence_round.expect("static run must converge");
        assert!(convergence <= 5 * diam, "converged at {convergence}, diameter {diam}");
    }

    #[test]
    fn moving_target_containment_and_memory() {
        let cfg = LocalizationConfig {
            steps: 30,
            v_max: 0.2,
            noise_width: 1.0,
            bbox: BOX,
            memory: 3,
            sense_every: 2,
            directions: 4,
            seed: 77,
        };
        let g = gen_line(7);
        let trace = run_eight_half_planes(&g, &cfg).unwrap();
        assert_eq!(trace.containment_violations, 0);
        assert!(trace.memory_within_bounds());
        for (i, bound) in trace.memory_bound.iter().enumerate() {
            let indeg = g.in_degree(i + 1, 0);
            assert_eq!(*bound, 8 + cfg.memory + 8 * indeg);
        }
    }

    #[test]
    fn static_directional_extents_monotone() {
        let cfg = LocalizationConfig {
            steps: 12,
            v_max: 0.0,
            noise_width: 1.5,
            bbox: BOX,
            memory: 1,
            sense_every: 0,
            directions: 4,
            seed: 13,
        };
        let g = gen_line(5);
        let trace = run_eight_half_planes(&g, &cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for node in 0..5 {
            for k in 0..4 {
                let theta = 2.0 * PI * k as f64 / 4.0;
                let mut prev = f64::INFINITY;
                for round in &trace.per_round {
                    let extent =
                        directional_extent(&round[node].planes, &BOX, theta, &mut rng).unwrap();
                    assert!(extent <= prev + 1e-9, "directional extent must not grow");
                    prev = extent;
                }
            }
        }
    }

    #[test]
    fn six_directions_give_twelve_planes() {
        let cfg = LocalizationConfig {
            steps: 10,
            v_max: 0.1,
            noise_width: 1.0,
            bbox: BOX,
            memory: 2,
            sense_every: 2,
            directions: 6,
            seed: 21,
        };
        let g = gen_line(4);
        let trace = run_eight_half_planes(&g, &cfg).unwrap();
        assert_eq!(trace.containment_violations, 0);
        assert!(trace.per_round.iter().all(|row| row.iter().all(|p| p.planes.len() == 12)));
        for (i, bound) in trace.memory_bound.iter().enumerate() {
            assert_eq!(*bound, 12 + 2 + 12 * g.in_degree(i + 1, 0));
        }
    }

    #[test]
    fn csv_export_shape() {
        let cfg = LocalizationConfig {
            steps: 2,
            v_max: 0.1,
            noise_width: 0.5,
            bbox: BOX,
            memory: 1,
            sense_every: 1,
            directions: 4,
            seed: 3,
        };
        let g = gen_line(3);
        let trace = run_eight_half_planes(&g, &cfg).unwrap();
        let csv = localization_trace_to_csv(&trace);
        let header = csv.lines().next().unwrap();
        assert!(header.starts_with("round,node,a0x,a0y,b0"));
        assert!(header.ends_with("target_x,target_y"));
        assert_eq!(csv.lines().count(), 1 + 3 * 3);
        let summary = localization_summary_json(&trace);
        let parsed: serde_json::Value = serde_json::from_str(&summary).unwrap();
        assert_eq!(parsed["containment_violations"], 0);
    }
}
