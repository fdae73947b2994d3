//! Planar geometric abstract-optimization problems: smallest enclosing ball
//! (combinatorial dimension 3), smallest enclosing stripe (dimension 5, for
//! points in stripe-generic position) and smallest enclosing annulus
//! (dimension 4, via an exact 4-variable linear reformulation).

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lp::{solve_box_lex, HalfSpace, LpValue};
use crate::opt::{Basis, Problem};
use crate::util::{cmp_f64, VALUE_TOL};

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("point set contains duplicate points")]
    DuplicatePoints,
    #[error("points are not in stripe-generic position")]
    NotStripeGeneric,
    #[error("point set of {size} exceeds the guard of {guard}")]
    TooLarge { size: usize, guard: usize },
    #[error("negative radicand {0} while recovering annulus radii")]
    NegativeRadicand(f64),
}

/// Point in the plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "(f64, f64)", into = "(f64, f64)")]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl From<(f64, f64)> for Point2 {
    fn from((x, y): (f64, f64)) -> Self {
        Point2 { x, y }
    }
}

impl From<Point2> for (f64, f64) {
    fn from(p: Point2) -> Self {
        (p.x, p.y)
    }
}

impl Point2 {
    pub fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn dist(&self, other: &Point2) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2)).sqrt()
    }

    pub fn dot(&self, other: &Point2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn sub(&self, other: &Point2) -> Point2 {
        Point2::new(self.x - other.x, self.y - other.y)
    }

    pub fn add(&self, other: &Point2) -> Point2 {
        Point2::new(self.x + other.x, self.y + other.y)
    }

    pub fn scale(&self, s: f64) -> Point2 {
        Point2::new(self.x * s, self.y * s)
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y).sqrt()
    }

    pub fn cross(&self, other: &Point2) -> f64 {
        self.x * other.y - self.y * other.x
    }
}

/// Distance from `p` to the line through `a` and `b` (which must differ).
pub fn point_line_distance(p: &Point2, a: &Point2, b: &Point2) -> f64 {
    let ab = b.sub(a);
    let ap = p.sub(a);
    ab.cross(&ap).abs() / ab.norm()
}

fn cmp_points(a: &Point2, b: &Point2) -> Ordering {
    cmp_f64(a.x, b.x, VALUE_TOL).then_with(|| cmp_f64(a.y, b.y, VALUE_TOL))
}

// ---------------------------------------------------------------------------
// Smallest enclosing ball
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Point2,
    pub radius: f64,
}

impl Ball {
    pub fn contains(&self, p: &Point2, tol: f64) -> bool {
        self.center.dist(p) <= self.radius + tol
    }
}

fn ball_from_two(a: &Point2, b: &Point2) -> Ball {
    let center = Point2::new((a.x + b.x) / 2.0, (a.y + b.y) / 2.0);
    Ball { center, radius: center.dist(a) }
}

fn circumcircle(a: &Point2, b: &Point2, c: &Point2) -> Option<Ball> {
    let d = 2.0 * (a.x * (b.y - c.y) + b.x * (c.y - a.y) + c.x * (a.y - b.y));
    let scale = a.norm().max(b.norm()).max(c.norm()).max(1.0);
    if d.abs() < 1e-12 * scale * scale {
        return None;
    }
    let a2 = a.x * a.x + a.y * a.y;
    let b2 = b.x * b.x + b.y * b.y;
    let c2 = c.x * c.x + c.y * c.y;
    let ux = (a2 * (b.y - c.y) + b2 * (c.y - a.y) + c2 * (a.y - b.y)) / d;
    let uy = (a2 * (c.x - b.x) + b2 * (a.x - c.x) + c2 * (b.x - a.x)) / d;
    let center = Point2::new(ux, uy);
    Some(Ball { center, radius: center.dist(a) })
}

/// Smallest ball containing all points, by exhaustive support enumeration
/// (pairs as diameters, triples as circumcircles). Collinear triples fall back
/// to their pairs.
pub fn smallest_enclosing_ball(points: &[Point2]) -> Ball {
    assert!(!points.is_empty());
    let contains_all = |ball: &Ball| {
        let tol = VALUE_TOL * (1.0 + ball.radius);
        points.iter().all(|p| ball.contains(p, tol))
    };
    let mut best: Option<Ball> = None;
    let mut consider = |candidate: Ball| {
        if !contains_all(&candidate) {
            return;
        }
        let better = match &best {
            None => true,
            Some(b) => {
                cmp_f64(candidate.radius, b.radius, VALUE_TOL)
                    .then_with(|| cmp_points(&candidate.center, &b.center))
                    == Ordering::Less
            }
        };
        if better {
            best = Some(candidate);
        }
    };
    for (i, p) in points.iter().enumerate() {
        consider(Ball { center: *p, radius: 0.0 });
        for (j, q) in points.iter().enumerate().skip(i + 1) {
            consider(ball_from_two(p, q));
            for r in points.iter().skip(j + 1) {
                if let Some(ball) = circumcircle(p, q, r) {
                    consider(ball);
                }
            }
        }
    }
    best.expect("some support ball contains all points")
}

/// Value of the smallest-enclosing-ball program: radius first, then the
/// center lexicographically as tie-break.
#[derive(Clone, Debug, PartialEq)]
pub struct BallValue {
    pub radius: f64,
    pub center: Point2,
}

/// Smallest enclosing ball as an abstract program over points.
#[derive(Clone, Copy, Debug, Default)]
pub struct BallProblem;

impl Problem for BallProblem {
    type Constraint = Point2;
    type Value = BallValue;

    fn delta(&self) -> usize {
        3
    }

    fn value_of(&self, points: &[Point2]) -> BallValue {
        let ball = smallest_enclosing_ball(points);
        BallValue { radius: ball.radius, center: ball.center }
    }

    fn cmp_values(&self, a: &BallValue, b: &BallValue) -> Ordering {
        cmp_f64(a.radius, b.radius, VALUE_TOL).then_with(|| cmp_points(&a.center, &b.center))
    }

    fn value_components(&self, v: &BallValue) -> Vec<f64> {
        vec![v.radius, v.center.x, v.center.y]
    }

    fn violation_test(&self, basis: &Basis<Point2, BallValue>, p: &Point2) -> bool {
        let value = basis.value();
        value.center.dist(p) > value.radius + VALUE_TOL
    }
}

// ---------------------------------------------------------------------------
// Smallest enclosing stripe
// ---------------------------------------------------------------------------

/// Stripe `{x : lo <= normal·x <= hi}` with a unit normal canonicalized to the
/// upper half-plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stripe {
    pub normal: Point2,
    pub lo: f64,
    pub hi: f64,
}

impl Stripe {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, p: &Point2, tol: f64) -> bool {
        let proj = self.normal.dot(p);
        proj >= self.lo - tol && proj <= self.hi + tol
    }
}

/// Stripe program value: width first, then the count of distinct points
/// (capped at 3) so that degenerate zero-width values of one and two points
/// stay below each other and below proper stripes, then the canonical normal
/// and offset as deterministic tie-breaks. Without the rank tier, nested
/// zero-width sets could compare decreasingly through the normal component,
/// breaking the monotonicity axiom during basis bootstrapping.
#[derive(Clone, Debug, PartialEq)]
pub struct StripeValue {
    pub width: f64,
    pub rank: u8,
    pub normal: Point2,
    pub lo: f64,
}

impl StripeValue {
    pub fn stripe(&self) -> Stripe {
        Stripe { normal: self.normal, lo: self.lo, hi: self.lo + self.width }
    }
}

fn canonical_normal(dir: &Point2) -> Point2 {
    let n = Point2::new(-dir.y, dir.x);
    let len = n.norm();
    let mut n = Point2::new(n.x / len, n.y / len);
    if n.y < 0.0 || (n.y == 0.0 && n.x < 0.0) {
        n = n.scale(-1.0);
    }
    n
}

/// Smallest stripe over a point multiset by enumerating point-pair directions:
/// the optimal stripe has a boundary line through two points, so directions
/// spanned by pairs are exhaustive. Detects stripe-degenerate inputs (ties
/// among distinct candidate directions, or four and more support points).
pub fn smallest_stripe(points: &[Point2]) -> Result<StripeValue, GeometryError> {
    assert!(!points.is_empty());
    let mut distinct: Vec<Point2> = Vec::new();
    for p in points {
        if !distinct.iter().any(|q| q == p) {
            distinct.push(*p);
        }
    }
    if distinct.len() == 1 {
        let p = distinct[0];
        return Ok(StripeValue { width: 0.0, rank: 1, normal: Point2::new(0.0, 1.0), lo: p.y });
    }
    let rank = distinct.len().min(3) as u8;

    struct Candidate {
        width: f64,
        normal: Point2,
        lo: f64,
        support: Vec<usize>,
    }
    let mut candidates: Vec<Candidate> = Vec::new();
    for i in 0..distinct.len() {
        for j in i + 1..distinct.len() {
            let normal = canonical_normal(&distinct[j].sub(&distinct[i]));
            // skip directions already seen (same boundary line through >2 points)
            if candidates.iter().any(|c| {
                (c.normal.x - normal.x).abs() <= 1e-12 && (c.normal.y - normal.y).abs() <= 1e-12
            }) {
                continue;
            }
            let projections: Vec<f64> = distinct.iter().map(|p| normal.dot(p)).collect();
            let lo = projections.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = projections.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let support: Vec<usize> = projections
                .iter()
                .enumerate()
                .filter(|(_, &proj)| proj <= lo + VALUE_TOL || proj >= hi - VALUE_TOL)
                .map(|(k, _)| k)
                .collect();
            candidates.push(Candidate { width: hi - lo, normal, lo, support });
        }
    }

    let min_width = candidates.iter().map(|c| c.width).fold(f64::INFINITY, f64::min);
    let tied: Vec<&Candidate> =
        candidates.iter().filter(|c| c.width <= min_width + VALUE_TOL).collect();
    if distinct.len() >= 3 {
        if tied.iter().any(|c| c.support.len() >= 4) {
            return Err(GeometryError::NotStripeGeneric);
        }
        if tied.len() > 1 {
            return Err(GeometryError::NotStripeGeneric);
        }
    }
    let best = tied
        .into_iter()
        .min_by(|a, b| {
            cmp_f64(a.width, b.width, VALUE_TOL)
                .then_with(|| cmp_points(&a.normal, &b.normal))
                .then_with(|| cmp_f64(a.lo, b.lo, VALUE_TOL))
        })
        .expect("at least one candidate direction");
    Ok(StripeValue { width: best.width, rank, normal: best.normal, lo: best.lo })
}

/// Smallest enclosing stripe as an abstract program. Callers must validate
/// stripe-generic position up front (see [`stripe_generic_check`]); value
/// evaluation panics on degeneracies the validation would have rejected.
#[derive(Clone, Copy, Debug, Default)]
pub struct StripeProblem;

impl Problem for StripeProblem {
    type Constraint = Point2;
    type Value = StripeValue;

    fn delta(&self) -> usize {
        5
    }

    fn value_of(&self, points: &[Point2]) -> StripeValue {
        smallest_stripe(points).expect("stripe-generic position required")
    }

    fn cmp_values(&self, a: &StripeValue, b: &StripeValue) -> Ordering {
        cmp_f64(a.width, b.width, VALUE_TOL)
            .then_with(|| a.rank.cmp(&b.rank))
            .then_with(|| cmp_points(&a.normal, &b.normal))
            .then_with(|| cmp_f64(a.lo, b.lo, VALUE_TOL))
    }

    fn value_components(&self, v: &StripeValue) -> Vec<f64> {
        vec![v.width, v.rank as f64, v.normal.x, v.normal.y, v.lo]
    }

    fn violation_test(&self, basis: &Basis<Point2, StripeValue>, p: &Point2) -> bool {
        if basis.value().rank < 3 {
            // degenerate stripe of one or two distinct points: any new distinct
            // point raises the rank (or the width), so it violates
            return !basis.constraints().iter().any(|q| q == p);
        }
        !basis.value().stripe().contains(p, VALUE_TOL)
    }
}

/// Guard on the stripe-generic validator.
pub const STRIPE_GENERIC_GUARD: usize = 60;

/// True when all point-to-line distances `dist(p_a, line(p_b, p_c))` over
/// distinct triplets are pairwise distinct (tolerance 1e-9). Distinctness of
/// these distances makes the smallest enclosing stripe of every subset unique.
pub fn stripe_generic_check(points: &[Point2]) -> Result<bool, GeometryError> {
    let n = points.len();
    if n > STRIPE_GENERIC_GUARD {
        return Err(GeometryError::TooLarge { size: n, guard: STRIPE_GENERIC_GUARD });
    }
    for i in 0..n {
        for j in i + 1..n {
            if points[i] == points[j] {
                return Err(GeometryError::DuplicatePoints);
            }
        }
    }
    if n < 3 {
        return Ok(true);
    }
    let mut distances: Vec<f64> = Vec::with_capacity(n * (n - 1) * (n - 2) / 2);
    for b in 0..n {
        for c in b + 1..n {
            for a in 0..n {
                if a == b || a == c {
                    continue;
                }
                distances.push(point_line_distance(&points[a], &points[b], &points[c]));
            }
        }
    }
    distances.sort_by(|x, y| x.partial_cmp(y).expect("finite distances"));
    Ok(distances.windows(2).all(|w| (w[1] - w[0]).abs() > VALUE_TOL))
}

// ---------------------------------------------------------------------------
// Smallest enclosing annulus
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Annulus {
    pub center: Point2,
    pub r: f64,
    pub big_r: f64,
}

impl Annulus {
    pub fn contains(&self, p: &Point2, tol: f64) -> bool {
        let d = self.center.dist(p);
        d >= self.r - tol && d <= self.big_r + tol
    }
}

/// Value of the annulus program in its linear coordinates: center `c` and the
/// squared-radius offsets `u`, `v` with `r² = v + |c|²`, `R² = u + |c|²`. The
/// order is the squared-width `u - v` first, then the count of distinct
/// points capped at 3, then the center and `v`. The rank tier keeps the
/// degenerate zero-width values (one or two points, whose unconstrained
/// centers escape to the probe box) strictly below proper values instead of
/// colliding with them at probe-box magnitudes.
#[derive(Clone, Debug, PartialEq)]
pub struct AnnulusValue {
    pub center: Point2,
    pub u: f64,
    pub v: f64,
    pub rank: u8,
}

impl AnnulusValue {
    pub fn squared_width(&self) -> f64 {
        self.u - self.v
    }

    /// Recovers the geometric annulus, clamping tiny negative radicands.
    pub fn annulus(&self) -> Result<Annulus, GeometryError> {
        let c2 = self.center.dot(&self.center);
        let r2 = self.v + c2;
        let big_r2 = self.u + c2;
        let scale = 1.0 + c2 + self.u.abs() + self.v.abs();
        if r2 < -1e-9 * scale {
            return Err(GeometryError::NegativeRadicand(r2));
        }
        Ok(Annulus {
            center: self.center,
            r: r2.max(0.0).sqrt(),
            big_r: big_r2.max(0.0).sqrt(),
        })
    }

    fn radial(&self, p: &Point2) -> f64 {
        p.dot(p) - 2.0 * self.center.dot(p)
    }
}

/// Smallest-area annulus of a point multiset via the exact linear program
/// `min u - v` over `(c, u, v)` with `|p|² - 2 c·p` pinched between `v` and
/// `u` for every point.
pub fn smallest_annulus_value(points: &[Point2]) -> AnnulusValue {
    assert!(!points.is_empty());
    let mut distinct: Vec<Point2> = Vec::new();
    for p in points {
        if !distinct.contains(p) {
            distinct.push(*p);
        }
    }
    // One or two distinct points leave the ring center unconstrained: the LP
    // would chase it to the probe box, contaminating the zero width with
    // box-scale noise. Use the canonical degenerate rings instead: the point
    // itself, or the circle on the pair's diameter.
    match distinct.as_slice() {
        [a] => {
            return AnnulusValue { center: *a, u: -a.dot(a), v: -a.dot(a), rank: 1 };
        }
        [a, b] => {
            let center = Point2::new((a.x + b.x) / 2.0, (a.y + b.y) / 2.0);
            let f = -a.dot(b);
            return AnnulusValue { center, u: f, v: f, rank: 2 };
        }
        _ => {}
    }
    let mut rows: Vec<HalfSpace> = Vec::with_capacity(points.len() * 2);
    for p in points {
        let p2 = p.dot(p);
        // |p|² - 2 c·p <= u
        rows.push(HalfSpace { a: vec![-2.0 * p.x, -2.0 * p.y, -1.0, 0.0], b: -p2 });
        // |p|² - 2 c·p >= v
        rows.push(HalfSpace { a: vec![2.0 * p.x, 2.0 * p.y, 0.0, 1.0], b: p2 });
    }
    let refs: Vec<&HalfSpace> = rows.iter().collect();
    match solve_box_lex(&[0.0, 0.0, 1.0, -1.0], &refs, 4) {
        LpValue::Optimum { point, .. } => AnnulusValue {
            center: Point2::new(point[0], point[1]),
            u: point[2],
            v: point[3],
            rank: 3,
        },
        LpValue::Infeasible => unreachable!("annulus program is always feasible"),
    }
}

/// Smallest-area enclosing annulus (geometric form).
pub fn smallest_annulus(points: &[Point2]) -> Result<Annulus, GeometryError> {
    smallest_annulus_value(points).annulus()
}

/// Smallest enclosing annulus as an abstract program over points.
#[derive(Clone, Copy, Debug, Default)]
pub struct AnnulusProblem;

impl Problem for AnnulusProblem {
    type Constraint = Point2;
    type Value = AnnulusValue;

    fn delta(&self) -> usize {
        4
    }

    fn value_of(&self, points: &[Point2]) -> AnnulusValue {
        smallest_annulus_value(points)
    }

    fn cmp_values(&self, a: &AnnulusValue, b: &AnnulusValue) -> Ordering {
        cmp_f64(a.squared_width(), b.squared_width(), VALUE_TOL)
            .then_with(|| a.rank.cmp(&b.rank))
            .then_with(|| cmp_points(&a.center, &b.center))
            .then_with(|| cmp_f64(a.v, b.v, VALUE_TOL))
    }

    fn value_components(&self, v: &AnnulusValue) -> Vec<f64> {
        vec![v.squared_width(), v.rank as f64, v.center.x, v.center.y, v.v]
    }

    fn violation_test(&self, basis: &Basis<Point2, AnnulusValue>, p: &Point2) -> bool {
        let value = basis.value();
        if value.rank < 3 {
            // one or two distinct points: any new distinct point raises the
            // rank, and the degenerate ring sits at probe-box scale where the
            // radial test would be numerically meaningless
            return !basis.constraints().iter().any(|q| q == p);
        }
        let f = value.radial(p);
        let tol = VALUE_TOL * (1.0 + f.abs() + value.u.abs() + value.v.abs());
        f > value.u + tol || f < value.v - tol
    }
}
