//! Linear programs as abstract optimization programs.
//!
//! A linear program `min c·x subject to a_i·x <= b_i` is transcribed by taking
//! the half-spaces as constraints and, as the value of a subset, the
//! lexicographically minimal minimizer of the cost over the subset's
//! intersection. To keep every subset's value finite and comparable, the
//! solver works over the program augmented with a huge coordinate box: optima
//! supported by the box correspond to unbounded programs and are reported as
//! such, but internally they still carry a definite vertex, so violation tests
//! and basis computations behave uniformly from the very first constraint.
//!
//! The exact solver enumerates active-set candidates (all `d`-subsets of the
//! augmented rows), solves each square system with partial pivoting and keeps
//! the best feasible vertex under the (cost, point-lex) order.

use std::cmp::Ordering;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::opt::{minimal_achieving_subset, Basis, Problem};
use crate::util::{cmp_f64, cmp_f64_slice, VALUE_TOL};

/// Half-width of the probe box used to keep every subproblem bounded.
pub const PROBE_BOX_HALF_WIDTH: f64 = 1e9;

/// Coordinates at or beyond this magnitude mean the probe box supports the
/// optimum, i.e. the unaugmented program is unbounded in cost or tie-break.
const BOX_ACTIVE_MARGIN: f64 = PROBE_BOX_HALF_WIDTH * (1.0 - 1e-6);

/// Supported LP dimensions.
pub const MAX_DIMENSION: usize = 5;

#[derive(Debug, Error)]
pub enum LpError {
    #[error("constraint dimension {found} does not match program dimension {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("half-space normal must be nonzero")]
    ZeroNormal,
    #[error("dimension {0} outside supported range 2..=5")]
    UnsupportedDimension(usize),
    #[error("failed to parse linear program: {0}")]
    Parse(#[from] serde_json::Error),
}

/// Closed half-space `{x : a·x <= b}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HalfSpace {
    pub a: Vec<f64>,
    pub b: f64,
}

impl HalfSpace {
    pub fn new(a: Vec<f64>, b: f64) -> Result<Self, LpError> {
        if a.iter().all(|x| x.abs() < 1e-300) {
            return Err(LpError::ZeroNormal);
        }
        Ok(HalfSpace { a, b })
    }

    /// Half-space with the normal scaled to unit length.
    pub fn unit(a: Vec<f64>, b: f64) -> Result<Self, LpError> {
        let norm = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-300 {
            return Err(LpError::ZeroNormal);
        }
        Ok(HalfSpace { a: a.iter().map(|x| x / norm).collect(), b: b / norm })
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }

    pub fn dot(&self, x: &[f64]) -> f64 {
        self.a.iter().zip(x).map(|(a, x)| a * x).sum()
    }

    /// True when `x` satisfies the half-space within a magnitude-scaled
    /// tolerance (plain 1e-9 at unit scale).
    pub fn contains(&self, x: &[f64]) -> bool {
        let lhs = self.dot(x);
        lhs <= self.b + feas_tol(&self.a, x, self.b)
    }
}

fn feas_tol(a: &[f64], x: &[f64], b: f64) -> f64 {
    let mag: f64 = a.iter().zip(x).map(|(a, x)| (a * x).abs()).sum();
    VALUE_TOL * (1.0 + b.abs() + mag)
}

/// A linear program `min c·x subject to constraints`.
#[derive(Clone, Debug)]
pub struct LinearProgram {
    pub d: usize,
    pub c: Vec<f64>,
    pub constraints: Vec<HalfSpace>,
}

#[derive(Serialize, Deserialize)]
struct LpFile {
    d: usize,
    n: usize,
    c: Vec<f64>,
    rows: Vec<HalfSpace>,
}

impl serde::Serialize for LinearProgram {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        LpFile {
            d: self.d,
            n: self.constraints.len(),
            c: self.c.clone(),
            rows: self.constraints.clone(),
        }
        .serialize(serializer)
    }
}

impl<'de> serde::Deserialize<'de> for LinearProgram {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let file = LpFile::deserialize(deserializer)?;
        LinearProgram::new(file.c, file.rows).map_err(serde::de::Error::custom)
    }
}

impl LinearProgram {
    pub fn new(c: Vec<f64>, constraints: Vec<HalfSpace>) -> Result<Self, LpError> {
        let d = c.len();
        if !(2..=MAX_DIMENSION).contains(&d) {
            return Err(LpError::UnsupportedDimension(d));
        }
        for h in &constraints {
            if h.dim() != d {
                return Err(LpError::DimensionMismatch { expected: d, found: h.dim() });
            }
        }
        Ok(LinearProgram { d, c, constraints })
    }

    pub fn to_json(&self) -> String {
        let file = LpFile {
            d: self.d,
            n: self.constraints.len(),
            c: self.c.clone(),
            rows: self.constraints.clone(),
        };
        serde_json::to_string_pretty(&file).expect("serializable")
    }

    pub fn from_json(s: &str) -> Result<Self, LpError> {
        let file: LpFile = serde_json::from_str(s)?;
        LinearProgram::new(file.c, file.rows)
    }

    /// Abstract-program view of this LP (cost-then-lex value order).
    pub fn as_problem(&self) -> LpProblem {
        LpProblem::new(self.c.clone(), ValueOrder::CostThenLex)
    }
}

/// Classification of an LP value for reporting.
#[derive(Clone, Debug, PartialEq)]
pub enum LexValue {
    /// No lexicographically minimal minimizer exists.
    Unbounded,
    /// Unique lex-minimal minimizer and its cost.
    Finite { cost: f64, point: Vec<f64> },
    /// Empty constraint intersection.
    Infeasible,
}

/// Total order on reported values: UNBOUNDED below every FINITE, INFEASIBLE
/// above; finite values by (cost, then point lexicographically).
pub fn cmp_lex_values(a: &LexValue, b: &LexValue) -> Ordering {
    use LexValue::*;
    match (a, b) {
        (Unbounded, Unbounded) | (Infeasible, Infeasible) => Ordering::Equal,
        (Unbounded, _) => Ordering::Less,
        (_, Unbounded) => Ordering::Greater,
        (Infeasible, _) => Ordering::Greater,
        (_, Infeasible) => Ordering::Less,
        (Finite { cost: ca, point: pa }, Finite { cost: cb, point: pb }) => {
            cmp_f64(*ca, *cb, VALUE_TOL).then_with(|| cmp_f64_slice(pa, pb, VALUE_TOL))
        }
    }
}

/// Internal value of the box-augmented program: always a definite vertex (or
/// infeasibility), so values of arbitrarily small constraint sets compare.
#[derive(Clone, Debug, PartialEq)]
pub enum LpValue {
    Optimum { cost: f64, point: Vec<f64>, box_active: bool },
    Infeasible,
}

impl LpValue {
    /// Reported classification: box-supported optima are unbounded programs.
    pub fn classify(&self) -> LexValue {
        match self {
            LpValue::Infeasible => LexValue::Infeasible,
            LpValue::Optimum { box_active: true, .. } => LexValue::Unbounded,
            LpValue::Optimum { cost, point, .. } => {
                LexValue::Finite { cost: *cost, point: point.clone() }
            }
        }
    }
}

/// Value order applied by the LP transcription.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ValueOrder {
    /// Cost first, then the optimal point lexicographically (the correct
    /// transcription).
    CostThenLex,
    /// Cost alone. Violates the locality axiom; kept as a regression probe.
    CostOnly,
}

/// Exact lexicographic minimizer of `min c·x` over the given half-spaces.
///
/// Detects infeasibility and unboundedness (in cost or in the lexicographic
/// tie-break). The result is invariant to constraint ordering.
pub fn lex_min_point(lp: &LinearProgram) -> Result<LexValue, LpError> {
    for h in &lp.constraints {
        if h.dim() != lp.d {
            return Err(LpError::DimensionMismatch { expected: lp.d, found: h.dim() });
        }
    }
    let refs: Vec<&HalfSpace> = lp.constraints.iter().collect();
    Ok(solve_box_lex(&lp.c, &refs, lp.d).classify())
}

/// Solves the box-augmented program by enumerating active-set candidates.
pub(crate) fn solve_box_lex(cost: &[f64], halfspaces: &[&HalfSpace], d: usize) -> LpValue {
    debug_assert!((2..=MAX_DIMENSION).contains(&d));
    let m = PROBE_BOX_HALF_WIDTH;
    // rows 0..k are the problem constraints, rows k.. the box faces
    let k = halfspaces.len();
    let total = k + 2 * d;
    let row = |i: usize| -> (&[f64], f64) {
        if i < k {
            (&halfspaces[i].a, halfspaces[i].b)
        } else {
            let j = (i - k) / 2;
            let sign = if (i - k).is_multiple_of(2) { 1.0 } else { -1.0 };
            (&BOX_AXES[j * 2 + if sign > 0.0 { 0 } else { 1 }][..d], m)
        }
    };

    let mut best: Option<(f64, [f64; MAX_DIMENSION])> = None;
    let mut idx = vec![0usize; d];
    enumerate_combinations(total, d, &mut idx, 0, 0, &mut |subset: &[usize]| {
        let mut mat = [[0.0f64; MAX_DIMENSION]; MAX_DIMENSION];
        let mut rhs = [0.0f64; MAX_DIMENSION];
        for (r, &i) in subset.iter().enumerate() {
            let (a, b) = row(i);
            mat[r][..d].copy_from_slice(a);
            rhs[r] = b;
        }
        let Some(x) = solve_square(&mut mat, &mut rhs, d) else {
            return;
        };
        // residual check against the original rows
        for &i in subset {
            let (a, b) = row(i);
            let lhs: f64 = a.iter().zip(&x[..d]).map(|(a, x)| a * x).sum();
            if (lhs - b).abs() > feas_tol(a, &x[..d], b) {
                return;
            }
        }
        // feasibility against every row (problem + box)
        for i in 0..total {
            let (a, b) = row(i);
            let lhs: f64 = a.iter().zip(&x[..d]).map(|(a, x)| a * x).sum();
            if lhs > b + feas_tol(a, &x[..d], b) {
                return;
            }
        }
        let c_val: f64 = cost.iter().zip(&x[..d]).map(|(c, x)| c * x).sum();
        let better = match &best {
            None => true,
            Some((bc, bx)) => {
                cmp_f64(c_val, *bc, VALUE_TOL).then_with(|| cmp_f64_slice(&x[..d], &bx[..d], VALUE_TOL))
                    == Ordering::Less
            }
        };
        if better {
            best = Some((c_val, x));
        }
    });

    match best {
        None => LpValue::Infeasible,
        Some((cost, point)) => {
            let point: Vec<f64> = point[..d].to_vec();
            let box_active = point.iter().any(|x| x.abs() >= BOX_ACTIVE_MARGIN);
            LpValue::Optimum { cost, point, box_active }
        }
    }
}

/// Unit axis rows (+e_j then -e_j per coordinate) backing the probe box.
static BOX_AXES: [[f64; MAX_DIMENSION]; 2 * MAX_DIMENSION] = {
    let mut rows = [[0.0; MAX_DIMENSION]; 2 * MAX_DIMENSION];
    let mut j = 0;
    while j < MAX_DIMENSION {
        rows[2 * j][j] = 1.0;
        rows[2 * j + 1][j] = -1.0;
        j += 1;
    }
    rows
};

fn enumerate_combinations(
    n: usize,
    k: usize,
    idx: &mut Vec<usize>,
    depth: usize,
    start: usize,
    f: &mut impl FnMut(&[usize]),
) {
    if depth == k {
        f(idx);
        return;
    }
    for i in start..=(n - (k - depth)) {
        idx[depth] = i;
        enumerate_combinations(n, k, idx, depth + 1, i + 1, f);
    }
}

/// Gaussian elimination with partial pivoting on a `d`-square system stored in
/// fixed-size buffers. Returns `None` for (near-)singular systems.
fn solve_square(
    mat: &mut [[f64; MAX_DIMENSION]; MAX_DIMENSION],
    rhs: &mut [f64; MAX_DIMENSION],
    d: usize,
) -> Option<[f64; MAX_DIMENSION]> {
    for col in 0..d {
        let mut pivot = col;
        let mut best = mat[col][col].abs();
        for r in col + 1..d {
            let v = mat[r][col].abs();
            if v > best {
                best = v;
                pivot = r;
            }
        }
        if best < 1e-12 {
            return None;
        }
        if pivot != col {
            mat.swap(pivot, col);
            rhs.swap(pivot, col);
        }
        for r in col + 1..d {
            let factor = mat[r][col] / mat[col][col];
            if factor == 0.0 {
                continue;
            }
            for c in col..d {
                mat[r][c] -= factor * mat[col][c];
            }
            rhs[r] -= factor * rhs[col];
        }
    }
    let mut x = [0.0f64; MAX_DIMENSION];
    for r in (0..d).rev() {
        let mut acc = rhs[r];
        for c in r + 1..d {
            acc -= mat[r][c] * x[c];
        }
        x[r] = acc / mat[r][r];
    }
    if x[..d].iter().any(|v| !v.is_finite()) {
        return None;
    }
    Some(x)
}

/// LP transcription into an abstract program: constraints are half-spaces and
/// the value of a set is the box-augmented lex-min vertex. Combinatorial
/// dimension `d`.
#[derive(Clone, Debug)]
pub struct LpProblem {
    cost: Vec<f64>,
    order: ValueOrder,
}

impl LpProblem {
    pub fn new(cost: Vec<f64>, order: ValueOrder) -> Self {
        assert!((2..=MAX_DIMENSION).contains(&cost.len()));
        LpProblem { cost, order }
    }

    pub fn dimension(&self) -> usize {
        self.cost.len()
    }

    pub fn cost(&self) -> &[f64] {
        &self.cost
    }
}

impl Problem for LpProblem {
    type Constraint = HalfSpace;
    type Value = LpValue;

    fn delta(&self) -> usize {
        self.cost.len()
    }

    fn value_of(&self, constraints: &[HalfSpace]) -> LpValue {
        let refs: Vec<&HalfSpace> = constraints.iter().collect();
        solve_box_lex(&self.cost, &refs, self.dimension())
    }

    fn cmp_values(&self, a: &LpValue, b: &LpValue) -> Ordering {
        match (a, b) {
            (LpValue::Infeasible, LpValue::Infeasible) => Ordering::Equal,
            (LpValue::Infeasible, _) => Ordering::Greater,
            (_, LpValue::Infeasible) => Ordering::Less,
            (
                LpValue::Optimum { cost: ca, point: pa, .. },
                LpValue::Optimum { cost: cb, point: pb, .. },
            ) => match self.order {
                ValueOrder::CostOnly => cmp_f64(*ca, *cb, VALUE_TOL),
                ValueOrder::CostThenLex => {
                    cmp_f64(*ca, *cb, VALUE_TOL).then_with(|| cmp_f64_slice(pa, pb, VALUE_TOL))
                }
            },
        }
    }

    fn value_is_infeasible(&self, v: &LpValue) -> bool {
        matches!(v, LpValue::Infeasible)
    }

    fn value_components(&self, v: &LpValue) -> Vec<f64> {
        match v {
            LpValue::Infeasible => vec![f64::INFINITY; self.dimension() + 1],
            LpValue::Optimum { cost, point, .. } => {
                let mut out = vec![*cost];
                out.extend_from_slice(point);
                out
            }
        }
    }

    /// With the cost-then-lex order the cached optimal vertex decides
    /// violation by a dot product: a satisfied constraint leaves the unique
    /// lex-minimal vertex optimal, a violated one cuts it off.
    fn violation_test(&self, basis: &Basis<HalfSpace, LpValue>, h: &HalfSpace) -> bool {
        match (self.order, basis.value()) {
            (_, LpValue::Infeasible) => false,
            (ValueOrder::CostThenLex, LpValue::Optimum { point, .. }) => !h.contains(point),
            (ValueOrder::CostOnly, _) => {
                let mut set = basis.constraints().to_vec();
                set.push(h.clone());
                self.cmp_values(&self.value_of(&set), basis.value()) == Ordering::Greater
            }
        }
    }

    /// Restricts the subset search to constraints active at the union's
    /// optimal vertex: any minimum-cardinality achieving subset lies inside
    /// the active set, so this is equivalent to (and much cheaper than) the
    /// full enumeration.
    fn basis_computation(
        &self,
        basis: &Basis<HalfSpace, LpValue>,
        h: &HalfSpace,
    ) -> Basis<HalfSpace, LpValue> {
        let mut union = basis.constraints().to_vec();
        union.push(h.clone());
        let target = self.value_of(&union);
        if self.order == ValueOrder::CostThenLex {
            if let LpValue::Optimum { point, .. } = &target {
                let active: Vec<HalfSpace> = union
                    .iter()
                    .filter(|hs| {
                        let slack = hs.b - hs.dot(point);
                        slack.abs() <= 100.0 * feas_tol(&hs.a, point, hs.b)
                    })
                    .cloned()
                    .collect();
                if !active.is_empty() {
                    let candidate = minimal_achieving_subset(self, &active, &target);
                    if self.cmp_values(candidate.value(), &target) == Ordering::Equal {
                        return candidate;
                    }
                }
            }
        }
        minimal_achieving_subset(self, &union, &target)
    }
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    // Box-Muller; u1 kept away from zero
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

fn gaussian_row<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Vec<f64> {
    loop {
        let row: Vec<f64> = (0..d).map(|_| gaussian(rng)).collect();
        if row.iter().map(|x| x * x).sum::<f64>().sqrt() > 1e-12 {
            return row;
        }
    }
}

/// Stochastic LP family with Gaussian rows and cost, and offsets equal to the
/// row norms: every constraint hyperplane is at unit distance from the origin
/// and the origin itself is feasible.
pub fn gen_model_a<R: Rng + ?Sized>(n: usize, d: usize, rng: &mut R) -> LinearProgram {
    assert!(n >= 1 && (2..=MAX_DIMENSION).contains(&d));
    let c: Vec<f64> = (0..d).map(|_| gaussian(rng)).collect();
    let constraints: Vec<HalfSpace> = (0..n)
        .map(|_| {
            let a = gaussian_row(rng, d);
            let b = a.iter().map(|x| x * x).sum::<f64>().sqrt();
            HalfSpace { a, b }
        })
        .collect();
    LinearProgram { d, c, constraints }
}

/// Stochastic LP family with Gaussian rows, uniform `[0,1]` offsets and the
/// cost drawn from the row space (`c = Aᵀ ĉ` with uniform `ĉ`); feasible at
/// the origin by construction.
pub fn gen_model_b<R: Rng + ?Sized>(n: usize, d: usize, rng: &mut R) -> LinearProgram {
    assert!(n >= 1 && (2..=MAX_DIMENSION).contains(&d));
    let rows: Vec<Vec<f64>> = (0..n).map(|_| gaussian_row(rng, d)).collect();
    let b: Vec<f64> = (0..n).map(|_| rng.gen()).collect();
    let c_hat: Vec<f64> = (0..n).map(|_| rng.gen()).collect();
    let mut c = vec![0.0; d];
    for (row, ch) in rows.iter().zip(&c_hat) {
        for (cj, aj) in c.iter_mut().zip(row) {
            *cj += ch * aj;
        }
    }
    let constraints: Vec<HalfSpace> =
        rows.into_iter().zip(b).map(|(a, b)| HalfSpace { a, b }).collect();
    LinearProgram { d, c, constraints }
}
