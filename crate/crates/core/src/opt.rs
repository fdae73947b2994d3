//! Abstract-optimization framework: the problem contract, fixed-cardinality
//! candidate bases, the randomized `SUBEX_lp` solver and brute-force oracles.
//!
//! A problem is a pair of a finite constraint multiset and a value function on
//! constraint subsets, taking values in a linearly ordered set, that satisfies
//! the monotonicity and locality axioms. Solvers only touch the problem through
//! two primitives: the violation test and the basis computation. Both have
//! generic implementations in terms of [`Problem::value_of`], which concrete
//! problems may override with cheaper direct tests.

use std::cmp::Ordering;

use rand::Rng;
use thiserror::Error;

use crate::util::for_each_combination;

/// Contract for an abstract optimization program.
///
/// Implementations provide the combinatorial dimension, an exact value for
/// small constraint multisets (up to `delta() + 1` elements, the only sizes the
/// primitives ever need), and a total order on values. The order must have the
/// most-relaxed value as its minimum; an infeasible top element is signalled
/// through [`Problem::value_is_infeasible`].
pub trait Problem {
    type Constraint: Clone + PartialEq + std::fmt::Debug;
    type Value: Clone + std::fmt::Debug;

    /// Combinatorial dimension: every constraint set has a basis with at most
    /// this many elements.
    fn delta(&self) -> usize;

    /// Exact value of a small constraint multiset.
    fn value_of(&self, constraints: &[Self::Constraint]) -> Self::Value;

    /// Total order on values; numeric components compare with tolerance.
    fn cmp_values(&self, a: &Self::Value, b: &Self::Value) -> Ordering;

    /// True when `v` is the infeasible top element of the value order.
    fn value_is_infeasible(&self, _v: &Self::Value) -> bool {
        false
    }

    /// Numeric rendering of a value for traces and CSV export.
    fn value_components(&self, v: &Self::Value) -> Vec<f64>;

    /// Violation test primitive: is `h` violated by `basis`, i.e. does adding
    /// `h` strictly increase the value?
    fn violation_test(&self, basis: &Basis<Self::Constraint, Self::Value>, h: &Self::Constraint) -> bool {
        let mut set = basis.constraints().to_vec();
        set.push(h.clone());
        self.cmp_values(&self.value_of(&set), basis.value()) == Ordering::Greater
    }

    /// Basis computation primitive: a basis of `basis ∪ {h}`, found as the
    /// minimum-cardinality subset achieving the union's value (ties broken by
    /// lexicographic index order) and padded back to `delta()` elements.
    fn basis_computation(
        &self,
        basis: &Basis<Self::Constraint, Self::Value>,
        h: &Self::Constraint,
    ) -> Basis<Self::Constraint, Self::Value> {
        let mut union = basis.constraints().to_vec();
        union.push(h.clone());
        let target = self.value_of(&union);
        minimal_achieving_subset(self, &union, &target)
    }
}

/// Searches subsets of `union` (sizes 1..=delta, lexicographic index order)
/// for the first one whose value equals `target`. If floating-point noise
/// leaves no exact match, falls back to the subset with the largest value,
/// which preserves the monotonicity of basis computations.
pub(crate) fn minimal_achieving_subset<P: Problem + ?Sized>(
    problem: &P,
    union: &[P::Constraint],
    target: &P::Value,
) -> Basis<P::Constraint, P::Value> {
    let delta = problem.delta();
    let mut best: Option<(P::Value, Vec<P::Constraint>)> = None;
    for size in 1..=delta.min(union.len()) {
        let mut found: Option<Vec<P::Constraint>> = None;
        for_each_combination(union.len(), size, |idx| {
            let subset: Vec<P::Constraint> = idx.iter().map(|&i| union[i].clone()).collect();
            let value = problem.value_of(&subset);
            if problem.cmp_values(&value, target) == Ordering::Equal {
                found = Some(subset);
                return false;
            }
            match &best {
                Some((b, _)) if problem.cmp_values(&value, b) != Ordering::Greater => {}
                _ => best = Some((value, subset)),
            }
            true
        });
        if let Some(subset) = found {
            return Basis::from_constraints(problem, &subset);
        }
    }
    let (_, subset) = best.expect("nonempty union yields a candidate subset");
    Basis::from_constraints(problem, &subset)
}

/// Candidate basis: exactly `delta` constraints (repeats allowed) together
/// with their cached value.
#[derive(Clone, Debug)]
pub struct Basis<C, V> {
    constraints: Vec<C>,
    value: V,
}

impl<C: Clone + PartialEq + std::fmt::Debug, V: Clone + std::fmt::Debug> Basis<C, V> {
    /// Builds a basis from a nonempty constraint list, padding with repeats of
    /// the first element up to the problem's combinatorial dimension.
    pub fn from_constraints<P>(problem: &P, constraints: &[C]) -> Self
    where
        P: Problem<Constraint = C, Value = V> + ?Sized,
    {
        assert!(!constraints.is_empty(), "basis needs at least one constraint");
        assert!(
            constraints.len() <= problem.delta(),
            "basis cannot exceed the combinatorial dimension"
        );
        let mut padded = constraints.to_vec();
        while padded.len() < problem.delta() {
            padded.push(constraints[0].clone());
        }
        let value = problem.value_of(&padded);
        Basis { constraints: padded, value }
    }

    /// Basis made of `delta` copies of a single constraint.
    pub fn from_single<P>(problem: &P, constraint: &C) -> Self
    where
        P: Problem<Constraint = C, Value = V> + ?Sized,
    {
        Basis::from_constraints(problem, std::slice::from_ref(constraint))
    }

    pub fn constraints(&self) -> &[C] {
        &self.constraints
    }

    pub fn value(&self) -> &V {
        &self.value
    }

    /// Distinct constraints of the basis, first occurrence order.
    pub fn distinct(&self) -> Vec<C> {
        let mut out: Vec<C> = Vec::new();
        for c in &self.constraints {
            if !out.iter().any(|d| d == c) {
                out.push(c.clone());
            }
        }
        out
    }

    /// Multiset equality of the stored constraints.
    pub fn same_constraints(&self, other: &Self) -> bool {
        multiset_eq(&self.constraints, &other.constraints)
    }
}

/// Multiset equality over `PartialEq` elements.
pub fn multiset_eq<C: PartialEq>(a: &[C], b: &[C]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut used = vec![false; b.len()];
    'outer: for x in a {
        for (i, y) in b.iter().enumerate() {
            if !used[i] && x == y {
                used[i] = true;
                continue 'outer;
            }
        }
        return false;
    }
    true
}

/// Indices of elements of `g` left over after removing one copy of each
/// element of `c` (multiset difference `g \ c`).
fn multiset_difference_indices<C: PartialEq>(g: &[C], c: &[C]) -> Vec<usize> {
    let mut removed = vec![false; g.len()];
    'outer: for x in c {
        for (i, y) in g.iter().enumerate() {
            if !removed[i] && x == y {
                removed[i] = true;
                continue 'outer;
            }
        }
        // element of c missing from g: callers violated the containment
        // precondition; treat as nothing to remove
    }
    (0..g.len()).filter(|&i| !removed[i]).collect()
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("candidate basis has infeasible value")]
    InfeasibleBase,
    #[error("primitive-call budget of {budget} exceeded; problem contract is likely inconsistent")]
    RecursionBudgetExceeded { budget: u64 },
    #[error("constraint set of {size} elements exceeds the brute-force guard of {guard}")]
    TooLarge { size: usize, guard: usize },
}

/// Default cap on violation-test plus basis-computation invocations per
/// `subex_lp` call.
pub const DEFAULT_PRIMITIVE_BUDGET: u64 = 10_000_000;

/// Outcome of a `subex_lp` run.
#[derive(Clone, Debug)]
pub struct SubexRun<C, V> {
    pub basis: Basis<C, V>,
    /// Number of primitive invocations (violation tests + basis computations).
    pub primitive_calls: u64,
}

/// Randomized recursive solver for abstract optimization programs.
///
/// Returns a basis of `constraints` whose value equals the value of the whole
/// multiset. `start` must be contained in `constraints` as a multiset. The
/// recursion follows the classic scheme: remove a random constraint outside
/// the candidate basis, solve the rest, test the removed constraint and, on
/// violation, recompute the basis and restart on the full set.
pub fn subex_lp<P: Problem, R: Rng + ?Sized>(
    problem: &P,
    constraints: &[P::Constraint],
    start: &Basis<P::Constraint, P::Value>,
    rng: &mut R,
) -> Result<SubexRun<P::Constraint, P::Value>, SolveError> {
    subex_lp_budgeted(problem, constraints, start, rng, DEFAULT_PRIMITIVE_BUDGET)
}

/// [`subex_lp`] with an explicit primitive-call budget.
pub fn subex_lp_budgeted<P: Problem, R: Rng + ?Sized>(
    problem: &P,
    constraints: &[P::Constraint],
    start: &Basis<P::Constraint, P::Value>,
    rng: &mut R,
    budget: u64,
) -> Result<SubexRun<P::Constraint, P::Value>, SolveError> {
    if problem.value_is_infeasible(start.value()) {
        return Err(SolveError::InfeasibleBase);
    }
    let mut calls = 0u64;
    let basis = subex_recurse(problem, constraints, start, rng, &mut calls, budget)?;
    Ok(SubexRun { basis, primitive_calls: calls })
}

fn subex_recurse<P: Problem, R: Rng + ?Sized>(
    problem: &P,
    g: &[P::Constraint],
    c: &Basis<P::Constraint, P::Value>,
    rng: &mut R,
    calls: &mut u64,
    budget: u64,
) -> Result<Basis<P::Constraint, P::Value>, SolveError> {
    // Restarts on the full set are flattened into this loop so the stack
    // depth stays bounded by the size of `g`.
    let mut current = c.clone();
    loop {
        let extra = multiset_difference_indices(g, current.constraints());
        if extra.is_empty() {
            return Ok(current);
        }
        // Fast path: when no constraint violates the candidate, the recursion
        // provably unwinds to the candidate itself, so skip it.
        let mut any_violation = false;
        for &i in &extra {
            *calls += 1;
            if *calls > budget {
                return Err(SolveError::RecursionBudgetExceeded { budget });
            }
            if problem.violation_test(&current, &g[i]) {
                any_violation = true;
                break;
            }
        }
        if !any_violation {
            return Ok(current);
        }

        let pick = extra[rng.gen_range(0..extra.len())];
        let mut rest: Vec<P::Constraint> = Vec::with_capacity(g.len() - 1);
        rest.extend_from_slice(&g[..pick]);
        rest.extend_from_slice(&g[pick + 1..]);
        let b = subex_recurse(problem, &rest, &current, rng, calls, budget)?;

        *calls += 1;
        if *calls > budget {
            return Err(SolveError::RecursionBudgetExceeded { budget });
        }
        if !problem.violation_test(&b, &g[pick]) {
            return Ok(b);
        }
        *calls += 1;
        if *calls > budget {
            return Err(SolveError::RecursionBudgetExceeded { budget });
        }
        let improved = problem.basis_computation(&b, &g[pick]);
        // Restart only on strict improvement: a violation whose basis
        // recomputation gains nothing beyond the value tolerance is
        // floating-point noise, and restarting on it would cycle.
        if problem.cmp_values(improved.value(), b.value()) == Ordering::Greater {
            current = improved;
        } else {
            if std::env::var_os("CCONS_DEBUG_GUARD").is_some() {
                eprintln!(
                    "guard: violation without improvement; basis {:?} -> {:?}, h {:?}",
                    b.value(),
                    improved.value(),
                    g[pick]
                );
            }
            return Ok(b);
        }
    }
}

/// Guard on the brute-force oracle: enumeration over subsets of a constraint
/// set larger than this is rejected.
pub const BRUTE_FORCE_GUARD: usize = 25;

/// Value of an arbitrary constraint multiset, computed as the maximum value
/// over all subsets of size at most `delta` (the exhaustive closure used by
/// the oracles and checkers; no separate analytic routine).
pub fn set_value<P: Problem>(problem: &P, constraints: &[P::Constraint]) -> Result<P::Value, SolveError> {
    if constraints.len() > BRUTE_FORCE_GUARD {
        return Err(SolveError::TooLarge { size: constraints.len(), guard: BRUTE_FORCE_GUARD });
    }
    assert!(!constraints.is_empty(), "set_value needs at least one constraint");
    let mut best: Option<P::Value> = None;
    let delta = problem.delta();
    for size in 1..=delta.min(constraints.len()) {
        for_each_combination(constraints.len(), size, |idx| {
            let subset: Vec<P::Constraint> = idx.iter().map(|&i| constraints[i].clone()).collect();
            let value = problem.value_of(&subset);
            match &best {
                Some(b) if problem.cmp_values(&value, b) != Ordering::Greater => {}
                _ => best = Some(value),
            }
            true
        });
    }
    Ok(best.expect("nonempty constraint set yields a value"))
}

/// Brute-force basis oracle: enumerates all subsets of size at most `delta`,
/// returning the minimum-cardinality subset whose value equals the exhaustive
/// closure value of the whole set. Ties break by lexicographic index order,
/// so the result is deterministic.
pub fn brute_force_basis<P: Problem>(
    problem: &P,
    constraints: &[P::Constraint],
) -> Result<Basis<P::Constraint, P::Value>, SolveError> {
    let target = set_value(problem, constraints)?;
    let delta = problem.delta();
    for size in 1..=delta.min(constraints.len()) {
        let mut found: Option<Vec<P::Constraint>> = None;
        for_each_combination(constraints.len(), size, |idx| {
            let subset: Vec<P::Constraint> = idx.iter().map(|&i| constraints[i].clone()).collect();
            if problem.cmp_values(&problem.value_of(&subset), &target) == Ordering::Equal {
                found = Some(subset);
                false
            } else {
                true
            }
        });
        if let Some(subset) = found {
            return Ok(Basis::from_constraints(problem, &subset));
        }
    }
    // Unreachable for well-formed problems: some subset of size <= delta
    // attains the closure value by construction.
    unreachable!("no subset of size <= delta attains the closure value")
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Toy problem for exercising the generic machinery: constraints are
    /// integers, the value of a set is its maximum. Combinatorial dimension 1.
    struct MaxProblem;

    impl Problem for MaxProblem {
        type Constraint = i64;
        type Value = i64;

        fn delta(&self) -> usize {
            1
        }

        fn value_of(&self, constraints: &[i64]) -> i64 {
            *constraints.iter().max().expect("nonempty")
        }

        fn cmp_values(&self, a: &i64, b: &i64) -> Ordering {
            a.cmp(b)
        }

        fn value_components(&self, v: &i64) -> Vec<f64> {
            vec![*v as f64]
        }
    }

    #[test]
    fn subex_returns_start_when_set_equals_start() {
        let p = MaxProblem;
        let start = Basis::from_single(&p, &7);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let run = subex_lp(&p, &[7], &start, &mut rng).unwrap();
        assert!(run.basis.same_constraints(&start));
    }

    use rand::SeedableRng;

    #[test]
    fn subex_finds_max() {
        let p = MaxProblem;
        let g = vec![3, 9, 1, 9, 4, -2];
        let start = Basis::from_single(&p, &3);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let run = subex_lp(&p, &g, &start, &mut rng).unwrap();
        assert_eq!(*run.basis.value(), 9);
        assert_eq!(run.basis.constraints(), &[9]);
    }

    #[test]
    fn subex_deterministic_per_seed() {
        let p = MaxProblem;
        let g: Vec<i64> = vec![5, 1, 8, 3, 8, 2, 0, 7];
        let start = Basis::from_single(&p, &5);
        let run = |seed: u64| {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            subex_lp(&p, &g, &start, &mut rng).unwrap().primitive_calls
        };
        assert_eq!(run(11), run(11));
    }

    #[test]
    fn brute_force_single_constraint_pads() {
        let p = MaxProblem;
        let basis = brute_force_basis(&p, &[42]).unwrap();
        assert_eq!(basis.constraints(), &[42]);
        assert_eq!(*basis.value(), 42);
    }

    #[test]
    fn brute_force_guard() {
        let p = MaxProblem;
        let big: Vec<i64> = (0..30).collect();
        assert!(matches!(
            brute_force_basis(&p, &big),
            Err(SolveError::TooLarge { .. })
        ));
    }

    #[test]
    fn multiset_ops() {
        assert!(multiset_eq(&[1, 2, 2], &[2, 1, 2]));
        assert!(!multiset_eq(&[1, 2, 2], &[1, 1, 2]));
        let d = multiset_difference_indices(&[4, 5, 4, 6], &[4, 6]);
        assert_eq!(d, vec![1, 2]);
    }

    #[test]
    fn basis_padding_and_distinct() {
        struct Dim3;
        impl Problem for Dim3 {
            type Constraint = i64;
            type Value = i64;
            fn delta(&self) -> usize {
                3
            }
            fn value_of(&self, cs: &[i64]) -> i64 {
                *cs.iter().max().unwrap()
            }
            fn cmp_values(&self, a: &i64, b: &i64) -> Ordering {
                a.cmp(b)
            }
            fn value_components(&self, v: &i64) -> Vec<f64> {
                vec![*v as f64]
            }
        }
        let p = Dim3;
        let b = Basis::from_constraints(&p, &[8, 2]);
        assert_eq!(b.constraints(), &[8, 2, 8]);
        assert_eq!(b.distinct(), vec![8, 2]);
    }
}
