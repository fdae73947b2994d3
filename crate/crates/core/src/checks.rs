//! Axiom and persistency checkers.
//!
//! These run against any [`Problem`] implementation over a concrete constraint
//! multiset, computing subset values through the exhaustive brute-force
//! closure (never through the solver under test). They are the instrument for
//! validating that a user problem actually is an abstract optimization
//! program, and for demonstrating that broken value orders fail locality.

use std::cmp::Ordering;
use std::collections::HashMap;

use rand::Rng;

use crate::opt::{Problem, SolveError};
use crate::util::for_each_combination;

/// Guard on persistency search: subset enumeration beyond this is rejected.
pub const PERSISTENCY_GUARD: usize = 12;

/// Guard on axiom checking (brute-force closure must stay tractable).
pub const AXIOM_GUARD: usize = 16;

/// Outcome of an axiom-checking run. Empty failure lists mean a pass.
#[derive(Clone, Debug, Default)]
pub struct AxiomReport {
    pub trials: usize,
    pub monotonicity_failures: Vec<AxiomWitness>,
    pub locality_failures: Vec<AxiomWitness>,
    pub closure_failures: Vec<AxiomWitness>,
}

impl AxiomReport {
    pub fn passed(&self) -> bool {
        self.monotonicity_failures.is_empty()
            && self.locality_failures.is_empty()
            && self.closure_failures.is_empty()
    }

    pub fn failure_count(&self) -> usize {
        self.monotonicity_failures.len()
            + self.locality_failures.len()
            + self.closure_failures.len()
    }
}

/// A concrete axiom violation: index sets into the checked constraint slice
/// plus a human-readable account of the values involved.
#[derive(Clone, Debug)]
pub struct AxiomWitness {
    pub f_indices: Vec<usize>,
    pub g_indices: Vec<usize>,
    pub h_index: Option<usize>,
    pub detail: String,
}

/// Memoized brute-force closure values over index subsets of a fixed slice.
struct ClosureCache<'a, P: Problem> {
    problem: &'a P,
    constraints: &'a [P::Constraint],
    small: HashMap<Vec<usize>, P::Value>,
}

impl<'a, P: Problem> ClosureCache<'a, P> {
    fn new(problem: &'a P, constraints: &'a [P::Constraint]) -> Self {
        ClosureCache { problem, constraints, small: HashMap::new() }
    }

    /// Value of a small subset (size <= delta), memoized.
    fn small_value(&mut self, indices: &[usize]) -> P::Value {
        if let Some(v) = self.small.get(indices) {
            return v.clone();
        }
        let subset: Vec<P::Constraint> =
            indices.iter().map(|&i| self.constraints[i].clone()).collect();
        let value = self.problem.value_of(&subset);
        self.small.insert(indices.to_vec(), value.clone());
        value
    }

    /// Closure value of an arbitrary subset: maximum over its subsets of size
    /// at most delta.
    fn closure_value(&mut self, indices: &[usize]) -> P::Value {
        let delta = self.problem.delta();
        let mut best: Option<P::Value> = None;
        for size in 1..=delta.min(indices.len()) {
            let mut keys: Vec<Vec<usize>> = Vec::new();
            for_each_combination(indices.len(), size, |pos| {
                keys.push(pos.iter().map(|&p| indices[p]).collect());
                true
            });
            for key in keys {
                let v = self.small_value(&key);
                match &best {
                    Some(b) if self.problem.cmp_values(&v, b) != Ordering::Greater => {}
                    _ => best = Some(v),
                }
            }
        }
        best.expect("nonempty subset")
    }

    fn closure_with(&mut self, indices: &[usize], extra: usize) -> P::Value {
        if indices.contains(&extra) {
            return self.closure_value(indices);
        }
        let mut with: Vec<usize> = indices.to_vec();
        with.push(extra);
        with.sort_unstable();
        self.closure_value(&with)
    }
}

fn sample_nonempty_subset<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<usize> {
    loop {
        let subset: Vec<usize> = (0..n).filter(|_| rng.gen::<bool>()).collect();
        if !subset.is_empty() {
            return subset;
        }
    }
}

fn sample_proper_subset<R: Rng + ?Sized>(rng: &mut R, of: &[usize]) -> Option<Vec<usize>> {
    if of.len() < 2 {
        return None;
    }
    loop {
        let subset: Vec<usize> = of.iter().copied().filter(|_| rng.gen::<bool>()).collect();
        if !subset.is_empty() && subset.len() < of.len() {
            return Some(subset);
        }
    }
}

/// Samples nested subset pairs and single constraints, checking monotonicity,
/// locality, and the single-violator closure property
/// `phi(F ∪ G) > phi(F)  iff  some g in G has phi(F ∪ {g}) > phi(F)`.
///
/// Violations are collected with witnesses rather than aborting the run.
pub fn check_axioms<P: Problem, R: Rng + ?Sized>(
    problem: &P,
    constraints: &[P::Constraint],
    trials: usize,
    rng: &mut R,
) -> Result<AxiomReport, SolveError> {
    let n = constraints.len();
    if n > AXIOM_GUARD {
        return Err(SolveError::TooLarge { size: n, guard: AXIOM_GUARD });
    }
    assert!(n >= 2, "axiom checking needs at least two constraints");
    let mut cache = ClosureCache::new(problem, constraints);
    let mut report = AxiomReport { trials, ..Default::default() };

    for _ in 0..trials {
        let g = sample_nonempty_subset(rng, n);
        let h = rng.gen_range(0..n);
        let phi_g = cache.closure_value(&g);

        if let Some(f) = sample_proper_subset(rng, &g) {
            let phi_f = cache.closure_value(&f);
            // monotonicity: F ⊂ G implies phi(F) <= phi(G)
            if problem.cmp_values(&phi_f, &phi_g) == Ordering::Greater {
                report.monotonicity_failures.push(AxiomWitness {
                    f_indices: f.clone(),
                    g_indices: g.clone(),
                    h_index: None,
                    detail: format!("phi(F) = {phi_f:?} exceeds phi(G) = {phi_g:?}"),
                });
            }
            // locality: equal finite values propagate violations downward
            if problem.cmp_values(&phi_f, &phi_g) == Ordering::Equal
                && !problem.value_is_infeasible(&phi_f)
            {
                let phi_gh = cache.closure_with(&g, h);
                if problem.cmp_values(&phi_gh, &phi_g) == Ordering::Greater {
                    let phi_fh = cache.closure_with(&f, h);
                    if problem.cmp_values(&phi_fh, &phi_f) != Ordering::Greater {
                        report.locality_failures.push(AxiomWitness {
                            f_indices: f.clone(),
                            g_indices: g.clone(),
                            h_index: Some(h),
                            detail: format!(
                                "h violates G (phi {phi_g:?} -> {phi_gh:?}) but not F \
                                 (phi {phi_f:?} -> {phi_fh:?})"
                            ),
                        });
                    }
                }
            }
        }

        // closure lemma on two independent subsets
        let f2 = sample_nonempty_subset(rng, n);
        let g2 = sample_nonempty_subset(rng, n);
        let phi_f2 = cache.closure_value(&f2);
        let mut union: Vec<usize> = f2.clone();
        for &i in &g2 {
            if !union.contains(&i) {
                union.push(i);
            }
        }
        union.sort_unstable();
        let phi_union = cache.closure_value(&union);
        let union_grows = problem.cmp_values(&phi_union, &phi_f2) == Ordering::Greater;
        let single_grows = g2.iter().any(|&gi| {
            let v = cache.closure_with(&f2, gi);
            problem.cmp_values(&v, &phi_f2) == Ordering::Greater
        });
        if union_grows != single_grows {
            report.closure_failures.push(AxiomWitness {
                f_indices: f2,
                g_indices: g2,
                h_index: None,
                detail: format!(
                    "union violation ({union_grows}) disagrees with single-constraint \
                     violation ({single_grows}); phi(F) = {phi_f2:?}, phi(F ∪ G) = {phi_union:?}"
                ),
            });
        }
    }
    Ok(report)
}

/// Witness of a persistency failure: constraint `constraint_index` belongs to
/// the global basis but not to the basis of `subset_indices`.
#[derive(Clone, Debug)]
pub struct PersistencyWitness {
    pub constraint_index: usize,
    pub subset_indices: Vec<usize>,
}

/// Checks whether every global-basis element stays in the basis of every
/// subset containing it. Bases are the deterministic brute-force ones
/// (minimum cardinality, lexicographic index tie-break).
pub fn persistency_check<P: Problem>(
    problem: &P,
    constraints: &[P::Constraint],
) -> Result<(bool, Option<PersistencyWitness>), SolveError> {
    let n = constraints.len();
    if n > PERSISTENCY_GUARD {
        return Err(SolveError::TooLarge { size: n, guard: PERSISTENCY_GUARD });
    }
    assert!(n >= 1);
    let mut cache = ClosureCache::new(problem, constraints);
    let all: Vec<usize> = (0..n).collect();
    let global_basis = basis_indices(problem, &mut cache, &all);

    for &h in &global_basis {
        // every subset containing h, built from a bitmask over the others
        let others: Vec<usize> = (0..n).filter(|&i| i != h).collect();
        for mask in 0u32..(1u32 << others.len()) {
            let mut subset = vec![h];
            for (bit, &idx) in others.iter().enumerate() {
                if mask & (1 << bit) != 0 {
                    subset.push(idx);
                }
            }
            subset.sort_unstable();
            let basis = basis_indices(problem, &mut cache, &subset);
            if !basis.contains(&h) {
                return Ok((false, Some(PersistencyWitness {
                    constraint_index: h,
                    subset_indices: subset,
                })));
            }
        }
    }
    Ok((true, None))
}

/// Deterministic brute-force basis of an index subset: the smallest subset
/// (then lexicographically first) whose value matches the closure value.
fn basis_indices<P: Problem>(
    problem: &P,
    cache: &mut ClosureCache<P>,
    indices: &[usize],
) -> Vec<usize> {
    let target = cache.closure_value(indices);
    let delta = problem.delta();
    for size in 1..=delta.min(indices.len()) {
        let mut keys: Vec<Vec<usize>> = Vec::new();
        for_each_combination(indices.len(), size, |pos| {
            keys.push(pos.iter().map(|&p| indices[p]).collect());
            true
        });
        for key in keys {
            let v = cache.small_value(&key);
            if problem.cmp_values(&v, &target) == Ordering::Equal {
                return key;
            }
        }
    }
    unreachable!("closure value is attained by some subset of size <= delta")
}

/// Searches seeded random planar LPs with four constraints until one fails
/// the persistency check: an element of the global basis that drops out of
/// the basis of some subset containing it. Such instances are exactly the
/// ones where dropping constraint re-examination can poison a distributed
/// run. Returns the instance and the witness.
pub fn find_nonpersistent_lp(
    seed: u64,
    max_tries: usize,
) -> Option<(crate::lp::LinearProgram, PersistencyWitness)> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..max_tries {
        let lp = crate::lp::gen_model_a(4, 2, &mut rng);
        let problem = lp.as_problem();
        if let Ok((false, Some(witness))) = persistency_check(&problem, &lp.constraints) {
            return Some((lp, witness));
        }
    }
    None
}
