//! Small shared helpers: tolerant float comparison, subset enumeration,
//! seed derivation and low-discrepancy sampling.

use std::cmp::Ordering;

/// Absolute tolerance used by value-order comparisons throughout the crate.
pub const VALUE_TOL: f64 = 1e-9;

/// Compares two floats with an absolute tolerance: values within `tol` of each
/// other are `Equal`.
pub fn cmp_f64(a: f64, b: f64, tol: f64) -> Ordering {
    if (a - b).abs() <= tol {
        Ordering::Equal
    } else if a < b {
        Ordering::Less
    } else {
        Ordering::Greater
    }
}

/// Lexicographic tolerant comparison of two equal-length float slices.
pub fn cmp_f64_slice(a: &[f64], b: &[f64], tol: f64) -> Ordering {
    debug_assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(b.iter()) {
        match cmp_f64(*x, *y, tol) {
            Ordering::Equal => continue,
            ord => return ord,
        }
    }
    Ordering::Equal
}

/// Calls `f` on every `k`-element index combination of `0..n`, in
/// lexicographic order. Returning `false` from `f` stops the enumeration.
pub fn for_each_combination(n: usize, k: usize, mut f: impl FnMut(&[usize]) -> bool) {
    if k > n {
        return;
    }
    if k == 0 {
        f(&[]);
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        if !f(&idx) {
            return;
        }
        // advance to the next combination
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Derives a child seed from a master seed and a tag sequence. Uses splitmix64
/// mixing so nearby tags produce unrelated streams; stable across platforms.
pub fn derive_seed(master: u64, tags: &[u64]) -> u64 {
    let mut state = master ^ 0x9e37_79b9_7f4a_7c15;
    for &t in tags {
        state = splitmix64(state.wrapping_add(splitmix64(t)));
    }
    splitmix64(state)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// First `count` points of the 2-D Halton sequence (bases 2 and 3), scaled to
/// the rectangle `[x0, x1] x [y0, y1]`.
pub fn halton_points(count: usize, x0: f64, x1: f64, y0: f64, y1: f64) -> Vec<(f64, f64)> {
    (1..=count)
        .map(|i| {
            let u = radical_inverse(i as u64, 2);
            let v = radical_inverse(i as u64, 3);
            (x0 + u * (x1 - x0), y0 + v * (y1 - y0))
        })
        .collect()
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut inv = 0.0;
    let mut frac = 1.0 / base as f64;
    while i > 0 {
        inv += (i % base) as f64 * frac;
        i /= base;
        frac /= base as f64;
    }
    inv
}
