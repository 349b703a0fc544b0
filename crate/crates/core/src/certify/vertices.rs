//! Vertex enumeration for polyhedral 1-symmetric bodies.
//!
//! A vertex `x` sorted into nonincreasing moduli splits into `b` blocks of
//! equal value plus a zero block. Restricted to that block pattern every
//! row is linear in the block values, and a vertex must be pinned down by
//! `b` linearly independent active rows. So candidates come from solving
//! every `b × b` system (row subset × block composition); survivors must
//! have strictly decreasing positive values, gauge exactly one and a
//! full-dimensional normal cone.

use std::collections::BTreeSet;

use num::{One, Signed, Zero};

use crate::bodies::SymBody;
use crate::combinatorics::{combinations, multiset_permutations};
use crate::error::{Error, Result};
use crate::rational::{solve, Q};
use crate::subdiff::is_vertex;

pub const DEFAULT_VERTEX_CAP: usize = 8;
/// Upper bound on the number of vertices materialized by orbit expansion.
pub const MAX_VERTICES: usize = 1 << 21;

/// Compositions of `total` into `parts` positive integers.
fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 0 {
        return if total == 0 { vec![vec![]] } else { vec![] };
    }
    if total < parts {
        return vec![];
    }
    // choose parts-1 cut points among total-1 gaps
    combinations(total - 1, parts - 1)
        .into_iter()
        .map(|cuts| {
            let mut out = Vec::with_capacity(parts);
            let mut prev = 0;
            for c in cuts {
                out.push(c + 1 - prev);
                prev = c + 1;
            }
            out.push(total - prev);
            out
        })
        .collect()
}

/// Vertices with nonnegative, nonincreasing coordinates.
pub fn canonical_vertices(body: &SymBody) -> Result<Vec<Vec<Q>>> {
    let w = body.weights_or_err()?;
    let n = body.dim();
    let mut found: BTreeSet<Vec<Q>> = BTreeSet::new();
    for b in 1..=n.min(w.len()) {
        for zeros in 0..=n - b {
            for comp in compositions(n - zeros, b) {
                let mut starts = Vec::with_capacity(b);
                let mut s = 0;
                for &c in &comp {
                    starts.push(s);
                    s += c;
                }
                let seg_sums: Vec<Vec<Q>> = w
                    .iter()
                    .map(|row| {
                        comp.iter()
                            .zip(&starts)
                            .map(|(&len, &st)| row[st..st + len].iter().fold(Q::zero(), |a, v| a + v))
                            .collect()
                    })
                    .collect();
                for rows in combinations(w.len(), b) {
                    let a: Vec<Vec<Q>> = rows.iter().map(|&j| seg_sums[j].clone()).collect();
                    let Some(t) = solve(&a, &vec![Q::one(); b]) else { continue };
                    if !t.iter().all(Signed::is_positive) || t.windows(2).any(|p| p[0] <= p[1]) {
                        continue;
                    }
                    let mut x = Vec::with_capacity(n);
                    for (val, &len) in t.iter().zip(&comp) {
                        x.extend(std::iter::repeat_n(val.clone(), len));
                    }
                    x.extend(std::iter::repeat_n(Q::zero(), zeros));
                    if found.contains(&x) || !body.norm_exact(&x)?.is_one() {
                        continue;
                    }
                    if is_vertex(body, &x)? {
                        found.insert(x);
                    }
                }
            }
        }
    }
    if found.is_empty() {
        return Err(Error::Invariant("no vertices found for a polyhedral body".into()));
    }
    Ok(found.into_iter().collect())
}

/// All signed permutations of a point, deduplicated.
pub fn orbit(x: &[Q]) -> Vec<Vec<Q>> {
    let mut out = Vec::new();
    for perm in multiset_permutations(x) {
        let nz: Vec<usize> = (0..perm.len()).filter(|&i| !perm[i].is_zero()).collect();
        for mask in 0u64..1 << nz.len() {
            let mut v = perm.clone();
            for (b, &i) in nz.iter().enumerate() {
                if mask >> b & 1 == 1 {
                    v[i] = -v[i].clone();
                }
            }
            out.push(v);
        }
    }
    out
}

/// Number of points in the signed-permutation orbit of a canonical point.
pub fn orbit_size(x: &[Q]) -> u128 {
    let n = x.len() as u128;
    let mut size: u128 = (1..=n).product();
    let mut i = 0;
    while i < x.len() {
        let mut j = i;
        while j < x.len() && x[j] == x[i] {
            j += 1;
        }
        size /= (1..=(j - i) as u128).product::<u128>();
        if !x[i].is_zero() {
            size <<= j - i;
        }
        i = j;
    }
    size
}

/// Every vertex of a polyhedral body, sorted lexicographically.
pub fn enumerate_vertices(body: &SymBody, cap: usize) -> Result<Vec<Vec<Q>>> {
    if body.dim() > cap {
        return Err(Error::CapExceeded(format!("vertex enumeration at n = {} > {cap}", body.dim())));
    }
    let reps = canonical_vertices(body)?;
    let total: u128 = reps.iter().map(|r| orbit_size(r)).sum();
    if total > MAX_VERTICES as u128 {
        return Err(Error::CapExceeded(format!("{total} vertices > {MAX_VERTICES}")));
    }
    let mut all: Vec<Vec<Q>> = reps.iter().flat_map(|r| orbit(r)).collect();
    all.sort();
    all.dedup();
    Ok(all)
}
