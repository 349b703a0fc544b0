//! Subdifferential calculus for 1-symmetric gauges.
//!
//! At a point `x` the subdifferential of a dual-orbit gauge is the convex
//! hull, over active rows `j`, of the weight vectors `w^j` rearranged so
//! that each block of equal moduli receives its own segment of `w^j`, with
//! the sign of `x` on the support and a free sign on the zero block. The
//! one-sided derivative along `y` is the support function of that set, which
//! is computed here by sorting instead of enumerating.
//!
//! Normals are never normalized to unit length: every criterion used here
//! is invariant under positive scaling.

use std::collections::BTreeSet;
use std::ops::Range;

use num::{One, Signed, Zero};

use crate::bodies::{Family, Scalar, SymBody};
use crate::combinatorics::multiset_permutations;
use crate::error::{Error, Result};
use crate::rational::{max_abs, rank, sign, to_f64, Q};

/// Tolerance used for `ℓp` bodies, where everything is floating point.
pub const LP_TOLERANCE: f64 = 1e-9;

/// Coordinates grouped by equal modulus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub value: Q,
    pub indices: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockDecomposition {
    /// Nonzero blocks, moduli strictly decreasing.
    pub blocks: Vec<Block>,
    /// `{i : x_i = 0}`.
    pub zero: Vec<usize>,
    /// Sign of every coordinate (0 on the zero block).
    pub signs: Vec<i8>,
}

impl BlockDecomposition {
    /// Coordinates attaining `‖x‖_∞`.
    pub fn top(&self) -> &[usize] {
        self.blocks.first().map(|b| b.indices.as_slice()).unwrap_or(&[])
    }

    /// Positions of each nonzero block in the decreasing rearrangement,
    /// followed by the range of the zero block.
    pub fn segments(&self) -> (Vec<Range<usize>>, Range<usize>) {
        let mut start = 0;
        let mut segs = Vec::with_capacity(self.blocks.len());
        for b in &self.blocks {
            segs.push(start..start + b.indices.len());
            start += b.indices.len();
        }
        (segs, start..start + self.zero.len())
    }
}

pub fn block_decompose(x: &[Q]) -> BlockDecomposition {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[b].abs().cmp(&x[a].abs()).then(a.cmp(&b)));
    let mut blocks: Vec<Block> = Vec::new();
    let mut zero = Vec::new();
    for i in order {
        let m = x[i].abs();
        if m.is_zero() {
            zero.push(i);
            continue;
        }
        match blocks.last_mut() {
            Some(b) if b.value == m => b.indices.push(i),
            _ => blocks.push(Block { value: m, indices: vec![i] }),
        }
    }
    BlockDecomposition { blocks, zero, signs: x.iter().map(sign).collect() }
}

/// Scalar types a direction may use: exact rationals or plain integers.
pub trait Coord: Clone + Ord + Signed {
    fn scale(&self, w: &Q) -> Q;
}

impl Coord for Q {
    fn scale(&self, w: &Q) -> Q {
        w * self
    }
}

impl Coord for i64 {
    fn scale(&self, w: &Q) -> Q {
        w * Q::from_integer((*self).into())
    }
}

/// Precomputed structure at a nonzero point of a polyhedral body, reused
/// across many directions.
#[derive(Debug, Clone)]
pub struct PlPoint {
    pub decomposition: BlockDecomposition,
    /// Rows attaining the gauge at the point.
    pub active: Vec<usize>,
    pub norm: Q,
    row_values: Vec<Q>,
}

impl PlPoint {
    pub fn new(body: &SymBody, x: &[Q]) -> Result<Self> {
        let row_values = body.row_values(x)?;
        let norm = row_values.iter().max().unwrap().clone();
        if norm.is_zero() {
            return Err(Error::ZeroVector);
        }
        let active = (0..row_values.len()).filter(|&j| row_values[j] == norm).collect();
        Ok(Self { decomposition: block_decompose(x), active, norm, row_values })
    }

    /// Block-wise rearrangement value of one row along `y`.
    fn row_derivative<T: Coord>(&self, row: &[Q], y: &[T]) -> Q {
        let d = &self.decomposition;
        let (segs, zseg) = d.segments();
        let mut total = Q::zero();
        let mut buf: Vec<T> = Vec::new();
        for (b, seg) in d.blocks.iter().zip(segs) {
            buf.clear();
            buf.extend(b.indices.iter().map(|&i| if d.signs[i] < 0 { -y[i].clone() } else { y[i].clone() }));
            buf.sort_by(|a, b| b.cmp(a));
            for (w, t) in row[seg].iter().zip(&buf) {
                if !w.is_zero() && !t.is_zero() {
                    total += t.scale(w);
                }
            }
        }
        buf.clear();
        buf.extend(d.zero.iter().map(|&i| y[i].abs()));
        buf.sort_by(|a, b| b.cmp(a));
        for (w, t) in row[zseg].iter().zip(&buf) {
            if !w.is_zero() && !t.is_zero() {
                total += t.scale(w);
            }
        }
        total
    }

    /// One-sided derivative of the gauge along `y`.
    pub fn derivative<T: Coord>(&self, body: &SymBody, y: &[T]) -> Q {
        let w = body.weights().expect("PlPoint only exists for polyhedral bodies");
        self.active.iter().map(|&j| self.row_derivative(&w[j], y)).max().expect("at least one active row")
    }

    /// Largest `t0 > 0` such that `t ↦ ‖x + t y‖` is affine on `[0, t0]`.
    pub fn breakpoint(&self, body: &SymBody, y: &[Q]) -> Q {
        let w = body.weights().expect("polyhedral body");
        let d = &self.decomposition;
        let mut best: Option<Q> = None;
        let mut push = |t: Q| {
            if best.as_ref().is_none_or(|b| &t < b) {
                best = Some(t);
            }
        };
        let block_max = |idx: &[usize]| idx.iter().map(|&i| y[i].abs()).max().unwrap_or_else(Q::zero);
        for (t, b) in d.blocks.iter().enumerate() {
            for &i in &b.indices {
                if !y[i].is_zero() {
                    push(&b.value / y[i].abs());
                }
            }
            let (next_val, next_max) = match d.blocks.get(t + 1) {
                Some(nb) => (nb.value.clone(), block_max(&nb.indices)),
                None => (Q::zero(), block_max(&d.zero)),
            };
            let rate = block_max(&b.indices) + next_max;
            if rate.is_positive() {
                push((&b.value - next_val) / rate);
            }
        }
        let ymax = max_abs(y);
        let lip: Vec<Q> = w.iter().map(|r| r.iter().fold(Q::zero(), |a, v| a + v) * &ymax).collect();
        let lip_active = self.active.iter().map(|&j| lip[j].clone()).max().unwrap();
        for (j, val) in self.row_values.iter().enumerate() {
            if val < &self.norm {
                let rate = &lip[j] + &lip_active;
                if rate.is_positive() {
                    push((&self.norm - val) / rate);
                }
            }
        }
        best.unwrap_or_else(Q::one)
    }
}

/// Directional derivative of `‖·‖_B` at `x ≠ 0` along `y`.
pub fn directional_derivative(body: &SymBody, x: &[Q], y: &[Q]) -> Result<Scalar> {
    body.check_dim(x.len())?;
    body.check_dim(y.len())?;
    if x.iter().all(Zero::is_zero) {
        return Err(Error::ZeroVector);
    }
    match body.family() {
        Family::DualOrbit(_) => Ok(Scalar::Exact(PlPoint::new(body, x)?.derivative(body, y))),
        Family::Lp(_) => {
            let xf: Vec<f64> = x.iter().map(to_f64).collect();
            let yf: Vec<f64> = y.iter().map(to_f64).collect();
            lp_directional_derivative(body, &xf, &yf).map(Scalar::Approx)
        }
    }
}

/// Gradient of a smooth `ℓp` gauge at `x ≠ 0`.
pub fn lp_gradient(body: &SymBody, x: &[f64]) -> Result<Vec<f64>> {
    let p = body.lp_exponent().ok_or(Error::NotPiecewiseLinear)?;
    body.check_dim(x.len())?;
    let nx = body.norm_f64(x)?;
    if nx == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok(x.iter().map(|v| v.signum() * (v.abs() / nx).powf(p - 1.0)).collect())
}

pub fn lp_directional_derivative(body: &SymBody, x: &[f64], y: &[f64]) -> Result<f64> {
    body.check_dim(y.len())?;
    let g = lp_gradient(body, x)?;
    Ok(g.iter().zip(y).map(|(a, b)| a * b).sum())
}

/// Checks `‖x‖_B = 1` (exactly, or within [`LP_TOLERANCE`] for `ℓp`).
pub fn ensure_boundary(body: &SymBody, x: &[Q]) -> Result<()> {
    match body.norm(x)? {
        Scalar::Exact(v) if v.is_one() => Ok(()),
        Scalar::Approx(v) if (v - 1.0).abs() <= LP_TOLERANCE => Ok(()),
        other => Err(Error::NotOnBoundary(other.to_string())),
    }
}

/// Whether direction `y` illuminates the boundary point `x`.
pub fn illuminates_point(body: &SymBody, x: &[Q], y: &[Q]) -> Result<bool> {
    ensure_boundary(body, x)?;
    if y.iter().all(Zero::is_zero) {
        return Err(Error::ZeroVector);
    }
    Ok(match directional_derivative(body, x, y)? {
        Scalar::Exact(d) => d.is_negative(),
        Scalar::Approx(d) => d < -LP_TOLERANCE,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubgradientWitness {
    pub v: Vec<Q>,
    /// Active weight row the witness comes from.
    pub row: usize,
    /// Signs chosen on zero-block coordinates carrying a nonzero weight.
    pub zero_signs: Vec<i8>,
}

#[derive(Debug, Clone)]
pub struct SubgradientSet {
    pub witnesses: Vec<SubgradientWitness>,
    pub truncated: bool,
}

/// Generators of the subdifferential at `x ≠ 0`: for every active row, all
/// block-wise assignments of its segments times zero-block signs.
pub fn extreme_subgradients(body: &SymBody, x: &[Q], limit: usize) -> Result<SubgradientSet> {
    let w = body.weights_or_err()?;
    let pt = PlPoint::new(body, x)?;
    let d = &pt.decomposition;
    let (segs, zseg) = d.segments();
    let n = x.len();
    let mut seen: BTreeSet<Vec<Q>> = BTreeSet::new();
    let mut witnesses = Vec::new();
    let mut truncated = false;

    'rows: for &j in &pt.active {
        let row = &w[j];
        let mut per_block: Vec<Vec<Vec<Q>>> = segs.iter().map(|s| multiset_permutations(&row[s.clone()])).collect();
        per_block.push(multiset_permutations(&row[zseg.clone()]));
        let groups: Vec<&[usize]> =
            d.blocks.iter().map(|b| b.indices.as_slice()).chain(std::iter::once(d.zero.as_slice())).collect();

        let mut choice = vec![0usize; per_block.len()];
        loop {
            let mut base = vec![Q::zero(); n];
            for (g, (idx, perms)) in groups.iter().zip(&per_block).enumerate() {
                for (&i, val) in idx.iter().zip(&perms[choice[g]]) {
                    base[i] = if d.signs[i] < 0 { -val.clone() } else { val.clone() };
                }
            }
            let free: Vec<usize> = d.zero.iter().copied().filter(|&i| !base[i].is_zero()).collect();
            for mask in 0u64..(1u64 << free.len().min(63)) {
                let mut v = base.clone();
                let mut zero_signs = Vec::with_capacity(free.len());
                for (b, &i) in free.iter().enumerate() {
                    if mask >> b & 1 == 1 {
                        v[i] = -v[i].clone();
                        zero_signs.push(-1);
                    } else {
                        zero_signs.push(1);
                    }
                }
                if seen.insert(v.clone()) {
                    if witnesses.len() == limit {
                        truncated = true;
                        break 'rows;
                    }
                    witnesses.push(SubgradientWitness { v, row: j, zero_signs });
                }
            }
            // odometer over per-block permutations
            let mut g = 0;
            loop {
                if g == choice.len() {
                    continue 'rows;
                }
                choice[g] += 1;
                if choice[g] < per_block[g].len() {
                    break;
                }
                choice[g] = 0;
                g += 1;
            }
        }
    }
    Ok(SubgradientSet { witnesses, truncated })
}

/// Default enumeration limit for vertex tests.
pub const SUBGRADIENT_LIMIT: usize = 1 << 16;

/// A boundary point is a vertex iff its normal cone is full-dimensional.
pub fn is_vertex(body: &SymBody, x: &[Q]) -> Result<bool> {
    ensure_boundary(body, x)?;
    let set = extreme_subgradients(body, x, SUBGRADIENT_LIMIT)?;
    let rows: Vec<Vec<Q>> = set.witnesses.into_iter().map(|s| s.v).collect();
    let r = rank(&rows);
    if r < x.len() && set.truncated {
        return Err(Error::CapExceeded(format!("more than {SUBGRADIENT_LIMIT} subgradients")));
    }
    Ok(r == x.len())
}

/// Violation counts for the sign lemma (`x_i v_i ≥ 0`) and the ordering
/// lemma (`|x_i| > |x_j| ⇒ |v_i| ≥ |v_j|`) for one normal `v` at `x`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct NormalAudit {
    pub sign_violations: usize,
    pub order_violations: usize,
}

impl NormalAudit {
    pub fn add(&mut self, other: NormalAudit) {
        self.sign_violations += other.sign_violations;
        self.order_violations += other.order_violations;
    }
}

pub fn audit_normal(x: &[Q], v: &[Q]) -> NormalAudit {
    let sign_violations = x.iter().zip(v).filter(|(a, b)| (*a * *b).is_negative()).count();
    let mut order_violations = 0;
    for i in 0..x.len() {
        for j in 0..x.len() {
            if x[i].abs() > x[j].abs() && v[i].abs() < v[j].abs() {
                order_violations += 1;
            }
        }
    }
    NormalAudit { sign_violations, order_violations }
}

/// Float version for smooth bodies, with a relative tolerance.
pub fn audit_normal_f64(x: &[f64], v: &[f64], tol: f64) -> NormalAudit {
    let scale = v.iter().fold(0.0f64, |a, b| a.max(b.abs())).max(f64::MIN_POSITIVE);
    let sign_violations = x.iter().zip(v).filter(|(a, b)| *a * *b < -tol * scale).count();
    let mut order_violations = 0;
    for i in 0..x.len() {
        for j in 0..x.len() {
            if x[i].abs() > x[j].abs() + tol && v[i].abs() < v[j].abs() - tol * scale {
                order_violations += 1;
            }
        }
    }
    NormalAudit { sign_violations, order_violations }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{dot, q, qr, qvec};

    fn e1(n: usize) -> Vec<Q> {
        let mut v = vec![q(0); n];
        v[0] = q(1);
        v
    }

    #[test]
    fn decomposition_examples() {
        let d = block_decompose(&qvec(&[0, -2, 2, 1]));
        assert_eq!(d.blocks, vec![Block { value: q(2), indices: vec![1, 2] }, Block { value: q(1), indices: vec![3] }]);
        assert_eq!(d.zero, vec![0]);
        assert_eq!(d.signs, vec![0, -1, 1, 1]);
        assert_eq!(d.top(), &[1, 2]);

        let d = block_decompose(&qvec(&[1, 1, 1]));
        assert_eq!(d.blocks.len(), 1);
        assert_eq!(d.blocks[0].indices, vec![0, 1, 2]);
        assert!(d.zero.is_empty());

        let d = block_decompose(&qvec(&[0, 0]));
        assert!(d.blocks.is_empty());
        assert_eq!(d.zero, vec![0, 1]);
    }

    #[test]
    fn derivative_examples() {
        let cube = SymBody::cube(3).unwrap();
        let ones = qvec(&[1, 1, 1]);
        assert_eq!(directional_derivative(&cube, &ones, &qvec(&[-1, -1, -1])).unwrap(), Scalar::Exact(q(-1)));
        assert_eq!(directional_derivative(&cube, &ones, &qvec(&[-1, -1, 1])).unwrap(), Scalar::Exact(q(1)));
        let ell1 = SymBody::ell1(3).unwrap();
        assert_eq!(directional_derivative(&ell1, &e1(3), &qvec(&[-1, -1, 0])).unwrap(), Scalar::Exact(q(0)));
        assert_eq!(directional_derivative(&ell1, &qvec(&[0, 0, 0]), &ones), Err(Error::ZeroVector));
    }

    #[test]
    fn illumination_examples() {
        let cube = SymBody::cube(3).unwrap();
        assert!(illuminates_point(&cube, &qvec(&[1, 1, 1]), &qvec(&[-1, -1, -1])).unwrap());
        let ell1 = SymBody::ell1(3).unwrap();
        assert!(!illuminates_point(&ell1, &e1(3), &qvec(&[-1, -1, 0])).unwrap());
        let cap = SymBody::cube_cap_l1(3, q(2)).unwrap();
        assert!(illuminates_point(&cap, &qvec(&[-1, -1, 0]), &qvec(&[1, 1, 0])).unwrap());
        assert!(matches!(
            illuminates_point(&cube, &qvec(&[2, 0, 0]), &qvec(&[-1, 0, 0])),
            Err(Error::NotOnBoundary(_))
        ));
    }

    fn vectors(set: &SubgradientSet) -> BTreeSet<Vec<Q>> {
        set.witnesses.iter().map(|w| w.v.clone()).collect()
    }

    #[test]
    fn subgradient_examples() {
        let ell1 = SymBody::ell1(3).unwrap();
        let got = vectors(&extreme_subgradients(&ell1, &e1(3), 100).unwrap());
        let want: BTreeSet<_> = [[1, 1, 1], [1, 1, -1], [1, -1, 1], [1, -1, -1]].iter().map(|v| qvec(v)).collect();
        assert_eq!(got, want);

        let cube = SymBody::cube(2).unwrap();
        let got = vectors(&extreme_subgradients(&cube, &qvec(&[1, 1]), 100).unwrap());
        assert_eq!(got, [qvec(&[1, 0]), qvec(&[0, 1])].into_iter().collect());

        let top2 = SymBody::topk(3, 2).unwrap();
        let x = vec![qr(1, 2); 3];
        let set = extreme_subgradients(&top2, &x, 100).unwrap();
        let got = vectors(&set);
        let want: BTreeSet<_> = [[1, 1, 0], [1, 0, 1], [0, 1, 1]].iter().map(|v| qvec(v)).collect();
        assert_eq!(got, want);
        for w in &set.witnesses {
            assert_eq!(dot(&w.v, &x), q(1));
        }
    }

    #[test]
    fn subgradient_truncation() {
        let ell1 = SymBody::ell1(5).unwrap();
        let set = extreme_subgradients(&ell1, &e1(5), 3).unwrap();
        assert!(set.truncated);
        assert_eq!(set.witnesses.len(), 3);
    }

    #[test]
    fn vertex_examples() {
        let ell1 = SymBody::ell1(3).unwrap();
        assert!(is_vertex(&ell1, &e1(3)).unwrap());
        assert!(!is_vertex(&ell1, &[qr(1, 2), qr(1, 2), q(0)]).unwrap());
        assert!(is_vertex(&SymBody::cube(3).unwrap(), &qvec(&[1, 1, 1])).unwrap());
    }

    #[test]
    fn breakpoint_gives_exact_difference_quotient() {
        let cap = SymBody::cube_cap_l1(4, qr(5, 2)).unwrap();
        let x = vec![q(1), qr(1, 2), q(-1), q(0)];
        assert_eq!(cap.norm_exact(&x).unwrap(), q(1));
        let y = qvec(&[-1, 2, 1, -3]);
        let pt = PlPoint::new(&cap, &x).unwrap();
        let t = pt.breakpoint(&cap, &y) / q(2);
        let moved: Vec<Q> = x.iter().zip(&y).map(|(a, b)| a + &t * b).collect();
        let quotient = (cap.norm_exact(&moved).unwrap() - q(1)) / &t;
        assert_eq!(quotient, pt.derivative(&cap, &y));
    }

    #[test]
    fn lp_gradient_matches_euclidean() {
        let l2 = SymBody::lp(2, q(2)).unwrap();
        let g = lp_gradient(&l2, &[3.0, -4.0]).unwrap();
        assert!((g[0] - 0.6).abs() < 1e-12 && (g[1] + 0.8).abs() < 1e-12);
    }

    #[test]
    fn audit_flags_bad_normals() {
        let x = qvec(&[2, 1, 0]);
        assert_eq!(audit_normal(&x, &qvec(&[1, 1, 0])), NormalAudit::default());
        let bad = audit_normal(&x, &qvec(&[-1, 2, 0]));
        assert_eq!(bad.sign_violations, 1);
        assert_eq!(bad.order_violations, 1);
    }
}
