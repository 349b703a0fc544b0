//! 1-symmetric norms and their text encoding.
//!
//! A polyhedral body is stored in dual-orbit form: a list of nonincreasing,
//! nonnegative weight rows `w^j`, with gauge
//! `‖x‖ = max_j ⟨w^j, x*⟩` where `x*` is the decreasing rearrangement of `|x|`.
//! Rows are scaled at construction so that `‖e_1‖ = 1`.
//!
//! Smooth `ℓp` bodies (`1 < p < ∞`) are evaluated in floating point; `p = 1`
//! and `p = ∞` are rewritten as dual-orbit bodies so they stay exact.

use std::fmt;

use num::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::rational::{fmt_q, parse_q, to_f64, Q};

/// A value that is exact for polyhedral bodies and approximate for `ℓp`.
#[derive(Debug, Clone, PartialEq)]
pub enum Scalar {
    Exact(Q),
    Approx(f64),
}

impl Scalar {
    pub fn to_f64(&self) -> f64 {
        match self {
            Scalar::Exact(v) => to_f64(v),
            Scalar::Approx(v) => *v,
        }
    }

    pub fn exact(&self) -> Option<&Q> {
        match self {
            Scalar::Exact(v) => Some(v),
            Scalar::Approx(_) => None,
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Exact(v) => f.write_str(&fmt_q(v)),
            Scalar::Approx(v) => write!(f, "{v}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    /// Rows of the dual-orbit weight matrix, each nonincreasing.
    DualOrbit(Vec<Vec<Q>>),
    /// Smooth `ℓp` ball with rational `1 < p < ∞`.
    Lp(Q),
}

/// Unit ball of a 1-symmetric norm on `R^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymBody {
    n: usize,
    family: Family,
}

impl SymBody {
    pub fn dual_orbit(n: usize, rows: Vec<Vec<Q>>) -> Result<Self> {
        if n < 2 {
            return Err(Error::OutOfRange(format!("dimension {n} < 2")));
        }
        if rows.is_empty() {
            return Err(Error::Invariant("weight matrix has no rows".into()));
        }
        for row in &rows {
            if row.len() != n {
                return Err(Error::Dimension { expected: n, got: row.len() });
            }
            if row.iter().any(|w| w.is_negative()) {
                return Err(Error::Invariant("negative weight".into()));
            }
            if row.windows(2).any(|p| p[0] < p[1]) {
                return Err(Error::Invariant("weight row is not sorted nonincreasing".into()));
            }
            if row[0].is_zero() {
                return Err(Error::Invariant("all-zero weight row".into()));
            }
        }
        let scale = rows.iter().map(|r| r[0].clone()).max().unwrap();
        let rows = rows.into_iter().map(|r| r.into_iter().map(|w| w / &scale).collect()).collect();
        Ok(Self { n, family: Family::DualOrbit(rows) })
    }

    pub fn cube(n: usize) -> Result<Self> {
        let mut row = vec![Q::zero(); n];
        if let Some(first) = row.first_mut() {
            *first = Q::one();
        }
        Self::dual_orbit(n, vec![row])
    }

    pub fn ell1(n: usize) -> Result<Self> {
        Self::dual_orbit(n, vec![vec![Q::one(); n]])
    }

    /// Sum of the `k` largest moduli.
    pub fn topk(n: usize, k: usize) -> Result<Self> {
        if k == 0 || k > n {
            return Err(Error::OutOfRange(format!("topk needs 1 <= k <= n, got k={k}")));
        }
        let row = (0..n).map(|i| if i < k { Q::one() } else { Q::zero() }).collect();
        Self::dual_orbit(n, vec![row])
    }

    /// Cube intersected with the `ℓ1` ball of radius `r`.
    pub fn cube_cap_l1(n: usize, r: Q) -> Result<Self> {
        if !r.is_positive() {
            return Err(Error::Invariant("cube_cap_l1 radius must be positive".into()));
        }
        let mut cube = vec![Q::zero(); n];
        if let Some(first) = cube.first_mut() {
            *first = Q::one();
        }
        let cap = vec![Q::one() / r; n];
        Self::dual_orbit(n, vec![cube, cap])
    }

    /// `ℓp` ball; `p = 1` maps to the cross-polytope.
    pub fn lp(n: usize, p: Q) -> Result<Self> {
        if n < 2 {
            return Err(Error::OutOfRange(format!("dimension {n} < 2")));
        }
        if p < Q::one() {
            return Err(Error::Invariant("lp exponent must be >= 1".into()));
        }
        if p.is_one() {
            return Self::ell1(n);
        }
        Ok(Self { n, family: Family::Lp(p) })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn is_piecewise_linear(&self) -> bool {
        matches!(self.family, Family::DualOrbit(_))
    }

    pub fn weights(&self) -> Option<&[Vec<Q>]> {
        match &self.family {
            Family::DualOrbit(w) => Some(w),
            Family::Lp(_) => None,
        }
    }

    pub(crate) fn weights_or_err(&self) -> Result<&[Vec<Q>]> {
        self.weights().ok_or(Error::NotPiecewiseLinear)
    }

    pub fn lp_exponent(&self) -> Option<f64> {
        match &self.family {
            Family::Lp(p) => Some(to_f64(p)),
            Family::DualOrbit(_) => None,
        }
    }

    pub(crate) fn check_dim(&self, len: usize) -> Result<()> {
        if len != self.n {
            return Err(Error::Dimension { expected: self.n, got: len });
        }
        Ok(())
    }

    /// `⟨w^j, x*⟩` for every row `j`.
    pub fn row_values(&self, x: &[Q]) -> Result<Vec<Q>> {
        self.check_dim(x.len())?;
        let w = self.weights_or_err()?;
        let sorted = decreasing_rearrangement(x);
        Ok(w.iter().map(|row| pair_sum(row, &sorted)).collect())
    }

    /// Exact gauge of a polyhedral body.
    pub fn norm_exact(&self, x: &[Q]) -> Result<Q> {
        Ok(self.row_values(x)?.into_iter().max().unwrap())
    }

    pub fn norm(&self, x: &[Q]) -> Result<Scalar> {
        self.check_dim(x.len())?;
        match &self.family {
            Family::DualOrbit(_) => self.norm_exact(x).map(Scalar::Exact),
            Family::Lp(_) => {
                let xf: Vec<f64> = x.iter().map(to_f64).collect();
                Ok(Scalar::Approx(self.norm_f64(&xf)?))
            }
        }
    }

    pub fn norm_f64(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x.len())?;
        match &self.family {
            Family::DualOrbit(w) => {
                let mut s: Vec<f64> = x.iter().map(|v| v.abs()).collect();
                s.sort_by(|a, b| b.total_cmp(a));
                Ok(w.iter()
                    .map(|row| row.iter().zip(&s).map(|(a, b)| to_f64(a) * b).sum::<f64>())
                    .fold(f64::NEG_INFINITY, f64::max))
            }
            Family::Lp(p) => Ok(lp_norm(x, to_f64(p))),
        }
    }

    /// `‖e_1 + … + e_n‖ / ‖e_1‖`; equals 1 exactly for the cube.
    pub fn distance_to_cube(&self) -> Scalar {
        let ones = vec![Q::one(); self.n];
        self.norm(&ones).expect("dimension matches")
    }

    /// True iff the body is the cube `[-1,1]^n`.
    pub fn is_cube(&self) -> bool {
        matches!(self.distance_to_cube(), Scalar::Exact(ref d) if d.is_one())
    }

    /// True iff the body is a linear image of the cube. A signed-permutation
    /// orbit of facet normals has size `2n` only for multiples of `e_1`, or
    /// of `e_1 + e_2` when `n = 2`; so besides the cube the only case is the
    /// planar `ℓ1` ball, which has `d = 2`.
    pub fn is_parallelotope(&self) -> bool {
        match self.distance_to_cube() {
            Scalar::Exact(d) => d.is_one() || (self.n == 2 && d == Q::from_integer(2.into())),
            Scalar::Approx(_) => false,
        }
    }

    /// Canonical record: dual-orbit weights after normalization, or `lp`.
    pub fn to_spec(&self) -> BodySpec {
        match &self.family {
            Family::DualOrbit(w) => BodySpec {
                n: self.n,
                family: "dual_orbit".into(),
                weights: Some(w.iter().map(|r| r.iter().map(|v| RatLit::Str(fmt_q(v))).collect()).collect()),
                ..BodySpec::default()
            },
            Family::Lp(p) => {
                BodySpec { n: self.n, family: "lp".into(), p: Some(RatLit::Str(fmt_q(p))), ..BodySpec::default() }
            }
        }
    }

    /// Compact canonical JSON; the digest is computed over these bytes.
    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string(&self.to_spec()).expect("spec serializes")
    }

    /// Hex SHA-256 of the canonical JSON.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_canonical_json().as_bytes()))
    }
}

fn lp_norm(x: &[f64], p: f64) -> f64 {
    let m = x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if m == 0.0 {
        return 0.0;
    }
    m * x.iter().map(|v| (v.abs() / m).powf(p)).sum::<f64>().powf(1.0 / p)
}

/// `|x|` sorted nonincreasing.
pub fn decreasing_rearrangement(x: &[Q]) -> Vec<Q> {
    let mut s: Vec<Q> = x.iter().map(|v| v.abs()).collect();
    s.sort_by(|a, b| b.cmp(a));
    s
}

fn pair_sum(row: &[Q], sorted: &[Q]) -> Q {
    row.iter().zip(sorted).filter(|(w, _)| !w.is_zero()).fold(Q::zero(), |acc, (w, v)| acc + w * v)
}

/// Rational literal: JSON integer or `"p/q"` string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RatLit {
    Int(i64),
    Str(String),
}

impl RatLit {
    pub fn to_q(&self) -> Result<Q> {
        match self {
            RatLit::Int(v) => Ok(Q::from_integer((*v).into())),
            RatLit::Str(s) => parse_q(s),
        }
    }
}

/// Text record describing a body. `family` is one of `dual_orbit`, `cube`,
/// `ell1`, `topk` (needs `k`), `cube_cap_l1` (needs `r`) or `lp` (needs `p`,
/// which may be `"inf"`).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BodySpec {
    pub n: usize,
    pub family: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<Vec<RatLit>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<RatLit>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<RatLit>,
}

impl BodySpec {
    pub fn build(&self) -> Result<SymBody> {
        let n = self.n;
        let missing = |f: &str| Error::Parse(format!("family {} requires field {f:?}", self.family));
        match self.family.as_str() {
            "dual_orbit" => {
                let rows = self.weights.as_ref().ok_or_else(|| missing("weights"))?;
                let rows = rows
                    .iter()
                    .map(|r| r.iter().map(RatLit::to_q).collect::<Result<Vec<_>>>())
                    .collect::<Result<Vec<_>>>()?;
                SymBody::dual_orbit(n, rows)
            }
            "cube" => SymBody::cube(n),
            "ell1" => SymBody::ell1(n),
            "topk" => SymBody::topk(n, self.k.ok_or_else(|| missing("k"))?),
            "cube_cap_l1" => SymBody::cube_cap_l1(n, self.r.as_ref().ok_or_else(|| missing("r"))?.to_q()?),
            "lp" => match self.p.as_ref().ok_or_else(|| missing("p"))? {
                RatLit::Str(s) if matches!(s.trim(), "inf" | "infinity") => SymBody::cube(n),
                lit => SymBody::lp(n, lit.to_q()?),
            },
            other => Err(Error::Parse(format!("unknown family {other:?}"))),
        }
    }
}

/// Parses a JSON body record.
pub fn parse_body(text: &str) -> Result<SymBody> {
    let spec: BodySpec = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    spec.build()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qr, qvec};

    #[test]
    fn parses_dual_orbit_record() {
        let b = parse_body(r#"{"n":3,"family":"dual_orbit","weights":[["1","1","0"]]}"#).unwrap();
        assert_eq!(b, SymBody::topk(3, 2).unwrap());
    }

    #[test]
    fn rejects_unsorted_row() {
        let e = parse_body(r#"{"n":3,"family":"dual_orbit","weights":[["0","1","1"]]}"#);
        assert!(matches!(e, Err(Error::Invariant(_))));
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(
            parse_body(r#"{"n":3,"family":"dual_orbit","weights":[["1","x","0"]]}"#),
            Err(Error::Parse(_))
        ));
        assert!(matches!(
            parse_body(r#"{"n":3,"family":"dual_orbit","weights":[["1","-1","-2"]]}"#),
            Err(Error::Invariant(_))
        ));
        assert!(matches!(
            parse_body(r#"{"n":3,"family":"dual_orbit","weights":[["0","0","0"]]}"#),
            Err(Error::Invariant(_))
        ));
        assert!(matches!(
            parse_body(r#"{"n":3,"family":"dual_orbit","weights":[["1","0"]]}"#),
            Err(Error::Dimension { expected: 3, got: 2 })
        ));
        assert!(parse_body(r#"{"n":3,"family":"cube","bogus":1}"#).is_err());
    }

    #[test]
    fn cube_cap_expansion() {
        let b = parse_body(r#"{"n":3,"family":"cube_cap_l1","r":"2"}"#).unwrap();
        let w = b.weights().unwrap();
        assert_eq!(w[0], qvec(&[1, 0, 0]));
        assert_eq!(w[1], vec![qr(1, 2); 3]);
    }

    #[test]
    fn normalizes_scale() {
        let b = SymBody::dual_orbit(2, vec![qvec(&[4, 2]), qvec(&[2, 2])]).unwrap();
        assert_eq!(b.weights().unwrap()[0], vec![q(1), qr(1, 2)]);
        assert_eq!(b.norm_exact(&qvec(&[1, 0])).unwrap(), q(1));
    }

    #[test]
    fn norm_examples() {
        let ell1 = SymBody::ell1(3).unwrap();
        assert_eq!(ell1.norm_exact(&qvec(&[1, 1, 1])).unwrap(), q(3));
        let cube = SymBody::cube(3).unwrap();
        assert_eq!(cube.norm_exact(&[qr(1, 2), qr(-1, 4), q(0)]).unwrap(), qr(1, 2));
        let top2 = SymBody::topk(3, 2).unwrap();
        assert_eq!(top2.norm_exact(&qvec(&[3, -1, 2])).unwrap(), q(5));
    }

    #[test]
    fn distance_examples() {
        for n in 2..6 {
            assert_eq!(SymBody::cube(n).unwrap().distance_to_cube(), Scalar::Exact(q(1)));
        }
        assert_eq!(SymBody::ell1(5).unwrap().distance_to_cube(), Scalar::Exact(q(5)));
        let cap = SymBody::cube_cap_l1(3, q(2)).unwrap();
        assert_eq!(cap.distance_to_cube(), Scalar::Exact(qr(3, 2)));
        assert!(SymBody::cube_cap_l1(3, q(3)).unwrap().is_cube());
    }

    #[test]
    fn lp_canonicalization() {
        let inf = parse_body(r#"{"n":3,"family":"lp","p":"inf"}"#).unwrap();
        assert_eq!(inf, SymBody::cube(3).unwrap());
        let one = parse_body(r#"{"n":3,"family":"lp","p":1}"#).unwrap();
        assert_eq!(one, SymBody::ell1(3).unwrap());
        let l2 = parse_body(r#"{"n":2,"family":"lp","p":"2"}"#).unwrap();
        assert!((l2.norm(&qvec(&[3, 4])).unwrap().to_f64() - 5.0).abs() < 1e-12);
        assert!(!l2.is_piecewise_linear());
    }

    #[test]
    fn canonical_round_trip() {
        for b in [
            SymBody::cube_cap_l1(4, qr(3, 2)).unwrap(),
            SymBody::lp(3, qr(5, 2)).unwrap(),
            SymBody::topk(5, 3).unwrap(),
        ] {
            let again = parse_body(&b.to_canonical_json()).unwrap();
            assert_eq!(again, b);
            assert_eq!(again.digest(), b.digest());
        }
    }
}
