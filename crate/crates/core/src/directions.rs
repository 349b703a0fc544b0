//! Deterministic direction families and the predicates that choose between them.
//!
//! Directions are stored as primitive integer vectors. Illumination only
//! depends on a direction up to positive scaling, so rational input is
//! cleared of denominators and divided by the gcd of its entries.

use std::fmt;
use std::str::FromStr;

use num::bigint::BigInt;
use num::{Integer, One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::bodies::{Scalar, SymBody};
use crate::error::{Error, Result};
use crate::rational::{denominator_lcm, max_abs, parse_q, sign, Q};
use crate::subdiff::{ensure_boundary, illuminates_point, LP_TOLERANCE};

pub type Direction = Vec<i64>;

/// Largest dimension the set generators will materialize.
pub const MAX_GENERATOR_DIM: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DirectionLabel {
    T,
    T1,
    T2,
    CubeCorners,
    Custom,
    Random,
}

impl fmt::Display for DirectionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            DirectionLabel::T => "T",
            DirectionLabel::T1 => "T1",
            DirectionLabel::T2 => "T2",
            DirectionLabel::CubeCorners => "CubeCorners",
            DirectionLabel::Custom => "Custom",
            DirectionLabel::Random => "Random",
        };
        f.write_str(s)
    }
}

impl FromStr for DirectionLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "T" => Ok(DirectionLabel::T),
            "T1" => Ok(DirectionLabel::T1),
            "T2" => Ok(DirectionLabel::T2),
            "CubeCorners" | "corners" => Ok(DirectionLabel::CubeCorners),
            "Custom" => Ok(DirectionLabel::Custom),
            "Random" => Ok(DirectionLabel::Random),
            other => Err(Error::Parse(format!("unknown direction label {other:?}"))),
        }
    }
}

/// A finite, canonically ordered, duplicate-free list of nonzero directions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectionSet {
    pub label: DirectionLabel,
    pub n: usize,
    vectors: Vec<Direction>,
}

impl DirectionSet {
    /// Sorts lexicographically, reduces each vector to primitive form and
    /// removes duplicates.
    pub fn new(label: DirectionLabel, n: usize, vectors: Vec<Direction>) -> Result<Self> {
        let mut out = Vec::with_capacity(vectors.len());
        for v in vectors {
            if v.len() != n {
                return Err(Error::Dimension { expected: n, got: v.len() });
            }
            let g = v.iter().fold(0i64, |g, x| g.gcd(x));
            if g == 0 {
                return Err(Error::ZeroVector);
            }
            out.push(v.into_iter().map(|x| x / g).collect());
        }
        out.sort();
        out.dedup();
        Ok(Self { label, n, vectors: out })
    }

    pub fn vectors(&self) -> &[Direction] {
        &self.vectors
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn union(&self, other: &DirectionSet, label: DirectionLabel) -> Result<DirectionSet> {
        let mut v = self.vectors.clone();
        v.extend(other.vectors.iter().cloned());
        DirectionSet::new(label, self.n, v)
    }

    /// One vector per line, entries separated by spaces.
    pub fn to_text(&self) -> String {
        let mut s = format!("# {} n={} count={}\n", self.label, self.n, self.len());
        for v in &self.vectors {
            let line: Vec<String> = v.iter().map(i64::to_string).collect();
            s.push_str(&line.join(" "));
            s.push('\n');
        }
        s
    }
}

/// Parses a directions file: one vector per line, integers or `p/q`, `#` comments.
pub fn parse_directions(text: &str, n: usize) -> Result<DirectionSet> {
    let mut vectors = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let entries = line.split_whitespace().map(parse_q).collect::<Result<Vec<Q>>>()?;
        if entries.len() != n {
            return Err(Error::Parse(format!("line {}: expected {n} entries, found {}", lineno + 1, entries.len())));
        }
        vectors.push(integer_direction(&entries)?);
    }
    if vectors.is_empty() {
        return Err(Error::EmptyDirections);
    }
    DirectionSet::new(DirectionLabel::Custom, n, vectors)
}

/// Positive rescaling of a rational vector to a primitive integer vector.
pub fn integer_direction(y: &[Q]) -> Result<Direction> {
    if y.iter().all(Zero::is_zero) {
        return Err(Error::ZeroVector);
    }
    let l = denominator_lcm(y);
    let ints: Vec<BigInt> = y.iter().map(|v| (v * Q::from_integer(l.clone())).to_integer()).collect();
    let g = ints.iter().fold(BigInt::zero(), |g, x| g.gcd(x));
    ints.iter()
        .map(|x| (x / &g).to_i64().ok_or_else(|| Error::OutOfRange("direction entry too large".into())))
        .collect()
}

fn sign_vectors(len: usize) -> impl Iterator<Item = Vec<i64>> {
    (0u64..1 << len).map(move |mask| (0..len).map(|i| if mask >> (len - 1 - i) & 1 == 1 { 1 } else { -1 }).collect())
}

pub fn gen_direction_set(label: DirectionLabel, n: usize) -> Result<DirectionSet> {
    if n < 2 {
        return Err(Error::OutOfRange(format!("direction sets need n >= 2, got {n}")));
    }
    if n > MAX_GENERATOR_DIM {
        return Err(Error::CapExceeded(format!("n = {n} > {MAX_GENERATOR_DIM}")));
    }
    let vectors: Vec<Direction> = match label {
        DirectionLabel::CubeCorners => sign_vectors(n).collect(),
        DirectionLabel::T => sign_vectors(n - 1)
            .map(|mut v| {
                v.push(0);
                v
            })
            .collect(),
        DirectionLabel::T1 => {
            let mut v: Vec<Direction> = sign_vectors(n).filter(|s| s[..n - 1].contains(&-1)).collect();
            let mut extra = vec![1; n];
            extra[n - 1] = 0;
            v.push(extra);
            v
        }
        DirectionLabel::T2 => {
            let mut v: Vec<Direction> = gen_direction_set(DirectionLabel::T, n)?.vectors;
            let mut en = vec![0; n];
            en[n - 1] = 1;
            v.push(en.clone());
            en[n - 1] = -1;
            v.push(en);
            v
        }
        DirectionLabel::Custom | DirectionLabel::Random => {
            return Err(Error::OutOfRange(format!("{label} sets are not generated from a label")));
        }
    };
    DirectionSet::new(label, n, vectors)
}

/// Set-builder membership test for `T1`.
pub fn t1_member(y: &[i64]) -> bool {
    let n = y.len();
    let full_sign = y.iter().all(|&v| v == 1 || v == -1);
    let has_minus = y[..n - 1].contains(&-1);
    let is_extra = y[..n - 1].iter().all(|&v| v == 1) && y[n - 1] == 0;
    (full_sign && has_minus) || is_extra
}

/// `‖e_1 + e_2‖ > ‖e_1‖`; by 1-symmetry one pair decides every pair.
pub fn pair_condition(body: &SymBody) -> bool {
    pair_condition_at(body, 0, 1)
}

pub fn pair_condition_at(body: &SymBody, i: usize, j: usize) -> bool {
    let n = body.dim();
    let mut ei = vec![Q::zero(); n];
    ei[i] = Q::one();
    let mut eij = ei.clone();
    eij[j] = Q::one();
    match (body.norm(&eij).unwrap(), body.norm(&ei).unwrap()) {
        (Scalar::Exact(a), Scalar::Exact(b)) => a > b,
        (a, b) => a.to_f64() > b.to_f64() + LP_TOLERANCE,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Strategy {
    Cube,
    NearT2,
    NearT1,
    Far,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Chooses the construction from the distance to the cube.
pub fn select_strategy(body: &SymBody) -> Strategy {
    let two = Q::from_integer(2.into());
    let (is_one, below_two) = match body.distance_to_cube() {
        Scalar::Exact(d) => (d.is_one(), d < two),
        Scalar::Approx(d) => ((d - 1.0).abs() <= LP_TOLERANCE, d < 2.0 - LP_TOLERANCE),
    };
    if is_one {
        Strategy::Cube
    } else if below_two {
        if pair_condition(body) {
            Strategy::NearT2
        } else {
            Strategy::NearT1
        }
    } else {
        Strategy::Far
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NormImplication {
    Illuminated,
    /// Not illuminated; carries `‖Σ_{i ∈ supp y} e_i‖`, which is at least `2/‖x‖_∞`.
    BoundHolds(Scalar),
}

/// Admissibility: `supp x ⊆ supp y` and `y_i = -sign(x_i)` on `supp x`.
pub fn is_admissible(x: &[Q], y: &[i64]) -> bool {
    x.iter().zip(y).all(|(xi, &yi)| {
        let s = sign(xi) as i64;
        s == 0 || yi == -s
    }) && y.iter().all(|v| (-1..=1).contains(v))
}

/// If `y` fails to illuminate `x`, the norm of the indicator of `supp y` must
/// be at least `2/‖x‖_∞`; a smaller value is reported as a lemma violation.
pub fn norm_implication_check(body: &SymBody, x: &[Q], y: &[i64]) -> Result<NormImplication> {
    body.check_dim(y.len())?;
    ensure_boundary(body, x)?;
    if !is_admissible(x, y) {
        return Err(Error::Inadmissible(format!(
            "{y:?} for point with signs {:?}",
            x.iter().map(sign).collect::<Vec<_>>()
        )));
    }
    let yq: Vec<Q> = y.iter().map(|&v| Q::from_integer(v.into())).collect();
    if illuminates_point(body, x, &yq)? {
        return Ok(NormImplication::Illuminated);
    }
    let indicator: Vec<Q> = y.iter().map(|&v| if v != 0 { Q::one() } else { Q::zero() }).collect();
    let value = body.norm(&indicator)?;
    let xmax = max_abs(x);
    let holds = match &value {
        Scalar::Exact(v) => v * &xmax >= Q::from_integer(2.into()),
        Scalar::Approx(v) => v * crate::rational::to_f64(&xmax) >= 2.0 - LP_TOLERANCE,
    };
    if !holds {
        return Err(Error::LemmaViolation(format!("norm {value} < 2/{} for y = {y:?}", crate::rational::fmt_q(&xmax))));
    }
    Ok(NormImplication::BoundHolds(value))
}

/// All admissible `y ∈ {-1,0,1}^n` for `x`.
pub fn admissible_directions(x: &[Q]) -> Vec<Direction> {
    let mut out = vec![Vec::with_capacity(x.len())];
    for xi in x {
        let s = sign(xi) as i64;
        let choices: &[i64] = if s == 0 {
            &[-1, 0, 1]
        } else if s > 0 {
            &[-1]
        } else {
            &[1]
        };
        out = out
            .into_iter()
            .flat_map(|p| {
                choices.iter().map(move |&c| {
                    let mut q = p.clone();
                    q.push(c);
                    q
                })
            })
            .collect();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qr, qvec};

    #[test]
    fn t1_in_three_dimensions() {
        let t1 = gen_direction_set(DirectionLabel::T1, 3).unwrap();
        assert_eq!(t1.len(), 7);
        assert!(!t1.vectors().contains(&vec![1, 1, 1]));
        assert!(!t1.vectors().contains(&vec![1, 1, -1]));
        assert!(t1.vectors().contains(&vec![1, 1, 0]));
    }

    #[test]
    fn t2_and_t_examples() {
        let t2 = gen_direction_set(DirectionLabel::T2, 3).unwrap();
        let want = vec![vec![-1, -1, 0], vec![-1, 1, 0], vec![0, 0, -1], vec![0, 0, 1], vec![1, -1, 0], vec![1, 1, 0]];
        assert_eq!(t2.vectors(), want.as_slice());
        let t = gen_direction_set(DirectionLabel::T, 4).unwrap();
        assert_eq!(t.len(), 8);
        assert!(t.vectors().iter().all(|v| v[3] == 0 && v[..3].iter().all(|x| x.abs() == 1)));
    }

    #[test]
    fn generator_errors() {
        assert!(gen_direction_set(DirectionLabel::T1, 1).is_err());
        assert!(gen_direction_set(DirectionLabel::Custom, 3).is_err());
    }

    #[test]
    fn t1_predicate_matches_generator() {
        for n in 2..=4 {
            let t1 = gen_direction_set(DirectionLabel::T1, n).unwrap();
            let mut all = vec![vec![]];
            for _ in 0..n {
                all = all
                    .into_iter()
                    .flat_map(|p: Vec<i64>| {
                        (-1..=1).map(move |c| {
                            let mut q = p.clone();
                            q.push(c);
                            q
                        })
                    })
                    .collect();
            }
            for y in all {
                assert_eq!(t1_member(&y), t1.vectors().binary_search(&y).is_ok(), "{y:?}");
            }
        }
    }

    #[test]
    fn pair_condition_examples() {
        assert!(pair_condition(&SymBody::ell1(3).unwrap()));
        assert!(!pair_condition(&SymBody::cube(3).unwrap()));
        assert!(!pair_condition(&SymBody::cube_cap_l1(3, q(2)).unwrap()));
        let body = SymBody::cube_cap_l1(5, qr(3, 2)).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                if i != j {
                    assert_eq!(pair_condition_at(&body, i, j), pair_condition(&body));
                }
            }
        }
    }

    #[test]
    fn strategy_examples() {
        assert_eq!(select_strategy(&SymBody::cube(3).unwrap()), Strategy::Cube);
        assert_eq!(select_strategy(&SymBody::cube_cap_l1(3, q(2)).unwrap()), Strategy::NearT1);
        assert_eq!(select_strategy(&SymBody::ell1(6).unwrap()), Strategy::Far);
        assert_eq!(select_strategy(&SymBody::lp(2, q(4)).unwrap()), Strategy::NearT2);
    }

    #[test]
    fn norm_implication_examples() {
        let cap = SymBody::cube_cap_l1(3, q(2)).unwrap();
        assert_eq!(
            norm_implication_check(&cap, &qvec(&[1, 1, 0]), &[-1, -1, 0]).unwrap(),
            NormImplication::Illuminated
        );
        let ell1 = SymBody::ell1(3).unwrap();
        let e1 = qvec(&[1, 0, 0]);
        assert_eq!(
            norm_implication_check(&ell1, &e1, &[-1, 1, 0]).unwrap(),
            NormImplication::BoundHolds(Scalar::Exact(q(2)))
        );
        assert!(matches!(norm_implication_check(&ell1, &e1, &[1, 1, 0]), Err(Error::Inadmissible(_))));
        assert_eq!(admissible_directions(&e1).len(), 9);
    }

    #[test]
    fn directions_file_round_trip() {
        let text = "# comment\n1 -1/2 0\n\n2 -1 0  # same ray\n0 0 3\n";
        let set = parse_directions(text, 3).unwrap();
        assert_eq!(set.vectors(), &[vec![0, 0, 1], vec![2, -1, 0]]);
        assert_eq!(parse_directions(&set.to_text(), 3).unwrap().vectors(), set.vectors());
        assert!(matches!(parse_directions("0 0 0\n", 3), Err(Error::ZeroVector)));
        assert!(parse_directions("1 0\n", 3).is_err());
        assert!(matches!(parse_directions("# nothing\n", 3), Err(Error::EmptyDirections)));
    }
}
