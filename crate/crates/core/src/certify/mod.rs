//! Whole-body illumination certificates.
//!
//! For a polytope it suffices to illuminate every vertex. The normal cone
//! at a relative-interior point of a face is contained in the normal cone
//! of each vertex of that face, so a direction illuminating a vertex
//! illuminates every point of every face through it.
//!
//! Smooth `ℓp` bodies have no vertices. They are checked on a supplied or
//! sampled set of boundary points and the certificate says so.

pub mod cover;
pub mod vertices;

use num::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bodies::{Scalar, SymBody};
use crate::directions::{gen_direction_set, select_strategy, DirectionLabel, DirectionSet, Strategy};
use crate::error::{Error, Result};
use crate::randomized::{build_rk, check_ek, default_trial_count, round_seed, CoverageMode, EK_EXHAUSTIVE_CAP};
use crate::rational::{fmt_q, parse_q, Q};
use crate::subdiff::{ensure_boundary, lp_directional_derivative, PlPoint, LP_TOLERANCE};

pub use cover::{min_illumination_search, CoverInstance, MinIllumination};
pub use vertices::{canonical_vertices, enumerate_vertices, orbit, DEFAULT_VERTEX_CAP};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Certified,
    Uncovered,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckedPoint {
    pub point: Vec<Q>,
    /// Index into the certificate's direction list.
    pub witness: Option<usize>,
    /// Witness derivative, or the least derivative over all directions when
    /// the point is uncovered.
    pub derivative: Scalar,
}

/// Summary of one random set in the far regime.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FarSetSummary {
    pub k: usize,
    pub trials: usize,
    pub distinct: usize,
    pub degenerate: bool,
    /// Coverage event status; `None` when above the enumeration cap.
    pub ek_covered: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FarReport {
    pub mode: Mode,
    pub seed: u64,
    /// Rounds used (1 in faithful mode).
    pub rounds: u32,
    /// Seed of the final round's random sets.
    pub round_seed: u64,
    pub sets: Vec<FarSetSummary>,
    /// Distinct directions in `T ∪ R_1 ∪ … ∪ R_⌈n/2⌉` before reduction.
    pub union_distinct: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IlluminationCertificate {
    pub body: SymBody,
    pub strategy: String,
    pub directions: DirectionSet,
    pub points: Vec<CheckedPoint>,
    /// True when `points` are all vertices of a polytope (a full proof).
    pub exhaustive: bool,
    pub far: Option<FarReport>,
}

impl IlluminationCertificate {
    pub fn status(&self) -> Status {
        if self.points.iter().all(|p| p.witness.is_some()) {
            Status::Certified
        } else {
            Status::Uncovered
        }
    }

    pub fn is_certified(&self) -> bool {
        self.status() == Status::Certified
    }

    pub fn uncovered(&self) -> Vec<&Vec<Q>> {
        self.points.iter().filter(|p| p.witness.is_none()).map(|p| &p.point).collect()
    }

    pub fn distinct_direction_count(&self) -> usize {
        self.directions.len()
    }

    pub fn to_file(&self) -> CertificateFile {
        let scalar = |s: &Scalar| match s {
            Scalar::Exact(v) => fmt_q(v),
            Scalar::Approx(v) => format!("{v:e}"),
        };
        CertificateFile {
            body: self.body.to_spec(),
            body_digest: self.body.digest(),
            strategy: self.strategy.clone(),
            label: self.directions.label,
            n: self.body.dim(),
            directions: self.directions.vectors().iter().map(|v| v.iter().map(|x| x.to_string()).collect()).collect(),
            points: self
                .points
                .iter()
                .map(|p| PointRecord {
                    point: p.point.iter().map(fmt_q).collect(),
                    witness: p.witness,
                    derivative: scalar(&p.derivative),
                })
                .collect(),
            uncovered: self.points.iter().enumerate().filter(|(_, p)| p.witness.is_none()).map(|(i, _)| i).collect(),
            status: self.status(),
            exhaustive: self.exhaustive,
            distinct_direction_count: self.distinct_direction_count(),
            far: self.far.clone(),
        }
    }

    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_file()).expect("certificate serializes");
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub point: Vec<String>,
    pub witness: Option<usize>,
    pub derivative: String,
}

/// On-disk certificate. Rationals are `p/q` strings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateFile {
    pub body: crate::bodies::BodySpec,
    pub body_digest: String,
    pub strategy: String,
    pub label: DirectionLabel,
    pub n: usize,
    pub directions: Vec<Vec<String>>,
    pub points: Vec<PointRecord>,
    pub uncovered: Vec<usize>,
    pub status: Status,
    pub exhaustive: bool,
    pub distinct_direction_count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub far: Option<FarReport>,
}

impl CertificateFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Rebuilds the certificate and re-checks every recorded derivative.
    /// Nothing is regenerated: the directions and points come from the file.
    pub fn verify(&self) -> Result<IlluminationCertificate> {
        let body = self.body.build()?;
        if body.digest() != self.body_digest {
            return Err(Error::Certificate("body digest mismatch".into()));
        }
        let vectors = self
            .directions
            .iter()
            .map(|v| {
                v.iter()
                    .map(|s| s.trim().parse::<i64>().map_err(|_| Error::Parse(format!("bad direction entry {s:?}"))))
                    .collect::<Result<Vec<i64>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let directions = DirectionSet::new(self.label, self.n, vectors)?;
        if directions.len() != self.directions.len() {
            return Err(Error::Certificate("direction list is not canonical".into()));
        }
        let mut points = Vec::with_capacity(self.points.len());
        for (idx, rec) in self.points.iter().enumerate() {
            let x = rec.point.iter().map(|s| parse_q(s)).collect::<Result<Vec<Q>>>()?;
            let recorded = match body.is_piecewise_linear() {
                true => Scalar::Exact(parse_q(&rec.derivative)?),
                false => Scalar::Approx(
                    rec.derivative.parse::<f64>().map_err(|_| Error::Parse("bad float derivative".into()))?,
                ),
            };
            let checked = check_point(&body, &directions, &x)?;
            let same_value = match (&checked.derivative, &recorded) {
                (Scalar::Exact(a), Scalar::Exact(b)) => a == b,
                (Scalar::Approx(a), Scalar::Approx(b)) => (a - b).abs() <= 1e-12 * a.abs().max(1.0),
                _ => false,
            };
            if checked.witness != rec.witness || !same_value {
                return Err(Error::Certificate(format!("point {idx} does not reproduce")));
            }
            points.push(checked);
        }
        let cert = IlluminationCertificate {
            body,
            strategy: self.strategy.clone(),
            directions,
            points,
            exhaustive: self.exhaustive,
            far: self.far.clone(),
        };
        if cert.status() != self.status {
            return Err(Error::Certificate("status does not reproduce".into()));
        }
        Ok(cert)
    }
}

fn is_illuminating(d: &Scalar) -> bool {
    match d {
        Scalar::Exact(v) => v.is_negative(),
        Scalar::Approx(v) => *v < -LP_TOLERANCE,
    }
}

fn less(a: &Scalar, b: &Scalar) -> bool {
    match (a, b) {
        (Scalar::Exact(x), Scalar::Exact(y)) => x < y,
        _ => a.to_f64() < b.to_f64(),
    }
}

/// First direction (in list order) with negative derivative at `x`.
fn check_point(body: &SymBody, directions: &DirectionSet, x: &[Q]) -> Result<CheckedPoint> {
    ensure_boundary(body, x)?;
    let mut best: Option<Scalar> = None;
    if body.is_piecewise_linear() {
        let pt = PlPoint::new(body, x)?;
        for (i, y) in directions.vectors().iter().enumerate() {
            let d = Scalar::Exact(pt.derivative(body, y));
            if is_illuminating(&d) {
                return Ok(CheckedPoint { point: x.to_vec(), witness: Some(i), derivative: d });
            }
            if best.as_ref().is_none_or(|b| less(&d, b)) {
                best = Some(d);
            }
        }
    } else {
        let xf: Vec<f64> = x.iter().map(crate::rational::to_f64).collect();
        for (i, y) in directions.vectors().iter().enumerate() {
            let yf: Vec<f64> = y.iter().map(|&v| v as f64).collect();
            let d = Scalar::Approx(lp_directional_derivative(body, &xf, &yf)?);
            if is_illuminating(&d) {
                return Ok(CheckedPoint { point: x.to_vec(), witness: Some(i), derivative: d });
            }
            if best.as_ref().is_none_or(|b| less(&d, b)) {
                best = Some(d);
            }
        }
    }
    Ok(CheckedPoint { point: x.to_vec(), witness: None, derivative: best.expect("nonempty directions") })
}

/// Checks every point against the directions. For polyhedral bodies the
/// points default to all vertices; smooth bodies need explicit points.
pub fn certify_directions(
    body: &SymBody,
    directions: &DirectionSet,
    points: Option<&[Vec<Q>]>,
) -> Result<IlluminationCertificate> {
    if directions.is_empty() {
        return Err(Error::EmptyDirections);
    }
    body.check_dim(directions.n)?;
    let (owned, exhaustive);
    let pts: &[Vec<Q>] = match points {
        Some(p) => {
            exhaustive = false;
            p
        }
        None if body.is_piecewise_linear() => {
            owned = enumerate_vertices(body, DEFAULT_VERTEX_CAP)?;
            exhaustive = true;
            &owned
        }
        None => return Err(Error::NotPiecewiseLinear),
    };
    let checked = pts.iter().map(|x| check_point(body, directions, x)).collect::<Result<Vec<_>>>()?;
    Ok(IlluminationCertificate {
        body: body.clone(),
        strategy: directions.label.to_string(),
        directions: directions.clone(),
        points: checked,
        exhaustive,
        far: None,
    })
}

/// Same as [`certify_directions`] with an explicit vertex cap.
pub fn certify_vertices(body: &SymBody, directions: &DirectionSet, cap: usize) -> Result<IlluminationCertificate> {
    let v = enumerate_vertices(body, cap)?;
    let mut cert = certify_directions(body, directions, Some(&v))?;
    cert.exhaustive = true;
    Ok(cert)
}

/// Structured boundary sample: every nonzero `{-1,0,1}` pattern and every
/// `{0,1,2}`-modulus pattern up to symmetry (sign/tie representatives,
/// `n <= 8`), plus `random` random points, all scaled onto the boundary.
/// Exact for polyhedral bodies; rounded to rationals for `ℓp`.
pub fn boundary_sample(body: &SymBody, random: usize, seed: u64) -> Result<Vec<Vec<Q>>> {
    let n = body.dim();
    let mut raw: Vec<Vec<i64>> = Vec::new();
    if n <= 8 {
        let mut pats = vec![vec![]];
        for _ in 0..n {
            pats = pats
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
        raw.extend(pats.into_iter().filter(|p| p.iter().any(|&v| v != 0)));
        // tie structures with two distinct moduli
        for ones in 0..n {
            for twos in 1..=n - ones {
                let mut v = vec![2; twos];
                v.extend(std::iter::repeat_n(1, ones));
                v.extend(std::iter::repeat_n(0, n - twos - ones));
                raw.push(v);
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..random {
        let range = if rng.gen_bool(0.5) { 3 } else { 50 };
        let v: Vec<i64> = (0..n).map(|_| rng.gen_range(-range..=range)).collect();
        if v.iter().any(|&c| c != 0) {
            raw.push(v);
        }
    }
    raw.into_iter().map(|v| scale_to_boundary(body, &v)).collect()
}

pub fn scale_to_boundary(body: &SymBody, v: &[i64]) -> Result<Vec<Q>> {
    let x: Vec<Q> = v.iter().map(|&c| Q::from_integer(c.into())).collect();
    if body.is_piecewise_linear() {
        let nrm = body.norm_exact(&x)?;
        Ok(x.iter().map(|c| c / &nrm).collect())
    } else {
        let xf: Vec<f64> = v.iter().map(|&c| c as f64).collect();
        let nrm = body.norm_f64(&xf)?;
        Ok(xf.iter().map(|c| Q::from_float(c / nrm).unwrap_or_else(Q::zero)).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// One round with `⌊2^n/n²⌋` trials per random set.
    Faithful,
    /// Resample with doubling counts until certified.
    Adaptive,
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "faithful" => Ok(Mode::Faithful),
            "adaptive" => Ok(Mode::Adaptive),
            other => Err(Error::Parse(format!("unknown mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct AutoOptions {
    pub mode: Mode,
    pub max_rounds: u32,
    pub vertex_cap: usize,
    /// Random boundary points for smooth bodies.
    pub lp_samples: usize,
    /// Largest pool radius `r` tried when a certified polyhedral result is
    /// not below `2^n`: an exact minimum cover over primitive vectors in
    /// `{-r..r}^n`, for `r = 1, 2, …`. Zero disables the fallback.
    pub pool_radius: i64,
}

impl Default for AutoOptions {
    fn default() -> Self {
        Self { mode: Mode::Adaptive, max_rounds: 16, vertex_cap: DEFAULT_VERTEX_CAP, lp_samples: 2000, pool_radius: 2 }
    }
}

#[derive(Debug, Clone)]
pub struct AutoOutcome {
    pub strategy: Strategy,
    /// Every strategy attempted, with its certification result.
    pub attempts: Vec<(Strategy, bool)>,
    pub directions: DirectionSet,
    pub certificate: IlluminationCertificate,
    /// Pool radius of the minimum-cover fallback, when it was used.
    pub pool_radius: Option<i64>,
}

impl AutoOutcome {
    pub fn is_certified(&self) -> bool {
        self.certificate.is_certified()
    }

    /// Distinct directions emitted.
    pub fn direction_count(&self) -> usize {
        self.directions.len()
    }

    /// `count < 2^n`; only meaningful for non-cube bodies.
    pub fn within_budget(&self) -> bool {
        let n = self.directions.n;
        n >= 64 || (self.direction_count() as u128) < (1u128 << n)
    }
}

fn check_points(body: &SymBody, opts: &AutoOptions, seed: u64) -> Result<(Vec<Vec<Q>>, bool)> {
    if body.is_piecewise_linear() {
        Ok((enumerate_vertices(body, opts.vertex_cap)?, true))
    } else {
        Ok((boundary_sample(body, opts.lp_samples, seed)?, false))
    }
}

fn certify_on(
    body: &SymBody,
    set: &DirectionSet,
    points: &[Vec<Q>],
    exhaustive: bool,
    strategy: Strategy,
) -> Result<IlluminationCertificate> {
    let mut cert = certify_directions(body, set, Some(points))?;
    cert.exhaustive = exhaustive;
    cert.strategy = strategy.to_string();
    Ok(cert)
}

/// End-to-end driver: choose a strategy, certify, escalate on failure.
///
/// The escalation order is `NearT2 → NearT1 → Far`. In the far regime the
/// set `T ∪ R_1 ∪ … ∪ R_⌈n/2⌉` is certified and then reduced to a
/// deterministic greedy sub-cover of the checked points, so the emitted
/// list contains only directions that witness something.
pub fn illuminate_auto(body: &SymBody, seed: u64, opts: &AutoOptions) -> Result<AutoOutcome> {
    let (points, exhaustive) = check_points(body, opts, seed)?;
    let mut out = run_strategies(body, seed, opts, &points, exhaustive)?;
    if !body.is_piecewise_linear() || body.is_parallelotope() || !out.is_certified() || out.within_budget() {
        return Ok(out);
    }
    for r in 1..=opts.pool_radius {
        let pool = integer_pool(body.dim(), r)?;
        let Ok(inst) = CoverInstance::build_capped(body, &points, pool.vectors()) else { break };
        let Some(chosen) = inst.minimum() else { continue };
        if chosen.len() >= out.direction_count() {
            continue;
        }
        let set = DirectionSet::new(
            DirectionLabel::Custom,
            body.dim(),
            chosen.iter().map(|&d| pool.vectors()[d].clone()).collect(),
        )?;
        let mut cert = certify_on(body, &set, &points, exhaustive, out.strategy)?;
        cert.far = out.certificate.far.take();
        out.directions = set;
        out.certificate = cert;
        out.pool_radius = Some(r);
        if out.within_budget() {
            break;
        }
    }
    Ok(out)
}

/// Primitive integer vectors with entries in `-r..=r`, excluding zero.
pub fn integer_pool(n: usize, r: i64) -> Result<DirectionSet> {
    let mut pool: Vec<Vec<i64>> = vec![vec![]];
    for _ in 0..n {
        pool = pool
            .into_iter()
            .flat_map(|p| {
                (-r..=r).map(move |c| {
                    let mut q = p.clone();
                    q.push(c);
                    q
                })
            })
            .collect();
    }
    pool.retain(|p| p.iter().any(|&c| c != 0));
    DirectionSet::new(DirectionLabel::Custom, n, pool)
}

fn run_strategies(
    body: &SymBody,
    seed: u64,
    opts: &AutoOptions,
    points: &[Vec<Q>],
    exhaustive: bool,
) -> Result<AutoOutcome> {
    let n = body.dim();
    let first = select_strategy(body);
    let mut attempts = Vec::new();

    let plan: Vec<Strategy> = match first {
        Strategy::Cube => vec![Strategy::Cube],
        Strategy::NearT2 => vec![Strategy::NearT2, Strategy::NearT1, Strategy::Far],
        Strategy::NearT1 => vec![Strategy::NearT1, Strategy::Far],
        Strategy::Far => vec![Strategy::Far],
    };
    let mut last = None;
    for strategy in plan {
        let label = match strategy {
            Strategy::Cube => DirectionLabel::CubeCorners,
            Strategy::NearT2 => DirectionLabel::T2,
            Strategy::NearT1 => DirectionLabel::T1,
            Strategy::Far => {
                let (set, cert) = far_regime(body, seed, opts, points, exhaustive)?;
                attempts.push((strategy, cert.is_certified()));
                return Ok(AutoOutcome { strategy, attempts, directions: set, certificate: cert, pool_radius: None });
            }
        };
        let set = gen_direction_set(label, n)?;
        let cert = certify_on(body, &set, points, exhaustive, strategy)?;
        let ok = cert.is_certified();
        attempts.push((strategy, ok));
        if ok {
            return Ok(AutoOutcome { strategy, attempts, directions: set, certificate: cert, pool_radius: None });
        }
        last = Some((strategy, set, cert));
    }
    let (strategy, directions, certificate) = last.expect("plan is nonempty");
    Ok(AutoOutcome { strategy, attempts, directions, certificate, pool_radius: None })
}

fn far_regime(
    body: &SymBody,
    seed: u64,
    opts: &AutoOptions,
    points: &[Vec<Q>],
    exhaustive: bool,
) -> Result<(DirectionSet, IlluminationCertificate)> {
    let n = body.dim();
    let kmax = n.div_ceil(2);
    let t = gen_direction_set(DirectionLabel::T, n)?;
    let base = default_trial_count(n);
    let base: usize = num::ToPrimitive::to_usize(&base).unwrap_or(usize::MAX).min(1 << 20);
    let rounds = match opts.mode {
        Mode::Faithful => 1,
        Mode::Adaptive => opts.max_rounds.max(1),
    };

    let mut result = None;
    for round in 0..rounds {
        let count = match opts.mode {
            Mode::Faithful => base,
            Mode::Adaptive => base.max(1).saturating_mul(1 << round.min(20)),
        };
        let rseed = round_seed(seed, round);
        let mut vectors: Vec<Vec<i64>> = t.vectors().to_vec();
        let mut sets = Vec::with_capacity(kmax);
        for k in 1..=kmax {
            let real = build_rk(n, k, Some(count), rseed)?;
            let ek_covered = if n <= EK_EXHAUSTIVE_CAP && count <= 1 << 16 {
                Some(check_ek(&real, CoverageMode::default())?.covered)
            } else {
                None
            };
            sets.push(FarSetSummary {
                k,
                trials: real.len(),
                distinct: real.distinct_count(),
                degenerate: real.is_degenerate(),
                ek_covered,
            });
            vectors.extend(real.directions());
        }
        let union = DirectionSet::new(DirectionLabel::Random, n, vectors)?;
        let cert = certify_on(body, &union, points, exhaustive, Strategy::Far)?;
        let far = FarReport {
            mode: opts.mode,
            seed,
            rounds: round + 1,
            round_seed: rseed,
            sets,
            union_distinct: union.len(),
        };
        let done = cert.is_certified();
        result = Some((union, cert, far));
        if done {
            break;
        }
    }
    let (union, cert, far) = result.expect("at least one round");
    if !cert.is_certified() {
        let mut cert = cert;
        cert.far = Some(far);
        return Ok((union, cert));
    }
    let reduced = reduce_to_witnesses(body, &union, points)?;
    let mut cert = certify_on(body, &reduced, points, exhaustive, Strategy::Far)?;
    debug_assert!(cert.is_certified());
    cert.far = Some(far);
    Ok((reduced, cert))
}

/// Greedy sub-cover of `set` over `points`, relabelled `Random`.
fn reduce_to_witnesses(body: &SymBody, set: &DirectionSet, points: &[Vec<Q>]) -> Result<DirectionSet> {
    let chosen: Vec<usize> = if body.is_piecewise_linear() {
        let inst = CoverInstance::build(body, points, set.vectors())?;
        inst.greedy().ok_or_else(|| Error::Invariant("certified set fails to cover".into()))?
    } else {
        let mut used: Vec<usize> = points
            .iter()
            .map(|x| check_point(body, set, x).map(|c| c.witness.expect("certified")))
            .collect::<Result<_>>()?;
        used.sort_unstable();
        used.dedup();
        used
    };
    DirectionSet::new(DirectionLabel::Random, set.n, chosen.iter().map(|&i| set.vectors()[i].clone()).collect())
}

/// Convenience wrapper: parses a certificate and verifies it.
pub fn verify_certificate_json(text: &str) -> Result<IlluminationCertificate> {
    CertificateFile::from_json(text)?.verify()
}
