//! Random sign-and-projection direction sets.
//!
//! A trial draws a uniform sign vector `X ∈ {-1,1}^n` and an independent
//! uniform coordinate subset `S` of size `2k-1`; its direction is `X`
//! restricted to `S`. The set `R_k` is a multiset of such trials. The coverage
//! event `E_k` asks that every sign pattern with support size `k` be matched
//! by some trial (support contained in `S`, signs agreeing with `X`).
//!
//! Randomness: `ChaCha8Rng` (crate `rand_chacha` 0.3) seeded with
//! `seed_from_u64(seed)`, one ChaCha stream per trial, stream id
//! `(k << 40) | trial`. Supports come from a partial Fisher-Yates shuffle
//! with `u32` ranges. Outputs are therefore identical on every platform and
//! independent of evaluation order.

use std::collections::HashSet;
use std::fmt::Write as _;

use num::bigint::{BigInt, BigUint};
use num::{One, ToPrimitive, Zero};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::combinatorics::{binomial, combinations, LnFactorials};
use crate::error::{Error, Result};
use crate::rational::{ln_bigint, ln_q, Q};

/// Largest `n` for which exhaustive `E_k` checks are attempted by default.
pub const EK_EXHAUSTIVE_CAP: usize = 20;
/// Maximum number of missing patterns listed in a coverage report.
pub const MISSING_LIST_LIMIT: usize = 1000;

fn check_k(n: usize, k: usize) -> Result<()> {
    if n < 1 || k < 1 || 2 * k - 1 > n {
        return Err(Error::OutOfRange(format!("need 1 <= k <= ceil(n/2), got n={n}, k={k}")));
    }
    if n > 64 {
        return Err(Error::CapExceeded(format!("n = {n} > 64")));
    }
    Ok(())
}

/// One draw: support of size `2k-1` (sorted) and a full sign vector.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trial {
    pub support: Vec<usize>,
    pub signs: Vec<i8>,
}

impl Trial {
    pub fn direction(&self) -> Vec<i64> {
        let mut d = vec![0i64; self.signs.len()];
        for &i in &self.support {
            d[i] = self.signs[i] as i64;
        }
        d
    }

    fn support_mask(&self) -> u64 {
        self.support.iter().fold(0, |m, &i| m | 1 << i)
    }

    fn plus_mask(&self) -> u64 {
        self.signs.iter().enumerate().filter(|(_, &s)| s > 0).fold(0, |m, (i, _)| m | 1 << i)
    }
}

/// Draws one trial from `rng`.
pub fn sample_trial<R: RngCore>(n: usize, k: usize, rng: &mut R) -> Result<Trial> {
    check_k(n, k)?;
    let m = 2 * k - 1;
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..m {
        let j = rng.gen_range(i as u32..n as u32) as usize;
        idx.swap(i, j);
    }
    let mut support = idx[..m].to_vec();
    support.sort_unstable();
    let mut signs = Vec::with_capacity(n);
    let mut bits = 0u64;
    for i in 0..n {
        if i % 64 == 0 {
            bits = rng.next_u64();
        }
        signs.push(if bits >> (i % 64) & 1 == 1 { 1 } else { -1 });
    }
    Ok(Trial { support, signs })
}

fn trial_rng(seed: u64, k: usize, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((k as u64) << 40) | index);
    rng
}

/// Derives an independent seed for adaptive round `round`.
pub fn round_seed(seed: u64, round: u32) -> u64 {
    if round == 0 {
        return seed;
    }
    // splitmix64 finalizer
    let mut z = seed ^ (round as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `⌊2^n / n²⌋`.
pub fn default_trial_count(n: usize) -> BigUint {
    (BigUint::one() << n) / BigUint::from(n * n)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RandomSetRealization {
    pub n: usize,
    pub k: usize,
    pub seed: u64,
    pub trials: Vec<Trial>,
}

impl RandomSetRealization {
    pub fn len(&self) -> usize {
        self.trials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trials.is_empty()
    }

    /// No trials at all (e.g. the default count at n = 3).
    pub fn is_degenerate(&self) -> bool {
        self.trials.is_empty()
    }

    pub fn directions(&self) -> Vec<Vec<i64>> {
        self.trials.iter().map(Trial::direction).collect()
    }

    pub fn distinct_count(&self) -> usize {
        self.directions().into_iter().collect::<HashSet<_>>().len()
    }

    /// Header `n k L seed`, then `S:i1,i2,…;X:±1…` per trial (0-based indices).
    pub fn to_dump(&self) -> String {
        let mut s = format!("{} {} {} {}\n", self.n, self.k, self.trials.len(), self.seed);
        for t in &self.trials {
            let sup: Vec<String> = t.support.iter().map(usize::to_string).collect();
            let signs: String = t.signs.iter().map(|&v| if v > 0 { '+' } else { '-' }).collect();
            let _ = writeln!(s, "S:{};X:{}", sup.join(","), signs);
        }
        s
    }

    pub fn from_dump(text: &str) -> Result<Self> {
        let bad = |m: &str| Error::Parse(format!("realization dump: {m}"));
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: Vec<&str> = lines.next().ok_or_else(|| bad("empty"))?.split_whitespace().collect();
        if header.len() != 4 {
            return Err(bad("header must be `n k L seed`"));
        }
        let num = |s: &str| s.parse::<u64>().map_err(|_| bad("bad header number"));
        let (n, k, len, seed) = (num(header[0])? as usize, num(header[1])? as usize, num(header[2])?, num(header[3])?);
        check_k(n, k)?;
        let mut trials = Vec::new();
        for line in lines {
            let (s_part, x_part) = line.trim().split_once(';').ok_or_else(|| bad("missing ';'"))?;
            let s_part = s_part.strip_prefix("S:").ok_or_else(|| bad("missing S:"))?;
            let x_part = x_part.strip_prefix("X:").ok_or_else(|| bad("missing X:"))?;
            let support = s_part
                .split(',')
                .map(|v| v.parse::<usize>().map_err(|_| bad("bad index")))
                .collect::<Result<Vec<_>>>()?;
            let signs = x_part
                .chars()
                .map(|c| match c {
                    '+' => Ok(1),
                    '-' => Ok(-1),
                    _ => Err(bad("bad sign")),
                })
                .collect::<Result<Vec<i8>>>()?;
            if support.len() != 2 * k - 1 || signs.len() != n || support.iter().any(|&i| i >= n) {
                return Err(bad("trial shape does not match header"));
            }
            trials.push(Trial { support, signs });
        }
        if trials.len() as u64 != len {
            return Err(bad("trial count does not match header"));
        }
        Ok(Self { n, k, seed, trials })
    }
}

/// Builds `R_k` with `count` trials (default `⌊2^n/n²⌋`).
pub fn build_rk(n: usize, k: usize, count: Option<usize>, seed: u64) -> Result<RandomSetRealization> {
    check_k(n, k)?;
    let count = match count {
        Some(c) => c,
        None => default_trial_count(n)
            .to_usize()
            .filter(|&c| c <= 1 << 24)
            .ok_or_else(|| Error::CapExceeded(format!("default trial count at n = {n}")))?,
    };
    let trials =
        (0..count as u64).map(|l| sample_trial(n, k, &mut trial_rng(seed, k, l))).collect::<Result<Vec<_>>>()?;
    Ok(RandomSetRealization { n, k, seed, trials })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoverageMode {
    /// Enumerate every pattern; refuses `n` above the cap.
    Exhaustive { cap: usize },
    /// Test `samples` uniformly random patterns.
    Sampled { samples: usize, seed: u64 },
}

impl Default for CoverageMode {
    fn default() -> Self {
        CoverageMode::Exhaustive { cap: EK_EXHAUSTIVE_CAP }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverageReport {
    pub covered: bool,
    /// Patterns examined (all `C(n,k)·2^k` in exhaustive mode).
    pub examined: u64,
    pub missing_count: u64,
    /// Missing sign patterns, canonical order, at most [`MISSING_LIST_LIMIT`].
    pub missing: Vec<Vec<i8>>,
    pub sampled: bool,
}

fn pattern_vector(n: usize, mask: u64, plus: u64) -> Vec<i8> {
    (0..n)
        .map(|i| {
            if mask >> i & 1 == 0 {
                0
            } else if plus >> i & 1 == 1 {
                1
            } else {
                -1
            }
        })
        .collect()
}

/// Checks the coverage event `E_k` for a realization.
pub fn check_ek(real: &RandomSetRealization, mode: CoverageMode) -> Result<CoverageReport> {
    let (n, k) = (real.n, real.k);
    check_k(n, k)?;
    match mode {
        CoverageMode::Exhaustive { cap } => {
            if n > cap {
                return Err(Error::CapExceeded(format!("E_k enumeration at n = {n} > {cap}")));
            }
            let mut hit: HashSet<(u64, u64)> = HashSet::new();
            for t in &real.trials {
                let plus = t.plus_mask();
                for sub in combinations(t.support.len(), k) {
                    let mask = sub.iter().fold(0u64, |m, &p| m | 1 << t.support[p]);
                    hit.insert((mask, plus & mask));
                }
            }
            let mut missing = Vec::new();
            let mut missing_count = 0u64;
            let mut examined = 0u64;
            for sub in combinations(n, k) {
                let mask = sub.iter().fold(0u64, |m, &i| m | 1 << i);
                for s in 0u64..1 << k {
                    // sign bits assigned to support positions in order
                    let plus = sub.iter().enumerate().filter(|(b, _)| s >> b & 1 == 1).fold(0, |m, (_, &i)| m | 1 << i);
                    examined += 1;
                    if !hit.contains(&(mask, plus)) {
                        missing_count += 1;
                        if missing.len() < MISSING_LIST_LIMIT {
                            missing.push(pattern_vector(n, mask, plus));
                        }
                    }
                }
            }
            missing.sort();
            Ok(CoverageReport { covered: missing_count == 0, examined, missing_count, missing, sampled: false })
        }
        CoverageMode::Sampled { samples, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let masks: Vec<(u64, u64)> = real.trials.iter().map(|t| (t.support_mask(), t.plus_mask())).collect();
            let mut missing = Vec::new();
            let mut missing_count = 0;
            for _ in 0..samples {
                let mut idx: Vec<usize> = (0..n).collect();
                for i in 0..k {
                    let j = rng.gen_range(i as u32..n as u32) as usize;
                    idx.swap(i, j);
                }
                let mask = idx[..k].iter().fold(0u64, |m, &i| m | 1 << i);
                let plus = rng.next_u64() & mask;
                if !masks.iter().any(|&(sm, pm)| sm & mask == mask && pm & mask == plus) {
                    missing_count += 1;
                    if missing.len() < MISSING_LIST_LIMIT {
                        missing.push(pattern_vector(n, mask, plus));
                    }
                }
            }
            missing.sort();
            missing.dedup();
            Ok(CoverageReport {
                covered: missing_count == 0,
                examined: samples as u64,
                missing_count,
                missing,
                sampled: true,
            })
        }
    }
}

/// Probability that a single trial covers a fixed pattern of support size `k`:
/// `2^{-k} · C(n-k, k-1) / C(n, 2k-1)`.
pub fn trial_success_prob(n: usize, k: usize) -> Result<Q> {
    if k < 1 || 2 * k - 1 > n {
        return Err(Error::OutOfRange(format!("need 1 <= k <= ceil(n/2), got n={n}, k={k}")));
    }
    let (n64, k64) = (n as u64, k as u64);
    let num = BigInt::from(binomial(n64 - k64, k64 - 1));
    let den = BigInt::from(binomial(n64, 2 * k64 - 1)) << k;
    Ok(Q::new(num, den))
}

/// Monte Carlo estimate of the per-trial hit probability for one pattern.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarlo {
    pub trials: u64,
    pub hits: u64,
    pub frequency: f64,
    /// Binomial standard deviation of the frequency under the exact `q`.
    pub sigma: f64,
}

impl MonteCarlo {
    pub fn within_sigmas(&self, q: f64, sigmas: f64) -> bool {
        (self.frequency - q).abs() <= sigmas * self.sigma
    }
}

/// Draws `trials` independent trials and counts those covering `pattern`.
pub fn monte_carlo_hits(n: usize, k: usize, pattern: &[i8], trials: u64, seed: u64) -> Result<MonteCarlo> {
    check_k(n, k)?;
    if pattern.len() != n || pattern.iter().filter(|&&v| v != 0).count() != k {
        return Err(Error::OutOfRange("pattern must have length n and support size k".into()));
    }
    let q = crate::rational::to_f64(&trial_success_prob(n, k)?);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0u64;
    for _ in 0..trials {
        let t = sample_trial(n, k, &mut rng)?;
        let ok = pattern
            .iter()
            .enumerate()
            .all(|(i, &p)| p == 0 || (t.support.binary_search(&i).is_ok() && t.signs[i] == p));
        hits += ok as u64;
    }
    let frequency = hits as f64 / trials as f64;
    let sigma = (q * (1.0 - q) / trials as f64).sqrt();
    Ok(MonteCarlo { trials, hits, frequency, sigma })
}

/// Relative tolerance used for the float comparisons in the bound chain.
pub const CHAIN_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityReport {
    pub n: usize,
    pub k: usize,
    /// Exact per-trial success probability, as `p/q` text.
    pub q: String,
    pub ln_q: f64,
    /// `ln[(2^k/(2n²))(1-k/n)^{n-k}(k/n)^k]`.
    pub ln_stirling: f64,
    /// `ln[(2/3)^n/(2n²)]`.
    pub ln_final: f64,
    pub q_ge_stirling: bool,
    pub stirling_ge_final: bool,
    /// `⌊2^n/n²⌋` as decimal text.
    pub trial_count: String,
    pub monte_carlo: Option<MonteCarlo>,
}

impl ProbabilityReport {
    pub fn chain_holds(&self) -> bool {
        self.q_ge_stirling && self.stirling_ge_final
    }
}

/// `f(t) = 2^t (1-t)^{1-t} t^t`, minimized at `t = 1/3`.
pub fn f_of_t(t: f64) -> f64 {
    let xlnx = |v: f64| if v == 0.0 { 0.0 } else { v * v.ln() };
    (t * std::f64::consts::LN_2 + xlnx(1.0 - t) + xlnx(t)).exp()
}

pub fn ln_stirling_bound(n: usize, k: usize) -> f64 {
    let (nf, kf) = (n as f64, k as f64);
    let t = kf / nf;
    kf * std::f64::consts::LN_2 - (2.0 * nf * nf).ln() + (nf - kf) * (1.0 - t).ln() + kf * t.ln()
}

pub fn ln_final_bound(n: usize) -> f64 {
    let nf = n as f64;
    nf * (2.0f64 / 3.0).ln() - (2.0 * nf * nf).ln()
}

// a >= b up to relative tolerance, compared in log-space
fn ge_rel(ln_a: f64, ln_b: f64) -> bool {
    ln_a >= ln_b + (1.0 - CHAIN_RTOL).ln()
}

pub fn bound_chain(n: usize, k: usize) -> Result<ProbabilityReport> {
    if n < 2 {
        return Err(Error::OutOfRange(format!("bound chain needs n >= 2, got {n}")));
    }
    let q = trial_success_prob(n, k)?;
    let ln_q = ln_q(&q);
    let ln_stirling = ln_stirling_bound(n, k);
    let ln_final = ln_final_bound(n);
    Ok(ProbabilityReport {
        n,
        k,
        q: crate::rational::fmt_q(&q),
        ln_q,
        ln_stirling,
        ln_final,
        q_ge_stirling: ge_rel(ln_q, ln_stirling),
        stirling_ge_final: ge_rel(ln_stirling, ln_final),
        trial_count: default_trial_count(n).to_string(),
        monte_carlo: None,
    })
}

/// One row of the threshold scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRow {
    pub n: usize,
    /// `k` with the smallest log-margin.
    pub worst_k: usize,
    /// `ln(L·(-ln(1-q))) - ln(k ln 2 + 2n + ln C(n,k))`; nonnegative iff the
    /// miss probability `(1-q)^L` is at most `2^{-k} e^{-2n} / C(n,k)`.
    pub worst_margin: f64,
    pub holds_all_k: bool,
    /// `⌈n/2⌉·⌊2^n/n²⌋ < 2^{n-1}`.
    pub union_bound_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdScan {
    pub rows: Vec<ThresholdRow>,
    /// Smallest `n0` in the range such that every `n >= n0` in the range holds.
    pub n0: Option<usize>,
}

/// `ln(-ln(1-q))` given `ln q`.
fn ln_neg_log1m(ln_q: f64) -> f64 {
    let q = ln_q.exp();
    if q > 1e-8 {
        (-(-q).ln_1p()).ln()
    } else {
        ln_q + q / 2.0
    }
}

/// Scans `n` over `range` for the per-pattern union-bound inequality.
pub fn estimate_threshold_n(range: std::ops::RangeInclusive<usize>) -> Result<ThresholdScan> {
    let (lo, hi) = (*range.start(), *range.end());
    if lo < 2 || hi > 10_000 || lo > hi {
        return Err(Error::OutOfRange(format!("scan range must lie in [2, 10000], got {lo}..={hi}")));
    }
    let lf = LnFactorials::new(hi);
    let mut rows = Vec::with_capacity(hi - lo + 1);
    for n in lo..=hi {
        let count = default_trial_count(n);
        let ln_count = if count.is_zero() { f64::NEG_INFINITY } else { ln_bigint(BigInt::from(count.clone())) };
        let kmax = n.div_ceil(2);
        let mut worst = (0usize, f64::INFINITY);
        for k in 1..=kmax {
            let ln_q =
                -(k as f64) * std::f64::consts::LN_2 + lf.ln_binomial(n - k, k - 1) - lf.ln_binomial(n, 2 * k - 1);
            let rhs = k as f64 * std::f64::consts::LN_2 + 2.0 * n as f64 + lf.ln_binomial(n, k);
            let margin = ln_count + ln_neg_log1m(ln_q) - rhs.ln();
            if margin < worst.1 {
                worst = (k, margin);
            }
        }
        let union_total = BigUint::from(kmax) * &count;
        rows.push(ThresholdRow {
            n,
            worst_k: worst.0,
            worst_margin: worst.1,
            holds_all_k: worst.1 >= 0.0,
            union_bound_ok: union_total < (BigUint::one() << (n - 1)),
        });
    }
    let mut n0 = None;
    for row in rows.iter().rev() {
        if row.holds_all_k {
            n0 = Some(row.n);
        } else {
            break;
        }
    }
    Ok(ThresholdScan { rows, n0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{qr, to_f64};

    #[test]
    fn trial_shapes() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let t = sample_trial(3, 2, &mut rng).unwrap();
            assert!(t.direction().iter().all(|v| v.abs() == 1));
            let t = sample_trial(4, 1, &mut rng).unwrap();
            assert_eq!(t.direction().iter().filter(|v| **v != 0).count(), 1);
        }
        assert!(sample_trial(4, 3, &mut rng).is_err());
        assert!(sample_trial(4, 0, &mut rng).is_err());
    }

    #[test]
    fn default_counts() {
        let r = build_rk(12, 2, None, 9).unwrap();
        assert_eq!(r.len(), 28);
        assert!(r.directions().iter().all(|d| d.iter().filter(|v| **v != 0).count() == 3));
        let r = build_rk(3, 1, None, 9).unwrap();
        assert!(r.is_degenerate());
    }

    #[test]
    fn realizations_are_reproducible() {
        let a = build_rk(8, 2, Some(10), 77).unwrap();
        assert_eq!(a, build_rk(8, 2, Some(10), 77).unwrap());
        assert_ne!(a, build_rk(8, 2, Some(10), 78).unwrap());
        assert_eq!(RandomSetRealization::from_dump(&a.to_dump()).unwrap(), a);
    }

    fn real(n: usize, k: usize, trials: Vec<(Vec<usize>, Vec<i8>)>) -> RandomSetRealization {
        RandomSetRealization {
            n,
            k,
            seed: 0,
            trials: trials.into_iter().map(|(support, signs)| Trial { support, signs }).collect(),
        }
    }

    #[test]
    fn coverage_examples() {
        let r = real(2, 1, vec![(vec![0], vec![-1, 1])]);
        let rep = check_ek(&r, CoverageMode::default()).unwrap();
        assert!(!rep.covered);
        assert_eq!(rep.missing, vec![vec![0, -1], vec![0, 1], vec![1, 0]]);

        let r = real(
            2,
            1,
            vec![(vec![0], vec![-1, 1]), (vec![0], vec![1, 1]), (vec![1], vec![1, -1]), (vec![1], vec![1, 1])],
        );
        assert!(check_ek(&r, CoverageMode::default()).unwrap().covered);

        let trials =
            (0..64).map(|m| (vec![0, 1, 2], (0..4).map(|b| if m >> b & 1 == 1 { 1 } else { -1 }).collect())).collect();
        let rep = check_ek(&real(4, 2, trials), CoverageMode::default()).unwrap();
        assert!(!rep.covered);
        assert_eq!(rep.missing_count, 12);
        assert!(rep.missing.iter().all(|p| p[3] != 0));
    }

    #[test]
    fn exact_probabilities() {
        assert_eq!(trial_success_prob(4, 1).unwrap(), qr(1, 8));
        assert_eq!(trial_success_prob(2, 1).unwrap(), qr(1, 4));
        assert_eq!(trial_success_prob(5, 3).unwrap(), qr(1, 8));
        assert!(trial_success_prob(4, 3).is_err());
    }

    #[test]
    fn chain_examples() {
        let r = bound_chain(3, 1).unwrap();
        assert_eq!(r.q, "1/6");
        assert!((r.ln_stirling - (4.0f64 / 243.0).ln()).abs() < 1e-12);
        assert!((r.ln_final - (8.0f64 / 27.0 / 18.0).ln()).abs() < 1e-12);
        assert!(r.chain_holds());
        let r = bound_chain(6, 2).unwrap();
        assert!((r.ln_stirling - r.ln_final).abs() < 1e-12);
        let r = bound_chain(2, 1).unwrap();
        assert!(r.chain_holds() && r.q == "1/4");
    }

    #[test]
    fn f_minimum() {
        let m = f_of_t(1.0 / 3.0);
        assert!((m - 2.0 / 3.0).abs() < 1e-15);
        for i in 0..=1000 {
            assert!(f_of_t(i as f64 / 1000.0) >= m - 1e-15);
        }
    }

    #[test]
    fn threshold_examples() {
        let scan = estimate_threshold_n(4..=8).unwrap();
        assert!(!scan.rows[0].holds_all_k);
        assert!(scan.rows[4].union_bound_ok);
        // n = 4, k = 1: (7/8)^1 vs e^{-8}/8
        let q = to_f64(&trial_success_prob(4, 1).unwrap());
        assert!((1.0 - q) > (-8.0f64).exp() / 8.0);
    }
}
