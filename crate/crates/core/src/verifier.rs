//! Full verification for one `b`: candidate enumeration, skip tests,
//! per-exponent reductions, the second-solution scan and recovery of the
//! coefficients `a`.

use std::time::{Duration, Instant};

use num_bigint::{BigInt, BigUint};
use num_integer::Roots;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::arith::{
    factorize_x2_minus_1, is_perfect_square, rational_square_root, square_divisors,
    squarefree_part, FactorBudget, Factorization,
};
use crate::bounds::{
    build_bound_set, candidate_instance, compute_c_l, compute_c_n2_initial, reduce_adaptive,
    BoundSet, BoundsError, CmMethod,
};
use crate::quadfield::{is_square_u64, pell_fundamental_solution, CandidateCursor, QuadElem};
use crate::realcf::{log_gamma, CertifiedReal, PrecisionPolicy};

/// Tunables; everything here enters the sweep fingerprint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerifyConfig {
    pub policy: PrecisionPolicy,
    pub factor_budget: FactorBudget,
    /// Largest `n'` range the fallback scan may cover after a failed reduction.
    pub scan_cap: u64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            policy: PrecisionPolicy::default(),
            factor_budget: FactorBudget::default(),
            scan_cap: 10_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SkipReason {
    /// `x_n` is not an integer.
    NonIntegral,
    /// `x_n <= √(1+b)`.
    TooSmall,
    /// `1 + b x_n²` is not a square.
    NotSquare,
}

impl SkipReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            SkipReason::NonIntegral => "non_integral",
            SkipReason::TooSmall => "too_small",
            SkipReason::NotSquare => "not_square",
        }
    }
}

/// Square-free part of `x² - 1`, or 1 when factoring ran out of budget.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SquareFreePart {
    Exact(BigUint),
    Fallback,
}

impl SquareFreePart {
    pub fn value(&self) -> BigUint {
        match self {
            SquareFreePart::Exact(p) => p.clone(),
            SquareFreePart::Fallback => BigUint::one(),
        }
    }
}

/// A candidate `x_n` that passed all skip tests.
#[derive(Debug, Clone)]
pub struct KeptCandidate {
    pub z: BigUint,
    pub factorization: Factorization,
    pub pi: SquareFreePart,
    pub c_l: u64,
    pub log_gamma: CertifiedReal,
    /// Largest `n'` scanned for a partner.
    pub scan_to: u64,
}

#[derive(Debug, Clone)]
pub struct CandidateRecord {
    pub n: u64,
    pub x: Option<BigUint>,
    pub skipped: Option<SkipReason>,
    pub kept: Option<KeptCandidate>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReductionOutcome {
    Reduced {
        index: usize,
        q_k: BigInt,
        kappa: BigRational,
        /// Bound on `n2`.
        bound: u64,
    },
    /// Reduction undecided; `fallback` is the unreduced bound on `n2` when it
    /// was small enough to scan.
    Failed { reason: String, fallback: Option<u64> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReductionRecord {
    pub n: u64,
    pub l: u64,
    /// `c_n2(l)`, the unreduced bound on `l·n2`.
    pub c_n2_initial: BigUint,
    pub outcome: ReductionOutcome,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecoveredSolution {
    pub a: BigUint,
    pub y: BigUint,
    pub y_prime: BigUint,
    pub z: BigUint,
    pub z_prime: BigUint,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolutionPair {
    pub n: u64,
    pub n_prime: u64,
    pub x: BigUint,
    pub x_prime: BigUint,
    pub recovered: Vec<RecoveredSolution>,
    /// Set when `x² - 1` could not be fully factored.
    pub partial: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Status {
    UniqueCertified,
    PairsFound,
    NotCertified(String),
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::UniqueCertified => "unique_certified",
            Status::PairsFound => "pairs_found",
            Status::NotCertified(_) => "not_certified",
        }
    }
}

/// Scalar summary of the [`BoundSet`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundSummary {
    pub c1: BigRational,
    pub c_m: BigUint,
    pub c_m_method: CmMethod,
    pub c_n1: u64,
    pub witness_index: usize,
    pub witness_q: BigInt,
    pub witness_a_max: BigInt,
}

impl From<&BoundSet> for BoundSummary {
    fn from(bs: &BoundSet) -> Self {
        BoundSummary {
            c1: bs.c1.clone(),
            c_m: bs.c_m.clone(),
            c_m_method: bs.c_m_method,
            c_n1: bs.c_n1,
            witness_index: bs.witness_index,
            witness_q: bs.cf_mu.q(bs.witness_index).clone(),
            witness_a_max: bs.cf_mu.max_term(bs.witness_index + 1),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Timings {
    pub bounds: Duration,
    pub candidates: Duration,
    pub reductions: Duration,
    pub scan: Duration,
    pub total: Duration,
}

#[derive(Debug, Clone)]
pub struct VerificationReport {
    pub b: u64,
    pub epsilon: Option<QuadElem>,
    pub bounds: Option<BoundSummary>,
    pub candidates: Vec<CandidateRecord>,
    pub reductions: Vec<ReductionRecord>,
    pub pairs: Vec<SolutionPair>,
    pub status: Status,
    /// Why a trivial `unique_certified` needed no work.
    pub reason: Option<String>,
    pub timings: Timings,
}

impl VerificationReport {
    fn trivial(b: u64, reason: &str, started: Instant) -> Self {
        VerificationReport {
            b,
            epsilon: None,
            bounds: None,
            candidates: Vec::new(),
            reductions: Vec::new(),
            pairs: Vec::new(),
            status: Status::UniqueCertified,
            reason: Some(reason.to_string()),
            timings: Timings { total: started.elapsed(), ..Default::default() },
        }
    }

    /// `x` values of all candidates that passed the skip tests.
    pub fn kept_x(&self) -> Vec<BigUint> {
        self.candidates
            .iter()
            .filter(|c| c.kept.is_some())
            .filter_map(|c| c.x.clone())
            .collect()
    }
}

fn to_uint(x: &BigInt) -> Option<BigUint> {
    x.to_biguint()
}

/// Applies the three skip tests; returns `(x, z)` for a kept candidate.
fn classify(b: u64, x: Option<&BigInt>) -> Result<(BigUint, BigUint), (Option<BigUint>, SkipReason)> {
    let x = match x.and_then(to_uint) {
        Some(x) => x,
        None => return Err((None, SkipReason::NonIntegral)),
    };
    let bb = BigUint::from(b);
    let x2 = &x * &x;
    if x2 <= &bb + 1u32 {
        return Err((Some(x), SkipReason::TooSmall));
    }
    match is_perfect_square(&(bb * x2 + 1u32)) {
        Some(z) => Ok((x, z)),
        None => Err((Some(x), SkipReason::NotSquare)),
    }
}

/// All `(a, y, y', z, z')` for a pair `x < x'` whose ratio test passed.
///
/// Returns the tuples and whether recovery was partial (incomplete
/// factorization of `x² - 1`).
pub fn recover_solutions(
    b: u64,
    x: &BigUint,
    x_prime: &BigUint,
    f: &Factorization,
) -> (Vec<RecoveredSolution>, bool) {
    let divisors = match square_divisors(f) {
        Ok(d) => d,
        Err(_) => return (Vec::new(), true),
    };
    let bb = BigUint::from(b);
    let n = x * x - 1u32;
    let n_prime = x_prime * x_prime - 1u32;
    let z = is_perfect_square(&(&bb * x * x + 1u32));
    let z_prime = is_perfect_square(&(&bb * x_prime * x_prime + 1u32));
    let (Some(z), Some(z_prime)) = (z, z_prime) else {
        return (Vec::new(), false);
    };
    let mut out = Vec::new();
    for d in divisors {
        let a = &n / (&d * &d);
        if a <= BigUint::one() || is_perfect_square(&a).is_some() {
            continue;
        }
        if !(&n_prime % &a).is_zero() {
            continue;
        }
        if let Some(y_prime) = is_perfect_square(&(&n_prime / &a)) {
            out.push(RecoveredSolution { a, y: d, y_prime, z: z.clone(), z_prime: z_prime.clone() });
        }
    }
    out.sort_by(|p, q| p.a.cmp(&q.a));
    (out, false)
}

/// All `(z, x)` with `z² - b x² = 1` and `1 <= x <= x_max`, by direct scan.
pub fn brute_force_oracle(b: u64, x_max: u64) -> Vec<(BigUint, BigUint)> {
    let mut out = Vec::new();
    for x in 1..=x_max {
        let t = 1 + b as u128 * (x as u128) * (x as u128);
        let r = t.sqrt();
        if r * r == t {
            out.push((BigUint::from(r), BigUint::from(x)));
        }
    }
    out
}

/// The same solutions generated from the fundamental solution by
/// `z + x√b = (z1 + x1√b)^k`.
pub fn pell_solutions_upto(b: u64, x_max: &BigUint) -> Vec<(BigUint, BigUint)> {
    let Ok(f) = pell_fundamental_solution(b) else {
        return Vec::new();
    };
    let bb = BigInt::from(b);
    let (mut z, mut x) = (f.z1.clone(), f.x1.clone());
    let mut out = Vec::new();
    while x.to_biguint().is_some_and(|v| &v <= x_max) {
        out.push((z.to_biguint().unwrap(), x.to_biguint().unwrap()));
        let nz = &z * &f.z1 + &bb * &x * &f.x1;
        let nx = &z * &f.x1 + &x * &f.z1;
        z = nz;
        x = nx;
    }
    out
}

struct Kept {
    n: u64,
    x: BigUint,
}

/// Runs the full procedure for one `b >= 1`.
pub fn verify_b(b: u64, config: &VerifyConfig) -> VerificationReport {
    let started = Instant::now();
    if b == 0 {
        let mut r = VerificationReport::trivial(b, "b must be positive", started);
        r.status = Status::NotCertified("b = 0 is outside the domain".into());
        r.reason = None;
        return r;
    }
    if b == 1 {
        return VerificationReport::trivial(b, "b = 1: z^2 - x^2 = 1 has no positive solutions", started);
    }
    if is_square_u64(b) {
        return VerificationReport::trivial(b, "square radicand: no Pell solutions with x > 0", started);
    }

    let mut timings = Timings::default();
    let t0 = Instant::now();
    let bs = match build_bound_set(b, &config.policy) {
        Ok(bs) => bs,
        Err(e) => {
            let stage = match e {
                BoundsError::Quad(_) => "fundamental unit",
                BoundsError::Real(_) => "bound set",
            };
            let mut r = VerificationReport::trivial(b, "", started);
            r.reason = None;
            r.status = Status::NotCertified(format!("{stage}: {e}"));
            return r;
        }
    };
    timings.bounds = t0.elapsed();

    let mut report = VerificationReport {
        b,
        epsilon: Some(bs.epsilon.clone()),
        bounds: Some(BoundSummary::from(&bs)),
        candidates: Vec::new(),
        reductions: Vec::new(),
        pairs: Vec::new(),
        status: Status::UniqueCertified,
        reason: None,
        timings: Timings::default(),
    };
    let mut failures: Vec<String> = Vec::new();

    // first solution: n = 1 ..= c_n1
    let mut cursor = CandidateCursor::new(&bs.epsilon, b);
    let mut kept_all: Vec<Kept> = Vec::new();
    let t1 = Instant::now();
    for _ in 0..bs.c_n1 {
        let cand = cursor.next().expect("cursor is infinite");
        let rec = match classify(b, cand.x.as_ref()) {
            Err((x, reason)) => CandidateRecord { n: cand.n, x, skipped: Some(reason), kept: None },
            Ok((x, z)) => {
                let kept = examine_candidate(&bs, cand.n, &x, z, config, &mut report.reductions, &mut failures, &mut timings);
                kept_all.push(Kept { n: cand.n, x: x.clone() });
                CandidateRecord { n: cand.n, x: Some(x), skipped: None, kept: Some(kept) }
            }
        };
        report.candidates.push(rec);
    }
    timings.candidates = t1.elapsed().saturating_sub(timings.reductions);

    // second solution: continue the cursor up to the largest scan bound
    let t2 = Instant::now();
    let scan_max = report
        .candidates
        .iter()
        .filter_map(|c| c.kept.as_ref().map(|k| k.scan_to))
        .max()
        .unwrap_or(0);
    let mut n_prime = bs.c_n1;
    while n_prime < scan_max {
        let cand = cursor.next().expect("cursor is infinite");
        n_prime = cand.n;
        if let Ok((x, _)) = classify(b, cand.x.as_ref()) {
            kept_all.push(Kept { n: cand.n, x });
        }
    }
    for rec in &report.candidates {
        let (Some(k), Some(x)) = (&rec.kept, &rec.x) else { continue };
        let n_sq = x * x - 1u32;
        for other in kept_all.iter().filter(|o| o.n > rec.n && o.n <= k.scan_to) {
            let m_sq = &other.x * &other.x - 1u32;
            if let Ok(Some(_)) = rational_square_root(&m_sq, &n_sq) {
                let (recovered, partial) = recover_solutions(b, x, &other.x, &k.factorization);
                report.pairs.push(SolutionPair {
                    n: rec.n,
                    n_prime: other.n,
                    x: x.clone(),
                    x_prime: other.x.clone(),
                    recovered,
                    partial,
                });
            }
        }
    }
    timings.scan = t2.elapsed();
    timings.total = started.elapsed();
    report.timings = timings;

    report.status = if !report.pairs.is_empty() {
        Status::PairsFound
    } else if !failures.is_empty() {
        Status::NotCertified(failures.join("; "))
    } else {
        Status::UniqueCertified
    };
    report
}

#[allow(clippy::too_many_arguments)]
fn examine_candidate(
    bs: &BoundSet,
    n: u64,
    x: &BigUint,
    z: BigUint,
    config: &VerifyConfig,
    reductions: &mut Vec<ReductionRecord>,
    failures: &mut Vec<String>,
    timings: &mut Timings,
) -> KeptCandidate {
    let b = bs.b;
    let prec = config.policy.initial_bits;
    let factorization = factorize_x2_minus_1(x, &config.factor_budget);
    let pi = match squarefree_part(&factorization) {
        Ok(p) => SquareFreePart::Exact(p),
        Err(_) => SquareFreePart::Fallback,
    };
    let lg = log_gamma(x, prec).expect("kept candidates exceed √(1+b) >= 2");
    let square_free = factorization.is_complete() && !factorization.has_square_factor();
    let c_l = if square_free {
        1
    } else {
        match compute_c_l(&lg, &pi.value()) {
            Ok(v) => v,
            Err(e) => {
                failures.push(format!("n={n}: c_l: {e}"));
                1
            }
        }
    };

    let t = Instant::now();
    let mut scan_to = n;
    for l in 1..=c_l {
        let c_n2 = match compute_c_n2_initial(l, &bs.c_m, &lg, &bs.c1, b, &bs.log_eps) {
            Ok(v) => v,
            Err(e) => {
                failures.push(format!("n={n}, l={l}: c_n2: {e}"));
                continue;
            }
        };
        let result = reduce_adaptive(
            |bits| candidate_instance(b, &bs.epsilon, &bs.c1, x, l, &c_n2, bits),
            &config.policy,
        );
        let outcome = match result {
            Ok(Some(w)) => {
                let bound = (&w.bound / BigUint::from(l)).to_u64().unwrap_or(u64::MAX);
                scan_to = scan_to.max(bound);
                ReductionOutcome::Reduced { index: w.index, q_k: w.q, kappa: w.kappa, bound }
            }
            other => {
                let reason = match other {
                    Err(e) => e.to_string(),
                    _ => "no convergent satisfied both conditions".to_string(),
                };
                let initial = (&c_n2 / BigUint::from(l)).to_u64();
                let fallback = initial.filter(|&v| v <= config.scan_cap);
                match fallback {
                    Some(v) => scan_to = scan_to.max(v),
                    None => failures.push(format!("n={n}, l={l}: reduction failed ({reason}) and the unreduced bound exceeds the scan cap")),
                }
                ReductionOutcome::Failed { reason, fallback }
            }
        };
        reductions.push(ReductionRecord { n, l, c_n2_initial: c_n2, outcome });
    }
    timings.reductions += t.elapsed();
    KeptCandidate { z, factorization, pi, c_l, log_gamma: lg, scan_to }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn big(n: u64) -> BigUint {
        BigUint::from(n)
    }

    #[test]
    fn b24_is_unique() {
        let r = verify_b(24, &VerifyConfig::default());
        assert_eq!(r.status, Status::UniqueCertified, "{:?}", r.status);
        assert!(r.pairs.is_empty());
        let kept = r.kept_x();
        assert!(kept.contains(&big(10)) && kept.contains(&big(99)));
        let first = &r.candidates[0];
        assert_eq!((first.n, first.skipped), (1, Some(SkipReason::TooSmall)));
        let z: Vec<_> = r.candidates.iter().filter_map(|c| c.kept.as_ref().map(|k| k.z.clone())).collect();
        assert!(z.contains(&big(49)) && z.contains(&big(485)));
    }

    #[test]
    fn trivial_radicands() {
        let r = verify_b(4, &VerifyConfig::default());
        assert_eq!(r.status, Status::UniqueCertified);
        assert!(r.candidates.is_empty() && r.reason.is_some());
        let r = verify_b(1, &VerifyConfig::default());
        assert_eq!(r.status, Status::UniqueCertified);
    }

    #[test]
    fn b2_candidates() {
        let r = verify_b(2, &VerifyConfig::default());
        assert_eq!(r.status, Status::UniqueCertified);
        for c in &r.candidates {
            if c.n % 2 == 1 {
                assert_eq!(c.skipped, Some(SkipReason::NonIntegral));
            }
        }
        let xs: Vec<_> = r.candidates.iter().filter(|c| c.n % 2 == 0).filter_map(|c| c.x.clone()).collect();
        assert_eq!(&xs[..3], &[big(2), big(12), big(70)]);
    }

    #[test]
    fn recovery_examples() {
        let budget = FactorBudget::default();
        // a = 3 has x = 2 and x = 7, and 7^2 - 1 = 48 = 3·4^2
        let f = factorize_x2_minus_1(&big(7), &budget);
        let divisors = square_divisors(&f).unwrap();
        assert_eq!(divisors, vec![big(1), big(2), big(4)]);
        let f10 = factorize_x2_minus_1(&big(10), &budget);
        let a: Vec<_> = square_divisors(&f10).unwrap().iter().map(|d| big(99) / (d * d)).collect();
        assert_eq!(a, vec![big(99), big(11)]);
        let f3 = factorize_x2_minus_1(&big(3), &budget);
        let a: Vec<_> = square_divisors(&f3).unwrap().iter().map(|d| big(8) / (d * d)).collect();
        assert_eq!(a, vec![big(8), big(2)]);
    }

    #[test]
    fn recovery_on_a_synthetic_pair() {
        // a = 15 with x = 4 (y = 1) and x = 31 (y = 8); b = 0 keeps z = 1
        let f = factorize_x2_minus_1(&big(4), &FactorBudget::default());
        let (tuples, partial) = recover_solutions(0, &big(4), &big(31), &f);
        assert!(!partial);
        assert_eq!(tuples.len(), 1);
        let t = &tuples[0];
        assert_eq!((t.a.clone(), t.y.clone(), t.y_prime.clone()), (big(15), big(1), big(8)));
        assert_eq!((t.z.clone(), t.z_prime.clone()), (big(1), big(1)));
    }

    #[test]
    fn oracle_examples() {
        let pairs = |v: Vec<(BigUint, BigUint)>| v.into_iter().map(|(z, x)| (z.to_u64().unwrap(), x.to_u64().unwrap())).collect::<Vec<_>>();
        assert_eq!(pairs(brute_force_oracle(24, 100)), vec![(5, 1), (49, 10), (485, 99)]);
        assert_eq!(pairs(brute_force_oracle(2, 12)), vec![(3, 2), (17, 12)]);
        assert_eq!(pairs(brute_force_oracle(3, 1)), vec![(2, 1)]);
        for b in [2u64, 3, 5, 6, 7, 13, 24, 31] {
            assert_eq!(brute_force_oracle(b, 100_000), pell_solutions_upto(b, &big(100_000)), "b={b}");
        }
    }
}
