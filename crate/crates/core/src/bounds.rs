//! Explicit bounds on the exponents of a hypothetical second solution and
//! the Baker-Davenport style reduction.
//!
//! Every constant that has to be an upper bound is produced from the upper
//! end of an enclosure (and lower ends in denominators), so that the true
//! value of the constant can only be smaller.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::quadfield::{fundamental_unit, QuadElem, QuadError};
use crate::realcf::{
    dist_nearest_int, expand_cf, expand_cf_adaptive, golden_ratio_cap, log_quad, log_sqrt,
    quad_to_real, CertifiedReal, ContinuedFraction, ExpansionEnd, PrecisionPolicy, RealError,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BoundsError {
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error(transparent)]
    Real(#[from] RealError),
}

fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

fn big(q: &BigUint) -> BigInt {
    BigInt::from(q.clone())
}

fn ball(q: &BigRational, prec: u32) -> CertifiedReal {
    CertifiedReal::from_rational(q, prec)
}

/// `⌊num / den⌋` evaluated at the upper end, `den` certainly positive.
/// Negative results are clamped to 0.
pub fn floor_ratio_upper(num: &CertifiedReal, den: &CertifiedReal) -> Result<BigUint, RealError> {
    if !den.certainly_positive() {
        return Err(RealError::NonPositive("denominator"));
    }
    let n_hi = num.hi();
    if !n_hi.is_positive() {
        return Ok(BigUint::zero());
    }
    let q = n_hi / den.lo();
    Ok(q.floor().to_integer().to_biguint().unwrap_or_default())
}

/// `1 + 1/(4b) + 1/(2bε)`, rounded up.
pub fn compute_c1(b: u64, eps: &QuadElem) -> BigRational {
    // a lower bound for ε gives an upper bound for 1/(2bε)
    let eps_lo = quad_to_real(eps, 64).lo();
    let b = BigRational::from_integer(b.into());
    let one = BigRational::one();
    &one + (&one / (BigRational::from_integer(4.into()) * &b))
        + &one / (BigRational::from_integer(2.into()) * &b * eps_lo)
}

/// `(45·16^5/4) e^4 (26.25 + log(16 log(4e)))`, the degree-4 constant.
pub fn compute_c_mat(prec: u32) -> CertifiedReal {
    let w = prec + 32;
    let e = CertifiedReal::from_int(1, w).exp();
    let e4 = (&e * &e) * (&e * &e);
    let log4e = &CertifiedReal::from_int(4, w).ln().expect("4 > 0") + &CertifiedReal::from_int(1, w);
    let inner = log4e.mul_int(&16.into()).ln().expect("positive");
    let bracket = &ball(&ratio(2625, 100), w) + &inner;
    let lead = BigInt::from(45 * 16u64.pow(5) / 4);
    (e4 * bracket).mul_int(&lead).with_precision(prec)
}

/// How [`compute_c_m`] obtained its value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CmMethod {
    Bracketing,
    Fallback,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CmBound {
    pub value: BigUint,
    pub method: CmMethod,
    /// Upper bound for `K = c_Mat·16²·log ε·log √b`.
    pub coefficient: BigRational,
}

/// `6e·log(6e)`.
fn matveev_c(prec: u32) -> CertifiedReal {
    let six_e = CertifiedReal::from_int(1, prec).exp().mul_int(&6.into());
    &six_e * &six_e.ln().expect("6e > 1")
}

/// Upper bound `K` for `c_Mat·256·log ε·log √b`.
pub fn matveev_coefficient(b: u64, log_eps: &CertifiedReal) -> Result<BigRational, RealError> {
    let prec = log_eps.precision_bits();
    let lsb = log_sqrt(&BigUint::from(b), prec)?;
    let k = (compute_c_mat(prec) * log_eps * lsb).mul_int(&256.into());
    Ok(k.hi())
}

/// Lower enclosure of `f(m) = 2m - 0.39 - K·log(6e·log(6e)·(m + 0.52))`.
fn matveev_f(m: &BigUint, k: &BigRational, c: &CertifiedReal) -> Result<CertifiedReal, RealError> {
    let prec = c.precision_bits();
    let shifted = ball(&(BigRational::from_integer(big(m)) + ratio(52, 100)), prec);
    let log_term = (c * &shifted).ln()?;
    let lhs = ball(&(BigRational::from_integer(big(m) * 2) - ratio(39, 100)), prec);
    Ok(&lhs - &(&ball(k, prec) * &log_term))
}

/// Smallest integer `M >= K/2` with `f(M)` certainly positive.
///
/// `f` is increasing for `m > K/2` and negative on `[1, K/2]`, so every `m`
/// satisfying the inequality is below `M`. `None` on numeric trouble.
pub fn c_m_bracketing(k: &BigRational, prec: u32) -> Option<BigUint> {
    let c = matveev_c(prec + 32);
    let pos = |m: &BigUint| matveev_f(m, k, &c).map(|f| f.certainly_positive()).unwrap_or(false);
    let mut lo = (k / BigRational::from_integer(2.into())).floor().to_integer().to_biguint()?;
    if lo.is_zero() {
        lo = BigUint::one();
    }
    if pos(&lo) {
        return None;
    }
    let mut hi = &lo * 2u32;
    let mut doublings = 0;
    while !pos(&hi) {
        lo = hi.clone();
        hi *= 2u32;
        doublings += 1;
        if doublings > 256 {
            return None;
        }
    }
    while &hi - &lo > BigUint::one() {
        let mid = (&lo + &hi) >> 1usize;
        if pos(&mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

/// Closed-form bound: with `C'' = 1.52·6e·log(6e)·e^0.39`, every solution
/// satisfies `m < K·log(K·C''/2)` (from `t < c log t ⇒ t < 2c log c`).
pub fn c_m_fallback(k: &BigRational, prec: u32) -> BigUint {
    let w = prec + 32;
    let c2 = matveev_c(w).mul_int(&152.into()).div_int(&100.into())
        * ball(&ratio(39, 100), w).exp();
    let kk = ball(k, w);
    let half = (&kk * &c2).mul_pow2(-1);
    let v = &kk * &half.ln().expect("K C'' / 2 > 1");
    let up: BigInt = v.ceil_upper() + 1;
    up.to_biguint().unwrap_or_else(BigUint::one).max(BigUint::one())
}

/// Bound on the exponent `m` of `δ_a`.
pub fn compute_c_m(b: u64, log_eps: &CertifiedReal) -> Result<CmBound, RealError> {
    let k = matveev_coefficient(b, log_eps)?;
    let prec = log_eps.precision_bits();
    Ok(match c_m_bracketing(&k, prec) {
        Some(value) => CmBound { value, method: CmMethod::Bracketing, coefficient: k },
        None => CmBound { value: c_m_fallback(&k, prec), method: CmMethod::Fallback, coefficient: k },
    })
}

/// `c_m (c1² b + c1) / log ε`.
pub fn compute_c0(b: u64, c1: &BigRational, c_m: &BigUint, log_eps: &CertifiedReal) -> Result<CertifiedReal, RealError> {
    let prec = log_eps.precision_bits();
    let inner = c1 * c1 * BigRational::from_integer(b.into()) + c1;
    let num = ball(&(inner * BigRational::from_integer(big(c_m))), prec);
    num.try_div(log_eps)
}

/// Everything derived from `b` alone.
#[derive(Debug, Clone)]
pub struct BoundSet {
    pub b: u64,
    pub epsilon: QuadElem,
    pub log_eps: CertifiedReal,
    pub c1: BigRational,
    pub c_mat: CertifiedReal,
    pub c_m: BigUint,
    pub c_m_method: CmMethod,
    pub c0: CertifiedReal,
    /// Expansion of `μ = log √b / log ε`.
    pub cf_mu: ContinuedFraction,
    /// First index `k >= 1` with `q_k >= c_m`.
    pub witness_index: usize,
    pub c_n1: u64,
}

/// `⌊(log q_k + log c0 + log(2 + A)) / (2 log ε)⌋` with `A = max(a_1..a_{k+1})`,
/// rounded up. Needs `k + 1` certified.
pub fn compute_c_n1(
    cf: &ContinuedFraction,
    k: usize,
    c0: &CertifiedReal,
    log_eps: &CertifiedReal,
) -> Result<u64, RealError> {
    let prec = log_eps.precision_bits();
    // a_{k+1} belongs in the Legendre maximum
    let a = cf.max_term(k + 1);
    let log_q = CertifiedReal::from_int(cf.q(k).clone(), prec).ln()?;
    let log_a = CertifiedReal::from_int(a + 2, prec).ln()?;
    let num = &(&log_q + &c0.ln()?) + &log_a;
    let v = floor_ratio_upper(&num, &log_eps.mul_int(&2.into()))?;
    Ok(v.to_u64().unwrap_or(u64::MAX))
}

/// Computes ε, c1, c_Mat, c_m, c0, the expansion of μ and c_n1 for a
/// non-square `b >= 2`.
pub fn build_bound_set(b: u64, policy: &PrecisionPolicy) -> Result<BoundSet, BoundsError> {
    let epsilon = fundamental_unit(b)?;
    let prec = policy.initial_bits;
    let log_eps = log_quad(&epsilon, prec)?;
    let c1 = compute_c1(b, &epsilon);
    let c_mat = compute_c_mat(prec);
    let cm = compute_c_m(b, &log_eps)?;
    let c0 = compute_c0(b, &c1, &cm.value, &log_eps)?;
    // one term past the first q_k >= c_m, for the Legendre maximum
    let cap = golden_ratio_cap(&cm.value) + 1;
    let target = big(&cm.value);
    let mut last_q = BigInt::zero();
    let bb = BigUint::from(b);
    let cf_mu = expand_cf_adaptive(
        |bits| log_sqrt(&bb, bits)?.try_div(&log_quad(&epsilon, bits)?),
        |i, q| {
            let fire = i >= 2 && last_q >= target;
            last_q = q.clone();
            fire
        },
        policy,
        cap,
    )?;
    let witness_index = cf_mu.certified_upto - 1;
    let c_n1 = compute_c_n1(&cf_mu, witness_index, &c0, &log_eps)?;
    Ok(BoundSet {
        b,
        epsilon,
        log_eps,
        c1,
        c_mat,
        c_m: cm.value,
        c_m_method: cm.method,
        c0,
        cf_mu,
        witness_index,
        c_n1,
    })
}

/// `⌊log γ / log(2√Π)⌋`, at least 1.
pub fn compute_c_l(log_gamma: &CertifiedReal, pi: &BigUint) -> Result<u64, RealError> {
    let prec = log_gamma.precision_bits();
    // log(2√Π) = log 2 + log(Π)/2
    let log_pi = CertifiedReal::from_int(big(pi), prec).ln()?.mul_pow2(-1);
    let den = &crate::realcf::ln2(prec + 1) + &log_pi;
    let v = floor_ratio_upper(log_gamma, &den)?;
    Ok(v.to_u64().unwrap_or(u64::MAX).max(1))
}

/// `⌊(c_m log γ + l log(c1 √b)) / log ε⌋`, an upper bound for `l·n2`.
pub fn compute_c_n2_initial(
    l: u64,
    c_m: &BigUint,
    log_gamma: &CertifiedReal,
    c1: &BigRational,
    b: u64,
    log_eps: &CertifiedReal,
) -> Result<BigUint, RealError> {
    let prec = log_eps.precision_bits();
    let log_c1 = ball(c1, prec).ln()?;
    let log_c1_sqrt_b = &log_c1 + &log_sqrt(&BigUint::from(b), prec)?;
    let num = &log_gamma.mul_int(&big(c_m)) + &log_c1_sqrt_b.mul_int(&l.into());
    floor_ratio_upper(&num, log_eps)
}

/// `|n μ + τ - x| < prefactor · exp(-decay · n)` with `n < n_bound`.
#[derive(Debug, Clone)]
pub struct ReductionInstance {
    pub mu: CertifiedReal,
    pub tau: CertifiedReal,
    pub prefactor: CertifiedReal,
    pub decay: CertifiedReal,
    pub n_bound: BigUint,
}

/// Convergent that produced a reduced bound.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReductionWitness {
    pub index: usize,
    pub q: BigInt,
    /// The `κ` actually used; exact.
    pub kappa: BigRational,
    pub bound: BigUint,
    /// Convergents with `κ > 1` inspected, this one included.
    pub kappa_gt_one_seen: usize,
}

/// Convergent cap for reductions: enough to reach `q > 2N`, plus slack for
/// the convergents after the first `κ > 1`.
pub fn reduction_cap(n_bound: &BigUint) -> usize {
    golden_ratio_cap(&(n_bound * 4u32)) + 40
}

/// One pass of the reduction over the certified convergents of `cf`.
///
/// For each convergent, `κ = 1 / (2 N U)` with `U` a strict upper bound for
/// `‖q μ‖`; when `κ > 1` and `κ ‖q τ‖ > 1` (lower bound) the result is
/// `⌊log(2 κ q · prefactor) / decay⌋`. Returns `Ok(None)` when that bound
/// would not improve on `N` or the cap is hit, and
/// [`RealError::NeedsPrecision`] when the certified terms run out first.
pub fn baker_davenport_reduce(
    inst: &ReductionInstance,
    cf: &ContinuedFraction,
) -> Result<Option<ReductionWitness>, RealError> {
    if inst.n_bound.is_zero() || !inst.decay.certainly_positive() || !inst.prefactor.certainly_positive() {
        return Err(RealError::NonPositive("reduction instance"));
    }
    let two_n = BigRational::from_integer(big(&inst.n_bound) * 2);
    let prec = inst.mu.precision_bits();
    let mut seen = 0;
    for (k, (_, q)) in cf.convergents.iter().enumerate() {
        let d_mu = dist_nearest_int(q, &inst.mu)?;
        let ulp = BigRational::new(BigInt::one(), BigInt::one() << d_mu.precision_bits() as usize);
        let upper = d_mu.hi() + ulp;
        let kappa = (&two_n * upper).recip();
        if kappa <= BigRational::one() {
            continue;
        }
        seen += 1;
        let bound = {
            let arg = CertifiedReal::from_rational(&(&kappa * BigRational::from_integer(q * 2)), prec + 8)
                * &inst.prefactor;
            floor_ratio_upper(&arg.ln()?, &inst.decay)?
        };
        if bound >= inst.n_bound {
            return Ok(None);
        }
        let d_tau = dist_nearest_int(q, &inst.tau)?;
        if &kappa * d_tau.lo() > BigRational::one() {
            return Ok(Some(ReductionWitness { index: k, q: q.clone(), kappa, bound, kappa_gt_one_seen: seen }));
        }
    }
    match cf.end {
        ExpansionEnd::Uncertified => Err(RealError::NeedsPrecision("reduction")),
        _ => Ok(None),
    }
}

/// Runs the reduction at doubling precision until it is decided.
///
/// `make(bits)` builds the instance at `bits` of precision.
pub fn reduce_adaptive(
    mut make: impl FnMut(u32) -> Result<ReductionInstance, RealError>,
    policy: &PrecisionPolicy,
) -> Result<Option<ReductionWitness>, RealError> {
    let mut last = policy.initial_bits;
    let mut best_terms = 0;
    for bits in policy.schedule() {
        last = bits;
        let inst = match make(bits) {
            Ok(i) => i,
            Err(RealError::NeedsPrecision(_)) | Err(RealError::DivisionByZero) => continue,
            Err(e) => return Err(e),
        };
        let cap = reduction_cap(&inst.n_bound);
        let cf = match expand_cf(&inst.mu, |_, _| false, cap) {
            Ok(cf) => cf,
            Err(RealError::UncertifiedExpansion { .. }) => continue,
            Err(e) => return Err(e),
        };
        best_terms = best_terms.max(cf.terms.len());
        match baker_davenport_reduce(&inst, &cf) {
            Err(RealError::NeedsPrecision(_)) | Err(RealError::NonPositive(_)) => continue,
            other => return other,
        }
    }
    Err(RealError::UncertifiedExpansion { ceiling_bits: last, certified_terms: best_terms })
}

/// Instance for exponent `l` of candidate `γ = δ_a^l`, in the variable
/// `l·n2`: `μ = log ε / log γ`, `τ = -l log √b / log γ`,
/// prefactor `l (c1² b + c1) / log γ`, decay `2 log ε / l`, `N = l·c_n2(l)`.
pub fn candidate_instance(
    b: u64,
    epsilon: &QuadElem,
    c1: &BigRational,
    x: &BigUint,
    l: u64,
    c_n2: &BigUint,
    bits: u32,
) -> Result<ReductionInstance, RealError> {
    let log_eps = log_quad(epsilon, bits)?;
    let log_gamma = crate::realcf::log_gamma(x, bits)?;
    let lb = BigInt::from(l);
    let mu = log_eps.try_div(&log_gamma)?;
    let tau = -(log_sqrt(&BigUint::from(b), bits)?.mul_int(&lb).try_div(&log_gamma)?);
    let inner = c1 * c1 * BigRational::from_integer(b.into()) + c1;
    let prefactor = ball(&(inner * BigRational::from_integer(lb.clone())), bits).try_div(&log_gamma)?;
    let decay = log_eps.mul_int(&2.into()).div_int(&lb);
    Ok(ReductionInstance { mu, tau, prefactor, decay, n_bound: c_n2 * BigUint::from(l) })
}
