use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use super::{CertifiedReal, PrecisionPolicy, RealError};

/// Why an expansion stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExpansionEnd {
    /// The caller's stop predicate fired on the last term.
    Stopped,
    /// The index cap was reached.
    Cap,
    /// The next partial quotient is not determined by the enclosure.
    Uncertified,
}

/// Partial quotients and convergents of an enclosed irrational.
#[derive(Debug, Clone)]
pub struct ContinuedFraction {
    pub mu: CertifiedReal,
    pub terms: Vec<BigInt>,
    /// `(p_i, q_i)` for every certified index.
    pub convergents: Vec<(BigInt, BigInt)>,
    /// Largest index whose partial quotient is certified.
    pub certified_upto: usize,
    pub end: ExpansionEnd,
}

impl ContinuedFraction {
    pub fn q(&self, i: usize) -> &BigInt {
        &self.convergents[i].1
    }

    pub fn p(&self, i: usize) -> &BigInt {
        &self.convergents[i].0
    }

    /// `max(a_1, ..., a_i)`, or 0 for `i = 0`.
    pub fn max_term(&self, i: usize) -> BigInt {
        self.terms[1..=i].iter().max().cloned().unwrap_or_else(BigInt::zero)
    }
}

/// Highest convergent index that can be needed to reach `q_k >= c`, using
/// `q_k >= Φ^(k-1)`: `⌊log c / log Φ⌋ + 2`.
pub fn golden_ratio_cap(c: &BigUint) -> usize {
    let ln_phi = ((1.0 + 5f64.sqrt()) / 2.0).ln();
    let ln_c = match c.to_f64() {
        Some(f) if f.is_finite() && f >= 1.0 => f.ln(),
        Some(_) => 0.0,
        None => c.bits() as f64 * std::f64::consts::LN_2,
    };
    // +1 absorbs floating-point error in the logarithm
    (ln_c / ln_phi).floor() as usize + 3
}

/// Expands `μ` by exact Euclid on both endpoints of its enclosure.
///
/// A partial quotient is accepted only when both endpoints agree on it, so
/// every returned term is a true partial quotient of every irrational in
/// the enclosure. `stop(i, q_i)` is consulted after each accepted term;
/// indices never exceed `max_index`.
pub fn expand_cf(
    mu: &CertifiedReal,
    mut stop: impl FnMut(usize, &BigInt) -> bool,
    max_index: usize,
) -> Result<ContinuedFraction, RealError> {
    let scale = BigInt::one() << mu.precision_bits() as usize;
    let mut lo = (mu.lo_scaled(), scale.clone());
    let mut hi = (mu.hi_scaled(), scale);
    let mut terms = Vec::new();
    let mut convergents: Vec<(BigInt, BigInt)> = Vec::new();
    let (mut p2, mut p1) = (BigInt::zero(), BigInt::one());
    let (mut q2, mut q1) = (BigInt::one(), BigInt::zero());
    let end = loop {
        if terms.len() > max_index {
            break ExpansionEnd::Cap;
        }
        let a = lo.0.div_floor(&lo.1);
        if a != hi.0.div_floor(&hi.1) {
            break ExpansionEnd::Uncertified;
        }
        let p = &a * &p1 + &p2;
        let q = &a * &q1 + &q2;
        p2 = std::mem::replace(&mut p1, p.clone());
        q2 = std::mem::replace(&mut q1, q.clone());
        terms.push(a.clone());
        convergents.push((p, q));
        let i = terms.len() - 1;
        if stop(i, &convergents[i].1) {
            break ExpansionEnd::Stopped;
        }
        let r_lo = &lo.0 - &a * &lo.1;
        let r_hi = &hi.0 - &a * &hi.1;
        if r_lo.is_zero() || r_hi.is_zero() {
            break ExpansionEnd::Uncertified;
        }
        // x -> 1/(x - a) reverses the order of the endpoints
        let next_lo = (hi.1, r_hi);
        let next_hi = (lo.1, r_lo);
        lo = next_lo;
        hi = next_hi;
    };
    if terms.is_empty() {
        return Err(RealError::UncertifiedExpansion {
            ceiling_bits: mu.precision_bits(),
            certified_terms: 0,
        });
    }
    let certified_upto = terms.len() - 1;
    Ok(ContinuedFraction { mu: mu.clone(), terms, convergents, certified_upto, end })
}

/// Repeats [`expand_cf`] at doubling precision until `stop` fires.
///
/// `eval(bits)` must return an enclosure of the same number at `bits` of
/// precision. Hitting the index cap is [`RealError::ExpansionCap`];
/// exhausting the precision ceiling is [`RealError::UncertifiedExpansion`].
pub fn expand_cf_adaptive(
    mut eval: impl FnMut(u32) -> Result<CertifiedReal, RealError>,
    mut stop: impl FnMut(usize, &BigInt) -> bool,
    policy: &PrecisionPolicy,
    max_index: usize,
) -> Result<ContinuedFraction, RealError> {
    let mut best = 0;
    let mut last_bits = policy.initial_bits;
    for bits in policy.schedule() {
        last_bits = bits;
        let mu = match eval(bits) {
            Ok(mu) => mu,
            Err(RealError::NeedsPrecision(_)) | Err(RealError::DivisionByZero) => continue,
            Err(e) => return Err(e),
        };
        let cf = match expand_cf(&mu, &mut stop, max_index) {
            Ok(cf) => cf,
            Err(RealError::UncertifiedExpansion { .. }) => continue,
            Err(e) => return Err(e),
        };
        match cf.end {
            ExpansionEnd::Stopped => return Ok(cf),
            ExpansionEnd::Cap => return Err(RealError::ExpansionCap(max_index)),
            ExpansionEnd::Uncertified => best = best.max(cf.terms.len()),
        }
    }
    Err(RealError::UncertifiedExpansion { ceiling_bits: last_bits, certified_terms: best })
}

/// `1 / ((2 + A) q_ℓ)` with `A = max(a_1, ..., a_{ℓ+1})`.
///
/// For every `p/q` with `1 <= q <= q_ℓ`: `|p - qμ|` exceeds this value.
/// `a_{ℓ+1}` has to be in the maximum: `‖q_ℓ μ‖` can be as small as
/// `1/((a_{ℓ+1} + 2) q_ℓ)`, so `ℓ + 1` must be certified.
pub fn legendre_lower_bound(cf: &ContinuedFraction, ell: usize) -> Result<BigRational, RealError> {
    if ell == 0 || ell >= cf.certified_upto {
        return Err(RealError::UncertifiedIndex { index: ell + 1, certified_upto: cf.certified_upto });
    }
    let a = cf.max_term(ell + 1);
    Ok(BigRational::new(BigInt::one(), (a + 2) * cf.q(ell)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadfield::QuadElem;
    use crate::realcf::{dist_nearest_int, log_quad, log_sqrt, quad_to_real};

    fn phi(prec: u32) -> CertifiedReal {
        quad_to_real(&QuadElem::new(1, 1, 2, 5).unwrap(), prec)
    }

    fn sqrt2(prec: u32) -> CertifiedReal {
        quad_to_real(&QuadElem::new(0, 1, 1, 2).unwrap(), prec)
    }

    fn ints(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn golden_ratio() {
        let cf = expand_cf(&phi(128), |i, _| i == 5, 100).unwrap();
        assert_eq!(cf.end, ExpansionEnd::Stopped);
        assert_eq!(cf.terms, ints(&[1, 1, 1, 1, 1, 1]));
        let conv: Vec<_> = cf.convergents[..4].iter().map(|(p, q)| (p.clone(), q.clone())).collect();
        assert_eq!(
            conv,
            vec![(1.into(), 1.into()), (2.into(), 1.into()), (3.into(), 2.into()), (5.into(), 3.into())]
        );
        // the expansion of a finite enclosure must eventually stop certifying
        let cf = expand_cf(&phi(64), |_, _| false, 10_000).unwrap();
        assert_eq!(cf.end, ExpansionEnd::Uncertified);
        assert!(cf.terms.iter().all(|a| a.is_one()));
    }

    #[test]
    fn sqrt_two() {
        let cf = expand_cf(&sqrt2(128), |i, _| i == 6, 100).unwrap();
        assert_eq!(cf.terms, ints(&[1, 2, 2, 2, 2, 2, 2]));
    }

    #[test]
    fn mu_for_b24() {
        let p = 192;
        let e = log_quad(&QuadElem::new(5, 1, 1, 24).unwrap(), p).unwrap();
        let mu = log_sqrt(&BigUint::from(24u32), p).unwrap().try_div(&e).unwrap();
        let cf = expand_cf(&mu, |i, _| i == 11, 100).unwrap();
        assert_eq!(cf.terms, ints(&[0, 1, 2, 3, 1, 6, 6, 2, 2, 1, 5, 3]));
    }

    #[test]
    fn cap_is_respected() {
        let cf = expand_cf(&sqrt2(256), |_, _| false, 4).unwrap();
        assert_eq!(cf.end, ExpansionEnd::Cap);
        assert_eq!(cf.certified_upto, 4);
    }

    #[test]
    fn adaptive_expansion_raises_precision() {
        let mut seen = Vec::new();
        let cf = expand_cf_adaptive(
            |bits| {
                seen.push(bits);
                Ok(sqrt2(bits))
            },
            |_, q| q.bits() > 200,
            &PrecisionPolicy { initial_bits: 64, ceiling_bits: 4096 },
            10_000,
        )
        .unwrap();
        assert!(cf.q(cf.certified_upto).bits() > 200);
        assert!(seen.len() > 1);
        let err = expand_cf_adaptive(
            |bits| Ok(sqrt2(bits)),
            |_, q| q.bits() > 5000,
            &PrecisionPolicy { initial_bits: 64, ceiling_bits: 512 },
            100_000,
        );
        assert!(matches!(err, Err(RealError::UncertifiedExpansion { ceiling_bits: 512, .. })));
    }

    // min over p of |p - qμ| is ‖qμ‖; check it for every q <= q_ℓ
    fn brute_legendre_holds(cf: &ContinuedFraction, ell: usize) -> bool {
        let bound = legendre_lower_bound(cf, ell).unwrap();
        let q_max = cf.q(ell).to_u64().unwrap();
        (1..=q_max).all(|q| dist_nearest_int(&BigInt::from(q), &cf.mu).unwrap().lo() > bound)
    }

    #[test]
    fn legendre_examples() {
        let g = expand_cf(&phi(128), |i, _| i == 8, 100).unwrap();
        assert_eq!(legendre_lower_bound(&g, 4).unwrap(), BigRational::new(1.into(), 15.into()));
        assert!(brute_legendre_holds(&g, 4));
        let s = expand_cf(&sqrt2(128), |i, _| i == 8, 100).unwrap();
        assert_eq!(legendre_lower_bound(&s, 3).unwrap(), BigRational::new(1.into(), 48.into()));
        assert!(brute_legendre_holds(&s, 3));
        assert!(matches!(legendre_lower_bound(&s, 0), Err(RealError::UncertifiedIndex { .. })));
        assert!(legendre_lower_bound(&s, 8).is_err());
        assert!(legendre_lower_bound(&s, 7).is_ok());
    }

    #[test]
    fn legendre_needs_the_next_quotient() {
        // μ = [0; 1, 1000, 1, 1, ...]: ‖q_1 μ‖ ≈ 1/1001, far below 1/(2 + a_1)
        let phi = phi(256);
        let mu = (&(&phi.recip().unwrap() + &CertifiedReal::from_int(1000, 256)).recip().unwrap()
            + &CertifiedReal::from_int(1, 256))
            .recip()
            .unwrap();
        let cf = expand_cf(&mu, |i, _| i == 6, 100).unwrap();
        assert_eq!(cf.terms[..4], ints(&[0, 1, 1000, 1])[..]);
        assert_eq!(legendre_lower_bound(&cf, 1).unwrap(), BigRational::new(1.into(), 1002.into()));
        assert!(brute_legendre_holds(&cf, 1));
        assert!(brute_legendre_holds(&cf, 4));
    }

    #[test]
    fn convergent_invariants() {
        let cf = expand_cf(&sqrt2(512), |_, _| false, 10_000).unwrap();
        let golden = (1.0 + 5f64.sqrt()) / 2.0;
        for (i, (p, q)) in cf.convergents.iter().enumerate() {
            assert!(p.gcd(q).is_one());
            if i >= 1 {
                assert!(q.to_f64().unwrap() >= golden.powi(i as i32 - 1) * (1.0 - 1e-12));
            }
        }
    }

    #[test]
    fn golden_cap_values() {
        assert!(golden_ratio_cap(&BigUint::from(334_499_083_821_826u64)) >= 72);
        assert_eq!(golden_ratio_cap(&BigUint::from(1u32)), 3);
    }
}
