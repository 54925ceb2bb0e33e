//! Certified real arithmetic and continued fractions.
//!
//! Everything numeric that later feeds a floor, a comparison or a partial
//! quotient goes through [`CertifiedReal`]; a decision that the enclosure
//! cannot settle becomes an error rather than a guess.

mod ball;
mod cf;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed};
use thiserror::Error;

use crate::quadfield::QuadElem;

pub use ball::{ln2, CertifiedReal};
pub use cf::{
    expand_cf, expand_cf_adaptive, golden_ratio_cap, legendre_lower_bound, ContinuedFraction,
    ExpansionEnd,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RealError {
    #[error("division by an enclosure containing zero")]
    DivisionByZero,
    #[error("{0}: argument not certainly positive")]
    NonPositive(&'static str),
    #[error("{0}: enclosure too wide at this precision")]
    NeedsPrecision(&'static str),
    #[error("continued fraction not certified within {ceiling_bits} bits ({certified_terms} terms certified)")]
    UncertifiedExpansion { ceiling_bits: u32, certified_terms: usize },
    #[error("continued fraction reached the {0}-term cap before the stop condition")]
    ExpansionCap(usize),
    #[error("index {index} is outside the certified range 1..={certified_upto}")]
    UncertifiedIndex { index: usize, certified_upto: usize },
    #[error("argument must exceed {0}")]
    ArgumentTooSmall(&'static str),
}

/// Initial working precision and the ceiling for adaptive doubling.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrecisionPolicy {
    pub initial_bits: u32,
    pub ceiling_bits: u32,
}

impl Default for PrecisionPolicy {
    fn default() -> Self {
        PrecisionPolicy { initial_bits: 192, ceiling_bits: 32768 }
    }
}

impl PrecisionPolicy {
    /// `initial, 2*initial, ...` up to and including the ceiling.
    pub fn schedule(&self) -> impl Iterator<Item = u32> {
        let ceiling = self.ceiling_bits.max(self.initial_bits);
        std::iter::successors(Some(self.initial_bits.max(32)), move |&p| {
            (p < ceiling).then(|| (p.saturating_mul(2)).min(ceiling))
        })
    }

    pub fn doubled(&self) -> Self {
        PrecisionPolicy {
            initial_bits: self.initial_bits * 2,
            ceiling_bits: self.ceiling_bits.max(self.initial_bits * 2),
        }
    }
}

/// Enclosure of `(u + v√d)/denom`.
pub fn quad_to_real(a: &QuadElem, prec: u32) -> CertifiedReal {
    let root = CertifiedReal::from_int(a.radicand(), prec)
        .sqrt()
        .expect("radicand >= 2");
    let num = &CertifiedReal::from_int(a.u().clone(), prec) + &root.mul_int(a.v());
    if a.denom() == 1 {
        num
    } else {
        num.mul_pow2(-1)
    }
}

/// `log α` for `α > 1`.
pub fn log_quad(a: &QuadElem, prec: u32) -> Result<CertifiedReal, RealError> {
    if !a.greater_than_one() {
        return Err(RealError::ArgumentTooSmall("1"));
    }
    // v√d can cancel against u; the extra bits cover the loss.
    let w = prec + a.v().bits() as u32 + a.u().bits() as u32 + 32;
    let x = quad_to_real(a, w);
    Ok(x.ln()?.with_precision(prec))
}

/// `log(x + √(x²-1))` for `x >= 2`.
pub fn log_gamma(x: &BigUint, prec: u32) -> Result<CertifiedReal, RealError> {
    if *x < BigUint::from(2u32) {
        return Err(RealError::ArgumentTooSmall("1"));
    }
    let w = prec + 32;
    let xi = BigInt::from(x.clone());
    let disc = CertifiedReal::from_int(&xi * &xi - BigInt::one(), w).sqrt()?;
    let g = &CertifiedReal::from_int(xi, w) + &disc;
    Ok(g.ln()?.with_precision(prec))
}

/// `log √b` for `b >= 2`.
pub fn log_sqrt(b: &BigUint, prec: u32) -> Result<CertifiedReal, RealError> {
    if *b < BigUint::from(2u32) {
        return Err(RealError::ArgumentTooSmall("1"));
    }
    let l = CertifiedReal::from_int(BigInt::from(b.clone()), prec + 2).ln()?;
    Ok(l.mul_pow2(-1).with_precision(prec))
}

/// `‖q·θ‖`, the distance from `q·θ` to the nearest integer.
pub fn dist_nearest_int(q: &BigInt, theta: &CertifiedReal) -> Result<CertifiedReal, RealError> {
    let y = theta.mul_int(q);
    let p = y.precision_bits();
    // width 2·rad must stay below 1/4
    if (y.rad() << 3usize) >= (BigUint::one() << p as usize) {
        return Err(RealError::NeedsPrecision("dist_nearest_int"));
    }
    let half = BigInt::one() << (p as usize).saturating_sub(1);
    let scale = BigInt::one() << p as usize;
    let k = num_integer::Integer::div_floor(&(y.mid() + &half), &scale);
    let off = (y.mid() - k * scale).abs();
    // ‖·‖ is 1-Lipschitz, so the radius carries over unchanged
    Ok(CertifiedReal::from_parts(off, y.rad().clone(), p))
}
