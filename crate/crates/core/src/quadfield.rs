//! Exact arithmetic in real quadratic fields and the fundamental unit.
//!
//! Elements are stored over the square-free kernel `d` of the radicand, so
//! `5 + √24` and `5 + 2√6` are the same value. A radicand `b = f^2 d` only
//! matters when reading off Pell coordinates `z + x√b`.

use std::fmt;

use num_bigint::BigInt;
use num_integer::{Integer, Roots};
use num_traits::{One, Signed, Zero};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QuadError {
    #[error("radicand {0} is a perfect square")]
    SquareRadicand(u64),
    #[error("radicand must be at least 2, got {0}")]
    InvalidRadicand(u64),
    #[error("elements over different fields: sqrt({0}) vs sqrt({1})")]
    MismatchedRadicand(u64, u64),
    #[error("({u} + {v}*sqrt({d}))/{denom} is not an algebraic integer")]
    NotIntegral { u: BigInt, v: BigInt, denom: u32, d: u64 },
}

/// Writes `b = f^2 * d` with `d` square-free.
pub fn squarefree_decompose(b: u64) -> (u64, u64) {
    let mut f = 1u64;
    let mut d = 1u64;
    let mut rest = b;
    let mut p = 2u64;
    while p * p <= rest {
        let mut e = 0;
        while rest % p == 0 {
            rest /= p;
            e += 1;
        }
        f *= p.pow(e / 2);
        if e % 2 == 1 {
            d *= p;
        }
        p += if p == 2 { 1 } else { 2 };
    }
    (f, d * rest)
}

pub fn is_square_u64(b: u64) -> bool {
    let r = b.sqrt();
    r * r == b
}

/// `(u + v√d) / denom` in the ring of integers of `Q(√d)`, `d` square-free.
///
/// `denom` is 1 or 2; it is 2 only when `d ≡ 1 (mod 4)`, `u ≡ v (mod 2)` and
/// `u`, `v` are odd.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct QuadElem {
    u: BigInt,
    v: BigInt,
    denom: u8,
    d: u64,
}

impl QuadElem {
    /// `(u + v√radicand) / denom` for any non-square radicand `>= 2`.
    pub fn new(
        u: impl Into<BigInt>,
        v: impl Into<BigInt>,
        denom: u32,
        radicand: u64,
    ) -> Result<Self, QuadError> {
        if radicand < 2 {
            return Err(QuadError::InvalidRadicand(radicand));
        }
        if is_square_u64(radicand) {
            return Err(QuadError::SquareRadicand(radicand));
        }
        let (f, d) = squarefree_decompose(radicand);
        Self::normalize(u.into(), v.into() * BigInt::from(f), denom, d)
    }

    pub fn from_int(n: impl Into<BigInt>, radicand: u64) -> Result<Self, QuadError> {
        Self::new(n, 0, 1, radicand)
    }

    fn normalize(mut u: BigInt, mut v: BigInt, mut denom: u32, d: u64) -> Result<Self, QuadError> {
        while denom > 1 && u.is_even() && v.is_even() && denom % 2 == 0 {
            u >>= 1;
            v >>= 1;
            denom /= 2;
        }
        let ok = match denom {
            1 => true,
            2 => d % 4 == 1 && u.is_odd() && v.is_odd(),
            _ => false,
        };
        if !ok {
            return Err(QuadError::NotIntegral { u, v, denom, d });
        }
        Ok(QuadElem { u, v, denom: denom as u8, d })
    }

    pub fn u(&self) -> &BigInt {
        &self.u
    }

    pub fn v(&self) -> &BigInt {
        &self.v
    }

    pub fn denom(&self) -> u32 {
        self.denom as u32
    }

    /// Square-free radicand `d` of the field.
    pub fn radicand(&self) -> u64 {
        self.d
    }

    pub fn conj(&self) -> QuadElem {
        QuadElem { u: self.u.clone(), v: -&self.v, denom: self.denom, d: self.d }
    }

    /// `α·ᾱ = (u^2 - d v^2) / denom^2`.
    pub fn norm(&self) -> BigInt {
        let n = &self.u * &self.u - BigInt::from(self.d) * &self.v * &self.v;
        n / BigInt::from(self.denom as u32 * self.denom as u32)
    }

    /// `α + ᾱ = 2u / denom`.
    pub fn trace(&self) -> BigInt {
        (&self.u << 1usize) / BigInt::from(self.denom as u32)
    }

    pub fn mul(&self, other: &QuadElem) -> Result<QuadElem, QuadError> {
        if self.d != other.d {
            return Err(QuadError::MismatchedRadicand(self.d, other.d));
        }
        let d = BigInt::from(self.d);
        let u = &self.u * &other.u + d * &self.v * &other.v;
        let v = &self.u * &other.v + &self.v * &other.u;
        Self::normalize(u, v, self.denom as u32 * other.denom as u32, self.d)
    }

    pub fn pow(&self, mut n: u64) -> QuadElem {
        let mut acc = QuadElem { u: BigInt::one(), v: BigInt::zero(), denom: 1, d: self.d };
        let mut base = self.clone();
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.mul(&base).expect("same field");
            }
            n >>= 1;
            if n > 0 {
                base = base.mul(&base).expect("same field");
            }
        }
        acc
    }

    /// Exact test of `α > 1`.
    pub fn greater_than_one(&self) -> bool {
        // u + v√d > denom  <=>  v√d > denom - u
        let rhs = BigInt::from(self.denom as u32) - &self.u;
        let v = &self.v;
        let d = BigInt::from(self.d);
        match (v.is_positive(), rhs.is_positive()) {
            (_, false) if !v.is_negative() => !(v.is_zero() && rhs.is_zero()),
            (true, false) => true,
            (true, true) => v * v * d > &rhs * &rhs,
            (false, false) => v * v * d < &rhs * &rhs,
            (false, true) => false,
        }
    }

    /// Coordinates over `√b` for `b = f^2 d`: `(U + V√b) / D` in lowest terms.
    pub fn coords_over(&self, b: u64) -> (BigInt, BigInt, BigInt) {
        let (f, d) = squarefree_decompose(b);
        assert_eq!(d, self.d, "radicand {b} does not generate this field");
        // (u + v√d)/e = (u f + v√b)/(e f)
        let mut num_u = &self.u * BigInt::from(f);
        let mut num_v = self.v.clone();
        let mut den = BigInt::from(self.denom as u64 * f);
        let g = num_u.gcd(&num_v).gcd(&den);
        if !g.is_one() && !g.is_zero() {
            num_u /= &g;
            num_v /= &g;
            den /= &g;
        }
        (num_u, num_v, den)
    }
}

impl fmt::Debug for QuadElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for QuadElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.v.is_negative() { "-" } else { "+" };
        let body = format!("{} {} {}*sqrt({})", self.u, sign, self.v.abs(), self.d);
        if self.denom == 1 {
            write!(f, "{body}")
        } else {
            write!(f, "({body})/2")
        }
    }
}

fn check_radicand(b: u64) -> Result<(), QuadError> {
    if b < 2 {
        return Err(QuadError::InvalidRadicand(b));
    }
    if is_square_u64(b) {
        return Err(QuadError::SquareRadicand(b));
    }
    Ok(())
}

/// Fundamental unit `ε > 1` of the ring of integers of `Q(√b)`.
///
/// With `ω = √d` (or `(1+√d)/2` when `d ≡ 1 mod 4`), `ε = x + yω` where
/// `x/y` is the first convergent of `ω - ⌊ω⌋ + ⌊ω⌋` (respectively `ω - 1`)
/// whose norm form equals `±1`. The expansion uses the exact `(P, Q)`
/// recurrence for complete quotients `(P + √d)/Q`.
pub fn fundamental_unit(b: u64) -> Result<QuadElem, QuadError> {
    check_radicand(b)?;
    let (_, d) = squarefree_decompose(b);
    let one_mod_4 = d % 4 == 1;
    let di = d as i128;
    let s = d.sqrt() as i128;
    // complete quotient (P + √d)/Q of ω - 1 or √d
    let (mut p, mut q): (i128, i128) = if one_mod_4 { (-1, 2) } else { (0, 1) };
    let (mut h_prev, mut h) = (BigInt::zero(), BigInt::one()); // p_{-2}, p_{-1}
    let (mut k_prev, mut k) = (BigInt::one(), BigInt::zero()); // q_{-2}, q_{-1}
    let quarter = BigInt::from((di - 1) / 4);
    let dd = BigInt::from(d);
    loop {
        // Q stays positive along the expansion of a reduced surd
        debug_assert!(q > 0);
        let a = (p + s).div_euclid(q);
        let ab = BigInt::from(a);
        let h_next = &ab * &h + &h_prev;
        let k_next = &ab * &k + &k_prev;
        h_prev = std::mem::replace(&mut h, h_next);
        k_prev = std::mem::replace(&mut k, k_next);
        let (x, y) = (&h, &k);
        let norm = if one_mod_4 {
            x * x + x * y - &quarter * y * y
        } else {
            x * x - &dd * y * y
        };
        if norm.abs().is_one() {
            return if one_mod_4 {
                QuadElem::normalize((x << 1usize) + y, y.clone(), 2, d)
            } else {
                QuadElem::normalize(x.clone(), y.clone(), 1, d)
            };
        }
        p = a * q - p;
        q = (di - p * p) / q;
    }
}

/// Minimal positive solution `(z1, x1)` of `z^2 - b x^2 = 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PellFundamental {
    pub z1: BigInt,
    pub x1: BigInt,
    pub b: u64,
}

/// Pell coordinates `(z, x)` with `power = z + x√b`, when `power` has norm 1
/// and both coordinates are integers.
pub fn pell_coordinates(power: &QuadElem, b: u64) -> Option<(BigInt, BigInt)> {
    if !power.norm().is_one() {
        return None;
    }
    let (u, v, den) = power.coords_over(b);
    den.is_one().then_some((u, v))
}

/// Smallest power of the fundamental unit lying in `Z[√b]` with norm `+1`.
pub fn pell_fundamental_solution(b: u64) -> Result<PellFundamental, QuadError> {
    let eps = fundamental_unit(b)?;
    let mut power = eps.clone();
    loop {
        if let Some((z1, x1)) = pell_coordinates(&power, b) {
            return Ok(PellFundamental { z1, x1, b });
        }
        power = power.mul(&eps)?;
    }
}

/// `x_n = (ε^n - ε^-n) / (2√b)` when it is a positive integer.
pub fn candidate_x(eps: &QuadElem, b: u64, n: u64) -> Option<BigInt> {
    extract_candidate(&eps.pow(n), b).0
}

// (x_n, z_n) read from ε^n.
fn extract_candidate(power: &QuadElem, b: u64) -> (Option<BigInt>, Option<BigInt>) {
    match pell_coordinates(power, b) {
        Some((z, x)) if x.is_positive() => (Some(x), Some(z)),
        _ => (None, None),
    }
}

/// One step of the candidate scan.
#[derive(Debug, Clone)]
pub struct Candidate {
    pub n: u64,
    /// `ε^n`
    pub power: QuadElem,
    pub x: Option<BigInt>,
    /// `(ε^n + ε^-n)/2`, present together with `x`.
    pub z: Option<BigInt>,
}

/// Iterates `ε^n` for `n = start, start+1, ...` by repeated multiplication.
#[derive(Debug, Clone)]
pub struct CandidateCursor {
    b: u64,
    eps: QuadElem,
    power: QuadElem,
    n: u64,
}

impl CandidateCursor {
    pub fn new(eps: &QuadElem, b: u64) -> Self {
        let one = QuadElem { u: BigInt::one(), v: BigInt::zero(), denom: 1, d: eps.d };
        CandidateCursor { b, eps: eps.clone(), power: one, n: 0 }
    }

    /// Cursor positioned so that the next item is `start`.
    pub fn starting_at(eps: &QuadElem, b: u64, start: u64) -> Self {
        let mut c = Self::new(eps, b);
        if start > 1 {
            c.power = eps.pow(start - 1);
            c.n = start - 1;
        }
        c
    }

    /// Continues from an already computed `ε^n`; the next item is `n + 1`.
    pub fn resume(eps: &QuadElem, b: u64, n: u64, power: QuadElem) -> Self {
        CandidateCursor { b, eps: eps.clone(), power, n }
    }
}

impl Iterator for CandidateCursor {
    type Item = Candidate;

    fn next(&mut self) -> Option<Candidate> {
        self.power = self.power.mul(&self.eps).expect("same field");
        self.n += 1;
        let (x, z) = extract_candidate(&self.power, self.b);
        Some(Candidate { n: self.n, power: self.power.clone(), x, z })
    }
}
