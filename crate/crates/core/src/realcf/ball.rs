use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::RealError;

/// A real number known to lie in `[(mid - rad) / 2^prec, (mid + rad) / 2^prec]`.
///
/// Every operation widens the radius so that the enclosure stays valid:
/// rounding of the midpoint adds one unit in the last place, and input radii
/// are propagated through first-order bounds that are exact upper bounds for
/// the operations involved.
#[derive(Clone, PartialEq, Eq)]
pub struct CertifiedReal {
    mid: BigInt,
    rad: BigUint,
    prec: u32,
}

impl fmt::Debug for CertifiedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "CertifiedReal({} ± 2^{:.1}, prec={})",
            self.to_sci_string(20),
            self.radius_log2(),
            self.prec
        )
    }
}

fn pow2(bits: u32) -> BigUint {
    BigUint::one() << bits as usize
}

fn ceil_div(a: &BigUint, b: &BigUint) -> BigUint {
    let (q, r) = a.div_rem(b);
    if r.is_zero() {
        q
    } else {
        q + 1u32
    }
}

fn floor_shr(m: &BigInt, bits: u32) -> (BigInt, bool) {
    let (q, r) = m.div_mod_floor(&BigInt::from(pow2(bits)));
    (q, !r.is_zero())
}

fn ceil_shr(r: &BigUint, bits: u32) -> BigUint {
    ceil_div(r, &pow2(bits))
}

impl CertifiedReal {
    /// Builds `(mid ± rad) / 2^prec` directly.
    pub fn from_parts(mid: BigInt, rad: BigUint, prec: u32) -> Self {
        CertifiedReal { mid, rad, prec }
    }

    pub fn from_int(n: impl Into<BigInt>, prec: u32) -> Self {
        let n: BigInt = n.into();
        CertifiedReal { mid: n << prec as usize, rad: BigUint::zero(), prec }
    }

    pub fn zero(prec: u32) -> Self {
        Self::from_int(0, prec)
    }

    /// Enclosure of `num / den`, `den != 0`.
    pub fn from_ratio(num: &BigInt, den: &BigInt, prec: u32) -> Self {
        assert!(!den.is_zero(), "zero denominator");
        let (q, r) = (num << prec as usize).div_mod_floor(den);
        let rad = if r.is_zero() { BigUint::zero() } else { BigUint::one() };
        CertifiedReal { mid: q, rad, prec }
    }

    pub fn from_rational(q: &BigRational, prec: u32) -> Self {
        Self::from_ratio(q.numer(), q.denom(), prec)
    }

    pub fn precision_bits(&self) -> u32 {
        self.prec
    }

    pub fn mid(&self) -> &BigInt {
        &self.mid
    }

    pub fn rad(&self) -> &BigUint {
        &self.rad
    }

    pub fn is_exact(&self) -> bool {
        self.rad.is_zero()
    }

    /// `log2` of the radius in absolute terms; `-inf` for exact values.
    pub fn radius_log2(&self) -> f64 {
        if self.rad.is_zero() {
            return f64::NEG_INFINITY;
        }
        self.rad.bits() as f64 - self.prec as f64
    }

    /// Lower endpoint numerator at scale `2^prec`.
    pub fn lo_scaled(&self) -> BigInt {
        &self.mid - BigInt::from(self.rad.clone())
    }

    /// Upper endpoint numerator at scale `2^prec`.
    pub fn hi_scaled(&self) -> BigInt {
        &self.mid + BigInt::from(self.rad.clone())
    }

    pub fn lo(&self) -> BigRational {
        BigRational::new(self.lo_scaled(), BigInt::from(pow2(self.prec)))
    }

    pub fn hi(&self) -> BigRational {
        BigRational::new(self.hi_scaled(), BigInt::from(pow2(self.prec)))
    }

    pub fn contains(&self, q: &BigRational) -> bool {
        &self.lo() <= q && q <= &self.hi()
    }

    pub fn certainly_positive(&self) -> bool {
        self.lo_scaled().is_positive()
    }

    pub fn certainly_negative(&self) -> bool {
        self.hi_scaled().is_negative()
    }

    /// `true` only when every point of `self` is below every point of `other`.
    pub fn certainly_lt(&self, other: &Self) -> bool {
        (other - self).certainly_positive()
    }

    /// `⌊x⌋` when it is the same for every point of the enclosure.
    pub fn floor_certified(&self) -> Option<BigInt> {
        let (lo, _) = floor_shr(&self.lo_scaled(), self.prec);
        let (hi, _) = floor_shr(&self.hi_scaled(), self.prec);
        (lo == hi).then_some(lo)
    }

    /// `⌊hi⌋`: the floor of an upper bound.
    pub fn floor_upper(&self) -> BigInt {
        floor_shr(&self.hi_scaled(), self.prec).0
    }

    /// `⌈hi⌉`.
    pub fn ceil_upper(&self) -> BigInt {
        let (q, inexact) = floor_shr(&self.hi_scaled(), self.prec);
        if inexact {
            q + 1
        } else {
            q
        }
    }

    /// `⌊lo⌋`.
    pub fn floor_lower(&self) -> BigInt {
        floor_shr(&self.lo_scaled(), self.prec).0
    }

    pub fn to_f64(&self) -> f64 {
        let bits = self.mid.bits() as i64;
        let shift = (bits - 60).max(0);
        let top = (&self.mid >> shift as usize).to_f64().unwrap_or(0.0);
        top * 2f64.powi((shift - self.prec as i64) as i32)
    }

    /// Re-expresses at `prec` fractional bits, widening when bits are dropped.
    pub fn with_precision(&self, prec: u32) -> Self {
        match prec.cmp(&self.prec) {
            Ordering::Equal => self.clone(),
            Ordering::Greater => {
                let s = (prec - self.prec) as usize;
                CertifiedReal { mid: &self.mid << s, rad: &self.rad << s, prec }
            }
            Ordering::Less => {
                let s = self.prec - prec;
                let (mid, inexact) = floor_shr(&self.mid, s);
                let mut rad = ceil_shr(&self.rad, s);
                if inexact {
                    rad += 1u32;
                }
                CertifiedReal { mid, rad, prec }
            }
        }
    }

    fn aligned<'a>(a: &'a Self, b: &'a Self) -> (std::borrow::Cow<'a, Self>, std::borrow::Cow<'a, Self>) {
        use std::borrow::Cow;
        match a.prec.cmp(&b.prec) {
            Ordering::Equal => (Cow::Borrowed(a), Cow::Borrowed(b)),
            Ordering::Less => (Cow::Owned(a.with_precision(b.prec)), Cow::Borrowed(b)),
            Ordering::Greater => (Cow::Borrowed(a), Cow::Owned(b.with_precision(a.prec))),
        }
    }

    /// Exact scaling by an integer.
    pub fn mul_int(&self, k: &BigInt) -> Self {
        CertifiedReal {
            mid: &self.mid * k,
            rad: &self.rad * k.magnitude(),
            prec: self.prec,
        }
    }

    /// Division by a non-zero integer.
    pub fn div_int(&self, k: &BigInt) -> Self {
        assert!(!k.is_zero(), "division by zero");
        let (q, r) = self.mid.div_mod_floor(k);
        let mut rad = ceil_div(&self.rad, k.magnitude());
        if !r.is_zero() {
            rad += 1u32;
        }
        CertifiedReal { mid: q, rad, prec: self.prec }
    }

    /// Exact multiplication by `2^k` (k may be negative).
    pub fn mul_pow2(&self, k: i64) -> Self {
        if k >= 0 {
            CertifiedReal { mid: &self.mid << k as usize, rad: &self.rad << k as usize, prec: self.prec }
        } else {
            let extra = (-k) as u32;
            CertifiedReal { mid: self.mid.clone(), rad: self.rad.clone(), prec: self.prec + extra }
        }
    }

    pub fn abs(&self) -> Self {
        if self.mid.is_negative() {
            -self
        } else {
            self.clone()
        }
    }

    /// `self / other`; fails when `other` may be zero.
    pub fn try_div(&self, other: &Self) -> Result<Self, RealError> {
        let (x, y) = Self::aligned(self, other);
        let p = x.prec;
        let ym = y.mid.magnitude();
        if ym <= &y.rad {
            return Err(RealError::DivisionByZero);
        }
        let (q, r) = (&x.mid << p as usize).div_mod_floor(&y.mid);
        let num = (&x.rad * ym + x.mid.magnitude() * &y.rad) << p as usize;
        let den = ym * (ym - &y.rad);
        let mut rad = ceil_div(&num, &den);
        if !r.is_zero() {
            rad += 1u32;
        }
        Ok(CertifiedReal { mid: q, rad, prec: p })
    }

    pub fn recip(&self) -> Result<Self, RealError> {
        Self::from_int(1, self.prec).try_div(self)
    }

    /// Square root of a non-negative enclosure whose lower end is positive
    /// (or an exact zero).
    pub fn sqrt(&self) -> Result<Self, RealError> {
        let p = self.prec as usize;
        if self.mid.is_zero() && self.rad.is_zero() {
            return Ok(self.clone());
        }
        let lo = self.lo_scaled();
        if !lo.is_positive() {
            return Err(RealError::NonPositive("sqrt"));
        }
        let scaled = self.mid.magnitude() << p;
        let root = scaled.sqrt();
        let inexact = &root * &root != scaled;
        let mut rad = BigUint::zero();
        if !self.rad.is_zero() {
            let s = (lo.magnitude() << p).sqrt();
            if s.is_zero() {
                return Err(RealError::NeedsPrecision("sqrt"));
            }
            rad = ceil_div(&(&self.rad << p), &(s << 1usize));
        }
        if inexact {
            rad += 1u32;
        }
        Ok(CertifiedReal { mid: BigInt::from(root), rad, prec: self.prec })
    }

    /// Natural logarithm of a positive enclosure.
    pub fn ln(&self) -> Result<Self, RealError> {
        let lo = self.lo_scaled();
        if !lo.is_positive() {
            return Err(RealError::NonPositive("ln"));
        }
        let mut out = ln_dyadic(self.mid.magnitude(), self.prec);
        if !self.rad.is_zero() {
            // |ln x - ln mid| <= rad / lo
            out.rad += ceil_div(&(&self.rad << self.prec as usize), lo.magnitude()) + 1u32;
        }
        Ok(out)
    }

    /// Exponential, evaluated at both endpoints (exp is increasing).
    pub fn exp(&self) -> Self {
        let p = self.prec;
        if self.rad.is_zero() {
            return exp_dyadic(&self.mid, p);
        }
        let lo = exp_dyadic(&self.lo_scaled(), p);
        let hi = exp_dyadic(&self.hi_scaled(), p);
        Self::hull(&lo, &hi)
    }

    /// Smallest ball containing both enclosures.
    pub fn hull(a: &Self, b: &Self) -> Self {
        let (a, b) = Self::aligned(a, b);
        let lo = a.lo_scaled().min(b.lo_scaled());
        let hi = a.hi_scaled().max(b.hi_scaled());
        let sum = &lo + &hi;
        let (mid, inexact) = floor_shr(&sum, 1);
        let mut rad = ceil_shr(&(hi - lo).magnitude().clone(), 1);
        if inexact {
            rad += 1u32;
        }
        CertifiedReal { mid, rad, prec: a.prec }
    }

    /// Decimal rendering of the midpoint with `sig` significant digits.
    pub fn to_sci_string(&self, sig: usize) -> String {
        format_sci(&self.mid, self.prec, sig)
    }
}

/// Scientific notation for `m / 2^prec` with `sig` significant digits
/// (truncated toward zero).
pub(crate) fn format_sci(m: &BigInt, prec: u32, sig: usize) -> String {
    if m.is_zero() {
        return "0".to_string();
    }
    let sig = sig.max(1);
    let neg = m.is_negative();
    let mag = m.magnitude();
    let den = pow2(prec);
    // estimate the decimal exponent, then correct
    let approx = (mag.bits() as f64 - prec as f64) * std::f64::consts::LOG10_2;
    let mut e10 = approx.floor() as i64;
    let digits = loop {
        let shift = sig as i64 - 1 - e10;
        let ten = BigUint::from(10u32);
        let (num, d) = if shift >= 0 {
            (mag * ten.pow(shift as u32), den.clone())
        } else {
            (mag.clone(), &den * ten.pow((-shift) as u32))
        };
        let digits = num / d;
        let len = digits.to_string().len();
        if len > sig {
            e10 += 1;
        } else if len < sig {
            e10 -= 1;
        } else {
            break digits.to_string();
        }
    };
    let (head, tail) = digits.split_at(1);
    let sign = if neg { "-" } else { "" };
    if tail.is_empty() {
        format!("{sign}{head}e{e10}")
    } else {
        format!("{sign}{head}.{tail}e{e10}")
    }
}

impl Neg for &CertifiedReal {
    type Output = CertifiedReal;
    fn neg(self) -> CertifiedReal {
        CertifiedReal { mid: -&self.mid, rad: self.rad.clone(), prec: self.prec }
    }
}

impl Neg for CertifiedReal {
    type Output = CertifiedReal;
    fn neg(self) -> CertifiedReal {
        CertifiedReal { mid: -self.mid, rad: self.rad, prec: self.prec }
    }
}

impl Add for &CertifiedReal {
    type Output = CertifiedReal;
    fn add(self, rhs: &CertifiedReal) -> CertifiedReal {
        let (a, b) = CertifiedReal::aligned(self, rhs);
        CertifiedReal { mid: &a.mid + &b.mid, rad: &a.rad + &b.rad, prec: a.prec }
    }
}

impl Sub for &CertifiedReal {
    type Output = CertifiedReal;
    fn sub(self, rhs: &CertifiedReal) -> CertifiedReal {
        let (a, b) = CertifiedReal::aligned(self, rhs);
        CertifiedReal { mid: &a.mid - &b.mid, rad: &a.rad + &b.rad, prec: a.prec }
    }
}

impl Mul for &CertifiedReal {
    type Output = CertifiedReal;
    fn mul(self, rhs: &CertifiedReal) -> CertifiedReal {
        let (a, b) = CertifiedReal::aligned(self, rhs);
        let p = a.prec;
        let prod = &a.mid * &b.mid;
        let err = a.mid.magnitude() * &b.rad + b.mid.magnitude() * &a.rad + &a.rad * &b.rad;
        let (mid, inexact) = floor_shr(&prod, p);
        let mut rad = ceil_shr(&err, p);
        if inexact {
            rad += 1u32;
        }
        CertifiedReal { mid, rad, prec: p }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $method:ident) => {
        impl $tr for CertifiedReal {
            type Output = CertifiedReal;
            fn $method(self, rhs: CertifiedReal) -> CertifiedReal {
                (&self).$method(&rhs)
            }
        }
        impl $tr<&CertifiedReal> for CertifiedReal {
            type Output = CertifiedReal;
            fn $method(self, rhs: &CertifiedReal) -> CertifiedReal {
                (&self).$method(rhs)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

// Guard bits added on top of the caller's precision inside the kernels.
const GUARD_BITS: u32 = 64;

fn reduction_steps(prec: u32) -> u32 {
    ((prec as f64).sqrt() as u32 / 2).clamp(4, 60)
}

/// `ln 2` at `prec` bits: `2 * sum_j 3^-(2j+1) / (2j+1)`.
pub fn ln2(prec: u32) -> CertifiedReal {
    let w = prec + GUARD_BITS;
    let one = BigUint::one() << w as usize;
    let mut power = &one / 3u32; // floor(2^w / 3^(2j+1))
    let mut sum = BigUint::zero();
    let mut terms = 0u64;
    let mut j = 0u64;
    while !power.is_zero() {
        sum += &power / (2 * j + 1);
        power /= 9u32;
        j += 1;
        terms += 1;
    }
    // each term truncated twice (power and quotient): <= 2 units low each;
    // the remaining tail is below one unit.
    let low = BigInt::from(sum << 1usize);
    let slack = BigUint::from(4 * terms + 2);
    let mid = &low + BigInt::from(&slack >> 1usize);
    CertifiedReal { mid, rad: (slack >> 1usize) + 1u32, prec: w }.with_precision(prec)
}

/// `sum_{j>=0} t^(2j+1) / (2j+1)` for an enclosure of `0 <= t <= 1/2`.
fn atanh_series(t: &CertifiedReal) -> CertifiedReal {
    let t2 = t * t;
    let mut term = t.clone();
    let mut sum = t.clone();
    let unit = BigInt::one();
    for j in 1u64.. {
        term = &term * &t2;
        let bound = term.mid.magnitude() + &term.rad;
        if BigInt::from(bound.clone()) <= unit {
            // remaining terms sum to at most 2 * |term| for t <= 1/2
            sum.rad += (bound << 1usize) + 1u32;
            break;
        }
        sum = &sum + &term.div_int(&BigInt::from(2 * j + 1));
    }
    sum
}

/// `ln(m / 2^prec)` for `m > 0`.
fn ln_dyadic(m: &BigUint, prec: u32) -> CertifiedReal {
    let r = reduction_steps(prec);
    let w = prec + GUARD_BITS + r;
    let bits = m.bits() as i64;
    let k = bits - 1 - prec as i64;
    // y = m / 2^(bits-1) in [1, 2), at w fractional bits
    let shift = w as i64 - (bits - 1);
    let y = if shift >= 0 {
        CertifiedReal { mid: BigInt::from(m << shift as usize), rad: BigUint::zero(), prec: w }
    } else {
        let s = (-shift) as usize;
        let q = m >> s;
        let exact = (&q << s) == *m;
        CertifiedReal {
            mid: BigInt::from(q),
            rad: if exact { BigUint::zero() } else { BigUint::one() },
            prec: w,
        }
    };
    let one = CertifiedReal::from_int(1, w);
    let mut z = y;
    for _ in 0..r {
        z = z.sqrt().expect("argument stays in [1, 2)");
    }
    let t = (&z - &one).try_div(&(&z + &one)).expect("z + 1 >= 2");
    let ln_z = atanh_series(&t).mul_pow2(1);
    let ln_y = ln_z.mul_pow2(r as i64);
    let total = if k == 0 {
        ln_y
    } else {
        &ln_y + &ln2(w).mul_int(&BigInt::from(k))
    };
    total.with_precision(prec)
}

/// `exp(m / 2^prec)`.
fn exp_dyadic(m: &BigInt, prec: u32) -> CertifiedReal {
    // halve until |x| < 2^-8, then square back
    let int_bits = (m.bits() as i64 - prec as i64).max(0) as u32;
    let s = int_bits + 8;
    let w = prec + GUARD_BITS + s + int_bits;
    let y = CertifiedReal { mid: m.clone(), rad: BigUint::zero(), prec: prec + s }.with_precision(w);
    let mut sum = CertifiedReal::from_int(1, w);
    let mut term = CertifiedReal::from_int(1, w);
    for k in 1u64.. {
        term = (&term * &y).div_int(&BigInt::from(k));
        let bound = term.mid.magnitude() + &term.rad;
        sum = &sum + &term;
        if bound.is_one() || bound.is_zero() {
            // tail after a sub-ulp term with |y| < 1/2 is below two units
            sum.rad += 2u32;
            break;
        }
    }
    for _ in 0..s {
        sum = &sum * &sum;
    }
    sum.with_precision(prec)
}

impl CertifiedReal {
    /// Sign of the enclosure when it is certain.
    pub fn certain_sign(&self) -> Option<Sign> {
        if self.certainly_positive() {
            Some(Sign::Plus)
        } else if self.certainly_negative() {
            Some(Sign::Minus)
        } else if self.mid.is_zero() && self.rad.is_zero() {
            Some(Sign::NoSign)
        } else {
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::str::FromStr;

    // 50-digit reference values computed with an independent multiprecision library.
    const LN2: &str = "0.69314718055994530941723212145817656807550013436025";
    const LN_1P_SQRT2: &str = "0.88137358701954302523260932497979230902816032826163";
    const E: &str = "2.71828182845904523536028747135266249775724709369995";
    const SQRT2: &str = "1.41421356237309504880168872420969807856967187537694";

    fn dec(s: &str) -> BigRational {
        let (int, frac) = s.split_once('.').unwrap();
        let den = BigInt::from(10u32).pow(frac.len() as u32);
        let num = BigInt::from_str(&format!("{int}{frac}")).unwrap();
        BigRational::new(num, den)
    }

    // reference truncated to 50 digits: treat it as an interval of width 1e-50
    fn encloses_ref(x: &CertifiedReal, s: &str) -> bool {
        let r = dec(s);
        let eps = BigRational::new(BigInt::one(), BigInt::from(10u32).pow(50));
        x.lo() <= &r + &eps && &r - &eps <= x.hi()
    }

    #[test]
    fn ln2_encloses_reference() {
        for p in [64, 128, 165, 192, 300] {
            let l = ln2(p);
            assert!(encloses_ref(&l, LN2), "p={p} {l:?}");
            assert!(l.radius_log2() < -(p as f64) + 4.0);
        }
    }

    #[test]
    fn ln_of_quadratic_unit() {
        for p in [96, 192, 333] {
            let s2 = CertifiedReal::from_int(2, p).sqrt().unwrap();
            assert!(encloses_ref(&s2, SQRT2));
            let x = &s2 + &CertifiedReal::from_int(1, p);
            let l = x.ln().unwrap();
            assert!(encloses_ref(&l, LN_1P_SQRT2), "p={p} {l:?}");
            assert!(l.radius_log2() < -(p as f64) + 8.0);
        }
    }

    #[test]
    fn exp_one() {
        for p in [64, 192, 256] {
            let e = CertifiedReal::from_int(1, p).exp();
            assert!(encloses_ref(&e, E), "{e:?}");
            let back = e.ln().unwrap();
            assert!(back.contains(&BigRational::one()));
        }
    }

    #[test]
    fn ln_small_and_large_arguments() {
        let p = 192;
        let tiny = CertifiedReal::from_ratio(&BigInt::one(), &BigInt::from(1u64 << 40), p);
        let l = tiny.ln().unwrap();
        let expect = ln2(p).mul_int(&BigInt::from(-40));
        assert!((&l - &expect).contains(&BigRational::zero()) || (&l - &expect).abs().to_f64() < 1e-50);
        let huge = CertifiedReal::from_int(BigInt::from(10u32).pow(300), p);
        let l = huge.ln().unwrap();
        assert!((l.to_f64() - 300.0 * std::f64::consts::LN_10).abs() < 1e-9);
    }

    #[test]
    fn division_and_errors() {
        let p = 128;
        let third = CertifiedReal::from_int(1, p).try_div(&CertifiedReal::from_int(3, p)).unwrap();
        assert!(third.contains(&BigRational::new(1.into(), 3.into())));
        let fuzzy_zero = CertifiedReal::from_parts(BigInt::one(), BigUint::from(2u32), p);
        assert_eq!(third.try_div(&fuzzy_zero), Err(RealError::DivisionByZero));
        assert!(matches!(fuzzy_zero.ln(), Err(RealError::NonPositive(_))));
        assert!(matches!(CertifiedReal::from_int(-1, p).sqrt(), Err(RealError::NonPositive(_))));
    }

    #[test]
    fn floors() {
        let p = 64;
        let x = CertifiedReal::from_ratio(&BigInt::from(7), &BigInt::from(2), p);
        assert_eq!(x.floor_certified(), Some(BigInt::from(3)));
        assert_eq!(x.ceil_upper(), BigInt::from(4));
        let two = CertifiedReal::from_parts(BigInt::from(2) << 64usize, BigUint::one(), p);
        assert_eq!(two.floor_certified(), None);
        assert_eq!(two.floor_upper(), BigInt::from(2));
    }

    #[test]
    fn sci_format() {
        let x = CertifiedReal::from_int(334_499_083_821_826u64, 64);
        assert_eq!(x.to_sci_string(4), "3.344e14");
        let y = CertifiedReal::from_ratio(&BigInt::from(-1), &BigInt::from(8), 64);
        assert_eq!(y.to_sci_string(3), "-1.25e-1");
    }
}
