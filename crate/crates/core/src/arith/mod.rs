//! Exact big-integer primitives: square roots, square tests, factorization
//! and the square-divisor structure of `x^2 - 1`.

mod factor;
mod prime;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Zero};
use thiserror::Error;

pub use factor::{factorize, factorize_parts, factorize_x2_minus_1, FactorBudget, Factorization};
pub use prime::{is_prime, is_prime_u64, TRIAL_DIVISION_BOUND};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ArithError {
    #[error("square root of negative integer {0}")]
    Negative(BigInt),
    #[error("factorization of {0} is incomplete (unfactored cofactor {1})")]
    Incomplete(BigUint, BigUint),
    #[error("zero denominator")]
    ZeroDenominator,
}

/// `⌊√n⌋` for a signed input.
pub fn isqrt(n: &BigInt) -> Result<BigInt, ArithError> {
    match n.sign() {
        Sign::Minus => Err(ArithError::Negative(n.clone())),
        _ => Ok(BigInt::from(n.magnitude().sqrt())),
    }
}

// Residues modulo 64 * 63 * 65 * 11; a square must be a square modulo each factor.
const FILTER_MODULUS: u64 = 64 * 63 * 65 * 11;

fn residue_table(m: u64) -> Vec<bool> {
    let mut table = vec![false; m as usize];
    for i in 0..m {
        table[((i * i) % m) as usize] = true;
    }
    table
}

struct SquareFilter {
    mod64: Vec<bool>,
    mod63: Vec<bool>,
    mod65: Vec<bool>,
    mod11: Vec<bool>,
}

fn square_filter() -> &'static SquareFilter {
    static FILTER: std::sync::OnceLock<SquareFilter> = std::sync::OnceLock::new();
    FILTER.get_or_init(|| SquareFilter {
        mod64: residue_table(64),
        mod63: residue_table(63),
        mod65: residue_table(65),
        mod11: residue_table(11),
    })
}

fn passes_residue_filter(r: u64) -> bool {
    let f = square_filter();
    f.mod64[(r % 64) as usize]
        && f.mod63[(r % 63) as usize]
        && f.mod65[(r % 65) as usize]
        && f.mod11[(r % 11) as usize]
}

/// Returns `Some(r)` with `r^2 = n` when `n` is a perfect square.
pub fn is_perfect_square(n: &BigUint) -> Option<BigUint> {
    let residue = (n % FILTER_MODULUS)
        .iter_u64_digits()
        .next()
        .unwrap_or(0);
    if !passes_residue_filter(residue) {
        return None;
    }
    let r = n.sqrt();
    if &r * &r == *n {
        Some(r)
    } else {
        None
    }
}

/// Signed convenience wrapper; negative numbers are never squares.
pub fn is_perfect_square_int(n: &BigInt) -> Option<BigInt> {
    match n.sign() {
        Sign::Minus => None,
        _ => is_perfect_square(n.magnitude()).map(BigInt::from),
    }
}

/// Product of the primes dividing `f.n` to an odd power.
pub fn squarefree_part(f: &Factorization) -> Result<BigUint, ArithError> {
    if !f.is_complete() {
        return Err(ArithError::Incomplete(f.n.clone(), f.cofactor.clone()));
    }
    Ok(f
        .factors
        .iter()
        .filter(|(_, e)| e % 2 == 1)
        .fold(BigUint::one(), |acc, (p, _)| acc * p))
}

/// All `d >= 1` with `d^2 | f.n`, ascending.
pub fn square_divisors(f: &Factorization) -> Result<Vec<BigUint>, ArithError> {
    if !f.is_complete() {
        return Err(ArithError::Incomplete(f.n.clone(), f.cofactor.clone()));
    }
    let mut divisors = vec![BigUint::one()];
    for (p, e) in &f.factors {
        let half = e / 2;
        let mut next = Vec::with_capacity(divisors.len() * (half as usize + 1));
        for d in &divisors {
            let mut pk = d.clone();
            next.push(pk.clone());
            for _ in 0..half {
                pk *= p;
                next.push(pk.clone());
            }
        }
        divisors = next;
    }
    divisors.sort();
    Ok(divisors)
}

/// Reduces `num/den` and returns `(s, t)` with `(s/t)^2 = num/den` when both
/// reduced parts are squares.
pub fn rational_square_root(
    num: &BigUint,
    den: &BigUint,
) -> Result<Option<(BigUint, BigUint)>, ArithError> {
    if den.is_zero() {
        return Err(ArithError::ZeroDenominator);
    }
    let g = num.gcd(den);
    let (p, q) = (num / &g, den / &g);
    Ok(match (is_perfect_square(&p), is_perfect_square(&q)) {
        (Some(s), Some(t)) => Some((s, t)),
        _ => None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn big(n: u64) -> BigUint {
        BigUint::from(n)
    }

    #[test]
    fn isqrt_examples() {
        assert_eq!(isqrt(&BigInt::from(0)).unwrap(), BigInt::from(0));
        assert_eq!(isqrt(&BigInt::from(2401)).unwrap(), BigInt::from(49));
        let p40 = BigInt::from(10u32).pow(40);
        assert_eq!(isqrt(&p40).unwrap(), BigInt::from(10u32).pow(20));
        assert!(matches!(isqrt(&BigInt::from(-1)), Err(ArithError::Negative(_))));
    }

    #[test]
    fn perfect_square_examples() {
        assert_eq!(is_perfect_square(&big(2401)), Some(big(49)));
        assert_eq!(is_perfect_square(&big(2)), None);
        assert_eq!(is_perfect_square(&big(235225)), Some(big(485)));
        assert_eq!(is_perfect_square(&big(0)), Some(big(0)));
        assert_eq!(is_perfect_square_int(&BigInt::from(-4)), None);
    }

    #[test]
    fn residue_filter_never_rejects_squares() {
        for r in 0..5000u64 {
            assert!(passes_residue_filter((r * r) % FILTER_MODULUS), "{r}");
        }
    }

    #[test]
    fn squarefree_examples() {
        let b = FactorBudget::default();
        assert_eq!(squarefree_part(&factorize(&big(48), &b)).unwrap(), big(3));
        assert_eq!(squarefree_part(&factorize(&big(99), &b)).unwrap(), big(11));
        assert_eq!(squarefree_part(&factorize(&big(9800), &b)).unwrap(), big(2));
    }

    #[test]
    fn incomplete_factorization_is_rejected() {
        let f = Factorization {
            n: big(1_000_003 * 1_000_033),
            factors: vec![],
            cofactor: big(1_000_003 * 1_000_033),
        };
        assert!(matches!(squarefree_part(&f), Err(ArithError::Incomplete(..))));
        assert!(matches!(square_divisors(&f), Err(ArithError::Incomplete(..))));
    }

    #[test]
    fn square_divisor_examples() {
        let b = FactorBudget::default();
        let sd = |n: u64| square_divisors(&factorize(&big(n), &b)).unwrap();
        assert_eq!(sd(99), vec![big(1), big(3)]);
        assert_eq!(sd(1), vec![big(1)]);
        assert_eq!(
            sd(9800),
            [1, 2, 5, 7, 10, 14, 35, 70].iter().map(|&d| big(d)).collect::<Vec<_>>()
        );
    }

    #[test]
    fn rational_square_root_examples() {
        assert_eq!(
            rational_square_root(&big(9800), &big(98)).unwrap(),
            Some((big(10), big(1)))
        );
        assert_eq!(rational_square_root(&big(2), &big(1)).unwrap(), None);
        assert_eq!(rational_square_root(&big(9800), &big(99)).unwrap(), None);
        assert_eq!(
            rational_square_root(&big(1), &big(0)),
            Err(ArithError::ZeroDenominator)
        );
        // 48 / 3 = 16: same-a pair for a = 3 (x = 2 and x = 7).
        assert_eq!(
            rational_square_root(&big(48), &big(3)).unwrap(),
            Some((big(4), big(1)))
        );
    }
}
