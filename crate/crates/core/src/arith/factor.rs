use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use super::prime::{is_prime, mul_mod_u64, small_primes, TRIAL_DIVISION_BOUND};

/// Work allowance for a single factorization.
///
/// Exhausting the budget never fails the call; the unfactored remainder is
/// returned as [`Factorization::cofactor`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FactorBudget {
    pub time_limit: Option<Duration>,
    /// Total Pollard-Brent iterations across all composites.
    pub max_rho_steps: u64,
    /// Seed for the randomized primality rounds.
    pub seed: u64,
}

impl Default for FactorBudget {
    fn default() -> Self {
        FactorBudget {
            time_limit: Some(Duration::from_millis(5000)),
            max_rho_steps: 1 << 26,
            seed: 0,
        }
    }
}

impl FactorBudget {
    pub fn with_time_ms(ms: u64) -> Self {
        FactorBudget { time_limit: Some(Duration::from_millis(ms)), ..Default::default() }
    }
}

/// Prime-power decomposition `n = cofactor * prod p^e`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Factorization {
    pub n: BigUint,
    /// Strictly increasing primes with exponents `>= 1`.
    pub factors: Vec<(BigUint, u32)>,
    /// `1` when complete, otherwise a composite free of primes below the
    /// trial-division bound.
    pub cofactor: BigUint,
}

impl Factorization {
    pub fn is_complete(&self) -> bool {
        self.cofactor.is_one()
    }

    /// Whether some prime divides `n` at least twice.
    pub fn has_square_factor(&self) -> bool {
        self.factors.iter().any(|(_, e)| *e > 1)
    }

    pub fn reconstruct(&self) -> BigUint {
        self.factors
            .iter()
            .fold(self.cofactor.clone(), |acc, (p, e)| acc * p.pow(*e))
    }
}

struct Work {
    deadline: Option<Instant>,
    steps_left: u64,
    seed: u64,
}

impl Work {
    fn exhausted(&self) -> bool {
        self.steps_left == 0 || self.deadline.is_some_and(|d| Instant::now() >= d)
    }

    fn charge(&mut self, steps: u64) -> bool {
        self.steps_left = self.steps_left.saturating_sub(steps);
        !self.exhausted()
    }
}

/// Factors `n >= 1`.
///
/// # Panics
/// Panics when `n == 0`.
pub fn factorize(n: &BigUint, budget: &FactorBudget) -> Factorization {
    factorize_parts(std::slice::from_ref(n), budget)
}

/// Factors `x^2 - 1` through its halves `x - 1` and `x + 1`.
pub fn factorize_x2_minus_1(x: &BigUint, budget: &FactorBudget) -> Factorization {
    assert!(*x >= BigUint::from(2u32), "x^2 - 1 needs x >= 2");
    factorize_parts(&[x - 1u32, x + 1u32], budget)
}

/// Factors the product of `parts`, each `>= 1`, sharing one budget.
pub fn factorize_parts(parts: &[BigUint], budget: &FactorBudget) -> Factorization {
    assert!(parts.iter().all(|p| !p.is_zero()), "cannot factor zero");
    let mut work = Work {
        deadline: budget.time_limit.map(|t| Instant::now() + t),
        steps_left: budget.max_rho_steps,
        seed: budget.seed,
    };
    let mut primes: BTreeMap<BigUint, u32> = BTreeMap::new();
    let mut cofactor = BigUint::one();
    let mut n = BigUint::one();
    for part in parts {
        n *= part;
        let rest = trial_divide(part, &mut primes);
        if rest.is_one() {
            continue;
        }
        let mut pending = vec![rest];
        while let Some(m) = pending.pop() {
            if is_prime_with_bound(&m, work.seed) {
                *primes.entry(m).or_insert(0) += 1;
                continue;
            }
            let r = m.sqrt();
            if &r * &r == m {
                pending.push(r.clone());
                pending.push(r);
                continue;
            }
            match split(&m, &mut work) {
                Some(d) => {
                    let other = &m / &d;
                    pending.push(d);
                    pending.push(other);
                }
                None => cofactor *= m,
            }
        }
    }
    Factorization { n, factors: primes.into_iter().collect(), cofactor }
}

fn is_prime_with_bound(m: &BigUint, seed: u64) -> bool {
    // Everything below TRIAL_DIVISION_BOUND^2 left after trial division is prime.
    let bound = TRIAL_DIVISION_BOUND as u64;
    if m.to_u64().is_some_and(|v| v < bound * bound) {
        return true;
    }
    is_prime(m, seed)
}

fn trial_divide(n: &BigUint, primes: &mut BTreeMap<BigUint, u32>) -> BigUint {
    let mut rest = n.clone();
    for &p in small_primes() {
        if rest.is_one() {
            break;
        }
        let p64 = p as u64;
        if let Some(r) = rest.to_u64() {
            if p64 * p64 > r {
                *primes.entry(rest.clone()).or_insert(0) += 1;
                return BigUint::one();
            }
        }
        let mut e = 0;
        loop {
            let (q, r) = rest.div_rem(&BigUint::from(p));
            if !r.is_zero() {
                break;
            }
            rest = q;
            e += 1;
        }
        if e > 0 {
            *primes.entry(BigUint::from(p)).or_insert(0) += e;
        }
    }
    rest
}

// Nontrivial factor of the composite m, or None when the budget runs out.
fn split(m: &BigUint, work: &mut Work) -> Option<BigUint> {
    for c in 1u64.. {
        if work.exhausted() {
            return None;
        }
        let found = match m.to_u64() {
            Some(small) => brent_u64(small, c, work).map(BigUint::from),
            None => brent_big(m, c, work),
        };
        if let Some(d) = found {
            return Some(d);
        }
    }
    unreachable!()
}

const BATCH: u64 = 128;

fn brent_u64(n: u64, c: u64, work: &mut Work) -> Option<u64> {
    let f = |y: u64| ((y as u128 * y as u128 + c as u128) % n as u128) as u64;
    let (mut y, mut r, mut q) = (2u64, 1u64, 1u64);
    let (mut x, mut ys) = (0u64, 0u64);
    let mut g = 1u64;
    while g == 1 {
        x = y;
        for _ in 0..r {
            y = f(y);
        }
        let mut k = 0;
        while k < r && g == 1 {
            ys = y;
            let steps = BATCH.min(r - k);
            for _ in 0..steps {
                y = f(y);
                q = mul_mod_u64(q, x.abs_diff(y), n);
            }
            g = q.gcd(&n);
            k += steps;
            if !work.charge(steps) {
                return None;
            }
        }
        r *= 2;
    }
    if g == n {
        loop {
            ys = f(ys);
            g = x.abs_diff(ys).gcd(&n);
            if g > 1 {
                break;
            }
        }
    }
    (g != n).then_some(g)
}

fn brent_big(n: &BigUint, c: u64, work: &mut Work) -> Option<BigUint> {
    let c = BigUint::from(c);
    let f = |y: &BigUint| (y * y + &c) % n;
    let mut y = BigUint::from(2u32);
    let mut q = BigUint::one();
    let mut r = 1u64;
    let mut x = BigUint::zero();
    let mut ys = BigUint::zero();
    let mut g = BigUint::one();
    let diff = |a: &BigUint, b: &BigUint| if a > b { a - b } else { b - a };
    while g.is_one() {
        x = y.clone();
        for _ in 0..r {
            y = f(&y);
        }
        let mut k = 0;
        while k < r && g.is_one() {
            ys = y.clone();
            let steps = BATCH.min(r - k);
            for _ in 0..steps {
                y = f(&y);
                q = (q * diff(&x, &y)) % n;
            }
            g = q.gcd(n);
            k += steps;
            if !work.charge(steps) {
                return None;
            }
        }
        r *= 2;
    }
    if &g == n {
        loop {
            ys = f(&ys);
            g = diff(&x, &ys).gcd(n);
            if !g.is_one() {
                break;
            }
        }
    }
    (&g != n).then_some(g)
}
