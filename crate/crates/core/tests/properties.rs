use num_bigint::{BigInt, BigUint};
use num_integer::{Integer, Roots};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use proptest::prelude::*;

use simpell::arith::{
    factorize, factorize_x2_minus_1, is_perfect_square, isqrt, square_divisors, squarefree_part, FactorBudget,
};
use simpell::bounds::{compute_c_m, CmMethod};
use simpell::quadfield::{fundamental_unit, is_square_u64, pell_coordinates, pell_fundamental_solution, QuadElem};
use simpell::realcf::{expand_cf, ln2, log_quad, quad_to_real, CertifiedReal};
use simpell::verifier::{recover_solutions, verify_b, SkipReason, VerifyConfig};

const LN2: &str = "0.693147180559945309417232121458176568075500134360255254120680009493393621969694715605863326996418687542001481020570685733685520235758130557032670751635";
const LN_1_SQRT2: &str = "0.881373587019543025232609324979792309028160328261635410753295608653377184222026087833706891910256042856739816192106492188762072511976591937527255462766";
const PHI: &str = "1.61803398874989484820458683436563811772030917980576286213544862270526046281890244970720720418939113748475408807538689175212663386222353693179318006077";

/// `[r - 10^-148, r + 10^-148]` for a decimal string `r`.
fn reference(s: &str) -> (BigRational, BigRational) {
    let (int, frac) = s.split_once('.').unwrap();
    let den = BigInt::from(10u32).pow(frac.len() as u32);
    let num: BigInt = format!("{int}{frac}").parse().unwrap();
    let r = BigRational::new(num, den);
    let slack = BigRational::new(BigInt::one(), BigInt::from(10u32).pow(148));
    (&r - &slack, r + slack)
}

fn trial_is_prime(p: u64) -> bool {
    p >= 2 && (2..=p.sqrt()).all(|d| p % d != 0)
}

fn non_square(max: u64) -> impl Strategy<Value = u64> {
    (2..max).prop_filter("non-square", |&d| !is_square_u64(d))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 1000, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn isqrt_brackets(n in 0u64..=1_000_000_000_000) {
        let r = isqrt(&BigInt::from(n)).unwrap().to_u64().unwrap();
        prop_assert!(r * r <= n && n < (r + 1) * (r + 1));
    }

    #[test]
    fn isqrt_brackets_big(digits in prop::collection::vec(any::<u32>(), 1..12)) {
        let n = BigInt::from(BigUint::new(digits));
        let r = isqrt(&n).unwrap();
        prop_assert!(&r * &r <= n && n < (&r + 1) * (&r + 1));
        prop_assert_eq!(is_perfect_square(&(r.magnitude() * r.magnitude())), Some(r.magnitude().clone()));
    }

    #[test]
    fn factorize_small(n in 1u64..=10_000_000_000) {
        let f = factorize(&BigUint::from(n), &FactorBudget::default());
        prop_assert!(f.is_complete());
        prop_assert_eq!(f.reconstruct(), BigUint::from(n));
        for (p, _) in &f.factors {
            prop_assert!(trial_is_prime(p.to_u64().unwrap()));
        }
        let sf = squarefree_part(&f).unwrap();
        prop_assert!((BigUint::from(n) % &sf).is_zero());
        prop_assert!(is_perfect_square(&(BigUint::from(n) / &sf)).is_some());
    }

    #[test]
    fn x2_minus_1_split(x in 2u64..1_000_000_000) {
        let f = factorize_x2_minus_1(&BigUint::from(x), &FactorBudget::default());
        let x = BigUint::from(x);
        prop_assert_eq!(f.reconstruct(), &x * &x - 1u32);
    }
}

#[test]
fn square_divisors_match_enumeration() {
    const N: usize = 1_000_000;
    // sieve: every d with d^2 | n
    let mut expected: Vec<Vec<u32>> = vec![Vec::new(); N + 1];
    let mut d = 1usize;
    while d * d <= N {
        let mut m = d * d;
        while m <= N {
            expected[m].push(d as u32);
            m += d * d;
        }
        d += 1;
    }
    let budget = FactorBudget::default();
    for n in 1..=N {
        let f = factorize(&BigUint::from(n), &budget);
        let got: Vec<u32> = square_divisors(&f).unwrap().iter().map(|d| d.to_u32().unwrap()).collect();
        assert_eq!(got, expected[n], "n = {n}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 300, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn unit_has_norm_pm_one(b in non_square(200_000)) {
        let e = fundamental_unit(b).unwrap();
        prop_assert!(e.norm().abs().is_one());
        prop_assert!(e.greater_than_one());
    }

    #[test]
    fn three_term_recurrence(b in non_square(50_000)) {
        // ε^{n+1} = t ε^n - N ε^{n-1}, compared on doubled coordinates
        let e = fundamental_unit(b).unwrap();
        let (t, nm) = (e.trace(), e.norm());
        let coords = |q: &QuadElem| {
            let k = BigInt::from(2 / q.denom());
            (q.u() * &k, q.v() * &k)
        };
        let mut prev = coords(&e.pow(0));
        let mut cur = coords(&e);
        for n in 1..50u64 {
            let next = coords(&e.pow(n + 1));
            prop_assert_eq!(&next.0, &(&t * &cur.0 - &nm * &prev.0));
            prop_assert_eq!(&next.1, &(&t * &cur.1 - &nm * &prev.1));
            prev = cur;
            cur = next;
        }
    }

    #[test]
    fn same_a_pairs_have_square_ratio(a in non_square(5_000), i in 1u32..6, j in 1u32..6) {
        // powers of δ_a = x1 + y1√a give x_i, x_j with (x_j²-1)/(x_i²-1) = (y_j/y_i)²
        let pell = pell_fundamental_solution(a).unwrap();
        let delta = QuadElem::new(pell.z1, pell.x1, 1, a).unwrap();
        let (xi, yi, _) = delta.pow(i as u64).coords_over(a);
        let (xj, yj, _) = delta.pow(j as u64).coords_over(a);
        let num = (&xj * &xj - 1u32).to_biguint().unwrap();
        let den = (&xi * &xi - 1u32).to_biguint().unwrap();
        let (s, t) = simpell::arith::rational_square_root(&num, &den).unwrap().expect("ratio is a square");
        let g = yj.gcd(&yi);
        prop_assert_eq!(BigInt::from(s), &yj / &g);
        prop_assert_eq!(BigInt::from(t), &yi / &g);
    }

    #[test]
    fn enclosures_contain_reference_values(prec in 64u32..480) {
        let (lo, hi) = reference(LN2);
        let l = ln2(prec);
        prop_assert!(l.contains(&lo) && l.contains(&hi));
        let (lo, hi) = reference(LN_1_SQRT2);
        let x = log_quad(&QuadElem::new(1, 1, 1, 2).unwrap(), prec).unwrap();
        prop_assert!(x.contains(&lo) && x.contains(&hi));
        let (lo, hi) = reference(PHI);
        let p = quad_to_real(&QuadElem::new(1, 1, 2, 5).unwrap(), prec);
        prop_assert!(p.contains(&lo) && p.contains(&hi));
    }

    #[test]
    fn expansion_is_stable_and_well_formed(b in non_square(10_000), prec in 128u32..512) {
        let e = fundamental_unit(b).unwrap();
        let mu = |p: u32| {
            CertifiedReal::from_int(b, p + 8).ln().unwrap().mul_pow2(-1)
                .try_div(&log_quad(&e, p + 8).unwrap()).unwrap().with_precision(p)
        };
        let c1 = expand_cf(&mu(prec), |_, _| false, 10_000).unwrap();
        let c2 = expand_cf(&mu(2 * prec), |_, _| false, 10_000).unwrap();
        prop_assert!(c2.certified_upto >= c1.certified_upto);
        prop_assert_eq!(&c1.terms[..], &c2.terms[..c1.terms.len()]);
        let golden = (1.0 + 5f64.sqrt()) / 2.0;
        for (i, (p, q)) in c2.convergents.iter().enumerate() {
            prop_assert!(p.gcd(q).is_one());
            if i >= 2 {
                let (pp, qp) = &c2.convergents[i - 1];
                let (ppp, qpp) = &c2.convergents[i - 2];
                prop_assert_eq!(p, &(&c2.terms[i] * pp + ppp));
                prop_assert_eq!(q, &(&c2.terms[i] * qp + qpp));
                prop_assert!(q.to_f64().unwrap() >= golden.powi(i as i32 - 1) * (1.0 - 1e-9));
            }
        }
    }
}

/// `f(m) = 2m - 0.39 - K log(6e log(6e) (m + 0.52))`, enclosed at 320 bits.
fn f_of(m: &BigUint, k: &BigRational) -> CertifiedReal {
    let p = 320;
    let r = |n: i64, d: i64| CertifiedReal::from_rational(&BigRational::new(n.into(), d.into()), p);
    let six_e = CertifiedReal::from_int(1, p).exp().mul_int(&6.into());
    let c = &six_e * &six_e.ln().unwrap();
    let mm = CertifiedReal::from_int(BigInt::from(m.clone()), p);
    let log_term = (&c * &(&mm + &r(52, 100))).ln().unwrap();
    &(&mm.mul_int(&2.into()) - &r(39, 100)) - &(&CertifiedReal::from_rational(k, p) * &log_term)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn c_m_is_the_root_bracket(b in non_square(10_000)) {
        let e = fundamental_unit(b).unwrap();
        let cm = compute_c_m(b, &log_quad(&e, 192).unwrap()).unwrap();
        prop_assert!(f_of(&cm.value, &cm.coefficient).certainly_positive());
        prop_assert!(f_of(&(&cm.value + 1u32), &cm.coefficient).certainly_positive());
        if cm.method == CmMethod::Bracketing {
            let below = f_of(&(&cm.value - 1u32), &cm.coefficient);
            prop_assert!(!below.certainly_positive());
        }
    }

    #[test]
    fn kept_and_skipped_candidates_are_sound(b in non_square(3_000)) {
        let r = verify_b(b, &VerifyConfig::default());
        let bb = BigUint::from(b);
        let eps = fundamental_unit(b).unwrap();
        for c in &r.candidates {
            match (c.skipped, &c.x, &c.kept) {
                (Some(SkipReason::NonIntegral), None, None) => {
                    prop_assert!(pell_coordinates(&eps.pow(c.n), b).is_none());
                }
                (Some(SkipReason::TooSmall), Some(x), None) => {
                    prop_assert!(x * x <= &bb + 1u32);
                }
                (Some(SkipReason::NotSquare), Some(x), None) => {
                    prop_assert!(is_perfect_square(&(&bb * x * x + 1u32)).is_none());
                }
                (None, Some(x), Some(k)) => {
                    prop_assert_eq!(&k.z * &k.z, &bb * x * x + 1u32);
                    prop_assert!(x * x > &bb + 1u32);
                    // the same x against itself recovers every a with x² - 1 = a y²
                    let (tuples, partial) = recover_solutions(b, x, x, &k.factorization);
                    prop_assert!(!partial);
                    for s in &tuples {
                        prop_assert_eq!(x * x - &s.a * &s.y * &s.y, BigUint::one());
                        prop_assert_eq!(&s.z * &s.z - &bb * x * x, BigUint::one());
                        prop_assert_eq!(&s.y, &s.y_prime);
                        prop_assert!(is_perfect_square(&s.a).is_none());
                    }
                }
                other => prop_assert!(false, "inconsistent candidate record {:?}", other.0),
            }
        }
    }
}
