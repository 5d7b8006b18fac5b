use std::collections::BTreeSet;

use edslab::arith::{FactorCache, Rat, DEFAULT_SEED};
use edslab::curve::{self, descent_curve, descent_map, Curve, Point};
use edslab::eds::{self, d_r, EdsSequence, Which};
use edslab::PrimeSet;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use proptest::prelude::*;

fn exa() -> (Curve, Point) {
    (Curve::from_i64(12, 11, 0).unwrap(), Point::parse("1/4,15/8").unwrap())
}

fn dense_good() -> (Curve, Point) {
    let e = Curve::from_i64(7, 2, 0).unwrap();
    let (_, p) = curve::least_good_multiple(&e, &Point::from_ints(-2, 4)).unwrap();
    (e, p)
}

#[test]
fn terms_are_coprime_up_to_sixty() {
    for (e, p) in [exa(), dense_good()] {
        let seq = EdsSequence::compute(&e, &p, 60).unwrap();
        for t in seq.terms() {
            assert!(t.a.gcd(&t.b).is_one() && t.c.gcd(&t.b).is_one(), "n={}", t.n);
            if let (Some(a), Some(c)) = (&t.big_a, &t.big_c) {
                assert!(a.gcd(&t.b).is_one() && c.gcd(&t.b).is_one(), "n={}", t.n);
                assert!(!a.is_negative());
                assert_eq!(a * a, t.a);
                assert_eq!(a * c, t.c);
            }
        }
    }
}

#[test]
fn primitive_divisors_of_c_divide_only_odd_multiples() {
    let (e, p) = exa();
    let seq = EdsSequence::compute(&e, &p, 24).unwrap();
    let cache = FactorCache::new(DEFAULT_SEED);
    let expected = eds::hypotheses(&e, &p).unwrap().expected_primes;
    for m in 1..=8 {
        let prim = eds::primitive_divisors(&seq, m, Which::C, &PrimeSet::AllPrimes, false, &cache).unwrap();
        for v in prim.iter().filter(|v| !expected.contains(v)) {
            for n in 1..=24 {
                if (seq.value(n, Which::C).unwrap() % v).is_zero() {
                    assert!(n % m == 0 && (n / m) % 2 == 1, "{v} | C_{n} but primitive for C_{m}");
                }
            }
        }
    }
}

#[test]
fn descent_turns_c_into_a() {
    let (e, p) = exa();
    let e2 = descent_curve(&e).unwrap();
    let q = descent_map(&e, &p).unwrap();
    let seq = EdsSequence::compute(&e, &p, 12).unwrap();
    let image = EdsSequence::compute(&e2, &q, 12).unwrap();
    let bad: BigInt = BigInt::from(2) * (&e.a * &e.a - &e.b * 4);
    let strip = |mut x: BigInt| {
        x = x.abs();
        loop {
            let g = x.gcd(&bad);
            if g.is_one() {
                return x;
            }
            x /= g;
        }
    };
    for n in 1..=12 {
        let c = seq.value(n, Which::C).unwrap();
        let a = image.value(n, Which::A).unwrap();
        assert_eq!(strip(c), strip(a), "n={n}");
    }
}

#[test]
fn scans_agree_with_primitive_divisors() {
    let (e, p) = exa();
    let seq = EdsSequence::compute(&e, &p, 6).unwrap();
    let cache = FactorCache::new(DEFAULT_SEED);
    let r = PrimeSet::inert_in([BigInt::from(5)]).unwrap();
    let opts = eds::ScanOptions { which: Which::B, odd_order: true, weak: false, n_max: 6, digit_cap: 100 };
    let rep = eds::primitivity_scan(&seq, &r, opts, &cache).unwrap();
    for row in &rep.rows {
        let direct = eds::primitive_divisors(&seq, row.n, Which::B, &r, true, &cache).unwrap();
        assert_eq!(row.odd_order_primitive, direct);
    }
    // 2 is inert in Q(sqrt 5), so B_1 = 2 has a primitive divisor from R
    assert!(!rep.failing.contains(&1));
    for n in [3, 5] {
        assert!(rep.failing.contains(&n));
    }
}

fn rational() -> impl Strategy<Value = Rat> {
    (prop::collection::vec(-3i32..=3, 6), any::<bool>()).prop_map(|(exps, neg)| {
        let mut num = BigInt::one();
        let mut den = BigInt::one();
        for (p, k) in [2, 3, 5, 7, 11, 13].iter().zip(exps) {
            let pk = num_traits::pow(BigInt::from(*p), k.unsigned_abs() as usize);
            if k > 0 {
                num *= pk;
            } else {
                den *= pk;
            }
        }
        Rat::new(if neg { -num } else { num }, den)
    })
}

proptest! {
    #[test]
    fn predicate_is_monotone_in_the_prime_set(x in rational(), y in rational()) {
        let small = PrimeSet::inert_in([BigInt::from(5)]).unwrap();
        let mid = PrimeSet::inert_in([BigInt::from(5), BigInt::from(13)]).unwrap();
        let all = PrimeSet::AllPrimes;
        if d_r(&x, &y, &all).unwrap() {
            prop_assert!(d_r(&x, &y, &mid).unwrap());
        }
        if d_r(&x, &y, &mid).unwrap() {
            prop_assert!(d_r(&x, &y, &small).unwrap());
        }
        prop_assert!(d_r(&Rat::one(), &y, &all).unwrap());
    }
}

#[test]
fn weak_indices_exclude_two_odd_primes() {
    let w: BTreeSet<usize> = eds::weak_indices(40).into_iter().collect();
    for n in [15, 21, 30, 33, 35, 39] {
        assert!(!w.contains(&n));
    }
    for n in [1, 2, 9, 16, 24, 25, 27, 32, 37] {
        assert!(w.contains(&n));
    }
}
