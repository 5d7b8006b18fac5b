use edslab::arith::primality::is_prime;
use edslab::curve::{self, Curve, Point};
use edslab::eds::EdsSequence;
use edslab::periodicity::{self, ResidueClassSet};
use num_bigint::BigInt;
use num_rational::Ratio;
use proptest::prelude::*;

fn curves() -> [(Curve, Point); 2] {
    [
        (Curve::from_i64(12, 11, 0).unwrap(), Point::parse("1/4,15/8").unwrap()),
        (Curve::from_i64(7, 2, 0).unwrap(), Point::from_ints(-2, 4)),
    ]
}

fn good_primes(e: &Curve, p: &Point, below: u64) -> Vec<u64> {
    (5..below)
        .filter(|q| is_prime(&BigInt::from(*q)))
        .filter(|q| {
            let rd = curve::reduction_data(e, *q, p).unwrap();
            !rd.singular_curve && !rd.point_singular
        })
        .collect()
}

#[test]
fn rank_of_apparition_is_the_reduced_order() {
    for (e, p) in curves() {
        let seq = EdsSequence::compute(&e, &p, 120).unwrap();
        for q in good_primes(&e, &p, 100) {
            let w = periodicity::ward_data_from(&seq, q).unwrap();
            let order = curve::reduction_data(&e, q, &p).unwrap().point_order;
            assert_eq!(w.rho.map(|r| r as u64), order, "p={q}");
        }
    }
}

#[test]
fn zeros_sit_at_multiples_of_the_rank() {
    for (e, p) in curves() {
        let seq = EdsSequence::compute(&e, &p, 60).unwrap();
        for q in good_primes(&e, &p, 50) {
            let res = periodicity::residues_of(&seq, q);
            let rho = res.iter().position(|r| *r == 0).map(|i| i + 1);
            for n in 1..=60 {
                let divisible = res[n - 1] == 0;
                assert_eq!(divisible, rho.is_some_and(|r| n % r == 0), "p={q} n={n}");
            }
        }
    }
}

#[test]
fn periods_are_stable_and_nested() {
    let (e, p) = &curves()[1];
    let short = periodicity::ward_data(e, p, 5, 200).unwrap();
    let long = periodicity::ward_data(e, p, 5, 400).unwrap();
    assert_eq!(short.symbol_period, long.symbol_period);
    assert_eq!(short.pi_observed, long.pi_observed);
    assert_eq!(long.pi_observed.unwrap() % long.symbol_period.unwrap(), 0);
}

#[test]
fn symbols_ignore_the_sign_convention() {
    let (e, p) = &curves()[1];
    let seq = EdsSequence::compute(e, p, 200).unwrap();
    for q in [5u64, 13, 17, 29, 37, 41, 53] {
        let res = periodicity::residues_of(&seq, q);
        let flipped: Vec<u64> = res.iter().map(|r| (q - r) % q).collect();
        assert_eq!(periodicity::symbols(&res, q), periodicity::symbols(&flipped, q), "p={q}");
    }
}

fn class_set() -> impl Strategy<Value = ResidueClassSet> {
    (1u64..40, prop::collection::vec(0u64..40, 0..6)).prop_map(|(m, rs)| {
        let units = rs.into_iter().map(|r| r % m).filter(|r| num_integer::Integer::gcd(r, &m) == 1);
        ResidueClassSet::new(m, units).unwrap()
    })
}

proptest! {
    #[test]
    fn union_density_is_a_monotone_probability(sets in prop::collection::vec(class_set(), 1..4), extra in class_set()) {
        let d = periodicity::density_union(&sets).unwrap();
        prop_assert!(d >= Ratio::new(0, 1) && d <= Ratio::new(1, 1));
        let mut more = sets.clone();
        more.push(extra);
        prop_assert!(periodicity::density_union(&more).unwrap() >= d);
    }
}
