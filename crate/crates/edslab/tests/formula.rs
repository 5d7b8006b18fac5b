mod common;

use std::collections::BTreeMap;

use edslab::arith::Rat;
use edslab::formula::{
    builtin_formula, coalesce_quantifiers, evaluate_bounded, parse_formula, shape_and_classify, to_positive_prenex,
    Domain, Formula, Ring, Signature,
};
use num_bigint::BigInt;
use proptest::prelude::*;
use rand::Rng;
use rayon::prelude::*;

fn env(pairs: &[(&str, i64)]) -> BTreeMap<String, Rat> {
    pairs.iter().map(|(k, v)| (k.to_string(), Rat::from_integer(BigInt::from(*v)))).collect()
}

#[test]
fn printing_round_trips_through_the_parser() {
    let mut rng = common::rng(21);
    for _ in 0..300 {
        let existential = rng.gen_bool(0.3);
        let f = common::sentence(&mut rng, true, existential);
        let text = f.to_string();
        let g = parse_formula(&text, Signature::Ring).unwrap();
        assert_eq!(g.to_string(), text);
    }
}

#[test]
fn integer_normalization_keeps_truth_values() {
    let mut rng = common::rng(22);
    let vars = ["x", "y"];
    for _ in 0..40 {
        let f = common::quantifier_free(&mut rng, &vars, 0, false, true);
        let e = env(&[("x", rng.gen_range(-2..=2)), ("y", rng.gen_range(-2..=2))]);
        let normal = to_positive_prenex(&f, Ring::Z).unwrap().to_formula();
        let before = evaluate_bounded(&f, &e, Domain::Z, &BigInt::from(1)).unwrap();
        // differences stay within 24, so every square witness lies in [-4, 4]
        let after = evaluate_bounded(&normal, &e, Domain::Z, &BigInt::from(4)).unwrap();
        assert_eq!(before, after, "{f}");
    }
}

#[test]
fn coalescing_keeps_truth_and_never_raises_t() {
    let mut rng = common::rng(23);
    let bound = BigInt::from(2);
    for _ in 0..60 {
        let f = common::sentence(&mut rng, false, false);
        let g = coalesce_quantifiers(&f);
        let t_f = shape_and_classify(&to_positive_prenex(&f, Ring::Q).unwrap()).t;
        let t_g = shape_and_classify(&to_positive_prenex(&g, Ring::Q).unwrap()).t;
        assert!(t_g <= t_f, "{f}");
        assert_eq!(
            evaluate_bounded(&f, &BTreeMap::new(), Domain::Z, &bound).unwrap(),
            evaluate_bounded(&g, &BTreeMap::new(), Domain::Z, &bound).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn alternation_count_matches_the_level() {
    let mut rng = common::rng(24);
    for _ in 0..200 {
        let existential = rng.gen_bool(0.2);
        let f = common::sentence(&mut rng, true, existential);
        let s = shape_and_classify(&to_positive_prenex(&f, Ring::Q).unwrap());
        assert_eq!(s.c, s.class.level.saturating_sub(1), "{f}: {s}");
    }
    let s = shape_and_classify(&to_positive_prenex(&builtin_formula("robinson_R").unwrap(), Ring::Q).unwrap());
    assert_eq!((s.c, s.class.level), (3, 4));
}

#[test]
fn squares_are_defined_by_divisibility() {
    let square = builtin_formula("square").unwrap();
    let bound = BigInt::from(1000);
    let failures: Vec<(i64, i64)> = (-15i64..=15)
        .into_par_iter()
        .flat_map_iter(|x| (-225i64..=225).map(move |y| (x, y)))
        .filter(|&(x, y)| {
            let holds = evaluate_bounded(&square, &env(&[("x", x), ("y", y)]), Domain::Z, &bound).unwrap();
            holds != (y == x * x)
        })
        .collect();
    assert!(failures.is_empty(), "{failures:?}");
}

proptest! {
    #[test]
    fn rational_normalization_keeps_truth_values(seed in any::<u64>(), x in -20i64..=20, y in -20i64..=20) {
        let mut rng = common::rng(seed);
        let f: Formula = common::quantifier_free(&mut rng, &["x", "y"], 2, true, true);
        let e = env(&[("x", x), ("y", y)]);
        let normal = to_positive_prenex(&f, Ring::Q).unwrap().to_formula();
        let huge = num_traits::pow(BigInt::from(10), 200);
        prop_assert_eq!(
            evaluate_bounded(&f, &e, Domain::Q, &BigInt::from(1)).unwrap(),
            evaluate_bounded(&normal, &e, Domain::Q, &huge).unwrap()
        );
    }
}
