use std::collections::BTreeMap;

use super::{parse_formula, Formula, FormulaError, Signature, Term};

pub const BUILTIN_NAMES: [&str; 6] = ["robinson_phi", "robinson_R", "square", "multiply", "gcd", "notdiv"];

fn ring(text: &str) -> Formula {
    parse_formula(text, Signature::Ring).expect("built-in formula parses")
}

fn divisibility(text: &str) -> Formula {
    parse_formula(text, Signature::Divisibility).expect("built-in formula parses")
}

fn instantiate(f: &Formula, pairs: &[(&str, Term)]) -> Formula {
    let map: BTreeMap<String, Term> = pairs.iter().map(|(k, t)| (k.to_string(), t.clone())).collect();
    f.substitute(&map)
}

/// phi(A, B, K): 2 + ABK^2 + BZ^2 - X^2 - AY^2 = 0 has a rational solution.
/// Free variables A, B, K.
fn robinson_phi() -> Formula {
    ring("exists X Y Z. 2 + A*B*K^2 + B*Z^2 - X^2 - A*Y^2 = 0")
}

/// The induction formula over phi defining the integers in Q; free N.
fn robinson_r() -> Formula {
    let phi = robinson_phi();
    let at = |k: Term| instantiate(&phi, &[("K", k)]);
    let base = at(Term::int(0));
    let step = Formula::implies(at(Term::var("M")), at(Term::add(Term::var("M"), Term::int(1))));
    let hyp = Formula::And(vec![base, Formula::quant(super::Quant::Forall, "M", step)]);
    let body = Formula::implies(hyp, at(Term::var("N")));
    Formula::quantify(super::Quant::Forall, &["A", "B"], body)
}

/// y = x^2 as a universal statement in (Z, +, |); free x, y.
fn square() -> Formula {
    divisibility(
        "forall t. div(x, y) & div(x + 1, y + x) & div(x - 1, y - x) \
         & ((div(x, t) & div(x + 1, t + x) & div(x - 1, t - x)) -> (div(y + x, t + x) & div(y - x, t - x)))",
    )
}

/// x = m*n via 2x = (m+n)^2 - m^2 - n^2; free m, n, x.
fn multiply() -> Formula {
    let sq = square();
    let inst = |a: &str, b: &str| instantiate(&sq, &[("x", Term::var(a)), ("y", Term::var(b))]);
    let body = Formula::And(vec![
        ring("x + x + u + v = w"),
        inst("m", "u"),
        inst("n", "v"),
        inst("s", "w"),
        ring("s = m + n"),
    ]);
    Formula::quantify(super::Quant::Exists, &["u", "v", "w", "s"], body)
}

/// g generates the ideal (a, b): g | a, g | b and g = x + y with a | x, b | y.
fn gcd() -> Formula {
    divisibility("div(g, a) & div(g, b) & (exists x y. div(a, x) & div(b, y) & g = x + y)")
}

/// a does not divide b, written positively with the gcd formula; free a, b.
fn notdiv() -> Formula {
    let body = Formula::And(vec![gcd(), ring("g + h = 0"), ring("a != g"), ring("a != h")]);
    Formula::quantify(super::Quant::Exists, &["g", "h"], body)
}

pub fn builtin_formula(name: &str) -> Result<Formula, FormulaError> {
    Ok(match name {
        "robinson_phi" => robinson_phi(),
        "robinson_R" => robinson_r(),
        "square" => square(),
        "multiply" => multiply(),
        "gcd" => gcd(),
        "notdiv" => notdiv(),
        other => return Err(FormulaError::UnknownBuiltin(other.to_string())),
    })
}

#[cfg(test)]
mod tests {
    use num_bigint::BigInt;

    use super::super::{evaluate_bounded, shape_and_classify, to_positive_prenex, Domain, Ring};
    use super::*;
    use crate::arith::Rat;

    fn at(pairs: &[(&str, i64)]) -> BTreeMap<String, Rat> {
        pairs.iter().map(|(k, v)| (k.to_string(), Rat::from_integer(BigInt::from(*v)))).collect()
    }

    fn holds(name: &str, pairs: &[(&str, i64)], bound: i64) -> bool {
        let f = builtin_formula(name).unwrap();
        evaluate_bounded(&f, &at(pairs), Domain::Z, &BigInt::from(bound)).unwrap()
    }

    #[test]
    fn robinson_shape() {
        let p = to_positive_prenex(&builtin_formula("robinson_R").unwrap(), Ring::Q).unwrap();
        assert_eq!(shape_and_classify(&p).to_string(), "Pi_4^+ shape=((5,4),(3,1)) t=8 c=3");
    }

    #[test]
    fn free_variables() {
        let fv = |n: &str| builtin_formula(n).unwrap().free_vars().into_iter().collect::<Vec<_>>();
        assert_eq!(fv("robinson_phi"), ["A", "B", "K"]);
        assert_eq!(fv("robinson_R"), ["N"]);
        assert_eq!(fv("square"), ["x", "y"]);
        assert_eq!(fv("multiply"), ["m", "n", "x"]);
        assert_eq!(fv("gcd"), ["a", "b", "g"]);
        assert_eq!(fv("notdiv"), ["a", "b"]);
        assert!(builtin_formula("cube").is_err());
    }

    #[test]
    fn squaring_and_gcd() {
        assert!(holds("square", &[("x", 3), ("y", 9)], 100));
        assert!(holds("square", &[("x", 4), ("y", 16)], 300));
        assert!(!holds("square", &[("x", 3), ("y", 6)], 300));
        assert!(holds("gcd", &[("g", 3), ("a", 6), ("b", 9)], 50));
        assert!(!holds("gcd", &[("g", 1), ("a", 6), ("b", 9)], 50));
        assert!(!holds("notdiv", &[("a", 2), ("b", 4)], 100));
        assert!(holds("notdiv", &[("a", 4), ("b", 6)], 20));
    }

    #[test]
    fn multiplication() {
        assert!(holds("multiply", &[("m", 2), ("n", 3), ("x", 6)], 30));
        assert!(!holds("multiply", &[("m", 2), ("n", 3), ("x", 5)], 30));
    }
}
