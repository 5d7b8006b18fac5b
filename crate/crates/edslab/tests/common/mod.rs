//! Seeded random formulas shared by the integration tests.
#![allow(dead_code)]

use edslab::formula::{Formula, Quant, Term};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;
pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random term over `vars` with literals in [-3, 3]; `times` allows products.
pub fn term(rng: &mut TestRng, vars: &[&str], depth: u32, times: bool) -> Term {
    if depth == 0 || rng.gen_bool(0.35) {
        return if rng.gen_bool(0.7) && !vars.is_empty() {
            Term::var(vars[rng.gen_range(0..vars.len())])
        } else {
            Term::int(rng.gen_range(-3i64..=3))
        };
    }
    let a = term(rng, vars, depth - 1, times);
    let b = term(rng, vars, depth - 1, times);
    if times && rng.gen_bool(0.5) {
        Term::mul(a, b)
    } else {
        Term::add(a, b)
    }
}

/// Random quantifier-free formula; `negations` allows `!=`, `!` and `->`.
pub fn quantifier_free(rng: &mut TestRng, vars: &[&str], depth: u32, times: bool, negations: bool) -> Formula {
    if depth == 0 || rng.gen_bool(0.3) {
        let (a, b) = (term(rng, vars, 2, times), term(rng, vars, 2, times));
        return if negations && rng.gen_bool(0.4) { Formula::Neq(a, b) } else { Formula::Eq(a, b) };
    }
    let mut sub = || quantifier_free(rng, vars, depth - 1, times, negations);
    let (a, b) = (sub(), sub());
    let choice = if negations { rng.gen_range(0..4) } else { rng.gen_range(0..2) };
    match choice {
        0 => Formula::And(vec![a, b]),
        1 => Formula::Or(vec![a, b]),
        2 => Formula::not(a),
        _ => Formula::implies(a, b),
    }
}

/// Random sentence: a quantifier prefix over x, y, z (existential only when
/// `existential`) followed by a quantifier-free body.
pub fn sentence(rng: &mut TestRng, times: bool, existential: bool) -> Formula {
    let vars = ["x", "y", "z"];
    let body = quantifier_free(rng, &vars, 2, times, !existential);
    let mut f = body;
    for v in vars.iter().rev() {
        let q = if existential || rng.gen_bool(0.5) { Quant::Exists } else { Quant::Forall };
        f = Formula::quant(q, v, f);
    }
    f
}
