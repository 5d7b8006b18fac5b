use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::prenex::{alpha_rename, negate, nnf};
use super::{Formula, FormulaError, Term};
use crate::arith::{rational_sqrt, Rat};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Domain {
    Z,
    Q,
}

/// Truth of `f` when every quantifier ranges over a finite box: integers in
/// [-bound, bound] for Z, fractions p/q with |p| <= bound and 1 <= q <= bound
/// for Q. Exact arithmetic; the result equals exhaustive search over the box.
pub fn evaluate_bounded(
    f: &Formula,
    assignment: &BTreeMap<String, Rat>,
    domain: Domain,
    bound: &BigInt,
) -> Result<bool, FormulaError> {
    if bound < &BigInt::one() {
        return Err(FormulaError::BadBound);
    }
    if let Some(v) = f.free_vars().into_iter().find(|v| !assignment.contains_key(v)) {
        return Err(FormulaError::Unassigned(v));
    }
    let prepared = nnf(&alpha_rename(f));
    let mut env: HashMap<String, Rat> = assignment.iter().map(|(k, v)| (k.clone(), v.clone())).collect();
    let ev = Evaluator { domain, bound: bound.clone() };
    ev.eval(&prepared, &mut env)
}

struct Evaluator {
    domain: Domain,
    bound: BigInt,
}

type Env = HashMap<String, Rat>;

fn value(t: &Term, env: &Env) -> Result<Rat, FormulaError> {
    Ok(match t {
        Term::Var(v) => env.get(v).cloned().ok_or_else(|| FormulaError::Unassigned(v.clone()))?,
        Term::Int(k) => Rat::from_integer(k.clone()),
        Term::Add(a, b) => value(a, env)? + value(b, env)?,
        Term::Mul(a, b) => {
            let x = value(a, env)?;
            if x.is_zero() {
                return Ok(x);
            }
            x * value(b, env)?
        }
        Term::Pow(a, e) => num_traits::pow(value(a, env)?, *e as usize),
    })
}

fn divides(a: &Rat, b: &Rat) -> bool {
    if !a.is_integer() || !b.is_integer() {
        return false;
    }
    if a.is_zero() {
        b.is_zero()
    } else {
        b.to_integer().is_multiple_of(&a.to_integer())
    }
}

/// Coefficients in `v` of a term whose other variables are all assigned.
fn univariate(t: &Term, v: &str, env: &Env) -> Option<Vec<Rat>> {
    fn add(a: Vec<Rat>, b: Vec<Rat>) -> Vec<Rat> {
        let (mut long, short) = if a.len() >= b.len() { (a, b) } else { (b, a) };
        for (i, c) in short.into_iter().enumerate() {
            long[i] += c;
        }
        long
    }
    fn mul(a: &[Rat], b: &[Rat]) -> Vec<Rat> {
        let mut out = vec![Rat::zero(); a.len() + b.len() - 1];
        for (i, x) in a.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (j, y) in b.iter().enumerate() {
                out[i + j] += x * y;
            }
        }
        out
    }
    Some(match t {
        Term::Var(x) if x == v => vec![Rat::zero(), Rat::one()],
        Term::Var(x) => vec![env.get(x)?.clone()],
        Term::Int(k) => vec![Rat::from_integer(k.clone())],
        Term::Add(a, b) => add(univariate(a, v, env)?, univariate(b, v, env)?),
        Term::Mul(a, b) => mul(&univariate(a, v, env)?, &univariate(b, v, env)?),
        Term::Pow(a, e) => {
            let base = univariate(a, v, env)?;
            (0..*e).fold(vec![Rat::one()], |acc, _| mul(&acc, &base))
        }
    })
}

enum Solved {
    /// The atom holds for every value of the variable.
    Always,
    /// The atom holds exactly at these values (possibly none).
    Roots(Vec<Rat>),
    /// Degree above two; not solved directly.
    Unsolved,
}

fn solve_atom(l: &Term, r: &Term, v: &str, env: &Env) -> Solved {
    let (Some(pl), Some(pr)) = (univariate(l, v, env), univariate(r, v, env)) else {
        return Solved::Unsolved;
    };
    let mut p: Vec<Rat> = pl;
    p.resize(p.len().max(pr.len()), Rat::zero());
    for (i, c) in pr.into_iter().enumerate() {
        p[i] -= c;
    }
    while p.last().is_some_and(|c| c.is_zero()) {
        p.pop();
    }
    match p.len() {
        0 => Solved::Always,
        1 => Solved::Roots(Vec::new()),
        2 => Solved::Roots(vec![-&p[0] / &p[1]]),
        3 => {
            let (c, b, a) = (&p[0], &p[1], &p[2]);
            let disc = b * b - Rat::from_integer(BigInt::from(4)) * a * c;
            if disc.is_negative() {
                return Solved::Roots(Vec::new());
            }
            match rational_sqrt(&disc) {
                None => Solved::Roots(Vec::new()),
                Some(s) => {
                    let two_a = a * Rat::from_integer(BigInt::from(2));
                    let r1 = (-b + &s) / &two_a;
                    let r2 = (-b - &s) / &two_a;
                    if r1 == r2 {
                        Solved::Roots(vec![r1])
                    } else {
                        Solved::Roots(vec![r1, r2])
                    }
                }
            }
        }
        _ => Solved::Unsolved,
    }
}

/// Splits `P*Q = 0` into a disjunction and a sum of squares `= 0` into a
/// conjunction; both are valid over Z and Q.
fn split_atom(f: &Formula) -> Option<Formula> {
    let Formula::Eq(l, r) = f else { return None };
    let p = if r.is_zero() {
        l
    } else if l.is_zero() {
        r
    } else {
        return None;
    };
    match p {
        Term::Mul(a, b) if !matches!(a.as_ref(), Term::Int(_)) => Some(Formula::Or(vec![
            Formula::Eq(a.as_ref().clone(), Term::int(0)),
            Formula::Eq(b.as_ref().clone(), Term::int(0)),
        ])),
        Term::Add(..) => {
            let mut summands = Vec::new();
            collect_summands(p, &mut summands);
            let bases: Option<Vec<Formula>> = summands
                .iter()
                .map(|s| match s {
                    Term::Mul(a, b) if a == b => Some(Formula::Eq(a.as_ref().clone(), Term::int(0))),
                    Term::Pow(a, e) if *e > 0 && e % 2 == 0 => Some(Formula::Eq(a.as_ref().clone(), Term::int(0))),
                    _ => None,
                })
                .collect();
            bases.filter(|b| b.len() > 1).map(Formula::And)
        }
        _ => None,
    }
}

fn collect_summands<'a>(t: &'a Term, out: &mut Vec<&'a Term>) {
    match t {
        Term::Add(a, b) => {
            collect_summands(a, out);
            collect_summands(b, out);
        }
        other => out.push(other),
    }
}

/// Conjunct list with nested conjunctions flattened and atoms split.
fn flatten(goals: Vec<Formula>) -> Vec<Formula> {
    let mut out = Vec::with_capacity(goals.len());
    let mut stack: Vec<Formula> = goals.into_iter().rev().collect();
    while let Some(g) = stack.pop() {
        match g {
            Formula::And(cs) => stack.extend(cs.into_iter().rev()),
            other => match split_atom(&other) {
                Some(Formula::And(cs)) => stack.extend(cs.into_iter().rev()),
                Some(split) => out.push(split),
                None => out.push(other),
            },
        }
    }
    out
}

impl Evaluator {
    fn eval(&self, f: &Formula, env: &mut Env) -> Result<bool, FormulaError> {
        match f {
            Formula::Eq(a, b) => Ok(value(a, env)? == value(b, env)?),
            Formula::Neq(a, b) => Ok(value(a, env)? != value(b, env)?),
            Formula::Div(a, b) => Ok(divides(&value(a, env)?, &value(b, env)?)),
            Formula::NotDiv(a, b) => Ok(!divides(&value(a, env)?, &value(b, env)?)),
            Formula::And(cs) => {
                for c in cs {
                    if !self.eval(c, env)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            Formula::Or(cs) => {
                for c in cs {
                    if self.eval(c, env)? {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
            Formula::Exists(..) | Formula::Forall(..) => {
                let (q, _, _) = f.as_quantifier().unwrap();
                let mut vars = BTreeSet::new();
                let mut body = f;
                while let Some((q2, v, b)) = body.as_quantifier() {
                    if q2 != q {
                        break;
                    }
                    vars.insert(v.to_string());
                    body = b;
                }
                if q == super::Quant::Exists {
                    self.exists(&vars, vec![body.clone()], env)
                } else {
                    Ok(!self.exists(&vars, vec![negate(body)], env)?)
                }
            }
            Formula::Not(a) => Ok(!self.eval(a, env)?),
            Formula::Implies(a, b) => Ok(!self.eval(a, env)? || self.eval(b, env)?),
        }
    }

    fn in_box(&self, x: &Rat) -> bool {
        match self.domain {
            Domain::Z => x.is_integer() && x.numer().abs() <= self.bound,
            Domain::Q => x.numer().abs() <= self.bound && x.denom() <= &self.bound,
        }
    }

    /// Box elements in order of increasing height, 0, 1, -1, 2, -2, ...
    fn box_values(&self) -> Vec<Rat> {
        let b = &self.bound;
        let mut out = vec![Rat::zero()];
        let mut h = BigInt::one();
        while &h <= b {
            match self.domain {
                Domain::Z => {
                    out.push(Rat::from_integer(h.clone()));
                    out.push(Rat::from_integer(-h.clone()));
                }
                Domain::Q => {
                    let mut q = BigInt::one();
                    while q <= h {
                        if h.gcd(&q).is_one() {
                            out.push(Rat::new(h.clone(), q.clone()));
                            out.push(Rat::new(-h.clone(), q.clone()));
                            if q != h {
                                out.push(Rat::new(q.clone(), h.clone()));
                                out.push(Rat::new(-q.clone(), h.clone()));
                            }
                        }
                        q += 1;
                    }
                }
            }
            h += 1;
        }
        out
    }

    fn open_vars(g: &Formula, vars: &BTreeSet<String>) -> BTreeSet<String> {
        g.free_vars().intersection(vars).cloned().collect()
    }

    /// Whether some assignment of `vars` from the box satisfies all goals.
    fn exists(&self, vars: &BTreeSet<String>, goals: Vec<Formula>, env: &mut Env) -> Result<bool, FormulaError> {
        let goals = flatten(goals);
        let mut open: Vec<(Formula, BTreeSet<String>)> = Vec::new();
        for g in goals {
            let ov = Self::open_vars(&g, vars);
            if ov.is_empty() {
                if !self.eval(&g, env)? {
                    return Ok(false);
                }
            } else {
                open.push((g, ov));
            }
        }
        if open.is_empty() {
            return Ok(true);
        }
        let live: BTreeSet<String> = open.iter().flat_map(|(_, ov)| ov.iter().cloned()).collect();

        let components = components(&open);
        if components.len() > 1 {
            for comp in components {
                let cvars: BTreeSet<String> = comp.iter().flat_map(|&i| open[i].1.iter().cloned()).collect();
                let cgoals = comp.iter().map(|&i| open[i].0.clone()).collect();
                if !self.exists(&cvars, cgoals, env)? {
                    return Ok(false);
                }
            }
            return Ok(true);
        }

        for (i, (g, ov)) in open.iter().enumerate() {
            let Formula::Eq(l, r) = g else { continue };
            if ov.len() != 1 {
                continue;
            }
            let v = ov.iter().next().unwrap();
            let roots = match solve_atom(l, r, v, env) {
                Solved::Unsolved => continue,
                Solved::Always => None,
                Solved::Roots(rs) => Some(rs),
            };
            let rest: Vec<Formula> = open.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, (g, _))| g.clone()).collect();
            let Some(roots) = roots else {
                return self.exists(&live, rest, env);
            };
            let mut remaining = live.clone();
            remaining.remove(v);
            for root in roots.into_iter().filter(|x| self.in_box(x)) {
                env.insert(v.clone(), root);
                let ok = self.exists(&remaining, rest.clone(), env)?;
                env.remove(v);
                if ok {
                    return Ok(true);
                }
            }
            return Ok(false);
        }

        if let Some(i) = open.iter().position(|(g, _)| matches!(g, Formula::Or(_))) {
            let Formula::Or(branches) = &open[i].0 else { unreachable!() };
            let rest: Vec<Formula> = open.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, (g, _))| g.clone()).collect();
            for b in branches {
                let mut goals = rest.clone();
                goals.push(b.clone());
                if self.exists(&live, goals, env)? {
                    return Ok(true);
                }
            }
            return Ok(false);
        }

        let (_, ov) = open.iter().min_by_key(|(_, ov)| ov.len()).unwrap();
        let v = ov.iter().next().unwrap().clone();
        let mut remaining = live.clone();
        remaining.remove(&v);
        let goals: Vec<Formula> = open.into_iter().map(|(g, _)| g).collect();
        for x in self.box_values() {
            env.insert(v.clone(), x);
            let ok = self.exists(&remaining, goals.clone(), env)?;
            env.remove(&v);
            if ok {
                return Ok(true);
            }
        }
        Ok(false)
    }
}

/// Groups goal indices that are linked through shared open variables.
fn components(open: &[(Formula, BTreeSet<String>)]) -> Vec<Vec<usize>> {
    let n = open.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        p[i] = r;
        r
    }
    for i in 0..n {
        for j in i + 1..n {
            if !open[i].1.is_disjoint(&open[j].1) {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a] = b;
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    groups.into_values().collect()
}

#[cfg(test)]
mod tests {
    use super::super::{parse_formula, Signature};
    use super::*;

    fn assign(pairs: &[(&str, i64)]) -> BTreeMap<String, Rat> {
        pairs.iter().map(|(k, v)| (k.to_string(), Rat::from_integer(BigInt::from(*v)))).collect()
    }

    fn holds(s: &str, sig: Signature, pairs: &[(&str, i64)], domain: Domain, bound: i64) -> bool {
        let f = parse_formula(s, sig).unwrap();
        evaluate_bounded(&f, &assign(pairs), domain, &BigInt::from(bound)).unwrap()
    }

    #[test]
    fn quantifiers_over_boxes() {
        let r = Signature::Ring;
        assert!(holds("exists x. x*x = 49", r, &[], Domain::Z, 7));
        assert!(!holds("exists x. x*x = 49", r, &[], Domain::Z, 6));
        assert!(holds("exists x. 3*x = 1", r, &[], Domain::Q, 3));
        assert!(!holds("exists x. 3*x = 1", r, &[], Domain::Z, 100));
        assert!(holds("forall x. exists y. x + y = 0", r, &[], Domain::Z, 5));
        assert!(!holds("forall x. exists y. x + y = 1", r, &[], Domain::Z, 5));
        assert!(holds("exists x y. x*x*x + y*y*y = 9 & x != 0", r, &[], Domain::Z, 3));
        assert!(holds("exists x. x*x*x = a", r, &[("a", -8)], Domain::Z, 2));
    }

    #[test]
    fn quadratic_roots_respect_the_box() {
        let r = Signature::Ring;
        assert!(holds("exists x. 4*x*x = 1", r, &[], Domain::Q, 2));
        assert!(!holds("exists x. 4*x*x = 1", r, &[], Domain::Q, 1));
        assert!(!holds("exists x. x*x = 2", r, &[], Domain::Q, 50));
    }

    #[test]
    fn divisibility_semantics() {
        let d = Signature::Divisibility;
        assert!(holds("div(0, 0)", d, &[], Domain::Z, 1));
        assert!(!holds("div(0, 3)", d, &[], Domain::Z, 1));
        assert!(holds("div(-3, 6) & !div(4, 6)", d, &[], Domain::Z, 1));
    }

    #[test]
    fn unassigned_variables_are_errors() {
        let f = parse_formula("x = y", Signature::Ring).unwrap();
        let e = evaluate_bounded(&f, &assign(&[("x", 1)]), Domain::Z, &BigInt::from(3)).unwrap_err();
        assert_eq!(e, FormulaError::Unassigned("y".into()));
        assert_eq!(evaluate_bounded(&f, &assign(&[]), Domain::Z, &BigInt::zero()), Err(FormulaError::BadBound));
    }

    #[test]
    fn shadowed_names() {
        let r = Signature::Ring;
        assert!(holds("x = 2 & (exists x. x = 3) & x = 2", r, &[("x", 2)], Domain::Z, 5));
    }
}
