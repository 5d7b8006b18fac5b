//! First-order formulas over the ring language (Z or Q with +, *, =) and the
//! divisibility language (Z with +, |, !=): parsing, printing, positive
//! prenex normalization, complexity measures and bounded evaluation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use thiserror::Error;

mod builtins;
mod eval;
mod parse;
mod prenex;
mod print;
mod shape;

pub use builtins::{builtin_formula, BUILTIN_NAMES};
pub use eval::{evaluate_bounded, Domain};
pub use parse::parse_formula;
pub use prenex::{coalesce_quantifiers, to_positive_prenex, Block, PrenexFormula, Ring, MAX_EXPONENT};
pub use shape::{shape_and_classify, Class, PrenexShape};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum FormulaError {
    #[error("syntax error at line {line}, column {col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("divisibility atom at line {line}, column {col} is not allowed in the ring signature")]
    DivInRing { line: usize, col: usize },
    #[error("ring normalization is undefined for divisibility atoms")]
    DivisibilityAtom,
    #[error("exponent {0} exceeds the cap of {MAX_EXPONENT}")]
    ExponentTooLarge(u32),
    #[error("unknown built-in formula '{0}'")]
    UnknownBuiltin(String),
    #[error("free variable '{0}' has no assigned value")]
    Unassigned(String),
    #[error("bound must be at least 1")]
    BadBound,
    #[error("cannot parse hierarchy class '{0}'")]
    BadClass(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Signature {
    Ring,
    Divisibility,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Quant {
    Forall,
    Exists,
}

impl Quant {
    pub fn dual(self) -> Quant {
        match self {
            Quant::Forall => Quant::Exists,
            Quant::Exists => Quant::Forall,
        }
    }

    pub fn keyword(self) -> &'static str {
        match self {
            Quant::Forall => "forall",
            Quant::Exists => "exists",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Var(String),
    Int(BigInt),
    Add(Box<Term>, Box<Term>),
    Mul(Box<Term>, Box<Term>),
    Pow(Box<Term>, u32),
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(name.to_string())
    }

    pub fn int<T: Into<BigInt>>(v: T) -> Term {
        Term::Int(v.into())
    }

    pub fn add(a: Term, b: Term) -> Term {
        Term::Add(Box::new(a), Box::new(b))
    }

    pub fn mul(a: Term, b: Term) -> Term {
        Term::Mul(Box::new(a), Box::new(b))
    }

    pub fn pow(a: Term, e: u32) -> Term {
        Term::Pow(Box::new(a), e)
    }

    /// Negation as the parser builds it: literals absorb the sign, anything
    /// else becomes a product with -1.
    pub fn neg(a: Term) -> Term {
        match a {
            Term::Int(v) => Term::Int(-v),
            other => Term::mul(Term::int(-1), other),
        }
    }

    pub fn sub(a: Term, b: Term) -> Term {
        Term::add(a, Term::neg(b))
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Term::Int(v) if v.is_zero())
    }

    pub fn sum<I: IntoIterator<Item = Term>>(terms: I) -> Term {
        terms.into_iter().reduce(Term::add).unwrap_or_else(|| Term::int(0))
    }

    pub fn product<I: IntoIterator<Item = Term>>(terms: I) -> Term {
        terms.into_iter().reduce(Term::mul).unwrap_or_else(|| Term::Int(BigInt::one()))
    }

    pub fn square(a: Term) -> Term {
        Term::mul(a.clone(), a)
    }

    pub fn vars_into(&self, out: &mut BTreeSet<String>) {
        match self {
            Term::Var(v) => {
                out.insert(v.clone());
            }
            Term::Int(_) => {}
            Term::Add(a, b) | Term::Mul(a, b) => {
                a.vars_into(out);
                b.vars_into(out);
            }
            Term::Pow(a, _) => a.vars_into(out),
        }
    }

    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.vars_into(&mut out);
        out
    }

    pub fn mentions(&self, name: &str) -> bool {
        match self {
            Term::Var(v) => v == name,
            Term::Int(_) => false,
            Term::Add(a, b) | Term::Mul(a, b) => a.mentions(name) || b.mentions(name),
            Term::Pow(a, _) => a.mentions(name),
        }
    }

    pub fn substitute(&self, map: &BTreeMap<String, Term>) -> Term {
        match self {
            Term::Var(v) => map.get(v).cloned().unwrap_or_else(|| self.clone()),
            Term::Int(_) => self.clone(),
            Term::Add(a, b) => Term::add(a.substitute(map), b.substitute(map)),
            Term::Mul(a, b) => Term::mul(a.substitute(map), b.substitute(map)),
            Term::Pow(a, e) => Term::pow(a.substitute(map), *e),
        }
    }

    /// Rewrites x^e as an e-fold product.
    pub fn expand_powers(&self) -> Result<Term, FormulaError> {
        Ok(match self {
            Term::Var(_) | Term::Int(_) => self.clone(),
            Term::Add(a, b) => Term::add(a.expand_powers()?, b.expand_powers()?),
            Term::Mul(a, b) => Term::mul(a.expand_powers()?, b.expand_powers()?),
            Term::Pow(a, e) => {
                if *e > MAX_EXPONENT {
                    return Err(FormulaError::ExponentTooLarge(*e));
                }
                let base = a.expand_powers()?;
                Term::product(std::iter::repeat(base).take(*e as usize))
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    Eq(Term, Term),
    Neq(Term, Term),
    Div(Term, Term),
    NotDiv(Term, Term),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Not(Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Forall(String, Box<Formula>),
    Exists(String, Box<Formula>),
}

impl Formula {
    pub fn eq(a: Term, b: Term) -> Formula {
        Formula::Eq(a, b)
    }

    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn quant(q: Quant, var: &str, body: Formula) -> Formula {
        match q {
            Quant::Forall => Formula::Forall(var.to_string(), Box::new(body)),
            Quant::Exists => Formula::Exists(var.to_string(), Box::new(body)),
        }
    }

    /// Wraps `body` in one quantifier per variable, first variable outermost.
    pub fn quantify<S: AsRef<str>>(q: Quant, vars: &[S], body: Formula) -> Formula {
        vars.iter().rev().fold(body, |acc, v| Formula::quant(q, v.as_ref(), acc))
    }

    /// Conjunction that avoids one-element wrappers.
    pub fn and(mut parts: Vec<Formula>) -> Formula {
        if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            Formula::And(parts)
        }
    }

    pub fn or(mut parts: Vec<Formula>) -> Formula {
        if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            Formula::Or(parts)
        }
    }

    pub fn as_quantifier(&self) -> Option<(Quant, &str, &Formula)> {
        match self {
            Formula::Forall(v, b) => Some((Quant::Forall, v, b)),
            Formula::Exists(v, b) => Some((Quant::Exists, v, b)),
            _ => None,
        }
    }

    pub fn is_atom(&self) -> bool {
        matches!(self, Formula::Eq(..) | Formula::Neq(..) | Formula::Div(..) | Formula::NotDiv(..))
    }

    pub fn atom_terms(&self) -> Option<(&Term, &Term)> {
        match self {
            Formula::Eq(a, b) | Formula::Neq(a, b) | Formula::Div(a, b) | Formula::NotDiv(a, b) => Some((a, b)),
            _ => None,
        }
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.free_vars_into(&mut Vec::new(), &mut out);
        out
    }

    fn free_vars_into(&self, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        if let Some((l, r)) = self.atom_terms() {
            for v in l.vars().into_iter().chain(r.vars()) {
                if !bound.contains(&v) {
                    out.insert(v);
                }
            }
            return;
        }
        match self {
            Formula::And(cs) | Formula::Or(cs) => cs.iter().for_each(|c| c.free_vars_into(bound, out)),
            Formula::Not(a) => a.free_vars_into(bound, out),
            Formula::Implies(a, b) => {
                a.free_vars_into(bound, out);
                b.free_vars_into(bound, out);
            }
            Formula::Forall(v, b) | Formula::Exists(v, b) => {
                bound.push(v.clone());
                b.free_vars_into(bound, out);
                bound.pop();
            }
            _ => unreachable!(),
        }
    }

    /// Every variable name occurring anywhere, bound or free.
    pub fn all_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |f| {
            if let Some((l, r)) = f.atom_terms() {
                l.vars_into(&mut out);
                r.vars_into(&mut out);
            }
            if let Some((_, v, _)) = f.as_quantifier() {
                out.insert(v.to_string());
            }
        });
        out
    }

    fn visit<F: FnMut(&Formula)>(&self, f: &mut F) {
        f(self);
        match self {
            Formula::And(cs) | Formula::Or(cs) => cs.iter().for_each(|c| c.visit(f)),
            Formula::Not(a) | Formula::Forall(_, a) | Formula::Exists(_, a) => a.visit(f),
            Formula::Implies(a, b) => {
                a.visit(f);
                b.visit(f);
            }
            _ => {}
        }
    }

    pub fn has_divisibility(&self) -> bool {
        let mut found = false;
        self.visit(&mut |f| found |= matches!(f, Formula::Div(..) | Formula::NotDiv(..)));
        found
    }

    pub fn map_terms<F: Fn(&Term) -> Result<Term, FormulaError> + Copy>(&self, g: F) -> Result<Formula, FormulaError> {
        Ok(match self {
            Formula::Eq(a, b) => Formula::Eq(g(a)?, g(b)?),
            Formula::Neq(a, b) => Formula::Neq(g(a)?, g(b)?),
            Formula::Div(a, b) => Formula::Div(g(a)?, g(b)?),
            Formula::NotDiv(a, b) => Formula::NotDiv(g(a)?, g(b)?),
            Formula::And(cs) => Formula::And(cs.iter().map(|c| c.map_terms(g)).collect::<Result<_, _>>()?),
            Formula::Or(cs) => Formula::Or(cs.iter().map(|c| c.map_terms(g)).collect::<Result<_, _>>()?),
            Formula::Not(a) => Formula::not(a.map_terms(g)?),
            Formula::Implies(a, b) => Formula::implies(a.map_terms(g)?, b.map_terms(g)?),
            Formula::Forall(v, b) => Formula::Forall(v.clone(), Box::new(b.map_terms(g)?)),
            Formula::Exists(v, b) => Formula::Exists(v.clone(), Box::new(b.map_terms(g)?)),
        })
    }

    /// Capture-avoiding substitution of terms for free variables. Bound
    /// variables that would capture a substituted term are renamed.
    pub fn substitute(&self, map: &BTreeMap<String, Term>) -> Formula {
        let mut avoid: BTreeSet<String> = self.all_vars();
        for t in map.values() {
            t.vars_into(&mut avoid);
        }
        let mut names = FreshNames::new(avoid);
        self.subst_inner(map, &mut names)
    }

    fn subst_inner(&self, map: &BTreeMap<String, Term>, names: &mut FreshNames) -> Formula {
        let st = |t: &Term| t.substitute(map);
        match self {
            Formula::Eq(a, b) => Formula::Eq(st(a), st(b)),
            Formula::Neq(a, b) => Formula::Neq(st(a), st(b)),
            Formula::Div(a, b) => Formula::Div(st(a), st(b)),
            Formula::NotDiv(a, b) => Formula::NotDiv(st(a), st(b)),
            Formula::And(cs) => Formula::And(cs.iter().map(|c| c.subst_inner(map, names)).collect()),
            Formula::Or(cs) => Formula::Or(cs.iter().map(|c| c.subst_inner(map, names)).collect()),
            Formula::Not(a) => Formula::not(a.subst_inner(map, names)),
            Formula::Implies(a, b) => Formula::implies(a.subst_inner(map, names), b.subst_inner(map, names)),
            Formula::Forall(v, b) | Formula::Exists(v, b) => {
                let q = self.as_quantifier().unwrap().0;
                let mut inner = map.clone();
                inner.remove(v);
                let captures = inner.values().any(|t| t.mentions(v));
                if captures {
                    let fresh = names.fresh(base_name(v));
                    inner.insert(v.clone(), Term::Var(fresh.clone()));
                    Formula::quant(q, &fresh, b.subst_inner(&inner, names))
                } else {
                    Formula::quant(q, v, b.subst_inner(&inner, names))
                }
            }
        }
    }

    /// Renames free occurrences of variables (no capture check; callers use
    /// it only with globally distinct names).
    pub fn rename(&self, map: &BTreeMap<String, String>) -> Formula {
        let tmap: BTreeMap<String, Term> = map.iter().map(|(k, v)| (k.clone(), Term::Var(v.clone()))).collect();
        self.map_terms(|t| Ok(t.substitute(&tmap))).expect("substitution cannot fail")
    }
}

/// The name with a trailing `_k` counter removed.
pub fn base_name(name: &str) -> &str {
    match name.rfind('_') {
        Some(i) if i > 0 && i + 1 < name.len() && name[i + 1..].bytes().all(|b| b.is_ascii_digit()) => &name[..i],
        _ => name,
    }
}

/// Deterministic fresh names: `x`, then `x_1`, `x_2`, ... skipping used ones.
#[derive(Debug, Clone, Default)]
pub struct FreshNames {
    used: BTreeSet<String>,
    counters: BTreeMap<String, usize>,
}

impl FreshNames {
    pub fn new(used: BTreeSet<String>) -> Self {
        FreshNames { used, counters: BTreeMap::new() }
    }

    pub fn reserve(&mut self, name: &str) {
        self.used.insert(name.to_string());
    }

    pub fn is_used(&self, name: &str) -> bool {
        self.used.contains(name)
    }

    /// `base` itself if unused, otherwise the next free `base_k`.
    pub fn fresh(&mut self, base: &str) -> String {
        if !self.used.contains(base) {
            self.used.insert(base.to_string());
            return base.to_string();
        }
        self.fresh_suffixed(base)
    }

    pub fn fresh_suffixed(&mut self, base: &str) -> String {
        let k = self.counters.entry(base.to_string()).or_insert(0);
        loop {
            *k += 1;
            let cand = format!("{base}_{k}");
            if !self.used.contains(&cand) {
                self.used.insert(cand.clone());
                return cand;
            }
        }
    }
}

impl fmt::Display for Quant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}
