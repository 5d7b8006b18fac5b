use std::collections::BTreeMap;
use std::fmt;

use super::{base_name, Formula, FormulaError, FreshNames, Quant, Term};

/// Largest exponent expanded into a product during normalization.
pub const MAX_EXPONENT: u32 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Ring {
    Z,
    Q,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub kind: Quant,
    pub vars: Vec<String>,
}

/// A quantifier prefix over the single equation `matrix = 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrenexFormula {
    pub blocks: Vec<Block>,
    pub matrix: Term,
}

impl PrenexFormula {
    pub fn to_formula(&self) -> Formula {
        let body = Formula::Eq(self.matrix.clone(), Term::int(0));
        wrap_blocks(&self.blocks, body)
    }

    pub fn universal_count(&self) -> usize {
        self.blocks.iter().filter(|b| b.kind == Quant::Forall).map(|b| b.vars.len()).sum()
    }
}

impl fmt::Display for PrenexFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_formula())
    }
}

fn wrap_blocks(blocks: &[Block], body: Formula) -> Formula {
    blocks.iter().rev().fold(body, |acc, b| Formula::quantify(b.kind, &b.vars, acc))
}

/// Renames bound variables so that every binder introduces a distinct name
/// that also differs from the free variables. The first binder of a name
/// keeps it; later ones get `base_k`.
pub(crate) fn alpha_rename(f: &Formula) -> Formula {
    let mut names = FreshNames::new(f.free_vars());
    rename_binders(f, &BTreeMap::new(), &mut names)
}

fn rename_binders(f: &Formula, scope: &BTreeMap<String, String>, names: &mut FreshNames) -> Formula {
    match f {
        Formula::Forall(v, b) | Formula::Exists(v, b) => {
            let q = f.as_quantifier().unwrap().0;
            let new = if names.is_used(v) { names.fresh_suffixed(base_name(v)) } else { names.fresh(v) };
            let mut inner = scope.clone();
            inner.insert(v.clone(), new.clone());
            Formula::quant(q, &new, rename_binders(b, &inner, names))
        }
        Formula::And(cs) => Formula::And(cs.iter().map(|c| rename_binders(c, scope, names)).collect()),
        Formula::Or(cs) => Formula::Or(cs.iter().map(|c| rename_binders(c, scope, names)).collect()),
        Formula::Not(a) => Formula::not(rename_binders(a, scope, names)),
        Formula::Implies(a, b) => Formula::implies(rename_binders(a, scope, names), rename_binders(b, scope, names)),
        atom => atom.rename(scope),
    }
}

/// Negation normal form: implications removed, negations absorbed into
/// the atoms (= and != swap, div and !div swap).
pub(crate) fn nnf(f: &Formula) -> Formula {
    match f {
        Formula::And(cs) => Formula::And(cs.iter().map(nnf).collect()),
        Formula::Or(cs) => Formula::Or(cs.iter().map(nnf).collect()),
        Formula::Not(a) => negate(a),
        Formula::Implies(a, b) => Formula::Or(vec![negate(a), nnf(b)]),
        Formula::Forall(v, b) => Formula::Forall(v.clone(), Box::new(nnf(b))),
        Formula::Exists(v, b) => Formula::Exists(v.clone(), Box::new(nnf(b))),
        atom => atom.clone(),
    }
}

/// Negation normal form of the negation of `f`.
pub(crate) fn negate(f: &Formula) -> Formula {
    match f {
        Formula::Eq(a, b) => Formula::Neq(a.clone(), b.clone()),
        Formula::Neq(a, b) => Formula::Eq(a.clone(), b.clone()),
        Formula::Div(a, b) => Formula::NotDiv(a.clone(), b.clone()),
        Formula::NotDiv(a, b) => Formula::Div(a.clone(), b.clone()),
        Formula::And(cs) => Formula::Or(cs.iter().map(negate).collect()),
        Formula::Or(cs) => Formula::And(cs.iter().map(negate).collect()),
        Formula::Not(a) => nnf(a),
        Formula::Implies(a, b) => Formula::And(vec![nnf(a), negate(b)]),
        Formula::Forall(v, b) => Formula::Exists(v.clone(), Box::new(negate(b))),
        Formula::Exists(v, b) => Formula::Forall(v.clone(), Box::new(negate(b))),
    }
}

struct Pulled {
    blocks: Vec<Block>,
    matrix: Formula,
}

/// Moves all quantifiers of an NNF formula with distinct bound names to the
/// front. `ctx` is the kind of the nearest enclosing quantifier.
fn pull(f: &Formula, ctx: Option<Quant>) -> Pulled {
    match f {
        Formula::Forall(v, b) | Formula::Exists(v, b) => {
            let q = f.as_quantifier().unwrap().0;
            let mut p = pull(b, Some(q));
            match p.blocks.first_mut() {
                Some(first) if first.kind == q => first.vars.insert(0, v.clone()),
                _ => p.blocks.insert(0, Block { kind: q, vars: vec![v.clone()] }),
            }
            p
        }
        Formula::And(cs) | Formula::Or(cs) if !cs.is_empty() => {
            let conj = matches!(f, Formula::And(_));
            let mut iter = cs.iter().map(|c| pull(c, ctx));
            let first = iter.next().unwrap();
            let mut blocks = first.blocks;
            let mut matrices = vec![first.matrix];
            for child in iter {
                let (merged, renaming) = merge_prefixes(blocks, child.blocks, conj, ctx);
                blocks = merged;
                matrices.push(if renaming.is_empty() { child.matrix } else { child.matrix.rename(&renaming) });
            }
            let matrix = if conj { Formula::And(matrices) } else { Formula::Or(matrices) };
            Pulled { blocks, matrix }
        }
        Formula::Not(_) | Formula::Implies(..) => unreachable!("pull expects negation normal form"),
        other => Pulled { blocks: Vec::new(), matrix: other.clone() },
    }
}

/// Interleaves two alternating prefixes of sibling subformulas, using as
/// few blocks as possible. Aligned existential blocks under a disjunction
/// and aligned universal blocks under a conjunction share variables; the
/// returned map renames the right prefix's variables accordingly.
fn merge_prefixes(
    left: Vec<Block>,
    right: Vec<Block>,
    conj: bool,
    ctx: Option<Quant>,
) -> (Vec<Block>, BTreeMap<String, String>) {
    if left.is_empty() || right.is_empty() {
        return (if left.is_empty() { right } else { left }, BTreeMap::new());
    }
    let (kl, kr) = (left[0].kind, right[0].kind);
    let mut best: Option<(usize, Quant)> = None;
    for start in [kl, kl.dual()] {
        let off_l = usize::from(kl != start);
        let off_r = usize::from(kr != start);
        let n = (left.len() + off_l).max(right.len() + off_r);
        let cost = n - usize::from(ctx == Some(start));
        if best.map_or(true, |(c, _)| cost < c) {
            best = Some((cost, start));
        }
    }
    let start = best.unwrap().1;
    let off_l = usize::from(kl != start);
    let off_r = usize::from(kr != start);
    let n = (left.len() + off_l).max(right.len() + off_r);
    let mut renaming = BTreeMap::new();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let kind = if i % 2 == 0 { start } else { start.dual() };
        let lb = i.checked_sub(off_l).and_then(|j| left.get(j));
        let rb = i.checked_sub(off_r).and_then(|j| right.get(j));
        let vars = match (lb, rb) {
            (Some(l), Some(r)) => {
                let share = (kind == Quant::Exists && !conj) || (kind == Quant::Forall && conj);
                if share {
                    share_variables(&l.vars, &r.vars, &mut renaming)
                } else {
                    l.vars.iter().chain(&r.vars).cloned().collect()
                }
            }
            (Some(b), None) | (None, Some(b)) => b.vars.clone(),
            (None, None) => unreachable!(),
        };
        out.push(Block { kind, vars });
    }
    (out, renaming)
}

/// Maps right variables onto left ones, same base name first, then by
/// position; unmatched right variables are kept.
fn share_variables(left: &[String], right: &[String], renaming: &mut BTreeMap<String, String>) -> Vec<String> {
    let mut taken = vec![false; left.len()];
    let mut target: Vec<Option<usize>> = vec![None; right.len()];
    for (ri, r) in right.iter().enumerate() {
        if let Some(li) = (0..left.len()).find(|&li| !taken[li] && base_name(&left[li]) == base_name(r)) {
            taken[li] = true;
            target[ri] = Some(li);
        }
    }
    for t in target.iter_mut().filter(|t| t.is_none()) {
        if let Some(li) = (0..left.len()).find(|&li| !taken[li]) {
            taken[li] = true;
            *t = Some(li);
        }
    }
    let mut vars = left.to_vec();
    for (ri, r) in right.iter().enumerate() {
        match target[ri] {
            Some(li) => {
                renaming.insert(r.clone(), left[li].clone());
            }
            None => vars.push(r.clone()),
        }
    }
    vars
}

/// Merges same-kind quantifier blocks across the conjuncts and disjuncts of
/// `f`, returning an equivalent prenex formula whose matrix keeps its
/// connectives.
pub fn coalesce_quantifiers(f: &Formula) -> Formula {
    let Pulled { blocks, matrix } = pull(&nnf(&alpha_rename(f)), None);
    wrap_blocks(&blocks, matrix)
}

/// Positive prenex form: one quantifier prefix over a single polynomial
/// equation. Inequalities become existential witnesses: `P*q - 1 = 0` over
/// Q, and `(P - 1 - S)(P + 1 + S) = 0` with S a sum of four squares over Z.
pub fn to_positive_prenex(f: &Formula, ring: Ring) -> Result<PrenexFormula, FormulaError> {
    if f.has_divisibility() {
        return Err(FormulaError::DivisibilityAtom);
    }
    let f = nnf(&alpha_rename(&f.map_terms(Term::expand_powers)?));
    let mut names = FreshNames::new(f.all_vars());
    let Pulled { mut blocks, matrix } = pull(&f, None);
    let witnesses = place_witnesses(&mut blocks, &matrix, ring, &mut names);
    let mut next = 0;
    let matrix = polynomial(&matrix, &witnesses, &mut next, ring);
    Ok(PrenexFormula { blocks, matrix })
}

/// Inequality atoms of the matrix in preorder.
fn inequalities(m: &Formula) -> Vec<&Formula> {
    match m {
        Formula::Neq(..) => vec![m],
        Formula::And(cs) | Formula::Or(cs) => cs.iter().flat_map(inequalities).collect(),
        _ => Vec::new(),
    }
}

/// Chooses witness variables for every inequality and inserts them into
/// the prefix. When the prefix needs a final existential block anyway, all
/// witnesses go there and disjuncts share slots; otherwise each witness
/// joins the first existential block binding after its atom's variables.
fn place_witnesses(blocks: &mut Vec<Block>, matrix: &Formula, ring: Ring, names: &mut FreshNames) -> Vec<Vec<String>> {
    let atoms = inequalities(matrix);
    if atoms.is_empty() {
        return Vec::new();
    }
    let mut depth: BTreeMap<&str, usize> = BTreeMap::new();
    for (i, b) in blocks.iter().enumerate() {
        for v in &b.vars {
            depth.insert(v, i);
        }
    }
    let targets: Vec<Option<usize>> = atoms
        .iter()
        .map(|a| {
            let (l, r) = a.atom_terms().unwrap();
            let last = l.vars().iter().chain(r.vars().iter()).filter_map(|v| depth.get(v.as_str()).copied()).max();
            (last.unwrap_or(0)..blocks.len()).find(|&i| blocks[i].kind == Quant::Exists)
        })
        .collect();
    let ends_existential = blocks.last().is_some_and(|b| b.kind == Quant::Exists);
    let fresh_group = |names: &mut FreshNames| -> Vec<String> {
        match ring {
            Ring::Q => vec![names.fresh("q")],
            Ring::Z => ["a", "b", "c", "d"].iter().map(|b| names.fresh(b)).collect(),
        }
    };
    if ends_existential || targets.iter().any(Option::is_none) {
        let mut slot_of = Vec::with_capacity(atoms.len());
        let width = allocate_slots(matrix, 0, &mut slot_of);
        let groups: Vec<Vec<String>> = (0..width).map(|_| fresh_group(names)).collect();
        if !ends_existential {
            blocks.push(Block { kind: Quant::Exists, vars: Vec::new() });
        }
        let last = blocks.last_mut().unwrap();
        for g in &groups {
            last.vars.extend(g.iter().cloned());
        }
        slot_of.iter().map(|&s| groups[s].clone()).collect()
    } else {
        targets
            .iter()
            .map(|t| {
                let g = fresh_group(names);
                blocks[t.unwrap()].vars.extend(g.iter().cloned());
                g
            })
            .collect()
    }
}

/// Assigns witness slots to inequality atoms in preorder: disjuncts reuse
/// the same slots, conjuncts use disjoint ones. Returns the slot count.
fn allocate_slots(m: &Formula, offset: usize, slot_of: &mut Vec<usize>) -> usize {
    match m {
        Formula::Neq(..) => {
            slot_of.push(offset);
            1
        }
        Formula::Or(cs) => cs.iter().map(|c| allocate_slots(c, offset, slot_of)).max().unwrap_or(0),
        Formula::And(cs) => {
            let mut used = 0;
            for c in cs {
                used += allocate_slots(c, offset + used, slot_of);
            }
            used
        }
        _ => 0,
    }
}

fn difference(l: &Term, r: &Term) -> Term {
    if r.is_zero() {
        l.clone()
    } else if l.is_zero() {
        Term::neg(r.clone())
    } else {
        Term::sub(l.clone(), r.clone())
    }
}

fn polynomial(m: &Formula, witnesses: &[Vec<String>], next: &mut usize, ring: Ring) -> Term {
    match m {
        Formula::Eq(l, r) => difference(l, r),
        Formula::Neq(l, r) => {
            let p = difference(l, r);
            let w = &witnesses[*next];
            *next += 1;
            match ring {
                Ring::Q => Term::sub(Term::mul(p, Term::var(&w[0])), Term::int(1)),
                Ring::Z => {
                    let s = Term::sum(w.iter().map(|v| Term::square(Term::var(v))));
                    let lo = Term::sub(Term::sub(p.clone(), Term::int(1)), s.clone());
                    let hi = Term::add(Term::add(p, Term::int(1)), s);
                    Term::mul(lo, hi)
                }
            }
        }
        Formula::And(cs) => Term::sum(cs.iter().map(|c| Term::square(polynomial(c, witnesses, next, ring)))),
        Formula::Or(cs) => Term::product(cs.iter().map(|c| polynomial(c, witnesses, next, ring))),
        _ => unreachable!("matrix is quantifier-free ring NNF"),
    }
}

#[cfg(test)]
mod tests {
    use super::super::{parse_formula, shape_and_classify, Signature};
    use super::*;

    fn ring(s: &str) -> Formula {
        parse_formula(s, Signature::Ring).unwrap()
    }

    #[test]
    fn connectives_become_products_and_squares() {
        let p = to_positive_prenex(&ring("(P = 0) | (Q = 0)"), Ring::Q).unwrap();
        assert!(p.blocks.is_empty());
        assert_eq!(p.matrix.to_string(), "P*Q");
        let p = to_positive_prenex(&ring("P = 0 & Q = 0"), Ring::Q).unwrap();
        assert_eq!(p.matrix.to_string(), "P*P + Q*Q");
    }

    #[test]
    fn inequality_over_q_uses_one_inverse() {
        let p = to_positive_prenex(&ring("P != 0"), Ring::Q).unwrap();
        assert_eq!(p.to_string(), "exists q. P*q - 1 = 0");
        let p = to_positive_prenex(&ring("P != 0"), Ring::Z).unwrap();
        assert_eq!(p.to_string(), "exists a b c d. (P - 1 - (a*a + b*b + c*c + d*d))*(P + 1 + (a*a + b*b + c*c + d*d)) = 0");
    }

    #[test]
    fn disjoint_disjuncts_share_witnesses() {
        let p = to_positive_prenex(&ring("x != 0 | y != 0"), Ring::Q).unwrap();
        assert_eq!(p.to_string(), "exists q. (x*q - 1)*(y*q - 1) = 0");
        let p = to_positive_prenex(&ring("x != 0 & y != 0"), Ring::Q).unwrap();
        assert_eq!(p.blocks[0].vars, vec!["q", "q_1"]);
    }

    #[test]
    fn implication_and_negation() {
        let p = to_positive_prenex(&ring("forall x. (x = 1 -> !(exists y. x*y = 2))"), Ring::Q).unwrap();
        let s = shape_and_classify(&p);
        assert_eq!(s.to_string(), "Pi_2^+ shape=((2,1)) t=2 c=1");
    }

    #[test]
    fn rename_keeps_first_binder() {
        let f = alpha_rename(&ring("(exists x. x = 1) & (exists x. x = 2) & x = 3"));
        assert_eq!(f.to_string(), "(exists x_1. x_1 = 1) & (exists x_2. x_2 = 2) & x = 3");
        let f = alpha_rename(&ring("exists x. x = 1 & forall x. x = 2"));
        assert_eq!(f.to_string(), "exists x. x = 1 & (forall x_1. x_1 = 2)");
    }

    #[test]
    fn coalescing_examples() {
        let f = ring("(forall X. X = 0) & (forall Y. Y*Y = 0)");
        assert_eq!(coalesce_quantifiers(&f).to_string(), "forall X. X = 0 & X*X = 0");
        let f = ring("(exists x. x = 1) | (exists y. y = 2)");
        assert_eq!(coalesce_quantifiers(&f).to_string(), "exists x. x = 1 | x = 2");
        let f = ring("(forall x. x = 1) | (forall y. y = 2)");
        assert_eq!(coalesce_quantifiers(&f).to_string(), "forall x y. x = 1 | y = 2");
        let f = ring("forall A. exists X. X*X - A = 0");
        assert_eq!(coalesce_quantifiers(&f), f);
    }

    #[test]
    fn power_cap() {
        assert_eq!(to_positive_prenex(&ring("x^65 = 0"), Ring::Q), Err(FormulaError::ExponentTooLarge(65)));
        assert_eq!(to_positive_prenex(&ring("x^3 = 0"), Ring::Q).unwrap().matrix.to_string(), "x*x*x");
        assert_eq!(to_positive_prenex(&ring("x^0 = 0"), Ring::Q).unwrap().matrix.to_string(), "1");
    }
}
