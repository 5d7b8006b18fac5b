//! Translation of formulas over Z into formulas over Q through a
//! d-dimensional model, and the hierarchy bookkeeping for such translations.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arith::{parse_rational, Rat};
use crate::curve::{self, Curve, CurveError, Point};
use crate::formula::{
    parse_formula, shape_and_classify, to_positive_prenex, Class, Formula, FormulaError, FreshNames, Quant, Ring,
    Signature, Term,
};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error("dimension must be positive")]
    ZeroDimension,
    #[error("{which} formula has unexpected free variable '{var}'")]
    Arity { which: &'static str, var: String },
    #[error("{which} point has {found} coordinates, expected {expected}")]
    PointArity { which: &'static str, found: usize, expected: usize },
    #[error("formula multiplies but the model has no times formula")]
    MissingTimes,
    #[error("formula uses a nonzero literal but the model has no `one` point")]
    MissingOne,
    #[error("divisibility atoms cannot be translated")]
    Divisibility,
    #[error("declared class {declared} for {which} is below its normalized class {actual}")]
    ClassMismatch { which: &'static str, declared: Class, actual: Class },
    #[error("undefined table cell for {0}")]
    UndefinedCell(Class),
    #[error("point has finite order")]
    Torsion,
    #[error("multiplying by {0} does not kill the torsion subgroup")]
    TorsionNotKilled(u64),
    #[error("multiplier must be positive")]
    ZeroMultiplier,
    #[error("malformed model file: {0}")]
    Parse(String),
}

/// Hierarchy classes claimed for the defining formulas of a model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeclaredClasses {
    pub domain: Class,
    pub plus: Class,
    pub times: Option<Class>,
}

/// A d-dimensional model of (Z, +, x) inside Q. The domain formula has free
/// variables x1..xd; the operation formulas relate x1..xd, y1..yd, z1..zd,
/// meaning x + y = z (or x * y = z).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelSpec {
    pub dimension: usize,
    pub domain: Formula,
    pub plus: Formula,
    pub times: Option<Formula>,
    pub zero: Vec<Rat>,
    /// The image of 1, used to encode nonzero integer literals.
    pub one: Option<Vec<Rat>>,
    pub classes: DeclaredClasses,
}

pub fn coordinate_names(prefix: &str, d: usize) -> Vec<String> {
    (1..=d).map(|i| format!("{prefix}{i}")).collect()
}

impl ModelSpec {
    /// Checks free-variable arities and point lengths.
    pub fn check_arity(&self) -> Result<(), ModelError> {
        let d = self.dimension;
        if d == 0 {
            return Err(ModelError::ZeroDimension);
        }
        let xs: BTreeSet<String> = coordinate_names("x", d).into_iter().collect();
        let mut xyz = xs.clone();
        xyz.extend(coordinate_names("y", d));
        xyz.extend(coordinate_names("z", d));
        let check = |which: &'static str, f: &Formula, allowed: &BTreeSet<String>| {
            match f.free_vars().into_iter().find(|v| !allowed.contains(v)) {
                Some(var) => Err(ModelError::Arity { which, var }),
                None => Ok(()),
            }
        };
        check("domain", &self.domain, &xs)?;
        check("plus", &self.plus, &xyz)?;
        if let Some(t) = &self.times {
            check("times", t, &xyz)?;
        }
        let point = |which: &'static str, p: &[Rat]| {
            if p.len() == d {
                Ok(())
            } else {
                Err(ModelError::PointArity { which, found: p.len(), expected: d })
            }
        };
        point("zero", &self.zero)?;
        if let Some(one) = &self.one {
            point("one", one)?;
        }
        Ok(())
    }

    /// Arity checks plus: each declared class contains the class of the
    /// normalized defining formula.
    pub fn validate(&self) -> Result<(), ModelError> {
        self.check_arity()?;
        let mut pairs = vec![("domain", &self.domain, self.classes.domain), ("plus", &self.plus, self.classes.plus)];
        if let (Some(t), Some(c)) = (&self.times, self.classes.times) {
            pairs.push(("times", t, c));
        }
        for (which, f, declared) in pairs {
            let actual = shape_and_classify(&to_positive_prenex(f, Ring::Q)?).class;
            if !actual.le(&declared) {
                return Err(ModelError::ClassMismatch { which, declared, actual });
            }
        }
        Ok(())
    }

    /// Parses the TOML model format: keys `dimension`, `domain`, `plus`,
    /// `times`, `zero`, `one` and a `[classes]` table.
    pub fn parse(text: &str) -> Result<ModelSpec, ModelError> {
        let raw: RawModel = toml::from_str(text).map_err(|e| ModelError::Parse(e.to_string()))?;
        let formula = |s: &str| parse_formula(s, Signature::Ring);
        let point = |v: &[String]| -> Result<Vec<Rat>, ModelError> {
            v.iter().map(|s| parse_rational(s).map_err(|e| ModelError::Parse(e.to_string()))).collect()
        };
        let class = |s: &str| Class::from_str(s).map_err(ModelError::from);
        let spec = ModelSpec {
            dimension: raw.dimension,
            domain: formula(&raw.domain)?,
            plus: formula(&raw.plus)?,
            times: raw.times.as_deref().map(formula).transpose()?,
            zero: point(&raw.zero)?,
            one: raw.one.as_deref().map(point).transpose()?,
            classes: DeclaredClasses {
                domain: class(&raw.classes.domain)?,
                plus: class(&raw.classes.plus)?,
                times: raw.classes.times.as_deref().map(class).transpose()?,
            },
        };
        spec.check_arity()?;
        Ok(spec)
    }

    pub fn to_toml(&self) -> String {
        let strings = |p: &[Rat]| p.iter().map(|r| r.to_string()).collect::<Vec<_>>();
        let raw = RawModel {
            dimension: self.dimension,
            domain: self.domain.to_string(),
            plus: self.plus.to_string(),
            times: self.times.as_ref().map(|t| t.to_string()),
            zero: strings(&self.zero),
            one: self.one.as_deref().map(strings),
            classes: RawClasses {
                domain: self.classes.domain.to_string(),
                plus: self.classes.plus.to_string(),
                times: self.classes.times.map(|c| c.to_string()),
            },
        };
        toml::to_string(&raw).expect("model serializes")
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    dimension: usize,
    domain: String,
    plus: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    times: Option<String>,
    zero: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    one: Option<Vec<String>>,
    classes: RawClasses,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawClasses {
    domain: String,
    plus: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    times: Option<String>,
}

/// A translated formula together with the coordinate names of the dummy
/// tuples introduced for intermediate results.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Translation {
    pub formula: Formula,
    pub dummies: Vec<String>,
}

impl fmt::Display for Translation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.formula)
    }
}

/// Replaces every Z-variable by a tuple of Q-variables guarded by the
/// domain formula (conjunction for existential, implication for universal
/// quantifiers) and every quantifier-free part by existential dummy tuples
/// tied together through the plus and times formulas.
pub fn translate(f: &Formula, m: &ModelSpec) -> Result<Translation, ModelError> {
    m.check_arity()?;
    if f.has_divisibility() {
        return Err(ModelError::Divisibility);
    }
    let f = f.map_terms(Term::expand_powers)?;
    let mut used = f.all_vars();
    for g in [Some(&m.domain), Some(&m.plus), m.times.as_ref()].into_iter().flatten() {
        used.extend(g.all_vars());
    }
    let mut tr = Translator { m, names: FreshNames::new(used), tuples: BTreeMap::new(), dummies: Vec::new(), counter: 0 };
    let formula = tr.formula(&f, &BTreeMap::new())?;
    Ok(Translation { formula, dummies: tr.dummies })
}

type Operand = Vec<Term>;

struct Translator<'a> {
    m: &'a ModelSpec,
    names: FreshNames,
    tuples: BTreeMap<String, Vec<String>>,
    dummies: Vec<String>,
    counter: usize,
}

/// Definitions and dummy tuples collected while flattening one
/// quantifier-free subformula.
#[derive(Default)]
struct Scratch {
    defs: Vec<Formula>,
    dummies: Vec<String>,
}

fn is_application(t: &Term) -> bool {
    matches!(t, Term::Add(..) | Term::Mul(..))
}

fn has_quantifier(f: &Formula) -> bool {
    match f {
        Formula::Forall(..) | Formula::Exists(..) => true,
        Formula::And(cs) | Formula::Or(cs) => cs.iter().any(has_quantifier),
        Formula::Not(a) => has_quantifier(a),
        Formula::Implies(a, b) => has_quantifier(a) || has_quantifier(b),
        _ => false,
    }
}

impl Translator<'_> {
    fn tuple(&mut self, base: &str) -> Vec<String> {
        let d = self.m.dimension;
        let mut k = 0;
        loop {
            let cand = if k == 0 { base.to_string() } else { format!("{base}_{k}") };
            k += 1;
            let coords: Vec<String> = (1..=d).map(|i| format!("{cand}_c{i}")).collect();
            if coords.iter().all(|c| !self.names.is_used(c)) {
                coords.iter().for_each(|c| self.names.reserve(c));
                return coords;
            }
        }
    }

    fn dummy(&mut self, scratch: &mut Scratch) -> Vec<String> {
        self.counter += 1;
        let coords = self.tuple(&format!("u{}", self.counter));
        scratch.dummies.extend(coords.iter().cloned());
        self.dummies.extend(coords.iter().cloned());
        coords
    }

    fn instantiate(g: &Formula, groups: &[(&str, &Operand)]) -> Formula {
        let mut map = BTreeMap::new();
        for (prefix, op) in groups {
            for (i, t) in op.iter().enumerate() {
                map.insert(format!("{prefix}{}", i + 1), t.clone());
            }
        }
        g.substitute(&map)
    }

    fn var_operand(coords: &[String]) -> Operand {
        coords.iter().map(|c| Term::var(c)).collect()
    }

    /// `scope` maps Z-variable names to their coordinate names.
    fn formula(&mut self, f: &Formula, scope: &BTreeMap<String, Vec<String>>) -> Result<Formula, ModelError> {
        if !has_quantifier(f) {
            return self.quantifier_free(f, scope);
        }
        Ok(match f {
            Formula::Forall(v, body) | Formula::Exists(v, body) => {
                let q = f.as_quantifier().unwrap().0;
                let coords = self.tuple(v);
                let mut inner = scope.clone();
                inner.insert(v.clone(), coords.clone());
                let guard = Self::instantiate(&self.m.domain, &[("x", &Self::var_operand(&coords))]);
                let body = self.formula(body, &inner)?;
                let guarded = match q {
                    Quant::Exists => Formula::And(vec![guard, body]),
                    Quant::Forall => Formula::implies(guard, body),
                };
                Formula::quantify(q, &coords, guarded)
            }
            Formula::And(cs) => Formula::And(cs.iter().map(|c| self.formula(c, scope)).collect::<Result<_, _>>()?),
            Formula::Or(cs) => Formula::Or(cs.iter().map(|c| self.formula(c, scope)).collect::<Result<_, _>>()?),
            Formula::Not(a) => Formula::not(self.formula(a, scope)?),
            Formula::Implies(a, b) => Formula::implies(self.formula(a, scope)?, self.formula(b, scope)?),
            _ => unreachable!(),
        })
    }

    fn quantifier_free(&mut self, f: &Formula, scope: &BTreeMap<String, Vec<String>>) -> Result<Formula, ModelError> {
        let mut scratch = Scratch::default();
        let conjuncts: Vec<&Formula> = match f {
            Formula::And(cs) => cs.iter().collect(),
            other => vec![other],
        };
        let mut rest = Vec::new();
        for c in conjuncts {
            match c {
                Formula::Eq(l, r) if is_application(l) || is_application(r) => {
                    let (target, app) = if is_application(r) { (l, r) } else { (r, l) };
                    let target = self.operand(target, scope, &mut scratch)?;
                    self.apply(app, target, scope, &mut scratch)?;
                }
                other => rest.push(self.structure(other, scope, &mut scratch)?),
            }
        }
        let mut parts = std::mem::take(&mut scratch.defs);
        parts.extend(rest);
        let body = Formula::and(parts);
        Ok(Formula::quantify(Quant::Exists, &scratch.dummies, body))
    }

    fn structure(
        &mut self,
        f: &Formula,
        scope: &BTreeMap<String, Vec<String>>,
        scratch: &mut Scratch,
    ) -> Result<Formula, ModelError> {
        Ok(match f {
            Formula::Eq(l, r) | Formula::Neq(l, r) => {
                let a = self.operand(l, scope, scratch)?;
                let b = self.operand(r, scope, scratch)?;
                if matches!(f, Formula::Eq(..)) {
                    Formula::and(a.into_iter().zip(b).map(|(x, y)| Formula::Eq(x, y)).collect())
                } else {
                    Formula::or(a.into_iter().zip(b).map(|(x, y)| Formula::Neq(x, y)).collect())
                }
            }
            Formula::And(cs) => {
                Formula::And(cs.iter().map(|c| self.structure(c, scope, scratch)).collect::<Result<_, _>>()?)
            }
            Formula::Or(cs) => Formula::Or(cs.iter().map(|c| self.structure(c, scope, scratch)).collect::<Result<_, _>>()?),
            Formula::Not(a) => Formula::not(self.structure(a, scope, scratch)?),
            Formula::Implies(a, b) => {
                Formula::implies(self.structure(a, scope, scratch)?, self.structure(b, scope, scratch)?)
            }
            _ => return Err(ModelError::Divisibility),
        })
    }

    /// Emits the defining formula of an addition or multiplication whose
    /// result is `target`.
    fn apply(
        &mut self,
        app: &Term,
        target: Operand,
        scope: &BTreeMap<String, Vec<String>>,
        scratch: &mut Scratch,
    ) -> Result<(), ModelError> {
        let (a, b, rel) = match app {
            Term::Add(a, b) => (a, b, &self.m.plus),
            Term::Mul(a, b) => (a, b, self.m.times.as_ref().ok_or(ModelError::MissingTimes)?),
            _ => unreachable!(),
        };
        let rel = rel.clone();
        let oa = self.operand(a, scope, scratch)?;
        let ob = self.operand(b, scope, scratch)?;
        scratch.defs.push(Self::instantiate(&rel, &[("x", &oa), ("y", &ob), ("z", &target)]));
        Ok(())
    }

    fn operand(&mut self, t: &Term, scope: &BTreeMap<String, Vec<String>>, scratch: &mut Scratch) -> Result<Operand, ModelError> {
        match t {
            Term::Var(v) => {
                let coords = match scope.get(v) {
                    Some(c) => c.clone(),
                    None => match self.tuples.get(v) {
                        Some(c) => c.clone(),
                        None => {
                            let c = self.tuple(v);
                            self.tuples.insert(v.clone(), c.clone());
                            c
                        }
                    },
                };
                Ok(Self::var_operand(&coords))
            }
            Term::Int(k) => self.literal(k, scratch),
            Term::Add(..) | Term::Mul(..) => {
                let z = Self::var_operand(&self.dummy(scratch));
                self.apply(t, z.clone(), scope, scratch)?;
                Ok(z)
            }
            Term::Pow(..) => unreachable!("powers are expanded before translation"),
        }
    }

    fn constant(&mut self, point: &[Rat], scratch: &mut Scratch) -> Operand {
        if point.iter().all(|r| r.is_integer()) {
            return point.iter().map(|r| Term::Int(r.to_integer())).collect();
        }
        let coords = self.dummy(scratch);
        for (c, r) in coords.iter().zip(point) {
            let lhs = Term::mul(Term::Int(r.denom().clone()), Term::var(c));
            scratch.defs.push(Formula::Eq(lhs, Term::Int(r.numer().clone())));
        }
        Self::var_operand(&coords)
    }

    /// 0 is the zero point, k > 0 a k-fold sum of the one point, and -k the
    /// solution w of k + w = 0.
    fn literal(&mut self, k: &BigInt, scratch: &mut Scratch) -> Result<Operand, ModelError> {
        let zero = self.m.zero.clone();
        if k.is_zero() {
            return Ok(self.constant(&zero, scratch));
        }
        let one_point = self.m.one.clone().ok_or(ModelError::MissingOne)?;
        let plus = self.m.plus.clone();
        let n = k.abs().to_usize().expect("literal fits in memory");
        let one = self.constant(&one_point, scratch);
        let mut acc = one.clone();
        for _ in 1..n {
            let z = Self::var_operand(&self.dummy(scratch));
            scratch.defs.push(Self::instantiate(&plus, &[("x", &acc), ("y", &one), ("z", &z)]));
            acc = z;
        }
        if k.is_negative() {
            let w = Self::var_operand(&self.dummy(scratch));
            let zero = self.constant(&zero, scratch);
            scratch.defs.push(Self::instantiate(&plus, &[("x", &acc), ("y", &w), ("z", &zero)]));
            acc = w;
        }
        Ok(acc)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Table {
    /// Domain atomic, plus existential, times of a given class.
    General,
    /// Models of (Z, +, |) with existential domain, plus and divisibility.
    DivModel,
}

impl FromStr for Table {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "general" => Ok(Table::General),
            "divmodel" => Ok(Table::DivModel),
            other => Err(ModelError::Parse(format!("unknown table '{other}'"))),
        }
    }
}

/// Hierarchy class guaranteed for the translation of a formula of class
/// `f_class`. A missing or quantifier-free times formula counts as Sigma_1.
pub fn complexity_bound(f_class: Class, times_class: Option<Class>, table: Table) -> Result<Class, ModelError> {
    let k = f_class.level;
    if k == 0 && f_class.kind == Quant::Forall {
        return Err(ModelError::UndefinedCell(f_class));
    }
    let sigma = f_class.kind == Quant::Exists;
    let even = k % 2 == 0;
    if table == Table::DivModel {
        return Ok(match (sigma, even) {
            (true, true) => Class::sigma(k + 1),
            (true, false) => Class::sigma(k),
            (false, true) => Class::pi(k),
            (false, false) => Class::pi(k + 1),
        });
    }
    let times = match times_class {
        Some(c) if c.level > 0 => c,
        _ => Class::sigma(1),
    };
    let s = times.level;
    let shift = usize::from(times.kind == Quant::Forall);
    Ok(match (sigma, even) {
        (true, true) => Class::sigma(k + s + shift),
        (true, false) => Class::sigma(k - 1 + s + shift),
        (false, true) => Class::pi(k + s - 1 + shift),
        (false, false) => Class::pi(k + s + shift),
    })
}

/// The bound t(times) + d * t(F) on universal quantifiers of a translation.
pub fn t_bound(t_times: usize, dimension: usize, t_formula: usize) -> usize {
    t_times + dimension * t_formula
}

fn rat_points(v: &[i64]) -> Vec<Rat> {
    v.iter().map(|&k| Rat::from_integer(BigInt::from(k))).collect()
}

fn ring(s: &str) -> Formula {
    parse_formula(s, Signature::Ring).expect("model formula parses")
}

/// Z inside itself: the domain is everything and the operations are atomic.
pub fn identity_model_spec() -> ModelSpec {
    ModelSpec {
        dimension: 1,
        domain: ring("x1 = x1"),
        plus: ring("z1 = x1 + y1"),
        times: Some(ring("z1 = x1*y1")),
        zero: rat_points(&[0]),
        one: Some(rat_points(&[1])),
        classes: DeclaredClasses { domain: Class::sigma(0), plus: Class::sigma(0), times: Some(Class::sigma(0)) },
    }
}

/// n -> (n, 2n) with a times formula carrying one alternation
/// (exists u. forall v. u*v = 0 forces u = 0), so it sits in Sigma_2^+.
pub fn synthetic_model_spec() -> ModelSpec {
    ModelSpec {
        dimension: 2,
        domain: ring("x2 = 2*x1"),
        plus: ring("z1 = x1 + y1 & z2 = x2 + y2"),
        times: Some(ring("exists u. forall v. (x1*y1 - z1)^2 + (z2 - 2*z1)^2 + (u*v)^2 = 0")),
        zero: rat_points(&[0, 0]),
        one: Some(rat_points(&[1, 2])),
        classes: DeclaredClasses { domain: Class::sigma(0), plus: Class::sigma(0), times: Some(Class::sigma(2)) },
    }
}

fn show(k: &BigInt) -> String {
    if k.is_negative() {
        format!("({k})")
    } else {
        k.to_string()
    }
}

/// Affine coordinates (X, Y) of m*S for a point S = (s1, s2), as existential
/// constraints along a double-and-add chain. Returns the constraint text and
/// the introduced variable names.
fn multiple_chain(e: &Curve, m: u64) -> (String, Vec<String>, (String, String)) {
    let (a, b) = (show(&e.a), show(&e.b));
    let mut parts = Vec::new();
    let mut vars = Vec::new();
    let (mut rx, mut ry) = ("s1".to_string(), "s2".to_string());
    let bits: Vec<bool> = (0..64 - m.leading_zeros()).rev().map(|i| (m >> i) & 1 == 1).collect();
    let mut step = 0;
    for &bit in &bits[1..] {
        step += 1;
        let (l, nx, ny) = (format!("l{step}"), format!("r{step}"), format!("t{step}"));
        parts.push(format!(
            "{l}*(2*{ry}) = 3*{rx}^2 + 2*{a}*{rx} + {b} & {nx} = {l}^2 - {a} - 2*{rx} & {ny} = {l}*({rx} - {nx}) - {ry}"
        ));
        vars.extend([l, nx.clone(), ny.clone()]);
        (rx, ry) = (nx, ny);
        if bit {
            step += 1;
            let (w, l, nx, ny) = (format!("w{step}"), format!("l{step}"), format!("r{step}"), format!("t{step}"));
            parts.push(format!(
                "{w}*(s1 - {rx}) = 1 & {l} = (s2 - {ry})*{w} & {nx} = {l}^2 - {a} - {rx} - s1 & {ny} = {l}*({rx} - {nx}) - {ry}"
            ));
            vars.extend([w, l, nx.clone(), ny.clone()]);
            (rx, ry) = (nx, ny);
        }
    }
    (parts.join(" & "), vars, (rx, ry))
}

/// The three-dimensional model n -> n*m*P of (Z, +) on an elliptic curve of
/// rank one, with m = N*r*torsion: affine multiples become (x, y, 1) and the
/// origin (0, 1, 0). `n_gen` is the index of P over a generator (1 when P
/// is taken as the generator).
pub fn elliptic_model_spec(
    e: &Curve,
    p: &Point,
    r: u64,
    torsion: u64,
    n_gen: Option<u64>,
) -> Result<ModelSpec, ModelError> {
    e.check(p)?;
    if r == 0 || torsion == 0 || n_gen == Some(0) {
        return Err(ModelError::ZeroMultiplier);
    }
    for k in 1..=16 {
        if curve::scalar_mul(e, k, p)?.is_infinity() {
            return Err(ModelError::Torsion);
        }
    }
    for t in curve::torsion_points(e) {
        if !curve::scalar_mul(e, torsion as i64, &t)?.is_infinity() {
            return Err(ModelError::TorsionNotKilled(torsion));
        }
    }
    let m = n_gen.unwrap_or(1) * r * torsion;
    let (a, b, c) = (show(&e.a), show(&e.b), show(&e.c));
    let (chain, mut vars, (fx, fy)) = multiple_chain(e, m);
    let mut body = format!("s2^2 = s1^3 + {a}*s1^2 + {b}*s1 + {c}");
    if !chain.is_empty() {
        body = format!("{body} & {chain}");
    }
    vars.splice(0..0, ["s1".to_string(), "s2".to_string()]);
    let domain = format!(
        "(x1 = 0 & x2 = 1 & x3 = 0) | (x3 = 1 & (exists {}. {body} & x1 = {fx} & x2 = {fy}))",
        vars.join(" ")
    );
    let plus = format!(
        "(x1 = 0 & x2 = 1 & x3 = 0 & z1 = y1 & z2 = y2 & z3 = y3) \
         | (y1 = 0 & y2 = 1 & y3 = 0 & z1 = x1 & z2 = x2 & z3 = x3) \
         | (x3 = 1 & y3 = 1 & z3 = 1 & (exists w l. w*(y1 - x1) = 1 & l = (y2 - x2)*w \
            & z1 = l^2 - {a} - x1 - y1 & z2 = l*(x1 - z1) - x2)) \
         | (x3 = 1 & y3 = 1 & z3 = 1 & x1 = y1 & x2 = y2 & (exists l. l*(2*x2) = 3*x1^2 + 2*{a}*x1 + {b} \
            & z1 = l^2 - {a} - 2*x1 & z2 = l*(x1 - z1) - x2)) \
         | (x3 = 1 & y3 = 1 & x1 = y1 & x2 + y2 = 0 & z1 = 0 & z2 = 1 & z3 = 0)"
    );
    let one = match curve::scalar_mul(e, m as i64, p)? {
        Point::Affine { x, y } => vec![x, y, Rat::one()],
        Point::Infinity => return Err(ModelError::Torsion),
    };
    let spec = ModelSpec {
        dimension: 3,
        domain: ring(&domain),
        plus: ring(&plus),
        times: None,
        zero: rat_points(&[0, 1, 0]),
        one: Some(one),
        classes: DeclaredClasses { domain: Class::sigma(1), plus: Class::sigma(1), times: None },
    };
    spec.check_arity()?;
    Ok(spec)
}

/// The tuple image of n under the elliptic model built from `p` with
/// multiplier m.
pub fn elliptic_image(e: &Curve, p: &Point, m: u64, n: i64) -> Result<Vec<Rat>, ModelError> {
    Ok(match curve::scalar_mul(e, n * m as i64, p)? {
        Point::Infinity => rat_points(&[0, 1, 0]),
        Point::Affine { x, y } => vec![x, y, Rat::one()],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{evaluate_bounded, Domain};

    fn ring_f(s: &str) -> Formula {
        parse_formula(s, Signature::Ring).unwrap()
    }

    #[test]
    fn displayed_example_shape() {
        let f = ring_f("exists x1. forall x2. x1^2*x2 + x2 = 0");
        let t = translate(&f, &synthetic_model_spec()).unwrap();
        assert_eq!(t.dummies, ["u1_c1", "u1_c2", "u2_c1", "u2_c2"]);
        let s = t.formula.to_string();
        assert!(s.starts_with("exists x1_c1 x1_c2. x1_c2 = 2*x1_c1 & (forall x2_c1 x2_c2. x2_c2 = 2*x2_c1 -> (exists u1_c1 u1_c2 u2_c1 u2_c2. "), "{s}");
    }

    #[test]
    fn variable_only_formula() {
        let t = translate(&ring_f("exists x. x = x"), &identity_model_spec()).unwrap();
        assert_eq!(t.formula.to_string(), "exists x_c1. x_c1 = x_c1 & x_c1 = x_c1");
        assert!(t.dummies.is_empty());
    }

    #[test]
    fn literals_and_errors() {
        let m = identity_model_spec();
        let t = translate(&ring_f("x = -2"), &m).unwrap();
        let at = |v: i64| -> BTreeMap<String, Rat> { [("x_c1".to_string(), Rat::from_integer(v.into()))].into() };
        let bound = BigInt::from(5);
        assert!(evaluate_bounded(&t.formula, &at(-2), Domain::Z, &bound).unwrap());
        assert!(!evaluate_bounded(&t.formula, &at(2), Domain::Z, &bound).unwrap());
        let mut no_times = m.clone();
        no_times.times = None;
        assert_eq!(translate(&ring_f("x*x = 1"), &no_times), Err(ModelError::MissingTimes));
        let mut no_one = m.clone();
        no_one.one = None;
        assert_eq!(translate(&ring_f("x = 1"), &no_one), Err(ModelError::MissingOne));
    }

    #[test]
    fn bound_table() {
        let b = |f: Class, t: Option<Class>| complexity_bound(f, t, Table::General).unwrap();
        assert_eq!(b(Class::sigma(1), Some(Class::sigma(1))), Class::sigma(1));
        assert_eq!(b(Class::sigma(1), Some(Class::pi(2))), Class::sigma(3));
        assert_eq!(b(Class::pi(2), Some(Class::sigma(2))), Class::pi(3));
        assert_eq!(b(Class::pi(1), None), Class::pi(2));
        assert_eq!(complexity_bound(Class::sigma(1), None, Table::DivModel).unwrap(), Class::sigma(1));
        assert_eq!(complexity_bound(Class::pi(2), None, Table::DivModel).unwrap(), Class::pi(2));
        let pi0 = Class { kind: Quant::Forall, level: 0 };
        assert!(complexity_bound(pi0, None, Table::General).is_err());
    }

    #[test]
    fn model_file_round_trip() {
        for m in [identity_model_spec(), synthetic_model_spec()] {
            m.validate().unwrap();
            let text = m.to_toml();
            assert_eq!(ModelSpec::parse(&text).unwrap(), m);
        }
        let bad = "dimension = 1\ndomain = \"x1 = x2\"\nplus = \"z1 = x1 + y1\"\nzero = [\"0\"]\n[classes]\ndomain = \"Sigma_0\"\nplus = \"Sigma_0\"\n";
        assert!(matches!(ModelSpec::parse(bad), Err(ModelError::Arity { which: "domain", .. })));
    }
}
