//! Elliptic divisibility sequences attached to a rational point: the
//! denominators B_n of x(nP), and on curves with (0,0) in E[2] the odd
//! divisibility sequences A_n, C_n. Includes the divisibility-law checker,
//! the valuation predicate and the primitivity scans.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use thiserror::Error;

use crate::arith::{self, factor, isqrt_exact, primality::is_prime, FactorCache, Factorization, PrimeSet, Rat};
use crate::curve::{self, Curve, CurveError, Point};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum EdsError {
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error("index must be nonzero")]
    ZeroIndex,
    #[error("{0}P is the point at infinity")]
    Infinity(i64),
    #[error("x({0}P) is not a rational square; the point is not in 2E(Q)")]
    NotSquare(i64),
    #[error("sequence only holds terms up to {have}, need {need}")]
    MissingTerms { have: usize, need: usize },
    #[error("A and C sequences need a curve with c = 0")]
    NotTwoTorsionForm,
    #[error("x must be nonzero")]
    ZeroArgument,
}

/// One term of the sequence: nP = (a/B^2, c/B^3) in lowest terms and, when
/// x(nP) is a square on a curve with c = 0, nP = ((A/B)^2, AC/B^3).
///
/// `b` and `big_a` are stored non-negative; `c` and `big_c` carry the sign
/// of y. `psi_sign` is the sign of psi_n(P); `signed_b` applies it to B.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdsTerm {
    pub n: i64,
    pub a: BigInt,
    pub b: BigInt,
    pub c: BigInt,
    pub big_a: Option<BigInt>,
    pub big_c: Option<BigInt>,
    pub psi_sign: i8,
}

impl EdsTerm {
    fn from_point(n: i64, q: &Point, psi_sign: i8, two_torsion: bool) -> Result<Self, EdsError> {
        let t = Self::from_point_unchecked(n, q, psi_sign, two_torsion)?;
        debug_assert!(t.is_coprime());
        Ok(t)
    }

    fn from_point_unchecked(n: i64, q: &Point, psi_sign: i8, two_torsion: bool) -> Result<Self, EdsError> {
        let (x, y) = match q {
            Point::Infinity => return Err(EdsError::Infinity(n)),
            Point::Affine { x, y } => (x, y),
        };
        let b = isqrt_exact(x.denom()).expect("x denominator of a point on an integral model is a square");
        let b3 = &b * &b * &b;
        debug_assert_eq!(y.denom(), &b3);
        let c = y.numer() * (&b3 / y.denom());
        let a = x.numer().clone();
        let (big_a, big_c) = match (two_torsion, isqrt_exact(&a)) {
            (true, Some(ra)) if !ra.is_zero() => {
                let cc = &c / &ra;
                debug_assert_eq!(&cc * &ra, c);
                (Some(ra), Some(cc))
            }
            _ => (None, None),
        };
        Ok(EdsTerm { n, a, b, c, big_a, big_c, psi_sign })
    }

    pub fn signed_b(&self) -> BigInt {
        if self.psi_sign < 0 {
            -&self.b
        } else {
            self.b.clone()
        }
    }

    /// y(nP) * sqrt(x(nP)) = A^2 C / B^4.
    pub fn z(&self) -> Option<Rat> {
        let a = self.big_a.as_ref()?;
        let c = self.big_c.as_ref()?;
        let b2 = &self.b * &self.b;
        Some(Rat::new(a * a * c, &b2 * &b2))
    }

    pub fn get(&self, which: Which) -> Option<&BigInt> {
        match which {
            Which::A => self.big_a.as_ref(),
            Which::B => Some(&self.b),
            Which::C => self.big_c.as_ref(),
        }
    }

    /// Coprimality restricted to the given primes.
    fn is_coprime_at(&self, primes: &[BigInt]) -> bool {
        let parts = [Some(&self.a), Some(&self.c), self.big_a.as_ref(), self.big_c.as_ref()];
        primes.iter().all(|p| {
            !(&self.b % p).is_zero() || parts.iter().flatten().all(|x| !(*x % p).is_zero())
        })
    }

    fn is_coprime(&self) -> bool {
        let mut ok = self.a.gcd(&self.b).is_one() && self.c.gcd(&self.b).is_one();
        if let (Some(a), Some(c)) = (&self.big_a, &self.big_c) {
            ok &= a.gcd(&self.b).is_one() && c.gcd(&self.b).is_one() && !a.is_negative();
        }
        ok
    }
}

/// Which of the sequences A, B, C.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Which {
    A,
    B,
    C,
}

impl std::str::FromStr for Which {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "A" | "a" => Ok(Which::A),
            "B" | "b" => Ok(Which::B),
            "C" | "c" => Ok(Which::C),
            _ => Err(format!("unknown sequence '{s}', expected A, B or C")),
        }
    }
}

impl fmt::Display for Which {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Which::A => "A",
            Which::B => "B",
            Which::C => "C",
        })
    }
}

/// The single term at index n (negative n allowed).
pub fn term(e: &Curve, p: &Point, n: i64) -> Result<EdsTerm, EdsError> {
    if n == 0 {
        return Err(EdsError::ZeroIndex);
    }
    let q = curve::scalar_mul(e, n, p)?;
    let m = n.unsigned_abs() as usize;
    let psi = curve::psi_values(e, p, m.max(4))?;
    let mut sign = sign_of(&psi[m]);
    if n < 0 {
        sign = -sign;
    }
    EdsTerm::from_point(n, &q, sign, e.two_torsion_form())
}

fn sign_of(r: &Rat) -> i8 {
    if r.is_negative() {
        -1
    } else if r.is_zero() {
        0
    } else {
        1
    }
}

/// Terms 1..=n_max of the sequence attached to (E, P).
#[derive(Debug, Clone)]
pub struct EdsSequence {
    pub curve: Curve,
    pub point: Point,
    points: Vec<Point>,
    terms: Vec<EdsTerm>,
}

impl EdsSequence {
    /// Terms from integer-scaled division polynomials. Numerator and
    /// denominator of x(nP) can only share primes where P is singular, so
    /// only those valuations are compared.
    pub fn compute(e: &Curve, p: &Point, n_max: usize) -> Result<Self, EdsError> {
        let (x, y) = match p {
            Point::Infinity => return Err(EdsError::Infinity(1)),
            Point::Affine { x, y } => (x, y),
        };
        e.check(p)?;
        if y.is_zero() {
            return Err(EdsError::Infinity(2));
        }
        let w = isqrt_exact(x.denom()).expect("x denominator of a point on an integral model is a square");
        let u = x.numer().clone();
        let v = y.numer().clone();
        let ps = curve::psi_scaled(e, p, n_max + 2)?;
        let singular: Vec<BigInt> = hypotheses(e, p)?.singular_primes;
        let mut watch = singular.clone();
        if !w.is_one() {
            watch.extend(factor(&w).factors.into_keys());
        }
        let psi = |k: i64| -> BigInt {
            if k == -1 {
                -BigInt::one()
            } else {
                ps[k as usize].clone()
            }
        };
        let four_v = &v * 4i32;
        let mut terms = Vec::with_capacity(n_max);
        let mut points = Vec::with_capacity(n_max);
        for n in 1..=n_max as i64 {
            let pn = psi(n);
            if pn.is_zero() {
                return Err(EdsError::Infinity(n));
            }
            let phi = &u * &pn * &pn - psi(n + 1) * psi(n - 1);
            let den = &w * &pn;
            let mut s = BigInt::one();
            for q in &singular {
                let k = arith::val_int(q, &phi).min(2 * arith::val_int(q, &den));
                debug_assert!(k % 2 == 0);
                s *= q.pow((k / 2) as u32);
            }
            let s2 = &s * &s;
            let a = &phi / &s2;
            let b = (&den / &s).abs();
            let wn = psi(n + 2) * psi(n - 1) * psi(n - 1) - psi(n - 2) * psi(n + 1) * psi(n + 1);
            let mut c = wn / (&four_v * &s2 * &s);
            if den.is_negative() {
                c = -c;
            }
            let b2 = &b * &b;
            let q = Point::new(Rat::new_raw(a, b2.clone()), Rat::new_raw(c, &b2 * &b));
            let t = EdsTerm::from_point_unchecked(n, &q, sign_of(&Rat::from_integer(pn)), e.two_torsion_form())?;
            debug_assert!(t.is_coprime_at(&watch));
            terms.push(t);
            points.push(q);
        }
        Ok(EdsSequence { curve: e.clone(), point: p.clone(), points, terms })
    }

    /// Same terms through repeated rational point addition.
    pub fn compute_by_addition(e: &Curve, p: &Point, n_max: usize) -> Result<Self, EdsError> {
        if p.is_infinity() {
            return Err(EdsError::Infinity(1));
        }
        let points = curve::multiples(e, p, n_max)?;
        let psi = curve::psi_values(e, p, n_max.max(4))?;
        let terms = points
            .iter()
            .enumerate()
            .map(|(i, q)| EdsTerm::from_point(i as i64 + 1, q, sign_of(&psi[i + 1]), e.two_torsion_form()))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(EdsSequence { curve: e.clone(), point: p.clone(), points, terms })
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[EdsTerm] {
        &self.terms
    }

    pub fn term(&self, n: usize) -> Result<&EdsTerm, EdsError> {
        if n == 0 {
            return Err(EdsError::ZeroIndex);
        }
        self.terms.get(n - 1).ok_or(EdsError::MissingTerms { have: self.terms.len(), need: n })
    }

    pub fn point_at(&self, n: usize) -> Result<&Point, EdsError> {
        if n == 0 {
            return Err(EdsError::ZeroIndex);
        }
        self.points.get(n - 1).ok_or(EdsError::MissingTerms { have: self.points.len(), need: n })
    }

    pub fn value(&self, n: usize, which: Which) -> Result<BigInt, EdsError> {
        let t = self.term(n)?;
        if which != Which::B && !self.curve.two_torsion_form() {
            return Err(EdsError::NotTwoTorsionForm);
        }
        t.get(which).cloned().ok_or(EdsError::NotSquare(n as i64))
    }

    fn z(&self, n: usize) -> Result<Rat, EdsError> {
        if !self.curve.two_torsion_form() {
            return Err(EdsError::NotTwoTorsionForm);
        }
        self.term(n)?.z().ok_or(EdsError::NotSquare(n as i64))
    }
}

/// Pairwise coprime base: every input is a product of powers of its elements.
pub fn coprime_base(nums: &[BigInt]) -> Vec<BigInt> {
    let mut base: Vec<BigInt> = nums.iter().map(|n| n.abs()).filter(|n| n > &BigInt::one()).collect();
    loop {
        let mut split = None;
        'outer: for i in 0..base.len() {
            for j in i + 1..base.len() {
                let d = base[i].gcd(&base[j]);
                if !d.is_one() {
                    split = Some((i, j, d));
                    break 'outer;
                }
            }
        }
        match split {
            None => break,
            Some((i, j, d)) => {
                let bj = base.swap_remove(j);
                let bi = base.swap_remove(i);
                for v in [&bi / &d, &bj / &d, d] {
                    if v > BigInt::one() {
                        base.push(v);
                    }
                }
            }
        }
    }
    base.sort();
    base.dedup();
    base
}

fn base_val(n: &BigInt, beta: &BigInt) -> i64 {
    arith::val_int(beta, n) as i64
}

/// The predicate: every prime of R at which x has odd valuation has
/// v(x) < v(y^2). Evaluated through a coprime base so only base elements
/// that could fail are ever factored.
pub fn d_r(x: &Rat, y: &Rat, r: &PrimeSet) -> Result<bool, EdsError> {
    if x.is_zero() {
        return Err(EdsError::ZeroArgument);
    }
    if y.is_zero() {
        return Ok(true);
    }
    let parts = [x.numer().abs(), x.denom().clone(), y.numer().abs(), y.denom().clone()];
    for beta in coprime_base(&parts) {
        let vx = base_val(&parts[0], &beta) - base_val(&parts[1], &beta);
        if vx % 2 == 0 {
            continue;
        }
        let vy = base_val(&parts[2], &beta) - base_val(&parts[3], &beta);
        if vx < 2 * vy {
            continue;
        }
        let fails = match r {
            PrimeSet::AllPrimes => isqrt_exact(&beta).is_none(),
            PrimeSet::InertIn(_) => factor(&beta)
                .factors
                .iter()
                .any(|(p, e)| e % 2 == 1 && r.contains(p)),
        };
        if fails {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Decides m | n through the predicate on y_k sqrt(x_k) for k = m, n, m+n.
pub fn divides_via_eds(seq: &EdsSequence, m: usize, n: usize, r: &PrimeSet) -> Result<bool, EdsError> {
    let zm = seq.z(m)?;
    if zm.is_zero() {
        return Err(EdsError::ZeroArgument);
    }
    for k in [m, n, m + n] {
        let t = seq.term(k)?;
        if let (Some(a), Some(c), Some(z)) = (&t.big_a, &t.big_c, t.z()) {
            let b2 = &t.b * &t.b;
            let w = Rat::new(&b2 * &b2, a * a);
            debug_assert_eq!(Rat::from_integer(c.clone()), z * w);
        }
    }
    Ok(d_r(&zm, &seq.z(n)?, r)? || d_r(&zm, &seq.z(m + n)?, r)?)
}

/// Hypotheses of the divisibility laws for a pair (E, P).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hypotheses {
    pub b_squarefree: bool,
    pub descent_disc_squarefree: bool,
    pub singular_primes: Vec<BigInt>,
    /// Primes where a hypothesis fails: p^2 | b, p^2 | a^2 - 4b, or P singular mod p.
    pub expected_primes: BTreeSet<BigInt>,
}

pub fn hypotheses(e: &Curve, p: &Point) -> Result<Hypotheses, EdsError> {
    let mut expected = BTreeSet::new();
    let mut squarefree = |n: &BigInt| -> bool {
        if n.is_zero() {
            return false;
        }
        let f = factor(n);
        let mut ok = true;
        for (q, k) in &f.factors {
            if *k >= 2 {
                expected.insert(q.clone());
                ok = false;
            }
        }
        ok
    };
    let b_sf = squarefree(&e.b);
    let d_sf = squarefree(&(&e.a * &e.a - &e.b * 4i32));
    let mut singular = Vec::new();
    for q in curve::bad_primes(e) {
        if let Some(qq) = q.to_u64() {
            if curve::reduction_data(e, qq, p)?.point_singular {
                singular.push(q.clone());
                expected.insert(q);
            }
        }
    }
    Ok(Hypotheses { b_squarefree: b_sf, descent_disc_squarefree: d_sf, singular_primes: singular, expected_primes: expected })
}

/// The divisibility laws checked by `check_identities`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Law {
    /// v(B_tn) = v(B_n) + v(t) at primes of B_n.
    BValuationGrowth,
    /// B_m | B_n when m | n.
    BDivisibility,
    /// gcd(B_m, B_n) = B_gcd(m,n).
    BStrongDivisibility,
    /// gcd(A_n, C_n) divides b, with v(b) >= 2 at every common prime.
    CommonFactorOfAC,
    /// |B_2n| = |2 A_n B_n C_n|.
    DoubleIndex,
    /// gcd(A_m B_m, A_n B_n) = A_d B_d.
    ProductStrongDivisibility,
    /// A_n B_n agrees with the B-sequence of the descended point.
    DescentDenominator,
    /// C_n agrees with the A-sequence of the descended point.
    DescentNumerator,
    /// X_n | X_tn for odd t.
    OddDivisibility(Which),
    /// v(X_tn) = v(X_n) + v(t) for odd t at primes of X_n.
    OddValuationGrowth(Which),
    /// gcd(X_n, X_tn) = 1 for even t.
    EvenCoprime(Which),
}

impl fmt::Display for Law {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Law::BValuationGrowth => write!(f, "B valuation growth"),
            Law::BDivisibility => write!(f, "B divisibility"),
            Law::BStrongDivisibility => write!(f, "B strong divisibility"),
            Law::CommonFactorOfAC => write!(f, "gcd(A,C) divides b"),
            Law::DoubleIndex => write!(f, "|B_2n| = |2 A_n B_n C_n|"),
            Law::ProductStrongDivisibility => write!(f, "AB strong divisibility"),
            Law::DescentDenominator => write!(f, "AB equals descended B"),
            Law::DescentNumerator => write!(f, "C equals descended A"),
            Law::OddDivisibility(w) => write!(f, "{w} odd divisibility"),
            Law::OddValuationGrowth(w) => write!(f, "{w} odd valuation growth"),
            Law::EvenCoprime(w) => write!(f, "{w} even-multiple coprimality"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdentityFailure {
    pub law: Law,
    pub indices: Vec<usize>,
    pub primes: Vec<BigInt>,
    /// All witness primes violate a hypothesis of the law.
    pub expected: bool,
}

impl fmt::Display for IdentityFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let idx: Vec<String> = self.indices.iter().map(|i| i.to_string()).collect();
        let ps: Vec<String> = self.primes.iter().map(|p| p.to_string()).collect();
        write!(
            f,
            "{} at ({}) primes [{}]{}",
            self.law,
            idx.join(","),
            ps.join(","),
            if self.expected { " expected" } else { "" }
        )
    }
}

/// Raw and normalized outcome of |B_2n| = |2 A_n B_n C_n|.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DoubleIndexRow {
    pub n: usize,
    /// |2 A_n B_n C_n| / |B_2n|.
    pub ratio: Rat,
    pub raw_holds: bool,
    /// Holds once primes where P is singular are divided out.
    pub normalized_holds: bool,
}

#[derive(Debug, Clone)]
pub struct IdentityReport {
    pub hypotheses: Hypotheses,
    pub checked: BTreeMap<Law, usize>,
    pub failures: Vec<IdentityFailure>,
    pub double_index: Vec<DoubleIndexRow>,
}

impl IdentityReport {
    pub fn unexpected(&self) -> impl Iterator<Item = &IdentityFailure> {
        self.failures.iter().filter(|f| !f.expected)
    }
}

struct Checker<'a> {
    expected: &'a BTreeSet<BigInt>,
    checked: BTreeMap<Law, usize>,
    failures: Vec<IdentityFailure>,
}

impl Checker<'_> {
    fn record(&mut self, law: Law, ok: bool, indices: &[usize], witness: impl FnOnce() -> BigInt) {
        *self.checked.entry(law).or_insert(0) += 1;
        if ok {
            return;
        }
        let w = witness().abs();
        let primes: Vec<BigInt> = if w.is_zero() || w.is_one() {
            Vec::new()
        } else {
            factor(&w).factors.keys().cloned().collect()
        };
        let expected = !primes.is_empty() && primes.iter().all(|p| self.expected.contains(p));
        self.failures.push(IdentityFailure { law, indices: indices.to_vec(), primes, expected });
    }
}

/// Part of g supported on the primes of `support`.
fn supp_part(g: &BigInt, support: &BigInt) -> BigInt {
    let mut g = g.abs();
    let mut h = BigInt::one();
    loop {
        let d = g.gcd(support);
        if d.is_one() || d.is_zero() {
            return h;
        }
        g /= &d;
        h *= d;
    }
}

/// Numerator times denominator of a/b in lowest terms: the primes where a != b.
fn mismatch(a: &BigInt, b: &BigInt) -> BigInt {
    let g = a.gcd(b);
    if g.is_zero() {
        return BigInt::zero();
    }
    (a / &g) * (b / &g)
}

fn check_valuation_growth(ck: &mut Checker, law: Law, xn: &BigInt, xtn: &BigInt, n: usize, t: usize) {
    if xn.abs().is_one() {
        return;
    }
    if !(xtn % xn).is_zero() {
        ck.record(law, false, &[n, t], || xn / xn.gcd(xtn));
        return;
    }
    let h = supp_part(&(xtn / xn), xn);
    let tb = BigInt::from(t);
    let tp = supp_part(&tb, xn);
    ck.record(law, h == tp, &[n, t], || mismatch(&h, &tp));
}

/// Checks the divisibility laws for m, n <= n_max and multipliers t <= t_max.
/// Failures at primes that violate a hypothesis are tagged expected.
pub fn check_identities(e: &Curve, p: &Point, n_max: usize, t_max: usize) -> Result<IdentityReport, EdsError> {
    let need = (n_max * t_max.max(2)).max(2 * n_max);
    let seq = EdsSequence::compute(e, p, need)?;
    let hyp = hypotheses(e, p)?;
    let mut ck = Checker { expected: &hyp.expected_primes, checked: BTreeMap::new(), failures: Vec::new() };
    let b = |k: usize| seq.terms[k - 1].b.clone();

    for n in 1..=n_max {
        for t in 2..=t_max {
            let (bn, btn) = (b(n), b(t * n));
            ck.record(Law::BDivisibility, (&btn % &bn).is_zero(), &[n, t * n], || &bn / bn.gcd(&btn));
            check_valuation_growth(&mut ck, Law::BValuationGrowth, &bn, &btn, n, t);
        }
    }
    for m in 1..=n_max {
        for n in m + 1..=n_max {
            let d = m.gcd(&n);
            let g = b(m).gcd(&b(n));
            ck.record(Law::BStrongDivisibility, g == b(d), &[m, n], || mismatch(&g, &b(d)));
        }
    }

    let mut double_index = Vec::new();
    let two_torsion = e.two_torsion_form() && seq.terms.iter().all(|t| t.big_a.is_some());
    if two_torsion {
        let a = |k: usize| seq.terms[k - 1].big_a.clone().unwrap();
        let c = |k: usize| seq.terms[k - 1].big_c.clone().unwrap().abs();
        for n in 1..=n_max {
            let g = a(n).gcd(&c(n));
            let ok = (&e.b % &g).is_zero()
                && factor(&g).factors.keys().all(|q| arith::val_int(q, &e.b) >= 2);
            ck.record(Law::CommonFactorOfAC, g.is_one() || ok, &[n], || g.clone());

            let lhs = a(n) * b(n) * c(n) * 2i32;
            let rhs = b(2 * n);
            let ratio = Rat::new(lhs.clone(), rhs.clone());
            let raw = lhs == rhs;
            let off = mismatch(&lhs, &rhs);
            let normalized = raw || factor(&off).factors.keys().all(|q| hyp.singular_primes.contains(q));
            ck.record(Law::DoubleIndex, raw, &[n], || off.clone());
            double_index.push(DoubleIndexRow { n, ratio, raw_holds: raw, normalized_holds: normalized });
        }
        for m in 1..=n_max {
            for n in m + 1..=n_max {
                let d = m.gcd(&n);
                let g = (a(m) * b(m)).gcd(&(a(n) * b(n)));
                let want = a(d) * b(d);
                ck.record(Law::ProductStrongDivisibility, g == want, &[m, n], || mismatch(&g, &want));
            }
        }
        let e2 = curve::descent_curve(e)?;
        for n in 1..=n_max {
            let q = curve::descent_map(e, seq.point_at(n)?)?;
            let t2 = EdsTerm::from_point(n as i64, &q, 1, true)?;
            let ab = a(n) * b(n);
            ck.record(Law::DescentDenominator, t2.b == ab, &[n], || mismatch(&t2.b, &ab));
            let a2 = t2.big_a.clone().unwrap_or_default();
            ck.record(Law::DescentNumerator, a2 == c(n), &[n], || mismatch(&a2, &c(n)));
            debug_assert!(e2.contains(&q));
        }
        for (which, get) in [(Which::A, &a as &dyn Fn(usize) -> BigInt), (Which::C, &c)] {
            for n in 1..=n_max {
                for t in 2..=t_max {
                    let (xn, xtn) = (get(n), get(t * n));
                    if t % 2 == 1 {
                        ck.record(Law::OddDivisibility(which), (&xtn % &xn).is_zero(), &[n, t * n], || {
                            &xn / xn.gcd(&xtn)
                        });
                        check_valuation_growth(&mut ck, Law::OddValuationGrowth(which), &xn, &xtn, n, t);
                    } else {
                        let g = xn.gcd(&xtn);
                        ck.record(Law::EvenCoprime(which), g.is_one(), &[n, t * n], || g.clone());
                    }
                }
            }
        }
    }
    let (checked, failures) = (ck.checked, ck.failures);
    Ok(IdentityReport { hypotheses: hyp, checked, failures, double_index })
}

/// Primes of R dividing X_n (to odd order if asked) and no earlier X_i.
pub fn primitive_divisors(
    seq: &EdsSequence,
    n: usize,
    which: Which,
    r: &PrimeSet,
    odd_order: bool,
    cache: &FactorCache,
) -> Result<Vec<BigInt>, EdsError> {
    let xn = seq.value(n, which)?;
    if xn.is_zero() {
        return Ok(Vec::new());
    }
    let f = cache.factor(&xn);
    primitive_from_factorization(seq, n, which, r, odd_order, &f)
}

fn primitive_from_factorization(
    seq: &EdsSequence,
    n: usize,
    which: Which,
    r: &PrimeSet,
    odd_order: bool,
    f: &Factorization,
) -> Result<Vec<BigInt>, EdsError> {
    let earlier = (1..n).map(|i| seq.value(i, which)).collect::<Result<Vec<_>, _>>()?;
    Ok(f.factors
        .iter()
        .filter(|(p, e)| (!odd_order || *e % 2 == 1) && r.contains(p))
        .filter(|(p, _)| earlier.iter().all(|x| !(x % *p).is_zero()))
        .map(|(p, _)| p.clone())
        .collect())
}

/// Indices of the form 2^a p^b with p an odd prime, up to n_max.
pub fn weak_indices(n_max: usize) -> Vec<usize> {
    (1..=n_max)
        .filter(|&n| {
            let mut m = n;
            while m % 2 == 0 {
                m /= 2;
            }
            if m == 1 {
                return true;
            }
            let q = (3..=m).find(|q| m % q == 0).unwrap();
            while m % q == 0 {
                m /= q;
            }
            m == 1
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScanOptions {
    pub which: Which,
    pub odd_order: bool,
    pub weak: bool,
    pub n_max: usize,
    /// Terms with more digits than this are not factored.
    pub digit_cap: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScanRow {
    pub n: usize,
    pub value: BigInt,
    pub factors: Option<Factorization>,
    pub primitive: Vec<BigInt>,
    pub odd_order_primitive: Vec<BigInt>,
    pub tags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScanReport {
    pub rows: Vec<ScanRow>,
    pub failing: Vec<usize>,
    pub truncated: Vec<usize>,
}

impl ScanReport {
    pub fn largest_failing(&self) -> Option<usize> {
        self.failing.last().copied()
    }
}

/// Primitive divisors of X_n from R for each scanned index; an index fails
/// when it has none (of odd order, if asked).
pub fn primitivity_scan(
    seq: &EdsSequence,
    r: &PrimeSet,
    opts: ScanOptions,
    cache: &FactorCache,
) -> Result<ScanReport, EdsError> {
    let indices: Vec<usize> = if opts.weak { weak_indices(opts.n_max) } else { (1..=opts.n_max).collect() };
    let rows = indices
        .par_iter()
        .map(|&n| -> Result<ScanRow, EdsError> {
            let value = seq.value(n, opts.which)?;
            let digits = value.abs().to_string().len();
            if value.is_zero() || digits > opts.digit_cap {
                let tag = if value.is_zero() { "zero" } else { "truncated" };
                return Ok(ScanRow {
                    n,
                    value,
                    factors: None,
                    primitive: Vec::new(),
                    odd_order_primitive: Vec::new(),
                    tags: vec![tag.to_string()],
                });
            }
            let f = cache.factor(&value);
            let primitive = primitive_from_factorization(seq, n, opts.which, r, false, &f)?;
            let odd: Vec<BigInt> =
                primitive.iter().filter(|p| f.exponent(p) % 2 == 1).cloned().collect();
            let mut tags = Vec::new();
            if !f.probable.is_empty() {
                tags.push("probable-prime".to_string());
            }
            Ok(ScanRow { n, value, factors: Some(f), primitive, odd_order_primitive: odd, tags })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut failing = Vec::new();
    let mut truncated = Vec::new();
    for row in &rows {
        if row.factors.is_none() {
            truncated.push(row.n);
            continue;
        }
        let hits = if opts.odd_order { &row.odd_order_primitive } else { &row.primitive };
        if hits.is_empty() {
            failing.push(row.n);
        }
    }
    Ok(ScanReport { rows, failing, truncated })
}

/// Prime divisors of A_n and B_n for odd n that are not +-1 mod 5 (p = 2 skipped).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResidueScan {
    pub checked: Vec<(usize, Which, BigInt)>,
    pub exceptions: Vec<(usize, Which, BigInt)>,
}

impl ResidueScan {
    pub fn passes(&self) -> bool {
        self.exceptions.is_empty()
    }
}

/// Runs the mod-5 residue check on y^2 = x^3 + 12x^2 + 11x, P = (1/4, 15/8).
pub fn rubin_scan(n_max: usize, cache: &FactorCache) -> Result<ResidueScan, EdsError> {
    let e = Curve::from_i64(12, 11, 0)?;
    let p = Point::new(Rat::new(1.into(), 4.into()), Rat::new(15.into(), 8.into()));
    let seq = EdsSequence::compute(&e, &p, n_max)?;
    let mut checked = Vec::new();
    let mut exceptions = Vec::new();
    let five = BigInt::from(5);
    for n in (1..=n_max).step_by(2) {
        for which in [Which::A, Which::B] {
            let v = seq.value(n, which)?;
            for q in cache.factor(&v).factors.keys() {
                if q == &BigInt::from(2) {
                    continue;
                }
                let r = q.mod_floor(&five);
                checked.push((n, which, q.clone()));
                if !(r.is_one() || r == BigInt::from(4)) {
                    exceptions.push((n, which, q.clone()));
                }
            }
        }
    }
    Ok(ResidueScan { checked, exceptions })
}

/// A solution (A, B, t, X, Y) of (A^2+B^2)(A^2+11B^2) = 225 t^2, X^2 - 5Y^2 = +-t.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConicSolution {
    pub a: i64,
    pub b: i64,
    pub t: i64,
    pub x: i64,
    pub y: i64,
}

/// Box search for the conic fibration with |A|, |B|, |X|, |Y| <= bound.
pub fn conic_fibration_scan(bound: i64) -> Vec<ConicSolution> {
    let mut out = Vec::new();
    for a in -bound..=bound {
        for b in -bound..=bound {
            if a.gcd(&b) != 1 {
                continue;
            }
            let lhs = (a as i128 * a as i128 + b as i128 * b as i128)
                * (a as i128 * a as i128 + 11 * b as i128 * b as i128);
            if lhs % 225 != 0 {
                continue;
            }
            let q = lhs / 225;
            let t = (q as f64).sqrt().round() as i128;
            let t = (t - 2..=t + 2).find(|s| *s >= 0 && s * s == q);
            let Some(t) = t else { continue };
            for x in -bound..=bound {
                let x2 = x as i128 * x as i128;
                for target in [t, -t] {
                    let y2x5 = x2 - target;
                    if y2x5 < 0 || y2x5 % 5 != 0 {
                        continue;
                    }
                    let y2 = y2x5 / 5;
                    let y = (y2 as f64).sqrt().round() as i128;
                    if let Some(y) = (y - 1..=y + 1).find(|s| *s >= 0 && s * s == y2) {
                        if y > bound as i128 {
                            continue;
                        }
                        for yy in if y == 0 { vec![0] } else { vec![y, -y] } {
                            let s = ConicSolution { a, b, t: t as i64, x, y: yy as i64 };
                            if !out.contains(&s) {
                                out.push(s);
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

/// Whether the prime p lies in R, rejecting non-primes.
pub fn prime_in(p: &BigInt, r: &PrimeSet) -> bool {
    is_prime(p) && r.contains(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Rat {
        Rat::new(n.into(), d.into())
    }

    fn exa() -> EdsSequence {
        let e = Curve::from_i64(12, 11, 0).unwrap();
        EdsSequence::compute(&e, &Point::new(r(1, 4), r(15, 8)), 8).unwrap()
    }

    #[test]
    fn division_polynomial_route_matches_addition() {
        let dense = Curve::from_i64(7, 2, 0).unwrap();
        for (e, p) in [
            (exa().curve, exa().point),
            (dense.clone(), Point::from_ints(-2, 4)),
            (dense, Point::new(r(1, 16), r(-25, 64))),
        ] {
            let fast = EdsSequence::compute(&e, &p, 14).unwrap();
            let slow = EdsSequence::compute_by_addition(&e, &p, 14).unwrap();
            assert_eq!(fast.terms(), slow.terms());
            assert_eq!(fast.points, slow.points);
        }
    }

    #[test]
    fn exa_first_terms() {
        let s = exa();
        let t1 = s.term(1).unwrap();
        assert_eq!(
            (t1.big_a.clone().unwrap(), t1.b.clone(), t1.big_c.clone().unwrap()),
            (1.into(), 2.into(), 15.into())
        );
        let t2 = s.term(2).unwrap();
        assert_eq!(
            (t2.big_a.clone().unwrap(), t2.b.clone(), t2.big_c.clone().unwrap()),
            (35.into(), 12.into(), (-1961).into())
        );
        assert_eq!(s.term(4).unwrap().b, BigInt::from(1647240));
    }

    #[test]
    fn single_term_matches_sequence_and_negation() {
        let s = exa();
        let t = term(&s.curve, &s.point, 3).unwrap();
        assert_eq!(&t, s.term(3).unwrap());
        let m = term(&s.curve, &s.point, -3).unwrap();
        assert_eq!(m.c, -t.c.clone());
        assert_eq!(m.psi_sign, -t.psi_sign);
        assert_eq!(term(&s.curve, &s.point, 0), Err(EdsError::ZeroIndex));
    }

    #[test]
    fn integral_point_has_unit_denominator() {
        let e = Curve::from_i64(7, 2, 0).unwrap();
        let s = EdsSequence::compute(&e, &Point::from_ints(-2, 4), 4).unwrap();
        let bs: Vec<BigInt> = s.terms().iter().map(|t| t.b.clone()).collect();
        assert_eq!(bs, vec![1.into(), 4.into(), 33.into(), 200.into()]);
        assert!(s.term(1).unwrap().big_a.is_none());
    }

    #[test]
    fn predicate_examples() {
        let all = PrimeSet::AllPrimes;
        assert!(d_r(&r(1, 1), &r(7, 3), &all).unwrap());
        assert!(d_r(&r(12, 5), &r(3, 1), &all).unwrap());
        assert!(!d_r(&r(12, 5), &r(5, 1), &all).unwrap());
        assert!(d_r(&r(12, 5), &Rat::zero(), &all).unwrap());
        assert_eq!(d_r(&Rat::zero(), &r(1, 1), &all), Err(EdsError::ZeroArgument));
        // 3 is inert in Q(sqrt 5), 2 too; 11 splits
        let r5 = PrimeSet::inert_in([BigInt::from(5)]).unwrap();
        assert!(!d_r(&r(3, 1), &r(1, 1), &r5).unwrap());
        assert!(d_r(&r(11, 1), &r(1, 1), &r5).unwrap());
    }

    #[test]
    fn coprime_base_refines() {
        let base = coprime_base(&[12.into(), 18.into(), 35.into()]);
        for i in 0..base.len() {
            for j in i + 1..base.len() {
                assert!(base[i].gcd(&base[j]).is_one());
            }
        }
        assert_eq!(base, vec![2.into(), 3.into(), 35.into()]);
    }

    #[test]
    fn primitive_divisors_of_exa() {
        let s = exa();
        let cache = FactorCache::new(1);
        let all = PrimeSet::AllPrimes;
        let p3 = primitive_divisors(&s, 3, Which::B, &all, false, &cache).unwrap();
        assert_eq!(p3, vec![29.into(), 41.into()]);
        let p6 = primitive_divisors(&s, 6, Which::B, &all, false, &cache).unwrap();
        assert!(p6.contains(&BigInt::from(467)) && p6.contains(&BigInt::from(2521)));
        assert!(primitive_divisors(&s, 1, Which::A, &all, false, &cache).unwrap().is_empty());
    }

    #[test]
    fn weak_index_generator() {
        let w = weak_indices(24);
        for n in [1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 16, 17, 18, 19, 23, 24] {
            assert!(w.contains(&n), "{n}");
        }
        for n in [15, 21] {
            assert!(!w.contains(&n));
        }
        assert!(!weak_indices(30).contains(&30));
    }

    #[test]
    fn conic_scan_examples() {
        let sols = conic_fibration_scan(2);
        assert!(sols.contains(&ConicSolution { a: 1, b: 2, t: 1, x: 1, y: 0 }));
        assert!(!sols.iter().any(|s| s.a == 2 && s.b == 1));
        assert!(conic_fibration_scan(0).is_empty());
    }

    #[test]
    fn hypotheses_of_exa() {
        let s = exa();
        let h = hypotheses(&s.curve, &s.point).unwrap();
        assert!(h.b_squarefree);
        assert!(!h.descent_disc_squarefree);
        assert!(h.expected_primes.contains(&BigInt::from(5)));
    }
}
