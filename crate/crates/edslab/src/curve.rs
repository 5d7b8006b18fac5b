//! Exact arithmetic on integral Weierstrass curves y^2 = x^3 + ax^2 + bx + c:
//! the group law, division polynomial values, the 2-isogeny descent map,
//! Nagell-Lutz torsion and reduction modulo primes.

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::arith::{self, factor, isqrt_exact, parse_rational, ArithError, Rat};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum CurveError {
    #[error("singular curve: discriminant is zero")]
    Singular,
    #[error("point is not on the curve")]
    NotOnCurve,
    #[error("operation needs an affine point, got the point at infinity")]
    Infinity,
    #[error("descent needs a curve with c = 0")]
    NotTwoTorsionForm,
    #[error("descent map undefined at x = 0")]
    DescentKernel,
    #[error("cannot parse {0}")]
    Parse(String),
    #[error(transparent)]
    Arith(#[from] ArithError),
}

/// The curve y^2 = x^3 + ax^2 + bx + c with integer coefficients.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Curve {
    pub a: BigInt,
    pub b: BigInt,
    pub c: BigInt,
    disc: BigInt,
}

impl Curve {
    pub fn new(a: BigInt, b: BigInt, c: BigInt) -> Result<Self, CurveError> {
        let mut e = Curve { a, b, c, disc: BigInt::zero() };
        let (b2, b4, b6, b8) = e.b_invariants();
        let disc = -(&b2 * &b2 * &b8) - BigInt::from(8) * &b4 * &b4 * &b4 - BigInt::from(27) * &b6 * &b6
            + BigInt::from(9) * &b2 * &b4 * &b6;
        if disc.is_zero() {
            return Err(CurveError::Singular);
        }
        e.disc = disc;
        Ok(e)
    }

    pub fn from_i64(a: i64, b: i64, c: i64) -> Result<Self, CurveError> {
        Curve::new(a.into(), b.into(), c.into())
    }

    /// Parses `a,b,c`.
    pub fn parse(s: &str) -> Result<Self, CurveError> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(CurveError::Parse(format!("curve '{s}': expected a,b,c")));
        }
        let mut v = Vec::new();
        for p in parts {
            v.push(p.parse::<BigInt>().map_err(|_| CurveError::Parse(format!("curve '{s}'")))?);
        }
        let c = v.pop().unwrap();
        let b = v.pop().unwrap();
        let a = v.pop().unwrap();
        Curve::new(a, b, c)
    }

    /// (b2, b4, b6, b8) for a1 = a3 = 0, a2 = a, a4 = b, a6 = c.
    pub fn b_invariants(&self) -> (BigInt, BigInt, BigInt, BigInt) {
        let b2 = &self.a * 4;
        let b4 = &self.b * 2;
        let b6 = &self.c * 4;
        let b8 = &self.a * &self.c * 4 - &self.b * &self.b;
        (b2, b4, b6, b8)
    }

    pub fn discriminant(&self) -> &BigInt {
        &self.disc
    }

    /// True when (0,0) is a rational 2-torsion point.
    pub fn two_torsion_form(&self) -> bool {
        self.c.is_zero()
    }

    pub fn rhs(&self, x: &Rat) -> Rat {
        let a = Rat::from_integer(self.a.clone());
        let b = Rat::from_integer(self.b.clone());
        let c = Rat::from_integer(self.c.clone());
        ((x + a) * x + b) * x + c
    }

    pub fn contains(&self, p: &Point) -> bool {
        match p {
            Point::Infinity => true,
            Point::Affine { x, y } => y * y == self.rhs(x),
        }
    }

    pub fn check(&self, p: &Point) -> Result<(), CurveError> {
        if self.contains(p) {
            Ok(())
        } else {
            Err(CurveError::NotOnCurve)
        }
    }
}

impl fmt::Display for Curve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.a, self.b, self.c)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Point {
    Infinity,
    Affine { x: Rat, y: Rat },
}

impl Point {
    pub fn new(x: Rat, y: Rat) -> Self {
        Point::Affine { x, y }
    }

    pub fn from_ints(x: i64, y: i64) -> Self {
        Point::new(arith::rat_int(x), arith::rat_int(y))
    }

    /// Parses `xn/xd,yn/yd`.
    pub fn parse(s: &str) -> Result<Self, CurveError> {
        let (x, y) = s
            .split_once(',')
            .ok_or_else(|| CurveError::Parse(format!("point '{s}': expected x,y")))?;
        Ok(Point::new(parse_rational(x)?, parse_rational(y)?))
    }

    pub fn is_infinity(&self) -> bool {
        matches!(self, Point::Infinity)
    }

    pub fn x(&self) -> Option<&Rat> {
        match self {
            Point::Affine { x, .. } => Some(x),
            Point::Infinity => None,
        }
    }

    pub fn y(&self) -> Option<&Rat> {
        match self {
            Point::Affine { y, .. } => Some(y),
            Point::Infinity => None,
        }
    }

    pub fn neg(&self) -> Point {
        match self {
            Point::Infinity => Point::Infinity,
            Point::Affine { x, y } => Point::new(x.clone(), -y),
        }
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Point::Infinity => write!(f, "O"),
            Point::Affine { x, y } => write!(f, "({x}, {y})"),
        }
    }
}

/// Chord-tangent sum without membership checks.
pub(crate) fn add_unchecked(e: &Curve, p: &Point, q: &Point) -> Point {
    let (x1, y1, x2, y2) = match (p, q) {
        (Point::Infinity, _) => return q.clone(),
        (_, Point::Infinity) => return p.clone(),
        (Point::Affine { x: x1, y: y1 }, Point::Affine { x: x2, y: y2 }) => (x1, y1, x2, y2),
    };
    let a = Rat::from_integer(e.a.clone());
    let lambda = if x1 == x2 {
        if (y1 + y2).is_zero() {
            return Point::Infinity;
        }
        let b = Rat::from_integer(e.b.clone());
        (x1 * x1 * Rat::from_integer(3.into()) + &a * x1 * Rat::from_integer(2.into()) + b)
            / (y1 * Rat::from_integer(2.into()))
    } else {
        (y2 - y1) / (x2 - x1)
    };
    let x3 = &lambda * &lambda - &a - x1 - x2;
    let y3 = lambda * (x1 - &x3) - y1;
    Point::new(x3, y3)
}

pub fn add(e: &Curve, p: &Point, q: &Point) -> Result<Point, CurveError> {
    e.check(p)?;
    e.check(q)?;
    Ok(add_unchecked(e, p, q))
}

pub fn scalar_mul(e: &Curve, n: i64, p: &Point) -> Result<Point, CurveError> {
    e.check(p)?;
    let base = if n < 0 { p.neg() } else { p.clone() };
    let mut k = n.unsigned_abs();
    let mut acc = Point::Infinity;
    let mut pow = base;
    while k > 0 {
        if k & 1 == 1 {
            acc = add_unchecked(e, &acc, &pow);
        }
        k >>= 1;
        if k > 0 {
            pow = add_unchecked(e, &pow, &pow);
        }
    }
    Ok(acc)
}

/// The multiples P, 2P, ..., n_max P.
pub fn multiples(e: &Curve, p: &Point, n_max: usize) -> Result<Vec<Point>, CurveError> {
    e.check(p)?;
    let mut out = Vec::with_capacity(n_max);
    let mut acc = Point::Infinity;
    for _ in 0..n_max {
        acc = add_unchecked(e, &acc, p);
        out.push(acc.clone());
    }
    Ok(out)
}

/// Values of the division polynomials at P.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DivisionPolyValues {
    pub n: u64,
    pub phi: Rat,
    pub psi: Rat,
    /// `None` when psi vanishes (nP is the point at infinity).
    pub omega: Option<Rat>,
}

/// psi_0(P), ..., psi_{n_max}(P) by the classical recurrences.
pub fn psi_values(e: &Curve, p: &Point, n_max: usize) -> Result<Vec<Rat>, CurveError> {
    e.check(p)?;
    let (x, y) = match p {
        Point::Infinity => return Err(CurveError::Infinity),
        Point::Affine { x, y } => (x.clone(), y.clone()),
    };
    let (b2, b4, b6, b8) = e.b_invariants();
    let r = |v: &BigInt| Rat::from_integer(v.clone());
    let (b2, b4, b6, b8) = (r(&b2), r(&b4), r(&b6), r(&b8));
    let k = |v: i64| arith::rat_int(v);
    let x2 = &x * &x;
    let x3 = &x2 * &x;
    let x4 = &x3 * &x;
    let x5 = &x4 * &x;
    let x6 = &x5 * &x;
    let mut ps: Vec<Rat> = Vec::with_capacity(n_max + 1);
    ps.push(Rat::zero());
    ps.push(Rat::one());
    ps.push(&y * k(2));
    ps.push(&x4 * k(3) + &b2 * &x3 + &b4 * &x2 * k(3) + &b6 * &x * k(3) + &b8);
    let inner = &x6 * k(2) + &b2 * &x5 + &b4 * &x4 * k(5) + &b6 * &x3 * k(10) + &b8 * &x2 * k(10)
        + (&b2 * &b8 - &b4 * &b6) * &x
        + (&b4 * &b8 - &b6 * &b6);
    ps.push(&ps[2] * inner);
    for n in 5..=n_max {
        let m = n / 2;
        let v = if n % 2 == 1 {
            &ps[m + 2] * cube(&ps[m]) - &ps[m - 1] * cube(&ps[m + 1])
        } else {
            (&ps[m] / &ps[2]) * (&ps[m + 2] * &ps[m - 1] * &ps[m - 1] - &ps[m - 2] * &ps[m + 1] * &ps[m + 1])
        };
        ps.push(v);
    }
    ps.truncate(n_max + 1);
    Ok(ps)
}

/// Integer-scaled division polynomial values w^(n^2-1) psi_n(P) for
/// n = 0..=n_max, where x(P) = u/w^2. Same recurrences, integer arithmetic.
pub fn psi_scaled(e: &Curve, p: &Point, n_max: usize) -> Result<Vec<BigInt>, CurveError> {
    e.check(p)?;
    let (x, y) = match p {
        Point::Infinity => return Err(CurveError::Infinity),
        Point::Affine { x, y } => (x, y),
    };
    let w = isqrt_exact(x.denom()).ok_or(CurveError::NotOnCurve)?;
    let u = x.numer().clone();
    let v = y.numer().clone();
    let (b2, b4, b6, b8) = e.b_invariants();
    let w2 = &w * &w;
    let wp: Vec<BigInt> = (0..=6u32).map(|k| w2.pow(k)).collect();
    let up: Vec<BigInt> = (0..=6u32).map(|k| u.pow(k)).collect();
    let mut ps: Vec<BigInt> = Vec::with_capacity(n_max + 1);
    ps.push(BigInt::zero());
    ps.push(BigInt::one());
    ps.push(&v * 2i32);
    ps.push(&up[4] * 3i32 + &b2 * &up[3] * &wp[1] + &b4 * &up[2] * &wp[2] * 3i32 + &b6 * &up[1] * &wp[3] * 3i32 + &b8 * &wp[4]);
    let inner = &up[6] * 2i32 + &b2 * &up[5] * &wp[1] + &b4 * &up[4] * &wp[2] * 5i32 + &b6 * &up[3] * &wp[3] * 10i32
        + &b8 * &up[2] * &wp[4] * 10i32
        + (&b2 * &b8 - &b4 * &b6) * &up[1] * &wp[5]
        + (&b4 * &b8 - &b6 * &b6) * &wp[6];
    ps.push(&ps[2] * inner);
    for n in 5..=n_max {
        let m = n / 2;
        let val = if n % 2 == 1 {
            &ps[m + 2] * ps[m].pow(3) - &ps[m - 1] * ps[m + 1].pow(3)
        } else {
            let t = &ps[m + 2] * &ps[m - 1] * &ps[m - 1] - &ps[m - 2] * &ps[m + 1] * &ps[m + 1];
            &ps[m] * t / &ps[2]
        };
        ps.push(val);
    }
    ps.truncate(n_max + 1);
    Ok(ps)
}

fn cube(v: &Rat) -> Rat {
    v * v * v
}

pub fn division_polys(e: &Curve, p: &Point, n: u64) -> Result<DivisionPolyValues, CurveError> {
    if n == 0 {
        return Err(CurveError::Parse("division polynomial index must be positive".into()));
    }
    let ps = psi_values(e, p, (2 * n as usize).max(4))?;
    let x = p.x().unwrap();
    let n = n as usize;
    let psi = ps[n].clone();
    let phi = x * &psi * &psi - &ps[n + 1] * &ps[n - 1];
    let omega = if psi.is_zero() {
        None
    } else {
        Some(&ps[2 * n] / (&psi * arith::rat_int(2)))
    };
    Ok(DivisionPolyValues { n: n as u64, phi, psi, omega })
}

/// Target of the 2-isogeny: y^2 = x^3 - 2a x^2 + (a^2 - 4b) x.
pub fn descent_curve(e: &Curve) -> Result<Curve, CurveError> {
    if !e.two_torsion_form() {
        return Err(CurveError::NotTwoTorsionForm);
    }
    Curve::new(-(&e.a * 2i32), &e.a * &e.a - &e.b * 4, BigInt::zero())
}

/// The 2-isogeny (x, y) -> (y^2/x^2, y(b - x^2)/x^2).
pub fn descent_map(e: &Curve, p: &Point) -> Result<Point, CurveError> {
    if !e.two_torsion_form() {
        return Err(CurveError::NotTwoTorsionForm);
    }
    e.check(p)?;
    match p {
        Point::Infinity => Ok(Point::Infinity),
        Point::Affine { x, y } => {
            if x.is_zero() {
                return Err(CurveError::DescentKernel);
            }
            let x2 = x * x;
            let b = Rat::from_integer(e.b.clone());
            Ok(Point::new(y * y / &x2, y * (b - &x2) / &x2))
        }
    }
}

/// Order of P when it is torsion (orders are at most 12 over Q).
pub fn torsion_order_of(e: &Curve, p: &Point) -> Option<u64> {
    let mut acc = p.clone();
    for n in 1..=12u64 {
        if acc.is_infinity() {
            return Some(n);
        }
        acc = add_unchecked(e, &acc, p);
        if n == 12 && acc.is_infinity() {
            return Some(13);
        }
    }
    None
}

pub fn is_torsion(e: &Curve, p: &Point) -> bool {
    torsion_order_of(e, p).is_some()
}

/// All rational torsion points, by Nagell-Lutz: integral x, and y = 0 or y^2 | disc.
pub fn torsion_points(e: &Curve) -> Vec<Point> {
    let mut pts = BTreeSet::new();
    let disc = e.discriminant().abs();
    let mut ys = vec![BigInt::zero()];
    for d in divisors(&disc) {
        if let Some(r) = isqrt_exact(&d) {
            if (&disc % &d).is_zero() {
                ys.push(r);
            }
        }
    }
    ys.sort();
    ys.dedup();
    for y in ys {
        // integral roots of x^3 + a x^2 + b x + (c - y^2)
        let c0 = &e.c - &y * &y;
        let mut cands: Vec<BigInt> = Vec::new();
        if c0.is_zero() {
            cands.push(BigInt::zero());
            // remaining roots solve x^2 + a x + b = 0
            let disc2 = &e.a * &e.a - &e.b * 4;
            if let Some(s) = isqrt_exact(&disc2) {
                for r in [(-&e.a + &s), (-&e.a - &s)] {
                    if r.is_even() {
                        cands.push(r / 2);
                    }
                }
            }
        } else {
            for d in divisors(&c0.abs()) {
                cands.push(d.clone());
                cands.push(-d);
            }
        }
        for x in cands {
            let xr = Rat::from_integer(x.clone());
            let rhs = e.rhs(&xr);
            let yr = Rat::from_integer(y.clone());
            if rhs == &yr * &yr {
                for s in [yr.clone(), -yr.clone()] {
                    let pt = Point::new(xr.clone(), s);
                    if is_torsion(e, &pt) {
                        pts.insert(PointKey::from(&pt));
                    }
                }
            }
        }
    }
    let mut out = vec![Point::Infinity];
    out.extend(pts.into_iter().map(|k| k.0));
    out
}

#[derive(PartialEq, Eq)]
struct PointKey(Point);

impl From<&Point> for PointKey {
    fn from(p: &Point) -> Self {
        PointKey(p.clone())
    }
}

impl PartialOrd for PointKey {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for PointKey {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        let k = |p: &Point| match p {
            Point::Infinity => (0, Rat::zero(), Rat::zero()),
            Point::Affine { x, y } => (1, x.clone(), y.clone()),
        };
        k(&self.0).cmp(&k(&other.0))
    }
}

pub fn torsion_order(e: &Curve) -> u64 {
    torsion_points(e).len() as u64
}

/// Positive divisors of a positive integer.
pub fn divisors(n: &BigInt) -> Vec<BigInt> {
    if n.is_zero() {
        return Vec::new();
    }
    let f = factor(n);
    let mut out = vec![BigInt::one()];
    for (p, e) in &f.factors {
        let mut next = Vec::with_capacity(out.len() * (*e as usize + 1));
        for d in &out {
            let mut q = d.clone();
            next.push(q.clone());
            for _ in 0..*e {
                q *= p;
                next.push(q.clone());
            }
        }
        out = next;
    }
    out.sort();
    out
}

/// Rational roots of an integer polynomial, coefficients from the constant term up.
pub fn rational_roots(coeffs: &[BigInt]) -> Vec<Rat> {
    let mut cs: Vec<BigInt> = coeffs.to_vec();
    while cs.last().is_some_and(|c| c.is_zero()) {
        cs.pop();
    }
    if cs.len() <= 1 {
        return Vec::new();
    }
    let mut roots = Vec::new();
    let mut shift = 0;
    while cs[shift].is_zero() {
        shift += 1;
    }
    if shift > 0 {
        roots.push(Rat::zero());
        cs.drain(..shift);
    }
    if cs.len() <= 1 {
        return roots;
    }
    let lead = cs.last().unwrap().abs();
    let constant = cs[0].abs();
    let nums = divisors(&constant);
    let dens = divisors(&lead);
    let mut seen = BTreeSet::new();
    for p in &nums {
        for q in &dens {
            if !p.gcd(q).is_one() {
                continue;
            }
            for s in [p.clone(), -p.clone()] {
                let r = Rat::new(s, q.clone());
                if seen.contains(&r) {
                    continue;
                }
                let mut acc = Rat::zero();
                for c in cs.iter().rev() {
                    acc = acc * &r + Rat::from_integer(c.clone());
                }
                if acc.is_zero() {
                    seen.insert(r.clone());
                    roots.push(r);
                }
            }
        }
    }
    roots
}

/// A point Q with 2Q = P, when one exists over Q.
pub fn halve(e: &Curve, p: &Point) -> Result<Option<Point>, CurveError> {
    e.check(p)?;
    let (x0, y0) = match p {
        Point::Infinity => return Ok(Some(Point::Infinity)),
        Point::Affine { x, y } => (x.clone(), y.clone()),
    };
    let _ = y0;
    // x(2Q) = (x^4 - b4 x^2 - 2 b6 x - b8) / (4x^3 + b2 x^2 + 2 b4 x + b6)
    let (b2, b4, b6, b8) = e.b_invariants();
    let u = x0.numer().clone();
    let w = x0.denom().clone();
    let coeffs = vec![
        -(&w * &b8) - &u * &b6,
        -(&w * &b6 * 2i32) - &u * &b4 * 2i32,
        -(&w * &b4) - &u * &b2,
        -(&u * 4i32),
        w.clone(),
    ];
    for x in rational_roots(&coeffs) {
        let rhs = e.rhs(&x);
        if let Some(s) = arith::rational_sqrt(&rhs) {
            for yv in [s.clone(), -s] {
                let q = Point::new(x.clone(), yv);
                if add_unchecked(e, &q, &q) == *p {
                    return Ok(Some(q));
                }
            }
        }
    }
    Ok(None)
}

/// Whether P lies in 2E(Q).
pub fn in_two_e(e: &Curve, p: &Point) -> Result<bool, CurveError> {
    Ok(halve(e, p)?.is_some())
}

/// Reduction of a point modulo a prime p.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReductionData {
    pub singular_curve: bool,
    pub point_singular: bool,
    pub point_order: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ModPoint {
    Inf,
    Aff(u64, u64),
}

fn mod_rat(v: &Rat, p: u64) -> Option<u64> {
    let pb = BigInt::from(p);
    let d = v.denom().mod_floor(&pb).to_u64().unwrap();
    if d == 0 {
        return None;
    }
    let n = v.numer().mod_floor(&pb).to_u64().unwrap();
    Some(mulmod(n, inv_mod(d, p), p))
}

fn mulmod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

fn pow_mod(mut a: u64, mut e: u64, p: u64) -> u64 {
    let mut r = 1 % p;
    a %= p;
    while e > 0 {
        if e & 1 == 1 {
            r = mulmod(r, a, p);
        }
        a = mulmod(a, a, p);
        e >>= 1;
    }
    r
}

fn inv_mod(a: u64, p: u64) -> u64 {
    pow_mod(a, p - 2, p)
}

struct ModCurve {
    p: u64,
    a: u64,
    b: u64,
}

impl ModCurve {
    fn add(&self, s: ModPoint, t: ModPoint) -> ModPoint {
        let p = self.p;
        let (x1, y1, x2, y2) = match (s, t) {
            (ModPoint::Inf, _) => return t,
            (_, ModPoint::Inf) => return s,
            (ModPoint::Aff(x1, y1), ModPoint::Aff(x2, y2)) => (x1, y1, x2, y2),
        };
        let lambda = if x1 == x2 {
            if (y1 + y2) % p == 0 {
                return ModPoint::Inf;
            }
            let num = (3 * mulmod(x1, x1, p) % p + 2 * mulmod(self.a, x1, p) % p + self.b) % p;
            let den = (2 * y1) % p;
            if den == 0 {
                return ModPoint::Inf;
            }
            mulmod(num, inv_mod(den, p), p)
        } else {
            mulmod((y2 + p - y1) % p, inv_mod((x2 + p - x1) % p, p), p)
        };
        let x3 = (mulmod(lambda, lambda, p) + 3 * p - self.a - x1 - x2) % p;
        let y3 = (mulmod(lambda, (x1 + p - x3) % p, p) + p - y1) % p;
        ModPoint::Aff(x3, y3)
    }
}

/// Reduction data of Q at the prime p (p at most about 10^6).
pub fn reduction_data(e: &Curve, p: u64, q: &Point) -> Result<ReductionData, CurveError> {
    e.check(q)?;
    let pb = BigInt::from(p);
    let singular_curve = (e.discriminant() % &pb).is_zero();
    let reduced = match q {
        Point::Infinity => ModPoint::Inf,
        Point::Affine { x, y } => match (mod_rat(x, p), mod_rat(y, p)) {
            (Some(xm), Some(ym)) => ModPoint::Aff(xm, ym),
            _ => ModPoint::Inf,
        },
    };
    let a = e.a.mod_floor(&pb).to_u64().unwrap();
    let b = e.b.mod_floor(&pb).to_u64().unwrap();
    let point_singular = match reduced {
        ModPoint::Inf => false,
        ModPoint::Aff(x, y) => {
            let fx = (3 * mulmod(x, x, p) + 2 * mulmod(a, x, p) + b) % p;
            let fy = (2 * y) % p;
            fx == 0 && fy == 0
        }
    };
    let point_order = if point_singular {
        None
    } else {
        let mc = ModCurve { p, a, b };
        let mut acc = reduced;
        let mut n = 1u64;
        let limit = 2 * p + 3;
        loop {
            if acc == ModPoint::Inf {
                break Some(n);
            }
            acc = mc.add(acc, reduced);
            n += 1;
            if n > limit {
                break None;
            }
        }
    };
    Ok(ReductionData { singular_curve, point_singular, point_order })
}

/// Primes dividing the discriminant.
pub fn bad_primes(e: &Curve) -> Vec<BigInt> {
    factor(e.discriminant()).factors.keys().cloned().collect()
}

/// Least k >= 1 such that kP lies in 2E(Q) and reduces to a nonsingular
/// point at every prime of bad reduction; returns k and kP.
pub fn least_good_multiple(e: &Curve, p: &Point) -> Result<(u64, Point), CurveError> {
    let step = if in_two_e(e, p)? { 1 } else { 2 };
    let bad: Vec<u64> = bad_primes(e).iter().filter_map(|q| q.to_u64()).collect();
    let mut k = step;
    loop {
        let kp = scalar_mul(e, k as i64, p)?;
        if kp.is_infinity() {
            return Err(CurveError::Infinity);
        }
        let mut ok = true;
        for &q in &bad {
            if reduction_data(e, q, &kp)?.point_singular {
                ok = false;
                break;
            }
        }
        if ok {
            return Ok((k, kp));
        }
        k += step;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Rat {
        Rat::new(n.into(), d.into())
    }

    fn exa() -> (Curve, Point) {
        (Curve::from_i64(12, 11, 0).unwrap(), Point::new(r(1, 4), r(15, 8)))
    }

    fn dense() -> (Curve, Point) {
        (Curve::from_i64(7, 2, 0).unwrap(), Point::from_ints(-2, 4))
    }

    #[test]
    fn make_curve_cases() {
        let (e, _) = exa();
        assert!(e.two_torsion_form());
        assert_eq!(*e.discriminant(), BigInt::from(193600));
        assert_eq!(*dense().0.discriminant(), BigInt::from(2624));
        assert_eq!(Curve::from_i64(0, 0, 0), Err(CurveError::Singular));
        assert_eq!(Curve::parse("7, 2, 0").unwrap(), dense().0);
        assert!(Curve::parse("1,2").is_err());
    }

    #[test]
    fn doubling_examples() {
        let (e, p) = exa();
        assert_eq!(add(&e, &p, &p).unwrap(), Point::new(r(1225, 144), r(-68635, 1728)));
        assert_eq!(add(&e, &p, &p.neg()).unwrap(), Point::Infinity);
        let (e, p) = dense();
        assert_eq!(add(&e, &p, &p).unwrap(), Point::new(r(1, 16), r(-25, 64)));
        let p3 = scalar_mul(&e, 3, &p).unwrap();
        assert_eq!(p3.x().unwrap(), &r(-578, 1089));
        assert_eq!(scalar_mul(&e, 0, &p).unwrap(), Point::Infinity);
        assert!(add(&e, &Point::from_ints(1, 1), &p).is_err());
    }

    #[test]
    fn fourth_multiple_of_exa() {
        let (e, p) = exa();
        let p4 = scalar_mul(&e, 4, &p).unwrap();
        let d = p4.x().unwrap().denom().clone();
        assert_eq!(d, BigInt::from(1647240u64) * BigInt::from(1647240u64));
    }

    #[test]
    fn division_polynomial_values() {
        let (e, p) = dense();
        let d1 = division_polys(&e, &p, 1).unwrap();
        assert_eq!(d1.psi, Rat::one());
        assert_eq!(d1.phi, r(-2, 1));
        assert_eq!(division_polys(&e, &p, 2).unwrap().psi, r(8, 1));
        assert_eq!(division_polys(&e, &p, 3).unwrap().psi, r(-132, 1));
    }

    #[test]
    fn coordinate_identity() {
        for (e, p) in [exa(), dense()] {
            let ms = multiples(&e, &p, 12).unwrap();
            for n in 1..=12u64 {
                let d = division_polys(&e, &p, n).unwrap();
                let q = &ms[n as usize - 1];
                let x = q.x().unwrap();
                let y = q.y().unwrap();
                assert_eq!(*x, &d.phi / (&d.psi * &d.psi), "x n={n}");
                assert_eq!(*y, d.omega.clone().unwrap() / (&d.psi * &d.psi * &d.psi), "y n={n}");
            }
        }
    }

    #[test]
    fn descent_examples() {
        let (e, p) = exa();
        let e2 = descent_curve(&e).unwrap();
        assert_eq!(e2, Curve::from_i64(-24, 100, 0).unwrap());
        let q = descent_map(&e, &p).unwrap();
        assert_eq!(q.x().unwrap(), &r(225, 4));
        let ms = multiples(&e, &p, 12).unwrap();
        for m in &ms {
            assert!(e2.contains(&descent_map(&e, m).unwrap()));
        }
        assert_eq!(descent_map(&e, &Point::from_ints(0, 0)), Err(CurveError::DescentKernel));
        assert!(descent_curve(&Curve::from_i64(0, 1, 1).unwrap()).is_err());
    }

    #[test]
    fn descent_is_a_homomorphism_on_multiples() {
        let (e, p) = exa();
        let e2 = descent_curve(&e).unwrap();
        let dp = descent_map(&e, &p).unwrap();
        for n in 1..=6i64 {
            let lhs = descent_map(&e, &scalar_mul(&e, n, &p).unwrap()).unwrap();
            assert_eq!(lhs, scalar_mul(&e2, n, &dp).unwrap());
        }
    }

    #[test]
    fn torsion() {
        let (e, p) = exa();
        assert_eq!(torsion_order(&e), 4);
        let pts = torsion_points(&e);
        assert!(pts.contains(&Point::from_ints(-1, 0)));
        assert!(pts.contains(&Point::from_ints(0, 0)));
        assert!(!is_torsion(&e, &p));
        let (e, _) = dense();
        assert_eq!(torsion_order(&e) % 2, 0);
    }

    #[test]
    fn reductions() {
        let (e, p) = exa();
        let r5 = reduction_data(&e, 5, &p).unwrap();
        assert!(r5.singular_curve);
        let (e, p) = dense();
        let r2 = reduction_data(&e, 2, &p).unwrap();
        assert!(r2.point_singular);
        assert_eq!(r2.point_order, None);
        let r7 = reduction_data(&e, 7, &p).unwrap();
        assert!(!r7.singular_curve);
        assert!(r7.point_order.is_some());
    }

    #[test]
    fn halving() {
        let (e, p) = dense();
        assert!(!in_two_e(&e, &p).unwrap());
        let p2 = scalar_mul(&e, 2, &p).unwrap();
        let h = halve(&e, &p2).unwrap().unwrap();
        assert_eq!(scalar_mul(&e, 2, &h).unwrap(), p2);
        let (e, p) = exa();
        assert!(!in_two_e(&e, &p).unwrap());
        assert!(in_two_e(&e, &scalar_mul(&e, 2, &p).unwrap()).unwrap());
    }

    #[test]
    fn rational_root_finder() {
        // (2x - 1)(x + 3) x = 2x^3 + 5x^2 - 3x
        let roots = rational_roots(&[0.into(), (-3).into(), 5.into(), 2.into()]);
        assert_eq!(roots.len(), 3);
        assert!(roots.contains(&r(1, 2)));
        assert!(roots.contains(&r(-3, 1)));
        assert!(roots.contains(&Rat::zero()));
    }
}
