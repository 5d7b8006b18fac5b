//! Exact integer and rational arithmetic: factorization, valuations,
//! Kronecker symbols and prime-set membership.

mod cache;
mod factor;
pub mod primality;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

pub use cache::{CacheError, FactorCache};
pub use factor::{factor, factor_with_seed, small_primes, DEFAULT_SEED};

pub type Rat = BigRational;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ArithError {
    #[error("valuation of zero is infinite")]
    ZeroValuation,
    #[error("cannot factor zero")]
    FactorZero,
    #[error("{0} is not prime")]
    NotPrime(BigInt),
    #[error("invalid discriminant {0}: must be squarefree and different from 0 and 1")]
    InvalidDiscriminant(BigInt),
    #[error("empty discriminant set")]
    EmptyDiscriminantSet,
    #[error("cannot parse rational number '{0}'")]
    ParseRational(String),
    #[error("cannot parse factorization '{0}'")]
    ParseFactorization(String),
}

/// Prime factorization `sign * prod p^e`.
///
/// Primes above the deterministic Miller-Rabin range that could not be
/// certified by a Pocklington test are listed in `probable`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Factorization {
    pub sign: i8,
    pub factors: BTreeMap<BigInt, u32>,
    pub probable: BTreeSet<BigInt>,
}

impl Factorization {
    pub fn one() -> Self {
        Factorization { sign: 1, ..Default::default() }
    }

    pub fn value(&self) -> BigInt {
        let mut v = BigInt::from(self.sign);
        for (p, e) in &self.factors {
            v *= num_traits::pow(p.clone(), *e as usize);
        }
        v
    }

    pub fn primes(&self) -> impl Iterator<Item = &BigInt> {
        self.factors.keys()
    }

    pub fn exponent(&self, p: &BigInt) -> u32 {
        self.factors.get(p).copied().unwrap_or(0)
    }

    /// True when every prime factor carries a primality proof.
    pub fn is_certified(&self) -> bool {
        self.probable.is_empty()
    }

    pub(crate) fn insert(&mut self, p: BigInt, e: u32) {
        *self.factors.entry(p).or_insert(0) += e;
    }

    pub fn parse(s: &str) -> Result<Self, ArithError> {
        let err = || ArithError::ParseFactorization(s.to_string());
        let mut t = s.trim();
        let mut f = Factorization::one();
        if let Some(rest) = t.strip_prefix('-') {
            f.sign = -1;
            t = rest.trim();
        }
        if t == "1" {
            return Ok(f);
        }
        for part in t.split('*') {
            let part = part.trim();
            let (part, probable) = match part.strip_suffix('?') {
                Some(p) => (p, true),
                None => (part, false),
            };
            let (p, e) = match part.split_once('^') {
                Some((p, e)) => (p, e.trim().parse::<u32>().map_err(|_| err())?),
                None => (part, 1),
            };
            let p: BigInt = p.trim().parse().map_err(|_| err())?;
            if p <= BigInt::one() {
                return Err(err());
            }
            if probable {
                f.probable.insert(p.clone());
            }
            f.insert(p, e);
        }
        Ok(f)
    }

    /// Like `Display`, with probable primes marked by a trailing `?`.
    pub fn to_cache_string(&self) -> String {
        self.render(true)
    }

    fn render(&self, mark: bool) -> String {
        let mut parts = Vec::new();
        for (p, e) in &self.factors {
            let q = if mark && self.probable.contains(p) { "?" } else { "" };
            if *e == 1 {
                parts.push(format!("{p}{q}"));
            } else {
                parts.push(format!("{p}{q}^{e}"));
            }
        }
        let body = if parts.is_empty() { "1".to_string() } else { parts.join(" * ") };
        if self.sign < 0 {
            format!("-{body}")
        } else {
            body
        }
    }
}

impl fmt::Display for Factorization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render(false))
    }
}

/// Exponent of `p` in the nonzero integer `n`.
pub fn val_int(p: &BigInt, n: &BigInt) -> u64 {
    debug_assert!(!n.is_zero());
    if *p == BigInt::from(2) {
        return n.trailing_zeros().unwrap_or(0);
    }
    // strip p^(2^k) for growing k, then shrink back down
    let mut n = n.abs();
    let mut powers = vec![p.clone()];
    let mut e = 0u64;
    loop {
        let top = powers.last().unwrap();
        let (q, r) = n.div_rem(top);
        if !r.is_zero() {
            break;
        }
        n = q;
        e += 1 << (powers.len() - 1);
        if top.bits() * 2 > n.bits() + 1 {
            break;
        }
        let sq = top * top;
        powers.push(sq);
    }
    while let Some(pk) = powers.pop() {
        let k = powers.len();
        loop {
            let (q, r) = n.div_rem(&pk);
            if !r.is_zero() {
                break;
            }
            n = q;
            e += 1 << k;
        }
    }
    e
}

/// p-adic valuation of a nonzero rational.
pub fn valuation(p: &BigInt, x: &Rat) -> Result<i64, ArithError> {
    if x.is_zero() {
        return Err(ArithError::ZeroValuation);
    }
    Ok(val_int(p, x.numer()) as i64 - val_int(p, x.denom()) as i64)
}

/// Jacobi symbol (a/n) for odd positive n.
pub fn jacobi(a: &BigInt, n: &BigInt) -> i8 {
    assert!(n.is_positive() && n.is_odd(), "jacobi symbol needs odd positive modulus");
    let mut a = a.mod_floor(n);
    let mut n = n.clone();
    let mut t = 1i8;
    let three = BigInt::from(3);
    let five = BigInt::from(5);
    let eight = BigInt::from(8);
    let four = BigInt::from(4);
    while !a.is_zero() {
        while a.is_even() {
            a >>= 1;
            let r = n.mod_floor(&eight);
            if r == three || r == five {
                t = -t;
            }
        }
        std::mem::swap(&mut a, &mut n);
        if a.mod_floor(&four) == three && n.mod_floor(&four) == three {
            t = -t;
        }
        a = a.mod_floor(&n);
    }
    if n.is_one() {
        t
    } else {
        0
    }
}

/// Kronecker symbol (d/p) for a prime p.
pub fn kronecker(d: &BigInt, p: &BigInt) -> i8 {
    if *p == BigInt::from(2) {
        if d.is_even() {
            return 0;
        }
        let r = d.mod_floor(&BigInt::from(8)).to_u8().unwrap();
        return if r == 1 || r == 7 { 1 } else { -1 };
    }
    jacobi(d, p)
}

/// Discriminant of Q(sqrt d) for squarefree d.
pub fn fundamental_discriminant(d: &BigInt) -> BigInt {
    if d.mod_floor(&BigInt::from(4)).is_one() {
        d.clone()
    } else {
        d * 4
    }
}

pub fn is_squarefree(n: &BigInt) -> bool {
    if n.is_zero() {
        return false;
    }
    factor(n).factors.values().all(|&e| e == 1)
}

/// Square root of a non-negative integer when it is a perfect square.
pub fn isqrt_exact(n: &BigInt) -> Option<BigInt> {
    if n.is_negative() {
        return None;
    }
    let r = n.sqrt();
    if &r * &r == *n {
        Some(r)
    } else {
        None
    }
}

/// Non-negative square root of a rational when it is a square.
pub fn rational_sqrt(x: &Rat) -> Option<Rat> {
    let n = isqrt_exact(x.numer())?;
    let d = isqrt_exact(x.denom())?;
    Some(Rat::new(n, d))
}

/// Parses `a` or `a/b`.
pub fn parse_rational(s: &str) -> Result<Rat, ArithError> {
    let err = || ArithError::ParseRational(s.to_string());
    let (n, d) = match s.trim().split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s.trim(), "1"),
    };
    let n: BigInt = n.parse().map_err(|_| err())?;
    let d: BigInt = d.parse().map_err(|_| err())?;
    if d.is_zero() {
        return Err(err());
    }
    Ok(Rat::new(n, d))
}

pub fn rat_int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// A set of primes: all of them, or those inert in at least one field
/// Q(sqrt d) for d in a finite set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PrimeSet {
    AllPrimes,
    InertIn(Vec<BigInt>),
}

impl PrimeSet {
    pub fn inert_in<I: IntoIterator<Item = BigInt>>(ds: I) -> Result<Self, ArithError> {
        let mut v: Vec<BigInt> = ds.into_iter().collect();
        if v.is_empty() {
            return Err(ArithError::EmptyDiscriminantSet);
        }
        for d in &v {
            if d.is_zero() || d.is_one() || !is_squarefree(d) {
                return Err(ArithError::InvalidDiscriminant(d.clone()));
            }
        }
        v.sort();
        v.dedup();
        Ok(PrimeSet::InertIn(v))
    }

    pub fn contains(&self, p: &BigInt) -> bool {
        match self {
            PrimeSet::AllPrimes => true,
            PrimeSet::InertIn(ds) => ds
                .iter()
                .any(|d| kronecker(&fundamental_discriminant(d), p) == -1),
        }
    }
}

/// Membership check that also validates primality of `p`.
pub fn in_prime_set(p: &BigInt, r: &PrimeSet) -> Result<bool, ArithError> {
    if !primality::is_prime(p) {
        return Err(ArithError::NotPrime(p.clone()));
    }
    Ok(r.contains(p))
}

/// Euler's totient of a positive machine integer.
pub fn totient(n: u64) -> u64 {
    let mut m = n;
    let mut phi = n;
    let mut p = 2;
    while p * p <= m {
        if m % p == 0 {
            while m % p == 0 {
                m /= p;
            }
            phi -= phi / p;
        }
        p += 1;
    }
    if m > 1 {
        phi -= phi / m;
    }
    phi
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(n: i64) -> BigInt {
        BigInt::from(n)
    }

    #[test]
    fn factor_printed_terms() {
        let f = factor(&b(1647240));
        assert_eq!(f.to_string(), "2^3 * 3 * 5 * 7 * 37 * 53");
        let f = factor(&b(-1961));
        assert_eq!(f.sign, -1);
        assert_eq!(f.to_string(), "-37 * 53");
        let f = factor(&b(1));
        assert_eq!(f.sign, 1);
        assert!(f.factors.is_empty());
        assert_eq!(f.to_string(), "1");
    }

    #[test]
    fn factorization_parse_roundtrip() {
        for n in [1i64, -1, 12, -1961, 1647240, 97] {
            let f = factor(&b(n));
            assert_eq!(Factorization::parse(&f.to_string()).unwrap(), f);
        }
    }

    #[test]
    fn valuations() {
        let x = Rat::new(b(1), b(16));
        assert_eq!(valuation(&b(5), &x).unwrap(), 0);
        assert_eq!(valuation(&b(2), &x).unwrap(), -4);
        assert_eq!(valuation(&b(37), &rat_int(1647240)).unwrap(), 1);
        assert_eq!(valuation(&b(3), &Rat::zero()), Err(ArithError::ZeroValuation));
    }

    #[test]
    fn large_valuations() {
        for k in [0u32, 1, 2, 7, 64, 1000, 1023] {
            let n = b(3).pow(k) * b(7 * 5);
            assert_eq!(val_int(&b(3), &n), k as u64);
            assert_eq!(val_int(&b(2), &(b(2).pow(k) * b(-9))), k as u64);
        }
        assert_eq!(val_int(&b(5), &b(5).pow(3)), 3);
        assert_eq!(val_int(&b(7), &b(1)), 0);
    }

    #[test]
    fn kronecker_values() {
        assert_eq!(kronecker(&b(5), &b(11)), 1);
        assert_eq!(kronecker(&b(5), &b(2)), -1);
        assert_eq!(kronecker(&b(10), &b(5)), 0);
        assert_eq!(kronecker(&b(12), &b(2)), 0);
    }

    #[test]
    fn prime_set_membership() {
        let r = PrimeSet::inert_in([b(5)]).unwrap();
        assert!(in_prime_set(&b(2), &r).unwrap());
        assert!(!in_prime_set(&b(11), &r).unwrap());
        assert!(in_prime_set(&b(11), &PrimeSet::AllPrimes).unwrap());
        assert!(in_prime_set(&b(12), &r).is_err());
        assert!(PrimeSet::inert_in([b(4)]).is_err());
        assert!(PrimeSet::inert_in([b(1)]).is_err());
        assert!(PrimeSet::inert_in(Vec::new()).is_err());
    }

    #[test]
    fn inertness_matches_irreducibility() {
        for d in [5i64, 13, 29, 41, 53] {
            let r = PrimeSet::inert_in([b(d)]).unwrap();
            for p in small_primes().iter().take_while(|&&p| p < 500) {
                let p = *p as i64;
                let has_root = (0..p).any(|x| (x * x - d).rem_euclid(p) == 0);
                let inert = if p == 2 {
                    // x^2 - d over F_2 always has a root; inertness at 2 is read off d mod 8.
                    d.rem_euclid(8) == 5
                } else {
                    !has_root
                };
                assert_eq!(r.contains(&b(p)), inert, "d={d} p={p}");
            }
        }
    }

    #[test]
    fn rational_parsing() {
        assert_eq!(parse_rational("-2/1").unwrap(), rat_int(-2));
        assert_eq!(parse_rational("15/8").unwrap(), Rat::new(b(15), b(8)));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("x").is_err());
    }

    #[test]
    fn totients() {
        assert_eq!(totient(8), 4);
        assert_eq!(totient(36), 12);
        assert_eq!(totient(1), 1);
    }
}
