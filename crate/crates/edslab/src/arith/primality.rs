//! Primality: deterministic Miller-Rabin below 3.317e24, Pocklington
//! certificates above, probable-prime flag when no certificate is found.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::factor::{split_completely, trial_divide, DEFAULT_SEED};
use super::Factorization;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Primality {
    Composite,
    Prime,
    ProbablePrime,
}

const MR_BASES: [u32; 13] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41];
const RHO_BUDGET: u64 = 200_000;

fn deterministic_bound() -> BigUint {
    "3317044064679887385961981".parse().unwrap()
}

pub fn is_prime(n: &BigInt) -> bool {
    primality(n) != Primality::Composite
}

pub fn primality(n: &BigInt) -> Primality {
    if n.is_negative() || n < &BigInt::from(2) {
        return Primality::Composite;
    }
    let n = n.to_biguint().unwrap();
    if let Some(small) = n.to_u64() {
        if small < 4 {
            return Primality::Prime;
        }
    }
    for &p in &MR_BASES {
        if n == BigUint::from(p) {
            return Primality::Prime;
        }
        if (&n % p).is_zero() {
            return Primality::Composite;
        }
    }
    if !MR_BASES.iter().all(|&a| strong_probable_prime(&n, &BigUint::from(a))) {
        return Primality::Composite;
    }
    if n < deterministic_bound() {
        return Primality::Prime;
    }
    if pocklington(&n) {
        Primality::Prime
    } else {
        Primality::ProbablePrime
    }
}

fn strong_probable_prime(n: &BigUint, a: &BigUint) -> bool {
    let one = BigUint::one();
    let nm1 = n - &one;
    let s = nm1.trailing_zeros().unwrap_or(0);
    let d = &nm1 >> s;
    let mut x = a.modpow(&d, n);
    if x == one || x == nm1 {
        return true;
    }
    for _ in 1..s {
        x = x.modpow(&BigUint::from(2u32), n);
        if x == nm1 {
            return true;
        }
        if x == one {
            return false;
        }
    }
    false
}

/// Pocklington test from a partial factorization of n-1 whose certified part
/// exceeds sqrt(n).
fn pocklington(n: &BigUint) -> bool {
    let one = BigUint::one();
    let nm1 = n - &one;
    let mut m = nm1.clone();
    let (small, rest) = trial_divide(&mut m);
    let mut f = Factorization::one();
    for (p, e) in small {
        f.insert(BigInt::from(p), e);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED);
    let _unsplit = split_completely(rest, &mut f, &mut rng, Some(RHO_BUDGET));
    let mut certified = one.clone();
    let mut qs = Vec::new();
    for (p, e) in &f.factors {
        if f.probable.contains(p) {
            continue;
        }
        let pu = p.to_biguint().unwrap();
        certified *= pu.pow(*e);
        qs.push(pu);
    }
    if &certified * &certified <= *n {
        return false;
    }
    'prime: for q in qs {
        let e = &nm1 / &q;
        for a in 2u32..200 {
            let a = BigUint::from(a);
            if a.modpow(&nm1, n) != one {
                return false;
            }
            let t = a.modpow(&e, n);
            let g = (if t.is_zero() { n - &one } else { t - &one }).gcd(n);
            if g.is_one() {
                continue 'prime;
            }
        }
        return false;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Primality {
        primality(&s.parse::<BigInt>().unwrap())
    }

    #[test]
    fn small_cases() {
        assert_eq!(p("0"), Primality::Composite);
        assert_eq!(p("1"), Primality::Composite);
        assert_eq!(p("2"), Primality::Prime);
        assert_eq!(p("3"), Primality::Prime);
        assert_eq!(p("4"), Primality::Composite);
        assert_eq!(p("41"), Primality::Prime);
        assert_eq!(p("561"), Primality::Composite);
        assert_eq!(p("3215031751"), Primality::Composite);
        assert_eq!(p("1000000007"), Primality::Prime);
    }

    #[test]
    fn certificate_above_deterministic_range() {
        assert_eq!(p("92397921271034416798380481"), Primality::Prime);
        assert_eq!(p("92397921271034416798380483"), Primality::Composite);
    }

    #[test]
    fn pseudoprime_to_first_bases_is_rejected() {
        // strong pseudoprime to the bases 2 through 23
        assert_eq!(p("3825123056546413051"), Primality::Composite);
    }
}
