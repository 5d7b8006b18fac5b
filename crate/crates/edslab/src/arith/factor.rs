use std::sync::OnceLock;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::primality::{primality, Primality};
use super::Factorization;

pub const DEFAULT_SEED: u64 = 1;
const TRIAL_LIMIT: u32 = 1_000_000;

/// Primes below 10^6.
pub fn small_primes() -> &'static [u32] {
    static PRIMES: OnceLock<Vec<u32>> = OnceLock::new();
    PRIMES.get_or_init(|| {
        let n = TRIAL_LIMIT as usize;
        let mut sieve = vec![true; n];
        sieve[0] = false;
        sieve[1] = false;
        let mut i = 2;
        while i * i < n {
            if sieve[i] {
                let mut j = i * i;
                while j < n {
                    sieve[j] = false;
                    j += i;
                }
            }
            i += 1;
        }
        (0..n).filter(|&k| sieve[k]).map(|k| k as u32).collect()
    })
}

/// Complete factorization of a nonzero integer with the default rho seed.
pub fn factor(n: &BigInt) -> Factorization {
    factor_with_seed(n, DEFAULT_SEED)
}

/// Complete factorization: trial division below 10^6, then Pollard rho with
/// Brent cycle detection seeded deterministically.
pub fn factor_with_seed(n: &BigInt, seed: u64) -> Factorization {
    assert!(!n.is_zero(), "cannot factor zero");
    let mut f = Factorization::one();
    if n.is_negative() {
        f.sign = -1;
    }
    let mut m = n.abs().to_biguint().unwrap();
    let (found, rest) = trial_divide(&mut m);
    for (p, e) in found {
        f.insert(BigInt::from(p), e);
    }
    if !rest.is_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        split_completely(rest, &mut f, &mut rng, None);
    }
    f
}

/// Removes all prime factors below 10^6; returns them and the cofactor.
pub(crate) fn trial_divide(m: &mut BigUint) -> (Vec<(u32, u32)>, BigUint) {
    let mut found = Vec::new();
    if let Some(mut small) = m.to_u64() {
        for &p in small_primes() {
            let p64 = p as u64;
            if p64 * p64 > small {
                break;
            }
            let mut e = 0;
            while small % p64 == 0 {
                small /= p64;
                e += 1;
            }
            if e > 0 {
                found.push((p, e));
            }
        }
        if small > 1 && small < (TRIAL_LIMIT as u64) {
            found.push((small as u32, 1));
            small = 1;
        }
        return (found, BigUint::from(small));
    }
    let mut rest = m.clone();
    for &p in small_primes() {
        if (&rest % p).is_zero() {
            let mut e = 0;
            while (&rest % p).is_zero() {
                rest /= p;
                e += 1;
            }
            found.push((p, e));
            if let Some(r) = rest.to_u64() {
                let (more, r2) = trial_divide(&mut BigUint::from(r));
                found.extend(more.into_iter().filter(|(q, _)| *q > p));
                return (found, r2);
            }
        }
    }
    (found, rest)
}

/// Splits `m` (free of primes below 10^6) into primes. With a budget, stops
/// splitting a composite after that many rho iterations and returns it.
pub(crate) fn split_completely(
    m: BigUint,
    f: &mut Factorization,
    rng: &mut ChaCha8Rng,
    budget: Option<u64>,
) -> Vec<BigUint> {
    let mut stack = vec![m];
    let mut unsplit = Vec::new();
    while let Some(x) = stack.pop() {
        if x.is_one() {
            continue;
        }
        let limit = BigUint::from(TRIAL_LIMIT) * BigUint::from(TRIAL_LIMIT);
        if x < limit {
            f.insert(BigInt::from(x), 1);
            continue;
        }
        match primality(&BigInt::from(x.clone())) {
            Primality::Prime => {
                f.insert(BigInt::from(x), 1);
                continue;
            }
            Primality::ProbablePrime => {
                let p = BigInt::from(x);
                f.probable.insert(p.clone());
                f.insert(p, 1);
                continue;
            }
            Primality::Composite => {}
        }
        if let Some(r) = perfect_power_root(&x) {
            let (root, k) = r;
            for _ in 0..k {
                stack.push(root.clone());
            }
            continue;
        }
        match rho_brent(&x, rng, budget) {
            Some(d) => {
                let q = &x / &d;
                stack.push(d);
                stack.push(q);
            }
            None => unsplit.push(x),
        }
    }
    unsplit
}

fn perfect_power_root(x: &BigUint) -> Option<(BigUint, u32)> {
    let bits = x.bits() as u32;
    for k in 2..=bits / 20 + 2 {
        let r = x.nth_root(k);
        if r.pow(k) == *x {
            return Some((r, k));
        }
    }
    None
}

/// Brent's variant of Pollard rho; returns a nontrivial divisor of composite n.
fn rho_brent(n: &BigUint, rng: &mut ChaCha8Rng, budget: Option<u64>) -> Option<BigUint> {
    if n.is_even() {
        return Some(BigUint::from(2u32));
    }
    let one = BigUint::one();
    let mut spent: u64 = 0;
    loop {
        let c = BigUint::from(rng.gen::<u64>()) % n + &one;
        let mut y = BigUint::from(rng.gen::<u64>()) % n;
        let m: u64 = 128;
        let mut g = one.clone();
        let mut r: u64 = 1;
        let mut q = one.clone();
        let mut x = y.clone();
        let mut ys = y.clone();
        while g.is_one() {
            x = y.clone();
            for _ in 0..r {
                y = (&y * &y + &c) % n;
            }
            let mut k = 0;
            while k < r && g.is_one() {
                ys = y.clone();
                let steps = m.min(r - k);
                for _ in 0..steps {
                    y = (&y * &y + &c) % n;
                    let diff = if x > y { &x - &y } else { &y - &x };
                    q = (q * diff) % n;
                }
                g = q.gcd(n);
                k += steps;
                spent += steps;
            }
            r *= 2;
            if let Some(b) = budget {
                if spent > b && g.is_one() {
                    return None;
                }
            }
        }
        if g == *n {
            loop {
                ys = (&ys * &ys + &c) % n;
                let diff = if x > ys { &x - &ys } else { &ys - &x };
                g = diff.gcd(n);
                if !g.is_one() {
                    break;
                }
            }
        }
        if g != *n {
            return Some(g);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Num;

    #[test]
    fn sieve_size() {
        assert_eq!(small_primes().len(), 78498);
        assert_eq!(*small_primes().last().unwrap(), 999983);
    }

    #[test]
    fn splits_large_semiprime() {
        let p = BigInt::from(170749043903u64);
        let q = BigInt::from_str_radix("92397921271034416798380481", 10).unwrap();
        let f = factor(&(&p * &q));
        assert_eq!(f.factors.len(), 2);
        assert_eq!(f.exponent(&p), 1);
        assert_eq!(f.exponent(&q), 1);
        assert!(f.is_certified());
    }

    #[test]
    fn prime_powers_and_seeds() {
        let p = BigInt::from(1000003u64);
        let n = p.pow(3u32) * BigInt::from(12);
        for seed in [1, 7, 99] {
            let f = factor_with_seed(&n, seed);
            assert_eq!(f.value(), n);
            assert_eq!(f.exponent(&p), 3);
        }
    }
}
