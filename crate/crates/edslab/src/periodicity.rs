//! Periodicity of the B-sequence modulo primes, Legendre-symbol patterns,
//! residue-class densities and the convergence heuristic.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

use crate::arith::{jacobi, primality::is_prime, totient, Rat};
use crate::curve::{self, Curve, Point};
use crate::eds::{EdsError, EdsSequence};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum PeriodicityError {
    #[error(transparent)]
    Eds(#[from] EdsError),
    #[error("{0} is not a prime")]
    NotPrime(u64),
    #[error("prime must exceed 3, got {0}")]
    SmallPrime(u64),
    #[error("prime must be 1 mod 4, got {0}")]
    NotOneModFour(u64),
    #[error("no period found within {0} terms")]
    NoPeriod(usize),
    #[error("residue {residue} is not a unit modulo {modulus}")]
    BadResidue { modulus: u64, residue: u64 },
    #[error("modulus must be positive")]
    ZeroModulus,
    #[error("no residue-class sets given")]
    EmptyList,
    #[error("malformed class-set line: {0}")]
    Parse(String),
    #[error("{0} is not a prime congruent to +-3 mod 8")]
    NotThreeModEight(u64),
    #[error("index {0} exceeds the cap of 200")]
    IndexTooLarge(u64),
    #[error("summation cap must be at most 10^8")]
    CapTooLarge,
}

fn check_prime(p: u64) -> Result<(), PeriodicityError> {
    if !is_prime(&BigInt::from(p)) {
        return Err(PeriodicityError::NotPrime(p));
    }
    Ok(())
}

/// Signed B_n mod p for n = 1..=n_max from an already computed sequence.
pub fn residues_of(seq: &EdsSequence, p: u64) -> Vec<u64> {
    let pb = BigInt::from(p);
    seq.terms()
        .iter()
        .map(|t| t.signed_b().mod_floor(&pb).to_u64().unwrap())
        .collect()
}

pub fn b_mod_p_sequence(e: &Curve, pt: &Point, p: u64, n_max: usize) -> Result<Vec<u64>, PeriodicityError> {
    check_prime(p)?;
    let seq = EdsSequence::compute(e, pt, n_max)?;
    Ok(residues_of(&seq, p))
}

/// Smallest pi <= len/2 with seq[i] = seq[i + pi] throughout.
pub fn minimal_period<T: PartialEq>(seq: &[T]) -> Option<usize> {
    (1..=seq.len() / 2).find(|&pi| (0..seq.len() - pi).all(|i| seq[i] == seq[i + pi]))
}

/// Legendre symbols (x/p) of residues.
pub fn symbols(residues: &[u64], p: u64) -> Vec<i8> {
    let pb = BigInt::from(p);
    residues.iter().map(|r| jacobi(&BigInt::from(*r), &pb)).collect()
}

fn mult_order(a: u64, p: u64) -> Option<u64> {
    if a % p == 0 {
        return None;
    }
    let mut x = a % p;
    let mut k = 1;
    while x != 1 {
        x = (x as u128 * a as u128 % p as u128) as u64;
        k += 1;
    }
    Some(k)
}

fn inv_mod(a: u64, p: u64) -> u64 {
    let (g, x, _) = egcd(a as i128, p as i128);
    debug_assert_eq!(g, 1);
    x.rem_euclid(p as i128) as u64
}

fn egcd(a: i128, b: i128) -> (i128, i128, i128) {
    if b == 0 {
        (a, 1, 0)
    } else {
        let (g, x, y) = egcd(b, a % b);
        (g, y, x - (a / b) * y)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WardData {
    pub p: u64,
    pub rho: Option<usize>,
    /// Order of the reduced point, when P is nonsingular mod p.
    pub point_order: Option<u64>,
    pub bad_prime: bool,
    pub epsilon: Option<u64>,
    pub kappa: Option<u64>,
    pub a_p: Option<i8>,
    pub pi_formula: Option<u64>,
    pub pi_observed: Option<usize>,
    pub symbol_period: Option<usize>,
}

/// Period data of the signed B-sequence mod p. Formula and observed period
/// are reported side by side; the formula needs rho > 3.
pub fn ward_data_from(seq: &EdsSequence, p: u64) -> Result<WardData, PeriodicityError> {
    check_prime(p)?;
    if p <= 3 {
        return Err(PeriodicityError::SmallPrime(p));
    }
    let res = residues_of(seq, p);
    let rho = res.iter().position(|r| *r == 0).map(|i| i + 1);
    let rd = curve::reduction_data(&seq.curve, p, &seq.point).map_err(EdsError::from)?;
    let (mut epsilon, mut kappa, mut a_p, mut pi_formula) = (None, None, None, None);
    if let Some(rho) = rho.filter(|r| *r > 3) {
        let e1 = mult_order(res[rho - 2], p);
        let k1 = mult_order(res[rho - 3] * inv_mod(res[1], p) % p, p);
        if let (Some(eps), Some(kap)) = (e1, k1) {
            let ap: i8 = if eps % 2 == 1 && kap % 2 == 1 {
                1
            } else if eps.trailing_zeros() == kap.trailing_zeros() {
                -1
            } else {
                0
            };
            let tau = eps.lcm(&kap);
            let pi = match ap {
                1 => rho as u64 * tau * 2,
                0 => rho as u64 * tau,
                _ => rho as u64 * tau / 2,
            };
            epsilon = Some(eps);
            kappa = Some(kap);
            a_p = Some(ap);
            pi_formula = Some(pi);
        }
    }
    Ok(WardData {
        p,
        rho,
        point_order: rd.point_order,
        bad_prime: rd.singular_curve,
        epsilon,
        kappa,
        a_p,
        pi_formula,
        pi_observed: minimal_period(&res),
        symbol_period: minimal_period(&symbols(&res, p)),
    })
}

pub fn ward_data(e: &Curve, pt: &Point, p: u64, n_max: usize) -> Result<WardData, PeriodicityError> {
    let seq = EdsSequence::compute(e, pt, n_max)?;
    ward_data_from(&seq, p)
}

/// Symbols (B_n/p) for n = 1..=symbol period.
pub fn jacobi_pattern_from(seq: &EdsSequence, p: u64) -> Result<Vec<i8>, PeriodicityError> {
    check_prime(p)?;
    if p % 4 != 1 {
        return Err(PeriodicityError::NotOneModFour(p));
    }
    let sy = symbols(&residues_of(seq, p), p);
    let per = minimal_period(&sy).ok_or(PeriodicityError::NoPeriod(sy.len()))?;
    Ok(sy[..per].to_vec())
}

pub fn jacobi_pattern(e: &Curve, pt: &Point, p: u64, n_max: usize) -> Result<Vec<i8>, PeriodicityError> {
    jacobi_pattern_from(&EdsSequence::compute(e, pt, n_max)?, p)
}

/// Units modulo `modulus`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResidueClassSet {
    modulus: u64,
    residues: Vec<u64>,
}

impl ResidueClassSet {
    pub fn new(modulus: u64, residues: impl IntoIterator<Item = u64>) -> Result<Self, PeriodicityError> {
        if modulus == 0 {
            return Err(PeriodicityError::ZeroModulus);
        }
        let mut rs: Vec<u64> = Vec::new();
        for r in residues {
            if r >= modulus || r.gcd(&modulus) != 1 {
                return Err(PeriodicityError::BadResidue { modulus, residue: r });
            }
            rs.push(r);
        }
        rs.sort_unstable();
        rs.dedup();
        Ok(ResidueClassSet { modulus, residues: rs })
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn residues(&self) -> &[u64] {
        &self.residues
    }

    pub fn contains(&self, n: u64) -> bool {
        self.residues.binary_search(&(n % self.modulus)).is_ok()
    }

    /// Reads `modulus: r1 r2 ...` lines, skipping blanks and `#` comments.
    pub fn parse_file(text: &str) -> Result<Vec<Self>, PeriodicityError> {
        text.lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::parse)
            .collect()
    }
}

impl FromStr for ResidueClassSet {
    type Err = PeriodicityError;

    fn from_str(line: &str) -> Result<Self, PeriodicityError> {
        let bad = || PeriodicityError::Parse(line.to_string());
        let (m, rest) = line.split_once(':').ok_or_else(bad)?;
        let m: u64 = m.trim().parse().map_err(|_| bad())?;
        let rs = rest
            .split_whitespace()
            .map(|r| r.parse::<u64>().map_err(|_| bad()))
            .collect::<Result<Vec<_>, _>>()?;
        ResidueClassSet::new(m, rs)
    }
}

impl fmt::Display for ResidueClassSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:", self.modulus)?;
        for r in &self.residues {
            write!(f, " {r}")?;
        }
        Ok(())
    }
}

/// Units s mod the symbol period whose symbol (B_s/p) is -1.
pub fn negative_classes_from(seq: &EdsSequence, p: u64) -> Result<ResidueClassSet, PeriodicityError> {
    check_prime(p)?;
    let sy = symbols(&residues_of(seq, p), p);
    let per = minimal_period(&sy).ok_or(PeriodicityError::NoPeriod(sy.len()))?;
    let m = per as u64;
    let rs = (0..m).filter(|s| s.gcd(&m) == 1).filter(|&s| {
        let idx = if s == 0 { per } else { s as usize };
        sy[idx - 1] == -1
    });
    ResidueClassSet::new(m, rs)
}

pub fn negative_classes(e: &Curve, pt: &Point, p: u64, n_max: usize) -> Result<ResidueClassSet, PeriodicityError> {
    negative_classes_from(&EdsSequence::compute(e, pt, n_max)?, p)
}

/// Density, among primes, of the union of the classes: the fraction of
/// units modulo the lcm of the moduli that reduce into some set.
pub fn density_union(sets: &[ResidueClassSet]) -> Result<Ratio<u64>, PeriodicityError> {
    if sets.is_empty() {
        return Err(PeriodicityError::EmptyList);
    }
    let l = sets.iter().fold(1u64, |acc, s| acc.lcm(&s.modulus));
    let hits = (0..l)
        .filter(|r| r.gcd(&l) == 1)
        .filter(|r| sets.iter().any(|s| s.contains(*r)))
        .count() as u64;
    Ok(Ratio::new(hits, totient(l)))
}

/// For s = +-3 mod 8 and n = s^e: whether (B_n / B_{n/s} over 5) = -1.
pub fn prime_power_refinement_from(seq: &EdsSequence, s: u64, e_exp: u32) -> Result<bool, PeriodicityError> {
    check_prime(s)?;
    if s % 8 != 3 && s % 8 != 5 {
        return Err(PeriodicityError::NotThreeModEight(s));
    }
    let n = s.checked_pow(e_exp).filter(|n| *n <= 200).ok_or(PeriodicityError::IndexTooLarge(s))?;
    let hi = seq.term(n as usize)?.signed_b();
    let lo = seq.term((n / s) as usize)?.signed_b();
    let (q, r) = hi.div_rem(&lo);
    debug_assert!(r.is_zero());
    Ok(jacobi(&q, &BigInt::from(5)) == -1)
}

pub fn prime_power_refinement(e: &Curve, pt: &Point, s: u64, e_exp: u32) -> Result<bool, PeriodicityError> {
    let n = s.checked_pow(e_exp).filter(|n| *n <= 200).ok_or(PeriodicityError::IndexTooLarge(s))?;
    prime_power_refinement_from(&EdsSequence::compute(e, pt, n as usize)?, s, e_exp)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HeuristicParams {
    pub rank: u32,
    pub num_disc: u32,
    pub x_cap: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeuristicReport {
    /// 1 - 2^-N.
    pub delta: Rat,
    /// Sum of m^(r - 1 - 2 delta) over m <= sqrt(x_cap).
    pub partial_sum: f64,
    pub converges: bool,
    /// Partial sum of n^-delta over n <= x_cap, the multiplicative-group analogue.
    pub mult_group_partial_sum: f64,
    pub mult_group_diverges: bool,
}

pub fn heuristic_report(params: HeuristicParams) -> Result<HeuristicReport, PeriodicityError> {
    if params.x_cap > 100_000_000 {
        return Err(PeriodicityError::CapTooLarge);
    }
    let two_n = BigInt::one() << params.num_disc as usize;
    let delta = Rat::one() - Rat::new(BigInt::one(), two_n);
    let d = delta.to_f64().unwrap();
    let r = params.rank as f64;
    let m_cap = (params.x_cap as f64).sqrt().floor() as u64;
    let exponent = r - 1.0 - 2.0 * d;
    let partial_sum: f64 = (1..=m_cap).map(|m| (m as f64).powf(exponent)).sum();
    let converges = &delta * Rat::from_integer(2.into()) > Rat::from_integer(params.rank.into());
    let mult_group_partial_sum: f64 = (1..=params.x_cap.min(1_000_000)).map(|n| (n as f64).powf(-d)).sum();
    // sum of n^-delta diverges for every delta <= 1
    let mult_group_diverges = delta <= Rat::one();
    Ok(HeuristicReport { delta, partial_sum, converges, mult_group_partial_sum, mult_group_diverges })
}
