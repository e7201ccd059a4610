//! Binary polynomials over GF(2), stored as exponent sets, plus the
//! irreducibility and order tests behind `poly_is_primitive`.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Exponents of the four BSEA-1 feedback polynomials P0..P3, highest first.
pub const BSEA1_POLY_EXPONENTS: [&[u64]; 4] = [
    &[23, 22, 20, 18, 17, 13, 11, 10, 9, 8, 4, 3, 2, 1, 0],
    &[29, 28, 27, 25, 24, 23, 22, 21, 18, 17, 13, 11, 10, 6, 5, 3, 2, 1, 0],
    &[31, 30, 27, 25, 24, 23, 22, 21, 20, 16, 15, 13, 12, 11, 10, 9, 8, 4, 3, 1, 0],
    &[37, 34, 33, 32, 30, 29, 26, 24, 20, 19, 18, 17, 16, 13, 11, 8, 7, 6, 4, 2, 0],
];

/// Prime factorizations of 2^L - 1 for the four BSEA-1 register lengths
/// (23, 29, 31, 37). Each product was re-verified by multiplication before
/// being hard-coded, and `poly_is_primitive` re-checks both the product and
/// the primality of every factor at run time.
pub const BSEA1_FACTORIZATIONS: [&[u64]; 4] = [
    &[47, 178481],
    &[233, 1103, 2089],
    &[2147483647],
    &[223, 616318177],
];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PolyError {
    #[error("polynomial must contain the constant term x^0")]
    MissingConstantTerm,
    #[error("polynomial degree must be at least 1")]
    DegreeZero,
    #[error("exponent {0} exceeds the supported maximum of 63")]
    ExponentTooLarge(u64),
    #[error("factor product {product} does not equal 2^{degree} - 1 = {expected}")]
    FactorProductMismatch {
        product: u128,
        degree: u32,
        expected: u64,
    },
    #[error("claimed prime factor {0} is not prime")]
    FactorNotPrime(u64),
}

/// Polynomial over GF(2) as the set of exponents with coefficient 1, packed
/// into a word (bit e set means the term x^e is present). Serialized as a
/// descending exponent list, the form used in params files.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<u64>", into = "Vec<u64>")]
pub struct BinaryPolynomial {
    mask: u64,
}

impl BinaryPolynomial {
    /// Build from an exponent list (order and duplicates are irrelevant).
    /// The constant term must be present and the degree must be in [1, 63].
    pub fn new(exponents: &[u64]) -> Result<Self, PolyError> {
        let mut mask = 0u64;
        for &e in exponents {
            if e > 63 {
                return Err(PolyError::ExponentTooLarge(e));
            }
            mask |= 1 << e;
        }
        if mask & 1 == 0 {
            return Err(PolyError::MissingConstantTerm);
        }
        if mask == 1 {
            return Err(PolyError::DegreeZero);
        }
        Ok(Self { mask })
    }

    pub fn degree(&self) -> u32 {
        63 - self.mask.leading_zeros()
    }

    /// Exponents in descending order.
    pub fn exponents(&self) -> Vec<u64> {
        (0..=self.degree() as u64)
            .rev()
            .filter(|&e| self.mask >> e & 1 == 1)
            .collect()
    }

    pub fn has_term(&self, e: u32) -> bool {
        e <= 63 && self.mask >> e & 1 == 1
    }

    /// Feedback tap mask for an LFSR of length `degree()`: every term except
    /// the leading one.
    pub fn tap_mask(&self) -> u64 {
        self.mask & !(1 << self.degree())
    }
}

impl TryFrom<Vec<u64>> for BinaryPolynomial {
    type Error = PolyError;

    fn try_from(exponents: Vec<u64>) -> Result<Self, PolyError> {
        Self::new(&exponents)
    }
}

impl From<BinaryPolynomial> for Vec<u64> {
    fn from(p: BinaryPolynomial) -> Vec<u64> {
        p.exponents()
    }
}

impl fmt::Display for BinaryPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.exponents().into_iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            match e {
                0 => write!(f, "1")?,
                1 => write!(f, "x")?,
                _ => write!(f, "x^{e}")?,
            }
        }
        Ok(())
    }
}

impl fmt::Debug for BinaryPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BinaryPolynomial({self})")
    }
}

/// True iff `p` is irreducible and x generates the full multiplicative group
/// of GF(2^degree), i.e. x has order exactly 2^degree - 1 modulo `p`.
///
/// The caller supplies the prime factorization of 2^degree - 1 (with
/// multiplicity); shipping a factoring engine for 60-bit Mersenne numbers is
/// not worth it when the four production values are textbook constants. The
/// factorization is still validated here: the product must match and every
/// factor must pass a primality test.
pub fn poly_is_primitive(p: &BinaryPolynomial, factorization: &[u64]) -> Result<bool, PolyError> {
    let degree = p.degree();
    let order = (1u64 << degree).wrapping_sub(1);

    let mut product = 1u128;
    for &q in factorization {
        product = product.saturating_mul(q as u128);
    }
    if product != order as u128 {
        return Err(PolyError::FactorProductMismatch {
            product,
            degree,
            expected: order,
        });
    }
    if let Some(&q) = factorization.iter().find(|&&q| !is_prime_u64(q)) {
        return Err(PolyError::FactorNotPrime(q));
    }

    let modulus = p.mask as u128;
    if !is_irreducible(modulus, degree) {
        return Ok(false);
    }
    if powmod(2, order, modulus) != 1 {
        return Ok(false);
    }
    let mut distinct = factorization.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    Ok(distinct.iter().all(|&q| powmod(2, order / q, modulus) != 1))
}

/// Rabin's test: p of degree n is irreducible iff x^(2^n) = x (mod p) and
/// gcd(x^(2^(n/d)) - x, p) = 1 for every prime divisor d of n.
fn is_irreducible(modulus: u128, degree: u32) -> bool {
    let x = 0b10u64;
    for d in prime_divisors(degree) {
        let r = frobenius_power(x, degree / d, modulus);
        if poly_gcd((r ^ x) as u128, modulus) != 1 {
            return false;
        }
    }
    frobenius_power(x, degree, modulus) == x
}

/// x-raised-to-2^k modulo `modulus`, by k squarings.
fn frobenius_power(base: u64, k: u32, modulus: u128) -> u64 {
    let mut r = base;
    for _ in 0..k {
        r = mulmod(r, r, modulus);
    }
    r
}

fn prime_divisors(mut n: u32) -> Vec<u32> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            out.push(d);
            while n % d == 0 {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

fn poly_degree_bits(a: u128) -> i32 {
    127 - a.leading_zeros() as i32
}

fn poly_rem(mut a: u128, m: u128) -> u128 {
    let md = poly_degree_bits(m);
    while poly_degree_bits(a) >= md {
        a ^= m << (poly_degree_bits(a) - md);
    }
    a
}

fn poly_gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, poly_rem(a, b));
    }
    a
}

/// Carryless product of two GF(2)[x] polynomials of degree < 64.
fn clmul(a: u64, b: u64) -> u128 {
    let mut acc = 0u128;
    let mut a = a;
    let mut shift = 0;
    while a != 0 {
        let tz = a.trailing_zeros();
        shift += tz;
        acc ^= (b as u128) << shift;
        a >>= tz;
        a >>= 1;
        shift += 1;
    }
    acc
}

fn mulmod(a: u64, b: u64, modulus: u128) -> u64 {
    poly_rem(clmul(a, b), modulus) as u64
}

fn powmod(base: u64, mut exp: u64, modulus: u128) -> u64 {
    let mut result = poly_rem(1, modulus) as u64;
    let mut base = poly_rem(base as u128, modulus) as u64;
    while exp > 0 {
        if exp & 1 == 1 {
            result = mulmod(result, base, modulus);
        }
        base = mulmod(base, base, modulus);
        exp >>= 1;
    }
    result
}

/// Deterministic Miller-Rabin, valid for all u64 with this witness set.
fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = modpow_u64(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = (x as u128 * x as u128 % n as u128) as u64;
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn modpow_u64(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut result = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            result = (result as u128 * base as u128 % m as u128) as u64;
        }
        base = (base as u128 * base as u128 % m as u128) as u64;
        exp >>= 1;
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::galois::Lfsr;

    #[test]
    fn construction_validates() {
        assert_eq!(
            BinaryPolynomial::new(&[3, 1]),
            Err(PolyError::MissingConstantTerm)
        );
        assert_eq!(BinaryPolynomial::new(&[0]), Err(PolyError::DegreeZero));
        assert_eq!(
            BinaryPolynomial::new(&[64, 0]),
            Err(PolyError::ExponentTooLarge(64))
        );
        let p = BinaryPolynomial::new(&[1, 0, 3, 3]).unwrap();
        assert_eq!(p.degree(), 3);
        assert_eq!(p.exponents(), vec![3, 1, 0]);
        assert_eq!(p.tap_mask(), 0b011);
    }

    #[test]
    fn display_and_serde() {
        let p = BinaryPolynomial::new(&[5, 2, 1, 0]).unwrap();
        assert_eq!(p.to_string(), "x^5 + x^2 + x + 1");
        let json = serde_json::to_string(&p).unwrap();
        assert_eq!(json, "[5,2,1,0]");
        let back: BinaryPolynomial = serde_json::from_str(&json).unwrap();
        assert_eq!(back, p);
        assert!(serde_json::from_str::<BinaryPolynomial>("[5,2,1]").is_err());
    }

    #[test]
    fn primitive_examples() {
        let p = BinaryPolynomial::new(&[3, 1, 0]).unwrap();
        assert_eq!(poly_is_primitive(&p, &[7]), Ok(true));

        // (x + 1)(x^2 + x + 1): reducible.
        let p = BinaryPolynomial::new(&[3, 0]).unwrap();
        assert_eq!(poly_is_primitive(&p, &[7]), Ok(false));

        // Irreducible cyclotomic factor, but x has order 5, not 15.
        let p = BinaryPolynomial::new(&[4, 3, 2, 1, 0]).unwrap();
        assert_eq!(poly_is_primitive(&p, &[3, 5]), Ok(false));
    }

    #[test]
    fn factorization_is_validated() {
        let p = BinaryPolynomial::new(&[4, 1, 0]).unwrap();
        assert_eq!(
            poly_is_primitive(&p, &[7]),
            Err(PolyError::FactorProductMismatch {
                product: 7,
                degree: 4,
                expected: 15,
            })
        );
        assert_eq!(
            poly_is_primitive(&p, &[15]),
            Err(PolyError::FactorNotPrime(15))
        );
        assert_eq!(poly_is_primitive(&p, &[3, 5]), Ok(true));
    }

    /// Cross-check against the period definition of primitivity: for every
    /// valid polynomial of degree 2..=8, the algebraic test must agree with
    /// whether the LFSR it defines cycles through all 2^L - 1 nonzero states.
    #[test]
    fn exhaustive_agreement_with_period_oracle() {
        let factors: [&[u64]; 7] = [
            &[3],
            &[7],
            &[3, 5],
            &[31],
            &[3, 3, 7],
            &[127],
            &[3, 5, 17],
        ];
        for degree in 2u32..=8 {
            let order = (1u64 << degree) - 1;
            for interior in 0..(1u64 << (degree - 1)) {
                let mask = (1 << degree) | (interior << 1) | 1;
                let exps: Vec<u64> = (0..=degree as u64).filter(|&e| mask >> e & 1 == 1).collect();
                let p = BinaryPolynomial::new(&exps).unwrap();
                let algebraic = poly_is_primitive(&p, factors[degree as usize - 2]).unwrap();

                let mut lfsr = Lfsr::new(&p, 1);
                let mut period = 0u64;
                loop {
                    lfsr.clock();
                    period += 1;
                    if lfsr.state() == 1 || period > order {
                        break;
                    }
                }
                assert_eq!(
                    algebraic,
                    period == order,
                    "disagreement for {p} (period {period})"
                );
            }
        }
    }

    #[test]
    fn bsea1_polynomials_are_primitive() {
        let lengths = [23, 29, 31, 37];
        for i in 0..4 {
            let p = BinaryPolynomial::new(BSEA1_POLY_EXPONENTS[i]).unwrap();
            assert_eq!(p.degree(), lengths[i]);
            assert_eq!(poly_is_primitive(&p, BSEA1_FACTORIZATIONS[i]), Ok(true));
        }
    }

    #[test]
    fn primality_helper() {
        assert!(is_prime_u64(2));
        assert!(is_prime_u64(2147483647));
        assert!(is_prime_u64(616318177));
        assert!(is_prime_u64(178481));
        assert!(!is_prime_u64(1));
        assert!(!is_prime_u64(178483 * 3));
        assert!(!is_prime_u64((1u64 << 29) - 1));
    }
}
