//! Exact integer primitives: factorization, the multiplicative order of 2,
//! the multiplicative weight `k`, and primitive-root testing.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::Error;

/// Prime factorization of a positive integer, primes strictly increasing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Factorization {
    pub n: u64,
    pub factors: Vec<(u64, u32)>,
}

impl Factorization {
    /// Every divisor of `n`, in no particular order.
    pub fn divisors(&self) -> Vec<u64> {
        let mut divs = vec![1u64];
        for &(p, e) in &self.factors {
            let mut next = Vec::with_capacity(divs.len() * (e as usize + 1));
            for &d in &divs {
                let mut pk = 1u64;
                for _ in 0..=e {
                    next.push(d * pk);
                    if pk <= u64::MAX / p {
                        pk *= p;
                    }
                }
            }
            divs = next;
        }
        divs
    }

    pub fn is_squarefree(&self) -> bool {
        self.factors.iter().all(|&(_, e)| e == 1)
    }

    /// Euler's totient of `n`.
    pub fn totient(&self) -> u64 {
        self.factors
            .iter()
            .fold(1u64, |acc, &(p, e)| acc * (p - 1) * p.pow(e - 1))
    }
}

/// Trial-division factorization. Inputs here never exceed the desk moduli
/// (all d and admissibility moduli are at most 255255), so no fancy methods.
pub fn factorize(n: u64) -> Result<Factorization, Error> {
    if n == 0 {
        return Err(Error::InvalidInput("factorize: n must be positive".into()));
    }
    let mut factors = Vec::new();
    let mut m = n;
    let mut p = 2u64;
    while p.saturating_mul(p) <= m {
        if m.is_multiple_of(p) {
            let mut e = 0u32;
            while m.is_multiple_of(p) {
                m /= p;
                e += 1;
            }
            factors.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if m > 1 {
        factors.push((m, 1));
    }
    Ok(Factorization { n, factors })
}

pub fn mulmod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub fn powmod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mulmod(acc, base, m);
        }
        base = mulmod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Multiplicative order of 2 modulo odd `d`: the least t >= 1 with
/// 2^t = 1 (mod d). `mult_order_2(1) = 1` by convention.
///
/// Computed by divisor descent on the totient rather than naive iteration,
/// so the order is cheap even at the admissibility modulus 255255.
pub fn mult_order_2(d: u64) -> Result<u64, Error> {
    if d == 0 || d.is_multiple_of(2) {
        return Err(Error::InvalidInput(format!(
            "mult_order_2: d must be odd and positive, got {d}"
        )));
    }
    if d == 1 {
        return Ok(1);
    }
    let phi = factorize(d)?.totient();
    let mut order = phi;
    for &(p, _) in &factorize(phi)?.factors {
        while order % p == 0 && powmod(2, order / p, d) == 1 {
            order /= p;
        }
    }
    debug_assert_eq!(powmod(2, order, d), 1);
    Ok(order)
}

/// The multiplicative weight k: k(p^e) = 0 when p = 2 or e >= 2, else
/// 1/(p-2). Exact rational end-to-end; callers round only at final assembly.
pub fn k_value(d: u64) -> Result<BigRational, Error> {
    let f = factorize(d)?;
    let mut acc = BigRational::one();
    for &(p, e) in &f.factors {
        if p == 2 || e >= 2 {
            return Ok(BigRational::zero());
        }
        acc /= BigRational::from(BigInt::from(p - 2));
    }
    Ok(acc)
}

/// True iff 2 generates the full unit group modulo odd `d` >= 3.
pub fn is_two_primitive_root(d: u64) -> Result<bool, Error> {
    if d < 3 || d.is_multiple_of(2) {
        return Err(Error::InvalidInput(format!(
            "is_two_primitive_root: d must be odd and >= 3, got {d}"
        )));
    }
    Ok(mult_order_2(d)? == factorize(d)?.totient())
}
