//! Desk-scale brute force for the representation n = p + q + 2^{v_1} +
//! ... + 2^{v_r} with p, q prime, every exponent >= 1, and r as small as
//! possible.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::Error;

pub const DEFAULT_SIEVE_LIMIT: u64 = 10_000_000;

/// Plain bit-set sieve of Eratosthenes, immutable after construction.
pub struct PrimeSieve {
    limit: u64,
    bits: Vec<u64>,
}

impl PrimeSieve {
    pub fn new(limit: u64) -> Self {
        let n = limit as usize + 1;
        let mut bits = vec![u64::MAX; n / 64 + 1];
        let set = |bits: &mut Vec<u64>, i: usize, prime: bool| {
            if prime {
                bits[i / 64] |= 1 << (i % 64);
            } else {
                bits[i / 64] &= !(1 << (i % 64));
            }
        };
        set(&mut bits, 0, false);
        if n > 1 {
            set(&mut bits, 1, false);
        }
        let mut p = 2usize;
        while p * p < n {
            if bits[p / 64] >> (p % 64) & 1 == 1 {
                let mut j = p * p;
                while j < n {
                    set(&mut bits, j, false);
                    j += p;
                }
            }
            p += 1;
        }
        PrimeSieve { limit, bits }
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn is_prime(&self, n: u64) -> bool {
        if n > self.limit {
            return is_prime_u64(n);
        }
        self.bits[(n / 64) as usize] >> (n % 64) & 1 == 1
    }
}

/// Deterministic Miller-Rabin, valid for every u64.
pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0u32;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = crate::num_theory::powmod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = crate::num_theory::mulmod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// A checked representation of n: p + q + sum of 2^{v_i}.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepresentationWitness {
    pub n: u64,
    pub p: u64,
    pub q: u64,
    /// exponent multiset, nondecreasing, every entry >= 1
    pub exponents: Vec<u32>,
}

impl RepresentationWitness {
    pub fn r(&self) -> usize {
        self.exponents.len()
    }

    /// Revalidate from scratch: exact sum, primality, exponent bounds.
    pub fn validate(&self) -> bool {
        let powers: u64 = self.exponents.iter().map(|&v| 1u64 << v).sum();
        self.n == self.p + self.q + powers
            && is_prime_u64(self.p)
            && is_prime_u64(self.q)
            && self.exponents.iter().all(|&v| v >= 1)
            && self.exponents.windows(2).all(|w| w[0] <= w[1])
    }
}

/// Goldbach check on even m >= 4 via the sieve: the smallest prime p
/// with m - p prime.
fn goldbach_pair(m: u64, sieve: &PrimeSieve) -> Option<(u64, u64)> {
    if m < 4 || !m.is_multiple_of(2) {
        return None;
    }
    if sieve.is_prime(m - 2) {
        return Some((2, m - 2));
    }
    let mut p = 3u64;
    while p <= m / 2 {
        if sieve.is_prime(p) && sieve.is_prime(m - p) {
            return Some((p, m - p));
        }
        p += 2;
    }
    None
}

fn search_exponents(
    n: u64,
    r: usize,
    min_exp: u32,
    chosen: &mut Vec<u32>,
    remaining: u64,
    sieve: &PrimeSieve,
) -> Option<RepresentationWitness> {
    if chosen.len() == r {
        let (p, q) = goldbach_pair(remaining, sieve)?;
        return Some(RepresentationWitness {
            n,
            p,
            q,
            exponents: chosen.clone(),
        });
    }
    let mut v = min_exp;
    while (1u64 << v) + 4 <= remaining {
        chosen.push(v);
        let found = search_exponents(n, r, v, chosen, remaining - (1u64 << v), sieve);
        chosen.pop();
        if found.is_some() {
            return found;
        }
        v += 1;
        if v >= 63 {
            break;
        }
    }
    None
}

/// Smallest r <= r_max admitting a witness for even n, with one witness.
/// Exhaustive over nondecreasing exponent multisets; the leftover even
/// part goes through the sieve-backed Goldbach check.
pub fn min_powers(
    n: u64,
    r_max: usize,
    sieve: &PrimeSieve,
) -> Result<Option<RepresentationWitness>, Error> {
    if n < 4 || !n.is_multiple_of(2) {
        return Err(Error::InvalidInput(format!(
            "min_powers: n must be even and >= 4, got {n}"
        )));
    }
    if n > sieve.limit() {
        return Err(Error::InvalidInput(format!(
            "min_powers: n={n} beyond the sieve limit {}",
            sieve.limit()
        )));
    }
    for r in 0..=r_max {
        let mut chosen = Vec::with_capacity(r);
        if let Some(w) = search_exponents(n, r, 1, &mut chosen, n, sieve) {
            debug_assert!(w.validate());
            return Ok(Some(w));
        }
    }
    Ok(None)
}

#[derive(Debug, Default)]
pub struct SweepResult {
    /// min_powers value -> how many n attained it
    pub histogram: BTreeMap<usize, u64>,
    /// n with no representation within r_max
    pub exceptions: Vec<u64>,
}

/// Sweep every even n in [from, to]; deterministic. The per-n outcomes go
/// to `on_result` in increasing n order (for TSV emission).
pub fn sweep<F>(
    from: u64,
    to: u64,
    r_max: usize,
    sieve: &PrimeSieve,
    mut on_result: F,
) -> Result<SweepResult, Error>
where
    F: FnMut(u64, &Option<RepresentationWitness>),
{
    if to > sieve.limit() {
        return Err(Error::InvalidInput(format!(
            "sweep: range end {to} beyond the sieve limit {}",
            sieve.limit()
        )));
    }
    let mut result = SweepResult::default();
    if from > to {
        return Ok(result);
    }
    let start = if from.is_multiple_of(2) { from.max(4) } else { from.max(3) + 1 };
    let ns: Vec<u64> = (start..=to).step_by(2).collect();
    for chunk in ns.chunks(8192) {
        let outcomes: Vec<(u64, Option<RepresentationWitness>)> = chunk
            .par_iter()
            .map(|&n| min_powers(n, r_max, sieve).map(|w| (n, w)))
            .collect::<Result<Vec<_>, _>>()?;
        for (n, outcome) in &outcomes {
            match outcome {
                Some(w) => *result.histogram.entry(w.r()).or_insert(0) += 1,
                None => result.exceptions.push(*n),
            }
            on_result(*n, outcome);
        }
    }
    Ok(result)
}
