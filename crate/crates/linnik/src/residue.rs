//! Residue-class counts of power-of-2 sums: for odd d and K >= 1, the
//! vector whose entry at residue i is
//! #{(v_1..v_K) in [1, eps(d)]^K : sum 2^{v_j} = i (mod d)},
//! computed by vector-rotation dynamic programming with a brute-force
//! oracle and the primitive-root closed form alongside.

use num_bigint::{BigInt, BigUint};
use num_traits::{One, ToPrimitive, Zero};

use crate::error::Error;
use crate::num_theory::{factorize, is_two_primitive_root, mult_order_2};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResidueCountVector {
    pub d: u64,
    pub k: u32,
    pub counts: Vec<BigUint>,
}

impl ResidueCountVector {
    /// Total tuple count; must equal eps(d)^K.
    pub fn total(&self) -> BigUint {
        self.counts.iter().sum()
    }

    pub fn min_over(&self, residues: &[u64]) -> Result<BigUint, Error> {
        if residues.is_empty() {
            return Err(Error::InvalidInput("empty residue set".into()));
        }
        let mut best: Option<&BigUint> = None;
        for &r in residues {
            let c = self.counts.get(r as usize).ok_or_else(|| {
                Error::InvalidInput(format!("residue {r} out of range for d={}", self.d))
            })?;
            if best.is_none_or(|b| c < b) {
                best = Some(c);
            }
        }
        Ok(best.unwrap().clone())
    }
}

fn validate(d: u64, k: u32) -> Result<(), Error> {
    if d == 0 || d.is_multiple_of(2) {
        return Err(Error::InvalidInput(format!("d must be odd, got {d}")));
    }
    if k == 0 {
        return Err(Error::InvalidInput("K must be >= 1".into()));
    }
    Ok(())
}

/// Powers 2^v mod d for v = 1..=eps(d).
fn power_cycle(d: u64) -> Result<Vec<u64>, Error> {
    let eps = mult_order_2(d)?;
    let mut powers = Vec::with_capacity(eps as usize);
    let mut p = 2 % d;
    for _ in 0..eps {
        powers.push(p);
        p = (p * 2) % d;
    }
    Ok(powers)
}

/// The rotation DP. One power of 2 seeds the vector (shifted by the
/// baseline 2(K-1) so later rotations by 2^v - 2 substitute 2^v for a
/// baseline 2); each remaining power contributes the unrotated copy plus
/// the rotations for v = 2..eps(d). The loop runs to eps(d) inclusive;
/// running it only to eps(d)-1 breaks the total-count invariant, which
/// the oracle tests pin down.
pub fn h_vector(d: u64, k: u32) -> Result<ResidueCountVector, Error> {
    validate(d, k)?;
    let powers = power_cycle(d)?;
    // counts are bounded by eps(d)^K; stay in u128 whenever that fits
    let fits_u128 = (powers.len() as u128)
        .checked_pow(k)
        .is_some();
    let counts = if fits_u128 {
        h_vector_inner::<u128>(d, k, &powers)
            .into_iter()
            .map(BigUint::from)
            .collect()
    } else {
        h_vector_inner::<BigUint>(d, k, &powers)
    };
    Ok(ResidueCountVector { d, k, counts })
}

trait CountCell: Clone {
    fn zero() -> Self;
    fn bump(&mut self);
    fn add_from(&mut self, other: &Self);
}

impl CountCell for u128 {
    fn zero() -> Self {
        0
    }
    fn bump(&mut self) {
        *self += 1;
    }
    fn add_from(&mut self, other: &Self) {
        *self += other;
    }
}

impl CountCell for BigUint {
    fn zero() -> Self {
        <BigUint as Zero>::zero()
    }
    fn bump(&mut self) {
        *self += 1u32;
    }
    fn add_from(&mut self, other: &Self) {
        *self += other;
    }
}

fn h_vector_inner<C: CountCell>(d: u64, k: u32, powers: &[u64]) -> Vec<C> {
    let du = d as usize;
    let mut w = vec![C::zero(); du];
    let base = (2 * (k as u64 - 1)) % d;
    for &p in powers {
        w[((base + p) % d) as usize].bump();
    }
    for _ in 1..k {
        let mut y = vec![C::zero(); du];
        for &p in powers {
            // offset by 2^v - 2, i.e. swap one baseline 2 for 2^v
            let r = ((p + d - 2 % d) % d) as usize;
            for (i, cell) in w.iter().enumerate() {
                let j = i + r;
                let j = if j >= du { j - du } else { j };
                y[j].add_from(cell);
            }
        }
        w = y;
    }
    w
}

/// Minimum count over the allowed residues (all residues when `None`).
pub fn h_min(d: u64, k: u32, allowed: Option<&[u64]>) -> Result<BigUint, Error> {
    let v = h_vector(d, k)?;
    match allowed {
        Some(rs) => v.min_over(rs),
        None => {
            let all: Vec<u64> = (0..d).collect();
            v.min_over(&all)
        }
    }
}

/// Brute-force oracle: direct enumeration of all eps(d)^K tuples.
/// Refuses outright when the tuple count exceeds 10^7.
pub fn h_bruteforce(d: u64, k: u32) -> Result<ResidueCountVector, Error> {
    validate(d, k)?;
    let powers = power_cycle(d)?;
    let eps = powers.len() as u64;
    let tuples = eps.checked_pow(k).filter(|&t| t <= 100_000_000);
    let tuples = tuples.ok_or_else(|| {
        Error::BudgetExceeded(format!(
            "h_bruteforce: eps({d})^{k} exceeds the 10^8 tuple budget"
        ))
    })?;
    let mut counts = vec![0u64; d as usize];
    let mut idx = vec![0usize; k as usize];
    for _ in 0..tuples {
        let s: u64 = idx.iter().map(|&i| powers[i]).sum();
        counts[(s % d) as usize] += 1;
        for digit in idx.iter_mut() {
            *digit += 1;
            if *digit < powers.len() {
                break;
            }
            *digit = 0;
        }
    }
    Ok(ResidueCountVector {
        d,
        k,
        counts: counts.into_iter().map(BigUint::from).collect(),
    })
}

/// Closed form for prime d with 2 a primitive root:
/// ((d-1)^K - (-1)^K)/d off the zero class, ((d-1)^K + (-1)^K (d-1))/d on it.
/// Primality matters: mod 9 the powers of 2 generate the units but never
/// reach 3 or 6, and the even-spread argument behind the formula breaks.
pub fn h_closed_form(d: u64, k: u32, n_divisible: bool) -> Result<BigUint, Error> {
    validate(d, k)?;
    if d == 1 {
        return Ok(BigUint::one());
    }
    let f = factorize(d)?;
    if f.factors.len() != 1 || f.factors[0].1 != 1 {
        return Err(Error::InvalidInput(format!(
            "h_closed_form: {d} is not prime"
        )));
    }
    if !is_two_primitive_root(d)? {
        return Err(Error::InvalidInput(format!(
            "h_closed_form: 2 is not a primitive root mod {d}"
        )));
    }
    let sign = if k.is_multiple_of(2) {
        BigInt::one()
    } else {
        -BigInt::one()
    };
    let main = BigInt::from(d - 1).pow(k);
    let numer = if n_divisible {
        main + sign * BigInt::from(d - 1)
    } else {
        main - sign
    };
    let (q, r) = num_integer::Integer::div_rem(&numer, &BigInt::from(d));
    debug_assert!(r.is_zero(), "closed form must divide exactly");
    q.to_biguint()
        .ok_or_else(|| Error::InvalidInput("negative closed-form value".into()))
}

#[allow(dead_code)]
fn to_u64s(v: &ResidueCountVector) -> Vec<u64> {
    v.counts.iter().map(|c| c.to_u64().unwrap()).collect()
}
