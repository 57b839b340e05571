//! The "worst of the worst" refinement: instead of taking the worst
//! residue class of N independently for each d, restrict to sets of
//! residue classes that can hold simultaneously. Classes are coupled
//! through a smooth odd modulus M; a class a mod M constrains each d to
//! residues congruent to a modulo gcd(d, M).

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::Zero;
use rayon::prelude::*;

use crate::error::Error;
use crate::num_theory::{factorize, k_value, mult_order_2};
use crate::residue::h_vector;

pub const FULL_MODULUS: u64 = 255_255; // 3*5*7*11*13*17
pub const DESK_MODULUS: u64 = 15_015; // 3*5*7*11*13

#[derive(Debug, Clone, Copy)]
pub struct AdmissibilityConfig {
    /// Odd squarefree coupling modulus; 1 disables the refinement.
    pub modulus: u64,
    /// N is even throughout; every coupling modulus is odd, so parity
    /// never constrains the classes. Recorded, not enforced.
    pub parity_even: bool,
}

impl Default for AdmissibilityConfig {
    fn default() -> Self {
        AdmissibilityConfig {
            modulus: DESK_MODULUS,
            parity_even: true,
        }
    }
}

impl AdmissibilityConfig {
    pub fn with_modulus(modulus: u64) -> Result<Self, Error> {
        if modulus == 0 || modulus.is_multiple_of(2) || !factorize(modulus)?.is_squarefree() {
            return Err(Error::InvalidInput(format!(
                "admissibility modulus must be odd and squarefree, got {modulus}"
            )));
        }
        Ok(AdmissibilityConfig {
            modulus,
            parity_even: true,
        })
    }
}

/// Minimum of the count vector over residues i mod d with
/// i = a (mod gcd(d, M)); the unrestricted minimum when gcd = 1.
pub fn constrained_h_min(d: u64, k: u32, a: u64, modulus: u64) -> Result<BigUint, Error> {
    let v = h_vector(d, k)?;
    let g = d.gcd(&modulus);
    let residues: Vec<u64> = (0..d).filter(|i| i % g == a % g).collect();
    v.min_over(&residues)
}

/// One d's contribution, tabulated per residue class of gcd(d, M):
/// factor * min of the counts consistent with that class, where
/// factor = 2 k(d) / eps(d)^K.
struct StrideTable {
    g: u64,
    terms: Vec<BigRational>,
}

fn stride_table(d: u64, k: u32, modulus: u64) -> Result<Option<StrideTable>, Error> {
    let kd = k_value(d)?;
    if kd.is_zero() {
        return Ok(None);
    }
    let eps = mult_order_2(d)?;
    let v = h_vector(d, k)?;
    let factor = kd * BigRational::from(BigInt::from(2))
        / BigRational::from(BigInt::from(eps)).pow(k as i32);
    let g = d.gcd(&modulus);
    let mut terms = Vec::with_capacity(g as usize);
    for b in 0..g {
        let residues: Vec<u64> = (0..d).filter(|i| i % g == b).collect();
        let min = v.min_over(&residues)?;
        terms.push(&factor * BigRational::from(BigInt::from(min)));
    }
    Ok(Some(StrideTable { g, terms }))
}

pub struct AdmissibleMin {
    pub worst_class: u64,
    pub value: BigRational,
}

/// Minimum over classes a mod M of the coupled C3 partial sum
/// sum_{d <= D} 2 k(d) constrained_h_min(d,K,a,M) eps(d)^{-K},
/// together with the minimizing class (smallest such a on ties).
pub fn admissible_c3_min(d_max: u64, k: u32, modulus: u64) -> Result<AdmissibleMin, Error> {
    if modulus == 0 || modulus.is_multiple_of(2) {
        return Err(Error::InvalidInput(format!(
            "modulus must be odd and positive, got {modulus}"
        )));
    }
    let tables: Vec<StrideTable> = (1..=d_max)
        .step_by(2)
        .map(|d| stride_table(d, k, modulus))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .flatten()
        .collect();
    // classes only differ through tables with g > 1
    let base: BigRational = tables
        .iter()
        .filter(|t| t.g == 1)
        .map(|t| t.terms[0].clone())
        .fold(BigRational::zero(), |acc, t| acc + t);
    let coupled: Vec<&StrideTable> = tables.iter().filter(|t| t.g > 1).collect();
    if coupled.is_empty() {
        return Ok(AdmissibleMin {
            worst_class: 0,
            value: base,
        });
    }
    let best = (0..modulus)
        .into_par_iter()
        .map(|a| {
            let coupled_sum = coupled
                .iter()
                .map(|t| &t.terms[(a % t.g) as usize])
                .fold(BigRational::zero(), |acc, t| acc + t);
            (a, coupled_sum)
        })
        .reduce_with(|x, y| {
            // strict-less keeps the smallest class on ties, any reduce order
            if y.1 < x.1 || (y.1 == x.1 && y.0 < x.0) {
                y
            } else {
                x
            }
        })
        .unwrap();
    Ok(AdmissibleMin {
        worst_class: best.0,
        value: base + best.1,
    })
}
