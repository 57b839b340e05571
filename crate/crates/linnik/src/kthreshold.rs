//! The K-admissibility inequality: K is admissible once
//! lambda^{K-2} < C3 / ((C1 - 2) C2 + c C0^{-1} log 2).
//! Solves for the real threshold and the minimal certified integer K.

use num_rational::BigRational;

use crate::constants::{c3_lower_bound, ConstantSet};
use crate::error::Error;
use crate::CertifiedInterval;

#[derive(Debug, Clone)]
pub struct KThresholdResult {
    /// (C1 - 2) C2 + c C0^{-1} log 2
    pub denominator: CertifiedInterval,
    /// C3 / denominator; must sit in (0, 1)
    pub ratio: CertifiedInterval,
    /// solution of lambda^{K-2} = ratio, i.e. 2 + log(ratio)/log(lambda)
    pub k_real: CertifiedInterval,
    /// smallest integer K certified to satisfy the inequality
    pub k_int: u32,
}

#[derive(Debug, Clone)]
pub enum KSolution {
    Threshold(KThresholdResult),
    /// ratio >= 1: the inequality holds for every K >= 2
    AllAdmissible { denominator: CertifiedInterval, ratio: CertifiedInterval },
}

fn denominator(constants: &ConstantSet) -> CertifiedInterval {
    let two = CertifiedInterval::point(2.0);
    let c_iv = CertifiedInterval::from_rational(&constants.c);
    constants
        .c1
        .sub(&two)
        .mul(&constants.c2)
        .add(&c_iv.div(&constants.c0).mul(&CertifiedInterval::ln2()))
}

/// Certified check that lambda^{K-2} < ratio for a specific K.
fn admits(lambda: &CertifiedInterval, ratio: &CertifiedInterval, k: u32) -> bool {
    k >= 2 && lambda.powi(k - 2).hi < ratio.lo
}

pub fn solve_k(constants: &ConstantSet) -> Result<KSolution, Error> {
    if constants.lambda.hi >= 1.0 || constants.lambda.lo <= 0.0 {
        return Err(Error::InvalidInput(
            "solve_k: lambda must lie strictly inside (0, 1)".into(),
        ));
    }
    let denominator = denominator(constants);
    if denominator.lo <= 0.0 {
        return Err(Error::InvalidInput("solve_k: nonpositive denominator".into()));
    }
    let ratio = constants.c3.div(&denominator);
    if ratio.lo >= 1.0 {
        return Ok(KSolution::AllAdmissible { denominator, ratio });
    }
    if ratio.lo <= 0.0 {
        return Err(Error::InvalidInput("solve_k: ratio must be positive".into()));
    }
    // both logs are negative, so the quotient is positive
    let k_real = CertifiedInterval::point(2.0)
        .add(&ratio.ln()?.div(&constants.lambda.ln()?));
    let mut k_int = (k_real.lo.floor().max(1.0)) as u32;
    k_int = k_int.max(3);
    while !admits(&constants.lambda, &ratio, k_int) {
        k_int += 1;
        if k_int as f64 > k_real.hi + 16.0 {
            return Err(Error::InvalidInput(
                "solve_k: could not certify any integer K near the threshold".into(),
            ));
        }
    }
    Ok(KSolution::Threshold(KThresholdResult {
        denominator,
        ratio,
        k_real,
        k_int,
    }))
}

/// C3 itself depends on K, so the admissible K for a given D is found by
/// iterating: the smallest K in range with
/// lambda^{K-2} < c3_lower_bound(D, K) / denominator, certified.
pub fn solve_k_selfconsistent(
    d_max: u64,
    lambda: CertifiedInterval,
    c: BigRational,
    c0: CertifiedInterval,
    c1: CertifiedInterval,
    c2: CertifiedInterval,
    k_range: std::ops::RangeInclusive<u32>,
) -> Result<Option<(u32, KThresholdResult)>, Error> {
    for k in k_range {
        if k < 2 {
            continue;
        }
        let c3 = c3_lower_bound(d_max, k, None)?;
        let constants = ConstantSet {
            c0,
            c1,
            c2,
            c3: c3.interval,
            lambda,
            c: c.clone(),
        };
        match solve_k(&constants)? {
            KSolution::AllAdmissible { denominator, ratio } => {
                return Ok(Some((
                    k,
                    KThresholdResult {
                        denominator,
                        ratio,
                        k_real: CertifiedInterval::point(2.0),
                        k_int: k.max(2),
                    },
                )));
            }
            KSolution::Threshold(res) => {
                if admits(&constants.lambda, &res.ratio, k) {
                    return Ok(Some((k, res)));
                }
            }
        }
    }
    Ok(None)
}
