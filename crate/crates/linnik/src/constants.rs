//! Assembly of the constant set (C0, C1, C2, C3, lambda, c): embedded
//! published enclosures, exact partial sums for C2, certified C3 lower
//! bounds with the tail estimate, and the checkpoint format for long
//! sweeps.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::admissibility::admissible_c3_min;
use crate::error::Error;
use crate::interval::{ln_rational, parse_decimal};
use crate::num_theory::{k_value, mult_order_2, powmod};
use crate::residue::h_vector;
use crate::CertifiedInterval;

/// Wrench's enclosure of C0 = prod_{p>2} (1 - (p-1)^{-2}); embedded as
/// data, not recomputed.
pub fn c0_enclosure() -> CertifiedInterval {
    enclosure_from_decimals("0.6601618158", "0.6601618159")
}

/// Chen's constant as used by Liu and Lu.
pub fn c1_liu_lu() -> CertifiedInterval {
    CertifiedInterval::from_rational(&parse_decimal("7.8209").unwrap())
}

/// Chen's constant as used by Heath-Brown and Puchta.
pub fn c1_heath_brown_puchta() -> CertifiedInterval {
    CertifiedInterval::from_rational(&parse_decimal("7.8342").unwrap())
}

/// Published enclosure of the full C2 sum (via the Pintz-Romani bound on
/// C2*C0 combined with Wrench's C0). Embedded as data; `c2_partial_sum`
/// exists for consistency checks only.
pub fn c2_enclosure() -> CertifiedInterval {
    enclosure_from_decimals("1.93642", "1.93656")
}

fn enclosure_from_decimals(lo: &str, hi: &str) -> CertifiedInterval {
    CertifiedInterval::from_rational_pair(
        &parse_decimal(lo).unwrap(),
        &parse_decimal(hi).unwrap(),
    )
}

/// The quintuple feeding the K-admissibility inequality, plus c.
#[derive(Debug, Clone)]
pub struct ConstantSet {
    pub c0: CertifiedInterval,
    pub c1: CertifiedInterval,
    pub c2: CertifiedInterval,
    pub c3: CertifiedInterval,
    pub lambda: CertifiedInterval,
    pub c: BigRational,
}

/// One published row of the related-problems table; display data only.
#[derive(Debug, Clone, Copy)]
pub struct ReferenceTableRow {
    pub problem: &'static str,
    pub required_c: &'static str,
    pub old_lambda: &'static str,
    pub new_lambda: &'static str,
    pub old_k: u32,
    pub new_k: u32,
}

pub const REFERENCE_TABLE: &[ReferenceTableRow] = &[
    ReferenceTableRow { problem: "A", required_c: "3/4", old_lambda: "0.887167", new_lambda: "0.8844473", old_k: 46, new_k: 45 },
    ReferenceTableRow { problem: "B", required_c: "3/4", old_lambda: "0.887167", new_lambda: "0.8844473", old_k: 35, new_k: 34 },
    ReferenceTableRow { problem: "C", required_c: "19/21", old_lambda: "0.965411", new_lambda: "0.9642399", old_k: 341, new_k: 330 },
    ReferenceTableRow { problem: "D", required_c: "113/126", old_lambda: "0.961917", new_lambda: "0.9606646", old_k: 106, new_k: 102 },
    ReferenceTableRow { problem: "E", required_c: "53/63", old_lambda: "0.935746", new_lambda: "0.9339489", old_k: 211, new_k: 205 },
    ReferenceTableRow { problem: "F", required_c: "109/126", old_lambda: "0.947313", new_lambda: "0.9457435", old_k: 161, new_k: 156 },
    ReferenceTableRow { problem: "G", required_c: "109/154", old_lambda: "0.862327", new_lambda: "0.8594000", old_k: 63, new_k: 62 },
    ReferenceTableRow { problem: "G on GRH", required_c: "1/2", old_lambda: "0.716344", new_lambda: "0.7163436", old_k: 31, new_k: 31 },
    ReferenceTableRow { problem: "H", required_c: "3/4", old_lambda: "0.887167", new_lambda: "0.8844473", old_k: 142, new_k: 138 },
    ReferenceTableRow { problem: "I", required_c: "19/21", old_lambda: "0.965411", new_lambda: "0.9642399", old_k: 1432, new_k: 1319 },
    ReferenceTableRow { problem: "J", required_c: "3/4", old_lambda: "0.887167", new_lambda: "0.8844473", old_k: 332, new_k: 323 },
];

/// Smallest-prime-factor sieve for fast factorization in the C2 sweep.
fn spf_sieve(limit: usize) -> Vec<u32> {
    let mut spf = vec![0u32; limit + 1];
    for i in 2..=limit {
        if spf[i] == 0 {
            let mut j = i;
            while j <= limit {
                if spf[j] == 0 {
                    spf[j] = i as u32;
                }
                j += i;
            }
        }
    }
    spf
}

fn order2_with_spf(d: u64, spf: &[u32]) -> u64 {
    if d == 1 {
        return 1;
    }
    let mut phi = 1u64;
    let mut m = d as usize;
    while m > 1 {
        let p = spf[m] as u64;
        let mut e = 0u32;
        while m.is_multiple_of(p as usize) {
            m /= p as usize;
            e += 1;
        }
        phi *= (p - 1) * p.pow(e - 1);
    }
    let mut order = phi;
    let mut f = phi as usize;
    while f > 1 {
        let p = spf[f] as u64;
        while f.is_multiple_of(p as usize) {
            f /= p as usize;
        }
        while order.is_multiple_of(p) && powmod(2, order / p, d) == 1 {
            order /= p;
        }
    }
    order
}

/// Certified enclosure of sum_{d <= d_max} k(2d-1)/eps(2d-1).
///
/// Terms are exact small rationals accumulated in interval arithmetic;
/// the lower endpoint is clamped so the result is monotone in d_max.
pub fn c2_partial_sum(d_max: u64) -> Result<CertifiedInterval, Error> {
    if d_max == 0 {
        return Err(Error::InvalidInput("c2_partial_sum: d_max >= 1".into()));
    }
    let limit = (2 * d_max - 1) as usize;
    let spf = spf_sieve(limit.max(2));
    let mut acc = CertifiedInterval::zero();
    for d in 1..=d_max {
        let m = 2 * d - 1;
        // k(m): zero unless m is squarefree; otherwise product of 1/(p-2)
        let mut mm = m as usize;
        let mut den = 1u128;
        let mut squarefree = true;
        while mm > 1 {
            let p = spf[mm] as usize;
            mm /= p;
            if mm.is_multiple_of(p) {
                squarefree = false;
                break;
            }
            den *= (p - 2) as u128;
        }
        if !squarefree {
            continue;
        }
        let eps = order2_with_spf(m, &spf);
        let term = BigRational::new(BigInt::one(), BigInt::from(den) * BigInt::from(eps));
        let t = CertifiedInterval::from_rational(&term);
        let lo = (acc.lo + t.lo).next_down().max(acc.lo);
        let hi = (acc.hi + t.hi).next_up();
        acc = CertifiedInterval::new(lo, hi);
    }
    Ok(acc)
}

/// Per-d record of the unconstrained C3 sweep; what the checkpoint file
/// stores.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TermRecord {
    pub d: u64,
    pub eps: u64,
    pub k_of_d: BigRational,
    pub counts_digest: String,
    /// 2 k(d) min_N H(d;N,K) / eps(d)^K, exact.
    pub term: BigRational,
}

fn rational_str(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

fn parse_rational(s: &str) -> Result<BigRational, Error> {
    let (n, d) = s
        .split_once('/')
        .ok_or_else(|| Error::Checkpoint(format!("bad rational field: {s}")))?;
    let num: BigInt = n
        .parse()
        .map_err(|_| Error::Checkpoint(format!("bad rational field: {s}")))?;
    let den: BigInt = d
        .parse()
        .map_err(|_| Error::Checkpoint(format!("bad rational field: {s}")))?;
    if den.is_zero() {
        return Err(Error::Checkpoint("zero denominator".into()));
    }
    Ok(BigRational::new(num, den))
}

fn compute_term(d: u64, k: u32) -> Result<Option<TermRecord>, Error> {
    let kd = k_value(d)?;
    if kd.is_zero() {
        return Ok(None);
    }
    let eps = mult_order_2(d)?;
    let v = h_vector(d, k)?;
    let mut hasher = Sha256::new();
    hasher.update(format!("{d}:{k}").as_bytes());
    for c in &v.counts {
        hasher.update(b":");
        hasher.update(c.to_string().as_bytes());
    }
    let digest = format!("{:x}", hasher.finalize())[..16].to_string();
    let min = v.counts.iter().min().unwrap().clone();
    let term = &kd * BigRational::from(BigInt::from(2)) * BigRational::from(BigInt::from(min))
        / BigRational::from(BigInt::from(eps)).pow(k as i32);
    Ok(Some(TermRecord {
        d,
        eps,
        k_of_d: kd,
        counts_digest: digest,
        term,
    }))
}

/// All nonzero terms for odd d <= d_max, in d order, reusing `known`
/// records and computing the rest in parallel.
pub fn unconstrained_terms(
    d_max: u64,
    k: u32,
    known: &BTreeMap<u64, TermRecord>,
) -> Result<Vec<TermRecord>, Error> {
    let mut out: Vec<TermRecord> = (1..=d_max)
        .step_by(2)
        .collect::<Vec<u64>>()
        .into_par_iter()
        .map(|d| match known.get(&d) {
            Some(r) => Ok(Some(r.clone())),
            None => compute_term(d, k),
        })
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .flatten()
        .collect();
    out.sort_by_key(|r| r.d);
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct C3Bound {
    pub exact: BigRational,
    pub interval: CertifiedInterval,
    /// Minimizing residue class mod M when the admissibility refinement
    /// was applied.
    pub worst_class: Option<u64>,
}

/// Certified lower bound on C3 at cutoff D: 2 sum_{d<=D} k(d) H_min
/// eps(d)^{-K}, with H_min either the plain minimum or the admissible
/// ("worst of the worst") constrained minimum.
pub fn c3_lower_bound(
    d_max: u64,
    k: u32,
    admissibility_modulus: Option<u64>,
) -> Result<C3Bound, Error> {
    if d_max == 0 || k < 2 {
        return Err(Error::InvalidInput(
            "c3_lower_bound: need D >= 1 and K >= 2".into(),
        ));
    }
    match admissibility_modulus {
        Some(m) if m > 1 => {
            let adm = admissible_c3_min(d_max, k, m)?;
            Ok(C3Bound {
                interval: CertifiedInterval::from_rational(&adm.value),
                exact: adm.value,
                worst_class: Some(adm.worst_class),
            })
        }
        _ => {
            let terms = unconstrained_terms(d_max, k, &BTreeMap::new())?;
            Ok(c3_bound_from_terms(&terms))
        }
    }
}

pub fn c3_bound_from_terms(terms: &[TermRecord]) -> C3Bound {
    let exact = terms
        .iter()
        .fold(BigRational::zero(), |acc, t| acc + &t.term);
    C3Bound {
        interval: CertifiedInterval::from_rational(&exact),
        exact,
        worst_class: None,
    }
}

/// Certified upper bound on the neglected tail beyond D:
/// 2 int_D^inf dt/(t(t-2)) = ln(D/(D-2)).
pub fn c3_tail_bound(d_max: u64) -> Result<CertifiedInterval, Error> {
    if d_max <= 2 {
        return Err(Error::InvalidInput("c3_tail_bound: D must exceed 2".into()));
    }
    let r = BigRational::new(BigInt::from(d_max), BigInt::from(d_max - 2));
    let (lo, hi) = ln_rational(&r)?;
    Ok(CertifiedInterval::from_rational_pair(&lo, &hi))
}

/// Write the header identifying which K the per-d terms belong to.
pub fn write_checkpoint_header<W: Write>(w: &mut W, k: u32) -> Result<(), Error> {
    writeln!(w, "# c3 checkpoint k={k}")?;
    Ok(())
}

/// Append checkpoint records as text lines:
/// d <TAB> eps <TAB> k_num/k_den <TAB> digest <TAB> term_num/term_den
pub fn append_checkpoint<W: Write>(w: &mut W, records: &[TermRecord]) -> Result<(), Error> {
    for r in records {
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}",
            r.d,
            r.eps,
            rational_str(&r.k_of_d),
            r.counts_digest,
            rational_str(&r.term)
        )?;
    }
    Ok(())
}

fn parse_checkpoint_line(line: &str) -> Result<TermRecord, Error> {
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() != 5 {
        return Err(Error::Checkpoint(format!(
            "expected 5 tab-separated fields, got {}",
            fields.len()
        )));
    }
    let d: u64 = fields[0]
        .parse()
        .map_err(|_| Error::Checkpoint(format!("bad d: {}", fields[0])))?;
    let eps: u64 = fields[1]
        .parse()
        .map_err(|_| Error::Checkpoint(format!("bad eps: {}", fields[1])))?;
    let k_of_d = parse_rational(fields[2])?;
    let digest = fields[3];
    if digest.len() != 16 || !digest.bytes().all(|b| b.is_ascii_hexdigit()) {
        return Err(Error::Checkpoint(format!("bad digest: {digest}")));
    }
    let term = parse_rational(fields[4])?;
    if term.is_negative() {
        return Err(Error::Checkpoint(format!("negative term at d={d}")));
    }
    Ok(TermRecord {
        d,
        eps,
        k_of_d,
        counts_digest: digest.to_string(),
        term,
    })
}

#[derive(Debug, Default)]
pub struct CheckpointFile {
    /// K declared in the header, when present
    pub k: Option<u32>,
    pub records: BTreeMap<u64, TermRecord>,
}

/// Read a checkpoint file. The file is append-only, so a torn final line
/// (unterminated or unparseable) is discarded; corruption anywhere else
/// is a hard error so a damaged file is never silently restarted.
pub fn read_checkpoint(path: &Path) -> Result<CheckpointFile, Error> {
    let data = std::fs::read_to_string(path)?;
    let terminated = data.ends_with('\n');
    let lines: Vec<&str> = data.lines().collect();
    let mut header_k = None;
    let mut records = BTreeMap::new();
    let mut prev_d = 0u64;
    for (idx, line) in lines.iter().enumerate() {
        let last = idx + 1 == lines.len();
        if line.starts_with('#') {
            if let Some(k) = line.split("k=").nth(1) {
                header_k = k.trim().parse::<u32>().ok();
            }
            continue;
        }
        match parse_checkpoint_line(line) {
            Ok(r) => {
                if r.d <= prev_d {
                    return Err(Error::Checkpoint(format!(
                        "{}: line {}: d values must be strictly increasing",
                        path.display(),
                        idx + 1
                    )));
                }
                if last && !terminated {
                    break; // torn final line: a complete record ends in newline
                }
                prev_d = r.d;
                records.insert(r.d, r);
            }
            Err(e) if last => {
                let _ = e; // discarded torn final line
                break;
            }
            Err(e) => {
                return Err(Error::Checkpoint(format!(
                    "{}: line {}: {}",
                    path.display(),
                    idx + 1,
                    e
                )));
            }
        }
    }
    Ok(CheckpointFile {
        k: header_k,
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::residue::h_bruteforce;
    use num_traits::ToPrimitive;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn c2_partial_small_values() {
        let s1 = c2_partial_sum(1).unwrap();
        assert!(s1.contains_rational(&rat(1, 1)) && s1.width() < 1e-12);
        let s2 = c2_partial_sum(2).unwrap();
        assert!(s2.contains_rational(&rat(3, 2)) && s2.width() < 1e-12);
        let s4 = c2_partial_sum(4).unwrap();
        assert!(s4.contains_rational(&rat(33, 20)) && s4.width() < 1e-12);
    }

    #[test]
    fn c2_partial_monotone_and_below_published() {
        let mut prev = 0.0f64;
        for d_max in [1u64, 2, 4, 10, 100, 1000, 5000] {
            let s = c2_partial_sum(d_max).unwrap();
            assert!(s.lo >= prev, "monotone lower endpoints");
            assert!(s.hi < 1.93656, "partial sums stay under the full-sum bound");
            prev = s.lo;
        }
    }

    #[test]
    fn c3_lower_bound_examples() {
        // D=1: only the d=1 term, exactly 2
        let b = c3_lower_bound(1, 6, None).unwrap();
        assert_eq!(b.exact, rat(2, 1));
        // D=5, K=11 via the brute-force oracle
        let mut expect = rat(2, 1);
        for d in [3u64, 5] {
            let eps = mult_order_2(d).unwrap();
            let v = h_bruteforce(d, 2).unwrap();
            let _ = v;
            let min = h_vector(d, 11)
                .unwrap()
                .counts
                .iter()
                .min()
                .unwrap()
                .clone();
            expect += k_value(d).unwrap()
                * rat(2, 1)
                * BigRational::from(BigInt::from(min))
                / BigRational::from(BigInt::from(eps)).pow(11);
        }
        let b = c3_lower_bound(5, 11, None).unwrap();
        assert_eq!(b.exact, expect);
        let x = b.exact.to_f64().unwrap();
        assert!((2.75..=2.85).contains(&x), "got {x}");
    }

    #[test]
    fn c3_monotone_in_d() {
        let mut prev = BigRational::zero();
        for d_max in [1u64, 5, 11, 21, 31] {
            let b = c3_lower_bound(d_max, 6, None).unwrap();
            assert!(b.exact >= prev);
            prev = b.exact;
        }
    }

    #[test]
    fn tail_bound_examples() {
        let t = c3_tail_bound(40_000).unwrap();
        assert!(t.hi < 5.1e-5 && t.lo > 4.9e-5);
        let t4 = c3_tail_bound(4).unwrap();
        assert!(t4.contains_scalar(std::f64::consts::LN_2));
        let t6 = c3_tail_bound(1_000_000).unwrap();
        assert!(t6.hi < 2.1e-6);
        assert!(c3_tail_bound(2).is_err());
    }

    #[test]
    fn tail_bound_dominates_finite_tail() {
        // 2 sum_{D < d <= D'} k(d)/d stays under the integral bound;
        // the partial sum is accumulated rounding upward, so the
        // comparison is sound
        let spf = spf_sieve(100_000);
        let mut sum = 0.0f64;
        for d in (1001..=99_999u64).step_by(2) {
            let mut mm = d as usize;
            let mut den = 1u64;
            let mut squarefree = true;
            while mm > 1 {
                let p = spf[mm] as usize;
                mm /= p;
                if mm.is_multiple_of(p) {
                    squarefree = false;
                    break;
                }
                den *= (p - 2) as u64;
            }
            if squarefree {
                let term = CertifiedInterval::from_rational(&rat(2, (den * d) as i64));
                sum = crate::interval::IntervalScalar::next_up_(sum + term.hi);
            }
        }
        let t = c3_tail_bound(1000).unwrap();
        assert!(t.hi > sum);
    }

    #[test]
    fn tail_strictly_decreasing() {
        let a = c3_tail_bound(1000).unwrap();
        let b = c3_tail_bound(2000).unwrap();
        let c = c3_tail_bound(40_000).unwrap();
        assert!(a.lo > b.hi && b.lo > c.hi);
    }

    #[test]
    fn checkpoint_roundtrip_and_torn_line() {
        let terms = unconstrained_terms(21, 5, &BTreeMap::new()).unwrap();
        let mut buf = Vec::new();
        write_checkpoint_header(&mut buf, 5).unwrap();
        append_checkpoint(&mut buf, &terms).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ck.txt");

        std::fs::write(&path, &buf).unwrap();
        let read = read_checkpoint(&path).unwrap();
        assert_eq!(read.k, Some(5));
        assert_eq!(read.records.len(), terms.len());
        for t in &terms {
            assert_eq!(&read.records[&t.d], t);
        }

        // torn final line is discarded, the rest kept
        let mut torn = buf.clone();
        torn.extend_from_slice(b"23\t11\t1/21");
        std::fs::write(&path, &torn).unwrap();
        let read = read_checkpoint(&path).unwrap();
        assert_eq!(read.records.len(), terms.len());

        // corruption in the middle is refused
        let text = String::from_utf8(buf).unwrap();
        let mut lines: Vec<&str> = text.lines().collect();
        lines[1] = "garbage line";
        std::fs::write(&path, format!("{}\n", lines.join("\n"))).unwrap();
        assert!(matches!(read_checkpoint(&path), Err(Error::Checkpoint(_))));
    }

    #[test]
    fn reference_table_shape() {
        assert_eq!(REFERENCE_TABLE.len(), 11);
        for row in REFERENCE_TABLE {
            assert!(row.new_k <= row.old_k);
            assert!(parse_decimal(row.required_c).is_ok());
        }
    }
}
