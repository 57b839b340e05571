//! End-to-end acceptance checks. Each test covers one criterion and
//! prints a single pass/fail line (visible with `--nocapture`).

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use linnik::admissibility::admissible_c3_min;
use linnik::cli::{render, run_c3, run_solve_k, Format, Preset, Report};
use linnik::constants::{c2_partial_sum, c3_lower_bound, c3_tail_bound};
use linnik::expsum::{delta_enclosure, g_eval, ExpSumConfig};
use linnik::num_theory::{factorize, is_two_primitive_root, mult_order_2};
use linnik::residue::{h_bruteforce, h_closed_form, h_vector};
use linnik::verifier::{sweep, PrimeSieve};

fn report<T>(name: &str, outcome: Result<T, String>) -> T {
    match outcome {
        Ok(v) => {
            println!("acceptance: {name} ... pass");
            v
        }
        Err(msg) => {
            println!("acceptance: {name} ... FAIL ({msg})");
            panic!("{name}: {msg}");
        }
    }
}

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

#[test]
fn k_threshold_reproduction() {
    let cases: [(Preset, f64, f64, u32); 4] = [
        (Preset::HbpUncond, 11.4549, 2e-3, 12),
        (Preset::HbpGrh, 6.1432, 2e-3, 7),
        (Preset::NewUncond, 11.0953, 2e-3, 12),
        (Preset::NewGrh, 6.09353, 1e-2, 7),
    ];
    let outcome = (|| {
        for (preset, published, tol, expected_k) in cases {
            let r = run_solve_k(Some(preset), None, None, None, None, None, None)
                .map_err(|e| e.to_string())?;
            let kr = r.k_real.ok_or_else(|| format!("{preset:?}: no threshold"))?;
            let lo: f64 = kr[0].parse().unwrap();
            let hi: f64 = kr[1].parse().unwrap();
            check(
                lo <= published + tol && hi >= published - tol,
                format!("{preset:?}: k_real [{lo}, {hi}] vs published {published}"),
            )?;
            check(
                r.k_int == Some(expected_k),
                format!("{preset:?}: k_int {:?} vs {expected_k}", r.k_int),
            )?;
        }
        Ok(())
    })();
    report("k-threshold reproduction", outcome);
}

#[test]
fn residue_oracle_equivalence() {
    let outcome = (|| {
        for d in (1..=45u64).step_by(2) {
            if !factorize(d).map_err(|e| e.to_string())?.is_squarefree() {
                continue;
            }
            for k in 1..=5u32 {
                let fast = h_vector(d, k).map_err(|e| e.to_string())?;
                let slow = h_bruteforce(d, k).map_err(|e| e.to_string())?;
                check(
                    fast.counts == slow.counts,
                    format!("d={d} K={k}: DP disagrees with enumeration"),
                )?;
            }
        }
        Ok(())
    })();
    report("residue counts match the brute-force oracle", outcome);
}

#[test]
fn residue_total_count() {
    let outcome = (|| {
        for d in (1..=2000u64).step_by(2) {
            let eps = mult_order_2(d).map_err(|e| e.to_string())?;
            let v = h_vector(d, 11).map_err(|e| e.to_string())?;
            let expected = BigUint::from(eps).pow(11);
            check(
                v.total() == expected,
                format!("d={d}: total {} != eps^11", v.total()),
            )?;
        }
        Ok(())
    })();
    report("total residue count is eps(d)^K for odd d <= 2000, K = 11", outcome);
}

#[test]
fn residue_closed_form() {
    let outcome = (|| {
        for d in (3..=200u64).step_by(2) {
            let f = factorize(d).map_err(|e| e.to_string())?;
            if f.factors.len() != 1
                || f.factors[0].1 != 1
                || !is_two_primitive_root(d).map_err(|e| e.to_string())?
            {
                continue;
            }
            for k in [2u32, 6, 11] {
                let v = h_vector(d, k).map_err(|e| e.to_string())?;
                let on = h_closed_form(d, k, true).map_err(|e| e.to_string())?;
                let off = h_closed_form(d, k, false).map_err(|e| e.to_string())?;
                check(
                    v.counts[0] == on,
                    format!("d={d} K={k}: on-class count != closed form"),
                )?;
                for i in 1..d as usize {
                    check(
                        v.counts[i] == off,
                        format!("d={d} K={k} i={i}: off-class count != closed form"),
                    )?;
                }
            }
        }
        Ok(())
    })();
    report("primitive-root closed form matches the count vector", outcome);
}

#[test]
fn c3_reference_points() {
    let outcome = (|| {
        let one = c3_lower_bound(1, 6, None).map_err(|e| e.to_string())?;
        check(
            one.exact == BigRational::from_integer(2.into()),
            format!("D=1 gives {}", one.exact),
        )?;
        for k in 6u32..=13 {
            let b5 = c3_lower_bound(5, k, None).map_err(|e| e.to_string())?;
            let x = b5.exact.to_f64().unwrap();
            check(
                (2.75..=2.85).contains(&x),
                format!("C3(5, {k}) = {x} outside [2.75, 2.85]"),
            )?;
            let b21 = c3_lower_bound(21, k, None).map_err(|e| e.to_string())?;
            let y = b21.exact.to_f64().unwrap();
            check(
                (2.90..=2.99).contains(&y),
                format!("C3(21, {k}) = {y} outside [2.90, 2.99]"),
            )?;
            check(b21.exact > b5.exact, format!("C3 not monotone in D at K={k}"))?;
        }
        Ok(())
    })();
    report("C3 partial sums hit the reference windows", outcome);
}

#[test]
fn c3_tail_reference() {
    let outcome = (|| {
        let t = c3_tail_bound(40_000).map_err(|e| e.to_string())?;
        check(
            t.lo > 4.9e-5 && t.hi < 5.1e-5,
            format!("tail(40000) = [{}, {}]", t.lo, t.hi),
        )
    })();
    report("tail bound at D = 40000 lands in (4.9e-5, 5.1e-5)", outcome);
}

#[test]
fn c2_partial_sums() {
    let outcome = (|| {
        let s = c2_partial_sum(100_000).map_err(|e| e.to_string())?;
        check(
            s.hi < 1.93656,
            format!("C2 partial upper {} not below published 1.93656", s.hi),
        )?;
        check(s.lo > 1.90, format!("C2 partial lower {} too small", s.lo))?;
        let mut prev = 0.0f64;
        for dmax in [10u64, 100, 1000, 10_000, 100_000] {
            let p = c2_partial_sum(dmax).map_err(|e| e.to_string())?;
            check(p.lo >= prev, format!("C2 partial not monotone at D = {dmax}"))?;
            prev = p.lo;
        }
        Ok(())
    })();
    report("C2 partial sums stay below the published constant", outcome);
}

#[test]
fn measure_enclosures() {
    let outcome = (|| {
        // lambda = 1/2 at L = 2: the exact exceptional measure is 2/3
        let mut cfg = ExpSumConfig::new(2, 0.5f64).map_err(|e| e.to_string())?;
        cfg.tolerance = 2f64.powi(-16);
        cfg.max_intervals = 1 << 22;
        let m = delta_enclosure(&cfg).map_err(|e| e.to_string())?;
        let exact = 2.0 / 3.0;
        check(
            m.delta_lo <= exact && exact <= m.delta_hi,
            format!("enclosure [{}, {}] misses 2/3", m.delta_lo, m.delta_hi),
        )?;
        check(
            m.delta_hi - m.delta_lo < 1e-3,
            format!("enclosure width {} >= 1e-3", m.delta_hi - m.delta_lo),
        )?;

        // quadrature oracle: with more nodes than frequencies, the mean
        // of |G|^2 is exactly L and of |G|^4 exactly 2L^2 - L
        for l in 1..=12u32 {
            let n = (1u64 << l) + 1;
            let mut second = 0.0f64;
            for j in 0..n {
                second += g_eval(l, j as f64 / n as f64).norm_sqr();
            }
            second /= n as f64;
            check(
                (second - l as f64).abs() <= 1e-6,
                format!("L={l}: mean |G|^2 = {second}"),
            )?;
        }
        for l in 1..=10u32 {
            let n = (1u64 << (l + 1)) + 1;
            let mut fourth = 0.0f64;
            for j in 0..n {
                fourth += g_eval(l, j as f64 / n as f64).norm_sqr().powi(2);
            }
            fourth /= n as f64;
            let expected = (2 * l * l - l) as f64;
            check(
                (fourth - expected).abs() <= 1e-5,
                format!("L={l}: mean |G|^4 = {fourth} vs {expected}"),
            )?;
        }
        Ok(())
    })();
    report("exceptional-measure enclosures pass the quadrature oracles", outcome);
}

#[test]
fn admissibility_domination() {
    let outcome = (|| {
        for d_max in [15u64, 35, 50] {
            let base = c3_lower_bound(d_max, 11, None).map_err(|e| e.to_string())?;
            let m15 = admissible_c3_min(d_max, 11, 15).map_err(|e| e.to_string())?;
            let m105 = admissible_c3_min(d_max, 11, 105).map_err(|e| e.to_string())?;
            check(
                m15.value >= base.exact,
                format!("D={d_max}: coupling mod 15 fell below the free minimum"),
            )?;
            check(
                m105.value >= m15.value,
                format!("D={d_max}: coupling mod 105 fell below mod 15"),
            )?;
            check(
                m105.value > BigRational::zero(),
                format!("D={d_max}: degenerate admissible bound"),
            )?;
        }
        Ok(())
    })();
    report("admissibility refinement dominates the free bound, exactly", outcome);
}

#[test]
fn verifier_sweep_to_one_million() {
    let outcome = (|| {
        let sieve = PrimeSieve::new(1_000_000);
        let mut checked = 0u64;
        let result = sweep(6, 1_000_000, 0, &sieve, |n, outcome| {
            if let Some(w) = outcome {
                if checked.is_multiple_of(997) {
                    assert!(w.validate(), "witness for n = {n} does not revalidate");
                }
                checked += 1;
            }
        })
        .map_err(|e| e.to_string())?;
        check(
            result.exceptions.is_empty(),
            format!("{} even n had no two-prime representation", result.exceptions.len()),
        )?;
        check(
            result.histogram.get(&0).copied().unwrap_or(0) == 499_998,
            format!("histogram {:?}", result.histogram),
        )?;
        check(checked == 499_998, format!("only {checked} witnesses seen"))?;
        Ok(())
    })();
    report("every even n in [6, 10^6] is a sum of two primes", outcome);
}

#[test]
fn deterministic_reports_across_worker_counts() {
    let outcome = (|| {
        let run_with = |threads: usize| -> Result<String, String> {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| e.to_string())?;
            pool.install(|| {
                let r = run_c3(500, 11, 15, None).map_err(|e| e.to_string())?;
                Ok(render(&Report::C3(r), Format::Json))
            })
        };
        let single = run_with(1)?;
        let many = run_with(8)?;
        check(single == many, "reports differ across worker counts")?;
        check(single.contains("c3_lower_bound"), "report missing bound")?;
        Ok(())
    })();
    report("reports are bit-identical across worker counts", outcome);
}

#[test]
fn checkpointed_runs_agree_with_direct_runs() {
    let outcome = (|| {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let path = dir.path().join("resume.ckpt");
        run_c3(101, 11, 1, Some(&path)).map_err(|e| e.to_string())?;
        let resumed = run_c3(301, 11, 1, Some(&path)).map_err(|e| e.to_string())?;
        let direct = run_c3(301, 11, 1, None).map_err(|e| e.to_string())?;
        check(
            resumed.c3_lower_bound.exact == direct.c3_lower_bound.exact,
            "resumed bound differs from direct computation",
        )?;
        Ok(())
    })();
    report("checkpointed runs agree with direct runs", outcome);
}
