//! Command-line front door: subcommand parsing, worker-pool setup,
//! checkpoint/resume, and machine-readable reports. All numeric output
//! is produced by deterministic ordered reductions, so a report is
//! bit-identical across worker counts.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::OpenOptions;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::constants::{
    append_checkpoint, c0_enclosure, c1_liu_lu, c2_enclosure, c2_partial_sum, c3_bound_from_terms,
    c3_lower_bound, c3_tail_bound, read_checkpoint, unconstrained_terms, write_checkpoint_header,
    ConstantSet, REFERENCE_TABLE,
};
use crate::error::Error;
use crate::expsum::{delta_profile, Classification, ExpSumConfig};
use crate::interval::{decimal_down, decimal_up, parse_decimal};
use crate::kthreshold::{solve_k, KSolution};
use crate::verifier::{sweep, PrimeSieve, DEFAULT_SIEVE_LIMIT};
use crate::CertifiedInterval;

pub const WORKERS_ENV: &str = "LINNIK_WORKERS";
const REPORT_DIGITS: u32 = 9;

#[derive(Parser, Debug)]
#[command(name = "linnik", about = "Certified-computation workbench for sums of two primes and K powers of 2", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Worker threads (default: LINNIK_WORKERS or all cores)
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Tsv)]
    pub format: Format,
}

#[derive(Copy, Clone, Debug, ValueEnum, PartialEq, Eq)]
pub enum Format {
    Tsv,
    Json,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Certified C3 lower bound at cutoff D
    C3 {
        #[arg(long)]
        dmax: u64,
        #[arg(long)]
        k: u32,
        /// Admissibility coupling modulus; 1 disables the refinement
        #[arg(long, default_value_t = 1)]
        modulus: u64,
        /// Checkpoint file for resumable sweeps (unconstrained terms)
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Evaluate the K-admissibility inequality
    SolveK {
        /// Published constant quintuple to reproduce
        #[arg(long, value_enum)]
        preset: Option<Preset>,
        #[arg(long)]
        c0: Option<String>,
        #[arg(long)]
        c1: Option<String>,
        #[arg(long)]
        c2: Option<String>,
        #[arg(long)]
        c3: Option<String>,
        #[arg(long)]
        lambda: Option<String>,
        #[arg(long)]
        c: Option<String>,
    },
    /// Rigorous enclosure of the exceptional measure Delta at desk scale
    Measure {
        #[arg(long)]
        l: u32,
        #[arg(long)]
        lambda: f64,
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
        #[arg(long, default_value_t = 44)]
        max_depth: u32,
        /// Write accepted/rejected/ambiguous intervals for plotting
        #[arg(long)]
        profile: Option<PathBuf>,
    },
    /// Brute-force representation sweep over even n
    Verify {
        #[arg(long)]
        from: u64,
        #[arg(long)]
        to: u64,
        #[arg(long, default_value_t = 0)]
        max_powers: usize,
        #[arg(long, default_value_t = DEFAULT_SIEVE_LIMIT)]
        sieve_limit: u64,
        /// TSV output: n, r, p, q, exponent list
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Partial sums of C2 (consistency check against the published bound)
    C2 {
        #[arg(long)]
        dmax: u64,
    },
    /// Display the published related-problems table
    Table,
}

#[derive(Copy, Clone, Debug, ValueEnum, PartialEq, Eq)]
pub enum Preset {
    /// Heath-Brown/Puchta-era constants, unconditional
    HbpUncond,
    /// Heath-Brown/Puchta-era constants on GRH
    HbpGrh,
    /// improved C3 and lambda, unconditional
    NewUncond,
    /// improved C3 and lambda on GRH
    NewGrh,
}

impl Preset {
    pub fn constants(self) -> ConstantSet {
        let point = |s: &str| CertifiedInterval::from_rational(&parse_decimal(s).unwrap());
        let (c3, lambda, c) = match self {
            Preset::HbpUncond => ("2.96169", "0.862327", "109/154"),
            Preset::HbpGrh => ("2.96169", "0.716344", "1/2"),
            Preset::NewUncond => ("3.02858417", "0.8594000", "109/154"),
            Preset::NewGrh => ("3.011112", "0.7163436", "1/2"),
        };
        ConstantSet {
            c0: c0_enclosure(),
            c1: c1_liu_lu(),
            c2: c2_enclosure(),
            c3: point(c3),
            lambda: point(lambda),
            c: parse_decimal(c).unwrap(),
        }
    }
}

/// A bound with its rounding direction made explicit, as serialized.
#[derive(Debug, Clone, Serialize)]
pub struct DirectedBound {
    pub decimal: String,
    pub direction: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact: Option<String>,
}

impl DirectedBound {
    fn lower(x: f64, exact: Option<String>) -> Self {
        DirectedBound {
            decimal: decimal_down(x, REPORT_DIGITS),
            direction: "lower",
            exact,
        }
    }
    fn upper(x: f64, exact: Option<String>) -> Self {
        DirectedBound {
            decimal: decimal_up(x, REPORT_DIGITS),
            direction: "upper",
            exact,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct C3Report {
    pub dmax: u64,
    pub k: u32,
    pub modulus: u64,
    pub c3_lower_bound: DirectedBound,
    pub tail_upper_bound: DirectedBound,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub worst_class: Option<u64>,
    pub terms: usize,
}

#[derive(Debug, Serialize)]
pub struct SolveKReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    pub denominator: [String; 2],
    pub ratio: [String; 2],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_real: Option<[String; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_int: Option<u32>,
    pub all_k_admissible: bool,
}

#[derive(Debug, Serialize)]
pub struct MeasureReport {
    pub l: u32,
    pub lambda: f64,
    pub delta_lower: DirectedBound,
    pub delta_upper: DirectedBound,
    pub ambiguous_mass: DirectedBound,
    pub budget_exhausted: bool,
    pub intervals: usize,
}

#[derive(Debug, Serialize)]
pub struct VerifyReport {
    pub from: u64,
    pub to: u64,
    pub max_powers: usize,
    pub histogram: BTreeMap<usize, u64>,
    pub exceptions: Vec<u64>,
}

#[derive(Debug, Serialize)]
pub struct C2Report {
    pub dmax: u64,
    pub lower: DirectedBound,
    pub upper: DirectedBound,
    pub published_upper: String,
}

#[derive(Debug, Serialize)]
#[serde(untagged)]
pub enum Report {
    C3(C3Report),
    SolveK(SolveKReport),
    Measure(MeasureReport),
    Verify(VerifyReport),
    C2(C2Report),
    Table(Vec<TableRowReport>),
}

#[derive(Debug, Serialize)]
pub struct TableRowReport {
    pub problem: &'static str,
    pub required_c: &'static str,
    pub old_lambda: &'static str,
    pub new_lambda: &'static str,
    pub old_k: u32,
    pub new_k: u32,
}

fn interval_strings(iv: &CertifiedInterval) -> [String; 2] {
    [
        decimal_down(iv.lo, REPORT_DIGITS),
        decimal_up(iv.hi, REPORT_DIGITS),
    ]
}

fn rational_string(r: &num_rational::BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn run_c3(
    dmax: u64,
    k: u32,
    modulus: u64,
    checkpoint: Option<&PathBuf>,
) -> Result<C3Report, Error> {
    if dmax == 0 || k < 2 {
        return Err(Error::InvalidInput("c3: need --dmax >= 1 and --k >= 2".into()));
    }
    let known = match checkpoint {
        Some(path) if path.exists() => {
            let file = read_checkpoint(path)?;
            if let Some(file_k) = file.k {
                if file_k != k {
                    return Err(Error::Checkpoint(format!(
                        "{}: records were computed for K={file_k}, requested K={k}",
                        path.display()
                    )));
                }
            }
            file.records
        }
        _ => BTreeMap::new(),
    };
    let highest_known = known.keys().next_back().copied().unwrap_or(0);
    let terms = unconstrained_terms(dmax, k, &known)?;
    if let Some(path) = checkpoint {
        let fresh: Vec<_> = terms
            .iter()
            .filter(|t| t.d > highest_known)
            .cloned()
            .collect();
        let new_file = !path.exists();
        let mut w = BufWriter::new(
            OpenOptions::new().create(true).append(true).open(path)?,
        );
        if new_file {
            write_checkpoint_header(&mut w, k)?;
        }
        append_checkpoint(&mut w, &fresh)?;
        w.flush()?;
    }
    let bound = if modulus > 1 {
        c3_lower_bound(dmax, k, Some(modulus))?
    } else {
        c3_bound_from_terms(&terms)
    };
    let tail = c3_tail_bound(dmax.max(3))?;
    Ok(C3Report {
        dmax,
        k,
        modulus,
        c3_lower_bound: DirectedBound::lower(
            bound.interval.lo,
            Some(rational_string(&bound.exact)),
        ),
        tail_upper_bound: DirectedBound::upper(tail.hi, None),
        worst_class: bound.worst_class,
        terms: terms.len(),
    })
}

#[allow(clippy::too_many_arguments)]
pub fn run_solve_k(
    preset: Option<Preset>,
    c0: Option<&str>,
    c1: Option<&str>,
    c2: Option<&str>,
    c3: Option<&str>,
    lambda: Option<&str>,
    c: Option<&str>,
) -> Result<SolveKReport, Error> {
    let mut constants = match preset {
        Some(p) => p.constants(),
        None => {
            let need = |v: Option<&str>, name: &str| {
                v.map(str::to_string).ok_or_else(|| {
                    Error::InvalidInput(format!("solve-k: --{name} required without --preset"))
                })
            };
            ConstantSet {
                c0: CertifiedInterval::from_rational(&parse_decimal(&need(c0, "c0")?)?),
                c1: CertifiedInterval::from_rational(&parse_decimal(&need(c1, "c1")?)?),
                c2: CertifiedInterval::from_rational(&parse_decimal(&need(c2, "c2")?)?),
                c3: CertifiedInterval::from_rational(&parse_decimal(&need(c3, "c3")?)?),
                lambda: CertifiedInterval::from_rational(&parse_decimal(&need(lambda, "lambda")?)?),
                c: parse_decimal(&need(c, "c")?)?,
            }
        }
    };
    // explicit flags override individual preset entries
    if let Some(p) = preset {
        let _ = p;
        if let Some(s) = c3 {
            constants.c3 = CertifiedInterval::from_rational(&parse_decimal(s)?);
        }
        if let Some(s) = lambda {
            constants.lambda = CertifiedInterval::from_rational(&parse_decimal(s)?);
        }
        if let Some(s) = c {
            constants.c = parse_decimal(s)?;
        }
    }
    let preset_name = preset.map(|p| format!("{p:?}"));
    match solve_k(&constants)? {
        KSolution::Threshold(t) => Ok(SolveKReport {
            preset: preset_name,
            denominator: interval_strings(&t.denominator),
            ratio: interval_strings(&t.ratio),
            k_real: Some(interval_strings(&t.k_real)),
            k_int: Some(t.k_int),
            all_k_admissible: false,
        }),
        KSolution::AllAdmissible { denominator, ratio } => Ok(SolveKReport {
            preset: preset_name,
            denominator: interval_strings(&denominator),
            ratio: interval_strings(&ratio),
            k_real: None,
            k_int: None,
            all_k_admissible: true,
        }),
    }
}

pub fn run_measure(
    l: u32,
    lambda: f64,
    tol: f64,
    max_depth: u32,
    profile_path: Option<&PathBuf>,
) -> Result<MeasureReport, Error> {
    if !(0.0..1.0).contains(&lambda) {
        return Err(Error::InvalidInput(
            "measure: --lambda must lie in [0, 1)".into(),
        ));
    }
    if tol <= 0.0 {
        return Err(Error::InvalidInput("measure: --tol must be positive".into()));
    }
    let mut cfg = ExpSumConfig::new(l, lambda)?;
    cfg.tolerance = tol;
    cfg.max_depth = max_depth;
    let (enclosure, profile) = delta_profile(&cfg)?;
    if let Some(path) = profile_path {
        let mut w = BufWriter::new(std::fs::File::create(path)?);
        for c in &profile {
            let class = match c.class {
                Classification::Accepted => "accepted",
                Classification::Rejected => "rejected",
                Classification::Ambiguous => "ambiguous",
            };
            writeln!(w, "{}\t{}\t{}", c.lo, c.hi, class)?;
        }
        w.flush()?;
    }
    let report = MeasureReport {
        l,
        lambda,
        delta_lower: DirectedBound::lower(enclosure.delta_lo, None),
        delta_upper: DirectedBound::upper(enclosure.delta_hi, None),
        ambiguous_mass: DirectedBound::upper(enclosure.ambiguous_mass, None),
        budget_exhausted: enclosure.budget_exhausted,
        intervals: profile.len(),
    };
    if enclosure.budget_exhausted {
        return Err(Error::BudgetExceeded(format!(
            "measure: interval budget exhausted; delta <= {} with ambiguous mass {}",
            report.delta_upper.decimal, report.ambiguous_mass.decimal
        )));
    }
    Ok(report)
}

pub fn run_verify(
    from: u64,
    to: u64,
    max_powers: usize,
    sieve_limit: u64,
    output: Option<&PathBuf>,
) -> Result<VerifyReport, Error> {
    if to > sieve_limit {
        return Err(Error::InvalidInput(format!(
            "verify: --to {to} exceeds --sieve-limit {sieve_limit}"
        )));
    }
    let sieve = PrimeSieve::new(sieve_limit);
    let mut writer = match output {
        Some(path) => Some(BufWriter::new(std::fs::File::create(path)?)),
        None => None,
    };
    let mut io_error = None;
    let result = sweep(from, to, max_powers, &sieve, |n, outcome| {
        if let (Some(w), Some(witness)) = (writer.as_mut(), outcome.as_ref()) {
            let exps = witness
                .exponents
                .iter()
                .map(|e| e.to_string())
                .collect::<Vec<_>>()
                .join(",");
            if let Err(e) = writeln!(w, "{n}\t{}\t{}\t{}\t{exps}", witness.r(), witness.p, witness.q)
            {
                io_error.get_or_insert(e);
            }
        }
    })?;
    if let Some(e) = io_error {
        return Err(e.into());
    }
    if let Some(mut w) = writer {
        w.flush()?;
    }
    Ok(VerifyReport {
        from,
        to,
        max_powers,
        histogram: result.histogram,
        exceptions: result.exceptions,
    })
}

pub fn run_c2(dmax: u64) -> Result<C2Report, Error> {
    let s = c2_partial_sum(dmax)?;
    Ok(C2Report {
        dmax,
        lower: DirectedBound::lower(s.lo, None),
        upper: DirectedBound::upper(s.hi, None),
        published_upper: "1.93656".into(),
    })
}

fn run_table() -> Vec<TableRowReport> {
    REFERENCE_TABLE
        .iter()
        .map(|r| TableRowReport {
            problem: r.problem,
            required_c: r.required_c,
            old_lambda: r.old_lambda,
            new_lambda: r.new_lambda,
            old_k: r.old_k,
            new_k: r.new_k,
        })
        .collect()
}

/// Execute a parsed command and return the rendered report text.
pub fn execute(cli: &Cli) -> Result<String, Error> {
    let workers = cli
        .workers
        .or_else(|| {
            std::env::var(WORKERS_ENV)
                .ok()
                .and_then(|v| v.parse().ok())
        })
        .unwrap_or(0);
    if workers > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::InvalidInput(format!("worker pool: {e}")))?;
        pool.install(|| execute_inner(cli))
    } else {
        execute_inner(cli)
    }
}

fn execute_inner(cli: &Cli) -> Result<String, Error> {
    let report = match &cli.command {
        Command::C3 {
            dmax,
            k,
            modulus,
            checkpoint,
        } => Report::C3(run_c3(*dmax, *k, *modulus, checkpoint.as_ref())?),
        Command::SolveK {
            preset,
            c0,
            c1,
            c2,
            c3,
            lambda,
            c,
        } => Report::SolveK(run_solve_k(
            *preset,
            c0.as_deref(),
            c1.as_deref(),
            c2.as_deref(),
            c3.as_deref(),
            lambda.as_deref(),
            c.as_deref(),
        )?),
        Command::Measure {
            l,
            lambda,
            tol,
            max_depth,
            profile,
        } => Report::Measure(run_measure(*l, *lambda, *tol, *max_depth, profile.as_ref())?),
        Command::Verify {
            from,
            to,
            max_powers,
            sieve_limit,
            output,
        } => Report::Verify(run_verify(
            *from,
            *to,
            *max_powers,
            *sieve_limit,
            output.as_ref(),
        )?),
        Command::C2 { dmax } => Report::C2(run_c2(*dmax)?),
        Command::Table => Report::Table(run_table()),
    };
    Ok(render(&report, cli.format))
}

pub fn render(report: &Report, format: Format) -> String {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("report serializes");
            s.push('\n');
            s
        }
        Format::Tsv => render_tsv(report),
    }
}

fn push_bound(out: &mut String, name: &str, b: &DirectedBound) {
    let _ = writeln!(out, "{name}\t{}\t({} bound)", b.decimal, b.direction);
    if let Some(exact) = &b.exact {
        let _ = writeln!(out, "{name}_exact\t{exact}");
    }
}

fn render_tsv(report: &Report) -> String {
    let mut out = String::new();
    match report {
        Report::C3(r) => {
            let _ = writeln!(out, "dmax\t{}", r.dmax);
            let _ = writeln!(out, "k\t{}", r.k);
            let _ = writeln!(out, "modulus\t{}", r.modulus);
            push_bound(&mut out, "c3_lower_bound", &r.c3_lower_bound);
            push_bound(&mut out, "tail_upper_bound", &r.tail_upper_bound);
            if let Some(a) = r.worst_class {
                let _ = writeln!(out, "worst_class\t{a}");
            }
            let _ = writeln!(out, "terms\t{}", r.terms);
        }
        Report::SolveK(r) => {
            if let Some(p) = &r.preset {
                let _ = writeln!(out, "preset\t{p}");
            }
            let _ = writeln!(out, "denominator\t[{}, {}]", r.denominator[0], r.denominator[1]);
            let _ = writeln!(out, "ratio\t[{}, {}]", r.ratio[0], r.ratio[1]);
            match (&r.k_real, r.k_int) {
                (Some(kr), Some(ki)) => {
                    let _ = writeln!(out, "k_real\t[{}, {}]", kr[0], kr[1]);
                    let _ = writeln!(out, "k_int\t{ki}");
                }
                _ => {
                    let _ = writeln!(out, "all_k_admissible\ttrue");
                }
            }
        }
        Report::Measure(r) => {
            let _ = writeln!(out, "L\t{}", r.l);
            let _ = writeln!(out, "lambda\t{}", r.lambda);
            push_bound(&mut out, "delta_lower", &r.delta_lower);
            push_bound(&mut out, "delta_upper", &r.delta_upper);
            push_bound(&mut out, "ambiguous_mass", &r.ambiguous_mass);
            let _ = writeln!(out, "intervals\t{}", r.intervals);
        }
        Report::Verify(r) => {
            let _ = writeln!(out, "from\t{}", r.from);
            let _ = writeln!(out, "to\t{}", r.to);
            let _ = writeln!(out, "max_powers\t{}", r.max_powers);
            for (k, v) in &r.histogram {
                let _ = writeln!(out, "r={k}\t{v}");
            }
            let _ = writeln!(out, "exceptions\t{}", r.exceptions.len());
            for n in r.exceptions.iter().take(20) {
                let _ = writeln!(out, "exception\t{n}");
            }
        }
        Report::C2(r) => {
            let _ = writeln!(out, "dmax\t{}", r.dmax);
            push_bound(&mut out, "c2_partial_lower", &r.lower);
            push_bound(&mut out, "c2_partial_upper", &r.upper);
            let _ = writeln!(out, "published_upper\t{}", r.published_upper);
        }
        Report::Table(rows) => {
            let _ = writeln!(out, "problem\trequired_c\told_lambda\tnew_lambda\told_K\tnew_K");
            for r in rows {
                let _ = writeln!(
                    out,
                    "{}\t{}\t{}\t{}\t{}\t{}",
                    r.problem, r.required_c, r.old_lambda, r.new_lambda, r.old_k, r.new_k
                );
            }
        }
    }
    out
}
