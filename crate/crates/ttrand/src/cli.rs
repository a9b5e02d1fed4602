//! Command-line benchmark harness behind the `ttrand` binary: generate
//! synthetic tensors to DNT1 files, run single decompositions, and sweep
//! parameters over trials, emitting CSV rows with a fixed schema.
//!
//! Exit codes: 0 success, 1 runtime or numeric failure, 2 usage error.

use std::io::Write as _;
use std::time::Instant;

use crate::decompose::{
    adaptive_rand_tt, error_estimate_gram, greedy_tt_rank, rand_tt_fixed_rank,
    rand_tt_fixed_rank_gram, tt_svd, tt_svd_fixed_rank, FixedPrecisionParams, FixedRankParams,
};
use crate::generate::{GenFamily, GenSpec};
use crate::metrics::relative_error;
use crate::sketch::SketchKind;
use crate::tensor::{read_dense, write_dense, DenseTensor};
use crate::tt::{tt_write, TTTensor};

/// The report schema. Stable: fields are never reordered.
pub const CSV_HEADER: &str =
    "method,sketch,rank_spec,eps,R,q,b,seed,trial,tt_ranks,re,fit,wall_ms,estimator,clamped";

/// The per-point schema emitted under --aggregate.
pub const AGG_HEADER: &str =
    "method,sketch,rank_spec,eps,R,q,b,trials,re_mean,re_std,wall_ms_mean,wall_ms_std,clamped_any";

/// Dense reconstruction for --verify refuses tensors above this entry count
/// unless --verify-budget raises it.
pub const DEFAULT_VERIFY_BUDGET: usize = 1 << 27;

#[derive(Debug)]
enum CliError {
    Usage(String),
    Runtime(String),
}

type CliResult<T> = std::result::Result<T, CliError>;

impl From<crate::Error> for CliError {
    fn from(e: crate::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

fn usage() -> &'static str {
    "usage: ttrand <command> [flags]

commands:
  gen         write a synthetic tensor to a DNT1 file
  decompose   run one decomposition, write a TTC1 file and a CSV report row
  bench       sweep a parameter axis over repeated trials, emit CSV rows
  help        print this text

gen flags:
  --family F       tt-noise | tt-snr | func-sin | func-hilbert   (required)
  --dims LIST      mode extents, e.g. 20,20,20,20,20   (train families)
  --core-ranks L   interior core ranks, e.g. 5,5,5,5   (train families)
  --gamma X        relative noise level for tt-noise   (default 1e-4)
  --snr-db X       target ratio in dB for tt-snr       (required there)
  --extent I       grid points per mode, 5-way grid    (function families)
  --seed N         generator seed                      (default 0)
  --out PATH       output DNT1 file                    (required)

decompose flags:
  --in PATH        input DNT1 file                     (required)
  --method M       tt-svd | tt-svd-rank | rand | rand-gram | greedy | adaptive
  --eps X          relative tolerance      (tt-svd, greedy, adaptive)
  --ranks LIST     target interior ranks   (tt-svd-rank, rand, rand-gram)
  --sketch S       gaussian | kr-gaussian | kron-gaussian | spemb | sdct
                   (rand, adaptive; default gaussian)
  --oversample R   extra sketch columns    (rand, rand-gram; default 10)
  --power Q        power iterations        (default 0; rand-gram default 1)
  --block B        range-finder block size (adaptive; default 10)
  --seed N         sketch seed                         (default 0)
  --out PATH       output TTC1 file (not valid with greedy)
  --report PATH    write the CSV report there instead of stdout
  --verify         compute re/fit by dense reconstruction
  --verify-budget N  max entries --verify will reconstruct (default 2^27)

bench flags:
  --in PATH        input DNT1 file (rank and eps sweeps)
  --ranks-sweep L  uniform rank per point, e.g. 2,4,6 or 2:20:2
  --eps-sweep L    tolerance per point, e.g. 1e-2,1e-3
  --snr-sweep L    ratio in dB per point; generates a tt-snr tensor per
                   point (needs --dims, --core-ranks; --gen-seed optional)
  --methods LIST   per-entry METHOD[@POWER], e.g. rand@0,rand@1,rand-gram@1
  --ranks LIST     fixed decomposition ranks (snr sweep rank methods)
  --eps X          fixed tolerance (snr sweep tolerance methods)
  --trials T       repetitions per point with seeds seed+0..seed+T-1
  --parallel-trials  run the trials of each point concurrently
  --aggregate      emit per-point mean/std instead of raw rows
  --sketch, --oversample, --block, --seed, --report, --verify,
  --verify-budget  as for decompose
  --dims, --core-ranks, --gen-seed  tensor generation for --snr-sweep

environment:
  TT_SKETCH_THREADS  caps the linear-algebra thread count

exit codes: 0 success, 1 runtime/numeric failure, 2 usage error"
}

/// Entry point for the binary; returns the process exit code.
pub fn run(args: &[String]) -> i32 {
    let code = match args.first().map(|s| s.as_str()) {
        Some("gen") => cmd_gen(&args[1..]),
        Some("decompose") => cmd_decompose(&args[1..]),
        Some("bench") => cmd_bench(&args[1..]),
        Some("help") | Some("--help") | Some("-h") => {
            println!("{}", usage());
            return 0;
        }
        Some(other) => Err(CliError::Usage(format!("unknown command '{other}'"))),
        None => Err(CliError::Usage("no command given".into())),
    };
    match code {
        Ok(()) => 0,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            eprintln!();
            eprintln!("{}", usage());
            2
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            1
        }
    }
}

fn take<'a>(args: &'a [String], i: &mut usize, flag: &str) -> CliResult<&'a str> {
    *i += 1;
    args.get(*i)
        .map(|s| s.as_str())
        .ok_or_else(|| CliError::Usage(format!("flag {flag} needs a value")))
}

fn usage_err<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Usage(e.to_string())
}

fn parse_usize(s: &str, what: &str) -> CliResult<usize> {
    s.parse::<usize>()
        .map_err(|_| CliError::Usage(format!("{what}: '{s}' is not a non-negative integer")))
}

fn parse_u64(s: &str, what: &str) -> CliResult<u64> {
    s.parse::<u64>()
        .map_err(|_| CliError::Usage(format!("{what}: '{s}' is not a non-negative integer")))
}

fn parse_f64(s: &str, what: &str) -> CliResult<f64> {
    s.parse::<f64>()
        .map_err(|_| CliError::Usage(format!("{what}: '{s}' is not a number")))
}

fn parse_usize_list(s: &str, what: &str) -> CliResult<Vec<usize>> {
    // either a comma list "2,4,6" or an inclusive range "2:20:2"
    if let Some(range) = parse_range(s) {
        let (a, b, c) = range?;
        let (a, b, c) = (
            parse_usize(a, what)?,
            parse_usize(b, what)?,
            parse_usize(c, what)?,
        );
        if c == 0 {
            return Err(CliError::Usage(format!("{what}: range step must be positive")));
        }
        return Ok((a..=b).step_by(c).collect());
    }
    s.split(',')
        .map(|p| parse_usize(p.trim(), what))
        .collect()
}

fn parse_f64_list(s: &str, what: &str) -> CliResult<Vec<f64>> {
    if let Some(range) = parse_range(s) {
        let (a, b, c) = range?;
        let (a, b, c) = (
            parse_f64(a, what)?,
            parse_f64(b, what)?,
            parse_f64(c, what)?,
        );
        if c.is_nan() || c <= 0.0 {
            return Err(CliError::Usage(format!("{what}: range step must be positive")));
        }
        let count = ((b - a) / c).floor() as i64;
        if count < 0 {
            return Err(CliError::Usage(format!("{what}: empty range")));
        }
        return Ok((0..=count).map(|k| a + c * k as f64).collect());
    }
    s.split(',')
        .map(|p| parse_f64(p.trim(), what))
        .collect()
}

/// Recognize "a:b:c" range syntax; comma lists return None.
#[allow(clippy::type_complexity)]
fn parse_range(s: &str) -> Option<CliResult<(&str, &str, &str)>> {
    if !s.contains(':') {
        return None;
    }
    let parts: Vec<&str> = s.split(':').collect();
    Some(if parts.len() == 3 {
        Ok((parts[0], parts[1], parts[2]))
    } else {
        Err(CliError::Usage(format!(
            "range syntax is start:stop:step, got '{s}'"
        )))
    })
}

fn join_dash<T: std::fmt::Display>(xs: &[T]) -> String {
    xs.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("-")
}

// ---------------------------------------------------------------- gen

fn cmd_gen(args: &[String]) -> CliResult<()> {
    let mut family: Option<GenFamily> = None;
    let mut dims: Option<Vec<usize>> = None;
    let mut core_ranks: Option<Vec<usize>> = None;
    let mut gamma = 1e-4;
    let mut snr_db: Option<f64> = None;
    let mut extent: Option<usize> = None;
    let mut seed = 0u64;
    let mut out: Option<String> = None;

    let mut i = 0;
    while i < args.len() {
        let flag = args[i].as_str();
        match flag {
            "--family" => family = Some(take(args, &mut i, flag)?.parse().map_err(usage_err)?),
            "--dims" => dims = Some(parse_usize_list(take(args, &mut i, flag)?, flag)?),
            "--core-ranks" => {
                core_ranks = Some(parse_usize_list(take(args, &mut i, flag)?, flag)?)
            }
            "--gamma" => gamma = parse_f64(take(args, &mut i, flag)?, flag)?,
            "--snr-db" => snr_db = Some(parse_f64(take(args, &mut i, flag)?, flag)?),
            "--extent" => extent = Some(parse_usize(take(args, &mut i, flag)?, flag)?),
            "--seed" => seed = parse_u64(take(args, &mut i, flag)?, flag)?,
            "--out" => out = Some(take(args, &mut i, flag)?.to_string()),
            _ => return Err(CliError::Usage(format!("unknown flag '{flag}' for gen"))),
        }
        i += 1;
    }

    let family = family.ok_or_else(|| CliError::Usage("gen needs --family".into()))?;
    let out = out.ok_or_else(|| CliError::Usage("gen needs --out".into()))?;

    let spec = match family {
        GenFamily::TtNoise | GenFamily::TtSnr => {
            let dims = dims.ok_or_else(|| {
                CliError::Usage(format!("family {family} needs --dims"))
            })?;
            let core_ranks = core_ranks.ok_or_else(|| {
                CliError::Usage(format!("family {family} needs --core-ranks"))
            })?;
            if extent.is_some() {
                return Err(CliError::Usage(
                    "--extent applies only to the function families".into(),
                ));
            }
            let snr_db = match (family, snr_db) {
                (GenFamily::TtSnr, None) => {
                    return Err(CliError::Usage("family tt-snr needs --snr-db".into()))
                }
                (_, v) => v.unwrap_or(0.0),
            };
            GenSpec { family, dims, core_ranks, gamma, snr_db, extent: 0, seed }
        }
        GenFamily::FuncSin | GenFamily::FuncHilbert => {
            if dims.is_some() || core_ranks.is_some() || snr_db.is_some() {
                return Err(CliError::Usage(format!(
                    "family {family} takes only --extent (plus --out)"
                )));
            }
            let extent = extent.ok_or_else(|| {
                CliError::Usage(format!("family {family} needs --extent"))
            })?;
            GenSpec {
                family,
                dims: Vec::new(),
                core_ranks: Vec::new(),
                gamma,
                snr_db: 0.0,
                extent,
                seed,
            }
        }
    };

    let t = spec.build()?;
    write_dense(&t, &out)?;
    let dims_str = t
        .dims()
        .iter()
        .map(|d| d.to_string())
        .collect::<Vec<_>>()
        .join("x");
    println!(
        "wrote {out}: dims {dims_str}, fro norm {:.12e}",
        t.frobenius_norm()
    );
    Ok(())
}

// ---------------------------------------------------------------- shared

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Method {
    TtSvd,
    TtSvdRank,
    Rand,
    RandGram,
    Greedy,
    Adaptive,
}

impl Method {
    fn name(self) -> &'static str {
        match self {
            Method::TtSvd => "tt-svd",
            Method::TtSvdRank => "tt-svd-rank",
            Method::Rand => "rand",
            Method::RandGram => "rand-gram",
            Method::Greedy => "greedy",
            Method::Adaptive => "adaptive",
        }
    }

    fn parse(s: &str) -> CliResult<Method> {
        Ok(match s {
            "tt-svd" => Method::TtSvd,
            "tt-svd-rank" => Method::TtSvdRank,
            "rand" => Method::Rand,
            "rand-gram" => Method::RandGram,
            "greedy" => Method::Greedy,
            "adaptive" => Method::Adaptive,
            _ => return Err(CliError::Usage(format!("unknown method '{s}'"))),
        })
    }

    fn takes_eps(self) -> bool {
        matches!(self, Method::TtSvd | Method::Greedy | Method::Adaptive)
    }

    fn takes_ranks(self) -> bool {
        matches!(self, Method::TtSvdRank | Method::Rand | Method::RandGram)
    }

    fn takes_power(self) -> bool {
        matches!(self, Method::Rand | Method::RandGram | Method::Adaptive)
    }

    fn default_power(self) -> usize {
        match self {
            Method::RandGram => 1,
            _ => 0,
        }
    }

    fn uses_sketch(self) -> bool {
        matches!(self, Method::Rand | Method::Adaptive)
    }
}

/// Everything one decomposition run needs besides the tensor.
#[derive(Debug, Clone)]
struct RunConfig {
    method: Method,
    eps: f64,
    ranks: Vec<usize>,
    sketch: SketchKind,
    oversample: usize,
    power: usize,
    block: usize,
    seed: u64,
}

/// The outcome of one timed decomposition run.
struct RunOutput {
    tt: Option<TTTensor>,
    ranks: Vec<usize>,
    clamped: bool,
    estimator: Option<f64>,
    wall_ms: f64,
}

fn run_method(t: &DenseTensor, cfg: &RunConfig) -> crate::Result<RunOutput> {
    let start = Instant::now();
    let out = match cfg.method {
        Method::TtSvd => {
            let d = tt_svd(t, cfg.eps)?;
            RunOutput {
                tt: Some(d.tt),
                ranks: d.ranks,
                clamped: d.clamped,
                estimator: None,
                wall_ms: 0.0,
            }
        }
        Method::TtSvdRank => {
            let d = tt_svd_fixed_rank(t, &cfg.ranks)?;
            RunOutput {
                tt: Some(d.tt),
                ranks: d.ranks,
                clamped: d.clamped,
                estimator: None,
                wall_ms: 0.0,
            }
        }
        Method::Rand | Method::RandGram => {
            let p = FixedRankParams {
                ranks: cfg.ranks.clone(),
                oversample: cfg.oversample,
                power: cfg.power,
                sketch: cfg.sketch,
                seed: cfg.seed,
            };
            let d = if cfg.method == Method::Rand {
                rand_tt_fixed_rank(t, &p)?
            } else {
                rand_tt_fixed_rank_gram(t, &p)?
            };
            RunOutput {
                tt: Some(d.tt),
                ranks: d.ranks,
                clamped: d.clamped,
                estimator: None,
                wall_ms: 0.0,
            }
        }
        Method::Greedy => {
            let ranks = greedy_tt_rank(t, cfg.eps)?;
            RunOutput {
                tt: None,
                ranks,
                clamped: false,
                estimator: None,
                wall_ms: 0.0,
            }
        }
        Method::Adaptive => {
            let p = FixedPrecisionParams {
                eps: cfg.eps,
                block: cfg.block,
                power: cfg.power,
                sketch: cfg.sketch,
                seed: cfg.seed,
            };
            let d = adaptive_rand_tt(t, &p)?;
            let (est, _) = error_estimate_gram(&d.stage_norms, cfg.eps, cfg.eps);
            RunOutput {
                tt: Some(d.tt),
                ranks: d.ranks,
                clamped: d.clamped,
                estimator: Some(est),
                wall_ms: 0.0,
            }
        }
    };
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(RunOutput { wall_ms, ..out })
}

/// One raw CSV row in the fixed schema.
struct ReportRow {
    method: &'static str,
    sketch: String,
    rank_spec: String,
    eps: String,
    oversample: String,
    power: String,
    block: String,
    seed: u64,
    trial: u64,
    tt_ranks: String,
    re: String,
    fit: String,
    wall_ms: f64,
    estimator: String,
    clamped: bool,
}

impl ReportRow {
    fn csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{:.3},{},{}",
            self.method,
            self.sketch,
            self.rank_spec,
            self.eps,
            self.oversample,
            self.power,
            self.block,
            self.seed,
            self.trial,
            self.tt_ranks,
            self.re,
            self.fit,
            self.wall_ms,
            self.estimator,
            self.clamped
        )
    }
}

/// Compute re/fit strings if verification is on and the tensor fits the
/// budget; empty strings otherwise.
fn verify_strings(
    t: &DenseTensor,
    tt: Option<&TTTensor>,
    verify: bool,
    budget: usize,
) -> crate::Result<(String, String)> {
    let Some(tt) = tt else {
        return Ok((String::new(), String::new()));
    };
    if !verify {
        return Ok((String::new(), String::new()));
    }
    if t.len() > budget {
        eprintln!(
            "note: skipping --verify, {} entries exceed the budget of {budget}",
            t.len()
        );
        return Ok((String::new(), String::new()));
    }
    let re = relative_error(t, &tt.contract()?)?;
    Ok((format!("{:.9e}", re), format!("{:.9e}", 1.0 - re)))
}

fn make_row(cfg: &RunConfig, trial: u64, out: &RunOutput, re: String, fit: String) -> ReportRow {
    let uses_rand = cfg.method.uses_sketch() || cfg.method == Method::RandGram;
    ReportRow {
        method: cfg.method.name(),
        sketch: if uses_rand {
            cfg.sketch.name().to_string()
        } else {
            String::new()
        },
        rank_spec: if cfg.method.takes_ranks() {
            join_dash(&cfg.ranks)
        } else {
            String::new()
        },
        eps: if cfg.method.takes_eps() {
            format!("{:e}", cfg.eps)
        } else {
            String::new()
        },
        oversample: if cfg.method.takes_ranks() && cfg.method != Method::TtSvdRank {
            cfg.oversample.to_string()
        } else {
            String::new()
        },
        power: if cfg.method.takes_power() {
            cfg.power.to_string()
        } else {
            String::new()
        },
        block: if cfg.method == Method::Adaptive {
            cfg.block.to_string()
        } else {
            String::new()
        },
        seed: cfg.seed,
        trial,
        tt_ranks: join_dash(&out.ranks),
        re,
        fit,
        wall_ms: out.wall_ms,
        estimator: out
            .estimator
            .map(|e| format!("{:.9e}", e))
            .unwrap_or_default(),
        clamped: out.clamped,
    }
}

/// Write lines to --report or stdout.
fn emit(report: Option<&str>, lines: &[String]) -> CliResult<()> {
    match report {
        Some(path) => {
            let mut f = std::fs::File::create(path)
                .map_err(|e| CliError::Runtime(format!("cannot create {path}: {e}")))?;
            for line in lines {
                writeln!(f, "{line}").map_err(|e| CliError::Runtime(e.to_string()))?;
            }
        }
        None => {
            let stdout = std::io::stdout();
            let mut h = stdout.lock();
            for line in lines {
                writeln!(h, "{line}").map_err(|e| CliError::Runtime(e.to_string()))?;
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------- decompose

fn cmd_decompose(args: &[String]) -> CliResult<()> {
    let mut input: Option<String> = None;
    let mut method: Option<Method> = None;
    let mut eps: Option<f64> = None;
    let mut ranks: Option<Vec<usize>> = None;
    let mut sketch = SketchKind::Gaussian;
    let mut oversample = 10usize;
    let mut power: Option<usize> = None;
    let mut block = 10usize;
    let mut seed = 0u64;
    let mut out: Option<String> = None;
    let mut report: Option<String> = None;
    let mut verify = false;
    let mut verify_budget = DEFAULT_VERIFY_BUDGET;

    let mut i = 0;
    while i < args.len() {
        let flag = args[i].as_str();
        match flag {
            "--in" => input = Some(take(args, &mut i, flag)?.to_string()),
            "--method" => method = Some(Method::parse(take(args, &mut i, flag)?)?),
            "--eps" => eps = Some(parse_f64(take(args, &mut i, flag)?, flag)?),
            "--ranks" => ranks = Some(parse_usize_list(take(args, &mut i, flag)?, flag)?),
            "--sketch" => sketch = take(args, &mut i, flag)?.parse().map_err(usage_err)?,
            "--oversample" => oversample = parse_usize(take(args, &mut i, flag)?, flag)?,
            "--power" => power = Some(parse_usize(take(args, &mut i, flag)?, flag)?),
            "--block" => block = parse_usize(take(args, &mut i, flag)?, flag)?,
            "--seed" => seed = parse_u64(take(args, &mut i, flag)?, flag)?,
            "--out" => out = Some(take(args, &mut i, flag)?.to_string()),
            "--report" => report = Some(take(args, &mut i, flag)?.to_string()),
            "--verify" => verify = true,
            "--verify-budget" => verify_budget = parse_usize(take(args, &mut i, flag)?, flag)?,
            _ => return Err(CliError::Usage(format!("unknown flag '{flag}' for decompose"))),
        }
        i += 1;
    }

    let input = input.ok_or_else(|| CliError::Usage("decompose needs --in".into()))?;
    let method = method.ok_or_else(|| CliError::Usage("decompose needs --method".into()))?;
    let cfg = build_config(method, eps, ranks, sketch, oversample, power, block, seed)?;
    if method == Method::Greedy && out.is_some() {
        return Err(CliError::Usage(
            "greedy estimates ranks only and writes no train file".into(),
        ));
    }

    let t = read_dense(&input)?;
    let run = run_method(&t, &cfg).map_err(|e| CliError::Runtime(e.to_string()))?;
    if let (Some(path), Some(tt)) = (&out, &run.tt) {
        tt_write(tt, path)?;
    }
    let (re, fit) = verify_strings(&t, run.tt.as_ref(), verify, verify_budget)?;
    let row = make_row(&cfg, 0, &run, re, fit);
    emit(report.as_deref(), &[CSV_HEADER.to_string(), row.csv()])
}

/// Check the method/flag pairing rules and assemble a run configuration.
#[allow(clippy::too_many_arguments)]
fn build_config(
    method: Method,
    eps: Option<f64>,
    ranks: Option<Vec<usize>>,
    sketch: SketchKind,
    oversample: usize,
    power: Option<usize>,
    block: usize,
    seed: u64,
) -> CliResult<RunConfig> {
    if method.takes_eps() && eps.is_none() {
        return Err(CliError::Usage(format!("method {} needs --eps", method.name())));
    }
    if method.takes_ranks() && ranks.is_none() {
        return Err(CliError::Usage(format!("method {} needs --ranks", method.name())));
    }
    if !method.takes_eps() && eps.is_some() {
        return Err(CliError::Usage(format!(
            "method {} does not take --eps",
            method.name()
        )));
    }
    if !method.takes_ranks() && ranks.is_some() {
        return Err(CliError::Usage(format!(
            "method {} does not take --ranks",
            method.name()
        )));
    }
    if let Some(e) = eps {
        if !(e > 0.0 && e < 1.0) {
            return Err(CliError::Usage(format!(
                "--eps must lie in (0, 1), got {e}"
            )));
        }
    }
    let power = power.unwrap_or_else(|| method.default_power());
    if method == Method::RandGram && power == 0 {
        return Err(CliError::Usage("rand-gram requires --power >= 1".into()));
    }
    if method == Method::RandGram && sketch != SketchKind::Gaussian {
        return Err(CliError::Usage(
            "rand-gram supports only the gaussian sketch".into(),
        ));
    }
    Ok(RunConfig {
        method,
        eps: eps.unwrap_or(0.0),
        ranks: ranks.unwrap_or_default(),
        sketch,
        oversample,
        power,
        block,
        seed,
    })
}

// ---------------------------------------------------------------- bench

/// A method entry in --methods, optionally annotated METHOD@POWER.
fn parse_method_entry(s: &str) -> CliResult<(Method, Option<usize>)> {
    match s.split_once('@') {
        None => Ok((Method::parse(s)?, None)),
        Some((name, pow)) => {
            let method = Method::parse(name)?;
            if !method.takes_power() {
                return Err(CliError::Usage(format!(
                    "method {name} does not take a @power annotation"
                )));
            }
            Ok((method, Some(parse_usize(pow, "@power")?)))
        }
    }
}

fn cmd_bench(args: &[String]) -> CliResult<()> {
    let mut input: Option<String> = None;
    let mut ranks_sweep: Option<Vec<usize>> = None;
    let mut eps_sweep: Option<Vec<f64>> = None;
    let mut snr_sweep: Option<Vec<f64>> = None;
    let mut methods: Option<Vec<(Method, Option<usize>)>> = None;
    let mut fixed_ranks: Option<Vec<usize>> = None;
    let mut fixed_eps: Option<f64> = None;
    let mut sketch = SketchKind::Gaussian;
    let mut oversample = 10usize;
    let mut block = 10usize;
    let mut trials = 1u64;
    let mut parallel = false;
    let mut aggregate = false;
    let mut seed = 0u64;
    let mut report: Option<String> = None;
    let mut verify = false;
    let mut verify_budget = DEFAULT_VERIFY_BUDGET;
    let mut dims: Option<Vec<usize>> = None;
    let mut core_ranks: Option<Vec<usize>> = None;
    let mut gen_seed = 0u64;

    let mut i = 0;
    while i < args.len() {
        let flag = args[i].as_str();
        match flag {
            "--in" => input = Some(take(args, &mut i, flag)?.to_string()),
            "--ranks-sweep" => {
                ranks_sweep = Some(parse_usize_list(take(args, &mut i, flag)?, flag)?)
            }
            "--eps-sweep" => eps_sweep = Some(parse_f64_list(take(args, &mut i, flag)?, flag)?),
            "--snr-sweep" => snr_sweep = Some(parse_f64_list(take(args, &mut i, flag)?, flag)?),
            "--methods" => {
                let list: CliResult<Vec<_>> = take(args, &mut i, flag)?
                    .split(',')
                    .map(parse_method_entry)
                    .collect();
                methods = Some(list?);
            }
            "--ranks" => fixed_ranks = Some(parse_usize_list(take(args, &mut i, flag)?, flag)?),
            "--eps" => fixed_eps = Some(parse_f64(take(args, &mut i, flag)?, flag)?),
            "--sketch" => sketch = take(args, &mut i, flag)?.parse().map_err(usage_err)?,
            "--oversample" => oversample = parse_usize(take(args, &mut i, flag)?, flag)?,
            "--block" => block = parse_usize(take(args, &mut i, flag)?, flag)?,
            "--trials" => trials = parse_u64(take(args, &mut i, flag)?, flag)?,
            "--parallel-trials" => parallel = true,
            "--aggregate" => aggregate = true,
            "--seed" => seed = parse_u64(take(args, &mut i, flag)?, flag)?,
            "--report" => report = Some(take(args, &mut i, flag)?.to_string()),
            "--verify" => verify = true,
            "--verify-budget" => verify_budget = parse_usize(take(args, &mut i, flag)?, flag)?,
            "--dims" => dims = Some(parse_usize_list(take(args, &mut i, flag)?, flag)?),
            "--core-ranks" => {
                core_ranks = Some(parse_usize_list(take(args, &mut i, flag)?, flag)?)
            }
            "--gen-seed" => gen_seed = parse_u64(take(args, &mut i, flag)?, flag)?,
            _ => return Err(CliError::Usage(format!("unknown flag '{flag}' for bench"))),
        }
        i += 1;
    }

    let axes = [ranks_sweep.is_some(), eps_sweep.is_some(), snr_sweep.is_some()];
    let active = axes.iter().filter(|&&x| x).count();
    if active != 1 {
        return Err(CliError::Usage(
            "bench needs exactly one of --ranks-sweep, --eps-sweep, --snr-sweep".into(),
        ));
    }
    let methods = methods.ok_or_else(|| CliError::Usage("bench needs --methods".into()))?;
    if methods.is_empty() {
        return Err(CliError::Usage("--methods list is empty".into()));
    }
    if trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    if let Some(sweep) = &ranks_sweep {
        if sweep.is_empty() {
            return Err(CliError::Usage("--ranks-sweep list is empty".into()));
        }
        if sweep.contains(&0) {
            return Err(CliError::Usage("swept ranks must be at least 1".into()));
        }
    }
    if eps_sweep.as_ref().is_some_and(|s| s.is_empty()) {
        return Err(CliError::Usage("--eps-sweep list is empty".into()));
    }
    if snr_sweep.as_ref().is_some_and(|s| s.is_empty()) {
        return Err(CliError::Usage("--snr-sweep list is empty".into()));
    }

    // resolve the tensor(s): one file for rank/eps sweeps, one generated
    // tensor per point for snr sweeps
    let mut points: Vec<(DenseTensor, Vec<RunConfig>)> = Vec::new();
    if let Some(snrs) = &snr_sweep {
        let dims = dims.ok_or_else(|| CliError::Usage("--snr-sweep needs --dims".into()))?;
        let core_ranks = core_ranks
            .ok_or_else(|| CliError::Usage("--snr-sweep needs --core-ranks".into()))?;
        if input.is_some() {
            return Err(CliError::Usage(
                "--snr-sweep generates its tensors; --in does not apply".into(),
            ));
        }
        for &snr in snrs {
            let spec = GenSpec {
                family: GenFamily::TtSnr,
                dims: dims.clone(),
                core_ranks: core_ranks.clone(),
                gamma: 0.0,
                snr_db: snr,
                extent: 0,
                seed: gen_seed,
            };
            let t = spec.build()?;
            eprintln!("# point snr_db={snr}");
            let mut cfgs = Vec::new();
            for &(method, pow) in &methods {
                cfgs.push(build_config(
                    method,
                    if method.takes_eps() { fixed_eps } else { None },
                    if method.takes_ranks() { fixed_ranks.clone() } else { None },
                    sketch,
                    oversample,
                    pow,
                    block,
                    seed,
                )?);
            }
            points.push((t, cfgs));
        }
    } else {
        let input = input.ok_or_else(|| CliError::Usage("bench needs --in".into()))?;
        let t = read_dense(&input)?;
        let stages = t.order().saturating_sub(1);
        if let Some(sweep) = &ranks_sweep {
            for &mu in sweep {
                let mut cfgs = Vec::new();
                for &(method, pow) in &methods {
                    if !method.takes_ranks() {
                        return Err(CliError::Usage(format!(
                            "method {} does not take swept ranks",
                            method.name()
                        )));
                    }
                    cfgs.push(build_config(
                        method,
                        None,
                        Some(vec![mu; stages]),
                        sketch,
                        oversample,
                        pow,
                        block,
                        seed,
                    )?);
                }
                points.push((t.clone(), cfgs));
            }
        } else if let Some(sweep) = &eps_sweep {
            for &e in sweep {
                let mut cfgs = Vec::new();
                for &(method, pow) in &methods {
                    if !method.takes_eps() {
                        return Err(CliError::Usage(format!(
                            "method {} does not take swept tolerances",
                            method.name()
                        )));
                    }
                    cfgs.push(build_config(
                        method,
                        Some(e),
                        None,
                        sketch,
                        oversample,
                        pow,
                        block,
                        seed,
                    )?);
                }
                points.push((t.clone(), cfgs));
            }
        }
    }

    // run every (point, method, trial) and collect raw rows per point/method
    let mut lines = Vec::new();
    lines.push(if aggregate { AGG_HEADER } else { CSV_HEADER }.to_string());
    for (t, cfgs) in &points {
        for cfg in cfgs {
            let rows = run_trials(t, cfg, trials, parallel, verify, verify_budget)?;
            if aggregate {
                lines.push(aggregate_rows(&rows));
            } else {
                lines.extend(rows.iter().map(|r| r.csv()));
            }
        }
    }
    emit(report.as_deref(), &lines)
}

/// Run `trials` seeded repetitions of one configuration, sequentially or
/// with one thread per trial.
fn run_trials(
    t: &DenseTensor,
    cfg: &RunConfig,
    trials: u64,
    parallel: bool,
    verify: bool,
    budget: usize,
) -> CliResult<Vec<ReportRow>> {
    let run_one = |trial: u64| -> CliResult<ReportRow> {
        let mut c = cfg.clone();
        c.seed = cfg.seed + trial;
        let out = run_method(t, &c).map_err(|e| CliError::Runtime(e.to_string()))?;
        let (re, fit) = verify_strings(t, out.tt.as_ref(), verify, budget)?;
        Ok(make_row(&c, trial, &out, re, fit))
    };
    if !parallel || trials == 1 {
        (0..trials).map(run_one).collect()
    } else {
        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..trials)
                .map(|trial| scope.spawn(move || run_one(trial)))
                .collect();
            handles
                .into_iter()
                .map(|h| {
                    h.join()
                        .map_err(|_| CliError::Runtime("a trial thread panicked".into()))?
                })
                .collect()
        })
    }
}

/// Mean and sample standard deviation; std is 0 for a single value.
fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn aggregate_rows(rows: &[ReportRow]) -> String {
    let res: Vec<f64> = rows
        .iter()
        .filter_map(|r| r.re.parse::<f64>().ok())
        .collect();
    let walls: Vec<f64> = rows.iter().map(|r| r.wall_ms).collect();
    let (re_mean, re_std) = mean_std(&res);
    let (w_mean, w_std) = mean_std(&walls);
    let re_cols = if res.is_empty() {
        ",".to_string()
    } else {
        format!("{:.9e},{:.9e}", re_mean, re_std)
    };
    let proto = &rows[0];
    format!(
        "{},{},{},{},{},{},{},{},{},{:.3},{:.3},{}",
        proto.method,
        proto.sketch,
        proto.rank_spec,
        proto.eps,
        proto.oversample,
        proto.power,
        proto.block,
        rows.len(),
        re_cols,
        w_mean,
        w_std,
        rows.iter().any(|r| r.clamped)
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn list_parsing_accepts_lists_and_ranges() {
        assert_eq!(parse_usize_list("2,4,6", "x").unwrap(), vec![2, 4, 6]);
        assert_eq!(parse_usize_list("2:8:3", "x").unwrap(), vec![2, 5, 8]);
        assert_eq!(
            parse_f64_list("-30:30:30", "x").unwrap(),
            vec![-30.0, 0.0, 30.0]
        );
        assert_eq!(parse_f64_list("1e-2,1e-3", "x").unwrap(), vec![1e-2, 1e-3]);
        assert!(parse_usize_list("2:8", "x").is_err());
        assert!(parse_usize_list("a,b", "x").is_err());
        assert!(parse_f64_list("5:1:1", "x").is_err());
    }

    #[test]
    fn method_entries_parse_with_power_annotations() {
        let (m, p) = parse_method_entry("rand@1").unwrap();
        assert_eq!(m, Method::Rand);
        assert_eq!(p, Some(1));
        let (m, p) = parse_method_entry("tt-svd-rank").unwrap();
        assert_eq!(m, Method::TtSvdRank);
        assert_eq!(p, None);
        assert!(parse_method_entry("tt-svd@1").is_err());
        assert!(parse_method_entry("nope").is_err());
    }

    #[test]
    fn config_rules_enforce_method_flag_pairing() {
        // eps method with ranks
        assert!(build_config(
            Method::TtSvd,
            Some(1e-2),
            Some(vec![2]),
            SketchKind::Gaussian,
            10,
            None,
            10,
            0
        )
        .is_err());
        // rank method without ranks
        assert!(build_config(
            Method::Rand,
            None,
            None,
            SketchKind::Gaussian,
            10,
            None,
            10,
            0
        )
        .is_err());
        // short-side variant needs power
        assert!(build_config(
            Method::RandGram,
            None,
            Some(vec![2, 2]),
            SketchKind::Gaussian,
            10,
            Some(0),
            10,
            0
        )
        .is_err());
        // and defaults to power 1 when unset
        let cfg = build_config(
            Method::RandGram,
            None,
            Some(vec![2, 2]),
            SketchKind::Gaussian,
            10,
            None,
            10,
            0
        )
        .unwrap();
        assert_eq!(cfg.power, 1);
        // eps range check
        assert!(build_config(
            Method::TtSvd,
            Some(1.5),
            None,
            SketchKind::Gaussian,
            10,
            None,
            10,
            0
        )
        .is_err());
    }

    #[test]
    fn csv_row_has_fixed_field_count() {
        let cfg = build_config(
            Method::Adaptive,
            Some(1e-2),
            None,
            SketchKind::Gaussian,
            10,
            None,
            10,
            7,
        )
        .unwrap();
        let out = RunOutput {
            tt: None,
            ranks: vec![2, 3, 2],
            clamped: false,
            estimator: Some(1.5e-4),
            wall_ms: 12.0,
        };
        let row = make_row(&cfg, 3, &out, String::new(), String::new());
        let line = row.csv();
        assert_eq!(line.split(',').count(), CSV_HEADER.split(',').count());
        assert!(line.contains("2-3-2"));
        assert!(line.starts_with("adaptive,gaussian,,1e-2,,0,10,7,3,"));
    }

    #[test]
    fn mean_std_basics() {
        let (m, s) = mean_std(&[2.0, 4.0]);
        assert_eq!(m, 3.0);
        assert!((s - 2f64.sqrt()).abs() < 1e-15);
        let (m1, s1) = mean_std(&[5.0]);
        assert_eq!((m1, s1), (5.0, 0.0));
    }
}
