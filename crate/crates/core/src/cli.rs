//! Command-line front end: `eval`, `verify`, `sweep` and `replay`.
//!
//! Exit codes: 0 pass, 1 fail, 2 usage, 3 domain error or invalid instance.
//! Output is deterministic for a given command line; sweeps run in parallel
//! but print in instance order.

use std::collections::BTreeMap;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::json;

use crate::cauchy::{replay_1psi1, replay_6psi6, ProofTrace, DEFAULT_NS};
use crate::error::{Error, Result};
use crate::identities::{
    sample_valid_instance, verify, IdentityId, IdentityInstance, Verdict, VerificationReport,
};
use crate::numerics::{format_rational, parse_rational, PrecisionContext, Rational};
use crate::qfactorial::{poch_infinite, poch_int, PochValue, QBase};
use crate::series::{
    convergence_domain, eval_bilateral, eval_terminating, eval_vwp_bilateral, vwp_convergence_domain,
    ConvergenceDomain, SeriesKind, SeriesSpec, TruncationPolicy, VWPSpec,
};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INVALID: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "qbilateral", version, about = "Exact and certified q-series evaluation, identity checks and derivation replay")]
struct Cli {
    /// Working precision in bits (at least 64).
    #[arg(long, global = true, default_value_t = 256)]
    prec: u32,
    /// Target absolute error, e.g. 1e-30 or 1/1000.
    #[arg(long, global = true, default_value = "1e-30")]
    tol: String,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Term budget per side of a bilateral sum.
    #[arg(long = "max-terms", global = true, default_value_t = 10_000)]
    max_terms: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Tsv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate a factorial or a series.
    #[command(subcommand)]
    Eval(EvalCommand),
    /// Check one instance of a catalog identity.
    Verify(VerifyArgs),
    /// Check sampled valid instances of an identity.
    Sweep(SweepArgs),
    /// Replay a derivation (1psi1 or 6psi6) as a checked trace.
    Replay(ReplayArgs),
}

#[derive(Subcommand, Debug)]
enum EvalCommand {
    /// (a;q)_k for an integer k or k = inf.
    Poch {
        #[arg(long, allow_hyphen_values = true)]
        a: String,
        #[arg(long, allow_hyphen_values = true)]
        k: String,
        #[arg(long, default_value = "1/2")]
        q: String,
    },
    /// A unilateral or bilateral basic hypergeometric series.
    Series {
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long, default_value = "", allow_hyphen_values = true)]
        upper: String,
        #[arg(long, default_value = "", allow_hyphen_values = true)]
        lower: String,
        #[arg(long, allow_hyphen_values = true)]
        arg: String,
        #[arg(long, default_value = "1/2")]
        q: String,
    },
    /// A very-well-poised bilateral series.
    Vwp {
        #[arg(long, allow_hyphen_values = true)]
        a: String,
        #[arg(long, allow_hyphen_values = true)]
        tail: String,
        #[arg(long, allow_hyphen_values = true)]
        arg: String,
        #[arg(long, default_value = "1/2")]
        q: String,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum KindArg {
    Uni,
    Bi,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// I1 … I9
    id: String,
    /// Comma-separated name=value pairs.
    #[arg(long, default_value = "", allow_hyphen_values = true)]
    params: String,
    #[arg(long)]
    n: Option<u64>,
    #[arg(long, default_value = "1/2")]
    q: String,
}

#[derive(Args, Debug)]
struct SweepArgs {
    id: String,
    #[arg(long, default_value_t = 100)]
    count: u64,
    #[arg(long, default_value = "1/2")]
    q: String,
}

#[derive(Args, Debug)]
struct ReplayArgs {
    /// 1psi1 or 6psi6
    which: String,
    #[arg(long, allow_hyphen_values = true)]
    params: String,
    /// Values of n for the limit step.
    #[arg(long, default_value = "10,20,40")]
    ns: String,
    #[arg(long, default_value = "1/2")]
    q: String,
}

/// What a run printed and how it ended.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    fn out(code: i32, stdout: String) -> Self {
        Outcome { code, stdout, stderr: String::new() }
    }

    fn err(code: i32, stderr: String) -> Self {
        Outcome { code, stdout: String::new(), stderr }
    }
}

struct Config {
    policy: TruncationPolicy,
    ctx: PrecisionContext,
    format: Format,
    seed: u64,
}

/// Runs the command line `args` (program name first).
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            let text = e.render().to_string();
            return if e.use_stderr() { Outcome::err(code, text) } else { Outcome::out(code, text) };
        }
    };
    match dispatch(cli) {
        Ok(o) => o,
        Err(e @ Error::Parse(_)) => Outcome::err(EXIT_USAGE, format!("{e}\n")),
        Err(e) => Outcome::err(EXIT_INVALID, format!("{e}\n")),
    }
}

fn config(cli: &Cli) -> Result<Config> {
    let eps = parse_rational(&cli.tol)?;
    let ctx = PrecisionContext::new(cli.prec, eps.clone())?;
    let policy = TruncationPolicy::new(cli.max_terms, eps, None)?;
    Ok(Config { policy, ctx, format: cli.format, seed: cli.seed })
}

fn dispatch(cli: Cli) -> Result<Outcome> {
    let cfg = config(&cli)?;
    match cli.command {
        Command::Eval(e) => cmd_eval(e, &cfg),
        Command::Verify(v) => cmd_verify(v, &cfg),
        Command::Sweep(s) => cmd_sweep(s, &cfg),
        Command::Replay(r) => cmd_replay(r, &cfg),
    }
}

fn base(q: &str) -> Result<QBase> {
    QBase::new(parse_rational(q)?)
}

fn list(s: &str) -> Result<Vec<Rational>> {
    s.split(',').map(str::trim).filter(|t| !t.is_empty()).map(parse_rational).collect()
}

fn param_name(name: &str) -> String {
    match name {
        "bp" | "b_prime" => "b'".to_string(),
        other => other.to_string(),
    }
}

fn params(s: &str) -> Result<BTreeMap<String, Rational>> {
    let mut out = BTreeMap::new();
    for pair in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("expected name=value, got {pair:?}")))?;
        if out.insert(param_name(k.trim()), parse_rational(v)?).is_some() {
            return Err(Error::Parse(format!("parameter {k} given twice")));
        }
    }
    Ok(out)
}

fn value_line(value: String, err: String, exact: bool, cfg: &Config) -> String {
    match cfg.format {
        Format::Json => json!({ "value": value, "err": err, "exact": exact }).to_string(),
        Format::Tsv => format!("{value}\t{err}\t{exact}"),
    }
}

fn cmd_eval(cmd: EvalCommand, cfg: &Config) -> Result<Outcome> {
    let line = match cmd {
        EvalCommand::Poch { a, k, q } => {
            let (a, base) = (parse_rational(&a)?, base(&q)?);
            if k.eq_ignore_ascii_case("inf") {
                let v = poch_infinite(&a, &base, &cfg.ctx);
                value_line(v.value_string(), v.err_string(), false, cfg)
            } else {
                let k: i64 = k.parse().map_err(|_| Error::Parse(format!("k must be an integer or inf, got {k:?}")))?;
                match poch_int(&a, k, &base) {
                    PochValue::Finite(x) => value_line(format_rational(&x), "0".into(), true, cfg),
                    PochValue::Pole => value_line("pole".into(), "0".into(), true, cfg),
                }
            }
        }
        EvalCommand::Series { kind, upper, lower, arg, q } => {
            let kind = match kind {
                KindArg::Uni => SeriesKind::Unilateral,
                KindArg::Bi => SeriesKind::Bilateral,
            };
            let spec = SeriesSpec::new(kind, list(&upper)?, list(&lower)?, parse_rational(&arg)?, base(&q)?)?;
            if convergence_domain(&spec) == ConvergenceDomain::Terminating {
                value_line(format_rational(&eval_terminating(&spec)?), "0".into(), true, cfg)
            } else {
                let v = eval_bilateral(&spec, &cfg.policy, &cfg.ctx)?;
                value_line(v.value_string(), v.err_string(), false, cfg)
            }
        }
        EvalCommand::Vwp { a, tail, arg, q } => {
            let spec = VWPSpec::new(parse_rational(&a)?, list(&tail)?, parse_rational(&arg)?, base(&q)?)?;
            if vwp_convergence_domain(&spec) == ConvergenceDomain::Terminating {
                value_line(format_rational(&crate::series::eval_vwp_terminating(&spec)?), "0".into(), true, cfg)
            } else {
                let v = eval_vwp_bilateral(&spec, &cfg.policy, &cfg.ctx)?;
                value_line(v.value_string(), v.err_string(), false, cfg)
            }
        }
    };
    Ok(Outcome::out(EXIT_PASS, line + "\n"))
}

fn report_line(r: &VerificationReport, format: Format) -> String {
    match format {
        Format::Json => r.to_json().to_string(),
        Format::Tsv => r.to_tsv(),
    }
}

fn verdict_code(v: Verdict) -> i32 {
    match v {
        Verdict::Pass => EXIT_PASS,
        Verdict::Fail => EXIT_FAIL,
        Verdict::Invalid => EXIT_INVALID,
    }
}

fn cmd_verify(args: VerifyArgs, cfg: &Config) -> Result<Outcome> {
    let id: IdentityId = args.id.parse()?;
    let inst = IdentityInstance::new(id, params(&args.params)?, args.n, base(&args.q)?)?;
    let r = verify(&inst, &cfg.policy, &cfg.ctx);
    let mut out = report_line(&r, cfg.format) + "\n";
    if let (Some(reason), Format::Tsv) = (&r.reason, cfg.format) {
        out.push_str(&format!("# {reason}\n"));
    }
    Ok(Outcome::out(verdict_code(r.verdict), out))
}

/// Seed of the `i`-th instance of a sweep.
pub fn sweep_seed(seed: u64, i: u64) -> u64 {
    seed.wrapping_mul(1_000_003).wrapping_add(i)
}

fn cmd_sweep(args: SweepArgs, cfg: &Config) -> Result<Outcome> {
    let id: IdentityId = args.id.parse()?;
    let base = base(&args.q)?;
    let instances: Vec<IdentityInstance> = (0..args.count)
        .into_par_iter()
        .map(|i| sample_valid_instance(id, sweep_seed(cfg.seed, i), &base))
        .collect::<Result<_>>()?;
    let reports: Vec<VerificationReport> =
        instances.par_iter().map(|inst| verify(inst, &cfg.policy, &cfg.ctx)).collect();
    let count = |v| reports.iter().filter(|r| r.verdict == v).count();
    let (pass, fail, invalid) = (count(Verdict::Pass), count(Verdict::Fail), count(Verdict::Invalid));
    let mut out = String::new();
    if cfg.format == Format::Tsv {
        out.push_str(&crate::identities::REPORT_COLUMNS.join("\t"));
        out.push('\n');
    }
    for r in &reports {
        out.push_str(&report_line(r, cfg.format));
        out.push('\n');
    }
    let summary = match cfg.format {
        Format::Json => json!({
            "summary": { "id": id.code(), "count": reports.len(), "pass": pass, "fail": fail, "invalid": invalid }
        })
        .to_string(),
        Format::Tsv => format!("# summary\t{}\tcount={}\tpass={pass}\tfail={fail}\tinvalid={invalid}", id.code(), reports.len()),
    };
    out.push_str(&summary);
    out.push('\n');
    let code = if fail + invalid == 0 {
        EXIT_PASS
    } else if fail > 0 {
        EXIT_FAIL
    } else {
        EXIT_INVALID
    };
    Ok(Outcome::out(code, out))
}

fn trace_text(t: &ProofTrace, format: Format) -> String {
    match format {
        Format::Json => t.to_json().to_string(),
        Format::Tsv => {
            let mut s = crate::cauchy::TRACE_COLUMNS.join("\t");
            s.push('\n');
            s.push_str(&t.to_tsv());
            s
        }
    }
}

fn cmd_replay(args: ReplayArgs, cfg: &Config) -> Result<Outcome> {
    let base = base(&args.q)?;
    let p = params(&args.params)?;
    let ns: Vec<u64> = if args.ns.trim().is_empty() {
        DEFAULT_NS.to_vec()
    } else {
        args.ns
            .split(',')
            .map(|s| s.trim().parse().map_err(|_| Error::Parse(format!("bad n {s:?}"))))
            .collect::<Result<_>>()?
    };
    let trace = match args.which.to_ascii_lowercase().as_str() {
        "1psi1" => replay_1psi1(&p, &base, &cfg.policy, &cfg.ctx, &ns)?,
        "6psi6" => replay_6psi6(&p, &base, &cfg.policy, &cfg.ctx, &ns)?,
        other => return Err(Error::Parse(format!("unknown derivation {other:?}; expected 1psi1 or 6psi6"))),
    };
    let code = if trace.verdict == Verdict::Pass { EXIT_PASS } else { EXIT_FAIL };
    Ok(Outcome::out(code, trace_text(&trace, cfg.format) + "\n"))
}
