//! Command-line front end. [`run`] returns the process exit code:
//! 0 success, 1 frozen-constant regression, 2 usage or input error.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::classifier::{classify_with_notes, SheafProfile};
use crate::config::load_config;
use crate::error::{Error, Result};
use crate::evaluator::{
    additive_weight, exceptional_scan, sum_of_products, trivial_weight, verify_suite, ScanMode, TraceSpec,
    DEFAULT_THRESHOLD,
};
use crate::field::build_context;
use crate::hyp_classifier::predict;
use crate::pgl2::{parse_matrix_list, Conj, Pgl2Element, SumPattern};
use crate::rep_theory::{trivial_multiplicity, Family, GroupLabel};
use crate::report::{fmt_f64, frozen_from_reports, summarize, write_rows_csv};
use crate::trace::{hyp_batch, kloosterman_batch, CharTuplePair};

pub const THREADS_ENV: &str = "TRACELAB_THREADS";

#[derive(Parser, Debug)]
#[command(name = "tracelab", version, about = "Finite-field trace-function laboratory")]
struct Cli {
    /// Worker threads (default: $TRACELAB_THREADS, else all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Mode {
    Exhaustive,
    Sampled,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Field context summary.
    Context {
        #[arg(long)]
        p: u64,
    },
    /// Tabulate Kl_r as CSV (or one value with --x).
    Kloos {
        #[arg(long)]
        p: u64,
        #[arg(long)]
        r: usize,
        #[arg(long)]
        x: Option<u64>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Tabulate a hypergeometric sum as CSV.
    Hyp {
        #[arg(long)]
        p: u64,
        /// Comma-separated exponents mod p-1.
        #[arg(long, default_value = "")]
        chi: String,
        #[arg(long, default_value = "")]
        rho: String,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Predict cancellation or a main term for a pattern.
    Classify {
        /// sp:<2g>, sl:<r> or sl:<r>:neg
        #[arg(long)]
        profile: String,
        #[arg(long, default_value_t = 999_983)]
        p: u64,
        /// Matrices, e.g. '[[1,0],[0,1]],[[1,1],[0,1]]'
        #[arg(long)]
        gammas: String,
        /// Comma-separated flags id|conj (default: all id).
        #[arg(long)]
        sigmas: Option<String>,
        #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
        h: i64,
    },
    /// Classify a hypergeometric character-tuple pair.
    ClassifyHyp {
        #[arg(long)]
        p: u64,
        #[arg(long, default_value = "")]
        chi: String,
        #[arg(long, default_value = "")]
        rho: String,
    },
    /// Evaluate one sum of products and its prediction.
    Sumprod {
        #[arg(long)]
        p: u64,
        #[arg(long, default_value = "kl:2")]
        trace: String,
        #[arg(long)]
        gammas: String,
        #[arg(long)]
        sigmas: Option<String>,
        #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
        h: i64,
        #[arg(long)]
        profile: Option<String>,
    },
    /// Run a verification suite.
    Verify {
        #[arg(long)]
        config: PathBuf,
        /// CSV report path (default: config value, else stdout).
        #[arg(long)]
        output: Option<PathBuf>,
        /// Frozen constants to compare against.
        #[arg(long)]
        frozen: Option<PathBuf>,
        /// Write observed max residuals as a new frozen-constants file.
        #[arg(long)]
        record_frozen: Option<PathBuf>,
        /// JSON summary path.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Count exceptional dilation tuples.
    Scan {
        #[arg(long)]
        p: u64,
        #[arg(long, default_value = "kl:2")]
        trace: String,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        l: usize,
        /// Weight psi(hX); 0 means the trivial weight.
        #[arg(long, default_value_t = 0)]
        h: u64,
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        c: f64,
        #[arg(long, value_enum, default_value_t = Mode::Exhaustive)]
        mode: Mode,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Multiplicity of the trivial representation, e.g. `mult sp 2 4 0`.
    Mult { family: String, parameter: u32, m: u32, n: u32 },
}

enum Outcome {
    Ok,
    Regression(usize),
}

fn parse_exponents(s: &str) -> Result<Vec<i64>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<i64>().map_err(|_| Error::InvalidArgument(format!("bad exponent `{t}`"))))
        .collect()
}

fn parse_sigmas(s: Option<&str>, k: usize) -> Result<Vec<Conj>> {
    match s {
        None => Ok(vec![Conj::Id; k]),
        Some(s) => s.split(',').map(Conj::parse).collect(),
    }
}

fn parse_pattern(p: u64, gammas: &str, sigmas: Option<&str>, h: i64) -> Result<SumPattern> {
    let mats = parse_matrix_list(gammas)?;
    let gammas = mats.iter().map(|&m| Pgl2Element::from_ints(p, m)).collect::<Result<Vec<_>>>()?;
    let sigmas = parse_sigmas(sigmas, gammas.len())?;
    SumPattern::new(gammas, sigmas, crate::field::reduce(h, p))
}

fn open_output(path: Option<&Path>, out: &mut dyn Write, f: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match path {
        Some(path) => {
            let file = File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            let mut w = BufWriter::new(file);
            f(&mut w)?;
            w.flush()?;
            Ok(())
        }
        None => f(out),
    }
}

fn read_frozen(path: &Path) -> Result<BTreeMap<String, f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse { line: e.line(), column: e.column(), msg: e.to_string() })
}

fn execute(cmd: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<Outcome> {
    match cmd {
        Command::Context { p } => {
            let ctx = build_context(p)?;
            writeln!(out, "{}", json!({"p": ctx.p(), "g": ctx.g(), "order": ctx.order()}))?;
        }
        Command::Kloos { p, r, x, output } => {
            let ctx = build_context(p)?;
            let t = kloosterman_batch(&ctx, r)?;
            match x {
                Some(x) => {
                    let v = t.value(x);
                    writeln!(out, "{},{},{}", x % p, fmt_f64(v.re), fmt_f64(v.im))?;
                }
                None => open_output(output.as_deref(), out, |w| t.write_csv(w))?,
            }
        }
        Command::Hyp { p, chi, rho, output } => {
            let ctx = build_context(p)?;
            let pair = CharTuplePair::from_exponents(&ctx, &parse_exponents(&chi)?, &parse_exponents(&rho)?)?;
            let t = hyp_batch(&ctx, &pair)?;
            open_output(output.as_deref(), out, |w| t.write_csv(w))?;
        }
        Command::Classify { profile, p, gammas, sigmas, h } => {
            if !crate::field::is_prime(p) {
                return Err(Error::NotPrime(p));
            }
            let prof = SheafProfile::parse(&profile, p)?;
            let pat = parse_pattern(p, &gammas, sigmas.as_deref(), h)?;
            let c = classify_with_notes(&pat, &prof, p)?;
            for note in &c.notes {
                writeln!(err, "note: {note}")?;
            }
            writeln!(out, "{}", serde_json::to_string(&c.prediction).unwrap())?;
        }
        Command::ClassifyHyp { p, chi, rho } => {
            let ctx = build_context(p)?;
            let pair = CharTuplePair::from_exponents(&ctx, &parse_exponents(&chi)?, &parse_exponents(&rho)?)?;
            let c = predict(&ctx, &pair)?;
            writeln!(out, "{}", serde_json::to_string(&c).unwrap())?;
        }
        Command::Sumprod { p, trace, gammas, sigmas, h, profile } => {
            let ctx = build_context(p)?;
            let table = TraceSpec::parse(&trace)?.build(&ctx)?;
            let pat = parse_pattern(p, &gammas, sigmas.as_deref(), h)?;
            let prof = match profile {
                Some(s) => SheafProfile::parse(&s, p)?,
                None => table.profile().cloned().ok_or_else(|| Error::InvalidProfile("table has no profile".into()))?,
            };
            let c = classify_with_notes(&pat, &prof, p)?;
            for note in &c.notes {
                writeln!(err, "note: {note}")?;
            }
            let s = sum_of_products(&table, &pat)?;
            let residual = crate::evaluator::normalized_residual(s, c.prediction.m, p);
            writeln!(
                out,
                "{}",
                json!({"p": p, "re": fmt_f64(s.re), "im": fmt_f64(s.im), "prediction": c.prediction, "residual": fmt_f64(residual)})
            )?;
        }
        Command::Verify { config, output, frozen, record_frozen, summary } => {
            let cfg = load_config(&config)?;
            let reports = verify_suite(&cfg.patterns, &cfg.primes)?;
            let out_path = output.or(cfg.output.clone());
            open_output(out_path.as_deref(), out, |w| write_rows_csv(&reports, w))?;
            let frozen_path = frozen.or(cfg.frozen.clone());
            let frozen_map = frozen_path.as_deref().map(read_frozen).transpose()?;
            let sum = summarize(&reports, frozen_map.as_ref());
            if let Some(path) = record_frozen {
                let text = serde_json::to_string_pretty(&frozen_from_reports(&reports)).unwrap();
                std::fs::write(&path, text + "\n").map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            }
            if let Some(path) = summary {
                let text = serde_json::to_string_pretty(&sum).unwrap();
                std::fs::write(&path, text + "\n").map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            }
            for ps in sum.patterns.iter().filter(|p| p.regression) {
                writeln!(
                    err,
                    "regression: {} max residual {} exceeds 2 x frozen {}",
                    ps.id,
                    fmt_f64(ps.max_residual),
                    fmt_f64(ps.frozen.unwrap_or(f64::NAN))
                )?;
            }
            if sum.regressions > 0 {
                return Ok(Outcome::Regression(sum.regressions));
            }
        }
        Command::Scan { p, trace, k, l, h, c, mode, samples, seed } => {
            let ctx = build_context(p)?;
            let table = TraceSpec::parse(&trace)?.build(&ctx)?;
            let weight = if h % p == 0 { trivial_weight(&ctx)? } else { additive_weight(&ctx, h % p)? };
            let mode = match mode {
                Mode::Exhaustive => ScanMode::Exhaustive,
                Mode::Sampled => ScanMode::Sampled { samples, seed },
            };
            let res = exceptional_scan(&table, k, l, &weight, c, mode)?;
            let witnesses: Vec<_> = res
                .witnesses
                .iter()
                .map(|w| json!({"a": w.a, "b": w.b, "re": fmt_f64(w.value.re), "im": fmt_f64(w.value.im)}))
                .collect();
            writeln!(
                out,
                "{}",
                json!({
                    "p": p, "k": k, "l": l, "count": res.count, "total": res.total_tuples,
                    "interval": res.interval, "exhaustive": res.exhaustive, "witnesses": witnesses
                })
            )?;
        }
        Command::Mult { family, parameter, m, n } => {
            let fam = match family.to_ascii_lowercase().as_str() {
                "sp" => Family::Sp,
                "sl" => Family::SL,
                other => return Err(Error::InvalidArgument(format!("unknown family `{other}`"))),
            };
            let g = GroupLabel::new(fam, parameter)?;
            writeln!(out, "{}", trivial_multiplicity(g, m, n)?)?;
        }
    }
    Ok(Outcome::Ok)
}

fn thread_count(flag: Option<usize>) -> Result<Option<usize>> {
    if let Some(n) = flag {
        return Ok(Some(n));
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map(Some)
            .map_err(|_| Error::InvalidArgument(format!("{THREADS_ENV}=`{v}` is not a thread count"))),
        Err(_) => Ok(None),
    }
}

/// Run with explicit arguments (including the program name) and writers.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            if code == 0 {
                let _ = write!(out, "{text}");
            } else {
                let _ = write!(err, "{text}");
            }
            return code;
        }
    };
    let result = thread_count(cli.threads).and_then(|threads| match threads {
        Some(0) => Err(Error::InvalidArgument("thread count must be positive".into())),
        Some(n) => {
            let (r, o, e) = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidArgument(e.to_string()))?
                .install(|| {
                    // buffered so the closure is Send
                    let (mut o, mut e) = (Vec::new(), Vec::new());
                    let r = execute(cli.command, &mut o, &mut e);
                    (r, o, e)
                });
            out.write_all(&o)?;
            err.write_all(&e)?;
            r
        }
        None => execute(cli.command, out, err),
    });
    match result {
        Ok(Outcome::Ok) => 0,
        Ok(Outcome::Regression(n)) => {
            let _ = writeln!(err, "{n} frozen-constant regression(s)");
            1
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            2
        }
    }
}

pub fn run() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    let mut out = stdout.lock();
    let mut err = stderr.lock();
    run_with(std::env::args_os(), &mut out, &mut err)
}
