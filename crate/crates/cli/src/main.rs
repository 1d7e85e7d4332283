use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use nestlab::geometry::LevelGeometry;
use nestlab::hyperbolic::Interval;
use nestlab::nest::{build_nest, NestConfig, Termination};
use nestlab::report::{build_report, csv_string, Meta, Report, ReportOptions};
use nestlab::search::{locate_itinerary, scan, verify_bracket, LocateConfig, ReturnItinerary};
use nestlab::verify::{
    check_composition_lemma, check_cross_ratio, check_leading_order, check_sqrt_lemma, geometry_suites, SuiteReport,
};
use nestlab::{BigMap, BigReal, Error, PrecisionContext, Real};

const EXIT_GATE: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_PRECISION: u8 = 3;

/// Principal nests of real quadratic maps x² + c.
#[derive(Parser, Debug)]
#[command(name = "nestlab", version)]
struct Cli {
    /// Working precision in bits.
    #[arg(long, global = true, env = "NESTLAB_BITS", default_value_t = 256)]
    bits: u32,
    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Leave the timestamp out of the report metadata.
    #[arg(long, global = true)]
    no_timestamp: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq)]
enum Suite {
    Geometry,
    Composition,
    Sqrt,
    CrossRatio,
    LeadingOrder,
    Nest,
    All,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build the principal nest of one parameter and report its geometry.
    Nest {
        /// The parameter c, as an exact decimal.
        #[arg(long, allow_hyphen_values = true)]
        c: String,
        #[arg(long, default_value_t = 12)]
        depth: usize,
        /// Non-central intervals are enumerated up to this multiple of the next return time.
        #[arg(long, default_value_t = 2)]
        horizon: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Sample grid for distortion estimates.
        #[arg(long, default_value_t = 33)]
        samples: usize,
        /// First level of the decay fits.
        #[arg(long, default_value_t = 4)]
        n0: usize,
        /// Skip the verification suites.
        #[arg(long)]
        no_suites: bool,
        #[arg(long, short)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Classify evenly spaced parameters of a window.
    Scan {
        #[arg(long, allow_hyphen_values = true, default_value = "-2")]
        lo: String,
        #[arg(long, allow_hyphen_values = true, default_value = "-1.4")]
        hi: String,
        #[arg(long, default_value_t = 100)]
        steps: usize,
        #[arg(long, default_value_t = 6)]
        depth: usize,
        #[arg(long, short)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Locate the Fibonacci parameter; prints c.
    Fibonacci {
        #[arg(long, default_value_t = 40)]
        digits: usize,
        /// Levels the bracket endpoints must realize.
        #[arg(long, default_value_t = 10)]
        depth: usize,
        /// Precision factor for rebuilding the endpoints.
        #[arg(long, default_value_t = 4)]
        check: u32,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Bracket the parameters following a return itinerary; prints c.
    Locate {
        /// Comma-separated symbols such as `C,N2s-*`; starred symbols repeat.
        #[arg(long, allow_hyphen_values = true)]
        itinerary: String,
        #[arg(long, allow_hyphen_values = true, default_value = "-2")]
        lo: String,
        #[arg(long, allow_hyphen_values = true, default_value = "-0.25")]
        hi: String,
        #[arg(long, default_value_t = 40)]
        digits: usize,
        #[arg(long, default_value_t = 10)]
        depth: usize,
        #[arg(long, default_value_t = 4)]
        check: u32,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Run verification suites.
    Verify {
        #[arg(long, value_enum, default_value_t = Suite::Geometry)]
        suite: Suite,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Parameter for the nest suites.
        #[arg(long, allow_hyphen_values = true, default_value = "-1.8705286321646448888906174192698158530716")]
        c: String,
        #[arg(long, default_value_t = 12)]
        depth: usize,
        #[arg(long, default_value_t = 4)]
        n0: usize,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Convert a JSON report to the per-level CSV table.
    Export {
        #[arg(long, short)]
        input: PathBuf,
        #[arg(long, short)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
}

/// An error with the exit code it maps to.
struct Failure(u8, anyhow::Error);

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        let code = match e.downcast_ref::<Error>() {
            Some(Error::PrecisionExhausted(_)) => EXIT_PRECISION,
            Some(_) => EXIT_INPUT,
            None => 1,
        };
        Failure(code, e)
    }
}

fn input<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure(EXIT_INPUT, e.into())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_INPUT);
        }
    }
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure(code, e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(code)
        }
    }
}

fn context(cli: &Cli, seed: u64) -> Result<PrecisionContext, Failure> {
    PrecisionContext::new(cli.bits, 32, seed).map_err(input)
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, text)
            .with_context(|| format!("writing {}", path.display()))
            .map_err(|e| Failure(1, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn timestamp(cli: &Cli) -> Option<String> {
    if cli.no_timestamp {
        return None;
    }
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .ok()
        .map(|d| d.as_secs().to_string())
}

fn json<S: serde::Serialize>(v: &S) -> Result<String, Failure> {
    serde_json::to_string_pretty(v)
        .map(|s| s + "\n")
        .map_err(|e| Failure(1, e.into()))
}

fn run(cli: &Cli) -> Result<u8, Failure> {
    match &cli.command {
        Command::Nest {
            c,
            depth,
            horizon,
            seed,
            samples,
            n0,
            no_suites,
            out,
            format,
        } => {
            let ctx = context(cli, *seed)?;
            let map = BigMap::from_decimal(c, ctx).map_err(input)?;
            let cfg = NestConfig {
                depth: *depth,
                horizon_mult: *horizon,
                ..NestConfig::default()
            };
            let nest = build_nest(&map, &cfg);
            let opts = ReportOptions {
                horizon_mult: *horizon,
                seed: *seed,
                samples: *samples,
                n0: *n0,
                suites: !no_suites,
            };
            let mut report = build_report(&nest, &opts).map_err(|e| Failure::from(anyhow::Error::from(e)))?;
            report.meta = Meta::current(timestamp(cli));
            eprintln!(
                "c = {}: {} levels, termination {}",
                c,
                nest.depth(),
                nest.termination.name()
            );
            let text = match format {
                Format::Json => json(&report)?,
                Format::Csv => csv_string(&report.levels).map_err(|e| Failure(1, e.into()))?,
            };
            emit(out, &text)?;
            for s in report.suites.iter().filter(|s| !s.pass) {
                eprintln!("suite {} failed: {} violations", s.suite, s.violations);
            }
            if let Termination::PrecisionExhausted { level, bits } = nest.termination {
                eprintln!("precision exhausted at level {level} ({bits} bits)");
                return Ok(EXIT_PRECISION);
            }
            Ok(if report.passed() { 0 } else { EXIT_GATE })
        }
        Command::Scan {
            lo,
            hi,
            steps,
            depth,
            out,
            format,
        } => {
            let ctx = context(cli, 1)?;
            let window = Interval::new(
                BigReal::parse(lo, cli.bits).map_err(input)?,
                BigReal::parse(hi, cli.bits).map_err(input)?,
            )
            .map_err(input)?;
            let cfg = NestConfig {
                depth: *depth,
                ..NestConfig::default()
            };
            let rows = scan(&window, *steps, ctx, &cfg);
            let text = match format {
                Format::Json => json(&rows)?,
                Format::Csv => {
                    let mut s = String::from("c,termination,depth,classes,mu_last,k_last,kappa_ok\n");
                    for r in &rows {
                        let f = |x: Option<f64>| x.map(|v| format!("{v:e}")).unwrap_or_default();
                        s += &format!(
                            "{},{},{},{},{},{},{}\n",
                            r.c,
                            r.termination,
                            r.depth,
                            r.classes,
                            f(r.mu_last),
                            f(r.k_last),
                            r.kappa_ok
                        );
                    }
                    s
                }
            };
            emit(out, &text)?;
            Ok(if rows.iter().all(|r| r.kappa_ok) { 0 } else { EXIT_GATE })
        }
        Command::Fibonacci {
            digits,
            depth,
            check,
            out,
        } => locate(cli, &ReturnItinerary::fibonacci(), "-2", "-0.25", *digits, *depth, *check, out),
        Command::Locate {
            itinerary,
            lo,
            hi,
            digits,
            depth,
            check,
            out,
        } => {
            let target: ReturnItinerary = itinerary.parse().map_err(input)?;
            locate(cli, &target, lo, hi, *digits, *depth, *check, out)
        }
        Command::Verify {
            suite,
            trials,
            seed,
            c,
            depth,
            n0,
            out,
        } => {
            let ctx = context(cli, *seed)?;
            let mut reports: Vec<SuiteReport> = match suite {
                Suite::Geometry | Suite::All => geometry_suites::<BigReal>(*trials, *seed, ctx),
                Suite::Composition => vec![check_composition_lemma::<BigReal>(*trials, *seed, ctx)],
                Suite::Sqrt => vec![check_sqrt_lemma::<BigReal>(*trials, *seed, ctx)],
                Suite::CrossRatio => vec![check_cross_ratio::<BigReal>(*trials, *seed, ctx)],
                Suite::LeadingOrder => vec![check_leading_order::<BigReal>(&[1e-2, 1e-3, 1e-4], ctx)],
                Suite::Nest => Vec::new(),
            };
            if matches!(suite, Suite::Nest | Suite::All) {
                let map = BigMap::from_decimal(c, ctx).map_err(input)?;
                let nest = build_nest(
                    &map,
                    &NestConfig {
                        depth: *depth,
                        ..NestConfig::default()
                    },
                );
                let opts = ReportOptions {
                    seed: *seed,
                    n0: *n0,
                    ..ReportOptions::default()
                };
                let report = build_report(&nest, &opts).map_err(|e| Failure::from(anyhow::Error::from(e)))?;
                reports.extend(report.suites);
            }
            for r in &reports {
                eprintln!(
                    "{:<16} {:>8} trials {:>6} violations  {}",
                    r.suite,
                    r.trials,
                    r.violations,
                    if r.pass { "pass" } else { "FAIL" }
                );
            }
            emit(out, &json(&reports)?)?;
            Ok(if reports.iter().all(|r| r.pass) { 0 } else { EXIT_GATE })
        }
        Command::Export { input: path, out, format } => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))
                .map_err(input)?;
            let report: Report<BigReal> = serde_json::from_str(&text).map_err(input)?;
            let text = match format {
                Format::Csv => csv_string(&rebased(report.levels, report.parameter.bits))
                    .map_err(|e| Failure(1, e.into()))?,
                Format::Json => json(&report)?,
            };
            emit(out, &text)?;
            Ok(0)
        }
    }
}

/// Rounds deserialized values back to the precision they were written at,
/// so the exported decimals match the original report.
fn rebased(levels: Vec<LevelGeometry<BigReal>>, bits: u32) -> Vec<LevelGeometry<BigReal>> {
    let at = |x: BigReal| x.at_bits(bits);
    levels
        .into_iter()
        .map(|mut g| {
            g.mu = at(g.mu);
            g.lambda = g.lambda.map(at);
            g.lambda_star = g.lambda_star.map(at);
            g.alpha = g.alpha.map(at);
            g.omega = g.omega.map(at);
            if let Some(k) = g.k.as_mut() {
                k.value = at(k.value.clone());
            }
            if let Some(r) = g.rho.as_mut() {
                r.value = at(r.value.clone());
            }
            g
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn locate(
    cli: &Cli,
    target: &ReturnItinerary,
    lo: &str,
    hi: &str,
    digits: usize,
    depth: usize,
    check: u32,
    out: &Option<PathBuf>,
) -> Result<u8, Failure> {
    let ctx = context(cli, 1)?;
    let window = Interval::new(
        BigReal::parse(lo, cli.bits).map_err(input)?,
        BigReal::parse(hi, cli.bits).map_err(input)?,
    )
    .map_err(input)?;
    let cfg = LocateConfig {
        digits,
        max_depth: depth,
        ..LocateConfig::default()
    };
    let result = match locate_itinerary(target, &window, ctx, &cfg) {
        Ok(r) => r,
        Err(Error::NotRealized(why)) => {
            eprintln!("{target}: not realized in [{lo}, {hi}]: {why}");
            return Ok(EXIT_GATE);
        }
        Err(e) => return Err(Failure::from(anyhow::Error::from(e))),
    };
    let (a, b) = verify_bracket(&result, target, depth, check);
    let width = result.width();
    eprintln!(
        "{target}: bracket width {} after {} probes; endpoints realize {a} and {b} of {depth} levels at {check}x precision",
        width.to_decimal(3),
        result.probes
    );
    let c = result.midpoint().to_decimal(digits + 2);
    if let Some(path) = out {
        let summary = serde_json::json!({
            "itinerary": target.to_string(),
            "c": c,
            "lo": result.lo,
            "hi": result.hi,
            "depth": result.depth,
            "verified": [a, b],
            "history": result.history,
            "probes": result.probes,
            "bits": result.bits,
        });
        emit(&Some(path.clone()), &json(&summary)?)?;
    }
    println!("{c}");
    Ok(if a >= depth && b >= depth { 0 } else { EXIT_GATE })
}
