//! Command-line front end. `run` parses arguments, executes one command in a
//! dedicated thread pool and returns the exit code with the rendered report.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::domain::{AmbientKind, AmbientSet, DensityFunction, Params};
use crate::error::{Error, Result};
use crate::{ap_count, extremal, gaussian_width as gw, replica, rng, tail_prob, variational};

pub const SEED_ENV: &str = "APTAIL_SEED";

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DOMAIN: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "aptail", version, about = "Upper tails of k-AP counts: counting, rates, Gaussian widths, exact tails")]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
    /// Seed for every stochastic step; defaults to $APTAIL_SEED or a fixed value.
    #[arg(long, global = true, value_parser = parse_u64)]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_enum, default_value_t = Output::Json)]
    pub output: Output,
    /// Worker threads; defaults to the available cores.
    #[arg(long, global = true, value_parser = parse_count)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Output {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AmbientArg {
    Interval,
    Cyclic,
}

#[derive(Debug, Clone, Args)]
pub struct AmbientSpec {
    #[arg(long, value_enum, default_value_t = AmbientArg::Cyclic)]
    pub ambient: AmbientArg,
    #[arg(long, value_parser = parse_count)]
    pub n: usize,
}

impl AmbientSpec {
    fn build(&self) -> Result<AmbientSet> {
        let kind = match self.ambient {
            AmbientArg::Interval => AmbientKind::Interval,
            AmbientArg::Cyclic => AmbientKind::Cyclic,
        };
        AmbientSet::new(kind, self.n)
    }
}

#[derive(Debug, Clone, Args)]
pub struct ParamSpec {
    #[arg(long, value_parser = parse_count)]
    pub k: usize,
    #[arg(long, value_parser = parse_f64)]
    pub p: f64,
    #[arg(long, value_parser = parse_f64)]
    pub delta: f64,
}

impl ParamSpec {
    fn build(&self) -> Result<Params> {
        Params::new(self.k, self.p, self.delta)
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// T_k and incidence counts of a set.
    Count {
        #[command(flatten)]
        ambient: AmbientSpec,
        #[arg(long, value_parser = parse_count)]
        k: usize,
        /// `full`, `empty`, or a file of integers separated by commas or newlines.
        #[arg(long, default_value = "full")]
        set: String,
    },
    /// Brute-force maximum of T_k over n-element subsets.
    Extremal {
        #[command(flatten)]
        ambient: AmbientSpec,
        #[arg(long, value_parser = parse_count)]
        k: usize,
        /// Subset size; with --sweep, the largest size.
        #[arg(long, value_parser = parse_count)]
        size: usize,
        /// Every size from 1 to --size.
        #[arg(long)]
        sweep: bool,
    },
    /// Numerical minimiser of the entropic variational problem.
    VarSolve {
        #[command(flatten)]
        ambient: AmbientSpec,
        #[command(flatten)]
        params: ParamSpec,
        /// Random starts in addition to the constructions.
        #[arg(long, value_parser = parse_count)]
        starts: Option<usize>,
    },
    /// Closed-form leading-order rate.
    Rate {
        #[command(flatten)]
        ambient: AmbientSpec,
        #[command(flatten)]
        params: ParamSpec,
        #[arg(long, value_enum, default_value_t = RegimeArg::Auto)]
        regime: RegimeArg,
    },
    /// The microscopic constant gamma_k for the interval.
    Gamma {
        #[arg(long, value_parser = parse_count)]
        k: usize,
    },
    /// Gaussian width bounds for T_k / N.
    Gw {
        #[command(flatten)]
        ambient: AmbientSpec,
        #[arg(long, value_parser = parse_count)]
        k: usize,
        #[arg(long, value_enum, default_value_t = GwMethodArg::Mc)]
        method: GwMethodArg,
        #[arg(long, value_parser = parse_count, default_value = "16")]
        samples: usize,
        /// Extra values of N, emitted as CSV rows with the first.
        #[arg(long, value_delimiter = ',', value_parser = parse_count)]
        sweep: Vec<usize>,
    },
    /// Error terms of the Gaussian-width large deviation bound.
    Eldan {
        #[command(flatten)]
        ambient: AmbientSpec,
        #[command(flatten)]
        params: ParamSpec,
        #[arg(long, value_parser = parse_f64)]
        gw: f64,
    },
    /// Upper-tail probability of T_k in a random subset.
    Tail {
        #[command(flatten)]
        ambient: AmbientSpec,
        #[command(flatten)]
        params: ParamSpec,
        #[arg(long, value_enum, default_value_t = TailMethodArg::Exact)]
        method: TailMethodArg,
        #[arg(long, value_parser = parse_u64, default_value = "100000")]
        samples: u64,
        /// Per-element tilt: a density JSON file or whitespace/comma separated reals.
        #[arg(long)]
        tilt_file: Option<PathBuf>,
    },
    /// Exact tail over a grid of delta values.
    TailSweep {
        #[command(flatten)]
        ambient: AmbientSpec,
        #[arg(long, value_parser = parse_count)]
        k: usize,
        #[arg(long, value_parser = parse_f64)]
        p: f64,
        #[arg(long, value_delimiter = ',', value_parser = parse_f64, required = true)]
        deltas: Vec<f64>,
    },
    /// Replica-symmetry check for the constant density q.
    Replica {
        #[arg(long, value_parser = parse_f64)]
        p: f64,
        #[arg(long, value_parser = parse_f64)]
        q: Option<f64>,
        #[arg(long, value_parser = parse_count)]
        k: usize,
        /// Scan this many q values in [p, 1) and emit CSV rows.
        #[arg(long, value_parser = parse_count)]
        scan: Option<usize>,
        #[arg(long, value_parser = parse_count, default_value = "2048")]
        grid: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RegimeArg {
    Auto,
    Macro,
    Micro,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GwMethodArg {
    Mc,
    Fourier3,
    Fourier4,
    Crt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TailMethodArg {
    Exact,
    Mc,
    Tilted,
}

/// Integers also accept scientific notation such as `1e4`.
pub fn parse_count(s: &str) -> std::result::Result<usize, String> {
    if let Ok(v) = s.parse::<usize>() {
        return Ok(v);
    }
    let f: f64 = s.parse().map_err(|_| format!("not a number: {s}"))?;
    if f >= 0.0 && f.fract() == 0.0 && f <= 9.0e15 {
        Ok(f as usize)
    } else {
        Err(format!("not a nonnegative integer: {s}"))
    }
}

fn parse_u64(s: &str) -> std::result::Result<u64, String> {
    s.parse::<u64>().or_else(|_| parse_count(s).map(|v| v as u64))
}

fn parse_f64(s: &str) -> std::result::Result<f64, String> {
    s.parse::<f64>().map_err(|_| format!("not a number: {s}"))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Budget(_) | Error::Infeasible(_) => EXIT_BUDGET,
        _ => EXIT_DOMAIN,
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let config = match RunConfig::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            return if code == EXIT_OK {
                Outcome {
                    code,
                    stdout: text,
                    stderr: String::new(),
                }
            } else {
                Outcome {
                    code,
                    stdout: String::new(),
                    stderr: text,
                }
            };
        }
    };
    run_config(&config)
}

pub fn run_config(config: &RunConfig) -> Outcome {
    let seed = config.seed.unwrap_or_else(default_seed);
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = config.threads {
        builder = builder.num_threads(t.max(1));
    }
    let pool = match builder.build() {
        Ok(p) => p,
        Err(e) => {
            return Outcome {
                code: EXIT_USAGE,
                stdout: String::new(),
                stderr: format!("cannot start thread pool: {e}\n"),
            }
        }
    };
    let mut warnings = Vec::new();
    match pool.install(|| execute(&config.command, seed, config.output, &mut warnings)) {
        Ok(stdout) => Outcome {
            code: EXIT_OK,
            stdout,
            stderr: warnings.iter().map(|w| format!("warning: {w}\n")).collect(),
        },
        Err(e) => Outcome {
            code: exit_code(&e),
            stdout: String::new(),
            stderr: format!("error: {e}\n"),
        },
    }
}

fn default_seed() -> u64 {
    std::env::var(SEED_ENV)
        .ok()
        .and_then(|s| parse_u64(&s).ok())
        .unwrap_or(rng::DEFAULT_SEED)
}

fn json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn csv<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Error::Io(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

fn render<T: Serialize, R: Serialize>(output: Output, value: &T, rows: impl FnOnce() -> Vec<R>) -> Result<String> {
    match output {
        Output::Json => json(value),
        Output::Csv => csv(&rows()),
    }
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Elements of the ambient listed in a text file, as indices.
pub fn read_set(ambient: &AmbientSet, text: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for tok in text.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()) {
        let v: i64 = tok.parse().map_err(|_| Error::domain(format!("not an integer: {tok}")))?;
        let i = ambient
            .index_of(v)
            .ok_or_else(|| Error::domain(format!("{v} is not an element of the ambient set")))?;
        out.push(i);
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// A tilt as density JSON or plain reals.
pub fn read_tilt(ambient: &AmbientSet, text: &str) -> Result<Vec<f64>> {
    let values = if text.trim_start().starts_with('{') {
        let f: DensityFunction = serde_json::from_str(text).map_err(|e| Error::domain(format!("tilt file: {e}")))?;
        if f.ambient() != *ambient {
            return Err(Error::Mismatch("tilt ambient differs from the requested ambient".into()));
        }
        f.into_values()
    } else {
        text.split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<f64>().map_err(|_| Error::domain(format!("not a number: {t}"))))
            .collect::<Result<Vec<f64>>>()?
    };
    if values.len() != ambient.n {
        return Err(Error::domain(format!("tilt has {} entries, expected {}", values.len(), ambient.n)));
    }
    Ok(values)
}

#[derive(Serialize)]
struct NuRow {
    element: i64,
    nu: u64,
}

#[derive(Serialize)]
struct DensityRow {
    element: i64,
    value: f64,
}

#[derive(Serialize)]
struct RateRow {
    value: f64,
    branch_value: f64,
    regime_indicator: f64,
}

#[derive(Serialize)]
struct TailRow {
    threshold: f64,
    prob: f64,
    log_prob: f64,
    stderr: f64,
}

#[derive(Serialize)]
struct ExtremalRow {
    n: usize,
    max_tk: u64,
    interval_tk: u64,
}

#[derive(Serialize)]
struct GammaReport {
    k: usize,
    gamma_exact: String,
    gamma_float: f64,
}

#[derive(Serialize)]
struct GwRow {
    n: usize,
    k: usize,
    lower: f64,
    upper: f64,
    stderr: f64,
    trivial_lower: f64,
    trivial_upper: f64,
}

#[derive(Serialize)]
struct TailOutput {
    #[serde(flatten)]
    report: tail_prob::TailReport,
    rate_comparison: Option<tail_prob::RateComparison>,
}

#[derive(Serialize)]
struct VerdictRow {
    q: f64,
    on_minorant: bool,
    gap: f64,
}

fn execute(command: &Command, seed: u64, output: Output, warnings: &mut Vec<String>) -> Result<String> {
    match command {
        Command::Count { ambient, k, set } => {
            let amb = ambient.build()?;
            let members: Vec<usize> = match set.as_str() {
                "full" => (0..amb.n).collect(),
                "empty" => Vec::new(),
                path => read_set(&amb, &read_text(Path::new(path))?)?,
            };
            let report = ap_count::ap_report(&amb, &members, *k)?;
            render(output, &report, || {
                report
                    .nu
                    .iter()
                    .enumerate()
                    .map(|(i, &nu)| NuRow {
                        element: amb.element_of(i),
                        nu,
                    })
                    .collect()
            })
        }
        Command::Extremal { ambient, k, size, sweep } => {
            let amb = ambient.build()?;
            if *sweep {
                let records = extremal::extremal_sweep(&amb, *k, *size)?;
                render(output, &records, || {
                    records
                        .iter()
                        .map(|r| ExtremalRow {
                            n: r.n,
                            max_tk: r.max_tk,
                            interval_tk: r.interval_tk,
                        })
                        .collect()
                })
            } else {
                let r = extremal::max_tk_bruteforce(&amb, *size, *k)?;
                render(output, &r, || {
                    vec![ExtremalRow {
                        n: r.n,
                        max_tk: r.max_tk,
                        interval_tk: r.interval_tk,
                    }]
                })
            }
        }
        Command::VarSolve { ambient, params, starts } => {
            let amb = ambient.build()?;
            let mut cfg = variational::SolverConfig {
                seed,
                ..Default::default()
            };
            if let Some(s) = starts {
                cfg.random_starts = *s;
            }
            let sol = variational::solve_variational(&amb, &params.build()?, &cfg)?;
            if !sol.feasible {
                warnings.push("solver output misses the constraint".into());
            }
            render(output, &sol, || {
                sol.f
                    .values()
                    .iter()
                    .enumerate()
                    .map(|(i, &v)| DensityRow {
                        element: amb.element_of(i),
                        value: v,
                    })
                    .collect()
            })
        }
        Command::Rate { ambient, params, regime } => {
            let amb = ambient.build()?;
            let params = params.build()?;
            if !(params.p < 1.0) {
                return Err(Error::domain("rates need p < 1"));
            }
            let est = match regime {
                RegimeArg::Auto => variational::rate_auto(&amb, &params),
                RegimeArg::Macro => variational::rate_macroscopic(&amb, &params),
                RegimeArg::Micro => variational::rate_microscopic(&amb, &params),
            };
            warnings.extend(est.warnings.iter().cloned());
            render(output, &est, || {
                vec![RateRow {
                    value: est.value,
                    branch_value: est.branch_value,
                    regime_indicator: est.regime_indicator,
                }]
            })
        }
        Command::Gamma { k } => {
            let g = variational::gamma_k(*k)?;
            let report = GammaReport {
                k: *k,
                gamma_exact: variational::rational_string(&g),
                gamma_float: variational::rational_to_f64(&g),
            };
            render(output, &report, || vec![&report])
        }
        Command::Gw {
            ambient,
            k,
            method,
            samples,
            sweep,
        } => {
            let mut ns = vec![ambient.n];
            ns.extend(sweep.iter().copied());
            let estimates = ns
                .iter()
                .map(|&n| {
                    let amb = AmbientSpec {
                        ambient: ambient.ambient,
                        n,
                    }
                    .build()?;
                    gw_estimate(&amb, *k, *method, *samples, seed)
                })
                .collect::<Result<Vec<_>>>()?;
            let rows = || {
                estimates
                    .iter()
                    .map(|e| GwRow {
                        n: e.n,
                        k: e.k,
                        lower: e.lower,
                        upper: e.upper,
                        stderr: e.stderr,
                        trivial_lower: e.trivial_lower,
                        trivial_upper: e.trivial_upper,
                    })
                    .collect()
            };
            if estimates.len() == 1 {
                render(output, &estimates[0], rows)
            } else {
                render(output, &estimates, rows)
            }
        }
        Command::Eldan { ambient, params, gw: width } => {
            let amb = ambient.build()?;
            let terms = gw::eldan_terms(&amb, &params.build()?, *width)?;
            if !terms.lower_bound_applies {
                warnings.push("2 DLip²/(N ε²) > 1/2: the lower bound does not apply".into());
            }
            render(output, &terms, || vec![terms.clone()])
        }
        Command::Tail {
            ambient,
            params,
            method,
            samples,
            tilt_file,
        } => {
            let amb = ambient.build()?;
            let params = params.build()?;
            let report = match method {
                TailMethodArg::Exact => tail_prob::tail_exact(&amb, &params)?,
                TailMethodArg::Mc => tail_prob::tail_montecarlo(&amb, &params, *samples, seed)?,
                TailMethodArg::Tilted => {
                    let tilt = match tilt_file {
                        Some(path) => read_tilt(&amb, &read_text(path)?)?,
                        None => tail_prob::default_tilt(&amb, &params, seed)?,
                    };
                    tail_prob::tail_tilted(&amb, &params, &tilt, *samples, seed)?
                }
            };
            warnings.extend(report.warnings.iter().cloned());
            let rate_comparison =
                (params.p < 1.0 && params.delta > 0.0).then(|| tail_prob::rate_comparison(&amb, &params, &report));
            let out = TailOutput { report, rate_comparison };
            render(output, &out, || {
                vec![TailRow {
                    threshold: out.report.threshold,
                    prob: out.report.prob,
                    log_prob: out.report.log_prob,
                    stderr: out.report.stderr,
                }]
            })
        }
        Command::TailSweep { ambient, k, p, deltas } => {
            let amb = ambient.build()?;
            let rows = tail_prob::tail_sweep(&amb, *k, *p, deltas)?;
            match output {
                Output::Json => json(&rows),
                Output::Csv => csv(&rows),
            }
        }
        Command::Replica { p, q, k, scan, grid } => {
            if let Some(count) = scan {
                let rows = replica::scan(*p, *k, *count)?;
                if rows.iter().any(|r| !(r.hull_convex && r.hull_below)) {
                    warnings.push("hull self-check failed at some grid point".into());
                }
                let bounds = replica::boundaries(*p, *k, &rows, 1e-6)?;
                for b in &bounds {
                    warnings.push(format!(
                        "verdict changes between q = {:.7} (passes) and q = {:.7} (fails)",
                        b.last_passing, b.first_failing
                    ));
                }
                let flat: Vec<VerdictRow> = rows
                    .iter()
                    .map(|r| VerdictRow {
                        q: r.q,
                        on_minorant: r.on_minorant,
                        gap: r.gap,
                    })
                    .collect();
                match output {
                    Output::Json => json(&serde_json::json!({ "rows": rows, "boundaries": bounds })),
                    Output::Csv => csv(&flat),
                }
            } else {
                let q = q.ok_or_else(|| Error::domain("--q is required without --scan"))?;
                let v = replica::convex_minorant_check(*p, q, *k, *grid)?;
                render(output, &v, || {
                    vec![VerdictRow {
                        q: v.q,
                        on_minorant: v.on_minorant,
                        gap: v.minorant_gap,
                    }]
                })
            }
        }
    }
}

fn gw_estimate(amb: &AmbientSet, k: usize, method: GwMethodArg, samples: usize, seed: u64) -> Result<gw::GWEstimate> {
    match method {
        GwMethodArg::Mc => gw::gw_lower_montecarlo(
            amb,
            k,
            samples,
            &gw::SearchConfig {
                seed,
                ..Default::default()
            },
        ),
        GwMethodArg::Fourier3 => {
            if k != 3 {
                return Err(Error::domain("fourier3 bounds k = 3 only"));
            }
            gw::gw_upper_fourier3(amb, samples, seed)
        }
        GwMethodArg::Fourier4 => {
            if k != 4 {
                return Err(Error::domain("fourier4 bounds k = 4 only"));
            }
            gw::gw_upper_fourier4(amb, samples, seed)
        }
        GwMethodArg::Crt => gw::gw_upper_crt(amb.n, k),
    }
}
