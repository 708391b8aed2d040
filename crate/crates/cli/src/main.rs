//! `regsat`: generate regular k-SAT instances, count their solutions
//! exactly, census short signed cycles, and run the seeded verification
//! experiments.

mod experiments;
mod report;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use regsat_core::analytic::{solve_q, RateTable};
use regsat_core::counting::{count_all, overlap_census, CountOptions};
use regsat_core::cycles::{cycle_census, u_statistic};
use regsat_core::error::Error;
use regsat_core::model::codec;
use regsat_core::model::rng::replicate_stream;
use regsat_core::model::sample_formula;
use regsat_core::{Formula, ModelParams};

use experiments::Caps;
use report::Report;

#[derive(Parser)]
#[command(
    name = "regsat",
    version,
    about = "Regular k-SAT counting laboratory",
    propagate_version = true
)]
struct Cli {
    /// Worker threads; falls back to REGSAT_WORKERS, then logical cores.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Lift the desk-scale resource caps (n, census depth, replicate count).
    #[arg(long, global = true)]
    unsafe_caps: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormulaFormat {
    Json,
    Dimacs,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the tilt equation 2q = 1 - (1-q)^k.
    Q {
        #[arg(long)]
        k: u32,
    },
    /// Dump the cycle rate table (lambda, delta, series constants) as JSON.
    Rates {
        #[arg(long)]
        k: u32,
        #[arg(long)]
        d: u32,
        #[arg(long, default_value_t = 4)]
        max_len: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample a uniform regular formula.
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        seed: u64,
        /// Replicate index deriving the stream from the seed.
        #[arg(long, default_value_t = 0)]
        replicate: u64,
        #[arg(long, value_enum, default_value_t = FormulaFormat::Json)]
        format: FormulaFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Count satisfying assignments of a stored formula exactly.
    Count {
        #[arg(long = "in")]
        input: PathBuf,
        /// Also decompose Z by clause-pattern histogram.
        #[arg(long)]
        histogram: bool,
        /// Histogram window radius omega (keys with ||mu - mu_bar|| <=
        /// omega/sqrt(m)).
        #[arg(long, default_value_t = 3.0)]
        omega: f64,
        /// Also compute the pair-overlap census (quadratic in Z).
        #[arg(long)]
        overlap: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Census short signed cycles of a stored formula.
    Cycles {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 3)]
        max_len: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Seeded verification experiments.
    Exp(ExpArgs),
}

#[derive(Args)]
struct ExpArgs {
    #[command(subcommand)]
    experiment: ExpCommand,
    /// Report format: json (full report) or csv (per-replicate rows).
    #[arg(long, value_enum, default_value_t = ReportFormat::Json, global = true)]
    format: ReportFormat,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum ExpCommand {
    /// Mean Z against the first-moment formula and the exact expectation.
    FirstMoment {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 10_000)]
        reps: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Cycle census means and Poisson goodness of fit (uniform model).
    CyclePoisson {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 2000)]
        reps: u64,
        #[arg(long, default_value_t = 1)]
        max_len: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Cycle census means against the tilted rates (planted model).
    PlantedCycles {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 2000)]
        reps: u64,
        #[arg(long, default_value_t = 1)]
        max_len: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Moments of the truncated limit variable and its two-route law check.
    WMoments {
        #[arg(long)]
        k: u32,
        #[arg(long)]
        d: u32,
        #[arg(long, default_value_t = 3)]
        ell: usize,
        #[arg(long, default_value_t = 1_000_000)]
        draws: u64,
        #[arg(long, default_value_t = 100_000)]
        ks_draws: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Pair-array agreement statistic against mean km/4 and variance nu^2 m.
    AStat {
        #[arg(long)]
        k: u32,
        #[arg(long)]
        m: u64,
        #[arg(long, default_value_t = 5000)]
        draws: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Empirical E[Z^2]/E[Z]^2 across sizes against the limit constant.
    SecondMoment {
        /// Comma-separated instance sizes, e.g. 15,21.
        #[arg(long, value_delimiter = ',')]
        n: Vec<usize>,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        k: usize,
        /// Comma-separated replicate counts matching --n.
        #[arg(long, value_delimiter = ',')]
        reps: Vec<u64>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Overlap exponent landscape, derivative check and stationary points.
    Overlap {
        #[arg(long)]
        k: u32,
        #[arg(long)]
        d: u32,
        #[arg(long, default_value_t = 21)]
        rho_grid: usize,
        /// Central-difference step for the derivative check.
        #[arg(long, default_value_t = 1e-5)]
        h: f64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let workers = resolved_workers(cli.workers);
    if let Some(workers) = workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
        {
            eprintln!("error: could not size the worker pool: {e}");
            return ExitCode::from(2);
        }
    }
    let caps = Caps::standard(cli.unsafe_caps);
    match run(cli.command, &caps, workers) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

fn resolved_workers(flag: Option<usize>) -> Option<usize> {
    flag.or_else(|| {
        std::env::var("REGSAT_WORKERS")
            .ok()
            .and_then(|v| v.parse().ok())
    })
}

fn exit_code_for(e: &Error) -> ExitCode {
    match e {
        Error::Domain(_) | Error::Format(_) => ExitCode::from(2),
        Error::Resource(_) => ExitCode::from(3),
        _ => ExitCode::from(4),
    }
}

fn write_output(out: &Option<PathBuf>, text: &str) -> regsat_core::Result<()> {
    let text = text.trim_end();
    match out {
        Some(path) => fs::write(path, format!("{text}\n"))
            .map_err(|e| Error::Format(format!("cannot write {}: {e}", path.display()))),
        None => {
            use std::io::Write;
            let mut stdout = std::io::stdout().lock();
            match writeln!(stdout, "{text}") {
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
                Err(e) => Err(Error::Format(format!("cannot write to stdout: {e}"))),
                Ok(()) => Ok(()),
            }
        }
    }
}

fn load_formula(path: &PathBuf) -> regsat_core::Result<Formula> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Format(format!("cannot read {}: {e}", path.display())))?;
    let first = text.trim_start().chars().next().unwrap_or(' ');
    if first == 'p' || first == 'c' {
        codec::from_dimacs_auto(&text)
    } else {
        codec::from_json(&text)
    }
}

fn emit_report(
    report: &Report,
    format: ReportFormat,
    out: &Option<PathBuf>,
    rows: &[(u64, String, f64)],
) -> ExitCode {
    let payload = match format {
        ReportFormat::Json => {
            serde_json::to_string_pretty(&report.to_json()).expect("report serializes")
        }
        ReportFormat::Csv => report::to_csv(rows),
    };
    if let Err(e) = write_output(out, &payload) {
        eprintln!("error: {e}");
        return exit_code_for(&e);
    }
    if report.all_pass() {
        ExitCode::SUCCESS
    } else {
        for claim in report.failing() {
            eprintln!(
                "FAIL {}: observed {} outside {}",
                claim.name, claim.observed, claim.band
            );
        }
        ExitCode::FAILURE
    }
}

fn run(command: Command, caps: &Caps, workers: Option<usize>) -> regsat_core::Result<ExitCode> {
    match command {
        Command::Q { k } => {
            let q = solve_q(k)?;
            println!("{q:.10}");
            Ok(ExitCode::SUCCESS)
        }
        Command::Rates { k, d, max_len, out } => {
            caps.check_census_len(max_len)?;
            let table = RateTable::new(k, d, max_len)?;
            write_output(&out, &serde_json::to_string_pretty(&table).expect("serializes"))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Gen {
            n,
            d,
            k,
            seed,
            replicate,
            format,
            out,
        } => {
            let params = ModelParams::new(n, d, k)?;
            let mut rng = replicate_stream(seed, replicate);
            let formula = sample_formula(&params, &mut rng);
            let text = match format {
                FormulaFormat::Json => codec::to_json(&formula),
                FormulaFormat::Dimacs => codec::to_dimacs(&formula),
            };
            write_output(&out, text.trim_end())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Count {
            input,
            histogram,
            omega,
            overlap,
            out,
        } => {
            let formula = load_formula(&input)?;
            let params = *formula.params();
            let opts = CountOptions {
                histogram,
                ..caps.count_options()
            };
            let result = count_all(&formula, &opts)?;
            let z = result.z_u64();
            let ln_z = z.filter(|&z| z > 0).map(|z| (z as f64).ln());
            let log_norm = regsat_core::analytic::log_normalizer(&params)?;
            let mut payload = json!({
                "params": params,
                "Z": result.z.to_string(),
                "ln_z": ln_z,
                "log_normalizer": log_norm,
                "ln_z_normalized": ln_z.map(|l| l + log_norm),
            });
            if let Some(h) = &result.histogram {
                let mut in_window: Vec<(&regsat_core::counting::MuKey, u64)> =
                    h.keys_in_window(omega)?;
                in_window.sort();
                let in_total: u64 = in_window.iter().map(|&(_, c)| c).sum();
                payload["histogram"] = json!(in_window
                    .iter()
                    .map(|(key, count)| json!({"mu": key, "z_mu": count.to_string()}))
                    .collect::<Vec<_>>());
                payload["histogram_omega"] = json!(omega);
                payload["z_in_window"] = json!(in_total.to_string());
                payload["distinct_keys_total"] = json!(h.entries.len());
            }
            if overlap {
                let census = overlap_census(&formula, &opts)?;
                payload["overlap"] = json!(census.counts);
            }
            write_output(&out, &serde_json::to_string_pretty(&payload).expect("serializes"))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Cycles {
            input,
            max_len,
            out,
        } => {
            caps.check_census_len(max_len)?;
            let formula = load_formula(&input)?;
            let params = *formula.params();
            let census = cycle_census(&formula, max_len)?;
            let rates = RateTable::new(params.k as u32, params.d as u32, max_len)?;
            let u: Vec<f64> = (1..=max_len)
                .map(|ell| u_statistic(&census, &rates, ell))
                .collect::<regsat_core::Result<_>>()?;
            let payload = json!({
                "params": params,
                "census": census,
                "u": u,
            });
            write_output(&out, &serde_json::to_string_pretty(&payload).expect("serializes"))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Exp(args) => {
            let ExpArgs {
                experiment,
                format,
                out,
            } = args;
            let (mut report, rows) = match experiment {
                ExpCommand::FirstMoment { n, d, k, reps, seed } => {
                    experiments::first_moment(ModelParams::new(n, d, k)?, reps, seed, caps)?
                }
                ExpCommand::CyclePoisson {
                    n,
                    d,
                    k,
                    reps,
                    max_len,
                    seed,
                } => experiments::cycle_experiment(
                    ModelParams::new(n, d, k)?,
                    reps,
                    max_len,
                    seed,
                    false,
                    caps,
                )?,
                ExpCommand::PlantedCycles {
                    n,
                    d,
                    k,
                    reps,
                    max_len,
                    seed,
                } => experiments::cycle_experiment(
                    ModelParams::new(n, d, k)?,
                    reps,
                    max_len,
                    seed,
                    true,
                    caps,
                )?,
                ExpCommand::WMoments {
                    k,
                    d,
                    ell,
                    draws,
                    ks_draws,
                    seed,
                } => experiments::w_moments(k, d, ell, draws, ks_draws, seed, caps)?,
                ExpCommand::AStat { k, m, draws, seed } => {
                    experiments::a_stat(k, m, draws, seed, caps)?
                }
                ExpCommand::SecondMoment {
                    n,
                    d,
                    k,
                    reps,
                    seed,
                } => experiments::second_moment(d, k, &n, &reps, seed, caps)?,
                ExpCommand::Overlap { k, d, rho_grid, h } => {
                    experiments::overlap(k, d, rho_grid, h, caps)?
                }
            };
            report.set_context(
                workers,
                match format {
                    ReportFormat::Json => "json",
                    ReportFormat::Csv => "csv",
                },
            );
            Ok(emit_report(&report, format, &out, &rows))
        }
    }
}
