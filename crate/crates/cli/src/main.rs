use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};
use relocate::bench::{render_table, run_suite, suite, summarize, write_summary, Family};
use relocate::metrics::{append_row, write_rows, MetricsRow};
use relocate::{parse_instance, random_instance, solve_with, write_instance, Algorithm, Outcome, SatBackend, SolverConfig, Variant};
use relocate_sat::ExternalSolver;

const EXIT_USAGE: u8 = 2;
const EXIT_TIMEOUT: u8 = 3;
const EXIT_UNSOLVABLE: u8 = 4;

#[derive(Parser)]
#[command(name = "relocate", version, about = "Optimal item relocation on graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Grid,
    Random,
    Star,
    Clique,
}

#[derive(Subcommand)]
enum Command {
    /// Write a random instance file.
    Generate {
        #[arg(long, value_enum)]
        family: FamilyArg,
        /// `WxH` for grids, vertex count otherwise.
        #[arg(long)]
        size: String,
        #[arg(long)]
        variant: String,
        #[arg(long)]
        items: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Defaults to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve an instance file and print the plan.
    Solve {
        #[arg(long)]
        algo: String,
        #[arg(long = "in")]
        input: PathBuf,
        /// Seconds; fractions allowed.
        #[arg(long)]
        timeout: Option<f64>,
        /// Metrics CSV to append a row to.
        #[arg(long)]
        stats: Option<PathBuf>,
        /// `internal` or `dimacs:<command>`.
        #[arg(long, default_value = "internal")]
        sat: String,
        /// Re-solve from scratch after every refinement.
        #[arg(long)]
        from_scratch: bool,
    },
    /// Run a benchmark suite.
    Bench {
        #[arg(long, default_value = "paper-small")]
        suite: String,
        #[arg(long, default_value_t = 10)]
        seeds: u64,
        #[arg(long)]
        out: PathBuf,
        /// Summary CSV; defaults to `<out>` with a `.summary.csv` suffix.
        #[arg(long)]
        summary: Option<PathBuf>,
        /// Seconds per run.
        #[arg(long, default_value_t = 60.0)]
        timeout: f64,
        #[arg(long, default_value = "internal")]
        sat: String,
    },
}

struct Failure {
    code: u8,
    message: String,
}

fn usage(message: impl std::fmt::Display) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message: message.to_string(),
    }
}

fn runtime(message: impl std::fmt::Display) -> Failure {
    Failure {
        code: 1,
        message: message.to_string(),
    }
}

fn family(arg: FamilyArg, size: &str) -> Result<Family, Failure> {
    let count = || size.parse::<usize>().map_err(|_| usage(format!("bad size {size:?}")));
    Ok(match arg {
        FamilyArg::Grid => {
            let (w, h) = size
                .split_once('x')
                .and_then(|(w, h)| Some((w.parse().ok()?, h.parse().ok()?)))
                .ok_or_else(|| usage(format!("grid size must look like 8x8, got {size:?}")))?;
            Family::Grid { width: w, height: h }
        }
        FamilyArg::Random => Family::Random { n: count()? },
        FamilyArg::Star => Family::Star { n: count()? },
        FamilyArg::Clique => Family::Clique { n: count()? },
    })
}

fn backend(spec: &str) -> Result<SatBackend, Failure> {
    if spec == "internal" {
        return Ok(SatBackend::Internal);
    }
    let cmd = spec
        .strip_prefix("dimacs:")
        .ok_or_else(|| usage(format!("--sat must be `internal` or `dimacs:CMD`, got {spec:?}")))?;
    ExternalSolver::new(cmd).map(SatBackend::External).map_err(usage)
}

fn seconds(s: f64) -> Result<Duration, Failure> {
    Duration::try_from_secs_f64(s).map_err(|_| usage(format!("bad timeout {s}")))
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Generate {
            family: fam,
            size,
            variant,
            items,
            seed,
            out,
        } => {
            let variant: Variant = variant.parse().map_err(usage)?;
            let graph = family(fam, &size)?.graph(seed).map_err(usage)?;
            let inst = random_instance(&graph, variant, items, seed).map_err(usage)?;
            let text = write_instance(&inst);
            match out {
                Some(path) => fs::write(&path, text).map_err(|e| runtime(format!("{}: {e}", path.display())))?,
                None => print!("{text}"),
            }
            Ok(0)
        }
        Command::Solve {
            algo,
            input,
            timeout,
            stats,
            sat,
            from_scratch,
        } => {
            let algorithm: Algorithm = algo.parse().map_err(usage)?;
            let text = fs::read_to_string(&input).map_err(|e| usage(format!("{}: {e}", input.display())))?;
            let inst = parse_instance(&text).map_err(|e| usage(format!("{}: {e}", input.display())))?;
            let config = SolverConfig {
                timeout: timeout.map(seconds).transpose()?,
                backend: backend(&sat)?,
                incremental: !from_scratch,
            };
            let report = solve_with(algorithm, &inst, &config).map_err(runtime)?;
            if let Some(path) = stats {
                let id = input.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned());
                let row = MetricsRow::from_report(&id, "file", &inst, 0, &report);
                append_row(&path, &row).map_err(runtime)?;
            }
            match &report.outcome {
                Outcome::Solved(plan) => {
                    for t in 0..=plan.makespan() {
                        let config: Vec<String> = plan.configuration(t).iter().map(usize::to_string).collect();
                        println!("{t}: {}", config.join(" "));
                    }
                    println!("xi: {}", plan.cost());
                    Ok(0)
                }
                Outcome::Timeout => {
                    eprintln!("timeout");
                    Ok(EXIT_TIMEOUT)
                }
                Outcome::Unsolvable => {
                    eprintln!("unsolvable");
                    Ok(EXIT_UNSOLVABLE)
                }
            }
        }
        Command::Bench {
            suite: name,
            seeds,
            out,
            summary,
            timeout,
            sat,
        } => {
            let suite = suite(&name).map_err(usage)?;
            let config = SolverConfig {
                timeout: Some(seconds(timeout)?),
                backend: backend(&sat)?,
                incremental: true,
            };
            let file = fs::File::create(&out).map_err(|e| runtime(format!("{}: {e}", out.display())))?;
            let mut writer = std::io::BufWriter::new(file);
            write_rows(&mut writer, &[], true).map_err(runtime)?;
            let mut failed = None;
            let rows = run_suite(&suite, seeds, &config, |row| {
                if failed.is_none() {
                    failed = write_rows(&mut writer, std::slice::from_ref(row), false).err();
                }
                eprintln!("{} {} {}", row.instance_id, row.algorithm, row.outcome);
            });
            if let Some(e) = failed {
                return Err(runtime(e));
            }
            drop(writer);
            let table = summarize(&rows).map_err(runtime)?;
            let summary_path = summary.unwrap_or_else(|| {
                let mut p = out.clone().into_os_string();
                p.push(".summary.csv");
                p.into()
            });
            let file = fs::File::create(&summary_path).map_err(|e| runtime(format!("{}: {e}", summary_path.display())))?;
            write_summary(file, &table).map_err(runtime)?;
            print!("{}", render_table(&table));
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
