use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nbcollide::bench::{self, LatticeSpec, NarrowbandBench};
use nbcollide::{run_scenario, RunOptions, ScenarioConfig};

#[derive(Parser)]
#[command(name = "nbcollide", version, about = "Narrow-band collision simulations and benchmarks")]
struct Cli {
    /// Worker threads for detection and fast marching.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory (overrides the config and NBCOLLIDE_OUTPUT).
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Also write legacy VTK files.
    #[arg(long, global = true)]
    vtk: bool,
    /// Seed for randomized initial layouts.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario to its final time.
    Run { config: PathBuf },
    /// Parse and validate a scenario without running it.
    Validate { config: PathBuf },
    /// Timing benchmarks.
    #[command(subcommand)]
    Bench(BenchCommand),
}

#[derive(Subcommand)]
enum BenchCommand {
    /// Narrow-band fast marching on an annulus for several band widths.
    Narrowband(NarrowbandArgs),
    /// Collision pipeline timings on body lattices.
    Detection(DetectionArgs),
}

#[derive(Args)]
struct NarrowbandArgs {
    #[arg(long, default_value_t = 0.1)]
    r_inner: f64,
    #[arg(long, default_value_t = 2.0)]
    r_outer: f64,
    /// Mesh size.
    #[arg(long, default_value_t = 0.01)]
    h: f64,
    /// Band widths, decreasing; the first must cover the annulus.
    #[arg(long, value_delimiter = ',', default_values_t = [1.9, 1.0, 0.5, 0.25, 0.125, 0.0625])]
    d_max: Vec<f64>,
    #[arg(long, default_value_t = 5)]
    repetitions: usize,
    /// Print CSV instead of a table.
    #[arg(long)]
    csv: bool,
}

#[derive(Args)]
struct DetectionArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [1, 25, 49, 81, 100])]
    bodies: Vec<usize>,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    /// Worker counts to compare; defaults to 1 and 4 (or --workers).
    #[arg(long = "worker-counts", value_delimiter = ',')]
    worker_counts: Vec<usize>,
    #[arg(long, default_value_t = 5)]
    repetitions: usize,
    /// Add a single body far from the walls.
    #[arg(long)]
    isolated: bool,
    /// Print CSV instead of a table.
    #[arg(long)]
    csv: bool,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    ExitCode::from(dispatch(cli) as u8)
}

fn write_report(cli_output: &Option<PathBuf>, name: &str, text: &str) -> i32 {
    if let Some(dir) = cli_output {
        if let Err(e) = std::fs::create_dir_all(dir).and_then(|_| std::fs::write(dir.join(name), text)) {
            eprintln!("error: cannot write {}: {e}", dir.join(name).display());
            return 3;
        }
    }
    0
}

fn dispatch(cli: Cli) -> i32 {
    let opts = RunOptions { output: cli.output.clone(), workers: cli.workers, vtk: cli.vtk, seed: cli.seed };
    match cli.command {
        Command::Validate { config } => match ScenarioConfig::load(&config).and_then(|c| c.build(cli.seed).map(|s| (c, s))) {
            Ok((cfg, state)) => {
                println!("{}: ok ({} bodies, {}D)", cfg.name, state.bodies.len(), cfg.dim);
                0
            }
            Err(e) => {
                eprintln!("error: {e}");
                2
            }
        },
        Command::Run { config } => {
            let cfg = match ScenarioConfig::load(&config) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return 2;
                }
            };
            match run_scenario(&cfg, &opts) {
                Ok(s) => {
                    println!(
                        "{}: {} steps to t = {:.4}, overlap events {}, min distance {}, output {}",
                        cfg.name,
                        s.steps,
                        s.final_time,
                        s.overlap_events,
                        s.min_distance.map_or("none".to_string(), |d| format!("{d:.3e}")),
                        s.directory.display()
                    );
                    0
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    e.exit_code()
                }
            }
        }
        Command::Bench(BenchCommand::Narrowband(a)) => {
            let b = NarrowbandBench { r_inner: a.r_inner, r_outer: a.r_outer, h: a.h, d_max: a.d_max, repetitions: a.repetitions };
            let run = || bench::run_narrowband_bench(&b);
            let result = match cli.workers {
                Some(w) => rayon::ThreadPoolBuilder::new()
                    .num_threads(w)
                    .build()
                    .map_err(bench::BenchError::from)
                    .and_then(|p| p.install(run)),
                None => run(),
            };
            match result {
                Ok(rows) => {
                    let csv = bench::narrowband_csv(&rows);
                    print!("{}", if a.csv { csv.clone() } else { bench::narrowband_table(&rows) });
                    write_report(&cli.output, "narrowband.csv", &csv)
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    e.exit_code()
                }
            }
        }
        Command::Bench(BenchCommand::Detection(a)) => {
            let workers = if !a.worker_counts.is_empty() {
                a.worker_counts
            } else {
                let mut w = vec![1, cli.workers.unwrap_or(4)];
                w.dedup();
                w
            };
            let mut result = bench::run_detection_bench(&a.bodies, a.dim, &workers, a.repetitions);
            if a.isolated {
                if let Ok(rows) = &mut result {
                    match bench::run_detection_case(&LatticeSpec::isolated(a.dim), &workers, a.repetitions) {
                        Ok(r) => rows.insert(0, r),
                        Err(e) => result = Err(e),
                    }
                }
            }
            match result {
                Ok(rows) => {
                    let csv = bench::detection_csv(&rows);
                    print!("{}", if a.csv { csv.clone() } else { bench::detection_table(&rows) });
                    write_report(&cli.output, "detection.csv", &csv)
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    e.exit_code()
                }
            }
        }
    }
}
