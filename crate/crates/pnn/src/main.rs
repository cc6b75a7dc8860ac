use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use pnn::check;
use pnn::config::ConfigFile;
use pnn::error::{HarnessError, Result};
use pnn::output;
use pnn::suite::{self, ExperimentSuite, SuiteSetting, SweepSpec};
use pnn_core::signal::generate_signal;
use pnn_core::trainer::{train, Scenario, TrainingConfig};

#[derive(Parser)]
#[command(name = "pnn", version, about = "Train and benchmark plasticity neural networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Config file (flat key = value, schema_version = 1).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Run the update signs exactly as printed (weight ascent, repulsion from the best ranges).
    #[arg(long)]
    literal_signs: bool,
    /// Override the number of iterations.
    #[arg(long)]
    iterations: Option<usize>,
}

#[derive(Args, Clone)]
struct Pool {
    /// Seeds per configuration.
    #[arg(long, default_value_t = 5)]
    repeats: usize,
    /// Worker threads (0 = one per core).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Train a single configuration.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        scenario: Option<String>,
    },
    /// Run a named experiment suite: fig2-4, fig5, fig6-11, tables, simple-pnn.
    Suite {
        name: String,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        pool: Pool,
    },
    /// Grid over l_min and k_max.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        pool: Pool,
        #[arg(long, default_value = "ORPNN-MF(P)-PF")]
        scenario: String,
        #[arg(long, value_delimiter = ',', default_values_t = vec![2usize, 3, 4, 5])]
        l_min: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = vec![7usize, 8, 9])]
        k_max: Vec<usize>,
    },
    /// Finite-difference and brute-force oracle checks.
    Check {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the series and the supervised window as CSV.
    Datagen {
        #[command(flatten)]
        common: Common,
    },
}

fn load_config(common: &Common, scenario: Option<&str>) -> Result<(TrainingConfig, Option<Scenario>)> {
    let file = match &common.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile {
            schema_version: pnn::config::SCHEMA_VERSION,
            ..ConfigFile::default()
        },
    };
    let mut config = file.apply(TrainingConfig::default())?;
    let mut chosen = file.scenario()?;
    if let Some(name) = scenario {
        let s: Scenario = name.parse()?;
        config = s.configure(config);
        chosen = Some(s);
    }
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(j_max) = common.iterations {
        config = config.with_iterations(j_max);
    }
    if common.literal_signs {
        config.literal_signs = true;
    }
    config.validate()?;
    Ok((config, chosen))
}

fn apply_iterations(suite: &mut ExperimentSuite, iterations: Option<usize>) {
    if let Some(j_max) = iterations {
        for run in &mut suite.runs {
            run.config = run.config.clone().with_iterations(j_max);
        }
    }
}

fn print_summary(rows: &[suite::SummaryRow]) {
    println!("{:<28} {:>5} {:>8} {:>10} {:>10} {:>10}", "run", "seeds", "diverged", "corr_med", "corr_min", "corr_max");
    let f = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.4}"));
    for r in rows {
        println!(
            "{:<28} {:>5} {:>8} {:>10} {:>10} {:>10}{}",
            r.label,
            r.runs,
            r.diverged,
            f(r.corr_median),
            f(r.corr_min),
            f(r.corr_max),
            if r.pinned { "  (constant ranges)" } else { "" }
        );
    }
}

fn run_suite(suite: &ExperimentSuite, out: &Path, jobs: usize, command: &[String]) -> Result<()> {
    let start = Instant::now();
    let outcomes = suite::execute(suite, jobs)?;
    let dir = out.join(&suite.name);
    let rows = suite::write_suite(&dir, suite, &outcomes);
    output::write_meta(&dir, command, start.elapsed().as_secs_f64())?;
    let rows = rows?;
    print_summary(&rows);
    println!("wrote {}", dir.display());
    Ok(())
}

fn dispatch(cli: Cli, command: &[String]) -> Result<()> {
    match cli.command {
        Command::Run { common, scenario } => {
            let start = Instant::now();
            let (config, scenario) = load_config(&common, scenario.as_deref())?;
            let data = config.dataset()?;
            let report = train(&config, &data)?;
            output::write_run(&common.out, &report, scenario)?;
            output::write_meta(&common.out, command, start.elapsed().as_secs_f64())?;
            let corr = report.corr_final.map_or("undefined".to_string(), |c| format!("{c:.4}"));
            println!(
                "final mse {:.6e}  corr {corr}  reverted {}  activity {}",
                report.final_loss(),
                report.reverted_count,
                report.activity
            );
            for (m, std) in report.range_std.iter().enumerate() {
                println!("V.{} ranges {:?} std {std:.4}", m + 1, report.final_n1[m]);
            }
            println!("wrote {}", common.out.display());
            Ok(())
        }
        Command::Suite { name, common, pool } => {
            let (base, _) = load_config(&common, None)?;
            let mut suite = suite::named_suite(&name, &base, pool.repeats)?;
            apply_iterations(&mut suite, common.iterations);
            run_suite(&suite, &common.out, pool.jobs, command)
        }
        Command::Sweep { common, pool, scenario, l_min, k_max } => {
            let (base, _) = load_config(&common, None)?;
            let spec = SweepSpec {
                l_min_values: l_min,
                k_max_values: k_max,
                scenarios: vec![scenario.parse()?],
            };
            let base = match common.config {
                Some(_) => base,
                None => SuiteSetting::SWEEP.apply(&base),
            };
            let mut suite = ExperimentSuite {
                name: "sweep".into(),
                runs: spec.runs(&base)?,
                repeats: pool.repeats,
            };
            apply_iterations(&mut suite, common.iterations);
            run_suite(&suite, &common.out, pool.jobs, command)
        }
        Command::Check { seed, out } => {
            let summary = check::run_checks(seed)?;
            println!(
                "chain term: {} coordinates, max relative error {:.3e}",
                summary.chain_term.samples, summary.chain_term.max_rel_err
            );
            println!(
                "boundary gain: sign agreement {}/{} ({:.1}%)",
                summary.boundary_sign.agree,
                summary.boundary_sign.total,
                100.0 * summary.boundary_sign.rate()
            );
            println!(
                "layout search: {}/{} trained layouts within 20% of optimum",
                summary.layout_near_optimal.agree, summary.layout_near_optimal.total
            );
            if let Some(dir) = out {
                output::create_dir(&dir)?;
                output::write_json(&dir.join("check.json"), &summary)?;
            }
            if summary.passed() {
                println!("all checks passed");
                Ok(())
            } else {
                Err(HarnessError::Config("oracle checks failed".into()))
            }
        }
        Command::Datagen { common } => {
            let (config, _) = load_config(&common, None)?;
            output::create_dir(&common.out)?;
            let y = generate_signal(&config.signal)?;
            output::write_signal(&common.out.join("signal.csv"), &y)?;
            output::write_dataset(&common.out.join("dataset.csv"), &config.dataset()?)?;
            println!("wrote {}", common.out.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let command: Vec<String> = std::env::args().collect();
    let cli = Cli::parse();
    match dispatch(cli, &command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
