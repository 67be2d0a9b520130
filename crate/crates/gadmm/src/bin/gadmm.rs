use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gadmm::config::ExperimentConfig;
use gadmm::experiment::{run_cdf, run_compare, run_experiment, CdfRow, Summary};
use gadmm::trace::TraceWriter;
use serde::Serialize;

/// Group ADMM experiment runner.
///
/// Exit status: 0 when every run reached its target, 2 when a run hit
/// max_iters, 1 on any error.
#[derive(Parser)]
#[command(name = "gadmm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output file (trace for `run`, table for `cdf` and `compare`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// No progress text on stderr.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Single run; writes a per-iteration trace.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Total communication cost over many random placements.
    Cdf {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 100)]
        trials: usize,
    },
    /// Several algorithms on the same data.
    Compare {
        #[arg(long = "config", required = true, num_args = 1..)]
        configs: Vec<PathBuf>,
    },
}

type Failure = Box<dyn std::error::Error>;

fn load(path: &PathBuf, seed: Option<u64>) -> Result<ExperimentConfig, Failure> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn print_json(v: &impl Serialize) -> Result<(), Failure> {
    println!("{}", serde_json::to_string(v)?);
    Ok(())
}

fn run(cli: &Cli, config: &PathBuf) -> Result<bool, Failure> {
    let cfg = load(config, cli.seed)?;
    let out = cli.out.clone().or_else(|| cfg.output.clone());
    let summary = match &out {
        Some(path) => {
            let mut w = TraceWriter::create(path)?;
            let s = run_experiment(&cfg, &mut w)?;
            w.finish()?;
            s
        }
        None => run_experiment(&cfg, &mut gadmm::core::metrics::NullSink)?,
    };
    if !cli.quiet {
        eprintln!(
            "{}: {} after {} iterations, objective error {:.3e}, TC {:.6e}",
            summary.algorithm,
            if summary.converged { "converged" } else { "not converged" },
            summary.iterations,
            summary.final_objective_error,
            summary.total_tc
        );
    }
    print_json(&summary)?;
    Ok(summary.converged)
}

#[derive(Serialize)]
struct CdfSummary<'a> {
    algorithm: &'static str,
    trials: usize,
    converged_trials: usize,
    tc_quantiles: [(f64, f64); 3],
    rows: &'a [CdfRow],
}

/// Lower empirical quantile.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let i = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len()) - 1;
    sorted[i]
}

fn cdf(cli: &Cli, config: &PathBuf, trials: usize) -> Result<bool, Failure> {
    let cfg = load(config, cli.seed)?;
    let rows = run_cdf(&cfg, trials)?;
    if let Some(path) = &cli.out {
        let mut w = csv::Writer::from_path(path)?;
        for r in &rows {
            w.serialize(r)?;
        }
        w.flush()?;
    }
    let mut tcs: Vec<f64> = rows.iter().map(|r| r.total_tc).collect();
    tcs.sort_by(f64::total_cmp);
    let converged = rows.iter().filter(|r| r.converged).count();
    let summary = CdfSummary {
        algorithm: cfg.algorithm.name(),
        trials,
        converged_trials: converged,
        tc_quantiles: [0.25, 0.5, 0.75].map(|q| (q, quantile(&tcs, q))),
        rows: &rows,
    };
    if !cli.quiet {
        for r in rows.iter().filter(|r| !r.converged) {
            eprintln!("trial {} did not reach the target in {} iterations", r.trial, r.iterations);
        }
        let [a, b, c] = summary.tc_quantiles;
        eprintln!("{}: {converged}/{trials} converged; TC quartiles {:.4e} {:.4e} {:.4e}", summary.algorithm, a.1, b.1, c.1);
    }
    print_json(&summary)?;
    Ok(converged == trials)
}

#[derive(Serialize)]
struct CompareRow {
    #[serde(flatten)]
    summary: Summary,
    tc_per_iteration: f64,
}

fn compare(cli: &Cli, paths: &[PathBuf]) -> Result<bool, Failure> {
    let cfgs = paths.iter().map(|p| load(p, cli.seed)).collect::<Result<Vec<_>, _>>()?;
    let rows: Vec<CompareRow> = run_compare(&cfgs)?
        .into_iter()
        .map(|s| CompareRow { tc_per_iteration: s.total_tc / s.iterations as f64, summary: s })
        .collect();
    if let Some(path) = &cli.out {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["algorithm", "converged", "iterations", "iterations_to_target", "total_tc", "tc_per_iteration", "f_star"])?;
        for r in &rows {
            let s = &r.summary;
            w.write_record([
                s.algorithm.to_string(),
                s.converged.to_string(),
                s.iterations.to_string(),
                s.iterations_to_target.map_or(String::new(), |i| i.to_string()),
                s.total_tc.to_string(),
                r.tc_per_iteration.to_string(),
                s.f_star.to_string(),
            ])?;
        }
        w.flush()?;
    }
    if !cli.quiet {
        eprintln!("{:<10} {:>9} {:>10} {:>14} {:>12}", "algorithm", "converged", "iterations", "total_tc", "tc/iter");
        for r in &rows {
            let s = &r.summary;
            eprintln!("{:<10} {:>9} {:>10} {:>14.6e} {:>12.4e}", s.algorithm, s.converged, s.iterations, s.total_tc, r.tc_per_iteration);
        }
    }
    print_json(&serde_json::json!({ "rows": rows }))?;
    Ok(rows.iter().all(|r| r.summary.converged))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    let result = match &cli.command {
        Command::Run { config } => run(&cli, config),
        Command::Cdf { config, trials } => cdf(&cli, config, *trials),
        Command::Compare { configs } => compare(&cli, configs),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
