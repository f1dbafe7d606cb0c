use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use active_forecast::bench::{
    cmd_run, cmd_sweep, cmd_train_experts, cmd_verify_bounds, ExperimentConfig,
};

/// Active forecasting with expert advice: train the expert pool, run the
/// forecasters over permutations of the test split, sweep the query
/// threshold, and check the regret bounds of the results.
#[derive(Parser)]
#[command(name = "active-forecast", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train the five experts on the train split and write the model file.
    TrainExperts(ConfigArgs),
    /// Run each policy on every permutation and write results.csv.
    Run(ConfigArgs),
    /// Run the active policies and matched baselines over a delta grid.
    Sweep(ConfigArgs),
    /// Check every run row of a results CSV against its regret bound.
    VerifyBounds {
        /// results.csv or sweep_runs.csv
        csv: PathBuf,
        /// Print only violations and the totals.
        #[arg(long)]
        quiet: bool,
    },
}

/// Flags override values from `--config`.
#[derive(Args)]
struct ConfigArgs {
    /// File of `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Sparse-text dataset, optionally gzipped.
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Model file (default: <out-dir>/model.txt).
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    split_seed: Option<u64>,
    #[arg(long)]
    train_fraction: Option<f64>,
    /// Permutation k uses seed perm_seed + k.
    #[arg(long)]
    perm_seed: Option<u64>,
    #[arg(long)]
    permutations: Option<usize>,
    /// Comma-separated: ewaf, gf, aewaf, rewaf, agf, rgf.
    #[arg(long)]
    policies: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    delta: Option<f64>,
    /// Comma-separated, strictly increasing.
    #[arg(long)]
    deltas: Option<String>,
    /// Learning rate, or `auto` for sqrt(8 ln N / T).
    #[arg(long)]
    eta: Option<String>,
    #[arg(long)]
    pa_c: Option<f64>,
    #[arg(long)]
    alma_alpha: Option<f64>,
    #[arg(long)]
    arow_r: Option<f64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Also write per-round CSVs under <out-dir>/traces.
    #[arg(long)]
    traces: bool,
}

impl ConfigArgs {
    fn resolve(self) -> anyhow::Result<ExperimentConfig> {
        let mut c = ExperimentConfig::default();
        if let Some(path) = &self.config {
            c.apply_file(path)
                .with_context(|| format!("reading config {}", path.display()))?;
        }
        let path = |p: Option<PathBuf>| p.map(|p| p.to_string_lossy().into_owned());
        let pairs: [(&str, Option<String>); 14] = [
            ("dataset", path(self.dataset)),
            ("model", path(self.model)),
            ("split_seed", self.split_seed.map(|v| v.to_string())),
            ("train_fraction", self.train_fraction.map(|v| v.to_string())),
            ("perm_seed", self.perm_seed.map(|v| v.to_string())),
            ("permutations", self.permutations.map(|v| v.to_string())),
            ("policies", self.policies),
            ("delta", self.delta.map(|v| v.to_string())),
            ("deltas", self.deltas),
            ("eta", self.eta),
            ("pa_c", self.pa_c.map(|v| v.to_string())),
            ("alma_alpha", self.alma_alpha.map(|v| v.to_string())),
            ("arow_r", self.arow_r.map(|v| v.to_string())),
            ("out_dir", path(self.out_dir)),
        ];
        for (key, value) in pairs {
            if let Some(v) = value {
                c.set(key, &v)?;
            }
        }
        if self.traces {
            c.traces = true;
        }
        c.validate()?;
        Ok(c)
    }
}

fn pct(v: f64) -> String {
    format!("{:.3}", 100.0 * v)
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    match cli.command {
        Command::TrainExperts(args) => {
            let report = cmd_train_experts(&args.resolve()?)?;
            println!(
                "trained on {} instances, dim {}",
                report.train_size, report.dim
            );
            for (kind, mistakes) in &report.mistakes {
                println!("{kind:<10} mistakes {mistakes}");
            }
            println!("model written to {}", report.model_path.display());
        }
        Command::Run(args) => {
            let report = cmd_run(&args.resolve()?)?;
            println!("eta {}", report.eta);
            println!(
                "{:<6} {:>5} {:>18} {:>18} {:>10}",
                "policy", "runs", "regret %", "query %", "time s"
            );
            for s in &report.summaries {
                println!(
                    "{:<6} {:>5} {:>18} {:>18} {:>10.4}",
                    s.algorithm.to_string(),
                    s.runs,
                    s.regret_rate.to_string(),
                    format!("{} ± {}", pct(s.query_ratio.mean), pct(s.query_ratio.std)),
                    s.wall_time_seconds
                );
            }
            println!("results written to {}", report.csv_path.display());
        }
        Command::Sweep(args) => {
            let report = cmd_sweep(&args.resolve()?)?;
            println!("eta {}", report.eta);
            for p in &report.points {
                for s in &p.summaries {
                    println!(
                        "delta {:<5} {:<6} query % {:>8}  regret % {}",
                        p.delta,
                        s.algorithm.to_string(),
                        pct(s.query_ratio.mean),
                        s.regret_rate
                    );
                }
            }
            println!("sweep written to {}", report.sweep_path.display());
            println!("runs written to {}", report.runs_path.display());
        }
        Command::VerifyBounds { csv, quiet } => {
            let report =
                cmd_verify_bounds(&csv).with_context(|| format!("verifying {}", csv.display()))?;
            for line in &report.lines {
                if !quiet || line.contains("FAIL") {
                    println!("{line}");
                }
            }
            println!(
                "{} checked, {} skipped, {} violations",
                report.checked, report.skipped, report.violations
            );
            return Ok(report.passed());
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
