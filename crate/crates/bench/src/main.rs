use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use zopt::schedules::validate_schedules;
use zopt_bench::experiment::write_scan;
use zopt_bench::{landscape_scan, run_experiment, run_tuneups, BenchError, ExperimentConfig};

/// Derivative-free optimizer benchmarks.
#[derive(Parser)]
#[command(name = "zopt", disable_version_flag = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `out` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Base seed; overrides `optimizer.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of repeats; overrides `repeats`.
    #[arg(long)]
    repeats: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run every configured algorithm for the configured number of repeats.
    Run(Common),
    /// Evaluate the exact loss on a grid over two active dimensions.
    Scan(Common),
    /// Two-stage pulse tune-up followed by interleaved RB.
    Tuneup(Common),
    /// Check the schedules against the convergence conditions.
    Validate {
        #[arg(long)]
        config: PathBuf,
        /// Exit with status 1 when any condition fails.
        #[arg(long)]
        strict: bool,
    },
    /// Print the version.
    Version,
}

fn load(c: &Common) -> Result<(ExperimentConfig, PathBuf), BenchError> {
    let mut cfg = ExperimentConfig::load(&c.config)?;
    if let Some(s) = c.seed {
        cfg.optimizer.seed = s;
    }
    if let Some(r) = c.repeats {
        cfg.repeats = r;
    }
    cfg.check()?;
    let out = c.out.clone().or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("results"));
    Ok((cfg, out))
}

fn execute(cmd: Command) -> Result<(), BenchError> {
    match cmd {
        Command::Run(c) => {
            let (cfg, out) = load(&c)?;
            let report = run_experiment(&cfg, &out)?;
            for v in &report.variants {
                let last = v.summary.last();
                println!(
                    "{:<14} runs {}/{}  final n_evals {}  loss {:.6} ± {:.6}",
                    v.label,
                    v.completed().count(),
                    v.runs.len(),
                    last.map_or(0, |l| l.n_evals),
                    last.map_or(f64::NAN, |l| l.loss_mean),
                    last.map_or(f64::NAN, |l| l.loss_std),
                );
            }
            println!("wrote {}", report.dir.display());
            if report.variants.iter().any(|v| v.completed().count() == 0) {
                return Err(BenchError::Runtime("every run of at least one variant failed".into()));
            }
            Ok(())
        }
        Command::Scan(c) => {
            let (cfg, out) = load(&c)?;
            let scan = landscape_scan(&cfg)?;
            let path = write_scan(&cfg, &scan, &out)?;
            println!("wrote {}", path.display());
            Ok(())
        }
        Command::Tuneup(c) => {
            let (cfg, out) = load(&c)?;
            for (r, rep) in run_tuneups(&cfg, &out)?.iter().enumerate() {
                if let Some(rough) = &rep.rough {
                    println!("rep {r} rough: best L = {:.6} at iteration {}", rough.best_loss, rough.best_iteration);
                }
                let f = &rep.final_rb;
                println!(
                    "rep {r} fine: best L_RB = {:.5} at iteration {}; interleaved F = {:.5} ± {:.5}, direct F = {:.5}{}",
                    rep.fine.best_loss,
                    rep.fine.best_iteration,
                    f.interleaved_fidelity,
                    f.interleaved_fidelity_se,
                    f.direct_fidelity,
                    if f.suspicious { " (interleaved decay exceeds reference)" } else { "" },
                );
            }
            println!("wrote {}", out.join(&cfg.name).display());
            Ok(())
        }
        Command::Validate { config, strict } => {
            let cfg = ExperimentConfig::load(&config)?;
            let mut sets = vec![("schedules".to_string(), cfg.schedules)];
            for r in cfg.resolved_runs()? {
                if r.run.schedules != cfg.schedules {
                    sets.push((r.label, r.run.schedules));
                }
            }
            if let Some(t) = &cfg.tuneup {
                sets.push(("tuneup.rough".into(), cfg.resolve(&t.rough)?.run.schedules));
                sets.push(("tuneup.fine".into(), cfg.resolve(&t.fine)?.run.schedules));
            }
            let mut all = true;
            for (name, s) in sets {
                let report = validate_schedules(&s);
                all &= report.all_passed();
                println!("[{name}]\n{report}");
            }
            if strict && !all {
                return Err(BenchError::Config("schedule conditions not satisfied".into()));
            }
            Ok(())
        }
        Command::Version => {
            println!("zopt {}", env!("CARGO_PKG_VERSION"));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
