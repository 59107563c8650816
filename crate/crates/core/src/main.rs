use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dyntarget::cli::commands::default_out;
use dyntarget::cli::{cmd_generate, cmd_oracle, cmd_run, RunConfig};
use dyntarget::utility::UtilityKind;
use dyntarget::{Error, Result};

#[derive(Parser)]
#[command(
    name = "dyntarget",
    version,
    about = "Dynamic targeting flyover experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write scenario grids and a manifest.
    Generate(Shared),
    /// Run the configured planners and write results.csv and aggregate.csv.
    Run(Shared),
    /// Compare planners against the exhaustive optimum on tiny instances.
    Oracle {
        #[command(flatten)]
        shared: Shared,
        /// Family for the built-in tiny preset when no config is given.
        #[arg(long, default_value = "CA")]
        family: String,
    },
}

#[derive(Args)]
struct Shared {
    /// JSON run config; keys not given fall back to the family preset.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; defaults to out/<command>.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; 0 uses one per core.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Base seed, replacing any seeds in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of scenarios, replacing the config value.
    #[arg(long)]
    scenarios: Option<usize>,
}

impl Shared {
    fn config(
        &self,
        preset: fn(UtilityKind) -> RunConfig,
        family: Option<&str>,
    ) -> Result<RunConfig> {
        let mut cfg = match (&self.config, family) {
            (Some(path), _) => RunConfig::load_on(path, preset)?,
            (None, Some(f)) => RunConfig::from_json_on(&format!(r#"{{"family": "{f}"}}"#), preset)?,
            (None, None) => return Err(Error::Config("--config is required".into())),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
            cfg.seeds = None;
        }
        if let Some(n) = self.scenarios {
            cfg.n_scenarios = n;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn out(&self, command: &str) -> PathBuf {
        self.out.clone().unwrap_or_else(|| default_out(command))
    }
}

fn with_pool<T>(jobs: usize, f: impl FnOnce() -> Result<T> + Send) -> Result<T>
where
    T: Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(f)
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(a) => {
            let cfg = a.config(RunConfig::preset, None)?;
            let out = a.out("generate");
            let m = with_pool(a.jobs, || cmd_generate(&cfg, &out))?;
            println!(
                "{} scenarios written to {}",
                m.scenarios.len(),
                out.display()
            );
        }
        Command::Run(a) => {
            let cfg = a.config(RunConfig::preset, None)?;
            let out = a.out("run");
            let outcome = with_pool(a.jobs, || cmd_run(&cfg, &out))?;
            println!(
                "{:<6} {:>9} {:>14} {:>8}",
                "plan", "scenarios", "utility", "% UB"
            );
            for r in &outcome.aggregate {
                println!(
                    "{:<6} {:>9} {:>14.1} {:>8.2}",
                    r.planner, r.scenarios, r.total_utility, r.percent_ub
                );
            }
            let skipped = outcome.rows.iter().filter(|r| r.skipped()).count();
            if skipped > 0 {
                println!("{skipped} incompatible pairs skipped");
            }
            println!("results in {}", out.display());
        }
        Command::Oracle { shared, family } => {
            let cfg = shared.config(RunConfig::oracle_preset, Some(&family))?;
            let out = shared.out("oracle");
            let rows = with_pool(shared.jobs, || cmd_oracle(&cfg, Some(Path::new(&out))))?;
            let worst = rows.iter().map(|r| r.pruned_gap).fold(0.0, f64::max);
            println!(
                "{} instances, 0 violations, largest pruned-beam gap {worst}",
                rows.len()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
