use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use reward_lab::config::{load_experiment_config, parse_gen_config, seed_from_env};
use reward_lab::gen::{gen_mdp, gen_reward, GenConfig};
use reward_lab::harness::{run_and_write, ExperimentConfig};
use reward_lab::io::{load_mdp, load_reward, save_mdp, save_reward};
use reward_lab::metrics::{starc_distance, DistributionPair, MetricSpec};
use reward_lab::regret::{optimal_pair_regret_seeded, worst_case_regret, RegretMode};
use reward_lab::validation::Suite;

/// Reward-function distances and regret on tabular MDPs.
#[derive(Parser, Debug)]
#[command(name = "reward-lab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a random environment.
    GenEnv {
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 32)]
        states: usize,
        #[arg(long, default_value_t = 4)]
        actions: usize,
        #[arg(long, default_value_t = 0.95)]
        gamma: f64,
        /// Generator settings (`key = value` lines).
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate one random reward for an environment.
    GenRewards {
        #[arg(long)]
        env: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print `spec,value` for each requested metric.
    Distance {
        #[arg(long)]
        env: PathBuf,
        #[arg(long)]
        r1: PathBuf,
        #[arg(long)]
        r2: PathBuf,
        #[arg(long = "metric", required = true)]
        metrics: Vec<MetricSpec>,
    },
    /// Print the regret report for a reward pair.
    Regret {
        #[arg(long)]
        env: PathBuf,
        #[arg(long)]
        r1: PathBuf,
        #[arg(long)]
        r2: PathBuf,
        #[arg(long, default_value = "exact")]
        mode: RegretMode,
        /// Seed for rollout mode.
        #[arg(long)]
        seed: Option<u64>,
        /// Also solve the worst-case regret linear program.
        #[arg(long)]
        worst_case: bool,
    },
    /// Run the correlation experiment.
    Experiment {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        parallelism: Option<usize>,
    },
    /// Run property suites; exits 1 if any check fails.
    Validate {
        #[arg(long)]
        suite: Option<String>,
    },
}

enum Failure {
    Usage(String),
    Validation,
    Runtime(reward_lab::Error),
}

impl From<reward_lab::Error> for Failure {
    fn from(e: reward_lab::Error) -> Self {
        Failure::Runtime(e)
    }
}

fn seed_or_env(seed: Option<u64>) -> Result<u64, Failure> {
    match seed {
        Some(s) => Ok(s),
        None => Ok(seed_from_env()?.unwrap_or(0)),
    }
}

fn gen_config(path: Option<&PathBuf>) -> Result<GenConfig, Failure> {
    match path {
        Some(p) => Ok(parse_gen_config(
            &std::fs::read_to_string(p).map_err(reward_lab::Error::from)?,
        )?),
        None => Ok(GenConfig::default()),
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::GenEnv {
            seed,
            states,
            actions,
            gamma,
            config,
            out,
        } => {
            let config = GenConfig {
                n_states: states,
                n_actions: actions,
                gamma,
                ..gen_config(config.as_ref())?
            };
            config.validate().map_err(|e| Failure::Usage(e.to_string()))?;
            save_mdp(&gen_mdp(&config, seed_or_env(seed)?)?, &out)?;
        }
        Command::GenRewards { env, seed, config, out } => {
            let mdp = load_mdp(&env)?;
            let config = GenConfig {
                n_states: mdp.n_states(),
                n_actions: mdp.n_actions(),
                gamma: mdp.gamma(),
                ..gen_config(config.as_ref())?
            };
            let seed = seed_or_env(seed)?;
            let reward = gen_reward(&config, seed, mdp.n_states(), mdp.n_actions())?;
            save_reward(&reward, Some(seed), &out)?;
        }
        Command::Distance { env, r1, r2, metrics } => {
            let mdp = load_mdp(&env)?;
            let (r1, r2) = (load_reward(&r1)?, load_reward(&r2)?);
            let dists = DistributionPair::uniform(mdp.n_states(), mdp.n_actions());
            for spec in &metrics {
                let d = starc_distance(spec, &r1, &r2, &mdp, &dists)?;
                println!("{spec},{d}");
            }
        }
        Command::Regret {
            env,
            r1,
            r2,
            mode,
            seed,
            worst_case,
        } => {
            let mdp = load_mdp(&env)?;
            let (r1, r2) = (load_reward(&r1)?, load_reward(&r2)?);
            let report = optimal_pair_regret_seeded(&mdp, &r1, &r2, mode, seed_or_env(seed)?)?;
            let mut value = serde_json::to_value(&report).map_err(reward_lab::Error::from)?;
            if worst_case {
                value["worst_case_regret"] = worst_case_regret(&mdp, &r1, &r2)?.into();
            }
            println!(
                "{}",
                serde_json::to_string_pretty(&value).map_err(reward_lab::Error::from)?
            );
        }
        Command::Experiment {
            config,
            out_dir,
            seed,
            parallelism,
        } => {
            let mut cfg = match &config {
                Some(p) => load_experiment_config(p).map_err(|e| match e {
                    reward_lab::Error::Io(_) => Failure::Runtime(e),
                    other => Failure::Usage(other.to_string()),
                })?,
                None => ExperimentConfig {
                    master_seed: seed_or_env(None)?,
                    ..ExperimentConfig::default()
                },
            };
            if let Some(dir) = out_dir {
                cfg.output_dir = dir;
            }
            if let Some(s) = seed {
                cfg.master_seed = s;
            }
            if let Some(p) = parallelism {
                cfg.parallelism = p;
            }
            let summary = run_and_write(&cfg)?;
            println!("metric,correlation,n");
            for row in &summary.rows {
                let c = row.correlation.map(|c| format!("{c:.4}")).unwrap_or_default();
                println!("{},{c},{}", row.spec, row.n_samples);
            }
        }
        Command::Validate { suite } => {
            let suites = match suite {
                Some(name) => vec![Suite::from_name(&name).map_err(|e| Failure::Usage(e.to_string()))?],
                None => Suite::ALL.to_vec(),
            };
            let mut ok = true;
            for suite in suites {
                for result in suite.run()? {
                    println!("[{}] {result}", suite.name());
                    ok &= result.passed;
                }
            }
            if !ok {
                return Err(Failure::Validation);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation) => {
            eprintln!("reward-lab: validation failed");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("reward-lab: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("reward-lab: {e}");
            ExitCode::from(3)
        }
    }
}
