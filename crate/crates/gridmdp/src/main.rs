use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use gridmdp::checkpoint::{check_policy_grid, load_policy};
use gridmdp::defaults::{default_scenario, generated_scenario, HELD_OUT_SEEDS};
use gridmdp::grid_file::{default_grid, read_grid};
use gridmdp::report::{format_leaderboard, leaderboard_from, load_reports};
use gridmdp::runner::{run_scenario, AgentSpec};
use gridmdp::scenario_dir::{load_scenario, save_scenario};
use gridmdp::service::{serve, AppState, DATA_DIR_VAR};
use gridmdp::sweep::{sweep, SweepParam};
use gridmdp::train::{train_to_dir, TrainConfig};
use gridmdp_core::chronics::{generate_chronics, GenConfig};
use gridmdp_core::env::{EnvConfig, Scenario};

#[derive(Parser)]
#[command(name = "gridmdp", version, about = "Power grid operation environment, agents and scoring")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a scenario directory.
    GenerateChronics {
        /// Grid file; the bundled grid when omitted.
        #[arg(long)]
        grid: Option<PathBuf>,
        #[arg(long, default_value_t = 7)]
        days: u32,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Generator settings as JSON; `--days` overrides its `days`.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one agent through one scenario and score it.
    Run {
        /// do-nothing, expert, ppo:DIR or mixture:DIR
        #[arg(long)]
        agent: AgentSpec,
        /// Scenario directory; `$GRIDMDP_DATA_DIR/default` or the built-in
        /// week when omitted.
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// Environment settings as JSON.
        #[arg(long)]
        env: Option<PathBuf>,
        /// Where to write the JSON report.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Train a policy and write an agent directory.
    TrainPpo {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score the expert agent over a range of one rule parameter.
    Sweep {
        #[arg(long)]
        param: SweepParam,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        /// Agent directory whose policy is evaluated; rules only when omitted.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Directory of scenario directories; generated held-out weeks when
        /// omitted.
        #[arg(long)]
        scenarios: Option<PathBuf>,
        /// Length of generated scenarios.
        #[arg(long, default_value_t = 7)]
        days: u32,
        #[arg(long)]
        env: Option<PathBuf>,
        /// Also write the table as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Print the leaderboard of a directory of reports.
    Score {
        #[arg(long)]
        reports: PathBuf,
    },
    /// Serve live episodes over HTTP.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: std::net::IpAddr,
    },
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| path.display().to_string())?;
    serde_json::from_str(&text).with_context(|| path.display().to_string())
}

fn env_config(path: Option<&Path>) -> anyhow::Result<EnvConfig> {
    let cfg: EnvConfig = match path {
        Some(p) => read_json(p)?,
        None => EnvConfig::default(),
    };
    cfg.validate()?;
    Ok(cfg)
}

fn default_run_scenario() -> anyhow::Result<Scenario> {
    if let Some(dir) = std::env::var_os(DATA_DIR_VAR) {
        let p = Path::new(&dir).join("default");
        if p.is_dir() {
            return Ok(load_scenario(&p)?);
        }
    }
    Ok(default_scenario()?)
}

fn scenario_subdirs(dir: &Path) -> anyhow::Result<Vec<Scenario>> {
    let mut dirs: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| dir.display().to_string())?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    dirs.sort();
    if dirs.is_empty() {
        bail!("{}: no scenario directories", dir.display());
    }
    dirs.iter().map(|d| load_scenario(d).map_err(Into::into)).collect()
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::GenerateChronics { grid, days, seed, config, out } => {
            let grid = match grid {
                Some(p) => read_grid(&p)?,
                None => default_grid(),
            };
            let mut cfg: GenConfig = match config {
                Some(p) => read_json(&p)?,
                None => GenConfig::default(),
            };
            cfg.days = days;
            let chronics = generate_chronics(&grid, &cfg, seed)?;
            save_scenario(&out, &grid, &chronics)?;
            println!("wrote {} steps to {}", chronics.n_steps, out.display());
        }
        Command::Run { agent, scenario, env, report } => {
            let scenario = match scenario {
                Some(p) => load_scenario(&p)?,
                None => default_run_scenario()?,
            };
            let env = env_config(env.as_deref())?;
            let r = run_scenario(&agent, &scenario, &env)?;
            println!(
                "{} on {}: survived {}/{}, score {:.4}, cost {:.2}",
                r.agent, r.scenario_id, r.survived, r.horizon, r.score, r.costs.total
            );
            if let Some(p) = report {
                r.save(&p)?;
            }
        }
        Command::TrainPpo { config, out } => {
            let cfg = match config {
                Some(p) => TrainConfig::load(&p)?,
                None => TrainConfig::default(),
            };
            let (_, log) = train_to_dir(&cfg, &out)?;
            println!(
                "{} environment steps, {} episodes, {} updates; agent written to {}",
                log.env_steps,
                log.episodes,
                log.updates.len(),
                out.display()
            );
        }
        Command::Sweep { param, values, checkpoint, scenarios, days, env, json } => {
            let env = env_config(env.as_deref())?;
            let policy = checkpoint.map(|d| load_policy(&d.join("policy.json"))).transpose()?;
            let scenarios = match scenarios {
                Some(d) => scenario_subdirs(&d)?,
                None => {
                    let gen = GenConfig { days, ..GenConfig::default() };
                    HELD_OUT_SEEDS.map(|s| generated_scenario(&gen, s)).collect::<Result<_, _>>()?
                }
            };
            if let (Some(p), Some(s)) = (&policy, scenarios.first()) {
                check_policy_grid(p, &s.grid).map_err(anyhow::Error::msg)?;
            }
            let table = sweep(param, &values, policy.as_ref(), &scenarios, &env)?;
            print!("{table}");
            if let Some(p) = json {
                std::fs::write(&p, serde_json::to_string_pretty(&table)?).with_context(|| p.display().to_string())?;
            }
        }
        Command::Score { reports } => {
            let reports = load_reports(&reports)?;
            print!("{}", format_leaderboard(&leaderboard_from(&reports)));
        }
        Command::Serve { port, host } => {
            let addr = SocketAddr::new(host, port);
            let rt = tokio::runtime::Runtime::new()?;
            eprintln!("listening on http://{addr}");
            rt.block_on(serve(addr, AppState::from_env()))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
