mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use strategize_core::simulation::SamplingMode;
use strategize_core::Algorithm;

use commands::{Output, StackelbergArgs};
use config::{CommandTag, ExperimentConfig, LearnerSettings, OptimizerSpec};
use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "strategize", version, about = "Optimizer strategies against no-regret learners in repeated bimatrix games")]
struct Cli {
    /// Seed for every random draw (games, learners, sampled play).
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Directory for output files. Defaults to the current directory.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Format of the output files.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve for the Stackelberg commitment of a game.
    Stackelberg {
        /// Game JSON file.
        #[arg(required_unless_present = "gen_random", conflicts_with = "gen_random")]
        game: Option<PathBuf>,
        /// Solve a seeded random integer game of this shape instead, e.g. 3x3.
        #[arg(long, value_name = "MxN")]
        gen_random: Option<String>,
        /// Largest absolute payoff of generated games.
        #[arg(long, default_value_t = 2)]
        max_abs: i32,
        /// Cross-check the value against a brute-force grid search.
        #[arg(long)]
        verify: bool,
    },
    /// Play an optimizer against a learner over one or more seeds.
    Simulate(SimulateArgs),
    /// Mean-based audit and regrets of a learner trace CSV.
    Audit {
        trace: PathBuf,
        #[arg(long)]
        gamma: f64,
    },
    /// Search piecewise-constant policies against a mean-based learner.
    ControlSearch {
        game: PathBuf,
        #[arg(long, default_value_t = 2)]
        max_steps: usize,
        /// Cycle ratio grid step is 1/resolution.
        #[arg(long, default_value_t = 10)]
        resolution: usize,
    },
    /// Write a seeded random integer game.
    GenRandom {
        /// Shape, e.g. 3x3.
        #[arg(value_name = "MxN")]
        shape: String,
        #[arg(long, default_value_t = 2)]
        max_abs: i32,
    },
}

#[derive(Debug, clap::Args)]
struct SimulateArgs {
    /// Experiment config JSON. Excludes the per-experiment flags below.
    #[arg(long, conflicts_with_all = ["game", "policy", "exploit", "commitment", "learner", "rounds", "seeds"])]
    config: Option<PathBuf>,
    #[arg(long, required_unless_present = "config")]
    game: Option<PathBuf>,
    /// Policy JSON file to stretch over the horizon.
    #[arg(long, conflicts_with_all = ["exploit", "commitment"])]
    policy: Option<PathBuf>,
    /// Play Top for the first half and Bottom for the second.
    #[arg(long, value_name = "EPSILON", conflicts_with = "commitment")]
    exploit: Option<f64>,
    /// Conservative commitment with this delta (0 for the exact commitment).
    /// This is the default optimizer with delta 0.
    #[arg(long, value_name = "DELTA")]
    commitment: Option<f64>,
    #[arg(long, value_enum, default_value_t = LearnerKind::Mw)]
    learner: LearnerKind,
    /// Inner learner of blum-mansour.
    #[arg(long, value_enum, default_value_t = LearnerKind::Mw)]
    inner: LearnerKind,
    #[arg(long)]
    rate: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    /// Horizon T.
    #[arg(long, short = 'T', required_unless_present = "config")]
    rounds: Option<usize>,
    /// Comma-separated seeds. Defaults to --seed.
    #[arg(long, value_delimiter = ',')]
    seeds: Vec<u64>,
    #[arg(long, value_enum)]
    sampling: Option<Sampling>,
    /// Write one trace CSV per seed.
    #[arg(long)]
    traces: bool,
    #[arg(long)]
    id: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum LearnerKind {
    Mw,
    Ftpl,
    Ftl,
    Exp3,
    BlumMansour,
    Adversarial,
}

impl LearnerKind {
    fn algorithm(self, inner: LearnerKind) -> Result<Algorithm, CliError> {
        Ok(match self {
            LearnerKind::Mw => Algorithm::Mw,
            LearnerKind::Ftpl => Algorithm::Ftpl,
            LearnerKind::Ftl => Algorithm::Ftl,
            LearnerKind::Exp3 => Algorithm::Exp3,
            LearnerKind::Adversarial => Algorithm::AdversarialMeanBased,
            LearnerKind::BlumMansour => {
                if inner == LearnerKind::BlumMansour {
                    return Err(CliError::Argument("blum-mansour cannot nest itself".into()));
                }
                Algorithm::BlumMansour { inner: Box::new(inner.algorithm(LearnerKind::Mw)?) }
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Sampling {
    Expected,
    Sampled,
}

impl SimulateArgs {
    fn into_config(self, seed: u64) -> Result<ExperimentConfig, CliError> {
        if let Some(path) = &self.config {
            let mut config = ExperimentConfig::load(path)?;
            if let Some(s) = self.sampling {
                config.sampling = sampling_mode(s);
            }
            config.traces |= self.traces;
            if self.id.is_some() {
                config.id = self.id;
            }
            return Ok(config);
        }
        let optimizer = match (self.exploit, self.commitment) {
            (Some(epsilon), _) => Some(OptimizerSpec::Exploit { epsilon }),
            (None, Some(delta)) => Some(OptimizerSpec::Commitment { delta }),
            (None, None) => None,
        };
        Ok(ExperimentConfig {
            command: CommandTag::Simulate,
            id: self.id,
            game: self.game.expect("clap requires --game without --config"),
            policy: self.policy,
            optimizer,
            learner: LearnerSettings {
                algorithm: self.learner.algorithm(self.inner)?,
                rate: self.rate,
                gamma: self.gamma,
            },
            rounds: self.rounds.expect("clap requires --rounds without --config"),
            seeds: if self.seeds.is_empty() { vec![seed] } else { self.seeds },
            sampling: self.sampling.map(sampling_mode).unwrap_or_default(),
            traces: self.traces,
            out_dir: None,
        })
    }
}

fn sampling_mode(s: Sampling) -> SamplingMode {
    match s {
        Sampling::Expected => SamplingMode::Expected,
        Sampling::Sampled => SamplingMode::Sampled,
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let out = Output {
        dir: cli.out_dir.clone().unwrap_or_else(|| PathBuf::from(".")),
        format: cli.format,
    };
    match cli.command {
        Command::Stackelberg { game, gen_random, max_abs, verify } => commands::cmd_stackelberg(
            &out,
            StackelbergArgs {
                game: game.as_deref(),
                gen_random: gen_random.as_deref(),
                max_abs,
                verify,
                seed: cli.seed,
            },
        ),
        Command::Simulate(args) => {
            let config = args.into_config(cli.seed)?;
            commands::cmd_simulate(cli.out_dir, cli.format, &config)
        }
        Command::Audit { trace, gamma } => commands::cmd_audit(&out, &trace, gamma),
        Command::ControlSearch { game, max_steps, resolution } => {
            commands::cmd_control_search(&out, &game, max_steps, resolution)
        }
        Command::GenRandom { shape, max_abs } => commands::cmd_gen_random(&out, &shape, max_abs, cli.seed),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
