use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use minsubfi::commands::{self, GenDemosArgs, Subject};
use minsubfi::config::{parse_override, parse_seeds, RunConfig};
use minsubfi::CliError;
use minsubfi_core::env::EnvId;
use minsubfi_core::eval::Keep;
use serde_json::Value;

#[derive(Parser, Debug)]
#[command(name = "minsubfi", version, about = "Subdominance-minimizing imitation learning experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Roll out the scripted demonstrator and write a `.demos.jsonl` file.
    GenDemos(GenDemosCli),
    /// Train a policy; writes `policy.policy.json`, `train_log.csv` and a manifest.
    Train(RunArgs),
    /// Satisficing rates, relative ratios and returns per seed.
    Eval(EvalCli),
    /// Support-vector generalization bound of a policy's rollouts.
    Bound(EvalCli),
    /// Matched-seed online training from BC and from offline pretraining.
    AblateInit(RunArgs),
    /// Train on the best or worst fractions of the demonstrations.
    QualitySweep(QualityCli),
}

#[derive(Args, Debug)]
struct GenDemosCli {
    #[arg(long, value_parser = parse_env)]
    env: EnvId,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    n: u64,
    #[arg(long, default_value_t = 0.3)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    tasks: u32,
    #[arg(long)]
    out: PathBuf,
    /// Write the summary row here instead of standard output.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Flat JSON config (or a run manifest); flags below override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    env: Option<String>,
    #[arg(long)]
    demos: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated master seeds.
    #[arg(long, value_parser = parse_seed_list)]
    seeds: Option<SeedList>,
    #[arg(long)]
    variant: Option<String>,
    #[arg(long)]
    init: Option<String>,
    #[arg(long)]
    updates: Option<usize>,
    #[arg(long)]
    n_rollouts: Option<usize>,
    #[arg(long)]
    features: Option<String>,
    #[arg(long)]
    featnet: Option<PathBuf>,
    /// Any other config key, as `key=value` (value parsed as JSON when possible).
    #[arg(long = "set", value_parser = parse_override)]
    set: Vec<(String, Value)>,
}

#[derive(Args, Debug)]
struct EvalCli {
    #[command(flatten)]
    run: RunArgs,
    /// Policy file to evaluate.
    #[arg(long, conflicts_with = "controller_noise")]
    policy: Option<PathBuf>,
    /// Evaluate the scripted demonstrator at this noise level instead of a policy.
    #[arg(long)]
    controller_noise: Option<f64>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum KeepArg {
    Best,
    Worst,
    Both,
}

#[derive(Args, Debug)]
struct QualityCli {
    #[command(flatten)]
    run: RunArgs,
    #[arg(long, value_enum, default_value_t = KeepArg::Both)]
    keep: KeepArg,
}

#[derive(Clone, Debug)]
struct SeedList(Vec<u64>);

fn parse_seed_list(s: &str) -> Result<SeedList, String> {
    parse_seeds(s).map(SeedList)
}

fn parse_env(s: &str) -> Result<EnvId, String> {
    s.parse().map_err(|e: minsubfi_core::Error| e.to_string())
}

impl RunArgs {
    fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut o: Vec<(String, Value)> = Vec::new();
        let s = |v: &str| Value::String(v.to_string());
        let p = |v: &PathBuf| Value::String(v.display().to_string());
        if let Some(v) = &self.env {
            o.push(("env".into(), s(v)));
        }
        if let Some(v) = &self.demos {
            o.push(("demos".into(), p(v)));
        }
        if let Some(v) = &self.out {
            o.push(("out".into(), p(v)));
        }
        if let Some(v) = &self.seeds {
            o.push(("seeds".into(), Value::from(v.0.clone())));
        }
        if let Some(v) = &self.variant {
            o.push(("variant".into(), s(v)));
        }
        if let Some(v) = &self.init {
            o.push(("init".into(), s(v)));
        }
        if let Some(v) = self.updates {
            o.push(("updates".into(), Value::from(v)));
        }
        if let Some(v) = self.n_rollouts {
            o.push(("n_rollouts".into(), Value::from(v)));
        }
        if let Some(v) = &self.features {
            o.push(("features".into(), s(v)));
        }
        if let Some(v) = &self.featnet {
            o.push(("featnet".into(), p(v)));
        }
        o.extend(self.set.iter().cloned());
        RunConfig::resolve(self.config.as_deref(), &o)
    }
}

impl EvalCli {
    fn subject(&self) -> Result<Subject, CliError> {
        match (&self.policy, self.controller_noise) {
            (Some(p), None) => Ok(Subject::Policy(p.clone())),
            (None, Some(n)) => Ok(Subject::Demonstrator(n)),
            _ => Err(CliError::Usage("give either --policy or --controller-noise".into())),
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::GenDemos(a) => {
            let args = GenDemosArgs {
                env: a.env,
                n: a.n as usize,
                noise: a.noise,
                seed: a.seed,
                tasks: a.tasks,
                out: a.out,
                summary: a.summary,
            };
            commands::cmd_gen_demos(&args).map(|_| ())
        }
        Command::Train(a) => commands::cmd_train(&a.resolve()?).map(|_| ()),
        Command::Eval(a) => commands::cmd_eval(&a.run.resolve()?, &a.subject()?).map(|_| ()),
        Command::Bound(a) => commands::cmd_bound(&a.run.resolve()?, &a.subject()?).map(|_| ()),
        Command::AblateInit(a) => commands::cmd_ablate_init(&a.resolve()?).map(|_| ()),
        Command::QualitySweep(a) => {
            let keeps = match a.keep {
                KeepArg::Best => vec![Keep::Best],
                KeepArg::Worst => vec![Keep::Worst],
                KeepArg::Both => vec![Keep::Best, Keep::Worst],
            };
            commands::cmd_quality_sweep(&a.run.resolve()?, &keeps).map(|_| ())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
