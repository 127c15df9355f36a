use clap::{Parser, Subcommand, ValueEnum};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use unilcd::costs::{LatencyProfile, PayloadMode};
use unilcd::harness::{
    cmd_collect, cmd_eval, cmd_report, cmd_train_il, cmd_train_rl, Density, EvalRequest, Manifest, Method,
    RouterPick, RouterVariant, RunConfig, DATASET_FILE,
};
use unilcd::reward::RewardKind;

#[derive(Parser, Debug)]
#[command(name = "unilcd", version, about = "Local/cloud routing testbed for crowd navigation")]
struct Cli {
    /// JSON run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configuration seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Record expert demonstrations.
    Collect {
        /// low, medium, high or crowd.
        #[arg(long)]
        density: Option<Density>,
        #[arg(long)]
        episodes: Option<usize>,
    },
    /// Train the cloud policy with its trunk, then the local head.
    TrainIl {
        /// Dataset file or a `collect` output directory.
        #[arg(long)]
        dataset: PathBuf,
    },
    /// Train the routing policy.
    TrainRl {
        /// `train-il` output directory.
        #[arg(long)]
        il: PathBuf,
        /// Route on the embedding alone.
        #[arg(long)]
        no_history: bool,
        #[arg(long, value_enum, default_value_t = RewardArg::Multiplicative)]
        reward: RewardArg,
    },
    /// Evaluate one method over the configured routes and episodes.
    Eval {
        /// unilcd, unilcd-no-history, local-only, cloud-only, random:<p> or additive.
        #[arg(long)]
        method: Method,
        /// Overrides eval.density.
        #[arg(long)]
        density: Option<Density>,
        /// nominal or table-consistent.
        #[arg(long)]
        profile: Option<LatencyProfile>,
        /// raw or embedding.
        #[arg(long)]
        payload: Option<PayloadMode>,
        /// `train-il` output directory; defaults to models.il_checkpoints.
        #[arg(long)]
        il: Option<PathBuf>,
        /// `train-rl` output directory.
        #[arg(long)]
        router: Option<PathBuf>,
        /// Use the final router weights instead of the best checkpoint.
        #[arg(long)]
        final_router: bool,
        /// Skip writing per-tick traces.
        #[arg(long)]
        no_traces: bool,
    },
    /// Merge report rows and training curves from several output directories.
    Report {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum RewardArg {
    Multiplicative,
    Additive,
}

fn load_config(cli: &Cli) -> unilcd::Result<RunConfig> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    config.validate()?;
    Ok(config)
}

fn dataset_path(p: &Path) -> PathBuf {
    if p.is_dir() {
        p.join(DATASET_FILE)
    } else {
        p.to_path_buf()
    }
}

fn run(cli: &Cli) -> unilcd::Result<Manifest> {
    let out = &cli.out;
    if let Command::Report { inputs } = &cli.command {
        return cmd_report(inputs, out);
    }
    let config = load_config(cli)?;
    match &cli.command {
        Command::Collect { density, episodes } => cmd_collect(
            &config,
            density.unwrap_or(config.collect.density),
            episodes.unwrap_or(config.collect.episodes),
            out,
        ),
        Command::TrainIl { dataset } => cmd_train_il(&config, &dataset_path(dataset), out),
        Command::TrainRl { il, no_history, reward } => {
            let variant = RouterVariant {
                history_len: (!no_history).then_some(config.models.history_len),
                reward: match reward {
                    RewardArg::Multiplicative => RewardKind::Multiplicative,
                    RewardArg::Additive => RewardKind::Additive,
                },
            };
            cmd_train_rl(&config, il, variant, out)
        }
        Command::Eval { method, density, profile, payload, il, router, final_router, no_traces } => {
            let request = EvalRequest {
                method: *method,
                density: *density,
                profile: *profile,
                payload: *payload,
                il_dir: il.clone(),
                router_dir: router.clone(),
                router_pick: if *final_router { RouterPick::Final } else { RouterPick::Best },
                traces: !no_traces,
            };
            cmd_eval(&config, &request, out)
        }
        Command::Report { .. } => unreachable!(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(manifest) => {
            println!(
                "ok command={} out={} artifacts={}",
                manifest.command,
                cli.out.display(),
                manifest.artifacts.len()
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            let message = e.to_string().replace('\n', " ");
            eprintln!("error kind={} message={:?}", e.kind(), message);
            ExitCode::from(2)
        }
    }
}
