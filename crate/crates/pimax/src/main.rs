use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{error::ErrorKind, Args, Parser, Subcommand};

use pimax::harness::{self, summarize};
use pimax::{Control, ExperimentConfig, RunLog};
use pimax_core::RateSchedule;

#[derive(Parser)]
#[command(
    name = "pimax",
    version,
    about = "Predictive-information-driven robot chain experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train controllers from scratch (or from --init-policy) and log the run.
    Run(RunArgs),
    /// Replay stored controllers with learning frozen.
    Eval(EvalArgs),
    /// Compose two split controllers into one combined controller and train it.
    Compose(ComposeArgs),
    /// Recompute behavior metrics from a logged run.
    Analyze(AnalyzeArgs),
}

#[derive(Args)]
struct Common {
    /// `key = value` configuration file; explicit flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    steps: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    /// 1, 3 or 5
    #[arg(long, value_parser = chain_length)]
    robots: Option<usize>,
    #[arg(long)]
    control: Option<Control>,
    #[arg(long)]
    bins: Option<usize>,
    /// reciprocal | floor:F | warmup:K
    #[arg(long)]
    rate_schedule: Option<RateSchedule>,
    #[arg(long)]
    init_policy: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    common: Common,
    /// Run directory, `learners` directory or single learner directory.
    #[arg(long)]
    learner: PathBuf,
    #[arg(long)]
    robots: Option<usize>,
    #[arg(long)]
    control: Option<Control>,
}

#[derive(Args)]
struct ComposeArgs {
    #[command(flatten)]
    common: Common,
    /// Learner directory of the left-wheel controller.
    #[arg(long)]
    left: PathBuf,
    /// Learner directory of the right-wheel controller.
    #[arg(long)]
    right: PathBuf,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long)]
    log: PathBuf,
    #[arg(long)]
    analysis_bins: Option<usize>,
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    sliding_window: Option<usize>,
}

fn chain_length(s: &str) -> Result<usize, String> {
    match s.parse() {
        Ok(n @ (1 | 3 | 5)) => Ok(n),
        _ => Err(format!("expected 1, 3 or 5 robots, got `{s}`")),
    }
}

fn load_config(base: ExperimentConfig, file: Option<&Path>) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = base;
    if let Some(path) = file {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read {}", path.display()))?;
        cfg.apply_kv(&text, path)?;
    }
    Ok(cfg)
}

impl Common {
    fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(v) = self.steps {
            cfg.steps = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = &self.out {
            cfg.output_dir = Some(v.clone());
        }
    }
}

fn require_out(cfg: &ExperimentConfig) -> anyhow::Result<&Path> {
    match &cfg.output_dir {
        Some(dir) => Ok(dir),
        None => bail!("no output directory (use --out or `output_dir` in the config file)"),
    }
}

fn write_summary(cfg: &ExperimentConfig, log: &RunLog, dir: &Path) -> anyhow::Result<()> {
    let summary = summarize(cfg, log)?;
    let mut text = Vec::new();
    summary.write_to(&mut text)?;
    let path = dir.join("summary.txt");
    std::fs::write(&path, &text).with_context(|| format!("cannot write {}", path.display()))?;
    print!("{}", String::from_utf8_lossy(&text));
    Ok(())
}

fn run(args: RunArgs) -> anyhow::Result<()> {
    let mut cfg = load_config(ExperimentConfig::default(), args.common.config.as_deref())?;
    args.common.apply(&mut cfg);
    if let Some(v) = args.robots {
        cfg.robots = v;
    }
    if let Some(v) = args.control {
        cfg.control = v;
    }
    if let Some(v) = args.bins {
        cfg.bins = v;
    }
    if let Some(v) = args.rate_schedule {
        cfg.rate_schedule = v;
    }
    if let Some(v) = args.init_policy {
        cfg.init_policy = Some(v);
    }
    cfg.validate()?;
    let dir = require_out(&cfg)?.to_path_buf();
    let out = harness::run_experiment(&cfg)?;
    write_summary(&cfg, &out.log, &dir)
}

/// The configuration a learner was trained under, when it can be found next
/// to the learner files.
fn trained_config(learner: &Path) -> Option<PathBuf> {
    learner
        .ancestors()
        .take(3)
        .map(|p| p.join("run.cfg"))
        .find(|p| p.is_file())
}

fn eval(args: EvalArgs) -> anyhow::Result<()> {
    let mut cfg = load_config(
        ExperimentConfig::default(),
        trained_config(&args.learner).as_deref(),
    )?;
    cfg = load_config(cfg, args.common.config.as_deref())?;
    cfg.steps = 36_000;
    cfg.init_policy = None;
    args.common.apply(&mut cfg);
    if let Some(v) = args.robots {
        cfg.robots = v;
    }
    if let Some(v) = args.control {
        cfg.control = v;
    }
    cfg.validate()?;
    let dir = require_out(&cfg)?.to_path_buf();
    let out = harness::run_fixed_policy(&cfg, &args.learner)?;
    write_summary(&cfg, &out.log, &dir)
}

fn compose(args: ComposeArgs) -> anyhow::Result<()> {
    let mut cfg = load_config(
        ExperimentConfig::canonical(1, Control::Combined),
        args.common.config.as_deref(),
    )?;
    args.common.apply(&mut cfg);
    cfg.validate()?;
    require_out(&cfg)?;
    let report = harness::run_composition_experiment(&args.left, &args.right, &cfg)?;
    print!("{}", report.to_kv());
    Ok(())
}

fn analyze(args: AnalyzeArgs) -> anyhow::Result<()> {
    let cfg_path = args.log.join("run.cfg");
    let mut cfg = load_config(
        ExperimentConfig::default(),
        cfg_path.is_file().then_some(cfg_path.as_path()),
    )?;
    if let Some(v) = args.analysis_bins {
        cfg.analysis_bins = v;
    }
    if let Some(v) = args.window {
        cfg.analysis_window = v;
    }
    if let Some(v) = args.sliding_window {
        cfg.sliding_window = v;
    }
    cfg.validate()?;
    let log = RunLog::read_dir(&args.log)?;
    let summary = summarize(&cfg, &log)?;
    let mut stdout = std::io::stdout().lock();
    summary.write_to(&mut stdout)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            e.exit()
        }
        Err(e) => {
            let msg = e.to_string();
            eprintln!("{}", msg.lines().next().unwrap_or("invalid arguments"));
            return ExitCode::from(2);
        }
    };
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Eval(a) => eval(a),
        Command::Compose(a) => compose(a),
        Command::Analyze(a) => analyze(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", format!("{e:#}").replace('\n', " "));
            ExitCode::FAILURE
        }
    }
}
