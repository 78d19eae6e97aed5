use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use wfpm::runner::{
    parse_insertion, parse_walk, render_run, run_experiment, run_matrix, CounterChoice, MinSupport,
    OutputFormat, Preset, RunConfig, RunError,
};

#[derive(Parser)]
#[command(
    name = "wfpm",
    about = "FP-tree construction and mining benchmark on simulated non-volatile memory",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and report its metrics.
    Run(RunArgs),
    /// Run several configurations of the same dataset and compare them
    /// against the first (the baseline).
    Matrix(MatrixArgs),
    /// Regenerate the bundled synthetic datasets.
    GenData(GenDataArgs),
}

#[derive(Args, Clone)]
struct PolicyArgs {
    /// Counter representation: regular or sliding
    #[arg(long)]
    counter: Option<String>,
    /// Increments between sliding-window moves
    #[arg(long)]
    slide_period: Option<u64>,
    /// Insertion scheme: sorted or copy-free
    #[arg(long)]
    insertion: Option<String>,
    /// Child index: linear, hash or sorted-hash
    #[arg(long)]
    walk: Option<String>,
    /// Hash buckets per node
    #[arg(long)]
    buckets: Option<usize>,
    /// Cache capacity in KB (default 32)
    #[arg(long)]
    cache_kb: Option<usize>,
    /// Cache associativity (default 4)
    #[arg(long)]
    assoc: Option<usize>,
    /// Cache line size in bytes (default 64)
    #[arg(long)]
    line_bytes: Option<usize>,
}

#[derive(Args)]
struct RunArgs {
    /// JSON config file; command-line flags override its fields
    #[arg(long)]
    config: Option<PathBuf>,
    /// FIMI dataset path
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Absolute count (N) or fraction of transactions (0.xx)
    #[arg(long)]
    min_support: Option<String>,
    /// Policy preset: classic, evfp or wfpm (default wfpm)
    #[arg(long)]
    preset: Option<String>,
    #[command(flatten)]
    policy: PolicyArgs,
    /// Mine patterns after construction and print them
    #[arg(long)]
    mine: bool,
    /// Verify mined patterns against the brute-force oracle
    #[arg(long)]
    oracle: bool,
    /// Output format: csv, json or table
    #[arg(long)]
    format: Option<String>,
    /// Write the metrics report to this file instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write per-bit flip counts of the header counter words to this file
    #[arg(long)]
    wear_dump: Option<PathBuf>,
}

#[derive(Args)]
struct MatrixArgs {
    /// JSON config files, one per matrix row (overrides preset flags)
    #[arg(long)]
    config: Vec<PathBuf>,
    /// FIMI dataset path
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Absolute count (N) or fraction of transactions (0.xx)
    #[arg(long)]
    min_support: Option<String>,
    /// Presets to compare, first is the baseline (repeatable)
    #[arg(long)]
    preset: Vec<String>,
    #[command(flatten)]
    policy: PolicyArgs,
    /// Output format: csv, json or table
    #[arg(long)]
    format: Option<String>,
    /// Write the comparison to this file instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenDataArgs {
    /// Output directory
    #[arg(long, default_value = "data")]
    out: PathBuf,
}

fn usage<T>(msg: impl Into<String>) -> Result<T, RunError> {
    Err(RunError::Usage(msg.into()))
}

fn apply_policy_args(cfg: &mut RunConfig, args: &PolicyArgs) -> Result<(), RunError> {
    if let Some(c) = &args.counter {
        cfg.counter = Some(c.parse::<CounterChoice>().map_err(RunError::Usage)?);
    }
    if let Some(period) = args.slide_period {
        cfg.slide_period = Some(period);
    }
    if let Some(i) = &args.insertion {
        cfg.insertion = Some(parse_insertion(i).map_err(RunError::Usage)?);
    }
    if let Some(w) = &args.walk {
        cfg.walk = Some(parse_walk(w).map_err(RunError::Usage)?);
    }
    if let Some(b) = args.buckets {
        cfg.buckets = Some(b);
    }
    if let Some(kb) = args.cache_kb {
        cfg.cache_kb = Some(kb);
    }
    if let Some(a) = args.assoc {
        cfg.assoc = Some(a);
    }
    if let Some(lb) = args.line_bytes {
        cfg.line_bytes = Some(lb);
    }
    Ok(())
}

fn load_config(path: &PathBuf) -> Result<RunConfig, RunError> {
    let text = fs::read_to_string(path)
        .map_err(|e| RunError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| RunError::Usage(format!("invalid config {}: {e}", path.display())))
}

fn base_config(
    config: &Option<PathBuf>,
    dataset: &Option<PathBuf>,
    min_support: &Option<String>,
) -> Result<RunConfig, RunError> {
    let mut cfg = match config {
        Some(path) => load_config(path)?,
        None => {
            let dataset = match dataset {
                Some(d) => d.clone(),
                None => return usage("--dataset is required (or provide --config)"),
            };
            let ms = match min_support {
                Some(s) => s.parse::<MinSupport>().map_err(RunError::Usage)?,
                None => return usage("--min-support is required (or provide --config)"),
            };
            RunConfig::new(dataset, ms)
        }
    };
    if let Some(d) = dataset {
        cfg.dataset = d.clone();
    }
    if let Some(s) = min_support {
        cfg.min_support = s.parse::<MinSupport>().map_err(RunError::Usage)?;
    }
    Ok(cfg)
}

fn emit(out: &Option<PathBuf>, content: &str) -> Result<(), RunError> {
    match out {
        Some(path) => fs::write(path, content)
            .map_err(|e| RunError::Internal(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn cmd_run(args: &RunArgs) -> Result<(), RunError> {
    let mut cfg = base_config(&args.config, &args.dataset, &args.min_support)?;
    if let Some(p) = &args.preset {
        cfg.preset = Some(p.parse::<Preset>().map_err(RunError::Usage)?);
    }
    apply_policy_args(&mut cfg, &args.policy)?;
    if args.mine {
        cfg.mine = true;
    }
    if args.oracle {
        cfg.oracle = true;
    }
    if let Some(f) = &args.format {
        cfg.format = f.parse::<OutputFormat>().map_err(RunError::Usage)?;
    }
    if let Some(out) = &args.out {
        cfg.out = Some(out.clone());
    }
    if let Some(path) = &args.wear_dump {
        cfg.wear_dump = Some(path.clone());
    }

    let outcome = run_experiment(&cfg)?;
    emit(&cfg.out, &render_run(&cfg, &outcome))?;
    if let (Some(path), Some(dump)) = (&cfg.wear_dump, &outcome.wear_dump) {
        fs::write(path, dump)
            .map_err(|e| RunError::Internal(format!("cannot write {}: {e}", path.display())))?;
    }
    if let Some(patterns) = &outcome.patterns {
        print!("{}", patterns.to_lines());
    }
    if outcome.oracle_verified {
        println!("patterns verified");
    }
    Ok(())
}

fn cmd_matrix(args: &MatrixArgs) -> Result<(), RunError> {
    let mut configs: Vec<RunConfig> = Vec::new();
    if !args.config.is_empty() {
        for path in &args.config {
            configs.push(load_config(path)?);
        }
    } else {
        if args.preset.len() < 2 {
            return usage("matrix needs at least two --preset flags (or --config files)");
        }
        let base = base_config(&None, &args.dataset, &args.min_support)?;
        for name in &args.preset {
            let mut cfg = base.clone();
            cfg.preset = Some(name.parse::<Preset>().map_err(RunError::Usage)?);
            apply_policy_args(&mut cfg, &args.policy)?;
            configs.push(cfg);
        }
    }

    let format = match &args.format {
        Some(f) => f.parse::<OutputFormat>().map_err(RunError::Usage)?,
        None => OutputFormat::Table,
    };
    let matrix = run_matrix(&configs)?;
    emit(&args.out, &matrix.render(format))
}

fn cmd_gen_data(args: &GenDataArgs) -> Result<(), RunError> {
    fs::create_dir_all(&args.out)
        .map_err(|e| RunError::Internal(format!("cannot create {}: {e}", args.out.display())))?;
    let sets: [(&str, Vec<Vec<u64>>); 3] = [
        ("mushroom.dat", wfpm::datagen::mushroom_like()),
        ("chess.dat", wfpm::datagen::chess_like()),
        ("retail.dat", wfpm::datagen::retail_like()),
    ];
    for (name, rows) in sets {
        let path = args.out.join(name);
        wfpm::datagen::write_fimi(&path, &rows)
            .map_err(|e| RunError::Internal(format!("cannot write {}: {e}", path.display())))?;
        println!("wrote {} ({} transactions)", path.display(), rows.len());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are not usage errors.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Matrix(args) => cmd_matrix(args),
        Command::GenData(args) => cmd_gen_data(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
