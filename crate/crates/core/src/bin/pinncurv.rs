use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pinn_curvature::optim::OptimizerKind;
use pinn_curvature::runner::{
    self, emit_plots, format_best_lr, format_grid_csv, grid_search, load_runs, read_entries, run_batch, run_single,
    write_run, write_summary, ExperimentConfig, GridSearchSpec,
};
use pinn_curvature::{Error, Result};

#[derive(Parser)]
#[command(name = "pinncurv", version, about = "Train PINNs on 1-D advection and record trajectory curvature")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a single network.
    Train(ExperimentArgs),
    /// Train one network per initialization seed and summarize.
    Batch(ExperimentArgs),
    /// Learning-rate grid search.
    Grid(GridArgs),
    /// Aggregate the runs in a directory into summary tables.
    Summarize(SummarizeArgs),
    /// Render SVG charts from runs and a summary table.
    Plot(PlotArgs),
}

#[derive(Args, Clone)]
struct ExperimentArgs {
    /// Flat `key = value` config file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// GD, Adam, LBFGS or BBI.
    #[arg(long)]
    optimizer: Option<String>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    /// S, L or explicit widths such as 2,16,16,1.
    #[arg(long)]
    arch: Option<String>,
    #[arg(long)]
    epochs: Option<usize>,
    /// Number of runs; initialization seeds are init-seed, init-seed + 1, ...
    #[arg(long)]
    seeds: Option<usize>,
    #[arg(long)]
    init_seed: Option<u64>,
    #[arg(long)]
    data_seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "runs")]
    out: PathBuf,
}

impl ExperimentArgs {
    fn entries(&self) -> Result<BTreeMap<String, String>> {
        let mut e = match &self.config {
            Some(p) => read_entries(p)?,
            None => BTreeMap::new(),
        };
        let mut set = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                e.insert(k.to_string(), v);
            }
        };
        set("optimizer", self.optimizer.clone());
        set("lr", self.lr.map(|v| format!("{v:?}")));
        set("beta", self.beta.map(|v| format!("{v:?}")));
        set("arch", self.arch.clone());
        set("epochs", self.epochs.map(|v| v.to_string()));
        set("seeds", self.seeds.map(|v| v.to_string()));
        set("init_seed", self.init_seed.map(|v| v.to_string()));
        set("data_seed", self.data_seed.map(|v| v.to_string()));
        Ok(e)
    }

    /// Resolves the configuration. Without an explicit epoch count the
    /// default follows the final optimizer and β.
    fn config(&self) -> Result<ExperimentConfig> {
        ExperimentConfig::from_entries(&self.entries()?)
    }
}

#[derive(Args)]
struct GridArgs {
    #[command(flatten)]
    exp: ExperimentArgs,
    /// Comma-separated learning rates.
    #[arg(long, value_delimiter = ',', default_values_t = vec![1e-4, 1e-3, 1e-2, 1e-1, 1.0])]
    lrs: Vec<f64>,
    /// Networks per learning rate.
    #[arg(long, default_value_t = 5)]
    trials: usize,
}

#[derive(Args)]
struct SummarizeArgs {
    /// Directory holding run CSVs and their .meta files.
    #[arg(long, default_value = "runs")]
    runs: PathBuf,
    /// Where to write summary.csv and final_scatter.csv (defaults to --runs).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PlotArgs {
    #[arg(long, default_value = "runs")]
    runs: PathBuf,
    /// Summary table; computed from the runs when absent.
    #[arg(long)]
    summary: Option<PathBuf>,
    #[arg(long, default_value = "plots")]
    out: PathBuf,
}

fn per_run_config(base: &ExperimentConfig, init_seed: u64) -> ExperimentConfig {
    let mut c = base.clone();
    c.init_seed = init_seed;
    c.seeds = 1;
    c
}

fn train(args: &ExperimentArgs) -> Result<()> {
    let cfg = args.config()?;
    if cfg.seeds > 1 && args.seeds.is_some() {
        return Err(Error::Config("train runs one network; use `batch` for several seeds".into()));
    }
    let cfg = per_run_config(&cfg, cfg.init_seed);
    let record = run_single(&cfg)?;
    let path = write_run(&record, &cfg, &args.out)?;
    println!("{}", runner::csv::describe(&record));
    println!("wrote {}", path.display());
    Ok(())
}

fn batch(args: &ExperimentArgs) -> Result<()> {
    let cfg = args.config()?;
    let records = run_batch(&cfg)?;
    for r in &records {
        write_run(r, &per_run_config(&cfg, r.init_seed), &args.out)?;
        println!("{}", runner::csv::describe(r));
    }
    let rows = write_summary(&records, &args.out)?;
    for row in rows {
        let mse = row.median_final_mse.map_or("diverged".to_string(), |m| format!("{m:.3e}"));
        println!("median final mse {mse} ({} of {} diverged)", row.n_diverged, row.n_runs);
    }
    println!("wrote {}", args.out.join("summary.csv").display());
    Ok(())
}

fn grid(args: &GridArgs) -> Result<()> {
    let mut entries = args.exp.entries()?;
    let kinds: Vec<OptimizerKind> = match entries.get("optimizer") {
        Some(k) => vec![k.parse()?],
        None => OptimizerKind::ALL.to_vec(),
    };
    let epochs = args.exp.epochs.unwrap_or(GridSearchSpec::default().epochs);
    let spec = GridSearchSpec { candidates: args.lrs.clone(), trials: args.trials, epochs };
    let mut outcomes = Vec::new();
    for kind in kinds {
        entries.insert("optimizer".into(), kind.to_string());
        let base = ExperimentConfig::from_entries(&entries)?;
        let outcome = grid_search(&spec, &base)?;
        println!("{}", format_best_lr(&outcome));
        outcomes.push(outcome);
    }
    std::fs::create_dir_all(&args.exp.out)?;
    let path = args.exp.out.join("grid.csv");
    std::fs::write(&path, format_grid_csv(&outcomes))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn summarize(args: &SummarizeArgs) -> Result<()> {
    let records = load_runs(&args.runs)?;
    let out = args.out.as_deref().unwrap_or(&args.runs);
    let rows = write_summary(&records, out)?;
    println!("summarized {} runs in {} groups into {}", records.len(), rows.len(), out.join("summary.csv").display());
    Ok(())
}

fn plot(args: &PlotArgs) -> Result<()> {
    let records = if args.runs.is_dir() { load_runs(&args.runs)? } else { Vec::new() };
    let rows = match &args.summary {
        Some(p) => runner::summary::parse_summary_csv(&std::fs::read_to_string(p)?)?,
        None => runner::summarize(&records),
    };
    let files = emit_plots(&rows, &records, &args.out)?;
    println!("wrote {} charts to {}", files.len(), args.out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Train(a) => train(a),
        Command::Batch(a) => batch(a),
        Command::Grid(a) => grid(a),
        Command::Summarize(a) => summarize(a),
        Command::Plot(a) => plot(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::Parse(_) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
