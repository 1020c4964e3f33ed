use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gnesplit::commands::{self, EXIT_OK, EXIT_VALIDATION};
use gnesplit::config::{ExperimentConfig, ReferencePolicy};
use gnesplit::document::InstanceDocument;
use gnesplit::output::write_atomic;
use gnesplit_core::SolverKind;

#[derive(Parser)]
#[command(name = "gnesplit", version, about = "Distributed generalized Nash equilibrium solvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a Cournot instance file.
    Generate(GenerateArgs),
    /// Run solvers and write traces and a summary.
    Solve(RunArgs),
    /// Run solvers and print a comparison table.
    Compare(RunArgs),
    /// Report whether an instance file meets each solver's prerequisites.
    Check {
        file: PathBuf,
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args)]
struct GenerateArgs {
    /// Experiment config whose [cournot] section supplies the parameters.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output file (`*.json`) or directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long)]
    firms: Option<usize>,
    #[arg(long)]
    markets: Option<usize>,
    /// Use range midpoints instead of random draws.
    #[arg(long)]
    midpoint: bool,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Solve this instance file instead of generating Cournot instances.
    #[arg(long)]
    instance: Option<PathBuf>,
    #[arg(long = "seed")]
    seeds: Vec<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long = "solver")]
    solvers: Vec<SolverKind>,
    #[arg(long)]
    fp_tol: Option<f64>,
    #[arg(long)]
    kkt_tol: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long, value_enum)]
    reference: Option<ReferencePolicy>,
    /// Run the message-passing simulation.
    #[arg(long)]
    distributed: bool,
    #[arg(long)]
    firms: Option<usize>,
    #[arg(long)]
    markets: Option<usize>,
}

fn base_config(path: &Option<PathBuf>) -> anyhow::Result<ExperimentConfig> {
    match path {
        Some(p) => ExperimentConfig::load(p),
        None => Ok(ExperimentConfig::default()),
    }
}

impl RunArgs {
    fn config(&self) -> anyhow::Result<ExperimentConfig> {
        let mut c = base_config(&self.config)?;
        if let Some(i) = &self.instance {
            c.instance_file = Some(i.clone());
        }
        if !self.seeds.is_empty() {
            c.seeds = self.seeds.clone();
        }
        if let Some(o) = &self.out {
            c.out_dir = o.clone();
        }
        if !self.solvers.is_empty() {
            c.solvers = self.solvers.iter().map(|k| k.name().to_string()).collect();
        }
        if self.fp_tol.is_some() {
            c.stop.fp_tol = self.fp_tol;
        }
        if self.kkt_tol.is_some() {
            c.stop.kkt_tol = self.kkt_tol;
        }
        if self.max_iters.is_some() {
            c.stop.max_iters = self.max_iters;
        }
        if let Some(r) = self.reference {
            c.reference = r;
        }
        c.distributed |= self.distributed;
        if let Some(f) = self.firms {
            c.cournot.n_firms = f;
        }
        if let Some(m) = self.markets {
            c.cournot.n_markets = m;
        }
        Ok(c)
    }
}

fn generate(args: &GenerateArgs) -> anyhow::Result<u8> {
    let mut c = base_config(&args.config)?.cournot;
    if let Some(f) = args.firms {
        c.n_firms = f;
    }
    if let Some(m) = args.markets {
        c.n_markets = m;
    }
    c.midpoint |= args.midpoint;
    let path = commands::generate(&c.params(args.seed), &args.out)?;
    println!("{}", path.display());
    Ok(EXIT_OK)
}

fn run(args: &RunArgs, compare: bool) -> anyhow::Result<u8> {
    let cfg = args.config()?;
    let summary = commands::run_experiment(&cfg)?;
    for r in &summary.runs {
        if let Some(e) = &r.error {
            eprintln!("{} {}: {e}", r.solver, r.seed.map_or("-".into(), |s| format!("seed {s}")));
        }
    }
    if compare {
        print!("{}", commands::comparison_table(&summary));
        write_atomic(&cfg.out_dir.join("compare.csv"), &commands::comparison_csv(&summary)?)?;
    } else {
        for r in &summary.runs {
            println!(
                "{:<5} {:>8} {:<14} iters {:>7} cpu_s {:.3}",
                r.solver,
                r.seed.map_or("-".into(), |s| format!("seed{s}")),
                r.status.as_deref().unwrap_or("error"),
                r.iterations,
                r.cpu_s
            );
        }
    }
    println!("summary: {}", cfg.out_dir.join("summary.json").display());
    Ok(summary.exit_code())
}

fn check(file: &PathBuf, json: bool) -> anyhow::Result<u8> {
    let loaded = InstanceDocument::load(file)?.build()?;
    let report = commands::check(&loaded)?;
    if json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        print!("{}", commands::render_check(&report));
    }
    Ok(EXIT_OK)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK });
        }
    };
    let result = match &cli.command {
        Command::Generate(a) => generate(a),
        Command::Solve(a) => run(a, false),
        Command::Compare(a) => run(a, true),
        Command::Check { file, json } => check(file, *json),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = commands::exit_code(&e);
            ExitCode::from(if code == EXIT_OK { EXIT_VALIDATION } else { code })
        }
    }
}
