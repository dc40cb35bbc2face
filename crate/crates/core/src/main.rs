use clap::{Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use transversal_psido::scenario::{emit_reports, load_scenario, run_scenario, Scenario};

#[derive(Parser)]
#[command(name = "transcalc", about = "Transversal pseudodifferential calculus on model foliations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// output directory for reports
    #[arg(long, global = true, default_value = "reports")]
    out: PathBuf,
    /// overrides the scenario seed
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// worker threads for task scheduling
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    /// error, warn, info, debug or trace
    #[arg(long, global = true, default_value = "warn")]
    log_level: String,
}

#[derive(Subcommand)]
enum Command {
    /// Validate and execute a scenario, writing reports to --out
    Run { scenario: PathBuf },
    /// Parse and statically check a scenario
    Validate { scenario: PathBuf },
    /// List the available models and named operators
    ListModels,
    /// Print the version
    Version,
}

const VALIDATION: u8 = 2;
const TASK_FAILURE: u8 = 3;

fn load(path: &Path, seed: Option<u64>) -> Result<Scenario, String> {
    let mut s = load_scenario(path).map_err(|e| format!("{}: {e}", path.display()))?;
    if let Some(seed) = seed {
        s.seed = seed;
    }
    s.validate().map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(s)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new().parse_filters(&cli.log_level).format_timestamp(None).init();
    match &cli.command {
        Command::Version => {
            println!("transcalc {} (scenario schema {})", env!("CARGO_PKG_VERSION"), transversal_psido::scenario::SCHEMA_VERSION);
            ExitCode::SUCCESS
        }
        Command::ListModels => {
            println!("models:");
            println!("  product    {{\"kind\": \"product\", \"p\": 1, \"q\": 1, \"leaf_circumference\": 1.0, \"transverse_circumference\": 6.283185307179586}}");
            println!("  kronecker  {{\"kind\": \"kronecker\", \"slope\": 1.618033988749895, \"circumference\": 6.283185307179586}}");
            println!("operators:");
            for op in ["transverse_laplacian", "transverse_signature", "first_order_dirac", "leafwise_dirac", "modulated_dirac"] {
                println!("  {op}");
            }
            ExitCode::SUCCESS
        }
        Command::Validate { scenario } => match load(scenario, cli.seed) {
            Ok(s) => {
                println!("{}: ok ({} tasks)", scenario.display(), s.tasks.len());
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("validation error: {e}");
                ExitCode::from(VALIDATION)
            }
        },
        Command::Run { scenario } => {
            let s = match load(scenario, cli.seed) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("validation error: {e}");
                    return ExitCode::from(VALIDATION);
                }
            };
            let base = scenario.parent().unwrap_or(Path::new("."));
            let results = match run_scenario(&s, base, cli.threads) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("setup failed: {e}");
                    return ExitCode::from(VALIDATION);
                }
            };
            let index = match emit_reports(&cli.out, &s, &results) {
                Ok(i) => i,
                Err(e) => {
                    eprintln!("cannot write reports: {e}");
                    return ExitCode::from(TASK_FAILURE);
                }
            };
            for t in &index.tasks {
                match &t.error {
                    Some(e) => eprintln!("task {} ({}) failed: {e}", t.index, t.task),
                    None => println!("task {} ({}) ok", t.index, t.task),
                }
            }
            if index.failures() > 0 {
                ExitCode::from(TASK_FAILURE)
            } else {
                ExitCode::SUCCESS
            }
        }
    }
}
