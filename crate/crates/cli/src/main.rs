use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rank_obfuscation::experiment::{
    cmd_attack_sim, cmd_krcc_sim, cmd_krcc_surface, cmd_optimal_channel, cmd_region,
    gnuplot_script, render_csv, ExperimentConfig, Table,
};
use rank_obfuscation::{Error, Execution, TieRule};

const EXIT_CONFIG: u8 = 1;
const EXIT_INFEASIBLE: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(name = "rank-obf", version, about = "Rank obfuscation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analytical versus simulated KRCC under BSC obfuscation
    KrccSim(Common),
    /// Asymptotic KRCC over a grid of asymmetric channels
    KrccSurface(Common),
    /// Lower boundary of the leakage/KRCC achievable region
    Region(Common),
    /// Leakage-constrained optimal channel with finite-m terms
    OptimalChannel(Common),
    /// Fingerprint identification accuracy across obfuscation levels
    AttackSim(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum Ties {
    Index,
    Strict,
}

#[derive(Args)]
struct Common {
    /// JSON configuration file; flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV path (stdout when absent)
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    /// Entry length; for krcc-sim a comma-separated list is accepted
    #[arg(long, value_delimiter = ',')]
    m: Option<Vec<usize>>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    px: Option<f64>,
    #[arg(long)]
    query_q: Option<f64>,
    /// Leakage budget in bits; for region a comma-separated grid
    #[arg(long, value_delimiter = ',')]
    epsilon: Option<Vec<f64>>,
    #[arg(long)]
    b_const: Option<f64>,
    /// Fingerprint length
    #[arg(long)]
    q: Option<usize>,
    #[arg(long)]
    p_step: Option<f64>,
    #[arg(long)]
    symmetric: bool,
    #[arg(long, value_enum)]
    ties: Option<Ties>,
    /// Run trials on one thread
    #[arg(long)]
    serial: bool,
    /// Also write a gnuplot script next to the CSV
    #[arg(long, requires = "out")]
    gnuplot: bool,
}

enum Failure {
    Config(String),
    Infeasible(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => EXIT_CONFIG,
            Failure::Infeasible(_) => EXIT_INFEASIBLE,
            Failure::Io(_) => EXIT_IO,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(s) | Failure::Infeasible(s) | Failure::Io(s) => s,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Infeasible(_) => Failure::Infeasible(e.to_string()),
            other => Failure::Config(other.to_string()),
        }
    }
}

fn io_failure(path: &Path, e: io::Error) -> Failure {
    Failure::Io(format!("{}: {e}", path.display()))
}

fn build_config(command: &Command, flags: &Common) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match &flags.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
            ExperimentConfig::from_json(&text)?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(v) = flags.seed {
        cfg.seed = v;
    }
    if let Some(v) = &flags.out {
        cfg.out = Some(v.clone());
    }
    if let Some(v) = flags.n {
        cfg.n = v;
    }
    if let Some(ms) = &flags.m {
        match command {
            Command::KrccSim(_) => cfg.m_list = ms.clone(),
            _ if ms.len() == 1 => cfg.m = ms[0],
            _ => return Err(Failure::Config("--m takes a single value here".to_string())),
        }
    }
    if let Some(v) = flags.trials {
        match command {
            Command::AttackSim(_) => cfg.attack_trials = v,
            _ => cfg.trials = v,
        }
    }
    if let Some(v) = flags.px {
        cfg.px = v;
    }
    if let Some(v) = flags.query_q {
        cfg.query_q = v;
    }
    if let Some(eps) = &flags.epsilon {
        match command {
            Command::Region(_) => cfg.epsilons = Some(eps.clone()),
            _ if eps.len() == 1 => cfg.epsilon = eps[0],
            _ => {
                return Err(Failure::Config(
                    "--epsilon takes a single value here".to_string(),
                ))
            }
        }
    }
    if let Some(v) = flags.b_const {
        cfg.b_const = v;
    }
    if let Some(v) = flags.q {
        cfg.q = v;
    }
    if let Some(v) = flags.p_step {
        cfg.p_step = v;
    }
    if flags.symmetric {
        cfg.symmetric = true;
    }
    if let Some(t) = flags.ties {
        cfg.ties = match t {
            Ties::Index => TieRule::IndexOrder,
            Ties::Strict => TieRule::Strict,
        };
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(command: Command) -> Result<(), Failure> {
    let flags = match &command {
        Command::KrccSim(c)
        | Command::KrccSurface(c)
        | Command::Region(c)
        | Command::OptimalChannel(c)
        | Command::AttackSim(c) => c,
    };
    let cfg = build_config(&command, flags)?;
    let execution = if flags.serial {
        Execution::Serial
    } else {
        Execution::Parallel
    };
    let table: Table = match &command {
        Command::KrccSim(_) => cmd_krcc_sim(&cfg, execution)?,
        Command::KrccSurface(_) => cmd_krcc_surface(&cfg)?,
        Command::Region(_) => cmd_region(&cfg)?,
        Command::OptimalChannel(_) => cmd_optimal_channel(&cfg)?,
        Command::AttackSim(_) => cmd_attack_sim(&cfg, execution)?,
    };
    let csv = render_csv(&table, &cfg)?;
    match &cfg.out {
        Some(path) => {
            fs::write(path, csv).map_err(|e| io_failure(path, e))?;
            if flags.gnuplot {
                let script_path = path.with_extension("gp");
                let script = gnuplot_script(&table, &path.to_string_lossy());
                fs::write(&script_path, script).map_err(|e| io_failure(&script_path, e))?;
            }
        }
        None => {
            let mut stdout = io::stdout().lock();
            stdout
                .write_all(csv.as_bytes())
                .map_err(|e| io_failure(Path::new("<stdout>"), e))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("rank-obf: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
