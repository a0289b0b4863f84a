use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use shiftfl::estimators::{sensitivity_of, EstimatorKind};
use shiftfl::fedproto::{derive_hyperparams, HyperInputs, Recipe};
use shiftfl::harness::{emit_metrics, run_experiment, write_csv, RunConfig};
use shiftfl::privacy::{sigma_accountant, sigma_formula, PrivacyBudget};
use shiftfl::{Error, Result};

#[derive(Parser)]
#[command(name = "shiftfl", version, about = "Private federated optimization with compressed uplinks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file and write metrics CSV.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Replaces the seed list of the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Output CSV path; stdout when neither this nor the config sets one.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Print the per-client noise level for a privacy budget.
    Calibrate {
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        rounds: u64,
        /// Local dataset size.
        #[arg(long)]
        m: usize,
        /// Minibatch size; only used by the accountant.
        #[arg(long, default_value_t = 1)]
        b: usize,
        #[arg(long)]
        clip: f64,
        #[arg(long, value_enum, default_value_t = Est::Sgd)]
        estimator: Est,
        #[arg(long, value_enum, default_value_t = Mode::Formula)]
        mode: Mode,
        #[arg(long, default_value_t = 1.0)]
        c: f64,
    },
    /// Print the parameters a recipe prescribes.
    Derive {
        /// cor1_sgd, cor1_gd, cor2_svrg, cor3_saga or thm1_cdpsgd.
        #[arg(long)]
        recipe: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        omega: f64,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        d: usize,
        #[arg(long = "L")]
        smoothness: f64,
        #[arg(long)]
        clip: f64,
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        #[arg(long, default_value_t = 1.0)]
        phi0: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Est {
    Gd,
    Sgd,
    Svrg,
    Saga,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Formula,
    Accountant,
}

fn execute(cmd: Command) -> Result<()> {
    match cmd {
        Command::Run { config, seed, output } => {
            let mut cfg = RunConfig::from_file(&config)?;
            if let Some(s) = seed {
                cfg.seeds = vec![s];
            }
            if output.is_some() {
                cfg.output = output;
            }
            let rows = run_experiment(&cfg)?;
            match &cfg.output {
                Some(path) => emit_metrics(&rows, path)?,
                None => write_csv(&rows, std::io::stdout().lock())?,
            }
        }
        Command::Calibrate { epsilon, delta, rounds, m, b, clip, estimator, mode, c } => {
            let budget = PrivacyBudget::new(epsilon, delta)?;
            let kind = match estimator {
                Est::Gd => EstimatorKind::Gd,
                Est::Sgd => EstimatorKind::Sgd,
                Est::Svrg => EstimatorKind::Svrg,
                Est::Saga => EstimatorKind::Saga,
            };
            let sens = sensitivity_of(kind, clip);
            match mode {
                Mode::Formula => println!("sigma_p = {:.10e}", sigma_formula(budget, rounds, m, sens, c)?),
                Mode::Accountant => {
                    if m == 0 {
                        return Err(Error::Parameter("m must be positive".into()));
                    }
                    let r = sigma_accountant(budget, rounds, b as f64 / m as f64, m, b as f64, sens)?;
                    println!("sigma_p = {:.10e}", r.sigma);
                    println!("lambda = {}", r.lambda);
                    println!("log_delta = {:.10e}", r.log_delta);
                    println!("sigma_limit = {:.10e}", r.sigma_limit);
                }
            }
        }
        Command::Derive { recipe, n, omega, m, d, smoothness, clip, epsilon, delta, c, phi0 } => {
            let budget = PrivacyBudget::new(epsilon, delta)?;
            let inputs = HyperInputs { n, omega, m, d, smoothness, clip, budget, c, phi0 };
            let h = derive_hyperparams(Recipe::parse(&recipe)?, &inputs)?;
            println!("eta = {:.10e}", h.eta);
            println!("gamma = {:.10e}", h.gamma);
            println!("beta = {:.10e}", h.beta);
            println!("tau = {:.10e}", h.tau);
            println!("alpha = {:.10e}", h.alpha);
            println!("b = {}", h.batch);
            println!("p = {:.10e}", h.p);
            println!("T = {:.10e}", h.rounds);
            println!("sigma_p = {:.10e}", h.sigma);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            eprintln!("error[usage]: {}", msg.lines().next().unwrap_or("").trim_start_matches("error: "));
            return ExitCode::from(2);
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {}", e.category(), e.to_string().replace('\n', " "));
            ExitCode::from(1)
        }
    }
}
