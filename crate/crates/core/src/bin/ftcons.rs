use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use ftcons::metrics::{ConsensusReport, DEFAULT_EPSILON};
use ftcons::protocol::{self, BoundParams, Variant};
use ftcons::scalar;
use ftcons::scenario::{self, Overrides, RunOutput, Scenario};
use ftcons::Error;

#[derive(Parser)]
#[command(name = "ftcons", version, about = "Fixed-time consensus simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone)]
struct RunFlags {
    /// Directory for CSV and report files.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
}

impl RunFlags {
    fn overrides(&self) -> Overrides {
        Overrides {
            dt: self.dt,
            t_end: self.t_end,
            epsilon: self.epsilon,
            gamma: self.gamma,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file.
    Run {
        file: PathBuf,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Run a built-in example, or `all` of them.
    Reproduce {
        name: String,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// List the built-in scenarios.
    List,
    /// Print a built-in scenario as a JSON document.
    Show { name: String },
    /// Evaluate a convergence-time bound and its sufficiency condition.
    Bound {
        #[arg(long, value_enum)]
        variant: BoundVariant,
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        rho: f64,
        #[arg(long, default_value_t = 0.0)]
        mu: f64,
        #[arg(long, default_value_t = 0.0)]
        omega_s: f64,
        /// Agent count.
        #[arg(long, default_value_t = 6)]
        n: usize,
        /// Minimum positive edge weight.
        #[arg(long, default_value_t = 1.0)]
        kappa: f64,
        /// Largest preassigned weight p_i.
        #[arg(long, default_value_t = 0.0)]
        k_max: f64,
    },
    /// Summarize a trajectory CSV written by `run` or `reproduce`.
    Report {
        csv: PathBuf,
        #[arg(long, default_value_t = DEFAULT_EPSILON)]
        epsilon: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum BoundVariant {
    Scalar,
    FixedTime,
    Average,
    Weighted,
    SlidingMode,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_runtime() { 2 } else { 1 })
        }
    }
}

fn execute(command: Command) -> Result<(), Error> {
    match command {
        Command::Run { file, flags } => {
            let sc = scenario::load_scenario(&file)?.with_overrides(&flags.overrides())?;
            run_all(vec![sc], &flags.out)
        }
        Command::Reproduce { name, flags } => {
            let chosen = if name == "all" {
                scenario::builtin_scenarios()
            } else {
                vec![scenario::builtin(&name).ok_or_else(|| unknown(&name))?]
            };
            let chosen = chosen
                .into_iter()
                .map(|sc| sc.with_overrides(&flags.overrides()))
                .collect::<Result<Vec<_>, _>>()?;
            run_all(chosen, &flags.out)
        }
        Command::List => {
            for sc in scenario::builtin_scenarios() {
                println!(
                    "{:<12} {:<12} lambda={} rho={} dt={} t_end={}",
                    sc.name,
                    sc.protocol.variant().to_string(),
                    sc.protocol.lambda,
                    sc.protocol.rho,
                    sc.integrator.dt,
                    sc.integrator.t_end
                );
            }
            Ok(())
        }
        Command::Show { name } => {
            println!("{}", scenario::builtin(&name).ok_or_else(|| unknown(&name))?.to_json());
            Ok(())
        }
        Command::Bound {
            variant,
            lambda,
            rho,
            mu,
            omega_s,
            n,
            kappa,
            k_max,
        } => bound(
            variant,
            BoundParams {
                variant: Variant::FixedTime,
                lambda,
                rho,
                mu,
                omega_s,
                n,
                kappa,
                k_max,
            },
        ),
        Command::Report { csv, epsilon } => {
            let traj = scenario::read_csv(fs::File::open(&csv)?)?;
            let name = csv
                .file_stem()
                .map_or_else(String::new, |s| s.to_string_lossy().into_owned());
            let report = ConsensusReport::from_trajectory(&name, &traj, epsilon, None, None, None, None);
            scenario::emit_report(&report, std::io::stdout().lock())
        }
    }
}

fn unknown(name: &str) -> Error {
    Error::InvalidConfig(format!(
        "unknown scenario `{name}`; expected one of {} or all",
        scenario::BUILTIN_NAMES.join(", ")
    ))
}

fn bound(variant: BoundVariant, mut params: BoundParams) -> Result<(), Error> {
    params.variant = match variant {
        BoundVariant::Scalar => {
            let threshold = params.lambda * params.lambda / 4.0;
            println!(
                "condition rho > lambda^2/4: {} (threshold {threshold})",
                params.rho > threshold
            );
            println!("bound={}", scalar::scalar_bound(params.lambda, params.rho)?);
            return Ok(());
        }
        BoundVariant::FixedTime => Variant::FixedTime,
        BoundVariant::Average => Variant::Average,
        BoundVariant::Weighted => Variant::Weighted,
        BoundVariant::SlidingMode => Variant::SlidingMode,
    };
    let check = protocol::check_condition(&params);
    println!(
        "condition rho > {}: {}",
        check.consensus.threshold, check.consensus.satisfied
    );
    if let Some(r) = check.reaching {
        println!("condition mu > {}: {}", r.threshold, r.satisfied);
    }
    let b = protocol::bound_consensus_time(&params)?;
    if let Some(reaching) = b.reaching {
        println!("reaching_bound={reaching}");
        println!("consensus_bound={}", b.consensus);
    }
    println!("bound={}", b.total);
    Ok(())
}

fn run_all(scenarios: Vec<Scenario>, out: &Path) -> Result<(), Error> {
    fs::create_dir_all(out)?;
    let results: Vec<Result<RunOutput, Error>> = std::thread::scope(|scope| {
        let handles: Vec<_> = scenarios
            .iter()
            .map(|sc| scope.spawn(move || run_one(sc, out)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("scenario thread panicked"))
            .collect()
    });

    let mut reports = Vec::new();
    let mut first_err = None;
    for (sc, result) in scenarios.iter().zip(results) {
        match result {
            Ok(output) => {
                for w in &output.warnings {
                    eprintln!("warning [{}]: {w}", sc.name);
                }
                scenario::emit_report(&output.report, std::io::stdout().lock())?;
                println!();
                reports.push(output.report);
            }
            Err(e) => {
                eprintln!("error [{}]: {e}", sc.name);
                first_err.get_or_insert(e);
            }
        }
    }
    if reports.len() > 1 {
        scenario::write_atomic(&out.join("summary.csv"), |w| scenario::emit_summary(&reports, w))?;
    }
    first_err.map_or(Ok(()), Err)
}

fn run_one(sc: &Scenario, out: &Path) -> Result<RunOutput, Error> {
    let output = scenario::run_scenario(sc)?;
    scenario::write_atomic(&out.join(format!("{}.csv", sc.name)), |w| {
        scenario::emit_csv(&output.trajectory, w)
    })?;
    scenario::write_atomic(&out.join(format!("{}.report.txt", sc.name)), |w| {
        scenario::emit_report(&output.report, w)
    })?;
    Ok(output)
}
