use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qrenewal_cli::curves::write_atomic;
use qrenewal_cli::{compare, verify, CliError, CliResult, Grid, Method, Overrides, Scenario};

#[derive(Parser)]
#[command(name = "qrenewal", version, about = "Quantum renewal processes: curves, verification, comparison")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute P_e(t) by the selected methods and write a CSV table.
    Run(Common),
    /// Run the legitimacy suite and write a report; exit code 2 on failure.
    Verify(Common),
    /// Run all methods and check their pairwise agreement; exit code 2 on failure.
    Compare(Common),
}

#[derive(Args)]
struct Common {
    /// Scenario file (TOML, or JSON by extension) or a bundled scenario name.
    #[arg(long)]
    config: String,
    /// Output path; standard output when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Comma-separated methods: laplace, dyson, montecarlo.
    #[arg(long, value_delimiter = ',')]
    method: Option<Vec<String>>,
    #[arg(long)]
    trajectories: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Time grid tmin:tmax:n in units of the inverse rate scale.
    #[arg(long)]
    grid: Option<String>,
    /// Dyson truncation tolerance (run, compare) or CPT tolerance (verify).
    #[arg(long)]
    tolerance: Option<f64>,
}

impl Common {
    fn scenario(&self, tolerance_is_dyson: bool) -> CliResult<Scenario> {
        let mut s = Scenario::load(&self.config)?;
        let methods = match &self.method {
            None => None,
            Some(list) => Some(
                list.iter()
                    .map(|m| {
                        Method::parse(m).ok_or_else(|| CliError::Option {
                            option: "--method".into(),
                            message: format!("unknown method '{m}'"),
                        })
                    })
                    .collect::<CliResult<Vec<_>>>()?,
            ),
        };
        let grid = self.grid.as_deref().map(Grid::parse).transpose()?;
        s.apply(&Overrides {
            methods,
            trajectories: self.trajectories,
            seed: self.seed,
            grid,
            tolerance: if tolerance_is_dyson { self.tolerance } else { None },
        })?;
        Ok(s)
    }

    fn emit(&self, text: &str) -> CliResult<()> {
        match &self.output {
            Some(p) => write_atomic(p, text.as_bytes()),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }
}

fn run(cli: Cli) -> CliResult<bool> {
    match cli.command {
        Command::Run(c) => {
            let s = c.scenario(true)?;
            let table = qrenewal_cli::compute(&s)?;
            c.emit(&table.to_csv())?;
            Ok(true)
        }
        Command::Verify(c) => {
            let s = c.scenario(false)?;
            let report = verify::verify(&s, c.tolerance)?;
            c.emit(&verify::render(&s, &report))?;
            Ok(report.passed())
        }
        Command::Compare(c) => {
            let s = c.scenario(true)?;
            let result = compare::compare(&s)?;
            c.emit(&compare::render(&s, &result))?;
            Ok(result.passed())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
