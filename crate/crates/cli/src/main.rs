//! `tspsdp`: lower bounds for symmetric TSP instances.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 parse or input error, 3 solver
//! non-convergence, 4 capacity exceeded, 5 verification failure.

mod compute;
mod facets;
mod output;
mod report;
mod table1;
mod verify;

use std::fs::File;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tspsdp::conic::SolverConfig;
use tspsdp::instances::{parse_tsplib, read_tsplib, TsplibInstance};
use tspsdp::{Error, Method};

use crate::compute::{evaluate_instance, Settings};
use crate::report::{ConfigEcho, RunReport};

#[derive(Parser, Debug)]
#[command(
    name = "tspsdp",
    version,
    about = "Semidefinite and linear lower bounds for the symmetric TSP"
)]
struct Cli {
    /// Worker threads for instance-level parallelism (0 = all cores).
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    /// Relative duality gap at which the solver stops.
    #[arg(long, global = true, default_value_t = SolverConfig::default().gap_tolerance)]
    gap_tol: f64,
    /// Relative primal and dual residual at which the solver stops.
    #[arg(long, global = true, default_value_t = SolverConfig::default().feasibility_tolerance)]
    feas_tol: f64,
    /// Interior-point iteration limit per solve.
    #[arg(long, global = true, default_value_t = SolverConfig::default().max_iterations)]
    max_iter: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct OutputArgs {
    /// Write the JSON report to PATH, or to standard output when PATH is
    /// omitted or `-`.
    #[arg(long, value_name = "PATH", num_args = 0..=1, default_missing_value = "-")]
    json: Option<PathBuf>,
    /// Write the CSV rows to PATH, or to standard output when PATH is omitted
    /// or `-`.
    #[arg(long, value_name = "PATH", num_args = 0..=1, default_missing_value = "-")]
    csv: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Bound one TSPLIB instance (`-` reads standard input).
    Bound {
        path: PathBuf,
        #[arg(long, value_enum, default_value_t = MethodArg::All)]
        method: MethodArg,
        /// Drop the row-sum equalities from the scheme relaxation.
        #[arg(long)]
        no_row_sums: bool,
        /// Skip the brute-force optimum for small instances.
        #[arg(long)]
        no_optimum: bool,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Reproduce the TSPLIB lower-bound table from the fixture files.
    Table1 {
        /// Directory holding gr17.tsp, gr21.tsp, gr24.tsp and bays29.tsp.
        #[arg(long, default_value = "fixtures")]
        fixtures: PathBuf,
        /// Leave out the slowest row.
        #[arg(long)]
        skip_bays29: bool,
        /// Compute only the two SDP columns.
        #[arg(long)]
        skip_held_karp: bool,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Bounds on the subtour facet instances.
    Facets {
        /// Number of cities; the reference triples are checked at 8.
        #[arg(long, default_value_t = 8)]
        n: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Run the seeded property suites.
    Verify {
        /// Restrict to the named suites; repeatable or comma-separated.
        #[arg(long, value_enum, value_delimiter = ',')]
        only: Vec<verify::Suite>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Random instances per suite.
        #[arg(long, default_value_t = 4)]
        count: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    All,
    NewSdp,
    Cvetkovic,
    QapSdp,
    HeldKarp,
}

impl MethodArg {
    fn methods(self) -> Vec<Method> {
        match self {
            MethodArg::All => Method::ALL.to_vec(),
            MethodArg::NewSdp => vec![Method::NewSdp],
            MethodArg::Cvetkovic => vec![Method::Cvetkovic],
            MethodArg::QapSdp => vec![Method::QapSdp],
            MethodArg::HeldKarp => vec![Method::HeldKarp],
        }
    }
}

/// Why a command stopped; maps onto the process exit code.
#[derive(Debug)]
pub enum Failure {
    Io(String),
    Input(String),
    NotConverged(String),
    Capacity(String),
    Verification(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Io(_) => 1,
            Failure::Input(_) => 2,
            Failure::NotConverged(_) => 3,
            Failure::Capacity(_) => 4,
            Failure::Verification(_) => 5,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Io(m)
            | Failure::Input(m)
            | Failure::NotConverged(m)
            | Failure::Capacity(m)
            | Failure::Verification(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::Parse(_) | Error::InvalidInput(_) => Failure::Input(msg),
            Error::Capacity { .. } => Failure::Capacity(msg),
            Error::NotConverged { .. } => Failure::NotConverged(msg),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

fn open_output(path: &Path) -> Result<Box<dyn Write>, Failure> {
    if path.as_os_str() == "-" {
        Ok(Box::new(io::stdout().lock()))
    } else {
        let f = File::create(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
        Ok(Box::new(io::BufWriter::new(f)))
    }
}

/// Prints the human table unless a machine format claimed standard output,
/// then writes the requested machine formats.
fn emit(report: &RunReport, output: &OutputArgs, human: &str) -> Result<(), Failure> {
    let to_stdout = |p: &Option<PathBuf>| p.as_ref().is_some_and(|p| p.as_os_str() == "-");
    if !to_stdout(&output.json) && !to_stdout(&output.csv) {
        print!("{human}");
    }
    if let Some(path) = &output.json {
        let mut w = open_output(path)?;
        report.write_json(&mut w)?;
        w.flush()?;
    }
    if let Some(path) = &output.csv {
        let mut w = open_output(path)?;
        report.write_csv(&mut w).map_err(|e| Failure::Io(e.to_string()))?;
        w.flush()?;
    }
    Ok(())
}

fn load_instance(path: &Path) -> Result<TsplibInstance, Failure> {
    if path.as_os_str() == "-" {
        let mut text = String::new();
        io::stdin().read_to_string(&mut text)?;
        Ok(parse_tsplib(&text).map_err(Error::from)?)
    } else {
        Ok(read_tsplib(path).map_err(Error::from)?)
    }
}

/// Non-convergence outranks a failed comparison.
fn verdict(report: &RunReport) -> Result<(), Failure> {
    if !report.all_converged() {
        return Err(Failure::NotConverged(
            "a solver did not reach the requested accuracy".into(),
        ));
    }
    if !report.passed {
        let failed = report.checks.iter().filter(|c| !c.pass).count();
        return Err(Failure::Verification(format!("{failed} check(s) failed")));
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    let solver = SolverConfig {
        gap_tolerance: cli.gap_tol,
        feasibility_tolerance: cli.feas_tol,
        max_iterations: cli.max_iter,
        ..SolverConfig::default()
    };
    solver.validate()?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs)
        .build_global()
        .map_err(|e| Failure::Io(e.to_string()))?;
    let jobs = rayon::current_num_threads();
    let color = output::use_color();
    match cli.command {
        Command::Bound {
            path,
            method,
            no_row_sums,
            no_optimum,
            output,
        } => {
            let inst = load_instance(&path)?;
            let mut settings = Settings::new(solver);
            settings.row_sums = !no_row_sums;
            if no_optimum {
                settings.brute_force_cap = 0;
            }
            settings.skip_oversized_qap = method == MethodArg::All;
            let rec = evaluate_instance(&inst.name, &inst.distances, &method.methods(), &settings)?;
            let mut report = RunReport::new("bound", ConfigEcho::new(&solver, jobs, None));
            report.instances.push(rec);
            emit(&report, &output, &output::render_table(&report, color, false))?;
            verdict(&report)
        }
        Command::Table1 {
            fixtures,
            skip_bays29,
            skip_held_karp,
            output,
        } => {
            let report = table1::run(&fixtures, skip_bays29, skip_held_karp, &solver, jobs)?;
            let human = output::render_table(&report, color, false) + &output::render_checks_summary(&report, color);
            emit(&report, &output, &human)?;
            verdict(&report)
        }
        Command::Facets { n, output } => {
            let report = facets::run(n, &solver, jobs)?;
            let human = output::render_table(&report, color, true) + &output::render_checks(&report, color);
            emit(&report, &output, &human)?;
            verdict(&report)
        }
        Command::Verify {
            only,
            seed,
            count,
            output,
        } => {
            let report = verify::run(&only, seed, count, &solver, jobs);
            emit(&report, &output, &output::render_checks(&report, color))?;
            if report.passed {
                Ok(())
            } else {
                let failed = report.checks.iter().filter(|c| !c.pass).count();
                Err(Failure::Verification(format!("{failed} suite(s) failed")))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("tspsdp: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
