use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use refcharge::bench::{self, PlateauTable};
use refcharge::controllers::{
    calibrate, FuzzyController, MainControllerConfig, MfFamily, StaircaseSpec,
};
use refcharge::published;
use refcharge::runner::{
    run_bank, samples_csv, tests_csv, Controller, ControllerKind, RunReport, Scenario,
};

/// Stop/continue controllers for refrigerant charging tests.
#[derive(Debug, Parser)]
#[command(name = "refcharge", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate a fuzzy controller at one Dtemp / time point.
    Infer {
        /// Controller config file, or a family name for the shipped config.
        config: String,
        /// Temperature drop, °C.
        #[arg(long)]
        dtemp: f64,
        /// Minutes since the observation timer started.
        #[arg(long)]
        time: f64,
    },
    /// Write the main controller's output surface as CSV.
    Surface {
        config: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0.01)]
        dtemp_step: f64,
        #[arg(long, default_value_t = 0.5)]
        time_step: f64,
        /// Upper end of the Dtemp axis, °C.
        #[arg(long, default_value_t = 1.0)]
        dtemp_max: f64,
    },
    /// Run the full charging procedure and write logs and a report.
    Run {
        /// Scenario file, or `default`.
        scenario: String,
        /// Controller name or fuzzy controller config file; defaults to the
        /// scenario's `run.controller`.
        controller: Option<String>,
        #[arg(long)]
        out: PathBuf,
        /// Number of units; unit `i` uses seed `seed + i`.
        #[arg(long, default_value_t = 1)]
        units: usize,
        /// Run units one after another instead of concurrently.
        #[arg(long)]
        sequential: bool,
    },
    /// Reproduce a benchmark table or figure as CSV.
    Bench {
        #[arg(value_enum)]
        what: BenchTarget,
        #[arg(long)]
        out: PathBuf,
        /// Plateau scenario table for the test-time measurements.
        #[arg(long)]
        plateau: Option<PathBuf>,
    },
    /// Calibrate a family against its stop-time targets and write the config.
    Calibrate {
        family: String,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BenchTarget {
    Table2,
    Table3,
    Fig19,
    Fig20,
}

enum CliError {
    Config(String),
    Runtime(String),
}

impl CliError {
    fn config(e: impl std::fmt::Display) -> Self {
        Self::Config(e.to_string())
    }

    fn runtime(e: impl std::fmt::Display) -> Self {
        Self::Runtime(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(msg)) => {
            eprintln!("refcharge: config error: {msg}");
            ExitCode::from(3)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("refcharge: {msg}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Infer {
            config,
            dtemp,
            time,
        } => {
            let c =
                FuzzyController::new(load_controller_config(&config)?).map_err(CliError::config)?;
            let (out, decision) = c.main_decide(dtemp, time).map_err(CliError::runtime)?;
            let (timer_out, timer) = c.timer_decide(dtemp).map_err(CliError::runtime)?;
            println!("output={out:.3} decision={decision}");
            println!("timer_output={timer_out:.3} timer={timer}");
            Ok(())
        }
        Command::Surface {
            config,
            out,
            dtemp_step,
            time_step,
            dtemp_max,
        } => {
            if !(dtemp_step > 0.0 && time_step > 0.0 && dtemp_max > 0.0) {
                return Err(CliError::runtime(
                    "grid steps and dtemp-max must be positive",
                ));
            }
            let c =
                FuzzyController::new(load_controller_config(&config)?).map_err(CliError::config)?;
            let grid = |step: f64, max: f64| -> Vec<f64> {
                let n = (max / step + 1e-9).floor() as usize;
                (0..=n).map(|k| k as f64 * step).collect()
            };
            let ds = grid(dtemp_step, dtemp_max);
            let ts = grid(time_step, 40.0);
            let surface = c.surface(&ds, &ts).map_err(CliError::runtime)?;
            let mut csv = String::from("dtemp_c,time_min,output\n");
            for (d, row) in ds.iter().zip(&surface) {
                for (t, o) in ts.iter().zip(row) {
                    let _ = writeln!(csv, "{d:.4},{t:.2},{o:.6}");
                }
            }
            write_file(&out, &csv)
        }
        Command::Run {
            scenario,
            controller,
            out,
            units,
            sequential,
        } => run(&scenario, controller.as_deref(), &out, units, sequential),
        Command::Bench { what, out, plateau } => bench_cmd(what, &out, plateau.as_deref()),
        Command::Calibrate { family, out } => {
            let family: MfFamily = family.parse().map_err(CliError::config)?;
            let cfg =
                calibrate(family, &StaircaseSpec::for_family(family)).map_err(CliError::runtime)?;
            write_file(&out, &cfg.to_toml())?;
            println!("calibrated {family} written to {}", out.display());
            Ok(())
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)
            .map_err(|e| CliError::Runtime(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, text).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

fn load_controller_config(arg: &str) -> Result<MainControllerConfig, CliError> {
    if let Ok(family) = arg.parse::<MfFamily>() {
        return Ok(MainControllerConfig::canonical(family));
    }
    MainControllerConfig::from_toml(&read(Path::new(arg))?).map_err(CliError::config)
}

fn load_controller(arg: &str) -> Result<Controller, CliError> {
    if let Ok(kind) = arg.parse::<ControllerKind>() {
        return Ok(Controller::from_kind(kind));
    }
    Controller::fuzzy(load_controller_config(arg)?).map_err(CliError::config)
}

fn run(
    scenario: &str,
    controller: Option<&str>,
    out: &Path,
    units: usize,
    sequential: bool,
) -> Result<(), CliError> {
    let scenario = if scenario == "default" {
        Scenario::default_scenario()
    } else {
        Scenario::from_toml(&read(Path::new(scenario))?).map_err(CliError::config)?
    };
    let controller = match controller {
        Some(arg) => load_controller(arg)?,
        None => Controller::from_kind(scenario.run.controller),
    };
    let plants: Vec<_> = (0..units as u64)
        .map(|i| {
            let mut p = scenario.plant.clone();
            p.seed = p.seed.wrapping_add(i);
            p
        })
        .collect();
    let results =
        run_bank(&plants, &controller, &scenario.run, !sequential).map_err(CliError::runtime)?;
    let mut ok: Vec<(usize, &RunReport)> = Vec::new();
    let mut summary = String::new();
    let mut failures = Vec::new();
    for (unit, result) in results.iter().enumerate() {
        let _ = writeln!(summary, "== unit {unit} ==");
        match result {
            Ok(report) => {
                summary.push_str(&report.summary());
                ok.push((unit, report));
            }
            Err(e) => {
                let _ = writeln!(summary, "error: {e}");
                failures.push(format!("unit {unit}: {e}"));
            }
        }
        summary.push('\n');
    }
    write_file(&out.join("samples.csv"), &samples_csv(&ok))?;
    write_file(&out.join("tests.csv"), &tests_csv(&ok))?;
    write_file(&out.join("report.txt"), &summary)?;
    print!("{summary}");
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Runtime(failures.join("; ")))
    }
}

fn bench_cmd(what: BenchTarget, out: &Path, plateau: Option<&Path>) -> Result<(), CliError> {
    let plateau = match plateau {
        Some(p) => PlateauTable::from_toml(&read(p)?).map_err(CliError::config)?,
        None => PlateauTable::shipped(),
    };
    let measure =
        || bench::bench_table2(&bench::all_controllers(), &plateau).map_err(CliError::runtime);
    match what {
        BenchTarget::Table2 => {
            let report = measure()?;
            print!("{}", report.summary());
            write_file(&out.join("table2.csv"), &report.table2_csv())
        }
        BenchTarget::Table3 => {
            let cases = measure()?.table3_cases();
            let csv = bench::table3_csv(&cases);
            print!("{csv}");
            write_file(&out.join("table3.csv"), &csv)
        }
        BenchTarget::Fig19 => {
            let cases = measure()?.table3_cases();
            write_file(
                &out.join("fig19.csv"),
                &bench::fig19_csv(&cases, published::SETUP_MIN),
            )
        }
        BenchTarget::Fig20 => {
            let report = measure()?;
            let (best, _) = report
                .extremes(ControllerKind::FuzzyTrapezoidal)
                .ok_or_else(|| CliError::runtime("no trapezoidal measurements"))?;
            let points = bench::fig20_points(best, published::SETUP_MIN, published::POWER_KW);
            write_file(&out.join("fig20.csv"), &bench::fig20_csv(&points))
        }
    }
}
