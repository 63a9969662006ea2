//! Command-line driver: `fracchs run`, `fracchs sweep`, `fracchs verify`.
//!
//! Exit codes: 0 on success, 1 when configuration or input validation
//! fails, 2 when a run or check fails at runtime.

use std::fs::{self, File};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use fracchs::config::{self, RunConfig};
use fracchs::diagnostics::{EnergyReport, SweepScenario};
use fracchs::integrator::{self, OutputPlan, RunSink};
use fracchs::model::State;
use fracchs::{snapshot, verify, Error, Result};

#[derive(Parser)]
#[command(name = "fracchs", version, about = "Spectral-fractional phase-field solver")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Integrate one configured trajectory and write CSV + snapshots.
    Run {
        /// TOML configuration file.
        #[arg(long)]
        config: PathBuf,
    },
    /// Rerun one configuration across several values of a single parameter.
    Sweep {
        /// TOML configuration file (shared by every level).
        #[arg(long)]
        config: PathBuf,
        /// Which parameter the sweep varies.
        #[arg(long, value_enum)]
        axis: Axis,
        /// Comma-separated parameter values, in sweep order.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
    },
    /// Run the built-in property checks and print a pass/fail table.
    Verify {
        /// Seed for the randomized checks.
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum Axis {
    /// Retained spectral modes per axis.
    Modes,
    /// Potential regularization scale δ.
    Delta,
    /// Nutrient truncation scale ε.
    Eps,
}

impl Axis {
    fn key(self) -> &'static str {
        match self {
            Axis::Modes => "modes",
            Axis::Delta => "delta",
            Axis::Eps => "eps",
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let ok = matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let _ = e.print();
            return if ok { ExitCode::SUCCESS } else { ExitCode::from(1) };
        }
    };
    let res = match cli.cmd {
        Cmd::Run { config } => cmd_run(&config),
        Cmd::Sweep {
            config,
            axis,
            values,
        } => cmd_sweep(&config, axis, &values),
        Cmd::Verify { seed } => Ok(cmd_verify(seed.unwrap_or(verify::DEFAULT_SEED))),
    };
    match res {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::InvalidParameter { .. }
                | Error::Config(_)
                | Error::Domain(_)
                | Error::GridMismatch(_) => 1,
                _ => 2,
            })
        }
    }
}

fn load_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    config::parse_config(&text)
}

/// Writes trajectory.csv, numbered snapshot pairs, and snapshots.csv
/// into one directory as run events arrive.
struct DirSink {
    dir: PathBuf,
    trajectory: File,
    index: File,
    count: usize,
}

impl DirSink {
    fn create(dir: &Path) -> Result<DirSink> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut trajectory = File::create(dir.join("trajectory.csv"))
            .map_err(|e| Error::io(dir.join("trajectory.csv"), e))?;
        writeln!(trajectory, "{}", EnergyReport::CSV_HEADER)
            .map_err(|e| Error::io(dir.join("trajectory.csv"), e))?;
        let mut index = File::create(dir.join("snapshots.csv"))
            .map_err(|e| Error::io(dir.join("snapshots.csv"), e))?;
        writeln!(index, "index,t,phi_file,c_file")
            .map_err(|e| Error::io(dir.join("snapshots.csv"), e))?;
        Ok(DirSink {
            dir: dir.to_path_buf(),
            trajectory,
            index,
            count: 0,
        })
    }
}

impl RunSink for DirSink {
    fn on_report(&mut self, r: &EnergyReport) -> Result<()> {
        writeln!(self.trajectory, "{}", r.csv_row())
            .map_err(|e| Error::io(self.dir.join("trajectory.csv"), e))
    }

    fn on_snapshot(&mut self, st: &State, _r: &EnergyReport) -> Result<()> {
        let phi_name = format!("phi_{:06}.f64", self.count);
        let c_name = format!("c_{:06}.f64", self.count);
        snapshot::write_field(&self.dir.join(&phi_name), &st.phi)?;
        snapshot::write_field(&self.dir.join(&c_name), &st.c)?;
        writeln!(
            self.index,
            "{},{:.16e},{},{}",
            self.count, st.t, phi_name, c_name
        )
        .map_err(|e| Error::io(self.dir.join("snapshots.csv"), e))?;
        self.count += 1;
        Ok(())
    }
}

fn cmd_run(path: &Path) -> Result<ExitCode> {
    let cfg = load_config(path)?;
    let p = cfg.model_params()?;
    let stepper = cfg.stepper_config();
    let st0 = config::make_initial_state(&cfg)?;
    let dir = PathBuf::from(&cfg.output.directory);
    let plan = OutputPlan {
        eta: cfg.eta,
        report_every: cfg.output.report_every,
        snapshot_every: cfg.output.snapshot_every,
        sample_times: Vec::new(),
    };
    let mut sink = DirSink::create(&dir)?;
    let result = integrator::run(st0, &p, &stepper, &plan, &mut sink)?;
    let first = result.reports.first().expect("a run always reports");
    let last = result.reports.last().expect("a run always reports");
    println!(
        "run finished at t = {:.6}: {} accepted / {} rejected steps, \
         energy {:.6e} -> {:.6e}, outputs in {}",
        result.state.t,
        result.accepted_steps,
        result.rejected_steps,
        first.energy,
        last.energy,
        dir.display(),
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_sweep(path: &Path, axis: Axis, values: &[f64]) -> Result<ExitCode> {
    if values.len() < 2 {
        return Err(Error::Config(
            "values: a sweep needs at least two parameter values".into(),
        ));
    }
    let cfg = load_config(path)?;
    if cfg.output.sample_count < 2 {
        return Err(Error::Config(
            "output.sample_count: a sweep needs at least two sample times".into(),
        ));
    }
    let base = config::make_initial_state(&cfg)?;
    let t_end = cfg.stepper.t_end;
    let samples: Vec<f64> = (0..cfg.output.sample_count)
        .map(|i| t_end * i as f64 / (cfg.output.sample_count - 1) as f64)
        .collect();

    let mut scenarios = Vec::with_capacity(values.len());
    for &v in values {
        let mut level = cfg.clone();
        match axis {
            Axis::Modes => {
                if v.fract() != 0.0 || v < 0.0 {
                    return Err(Error::Config(format!(
                        "values: mode counts must be nonnegative integers, got {v}"
                    )));
                }
                level.model.modes_kept = v as usize;
            }
            Axis::Delta => level.model.delta = v,
            Axis::Eps => level.model.eps = v,
        }
        level.validate()?;
        scenarios.push(SweepScenario {
            label: format!("{}_{}", axis.key(), v),
            value: v,
            params: level.model_params()?,
            stepper: level.stepper_config(),
            initial: State::new(base.phi.clone(), base.c.clone(), base.t)?,
        });
    }

    let dir = PathBuf::from(&cfg.output.directory);
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let plan = OutputPlan {
        eta: cfg.eta,
        report_every: cfg.output.report_every,
        snapshot_every: cfg.output.snapshot_every,
        sample_times: samples,
    };
    let labels: Vec<String> = scenarios.iter().map(|s| s.label.clone()).collect();
    let factory = |i: usize| -> Result<Box<dyn RunSink + Send>> {
        Ok(Box::new(DirSink::create(&dir.join(&labels[i]))?))
    };
    let table = fracchs::diagnostics::sweep(&scenarios, &plan, &factory)?;

    let csv = table.to_csv();
    let csv_path = dir.join(format!("sweep_{}.csv", axis.key()));
    fs::write(&csv_path, &csv).map_err(|e| Error::io(&csv_path, e))?;
    print!("{csv}");
    println!("sweep table written to {}", csv_path.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(seed: u64) -> ExitCode {
    let outcomes = verify::run_all(seed);
    let width = outcomes.iter().map(|o| o.name.len()).max().unwrap_or(0);
    let mut failed = 0;
    for o in &outcomes {
        let status = if o.passed { "PASS" } else { "FAIL" };
        println!("{status} {:<width$}  {}", o.name, o.detail);
        failed += usize::from(!o.passed);
    }
    if failed == 0 {
        println!("all {} checks passed (seed {seed})", outcomes.len());
        ExitCode::SUCCESS
    } else {
        eprintln!("{failed} of {} checks failed (seed {seed})", outcomes.len());
        ExitCode::from(2)
    }
}
