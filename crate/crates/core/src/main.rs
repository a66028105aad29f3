use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use irs_noma::admm::{self, AdmmParams};
use irs_noma::channel;
use irs_noma::model::{audit, watts_to_dbm, ReflectionCase, SystemConfig, DEFAULT_AUDIT_TOL};
use irs_noma::sim::{self, ExperimentSpec, SolverKind};
use irs_noma::zf::{run_zf, ZfParams};
use irs_noma::{Error, Result};

#[derive(Parser)]
#[command(name = "irs-noma", version, about = "IRS-assisted MISO-NOMA transmit power minimization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo sweep described by an experiment file.
    Run {
        file: PathBuf,
        #[command(flatten)]
        common: Common,
        /// Override the trial count.
        #[arg(long)]
        trials: Option<usize>,
        /// Result table; printed to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve one channel draw and print the per-iteration history.
    Trace {
        #[command(flatten)]
        common: Common,
        /// Trace CSV; the audit is written next to it with a `.feasibility.csv` suffix.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dump one channel realization.
    Channels {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    seed: Option<u64>,
    /// ADMM, ZF, ADMM-noIRS or ZF-noIRS; repeatable for `run`.
    #[arg(long)]
    solver: Vec<String>,
    /// Reflection case: I, II or III.
    #[arg(long)]
    case: Option<String>,
    /// Phase levels for case III.
    #[arg(long)]
    levels: Option<u32>,
    /// Drop the reflected path.
    #[arg(long)]
    no_irs: bool,
}

impl Common {
    fn reflection(&self) -> Result<Option<ReflectionCase>> {
        match (self.case.as_deref(), self.levels) {
            (None, None) => Ok(None),
            (None | Some("III") | Some("3"), Some(l)) => sim::parse_case(&format!("III:{l}")).map(Some),
            (Some("III") | Some("3"), None) => sim::parse_case("III:2").map(Some),
            (Some(c), None) => sim::parse_case(c).map(Some),
            (Some(c), Some(_)) => Err(Error::Config(format!("--levels only applies to case III, got --case {c}"))),
        }
    }

    fn solvers(&self) -> Result<Vec<SolverKind>> {
        let kinds = self.solver.iter().map(|s| s.parse()).collect::<Result<Vec<SolverKind>>>()?;
        Ok(if self.no_irs {
            kinds.into_iter().map(SolverKind::without_irs).collect()
        } else {
            kinds
        })
    }

    fn config(&self) -> Result<SystemConfig> {
        let mut cfg = SystemConfig::standard();
        if let Some(c) = self.reflection()? {
            cfg.reflection = c;
        }
        cfg.irs_enabled = !self.no_irs;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run {
            file,
            common,
            trials,
            out,
        } => {
            let mut spec = ExperimentSpec::load(&file)?;
            if let Some(s) = common.seed {
                spec.seed = s;
            }
            if let Some(t) = trials {
                spec.trials = t;
            }
            if let Some(c) = common.reflection()? {
                spec.base.reflection = c;
            }
            let solvers = common.solvers()?;
            if !solvers.is_empty() {
                spec.solvers = solvers;
            } else if common.no_irs {
                spec.solvers = spec.solvers.iter().map(|s| s.without_irs()).collect();
            }
            spec.solvers.dedup();
            let table = sim::run_experiment(&spec)?;
            match out {
                Some(path) => sim::emit_csv(&table, &path)?,
                None => sim::write_csv(&table, std::io::stdout().lock())
                    .map_err(|e| Error::Io { path: "<stdout>".into(), source: e.into() })?,
            }
            let empty = table.empty_cells();
            if empty > 0 {
                eprintln!("{empty} cell(s) had no feasible trial");
            }
            Ok(empty == 0)
        }
        Command::Trace { common, out } => {
            let cfg = common.config()?;
            let seed = common.seed.unwrap_or(0);
            let solver = match common.solvers()?.as_slice() {
                [] => SolverKind::Admm,
                [s] => *s,
                _ => return Err(Error::Config("trace takes a single --solver".into())),
            };
            let channels = channel::generate(&cfg, seed)?;
            let (sol, trace) = match solver {
                SolverKind::Admm | SolverKind::AdmmNoIrs => admm::run(&cfg, &channels, &AdmmParams::default())?,
                SolverKind::Zf | SolverKind::ZfNoIrs => run_zf(&cfg, &channels, &ZfParams::default())?,
            };
            let report = audit(&cfg, &channels, &sol.design, DEFAULT_AUDIT_TOL)?;
            for r in &trace.rows {
                println!(
                    "{:>3}  P = {:.6e} W ({:.3} dBm)  residual {:.3e}  min slack {:+.3e}{}",
                    r.iteration,
                    r.total_power_w,
                    watts_to_dbm(r.total_power_w),
                    r.consensus_residual,
                    r.min_slack,
                    r.branch.as_deref().map(|b| format!("  [{b}]")).unwrap_or_default()
                );
            }
            for e in &trace.events {
                println!("note: {e}");
            }
            println!(
                "{}: {} after {} iterations, P = {:.6e} W, audit {}",
                solver,
                trace.status.as_str(),
                trace.iterations(),
                sol.total_power,
                if report.feasible { "passed" } else { "failed" }
            );
            if let Some(path) = out {
                sim::emit_trace(&trace, &path)?;
                sim::emit_feasibility(&report, &path.with_extension("feasibility.csv"))?;
            }
            Ok(report.feasible)
        }
        Command::Channels { common, out } => {
            let cfg = common.config()?;
            let channels = channel::generate(&cfg, common.seed.unwrap_or(0))?;
            channel::write_text(&channels, &out)?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
