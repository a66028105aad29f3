//! Monte Carlo experiments.
//!
//! An experiment sweeps one system parameter and runs a set of solvers on
//! the same channel draws, so solver and sweep comparisons are paired by
//! trial. Tables and traces are written as CSV.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::Deserialize;

use crate::admm::{self, AdmmParams};
use crate::channel;
use crate::model::{audit, dbm_to_watts, ReflectionCase, SystemConfig, DEFAULT_AUDIT_TOL};
use crate::trace::{RunStatus, SolverTrace};
use crate::zf::{run_zf, ZfParams};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SolverKind {
    Admm,
    Zf,
    AdmmNoIrs,
    ZfNoIrs,
}

impl SolverKind {
    pub const ALL: [SolverKind; 4] = [SolverKind::Admm, SolverKind::Zf, SolverKind::AdmmNoIrs, SolverKind::ZfNoIrs];

    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Admm => "ADMM",
            SolverKind::Zf => "ZF",
            SolverKind::AdmmNoIrs => "ADMM-noIRS",
            SolverKind::ZfNoIrs => "ZF-noIRS",
        }
    }

    pub fn uses_irs(self) -> bool {
        matches!(self, SolverKind::Admm | SolverKind::Zf)
    }

    pub fn without_irs(self) -> SolverKind {
        match self {
            SolverKind::Admm | SolverKind::AdmmNoIrs => SolverKind::AdmmNoIrs,
            SolverKind::Zf | SolverKind::ZfNoIrs => SolverKind::ZfNoIrs,
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SolverKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown solver {s:?} (expected ADMM, ZF, ADMM-noIRS or ZF-noIRS)")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepAxis {
    /// IRS elements `M`.
    Elements,
    /// BS antennas `N`.
    Antennas,
    /// Center-user target rate; edge targets stay fixed.
    CenterRate,
    Reflection,
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "M" | "elements" => Ok(SweepAxis::Elements),
            "N" | "antennas" => Ok(SweepAxis::Antennas),
            "r_c" | "rc" | "center_rate" => Ok(SweepAxis::CenterRate),
            "case" | "reflection" => Ok(SweepAxis::Reflection),
            _ => Err(Error::Config(format!("unknown sweep axis {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SweepValue {
    Count(usize),
    Rate(f64),
    Case(ReflectionCase),
}

impl fmt::Display for SweepValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SweepValue::Count(n) => write!(f, "{n}"),
            SweepValue::Rate(r) => write!(f, "{r}"),
            SweepValue::Case(c) => f.write_str(&case_label(c)),
        }
    }
}

pub fn case_label(case: &ReflectionCase) -> String {
    match case {
        ReflectionCase::BoxModulus => "I".into(),
        ReflectionCase::UnitModulus => "II".into(),
        ReflectionCase::DiscretePhase { levels } => format!("III:{levels}"),
    }
}

pub fn parse_case(s: &str) -> Result<ReflectionCase> {
    match s {
        "I" | "1" => Ok(ReflectionCase::BoxModulus),
        "II" | "2" => Ok(ReflectionCase::UnitModulus),
        _ => {
            let levels = s
                .strip_prefix("III:")
                .or_else(|| s.strip_prefix("3:"))
                .and_then(|l| l.parse::<u32>().ok())
                .ok_or_else(|| Error::Config(format!("bad reflection case {s:?} (I, II or III:<L>)")))?;
            let case = ReflectionCase::DiscretePhase { levels };
            case.validate()?;
            Ok(case)
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSpec {
    pub base: SystemConfig,
    pub axis: SweepAxis,
    pub values: Vec<SweepValue>,
    pub solvers: Vec<SolverKind>,
    pub trials: usize,
    pub seed: u64,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::Config("sweep needs at least one value".into()));
        }
        if self.trials == 0 {
            return Err(Error::Config("trial count must be at least 1".into()));
        }
        if self.solvers.is_empty() {
            return Err(Error::Config("no solvers selected".into()));
        }
        for v in &self.values {
            self.config_at(v).validate()?;
        }
        Ok(())
    }

    /// Base configuration with one sweep value applied.
    pub fn config_at(&self, value: &SweepValue) -> SystemConfig {
        let mut cfg = self.base.clone();
        match (*value, self.axis) {
            (SweepValue::Count(n), SweepAxis::Elements) => cfg.elements = n,
            (SweepValue::Count(n), _) => cfg.antennas = n,
            (SweepValue::Rate(r), _) => cfg.targets.iter_mut().for_each(|t| t.center = r),
            (SweepValue::Case(c), _) => cfg.reflection = c,
        }
        cfg
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let raw: RawSpec = toml::from_str(text).map_err(|e| Error::Config(format!("experiment file: {e}")))?;
        raw.build()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
        Self::from_toml(&text)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    #[serde(default = "default_trials")]
    trials: usize,
    #[serde(default)]
    seed: u64,
    #[serde(default = "default_solvers")]
    solvers: Vec<String>,
    #[serde(default)]
    system: RawSystem,
    sweep: RawSweep,
}

fn default_trials() -> usize {
    100
}

fn default_solvers() -> Vec<String> {
    vec!["ADMM".into(), "ZF".into()]
}

#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSystem {
    antennas: Option<usize>,
    elements: Option<usize>,
    clusters: Option<usize>,
    noise_dbm: Option<f64>,
    rate_center: Option<f64>,
    rate_edge: Option<f64>,
    case: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    axis: String,
    values: Vec<toml::Value>,
}

impl RawSpec {
    fn build(self) -> Result<ExperimentSpec> {
        let mut base = SystemConfig::standard();
        let s = &self.system;
        if let Some(n) = s.antennas {
            base.antennas = n;
        }
        if let Some(m) = s.elements {
            base.elements = m;
        }
        if let Some(k) = s.clusters {
            base.clusters = k;
        }
        if let Some(db) = s.noise_dbm {
            base.noise_power = dbm_to_watts(db);
        }
        let (rc, re) = (s.rate_center.unwrap_or(4.0), s.rate_edge.unwrap_or(4.0));
        base = base.with_uniform_targets(rc, re);
        if let Some(c) = &s.case {
            base.reflection = parse_case(c)?;
        }

        let axis: SweepAxis = self.sweep.axis.parse()?;
        let values = self
            .sweep
            .values
            .iter()
            .map(|v| sweep_value(axis, v))
            .collect::<Result<Vec<_>>>()?;
        let solvers = self.solvers.iter().map(|s| s.parse()).collect::<Result<Vec<_>>>()?;
        let spec = ExperimentSpec {
            base,
            axis,
            values,
            solvers,
            trials: self.trials,
            seed: self.seed,
        };
        spec.validate()?;
        Ok(spec)
    }
}

fn sweep_value(axis: SweepAxis, v: &toml::Value) -> Result<SweepValue> {
    let bad = || Error::Config(format!("bad sweep value {v} for axis {axis:?}"));
    match axis {
        SweepAxis::Elements | SweepAxis::Antennas => v
            .as_integer()
            .and_then(|i| usize::try_from(i).ok())
            .map(SweepValue::Count)
            .ok_or_else(bad),
        SweepAxis::CenterRate => v
            .as_float()
            .or_else(|| v.as_integer().map(|i| i as f64))
            .map(SweepValue::Rate)
            .ok_or_else(bad),
        SweepAxis::Reflection => match v {
            toml::Value::String(s) => parse_case(s).map(SweepValue::Case),
            toml::Value::Integer(l) => u32::try_from(*l)
                .map_err(|_| bad())
                .and_then(|levels| parse_case(&format!("III:{levels}")))
                .map(SweepValue::Case),
            _ => Err(bad()),
        },
    }
}

/// Seed of trial `t`; shared by every solver and sweep value.
pub fn trial_seed(master: u64, trial: usize) -> u64 {
    // splitmix64 finalizer
    let mut z = master ^ (trial as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialOutcome {
    pub trial: usize,
    pub seed: u64,
    /// Watts; `None` when the solver failed or its design did not pass the audit.
    pub power: Option<f64>,
    pub status: RunStatus,
    pub iterations: usize,
    pub wall_ms: f64,
}

/// Runs one solver on the channel draw of `seed`.
pub fn run_solver(
    config: &SystemConfig,
    solver: SolverKind,
    seed: u64,
    admm_params: &AdmmParams,
    zf_params: &ZfParams,
) -> Result<(f64, SolverTrace, bool)> {
    let mut cfg = config.clone();
    cfg.irs_enabled = solver.uses_irs();
    let channels = channel::generate(&cfg, seed)?;
    let (sol, trace) = match solver {
        SolverKind::Admm | SolverKind::AdmmNoIrs => admm::run(&cfg, &channels, admm_params)?,
        SolverKind::Zf | SolverKind::ZfNoIrs => run_zf(&cfg, &channels, zf_params)?,
    };
    let feasible = audit(&cfg, &channels, &sol.design, DEFAULT_AUDIT_TOL)?.feasible;
    Ok((sol.total_power, trace, feasible))
}

pub fn run_trial(config: &SystemConfig, solver: SolverKind, trial: usize, master: u64) -> TrialOutcome {
    let seed = trial_seed(master, trial);
    let start = Instant::now();
    let result = run_solver(config, solver, seed, &AdmmParams::default(), &ZfParams::default());
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    match result {
        Ok((p, trace, feasible)) => {
            let ok = feasible && trace.status != RunStatus::Failed;
            TrialOutcome {
                trial,
                seed,
                power: ok.then_some(p),
                status: trace.status,
                iterations: trace.iterations(),
                wall_ms,
            }
        }
        Err(_) => TrialOutcome {
            trial,
            seed,
            power: None,
            status: RunStatus::Failed,
            iterations: 0,
            wall_ms,
        },
    }
}

/// Per-trial outcomes of one (sweep value, solver) cell, ordered by trial.
#[derive(Clone, Debug, PartialEq)]
pub struct Cell {
    pub value: SweepValue,
    pub solver: SolverKind,
    pub outcomes: Vec<TrialOutcome>,
}

impl Cell {
    pub fn powers(&self) -> Vec<Option<f64>> {
        self.outcomes.iter().map(|o| o.power).collect()
    }
}

/// Runs every cell of the sweep x solver grid. Trials run on the rayon pool
/// and are reassembled by index.
pub fn run_cells(spec: &ExperimentSpec) -> Result<Vec<Cell>> {
    spec.validate()?;
    let jobs: Vec<(usize, usize, usize)> = (0..spec.values.len())
        .flat_map(|v| (0..spec.solvers.len()).flat_map(move |s| (0..spec.trials).map(move |t| (v, s, t))))
        .collect();
    let configs: Vec<SystemConfig> = spec.values.iter().map(|v| spec.config_at(v)).collect();
    let results: Vec<TrialOutcome> = jobs
        .par_iter()
        .map(|&(v, s, t)| run_trial(&configs[v], spec.solvers[s], t, spec.seed))
        .collect();
    let mut cells = Vec::new();
    let mut it = results.into_iter();
    for value in &spec.values {
        for &solver in &spec.solvers {
            let outcomes: Vec<TrialOutcome> = it.by_ref().take(spec.trials).collect();
            cells.push(Cell {
                value: *value,
                solver,
                outcomes,
            });
        }
    }
    Ok(cells)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub sweep_value: String,
    pub solver: String,
    /// `None` when every trial of the cell failed.
    pub mean_power_w: Option<f64>,
    pub std_power_w: Option<f64>,
    pub feasibility_rate: f64,
    pub mean_iterations: Option<f64>,
    pub mean_wall_ms: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
}

pub const RESULT_HEADER: [&str; 7] = [
    "sweep_value",
    "solver",
    "mean_power_w",
    "std_power_w",
    "feasibility_rate",
    "mean_iterations",
    "mean_wall_ms",
];

pub const TRACE_HEADER: [&str; 6] = ["iteration", "total_power_w", "consensus_residual", "min_slack", "wall_ms", "branch"];

impl ResultRow {
    pub fn from_cell(cell: &Cell) -> Self {
        let ok: Vec<&TrialOutcome> = cell.outcomes.iter().filter(|o| o.power.is_some()).collect();
        let n = ok.len() as f64;
        let total = cell.outcomes.len().max(1) as f64;
        let (mean, std, iters) = if ok.is_empty() {
            (None, None, None)
        } else {
            let mean = ok.iter().map(|o| o.power.unwrap()).sum::<f64>() / n;
            let var = ok.iter().map(|o| (o.power.unwrap() - mean).powi(2)).sum::<f64>() / n;
            let iters = ok.iter().map(|o| o.iterations as f64).sum::<f64>() / n;
            (Some(mean), Some(var.sqrt()), Some(iters))
        };
        ResultRow {
            sweep_value: cell.value.to_string(),
            solver: cell.solver.to_string(),
            mean_power_w: mean,
            std_power_w: std,
            feasibility_rate: n / total,
            mean_iterations: iters,
            mean_wall_ms: cell.outcomes.iter().map(|o| o.wall_ms).sum::<f64>() / total,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.mean_power_w.is_none()
    }
}

impl ResultTable {
    pub fn from_cells(cells: &[Cell]) -> Self {
        ResultTable {
            rows: cells.iter().map(ResultRow::from_cell).collect(),
        }
    }

    /// Cells in which no trial produced a feasible design.
    pub fn empty_cells(&self) -> usize {
        self.rows.iter().filter(|r| r.is_empty()).count()
    }

    pub fn find(&self, sweep_value: &str, solver: SolverKind) -> Option<&ResultRow> {
        self.rows
            .iter()
            .find(|r| r.sweep_value == sweep_value && r.solver == solver.name())
    }
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<ResultTable> {
    Ok(ResultTable::from_cells(&run_cells(spec)?))
}

pub fn fmt_float(x: f64) -> String {
    format!("{x:.8e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_float).unwrap_or_default()
}

fn parse_opt(s: &str) -> Result<Option<f64>> {
    if s.is_empty() {
        return Ok(None);
    }
    s.parse().map(Some).map_err(|_| Error::Parse(format!("bad number {s:?}")))
}

fn io_error(path: &Path, e: impl Into<std::io::Error>) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source: e.into(),
    }
}

fn write_to<W: Write>(out: W, header: &[&str], records: Vec<Vec<String>>) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(header)?;
    for r in records {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

fn write_records(path: &Path, header: &[&str], records: Vec<Vec<String>>) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| io_error(path, e))?;
    write_to(std::io::BufWriter::new(file), header, records).map_err(|e| io_error(path, e))
}

fn table_records(table: &ResultTable) -> Vec<Vec<String>> {
    table
        .rows
        .iter()
        .map(|r| {
            vec![
                r.sweep_value.clone(),
                r.solver.clone(),
                fmt_opt(r.mean_power_w),
                fmt_opt(r.std_power_w),
                fmt_float(r.feasibility_rate),
                fmt_opt(r.mean_iterations),
                fmt_float(r.mean_wall_ms),
            ]
        })
        .collect()
}

pub fn emit_csv(table: &ResultTable, path: &Path) -> Result<()> {
    write_records(path, &RESULT_HEADER, table_records(table))
}

/// Same layout as [`emit_csv`], to any writer.
pub fn write_csv<W: Write>(table: &ResultTable, out: W) -> csv::Result<()> {
    write_to(out, &RESULT_HEADER, table_records(table))
}

pub fn read_csv(path: &Path) -> Result<ResultTable> {
    let io = |e: csv::Error| io_error(path, e);
    let mut r = csv::Reader::from_path(path).map_err(io)?;
    let header = r.headers().map_err(io)?.clone();
    if header.iter().ne(RESULT_HEADER) {
        return Err(Error::Parse(format!("{}: unexpected header", path.display())));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(io)?;
        let num = |i: usize| parse_opt(&rec[i]);
        rows.push(ResultRow {
            sweep_value: rec[0].to_string(),
            solver: rec[1].to_string(),
            mean_power_w: num(2)?,
            std_power_w: num(3)?,
            feasibility_rate: num(4)?.unwrap_or(0.0),
            mean_iterations: num(5)?,
            mean_wall_ms: num(6)?.unwrap_or(0.0),
        });
    }
    Ok(ResultTable { rows })
}

pub fn emit_trace(trace: &SolverTrace, path: &Path) -> Result<()> {
    let records = trace
        .rows
        .iter()
        .map(|r| {
            vec![
                r.iteration.to_string(),
                fmt_float(r.total_power_w),
                fmt_float(r.consensus_residual),
                fmt_float(r.min_slack),
                fmt_float(r.wall_ms),
                r.branch.clone().unwrap_or_default(),
            ]
        })
        .collect();
    write_records(path, &TRACE_HEADER, records)
}

/// Per-constraint audit rows as CSV: kind, cluster, element, slack.
pub fn emit_feasibility(report: &crate::model::FeasibilityReport, path: &Path) -> Result<()> {
    let opt = |x: Option<usize>| x.map(|v| v.to_string()).unwrap_or_default();
    let records = report
        .rows()
        .into_iter()
        .map(|(kind, k, m, s)| vec![kind, opt(k), opt(m), fmt_float(s)])
        .collect();
    write_records(path, &["constraint", "cluster", "element", "slack"], records)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec() -> ExperimentSpec {
        ExperimentSpec::from_toml(
            r#"
            trials = 2
            seed = 7
            solvers = ["ZF", "ZF-noIRS"]
            [system]
            elements = 4
            [sweep]
            axis = "N"
            values = [6, 8]
            "#,
        )
        .unwrap()
    }

    #[test]
    fn parses_experiment_file() {
        let s = small_spec();
        assert_eq!(s.axis, SweepAxis::Antennas);
        assert_eq!(s.values, vec![SweepValue::Count(6), SweepValue::Count(8)]);
        assert_eq!(s.solvers, vec![SolverKind::Zf, SolverKind::ZfNoIrs]);
        assert_eq!(s.config_at(&s.values[1]).antennas, 8);
        assert_eq!(s.base.elements, 4);
    }

    #[test]
    fn reflection_axis_and_rates() {
        let s = ExperimentSpec::from_toml(
            "trials = 1\n[sweep]\naxis = \"case\"\nvalues = [\"I\", \"II\", \"III:4\", 8]\n",
        )
        .unwrap();
        let labels: Vec<String> = s.values.iter().map(|v| v.to_string()).collect();
        assert_eq!(labels, ["I", "II", "III:4", "III:8"]);
        let r = ExperimentSpec::from_toml("[sweep]\naxis = \"r_c\"\nvalues = [2, 3.5]\n").unwrap();
        let cfg = r.config_at(&r.values[1]);
        assert!(cfg.targets.iter().all(|t| t.center == 3.5 && t.edge == 4.0));
        assert_eq!(r.trials, 100);
    }

    #[test]
    fn rejects_bad_specs() {
        for text in [
            "[sweep]\naxis = \"M\"\nvalues = []\n",
            "trials = 0\n[sweep]\naxis = \"M\"\nvalues = [10]\n",
            "[sweep]\naxis = \"Q\"\nvalues = [10]\n",
            "solvers = [\"SDP\"]\n[sweep]\naxis = \"M\"\nvalues = [10]\n",
            "[sweep]\naxis = \"case\"\nvalues = [\"III:1\"]\n",
            "[sweep]\naxis = \"M\"\nvalues = [0]\n",
            "bogus = 1\n[sweep]\naxis = \"M\"\nvalues = [10]\n",
        ] {
            assert!(matches!(ExperimentSpec::from_toml(text), Err(Error::Config(_))), "{text}");
        }
    }

    #[test]
    fn seeds_are_distinct_and_stable() {
        let seeds: std::collections::HashSet<u64> = (0..1000).map(|t| trial_seed(3, t)).collect();
        assert_eq!(seeds.len(), 1000);
        assert_eq!(trial_seed(3, 5), trial_seed(3, 5));
        assert_ne!(trial_seed(3, 5), trial_seed(4, 5));
    }

    #[test]
    fn identical_spec_identical_table() {
        let s = small_spec();
        let mut a = run_experiment(&s).unwrap();
        let mut b = run_experiment(&s).unwrap();
        for r in a.rows.iter_mut().chain(b.rows.iter_mut()) {
            r.mean_wall_ms = 0.0;
        }
        assert_eq!(a, b);
        assert_eq!(a.rows.len(), 4);
        assert!(a.rows.iter().all(|r| (0.0..=1.0).contains(&r.feasibility_rate)));
    }

    #[test]
    fn failed_trials_leave_cell_empty() {
        let cell = Cell {
            value: SweepValue::Count(3),
            solver: SolverKind::Zf,
            outcomes: vec![TrialOutcome {
                trial: 0,
                seed: 1,
                power: None,
                status: RunStatus::Failed,
                iterations: 0,
                wall_ms: 1.0,
            }],
        };
        let table = ResultTable::from_cells(&[cell]);
        assert_eq!(table.empty_cells(), 1);
        assert_eq!(table.rows[0].feasibility_rate, 0.0);
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        emit_csv(&ResultTable::default(), &path).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), RESULT_HEADER.join(",") + "\n");

        let table = ResultTable {
            rows: vec![
                ResultRow {
                    sweep_value: "30".into(),
                    solver: "ADMM".into(),
                    mean_power_w: Some(1.234_567_891_23e9),
                    std_power_w: Some(0.5),
                    feasibility_rate: 1.0,
                    mean_iterations: Some(9.0),
                    mean_wall_ms: 250.0,
                },
                ResultRow {
                    sweep_value: "40".into(),
                    solver: "ZF".into(),
                    mean_power_w: None,
                    std_power_w: None,
                    feasibility_rate: 0.0,
                    mean_iterations: None,
                    mean_wall_ms: 3.0,
                },
            ],
        };
        emit_csv(&table, &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.ends_with('\n'));
        assert!(text.contains("1.23456789e9"));
        let back = read_csv(&path).unwrap();
        assert_eq!(back.rows[1], table.rows[1]);
        let p = back.rows[0].mean_power_w.unwrap();
        assert!((p - 1.234_567_891_23e9).abs() / p < 1e-8);
    }

    #[test]
    fn io_errors_name_the_path() {
        let err = emit_csv(&ResultTable::default(), Path::new("/nonexistent/dir/x.csv")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/dir/x.csv"));
    }
}
