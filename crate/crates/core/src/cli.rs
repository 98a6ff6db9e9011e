//! Command-line surface.
//!
//! Data goes to the output stream as CSV (header plus rows, nothing else);
//! diagnostics go to stderr. Exit codes: 0 on success, 2 for bad input,
//! 3 for numerical failures.

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::baths::{transition_rates, BathParams, RateSet, Side};
use crate::cycles::{CycleKind, CycleParams, CycleSpec, DEFAULT_T_FLOOR};
use crate::dynamics::{entropy_balance_along, evolve_populations_strided};
use crate::error::Error;
use crate::model::{eigenenergies, transition_table, EigenSystem, Pair, SystemParams};
use crate::steady::{steady_state_closed_form, steady_state_solve, PopulationVector};
use crate::sweep::{
    cell_for, evaluate_point, figure_preset, run_sweep_with_threads, FigurePreset, Output, SweepConfig,
};
use crate::table::{Cell, OutputTable};

/// Environment variable capping sweep parallelism (0 = one worker per core).
pub const THREADS_ENV: &str = "XXZ_ENGINE_THREADS";

pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "xxz-engine", version, about = "Two-qubit XXZ quantum heat engines")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Energies E1..E4 and the four transition gaps.
    Eigensystem(SystemArgs),
    /// Transition rates of every coupled pair.
    Rates(BathArgs),
    /// Steady-state populations.
    Steady {
        #[command(flatten)]
        bath: BathArgs,
        #[arg(long, value_enum, default_value_t = Method::Solve)]
        method: Method,
    },
    /// One cycle evaluation.
    Cycle(CycleArgs),
    /// Relaxation trajectory with its entropy balance.
    Relax {
        #[command(flatten)]
        bath: BathArgs,
        #[arg(long = "t-end")]
        t_end: f64,
        /// Integrator step.
        #[arg(long)]
        dt: f64,
        /// Initial populations P1,P2,P3,P4 (maximally mixed if omitted).
        #[arg(long, value_delimiter = ',')]
        p0: Option<Vec<f64>>,
        /// Record every n-th step.
        #[arg(long, default_value_t = 1)]
        stride: usize,
    },
    /// Steady-state heat currents and entropy production of both stages
    /// of a two-bath cycle.
    Entropy(CycleArgs),
    /// Grid sweep described by a JSON config.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Output file (stdout if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Regenerate the data behind one figure, one CSV per panel.
    Figure {
        #[arg(value_parser = parse_preset)]
        name: FigurePreset,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Solve,
    Closed,
    Both,
}

#[derive(Debug, Clone, Args)]
pub struct SystemArgs {
    #[arg(long = "B", allow_negative_numbers = true)]
    pub b: f64,
    #[arg(long = "J", default_value_t = 1.0, allow_negative_numbers = true)]
    pub j: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub delta: f64,
}

#[derive(Debug, Clone, Args)]
pub struct BathArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    #[arg(long)]
    pub kappa: f64,
    /// Bath asymmetry: 0 (symmetric) or 1 (asymmetric).
    #[arg(long, default_value_t = 0.0)]
    pub epsilon: f64,
    /// Accept any epsilon in [0, 1].
    #[arg(long)]
    pub any_epsilon: bool,
    #[arg(long = "TL")]
    pub t_left: f64,
    #[arg(long = "TR")]
    pub t_right: f64,
}

#[derive(Debug, Clone, Args)]
pub struct CycleArgs {
    #[arg(long, value_parser = parse_kind, default_value = "gqoc-asym")]
    pub kind: CycleKind,
    #[arg(long = "B", allow_negative_numbers = true)]
    pub b: f64,
    #[arg(long = "J", default_value_t = 1.0, allow_negative_numbers = true)]
    pub j: f64,
    #[arg(long = "delta-c", default_value_t = 0.10, allow_negative_numbers = true)]
    pub delta_c: f64,
    #[arg(long = "delta-h", default_value_t = 0.99, allow_negative_numbers = true)]
    pub delta_h: f64,
    #[arg(long, default_value_t = 0.05)]
    pub kappa: f64,
    /// Mean temperature T_M.
    #[arg(long)]
    pub tm: f64,
    /// Temperature difference between the baths.
    #[arg(long)]
    pub dt: f64,
    #[arg(long = "t-floor", default_value_t = DEFAULT_T_FLOOR)]
    pub t_floor: f64,
}

fn parse_kind(s: &str) -> Result<CycleKind, String> {
    CycleKind::parse(s).ok_or_else(|| format!("expected one of qoc, gqoc-sym, gqoc-asym; got `{s}`"))
}

fn parse_preset(s: &str) -> Result<FigurePreset, String> {
    FigurePreset::parse(s).map_err(|e| e.to_string())
}

/// Why a command did not finish cleanly.
#[derive(Debug)]
pub enum Failure {
    Validation(String),
    Numerical(String),
    Io(io::Error),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Validation(_) | Failure::Io(_) => EXIT_VALIDATION,
            Failure::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Validation(m) | Failure::Numerical(m) => f.write_str(m),
            Failure::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_validation() {
            Failure::Validation(e.to_string())
        } else {
            Failure::Numerical(e.to_string())
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e)
    }
}

impl SystemArgs {
    fn params(&self, delta: f64) -> Result<SystemParams, Error> {
        SystemParams::new(self.b, self.j, delta)
    }
}

impl BathArgs {
    fn setup(&self) -> Result<(EigenSystem, RateSet), Error> {
        if !self.any_epsilon && self.epsilon != 0.0 && self.epsilon != 1.0 {
            return Err(Error::Config(format!(
                "epsilon must be 0 or 1 (got {}); pass --any-epsilon to explore values in between",
                self.epsilon
            )));
        }
        let e = eigenenergies(&self.system.params(self.system.delta)?);
        let table = transition_table(&e, self.epsilon)?;
        let bath = BathParams::new(self.t_left, self.t_right, self.kappa, self.epsilon)?;
        Ok((e, transition_rates(&table, &bath)))
    }
}

impl CycleArgs {
    fn params(&self) -> CycleParams {
        CycleParams {
            b: self.b,
            j: self.j,
            delta_c: self.delta_c,
            delta_h: self.delta_h,
            kappa: self.kappa,
            t_mean: self.tm,
            dt: self.dt,
            t_floor: self.t_floor,
        }
    }
}

/// Worker count from the environment; unset means automatic.
pub fn threads_from_env() -> Result<usize, Failure> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(0),
        Ok(s) => s
            .trim()
            .parse()
            .map_err(|_| Failure::Validation(format!("{THREADS_ENV} must be a non-negative integer, got `{s}`"))),
    }
}

pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<(), Failure> {
    match &cli.command {
        Command::Eigensystem(sys) => eigensystem(sys, out),
        Command::Rates(bath) => rates(bath, out),
        Command::Steady { bath, method } => steady(bath, *method, out),
        Command::Cycle(args) => cycle(args, out),
        Command::Relax {
            bath,
            t_end,
            dt,
            p0,
            stride,
        } => relax(bath, *t_end, *dt, p0.as_deref(), *stride, out),
        Command::Entropy(args) => entropy(args, out),
        Command::Sweep { config, out: path } => sweep(config, path.as_ref(), out),
        Command::Figure { name, out: dir } => figure(*name, dir),
    }
}

fn eigensystem(sys: &SystemArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let e = eigenenergies(&sys.params(sys.delta)?);
    let table = transition_table(&e, 0.0)?;
    let mut header: Vec<String> = (1..=4).map(|i| format!("E{i}")).collect();
    header.extend(Pair::ALL.iter().map(|p| format!("omega{}", p.name())));
    let mut t = OutputTable::new(header);
    let mut row: Vec<Cell> = e.energies().iter().map(|x| Cell::Num(*x)).collect();
    row.extend(table.entries().iter().map(|tr| Cell::Num(tr.omega)));
    t.push(row);
    Ok(t.write_csv(out)?)
}

fn rates(bath: &BathArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let (_, r) = bath.setup()?;
    let mut t = OutputTable::new([
        "pair",
        "upper",
        "lower",
        "omega",
        "degenerate",
        "emission_L",
        "absorption_L",
        "emission_R",
        "absorption_R",
        "emission_total",
        "absorption_total",
    ]);
    for pr in r.pairs() {
        let tr = &pr.transition;
        let (l, rr) = (pr.side(Side::Left), pr.side(Side::Right));
        t.push(vec![
            Cell::Text(tr.pair.name().into()),
            Cell::Text(tr.upper.label().to_string()),
            Cell::Text(tr.lower.label().to_string()),
            Cell::Num(tr.omega),
            Cell::Flag(tr.degenerate),
            Cell::Num(l.emission),
            Cell::Num(l.absorption),
            Cell::Num(rr.emission),
            Cell::Num(rr.absorption),
            Cell::Num(pr.emission_total),
            Cell::Num(pr.absorption_total),
        ]);
    }
    Ok(t.write_csv(out)?)
}

fn population_row(method: &str, p: &PopulationVector, dev: Option<f64>) -> Vec<Cell> {
    let mut row = vec![Cell::Text(method.into())];
    row.extend(p.as_array().iter().map(|x| Cell::Num(*x)));
    row.push(Cell::opt(dev));
    row
}

fn steady(bath: &BathArgs, method: Method, out: &mut dyn Write) -> Result<(), Failure> {
    let (_, r) = bath.setup()?;
    let mut t = OutputTable::new(["method", "P1", "P2", "P3", "P4", "max_dev"]);
    match method {
        Method::Solve => t.push(population_row("solve", &steady_state_solve(&r)?, None)),
        Method::Closed => t.push(population_row("closed", &steady_state_closed_form(&r)?, None)),
        Method::Both => {
            let solved = steady_state_solve(&r)?;
            let closed = steady_state_closed_form(&r)?;
            let dev = solved.max_abs_diff(&closed);
            t.push(population_row("solve", &solved, Some(dev)));
            t.push(population_row("closed", &closed, Some(dev)));
        }
    }
    Ok(t.write_csv(out)?)
}

fn cycle(args: &CycleArgs, out: &mut dyn Write) -> Result<(), Failure> {
    use Output::*;
    let point = evaluate_point(args.params(), args.kind, false)?;
    let mut columns = vec![Q12, Q34, W, Eta, Xi12, Xi34, PositiveWork, Unity];
    columns.extend((1..=4).map(Pc));
    columns.extend((1..=4).map(Ph));
    let mut header = vec!["cycle".to_string()];
    header.extend(columns.iter().map(Output::name));
    let mut t = OutputTable::new(header);
    let mut row = vec![Cell::Text(args.kind.name().into())];
    row.extend(columns.iter().map(|c| cell_for(c, &point)));
    t.push(row);
    Ok(t.write_csv(out)?)
}

fn relax(
    bath: &BathArgs,
    t_end: f64,
    dt: f64,
    p0: Option<&[f64]>,
    stride: usize,
    out: &mut dyn Write,
) -> Result<(), Failure> {
    let (e, r) = bath.setup()?;
    let p0 = match p0 {
        Some(&[a, b, c, d]) => PopulationVector::new([a, b, c, d])?,
        Some(v) => return Err(Failure::Validation(format!("--p0 needs 4 values, got {}", v.len()))),
        None => PopulationVector::maximally_mixed(),
    };
    let traj = evolve_populations_strided(&r, &p0, t_end, dt, stride)?;
    let balance = entropy_balance_along(&traj, &r, &e, bath.t_left, bath.t_right)?;
    let mut t = OutputTable::new(["time", "P1", "P2", "P3", "P4", "S", "dS_dt", "phi", "pi"]);
    for (p, b) in traj.populations().iter().zip(&balance) {
        let mut row = vec![Cell::Num(b.time)];
        row.extend(p.as_array().iter().map(|x| Cell::Num(*x)));
        row.extend([b.entropy, b.ds_dt, b.phi, b.pi].map(Cell::Num));
        t.push(row);
    }
    Ok(t.write_csv(out)?)
}

fn entropy(args: &CycleArgs, out: &mut dyn Write) -> Result<(), Failure> {
    if args.kind == CycleKind::Qoc {
        return Err(Failure::Validation(
            "entropy production is reported for the two-bath cycles only (gqoc-sym, gqoc-asym)".into(),
        ));
    }
    let spec = CycleSpec::new(args.kind, args.params())?;
    let stages = crate::cycles::stage_diagnostics(&spec)?.expect("two-bath cycle has stages");
    let mut t = OutputTable::new(["stage", "T_L", "T_R", "qdot_L", "qdot_R", "phi", "pi"]);
    let (hot, cold) = crate::cycles::stage_temperatures(&spec.params);
    for (name, (d, (tl, tr))) in ["12", "34"].iter().zip(stages.iter().zip([(hot, cold), (cold, hot)])) {
        t.push(vec![
            Cell::Text((*name).into()),
            Cell::Num(tl),
            Cell::Num(tr),
            Cell::Num(d.flows.qdot_left),
            Cell::Num(d.flows.qdot_right),
            Cell::Num(d.flows.phi),
            Cell::Num(d.flows.pi),
        ]);
    }
    t.push(vec![
        Cell::Text("total".into()),
        Cell::Missing,
        Cell::Missing,
        Cell::Missing,
        Cell::Missing,
        Cell::Num(stages[0].flows.phi + stages[1].flows.phi),
        Cell::Num(stages[0].flows.pi + stages[1].flows.pi),
    ]);
    Ok(t.write_csv(out)?)
}

fn sweep_failures(table: &crate::sweep::SweepTable) -> Result<(), Failure> {
    let failed = table.rows.iter().filter(|r| r.outcome.is_err()).count();
    if failed == 0 {
        return Ok(());
    }
    for row in &table.rows {
        if let Err(e) = &row.outcome {
            log::warn!("{} at {:?}: {e}", row.kind.name(), row.axis_values);
        }
    }
    Err(Failure::Numerical(format!(
        "{failed} of {} points failed",
        table.rows.len()
    )))
}

fn sweep(config: &PathBuf, path: Option<&PathBuf>, out: &mut dyn Write) -> Result<(), Failure> {
    let text = fs::read_to_string(config)
        .map_err(|e| Failure::Validation(format!("cannot read {}: {e}", config.display())))?;
    let cfg = SweepConfig::from_json(&text)?;
    let table = run_sweep_with_threads(&cfg, threads_from_env()?)?;
    match path {
        Some(p) => table.to_table().write_csv(io::BufWriter::new(fs::File::create(p)?))?,
        None => table.to_table().write_csv(out)?,
    }
    sweep_failures(&table)
}

fn figure(preset: FigurePreset, dir: &PathBuf) -> Result<(), Failure> {
    fs::create_dir_all(dir)?;
    let threads = threads_from_env()?;
    let mut result = Ok(());
    for (panel, cfg) in figure_preset(preset) {
        let table = run_sweep_with_threads(&cfg, threads)?;
        let path = dir.join(format!("{}_{panel}.csv", preset.name()));
        let mut f = io::BufWriter::new(fs::File::create(&path)?);
        table.to_table().write_csv(&mut f)?;
        f.flush()?;
        log::info!("wrote {}", path.display());
        if result.is_ok() {
            result = sweep_failures(&table);
        }
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (Result<(), Failure>, String) {
        let cli = Cli::try_parse_from(std::iter::once("xxz-engine").chain(args.iter().copied())).unwrap();
        let mut buf = Vec::new();
        let r = run(&cli, &mut buf);
        (r, String::from_utf8(buf).unwrap())
    }

    #[test]
    fn eigensystem_trivial_point() {
        let (r, out) = run_args(&["eigensystem", "--B", "0", "--J", "1", "--delta", "0"]);
        r.unwrap();
        let mut lines = out.lines();
        assert_eq!(lines.next().unwrap(), "E1,E2,E3,E4,omega13,omega14,omega23,omega24");
        assert!(lines.next().unwrap().starts_with("0,0,-1,1,"));
        assert!(lines.next().is_none());
    }

    #[test]
    fn negative_field_parses() {
        let (r, out) = run_args(&["eigensystem", "--B", "-0.5", "--delta", "0.1"]);
        r.unwrap();
        assert!(out.lines().nth(1).unwrap().starts_with("0.55,-0.45,"));
    }

    #[test]
    fn steady_both_reports_deviation() {
        let (r, out) = run_args(&[
            "steady",
            "--B",
            "0.5",
            "--delta",
            "0.1",
            "--kappa",
            "0.05",
            "--epsilon",
            "1",
            "--TL",
            "2.4",
            "--TR",
            "0.3",
            "--method",
            "both",
        ]);
        r.unwrap();
        let lines: Vec<&str> = out.lines().collect();
        assert_eq!(lines.len(), 3);
        let dev: f64 = lines[1].rsplit(',').next().unwrap().parse().unwrap();
        assert!(dev < 1e-9);
    }

    #[test]
    fn fractional_epsilon_needs_override() {
        let base = [
            "rates", "--B", "0.5", "--delta", "0.1", "--kappa", "0.05", "--TL", "1", "--TR", "0.5",
        ];
        let mut args = base.to_vec();
        args.extend(["--epsilon", "0.5"]);
        let (r, _) = run_args(&args);
        assert_eq!(r.unwrap_err().exit_code(), EXIT_VALIDATION);
        args.push("--any-epsilon");
        let (r, out) = run_args(&args);
        r.unwrap();
        assert_eq!(out.lines().count(), 5);
    }

    #[test]
    fn cycle_rows() {
        let args = [
            "--B",
            "0.5",
            "--delta-c",
            "0.10",
            "--delta-h",
            "0.99",
            "--kappa",
            "0.05",
            "--tm",
            "1.2",
            "--dt",
            "2.4",
        ];
        let column = |out: &str, name: &str| -> String {
            let mut lines = out.lines();
            let header: Vec<&str> = lines.next().unwrap().split(',').collect();
            let idx = header.iter().position(|h| *h == name).unwrap();
            lines.next().unwrap().split(',').nth(idx).unwrap().to_string()
        };
        let (r, out) = run_args(&[&["cycle", "--kind", "gqoc-asym"][..], &args].concat());
        r.unwrap();
        assert!(column(&out, "w").parse::<f64>().unwrap() > 0.0);
        let (r, out) = run_args(&[&["cycle", "--kind", "gqoc-sym"][..], &args].concat());
        r.unwrap();
        assert!(column(&out, "w").parse::<f64>().unwrap() < 0.0);
        assert_eq!(column(&out, "eta"), "");
    }

    #[test]
    fn entropy_rejects_otto_and_reports_stages() {
        let args = ["--B", "0.5", "--tm", "1.2", "--dt", "2.4"];
        let (r, _) = run_args(&[&["entropy", "--kind", "qoc"][..], &args].concat());
        assert_eq!(r.unwrap_err().exit_code(), EXIT_VALIDATION);
        let (r, out) = run_args(&[&["entropy"][..], &args].concat());
        r.unwrap();
        let lines: Vec<&str> = out.lines().collect();
        assert_eq!(lines[0], "stage,T_L,T_R,qdot_L,qdot_R,phi,pi");
        assert_eq!(lines.len(), 4);
        let pi: f64 = lines[3].rsplit(',').next().unwrap().parse().unwrap();
        assert!(pi > 0.0);
    }

    #[test]
    fn invalid_input_is_validation_failure() {
        let (r, _) = run_args(&["eigensystem", "--B", "0", "--J", "0", "--delta", "0"]);
        assert_eq!(r.unwrap_err().exit_code(), EXIT_VALIDATION);
    }

    #[test]
    fn stability_guard_is_numerical_failure() {
        let (r, out) = run_args(&[
            "relax", "--B", "0.5", "--delta", "0.1", "--kappa", "0.05", "--TL", "2", "--TR", "1", "--t-end", "100",
            "--dt", "50",
        ]);
        assert_eq!(r.unwrap_err().exit_code(), EXIT_NUMERICAL);
        assert!(out.is_empty());
    }

    #[test]
    fn relax_writes_trajectory() {
        let (r, out) = run_args(&[
            "relax", "--B", "0.5", "--delta", "0.1", "--kappa", "0.05", "--TL", "2", "--TR", "1", "--t-end", "10",
            "--dt", "0.1", "--p0", "1,0,0,0", "--stride", "10",
        ]);
        r.unwrap();
        let lines: Vec<&str> = out.lines().collect();
        assert_eq!(lines[0], "time,P1,P2,P3,P4,S,dS_dt,phi,pi");
        assert_eq!(lines.len(), 12);
        assert!(lines[1].starts_with("0,1,0,0,0,0,"));
    }
}
