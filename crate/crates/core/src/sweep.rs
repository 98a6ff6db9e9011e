//! Grid evaluation of cycles, plus named presets for the standard figure
//! grids.
//!
//! Rows come out in row-major order over the axes as listed (first axis
//! outermost), with the requested cycles innermost. Points are independent
//! and may be evaluated in parallel; the output order never depends on the
//! schedule.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cycles::{
    evaluate_cycle, stage_diagnostics, CycleKind, CycleParams, CycleResult, CycleSpec, StageDiagnostics,
};
use crate::error::{Error, Result};
use crate::model::eigenenergies;
use crate::table::{Cell, OutputTable};

pub const MAX_AXES: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AxisParam {
    B,
    #[serde(rename = "T_M")]
    TMean,
    #[serde(rename = "dT")]
    DeltaT,
    #[serde(rename = "delta_c")]
    DeltaC,
    #[serde(rename = "delta_h")]
    DeltaH,
    #[serde(rename = "kappa")]
    Kappa,
}

impl AxisParam {
    pub fn name(self) -> &'static str {
        match self {
            AxisParam::B => "B",
            AxisParam::TMean => "T_M",
            AxisParam::DeltaT => "dT",
            AxisParam::DeltaC => "delta_c",
            AxisParam::DeltaH => "delta_h",
            AxisParam::Kappa => "kappa",
        }
    }

    fn apply(self, p: &mut CycleParams, v: f64) {
        match self {
            AxisParam::B => p.b = v,
            AxisParam::TMean => p.t_mean = v,
            AxisParam::DeltaT => p.dt = v,
            AxisParam::DeltaC => p.delta_c = v,
            AxisParam::DeltaH => p.delta_h = v,
            AxisParam::Kappa => p.kappa = v,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    #[default]
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub name: AxisParam,
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    #[serde(default)]
    pub spacing: Spacing,
}

impl Axis {
    pub fn linear(name: AxisParam, start: f64, stop: f64, count: usize) -> Self {
        Self {
            name,
            start,
            stop,
            count,
            spacing: Spacing::Linear,
        }
    }

    pub fn value(&self, k: usize) -> f64 {
        if k + 1 == self.count {
            return self.stop;
        }
        self.start + (self.stop - self.start) * k as f64 / (self.count - 1) as f64
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.count).map(|k| self.value(k)).collect()
    }

    pub fn step(&self) -> f64 {
        (self.stop - self.start) / (self.count - 1) as f64
    }
}

/// Selectable output columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Output {
    Q12,
    Q34,
    W,
    Eta,
    Xi12,
    Xi34,
    XiDiff,
    PositiveWork,
    Unity,
    Pi12,
    Pi34,
    PiTotal,
    QdotL12,
    QdotR12,
    QdotL34,
    QdotR34,
    Tau12,
    Tau34,
    Pc(usize),
    Ph(usize),
    Ec(usize),
    Eh(usize),
}

impl Output {
    pub fn all() -> Vec<Output> {
        use Output::*;
        let mut v = vec![
            Q12,
            Q34,
            W,
            Eta,
            Xi12,
            Xi34,
            XiDiff,
            PositiveWork,
            Unity,
            Pi12,
            Pi34,
            PiTotal,
            QdotL12,
            QdotR12,
            QdotL34,
            QdotR34,
            Tau12,
            Tau34,
        ];
        for f in [Pc as fn(usize) -> Output, Ph, Ec, Eh] {
            v.extend((1..=4).map(f));
        }
        v
    }

    pub fn name(&self) -> String {
        use Output::*;
        match self {
            Q12 => "q12".into(),
            Q34 => "q34".into(),
            W => "w".into(),
            Eta => "eta".into(),
            Xi12 => "xi12".into(),
            Xi34 => "xi34".into(),
            XiDiff => "xi_diff".into(),
            PositiveWork => "positive_work".into(),
            Unity => "unity".into(),
            Pi12 => "pi_12".into(),
            Pi34 => "pi_34".into(),
            PiTotal => "pi_total".into(),
            QdotL12 => "qdot_L_12".into(),
            QdotR12 => "qdot_R_12".into(),
            QdotL34 => "qdot_L_34".into(),
            QdotR34 => "qdot_R_34".into(),
            Tau12 => "tau_12".into(),
            Tau34 => "tau_34".into(),
            Pc(i) => format!("p_c{i}"),
            Ph(i) => format!("p_h{i}"),
            Ec(i) => format!("e_c{i}"),
            Eh(i) => format!("e_h{i}"),
        }
    }

    fn needs_stage_diagnostics(&self) -> bool {
        use Output::*;
        matches!(
            self,
            Pi12 | Pi34 | PiTotal | QdotL12 | QdotR12 | QdotL34 | QdotR34 | Tau12 | Tau34
        )
    }
}

impl fmt::Display for Output {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl TryFrom<String> for Output {
    type Error = String;

    fn try_from(s: String) -> std::result::Result<Self, String> {
        Output::all()
            .into_iter()
            .find(|o| o.name() == s)
            .ok_or_else(|| format!("unknown output column `{s}`"))
    }
}

impl From<Output> for String {
    fn from(o: Output) -> String {
        o.name()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub base: CycleParams,
    pub axes: Vec<Axis>,
    pub cycles: Vec<CycleKind>,
    /// Empty selects every column.
    #[serde(default)]
    pub outputs: Vec<Output>,
}

impl SweepConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: SweepConfig = serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.axes.is_empty() || self.axes.len() > MAX_AXES {
            return Err(Error::Config(format!("expected 1 or 2 axes, got {}", self.axes.len())));
        }
        for (i, a) in self.axes.iter().enumerate() {
            if a.count < 2 {
                return Err(Error::Config(format!("axis `{}` needs count >= 2", a.name.name())));
            }
            if !(a.start.is_finite() && a.stop.is_finite()) {
                return Err(Error::Config(format!("axis `{}` has non-finite bounds", a.name.name())));
            }
            if self.axes[..i].iter().any(|b| b.name == a.name) {
                return Err(Error::Config(format!("axis `{}` listed twice", a.name.name())));
            }
        }
        if self.cycles.is_empty() {
            return Err(Error::Config("no cycles requested".into()));
        }
        Ok(())
    }

    pub fn columns(&self) -> Vec<Output> {
        if self.outputs.is_empty() {
            Output::all()
        } else {
            self.outputs.clone()
        }
    }

    pub fn grid_size(&self) -> usize {
        self.axes.iter().map(|a| a.count).product()
    }

    /// Axis values of grid point `k` in row-major order.
    fn point(&self, mut k: usize) -> Vec<f64> {
        let mut idx = vec![0; self.axes.len()];
        for (slot, a) in idx.iter_mut().zip(&self.axes).rev() {
            *slot = k % a.count;
            k /= a.count;
        }
        idx.iter().zip(&self.axes).map(|(&i, a)| a.value(i)).collect()
    }
}

/// Typed outputs of one (point, cycle) evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointOutputs {
    pub params: CycleParams,
    pub result: CycleResult,
    pub stages: Option<[StageDiagnostics; 2]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub axis_values: Vec<f64>,
    pub kind: CycleKind,
    pub outcome: std::result::Result<PointOutputs, Error>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub axes: Vec<AxisParam>,
    pub columns: Vec<Output>,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn has_errors(&self) -> bool {
        self.rows.iter().any(|r| r.outcome.is_err())
    }

    /// Successful rows of one cycle kind.
    pub fn for_kind(&self, kind: CycleKind) -> impl Iterator<Item = (&[f64], &PointOutputs)> {
        self.rows
            .iter()
            .filter(move |r| r.kind == kind)
            .filter_map(|r| r.outcome.as_ref().ok().map(|o| (r.axis_values.as_slice(), o)))
    }

    pub fn to_table(&self) -> OutputTable {
        let mut header: Vec<String> = self.axes.iter().map(|a| a.name().to_string()).collect();
        header.push("cycle".into());
        header.extend(self.columns.iter().map(Output::name));
        let mut t = OutputTable::new(header);
        for row in &self.rows {
            let mut cells: Vec<Cell> = row.axis_values.iter().map(|v| Cell::Num(*v)).collect();
            cells.push(Cell::Text(row.kind.name().into()));
            match &row.outcome {
                Ok(o) => cells.extend(self.columns.iter().map(|c| cell_for(c, o))),
                Err(e) => cells.extend(self.columns.iter().map(|_| Cell::Error(e.code()))),
            }
            t.push(cells);
        }
        t
    }

    pub fn to_csv_string(&self) -> String {
        self.to_table().to_csv_string()
    }
}

/// Renders one output column of an evaluated point.
pub fn cell_for(col: &Output, o: &PointOutputs) -> Cell {
    use Output::*;
    let r = &o.result;
    let stage = |k: usize| o.stages.map(|s| s[k]);
    let energies = |delta: f64, i: usize| o.params.system(delta).map(|s| eigenenergies(&s).energies()[i - 1]).ok();
    match *col {
        Q12 => Cell::Num(r.q12),
        Q34 => Cell::Num(r.q34),
        W => Cell::Num(r.w),
        Eta => Cell::opt(r.eta),
        Xi12 => Cell::Num(r.xi12),
        Xi34 => Cell::Num(r.xi34),
        XiDiff => Cell::Num(r.xi34 - r.xi12),
        PositiveWork => Cell::Flag(r.positive_work),
        Unity => Cell::Flag(r.unity),
        Pi12 => Cell::opt(stage(0).map(|s| s.flows.pi)),
        Pi34 => Cell::opt(stage(1).map(|s| s.flows.pi)),
        PiTotal => Cell::opt(o.stages.map(|s| s[0].flows.pi + s[1].flows.pi)),
        QdotL12 => Cell::opt(stage(0).map(|s| s.flows.qdot_left)),
        QdotR12 => Cell::opt(stage(0).map(|s| s.flows.qdot_right)),
        QdotL34 => Cell::opt(stage(1).map(|s| s.flows.qdot_left)),
        QdotR34 => Cell::opt(stage(1).map(|s| s.flows.qdot_right)),
        Tau12 => Cell::opt(stage(0).and_then(|s| s.relaxation_time)),
        Tau34 => Cell::opt(stage(1).and_then(|s| s.relaxation_time)),
        Pc(i) => Cell::Num(r.p_c.as_array()[i - 1]),
        Ph(i) => Cell::Num(r.p_h.as_array()[i - 1]),
        Ec(i) => Cell::opt(energies(o.params.delta_c, i)),
        Eh(i) => Cell::opt(energies(o.params.delta_h, i)),
    }
}

pub fn evaluate_point(params: CycleParams, kind: CycleKind, with_stages: bool) -> Result<PointOutputs> {
    let spec = CycleSpec::new(kind, params)?;
    let result = evaluate_cycle(&spec)?;
    let stages = if with_stages { stage_diagnostics(&spec)? } else { None };
    Ok(PointOutputs { params, result, stages })
}

/// Evaluates the sweep on the current rayon pool.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepTable> {
    cfg.validate()?;
    let columns = cfg.columns();
    let with_stages = columns.iter().any(Output::needs_stage_diagnostics);
    let n_cycles = cfg.cycles.len();
    let rows: Vec<SweepRow> = (0..cfg.grid_size() * n_cycles)
        .into_par_iter()
        .map(|k| {
            let axis_values = cfg.point(k / n_cycles);
            let kind = cfg.cycles[k % n_cycles];
            let mut params = cfg.base;
            for (a, v) in cfg.axes.iter().zip(&axis_values) {
                a.name.apply(&mut params, *v);
            }
            SweepRow {
                outcome: evaluate_point(params, kind, with_stages),
                axis_values,
                kind,
            }
        })
        .collect();
    Ok(SweepTable {
        axes: cfg.axes.iter().map(|a| a.name).collect(),
        columns,
        rows,
    })
}

/// Evaluates the sweep on a dedicated pool of `threads` workers (0 = rayon's
/// default).
pub fn run_sweep_with_threads(cfg: &SweepConfig, threads: usize) -> Result<SweepTable> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    pool.install(|| run_sweep(cfg))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FigurePreset {
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    FigEp,
}

impl FigurePreset {
    pub const ALL: [FigurePreset; 5] = [
        FigurePreset::Fig2,
        FigurePreset::Fig3,
        FigurePreset::Fig4,
        FigurePreset::Fig5,
        FigurePreset::FigEp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FigurePreset::Fig2 => "fig2",
            FigurePreset::Fig3 => "fig3",
            FigurePreset::Fig4 => "fig4",
            FigurePreset::Fig5 => "fig5",
            FigurePreset::FigEp => "figEP",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown figure preset `{s}`")))
    }
}

/// Mean temperatures of the three figure columns.
pub const FIGURE_MEAN_TEMPERATURES: [f64; 3] = [0.21, 1.2, 6.0];
const PANEL_LETTERS: [&str; 3] = ["a", "b", "c"];

pub const FIELD_POINTS: usize = 601;
pub const SURFACE_FIELD_POINTS: usize = 241;
pub const SURFACE_GRADIENT_POINTS: usize = 121;

fn field_axis(count: usize) -> Axis {
    Axis::linear(AxisParam::B, -3.0, 3.0, count)
}

fn per_temperature(cycles: Vec<CycleKind>, outputs: Vec<Output>) -> Vec<(String, SweepConfig)> {
    FIGURE_MEAN_TEMPERATURES
        .iter()
        .zip(PANEL_LETTERS)
        .map(|(&tm, letter)| {
            let cfg = SweepConfig {
                base: CycleParams::reference(0.0, tm),
                axes: vec![field_axis(FIELD_POINTS)],
                cycles: cycles.clone(),
                outputs: outputs.clone(),
            };
            (letter.to_string(), cfg)
        })
        .collect()
}

/// Panels of a figure preset as (panel name, config). Output files are
/// named `<preset>_<panel>.csv`.
pub fn figure_preset(preset: FigurePreset) -> Vec<(String, SweepConfig)> {
    use CycleKind::*;
    use Output::*;
    let all_cycles = vec![GqocAsym, GqocSym, Qoc];
    match preset {
        FigurePreset::Fig2 => per_temperature(all_cycles, vec![XiDiff, W]),
        FigurePreset::Fig3 => {
            let base = CycleParams::reference(0.0, 1.2);
            let cfg = |cycles: Vec<CycleKind>, outputs: Vec<Output>| SweepConfig {
                base,
                axes: vec![field_axis(FIELD_POINTS)],
                cycles,
                outputs,
            };
            let levels = (1..=4).map(Ec).chain((1..=4).map(Eh)).collect();
            let populations = (1..=4).map(Pc).chain((1..=4).map(Ph)).collect();
            vec![
                ("work".into(), cfg(all_cycles.clone(), vec![W])),
                ("levels".into(), cfg(vec![Qoc], levels)),
                ("populations".into(), cfg(all_cycles, populations)),
            ]
        }
        FigurePreset::Fig4 => per_temperature(vec![GqocAsym, Qoc], vec![W, Q12, Q34, Eta, Unity]),
        FigurePreset::Fig5 => {
            let cfg = SweepConfig {
                base: CycleParams::reference(0.0, 6.0),
                axes: vec![
                    field_axis(SURFACE_FIELD_POINTS),
                    Axis::linear(AxisParam::DeltaT, 0.0, 12.0, SURFACE_GRADIENT_POINTS),
                ],
                cycles: vec![GqocAsym],
                outputs: vec![W, Eta],
            };
            vec![("surface".into(), cfg)]
        }
        FigurePreset::FigEp => per_temperature(vec![GqocAsym], vec![Pi12, Pi34, PiTotal]),
    }
}
