//! The three engines: the conventional Otto cycle (QOC) and the generalized
//! cycle (GQOC) with symmetric or asymmetric bath coupling.
//!
//! Stage 1-2 runs at anisotropy Δ^c and ends in populations P^c; stage 3-4
//! runs at Δ^h and ends in P^h. The adiabatic strokes in between change the
//! levels but not the populations, so
//!
//! ```text
//! Q_12 = Σ E_i^c (P_i^c − P_i^h)
//! Q_34 = Σ E_i^h (P_i^h − P_i^c)
//! W    = Q_12 + Q_34
//! ```
//!
//! For the QOC each stage thermalizes with a single bath (cold for 1-2, hot
//! for 3-4). For the GQOC both baths stay attached: stage 1-2 has the hot
//! bath on the left and the cold one on the right, stage 3-4 swaps them.

use serde::{Deserialize, Serialize};

use crate::baths::{transition_rates, BathParams, RateSet};
use crate::dynamics::{steady_flows, ThermoFlows};
use crate::error::{Error, Result};
use crate::model::{eigenenergies, transition_table, EigenSystem, SystemParams};
use crate::steady::{generator_matrix, gibbs_state, steady_state_solve, PopulationVector};

pub const DEFAULT_T_FLOOR: f64 = 0.005;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CycleKind {
    #[serde(rename = "qoc")]
    Qoc,
    #[serde(rename = "gqoc-sym")]
    GqocSym,
    #[serde(rename = "gqoc-asym")]
    GqocAsym,
}

impl CycleKind {
    pub const ALL: [CycleKind; 3] = [CycleKind::Qoc, CycleKind::GqocSym, CycleKind::GqocAsym];

    pub fn name(self) -> &'static str {
        match self {
            CycleKind::Qoc => "qoc",
            CycleKind::GqocSym => "gqoc-sym",
            CycleKind::GqocAsym => "gqoc-asym",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }

    /// Bath asymmetry for the two-bath cycles; `None` for the QOC.
    pub fn epsilon(self) -> Option<f64> {
        match self {
            CycleKind::Qoc => None,
            CycleKind::GqocSym => Some(0.0),
            CycleKind::GqocAsym => Some(1.0),
        }
    }
}

fn default_j() -> f64 {
    1.0
}

fn default_floor() -> f64 {
    DEFAULT_T_FLOOR
}

/// Everything about a cycle except which machine runs it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CycleParams {
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "J", default = "default_j")]
    pub j: f64,
    pub delta_c: f64,
    pub delta_h: f64,
    pub kappa: f64,
    #[serde(rename = "T_M")]
    pub t_mean: f64,
    #[serde(rename = "dT")]
    pub dt: f64,
    #[serde(rename = "T_floor", default = "default_floor")]
    pub t_floor: f64,
}

impl CycleParams {
    /// Working point shared by all the figure presets.
    pub fn reference(b: f64, t_mean: f64) -> Self {
        Self {
            b,
            j: 1.0,
            delta_c: 0.10,
            delta_h: 0.99,
            kappa: 0.05,
            t_mean,
            dt: 2.0 * t_mean,
            t_floor: DEFAULT_T_FLOOR,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("B", self.b),
            ("J", self.j),
            ("delta_c", self.delta_c),
            ("delta_h", self.delta_h),
            ("kappa", self.kappa),
            ("T_M", self.t_mean),
            ("dT", self.dt),
            ("T_floor", self.t_floor),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(Error::invalid(name, format!("must be finite, got {v}")));
            }
        }
        if !(self.delta_h > self.delta_c) {
            return Err(Error::invalid(
                "delta_h",
                format!("must exceed delta_c ({} <= {})", self.delta_h, self.delta_c),
            ));
        }
        if !(self.kappa > 0.0) {
            return Err(Error::invalid("kappa", "must be positive"));
        }
        if !(self.t_mean > 0.0) {
            return Err(Error::invalid("T_M", "must be positive"));
        }
        if !(self.dt >= 0.0) {
            return Err(Error::invalid("dT", "must be non-negative"));
        }
        if !(self.t_floor > 0.0) {
            return Err(Error::invalid("T_floor", "must be positive"));
        }
        if !(self.t_mean + self.dt / 2.0 > self.t_floor) {
            return Err(Error::invalid("T_M", "hot temperature must exceed the floor"));
        }
        SystemParams::new(self.b, self.j, self.delta_c)?;
        Ok(())
    }

    pub fn system(&self, delta: f64) -> Result<SystemParams> {
        SystemParams::new(self.b, self.j, delta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleSpec {
    pub kind: CycleKind,
    pub params: CycleParams,
}

impl CycleSpec {
    pub fn new(kind: CycleKind, params: CycleParams) -> Result<Self> {
        params.validate()?;
        Ok(Self { kind, params })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleResult {
    pub kind: CycleKind,
    pub p_c: PopulationVector,
    pub p_h: PopulationVector,
    pub q12: f64,
    pub q34: f64,
    pub w: f64,
    pub eta: Option<f64>,
    pub xi12: f64,
    pub xi34: f64,
    pub positive_work: bool,
    pub unity: bool,
}

/// (T_hot, T_cold) with the cold side clamped to the floor.
pub fn stage_temperatures(p: &CycleParams) -> (f64, f64) {
    let hot = p.t_mean + p.dt / 2.0;
    let cold = (p.t_mean - p.dt / 2.0).max(p.t_floor);
    (hot, cold)
}

/// One two-bath stage of the generalized cycle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stage {
    pub energies: EigenSystem,
    pub rates: RateSet,
    pub t_left: f64,
    pub t_right: f64,
}

/// Stage 1-2 and stage 3-4 setups for a GQOC; `None` for the QOC.
pub fn gqoc_stages(spec: &CycleSpec) -> Result<Option<[Stage; 2]>> {
    let Some(eps) = spec.kind.epsilon() else {
        return Ok(None);
    };
    let p = &spec.params;
    let (hot, cold) = stage_temperatures(p);
    let stage = |delta: f64, t_left: f64, t_right: f64| -> Result<Stage> {
        let energies = eigenenergies(&p.system(delta)?);
        let table = transition_table(&energies, eps)?;
        let rates = transition_rates(&table, &BathParams::new(t_left, t_right, p.kappa, eps)?);
        Ok(Stage {
            energies,
            rates,
            t_left,
            t_right,
        })
    };
    Ok(Some([stage(p.delta_c, hot, cold)?, stage(p.delta_h, cold, hot)?]))
}

/// End-of-stage populations (P^c, P^h).
pub fn stage_populations(spec: &CycleSpec) -> Result<(PopulationVector, PopulationVector)> {
    match gqoc_stages(spec)? {
        Some([s12, s34]) => Ok((steady_state_solve(&s12.rates)?, steady_state_solve(&s34.rates)?)),
        None => {
            let p = &spec.params;
            let (hot, cold) = stage_temperatures(p);
            let e_c = eigenenergies(&p.system(p.delta_c)?);
            let e_h = eigenenergies(&p.system(p.delta_h)?);
            Ok((gibbs_state(&e_c, cold)?, gibbs_state(&e_h, hot)?))
        }
    }
}

/// (Q_12, Q_34, W).
pub fn cycle_thermo(
    p_c: &PopulationVector,
    p_h: &PopulationVector,
    e_c: &EigenSystem,
    e_h: &EigenSystem,
) -> (f64, f64, f64) {
    let (pc, ph) = (p_c.as_array(), p_h.as_array());
    let (ec, eh) = (e_c.energies(), e_h.energies());
    let mut q12 = 0.0;
    let mut q34 = 0.0;
    for i in 0..4 {
        q12 += ec[i] * (pc[i] - ph[i]);
        q34 += eh[i] * (ph[i] - pc[i]);
    }
    (q12, q34, q12 + q34)
}

/// W over the total heat absorbed by the stages. Undefined unless the
/// engine produces work and absorbs heat somewhere.
pub fn efficiency(q12: f64, q34: f64, w: f64) -> Option<f64> {
    let absorbed: f64 = [q12, q34].into_iter().filter(|q| *q > 0.0).sum();
    (w > 0.0 && absorbed > 0.0).then(|| w / absorbed)
}

/// (Ξ_12, Ξ_34, Ξ_34 > Ξ_12).
pub fn positive_work_condition(p_c: &PopulationVector, p_h: &PopulationVector) -> (f64, f64, bool) {
    let (pc, ph) = (p_c.as_array(), p_h.as_array());
    let xi12 = (pc[0] - ph[0]) + (pc[1] - ph[1]);
    let xi34 = (pc[2] - ph[2]) + (pc[3] - ph[3]);
    (xi12, xi34, xi34 > xi12)
}

/// Saturation work (Δ^h − Δ^c)/2.
pub fn w_max(delta_c: f64, delta_h: f64) -> Result<f64> {
    if !(delta_h > delta_c) {
        return Err(Error::invalid(
            "delta_h",
            format!("must exceed delta_c ({delta_h} <= {delta_c})"),
        ));
    }
    Ok((delta_h - delta_c) / 2.0)
}

/// Ξ_34 − Ξ_12 > Q_12 / W_max > 0.
pub fn unity_efficiency_condition(result: &CycleResult, wmax: f64) -> bool {
    let ratio = result.q12 / wmax;
    result.xi34 - result.xi12 > ratio && ratio > 0.0
}

pub fn evaluate_cycle(spec: &CycleSpec) -> Result<CycleResult> {
    let p = &spec.params;
    let (p_c, p_h) = stage_populations(spec)?;
    let e_c = eigenenergies(&p.system(p.delta_c)?);
    let e_h = eigenenergies(&p.system(p.delta_h)?);
    let (q12, q34, w) = cycle_thermo(&p_c, &p_h, &e_c, &e_h);
    let (xi12, xi34, positive_work) = positive_work_condition(&p_c, &p_h);
    let mut result = CycleResult {
        kind: spec.kind,
        p_c,
        p_h,
        q12,
        q34,
        w,
        eta: efficiency(q12, q34, w),
        xi12,
        xi34,
        positive_work,
        unity: false,
    };
    result.unity = unity_efficiency_condition(&result, w_max(p.delta_c, p.delta_h)?);
    Ok(result)
}

/// Per-stage thermodynamics of a GQOC at its steady state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageDiagnostics {
    pub flows: ThermoFlows,
    /// Inverse spectral gap of the stage generator.
    pub relaxation_time: Option<f64>,
}

pub fn stage_diagnostics(spec: &CycleSpec) -> Result<Option<[StageDiagnostics; 2]>> {
    let Some(stages) = gqoc_stages(spec)? else {
        return Ok(None);
    };
    let diag = |s: &Stage| -> Result<StageDiagnostics> {
        Ok(StageDiagnostics {
            flows: steady_flows(&s.rates, &s.energies, s.t_left, s.t_right)?,
            relaxation_time: generator_matrix(&s.rates).spectral_gap().map(|g| 1.0 / g),
        })
    };
    Ok(Some([diag(&stages[0])?, diag(&stages[1])?]))
}
