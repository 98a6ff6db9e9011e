//! Population dynamics, heat currents and the entropy balance
//! dS/dt = Π − Φ.
//!
//! Heat currents are positive when energy flows from a reservoir into the
//! system. The entropy flux is Φ = −Q̇_L/T_L − Q̇_R/T_R, so at a steady state
//! (dS/dt = 0) the entropy production equals the flux.

use nalgebra::Vector4;

use crate::baths::{RateSet, Side};
use crate::error::{Error, Result};
use crate::model::EigenSystem;
use crate::steady::{generator_matrix, ln_steady_state_tree, PopulationVector, RateGenerator};

/// Largest accepted dt · max|M_ii| for the fixed-step integrator.
pub const STABILITY_LIMIT: f64 = 0.1;

/// Snapshot entries in (−SNAPSHOT_CLIP, 0) are recorded as zero.
pub const SNAPSHOT_CLIP: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermoFlows {
    pub qdot_left: f64,
    pub qdot_right: f64,
    pub phi: f64,
    pub pi: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    times: Vec<f64>,
    populations: Vec<PopulationVector>,
}

impl Trajectory {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn populations(&self) -> &[PopulationVector] {
        &self.populations
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<(f64, &PopulationVector)> {
        Some((*self.times.last()?, self.populations.last()?))
    }
}

/// Entropy bookkeeping at one trajectory sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyBalance {
    pub time: f64,
    pub entropy: f64,
    pub ds_dt: f64,
    pub phi: f64,
    pub pi: f64,
}

fn net_decay(rates: &crate::baths::SideRates, p_upper: f64, p_lower: f64) -> f64 {
    rates.emission * p_upper - rates.absorption * p_lower
}

/// Heat currents (Q̇_L, Q̇_R) into the system for populations `p`.
pub fn heat_currents(r: &RateSet, p: &PopulationVector, e: &EigenSystem) -> (f64, f64) {
    let mut q = [0.0; 2];
    for pr in r.pairs() {
        let t = &pr.transition;
        let de = e.energy(t.lower) - e.energy(t.upper);
        let (pu, pl) = (p.get(t.upper), p.get(t.lower));
        for (k, side) in [Side::Left, Side::Right].into_iter().enumerate() {
            q[k] += de * net_decay(pr.side(side), pu, pl);
        }
    }
    (q[0], q[1])
}

pub fn entropy_flux(qdot_left: f64, qdot_right: f64, t_left: f64, t_right: f64) -> Result<f64> {
    for (name, t) in [("T_L", t_left), ("T_R", t_right)] {
        if !(t > 0.0) {
            return Err(Error::invalid(name, format!("entropy flux needs T > 0, got {t}")));
        }
    }
    Ok(-qdot_left / t_left - qdot_right / t_right)
}

/// (x − y) ln(x/y) for one bath acting on one pair, given ln x and ln y of
/// the downward and upward probability fluxes. Never negative.
fn flux_production(ln_x: f64, ln_y: f64) -> f64 {
    if ln_x == ln_y {
        return 0.0;
    }
    (ln_x.exp() - ln_y.exp()) * (ln_x - ln_y)
}

/// Entropy production Σ_pairs Σ_baths (x − y) ln(x/y), summed term by term
/// so that it stays non-negative in floating point. With local detailed
/// balance this equals dS/dt + Φ for any populations.
pub fn entropy_production(r: &RateSet, p: &PopulationVector) -> f64 {
    production_from_ln(r, &p.as_array().map(f64::ln))
}

fn production_from_ln(r: &RateSet, ln_p: &[f64; 4]) -> f64 {
    let mut pi = 0.0;
    for pr in r.pairs() {
        let t = &pr.transition;
        let (lu, ll) = (ln_p[t.upper.index()], ln_p[t.lower.index()]);
        for side in [Side::Left, Side::Right] {
            let ln_x = pr.side(side).emission.ln() + lu;
            let ln_y = pr.ln_absorption(side) + ll;
            if ln_x > f64::NEG_INFINITY || ln_y > f64::NEG_INFINITY {
                pi += flux_production(ln_x, ln_y);
            }
        }
    }
    pi
}

/// Currents, flux and entropy production at the stationary state.
///
/// Populations come from the spanning-tree formula so that exponentially
/// small occupations (cold baths) keep their relative precision; Π uses the
/// term-wise form and therefore cannot come out negative from rounding.
pub fn steady_flows(r: &RateSet, e: &EigenSystem, t_left: f64, t_right: f64) -> Result<ThermoFlows> {
    let ln_p = ln_steady_state_tree(r)?;
    let p = PopulationVector::new(ln_p.map(f64::exp))?;
    let (ql, qr) = heat_currents(r, &p, e);
    let phi = entropy_flux(ql, qr, t_left, t_right)?;
    Ok(ThermoFlows {
        qdot_left: ql,
        qdot_right: qr,
        phi,
        pi: production_from_ln(r, &ln_p),
    })
}

pub fn entropy_production_steady(r: &RateSet, e: &EigenSystem, t_left: f64, t_right: f64) -> Result<f64> {
    steady_flows(r, e, t_left, t_right).map(|f| f.pi)
}

/// Classical RK4 integration of dP/dt = M P, recording every step.
pub fn evolve_populations(r: &RateSet, p0: &PopulationVector, t_end: f64, dt: f64) -> Result<Trajectory> {
    evolve_populations_strided(r, p0, t_end, dt, 1)
}

/// As [`evolve_populations`] but keeps only every `stride`-th step (the
/// initial and final states are always kept).
///
/// The step actually taken is t_end / ceil(t_end / dt), never larger than
/// `dt`.
pub fn evolve_populations_strided(
    r: &RateSet,
    p0: &PopulationVector,
    t_end: f64,
    dt: f64,
    stride: usize,
) -> Result<Trajectory> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::invalid("dt", format!("must be positive, got {dt}")));
    }
    if !(t_end >= dt && t_end.is_finite()) {
        return Err(Error::invalid(
            "t_end",
            format!("must be at least dt = {dt}, got {t_end}"),
        ));
    }
    if stride == 0 {
        return Err(Error::invalid("stride", "must be at least 1"));
    }
    let g = generator_matrix(r);
    let product = dt * g.max_escape_rate();
    if product > STABILITY_LIMIT {
        return Err(Error::StabilityGuard { dt, product });
    }
    Ok(integrate(&g, p0, t_end, dt, stride))
}

fn integrate(g: &RateGenerator, p0: &PopulationVector, t_end: f64, dt: f64, stride: usize) -> Trajectory {
    let steps = (t_end / dt).ceil() as usize;
    let h = t_end / steps as f64;
    let m = g.matrix();

    let mut times = Vec::with_capacity(steps / stride + 2);
    let mut populations = Vec::with_capacity(steps / stride + 2);
    times.push(0.0);
    populations.push(*p0);

    let mut p = p0.to_vector();
    for step in 1..=steps {
        let k1 = m * p;
        let k2 = m * (p + k1 * (h / 2.0));
        let k3 = m * (p + k2 * (h / 2.0));
        let k4 = m * (p + k3 * h);
        p += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        if step % stride == 0 || step == steps {
            times.push(step as f64 * h);
            populations.push(snapshot(&p));
        }
    }
    Trajectory { times, populations }
}

fn snapshot(p: &Vector4<f64>) -> PopulationVector {
    let clipped = [p[0], p[1], p[2], p[3]].map(|x| if x < 0.0 && x > -SNAPSHOT_CLIP { 0.0 } else { x });
    // RK4 is positivity preserving for dt·max|M_ii| ≤ 1, well inside the guard.
    PopulationVector::new(clipped).expect("integrator left the probability simplex")
}

/// Derivative at `ts[at]` of the quadratic through three samples.
fn three_point_derivative(ts: [f64; 3], ys: [f64; 3], at: usize) -> f64 {
    let x = ts[at];
    let [t0, t1, t2] = ts;
    let [y0, y1, y2] = ys;
    y0 * ((x - t1) + (x - t2)) / ((t0 - t1) * (t0 - t2))
        + y1 * ((x - t0) + (x - t2)) / ((t1 - t0) * (t1 - t2))
        + y2 * ((x - t0) + (x - t1)) / ((t2 - t0) * (t2 - t1))
}

/// dS/dt, Φ and Π = dS/dt + Φ at every sample of a trajectory. dS/dt uses
/// three-point finite differences (centred inside, one-sided at the ends).
pub fn entropy_balance_along(
    traj: &Trajectory,
    r: &RateSet,
    e: &EigenSystem,
    t_left: f64,
    t_right: f64,
) -> Result<Vec<EntropyBalance>> {
    let n = traj.len();
    let s: Vec<f64> = traj.populations.iter().map(|p| p.entropy()).collect();
    let ts = &traj.times;
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let ds_dt = match n {
            0 | 1 => 0.0,
            2 => (s[1] - s[0]) / (ts[1] - ts[0]),
            _ => {
                let (lo, at) = match k {
                    0 => (0, 0),
                    k if k == n - 1 => (n - 3, 2),
                    k => (k - 1, 1),
                };
                three_point_derivative([ts[lo], ts[lo + 1], ts[lo + 2]], [s[lo], s[lo + 1], s[lo + 2]], at)
            }
        };
        let (ql, qr) = heat_currents(r, &traj.populations[k], e);
        let phi = entropy_flux(ql, qr, t_left, t_right)?;
        out.push(EntropyBalance {
            time: ts[k],
            entropy: s[k],
            ds_dt,
            phi,
            pi: ds_dt + phi,
        });
    }
    Ok(out)
}
