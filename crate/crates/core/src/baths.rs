//! Thermal reservoirs and the transition rates they induce.
//!
//! Both reservoirs are ohmic, J(ω) = κω, so for a transition of gap ω and
//! coupling weight w the rates are
//!
//! ```text
//! emission   (upper → lower):  w κ ω (1 + n(ω, T))
//! absorption (lower → upper):  w κ ω n(ω, T)
//! ```
//!
//! with n the Bose occupation. At ω → 0 both tend to w κ T.

use log::warn;

use crate::error::{Error, Result};
use crate::model::{Pair, State, Transition, TransitionTable};

/// Above this κ the weak-coupling (Markov) treatment is questionable.
pub const KAPPA_WARN: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathParams {
    t_left: f64,
    t_right: f64,
    kappa: f64,
    epsilon: f64,
}

impl BathParams {
    pub fn new(t_left: f64, t_right: f64, kappa: f64, epsilon: f64) -> Result<Self> {
        for (name, t) in [("T_L", t_left), ("T_R", t_right)] {
            if !(t.is_finite() && t >= 0.0) {
                return Err(Error::invalid(
                    name,
                    format!("temperature must be finite and >= 0, got {t}"),
                ));
            }
        }
        if !(kappa.is_finite() && kappa > 0.0) {
            return Err(Error::invalid("kappa", format!("must be positive, got {kappa}")));
        }
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(Error::invalid("epsilon", format!("must lie in [0, 1], got {epsilon}")));
        }
        if kappa > KAPPA_WARN {
            warn!("kappa = {kappa} is outside the weak-coupling regime (kappa << 1)");
        }
        Ok(Self {
            t_left,
            t_right,
            kappa,
            epsilon,
        })
    }

    pub fn temperature(&self, side: Side) -> f64 {
        match side {
            Side::Left => self.t_left,
            Side::Right => self.t_right,
        }
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

/// Bose-Einstein occupation 1/(e^{ω/T} − 1); zero at T = 0.
pub fn bose_occupation(omega: f64, t: f64) -> Result<f64> {
    if !(omega > 0.0) {
        return Err(Error::invalid("omega", format!("must be positive, got {omega}")));
    }
    if !(t >= 0.0) {
        return Err(Error::invalid("T", format!("must be >= 0, got {t}")));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    // expm1 overflows to +inf for huge ω/T, giving exactly 0.
    Ok(1.0 / (omega / t).exp_m1())
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SideRates {
    /// upper → lower
    pub emission: f64,
    /// lower → upper
    pub absorption: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairRates {
    pub transition: Transition,
    pub left: SideRates,
    pub right: SideRates,
    /// Total absorption over both baths (A_ij).
    pub absorption_total: f64,
    /// Total emission over both baths (E_ij).
    pub emission_total: f64,
    /// ln of the left and right absorption rates, kept separately because
    /// e^{−ω/T} underflows long before its logarithm loses precision.
    ln_absorption: [f64; 2],
}

impl PairRates {
    pub fn side(&self, side: Side) -> &SideRates {
        match side {
            Side::Left => &self.left,
            Side::Right => &self.right,
        }
    }

    /// ln of the absorption rate of one bath; −∞ when it is exactly zero.
    pub fn ln_absorption(&self, side: Side) -> f64 {
        self.ln_absorption[side as usize]
    }

    /// ln of the total absorption rate, accurate even where the rate itself
    /// underflows.
    pub fn ln_absorption_total(&self) -> f64 {
        ln_add(self.ln_absorption[0], self.ln_absorption[1])
    }
}

/// ln(e^a + e^b) without overflow or underflow.
pub(crate) fn ln_add(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateSet {
    pairs: [PairRates; 4],
}

impl RateSet {
    pub fn pairs(&self) -> &[PairRates; 4] {
        &self.pairs
    }

    pub fn get(&self, pair: Pair) -> &PairRates {
        &self.pairs[pair as usize]
    }

    /// Total rate for the jump `from → to`, summed over both baths. Zero for
    /// pairs with no coupling.
    pub fn directed(&self, from: State, to: State) -> f64 {
        self.pairs
            .iter()
            .find_map(|pr| {
                let t = &pr.transition;
                if t.upper == from && t.lower == to {
                    Some(pr.emission_total)
                } else if t.lower == from && t.upper == to {
                    Some(pr.absorption_total)
                } else {
                    None
                }
            })
            .unwrap_or(0.0)
    }

    /// Builds a rate set from explicit per-pair rates. Mostly for tests and
    /// for probing the generator with hand-made inputs.
    pub fn from_parts(table: &TransitionTable, rates: [(SideRates, SideRates); 4]) -> Self {
        let pairs = std::array::from_fn(|k| pair_rates(table.entries()[k], rates[k].0, rates[k].1));
        Self { pairs }
    }

    /// All rates multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let scale = |s: SideRates| SideRates {
            emission: s.emission * factor,
            absorption: s.absorption * factor,
        };
        let pairs = self.pairs.map(|p| PairRates {
            ln_absorption: p.ln_absorption.map(|l| l + factor.ln()),
            ..pair_rates(p.transition, scale(p.left), scale(p.right))
        });
        Self { pairs }
    }
}

fn pair_rates(transition: Transition, left: SideRates, right: SideRates) -> PairRates {
    PairRates {
        transition,
        left,
        right,
        absorption_total: left.absorption + right.absorption,
        emission_total: left.emission + right.emission,
        ln_absorption: [left.absorption.ln(), right.absorption.ln()],
    }
}

/// ln of the absorption rate, using ln n = −ω/T − ln(1 − e^{−ω/T}).
fn ln_absorption(tr: &Transition, weight: f64, kappa: f64, t: f64, rates: &SideRates) -> f64 {
    if weight == 0.0 || t == 0.0 || tr.degenerate {
        return rates.absorption.ln();
    }
    let x = tr.omega / t;
    (weight * kappa * tr.omega).ln() - x - (-(-x).exp_m1()).ln()
}

fn side_rates(tr: &Transition, weight: f64, kappa: f64, t: f64) -> SideRates {
    if weight == 0.0 {
        return SideRates::default();
    }
    if tr.degenerate {
        let r = weight * kappa * t;
        return SideRates {
            emission: r,
            absorption: r,
        };
    }
    let n = bose_occupation(tr.omega, t).expect("non-degenerate gap is positive");
    let base = weight * kappa * tr.omega;
    SideRates {
        emission: base * (1.0 + n),
        absorption: base * n,
    }
}

pub fn transition_rates(table: &TransitionTable, b: &BathParams) -> RateSet {
    let pairs = table.entries().map(|tr| {
        let left = side_rates(&tr, tr.left_weight, b.kappa, b.t_left);
        let right = side_rates(&tr, tr.right_weight, b.kappa, b.t_right);
        PairRates {
            ln_absorption: [
                ln_absorption(&tr, tr.left_weight, b.kappa, b.t_left, &left),
                ln_absorption(&tr, tr.right_weight, b.kappa, b.t_right, &right),
            ],
            ..pair_rates(tr, left, right)
        }
    });
    RateSet { pairs }
}

/// Deviation of one aggregate from its high-gradient limit expression.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregateDeviation {
    pub pair: Pair,
    pub absorption: f64,
    pub emission: f64,
}

/// Compares the aggregates A_ij, E_ij against their cold-left-bath limits
/// for the asymmetric machine:
///
/// ```text
/// A_ij = γ_ij^(R,a)
/// E_13 = γ_13^(R,e),  E_23 = γ_23^(R,e)
/// E_14 = γ_14^(R,e) + c_14,  E_24 = γ_24^(R,e) + c_24
/// ```
///
/// where c_ij = w_L κ ω_ij is the zero-temperature emission into the left
/// bath. Deviations are absolute.
pub fn high_gradient_aggregates(table: &TransitionTable, b: &BathParams) -> Result<[AggregateDeviation; 4]> {
    if b.epsilon != 1.0 || table.epsilon() != 1.0 {
        return Err(Error::invalid(
            "epsilon",
            "high-gradient limits are defined only for the asymmetric coupling (epsilon = 1)",
        ));
    }
    let rates = transition_rates(table, b);
    Ok(rates.pairs.map(|pr| {
        let tr = pr.transition;
        let constant = if tr.pair.involves_singlet() || tr.degenerate {
            0.0
        } else {
            tr.left_weight * b.kappa * tr.omega
        };
        AggregateDeviation {
            pair: tr.pair,
            absorption: (pr.absorption_total - pr.right.absorption).abs(),
            emission: (pr.emission_total - (pr.right.emission + constant)).abs(),
        }
    }))
}
