//! Stationary populations of the Pauli master equation dP/dt = M P.
//!
//! The primary route is a direct linear solve on the generator with one row
//! swapped for the normalisation constraint. A literal evaluation of the
//! closed-form solution and the Gibbs distribution serve as cross-checks.

use nalgebra::{Matrix4, Vector4};

use crate::baths::{ln_add, RateSet};
use crate::error::{Error, Result};
use crate::model::{EigenSystem, State};

/// Slack allowed on each probability and on the total.
pub const POPULATION_SLACK: f64 = 1e-12;

/// Denominators of the closed form below this are treated as zero.
pub const CLOSED_FORM_MIN_DENOMINATOR: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PopulationVector([f64; 4]);

impl PopulationVector {
    pub fn new(p: [f64; 4]) -> Result<Self> {
        if p.iter()
            .any(|x| !x.is_finite() || *x < -POPULATION_SLACK || *x > 1.0 + POPULATION_SLACK)
        {
            return Err(Error::invalid(
                "populations",
                format!("entries must lie in [0, 1], got {p:?}"),
            ));
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > POPULATION_SLACK {
            return Err(Error::invalid("populations", format!("must sum to 1, got {total}")));
        }
        Ok(Self(p))
    }

    /// Uniform distribution, the infinite-temperature state.
    pub fn maximally_mixed() -> Self {
        Self([0.25; 4])
    }

    /// Clips round-off negatives to zero and rescales to unit sum.
    pub(crate) fn from_clipped(p: [f64; 4]) -> Result<Self> {
        if p.iter().any(|x| !x.is_finite() || *x < -POPULATION_SLACK) {
            return Err(Error::Numerical(format!("population vector out of range: {p:?}")));
        }
        let clipped = p.map(|x| x.max(0.0));
        let total: f64 = clipped.iter().sum();
        if !(total > 0.0) {
            return Err(Error::Numerical("population vector has zero mass".into()));
        }
        Self::new(clipped.map(|x| x / total))
    }

    pub fn as_array(&self) -> [f64; 4] {
        self.0
    }

    pub fn get(&self, s: State) -> f64 {
        self.0[s.index()]
    }

    pub fn max_abs_diff(&self, other: &PopulationVector) -> f64 {
        self.0
            .iter()
            .zip(other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Shannon entropy −Σ P ln P (the von Neumann entropy of a diagonal state).
    pub fn entropy(&self) -> f64 {
        -self.0.iter().filter(|p| **p > 0.0).map(|p| p * p.ln()).sum::<f64>()
    }

    pub(crate) fn to_vector(self) -> Vector4<f64> {
        Vector4::from(self.0)
    }
}

/// Rate matrix M with dP/dt = M P. Columns sum to zero; off-diagonal
/// entries are non-negative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateGenerator(Matrix4<f64>);

impl RateGenerator {
    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.0
    }

    pub fn apply(&self, p: &PopulationVector) -> [f64; 4] {
        let v = self.0 * p.to_vector();
        [v[0], v[1], v[2], v[3]]
    }

    /// Largest |M_ii|, the fastest escape rate.
    pub fn max_escape_rate(&self) -> f64 {
        (0..4).map(|i| self.0[(i, i)].abs()).fold(0.0, f64::max)
    }

    /// Slowest non-zero relaxation rate: the smallest |Re λ| over the
    /// eigenvalues of M after discarding the stationary (zero) mode.
    pub fn spectral_gap(&self) -> Option<f64> {
        let mut ev: Vec<_> = self.0.complex_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
        let gap = ev[1..].iter().map(|z| z.re.abs()).fold(f64::INFINITY, f64::min);
        (gap.is_finite() && gap > 0.0).then_some(gap)
    }

    /// Number of closed communicating classes in the jump graph. A unique
    /// stationary distribution exists iff this is exactly one.
    pub fn closed_classes(&self) -> usize {
        let m = &self.0;
        // reach[i][j]: j reachable from i along jumps with positive rate
        let mut reach = [[false; 4]; 4];
        for i in 0..4 {
            reach[i][i] = true;
            for j in 0..4 {
                if i != j && m[(j, i)] > 0.0 {
                    reach[i][j] = true;
                }
            }
        }
        for k in 0..4 {
            for i in 0..4 {
                for j in 0..4 {
                    reach[i][j] |= reach[i][k] && reach[k][j];
                }
            }
        }
        // A state is recurrent when everything it reaches can reach it back;
        // classes are counted by their smallest member.
        (0..4)
            .filter(|&i| (0..4).all(|j| !reach[i][j] || reach[j][i]))
            .filter(|&i| (0..i).all(|j| !(reach[i][j] && reach[j][i])))
            .count()
    }
}

pub fn generator_matrix(r: &RateSet) -> RateGenerator {
    let mut m = Matrix4::zeros();
    for pr in r.pairs() {
        let u = pr.transition.upper.index();
        let l = pr.transition.lower.index();
        let e = pr.emission_total;
        let a = pr.absorption_total;
        m[(l, u)] += e;
        m[(u, u)] -= e;
        m[(u, l)] += a;
        m[(l, l)] -= a;
    }
    RateGenerator(m)
}

/// Stationary populations from M P = 0, Σ P = 1.
pub fn steady_state_solve(r: &RateSet) -> Result<PopulationVector> {
    solve_generator(&generator_matrix(r))
}

pub fn solve_generator(g: &RateGenerator) -> Result<PopulationVector> {
    let classes = g.closed_classes();
    if classes != 1 {
        return Err(Error::NonUniqueSteadyState {
            closed_classes: classes,
        });
    }
    let mut a = g.0;
    a.set_row(3, &nalgebra::RowVector4::repeat(1.0));
    let rhs = Vector4::new(0.0, 0.0, 0.0, 1.0);
    let p = a
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Numerical("constrained generator is singular".into()))?;
    PopulationVector::from_clipped([p[0], p[1], p[2], p[3]])
}

/// Stationary populations from the matrix-tree theorem: P_i is proportional
/// to the summed weight of all spanning trees directed towards i.
///
/// Every term is a product of non-negative rates, so each population keeps
/// full relative precision even when it is many orders of magnitude below
/// one. The linear solve only resolves populations to about 1e-16 absolute.
pub fn steady_state_tree(r: &RateSet) -> Result<PopulationVector> {
    PopulationVector::new(ln_steady_state_tree(r)?.map(f64::exp))
}

/// ln P_i from the matrix-tree theorem, evaluated entirely in log space so
/// that populations far below the smallest double stay finite.
pub fn ln_steady_state_tree(r: &RateSet) -> Result<[f64; 4]> {
    let mut ln_k = [[f64::NEG_INFINITY; 4]; 4];
    for pr in r.pairs() {
        let (u, l) = (pr.transition.upper.index(), pr.transition.lower.index());
        ln_k[u][l] = pr.emission_total.ln();
        ln_k[l][u] = pr.ln_absorption_total();
    }
    let mut ln_w = [f64::NEG_INFINITY; 4];
    for (root, slot) in ln_w.iter_mut().enumerate() {
        let others: Vec<usize> = (0..4).filter(|&i| i != root).collect();
        // each non-root state picks a parent; keep the choices that form a
        // tree rooted at `root`
        for code in 0..64 {
            let mut parent = [root; 4];
            let mut weight = 0.0;
            for (k, &node) in others.iter().enumerate() {
                let choice = (code >> (2 * k)) & 3;
                parent[node] = choice;
                weight += if choice == node {
                    f64::NEG_INFINITY
                } else {
                    ln_k[node][choice]
                };
            }
            if weight == f64::NEG_INFINITY {
                continue;
            }
            let rooted = others.iter().all(|&start| {
                let mut at = start;
                for _ in 0..3 {
                    at = parent[at];
                }
                at == root
            });
            if rooted {
                *slot = ln_add(*slot, weight);
            }
        }
    }
    let ln_total = ln_w.iter().copied().fold(f64::NEG_INFINITY, ln_add);
    if ln_total == f64::NEG_INFINITY {
        return Err(Error::NonUniqueSteadyState {
            closed_classes: generator_matrix(r).closed_classes(),
        });
    }
    Ok(ln_w.map(|w| w - ln_total))
}

/// Intermediate quantities of the closed-form solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedFormTerms {
    pub r1: f64,
    pub r2: f64,
}

/// Literal evaluation of the closed-form stationary state
///
/// ```text
/// P1 = (E13 r1 + E14 r2) / (r1 (A13 + A14)) · P3
/// P2 = (A23 r1 + A24 r2) / (r1 (E23 + E24)) · P3
/// P4 = r2 / r1 · P3
/// r1 = A13 E14 / ((A23 + E13)(A13 + A14)) + E23 A24 / ((A23 + E13)(E23 + E24))
/// r2 = 1 − A13 E13 / ((A23 + E13)(A13 + A14)) − E23 A23 / ((A23 + E13)(E23 + E24))
/// ```
///
/// The aggregates are directed rates: E1j is the total rate j → 1 and A1j
/// the rate 1 → j, while E2j is the rate 2 → j and A2j the rate j → 2. With
/// that reading the formulas are exact for every level ordering.
pub fn steady_state_closed_form(r: &RateSet) -> Result<PopulationVector> {
    closed_form_with_terms(r).map(|(p, _)| p)
}

pub fn closed_form_with_terms(r: &RateSet) -> Result<(PopulationVector, ClosedFormTerms)> {
    use State::*;
    let e13 = r.directed(Phi3, Phi1);
    let a13 = r.directed(Phi1, Phi3);
    let e14 = r.directed(Phi4, Phi1);
    let a14 = r.directed(Phi1, Phi4);
    let e23 = r.directed(Phi2, Phi3);
    let a23 = r.directed(Phi3, Phi2);
    let e24 = r.directed(Phi2, Phi4);
    let a24 = r.directed(Phi4, Phi2);

    let d3 = a23 + e13;
    let d1 = a13 + a14;
    let d2 = e23 + e24;
    for (which, value) in [("A23 + E13", d3), ("A13 + A14", d1), ("E23 + E24", d2)] {
        if value.abs() < CLOSED_FORM_MIN_DENOMINATOR {
            return Err(Error::ClosedFormInapplicable { which, value });
        }
    }
    let r1 = a13 * e14 / (d3 * d1) + e23 * a24 / (d3 * d2);
    let r2 = 1.0 - a13 * e13 / (d3 * d1) - e23 * a23 / (d3 * d2);
    if (r1 * d1).abs() < CLOSED_FORM_MIN_DENOMINATOR || (r1 * d2).abs() < CLOSED_FORM_MIN_DENOMINATOR {
        return Err(Error::ClosedFormInapplicable { which: "r1", value: r1 });
    }
    let f1 = (e13 * r1 + e14 * r2) / (r1 * d1);
    let f2 = (a23 * r1 + a24 * r2) / (r1 * d2);
    let f4 = r2 / r1;
    let p3 = 1.0 / (f1 + f2 + f4 + 1.0);
    let p = PopulationVector::from_clipped([f1 * p3, f2 * p3, p3, f4 * p3])?;
    Ok((p, ClosedFormTerms { r1, r2 }))
}

/// Thermal populations exp(−E_i/T)/Z.
pub fn gibbs_state(e: &EigenSystem, t: f64) -> Result<PopulationVector> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::invalid(
            "T",
            format!("Gibbs state needs a positive temperature, got {t}"),
        ));
    }
    let energies = e.energies();
    let e_min = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let w = energies.map(|x| (-(x - e_min) / t).exp());
    let z: f64 = w.iter().sum();
    PopulationVector::new(w.map(|x| x / z))
}
