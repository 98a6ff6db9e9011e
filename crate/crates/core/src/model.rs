//! The two-qubit XXZ working substance.
//!
//! `H = ½ [B σz¹ + B σz² + J (σx¹σx² + σy¹σy²) + Δ σz¹σz²]` with ħ = k_B = 1.
//! Its eigenstates are known in closed form:
//!
//! | state | vector               | energy         |
//! |-------|----------------------|----------------|
//! | Φ1    | \|00⟩                | (Δ − 2B)/2     |
//! | Φ2    | \|11⟩                | (Δ + 2B)/2     |
//! | Φ3    | (\|01⟩ − \|10⟩)/√2   | −Δ/2 − J       |
//! | Φ4    | (\|01⟩ + \|10⟩)/√2   | −Δ/2 + J       |
//!
//! Bath coupling goes through σx on either qubit, which only connects the
//! product states {Φ1, Φ2} with the entangled states {Φ3, Φ4}.

use std::fmt;

use nalgebra::{Matrix2, Matrix4};

use crate::error::{Error, Result};

/// Smallest |J| accepted; at J = 0 the levels Φ3 and Φ4 coincide.
pub const MIN_COUPLING: f64 = 1e-9;

/// Gaps below this are treated as exactly degenerate.
pub const OMEGA_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    b: f64,
    j: f64,
    delta: f64,
}

impl SystemParams {
    pub fn new(b: f64, j: f64, delta: f64) -> Result<Self> {
        for (name, v) in [("B", b), ("J", j), ("delta", delta)] {
            if !v.is_finite() {
                return Err(Error::invalid(name, format!("must be finite, got {v}")));
            }
        }
        if j.abs() < MIN_COUPLING {
            return Err(Error::invalid(
                "J",
                format!("|J| must be at least {MIN_COUPLING:e} (degenerate working substance)"),
            ));
        }
        Ok(Self { b, j, delta })
    }

    pub fn field(&self) -> f64 {
        self.b
    }

    pub fn coupling(&self) -> f64 {
        self.j
    }

    pub fn anisotropy(&self) -> f64 {
        self.delta
    }

    /// Same substance with a different anisotropy (the adiabatic stroke knob).
    pub fn with_anisotropy(&self, delta: f64) -> Result<Self> {
        Self::new(self.b, self.j, delta)
    }
}

/// Energy eigenstates, labelled as in the module table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum State {
    Phi1,
    Phi2,
    Phi3,
    Phi4,
}

impl State {
    pub const ALL: [State; 4] = [State::Phi1, State::Phi2, State::Phi3, State::Phi4];

    /// Zero-based position in population and energy vectors.
    pub fn index(self) -> usize {
        self as usize
    }

    /// One-based label k of |Φk⟩.
    pub fn label(self) -> usize {
        self.index() + 1
    }

    pub fn from_label(label: usize) -> Option<State> {
        State::ALL.get(label.checked_sub(1)?).copied()
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenSystem {
    energies: [f64; 4],
}

impl EigenSystem {
    pub fn energies(&self) -> [f64; 4] {
        self.energies
    }

    pub fn energy(&self, s: State) -> f64 {
        self.energies[s.index()]
    }
}

pub fn eigenenergies(p: &SystemParams) -> EigenSystem {
    let SystemParams { b, j, delta } = *p;
    EigenSystem {
        energies: [
            (delta - 2.0 * b) / 2.0,
            (delta + 2.0 * b) / 2.0,
            -delta / 2.0 - j,
            -delta / 2.0 + j,
        ],
    }
}

/// The Hamiltonian in the product basis {|00⟩, |01⟩, |10⟩, |11⟩}.
///
/// Built from Kronecker products of Pauli matrices, independently of the
/// closed-form spectrum; it exists to check `eigenenergies`. The single-qubit
/// convention is σz|0⟩ = −|0⟩, which is what makes |00⟩ the state with energy
/// (Δ − 2B)/2.
pub fn hamiltonian_matrix(p: &SystemParams) -> Matrix4<f64> {
    let id = Matrix2::<f64>::identity();
    let sx = Matrix2::new(0.0, 1.0, 1.0, 0.0);
    let sz = Matrix2::new(-1.0, 0.0, 0.0, 1.0);
    // iσy is real, and σy⊗σy = −(iσy)⊗(iσy).
    let isy = Matrix2::new(0.0, 1.0, -1.0, 0.0);

    let z1 = sz.kronecker(&id);
    let z2 = id.kronecker(&sz);
    let xx = sx.kronecker(&sx);
    let yy = -isy.kronecker(&isy);
    let zz = sz.kronecker(&sz);

    let h = (z1 + z2) * p.b + (xx + yy) * p.j + zz * p.delta;
    let h = h * 0.5;
    Matrix4::from_iterator(h.iter().copied())
}

/// Index of the lowest level; ties resolve to the lowest label.
pub fn ground_state_index(e: &EigenSystem) -> State {
    let mut best = State::Phi1;
    for s in State::ALL {
        if e.energy(s) < e.energy(best) {
            best = s;
        }
    }
    best
}

/// The four bath-coupled level pairs. (Φ1, Φ2) and (Φ3, Φ4) are never connected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pair {
    P13,
    P14,
    P23,
    P24,
}

impl Pair {
    pub const ALL: [Pair; 4] = [Pair::P13, Pair::P14, Pair::P23, Pair::P24];

    /// (product state, entangled state)
    pub fn states(self) -> (State, State) {
        match self {
            Pair::P13 => (State::Phi1, State::Phi3),
            Pair::P14 => (State::Phi1, State::Phi4),
            Pair::P23 => (State::Phi2, State::Phi3),
            Pair::P24 => (State::Phi2, State::Phi4),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Pair::P13 => "13",
            Pair::P14 => "14",
            Pair::P23 => "23",
            Pair::P24 => "24",
        }
    }

    /// Whether the pair couples to the singlet Φ3.
    pub fn involves_singlet(self) -> bool {
        matches!(self, Pair::P13 | Pair::P23)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub pair: Pair,
    /// Higher-energy member of the pair (emission goes upper → lower).
    pub upper: State,
    pub lower: State,
    /// E_upper − E_lower, never negative.
    pub omega: f64,
    /// Coupling weight to the left bath, (ε ∓ 1)²/2.
    pub left_weight: f64,
    /// Coupling weight to the right bath, always 1/2.
    pub right_weight: f64,
    pub degenerate: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionTable {
    entries: [Transition; 4],
    epsilon: f64,
}

impl TransitionTable {
    pub fn entries(&self) -> &[Transition; 4] {
        &self.entries
    }

    pub fn get(&self, pair: Pair) -> &Transition {
        &self.entries[pair as usize]
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

/// Canonical transition table for asymmetry `epsilon`.
///
/// The left bath couples through σx¹ + ε σx², the right bath through σx²
/// alone. Only ε = 0 (symmetric) and ε = 1 (asymmetric) are physically
/// validated; intermediate values are accepted for exploration.
pub fn transition_table(e: &EigenSystem, epsilon: f64) -> Result<TransitionTable> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::invalid("epsilon", format!("must lie in [0, 1], got {epsilon}")));
    }
    let entries = Pair::ALL.map(|pair| {
        let (a, b) = pair.states();
        let gap = e.energy(a) - e.energy(b);
        let (upper, lower) = if gap < 0.0 { (b, a) } else { (a, b) };
        let left_weight = if pair.involves_singlet() {
            (epsilon - 1.0).powi(2) / 2.0
        } else {
            (epsilon + 1.0).powi(2) / 2.0
        };
        Transition {
            pair,
            upper,
            lower,
            omega: gap.abs(),
            left_weight,
            right_weight: 0.5,
            degenerate: gap.abs() < OMEGA_EPS,
        }
    });
    Ok(TransitionTable { entries, epsilon })
}
