//! Quantum heat engines with a two-qubit Heisenberg XXZ working substance.
//!
//! The crate covers the spectrum of the two-qubit Hamiltonian, Pauli rate
//! equations for two ohmic baths, steady states and relaxation dynamics,
//! and the thermodynamics of three Otto-type cycles. Energies are in units
//! of the exchange coupling J, with ħ = k_B = 1.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baths;
pub mod cli;
pub mod cycles;
pub mod dynamics;
pub mod error;
pub mod model;
pub mod steady;
pub mod sweep;
pub mod table;

pub use baths::{transition_rates, BathParams, RateSet, Side};
pub use cycles::{evaluate_cycle, CycleKind, CycleParams, CycleResult, CycleSpec};
pub use dynamics::{entropy_balance_along, evolve_populations, steady_flows, ThermoFlows, Trajectory};
pub use error::{Error, Result};
pub use model::{eigenenergies, transition_table, EigenSystem, Pair, State, SystemParams};
pub use steady::{gibbs_state, steady_state_closed_form, steady_state_solve, PopulationVector};
pub use sweep::{figure_preset, run_sweep, run_sweep_with_threads, FigurePreset, SweepConfig};
