//! Liquid-state NMR model of the three-spin register: Hamiltonian, hard
//! pulses, delays, the gate compiler and pseudo-pure states.

mod compile;
mod dynamics;
mod pps;
mod pulse;
mod system;

pub use compile::{compile_circuit, compile_gate, full_experiment_sequence, zz_block, zz_time};
pub use dynamics::{
    apply_pulse, evolution_operator, evolve, hamiltonian, pulse_operator, sequence_propagator,
    simulate_sequence,
};
pub use pps::{pseudo_pure, PseudoPureState, DEFAULT_EPSILON};
pub use pulse::{AmplitudeError, Pulse, PulseEvent, PulseSequence, SpinSet, PHASE_X, PHASE_Y};
pub use system::{key_values, SpinSystem, J_AB, J_AC, J_BC, NUCLEI, SPIN_LABELS};
