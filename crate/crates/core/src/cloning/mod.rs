//! The probabilistic cloner: derived angles, target outputs, the cloning
//! unitary and its five-gate circuit.

mod layout;
mod machine;
mod params;

pub use layout::{
    default_search_grid, layout_residual, search_layout, verify_layout, AngleExpr,
    Control, ControlPolarity, Gate, GateCircuit, GateKind, Layout, LayoutCache, LayoutCandidate,
    LayoutGate, SearchOutcome, DEFAULT_SEARCH_TOL,
};
pub(crate) use layout::{parse_qubit, qubit_letter};
pub use machine::{
    analyze_output, build_cloning_unitary, clone_target, failure_state, input_bloch, input_state,
    run_clone, target_output, CloneRunResult,
};
pub use params::{clone_angles, CloneParameters, CloneSet, Sign};
