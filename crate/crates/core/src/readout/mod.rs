//! Carbon-channel readout: peak integrals, the efficiency, Bloch-vector and
//! fidelity estimators, and single-qubit tomography.

mod estimators;
mod peaks;
mod record;

pub use estimators::{
    bloch_from_group, bloch_from_signals, efficiency_from_signals, fidelity_for_set,
    fidelity_from_bloch, tomography_single_qubit, Group, GroupedSignals, Tomography,
    MIN_GROUP_WEIGHT,
};
pub use peaks::{peak_integrals, peak_offset, reference_signal, Acquisition, PeakSet, PEAK_STATES};
pub use record::{
    estimate, read_out, write_csv, CloneReadout, ExperimentRecord, RecordSummary, CSV_HEADER,
};
