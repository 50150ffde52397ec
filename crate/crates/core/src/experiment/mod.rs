//! Sweeps, single-point evaluation, noise calibration and the file
//! artifacts (layout cache, pulse programs) behind the `pqcm` tool.

mod artifacts;
mod config;
mod point;
mod sweep;

pub use artifacts::{
    compile_experiment, find_layout, held_out_residual, CompileReport, FindLayout, COMPILE_TOL,
    HELD_OUT,
};
pub use config::{parse_angle, parse_signs, Level, SweepConfig};
pub use point::{
    evaluate_point, expected_failure, machine_propagator, point_rng, sample_record, Engine,
    PointResult,
};
pub use sweep::{
    calibrate_noise, default_calibration_deltas, load_layout, mean_infidelity, run_sweep,
    sha256_hex, Calibration, CalibrationPoint, LoadedLayout, Provenance, RunReport, SweepRow,
    CLOSURE_TOL, INFIDELITY_BAND, TARGET_INFIDELITY,
};
