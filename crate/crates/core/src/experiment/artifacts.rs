use std::path::Path;
use std::time::{Duration, Instant};

use crate::cloning::{
    input_state, search_layout, target_output, verify_layout, CloneSet, ControlPolarity,
    Layout, LayoutCache, SearchOutcome, Sign,
};
use crate::error::Result;
use crate::nmr::{full_experiment_sequence, sequence_propagator, PulseSequence, SpinSystem};

use super::sweep::{load_layout, LoadedLayout};

/// Held-out angles checked after every search or cache load.
pub const HELD_OUT: [f64; 2] = [std::f64::consts::FRAC_PI_6, 0.37];

#[derive(Clone, Debug, PartialEq)]
pub enum FindLayout {
    /// An existing cache passed verification; nothing was searched.
    Verified(LoadedLayout),
    /// A search ran; on success the cache was written.
    Searched {
        outcome: SearchOutcome,
        elapsed: Duration,
        written: Option<LoadedLayout>,
    },
}

/// Verifies the cache at `path` if it exists, otherwise searches on `grid`
/// and writes the first passing layout there. `force` skips the cache.
pub fn find_layout(
    path: &Path,
    grid: &[f64],
    tolerance: f64,
    polarity: ControlPolarity,
    force: bool,
) -> Result<FindLayout> {
    if !force && path.exists() {
        return load_layout(path).map(FindLayout::Verified);
    }
    let start = Instant::now();
    let outcome = search_layout(grid, tolerance, polarity)?;
    let elapsed = start.elapsed();
    let written = match outcome.found() {
        Some(candidate) => {
            let cache = LayoutCache {
                grid: grid.to_vec(),
                tolerance,
                layout: candidate.layout.clone(),
            };
            cache.save(path)?;
            Some(load_layout(path)?)
        }
        None => None,
    };
    Ok(FindLayout::Searched {
        outcome,
        elapsed,
        written,
    })
}

/// Worst residual of `layout` at [`HELD_OUT`].
pub fn held_out_residual(layout: &Layout) -> Result<f64> {
    verify_layout(layout, &HELD_OUT)
}

/// A compiled experiment and its self-checks.
#[derive(Clone, Debug, PartialEq)]
pub struct CompileReport {
    pub set: CloneSet,
    pub sequence: PulseSequence,
    /// Seconds of free evolution.
    pub duration: f64,
    /// Ray distance between the simulated output and the ideal one.
    pub output_distance: f64,
    /// Re-parsing the text form gives an identical propagator.
    pub round_trip_exact: bool,
}

/// Output tolerance of the compiled sequence.
pub const COMPILE_TOL: f64 = 1e-6;

impl CompileReport {
    pub fn passed(&self) -> bool {
        self.output_distance < COMPILE_TOL && self.round_trip_exact
    }
}

pub fn compile_experiment(theta: f64, sign: Sign, sys: &SpinSystem, layout: &Layout) -> Result<CompileReport> {
    let set = CloneSet::new(theta, sign)?;
    let sequence = full_experiment_sequence(theta, sign, sys, layout)?;
    let u = sequence_propagator(&sequence, sys)?;
    let out = u.apply(&input_state(&CloneSet::new(0.0, Sign::Plus)?));
    let output_distance = out.ray_distance(&target_output(&set)?);
    let reparsed = PulseSequence::from_text(&sequence.to_text())?;
    let round_trip_exact = reparsed == sequence && sequence_propagator(&reparsed, sys)? == u;
    Ok(CompileReport {
        set,
        duration: sequence.total_duration(),
        sequence,
        output_distance,
        round_trip_exact,
    })
}
