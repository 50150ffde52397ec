use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use crate::cloning::{
    analyze_output, build_cloning_unitary, clone_angles, failure_state, CloneSet, Layout,
};
use crate::error::{Error, Result};
use crate::nmr::{full_experiment_sequence, pseudo_pure, sequence_propagator, PulseSequence};
use crate::quantum::{embed, gates, BlochVector, Branch, Propagate, StateVector, Unitary};
use crate::readout::{
    fidelity_for_set, read_out, reference_signal, tomography_single_qubit, CloneReadout,
    ExperimentRecord,
};
use crate::ORIGINAL;

use super::config::SweepConfig;

/// One concrete model of the machine.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Engine {
    Gate,
    Pulse,
}

impl std::fmt::Display for Engine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Engine::Gate => "gate",
            Engine::Pulse => "pulse",
        })
    }
}

/// Everything computed for one `(θ, sign)` on one engine.
#[derive(Clone, Debug, PartialEq)]
pub struct PointResult {
    pub engine: Engine,
    pub set: CloneSet,
    /// Probe-`|0⟩` probability of the pure-state run.
    pub success_probability: f64,
    /// Fidelities of the reduced clone states of the pure-state run.
    pub state_fidelities: (f64, f64),
    /// Pair state left behind when the probe reads `|1⟩`.
    pub failure: Branch,
    /// Estimates from the simulated spectra of the pseudo-pure run.
    pub record: ExperimentRecord,
    pub readouts: [CloneReadout; 2],
    /// The simulated sequence, pulse engine only.
    pub sequence: Option<PulseSequence>,
}

/// Preparation plus cloning, starting from `|000⟩`.
pub fn machine_propagator(
    set: &CloneSet,
    engine: Engine,
    cfg: &SweepConfig,
    layout: Option<&Layout>,
) -> Result<(Unitary, Option<PulseSequence>)> {
    match engine {
        Engine::Gate => {
            let prep = embed(&gates::ry(set.signed_theta()), &[ORIGINAL], 3)?;
            Ok((build_cloning_unitary(set.theta())?.compose(&prep), None))
        }
        Engine::Pulse => {
            let layout = layout
                .ok_or_else(|| Error::InvalidLayout("the pulse engine needs a layout".into()))?;
            let seq = full_experiment_sequence(set.theta(), set.sign(), &cfg.system, layout)?
                .with_amplitude_error(&cfg.amplitude_error());
            Ok((sequence_propagator(&seq, &cfg.system)?, Some(seq)))
        }
    }
}

/// Runs one point in expectation mode.
pub fn evaluate_point(
    set: &CloneSet,
    engine: Engine,
    cfg: &SweepConfig,
    layout: Option<&Layout>,
) -> Result<PointResult> {
    let (u, sequence) = machine_propagator(set, engine, cfg, layout)?;
    let pure = analyze_output(&u.apply(&StateVector::basis(3, 0)))?;
    let state_fidelities = pure.fidelities(set)?;

    let pps = pseudo_pure(cfg.epsilon)?.into_rho();
    let reference = reference_signal(&pps, &cfg.system)?;
    let (record, readouts) = read_out(set, &pps.propagate(&u), &cfg.system, reference)?;
    Ok(PointResult {
        engine,
        set: *set,
        success_probability: pure.success_prob,
        state_fidelities,
        failure: pure.failure_state,
        record,
        readouts,
        sequence,
    })
}

/// Rebuilds the derived fields of a record from an efficiency and two
/// Bloch vectors.
fn record_from(set: &CloneSet, gamma_est: f64, rb: BlochVector, rc: BlochVector) -> Result<ExperimentRecord> {
    let tb = tomography_single_qubit(rb.x, rb.y, rb.z);
    let tc = tomography_single_qubit(rc.x, rc.y, rc.z);
    Ok(ExperimentRecord {
        theta: set.theta(),
        sign: set.sign(),
        gamma_theory: clone_angles(set.theta())?.gamma,
        gamma_est,
        bloch_b: rb,
        bloch_c: rc,
        fidelity_b: fidelity_for_set(&tb.bloch, set),
        fidelity_c: fidelity_for_set(&tc.bloch, set),
        tomography_b: tb,
        tomography_c: tc,
    })
}

fn binomial_fraction(rng: &mut ChaCha8Rng, shots: u64, p: f64) -> Result<f64> {
    let dist = Binomial::new(shots, p.clamp(0.0, 1.0))
        .map_err(|e| Error::Config(format!("binomial sampling: {e}")))?;
    Ok(dist.sample(rng) as f64 / shots as f64)
}

/// Replaces the exact estimates by finite-shot ones: the efficiency as a
/// binomial success fraction, each Bloch component as the mean of `shots`
/// ±1 outcomes.
pub fn sample_record(record: &ExperimentRecord, shots: u64, rng: &mut ChaCha8Rng) -> Result<ExperimentRecord> {
    if shots == 0 {
        return Err(Error::Config("shots must be positive".into()));
    }
    let set = CloneSet::new(record.theta, record.sign)?;
    let gamma = binomial_fraction(rng, shots, record.gamma_est)?;
    let mut bloch = |r: &BlochVector| -> Result<BlochVector> {
        let mut comp = [0.0; 3];
        for (out, v) in comp.iter_mut().zip([r.x, r.y, r.z]) {
            *out = 2.0 * binomial_fraction(rng, shots, 0.5 * (1.0 + v))? - 1.0;
        }
        Ok(BlochVector::new(comp[0], comp[1], comp[2]))
    };
    let rb = bloch(&record.bloch_b)?;
    let rc = bloch(&record.bloch_c)?;
    record_from(&set, gamma, rb, rc)
}

/// Generator of the point with index `index` in a sweep.
pub fn point_rng(seed: u64, index: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_add(index as u64))
}

/// Noise-free failure branch expected at `θ`: `None` for the orthogonal
/// pair, whose failure probability vanishes.
pub fn expected_failure(theta: f64) -> Result<Option<StateVector>> {
    if clone_angles(theta)?.gamma >= 1.0 {
        return Ok(None);
    }
    failure_state(theta).map(Some)
}
