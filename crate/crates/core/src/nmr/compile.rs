//! Gate-by-gate translation into hard pulses and delays.
//!
//! Every two-qubit gate reduces to local rotations around one conditional
//! phase `exp(i·a·σz⊗σz)`, realised as a delay under the coupling split into
//! four equal periods. π pulses on the spectator after periods 1 and 3 and
//! on the active pair after periods 2 and 4 cancel every offset and every
//! coupling to the spectator. The sign of `a` relative to `J` is fixed by
//! conjugating the block with π pulses on the target.
//!
//! z rotations are frame changes: exact, instantaneous and free of rf
//! error. Compiled gates match the ideal unitaries up to a global phase.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::cloning::{CloneSet, Gate, GateKind, Layout, Sign};
use crate::error::{Error, Result};

use super::pulse::{Pulse, PulseSequence, SpinSet, PHASE_X};
use super::system::{SpinSystem, SPIN_LABELS};

fn x(seq: &mut PulseSequence, spin: usize, flip: f64) -> Result<()> {
    seq.pulse(Pulse::x(spin, flip)?);
    Ok(())
}

fn y(seq: &mut PulseSequence, spin: usize, flip: f64) -> Result<()> {
    seq.pulse(Pulse::y(spin, flip)?);
    Ok(())
}

fn z(seq: &mut PulseSequence, spin: usize, angle: f64) -> Result<()> {
    seq.frame(SpinSet::single(spin), angle)
}

/// Total delay of a refocused `exp(i·a·σz_i σz_j)` block.
pub fn zz_time(a: f64, j_hz: f64) -> f64 {
    2.0 * a.abs() / (PI * j_hz.abs())
}

/// Appends `exp(i·a·σz_i σz_j)` for the pair `(i, j)`.
pub fn zz_block(seq: &mut PulseSequence, sys: &SpinSystem, i: usize, j: usize, a: f64) -> Result<()> {
    let jij = sys.coupling(i, j);
    if jij == 0.0 {
        return Err(Error::ZeroCoupling(SPIN_LABELS[i], SPIN_LABELS[j]));
    }
    if a == 0.0 {
        return Ok(());
    }
    let k = 3 - i - j;
    let quarter = zz_time(a, jij) / 4.0;
    // free evolution alone gives exp(−i·(πJT/2)·σzσz)
    let flip_sign = a.signum() == jij.signum();
    let pair = SpinSet::new(&[i, j])?;
    if flip_sign {
        x(seq, j, PI)?;
    }
    for step in 0..4 {
        seq.delay(quarter)?;
        if step % 2 == 0 {
            x(seq, k, PI)?;
        } else {
            seq.pulse(Pulse::new(pair, PHASE_X, PI)?);
        }
    }
    if flip_sign {
        x(seq, j, PI)?;
    }
    Ok(())
}

/// Pulse sequence realising one gate up to a global phase.
pub fn compile_gate(gate: &Gate, sys: &SpinSystem) -> Result<PulseSequence> {
    gate.validate()?;
    let mut seq = PulseSequence::default();
    let t = gate.target;
    match gate.kind {
        GateKind::H => {
            // H = Ry(π/2)·Rz(π) up to phase
            z(&mut seq, t, PI)?;
            y(&mut seq, t, FRAC_PI_2)?;
        }
        GateKind::Cnot => {
            let ctl = gate.control.expect("validated");
            let s = if ctl.on_zero { -1.0 } else { 1.0 };
            // exp(iπ/4 (1 − sZ_c)(1 − X_t)) = Rz_c(sπ/2)·Rx_t(π/2)·exp(i sπ/4 Z_c X_t)
            y(&mut seq, t, -FRAC_PI_2)?;
            zz_block(&mut seq, sys, ctl.qubit, t, s * PI / 4.0)?;
            y(&mut seq, t, FRAC_PI_2)?;
            x(&mut seq, t, FRAC_PI_2)?;
            z(&mut seq, ctl.qubit, s * FRAC_PI_2)?;
        }
        GateKind::Cry => {
            let ctl = gate.control.expect("validated");
            let s = if ctl.on_zero { -1.0 } else { 1.0 };
            let phi = gate.angle.expect("validated");
            // Ry_t(φ/2)·exp(i sφ/4 Z_c Y_t)
            if phi != 0.0 {
                x(&mut seq, t, FRAC_PI_2)?;
                zz_block(&mut seq, sys, ctl.qubit, t, s * phi / 4.0)?;
                x(&mut seq, t, -FRAC_PI_2)?;
                y(&mut seq, t, phi / 2.0)?;
            } else if sys.coupling(ctl.qubit, t) == 0.0 {
                return Err(Error::ZeroCoupling(SPIN_LABELS[ctl.qubit], SPIN_LABELS[t]));
            }
        }
    }
    Ok(seq)
}

pub fn compile_circuit(gates: &[Gate], sys: &SpinSystem) -> Result<PulseSequence> {
    let mut seq = PulseSequence::default();
    for g in gates {
        seq.append(&compile_gate(g, sys)?);
    }
    Ok(seq)
}

/// Preparation of spin b in `ry(±θ)|0⟩` followed by the compiled layout.
pub fn full_experiment_sequence(
    theta: f64,
    sign: Sign,
    sys: &SpinSystem,
    layout: &Layout,
) -> Result<PulseSequence> {
    let set = CloneSet::new(theta, sign)?;
    let mut seq = PulseSequence::default();
    y(&mut seq, crate::ORIGINAL, set.signed_theta())?;
    let circuit = layout.instantiate(set.theta())?;
    seq.append(&compile_circuit(circuit.gates(), sys)?);
    Ok(seq)
}
