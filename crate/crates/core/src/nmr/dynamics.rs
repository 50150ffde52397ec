use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::quantum::{c, kron, max_abs, CMatrix, Propagate, Unitary, C64};

use super::pulse::{Pulse, PulseEvent, PulseSequence, SpinSet};
use super::system::SpinSystem;

const N_SPINS: usize = 3;
const DIM: usize = 1 << N_SPINS;

/// `I_z = σ_z/2` eigenvalue of `spin` in basis state `idx`.
fn iz(idx: usize, spin: usize) -> f64 {
    if (idx >> (N_SPINS - 1 - spin)) & 1 == 0 {
        0.5
    } else {
        -0.5
    }
}

/// `Σ ω_i I_z^i + 2π Σ_{i<j} J_ij I_z^i I_z^j` in rad/s. Diagonal in the
/// computational basis.
pub fn hamiltonian(sys: &SpinSystem) -> CMatrix {
    let mut h = CMatrix::zeros(DIM, DIM);
    for idx in 0..DIM {
        let mut e = 0.0;
        for i in 0..N_SPINS {
            e += sys.offset(i) * iz(idx, i);
            for j in i + 1..N_SPINS {
                e += 2.0 * PI * sys.coupling(i, j) * iz(idx, i) * iz(idx, j);
            }
        }
        h[(idx, idx)] = c(e, 0.0);
    }
    h
}

fn is_diagonal(h: &CMatrix) -> bool {
    (0..h.nrows()).all(|i| (0..h.ncols()).all(|j| i == j || h[(i, j)] == c(0.0, 0.0)))
}

/// `exp(−iHt)`. Diagonal Hamiltonians give exact phases; anything else goes
/// through a Hermitian eigendecomposition.
pub fn evolution_operator(h: &CMatrix, t: f64) -> Result<Unitary> {
    if !t.is_finite() || t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    let dev = max_abs(&(h - h.adjoint()));
    if !h.is_square() || dev > 1e-12 * max_abs(h).max(1.0) {
        return Err(Error::NotHermitian(dev));
    }
    let n = h.nrows();
    if is_diagonal(h) {
        let mut u = CMatrix::zeros(n, n);
        for k in 0..n {
            u[(k, k)] = C64::from_polar(1.0, -h[(k, k)].re * t);
        }
        return Unitary::new(u);
    }
    let eig = h.clone().symmetric_eigen();
    let phases = CMatrix::from_diagonal(&eig.eigenvalues.map(|l| C64::from_polar(1.0, -l * t)));
    Unitary::new(&eig.eigenvectors * phases * eig.eigenvectors.adjoint())
}

/// Free evolution of a ket or density matrix.
pub fn evolve<S: Propagate>(state: &S, h: &CMatrix, t: f64) -> Result<S> {
    Ok(state.propagate(&evolution_operator(h, t)?))
}

fn rotation(phase: f64, angle: f64) -> CMatrix {
    let (s, co) = (angle / 2.0).sin_cos();
    let (sp, cp) = phase.sin_cos();
    // cos(φ/2)·I − i sin(φ/2)(cos p σx + sin p σy)
    CMatrix::from_row_slice(
        2,
        2,
        &[
            c(co, 0.0),
            c(-s * sp, -s * cp),
            c(s * sp, -s * cp),
            c(co, 0.0),
        ],
    )
}

/// Propagator of an instantaneous pulse on the three-spin register.
pub fn pulse_operator(p: &Pulse) -> Unitary {
    let id = CMatrix::identity(2, 2);
    let r = rotation(p.phase, p.effective_flip());
    let factor = |s: usize| if p.spins.contains(s) { &r } else { &id };
    Unitary::new(kron(&kron(factor(0), factor(1)), factor(2))).expect("rotation is unitary")
}

pub fn apply_pulse<S: Propagate>(state: &S, p: &Pulse) -> S {
    state.propagate(&pulse_operator(p))
}

/// `Rz(angle)` on every spin of `spins`.
pub fn frame_operator(spins: SpinSet, angle: f64) -> Unitary {
    let mut u = CMatrix::zeros(DIM, DIM);
    for idx in 0..DIM {
        let phase: f64 = spins.iter().map(|s| -angle * iz(idx, s)).sum();
        u[(idx, idx)] = C64::from_polar(1.0, phase);
    }
    Unitary::new(u).expect("diagonal phases are unitary")
}

/// Ordered product of the event propagators.
pub fn sequence_propagator(seq: &PulseSequence, sys: &SpinSystem) -> Result<Unitary> {
    let h = hamiltonian(sys);
    let mut u = Unitary::identity(DIM);
    for e in seq.events() {
        let step = match e {
            PulseEvent::Pulse(p) => pulse_operator(p),
            PulseEvent::Delay(t) => evolution_operator(&h, *t)?,
            PulseEvent::Frame { spins, angle } => frame_operator(*spins, *angle),
        };
        u = step.compose(&u);
    }
    Ok(u)
}

/// Runs `seq` on `input`; returns the output and the full propagator.
pub fn simulate_sequence<S: Propagate>(
    seq: &PulseSequence,
    sys: &SpinSystem,
    input: &S,
) -> Result<(S, Unitary)> {
    let u = sequence_propagator(seq, sys)?;
    Ok((input.propagate(&u), u))
}
