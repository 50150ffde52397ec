use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::nmr::SpinSystem;
use crate::quantum::{c, embed, gates, kron, CMatrix, DensityMatrix, Propagate, C64};
use crate::{COPY, ORIGINAL, PROBE};

/// Which magnetization component an acquisition records.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Acquisition {
    /// Quadrature detection of the transverse components.
    Xy,
    /// A π/2 read pulse first, turning z magnetization into x.
    Z,
}

/// Spectator states `(h, f)` of the four peaks, numbered 1 to 4.
pub const PEAK_STATES: [(usize, usize); 4] = [(1, 0), (0, 0), (1, 1), (0, 1)];

/// Four complex peak integrals of one acquisition, indexed by the logical
/// state `h` of the probe and `f` of the other clone.
#[derive(Clone, Debug, PartialEq)]
pub struct PeakSet {
    pub observed: usize,
    pub acquisition: Acquisition,
    values: [[C64; 2]; 2],
    offsets_hz: [[f64; 2]; 2],
}

impl PeakSet {
    pub fn peak(&self, h: usize, f: usize) -> C64 {
        self.values[h][f]
    }

    /// Peak `k ∈ 1..=4` in spectrum numbering.
    pub fn numbered(&self, k: usize) -> C64 {
        let (h, f) = PEAK_STATES[k - 1];
        self.values[h][f]
    }

    pub fn offset(&self, h: usize, f: usize) -> f64 {
        self.offsets_hz[h][f]
    }

    /// Spectator states sorted by ascending frequency offset.
    pub fn ascending(&self) -> [(usize, usize); 4] {
        let mut states = [(0, 0), (0, 1), (1, 0), (1, 1)];
        states.sort_by(|a, b| self.offset(a.0, a.1).total_cmp(&self.offset(b.0, b.1)));
        states
    }
}

impl fmt::Display for PeakSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for k in 1..=4 {
            let (h, s) = PEAK_STATES[k - 1];
            let v = self.values[h][s];
            writeln!(
                f,
                "  peak {k} |{h}{s}> {:>9.3} Hz  re {:>+.9}  im {:>+.9}",
                self.offsets_hz[h][s], v.re, v.im
            )?;
        }
        Ok(())
    }
}

/// `((−1)^h·J_ab + (−1)^f·J_bc)/2` in Hz; every readout goes through the
/// carbon channel.
pub fn peak_offset(sys: &SpinSystem, h: usize, f: usize) -> f64 {
    let sgn = |b: usize| if b == 0 { 1.0 } else { -1.0 };
    (sgn(h) * sys.coupling(PROBE, ORIGINAL) + sgn(f) * sys.coupling(ORIGINAL, COPY)) / 2.0
}

/// Raw peak integrals `Tr[ρ′(|h⟩⟨h| ⊗ (σx + iσy) ⊗ |f⟩⟨f|)]`, divided by
/// `reference`.
///
/// For `observed = c` the clones are swapped first so that the readout spin
/// always sits in the middle; `f` then labels the other clone.
pub fn peak_integrals(
    rho: &DensityMatrix,
    observed: usize,
    acquisition: Acquisition,
    sys: &SpinSystem,
    reference: f64,
) -> Result<PeakSet> {
    let swapped = match observed {
        ORIGINAL => rho.clone(),
        COPY => rho.permute_qubits(&[PROBE, COPY, ORIGINAL])?,
        PROBE => return Err(Error::ProbeReadout),
        other => {
            return Err(Error::QubitOutOfRange {
                index: other,
                n_qubits: 3,
            })
        }
    };
    let rho = match acquisition {
        Acquisition::Xy => swapped,
        Acquisition::Z => swapped.propagate(&embed(&gates::ry(std::f64::consts::FRAC_PI_2), &[1], 3)?),
    };
    // σx + iσy = 2|0⟩⟨1|
    let raising = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(2.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
    let projector = |b: usize| {
        let mut p = CMatrix::zeros(2, 2);
        p[(b, b)] = c(1.0, 0.0);
        p
    };
    let mut values = [[c(0.0, 0.0); 2]; 2];
    let mut offsets_hz = [[0.0; 2]; 2];
    for h in 0..2 {
        for f in 0..2 {
            let obs = kron(&kron(&projector(h), &raising), &projector(f));
            values[h][f] = rho.expectation(&obs) / reference;
            offsets_hz[h][f] = peak_offset(sys, h, f);
        }
    }
    Ok(PeakSet {
        observed,
        acquisition,
        values,
        offsets_hz,
    })
}

/// Unnormalized z-acquisition `|00⟩` peak of `rho`, observed on b. Equals
/// `ε` for a pseudo-pure state.
pub fn reference_signal(rho: &DensityMatrix, sys: &SpinSystem) -> Result<f64> {
    Ok(peak_integrals(rho, ORIGINAL, Acquisition::Z, sys, 1.0)?.peak(0, 0).re)
}
