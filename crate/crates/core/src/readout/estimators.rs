use serde::Serialize;

use crate::cloning::{CloneSet, Sign};
use crate::error::{Error, Result};
use crate::quantum::{BlochVector, DensityMatrix};

use super::peaks::{Acquisition, PeakSet};

/// Real signal components `P_k = (P_kx, P_ky, P_kz)` of peaks `k = 1..4`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GroupedSignals {
    pub p: [[f64; 3]; 4],
}

/// Peaks sharing one probe state.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Group {
    /// Peaks 2 and 4, probe `|0⟩`.
    Success,
    /// Peaks 1 and 3, probe `|1⟩`.
    Failure,
}

impl Group {
    fn peaks(self) -> [usize; 2] {
        match self {
            Group::Success => [2, 4],
            Group::Failure => [1, 3],
        }
    }
}

impl GroupedSignals {
    /// Combines an xy and a z acquisition of the same spin.
    pub fn from_peaks(xy: &PeakSet, z: &PeakSet) -> Result<Self> {
        if xy.acquisition != Acquisition::Xy || z.acquisition != Acquisition::Z {
            return Err(Error::Config("expected one xy and one z acquisition".into()));
        }
        if xy.observed != z.observed {
            return Err(Error::Config("acquisitions observe different spins".into()));
        }
        let mut p = [[0.0; 3]; 4];
        for (k, row) in p.iter_mut().enumerate() {
            let v = xy.numbered(k + 1);
            *row = [v.re, v.im, z.numbered(k + 1).re];
        }
        Ok(Self { p })
    }

    /// Component `i` (0 = x, 1 = y, 2 = z) of peak `k ∈ 1..=4`.
    pub fn get(&self, k: usize, i: usize) -> f64 {
        self.p[k - 1][i]
    }

    fn signed_sum(&self, group: Group, i: usize) -> f64 {
        group.peaks().iter().map(|&k| self.get(k, i)).sum()
    }
}

/// `γ = √(Px² + Py² + Pz²)` with `P_i = |P_2i| + |P_4i|`.
pub fn efficiency_from_signals(sig: &GroupedSignals) -> f64 {
    (0..3)
        .map(|i| sig.get(2, i).abs() + sig.get(4, i).abs())
        .map(|p| p * p)
        .sum::<f64>()
        .sqrt()
}

/// Below this weight a group carries no usable Bloch information.
pub const MIN_GROUP_WEIGHT: f64 = 1e-12;

/// Signed group sums divided by `weight`; `None` if the weight is not
/// positive.
pub fn bloch_from_group(sig: &GroupedSignals, group: Group, weight: f64) -> Option<BlochVector> {
    if weight.is_nan() || weight <= MIN_GROUP_WEIGHT {
        return None;
    }
    let r = |i| sig.signed_sum(group, i) / weight;
    Some(BlochVector::new(r(0), r(1), r(2)))
}

/// `r_i = (P_2i + P_4i)/γ`.
pub fn bloch_from_signals(sig: &GroupedSignals, gamma: f64) -> Option<BlochVector> {
    bloch_from_group(sig, Group::Success, gamma)
}

/// `½(1 + sin(±θ)·r_x + cos θ·r_z)`.
pub fn fidelity_from_bloch(r: &BlochVector, theta: f64, sign: Sign) -> f64 {
    0.5 * (1.0 + (sign.value() * theta).sin() * r.x + theta.cos() * r.z)
}

pub fn fidelity_for_set(r: &BlochVector, set: &CloneSet) -> f64 {
    fidelity_from_bloch(r, set.theta(), set.sign())
}

/// Linear-inversion tomography of one qubit.
#[derive(Clone, Debug, PartialEq)]
pub struct Tomography {
    pub measured: BlochVector,
    /// `measured`, pulled back onto the unit ball if it left it.
    pub bloch: BlochVector,
    pub projection_distance: f64,
    pub rho: DensityMatrix,
}

pub fn tomography_single_qubit(px: f64, py: f64, pz: f64) -> Tomography {
    let measured = BlochVector::new(px, py, pz);
    let n = measured.norm();
    let bloch = if n > 1.0 {
        BlochVector::new(px / n, py / n, pz / n)
    } else {
        measured
    };
    Tomography {
        measured,
        bloch,
        projection_distance: measured.distance(&bloch),
        rho: bloch.to_density(),
    }
}
