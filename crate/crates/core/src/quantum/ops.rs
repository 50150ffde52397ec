use super::state::{bit, c, check_targets, BlochVector, CMatrix, CVector, DensityMatrix, StateVector, Unitary};
use crate::error::{Error, Result};

/// Kronecker product; `a` occupies the high-order index.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Splits a full-register index into (index over `targets`, with
/// `targets[0]` most significant; the same index with target bits cleared).
fn split_index(idx: usize, targets: &[usize], n_qubits: usize) -> (usize, usize) {
    let mut sub = 0;
    let mut rest = idx;
    for &t in targets {
        let b = bit(idx, t, n_qubits);
        sub = (sub << 1) | b;
        rest &= !(1 << (n_qubits - 1 - t));
    }
    (sub, rest)
}

fn join_index(sub: usize, rest: usize, targets: &[usize], n_qubits: usize) -> usize {
    let k = targets.len();
    targets.iter().enumerate().fold(rest, |acc, (pos, &t)| {
        let b = (sub >> (k - 1 - pos)) & 1;
        acc | (b << (n_qubits - 1 - t))
    })
}

fn check_gate(gate: &Unitary, targets: &[usize], n_qubits: usize) -> Result<()> {
    check_targets(targets, n_qubits)?;
    if targets.is_empty() || gate.dim() != 1 << targets.len() {
        return Err(Error::GateDimension {
            gate_dim: gate.dim(),
            n_targets: targets.len(),
        });
    }
    Ok(())
}

/// Applies `gate` to the ordered `targets` of `state`, identity elsewhere.
/// `targets[0]` is the gate's most significant qubit.
pub fn apply_gate(state: &StateVector, gate: &Unitary, targets: &[usize]) -> Result<StateVector> {
    let n = state.n_qubits();
    check_gate(gate, targets, n)?;
    let g = gate.matrix();
    let amps = state.amplitudes();
    let sub_dim = gate.dim();
    let mut out = CVector::zeros(state.dim());
    for (idx, slot) in out.iter_mut().enumerate() {
        let (row, rest) = split_index(idx, targets, n);
        for col in 0..sub_dim {
            *slot += g[(row, col)] * amps[join_index(col, rest, targets, n)];
        }
    }
    Ok(StateVector::from_raw(n, out))
}

/// Full `2^n × 2^n` matrix of `gate` acting on `targets`.
pub fn embed(gate: &Unitary, targets: &[usize], n_qubits: usize) -> Result<Unitary> {
    check_gate(gate, targets, n_qubits)?;
    let dim = 1 << n_qubits;
    let g = gate.matrix();
    let mut m = CMatrix::zeros(dim, dim);
    for i in 0..dim {
        let (row, rest_i) = split_index(i, targets, n_qubits);
        for col in 0..gate.dim() {
            m[(i, join_index(col, rest_i, targets, n_qubits))] = g[(row, col)];
        }
    }
    Ok(Unitary::from_matrix_unchecked(m))
}

/// Reduced state on the `keep` qubits (output in ascending qubit order).
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    let n = rho.n_qubits();
    if keep.is_empty() {
        return Err(Error::EmptyKeepSet);
    }
    check_targets(keep, n)?;
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    let traced: Vec<usize> = (0..n).filter(|q| !kept.contains(q)).collect();
    let k = kept.len();
    let sub = 1 << k;
    let mut out = CMatrix::zeros(sub, sub);
    for i in 0..sub {
        for j in 0..sub {
            let base_i = join_index(i, 0, &kept, n);
            let base_j = join_index(j, 0, &kept, n);
            let mut acc = c(0.0, 0.0);
            for t in 0..(1 << traced.len()) {
                let off = join_index(t, 0, &traced, n);
                acc += rho.entry(base_i | off, base_j | off);
            }
            out[(i, j)] = acc;
        }
    }
    DensityMatrix::from_matrix_unchecked(k, out)
}

/// Post-selected branch of a projective measurement.
#[derive(Clone, Debug, PartialEq)]
pub enum Branch {
    /// Normalized state of the remaining qubits.
    State(StateVector),
    /// The outcome has probability below [`EMPTY_BRANCH`].
    Empty,
}

impl Branch {
    pub fn state(&self) -> Option<&StateVector> {
        match self {
            Branch::State(s) => Some(s),
            Branch::Empty => None,
        }
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, Branch::Empty)
    }
}

/// Probabilities below this are treated as an empty branch.
pub const EMPTY_BRANCH: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq)]
pub struct PostSelection {
    pub probability: f64,
    pub branch: Branch,
}

/// Projects `qubit` onto `outcome` and returns the probability together
/// with the renormalized state of the other qubits (order preserved).
pub fn post_select(state: &StateVector, qubit: usize, outcome: u8) -> Result<PostSelection> {
    let n = state.n_qubits();
    check_targets(&[qubit], n)?;
    if n < 2 {
        return Err(Error::PostSelectSingleQubit);
    }
    let rest: Vec<usize> = (0..n).filter(|&q| q != qubit).collect();
    let mut v = CVector::zeros(1 << (n - 1));
    for (sub, slot) in v.iter_mut().enumerate() {
        let idx = join_index(sub, (outcome as usize & 1) << (n - 1 - qubit), &rest, n);
        *slot = state.amplitude(idx);
    }
    let probability = v.norm_squared();
    let branch = if probability < EMPTY_BRANCH {
        Branch::Empty
    } else {
        Branch::State(StateVector::normalized_from(n - 1, v))
    };
    Ok(PostSelection {
        probability,
        branch,
    })
}

/// `Tr(ρ₀·ρ)` for a pure reference `ρ₀`.
pub fn fidelity_pure(rho0: &DensityMatrix, rho: &DensityMatrix) -> Result<f64> {
    if rho0.dim() != rho.dim() {
        return Err(Error::Dimension {
            n_qubits: rho0.n_qubits(),
            expected: rho0.dim(),
            got: rho.dim(),
        });
    }
    let purity = rho0.purity();
    if (purity - 1.0).abs() > 1e-10 {
        return Err(Error::NotPure(purity));
    }
    Ok(rho.expectation(rho0.entries()).re)
}

/// Bloch vector `r_μ = Tr(ρ·σ_μ)` of a single-qubit state.
pub fn bloch_of(rho: &DensityMatrix) -> Result<BlochVector> {
    if rho.n_qubits() != 1 {
        return Err(Error::Dimension {
            n_qubits: 1,
            expected: 2,
            got: rho.dim(),
        });
    }
    let r01 = rho.entry(0, 1);
    Ok(BlochVector::new(
        2.0 * r01.re,
        -2.0 * r01.im,
        (rho.entry(0, 0) - rho.entry(1, 1)).re,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::gates;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn kron_identity_and_zz() {
        let i2 = CMatrix::identity(2, 2);
        assert_eq!(kron(&i2, &i2), CMatrix::identity(4, 4));
        let z = gates::pauli_z();
        let zz = kron(z.matrix(), z.matrix());
        let diag: Vec<f64> = (0..4).map(|k| zz[(k, k)].re).collect();
        assert_eq!(diag, vec![1.0, -1.0, -1.0, 1.0]);
    }

    #[test]
    fn kron_matches_index_loop_in_eight_dims() {
        // |0⟩⟨0| ⊗ σx ⊗ I, expanded by explicit index arithmetic
        let mut p0 = CMatrix::zeros(2, 2);
        p0[(0, 0)] = c(1.0, 0.0);
        let x = gates::pauli_x();
        let i2 = CMatrix::identity(2, 2);
        let m = kron(&kron(&p0, x.matrix()), &i2);
        let factors = [&p0, x.matrix(), &i2];
        for row in 0..8 {
            for col in 0..8 {
                let mut expect = c(1.0, 0.0);
                for (q, f) in factors.iter().enumerate() {
                    let shift = 2 - q;
                    expect *= f[((row >> shift) & 1, (col >> shift) & 1)];
                }
                assert_eq!(m[(row, col)], expect, "entry ({row},{col})");
            }
        }
    }

    #[test]
    fn apply_gate_basic_cases() {
        let zero = StateVector::basis(3, 0);
        let flipped = apply_gate(&zero, &gates::pauli_x(), &[0]).unwrap();
        assert!(flipped.ray_distance(&StateVector::basis(3, 0b100)) < 1e-15);
        assert!((flipped.amplitude(0b100) - c(1.0, 0.0)).norm() < 1e-15);

        let h = apply_gate(&zero, &gates::hadamard(), &[0]).unwrap();
        assert!(close(h.amplitude(0).re, FRAC_1_SQRT_2, 1e-15));
        assert!(close(h.amplitude(0b100).re, FRAC_1_SQRT_2, 1e-15));

        let s = 0.5f64.sqrt();
        let input = StateVector::from_real(3, &[s, 0.0, s, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let out = apply_gate(&input, &gates::cnot(), &[1, 2]).unwrap();
        let expect = StateVector::from_real(3, &[s, 0.0, 0.0, s, 0.0, 0.0, 0.0, 0.0]).unwrap();
        assert!((out.amplitudes() - expect.amplitudes()).norm() < 1e-15);
    }

    #[test]
    fn apply_gate_rejects_bad_targets() {
        let zero = StateVector::basis(3, 0);
        assert_eq!(
            apply_gate(&zero, &gates::cnot(), &[1, 1]),
            Err(Error::RepeatedQubit(1))
        );
        assert!(matches!(
            apply_gate(&zero, &gates::pauli_x(), &[3]),
            Err(Error::QubitOutOfRange { index: 3, .. })
        ));
        assert!(matches!(
            apply_gate(&zero, &gates::cnot(), &[0]),
            Err(Error::GateDimension { .. })
        ));
    }

    #[test]
    fn ry_examples() {
        assert!(gates::ry(0.0).phase_distance(&Unitary::identity(2)) < 1e-15);
        let one = gates::ry(PI).apply(&StateVector::basis(1, 0));
        assert!((one.amplitude(1) - c(1.0, 0.0)).norm() < 1e-15);
        let psi = gates::ry(PI / 3.0).apply(&StateVector::basis(1, 0));
        assert!(close(psi.amplitude(0).re, 0.8660254037844387, 1e-12));
        assert!(close(psi.amplitude(1).re, 0.5, 1e-12));
    }

    #[test]
    fn partial_trace_examples() {
        let rho = StateVector::basis(2, 0).to_density();
        let red = partial_trace(&rho, &[0]).unwrap();
        assert!(close(red.entry(0, 0).re, 1.0, 1e-15));
        assert!(close(red.entry(1, 1).re, 0.0, 1e-15));

        let s = 0.5f64.sqrt();
        let bell = StateVector::from_real(2, &[s, 0.0, 0.0, s]).unwrap().to_density();
        for q in 0..2 {
            let red = partial_trace(&bell, &[q]).unwrap();
            let half = DensityMatrix::maximally_mixed(1);
            assert!((red.entries() - half.entries()).norm() < 1e-15);
        }
        assert_eq!(partial_trace(&bell, &[]), Err(Error::EmptyKeepSet));
    }

    #[test]
    fn post_select_basic() {
        let ps = post_select(&StateVector::basis(3, 0), 0, 0).unwrap();
        assert!(close(ps.probability, 1.0, 1e-15));
        assert_eq!(ps.branch.state().unwrap(), &StateVector::basis(2, 0));
        let none = post_select(&StateVector::basis(3, 0), 0, 1).unwrap();
        assert_eq!(none.probability, 0.0);
        assert!(none.branch.is_empty());
        assert_eq!(
            post_select(&StateVector::basis(1, 0), 0, 0),
            Err(Error::PostSelectSingleQubit)
        );
    }

    #[test]
    fn fidelity_examples() {
        let zero = StateVector::basis(1, 0).to_density();
        let one = StateVector::basis(1, 1).to_density();
        assert!(close(fidelity_pure(&zero, &zero).unwrap(), 1.0, 1e-15));
        assert!(close(fidelity_pure(&zero, &one).unwrap(), 0.0, 1e-15));
        let mixed = DensityMatrix::maximally_mixed(1);
        for k in 0..7 {
            let psi = gates::ry(k as f64 * PI / 12.0).apply(&StateVector::basis(1, 0));
            let f = fidelity_pure(&psi.to_density(), &mixed).unwrap();
            assert!(close(f, 0.5, 1e-15));
        }
        assert!(matches!(fidelity_pure(&mixed, &zero), Err(Error::NotPure(_))));
    }

    #[test]
    fn bloch_examples() {
        let zero = StateVector::basis(1, 0).to_density();
        assert_eq!(bloch_of(&zero).unwrap(), BlochVector::new(0.0, 0.0, 1.0));
        let plus = gates::ry(PI / 2.0).apply(&StateVector::basis(1, 0));
        let r = bloch_of(&plus.to_density()).unwrap();
        assert!(r.distance(&BlochVector::new(1.0, 0.0, 0.0)) < 1e-15);
        let r = bloch_of(&DensityMatrix::maximally_mixed(1)).unwrap();
        assert_eq!(r, BlochVector::new(0.0, 0.0, 0.0));
        // σy eigenstate (|0⟩ + i|1⟩)/√2
        let s = 0.5f64.sqrt();
        let yplus = StateVector::new(1, vec![c(s, 0.0), c(0.0, s)]).unwrap();
        let r = bloch_of(&yplus.to_density()).unwrap();
        assert!(r.distance(&BlochVector::new(0.0, 1.0, 0.0)) < 1e-15);
    }

    #[test]
    fn permute_swaps_qubits() {
        let rho = StateVector::basis(3, 0b010).to_density();
        let swapped = rho.permute_qubits(&[0, 2, 1]).unwrap();
        assert!(close(swapped.entry(0b001, 0b001).re, 1.0, 1e-15));
    }
}
