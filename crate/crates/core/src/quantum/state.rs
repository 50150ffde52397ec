use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Tolerance for scalar arithmetic identities (norms, traces).
pub const ARITH_TOL: f64 = 1e-12;
/// Tolerance for matrix-level invariants (unitarity, positivity).
pub const MATRIX_TOL: f64 = 1e-10;

pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub(crate) fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

fn check_dim(n_qubits: usize, got: usize) -> Result<usize> {
    let expected = 1usize << n_qubits;
    if n_qubits == 0 || got != expected {
        return Err(Error::Dimension {
            n_qubits,
            expected,
            got,
        });
    }
    Ok(expected)
}

/// Things a unitary can act on: kets by `U|ψ⟩`, density matrices by `UρU†`.
pub trait Propagate: Sized {
    fn propagate(&self, u: &Unitary) -> Self;
}

/// Pure state of an `n`-qubit register. Qubit 0 is the most significant bit,
/// so amplitude index `0b100` of a three-qubit register is `|100⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: CVector,
}

impl StateVector {
    /// Builds a normalized state, rejecting bad lengths and norms.
    pub fn new(n_qubits: usize, amplitudes: Vec<C64>) -> Result<Self> {
        check_dim(n_qubits, amplitudes.len())?;
        let norm2: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm2 - 1.0).abs() > ARITH_TOL {
            return Err(Error::NotNormalized(norm2));
        }
        Ok(Self {
            n_qubits,
            amplitudes: CVector::from_vec(amplitudes),
        })
    }

    pub fn from_real(n_qubits: usize, amplitudes: &[f64]) -> Result<Self> {
        Self::new(n_qubits, amplitudes.iter().map(|&x| c(x, 0.0)).collect())
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(n_qubits: usize, index: usize) -> Self {
        let dim = 1usize << n_qubits;
        assert!(index < dim, "basis index {index} out of range");
        let mut amplitudes = CVector::zeros(dim);
        amplitudes[index] = c(1.0, 0.0);
        Self {
            n_qubits,
            amplitudes,
        }
    }

    /// Rescales an arbitrary non-zero vector to unit norm.
    pub(crate) fn normalized_from(n_qubits: usize, v: CVector) -> Self {
        let norm = v.norm();
        Self {
            n_qubits,
            amplitudes: v.unscale(norm),
        }
    }

    pub(crate) fn from_raw(n_qubits: usize, amplitudes: CVector) -> Self {
        debug_assert_eq!(amplitudes.len(), 1 << n_qubits);
        Self {
            n_qubits,
            amplitudes,
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn amplitude(&self, index: usize) -> C64 {
        self.amplitudes[index]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.norm_squared()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    /// Tensor product `|self⟩ ⊗ |other⟩`; `self` supplies the high bits.
    pub fn tensor(&self, other: &StateVector) -> StateVector {
        StateVector {
            n_qubits: self.n_qubits + other.n_qubits,
            amplitudes: self.amplitudes.kronecker(&other.amplitudes),
        }
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix {
            n_qubits: self.n_qubits,
            entries: &self.amplitudes * self.amplitudes.adjoint(),
        }
    }

    /// Distance between the rays of two states: `min_λ ‖self − λ·other‖`
    /// over unit complex `λ`. Evaluated component-wise rather than through
    /// `√(2 − 2|⟨φ|ψ⟩|)`, which loses half the significant digits near zero.
    pub fn ray_distance(&self, other: &StateVector) -> f64 {
        let overlap = other.inner(self);
        let phase = if overlap.norm() > 0.0 {
            overlap / overlap.norm()
        } else {
            c(1.0, 0.0)
        };
        (&self.amplitudes - other.amplitudes.map(|z| z * phase)).norm()
    }
}

impl Propagate for StateVector {
    fn propagate(&self, u: &Unitary) -> Self {
        StateVector {
            n_qubits: self.n_qubits,
            amplitudes: &u.matrix * &self.amplitudes,
        }
    }
}

/// Mixed state of an `n`-qubit register.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    n_qubits: usize,
    entries: CMatrix,
}

impl DensityMatrix {
    /// Validating constructor: Hermitian and unit trace within 1e-12,
    /// eigenvalues no lower than −1e-10.
    pub fn new(n_qubits: usize, entries: CMatrix) -> Result<Self> {
        let rho = Self::from_matrix_unchecked(n_qubits, entries)?;
        rho.validate()?;
        Ok(rho)
    }

    pub(crate) fn from_matrix_unchecked(n_qubits: usize, entries: CMatrix) -> Result<Self> {
        check_dim(n_qubits, entries.nrows())?;
        if !entries.is_square() {
            return Err(Error::Dimension {
                n_qubits,
                expected: entries.nrows(),
                got: entries.ncols(),
            });
        }
        Ok(Self { n_qubits, entries })
    }

    pub fn validate(&self) -> Result<()> {
        let herm = max_abs(&(&self.entries - self.entries.adjoint()));
        if herm > ARITH_TOL {
            return Err(Error::NotHermitian(herm));
        }
        let tr = self.trace();
        if (tr - 1.0).abs() > ARITH_TOL {
            return Err(Error::BadTrace(tr));
        }
        let min = self.eigenvalues().into_iter().fold(f64::INFINITY, f64::min);
        if min < -MATRIX_TOL {
            return Err(Error::NotPositive(min));
        }
        Ok(())
    }

    /// `I / 2^n`.
    pub fn maximally_mixed(n_qubits: usize) -> Self {
        let dim = 1usize << n_qubits;
        Self {
            n_qubits,
            entries: CMatrix::identity(dim, dim).scale(1.0 / dim as f64),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn entry(&self, row: usize, col: usize) -> C64 {
        self.entries[(row, col)]
    }

    pub fn trace(&self) -> f64 {
        self.entries.trace().re
    }

    pub fn purity(&self) -> f64 {
        (&self.entries * &self.entries).trace().re
    }

    /// `Tr(ρ·O)`.
    pub fn expectation(&self, observable: &CMatrix) -> C64 {
        let mut acc = c(0.0, 0.0);
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                acc += self.entries[(i, j)] * observable[(j, i)];
            }
        }
        acc
    }

    /// Ascending eigenvalues of the Hermitian part.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let herm = (&self.entries + self.entries.adjoint()).scale(0.5);
        let mut ev: Vec<f64> = herm.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    /// Relabels qubits: qubit `q` of the result is qubit `order[q]` of `self`.
    pub fn permute_qubits(&self, order: &[usize]) -> Result<DensityMatrix> {
        let n = self.n_qubits;
        check_targets(order, n)?;
        if order.len() != n {
            return Err(Error::Dimension {
                n_qubits: n,
                expected: n,
                got: order.len(),
            });
        }
        let map = |idx: usize| -> usize {
            // bit for new qubit q comes from old qubit order[q]
            (0..n).fold(0, |acc, q| (acc << 1) | bit(idx, order[q], n))
        };
        let dim = self.dim();
        let mut out = CMatrix::zeros(dim, dim);
        for i in 0..dim {
            for j in 0..dim {
                out[(map(i), map(j))] = self.entries[(i, j)];
            }
        }
        Ok(DensityMatrix {
            n_qubits: n,
            entries: out,
        })
    }
}

impl Propagate for DensityMatrix {
    fn propagate(&self, u: &Unitary) -> Self {
        DensityMatrix {
            n_qubits: self.n_qubits,
            entries: &u.matrix * &self.entries * u.matrix.adjoint(),
        }
    }
}

/// Value of qubit `q` (0 = most significant) inside basis index `idx`.
pub(crate) fn bit(idx: usize, q: usize, n_qubits: usize) -> usize {
    (idx >> (n_qubits - 1 - q)) & 1
}

pub(crate) fn check_targets(targets: &[usize], n_qubits: usize) -> Result<()> {
    for (k, &t) in targets.iter().enumerate() {
        if t >= n_qubits {
            return Err(Error::QubitOutOfRange {
                index: t,
                n_qubits,
            });
        }
        if targets[..k].contains(&t) {
            return Err(Error::RepeatedQubit(t));
        }
    }
    Ok(())
}

/// A unitary on a power-of-two dimensional space.
#[derive(Clone, Debug, PartialEq)]
pub struct Unitary {
    matrix: CMatrix,
}

impl Unitary {
    /// Checks `U†U = I` within 1e-10 (max-norm).
    pub fn new(matrix: CMatrix) -> Result<Self> {
        let dim = matrix.nrows();
        if !dim.is_power_of_two() || !matrix.is_square() {
            return Err(Error::Dimension {
                n_qubits: dim.max(1).ilog2() as usize,
                expected: dim,
                got: matrix.ncols(),
            });
        }
        let u = Self { matrix };
        let dev = u.unitarity_error();
        if dev > MATRIX_TOL {
            return Err(Error::NotUnitary(dev));
        }
        Ok(u)
    }

    pub(crate) fn from_matrix_unchecked(matrix: CMatrix) -> Self {
        Self { matrix }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            matrix: CMatrix::identity(dim, dim),
        }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn n_qubits(&self) -> usize {
        self.dim().ilog2() as usize
    }

    /// `‖U†U − I‖_max`.
    pub fn unitarity_error(&self) -> f64 {
        let dim = self.dim();
        max_abs(&(self.matrix.adjoint() * &self.matrix - CMatrix::identity(dim, dim)))
    }

    pub fn adjoint(&self) -> Unitary {
        Unitary {
            matrix: self.matrix.adjoint(),
        }
    }

    /// Operator product `self · rhs` (apply `rhs` first).
    pub fn compose(&self, rhs: &Unitary) -> Unitary {
        Unitary {
            matrix: &self.matrix * &rhs.matrix,
        }
    }

    pub fn kron(&self, rhs: &Unitary) -> Unitary {
        Unitary {
            matrix: super::ops::kron(&self.matrix, &rhs.matrix),
        }
    }

    pub fn apply(&self, state: &StateVector) -> StateVector {
        state.propagate(self)
    }

    /// Max-norm distance up to a global phase: `min_λ ‖self − λ·other‖_max`,
    /// with `λ` fixed by the phase of `Tr(other†·self)`.
    pub fn phase_distance(&self, other: &Unitary) -> f64 {
        let overlap = (other.matrix.adjoint() * &self.matrix).trace();
        let phase = if overlap.norm() > 0.0 {
            overlap / overlap.norm()
        } else {
            c(1.0, 0.0)
        };
        max_abs(&(&self.matrix - other.matrix.map(|z| z * phase)))
    }
}

/// Single-qubit Bloch vector, `ρ = ½(I + r·σ)`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn dot(&self, other: &BlochVector) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn distance(&self, other: &BlochVector) -> f64 {
        BlochVector::new(self.x - other.x, self.y - other.y, self.z - other.z).norm()
    }

    /// `½(I + r·σ)`; not validated, so a vector outside the ball yields a
    /// non-positive matrix.
    pub fn to_density(&self) -> DensityMatrix {
        let half = 0.5;
        let m = CMatrix::from_row_slice(
            2,
            2,
            &[
                c(half * (1.0 + self.z), 0.0),
                c(half * self.x, -half * self.y),
                c(half * self.x, half * self.y),
                c(half * (1.0 - self.z), 0.0),
            ],
        );
        DensityMatrix {
            n_qubits: 1,
            entries: m,
        }
    }
}
