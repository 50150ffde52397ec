//! Standard gate matrices. Multi-qubit gates list the control first.

use super::state::{c, CMatrix, Unitary};

fn from_rows(dim: usize, entries: &[(f64, f64)]) -> Unitary {
    let v: Vec<_> = entries.iter().map(|&(re, im)| c(re, im)).collect();
    Unitary::from_matrix_unchecked(CMatrix::from_row_slice(dim, dim, &v))
}

/// `[[cos(φ/2), −sin(φ/2)], [sin(φ/2), cos(φ/2)]]`, so that
/// `ry(φ)|0⟩ = cos(φ/2)|0⟩ + sin(φ/2)|1⟩`.
pub fn ry(angle: f64) -> Unitary {
    let (s, co) = (angle / 2.0).sin_cos();
    from_rows(2, &[(co, 0.0), (-s, 0.0), (s, 0.0), (co, 0.0)])
}

pub fn hadamard() -> Unitary {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    from_rows(2, &[(h, 0.0), (h, 0.0), (h, 0.0), (-h, 0.0)])
}

pub fn pauli_x() -> Unitary {
    from_rows(2, &[(0.0, 0.0), (1.0, 0.0), (1.0, 0.0), (0.0, 0.0)])
}

pub fn pauli_y() -> Unitary {
    from_rows(2, &[(0.0, 0.0), (0.0, -1.0), (0.0, 1.0), (0.0, 0.0)])
}

pub fn pauli_z() -> Unitary {
    from_rows(2, &[(1.0, 0.0), (0.0, 0.0), (0.0, 0.0), (-1.0, 0.0)])
}

/// Two-qubit controlled-`u`. With `on_zero` the gate fires when the
/// control reads `|0⟩` (open control) instead of `|1⟩`.
pub fn controlled(u: &Unitary, on_zero: bool) -> Unitary {
    assert_eq!(u.dim(), 2, "controlled() expects a single-qubit gate");
    let mut m = CMatrix::zeros(4, 4);
    let (active, idle) = if on_zero { (0, 2) } else { (2, 0) };
    m[(idle, idle)] = c(1.0, 0.0);
    m[(idle + 1, idle + 1)] = c(1.0, 0.0);
    for r in 0..2 {
        for col in 0..2 {
            m[(active + r, active + col)] = u.matrix()[(r, col)];
        }
    }
    Unitary::from_matrix_unchecked(m)
}

pub fn cnot() -> Unitary {
    controlled(&pauli_x(), false)
}

pub fn cry(angle: f64) -> Unitary {
    controlled(&ry(angle), false)
}
