//! Dense linear algebra for registers of a few qubits: states, gates,
//! reduced states, post-selection and fidelities.

pub mod gates;
mod ops;
mod state;

pub use ops::{
    apply_gate, bloch_of, embed, fidelity_pure, kron, partial_trace, post_select, Branch,
    PostSelection, EMPTY_BRANCH,
};
pub use state::{
    BlochVector, CMatrix, CVector, DensityMatrix, Propagate, StateVector, Unitary, ARITH_TOL, C64,
    MATRIX_TOL,
};
pub(crate) use state::{c, max_abs};

#[cfg(test)]
mod proptests {
    use super::*;
    use proptest::prelude::*;

    fn random_state(n: usize) -> impl Strategy<Value = StateVector> {
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1 << n)
            .prop_filter("non-zero", |v| v.iter().any(|(a, b)| a.abs() + b.abs() > 1e-3))
            .prop_map(move |v| {
                let amps = CVector::from_iterator(v.len(), v.iter().map(|&(a, b)| c(a, b)));
                StateVector::normalized_from(n, amps)
            })
    }

    fn random_single_qubit_gate() -> impl Strategy<Value = Unitary> {
        (-3.2f64..3.2, -3.2f64..3.2, -3.2f64..3.2).prop_map(|(a, b, g)| {
            let rz = |t: f64| {
                let mut m = CMatrix::zeros(2, 2);
                m[(0, 0)] = C64::from_polar(1.0, -t / 2.0);
                m[(1, 1)] = C64::from_polar(1.0, t / 2.0);
                Unitary::new(m).unwrap()
            };
            rz(a).compose(&gates::ry(b)).compose(&rz(g))
        })
    }

    fn distinct_pair() -> impl Strategy<Value = (usize, usize)> {
        (0usize..3, 0usize..3).prop_filter("distinct", |(a, b)| a != b)
    }

    proptest! {
        #[test]
        fn apply_gate_preserves_norm(psi in random_state(3), u in random_single_qubit_gate(),
                                     (ctl, tgt) in distinct_pair(), open in any::<bool>()) {
            let g = gates::controlled(&u, open);
            let out = apply_gate(&psi, &g, &[ctl, tgt]).unwrap();
            prop_assert!((out.norm_sqr() - 1.0).abs() < ARITH_TOL);
        }

        #[test]
        fn apply_gate_matches_kron_expansion(psi in random_state(3), u in random_single_qubit_gate(),
                                             q in 0usize..3, (ctl, tgt) in distinct_pair()) {
            // single-qubit gate: compare with explicit I ⊗ … ⊗ U ⊗ … ⊗ I
            let id = CMatrix::identity(2, 2);
            let factors: Vec<&CMatrix> = (0..3).map(|k| if k == q { u.matrix() } else { &id }).collect();
            let full = kron(&kron(factors[0], factors[1]), factors[2]);
            let direct = apply_gate(&psi, &u, &[q]).unwrap();
            let expanded = &full * psi.amplitudes();
            prop_assert!((direct.amplitudes() - &expanded).norm() < ARITH_TOL);

            // two-qubit gate: compare with embed()
            let g = gates::cry(0.7).compose(&gates::controlled(&u, false));
            let direct = apply_gate(&psi, &g, &[ctl, tgt]).unwrap();
            let full = embed(&g, &[ctl, tgt], 3).unwrap();
            let expanded = full.matrix() * psi.amplitudes();
            prop_assert!((direct.amplitudes() - &expanded).norm() < ARITH_TOL);
        }

        #[test]
        fn products_stay_unitary(u in random_single_qubit_gate(), v in random_single_qubit_gate()) {
            let w = gates::controlled(&u, false).compose(&u.kron(&v));
            prop_assert!(w.unitarity_error() < MATRIX_TOL);
            prop_assert!(u.kron(&v).kron(&u).unitarity_error() < MATRIX_TOL);
        }

        #[test]
        fn fidelity_is_bounded(a in random_state(2), b in random_state(2), c2 in random_state(2)) {
            let mixed = DensityMatrix::from_matrix_unchecked(
                2, (b.to_density().entries() + c2.to_density().entries()).scale(0.5)).unwrap();
            let f = fidelity_pure(&a.to_density(), &mixed).unwrap();
            prop_assert!((-1e-12..=1.0 + 1e-10).contains(&f));
        }

        #[test]
        fn pure_bloch_vectors_are_unit(psi in random_state(1)) {
            let r = bloch_of(&psi.to_density()).unwrap();
            prop_assert!((r.norm() - 1.0).abs() < 1e-10);
        }

        #[test]
        fn entangled_reductions_shrink(theta in 0.05f64..1.5) {
            let (s, co) = theta.sin_cos();
            let psi = StateVector::from_real(2, &[co, 0.0, 0.0, s]).unwrap();
            let red = partial_trace(&psi.to_density(), &[0]).unwrap();
            prop_assert!(bloch_of(&red).unwrap().norm() < 1.0);
            prop_assert!((red.trace() - 1.0).abs() < ARITH_TOL);
        }
    }
}
