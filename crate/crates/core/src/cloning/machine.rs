use crate::error::{Error, Result};
use crate::quantum::{
    bloch_of, fidelity_pure, gates, partial_trace, post_select, BlochVector, Branch, CMatrix,
    CVector, DensityMatrix, StateVector, Unitary,
};
use crate::{COPY, ORIGINAL, PROBE};

use super::params::{clone_angles, failure_weights, CloneSet, Sign};

/// Residuals below this are dropped while orthonormalizing.
const GS_DROP: f64 = 1e-10;

/// Single-qubit state `cos(θ/2)|0⟩ ± sin(θ/2)|1⟩`.
pub fn clone_target(set: &CloneSet) -> StateVector {
    gates::ry(set.signed_theta()).apply(&StateVector::basis(1, 0))
}

/// `|0⟩_a ⊗ |ψ±⟩_b ⊗ |0⟩_c`.
pub fn input_state(set: &CloneSet) -> StateVector {
    let zero = StateVector::basis(1, 0);
    zero.tensor(&clone_target(set)).tensor(&zero)
}

/// Normalized failure state `−(|00⟩ + t²|11⟩)/√(1+t⁴)` of qubits b and c;
/// identical for both signs.
pub fn failure_state(theta: f64) -> Result<StateVector> {
    let p = clone_angles(theta)?;
    let (w00, w11) = failure_weights(p.theta);
    StateVector::from_real(2, &[-w00, 0.0, 0.0, -w11])
}

/// `√γ|0⟩|ψ±⟩|ψ±⟩ + √(1−γ)|1⟩|Φ⟩_BC`.
pub fn target_output(set: &CloneSet) -> Result<StateVector> {
    let p = clone_angles(set.theta())?;
    let psi = clone_target(set);
    let success = psi.tensor(&psi);
    let failure = failure_state(p.theta)?;
    let (ok, fail) = (p.gamma.sqrt(), (1.0 - p.gamma).sqrt());
    let mut amps = CVector::zeros(8);
    for k in 0..4 {
        amps[k] = success.amplitude(k) * ok;
        amps[4 + k] = failure.amplitude(k) * fail;
    }
    Ok(StateVector::from_raw(3, amps))
}

/// Appends the normalized residual of `v` against `basis`, two projection
/// passes, unless it falls under the drop threshold. Returns whether it did.
fn gram_schmidt(basis: &mut Vec<CVector>, v: &CVector) -> bool {
    let mut r = v.clone();
    for _ in 0..2 {
        for b in basis.iter() {
            let proj = b.dotc(&r);
            r -= b * proj;
        }
    }
    let norm = r.norm();
    if norm < GS_DROP {
        return false;
    }
    basis.push(r.unscale(norm));
    true
}

/// Real part of `⟨a|b⟩`; the cloning pair only has real overlaps.
fn overlap(a: &StateVector, b: &StateVector) -> f64 {
    a.inner(b).re
}

/// Deterministic 8×8 unitary taking both inputs to their target outputs.
///
/// The two inputs are orthonormalized (+ first) and mapped to the identically
/// orthonormalized outputs. Both bases are then completed from `e₀ … e₇` in
/// index order and paired up in the order found. The map exists because the
/// pair has the same Gram matrix before and after: `⟨in₊|in₋⟩ = ⟨out₊|out₋⟩
/// = cos θ`.
pub fn build_cloning_unitary(theta: f64) -> Result<Unitary> {
    let plus = CloneSet::new(theta, Sign::Plus)?;
    let minus = CloneSet::new(theta, Sign::Minus)?;
    let (in_p, in_m) = (input_state(&plus), input_state(&minus));
    let (out_p, out_m) = (target_output(&plus)?, target_output(&minus)?);

    let input = overlap(&in_p, &in_m);
    let output = overlap(&out_p, &out_m);
    if (input - output).abs() > 1e-10 {
        return Err(Error::GramMismatch { input, output });
    }

    let mut ins = Vec::with_capacity(8);
    let mut outs = Vec::with_capacity(8);
    for (i, o) in [(&in_p, &out_p), (&in_m, &out_m)] {
        let kept_in = gram_schmidt(&mut ins, i.amplitudes());
        let kept_out = gram_schmidt(&mut outs, o.amplitudes());
        if kept_in != kept_out {
            return Err(Error::GramMismatch { input, output });
        }
    }
    for k in 0..8 {
        let e = StateVector::basis(3, k);
        gram_schmidt(&mut ins, e.amplitudes());
        gram_schmidt(&mut outs, e.amplitudes());
    }
    debug_assert_eq!((ins.len(), outs.len()), (8, 8));

    let mut u = CMatrix::zeros(8, 8);
    for (i, o) in ins.iter().zip(&outs) {
        u += o * i.adjoint();
    }
    Unitary::new(u)
}

/// Outcome of running the cloner once on one input.
#[derive(Clone, Debug, PartialEq)]
pub struct CloneRunResult {
    pub success_prob: f64,
    pub clone_b: DensityMatrix,
    pub clone_c: DensityMatrix,
    pub failure_state: Branch,
}

impl CloneRunResult {
    /// Fidelities `Tr(ρ₀ρ_b)` and `Tr(ρ₀ρ_c)` against the input state.
    pub fn fidelities(&self, set: &CloneSet) -> Result<(f64, f64)> {
        let reference = clone_target(set).to_density();
        Ok((
            fidelity_pure(&reference, &self.clone_b)?,
            fidelity_pure(&reference, &self.clone_c)?,
        ))
    }
}

/// Feeds `input_state(set)` through `machine` and post-selects on the probe.
pub fn run_clone(set: &CloneSet, machine: &Unitary) -> Result<CloneRunResult> {
    let out = machine.apply(&input_state(set));
    analyze_output(&out)
}

/// Splits a three-qubit output into success statistics and failure branch.
pub fn analyze_output(out: &StateVector) -> Result<CloneRunResult> {
    let success = post_select(out, PROBE, 0)?;
    let failure = post_select(out, PROBE, 1)?;
    let pair = match &success.branch {
        Branch::State(s) => s.to_density(),
        // γ ≥ 1/2 for every admissible θ, so this only fires on a broken machine
        Branch::Empty => DensityMatrix::maximally_mixed(2),
    };
    // the pair state is indexed (b, c) after removing the probe
    let clone_b = partial_trace(&pair, &[ORIGINAL - 1])?;
    let clone_c = partial_trace(&pair, &[COPY - 1])?;
    Ok(CloneRunResult {
        success_prob: success.probability,
        clone_b,
        clone_c,
        failure_state: failure.branch,
    })
}

/// Bloch vector `(sin(±θ), 0, cos θ)` of the input state.
pub fn input_bloch(set: &CloneSet) -> BlochVector {
    bloch_of(&clone_target(set).to_density()).expect("single qubit")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::ARITH_TOL;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, PI};

    fn grid() -> Vec<f64> {
        (0..=6).map(|k| k as f64 * PI / 12.0).collect()
    }

    #[test]
    fn input_examples() {
        let zero = input_state(&CloneSet::new(0.0, Sign::Plus).unwrap());
        assert_eq!(zero, StateVector::basis(3, 0));

        let s = 0.5f64.sqrt();
        let minus = input_state(&CloneSet::new(FRAC_PI_2, Sign::Minus).unwrap());
        let expect = StateVector::from_real(3, &[s, 0.0, -s, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(minus.ray_distance(&expect) < 1e-15);
        assert!((minus.amplitude(2).re + s).abs() < 1e-15);

        let third = input_state(&CloneSet::new(FRAC_PI_3, Sign::Plus).unwrap());
        assert!((third.amplitude(0).re - 0.8660254037844387).abs() < 1e-12);
        assert!((third.amplitude(2).re - 0.5).abs() < 1e-12);
    }

    #[test]
    fn target_examples() {
        let s = 0.5f64.sqrt();
        for sign in Sign::BOTH {
            let out = target_output(&CloneSet::new(0.0, sign).unwrap()).unwrap();
            let expect = StateVector::from_real(3, &[s, 0.0, 0.0, 0.0, -s, 0.0, 0.0, 0.0]).unwrap();
            assert!((out.amplitudes() - expect.amplitudes()).norm() < 1e-15);
        }
        let set = CloneSet::new(FRAC_PI_2, Sign::Plus).unwrap();
        let out = target_output(&set).unwrap();
        let psi = clone_target(&set);
        let expect = StateVector::basis(1, 0).tensor(&psi).tensor(&psi);
        assert!((out.amplitudes() - expect.amplitudes()).norm() < 1e-15);

        let out = target_output(&CloneSet::new(FRAC_PI_4, Sign::Plus).unwrap()).unwrap();
        assert!((out.norm_sqr() - 1.0).abs() < ARITH_TOL);
    }

    #[test]
    fn gram_preserved_on_grid() {
        for k in 1..=5 {
            let theta = k as f64 * PI / 12.0;
            let p = |s| target_output(&CloneSet::new(theta, s).unwrap()).unwrap();
            let i = |s| input_state(&CloneSet::new(theta, s).unwrap());
            let out_ov = p(Sign::Plus).inner(&p(Sign::Minus)).re;
            let in_ov = i(Sign::Plus).inner(&i(Sign::Minus)).re;
            assert!((out_ov - theta.cos()).abs() < 1e-12);
            assert!((in_ov - out_ov).abs() < 1e-12);
        }
    }

    #[test]
    fn completion_satisfies_contract_on_grid() {
        for theta in grid() {
            let u = build_cloning_unitary(theta).unwrap();
            assert!(u.unitarity_error() < 1e-10);
            for sign in Sign::BOTH {
                let set = CloneSet::new(theta, sign).unwrap();
                let out = u.apply(&input_state(&set));
                let target = target_output(&set).unwrap();
                let err = (out.amplitudes() - target.amplitudes()).camax();
                assert!(err < 1e-10, "theta {theta} {sign}: {err}");
            }
        }
    }

    #[test]
    fn degenerate_set_still_unitary() {
        let u = build_cloning_unitary(0.0).unwrap();
        assert!(u.unitarity_error() < 1e-12);
        let run = run_clone(&CloneSet::new(0.0, Sign::Plus).unwrap(), &u).unwrap();
        assert!((run.success_prob - 0.5).abs() < 1e-12);
    }

    #[test]
    fn success_probability_at_pi_over_three() {
        let u = build_cloning_unitary(FRAC_PI_3).unwrap();
        for sign in Sign::BOTH {
            let run = run_clone(&CloneSet::new(FRAC_PI_3, sign).unwrap(), &u).unwrap();
            assert!((run.success_prob - 2.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn orthogonal_run_has_empty_failure() {
        let u = build_cloning_unitary(FRAC_PI_2).unwrap();
        let set = CloneSet::new(FRAC_PI_2, Sign::Plus).unwrap();
        let run = run_clone(&set, &u).unwrap();
        assert!((run.success_prob - 1.0).abs() < 1e-12);
        assert!(run.failure_state.is_empty());
        let (fb, fc) = run.fidelities(&set).unwrap();
        assert!((fb - 1.0).abs() < 1e-10 && (fc - 1.0).abs() < 1e-10);
    }

    #[test]
    fn clones_are_faithful_and_failure_matches() {
        for theta in grid() {
            let u = build_cloning_unitary(theta).unwrap();
            for sign in Sign::BOTH {
                let set = CloneSet::new(theta, sign).unwrap();
                let run = run_clone(&set, &u).unwrap();
                let gamma = 1.0 / (1.0 + theta.cos());
                assert!((run.success_prob - gamma).abs() < 1e-10);
                let (fb, fc) = run.fidelities(&set).unwrap();
                assert!((fb - 1.0).abs() < 1e-10, "F_b {fb} at {theta}");
                assert!((fc - 1.0).abs() < 1e-10, "F_c {fc} at {theta}");
                if theta < FRAC_PI_2 - 1e-9 {
                    let phi = failure_state(theta).unwrap();
                    let got = run.failure_state.state().expect("non-empty failure branch");
                    assert!(got.ray_distance(&phi) < 1e-9);
                }
            }
        }
    }

    #[test]
    fn reduced_clone_at_quarter_pi_is_input() {
        // brute-force index contraction of the success branch, independent of partial_trace
        let set = CloneSet::new(FRAC_PI_4, Sign::Plus).unwrap();
        let out = target_output(&set).unwrap();
        let gamma = clone_angles(FRAC_PI_4).unwrap().gamma;
        let mut rho_b = [[0.0f64; 2]; 2];
        for b in 0..2 {
            for bp in 0..2 {
                for cq in 0..2 {
                    let i = (b << 1) | cq;
                    let j = (bp << 1) | cq;
                    rho_b[b][bp] += (out.amplitude(i) * out.amplitude(j).conj()).re / gamma;
                }
            }
        }
        let (s, co) = (FRAC_PI_4 / 2.0).sin_cos();
        let expect = [[co * co, co * s], [co * s, s * s]];
        for r in 0..2 {
            for col in 0..2 {
                assert!((rho_b[r][col] - expect[r][col]).abs() < 1e-12);
            }
        }
        let run = run_clone(&set, &build_cloning_unitary(FRAC_PI_4).unwrap()).unwrap();
        for r in 0..2 {
            for col in 0..2 {
                assert!((run.clone_b.entry(r, col).re - expect[r][col]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn post_selection_at_zero_gives_minus_00() {
        let out = target_output(&CloneSet::new(0.0, Sign::Plus).unwrap()).unwrap();
        let ps = post_select(&out, PROBE, 1).unwrap();
        assert!((ps.probability - 0.5).abs() < 1e-15);
        let st = ps.branch.state().unwrap();
        assert!((st.amplitude(0).re + 1.0).abs() < 1e-15);
        let ps = post_select(&out, PROBE, 0).unwrap();
        assert!((ps.probability - 0.5).abs() < 1e-15);
        let third = target_output(&CloneSet::new(FRAC_PI_3, Sign::Minus).unwrap()).unwrap();
        assert!((post_select(&third, PROBE, 0).unwrap().probability - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn no_deterministic_cloning_inside_the_interval() {
        for k in 1..60 {
            let theta = FRAC_PI_2 * k as f64 / 60.0;
            let u = build_cloning_unitary(theta).unwrap();
            let run = run_clone(&CloneSet::new(theta, Sign::Plus).unwrap(), &u).unwrap();
            assert!(run.success_prob < 1.0);
        }
    }

    #[test]
    fn input_bloch_matches_closed_form() {
        let set = CloneSet::new(FRAC_PI_4, Sign::Minus).unwrap();
        let r = input_bloch(&set);
        assert!((r.x + FRAC_PI_4.sin()).abs() < 1e-15);
        assert!((r.z - FRAC_PI_4.cos()).abs() < 1e-15);
    }
}
