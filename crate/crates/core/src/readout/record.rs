use std::io::Write;

use serde::Serialize;

use crate::cloning::{clone_angles, CloneSet, Sign};
use crate::error::{Error, Result};
use crate::nmr::SpinSystem;
use crate::quantum::{BlochVector, DensityMatrix};
use crate::{COPY, ORIGINAL};

use super::estimators::{
    bloch_from_signals, efficiency_from_signals, fidelity_from_bloch, tomography_single_qubit,
    GroupedSignals, Tomography,
};
use super::peaks::{peak_integrals, Acquisition, PeakSet};

/// Both acquisitions of one clone and what was estimated from them.
#[derive(Clone, Debug, PartialEq)]
pub struct CloneReadout {
    pub xy: PeakSet,
    pub z: PeakSet,
    pub signals: GroupedSignals,
    pub efficiency: f64,
}

impl CloneReadout {
    pub fn measure(rho: &DensityMatrix, observed: usize, sys: &SpinSystem, reference: f64) -> Result<Self> {
        let xy = peak_integrals(rho, observed, Acquisition::Xy, sys, reference)?;
        let z = peak_integrals(rho, observed, Acquisition::Z, sys, reference)?;
        let signals = GroupedSignals::from_peaks(&xy, &z)?;
        Ok(Self {
            efficiency: efficiency_from_signals(&signals),
            xy,
            z,
            signals,
        })
    }
}

/// Per-point results of one cloning experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentRecord {
    pub theta: f64,
    pub sign: Sign,
    pub gamma_theory: f64,
    /// Mean of the efficiencies read on b and on c.
    pub gamma_est: f64,
    pub bloch_b: BlochVector,
    pub bloch_c: BlochVector,
    pub fidelity_b: f64,
    pub fidelity_c: f64,
    pub tomography_b: Tomography,
    pub tomography_c: Tomography,
}

/// Estimates from the grouped signals of both clones.
pub fn estimate(
    set: &CloneSet,
    sig_b: &GroupedSignals,
    sig_c: &GroupedSignals,
) -> Result<ExperimentRecord> {
    let gamma_est = 0.5 * (efficiency_from_signals(sig_b) + efficiency_from_signals(sig_c));
    let undefined = || Error::Config(format!("no success signal at theta = {}", set.theta()));
    let bloch_b = bloch_from_signals(sig_b, gamma_est).ok_or_else(undefined)?;
    let bloch_c = bloch_from_signals(sig_c, gamma_est).ok_or_else(undefined)?;
    let tomography_b = tomography_single_qubit(bloch_b.x, bloch_b.y, bloch_b.z);
    let tomography_c = tomography_single_qubit(bloch_c.x, bloch_c.y, bloch_c.z);
    let (theta, sign) = (set.theta(), set.sign());
    Ok(ExperimentRecord {
        theta,
        sign,
        gamma_theory: clone_angles(theta)?.gamma,
        gamma_est,
        fidelity_b: fidelity_from_bloch(&tomography_b.bloch, theta, sign),
        fidelity_c: fidelity_from_bloch(&tomography_c.bloch, theta, sign),
        bloch_b,
        bloch_c,
        tomography_b,
        tomography_c,
    })
}

/// Full readout of a three-qubit output: peaks of both clones, then the
/// estimators.
pub fn read_out(
    set: &CloneSet,
    rho: &DensityMatrix,
    sys: &SpinSystem,
    reference: f64,
) -> Result<(ExperimentRecord, [CloneReadout; 2])> {
    let b = CloneReadout::measure(rho, ORIGINAL, sys, reference)?;
    let c = CloneReadout::measure(rho, COPY, sys, reference)?;
    let record = estimate(set, &b.signals, &c.signals)?;
    Ok((record, [b, c]))
}

pub const CSV_HEADER: [&str; 12] = [
    "theta",
    "sign",
    "gamma_theory",
    "gamma_est",
    "Fb",
    "Fc",
    "rx_b",
    "ry_b",
    "rz_b",
    "rx_c",
    "ry_c",
    "rz_c",
];

impl ExperimentRecord {
    pub fn csv_fields(&self) -> Vec<String> {
        let f = |v: f64| format!("{v:.12}");
        vec![
            f(self.theta),
            self.sign.to_string(),
            f(self.gamma_theory),
            f(self.gamma_est),
            f(self.fidelity_b),
            f(self.fidelity_c),
            f(self.bloch_b.x),
            f(self.bloch_b.y),
            f(self.bloch_b.z),
            f(self.bloch_c.x),
            f(self.bloch_c.y),
            f(self.bloch_c.z),
        ]
    }

    /// Serializable summary with the reconstructed matrices as
    /// `[[re, im], ...]` rows.
    pub fn summary(&self) -> RecordSummary {
        let matrix = |rho: &DensityMatrix| {
            (0..2)
                .map(|r| (0..2).map(|c| [rho.entry(r, c).re, rho.entry(r, c).im]).collect())
                .collect()
        };
        RecordSummary {
            theta: self.theta,
            sign: self.sign.to_string(),
            gamma_theory: self.gamma_theory,
            gamma_est: self.gamma_est,
            fidelity_b: self.fidelity_b,
            fidelity_c: self.fidelity_c,
            bloch_b: self.bloch_b,
            bloch_c: self.bloch_c,
            rho_b: matrix(&self.tomography_b.rho),
            rho_c: matrix(&self.tomography_c.rho),
            projection_b: self.tomography_b.projection_distance,
            projection_c: self.tomography_c.projection_distance,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RecordSummary {
    pub theta: f64,
    pub sign: String,
    pub gamma_theory: f64,
    pub gamma_est: f64,
    pub fidelity_b: f64,
    pub fidelity_c: f64,
    pub bloch_b: BlochVector,
    pub bloch_c: BlochVector,
    pub rho_b: Vec<Vec<[f64; 2]>>,
    pub rho_c: Vec<Vec<[f64; 2]>>,
    pub projection_b: f64,
    pub projection_c: f64,
}

/// Writes the header and one row per record.
pub fn write_csv<W: Write>(out: W, records: &[ExperimentRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(CSV_HEADER).map_err(io)?;
    for r in records {
        w.write_record(r.csv_fields()).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cloning::{build_cloning_unitary, input_state, run_clone, target_output};
    use crate::nmr::pseudo_pure;
    use crate::quantum::{embed, gates, post_select, Propagate};
    use crate::readout::{bloch_from_group, fidelity_for_set, reference_signal, Group};
    use crate::PROBE;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn grid() -> Vec<f64> {
        (0..=6).map(|k| k as f64 * PI / 12.0).collect()
    }

    fn ideal_record(theta: f64, sign: Sign) -> ExperimentRecord {
        let set = CloneSet::new(theta, sign).unwrap();
        let rho = target_output(&set).unwrap().to_density();
        read_out(&set, &rho, &SpinSystem::default(), 1.0).unwrap().0
    }

    #[test]
    fn pipeline_is_exact_on_ideal_data() {
        for theta in grid() {
            for sign in Sign::BOTH {
                let r = ideal_record(theta, sign);
                assert!((r.gamma_est - 1.0 / (1.0 + theta.cos())).abs() < 1e-9);
                let expect = BlochVector::new((sign.value() * theta).sin(), 0.0, theta.cos());
                assert!(r.bloch_b.distance(&expect) < 1e-9);
                assert!(r.bloch_c.distance(&expect) < 1e-9);
                assert!((r.fidelity_b - 1.0).abs() < 1e-9);
                assert!((r.fidelity_c - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn efficiency_agrees_with_post_selection() {
        for theta in grid() {
            let set = CloneSet::new(theta, Sign::Plus).unwrap();
            let out = target_output(&set).unwrap();
            let direct = post_select(&out, PROBE, 0).unwrap().probability;
            let b = CloneReadout::measure(&out.to_density(), ORIGINAL, &SpinSystem::default(), 1.0).unwrap();
            assert!((b.efficiency - direct).abs() < 1e-9);
        }
    }

    #[test]
    fn examples_at_quarter_pi() {
        let r = ideal_record(FRAC_PI_4, Sign::Plus);
        let s = FRAC_PI_4.sin();
        assert!(r.bloch_b.distance(&BlochVector::new(s, 0.0, s)) < 1e-9);
        let r = ideal_record(FRAC_PI_4, Sign::Minus);
        assert!(r.bloch_c.distance(&BlochVector::new(-s, 0.0, s)) < 1e-9);
        assert!((ideal_record(PI / 3.0, Sign::Plus).gamma_est - 2.0 / 3.0).abs() < 1e-9);
        assert!((ideal_record(0.0, Sign::Minus).gamma_est - 0.5).abs() < 1e-9);
    }

    #[test]
    fn failure_group_is_imperfect() {
        for k in 1..6 {
            let theta = k as f64 * PI / 12.0;
            for sign in Sign::BOTH {
                let set = CloneSet::new(theta, sign).unwrap();
                let rho = target_output(&set).unwrap().to_density();
                let b = CloneReadout::measure(&rho, ORIGINAL, &SpinSystem::default(), 1.0).unwrap();
                let gamma = clone_angles(theta).unwrap().gamma;
                let r = bloch_from_group(&b.signals, Group::Failure, 1.0 - gamma).unwrap();
                assert!(fidelity_for_set(&r, &set) < 1.0 - 1e-6, "theta {theta}");
            }
        }
    }

    fn pps_record(set: &CloneSet, eps: f64) -> ExperimentRecord {
        let sys = SpinSystem::default();
        let u = build_cloning_unitary(set.theta()).unwrap();
        let prep = embed(&gates::ry(set.signed_theta()), &[ORIGINAL], 3).unwrap();
        let pps = pseudo_pure(eps).unwrap().into_rho();
        let reference = reference_signal(&pps, &sys).unwrap();
        read_out(set, &pps.propagate(&u.compose(&prep)), &sys, reference).unwrap().0
    }

    #[test]
    fn pseudo_pure_normalization() {
        for theta in grid() {
            for sign in Sign::BOTH {
                let set = CloneSet::new(theta, sign).unwrap();
                let (a, b) = (pps_record(&set, 1.0), pps_record(&set, 1e-5));
                assert!((a.gamma_est - b.gamma_est).abs() < 1e-10);
                assert!(a.bloch_b.distance(&b.bloch_b) < 1e-10);
                assert!(a.bloch_c.distance(&b.bloch_c) < 1e-10);
                assert!((a.fidelity_b - b.fidelity_b).abs() < 1e-10);
                assert!((a.gamma_est - ideal_record(theta, sign).gamma_est).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn machine_output_matches_run_clone() {
        let theta = 0.7;
        let u = build_cloning_unitary(theta).unwrap();
        let set = CloneSet::new(theta, Sign::Minus).unwrap();
        let run = run_clone(&set, &u).unwrap();
        let rho = u.apply(&input_state(&set)).to_density();
        let (rec, _) = read_out(&set, &rho, &SpinSystem::default(), 1.0).unwrap();
        assert!((rec.gamma_est - run.success_prob).abs() < 1e-9);
    }

    #[test]
    fn csv_layout() {
        let mut buf = Vec::new();
        write_csv(&mut buf, &[ideal_record(FRAC_PI_2, Sign::Plus)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "theta,sign,gamma_theory,gamma_est,Fb,Fc,rx_b,ry_b,rz_b,rx_c,ry_c,rz_c"
        );
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row[0], "1.570796326795");
        assert_eq!(row[1], "+");
        assert_eq!(row[2], "1.000000000000");
    }
}
