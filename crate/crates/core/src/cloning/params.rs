use std::f64::consts::FRAC_PI_2;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack allowed beyond `[0, π/2]` before an angle is rejected; values
/// inside the slack are clamped. Grid arithmetic like `6·(π/12)` lands a
/// few ulps away from `π/2`.
const THETA_SLACK: f64 = 1e-12;

fn check_theta(theta: f64) -> Result<f64> {
    if !theta.is_finite() || !(-THETA_SLACK..=FRAC_PI_2 + THETA_SLACK).contains(&theta) {
        return Err(Error::ThetaOutOfRange(theta));
    }
    Ok(theta.clamp(0.0, FRAC_PI_2))
}

/// `cos θ` with the orthogonal end snapped to exactly zero, so that the
/// π/2 case yields α = β = 0 and γ = 1 without rounding residue.
pub(crate) fn overlap(theta: f64) -> f64 {
    if theta >= FRAC_PI_2 {
        0.0
    } else {
        theta.cos()
    }
}

/// Amplitudes `(1/√(1+t⁴), 1/√(1+t⁻⁴))` of `|00⟩` and `|11⟩` (up to the
/// common minus sign) in the failure state, `t = tan(θ/2)`. Written through
/// `t² = (1 − cos θ)/(1 + cos θ)` so both ends are exact.
pub(crate) fn failure_weights(theta: f64) -> (f64, f64) {
    let c = overlap(theta);
    let norm = (2.0 * (1.0 + c * c)).sqrt();
    ((1.0 + c) / norm, (1.0 - c) / norm)
}

/// Which member of the input pair `cos(θ/2)|0⟩ ± sin(θ/2)|1⟩` is fed in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub const BOTH: [Sign; 2] = [Sign::Plus, Sign::Minus];

    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        })
    }
}

impl std::str::FromStr for Sign {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "+" | "plus" | "+1" => Ok(Sign::Plus),
            "-" | "minus" | "-1" => Ok(Sign::Minus),
            other => Err(Error::Config(format!("unknown sign {other:?}"))),
        }
    }
}

/// One member of the two-state input set.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CloneSet {
    theta: f64,
    sign: Sign,
}

impl CloneSet {
    pub fn new(theta: f64, sign: Sign) -> Result<Self> {
        Ok(Self {
            theta: check_theta(theta)?,
            sign,
        })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn sign(&self) -> Sign {
        self.sign
    }

    /// The rotation applied to qubit b to prepare the input, `±θ`.
    pub fn signed_theta(&self) -> f64 {
        self.sign.value() * self.theta
    }
}

/// Overlap angle together with the rotation angles of the two controlled
/// rotations and the optimal success probability.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CloneParameters {
    pub theta: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

/// Derived angles and efficiency for overlap angle `theta ∈ [0, π/2]`.
pub fn clone_angles(theta: f64) -> Result<CloneParameters> {
    let theta = check_theta(theta)?;
    // With c = cos θ the arccos expressions in t = tan(θ/2) reduce to
    // cos(α/2) = √(1+c²)/(1+c), sin(α/2) = √(2c)/(1+c) and tan(β/2) = c.
    let c = overlap(theta);
    let alpha = 2.0 * (2.0 * c).sqrt().atan2((1.0 + c * c).sqrt());
    let beta = 2.0 * c.atan();
    let gamma = 1.0 / (1.0 + c);
    Ok(CloneParameters {
        theta,
        alpha,
        beta,
        gamma,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_3, FRAC_PI_4, PI};

    // Literal arccos forms in t = tan(θ/2), kept independent of the
    // closed forms used by clone_angles.
    fn tan4_half(theta: f64) -> f64 {
        (theta / 2.0).tan().powi(4)
    }

    fn alpha_cos_arg(theta: f64) -> f64 {
        ((1.0 + tan4_half(theta)) / 2.0).sqrt()
    }

    fn beta_cos_arg(theta: f64) -> f64 {
        let t4 = tan4_half(theta);
        let inv = if t4 == 0.0 { 0.0 } else { (2.0 / (1.0 + 1.0 / t4)).sqrt() };
        ((2.0 / (1.0 + t4)).sqrt() + inv) / 2.0
    }

    #[test]
    fn closed_forms_match_caption_formulas() {
        for k in 1..100 {
            let theta = FRAC_PI_2 * k as f64 / 100.0;
            let p = clone_angles(theta).unwrap();
            let alpha = 2.0 * alpha_cos_arg(theta).min(1.0).acos();
            let beta = 2.0 * beta_cos_arg(theta).min(1.0).acos();
            assert!((p.alpha - alpha).abs() < 1e-7, "alpha at {theta}");
            assert!((p.beta - beta).abs() < 1e-7, "beta at {theta}");
            let t4 = tan4_half(theta);
            let (w0, w1) = failure_weights(theta);
            assert!((w0 - (1.0 / (1.0 + t4)).sqrt()).abs() < 1e-12);
            assert!((w1 - (1.0 / (1.0 + 1.0 / t4)).sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn orthogonal_set() {
        let p = clone_angles(FRAC_PI_2).unwrap();
        assert_eq!(p.alpha, 0.0);
        assert_eq!(p.beta, 0.0);
        assert!((p.gamma - 1.0).abs() < 1e-15);
    }

    #[test]
    fn identical_states() {
        let p = clone_angles(0.0).unwrap();
        assert!((p.alpha - FRAC_PI_2).abs() < 1e-15);
        assert!((p.beta - FRAC_PI_2).abs() < 1e-15);
        assert_eq!(p.gamma, 0.5);
    }

    #[test]
    fn gamma_at_pi_over_three() {
        let p = clone_angles(FRAC_PI_3).unwrap();
        assert!((p.gamma - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_out_of_range() {
        assert_eq!(clone_angles(-0.1), Err(Error::ThetaOutOfRange(-0.1)));
        assert!(clone_angles(PI).is_err());
        assert!(clone_angles(f64::NAN).is_err());
        assert!(CloneSet::new(2.0, Sign::Plus).is_err());
    }

    #[test]
    fn arccos_arguments_stay_in_unit_interval() {
        for k in 0..=1000 {
            let theta = FRAC_PI_2 * k as f64 / 1000.0;
            for arg in [alpha_cos_arg(theta), beta_cos_arg(theta)] {
                assert!((0.0..=1.0 + 1e-15).contains(&arg), "theta {theta}: {arg}");
            }
        }
    }

    #[test]
    fn gamma_is_monotone_and_bounded() {
        let mut last = 0.0;
        for k in 0..=200 {
            let g = clone_angles(FRAC_PI_2 * k as f64 / 200.0).unwrap().gamma;
            assert!((0.5..=1.0).contains(&g));
            assert!(g >= last);
            last = g;
        }
    }

    #[test]
    fn grid_endpoint_is_clamped() {
        let theta = 6.0 * (FRAC_PI_4 / 3.0);
        let p = clone_angles(theta).unwrap();
        assert!(p.theta <= FRAC_PI_2);
    }
}
