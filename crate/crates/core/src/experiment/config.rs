use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;

use crate::cloning::{CloneSet, Sign};
use crate::error::{Error, Result};
use crate::nmr::{key_values, AmplitudeError, SpinSystem, DEFAULT_EPSILON, SPIN_LABELS};

/// Which model of the machine a sweep runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Level {
    /// The ideal cloning unitary.
    Gate,
    /// The compiled pulse sequence under the spin Hamiltonian.
    Pulse,
    /// Both, cross-checked against each other.
    Both,
}

impl Level {
    pub fn needs_layout(self) -> bool {
        self != Level::Gate
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Level::Gate => "gate",
            Level::Pulse => "pulse",
            Level::Both => "both",
        })
    }
}

impl FromStr for Level {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "gate" => Ok(Level::Gate),
            "pulse" => Ok(Level::Pulse),
            "both" => Ok(Level::Both),
            other => Err(Error::Config(format!("unknown level {other:?}"))),
        }
    }
}

/// Parses an angle in radians, or a multiple of π such as `pi/12`,
/// `5pi/12`, `-pi/4`, `2*pi/3` or `π/2`.
pub fn parse_angle(text: &str) -> Result<f64> {
    let s = text.trim().to_ascii_lowercase().replace('π', "pi");
    let bad = || Error::Config(format!("not an angle: {text:?}"));
    let Some((coef, rest)) = s.split_once("pi") else {
        let v: f64 = s.parse().map_err(|_| bad())?;
        return if v.is_finite() { Ok(v) } else { Err(bad()) };
    };
    let coef = coef.trim().trim_end_matches('*').trim();
    let k = match coef {
        "" | "+" => 1.0,
        "-" => -1.0,
        c => c.parse::<f64>().map_err(|_| bad())?,
    };
    let rest = rest.trim();
    let d = if rest.is_empty() {
        1.0
    } else {
        let den = rest.strip_prefix('/').ok_or_else(bad)?;
        den.trim().parse::<f64>().map_err(|_| bad())?
    };
    if d == 0.0 || !k.is_finite() || !d.is_finite() {
        return Err(bad());
    }
    Ok(k * PI / d)
}

/// `+`, `-` or `both`.
pub fn parse_signs(text: &str) -> Result<Vec<Sign>> {
    match text.trim() {
        "both" | "+-" | "±" => Ok(Sign::BOTH.to_vec()),
        s => Ok(vec![s.parse()?]),
    }
}

fn signs_label(signs: &[Sign]) -> String {
    if signs.len() == 2 {
        "both".into()
    } else {
        signs.iter().map(Sign::to_string).collect()
    }
}

/// Everything a sweep depends on.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub theta_start: f64,
    pub theta_end: f64,
    /// Number of grid points, endpoints included.
    pub steps: usize,
    pub signs: Vec<Sign>,
    pub level: Level,
    /// Relative rf amplitude error on every pulse.
    pub delta: f64,
    /// Per-spin overrides of `delta`.
    pub spin_delta: [Option<f64>; 3],
    pub epsilon: f64,
    pub seed: u64,
    /// Sampling mode when set.
    pub shots: Option<u64>,
    pub system: SpinSystem,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            theta_start: 0.0,
            theta_end: FRAC_PI_2,
            steps: 7,
            signs: Sign::BOTH.to_vec(),
            level: Level::Gate,
            delta: 0.0,
            spin_delta: [None; 3],
            epsilon: DEFAULT_EPSILON,
            seed: 0,
            shots: None,
            system: SpinSystem::default(),
        }
    }
}

fn number<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse {value:?}")))
}

impl SweepConfig {
    /// The θ grid, evenly spaced from start to end.
    pub fn thetas(&self) -> Result<Vec<f64>> {
        if self.steps == 0 {
            return Err(Error::Config("steps must be at least 1".into()));
        }
        if self.steps == 1 {
            return Ok(vec![self.theta_start]);
        }
        let span = self.theta_end - self.theta_start;
        let n = (self.steps - 1) as f64;
        Ok((0..self.steps)
            .map(|k| self.theta_start + span * k as f64 / n)
            .collect())
    }

    /// All `(θ, sign)` pairs in output order: θ ascending, then the signs
    /// in the order given.
    pub fn points(&self) -> Result<Vec<CloneSet>> {
        self.validate()?;
        let mut out = Vec::new();
        for theta in self.thetas()? {
            for &sign in &self.signs {
                out.push(CloneSet::new(theta, sign)?);
            }
        }
        Ok(out)
    }

    pub fn validate(&self) -> Result<()> {
        if self.signs.is_empty() {
            return Err(Error::Config("no sign selected".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return Err(Error::EpsilonOutOfRange(self.epsilon));
        }
        let deltas = std::iter::once(self.delta).chain(self.spin_delta.iter().flatten().copied());
        for d in deltas {
            if !d.is_finite() || d.abs() >= 1.0 {
                return Err(Error::Config(format!("delta {d} outside (-1, 1)")));
            }
        }
        if self.shots == Some(0) {
            return Err(Error::Config("shots must be positive".into()));
        }
        for theta in self.thetas()? {
            CloneSet::new(theta, Sign::Plus)?;
        }
        Ok(())
    }

    pub fn amplitude_error(&self) -> AmplitudeError {
        let mut e = AmplitudeError::uniform(self.delta);
        for (slot, d) in e.per_spin.iter_mut().zip(self.spin_delta) {
            if let Some(d) = d {
                *slot = d;
            }
        }
        e
    }

    /// No rf error and no sampling: the results must be exact.
    pub fn is_noise_free(&self) -> bool {
        self.amplitude_error().is_zero() && self.shots.is_none()
    }

    /// Sets one key. Besides the sweep fields this accepts every
    /// [`SpinSystem`] key.
    pub fn set_key(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "theta_start" => self.theta_start = parse_angle(value)?,
            "theta_end" => self.theta_end = parse_angle(value)?,
            "theta" => {
                self.theta_start = parse_angle(value)?;
                self.theta_end = self.theta_start;
                self.steps = 1;
            }
            "steps" => self.steps = number(key, value)?,
            "sign" => self.signs = parse_signs(value)?,
            "level" => self.level = value.parse()?,
            "delta" => self.delta = number(key, value)?,
            "delta_a" => self.spin_delta[0] = Some(number(key, value)?),
            "delta_b" => self.spin_delta[1] = Some(number(key, value)?),
            "delta_c" => self.spin_delta[2] = Some(number(key, value)?),
            "epsilon" => self.epsilon = number(key, value)?,
            "seed" => self.seed = number(key, value)?,
            "shots" => {
                self.shots = match value {
                    "none" | "" => None,
                    v => Some(number(key, v)?),
                }
            }
            _ => {
                if !self.system.set_key(key, value)? {
                    return Err(Error::Config(format!("unknown key {key:?}")));
                }
            }
        }
        Ok(())
    }

    /// Applies a `key = value` file on top of `self`.
    pub fn apply_config_text(&mut self, text: &str) -> Result<()> {
        for (line, key, value) in key_values(text)? {
            self.set_key(&key, &value).map_err(|e| Error::Parse {
                line,
                message: e.to_string(),
            })?;
        }
        Ok(())
    }

    pub fn from_config_text(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_config_text(text)?;
        Ok(cfg)
    }

    /// Key-value echo that [`SweepConfig::from_config_text`] reads back.
    pub fn to_config_text(&self) -> String {
        let mut s = format!(
            "theta_start = {:?}\ntheta_end = {:?}\nsteps = {}\nsign = {}\nlevel = {}\n\
             delta = {:?}\n",
            self.theta_start,
            self.theta_end,
            self.steps,
            signs_label(&self.signs),
            self.level,
            self.delta
        );
        for (label, d) in SPIN_LABELS.iter().zip(self.spin_delta) {
            if let Some(d) = d {
                s += &format!("delta_{label} = {d:?}\n");
            }
        }
        s += &format!("epsilon = {:?}\nseed = {}\n", self.epsilon, self.seed);
        if let Some(n) = self.shots {
            s += &format!("shots = {n}\n");
        }
        s + &self.system.to_config_text()
    }
}
