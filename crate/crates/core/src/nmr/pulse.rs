use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;

use crate::cloning::{parse_qubit, qubit_letter};
use crate::error::{Error, Result};

/// Non-empty subset of the spins {a, b, c}.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SpinSet(u8);

impl SpinSet {
    pub fn new(spins: &[usize]) -> Result<Self> {
        let mut bits = 0u8;
        for &s in spins {
            if s >= 3 {
                return Err(Error::QubitOutOfRange {
                    index: s,
                    n_qubits: 3,
                });
            }
            bits |= 1 << s;
        }
        if bits == 0 {
            return Err(Error::InvalidGate("pulse needs at least one spin".into()));
        }
        Ok(Self(bits))
    }

    pub fn single(spin: usize) -> Self {
        assert!(spin < 3, "spin index {spin} out of range");
        Self(1 << spin)
    }

    pub fn contains(self, spin: usize) -> bool {
        self.0 >> spin & 1 == 1
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        (0..3).filter(move |&s| self.contains(s))
    }
}

impl fmt::Display for SpinSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let letters: Vec<String> = self.iter().map(|s| qubit_letter(s).to_string()).collect();
        f.write_str(&letters.join(","))
    }
}

impl FromStr for SpinSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let spins = s.split(',').map(|t| parse_qubit(t.trim())).collect::<Result<Vec<_>>>()?;
        Self::new(&spins)
    }
}

/// Instantaneous rotation of every spin in `spins` by `flip·(1+δ)` about the
/// transverse axis `(cos phase, sin phase, 0)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pulse {
    pub spins: SpinSet,
    pub phase: f64,
    pub flip: f64,
    pub amplitude_error: f64,
}

/// Phase of an x pulse.
pub const PHASE_X: f64 = 0.0;
/// Phase of a y pulse.
pub const PHASE_Y: f64 = FRAC_PI_2;

impl Pulse {
    pub fn new(spins: SpinSet, phase: f64, flip: f64) -> Result<Self> {
        let p = Self {
            spins,
            phase,
            flip,
            amplitude_error: 0.0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn x(spin: usize, flip: f64) -> Result<Self> {
        Self::new(SpinSet::single(spin), PHASE_X, flip)
    }

    pub fn y(spin: usize, flip: f64) -> Result<Self> {
        Self::new(SpinSet::single(spin), PHASE_Y, flip)
    }

    pub fn with_error(mut self, delta: f64) -> Self {
        self.amplitude_error = delta;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.flip.is_finite() || self.flip <= -2.0 * PI || self.flip > 2.0 * PI {
            return Err(Error::FlipOutOfRange(self.flip));
        }
        if !self.phase.is_finite() || !self.amplitude_error.is_finite() {
            return Err(Error::InvalidGate("pulse phase and error must be finite".into()));
        }
        Ok(())
    }

    pub fn effective_flip(&self) -> f64 {
        self.flip * (1.0 + self.amplitude_error)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PulseEvent {
    Pulse(Pulse),
    Delay(f64),
    /// Rotating-frame change `Rz(angle)` on each spin in `spins`: takes no
    /// time and carries no rf error.
    Frame { spins: SpinSet, angle: f64 },
}

impl PulseEvent {
    pub fn delay(t: f64) -> Result<Self> {
        if !t.is_finite() || t < 0.0 {
            return Err(Error::NegativeDelay(t));
        }
        Ok(PulseEvent::Delay(t))
    }

    fn validate(&self) -> Result<()> {
        match self {
            PulseEvent::Pulse(p) => p.validate(),
            PulseEvent::Delay(t) => PulseEvent::delay(*t).map(|_| ()),
            PulseEvent::Frame { angle, .. } if !angle.is_finite() => {
                Err(Error::InvalidGate("frame angle must be finite".into()))
            }
            PulseEvent::Frame { .. } => Ok(()),
        }
    }
}

impl fmt::Display for PulseEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PulseEvent::Pulse(p) => {
                write!(f, "PULSE spins={} phase={:?} flip={:?}", p.spins, p.phase, p.flip)?;
                if p.amplitude_error != 0.0 {
                    write!(f, " derr={:?}", p.amplitude_error)?;
                }
                Ok(())
            }
            PulseEvent::Delay(t) => write!(f, "DELAY t={t:?}"),
            PulseEvent::Frame { spins, angle } => write!(f, "FRAME spins={spins} angle={angle:?}"),
        }
    }
}

impl FromStr for PulseEvent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut words = s.split_whitespace();
        let kind = words.next().unwrap_or_default();
        let mut fields = std::collections::BTreeMap::new();
        for w in words {
            let (k, v) = w
                .split_once('=')
                .ok_or_else(|| Error::InvalidGate(format!("expected key=value, got {w:?}")))?;
            if fields.insert(k, v).is_some() {
                return Err(Error::InvalidGate(format!("repeated field {k:?}")));
            }
        }
        let mut take = |k: &str| fields.remove(k);
        let num = |k: &str, v: Option<&str>| -> Result<f64> {
            let v = v.ok_or_else(|| Error::InvalidGate(format!("missing {k}=")))?;
            v.parse()
                .map_err(|_| Error::InvalidGate(format!("{k}: not a number: {v:?}")))
        };
        let event = match kind {
            "PULSE" => {
                let spins: SpinSet = take("spins")
                    .ok_or_else(|| Error::InvalidGate("missing spins=".into()))?
                    .parse()?;
                let phase = num("phase", take("phase"))?;
                let flip = num("flip", take("flip"))?;
                let derr = match take("derr") {
                    Some(v) => num("derr", Some(v))?,
                    None => 0.0,
                };
                PulseEvent::Pulse(Pulse::new(spins, phase, flip)?.with_error(derr))
            }
            "DELAY" => PulseEvent::delay(num("t", take("t"))?)?,
            "FRAME" => PulseEvent::Frame {
                spins: take("spins")
                    .ok_or_else(|| Error::InvalidGate("missing spins=".into()))?
                    .parse()?,
                angle: num("angle", take("angle"))?,
            },
            other => return Err(Error::InvalidGate(format!("unknown event {other:?}"))),
        };
        if let Some(k) = fields.keys().next() {
            return Err(Error::InvalidGate(format!("unexpected field {k:?}")));
        }
        event.validate()?;
        Ok(event)
    }
}

/// Per-spin rf amplitude miscalibration.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct AmplitudeError {
    pub per_spin: [f64; 3],
}

impl AmplitudeError {
    pub fn uniform(delta: f64) -> Self {
        Self {
            per_spin: [delta; 3],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.per_spin.iter().all(|&d| d == 0.0)
    }
}

/// Hard pulses and free evolutions in time order.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct PulseSequence {
    events: Vec<PulseEvent>,
}

impl PulseSequence {
    pub fn new(events: Vec<PulseEvent>) -> Result<Self> {
        for e in &events {
            e.validate()?;
        }
        Ok(Self { events })
    }

    pub fn events(&self) -> &[PulseEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Appends a pulse; zero flips are dropped.
    pub fn pulse(&mut self, p: Pulse) {
        if p.flip != 0.0 {
            self.events.push(PulseEvent::Pulse(p));
        }
    }

    /// Appends a delay; zero delays are dropped.
    pub fn delay(&mut self, t: f64) -> Result<()> {
        if let PulseEvent::Delay(t) = PulseEvent::delay(t)? {
            if t > 0.0 {
                self.events.push(PulseEvent::Delay(t));
            }
        }
        Ok(())
    }

    /// Appends a frame change; zero angles are dropped.
    pub fn frame(&mut self, spins: SpinSet, angle: f64) -> Result<()> {
        let e = PulseEvent::Frame { spins, angle };
        e.validate()?;
        if angle != 0.0 {
            self.events.push(e);
        }
        Ok(())
    }

    pub fn append(&mut self, other: &PulseSequence) {
        self.events.extend_from_slice(&other.events);
    }

    /// Sum of the delays; pulses take no time.
    pub fn total_duration(&self) -> f64 {
        self.events
            .iter()
            .map(|e| match e {
                PulseEvent::Delay(t) => *t,
                PulseEvent::Pulse(_) | PulseEvent::Frame { .. } => 0.0,
            })
            .sum()
    }

    pub fn pulse_count(&self) -> usize {
        self.events
            .iter()
            .filter(|e| matches!(e, PulseEvent::Pulse(_)))
            .count()
    }

    /// Copy with the amplitude error of each spin set on every pulse. A pulse
    /// whose spins carry different errors is split into commuting pulses.
    pub fn with_amplitude_error(&self, err: &AmplitudeError) -> PulseSequence {
        let mut events = Vec::with_capacity(self.events.len());
        for e in &self.events {
            let PulseEvent::Pulse(p) = e else {
                events.push(*e);
                continue;
            };
            let mut groups: Vec<(f64, Vec<usize>)> = Vec::new();
            for s in p.spins.iter() {
                let d = err.per_spin[s];
                match groups.iter_mut().find(|g| g.0 == d) {
                    Some(g) => g.1.push(s),
                    None => groups.push((d, vec![s])),
                }
            }
            for (d, spins) in groups {
                events.push(PulseEvent::Pulse(Pulse {
                    spins: SpinSet::new(&spins).expect("non-empty subset"),
                    amplitude_error: d,
                    ..*p
                }));
            }
        }
        PulseSequence { events }
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for e in &self.events {
            s.push_str(&e.to_string());
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut events = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            events.push(body.parse().map_err(|e: Error| Error::Parse {
                line: n + 1,
                message: e.to_string(),
            })?);
        }
        Ok(Self { events })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip_is_exact() {
        let mut seq = PulseSequence::default();
        seq.pulse(Pulse::new("a,c".parse().unwrap(), 0.1 + 0.2, PI / 3.0).unwrap());
        seq.delay(1.0 / 644.8).unwrap();
        seq.pulse(Pulse::y(1, -FRAC_PI_2).unwrap().with_error(0.03));
        let text = seq.to_text();
        assert!(text.contains("PULSE spins=a,c"));
        assert!(text.contains("derr=0.03"));
        assert_eq!(PulseSequence::from_text(&text).unwrap(), seq);
    }

    #[test]
    fn parse_with_comments() {
        let text = "# header\nPULSE spins=b phase=0 flip=3.14  # pi\n\nDELAY t=0.001\n";
        let seq = PulseSequence::from_text(text).unwrap();
        assert_eq!(seq.len(), 2);
        assert_eq!(seq.total_duration(), 0.001);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        for (text, line) in [
            ("DELAY t=-1", 1),
            ("PULSE spins=b phase=0", 1),
            ("DELAY t=1\nPULSE spins=d phase=0 flip=1", 2),
            ("PULSE spins=b phase=0 flip=7", 1),
            ("DELAY t=1 extra=2", 1),
            ("WAIT t=1", 1),
        ] {
            match PulseSequence::from_text(text) {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn flip_range() {
        assert!(Pulse::x(0, 2.0 * PI).is_ok());
        assert_eq!(Pulse::x(0, -2.0 * PI), Err(Error::FlipOutOfRange(-2.0 * PI)));
        assert!(PulseEvent::delay(-1e-9).is_err());
    }

    #[test]
    fn zero_events_are_dropped() {
        let mut seq = PulseSequence::default();
        seq.pulse(Pulse::x(0, 0.0).unwrap());
        seq.delay(0.0).unwrap();
        assert!(seq.is_empty());
    }

    #[test]
    fn per_spin_error_splits_pulses() {
        let seq = PulseSequence::new(vec![
            PulseEvent::Pulse(Pulse::new("a,b,c".parse().unwrap(), 0.0, PI).unwrap()),
            PulseEvent::Delay(0.5),
        ])
        .unwrap();
        let noisy = seq.with_amplitude_error(&AmplitudeError {
            per_spin: [0.01, 0.02, 0.01],
        });
        assert_eq!(noisy.pulse_count(), 2);
        assert_eq!(noisy.total_duration(), 0.5);
        let uniform = seq.with_amplitude_error(&AmplitudeError::uniform(0.05));
        assert_eq!(uniform.pulse_count(), 1);
    }
}
