use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Spin labels in register order.
pub const SPIN_LABELS: [char; 3] = ['a', 'b', 'c'];
/// Nuclei carrying each spin.
pub const NUCLEI: [&str; 3] = ["1H", "13C", "19F"];

pub const J_AB: f64 = 161.3;
pub const J_BC: f64 = -192.2;
pub const J_AC: f64 = 47.6;

/// Three coupled spins: rotating-frame offsets (rad/s) and scalar couplings (Hz).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpinSystem {
    offsets: [f64; 3],
    j_ab: f64,
    j_bc: f64,
    j_ac: f64,
}

impl Default for SpinSystem {
    fn default() -> Self {
        Self {
            offsets: [0.0; 3],
            j_ab: J_AB,
            j_bc: J_BC,
            j_ac: J_AC,
        }
    }
}

impl SpinSystem {
    pub fn new(offsets: [f64; 3], j_ab: f64, j_bc: f64, j_ac: f64) -> Result<Self> {
        let couplings = [j_ab, j_bc, j_ac];
        if offsets.iter().chain(&couplings).any(|v| !v.is_finite()) {
            return Err(Error::Config("spin system values must be finite".into()));
        }
        Ok(Self {
            offsets,
            j_ab,
            j_bc,
            j_ac,
        })
    }

    /// No offsets and no couplings.
    pub fn decoupled() -> Self {
        Self {
            offsets: [0.0; 3],
            j_ab: 0.0,
            j_bc: 0.0,
            j_ac: 0.0,
        }
    }

    pub fn offset(&self, spin: usize) -> f64 {
        self.offsets[spin]
    }

    pub fn offsets(&self) -> [f64; 3] {
        self.offsets
    }

    /// `J_ij` in Hz; symmetric, zero on the diagonal.
    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        match (i.min(j), i.max(j)) {
            (0, 1) => self.j_ab,
            (1, 2) => self.j_bc,
            (0, 2) => self.j_ac,
            _ => 0.0,
        }
    }

    pub fn with_offset(mut self, spin: usize, omega: f64) -> Self {
        self.offsets[spin] = omega;
        self
    }

    pub fn with_coupling(mut self, i: usize, j: usize, hz: f64) -> Self {
        match (i.min(j), i.max(j)) {
            (0, 1) => self.j_ab = hz,
            (1, 2) => self.j_bc = hz,
            (0, 2) => self.j_ac = hz,
            _ => {}
        }
        self
    }

    /// Sets one of `J_ab`, `J_bc`, `J_ac`, `w_a`, `w_b`, `w_c`. Returns
    /// `Ok(false)` for keys that do not belong to the spin system.
    pub fn set_key(&mut self, key: &str, value: &str) -> Result<bool> {
        let slot = match key {
            "J_ab" => &mut self.j_ab,
            "J_bc" => &mut self.j_bc,
            "J_ac" => &mut self.j_ac,
            "w_a" => &mut self.offsets[0],
            "w_b" => &mut self.offsets[1],
            "w_c" => &mut self.offsets[2],
            _ => return Ok(false),
        };
        let v: f64 = value
            .parse()
            .map_err(|_| Error::Config(format!("{key}: not a number: {value:?}")))?;
        if !v.is_finite() {
            return Err(Error::Config(format!("{key}: not finite")));
        }
        *slot = v;
        Ok(true)
    }

    /// Parses a key-value file that contains only spin-system keys.
    pub fn from_config_text(text: &str) -> Result<Self> {
        let mut sys = Self::default();
        for (line, key, value) in key_values(text)? {
            if !sys.set_key(&key, &value)? {
                return Err(Error::Parse {
                    line,
                    message: format!("unknown key {key:?}"),
                });
            }
        }
        Ok(sys)
    }

    pub fn to_config_text(&self) -> String {
        format!(
            "J_ab = {:?}\nJ_bc = {:?}\nJ_ac = {:?}\nw_a = {:?}\nw_b = {:?}\nw_c = {:?}\n",
            self.j_ab, self.j_bc, self.j_ac, self.offsets[0], self.offsets[1], self.offsets[2]
        )
    }
}

/// Splits `key = value` lines, skipping blanks and `#` comments. Returns
/// `(line number, key, value)` triples.
pub fn key_values(text: &str) -> Result<Vec<(usize, String, String)>> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (k, v) = body.split_once('=').ok_or_else(|| Error::Parse {
            line: n + 1,
            message: format!("expected key = value, got {body:?}"),
        })?;
        out.push((n + 1, k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}
