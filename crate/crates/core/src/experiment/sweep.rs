use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::cloning::{input_bloch, CloneSet, LayoutCache, Sign};
use crate::error::{Error, Result};
use crate::readout::{write_csv, ExperimentRecord, RecordSummary};

use super::config::{Level, SweepConfig};
use super::point::{evaluate_point, point_rng, sample_record, Engine, PointResult};

/// Closure tolerance for noise-free records and for gate/pulse agreement.
pub const CLOSURE_TOL: f64 = 1e-6;

/// A layout cache read from disk and re-verified.
#[derive(Clone, Debug, PartialEq)]
pub struct LoadedLayout {
    pub path: PathBuf,
    pub cache: LayoutCache,
    /// Hex SHA-256 of the file bytes.
    pub sha256: String,
    /// Worst residual on the cached grid.
    pub residual: f64,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Reads and verifies a layout cache. A missing file is
/// [`Error::MissingLayoutCache`]; a layout that no longer passes its own
/// tolerance is [`Error::InvalidLayout`].
pub fn load_layout(path: &Path) -> Result<LoadedLayout> {
    let bytes = match std::fs::read(path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(Error::MissingLayoutCache(path.display().to_string()))
        }
        Err(e) => return Err(e.into()),
    };
    let text = String::from_utf8(bytes.clone())
        .map_err(|_| Error::Parse { line: 1, message: "layout cache is not UTF-8".into() })?;
    let cache = LayoutCache::from_text(&text)?;
    let residual = cache.verify()?;
    if residual > cache.tolerance {
        return Err(Error::InvalidLayout(format!(
            "cached layout fails its own check: residual {residual:e} > {:e}",
            cache.tolerance
        )));
    }
    Ok(LoadedLayout {
        path: path.to_path_buf(),
        cache,
        sha256: sha256_hex(&bytes),
        residual,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    /// The effective configuration in key-value form.
    pub config: String,
    pub layout_path: Option<String>,
    pub layout_sha256: Option<String>,
}

impl Provenance {
    pub fn new(cfg: &SweepConfig, layout: Option<&LoadedLayout>) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config: cfg.to_config_text(),
            layout_path: layout.map(|l| l.path.display().to_string()),
            layout_sha256: layout.map(|l| l.sha256.clone()),
        }
    }
}

/// Gate and/or pulse results for one `(θ, sign)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub gate: Option<PointResult>,
    pub pulse: Option<PointResult>,
    /// What goes into the CSV: the pulse record when there is one, possibly
    /// resampled.
    pub record: ExperimentRecord,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunReport {
    pub config: SweepConfig,
    pub rows: Vec<SweepRow>,
    pub provenance: Provenance,
    /// Every closure or agreement check that failed, in grid order.
    pub violations: Vec<String>,
}

#[derive(Serialize)]
struct ReportJson<'a> {
    provenance: &'a Provenance,
    records: Vec<RecordSummary>,
    violations: &'a [String],
}

impl RunReport {
    pub fn records(&self) -> Vec<ExperimentRecord> {
        self.rows.iter().map(|r| r.record.clone()).collect()
    }

    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_csv(out, &self.records())
    }

    pub fn csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Io(e.to_string()))
    }

    /// Nested report with provenance and reconstructed matrices.
    pub fn to_json(&self) -> Result<String> {
        let doc = ReportJson {
            provenance: &self.provenance,
            records: self.rows.iter().map(|r| r.record.summary()).collect(),
            violations: &self.violations,
        };
        serde_json::to_string_pretty(&doc).map_err(|e| Error::Io(e.to_string()))
    }

    /// Mean of `1 − F` over both clones of every row.
    pub fn mean_infidelity(&self) -> f64 {
        mean_infidelity(self.rows.iter().map(|r| &r.record))
    }
}

pub fn mean_infidelity<'a>(records: impl Iterator<Item = &'a ExperimentRecord>) -> f64 {
    let (sum, n) = records.fold((0.0, 0usize), |(s, n), r| {
        (s + (1.0 - r.fidelity_b) + (1.0 - r.fidelity_c), n + 2)
    });
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

fn closure_violations(rec: &ExperimentRecord, label: &str) -> Vec<String> {
    let mut v = Vec::new();
    let at = format!("{label} theta={:.6} sign={}", rec.theta, rec.sign);
    let dg = (rec.gamma_est - rec.gamma_theory).abs();
    if dg.is_nan() || dg >= CLOSURE_TOL {
        v.push(format!("{at}: |gamma_est - gamma| = {dg:e}"));
    }
    for (name, f) in [("Fb", rec.fidelity_b), ("Fc", rec.fidelity_c)] {
        let d = (f - 1.0).abs();
        if d.is_nan() || d >= CLOSURE_TOL {
            v.push(format!("{at}: |{name} - 1| = {d:e}"));
        }
    }
    if let Ok(set) = CloneSet::new(rec.theta, rec.sign) {
        let expect = input_bloch(&set);
        for (name, r) in [("b", &rec.bloch_b), ("c", &rec.bloch_c)] {
            let d = r.distance(&expect);
            if d.is_nan() || d >= CLOSURE_TOL {
                v.push(format!("{at}: Bloch vector of {name} off by {d:e}"));
            }
        }
    }
    v
}

fn agreement_violations(gate: &ExperimentRecord, pulse: &ExperimentRecord) -> Vec<String> {
    let at = format!("theta={:.6} sign={}", gate.theta, gate.sign);
    [
        ("gamma_est", gate.gamma_est, pulse.gamma_est),
        ("Fb", gate.fidelity_b, pulse.fidelity_b),
        ("Fc", gate.fidelity_c, pulse.fidelity_c),
    ]
    .into_iter()
    .filter_map(|(name, g, p)| {
        let d = (g - p).abs();
        (d.is_nan() || d >= CLOSURE_TOL).then(|| format!("{at}: gate/pulse {name} differ by {d:e}"))
    })
    .collect()
}

fn evaluate_row(index: usize, set: &CloneSet, cfg: &SweepConfig, layout: Option<&LoadedLayout>) -> Result<SweepRow> {
    let cache = layout.map(|l| &l.cache.layout);
    let run = |engine| evaluate_point(set, engine, cfg, cache);
    let gate = match cfg.level {
        Level::Gate | Level::Both => Some(run(Engine::Gate)?),
        Level::Pulse => None,
    };
    let pulse = match cfg.level {
        Level::Pulse | Level::Both => Some(run(Engine::Pulse)?),
        Level::Gate => None,
    };
    let exact = pulse.as_ref().or(gate.as_ref()).expect("some engine ran");
    let record = match cfg.shots {
        Some(shots) => sample_record(&exact.record, shots, &mut point_rng(cfg.seed, index))?,
        None => exact.record.clone(),
    };
    Ok(SweepRow { gate, pulse, record })
}

/// Evaluates every `(θ, sign)` of `cfg`, concurrently, and collects the
/// rows in grid order.
///
/// In noise-free mode every record must close on the ideal values within
/// [`CLOSURE_TOL`]; with `level = both` and no rf error the two engines
/// must also agree within it. Failures land in `violations`.
pub fn run_sweep(cfg: &SweepConfig, layout: Option<&LoadedLayout>) -> Result<RunReport> {
    let points = cfg.points()?;
    if cfg.level.needs_layout() && layout.is_none() {
        return Err(Error::MissingLayoutCache("(none given)".into()));
    }
    let rows = points
        .par_iter()
        .enumerate()
        .map(|(i, set)| evaluate_row(i, set, cfg, layout))
        .collect::<Result<Vec<_>>>()?;

    let mut violations = Vec::new();
    let exact_engines = cfg.amplitude_error().is_zero();
    for row in &rows {
        if cfg.is_noise_free() {
            for (label, r) in [("gate", &row.gate), ("pulse", &row.pulse)] {
                if let Some(r) = r {
                    violations.extend(closure_violations(&r.record, label));
                }
            }
        }
        if let (true, Some(g), Some(p)) = (exact_engines, &row.gate, &row.pulse) {
            violations.extend(agreement_violations(&g.record, &p.record));
        }
    }
    Ok(RunReport {
        config: cfg.clone(),
        rows,
        provenance: Provenance::new(cfg, layout),
        violations,
    })
}

/// Target of the noise calibration and the accepted band around it.
pub const TARGET_INFIDELITY: f64 = 0.02;
pub const INFIDELITY_BAND: (f64, f64) = (0.01, 0.03);

/// `0, 0.005, …, 0.1`.
pub fn default_calibration_deltas() -> Vec<f64> {
    (0..=20).map(|k| k as f64 * 0.005).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CalibrationPoint {
    pub delta: f64,
    pub mean_infidelity: f64,
    pub max_infidelity: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Calibration {
    pub scan: Vec<CalibrationPoint>,
    /// δ where the mean infidelity meets [`TARGET_INFIDELITY`]: bisected
    /// between the two scan points that bracket it, else the closest scan
    /// point.
    pub chosen: CalibrationPoint,
    pub in_band: bool,
    /// `(sign, F_b, F_c)` at θ = π/4 with the chosen δ.
    pub quarter_pi: Vec<(Sign, f64, f64)>,
}

/// Stop bisecting once the mean infidelity is this close to the target.
const CALIBRATION_TOL: f64 = 1e-5;

fn calibration_point(cfg: &SweepConfig, layout: &LoadedLayout, delta: f64) -> Result<CalibrationPoint> {
    let report = run_sweep(&noisy(cfg, delta), Some(layout))?;
    let worst = report
        .rows
        .iter()
        .flat_map(|r| [1.0 - r.record.fidelity_b, 1.0 - r.record.fidelity_c])
        .fold(0.0, f64::max);
    Ok(CalibrationPoint {
        delta,
        mean_infidelity: report.mean_infidelity(),
        max_infidelity: worst,
    })
}

fn noisy(cfg: &SweepConfig, delta: f64) -> SweepConfig {
    SweepConfig {
        level: Level::Pulse,
        delta,
        spin_delta: [None; 3],
        shots: None,
        ..cfg.clone()
    }
}

/// Scans `deltas` with pulse-level sweeps of `cfg`'s grid, then bisects
/// for the δ whose mean clone infidelity equals the target.
pub fn calibrate_noise(cfg: &SweepConfig, layout: &LoadedLayout, deltas: &[f64]) -> Result<Calibration> {
    if deltas.is_empty() {
        return Err(Error::Config("no delta values to scan".into()));
    }
    let scan = deltas
        .iter()
        .map(|&d| calibration_point(cfg, layout, d))
        .collect::<Result<Vec<_>>>()?;
    let miss = |p: &CalibrationPoint| p.mean_infidelity - TARGET_INFIDELITY;
    let bracket = scan
        .windows(2)
        .find(|w| miss(&w[0]) <= 0.0 && miss(&w[1]) >= 0.0)
        .map(|w| (w[0], w[1]));
    let chosen = match bracket {
        Some((mut lo, mut hi)) => {
            let mut best = if miss(&lo).abs() <= miss(&hi).abs() { lo } else { hi };
            for _ in 0..40 {
                if miss(&best).abs() < CALIBRATION_TOL {
                    break;
                }
                let mid = calibration_point(cfg, layout, 0.5 * (lo.delta + hi.delta))?;
                if miss(&mid) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if miss(&mid).abs() < miss(&best).abs() {
                    best = mid;
                }
            }
            best
        }
        None => *scan
            .iter()
            .min_by(|a, b| miss(a).abs().total_cmp(&miss(b).abs()))
            .expect("non-empty scan"),
    };
    let (lo, hi) = INFIDELITY_BAND;
    let single = noisy(cfg, chosen.delta);
    let mut quarter_pi = Vec::new();
    for &sign in &cfg.signs {
        let set = CloneSet::new(std::f64::consts::FRAC_PI_4, sign)?;
        let r = evaluate_point(&set, Engine::Pulse, &single, Some(&layout.cache.layout))?.record;
        quarter_pi.push((sign, r.fidelity_b, r.fidelity_c));
    }
    Ok(Calibration {
        in_band: (lo..=hi).contains(&chosen.mean_infidelity),
        scan,
        chosen,
        quarter_pi,
    })
}
