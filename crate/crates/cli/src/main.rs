//! `pqcm`: sweeps, single-point reports, layout search, pulse compilation and
//! noise calibration for the probabilistic cloning machine.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pqcm::cloning::{
    clone_target, default_search_grid, ControlPolarity, Layout, SearchOutcome,
    DEFAULT_SEARCH_TOL,
};
use pqcm::experiment::{
    calibrate_noise, compile_experiment, default_calibration_deltas, evaluate_point,
    expected_failure, find_layout, held_out_residual, load_layout, parse_angle, parse_signs,
    run_sweep, Engine, FindLayout, Level, LoadedLayout, PointResult, SweepConfig, HELD_OUT,
    INFIDELITY_BAND,
};
use pqcm::quantum::{Branch, DensityMatrix};
use pqcm::readout::CloneReadout;
use pqcm::Error;

const DEFAULT_LAYOUT: &str = "pqcm-layout.txt";

#[derive(Parser)]
#[command(name = "pqcm", version, about = "Probabilistic quantum cloning on a three-spin NMR register")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep θ and write one CSV row per (θ, sign).
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Also write a JSON report with provenance and density matrices.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Detailed report for a single θ.
    Run(Common),
    /// Search for the five-gate layout, or verify the cached one.
    FindLayout(FindArgs),
    /// Write the pulse program for one θ.
    Compile(Common),
    /// Scan the rf amplitude error for a ~2% mean infidelity.
    CalibrateNoise {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.1)]
        delta_max: f64,
        #[arg(long, default_value_t = 0.005)]
        delta_step: f64,
    },
}

#[derive(Args, Clone)]
struct Common {
    /// Single angle: radians or a π fraction such as `pi/12`.
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    theta_start: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    theta_end: Option<String>,
    /// Number of grid points.
    #[arg(long)]
    steps: Option<usize>,
    /// `+`, `-` or `both`.
    #[arg(long, allow_hyphen_values = true)]
    sign: Option<String>,
    /// `gate`, `pulse` or `both`.
    #[arg(long)]
    level: Option<String>,
    /// Relative rf amplitude error.
    #[arg(long, allow_negative_numbers = true)]
    delta: Option<f64>,
    /// Pseudo-pure polarization.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Finite-shot sampling with this many shots per estimate.
    #[arg(long)]
    shots: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Key-value file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Layout cache written by `find-layout`.
    #[arg(long, default_value = DEFAULT_LAYOUT)]
    layout: PathBuf,
}

#[derive(Args)]
struct FindArgs {
    /// Comma-separated interior angles.
    #[arg(long)]
    grid: Option<String>,
    #[arg(long, default_value_t = DEFAULT_SEARCH_TOL)]
    tolerance: f64,
    /// Search even if a cache exists.
    #[arg(long)]
    force: bool,
    /// Only closed controls (finds nothing; prints the nearest miss).
    #[arg(long)]
    closed_only: bool,
    /// Cache path; overrides `--layout`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = DEFAULT_LAYOUT)]
    layout: PathBuf,
}

/// Why a command stopped.
enum Failure {
    Usage(String),
    Tolerance(String),
    MissingCache(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::MissingLayoutCache(_) => Failure::MissingCache(msg),
            Error::Config(_)
            | Error::Parse { .. }
            | Error::ThetaOutOfRange(_)
            | Error::EpsilonOutOfRange(_)
            | Error::GridTooSmall(_) => Failure::Usage(msg),
            _ => Failure::Runtime(msg),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Sweep { common, report } => cmd_sweep(&common, report.as_deref()),
        Command::Run(common) => cmd_run(&common),
        Command::FindLayout(args) => cmd_find_layout(&args),
        Command::Compile(common) => cmd_compile(&common),
        Command::CalibrateNoise {
            common,
            delta_max,
            delta_step,
        } => cmd_calibrate(&common, delta_max, delta_step),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (code, msg) = match f {
                Failure::Tolerance(m) => (1, m),
                Failure::Runtime(m) => (1, format!("error: {m}")),
                Failure::Usage(m) => (2, format!("usage error: {m}")),
                Failure::MissingCache(m) => (3, format!("error: {m}")),
            };
            eprintln!("{msg}");
            ExitCode::from(code)
        }
    }
}

/// Defaults, then the config file, then flags.
fn build_config(c: &Common, default_sign: &str) -> Result<SweepConfig, Failure> {
    let mut cfg = SweepConfig {
        signs: parse_signs(default_sign)?,
        ..Default::default()
    };
    if let Some(path) = &c.config {
        let text = fs::read_to_string(path)
            .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        cfg.apply_config_text(&text)?;
    }
    if let Some(t) = &c.theta {
        cfg.set_key("theta", t)?;
    }
    if let Some(t) = &c.theta_start {
        cfg.theta_start = parse_angle(t)?;
    }
    if let Some(t) = &c.theta_end {
        cfg.theta_end = parse_angle(t)?;
    }
    if let Some(n) = c.steps {
        cfg.steps = n;
    }
    if let Some(s) = &c.sign {
        cfg.signs = parse_signs(s)?;
    }
    if let Some(l) = &c.level {
        cfg.level = l.parse()?;
    }
    if let Some(d) = c.delta {
        cfg.delta = d;
    }
    if let Some(e) = c.epsilon {
        cfg.epsilon = e;
    }
    if c.shots.is_some() {
        cfg.shots = c.shots;
    }
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn layout_for(cfg: &SweepConfig, c: &Common) -> Result<Option<LoadedLayout>, Failure> {
    if cfg.level.needs_layout() {
        Ok(Some(load_layout(&c.layout)?))
    } else {
        Ok(None)
    }
}

/// Writes to `path`, or to standard output.
fn emit(path: Option<&Path>, text: &str) -> io::Result<()> {
    match path {
        Some(p) => fs::write(p, text),
        None => io::stdout().lock().write_all(text.as_bytes()),
    }
}

fn cmd_sweep(c: &Common, report_path: Option<&Path>) -> CmdResult {
    let cfg = build_config(c, "both")?;
    let layout = layout_for(&cfg, c)?;
    let report = run_sweep(&cfg, layout.as_ref())?;
    emit(c.out.as_deref(), &report.csv_string()?)?;
    if let Some(p) = report_path {
        fs::write(p, report.to_json()? + "\n")?;
    }
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Tolerance(format!(
            "{} tolerance violation(s):\n  {}",
            report.violations.len(),
            report.violations.join("\n  ")
        )))
    }
}

fn matrix_lines(name: &str, rho: &DensityMatrix) -> String {
    let mut s = format!("{name}\n");
    for part in ["re", "im"] {
        for r in 0..rho.dim() {
            let row: Vec<String> = (0..rho.dim())
                .map(|col| {
                    let v = rho.entry(r, col);
                    format!("{:>+10.6}", if part == "re" { v.re } else { v.im })
                })
                .collect();
            s += &format!("  {part} [{}]\n", row.join(" "));
        }
    }
    s
}

fn readout_lines(label: char, r: &CloneReadout) -> String {
    let mut s = format!("peaks observed on {label}, xy acquisition\n{}", r.xy);
    s += &format!("peaks observed on {label}, z acquisition\n{}", r.z);
    s += &format!("grouped signals on {label} (P_kx, P_ky, P_kz)\n");
    for k in 1..=4 {
        s += &format!(
            "  P{k} {:>+.9} {:>+.9} {:>+.9}\n",
            r.signals.get(k, 0),
            r.signals.get(k, 1),
            r.signals.get(k, 2)
        );
    }
    s
}

fn point_report(p: &PointResult) -> Result<String, Failure> {
    let rec = &p.record;
    let mut s = format!(
        "theta = {:.9}  sign = {}  engine = {}\n",
        rec.theta, rec.sign, p.engine
    );
    if let Some(seq) = &p.sequence {
        s += &format!(
            "pulse program: {} pulses, {:.4} ms\n",
            seq.pulse_count(),
            seq.total_duration() * 1e3
        );
    }
    s += &format!(
        "success probability {:.9}  gamma_theory {:.9}  gamma_est {:.9}\n",
        p.success_probability, rec.gamma_theory, rec.gamma_est
    );
    s += &format!("F_b = {:.9}  F_c = {:.9}\n", rec.fidelity_b, rec.fidelity_c);
    for (label, t) in [('b', &rec.tomography_b), ('c', &rec.tomography_c)] {
        let m = t.measured;
        s += &format!(
            "r_{label} = ({:+.9}, {:+.9}, {:+.9})  projection {:.2e}\n",
            m.x, m.y, m.z, t.projection_distance
        );
    }
    s += &matrix_lines("rho_0 (input)", &clone_target(&p.set).to_density());
    s += &matrix_lines("rho_b", &rec.tomography_b.rho);
    s += &matrix_lines("rho_c", &rec.tomography_c.rho);
    s += "failure branch: ";
    match &p.failure {
        Branch::Empty => s += "empty branch\n",
        Branch::State(phi) => {
            let amps: Vec<String> = phi
                .amplitudes()
                .iter()
                .map(|a| format!("{:+.6}{:+.6}i", a.re, a.im))
                .collect();
            s += &format!("[{}]", amps.join(", "));
            if let Some(ideal) = expected_failure(rec.theta)? {
                s += &format!("  distance to ideal {:.2e}", phi.ray_distance(&ideal));
            }
            s += "\n";
        }
    }
    s += &readout_lines('b', &p.readouts[0]);
    s += &readout_lines('c', &p.readouts[1]);
    Ok(s)
}

fn cmd_run(c: &Common) -> CmdResult {
    if c.theta.is_none() && c.config.is_none() {
        return Err(Failure::Usage("run needs --theta".into()));
    }
    let cfg = build_config(c, "+")?;
    let thetas = cfg.thetas()?;
    if thetas.len() != 1 {
        return Err(Failure::Usage("run takes a single --theta".into()));
    }
    let layout = layout_for(&cfg, c)?;
    let engines: &[Engine] = match cfg.level {
        Level::Gate => &[Engine::Gate],
        Level::Pulse => &[Engine::Pulse],
        Level::Both => &[Engine::Gate, Engine::Pulse],
    };
    let mut text = String::new();
    let mut summaries = Vec::new();
    for set in cfg.points()? {
        for &engine in engines {
            let p = evaluate_point(&set, engine, &cfg, layout.as_ref().map(|l| &l.cache.layout))?;
            text += &point_report(&p)?;
            text += "\n";
            summaries.push(p.record.summary());
        }
    }
    print!("{text}");
    if let Some(out) = &c.out {
        let json = serde_json::to_string_pretty(&summaries)
            .map_err(|e| Failure::Runtime(e.to_string()))?;
        fs::write(out, json + "\n")?;
    }
    Ok(())
}

fn parse_grid(text: &str) -> Result<Vec<f64>, Failure> {
    text.split(',')
        .map(|t| parse_angle(t).map_err(Failure::from))
        .collect()
}

fn layout_lines(layout: &Layout) -> String {
    layout.to_string().lines().map(|l| format!("  {l}\n")).collect()
}

fn cmd_find_layout(a: &FindArgs) -> CmdResult {
    let path = a.out.as_deref().unwrap_or(&a.layout);
    let grid = match &a.grid {
        Some(g) => parse_grid(g)?,
        None => default_search_grid(),
    };
    if !(a.tolerance > 0.0) {
        return Err(Failure::Usage("tolerance must be positive".into()));
    }
    let polarity = if a.closed_only {
        ControlPolarity::ClosedOnly
    } else {
        ControlPolarity::Both
    };
    match find_layout(path, &grid, a.tolerance, polarity, a.force)? {
        FindLayout::Verified(l) => {
            println!(
                "cache verified: {} (residual {:.2e} on {} grid angles)",
                path.display(),
                l.residual,
                l.cache.grid.len()
            );
            print!("{}", layout_lines(&l.cache.layout));
            held_out(&l.cache.layout, l.cache.tolerance)
        }
        FindLayout::Searched {
            outcome,
            elapsed,
            written,
        } => {
            println!(
                "examined {} candidates in {:.3} s",
                outcome.examined(),
                elapsed.as_secs_f64()
            );
            match (outcome, written) {
                (SearchOutcome::Found { candidate, residual, .. }, Some(l)) => {
                    println!(
                        "found candidate #{} (residual {residual:.2e}); wrote {}",
                        candidate.index,
                        path.display()
                    );
                    print!("{}", layout_lines(&l.cache.layout));
                    held_out(&l.cache.layout, a.tolerance)
                }
                (SearchOutcome::NotFound { closest, residual, .. }, _) => {
                    let mut msg = format!(
                        "no layout within tolerance {:e}; nearest miss is candidate #{} with residual {residual:.3e}:\n",
                        a.tolerance, closest.index
                    );
                    msg += &layout_lines(&closest.layout);
                    Err(Failure::Tolerance(msg.trim_end().to_string()))
                }
                _ => Err(Failure::Runtime("search succeeded but no cache was written".into())),
            }
        }
    }
}

fn held_out(layout: &Layout, tolerance: f64) -> CmdResult {
    let r = held_out_residual(layout)?;
    let angles: Vec<String> = HELD_OUT.iter().map(|t| format!("{t:.6}")).collect();
    let ok = r <= tolerance;
    println!(
        "held-out check at theta = {}: residual {r:.2e} {}",
        angles.join(", "),
        if ok { "pass" } else { "FAIL" }
    );
    if ok {
        Ok(())
    } else {
        Err(Failure::Tolerance("held-out check failed".into()))
    }
}

fn cmd_compile(c: &Common) -> CmdResult {
    let cfg = build_config(c, "+")?;
    let thetas = cfg.thetas()?;
    if thetas.len() != 1 || cfg.signs.len() != 1 {
        return Err(Failure::Usage("compile takes a single --theta and a single --sign".into()));
    }
    let layout = load_layout(&c.layout)?;
    let r = compile_experiment(thetas[0], cfg.signs[0], &cfg.system, &layout.cache.layout)?;
    let header = format!(
        "# theta={:?} sign={} layout_sha256={}\n",
        r.set.theta(),
        r.set.sign(),
        layout.sha256
    );
    emit(c.out.as_deref(), &(header + &r.sequence.to_text()))?;
    let summary = format!(
        "{} pulses, total duration {:.6} ms\noutput distance {:.2e}, text round trip {}\npropagator check: {}",
        r.sequence.pulse_count(),
        r.duration * 1e3,
        r.output_distance,
        if r.round_trip_exact { "exact" } else { "differs" },
        if r.passed() { "pass" } else { "FAIL" }
    );
    if c.out.is_some() {
        println!("{summary}");
    } else {
        eprintln!("{summary}");
    }
    if r.passed() {
        Ok(())
    } else {
        Err(Failure::Tolerance("compiled sequence fails the propagator check".into()))
    }
}

fn cmd_calibrate(c: &Common, delta_max: f64, delta_step: f64) -> CmdResult {
    let cfg = build_config(c, "both")?;
    if !(delta_step > 0.0) || !(delta_max >= 0.0) || delta_max >= 1.0 {
        return Err(Failure::Usage("need delta_step > 0 and 0 <= delta_max < 1".into()));
    }
    let deltas = if delta_max == 0.1 && delta_step == 0.005 {
        default_calibration_deltas()
    } else {
        let n = (delta_max / delta_step + 1e-9).floor() as usize;
        (0..=n).map(|k| k as f64 * delta_step).collect()
    };
    let layout = load_layout(&c.layout)?;
    let cal = calibrate_noise(&cfg, &layout, &deltas)?;

    let mut csv = String::from("delta,mean_infidelity,max_infidelity\n");
    for p in &cal.scan {
        csv += &format!("{:.4},{:.9},{:.9}\n", p.delta, p.mean_infidelity, p.max_infidelity);
    }
    match &c.out {
        Some(path) => fs::write(path, &csv)?,
        None => print!("{csv}"),
    }
    let (lo, hi) = INFIDELITY_BAND;
    println!(
        "chosen delta = {:.6}: mean infidelity {:.6} (band [{lo}, {hi}] {})",
        cal.chosen.delta,
        cal.chosen.mean_infidelity,
        if cal.in_band { "met" } else { "missed" }
    );
    for (sign, fb, fc) in &cal.quarter_pi {
        println!("theta = pi/4 sign {sign}: F_b = {fb:.6}  F_c = {fc:.6}");
    }
    if cal.in_band {
        Ok(())
    } else {
        Err(Failure::Tolerance("no scanned delta reaches the infidelity band".into()))
    }
}
