//! Gate circuits built from {H, CNOT, CRY} and the exhaustive search for a
//! five-gate circuit that realises the cloning map.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::quantum::{apply_gate, gates, StateVector, Unitary, C64};

use super::machine::{input_state, target_output};
use super::params::{clone_angles, CloneParameters, CloneSet, Sign};

const N_QUBITS: usize = 3;
const LETTERS: [char; 3] = ['a', 'b', 'c'];

pub(crate) fn qubit_letter(q: usize) -> char {
    LETTERS[q]
}

pub(crate) fn parse_qubit(s: &str) -> Result<usize> {
    match s {
        "a" => Ok(0),
        "b" => Ok(1),
        "c" => Ok(2),
        other => Err(Error::InvalidGate(format!("unknown qubit {other:?}"))),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GateKind {
    H,
    Cnot,
    Cry,
}

impl GateKind {
    pub fn name(self) -> &'static str {
        match self {
            GateKind::H => "H",
            GateKind::Cnot => "CNOT",
            GateKind::Cry => "CRY",
        }
    }
}

impl FromStr for GateKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "H" => Ok(GateKind::H),
            "CNOT" => Ok(GateKind::Cnot),
            "CRY" => Ok(GateKind::Cry),
            other => Err(Error::InvalidGate(format!("unknown gate kind {other:?}"))),
        }
    }
}

/// Control qubit of a two-qubit gate. `on_zero` marks an open control.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Control {
    pub qubit: usize,
    pub on_zero: bool,
}

impl Control {
    pub fn closed(qubit: usize) -> Self {
        Self {
            qubit,
            on_zero: false,
        }
    }

    pub fn open(qubit: usize) -> Self {
        Self {
            qubit,
            on_zero: true,
        }
    }
}

impl fmt::Display for Control {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.on_zero {
            write!(f, "!")?;
        }
        write!(f, "{}", qubit_letter(self.qubit))
    }
}

impl FromStr for Control {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.strip_prefix('!') {
            Some(rest) => Ok(Control::open(parse_qubit(rest)?)),
            None => Ok(Control::closed(parse_qubit(s)?)),
        }
    }
}

/// One gate with concrete angle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Gate {
    pub kind: GateKind,
    pub control: Option<Control>,
    pub target: usize,
    pub angle: Option<f64>,
}

impl Gate {
    pub fn h(target: usize) -> Self {
        Self {
            kind: GateKind::H,
            control: None,
            target,
            angle: None,
        }
    }

    pub fn cnot(control: Control, target: usize) -> Self {
        Self {
            kind: GateKind::Cnot,
            control: Some(control),
            target,
            angle: None,
        }
    }

    pub fn cry(control: Control, target: usize, angle: f64) -> Self {
        Self {
            kind: GateKind::Cry,
            control: Some(control),
            target,
            angle: Some(angle),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidGate(format!("{}: {m}", self.kind.name())));
        if self.target >= N_QUBITS {
            return Err(Error::QubitOutOfRange {
                index: self.target,
                n_qubits: N_QUBITS,
            });
        }
        match (self.kind, self.control, self.angle) {
            (GateKind::H, None, None) => Ok(()),
            (GateKind::H, _, _) => bad("takes neither a control nor an angle"),
            (GateKind::Cnot, Some(_), Some(_)) => bad("takes no angle"),
            (GateKind::Cry, Some(_), None) => bad("needs an angle"),
            (GateKind::Cry, Some(_), Some(a)) if !a.is_finite() => bad("angle is not finite"),
            (_, None, _) => bad("needs a control"),
            (_, Some(ctl), _) => {
                if ctl.qubit >= N_QUBITS {
                    Err(Error::QubitOutOfRange {
                        index: ctl.qubit,
                        n_qubits: N_QUBITS,
                    })
                } else if ctl.qubit == self.target {
                    Err(Error::RepeatedQubit(ctl.qubit))
                } else {
                    Ok(())
                }
            }
        }
    }

    /// Matrix on `qubits()`, control first.
    pub fn unitary(&self) -> Unitary {
        let single = match self.kind {
            GateKind::H => return gates::hadamard(),
            GateKind::Cnot => gates::pauli_x(),
            GateKind::Cry => gates::ry(self.angle.unwrap_or(0.0)),
        };
        let on_zero = self.control.is_some_and(|c| c.on_zero);
        gates::controlled(&single, on_zero)
    }

    pub fn qubits(&self) -> Vec<usize> {
        match self.control {
            Some(c) => vec![c.qubit, self.target],
            None => vec![self.target],
        }
    }
}

/// Ordered list of validated gates on three qubits.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct GateCircuit {
    gates: Vec<Gate>,
}

impl GateCircuit {
    pub fn new(gates: Vec<Gate>) -> Result<Self> {
        for g in &gates {
            g.validate()?;
        }
        Ok(Self { gates })
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        let mut out = state.clone();
        for g in &self.gates {
            out = apply_gate(&out, &g.unitary(), &g.qubits())?;
        }
        Ok(out)
    }

    /// Product of the gates, last gate leftmost.
    pub fn unitary(&self) -> Result<Unitary> {
        let mut u = Unitary::identity(1 << N_QUBITS);
        for g in &self.gates {
            u = crate::quantum::embed(&g.unitary(), &g.qubits(), N_QUBITS)?.compose(&u);
        }
        Ok(u)
    }
}

/// Symbolic rotation angle of a layout CRY.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AngleExpr {
    PlusAlpha,
    MinusAlpha,
    PlusBeta,
    MinusBeta,
}

impl AngleExpr {
    fn from_parts(beta: bool, negative: bool) -> Self {
        match (beta, negative) {
            (false, false) => AngleExpr::PlusAlpha,
            (false, true) => AngleExpr::MinusAlpha,
            (true, false) => AngleExpr::PlusBeta,
            (true, true) => AngleExpr::MinusBeta,
        }
    }

    pub fn is_beta(self) -> bool {
        matches!(self, AngleExpr::PlusBeta | AngleExpr::MinusBeta)
    }

    pub fn sign(self) -> f64 {
        match self {
            AngleExpr::PlusAlpha | AngleExpr::PlusBeta => 1.0,
            AngleExpr::MinusAlpha | AngleExpr::MinusBeta => -1.0,
        }
    }

    pub fn eval(self, p: &CloneParameters) -> f64 {
        self.sign() * if self.is_beta() { p.beta } else { p.alpha }
    }
}

impl fmt::Display for AngleExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AngleExpr::PlusAlpha => "+alpha",
            AngleExpr::MinusAlpha => "-alpha",
            AngleExpr::PlusBeta => "+beta",
            AngleExpr::MinusBeta => "-beta",
        })
    }
}

impl FromStr for AngleExpr {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "+alpha" | "alpha" => Ok(AngleExpr::PlusAlpha),
            "-alpha" => Ok(AngleExpr::MinusAlpha),
            "+beta" | "beta" => Ok(AngleExpr::PlusBeta),
            "-beta" => Ok(AngleExpr::MinusBeta),
            other => Err(Error::InvalidGate(format!("unknown angle {other:?}"))),
        }
    }
}

/// A gate whose angle, if any, is still symbolic in α and β.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct LayoutGate {
    pub kind: GateKind,
    pub control: Option<Control>,
    pub target: usize,
    pub angle: Option<AngleExpr>,
}

impl LayoutGate {
    pub fn instantiate(&self, p: &CloneParameters) -> Gate {
        Gate {
            kind: self.kind,
            control: self.control,
            target: self.target,
            angle: self.angle.map(|a| a.eval(p)),
        }
    }
}

impl fmt::Display for LayoutGate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind.name())?;
        match self.control {
            Some(c) => write!(f, " {c}")?,
            None => write!(f, " -")?,
        }
        write!(f, " {}", qubit_letter(self.target))?;
        if let Some(a) = self.angle {
            write!(f, " {a}")?;
        }
        Ok(())
    }
}

impl FromStr for LayoutGate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let fields: Vec<&str> = s.split_whitespace().collect();
        if !(3..=4).contains(&fields.len()) {
            return Err(Error::InvalidGate(format!("expected 3 or 4 fields in {s:?}")));
        }
        let kind: GateKind = fields[0].parse()?;
        let control = match fields[1] {
            "-" => None,
            c => Some(c.parse()?),
        };
        let gate = LayoutGate {
            kind,
            control,
            target: parse_qubit(fields[2])?,
            angle: fields.get(3).map(|a| a.parse()).transpose()?,
        };
        // validate structure with a placeholder angle
        Gate {
            kind: gate.kind,
            control: gate.control,
            target: gate.target,
            angle: gate.angle.map(|_| 0.0),
        }
        .validate()?;
        Ok(gate)
    }
}

/// Five-gate layout with inventory {H, CNOT, CNOT, CRY, CRY}; the two CRY
/// angles use α and β once each.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Layout {
    gates: Vec<LayoutGate>,
}

impl Layout {
    pub fn new(gates: Vec<LayoutGate>) -> Result<Self> {
        let count = |k| gates.iter().filter(|g| g.kind == k).count();
        let inventory = (count(GateKind::H), count(GateKind::Cnot), count(GateKind::Cry));
        if gates.len() != 5 || inventory != (1, 2, 2) {
            return Err(Error::InvalidLayout(format!(
                "inventory is {} H, {} CNOT, {} CRY",
                inventory.0, inventory.1, inventory.2
            )));
        }
        let betas: Vec<bool> = gates
            .iter()
            .filter_map(|g| g.angle)
            .map(AngleExpr::is_beta)
            .collect();
        if betas.len() != 2 || betas[0] == betas[1] {
            return Err(Error::InvalidLayout(
                "the two CRY gates must use alpha and beta once each".into(),
            ));
        }
        for g in &gates {
            Gate {
                kind: g.kind,
                control: g.control,
                target: g.target,
                angle: g.angle.map(|_| 0.0),
            }
            .validate()?;
        }
        Ok(Self { gates })
    }

    pub fn gates(&self) -> &[LayoutGate] {
        &self.gates
    }

    pub fn instantiate(&self, theta: f64) -> Result<GateCircuit> {
        let p = clone_angles(theta)?;
        GateCircuit::new(self.gates.iter().map(|g| g.instantiate(&p)).collect())
    }

    pub fn has_open_controls(&self) -> bool {
        self.gates
            .iter()
            .any(|g| g.control.is_some_and(|c| c.on_zero))
    }
}

impl fmt::Display for Layout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for g in &self.gates {
            writeln!(f, "{g}")?;
        }
        Ok(())
    }
}

/// Largest deviation of the layout from the cloning map at `theta`, over
/// both signs, with one global phase shared by the two signs.
pub fn layout_residual(layout: &Layout, theta: f64) -> Result<f64> {
    let circuit = layout.instantiate(theta)?;
    let mut outs = Vec::with_capacity(2);
    for sign in Sign::BOTH {
        let set = CloneSet::new(theta, sign)?;
        outs.push((circuit.apply(&input_state(&set))?, target_output(&set)?));
    }
    let overlap: C64 = outs.iter().map(|(o, t)| t.inner(o)).sum();
    let phase = if overlap.norm() > 0.0 {
        overlap / overlap.norm()
    } else {
        C64::new(1.0, 0.0)
    };
    Ok(outs
        .iter()
        .map(|(o, t)| (o.amplitudes() - t.amplitudes().map(|z| z * phase)).norm())
        .fold(0.0, f64::max))
}

/// Maximum `layout_residual` over `thetas`.
pub fn verify_layout(layout: &Layout, thetas: &[f64]) -> Result<f64> {
    thetas
        .iter()
        .try_fold(0.0f64, |acc, &t| Ok(acc.max(layout_residual(layout, t)?)))
}

/// A layout together with its position in the search order.
#[derive(Clone, Debug, PartialEq)]
pub struct LayoutCandidate {
    pub index: u64,
    pub layout: Layout,
}

/// Which control polarities the search may use.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ControlPolarity {
    /// Controls fire on `|1⟩` only.
    ClosedOnly,
    /// Each control may fire on `|1⟩` or on `|0⟩`.
    Both,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SearchOutcome {
    Found {
        candidate: LayoutCandidate,
        residual: f64,
        examined: u64,
    },
    NotFound {
        closest: LayoutCandidate,
        residual: f64,
        examined: u64,
    },
}

impl SearchOutcome {
    pub fn examined(&self) -> u64 {
        match self {
            SearchOutcome::Found { examined, .. } | SearchOutcome::NotFound { examined, .. } => {
                *examined
            }
        }
    }

    pub fn found(&self) -> Option<&LayoutCandidate> {
        match self {
            SearchOutcome::Found { candidate, .. } => Some(candidate),
            SearchOutcome::NotFound { .. } => None,
        }
    }
}

/// Default interior grid used by the layout search.
pub fn default_search_grid() -> Vec<f64> {
    use std::f64::consts::PI;
    vec![PI / 12.0, PI / 4.0, 5.0 * PI / 12.0]
}

pub const DEFAULT_SEARCH_TOL: f64 = 1e-8;

const PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1)];
const ASSIGNMENTS: u64 = 3 * 6 * 6 * 6 * 6;
const ANGLE_CHOICES: u64 = 8;

/// Distinct orderings of {H, CNOT, CNOT, CRY, CRY}, lexicographic in H < CNOT < CRY.
fn kind_orders() -> Vec<[GateKind; 5]> {
    let mut v = [GateKind::H, GateKind::Cnot, GateKind::Cnot, GateKind::Cry, GateKind::Cry];
    let mut out = vec![v];
    // next lexicographic permutation
    loop {
        let Some(i) = (0..4).rev().find(|&i| v[i] < v[i + 1]) else {
            return out;
        };
        let j = (i + 1..5).rev().find(|&j| v[j] > v[i]).expect("pivot exists");
        v.swap(i, j);
        v[i + 1..].reverse();
        out.push(v);
    }
}

/// Decodes one candidate of a given kind order.
fn decode(
    order: &[GateKind; 5],
    assignment: u64,
    polarity: u64,
    n_polarity: u64,
    angles: u64,
) -> Layout {
    // mixed radix, H qubit most significant, then the pairs in circuit order
    let mut digits = [0usize; 5];
    let mut rest = assignment;
    for (k, d) in digits.iter_mut().enumerate().rev() {
        let radix = if k == 0 { 3 } else { 6 };
        *d = (rest % radix) as usize;
        rest /= radix;
    }
    let beta_first = angles >> 2 & 1 == 1;
    let negative = [angles >> 1 & 1 == 1, angles & 1 == 1];
    let mut pair_digit = 1;
    let mut controlled = 0u32;
    let mut cry_seen = 0;
    let n_controlled = n_polarity.trailing_zeros();
    let gates = order
        .iter()
        .map(|&kind| {
            if kind == GateKind::H {
                return LayoutGate {
                    kind,
                    control: None,
                    target: digits[0],
                    angle: None,
                };
            }
            let (c, t) = PAIRS[digits[pair_digit]];
            pair_digit += 1;
            let on_zero = n_controlled > 0 && polarity >> (n_controlled - 1 - controlled) & 1 == 1;
            controlled += 1;
            let angle = (kind == GateKind::Cry).then(|| {
                let is_beta = (cry_seen == 0) == beta_first;
                let a = AngleExpr::from_parts(is_beta, negative[cry_seen]);
                cry_seen += 1;
                a
            });
            LayoutGate {
                kind,
                control: Some(Control { qubit: c, on_zero }),
                target: t,
                angle,
            }
        })
        .collect();
    Layout { gates }
}

/// Real-arithmetic kernel used during the search. All gates in the
/// inventory and all states involved are real.
#[derive(Clone, Copy)]
enum Op {
    H(usize),
    X { ctl: usize, on: usize, t: usize },
    Ry { ctl: usize, on: usize, t: usize, cos: f64, sin: f64 },
}

fn mask(q: usize) -> usize {
    1 << (N_QUBITS - 1 - q)
}

fn apply_op(v: &mut [f64; 8], op: Op) {
    let (t, ctl, on) = match op {
        Op::H(t) => (t, None, 0),
        Op::X { ctl, on, t } | Op::Ry { ctl, on, t, .. } => (t, Some(ctl), on),
    };
    let mt = mask(t);
    for i0 in (0..8).filter(|i| i & mt == 0) {
        if let Some(c) = ctl {
            if (i0 & mask(c) != 0) as usize != on {
                continue;
            }
        }
        let i1 = i0 | mt;
        let (x0, x1) = (v[i0], v[i1]);
        match op {
            Op::H(_) => {
                let h = std::f64::consts::FRAC_1_SQRT_2;
                v[i0] = h * (x0 + x1);
                v[i1] = h * (x0 - x1);
            }
            Op::X { .. } => {
                v[i0] = x1;
                v[i1] = x0;
            }
            Op::Ry { cos, sin, .. } => {
                v[i0] = cos * x0 - sin * x1;
                v[i1] = sin * x0 + cos * x1;
            }
        }
    }
}

/// Inputs, targets and angles at one grid point.
struct GridPoint {
    params: CloneParameters,
    inputs: [[f64; 8]; 2],
    targets: [[f64; 8]; 2],
}

impl GridPoint {
    fn new(theta: f64) -> Result<Self> {
        let real = |s: &StateVector| {
            let mut out = [0.0; 8];
            for (k, o) in out.iter_mut().enumerate() {
                *o = s.amplitude(k).re;
            }
            out
        };
        let mut inputs = [[0.0; 8]; 2];
        let mut targets = [[0.0; 8]; 2];
        for (k, sign) in Sign::BOTH.into_iter().enumerate() {
            let set = CloneSet::new(theta, sign)?;
            inputs[k] = real(&input_state(&set));
            targets[k] = real(&target_output(&set)?);
        }
        Ok(Self {
            params: clone_angles(theta)?,
            inputs,
            targets,
        })
    }

    fn ops(&self, layout: &Layout) -> [Op; 5] {
        let mut ops = [Op::H(0); 5];
        for (op, g) in ops.iter_mut().zip(&layout.gates) {
            *op = match g.kind {
                GateKind::H => Op::H(g.target),
                GateKind::Cnot | GateKind::Cry => {
                    let c = g.control.expect("validated");
                    let on = usize::from(!c.on_zero);
                    match g.angle {
                        None => Op::X { ctl: c.qubit, on, t: g.target },
                        Some(a) => {
                            let (sin, cos) = (a.eval(&self.params) / 2.0).sin_cos();
                            Op::Ry { ctl: c.qubit, on, t: g.target, cos, sin }
                        }
                    }
                }
            };
        }
        ops
    }

    /// Same metric as `layout_residual`, with the shared phase restricted to ±1.
    fn residual(&self, ops: &[Op; 5]) -> f64 {
        let mut outs = self.inputs;
        for v in outs.iter_mut() {
            for &op in ops {
                apply_op(v, op);
            }
        }
        let dot = |a: &[f64; 8], b: &[f64; 8]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let overlap = dot(&outs[0], &self.targets[0]) + dot(&outs[1], &self.targets[1]);
        let phase = if overlap < 0.0 { -1.0 } else { 1.0 };
        (0..2)
            .map(|k| {
                outs[k]
                    .iter()
                    .zip(&self.targets[k])
                    .map(|(o, t)| (o - phase * t).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }
}

fn interior(theta: f64) -> bool {
    theta > 0.0 && theta < std::f64::consts::FRAC_PI_2
}

/// Exhaustive search for the first layout (in candidate order) reproducing
/// the cloning map on every grid angle and both signs within `tol`.
///
/// Candidates are ordered by kind permutation, then qubit assignment (H
/// qubit, then control/target pairs in circuit order), then control
/// polarities (closed before open, first controlled gate most significant),
/// then angle choice (which CRY takes α, then signs, `+` before `−`).
pub fn search_layout(
    grid: &[f64],
    tol: f64,
    polarity: ControlPolarity,
) -> Result<SearchOutcome> {
    let n_interior = grid.iter().filter(|&&t| interior(t)).count();
    if n_interior < 3 || n_interior != grid.len() {
        return Err(Error::GridTooSmall(n_interior));
    }
    let points: Vec<GridPoint> = grid.iter().map(|&t| GridPoint::new(t)).collect::<Result<_>>()?;
    let orders = kind_orders();
    let n_polarity: u64 = match polarity {
        ControlPolarity::ClosedOnly => 1,
        ControlPolarity::Both => 16,
    };
    let per_order = ASSIGNMENTS * n_polarity * ANGLE_CHOICES;

    struct Best {
        found: Option<(u64, Layout)>,
        closest: (f64, u64, Layout),
        examined: u64,
    }

    let per: Vec<Best> = orders
        .par_iter()
        .enumerate()
        .map(|(oi, order)| {
            let mut best = Best {
                found: None,
                closest: (f64::INFINITY, u64::MAX, Layout { gates: vec![] }),
                examined: 0,
            };
            for local in 0..per_order {
                let angles = local % ANGLE_CHOICES;
                let pol = local / ANGLE_CHOICES % n_polarity;
                let assignment = local / (ANGLE_CHOICES * n_polarity);
                let layout = decode(order, assignment, pol, n_polarity, angles);
                best.examined += 1;
                // reject at the first failing angle; the running maximum is a
                // lower bound on the full residual
                let mut score = 0.0f64;
                for p in &points {
                    score = score.max(p.residual(&p.ops(&layout)));
                    if score > tol {
                        break;
                    }
                }
                let index = oi as u64 * per_order + local;
                if score < best.closest.0 {
                    best.closest = (score, index, layout.clone());
                }
                if score <= tol {
                    best.found = Some((index, layout));
                    break;
                }
            }
            best
        })
        .collect();

    let examined_until = |limit: u64| -> u64 {
        per.iter()
            .enumerate()
            .map(|(oi, b)| {
                let start = oi as u64 * per_order;
                b.examined.min(limit.saturating_sub(start))
            })
            .sum()
    };

    if let Some((index, layout)) = per.iter().filter_map(|b| b.found.clone()).min_by_key(|f| f.0) {
        let residual = verify_layout(&layout, grid)?;
        return Ok(SearchOutcome::Found {
            candidate: LayoutCandidate { index, layout },
            residual,
            examined: examined_until(index + 1),
        });
    }
    let (_, index, layout) = per
        .into_iter()
        .map(|b| b.closest)
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .expect("at least one ordering");
    let residual = verify_layout(&layout, grid)?;
    Ok(SearchOutcome::NotFound {
        closest: LayoutCandidate { index, layout },
        residual,
        examined: orders.len() as u64 * per_order,
    })
}

/// A layout persisted together with the grid and tolerance it was verified on.
#[derive(Clone, Debug, PartialEq)]
pub struct LayoutCache {
    pub grid: Vec<f64>,
    pub tolerance: f64,
    pub layout: Layout,
}

const HEADER_TAG: &str = "# pqcm layout";

impl LayoutCache {
    pub fn to_text(&self) -> String {
        let grid: Vec<String> = self.grid.iter().map(|t| format!("{t:?}")).collect();
        format!(
            "{HEADER_TAG} grid={} tol={:e}\n{}",
            grid.join(","),
            self.tolerance,
            self.layout
        )
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut grid = None;
        let mut tolerance = None;
        let mut gates = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = n + 1;
            let perr = |message: String| Error::Parse { line, message };
            if let Some(header) = raw.trim().strip_prefix(HEADER_TAG) {
                for field in header.split_whitespace() {
                    match field.split_once('=') {
                        Some(("grid", v)) => {
                            let parsed: std::result::Result<Vec<f64>, _> =
                                v.split(',').map(str::parse).collect();
                            grid = Some(parsed.map_err(|e| perr(format!("grid: {e}")))?);
                        }
                        Some(("tol", v)) => {
                            tolerance = Some(v.parse().map_err(|e| perr(format!("tol: {e}")))?);
                        }
                        _ => return Err(perr(format!("unknown header field {field:?}"))),
                    }
                }
                continue;
            }
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            gates.push(body.parse::<LayoutGate>().map_err(|e| perr(e.to_string()))?);
        }
        let missing = |what: &str| Error::Parse {
            line: 1,
            message: format!("header is missing {what}"),
        };
        Ok(Self {
            grid: grid.ok_or_else(|| missing("grid"))?,
            tolerance: tolerance.ok_or_else(|| missing("tol"))?,
            layout: Layout::new(gates)?,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        Ok(std::fs::write(path, self.to_text())?)
    }

    /// Re-checks the stored layout on the stored grid.
    pub fn verify(&self) -> Result<f64> {
        verify_layout(&self.layout, &self.grid)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cloning::build_cloning_unitary;
    use std::f64::consts::{FRAC_PI_2, PI};
    use std::sync::OnceLock;

    fn found() -> &'static LayoutCandidate {
        static CELL: OnceLock<LayoutCandidate> = OnceLock::new();
        CELL.get_or_init(|| {
            let out =
                search_layout(&default_search_grid(), DEFAULT_SEARCH_TOL, ControlPolarity::Both)
                    .unwrap();
            out.found().expect("a layout exists with open controls").clone()
        })
    }

    fn hand_layout() -> Layout {
        let gates = "H - c\nCNOT a b\nCRY !b a -alpha\nCRY !b c -beta\nCNOT c b"
            .lines()
            .map(|l| l.parse().unwrap())
            .collect();
        Layout::new(gates).unwrap()
    }

    #[test]
    fn thirty_distinct_orders() {
        let orders = kind_orders();
        assert_eq!(orders.len(), 30);
        assert!(orders.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn kernel_matches_apply_gate() {
        let theta = 0.61;
        let point = GridPoint::new(theta).unwrap();
        let layouts = [
            decode(&kind_orders()[7], 1234, 5, 16, 6),
            decode(&kind_orders()[29], 3887, 15, 16, 1),
            hand_layout(),
        ];
        for layout in &layouts {
            let circuit = layout.instantiate(theta).unwrap();
            for k in 0..2 {
                let mut v = point.inputs[k];
                for op in point.ops(layout) {
                    apply_op(&mut v, op);
                }
                let set = CloneSet::new(theta, Sign::BOTH[k]).unwrap();
                let exact = circuit.apply(&input_state(&set)).unwrap();
                for (i, x) in v.iter().enumerate() {
                    assert!((exact.amplitude(i) - C64::new(*x, 0.0)).norm() < 1e-14);
                }
            }
            let fast = point.residual(&point.ops(layout));
            let slow = layout_residual(layout, theta).unwrap();
            assert!((fast - slow).abs() < 1e-12);
        }
    }

    #[test]
    fn hand_derived_layout_clones() {
        assert!(verify_layout(&hand_layout(), &[0.1, 0.37, 1.2, FRAC_PI_2]).unwrap() < 1e-12);
    }

    #[test]
    fn closed_controls_alone_do_not_suffice() {
        let out =
            search_layout(&default_search_grid(), DEFAULT_SEARCH_TOL, ControlPolarity::ClosedOnly)
                .unwrap();
        match out {
            SearchOutcome::NotFound { residual, examined, closest } => {
                assert_eq!(examined, 30 * ASSIGNMENTS * ANGLE_CHOICES);
                assert!(residual > DEFAULT_SEARCH_TOL);
                assert!(!closest.layout.has_open_controls());
            }
            SearchOutcome::Found { .. } => panic!("unexpected closed-control layout"),
        }
    }

    #[test]
    fn search_result_holds_at_held_out_angles() {
        let cand = found();
        assert_eq!(cand.layout.gates().len(), 5);
        let r = verify_layout(&cand.layout, &[PI / 6.0, 0.37, 0.0]).unwrap();
        assert!(r < 1e-8, "held-out residual {r}");
    }

    #[test]
    fn search_result_is_first_in_order() {
        let cand = found();
        let order = cand.index / (ASSIGNMENTS * 16 * ANGLE_CHOICES);
        let local = cand.index % (ASSIGNMENTS * 16 * ANGLE_CHOICES);
        let rebuilt = decode(
            &kind_orders()[order as usize],
            local / (16 * ANGLE_CHOICES),
            local / ANGLE_CHOICES % 16,
            16,
            local % ANGLE_CHOICES,
        );
        assert_eq!(rebuilt, cand.layout);
        // every earlier candidate within the same ordering fails
        let points: Vec<_> = default_search_grid().iter().map(|&t| GridPoint::new(t).unwrap()).collect();
        for earlier in (local.saturating_sub(2000))..local {
            let l = decode(
                &kind_orders()[order as usize],
                earlier / (16 * ANGLE_CHOICES),
                earlier / ANGLE_CHOICES % 16,
                16,
                earlier % ANGLE_CHOICES,
            );
            let worst = points.iter().map(|p| p.residual(&p.ops(&l))).fold(0.0, f64::max);
            assert!(worst > DEFAULT_SEARCH_TOL);
        }
    }

    #[test]
    fn search_result_matches_completion_on_inputs() {
        let cand = found();
        for theta in [0.2, 0.9] {
            let circuit = cand.layout.instantiate(theta).unwrap();
            let u = build_cloning_unitary(theta).unwrap();
            for sign in Sign::BOTH {
                let set = CloneSet::new(theta, sign).unwrap();
                let a = circuit.apply(&input_state(&set)).unwrap();
                let b = u.apply(&input_state(&set));
                assert!(a.ray_distance(&b) < 1e-10);
            }
        }
    }

    #[test]
    fn orthogonal_case_leaves_probe_in_success() {
        let circuit = found().layout.instantiate(FRAC_PI_2).unwrap();
        for sign in Sign::BOTH {
            let out = circuit.apply(&input_state(&CloneSet::new(FRAC_PI_2, sign).unwrap())).unwrap();
            let failure: f64 = (4..8).map(|k| out.amplitude(k).norm_sqr()).sum();
            assert!(failure < 1e-20);
        }
    }

    #[test]
    fn inventory_is_enforced() {
        let mut gates = hand_layout().gates().to_vec();
        gates[0] = "CNOT a c".parse().unwrap();
        assert!(matches!(Layout::new(gates), Err(Error::InvalidLayout(_))));
        let mut gates = hand_layout().gates().to_vec();
        gates[3].angle = Some(AngleExpr::PlusAlpha);
        assert!(matches!(Layout::new(gates), Err(Error::InvalidLayout(_))));
        assert!("CRY a a +beta".parse::<LayoutGate>().is_err());
        assert!("H a b".parse::<LayoutGate>().is_err());
        assert!("CNOT a b +alpha".parse::<LayoutGate>().is_err());
        assert!("CRY a b".parse::<LayoutGate>().is_err());
    }

    #[test]
    fn grid_must_have_three_interior_angles() {
        let grid = [0.0, 0.3, 0.6, FRAC_PI_2];
        assert_eq!(
            search_layout(&grid, 1e-8, ControlPolarity::Both),
            Err(Error::GridTooSmall(2))
        );
    }

    #[test]
    fn cache_round_trip() {
        let cache = LayoutCache {
            grid: default_search_grid(),
            tolerance: 1e-8,
            layout: hand_layout(),
        };
        let text = cache.to_text();
        assert_eq!(text.lines().count(), 6);
        assert_eq!(LayoutCache::from_text(&text).unwrap(), cache);
        assert!(cache.verify().unwrap() < 1e-12);
        let broken = text.replace("CNOT c b", "CNOT c q");
        assert!(matches!(
            LayoutCache::from_text(&broken),
            Err(Error::Parse { line: 6, .. })
        ));
    }

    #[test]
    fn circuit_unitary_agrees_with_apply() {
        let circuit = hand_layout().instantiate(0.8).unwrap();
        let u = circuit.unitary().unwrap();
        let psi = input_state(&CloneSet::new(0.8, Sign::Minus).unwrap());
        assert!((u.apply(&psi).amplitudes() - circuit.apply(&psi).unwrap().amplitudes()).norm() < 1e-14);
        assert!(u.unitarity_error() < 1e-12);
    }
}
