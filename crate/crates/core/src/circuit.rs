//! Random circuit families on a 2D qubit lattice.
//!
//! Qubits are indexed row-major, `q = r * cols + c`. A [`Circuit`] is an
//! ordered list of cycles; within a cycle gates act on disjoint qubits (the
//! statistical ensemble is the only exception, see [`Variant::StatEnsemble`]).
//! Cycle 0 is always one Hadamard per qubit.

use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{self, labels};

/// CZ probability per lattice edge and layer used by the statistical
/// ensemble when none is given.
pub const DEFAULT_P_CZ: f64 = 0.25;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CircuitError {
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unknown gate `{token}` (cycle {cycle}, gate {index})")]
    UnknownGate {
        token: String,
        cycle: usize,
        index: usize,
    },
    #[error("unknown variant `{0}`")]
    UnknownVariant(String),
    #[error("invalid circuit at cycle {cycle}: {message}")]
    Invalid { cycle: usize, message: String },
    #[error("error location out of range: {0}")]
    BadLocation(String),
}

/// Geometry of the qubit array.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub rows: usize,
    pub cols: usize,
    pub periodic: bool,
}

impl LatticeSpec {
    pub fn new(rows: usize, cols: usize, periodic: bool) -> Result<Self, CircuitError> {
        if rows == 0 || cols == 0 {
            return Err(CircuitError::InvalidLattice(format!(
                "{rows}x{cols} has no qubits"
            )));
        }
        if periodic && (!rows.is_multiple_of(2) || !cols.is_multiple_of(2)) {
            return Err(CircuitError::InvalidLattice(format!(
                "periodic {rows}x{cols} lattice needs even dimensions"
            )));
        }
        Ok(Self {
            rows,
            cols,
            periodic,
        })
    }

    pub fn planar(rows: usize, cols: usize) -> Result<Self, CircuitError> {
        Self::new(rows, cols, false)
    }

    pub fn n(&self) -> usize {
        self.rows * self.cols
    }

    pub fn qubit(&self, r: usize, c: usize) -> usize {
        r * self.cols + c
    }

    pub fn coords(&self, q: usize) -> (usize, usize) {
        (q / self.cols, q % self.cols)
    }

    /// Nearest neighbours, with wrap-around when the lattice is periodic.
    pub fn are_neighbors(&self, a: usize, b: usize) -> bool {
        if a == b || a >= self.n() || b >= self.n() {
            return false;
        }
        let (ra, ca) = self.coords(a);
        let (rb, cb) = self.coords(b);
        let dist = |x: usize, y: usize, len: usize| {
            let d = x.abs_diff(y);
            if self.periodic {
                d.min(len - d)
            } else {
                d
            }
        };
        let (dr, dc) = (dist(ra, rb, self.rows), dist(ca, cb, self.cols));
        (dr == 1 && dc == 0) || (dr == 0 && dc == 1)
    }

    /// All distinct nearest-neighbour pairs `(a, b)` with `a < b`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for r in 0..self.rows {
            for c in 0..self.cols {
                let q = self.qubit(r, c);
                let right = if c + 1 < self.cols {
                    Some(self.qubit(r, c + 1))
                } else if self.periodic && self.cols > 1 {
                    Some(self.qubit(r, 0))
                } else {
                    None
                };
                let down = if r + 1 < self.rows {
                    Some(self.qubit(r + 1, c))
                } else if self.periodic && self.rows > 1 {
                    Some(self.qubit(0, c))
                } else {
                    None
                };
                for other in [right, down].into_iter().flatten() {
                    let e = (q.min(other), q.max(other));
                    if e.0 != e.1 && !out.contains(&e) {
                        out.push(e);
                    }
                }
            }
        }
        out
    }
}

/// Which family a circuit was drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Planar circuits with eight staggered CZ layouts, one clock cycle per
    /// CZ layout.
    Sec4,
    /// Periodic lattice; every layer is a single-qubit cycle followed by a
    /// CZ cycle in which every qubit takes part.
    Dense,
    /// Layered ensemble with random single-qubit gates on every qubit and an
    /// independent CZ on every edge. CZ gates may overlap; these circuits are
    /// only used for coupling statistics.
    StatEnsemble,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Sec4 => "sec4",
            Variant::Dense => "dense",
            Variant::StatEnsemble => "stat_ensemble",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = CircuitError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sec4" => Ok(Variant::Sec4),
            "dense" => Ok(Variant::Dense),
            "stat_ensemble" | "stat" => Ok(Variant::StatEnsemble),
            other => Err(CircuitError::UnknownVariant(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GateKind {
    H,
    X2,
    Y2,
    T,
    Cz,
    X,
    Y,
    Z,
}

impl GateKind {
    pub fn name(self) -> &'static str {
        match self {
            GateKind::H => "h",
            GateKind::X2 => "x2",
            GateKind::Y2 => "y2",
            GateKind::T => "t",
            GateKind::Cz => "cz",
            GateKind::X => "x",
            GateKind::Y => "y",
            GateKind::Z => "z",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "h" => GateKind::H,
            "x2" => GateKind::X2,
            "y2" => GateKind::Y2,
            "t" => GateKind::T,
            "cz" => GateKind::Cz,
            "x" => GateKind::X,
            "y" => GateKind::Y,
            "z" => GateKind::Z,
            _ => return None,
        })
    }

    pub fn arity(self) -> usize {
        if self == GateKind::Cz {
            2
        } else {
            1
        }
    }

    /// Diagonal in the computational basis.
    pub fn is_diagonal(self) -> bool {
        matches!(self, GateKind::T | GateKind::Cz | GateKind::Z)
    }

    /// Two nonzero entries in every row and column. Only these gates move a
    /// computational-basis path.
    pub fn is_two_sparse(self) -> bool {
        matches!(self, GateKind::H | GateKind::X2 | GateKind::Y2)
    }

    /// The 2x2 matrix of a single-qubit kind, row-major `[[m00, m01], [m10, m11]]`.
    pub fn matrix(self) -> Option<[[Complex64; 2]; 2]> {
        let c = Complex64::new;
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Some(match self {
            GateKind::H => [[c(s, 0.0), c(s, 0.0)], [c(s, 0.0), c(-s, 0.0)]],
            GateKind::X2 => [[c(0.5, 0.5), c(0.5, -0.5)], [c(0.5, -0.5), c(0.5, 0.5)]],
            GateKind::Y2 => [[c(0.5, 0.5), c(-0.5, -0.5)], [c(0.5, 0.5), c(0.5, 0.5)]],
            GateKind::T => [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(s, s)]],
            GateKind::X => [[c(0.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]],
            GateKind::Y => [[c(0.0, 0.0), c(0.0, -1.0)], [c(0.0, 1.0), c(0.0, 0.0)]],
            GateKind::Z => [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(-1.0, 0.0)]],
            GateKind::Cz => return None,
        })
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A gate placed on one or two qubits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Gate {
    pub kind: GateKind,
    qubits: [usize; 2],
}

impl Gate {
    pub fn single(kind: GateKind, q: usize) -> Self {
        debug_assert_eq!(kind.arity(), 1);
        Self {
            kind,
            qubits: [q, q],
        }
    }

    pub fn cz(a: usize, b: usize) -> Self {
        Self {
            kind: GateKind::Cz,
            qubits: [a, b],
        }
    }

    pub fn qubits(&self) -> &[usize] {
        &self.qubits[..self.kind.arity()]
    }

    pub fn target(&self) -> usize {
        self.qubits[0]
    }

    pub fn max_qubit(&self) -> usize {
        self.qubits().iter().copied().max().unwrap_or(0)
    }
}

pub type Cycle = Vec<Gate>;

#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    pub lattice: LatticeSpec,
    pub seed: u64,
    pub variant: Variant,
    pub cycles: Vec<Cycle>,
}

impl Circuit {
    pub fn n(&self) -> usize {
        self.lattice.n()
    }

    /// Number of clock cycles after the initial Hadamard cycle.
    pub fn depth(&self) -> usize {
        self.cycles.len().saturating_sub(1)
    }

    pub fn gates(&self) -> impl Iterator<Item = &Gate> {
        self.cycles.iter().flatten()
    }

    /// Checks gate arity, qubit ranges, CZ adjacency and (except for the
    /// statistical ensemble) that no qubit is used twice in one cycle.
    pub fn validate(&self) -> Result<(), CircuitError> {
        let n = self.n();
        for (t, cycle) in self.cycles.iter().enumerate() {
            let mut used = vec![false; n];
            for gate in cycle {
                for &q in gate.qubits() {
                    if q >= n {
                        return Err(CircuitError::Invalid {
                            cycle: t,
                            message: format!("qubit {q} out of range for n={n}"),
                        });
                    }
                }
                if gate.kind == GateKind::Cz {
                    let [a, b] = gate.qubits;
                    if !self.lattice.are_neighbors(a, b) {
                        return Err(CircuitError::Invalid {
                            cycle: t,
                            message: format!("cz({a},{b}) does not join lattice neighbours"),
                        });
                    }
                }
                if self.variant == Variant::StatEnsemble {
                    continue;
                }
                for &q in gate.qubits() {
                    if std::mem::replace(&mut used[q], true) {
                        return Err(CircuitError::Invalid {
                            cycle: t,
                            message: format!("qubit {q} appears in two gates"),
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

/// Gate counts of a circuit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GateCensus {
    /// Single-qubit gates including the initial Hadamards.
    pub g1: usize,
    /// Single-qubit gates after cycle 0.
    pub g1_without_h: usize,
    pub g2: usize,
    pub t_count: usize,
    /// Inserted Pauli gates (X, Y, Z). Also included in `g1`.
    pub paulis: usize,
    /// Clock cycles after cycle 0.
    pub depth: usize,
}

pub fn count_gates(circuit: &Circuit) -> GateCensus {
    let mut census = GateCensus {
        depth: circuit.depth(),
        ..GateCensus::default()
    };
    for (t, cycle) in circuit.cycles.iter().enumerate() {
        for gate in cycle {
            match gate.kind {
                GateKind::Cz => census.g2 += 1,
                kind => {
                    census.g1 += 1;
                    if !(t == 0 && kind == GateKind::H) {
                        census.g1_without_h += 1;
                    }
                    match kind {
                        GateKind::T => census.t_count += 1,
                        GateKind::X | GateKind::Y | GateKind::Z => census.paulis += 1,
                        _ => {}
                    }
                }
            }
        }
    }
    census
}

/// CZ layouts in the order they are cycled through.
///
/// `Sec4` returns eight layouts `[h0, h2, v0, v2, h1, h3, v1, v3]`: the
/// horizontal edge starting at `(r, c)` belongs to `h{(c + 2r) mod 4}` and the
/// vertical edge starting at `(r, c)` to `v{(r + 2c) mod 4}`. `Dense` returns
/// four perfect dimer covers `[h0, v0, h1, v1]` on the periodic lattice.
pub fn build_cz_layouts(
    lattice: &LatticeSpec,
    variant: Variant,
) -> Result<Vec<Vec<(usize, usize)>>, CircuitError> {
    match variant {
        Variant::Sec4 => {
            if lattice.periodic {
                return Err(CircuitError::InvalidLattice(
                    "sec4 circuits use an open lattice".into(),
                ));
            }
            let mut horizontal = vec![Vec::new(); 4];
            let mut vertical = vec![Vec::new(); 4];
            for r in 0..lattice.rows {
                for c in 0..lattice.cols {
                    if c + 1 < lattice.cols {
                        horizontal[(c + 2 * r) % 4]
                            .push((lattice.qubit(r, c), lattice.qubit(r, c + 1)));
                    }
                    if r + 1 < lattice.rows {
                        vertical[(r + 2 * c) % 4]
                            .push((lattice.qubit(r, c), lattice.qubit(r + 1, c)));
                    }
                }
            }
            let order = [(true, 0), (true, 2), (false, 0), (false, 2), (true, 1), (true, 3), (false, 1), (false, 3)];
            Ok(order
                .iter()
                .map(|&(h, a)| if h { horizontal[a].clone() } else { vertical[a].clone() })
                .collect())
        }
        Variant::Dense => {
            if !lattice.periodic || !lattice.rows.is_multiple_of(2) || !lattice.cols.is_multiple_of(2) {
                return Err(CircuitError::InvalidLattice(format!(
                    "dense circuits need a periodic lattice with even dimensions, got {}x{}",
                    lattice.rows, lattice.cols
                )));
            }
            let horizontal = |offset: usize| {
                let mut layout = Vec::new();
                for r in 0..lattice.rows {
                    for c in (offset..lattice.cols).step_by(2) {
                        layout.push((lattice.qubit(r, c), lattice.qubit(r, (c + 1) % lattice.cols)));
                    }
                }
                layout
            };
            let vertical = |offset: usize| {
                let mut layout = Vec::new();
                for r in (offset..lattice.rows).step_by(2) {
                    for c in 0..lattice.cols {
                        layout.push((lattice.qubit(r, c), lattice.qubit((r + 1) % lattice.rows, c)));
                    }
                }
                layout
            };
            Ok(vec![horizontal(0), vertical(0), horizontal(1), vertical(1)])
        }
        Variant::StatEnsemble => Err(CircuitError::InvalidLattice(
            "the statistical ensemble has no fixed layouts".into(),
        )),
    }
}

const RANDOM_SINGLE: [GateKind; 3] = [GateKind::X2, GateKind::Y2, GateKind::T];

/// Tracks the single-qubit placement rules for one qubit.
fn pick_single(last: Option<GateKind>, rng: &mut impl Rng) -> GateKind {
    match last {
        // first gate after the Hadamard cycle
        None => GateKind::T,
        Some(prev) => {
            let choices: Vec<GateKind> = RANDOM_SINGLE.iter().copied().filter(|&k| k != prev).collect();
            choices[rng.random_range(0..choices.len())]
        }
    }
}

fn hadamard_cycle(n: usize) -> Cycle {
    (0..n).map(|q| Gate::single(GateKind::H, q)).collect()
}

/// Generates a circuit of the given family. `depth` counts clock cycles for
/// `Sec4` and layers for `Dense` and `StatEnsemble`. The statistical ensemble
/// uses [`DEFAULT_P_CZ`]; see [`generate_stat_ensemble`] to choose it.
pub fn generate_circuit(
    lattice: &LatticeSpec,
    depth: usize,
    seed: u64,
    variant: Variant,
) -> Result<Circuit, CircuitError> {
    match variant {
        Variant::Sec4 => generate_sec4(lattice, depth, seed),
        Variant::Dense => generate_dense(lattice, depth, seed),
        Variant::StatEnsemble => generate_stat_ensemble(lattice, depth, DEFAULT_P_CZ, seed),
    }
}

fn generate_sec4(lattice: &LatticeSpec, depth: usize, seed: u64) -> Result<Circuit, CircuitError> {
    let layouts = build_cz_layouts(lattice, Variant::Sec4)?;
    let n = lattice.n();
    let mut rng = rng::stream(seed, labels::CIRCUIT, 0);
    let mut cycles = vec![hadamard_cycle(n)];
    let mut last_single: Vec<Option<GateKind>> = vec![None; n];
    let mut in_cz_prev = vec![false; n];
    for t in 1..=depth {
        let layout = &layouts[(t - 1) % layouts.len()];
        let mut in_cz = vec![false; n];
        let mut cycle: Cycle = Vec::with_capacity(n);
        for &(a, b) in layout {
            in_cz[a] = true;
            in_cz[b] = true;
            cycle.push(Gate::cz(a, b));
        }
        for q in 0..n {
            if !in_cz[q] && in_cz_prev[q] {
                let kind = pick_single(last_single[q], &mut rng);
                last_single[q] = Some(kind);
                cycle.push(Gate::single(kind, q));
            }
        }
        cycles.push(cycle);
        in_cz_prev = in_cz;
    }
    Ok(Circuit {
        lattice: *lattice,
        seed,
        variant: Variant::Sec4,
        cycles,
    })
}

fn generate_dense(lattice: &LatticeSpec, layers: usize, seed: u64) -> Result<Circuit, CircuitError> {
    let layouts = build_cz_layouts(lattice, Variant::Dense)?;
    let n = lattice.n();
    let mut rng = rng::stream(seed, labels::CIRCUIT, 0);
    let mut cycles = vec![hadamard_cycle(n)];
    let mut last_single: Vec<Option<GateKind>> = vec![None; n];
    let mut in_cz_prev = vec![false; n];
    for layer in 1..=layers {
        let mut singles = Cycle::new();
        for q in 0..n {
            if in_cz_prev[q] {
                let kind = pick_single(last_single[q], &mut rng);
                last_single[q] = Some(kind);
                singles.push(Gate::single(kind, q));
            }
        }
        cycles.push(singles);
        let layout = &layouts[(layer - 1) % layouts.len()];
        let mut in_cz = vec![false; n];
        let mut czs = Cycle::with_capacity(layout.len());
        for &(a, b) in layout {
            in_cz[a] = true;
            in_cz[b] = true;
            czs.push(Gate::cz(a, b));
        }
        cycles.push(czs);
        in_cz_prev = in_cz;
    }
    Ok(Circuit {
        lattice: *lattice,
        seed,
        variant: Variant::Dense,
        cycles,
    })
}

/// Layered ensemble: after the Hadamard cycle, each layer is a cycle where
/// every qubit draws X^1/2, Y^1/2 or T with probability 1/3 each, followed by
/// a cycle where every lattice edge independently carries a CZ with
/// probability `p_cz`.
pub fn generate_stat_ensemble(
    lattice: &LatticeSpec,
    layers: usize,
    p_cz: f64,
    seed: u64,
) -> Result<Circuit, CircuitError> {
    if !(0.0..=1.0).contains(&p_cz) {
        return Err(CircuitError::InvalidLattice(format!("p_cz={p_cz} is not a probability")));
    }
    let mut rng = rng::stream(seed, labels::ENSEMBLE, 0);
    generate_stat_ensemble_from(lattice, layers, p_cz, seed, &mut rng)
}

/// Statistical ensemble member drawn from a caller-supplied stream, for
/// building many models from one seed.
pub fn generate_stat_ensemble_from(
    lattice: &LatticeSpec,
    layers: usize,
    p_cz: f64,
    seed: u64,
    rng: &mut impl Rng,
) -> Result<Circuit, CircuitError> {
    if !(0.0..=1.0).contains(&p_cz) {
        return Err(CircuitError::InvalidLattice(format!("p_cz={p_cz} is not a probability")));
    }
    let n = lattice.n();
    let edges = lattice.edges();
    let mut cycles = vec![hadamard_cycle(n)];
    for _ in 0..layers {
        let singles = (0..n)
            .map(|q| Gate::single(RANDOM_SINGLE[rng.random_range(0..3)], q))
            .collect();
        cycles.push(singles);
        let czs = edges
            .iter()
            .filter(|_| rng.random::<f64>() < p_cz)
            .map(|&(a, b)| Gate::cz(a, b))
            .collect();
        cycles.push(czs);
    }
    Ok(Circuit {
        lattice: *lattice,
        seed,
        variant: Variant::StatEnsemble,
        cycles,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn kind(self) -> GateKind {
        match self {
            Pauli::X => GateKind::X,
            Pauli::Y => GateKind::Y,
            Pauli::Z => GateKind::Z,
        }
    }

    pub const ALL: [Pauli; 3] = [Pauli::X, Pauli::Y, Pauli::Z];
}

/// One Pauli error applied right after cycle `cycle` on `qubit`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ErrorLocation {
    pub cycle: usize,
    pub qubit: usize,
    pub pauli: Pauli,
}

fn check_location(circuit: &Circuit, loc: &ErrorLocation) -> Result<(), CircuitError> {
    if loc.cycle >= circuit.cycles.len() {
        return Err(CircuitError::BadLocation(format!(
            "cycle {} but circuit has {} cycles",
            loc.cycle,
            circuit.cycles.len()
        )));
    }
    if loc.qubit >= circuit.n() {
        return Err(CircuitError::BadLocation(format!(
            "qubit {} but circuit has {} qubits",
            loc.qubit,
            circuit.n()
        )));
    }
    Ok(())
}

/// Returns a copy of `circuit` with a new cycle holding the single Pauli
/// gate inserted immediately after cycle `loc.cycle`.
pub fn insert_pauli_error(circuit: &Circuit, loc: &ErrorLocation) -> Result<Circuit, CircuitError> {
    check_location(circuit, loc)?;
    let mut out = circuit.clone();
    out.cycles
        .insert(loc.cycle + 1, vec![Gate::single(loc.pauli.kind(), loc.qubit)]);
    Ok(out)
}

/// Undoes [`insert_pauli_error`] for the same location.
pub fn remove_pauli_error(circuit: &Circuit, loc: &ErrorLocation) -> Result<Circuit, CircuitError> {
    let idx = loc.cycle + 1;
    let expected = [Gate::single(loc.pauli.kind(), loc.qubit)];
    match circuit.cycles.get(idx) {
        Some(cycle) if cycle.as_slice() == expected => {
            let mut out = circuit.clone();
            out.cycles.remove(idx);
            Ok(out)
        }
        _ => Err(CircuitError::BadLocation(format!(
            "no inserted {:?} on qubit {} after cycle {}",
            loc.pauli, loc.qubit, loc.cycle
        ))),
    }
}

#[derive(Serialize, Deserialize)]
struct RawGate {
    g: String,
    q: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct RawCircuit {
    rows: usize,
    cols: usize,
    periodic: bool,
    seed: u64,
    variant: String,
    cycles: Vec<Vec<RawGate>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    meta: Option<serde_json::Value>,
}

fn to_raw(circuit: &Circuit, meta: Option<serde_json::Value>) -> RawCircuit {
    RawCircuit {
        rows: circuit.lattice.rows,
        cols: circuit.lattice.cols,
        periodic: circuit.lattice.periodic,
        seed: circuit.seed,
        variant: circuit.variant.name().to_string(),
        cycles: circuit
            .cycles
            .iter()
            .map(|cycle| {
                cycle
                    .iter()
                    .map(|g| RawGate {
                        g: g.kind.name().to_string(),
                        q: g.qubits().to_vec(),
                    })
                    .collect()
            })
            .collect(),
        meta,
    }
}

/// Compact JSON encoding of a circuit.
pub fn serialize(circuit: &Circuit) -> String {
    serde_json::to_string(&to_raw(circuit, None)).expect("circuit JSON encoding cannot fail")
}

/// Like [`serialize`] with an extra `meta` object, which [`parse`] ignores.
pub fn serialize_with_meta(circuit: &Circuit, meta: serde_json::Value) -> String {
    serde_json::to_string(&to_raw(circuit, Some(meta))).expect("circuit JSON encoding cannot fail")
}

pub fn parse(text: &str) -> Result<Circuit, CircuitError> {
    let raw: RawCircuit = serde_json::from_str(text).map_err(|e| CircuitError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let lattice = LatticeSpec::new(raw.rows, raw.cols, raw.periodic)?;
    let variant: Variant = raw.variant.parse()?;
    let mut cycles = Vec::with_capacity(raw.cycles.len());
    for (t, raw_cycle) in raw.cycles.into_iter().enumerate() {
        let mut cycle = Vec::with_capacity(raw_cycle.len());
        for (i, raw_gate) in raw_cycle.into_iter().enumerate() {
            let kind = GateKind::from_name(&raw_gate.g).ok_or_else(|| CircuitError::UnknownGate {
                token: raw_gate.g.clone(),
                cycle: t,
                index: i,
            })?;
            if raw_gate.q.len() != kind.arity() {
                return Err(CircuitError::Invalid {
                    cycle: t,
                    message: format!(
                        "gate {i} `{}` expects {} qubit(s), got {}",
                        raw_gate.g,
                        kind.arity(),
                        raw_gate.q.len()
                    ),
                });
            }
            cycle.push(if kind == GateKind::Cz {
                Gate::cz(raw_gate.q[0], raw_gate.q[1])
            } else {
                Gate::single(kind, raw_gate.q[0])
            });
        }
        cycles.push(cycle);
    }
    let circuit = Circuit {
        lattice,
        seed: raw.seed,
        variant,
        cycles,
    };
    circuit.validate()?;
    Ok(circuit)
}
