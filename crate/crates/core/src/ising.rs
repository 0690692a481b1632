//! Circuit amplitudes as Ising partition functions at imaginary temperature.
//!
//! Between two consecutive two-sparse gates (H, X^1/2, Y^1/2) a qubit keeps
//! its computational-basis value, so a Feynman path is fixed by one binary
//! spin per two-sparse gate. Every gate matrix element along a path is
//! `2^{-1/2}` times a power of `ω = e^{iπ/4}` (or 1 for diagonal gates), so
//!
//! `<x|U|0> = 2^{-g/2} ω^{c} Σ_s ω^{U(s, x)}`
//!
//! where `g` counts two-sparse gates, `c` collects the path-independent
//! phase and `U` is a quadratic polynomial in the spins with integer
//! coefficients taken mod 8 ("phase units").

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{generate_stat_ensemble_from, Circuit, GateKind, LatticeSpec};
use crate::rng::{self, labels};
use crate::statevector::format_bitstring;

/// Largest number of free spins summed exhaustively.
pub const DEFAULT_ENUMERATION_CAP: usize = 24;

#[derive(Debug, Error, PartialEq)]
pub enum IsingError {
    #[error("gate `{kind}` on qubit {qubit} (cycle {cycle}) has no path-sum rule")]
    UnsupportedGate { kind: GateKind, qubit: usize, cycle: usize },
    #[error("qubit {0} has no two-sparse gate")]
    NoTwoSparseGate(usize),
    #[error("{n_free} free spins exceed the enumeration cap of {cap}")]
    EnumerationCap { n_free: usize, cap: usize },
    #[error("sample count must be at least 1")]
    EmptySample,
    #[error("sector {sector} has a vanishing posterior weight")]
    DegenerateSector { sector: usize },
    #[error("output {x} out of range for {n} qubits")]
    OutputRange { x: u64, n: usize },
}

/// Phase units of a matrix element `<b'|G|b>` of a two-sparse gate, with
/// the common `2^{-1/2}` magnitude removed.
pub fn sparse_units(kind: GateKind, b: u8, b2: u8) -> u8 {
    let (b, b2) = (i32::from(b), i32::from(b2));
    let u = match kind {
        GateKind::H => 4 * b * b2,
        GateKind::X2 => 1 - 2 * b - 2 * b2 + 4 * b * b2,
        GateKind::Y2 => 1 + 4 * b * (1 - b2),
        _ => panic!("{kind} is not two-sparse"),
    };
    u.rem_euclid(8) as u8
}

/// Phase units of a diagonal single-qubit gate on basis value `b`.
pub fn diagonal_units(kind: GateKind, b: u8) -> u8 {
    match kind {
        GateKind::T => b,
        GateKind::Z => 4 * b,
        _ => panic!("{kind} is not a diagonal single-qubit gate"),
    }
}

/// A spin variable of the path sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Var {
    /// The initial `|0>` value before the first two-sparse gate.
    Zero,
    Free(usize),
    /// The final value of a qubit, fixed to the output bit.
    Out(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Term {
    Sparse { kind: GateKind, before: Var, after: Var },
    Diagonal { kind: GateKind, var: Var },
    Cz { a: Var, b: Var },
}

impl Term {
    fn vars(&self) -> (Var, Var) {
        match *self {
            Term::Sparse { before, after, .. } => (before, after),
            Term::Diagonal { var, .. } => (var, Var::Zero),
            Term::Cz { a, b } => (a, b),
        }
    }

    fn units(&self, a: u8, b: u8) -> u8 {
        match *self {
            Term::Sparse { kind, .. } => sparse_units(kind, a, b),
            Term::Diagonal { kind, .. } => diagonal_units(kind, a),
            Term::Cz { .. } => 4 * a * b,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Worldline {
    pub qubit: usize,
    /// Cycles of the qubit's two-sparse gates, starting with cycle 0.
    pub vertex_cycles: Vec<usize>,
    /// Free spins: one per two-sparse gate except the last, whose output is
    /// the measured bit.
    pub d: usize,
}

/// The Ising form of `<x|U|0>` for one circuit.
#[derive(Debug, Clone, PartialEq)]
pub struct IsingModel {
    pub n: usize,
    pub worldlines: Vec<Worldline>,
    pub n_free: usize,
    pub g_sparse: usize,
    /// Path- and output-independent phase.
    pub global_units: u8,
    /// Linear term of each free spin when all outputs are 0.
    pub fields: Vec<u8>,
    /// Nonzero couplings between free spins, keyed `(a, b)` with `a < b`.
    pub couplings: BTreeMap<(usize, usize), u8>,
    /// Nonzero couplings between a free spin and an output bit.
    pub boundary: BTreeMap<(usize, usize), u8>,
    pub output_fields: Vec<u8>,
    pub output_couplings: BTreeMap<(usize, usize), u8>,
    pub x: u64,
    /// First free spin index of each worldline.
    offsets: Vec<usize>,
    script: Vec<Term>,
}

/// Builds the Ising model of `circuit` for output `x`.
pub fn map_to_ising(circuit: &Circuit, x: u64) -> Result<IsingModel, IsingError> {
    let n = circuit.n();
    if n < 64 && x >> n != 0 {
        return Err(IsingError::OutputRange { x, n });
    }
    let mut vertex_cycles = vec![Vec::new(); n];
    for (t, cycle) in circuit.cycles.iter().enumerate() {
        for gate in cycle {
            match gate.kind {
                k if k.is_two_sparse() => vertex_cycles[gate.target()].push(t),
                GateKind::T | GateKind::Z | GateKind::Cz => {}
                kind => {
                    return Err(IsingError::UnsupportedGate {
                        kind,
                        qubit: gate.target(),
                        cycle: t,
                    })
                }
            }
        }
    }
    let mut worldlines = Vec::with_capacity(n);
    let mut offsets = Vec::with_capacity(n);
    let mut n_free = 0;
    for (q, cycles) in vertex_cycles.into_iter().enumerate() {
        if cycles.is_empty() {
            return Err(IsingError::NoTwoSparseGate(q));
        }
        let d = cycles.len() - 1;
        offsets.push(n_free);
        n_free += d;
        worldlines.push(Worldline {
            qubit: q,
            vertex_cycles: cycles,
            d,
        });
    }
    let g_sparse = n_free + n;

    // current segment of each qubit: -1 before its first two-sparse gate
    let mut seg: Vec<isize> = vec![-1; n];
    let var_of = |q: usize, s: isize| -> Var {
        if s < 0 {
            Var::Zero
        } else if (s as usize) < worldlines[q].d {
            Var::Free(offsets[q] + s as usize)
        } else {
            Var::Out(q)
        }
    };
    let mut script = Vec::new();
    for cycle in &circuit.cycles {
        for gate in cycle {
            match *gate.qubits() {
                [a, b] => script.push(Term::Cz {
                    a: var_of(a, seg[a]),
                    b: var_of(b, seg[b]),
                }),
                [q] if gate.kind.is_two_sparse() => {
                    let before = var_of(q, seg[q]);
                    seg[q] += 1;
                    script.push(Term::Sparse {
                        kind: gate.kind,
                        before,
                        after: var_of(q, seg[q]),
                    });
                }
                [q] => script.push(Term::Diagonal {
                    kind: gate.kind,
                    var: var_of(q, seg[q]),
                }),
                _ => unreachable!("gates have one or two qubits"),
            }
        }
    }

    // Each term depends on at most two spins, so differencing it over its
    // four local assignments yields its exact constant, linear and
    // quadratic coefficients.
    let index = |v: Var| match v {
        Var::Zero => None,
        Var::Free(i) => Some(i),
        Var::Out(q) => Some(n_free + q),
    };
    let mut constant = 0u8;
    let mut linear = vec![0u8; n_free + n];
    let mut quadratic: BTreeMap<(usize, usize), u8> = BTreeMap::new();
    for term in &script {
        let (va, vb) = term.vars();
        let (ia, ib) = (index(va), index(vb));
        let f = |a: u8, b: u8| term.units(a, b);
        let c = f(0, 0);
        constant = (constant + c) % 8;
        let ha = f(1, 0).wrapping_sub(c) & 7;
        let hb = f(0, 1).wrapping_sub(c) & 7;
        let j = f(1, 1).wrapping_add(c).wrapping_sub(f(1, 0)).wrapping_sub(f(0, 1)) & 7;
        match (ia, ib) {
            (Some(a), Some(b)) => {
                debug_assert_ne!(a, b);
                linear[a] = (linear[a] + ha) % 8;
                linear[b] = (linear[b] + hb) % 8;
                let e = quadratic.entry((a.min(b), a.max(b))).or_insert(0);
                *e = (*e + j) % 8;
            }
            (Some(a), None) => linear[a] = (linear[a] + ha) % 8,
            (None, Some(b)) => linear[b] = (linear[b] + hb) % 8,
            (None, None) => {}
        }
    }
    let mut couplings = BTreeMap::new();
    let mut boundary = BTreeMap::new();
    let mut output_couplings = BTreeMap::new();
    for ((a, b), j) in quadratic {
        if j == 0 {
            continue;
        }
        match (a < n_free, b < n_free) {
            (true, true) => {
                couplings.insert((a, b), j);
            }
            (true, false) => {
                boundary.insert((a, b - n_free), j);
            }
            (false, false) => {
                output_couplings.insert((a - n_free, b - n_free), j);
            }
            (false, true) => unreachable!("keys are ordered"),
        }
    }
    let output_fields = linear.split_off(n_free);
    Ok(IsingModel {
        n,
        worldlines,
        n_free,
        g_sparse,
        global_units: constant,
        fields: linear,
        couplings,
        boundary,
        output_fields,
        output_couplings,
        x,
        offsets,
        script,
    })
}

/// Population of each of the 8 phase sectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseHistogram {
    pub counts: [u64; 8],
    pub q: u64,
    pub x: u64,
    pub exhaustive: bool,
}

impl IsingModel {
    /// Same circuit, different output bitstring.
    pub fn with_output(&self, x: u64) -> Result<Self, IsingError> {
        if self.n < 64 && x >> self.n != 0 {
            return Err(IsingError::OutputRange { x, n: self.n });
        }
        Ok(Self { x, ..self.clone() })
    }

    /// `(qubit, k, cycle)` of free spin `v`.
    pub fn vertex(&self, v: usize) -> (usize, usize, usize) {
        // qubits without free spins share the offset of the next qubit
        let q = self.offsets.partition_point(|&o| o <= v) - 1;
        let k = v - self.offsets[q];
        (q, k, self.worldlines[q].vertex_cycles[k])
    }

    /// Free spin index of vertex `k` on qubit `q`'s worldline.
    pub fn free_index(&self, q: usize, k: usize) -> Option<usize> {
        (k < self.worldlines[q].d).then(|| self.offsets[q] + k)
    }

    fn bit(&self, q: usize) -> u8 {
        (self.x >> q & 1) as u8
    }

    /// Fields of the free spins with the output bits substituted.
    pub fn effective_fields(&self) -> Vec<u8> {
        let mut f = self.fields.clone();
        for (&(v, q), &j) in &self.boundary {
            f[v] = (f[v] + j * self.bit(q)) % 8;
        }
        f
    }

    /// Spin-independent units for the current output, excluding
    /// `global_units`.
    pub fn offset_units(&self) -> u8 {
        let mut u = 0u8;
        for q in 0..self.n {
            u = (u + self.output_fields[q] * self.bit(q)) % 8;
        }
        for (&(a, b), &j) in &self.output_couplings {
            u = (u + j * self.bit(a) * self.bit(b)) % 8;
        }
        u
    }

    /// Path units (without `global_units`) from the extracted coefficients.
    pub fn path_units(&self, spins: &[bool]) -> u8 {
        let fields = self.effective_fields();
        let mut u = self.offset_units();
        for (v, &s) in spins.iter().enumerate() {
            if s {
                u = (u + fields[v]) % 8;
            }
        }
        for (&(a, b), &j) in &self.couplings {
            if spins[a] && spins[b] {
                u = (u + j) % 8;
            }
        }
        u
    }

    /// Total units of one path evaluated gate by gate from the script,
    /// including `global_units`.
    pub fn script_units(&self, spins: &[bool]) -> u8 {
        let value = |v: Var| match v {
            Var::Zero => 0,
            Var::Free(i) => u8::from(spins[i]),
            Var::Out(q) => self.bit(q),
        };
        self.script.iter().fold(0u8, |u, term| {
            let (a, b) = term.vars();
            (u + term.units(value(a), value(b))) % 8
        })
    }

    /// Number of gates in the phase script.
    pub fn script_len(&self) -> usize {
        self.script.len()
    }

    /// Exact sector populations `M_k` over all `2^{n_free}` paths.
    pub fn sector_counts(&self, cap: usize) -> Result<[u64; 8], IsingError> {
        if self.n_free > cap {
            return Err(IsingError::EnumerationCap {
                n_free: self.n_free,
                cap,
            });
        }
        let fields = self.effective_fields();
        let offset = self.offset_units();
        let mut adj: Vec<Vec<(usize, u8)>> = vec![Vec::new(); self.n_free];
        for (&(a, b), &j) in &self.couplings {
            adj[a].push((b, j));
            adj[b].push((a, j));
        }
        let nf = self.n_free;
        let top = nf.min(8);
        let low = nf - top;
        let chunk = |c: u64| -> [u64; 8] {
            // spins: low bits enumerated by Gray code, top bits fixed to c
            let mut spins = vec![false; nf];
            for i in 0..top {
                spins[low + i] = c >> i & 1 == 1;
            }
            let mut local = fields.clone();
            let mut u = offset;
            for v in 0..nf {
                if spins[v] {
                    u = (u + fields[v]) % 8;
                }
            }
            for (&(a, b), &j) in &self.couplings {
                if spins[a] && spins[b] {
                    u = (u + j) % 8;
                }
                if spins[a] {
                    local[b] = (local[b] + j) % 8;
                }
                if spins[b] {
                    local[a] = (local[a] + j) % 8;
                }
            }
            let mut counts = [0u64; 8];
            counts[u as usize] += 1;
            for step in 1u64..(1u64 << low) {
                let v = step.trailing_zeros() as usize;
                let rising = !spins[v];
                spins[v] = rising;
                if rising {
                    u = (u + local[v]) & 7;
                    for &(w, j) in &adj[v] {
                        local[w] = (local[w] + j) & 7;
                    }
                } else {
                    u = u.wrapping_sub(local[v]) & 7;
                    for &(w, j) in &adj[v] {
                        local[w] = local[w].wrapping_sub(j) & 7;
                    }
                }
                counts[u as usize] += 1;
            }
            counts
        };
        let chunks = 1u64 << top;
        #[cfg(feature = "parallel")]
        let parts: Vec<[u64; 8]> = {
            use rayon::prelude::*;
            (0..chunks).into_par_iter().map(chunk).collect()
        };
        #[cfg(not(feature = "parallel"))]
        let parts: Vec<[u64; 8]> = (0..chunks).map(chunk).collect();
        let mut total = [0u64; 8];
        for p in parts {
            for k in 0..8 {
                total[k] += p[k];
            }
        }
        Ok(total)
    }

    /// Exhaustive [`PhaseHistogram`] with `Q = 2^{n_free}`.
    pub fn exhaustive_histogram(&self, cap: usize) -> Result<PhaseHistogram, IsingError> {
        let counts = self.sector_counts(cap)?;
        Ok(PhaseHistogram {
            counts,
            q: counts.iter().sum(),
            x: self.x,
            exhaustive: true,
        })
    }

    /// `<x|U|0>` by exact path enumeration.
    pub fn path_sum_amplitude(&self) -> Result<Complex64, IsingError> {
        self.path_sum_amplitude_capped(DEFAULT_ENUMERATION_CAP)
    }

    pub fn path_sum_amplitude_capped(&self, cap: usize) -> Result<Complex64, IsingError> {
        let m = self.sector_counts(cap)?;
        let sum = sector_sum(&m.map(|c| c as f64));
        let scale = 2f64.powf(-(self.g_sparse as f64) / 2.0);
        Ok(omega(self.global_units) * sum * scale)
    }

    /// Exhaustive amplitudes for every output bitstring.
    pub fn all_amplitudes(&self, cap: usize) -> Result<Vec<Complex64>, IsingError> {
        (0..1u64 << self.n)
            .map(|x| self.with_output(x)?.path_sum_amplitude_capped(cap))
            .collect()
    }

    /// Export form with fields and couplings for the current output.
    pub fn export(&self) -> IsingExport {
        let mut vertices = Vec::with_capacity(self.n_free);
        for w in &self.worldlines {
            for k in 0..w.d {
                vertices.push(ExportVertex {
                    qubit: w.qubit,
                    k,
                    cycle: w.vertex_cycles[k],
                });
            }
        }
        IsingExport {
            n: self.n,
            n_free: self.n_free,
            g_sparse: self.g_sparse,
            global_units: self.global_units,
            offset_units: self.offset_units(),
            vertices,
            couplings: self
                .couplings
                .iter()
                .map(|(&(a, b), &units)| ExportCoupling { a, b, units })
                .collect(),
            fields: self
                .effective_fields()
                .into_iter()
                .enumerate()
                .filter(|&(_, u)| u != 0)
                .map(|(v, units)| ExportField { v, units })
                .collect(),
            x: format_bitstring(self.x, self.n),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportVertex {
    pub qubit: usize,
    pub k: usize,
    pub cycle: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportCoupling {
    pub a: usize,
    pub b: usize,
    pub units: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportField {
    pub v: usize,
    pub units: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsingExport {
    pub n: usize,
    pub n_free: usize,
    pub g_sparse: usize,
    pub global_units: u8,
    pub offset_units: u8,
    pub vertices: Vec<ExportVertex>,
    pub couplings: Vec<ExportCoupling>,
    pub fields: Vec<ExportField>,
    pub x: String,
}

/// `ω^k` with `ω = e^{iπ/4}`.
pub fn omega(k: u8) -> Complex64 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    match k % 8 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(s, s),
        2 => Complex64::new(0.0, 1.0),
        3 => Complex64::new(-s, s),
        4 => Complex64::new(-1.0, 0.0),
        5 => Complex64::new(-s, -s),
        6 => Complex64::new(0.0, -1.0),
        _ => Complex64::new(s, -s),
    }
}

/// `Σ_k w_k ω^k`, grouping terms so that integer weights stay exact until
/// the final multiplication by `1/√2`.
fn sector_sum(w: &[f64; 8]) -> Complex64 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Complex64::new(
        (w[0] - w[4]) + (w[1] - w[3] - w[5] + w[7]) * s,
        (w[2] - w[6]) + (w[1] + w[3] - w[5] - w[7]) * s,
    )
}

const MC_CHUNK: u64 = 1 << 14;

/// Scores `q` uniformly random spin configurations into phase sectors.
/// Chunk `c` of the samples uses stream `(seed, "ising-mc", c)`.
pub fn phase_histogram(model: &IsingModel, q: u64, seed: u64) -> Result<PhaseHistogram, IsingError> {
    if q == 0 {
        return Err(IsingError::EmptySample);
    }
    let fields = model.effective_fields();
    let offset = model.offset_units();
    let words = model.n_free.div_ceil(64).max(1);
    let edges: Vec<(usize, usize, u8)> = model.couplings.iter().map(|(&(a, b), &j)| (a, b, j)).collect();
    let chunk = |c: u64| -> [u64; 8] {
        let mut rng = rng::stream(seed, labels::ISING_MC, c);
        let len = MC_CHUNK.min(q - c * MC_CHUNK);
        let mut counts = [0u64; 8];
        let mut bits = vec![0u64; words];
        for _ in 0..len {
            for w in bits.iter_mut() {
                *w = rng.random();
            }
            let set = |v: usize| bits[v / 64] >> (v % 64) & 1 == 1;
            let mut u = u32::from(offset);
            for (v, &f) in fields.iter().enumerate() {
                if set(v) {
                    u += u32::from(f);
                }
            }
            for &(a, b, j) in &edges {
                if set(a) && set(b) {
                    u += u32::from(j);
                }
            }
            counts[(u % 8) as usize] += 1;
        }
        counts
    };
    let chunks = q.div_ceil(MC_CHUNK);
    #[cfg(feature = "parallel")]
    let parts: Vec<[u64; 8]> = {
        use rayon::prelude::*;
        (0..chunks).into_par_iter().map(chunk).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let parts: Vec<[u64; 8]> = (0..chunks).map(chunk).collect();
    let mut counts = [0u64; 8];
    for p in parts {
        for k in 0..8 {
            counts[k] += p[k];
        }
    }
    Ok(PhaseHistogram {
        counts,
        q,
        x: model.x,
        exhaustive: false,
    })
}

/// Posterior mean deviations `ρ̄_j` of the sector weights: the empirical
/// weights minus `1/8`, with their projection on the `e^{±iπj/4}` Fourier
/// modes removed.
pub fn rho_bar(hist: &PhaseHistogram) -> [f64; 8] {
    let total = hist.counts.iter().sum::<u64>().max(1) as f64;
    let a = hist.counts.map(|c| c as f64 / total);
    let theta = |k: usize| std::f64::consts::PI * k as f64 / 4.0;
    let c: f64 = (0..8).map(|k| a[k] * theta(k).cos()).sum::<f64>() * 2.0 / 8.0;
    let s: f64 = (0..8).map(|k| a[k] * theta(k).sin()).sum::<f64>() * 2.0 / 8.0;
    std::array::from_fn(|j| a[j] - 1.0 / 8.0 - (c * theta(j).cos() + s * theta(j).sin()))
}

/// Equivalent fidelity of the sampled-path estimate,
/// `|Σ_j Q_j e^{iπj/4} / (8ρ̄_j + 1)|² / (N L)` with `N = 2^n`,
/// `L = 2^{g_sparse}`.
pub fn bayesian_alpha(hist: &PhaseHistogram, n: usize, g_sparse: usize) -> Result<f64, IsingError> {
    bayesian_alpha_with_rho(hist, n, g_sparse, &rho_bar(hist))
}

pub fn bayesian_alpha_with_rho(
    hist: &PhaseHistogram,
    n: usize,
    g_sparse: usize,
    rho: &[f64; 8],
) -> Result<f64, IsingError> {
    if hist.counts.iter().all(|&c| c == 0) {
        return Err(IsingError::EmptySample);
    }
    let mut sum = Complex64::new(0.0, 0.0);
    for j in 0..8 {
        if hist.counts[j] == 0 {
            continue;
        }
        let denom = 8.0 * rho[j] + 1.0;
        if denom.abs() < 1e-12 {
            return Err(IsingError::DegenerateSector { sector: j });
        }
        sum += omega(j as u8) * (hist.counts[j] as f64 / denom);
    }
    Ok(sum.norm_sqr() * 2f64.powi(-((n + g_sparse) as i32)))
}

/// Upper bound on the treewidth of the graph whose vertices are the free
/// spins and whose edges are the nonzero couplings.
pub fn treewidth_upper_bound(model: &IsingModel) -> usize {
    let edges: Vec<(usize, usize)> = model.couplings.keys().copied().collect();
    greedy_treewidth(model.n_free, &edges)
}

/// Width of a greedy min-fill elimination ordering (ties broken by lower
/// degree, then lower index).
pub fn greedy_treewidth(vertices: usize, edges: &[(usize, usize)]) -> usize {
    use std::collections::BTreeSet;
    let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); vertices];
    for &(a, b) in edges {
        if a != b {
            adj[a].insert(b);
            adj[b].insert(a);
        }
    }
    let mut alive: BTreeSet<usize> = (0..vertices).collect();
    let fill = |adj: &[BTreeSet<usize>], v: usize| -> usize {
        let nb: Vec<usize> = adj[v].iter().copied().collect();
        let mut missing = 0;
        for (i, &a) in nb.iter().enumerate() {
            for &b in &nb[i + 1..] {
                if !adj[a].contains(&b) {
                    missing += 1;
                }
            }
        }
        missing
    };
    let mut width = 0;
    while let Some(&v) = alive
        .iter()
        .min_by_key(|&&v| (fill(&adj, v), adj[v].len(), v))
    {
        let nb: Vec<usize> = adj[v].iter().copied().collect();
        width = width.max(nb.len());
        for (i, &a) in nb.iter().enumerate() {
            for &b in &nb[i + 1..] {
                adj[a].insert(b);
                adj[b].insert(a);
            }
        }
        for &a in &nb {
            adj[a].remove(&v);
        }
        adj[v].clear();
        alive.remove(&v);
    }
    width
}

/// Closed-form probability that a lateral coupling spans `r` CZ gates.
pub fn lateral_coupling_theory(p_cz: f64, r: usize) -> f64 {
    let norm = 1.0 + p_cz / 8.0;
    if r == 0 {
        (1.0 - p_cz) / norm
    } else {
        9.0 / norm * (p_cz / 8.0 / norm).powi(r as i32)
    }
}

/// Moments of `k - l` for one value of `k`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct GapMoments {
    pub count: u64,
    pub mean_diff: f64,
    pub var_diff: f64,
    /// Mean of `(k + l) / 3`, the Gaussian prediction for `var_diff`.
    pub predicted_var: f64,
}

/// Empirical coupling statistics of the layered ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingStats {
    pub p_cz: f64,
    pub models: usize,
    pub layers: usize,
    /// `lateral[r]`: overlap intervals spanning exactly `r` CZ gates.
    pub lateral: Vec<u64>,
    pub intervals: u64,
    /// `gap[k]`: moments of `k - l` where a qubit's `k`-th two-sparse gate
    /// (after the Hadamards) falls in a layer by which a neighbour has had
    /// `l`.
    pub gap: BTreeMap<usize, GapMoments>,
}

impl CouplingStats {
    pub fn empirical(&self, r: usize) -> f64 {
        self.lateral.get(r).copied().unwrap_or(0) as f64 / self.intervals.max(1) as f64
    }

    pub fn theory(&self, r: usize) -> f64 {
        lateral_coupling_theory(self.p_cz, r)
    }
}

/// Layers kept free at the end of each model so intervals are not cut
/// short by the end of the circuit.
pub const TAIL_LAYERS: usize = 10;

/// Statistics over `n_models` layered ensembles of `layers` layers.
///
/// Along each lattice edge, the layers at which either endpoint receives a
/// two-sparse gate cut time into intervals; each interval is the overlap of
/// one spin of each endpoint, and the CZ gates it contains set their
/// coupling. Intervals start at a cut in layers `1..=layers-TAIL_LAYERS`.
pub fn coupling_statistics(
    lattice: &LatticeSpec,
    layers: usize,
    p_cz: f64,
    n_models: usize,
    seed: u64,
) -> Result<CouplingStats, crate::circuit::CircuitError> {
    let n = lattice.n();
    let edges = lattice.edges();
    let last_start = layers.saturating_sub(TAIL_LAYERS);
    let model = |i: usize| -> Result<(Vec<u64>, BTreeMap<usize, [f64; 4]>), crate::circuit::CircuitError> {
        let mut rng = rng::stream(seed, labels::ENSEMBLE, i as u64);
        let c = generate_stat_ensemble_from(lattice, layers, p_cz, seed, &mut rng)?;
        // sparse[l][q]: qubit q gets a two-sparse gate in layer l (1-based)
        let mut sparse = vec![vec![false; n]; layers + 1];
        let mut cz: BTreeMap<(usize, usize), Vec<bool>> =
            edges.iter().map(|&e| (e, vec![false; layers + 1])).collect();
        for l in 1..=layers {
            for g in &c.cycles[2 * l - 1] {
                sparse[l][g.target()] = g.kind.is_two_sparse();
            }
            for g in &c.cycles[2 * l] {
                let q = g.qubits();
                cz.get_mut(&(q[0].min(q[1]), q[0].max(q[1]))).expect("lattice edge")[l] = true;
            }
        }
        let mut lateral = Vec::new();
        for &(a, b) in &edges {
            let on = &cz[&(a, b)];
            let mut start: Option<usize> = None;
            let mut count = 0usize;
            for l in 1..=layers {
                if sparse[l][a] || sparse[l][b] {
                    if start.is_some() {
                        if lateral.len() <= count {
                            lateral.resize(count + 1, 0);
                        }
                        lateral[count] += 1;
                    }
                    start = (l <= last_start).then_some(l);
                    count = 0;
                }
                if on[l] {
                    count += 1;
                }
            }
        }
        // per k: [count, Σ(k-l), Σ(k-l)², Σ(k+l)/3]
        let mut gap: BTreeMap<usize, [f64; 4]> = BTreeMap::new();
        let mut seen = vec![0usize; n];
        for l in 1..=last_start {
            for q in 0..n {
                seen[q] += usize::from(sparse[l][q]);
            }
            for &(a, b) in &edges {
                for (i, j) in [(a, b), (b, a)] {
                    if sparse[l][i] {
                        let k = seen[i];
                        let other = seen[j];
                        let diff = k as f64 - other as f64;
                        let e = gap.entry(k).or_insert([0.0; 4]);
                        e[0] += 1.0;
                        e[1] += diff;
                        e[2] += diff * diff;
                        e[3] += (k + other) as f64 / 3.0;
                    }
                }
            }
        }
        Ok((lateral, gap))
    };
    let run: Vec<_> = {
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            (0..n_models).into_par_iter().map(model).collect()
        }
        #[cfg(not(feature = "parallel"))]
        {
            (0..n_models).map(model).collect()
        }
    };
    let mut lateral: Vec<u64> = Vec::new();
    let mut sums: BTreeMap<usize, [f64; 4]> = BTreeMap::new();
    for part in run {
        let (lat, gap) = part?;
        if lateral.len() < lat.len() {
            lateral.resize(lat.len(), 0);
        }
        for (r, c) in lat.into_iter().enumerate() {
            lateral[r] += c;
        }
        for (k, s) in gap {
            let e = sums.entry(k).or_insert([0.0; 4]);
            for i in 0..4 {
                e[i] += s[i];
            }
        }
    }
    let gap = sums
        .into_iter()
        .map(|(k, [c, s1, s2, pred])| {
            let mean = s1 / c;
            let var = if c > 1.0 { (s2 - c * mean * mean) / (c - 1.0) } else { 0.0 };
            (
                k,
                GapMoments {
                    count: c as u64,
                    mean_diff: mean,
                    var_diff: var,
                    predicted_var: pred / c,
                },
            )
        })
        .collect();
    let intervals = lateral.iter().sum();
    Ok(CouplingStats {
        p_cz,
        models: n_models,
        layers,
        lateral,
        intervals,
        gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{generate_circuit, Gate, Variant};
    use crate::statevector::simulate;

    fn hh_cz() -> Circuit {
        Circuit {
            lattice: LatticeSpec::planar(1, 2).unwrap(),
            seed: 0,
            variant: Variant::Sec4,
            cycles: vec![
                vec![Gate::single(GateKind::H, 0), Gate::single(GateKind::H, 1)],
                vec![Gate::cz(0, 1)],
            ],
        }
    }

    #[test]
    fn unit_tables_match_matrices() {
        let scale = std::f64::consts::FRAC_1_SQRT_2;
        for kind in [GateKind::H, GateKind::X2, GateKind::Y2] {
            let m = kind.matrix().unwrap();
            for b in 0..2u8 {
                for b2 in 0..2u8 {
                    let expected = m[b2 as usize][b as usize];
                    let got = omega(sparse_units(kind, b, b2)) * scale;
                    assert!((expected - got).norm() < 1e-15, "{kind} {b}->{b2}");
                }
            }
        }
        let t = GateKind::T.matrix().unwrap();
        assert!((omega(diagonal_units(GateKind::T, 1)) - t[1][1]).norm() < 1e-15);
    }

    #[test]
    fn two_qubit_example() {
        let model = map_to_ising(&hh_cz(), 0b11).unwrap();
        assert_eq!((model.n_free, model.g_sparse), (0, 2));
        assert_eq!((model.global_units + model.offset_units()) % 8, 4);
        let amp = model.path_sum_amplitude().unwrap();
        assert!((amp - Complex64::new(-0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn one_qubit_t_then_x2() {
        let c = Circuit {
            lattice: LatticeSpec::planar(1, 1).unwrap(),
            seed: 0,
            variant: Variant::Sec4,
            cycles: vec![
                vec![Gate::single(GateKind::H, 0)],
                vec![Gate::single(GateKind::T, 0)],
                vec![Gate::single(GateKind::X2, 0)],
            ],
        };
        let model = map_to_ising(&c, 0).unwrap();
        assert_eq!((model.n_free, model.g_sparse), (1, 2));
        let state = simulate(&c).unwrap();
        for x in 0..2 {
            let amp = model.with_output(x).unwrap().path_sum_amplitude().unwrap();
            assert!((amp - state.amplitudes()[x as usize]).norm() < 1e-12);
        }
    }

    #[test]
    fn unsupported_gates_are_rejected() {
        let mut c = hh_cz();
        c.cycles.push(vec![Gate::single(GateKind::X, 1)]);
        assert!(matches!(map_to_ising(&c, 0), Err(IsingError::UnsupportedGate { kind: GateKind::X, .. })));
    }

    #[test]
    fn matches_simulator_on_small_sec4() {
        let lattice = LatticeSpec::planar(1, 3).unwrap();
        for seed in 0..5 {
            let c = generate_circuit(&lattice, 4, seed, Variant::Sec4).unwrap();
            let state = simulate(&c).unwrap();
            let model = map_to_ising(&c, 0).unwrap();
            let amps = model.all_amplitudes(DEFAULT_ENUMERATION_CAP).unwrap();
            for (a, b) in amps.iter().zip(state.amplitudes()) {
                assert!((a - b).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn coefficients_reproduce_script() {
        let lattice = LatticeSpec::planar(2, 2).unwrap();
        let c = generate_circuit(&lattice, 8, 3, Variant::Sec4).unwrap();
        let model = map_to_ising(&c, 0b1010).unwrap();
        let mut rng = rng::stream(1, "test", 0);
        for _ in 0..200 {
            let spins: Vec<bool> = (0..model.n_free).map(|_| rng.random()).collect();
            assert_eq!(
                model.script_units(&spins),
                (model.path_units(&spins) + model.global_units) % 8
            );
        }
    }

    #[test]
    fn consecutive_vertices_couple_with_four() {
        let lattice = LatticeSpec::planar(2, 3).unwrap();
        let c = generate_circuit(&lattice, 12, 1, Variant::Sec4).unwrap();
        let model = map_to_ising(&c, 0).unwrap();
        for w in &model.worldlines {
            for k in 1..w.d {
                let a = model.free_index(w.qubit, k - 1).unwrap();
                let b = model.free_index(w.qubit, k).unwrap();
                assert_eq!(model.couplings.get(&(a, b)), Some(&4));
            }
        }
    }

    #[test]
    fn vertex_lookup_round_trips() {
        let lattice = LatticeSpec::planar(2, 3).unwrap();
        let c = generate_circuit(&lattice, 10, 2, Variant::Sec4).unwrap();
        let model = map_to_ising(&c, 0).unwrap();
        for v in 0..model.n_free {
            let (q, k, cycle) = model.vertex(v);
            assert_eq!(model.free_index(q, k), Some(v));
            assert_eq!(model.worldlines[q].vertex_cycles[k], cycle);
        }
    }

    #[test]
    fn single_sector_bayes() {
        let hist = PhaseHistogram {
            counts: [0, 0, 0, 100, 0, 0, 0, 0],
            q: 100,
            x: 0,
            exhaustive: false,
        };
        let a = bayesian_alpha_with_rho(&hist, 2, 3, &[0.0; 8]).unwrap();
        assert!((a - 100.0 * 100.0 / 32.0).abs() < 1e-9);
        let computed = bayesian_alpha(&hist, 2, 3).unwrap();
        assert!((computed - 100.0 * 100.0 / (36.0 * 32.0)).abs() < 1e-9);
    }

    #[test]
    fn doubling_counts_quadruples_alpha() {
        let hist = PhaseHistogram {
            counts: [13, 9, 20, 11, 7, 15, 12, 13],
            q: 100,
            x: 0,
            exhaustive: false,
        };
        let double = PhaseHistogram {
            counts: hist.counts.map(|c| 2 * c),
            q: 200,
            ..hist
        };
        let a = bayesian_alpha(&hist, 3, 6).unwrap();
        let b = bayesian_alpha(&double, 3, 6).unwrap();
        assert!((b / a - 4.0).abs() < 1e-9);
    }

    #[test]
    fn treewidth_of_simple_graphs() {
        let path: Vec<(usize, usize)> = (0..9).map(|i| (i, i + 1)).collect();
        assert_eq!(greedy_treewidth(10, &path), 1);
        let k5: Vec<(usize, usize)> = (0..5).flat_map(|a| (a + 1..5).map(move |b| (a, b))).collect();
        assert_eq!(greedy_treewidth(5, &k5), 4);
        let cycle: Vec<(usize, usize)> = (0..6).map(|i| (i, (i + 1) % 6)).collect();
        assert_eq!(greedy_treewidth(6, &cycle), 2);
        assert_eq!(greedy_treewidth(3, &[]), 0);
    }

    #[test]
    fn coupling_theory_values() {
        assert!((lateral_coupling_theory(0.25, 0) - 0.75 / 1.03125).abs() < 1e-12);
        assert!((lateral_coupling_theory(0.25, 1) / lateral_coupling_theory(0.25, 0) - 0.363_636).abs() < 1e-5);
        assert_eq!(lateral_coupling_theory(0.0, 0), 1.0);
        assert_eq!(lateral_coupling_theory(0.0, 1), 0.0);
        let total: f64 = (0..60).map(|r| lateral_coupling_theory(0.25, r)).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn no_cz_means_no_lateral_couplings() {
        let lattice = LatticeSpec::planar(2, 2).unwrap();
        let stats = coupling_statistics(&lattice, 30, 0.0, 20, 1).unwrap();
        assert_eq!(stats.lateral.len(), 1);
        assert_eq!(stats.empirical(0), 1.0);
    }
}
