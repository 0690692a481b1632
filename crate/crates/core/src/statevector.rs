//! Full-amplitude state-vector simulation.
//!
//! Amplitude index bit `q` holds qubit `q`. A single-qubit gate on `q` acts
//! on every pair of indices that differ only in bit `q`; the pair members
//! sit `2^q` apart, so the array is walked as consecutive `(lo, hi)` halves of
//! length `2^q`.

use std::io::{self, Read, Write};

use num_complex::Complex64;
use rand::Rng;
use thiserror::Error;

use crate::circuit::{Circuit, Cycle, Gate, GateKind};
use crate::numeric::det_sum;

pub const DEFAULT_CAP: usize = 28;
/// Gates whose qubits all lie below this bit are fused into blockwise passes.
pub const DEFAULT_FUSION_BITS: usize = 5;

const DUMP_MAGIC: &[u8; 8] = b"XEBSV1\0\0";

#[cfg(feature = "parallel")]
const PAR_CHUNK: usize = 1 << 14;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("{n} qubits exceed the capacity of {cap}")]
    Capacity { n: usize, cap: usize },
    #[error("qubit {q} out of range for {n} qubits")]
    BadQubit { q: usize, n: usize },
    #[error("two-qubit gate needs distinct qubits, got {0} twice")]
    SameQubit(usize),
    #[error("circuit has {circuit} qubits but the state has {state}")]
    DimensionMismatch { circuit: usize, state: usize },
    #[error("basis index {x} out of range for {n} qubits")]
    OutOfRange { x: u64, n: usize },
    #[error("sample size must be at least 1")]
    EmptySample,
    #[error("probabilities do not form a distribution: {0}")]
    BadDistribution(String),
    #[error("malformed sample file: {0}")]
    BadSample(String),
    #[error("malformed state dump: {0}")]
    BadDump(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Which kernels apply single-qubit gates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KernelMode {
    /// Full complex 2x2 product for every gate.
    Generic,
    /// Dedicated kernels: diagonal gates touch only the set-bit half, H is
    /// real, X^1/2 and Y^1/2 use their sum/difference structure.
    #[default]
    Specialized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimOptions {
    pub kernel: KernelMode,
    /// Fuse runs of gates confined to qubits below this bit. `None` applies
    /// every gate in its own pass over the whole array.
    pub fusion_bits: Option<usize>,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            kernel: KernelMode::Specialized,
            fusion_bits: Some(DEFAULT_FUSION_BITS),
        }
    }
}

impl SimOptions {
    pub fn unfused() -> Self {
        Self {
            fusion_bits: None,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n: usize,
    amps: Vec<Complex64>,
}

/// Output probabilities `|amp|^2` indexed like the amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbVector {
    n: usize,
    probs: Vec<f64>,
}

/// Sampled basis states.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sample {
    pub n: usize,
    pub bitstrings: Vec<u64>,
}

impl StateVector {
    /// `|0...0>` on `n` qubits with the default capacity.
    pub fn new(n: usize) -> Result<Self, SimError> {
        Self::with_cap(n, DEFAULT_CAP)
    }

    pub fn with_cap(n: usize, cap: usize) -> Result<Self, SimError> {
        Self::basis(n, 0, cap)
    }

    /// Computational basis state `|x>`.
    pub fn basis(n: usize, x: u64, cap: usize) -> Result<Self, SimError> {
        if n == 0 || n > cap || n >= 64 {
            return Err(SimError::Capacity { n, cap });
        }
        if x >> n != 0 {
            return Err(SimError::OutOfRange { x, n });
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1usize << n];
        amps[x as usize] = Complex64::new(1.0, 0.0);
        Ok(Self { n, amps })
    }

    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self, SimError> {
        if amps.len() < 2 || !amps.len().is_power_of_two() {
            return Err(SimError::BadDump(format!(
                "{} amplitudes is not a power of two",
                amps.len()
            )));
        }
        Ok(Self {
            n: amps.len().trailing_zeros() as usize,
            amps,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitude(&self, x: u64) -> Result<Complex64, SimError> {
        self.amps
            .get(x as usize)
            .copied()
            .filter(|_| x >> self.n == 0)
            .ok_or(SimError::OutOfRange { x, n: self.n })
    }

    pub fn norm_sqr(&self) -> f64 {
        det_sum(&self.amps, |a| a.norm_sqr())
    }

    pub fn probabilities(&self) -> ProbVector {
        #[cfg(feature = "parallel")]
        let probs = {
            use rayon::prelude::*;
            self.amps.par_iter().map(|a| a.norm_sqr()).collect()
        };
        #[cfg(not(feature = "parallel"))]
        let probs = self.amps.iter().map(|a| a.norm_sqr()).collect();
        ProbVector { n: self.n, probs }
    }

    fn check_qubit(&self, q: usize) -> Result<(), SimError> {
        if q < self.n {
            Ok(())
        } else {
            Err(SimError::BadQubit { q, n: self.n })
        }
    }

    pub fn apply_single_qubit(&mut self, kind: GateKind, q: usize) -> Result<(), SimError> {
        self.apply_single_qubit_with(kind, q, KernelMode::Specialized)
    }

    pub fn apply_single_qubit_with(
        &mut self,
        kind: GateKind,
        q: usize,
        mode: KernelMode,
    ) -> Result<(), SimError> {
        self.check_qubit(q)?;
        if kind == GateKind::Cz {
            return Err(SimError::SameQubit(q));
        }
        single_kernel(&mut self.amps, kind, q, mode, true);
        Ok(())
    }

    /// Applies an arbitrary 2x2 matrix `[[m00, m01], [m10, m11]]` to qubit `q`.
    pub fn apply_matrix(&mut self, m: [[Complex64; 2]; 2], q: usize) -> Result<(), SimError> {
        self.check_qubit(q)?;
        for_each_half(&mut self.amps, q, true, |lo, hi| generic_pairs(lo, hi, &m));
        Ok(())
    }

    pub fn apply_cz(&mut self, a: usize, b: usize) -> Result<(), SimError> {
        self.apply_cz_with(a, b, KernelMode::Specialized)
    }

    pub fn apply_cz_with(&mut self, a: usize, b: usize, mode: KernelMode) -> Result<(), SimError> {
        self.check_qubit(a)?;
        self.check_qubit(b)?;
        if a == b {
            return Err(SimError::SameQubit(a));
        }
        cz_kernel(&mut self.amps, a, b, mode, true);
        Ok(())
    }

    pub fn apply_gate(&mut self, gate: &Gate) -> Result<(), SimError> {
        self.apply_gate_with(gate, KernelMode::Specialized)
    }

    pub fn apply_gate_with(&mut self, gate: &Gate, mode: KernelMode) -> Result<(), SimError> {
        match *gate.qubits() {
            [a, b] => self.apply_cz_with(a, b, mode),
            [q] => self.apply_single_qubit_with(gate.kind, q, mode),
            _ => unreachable!("gates have one or two qubits"),
        }
    }

    /// Flips the qubits set in `mask` (X on each).
    pub fn apply_x_mask(&mut self, mask: u64) -> Result<(), SimError> {
        for q in 0..self.n {
            if mask >> q & 1 == 1 {
                self.apply_single_qubit(GateKind::X, q)?;
            }
        }
        Ok(())
    }

    /// Binary dump: `XEBSV1\0\0`, u32 n, u32 reserved, then little-endian
    /// `(re, im)` f64 pairs.
    pub fn write_dump<W: Write>(&self, mut w: W) -> Result<(), SimError> {
        w.write_all(DUMP_MAGIC)?;
        w.write_all(&(self.n as u32).to_le_bytes())?;
        w.write_all(&0u32.to_le_bytes())?;
        let mut buf = Vec::with_capacity(16 * 4096);
        for chunk in self.amps.chunks(4096) {
            buf.clear();
            for a in chunk {
                buf.extend_from_slice(&a.re.to_le_bytes());
                buf.extend_from_slice(&a.im.to_le_bytes());
            }
            w.write_all(&buf)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_dump<R: Read>(mut r: R, cap: usize) -> Result<Self, SimError> {
        let mut header = [0u8; 16];
        r.read_exact(&mut header)
            .map_err(|e| SimError::BadDump(format!("short header: {e}")))?;
        if &header[..8] != DUMP_MAGIC {
            return Err(SimError::BadDump("bad magic".into()));
        }
        let n = u32::from_le_bytes(header[8..12].try_into().expect("4 bytes")) as usize;
        if n == 0 || n > cap || n >= 64 {
            return Err(SimError::Capacity { n, cap });
        }
        let len = 1usize << n;
        let mut bytes = vec![0u8; 16 * len];
        r.read_exact(&mut bytes)
            .map_err(|e| SimError::BadDump(format!("expected {len} amplitudes: {e}")))?;
        let f = |b: &[u8]| f64::from_le_bytes(b.try_into().expect("8 bytes"));
        let amps = bytes
            .chunks_exact(16)
            .map(|c| Complex64::new(f(&c[..8]), f(&c[8..])))
            .collect();
        Ok(Self { n, amps })
    }
}

impl ProbVector {
    /// Wraps raw probabilities; checks length and sign only.
    pub fn new(probs: Vec<f64>) -> Result<Self, SimError> {
        if probs.len() < 2 || !probs.len().is_power_of_two() {
            return Err(SimError::BadDistribution(format!(
                "length {} is not a power of two",
                probs.len()
            )));
        }
        if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(SimError::BadDistribution(format!("entry {p}")));
        }
        Ok(Self {
            n: probs.len().trailing_zeros() as usize,
            probs,
        })
    }

    pub fn uniform(n: usize) -> Self {
        let len = 1usize << n;
        Self {
            n,
            probs: vec![1.0 / len as f64; len],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.probs
    }

    pub fn total(&self) -> f64 {
        det_sum(&self.probs, |&p| p)
    }

    pub fn get(&self, x: u64) -> Option<f64> {
        self.probs.get(x as usize).copied()
    }
}

/// Inverse-CDF sampler built once per distribution.
#[derive(Debug, Clone)]
pub struct Sampler {
    n: usize,
    cdf: Vec<f64>,
    last_nonzero: usize,
}

impl Sampler {
    pub fn new(probs: &ProbVector) -> Result<Self, SimError> {
        let mut acc = 0.0;
        let cdf: Vec<f64> = probs
            .probs
            .iter()
            .map(|&p| {
                acc += p;
                acc
            })
            .collect();
        let last_nonzero = probs
            .probs
            .iter()
            .rposition(|&p| p > 0.0)
            .ok_or_else(|| SimError::BadDistribution("all probabilities are zero".into()))?;
        Ok(Self {
            n: probs.n,
            cdf,
            last_nonzero,
        })
    }

    pub fn draw(&self, rng: &mut impl Rng) -> u64 {
        let total = self.cdf[self.cdf.len() - 1];
        let u = rng.random::<f64>() * total;
        let idx = self.cdf.partition_point(|&c| c <= u);
        idx.min(self.last_nonzero) as u64
    }

    pub fn sample(&self, m: usize, rng: &mut impl Rng) -> Result<Sample, SimError> {
        if m == 0 {
            return Err(SimError::EmptySample);
        }
        Ok(Sample {
            n: self.n,
            bitstrings: (0..m).map(|_| self.draw(rng)).collect(),
        })
    }
}

/// Draws `m` i.i.d. basis states from `probs`.
pub fn sample(probs: &ProbVector, m: usize, rng: &mut impl Rng) -> Result<Sample, SimError> {
    Sampler::new(probs)?.sample(m, rng)
}

/// `m` uniformly random bitstrings on `n` qubits.
pub fn sample_uniform(n: usize, m: usize, rng: &mut impl Rng) -> Result<Sample, SimError> {
    if m == 0 {
        return Err(SimError::EmptySample);
    }
    let mask = if n >= 64 { u64::MAX } else { (1u64 << n) - 1 };
    Ok(Sample {
        n,
        bitstrings: (0..m).map(|_| rng.random::<u64>() & mask).collect(),
    })
}

impl Sample {
    /// Sample file: header `#n=<n> m=<m> seed=<seed>`, then one bitstring per
    /// line.
    pub fn write_to<W: Write>(&self, w: W, seed: u64) -> Result<(), SimError> {
        self.write_annotated(w, seed, &[])
    }

    /// Like [`Sample::write_to`] with extra `# ...` comment lines after the
    /// header.
    pub fn write_annotated<W: Write>(&self, mut w: W, seed: u64, notes: &[String]) -> Result<(), SimError> {
        writeln!(w, "#n={} m={} seed={}", self.n, self.bitstrings.len(), seed)?;
        for note in notes {
            writeln!(w, "# {}", note.replace('\n', " "))?;
        }
        for &x in &self.bitstrings {
            writeln!(w, "{}", format_bitstring(x, self.n))?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a sample file; returns the sample and the header seed. Later
    /// `#` lines are comments.
    pub fn read_from<R: io::BufRead>(r: R) -> Result<(Self, u64), SimError> {
        let bad = |msg: String| SimError::BadSample(msg);
        let mut lines = r.lines();
        let header = lines.next().ok_or_else(|| bad("empty file".into()))??;
        let mut n = None;
        let mut m = None;
        let mut seed = None;
        for field in header
            .strip_prefix('#')
            .ok_or_else(|| bad("missing `#` header".into()))?
            .split_whitespace()
        {
            let (key, value) = field
                .split_once('=')
                .ok_or_else(|| bad(format!("header field `{field}`")))?;
            let value: u64 = value
                .parse()
                .map_err(|_| bad(format!("header value `{field}`")))?;
            match key {
                "n" => n = Some(value as usize),
                "m" => m = Some(value as usize),
                "seed" => seed = Some(value),
                _ => return Err(bad(format!("unknown header key `{key}`"))),
            }
        }
        let (Some(n), Some(m)) = (n, m) else {
            return Err(bad("header needs n and m".into()));
        };
        let mut bitstrings = Vec::with_capacity(m);
        for (i, line) in lines.enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if line.len() != n {
                return Err(bad(format!("line {}: expected {n} bits", i + 2)));
            }
            let x = parse_bitstring(line).ok_or_else(|| bad(format!("line {}: `{line}`", i + 2)))?;
            bitstrings.push(x);
        }
        if bitstrings.len() != m {
            return Err(bad(format!("header says m={m}, found {}", bitstrings.len())));
        }
        Ok((Self { n, bitstrings }, seed.unwrap_or(0)))
    }
}

/// Text form of a basis state, qubit 0 leftmost.
pub fn format_bitstring(x: u64, n: usize) -> String {
    (0..n).map(|q| if x >> q & 1 == 1 { '1' } else { '0' }).collect()
}

pub fn parse_bitstring(s: &str) -> Option<u64> {
    if s.is_empty() || s.len() > 63 {
        return None;
    }
    s.chars().enumerate().try_fold(0u64, |acc, (q, ch)| match ch {
        '0' => Some(acc),
        '1' => Some(acc | 1 << q),
        _ => None,
    })
}

/// Called with the cycle index and the state after that cycle.
pub type Observer<'a> = &'a mut dyn FnMut(usize, &StateVector);

/// Applies every cycle of `circuit` to `state`. The observer, if any, sees
/// the state after each cycle (cycle 0 included).
pub fn apply_circuit(
    state: &mut StateVector,
    circuit: &Circuit,
    observer: Option<Observer<'_>>,
) -> Result<(), SimError> {
    apply_circuit_with(state, circuit, SimOptions::default(), observer)
}

pub fn apply_circuit_with(
    state: &mut StateVector,
    circuit: &Circuit,
    opts: SimOptions,
    observer: Option<Observer<'_>>,
) -> Result<(), SimError> {
    if circuit.n() != state.n {
        return Err(SimError::DimensionMismatch {
            circuit: circuit.n(),
            state: state.n,
        });
    }
    apply_cycles(state, &circuit.cycles, opts, observer)
}

/// Runs `circuit` from `|0...0>`.
pub fn simulate(circuit: &Circuit) -> Result<StateVector, SimError> {
    let mut state = StateVector::new(circuit.n())?;
    apply_circuit(&mut state, circuit, None)?;
    Ok(state)
}

/// Applies a list of cycles. Observer indices count from 0 within `cycles`.
pub fn apply_cycles(
    state: &mut StateVector,
    cycles: &[Cycle],
    opts: SimOptions,
    mut observer: Option<Observer<'_>>,
) -> Result<(), SimError> {
    for cycle in cycles {
        for gate in cycle {
            for &q in gate.qubits() {
                state.check_qubit(q)?;
            }
            if gate.kind == GateKind::Cz && gate.qubits()[0] == gate.qubits()[1] {
                return Err(SimError::SameQubit(gate.target()));
            }
        }
    }
    let Some(bits) = opts.fusion_bits.filter(|&b| b > 0) else {
        for (t, cycle) in cycles.iter().enumerate() {
            for gate in cycle {
                apply_gate_unchecked(&mut state.amps, gate, opts.kernel, true);
            }
            if let Some(obs) = observer.as_mut() {
                obs(t, state);
            }
        }
        return Ok(());
    };
    let bits = bits.min(state.n);

    // Gates inside one cycle commute, so each cycle is split into a run of
    // low gates (all qubits below `bits`) and the remaining high gates. With
    // no observer, every other cycle is flipped so low runs of neighbouring
    // cycles meet and share one blockwise pass.
    let mut pending: Vec<&Gate> = Vec::new();
    for (t, cycle) in cycles.iter().enumerate() {
        let (low, high): (Vec<&Gate>, Vec<&Gate>) =
            cycle.iter().partition(|g| g.max_qubit() < bits);
        let low_first = observer.is_some() || t % 2 == 1;
        if low_first {
            pending.extend(low);
            if !high.is_empty() {
                flush_fused(&mut state.amps, &mut pending, bits, opts.kernel);
                for g in high {
                    apply_gate_unchecked(&mut state.amps, g, opts.kernel, true);
                }
            }
        } else {
            if !high.is_empty() {
                flush_fused(&mut state.amps, &mut pending, bits, opts.kernel);
                for g in high {
                    apply_gate_unchecked(&mut state.amps, g, opts.kernel, true);
                }
            }
            pending.extend(low);
        }
        if let Some(obs) = observer.as_mut() {
            flush_fused(&mut state.amps, &mut pending, bits, opts.kernel);
            obs(t, state);
        }
    }
    flush_fused(&mut state.amps, &mut pending, bits, opts.kernel);
    Ok(())
}

/// Applies the pending low gates block by block: each `2^bits` block gets
/// the whole run before the next block is touched.
fn flush_fused(amps: &mut [Complex64], pending: &mut Vec<&Gate>, bits: usize, mode: KernelMode) {
    if pending.is_empty() {
        return;
    }
    let block = 1usize << bits;
    let run = |chunk: &mut [Complex64]| {
        for gate in pending.iter() {
            apply_gate_unchecked(chunk, gate, mode, false);
        }
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        if amps.len() >= PAR_CHUNK && rayon::current_num_threads() > 1 {
            let chunk = block.max(PAR_CHUNK);
            amps.par_chunks_mut(chunk)
                .for_each(|c| c.chunks_mut(block).for_each(run));
            pending.clear();
            return;
        }
    }
    amps.chunks_mut(block).for_each(run);
    pending.clear();
}

fn apply_gate_unchecked(amps: &mut [Complex64], gate: &Gate, mode: KernelMode, parallel: bool) {
    match *gate.qubits() {
        [a, b] => cz_kernel(amps, a, b, mode, parallel),
        [q] => single_kernel(amps, gate.kind, q, mode, parallel),
        _ => unreachable!("gates have one or two qubits"),
    }
}

/// Calls `f(lo, hi)` on every pair of equal-length halves whose indices
/// differ only in bit `q`.
#[inline]
fn for_each_half<F>(amps: &mut [Complex64], q: usize, parallel: bool, f: F)
where
    F: Fn(&mut [Complex64], &mut [Complex64]) + Sync,
{
    let stride = 1usize << q;
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        if parallel && amps.len() >= PAR_CHUNK && rayon::current_num_threads() > 1 {
            if 2 * stride <= PAR_CHUNK {
                amps.par_chunks_mut(PAR_CHUNK)
                    .for_each(|chunk| halves_seq(chunk, stride, &f));
            } else {
                let piece = PAR_CHUNK / 2;
                amps.par_chunks_mut(2 * stride).for_each(|chunk| {
                    let (lo, hi) = chunk.split_at_mut(stride);
                    lo.par_chunks_mut(piece)
                        .zip(hi.par_chunks_mut(piece))
                        .for_each(|(l, h)| f(l, h));
                });
            }
            return;
        }
    }
    let _ = parallel;
    halves_seq(amps, stride, &f);
}

#[inline]
fn halves_seq<F>(amps: &mut [Complex64], stride: usize, f: &F)
where
    F: Fn(&mut [Complex64], &mut [Complex64]),
{
    for chunk in amps.chunks_exact_mut(2 * stride) {
        let (lo, hi) = chunk.split_at_mut(stride);
        f(lo, hi);
    }
}

#[inline]
fn generic_pairs(lo: &mut [Complex64], hi: &mut [Complex64], m: &[[Complex64; 2]; 2]) {
    for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
        let (x, y) = (*a, *b);
        *a = m[0][0] * x + m[0][1] * y;
        *b = m[1][0] * x + m[1][1] * y;
    }
}

fn single_kernel(amps: &mut [Complex64], kind: GateKind, q: usize, mode: KernelMode, parallel: bool) {
    if mode == KernelMode::Generic {
        let m = kind.matrix().expect("single-qubit kind");
        for_each_half(amps, q, parallel, |lo, hi| generic_pairs(lo, hi, &m));
        return;
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    match kind {
        GateKind::H => for_each_half(amps, q, parallel, |lo, hi| {
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = (x + y) * s;
                *b = (x - y) * s;
            }
        }),
        // ((1+i)x + (1-i)y)/2 = (u + i v)/2 with u = x+y, v = x-y
        GateKind::X2 => for_each_half(amps, q, parallel, |lo, hi| {
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let u = *a + *b;
                let v = *a - *b;
                *a = Complex64::new(u.re - v.im, u.im + v.re) * 0.5;
                *b = Complex64::new(u.re + v.im, u.im - v.re) * 0.5;
            }
        }),
        // ((1+i)/2) [[1, -1], [1, 1]]
        GateKind::Y2 => for_each_half(amps, q, parallel, |lo, hi| {
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let d = *a - *b;
                let u = *a + *b;
                *a = Complex64::new(d.re - d.im, d.re + d.im) * 0.5;
                *b = Complex64::new(u.re - u.im, u.re + u.im) * 0.5;
            }
        }),
        GateKind::T => for_each_half(amps, q, parallel, |_, hi| {
            for b in hi.iter_mut() {
                *b = Complex64::new((b.re - b.im) * s, (b.re + b.im) * s);
            }
        }),
        GateKind::Z => for_each_half(amps, q, parallel, |_, hi| {
            for b in hi.iter_mut() {
                *b = -*b;
            }
        }),
        GateKind::X => for_each_half(amps, q, parallel, |lo, hi| lo.swap_with_slice(hi)),
        GateKind::Y => for_each_half(amps, q, parallel, |lo, hi| {
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = Complex64::new(y.im, -y.re);
                *b = Complex64::new(-x.im, x.re);
            }
        }),
        GateKind::Cz => unreachable!("cz is a two-qubit gate"),
    }
}

/// Calls `f(base, block)` on aligned blocks covering `amps`; `base` is the
/// index of the block's first amplitude.
#[inline]
fn for_each_block<F>(amps: &mut [Complex64], parallel: bool, f: F)
where
    F: Fn(usize, &mut [Complex64]) + Sync,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        if parallel && amps.len() >= PAR_CHUNK && rayon::current_num_threads() > 1 {
            amps.par_chunks_mut(PAR_CHUNK)
                .enumerate()
                .for_each(|(k, chunk)| f(k * PAR_CHUNK, chunk));
            return;
        }
    }
    let _ = parallel;
    f(0, amps);
}

/// Negates the amplitudes of `block` whose global index has every bit of
/// `mask` set. `block` is aligned to its power-of-two length.
fn negate_masked(block: &mut [Complex64], base: usize, mask: usize) {
    let inside = block.len() - 1;
    let outer = mask & !inside;
    if base & outer != outer {
        return;
    }
    let inner = mask & inside;
    let negate = |_: &mut [Complex64], hi: &mut [Complex64]| hi.iter_mut().for_each(|a| *a = -*a);
    match inner.count_ones() {
        0 => block.iter_mut().for_each(|a| *a = -*a),
        1 => halves_seq(block, inner, &negate),
        _ => {
            let high = 1usize << (usize::BITS - 1 - inner.leading_zeros());
            let low = inner & !high;
            halves_seq(block, high, &|_: &mut [Complex64], hi: &mut [Complex64]| {
                halves_seq(hi, low, &negate)
            });
        }
    }
}

fn cz_kernel(amps: &mut [Complex64], a: usize, b: usize, mode: KernelMode, parallel: bool) {
    if mode == KernelMode::Generic {
        let one = Complex64::new(1.0, 0.0);
        let diag = [one, one, one, -one];
        for_each_block(amps, parallel, |base, block| {
            for (i, amp) in block.iter_mut().enumerate() {
                let x = base + i;
                *amp *= diag[2 * (x >> b & 1) + (x >> a & 1)];
            }
        });
        return;
    }
    let mask = (1usize << a) | (1usize << b);
    for_each_block(amps, parallel, |base, block| negate_masked(block, base, mask));
}
