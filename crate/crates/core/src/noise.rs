//! Pauli-error trajectories for the digital error model.
//!
//! Every gate is followed by a depolarizing channel, realized by sampling
//! explicit Pauli gates: after a single-qubit gate one of X, Y, Z with
//! probability `r1` in total, after a CZ one of the 15 non-identity two-qubit
//! Pauli products with probability `r2` in total. Initial bits are flipped
//! with probability `r_init` and measured bits with probability `r_mes`.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{self, Circuit, CircuitError, Cycle, ErrorLocation, Gate, GateKind, Pauli};
use crate::rng::{self, labels};
use crate::statevector::{
    apply_cycles, ProbVector, Sample, Sampler, SimError, SimOptions, StateVector, DEFAULT_CAP,
};

#[derive(Debug, Error)]
pub enum NoiseError {
    #[error("rate {name}={value} is not in [0, 1]")]
    BadRate { name: &'static str, value: f64 },
    #[error("noise model JSON: {0}")]
    Parse(String),
    #[error("{0} must be at least 1")]
    Empty(&'static str),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NoiseModel {
    pub r1: f64,
    pub r2: f64,
    pub r_init: f64,
    pub r_mes: f64,
}

impl NoiseModel {
    pub fn new(r1: f64, r2: f64, r_init: f64, r_mes: f64) -> Result<Self, NoiseError> {
        let model = Self {
            r1,
            r2,
            r_init,
            r_mes,
        };
        model.validate()?;
        Ok(model)
    }

    /// `r2 = r_init = r_mes = r` and `r1 = r / 10`.
    pub fn scaled(r: f64) -> Result<Self, NoiseError> {
        Self::new(r / 10.0, r, r, r)
    }

    pub fn noiseless() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<(), NoiseError> {
        for (name, value) in [
            ("r1", self.r1),
            ("r2", self.r2),
            ("r_init", self.r_init),
            ("r_mes", self.r_mes),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(NoiseError::BadRate { name, value });
            }
        }
        Ok(())
    }

    pub fn is_noiseless(&self) -> bool {
        *self == Self::default()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("noise JSON encoding cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self, NoiseError> {
        let model: Self = serde_json::from_str(text).map_err(|e| NoiseError::Parse(e.to_string()))?;
        model.validate()?;
        Ok(model)
    }
}

/// A Pauli gate inserted right after cycle `after_cycle`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InsertedPauli {
    pub after_cycle: usize,
    pub qubit: usize,
    pub pauli: Pauli,
}

/// One noise realization of a circuit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trajectory {
    pub index: u64,
    /// Ordered by cycle, then by gate order within the cycle.
    pub errors: Vec<InsertedPauli>,
    pub init_flips: u64,
    pub mes_flips: u64,
}

impl Trajectory {
    /// True when the pre-measurement state equals the ideal one.
    pub fn is_ideal_state(&self) -> bool {
        self.errors.is_empty() && self.init_flips == 0
    }

    /// The circuit actually run: an X cycle for initial flips, then the
    /// base cycles with one extra cycle after each cycle that has errors.
    pub fn to_circuit(&self, base: &Circuit) -> Circuit {
        let mut out = base.clone();
        out.cycles = self.derived_cycles(base, 0);
        if self.init_flips != 0 {
            let flips = (0..base.n())
                .filter(|q| self.init_flips >> q & 1 == 1)
                .map(|q| Gate::single(GateKind::X, q))
                .collect();
            out.cycles.insert(0, flips);
        }
        out
    }

    /// Base cycles `from..` with the error cycles interleaved.
    fn derived_cycles(&self, base: &Circuit, from: usize) -> Vec<Cycle> {
        let mut cycles = Vec::with_capacity(base.cycles.len() - from + self.errors.len());
        let mut errs = self.errors.iter().filter(|e| e.after_cycle >= from).peekable();
        for t in from..base.cycles.len() {
            cycles.push(base.cycles[t].clone());
            let mut extra = Cycle::new();
            while let Some(e) = errs.next_if(|e| e.after_cycle == t) {
                extra.push(Gate::single(e.pauli.kind(), e.qubit));
            }
            if !extra.is_empty() {
                // two errors on the same qubit after one cycle cannot happen
                // for disjoint gates, but keep them sequential regardless
                split_overlaps(extra, &mut cycles);
            }
        }
        cycles
    }
}

fn split_overlaps(gates: Cycle, cycles: &mut Vec<Cycle>) {
    let mut current = Cycle::new();
    for g in gates {
        if current.iter().any(|c| c.target() == g.target()) {
            cycles.push(std::mem::take(&mut current));
        }
        current.push(g);
    }
    cycles.push(current);
}

fn draw_mask(n: usize, rate: f64, rng: &mut impl Rng) -> u64 {
    if rate == 0.0 {
        return 0;
    }
    (0..n).fold(0, |mask, q| if rng.random::<f64>() < rate { mask | 1 << q } else { mask })
}

/// Samples the trajectory keyed by `(seed, "traj", index)`.
pub fn sample_trajectory(circuit: &Circuit, noise: &NoiseModel, seed: u64, index: u64) -> Trajectory {
    let mut rng = rng::stream(seed, labels::TRAJECTORY, index);
    let n = circuit.n();
    let init_flips = draw_mask(n, noise.r_init, &mut rng);
    let mut errors = Vec::new();
    for (t, cycle) in circuit.cycles.iter().enumerate() {
        for gate in cycle {
            match *gate.qubits() {
                [a, b] => {
                    if noise.r2 > 0.0 && rng.random::<f64>() < noise.r2 {
                        // 1..=15 encodes (pa, pb) in base 4 with I=0, X=1, Y=2, Z=3
                        let code = rng.random_range(1..16usize);
                        for (q, p) in [(a, code % 4), (b, code / 4)] {
                            if p != 0 {
                                errors.push(InsertedPauli {
                                    after_cycle: t,
                                    qubit: q,
                                    pauli: Pauli::ALL[p - 1],
                                });
                            }
                        }
                    }
                }
                [q] => {
                    if noise.r1 > 0.0 && rng.random::<f64>() < noise.r1 {
                        errors.push(InsertedPauli {
                            after_cycle: t,
                            qubit: q,
                            pauli: Pauli::ALL[rng.random_range(0..3usize)],
                        });
                    }
                }
                _ => unreachable!("gates have one or two qubits"),
            }
        }
    }
    let mes_flips = draw_mask(n, noise.r_mes, &mut rng);
    Trajectory {
        index,
        errors,
        init_flips,
        mes_flips,
    }
}

/// Shared state for simulating many trajectories of one circuit: the ideal
/// output distribution and ideal states at checkpoint cycles, so that a
/// trajectory is simulated only from its first error onwards.
pub struct NoisySimulator<'a> {
    circuit: &'a Circuit,
    noise: NoiseModel,
    opts: SimOptions,
    ideal: ProbVector,
    sampler: Sampler,
    /// `(t, state after cycle t)`, increasing in `t`.
    checkpoints: Vec<(usize, StateVector)>,
}

impl<'a> NoisySimulator<'a> {
    pub fn new(circuit: &'a Circuit, noise: NoiseModel) -> Result<Self, NoiseError> {
        Self::with_checkpoints(circuit, noise, default_checkpoint_count(circuit.n()))
    }

    /// Keeps up to `count` evenly spaced ideal prefix states in memory.
    pub fn with_checkpoints(circuit: &'a Circuit, noise: NoiseModel, count: usize) -> Result<Self, NoiseError> {
        noise.validate()?;
        let opts = SimOptions::default();
        let cycles = circuit.cycles.len();
        let every = if count == 0 { usize::MAX } else { cycles.div_ceil(count).max(1) };
        let mut checkpoints = Vec::new();
        let mut state = StateVector::new(circuit.n())?;
        let mut keep = |t: usize, s: &StateVector| {
            if count > 0 && t % every == every - 1 && t + 1 < cycles {
                checkpoints.push((t, s.clone()));
            }
        };
        apply_cycles(&mut state, &circuit.cycles, opts, Some(&mut keep))?;
        let ideal = state.probabilities();
        let sampler = Sampler::new(&ideal)?;
        Ok(Self {
            circuit,
            noise,
            opts,
            ideal,
            sampler,
            checkpoints,
        })
    }

    pub fn ideal(&self) -> &ProbVector {
        &self.ideal
    }

    pub fn noise(&self) -> &NoiseModel {
        &self.noise
    }

    pub fn trajectory(&self, seed: u64, index: u64) -> Trajectory {
        sample_trajectory(self.circuit, &self.noise, seed, index)
    }

    /// Pre-measurement probabilities of a trajectory (measurement flips not
    /// applied). `None` when the trajectory leaves the ideal state untouched.
    pub fn trajectory_probabilities(&self, traj: &Trajectory) -> Result<Option<ProbVector>, NoiseError> {
        if traj.is_ideal_state() {
            return Ok(None);
        }
        let n = self.circuit.n();
        let (mut state, from) = if traj.init_flips != 0 {
            (StateVector::basis(n, traj.init_flips, DEFAULT_CAP)?, 0)
        } else {
            let first = traj.errors[0].after_cycle;
            match self.checkpoints.iter().rev().find(|(t, _)| *t < first) {
                Some((t, s)) => (s.clone(), t + 1),
                None => (StateVector::new(n)?, 0),
            }
        };
        let cycles = traj.derived_cycles(self.circuit, from);
        apply_cycles(&mut state, &cycles, self.opts, None)?;
        Ok(Some(state.probabilities()))
    }

    /// Draws `k` bitstrings from trajectory `index`. Each bitstring gets its
    /// own measurement-flip mask, drawn from `(seed, "traj-sample", index)`.
    pub fn sample_trajectory_bits(&self, seed: u64, index: u64, k: usize) -> Result<Vec<u64>, NoiseError> {
        let traj = self.trajectory(seed, index);
        let mut rng = rng::stream(seed, labels::TRAJECTORY_SAMPLE, index);
        let n = self.circuit.n();
        let probs = self.trajectory_probabilities(&traj)?;
        let own_sampler;
        let sampler = match &probs {
            Some(p) => {
                own_sampler = Sampler::new(p)?;
                &own_sampler
            }
            None => &self.sampler,
        };
        let mut out = Vec::with_capacity(k);
        for j in 0..k {
            let x = sampler.draw(&mut rng);
            // the first draw uses the trajectory's own mask
            let mask = if j == 0 { traj.mes_flips } else { draw_mask(n, self.noise.r_mes, &mut rng) };
            out.push(x ^ mask);
        }
        Ok(out)
    }
}

fn default_checkpoint_count(n: usize) -> usize {
    // about 256 MiB of saved states
    let bytes = 16usize << n;
    ((256usize << 20) / bytes).clamp(1, 16)
}

/// Options for [`noisy_sample_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NoisySampleOptions {
    /// Bitstrings drawn from each trajectory. 1 gives i.i.d. samples from the
    /// noise-averaged distribution; larger values are faster but correlate
    /// the samples of one trajectory through its gate errors.
    pub per_trajectory: usize,
}

impl Default for NoisySampleOptions {
    fn default() -> Self {
        Self { per_trajectory: 1 }
    }
}

/// `m` bitstrings, one fresh trajectory per bitstring.
pub fn noisy_sample(circuit: &Circuit, noise: &NoiseModel, m: usize, seed: u64) -> Result<Sample, NoiseError> {
    noisy_sample_with(circuit, noise, m, seed, NoisySampleOptions::default())
}

pub fn noisy_sample_with(
    circuit: &Circuit,
    noise: &NoiseModel,
    m: usize,
    seed: u64,
    opts: NoisySampleOptions,
) -> Result<Sample, NoiseError> {
    let sim = NoisySimulator::new(circuit, *noise)?;
    sample_from(&sim, m, seed, opts)
}

/// Like [`noisy_sample_with`] for a prepared simulator.
pub fn sample_from(sim: &NoisySimulator<'_>, m: usize, seed: u64, opts: NoisySampleOptions) -> Result<Sample, NoiseError> {
    if m == 0 {
        return Err(NoiseError::Empty("sample size"));
    }
    let k = opts.per_trajectory.max(1);
    let n_traj = m.div_ceil(k);
    let take = |i: usize| k.min(m - i * k);
    let run = |i: usize| sim.sample_trajectory_bits(seed, i as u64, take(i));
    #[cfg(feature = "parallel")]
    let parts: Vec<Result<Vec<u64>, NoiseError>> = {
        use rayon::prelude::*;
        (0..n_traj).into_par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let parts: Vec<Result<Vec<u64>, NoiseError>> = (0..n_traj).map(run).collect();
    let mut bitstrings = Vec::with_capacity(m);
    for part in parts {
        bitstrings.extend(part?);
    }
    Ok(Sample {
        n: sim.circuit.n(),
        bitstrings,
    })
}

/// Mean over `n_traj` trajectories of each trajectory's output distribution,
/// measurement flips included.
pub fn average_noisy_distribution(
    circuit: &Circuit,
    noise: &NoiseModel,
    n_traj: usize,
    seed: u64,
) -> Result<ProbVector, NoiseError> {
    if n_traj == 0 {
        return Err(NoiseError::Empty("trajectory count"));
    }
    let sim = NoisySimulator::new(circuit, *noise)?;
    let len = sim.ideal.len();
    // Fixed batching keeps the summation order independent of threads.
    const BATCHES: usize = 32;
    let batch = n_traj.div_ceil(BATCHES);
    let run_batch = |b: usize| -> Result<Vec<f64>, NoiseError> {
        let mut acc = vec![0.0; len];
        for i in (b * batch)..((b + 1) * batch).min(n_traj) {
            let traj = sim.trajectory(seed, i as u64);
            let probs = sim.trajectory_probabilities(&traj)?;
            let p = probs.as_ref().unwrap_or(&sim.ideal).probs();
            let mask = traj.mes_flips as usize;
            for (x, a) in acc.iter_mut().enumerate() {
                *a += p[x ^ mask];
            }
        }
        Ok(acc)
    };
    let batches = n_traj.div_ceil(batch);
    #[cfg(feature = "parallel")]
    let parts: Vec<Result<Vec<f64>, NoiseError>> = {
        use rayon::prelude::*;
        (0..batches).into_par_iter().map(run_batch).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let parts: Vec<Result<Vec<f64>, NoiseError>> = (0..batches).map(run_batch).collect();
    let mut total = vec![0.0; len];
    for part in parts {
        for (t, v) in total.iter_mut().zip(part?) {
            *t += v;
        }
    }
    let scale = 1.0 / n_traj as f64;
    total.iter_mut().for_each(|v| *v *= scale);
    Ok(ProbVector::new(total)?)
}

/// Exact output distribution with one Pauli error inserted.
pub fn single_error_distribution(circuit: &Circuit, loc: &ErrorLocation) -> Result<ProbVector, NoiseError> {
    let with_error = circuit::insert_pauli_error(circuit, loc)?;
    Ok(crate::statevector::simulate(&with_error)?.probabilities())
}

/// Visits every single-error location with `after_cycle` in `cycles`, every
/// qubit and every Pauli in `paulis`, calling `visit` with the exact output
/// distribution. Ideal prefix states are shared between locations.
pub fn single_error_sweep(
    circuit: &Circuit,
    cycles: std::ops::Range<usize>,
    paulis: &[Pauli],
    mut visit: impl FnMut(&ErrorLocation, &ProbVector),
) -> Result<(), NoiseError> {
    let opts = SimOptions::default();
    let n = circuit.n();
    let end = cycles.end.min(circuit.cycles.len());
    let mut prefix = StateVector::new(n)?;
    for t in 0..end {
        apply_cycles(&mut prefix, &circuit.cycles[t..=t], opts, None)?;
        if t < cycles.start {
            continue;
        }
        for qubit in 0..n {
            for &pauli in paulis {
                let loc = ErrorLocation {
                    cycle: t,
                    qubit,
                    pauli,
                };
                let mut state = prefix.clone();
                state.apply_single_qubit(pauli.kind(), qubit)?;
                apply_cycles(&mut state, &circuit.cycles[t + 1..], opts, None)?;
                visit(&loc, &state.probabilities());
            }
        }
    }
    Ok(())
}
