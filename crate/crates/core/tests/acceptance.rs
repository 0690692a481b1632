//! Acceptance criteria, one line per criterion.
//!
//! Runs as a plain binary (`harness = false`) so every verdict is printed
//! even when nothing fails. Pass criterion numbers as arguments to run a
//! subset, e.g. `cargo test --test acceptance -- 5 8`.

use std::collections::BTreeMap;
use std::panic::{self, AssertUnwindSafe};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use xeb_core::analysis::{
    self, entropy, estimate_alpha, fit_alpha, ks_test, log_likelihood_gap, normalized_ipr, pearson,
    predicted_fidelity, pt_cdf, pt_entropy,
};
use xeb_core::circuit::{
    self, count_gates, generate_circuit, generate_stat_ensemble, insert_pauli_error, Circuit,
    ErrorLocation, GateKind, LatticeSpec, Pauli, Variant,
};
use xeb_core::ising::{self, bayesian_alpha, coupling_statistics, map_to_ising, phase_histogram};
use xeb_core::noise::{
    average_noisy_distribution, sample_from, single_error_sweep, NoiseModel, NoisySampleOptions,
    NoisySimulator,
};
use xeb_core::rng::{self, labels};
use xeb_core::statevector::{
    apply_circuit_with, sample, sample_uniform, simulate, KernelMode, ProbVector, Sample, SimOptions,
    StateVector, DEFAULT_CAP,
};

type Outcome = Result<String, String>;

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn lattice(rows: usize, cols: usize) -> LatticeSpec {
    LatticeSpec::planar(rows, cols).expect("valid lattice")
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn factorial(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

/// Ideal output probabilities of the 4x4 depth-40 ensemble, seeds 0..10.
fn ensemble_4x4() -> &'static [ProbVector] {
    static CELL: OnceLock<Vec<ProbVector>> = OnceLock::new();
    CELL.get_or_init(|| {
        (0..10)
            .map(|seed| {
                let c = generate_circuit(&lattice(4, 4), 40, seed, Variant::Sec4).unwrap();
                simulate(&c).unwrap().probabilities()
            })
            .collect()
    })
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let entropies: Vec<f64> = ensemble_4x4().iter().map(|p| entropy(p.probs())).collect();
    let elapsed = start.elapsed();
    let (mean, _) = mean_std(&entropies);
    let target = pt_entropy(16);
    let tol = 4.0 * 0.75 * 2f64.powi(-8);
    let ok = (mean - target).abs() <= tol && elapsed < Duration::from_secs(60);
    verdict(
        ok,
        format!(
            "mean entropy {mean:.5} vs {target:.5} (|diff| {:.5} <= {tol:.5}), {:.2}s < 60s",
            (mean - target).abs(),
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_2() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for k in 2..=6u32 {
        let values: Vec<f64> = ensemble_4x4()
            .iter()
            .map(|p| normalized_ipr(p.probs(), k).unwrap())
            .collect();
        let (mean, sigma) = mean_std(&values);
        let target = factorial(k);
        let pass = (mean - target).abs() <= 5.0 * sigma;
        ok &= pass;
        parts.push(format!("k={k} {mean:.3}/{target} ({:.1} sigma)", (mean - target).abs() / sigma));
    }
    verdict(ok, parts.join(", "))
}

const C3_RATES: [f64; 3] = [0.002, 0.005, 0.01];
const C3_SEEDS: u64 = 10;
const C3_SAMPLES: usize = 100_000;
/// Bitstrings per trajectory. One per trajectory would need 10^5 state
/// evolutions per instance, far beyond the time budget.
const C3_PER_TRAJECTORY: usize = 500;

struct NoisyRun {
    alpha: f64,
    stderr: f64,
    predicted: f64,
    zs: Vec<f64>,
}

fn noisy_run(seed: u64, r: f64) -> NoisyRun {
    let c = generate_circuit(&lattice(5, 4), 40, seed, Variant::Sec4).unwrap();
    let noise = NoiseModel::scaled(r).unwrap();
    let sim = NoisySimulator::new(&c, noise).unwrap();
    let opts = NoisySampleOptions {
        per_trajectory: C3_PER_TRAJECTORY,
    };
    let s = sample_from(&sim, C3_SAMPLES, seed, opts).unwrap();
    let p = sim.ideal().probs();
    let report = estimate_alpha(&s.bitstrings, p).unwrap();
    let big_n = p.len() as f64;
    let zs = s
        .bitstrings
        .iter()
        .map(|&x| (big_n * p[x as usize].max(analysis::CLAMP_FLOOR)).ln())
        .collect();
    NoisyRun {
        alpha: report.alpha,
        stderr: report.stderr,
        predicted: predicted_fidelity(&count_gates(&c), &noise, c.n()),
        zs,
    }
}

/// The seed-0, r = 0.005 run, shared with criterion 4.
static C3_INSTANCE: OnceLock<NoisyRun> = OnceLock::new();

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let mut ok = true;
    let mut parts = Vec::new();
    for r in C3_RATES {
        let mut measured = Vec::new();
        let mut predicted = Vec::new();
        for seed in 0..C3_SEEDS {
            let run = noisy_run(seed, r);
            measured.push(run.alpha);
            predicted.push(run.predicted);
            if seed == 0 && r == 0.005 {
                let _ = C3_INSTANCE.set(run);
            }
        }
        let (m, m_sd) = mean_std(&measured);
        let (p, _) = mean_std(&predicted);
        let pass = (m - p).abs() <= 0.05;
        ok &= pass;
        parts.push(format!(
            "r={r}: measured {m:.3} (seed sd {m_sd:.3}) vs predicted {p:.3} [{}]",
            if pass { "ok" } else { "off" }
        ));
        let quoted = match r {
            0.005 => Some(0.43),
            0.01 => Some(0.18),
            _ => None,
        };
        if let Some(q) = quoted {
            let pass = (m - q).abs() <= 0.05;
            ok &= pass;
            parts.push(format!(
                "r={r}: measured {m:.3} vs quoted {q} [{}]",
                if pass { "ok" } else { "off" }
            ));
        }
    }
    let elapsed = start.elapsed();
    ok &= elapsed < Duration::from_secs(30 * 60);
    parts.push(format!("{:.0}s < 1800s", elapsed.as_secs_f64()));
    verdict(ok, parts.join("; "))
}

fn criterion_4() -> Outcome {
    let run = C3_INSTANCE.get_or_init(|| noisy_run(0, 0.005));
    let alpha = run.alpha;
    let ks = ks_test(&run.zs, |z| pt_cdf(z, alpha)).unwrap();
    let fitted = fit_alpha(&run.zs).unwrap();
    let ok = ks.p_value > 0.01 && (fitted - alpha).abs() <= 0.05;
    verdict(
        ok,
        format!(
            "alpha {alpha:.4} (stderr {:.4}); KS D={:.5} p={:.3} > 0.01; fit {fitted:.4} within 0.05",
            run.stderr, ks.statistic, ks.p_value
        ),
    )
}

/// Up to one global phase, the largest deviation between two amplitude
/// vectors. The phase is fixed at the largest simulator amplitude.
fn phase_aligned_error(reference: &[Complex64], other: &[Complex64]) -> f64 {
    let pivot = (0..reference.len())
        .max_by(|&a, &b| reference[a].norm().total_cmp(&reference[b].norm()))
        .unwrap();
    let ratio = other[pivot] / reference[pivot];
    let phase = ratio / ratio.norm();
    reference
        .iter()
        .zip(other)
        .map(|(a, b)| (a * phase - b).norm())
        .fold(0.0, f64::max)
}

fn oracle_circuits(count: u64) -> Vec<Circuit> {
    let shapes = [(1usize, 2usize), (2, 1), (1, 3), (2, 2), (1, 4), (4, 1)];
    (0..count)
        .map(|i| {
            let mut rng = rng::stream(i, "acceptance-oracle", 0);
            use rand::Rng;
            let (rows, cols) = shapes[rng.random_range(0..shapes.len())];
            let seed = 1000 + i;
            match i % 3 {
                0 | 1 => {
                    let depth = rng.random_range(0..=6);
                    generate_circuit(&lattice(rows, cols), depth, seed, Variant::Sec4).unwrap()
                }
                _ => {
                    // layered ensemble: depth 2 * layers
                    let layers = rng.random_range(1..=3);
                    generate_stat_ensemble(&lattice(rows, cols), layers, 0.5, seed).unwrap()
                }
            }
        })
        .collect()
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let circuits = oracle_circuits(50);
    for c in &circuits {
        assert!(c.n() <= 4 && c.depth() <= 6);
        let sim = simulate(c).unwrap();
        let model = map_to_ising(c, 0).unwrap();
        let path: Vec<Complex64> = (0..1u64 << c.n())
            .map(|x| model.with_output(x).unwrap().path_sum_amplitude().unwrap())
            .collect();
        worst = worst.max(phase_aligned_error(sim.amplitudes(), &path));
    }
    let elapsed = start.elapsed();
    let ok = worst <= 1e-9 && elapsed < Duration::from_secs(60);
    verdict(
        ok,
        format!(
            "{} circuits, max modulus error {worst:.2e} <= 1e-9, {:.2}s < 60s",
            circuits.len(),
            elapsed.as_secs_f64()
        ),
    )
}

/// Mid-circuit error locations: after cycles `d/4 ..= 3d/4`.
const C6_MID: std::ops::RangeInclusive<usize> = 10..=30;
/// "Close to uniform": normalized IPR2 of the averaged distribution (1 for
/// uniform, 2 for Porter-Thomas) and total-variation distance to uniform
/// (1/e for Porter-Thomas).
const C6_MAX_IPR2: f64 = 1.1;
const C6_MAX_TV: f64 = 0.1;

fn criterion_6() -> Outcome {
    let c = generate_circuit(&lattice(5, 4), 40, 0, Variant::Sec4).unwrap();
    let ideal = simulate(&c).unwrap().probabilities();
    let last = c.cycles.len() - 1;
    let mut edge_worst: f64 = 0.0;
    for qubit in [0, 7, 19] {
        for loc in [
            ErrorLocation { cycle: last, qubit, pauli: Pauli::Z },
            ErrorLocation { cycle: 0, qubit, pauli: Pauli::X },
        ] {
            let with_error = insert_pauli_error(&c, &loc).unwrap();
            let p = simulate(&with_error).unwrap().probabilities();
            let r = pearson(ideal.probs(), p.probs()).unwrap();
            edge_worst = edge_worst.max((r - 1.0).abs());
        }
    }
    let mut avg = vec![0.0; ideal.len()];
    let mut count = 0usize;
    single_error_sweep(&c, *C6_MID.start()..*C6_MID.end() + 1, &Pauli::ALL, |_, p| {
        for (a, v) in avg.iter_mut().zip(p.probs()) {
            *a += v;
        }
        count += 1;
    })
    .unwrap();
    avg.iter_mut().for_each(|a| *a /= count as f64);
    let r_mid = pearson(ideal.probs(), &avg).unwrap();
    let ipr2 = normalized_ipr(&avg, 2).unwrap();
    let u = 1.0 / avg.len() as f64;
    let tv = 0.5 * avg.iter().map(|p| (p - u).abs()).sum::<f64>();
    let ok = edge_worst <= 1e-9 && r_mid <= 0.1 && ipr2 <= C6_MAX_IPR2 && tv <= C6_MAX_TV;
    verdict(
        ok,
        format!(
            "edge errors |r-1| {edge_worst:.1e} <= 1e-9; {count} mid-circuit locations: r {r_mid:.4} <= 0.1, \
             IPR2 {ipr2:.4} <= {C6_MAX_IPR2}, TV to uniform {tv:.4} <= {C6_MAX_TV}"
        ),
    )
}

fn criterion_7() -> Outcome {
    let m = 10_000;
    let c = generate_circuit(&lattice(4, 4), 40, 7, Variant::Sec4).unwrap();
    let p = simulate(&c).unwrap().probabilities();
    let ideal = sample(&p, m, &mut rng::stream(7, labels::SAMPLE, 0)).unwrap();
    let uniform = sample_uniform(16, m, &mut rng::stream(7, labels::UNIFORM, 0)).unwrap();
    let gap = log_likelihood_gap(p.probs(), &ideal.bitstrings, &uniform.bitstrings).unwrap();
    let tol = 5.0 * (m as f64).sqrt();
    verdict(
        (gap - m as f64).abs() <= tol,
        format!("gap {gap:.1} vs m={m} (tolerance {tol})"),
    )
}

/// Enough layers that intervals starting by layer `layers - TAIL_LAYERS`
/// include the k = 30 gate of almost every qubit (it arrives near layer 45
/// with spread about 5).
const C8_LAYERS: usize = 90;

fn criterion_8() -> Outcome {
    let stats = coupling_statistics(&lattice(3, 3), C8_LAYERS, 0.25, 10_000, 8).unwrap();
    let mut ok = true;
    let mut parts = Vec::new();
    let total = stats.intervals as f64;
    for r in 0..=2 {
        let theory = stats.theory(r);
        let sigma = (theory * (1.0 - theory) / total).sqrt();
        let emp = stats.empirical(r);
        let pass = (emp - theory).abs() <= 3.0 * sigma;
        ok &= pass;
        parts.push(format!("P({r}) {emp:.5} vs {theory:.5} ({:.2} sigma)", (emp - theory).abs() / sigma));
    }
    let mut worst: f64 = 0.0;
    for k in 10..=30 {
        let g = stats.gap.get(&k).copied().unwrap_or_default();
        let rel = if g.count > 1 {
            (g.var_diff - g.predicted_var).abs() / g.predicted_var
        } else {
            f64::INFINITY
        };
        worst = worst.max(rel);
    }
    ok &= worst <= 0.1;
    parts.push(format!("Var(k-l) vs (k+l)/3 worst relative error {worst:.4} <= 0.1 over k=10..30"));
    parts.push(format!("{} intervals", stats.intervals));
    verdict(ok, parts.join(", "))
}

const C9_Q: u64 = 1000;
const C9_REPS: u64 = 20;

fn criterion_9() -> Outcome {
    let c = generate_circuit(&lattice(3, 3), 24, 1, Variant::Sec4).unwrap();
    let model = map_to_ising(&c, 0).unwrap();
    let alpha = |q: u64, seed: u64| {
        bayesian_alpha(&phase_histogram(&model, q, seed).unwrap(), model.n, model.g_sparse).unwrap()
    };
    let ratio_of_block = |base: u64| {
        let (mut a1, mut a4) = (0.0, 0.0);
        for rep in 0..C9_REPS {
            a1 += alpha(C9_Q, base + 2 * rep);
            a4 += alpha(4 * C9_Q, base + 2 * rep + 1);
        }
        a4 / a1
    };
    let ratio = ratio_of_block(0);
    // Context only: the spread of the same statistic over further blocks.
    let others: Vec<f64> = (1..=10).map(|b| ratio_of_block(b * 1000)).collect();
    let (m, sd) = mean_std(&others);
    verdict(
        (ratio - 4.0).abs() <= 0.5,
        format!(
            "n_free={} Q={C9_Q}: alpha(4Q)/alpha(Q) = {ratio:.3} over {C9_REPS} reps (target 4 +- 0.5); \
             10 further blocks: mean {m:.2}, sd {sd:.2}",
            model.n_free
        ),
    )
}

fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn adjoint(m: [[Complex64; 2]; 2]) -> [[Complex64; 2]; 2] {
    [[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]]
}

fn run_with(c: &Circuit, opts: SimOptions) -> StateVector {
    let mut s = StateVector::new(c.n()).unwrap();
    apply_circuit_with(&mut s, c, opts, None).unwrap();
    s
}

#[derive(PartialEq, Debug)]
struct Fingerprint {
    probs: Vec<u64>,
    entropy: u64,
    noisy: Vec<u64>,
    averaged: Vec<u64>,
    sectors: [u64; 8],
    lateral: Vec<u64>,
}

fn fingerprint(big: &Circuit, small: &Circuit) -> Fingerprint {
    let p = simulate(big).unwrap().probabilities();
    let noise = NoiseModel::scaled(0.01).unwrap();
    let sim = NoisySimulator::new(small, noise).unwrap();
    let noisy = sample_from(&sim, 400, 3, NoisySampleOptions { per_trajectory: 4 }).unwrap();
    let averaged = average_noisy_distribution(small, &noise, 64, 3).unwrap();
    let model = map_to_ising(small, 0).unwrap();
    let hist = phase_histogram(&model, 100_000, 3).unwrap();
    let stats = coupling_statistics(&lattice(3, 3), 30, 0.25, 50, 3).unwrap();
    Fingerprint {
        probs: p.probs().iter().map(|v| v.to_bits()).collect(),
        entropy: entropy(p.probs()).to_bits(),
        noisy: noisy.bitstrings,
        averaged: averaged.probs().iter().map(|v| v.to_bits()).collect(),
        sectors: hist.counts,
        lateral: stats.lateral,
    }
}

fn criterion_10() -> Outcome {
    let mut failures = Vec::new();
    let mut check = |name: &str, ok: bool, detail: String| {
        if !ok {
            failures.push(format!("{name}: {detail}"));
        }
    };
    let mut suite = Vec::new();
    for seed in 0..6 {
        suite.push(generate_circuit(&lattice(3, 4), 20, seed, Variant::Sec4).unwrap());
        suite.push(generate_stat_ensemble(&lattice(3, 3), 8, 0.25, seed).unwrap());
    }
    suite.push(generate_circuit(&LatticeSpec::new(4, 4, true).unwrap(), 12, 0, Variant::Dense).unwrap());

    // norm preservation after every cycle
    let mut worst_norm: f64 = 0.0;
    for c in &suite {
        let mut s = StateVector::new(c.n()).unwrap();
        let mut obs = |_: usize, st: &StateVector| worst_norm = worst_norm.max((st.norm_sqr() - 1.0).abs());
        apply_circuit_with(&mut s, c, SimOptions::default(), Some(&mut obs)).unwrap();
    }
    check("norm", worst_norm <= 1e-12, format!("{worst_norm:.1e}"));

    // unitarity: circuit then its inverse returns to |0...0>
    let mut worst_round: f64 = 0.0;
    for c in &suite {
        let mut s = simulate(c).unwrap();
        for gate in c.cycles.iter().rev().flat_map(|cy| cy.iter().rev()) {
            match gate.kind.matrix() {
                Some(m) => s.apply_matrix(adjoint(m), gate.target()).unwrap(),
                None => s.apply_gate(gate).unwrap(),
            }
        }
        let zero = StateVector::new(c.n()).unwrap();
        worst_round = worst_round.max(max_diff(s.amplitudes(), zero.amplitudes()));
    }
    check("round trip", worst_round <= 1e-12, format!("{worst_round:.1e}"));

    // fused and unfused, generic and specialized kernels
    let big = generate_circuit(&lattice(5, 4), 40, 0, Variant::Sec4).unwrap();
    let reference = run_with(&big, SimOptions::unfused());
    let mut worst_fused: f64 = 0.0;
    for (kernel, bits) in [
        (KernelMode::Specialized, Some(5)),
        (KernelMode::Specialized, Some(14)),
        (KernelMode::Generic, None),
        (KernelMode::Generic, Some(5)),
    ] {
        let s = run_with(&big, SimOptions { kernel, fusion_bits: bits });
        worst_fused = worst_fused.max(max_diff(reference.amplitudes(), s.amplitudes()));
    }
    check("fused vs unfused", worst_fused <= 1e-12, format!("{worst_fused:.1e}"));

    // parallel determinism across thread counts
    let small = generate_circuit(&lattice(3, 3), 16, 2, Variant::Sec4).unwrap();
    let max_threads = std::thread::available_parallelism().map_or(1, |n| n.get());
    let prints: Vec<(usize, Fingerprint)> = [1, 4, max_threads]
        .into_iter()
        .map(|t| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(t).build().unwrap();
            (t, pool.install(|| fingerprint(&big, &small)))
        })
        .collect();
    for (t, p) in &prints[1..] {
        let a = &prints[0].1;
        let fields = [
            ("probs", p.probs == a.probs),
            ("entropy", p.entropy == a.entropy),
            ("noisy", p.noisy == a.noisy),
            ("averaged", p.averaged == a.averaged),
            ("sectors", p.sectors == a.sectors),
            ("lateral", p.lateral == a.lateral),
        ];
        for (field, same) in fields {
            check("thread determinism", same, format!("{field} with {t} threads differs from 1 thread"));
        }
    }

    // serialization round trips
    for c in &suite {
        let back = circuit::parse(&circuit::serialize(c)).unwrap();
        check("circuit text", back == *c, format!("seed {}", c.seed));
        let meta = serde_json::json!({"note": "meta"});
        let back = circuit::parse(&circuit::serialize_with_meta(c, meta)).unwrap();
        check("circuit text with meta", back == *c, format!("seed {}", c.seed));
    }
    let noise = NoiseModel::new(0.001, 0.01, 0.02, 0.03).unwrap();
    check("noise json", NoiseModel::from_json(&noise.to_json()).unwrap() == noise, String::new());
    let state = simulate(&small).unwrap();
    let mut buf = Vec::new();
    state.write_dump(&mut buf).unwrap();
    check(
        "state dump",
        StateVector::read_dump(buf.as_slice(), DEFAULT_CAP).unwrap() == state,
        String::new(),
    );
    let s = sample(&state.probabilities(), 50, &mut rng::stream(1, labels::SAMPLE, 0)).unwrap();
    let mut buf = Vec::new();
    s.write_to(&mut buf, 1).unwrap();
    check("sample file", Sample::read_from(buf.as_slice()).unwrap() == (s, 1), String::new());
    let export = map_to_ising(&small, 5).unwrap().export();
    let json = serde_json::to_string(&export).unwrap();
    check(
        "ising export",
        serde_json::from_str::<ising::IsingExport>(&json).unwrap() == export,
        String::new(),
    );

    let summary = format!(
        "norm {worst_norm:.1e}, round trip {worst_round:.1e}, fused {worst_fused:.1e}, threads {:?}, \
         serialization checked",
        prints.iter().map(|(t, _)| *t).collect::<Vec<_>>()
    );
    if failures.is_empty() {
        Ok(summary)
    } else {
        Err(format!("{summary}; failures: {}", failures.join("; ")))
    }
}

fn best_of(reps: usize, mut f: impl FnMut()) -> Duration {
    (0..reps)
        .map(|_| {
            let t = Instant::now();
            f();
            t.elapsed()
        })
        .min()
        .unwrap()
}

fn criterion_11() -> Outcome {
    let n = 22;
    let mut state = StateVector::new(n).unwrap();
    for q in 0..n {
        state.apply_single_qubit(GateKind::H, q).unwrap();
    }
    let time_mode = |mode: KernelMode, state: &mut StateVector| {
        best_of(3, || {
            for q in 0..n {
                state.apply_single_qubit_with(GateKind::T, q, mode).unwrap();
            }
        })
    };
    let generic = time_mode(KernelMode::Generic, &mut state);
    let specialized = time_mode(KernelMode::Specialized, &mut state);
    let speedup = generic.as_secs_f64() / specialized.as_secs_f64();

    let end_to_end = best_of(1, || {
        let c = generate_circuit(&lattice(5, 4), 40, 0, Variant::Sec4).unwrap();
        let p = simulate(&c).unwrap().probabilities();
        assert_eq!(p.len(), 1 << 20);
    });
    let ok = speedup >= 1.2 && end_to_end < Duration::from_secs(1);
    verdict(
        ok,
        format!(
            "T layer on n=22: generic {:.1} ms, specialized {:.1} ms, speedup {speedup:.2} >= 1.2; \
             5x4 depth-40 end to end {:.0} ms < 1000 ms",
            generic.as_secs_f64() * 1e3,
            specialized.as_secs_f64() * 1e3,
            end_to_end.as_secs_f64() * 1e3
        ),
    )
}

const CRITERIA: [(u32, &str, fn() -> Outcome); 11] = [
    (1, "Porter-Thomas entropy", criterion_1),
    (2, "IPR convergence", criterion_2),
    (3, "XEB tracks fidelity", criterion_3),
    (4, "Pr_alpha(z) shape", criterion_4),
    (5, "Ising path-sum oracle", criterion_5),
    (6, "single-error decorrelation", criterion_6),
    (7, "log-likelihood gap", criterion_7),
    (8, "coupling statistics", criterion_8),
    (9, "Bayesian alpha scaling", criterion_9),
    (10, "property suites", criterion_10),
    (11, "performance sanity", criterion_11),
];

fn main() {
    let selected: Vec<u32> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    // libtest flags such as --nocapture are accepted and ignored
    panic::set_hook(Box::new(|_| {}));
    let mut results = BTreeMap::new();
    for (id, name, run) in CRITERIA {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        println!("criterion {id:>2} {tag} [{name}] ({secs:.1}s) {detail}");
        results.insert(id, outcome.is_ok());
    }
    let failed: Vec<u32> = results.iter().filter(|(_, ok)| !**ok).map(|(id, _)| *id).collect();
    println!(
        "acceptance: {} passed, {} failed{}",
        results.len() - failed.len(),
        failed.len(),
        if failed.is_empty() {
            String::new()
        } else {
            format!(" ({failed:?})")
        }
    );
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
