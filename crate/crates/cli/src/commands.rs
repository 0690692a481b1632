use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};
use xeb_core::analysis::{
    self, cross_entropy_difference, estimate_alpha, fit_alpha, ks_test, predicted_fidelity, pt_cdf,
    pt_convergence_depth, pt_entropy, pt_stats, PtStats,
};
use xeb_core::circuit::{self, count_gates, generate_circuit, generate_stat_ensemble, Circuit, LatticeSpec, Variant};
use xeb_core::ising::{
    bayesian_alpha, coupling_statistics, map_to_ising, phase_histogram, treewidth_upper_bound, IsingModel,
    TAIL_LAYERS,
};
use xeb_core::noise::{sample_from, NoiseModel, NoisySampleOptions, NoisySimulator};
use xeb_core::rng::{self, labels};
use xeb_core::statevector::{
    apply_circuit_with, format_bitstring, parse_bitstring, sample_uniform, KernelMode, Sample, SimOptions,
    StateVector,
};

use num_complex::Complex64;

use crate::args::*;
use crate::error::CliError;

/// Amplitudes from the two routes must agree this closely.
const VERIFY_TOLERANCE: f64 = 1e-9;

/// Distance between two amplitudes and whether it is within tolerance.
fn compare(a: Complex64, b: Complex64) -> (f64, Result<(), CliError>) {
    let err = (a - b).norm();
    let check = if err <= VERIFY_TOLERANCE {
        Ok(())
    } else {
        Err(CliError::Verification(format!("path sum and simulator differ by {err:.3e}")))
    };
    (err, check)
}

pub struct Context {
    pub threads: usize,
}

impl Context {
    /// Provenance block embedded in every output.
    fn meta(&self, command: &str, config: &impl Serialize) -> Value {
        let mut config = serde_json::to_value(config).unwrap_or(Value::Null);
        drop_unused_generator_keys(&mut config);
        json!({
            "tool": "xeb",
            "version": env!("CARGO_PKG_VERSION"),
            "command": command,
            "threads": self.threads,
            "config": config,
        })
    }
}

/// A circuit read from file ignores the generator flags; keep them out of the echo.
fn drop_unused_generator_keys(config: &mut Value) {
    let Some(obj) = config.as_object_mut() else { return };
    if let Some(Value::Object(c)) = obj.get_mut("circuit") {
        if c.get("circuit").is_some_and(Value::is_string) {
            for key in ["rows", "cols", "depth", "seed", "variant", "p_cz"] {
                c.remove(key);
            }
        }
    }
}

fn open_out(out: &OutArgs) -> Result<Box<dyn Write>, CliError> {
    Ok(match &out.out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json(out: &OutArgs, value: &Value) -> Result<(), CliError> {
    let mut w = open_out(out)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn variant_of(v: VariantArg) -> Variant {
    match v {
        VariantArg::Sec4 => Variant::Sec4,
        VariantArg::Dense => Variant::Dense,
        VariantArg::StatEnsemble => Variant::StatEnsemble,
    }
}

fn lattice_of(args: &CircuitArgs) -> Result<LatticeSpec, CliError> {
    // dense circuits live on the periodic lattice
    Ok(LatticeSpec::new(args.rows, args.cols, args.variant == VariantArg::Dense)?)
}

fn load_circuit(args: &CircuitArgs) -> Result<Circuit, CliError> {
    if let Some(path) = &args.circuit {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        return circuit::parse(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())));
    }
    let lattice = lattice_of(args)?;
    Ok(match args.variant {
        VariantArg::StatEnsemble => generate_stat_ensemble(&lattice, args.depth, args.p_cz, args.seed)?,
        v => generate_circuit(&lattice, args.depth, args.seed, variant_of(v))?,
    })
}

fn load_noise(args: &NoiseArgs) -> Result<NoiseModel, CliError> {
    match &args.noise {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            Ok(NoiseModel::from_json(&text)?)
        }
        None => Ok(NoiseModel::new(args.r1, args.r2, args.r_init, args.r_mes)?),
    }
}

fn check_cap(n: usize, cap: &CapArgs) -> Result<(), CliError> {
    if n > cap.cap {
        return Err(CliError::Capacity(format!(
            "{n} qubits exceed the state-vector capacity of {}",
            cap.cap
        )));
    }
    Ok(())
}

fn parse_x(text: Option<&str>, n: usize) -> Result<u64, CliError> {
    let Some(text) = text else { return Ok(0) };
    if text.len() != n {
        return Err(CliError::Config(format!("--x needs {n} bits, got `{text}`")));
    }
    parse_bitstring(text).ok_or_else(|| CliError::Config(format!("--x `{text}` is not a bitstring")))
}

fn simulate_capped(c: &Circuit, cap: &CapArgs, opts: SimOptions) -> Result<StateVector, CliError> {
    check_cap(c.n(), cap)?;
    let mut state = StateVector::with_cap(c.n(), cap.cap)?;
    apply_circuit_with(&mut state, c, opts, None)?;
    Ok(state)
}

fn circuit_summary(c: &Circuit) -> Value {
    json!({
        "rows": c.lattice.rows,
        "cols": c.lattice.cols,
        "periodic": c.lattice.periodic,
        "variant": c.variant.name(),
        "seed": c.seed,
        "cycles": c.cycles.len(),
        "census": count_gates(c),
    })
}

pub fn generate(ctx: &Context, circuit: &CircuitArgs, out: &OutArgs) -> Result<(), CliError> {
    let c = load_circuit(circuit)?;
    let text = circuit::serialize_with_meta(&c, ctx.meta("generate", circuit));
    let mut w = open_out(out)?;
    writeln!(w, "{text}")?;
    w.flush()?;
    Ok(())
}

pub fn simulate(ctx: &Context, args: &SimulateArgs) -> Result<(), CliError> {
    let c = load_circuit(&args.circuit)?;
    let n = c.n();
    check_cap(n, &args.cap)?;
    let opts = SimOptions {
        kernel: match args.kernel {
            KernelArg::Specialized => KernelMode::Specialized,
            KernelArg::Generic => KernelMode::Generic,
        },
        fusion_bits: (args.fusion_bits > 0).then_some(args.fusion_bits),
    };
    let mut state = StateVector::with_cap(n, args.cap.cap)?;
    let mut trace: Vec<PtStats> = Vec::new();
    if args.final_only {
        apply_circuit_with(&mut state, &c, opts, None)?;
        trace.push(pt_stats(state.probabilities().probs(), c.cycles.len() - 1));
    } else {
        let mut observe = |t: usize, s: &StateVector| trace.push(pt_stats(s.probabilities().probs(), t));
        apply_circuit_with(&mut state, &c, opts, Some(&mut observe))?;
    }
    let probs = state.probabilities();
    let entropy: Vec<f64> = trace.iter().map(|s| s.entropy).collect();
    let mut ipr: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for s in &trace {
        for (k, v) in &s.normalized_ipr {
            ipr.entry(k.to_string()).or_default().push(*v);
        }
    }
    let convergence = if args.final_only { None } else { pt_convergence_depth(&entropy, n) };
    let report = json!({
        "meta": ctx.meta("simulate", args),
        "n": n,
        "depth": c.depth(),
        "seed": c.seed,
        "entropy": entropy,
        "ipr": ipr,
        "delta_h": cross_entropy_difference(probs.probs(), probs.probs())?,
        "alpha": Value::Null,
        "stderr": Value::Null,
        "pt_entropy": pt_entropy(n),
        "convergence_cycle": convergence,
        "circuit": circuit_summary(&c),
    });
    if let Some(path) = &args.trace {
        write_trace(path, &trace, &ctx.meta("simulate", args))?;
    }
    if let Some(path) = &args.dump {
        state.write_dump(BufWriter::new(File::create(path)?))?;
    }
    write_json(&args.out, &report)
}

fn write_trace(path: &Path, trace: &[PtStats], meta: &Value) -> Result<(), CliError> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "# {meta}")?;
    let ks: Vec<u32> = trace.first().map(|s| s.normalized_ipr.keys().copied().collect()).unwrap_or_default();
    let header: Vec<String> = ks.iter().map(|k| format!("ipr{k}")).collect();
    writeln!(w, "cycle,entropy,{}", header.join(","))?;
    for s in trace {
        let values: Vec<String> = s.normalized_ipr.values().map(|v| format!("{v:.10e}")).collect();
        writeln!(w, "{},{:.12},{}", s.cycle, s.entropy, values.join(","))?;
    }
    w.flush()?;
    Ok(())
}

pub fn sample(ctx: &Context, args: &SampleArgs) -> Result<(), CliError> {
    let c = load_circuit(&args.circuit)?;
    let n = c.n();
    let seed = args.sample_seed.unwrap_or(c.seed);
    let noise = load_noise(&args.noise)?;
    if args.m == 0 {
        return Err(CliError::Config("-m must be at least 1".into()));
    }
    let s = if args.uniform {
        sample_uniform(n, args.m, &mut rng::stream(seed, labels::UNIFORM, 0))?
    } else {
        check_cap(n, &args.cap)?;
        let sim = NoisySimulator::new(&c, noise)?;
        let opts = NoisySampleOptions {
            per_trajectory: args.per_traj.max(1),
        };
        sample_from(&sim, args.m, seed, opts)?
    };
    let meta = ctx.meta("sample", args);
    let notes = vec![
        meta.to_string(),
        format!("noise {}", noise.to_json()),
    ];
    let w = open_out(&args.out)?;
    s.write_annotated(w, seed, &notes)?;
    Ok(())
}

fn read_sample(path: &Path) -> Result<(Sample, u64), CliError> {
    let f = File::open(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    Sample::read_from(BufReader::new(f)).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

pub fn xeb(ctx: &Context, args: &XebArgs) -> Result<(), CliError> {
    let c = load_circuit(&args.circuit)?;
    let (s, sample_seed) = read_sample(&args.input)?;
    if s.n != c.n() {
        return Err(CliError::Config(format!(
            "sample has {} qubits but the circuit has {}",
            s.n,
            c.n()
        )));
    }
    let noise = load_noise(&args.noise)?;
    let probs = simulate_capped(&c, &args.cap, SimOptions::default())?.probabilities();
    let p = probs.probs();
    let report = estimate_alpha(&s.bitstrings, p)?;
    let census = count_gates(&c);
    let big_n = p.len() as f64;
    let zs: Vec<f64> = s
        .bitstrings
        .iter()
        .map(|&x| (big_n * p[x as usize].max(analysis::CLAMP_FLOOR)).ln())
        .collect();
    let fitted = fit_alpha(&zs)?;
    let ks = ks_test(&zs, |z| pt_cdf(z, report.alpha))?;
    write_json(
        &args.out,
        &json!({
            "meta": ctx.meta("xeb", args),
            "n": c.n(),
            "depth": c.depth(),
            "seed": c.seed,
            "sample_seed": sample_seed,
            "m": report.m,
            "delta_h": report.alpha,
            "alpha": report.alpha,
            "stderr": report.stderr,
            "h0": report.h0,
            "clamped": report.clamped,
            "predicted_fidelity": predicted_fidelity(&census, &noise, c.n()),
            "noise": noise,
            "fit_alpha": fitted,
            "ks": ks,
            "circuit": circuit_summary(&c),
        }),
    )
}

#[derive(Serialize)]
struct SweepCell {
    seed: u64,
    r: f64,
    alpha: f64,
    stderr: f64,
    predicted: f64,
}

pub fn sweep(ctx: &Context, args: &SweepArgs) -> Result<(), CliError> {
    check_cap(args.rows * args.cols, &args.cap)?;
    if args.m == 0 {
        return Err(CliError::Config("-m must be at least 1".into()));
    }
    let lattice = LatticeSpec::planar(args.rows, args.cols)?;
    let mut cells = Vec::new();
    // Cells run one after another; each parallelizes over trajectories and
    // holds its own checkpoint cache.
    for seed in args.first_seed..args.first_seed + args.seeds {
        let c = generate_circuit(&lattice, args.depth, seed, Variant::Sec4)?;
        let census = count_gates(&c);
        for &r in &args.rates {
            let noise = NoiseModel::scaled(r)?;
            let sim = NoisySimulator::new(&c, noise)?;
            let opts = NoisySampleOptions {
                per_trajectory: args.per_traj.max(1),
            };
            let s = sample_from(&sim, args.m, seed, opts)?;
            let report = estimate_alpha(&s.bitstrings, sim.ideal().probs())?;
            let cell = SweepCell {
                seed,
                r,
                alpha: report.alpha,
                stderr: report.stderr,
                predicted: predicted_fidelity(&census, &noise, c.n()),
            };
            eprintln!(
                "seed {seed} r {r}: alpha {:.4} +- {:.4}, predicted {:.4}",
                cell.alpha, cell.stderr, cell.predicted
            );
            cells.push(cell);
        }
    }
    let summary: Vec<Value> = args
        .rates
        .iter()
        .map(|&r| {
            let of_rate: Vec<&SweepCell> = cells.iter().filter(|c| c.r == r).collect();
            let k = of_rate.len() as f64;
            let mean = of_rate.iter().map(|c| c.alpha).sum::<f64>() / k;
            let predicted = of_rate.iter().map(|c| c.predicted).sum::<f64>() / k;
            let sd = (of_rate.iter().map(|c| (c.alpha - mean).powi(2)).sum::<f64>() / (k - 1.0).max(1.0)).sqrt();
            json!({"r": r, "alpha_mean": mean, "alpha_sd": sd, "predicted_mean": predicted, "instances": of_rate.len()})
        })
        .collect();
    write_json(
        &args.out,
        &json!({"meta": ctx.meta("sweep", args), "cells": cells, "summary": summary}),
    )
}

fn ising_report_base(model: &IsingModel, c: &Circuit) -> Value {
    json!({
        "n": model.n,
        "depth": c.depth(),
        "seed": c.seed,
        "x": format_bitstring(model.x, model.n),
        "n_free": model.n_free,
        "g_sparse": model.g_sparse,
        "couplings": model.couplings.len(),
        "global_units": model.global_units,
    })
}

pub fn ising(ctx: &Context, args: &IsingArgs) -> Result<(), CliError> {
    if args.stats {
        return ising_stats(ctx, args);
    }
    let c = load_circuit(&args.circuit)?;
    let x = parse_x(args.x.as_deref(), c.n())?;
    let model = map_to_ising(&c, x)?;
    if let Some(path) = &args.export {
        let mut w = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(&mut w, &model.export())?;
        writeln!(w)?;
        w.flush()?;
    }
    if args.treewidth {
        let mut w = open_out(&args.out)?;
        writeln!(w, "# {}", ctx.meta("ising", args))?;
        writeln!(w, "qubits,depth,seed,n_free,couplings,treewidth")?;
        writeln!(
            w,
            "{},{},{},{},{},{}",
            model.n,
            c.depth(),
            c.seed,
            model.n_free,
            model.couplings.len(),
            treewidth_upper_bound(&model)
        )?;
        w.flush()?;
        return Ok(());
    }
    let mut report = ising_report_base(&model, &c);
    report["meta"] = ctx.meta("ising", args);
    let mut failure: Option<CliError> = None;
    if model.n_free <= args.enumeration_cap {
        let sectors = model.sector_counts(args.enumeration_cap)?;
        let amp = model.path_sum_amplitude_capped(args.enumeration_cap)?;
        report["sectors"] = json!(sectors);
        report["amplitude"] = json!({"re": amp.re, "im": amp.im, "prob": amp.norm_sqr()});
        if args.verify {
            check_cap(c.n(), &args.cap)?;
            let sim = simulate_capped(&c, &args.cap, SimOptions::default())?.amplitude(x)?;
            let (err, check) = compare(sim, amp);
            report["verify"] = json!({
                "simulator": {"re": sim.re, "im": sim.im},
                "error": err,
                "tolerance": VERIFY_TOLERANCE,
                "ok": check.is_ok(),
            });
            failure = check.err();
        }
    } else if args.verify {
        return Err(CliError::Capacity(format!(
            "{} free spins exceed the enumeration cap of {}",
            model.n_free, args.enumeration_cap
        )));
    }
    if let Some(q) = args.bayes {
        let hist = phase_histogram(&model, q, args.mc_seed.unwrap_or(c.seed))?;
        report["bayes"] = json!({
            "q": q,
            "counts": hist.counts,
            "alpha": bayesian_alpha(&hist, model.n, model.g_sparse)?,
        });
    }
    write_json(&args.out, &report)?;
    failure.map_or(Ok(()), Err)
}

fn ising_stats(ctx: &Context, args: &IsingArgs) -> Result<(), CliError> {
    if args.circuit.circuit.is_some() {
        return Err(CliError::Config("--stats draws its own ensemble; drop --circuit".into()));
    }
    if args.circuit.depth <= TAIL_LAYERS {
        return Err(CliError::Config(format!(
            "--stats needs more than {TAIL_LAYERS} layers; the last {TAIL_LAYERS} only close intervals"
        )));
    }
    let lattice = LatticeSpec::planar(args.circuit.rows, args.circuit.cols)?;
    let stats = coupling_statistics(
        &lattice,
        args.circuit.depth,
        args.circuit.p_cz,
        args.models,
        args.circuit.seed,
    )?;
    let mut w = open_out(&args.out)?;
    writeln!(w, "# {}", ctx.meta("ising", args))?;
    writeln!(w, "kind,index,value,prediction,count")?;
    for (r, &count) in stats.lateral.iter().enumerate() {
        writeln!(w, "lateral,{r},{:.8},{:.8},{count}", stats.empirical(r), stats.theory(r))?;
    }
    for (k, g) in &stats.gap {
        writeln!(w, "gap_var,{k},{:.8},{:.8},{}", g.var_diff, g.predicted_var, g.count)?;
    }
    w.flush()?;
    Ok(())
}

pub fn amplitude(ctx: &Context, args: &AmplitudeArgs) -> Result<(), CliError> {
    let c = load_circuit(&args.circuit)?;
    let x = parse_x(Some(&args.x), c.n())?;
    let mut report = json!({
        "meta": ctx.meta("amplitude", args),
        "n": c.n(),
        "depth": c.depth(),
        "seed": c.seed,
        "x": args.x,
    });
    let want_sim = matches!(args.method, MethodArg::Simulate | MethodArg::Both);
    let want_path = matches!(args.method, MethodArg::PathSum | MethodArg::Both);
    let sim = if want_sim {
        let a = simulate_capped(&c, &args.cap, SimOptions::default())?.amplitude(x)?;
        report["simulate"] = json!({"re": a.re, "im": a.im, "prob": a.norm_sqr()});
        Some(a)
    } else {
        None
    };
    let path = if want_path {
        let a = map_to_ising(&c, x)?.path_sum_amplitude_capped(args.enumeration_cap)?;
        report["path_sum"] = json!({"re": a.re, "im": a.im, "prob": a.norm_sqr()});
        Some(a)
    } else {
        None
    };
    let mut failure: Option<CliError> = None;
    if let (Some(a), Some(b)) = (sim, path) {
        let (err, check) = compare(a, b);
        report["error"] = json!(err);
        failure = check.err();
    }
    write_json(&args.out, &report)?;
    failure.map_or(Ok(()), Err)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mismatched_amplitudes_fail_verification() {
        let a = Complex64::new(0.5, 0.0);
        let (err, ok) = compare(a, a + Complex64::new(0.0, 1e-12));
        assert!(err < VERIFY_TOLERANCE && ok.is_ok());
        let (_, bad) = compare(a, Complex64::new(0.5, 1e-6));
        assert_eq!(bad.unwrap_err().exit_code(), 4);
    }

    #[test]
    fn file_circuits_drop_generator_keys() {
        let mut v = json!({"circuit": {"circuit": "c.json", "rows": 4, "seed": 0}, "m": 3});
        drop_unused_generator_keys(&mut v);
        assert_eq!(v, json!({"circuit": {"circuit": "c.json"}, "m": 3}));
        let mut g = json!({"circuit": {"circuit": null, "rows": 4}});
        drop_unused_generator_keys(&mut g);
        assert_eq!(g["circuit"]["rows"], 4);
    }
}
