//! Browser bindings for the circuit tools. Each export takes plain numbers
//! and returns a JSON string for the page to draw.

use serde_json::{json, Value};
use wasm_bindgen::prelude::*;
use xeb_core::analysis::{estimate_alpha, predicted_fidelity, pt_convergence_depth, pt_entropy, pt_pdf, pt_stats};
use xeb_core::circuit::{count_gates, generate_circuit, Circuit, LatticeSpec, Variant};
use xeb_core::ising::{map_to_ising, treewidth_upper_bound};
use xeb_core::noise::{sample_from, NoiseModel, NoisySampleOptions, NoisySimulator};
use xeb_core::statevector::{apply_circuit_with, parse_bitstring, SimOptions, StateVector};

/// Keeps a page responsive: 2^20 amplitudes is 16 MiB.
pub const DEMO_CAP: usize = 20;
/// Free spins enumerated in the browser.
pub const DEMO_ENUMERATION_CAP: usize = 20;

const Z_BINS: usize = 48;
const Z_MIN: f64 = -8.0;
const Z_MAX: f64 = 4.0;

fn circuit(rows: usize, cols: usize, depth: usize, seed: u64) -> Result<Circuit, String> {
    if rows * cols > DEMO_CAP {
        return Err(format!("{} qubits is more than the demo's {DEMO_CAP}", rows * cols));
    }
    let lattice = LatticeSpec::planar(rows, cols).map_err(|e| e.to_string())?;
    generate_circuit(&lattice, depth, seed, Variant::Sec4).map_err(|e| e.to_string())
}

/// Entropy and IPR of the output distribution after every cycle.
pub fn entropy_trace_json(rows: usize, cols: usize, depth: usize, seed: u64) -> Result<Value, String> {
    let c = circuit(rows, cols, depth, seed)?;
    let n = c.n();
    let mut state = StateVector::with_cap(n, DEMO_CAP).map_err(|e| e.to_string())?;
    let mut entropy = Vec::new();
    let mut ipr2 = Vec::new();
    let mut observe = |t: usize, s: &StateVector| {
        let stats = pt_stats(s.probabilities().probs(), t);
        entropy.push(stats.entropy);
        ipr2.push(stats.normalized_ipr[&2]);
    };
    apply_circuit_with(&mut state, &c, SimOptions::default(), Some(&mut observe)).map_err(|e| e.to_string())?;
    Ok(json!({
        "n": n,
        "entropy": entropy,
        "ipr2": ipr2,
        "pt_entropy": pt_entropy(n),
        "max_entropy": n as f64 * std::f64::consts::LN_2,
        "convergence": pt_convergence_depth(&entropy, n),
    }))
}

/// Histogram of z = ln(N p_U(x)) over noisy samples, next to the mixture
/// density at the measured fidelity.
pub fn noisy_histogram_json(
    rows: usize,
    cols: usize,
    depth: usize,
    seed: u64,
    r: f64,
    m: usize,
) -> Result<Value, String> {
    let c = circuit(rows, cols, depth, seed)?;
    let noise = NoiseModel::scaled(r).map_err(|e| e.to_string())?;
    let sim = NoisySimulator::new(&c, noise).map_err(|e| e.to_string())?;
    let opts = NoisySampleOptions { per_trajectory: 1 };
    let s = sample_from(&sim, m, seed, opts).map_err(|e| e.to_string())?;
    let p = sim.ideal().probs();
    let report = estimate_alpha(&s.bitstrings, p).map_err(|e| e.to_string())?;
    let big_n = p.len() as f64;
    let width = (Z_MAX - Z_MIN) / Z_BINS as f64;
    let mut counts = vec![0u64; Z_BINS];
    for &x in &s.bitstrings {
        let z = (big_n * p[x as usize]).ln();
        let bin = ((z - Z_MIN) / width).floor();
        if bin >= 0.0 && (bin as usize) < Z_BINS {
            counts[bin as usize] += 1;
        }
    }
    let centers: Vec<f64> = (0..Z_BINS).map(|b| Z_MIN + (b as f64 + 0.5) * width).collect();
    let density: Vec<f64> = counts.iter().map(|&k| k as f64 / (m as f64 * width)).collect();
    let model: Vec<f64> = centers.iter().map(|&z| pt_pdf(z, report.alpha.clamp(0.0, 1.0))).collect();
    let ideal: Vec<f64> = centers.iter().map(|&z| pt_pdf(z, 1.0)).collect();
    Ok(json!({
        "alpha": report.alpha,
        "stderr": report.stderr,
        "predicted": predicted_fidelity(&count_gates(&c), &noise, c.n()),
        "centers": centers,
        "density": density,
        "model": model,
        "ideal": ideal,
    }))
}

/// Phase sectors of the path sum for one output bitstring, with the
/// amplitude from both routes.
pub fn ising_sectors_json(rows: usize, cols: usize, depth: usize, seed: u64, x: &str) -> Result<Value, String> {
    let c = circuit(rows, cols, depth, seed)?;
    let n = c.n();
    if x.len() != n {
        return Err(format!("output needs {n} bits"));
    }
    let xv = parse_bitstring(x).ok_or_else(|| format!("`{x}` is not a bitstring"))?;
    let model = map_to_ising(&c, xv).map_err(|e| e.to_string())?;
    if model.n_free > DEMO_ENUMERATION_CAP {
        return Err(format!(
            "{} free spins; the demo enumerates at most {DEMO_ENUMERATION_CAP}",
            model.n_free
        ));
    }
    let sectors = model.sector_counts(DEMO_ENUMERATION_CAP).map_err(|e| e.to_string())?;
    let amp = model
        .path_sum_amplitude_capped(DEMO_ENUMERATION_CAP)
        .map_err(|e| e.to_string())?;
    let mut state = StateVector::with_cap(n, DEMO_CAP).map_err(|e| e.to_string())?;
    apply_circuit_with(&mut state, &c, SimOptions::default(), None).map_err(|e| e.to_string())?;
    let sim = state.amplitude(xv).map_err(|e| e.to_string())?;
    Ok(json!({
        "n_free": model.n_free,
        "couplings": model.couplings.len(),
        "treewidth": treewidth_upper_bound(&model),
        "sectors": sectors,
        "path_sum": [amp.re, amp.im],
        "simulator": [sim.re, sim.im],
    }))
}

fn to_js(r: Result<Value, String>) -> Result<String, JsError> {
    r.map(|v| v.to_string()).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn entropy_trace(rows: usize, cols: usize, depth: usize, seed: u64) -> Result<String, JsError> {
    to_js(entropy_trace_json(rows, cols, depth, seed))
}

#[wasm_bindgen]
pub fn noisy_histogram(rows: usize, cols: usize, depth: usize, seed: u64, r: f64, m: usize) -> Result<String, JsError> {
    to_js(noisy_histogram_json(rows, cols, depth, seed, r, m))
}

#[wasm_bindgen]
pub fn ising_sectors(rows: usize, cols: usize, depth: usize, seed: u64, x: &str) -> Result<String, JsError> {
    to_js(ising_sectors_json(rows, cols, depth, seed, x))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trace_has_one_entry_per_cycle() {
        let v = entropy_trace_json(3, 3, 16, 1).unwrap();
        assert_eq!(v["entropy"].as_array().unwrap().len(), 17);
        let last = v["entropy"][16].as_f64().unwrap();
        let pt = v["pt_entropy"].as_f64().unwrap();
        assert!((last - pt).abs() < 0.5, "{last} vs {pt}");
    }

    #[test]
    fn histogram_is_a_density() {
        let v = noisy_histogram_json(3, 3, 12, 4, 0.005, 4000).unwrap();
        let width = (Z_MAX - Z_MIN) / Z_BINS as f64;
        let mass: f64 = v["density"].as_array().unwrap().iter().map(|d| d.as_f64().unwrap() * width).sum();
        assert!(mass > 0.95 && mass <= 1.0 + 1e-12);
        let ideal: f64 = v["ideal"].as_array().unwrap().iter().map(|d| d.as_f64().unwrap() * width).sum();
        assert!((ideal - 1.0).abs() < 0.02);
        let alpha = v["alpha"].as_f64().unwrap();
        assert!(alpha > 0.0 && alpha < 1.2);
    }

    #[test]
    fn sectors_reproduce_the_amplitude() {
        let v = ising_sectors_json(2, 3, 10, 5, "100110").unwrap();
        let total: u64 = v["sectors"].as_array().unwrap().iter().map(|s| s.as_u64().unwrap()).sum();
        assert_eq!(total, 1 << v["n_free"].as_u64().unwrap());
        for i in 0..2 {
            let a = v["path_sum"][i].as_f64().unwrap();
            let b = v["simulator"][i].as_f64().unwrap();
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn oversized_requests_are_refused() {
        assert!(entropy_trace_json(5, 5, 4, 0).is_err());
        assert!(ising_sectors_json(2, 2, 4, 0, "01").is_err());
        assert!(noisy_histogram_json(2, 2, 4, 0, 2.0, 10).is_err());
    }
}
