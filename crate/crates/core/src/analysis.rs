//! Cross-entropy benchmarking statistics and Porter-Thomas diagnostics.
//!
//! All logarithms are natural. Probability vectors are plain slices indexed
//! by basis state; their length is `N = 2^n`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::GateCensus;
use crate::noise::NoiseModel;
use crate::numeric::{det_sum, KahanSum};

/// Euler-Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Probabilities below this are clamped before taking logarithms.
pub const CLAMP_FLOOR: f64 = 1e-300;

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("sample is empty")]
    EmptySample,
    #[error("bitstring {x} out of range for {len} probabilities")]
    OutOfRange { x: u64, len: usize },
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("IPR order must be at least 2, got {0}")]
    BadOrder(u32),
}

/// Outcome of scoring a sample against ideal probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XebReport {
    pub alpha: f64,
    pub h0: f64,
    pub stderr: f64,
    pub m: usize,
    pub n: usize,
    /// Sampled bitstrings whose ideal probability was below [`CLAMP_FLOOR`].
    pub clamped: usize,
}

/// Entropy and normalized IPR moments of one output distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PtStats {
    pub cycle: usize,
    pub entropy: f64,
    pub normalized_ipr: BTreeMap<u32, f64>,
}

fn ln_clamped(p: f64) -> (f64, bool) {
    if p < CLAMP_FLOOR {
        (CLAMP_FLOOR.ln(), true)
    } else {
        (p.ln(), false)
    }
}

fn n_of(len: usize) -> usize {
    len.trailing_zeros() as usize
}

/// `-Σ p ln p` with `0 ln 0 = 0`.
pub fn entropy(p: &[f64]) -> f64 {
    det_sum(p, |&x| if x > 0.0 { -x * x.ln() } else { 0.0 })
}

/// Entropy of a Porter-Thomas distribution on `n` qubits: `n ln 2 - 1 + γ`.
pub fn pt_entropy(n: usize) -> f64 {
    n as f64 * std::f64::consts::LN_2 - 1.0 + EULER_GAMMA
}

/// Cross entropy of a uniform sampler against Porter-Thomas: `n ln 2 + γ`.
pub fn h0(n: usize) -> f64 {
    n as f64 * std::f64::consts::LN_2 + EULER_GAMMA
}

/// `-Σ p_a ln p_u`, clamping `p_u` where `p_a > 0`.
pub fn cross_entropy(p_a: &[f64], p_u: &[f64]) -> Result<f64, AnalysisError> {
    if p_a.len() != p_u.len() {
        return Err(AnalysisError::LengthMismatch(p_a.len(), p_u.len()));
    }
    let pairs: Vec<(f64, f64)> = p_a.iter().copied().zip(p_u.iter().copied()).collect();
    Ok(det_sum(&pairs, |&(a, u)| if a > 0.0 { -a * ln_clamped(u).0 } else { 0.0 }))
}

/// `ΔH = H0 - H(p_a, p_u)`: 1 for an ideal Porter-Thomas sampler, 0 for a
/// uniform one.
pub fn cross_entropy_difference(p_a: &[f64], p_u: &[f64]) -> Result<f64, AnalysisError> {
    Ok(h0(n_of(p_u.len())) - cross_entropy(p_a, p_u)?)
}

/// `α = H0 - mean(ln 1/p_u(x))` over the sample, with the CLT standard error.
pub fn estimate_alpha(sample: &[u64], p_u: &[f64]) -> Result<XebReport, AnalysisError> {
    if sample.is_empty() {
        return Err(AnalysisError::EmptySample);
    }
    let n = n_of(p_u.len());
    let mut clamped = 0;
    let mut scores = Vec::with_capacity(sample.len());
    for &x in sample {
        let p = *p_u
            .get(x as usize)
            .ok_or(AnalysisError::OutOfRange { x, len: p_u.len() })?;
        let (l, c) = ln_clamped(p);
        clamped += usize::from(c);
        scores.push(-l);
    }
    let m = scores.len();
    let mean = det_sum(&scores, |&s| s) / m as f64;
    let var = if m > 1 {
        det_sum(&scores, |&s| (s - mean) * (s - mean)) / (m - 1) as f64
    } else {
        0.0
    };
    Ok(XebReport {
        alpha: h0(n) - mean,
        h0: h0(n),
        stderr: (var / m as f64).sqrt(),
        m,
        n,
        clamped,
    })
}

/// `exp(-r1 g1 - r2 g2 - r_init n - r_mes n)`; `g1` includes the initial
/// Hadamards.
pub fn predicted_fidelity(census: &GateCensus, noise: &NoiseModel, n: usize) -> f64 {
    (-noise.r1 * census.g1 as f64
        - noise.r2 * census.g2 as f64
        - noise.r_init * n as f64
        - noise.r_mes * n as f64)
        .exp()
}

/// Density of `z = ln(N p)` for the depolarized Porter-Thomas ansatz.
pub fn pt_pdf(z: f64, alpha: f64) -> f64 {
    let ez = z.exp();
    (z - ez).exp() * (1.0 + alpha * (ez - 1.0))
}

/// Cumulative distribution of [`pt_pdf`]: with `u = e^z`,
/// `F = 1 - e^{-u} - α u e^{-u}`.
pub fn pt_cdf(z: f64, alpha: f64) -> f64 {
    let u = z.exp();
    let e = (-u).exp();
    (-(-u).exp_m1() - alpha * u * e).clamp(0.0, 1.0)
}

/// Maximum-likelihood `α ∈ [0, 1]` for samples of `z = ln(N p)`. The
/// log-likelihood is concave, so its derivative is bisected.
pub fn fit_alpha(zs: &[f64]) -> Result<f64, AnalysisError> {
    if zs.is_empty() {
        return Err(AnalysisError::EmptySample);
    }
    let w: Vec<f64> = zs.iter().map(|z| z.exp_m1()).collect();
    let slope = |alpha: f64| det_sum(&w, |&v| v / (1.0 + alpha * v));
    if slope(0.0) <= 0.0 {
        return Ok(0.0);
    }
    if slope(1.0) >= 0.0 {
        return Ok(1.0);
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while hi - lo > 1e-9 {
        let mid = 0.5 * (lo + hi);
        if slope(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `N^{k-1} Σ p^k`: 1 for the uniform distribution, `k!` for Porter-Thomas.
pub fn normalized_ipr(p: &[f64], k: u32) -> Result<f64, AnalysisError> {
    if k < 2 {
        return Err(AnalysisError::BadOrder(k));
    }
    let big_n = p.len() as f64;
    // (N p)^k / N keeps the terms near 1 for large N
    Ok(det_sum(p, |&x| (big_n * x).powi(k as i32)) / big_n)
}

pub fn pt_stats(p: &[f64], cycle: usize) -> PtStats {
    PtStats {
        cycle,
        entropy: entropy(p),
        normalized_ipr: (2..=10)
            .map(|k| (k, normalized_ipr(p, k).expect("k >= 2")))
            .collect(),
    }
}

/// Half-width of the 4-sigma band around the Porter-Thomas entropy,
/// `4 · 0.75 · 2^{-n/2}`.
pub fn convergence_band(n: usize) -> f64 {
    4.0 * 0.75 * 2f64.powf(-(n as f64) / 2.0)
}

/// First cycle from which every later entropy stays in the band.
pub fn pt_convergence_depth(trace: &[f64], n: usize) -> Option<usize> {
    let target = pt_entropy(n);
    let band = convergence_band(n);
    let mut first = None;
    for (t, h) in trace.iter().enumerate().rev() {
        if (h - target).abs() <= band {
            first = Some(t);
        } else {
            break;
        }
    }
    first
}

pub const HIST_BINS: usize = 50;
pub const HIST_MIN: f64 = 1e-4;
pub const HIST_MAX: f64 = 1e2;

/// Pearson correlation of two distributions plus a log-log histogram of
/// `(N p_ideal, N p_err)` over [`HIST_MIN`, `HIST_MAX`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorCorrelation {
    pub pearson: f64,
    /// `hist[i][j]` counts entries with `N p_ideal` in bin `i` and
    /// `N p_err` in bin `j`. Values outside the range are not counted.
    pub hist: Vec<Vec<u64>>,
}

/// Log-spaced bin of `v`, or `None` outside the histogram range.
pub fn hist_bin(v: f64) -> Option<usize> {
    if !(HIST_MIN..HIST_MAX).contains(&v) {
        return None;
    }
    let frac = (v / HIST_MIN).log10() / (HIST_MAX / HIST_MIN).log10();
    Some(((frac * HIST_BINS as f64) as usize).min(HIST_BINS - 1))
}

/// Pearson correlation; 0 when either vector is constant.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64, AnalysisError> {
    if a.len() != b.len() {
        return Err(AnalysisError::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(AnalysisError::EmptySample);
    }
    let len = a.len() as f64;
    let ma = det_sum(a, |&x| x) / len;
    let mb = det_sum(b, |&x| x) / len;
    let pairs: Vec<(f64, f64)> = a.iter().copied().zip(b.iter().copied()).collect();
    let cov = det_sum(&pairs, |&(x, y)| (x - ma) * (y - mb));
    let va = det_sum(a, |&x| (x - ma) * (x - ma));
    let vb = det_sum(b, |&y| (y - mb) * (y - mb));
    if va == 0.0 || vb == 0.0 {
        return Ok(0.0);
    }
    Ok(cov / (va.sqrt() * vb.sqrt()))
}

pub fn error_correlation(p_ideal: &[f64], p_err: &[f64]) -> Result<ErrorCorrelation, AnalysisError> {
    let r = pearson(p_ideal, p_err)?;
    let big_n = p_ideal.len() as f64;
    let mut hist = vec![vec![0u64; HIST_BINS]; HIST_BINS];
    for (&a, &b) in p_ideal.iter().zip(p_err) {
        if let (Some(i), Some(j)) = (hist_bin(big_n * a), hist_bin(big_n * b)) {
            hist[i][j] += 1;
        }
    }
    Ok(ErrorCorrelation { pearson: r, hist })
}

fn log_likelihood(p_u: &[f64], sample: &[u64]) -> Result<f64, AnalysisError> {
    let mut acc = KahanSum::default();
    for &x in sample {
        let p = *p_u
            .get(x as usize)
            .ok_or(AnalysisError::OutOfRange { x, len: p_u.len() })?;
        acc.add(ln_clamped(p).0);
    }
    Ok(acc.total())
}

/// `Σ ln p_u(a) - Σ ln p_u(b)`; about `m` when `a` is ideal and `b` uniform.
pub fn log_likelihood_gap(p_u: &[f64], sample_a: &[u64], sample_b: &[u64]) -> Result<f64, AnalysisError> {
    if sample_a.len() != sample_b.len() {
        return Err(AnalysisError::LengthMismatch(sample_a.len(), sample_b.len()));
    }
    if sample_a.is_empty() {
        return Err(AnalysisError::EmptySample);
    }
    Ok(log_likelihood(p_u, sample_a)? - log_likelihood(p_u, sample_b)?)
}

/// Result of a one-sample Kolmogorov-Smirnov test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub m: usize,
}

/// One-sample KS test of `data` against the continuous CDF `cdf`.
pub fn ks_test(data: &[f64], cdf: impl Fn(f64) -> f64) -> Result<KsResult, AnalysisError> {
    if data.is_empty() {
        return Err(AnalysisError::EmptySample);
    }
    let mut sorted = data.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len() as f64;
    let d = sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / m).max((i + 1) as f64 / m - f)
        })
        .fold(0.0, f64::max);
    Ok(KsResult {
        statistic: d,
        p_value: kolmogorov_survival((m.sqrt() + 0.12 + 0.11 / m.sqrt()) * d),
        m: sorted.len(),
    })
}

/// `Q(λ) = 2 Σ_{j≥1} (-1)^{j-1} e^{-2 j² λ²}`, the asymptotic probability
/// that the scaled KS statistic exceeds `λ`.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..=200 {
        let term = (-2.0 * (j * j) as f64 * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}
