use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "xeb", version, about = "Random circuit sampling, cross-entropy benchmarking and Ising path sums")]
pub struct Cli {
    /// Worker threads (default: all cores)
    #[arg(long, global = true, env = "XEB_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a circuit and write it as JSON
    Generate {
        #[command(flatten)]
        circuit: CircuitArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Simulate a circuit; report per-cycle entropy and IPR statistics
    Simulate(SimulateArgs),
    /// Draw bitstrings from the ideal, noisy or uniform distribution
    Sample(SampleArgs),
    /// Score a sample file against the ideal circuit (cross entropy difference)
    Xeb(XebArgs),
    /// Measured vs predicted XEB fidelity over seeds and error rates
    Sweep(SweepArgs),
    /// Ising form of an amplitude: path sums, treewidth, statistics, Bayesian estimate
    Ising(IsingArgs),
    /// One output amplitude
    Amplitude(AmplitudeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VariantArg {
    Sec4,
    Dense,
    #[value(alias = "stat")]
    StatEnsemble,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CircuitArgs {
    /// Read the circuit from a JSON file instead of generating it
    #[arg(long, value_name = "FILE", conflicts_with_all = ["rows", "cols", "depth", "variant"])]
    pub circuit: Option<PathBuf>,
    #[arg(long, default_value_t = 4)]
    pub rows: usize,
    #[arg(long, default_value_t = 4)]
    pub cols: usize,
    /// Clock cycles (sec4) or layers (dense, stat-ensemble)
    #[arg(long, default_value_t = 20)]
    pub depth: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = VariantArg::Sec4)]
    pub variant: VariantArg,
    /// CZ probability per edge and layer for the statistical ensemble
    #[arg(long, default_value_t = xeb_core::circuit::DEFAULT_P_CZ)]
    pub p_cz: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct NoiseArgs {
    /// Error rate after single-qubit gates
    #[arg(long, default_value_t = 0.0)]
    pub r1: f64,
    /// Error rate after CZ gates
    #[arg(long, default_value_t = 0.0)]
    pub r2: f64,
    /// Initialization bit-flip rate
    #[arg(long, default_value_t = 0.0)]
    pub r_init: f64,
    /// Measurement bit-flip rate
    #[arg(long, default_value_t = 0.0)]
    pub r_mes: f64,
    /// Noise model JSON; overrides the rate flags
    #[arg(long, value_name = "FILE")]
    pub noise: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OutArgs {
    /// Output file (default: stdout)
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CapArgs {
    /// Largest qubit count held as a state vector
    #[arg(long, default_value_t = xeb_core::statevector::DEFAULT_CAP)]
    pub cap: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelArg {
    Specialized,
    Generic,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub circuit: CircuitArgs,
    #[command(flatten)]
    pub out: OutArgs,
    #[command(flatten)]
    pub cap: CapArgs,
    /// Also write the per-cycle trace as CSV
    #[arg(long, value_name = "FILE")]
    pub trace: Option<PathBuf>,
    /// Also write the final state as a binary dump
    #[arg(long, value_name = "FILE")]
    pub dump: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = KernelArg::Specialized)]
    pub kernel: KernelArg,
    /// Fuse gates below this qubit into blockwise passes (0 disables)
    #[arg(long, default_value_t = xeb_core::statevector::DEFAULT_FUSION_BITS)]
    pub fusion_bits: usize,
    /// Statistics of the final state only (faster)
    #[arg(long)]
    pub final_only: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SampleArgs {
    #[command(flatten)]
    pub circuit: CircuitArgs,
    #[command(flatten)]
    pub noise: NoiseArgs,
    #[command(flatten)]
    pub out: OutArgs,
    #[command(flatten)]
    pub cap: CapArgs,
    /// Number of bitstrings
    #[arg(short = 'm', long = "samples", default_value_t = 1000)]
    pub m: usize,
    /// Bitstrings per noisy trajectory; above 1 the samples of one
    /// trajectory share its gate errors
    #[arg(long, default_value_t = 1)]
    pub per_traj: usize,
    /// Uniformly random bitstrings (ignores the circuit's amplitudes)
    #[arg(long)]
    pub uniform: bool,
    /// Sampling seed (default: the circuit seed)
    #[arg(long)]
    pub sample_seed: Option<u64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct XebArgs {
    #[command(flatten)]
    pub circuit: CircuitArgs,
    /// Noise rates for the predicted fidelity
    #[command(flatten)]
    pub noise: NoiseArgs,
    #[command(flatten)]
    pub out: OutArgs,
    #[command(flatten)]
    pub cap: CapArgs,
    /// Sample file to score
    #[arg(long, value_name = "FILE")]
    pub input: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SweepArgs {
    #[arg(long, default_value_t = 5)]
    pub rows: usize,
    #[arg(long, default_value_t = 4)]
    pub cols: usize,
    #[arg(long, default_value_t = 40)]
    pub depth: usize,
    /// Circuit seeds are first-seed .. first-seed + seeds
    #[arg(long, default_value_t = 10)]
    pub seeds: u64,
    #[arg(long, default_value_t = 0)]
    pub first_seed: u64,
    /// Error rates r; each cell uses r1 = r/10 and r2 = r_init = r_mes = r
    #[arg(long, value_delimiter = ',', default_values_t = [0.002, 0.005, 0.01])]
    pub rates: Vec<f64>,
    #[arg(short = 'm', long = "samples", default_value_t = 100_000)]
    pub m: usize,
    #[arg(long, default_value_t = 500)]
    pub per_traj: usize,
    #[command(flatten)]
    pub out: OutArgs,
    #[command(flatten)]
    pub cap: CapArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct IsingArgs {
    #[command(flatten)]
    pub circuit: CircuitArgs,
    #[command(flatten)]
    pub out: OutArgs,
    /// Output bitstring, qubit 0 leftmost (default: all zeros)
    #[arg(long)]
    pub x: Option<String>,
    /// Check the path sum against the state-vector amplitude (exit 4 on mismatch)
    #[arg(long)]
    pub verify: bool,
    /// Emit the greedy treewidth bound as CSV
    #[arg(long, conflicts_with_all = ["stats", "verify", "bayes"])]
    pub treewidth: bool,
    /// Emit coupling statistics of the layered ensemble as CSV
    #[arg(long, conflicts_with_all = ["verify", "bayes", "export"])]
    pub stats: bool,
    /// Models for --stats
    #[arg(long, default_value_t = 10_000)]
    pub models: usize,
    /// Monte Carlo path samples for the Bayesian fidelity estimate
    #[arg(long, value_name = "Q")]
    pub bayes: Option<u64>,
    /// Seed of the Monte Carlo streams (default: the circuit seed)
    #[arg(long)]
    pub mc_seed: Option<u64>,
    /// Write the model as JSON
    #[arg(long, value_name = "FILE")]
    pub export: Option<PathBuf>,
    /// Largest free-spin count enumerated exactly
    #[arg(long, default_value_t = xeb_core::ising::DEFAULT_ENUMERATION_CAP)]
    pub enumeration_cap: usize,
    #[command(flatten)]
    pub cap: CapArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodArg {
    Simulate,
    PathSum,
    Both,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AmplitudeArgs {
    #[command(flatten)]
    pub circuit: CircuitArgs,
    #[command(flatten)]
    pub out: OutArgs,
    #[command(flatten)]
    pub cap: CapArgs,
    /// Output bitstring, qubit 0 leftmost
    #[arg(long)]
    pub x: String,
    #[arg(long, value_enum, default_value_t = MethodArg::Simulate)]
    pub method: MethodArg,
    #[arg(long, default_value_t = xeb_core::ising::DEFAULT_ENUMERATION_CAP)]
    pub enumeration_cap: usize,
}
