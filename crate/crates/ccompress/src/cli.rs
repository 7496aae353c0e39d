//! Command-line arguments.
//!
//! The argument structs double as the config echo: each serializes to the
//! `config` object embedded in every output, and the default seed is a hash
//! of that object (see [`crate::commands::RunConfig`]).

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "ccompress", version, about = "Compress two-party protocols, evaluate information cost and direct-sum bounds, and run random-subspace experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Root seed; derived from a hash of the configuration when omitted.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Output file, written atomically; standard output when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Output format. Defaults to csv for `quantum` and json otherwise.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Information cost, communication cost and error of a protocol.
    InfoCost(InfoCostArgs),
    /// Compress a simultaneous-message or k-round protocol.
    Compress(CompressArgs),
    /// Direct-sum lower bounds.
    Bounds(BoundsArgs),
    /// Substate decomposition of P against Q.
    Substate(SubstateArgs),
    /// Independent runs of the rejection sampler, one JSON line per run.
    Sample(SampleArgs),
    /// Random-subspace experiments.
    #[command(subcommand)]
    Quantum(QuantumCommand),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::InfoCost(_) => "info-cost",
            Command::Compress(_) => "compress",
            Command::Bounds(_) => "bounds",
            Command::Substate(_) => "substate",
            Command::Sample(_) => "sample",
            Command::Quantum(QuantumCommand::Tails(_)) => "quantum tails",
            Command::Quantum(QuantumCommand::Ensemble(_)) => "quantum ensemble",
            Command::Quantum(QuantumCommand::Incompress(_)) => "quantum incompress",
        }
    }

    pub fn default_format(&self) -> Format {
        match self {
            Command::Quantum(_) => Format::Csv,
            _ => Format::Json,
        }
    }

    /// Files the command reads, by role.
    pub fn input_files(&self) -> Vec<(&'static str, &Path)> {
        match self {
            Command::InfoCost(a) => vec![("protocol", &a.protocol), ("function", &a.function), ("inputs", &a.inputs)]
                .into_iter()
                .map(|(n, p)| (n, p.as_path()))
                .collect(),
            Command::Compress(a) => [Some(("protocol", a.protocol.as_path())), Some(("function", a.function.as_path())), opt("inputs", &a.inputs)]
                .into_iter()
                .flatten()
                .collect(),
            Command::Bounds(a) => [opt("protocol", &a.protocol), opt("function", &a.function), opt("inputs", &a.inputs)]
                .into_iter()
                .flatten()
                .collect(),
            Command::Substate(SubstateArgs { p, q, .. }) | Command::Sample(SampleArgs { p, q, .. }) => {
                vec![("p", p.as_path()), ("q", q.as_path())]
            }
            Command::Quantum(QuantumCommand::Incompress(a)) => opt("ensemble", &a.ensemble).into_iter().collect(),
            Command::Quantum(_) => Vec::new(),
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct InfoCostArgs {
    /// Protocol file.
    #[arg(long)]
    pub protocol: PathBuf,
    /// Function file.
    #[arg(long)]
    pub function: PathBuf,
    /// Input distribution file.
    #[arg(long)]
    pub inputs: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Simultaneous-message protocol under uniform inputs.
    Simul,
    /// k-round protocol tree under the given input distribution.
    Rounds,
}

#[derive(Debug, Args, Serialize)]
pub struct CompressArgs {
    #[arg(long, value_enum)]
    pub mode: Mode,
    /// Protocol file (simultaneous-message format for `--mode simul`).
    #[arg(long)]
    pub protocol: PathBuf,
    #[arg(long)]
    pub function: PathBuf,
    /// Input distribution; required for `--mode rounds`.
    #[arg(long)]
    pub inputs: Option<PathBuf>,
    /// Error slack.
    #[arg(long)]
    pub eps: f64,
    /// Coin realizations tried before giving up (rounds mode).
    #[arg(long, default_value_t = 64)]
    pub budget: usize,
    /// log2 of the stream cap per sampler; `ceil(a) + 20` when omitted
    /// (rounds mode).
    #[arg(long)]
    pub tmax: Option<u32>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundKind {
    /// k-round bound from a supplied C and H(kappa).
    Multiround,
    /// Simultaneous-message bound from a supplied R~.
    Simul,
    /// Information-cost lower bound with C found by exhaustive search.
    Ic,
    /// Conditional information cost of m independent copies.
    Superadditivity,
}

#[derive(Debug, Args, Serialize)]
pub struct BoundsArgs {
    #[arg(long, value_enum)]
    pub kind: BoundKind,
    /// Number of copies m.
    #[arg(long, default_value_t = 1)]
    pub copies: u64,
    /// Number of rounds k.
    #[arg(long, default_value_t = 1)]
    pub rounds: u64,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    pub delta: f64,
    /// Distributional complexity C (multiround).
    #[arg(long)]
    pub c_value: Option<f64>,
    /// Entropy of the partition variable (multiround); taken from
    /// `--inputs` when that file gives a partition.
    #[arg(long)]
    pub h_kappa: Option<f64>,
    /// Public-coin complexity R~ (simul).
    #[arg(long)]
    pub r_tilde: Option<f64>,
    /// Input length in bits (simul).
    #[arg(long)]
    pub n: Option<u64>,
    /// Bits per round in the exhaustive search (ic).
    #[arg(long, default_value_t = 1)]
    pub bits_per_round: u32,
    /// Protocol file: a witness checked against the bound (ic), or the
    /// single-copy protocol (superadditivity).
    #[arg(long)]
    pub protocol: Option<PathBuf>,
    #[arg(long)]
    pub function: Option<PathBuf>,
    #[arg(long)]
    pub inputs: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct SubstateArgs {
    /// Distribution P.
    #[arg(long)]
    pub p: PathBuf,
    /// Distribution Q.
    #[arg(long)]
    pub q: PathBuf,
    /// Slack r >= 1.
    #[arg(long)]
    pub r: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct SampleArgs {
    /// Target distribution P.
    #[arg(long)]
    pub p: PathBuf,
    /// Stream distribution Q.
    #[arg(long)]
    pub q: PathBuf,
    /// Target abort probability; the sampler runs at r = 1/eps.
    #[arg(long)]
    pub eps: f64,
    /// Number of independent runs.
    #[arg(long, default_value_t = 16)]
    pub draws: u64,
    /// log2 of the stream cap; `ceil(a) + 20` when omitted.
    #[arg(long)]
    pub tmax: Option<u32>,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuantumCommand {
    /// Tail frequencies of random unit vectors and subspaces against their bounds.
    Tails(TailsArgs),
    /// Build the state ensemble and check its identities.
    Ensemble(EnsembleArgs),
    /// POVM values of random low-dimensional subspaces on the ensemble.
    Incompress(IncompressArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailKind {
    All,
    Overlap,
    Orthopair,
    Energy,
}

#[derive(Debug, Args, Serialize)]
pub struct TailsArgs {
    /// Ambient dimension m.
    #[arg(long, default_value_t = 512)]
    pub dim: usize,
    /// Subspace dimension d.
    #[arg(long, default_value_t = 2)]
    pub subdim: usize,
    /// Number of blocks l; the projector keeps the first m/l coordinates.
    #[arg(long, default_value_t = 4)]
    pub blocks: usize,
    #[arg(long, default_value_t = 10_000)]
    pub trials: u64,
    #[arg(long, value_enum, default_value_t = TailKind::All)]
    pub experiment: TailKind,
}

#[derive(Debug, Args, Serialize)]
pub struct EnsembleArgs {
    /// Dimension m.
    #[arg(long, default_value_t = 64)]
    pub dim: usize,
    /// Block exponent k: each state spans 2^k basis vectors.
    #[arg(long, default_value_t = 1)]
    pub kexp: u32,
    /// Number of basis vectors n used per basis.
    #[arg(long, default_value_t = 16)]
    pub states: usize,
    /// Also write the bases to this JSON file.
    #[arg(long)]
    pub save: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct IncompressArgs {
    /// Dimension m [default: 64].
    #[arg(long, conflicts_with = "ensemble")]
    pub dim: Option<usize>,
    /// Block exponent k [default: 1].
    #[arg(long, conflicts_with = "ensemble")]
    pub kexp: Option<u32>,
    /// Number of states n [default: 16].
    #[arg(long, conflicts_with = "ensemble")]
    pub states: Option<usize>,
    /// Dimension d of the test subspaces.
    #[arg(long, default_value_t = 2)]
    pub subdim: usize,
    /// Subspaces drawn per kind.
    #[arg(long, default_value_t = 8)]
    pub samples: usize,
    /// Use an ensemble saved by `quantum ensemble --save` instead of
    /// drawing one.
    #[arg(long)]
    pub ensemble: Option<PathBuf>,
}

fn opt<'a>(name: &'static str, p: &'a Option<PathBuf>) -> Option<(&'static str, &'a Path)> {
    p.as_deref().map(|p| (name, p))
}
