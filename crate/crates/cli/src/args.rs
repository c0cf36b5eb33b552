use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nsp_core::audit::Fault;
use nsp_core::engine::ExecutionMode;
use nsp_core::runtime::{CommodityStrategy, PartyId};
use nsp_core::shares::IntRange;

#[derive(Debug, Parser)]
#[command(name = "nsp", version, about = "Privacy-preserving n-party scalar product")]
pub struct Cli {
    /// More log output on stderr (repeat for more).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the protocol and print the result document.
    Run(RunArgs),
    /// Run the protocol and compare with the plaintext product.
    Verify(RunArgs),
    /// Protocol and message counts of fully recursive runs.
    Counts(CountsArgs),
    /// Time the protocol over a grid of party counts and vector lengths.
    Bench(BenchArgs),
    /// Run the protocol, then let a coalition try to recover a target's input.
    Attack(AttackArgs),
    /// Dump the symbolic expansion of the chain.
    Expand(ExpandArgs),
    /// Audit an exported transcript.
    Audit(AuditArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Full,
    Shortcut,
}

impl From<ModeArg> for ExecutionMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Full => ExecutionMode::FullRecursive,
            ModeArg::Shortcut => ExecutionMode::Shortcut,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    NaivePool,
    PartyReuse,
}

impl From<StrategyArg> for CommodityStrategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::NaivePool => CommodityStrategy::NaivePool,
            StrategyArg::PartyReuse => CommodityStrategy::PartyReuse,
        }
    }
}

/// Protocol parameters shared by every command that runs the protocol.
#[derive(Clone, Debug, Args)]
pub struct ProtocolArgs {
    /// Number of parties; defaults to the number of --input files, or 3.
    #[arg(short = 'n', long)]
    pub parties: Option<usize>,

    /// Vector length for synthetic data.
    #[arg(short = 'm', long, default_value_t = 10)]
    pub length: usize,

    /// Root seed for synthetic data and all protocol randomness.
    #[arg(short, long, default_value_t = 0)]
    pub seed: u64,

    /// Synthetic entries are drawn from LOW..HIGH (high exclusive).
    #[arg(long, default_value = "0..2", allow_hyphen_values = true)]
    pub value_range: IntRange,

    #[arg(long, value_enum, default_value_t = ModeArg::Full)]
    pub mode: ModeArg,

    #[arg(long, value_enum, default_value_t = StrategyArg::NaivePool)]
    pub strategy: StrategyArg,

    /// Compute modulo this prime and lift the result back to the integers.
    #[arg(long)]
    pub modulus: Option<String>,

    /// One vector file per party, in party order (.json, anything else is CSV).
    #[arg(short, long = "input")]
    pub inputs: Vec<PathBuf>,

    /// Use the published three-party worked example: its shares and v2 at the
    /// top level, and its vectors unless --input is given.
    #[arg(long, alias = "replay-appendix-b")]
    pub replay_worked_example: bool,

    /// Worker threads for sibling subprotocols; results do not depend on it.
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
}

#[derive(Clone, Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub protocol: ProtocolArgs,

    /// Also compute the plaintext product and compare.
    #[arg(long)]
    pub verify: bool,

    /// Check every protocol instance, not just the result, against the oracle.
    #[arg(long)]
    pub debug_verify: bool,

    /// Audit the run's transcript; violations make the exit status 1.
    #[arg(long)]
    pub audit: bool,

    /// Tamper with the transcript before auditing and exporting it.
    #[arg(long, value_parser = parse_fault)]
    pub inject_fault: Option<Fault>,

    /// Write the transcript as JSON Lines.
    #[arg(long)]
    pub transcript: Option<PathBuf>,

    /// Include message payloads in the exported transcript.
    #[arg(long)]
    pub audit_payloads: bool,

    /// Write the party vectors used into this directory.
    #[arg(long)]
    pub dump_inputs: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    /// Leave wall-clock time out of the result document.
    #[arg(long)]
    pub no_timing: bool,
}

#[derive(Clone, Debug, Args)]
pub struct CountsArgs {
    /// Largest party count in the table.
    #[arg(long, default_value_t = 7)]
    pub n_max: usize,

    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Clone, Debug, Args)]
pub struct BenchArgs {
    /// Smallest party count.
    #[arg(long, default_value_t = 2)]
    pub n_min: usize,

    /// Largest party count.
    #[arg(long, default_value_t = 5)]
    pub n_max: usize,

    /// Vector lengths, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [100usize, 1000, 10000])]
    pub lengths: Vec<usize>,

    /// Repetitions per cell.
    #[arg(long, default_value_t = 3)]
    pub reps: usize,

    #[arg(short, long, default_value_t = 0)]
    pub seed: u64,

    #[arg(long, default_value = "0..2", allow_hyphen_values = true)]
    pub value_range: IntRange,

    #[arg(long, value_enum, default_value_t = ModeArg::Full)]
    pub mode: ModeArg,

    #[arg(long, value_enum, default_value_t = StrategyArg::NaivePool)]
    pub strategy: StrategyArg,

    #[arg(long, default_value_t = 1)]
    pub threads: usize,

    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Clone, Debug, Args)]
pub struct AttackArgs {
    #[command(flatten)]
    pub protocol: ProtocolArgs,

    /// Colluding parties, comma separated: P2, S1 (or merlin), or a bare number.
    #[arg(long, value_delimiter = ',', required = true, value_parser = parse_party)]
    pub coalition: Vec<PartyId>,

    /// Party whose input the coalition tries to recover.
    #[arg(long, value_parser = parse_party)]
    pub target: PartyId,
}

#[derive(Clone, Debug, Args)]
pub struct ExpandArgs {
    /// Party count, 2 to 6.
    #[arg(short = 'n', long)]
    pub parties: usize,

    /// Replace the share sum by the product of all random matrices.
    #[arg(long)]
    pub share_identity: bool,

    /// Text lists one term per line.
    #[arg(long, value_enum, default_value_t = ExpandFormat::Text)]
    pub format: ExpandFormat,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ExpandFormat {
    Text,
    Json,
}

#[derive(Clone, Debug, Args)]
pub struct AuditArgs {
    /// Transcript in JSON Lines, as written by `run --transcript`.
    pub transcript: PathBuf,
}

fn parse_party(s: &str) -> Result<PartyId, String> {
    s.parse().map_err(|e: nsp_core::Error| e.to_string())
}

fn parse_fault(s: &str) -> Result<Fault, String> {
    s.parse().map_err(|e: nsp_core::Error| e.to_string())
}
