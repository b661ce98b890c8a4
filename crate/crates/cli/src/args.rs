use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "mobnet",
    version,
    about = "Simulate mobile reaction networks and their fluid limits"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a network description and report every rule it breaks.
    Validate(ValidateArgs),
    /// Estimate a state fraction at the horizon from independent CTMC replicas.
    Sim(SimArgs),
    /// Integrate the spatial ODE system with fixed-step Euler.
    Ode(OdeArgs),
    /// Solve the reaction-diffusion limit by finite differences.
    Pde(PdeArgs),
    /// Tabulate CTMC estimates against the PDE metric over N and K.
    Compare(CompareArgs),
    /// Mean squared displacement of the free lattice random walk.
    Rwcheck(RwArgs),
}

#[derive(Debug, Args)]
pub struct SpecArgs {
    /// JSON network description.
    #[arg(long, conflicts_with = "scenario", required_unless_present = "scenario")]
    pub config: Option<PathBuf>,
    /// Built-in network: epidemic, p2p, onoff or heat.
    #[arg(long)]
    pub scenario: Option<String>,
    /// Time horizon (overrides the network's own).
    #[arg(long = "T")]
    pub horizon: Option<f64>,
    /// Migration rate of the first state.
    #[arg(long)]
    pub mu1: Option<f64>,
    /// Migration rate of the second state.
    #[arg(long)]
    pub mu2: Option<f64>,
    /// Seed the network with V·θ (second state if there are two or more).
    #[arg(long = "V")]
    pub v: Option<f64>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Seed for every random stream; drawn from the OS and printed when omitted.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads for replica and grid parallelism.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// CSV destination (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    /// Print the (overridden) network as JSON after validating it.
    #[arg(long)]
    pub emit: bool,
}

#[derive(Debug, Args)]
pub struct ReplicaArgs {
    #[arg(long, default_value_t = 10)]
    pub replicas_min: u64,
    /// Stop once the 95% half-width is at most this fraction of the mean.
    #[arg(long, default_value_t = 0.05)]
    pub ci_rel: f64,
    #[arg(long, default_value_t = 100_000)]
    pub replica_cap: u64,
}

#[derive(Debug, Args)]
pub struct SimArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    #[command(flatten)]
    pub run: RunArgs,
    #[command(flatten)]
    pub replicas: ReplicaArgs,
    /// Lattice refinement; the grid has (K+1)² regions.
    #[arg(long = "K", default_value_t = 7)]
    pub k: usize,
    /// Population scale.
    #[arg(long = "N", default_value_t = 1)]
    pub n: u64,
    /// State whose fraction is estimated (name or index).
    #[arg(long, default_value = "0")]
    pub state: String,
    /// Write the counts of replica 0 at --snapshot-times to this CSV.
    #[arg(long)]
    pub trajectory_out: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub snapshot_times: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Switch {
    On,
    Off,
}

#[derive(Debug, Args)]
pub struct StepArgs {
    /// Time step: `auto` or a value such as 0.001 or 1/1000.
    #[arg(long, conflicts_with = "auto_dt")]
    pub dt: Option<String>,
    /// Same as `--dt auto`.
    #[arg(long)]
    pub auto_dt: bool,
}

#[derive(Debug, Args)]
pub struct OdeArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    #[command(flatten)]
    pub run: RunArgs,
    #[command(flatten)]
    pub step: StepArgs,
    #[arg(long = "K", default_value_t = 7)]
    pub k: usize,
    /// Times at which fields are written (defaults to 0 and the horizon).
    #[arg(long, value_delimiter = ',')]
    pub snapshot_times: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct PdeArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    #[command(flatten)]
    pub run: RunArgs,
    #[command(flatten)]
    pub step: StepArgs,
    /// Grid spacing, e.g. 1/256.
    #[arg(long, default_value = "1/64")]
    pub ds: String,
    /// Clamp rate arguments to a ball around the initial data.
    #[arg(long, value_enum, default_value_t = Switch::Off)]
    pub clamp: Switch,
    /// Compare successive spacings instead, e.g. 1/256,1/272; writes the
    /// convergence table.
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["snapshot_times", "dt", "auto_dt"])]
    pub refine: Vec<String>,
    /// State whose fraction is reported (name or index).
    #[arg(long, default_value = "0")]
    pub state: String,
    #[arg(long, value_delimiter = ',')]
    pub snapshot_times: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    #[command(flatten)]
    pub run: RunArgs,
    #[command(flatten)]
    pub replicas: ReplicaArgs,
    #[arg(long = "N-list", value_delimiter = ',', default_value = "1")]
    pub n_list: Vec<u64>,
    /// Lattice sizes; large K values take hours of CTMC time.
    #[arg(long = "K-list", value_delimiter = ',', default_value = "7,15")]
    pub k_list: Vec<usize>,
    /// Migration rate of the first state (same as --mu1).
    #[arg(long, conflicts_with = "mu1")]
    pub mu: Option<f64>,
    /// Spacing of the reference PDE solution.
    #[arg(long, default_value = "1/256")]
    pub ds: String,
    #[arg(long, default_value = "0")]
    pub state: String,
}

#[derive(Debug, Args)]
pub struct RwArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Step sizes 1/k.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub k: Vec<u32>,
    /// Total jump rate r_k.
    #[arg(long, default_value_t = 4.0)]
    pub r: f64,
    /// Use r_k = k²·r for each k.
    #[arg(long)]
    pub scale_rate: bool,
    #[arg(long, value_delimiter = ',', default_value = "2")]
    pub t: Vec<f64>,
    #[arg(long, default_value_t = 10_000)]
    pub replicas: u64,
}
