use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "gsr", version, about = "Port and linecard minimising two-segment routing")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Minimise active ports with two-segment routing.
    Optimize(OptimizeArgs),
    /// Shortest-path routing with unneeded ports switched off.
    Baseline(BaselineArgs),
    /// Daily traffic profile and low-load window of a time series.
    Analyze(AnalyzeArgs),
    /// Recompute MLU and energy figures for a stored configuration.
    Evaluate(EvaluateArgs),
    /// Tabulate several methods on one instance.
    Compare(CompareArgs),
    /// Write synthetic inputs.
    #[command(subcommand)]
    Generate(Generate),
    /// Write the explicit port model in LP format.
    ExportLp(ExportLpArgs),
}

#[derive(Debug, Clone, Args)]
pub struct InstanceArgs {
    /// Repetita `.graph` file.
    #[arg(long)]
    pub graph: PathBuf,
    /// Repetita `.demands` file.
    #[arg(long)]
    pub demands: PathBuf,
    /// Name used in reports; defaults to the graph file stem.
    #[arg(long)]
    pub instance: Option<String>,
    /// Factor applied to every demand.
    #[arg(long, default_value_t = 0.5)]
    pub scale: f64,
    #[arg(long, default_value_t = 4)]
    pub ports_per_link: usize,
    /// Capacity of every port; by default the edge bandwidth is split evenly.
    #[arg(long)]
    pub port_capacity: Option<f64>,
    #[arg(long, default_value_t = 8)]
    pub ports_per_linecard: usize,
    /// Pair opposite edges with different bandwidths, keeping the larger.
    #[arg(long)]
    pub accept_asymmetric: bool,
    /// Share of network power drawn by linecards.
    #[arg(long, default_value_t = 0.8)]
    pub linecard_share: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    #[value(name = "2srg")]
    Splitting,
    #[value(name = "2srg-ns")]
    NoSplitting,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EcmpArg {
    Even,
    Single,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Spr,
    #[value(name = "2srg")]
    Splitting,
    #[value(name = "2srg-ns")]
    NoSplitting,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    /// Utilisation cap for every arc.
    #[arg(long, default_value_t = 0.7)]
    pub theta: f64,
    #[arg(long, value_enum, default_value_t = EcmpArg::Even)]
    pub ecmp: EcmpArg,
    /// Wall-clock budget per optimisation, in seconds.
    #[arg(long, default_value_t = 3600.0)]
    pub time_limit: f64,
    /// Branch-and-bound nodes after the root.
    #[arg(long, default_value_t = 200)]
    pub max_nodes: usize,
    /// Run without worker threads.
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Report destination; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    #[command(flatten)]
    pub solve: SolveArgs,
    #[arg(long, value_enum, default_value_t = ModeArg::Splitting)]
    pub mode: ModeArg,
    #[command(flatten)]
    pub output: OutputArgs,
    /// Where to store the configuration document.
    #[arg(long)]
    pub config_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BaselineArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    #[arg(long, default_value_t = 0.7)]
    pub theta: f64,
    #[arg(long, value_enum, default_value_t = EcmpArg::Even)]
    pub ecmp: EcmpArg,
    #[command(flatten)]
    pub output: OutputArgs,
    #[arg(long)]
    pub config_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    /// Configuration document written by `optimize` or `baseline`.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, value_enum, default_value_t = EcmpArg::Even)]
    pub ecmp: EcmpArg,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    #[command(flatten)]
    pub solve: SolveArgs,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [MethodArg::Spr, MethodArg::Splitting, MethodArg::NoSplitting])]
    pub methods: Vec<MethodArg>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// CSV with columns day,slot,total_traffic.
    #[arg(long)]
    pub series: PathBuf,
    /// Defaults to the largest slot index plus one.
    #[arg(long)]
    pub slots_per_day: Option<usize>,
    /// Coverage of the band around the mean.
    #[arg(long, default_value_t = 0.7)]
    pub confidence: f64,
    /// A slot is low when its upper band is at most this fraction of the peak mean.
    #[arg(long, default_value_t = 0.5)]
    pub fraction: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Subcommand)]
pub enum Generate {
    /// Dense gravity demands for a `.graph` file.
    Demands(GenDemandsArgs),
    /// Traffic time series as CSV.
    Series(GenSeriesArgs),
    /// Random connected topology with matching demands.
    Random(GenRandomArgs),
}

#[derive(Debug, Args)]
pub struct GenDemandsArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Utilisation reached by the best two-segment routing.
    #[arg(long, default_value_t = 0.9)]
    pub mlu: f64,
    #[arg(long)]
    pub accept_asymmetric: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SeriesKind {
    /// Backbone-like quarter-hour profile with an overnight trough.
    Isp,
    /// `1 + 0.9 sin(2 pi h / 24 + phase)` plus Gaussian noise.
    Sinusoid,
}

#[derive(Debug, Args)]
pub struct GenSeriesArgs {
    #[arg(long, value_enum)]
    pub kind: SeriesKind,
    #[arg(long, default_value_t = 28)]
    pub days: u32,
    /// Sinusoid only; the ISP profile always uses 96.
    #[arg(long, default_value_t = 24)]
    pub slots_per_day: usize,
    #[arg(long, default_value_t = 0.0)]
    pub phase: f64,
    /// Absolute noise for the sinusoid, relative noise for the ISP profile.
    #[arg(long, default_value_t = 0.02)]
    pub sigma: f64,
    /// Peak level of the ISP profile.
    #[arg(long, default_value_t = 100.0)]
    pub peak: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenRandomArgs {
    #[arg(long, default_value_t = 10)]
    pub nodes: usize,
    #[arg(long, default_value_t = 3.0)]
    pub mean_degree: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Shortest-path utilisation the demands are scaled to.
    #[arg(long, default_value_t = 0.5)]
    pub spr_mlu: f64,
    #[arg(long)]
    pub graph_out: PathBuf,
    #[arg(long)]
    pub demands_out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExportLpArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    #[arg(long, default_value_t = 0.7)]
    pub theta: f64,
    #[arg(long, value_enum, default_value_t = ModeArg::Splitting)]
    pub mode: ModeArg,
    #[arg(long, value_enum, default_value_t = EcmpArg::Even)]
    pub ecmp: EcmpArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
