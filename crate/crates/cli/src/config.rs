//! Validated run parameters assembled from the command line.

use std::path::{Path, PathBuf};
use std::time::Duration;

use greensr::repetita::{expand_ports, parse_demands, parse_graph, RepetitaOptions};
use greensr::{scale_matrix, EcmpMode, Exec, Mode, Network, OptimizationParams, SearchLimits, TrafficMatrix};

use crate::args::{EcmpArg, InstanceArgs, ModeArg, SolveArgs};
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub graph: PathBuf,
    pub demands: PathBuf,
    pub instance: String,
    pub theta: f64,
    pub scale: f64,
    pub ports_per_link: usize,
    pub port_capacity: Option<f64>,
    pub ports_per_linecard: usize,
    pub linecard_share: f64,
    pub accept_asymmetric: bool,
    pub mode: Mode,
    pub ecmp: EcmpMode,
    pub limits: SearchLimits,
    pub exec: Exec,
}

pub fn ecmp(e: EcmpArg) -> EcmpMode {
    match e {
        EcmpArg::Even => EcmpMode::EvenSplit,
        EcmpArg::Single => EcmpMode::SinglePath,
    }
}

pub fn mode(m: ModeArg) -> Mode {
    match m {
        ModeArg::Splitting => Mode::Splitting,
        ModeArg::NoSplitting => Mode::NoSplitting,
    }
}

fn positive(name: &str, x: f64) -> CliResult<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(CliError::Config(format!("{name} must be positive, got {x}")))
    }
}

impl RunConfig {
    pub fn new(inst: &InstanceArgs, theta: f64, ecmp_arg: EcmpArg) -> CliResult<Self> {
        let instance = inst.instance.clone().unwrap_or_else(|| {
            inst.graph
                .file_stem()
                .map_or_else(|| "instance".into(), |s| s.to_string_lossy().into_owned())
        });
        let c = Self {
            graph: inst.graph.clone(),
            demands: inst.demands.clone(),
            instance,
            theta,
            scale: inst.scale,
            ports_per_link: inst.ports_per_link,
            port_capacity: inst.port_capacity,
            ports_per_linecard: inst.ports_per_linecard,
            linecard_share: inst.linecard_share,
            accept_asymmetric: inst.accept_asymmetric,
            mode: Mode::Splitting,
            ecmp: ecmp(ecmp_arg),
            limits: SearchLimits::default(),
            exec: Exec::default(),
        };
        c.validate()?;
        Ok(c)
    }

    pub fn with_solve(mut self, s: &SolveArgs) -> CliResult<Self> {
        positive("time limit", s.time_limit)?;
        self.limits = SearchLimits {
            time_limit: Duration::from_secs_f64(s.time_limit),
            max_nodes: s.max_nodes,
        };
        self.exec = if s.sequential { Exec::Sequential } else { Exec::Parallel };
        Ok(self)
    }

    pub fn validate(&self) -> CliResult<()> {
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(CliError::Config(format!("theta must lie in (0, 1], got {}", self.theta)));
        }
        positive("scale", self.scale)?;
        if let Some(c) = self.port_capacity {
            positive("port capacity", c)?;
        }
        if self.ports_per_link == 0 || self.ports_per_linecard == 0 {
            return Err(CliError::Config("port counts must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.linecard_share) {
            return Err(CliError::Config(format!(
                "linecard share must lie in [0, 1], got {}",
                self.linecard_share
            )));
        }
        Ok(())
    }

    pub fn params(&self, mode: Mode) -> OptimizationParams {
        OptimizationParams {
            theta: self.theta,
            mode,
            ecmp: self.ecmp,
            limits: self.limits,
            candidates: None,
            exec: self.exec,
        }
    }

    /// Reads, expands and scales the instance.
    pub fn load(&self) -> CliResult<(Network, TrafficMatrix)> {
        let net = read_graph(&self.graph, self.accept_asymmetric)?;
        let text = read(&self.demands)?;
        let m = parse_demands(&text, net.num_nodes()).map_err(|e| input(&self.demands, e))?;
        let net = expand_ports(&net, self.ports_per_link, self.port_capacity, self.ports_per_linecard)?;
        Ok((net, scale_matrix(&m, self.scale)?))
    }
}

pub fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.display().to_string(),
        source,
    })
}

fn input(path: &Path, e: greensr::Error) -> CliError {
    match e {
        greensr::Error::Parse { line, msg } => greensr::Error::Parse {
            line,
            msg: format!("{}: {msg}", path.display()),
        }
        .into(),
        other => other.into(),
    }
}

pub fn read_graph(path: &Path, accept_asymmetric: bool) -> CliResult<Network> {
    let text = read(path)?;
    parse_graph(&text, RepetitaOptions { accept_asymmetric }).map_err(|e| input(path, e))
}
