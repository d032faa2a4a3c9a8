use thiserror::Error;

use crate::net::{ArcId, LinkId, NodeId, PortId};

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown arc {0}")]
    UnknownArc(ArcId),

    #[error("unknown port {0}")]
    UnknownPort(PortId),

    #[error("unknown node {0}")]
    UnknownNode(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("plan covers {got} ports but the network has {expected}")]
    PlanSize { expected: usize, got: usize },

    #[error("fractions of demand {src}->{dst} sum to {sum}")]
    FractionSum { src: NodeId, dst: NodeId, sum: f64 },

    #[error("demand {src}->{dst} has positive volume but no routing")]
    MissingRouting { src: NodeId, dst: NodeId },

    #[error("demand {src}->{dst} connects unreachable nodes")]
    Unreachable { src: NodeId, dst: NodeId },

    #[error("arc {arc} carries {traffic} with no active capacity")]
    TrafficOnInactive { arc: ArcId, traffic: f64 },

    #[error("link {link} needs more capacity than it has")]
    LinkOverload { link: LinkId },

    #[error("no configuration keeps utilisation under {theta}: {reason}")]
    Infeasible { theta: f64, reason: String },

    #[error("solver budget exhausted before a feasible configuration was found")]
    TimeLimit,

    #[error("instance too large for exhaustive search: {0}")]
    TooLarge(String),

    #[error("traffic series: {0}")]
    Series(String),

    #[error(transparent)]
    Lp(#[from] greensr_lp::LpError),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
