//! Energy-aware traffic engineering with two-segment routing.
//!
//! Given a network whose links bundle several physical ports, a traffic
//! matrix and a utilisation cap `theta`, [`optimize`] steers each demand
//! over one or more intermediate nodes so that the fewest ports must stay
//! powered. Unused ports are then packed onto linecards that can be switched
//! off ([`pack_linecards`]), and [`energy_report`] summarises the savings.
//!
//! ```
//! use greensr::{optimize, Network, LinecardSpec, NodeId, OptimizationParams, PortRole, TrafficMatrix};
//!
//! let mut b = Network::builder();
//! let (a, c) = (b.add_node("a"), b.add_node("c"));
//! b.add_link(a, c, 1.0, 1.0, &[(10.0, PortRole::Backbone); 4]).unwrap();
//! let net = b.build(LinecardSpec::default()).unwrap();
//! let mut tm = TrafficMatrix::zeros(2);
//! tm.set(NodeId(0), NodeId(1), 12.0).unwrap();
//! let cfg = optimize(&net, &tm, &OptimizationParams::default()).unwrap();
//! assert_eq!(cfg.plan.active_ports(), 2);
//! ```

mod error;
mod eval;
mod net;
pub mod optimizer;
mod par;
pub mod repetita;
mod spr;
pub mod synth;
mod traffic;

pub use error::{Error, Result};
pub use eval::{
    energy_report, evaluate_mlu, pack_linecards, spr_baseline, utilization,
    EnergyReport, LinecardPacking, MluReport, RouterLinecards, LU_TOL,
};
pub use net::{
    arc_capacity, validate_plan, ActivationPlan, Arc, ArcId, Linecard, LinecardId, LinecardSpec, Link,
    LinkId, Network, NetworkBuilder, NodeId, PlanViolation, Port, PortId, PortRole,
};
pub use optimizer::{
    build_port_lp, exact_oracle, min_mlu, optimize, optimize_with_table, round_ports, Method, Mode, OptimizationParams,
    OracleObjective, PortLp, SearchLimits, SearchStatus, SrConfiguration,
};
pub use par::Exec;
pub use spr::{
    arc_traffic, compute_fractions, two_segment_fraction, DemandRouting, EcmpMode, FlowFractionTable,
    Routing, SPLIT_TOL,
};
pub use traffic::{
    band_quantile, detect_low_load, fit_profile, scale_matrix, DailyProfile, Sample, SlotWindow,
    TrafficMatrix, TrafficTimeSeries,
};
