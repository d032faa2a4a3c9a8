//! Explicit port model with one variable per demand and intermediate, and
//! the exhaustive search built on it.

use std::time::Instant;

use greensr_lp::{solve, Cmp, LpModel, Sense, SolveLimits, Status, VarId, VarKind};
use serde::{Deserialize, Serialize};

use super::{check_inputs, Method, Mode, OptimizationParams, SearchStatus, SrConfiguration};
use crate::error::{Error, Result};
use crate::eval::utilization;
use crate::net::{ActivationPlan, Network, NodeId, PortId, PortRole};
use crate::par::Exec;
use crate::spr::{arc_traffic, compute_fractions, DemandRouting, FlowFractionTable, Routing};
use crate::traffic::TrafficMatrix;

/// Largest instance [`exact_oracle`] accepts.
pub const ORACLE_MAX_PORTS: usize = 10;
pub const ORACLE_MAX_NODES: usize = 6;

/// Shares below this are dropped when reading a routing off a solution.
const READ_TOL: f64 = 1e-7;

#[derive(Debug, Clone)]
pub struct PortLp {
    pub model: LpModel,
    /// `(src, dst, via, variable)` for every splitting variable.
    pub x: Vec<(NodeId, NodeId, NodeId, VarId)>,
    /// Activation variable of every port.
    pub pi: Vec<(PortId, VarId)>,
}

impl PortLp {
    /// Routing encoded by a solution of [`PortLp::model`].
    pub fn routing(&self, values: &[f64]) -> Routing {
        let mut out: Vec<DemandRouting> = Vec::new();
        for &(src, dst, via, var) in &self.x {
            if out.last().is_none_or(|d| (d.src, d.dst) != (src, dst)) {
                out.push(DemandRouting {
                    src,
                    dst,
                    via: Vec::new(),
                });
            }
            let x = values[var.0];
            if x > READ_TOL {
                out.last_mut().map(|d| d.via.push((via, x.min(1.0))));
            }
        }
        for d in &mut out {
            let s: f64 = d.via.iter().map(|x| x.1).sum();
            if s <= 0.0 {
                d.via = vec![(d.dst, 1.0)];
                continue;
            }
            for x in &mut d.via {
                x.1 /= s;
            }
        }
        Routing { demands: out }
    }
}

/// Port-minimising model: splitting variables per demand and intermediate
/// (binary without splitting), port variables relaxed to `[0, 1]` with
/// access ports fixed on, one sum-to-one row per demand and one capacity
/// row per arc.
pub fn build_port_lp(
    network: &Network,
    matrix: &TrafficMatrix,
    table: &FlowFractionTable,
    params: &OptimizationParams,
) -> Result<PortLp> {
    params.validate()?;
    check_inputs(network, matrix, table)?;
    let n = network.num_nodes();
    let allowed: Vec<bool> = match &params.candidates {
        None => vec![true; n],
        Some(c) => (0..n).map(|w| c.contains(&NodeId(w))).collect(),
    };
    let kind = match params.mode {
        Mode::Splitting => VarKind::Continuous,
        Mode::NoSplitting => VarKind::Binary,
    };
    let mut model = LpModel::new(Sense::Minimize);
    let mut pi = Vec::with_capacity(network.ports().len());
    for (i, port) in network.ports().iter().enumerate() {
        let lo = if port.role == PortRole::Access { 1.0 } else { 0.0 };
        let var = model.add_var(format!("pi_{i}"), lo, 1.0, VarKind::Continuous, 1.0);
        pi.push((PortId(i), var));
    }
    let mut rows: Vec<Vec<(VarId, f64)>> = vec![Vec::new(); network.arcs().len()];
    let mut x = Vec::new();
    let mut scratch = vec![0.0; network.arcs().len()];
    for (u, v, t) in matrix.demands() {
        let mut sum = Vec::new();
        for w in network.nodes() {
            if w == u || (w != v && !allowed[w.0]) {
                continue;
            }
            if !table.is_reachable(u, w) || !table.is_reachable(w, v) {
                continue;
            }
            let var = model.add_var(format!("x_{}_{}_{}", u.0, v.0, w.0), 0.0, 1.0, kind, 0.0);
            x.push((u, v, w, var));
            sum.push((var, 1.0));
            table.accumulate(u, w, t, &mut scratch);
            table.accumulate(w, v, t, &mut scratch);
            for (a, g) in scratch.iter_mut().enumerate() {
                if *g != 0.0 {
                    rows[a].push((var, *g));
                    *g = 0.0;
                }
            }
        }
        model.add_constraint(format!("demand_{}_{}", u.0, v.0), sum, Cmp::Eq, 1.0);
    }
    for (a, arc) in network.arcs().iter().enumerate() {
        let mut terms = std::mem::take(&mut rows[a]);
        for p in &network.link(arc.link).ports {
            terms.push((pi[p.0].1, -params.theta * network.ports()[p.0].capacity));
        }
        model.add_constraint(format!("cap_{a}"), terms, Cmp::Le, 0.0);
    }
    Ok(PortLp { model, x, pi })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OracleObjective {
    /// Active ports.
    #[default]
    Ports,
    /// `sum of E_l over active linecards + sum of E_p over active ports`,
    /// on the as-built port to linecard mapping.
    Linecards,
}

/// Provably optimal configuration of a tiny instance, by enumerating every
/// backbone port subset in order of cost and solving the routing
/// feasibility model for each.
pub fn exact_oracle(
    network: &Network,
    matrix: &TrafficMatrix,
    params: &OptimizationParams,
    objective: OracleObjective,
) -> Result<SrConfiguration> {
    params.validate()?;
    if network.ports().len() > ORACLE_MAX_PORTS || network.num_nodes() > ORACLE_MAX_NODES {
        return Err(Error::TooLarge(format!(
            "{} nodes and {} ports, limit {ORACLE_MAX_NODES} and {ORACLE_MAX_PORTS}",
            network.num_nodes(),
            network.ports().len()
        )));
    }
    let table = compute_fractions(network, None, params.ecmp, Exec::Sequential)?;
    let mut lp = build_port_lp(network, matrix, &table, params)?;
    let backbone: Vec<PortId> = network
        .ports()
        .iter()
        .enumerate()
        .filter(|(_, p)| p.role == PortRole::Backbone)
        .map(|(i, _)| PortId(i))
        .collect();

    let plan_of = |mask: u32| -> ActivationPlan {
        let mut active: Vec<bool> = network.ports().iter().map(|p| p.role == PortRole::Access).collect();
        for (b, p) in backbone.iter().enumerate() {
            if mask & (1 << b) != 0 {
                active[p.0] = true;
            }
        }
        let mut plan = ActivationPlan::from_ports(network, active);
        plan.linecard_active = vec![false; network.linecards().len()];
        for (i, port) in network.ports().iter().enumerate() {
            if plan.port_active[i] {
                for lc in port.linecards {
                    plan.linecard_active[lc.0] = true;
                }
            }
        }
        plan
    };
    let cost = |mask: u32| -> f64 {
        match objective {
            OracleObjective::Ports => mask.count_ones() as f64,
            OracleObjective::Linecards => {
                let plan = plan_of(mask);
                let cards: f64 = network
                    .linecards()
                    .iter()
                    .zip(&plan.linecard_active)
                    .filter(|(_, &on)| on)
                    .map(|(c, _)| c.energy)
                    .sum();
                let ports: f64 = network
                    .ports()
                    .iter()
                    .zip(&plan.port_active)
                    .filter(|(_, &on)| on)
                    .map(|(p, _)| network.linecards()[p.linecards[0].0].port_energy)
                    .sum();
                cards + ports
            }
        }
    };
    let mut masks: Vec<(f64, u32)> = (0..1u32 << backbone.len()).map(|m| (cost(m), m)).collect();
    masks.sort_by(|a, b| {
        a.0.total_cmp(&b.0)
            .then(a.1.count_ones().cmp(&b.1.count_ones()))
            .then(a.1.cmp(&b.1))
    });

    let limits = SolveLimits {
        time_limit: params.limits.time_limit,
        ..SolveLimits::default()
    };
    for &(c, mask) in &masks {
        let plan = plan_of(mask);
        for &(p, var) in &lp.pi {
            let on = if plan.port_active[p.0] { 1.0 } else { 0.0 };
            lp.model.set_bounds(var, on, on);
        }
        let sol = solve(&lp.model, &limits)?;
        match sol.status {
            Status::Optimal => {}
            Status::Infeasible => continue,
            Status::TimeLimit => return Err(Error::TimeLimit),
            Status::Unbounded => {
                return Err(Error::InvalidInput("port model reported unbounded".into()))
            }
        }
        let routing = lp.routing(&sol.values);
        let traffic = arc_traffic(&table, matrix, &routing)?;
        let (utilization, mlu) = utilization(network, &plan, &traffic)?;
        return Ok(SrConfiguration {
            method: Method::Exact,
            theta: params.theta,
            routing,
            plan,
            traffic,
            utilization,
            mlu,
            status: SearchStatus::Complete,
            lower_bound: match objective {
                OracleObjective::Ports => Some(c),
                OracleObjective::Linecards => None,
            },
            flagged_links: Vec::new(),
        });
    }
    Err(Error::Infeasible {
        theta: params.theta,
        reason: "no port subset admits a routing".into(),
    })
}

/// Largest single-path model [`single_path_fallback`] will branch on.
const FALLBACK_MAX_VARS: usize = 2_000;
const FALLBACK_MAX_NODES: usize = 200_000;

/// Single-intermediate routing that fits θ with every port active, found by
/// branching on the explicit model. `Ok(None)` when the model is too large
/// or the budget runs out; [`Error::Infeasible`] when no such routing exists.
pub(super) fn single_path_fallback(
    network: &Network,
    matrix: &TrafficMatrix,
    table: &FlowFractionTable,
    params: &OptimizationParams,
    deadline: Instant,
) -> Result<Option<Routing>> {
    if matrix.num_demands() * network.num_nodes() > FALLBACK_MAX_VARS {
        return Ok(None);
    }
    let params = OptimizationParams {
        mode: Mode::NoSplitting,
        ..params.clone()
    };
    let mut lp = build_port_lp(network, matrix, table, &params)?;
    for &(_, var) in &lp.pi {
        lp.model.set_bounds(var, 1.0, 1.0);
    }
    let limits = SolveLimits {
        time_limit: deadline.saturating_duration_since(Instant::now()),
        max_nodes: FALLBACK_MAX_NODES,
    };
    let sol = solve(&lp.model, &limits)?;
    match sol.status {
        Status::Optimal => Ok(Some(lp.routing(&sol.values))),
        Status::TimeLimit if !sol.values.is_empty() => Ok(Some(lp.routing(&sol.values))),
        Status::Infeasible => Err(Error::Infeasible {
            theta: params.theta,
            reason: "no single-intermediate routing fits with every port active".into(),
        }),
        _ => Ok(None),
    }
}
