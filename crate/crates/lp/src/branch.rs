//! Best-first branch-and-bound over binary variables.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use crate::model::{LpModel, Sense, VarKind};
use crate::simplex::{SimplexLimits, SimplexStatus};
use crate::{load, LpError, LpSolution, SolveLimits, SolveStats, Status};

const INT_TOL: f64 = 1e-6;

struct Node {
    bound: f64,
    depth: usize,
    fixes: Vec<(usize, f64)>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // max-heap: smaller bound first, then deeper nodes
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then(self.depth.cmp(&other.depth))
    }
}

pub(crate) fn branch_and_bound(
    model: &LpModel,
    limits: &SolveLimits,
    deadline: Instant,
) -> Result<LpSolution, LpError> {
    let (mut s, cols) = load(model);
    let flip = if model.sense == Sense::Maximize { -1.0 } else { 1.0 };
    let binaries: Vec<usize> = model
        .vars()
        .iter()
        .enumerate()
        .filter(|(_, v)| v.kind == VarKind::Binary)
        .map(|(j, _)| j)
        .collect();
    let base_bounds: Vec<(f64, f64)> = binaries
        .iter()
        .map(|&j| (model.vars()[j].lower, model.vars()[j].upper))
        .collect();

    let mut heap = BinaryHeap::new();
    heap.push(Node {
        bound: f64::NEG_INFINITY,
        depth: 0,
        fixes: Vec::new(),
    });
    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    let mut nodes = 0usize;
    let mut root_unbounded = false;
    let mut exhausted = true;
    let slimits = SimplexLimits {
        max_iterations: u64::MAX,
        deadline: Some(deadline),
    };

    while let Some(node) = heap.pop() {
        if let Some((best, _)) = &incumbent {
            if node.bound >= best - 1e-9 * (1.0 + best.abs()) {
                continue;
            }
        }
        if nodes >= limits.max_nodes || Instant::now() >= deadline {
            exhausted = false;
            break;
        }
        nodes += 1;
        for (k, &j) in binaries.iter().enumerate() {
            s.set_bounds(cols[j], base_bounds[k].0, base_bounds[k].1);
        }
        for &(j, v) in &node.fixes {
            s.set_bounds(cols[j], v, v);
        }
        match s.solve(&slimits) {
            SimplexStatus::Optimal => {}
            SimplexStatus::Infeasible => continue,
            SimplexStatus::Unbounded => {
                if node.depth == 0 {
                    root_unbounded = true;
                    break;
                }
                continue;
            }
            SimplexStatus::TimeLimit | SimplexStatus::IterationLimit => {
                exhausted = false;
                break;
            }
        }
        let obj = s.objective();
        if let Some((best, _)) = &incumbent {
            if obj >= best - 1e-9 * (1.0 + best.abs()) {
                continue;
            }
        }
        let branch_var = binaries
            .iter()
            .map(|&j| (j, s.value(cols[j])))
            .filter(|(_, v)| (v - v.round()).abs() > INT_TOL)
            .max_by(|a, b| {
                let fa = 0.5 - (a.1 - a.1.floor() - 0.5).abs();
                let fb = 0.5 - (b.1 - b.1.floor() - 0.5).abs();
                fa.total_cmp(&fb).then(b.0.cmp(&a.0))
            });
        match branch_var {
            None => {
                let mut values: Vec<f64> = cols.iter().map(|&c| s.value(c)).collect();
                for &j in &binaries {
                    values[j] = values[j].round();
                }
                incumbent = Some((flip * model.objective_value(&values), values));
            }
            Some((j, v)) => {
                for val in [v.round(), 1.0 - v.round()] {
                    let mut fixes = node.fixes.clone();
                    fixes.push((j, val));
                    heap.push(Node {
                        bound: obj,
                        depth: node.depth + 1,
                        fixes,
                    });
                }
            }
        }
    }

    let stats = SolveStats {
        elapsed: Default::default(),
        iterations: s.iterations(),
        nodes,
    };
    if root_unbounded {
        return Ok(LpSolution {
            status: Status::Unbounded,
            values: Vec::new(),
            objective: f64::NAN,
            stats,
        });
    }
    let status = match (&incumbent, exhausted) {
        (Some(_), true) => Status::Optimal,
        (None, true) => Status::Infeasible,
        (_, false) => Status::TimeLimit,
    };
    Ok(LpSolution {
        status,
        values: incumbent.map(|(_, v)| v).unwrap_or_default(),
        objective: f64::NAN,
        stats,
    })
}
