//! Linear and mixed-binary programming for routing models.
//!
//! [`LpModel`] describes a problem independently of how it is solved;
//! [`solve`] runs the in-crate bounded simplex (with best-first
//! branch-and-bound when binaries are present) and re-substitutes the result
//! into the model before returning it, so a defect in the backend surfaces as
//! [`LpError::VerificationFailed`] instead of a silently wrong answer.
//!
//! ```
//! use greensr_lp::{solve, Cmp, LpModel, Sense, SolveLimits, Status};
//!
//! let mut model = LpModel::new(Sense::Minimize);
//! let x = model.add_continuous("x", 0.0, f64::INFINITY, 1.0);
//! model.add_constraint("floor", vec![(x, 1.0)], Cmp::Ge, 3.0);
//! let sol = solve(&model, &SolveLimits::default()).unwrap();
//! assert_eq!(sol.status, Status::Optimal);
//! assert!((sol.values[x.0] - 3.0).abs() < 1e-9);
//! ```

mod branch;
mod error;
mod lp_format;
mod model;
pub mod simplex;
mod verify;

use std::time::{Duration, Instant};

pub use error::LpError;
pub use lp_format::to_lp_string;
pub use model::{Cmp, Constraint, LpModel, RowId, Sense, VarId, VarKind, Variable};
pub use simplex::{Simplex, SimplexLimits, SimplexStatus};
pub use verify::{violations, Violation, CHECK_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
    /// The time or node budget ran out. `values` holds the best integral
    /// point found, or is empty when none was found.
    TimeLimit,
}

#[derive(Debug, Clone, Copy)]
pub struct SolveLimits {
    pub time_limit: Duration,
    /// Branch-and-bound node budget for models with binaries.
    pub max_nodes: usize,
}

impl Default for SolveLimits {
    fn default() -> Self {
        Self {
            time_limit: Duration::from_secs(3600),
            max_nodes: usize::MAX,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct SolveStats {
    pub elapsed: Duration,
    pub iterations: u64,
    pub nodes: usize,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: Status,
    /// One value per model variable; empty when no point is available.
    pub values: Vec<f64>,
    /// Objective in the model's sense; NaN when no point is available.
    pub objective: f64,
    pub stats: SolveStats,
}

impl LpSolution {
    pub fn has_point(&self) -> bool {
        !self.values.is_empty()
    }

    pub fn value(&self, var: VarId) -> f64 {
        self.values[var.0]
    }
}

/// Loads `model` into a fresh simplex in minimisation form.
pub(crate) fn load(model: &LpModel) -> (Simplex, Vec<usize>) {
    let flip = if model.sense == Sense::Maximize { -1.0 } else { 1.0 };
    let mut s = Simplex::new();
    let cols: Vec<usize> = model
        .vars()
        .iter()
        .map(|v| s.add_col(Vec::new(), v.lower, v.upper, flip * v.objective))
        .collect();
    for row in model.constraints() {
        let (lo, hi) = row.bounds();
        let entries: Vec<(usize, f64)> = row.terms.iter().map(|&(v, a)| (cols[v.0], a)).collect();
        s.add_row(lo, hi, &merge_duplicates(entries));
    }
    (s, cols)
}

fn merge_duplicates(mut entries: Vec<(usize, f64)>) -> Vec<(usize, f64)> {
    entries.sort_by_key(|e| e.0);
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(entries.len());
    for (j, a) in entries {
        match out.last_mut() {
            Some(last) if last.0 == j => last.1 += a,
            _ => out.push((j, a)),
        }
    }
    out
}

/// Solves `model`. Pure-continuous models are solved to optimality; models
/// with binaries run best-first branch-and-bound under `limits` and report
/// [`Status::TimeLimit`] with the incumbent when the budget is exhausted.
pub fn solve(model: &LpModel, limits: &SolveLimits) -> Result<LpSolution, LpError> {
    model.validate()?;
    let start = Instant::now();
    let deadline = start + limits.time_limit;
    let mut sol = if model.has_integers() {
        branch::branch_and_bound(model, limits, deadline)?
    } else {
        let (mut s, cols) = load(model);
        let status = s.solve(&SimplexLimits {
            max_iterations: u64::MAX,
            deadline: Some(deadline),
        });
        let status = match status {
            SimplexStatus::Optimal => Status::Optimal,
            SimplexStatus::Infeasible => Status::Infeasible,
            SimplexStatus::Unbounded => Status::Unbounded,
            SimplexStatus::TimeLimit | SimplexStatus::IterationLimit => Status::TimeLimit,
        };
        let values = if status == Status::Optimal {
            cols.iter().map(|&c| s.value(c)).collect()
        } else {
            Vec::new()
        };
        LpSolution {
            status,
            values,
            objective: f64::NAN,
            stats: SolveStats {
                elapsed: Duration::ZERO,
                iterations: s.iterations(),
                nodes: 0,
            },
        }
    };
    if sol.has_point() {
        let bad = violations(model, &sol.values, CHECK_TOL);
        if !bad.is_empty() {
            let shown: Vec<String> = bad.iter().take(5).map(|v| v.to_string()).collect();
            return Err(LpError::VerificationFailed(shown.join("; ")));
        }
        sol.objective = model.objective_value(&sol.values);
    }
    sol.stats.elapsed = start.elapsed();
    Ok(sol)
}
