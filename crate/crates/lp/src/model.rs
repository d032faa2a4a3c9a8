//! Solver-agnostic description of a linear or mixed-binary program.

use std::fmt;

use crate::error::LpError;

/// Index of a variable inside an [`LpModel`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub usize);

/// Index of a constraint row inside an [`LpModel`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RowId(pub usize);

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

impl fmt::Display for RowId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "r{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Continuous,
    /// Integral in `{0, 1}`; bounds are intersected with `[0, 1]`.
    Binary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cmp {
    Le,
    Ge,
    Eq,
}

impl Cmp {
    pub(crate) fn symbol(self) -> &'static str {
        match self {
            Cmp::Le => "<=",
            Cmp::Ge => ">=",
            Cmp::Eq => "=",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub kind: VarKind,
    pub objective: f64,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub name: String,
    pub terms: Vec<(VarId, f64)>,
    pub cmp: Cmp,
    pub rhs: f64,
}

impl Constraint {
    pub fn activity(&self, values: &[f64]) -> f64 {
        self.terms.iter().map(|&(v, a)| a * values[v.0]).sum()
    }

    /// Row activity interval `[lo, hi]` implied by the comparison.
    pub fn bounds(&self) -> (f64, f64) {
        match self.cmp {
            Cmp::Le => (f64::NEG_INFINITY, self.rhs),
            Cmp::Ge => (self.rhs, f64::INFINITY),
            Cmp::Eq => (self.rhs, self.rhs),
        }
    }
}

/// A linear program with optional binary variables.
///
/// Models are built incrementally and are immutable once handed to
/// [`crate::solve`].
#[derive(Debug, Clone)]
pub struct LpModel {
    pub sense: Sense,
    vars: Vec<Variable>,
    rows: Vec<Constraint>,
}

impl Default for LpModel {
    fn default() -> Self {
        Self::new(Sense::Minimize)
    }
}

impl LpModel {
    pub fn new(sense: Sense) -> Self {
        Self {
            sense,
            vars: Vec::new(),
            rows: Vec::new(),
        }
    }

    pub fn add_var(
        &mut self,
        name: impl Into<String>,
        lower: f64,
        upper: f64,
        kind: VarKind,
        objective: f64,
    ) -> VarId {
        let (lower, upper) = match kind {
            VarKind::Continuous => (lower, upper),
            VarKind::Binary => (lower.max(0.0), upper.min(1.0)),
        };
        self.vars.push(Variable {
            name: name.into(),
            lower,
            upper,
            kind,
            objective,
        });
        VarId(self.vars.len() - 1)
    }

    pub fn add_continuous(&mut self, name: impl Into<String>, lower: f64, upper: f64, objective: f64) -> VarId {
        self.add_var(name, lower, upper, VarKind::Continuous, objective)
    }

    pub fn add_binary(&mut self, name: impl Into<String>, objective: f64) -> VarId {
        self.add_var(name, 0.0, 1.0, VarKind::Binary, objective)
    }

    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        terms: Vec<(VarId, f64)>,
        cmp: Cmp,
        rhs: f64,
    ) -> RowId {
        self.rows.push(Constraint {
            name: name.into(),
            terms,
            cmp,
            rhs,
        });
        RowId(self.rows.len() - 1)
    }

    pub fn set_objective(&mut self, var: VarId, coef: f64) {
        self.vars[var.0].objective = coef;
    }

    pub fn set_bounds(&mut self, var: VarId, lower: f64, upper: f64) {
        self.vars[var.0].lower = lower;
        self.vars[var.0].upper = upper;
    }

    pub fn vars(&self) -> &[Variable] {
        &self.vars
    }

    pub fn var(&self, id: VarId) -> &Variable {
        &self.vars[id.0]
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.rows
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.rows.len()
    }

    pub fn has_integers(&self) -> bool {
        self.vars.iter().any(|v| v.kind == VarKind::Binary)
    }

    /// Objective value of `values` in the model's own sense.
    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.vars
            .iter()
            .zip(values)
            .map(|(v, x)| v.objective * x)
            .sum()
    }

    /// Checks that every row references declared variables and that bounds
    /// are ordered and not NaN.
    pub fn validate(&self) -> Result<(), LpError> {
        for (j, v) in self.vars.iter().enumerate() {
            if v.lower.is_nan() || v.upper.is_nan() || v.objective.is_nan() {
                return Err(LpError::InvalidModel(format!("variable {} has NaN data", v.name)));
            }
            if v.lower > v.upper {
                return Err(LpError::InvalidModel(format!(
                    "variable {} (#{j}) has lower bound {} above upper bound {}",
                    v.name, v.lower, v.upper
                )));
            }
            if v.lower == f64::INFINITY || v.upper == f64::NEG_INFINITY {
                return Err(LpError::InvalidModel(format!(
                    "variable {} has an empty domain",
                    v.name
                )));
            }
        }
        for row in &self.rows {
            if row.rhs.is_nan() {
                return Err(LpError::InvalidModel(format!("row {} has NaN rhs", row.name)));
            }
            for &(v, a) in &row.terms {
                if v.0 >= self.vars.len() {
                    return Err(LpError::UnknownVariable {
                        row: row.name.clone(),
                        var: v.0,
                    });
                }
                if !a.is_finite() {
                    return Err(LpError::InvalidModel(format!(
                        "row {} has non-finite coefficient for {}",
                        row.name, self.vars[v.0].name
                    )));
                }
            }
        }
        Ok(())
    }
}
