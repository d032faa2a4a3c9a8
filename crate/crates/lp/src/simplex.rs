//! Bounded-variable revised primal simplex with an explicit dense basis
//! inverse.
//!
//! Every row `i` carries a logical variable `s_i` and the constraint is kept
//! as `sum_j a_ij x_j - s_i = 0`; row bounds become bounds on `s_i`. The
//! engine is warm-startable: columns and rows can be appended and bounds or
//! costs changed between calls to [`Simplex::solve`], which then resumes from
//! the previous basis. Infeasible starting points are repaired with a
//! composite phase 1 that minimises the sum of bound violations of the basic
//! variables.

use std::time::{Duration, Instant};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimplexStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
    TimeLimit,
}

#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    pub primal: f64,
    pub dual: f64,
    pub pivot: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            primal: 1e-9,
            dual: 1e-9,
            pivot: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SimplexLimits {
    pub max_iterations: u64,
    pub deadline: Option<Instant>,
}

impl Default for SimplexLimits {
    fn default() -> Self {
        Self {
            max_iterations: u64::MAX,
            deadline: None,
        }
    }
}

impl SimplexLimits {
    pub fn with_time_limit(limit: Duration) -> Self {
        Self {
            max_iterations: u64::MAX,
            deadline: Some(Instant::now() + limit),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum State {
    Basic,
    Lower,
    Upper,
    /// Nonbasic free variable resting at zero.
    Zero,
}

#[derive(Debug, Clone)]
pub struct Simplex {
    cols: Vec<Vec<(usize, f64)>>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    cost: Vec<f64>,
    x: Vec<f64>,
    state: Vec<State>,
    basis: Vec<usize>,
    binv: Vec<f64>,
    m: usize,
    row_var: Vec<usize>,
    duals: Vec<f64>,
    dirty: bool,
    stale_x: bool,
    since_refactor: usize,
    iterations: u64,
    pub tol: Tolerances,
    pub refactor_every: usize,
}

impl Default for Simplex {
    fn default() -> Self {
        Self::new()
    }
}

struct Ratio {
    step: f64,
    leaving: Option<(usize, f64)>,
}

impl Simplex {
    pub fn new() -> Self {
        Self {
            cols: Vec::new(),
            lower: Vec::new(),
            upper: Vec::new(),
            cost: Vec::new(),
            x: Vec::new(),
            state: Vec::new(),
            basis: Vec::new(),
            binv: Vec::new(),
            m: 0,
            row_var: Vec::new(),
            duals: Vec::new(),
            dirty: false,
            stale_x: false,
            since_refactor: 0,
            iterations: 0,
            tol: Tolerances::default(),
            refactor_every: 100,
        }
    }

    pub fn num_rows(&self) -> usize {
        self.m
    }

    pub fn num_vars(&self) -> usize {
        self.cols.len()
    }

    pub fn iterations(&self) -> u64 {
        self.iterations
    }

    /// Appends a row with activity bounds `[lo, hi]` and coefficients on
    /// already existing variables. Returns the row index; its logical
    /// variable is [`Simplex::row_var`].
    pub fn add_row(&mut self, lo: f64, hi: f64, entries: &[(usize, f64)]) -> usize {
        let row = self.m;
        for &(j, a) in entries {
            if a != 0.0 {
                self.cols[j].push((row, a));
            }
        }
        let activity: f64 = entries.iter().map(|&(j, a)| a * self.x[j]).sum();
        let s = self.push_var(vec![(row, -1.0)], lo, hi, 0.0);
        self.state[s] = State::Basic;
        self.x[s] = activity;
        self.basis.push(s);
        self.row_var.push(s);
        self.m += 1;
        self.dirty = true;
        self.stale_x = true;
        row
    }

    /// Appends a structural column. It enters as nonbasic at its finite
    /// bound closest to zero.
    pub fn add_col(&mut self, entries: Vec<(usize, f64)>, lo: f64, hi: f64, cost: f64) -> usize {
        debug_assert!(entries.iter().all(|&(i, _)| i < self.m));
        let entries = entries.into_iter().filter(|&(_, a)| a != 0.0).collect();
        let j = self.push_var(entries, lo, hi, cost);
        if self.x[j] != 0.0 {
            self.stale_x = true;
        }
        j
    }

    fn push_var(&mut self, col: Vec<(usize, f64)>, lo: f64, hi: f64, cost: f64) -> usize {
        let (state, value) = Self::resting_point(lo, hi);
        self.cols.push(col);
        self.lower.push(lo);
        self.upper.push(hi);
        self.cost.push(cost);
        self.x.push(value);
        self.state.push(state);
        self.cols.len() - 1
    }

    fn resting_point(lo: f64, hi: f64) -> (State, f64) {
        match (lo.is_finite(), hi.is_finite()) {
            (true, true) if lo.abs() <= hi.abs() => (State::Lower, lo),
            (true, true) => (State::Upper, hi),
            (true, false) => (State::Lower, lo),
            (false, true) => (State::Upper, hi),
            (false, false) => (State::Zero, 0.0),
        }
    }

    pub fn row_var(&self, row: usize) -> usize {
        self.row_var[row]
    }

    pub fn set_cost(&mut self, j: usize, cost: f64) {
        self.cost[j] = cost;
    }

    pub fn cost(&self, j: usize) -> f64 {
        self.cost[j]
    }

    pub fn bounds(&self, j: usize) -> (f64, f64) {
        (self.lower[j], self.upper[j])
    }

    pub fn column(&self, j: usize) -> &[(usize, f64)] {
        &self.cols[j]
    }

    pub fn set_bounds(&mut self, j: usize, lo: f64, hi: f64) {
        self.lower[j] = lo;
        self.upper[j] = hi;
        if self.state[j] == State::Basic {
            return;
        }
        let (state, value) = match self.state[j] {
            State::Lower if lo.is_finite() => (State::Lower, lo),
            State::Upper if hi.is_finite() => (State::Upper, hi),
            _ => Self::resting_point(lo, hi),
        };
        if value != self.x[j] {
            self.stale_x = true;
        }
        self.state[j] = state;
        self.x[j] = value;
    }

    pub fn is_basic(&self, j: usize) -> bool {
        self.state[j] == State::Basic
    }

    pub fn value(&self, j: usize) -> f64 {
        self.x[j]
    }

    pub fn values(&self) -> &[f64] {
        &self.x
    }

    /// Row activity `sum_j a_ij x_j`, i.e. the value of the row's logical.
    pub fn row_activity(&self, row: usize) -> f64 {
        self.x[self.row_var[row]]
    }

    /// Simplex multiplier of `row` from the last optimal solve. For a
    /// minimisation, binding `<=` rows have non-positive duals.
    pub fn row_dual(&self, row: usize) -> f64 {
        self.duals.get(row).copied().unwrap_or(0.0)
    }

    pub fn duals(&self) -> &[f64] {
        &self.duals
    }

    pub fn reduced_cost(&self, j: usize) -> f64 {
        self.cost[j] - self.cols[j].iter().map(|&(i, a)| self.duals[i] * a).sum::<f64>()
    }

    pub fn objective(&self) -> f64 {
        self.cost.iter().zip(&self.x).map(|(c, x)| c * x).sum()
    }

    /// Largest bound violation over all variables, logicals included.
    pub fn max_infeasibility(&self) -> f64 {
        (0..self.cols.len())
            .map(|j| (self.lower[j] - self.x[j]).max(self.x[j] - self.upper[j]).max(0.0))
            .fold(0.0, f64::max)
    }

    fn violation(&self, j: usize) -> f64 {
        let t = self.tol.primal;
        let x = self.x[j];
        if x < self.lower[j] - t * (1.0 + self.lower[j].abs()) {
            -1.0
        } else if x > self.upper[j] + t * (1.0 + self.upper[j].abs()) {
            1.0
        } else {
            0.0
        }
    }

    pub fn solve(&mut self, limits: &SimplexLimits) -> SimplexStatus {
        let m = self.m;
        if self.dirty || self.binv.len() != m * m {
            self.refactor();
        } else if self.stale_x {
            self.recompute_basics();
        }
        let mut cb = vec![0.0; m];
        let mut y = vec![0.0; m];
        let mut alpha = vec![0.0; m];
        let mut best_progress = f64::INFINITY;
        let mut stalled = 0usize;
        let mut bland = false;
        let mut last_phase1 = None;
        let mut rescues = 0;

        loop {
            if self.iterations >= limits.max_iterations {
                return SimplexStatus::IterationLimit;
            }
            if self.iterations % 64 == 0 {
                if let Some(d) = limits.deadline {
                    if Instant::now() >= d {
                        return SimplexStatus::TimeLimit;
                    }
                }
            }
            if self.since_refactor >= self.refactor_every {
                self.refactor();
            }

            let mut phase1 = false;
            let mut measure = 0.0;
            for (i, &k) in self.basis.iter().enumerate() {
                let v = self.violation(k);
                if v != 0.0 {
                    phase1 = true;
                }
                cb[i] = v;
            }
            if phase1 {
                for (i, &k) in self.basis.iter().enumerate() {
                    if cb[i] < 0.0 {
                        measure += self.lower[k] - self.x[k];
                    } else if cb[i] > 0.0 {
                        measure += self.x[k] - self.upper[k];
                    }
                }
            } else {
                for (i, &k) in self.basis.iter().enumerate() {
                    cb[i] = self.cost[k];
                }
                measure = self.objective();
            }
            if last_phase1 != Some(phase1) {
                best_progress = f64::INFINITY;
                stalled = 0;
                bland = false;
                last_phase1 = Some(phase1);
            }
            if measure < best_progress - 1e-12 * (1.0 + measure.abs()) {
                best_progress = measure;
                stalled = 0;
                bland = false;
            } else {
                stalled += 1;
                if stalled > 50 + m {
                    bland = true;
                }
            }

            // y = c_B^T B^{-1}
            y.iter_mut().for_each(|v| *v = 0.0);
            for (i, &c) in cb.iter().enumerate() {
                if c != 0.0 {
                    let row = &self.binv[i * m..(i + 1) * m];
                    for (yk, b) in y.iter_mut().zip(row) {
                        *yk += c * b;
                    }
                }
            }

            let Some((q, dir)) = self.price(&y, phase1, bland) else {
                if phase1 {
                    return SimplexStatus::Infeasible;
                }
                self.duals = y.clone();
                return SimplexStatus::Optimal;
            };

            alpha.iter_mut().for_each(|v| *v = 0.0);
            for &(r, a) in &self.cols[q] {
                for (i, al) in alpha.iter_mut().enumerate() {
                    *al += self.binv[i * m + r] * a;
                }
            }

            let ratio = self.ratio_test(q, dir, &alpha, phase1, bland);
            if !ratio.step.is_finite() {
                if phase1 && rescues < 3 {
                    rescues += 1;
                    self.refactor();
                    continue;
                }
                return if phase1 {
                    SimplexStatus::Infeasible
                } else {
                    SimplexStatus::Unbounded
                };
            }
            let t = ratio.step;
            self.iterations += 1;
            if t != 0.0 {
                self.x[q] += dir * t;
                for (i, &k) in self.basis.iter().enumerate() {
                    if alpha[i] != 0.0 {
                        self.x[k] -= dir * t * alpha[i];
                    }
                }
            }
            match ratio.leaving {
                None => {
                    // bound flip of the entering variable
                    if dir > 0.0 {
                        self.x[q] = self.upper[q];
                        self.state[q] = State::Upper;
                    } else {
                        self.x[q] = self.lower[q];
                        self.state[q] = State::Lower;
                    }
                }
                Some((r, target)) => {
                    let leave = self.basis[r];
                    self.x[leave] = target;
                    self.state[leave] = if target == self.lower[leave] {
                        State::Lower
                    } else {
                        State::Upper
                    };
                    self.state[q] = State::Basic;
                    self.basis[r] = q;
                    self.pivot(r, &alpha);
                }
            }
        }
    }

    fn price(&self, y: &[f64], phase1: bool, bland: bool) -> Option<(usize, f64)> {
        let dtol = self.tol.dual;
        let mut best: Option<(usize, f64)> = None;
        let mut best_score = 0.0;
        for j in 0..self.cols.len() {
            let st = self.state[j];
            if st == State::Basic || self.lower[j] == self.upper[j] {
                continue;
            }
            let c = if phase1 { 0.0 } else { self.cost[j] };
            let d = c - self.cols[j].iter().map(|&(i, a)| y[i] * a).sum::<f64>();
            let dir = match st {
                State::Lower if d < -dtol => 1.0,
                State::Upper if d > dtol => -1.0,
                State::Zero if d.abs() > dtol => -d.signum(),
                _ => continue,
            };
            if bland {
                return Some((j, dir));
            }
            if d.abs() > best_score {
                best_score = d.abs();
                best = Some((j, dir));
            }
        }
        best
    }

    fn ratio_test(&self, q: usize, dir: f64, alpha: &[f64], phase1: bool, bland: bool) -> Ratio {
        let ptol = self.tol.pivot;
        let ftol = self.tol.primal;
        let range = self.upper[q] - self.lower[q];

        // candidate: (pos, actual ratio, relaxed ratio, target bound)
        let mut cands: Vec<(usize, f64, f64, f64)> = Vec::new();
        for (i, &k) in self.basis.iter().enumerate() {
            let a = alpha[i];
            if a.abs() <= ptol {
                continue;
            }
            let rate = -dir * a;
            let x = self.x[k];
            let (lo, hi) = (self.lower[k], self.upper[k]);
            let below = phase1 && x < lo - ftol * (1.0 + lo.abs());
            let above = phase1 && x > hi + ftol * (1.0 + hi.abs());
            let target = if rate > 0.0 {
                if below {
                    lo
                } else if above || !hi.is_finite() {
                    continue;
                } else {
                    hi
                }
            } else if above {
                hi
            } else if below || !lo.is_finite() {
                continue;
            } else {
                lo
            };
            let slack = ftol * (1.0 + target.abs());
            let actual = ((target - x) / rate).max(0.0);
            let relaxed = ((target - x + rate.signum() * slack) / rate).max(0.0);
            cands.push((i, actual, relaxed, target));
        }

        if bland {
            let mut best: Option<(usize, f64, f64)> = None;
            for &(i, actual, _, target) in &cands {
                let better = match best {
                    None => true,
                    Some((bi, bt, _)) => {
                        actual < bt - 1e-12
                            || (actual <= bt + 1e-12 && self.basis[i] < self.basis[bi])
                    }
                };
                if better {
                    best = Some((i, actual, target));
                }
            }
            return match best {
                Some((_, t, _)) if range.is_finite() && range <= t => Ratio { step: range, leaving: None },
                Some((i, t, target)) => Ratio { step: t, leaving: Some((i, target)) },
                None if range.is_finite() => Ratio { step: range, leaving: None },
                None => Ratio { step: f64::INFINITY, leaving: None },
            };
        }

        let tmax = cands.iter().map(|c| c.2).fold(f64::INFINITY, f64::min);
        if range.is_finite() && range <= tmax {
            return Ratio { step: range, leaving: None };
        }
        if !tmax.is_finite() {
            return Ratio { step: f64::INFINITY, leaving: None };
        }
        let mut chosen: Option<(usize, f64, f64)> = None;
        let mut best_pivot = 0.0;
        for &(i, actual, _, target) in &cands {
            if actual <= tmax && alpha[i].abs() > best_pivot {
                best_pivot = alpha[i].abs();
                chosen = Some((i, actual, target));
            }
        }
        let (i, t, target) = chosen.expect("harris pass found a blocking row");
        Ratio {
            step: t,
            leaving: Some((i, target)),
        }
    }

    fn pivot(&mut self, r: usize, alpha: &[f64]) {
        let m = self.m;
        let piv = alpha[r];
        let (before, rest) = self.binv.split_at_mut(r * m);
        let (prow, after) = rest.split_at_mut(m);
        for v in prow.iter_mut() {
            *v /= piv;
        }
        for (i, row) in before.chunks_mut(m).enumerate() {
            let f = alpha[i];
            if f != 0.0 {
                for (v, p) in row.iter_mut().zip(prow.iter()) {
                    *v -= f * p;
                }
            }
        }
        for (off, row) in after.chunks_mut(m).enumerate() {
            let f = alpha[r + 1 + off];
            if f != 0.0 {
                for (v, p) in row.iter_mut().zip(prow.iter()) {
                    *v -= f * p;
                }
            }
        }
        self.since_refactor += 1;
    }

    /// Rebuilds the dense inverse from scratch. Linearly dependent basis
    /// columns are swapped for logicals of uncovered rows.
    fn refactor(&mut self) {
        let m = self.m;
        'retry: loop {
            let mut a = vec![0.0; m * m];
            for (p, &j) in self.basis.iter().enumerate() {
                for &(i, v) in &self.cols[j] {
                    a[i * m + p] += v;
                }
            }
            let mut inv = vec![0.0; m * m];
            for i in 0..m {
                inv[i * m + i] = 1.0;
            }
            let mut perm: Vec<usize> = (0..m).collect();
            for p in 0..m {
                let mut pr = p;
                let mut pv = a[p * m + p].abs();
                for r in p + 1..m {
                    let v = a[r * m + p].abs();
                    if v > pv {
                        pv = v;
                        pr = r;
                    }
                }
                if pv < 1e-11 {
                    let free_row = perm[p..]
                        .iter()
                        .copied()
                        .find(|&row| self.state[self.row_var[row]] != State::Basic)
                        .expect("an uncovered row exists for a singular basis");
                    let out = self.basis[p];
                    let (st, val) = self.nearest_bound(out);
                    self.state[out] = st;
                    self.x[out] = val;
                    let s = self.row_var[free_row];
                    self.state[s] = State::Basic;
                    self.basis[p] = s;
                    continue 'retry;
                }
                if pr != p {
                    for c in 0..m {
                        a.swap(p * m + c, pr * m + c);
                        inv.swap(p * m + c, pr * m + c);
                    }
                    perm.swap(p, pr);
                }
                let d = a[p * m + p];
                for c in 0..m {
                    a[p * m + c] /= d;
                    inv[p * m + c] /= d;
                }
                for r in 0..m {
                    if r == p {
                        continue;
                    }
                    let f = a[r * m + p];
                    if f != 0.0 {
                        for c in 0..m {
                            a[r * m + c] -= f * a[p * m + c];
                            inv[r * m + c] -= f * inv[p * m + c];
                        }
                    }
                }
            }
            self.binv = inv;
            break;
        }
        self.dirty = false;
        self.since_refactor = 0;
        self.recompute_basics();
    }

    fn nearest_bound(&self, j: usize) -> (State, f64) {
        let (lo, hi, x) = (self.lower[j], self.upper[j], self.x[j]);
        match (lo.is_finite(), hi.is_finite()) {
            (true, true) if (x - lo).abs() <= (hi - x).abs() => (State::Lower, lo),
            (true, true) => (State::Upper, hi),
            (true, false) => (State::Lower, lo),
            (false, true) => (State::Upper, hi),
            (false, false) => (State::Zero, 0.0),
        }
    }

    fn recompute_basics(&mut self) {
        let m = self.m;
        let mut rhs = vec![0.0; m];
        for (j, col) in self.cols.iter().enumerate() {
            if self.state[j] == State::Basic {
                continue;
            }
            let xj = self.x[j];
            if xj != 0.0 {
                for &(i, a) in col {
                    rhs[i] -= a * xj;
                }
            }
        }
        for (p, &k) in self.basis.iter().enumerate() {
            let row = &self.binv[p * m..(p + 1) * m];
            self.x[k] = row.iter().zip(&rhs).map(|(b, r)| b * r).sum();
        }
        self.stale_x = false;
    }
}
