//! Dense bounded-variable primal simplex.
//!
//! Two phases: phase one minimizes the sum of artificial variables, phase two the user
//! objective. Bland's rule picks both the entering and the leaving variable, so the method
//! terminates and identical problems give identical answers. Every successful solve returns a
//! vertex of the feasible polytope: non-basic variables sit at a bound, so at most one variable
//! per row is strictly between its bounds.

use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Smallest pivot magnitude accepted in the ratio test.
pub const PIVOT_TOL: f64 = 1e-10;
/// Constraint residual tolerated in returned solutions.
pub const FEAS_TOL: f64 = 1e-7;
const COST_TOL: f64 = 1e-9;
const SNAP_TOL: f64 = 1e-9;
const PHASE_ONE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

/// A linear program over bounded non-negative variables, minimizing `objective` when given.
#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    pub num_vars: usize,
    pub constraints: Vec<Constraint>,
    /// Per-variable `[lo, hi]`; `hi` may be infinite.
    pub bounds: Vec<(f64, f64)>,
    pub objective: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    /// Feasibility-only problem with a feasible vertex.
    Feasible,
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub values: Vec<f64>,
    pub status: LpStatus,
    pub is_basic: bool,
    pub objective_value: Option<f64>,
}

impl LpSolution {
    pub fn is_feasible(&self) -> bool {
        matches!(self.status, LpStatus::Feasible | LpStatus::Optimal)
    }
}

impl LpProblem {
    /// Feasibility problem with all variables in `[0, 1]`.
    pub fn unit_box(num_vars: usize) -> Self {
        Self {
            num_vars,
            constraints: Vec::new(),
            bounds: vec![(0.0, 1.0); num_vars],
            objective: None,
        }
    }

    pub fn add_constraint(&mut self, coeffs: Vec<f64>, relation: Relation, rhs: f64) {
        self.constraints.push(Constraint {
            coeffs,
            relation,
            rhs,
        });
    }

    /// Adds `Σ coeff·x_var (rel) rhs` from a sparse term list.
    pub fn add_sparse(&mut self, terms: &[(usize, f64)], relation: Relation, rhs: f64) {
        let mut coeffs = vec![0.0; self.num_vars];
        for &(v, c) in terms {
            coeffs[v] += c;
        }
        self.add_constraint(coeffs, relation, rhs);
    }

    pub fn fix(&mut self, var: usize, value: f64) {
        self.bounds[var] = (value, value);
    }

    pub fn validate(&self) -> Result<()> {
        if self.bounds.len() != self.num_vars {
            return Err(Error::Contract(format!(
                "{} bounds for {} variables",
                self.bounds.len(),
                self.num_vars
            )));
        }
        for (j, &(lo, hi)) in self.bounds.iter().enumerate() {
            if !(lo >= 0.0 && lo.is_finite() && lo <= hi) {
                return Err(Error::Contract(format!(
                    "variable {j} has bounds [{lo}, {hi}]"
                )));
            }
        }
        for (i, c) in self.constraints.iter().enumerate() {
            if c.coeffs.len() != self.num_vars {
                return Err(Error::Contract(format!(
                    "constraint {i} has {} coefficients, expected {}",
                    c.coeffs.len(),
                    self.num_vars
                )));
            }
            if !c.rhs.is_finite() || c.coeffs.iter().any(|a| !a.is_finite()) {
                return Err(Error::Contract(format!(
                    "constraint {i} has non-finite data"
                )));
            }
        }
        if let Some(obj) = &self.objective {
            if obj.len() != self.num_vars {
                return Err(Error::Contract("objective length mismatch".into()));
            }
        }
        Ok(())
    }

    /// Largest violation of any constraint or bound by `values`.
    pub fn max_violation(&self, values: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for c in &self.constraints {
            let lhs: f64 = c.coeffs.iter().zip(values).map(|(a, x)| a * x).sum();
            let v = match c.relation {
                Relation::Le => lhs - c.rhs,
                Relation::Ge => c.rhs - lhs,
            };
            worst = worst.max(v);
        }
        for (&x, &(lo, hi)) in values.iter().zip(&self.bounds) {
            worst = worst.max(lo - x).max(x - hi);
        }
        worst
    }

    /// Renders the problem in CPLEX-style LP text, for debugging.
    pub fn to_lp_text(&self) -> String {
        let mut out = String::new();
        let term_list = |coeffs: &[f64]| {
            let mut s = String::new();
            for (j, &a) in coeffs.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let sign = if a < 0.0 { '-' } else { '+' };
                if (a.abs() - 1.0).abs() < f64::EPSILON {
                    let _ = write!(s, " {sign} x{j}");
                } else {
                    let _ = write!(s, " {sign} {} x{j}", a.abs());
                }
            }
            if s.is_empty() {
                s.push_str(" 0 x0");
            }
            s
        };
        match &self.objective {
            Some(obj) => {
                let _ = writeln!(out, "Minimize\n obj:{}", term_list(obj));
            }
            None => {
                let _ = writeln!(out, "Minimize\n obj: 0 x0");
            }
        }
        let _ = writeln!(out, "Subject To");
        for (i, c) in self.constraints.iter().enumerate() {
            let rel = match c.relation {
                Relation::Le => "<=",
                Relation::Ge => ">=",
            };
            let _ = writeln!(out, " c{i}:{} {rel} {}", term_list(&c.coeffs), c.rhs);
        }
        let _ = writeln!(out, "Bounds");
        for (j, &(lo, hi)) in self.bounds.iter().enumerate() {
            if hi.is_infinite() {
                let _ = writeln!(out, " x{j} >= {lo}");
            } else {
                let _ = writeln!(out, " {lo} <= x{j} <= {hi}");
            }
        }
        out.push_str("End\n");
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VarState {
    Basic(usize),
    AtLower,
    AtUpper,
}

struct Tableau {
    m: usize,
    ncols: usize,
    /// Row-major `m × (ncols + 1)`; the last column is `B⁻¹ b`.
    t: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    x: Vec<f64>,
    basis: Vec<usize>,
    state: Vec<VarState>,
    iterations: usize,
    max_iterations: usize,
}

enum Outcome {
    Optimal,
    Unbounded,
}

impl Tableau {
    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * (self.ncols + 1) + j]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.at(i, self.ncols)
    }

    /// Recomputes basic values from `B⁻¹ b` and the non-basic values, removing drift.
    fn refresh_basic_values(&mut self) {
        for i in 0..self.m {
            let mut v = self.rhs(i);
            for j in 0..self.ncols {
                if !matches!(self.state[j], VarState::Basic(_)) && self.x[j] != 0.0 {
                    v -= self.at(i, j) * self.x[j];
                }
            }
            self.x[self.basis[i]] = v;
        }
    }

    fn pivot(&mut self, r: usize, col: usize) {
        let w = self.ncols + 1;
        let p = self.t[r * w + col];
        for v in &mut self.t[r * w..(r + 1) * w] {
            *v /= p;
        }
        let pivot_row: Vec<f64> = self.t[r * w..(r + 1) * w].to_vec();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.t[i * w + col];
            if f == 0.0 {
                continue;
            }
            for (dst, &src) in self.t[i * w..(i + 1) * w].iter_mut().zip(&pivot_row) {
                *dst -= f * src;
            }
            self.t[i * w + col] = 0.0;
        }
    }

    fn run(&mut self, cost: &[f64]) -> Result<Outcome> {
        loop {
            if self.iterations >= self.max_iterations {
                return Err(Error::Solver(format!(
                    "pivot budget of {} iterations exhausted",
                    self.max_iterations
                )));
            }
            // Reduced costs; Bland: first eligible column.
            let mut entering = None;
            for j in 0..self.ncols {
                let st = self.state[j];
                if matches!(st, VarState::Basic(_)) || self.hi[j] - self.lo[j] <= SNAP_TOL {
                    continue;
                }
                let mut d = cost[j];
                for i in 0..self.m {
                    let a = self.at(i, j);
                    if a != 0.0 {
                        d -= cost[self.basis[i]] * a;
                    }
                }
                let improving = match st {
                    VarState::AtLower => d < -COST_TOL,
                    VarState::AtUpper => d > COST_TOL,
                    VarState::Basic(_) => false,
                };
                if improving {
                    entering = Some((j, if st == VarState::AtLower { 1.0 } else { -1.0 }));
                    break;
                }
            }
            let Some((j, dir)) = entering else {
                return Ok(Outcome::Optimal);
            };
            self.iterations += 1;

            // Ratio test. Δx_B[i] = -dir·T[i][j] per unit step.
            let mut theta = self.hi[j] - self.lo[j];
            let mut leave: Option<(usize, bool)> = None;
            for i in 0..self.m {
                let delta = -dir * self.at(i, j);
                let b = self.basis[i];
                let limit = if delta < -PIVOT_TOL {
                    Some((((self.x[b] - self.lo[b]) / -delta).max(0.0), false))
                } else if delta > PIVOT_TOL && self.hi[b].is_finite() {
                    Some((((self.hi[b] - self.x[b]) / delta).max(0.0), true))
                } else {
                    None
                };
                let Some((lim, to_upper)) = limit else {
                    continue;
                };
                if lim < theta - 1e-12 {
                    theta = lim;
                    leave = Some((i, to_upper));
                } else if lim <= theta + 1e-12 {
                    // Ties: a pending bound flip wins, otherwise the lowest basic index leaves.
                    if let Some((r, _)) = leave {
                        if b < self.basis[r] {
                            theta = theta.min(lim);
                            leave = Some((i, to_upper));
                        }
                    }
                }
            }
            if theta.is_infinite() {
                return Ok(Outcome::Unbounded);
            }
            for i in 0..self.m {
                let b = self.basis[i];
                self.x[b] += -dir * self.at(i, j) * theta;
            }
            self.x[j] += dir * theta;
            match leave {
                None => {
                    // Bound flip.
                    self.state[j] = if dir > 0.0 {
                        VarState::AtUpper
                    } else {
                        VarState::AtLower
                    };
                    self.x[j] = if dir > 0.0 { self.hi[j] } else { self.lo[j] };
                }
                Some((r, to_upper)) => {
                    let b = self.basis[r];
                    self.state[b] = if to_upper {
                        VarState::AtUpper
                    } else {
                        VarState::AtLower
                    };
                    self.x[b] = if to_upper { self.hi[b] } else { self.lo[b] };
                    self.pivot(r, j);
                    self.basis[r] = j;
                    self.state[j] = VarState::Basic(r);
                }
            }
        }
    }
}

/// Solves `problem`, returning an optimal vertex (or any feasible vertex without objective).
pub fn solve(problem: &LpProblem) -> Result<LpSolution> {
    problem.validate()?;
    let n = problem.num_vars;
    let m = problem.constraints.len();
    // Columns: structural, slack per row, artificial per row.
    let ncols = n + 2 * m;
    let w = ncols + 1;
    let mut lo = vec![0.0; ncols];
    let mut hi = vec![f64::INFINITY; ncols];
    for (j, &(l, h)) in problem.bounds.iter().enumerate() {
        lo[j] = l;
        hi[j] = h;
    }
    let mut x = vec![0.0; ncols];
    x[..n].copy_from_slice(&lo[..n]);
    let mut state = vec![VarState::AtLower; ncols];
    let mut basis = vec![0; m];
    let mut t = vec![0.0; m * w];
    let mut phase_one_cost = vec![0.0; ncols];
    let mut uses_artificial = false;

    for (i, c) in problem.constraints.iter().enumerate() {
        let sigma = match c.relation {
            Relation::Le => 1.0,
            Relation::Ge => -1.0,
        };
        let activity: f64 = c.coeffs.iter().zip(&x[..n]).map(|(a, v)| a * v).sum();
        let residual = c.rhs - activity;
        let slack = n + i;
        let art = n + m + i;
        // Basic column and its coefficient in this row.
        let (basic, coef) = if sigma * residual >= 0.0 {
            hi[art] = 0.0;
            (slack, sigma)
        } else {
            uses_artificial = true;
            phase_one_cost[art] = 1.0;
            (art, residual.signum())
        };
        let row = &mut t[i * w..(i + 1) * w];
        row[..n].copy_from_slice(&c.coeffs);
        row[slack] = sigma;
        if basic == art {
            row[art] = coef;
        }
        row[ncols] = c.rhs;
        for v in row.iter_mut() {
            *v /= coef;
        }
        basis[i] = basic;
        state[basic] = VarState::Basic(i);
    }

    let mut tab = Tableau {
        m,
        ncols,
        t,
        lo,
        hi,
        x,
        basis,
        state,
        iterations: 0,
        max_iterations: 50_000 + 50 * (m + ncols),
    };
    tab.refresh_basic_values();

    if uses_artificial {
        tab.run(&phase_one_cost)?;
        tab.refresh_basic_values();
        let infeasibility: f64 = (0..m).map(|i| tab.x[n + m + i].max(0.0)).sum();
        if infeasibility > PHASE_ONE_TOL {
            return Ok(LpSolution {
                values: Vec::new(),
                status: LpStatus::Infeasible,
                is_basic: false,
                objective_value: None,
            });
        }
    }
    // Artificials are pinned at zero from here on.
    for i in 0..m {
        let art = n + m + i;
        tab.hi[art] = 0.0;
        if !matches!(tab.state[art], VarState::Basic(_)) {
            tab.x[art] = 0.0;
            tab.state[art] = VarState::AtLower;
        }
    }

    let mut status = LpStatus::Feasible;
    if let Some(obj) = &problem.objective {
        let mut cost = vec![0.0; ncols];
        cost[..n].copy_from_slice(obj);
        match tab.run(&cost)? {
            Outcome::Optimal => status = LpStatus::Optimal,
            Outcome::Unbounded => {
                return Ok(LpSolution {
                    values: Vec::new(),
                    status: LpStatus::Unbounded,
                    is_basic: false,
                    objective_value: None,
                })
            }
        }
        tab.refresh_basic_values();
    }

    let mut values = tab.x[..n].to_vec();
    for (v, &(l, h)) in values.iter_mut().zip(&problem.bounds) {
        if (*v - l).abs() <= SNAP_TOL {
            *v = l;
        } else if (*v - h).abs() <= SNAP_TOL {
            *v = h;
        }
    }
    let violation = problem.max_violation(&values);
    if violation > FEAS_TOL {
        return Err(Error::Solver(format!(
            "returned point violates a constraint by {violation:e}"
        )));
    }
    let objective_value = problem
        .objective
        .as_ref()
        .map(|obj| obj.iter().zip(&values).map(|(c, v)| c * v).sum());
    Ok(LpSolution {
        values,
        status,
        is_basic: true,
        objective_value,
    })
}

/// Number of variables strictly inside their bounds.
pub fn fractional_count(problem: &LpProblem, values: &[f64]) -> usize {
    values
        .iter()
        .zip(&problem.bounds)
        .filter(|(&v, &(l, h))| v > l + SNAP_TOL && v < h - SNAP_TOL)
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_var(lo: f64, hi: f64) -> LpProblem {
        LpProblem {
            num_vars: 1,
            constraints: Vec::new(),
            bounds: vec![(lo, hi)],
            objective: None,
        }
    }

    #[test]
    fn minimize_single_variable() {
        let mut p = one_var(0.0, 2.0);
        p.add_constraint(vec![1.0], Relation::Ge, 1.0);
        p.objective = Some(vec![1.0]);
        let s = solve(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.values[0] - 1.0).abs() < 1e-12);
        assert!(s.is_basic);
    }

    #[test]
    fn infeasible_bound() {
        let mut p = one_var(0.0, 1.0);
        p.add_constraint(vec![1.0], Relation::Ge, 2.0);
        assert_eq!(solve(&p).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded_objective() {
        let mut p = one_var(0.0, f64::INFINITY);
        p.add_constraint(vec![1.0], Relation::Ge, 1.0);
        p.objective = Some(vec![-1.0]);
        assert_eq!(solve(&p).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn textbook_maximization() {
        // max 3x + 5y s.t. x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18 → (2, 6), value 36.
        let mut p = LpProblem {
            num_vars: 2,
            constraints: Vec::new(),
            bounds: vec![(0.0, f64::INFINITY); 2],
            objective: Some(vec![-3.0, -5.0]),
        };
        p.add_constraint(vec![1.0, 0.0], Relation::Le, 4.0);
        p.add_constraint(vec![0.0, 2.0], Relation::Le, 12.0);
        p.add_constraint(vec![3.0, 2.0], Relation::Le, 18.0);
        let s = solve(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.values[0] - 2.0).abs() < 1e-9);
        assert!((s.values[1] - 6.0).abs() < 1e-9);
        assert!((s.objective_value.unwrap() + 36.0).abs() < 1e-9);
    }

    #[test]
    fn fixed_variables_respected() {
        let mut p = LpProblem::unit_box(2);
        p.fix(0, 1.0);
        p.add_constraint(vec![1.0, 1.0], Relation::Le, 1.0);
        let s = solve(&p).unwrap();
        assert_eq!(s.values, vec![1.0, 0.0]);
    }

    #[test]
    fn rejects_malformed() {
        let mut p = one_var(1.0, 0.0);
        assert!(solve(&p).is_err());
        p.bounds = vec![(0.0, 1.0)];
        p.add_constraint(vec![1.0, 2.0], Relation::Le, 1.0);
        assert!(matches!(solve(&p), Err(Error::Contract(_))));
    }

    #[test]
    fn lp_text_dump() {
        let mut p = one_var(0.0, 1.0);
        p.add_constraint(vec![2.0], Relation::Ge, 1.0);
        let text = p.to_lp_text();
        assert!(text.contains("c0: + 2 x0 >= 1"));
        assert!(text.contains("0 <= x0 <= 1"));
    }
}
