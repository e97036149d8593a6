//! Exact solver for binary linear programs.
//!
//! Minimizes a linear objective over 0/1 assignments subject to sparse
//! linear constraints. The search is branch and bound: bound propagation
//! fixes forced variables, a Lagrangian dual gives a valid lower bound and
//! branching guidance, and small subproblems are closed by exhaustive
//! enumeration over a reflected Gray code so each step touches one column.
//! The solver is deterministic: the same program always explores the same
//! tree and returns the same assignment.

use std::time::{Duration, Instant};

use thiserror::Error;

/// Relation between a constraint row and its right-hand side.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

/// One sparse constraint row: `sum(coeff * x[var]) REL rhs`.
#[derive(Debug, Clone)]
pub struct Constraint {
    /// Sparse terms as `(variable index, coefficient)`.
    pub terms: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

/// A binary linear program: minimize `objective . x` over `x in {0,1}^n`
/// subject to `constraints`.
#[derive(Debug, Clone, Default)]
pub struct BinaryProgram {
    pub num_vars: usize,
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
}

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    /// Wall-clock budget for the whole solve.
    pub budget: Duration,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            budget: Duration::from_secs(10),
        }
    }
}

/// Proven-optimal result of a solve.
#[derive(Debug, Clone)]
pub struct Solution {
    pub assignment: Vec<bool>,
    pub objective: f64,
    /// Branch-and-bound nodes expanded, root included.
    pub nodes_explored: u64,
    /// Dual lower bound established at the root node.
    pub root_bound: f64,
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("program has no feasible assignment")]
    Infeasible,
    #[error("time budget exhausted before the search finished")]
    BudgetExceeded {
        /// Best feasible solution found before the budget ran out.
        incumbent: Option<Solution>,
        /// `incumbent objective - root bound` when both exist.
        gap: Option<f64>,
    },
    #[error("constraint {row} references variable {var} outside 0..{num_vars}")]
    VariableOutOfRange {
        row: usize,
        var: usize,
        num_vars: usize,
    },
    #[error("objective length {got} does not match variable count {want}")]
    ObjectiveLengthMismatch { got: usize, want: usize },
    #[error("non-finite coefficient in constraint {0}")]
    NonFiniteCoefficient(usize),
    #[error("non-finite objective coefficient for variable {0}")]
    NonFiniteObjective(usize),
}

/// Feasibility slack below which a row counts as satisfied.
const FEAS_EPS: f64 = 1e-9;
/// A node whose bound is within this of the incumbent is pruned, so the
/// returned objective is optimal to within this margin.
const PRUNE_EPS: f64 = 1e-9;
/// Subtrees with at most this many free variables are enumerated outright.
const ENUM_LIMIT: usize = 12;
const ROOT_DUAL_ITERS: usize = 150;
const CHILD_DUAL_ITERS: usize = 40;

impl BinaryProgram {
    pub fn validate(&self) -> Result<(), SolveError> {
        if self.objective.len() != self.num_vars {
            return Err(SolveError::ObjectiveLengthMismatch {
                got: self.objective.len(),
                want: self.num_vars,
            });
        }
        for (j, c) in self.objective.iter().enumerate() {
            if !c.is_finite() {
                return Err(SolveError::NonFiniteObjective(j));
            }
        }
        for (i, row) in self.constraints.iter().enumerate() {
            if !row.rhs.is_finite() {
                return Err(SolveError::NonFiniteCoefficient(i));
            }
            for &(var, coeff) in &row.terms {
                if var >= self.num_vars {
                    return Err(SolveError::VariableOutOfRange {
                        row: i,
                        var,
                        num_vars: self.num_vars,
                    });
                }
                if !coeff.is_finite() {
                    return Err(SolveError::NonFiniteCoefficient(i));
                }
            }
        }
        Ok(())
    }

    /// Objective value of an assignment.
    pub fn objective_value(&self, assignment: &[bool]) -> f64 {
        self.objective
            .iter()
            .zip(assignment)
            .map(|(c, &x)| if x { *c } else { 0.0 })
            .sum()
    }

    /// Indices of constraints the assignment violates (tolerance
    /// `FEAS_EPS`).
    pub fn violations(&self, assignment: &[bool]) -> Vec<usize> {
        self.constraints
            .iter()
            .enumerate()
            .filter_map(|(i, row)| {
                let activity: f64 = row
                    .terms
                    .iter()
                    .map(|&(var, coeff)| if assignment[var] { coeff } else { 0.0 })
                    .sum();
                let ok = match row.relation {
                    Relation::Le => activity <= row.rhs + FEAS_EPS,
                    Relation::Ge => activity >= row.rhs - FEAS_EPS,
                    Relation::Eq => (activity - row.rhs).abs() <= FEAS_EPS,
                };
                if ok {
                    None
                } else {
                    Some(i)
                }
            })
            .collect()
    }

    pub fn check_feasible(&self, assignment: &[bool]) -> bool {
        self.violations(assignment).is_empty()
    }

    /// Serializes the program in a small LP-style text format, useful for
    /// dumping failing programs. Grammar (one declaration per line):
    ///
    /// ```text
    /// program   := objective row* binaries
    /// objective := "min:" expr ";"
    /// row       := name ":" expr rel number ";"
    /// rel       := "<=" | ">=" | "="
    /// expr      := "0" | term (("+" | "-") term)*
    /// term      := [number] var        (omitted number means 1)
    /// var       := "x" index
    /// binaries  := "binary:" var* ";"
    /// ```
    ///
    /// The first term of an expression carries its own sign; later terms
    /// are joined with `+` or `-` and written with absolute coefficients.
    /// Rows are named `r0`, `r1`, ... in declaration order.
    pub fn dump_lp(&self) -> String {
        fn expr(terms: &[(usize, f64)]) -> String {
            let mut out = String::new();
            for &(var, coeff) in terms.iter().filter(|&&(_, c)| c != 0.0) {
                let mag = coeff.abs();
                if out.is_empty() {
                    if coeff < 0.0 {
                        out.push('-');
                    }
                } else if coeff < 0.0 {
                    out.push_str(" - ");
                } else {
                    out.push_str(" + ");
                }
                if mag != 1.0 {
                    out.push_str(&format!("{} ", mag));
                }
                out.push_str(&format!("x{}", var));
            }
            if out.is_empty() {
                out.push('0');
            }
            out
        }

        let mut s = String::new();
        let obj_terms: Vec<(usize, f64)> = self
            .objective
            .iter()
            .enumerate()
            .map(|(j, &c)| (j, c))
            .collect();
        s.push_str(&format!("min: {};\n", expr(&obj_terms)));
        for (i, row) in self.constraints.iter().enumerate() {
            let rel = match row.relation {
                Relation::Le => "<=",
                Relation::Eq => "=",
                Relation::Ge => ">=",
            };
            s.push_str(&format!("r{}: {} {} {};\n", i, expr(&row.terms), rel, row.rhs));
        }
        s.push_str("binary:");
        for j in 0..self.num_vars {
            s.push_str(&format!(" x{}", j));
        }
        s.push_str(";\n");
        s
    }
}

/// Internal row form: every constraint normalized to `terms . x >= rhs`.
struct GeRow {
    terms: Vec<(usize, f64)>,
    rhs: f64,
}

struct Normalized {
    num_vars: usize,
    objective: Vec<f64>,
    rows: Vec<GeRow>,
    /// Per-variable list of `(row index, coefficient)`.
    columns: Vec<Vec<(usize, f64)>>,
}

impl Normalized {
    fn build(p: &BinaryProgram) -> Normalized {
        let mut rows = Vec::new();
        for row in &p.constraints {
            match row.relation {
                Relation::Ge => rows.push(GeRow {
                    terms: row.terms.clone(),
                    rhs: row.rhs,
                }),
                Relation::Le => rows.push(GeRow {
                    terms: row.terms.iter().map(|&(v, c)| (v, -c)).collect(),
                    rhs: -row.rhs,
                }),
                Relation::Eq => {
                    rows.push(GeRow {
                        terms: row.terms.clone(),
                        rhs: row.rhs,
                    });
                    rows.push(GeRow {
                        terms: row.terms.iter().map(|&(v, c)| (v, -c)).collect(),
                        rhs: -row.rhs,
                    });
                }
            }
        }
        let mut columns = vec![Vec::new(); p.num_vars];
        for (i, row) in rows.iter().enumerate() {
            for &(var, coeff) in &row.terms {
                columns[var].push((i, coeff));
            }
        }
        Normalized {
            num_vars: p.num_vars,
            objective: p.objective.clone(),
            rows,
            columns,
        }
    }

    fn feasible(&self, x: &[bool]) -> bool {
        self.rows.iter().all(|row| {
            let activity: f64 = row
                .terms
                .iter()
                .map(|&(var, coeff)| if x[var] { coeff } else { 0.0 })
                .sum();
            activity >= row.rhs - FEAS_EPS
        })
    }

    fn objective_value(&self, x: &[bool]) -> f64 {
        self.objective
            .iter()
            .zip(x)
            .map(|(c, &v)| if v { *c } else { 0.0 })
            .sum()
    }
}

/// Fixes variables forced by single-row reasoning, to a fixed point.
/// Returns false if some row cannot be satisfied by any completion.
fn propagate(work: &Normalized, fixed: &mut [Option<bool>]) -> bool {
    loop {
        let mut changed = false;
        for row in &work.rows {
            // Highest activity any completion of the partial assignment
            // can reach on this row.
            let mut max_act = 0.0;
            for &(var, coeff) in &row.terms {
                max_act += match fixed[var] {
                    Some(true) => coeff,
                    Some(false) => 0.0,
                    None => coeff.max(0.0),
                };
            }
            if max_act < row.rhs - FEAS_EPS {
                return false;
            }
            for &(var, coeff) in &row.terms {
                if fixed[var].is_some() {
                    continue;
                }
                // A free variable whose non-maximal choice would break the
                // row is forced to the choice that keeps max activity.
                // Those fixes leave max_act valid for the rest of the row.
                if coeff > 0.0 && max_act - coeff < row.rhs - FEAS_EPS {
                    fixed[var] = Some(true);
                    changed = true;
                } else if coeff < 0.0 && max_act + coeff < row.rhs - FEAS_EPS {
                    fixed[var] = Some(false);
                    changed = true;
                }
            }
        }
        if !changed {
            return true;
        }
    }
}

struct DualResult {
    bound: f64,
    multipliers: Vec<f64>,
    /// Mean of the inner minimizers across iterations, one entry per
    /// variable; fractional values guide branching.
    average_x: Vec<f64>,
}

/// Projected subgradient ascent on the Lagrangian dual of the subproblem
/// where `fixed` variables are pinned. Every inner minimizer is also
/// tested as a primal candidate; improvements land in `incumbent`.
fn run_dual(
    work: &Normalized,
    fixed: &[Option<bool>],
    multipliers: Vec<f64>,
    iterations: usize,
    incumbent: &mut Option<(Vec<bool>, f64)>,
) -> DualResult {
    let m = work.rows.len();
    let n = work.num_vars;
    let mut y = multipliers;
    y.resize(m, 0.0);
    let mut best_bound = f64::NEG_INFINITY;
    let mut best_y = y.clone();
    let mut avg = vec![0.0; n];
    let mut x = vec![false; n];
    let base_step = {
        let scale: f64 = work.objective.iter().map(|c| c.abs()).sum::<f64>() / n.max(1) as f64;
        scale.max(1.0)
    };

    for k in 0..iterations.max(1) {
        // Reduced costs c - A^T y, then the inner minimizer.
        let mut bound: f64 = work.rows.iter().zip(&y).map(|(r, yi)| r.rhs * yi).sum();
        for j in 0..n {
            let mut reduced = work.objective[j];
            for &(row, coeff) in &work.columns[j] {
                reduced -= y[row] * coeff;
            }
            x[j] = match fixed[j] {
                Some(v) => v,
                None => reduced < 0.0,
            };
            if x[j] {
                bound += reduced;
            }
        }
        if bound > best_bound {
            best_bound = bound;
            best_y.copy_from_slice(&y);
        }
        for j in 0..n {
            avg[j] += if x[j] { 1.0 } else { 0.0 };
        }
        if work.feasible(&x) {
            let value = work.objective_value(&x);
            if incumbent.as_ref().map_or(true, |(_, best)| value < *best) {
                *incumbent = Some((x.clone(), value));
            }
        }

        // Subgradient b - A x and the ascent step.
        let mut norm_sq = 0.0;
        let mut grad = vec![0.0; m];
        for (i, row) in work.rows.iter().enumerate() {
            let activity: f64 = row
                .terms
                .iter()
                .map(|&(var, coeff)| if x[var] { coeff } else { 0.0 })
                .sum();
            grad[i] = row.rhs - activity;
            norm_sq += grad[i] * grad[i];
        }
        if norm_sq <= 1e-18 {
            break;
        }
        let step = match incumbent {
            Some((_, value)) if *value > bound => (*value - bound) / norm_sq,
            _ => base_step / (1.0 + k as f64),
        };
        for i in 0..m {
            y[i] = (y[i] + step * grad[i]).clamp(0.0, 1e12);
        }
    }

    for a in &mut avg {
        *a /= iterations.max(1) as f64;
    }
    DualResult {
        bound: best_bound,
        multipliers: best_y,
        average_x: avg,
    }
}

/// Exhaustively scans all completions of the free variables in reflected
/// Gray code order, updating row activities one column flip at a time.
fn enumerate_frees(
    work: &Normalized,
    fixed: &[Option<bool>],
    free: &[usize],
    incumbent: &mut Option<(Vec<bool>, f64)>,
    start: Instant,
    budget: Duration,
) -> Result<(), ()> {
    let mut x: Vec<bool> = fixed.iter().map(|f| f.unwrap_or(false)).collect();
    let mut activity: Vec<f64> = work
        .rows
        .iter()
        .map(|row| {
            row.terms
                .iter()
                .map(|&(var, coeff)| if x[var] { coeff } else { 0.0 })
                .sum()
        })
        .collect();
    let mut value = work.objective_value(&x);

    let consider = |x: &[bool], value: f64, activity: &[f64], inc: &mut Option<(Vec<bool>, f64)>| {
        if inc.as_ref().is_some_and(|(_, best)| value >= *best) {
            return;
        }
        let ok = work
            .rows
            .iter()
            .zip(activity)
            .all(|(row, act)| *act >= row.rhs - FEAS_EPS);
        if ok {
            *inc = Some((x.to_vec(), value));
        }
    };

    consider(&x, value, &activity, incumbent);
    let total = 1u64 << free.len();
    for step in 1..total {
        if step % 1024 == 0 && start.elapsed() > budget {
            return Err(());
        }
        let var = free[step.trailing_zeros() as usize];
        let delta = if x[var] { -1.0 } else { 1.0 };
        x[var] = !x[var];
        value += delta * work.objective[var];
        for &(row, coeff) in &work.columns[var] {
            activity[row] += delta * coeff;
        }
        consider(&x, value, &activity, incumbent);
    }
    Ok(())
}

struct Node {
    fixed: Vec<Option<bool>>,
    multipliers: Vec<f64>,
    depth: usize,
}

/// Solves the program to proven optimality (within `PRUNE_EPS` on the
/// objective) or reports infeasibility / budget exhaustion.
pub fn solve(program: &BinaryProgram, options: &SolveOptions) -> Result<Solution, SolveError> {
    program.validate()?;
    let work = Normalized::build(program);
    let start = Instant::now();
    let n = program.num_vars;

    let mut incumbent: Option<(Vec<bool>, f64)> = None;
    let mut nodes_explored: u64 = 0;
    let mut root_bound = f64::NEG_INFINITY;
    let mut root_seen = false;

    let budget_error = |incumbent: Option<(Vec<bool>, f64)>,
                        nodes_explored: u64,
                        root_bound: f64,
                        root_seen: bool| {
        let solution = incumbent.map(|(assignment, objective)| Solution {
            assignment,
            objective,
            nodes_explored,
            root_bound,
        });
        let gap = solution
            .as_ref()
            .filter(|_| root_seen)
            .map(|s| s.objective - root_bound);
        SolveError::BudgetExceeded {
            incumbent: solution,
            gap,
        }
    };

    let mut stack = vec![Node {
        fixed: vec![None; n],
        multipliers: vec![0.0; work.rows.len()],
        depth: 0,
    }];

    while let Some(node) = stack.pop() {
        if start.elapsed() > options.budget {
            return Err(budget_error(incumbent, nodes_explored, root_bound, root_seen));
        }
        nodes_explored += 1;
        let mut fixed = node.fixed;
        if !propagate(&work, &mut fixed) {
            continue;
        }
        let free: Vec<usize> = (0..n).filter(|&j| fixed[j].is_none()).collect();
        if free.is_empty() {
            let x: Vec<bool> = fixed.iter().map(|f| f.unwrap()).collect();
            if work.feasible(&x) {
                let value = work.objective_value(&x);
                if incumbent.as_ref().map_or(true, |(_, best)| value < *best) {
                    incumbent = Some((x, value));
                }
            }
            continue;
        }

        let iters = if node.depth == 0 {
            ROOT_DUAL_ITERS
        } else {
            CHILD_DUAL_ITERS
        };
        let dual = run_dual(&work, &fixed, node.multipliers, iters, &mut incumbent);
        if node.depth == 0 {
            root_bound = dual.bound;
            root_seen = true;
        }
        if let Some((_, best)) = &incumbent {
            if dual.bound >= *best - PRUNE_EPS {
                continue;
            }
        }

        if free.len() <= ENUM_LIMIT {
            if enumerate_frees(&work, &fixed, &free, &mut incumbent, start, options.budget)
                .is_err()
            {
                return Err(budget_error(incumbent, nodes_explored, root_bound, root_seen));
            }
            continue;
        }

        // Branch on the most fractional coordinate of the averaged inner
        // minimizer; ties break to the lowest index. The child matching
        // the rounded average is explored first.
        let branch = *free
            .iter()
            .min_by(|&&a, &&b| {
                let fa = (dual.average_x[a] - 0.5).abs();
                let fb = (dual.average_x[b] - 0.5).abs();
                fa.partial_cmp(&fb).unwrap().then(a.cmp(&b))
            })
            .unwrap();
        let preferred = dual.average_x[branch] >= 0.5;
        for value in [!preferred, preferred] {
            let mut child = fixed.clone();
            child[branch] = Some(value);
            stack.push(Node {
                fixed: child,
                multipliers: dual.multipliers.clone(),
                depth: node.depth + 1,
            });
        }
    }

    match incumbent {
        Some((assignment, objective)) => Ok(Solution {
            assignment,
            objective,
            nodes_explored,
            root_bound: if root_seen { root_bound } else { objective },
        }),
        None => Err(SolveError::Infeasible),
    }
}
