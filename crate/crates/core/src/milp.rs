//! Dense mixed-integer linear programming.
//!
//! Every variable (including row slacks) carries finite bounds, so any basis
//! becomes dual feasible by parking each nonbasic column at the bound that
//! matches the sign of its reduced cost. The LP relaxation is therefore
//! solved with a bounded dual simplex started from the slack basis, and
//! branch-and-bound nodes only change bounds on one shared tableau: the
//! previous basis stays dual feasible and re-optimization is a warm start.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
struct Constraint {
    coefs: Vec<(usize, f64)>,
    sense: Sense,
    rhs: f64,
    name: String,
}

/// `min cost·x` subject to linear rows and finite variable bounds.
#[derive(Debug, Clone, Default)]
pub struct Problem {
    cost: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    integer: Vec<bool>,
    rows: Vec<Constraint>,
}

impl Problem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_vars(&self) -> usize {
        self.cost.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    /// Adds a variable and returns its index. Bounds must be finite.
    pub fn add_var(&mut self, cost: f64, lower: f64, upper: f64, integer: bool) -> usize {
        self.cost.push(cost);
        self.lower.push(lower);
        self.upper.push(upper);
        self.integer.push(integer);
        self.cost.len() - 1
    }

    pub fn add_row(&mut self, coefs: Vec<(usize, f64)>, sense: Sense, rhs: f64, name: impl Into<String>) {
        self.rows.push(Constraint {
            coefs,
            sense,
            rhs,
            name: name.into(),
        });
    }

    pub fn set_bounds(&mut self, var: usize, lower: f64, upper: f64) {
        self.lower[var] = lower;
        self.upper[var] = upper;
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        self.cost.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Largest bound or row violation of `x`, with the name of the worst row.
    pub fn max_violation(&self, x: &[f64]) -> (f64, String) {
        let mut worst = (0.0, String::new());
        for (j, &v) in x.iter().enumerate() {
            let viol = (self.lower[j] - v).max(v - self.upper[j]);
            if viol > worst.0 {
                worst = (viol, format!("bound of variable {j}"));
            }
        }
        for row in &self.rows {
            let lhs: f64 = row.coefs.iter().map(|&(j, a)| a * x[j]).sum();
            let viol = match row.sense {
                Sense::Le => lhs - row.rhs,
                Sense::Ge => row.rhs - lhs,
                Sense::Eq => (lhs - row.rhs).abs(),
            };
            if viol > worst.0 {
                worst = (viol, row.name.clone());
            }
        }
        worst
    }

    fn validate(&self) -> Result<()> {
        for j in 0..self.num_vars() {
            let (l, u) = (self.lower[j], self.upper[j]);
            if !l.is_finite() || !u.is_finite() || !self.cost[j].is_finite() {
                return Err(Error::param(format!("variable {j} needs finite bounds and cost")));
            }
            if l > u {
                return Err(Error::Infeasible(format!("variable {j} has empty bounds [{l}, {u}]")));
            }
        }
        for row in &self.rows {
            if !row.rhs.is_finite() || row.coefs.iter().any(|&(j, a)| j >= self.num_vars() || !a.is_finite()) {
                return Err(Error::param(format!("row `{}` is malformed", row.name)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Options {
    /// Relative optimality gap at which the search stops.
    pub gap: f64,
    pub max_nodes: usize,
    pub time_limit: Option<Duration>,
    pub int_tol: f64,
}

impl Default for Options {
    fn default() -> Self {
        Self {
            gap: 1e-6,
            max_nodes: 200_000,
            time_limit: Some(Duration::from_secs(120)),
            int_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// Proven relative gap between the objective and the best remaining bound.
    pub gap: f64,
    pub nodes: usize,
}

/// Anything able to solve a [`Problem`] to proven optimality.
pub trait Backend {
    fn solve(&self, problem: &Problem, options: &Options) -> Result<Solution>;
}

/// The built-in branch-and-bound backend.
#[derive(Debug, Clone, Copy, Default)]
pub struct BranchAndBound;

impl Backend for BranchAndBound {
    fn solve(&self, problem: &Problem, options: &Options) -> Result<Solution> {
        solve(problem, options)
    }
}

const PRIMAL_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-9;
const DUAL_TOL: f64 = 1e-11;
const DROP_TOL: f64 = 1e-13;
const REFACTOR_EVERY: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum LpStatus {
    Optimal,
    Infeasible,
    /// The pivot budget ran out, even under Bland's rule.
    Stalled,
}

struct Tableau {
    m: usize,
    ncols: usize,
    /// Dense `[A | I]` and right-hand side of the original rows.
    a0: Vec<f64>,
    b0: Vec<f64>,
    cost: Vec<f64>,
    /// `B^-1 [A | I]`, row-major.
    t: Vec<f64>,
    beta: Vec<f64>,
    d: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    basis: Vec<usize>,
    /// Row of a basic column, `usize::MAX` when nonbasic.
    row_of: Vec<usize>,
    at_upper: Vec<bool>,
    xb: Vec<f64>,
    since_refactor: usize,
    pivots: usize,
}

impl Tableau {
    fn new(p: &Problem) -> Self {
        let n = p.num_vars();
        let m = p.num_rows();
        let ncols = n + m;
        let mut a0 = vec![0.0; m * ncols];
        let mut lo = p.lower.clone();
        let mut hi = p.upper.clone();
        let mut b0 = Vec::with_capacity(m);
        for (i, row) in p.rows.iter().enumerate() {
            let (mut min_ax, mut max_ax) = (0.0, 0.0);
            for &(j, a) in &row.coefs {
                a0[i * ncols + j] += a;
            }
            for j in 0..n {
                let a = a0[i * ncols + j];
                if a != 0.0 {
                    let (x, y) = (a * p.lower[j], a * p.upper[j]);
                    min_ax += x.min(y);
                    max_ax += x.max(y);
                }
            }
            a0[i * ncols + n + i] = 1.0;
            b0.push(row.rhs);
            // slack s = rhs - a·x, bounded by what the variable box allows
            let (sl, su) = match row.sense {
                Sense::Le => (0.0, (row.rhs - min_ax).max(0.0)),
                Sense::Ge => ((row.rhs - max_ax).min(0.0), 0.0),
                Sense::Eq => (0.0, 0.0),
            };
            lo.push(sl);
            hi.push(su);
        }
        let mut cost = p.cost.clone();
        cost.resize(ncols, 0.0);
        let mut tab = Self {
            m,
            ncols,
            t: a0.clone(),
            a0,
            beta: b0.clone(),
            b0,
            d: cost.clone(),
            cost,
            lo,
            hi,
            basis: (n..ncols).collect(),
            row_of: (0..ncols).map(|j| if j >= n { j - n } else { usize::MAX }).collect(),
            at_upper: vec![false; ncols],
            xb: vec![0.0; m],
            since_refactor: 0,
            pivots: 0,
        };
        tab.fix_dual_signs();
        tab.recompute_xb();
        tab
    }

    fn value(&self, j: usize) -> f64 {
        match self.row_of[j] {
            usize::MAX => {
                if self.at_upper[j] {
                    self.hi[j]
                } else {
                    self.lo[j]
                }
            }
            r => self.xb[r],
        }
    }

    fn values(&self, n: usize) -> Vec<f64> {
        (0..n).map(|j| self.value(j)).collect()
    }

    fn objective(&self) -> f64 {
        (0..self.ncols).map(|j| self.cost[j] * self.value(j)).sum()
    }

    /// Parks every nonbasic column at the bound matching its reduced cost;
    /// reduced costs within `DUAL_TOL` of zero keep their bound.
    fn fix_dual_signs(&mut self) {
        for j in 0..self.ncols {
            if self.row_of[j] == usize::MAX {
                if self.d[j] < -DUAL_TOL {
                    self.at_upper[j] = true;
                } else if self.d[j] > DUAL_TOL {
                    self.at_upper[j] = false;
                }
            }
        }
    }

    fn recompute_xb(&mut self) {
        let nc = self.ncols;
        let mut xn = vec![0.0; nc];
        for (j, v) in xn.iter_mut().enumerate() {
            if self.row_of[j] == usize::MAX {
                *v = if self.at_upper[j] { self.hi[j] } else { self.lo[j] };
            }
        }
        for r in 0..self.m {
            let row = &self.t[r * nc..(r + 1) * nc];
            let s: f64 = row.iter().zip(&xn).filter(|(a, _)| **a != 0.0).map(|(a, v)| a * v).sum();
            self.xb[r] = self.beta[r] - s;
        }
    }

    fn set_bounds(&mut self, j: usize, lo: f64, hi: f64) {
        self.lo[j] = lo;
        self.hi[j] = hi;
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let nc = self.ncols;
        let piv = self.t[r * nc + q];
        {
            let row = &mut self.t[r * nc..(r + 1) * nc];
            for v in row.iter_mut() {
                *v /= piv;
            }
            row[q] = 1.0;
        }
        self.beta[r] /= piv;
        let nz: Vec<usize> = (0..nc).filter(|&j| self.t[r * nc + j] != 0.0).collect();
        let prow: Vec<f64> = nz.iter().map(|&j| self.t[r * nc + j]).collect();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.t[i * nc + q];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.t[i * nc..(i + 1) * nc];
            for (&j, &a) in nz.iter().zip(&prow) {
                let v = row[j] - f * a;
                row[j] = if v.abs() < DROP_TOL { 0.0 } else { v };
            }
            row[q] = 0.0;
            self.beta[i] -= f * self.beta[r];
        }
        let f = self.d[q];
        if f != 0.0 {
            for (&j, &a) in nz.iter().zip(&prow) {
                self.d[j] -= f * a;
            }
            self.d[q] = 0.0;
        }
        let leaving = self.basis[r];
        self.row_of[leaving] = usize::MAX;
        self.row_of[q] = r;
        self.basis[r] = q;
        self.since_refactor += 1;
        self.pivots += 1;
    }

    /// Rebuilds the tableau for the current basis from the original rows.
    /// Falls back to the slack basis if the basis matrix has become singular.
    fn refactor(&mut self) {
        let nc = self.ncols;
        let m = self.m;
        let mut t = self.a0.clone();
        let mut beta = self.b0.clone();
        let mut assigned = vec![false; m];
        let mut new_basis = vec![usize::MAX; m];
        let mut ok = true;
        for &q in &self.basis {
            let mut best = (0.0, usize::MAX);
            for i in 0..m {
                if !assigned[i] && t[i * nc + q].abs() > best.0 {
                    best = (t[i * nc + q].abs(), i);
                }
            }
            if best.0 < 1e-10 {
                ok = false;
                break;
            }
            let r = best.1;
            assigned[r] = true;
            new_basis[r] = q;
            let piv = t[r * nc + q];
            for v in &mut t[r * nc..(r + 1) * nc] {
                *v /= piv;
            }
            beta[r] /= piv;
            let nz: Vec<usize> = (0..nc).filter(|&j| t[r * nc + j] != 0.0).collect();
            for i in 0..m {
                if i == r {
                    continue;
                }
                let f = t[i * nc + q];
                if f == 0.0 {
                    continue;
                }
                for &j in &nz {
                    let v = t[i * nc + j] - f * t[r * nc + j];
                    t[i * nc + j] = if v.abs() < DROP_TOL { 0.0 } else { v };
                }
                t[i * nc + q] = 0.0;
                beta[i] -= f * beta[r];
            }
        }
        if ok {
            self.t = t;
            self.beta = beta;
            self.basis = new_basis;
        } else {
            let n = nc - m;
            self.t = self.a0.clone();
            self.beta = self.b0.clone();
            self.basis = (n..nc).collect();
        }
        self.row_of = vec![usize::MAX; nc];
        for (r, &q) in self.basis.iter().enumerate() {
            self.row_of[q] = r;
        }
        self.d = self.cost.clone();
        for r in 0..m {
            let cb = self.cost[self.basis[r]];
            if cb != 0.0 {
                for j in 0..nc {
                    self.d[j] -= cb * self.t[r * nc + j];
                }
            }
        }
        for &q in &self.basis {
            self.d[q] = 0.0;
        }
        self.fix_dual_signs();
        self.recompute_xb();
        self.since_refactor = 0;
    }

    fn infeasibility(&self, r: usize) -> f64 {
        let q = self.basis[r];
        let x = self.xb[r];
        let (l, u) = (self.lo[q], self.hi[q]);
        let tol = PRIMAL_TOL * (1.0 + l.abs().max(u.abs()));
        if x < l - tol {
            l - x
        } else if x > u + tol {
            x - u
        } else {
            0.0
        }
    }

    /// Bounded dual simplex from the current (dual feasible) basis.
    fn dual_simplex(&mut self, max_iter: usize) -> LpStatus {
        let nc = self.ncols;
        let mut bland = false;
        let mut iter = 0;
        loop {
            if self.since_refactor >= REFACTOR_EVERY {
                self.refactor();
            }
            // leaving row
            let mut leave = None;
            let mut worst = 0.0;
            for r in 0..self.m {
                let v = self.infeasibility(r);
                if v > 0.0 {
                    if bland {
                        if leave.is_none_or(|l: usize| self.basis[r] < self.basis[l]) {
                            leave = Some(r);
                        }
                    } else if v > worst {
                        worst = v;
                        leave = Some(r);
                    }
                }
            }
            let Some(r) = leave else {
                return LpStatus::Optimal;
            };
            let p = self.basis[r];
            let below = self.xb[r] < self.lo[p];
            let Some(q) = self.entering(r, below, bland) else {
                if self.since_refactor == 0 {
                    return LpStatus::Infeasible;
                }
                // confirm on a fresh factorization: the same variable must
                // still be infeasible with no entering column
                self.refactor();
                let r = self.row_of[p];
                if r != usize::MAX && self.infeasibility(r) > 0.0 {
                    let below = self.xb[r] < self.lo[p];
                    if self.entering(r, below, bland).is_none() {
                        return LpStatus::Infeasible;
                    }
                }
                continue;
            };
            let target = if below { self.lo[p] } else { self.hi[p] };
            let a = self.t[r * nc + q];
            let xq = self.value(q);
            let delta = (self.xb[r] - target) / a;
            for i in 0..self.m {
                let tiq = self.t[i * nc + q];
                if tiq != 0.0 {
                    self.xb[i] -= tiq * delta;
                }
            }
            self.pivot(r, q);
            self.xb[r] = xq + delta;
            self.at_upper[p] = !below;
            // the leaving column's reduced cost sign matches its new bound up to round-off
            if (self.at_upper[p] && self.d[p] > 0.0) || (!self.at_upper[p] && self.d[p] < 0.0) {
                self.d[p] = 0.0;
            }
            iter += 1;
            if iter == max_iter / 2 {
                bland = true;
            }
            if iter >= max_iter {
                return LpStatus::Stalled;
            }
        }
    }

    /// Entering column for a dual simplex step on row `r`, or `None` when
    /// the row proves the bounds infeasible.
    fn entering(&self, r: usize, below: bool, bland: bool) -> Option<usize> {
        let nc = self.ncols;
        let row = &self.t[r * nc..(r + 1) * nc];
        let mut enter: Option<(usize, f64, f64)> = None;
        for (j, &a) in row.iter().enumerate() {
            if a.abs() <= PIVOT_TOL || self.row_of[j] != usize::MAX || self.hi[j] - self.lo[j] <= 0.0 {
                continue;
            }
            let up = self.at_upper[j];
            let eligible = if below { (!up && a < 0.0) || (up && a > 0.0) } else { (!up && a > 0.0) || (up && a < 0.0) };
            if !eligible {
                continue;
            }
            let ratio = self.d[j].abs() / a.abs();
            let better = match enter {
                None => true,
                Some((bj, br, ba)) => {
                    if bland {
                        ratio < br - 1e-12 || (ratio <= br + 1e-12 && j < bj)
                    } else {
                        ratio < br - 1e-12 || (ratio <= br + 1e-12 && a.abs() > ba)
                    }
                }
            };
            if better {
                enter = Some((j, ratio, a.abs()));
            }
        }
        enter.map(|(j, _, _)| j)
    }

    /// Solves the LP for the current bounds, confirming feasibility of the
    /// final point against the original rows.
    fn solve(&mut self) -> LpStatus {
        let max_iter = 50 * (self.m + self.ncols);
        self.fix_dual_signs();
        self.recompute_xb();
        for _ in 0..3 {
            match self.dual_simplex(max_iter) {
                LpStatus::Optimal => {
                    if self.residual() <= 1e-7 {
                        return LpStatus::Optimal;
                    }
                    self.refactor();
                }
                status => return status,
            }
        }
        LpStatus::Optimal
    }

    fn residual(&self) -> f64 {
        let nc = self.ncols;
        let x: Vec<f64> = (0..nc).map(|j| self.value(j)).collect();
        let mut worst: f64 = 0.0;
        for i in 0..self.m {
            let row = &self.a0[i * nc..(i + 1) * nc];
            let lhs: f64 = row.iter().zip(&x).filter(|(a, _)| **a != 0.0).map(|(a, v)| a * v).sum();
            worst = worst.max((lhs - self.b0[i]).abs() / (1.0 + self.b0[i].abs()));
        }
        worst
    }
}

/// Solves the continuous relaxation; integrality flags are ignored.
pub fn solve_lp(problem: &Problem) -> Result<Solution> {
    problem.validate()?;
    let mut tab = Tableau::new(problem);
    match tab.solve() {
        LpStatus::Infeasible => Err(Error::Infeasible("linear relaxation has no feasible point".into())),
        LpStatus::Stalled => Err(stalled(None)),
        LpStatus::Optimal => {
            let x = tab.values(problem.num_vars());
            Ok(Solution {
                objective: problem.objective(&x),
                x,
                gap: 0.0,
                nodes: 1,
            })
        }
    }
}

fn stalled(incumbent: Option<f64>) -> Error {
    Error::Timeout {
        reason: "simplex pivot budget exhausted".into(),
        incumbent,
    }
}

struct Node {
    bound: f64,
    seq: usize,
    /// Bounds of the integer variables, in `ints` order.
    bounds: Vec<(f64, f64)>,
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
    // max-heap on the reverse: smallest bound first, then oldest
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

fn prune_level(incumbent: f64, gap: f64) -> f64 {
    incumbent - gap * incumbent.abs().max(1.0)
}

/// Best-first branch-and-bound with depth-first plunging.
pub fn solve(problem: &Problem, options: &Options) -> Result<Solution> {
    problem.validate()?;
    let start = Instant::now();
    let ints: Vec<usize> = (0..problem.num_vars()).filter(|&j| problem.integer[j]).collect();
    for &j in &ints {
        let (l, u) = (problem.lower[j].ceil(), problem.upper[j].floor());
        if l > u {
            return Err(Error::Infeasible(format!("integer variable {j} has no integral value in its bounds")));
        }
    }
    let root_bounds: Vec<(f64, f64)> = ints
        .iter()
        .map(|&j| (problem.lower[j].ceil(), problem.upper[j].floor()))
        .collect();

    let mut tab = Tableau::new(problem);
    let mut heap = BinaryHeap::new();
    let mut seq = 0;
    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    let mut nodes = 0;
    let mut next = Some(Node {
        bound: f64::NEG_INFINITY,
        seq,
        bounds: root_bounds,
    });
    let mut root_infeasible = false;

    loop {
        let node = match next.take() {
            Some(n) => n,
            None => match heap.pop() {
                Some(n) => n,
                None => break,
            },
        };
        if let Some((inc, _)) = &incumbent {
            if node.bound >= prune_level(*inc, options.gap) {
                continue;
            }
        }
        nodes += 1;
        if nodes > options.max_nodes || options.time_limit.is_some_and(|t| start.elapsed() > t) {
            return Err(Error::Timeout {
                reason: format!("{} nodes, {:.1?}", nodes - 1, start.elapsed()),
                incumbent: incumbent.map(|(v, _)| v),
            });
        }
        for (k, &j) in ints.iter().enumerate() {
            tab.set_bounds(j, node.bounds[k].0, node.bounds[k].1);
        }
        match tab.solve() {
            LpStatus::Optimal => {}
            LpStatus::Infeasible => {
                if nodes == 1 {
                    root_infeasible = true;
                }
                continue;
            }
            LpStatus::Stalled => return Err(stalled(incumbent.map(|(v, _)| v))),
        }
        let obj = tab.objective();
        if let Some((inc, _)) = &incumbent {
            if obj >= prune_level(*inc, options.gap) {
                continue;
            }
        }
        // most fractional integer variable
        let mut branch: Option<(usize, f64, f64)> = None;
        for (k, &j) in ints.iter().enumerate() {
            let v = tab.value(j);
            let frac = v - v.floor();
            let dist = frac.min(1.0 - frac);
            if dist > options.int_tol && branch.is_none_or(|(_, _, bd)| dist > bd + 1e-12) {
                branch = Some((k, v, dist));
            }
        }
        match branch {
            None => {
                let x = tab.values(problem.num_vars());
                if incumbent.as_ref().is_none_or(|(inc, _)| obj < *inc) {
                    incumbent = Some((obj, x));
                }
            }
            Some((k, v, _)) => {
                let mut down = node.bounds.clone();
                down[k].1 = v.floor();
                let mut up = node.bounds;
                up[k].0 = v.ceil();
                let (first, second) = if v - v.floor() >= 0.5 { (up, down) } else { (down, up) };
                seq += 1;
                heap.push(Node {
                    bound: obj,
                    seq,
                    bounds: second,
                });
                seq += 1;
                next = Some(Node {
                    bound: obj,
                    seq,
                    bounds: first,
                });
            }
        }
    }

    let Some((_, x_inc)) = incumbent else {
        let why = if root_infeasible {
            "linear relaxation has no feasible point"
        } else {
            "no integral point satisfies the constraints"
        };
        return Err(Error::Infeasible(why.into()));
    };

    // polish: fix the integer part and re-solve the LP on a fresh tableau
    let mut fixed = problem.clone();
    for &j in &ints {
        let v = x_inc[j].round();
        fixed.set_bounds(j, v, v);
    }
    let polished = solve_lp(&fixed)?;
    let mut x = polished.x;
    for &j in &ints {
        x[j] = x[j].round();
    }
    let objective = problem.objective(&x);
    let best_open = heap.iter().map(|n| n.bound).fold(objective, f64::min);
    let gap = ((objective - best_open) / objective.abs().max(1.0)).max(0.0);
    Ok(Solution {
        x,
        objective,
        gap,
        nodes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Exhaustive search over an integer box.
    fn enumerate(p: &Problem) -> Option<f64> {
        let n = p.num_vars();
        let mut x: Vec<f64> = p.lower.clone();
        let mut best: Option<f64> = None;
        loop {
            if p.max_violation(&x).0 <= 1e-9 {
                let v = p.objective(&x);
                if best.is_none_or(|b| v < b) {
                    best = Some(v);
                }
            }
            let mut k = 0;
            loop {
                if k == n {
                    return best;
                }
                if x[k] < p.upper[k] {
                    x[k] += 1.0;
                    break;
                }
                x[k] = p.lower[k];
                k += 1;
            }
        }
    }

    #[test]
    fn textbook_lp() {
        // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18 -> (2, 6), 36
        let mut p = Problem::new();
        let x = p.add_var(-3.0, 0.0, 100.0, false);
        let y = p.add_var(-5.0, 0.0, 100.0, false);
        p.add_row(vec![(x, 1.0)], Sense::Le, 4.0, "a");
        p.add_row(vec![(y, 2.0)], Sense::Le, 12.0, "b");
        p.add_row(vec![(x, 3.0), (y, 2.0)], Sense::Le, 18.0, "c");
        let s = solve_lp(&p).unwrap();
        assert!((s.objective + 36.0).abs() < 1e-9);
        assert!((s.x[0] - 2.0).abs() < 1e-9 && (s.x[1] - 6.0).abs() < 1e-9);
    }

    #[test]
    fn equality_and_ge_rows() {
        // min x + y, x + y >= 2, x - y = 1 -> x = 1.5, y = 0.5
        let mut p = Problem::new();
        let x = p.add_var(1.0, -10.0, 10.0, false);
        let y = p.add_var(1.0, -10.0, 10.0, false);
        p.add_row(vec![(x, 1.0), (y, 1.0)], Sense::Ge, 2.0, "sum");
        p.add_row(vec![(x, 1.0), (y, -1.0)], Sense::Eq, 1.0, "diff");
        let s = solve_lp(&p).unwrap();
        assert!((s.objective - 2.0).abs() < 1e-9);
        assert!((s.x[0] - s.x[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_lp_is_reported() {
        let mut p = Problem::new();
        let x = p.add_var(1.0, 0.0, 1.0, false);
        p.add_row(vec![(x, 1.0)], Sense::Ge, 2.0, "too-big");
        assert!(matches!(solve_lp(&p), Err(Error::Infeasible(_))));
        assert!(matches!(solve(&p, &Options::default()), Err(Error::Infeasible(_))));
    }

    #[test]
    fn integer_knapsack() {
        // max 5a + 4b + 3c, 2a + 3b + c <= 5, 4a + b + 2c <= 11, 3a + 4b + 2c <= 8, binaries
        let mut p = Problem::new();
        let v: Vec<usize> = [-5.0, -4.0, -3.0].iter().map(|&c| p.add_var(c, 0.0, 1.0, true)).collect();
        p.add_row(vec![(v[0], 2.0), (v[1], 3.0), (v[2], 1.0)], Sense::Le, 5.0, "r1");
        p.add_row(vec![(v[0], 4.0), (v[1], 1.0), (v[2], 2.0)], Sense::Le, 11.0, "r2");
        p.add_row(vec![(v[0], 3.0), (v[1], 4.0), (v[2], 2.0)], Sense::Le, 8.0, "r3");
        let s = solve(&p, &Options::default()).unwrap();
        assert_eq!(Some(s.objective), enumerate(&p));
    }

    #[test]
    fn fractional_relaxation_needs_branching() {
        // max x + y, 2x + 2y <= 3, binaries: LP gives 1.5, integer optimum 1
        let mut p = Problem::new();
        let x = p.add_var(-1.0, 0.0, 1.0, true);
        let y = p.add_var(-1.0, 0.0, 1.0, true);
        p.add_row(vec![(x, 2.0), (y, 2.0)], Sense::Le, 3.0, "cap");
        assert!((solve_lp(&p).unwrap().objective + 1.5).abs() < 1e-9);
        let s = solve(&p, &Options::default()).unwrap();
        assert!((s.objective + 1.0).abs() < 1e-9);
        assert!(s.nodes > 1);
    }

    #[test]
    fn node_budget_raises_timeout() {
        let mut p = Problem::new();
        let xs: Vec<usize> = (0..12).map(|k| p.add_var(-1.0 - 0.01 * k as f64, 0.0, 1.0, true)).collect();
        p.add_row(xs.iter().map(|&j| (j, 2.0)).collect(), Sense::Le, 11.0, "odd");
        let opts = Options {
            max_nodes: 2,
            ..Options::default()
        };
        assert!(matches!(solve(&p, &opts), Err(Error::Timeout { .. })));
    }

    fn small_problem() -> impl Strategy<Value = Problem> {
        let n = 2..5usize;
        n.prop_flat_map(|n| {
            (
                prop::collection::vec(-5i32..6, n),
                prop::collection::vec((prop::collection::vec(-4i32..5, n), -6i32..12, 0u8..3), 1..5),
                prop::collection::vec(1i32..4, n),
            )
        })
        .prop_map(|(cost, rows, ub)| {
            let mut p = Problem::new();
            for (c, u) in cost.iter().zip(&ub) {
                p.add_var(*c as f64, 0.0, *u as f64, true);
            }
            for (k, (coefs, rhs, sense)) in rows.into_iter().enumerate() {
                let sense = [Sense::Le, Sense::Ge, Sense::Eq][sense as usize];
                let coefs = coefs.into_iter().enumerate().map(|(j, a)| (j, a as f64)).collect();
                p.add_row(coefs, sense, rhs as f64, format!("r{k}"));
            }
            p
        })
    }

    proptest! {
        #[test]
        fn branch_and_bound_matches_enumeration(p in small_problem()) {
            let brute = enumerate(&p);
            match solve(&p, &Options::default()) {
                Ok(s) => {
                    let b = brute.expect("solver found a point enumeration missed");
                    prop_assert!((s.objective - b).abs() <= 1e-6 * (1.0 + b.abs()));
                    prop_assert!(p.max_violation(&s.x).0 <= 1e-6);
                }
                Err(Error::Infeasible(_)) => prop_assert!(brute.is_none()),
                Err(e) => prop_assert!(false, "{e}"),
            }
        }

        #[test]
        fn lp_optimum_is_not_beaten_by_integer_points(p in small_problem()) {
            if let (Ok(lp), Some(b)) = (solve_lp(&p), enumerate(&p)) {
                prop_assert!(lp.objective <= b + 1e-7);
                prop_assert!(p.max_violation(&lp.x).0 <= 1e-6);
            }
        }
    }
}
