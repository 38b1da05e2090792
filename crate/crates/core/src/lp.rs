//! Dense bounded-variable simplex for small feasibility and maximization
//! problems.
//!
//! Rows are `a·x ≥ b` or `a·x = b` over boxed variables. The solver is a
//! dual simplex that keeps a dense inverse of the `n × n` working-set
//! matrix, so its cost per step does not grow with the number of rows
//! beyond one pass to find the most violated one. Pricing picks the most
//! violated row and the largest pivot; after a long run it switches to
//! Bland's rule for both choices, which rules out cycling. Every feasible
//! point is re-checked against all rows.
//!
//! The solver is generic over [`Scalar`], so the same code runs in `f64`
//! and in exact rational arithmetic.

// Dense kernels index several arrays in lockstep, and `!(a > b)` is the
// NaN-rejecting form on purpose.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

/// Residual bound every feasible point is re-checked against.
pub const RESIDUAL_TOL: f64 = 1e-8;
/// Default feasibility tolerance.
pub const DEFAULT_TOL: f64 = 1e-9;
/// Pivots smaller than this abort the solve.
pub const BREAKDOWN_PIVOT: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LpError {
    #[error("row {row}: {reason}")]
    InvalidRow { row: usize, reason: &'static str },
    #[error("invalid bounds for variable {0}")]
    InvalidBounds(usize),
    #[error("pivot of magnitude {pivot:e} below the breakdown threshold")]
    NumericalBreakdown { pivot: f64 },
    #[error("objective unbounded")]
    Unbounded,
    #[error("infeasibility proof failed its re-check (margin {gap:e})")]
    CertificateFailed { gap: f64 },
    #[error("returned point violates a row by {residual:e}")]
    ResidualCheckFailed { residual: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub coeffs: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

impl Constraint {
    pub fn ge(coeffs: Vec<(usize, f64)>, rhs: f64) -> Self {
        Constraint { coeffs, relation: Relation::Ge, rhs }
    }

    pub fn eq(coeffs: Vec<(usize, f64)>, rhs: f64) -> Self {
        Constraint { coeffs, relation: Relation::Eq, rhs }
    }

    pub fn activity(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(j, a)| a * x[j]).sum()
    }

    /// Amount by which `x` violates the row (0 when satisfied).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let d = self.activity(x) - self.rhs;
        match self.relation {
            Relation::Ge => (-d).max(0.0),
            Relation::Eq => d.abs(),
        }
    }

    /// Same row multiplied by a positive factor.
    pub fn scaled(&self, factor: f64) -> Self {
        Constraint {
            coeffs: self.coeffs.iter().map(|&(j, a)| (j, a * factor)).collect(),
            rhs: self.rhs * factor,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearProgram {
    num_vars: usize,
    lower: Vec<f64>,
    upper: Vec<f64>,
    constraints: Vec<Constraint>,
    objective: Option<Vec<(usize, f64)>>,
    names: Option<Vec<String>>,
}

impl LinearProgram {
    /// Program over `num_vars` variables in `[0, 1]`.
    pub fn new(num_vars: usize) -> Self {
        LinearProgram {
            num_vars,
            lower: vec![0.0; num_vars],
            upper: vec![1.0; num_vars],
            constraints: Vec::new(),
            objective: None,
            names: None,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn bounds(&self, var: usize) -> (f64, f64) {
        (self.lower[var], self.upper[var])
    }

    pub fn set_bounds(&mut self, var: usize, lower: f64, upper: f64) -> Result<(), LpError> {
        if var >= self.num_vars || !lower.is_finite() || !upper.is_finite() || lower > upper {
            return Err(LpError::InvalidBounds(var));
        }
        self.lower[var] = lower;
        self.upper[var] = upper;
        Ok(())
    }

    pub fn add(&mut self, c: Constraint) -> Result<(), LpError> {
        let row = self.constraints.len();
        if !c.rhs.is_finite() || c.coeffs.iter().any(|(_, a)| !a.is_finite()) {
            return Err(LpError::InvalidRow { row, reason: "non-finite coefficient" });
        }
        if c.coeffs.iter().any(|&(j, _)| j >= self.num_vars) {
            return Err(LpError::InvalidRow { row, reason: "variable index out of range" });
        }
        self.constraints.push(c);
        Ok(())
    }

    /// Objective to maximize.
    pub fn set_objective(&mut self, coeffs: Vec<(usize, f64)>) -> Result<(), LpError> {
        if coeffs.iter().any(|&(j, a)| j >= self.num_vars || !a.is_finite()) {
            return Err(LpError::InvalidRow { row: usize::MAX, reason: "bad objective" });
        }
        self.objective = Some(coeffs);
        Ok(())
    }

    pub fn set_names(&mut self, names: Vec<String>) {
        assert_eq!(names.len(), self.num_vars);
        self.names = Some(names);
    }

    /// Largest violation of any row or bound at `x`.
    pub fn max_residual(&self, x: &[f64]) -> f64 {
        let rows = self.constraints.iter().map(|c| c.violation(x));
        let bounds = (0..self.num_vars).map(|j| (self.lower[j] - x[j]).max(x[j] - self.upper[j]).max(0.0));
        rows.chain(bounds).fold(0.0, f64::max)
    }

    fn var_name(&self, j: usize) -> String {
        match &self.names {
            Some(n) => n[j].clone(),
            None => alloc::format!("x{j}"),
        }
    }
}

impl fmt::Display for LinearProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.constraints {
            for (i, &(j, a)) in c.coeffs.iter().enumerate() {
                if i > 0 {
                    f.write_str(" ")?;
                }
                write!(f, "{a}*{}", self.var_name(j))?;
            }
            let rel = match c.relation {
                Relation::Ge => ">=",
                Relation::Eq => "=",
            };
            writeln!(f, " {rel} {}", c.rhs)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Feasible,
    Infeasible,
    /// The iteration cap was hit before a decision.
    MaxReached,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpOutcome {
    pub status: LpStatus,
    pub point: Option<Vec<f64>>,
    pub max_residual: f64,
    pub iterations: usize,
    /// General rows in the final working set.
    pub working_rows: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iterations: usize,
    pub exact: bool,
    /// Use Bland's rule from the first step.
    pub bland_only: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tol: DEFAULT_TOL, max_iterations: 200_000, exact: false, bland_only: false }
    }
}

/// Arithmetic the tableau runs on.
pub trait Scalar:
    Clone
    + PartialOrd
    + fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn zero() -> Self;
    fn from_f64(v: f64) -> Self;
    fn to_f64(&self) -> f64;
    fn abs(&self) -> Self;
    fn is_zero(&self) -> bool;
    /// Pivot candidates at or below this magnitude are ignored.
    fn pivot_tol() -> Self;
    /// Ratios this close are ties.
    fn tie_tol() -> Self;
    /// Multipliers may dip this far below zero in the Harris ratio test.
    fn dual_slack() -> Self;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn from_f64(v: f64) -> Self {
        v
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn pivot_tol() -> Self {
        1e-9
    }
    fn tie_tol() -> Self {
        1e-13
    }
    fn dual_slack() -> Self {
        1e-9
    }
}

impl Scalar for BigRational {
    fn zero() -> Self {
        <BigRational as Zero>::zero()
    }
    fn from_f64(v: f64) -> Self {
        <BigRational as FromPrimitive>::from_f64(v).expect("finite input")
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn abs(&self) -> Self {
        Signed::abs(self)
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn pivot_tol() -> Self {
        <BigRational as Zero>::zero()
    }
    fn tie_tol() -> Self {
        <BigRational as Zero>::zero()
    }
    fn dual_slack() -> Self {
        <BigRational as Zero>::zero()
    }
}

#[allow(dead_code)]
fn rational(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// A constraint that can sit in the working set, written as `n·x ≥ b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Bound {
    /// Row `i`; `true` when an equality row is written as `−a·x ≥ −b`.
    Row(usize, bool),
    Lower(usize),
    Upper(usize),
}

impl Bound {
    /// Position in the Bland order: rows first, then bounds by variable.
    fn order(self, m: usize) -> usize {
        match self {
            Bound::Row(i, _) => i,
            Bound::Lower(j) => m + 2 * j,
            Bound::Upper(j) => m + 2 * j + 1,
        }
    }
}

enum Finish {
    Feasible,
    Infeasible,
    IterationCap,
}

/// Dual simplex in row-basis form.
///
/// The working set holds `n` linearly independent constraints met with
/// equality; `x` is their intersection and `inv` the inverse of the matrix
/// whose rows are their normals. The start uses one bound per variable,
/// chosen so that the objective's multipliers are nonnegative; each step
/// brings in a violated constraint and drops the working constraint picked
/// by the multiplier ratio test. A violated constraint that no working
/// inequality can make room for proves infeasibility.
struct DualSimplex<'a, S: Scalar> {
    lp: &'a LinearProgram,
    n: usize,
    m: usize,
    rows: Vec<Vec<(usize, S)>>,
    rhs: Vec<S>,
    lower: Vec<S>,
    upper: Vec<S>,
    norms: Vec<f64>,
    inv: Vec<S>,
    work: Vec<Bound>,
    in_work: Vec<bool>,
    lower_in: Vec<bool>,
    upper_in: Vec<bool>,
    x: Vec<S>,
    lambda: Vec<S>,
    iterations: usize,
    bland: bool,
}

impl<'a, S: Scalar> DualSimplex<'a, S> {
    fn new(lp: &'a LinearProgram) -> Self {
        let n = lp.num_vars;
        let m = lp.constraints.len();
        let rows: Vec<Vec<(usize, S)>> = lp
            .constraints
            .iter()
            .map(|c| c.coeffs.iter().map(|&(j, a)| (j, S::from_f64(a))).collect())
            .collect();
        let rhs = lp.constraints.iter().map(|c| S::from_f64(c.rhs)).collect();
        let norms = lp
            .constraints
            .iter()
            .map(|c| libm::sqrt(c.coeffs.iter().map(|(_, a)| a * a).sum::<f64>()).max(f64::MIN_POSITIVE))
            .collect();
        let lower: Vec<S> = lp.lower.iter().map(|&v| S::from_f64(v)).collect();
        let upper: Vec<S> = lp.upper.iter().map(|&v| S::from_f64(v)).collect();
        let one = S::from_f64(1.0);
        // Objective is maximized; the multipliers are for minimizing −c·x.
        let mut c = vec![S::zero(); n];
        match &lp.objective {
            Some(obj) => {
                for &(j, a) in obj {
                    c[j] = c[j].clone() - S::from_f64(a);
                }
            }
            // A pure feasibility problem is completely dual degenerate and
            // stalls; minimizing a spread of positive weights avoids that.
            None => {
                for (j, cj) in c.iter_mut().enumerate() {
                    *cj = S::from_f64(1.0 + (j as f64 + 1.0) / (n as f64 + 1.0));
                }
            }
        }
        let mut inv = vec![S::zero(); n * n];
        let mut work = Vec::with_capacity(n);
        let mut x = Vec::with_capacity(n);
        let mut lambda = Vec::with_capacity(n);
        let mut lower_in = vec![false; n];
        let mut upper_in = vec![false; n];
        for j in 0..n {
            if c[j] >= S::zero() {
                work.push(Bound::Lower(j));
                inv[j * n + j] = one.clone();
                x.push(lower[j].clone());
                lambda.push(c[j].clone());
                lower_in[j] = true;
            } else {
                work.push(Bound::Upper(j));
                inv[j * n + j] = -one.clone();
                x.push(upper[j].clone());
                lambda.push(-c[j].clone());
                upper_in[j] = true;
            }
        }
        DualSimplex {
            lp,
            n,
            m,
            rows,
            rhs,
            lower,
            upper,
            norms,
            inv,
            work,
            in_work: vec![false; m],
            lower_in,
            upper_in,
            x,
            lambda,
            iterations: 0,
            bland: false,
        }
    }

    /// Normal and right-hand side of a constraint in `n·x ≥ b` form.
    fn normal(&self, b: Bound) -> (Vec<(usize, S)>, S) {
        let one = S::from_f64(1.0);
        match b {
            Bound::Row(i, false) => (self.rows[i].clone(), self.rhs[i].clone()),
            Bound::Row(i, true) => (self.rows[i].iter().map(|(j, a)| (*j, -a.clone())).collect(), -self.rhs[i].clone()),
            Bound::Lower(j) => (vec![(j, one)], self.lower[j].clone()),
            Bound::Upper(j) => (vec![(j, -one)], -self.upper[j].clone()),
        }
    }

    fn dot(&self, a: &[(usize, S)]) -> S {
        let mut s = S::zero();
        for (j, v) in a {
            s = s + v.clone() * self.x[*j].clone();
        }
        s
    }

    /// Most violated constraint outside the working set (first violated in
    /// Bland order once cycling protection is on).
    fn pick_violated(&self, feas_tol: f64, skip: &[Bound]) -> Option<(Bound, S)> {
        let mut best: Option<(f64, Bound, S)> = None;
        let mut consider = |score: f64, b: Bound, viol: S| {
            if score <= feas_tol || skip.contains(&b) {
                return false;
            }
            if best.as_ref().is_none_or(|(s, _, _)| score > *s) {
                best = Some((score, b, viol));
            }
            self.bland
        };
        for i in 0..self.m {
            if self.in_work[i] {
                continue;
            }
            let c = &self.lp.constraints[i];
            let act = self.dot(&self.rows[i]);
            let d = act - self.rhs[i].clone();
            let (b, viol) = match c.relation {
                Relation::Ge => (Bound::Row(i, false), -d),
                Relation::Eq if d > S::zero() => (Bound::Row(i, true), d),
                Relation::Eq => (Bound::Row(i, false), -d),
            };
            if consider(viol.to_f64() / self.norms[i], b, viol) {
                return best.map(|(_, b, v)| (b, v));
            }
        }
        for j in 0..self.n {
            if !self.lower_in[j] {
                let viol = self.lower[j].clone() - self.x[j].clone();
                if consider(viol.to_f64(), Bound::Lower(j), viol) {
                    break;
                }
            }
            if !self.upper_in[j] {
                let viol = self.x[j].clone() - self.upper[j].clone();
                if consider(viol.to_f64(), Bound::Upper(j), viol) {
                    break;
                }
            }
        }
        best.map(|(_, b, v)| (b, v))
    }

    /// Checks the infeasibility proof for violated constraint `p` with
    /// working-set coordinates `y`: the combination `n_p − Σ y_q m_q` with
    /// every inequality weight `y_q ≤ 0` must leave a positive margin over
    /// the whole box. Evaluated in `f64` from the original data.
    fn farkas_gap(&self, p: Bound, y: &[S]) -> f64 {
        let to64 = |(j, v): (usize, S)| (j, v.to_f64());
        let (np, bp) = self.normal(p);
        let mut v = vec![0.0; self.n];
        for (j, a) in np.into_iter().map(to64) {
            v[j] += a;
        }
        let mut beta = bp.to_f64();
        for (q, &w) in self.work.iter().enumerate() {
            let mut yq = y[q].to_f64();
            if !self.is_fixed(q) {
                yq = yq.min(0.0);
            }
            if yq == 0.0 {
                continue;
            }
            let (mq, bq) = self.normal(w);
            for (j, a) in mq.into_iter().map(to64) {
                v[j] -= yq * a;
            }
            beta -= yq * bq.to_f64();
        }
        let slop: f64 =
            (0..self.n).map(|j| v[j].abs() * self.lp.lower[j].abs().max(self.lp.upper[j].abs())).sum();
        beta - slop
    }

    fn is_fixed(&self, q: usize) -> bool {
        matches!(self.work[q], Bound::Row(i, _) if self.lp.constraints[i].relation == Relation::Eq)
    }

    fn set_membership(&mut self, b: Bound, on: bool) {
        match b {
            Bound::Row(i, _) => self.in_work[i] = on,
            Bound::Lower(j) => self.lower_in[j] = on,
            Bound::Upper(j) => self.upper_in[j] = on,
        }
    }

    /// Recomputes `x` from the working set.
    fn refresh_x(&mut self) {
        let n = self.n;
        let b: Vec<S> = self.work.iter().map(|&w| self.normal(w).1).collect();
        for i in 0..n {
            let mut s = S::zero();
            for q in 0..n {
                let v = &self.inv[i * n + q];
                if !v.is_zero() {
                    s = s + v.clone() * b[q].clone();
                }
            }
            self.x[i] = s;
        }
    }

    /// Rebuilds the inverse from scratch by Gauss–Jordan elimination.
    fn refactor(&mut self) -> Result<(), LpError> {
        let n = self.n;
        let mut a = vec![S::zero(); n * n];
        for (q, &w) in self.work.iter().enumerate() {
            for (j, v) in self.normal(w).0 {
                a[q * n + j] = a[q * n + j].clone() + v;
            }
        }
        let mut inv = vec![S::zero(); n * n];
        for i in 0..n {
            inv[i * n + i] = S::from_f64(1.0);
        }
        for col in 0..n {
            let piv_row = (col..n)
                .filter(|&r| !a[r * n + col].is_zero())
                .max_by(|&r1, &r2| a[r1 * n + col].abs().partial_cmp(&a[r2 * n + col].abs()).unwrap())
                .ok_or(LpError::NumericalBreakdown { pivot: 0.0 })?;
            if a[piv_row * n + col].abs().to_f64() < BREAKDOWN_PIVOT && !S::pivot_tol().is_zero() {
                return Err(LpError::NumericalBreakdown { pivot: a[piv_row * n + col].to_f64() });
            }
            if piv_row != col {
                for k in 0..n {
                    a.swap(piv_row * n + k, col * n + k);
                    inv.swap(piv_row * n + k, col * n + k);
                }
            }
            let p = a[col * n + col].clone();
            for k in 0..n {
                a[col * n + k] = a[col * n + k].clone() / p.clone();
                inv[col * n + k] = inv[col * n + k].clone() / p.clone();
            }
            for r in 0..n {
                if r == col || a[r * n + col].is_zero() {
                    continue;
                }
                let f = a[r * n + col].clone();
                for k in 0..n {
                    if !a[col * n + k].is_zero() {
                        a[r * n + k] = a[r * n + k].clone() - f.clone() * a[col * n + k].clone();
                    }
                    if !inv[col * n + k].is_zero() {
                        inv[r * n + k] = inv[r * n + k].clone() - f.clone() * inv[col * n + k].clone();
                    }
                }
            }
        }
        self.inv = inv;
        Ok(())
    }

    /// Textbook ratio test with ties broken by the fixed Bland order.
    fn ratio_bland(&self, y: &[S]) -> Option<(S, usize)> {
        let ptol = S::pivot_tol();
        let ttol = S::tie_tol();
        let mut best: Option<(S, usize)> = None;
        for q in 0..self.n {
            if self.is_fixed(q) || !(y[q] > ptol) {
                continue;
            }
            let ratio = self.lambda[q].clone() / y[q].clone();
            let take = match &best {
                None => true,
                Some((r, bq)) => {
                    ratio < r.clone() - ttol.clone()
                        || ((ratio.clone() - r.clone()).abs() <= ttol
                            && self.work[q].order(self.m) < self.work[*bq].order(self.m))
                }
            };
            if take {
                best = Some((ratio, q));
            }
        }
        best
    }

    /// Harris two-pass ratio test: among the candidates whose ratio is
    /// within the relaxed bound, take the largest pivot.
    fn ratio_harris(&self, y: &[S]) -> Option<(S, usize)> {
        let ptol = S::pivot_tol();
        let slack = S::dual_slack();
        let candidates = || (0..self.n).filter(|&q| !self.is_fixed(q) && y[q] > ptol);
        let bound = candidates()
            .map(|q| (self.lambda[q].clone() + slack.clone()) / y[q].clone())
            .min_by(|a, b| a.partial_cmp(b).unwrap_or(core::cmp::Ordering::Equal))?;
        let q = candidates()
            .filter(|&q| self.lambda[q].clone() / y[q].clone() <= bound)
            .max_by(|&a, &b| y[a].partial_cmp(&y[b]).unwrap_or(core::cmp::Ordering::Equal))?;
        let ratio = self.lambda[q].clone() / y[q].clone();
        let ratio = if ratio < S::zero() { S::zero() } else { ratio };
        Some((ratio, q))
    }

    fn run(&mut self, opts: &SolverOptions, feas_tol: f64) -> Result<Finish, LpError> {
        let n = self.n;
        let ptol = S::pivot_tol();
        let ttol = S::tie_tol();
        let bland_after = 50 * (n + self.m).max(1);
        let stall_limit = 4 * n + 100;
        let mut stalled = 0usize;
        let mut tolerated: Vec<Bound> = Vec::new();
        loop {
            if !self.bland && (self.iterations >= bland_after || stalled >= stall_limit) {
                self.bland = true;
            }
            let Some((p, viol)) = self.pick_violated(feas_tol, &tolerated) else {
                return Ok(Finish::Feasible);
            };
            if self.iterations >= opts.max_iterations {
                return Ok(Finish::IterationCap);
            }
            let (np, _) = self.normal(p);
            // y = npᵀ M⁻¹: coordinates of the new normal in the working basis.
            let mut y = vec![S::zero(); n];
            for (k, v) in &np {
                for q in 0..n {
                    let e = &self.inv[*k * n + q];
                    if !e.is_zero() {
                        y[q] = y[q].clone() + v.clone() * e.clone();
                    }
                }
            }
            let best = if self.bland { self.ratio_bland(&y) } else { self.ratio_harris(&y) };
            let Some((theta, q)) = best else {
                if viol.to_f64() <= opts.tol {
                    tolerated.push(p);
                    continue;
                }
                let gap = self.farkas_gap(p, &y);
                if !(gap > 0.0) {
                    return Err(LpError::CertificateFailed { gap });
                }
                return Ok(Finish::Infeasible);
            };
            let yq = y[q].clone();
            if yq.abs().to_f64() < BREAKDOWN_PIVOT {
                return Err(LpError::NumericalBreakdown { pivot: yq.to_f64() });
            }
            self.iterations += 1;
            tolerated.clear();
            // Degenerate steps leave the dual objective unchanged.
            if theta.abs() <= ttol {
                stalled += 1;
            } else {
                stalled = 0;
            }
            // Step along column q of M⁻¹ until p holds with equality.
            let d: Vec<S> = (0..n).map(|i| self.inv[i * n + q].clone()).collect();
            let t = viol / yq.clone();
            for i in 0..n {
                if !d[i].is_zero() {
                    self.x[i] = self.x[i].clone() + t.clone() * d[i].clone();
                }
            }
            if !theta.is_zero() {
                for r in 0..n {
                    if !y[r].is_zero() {
                        self.lambda[r] = self.lambda[r].clone() - theta.clone() * y[r].clone();
                    }
                }
            }
            self.lambda[q] = theta;
            // M⁻¹ ← M⁻¹ − d (y − e_q)ᵀ / y_q.
            let mut w = y;
            w[q] = w[q].clone() - S::from_f64(1.0);
            let nz: Vec<usize> = (0..n).filter(|&k| !w[k].is_zero()).collect();
            let scaled: Vec<S> = nz.iter().map(|&k| w[k].clone() / yq.clone()).collect();
            for i in 0..n {
                if d[i].is_zero() {
                    continue;
                }
                let di = d[i].clone();
                for (&k, wk) in nz.iter().zip(&scaled) {
                    self.inv[i * n + k] = self.inv[i * n + k].clone() - di.clone() * wk.clone();
                }
            }
            let leaving = self.work[q];
            self.set_membership(leaving, false);
            self.set_membership(p, true);
            self.work[q] = p;
            if !ptol.is_zero() {
                if self.iterations.is_multiple_of(400) {
                    self.refactor()?;
                    self.refresh_x();
                } else if self.iterations.is_multiple_of(50) {
                    self.refresh_x();
                }
            }
        }
    }
}

/// Solves with default options and the given feasibility tolerance.
pub fn solve(lp: &LinearProgram, tol: f64) -> Result<LpOutcome, LpError> {
    solve_with(lp, &SolverOptions { tol, ..SolverOptions::default() })
}

pub fn solve_with(lp: &LinearProgram, opts: &SolverOptions) -> Result<LpOutcome, LpError> {
    if opts.exact {
        solve_generic::<BigRational>(lp, opts)
    } else {
        solve_generic::<f64>(lp, opts)
    }
}

fn solve_generic<S: Scalar>(lp: &LinearProgram, opts: &SolverOptions) -> Result<LpOutcome, LpError> {
    let mut ds = DualSimplex::<S>::new(lp);
    ds.bland = opts.bland_only;
    let feas_tol = if opts.exact { 0.0 } else { (opts.tol * 1e-2).max(1e-13) };
    let finish = ds.run(opts, feas_tol)?;
    let working_rows = ds.in_work.iter().filter(|&&b| b).count();
    let status = match finish {
        Finish::Feasible => LpStatus::Feasible,
        Finish::Infeasible => LpStatus::Infeasible,
        Finish::IterationCap => LpStatus::MaxReached,
    };
    if status != LpStatus::Feasible {
        return Ok(LpOutcome { status, point: None, max_residual: f64::INFINITY, iterations: ds.iterations, working_rows });
    }
    if !opts.exact {
        ds.refactor()?;
        ds.refresh_x();
    }
    let point: Vec<f64> = (0..lp.num_vars).map(|j| ds.x[j].to_f64().clamp(lp.lower[j], lp.upper[j])).collect();
    let max_residual = lp.max_residual(&point);
    if max_residual > RESIDUAL_TOL {
        return Err(LpError::ResidualCheckFailed { residual: max_residual });
    }
    Ok(LpOutcome { status, point: Some(point), max_residual, iterations: ds.iterations, working_rows })
}
