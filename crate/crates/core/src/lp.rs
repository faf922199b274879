//! Dense linear programming.
//!
//! Problems have the shape
//!
//! ```text
//! minimize    c·x
//! subject to  a_i·x <= b_i      for every row i
//!             lo_j <= x_j <= hi_j
//! ```
//!
//! and are solved with a two-phase primal simplex on a dictionary that
//! stores only the nonbasic columns, so the tableau is `rows × (d + 2)`.
//! Entering and leaving variables follow Bland's rule.
//!
//! The returned minimizer is always the lexicographic minimum of the optimal
//! face: after `c·x` is optimal, `x_1`, then `x_2`, ... are minimized in turn
//! while every earlier objective is held at its optimum. This makes the
//! minimizer a function of the feasible set alone, independent of row order.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Numerical tolerances shared by the solver and everything built on it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Slack allowed when testing `a·x <= b`.
    pub feas: f64,
    /// A row is reported active when `|a·x - b| <= active`.
    pub active: f64,
    /// Two minimizers are equal when their infinity-norm distance is `<= x`.
    pub x: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            feas: 1e-7,
            active: 1e-6,
            x: 1e-6,
        }
    }
}

impl Tolerances {
    pub fn same_point(&self, a: &[f64], b: &[f64]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(u, v)| (u - v).abs() <= self.x)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("dimension must be at least 1")]
    EmptyDimension,
    #[error("{what}: expected length {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("invalid bounds on variable {index}: [{lower}, {upper}]")]
    InvalidBound { index: usize, lower: f64, upper: f64 },
    #[error("simplex exceeded {0} pivots")]
    IterationLimit(usize),
}

/// Closed interval for one variable; either end may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bound {
    pub lower: f64,
    pub upper: f64,
}

impl Bound {
    pub fn new(lower: f64, upper: f64) -> Self {
        Self { lower, upper }
    }

    pub fn nonnegative() -> Self {
        Self::new(0.0, f64::INFINITY)
    }

    pub fn free() -> Self {
        Self::new(f64::NEG_INFINITY, f64::INFINITY)
    }

    fn contains(&self, v: f64, tol: f64) -> bool {
        v >= self.lower - tol && v <= self.upper + tol
    }
}

/// One inequality `coeffs·x <= rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    #[serde(rename = "a")]
    pub coeffs: Vec<f64>,
    #[serde(rename = "b")]
    pub rhs: f64,
}

impl Row {
    pub fn new(coeffs: Vec<f64>, rhs: f64) -> Self {
        Self { coeffs, rhs }
    }

    /// `a·x - b`; positive means violated.
    pub fn residual(&self, x: &[f64]) -> f64 {
        dot(&self.coeffs, x) - self.rhs
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    cost: Vec<f64>,
    rows: Vec<Row>,
    bounds: Vec<Bound>,
}

impl LinearProgram {
    pub fn new(cost: Vec<f64>, rows: Vec<Row>, bounds: Vec<Bound>) -> Result<Self, LpError> {
        let d = cost.len();
        if d == 0 {
            return Err(LpError::EmptyDimension);
        }
        if cost.iter().any(|v| !v.is_finite()) {
            return Err(LpError::NonFinite("cost"));
        }
        if bounds.len() != d {
            return Err(LpError::DimensionMismatch {
                what: "bounds",
                expected: d,
                found: bounds.len(),
            });
        }
        for (index, b) in bounds.iter().enumerate() {
            if b.lower.is_nan()
                || b.upper.is_nan()
                || b.lower == f64::INFINITY
                || b.upper == f64::NEG_INFINITY
                || b.lower > b.upper
            {
                return Err(LpError::InvalidBound {
                    index,
                    lower: b.lower,
                    upper: b.upper,
                });
            }
        }
        for row in &rows {
            validate_row(row, d)?;
        }
        Ok(Self { cost, rows, bounds })
    }

    pub fn dim(&self) -> usize {
        self.cost.len()
    }

    pub fn cost(&self) -> &[f64] {
        &self.cost
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn bounds(&self) -> &[Bound] {
        &self.bounds
    }

    pub fn push_row(&mut self, row: Row) -> Result<(), LpError> {
        validate_row(&row, self.dim())?;
        self.rows.push(row);
        Ok(())
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        dot(&self.cost, x)
    }
}

pub(crate) fn validate_row(row: &Row, d: usize) -> Result<(), LpError> {
    if row.coeffs.len() != d {
        return Err(LpError::DimensionMismatch {
            what: "row coefficients",
            expected: d,
            found: row.coeffs.len(),
        });
    }
    if row.coeffs.iter().any(|v| !v.is_finite()) || !row.rhs.is_finite() {
        return Err(LpError::NonFinite("row"));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Empty unless `status == Optimal`.
    pub x: Vec<f64>,
    pub objective: f64,
    /// Indices of rows with `|a·x - b| <= tol.active`, ascending.
    pub active_rows: Vec<usize>,
}

impl LpSolution {
    fn without_point(status: LpStatus) -> Self {
        let objective = match status {
            LpStatus::Unbounded => f64::NEG_INFINITY,
            _ => f64::INFINITY,
        };
        Self {
            status,
            x: Vec::new(),
            objective,
            active_rows: Vec::new(),
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

pub fn solve(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    solve_with(lp, &Tolerances::default())
}

pub fn solve_with(lp: &LinearProgram, tol: &Tolerances) -> Result<LpSolution, LpError> {
    let form = StandardForm::build(lp);
    let y = match form.lexicographic_min(lp.cost())? {
        Ok(y) => y,
        Err(status) => return Ok(LpSolution::without_point(status)),
    };
    let x = form.recover(&y);
    let active_rows = lp
        .rows()
        .iter()
        .enumerate()
        .filter(|(_, row)| row.residual(&x).abs() <= tol.active)
        .map(|(i, _)| i)
        .collect();
    Ok(LpSolution {
        status: LpStatus::Optimal,
        objective: lp.objective(&x),
        x,
        active_rows,
    })
}

/// True iff `x` satisfies every row and bound within `tol.feas`.
pub fn check_feasible(lp: &LinearProgram, x: &[f64], tol: &Tolerances) -> Result<bool, LpError> {
    if x.len() != lp.dim() {
        return Err(LpError::DimensionMismatch {
            what: "point",
            expected: lp.dim(),
            found: x.len(),
        });
    }
    let in_box = lp
        .bounds()
        .iter()
        .zip(x)
        .all(|(b, &v)| b.contains(v, tol.feas));
    Ok(in_box && lp.rows().iter().all(|r| r.residual(x) <= tol.feas))
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| u * v).sum()
}

/// How an original variable is expressed through nonnegative columns.
#[derive(Debug, Clone, Copy)]
enum Substitution {
    /// `x = lo + y`
    Shift { col: usize, lo: f64 },
    /// `x = hi - y`
    Flip { col: usize, hi: f64 },
    /// `x = y⁺ - y⁻`
    Split { pos: usize, neg: usize },
}

/// `A y <= b, y >= 0` obtained from a general `LinearProgram`.
struct StandardForm {
    subs: Vec<Substitution>,
    cols: usize,
    a: Vec<f64>,
    b: Vec<f64>,
}

impl StandardForm {
    fn build(lp: &LinearProgram) -> Self {
        let mut subs = Vec::with_capacity(lp.dim());
        let mut cols = 0;
        for b in lp.bounds() {
            let s = if b.lower.is_finite() {
                Substitution::Shift { col: cols, lo: b.lower }
            } else if b.upper.is_finite() {
                Substitution::Flip { col: cols, hi: b.upper }
            } else {
                cols += 1;
                Substitution::Split {
                    pos: cols - 1,
                    neg: cols,
                }
            };
            cols += 1;
            subs.push(s);
        }
        let mut form = Self {
            subs,
            cols,
            a: Vec::with_capacity((lp.rows().len() + lp.dim()) * cols),
            b: Vec::with_capacity(lp.rows().len() + lp.dim()),
        };
        for row in lp.rows() {
            form.push(&row.coeffs, row.rhs);
        }
        for (j, b) in lp.bounds().iter().enumerate() {
            if b.lower.is_finite() && b.upper.is_finite() {
                let mut e = vec![0.0; lp.dim()];
                e[j] = 1.0;
                form.push(&e, b.upper);
            }
        }
        form
    }

    fn push(&mut self, coeffs: &[f64], rhs: f64) {
        let (row, offset) = self.map_linear(coeffs);
        self.a.extend_from_slice(&row);
        self.b.push(rhs - offset);
    }

    /// Rewrites `w·x` as `row·y + offset`.
    fn map_linear(&self, w: &[f64]) -> (Vec<f64>, f64) {
        let mut row = vec![0.0; self.cols];
        let mut offset = 0.0;
        for (&wj, s) in w.iter().zip(&self.subs) {
            match *s {
                Substitution::Shift { col, lo } => {
                    row[col] += wj;
                    offset += wj * lo;
                }
                Substitution::Flip { col, hi } => {
                    row[col] -= wj;
                    offset += wj * hi;
                }
                Substitution::Split { pos, neg } => {
                    row[pos] += wj;
                    row[neg] -= wj;
                }
            }
        }
        (row, offset)
    }

    fn recover(&self, y: &[f64]) -> Vec<f64> {
        self.subs
            .iter()
            .map(|s| match *s {
                Substitution::Shift { col, lo } => lo + y[col],
                Substitution::Flip { col, hi } => hi - y[col],
                Substitution::Split { pos, neg } => y[pos] - y[neg],
            })
            .collect()
    }

    /// Objectives in priority order: the cost, then each coordinate.
    fn lexicographic_min(&self, cost: &[f64]) -> Result<Result<Vec<f64>, LpStatus>, LpError> {
        let d = cost.len();
        let mut objectives = Vec::with_capacity(d + 1);
        objectives.push(self.map_linear(cost).0);
        for j in 0..d {
            let mut e = vec![0.0; d];
            e[j] = 1.0;
            objectives.push(self.map_linear(&e).0);
        }
        let mut tableau = Tableau::new(&self.a, &self.b, self.cols, &objectives);
        tableau.run()
    }
}

const PIVOT_EPS: f64 = 1e-9;
const COST_EPS: f64 = 1e-9;
const INFEAS_EPS: f64 = 1e-9;
const MAX_PIVOTS: usize = 200_000;
const ARTIFICIAL: usize = usize::MAX;

/// Dictionary form: basic variable of row `i` equals
/// `rhs_i - Σ_j t[i][j] · nonbasic_j`. Objective rows hold reduced costs of
/// a minimization, with the negated objective value in the rhs slot.
struct Tableau {
    rows: usize,
    /// Nonbasic columns, then the artificial column, then rhs.
    width: usize,
    levels: usize,
    t: Vec<f64>,
    basic: Vec<usize>,
    nonbasic: Vec<usize>,
    art_col: usize,
    rhs_col: usize,
    ycols: usize,
}

impl Tableau {
    fn new(a: &[f64], b: &[f64], cols: usize, objectives: &[Vec<f64>]) -> Self {
        let rows = b.len();
        let width = cols + 2;
        let levels = objectives.len();
        // constraint rows, objective rows, phase-one row
        let mut t = vec![0.0; (rows + levels + 1) * width];
        for i in 0..rows {
            let dst = &mut t[i * width..(i + 1) * width];
            dst[..cols].copy_from_slice(&a[i * cols..(i + 1) * cols]);
            dst[cols] = -1.0;
            dst[cols + 1] = b[i];
        }
        for (l, obj) in objectives.iter().enumerate() {
            let r = rows + l;
            t[r * width..r * width + cols].copy_from_slice(obj);
        }
        let phase = rows + levels;
        t[phase * width + cols] = 1.0;
        Self {
            rows,
            width,
            levels,
            t,
            basic: (cols..cols + rows).collect(),
            nonbasic: (0..cols).chain(std::iter::once(ARTIFICIAL)).collect(),
            art_col: cols,
            rhs_col: cols + 1,
            ycols: cols,
        }
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * self.width + j]
    }

    fn pivot(&mut self, r: usize, s: usize) {
        let w = self.width;
        let total = self.t.len() / w;
        let inv = 1.0 / self.at(r, s);
        let pivot_row: Vec<f64> = self.t[r * w..(r + 1) * w].to_vec();
        for i in 0..total {
            if i == r {
                continue;
            }
            let f = self.t[i * w + s];
            if f.abs() <= 1e-300 {
                continue;
            }
            let k = f * inv;
            let dst = &mut self.t[i * w..(i + 1) * w];
            for (d, p) in dst.iter_mut().zip(&pivot_row) {
                *d -= p * k;
            }
            dst[s] = -k;
        }
        let dst = &mut self.t[r * w..(r + 1) * w];
        for (j, v) in dst.iter_mut().enumerate() {
            if j != s {
                *v *= inv;
            }
        }
        dst[s] = inv;
        std::mem::swap(&mut self.basic[r], &mut self.nonbasic[s]);
    }

    /// Bland's rule on objective row `obj`. Columns listed in `locked` (or
    /// the artificial, unless `allow_artificial`) never enter.
    fn optimize(
        &mut self,
        obj: usize,
        locked: &[bool],
        allow_artificial: bool,
        pivots: &mut usize,
    ) -> Result<bool, LpError> {
        loop {
            let mut enter: Option<usize> = None;
            for (j, &lock) in locked.iter().enumerate() {
                if lock || (self.nonbasic[j] == ARTIFICIAL && !allow_artificial) {
                    continue;
                }
                if self.at(obj, j) < -COST_EPS
                    && enter.is_none_or(|e| self.nonbasic[j] < self.nonbasic[e])
                {
                    enter = Some(j);
                }
            }
            let Some(s) = enter else {
                return Ok(true);
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows {
                let piv = self.at(i, s);
                if piv <= PIVOT_EPS {
                    continue;
                }
                let ratio = self.at(i, self.rhs_col) / piv;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((r, best)) => {
                        let tie = (ratio - best).abs() <= 1e-12 * (1.0 + best.abs());
                        if (!tie && ratio < best) || (tie && self.basic[i] < self.basic[r]) {
                            Some((i, ratio))
                        } else {
                            Some((r, best))
                        }
                    }
                };
            }
            let Some((r, _)) = leave else {
                return Ok(false);
            };
            self.pivot(r, s);
            *pivots += 1;
            if *pivots > MAX_PIVOTS {
                return Err(LpError::IterationLimit(MAX_PIVOTS));
            }
        }
    }

    fn run(&mut self) -> Result<Result<Vec<f64>, LpStatus>, LpError> {
        let mut pivots = 0;
        let mut locked = vec![false; self.ycols + 1];
        let phase = self.rows + self.levels;

        let most_negative = (0..self.rows)
            .min_by(|&p, &q| self.at(p, self.rhs_col).total_cmp(&self.at(q, self.rhs_col)));
        if let Some(r) = most_negative.filter(|&r| self.at(r, self.rhs_col) < -INFEAS_EPS) {
            self.pivot(r, self.art_col);
            self.optimize(phase, &locked, true, &mut pivots)?;
            if self.at(phase, self.rhs_col) < -INFEAS_EPS {
                return Ok(Err(LpStatus::Infeasible));
            }
            if let Some(i) = self.basic.iter().position(|&v| v == ARTIFICIAL) {
                // every nonbasic position, including the one the artificial
                // vacated
                let s = (0..=self.ycols)
                    .max_by(|&p, &q| self.at(i, p).abs().total_cmp(&self.at(i, q).abs()));
                if let Some(s) = s.filter(|&s| self.at(i, s).abs() > PIVOT_EPS) {
                    self.pivot(i, s);
                }
            }
        }
        if let Some(j) = self.nonbasic.iter().position(|&v| v == ARTIFICIAL) {
            locked[j] = true;
        }

        for level in 0..self.levels {
            let obj = self.rows + level;
            if !self.optimize(obj, &locked, false, &mut pivots)? {
                if level == 0 {
                    return Ok(Err(LpStatus::Unbounded));
                }
                // coordinate unbounded below on the optimal face
                break;
            }
            let mut any_free = false;
            for (j, lock) in locked.iter_mut().enumerate() {
                if !*lock && self.at(obj, j) > COST_EPS {
                    *lock = true;
                }
                any_free |= !*lock;
            }
            if !any_free {
                break;
            }
        }

        let mut y = vec![0.0; self.ycols];
        for (i, &v) in self.basic.iter().enumerate() {
            if v < self.ycols {
                y[v] = self.at(i, self.rhs_col).max(0.0);
            }
        }
        Ok(Ok(y))
    }
}
