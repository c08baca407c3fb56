//! Dense two-phase simplex with Bland's rule.
//!
//! Programs are stated over variables with finite lower bounds and optional
//! upper bounds, with equality and `≤` rows (`≥` rows are stored negated).
//! Every verdict carries a certificate that [`verify_farkas`],
//! [`primal_residual`] and [`verify_optimal`] re-check against the program
//! without touching solver state.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reduced-cost and phase-one feasibility tolerance.
pub const FEAS_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-9;
const MAX_ITERATIONS: usize = 200_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearProgram {
    pub sense: Sense,
    pub objective: Vec<f64>,
    pub eq_matrix: Vec<Vec<f64>>,
    pub eq_rhs: Vec<f64>,
    /// Rows of `A x ≤ b`.
    pub le_matrix: Vec<Vec<f64>>,
    pub le_rhs: Vec<f64>,
    /// `(lower, upper)` per variable; lower bounds must be finite.
    pub bounds: Vec<(f64, Option<f64>)>,
}

impl LinearProgram {
    /// A pure feasibility program over `n` non-negative variables.
    pub fn feasibility(n: usize) -> Self {
        Self {
            sense: Sense::Minimize,
            objective: vec![0.0; n],
            eq_matrix: Vec::new(),
            eq_rhs: Vec::new(),
            le_matrix: Vec::new(),
            le_rhs: Vec::new(),
            bounds: vec![(0.0, None); n],
        }
    }

    pub fn maximize(objective: Vec<f64>) -> Self {
        let mut lp = Self::feasibility(objective.len());
        lp.sense = Sense::Maximize;
        lp.objective = objective;
        lp
    }

    pub fn minimize(objective: Vec<f64>) -> Self {
        let mut lp = Self::feasibility(objective.len());
        lp.objective = objective;
        lp
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.eq_rhs.len() + self.le_rhs.len()
    }

    pub fn add_eq(&mut self, coeffs: Vec<f64>, rhs: f64) {
        self.eq_matrix.push(coeffs);
        self.eq_rhs.push(rhs);
    }

    pub fn add_le(&mut self, coeffs: Vec<f64>, rhs: f64) {
        self.le_matrix.push(coeffs);
        self.le_rhs.push(rhs);
    }

    pub fn add_ge(&mut self, coeffs: Vec<f64>, rhs: f64) {
        self.add_le(coeffs.into_iter().map(|c| -c).collect(), -rhs);
    }

    pub fn set_bounds(&mut self, var: usize, lower: f64, upper: Option<f64>) {
        self.bounds[var] = (lower, upper);
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        if n == 0 {
            return Err(Error::InvalidProgram("no variables".into()));
        }
        if self.eq_matrix.len() != self.eq_rhs.len() || self.le_matrix.len() != self.le_rhs.len() {
            return Err(Error::InvalidProgram("row count does not match right-hand side".into()));
        }
        if self.bounds.len() != n {
            return Err(Error::InvalidProgram(format!("{} bounds for {n} variables", self.bounds.len())));
        }
        for (i, row) in self.eq_matrix.iter().chain(&self.le_matrix).enumerate() {
            if row.len() != n {
                return Err(Error::InvalidProgram(format!("row {i} has {} coefficients, expected {n}", row.len())));
            }
        }
        let finite = self
            .objective
            .iter()
            .chain(self.eq_matrix.iter().flatten())
            .chain(self.le_matrix.iter().flatten())
            .chain(&self.eq_rhs)
            .chain(&self.le_rhs)
            .all(|x| x.is_finite());
        if !finite {
            return Err(Error::InvalidProgram("non-finite coefficient".into()));
        }
        for (j, &(lo, hi)) in self.bounds.iter().enumerate() {
            if !lo.is_finite() || hi.is_some_and(|h| !h.is_finite() || h < lo) {
                return Err(Error::InvalidProgram(format!("bad bounds on variable {j}")));
            }
        }
        Ok(())
    }

    fn upper_vars(&self) -> Vec<usize> {
        (0..self.num_vars()).filter(|&j| self.bounds[j].1.is_some()).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LpStatus {
    /// Feasible point found for a program with a zero objective.
    Feasible,
    Optimal,
    Infeasible,
    Unbounded,
}

/// One multiplier per constraint: equality rows, `≤` rows, then one per
/// variable upper bound (zero where the variable has none).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Multipliers {
    pub eq: Vec<f64>,
    pub le: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LpOutcome {
    pub status: LpStatus,
    /// Objective value at the returned point (`Feasible`/`Optimal`).
    pub value: Option<f64>,
    /// Primal point (`Feasible`/`Optimal`).
    pub primal: Option<Vec<f64>>,
    /// Dual solution in maximization form (`Optimal`/`Feasible`).
    pub dual: Option<Multipliers>,
    /// Farkas multipliers proving infeasibility, normalized so the combined
    /// right-hand side is −1.
    pub farkas: Option<Multipliers>,
    pub pivots: usize,
}

struct Tableau {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    basis: Vec<usize>,
    pivots: usize,
}

impl Tableau {
    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * (self.cols + 1) + j]
    }

    #[inline]
    fn rhs(&self, i: usize) -> f64 {
        self.at(i, self.cols)
    }

    fn pivot(&mut self, r: usize, s: usize) {
        let w = self.cols + 1;
        let p = self.data[r * w + s];
        for j in 0..w {
            self.data[r * w + j] /= p;
        }
        self.data[r * w + s] = 1.0;
        let pivot_row: Vec<f64> = self.data[r * w..(r + 1) * w].to_vec();
        for i in 0..=self.rows {
            if i == r {
                continue;
            }
            let f = self.data[i * w + s];
            if f != 0.0 {
                let row = &mut self.data[i * w..(i + 1) * w];
                for (x, &pr) in row.iter_mut().zip(&pivot_row) {
                    *x -= f * pr;
                }
                row[s] = 0.0;
            }
        }
        self.basis[r] = s;
        self.pivots += 1;
    }

    /// Rewrites the objective row for costs `c` (length `cols`).
    fn price(&mut self, c: &[f64]) {
        let w = self.cols + 1;
        let m = self.rows;
        for j in 0..=self.cols {
            let mut d = if j < self.cols { c[j] } else { 0.0 };
            for i in 0..m {
                d -= c[self.basis[i]] * self.data[i * w + j];
            }
            self.data[m * w + j] = d;
        }
    }

    /// Bland's rule iterations. Returns `false` on an unbounded ray.
    fn run(&mut self, allowed: usize) -> Result<bool> {
        loop {
            if self.pivots > MAX_ITERATIONS {
                return Err(Error::InvalidProgram("simplex iteration limit reached".into()));
            }
            let m = self.rows;
            let Some(s) = (0..allowed).find(|&j| self.at(m, j) < -FEAS_TOL) else {
                return Ok(true);
            };
            let mut best: Option<(usize, f64)> = None;
            for i in 0..m {
                let a = self.at(i, s);
                if a > PIVOT_TOL {
                    let ratio = self.rhs(i).max(0.0) / a;
                    best = match best {
                        None => Some((i, ratio)),
                        Some((bi, br)) => {
                            if ratio < br - 1e-12 || (ratio <= br + 1e-12 && self.basis[i] < self.basis[bi]) {
                                Some((i, ratio))
                            } else {
                                Some((bi, br))
                            }
                        }
                    };
                }
            }
            match best {
                Some((r, _)) => self.pivot(r, s),
                None => return Ok(false),
            }
        }
    }

    /// `c_Bᵀ B⁻¹`, read off the artificial columns (which started as `I`).
    fn row_duals(&self, c: &[f64], art0: usize) -> Vec<f64> {
        (0..self.rows)
            .map(|i| (0..self.rows).map(|k| c[self.basis[k]] * self.at(k, art0 + i)).sum())
            .collect()
    }
}

/// Solves `p`. Unboundedness is reported as [`LpStatus::Unbounded`].
pub fn solve_lp(p: &LinearProgram) -> Result<LpOutcome> {
    p.validate()?;
    let n = p.num_vars();
    let uppers = p.upper_vars();
    let m_eq = p.eq_rhs.len();
    let m_le = p.le_rhs.len();
    let m_up = uppers.len();
    let m = m_eq + m_le + m_up;
    let slack0 = n;
    let art0 = n + m_le + m_up;
    let cols = art0 + m;
    let lower: Vec<f64> = p.bounds.iter().map(|b| b.0).collect();
    let shift = |row: &[f64]| row.iter().zip(&lower).map(|(a, l)| a * l).sum::<f64>();

    let w = cols + 1;
    let mut data = vec![0.0; (m + 1) * w];
    let mut flip = vec![1.0; m];
    let mut rhs_int = vec![0.0; m];
    for i in 0..m {
        let row = &mut data[i * w..(i + 1) * w];
        let rhs = if i < m_eq {
            row[..n].copy_from_slice(&p.eq_matrix[i]);
            p.eq_rhs[i] - shift(&p.eq_matrix[i])
        } else if i < m_eq + m_le {
            let k = i - m_eq;
            row[..n].copy_from_slice(&p.le_matrix[k]);
            row[slack0 + k] = 1.0;
            p.le_rhs[k] - shift(&p.le_matrix[k])
        } else {
            let k = i - m_eq - m_le;
            let j = uppers[k];
            row[j] = 1.0;
            row[slack0 + m_le + k] = 1.0;
            p.bounds[j].1.unwrap() - lower[j]
        };
        row[cols] = rhs;
        if rhs < 0.0 {
            flip[i] = -1.0;
            for x in row[..art0].iter_mut() {
                *x = -*x;
            }
            row[cols] = -rhs;
        }
        rhs_int[i] = row[cols];
        row[art0 + i] = 1.0;
    }
    let mut t = Tableau { rows: m, cols, data, basis: (art0..art0 + m).collect(), pivots: 0 };

    // Phase one.
    let mut phase1 = vec![0.0; cols];
    phase1[art0..].iter_mut().for_each(|c| *c = 1.0);
    t.price(&phase1);
    t.run(art0)?;
    let infeasibility: f64 = (0..m).filter(|&i| t.basis[i] >= art0).map(|i| t.rhs(i)).sum();
    if infeasibility > FEAS_TOL {
        let y = t.row_duals(&phase1, art0);
        let total: f64 = y.iter().zip(&rhs_int).map(|(y, b)| y * b).sum();
        let scale = if total.abs() > 0.0 { total } else { infeasibility };
        let wv: Vec<f64> = (0..m).map(|i| -flip[i] * y[i] / scale).collect();
        return Ok(LpOutcome {
            status: LpStatus::Infeasible,
            value: None,
            primal: None,
            dual: None,
            farkas: Some(split_multipliers(&wv, m_eq, m_le, &uppers, n)),
            pivots: t.pivots,
        });
    }

    // Drive zero-level artificials out of the basis where possible.
    for i in 0..m {
        if t.basis[i] >= art0 {
            if let Some(j) = (0..art0).find(|&j| t.at(i, j).abs() > PIVOT_TOL) {
                t.pivot(i, j);
            }
        }
    }

    // Phase two on the internal minimization of ĉ.
    let sign = match p.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let mut cost = vec![0.0; cols];
    for (c, o) in cost.iter_mut().zip(&p.objective) {
        *c = sign * o;
    }
    t.price(&cost);
    let bounded = t.run(art0)?;
    if !bounded {
        return Ok(LpOutcome {
            status: LpStatus::Unbounded,
            value: None,
            primal: None,
            dual: None,
            farkas: None,
            pivots: t.pivots,
        });
    }
    let mut x = lower.clone();
    for i in 0..m {
        let b = t.basis[i];
        if b < n {
            x[b] += t.rhs(i).max(0.0);
        }
    }
    let y = t.row_duals(&cost, art0);
    // Maximization-form duals of the original rows.
    let wv: Vec<f64> = (0..m).map(|i| -flip[i] * y[i]).collect();
    let value: f64 = p.objective.iter().zip(&x).map(|(c, x)| c * x).sum();
    let zero_objective = p.objective.iter().all(|&c| c == 0.0);
    Ok(LpOutcome {
        status: if zero_objective { LpStatus::Feasible } else { LpStatus::Optimal },
        value: Some(value),
        primal: Some(x),
        dual: Some(split_multipliers(&wv, m_eq, m_le, &uppers, n)),
        farkas: None,
        pivots: t.pivots,
    })
}

fn split_multipliers(w: &[f64], m_eq: usize, m_le: usize, uppers: &[usize], n: usize) -> Multipliers {
    let mut upper = vec![0.0; n];
    for (k, &j) in uppers.iter().enumerate() {
        upper[j] = w[m_eq + m_le + k];
    }
    Multipliers { eq: w[..m_eq].to_vec(), le: w[m_eq..m_eq + m_le].to_vec(), upper }
}

/// Column sums `Aᵀy` over the original variables, including upper-bound rows.
fn combine(p: &LinearProgram, y: &Multipliers) -> Vec<f64> {
    let n = p.num_vars();
    let mut g = y.upper.clone();
    g.resize(n, 0.0);
    for (row, &yi) in p.eq_matrix.iter().zip(&y.eq).chain(p.le_matrix.iter().zip(&y.le)) {
        for (gj, a) in g.iter_mut().zip(row) {
            *gj += yi * a;
        }
    }
    g
}

fn combined_rhs(p: &LinearProgram, y: &Multipliers) -> f64 {
    let mut r: f64 = p.eq_rhs.iter().zip(&y.eq).map(|(b, y)| b * y).sum();
    r += p.le_rhs.iter().zip(&y.le).map(|(b, y)| b * y).sum::<f64>();
    r += p
        .bounds
        .iter()
        .zip(&y.upper)
        .filter_map(|(b, y)| b.1.map(|u| u * y))
        .sum::<f64>();
    r
}

/// Re-verifies a Farkas certificate: `y_le ≥ 0`, `y_upper ≥ 0`,
/// `g = Aᵀy ≥ 0` and `yᵀb − gᵀl < 0`. Returns the worst sign violation
/// relative to `|yᵀb − gᵀl|`, or infinity when the combination does not
/// separate.
pub fn verify_farkas(p: &LinearProgram, y: &Multipliers) -> f64 {
    if y.eq.len() != p.eq_rhs.len() || y.le.len() != p.le_rhs.len() || y.upper.len() != p.num_vars() {
        return f64::INFINITY;
    }
    let g = combine(p, y);
    let lower_term: f64 = g.iter().zip(&p.bounds).map(|(g, b)| g * b.0).sum();
    let margin = combined_rhs(p, y) - lower_term;
    if margin >= 0.0 || !margin.is_finite() {
        return f64::INFINITY;
    }
    let worst = y
        .le
        .iter()
        .chain(&y.upper)
        .chain(&g)
        .map(|&v| (-v).max(0.0))
        .fold(0.0, f64::max);
    worst / margin.abs()
}

/// Largest violation of any constraint or bound at `x`.
pub fn primal_residual(p: &LinearProgram, x: &[f64]) -> f64 {
    if x.len() != p.num_vars() {
        return f64::INFINITY;
    }
    let dot = |row: &[f64]| row.iter().zip(x).map(|(a, x)| a * x).sum::<f64>();
    let eq = p.eq_matrix.iter().zip(&p.eq_rhs).map(|(r, b)| (dot(r) - b).abs());
    let le = p.le_matrix.iter().zip(&p.le_rhs).map(|(r, b)| (dot(r) - b).max(0.0));
    let bounds = p.bounds.iter().zip(x).map(|(&(lo, hi), &v)| {
        (lo - v).max(0.0).max(hi.map_or(0.0, |h| (v - h).max(0.0)))
    });
    eq.chain(le).chain(bounds).fold(0.0, f64::max)
}

/// Optimality check of an `Optimal` outcome: primal residual, dual
/// residual, and the duality gap `|D − cᵀx|`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimalityCheck {
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub gap: f64,
}

pub fn verify_optimal(p: &LinearProgram, x: &[f64], y: &Multipliers) -> OptimalityCheck {
    let sign = match p.sense {
        Sense::Maximize => 1.0,
        Sense::Minimize => -1.0,
    };
    let c: Vec<f64> = p.objective.iter().map(|c| sign * c).collect();
    let g = combine(p, y);
    let reduced: Vec<f64> = g.iter().zip(&c).map(|(g, c)| g - c).collect();
    let dual_residual = y
        .le
        .iter()
        .chain(&y.upper)
        .chain(&reduced)
        .map(|&v| (-v).max(0.0))
        .fold(0.0, f64::max);
    let dual_value = combined_rhs(p, y) - reduced.iter().zip(&p.bounds).map(|(r, b)| r * b.0).sum::<f64>();
    let primal_value: f64 = c.iter().zip(x).map(|(c, x)| c * x).sum();
    OptimalityCheck {
        primal_residual: primal_residual(p, x),
        dual_residual,
        gap: (dual_value - primal_value).abs(),
    }
}
