//! Dense bounded-variable primal simplex.
//!
//! Variables carry box bounds (finite lower, possibly infinite upper);
//! constraints are `<=` rows, each augmented with a slack, or pinned
//! equalities added at a point that already satisfies them. The solver starts
//! from the all-slack basis, which callers must make feasible by choosing
//! variable lower bounds appropriately; there is no phase-1.
//!
//! Pivoting uses the largest-reduced-cost rule, falling back to Bland's rule
//! after a run of degenerate steps so cycling cannot occur. All choices are
//! index-ordered, so the solve is deterministic.

const EPS_RC: f64 = 1e-9;
const EPS_PIV: f64 = 1e-9;
const EPS_DEG: f64 = 1e-12;
const EPS_TIE: f64 = 1e-12;
const BLAND_AFTER: usize = 64;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum LpError {
    #[error("objective is unbounded above")]
    Unbounded,
    #[error("iteration limit reached after {0} pivots")]
    IterationLimit(usize),
    #[error("initial basis infeasible: {0}")]
    InfeasibleStart(String),
    #[error("bad input: {0}")]
    BadInput(String),
}

/// A growable simplex tableau over box-bounded variables.
#[derive(Debug, Clone)]
pub struct Simplex {
    nvars: usize,
    lower: Vec<f64>,
    upper: Vec<f64>,
    x: Vec<f64>,
    at_upper: Vec<bool>,
    is_basic: Vec<bool>,
    row_of: Vec<usize>,
    /// Basic variable of each row.
    basis_cache: Vec<usize>,
    /// `rows[r]` spans all variables; basic columns form an identity.
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    obj: Vec<f64>,
    zrow: Vec<f64>,
}

impl Simplex {
    /// Structural variables with the given `(lower, upper)` bounds, all
    /// starting nonbasic at their lower bound.
    pub fn new(bounds: &[(f64, f64)]) -> Result<Simplex, LpError> {
        for (i, &(l, u)) in bounds.iter().enumerate() {
            if !l.is_finite() || u < l || u.is_nan() {
                return Err(LpError::BadInput(format!(
                    "variable {i} has invalid bounds [{l}, {u}]"
                )));
            }
        }
        let n = bounds.len();
        Ok(Simplex {
            nvars: n,
            lower: bounds.iter().map(|b| b.0).collect(),
            upper: bounds.iter().map(|b| b.1).collect(),
            x: bounds.iter().map(|b| b.0).collect(),
            at_upper: vec![false; n],
            is_basic: vec![false; n],
            row_of: vec![usize::MAX; n],
            basis_cache: Vec::new(),
            rows: Vec::new(),
            rhs: Vec::new(),
            obj: vec![0.0; n],
            zrow: vec![0.0; n],
        })
    }

    pub fn value(&self, var: usize) -> f64 {
        self.x[var]
    }

    pub fn objective_value(&self) -> f64 {
        self.obj.iter().zip(&self.x).map(|(c, v)| c * v).sum()
    }

    /// Append a fresh variable, nonbasic at its lower bound. Existing rows
    /// gain a zero column, so the current point stays feasible; use before
    /// adding rows that reference the variable.
    pub fn add_variable(&mut self, lower: f64, upper: f64) -> Result<usize, LpError> {
        if !lower.is_finite() || upper < lower || upper.is_nan() {
            return Err(LpError::BadInput(format!(
                "new variable has invalid bounds [{lower}, {upper}]"
            )));
        }
        let var = self.nvars;
        self.nvars += 1;
        self.lower.push(lower);
        self.upper.push(upper);
        self.x.push(lower);
        self.at_upper.push(false);
        self.is_basic.push(false);
        self.row_of.push(usize::MAX);
        self.obj.push(0.0);
        self.zrow.push(0.0);
        for row in &mut self.rows {
            row.push(0.0);
        }
        Ok(var)
    }

    /// Add `sum coeffs . x <= rhs`. The current point must satisfy it.
    pub fn add_le(&mut self, coeffs: &[(usize, f64)], rhs: f64) -> Result<(), LpError> {
        self.add_row(coeffs, rhs, 0.0, f64::INFINITY)
    }

    /// Add `sum coeffs . x = rhs`, which the current point must satisfy
    /// already (up to a small tolerance). Used to pin the objective and
    /// coordinates during lexicographic refinement.
    pub fn add_eq_pinned(&mut self, coeffs: &[(usize, f64)], rhs: f64) -> Result<(), LpError> {
        self.add_row(coeffs, rhs, 0.0, 0.0)
    }

    fn add_row(
        &mut self,
        coeffs: &[(usize, f64)],
        rhs: f64,
        slack_lower: f64,
        slack_upper: f64,
    ) -> Result<(), LpError> {
        for &(var, _) in coeffs {
            if var >= self.nvars {
                return Err(LpError::BadInput(format!("unknown variable {var}")));
            }
        }
        let slack = self.nvars;
        self.nvars += 1;
        self.lower.push(slack_lower);
        self.upper.push(slack_upper);
        self.at_upper.push(false);
        self.is_basic.push(true);
        self.obj.push(0.0);
        self.zrow.push(0.0);
        for row in &mut self.rows {
            row.push(0.0);
        }

        let mut raw = vec![0.0; self.nvars];
        for &(var, c) in coeffs {
            raw[var] += c;
        }
        raw[slack] = 1.0;
        let mut raw_rhs = rhs;
        // Express the row in terms of the current basis.
        for v in 0..slack {
            if self.is_basic[v] && raw[v].abs() > 0.0 {
                let factor = raw[v];
                let r = self.row_of[v];
                for j in 0..self.nvars {
                    raw[j] -= factor * self.rows[r][j];
                }
                raw[v] = 0.0;
                raw_rhs -= factor * self.rhs[r];
            }
        }

        let slack_value = raw_rhs
            - raw
                .iter()
                .enumerate()
                .filter(|&(j, c)| j != slack && *c != 0.0 && !self.is_basic[j])
                .map(|(j, c)| c * self.x[j])
                .sum::<f64>();
        let tol = 1e-7 * (1.0 + raw_rhs.abs());
        if slack_value < slack_lower - tol || slack_value > slack_upper + tol {
            self.rollback_row(slack);
            return Err(LpError::InfeasibleStart(format!(
                "row slack value {slack_value} outside [{slack_lower}, {slack_upper}]"
            )));
        }

        let row_idx = self.rows.len();
        self.rows.push(raw);
        self.rhs.push(raw_rhs);
        self.row_of.push(row_idx);
        self.basis_cache.push(slack);
        self.x
            .push(slack_value.clamp(slack_lower, slack_upper.min(f64::MAX)));
        self.refresh_zrow();
        Ok(())
    }

    fn rollback_row(&mut self, slack: usize) {
        self.nvars = slack;
        self.lower.pop();
        self.upper.pop();
        self.at_upper.pop();
        self.is_basic.pop();
        self.obj.pop();
        self.zrow.pop();
        for row in &mut self.rows {
            row.pop();
        }
    }

    fn refresh_zrow(&mut self) {
        self.zrow.copy_from_slice(&self.obj);
        for r in 0..self.rows.len() {
            let cb = self.obj[self.basis_cache[r]];
            if cb != 0.0 {
                let row = &self.rows[r];
                for j in 0..self.nvars {
                    self.zrow[j] -= cb * row[j];
                }
            }
        }
        for r in 0..self.rows.len() {
            self.zrow[self.basis_cache[r]] = 0.0;
        }
    }

    /// Set the (maximization) objective and run the primal simplex.
    /// Returns the optimal objective value.
    pub fn maximize(&mut self, objective: &[(usize, f64)]) -> Result<f64, LpError> {
        self.obj.iter_mut().for_each(|c| *c = 0.0);
        for &(var, c) in objective {
            if var >= self.nvars {
                return Err(LpError::BadInput(format!("unknown variable {var}")));
            }
            self.obj[var] += c;
        }
        self.refresh_zrow();
        self.optimize()?;
        Ok(self.objective_value())
    }

    fn optimize(&mut self) -> Result<(), LpError> {
        let m = self.rows.len();
        let max_iter = 50_000 + 200 * (m + self.nvars);
        let mut degenerate_streak = 0usize;

        for _ in 0..max_iter {
            let bland = degenerate_streak > BLAND_AFTER;
            let mut entering: Option<(usize, f64, f64)> = None;
            for j in 0..self.nvars {
                if self.is_basic[j] || self.upper[j] - self.lower[j] <= 0.0 {
                    continue;
                }
                let z = self.zrow[j];
                let dir = if !self.at_upper[j] && z > EPS_RC {
                    1.0
                } else if self.at_upper[j] && z < -EPS_RC {
                    -1.0
                } else {
                    continue;
                };
                if bland {
                    entering = Some((j, dir, z.abs()));
                    break;
                }
                match entering {
                    Some((_, _, best)) if z.abs() <= best => {}
                    _ => entering = Some((j, dir, z.abs())),
                }
            }
            let Some((e, dir, _)) = entering else {
                self.recompute_basic_values();
                return Ok(());
            };

            // Ratio test: the entering variable moves by `delta` in direction
            // `dir` until it or some basic variable hits a bound.
            let mut delta = self.upper[e] - self.lower[e];
            let mut leaving: Option<(usize, bool, usize)> = None;
            for r in 0..m {
                let a = self.rows[r][e];
                if a.abs() <= EPS_PIV {
                    continue;
                }
                let v = self.basis_cache[r];
                let rate = a * dir;
                let (t, hits_upper) = if rate > 0.0 {
                    ((self.x[v] - self.lower[v]).max(0.0) / rate, false)
                } else if self.upper[v].is_finite() {
                    ((self.upper[v] - self.x[v]).max(0.0) / -rate, true)
                } else {
                    continue;
                };
                let replace = match leaving {
                    None => t < delta - EPS_TIE || t <= delta + EPS_TIE,
                    Some((_, _, best_v)) => {
                        t < delta - EPS_TIE || (t <= delta + EPS_TIE && v < best_v)
                    }
                };
                if replace && t <= delta + EPS_TIE {
                    delta = t.min(delta);
                    leaving = Some((r, hits_upper, v));
                }
            }

            if delta.is_infinite() {
                return Err(LpError::Unbounded);
            }
            let delta = delta.max(0.0);

            // Apply the movement to the current point.
            for r in 0..m {
                let a = self.rows[r][e];
                if a != 0.0 {
                    let v = self.basis_cache[r];
                    self.x[v] -= a * dir * delta;
                }
            }

            match leaving {
                None => {
                    // Bound flip.
                    self.at_upper[e] = !self.at_upper[e];
                    self.x[e] = if self.at_upper[e] {
                        self.upper[e]
                    } else {
                        self.lower[e]
                    };
                }
                Some((r, hits_upper, v)) => {
                    self.x[e] = if dir > 0.0 {
                        self.lower[e] + delta
                    } else {
                        self.upper[e] - delta
                    };
                    self.is_basic[v] = false;
                    self.at_upper[v] = hits_upper;
                    self.x[v] = if hits_upper {
                        self.upper[v]
                    } else {
                        self.lower[v]
                    };
                    self.row_of[v] = usize::MAX;
                    self.is_basic[e] = true;
                    self.row_of[e] = r;
                    self.basis_cache[r] = e;
                    self.pivot(r, e);
                }
            }

            if delta <= EPS_DEG {
                degenerate_streak += 1;
            } else {
                degenerate_streak = 0;
            }
        }
        Err(LpError::IterationLimit(max_iter))
    }

    fn pivot(&mut self, r: usize, e: usize) {
        let piv = self.rows[r][e];
        let inv = 1.0 / piv;
        for c in self.rows[r].iter_mut() {
            *c *= inv;
        }
        self.rhs[r] *= inv;
        self.rows[r][e] = 1.0;

        let pivot_row = self.rows[r].clone();
        let pivot_rhs = self.rhs[r];
        for r2 in 0..self.rows.len() {
            if r2 == r {
                continue;
            }
            let f = self.rows[r2][e];
            if f != 0.0 {
                for j in 0..self.nvars {
                    self.rows[r2][j] -= f * pivot_row[j];
                }
                self.rows[r2][e] = 0.0;
                self.rhs[r2] -= f * pivot_rhs;
            }
        }
        let f = self.zrow[e];
        if f != 0.0 {
            for j in 0..self.nvars {
                self.zrow[j] -= f * pivot_row[j];
            }
        }
        self.zrow[e] = 0.0;
    }

    /// Recompute basic variable values from the tableau, removing the drift
    /// accumulated by incremental updates.
    fn recompute_basic_values(&mut self) {
        for r in 0..self.rows.len() {
            let v = self.basis_cache[r];
            let mut value = self.rhs[r];
            for j in 0..self.nvars {
                if j != v && !self.is_basic[j] {
                    let c = self.rows[r][j];
                    if c != 0.0 {
                        value -= c * self.x[j];
                    }
                }
            }
            self.x[v] = value;
        }
    }
}
