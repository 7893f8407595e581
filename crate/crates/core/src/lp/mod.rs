//! Dense linear programming with primal and dual solutions.
//!
//! The solver is a two-phase revised simplex with Bland's anti-cycling rule
//! and an explicitly maintained dense basis inverse (periodically
//! refactorized). Instances in this crate have at most a few dozen variables,
//! so dense algebra is the right trade-off.
//!
//! Dual sign convention: `dual[i]` is the shadow price of constraint `i`,
//! i.e. the derivative of the optimal objective with respect to `rhs[i]`.
//! For a minimization problem this means `<=` rows have nonpositive duals and
//! `>=` rows nonnegative ones; for maximization the signs flip; equality rows
//! are sign-free. Under this convention the dual objective equals
//! `sum_i dual[i] * rhs[i]` plus bound terms, and strong duality holds at
//! every `Optimal` solution.

mod export;
mod simplex;

pub(crate) use export::lp_name as to_lp_name;
pub use export::to_cplex_lp;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Min,
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone)]
pub struct LpConstraint {
    pub coeffs: Vec<f64>,
    pub rel: Relation,
    pub rhs: f64,
}

/// A dense linear program. Variables default to `0 <= x < +inf`; bounds of
/// `None` mean unbounded on that side.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub sense: Sense,
    pub objective: Vec<f64>,
    pub constraints: Vec<LpConstraint>,
    pub lower: Vec<Option<f64>>,
    pub upper: Vec<Option<f64>>,
    pub names: Vec<String>,
    pub row_names: Vec<String>,
}

impl LinearProgram {
    pub fn new(sense: Sense, objective: Vec<f64>) -> Self {
        let n = objective.len();
        LinearProgram {
            sense,
            objective,
            constraints: Vec::new(),
            lower: vec![Some(0.0); n],
            upper: vec![None; n],
            names: (0..n).map(|j| format!("x{j}")).collect(),
            row_names: Vec::new(),
        }
    }

    pub fn minimize(objective: Vec<f64>) -> Self {
        Self::new(Sense::Min, objective)
    }

    pub fn maximize(objective: Vec<f64>) -> Self {
        Self::new(Sense::Max, objective)
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.constraints.len()
    }

    pub fn set_name(&mut self, j: usize, name: impl Into<String>) {
        self.names[j] = name.into();
    }

    /// Marks variable `j` as free (unbounded both sides).
    pub fn set_free(&mut self, j: usize) {
        self.lower[j] = None;
        self.upper[j] = None;
    }

    pub fn set_bounds(&mut self, j: usize, lower: Option<f64>, upper: Option<f64>) {
        self.lower[j] = lower;
        self.upper[j] = upper;
    }

    pub fn add_row(&mut self, name: impl Into<String>, coeffs: Vec<f64>, rel: Relation, rhs: f64) {
        assert_eq!(coeffs.len(), self.num_vars(), "row length mismatch");
        self.row_names.push(name.into());
        self.constraints.push(LpConstraint { coeffs, rel, rhs });
    }

    fn validate(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        if self.lower.len() != n || self.upper.len() != n || self.names.len() != n {
            return Err(LpError::InvalidProgram(
                "bounds/names length mismatch".into(),
            ));
        }
        if self.row_names.len() != self.constraints.len() {
            return Err(LpError::InvalidProgram("row names length mismatch".into()));
        }
        let finite = |v: f64| v.is_finite();
        if !self.objective.iter().copied().all(finite) {
            return Err(LpError::InvalidProgram("non-finite objective".into()));
        }
        for (i, c) in self.constraints.iter().enumerate() {
            if c.coeffs.len() != n {
                return Err(LpError::InvalidProgram(format!(
                    "row {i} has {} coefficients, expected {n}",
                    c.coeffs.len()
                )));
            }
            if !c.coeffs.iter().copied().all(finite) || !c.rhs.is_finite() {
                return Err(LpError::InvalidProgram(format!("row {i} non-finite")));
            }
        }
        for j in 0..n {
            if let (Some(l), Some(u)) = (self.lower[j], self.upper[j]) {
                if l > u {
                    return Err(LpError::InvalidProgram(format!(
                        "variable {j} has empty bound interval"
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Optimal point, one value per variable (empty unless `Optimal`).
    pub primal: Vec<f64>,
    /// One dual per constraint row (empty unless `Optimal`); see the module
    /// docs for the sign convention.
    pub dual: Vec<f64>,
    pub objective_value: f64,
    /// Objective of the dual program, computed independently from the duals;
    /// equals `objective_value` up to the duality-gap tolerance.
    pub dual_objective: f64,
}

#[derive(Debug, Clone)]
pub struct LpConfig {
    pub tol_feasibility: f64,
    pub tol_optimality: f64,
    pub tol_pivot: f64,
    pub tol_duality_gap: f64,
    pub max_iterations: usize,
}

impl Default for LpConfig {
    fn default() -> Self {
        LpConfig {
            tol_feasibility: 1e-9,
            tol_optimality: 1e-9,
            tol_pivot: 1e-11,
            tol_duality_gap: 1e-7,
            max_iterations: 50_000,
        }
    }
}

#[derive(Debug, Error)]
pub enum LpError {
    #[error("invalid linear program: {0}")]
    InvalidProgram(String),
    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),
    #[error("dual construction unsupported: {0}")]
    UnsupportedDual(String),
}

/// Solves with default tolerances.
pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    solve_lp_with(lp, &LpConfig::default())
}

pub fn solve_lp_with(lp: &LinearProgram, cfg: &LpConfig) -> Result<LpSolution, LpError> {
    lp.validate()?;
    simplex::solve(lp, cfg)
}

/// Absolute gap between the stored primal and dual objectives.
pub fn duality_gap(_lp: &LinearProgram, sol: &LpSolution) -> f64 {
    (sol.objective_value - sol.dual_objective).abs()
}

/// Builds the textbook dual of `lp`. Requires every variable to be either
/// nonnegative (`0 <= x`) or free; general bounds are not supported here.
///
/// The dual's variables are the primal's row duals under this crate's sign
/// convention, so `solve_lp(&dual_of(lp)?)` reproduces the primal optimum.
pub fn dual_of(lp: &LinearProgram) -> Result<LinearProgram, LpError> {
    lp.validate()?;
    for j in 0..lp.num_vars() {
        match (lp.lower[j], lp.upper[j]) {
            (Some(0.0), None) => {}
            (None, None) => {}
            _ => {
                return Err(LpError::UnsupportedDual(format!(
                    "variable {} must be nonnegative or free",
                    lp.names[j]
                )))
            }
        }
    }
    let m = lp.num_rows();
    let n = lp.num_vars();
    let dual_sense = match lp.sense {
        Sense::Min => Sense::Max,
        Sense::Max => Sense::Min,
    };
    let mut dual = LinearProgram::new(dual_sense, lp.constraints.iter().map(|c| c.rhs).collect());
    for (i, c) in lp.constraints.iter().enumerate() {
        dual.names[i] = format!("y_{}", lp.row_names[i]);
        // Shadow-price sign bounds for the dual variable of row i.
        let (lo, hi) = match (lp.sense, c.rel) {
            (_, Relation::Eq) => (None, None),
            (Sense::Min, Relation::Le) | (Sense::Max, Relation::Ge) => (None, Some(0.0)),
            (Sense::Min, Relation::Ge) | (Sense::Max, Relation::Le) => (Some(0.0), None),
        };
        dual.set_bounds(i, lo, hi);
    }
    // One dual row per primal variable: A^T y {<=,=,>=} c.
    for j in 0..n {
        let coeffs: Vec<f64> = (0..m).map(|i| lp.constraints[i].coeffs[j]).collect();
        let rel = if lp.lower[j].is_none() {
            Relation::Eq
        } else {
            match lp.sense {
                Sense::Min => Relation::Le,
                Sense::Max => Relation::Ge,
            }
        };
        dual.add_row(format!("d_{}", lp.names[j]), coeffs, rel, lp.objective[j]);
    }
    Ok(dual)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    #[test]
    fn min_x_at_least_one() {
        let mut lp = LinearProgram::minimize(vec![1.0]);
        lp.add_row("c0", vec![1.0], Relation::Ge, 1.0);
        let sol = solve_lp(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert_close(sol.primal[0], 1.0, 1e-9);
        assert_close(sol.objective_value, 1.0, 1e-9);
        // binding >= row in a min problem: dual is +1
        assert_close(sol.dual[0], 1.0, 1e-9);
        assert!(duality_gap(&lp, &sol) <= 1e-7);
    }

    #[test]
    fn max_x_unbounded() {
        let mut lp = LinearProgram::maximize(vec![1.0]);
        lp.add_row("c0", vec![1.0], Relation::Ge, 0.0);
        let sol = solve_lp(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Unbounded);
    }

    #[test]
    fn infeasible_detected() {
        let mut lp = LinearProgram::minimize(vec![1.0]);
        lp.add_row("c0", vec![1.0], Relation::Le, -1.0);
        let sol = solve_lp(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Infeasible);
    }

    #[test]
    fn equality_and_free_vars() {
        // min x + y  s.t.  x - y = 2, x + y >= 4, y free
        let mut lp = LinearProgram::minimize(vec![1.0, 1.0]);
        lp.set_free(1);
        lp.add_row("eq", vec![1.0, -1.0], Relation::Eq, 2.0);
        lp.add_row("ge", vec![1.0, 1.0], Relation::Ge, 4.0);
        let sol = solve_lp(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert_close(sol.objective_value, 4.0, 1e-9);
        assert_close(sol.primal[0], 3.0, 1e-9);
        assert_close(sol.primal[1], 1.0, 1e-9);
        assert!(duality_gap(&lp, &sol) <= 1e-7);
    }

    #[test]
    fn max_sense_dual_signs() {
        // max 3x + 2y s.t. x + y <= 4, x <= 2
        let mut lp = LinearProgram::maximize(vec![3.0, 2.0]);
        lp.add_row("cap", vec![1.0, 1.0], Relation::Le, 4.0);
        lp.add_row("xcap", vec![1.0, 0.0], Relation::Le, 2.0);
        let sol = solve_lp(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert_close(sol.objective_value, 10.0, 1e-9);
        // both rows binding; shadow prices of <= rows in a max problem are >= 0
        assert_close(sol.dual[0], 2.0, 1e-9);
        assert_close(sol.dual[1], 1.0, 1e-9);
        assert!(duality_gap(&lp, &sol) <= 1e-7);
    }

    #[test]
    fn finite_upper_bounds() {
        // min -x - y with 0 <= x <= 1.5, 1 <= y <= 2, x + y <= 3
        let mut lp = LinearProgram::minimize(vec![-1.0, -1.0]);
        lp.set_bounds(0, Some(0.0), Some(1.5));
        lp.set_bounds(1, Some(1.0), Some(2.0));
        lp.add_row("sum", vec![1.0, 1.0], Relation::Le, 3.0);
        let sol = solve_lp(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert_close(sol.objective_value, -3.0, 1e-9);
        assert!(duality_gap(&lp, &sol) <= 1e-7);
    }

    #[test]
    fn upper_bounded_free_var() {
        // max x subject to x <= 5 as a pure bound (no rows at all would be
        // unbounded below for the reflected var, so add a harmless row).
        let mut lp = LinearProgram::maximize(vec![1.0, 0.0]);
        lp.set_bounds(0, None, Some(5.0));
        lp.add_row("r", vec![0.0, 1.0], Relation::Le, 1.0);
        let sol = solve_lp(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert_close(sol.objective_value, 5.0, 1e-9);
        assert_close(sol.primal[0], 5.0, 1e-9);
    }

    #[test]
    fn hand_built_primal_dual_pair() {
        // min x s.t. x >= 1: primal x=1, dual y=1, gap 0
        let mut lp = LinearProgram::minimize(vec![1.0]);
        lp.add_row("c0", vec![1.0], Relation::Ge, 1.0);
        let sol = solve_lp(&lp).unwrap();
        let gap = (sol.objective_value - sol.dual[0] * 1.0).abs();
        assert!(gap <= 1e-12);
    }

    #[test]
    fn complementary_slackness() {
        let mut lp = LinearProgram::minimize(vec![2.0, 3.0, 1.0]);
        lp.add_row("a", vec![1.0, 1.0, 1.0], Relation::Ge, 2.0);
        lp.add_row("b", vec![1.0, 2.0, 0.0], Relation::Ge, 1.0);
        lp.add_row("c", vec![0.0, 1.0, 3.0], Relation::Le, 10.0);
        let sol = solve_lp(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        let mut cs = 0.0;
        for (i, c) in lp.constraints.iter().enumerate() {
            let act: f64 = c.coeffs.iter().zip(&sol.primal).map(|(a, x)| a * x).sum();
            cs += (sol.dual[i] * (act - c.rhs)).abs();
        }
        assert!(cs <= 1e-6, "complementary slackness residual {cs}");
    }

    #[test]
    fn dual_of_reproduces_value() {
        let mut lp = LinearProgram::minimize(vec![2.0, 3.0]);
        lp.add_row("a", vec![1.0, 1.0], Relation::Ge, 2.0);
        lp.add_row("b", vec![1.0, 3.0], Relation::Ge, 3.0);
        let psol = solve_lp(&lp).unwrap();
        let dual = dual_of(&lp).unwrap();
        let dsol = solve_lp(&dual).unwrap();
        assert_eq!(dsol.status, LpStatus::Optimal);
        assert_close(psol.objective_value, dsol.objective_value, 1e-8);
        // dual's primal variables match the primal's row duals
        for i in 0..lp.num_rows() {
            assert_close(psol.dual[i], dsol.primal[i], 1e-8);
        }
    }

    #[test]
    fn degenerate_lp_terminates() {
        // Classic degeneracy: multiple rows active at the optimum.
        let mut lp = LinearProgram::minimize(vec![-0.75, 150.0, -0.02, 6.0]);
        lp.add_row("r1", vec![0.25, -60.0, -0.04, 9.0], Relation::Le, 0.0);
        lp.add_row("r2", vec![0.5, -90.0, -0.02, 3.0], Relation::Le, 0.0);
        lp.add_row("r3", vec![0.0, 0.0, 1.0, 0.0], Relation::Le, 1.0);
        let sol = solve_lp(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert_close(sol.objective_value, -0.05, 1e-9);
    }
}
