//! Two-phase revised simplex on the standardized problem
//! `min c.x  s.t.  A x = b, x >= 0` with `b >= 0`.

use super::{LinearProgram, LpConfig, LpError, LpSolution, LpStatus, Relation, Sense};
use crate::dense;

const REFACTOR_EVERY: usize = 64;

/// sparse row under construction: (column, coefficient) pairs
type RowEntries = Vec<(usize, f64)>;

/// How an original variable maps into standardized columns.
#[derive(Debug, Clone, Copy)]
enum VarMap {
    /// x = col + offset
    Shift { col: usize, offset: f64 },
    /// x = pos - neg (free variable)
    Split { pos: usize, neg: usize },
    /// x = offset - col (upper bounded, no finite lower)
    Reflect { col: usize, offset: f64 },
}

struct Standardized {
    /// column-major coefficient matrix, structural columns only
    cols: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    cost: Vec<f64>,
    obj_const: f64,
    var_map: Vec<VarMap>,
    /// per standardized row: (original row index or None for bound rows,
    /// sign flip, scale divisor)
    row_src: Vec<(Option<usize>, f64, f64)>,
    nrows: usize,
    slack_of_row: Vec<Option<usize>>,
}

fn standardize(lp: &LinearProgram) -> Standardized {
    let n = lp.num_vars();
    let sign = match lp.sense {
        Sense::Min => 1.0,
        Sense::Max => -1.0,
    };

    // Variable transforms first; they rewrite row coefficients and rhs.
    let mut var_map = Vec::with_capacity(n);
    let mut ncols = 0usize;
    let mut cost = Vec::new();
    let mut obj_const = 0.0;
    let mut extra_rows: Vec<(RowEntries, Relation, f64)> = Vec::new();
    for j in 0..n {
        let c = sign * lp.objective[j];
        match (lp.lower[j], lp.upper[j]) {
            (Some(l), up) => {
                let col = ncols;
                ncols += 1;
                cost.push(c);
                obj_const += c * l;
                var_map.push(VarMap::Shift { col, offset: l });
                if let Some(u) = up {
                    extra_rows.push((vec![(col, 1.0)], Relation::Le, u - l));
                }
            }
            (None, None) => {
                let pos = ncols;
                let neg = ncols + 1;
                ncols += 2;
                cost.push(c);
                cost.push(-c);
                var_map.push(VarMap::Split { pos, neg });
            }
            (None, Some(u)) => {
                let col = ncols;
                ncols += 1;
                cost.push(-c);
                obj_const += c * u;
                var_map.push(VarMap::Reflect { col, offset: u });
            }
        }
    }

    // Rows: substitute variables, scale by max-abs coefficient, force rhs >= 0.
    let nrows = lp.num_rows() + extra_rows.len();
    let mut cols: Vec<Vec<f64>> = (0..ncols).map(|_| vec![0.0; nrows]).collect();
    let mut rhs = vec![0.0; nrows];
    let mut row_src = Vec::with_capacity(nrows);
    let mut rels = Vec::with_capacity(nrows);

    let emit_row = |r: usize,
                    entries: &mut dyn Iterator<Item = (usize, f64)>,
                    rel: Relation,
                    mut b: f64,
                    src: Option<usize>,
                    cols: &mut Vec<Vec<f64>>,
                    rhs: &mut Vec<f64>,
                    row_src: &mut Vec<(Option<usize>, f64, f64)>,
                    rels: &mut Vec<Relation>| {
        let mut row: Vec<(usize, f64)> = Vec::new();
        let mut maxabs = 0.0f64;
        for (col, v) in entries {
            if v != 0.0 {
                maxabs = maxabs.max(v.abs());
                row.push((col, v));
            }
        }
        let scale = if maxabs > 0.0 { maxabs } else { 1.0 };
        b /= scale;
        let mut flip = 1.0;
        let mut rel = rel;
        if b < 0.0 {
            flip = -1.0;
            b = -b;
            rel = match rel {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            };
        }
        for (col, v) in row {
            cols[col][r] = flip * v / scale;
        }
        rhs[r] = b;
        row_src.push((src, flip, scale));
        rels.push(rel);
    };

    for (i, c) in lp.constraints.iter().enumerate() {
        let mut b = c.rhs;
        let mut entries: Vec<(usize, f64)> = Vec::new();
        for (j, &a) in c.coeffs.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            match var_map[j] {
                VarMap::Shift { col, offset } => {
                    entries.push((col, a));
                    b -= a * offset;
                }
                VarMap::Split { pos, neg } => {
                    entries.push((pos, a));
                    entries.push((neg, -a));
                }
                VarMap::Reflect { col, offset } => {
                    entries.push((col, -a));
                    b -= a * offset;
                }
            }
        }
        emit_row(
            i,
            &mut entries.into_iter(),
            c.rel,
            b,
            Some(i),
            &mut cols,
            &mut rhs,
            &mut row_src,
            &mut rels,
        );
    }
    for (k, (entries, rel, b)) in extra_rows.into_iter().enumerate() {
        emit_row(
            lp.num_rows() + k,
            &mut entries.into_iter(),
            rel,
            b,
            None,
            &mut cols,
            &mut rhs,
            &mut row_src,
            &mut rels,
        );
    }

    // Slack / surplus columns.
    let mut slack_of_row = vec![None; nrows];
    for r in 0..nrows {
        match rels[r] {
            Relation::Le => {
                let col = ncols;
                ncols += 1;
                cost.push(0.0);
                let mut v = vec![0.0; nrows];
                v[r] = 1.0;
                cols.push(v);
                slack_of_row[r] = Some(col);
            }
            Relation::Ge => {
                ncols += 1;
                cost.push(0.0);
                let mut v = vec![0.0; nrows];
                v[r] = -1.0;
                cols.push(v);
            }
            Relation::Eq => {}
        }
    }
    // A <= row (rhs >= 0) starts with its slack basic; others need phase-1
    // artificials, appended by the solver.
    let eligible = rels
        .iter()
        .map(|r| matches!(r, Relation::Le))
        .collect::<Vec<_>>();
    let slack_of_row = slack_of_row
        .iter()
        .zip(eligible)
        .map(|(s, ok)| if ok { *s } else { None })
        .collect();

    Standardized {
        cols,
        rhs,
        cost,
        obj_const,
        var_map,
        row_src,
        nrows,
        slack_of_row,
    }
}

struct Tableau<'a> {
    std: &'a Standardized,
    /// all columns incl. artificials
    cols: Vec<Vec<f64>>,
    nrows: usize,
    ncols: usize,
    art_start: usize,
    basis: Vec<usize>,
    binv: Vec<Vec<f64>>,
    xb: Vec<f64>,
    pivots_since_refactor: usize,
}

enum StepResult {
    Optimal,
    Unbounded,
}

impl<'a> Tableau<'a> {
    fn new(std: &'a Standardized) -> Self {
        let nrows = std.nrows;
        let mut cols = std.cols.clone();
        let art_start = cols.len();
        let mut basis = Vec::with_capacity(nrows);
        for r in 0..nrows {
            if let Some(s) = std.slack_of_row[r] {
                basis.push(s);
            } else {
                let mut v = vec![0.0; nrows];
                v[r] = 1.0;
                cols.push(v);
                basis.push(cols.len() - 1);
            }
        }
        let ncols = cols.len();
        let binv: Vec<Vec<f64>> = (0..nrows)
            .map(|i| (0..nrows).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        let xb = std.rhs.clone();
        Tableau {
            std,
            cols,
            nrows,
            ncols,
            art_start,
            basis,
            binv,
            xb,
            pivots_since_refactor: 0,
        }
    }

    fn is_artificial(&self, col: usize) -> bool {
        col >= self.art_start
    }

    fn refactor(&mut self, cfg: &LpConfig) -> Result<(), LpError> {
        let b: Vec<Vec<f64>> = (0..self.nrows)
            .map(|i| {
                (0..self.nrows)
                    .map(|k| self.cols[self.basis[k]][i])
                    .collect()
            })
            .collect();
        self.binv = dense::invert(b, cfg.tol_pivot)
            .ok_or_else(|| LpError::NumericalBreakdown("singular basis".into()))?;
        self.xb = dense::mat_vec(&self.binv, &self.std.rhs);
        self.pivots_since_refactor = 0;
        Ok(())
    }

    fn duals(&self, cost: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        for (i, &bi) in self.basis.iter().enumerate() {
            let cb = cost[bi];
            if cb != 0.0 {
                for j in 0..self.nrows {
                    y[j] += cb * self.binv[i][j];
                }
            }
        }
        y
    }

    /// One simplex phase with Bland's rule. `cost` covers all columns
    /// (artificials included); `allow_artificial_enter` is false in both
    /// phases (artificials start basic and may only leave), and in phase 2
    /// basic artificials are pinned at zero by the guard in the ratio test.
    fn run(
        &mut self,
        cost: &[f64],
        guard_artificials: bool,
        cfg: &LpConfig,
        iters: &mut usize,
    ) -> Result<StepResult, LpError> {
        let mut in_basis = vec![false; self.ncols];
        for &b in &self.basis {
            in_basis[b] = true;
        }
        loop {
            *iters += 1;
            if *iters > cfg.max_iterations {
                return Err(LpError::NumericalBreakdown(
                    "iteration limit exceeded".into(),
                ));
            }
            let y = self.duals(cost);
            // Bland: entering = lowest-index candidate with negative reduced cost.
            let mut entering = None;
            for j in 0..self.art_start {
                if in_basis[j] {
                    continue;
                }
                let rc = cost[j] - dense::dot(&y, &self.cols[j]);
                if rc < -cfg.tol_optimality {
                    entering = Some(j);
                    break;
                }
            }
            let Some(e) = entering else {
                return Ok(StepResult::Optimal);
            };
            let d = dense::mat_vec(&self.binv, &self.cols[e]);

            // Leaving row.
            let mut leave: Option<usize> = None;
            if guard_artificials {
                // Push out any basic artificial the entering column touches,
                // keeping artificials pinned at zero.
                for r in 0..self.nrows {
                    if self.is_artificial(self.basis[r]) && d[r].abs() > cfg.tol_pivot {
                        leave = Some(r);
                        break;
                    }
                }
            }
            if leave.is_none() {
                let mut best_ratio = f64::INFINITY;
                for r in 0..self.nrows {
                    if d[r] > cfg.tol_pivot {
                        let ratio = self.xb[r].max(0.0) / d[r];
                        let better = ratio < best_ratio - 1e-12
                            || (ratio < best_ratio + 1e-12
                                && leave.is_some_and(|l| self.basis[r] < self.basis[l]));
                        if better || leave.is_none() {
                            if ratio < best_ratio {
                                best_ratio = ratio;
                            }
                            leave = Some(r);
                        }
                    }
                }
            }
            let Some(r) = leave else {
                return Ok(StepResult::Unbounded);
            };

            // Pivot: update basis, basis inverse and basic values.
            let pivot = d[r];
            if pivot.abs() < cfg.tol_pivot {
                return Err(LpError::NumericalBreakdown(format!(
                    "pivot magnitude {pivot:.3e} below tolerance"
                )));
            }
            in_basis[self.basis[r]] = false;
            in_basis[e] = true;
            self.basis[r] = e;
            let theta = self.xb[r] / pivot;
            for i in 0..self.nrows {
                if i != r {
                    self.xb[i] -= theta * d[i];
                }
            }
            self.xb[r] = theta;
            let pivot_row = self.binv[r].clone();
            for i in 0..self.nrows {
                if i == r {
                    continue;
                }
                let factor = d[i] / pivot;
                if factor == 0.0 {
                    continue;
                }
                for j in 0..self.nrows {
                    self.binv[i][j] -= factor * pivot_row[j];
                }
            }
            for j in 0..self.nrows {
                self.binv[r][j] = pivot_row[j] / pivot;
            }
            self.pivots_since_refactor += 1;
            if self.pivots_since_refactor >= REFACTOR_EVERY {
                self.refactor(cfg)?;
            }
        }
    }
}

pub(super) fn solve(lp: &LinearProgram, cfg: &LpConfig) -> Result<LpSolution, LpError> {
    let std = standardize(lp);
    let mut tab = Tableau::new(&std);
    let mut iters = 0usize;

    // Phase 1: minimize the sum of artificials.
    if tab.art_start < tab.ncols {
        let mut c1 = vec![0.0; tab.ncols];
        for c in c1.iter_mut().skip(tab.art_start) {
            *c = 1.0;
        }
        match tab.run(&c1, false, cfg, &mut iters)? {
            StepResult::Optimal => {}
            StepResult::Unbounded => {
                return Err(LpError::NumericalBreakdown(
                    "phase 1 reported unbounded".into(),
                ));
            }
        }
        tab.refactor(cfg)?;
        let infeas: f64 = tab
            .basis
            .iter()
            .zip(&tab.xb)
            .filter(|(b, _)| tab.is_artificial(**b))
            .map(|(_, v)| v.max(0.0))
            .sum();
        let scale = 1.0 + std.rhs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if infeas > 100.0 * cfg.tol_feasibility * scale {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                primal: Vec::new(),
                dual: Vec::new(),
                objective_value: f64::NAN,
                dual_objective: f64::NAN,
            });
        }
    }

    // Phase 2.
    let mut c2 = vec![0.0; tab.ncols];
    c2[..std.cost.len()].copy_from_slice(&std.cost);
    let unbounded = match tab.run(&c2, true, cfg, &mut iters)? {
        StepResult::Optimal => false,
        StepResult::Unbounded => true,
    };
    if unbounded {
        return Ok(LpSolution {
            status: LpStatus::Unbounded,
            primal: Vec::new(),
            dual: Vec::new(),
            objective_value: f64::NAN,
            dual_objective: f64::NAN,
        });
    }
    tab.refactor(cfg)?;

    // Recover the standardized primal point.
    let mut xstd = vec![0.0; std.cost.len()];
    for (i, &b) in tab.basis.iter().enumerate() {
        if b < xstd.len() {
            xstd[b] = tab.xb[i].max(0.0);
        }
    }
    let sign = match lp.sense {
        Sense::Min => 1.0,
        Sense::Max => -1.0,
    };
    let primal: Vec<f64> = std
        .var_map
        .iter()
        .map(|vm| match *vm {
            VarMap::Shift { col, offset } => xstd[col] + offset,
            VarMap::Split { pos, neg } => xstd[pos] - xstd[neg],
            VarMap::Reflect { col, offset } => offset - xstd[col],
        })
        .collect();
    let objective_value = dense::dot(&lp.objective, &primal);

    // Duals for the user's rows, mapped back through scaling and sign flips.
    let y = tab.duals(&c2);
    let mut dual = vec![0.0; lp.num_rows()];
    let mut dual_obj_std = std.obj_const;
    for (r, &(src, flip, scale)) in std.row_src.iter().enumerate() {
        dual_obj_std += y[r] * std.rhs[r];
        if let Some(i) = src {
            dual[i] = sign * y[r] * flip / scale;
        }
    }
    let dual_objective = sign * dual_obj_std;

    // Feasibility audit against the original rows.
    let scale = 1.0
        + lp.constraints
            .iter()
            .fold(0.0f64, |m, c| m.max(c.rhs.abs()));
    for c in &lp.constraints {
        let act = dense::dot(&c.coeffs, &primal);
        let viol = match c.rel {
            Relation::Le => act - c.rhs,
            Relation::Ge => c.rhs - act,
            Relation::Eq => (act - c.rhs).abs(),
        };
        if viol > 10.0 * cfg.tol_feasibility * scale {
            return Err(LpError::NumericalBreakdown(format!(
                "optimal point violates a row by {viol:.3e}"
            )));
        }
    }

    Ok(LpSolution {
        status: LpStatus::Optimal,
        primal,
        dual,
        objective_value,
        dual_objective,
    })
}
