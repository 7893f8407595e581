#![allow(dead_code)] // each test binary uses a different subset
#![allow(clippy::needless_range_loop)]

//! Independent oracles shared by the integration suites. Everything here is
//! deliberately brute-force and separate from the library's solution paths.

use csg_core::lp::{LinearProgram, Relation};

/// Gaussian elimination with partial pivoting; `None` when singular.
pub fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-11 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = a[r][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OracleResult {
    Infeasible,
    Unbounded,
    Optimal(f64),
}

struct PoolRow {
    coeffs: Vec<f64>,
    rel: Relation,
    rhs: f64,
}

fn feasible(point: &[f64], pool: &[PoolRow], tol: f64) -> bool {
    pool.iter().all(|row| {
        let lhs: f64 = row.coeffs.iter().zip(point).map(|(a, x)| a * x).sum();
        match row.rel {
            Relation::Le => lhs <= row.rhs + tol,
            Relation::Ge => lhs >= row.rhs - tol,
            Relation::Eq => (lhs - row.rhs).abs() <= tol,
        }
    })
}

/// Enumerates all basic points of the pool (every size-n subsystem solved as
/// equalities), filters the feasible ones, and returns the best objective.
fn best_vertex(objective: &[f64], pool: &[PoolRow], tol: f64) -> Option<f64> {
    let n = objective.len();
    let m = pool.len();
    if m < n {
        return None;
    }
    let mut best: Option<f64> = None;
    let mut subset: Vec<usize> = (0..n).collect();
    loop {
        let a: Vec<Vec<f64>> = subset.iter().map(|&i| pool[i].coeffs.clone()).collect();
        let b: Vec<f64> = subset.iter().map(|&i| pool[i].rhs).collect();
        if let Some(x) = solve_square(a, b) {
            if feasible(&x, pool, tol) {
                let v: f64 = objective.iter().zip(&x).map(|(c, x)| c * x).sum();
                best = Some(best.map_or(v, |b: f64| b.min(v)));
            }
        }
        // next lexicographic subset
        let mut i = n;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if subset[i] + n - i < m {
                subset[i] += 1;
                for j in i + 1..n {
                    subset[j] = subset[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Vertex-enumeration oracle for minimization LPs whose variables all carry
/// the default `x >= 0` bound. Detects infeasibility (no feasible basic
/// point) and unboundedness (an improving recession direction found by
/// enumerating the boxed direction polytope).
pub fn vertex_oracle(lp: &LinearProgram) -> OracleResult {
    let n = lp.num_vars();
    assert!(
        (0..n).all(|j| lp.lower[j] == Some(0.0) && lp.upper[j].is_none()),
        "oracle expects default variable bounds"
    );
    let mut pool: Vec<PoolRow> = lp
        .constraints
        .iter()
        .map(|c| PoolRow {
            coeffs: c.coeffs.clone(),
            rel: c.rel,
            rhs: c.rhs,
        })
        .collect();
    for j in 0..n {
        let mut coeffs = vec![0.0; n];
        coeffs[j] = 1.0;
        pool.push(PoolRow {
            coeffs,
            rel: Relation::Ge,
            rhs: 0.0,
        });
    }
    let Some(best) = best_vertex(&lp.objective, &pool, 1e-9) else {
        return OracleResult::Infeasible;
    };

    // recession directions: homogeneous rows, d >= 0, boxed by d <= 1
    let mut dir_pool: Vec<PoolRow> = lp
        .constraints
        .iter()
        .map(|c| PoolRow {
            coeffs: c.coeffs.clone(),
            rel: c.rel,
            rhs: 0.0,
        })
        .collect();
    for j in 0..n {
        let mut ge = vec![0.0; n];
        ge[j] = 1.0;
        dir_pool.push(PoolRow {
            coeffs: ge.clone(),
            rel: Relation::Ge,
            rhs: 0.0,
        });
        dir_pool.push(PoolRow {
            coeffs: ge,
            rel: Relation::Le,
            rhs: 1.0,
        });
    }
    if let Some(dir_best) = best_vertex(&lp.objective, &dir_pool, 1e-9) {
        if dir_best < -1e-9 {
            return OracleResult::Unbounded;
        }
    }
    OracleResult::Optimal(best)
}

/// Average-cost policy iteration on a unichain MDP given as per-(state,
/// action) costs and transition rows; exact at desk scale.
pub fn policy_iteration_average(costs: &[Vec<f64>], trans: &[Vec<Vec<f64>>]) -> f64 {
    let ns = trans.len();
    let mut policy: Vec<usize> = vec![0; ns];
    for _ in 0..1000 {
        // evaluate: g + h(s) = c(s, pi(s)) + sum p h(s'), h(0) = 0
        let mut a = vec![vec![0.0; ns + 1]; ns + 1];
        let mut b = vec![0.0; ns + 1];
        for s in 0..ns {
            a[s][ns] = 1.0; // gain column
            a[s][s] += 1.0;
            for s2 in 0..ns {
                a[s][s2] -= trans[s][policy[s]][s2];
            }
            b[s] = costs[s][policy[s]];
        }
        a[ns][0] = 1.0; // h(0) = 0
        let sol = solve_square(a, b).expect("policy evaluation is nonsingular for unichain");
        let h = &sol[..ns];
        let gain = sol[ns];
        let mut improved = false;
        for s in 0..ns {
            let mut best_a = policy[s];
            let mut best_v = f64::INFINITY;
            for mu in 0..trans[s].len() {
                let v: f64 = costs[s][mu] + (0..ns).map(|s2| trans[s][mu][s2] * h[s2]).sum::<f64>();
                if v < best_v - 1e-12 {
                    best_v = v;
                    best_a = mu;
                }
            }
            if best_a != policy[s] {
                policy[s] = best_a;
                improved = true;
            }
        }
        if !improved {
            return gain;
        }
    }
    panic!("policy iteration failed to converge");
}

/// Discounted-cost policy iteration; returns `(1-beta) gamma' V*`.
pub fn policy_iteration_discounted(
    costs: &[Vec<f64>],
    trans: &[Vec<Vec<f64>>],
    gamma: &[f64],
    beta: f64,
) -> f64 {
    let ns = trans.len();
    let mut policy: Vec<usize> = vec![0; ns];
    for _ in 0..1000 {
        let mut a = vec![vec![0.0; ns]; ns];
        let mut b = vec![0.0; ns];
        for s in 0..ns {
            a[s][s] += 1.0;
            for s2 in 0..ns {
                a[s][s2] -= beta * trans[s][policy[s]][s2];
            }
            b[s] = costs[s][policy[s]];
        }
        let v = solve_square(a, b).expect("discounted evaluation is nonsingular");
        let mut improved = false;
        for s in 0..ns {
            let mut best_a = policy[s];
            let mut best_v = f64::INFINITY;
            for mu in 0..trans[s].len() {
                let q: f64 =
                    costs[s][mu] + beta * (0..ns).map(|s2| trans[s][mu][s2] * v[s2]).sum::<f64>();
                if q < best_v - 1e-12 {
                    best_v = q;
                    best_a = mu;
                }
            }
            if best_a != policy[s] {
                policy[s] = best_a;
                improved = true;
            }
        }
        if !improved {
            let value: f64 = gamma.iter().zip(&v).map(|(g, v)| g * v).sum();
            return (1.0 - beta) * value;
        }
    }
    panic!("policy iteration failed to converge");
}
