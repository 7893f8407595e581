//! Brute-force simplex-grid search for epsilon-equilibria, used as an
//! independent check on the solver. Per-player best-response values come
//! from exact LPs; profile gaps are then cheap bilinear evaluations, so the
//! full product sweep stays fast at desk scale.

use crate::br;
use crate::chain;
use crate::dense::dot;
use crate::game::{Game, IndependentGame, SingleControllerGame, StationaryStrategy};
use crate::lp::solve_lp;
use crate::solver::SolverError;
use rayon::prelude::*;

#[derive(Debug, Clone)]
pub struct GridOracleReport {
    pub resolution: usize,
    /// smallest max best-response gap over all feasible grid profiles
    pub minimal_gap: f64,
    /// every feasible grid profile attaining it (capped at 10000)
    pub profiles: Vec<Vec<StationaryStrategy>>,
}

/// Guard on the summed per-player grid sizes.
const GRID_GUARD: usize = 10_000_000;
/// Budget on the pairwise sweep.
const SWEEP_GUARD: u128 = 200_000_000;
const PROFILE_CAP: usize = 10_000;

/// All compositions of `m` into `parts` nonnegative integers, as probability
/// rows over `parts` entries.
fn simplex_rows(m: usize, parts: usize) -> Vec<Vec<f64>> {
    fn rec(m: usize, parts: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if parts == 1 {
            prefix.push(m);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for first in 0..=m {
            prefix.push(first);
            rec(m - first, parts - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut raw = Vec::new();
    rec(m, parts, &mut Vec::new(), &mut raw);
    raw.into_iter()
        .map(|comp| comp.into_iter().map(|k| k as f64 / m as f64).collect())
        .collect()
}

/// Grid of stationary strategies: the product of per-state simplex grids.
fn strategy_grid(counts: &[usize], m: usize) -> Vec<StationaryStrategy> {
    let per_state: Vec<Vec<Vec<f64>>> = counts.iter().map(|&c| simplex_rows(m, c)).collect();
    let mut out = Vec::new();
    let mut idx = vec![0usize; counts.len()];
    loop {
        let rows: Vec<Vec<f64>> = idx
            .iter()
            .enumerate()
            .map(|(s, &i)| per_state[s][i].clone())
            .collect();
        out.push(StationaryStrategy::new(rows).expect("grid rows are stochastic"));
        let mut s = counts.len();
        loop {
            if s == 0 {
                return out;
            }
            s -= 1;
            idx[s] += 1;
            if idx[s] < per_state[s].len() {
                break;
            }
            idx[s] = 0;
        }
    }
}

fn grid_size(counts: &[usize], m: usize) -> usize {
    counts
        .iter()
        .map(|&c| {
            // C(m + c - 1, c - 1)
            let mut v = 1usize;
            for i in 0..c - 1 {
                v = v * (m + i + 1) / (i + 1);
            }
            v
        })
        .product()
}

/// Enumerates epsilon-equilibria on the `1/resolution` strategy grid:
/// returns all feasible grid profiles whose max best-response gap is
/// minimal.
pub fn grid_oracle(game: &Game, resolution: usize) -> Result<GridOracleReport, SolverError> {
    if resolution == 0 {
        return Err(SolverError::Unsupported(
            "resolution must be positive".into(),
        ));
    }
    let sizes: Vec<usize> = (0..game.num_players())
        .map(|p| grid_size(&game.action_counts(p), resolution))
        .collect();
    let total: usize = sizes.iter().sum();
    if total > GRID_GUARD {
        return Err(SolverError::GridTooLarge { points: total });
    }
    let pairs: u128 = sizes.iter().map(|&s| s as u128).product();
    if pairs > SWEEP_GUARD {
        return Err(SolverError::GridTooLarge { points: usize::MAX });
    }
    match game {
        Game::SingleController(g) => sc_grid(g, resolution),
        Game::Independent(g) => {
            if g.num_players() != 2 {
                return Err(SolverError::Unsupported(
                    "grid oracle supports two-player games".into(),
                ));
            }
            indep_grid(game, g, resolution)
        }
    }
}

struct GSide {
    /// C^i(f,g) = f . w[i]; realization value l = f . wd[l]
    w: [Vec<f64>; 2],
    wd: Vec<Vec<f64>>,
    br1_value: f64,
}

struct FSide {
    flat: Vec<f64>,
    sub_feasible: bool,
    br2_value: f64,
}

fn sc_grid(g: &SingleControllerGame, m: usize) -> Result<GridOracleReport, SolverError> {
    let grid_f = strategy_grid(g.k1().counts(), m);
    let grid_g = strategy_grid(g.k2().counts(), m);

    let g_data: Vec<Option<GSide>> = grid_g
        .par_iter()
        .map(|gs| {
            let x = chain::sc_occupation(g, gs).ok()?;
            let weight = |t: &[Vec<Vec<f64>>]| -> Vec<f64> {
                g.k1()
                    .pairs()
                    .map(|(_, s, a1)| {
                        (0..g.k2().count(s))
                            .map(|a2| t[s][a1][a2] * x.get(s, a2))
                            .sum()
                    })
                    .collect()
            };
            let mc = chain::sc_p1_marginals(g, gs).ok()?;
            let lp = br::build_p1_lp_from_marginals(g, &mc.main);
            let sol = solve_lp(&lp).ok()?;
            if sol.status != crate::lp::LpStatus::Optimal {
                return None;
            }
            Some(GSide {
                w: [weight(g.cost(0)), weight(g.cost(1))],
                wd: g.d2().iter().map(|t| weight(t)).collect(),
                br1_value: sol.objective_value,
            })
        })
        .collect();

    let f_data: Vec<Option<FSide>> = grid_f
        .par_iter()
        .map(|fs| {
            let flat = fs.flat(g.k1());
            let sub_feasible = (0..g.n1()).all(|k| {
                let v: f64 = g
                    .k1()
                    .pairs()
                    .map(|(fl, s, a1)| flat[fl] * g.d1_sub()[k][s][a1])
                    .sum();
                v <= g.xi1()[k] + 1e-9
            });
            let mc = chain::sc_p2_marginals(g, fs);
            let lp = br::build_p2_lp_from_marginals(g, &mc);
            let sol = solve_lp(&lp).ok()?;
            let br2_value = if sol.status == crate::lp::LpStatus::Optimal {
                sol.objective_value
            } else {
                f64::INFINITY
            };
            Some(FSide {
                flat,
                sub_feasible,
                br2_value,
            })
        })
        .collect();

    // sweep: for each g point, scan all f points
    let per_g: Vec<(f64, Vec<(usize, usize)>)> = (0..grid_g.len())
        .into_par_iter()
        .map(|j| {
            let Some(gd) = &g_data[j] else {
                return (f64::INFINITY, Vec::new());
            };
            let mut best = f64::INFINITY;
            let mut args: Vec<(usize, usize)> = Vec::new();
            for (i, fd) in f_data.iter().enumerate() {
                let Some(fd) = fd else { continue };
                if !fd.sub_feasible || !fd.br2_value.is_finite() {
                    continue;
                }
                let feasible = (0..g.n2()).all(|l| dot(&fd.flat, &gd.wd[l]) <= g.xi2()[l] + 1e-9);
                if !feasible {
                    continue;
                }
                let gap1 = (dot(&fd.flat, &gd.w[0]) - gd.br1_value).max(0.0);
                let gap2 = (dot(&fd.flat, &gd.w[1]) - fd.br2_value).max(0.0);
                let gap = gap1.max(gap2);
                if gap < best - 1e-12 {
                    best = gap;
                    args.clear();
                    args.push((i, j));
                } else if gap <= best + 1e-12 && args.len() < PROFILE_CAP {
                    args.push((i, j));
                }
            }
            (best, args)
        })
        .collect();

    let mut minimal_gap = f64::INFINITY;
    for (gap, _) in &per_g {
        minimal_gap = minimal_gap.min(*gap);
    }
    let mut profiles = Vec::new();
    for (gap, args) in &per_g {
        if *gap <= minimal_gap + 1e-12 {
            for &(i, j) in args {
                if profiles.len() >= PROFILE_CAP {
                    break;
                }
                profiles.push(vec![grid_f[i].clone(), grid_g[j].clone()]);
            }
        }
    }
    Ok(GridOracleReport {
        resolution: m,
        minimal_gap,
        profiles,
    })
}

struct IndepSide {
    occ: Vec<f64>,
    /// marginal of the opponent's main cost through this occupation
    opp_cost_marginal: Vec<f64>,
    /// marginals of the opponent's constraint tensors through this occupation
    opp_d_marginal: Vec<Vec<f64>>,
    /// best-response value of the *opponent* against this point
    opp_br_value: f64,
}

fn indep_side(
    game: &Game,
    g: &IndependentGame,
    me: usize,
    strat: &StationaryStrategy,
) -> Option<IndepSide> {
    let other = 1 - me;
    let x = chain::avg_occupation(g.chain(me).trans(), strat).ok()?;
    let weights_of = |t: &crate::game::JointTensor| -> Vec<f64> {
        let dummy = vec![0.0; g.chain(other).k().len()];
        let mut w: Vec<&[f64]> = vec![&dummy; 2];
        w[me] = &x.entries;
        t.contract_except(other, &w)
    };
    let opp_cost_marginal = weights_of(g.cost(other));
    let opp_d_marginal = g.d(other).iter().map(&weights_of).collect();
    // opponent best response against this point
    let mut profile = vec![
        StationaryStrategy::uniform(&game.action_counts(0)),
        StationaryStrategy::uniform(&game.action_counts(1)),
    ];
    profile[me] = strat.clone();
    let mc = chain::indep_marginals(g, &profile, other).ok()?;
    let lp = br::build_indep_lp_from_marginals(g, other, &mc);
    let sol = solve_lp(&lp).ok()?;
    if sol.status != crate::lp::LpStatus::Optimal {
        return None;
    }
    Some(IndepSide {
        occ: x.entries,
        opp_cost_marginal,
        opp_d_marginal,
        opp_br_value: sol.objective_value,
    })
}

fn indep_grid(game: &Game, g: &IndependentGame, m: usize) -> Result<GridOracleReport, SolverError> {
    let grid1 = strategy_grid(g.chain(0).k().counts(), m);
    let grid2 = strategy_grid(g.chain(1).k().counts(), m);
    let side1: Vec<Option<IndepSide>> = grid1
        .par_iter()
        .map(|s| indep_side(game, g, 0, s))
        .collect();
    let side2: Vec<Option<IndepSide>> = grid2
        .par_iter()
        .map(|s| indep_side(game, g, 1, s))
        .collect();

    let per_j: Vec<(f64, Vec<(usize, usize)>)> = (0..grid2.len())
        .into_par_iter()
        .map(|j| {
            let Some(s2) = &side2[j] else {
                return (f64::INFINITY, Vec::new());
            };
            let mut best = f64::INFINITY;
            let mut args = Vec::new();
            for (i, s1) in side1.iter().enumerate() {
                let Some(s1) = s1 else { continue };
                // feasibility of both players' constraints at the pair
                let feas1 =
                    (0..g.n(0)).all(|k| dot(&s2.opp_d_marginal[k], &s1.occ) <= g.xi(0)[k] + 1e-9);
                let feas2 =
                    (0..g.n(1)).all(|k| dot(&s1.opp_d_marginal[k], &s2.occ) <= g.xi(1)[k] + 1e-9);
                if !feas1 || !feas2 {
                    continue;
                }
                let c1 = dot(&s2.opp_cost_marginal, &s1.occ);
                let c2 = dot(&s1.opp_cost_marginal, &s2.occ);
                let gap1 = (c1 - s2.opp_br_value).max(0.0);
                let gap2 = (c2 - s1.opp_br_value).max(0.0);
                let gap = gap1.max(gap2);
                if gap < best - 1e-12 {
                    best = gap;
                    args.clear();
                    args.push((i, j));
                } else if gap <= best + 1e-12 && args.len() < PROFILE_CAP {
                    args.push((i, j));
                }
            }
            (best, args)
        })
        .collect();

    let mut minimal_gap = f64::INFINITY;
    for (gap, _) in &per_j {
        minimal_gap = minimal_gap.min(*gap);
    }
    let mut profiles = Vec::new();
    for (gap, args) in &per_j {
        if *gap <= minimal_gap + 1e-12 {
            for &(i, j) in args {
                if profiles.len() >= PROFILE_CAP {
                    break;
                }
                profiles.push(vec![grid1[i].clone(), grid2[j].clone()]);
            }
        }
    }
    Ok(GridOracleReport {
        resolution: m,
        minimal_gap,
        profiles,
    })
}
