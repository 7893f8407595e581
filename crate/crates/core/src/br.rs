//! Best-response linear programs and their duals.
//!
//! Player 1 of a single-controller game optimizes directly over strategy
//! rows; the controller (player 2) and every independent-chain player
//! optimize over occupation measures and recover the strategy afterwards.
//! The criterion enters only through the marginal costs and the occupation
//! constraint set; the subscription-side program is identical for average
//! and discounted costs.

use crate::chain::{self, ChainError, MarginalCosts};
use crate::game::{Criterion, Game, SingleControllerGame, StationaryStrategy};
use crate::lp::{self, LinearProgram, LpError, LpSolution, LpStatus, Relation};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BrError {
    #[error("player 1's subscription constraint set is empty")]
    InfeasibleSubscription,
    #[error("best-response program infeasible (Slater condition violated here)")]
    Infeasible,
    #[error("best-response program unbounded; the game data is inconsistent")]
    Unbounded,
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("bad input: {0}")]
    BadInput(String),
}

/// Named dual bundle of a best-response solve.
#[derive(Debug, Clone)]
pub enum DualVars {
    /// player 1 of a single-controller game: `(z, delta1)`
    Subscription { z: Vec<f64>, delta: Vec<f64> },
    /// occupation-measure players: `(v, u, delta)`; `v` is absent in the
    /// discounted controller program
    Controller {
        v: Option<f64>,
        u: Vec<f64>,
        delta: Vec<f64>,
    },
}

#[derive(Debug, Clone)]
pub struct BestResponseResult {
    pub strategy: StationaryStrategy,
    pub value: f64,
    pub primal: LpSolution,
    pub dual: LpSolution,
    pub dual_vars: DualVars,
}

/// Player 1's best-response LP: variables `f(s,a1)`, subscription rows and
/// per-state simplex rows.
pub fn build_p1_lp(
    game: &SingleControllerGame,
    g: &StationaryStrategy,
) -> Result<LinearProgram, BrError> {
    let mc = chain::sc_p1_marginals(game, g)?;
    Ok(build_p1_lp_from_marginals(game, &mc.main))
}

pub(crate) fn build_p1_lp_from_marginals(
    game: &SingleControllerGame,
    main: &[f64],
) -> LinearProgram {
    let k1 = game.k1();
    let mut lp = LinearProgram::minimize(main.to_vec());
    for (flat, s, a1) in k1.pairs() {
        lp.set_name(flat, format!("f[{},{}]", s + 1, a1 + 1));
    }
    for k in 0..game.n1() {
        let coeffs = k1
            .pairs()
            .map(|(_, s, a1)| game.d1_sub()[k][s][a1])
            .collect();
        lp.add_row(
            format!("sub[{}]", k + 1),
            coeffs,
            Relation::Le,
            game.xi1()[k],
        );
    }
    for s in 0..game.num_states() {
        let coeffs = k1
            .pairs()
            .map(|(_, ps, _)| if ps == s { 1.0 } else { 0.0 })
            .collect();
        lp.add_row(format!("simplex[{}]", s + 1), coeffs, Relation::Eq, 1.0);
    }
    lp
}

/// Dual of player 1's program: variables `(z(s), delta1)`, one row per
/// state-action pair.
pub fn build_p1_dual(
    game: &SingleControllerGame,
    g: &StationaryStrategy,
) -> Result<LinearProgram, BrError> {
    let mc = chain::sc_p1_marginals(game, g)?;
    Ok(build_p1_dual_from_marginals(game, &mc.main))
}

pub(crate) fn build_p1_dual_from_marginals(
    game: &SingleControllerGame,
    main: &[f64],
) -> LinearProgram {
    let ns = game.num_states();
    let n1 = game.n1();
    let mut obj = vec![1.0; ns];
    obj.extend(game.xi1().iter().map(|x| -x));
    let mut lp = LinearProgram::maximize(obj);
    for s in 0..ns {
        lp.set_name(s, format!("z[{}]", s + 1));
        lp.set_free(s);
    }
    for k in 0..n1 {
        lp.set_name(ns + k, format!("delta1[{}]", k + 1));
    }
    for (flat, s, a1) in game.k1().pairs() {
        let mut coeffs = vec![0.0; ns + n1];
        coeffs[s] = 1.0;
        for k in 0..n1 {
            coeffs[ns + k] = -game.d1_sub()[k][s][a1];
        }
        lp.add_row(
            format!("br1[{},{}]", s + 1, a1 + 1),
            coeffs,
            Relation::Le,
            main[flat],
        );
    }
    lp
}

/// Controller's best-response LP over occupation measures: balance rows (plus
/// a normalization row in the average case), then realization rows.
pub fn build_p2_lp(
    game: &SingleControllerGame,
    f: &StationaryStrategy,
) -> Result<LinearProgram, BrError> {
    let mc = chain::sc_p2_marginals(game, f);
    Ok(build_p2_lp_from_marginals(game, &mc))
}

pub(crate) fn build_p2_lp_from_marginals(
    game: &SingleControllerGame,
    mc: &MarginalCosts,
) -> LinearProgram {
    let k2 = game.k2();
    let ns = game.num_states();
    let mut lp = LinearProgram::minimize(mc.main.clone());
    for (flat, s, a2) in k2.pairs() {
        lp.set_name(flat, format!("x[{},{}]", s + 1, a2 + 1));
    }
    let (beta, gamma) = match game.criterion() {
        Criterion::Average => (1.0, None),
        Criterion::Discounted { beta } => (beta, Some(game.gamma())),
    };
    for s2 in 0..ns {
        let coeffs = k2
            .pairs()
            .map(|(_, s, a2)| {
                let delta = if s == s2 { 1.0 } else { 0.0 };
                delta - beta * game.trans()[s][a2][s2]
            })
            .collect();
        let rhs = gamma.map_or(0.0, |g| (1.0 - beta) * g[s2]);
        lp.add_row(format!("balance[{}]", s2 + 1), coeffs, Relation::Eq, rhs);
    }
    if gamma.is_none() {
        lp.add_row("normalize", vec![1.0; k2.len()], Relation::Eq, 1.0);
    }
    for l in 0..game.n2() {
        lp.add_row(
            format!("real[{}]", l + 1),
            mc.constraints[l].clone(),
            Relation::Le,
            game.xi2()[l],
        );
    }
    lp
}

/// Dual of the controller's program: `(v, u, delta2)` in the average case,
/// `(u, delta2)` with the `(1-beta) gamma' u` objective in the discounted
/// case.
pub fn build_p2_dual(
    game: &SingleControllerGame,
    f: &StationaryStrategy,
) -> Result<LinearProgram, BrError> {
    let mc = chain::sc_p2_marginals(game, f);
    Ok(build_p2_dual_from_marginals(game, &mc))
}

pub(crate) fn build_p2_dual_from_marginals(
    game: &SingleControllerGame,
    mc: &MarginalCosts,
) -> LinearProgram {
    let ns = game.num_states();
    let n2 = game.n2();
    match game.criterion() {
        Criterion::Average => {
            // variables: v, u(s), delta2
            let mut obj = vec![1.0];
            obj.resize(obj.len() + ns, 0.0);
            obj.extend(game.xi2().iter().map(|x| -x));
            let mut lp = LinearProgram::maximize(obj);
            lp.set_name(0, "v");
            lp.set_free(0);
            for s in 0..ns {
                lp.set_name(1 + s, format!("u[{}]", s + 1));
                lp.set_free(1 + s);
            }
            for l in 0..n2 {
                lp.set_name(1 + ns + l, format!("delta2[{}]", l + 1));
            }
            for (flat, s, a2) in game.k2().pairs() {
                let mut coeffs = vec![0.0; 1 + ns + n2];
                coeffs[0] = 1.0;
                coeffs[1 + s] += 1.0;
                for s2 in 0..ns {
                    coeffs[1 + s2] -= game.trans()[s][a2][s2];
                }
                for l in 0..n2 {
                    coeffs[1 + ns + l] = -mc.constraints[l][flat];
                }
                lp.add_row(
                    format!("br2[{},{}]", s + 1, a2 + 1),
                    coeffs,
                    Relation::Le,
                    mc.main[flat],
                );
            }
            lp
        }
        Criterion::Discounted { beta } => {
            let mut obj: Vec<f64> = game.gamma().iter().map(|g| (1.0 - beta) * g).collect();
            obj.extend(game.xi2().iter().map(|x| -x));
            let mut lp = LinearProgram::maximize(obj);
            for s in 0..ns {
                lp.set_name(s, format!("u[{}]", s + 1));
                lp.set_free(s);
            }
            for l in 0..n2 {
                lp.set_name(ns + l, format!("delta2[{}]", l + 1));
            }
            for (flat, s, a2) in game.k2().pairs() {
                let mut coeffs = vec![0.0; ns + n2];
                coeffs[s] += 1.0;
                for s2 in 0..ns {
                    coeffs[s2] -= beta * game.trans()[s][a2][s2];
                }
                for l in 0..n2 {
                    coeffs[ns + l] = -mc.constraints[l][flat];
                }
                lp.add_row(
                    format!("br2[{},{}]", s + 1, a2 + 1),
                    coeffs,
                    Relation::Le,
                    mc.main[flat],
                );
            }
            lp
        }
    }
}

/// Best-response LP of player `i` in an independent-chain game against the
/// other players' strategies: an average-cost occupation program on chain
/// `i` with marginal costs contracted through the opponents' occupation
/// measures.
pub fn build_indep_lp(
    game: &crate::game::IndependentGame,
    i: usize,
    others: &[StationaryStrategy],
) -> Result<LinearProgram, BrError> {
    let mc = chain::indep_marginals(game, others, i)?;
    Ok(build_indep_lp_from_marginals(game, i, &mc))
}

pub(crate) fn build_indep_lp_from_marginals(
    game: &crate::game::IndependentGame,
    i: usize,
    mc: &MarginalCosts,
) -> LinearProgram {
    let chain = game.chain(i);
    let k = chain.k();
    let ns = chain.num_states();
    let mut lp = LinearProgram::minimize(mc.main.clone());
    for (flat, s, a) in k.pairs() {
        lp.set_name(flat, format!("x{}[{},{}]", i + 1, s + 1, a + 1));
    }
    for s2 in 0..ns {
        let coeffs = k
            .pairs()
            .map(|(_, s, a)| {
                let delta = if s == s2 { 1.0 } else { 0.0 };
                delta - chain.trans()[s][a][s2]
            })
            .collect();
        lp.add_row(format!("balance[{}]", s2 + 1), coeffs, Relation::Eq, 0.0);
    }
    lp.add_row("normalize", vec![1.0; k.len()], Relation::Eq, 1.0);
    for c in 0..game.n(i) {
        lp.add_row(
            format!("real[{}]", c + 1),
            mc.constraints[c].clone(),
            Relation::Le,
            game.xi(i)[c],
        );
    }
    lp
}

pub fn build_indep_dual(
    game: &crate::game::IndependentGame,
    i: usize,
    others: &[StationaryStrategy],
) -> Result<LinearProgram, BrError> {
    let mc = chain::indep_marginals(game, others, i)?;
    Ok(build_indep_dual_from_marginals(game, i, &mc))
}

pub(crate) fn build_indep_dual_from_marginals(
    game: &crate::game::IndependentGame,
    i: usize,
    mc: &MarginalCosts,
) -> LinearProgram {
    let chain = game.chain(i);
    let ns = chain.num_states();
    let ni = game.n(i);
    let mut obj = vec![1.0];
    obj.resize(obj.len() + ns, 0.0);
    obj.extend(game.xi(i).iter().map(|x| -x));
    let mut lp = LinearProgram::maximize(obj);
    lp.set_name(0, format!("v{}", i + 1));
    lp.set_free(0);
    for s in 0..ns {
        lp.set_name(1 + s, format!("u{}[{}]", i + 1, s + 1));
        lp.set_free(1 + s);
    }
    for k in 0..ni {
        lp.set_name(1 + ns + k, format!("delta{}[{}]", i + 1, k + 1));
    }
    for (flat, s, a) in chain.k().pairs() {
        let mut coeffs = vec![0.0; 1 + ns + ni];
        coeffs[0] = 1.0;
        coeffs[1 + s] += 1.0;
        for s2 in 0..ns {
            coeffs[1 + s2] -= chain.trans()[s][a][s2];
        }
        for k in 0..ni {
            coeffs[1 + ns + k] = -mc.constraints[k][flat];
        }
        lp.add_row(
            format!("br{}[{},{}]", i + 1, s + 1, a + 1),
            coeffs,
            Relation::Le,
            mc.main[flat],
        );
    }
    lp
}

fn solve_pair(
    primal: &LinearProgram,
    dual: &LinearProgram,
    infeasible: BrError,
) -> Result<(LpSolution, LpSolution), BrError> {
    let psol = lp::solve_lp(primal)?;
    match psol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => return Err(infeasible),
        LpStatus::Unbounded => return Err(BrError::Unbounded),
    }
    let dsol = lp::solve_lp(dual)?;
    if dsol.status != LpStatus::Optimal {
        return Err(BrError::Unbounded);
    }
    Ok((psol, dsol))
}

/// Computes one player's constrained best response given the other players'
/// strategies. `profile` carries one strategy per player; the target's own
/// slot is ignored.
pub fn best_response(
    game: &Game,
    player: usize,
    profile: &[StationaryStrategy],
) -> Result<BestResponseResult, BrError> {
    if profile.len() != game.num_players() {
        return Err(BrError::BadInput(format!(
            "profile has {} strategies, game has {} players",
            profile.len(),
            game.num_players()
        )));
    }
    match game {
        Game::SingleController(g) => match player {
            0 => {
                let mc = chain::marginal_costs(game, profile, 0)?;
                let primal = build_p1_lp_from_marginals(g, &mc.main);
                let dual = build_p1_dual_from_marginals(g, &mc.main);
                let (psol, dsol) = solve_pair(&primal, &dual, BrError::InfeasibleSubscription)?;
                let k1 = g.k1();
                let rows: Vec<Vec<f64>> = (0..g.num_states())
                    .map(|s| {
                        (0..k1.count(s))
                            .map(|a| psol.primal[k1.flat(s, a)])
                            .collect()
                    })
                    .collect();
                let strategy =
                    StationaryStrategy::new(rows).map_err(|e| BrError::BadInput(e.to_string()))?;
                let ns = g.num_states();
                let dual_vars = DualVars::Subscription {
                    z: dsol.primal[..ns].to_vec(),
                    delta: dsol.primal[ns..ns + g.n1()].to_vec(),
                };
                Ok(BestResponseResult {
                    strategy,
                    value: psol.objective_value,
                    primal: psol,
                    dual: dsol,
                    dual_vars,
                })
            }
            1 => {
                let mc = chain::marginal_costs(game, profile, 1)?;
                let primal = build_p2_lp_from_marginals(g, &mc);
                let dual = build_p2_dual_from_marginals(g, &mc);
                let (psol, dsol) = solve_pair(&primal, &dual, BrError::Infeasible)?;
                let x = crate::chain::OccupationMeasure {
                    entries: psol.primal.clone(),
                    kind: match g.criterion() {
                        Criterion::Average => crate::chain::OccupationKind::Average,
                        Criterion::Discounted { beta } => {
                            crate::chain::OccupationKind::Discounted {
                                beta,
                                gamma: g.gamma().to_vec(),
                            }
                        }
                    },
                    idx: g.k2().clone(),
                };
                let strategy = chain::recover_strategy(&x);
                let ns = g.num_states();
                let dual_vars = match g.criterion() {
                    Criterion::Average => DualVars::Controller {
                        v: Some(dsol.primal[0]),
                        u: dsol.primal[1..1 + ns].to_vec(),
                        delta: dsol.primal[1 + ns..1 + ns + g.n2()].to_vec(),
                    },
                    Criterion::Discounted { .. } => DualVars::Controller {
                        v: None,
                        u: dsol.primal[..ns].to_vec(),
                        delta: dsol.primal[ns..ns + g.n2()].to_vec(),
                    },
                };
                Ok(BestResponseResult {
                    strategy,
                    value: psol.objective_value,
                    primal: psol,
                    dual: dsol,
                    dual_vars,
                })
            }
            _ => Err(BrError::BadInput("player out of range".into())),
        },
        Game::Independent(g) => {
            if player >= g.num_players() {
                return Err(BrError::BadInput("player out of range".into()));
            }
            let mc = chain::marginal_costs(game, profile, player)?;
            let primal = build_indep_lp_from_marginals(g, player, &mc);
            let dual = build_indep_dual_from_marginals(g, player, &mc);
            let (psol, dsol) = solve_pair(&primal, &dual, BrError::Infeasible)?;
            let x = crate::chain::OccupationMeasure {
                entries: psol.primal.clone(),
                kind: crate::chain::OccupationKind::Average,
                idx: g.chain(player).k().clone(),
            };
            let strategy = chain::recover_strategy(&x);
            let ns = g.chain(player).num_states();
            let dual_vars = DualVars::Controller {
                v: Some(dsol.primal[0]),
                u: dsol.primal[1..1 + ns].to_vec(),
                delta: dsol.primal[1 + ns..1 + ns + g.n(player)].to_vec(),
            };
            Ok(BestResponseResult {
                strategy,
                value: psol.objective_value,
                primal: psol,
                dual: dsol,
                dual_vars,
            })
        }
    }
}
