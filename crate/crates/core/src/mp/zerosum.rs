//! Zero-sum reductions of the quadratic programs.
//!
//! When the main costs cancel, the quadratic objective collapses to the two
//! dual-value blocks and the constraint set decouples, so the program falls
//! apart into one linear program over the controller-side block whose row
//! duals are exactly the other player's strategy. The returned pair is that
//! LP and its textbook dual; both optimal values equal the game value
//! (player 1's equilibrium main cost).

use super::{MpError, ProgramKind};
use crate::chain::{recover_strategy, OccupationKind, OccupationMeasure};
use crate::game::{Criterion, Game, IndependentGame, SingleControllerGame, StationaryStrategy};
use crate::lp::{dual_of, solve_lp, LinearProgram, LpSolution, LpStatus, Relation};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ZsKind {
    SingleController,
    Independent,
}

/// Primal-dual LP pair of a zero-sum reduction, with enough index metadata
/// to map optimal solutions back to a strategy pair.
#[derive(Debug, Clone)]
pub struct ZeroSumPair {
    /// maximization LP over the controller-side block; optimal value =
    /// game value
    pub primal: LinearProgram,
    /// its dual (minimization); same optimal value
    pub dual: LinearProgram,
    kind: ZsKind,
    x_offset: usize,
    strat_rows: usize,
}

impl ZeroSumPair {
    pub fn solve(&self) -> Result<(LpSolution, LpSolution), MpError> {
        let p = solve_lp(&self.primal)?;
        let d = solve_lp(&self.dual)?;
        if p.status != LpStatus::Optimal || d.status != LpStatus::Optimal {
            return Err(MpError::InfeasibleStrategies(format!(
                "zero-sum pair solved to {:?}/{:?}",
                p.status, d.status
            )));
        }
        Ok((p, d))
    }

    /// Maps an optimal primal solution back to the strategy pair: the
    /// occupation block gives the controller-side player, the dual values of
    /// the best-response rows give the opponent.
    pub fn recover(
        &self,
        game: &Game,
        primal_sol: &LpSolution,
    ) -> Result<Vec<StationaryStrategy>, MpError> {
        match (self.kind, game) {
            (ZsKind::SingleController, Game::SingleController(g)) => {
                let x = OccupationMeasure {
                    entries: primal_sol.primal[self.x_offset..self.x_offset + g.k2().len()]
                        .to_vec(),
                    kind: match g.criterion() {
                        Criterion::Average => OccupationKind::Average,
                        Criterion::Discounted { beta } => OccupationKind::Discounted {
                            beta,
                            gamma: g.gamma().to_vec(),
                        },
                    },
                    idx: g.k2().clone(),
                };
                let strat2 = recover_strategy(&x);
                let k1 = g.k1();
                let rows: Vec<Vec<f64>> = (0..g.num_states())
                    .map(|s| {
                        (0..k1.count(s))
                            .map(|a| primal_sol.dual[k1.flat(s, a)].max(0.0))
                            .collect()
                    })
                    .collect();
                let strat1 = StationaryStrategy::new(rows)
                    .map_err(|e| MpError::InfeasibleStrategies(e.to_string()))?;
                Ok(vec![strat1, strat2])
            }
            (ZsKind::Independent, Game::Independent(g)) => {
                let k2 = g.chain(1).k();
                let x2 = OccupationMeasure {
                    entries: primal_sol.primal[self.x_offset..self.x_offset + k2.len()].to_vec(),
                    kind: OccupationKind::Average,
                    idx: k2.clone(),
                };
                let strat2 = recover_strategy(&x2);
                let k1 = g.chain(0).k();
                let x1 = OccupationMeasure {
                    entries: (0..k1.len()).map(|j| primal_sol.dual[j].max(0.0)).collect(),
                    kind: OccupationKind::Average,
                    idx: k1.clone(),
                };
                let strat1 = recover_strategy(&x1);
                Ok(vec![strat1, strat2])
            }
            _ => Err(MpError::Unsupported(
                "pair/game class mismatch in recovery".into(),
            )),
        }
    }

    fn sanity(&self) -> usize {
        self.strat_rows
    }
}

fn sc_zero_sum_pair(g: &SingleControllerGame) -> Result<ZeroSumPair, MpError> {
    for (s, block) in g.cost(0).iter().enumerate() {
        for (a1, row) in block.iter().enumerate() {
            for (a2, &c1) in row.iter().enumerate() {
                let c2 = g.cost(1)[s][a1][a2];
                if (c1 + c2).abs() > 1e-12 {
                    return Err(MpError::NotZeroSum(format!(
                        "c1 + c2 = {:.3e} at (s={},a1={},a2={})",
                        c1 + c2,
                        s + 1,
                        a1 + 1,
                        a2 + 1
                    )));
                }
            }
        }
    }
    let ns = g.num_states();
    let n1 = g.n1();
    let k1 = g.k1();
    let k2 = g.k2();
    // variables: z(s) free | delta1 >= 0 | x >= 0
    let x_offset = ns + n1;
    let mut obj = vec![1.0; ns];
    obj.extend(g.xi1().iter().map(|x| -x));
    obj.resize(obj.len() + k2.len(), 0.0);
    let mut lp = LinearProgram::maximize(obj);
    for s in 0..ns {
        lp.set_name(s, format!("z[{}]", s + 1));
        lp.set_free(s);
    }
    for k in 0..n1 {
        lp.set_name(ns + k, format!("delta1[{}]", k + 1));
    }
    for (flat, s, a2) in k2.pairs() {
        lp.set_name(x_offset + flat, format!("x[{},{}]", s + 1, a2 + 1));
    }

    // best-response rows of player 1 (duals = f)
    for (_, s, a1) in k1.pairs() {
        let mut coeffs = vec![0.0; lp.num_vars()];
        coeffs[s] = 1.0;
        for k in 0..n1 {
            coeffs[ns + k] = -g.d1_sub()[k][s][a1];
        }
        for a2 in 0..k2.count(s) {
            coeffs[x_offset + k2.flat(s, a2)] = -g.cost(0)[s][a1][a2];
        }
        lp.add_row(
            format!("br1[{},{}]", s + 1, a1 + 1),
            coeffs,
            Relation::Le,
            0.0,
        );
    }
    let strat_rows = k1.len();

    let (beta, gamma) = match g.criterion() {
        Criterion::Average => (1.0, None),
        Criterion::Discounted { beta } => (beta, Some(g.gamma())),
    };
    for s2 in 0..ns {
        let mut coeffs = vec![0.0; lp.num_vars()];
        for (flat, s, a2) in k2.pairs() {
            let delta = if s == s2 { 1.0 } else { 0.0 };
            coeffs[x_offset + flat] = delta - beta * g.trans()[s][a2][s2];
        }
        let rhs = gamma.map_or(0.0, |gm| (1.0 - beta) * gm[s2]);
        lp.add_row(format!("balance[{}]", s2 + 1), coeffs, Relation::Eq, rhs);
    }
    if gamma.is_none() {
        let mut coeffs = vec![0.0; lp.num_vars()];
        for flat in 0..k2.len() {
            coeffs[x_offset + flat] = 1.0;
        }
        lp.add_row("normalize", coeffs, Relation::Eq, 1.0);
    }
    for l in 0..g.n2() {
        let mut coeffs = vec![0.0; lp.num_vars()];
        for (flat, s, a2) in k2.pairs() {
            coeffs[x_offset + flat] = g.d2()[l][s][0][a2];
        }
        lp.add_row(format!("real[{}]", l + 1), coeffs, Relation::Le, g.xi2()[l]);
    }

    let dual = dual_of(&lp)?;
    Ok(ZeroSumPair {
        primal: lp,
        dual,
        kind: ZsKind::SingleController,
        x_offset,
        strat_rows,
    })
}

fn indep_zero_sum_pair(g: &IndependentGame) -> Result<ZeroSumPair, MpError> {
    if g.num_players() != 2 {
        return Err(MpError::Unsupported(
            "zero-sum split needs exactly two players".into(),
        ));
    }
    let c1 = g.cost(0);
    let c2 = g.cost(1);
    for (j, (&a, &b)) in c1.data().iter().zip(c2.data()).enumerate() {
        if (a + b).abs() > 1e-12 {
            return Err(MpError::NotZeroSum(format!(
                "c1 + c2 = {:.3e} at joint index {j}",
                a + b
            )));
        }
    }
    let k1 = g.chain(0).k();
    let k2 = g.chain(1).k();
    let ns1 = g.chain(0).num_states();
    let n1 = g.n(0);
    // variables: v1 free | u1 free | delta1 >= 0 | x2 >= 0
    let x_offset = 1 + ns1 + n1;
    let mut obj = vec![1.0];
    obj.resize(obj.len() + ns1, 0.0);
    obj.extend(g.xi(0).iter().map(|x| -x));
    obj.resize(obj.len() + k2.len(), 0.0);
    let mut lp = LinearProgram::maximize(obj);
    lp.set_name(0, "v1");
    lp.set_free(0);
    for s in 0..ns1 {
        lp.set_name(1 + s, format!("u1[{}]", s + 1));
        lp.set_free(1 + s);
    }
    for k in 0..n1 {
        lp.set_name(1 + ns1 + k, format!("delta1[{}]", k + 1));
    }
    for (flat, s, a) in k2.pairs() {
        lp.set_name(x_offset + flat, format!("x2[{},{}]", s + 1, a + 1));
    }

    for (own, s, a) in k1.pairs() {
        let mut coeffs = vec![0.0; lp.num_vars()];
        coeffs[0] = 1.0;
        coeffs[1 + s] += 1.0;
        for s2 in 0..ns1 {
            coeffs[1 + s2] -= g.chain(0).trans()[s][a][s2];
        }
        for k in 0..n1 {
            let mut base = vec![0usize; 2];
            base[0] = own;
            coeffs[1 + ns1 + k] = -g.d(0)[k].get(&base);
        }
        for flat2 in 0..k2.len() {
            coeffs[x_offset + flat2] = -c1.get(&[own, flat2]);
        }
        lp.add_row(
            format!("br1[{},{}]", s + 1, a + 1),
            coeffs,
            Relation::Le,
            0.0,
        );
    }
    let strat_rows = k1.len();

    let ns2 = g.chain(1).num_states();
    for s2 in 0..ns2 {
        let mut coeffs = vec![0.0; lp.num_vars()];
        for (flat, s, a) in k2.pairs() {
            let delta = if s == s2 { 1.0 } else { 0.0 };
            coeffs[x_offset + flat] = delta - g.chain(1).trans()[s][a][s2];
        }
        lp.add_row(format!("balance2[{}]", s2 + 1), coeffs, Relation::Eq, 0.0);
    }
    let mut norm = vec![0.0; lp.num_vars()];
    for flat in 0..k2.len() {
        norm[x_offset + flat] = 1.0;
    }
    lp.add_row("normalize2", norm, Relation::Eq, 1.0);
    for k in 0..g.n(1) {
        let mut coeffs = vec![0.0; lp.num_vars()];
        for flat in 0..k2.len() {
            coeffs[x_offset + flat] = g.d(1)[k].get(&[0, flat]);
        }
        lp.add_row(
            format!("real2[{}]", k + 1),
            coeffs,
            Relation::Le,
            g.xi(1)[k],
        );
    }

    let dual = dual_of(&lp)?;
    Ok(ZeroSumPair {
        primal: lp,
        dual,
        kind: ZsKind::Independent,
        x_offset,
        strat_rows,
    })
}

/// Splits a zero-sum quadratic program into a primal-dual LP pair. The
/// program must be one of the quadratic specializations (so the constraint
/// costs are decoupled); the game supplies the raw data.
pub fn zero_sum_split(qp: &super::MathProgram, game: &Game) -> Result<ZeroSumPair, MpError> {
    let pair = match (qp.kind, game) {
        (ProgramKind::Qp1 | ProgramKind::Qp2, Game::SingleController(g)) => sc_zero_sum_pair(g)?,
        (ProgramKind::Qp3, Game::Independent(g)) => indep_zero_sum_pair(g)?,
        _ => {
            return Err(MpError::Unsupported(
                "zero-sum split applies to the quadratic specializations".into(),
            ))
        }
    };
    debug_assert!(pair.sanity() > 0);
    Ok(pair)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::builtin_example;
    use crate::lp::duality_gap;
    use crate::mp::{assemble_auto, specialize_qp};

    /// zero-sum variant of the single-controller example: player 2's costs
    /// are negated player-1 costs; subscription constraints dropped in the
    /// average case.
    fn sc_zero_sum(discounted: bool, keep_subscription: bool) -> SingleControllerGame {
        let name = if discounted {
            "sc-discounted"
        } else {
            "sc-average"
        };
        let g = builtin_example(name)
            .unwrap()
            .as_single_controller()
            .unwrap()
            .clone();
        let cost2: Vec<Vec<Vec<f64>>> = g
            .cost(0)
            .iter()
            .map(|b| b.iter().map(|r| r.iter().map(|&v| -v).collect()).collect())
            .collect();
        let (d1, xi1) = if keep_subscription {
            (g.d1_sub().to_vec(), g.xi1().to_vec())
        } else {
            (vec![], vec![])
        };
        SingleControllerGame::new(
            g.state_names().to_vec(),
            vec![vec!["1".into(), "2".into()]; 2],
            vec![vec!["1".into(), "2".into()]; 2],
            g.cost(0).to_vec(),
            cost2,
            d1,
            g.d2().to_vec(),
            g.trans().to_vec(),
            xi1,
            g.xi2().to_vec(),
            g.gamma().to_vec(),
            g.criterion(),
        )
        .unwrap()
    }

    #[test]
    fn average_zero_sum_pair_values_match() {
        let g = sc_zero_sum(false, false);
        let game = Game::SingleController(g.clone());
        let qp = specialize_qp(&assemble_auto(&game).unwrap(), &game).unwrap();
        let pair = zero_sum_split(&qp, &game).unwrap();
        let (p, d) = pair.solve().unwrap();
        assert!((p.objective_value - d.objective_value).abs() <= 1e-7);
        assert!(duality_gap(&pair.primal, &p) <= 1e-7);

        // the recovered pair must be a mutual best response
        let strategies = pair.recover(&game, &p).unwrap();
        let report = crate::chain::expected_costs(&game, &strategies).unwrap();
        assert!((report.main_costs[0] - p.objective_value).abs() <= 1e-6);
        for player in 0..2 {
            let br = crate::br::best_response(&game, player, &strategies).unwrap();
            let gap = report.main_costs[player] - br.value;
            assert!(gap <= 1e-6, "player {player} gap {gap}");
        }
    }

    #[test]
    fn discounted_zero_sum_with_subscription() {
        let g = sc_zero_sum(true, true);
        let game = Game::SingleController(g.clone());
        let qp = specialize_qp(&assemble_auto(&game).unwrap(), &game).unwrap();
        let pair = zero_sum_split(&qp, &game).unwrap();
        let (p, d) = pair.solve().unwrap();
        assert!((p.objective_value - d.objective_value).abs() <= 1e-7);
        let strategies = pair.recover(&game, &p).unwrap();
        let report = crate::chain::expected_costs(&game, &strategies).unwrap();
        assert!(report.all_bounds_satisfied());
        for player in 0..2 {
            let br = crate::br::best_response(&game, player, &strategies).unwrap();
            let gap = report.main_costs[player] - br.value;
            assert!(gap <= 1e-6, "player {player} gap {gap}");
        }
    }

    #[test]
    fn non_zero_sum_rejected() {
        let game = builtin_example("sc-average").unwrap();
        let qp = specialize_qp(&assemble_auto(&game).unwrap(), &game).unwrap();
        assert!(matches!(
            zero_sum_split(&qp, &game),
            Err(MpError::NotZeroSum(_))
        ));
    }

    #[test]
    fn one_state_matrix_game_value() {
        // a single-state zero-sum game reduces to a matrix game; check the
        // value against the standard matrix-game LP built independently.
        let c = vec![vec![3.0, -1.0], vec![0.0, 2.0]];
        let neg: Vec<Vec<f64>> = c.iter().map(|r| r.iter().map(|&v| -v).collect()).collect();
        let g = SingleControllerGame::new(
            vec!["1".into()],
            vec![vec!["1".into(), "2".into()]],
            vec![vec!["1".into(), "2".into()]],
            vec![c.clone()],
            vec![neg],
            vec![],
            vec![],
            vec![vec![vec![1.0], vec![1.0]]],
            vec![],
            vec![],
            vec![1.0],
            crate::game::Criterion::Average,
        )
        .unwrap();
        let game = Game::SingleController(g);
        let qp = specialize_qp(&assemble_auto(&game).unwrap(), &game).unwrap();
        let pair = zero_sum_split(&qp, &game).unwrap();
        let (p, _) = pair.solve().unwrap();

        // oracle: value = max_y min_a1 sum_a2 c[a1][a2] y[a2] via an LP in
        // (y, w): maximize w s.t. w <= (C y)_a1, sum y = 1, y >= 0
        let mut lp = LinearProgram::maximize(vec![0.0, 0.0, 1.0]);
        lp.set_free(2);
        for a1 in 0..2 {
            lp.add_row(
                format!("row{a1}"),
                vec![-c[a1][0], -c[a1][1], 1.0],
                Relation::Le,
                0.0,
            );
        }
        lp.add_row("simplex", vec![1.0, 1.0, 0.0], Relation::Eq, 1.0);
        let oracle = solve_lp(&lp).unwrap();
        assert!((p.objective_value - oracle.objective_value).abs() <= 1e-8);
    }

    #[test]
    fn indep_zero_sum_pair() {
        let base = builtin_example("indep-2p").unwrap();
        let g = base.as_independent().unwrap();
        let c1 = g.cost(0).clone();
        let neg = crate::game::JointTensor::new(
            c1.dims().to_vec(),
            c1.data().iter().map(|&v| -v).collect(),
        )
        .unwrap();
        let zg = IndependentGame::new(
            g.chains().to_vec(),
            vec![c1, neg],
            vec![g.d(0).to_vec(), g.d(1).to_vec()],
            vec![g.xi(0).to_vec(), g.xi(1).to_vec()],
        )
        .unwrap();
        let game = Game::Independent(zg);
        let qp = specialize_qp(&assemble_auto(&game).unwrap(), &game).unwrap();
        let pair = zero_sum_split(&qp, &game).unwrap();
        let (p, d) = pair.solve().unwrap();
        assert!((p.objective_value - d.objective_value).abs() <= 1e-7);
        let strategies = pair.recover(&game, &p).unwrap();
        let report = crate::chain::expected_costs(&game, &strategies).unwrap();
        assert!(report.all_bounds_satisfied());
        for player in 0..2 {
            let br = crate::br::best_response(&game, player, &strategies).unwrap();
            let gap = report.main_costs[player] - br.value;
            assert!(gap <= 1e-6, "player {player} gap {gap}");
        }
    }
}
