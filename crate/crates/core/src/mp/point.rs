//! Certificate-point construction: occupation measures for the strategy
//! part, best-response dual optima for the value part. At an equilibrium the
//! assembled point is feasible with objective zero; elsewhere the objective
//! equals the sum of the players' duality surpluses (their best-response
//! gaps), which is what makes the nonnegativity argument work.

use super::assemble::assemble_auto;
use super::{feasibility_residuals, FeasiblePoint, MpError};
use crate::br;
use crate::chain;
use crate::game::{Criterion, Game, StationaryStrategy};
use crate::lp::{solve_lp, LpStatus};

fn solve_dual_vector(lp: &crate::lp::LinearProgram) -> Result<Vec<f64>, MpError> {
    let sol = solve_lp(lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(MpError::InfeasibleStrategies(format!(
            "best-response dual solve returned {:?}",
            sol.status
        )));
    }
    Ok(sol.primal)
}

/// Builds a feasible point of the game's program from a feasible strategy
/// profile. Residuals are computed against the assembled program, not
/// assumed.
pub fn make_feasible_point(
    game: &Game,
    strategies: &[StationaryStrategy],
) -> Result<FeasiblePoint, MpError> {
    if strategies.len() != game.num_players() {
        return Err(MpError::DimensionMismatch(format!(
            "profile has {} strategies, game has {} players",
            strategies.len(),
            game.num_players()
        )));
    }
    let report = chain::expected_costs(game, strategies)?;
    if !report.all_bounds_satisfied() {
        return Err(MpError::InfeasibleStrategies(format!(
            "constraint functionals violated by {:.3e}",
            report.worst_violation()
        )));
    }

    let values = match game {
        Game::SingleController(g) => {
            let f = &strategies[0];
            let x = chain::sc_occupation(g, &strategies[1])?;
            let mc1 = chain::sc_p1_marginals(g, &strategies[1])?;
            let d1 = br::build_p1_dual_from_marginals(g, &mc1.main);
            let zsol = solve_dual_vector(&d1)?;
            let mc2 = chain::sc_p2_marginals(g, f);
            let d2 = br::build_p2_dual_from_marginals(g, &mc2);
            let usol = solve_dual_vector(&d2)?;

            let ns = g.num_states();
            let mut values = Vec::new();
            match g.criterion() {
                Criterion::Average => {
                    values.push(usol[0]); // v
                    values.extend_from_slice(&usol[1..1 + ns]); // u
                    values.extend_from_slice(&zsol[..ns]); // z
                    values.extend(f.flat(g.k1())); // f
                    values.extend_from_slice(&x.entries); // x
                    values.extend_from_slice(&zsol[ns..ns + g.n1()]); // delta1
                    values.extend_from_slice(&usol[1 + ns..1 + ns + g.n2()]); // delta2
                }
                Criterion::Discounted { .. } => {
                    values.extend_from_slice(&usol[..ns]); // u
                    values.extend_from_slice(&zsol[..ns]); // z
                    values.extend(f.flat(g.k1()));
                    values.extend_from_slice(&x.entries);
                    values.extend_from_slice(&zsol[ns..ns + g.n1()]);
                    values.extend_from_slice(&usol[ns..ns + g.n2()]); // delta2
                }
            }
            values
        }
        Game::Independent(g) => {
            let mut values = Vec::new();
            for i in 0..g.num_players() {
                let mc = chain::indep_marginals(g, strategies, i)?;
                let dual = br::build_indep_dual_from_marginals(g, i, &mc);
                let dsol = solve_dual_vector(&dual)?;
                let ns = g.chain(i).num_states();
                let x = chain::avg_occupation(g.chain(i).trans(), &strategies[i])?;
                values.push(dsol[0]); // v_i
                values.extend_from_slice(&dsol[1..1 + ns]); // u_i
                values.extend_from_slice(&x.entries); // x_i
                values.extend_from_slice(&dsol[1 + ns..1 + ns + g.n(i)]); // delta_i
            }
            values
        }
    };

    let mp = assemble_auto(game)?;
    let residuals = feasibility_residuals(&mp, &values)?;
    Ok(FeasiblePoint { values, residuals })
}

/// Recovers the strategy profile encoded in a program point: the strategy
/// block is read off directly, occupation blocks are normalized per state.
pub fn point_strategies(
    game: &Game,
    mp: &super::MathProgram,
    values: &[f64],
) -> Result<Vec<StationaryStrategy>, MpError> {
    use super::VarKind;
    use crate::chain::{recover_strategy, OccupationKind, OccupationMeasure};
    if values.len() != mp.num_vars() {
        return Err(MpError::DimensionMismatch("point length".into()));
    }
    let occupation_of = |player: usize, idx: &crate::game::SaIndex, kind: OccupationKind| {
        let mut entries = vec![0.0; idx.len()];
        for (j, k) in mp.vars.kinds.iter().enumerate() {
            if let VarKind::X { player: p, flat } = k {
                if *p == player {
                    entries[*flat] = values[j];
                }
            }
        }
        OccupationMeasure {
            entries,
            kind,
            idx: idx.clone(),
        }
    };
    match game {
        Game::SingleController(g) => {
            let mut f_flat = vec![0.0; g.k1().len()];
            for (j, k) in mp.vars.kinds.iter().enumerate() {
                if let VarKind::F { flat } = k {
                    f_flat[*flat] = values[j];
                }
            }
            let rows: Vec<Vec<f64>> = (0..g.num_states())
                .map(|s| {
                    (0..g.k1().count(s))
                        .map(|a| f_flat[g.k1().flat(s, a)].max(0.0))
                        .collect()
                })
                .collect();
            let f = StationaryStrategy::new(rows)
                .map_err(|e| MpError::InfeasibleStrategies(e.to_string()))?;
            let kind = match g.criterion() {
                Criterion::Average => OccupationKind::Average,
                Criterion::Discounted { beta } => OccupationKind::Discounted {
                    beta,
                    gamma: g.gamma().to_vec(),
                },
            };
            let x = occupation_of(1, g.k2(), kind);
            Ok(vec![f, recover_strategy(&x)])
        }
        Game::Independent(g) => (0..g.num_players())
            .map(|i| {
                let x = occupation_of(i, g.chain(i).k(), OccupationKind::Average);
                Ok(recover_strategy(&x))
            })
            .collect(),
    }
}
