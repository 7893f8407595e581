//! Markov-chain and occupation-measure algebra: steady states, discounted
//! visitation, strategy recovery, marginal cost vectors and expected-cost
//! functionals.

use crate::dense;
use crate::game::{
    Criterion, Game, IndependentGame, SaIndex, SingleControllerGame, StationaryStrategy,
};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ChainError {
    #[error("chain is not unichain: {0} closed recurrent classes")]
    NotUnichain(usize),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("singular resolvent system")]
    SingularResolvent,
}

/// Transition matrix induced by the controller's strategy:
/// `P[s][s'] = sum_a p(s'|s,a) g(s,a)`.
pub fn transition_matrix(
    trans: &[Vec<Vec<f64>>],
    strategy: &StationaryStrategy,
) -> Result<Vec<Vec<f64>>, ChainError> {
    let ns = trans.len();
    if strategy.num_states() != ns {
        return Err(ChainError::DimensionMismatch("strategy/state count".into()));
    }
    let mut p = vec![vec![0.0; ns]; ns];
    for s in 0..ns {
        let row = strategy.row(s);
        if row.len() != trans[s].len() {
            return Err(ChainError::DimensionMismatch(format!(
                "strategy row {s} has {} actions, chain has {}",
                row.len(),
                trans[s].len()
            )));
        }
        for (a, &pa) in row.iter().enumerate() {
            if pa == 0.0 {
                continue;
            }
            for s2 in 0..ns {
                p[s][s2] += pa * trans[s][a][s2];
            }
        }
    }
    Ok(p)
}

/// Exact structural analysis of the support graph: returns the recurrent
/// marker per state and the number of closed communicating classes.
pub(crate) fn recurrent_structure(p: &[Vec<f64>]) -> (Vec<bool>, usize) {
    let ns = p.len();
    let mut reach = vec![vec![false; ns]; ns];
    for (i, row) in p.iter().enumerate() {
        reach[i][i] = true;
        for (j, &v) in row.iter().enumerate() {
            if v > 0.0 {
                reach[i][j] = true;
            }
        }
    }
    for k in 0..ns {
        for i in 0..ns {
            if reach[i][k] {
                for j in 0..ns {
                    if reach[k][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
    }
    let recurrent: Vec<bool> = (0..ns)
        .map(|i| (0..ns).all(|j| !reach[i][j] || reach[j][i]))
        .collect();
    let mut seen = vec![false; ns];
    let mut classes = 0;
    for i in 0..ns {
        if recurrent[i] && !seen[i] {
            classes += 1;
            for j in 0..ns {
                if reach[i][j] && reach[j][i] {
                    seen[j] = true;
                }
            }
        }
    }
    (recurrent, classes)
}

/// Recurrent-state markers of a row-stochastic matrix (exact support-graph
/// analysis).
pub fn recurrent_states(p: &[Vec<f64>]) -> Vec<bool> {
    recurrent_structure(p).0
}

/// Stationary distribution of a row-stochastic unichain matrix: solves
/// `pi P = pi, sum pi = 1` by dense elimination after an exact
/// closed-class check.
pub fn steady_state(p: &[Vec<f64>]) -> Result<Vec<f64>, ChainError> {
    let ns = p.len();
    let (_, classes) = recurrent_structure(p);
    if classes != 1 {
        return Err(ChainError::NotUnichain(classes));
    }
    // rows: (P^T - I) pi = 0 with the last row replaced by sum pi = 1
    let mut a = vec![vec![0.0; ns]; ns];
    let mut b = vec![0.0; ns];
    for i in 0..ns.saturating_sub(1) {
        for j in 0..ns {
            a[i][j] = p[j][i] - if i == j { 1.0 } else { 0.0 };
        }
    }
    for j in 0..ns {
        a[ns - 1][j] = 1.0;
    }
    b[ns - 1] = 1.0;
    let mut pi = dense::solve(a, b, 1e-13).ok_or(ChainError::NotUnichain(classes))?;
    for v in &mut pi {
        if *v < 0.0 && *v > -1e-10 {
            *v = 0.0;
        }
    }
    let residual = steady_residual(p, &pi);
    if residual > 1e-10 || pi.iter().any(|&v| v < 0.0) {
        return Err(ChainError::NotUnichain(classes));
    }
    Ok(pi)
}

fn steady_residual(p: &[Vec<f64>], pi: &[f64]) -> f64 {
    let ns = p.len();
    let mut r = (pi.iter().sum::<f64>() - 1.0).abs();
    for j in 0..ns {
        let flow: f64 = (0..ns).map(|i| pi[i] * p[i][j]).sum();
        r = r.max((flow - pi[j]).abs());
    }
    r
}

#[derive(Debug, Clone, PartialEq)]
pub enum OccupationKind {
    Average,
    Discounted { beta: f64, gamma: Vec<f64> },
}

/// Probability measure over the controlled chain's state-action pairs:
/// long-run frequencies (average) or normalized discounted visitation.
#[derive(Debug, Clone)]
pub struct OccupationMeasure {
    pub entries: Vec<f64>,
    pub kind: OccupationKind,
    pub idx: SaIndex,
}

impl OccupationMeasure {
    pub fn get(&self, s: usize, a: usize) -> f64 {
        self.entries[self.idx.flat(s, a)]
    }

    pub fn state_marginals(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.idx.num_states()];
        for (flat, s, _) in self.idx.pairs() {
            out[s] += self.entries[flat];
        }
        out
    }

    /// Max violation of the defining constraint set: balance rows,
    /// normalization and nonnegativity.
    pub fn membership_residual(&self, trans: &[Vec<Vec<f64>>]) -> f64 {
        let ns = trans.len();
        let mut worst = (self.entries.iter().sum::<f64>() - 1.0).abs();
        for &e in &self.entries {
            worst = worst.max(-e);
        }
        let (beta, gamma) = match &self.kind {
            OccupationKind::Average => (1.0, None),
            OccupationKind::Discounted { beta, gamma } => (*beta, Some(gamma)),
        };
        for s2 in 0..ns {
            let mut lhs = 0.0;
            for (flat, s, a) in self.idx.pairs() {
                let delta = if s == s2 { 1.0 } else { 0.0 };
                lhs += (delta - beta * trans[s][a][s2]) * self.entries[flat];
            }
            let rhs = gamma.map_or(0.0, |g| (1.0 - beta) * g[s2]);
            worst = worst.max((lhs - rhs).abs());
        }
        worst
    }
}

/// Average occupation measure `x(s,a) = pi(s) g(s,a)` of a unichain chain.
pub fn avg_occupation(
    trans: &[Vec<Vec<f64>>],
    strategy: &StationaryStrategy,
) -> Result<OccupationMeasure, ChainError> {
    let p = transition_matrix(trans, strategy)?;
    let pi = steady_state(&p)?;
    let counts: Vec<usize> = trans.iter().map(|t| t.len()).collect();
    let idx = SaIndex::new(&counts);
    let mut entries = vec![0.0; idx.len()];
    for (flat, s, a) in idx.pairs() {
        entries[flat] = pi[s] * strategy.prob(s, a);
    }
    Ok(OccupationMeasure {
        entries,
        kind: OccupationKind::Average,
        idx,
    })
}

/// Discounted occupation measure
/// `x(s,a) = (1-beta) [gamma^T (I - beta P)^{-1}]_s g(s,a)`.
pub fn disc_occupation(
    trans: &[Vec<Vec<f64>>],
    strategy: &StationaryStrategy,
    gamma: &[f64],
    beta: f64,
) -> Result<OccupationMeasure, ChainError> {
    if !(0.0..1.0).contains(&beta) {
        return Err(ChainError::DimensionMismatch(format!(
            "discount factor {beta} outside [0,1)"
        )));
    }
    let p = transition_matrix(trans, strategy)?;
    let ns = p.len();
    if gamma.len() != ns {
        return Err(ChainError::DimensionMismatch("gamma length".into()));
    }
    // solve (I - beta P)^T w = (1-beta) gamma
    let mut a = vec![vec![0.0; ns]; ns];
    for i in 0..ns {
        for j in 0..ns {
            a[i][j] = (if i == j { 1.0 } else { 0.0 }) - beta * p[j][i];
        }
    }
    let b: Vec<f64> = gamma.iter().map(|&g| (1.0 - beta) * g).collect();
    let w = dense::solve(a, b, 1e-13).ok_or(ChainError::SingularResolvent)?;
    let counts: Vec<usize> = trans.iter().map(|t| t.len()).collect();
    let idx = SaIndex::new(&counts);
    let mut entries = vec![0.0; idx.len()];
    for (flat, s, a) in idx.pairs() {
        entries[flat] = w[s] * strategy.prob(s, a);
    }
    Ok(OccupationMeasure {
        entries,
        kind: OccupationKind::Discounted {
            beta,
            gamma: gamma.to_vec(),
        },
        idx,
    })
}

/// Rebuilds the strategy from an occupation measure: rows are normalized
/// slices; states with zero occupation mass get the uniform row.
pub fn recover_strategy(x: &OccupationMeasure) -> StationaryStrategy {
    let mut rows = Vec::with_capacity(x.idx.num_states());
    for s in 0..x.idx.num_states() {
        let c = x.idx.count(s);
        let mut row: Vec<f64> = (0..c).map(|a| x.get(s, a).max(0.0)).collect();
        let total: f64 = row.iter().sum();
        if total > 0.0 {
            for v in &mut row {
                *v /= total;
            }
        } else {
            row = vec![1.0 / c as f64; c];
        }
        rows.push(row);
    }
    StationaryStrategy::new(rows).expect("normalized rows are valid")
}

/// Occupation measure of the controlled chain of a single-controller game
/// under the game's criterion.
pub fn sc_occupation(
    game: &SingleControllerGame,
    g: &StationaryStrategy,
) -> Result<OccupationMeasure, ChainError> {
    match game.criterion() {
        Criterion::Average => avg_occupation(game.trans(), g),
        Criterion::Discounted { beta } => disc_occupation(game.trans(), g, game.gamma(), beta),
    }
}

/// Per-(state,action) cost vectors seen by `target` when the other players
/// hold the given strategies fixed.
#[derive(Debug, Clone)]
pub struct MarginalCosts {
    /// main-cost marginal, flat over the target's state-action pairs
    pub main: Vec<f64>,
    /// one marginal per constraint of the target
    pub constraints: Vec<Vec<f64>>,
}

pub fn marginal_costs(
    game: &Game,
    strategies: &[StationaryStrategy],
    target: usize,
) -> Result<MarginalCosts, ChainError> {
    match game {
        Game::SingleController(g) => match target {
            0 => sc_p1_marginals(g, &strategies[1]),
            1 => Ok(sc_p2_marginals(g, &strategies[0])),
            _ => Err(ChainError::DimensionMismatch("player out of range".into())),
        },
        Game::Independent(g) => indep_marginals(g, strategies, target),
    }
}

/// Player 1's marginal costs `c1(s,a1;g)` against the controller's strategy,
/// weighted by the criterion's occupation measure.
pub fn sc_p1_marginals(
    g: &SingleControllerGame,
    strat2: &StationaryStrategy,
) -> Result<MarginalCosts, ChainError> {
    let x = sc_occupation(g, strat2)?;
    let mut main = vec![0.0; g.k1().len()];
    for (flat, s, a1) in g.k1().pairs() {
        let mut v = 0.0;
        for a2 in 0..g.k2().count(s) {
            v += g.cost1[s][a1][a2] * x.get(s, a2);
        }
        main[flat] = v;
    }
    let constraints = g
        .d1_sub
        .iter()
        .map(|t| {
            g.k1()
                .pairs()
                .map(|(_, s, a1)| t[s][a1])
                .collect::<Vec<f64>>()
        })
        .collect();
    Ok(MarginalCosts { main, constraints })
}

/// The controller's marginal costs `c2(f;s,a2)` and `d2l(f;s,a2)`: plain
/// mixtures over player 1's rows, no state weighting (the occupation
/// variables carry it).
pub fn sc_p2_marginals(g: &SingleControllerGame, f: &StationaryStrategy) -> MarginalCosts {
    let mix = |t: &[Vec<Vec<f64>>]| -> Vec<f64> {
        g.k2()
            .pairs()
            .map(|(_, s, a2)| {
                f.row(s)
                    .iter()
                    .enumerate()
                    .map(|(a1, &p)| p * t[s][a1][a2])
                    .sum()
            })
            .collect()
    };
    MarginalCosts {
        main: mix(&g.cost2),
        constraints: g.d2.iter().map(|t| mix(t)).collect(),
    }
}

/// Player `i`'s marginal costs through the product of the other players'
/// occupation measures.
pub fn indep_marginals(
    g: &IndependentGame,
    strategies: &[StationaryStrategy],
    target: usize,
) -> Result<MarginalCosts, ChainError> {
    let occs = indep_occupations_except(g, strategies, target)?;
    let weights: Vec<&[f64]> = occs.iter().map(|o| o.as_slice()).collect();
    let main = g.cost(target).contract_except(target, &weights);
    let constraints = g
        .d(target)
        .iter()
        .map(|t| t.contract_except(target, &weights))
        .collect();
    Ok(MarginalCosts { main, constraints })
}

/// Flat occupation vectors of every player's chain; the `except` player's
/// slot is filled with a dummy (unused by `contract_except`).
fn indep_occupations_except(
    g: &IndependentGame,
    strategies: &[StationaryStrategy],
    except: usize,
) -> Result<Vec<Vec<f64>>, ChainError> {
    let mut out = Vec::with_capacity(g.num_players());
    for j in 0..g.num_players() {
        if j == except {
            out.push(vec![0.0; g.chain(j).k().len()]);
        } else {
            let x = avg_occupation(g.chain(j).trans(), &strategies[j])?;
            out.push(x.entries);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct BoundCheck {
    pub value: f64,
    pub bound: f64,
    pub satisfied: bool,
    pub slack: f64,
}

impl BoundCheck {
    fn new(value: f64, bound: f64) -> Self {
        let slack = bound - value;
        BoundCheck {
            value,
            bound,
            satisfied: slack >= -1e-9,
            slack,
        }
    }
}

/// Expected main and constraint costs of a full strategy profile.
#[derive(Debug, Clone, serde::Serialize)]
pub struct CostReport {
    pub main_costs: Vec<f64>,
    pub constraint_costs: Vec<Vec<f64>>,
    pub bounds: Vec<Vec<BoundCheck>>,
}

impl CostReport {
    pub fn all_bounds_satisfied(&self) -> bool {
        self.bounds.iter().flatten().all(|b| b.satisfied)
    }

    pub fn worst_violation(&self) -> f64 {
        self.bounds
            .iter()
            .flatten()
            .map(|b| -b.slack)
            .fold(0.0, f64::max)
    }
}

pub fn expected_costs(
    game: &Game,
    strategies: &[StationaryStrategy],
) -> Result<CostReport, ChainError> {
    match game {
        Game::SingleController(g) => {
            if strategies.len() != 2 {
                return Err(ChainError::DimensionMismatch("need two strategies".into()));
            }
            let f = &strategies[0];
            let x = sc_occupation(g, &strategies[1])?;
            let total = |t: &[Vec<Vec<f64>>]| -> f64 {
                let mut v = 0.0;
                for (flat, s, a2) in g.k2().pairs() {
                    let mixed: f64 = f
                        .row(s)
                        .iter()
                        .enumerate()
                        .map(|(a1, &p)| p * t[s][a1][a2])
                        .sum();
                    v += x.entries[flat] * mixed;
                }
                v
            };
            let main_costs = vec![total(&g.cost1), total(&g.cost2)];
            // player 1: subscription costs depend only on f
            let subs: Vec<f64> = g
                .d1_sub
                .iter()
                .map(|t| {
                    (0..g.num_states())
                        .map(|s| {
                            f.row(s)
                                .iter()
                                .enumerate()
                                .map(|(a1, &p)| p * t[s][a1])
                                .sum::<f64>()
                        })
                        .sum()
                })
                .collect();
            let reals: Vec<f64> = g.d2.iter().map(|t| total(t)).collect();
            let bounds = vec![
                subs.iter()
                    .zip(g.xi1())
                    .map(|(&v, &b)| BoundCheck::new(v, b))
                    .collect(),
                reals
                    .iter()
                    .zip(g.xi2())
                    .map(|(&v, &b)| BoundCheck::new(v, b))
                    .collect(),
            ];
            Ok(CostReport {
                main_costs,
                constraint_costs: vec![subs, reals],
                bounds,
            })
        }
        Game::Independent(g) => {
            let n = g.num_players();
            if strategies.len() != n {
                return Err(ChainError::DimensionMismatch(format!(
                    "need {n} strategies"
                )));
            }
            let occs: Vec<Vec<f64>> = (0..n)
                .map(|i| Ok(avg_occupation(g.chain(i).trans(), &strategies[i])?.entries))
                .collect::<Result<_, ChainError>>()?;
            let weights: Vec<&[f64]> = occs.iter().map(|o| o.as_slice()).collect();
            let main_costs: Vec<f64> = (0..n).map(|i| g.cost(i).contract_all(&weights)).collect();
            let constraint_costs: Vec<Vec<f64>> = (0..n)
                .map(|i| g.d(i).iter().map(|t| t.contract_all(&weights)).collect())
                .collect();
            let bounds = constraint_costs
                .iter()
                .zip(0..n)
                .map(|(cs, i)| {
                    cs.iter()
                        .zip(g.xi(i))
                        .map(|(&v, &b)| BoundCheck::new(v, b))
                        .collect()
                })
                .collect();
            Ok(CostReport {
                main_costs,
                constraint_costs,
                bounds,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::builtin_example;

    fn sc() -> SingleControllerGame {
        builtin_example("sc-average")
            .unwrap()
            .as_single_controller()
            .unwrap()
            .clone()
    }

    // Full-precision section values used as anchors; the solver and the
    // verifier reproduce these independently.
    fn sc_avg_equilibrium() -> (StationaryStrategy, StationaryStrategy) {
        let f = StationaryStrategy::new(vec![
            vec![25.0 / 36.0, 11.0 / 36.0],
            vec![25.0 / 72.0, 47.0 / 72.0],
        ])
        .unwrap();
        let g =
            StationaryStrategy::new(vec![vec![20.0 / 47.0, 27.0 / 47.0], vec![1.0, 0.0]]).unwrap();
        (f, g)
    }

    #[test]
    fn transition_matrix_deterministic() {
        let g = sc();
        let det = StationaryStrategy::deterministic(&[2, 2], &[0, 0]);
        let p = transition_matrix(g.trans(), &det).unwrap();
        assert_eq!(p[0], vec![0.5, 0.5]);
        assert_eq!(p[1], vec![1.0, 0.0]);
    }

    #[test]
    fn transition_matrix_uniform_row() {
        let g = sc();
        let uni = StationaryStrategy::uniform(&[2, 2]);
        let p = transition_matrix(g.trans(), &uni).unwrap();
        assert!((p[0][0] - 5.0 / 12.0).abs() < 1e-12);
        assert!((p[0][1] - 7.0 / 12.0).abs() < 1e-12);
    }

    #[test]
    fn single_state_chain() {
        let trans = vec![vec![vec![1.0]]];
        let s = StationaryStrategy::new(vec![vec![1.0]]).unwrap();
        let p = transition_matrix(&trans, &s).unwrap();
        assert_eq!(p, vec![vec![1.0]]);
        assert_eq!(steady_state(&p).unwrap(), vec![1.0]);
        let x = avg_occupation(&trans, &s).unwrap();
        assert_eq!(x.entries, vec![1.0]);
    }

    #[test]
    fn steady_state_swap_chain() {
        let p = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        let pi = steady_state(&p).unwrap();
        assert!((pi[0] - 0.5).abs() < 1e-12);
        assert!((pi[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn steady_state_rejects_two_classes() {
        let p = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        assert!(matches!(steady_state(&p), Err(ChainError::NotUnichain(2))));
    }

    #[test]
    fn equilibrium_state_marginals() {
        let g = sc();
        let (_, gs) = sc_avg_equilibrium();
        let p = transition_matrix(g.trans(), &gs).unwrap();
        let pi = steady_state(&p).unwrap();
        assert!((pi[0] - 0.6267).abs() < 1e-3);
        assert!((pi[1] - 0.3733).abs() < 1e-3);
    }

    #[test]
    fn avg_occupation_at_equilibrium() {
        let g = sc();
        let (_, gs) = sc_avg_equilibrium();
        let x = avg_occupation(g.trans(), &gs).unwrap();
        let expect = [0.2667, 0.36, 0.3733, 0.0];
        for (i, &e) in expect.iter().enumerate() {
            assert!((x.entries[i] - e).abs() < 1e-3, "entry {i}");
        }
        assert!(x.membership_residual(g.trans()) <= 1e-9);
    }

    #[test]
    fn indep_chain2_occupation() {
        let game = builtin_example("indep-2p").unwrap();
        let g = game.as_independent().unwrap();
        let f2 = StationaryStrategy::new(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let x = avg_occupation(g.chain(1).trans(), &f2).unwrap();
        let expect = [0.0, 0.2941, 0.7059, 0.0];
        for (i, &e) in expect.iter().enumerate() {
            assert!((x.entries[i] - e).abs() < 1e-3, "entry {i}");
        }
    }

    #[test]
    fn disc_occupation_beta_zero_is_gamma() {
        let g = sc();
        let s = StationaryStrategy::uniform(&[2, 2]);
        let x = disc_occupation(g.trans(), &s, g.gamma(), 0.0).unwrap();
        for (flat, st, a) in g.k2().pairs() {
            assert!((x.entries[flat] - g.gamma()[st] * s.prob(st, a)).abs() < 1e-12);
        }
    }

    #[test]
    fn disc_occupation_matches_printed_point() {
        let g = sc();
        let gs = StationaryStrategy::new(vec![vec![4.0 / 7.0, 3.0 / 7.0], vec![1.0, 0.0]]).unwrap();
        let x = disc_occupation(g.trans(), &gs, &[0.5, 0.5], 0.5).unwrap();
        let expect = [1.0 / 3.0, 0.25, 5.0 / 12.0, 0.0];
        for (i, &e) in expect.iter().enumerate() {
            assert!((x.entries[i] - e).abs() < 1e-9, "entry {i}");
        }
        assert!(x.membership_residual(g.trans()) <= 1e-9);
        let total: f64 = x.entries.iter().sum();
        assert!((total - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn disc_occupation_matches_series_oracle() {
        // random-ish 3-state chain with beta=0.9 against direct series summation
        let trans = vec![
            vec![vec![0.2, 0.5, 0.3], vec![0.6, 0.1, 0.3]],
            vec![vec![0.0, 0.7, 0.3]],
            vec![vec![0.5, 0.25, 0.25], vec![1.0, 0.0, 0.0]],
        ];
        let s = StationaryStrategy::new(vec![vec![0.4, 0.6], vec![1.0], vec![0.5, 0.5]]).unwrap();
        let gamma = [0.2, 0.3, 0.5];
        let beta = 0.9;
        let x = disc_occupation(&trans, &s, &gamma, beta).unwrap();

        let p = transition_matrix(&trans, &s).unwrap();
        let mut dist: Vec<f64> = gamma.into();
        let mut weights = [0.0; 3];
        let mut scale = 1.0 - beta;
        for _ in 0..=200 {
            for i in 0..3 {
                weights[i] += scale * dist[i];
            }
            let mut next = vec![0.0; 3];
            for i in 0..3 {
                for j in 0..3 {
                    next[j] += dist[i] * p[i][j];
                }
            }
            dist = next;
            scale *= beta;
        }
        for (flat, st, a) in x.idx.pairs() {
            let oracle = weights[st] * s.prob(st, a);
            assert!((x.entries[flat] - oracle).abs() < 1e-6, "entry {flat}");
        }
    }

    #[test]
    fn recover_strategy_roundtrip_and_uniform_rule() {
        let g = sc();
        let (_, gs) = sc_avg_equilibrium();
        let x = avg_occupation(g.trans(), &gs).unwrap();
        let back = recover_strategy(&x);
        assert!(back.max_abs_diff(&gs) < 1e-12);

        // concentrated measure: deterministic where supported, uniform elsewhere
        let idx = SaIndex::new(&[2, 2]);
        let x = OccupationMeasure {
            entries: vec![0.0, 1.0, 0.0, 0.0],
            kind: OccupationKind::Average,
            idx,
        };
        let s = recover_strategy(&x);
        assert_eq!(s.row(0), &[0.0, 1.0]);
        assert_eq!(s.row(1), &[0.5, 0.5]);
    }

    #[test]
    fn marginal_costs_uniform_mixture() {
        // C2 entries (4,3;2,6) at a single state: uniform f averages columns
        let game = Game::SingleController(
            SingleControllerGame::new(
                vec!["1".into()],
                vec![vec!["1".into(), "2".into()]],
                vec![vec!["1".into(), "2".into()]],
                vec![vec![vec![0.0, 0.0], vec![0.0, 0.0]]],
                vec![vec![vec![4.0, 3.0], vec![2.0, 6.0]]],
                vec![],
                vec![],
                vec![vec![vec![1.0], vec![1.0]]],
                vec![],
                vec![],
                vec![1.0],
                Criterion::Average,
            )
            .unwrap(),
        );
        let f = StationaryStrategy::uniform(&[2]);
        let g = StationaryStrategy::uniform(&[2]);
        let mc = marginal_costs(&game, &[f, g], 1).unwrap();
        assert!((mc.main[0] - 3.0).abs() < 1e-12);
        assert!((mc.main[1] - 4.5).abs() < 1e-12);
    }

    #[test]
    fn expected_costs_at_equilibria() {
        let game = builtin_example("sc-average").unwrap();
        let (f, gs) = sc_avg_equilibrium();
        let report = expected_costs(&game, &[f, gs]).unwrap();
        assert!((report.main_costs[0] - 4.4268).abs() < 1e-3);
        assert!((report.main_costs[1] - 3.0279).abs() < 1e-3);
        assert!(report.all_bounds_satisfied());

        let game = builtin_example("sc-discounted").unwrap();
        let f = StationaryStrategy::new(vec![vec![1.0, 0.0], vec![0.5, 0.5]]).unwrap();
        let gs = StationaryStrategy::new(vec![vec![4.0 / 7.0, 3.0 / 7.0], vec![1.0, 0.0]]).unwrap();
        let report = expected_costs(&game, &[f, gs]).unwrap();
        assert!((report.main_costs[0] - 4.2082).abs() < 1e-3);
        assert!((report.main_costs[1] - 2.9166).abs() < 1e-3);

        let game = builtin_example("indep-2p").unwrap();
        let f1 = StationaryStrategy::new(vec![vec![0.25, 0.75], vec![0.0, 1.0]]).unwrap();
        let f2 = StationaryStrategy::new(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let report = expected_costs(&game, &[f1, f2]).unwrap();
        assert!((report.main_costs[0] - 1.2941).abs() < 1e-3);
        assert!((report.main_costs[1] - 1.7059).abs() < 1e-3);
        assert!(report.all_bounds_satisfied());
    }

    #[test]
    fn indep_best_response_marginals() {
        let game = builtin_example("indep-2p").unwrap();
        let f2 = StationaryStrategy::new(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let f1 = StationaryStrategy::uniform(&[2, 2]);
        let mc = marginal_costs(&game, &[f1, f2], 0).unwrap();
        // against f2*, the (2,a1=2) marginal equals the equilibrium cost
        assert!((mc.main[3] - 1.2941).abs() < 1e-3);
    }
}
