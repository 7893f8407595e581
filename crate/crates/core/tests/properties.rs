//! Property tests for the crate-wide invariants.

use csg_core::chain::{
    avg_occupation, expected_costs, recover_strategy, recurrent_states, transition_matrix,
};
use csg_core::game::{
    builtin_example, parse_strategies, serialize_strategies, Game, StationaryStrategy,
};
use csg_core::lp::{duality_gap, solve_lp, LinearProgram, LpStatus, Relation};
use proptest::prelude::*;

fn prob_row(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(1e-6..1.0f64, len).prop_map(|raw| {
        let sum: f64 = raw.iter().sum();
        raw.into_iter().map(|v| v / sum).collect()
    })
}

fn strategy_for(counts: &'static [usize]) -> impl Strategy<Value = StationaryStrategy> {
    counts
        .iter()
        .map(|&c| prob_row(c).boxed())
        .collect::<Vec<_>>()
        .prop_map(|rows| StationaryStrategy::new(rows).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// strategy -> occupation -> strategy is the identity on recurrent
    /// states, and the occupation measure satisfies its constraint set.
    #[test]
    fn occupation_roundtrip(g in strategy_for(&[2, 2])) {
        let game = builtin_example("sc-average").unwrap();
        let sc = game.as_single_controller().unwrap();
        let x = avg_occupation(sc.trans(), &g).unwrap();
        prop_assert!(x.membership_residual(sc.trans()) <= 1e-9);
        let back = recover_strategy(&x);
        let p = transition_matrix(sc.trans(), &g).unwrap();
        for (s, rec) in recurrent_states(&p).iter().enumerate() {
            if *rec {
                for a in 0..2 {
                    prop_assert!((back.prob(s, a) - g.prob(s, a)).abs() <= 1e-9);
                }
            }
        }
    }

    /// expected costs are linear in player 1's strategy and linear in the
    /// controller's occupation measure (mixing occupations mixes costs).
    #[test]
    fn cost_functionals_are_bilinear(
        f1 in strategy_for(&[2, 2]),
        f2 in strategy_for(&[2, 2]),
        g1 in strategy_for(&[2, 2]),
        g2 in strategy_for(&[2, 2]),
        lambda in 0.0..1.0f64,
    ) {
        let game = builtin_example("sc-average").unwrap();
        let sc = game.as_single_controller().unwrap();

        // linear in f at fixed g
        let mix_f = StationaryStrategy::new(
            (0..2)
                .map(|s| {
                    (0..2)
                        .map(|a| lambda * f1.prob(s, a) + (1.0 - lambda) * f2.prob(s, a))
                        .collect()
                })
                .collect(),
        )
        .unwrap();
        let c_mix = expected_costs(&game, &[mix_f, g1.clone()]).unwrap();
        let ca = expected_costs(&game, &[f1.clone(), g1.clone()]).unwrap();
        let cb = expected_costs(&game, &[f2.clone(), g1.clone()]).unwrap();
        for i in 0..2 {
            let blend = lambda * ca.main_costs[i] + (1.0 - lambda) * cb.main_costs[i];
            prop_assert!((c_mix.main_costs[i] - blend).abs() <= 1e-9);
        }

        // linear in the occupation measure of the controller
        let xa = avg_occupation(sc.trans(), &g1).unwrap();
        let xb = avg_occupation(sc.trans(), &g2).unwrap();
        let mut mixed = xa.clone();
        for (m, (a, b)) in mixed.entries.iter_mut().zip(xa.entries.iter().zip(&xb.entries)) {
            *m = lambda * a + (1.0 - lambda) * b;
        }
        let g_mix = recover_strategy(&mixed);
        let c_mix = expected_costs(&game, &[f1.clone(), g_mix]).unwrap();
        let ca = expected_costs(&game, &[f1.clone(), g1.clone()]).unwrap();
        let cb = expected_costs(&game, &[f1.clone(), g2.clone()]).unwrap();
        for i in 0..2 {
            let blend = lambda * ca.main_costs[i] + (1.0 - lambda) * cb.main_costs[i];
            prop_assert!(
                (c_mix.main_costs[i] - blend).abs() <= 1e-9,
                "player {}: {} vs {}", i, c_mix.main_costs[i], blend
            );
        }
    }

    /// three-way LP status contract with duality invariants at optima; the
    /// generated programs are bounded by a box so Optimal is common.
    #[test]
    fn lp_duality_invariants(
        c in prop::collection::vec(-5.0..5.0f64, 3),
        rows in prop::collection::vec(
            (prop::collection::vec(-5.0..5.0f64, 3), -4.0..4.0f64),
            1..5,
        ),
    ) {
        let mut lp = LinearProgram::minimize(c);
        for (i, (coeffs, rhs)) in rows.into_iter().enumerate() {
            lp.add_row(format!("r{i}"), coeffs, Relation::Ge, rhs);
        }
        lp.add_row("box", vec![1.0, 1.0, 1.0], Relation::Le, 30.0);
        let sol = solve_lp(&lp).unwrap();
        match sol.status {
            LpStatus::Optimal => {
                prop_assert!(duality_gap(&lp, &sol) <= 1e-7);
                let mut cs = 0.0;
                for (i, row) in lp.constraints.iter().enumerate() {
                    let act: f64 = row.coeffs.iter().zip(&sol.primal).map(|(a, x)| a * x).sum();
                    let viol = match row.rel {
                        Relation::Le => act - row.rhs,
                        Relation::Ge => row.rhs - act,
                        Relation::Eq => (act - row.rhs).abs(),
                    };
                    prop_assert!(viol <= 1e-8, "row {i} violated by {viol}");
                    cs += (sol.dual[i] * (act - row.rhs)).abs();
                }
                prop_assert!(cs <= 1e-6, "complementary slackness {cs}");
            }
            LpStatus::Infeasible => {}
            LpStatus::Unbounded => prop_assert!(false, "boxed program cannot be unbounded"),
        }
    }

    /// strategies documents round-trip exactly.
    #[test]
    fn strategies_document_roundtrip(
        f in strategy_for(&[2, 2]),
        g in strategy_for(&[2, 2]),
    ) {
        let profile = vec![f, g];
        let text = serialize_strategies(&profile);
        let back = parse_strategies(&text).unwrap();
        prop_assert_eq!(profile.len(), back.len());
        for (a, b) in profile.iter().zip(&back) {
            prop_assert!(a.max_abs_diff(b) == 0.0);
        }
    }

    /// every feasible profile prices at least the best-response value for
    /// each player (no profile beats its own best response).
    #[test]
    fn best_response_lower_bounds_costs(
        f in strategy_for(&[2, 2]),
        g in strategy_for(&[2, 2]),
    ) {
        let game = builtin_example("sc-average").unwrap();
        let profile = vec![f, g];
        let report = expected_costs(&game, &profile).unwrap();
        if report.all_bounds_satisfied() {
            for player in 0..2 {
                let br = csg_core::br::best_response(&game, player, &profile).unwrap();
                prop_assert!(
                    report.main_costs[player] - br.value >= -1e-7,
                    "player {} cost {} below best response {}",
                    player, report.main_costs[player], br.value
                );
            }
        }
    }
}

/// Occupation mixtures stay in the constraint polytope (convexity), checked
/// against the membership test.
#[test]
fn occupation_polytope_is_convex() {
    let game = builtin_example("sc-average").unwrap();
    let Game::SingleController(sc) = &game else {
        unreachable!()
    };
    let g1 = StationaryStrategy::uniform(&[2, 2]);
    let g2 = StationaryStrategy::deterministic(&[2, 2], &[1, 0]);
    let xa = avg_occupation(sc.trans(), &g1).unwrap();
    let xb = avg_occupation(sc.trans(), &g2).unwrap();
    for lambda in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let mut mixed = xa.clone();
        for (m, (a, b)) in mixed
            .entries
            .iter_mut()
            .zip(xa.entries.iter().zip(&xb.entries))
        {
            *m = lambda * a + (1.0 - lambda) * b;
        }
        assert!(mixed.membership_residual(sc.trans()) <= 1e-9);
    }
}
