//! Probe-based validation: unichain structure under deterministic strategies
//! and a strong-Slater search for the constrained controller players.
//!
//! The unichain probe is exact when the deterministic strategies can be
//! enumerated: a randomized strategy's support graph is the union of the
//! deterministic ones it mixes, so two disjoint closed classes under some
//! randomized strategy would already show up under a deterministic one.

use super::{Game, IndependentGame, SingleControllerGame, StationaryStrategy};
use crate::chain::{self, recurrent_structure};
use crate::randutil::{deterministic_choices, sample_strategy};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Seed for sampled probes, recorded in the report for reproducibility.
pub const PROBE_SEED: u64 = 0xC0FFEE;

const DET_LIMIT: usize = 1024;
const SAMPLED_PROBES: usize = 1024;
const SLATER_RANDOM_CANDIDATES: usize = 32;

#[derive(Debug, Clone)]
pub struct UnichainProbe {
    pub label: String,
    pub pass: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlaterStatus {
    Pass,
    Fail,
    Unknown,
}

#[derive(Debug, Clone)]
pub struct SlaterProbe {
    pub player: usize,
    pub status: SlaterStatus,
    pub detail: String,
}

#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub errors: Vec<String>,
    pub warnings: Vec<String>,
    pub unichain_probe: Vec<UnichainProbe>,
    pub slater_probe: Vec<SlaterProbe>,
    /// Set when any probe had to sample instead of enumerating.
    pub probe_seed: Option<u64>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }
}

/// Validates a game. A report with nonempty `errors` is rejected by all
/// solver entry points; Slater findings only annotate.
pub fn validate(game: &Game) -> ValidationReport {
    let mut report = ValidationReport::default();
    match game {
        Game::SingleController(g) => {
            if matches!(g.criterion(), super::Criterion::Average) {
                probe_chain_unichain(
                    g.trans(),
                    g.k2().counts(),
                    "controlled chain",
                    &g.states,
                    &mut report,
                );
            }
            probe_p1_feasibility(g, &mut report);
            probe_sc_slater(g, &mut report);
        }
        Game::Independent(g) => {
            for (i, chain) in g.chains().iter().enumerate() {
                probe_chain_unichain(
                    chain.trans(),
                    chain.k().counts(),
                    &format!("chain {}", i + 1),
                    &chain.states,
                    &mut report,
                );
            }
            probe_indep_slater(g, &mut report);
        }
    }
    report
}

fn probe_chain_unichain(
    trans: &[Vec<Vec<f64>>],
    counts: &[usize],
    chain_label: &str,
    state_names: &[String],
    report: &mut ValidationReport,
) {
    let (choices, exhaustive) = deterministic_choices(counts, DET_LIMIT);
    let choices = if exhaustive {
        choices
    } else {
        report.probe_seed = Some(PROBE_SEED);
        let mut rng = ChaCha12Rng::seed_from_u64(PROBE_SEED);
        (0..SAMPLED_PROBES)
            .map(|_| {
                counts
                    .iter()
                    .map(|&c| (crate::randutil::next_f64(&mut rng) * c as f64) as usize % c)
                    .collect()
            })
            .collect()
    };
    let ns = trans.len();
    let mut ever_transient = vec![false; ns];
    for choice in &choices {
        let p: Vec<Vec<f64>> = (0..ns).map(|s| trans[s][choice[s]].clone()).collect();
        let (recurrent, classes) = recurrent_structure(&p);
        let pass = classes == 1;
        let label = format!(
            "{chain_label}, deterministic strategy {:?}",
            choice.iter().map(|a| a + 1).collect::<Vec<_>>()
        );
        if !pass {
            report.errors.push(format!(
                "{label}: {classes} closed recurrent classes (unichain assumption fails)"
            ));
        }
        for s in 0..ns {
            if !recurrent[s] {
                ever_transient[s] = true;
            }
        }
        report.unichain_probe.push(UnichainProbe { label, pass });
    }
    for s in 0..ns {
        if ever_transient[s] {
            report.warnings.push(format!(
                "{chain_label}: state {} transient under some strategies",
                state_names[s]
            ));
        }
    }
}

/// Player 1's own feasible set (subscription polytope) must be nonempty.
fn probe_p1_feasibility(g: &SingleControllerGame, report: &mut ValidationReport) {
    if g.n1() == 0 {
        return;
    }
    use crate::lp::{solve_lp, LinearProgram, LpStatus, Relation};
    let k1 = g.k1();
    let mut lp = LinearProgram::minimize(vec![0.0; k1.len()]);
    for k in 0..g.n1() {
        let coeffs = k1.pairs().map(|(_, s, a1)| g.d1_sub[k][s][a1]).collect();
        lp.add_row(format!("sub{k}"), coeffs, Relation::Le, g.xi1[k]);
    }
    for s in 0..g.num_states() {
        let coeffs = k1
            .pairs()
            .map(|(_, ps, _)| if ps == s { 1.0 } else { 0.0 })
            .collect();
        lp.add_row(format!("simplex{s}"), coeffs, Relation::Eq, 1.0);
    }
    match solve_lp(&lp) {
        Ok(sol) if sol.status == LpStatus::Optimal => {}
        Ok(_) => report
            .errors
            .push("player 1 has no subscription-feasible strategy".into()),
        Err(e) => report
            .warnings
            .push(format!("feasibility probe failed: {e}")),
    }
}

/// Searches for a player-2 strategy satisfying every realization constraint
/// strictly against *all* opponent strategies. For a fixed candidate the
/// worst case over player 1 is exact (the constraint is linear in f), so a
/// hit is a genuine certificate; only the search over candidates is sampled.
fn probe_sc_slater(g: &SingleControllerGame, report: &mut ValidationReport) {
    if g.n2() == 0 {
        return;
    }
    let k2 = g.k2();
    let (mut candidates, exhaustive) = deterministic_choices(k2.counts(), DET_LIMIT);
    if !exhaustive {
        report.probe_seed = Some(PROBE_SEED);
    }
    let mut rng = ChaCha12Rng::seed_from_u64(PROBE_SEED);
    let mut strategies: Vec<StationaryStrategy> = candidates
        .drain(..)
        .map(|c| StationaryStrategy::deterministic(k2.counts(), &c))
        .collect();
    for _ in 0..SLATER_RANDOM_CANDIDATES {
        strategies.push(sample_strategy(&mut rng, k2.counts()));
    }

    let mut best_worst = f64::INFINITY;
    let mut every_candidate_hopeless = true;
    for cand in &strategies {
        let Ok(x) = chain::sc_occupation(g, cand) else {
            continue;
        };
        // w_l(s,a1) = sum_a2 d2[l][s][a1][a2] x(s,a2); D(f) = sum f(s,a1) w_l(s,a1)
        let mut worst_violation = f64::NEG_INFINITY;
        let mut best_case_violation = f64::NEG_INFINITY;
        for l in 0..g.n2() {
            let mut max_f = 0.0;
            let mut min_f = 0.0;
            for s in 0..g.num_states() {
                let w: Vec<f64> = (0..g.k1().count(s))
                    .map(|a1| {
                        (0..k2.count(s))
                            .map(|a2| g.d2[l][s][a1][a2] * x.get(s, a2))
                            .sum()
                    })
                    .collect();
                max_f += w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                min_f += w.iter().cloned().fold(f64::INFINITY, f64::min);
            }
            worst_violation = worst_violation.max(max_f - g.xi2[l]);
            best_case_violation = best_case_violation.max(min_f - g.xi2[l]);
        }
        best_worst = best_worst.min(worst_violation);
        if best_case_violation < 1e-9 {
            every_candidate_hopeless = false;
        }
        if worst_violation < 0.0 {
            report.slater_probe.push(SlaterProbe {
                player: 1,
                status: SlaterStatus::Pass,
                detail: format!(
                    "certified: worst-case slack {:.6} against every opponent strategy",
                    -worst_violation
                ),
            });
            return;
        }
    }
    let status = if every_candidate_hopeless {
        SlaterStatus::Fail
    } else {
        SlaterStatus::Unknown
    };
    report.slater_probe.push(SlaterProbe {
        player: 1,
        status,
        detail: format!(
            "no probed strategy satisfies all realization constraints strictly \
             (best worst-case violation {best_worst:.6})"
        ),
    });
    if status == SlaterStatus::Fail {
        report.warnings.push(
            "strong Slater probe failed for player 2: every probed strategy violates \
             a realization constraint even against the most favorable opponent"
                .into(),
        );
    }
}

fn probe_indep_slater(g: &IndependentGame, report: &mut ValidationReport) {
    let n = g.num_players();
    let mut rng = ChaCha12Rng::seed_from_u64(PROBE_SEED);

    // Opponent occupation battery per player: deterministic strategies when
    // enumerable (then the multilinear worst case over products of vertices
    // is exact), random otherwise.
    let mut vertex_occs: Vec<Vec<Vec<f64>>> = Vec::with_capacity(n);
    let mut exact = true;
    for j in 0..n {
        let counts = g.chain(j).k().counts();
        let (choices, exhaustive) = deterministic_choices(counts, 64);
        let mut occs = Vec::new();
        if exhaustive {
            for c in &choices {
                let s = StationaryStrategy::deterministic(counts, c);
                if let Ok(x) = chain::avg_occupation(g.chain(j).trans(), &s) {
                    occs.push(x.entries);
                }
            }
        } else {
            exact = false;
            report.probe_seed = Some(PROBE_SEED);
            for _ in 0..16 {
                let s = sample_strategy(&mut rng, counts);
                if let Ok(x) = chain::avg_occupation(g.chain(j).trans(), &s) {
                    occs.push(x.entries);
                }
            }
        }
        vertex_occs.push(occs);
    }

    for i in 0..n {
        if g.n(i) == 0 {
            continue;
        }
        let counts = g.chain(i).k().counts();
        let (choices, _) = deterministic_choices(counts, DET_LIMIT);
        let mut candidates: Vec<StationaryStrategy> = choices
            .iter()
            .map(|c| StationaryStrategy::deterministic(counts, c))
            .collect();
        for _ in 0..SLATER_RANDOM_CANDIDATES {
            candidates.push(sample_strategy(&mut rng, counts));
        }

        let mut opponent_profiles: Vec<Vec<&[f64]>> = Vec::new();
        let dims: Vec<usize> = (0..n)
            .map(|j| if j == i { 1 } else { vertex_occs[j].len() })
            .collect();
        let (profiles, enumerable) = deterministic_choices(&dims, 4096);
        if enumerable {
            for p in &profiles {
                opponent_profiles.push(
                    (0..n)
                        .map(|j| {
                            if j == i {
                                [].as_slice()
                            } else {
                                vertex_occs[j][p[j]].as_slice()
                            }
                        })
                        .collect(),
                );
            }
        }

        let mut found = false;
        let mut every_candidate_hopeless = true;
        for cand in &candidates {
            let Ok(xi_occ) = chain::avg_occupation(g.chain(i).trans(), cand) else {
                continue;
            };
            let mut worst = f64::NEG_INFINITY;
            let mut best_case = f64::INFINITY;
            for prof in &opponent_profiles {
                let mut weights = prof.clone();
                weights[i] = xi_occ.entries.as_slice();
                let viol = (0..g.n(i))
                    .map(|k| g.d(i)[k].contract_all(&weights) - g.xi(i)[k])
                    .fold(f64::NEG_INFINITY, f64::max);
                worst = worst.max(viol);
                best_case = best_case.min(viol);
            }
            if best_case < 1e-9 {
                every_candidate_hopeless = false;
            }
            if worst < 0.0 {
                report.slater_probe.push(SlaterProbe {
                    player: i,
                    status: if exact && enumerable {
                        SlaterStatus::Pass
                    } else {
                        SlaterStatus::Unknown
                    },
                    detail: format!(
                        "worst-case slack {:.6} over {} opponent profiles{}",
                        -worst,
                        opponent_profiles.len(),
                        if exact && enumerable {
                            " (vertex-exhaustive)"
                        } else {
                            " (sampled)"
                        }
                    ),
                });
                found = true;
                break;
            }
        }
        if !found {
            report.slater_probe.push(SlaterProbe {
                player: i,
                status: if every_candidate_hopeless {
                    SlaterStatus::Fail
                } else {
                    SlaterStatus::Unknown
                },
                detail: "no probed strategy satisfies the constraints strictly against \
                         the opponent battery"
                    .into(),
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{builtin_example, Criterion, SingleControllerGame};

    #[test]
    fn builtins_validate_clean() {
        for name in ["sc-average", "sc-discounted", "indep-2p"] {
            let game = builtin_example(name).unwrap();
            let report = validate(&game);
            assert!(report.errors.is_empty(), "{name}: {:?}", report.errors);
        }
    }

    #[test]
    fn sc_average_probe_passes_everywhere() {
        let game = builtin_example("sc-average").unwrap();
        let report = validate(&game);
        assert!(!report.unichain_probe.is_empty());
        assert!(report.unichain_probe.iter().all(|p| p.pass));
        assert_eq!(report.slater_probe[0].status, SlaterStatus::Pass);
    }

    #[test]
    fn indep_chain1_transient_warning() {
        let game = builtin_example("indep-2p").unwrap();
        let report = validate(&game);
        assert!(report.errors.is_empty());
        assert!(
            report
                .warnings
                .iter()
                .any(|w| w.starts_with("chain 1") && w.contains("state 1 transient")),
            "warnings: {:?}",
            report.warnings
        );
    }

    #[test]
    fn two_absorbing_states_fail() {
        // p(1|1,a)=1, p(2|2,a)=1: two closed classes under every strategy
        let g = SingleControllerGame::new(
            vec!["1".into(), "2".into()],
            vec![vec!["1".into()], vec!["1".into()]],
            vec![vec!["1".into()], vec!["1".into()]],
            vec![vec![vec![0.0]], vec![vec![0.0]]],
            vec![vec![vec![0.0]], vec![vec![0.0]]],
            vec![],
            vec![],
            vec![vec![vec![1.0, 0.0]], vec![vec![0.0, 1.0]]],
            vec![],
            vec![],
            vec![0.5, 0.5],
            Criterion::Average,
        )
        .unwrap();
        let report = validate(&Game::SingleController(g));
        assert!(!report.errors.is_empty());
        assert!(report.unichain_probe.iter().any(|p| !p.pass));
    }

    #[test]
    fn infeasible_realization_bound_fails_slater() {
        // one state, d2 = 1 everywhere, bound 0.5 < 1: impossible
        let g = SingleControllerGame::new(
            vec!["1".into()],
            vec![vec!["1".into()]],
            vec![vec!["1".into()]],
            vec![vec![vec![0.0]]],
            vec![vec![vec![0.0]]],
            vec![],
            vec![vec![vec![vec![1.0]]]],
            vec![vec![vec![1.0]]],
            vec![],
            vec![0.5],
            vec![1.0],
            Criterion::Average,
        )
        .unwrap();
        let report = validate(&Game::SingleController(g));
        assert_eq!(report.slater_probe[0].status, SlaterStatus::Fail);
    }
}
