//! Trajectory simulation for empirical validation of occupation measures and
//! cost functionals.
//!
//! All randomness comes from ChaCha12 streams keyed by the caller's 64-bit
//! seed; independent-chain games use one stream per chain, so the same seed
//! reproduces the same trajectories everywhere.
//!
//! Average-cost runs report batch-means standard errors with a finite-batch
//! upper-confidence adjustment `(1 + 1/sqrt(2B))`, which keeps a z = 3
//! comparison conservative. Discounted runs split the horizon into
//! replications, each long enough that the reported truncation bound
//! `beta^L max|c|` is negligible, and use the replication spread.

use crate::chain;
use crate::game::{Criterion, Game, StationaryStrategy};
use crate::randutil::sample_index;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StdErrors {
    pub costs: Vec<f64>,
    pub occupation: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimReport {
    pub schema_version: u32,
    /// normalized state-action weights of each controlled chain (one entry
    /// for a single-controller game, one per player otherwise)
    pub empirical_occupation: Vec<Vec<f64>>,
    /// per-player main-cost estimate
    pub empirical_costs: Vec<f64>,
    pub horizon: usize,
    pub seed: u64,
    pub standard_errors: StdErrors,
    /// tail bound of the truncated discounted sum, when applicable
    pub truncation_bound: Option<f64>,
}

impl SimReport {
    pub fn to_document(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }

    pub fn from_document(text: &str) -> Result<Self, SimError> {
        serde_json::from_str(text).map_err(|e| SimError::ShapeMismatch(e.to_string()))
    }
}

const BATCHES: usize = 20;
const REPLICATIONS: usize = 50;

/// Lower 5% quantile of the chi-square distribution with `k` degrees of
/// freedom (Wilson-Hilferty approximation).
fn chi_square_lower(k: f64) -> f64 {
    let z = -1.6448536269514722; // 5% normal quantile
    let t = 1.0 - 2.0 / (9.0 * k) + z * (2.0 / (9.0 * k)).sqrt();
    k * t * t * t
}

fn se_from_samples(samples: &[f64]) -> f64 {
    let n = samples.len();
    if n < 2 {
        return 0.0;
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let var = samples.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (n - 1) as f64;
    // report the upper confidence limit of the standard error so a z-test
    // against it stays conservative at small sample counts
    let inflate = ((n as f64 - 1.0) / chi_square_lower(n as f64 - 1.0)).sqrt();
    (var / n as f64).sqrt() * inflate
}

/// Simulates the game under the given stationary profile.
pub fn simulate(
    game: &Game,
    strategies: &[StationaryStrategy],
    horizon: usize,
    seed: u64,
) -> SimReport {
    simulate_with_burn_in(game, strategies, horizon, seed, 0)
}

pub fn simulate_with_burn_in(
    game: &Game,
    strategies: &[StationaryStrategy],
    horizon: usize,
    seed: u64,
    burn_in: usize,
) -> SimReport {
    assert!(horizon >= 1, "horizon must be positive");
    match game {
        Game::SingleController(g) => match g.criterion() {
            Criterion::Average => sc_average(g, strategies, horizon, seed, burn_in),
            Criterion::Discounted { beta } => sc_discounted(g, strategies, horizon, seed, beta),
        },
        Game::Independent(g) => indep_average(g, strategies, horizon, seed, burn_in),
    }
}

fn sc_average(
    g: &crate::game::SingleControllerGame,
    strategies: &[StationaryStrategy],
    horizon: usize,
    seed: u64,
    burn_in: usize,
) -> SimReport {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let f = &strategies[0];
    let gs = &strategies[1];
    let k2 = g.k2();
    let batches = BATCHES.min(horizon).max(1);
    let batch_len = horizon / batches;

    let mut s = sample_index(&mut rng, g.gamma());
    for _ in 0..burn_in {
        let a2 = sample_index(&mut rng, gs.row(s));
        s = sample_index(&mut rng, &g.trans()[s][a2]);
    }

    let mut occ_counts = vec![0.0f64; k2.len()];
    let mut cost_sums = [0.0f64; 2];
    let mut batch_costs: Vec<[f64; 2]> = Vec::with_capacity(batches);
    let mut batch_occ: Vec<Vec<f64>> = Vec::with_capacity(batches);
    let mut cur_costs = [0.0f64; 2];
    let mut cur_occ = vec![0.0f64; k2.len()];
    let mut cur_n = 0usize;

    for _ in 0..horizon {
        let a1 = sample_index(&mut rng, f.row(s));
        let a2 = sample_index(&mut rng, gs.row(s));
        let flat = k2.flat(s, a2);
        occ_counts[flat] += 1.0;
        cur_occ[flat] += 1.0;
        let c = [g.cost(0)[s][a1][a2], g.cost(1)[s][a1][a2]];
        for i in 0..2 {
            cost_sums[i] += c[i];
            cur_costs[i] += c[i];
        }
        cur_n += 1;
        if cur_n == batch_len && batch_costs.len() < batches {
            batch_costs.push([cur_costs[0] / cur_n as f64, cur_costs[1] / cur_n as f64]);
            batch_occ.push(cur_occ.iter().map(|v| v / cur_n as f64).collect());
            cur_costs = [0.0; 2];
            cur_occ = vec![0.0; k2.len()];
            cur_n = 0;
        }
        s = sample_index(&mut rng, &g.trans()[s][a2]);
    }

    let total = occ_counts.iter().sum::<f64>();
    let empirical_occupation = vec![occ_counts.iter().map(|v| v / total).collect::<Vec<f64>>()];
    let empirical_costs = vec![cost_sums[0] / horizon as f64, cost_sums[1] / horizon as f64];
    let cost_se = (0..2)
        .map(|i| se_from_samples(&batch_costs.iter().map(|b| b[i]).collect::<Vec<_>>()))
        .collect();
    let occ_se = vec![(0..k2.len())
        .map(|j| se_from_samples(&batch_occ.iter().map(|b| b[j]).collect::<Vec<_>>()))
        .collect()];
    SimReport {
        schema_version: 1,
        empirical_occupation,
        empirical_costs,
        horizon,
        seed,
        standard_errors: StdErrors {
            costs: cost_se,
            occupation: occ_se,
        },
        truncation_bound: None,
    }
}

fn sc_discounted(
    g: &crate::game::SingleControllerGame,
    strategies: &[StationaryStrategy],
    horizon: usize,
    seed: u64,
    beta: f64,
) -> SimReport {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let f = &strategies[0];
    let gs = &strategies[1];
    let k2 = g.k2();
    let reps = REPLICATIONS.min(horizon).max(1);
    let rep_len = (horizon / reps).max(1);

    let max_cost = g
        .cost(0)
        .iter()
        .chain(g.cost(1))
        .flatten()
        .flatten()
        .fold(0.0f64, |m, &v| m.max(v.abs()));

    let mut rep_costs: Vec<[f64; 2]> = Vec::with_capacity(reps);
    let mut rep_occs: Vec<Vec<f64>> = Vec::with_capacity(reps);
    for _ in 0..reps {
        let mut s = sample_index(&mut rng, g.gamma());
        let mut disc = 1.0 - beta;
        let mut acc = [0.0f64; 2];
        let mut occ = vec![0.0f64; k2.len()];
        for _ in 0..rep_len {
            let a1 = sample_index(&mut rng, f.row(s));
            let a2 = sample_index(&mut rng, gs.row(s));
            occ[k2.flat(s, a2)] += disc;
            acc[0] += disc * g.cost(0)[s][a1][a2];
            acc[1] += disc * g.cost(1)[s][a1][a2];
            disc *= beta;
            s = sample_index(&mut rng, &g.trans()[s][a2]);
        }
        let w: f64 = occ.iter().sum();
        for v in &mut occ {
            *v /= w;
        }
        rep_costs.push(acc);
        rep_occs.push(occ);
    }

    let mut empirical = vec![0.0f64; k2.len()];
    for occ in &rep_occs {
        for (e, v) in empirical.iter_mut().zip(occ) {
            *e += v / reps as f64;
        }
    }
    let total: f64 = empirical.iter().sum();
    for v in &mut empirical {
        *v /= total;
    }
    let empirical_costs = vec![
        rep_costs.iter().map(|r| r[0]).sum::<f64>() / reps as f64,
        rep_costs.iter().map(|r| r[1]).sum::<f64>() / reps as f64,
    ];
    let cost_se = (0..2)
        .map(|i| se_from_samples(&rep_costs.iter().map(|r| r[i]).collect::<Vec<_>>()))
        .collect();
    let occ_se = vec![(0..k2.len())
        .map(|j| se_from_samples(&rep_occs.iter().map(|r| r[j]).collect::<Vec<_>>()))
        .collect()];
    SimReport {
        schema_version: 1,
        empirical_occupation: vec![empirical],
        empirical_costs,
        horizon,
        seed,
        standard_errors: StdErrors {
            costs: cost_se,
            occupation: occ_se,
        },
        truncation_bound: Some(beta.powi(rep_len as i32) * max_cost),
    }
}

fn indep_average(
    g: &crate::game::IndependentGame,
    strategies: &[StationaryStrategy],
    horizon: usize,
    seed: u64,
    burn_in: usize,
) -> SimReport {
    let n = g.num_players();
    // one stream per chain
    let mut rngs: Vec<ChaCha12Rng> = (0..n)
        .map(|i| {
            let mut r = ChaCha12Rng::seed_from_u64(seed);
            r.set_stream(i as u64 + 1);
            r
        })
        .collect();
    let batches = BATCHES.min(horizon).max(1);
    let batch_len = horizon / batches;

    let mut states: Vec<usize> = (0..n)
        .map(|i| sample_index(&mut rngs[i], g.chain(i).gamma()))
        .collect();
    for _ in 0..burn_in {
        for i in 0..n {
            let a = sample_index(&mut rngs[i], strategies[i].row(states[i]));
            states[i] = sample_index(&mut rngs[i], &g.chain(i).trans()[states[i]][a]);
        }
    }

    let mut occ_counts: Vec<Vec<f64>> = (0..n).map(|i| vec![0.0; g.chain(i).k().len()]).collect();
    let mut cost_sums = vec![0.0f64; n];
    let mut batch_costs: Vec<Vec<f64>> = Vec::new();
    let mut batch_occ: Vec<Vec<Vec<f64>>> = Vec::new();
    let mut cur_costs = vec![0.0f64; n];
    let mut cur_occ: Vec<Vec<f64>> = (0..n).map(|i| vec![0.0; g.chain(i).k().len()]).collect();
    let mut cur_n = 0usize;
    let mut joint = vec![0usize; n];

    for _ in 0..horizon {
        for i in 0..n {
            let a = sample_index(&mut rngs[i], strategies[i].row(states[i]));
            let flat = g.chain(i).k().flat(states[i], a);
            occ_counts[i][flat] += 1.0;
            cur_occ[i][flat] += 1.0;
            joint[i] = flat;
        }
        for i in 0..n {
            let c = g.cost(i).get(&joint);
            cost_sums[i] += c;
            cur_costs[i] += c;
        }
        for i in 0..n {
            let (s, a) = g.chain(i).k().unflat(joint[i]);
            states[i] = sample_index(&mut rngs[i], &g.chain(i).trans()[s][a]);
        }
        cur_n += 1;
        if cur_n == batch_len && batch_costs.len() < batches {
            batch_costs.push(cur_costs.iter().map(|v| v / cur_n as f64).collect());
            batch_occ.push(
                cur_occ
                    .iter()
                    .map(|o| o.iter().map(|v| v / cur_n as f64).collect())
                    .collect(),
            );
            cur_costs = vec![0.0; n];
            cur_occ = (0..n).map(|i| vec![0.0; g.chain(i).k().len()]).collect();
            cur_n = 0;
        }
    }

    let empirical_occupation: Vec<Vec<f64>> = occ_counts
        .iter()
        .map(|o| {
            let total: f64 = o.iter().sum();
            o.iter().map(|v| v / total).collect()
        })
        .collect();
    let empirical_costs: Vec<f64> = cost_sums.iter().map(|v| v / horizon as f64).collect();
    let cost_se = (0..n)
        .map(|i| se_from_samples(&batch_costs.iter().map(|b| b[i]).collect::<Vec<_>>()))
        .collect();
    let occ_se = (0..n)
        .map(|i| {
            (0..g.chain(i).k().len())
                .map(|j| se_from_samples(&batch_occ.iter().map(|b| b[i][j]).collect::<Vec<_>>()))
                .collect()
        })
        .collect();
    SimReport {
        schema_version: 1,
        empirical_occupation,
        empirical_costs,
        horizon,
        seed,
        standard_errors: StdErrors {
            costs: cost_se,
            occupation: occ_se,
        },
        truncation_bound: None,
    }
}

/// Analytic counterpart of a simulation: expected costs and the occupation
/// measure(s) at a strategy profile.
#[derive(Debug, Clone)]
pub struct AnalyticBaseline {
    pub costs: Vec<f64>,
    pub occupation: Vec<Vec<f64>>,
}

impl AnalyticBaseline {
    pub fn for_profile(
        game: &Game,
        strategies: &[StationaryStrategy],
    ) -> Result<Self, chain::ChainError> {
        let report = chain::expected_costs(game, strategies)?;
        let occupation = match game {
            Game::SingleController(g) => vec![chain::sc_occupation(g, &strategies[1])?.entries],
            Game::Independent(g) => (0..g.num_players())
                .map(|i| Ok(chain::avg_occupation(g.chain(i).trans(), &strategies[i])?.entries))
                .collect::<Result<_, chain::ChainError>>()?,
        };
        Ok(AnalyticBaseline {
            costs: report.main_costs,
            occupation,
        })
    }
}

#[derive(Debug, Clone)]
pub struct CompareReport {
    pub cost_pass: Vec<bool>,
    pub occupation_pass: Vec<Vec<bool>>,
}

impl CompareReport {
    pub fn all_pass(&self) -> bool {
        self.cost_pass.iter().all(|&b| b) && self.occupation_pass.iter().flatten().all(|&b| b)
    }
}

/// Flags quantities whose empirical estimate deviates from the analytic
/// value by more than `z` standard errors. Zero-variance quantities demand
/// exact agreement.
pub fn compare(
    sim: &SimReport,
    baseline: &AnalyticBaseline,
    z: f64,
) -> Result<CompareReport, SimError> {
    if sim.empirical_costs.len() != baseline.costs.len() {
        return Err(SimError::ShapeMismatch("cost vector length".into()));
    }
    if sim.empirical_occupation.len() != baseline.occupation.len()
        || sim
            .empirical_occupation
            .iter()
            .zip(&baseline.occupation)
            .any(|(a, b)| a.len() != b.len())
    {
        return Err(SimError::ShapeMismatch("occupation shape".into()));
    }
    let check = |emp: f64, ana: f64, se: f64| -> bool {
        if se == 0.0 {
            (emp - ana).abs() <= 1e-12
        } else {
            (emp - ana).abs() <= z * se
        }
    };
    let cost_pass = (0..baseline.costs.len())
        .map(|i| {
            check(
                sim.empirical_costs[i],
                baseline.costs[i],
                sim.standard_errors.costs[i],
            )
        })
        .collect();
    let occupation_pass = (0..baseline.occupation.len())
        .map(|c| {
            (0..baseline.occupation[c].len())
                .map(|j| {
                    check(
                        sim.empirical_occupation[c][j],
                        baseline.occupation[c][j],
                        sim.standard_errors.occupation[c][j],
                    )
                })
                .collect()
        })
        .collect();
    Ok(CompareReport {
        cost_pass,
        occupation_pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::builtin_example;

    fn sc_avg_equilibrium() -> Vec<StationaryStrategy> {
        vec![
            StationaryStrategy::new(vec![
                vec![25.0 / 36.0, 11.0 / 36.0],
                vec![25.0 / 72.0, 47.0 / 72.0],
            ])
            .unwrap(),
            StationaryStrategy::new(vec![vec![20.0 / 47.0, 27.0 / 47.0], vec![1.0, 0.0]]).unwrap(),
        ]
    }

    #[test]
    fn reproducible_reports() {
        let game = builtin_example("sc-average").unwrap();
        let strategies = sc_avg_equilibrium();
        let a = simulate(&game, &strategies, 5000, 42);
        let b = simulate(&game, &strategies, 5000, 42);
        assert_eq!(a.empirical_costs, b.empirical_costs);
        assert_eq!(a.empirical_occupation, b.empirical_occupation);
    }

    #[test]
    fn occupation_is_normalized() {
        let game = builtin_example("indep-2p").unwrap();
        let strategies = vec![
            StationaryStrategy::new(vec![vec![0.5, 0.5], vec![0.0, 1.0]]).unwrap(),
            StationaryStrategy::new(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap(),
        ];
        let report = simulate(&game, &strategies, 20_000, 7);
        for occ in &report.empirical_occupation {
            let total: f64 = occ.iter().sum();
            assert!((total - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn average_costs_converge() {
        let game = builtin_example("sc-average").unwrap();
        let strategies = sc_avg_equilibrium();
        let report = simulate(&game, &strategies, 100_000, 3);
        assert!(
            (report.empirical_costs[0] - 4.4268).abs() < 0.05 * 4.4268,
            "C1 {}",
            report.empirical_costs[0]
        );
        assert!((report.empirical_costs[1] - 3.0279).abs() < 0.05 * 3.0279);
    }

    #[test]
    fn deterministic_game_exact() {
        // one state, one action, cost 3: zero-variance path
        use crate::game::{Criterion, SingleControllerGame};
        let g = SingleControllerGame::new(
            vec!["1".into()],
            vec![vec!["1".into()]],
            vec![vec!["1".into()]],
            vec![vec![vec![3.0]]],
            vec![vec![vec![3.0]]],
            vec![],
            vec![],
            vec![vec![vec![1.0]]],
            vec![],
            vec![],
            vec![1.0],
            Criterion::Average,
        )
        .unwrap();
        let game = Game::SingleController(g);
        let strategies = vec![
            StationaryStrategy::new(vec![vec![1.0]]).unwrap(),
            StationaryStrategy::new(vec![vec![1.0]]).unwrap(),
        ];
        let report = simulate(&game, &strategies, 1000, 0);
        assert_eq!(report.empirical_costs[0], 3.0);
        let baseline = AnalyticBaseline::for_profile(&game, &strategies).unwrap();
        let cmp = compare(&report, &baseline, 3.0).unwrap();
        assert!(cmp.all_pass());
    }

    #[test]
    fn shifted_baseline_fails() {
        let game = builtin_example("sc-average").unwrap();
        let strategies = sc_avg_equilibrium();
        let report = simulate(&game, &strategies, 100_000, 5);
        let mut baseline = AnalyticBaseline::for_profile(&game, &strategies).unwrap();
        baseline.costs[0] += 10.0 * report.standard_errors.costs[0].max(1e-6);
        let cmp = compare(&report, &baseline, 3.0).unwrap();
        assert!(!cmp.cost_pass[0]);
    }

    #[test]
    fn occupation_error_shrinks_with_horizon() {
        let game = builtin_example("sc-average").unwrap();
        let strategies = sc_avg_equilibrium();
        let baseline = AnalyticBaseline::for_profile(&game, &strategies).unwrap();
        let max_err = |h: usize| -> f64 {
            let mut errs = Vec::new();
            for seed in 0..5 {
                let r = simulate(&game, &strategies, h, seed);
                let e = r.empirical_occupation[0]
                    .iter()
                    .zip(&baseline.occupation[0])
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0f64, f64::max);
                errs.push(e);
            }
            errs.sort_by(f64::total_cmp);
            errs[2] // median of five
        };
        let e3 = max_err(1_000);
        let e5 = max_err(100_000);
        assert!(e5 < e3, "e(1e5)={e5} should beat e(1e3)={e3}");
    }

    #[test]
    fn discounted_estimates_match() {
        let game = builtin_example("sc-discounted").unwrap();
        let strategies = vec![
            StationaryStrategy::new(vec![vec![1.0, 0.0], vec![0.5, 0.5]]).unwrap(),
            StationaryStrategy::new(vec![vec![4.0 / 7.0, 3.0 / 7.0], vec![1.0, 0.0]]).unwrap(),
        ];
        let report = simulate(&game, &strategies, 100_000, 11);
        assert!(report.truncation_bound.unwrap() < 1e-12);
        assert!(
            (report.empirical_costs[0] - 4.2083).abs() <= 4.0 * report.standard_errors.costs[0],
            "C1 {} se {}",
            report.empirical_costs[0],
            report.standard_errors.costs[0]
        );
    }

    #[test]
    fn report_roundtrips_through_document() {
        let game = builtin_example("sc-average").unwrap();
        let strategies = sc_avg_equilibrium();
        let report = simulate(&game, &strategies, 1000, 1);
        let text = report.to_document();
        let back = SimReport::from_document(&text).unwrap();
        assert_eq!(report.empirical_costs, back.empirical_costs);
        assert_eq!(report.seed, back.seed);
    }
}
