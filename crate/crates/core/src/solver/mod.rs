//! Equilibrium search and certification.
//!
//! The search runs restarts of alternating best response. That alone only
//! terminates at equilibria that are vertices of the players' best-response
//! polytopes, so each restart's trajectory (fixed point, detected cycle, or
//! tail average) seeds support-pattern guesses that a linear
//! complementarity-style polish turns into exact candidates. Certification
//! is independent of the search: a candidate is accepted only when its
//! assembled program point is feasible with (near-)zero objective and every
//! player's best-response gap vanishes, so any search heuristic is sound.

mod grid;
mod polish;

pub use grid::{grid_oracle, GridOracleReport};
pub use polish::refine_equilibrium;

use crate::br::{self, BrError};
use crate::chain::{self, ChainError};
use crate::game::{validate, Game, StationaryStrategy};
use crate::lp::LpError;
use crate::mp::{self, FeasiblePoint, MpError};
use crate::randutil::sample_strategy;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("game failed validation: {0:?}")]
    InvalidGame(Vec<String>),
    #[error("no feasible starting profile found in any restart")]
    NoFeasibleStart,
    #[error("strategy grid of {points} points exceeds the 10^7 guard")]
    GridTooLarge { points: usize },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Br(#[from] BrError),
    #[error(transparent)]
    Mp(#[from] MpError),
    #[error(transparent)]
    Lp(#[from] LpError),
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub max_outer_iterations: usize,
    pub restarts: usize,
    pub rng_seed: u64,
    pub phi_tolerance: f64,
    pub br_improvement_tolerance: f64,
    /// convex-combination weight on the previous iterate (0 = undamped)
    pub damping: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_outer_iterations: 500,
            restarts: 32,
            rng_seed: 0,
            phi_tolerance: 1e-6,
            br_improvement_tolerance: 1e-9,
            damping: 0.0,
        }
    }
}

pub const RESIDUAL_TOLERANCE: f64 = 1e-8;
pub const GAP_TOLERANCE: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    /// program objective, residuals and best-response gaps all within the
    /// certificate tolerances
    Certified,
    /// feasible with best-response gaps within the given epsilon only
    EpsilonOnly(f64),
    Failed,
}

#[derive(Debug, Clone)]
pub struct NashCertificate {
    pub strategies: Vec<StationaryStrategy>,
    /// assembled program point (absent when the strategies are infeasible)
    pub point: Option<FeasiblePoint>,
    /// program objective at the point (infinite when absent)
    pub objective_value: f64,
    pub residual_max: f64,
    pub epsilon_gaps: Vec<f64>,
    /// all constraint functionals within bounds at the strict tolerance
    pub feasible: bool,
    /// largest constraint-functional violation (0 when feasible)
    pub worst_violation: f64,
    pub costs: Vec<f64>,
    pub verdict: Verdict,
}

/// Schema-versioned, serializable view of a certificate (used by the CLI's
/// machine output and the browser demo). Non-finite numbers are mapped to
/// `None` so the document stays valid JSON.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct CertificateDocument {
    pub schema_version: u32,
    pub verdict: String,
    pub epsilon: Option<f64>,
    /// `strategies[player][state][action]`
    pub strategies: Vec<Vec<Vec<f64>>>,
    pub costs: Vec<f64>,
    pub objective_value: Option<f64>,
    pub residual_max: Option<f64>,
    pub epsilon_gaps: Vec<f64>,
    pub feasible: bool,
    pub seed: Option<u64>,
}

impl CertificateDocument {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificate serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

impl NashCertificate {
    pub fn to_document(&self, seed: Option<u64>) -> CertificateDocument {
        let finite = |v: f64| v.is_finite().then_some(v);
        let (verdict, epsilon) = match self.verdict {
            Verdict::Certified => ("certified".to_string(), None),
            Verdict::EpsilonOnly(e) => ("epsilon_only".to_string(), Some(e)),
            Verdict::Failed => ("failed".to_string(), None),
        };
        CertificateDocument {
            schema_version: crate::game::SCHEMA_VERSION,
            verdict,
            epsilon,
            strategies: self.strategies.iter().map(|s| s.rows().to_vec()).collect(),
            costs: self.costs.clone(),
            objective_value: finite(self.objective_value),
            residual_max: finite(self.residual_max),
            epsilon_gaps: self.epsilon_gaps.clone(),
            feasible: self.feasible,
            seed,
        }
    }
}

impl NashCertificate {
    pub fn max_gap(&self) -> f64 {
        self.epsilon_gaps.iter().cloned().fold(0.0, f64::max)
    }

    /// Epsilon-level acceptance: constraints violated by at most `eps` and
    /// every player within `eps` of their best-response value (rounded
    /// reference points sit exactly on tight constraints, so feasibility is
    /// checked at the same level as the gaps).
    pub fn passes(&self, eps: f64) -> bool {
        self.worst_violation <= eps && self.max_gap() <= eps
    }

    fn strategy_key(&self) -> Vec<f64> {
        self.strategies
            .iter()
            .flat_map(|s| s.rows().iter().flatten().copied())
            .collect()
    }

    /// Deterministic preference order: lower objective, then
    /// lexicographically smaller strategy vector.
    fn better_than(&self, other: &NashCertificate) -> bool {
        let a = (
            !matches!(self.verdict, Verdict::Certified),
            self.objective_value,
        );
        let b = (
            !matches!(other.verdict, Verdict::Certified),
            other.objective_value,
        );
        if a.0 != b.0 {
            return !a.0;
        }
        if a.1 != b.1 {
            return a.1 < b.1;
        }
        let ka = self.strategy_key();
        let kb = other.strategy_key();
        ka < kb
    }
}

/// Verifies a strategy profile: feasibility of every constraint functional,
/// per-player best-response gaps against fresh LPs, and the assembled
/// certificate point. `eps` is the acceptance level for the epsilon verdict;
/// the `Certified` verdict always uses the tight certificate tolerances.
pub fn verify_nash(
    game: &Game,
    strategies: &[StationaryStrategy],
    eps: f64,
) -> Result<NashCertificate, SolverError> {
    certify(game, strategies, eps, 1e-6)
}

pub(crate) fn certify(
    game: &Game,
    strategies: &[StationaryStrategy],
    eps: f64,
    phi_tolerance: f64,
) -> Result<NashCertificate, SolverError> {
    let report = chain::expected_costs(game, strategies)?;
    let feasible = report.all_bounds_satisfied();
    let worst_violation = report.worst_violation().max(0.0);
    let mut gaps = Vec::with_capacity(game.num_players());
    for player in 0..game.num_players() {
        let brr = br::best_response(game, player, strategies)?;
        gaps.push(report.main_costs[player] - brr.value);
    }
    let (point, objective_value, residual_max) = if feasible {
        let pt = mp::make_feasible_point(game, strategies)?;
        let mpr = mp::assemble_auto(game)?;
        let phi = mp::evaluate_objective(&mpr, &pt.values)?;
        let res = pt.max_residual();
        (Some(pt), phi, res)
    } else {
        (None, f64::INFINITY, f64::INFINITY)
    };
    let max_gap = gaps.iter().cloned().fold(0.0, f64::max);
    let verdict = if feasible
        && objective_value <= phi_tolerance
        && residual_max <= RESIDUAL_TOLERANCE
        && max_gap <= GAP_TOLERANCE
    {
        Verdict::Certified
    } else if worst_violation <= eps && max_gap <= eps {
        Verdict::EpsilonOnly(max_gap)
    } else {
        Verdict::Failed
    };
    Ok(NashCertificate {
        strategies: strategies.to_vec(),
        point,
        objective_value,
        residual_max,
        epsilon_gaps: gaps,
        feasible,
        worst_violation,
        costs: report.main_costs,
        verdict,
    })
}

enum RestartOutcome {
    Candidates(Vec<Vec<StationaryStrategy>>),
    NoFeasibleStart,
}

fn profile_diff(a: &[StationaryStrategy], b: &[StationaryStrategy]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.max_abs_diff(y))
        .fold(0.0, f64::max)
}

fn average_profiles(profiles: &[Vec<StationaryStrategy>]) -> Vec<StationaryStrategy> {
    let n = profiles[0].len();
    (0..n)
        .map(|player| {
            let rows: Vec<Vec<f64>> = (0..profiles[0][player].num_states())
                .map(|s| {
                    let len = profiles[0][player].row(s).len();
                    let mut acc = vec![0.0; len];
                    for p in profiles {
                        for (a, v) in p[player].row(s).iter().enumerate() {
                            acc[a] += v;
                        }
                    }
                    for v in &mut acc {
                        *v /= profiles.len() as f64;
                    }
                    acc
                })
                .collect();
            StationaryStrategy::new(rows).expect("averaged rows stay stochastic")
        })
        .collect()
}

/// One restart: draw a start, project it to feasibility through best
/// responses, iterate alternating best response until a fixed point, a
/// cycle, or the iteration cap, and emit candidate profiles.
fn run_restart(game: &Game, config: &SolverConfig, restart: usize) -> RestartOutcome {
    let stream = 0x9E37_79B9_7F4A_7C15u64.wrapping_mul(restart as u64 + 1);
    let mut rng = ChaCha12Rng::seed_from_u64(config.rng_seed ^ stream);

    let n = game.num_players();
    let mut profile: Vec<StationaryStrategy> = (0..n)
        .map(|p| sample_strategy(&mut rng, &game.action_counts(p)))
        .collect();

    // feasibility projection: replace a start that breaks its own player's
    // constraints with that player's best response to the draw
    for player in 0..n {
        let feasible = chain::expected_costs(game, &profile)
            .map(|r| r.bounds[player].iter().all(|b| b.satisfied))
            .unwrap_or(false);
        if !feasible {
            match br::best_response(game, player, &profile) {
                Ok(brr) => profile[player] = brr.strategy,
                Err(_) => return RestartOutcome::NoFeasibleStart,
            }
        }
    }

    let mut history: Vec<Vec<StationaryStrategy>> = vec![profile.clone()];
    let mut candidates: Vec<Vec<StationaryStrategy>> = Vec::new();
    for _ in 0..config.max_outer_iterations {
        let mut next = profile.clone();
        for player in 0..n {
            let brr = match br::best_response(game, player, &next) {
                Ok(b) => b,
                Err(_) => return RestartOutcome::NoFeasibleStart,
            };
            next[player] = if config.damping > 0.0 {
                let lambda = config.damping;
                let rows: Vec<Vec<f64>> = (0..brr.strategy.num_states())
                    .map(|s| {
                        brr.strategy
                            .row(s)
                            .iter()
                            .zip(next[player].row(s))
                            .map(|(new, old)| (1.0 - lambda) * new + lambda * old)
                            .collect()
                    })
                    .collect();
                StationaryStrategy::new(rows).expect("damped rows stay stochastic")
            } else {
                brr.strategy
            };
        }
        let change = profile_diff(&next, &profile);
        profile = next;
        history.push(profile.clone());
        if change <= config.br_improvement_tolerance.max(1e-12) {
            candidates.push(profile.clone());
            break;
        }
        // cycle detection over a bounded window
        let window = history.len().saturating_sub(65)..history.len() - 1;
        if let Some(j) = window
            .clone()
            .find(|&j| profile_diff(&history[j], &profile) <= 1e-9)
        {
            let cycle = &history[j..history.len() - 1];
            candidates.push(average_profiles(cycle));
            candidates.push(profile.clone());
            break;
        }
    }
    if candidates.is_empty() {
        // iteration cap: fall back to the tail average and the last iterate
        let tail = &history[history.len().saturating_sub(8)..];
        candidates.push(average_profiles(tail));
        candidates.push(profile.clone());
    }
    RestartOutcome::Candidates(candidates)
}

fn consider(
    best: &mut Option<NashCertificate>,
    game: &Game,
    strategies: &[StationaryStrategy],
    config: &SolverConfig,
) {
    if let Ok(cert) = certify(game, strategies, GAP_TOLERANCE, config.phi_tolerance) {
        if cert.feasible && best.as_ref().is_none_or(|b| cert.better_than(b)) {
            *best = Some(cert);
        }
    }
}

/// Finds a stationary Nash equilibrium and certifies it through the
/// assembled program. Deterministic for a fixed `(game, config)`.
pub fn solve_nash(game: &Game, config: &SolverConfig) -> Result<NashCertificate, SolverError> {
    let report = validate(game);
    if !report.is_ok() {
        return Err(SolverError::InvalidGame(report.errors));
    }

    let outcomes: Vec<RestartOutcome> = (0..config.restarts.max(1))
        .into_par_iter()
        .map(|r| run_restart(game, config, r))
        .collect();

    let mut best: Option<NashCertificate> = None;
    for outcome in &outcomes {
        let RestartOutcome::Candidates(cands) = outcome else {
            continue;
        };
        for cand in cands {
            consider(&mut best, game, cand, config);
            for refined in polish::polish_candidates(game, cand) {
                consider(&mut best, game, &refined, config);
            }
        }
    }

    // guided search exhausted: enumerate support patterns when the game is
    // small enough for that to be cheap
    if !best
        .as_ref()
        .is_some_and(|b| matches!(b.verdict, Verdict::Certified))
    {
        for refined in polish::enumerate_support_equilibria(game, 4096) {
            consider(&mut best, game, &refined, config);
        }
    }

    best.ok_or(SolverError::NoFeasibleStart)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::builtin_example;

    #[test]
    fn verify_accepts_printed_sc_average_equilibrium() {
        let game = builtin_example("sc-average").unwrap();
        let strategies = vec![
            StationaryStrategy::new(vec![vec![0.6944, 0.3056], vec![0.3472, 0.6528]]).unwrap(),
            StationaryStrategy::new(vec![vec![0.4256, 0.5744], vec![1.0, 0.0]]).unwrap(),
        ];
        let cert = verify_nash(&game, &strategies, 1e-3).unwrap();
        assert!(cert.passes(1e-3), "gaps {:?}", cert.epsilon_gaps);
        assert!((cert.costs[0] - 4.4268).abs() < 1e-3);
        assert!((cert.costs[1] - 3.0279).abs() < 1e-3);
    }

    #[test]
    fn verify_rejects_perturbed_profile() {
        let game = builtin_example("sc-average").unwrap();
        // full mass on action 1 in both states for player 1
        let strategies = vec![
            StationaryStrategy::new(vec![vec![1.0, 0.0], vec![1.0, 0.0]]).unwrap(),
            StationaryStrategy::new(vec![vec![0.4256, 0.5744], vec![1.0, 0.0]]).unwrap(),
        ];
        let cert = verify_nash(&game, &strategies, 1e-3).unwrap();
        assert!(!cert.passes(1e-3));
        // report says which: either infeasible or a best-response gap
        if cert.feasible {
            assert!(cert.max_gap() > 1e-3);
        }
    }

    #[test]
    fn verify_indep_alpha_freedom() {
        let game = builtin_example("indep-2p").unwrap();
        for alpha in [0.0, 0.25, 0.37, 0.5, 0.75, 1.0] {
            let strategies = vec![
                StationaryStrategy::new(vec![vec![alpha, 1.0 - alpha], vec![0.0, 1.0]]).unwrap(),
                StationaryStrategy::new(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap(),
            ];
            let cert = verify_nash(&game, &strategies, 1e-3).unwrap();
            assert!(
                cert.passes(1e-3),
                "alpha {alpha}: gaps {:?}",
                cert.epsilon_gaps
            );
            assert!((cert.costs[0] - 1.2941).abs() < 1e-3);
            assert!((cert.costs[1] - 1.7059).abs() < 1e-3);
        }
    }

    #[test]
    fn solve_certifies_all_builtins() {
        for name in ["sc-average", "sc-discounted", "indep-2p"] {
            let game = builtin_example(name).unwrap();
            let cert = solve_nash(&game, &SolverConfig::default()).unwrap();
            assert!(
                matches!(cert.verdict, Verdict::Certified),
                "{name}: verdict {:?}, phi {}, gaps {:?}",
                cert.verdict,
                cert.objective_value,
                cert.epsilon_gaps
            );
        }
    }

    #[test]
    fn solve_is_deterministic() {
        let game = builtin_example("sc-average").unwrap();
        let cfg = SolverConfig {
            restarts: 4,
            ..Default::default()
        };
        let a = solve_nash(&game, &cfg).unwrap();
        let b = solve_nash(&game, &cfg).unwrap();
        assert_eq!(a.objective_value, b.objective_value);
        for (x, y) in a.strategies.iter().zip(&b.strategies) {
            assert_eq!(x.max_abs_diff(y), 0.0);
        }
    }

    #[test]
    fn solve_rejects_invalid_game() {
        use crate::game::{Criterion, SingleControllerGame};
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
        assert!(matches!(
            solve_nash(&Game::SingleController(g), &SolverConfig::default()),
            Err(SolverError::InvalidGame(_))
        ));
    }
}
