//! Browser bindings: three interactive operations over JSON strings so the
//! static demo page can solve, verify and simulate games while exploring
//! constraint bounds and the discount factor. All logic lives in plain
//! functions that compile and test natively; the `wasm_bindgen` wrappers are
//! one-liners.

use csg_core::game::{builtin_example, parse_game, serialize_game, Criterion, Game};
use csg_core::sim::{compare, simulate, AnalyticBaseline};
use csg_core::solver::{solve_nash, verify_nash, SolverConfig};
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Serialize)]
struct ErrorDocument {
    error: String,
}

fn err_json(message: impl std::fmt::Display) -> String {
    serde_json::to_string(&ErrorDocument {
        error: message.to_string(),
    })
    .expect("error document serializes")
}

/// Built-in game as a game-file document, with the constraint bounds and
/// (for single-controller games) the discount factor replaced by the given
/// values. `beta < 0` keeps the example's own criterion.
pub fn builtin_with_parameters_json(name: &str, xi1: f64, xi2: f64, beta: f64) -> String {
    let game = match builtin_example(name) {
        Ok(g) => g,
        Err(e) => return err_json(e),
    };
    let game = match game {
        Game::SingleController(g) => {
            let g = match g.with_bounds(vec![xi1], vec![xi2]) {
                Ok(g) => g,
                Err(e) => return err_json(e),
            };
            let g = if beta >= 0.0 {
                let criterion = if beta >= 1.0 || beta == 0.0 && name.ends_with("average") {
                    Criterion::Average
                } else {
                    Criterion::Discounted { beta }
                };
                match g.with_criterion(criterion) {
                    Ok(g) => g,
                    Err(e) => return err_json(e),
                }
            } else {
                g
            };
            Game::SingleController(g)
        }
        Game::Independent(g) => match g.with_bounds(vec![vec![xi1], vec![xi2]]) {
            Ok(g) => Game::Independent(g),
            Err(e) => return err_json(e),
        },
    };
    serialize_game(&game)
}

/// Solves the game given as a game-file document; returns a certificate
/// document (or `{"error": ...}`).
pub fn solve_game_json(game_json: &str, restarts: u32, seed: u64) -> String {
    let game = match parse_game(game_json) {
        Ok(g) => g,
        Err(e) => return err_json(e),
    };
    let config = SolverConfig {
        restarts: restarts.max(1) as usize,
        rng_seed: seed,
        ..Default::default()
    };
    match solve_nash(&game, &config) {
        Ok(cert) => cert.to_document(Some(seed)).to_json(),
        Err(e) => err_json(e),
    }
}

/// Verifies a strategies document against a game document.
pub fn verify_game_json(game_json: &str, strategies_json: &str, epsilon: f64) -> String {
    let game = match parse_game(game_json) {
        Ok(g) => g,
        Err(e) => return err_json(e),
    };
    let strategies = match csg_core::game::parse_strategies(strategies_json) {
        Ok(s) => s,
        Err(e) => return err_json(e),
    };
    match verify_nash(&game, &strategies, epsilon) {
        Ok(cert) => cert.to_document(None).to_json(),
        Err(e) => err_json(e),
    }
}

#[derive(Serialize)]
struct SimulationDocument {
    report: csg_core::sim::SimReport,
    analytic_costs: Vec<f64>,
    analytic_occupation: Vec<Vec<f64>>,
    all_pass: bool,
}

/// Simulates a strategies document on a game document and attaches the
/// analytic baseline for plotting.
pub fn simulate_game_json(
    game_json: &str,
    strategies_json: &str,
    horizon: u32,
    seed: u64,
) -> String {
    let game = match parse_game(game_json) {
        Ok(g) => g,
        Err(e) => return err_json(e),
    };
    let strategies = match csg_core::game::parse_strategies(strategies_json) {
        Ok(s) => s,
        Err(e) => return err_json(e),
    };
    let report = simulate(&game, &strategies, horizon.max(1) as usize, seed);
    let baseline = match AnalyticBaseline::for_profile(&game, &strategies) {
        Ok(b) => b,
        Err(e) => return err_json(e),
    };
    let all_pass = compare(&report, &baseline, 3.0)
        .map(|c| c.all_pass())
        .unwrap_or(false);
    serde_json::to_string_pretty(&SimulationDocument {
        report,
        analytic_costs: baseline.costs,
        analytic_occupation: baseline.occupation,
        all_pass,
    })
    .expect("simulation document serializes")
}

#[wasm_bindgen]
pub fn builtin_with_parameters(name: &str, xi1: f64, xi2: f64, beta: f64) -> String {
    builtin_with_parameters_json(name, xi1, xi2, beta)
}

#[wasm_bindgen]
pub fn solve_game(game_json: &str, restarts: u32, seed: u64) -> String {
    solve_game_json(game_json, restarts, seed)
}

#[wasm_bindgen]
pub fn verify_game(game_json: &str, strategies_json: &str, epsilon: f64) -> String {
    verify_game_json(game_json, strategies_json, epsilon)
}

#[wasm_bindgen]
pub fn simulate_game(game_json: &str, strategies_json: &str, horizon: u32, seed: u64) -> String {
    simulate_game_json(game_json, strategies_json, horizon, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_builtin_through_json() {
        let game_json = builtin_with_parameters_json("sc-average", 4.0, 2.5, -1.0);
        assert!(!game_json.contains("error"), "{game_json}");
        let out = solve_game_json(&game_json, 8, 0);
        let doc: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(doc["verdict"], "certified", "{out}");
    }

    #[test]
    fn parameter_exploration_changes_bounds() {
        // a looser subscription bound changes the equilibrium cost of
        // player 1 (the constraint is tight at 4)
        let tight = solve_game_json(
            &builtin_with_parameters_json("sc-average", 4.0, 2.5, -1.0),
            8,
            0,
        );
        let loose = solve_game_json(
            &builtin_with_parameters_json("sc-average", 6.0, 2.5, -1.0),
            8,
            0,
        );
        let t: serde_json::Value = serde_json::from_str(&tight).unwrap();
        let l: serde_json::Value = serde_json::from_str(&loose).unwrap();
        let ct = t["costs"][0].as_f64().unwrap();
        let cl = l["costs"][0].as_f64().unwrap();
        assert!(cl < ct, "loose {cl} should beat tight {ct}");
    }

    #[test]
    fn verify_and_simulate_through_json() {
        let game_json = builtin_with_parameters_json("indep-2p", 5.0, 3.5, -1.0);
        let strategies =
            r#"{"schema_version":1,"strategies":[[[0.5,0.5],[0.0,1.0]],[[0.0,1.0],[1.0,0.0]]]}"#;
        let v = verify_game_json(&game_json, strategies, 1e-3);
        let doc: serde_json::Value = serde_json::from_str(&v).unwrap();
        assert_eq!(doc["verdict"], "certified", "{v}");
        let s = simulate_game_json(&game_json, strategies, 20_000, 3);
        let doc: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert!(doc["report"]["empirical_costs"][0].as_f64().unwrap() > 0.0);
    }

    #[test]
    fn bad_input_reports_error_json() {
        let out = solve_game_json("{not json", 4, 0);
        assert!(out.contains("error"));
    }
}
