//! Built-in example games used throughout the test suite and the demos.

use super::{
    Criterion, Game, GameError, IndependentGame, JointTensor, PlayerChain, SingleControllerGame,
};

fn names(n: usize) -> Vec<String> {
    (1..=n).map(|i| i.to_string()).collect()
}

fn sc_game(criterion: Criterion) -> SingleControllerGame {
    let third = 1.0 / 3.0;
    SingleControllerGame::new(
        names(2),
        vec![names(2), names(2)],
        vec![names(2), names(2)],
        // cost1[s][a1][a2]
        vec![
            vec![vec![5.0, 6.0], vec![7.0, 4.0]],
            vec![vec![2.0, 4.0], vec![3.0, 3.0]],
        ],
        // cost2[s][a1][a2]
        vec![
            vec![vec![4.0, 3.0], vec![3.0, 6.0]],
            vec![vec![3.0, 2.0], vec![1.0, 4.0]],
        ],
        // d1_sub[k][s][a1]
        vec![vec![vec![2.0, 3.0], vec![3.0, 1.0]]],
        // d2[l][s][a1][a2]: independent of a1
        vec![vec![
            vec![vec![1.0, 2.0], vec![1.0, 2.0]],
            vec![vec![4.0, 5.0], vec![4.0, 5.0]],
        ]],
        // trans[s][a2][s']
        vec![
            vec![vec![0.5, 0.5], vec![third, 2.0 * third]],
            vec![vec![1.0, 0.0], vec![0.2, 0.8]],
        ],
        vec![4.0],
        vec![2.5],
        vec![0.5, 0.5],
        criterion,
    )
    .expect("built-in game data is valid")
}

fn indep_game() -> IndependentGame {
    let chain1 = PlayerChain::new(
        names(2),
        vec![names(2), names(2)],
        vec![
            vec![vec![0.5, 0.5], vec![0.33, 0.67]],
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
        ],
        vec![0.5, 0.5],
    )
    .expect("chain 1 data is valid");
    let chain2 = PlayerChain::new(
        vec!["3".into(), "4".into()],
        vec![names(2), names(2)],
        vec![
            vec![vec![0.67, 0.33], vec![0.4, 0.6]],
            vec![vec![0.25, 0.75], vec![1.0, 0.0]],
        ],
        vec![0.5, 0.5],
    )
    .expect("chain 2 data is valid");

    // Joint costs over ((s1,a1),(s2,a2)); rows are flat K^1 indices
    // (1,1),(1,2),(2,1),(2,2) and columns flat K^2 indices
    // (3,1),(3,2),(4,1),(4,2).
    let c1 = vec![
        2.0, 3.0, 5.0, 3.0, //
        4.0, 2.0, 3.0, 4.0, //
        3.0, 4.0, 4.0, 3.0, //
        5.0, 2.0, 1.0, 4.0,
    ];
    let c2 = vec![
        3.0, 1.0, 2.0, 4.0, //
        2.0, 4.0, 2.0, 1.0, //
        5.0, 6.0, 5.0, 1.0, //
        2.0, 1.0, 2.0, 3.0,
    ];
    // Constraint costs depend only on the owner's chain.
    let d1_own = [7.0, 4.0, 2.0, 5.0];
    let d2_own = [4.0, 3.0, 3.0, 5.0];
    let mut d1 = vec![0.0; 16];
    let mut d2 = vec![0.0; 16];
    for k1 in 0..4 {
        for k2 in 0..4 {
            d1[k1 * 4 + k2] = d1_own[k1];
            d2[k1 * 4 + k2] = d2_own[k2];
        }
    }
    IndependentGame::new(
        vec![chain1, chain2],
        vec![
            JointTensor::new(vec![4, 4], c1).unwrap(),
            JointTensor::new(vec![4, 4], c2).unwrap(),
        ],
        vec![
            vec![JointTensor::new(vec![4, 4], d1).unwrap()],
            vec![JointTensor::new(vec![4, 4], d2).unwrap()],
        ],
        vec![vec![5.0], vec![3.5]],
    )
    .expect("independent game data is valid")
}

/// Returns a built-in example game by name: `"sc-average"`, `"sc-discounted"`
/// or `"indep-2p"`.
pub fn builtin_example(name: &str) -> Result<Game, GameError> {
    match name {
        "sc-average" => Ok(Game::SingleController(sc_game(Criterion::Average))),
        "sc-discounted" => Ok(Game::SingleController(sc_game(Criterion::Discounted {
            beta: 0.5,
        }))),
        "indep-2p" => Ok(Game::Independent(indep_game())),
        other => Err(GameError::UnknownExample(other.to_string())),
    }
}

/// Names of all built-in examples.
pub fn builtin_names() -> &'static [&'static str] {
    &["sc-average", "sc-discounted", "indep-2p"]
}
