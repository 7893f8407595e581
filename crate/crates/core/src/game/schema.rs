//! JSON game-file ingestion and serialization (`schema_version` 1).
//!
//! The exact schema ships with the repo as `schema/game.schema.json`; the
//! structs here mirror it field by field.

use super::{
    Criterion, Game, GameError, IndependentGame, JointTensor, PlayerChain, SingleControllerGame,
    StationaryStrategy,
};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub(crate) enum GameDocument {
    #[serde(rename = "single_controller")]
    SingleController(ScDocument),
    #[serde(rename = "independent")]
    Independent(IndepDocument),
}

#[derive(Debug, Serialize, Deserialize)]
pub(crate) struct ScDocument {
    pub schema_version: u32,
    pub states: Vec<String>,
    pub actions1: Vec<Vec<String>>,
    pub actions2: Vec<Vec<String>>,
    /// `cost1[s][a1][a2]`
    pub cost1: Vec<Vec<Vec<f64>>>,
    pub cost2: Vec<Vec<Vec<f64>>>,
    /// `d1_sub[k][s][a1]`
    #[serde(default)]
    pub d1_sub: Vec<Vec<Vec<f64>>>,
    /// `d2[l][s][a1][a2]`
    #[serde(default)]
    pub d2: Vec<Vec<Vec<Vec<f64>>>>,
    /// `trans[s][a2][s']`
    pub trans: Vec<Vec<Vec<f64>>>,
    #[serde(default)]
    pub xi1: Vec<f64>,
    #[serde(default)]
    pub xi2: Vec<f64>,
    pub gamma: Vec<f64>,
    pub criterion: Criterion,
}

#[derive(Debug, Serialize, Deserialize)]
pub(crate) struct ChainDocument {
    pub states: Vec<String>,
    pub actions: Vec<Vec<String>>,
    /// `trans[s][a][s']`
    pub trans: Vec<Vec<Vec<f64>>>,
    pub gamma: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
pub(crate) struct TensorDocument {
    pub dims: Vec<usize>,
    pub data: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
pub(crate) struct IndepDocument {
    pub schema_version: u32,
    pub chains: Vec<ChainDocument>,
    /// main cost per player, flat over the product of per-chain flat
    /// state-action indices (last player's index fastest)
    pub costs: Vec<TensorDocument>,
    #[serde(default)]
    pub d: Vec<Vec<TensorDocument>>,
    #[serde(default)]
    pub xi: Vec<Vec<f64>>,
}

/// Parses a game-file document.
pub fn parse_game(text: &str) -> Result<Game, GameError> {
    let doc: GameDocument =
        serde_json::from_str(text).map_err(|e| GameError::Schema(e.to_string()))?;
    match doc {
        GameDocument::SingleController(d) => {
            if d.schema_version != SCHEMA_VERSION {
                return Err(GameError::Schema(format!(
                    "unsupported schema_version {}",
                    d.schema_version
                )));
            }
            Ok(Game::SingleController(SingleControllerGame::new(
                d.states,
                d.actions1,
                d.actions2,
                d.cost1,
                d.cost2,
                d.d1_sub,
                d.d2,
                d.trans,
                d.xi1,
                d.xi2,
                d.gamma,
                d.criterion,
            )?))
        }
        GameDocument::Independent(d) => {
            if d.schema_version != SCHEMA_VERSION {
                return Err(GameError::Schema(format!(
                    "unsupported schema_version {}",
                    d.schema_version
                )));
            }
            let mut d = d;
            if d.xi.is_empty() {
                d.xi = vec![Vec::new(); d.chains.len()];
            }
            if d.d.is_empty() {
                d.d = (0..d.chains.len()).map(|_| Vec::new()).collect();
            }
            let chains = d
                .chains
                .into_iter()
                .map(|c| PlayerChain::new(c.states, c.actions, c.trans, c.gamma))
                .collect::<Result<Vec<_>, _>>()?;
            let costs = d
                .costs
                .into_iter()
                .map(|t| JointTensor::new(t.dims, t.data))
                .collect::<Result<Vec<_>, _>>()?;
            let dd =
                d.d.into_iter()
                    .map(|ts| {
                        ts.into_iter()
                            .map(|t| JointTensor::new(t.dims, t.data))
                            .collect::<Result<Vec<_>, _>>()
                    })
                    .collect::<Result<Vec<_>, _>>()?;
            Ok(Game::Independent(IndependentGame::new(
                chains, costs, dd, d.xi,
            )?))
        }
    }
}

/// Serializes a game back to the document format (round-trips through
/// `parse_game`).
pub fn serialize_game(game: &Game) -> String {
    let doc = match game {
        Game::SingleController(g) => GameDocument::SingleController(ScDocument {
            schema_version: SCHEMA_VERSION,
            states: g.states.clone(),
            actions1: g.actions1.clone(),
            actions2: g.actions2.clone(),
            cost1: g.cost1.clone(),
            cost2: g.cost2.clone(),
            d1_sub: g.d1_sub.clone(),
            d2: g.d2.clone(),
            trans: g.trans.clone(),
            xi1: g.xi1.clone(),
            xi2: g.xi2.clone(),
            gamma: g.gamma.clone(),
            criterion: g.criterion,
        }),
        Game::Independent(g) => GameDocument::Independent(IndepDocument {
            schema_version: SCHEMA_VERSION,
            chains: g
                .chains
                .iter()
                .map(|c| ChainDocument {
                    states: c.states.clone(),
                    actions: c.actions.clone(),
                    trans: c.trans.clone(),
                    gamma: c.gamma.clone(),
                })
                .collect(),
            costs: g
                .cost
                .iter()
                .map(|t| TensorDocument {
                    dims: t.dims().to_vec(),
                    data: t.data().to_vec(),
                })
                .collect(),
            d: g.d
                .iter()
                .map(|ts| {
                    ts.iter()
                        .map(|t| TensorDocument {
                            dims: t.dims().to_vec(),
                            data: t.data().to_vec(),
                        })
                        .collect()
                })
                .collect(),
            xi: g.xi.clone(),
        }),
    };
    serde_json::to_string_pretty(&doc).expect("game serialization cannot fail")
}

#[derive(Debug, Serialize, Deserialize)]
struct StrategiesDocument {
    schema_version: u32,
    /// `strategies[player][state][action]`
    strategies: Vec<Vec<Vec<f64>>>,
}

/// Parses a strategies file: one probability row per state per player, using
/// the same action indexing as the game file.
pub fn parse_strategies(text: &str) -> Result<Vec<StationaryStrategy>, GameError> {
    let doc: StrategiesDocument =
        serde_json::from_str(text).map_err(|e| GameError::Schema(e.to_string()))?;
    if doc.schema_version != SCHEMA_VERSION {
        return Err(GameError::Schema(format!(
            "unsupported schema_version {}",
            doc.schema_version
        )));
    }
    doc.strategies
        .into_iter()
        .map(StationaryStrategy::new)
        .collect()
}

pub fn serialize_strategies(strategies: &[StationaryStrategy]) -> String {
    let doc = StrategiesDocument {
        schema_version: SCHEMA_VERSION,
        strategies: strategies.iter().map(|s| s.rows().to_vec()).collect(),
    };
    serde_json::to_string_pretty(&doc).expect("strategy serialization cannot fail")
}
