//! Domain types for both game classes, validation and text-format ingestion.

mod builtin;
mod schema;
mod validate;

pub use builtin::{builtin_example, builtin_names};
pub use schema::{
    parse_game, parse_strategies, serialize_game, serialize_strategies, SCHEMA_VERSION,
};
pub use validate::{validate, SlaterStatus, UnichainProbe, ValidationReport};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GameError {
    #[error("schema error: {0}")]
    Schema(String),
    #[error("stochasticity error at {context}: row sums to {sum:.12}, not 1")]
    Stochasticity { context: String, sum: f64 },
    #[error("negative probability at {context}: {value:.3e}")]
    NegativeProbability { context: String, value: f64 },
    #[error("shape error: {0}")]
    Shape(String),
    #[error("invalid strategy: {0}")]
    Strategy(String),
    #[error("unknown built-in example \"{0}\"")]
    UnknownExample(String),
}

/// Cost criterion of a single-controller game.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    Average,
    Discounted { beta: f64 },
}

/// Flat enumeration of the state-action pairs of one player, with per-state
/// offsets. All LP builders address variables through this index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SaIndex {
    counts: Vec<usize>,
    offsets: Vec<usize>,
    total: usize,
}

impl SaIndex {
    pub fn new(counts: &[usize]) -> Self {
        let mut offsets = Vec::with_capacity(counts.len());
        let mut total = 0;
        for &c in counts {
            offsets.push(total);
            total += c;
        }
        SaIndex {
            counts: counts.to_vec(),
            offsets,
            total,
        }
    }

    pub fn len(&self) -> usize {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn num_states(&self) -> usize {
        self.counts.len()
    }

    pub fn count(&self, s: usize) -> usize {
        self.counts[s]
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn flat(&self, s: usize, a: usize) -> usize {
        debug_assert!(a < self.counts[s]);
        self.offsets[s] + a
    }

    pub fn unflat(&self, idx: usize) -> (usize, usize) {
        let s = match self.offsets.binary_search(&idx) {
            Ok(s) => s,
            Err(ins) => ins - 1,
        };
        // skip empty action sets
        let mut s = s;
        while self.counts[s] == 0 {
            s -= 1;
        }
        (s, idx - self.offsets[s])
    }

    /// Iterates `(flat, state, action)` triples in flat order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        (0..self.counts.len())
            .flat_map(move |s| (0..self.counts[s]).map(move |a| (self.flat(s, a), s, a)))
    }
}

/// A time-independent randomized decision rule: one probability row per state.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryStrategy {
    rows: Vec<Vec<f64>>,
}

impl StationaryStrategy {
    /// Validates and stores the rows. Entries may be negative only by
    /// rounding noise (>= -1e-12, clamped) and each row must sum to 1 within
    /// 1e-9; rows off by more than 1e-12 are renormalized so the stored
    /// strategy always satisfies the tight invariant.
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self, GameError> {
        let mut rows = rows;
        for (s, row) in rows.iter_mut().enumerate() {
            if row.is_empty() {
                return Err(GameError::Strategy(format!("state {s} has no actions")));
            }
            for p in row.iter_mut() {
                if !p.is_finite() || *p < -1e-12 {
                    return Err(GameError::Strategy(format!(
                        "state {s} has invalid probability {p}"
                    )));
                }
                if *p < 0.0 {
                    *p = 0.0;
                }
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(GameError::Strategy(format!(
                    "state {s} row sums to {sum}, not 1"
                )));
            }
            if (sum - 1.0).abs() > 1e-12 {
                for p in row.iter_mut() {
                    *p /= sum;
                }
            }
        }
        Ok(StationaryStrategy { rows })
    }

    pub fn uniform(counts: &[usize]) -> Self {
        StationaryStrategy {
            rows: counts.iter().map(|&c| vec![1.0 / c as f64; c]).collect(),
        }
    }

    /// Deterministic strategy choosing `choice[s]` at state `s`.
    pub fn deterministic(counts: &[usize], choice: &[usize]) -> Self {
        let rows = counts
            .iter()
            .zip(choice)
            .map(|(&c, &a)| {
                let mut row = vec![0.0; c];
                row[a] = 1.0;
                row
            })
            .collect();
        StationaryStrategy { rows }
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.rows[s]
    }

    pub fn prob(&self, s: usize, a: usize) -> f64 {
        self.rows[s][a]
    }

    pub fn num_states(&self) -> usize {
        self.rows.len()
    }

    /// Flattens along the given index (shape must match).
    pub fn flat(&self, idx: &SaIndex) -> Vec<f64> {
        let mut out = Vec::with_capacity(idx.len());
        for (_, s, a) in idx.pairs() {
            out.push(self.rows[s][a]);
        }
        out
    }

    pub fn max_abs_diff(&self, other: &StationaryStrategy) -> f64 {
        let mut m = 0.0f64;
        for (a, b) in self.rows.iter().zip(&other.rows) {
            for (x, y) in a.iter().zip(b) {
                m = m.max((x - y).abs());
            }
        }
        m
    }
}

/// Two-player single-controller game: player 2 owns the transition law,
/// player 1 pays subscription costs, player 2 carries realization
/// constraints whose costs may depend on player 1's actions.
#[derive(Debug, Clone)]
pub struct SingleControllerGame {
    pub(crate) states: Vec<String>,
    pub(crate) actions1: Vec<Vec<String>>,
    pub(crate) actions2: Vec<Vec<String>>,
    /// `cost1[s][a1][a2]`, `cost2[s][a1][a2]`
    pub(crate) cost1: Vec<Vec<Vec<f64>>>,
    pub(crate) cost2: Vec<Vec<Vec<f64>>>,
    /// `d1_sub[k][s][a1]`: subscription cost tables of player 1
    pub(crate) d1_sub: Vec<Vec<Vec<f64>>>,
    /// `d2[l][s][a1][a2]`: realization cost tensors of player 2
    pub(crate) d2: Vec<Vec<Vec<Vec<f64>>>>,
    /// `trans[s][a2][s2]`
    pub(crate) trans: Vec<Vec<Vec<f64>>>,
    pub(crate) xi1: Vec<f64>,
    pub(crate) xi2: Vec<f64>,
    pub(crate) gamma: Vec<f64>,
    pub(crate) criterion: Criterion,
    pub(crate) k1: SaIndex,
    pub(crate) k2: SaIndex,
}

fn check_distribution(row: &mut [f64], context: &str) -> Result<(), GameError> {
    for &p in row.iter() {
        if !p.is_finite() || p < -1e-12 {
            return Err(GameError::NegativeProbability {
                context: context.to_string(),
                value: p,
            });
        }
    }
    for p in row.iter_mut() {
        if *p < 0.0 {
            *p = 0.0;
        }
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(GameError::Stochasticity {
            context: context.to_string(),
            sum,
        });
    }
    if (sum - 1.0).abs() > 1e-12 {
        for p in row.iter_mut() {
            *p /= sum;
        }
    }
    Ok(())
}

impl SingleControllerGame {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        states: Vec<String>,
        actions1: Vec<Vec<String>>,
        actions2: Vec<Vec<String>>,
        cost1: Vec<Vec<Vec<f64>>>,
        cost2: Vec<Vec<Vec<f64>>>,
        d1_sub: Vec<Vec<Vec<f64>>>,
        d2: Vec<Vec<Vec<Vec<f64>>>>,
        mut trans: Vec<Vec<Vec<f64>>>,
        xi1: Vec<f64>,
        xi2: Vec<f64>,
        mut gamma: Vec<f64>,
        criterion: Criterion,
    ) -> Result<Self, GameError> {
        let ns = states.len();
        if ns == 0 {
            return Err(GameError::Shape("no states".into()));
        }
        if actions1.len() != ns || actions2.len() != ns {
            return Err(GameError::Shape(
                "action lists must cover every state".into(),
            ));
        }
        let c1: Vec<usize> = actions1.iter().map(|a| a.len()).collect();
        let c2: Vec<usize> = actions2.iter().map(|a| a.len()).collect();
        if c1.contains(&0) || c2.contains(&0) {
            return Err(GameError::Shape("empty action set".into()));
        }
        let check_tensor = |t: &Vec<Vec<Vec<f64>>>, what: &str| -> Result<(), GameError> {
            if t.len() != ns {
                return Err(GameError::Shape(format!("{what}: expected {ns} states")));
            }
            for s in 0..ns {
                if t[s].len() != c1[s] || t[s].iter().any(|r| r.len() != c2[s]) {
                    return Err(GameError::Shape(format!(
                        "{what}: state {s} must be {}x{}",
                        c1[s], c2[s]
                    )));
                }
            }
            Ok(())
        };
        check_tensor(&cost1, "cost1")?;
        check_tensor(&cost2, "cost2")?;
        for (l, t) in d2.iter().enumerate() {
            check_tensor(t, &format!("d2[{l}]"))?;
        }
        for (k, t) in d1_sub.iter().enumerate() {
            if t.len() != ns || t.iter().enumerate().any(|(s, r)| r.len() != c1[s]) {
                return Err(GameError::Shape(format!("d1_sub[{k}] shape mismatch")));
            }
        }
        if xi1.len() != d1_sub.len() || xi2.len() != d2.len() {
            return Err(GameError::Shape(
                "bound vectors must match constraint counts".into(),
            ));
        }
        if trans.len() != ns {
            return Err(GameError::Shape("trans must cover every state".into()));
        }
        for s in 0..ns {
            if trans[s].len() != c2[s] {
                return Err(GameError::Shape(format!(
                    "trans[{s}] must have one row per player-2 action"
                )));
            }
            for (a2, row) in trans[s].iter_mut().enumerate() {
                if row.len() != ns {
                    return Err(GameError::Shape(format!("trans[{s}][{a2}] length")));
                }
                check_distribution(row, &format!("trans[s={s},a2={a2}]"))?;
            }
        }
        if gamma.len() != ns {
            return Err(GameError::Shape("gamma length".into()));
        }
        check_distribution(&mut gamma, "gamma")?;
        if let Criterion::Discounted { beta } = criterion {
            if !(0.0..1.0).contains(&beta) {
                return Err(GameError::Schema(format!(
                    "discount factor must be in [0,1), got {beta}"
                )));
            }
        }
        let all_finite = cost1
            .iter()
            .chain(&cost2)
            .chain(d2.iter().flatten())
            .flatten()
            .flatten()
            .chain(d1_sub.iter().flatten().flatten())
            .chain(&xi1)
            .chain(&xi2)
            .all(|v| v.is_finite());
        if !all_finite {
            return Err(GameError::Schema("non-finite cost or bound".into()));
        }
        Ok(SingleControllerGame {
            k1: SaIndex::new(&c1),
            k2: SaIndex::new(&c2),
            states,
            actions1,
            actions2,
            cost1,
            cost2,
            d1_sub,
            d2,
            trans,
            xi1,
            xi2,
            gamma,
            criterion,
        })
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn state_names(&self) -> &[String] {
        &self.states
    }

    pub fn k1(&self) -> &SaIndex {
        &self.k1
    }

    pub fn k2(&self) -> &SaIndex {
        &self.k2
    }

    pub fn n1(&self) -> usize {
        self.xi1.len()
    }

    pub fn n2(&self) -> usize {
        self.xi2.len()
    }

    pub fn xi1(&self) -> &[f64] {
        &self.xi1
    }

    pub fn xi2(&self) -> &[f64] {
        &self.xi2
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    pub fn criterion(&self) -> Criterion {
        self.criterion
    }

    pub fn trans(&self) -> &[Vec<Vec<f64>>] {
        &self.trans
    }

    pub fn cost(&self, player: usize) -> &[Vec<Vec<f64>>] {
        match player {
            0 => &self.cost1,
            1 => &self.cost2,
            _ => panic!("player out of range"),
        }
    }

    pub fn d1_sub(&self) -> &[Vec<Vec<f64>>] {
        &self.d1_sub
    }

    pub fn d2(&self) -> &[Vec<Vec<Vec<f64>>>] {
        &self.d2
    }

    /// Returns a copy with a different criterion (used by CLI overrides).
    pub fn with_criterion(&self, criterion: Criterion) -> Result<Self, GameError> {
        if let Criterion::Discounted { beta } = criterion {
            if !(0.0..1.0).contains(&beta) {
                return Err(GameError::Schema(format!(
                    "discount factor must be in [0,1), got {beta}"
                )));
            }
        }
        let mut g = self.clone();
        g.criterion = criterion;
        Ok(g)
    }

    /// Returns a copy with new constraint bounds (parameter exploration).
    pub fn with_bounds(&self, xi1: Vec<f64>, xi2: Vec<f64>) -> Result<Self, GameError> {
        if xi1.len() != self.xi1.len() || xi2.len() != self.xi2.len() {
            return Err(GameError::Shape("bound vector length".into()));
        }
        let mut g = self.clone();
        g.xi1 = xi1;
        g.xi2 = xi2;
        Ok(g)
    }
}

/// One player's private Markov chain in an independent-chain game.
#[derive(Debug, Clone)]
pub struct PlayerChain {
    pub(crate) states: Vec<String>,
    pub(crate) actions: Vec<Vec<String>>,
    /// `trans[s][a][s2]`
    pub(crate) trans: Vec<Vec<Vec<f64>>>,
    pub(crate) gamma: Vec<f64>,
    pub(crate) k: SaIndex,
}

impl PlayerChain {
    pub fn new(
        states: Vec<String>,
        actions: Vec<Vec<String>>,
        mut trans: Vec<Vec<Vec<f64>>>,
        mut gamma: Vec<f64>,
    ) -> Result<Self, GameError> {
        let ns = states.len();
        if ns == 0 {
            return Err(GameError::Shape("chain has no states".into()));
        }
        if actions.len() != ns || actions.iter().any(|a| a.is_empty()) {
            return Err(GameError::Shape("chain action sets".into()));
        }
        let counts: Vec<usize> = actions.iter().map(|a| a.len()).collect();
        if trans.len() != ns {
            return Err(GameError::Shape("chain trans states".into()));
        }
        for s in 0..ns {
            if trans[s].len() != counts[s] {
                return Err(GameError::Shape(format!("chain trans[{s}] actions")));
            }
            for (a, row) in trans[s].iter_mut().enumerate() {
                if row.len() != ns {
                    return Err(GameError::Shape(format!("chain trans[{s}][{a}] length")));
                }
                check_distribution(row, &format!("chain trans[s={s},a={a}]"))?;
            }
        }
        if gamma.len() != ns {
            return Err(GameError::Shape("chain gamma length".into()));
        }
        check_distribution(&mut gamma, "chain gamma")?;
        Ok(PlayerChain {
            k: SaIndex::new(&counts),
            states,
            actions,
            trans,
            gamma,
        })
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn k(&self) -> &SaIndex {
        &self.k
    }

    pub fn trans(&self) -> &[Vec<Vec<f64>>] {
        &self.trans
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }
}

/// Dense tensor over the product of per-player flat state-action spaces.
/// `data` is row-major: the last player's index varies fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTensor {
    dims: Vec<usize>,
    data: Vec<f64>,
}

impl JointTensor {
    pub fn new(dims: Vec<usize>, data: Vec<f64>) -> Result<Self, GameError> {
        let expect: usize = dims.iter().product();
        if data.len() != expect {
            return Err(GameError::Shape(format!(
                "joint tensor needs {expect} entries, got {}",
                data.len()
            )));
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(GameError::Schema("non-finite joint tensor entry".into()));
        }
        Ok(JointTensor { dims, data })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        debug_assert_eq!(idx.len(), self.dims.len());
        let mut flat = 0;
        for (i, &k) in idx.iter().enumerate() {
            debug_assert!(k < self.dims[i]);
            flat = flat * self.dims[i] + k;
        }
        self.data[flat]
    }

    /// Contracts all axes except `keep` against the given per-player weight
    /// vectors: `out[k] = sum over others of tensor * prod_j w[j][k_j]`.
    pub fn contract_except(&self, keep: usize, weights: &[&[f64]]) -> Vec<f64> {
        let n = self.dims.len();
        debug_assert_eq!(weights.len(), n);
        let mut out = vec![0.0; self.dims[keep]];
        let mut idx = vec![0usize; n];
        for (flat, &v) in self.data.iter().enumerate() {
            // decode flat -> idx
            let mut rem = flat;
            for i in (0..n).rev() {
                idx[i] = rem % self.dims[i];
                rem /= self.dims[i];
            }
            let mut w = v;
            for j in 0..n {
                if j != keep {
                    w *= weights[j][idx[j]];
                }
            }
            out[idx[keep]] += w;
        }
        out
    }

    /// Full contraction against per-player weight vectors.
    pub fn contract_all(&self, weights: &[&[f64]]) -> f64 {
        let n = self.dims.len();
        let mut idx = vec![0usize; n];
        let mut total = 0.0;
        for (flat, &v) in self.data.iter().enumerate() {
            let mut rem = flat;
            for i in (0..n).rev() {
                idx[i] = rem % self.dims[i];
                rem /= self.dims[i];
            }
            let mut w = v;
            for (j, wv) in weights.iter().enumerate() {
                w *= wv[idx[j]];
            }
            total += w;
        }
        total
    }
}

/// N-player average-cost game on independent chains with jointly-coupled
/// cost tensors.
#[derive(Debug, Clone)]
pub struct IndependentGame {
    pub(crate) chains: Vec<PlayerChain>,
    /// main cost tensor per player
    pub(crate) cost: Vec<JointTensor>,
    /// constraint cost tensors per player
    pub(crate) d: Vec<Vec<JointTensor>>,
    pub(crate) xi: Vec<Vec<f64>>,
}

impl IndependentGame {
    pub fn new(
        chains: Vec<PlayerChain>,
        cost: Vec<JointTensor>,
        d: Vec<Vec<JointTensor>>,
        xi: Vec<Vec<f64>>,
    ) -> Result<Self, GameError> {
        let n = chains.len();
        if n == 0 {
            return Err(GameError::Shape("no players".into()));
        }
        if cost.len() != n || d.len() != n || xi.len() != n {
            return Err(GameError::Shape(
                "cost/d/xi must have one entry per player".into(),
            ));
        }
        let dims: Vec<usize> = chains.iter().map(|c| c.k.len()).collect();
        for (i, t) in cost.iter().enumerate() {
            if t.dims() != dims {
                return Err(GameError::Shape(format!("cost[{i}] dims mismatch")));
            }
        }
        for i in 0..n {
            if d[i].len() != xi[i].len() {
                return Err(GameError::Shape(format!(
                    "player {i}: {} constraint tensors vs {} bounds",
                    d[i].len(),
                    xi[i].len()
                )));
            }
            for (k, t) in d[i].iter().enumerate() {
                if t.dims() != dims {
                    return Err(GameError::Shape(format!("d[{i}][{k}] dims mismatch")));
                }
            }
        }
        Ok(IndependentGame {
            chains,
            cost,
            d,
            xi,
        })
    }

    pub fn num_players(&self) -> usize {
        self.chains.len()
    }

    pub fn chain(&self, i: usize) -> &PlayerChain {
        &self.chains[i]
    }

    pub fn chains(&self) -> &[PlayerChain] {
        &self.chains
    }

    pub fn cost(&self, i: usize) -> &JointTensor {
        &self.cost[i]
    }

    pub fn d(&self, i: usize) -> &[JointTensor] {
        &self.d[i]
    }

    pub fn xi(&self, i: usize) -> &[f64] {
        &self.xi[i]
    }

    pub fn n(&self, i: usize) -> usize {
        self.xi[i].len()
    }

    pub fn with_bounds(&self, xi: Vec<Vec<f64>>) -> Result<Self, GameError> {
        if xi.len() != self.xi.len() || xi.iter().zip(&self.xi).any(|(a, b)| a.len() != b.len()) {
            return Err(GameError::Shape("bound vector length".into()));
        }
        let mut g = self.clone();
        g.xi = xi;
        Ok(g)
    }
}

/// Either game class.
#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)]
pub enum Game {
    SingleController(SingleControllerGame),
    Independent(IndependentGame),
}

impl Game {
    pub fn num_players(&self) -> usize {
        match self {
            Game::SingleController(_) => 2,
            Game::Independent(g) => g.num_players(),
        }
    }

    pub fn criterion(&self) -> Criterion {
        match self {
            Game::SingleController(g) => g.criterion,
            Game::Independent(_) => Criterion::Average,
        }
    }

    /// Per-state action counts for the given player.
    pub fn action_counts(&self, player: usize) -> Vec<usize> {
        match self {
            Game::SingleController(g) => {
                let idx = if player == 0 { &g.k1 } else { &g.k2 };
                idx.counts().to_vec()
            }
            Game::Independent(g) => g.chain(player).k.counts().to_vec(),
        }
    }

    pub fn as_single_controller(&self) -> Option<&SingleControllerGame> {
        match self {
            Game::SingleController(g) => Some(g),
            _ => None,
        }
    }

    pub fn as_independent(&self) -> Option<&IndependentGame> {
        match self {
            Game::Independent(g) => Some(g),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sa_index_flat_unflat() {
        let idx = SaIndex::new(&[2, 3, 1]);
        assert_eq!(idx.len(), 6);
        assert_eq!(idx.flat(1, 2), 4);
        assert_eq!(idx.unflat(4), (1, 2));
        assert_eq!(idx.unflat(5), (2, 0));
        for (flat, s, a) in idx.pairs() {
            assert_eq!(idx.flat(s, a), flat);
            assert_eq!(idx.unflat(flat), (s, a));
        }
    }

    #[test]
    fn strategy_validation() {
        assert!(StationaryStrategy::new(vec![vec![0.5, 0.5]]).is_ok());
        assert!(StationaryStrategy::new(vec![vec![0.5, 0.4]]).is_err());
        assert!(StationaryStrategy::new(vec![vec![1.1, -0.1]]).is_err());
        let s = StationaryStrategy::new(vec![vec![0.5 + 1e-10, 0.5]]).unwrap();
        let sum: f64 = s.row(0).iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn joint_tensor_contract() {
        // 2x2 tensor c[k1][k2] = k1*10 + k2
        let t = JointTensor::new(vec![2, 2], vec![0.0, 1.0, 10.0, 11.0]).unwrap();
        assert_eq!(t.get(&[1, 0]), 10.0);
        let w1 = [0.25, 0.75];
        let w2 = [0.5, 0.5];
        let full = t.contract_all(&[&w1, &w2]);
        let by_hand = 0.25 * (0.5 * 0.0 + 0.5 * 1.0) + 0.75 * (0.5 * 10.0 + 0.5 * 11.0);
        assert!((full - by_hand).abs() < 1e-12);
        let marg = t.contract_except(0, &[&w1, &w2]);
        assert!((marg[0] - 0.5).abs() < 1e-12);
        assert!((marg[1] - 10.5).abs() < 1e-12);
    }
}
