//! Support-pattern polish.
//!
//! Given guessed supports for every player's strategy/occupation block and
//! guessed active constraint sets, the equilibrium conditions (primal
//! feasibility, dual feasibility, and complementary slackness on the guess)
//! become one linear feasibility program: optimality rows are forced to
//! equality exactly on the guessed supports, multipliers of inactive
//! constraints are pinned at zero. Any feasible point is an exact
//! equilibrium candidate, which the caller certifies independently.
//!
//! The cross terms between a multiplier and another player's strategy are
//! linear whenever the constraint costs are decoupled; in the coupled case
//! those spots are frozen at the candidate's values, which keeps the solve
//! linear and leaves soundness to the verification step.

use crate::chain::{self, OccupationKind, OccupationMeasure};
use crate::game::{Criterion, Game, IndependentGame, SingleControllerGame, StationaryStrategy};
use crate::lp::{solve_lp, LinearProgram, LpStatus, Relation};
use crate::solver::SolverError;

#[derive(Debug, Clone, PartialEq)]
struct Guess {
    /// per player: support mask over the player's flat state-action pairs
    /// (strategy pairs for player 1 of a single-controller game, occupation
    /// pairs for controller-side players)
    supports: Vec<Vec<bool>>,
    /// per player: which own constraints are treated as active
    active: Vec<Vec<bool>>,
}

fn support_mask(values: &[f64], tol: f64) -> Vec<bool> {
    values.iter().map(|&v| v > tol).collect()
}

/// Candidate-driven guesses over a few thresholds.
fn guesses_from_candidate(game: &Game, profile: &[StationaryStrategy]) -> Vec<Guess> {
    let report = match chain::expected_costs(game, profile) {
        Ok(r) => r,
        Err(_) => return Vec::new(),
    };
    let blocks: Vec<Vec<f64>> = match game {
        Game::SingleController(g) => {
            let f = profile[0].flat(g.k1());
            let Ok(x) = chain::sc_occupation(g, &profile[1]) else {
                return Vec::new();
            };
            vec![f, x.entries]
        }
        Game::Independent(g) => {
            let mut out = Vec::new();
            for i in 0..g.num_players() {
                match chain::avg_occupation(g.chain(i).trans(), &profile[i]) {
                    Ok(x) => out.push(x.entries),
                    Err(_) => return Vec::new(),
                }
            }
            out
        }
    };
    let mut guesses = Vec::new();
    for (tol_supp, tol_act) in [(1e-6, 1e-6), (1e-4, 1e-4), (1e-2, 1e-2)] {
        let supports = blocks.iter().map(|b| support_mask(b, tol_supp)).collect();
        let active = report
            .bounds
            .iter()
            .map(|bs| {
                bs.iter()
                    .map(|b| b.slack.abs() <= tol_act * (1.0 + b.bound.abs()))
                    .collect()
            })
            .collect();
        let guess = Guess { supports, active };
        if !guesses.contains(&guess) {
            guesses.push(guess);
        }
    }
    guesses
}

/// Turns approximate strategies into exact equilibrium candidates.
pub(crate) fn polish_candidates(
    game: &Game,
    profile: &[StationaryStrategy],
) -> Vec<Vec<StationaryStrategy>> {
    let mut out = Vec::new();
    for guess in guesses_from_candidate(game, profile) {
        if let Some(p) = polish_one(game, profile, &guess) {
            out.push(p);
        }
    }
    out
}

/// Exhaustive support/activity enumeration for desk-scale games; returns
/// every pattern whose linear system is feasible. Patterns beyond `budget`
/// are not attempted.
pub(crate) fn enumerate_support_equilibria(
    game: &Game,
    budget: usize,
) -> Vec<Vec<StationaryStrategy>> {
    let uniform: Vec<StationaryStrategy> = (0..game.num_players())
        .map(|p| StationaryStrategy::uniform(&game.action_counts(p)))
        .collect();
    let (support_domains, constraint_counts): (Vec<Vec<usize>>, Vec<usize>) = match game {
        Game::SingleController(g) => (
            vec![g.k1().counts().to_vec(), g.k2().counts().to_vec()],
            vec![g.n1(), g.n2()],
        ),
        Game::Independent(g) => (
            (0..g.num_players())
                .map(|i| g.chain(i).k().counts().to_vec())
                .collect(),
            (0..g.num_players()).map(|i| g.n(i)).collect(),
        ),
    };

    // pattern count: strategy blocks need a nonempty subset per state,
    // occupation blocks allow empty states (transient ones carry no mass)
    let mut total: u128 = 1;
    for (player, counts) in support_domains.iter().enumerate() {
        for &c in counts {
            let per_state = if is_strategy_block(game, player) {
                (1u128 << c) - 1
            } else {
                1u128 << c
            };
            total = total.saturating_mul(per_state);
        }
    }
    for &n in &constraint_counts {
        total = total.saturating_mul(1u128 << n);
    }
    if total > budget as u128 {
        return Vec::new();
    }

    let mut out = Vec::new();
    let mut pattern = Pattern::first(game, &support_domains, &constraint_counts);
    loop {
        if let Some(guess) = pattern.guess() {
            if let Some(p) = polish_one(game, &uniform, &guess) {
                out.push(p);
            }
        }
        if !pattern.advance() {
            break;
        }
    }
    out
}

fn is_strategy_block(game: &Game, player: usize) -> bool {
    matches!(game, Game::SingleController(_)) && player == 0
}

/// Mixed-radix iterator over support/activity bit patterns.
struct Pattern<'a> {
    game: &'a Game,
    domains: &'a [Vec<usize>],
    constraint_counts: &'a [usize],
    /// per player per state: subset bits of the action set
    bits: Vec<Vec<u32>>,
    /// per player: active-set bits
    act: Vec<u32>,
}

impl<'a> Pattern<'a> {
    fn first(game: &'a Game, domains: &'a [Vec<usize>], constraint_counts: &'a [usize]) -> Self {
        Pattern {
            game,
            domains,
            constraint_counts,
            bits: domains.iter().map(|d| vec![0u32; d.len()]).collect(),
            act: vec![0u32; constraint_counts.len()],
        }
    }

    fn guess(&self) -> Option<Guess> {
        let mut supports = Vec::with_capacity(self.domains.len());
        for (player, counts) in self.domains.iter().enumerate() {
            let mut mask = Vec::new();
            let mut any = false;
            for (s, &c) in counts.iter().enumerate() {
                let b = self.bits[player][s];
                if is_strategy_block(self.game, player) && b == 0 {
                    return None; // strategy rows need support in every state
                }
                for a in 0..c {
                    let on = b & (1 << a) != 0;
                    any |= on;
                    mask.push(on);
                }
            }
            if !any {
                return None; // occupation blocks need mass somewhere
            }
            supports.push(mask);
        }
        let active = self
            .constraint_counts
            .iter()
            .enumerate()
            .map(|(p, &n)| (0..n).map(|k| self.act[p] & (1 << k) != 0).collect())
            .collect();
        Some(Guess { supports, active })
    }

    fn advance(&mut self) -> bool {
        for (p, &n) in self.constraint_counts.iter().enumerate() {
            if self.act[p] + 1 < (1 << n) {
                self.act[p] += 1;
                return true;
            }
            self.act[p] = 0;
        }
        for (player, counts) in self.domains.iter().enumerate() {
            for (s, &c) in counts.iter().enumerate() {
                if self.bits[player][s] + 1 < (1 << c) {
                    self.bits[player][s] += 1;
                    return true;
                }
                self.bits[player][s] = 0;
            }
        }
        false
    }
}

fn polish_one(
    game: &Game,
    candidate: &[StationaryStrategy],
    guess: &Guess,
) -> Option<Vec<StationaryStrategy>> {
    match game {
        Game::SingleController(g) => polish_sc(g, candidate, guess),
        Game::Independent(g) => polish_indep(g, candidate, guess),
    }
}

fn polish_sc(
    g: &SingleControllerGame,
    candidate: &[StationaryStrategy],
    guess: &Guess,
) -> Option<Vec<StationaryStrategy>> {
    let ns = g.num_states();
    let k1 = g.k1();
    let k2 = g.k2();
    let (n1, n2) = (g.n1(), g.n2());
    let (beta, with_v) = match g.criterion() {
        Criterion::Average => (1.0, true),
        Criterion::Discounted { beta } => (beta, false),
    };
    let cand_f = candidate[0].flat(k1);
    // layout: [v] u z f x d1 d2
    let vv = 0usize;
    let u0 = usize::from(with_v);
    let z0 = u0 + ns;
    let f0 = z0 + ns;
    let x0 = f0 + k1.len();
    let d1 = x0 + k2.len();
    let d2 = d1 + n1;
    let nvars = d2 + n2;
    let mut lp = LinearProgram::minimize(vec![0.0; nvars]);
    if with_v {
        lp.set_free(vv);
    }
    for j in 0..2 * ns {
        lp.set_free(u0 + j); // u and z
    }

    // player-1 block
    for s in 0..ns {
        let mut coeffs = vec![0.0; nvars];
        for a in 0..k1.count(s) {
            coeffs[f0 + k1.flat(s, a)] = 1.0;
        }
        lp.add_row(format!("simplex[{s}]"), coeffs, Relation::Eq, 1.0);
    }
    for (flat, _, _) in k1.pairs() {
        if !guess.supports[0][flat] {
            let mut coeffs = vec![0.0; nvars];
            coeffs[f0 + flat] = 1.0;
            lp.add_row(format!("f0[{flat}]"), coeffs, Relation::Eq, 0.0);
        }
    }
    for k in 0..n1 {
        let mut coeffs = vec![0.0; nvars];
        for (flat, s, a1) in k1.pairs() {
            coeffs[f0 + flat] = g.d1_sub()[k][s][a1];
        }
        let rel = if guess.active[0][k] {
            Relation::Eq
        } else {
            Relation::Le
        };
        lp.add_row(format!("sub[{k}]"), coeffs, rel, g.xi1()[k]);
        if !guess.active[0][k] {
            let mut pin = vec![0.0; nvars];
            pin[d1 + k] = 1.0;
            lp.add_row(format!("d1pin[{k}]"), pin, Relation::Eq, 0.0);
        }
    }

    // occupation block
    for s2 in 0..ns {
        let mut coeffs = vec![0.0; nvars];
        for (flat, s, a2) in k2.pairs() {
            let delta = if s == s2 { 1.0 } else { 0.0 };
            coeffs[x0 + flat] = delta - beta * g.trans()[s][a2][s2];
        }
        let rhs = if with_v {
            0.0
        } else {
            (1.0 - beta) * g.gamma()[s2]
        };
        lp.add_row(format!("balance[{s2}]"), coeffs, Relation::Eq, rhs);
    }
    if with_v {
        let mut coeffs = vec![0.0; nvars];
        for flat in 0..k2.len() {
            coeffs[x0 + flat] = 1.0;
        }
        lp.add_row("normalize", coeffs, Relation::Eq, 1.0);
    }
    for (flat, _, _) in k2.pairs() {
        if !guess.supports[1][flat] {
            let mut coeffs = vec![0.0; nvars];
            coeffs[x0 + flat] = 1.0;
            lp.add_row(format!("x0[{flat}]"), coeffs, Relation::Eq, 0.0);
        }
    }
    // realization rows, linearized at the candidate when coupled
    let d2_coeff = |l: usize, s: usize, a2: usize| -> f64 {
        let block = &g.d2()[l][s];
        let coupled = (0..k1.count(s)).any(|a1| (block[a1][a2] - block[0][a2]).abs() > 1e-12);
        if coupled {
            (0..k1.count(s))
                .map(|a1| block[a1][a2] * cand_f[k1.flat(s, a1)])
                .sum()
        } else {
            block[0][a2]
        }
    };
    for l in 0..n2 {
        let mut coeffs = vec![0.0; nvars];
        for (flat, s, a2) in k2.pairs() {
            coeffs[x0 + flat] = d2_coeff(l, s, a2);
        }
        let rel = if guess.active[1][l] {
            Relation::Eq
        } else {
            Relation::Le
        };
        lp.add_row(format!("real[{l}]"), coeffs, rel, g.xi2()[l]);
        if !guess.active[1][l] {
            let mut pin = vec![0.0; nvars];
            pin[d2 + l] = 1.0;
            lp.add_row(format!("d2pin[{l}]"), pin, Relation::Eq, 0.0);
        }
    }

    // player-1 optimality rows: tight exactly on the guessed support
    for (flat, s, a1) in k1.pairs() {
        let mut coeffs = vec![0.0; nvars];
        coeffs[z0 + s] = 1.0;
        for a2 in 0..k2.count(s) {
            coeffs[x0 + k2.flat(s, a2)] = -g.cost(0)[s][a1][a2];
        }
        for k in 0..n1 {
            coeffs[d1 + k] = -g.d1_sub()[k][s][a1];
        }
        let rel = if guess.supports[0][flat] {
            Relation::Eq
        } else {
            Relation::Le
        };
        lp.add_row(format!("opt1[{flat}]"), coeffs, rel, 0.0);
    }
    // controller optimality rows
    for (flat, s, a2) in k2.pairs() {
        let mut coeffs = vec![0.0; nvars];
        if with_v {
            coeffs[vv] = 1.0;
        }
        coeffs[u0 + s] += 1.0;
        for s2 in 0..ns {
            coeffs[u0 + s2] -= beta * g.trans()[s][a2][s2];
        }
        for a1 in 0..k1.count(s) {
            coeffs[f0 + k1.flat(s, a1)] = -g.cost(1)[s][a1][a2];
        }
        for l in 0..n2 {
            coeffs[d2 + l] = -d2_coeff(l, s, a2);
        }
        let rel = if guess.supports[1][flat] {
            Relation::Eq
        } else {
            Relation::Le
        };
        lp.add_row(format!("opt2[{flat}]"), coeffs, rel, 0.0);
    }

    let sol = solve_lp(&lp).ok()?;
    if sol.status != LpStatus::Optimal {
        return None;
    }
    let f_rows: Vec<Vec<f64>> = (0..ns)
        .map(|s| {
            (0..k1.count(s))
                .map(|a| sol.primal[f0 + k1.flat(s, a)].max(0.0))
                .collect()
        })
        .collect();
    let f = StationaryStrategy::new(f_rows).ok()?;
    let x = OccupationMeasure {
        entries: sol.primal[x0..x0 + k2.len()].to_vec(),
        kind: match g.criterion() {
            Criterion::Average => OccupationKind::Average,
            Criterion::Discounted { beta } => OccupationKind::Discounted {
                beta,
                gamma: g.gamma().to_vec(),
            },
        },
        idx: k2.clone(),
    };
    Some(vec![f, chain::recover_strategy(&x)])
}

fn polish_indep(
    g: &IndependentGame,
    candidate: &[StationaryStrategy],
    guess: &Guess,
) -> Option<Vec<StationaryStrategy>> {
    let n = g.num_players();
    // candidate occupations for linearizing genuinely coupled spots
    let cand_occ: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            chain::avg_occupation(g.chain(i).trans(), &candidate[i])
                .map(|x| x.entries)
                .unwrap_or_else(|_| vec![0.0; g.chain(i).k().len()])
        })
        .collect();

    // layout per player: v | u | x | delta
    let mut v_at = Vec::new();
    let mut u_at = Vec::new();
    let mut x_at = Vec::new();
    let mut d_at = Vec::new();
    let mut nvars = 0usize;
    for i in 0..n {
        v_at.push(nvars);
        nvars += 1;
        u_at.push(nvars);
        nvars += g.chain(i).num_states();
        x_at.push(nvars);
        nvars += g.chain(i).k().len();
        d_at.push(nvars);
        nvars += g.n(i);
    }
    let mut lp = LinearProgram::minimize(vec![0.0; nvars]);
    for i in 0..n {
        lp.set_free(v_at[i]);
        for s in 0..g.chain(i).num_states() {
            lp.set_free(u_at[i] + s);
        }
    }

    let dims: Vec<usize> = (0..n).map(|i| g.chain(i).k().len()).collect();
    // marginal weight of tensor `t` on player i's own coordinate, through
    // either the LP variables of the single other player (exact, n == 2) or
    // the candidate occupations (linearized)
    for i in 0..n {
        let chain_i = g.chain(i);
        let k = chain_i.k();
        let ns = chain_i.num_states();
        for s2 in 0..ns {
            let mut coeffs = vec![0.0; nvars];
            for (flat, s, a) in k.pairs() {
                let delta = if s == s2 { 1.0 } else { 0.0 };
                coeffs[x_at[i] + flat] = delta - chain_i.trans()[s][a][s2];
            }
            lp.add_row(format!("balance{i}[{s2}]"), coeffs, Relation::Eq, 0.0);
        }
        let mut coeffs = vec![0.0; nvars];
        for flat in 0..k.len() {
            coeffs[x_at[i] + flat] = 1.0;
        }
        lp.add_row(format!("normalize{i}"), coeffs, Relation::Eq, 1.0);
        for flat in 0..k.len() {
            if !guess.supports[i][flat] {
                let mut coeffs = vec![0.0; nvars];
                coeffs[x_at[i] + flat] = 1.0;
                lp.add_row(format!("x0_{i}[{flat}]"), coeffs, Relation::Eq, 0.0);
            }
        }
        // own realization rows; own-coordinate coefficients when decoupled,
        // candidate-weighted otherwise
        for c in 0..g.n(i) {
            let tensor = &g.d(i)[c];
            let mut coeffs = vec![0.0; nvars];
            for own in 0..dims[i] {
                let mut weights: Vec<&[f64]> = (0..n).map(|j| cand_occ[j].as_slice()).collect();
                let own_unit: Vec<f64> = (0..dims[i])
                    .map(|m| if m == own { 1.0 } else { 0.0 })
                    .collect();
                weights[i] = &own_unit;
                let coupled = is_coupled(tensor, i, own);
                coeffs[x_at[i] + own] = if coupled {
                    tensor.contract_all(&weights)
                } else {
                    let mut base = vec![0usize; n];
                    base[i] = own;
                    tensor.get(&base)
                };
            }
            let rel = if guess.active[i][c] {
                Relation::Eq
            } else {
                Relation::Le
            };
            lp.add_row(format!("real{i}[{c}]"), coeffs, rel, g.xi(i)[c]);
            if !guess.active[i][c] {
                let mut pin = vec![0.0; nvars];
                pin[d_at[i] + c] = 1.0;
                lp.add_row(format!("dpin{i}[{c}]"), pin, Relation::Eq, 0.0);
            }
        }
        // optimality rows; cross-cost terms stay exact LP variables with two
        // players, and are frozen at the candidate for more (verification
        // catches any drift)
        for (flat, s, a) in k.pairs() {
            let mut coeffs = vec![0.0; nvars];
            coeffs[v_at[i]] = 1.0;
            coeffs[u_at[i] + s] += 1.0;
            for s2 in 0..ns {
                coeffs[u_at[i] + s2] -= chain_i.trans()[s][a][s2];
            }
            let own_unit: Vec<f64> = (0..dims[i])
                .map(|m| if m == flat { 1.0 } else { 0.0 })
                .collect();
            let frozen = |t: &crate::game::JointTensor| -> f64 {
                let mut weights: Vec<&[f64]> =
                    (0..n).map(|j| cand_occ[j].as_slice()).collect();
                weights[i] = &own_unit;
                t.contract_all(&weights)
            };
            let mut rhs = 0.0;
            if n == 2 {
                let other = 1 - i;
                for kother in 0..dims[other] {
                    let idx = if i == 0 {
                        [flat, kother]
                    } else {
                        [kother, flat]
                    };
                    coeffs[x_at[other] + kother] -= g.cost(i).get(&idx);
                }
            } else {
                rhs = frozen(g.cost(i));
            }
            for kc in 0..g.n(i) {
                let tensor = &g.d(i)[kc];
                coeffs[d_at[i] + kc] = if is_coupled(tensor, i, flat) {
                    -frozen(tensor)
                } else {
                    let mut base = vec![0usize; n];
                    base[i] = flat;
                    -tensor.get(&base)
                };
            }
            let rel = if guess.supports[i][flat] {
                Relation::Eq
            } else {
                Relation::Le
            };
            lp.add_row(format!("opt{i}[{flat}]"), coeffs, rel, rhs);
        }
    }

    let sol = solve_lp(&lp).ok()?;
    if sol.status != LpStatus::Optimal {
        return None;
    }
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let k = g.chain(i).k();
        let x = OccupationMeasure {
            entries: sol.primal[x_at[i]..x_at[i] + k.len()].to_vec(),
            kind: OccupationKind::Average,
            idx: k.clone(),
        };
        out.push(chain::recover_strategy(&x));
    }
    Some(out)
}

/// Does the tensor vary across opponents' coordinates at the given own
/// coordinate?
fn is_coupled(tensor: &crate::game::JointTensor, own_axis: usize, own: usize) -> bool {
    let dims = tensor.dims().to_vec();
    let n = dims.len();
    let mut base = vec![0usize; n];
    base[own_axis] = own;
    let reference = tensor.get(&base);
    let mut idx = vec![0usize; n];
    for flat in 0..tensor.data().len() {
        let mut rem = flat;
        for j in (0..n).rev() {
            idx[j] = rem % dims[j];
            rem /= dims[j];
        }
        if idx[own_axis] == own && (tensor.data()[flat] - reference).abs() > 1e-12 {
            return true;
        }
    }
    false
}

/// Refines an approximate equilibrium (e.g. a rounded reference point) to
/// full precision by support polish, returning the first candidate that
/// certifies tightly.
pub fn refine_equilibrium(
    game: &Game,
    approx: &[StationaryStrategy],
) -> Result<Vec<StationaryStrategy>, SolverError> {
    let mut best: Option<(f64, Vec<StationaryStrategy>)> = None;
    for cand in polish_candidates(game, approx) {
        if let Ok(cert) = super::certify(game, &cand, super::GAP_TOLERANCE, 1e-6) {
            if matches!(cert.verdict, super::Verdict::Certified) {
                let key = cert.objective_value;
                if best.as_ref().is_none_or(|(k, _)| key < *k) {
                    best = Some((key, cand));
                }
            }
        }
    }
    best.map(|(_, p)| p).ok_or(SolverError::Unsupported(
        "no exact equilibrium found near the supplied point".into(),
    ))
}
