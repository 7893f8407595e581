//! Program assembly for both game classes.
//!
//! The single-controller programs share one parameterized builder: the
//! average-cost program is the `beta = 1` instance with the scalar dual
//! value and the normalization row, the discounted one drops both and keeps
//! the `(1-beta) gamma' u` objective. The unifying program keeps everything.

use super::{
    canonicalize, Family, MathProgram, MlRow, MpError, ProgramKind, Term, VarKind, VariableCatalog,
};
use crate::game::{Criterion, Game, IndependentGame, SingleControllerGame};
use crate::lp::Relation;

struct ScLayout {
    v: Option<usize>,
    u0: usize,
    z0: usize,
    f0: usize,
    x0: usize,
    d1: usize,
    d2: usize,
}

fn sc_catalog(g: &SingleControllerGame, with_v: bool) -> (VariableCatalog, ScLayout) {
    let ns = g.num_states();
    let mut cat = VariableCatalog::default();
    let v = with_v.then(|| cat.push("v".into(), VarKind::V { player: 1 }));
    let u0 = cat.len();
    for s in 0..ns {
        cat.push(
            format!("u[{}]", s + 1),
            VarKind::U {
                player: 1,
                state: s,
            },
        );
    }
    let z0 = cat.len();
    for s in 0..ns {
        cat.push(format!("z[{}]", s + 1), VarKind::Z { state: s });
    }
    let f0 = cat.len();
    for (flat, s, a1) in g.k1().pairs() {
        cat.push(format!("f[{},{}]", s + 1, a1 + 1), VarKind::F { flat });
    }
    let x0 = cat.len();
    for (flat, s, a2) in g.k2().pairs() {
        cat.push(
            format!("x[{},{}]", s + 1, a2 + 1),
            VarKind::X { player: 1, flat },
        );
    }
    let d1 = cat.len();
    for k in 0..g.n1() {
        cat.push(
            format!("delta1[{}]", k + 1),
            VarKind::Delta { player: 0, k },
        );
    }
    let d2 = cat.len();
    for l in 0..g.n2() {
        cat.push(
            format!("delta2[{}]", l + 1),
            VarKind::Delta { player: 1, k: l },
        );
    }
    (
        cat,
        ScLayout {
            v,
            u0,
            z0,
            f0,
            x0,
            d1,
            d2,
        },
    )
}

/// Shared single-controller assembly. `decoupled_d2` switches the two
/// bilinear places -- the dual rows' constraint-cost terms and the
/// realization rows -- to their linear forms (quadratic-program shape).
fn assemble_sc(
    g: &SingleControllerGame,
    beta: f64,
    with_v: bool,
    with_norm: bool,
    decoupled_d2: bool,
    kind: ProgramKind,
) -> MathProgram {
    let ns = g.num_states();
    let (cat, lay) = sc_catalog(g, with_v);
    let fi = |flat: usize| (lay.f0 + flat) as u32;
    let xi = |flat: usize| (lay.x0 + flat) as u32;
    let ui = |s: usize| (lay.u0 + s) as u32;
    let zi = |s: usize| (lay.z0 + s) as u32;
    let d1i = |k: usize| (lay.d1 + k) as u32;
    let d2i = |l: usize| (lay.d2 + l) as u32;

    // objective: (f'C1x - (1'z - d1'xi1)) + (f'C2x - (value2 - d2'xi2))
    // where value2 = v (average), (1-beta) gamma'u (discounted), or both.
    let mut obj = Vec::new();
    for (flat1, s, a1) in g.k1().pairs() {
        for a2 in 0..g.k2().count(s) {
            let flat2 = g.k2().flat(s, a2);
            let c = g.cost(0)[s][a1][a2] + g.cost(1)[s][a1][a2];
            obj.push(Term::new(c, vec![fi(flat1), xi(flat2)]));
        }
    }
    for s in 0..ns {
        obj.push(Term::new(-1.0, vec![zi(s)]));
    }
    for k in 0..g.n1() {
        obj.push(Term::new(g.xi1()[k], vec![d1i(k)]));
    }
    if let Some(v) = lay.v {
        obj.push(Term::new(-1.0, vec![v as u32]));
    }
    for s in 0..ns {
        obj.push(Term::new(-(1.0 - beta) * g.gamma()[s], vec![ui(s)]));
    }
    for l in 0..g.n2() {
        obj.push(Term::new(g.xi2()[l], vec![d2i(l)]));
    }
    let objective = canonicalize(obj);

    let mut families = Vec::new();

    // (i): controller dual-feasibility rows, one per (s,a2)
    let mut rows = Vec::new();
    for (_, s, a2) in g.k2().pairs() {
        let mut terms = Vec::new();
        if let Some(v) = lay.v {
            terms.push(Term::new(1.0, vec![v as u32]));
        }
        terms.push(Term::new(1.0, vec![ui(s)]));
        for s2 in 0..ns {
            terms.push(Term::new(-beta * g.trans()[s][a2][s2], vec![ui(s2)]));
        }
        for a1 in 0..g.k1().count(s) {
            terms.push(Term::new(
                -g.cost(1)[s][a1][a2],
                vec![fi(g.k1().flat(s, a1))],
            ));
        }
        for l in 0..g.n2() {
            if decoupled_d2 {
                terms.push(Term::new(-g.d2()[l][s][0][a2], vec![d2i(l)]));
            } else {
                for a1 in 0..g.k1().count(s) {
                    terms.push(Term::new(
                        -g.d2()[l][s][a1][a2],
                        vec![d2i(l), fi(g.k1().flat(s, a1))],
                    ));
                }
            }
        }
        rows.push(MlRow {
            name: format!("br2[{},{}]", s + 1, a2 + 1),
            terms: canonicalize(terms),
            rel: Relation::Le,
            rhs: 0.0,
        });
    }
    families.push(Family {
        label: "(i)".into(),
        rows,
    });

    // (ii): player-1 dual-feasibility rows, one per (s,a1)
    let mut rows = Vec::new();
    for (flat1, s, a1) in g.k1().pairs() {
        let _ = flat1;
        let mut terms = vec![Term::new(1.0, vec![zi(s)])];
        for a2 in 0..g.k2().count(s) {
            terms.push(Term::new(
                -g.cost(0)[s][a1][a2],
                vec![xi(g.k2().flat(s, a2))],
            ));
        }
        for k in 0..g.n1() {
            terms.push(Term::new(-g.d1_sub()[k][s][a1], vec![d1i(k)]));
        }
        rows.push(MlRow {
            name: format!("br1[{},{}]", s + 1, a1 + 1),
            terms: canonicalize(terms),
            rel: Relation::Le,
            rhs: 0.0,
        });
    }
    families.push(Family {
        label: "(ii)".into(),
        rows,
    });

    // (iii): occupation balance rows
    let mut rows = Vec::new();
    for s2 in 0..ns {
        let mut terms = Vec::new();
        for (flat2, s, a2) in g.k2().pairs() {
            let delta = if s == s2 { 1.0 } else { 0.0 };
            terms.push(Term::new(
                delta - beta * g.trans()[s][a2][s2],
                vec![xi(flat2)],
            ));
        }
        rows.push(MlRow {
            name: format!("balance[{}]", s2 + 1),
            terms: canonicalize(terms),
            rel: Relation::Eq,
            rhs: (1.0 - beta) * g.gamma()[s2],
        });
    }
    families.push(Family {
        label: "(iii)".into(),
        rows,
    });

    // (iv): normalization (average / unified form only)
    if with_norm {
        let terms = (0..g.k2().len())
            .map(|f| Term::new(1.0, vec![xi(f)]))
            .collect();
        families.push(Family {
            label: "(iv)".into(),
            rows: vec![MlRow {
                name: "normalize".into(),
                terms,
                rel: Relation::Eq,
                rhs: 1.0,
            }],
        });
    }

    let mut label_counter = if with_norm { 4 } else { 3 };
    let mut next_label = move || {
        label_counter += 1;
        roman(label_counter)
    };

    // subscription rows
    let mut rows = Vec::new();
    for k in 0..g.n1() {
        let terms = g
            .k1()
            .pairs()
            .map(|(flat, s, a1)| Term::new(g.d1_sub()[k][s][a1], vec![fi(flat)]))
            .collect();
        rows.push(MlRow {
            name: format!("sub[{}]", k + 1),
            terms: canonicalize(terms),
            rel: Relation::Le,
            rhs: g.xi1()[k],
        });
    }
    families.push(Family {
        label: next_label(),
        rows,
    });

    // realization rows
    let mut rows = Vec::new();
    for l in 0..g.n2() {
        let mut terms = Vec::new();
        if decoupled_d2 {
            for (flat2, s, a2) in g.k2().pairs() {
                terms.push(Term::new(g.d2()[l][s][0][a2], vec![xi(flat2)]));
            }
        } else {
            for (flat1, s, a1) in g.k1().pairs() {
                for a2 in 0..g.k2().count(s) {
                    terms.push(Term::new(
                        g.d2()[l][s][a1][a2],
                        vec![fi(flat1), xi(g.k2().flat(s, a2))],
                    ));
                }
            }
        }
        rows.push(MlRow {
            name: format!("real[{}]", l + 1),
            terms: canonicalize(terms),
            rel: Relation::Le,
            rhs: g.xi2()[l],
        });
    }
    families.push(Family {
        label: next_label(),
        rows,
    });

    // per-state strategy simplex rows
    let mut rows = Vec::new();
    for s in 0..ns {
        let terms = (0..g.k1().count(s))
            .map(|a1| Term::new(1.0, vec![fi(g.k1().flat(s, a1))]))
            .collect();
        rows.push(MlRow {
            name: format!("simplex[{}]", s + 1),
            terms,
            rel: Relation::Eq,
            rhs: 1.0,
        });
    }
    families.push(Family {
        label: next_label(),
        rows,
    });

    // nonnegativity families: f, x, delta1, delta2
    let nonneg = |cat: &VariableCatalog, range: std::ops::Range<usize>, what: &str| -> Vec<MlRow> {
        range
            .map(|j| MlRow {
                name: format!("{what}>=0:{}", cat.names[j]),
                terms: vec![Term::new(1.0, vec![j as u32])],
                rel: Relation::Ge,
                rhs: 0.0,
            })
            .collect()
    };
    families.push(Family {
        label: next_label(),
        rows: nonneg(&cat, lay.f0..lay.f0 + g.k1().len(), "f"),
    });
    families.push(Family {
        label: next_label(),
        rows: nonneg(&cat, lay.x0..lay.x0 + g.k2().len(), "x"),
    });
    families.push(Family {
        label: next_label(),
        rows: nonneg(&cat, lay.d1..lay.d1 + g.n1(), "delta1"),
    });
    families.push(Family {
        label: next_label(),
        rows: nonneg(&cat, lay.d2..lay.d2 + g.n2(), "delta2"),
    });

    MathProgram {
        kind,
        vars: cat,
        objective,
        families,
        beta: match kind {
            ProgramKind::Mp1 | ProgramKind::Qp1 => None,
            _ => Some(beta),
        },
    }
}

fn roman(n: usize) -> String {
    const NUMS: [&str; 11] = [
        "", "i", "ii", "iii", "iv", "v", "vi", "vii", "viii", "ix", "x",
    ];
    if n < NUMS.len() {
        format!("({})", NUMS[n])
    } else {
        format!("({})", ["xi", "xii", "xiii"][n - NUMS.len()])
    }
}

/// Average-cost single-controller program.
pub fn assemble_mp1(g: &SingleControllerGame) -> Result<MathProgram, MpError> {
    if g.criterion() != Criterion::Average {
        return Err(MpError::CriterionMismatch(
            "average-cost program needs an average-criterion game".into(),
        ));
    }
    Ok(assemble_sc(g, 1.0, true, true, false, ProgramKind::Mp1))
}

/// Discounted-cost single-controller program.
pub fn assemble_mp2(g: &SingleControllerGame) -> Result<MathProgram, MpError> {
    let Criterion::Discounted { beta } = g.criterion() else {
        return Err(MpError::CriterionMismatch(
            "discounted program needs a discounted-criterion game".into(),
        ));
    };
    Ok(assemble_sc(g, beta, false, false, false, ProgramKind::Mp2))
}

/// Unified single-controller program with an explicit discount parameter in
/// [0,1]; `beta = 1` is the average-cost instance.
pub fn assemble_mp4(g: &SingleControllerGame, beta: f64) -> Result<MathProgram, MpError> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(MpError::DimensionMismatch(format!(
            "unified program needs beta in [0,1], got {beta}"
        )));
    }
    Ok(assemble_sc(g, beta, true, true, false, ProgramKind::Mp4))
}

/// Specializes the unified program: at `beta = 1` it is the average-cost
/// program; for `beta < 1` the normalization row is implied by the balance
/// rows, so dropping it and the scalar dual value gives the discounted one.
pub fn specialize_mp4(mp: &MathProgram) -> Result<MathProgram, MpError> {
    if mp.kind != ProgramKind::Mp4 {
        return Err(MpError::Unsupported(
            "specialization applies to the unified program".into(),
        ));
    }
    let beta = mp.beta.expect("unified program stores beta");
    if beta == 1.0 {
        return Ok(MathProgram {
            kind: ProgramKind::Mp1,
            vars: mp.vars.clone(),
            objective: mp.objective.clone(),
            families: mp.families.clone(),
            beta: None,
        });
    }
    // drop the scalar dual value variable and the normalization family
    let v_idx = mp
        .vars
        .index_of(&VarKind::V { player: 1 })
        .expect("unified program has the scalar dual value") as u32;
    let mut vars = VariableCatalog::default();
    for (j, kind) in mp.vars.kinds.iter().enumerate() {
        if j as u32 != v_idx {
            vars.push(mp.vars.names[j].clone(), kind.clone());
        }
    }
    let remap = |terms: &[Term]| -> Vec<Term> {
        terms
            .iter()
            .filter(|t| !t.vars.contains(&v_idx))
            .map(|t| {
                Term::new(
                    t.coeff,
                    t.vars
                        .iter()
                        .map(|&v| if v > v_idx { v - 1 } else { v })
                        .collect(),
                )
            })
            .collect()
    };
    let objective = canonicalize(remap(&mp.objective));
    let mut families = Vec::new();
    let mut counter = 0;
    for fam in &mp.families {
        if fam.label == "(iv)" {
            continue;
        }
        counter += 1;
        families.push(Family {
            label: roman(counter),
            rows: fam
                .rows
                .iter()
                .map(|r| MlRow {
                    name: r.name.clone(),
                    terms: canonicalize(remap(&r.terms)),
                    rel: r.rel,
                    rhs: r.rhs,
                })
                .collect(),
        });
    }
    Ok(MathProgram {
        kind: ProgramKind::Mp2,
        vars,
        objective,
        families,
        beta: Some(beta),
    })
}

/// Checks that the controller's constraint costs do not depend on player 1's
/// action; returns the worst offending entry otherwise.
fn check_sc_decoupled(g: &SingleControllerGame) -> Result<(), MpError> {
    for (l, tensor) in g.d2().iter().enumerate() {
        for (s, block) in tensor.iter().enumerate() {
            for a2 in 0..g.k2().count(s) {
                let base = block[0][a2];
                for (a1, row) in block.iter().enumerate() {
                    if (row[a2] - base).abs() > 1e-12 {
                        return Err(MpError::NotDecoupled(format!(
                            "d2[{}] at state {} action2 {} differs across player-1 \
                             actions (a1={} gives {}, a1=1 gives {})",
                            l + 1,
                            s + 1,
                            a2 + 1,
                            a1 + 1,
                            row[a2],
                            base
                        )));
                    }
                }
            }
        }
    }
    Ok(())
}

fn check_indep_decoupled(g: &IndependentGame) -> Result<(), MpError> {
    for i in 0..g.num_players() {
        for (k, tensor) in g.d(i).iter().enumerate() {
            let dims = tensor.dims().to_vec();
            let mut idx = vec![0usize; dims.len()];
            for (flat, &v) in tensor.data().iter().enumerate() {
                let mut rem = flat;
                for j in (0..dims.len()).rev() {
                    idx[j] = rem % dims[j];
                    rem /= dims[j];
                }
                // compare against the slice with all opponent coordinates 0
                let mut base_idx = vec![0usize; dims.len()];
                base_idx[i] = idx[i];
                if (v - tensor.get(&base_idx)).abs() > 1e-12 {
                    return Err(MpError::NotDecoupled(format!(
                        "d[{}][{}] depends on another player's coordinate at {:?}",
                        i + 1,
                        k + 1,
                        idx
                    )));
                }
            }
        }
    }
    Ok(())
}

/// Replaces the bilinear constraint rows by linear ones when the constraint
/// costs are decoupled, retagging the program as a quadratic one.
pub fn specialize_qp(mp: &MathProgram, game: &Game) -> Result<MathProgram, MpError> {
    match (mp.kind, game) {
        (ProgramKind::Mp1, Game::SingleController(g)) => {
            check_sc_decoupled(g)?;
            Ok(assemble_sc(g, 1.0, true, true, true, ProgramKind::Qp1))
        }
        (ProgramKind::Mp2, Game::SingleController(g)) => {
            let beta = mp.beta.expect("discounted program stores beta");
            check_sc_decoupled(g)?;
            Ok(assemble_sc(g, beta, false, false, true, ProgramKind::Qp2))
        }
        (ProgramKind::Mp3, Game::Independent(g)) => {
            if g.num_players() != 2 {
                return Err(MpError::Unsupported(
                    "the quadratic specialization needs exactly two players".into(),
                ));
            }
            check_indep_decoupled(g)?;
            Ok(assemble_qp3(g))
        }
        _ => Err(MpError::Unsupported(
            "quadratic specialization applies to the assembled full programs".into(),
        )),
    }
}

struct IndepLayout {
    v: Vec<usize>,
    u0: Vec<usize>,
    x0: Vec<usize>,
    d0: Vec<usize>,
}

fn indep_catalog(g: &IndependentGame) -> (VariableCatalog, IndepLayout) {
    let n = g.num_players();
    let mut cat = VariableCatalog::default();
    let mut lay = IndepLayout {
        v: Vec::new(),
        u0: Vec::new(),
        x0: Vec::new(),
        d0: Vec::new(),
    };
    for i in 0..n {
        lay.v
            .push(cat.push(format!("v{}", i + 1), VarKind::V { player: i }));
        lay.u0.push(cat.len());
        for s in 0..g.chain(i).num_states() {
            cat.push(
                format!("u{}[{}]", i + 1, s + 1),
                VarKind::U {
                    player: i,
                    state: s,
                },
            );
        }
        lay.x0.push(cat.len());
        for (flat, s, a) in g.chain(i).k().pairs() {
            cat.push(
                format!("x{}[{},{}]", i + 1, s + 1, a + 1),
                VarKind::X { player: i, flat },
            );
        }
        lay.d0.push(cat.len());
        for k in 0..g.n(i) {
            cat.push(
                format!("delta{}[{}]", i + 1, k + 1),
                VarKind::Delta { player: i, k },
            );
        }
    }
    (cat, lay)
}

/// Decodes a flat joint index into per-player flat coordinates.
fn decode_joint(dims: &[usize], mut flat: usize, out: &mut [usize]) {
    for j in (0..dims.len()).rev() {
        out[j] = flat % dims[j];
        flat /= dims[j];
    }
}

/// N-player independent-chain program.
pub fn assemble_mp3(g: &IndependentGame) -> Result<MathProgram, MpError> {
    let n = g.num_players();
    let (cat, lay) = indep_catalog(g);
    let dims: Vec<usize> = (0..n).map(|i| g.chain(i).k().len()).collect();
    let xi_var = |i: usize, flat: usize| (lay.x0[i] + flat) as u32;

    // objective: sum_i [ sum_K (prod_j x^j) c^i - v^i + xi^i . delta^i ]
    let mut obj = Vec::new();
    let mut idx = vec![0usize; n];
    for i in 0..n {
        let tensor = g.cost(i);
        for (flat, &c) in tensor.data().iter().enumerate() {
            decode_joint(&dims, flat, &mut idx);
            let vars: Vec<u32> = (0..n).map(|j| xi_var(j, idx[j])).collect();
            obj.push(Term::new(c, vars));
        }
        obj.push(Term::new(-1.0, vec![lay.v[i] as u32]));
        for k in 0..g.n(i) {
            obj.push(Term::new(g.xi(i)[k], vec![(lay.d0[i] + k) as u32]));
        }
    }
    let objective = canonicalize(obj);

    let mut families = Vec::new();

    // (i): dual-feasibility rows of every player
    let mut rows = Vec::new();
    for i in 0..n {
        for (own_flat, s, a) in g.chain(i).k().pairs() {
            rows.push(indep_dual_row(g, &lay, &dims, i, own_flat, s, a, false));
        }
    }
    families.push(Family {
        label: "(i)".into(),
        rows,
    });

    // (ii): balance rows per player
    let mut rows = Vec::new();
    for i in 0..n {
        let chain = g.chain(i);
        for s2 in 0..chain.num_states() {
            let terms = chain
                .k()
                .pairs()
                .map(|(flat, s, a)| {
                    let delta = if s == s2 { 1.0 } else { 0.0 };
                    Term::new(delta - chain.trans()[s][a][s2], vec![xi_var(i, flat)])
                })
                .collect();
            rows.push(MlRow {
                name: format!("balance{}[{}]", i + 1, s2 + 1),
                terms: canonicalize(terms),
                rel: Relation::Eq,
                rhs: 0.0,
            });
        }
    }
    families.push(Family {
        label: "(ii)".into(),
        rows,
    });

    // (iii): normalization per player
    let rows = (0..n)
        .map(|i| MlRow {
            name: format!("normalize{}", i + 1),
            terms: (0..dims[i])
                .map(|f| Term::new(1.0, vec![xi_var(i, f)]))
                .collect(),
            rel: Relation::Eq,
            rhs: 1.0,
        })
        .collect();
    families.push(Family {
        label: "(iii)".into(),
        rows,
    });

    // (iv): realization rows, full product form
    let mut rows = Vec::new();
    for i in 0..n {
        for k in 0..g.n(i) {
            let tensor = &g.d(i)[k];
            let mut terms = Vec::new();
            for (flat, &dval) in tensor.data().iter().enumerate() {
                decode_joint(&dims, flat, &mut idx);
                let vars: Vec<u32> = (0..n).map(|j| xi_var(j, idx[j])).collect();
                terms.push(Term::new(dval, vars));
            }
            rows.push(MlRow {
                name: format!("real{}[{}]", i + 1, k + 1),
                terms: canonicalize(terms),
                rel: Relation::Le,
                rhs: g.xi(i)[k],
            });
        }
    }
    families.push(Family {
        label: "(iv)".into(),
        rows,
    });

    // (v): x >= 0, (vi): delta >= 0
    let mut xrows = Vec::new();
    let mut drows = Vec::new();
    for i in 0..n {
        for flat in 0..dims[i] {
            let j = lay.x0[i] + flat;
            xrows.push(MlRow {
                name: format!("x>=0:{}", cat.names[j]),
                terms: vec![Term::new(1.0, vec![j as u32])],
                rel: Relation::Ge,
                rhs: 0.0,
            });
        }
        for k in 0..g.n(i) {
            let j = lay.d0[i] + k;
            drows.push(MlRow {
                name: format!("delta>=0:{}", cat.names[j]),
                terms: vec![Term::new(1.0, vec![j as u32])],
                rel: Relation::Ge,
                rhs: 0.0,
            });
        }
    }
    families.push(Family {
        label: "(v)".into(),
        rows: xrows,
    });
    families.push(Family {
        label: "(vi)".into(),
        rows: drows,
    });

    Ok(MathProgram {
        kind: ProgramKind::Mp3,
        vars: cat,
        objective,
        families,
        beta: None,
    })
}

/// One dual-feasibility row of player `i` at own pair `(s,a)`; `decoupled`
/// switches the constraint-cost terms to their own-coordinate linear form.
#[allow(clippy::too_many_arguments)]
fn indep_dual_row(
    g: &IndependentGame,
    lay: &IndepLayout,
    dims: &[usize],
    i: usize,
    own_flat: usize,
    s: usize,
    a: usize,
    decoupled: bool,
) -> MlRow {
    let n = g.num_players();
    let chain = g.chain(i);
    let xi_var = |j: usize, flat: usize| (lay.x0[j] + flat) as u32;
    let mut terms = vec![
        Term::new(1.0, vec![lay.v[i] as u32]),
        Term::new(1.0, vec![(lay.u0[i] + s) as u32]),
    ];
    for s2 in 0..chain.num_states() {
        terms.push(Term::new(
            -chain.trans()[s][a][s2],
            vec![(lay.u0[i] + s2) as u32],
        ));
    }
    // cost marginal: sum over opponents' coordinates with own fixed
    let mut idx = vec![0usize; n];
    let tensor = g.cost(i);
    for (flat, &c) in tensor.data().iter().enumerate() {
        decode_joint(dims, flat, &mut idx);
        if idx[i] != own_flat {
            continue;
        }
        let vars: Vec<u32> = (0..n)
            .filter(|&j| j != i)
            .map(|j| xi_var(j, idx[j]))
            .collect();
        terms.push(Term::new(-c, vars));
    }
    for k in 0..g.n(i) {
        let dvar = (lay.d0[i] + k) as u32;
        let tensor = &g.d(i)[k];
        if decoupled {
            let mut base = vec![0usize; n];
            base[i] = own_flat;
            terms.push(Term::new(-tensor.get(&base), vec![dvar]));
        } else {
            for (flat, &dval) in tensor.data().iter().enumerate() {
                decode_joint(dims, flat, &mut idx);
                if idx[i] != own_flat {
                    continue;
                }
                let mut vars: Vec<u32> = (0..n)
                    .filter(|&j| j != i)
                    .map(|j| xi_var(j, idx[j]))
                    .collect();
                vars.push(dvar);
                terms.push(Term::new(-dval, vars));
            }
        }
    }
    MlRow {
        name: format!("br{}[{},{}]", i + 1, s + 1, a + 1),
        terms: canonicalize(terms),
        rel: Relation::Le,
        rhs: 0.0,
    }
}

/// Two-player quadratic form of the independent-chain program, following the
/// source's family numbering `(i),(ii),(iii),(iv),(v),(ix),(x)`.
fn assemble_qp3(g: &IndependentGame) -> MathProgram {
    let n = 2;
    let (cat, lay) = indep_catalog(g);
    let dims: Vec<usize> = (0..n).map(|i| g.chain(i).k().len()).collect();
    let xi_var = |j: usize, flat: usize| (lay.x0[j] + flat) as u32;

    let mut obj = Vec::new();
    let mut idx = vec![0usize; n];
    for i in 0..n {
        for (flat, &c) in g.cost(i).data().iter().enumerate() {
            decode_joint(&dims, flat, &mut idx);
            obj.push(Term::new(c, vec![xi_var(0, idx[0]), xi_var(1, idx[1])]));
        }
        obj.push(Term::new(-1.0, vec![lay.v[i] as u32]));
        for k in 0..g.n(i) {
            obj.push(Term::new(g.xi(i)[k], vec![(lay.d0[i] + k) as u32]));
        }
    }
    let objective = canonicalize(obj);

    let mut families = Vec::new();
    for i in 0..n {
        let rows = g
            .chain(i)
            .k()
            .pairs()
            .map(|(own, s, a)| indep_dual_row(g, &lay, &dims, i, own, s, a, true))
            .collect();
        families.push(Family {
            label: if i == 0 { "(i)".into() } else { "(ii)".into() },
            rows,
        });
    }

    let mut rows = Vec::new();
    for i in 0..n {
        let chain = g.chain(i);
        for s2 in 0..chain.num_states() {
            let terms = chain
                .k()
                .pairs()
                .map(|(flat, s, a)| {
                    let delta = if s == s2 { 1.0 } else { 0.0 };
                    Term::new(delta - chain.trans()[s][a][s2], vec![xi_var(i, flat)])
                })
                .collect();
            rows.push(MlRow {
                name: format!("balance{}[{}]", i + 1, s2 + 1),
                terms: canonicalize(terms),
                rel: Relation::Eq,
                rhs: 0.0,
            });
        }
    }
    families.push(Family {
        label: "(iii)".into(),
        rows,
    });

    let rows = (0..n)
        .map(|i| MlRow {
            name: format!("normalize{}", i + 1),
            terms: (0..dims[i])
                .map(|f| Term::new(1.0, vec![xi_var(i, f)]))
                .collect(),
            rel: Relation::Eq,
            rhs: 1.0,
        })
        .collect();
    families.push(Family {
        label: "(iv)".into(),
        rows,
    });

    // decoupled realization rows: own coordinates only
    let mut rows = Vec::new();
    for i in 0..n {
        for k in 0..g.n(i) {
            let tensor = &g.d(i)[k];
            let terms = (0..dims[i])
                .map(|own| {
                    let mut base = vec![0usize; n];
                    base[i] = own;
                    Term::new(tensor.get(&base), vec![xi_var(i, own)])
                })
                .collect();
            rows.push(MlRow {
                name: format!("real{}[{}]", i + 1, k + 1),
                terms: canonicalize(terms),
                rel: Relation::Le,
                rhs: g.xi(i)[k],
            });
        }
    }
    families.push(Family {
        label: "(v)".into(),
        rows,
    });

    let mut xrows = Vec::new();
    let mut drows = Vec::new();
    for i in 0..n {
        for flat in 0..dims[i] {
            let j = lay.x0[i] + flat;
            xrows.push(MlRow {
                name: format!("x>=0:{}", cat.names[j]),
                terms: vec![Term::new(1.0, vec![j as u32])],
                rel: Relation::Ge,
                rhs: 0.0,
            });
        }
        for k in 0..g.n(i) {
            let j = lay.d0[i] + k;
            drows.push(MlRow {
                name: format!("delta>=0:{}", cat.names[j]),
                terms: vec![Term::new(1.0, vec![j as u32])],
                rel: Relation::Ge,
                rhs: 0.0,
            });
        }
    }
    families.push(Family {
        label: "(ix)".into(),
        rows: xrows,
    });
    families.push(Family {
        label: "(x)".into(),
        rows: drows,
    });

    MathProgram {
        kind: ProgramKind::Qp3,
        vars: cat,
        objective,
        families,
        beta: None,
    }
}

/// Assembles the program matching the game class and criterion.
pub fn assemble_auto(game: &Game) -> Result<MathProgram, MpError> {
    match game {
        Game::SingleController(g) => match g.criterion() {
            Criterion::Average => assemble_mp1(g),
            Criterion::Discounted { .. } => assemble_mp2(g),
        },
        Game::Independent(g) => assemble_mp3(g),
    }
}
