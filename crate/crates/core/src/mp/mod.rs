//! Assembled mathematical programs whose zero-objective global minima are
//! exactly the stationary Nash equilibria, plus their quadratic
//! specializations and zero-sum linear-program splits.
//!
//! Programs are stored declaratively: a variable catalog, a multilinear
//! objective (explicit term list, never expanded into a dense polynomial)
//! and constraint families tagged with the source numbering. Evaluation and
//! residual computation work on any point of matching dimension.

mod assemble;
mod export;
mod point;
mod zerosum;

pub use assemble::{
    assemble_auto, assemble_mp1, assemble_mp2, assemble_mp3, assemble_mp4, specialize_mp4,
    specialize_qp,
};
pub use export::{export_mp_text, export_qp_cplex};
pub use point::{make_feasible_point, point_strategies};
pub use zerosum::{zero_sum_split, ZeroSumPair};

use crate::br::BrError;
use crate::chain::ChainError;
use crate::lp::{LpError, Relation};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MpError {
    #[error("criterion mismatch: {0}")]
    CriterionMismatch(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("constraint costs are not decoupled: {0}")]
    NotDecoupled(String),
    #[error("not a zero-sum game: {0}")]
    NotZeroSum(String),
    #[error("strategies are infeasible: {0}")]
    InfeasibleStrategies(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Br(#[from] BrError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProgramKind {
    Mp1,
    Mp2,
    Mp3,
    Mp4,
    Qp1,
    Qp2,
    Qp3,
}

impl ProgramKind {
    pub fn label(self) -> &'static str {
        match self {
            ProgramKind::Mp1 => "MP1",
            ProgramKind::Mp2 => "MP2",
            ProgramKind::Mp3 => "MP3",
            ProgramKind::Mp4 => "MP4",
            ProgramKind::Qp1 => "QP1",
            ProgramKind::Qp2 => "QP2",
            ProgramKind::Qp3 => "QP3",
        }
    }
}

/// What a catalog slot holds. Player indices are 0-based (player 1 of the
/// single-controller game is 0, the controller is 1).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VarKind {
    V { player: usize },
    U { player: usize, state: usize },
    Z { state: usize },
    F { flat: usize },
    X { player: usize, flat: usize },
    Delta { player: usize, k: usize },
}

#[derive(Debug, Clone, Default)]
pub struct VariableCatalog {
    pub names: Vec<String>,
    pub kinds: Vec<VarKind>,
}

impl VariableCatalog {
    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub(crate) fn push(&mut self, name: String, kind: VarKind) -> usize {
        self.names.push(name);
        self.kinds.push(kind);
        self.names.len() - 1
    }

    pub fn index_of(&self, kind: &VarKind) -> Option<usize> {
        self.kinds.iter().position(|k| k == kind)
    }
}

/// One product term of a multilinear form: `coeff * prod_i values[vars[i]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub coeff: f64,
    pub vars: Vec<u32>,
}

impl Term {
    pub fn new(coeff: f64, mut vars: Vec<u32>) -> Self {
        vars.sort_unstable();
        Term { coeff, vars }
    }

    pub fn constant(coeff: f64) -> Self {
        Term {
            coeff,
            vars: Vec::new(),
        }
    }

    pub fn degree(&self) -> usize {
        self.vars.len()
    }

    pub fn eval(&self, values: &[f64]) -> f64 {
        self.vars
            .iter()
            .fold(self.coeff, |acc, &v| acc * values[v as usize])
    }
}

/// Merges terms with identical variable multisets and drops exact zeros;
/// the result is sorted, so equal forms compare equal.
pub(crate) fn canonicalize(mut terms: Vec<Term>) -> Vec<Term> {
    terms.sort_by(|a, b| a.vars.cmp(&b.vars));
    let mut out: Vec<Term> = Vec::with_capacity(terms.len());
    for t in terms {
        match out.last_mut() {
            Some(prev) if prev.vars == t.vars => prev.coeff += t.coeff,
            _ => out.push(t),
        }
    }
    out.retain(|t| t.coeff != 0.0);
    out
}

#[derive(Debug, Clone)]
pub struct MlRow {
    pub name: String,
    pub terms: Vec<Term>,
    pub rel: Relation,
    pub rhs: f64,
}

impl MlRow {
    pub fn eval(&self, values: &[f64]) -> f64 {
        self.terms.iter().map(|t| t.eval(values)).sum()
    }

    /// Violation: positive part for inequalities, absolute for equalities.
    pub fn violation(&self, values: &[f64]) -> f64 {
        let lhs = self.eval(values);
        match self.rel {
            Relation::Le => (lhs - self.rhs).max(0.0),
            Relation::Ge => (self.rhs - lhs).max(0.0),
            Relation::Eq => (lhs - self.rhs).abs(),
        }
    }

    pub fn degree(&self) -> usize {
        self.terms.iter().map(Term::degree).max().unwrap_or(0)
    }
}

/// A constraint family keyed by the source program's numbering label.
#[derive(Debug, Clone)]
pub struct Family {
    pub label: String,
    pub rows: Vec<MlRow>,
}

#[derive(Debug, Clone)]
pub struct MathProgram {
    pub kind: ProgramKind,
    pub vars: VariableCatalog,
    pub objective: Vec<Term>,
    pub families: Vec<Family>,
    /// discount parameter where the program carries one (MP2/MP4/QP2)
    pub beta: Option<f64>,
}

impl MathProgram {
    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn family(&self, label: &str) -> Option<&Family> {
        self.families.iter().find(|f| f.label == label)
    }

    pub fn objective_degree(&self) -> usize {
        self.objective.iter().map(Term::degree).max().unwrap_or(0)
    }
}

#[derive(Debug, Clone)]
pub struct FamilyResidual {
    pub label: String,
    pub max_violation: f64,
}

/// A candidate point with computed (never assumed) residuals.
#[derive(Debug, Clone)]
pub struct FeasiblePoint {
    pub values: Vec<f64>,
    pub residuals: Vec<FamilyResidual>,
}

impl FeasiblePoint {
    pub fn max_residual(&self) -> f64 {
        self.residuals
            .iter()
            .map(|r| r.max_violation)
            .fold(0.0, f64::max)
    }
}

/// Exact multilinear evaluation of the program objective at any point of
/// matching dimension (no feasibility assumption).
pub fn evaluate_objective(mp: &MathProgram, values: &[f64]) -> Result<f64, MpError> {
    if values.len() != mp.num_vars() {
        return Err(MpError::DimensionMismatch(format!(
            "point has {} values, program has {} variables",
            values.len(),
            mp.num_vars()
        )));
    }
    Ok(mp.objective.iter().map(|t| t.eval(values)).sum())
}

/// Max violation per constraint family.
pub fn feasibility_residuals(
    mp: &MathProgram,
    values: &[f64],
) -> Result<Vec<FamilyResidual>, MpError> {
    if values.len() != mp.num_vars() {
        return Err(MpError::DimensionMismatch(format!(
            "point has {} values, program has {} variables",
            values.len(),
            mp.num_vars()
        )));
    }
    Ok(mp
        .families
        .iter()
        .map(|f| FamilyResidual {
            label: f.label.clone(),
            max_violation: f
                .rows
                .iter()
                .map(|r| r.violation(values))
                .fold(0.0, f64::max),
        })
        .collect())
}

fn row_key(row: &MlRow) -> (u8, String) {
    let rel = match row.rel {
        Relation::Le => 0u8,
        Relation::Eq => 1,
        Relation::Ge => 2,
    };
    let mut s = format!("{:?}|", row.rhs.to_bits());
    for t in &row.terms {
        s.push_str(&format!("{:?}:{:?};", t.vars, t.coeff.to_bits()));
    }
    (rel, s)
}

/// Structural equality: same variable kinds in order, identical objective
/// term multiset, and per-family identical row multisets (row names are
/// ignored; coefficients compare bit-exactly after canonicalization).
pub fn structural_eq(a: &MathProgram, b: &MathProgram) -> bool {
    if a.vars.kinds != b.vars.kinds {
        return false;
    }
    if canonicalize(a.objective.clone()) != canonicalize(b.objective.clone()) {
        return false;
    }
    if a.families.len() != b.families.len() {
        return false;
    }
    for (fa, fb) in a.families.iter().zip(&b.families) {
        if fa.label != fb.label || fa.rows.len() != fb.rows.len() {
            return false;
        }
        let mut ka: Vec<_> = fa
            .rows
            .iter()
            .map(|r| {
                let mut r = r.clone();
                r.terms = canonicalize(r.terms);
                row_key(&r)
            })
            .collect();
        let mut kb: Vec<_> = fb
            .rows
            .iter()
            .map(|r| {
                let mut r = r.clone();
                r.terms = canonicalize(r.terms);
                row_key(&r)
            })
            .collect();
        ka.sort();
        kb.sort();
        if ka != kb {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn term_eval_and_canon() {
        let t = Term::new(2.0, vec![1, 0]);
        assert_eq!(t.vars, vec![0, 1]);
        assert_eq!(t.eval(&[3.0, 4.0]), 24.0);
        let merged = canonicalize(vec![
            Term::new(1.0, vec![0, 1]),
            Term::new(2.0, vec![1, 0]),
            Term::new(-3.0, vec![1, 0]),
            Term::constant(5.0),
        ]);
        assert_eq!(merged.len(), 1);
        assert!(merged[0].vars.is_empty());
        assert_eq!(merged[0].coeff, 5.0);
    }

    #[test]
    fn row_violation_directions() {
        let row = MlRow {
            name: "r".into(),
            terms: vec![Term::new(1.0, vec![0])],
            rel: Relation::Le,
            rhs: 1.0,
        };
        assert_eq!(row.violation(&[0.5]), 0.0);
        assert!((row.violation(&[1.5]) - 0.5).abs() < 1e-15);
        let eq = MlRow {
            rel: Relation::Eq,
            ..row
        };
        assert!((eq.violation(&[0.25]) - 0.75).abs() < 1e-15);
    }
}
