//! Depth-first backward chaining with weak unification.
//!
//! Goals are matched against fact and rule heads by [`weak_unify`]. A proof
//! scores the product of every unification along it and is accepted when
//! that product exceeds the threshold. Among accepted proofs the search keeps
//! the highest score, then the fewest distinct rules; the first one found in
//! exploration order wins remaining ties. Branches that can no longer beat
//! the incumbent or clear the threshold are cut.

use std::collections::HashMap;
use std::rc::Rc;

use serde::{Deserialize, Serialize};

use super::embedding::SymbolSimilarity;
use crate::model::{Atom, ClauseRef, LogicProgram, ProofDiagnostics, ProofResult, Rule, Term};

pub const DEFAULT_THRESHOLD: f64 = 0.13;
pub const DEFAULT_MAX_DEPTH: usize = 10;
pub const DEFAULT_MAX_EXPANSIONS: usize = 200_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProverConfig {
    pub threshold: f64,
    /// Maximum number of nested rule applications on one branch.
    pub max_depth: usize,
    /// Goal expansions before the search gives up.
    pub max_expansions: usize,
}

impl Default for ProverConfig {
    fn default() -> Self {
        ProverConfig {
            threshold: DEFAULT_THRESHOLD,
            max_depth: DEFAULT_MAX_DEPTH,
            max_expansions: DEFAULT_MAX_EXPANSIONS,
        }
    }
}

fn symbol_score(a: &str, b: &str, sim: &dyn SymbolSimilarity) -> f64 {
    if a == b {
        1.0
    } else {
        sim.similarity(a, b).clamp(0.0, 1.0)
    }
}

/// Unification score of two atoms in [0, 1].
///
/// Arity mismatch scores 0. Otherwise the score is the minimum of the
/// predicate similarity and the similarities of every pair of constant
/// arguments; variables match anything.
pub fn weak_unify(a: &Atom, b: &Atom, sim: &dyn SymbolSimilarity) -> f64 {
    if a.arity() != b.arity() {
        return 0.0;
    }
    let mut score = symbol_score(&a.predicate, &b.predicate, sim);
    for (x, y) in a.args.iter().zip(&b.args) {
        if let (Term::Constant(x), Term::Constant(y)) = (x, y) {
            score = score.min(symbol_score(x, y, sim));
        }
    }
    score
}

/// 1 when the query was satisfied, else 0.
pub fn consistency(result: &ProofResult) -> u8 {
    u8::from(result.satisfied)
}

type Subst = HashMap<String, Term>;

fn walk(term: &Term, subst: &Subst) -> Term {
    let mut cur = term;
    while let Term::Variable(v) = cur {
        match subst.get(v) {
            Some(next) => cur = next,
            None => break,
        }
    }
    cur.clone()
}

fn resolve(atom: &Atom, subst: &Subst) -> Atom {
    Atom {
        predicate: atom.predicate.clone(),
        args: atom.args.iter().map(|t| walk(t, subst)).collect(),
    }
}

fn unify_with(
    goal: &Atom,
    head: &Atom,
    subst: &Subst,
    sim: &dyn SymbolSimilarity,
) -> Option<(f64, Subst)> {
    if goal.arity() != head.arity() {
        return None;
    }
    let mut score = symbol_score(&goal.predicate, &head.predicate, sim);
    if score <= 0.0 {
        return None;
    }
    let mut out = subst.clone();
    for (g, h) in goal.args.iter().zip(&head.args) {
        let g = walk(g, &out);
        let h = walk(h, &out);
        match (g, h) {
            (Term::Constant(a), Term::Constant(b)) => {
                let s = symbol_score(&a, &b, sim);
                if s <= 0.0 {
                    return None;
                }
                score = score.min(s);
            }
            (Term::Variable(v), other) | (other, Term::Variable(v)) => {
                if other != Term::Variable(v.clone()) {
                    out.insert(v, other);
                }
            }
        }
    }
    Some((score, out))
}

struct Ancestor {
    atom: Atom,
    parent: Option<Rc<Ancestor>>,
}

#[derive(Clone)]
struct Goal {
    atom: Atom,
    depth: usize,
    ancestors: Option<Rc<Ancestor>>,
}

struct Found {
    score: f64,
    rules: Vec<usize>,
    closing_fact: Option<usize>,
}

struct Candidate {
    score: f64,
    predicate: String,
    clause: ClauseRef,
    subst: Subst,
    body: Vec<Atom>,
}

struct Search<'a> {
    program: &'a LogicProgram,
    sim: &'a dyn SymbolSimilarity,
    config: &'a ProverConfig,
    expansions: usize,
    depth_cutoff: bool,
    budget_exhausted: bool,
    fresh: usize,
    best: Option<Found>,
}

impl Search<'_> {
    fn can_improve(&self, score: f64, rules: usize) -> bool {
        match &self.best {
            None => true,
            Some(b) => score > b.score || (score == b.score && rules < b.rules.len()),
        }
    }

    fn rename(&mut self, rule: &Rule) -> Rule {
        if rule.head.is_ground() && rule.body.iter().all(Atom::is_ground) {
            return rule.clone();
        }
        self.fresh += 1;
        let n = self.fresh;
        let rename_atom = |a: &Atom| Atom {
            predicate: a.predicate.clone(),
            args: a
                .args
                .iter()
                .map(|t| match t {
                    Term::Variable(v) => Term::Variable(format!("{v}#{n}")),
                    c => c.clone(),
                })
                .collect(),
        };
        Rule {
            head: rename_atom(&rule.head),
            body: rule.body.iter().map(rename_atom).collect(),
        }
    }

    fn candidates(&mut self, goal: &Atom, subst: &Subst) -> Vec<Candidate> {
        let mut out = Vec::new();
        for (i, fact) in self.program.facts.iter().enumerate() {
            if let Some((score, s)) = unify_with(goal, fact, subst, self.sim) {
                out.push(Candidate {
                    score,
                    predicate: fact.predicate.clone(),
                    clause: ClauseRef::Fact(i),
                    subst: s,
                    body: Vec::new(),
                });
            }
        }
        for j in 0..self.program.rules.len() {
            let rule = self.rename(&self.program.rules[j]);
            if let Some((score, s)) = unify_with(goal, &rule.head, subst, self.sim) {
                out.push(Candidate {
                    score,
                    predicate: rule.head.predicate.clone(),
                    clause: ClauseRef::Rule(j),
                    subst: s,
                    body: rule.body,
                });
            }
        }
        // Descending score, then predicate name, then clause order (facts
        // before rules). The sort is stable so clause order is preserved.
        out.sort_by(|a, b| {
            b.score
                .total_cmp(&a.score)
                .then_with(|| a.predicate.cmp(&b.predicate))
        });
        out
    }

    fn solve(
        &mut self,
        mut goals: Vec<Goal>,
        subst: Subst,
        score: f64,
        used: Vec<usize>,
        closing_fact: Option<usize>,
    ) {
        if self.budget_exhausted {
            return;
        }
        let Some(goal) = goals.pop() else {
            if self.can_improve(score, used.len()) {
                self.best = Some(Found {
                    score,
                    rules: used,
                    closing_fact,
                });
            }
            return;
        };
        self.expansions += 1;
        if self.expansions > self.config.max_expansions {
            self.budget_exhausted = true;
            return;
        }

        let atom = resolve(&goal.atom, &subst);
        let mut anc = goal.ancestors.as_deref();
        while let Some(a) = anc {
            if resolve(&a.atom, &subst) == atom {
                return;
            }
            anc = a.parent.as_deref();
        }

        for cand in self.candidates(&atom, &subst) {
            let next_score = score * cand.score;
            if next_score <= self.config.threshold {
                break;
            }
            let mut next_used = used.clone();
            if let ClauseRef::Rule(j) = cand.clause {
                if !next_used.contains(&j) {
                    next_used.push(j);
                }
            }
            if !self.can_improve(next_score, next_used.len()) {
                continue;
            }
            let mut next_goals = goals.clone();
            let mut next_closing = closing_fact;
            match cand.clause {
                ClauseRef::Fact(i) => {
                    next_closing.get_or_insert(i);
                }
                ClauseRef::Rule(_) => {
                    if goal.depth + 1 > self.config.max_depth {
                        self.depth_cutoff = true;
                        continue;
                    }
                    let ancestors = Some(Rc::new(Ancestor {
                        atom: atom.clone(),
                        parent: goal.ancestors.clone(),
                    }));
                    for b in cand.body.into_iter().rev() {
                        next_goals.push(Goal {
                            atom: b,
                            depth: goal.depth + 1,
                            ancestors: ancestors.clone(),
                        });
                    }
                }
            }
            self.solve(next_goals, cand.subst, next_score, next_used, next_closing);
        }
    }
}

/// Attempts to prove the program's query.
pub fn prove(
    program: &LogicProgram,
    sim: &dyn SymbolSimilarity,
    config: &ProverConfig,
) -> ProofResult {
    let mut search = Search {
        program,
        sim,
        config,
        expansions: 0,
        depth_cutoff: false,
        budget_exhausted: false,
        fresh: 0,
        best: None,
    };
    let root = Goal {
        atom: program.query.clone(),
        depth: 0,
        ancestors: None,
    };
    search.solve(vec![root], Subst::new(), 1.0, Vec::new(), None);

    let mut diagnostics = ProofDiagnostics {
        threshold: config.threshold,
        rule_count: 0,
        expansions: search.expansions,
        depth_cutoff: search.depth_cutoff,
        budget_exhausted: search.budget_exhausted,
    };
    match search.best {
        None => ProofResult::unsatisfied(diagnostics),
        Some(found) => {
            diagnostics.rule_count = found.rules.len();
            let chain: Vec<ClauseRef> = if found.rules.is_empty() {
                vec![ClauseRef::Fact(
                    found
                        .closing_fact
                        .expect("rule-free proof closes on a fact"),
                )]
            } else {
                found.rules.iter().map(|&j| ClauseRef::Rule(j)).collect()
            };
            ProofResult::new(true, found.score, chain.len(), chain, diagnostics)
                .expect("accepted proof satisfies ProofResult invariants")
        }
    }
}
