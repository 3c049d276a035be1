//! Horn-clause knowledge base with SLD resolution and computable predicates.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::geom::Pose;
use crate::plan_lang::{read_all, PlanError, Sexpr, SexprKind};
use crate::world::WorldState;

pub const DEFAULT_DEPTH_LIMIT: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub enum Term {
    Sym(String),
    Num(f64),
    Var(String),
    Pose(Pose),
}

impl Term {
    pub fn sym(s: impl Into<String>) -> Self {
        Term::Sym(s.into())
    }

    pub fn var(s: &str) -> Self {
        Term::Var(s.trim_start_matches('?').to_string())
    }

    pub fn as_sym(&self) -> Option<&str> {
        match self {
            Term::Sym(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_pose(&self) -> Option<Pose> {
        match self {
            Term::Pose(p) => Some(*p),
            _ => None,
        }
    }

    pub fn is_ground(&self) -> bool {
        !matches!(self, Term::Var(_))
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Sym(s) => f.write_str(s),
            Term::Num(n) => write!(f, "{n}"),
            Term::Var(v) => write!(f, "?{v}"),
            Term::Pose(p) => write!(f, "(pose {} {} {} {})", p.x, p.y, p.z, p.yaw),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub pred: String,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(pred: &str, args: Vec<Term>) -> Self {
        Atom { pred: pred.to_string(), args }
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(Term::is_ground)
    }

    fn key(&self) -> (String, usize) {
        (self.pred.clone(), self.args.len())
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.pred)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        f.write_str(")")
    }
}

/// Horn clause; a fact has an empty body.
#[derive(Debug, Clone, PartialEq)]
pub struct Clause {
    pub head: Atom,
    pub body: Vec<Atom>,
}

/// Evaluator of a computable predicate: given the (partially bound)
/// arguments, the ground argument tuples that hold in the world.
pub type Evaluator = Arc<dyn Fn(&[Term], &WorldState) -> Vec<Vec<Term>> + Send + Sync>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KbError {
    #[error("`{0}` is already registered")]
    DuplicateRegistration(String),
    #[error("fact {0} is not ground")]
    NotGround(String),
    #[error("`{0}` is a computable predicate")]
    ComputableHead(String),
    #[error("knowledge file: {0}")]
    Parse(String),
}

impl From<PlanError> for KbError {
    fn from(e: PlanError) -> Self {
        KbError::Parse(e.to_string())
    }
}

pub type Solution = BTreeMap<String, Term>;

/// All solutions of a query, plus whether some branch was cut by the depth limit.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct QueryAnswer {
    pub solutions: Vec<Solution>,
    pub depth_exceeded: bool,
}

#[derive(Clone)]
pub struct KnowledgeBase {
    clauses: Vec<Clause>,
    computables: BTreeMap<(String, usize), Evaluator>,
    pub depth_limit: usize,
}

impl Default for KnowledgeBase {
    fn default() -> Self {
        KnowledgeBase { clauses: Vec::new(), computables: BTreeMap::new(), depth_limit: DEFAULT_DEPTH_LIMIT }
    }
}

impl fmt::Debug for KnowledgeBase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KnowledgeBase")
            .field("clauses", &self.clauses.len())
            .field("computables", &self.computables.keys().collect::<Vec<_>>())
            .finish()
    }
}

type Subst = BTreeMap<String, Term>;

fn walk<'a>(t: &'a Term, s: &'a Subst) -> &'a Term {
    let mut t = t;
    while let Term::Var(v) = t {
        match s.get(v) {
            Some(next) => t = next,
            None => break,
        }
    }
    t
}

fn resolve(t: &Term, s: &Subst) -> Term {
    walk(t, s).clone()
}

fn unify(a: &Term, b: &Term, s: &mut Subst) -> bool {
    let (a, b) = (walk(a, s).clone(), walk(b, s).clone());
    match (&a, &b) {
        (Term::Var(x), Term::Var(y)) if x == y => true,
        (Term::Var(x), _) => {
            s.insert(x.clone(), b);
            true
        }
        (_, Term::Var(y)) => {
            s.insert(y.clone(), a);
            true
        }
        _ => a == b,
    }
}

fn unify_args(a: &[Term], b: &[Term], s: &mut Subst) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| unify(x, y, s))
}

fn rename(atom: &Atom, n: usize) -> Atom {
    Atom {
        pred: atom.pred.clone(),
        args: atom
            .args
            .iter()
            .map(|t| match t {
                Term::Var(v) => Term::Var(format!("{v}#{n}")),
                other => other.clone(),
            })
            .collect(),
    }
}

struct Search<'a> {
    kb: &'a KnowledgeBase,
    world: &'a WorldState,
    renames: usize,
    exceeded: bool,
    found: Vec<Subst>,
}

impl Search<'_> {
    fn solve(&mut self, goals: &[Atom], s: Subst, depth: usize) {
        let Some((goal, rest)) = goals.split_first() else {
            self.found.push(s);
            return;
        };
        if depth >= self.kb.depth_limit {
            self.exceeded = true;
            return;
        }
        if let Some(eval) = self.kb.computables.get(&goal.key()) {
            let args: Vec<Term> = goal.args.iter().map(|t| resolve(t, &s)).collect();
            for tuple in eval(&args, self.world) {
                let mut s2 = s.clone();
                if unify_args(&args, &tuple, &mut s2) {
                    self.solve(rest, s2, depth + 1);
                }
            }
            return;
        }
        for c in &self.kb.clauses {
            if c.head.pred != goal.pred || c.head.args.len() != goal.args.len() {
                continue;
            }
            self.renames += 1;
            let n = self.renames;
            let head = rename(&c.head, n);
            let mut s2 = s.clone();
            if !unify_args(&goal.args, &head.args, &mut s2) {
                continue;
            }
            let mut next: Vec<Atom> = c.body.iter().map(|b| rename(b, n)).collect();
            next.extend_from_slice(rest);
            self.solve(&next, s2, depth + 1);
        }
    }
}

fn collect_vars(goals: &[Atom]) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for g in goals {
        for t in &g.args {
            if let Term::Var(v) = t {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
        }
    }
    out
}

impl KnowledgeBase {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn is_computable(&self, pred: &str, arity: usize) -> bool {
        self.computables.contains_key(&(pred.to_string(), arity))
    }

    /// Adds a ground fact; asserting a fact already present is a no-op.
    pub fn assert_fact(&mut self, fact: Atom) -> Result<(), KbError> {
        if !fact.is_ground() {
            return Err(KbError::NotGround(fact.to_string()));
        }
        if self.computables.contains_key(&fact.key()) {
            return Err(KbError::ComputableHead(fact.pred));
        }
        let c = Clause { head: fact, body: Vec::new() };
        if !self.clauses.contains(&c) {
            self.clauses.push(c);
        }
        Ok(())
    }

    /// Removes a fact; retracting an absent fact is a no-op.
    pub fn retract_fact(&mut self, fact: &Atom) {
        self.clauses.retain(|c| !(c.body.is_empty() && c.head == *fact));
    }

    pub fn add_rule(&mut self, head: Atom, body: Vec<Atom>) -> Result<(), KbError> {
        if self.computables.contains_key(&head.key()) {
            return Err(KbError::ComputableHead(head.pred));
        }
        if body.is_empty() && head.is_ground() {
            return self.assert_fact(head);
        }
        self.clauses.push(Clause { head, body });
        Ok(())
    }

    pub fn register_computable(&mut self, name: &str, arity: usize, eval: Evaluator) -> Result<(), KbError> {
        let key = (name.to_string(), arity);
        if self.computables.contains_key(&key) || self.clauses.iter().any(|c| c.head.key() == key) {
            return Err(KbError::DuplicateRegistration(format!("{name}/{arity}")));
        }
        self.computables.insert(key, eval);
        Ok(())
    }

    /// SLD resolution of a conjunctive goal: clauses in assertion order,
    /// leftmost goal first, depth-first with backtracking. Solutions bind
    /// the goal's variables.
    pub fn query(&self, goals: &[Atom], world: &WorldState) -> QueryAnswer {
        let mut search = Search { kb: self, world, renames: 0, exceeded: false, found: Vec::new() };
        search.solve(goals, Subst::new(), 0);
        let vars = collect_vars(goals);
        let solutions = search
            .found
            .iter()
            .map(|s| vars.iter().map(|v| (v.clone(), resolve(&Term::Var(v.clone()), s))).collect())
            .collect();
        QueryAnswer { solutions, depth_exceeded: search.exceeded }
    }

    /// First solution of a single goal, if any.
    pub fn query_first(&self, goal: &Atom, world: &WorldState) -> Option<Solution> {
        self.query(std::slice::from_ref(goal), world).solutions.into_iter().next()
    }

    /// Loads `(fact (p a ...))` and `(rule (head ...) (body ...) ...)` forms.
    pub fn load_str(&mut self, text: &str) -> Result<(), KbError> {
        for form in read_all(text)? {
            let items = form.as_list().ok_or_else(|| KbError::Parse(at(&form, "a (fact ...) or (rule ...) form")))?;
            match items.first().and_then(Sexpr::as_symbol) {
                Some("fact") if items.len() == 2 => self.assert_fact(parse_atom(&items[1])?)?,
                Some("rule") if items.len() >= 2 => {
                    let body = items[2..].iter().map(parse_atom).collect::<Result<_, _>>()?;
                    self.add_rule(parse_atom(&items[1])?, body)?
                }
                _ => return Err(KbError::Parse(at(&form, "a (fact ...) or (rule ...) form"))),
            }
        }
        Ok(())
    }
}

fn at(s: &Sexpr, expected: &str) -> String {
    format!("{}:{}: expected {expected}", s.line, s.column)
}

fn parse_term(s: &Sexpr) -> Result<Term, KbError> {
    match &s.kind {
        SexprKind::Symbol(v) if v.starts_with('?') => Ok(Term::var(v)),
        SexprKind::Symbol(v) => Ok(Term::Sym(v.clone())),
        SexprKind::Str(v) => Ok(Term::Sym(v.clone())),
        SexprKind::Number(n) => Ok(Term::Num(*n)),
        SexprKind::List(items) => {
            let nums: Option<Vec<f64>> = items.get(1..).and_then(|r| r.iter().map(Sexpr::as_number).collect());
            match (items.first().and_then(Sexpr::as_symbol), nums) {
                (Some("pose"), Some(n)) if n.len() == 4 => Ok(Term::Pose(Pose::new(n[0], n[1], n[2], n[3]))),
                _ => Err(KbError::Parse(at(s, "a symbol, number, variable or (pose x y z yaw)"))),
            }
        }
    }
}

pub fn parse_atom(s: &Sexpr) -> Result<Atom, KbError> {
    let items = s.as_list().ok_or_else(|| KbError::Parse(at(s, "(predicate args...)")))?;
    let pred = items.first().and_then(Sexpr::as_symbol).ok_or_else(|| KbError::Parse(at(s, "a predicate name")))?;
    Ok(Atom::new(pred, items[1..].iter().map(parse_term).collect::<Result<_, _>>()?))
}

/// Parses one goal such as `(likely-location spoon-1 ?l)`.
pub fn parse_goal(text: &str) -> Result<Atom, KbError> {
    let forms = read_all(text)?;
    match forms.as_slice() {
        [one] => parse_atom(one),
        _ => Err(KbError::Parse("expected exactly one goal".into())),
    }
}
