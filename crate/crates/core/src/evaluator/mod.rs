//! Evaluation of nonrecursive Datalog programs with the numeric extension
//! over a database.
//!
//! Small IDB relations are materialized bottom-up. Large ones (typically the
//! tuple predicates of rewritten programs) stay virtual and are folded into
//! the goal rule as choice constraints. Recognized gadget predicates become
//! propagators. Each goal rule is then solved as a constraint problem.

mod branching;
mod builder;
mod extension;
mod naive;
mod solver;
mod universe;


use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::model::{Database, DatalogProgram, Symbol, Term, Value};
use crate::rewriter::numeric_bound;
use branching::Brancher;
use builder::{dedup, needed_order, validate, Env, PredKind};
use solver::{min_domain, values_ascending, Flow, Stop, Var};

pub use extension::{build_extension, NumericExtension};
pub use naive::naive_evaluate;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("program is recursive")]
    Recursive,
    #[error("unknown predicate {0}")]
    UnknownPredicate(String),
    #[error("predicate {predicate} used with arity {found}, expected {expected}")]
    Arity {
        predicate: String,
        expected: usize,
        found: usize,
    },
    #[error("variable {var} of the head does not occur in the body of {rule}")]
    UnsafeRule { var: String, rule: String },
    #[error("rules define the reserved predicate {0}")]
    Reserved(String),
    #[error("evaluation exceeded its time budget of {millis} ms")]
    Resource { millis: u128 },
}

#[derive(Debug, Clone)]
pub struct EvalConfig {
    pub timeout: Option<Duration>,
    /// Largest IDB relation to materialize; bigger ones stay virtual.
    pub materialize_cap: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            timeout: None,
            materialize_cap: 4096,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Answer {
    Boolean(bool),
    Tuples(BTreeSet<Vec<Value>>),
}

impl Answer {
    /// True iff the goal holds (Boolean) or has some answer.
    pub fn holds(&self) -> bool {
        match self {
            Answer::Boolean(b) => *b,
            Answer::Tuples(t) => !t.is_empty(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EvalStats {
    pub search_nodes: u64,
    pub materialized: usize,
    pub virtual_predicates: usize,
    pub gadgets: usize,
    pub millis: u128,
}

impl EvalStats {
    pub fn to_key_value(&self) -> String {
        format!(
            "search_nodes={}\nmaterialized={}\nvirtual_predicates={}\ngadgets={}\neval_millis={}\n",
            self.search_nodes, self.materialized, self.virtual_predicates, self.gadgets, self.millis
        )
    }
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub answer: Answer,
    /// Goal-rule variables of the first satisfying assignment (Boolean goals).
    pub assignment: Option<BTreeMap<Symbol, Value>>,
    pub stats: EvalStats,
}

/// IDB predicates grouped by dependency depth.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stratum {
    pub predicates: Vec<Symbol>,
}

pub fn stratify(program: &DatalogProgram) -> Result<Vec<Stratum>, EvalError> {
    let order = program.topological_order().ok_or(EvalError::Recursive)?;
    let deps = program.dependencies();
    let mut depth: HashMap<Symbol, usize> = HashMap::new();
    for p in &order {
        let d = deps[p].iter().filter_map(|q| depth.get(q)).map(|d| d + 1).max().unwrap_or(0);
        depth.insert(p.clone(), d);
    }
    let mut strata: Vec<Stratum> = Vec::new();
    for p in order {
        let d = depth[&p];
        if strata.len() <= d {
            strata.resize(d + 1, Stratum { predicates: Vec::new() });
        }
        strata[d].predicates.push(p);
    }
    Ok(strata)
}

/// Evaluate `program` over `db` extended with numbers up to
/// `max(n, program.numeric_bound)`.
pub fn evaluate(program: &DatalogProgram, db: &Database, n: u32) -> Result<Evaluation, EvalError> {
    evaluate_with(program, db, n, &EvalConfig::default())
}

pub fn evaluate_with(program: &DatalogProgram, db: &Database, n: u32, config: &EvalConfig) -> Result<Evaluation, EvalError> {
    evaluate_with_bindings(program, db, n, &BTreeMap::new(), config)
}

/// Like [`evaluate_with`], with some goal-rule variables fixed by name.
pub fn evaluate_with_bindings(
    program: &DatalogProgram,
    db: &Database,
    n: u32,
    bindings: &BTreeMap<Symbol, Value>,
    config: &EvalConfig,
) -> Result<Evaluation, EvalError> {
    validate(program, db)?;
    let start = Instant::now();
    let deadline = config.timeout.map(|t| start + t);
    let timeout = || EvalError::Resource {
        millis: config.timeout.map_or(0, |t| t.as_millis()),
    };
    let extra: Vec<Value> = bindings.values().cloned().collect();
    let mut env = Env::new(program, db, numeric_bound(program, n), &extra, deadline, config.materialize_cap);
    let mut arities: HashMap<Symbol, usize> = HashMap::new();
    for r in &program.rules {
        arities.insert(r.head.predicate.clone(), r.head.arity());
    }
    env.prepare(&needed_order(program), &program.goal, &arities).map_err(|_| timeout())?;

    let mut stats = EvalStats::default();
    for k in env.kinds.values() {
        match k {
            PredKind::Table(_) => stats.materialized += 1,
            PredKind::Virtual => stats.virtual_predicates += 1,
            PredKind::Gadget(..) => stats.gadgets += 1,
            PredKind::Builtin(_) => {}
        }
    }
    stats.materialized -= db.schema().len().min(stats.materialized);

    let mut holds = false;
    let mut tuples = BTreeSet::new();
    let mut assignment = None;
    let goal_rules = env.rules.get(&program.goal).cloned().unwrap_or_default();
    for rule in &goal_rules {
        let fixed: HashMap<Symbol, u32> = bindings
            .iter()
            .filter_map(|(k, v)| Some((k.clone(), env.universe.id(v)?)))
            .collect();
        let solved = (|| -> Result<(), Stop> {
            let Some((mut s, vars)) = env.body_solver(&rule.body, &fixed, true)? else {
                return Ok(());
            };
            if !s.propagate() {
                return Ok(());
            }
            let brancher = Brancher::new(&s);
            let mut select = |s: &solver::Solver| brancher.select(s);
            if program.goal_arity == 0 {
                let mut snap = Vec::new();
                if s.solve(&mut select, &mut |s| snap = s.snapshot())? {
                    holds = true;
                    let mut named = BTreeMap::new();
                    for (name, &v) in &vars {
                        if let Some(id) = snap[v as usize] {
                            named.insert(name.clone(), env.universe.value(id).clone());
                        }
                    }
                    assignment = Some(named);
                }
            } else {
                let head: Vec<Result<Var, u32>> = rule
                    .head
                    .args
                    .iter()
                    .map(|t| match t {
                        Term::Var(v) => Ok(vars[v]),
                        c => Err(env.universe.id(&Value::from_term(c).unwrap()).unwrap()),
                    })
                    .collect();
                let proj = dedup(head.iter().filter_map(|h| h.ok()));
                let mut found = Vec::new();
                s.search(
                    &mut |s| min_domain(s, &proj).map(|v| (v, values_ascending(s, v))),
                    &mut |s| {
                        if s.solve(&mut select, &mut |_| {})? {
                            found.push(
                                head.iter()
                                    .map(|h| env.universe.value(h.map_or_else(|c| c, |v| s.value(v).unwrap())).clone())
                                    .collect::<Vec<_>>(),
                            );
                        }
                        Ok(Flow::Continue)
                    },
                )?;
                tuples.extend(found);
            }
            stats.search_nodes += s.nodes;
            Ok(())
        })();
        if solved.is_err() || env.aborted.get() {
            return Err(timeout());
        }
        if holds {
            break;
        }
    }
    stats.millis = start.elapsed().as_millis();
    let answer = if program.goal_arity == 0 {
        Answer::Boolean(holds)
    } else {
        Answer::Tuples(tuples)
    };
    Ok(Evaluation {
        answer,
        assignment,
        stats,
    })
}
