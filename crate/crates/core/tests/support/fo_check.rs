#![allow(dead_code)]
//! Brute-force model checker for emitted first-order queries over a
//! database plus its numerical extension. Quantifiers range over the
//! extended domain; atoms with some bound positions prune the search.

use std::cell::Cell;
use std::collections::{BTreeSet, HashMap, HashSet};
use std::time::{Duration, Instant};

use ontoq_core::emitters::{Fo, FoQuery, FoTerm};
use ontoq_core::evaluator::build_extension;
use ontoq_core::{Database, Symbol, Value};

pub struct Structure {
    rel: HashMap<Symbol, HashSet<Vec<Value>>>,
    pub domain: Vec<Value>,
    deadline: Option<Instant>,
    expired: Cell<bool>,
}

impl Structure {
    pub fn new(db: &Database, n: u32, extra: impl IntoIterator<Item = Value>) -> Structure {
        let ext = build_extension(db, n);
        let mut rel: HashMap<Symbol, HashSet<Vec<Value>>> = HashMap::new();
        for f in db.facts().iter().chain(ext.facts().iter()) {
            let t: Vec<Value> = f.args.iter().map(|a| Value::from_term(a).expect("ground")).collect();
            rel.entry(f.predicate.clone()).or_default().insert(t);
        }
        let mut domain: BTreeSet<Value> = ext.domain.clone();
        domain.extend(extra);
        Structure {
            rel,
            domain: domain.into_iter().collect(),
            deadline: None,
            expired: Cell::new(false),
        }
    }

    /// Give up on searches that run longer than `limit`.
    pub fn with_limit(mut self, limit: Duration) -> Structure {
        self.deadline = Some(Instant::now() + limit);
        self
    }

    fn out_of_time(&self) -> bool {
        if !self.expired.get() && self.deadline.is_some_and(|d| Instant::now() > d) {
            self.expired.set(true);
        }
        self.expired.get()
    }
}

type Env = HashMap<Symbol, Value>;

fn value(t: &FoTerm, env: &Env) -> Option<Value> {
    match t {
        FoTerm::Val(v) => Some(v.clone()),
        FoTerm::Var(x) => env.get(x).cloned(),
    }
}

/// Constants mentioned in a formula.
pub fn constants(f: &Fo, out: &mut BTreeSet<Value>) {
    let mut term = |t: &FoTerm| {
        if let FoTerm::Val(v) = t {
            out.insert(v.clone());
        }
    };
    match f {
        Fo::Atom(_, ts) => ts.iter().for_each(term),
        Fo::Eq(a, b) | Fo::Neq(a, b) => {
            term(a);
            term(b);
        }
        Fo::And(fs) | Fo::Or(fs) => fs.iter().for_each(|g| constants(g, out)),
        Fo::Exists(_, g) => constants(g, out),
        Fo::True | Fo::False => {}
    }
}

/// Three-valued evaluation: `None` when unbound variables decide the result.
fn eval(f: &Fo, s: &Structure, env: &mut Env) -> Option<bool> {
    match f {
        Fo::True => Some(true),
        Fo::False => Some(false),
        Fo::Atom(p, ts) => {
            let vals: Vec<Option<Value>> = ts.iter().map(|t| value(t, env)).collect();
            let rows = s.rel.get(p);
            if vals.iter().all(Option::is_some) {
                let t: Vec<Value> = vals.into_iter().map(Option::unwrap).collect();
                return Some(rows.is_some_and(|r| r.contains(&t)));
            }
            let any = rows.is_some_and(|r| {
                r.iter()
                    .any(|row| row.iter().zip(&vals).all(|(x, v)| v.as_ref().is_none_or(|v| v == x)))
            });
            if any {
                None
            } else {
                Some(false)
            }
        }
        Fo::Eq(a, b) => Some(value(a, env)? == value(b, env)?),
        Fo::Neq(a, b) => Some(value(a, env)? != value(b, env)?),
        Fo::And(fs) => {
            let mut all = true;
            for g in fs {
                match eval(g, s, env) {
                    Some(false) => return Some(false),
                    None => all = false,
                    Some(true) => {}
                }
            }
            all.then_some(true)
        }
        Fo::Or(fs) => {
            let mut none = true;
            for g in fs {
                match eval(g, s, env) {
                    Some(true) => return Some(true),
                    None => none = false,
                    Some(false) => {}
                }
            }
            none.then_some(false)
        }
        Fo::Exists(vs, body) => {
            let saved: Vec<Option<Value>> = vs.iter().map(|v| env.remove(v)).collect();
            let r = search(vs, body, s, env);
            for (v, old) in vs.iter().zip(saved) {
                env.remove(v);
                if let Some(o) = old {
                    env.insert(v.clone(), o);
                }
            }
            r
        }
    }
}

fn search(vs: &[Symbol], body: &Fo, s: &Structure, env: &mut Env) -> Option<bool> {
    if s.out_of_time() {
        return Some(false);
    }
    match eval(body, s, env) {
        Some(b) => return Some(b),
        None if vs.iter().all(|v| env.contains_key(v)) => return None,
        None => {}
    }
    let v = vs.iter().find(|v| !env.contains_key(*v)).expect("some unbound");
    let mut unknown = false;
    for d in &s.domain {
        env.insert(v.clone(), d.clone());
        match search(vs, body, s, env) {
            Some(true) => {
                env.remove(v);
                return Some(true);
            }
            None => unknown = true,
            Some(false) => {}
        }
    }
    env.remove(v);
    if unknown {
        None
    } else {
        Some(false)
    }
}

/// Answer tuples of `q`, or `None` when the time limit ran out.
pub fn answers_within(q: &FoQuery, s: &Structure) -> Option<BTreeSet<Vec<Value>>> {
    let out = answers(q, s);
    (!s.expired.get()).then_some(out)
}

/// Answer tuples of `q` (the empty tuple for a true sentence).
pub fn answers(q: &FoQuery, s: &Structure) -> BTreeSet<Vec<Value>> {
    let mut out = BTreeSet::new();
    let mut env = Env::new();
    let mut tuple = Vec::new();
    fill(q, s, &mut env, &mut tuple, &mut out);
    out
}

fn fill(q: &FoQuery, s: &Structure, env: &mut Env, tuple: &mut Vec<Value>, out: &mut BTreeSet<Vec<Value>>) {
    if tuple.len() == q.free.len() {
        if eval(&q.formula, s, env) == Some(true) {
            out.insert(tuple.clone());
        }
        return;
    }
    let v = &q.free[tuple.len()];
    for d in &s.domain {
        env.insert(v.clone(), d.clone());
        tuple.push(d.clone());
        if eval(&q.formula, s, env) != Some(false) {
            fill(q, s, env, tuple, out);
        }
        tuple.pop();
    }
    env.remove(v);
}
