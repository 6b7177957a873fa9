//! Reference evaluator: materializes every relation, including Neq over
//! the whole domain, and joins rule bodies with nested loops. Slow but
//! simple; used to cross-check the constraint-based evaluator.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::builder::validate;
use super::{Answer, EvalError};
use crate::gadgets::{LT, NEQ, NUM, ONE, SUCC, ZERO};
use crate::model::{sym, Database, DatalogProgram, Rule, Symbol, Term, Value};
use crate::rewriter::numeric_bound;

type Rel = BTreeSet<Vec<Value>>;

pub fn naive_evaluate(program: &DatalogProgram, db: &Database, n: u32) -> Result<Answer, EvalError> {
    validate(program, db)?;
    let m = numeric_bound(program, n);
    let mut domain: BTreeSet<Value> = (0..=m).map(Value::Num).collect();
    for f in db.facts() {
        domain.extend(f.args.iter().filter_map(Value::from_term));
    }
    for r in &program.rules {
        for a in std::iter::once(&r.head).chain(&r.body) {
            domain.extend(a.args.iter().filter_map(Value::from_term));
        }
    }
    let mut rels: HashMap<Symbol, Rel> = HashMap::new();
    for f in db.facts() {
        rels.entry(f.predicate.clone())
            .or_default()
            .insert(f.args.iter().filter_map(Value::from_term).collect());
    }
    let num = Value::Num;
    rels.insert(sym(NUM), (1..=m).map(|i| vec![num(i)]).collect());
    rels.insert(sym(ZERO), [vec![num(0)]].into());
    rels.insert(sym(ONE), [vec![num(1)]].into());
    rels.insert(sym(SUCC), (0..m).map(|i| vec![num(i), num(i + 1)]).collect());
    rels.insert(
        sym(LT),
        (0..=m).flat_map(|i| (i + 1..=m).map(move |j| vec![num(i), num(j)])).collect(),
    );
    let mut neq = Rel::new();
    for a in &domain {
        for b in &domain {
            if a != b {
                neq.insert(vec![a.clone(), b.clone()]);
            }
        }
    }
    rels.insert(sym(NEQ), neq);

    let order = program.topological_order().ok_or(EvalError::Recursive)?;
    for p in &order {
        let mut out = Rel::new();
        for r in program.rules.iter().filter(|r| &r.head.predicate == p) {
            fire(r, &rels, &mut out);
        }
        rels.insert(p.clone(), out);
    }
    let goal = rels.remove(&program.goal).unwrap_or_default();
    Ok(if program.goal_arity == 0 {
        Answer::Boolean(!goal.is_empty())
    } else {
        Answer::Tuples(goal)
    })
}

fn fire(rule: &Rule, rels: &HashMap<Symbol, Rel>, out: &mut Rel) {
    fn go(rule: &Rule, i: usize, env: &mut BTreeMap<Symbol, Value>, rels: &HashMap<Symbol, Rel>, out: &mut Rel) {
        if i == rule.body.len() {
            out.insert(
                rule.head
                    .args
                    .iter()
                    .map(|t| match t {
                        Term::Var(v) => env[v].clone(),
                        c => Value::from_term(c).unwrap(),
                    })
                    .collect(),
            );
            return;
        }
        let atom = &rule.body[i];
        let Some(rel) = rels.get(&atom.predicate) else { return };
        'tuples: for tuple in rel {
            let mut bound = Vec::new();
            for (t, val) in atom.args.iter().zip(tuple) {
                match t {
                    Term::Var(v) => match env.get(v) {
                        Some(x) if x != val => {
                            for b in bound {
                                env.remove(&b);
                            }
                            continue 'tuples;
                        }
                        Some(_) => {}
                        None => {
                            env.insert(v.clone(), val.clone());
                            bound.push(v.clone());
                        }
                    },
                    c => {
                        if Value::from_term(c).as_ref() != Some(val) {
                            for b in bound {
                                env.remove(&b);
                            }
                            continue 'tuples;
                        }
                    }
                }
            }
            go(rule, i + 1, env, rels, out);
            for b in bound {
                env.remove(&b);
            }
        }
    }
    go(rule, 0, &mut BTreeMap::new(), rels, out);
}
