//! SQL and first-order renderings agree with direct evaluation.

#[path = "support/fo_check.rs"]
mod fo_check;
#[path = "support/sql_run.rs"]
mod sql_run;

use std::collections::BTreeSet;

use ontoq_core::emitters::{to_fo_formula, to_sql_with_facts};
use ontoq_core::evaluator::{evaluate, Answer};
use ontoq_core::harness::gen_program;
use ontoq_core::{parse_facts, parse_facts_with, parse_program, Value};
use proptest::prelude::*;

fn fo_answer(program: &ontoq_core::DatalogProgram, db: &ontoq_core::Database, n: u32) -> Answer {
    let q = to_fo_formula(program).unwrap();
    // The evaluator's domain also holds constants of rules the goal never
    // reaches, which the inlined formula drops.
    let mut consts: BTreeSet<Value> = program
        .rules
        .iter()
        .flat_map(|r| std::iter::once(&r.head).chain(&r.body))
        .flat_map(|a| a.args.iter().filter_map(Value::from_term))
        .collect();
    fo_check::constants(&q.formula, &mut consts);
    let m = ontoq_core::rewriter::numeric_bound(program, n);
    let s = fo_check::Structure::new(db, m, consts);
    let ans = fo_check::answers(&q, &s);
    if program.goal_arity == 0 {
        Answer::Boolean(!ans.is_empty())
    } else {
        Answer::Tuples(ans)
    }
}

#[test]
fn sqlite_runs_a_small_script() {
    let p = parse_program("%@goal q/2\nq(X,Z) :- E(X,Y), E(Y,Z), Neq(X,Z).\nq(X,1) :- U(X), One(1).").unwrap();
    let db = parse_facts("E(a,b). E(b,a). E(b,c). U(a).").unwrap();
    let got = sql_run::run_sql(&to_sql_with_facts(&p, &db, 1).unwrap()).unwrap();
    let v = |s: &str| Value::Const(s.into());
    let expect: BTreeSet<Vec<Value>> =
        [vec![v("a"), v("c")], vec![v("a"), Value::Num(1)]].into_iter().collect();
    assert_eq!(got, Answer::Tuples(expect));
    assert_eq!(fo_answer(&p, &db, 1), got);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn sql_matches_evaluation(seed in any::<u64>()) {
        let case = gen_program(seed);
        let p = parse_program(&case.program).unwrap();
        let db = parse_facts_with(&case.facts, true).unwrap();
        let expect = evaluate(&p, &db, case.n).unwrap().answer;
        let script = to_sql_with_facts(&p, &db, case.n).unwrap();
        let got = sql_run::run_sql(&script).unwrap();
        prop_assert_eq!(got, expect, "{}", script.text());
    }

    #[test]
    fn fo_matches_evaluation(seed in any::<u64>()) {
        let case = gen_program(seed);
        let p = parse_program(&case.program).unwrap();
        let db = parse_facts_with(&case.facts, true).unwrap();
        let expect = evaluate(&p, &db, case.n).unwrap().answer;
        prop_assert_eq!(fo_answer(&p, &db, case.n), expect, "{}", case.program);
    }
}

#[test]
fn long_bodies_keep_the_answer() {
    // Nested subqueries for 150 atoms, chained views for 250.
    for len in [150, 250] {
        let body: Vec<String> = (0..len).map(|i| format!("E(X{i},X{})", i + 1)).collect();
        let p = parse_program(&format!("%@goal q/2\nq(X0,X{len}) :- {}, Neq(X0, X{len}).", body.join(", "))).unwrap();
        let db = parse_facts("E(a,a). E(a,b). E(b,b).").unwrap();
        let expect = evaluate(&p, &db, 1).unwrap().answer;
        assert!(expect.holds());
        assert_eq!(sql_run::run_sql(&to_sql_with_facts(&p, &db, 1).unwrap()).unwrap(), expect, "{len} atoms");
    }
}
