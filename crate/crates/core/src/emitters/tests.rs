use super::*;
use crate::model::{sym, Database, Value};
use crate::parser::{parse_facts, parse_program};

#[test]
fn view_per_rule_head() {
    let p = parse_program("%@goal p/1\np(X) :- R1(X,Y).").unwrap();
    let db = parse_facts("R1(a,b).").unwrap();
    let s = to_sql_with_facts(&p, &db, 1).unwrap();
    assert!(s.setup.contains("CREATE TABLE R1 (c1 VARCHAR(255) NOT NULL, c2 VARCHAR(255) NOT NULL);"));
    assert!(s.setup.contains("INSERT INTO R1 VALUES ('a', 'b');"));
    assert!(s.setup.contains("CREATE VIEW p (c1) AS\n  SELECT DISTINCT t0.c1 AS c1 FROM R1 t0;"), "{}", s.setup);
    assert_eq!(s.query, "SELECT DISTINCT c1 FROM p ORDER BY c1;");
    assert!(!s.boolean);
}

#[test]
fn numeric_extension_rows() {
    let p = parse_program("goal :- Num(X).").unwrap();
    let s = to_sql(&p, &Default::default(), 3).unwrap();
    assert_eq!(s.setup.matches("INSERT INTO Num ").count(), 3);
    assert_eq!(s.setup.matches("INSERT INTO Succ ").count(), 3);
    assert_eq!(s.setup.matches("INSERT INTO Lt ").count(), 6);
    assert!(s.setup.contains("INSERT INTO Zero VALUES ('0');"));
    assert_eq!(s.query, "SELECT EXISTS (SELECT 1 FROM goal) AS answer;");
}

#[test]
fn keywords_and_case_clashes_are_renamed() {
    let p = parse_program("goal :- order(X), Order(X), select(X).").unwrap();
    let s = to_sql(&p, &Default::default(), 1).unwrap();
    let renamed: Vec<&str> = s.renamed.iter().map(|(a, _)| a.as_str()).collect();
    assert!(renamed.contains(&"order"));
    assert!(renamed.contains(&"select"));
    assert!(renamed.contains(&"Order"));
    assert!(!s.setup.contains("CREATE TABLE order "));
}

#[test]
fn neq_only_variables_range_over_the_domain() {
    let p = parse_program("goal :- R(X), Neq(X, Y).").unwrap();
    let s = to_sql(&p, &Default::default(), 1).unwrap();
    assert!(s.setup.contains("CREATE VIEW Dom (c1)"));
    assert!(s.setup.contains("<>"));
    let p = parse_program("goal :- R(X), R(Y), Neq(X, Y).").unwrap();
    assert!(!to_sql(&p, &Default::default(), 1).unwrap().setup.contains("Dom"));
}

#[test]
fn value_encoding_round_trips() {
    for v in [Value::Num(0), Value::Num(12), Value::Const(sym("a")), Value::Const(sym("12")), Value::Const(sym("c:x"))] {
        assert_eq!(parse_sql_value(&sql_value(&v)), v, "{v:?}");
    }
    assert_eq!(sql_value(&Value::Const(sym("7"))), "c:7");
}

#[test]
fn recursive_programs_are_rejected() {
    let p = parse_program("goal :- p(X).\np(X) :- p(X).").unwrap();
    assert_eq!(to_sql(&p, &Default::default(), 1).unwrap_err(), EmitError::Recursive);
    assert_eq!(to_fo_formula(&p).unwrap_err(), EmitError::Recursive);
}

#[test]
fn undefined_goal() {
    let p = parse_program("%@goal ans/0\nfoo :- R(X).").unwrap();
    assert_eq!(to_sql(&p, &Default::default(), 1).unwrap().query, "SELECT 0 AS answer;");
    assert_eq!(to_fo_formula(&p).unwrap().formula, Fo::False);
}

#[test]
fn fo_inlines_definitions() {
    let p = parse_program("goal :- p.\np :- One(X).").unwrap();
    assert_eq!(to_fo_formula(&p).unwrap().to_string(), "exists X (One(X))");

    let p = parse_program("%@goal q/1\nq(X) :- E(X,Y), s(Y).\ns(Z) :- U(Z).\ns(a) :- V(W).").unwrap();
    let f = to_fo_formula(&p).unwrap();
    assert_eq!(f.free, vec![sym("Out1")]);
    let text = f.to_string();
    assert!(text.starts_with("{ Out1 | exists Y (E(Out1,Y) & (U(Y) | "), "{text}");
    assert!(text.contains("exists W (a = Y & V(W))"), "{text}");
}

#[test]
fn fo_text_parses_back() {
    let programs = [
        "goal :- p.\np :- One(X).",
        "%@goal q/2\nq(X,Y) :- E(X,Z), E(Z,Y), Neq(X,Y).\nq(X,X) :- U(X), Lt(0, 3).",
        "goal :- a(X), b(X).\na(X) :- E(X,c).\na(X) :- U(X).\nb(Y) :- E(Y,Y).",
    ];
    for text in programs {
        let f = to_fo_formula(&parse_program(text).unwrap()).unwrap();
        let back = parse_fo(&f.to_string()).unwrap();
        assert_eq!(back, f, "{f}");
        assert!(f.formula.size() > 0);
    }
    assert!(parse_fo("exists X (E(X)").is_err());
    assert!(parse_fo("E(X) &").is_err());
    let e = parse_fo("E(X) | | U(X)").unwrap_err();
    assert_eq!(e.pos, 7);
}

#[test]
fn fo_quantifier_depth() {
    let f = parse_fo("exists X (E(X,X) & exists Y, Z (E(Y,Z)))").unwrap();
    assert_eq!(f.formula.quantifier_depth(), 2);
    let _ = Database::new();
}

#[test]
fn long_bodies_nest_exists_subqueries() {
    let body: Vec<String> = (0..130).map(|i| format!("E(X{i},X{})", i + 1)).collect();
    let p = parse_program(&format!("%@goal q/2\nq(X0,X130) :- {}.", body.join(", "))).unwrap();
    let s = to_sql(&p, &Default::default(), 1).unwrap();
    assert_eq!(s.setup.matches("EXISTS (").count(), 2, "{}", s.setup);
    assert!(s.renamed.is_empty());
    let view = s.setup.lines().skip_while(|l| !l.starts_with("CREATE VIEW q ")).nth(1).unwrap();
    for part in view.split(" FROM ").skip(1) {
        let from = part.split(" WHERE ").next().unwrap();
        assert!(from.split(", ").count() <= super::sql::MAX_JOIN, "{from}");
    }
    // Both head variables come from the outer join.
    let outer = view.split(" FROM ").next().unwrap();
    assert!(outer.contains("AS c1") && outer.contains("AS c2"));
}

#[test]
fn very_long_bodies_fall_back_to_chained_views() {
    let len = super::sql::MAX_JOIN * super::sql::MAX_NEST + 10;
    let body: Vec<String> = (0..len).map(|i| format!("E(X{i},X{})", i + 1)).collect();
    let p = parse_program(&format!("%@goal q/2\nq(X0,X{len}) :- {}.", body.join(", "))).unwrap();
    let s = to_sql(&p, &Default::default(), 1).unwrap();
    assert!(!s.setup.contains("EXISTS ("));
    for k in 1..=super::sql::MAX_NEST {
        assert!(s.setup.contains(&format!("CREATE VIEW q_part{k} (c1, c2) AS")), "{}", s.setup);
    }
    assert!(!s.setup.contains(&format!("q_part{}", super::sql::MAX_NEST + 1)));
}
