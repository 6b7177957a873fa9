use super::*;
use crate::chase::{entails, Entailment};
use crate::model::Value;
use crate::parser::{parse_facts, parse_query, parse_tgds};

const TGDS: &str = "
    R1(X,Y) -> exists Z: R4(X,Y,Z).
    R2(Y,Z) -> exists X: R4(X,Y,Z).
    R3(X,Z) -> exists Y: R4(X,Y,Z).
    R4(X1,Y1,Z1), R4(X2,Y2,Z2) -> R5(X1,Z2).
";
const FACTS: &str = "R1(a,b). R1(c,d). R2(e,g). R3(g,a). R3(g,h).";
const QUERY: &str = "? :- R5(X,Y), R3(Y,X).";

fn problem() -> UniformizedProblem {
    uniformize(&parse_tgds(TGDS).unwrap(), &parse_query(QUERY).unwrap()).unwrap()
}

fn chase_atoms_expected(n: u32) -> usize {
    let n = n as usize;
    7 * n + 35 * n * (n - 1) / 2 + 15 * (n - 1) * n * (2 * n - 1) / 6
}

#[test]
fn wide_program_shape() {
    let u = problem();
    let p = build_program(&u, &RewriteParams::new(6, Variant::Wide)).unwrap();
    assert_eq!(p.max_arity(), 9);
    assert!(p.is_nonrecursive());
    assert_eq!(p.goal_arity, 0);
    assert_eq!(p.numeric_bound, Some(7));
    let goal_rules: Vec<&Rule> = p.rules.iter().filter(|r| r.head.predicate == p.goal).collect();
    assert_eq!(goal_rules.len(), 1);
}

#[test]
fn chase_part_size_matches_closed_form() {
    let u = problem();
    for n in [4, 6, 8, 12] {
        let ctx = Context::new(&u, n).unwrap();
        let mut kinds = BTreeMap::new();
        let (atoms, _) = build_r_chase(&ctx, &mut kinds);
        assert_eq!(atoms.len(), chase_atoms_expected(n), "N = {n}");
    }
    assert_eq!(chase_atoms_expected(4), 448);
    assert_eq!(chase_atoms_expected(16), 22912);
}

#[test]
fn reduced_program_has_small_arity_and_no_implications() {
    let u = problem();
    let p = build_program(&u, &RewriteParams::new(6, Variant::Reduced)).unwrap();
    assert_eq!(p.max_arity(), 4);
    assert!(p.is_nonrecursive());
    assert!(p.rules.iter().all(|r| std::iter::once(&r.head)
        .chain(&r.body)
        .all(|a| !a.predicate.starts_with("IfThen"))));
}

#[test]
fn bitvector_program_needs_only_bits() {
    let u = problem();
    let p = build_program(&u, &RewriteParams::new(6, Variant::Bitvec)).unwrap();
    assert_eq!(p.numeric_bound, Some(1));
    assert!(p.is_nonrecursive());
    let numbers: BTreeSet<u32> = p
        .rules
        .iter()
        .flat_map(|r| std::iter::once(&r.head).chain(&r.body))
        .flat_map(|a| a.args.iter())
        .filter_map(|t| match t {
            Term::Num(n) => Some(*n),
            _ => None,
        })
        .collect();
    assert!(numbers.iter().all(|n| *n <= 1), "{numbers:?}");
    assert_eq!(BitVectorLayout::for_bound(7).unwrap().width, 3);
    assert_eq!(BitVectorLayout::for_bound(8).unwrap().width, 4);
    assert_eq!(BitVectorLayout::for_bound(7).unwrap().bits(6), vec![1, 1, 0]);
}

#[test]
fn too_few_steps_rejected() {
    let u = problem();
    assert_eq!(
        build_program(&u, &RewriteParams::new(3, Variant::Wide)).unwrap_err(),
        RewriteError::StepsTooSmall { n: 3, min: 4 }
    );
}

#[test]
fn builtin_predicate_names_rejected() {
    let sigma = parse_tgds("Num(X) -> P(X).").unwrap();
    let q = parse_query("? :- P(X).").unwrap();
    let err = rewrite(&sigma, &q, &RewriteParams::new(2, Variant::Wide)).unwrap_err();
    assert!(matches!(err, RewriteError::ReservedPredicate(_)));
}

#[test]
fn generated_names_avoid_user_predicates() {
    let sigma = parse_tgds("T(X,Y) -> exists Z: goal(Y,Z).").unwrap();
    let q = parse_query("? :- goal(X,Y).").unwrap();
    let r = rewrite(&sigma, &q, &RewriteParams::new(2, Variant::Wide)).unwrap();
    assert_ne!(&*r.program.goal, "goal");
    assert!(r.program.is_nonrecursive());
}

#[test]
fn witness_encoding_matches_reference_table() {
    let u = problem();
    let db = u.pad_database(&parse_facts(FACTS).unwrap());
    let Entailment::Yes(w) = entails(&db, &u.sigma_u, &u.query_u, 6) else {
        panic!("expected entailment")
    };
    let (rows, q_rows) = encode_witness(&u, &db, &w, 6).unwrap();
    let c = |s: &str| Value::Const(sym(s));
    let n = Value::Num;
    let expected = [
        (1, 0, [c("a"), c("b"), c("a")], 0, [0, 0]),
        (4, 1, [c("a"), c("b"), n(2)], 1, [1, 1]),
        (2, 0, [c("e"), c("g"), c("e")], 0, [0, 0]),
        (4, 1, [n(4), c("e"), c("g")], 2, [3, 3]),
        (5, 1, [c("a"), c("g"), c("a")], 4, [2, 4]),
        (3, 0, [c("g"), c("a"), c("g")], 0, [0, 0]),
    ];
    for (row, (r, f, x, s, cs)) in rows.iter().zip(expected) {
        assert_eq!((row.r, row.f, row.x.as_slice(), row.s, row.c.as_slice()), (r, f, &x[..], s, &cs[..]), "row {}", row.i);
    }
    assert_eq!(q_rows, vec![5, 6]);
    let table = format_encoding_table(&rows);
    assert!(table.lines().next().unwrap().split_whitespace().eq(["i", "r", "f", "x1", "x2", "x3", "s", "c1", "c2"]));

    let b = encoding_bindings(&rows, &q_rows, Variant::Wide, None);
    assert_eq!(b[&sym("X_4_1")], n(4));
    assert_eq!(b[&sym("Q_2")], n(6));
    assert_eq!(decode_assignment(&b, 6, 3, 2).unwrap(), rows);
    let layout = BitVectorLayout::for_bound(7).unwrap();
    let bb = encoding_bindings(&rows, &q_rows, Variant::Bitvec, Some(layout));
    assert_eq!(bb[&sym("X_4_1_v")], n(0));
    assert_eq!(bb[&sym("X_1_1_v")], c("a"));
    assert_eq!(decode_assignment(&bb, 6, 3, 2).unwrap(), rows);
}

#[test]
fn witness_longer_than_n_is_rejected() {
    let u = problem();
    let db = u.pad_database(&parse_facts(FACTS).unwrap());
    let w = entails(&db, &u.sigma_u, &u.query_u, 6).witness().cloned().unwrap();
    assert!(encode_witness(&u, &db, &w, 5).is_err());
}

#[test]
fn output_query_has_goal_arity() {
    let sigma = parse_tgds(TGDS).unwrap();
    let q = parse_query("q(X) :- R5(X,Y), R3(Y,X).").unwrap();
    for v in Variant::ALL {
        let r = rewrite(&sigma, &q, &RewriteParams::new(4, v)).unwrap();
        assert_eq!(r.program.goal_arity, 1);
        assert!(r.program.is_nonrecursive());
    }
}
