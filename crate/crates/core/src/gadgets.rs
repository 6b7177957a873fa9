//! Datalog definitions of the guarded-implication and Boolean-gate
//! predicates, and their pointwise semantics.
//!
//! The rewriter emits these rules; the evaluator recognizes them and checks
//! membership with the functions below instead of materializing them.

use crate::model::{sym, Atom, Rule, Symbol, Term, Value};

/// Names of the extension predicates every numerical database provides.
pub const NUM: &str = "Num";
pub const SUCC: &str = "Succ";
pub const LT: &str = "Lt";
pub const NEQ: &str = "Neq";
pub const ZERO: &str = "Zero";
pub const ONE: &str = "One";
pub const BUILTINS: [&str; 6] = [NUM, SUCC, LT, NEQ, ZERO, ONE];

pub fn is_builtin(name: &str) -> bool {
    BUILTINS.contains(&name)
}

fn v(name: &str) -> Term {
    Term::var(name)
}

fn atom(p: &str, args: Vec<Term>) -> Atom {
    Atom::new(sym(p), args)
}

fn unary(p: &Symbol, t: Term) -> Atom {
    Atom::new(p.clone(), vec![t])
}

/// `name` holds `(A1,B1,…,Ak,Bk,U1,U2)` over the domain `dom` iff some
/// `Aj != Bj` or `U1 = U2`: one rule for the all-equal case and one Neq
/// escape per condition pair.
pub fn if_then_rules(name: &Symbol, conditions: usize, dom: &Symbol) -> Vec<Rule> {
    let mut rules = Vec::with_capacity(conditions + 1);
    let mut head = Vec::new();
    let mut body = Vec::new();
    for j in 1..=conditions {
        let x = v(&format!("X{j}"));
        head.push(x.clone());
        head.push(x.clone());
        body.push(unary(dom, x));
    }
    head.push(v("U"));
    head.push(v("U"));
    body.push(unary(dom, v("U")));
    rules.push(Rule::new(Atom::new(name.clone(), head), body));

    let mut head = Vec::new();
    let mut body = Vec::new();
    for j in 1..=conditions {
        for side in ["A", "B"] {
            let t = v(&format!("{side}{j}"));
            head.push(t.clone());
            body.push(unary(dom, t));
        }
    }
    for u in ["U1", "U2"] {
        head.push(v(u));
        body.push(unary(dom, v(u)));
    }
    for j in 1..=conditions {
        let mut b = body.clone();
        b.push(atom(NEQ, vec![v(&format!("A{j}")), v(&format!("B{j}"))]));
        rules.push(Rule::new(Atom::new(name.clone(), head.clone()), b));
    }
    rules
}

/// `IfEq(X1,X2,B)`: B = 1 and X1 = X2, or B = 0 and X1 != X2.
pub fn if_eq_rules(name: &Symbol, dom: &Symbol) -> Vec<Rule> {
    vec![
        Rule::new(
            Atom::new(name.clone(), vec![v("X"), v("X"), v("B")]),
            vec![unary(dom, v("X")), atom(ONE, vec![v("B")])],
        ),
        Rule::new(
            Atom::new(name.clone(), vec![v("X1"), v("X2"), v("B")]),
            vec![
                unary(dom, v("X1")),
                unary(dom, v("X2")),
                atom(NEQ, vec![v("X1"), v("X2")]),
                atom(ZERO, vec![v("B")]),
            ],
        ),
    ]
}

pub fn not_b_rules(name: &Symbol) -> Vec<Rule> {
    vec![
        Rule::new(
            Atom::new(name.clone(), vec![v("X"), v("Y")]),
            vec![atom(ZERO, vec![v("X")]), atom(ONE, vec![v("Y")])],
        ),
        Rule::new(
            Atom::new(name.clone(), vec![v("X"), v("Y")]),
            vec![atom(ONE, vec![v("X")]), atom(ZERO, vec![v("Y")])],
        ),
    ]
}

pub fn or_b_rules(name: &Symbol) -> Vec<Rule> {
    let bit = |b: bool| if b { ONE } else { ZERO };
    let mut rules = Vec::new();
    for x in [false, true] {
        for y in [false, true] {
            rules.push(Rule::new(
                Atom::new(name.clone(), vec![v("X"), v("Y"), v("Z")]),
                vec![
                    atom(bit(x), vec![v("X")]),
                    atom(bit(y), vec![v("Y")]),
                    atom(bit(x || y), vec![v("Z")]),
                ],
            ));
        }
    }
    rules
}

pub fn true_b_rules(name: &Symbol) -> Vec<Rule> {
    vec![Rule::new(
        Atom::new(name.clone(), vec![v("X")]),
        vec![atom(ONE, vec![v("X")])],
    )]
}

/// Which gadget a predicate implements, recognized from its rules.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GadgetKind {
    /// Guarded implication with this many condition pairs; all arguments
    /// range over the domain predicate.
    IfThen { conditions: usize, domain: Symbol },
    IfEq { domain: Symbol },
    NotB,
    OrB,
    TrueB,
}

/// Recognize the rules of one predicate as a gadget definition (exact
/// match up to variable renaming).
pub fn recognize(name: &Symbol, rules: &[&Rule]) -> Option<GadgetKind> {
    let first = rules.first()?;
    let domain = first.body.first()?.predicate.clone();
    let arity = first.head.arity();
    let candidates = match arity {
        1 => vec![(true_b_rules(name), GadgetKind::TrueB)],
        2 => vec![(not_b_rules(name), GadgetKind::NotB)],
        3 => vec![
            (if_eq_rules(name, &domain), GadgetKind::IfEq { domain: domain.clone() }),
            (or_b_rules(name), GadgetKind::OrB),
        ],
        a if a >= 4 && a % 2 == 0 => {
            let conditions = (a - 2) / 2;
            vec![(if_then_rules(name, conditions, &domain), GadgetKind::IfThen { conditions, domain })]
        }
        _ => return None,
    };
    for (templ, kind) in candidates {
        if templ.len() == rules.len() && templ.iter().zip(rules).all(|(a, b)| rule_alpha_eq(a, b)) {
            return Some(kind);
        }
    }
    None
}

/// Structural equality of rules up to a consistent variable renaming.
pub fn rule_alpha_eq(a: &Rule, b: &Rule) -> bool {
    if a.body.len() != b.body.len() {
        return false;
    }
    let mut fwd = std::collections::HashMap::new();
    let mut bwd = std::collections::HashMap::new();
    let atoms_a = std::iter::once(&a.head).chain(&a.body);
    let atoms_b = std::iter::once(&b.head).chain(&b.body);
    for (x, y) in atoms_a.zip(atoms_b) {
        if x.predicate != y.predicate || x.arity() != y.arity() {
            return false;
        }
        for (s, t) in x.args.iter().zip(&y.args) {
            match (s, t) {
                (Term::Var(p), Term::Var(q)) => {
                    if fwd.entry(p.clone()).or_insert_with(|| q.clone()) != q {
                        return false;
                    }
                    if bwd.entry(q.clone()).or_insert_with(|| p.clone()) != p {
                        return false;
                    }
                }
                (s, t) if s == t => {}
                _ => return false,
            }
        }
    }
    true
}

/// Pointwise semantics of a guarded implication, given domain membership.
pub fn if_then_holds(args: &[Value], in_domain: impl Fn(&Value) -> bool) -> bool {
    if !args.iter().all(in_domain) {
        return false;
    }
    let n = args.len();
    let conds_equal = args[..n - 2].chunks(2).all(|p| p[0] == p[1]);
    !conds_equal || args[n - 2] == args[n - 1]
}

pub fn if_eq_holds(x1: &Value, x2: &Value, b: &Value, in_domain: impl Fn(&Value) -> bool) -> bool {
    in_domain(x1)
        && in_domain(x2)
        && match b {
            Value::Num(1) => x1 == x2,
            Value::Num(0) => x1 != x2,
            _ => false,
        }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn templates_recognized() {
        let d = sym("DNum");
        for c in 1..=3 {
            let name = sym("G");
            let rules = if_then_rules(&name, c, &d);
            let refs: Vec<&Rule> = rules.iter().collect();
            assert_eq!(
                recognize(&name, &refs),
                Some(GadgetKind::IfThen {
                    conditions: c,
                    domain: d.clone()
                })
            );
            assert_eq!(rules[0].head.arity(), 2 * c + 2);
            assert_eq!(rules.len(), c + 1);
        }
        let rules = if_eq_rules(&sym("E"), &d);
        let refs: Vec<&Rule> = rules.iter().collect();
        assert_eq!(recognize(&sym("E"), &refs), Some(GadgetKind::IfEq { domain: d }));
        let or = or_b_rules(&sym("O"));
        let refs: Vec<&Rule> = or.iter().collect();
        assert_eq!(recognize(&sym("O"), &refs), Some(GadgetKind::OrB));
        let not = not_b_rules(&sym("N"));
        let refs: Vec<&Rule> = not.iter().collect();
        assert_eq!(recognize(&sym("N"), &refs), Some(GadgetKind::NotB));
        let t = true_b_rules(&sym("T"));
        assert_eq!(recognize(&sym("T"), &[&t[0]]), Some(GadgetKind::TrueB));
        assert_eq!(recognize(&sym("T"), &[&or[0]]), None);
    }

    #[test]
    fn guarded_implication_examples() {
        let n = Value::Num;
        let all = |_: &Value| true;
        assert!(if_then_holds(&[n(3), n(3), n(7), n(7)], all));
        assert!(if_then_holds(&[n(3), n(4), n(7), n(9)], all));
        assert!(!if_then_holds(&[n(3), n(3), n(7), n(9)], all));
        assert!(if_eq_holds(&n(5), &n(5), &n(1), all));
        assert!(!if_eq_holds(&n(5), &n(5), &n(0), all));
        assert!(if_eq_holds(&n(5), &n(6), &n(0), all));
    }
}
