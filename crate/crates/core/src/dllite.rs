//! DL-Lite positive axioms compiled into linear tgds of arity at most two.
//!
//! Surface syntax, one statement per `.`-terminated line:
//!
//! ```text
//! A sub B.              concept inclusion
//! A sub exists R.       A(X) -> exists Y: R(X,Y)
//! A sub exists inv(R).  A(X) -> exists Y: R(Y,X)
//! exists R sub A.       R(X,Y) -> A(X)
//! exists inv(R) sub A.  R(Y,X) -> A(X)
//! R sub S.              role inclusion
//! R sub inv(S).         R(X,Y) -> S(Y,X)
//! A and B sub bottom.   disjointness (negative constraint)
//! role R, S.            declare role names
//! concept A.            declare concept names
//! ```
//!
//! `X sub Y.` is a role inclusion when both names are roles (declared, or
//! used under `exists`/`inv` anywhere in the TBox) and a concept inclusion
//! otherwise. `%` starts a comment.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::model::{sym, Atom, ConjunctiveQuery, Query, Symbol, Term, Tgd};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DlAxiom {
    ConceptIncl(Symbol, Symbol),
    ExistRestrRight(Symbol, Symbol),
    ExistRestrRightInv(Symbol, Symbol),
    ExistRestrLeft(Symbol, Symbol),
    ExistRestrLeftInv(Symbol, Symbol),
    RoleIncl(Symbol, Symbol),
    RoleInclInv(Symbol, Symbol),
}

/// `A and B sub bottom`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Disjointness(pub Symbol, pub Symbol);

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TBox {
    pub axioms: Vec<DlAxiom>,
    pub disjoint: Vec<Disjointness>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DlError {
    #[error("line {line}: unsupported axiom form `{text}`")]
    Unsupported { line: usize, text: String },
    #[error("`{0}` is used both as a concept and as a role")]
    Kind(String),
}

impl fmt::Display for DlAxiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DlAxiom::ConceptIncl(a, b) | DlAxiom::RoleIncl(a, b) => write!(f, "{a} sub {b}."),
            DlAxiom::ExistRestrRight(a, r) => write!(f, "{a} sub exists {r}."),
            DlAxiom::ExistRestrRightInv(a, r) => write!(f, "{a} sub exists inv({r})."),
            DlAxiom::ExistRestrLeft(r, a) => write!(f, "exists {r} sub {a}."),
            DlAxiom::ExistRestrLeftInv(r, a) => write!(f, "exists inv({r}) sub {a}."),
            DlAxiom::RoleInclInv(r, s) => write!(f, "{r} sub inv({s})."),
        }
    }
}

impl fmt::Display for TBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let roles: BTreeSet<&Symbol> = self
            .axioms
            .iter()
            .filter_map(|a| match a {
                DlAxiom::RoleIncl(r, s) => Some([r, s]),
                _ => None,
            })
            .flatten()
            .collect();
        if !roles.is_empty() {
            let r: Vec<&str> = roles.iter().map(|r| &***r).collect();
            writeln!(f, "role {}.", r.join(", "))?;
        }
        for a in &self.axioms {
            writeln!(f, "{a}")?;
        }
        for Disjointness(a, b) in &self.disjoint {
            writeln!(f, "{a} and {b} sub bottom.")?;
        }
        Ok(())
    }
}

/// One side of `sub`, before concept/role resolution.
#[derive(Debug, Clone)]
enum Side {
    Name(String),
    Exists(String, bool),
    Inv(String),
    And(String, String),
    Bottom,
}

fn is_name(s: &str) -> bool {
    s.chars().next().is_some_and(|c| c.is_ascii_alphabetic())
        && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !matches!(s, "sub" | "exists" | "inv" | "and" | "bottom" | "role" | "concept")
}

fn parse_side(s: &str) -> Option<Side> {
    let words: Vec<&str> = s.split_whitespace().collect();
    let inv = |w: &str| -> Option<String> {
        let inner = w.strip_prefix("inv(")?.strip_suffix(')')?.trim();
        is_name(inner).then(|| inner.to_string())
    };
    let joined = words.join(" ");
    let compact: String = joined.replace("inv (", "inv(").replace("( ", "(").replace(" )", ")");
    let words: Vec<&str> = compact.split(' ').collect();
    match words.as_slice() {
        ["bottom"] => Some(Side::Bottom),
        [w] if is_name(w) => Some(Side::Name(w.to_string())),
        [w] => inv(w).map(Side::Inv),
        ["exists", w] if is_name(w) => Some(Side::Exists(w.to_string(), false)),
        ["exists", w] => inv(w).map(|r| Side::Exists(r, true)),
        [a, "and", b] if is_name(a) && is_name(b) => Some(Side::And(a.to_string(), b.to_string())),
        _ => None,
    }
}

/// Parse a `.dlt` TBox.
pub fn parse_tbox(text: &str) -> Result<TBox, DlError> {
    let mut stmts: Vec<(usize, String)> = Vec::new();
    let mut buf = String::new();
    let mut start = 1;
    for (ln, line) in text.lines().enumerate() {
        let line = line.split('%').next().unwrap_or("");
        for ch in line.chars() {
            if ch == '.' {
                stmts.push((start, buf.trim().to_string()));
                buf.clear();
            } else {
                if buf.trim().is_empty() {
                    start = ln + 1;
                }
                buf.push(ch);
            }
        }
        buf.push(' ');
    }
    if !buf.trim().is_empty() {
        return Err(DlError::Unsupported {
            line: start,
            text: buf.trim().to_string(),
        });
    }

    let mut roles: BTreeSet<String> = BTreeSet::new();
    let mut concepts: BTreeSet<String> = BTreeSet::new();
    let mut parsed: Vec<(usize, String, Side, Side)> = Vec::new();
    for (line, st) in stmts {
        let bad = || DlError::Unsupported {
            line,
            text: st.clone(),
        };
        let decl = |rest: &str| -> Option<Vec<String>> {
            let names: Vec<String> = rest.split(',').map(|n| n.trim().to_string()).collect();
            names.iter().all(|n| is_name(n)).then_some(names)
        };
        if let Some(rest) = st.strip_prefix("role ") {
            roles.extend(decl(rest).ok_or_else(bad)?);
            continue;
        }
        if let Some(rest) = st.strip_prefix("concept ") {
            concepts.extend(decl(rest).ok_or_else(bad)?);
            continue;
        }
        let parts: Vec<&str> = st.split(" sub ").collect();
        let [l, r] = parts.as_slice() else { return Err(bad()) };
        let (l, r) = (parse_side(l).ok_or_else(bad)?, parse_side(r).ok_or_else(bad)?);
        for side in [&l, &r] {
            match side {
                Side::Exists(x, _) | Side::Inv(x) => {
                    roles.insert(x.clone());
                }
                Side::And(a, b) => {
                    concepts.insert(a.clone());
                    concepts.insert(b.clone());
                }
                _ => {}
            }
        }
        if let Side::Exists(..) = r {
            if let Side::Name(a) = &l {
                concepts.insert(a.clone());
            }
        }
        if let Side::Exists(..) = l {
            if let Side::Name(a) = &r {
                concepts.insert(a.clone());
            }
        }
        parsed.push((line, st, l, r));
    }
    if let Some(x) = roles.intersection(&concepts).next() {
        return Err(DlError::Kind(x.clone()));
    }

    let mut tbox = TBox::default();
    for (line, text, l, r) in parsed {
        let s = |x: &String| sym(x);
        let ax = match (&l, &r) {
            (Side::Name(a), Side::Name(b)) => match (roles.contains(a), roles.contains(b)) {
                (true, true) => DlAxiom::RoleIncl(s(a), s(b)),
                (false, false) => DlAxiom::ConceptIncl(s(a), s(b)),
                _ => return Err(DlError::Unsupported { line, text }),
            },
            (Side::Name(a), Side::Exists(r, false)) => DlAxiom::ExistRestrRight(s(a), s(r)),
            (Side::Name(a), Side::Exists(r, true)) => DlAxiom::ExistRestrRightInv(s(a), s(r)),
            (Side::Exists(r, false), Side::Name(a)) => DlAxiom::ExistRestrLeft(s(r), s(a)),
            (Side::Exists(r, true), Side::Name(a)) => DlAxiom::ExistRestrLeftInv(s(r), s(a)),
            (Side::Name(r), Side::Inv(q)) if roles.contains(r) => DlAxiom::RoleInclInv(s(r), s(q)),
            (Side::And(a, b), Side::Bottom) => {
                tbox.disjoint.push(Disjointness(s(a), s(b)));
                continue;
            }
            _ => return Err(DlError::Unsupported { line, text }),
        };
        tbox.axioms.push(ax);
    }
    Ok(tbox)
}

fn unary(p: &Symbol, x: &str) -> Atom {
    Atom::new(p.clone(), vec![Term::var(x)])
}

fn binary(p: &Symbol, x: &str, y: &str) -> Atom {
    Atom::new(p.clone(), vec![Term::var(x), Term::var(y)])
}

/// One linear tgd per axiom.
pub fn compile_tbox(axioms: &[DlAxiom]) -> Vec<Tgd> {
    let tgd = |b: Atom, h: Atom, ex: &[&str]| Tgd::new(vec![b], vec![h], ex.iter().map(|e| sym(e)).collect()).expect("well-formed translation");
    axioms
        .iter()
        .map(|ax| match ax {
            DlAxiom::ConceptIncl(a, b) => tgd(unary(a, "X"), unary(b, "X"), &[]),
            DlAxiom::ExistRestrRight(a, r) => tgd(unary(a, "X"), binary(r, "X", "Y"), &["Y"]),
            DlAxiom::ExistRestrRightInv(a, r) => tgd(unary(a, "X"), binary(r, "Y", "X"), &["Y"]),
            DlAxiom::ExistRestrLeft(r, a) => tgd(binary(r, "X", "Y"), unary(a, "X"), &[]),
            DlAxiom::ExistRestrLeftInv(r, a) => tgd(binary(r, "Y", "X"), unary(a, "X"), &[]),
            DlAxiom::RoleIncl(r, s) => tgd(binary(r, "X", "Y"), binary(s, "X", "Y"), &[]),
            DlAxiom::RoleInclInv(r, s) => tgd(binary(r, "X", "Y"), binary(s, "Y", "X"), &[]),
        })
        .collect()
}

/// Every tgd has a single body atom.
pub fn is_linear(sigma: &[Tgd]) -> bool {
    sigma.iter().all(Tgd::is_linear)
}

/// Boolean UCQ that holds exactly when some disjointness axiom is violated.
pub fn violation_query(disjoint: &[Disjointness]) -> Option<Query> {
    let ds: Vec<ConjunctiveQuery> = disjoint
        .iter()
        .map(|Disjointness(a, b)| ConjunctiveQuery::boolean(vec![unary(a, "X"), unary(b, "X")]).expect("safe query"))
        .collect();
    if ds.is_empty() {
        None
    } else {
        Some(Query::from_disjuncts(ds).expect("all disjuncts Boolean"))
    }
}
