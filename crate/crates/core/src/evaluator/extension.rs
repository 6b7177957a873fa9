//! The numerical extension of a database: numbers `0..=n` with Num, Succ,
//! Lt, Zero and One; Neq is a filter over the extended domain.

use std::collections::BTreeSet;

use crate::gadgets::{LT, NUM, ONE, SUCC, ZERO};
use crate::model::{sym, Atom, Database, Term, Value};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NumericExtension {
    pub n: u32,
    /// Constants of the database plus the numbers `0..=n`.
    pub domain: BTreeSet<Value>,
}

impl NumericExtension {
    pub fn num(&self) -> impl Iterator<Item = u32> {
        1..=self.n
    }

    pub fn succ(&self) -> impl Iterator<Item = (u32, u32)> {
        (0..self.n).map(|i| (i, i + 1))
    }

    pub fn lt(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        (0..=self.n).flat_map(move |i| (i + 1..=self.n).map(move |j| (i, j)))
    }

    pub fn neq(&self, a: &Value, b: &Value) -> bool {
        a != b && self.domain.contains(a) && self.domain.contains(b)
    }

    /// Explicit facts of every materialized relation (Neq excluded).
    pub fn facts(&self) -> Vec<Atom> {
        let n = Term::Num;
        let mut out: Vec<Atom> = self.num().map(|i| Atom::new(sym(NUM), vec![n(i)])).collect();
        out.extend(self.succ().map(|(i, j)| Atom::new(sym(SUCC), vec![n(i), n(j)])));
        out.extend(self.lt().map(|(i, j)| Atom::new(sym(LT), vec![n(i), n(j)])));
        out.push(Atom::new(sym(ZERO), vec![n(0)]));
        out.push(Atom::new(sym(ONE), vec![n(1)]));
        out
    }
}

pub fn build_extension(db: &Database, n: u32) -> NumericExtension {
    let mut domain: BTreeSet<Value> = db.domain().into_iter().map(Value::Const).collect();
    domain.extend((0..=n).map(Value::Num));
    for f in db.facts() {
        domain.extend(f.args.iter().filter_map(Value::from_term));
    }
    NumericExtension { n, domain }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_facts;

    #[test]
    fn extension_for_three() {
        let db = parse_facts("R1(a,b). R1(c,d). R2(e,g). R3(g,a). R3(g,h).").unwrap();
        let ext = build_extension(&db, 3);
        assert_eq!(ext.num().collect::<Vec<_>>(), vec![1, 2, 3]);
        assert_eq!(ext.succ().collect::<Vec<_>>(), vec![(0, 1), (1, 2), (2, 3)]);
        assert_eq!(ext.lt().count(), 6);
        assert!(ext.neq(&Value::Const(sym("a")), &Value::Num(0)));
        assert!(!ext.neq(&Value::Num(2), &Value::Num(2)));
        let facts = ext.facts();
        assert!(facts.iter().any(|f| f.to_string() == "Zero(0)"));
        assert!(facts.iter().any(|f| f.to_string() == "One(1)"));
        let empty = build_extension(&Database::new(), 3);
        assert_eq!(empty.domain.len(), 4);
    }
}
