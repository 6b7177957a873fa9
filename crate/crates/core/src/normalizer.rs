//! Normal form (one head atom, at most one existential per tgd) and
//! uniformization of arities and body widths.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::model::{sym, Atom, ConjunctiveQuery, Database, Query, Rule, Symbol, Term, Tgd};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalizationReport {
    pub aux_predicates: Vec<Symbol>,
    pub size_before: usize,
    pub size_after: usize,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NormalizeError {
    #[error("tgd {0} is not in normal form")]
    NotNormal(String),
    #[error("predicate {0} has arity 0, which cannot be padded")]
    Nullary(String),
    #[error("predicate {pred} is used with arity {found}, expected {expected}")]
    Arity { pred: String, expected: usize, found: usize },
}

/// Pick `base`, or `base` followed by the smallest number that avoids `taken`.
pub(crate) fn fresh_name(base: &str, taken: &BTreeSet<Symbol>) -> Symbol {
    if !taken.contains(base) {
        return sym(base);
    }
    (1..)
        .map(|i| format!("{base}{i}"))
        .find(|c| !taken.contains(c.as_str()))
        .map(|c| sym(&c))
        .expect("unbounded search")
}

fn predicates_of(sigma: &[Tgd]) -> BTreeSet<Symbol> {
    sigma
        .iter()
        .flat_map(|t| t.body().iter().chain(t.head()))
        .map(|a| a.predicate.clone())
        .collect()
}

fn var_atom(pred: &Symbol, vars: &[Symbol]) -> Atom {
    Atom::new(pred.clone(), vars.iter().map(|v| Term::Var(v.clone())).collect())
}

/// Rewrite every tgd into normal form. Existentials are introduced one per
/// rule through a chain of auxiliary predicates that carry the frontier.
pub fn to_normal_form(sigma: &[Tgd]) -> (Vec<Tgd>, NormalizationReport) {
    let mut taken = predicates_of(sigma);
    let mut aux = Vec::new();
    let mut out = Vec::new();
    for tgd in sigma {
        if tgd.is_normal() {
            out.push(tgd.clone());
            continue;
        }
        if tgd.existentials().is_empty() {
            for h in tgd.head() {
                out.push(Tgd::new(tgd.body().to_vec(), vec![h.clone()], Vec::new()).expect("split of a valid tgd"));
            }
            continue;
        }
        // Existentials in order of first appearance in the head.
        let zs: Vec<Symbol> = crate::model::vars_in_order(tgd.head())
            .into_iter()
            .filter(|v| tgd.existentials().contains(v))
            .collect();
        let mut carried = tgd.frontier();
        let mut prev_body = tgd.body().to_vec();
        for z in &zs {
            let name = fresh_name("Aux", &taken);
            taken.insert(name.clone());
            aux.push(name.clone());
            carried.push(z.clone());
            let head = var_atom(&name, &carried);
            out.push(Tgd::new(prev_body, vec![head.clone()], vec![z.clone()]).expect("chain link is valid"));
            prev_body = vec![head];
        }
        for h in tgd.head() {
            out.push(Tgd::new(prev_body.clone(), vec![h.clone()], Vec::new()).expect("chain end is valid"));
        }
    }
    let report = NormalizationReport {
        aux_predicates: aux,
        size_before: sigma.iter().map(Tgd::atom_count).sum(),
        size_after: out.iter().map(Tgd::atom_count).sum(),
    };
    (out, report)
}

/// A relation of the input problem and its place in the numeric encoding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationInfo {
    pub name: Symbol,
    /// 1-based relation number.
    pub number: usize,
    pub arity: usize,
    /// Predicate holding the padded tuples; equals `name` when no padding
    /// is needed.
    pub padded: Symbol,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UniformizedProblem {
    pub sigma_u: Vec<Tgd>,
    pub query_u: Query,
    pub a: usize,
    pub k: usize,
    /// Sorted by name; `relations[i].number == i + 1`.
    pub relations: Vec<RelationInfo>,
    pub padding_rules: Vec<Rule>,
}

impl UniformizedProblem {
    pub fn m(&self) -> usize {
        self.relations.len()
    }

    pub fn ell(&self) -> usize {
        self.sigma_u.len()
    }

    pub fn relation(&self, name: &str) -> Option<&RelationInfo> {
        self.relations.iter().find(|r| &*r.name == name)
    }

    pub fn relation_number(&self, name: &str) -> Option<usize> {
        self.relation(name).map(|r| r.number)
    }

    /// Every predicate name the problem uses, including padded ones.
    pub fn used_names(&self) -> BTreeSet<Symbol> {
        self.relations
            .iter()
            .flat_map(|r| [r.name.clone(), r.padded.clone()])
            .collect()
    }

    /// The database under the padding rules, with original predicate names.
    /// Facts of relations outside the problem are kept unchanged.
    pub fn pad_database(&self, db: &Database) -> Database {
        let mut out = Database::new();
        for f in db.facts() {
            let fact = match self.relation(&f.predicate) {
                Some(r) if r.arity == f.arity() => pad_atom(f, self.a),
                _ => f.clone(),
            };
            out.insert(fact).expect("padding keeps arities consistent");
        }
        out
    }
}

fn pad_atom(atom: &Atom, a: usize) -> Atom {
    let mut args = atom.args.clone();
    if let Some(first) = args.first().cloned() {
        while args.len() < a {
            args.push(first.clone());
        }
    }
    Atom::new(atom.predicate.clone(), args)
}

/// Pad every relation to the common arity `a` and every body to `k` atoms.
pub fn uniformize(sigma: &[Tgd], q: &Query) -> Result<UniformizedProblem, NormalizeError> {
    uniformize_with(sigma, q, &[])
}

/// Like [`uniformize`], additionally registering `extra` relations (for
/// instance database relations) in the numbering.
pub fn uniformize_with(sigma: &[Tgd], q: &Query, extra: &[(Symbol, usize)]) -> Result<UniformizedProblem, NormalizeError> {
    if let Some(t) = sigma.iter().find(|t| !t.is_normal()) {
        return Err(NormalizeError::NotNormal(t.to_string()));
    }
    let mut arities: BTreeMap<Symbol, usize> = BTreeMap::new();
    let mut note = |pred: &Symbol, n: usize| -> Result<(), NormalizeError> {
        if n == 0 {
            return Err(NormalizeError::Nullary(pred.to_string()));
        }
        match arities.get(pred) {
            Some(&e) if e != n => Err(NormalizeError::Arity {
                pred: pred.to_string(),
                expected: e,
                found: n,
            }),
            _ => {
                arities.insert(pred.clone(), n);
                Ok(())
            }
        }
    };
    for t in sigma {
        for at in t.body().iter().chain(t.head()) {
            note(&at.predicate, at.arity())?;
        }
    }
    for d in q.disjuncts() {
        for at in d.atoms() {
            note(&at.predicate, at.arity())?;
        }
    }
    for (p, n) in extra {
        note(p, *n)?;
    }
    let a = arities.values().copied().max().unwrap_or(1);
    let k = sigma.iter().map(|t| t.body().len()).max().unwrap_or(0);

    let mut taken: BTreeSet<Symbol> = arities.keys().cloned().collect();
    let mut relations = Vec::new();
    let mut padding_rules = Vec::new();
    for (i, (name, &arity)) in arities.iter().enumerate() {
        let padded = if arity < a {
            let p = fresh_name(&format!("pad_{name}"), &taken);
            taken.insert(p.clone());
            let vars: Vec<Symbol> = (1..=arity).map(|j| sym(&format!("X{j}"))).collect();
            let body = var_atom(name, &vars);
            let head = pad_atom(&var_atom(&p, &vars), a);
            padding_rules.push(Rule::new(head, vec![body]));
            p
        } else {
            name.clone()
        };
        relations.push(RelationInfo {
            name: name.clone(),
            number: i + 1,
            arity,
            padded,
        });
    }

    let sigma_u = sigma
        .iter()
        .map(|t| {
            let mut body: Vec<Atom> = t.body().iter().map(|b| pad_atom(b, a)).collect();
            let first = body[0].clone();
            while body.len() < k {
                body.push(first.clone());
            }
            let head = vec![pad_atom(&t.head()[0], a)];
            Tgd::new(body, head, t.existentials().to_vec()).expect("padding preserves validity")
        })
        .collect();

    let mut used: BTreeSet<Symbol> = q.disjuncts().iter().flat_map(|d| d.vars()).collect();
    let mut fresh = FreshVars::default();
    let disjuncts = q
        .disjuncts()
        .iter()
        .map(|d| {
            let atoms = d
                .atoms()
                .iter()
                .map(|at| {
                    let mut args = at.args.clone();
                    while args.len() < a {
                        let v = fresh.next(&used);
                        used.insert(v.clone());
                        args.push(Term::Var(v));
                    }
                    Atom::new(at.predicate.clone(), args)
                })
                .collect();
            ConjunctiveQuery::new(d.name().clone(), atoms, d.output().to_vec()).expect("padding keeps query safe")
        })
        .collect();
    let query_u = Query::from_disjuncts(disjuncts).expect("same disjunct shape");

    Ok(UniformizedProblem {
        sigma_u,
        query_u,
        a,
        k,
        relations,
        padding_rules,
    })
}

/// Produces U, V, W, U1, V1, W1, ... skipping names already in use.
#[derive(Default)]
struct FreshVars {
    counter: usize,
}

impl FreshVars {
    fn next(&mut self, used: &BTreeSet<Symbol>) -> Symbol {
        loop {
            let base = ["U", "V", "W"][self.counter % 3];
            let round = self.counter / 3;
            self.counter += 1;
            let name = if round == 0 { base.to_string() } else { format!("{base}{round}") };
            if !used.contains(name.as_str()) {
                return sym(&name);
            }
        }
    }
}
