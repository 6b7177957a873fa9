//! Shared logical data types: terms, atoms, tgds, queries, databases and
//! Datalog programs.
//!
//! All values are immutable once built. Constructors validate the structural
//! invariants (safety, arity agreement, variable naming) so that downstream
//! modules can rely on them without re-checking.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// Interned-by-refcount symbol used for predicate, constant and variable names.
pub type Symbol = Arc<str>;

pub fn sym(s: &str) -> Symbol {
    Arc::from(s)
}

/// Predicate name → arity.
pub type Schema = BTreeMap<Symbol, usize>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("invalid variable name `{0}`: variables must start with an uppercase letter")]
    BadVariable(String),
    #[error("constant `{0}` is not allowed in a tgd")]
    ConstantInTgd(String),
    #[error("number `{0}` is not allowed here")]
    NumberNotAllowed(u32),
    #[error("tgd body must not be empty")]
    EmptyBody,
    #[error("tgd head must not be empty")]
    EmptyHead,
    #[error("unsafe head variable `{0}`: it neither occurs in the body nor is existentially quantified")]
    UnsafeHeadVariable(String),
    #[error("existential variable `{0}` also occurs in the body")]
    ExistentialInBody(String),
    #[error("existential variable `{0}` does not occur in the head")]
    UnusedExistential(String),
    #[error("query must have at least one atom")]
    EmptyQuery,
    #[error("output variable `{0}` does not occur in the query body")]
    UnsafeOutputVariable(String),
    #[error("union query disjuncts disagree on output arity ({0} vs {1})")]
    UnionArity(usize, usize),
    #[error("union query must have at least one disjunct")]
    EmptyUnion,
    #[error("arity conflict for `{pred}`: {expected} vs {found}")]
    ArityConflict {
        pred: String,
        expected: usize,
        found: usize,
    },
    #[error("fact `{0}` is not ground over constants")]
    NonGroundFact(String),
}

/// A term: constant symbol, variable, or natural number.
///
/// Numbers and constants are disjoint value spaces: `Const("5")` and `Num(5)`
/// never compare equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Const(Symbol),
    Var(Symbol),
    Num(u32),
}

impl Term {
    pub fn var(name: &str) -> Self {
        Term::Var(sym(name))
    }

    pub fn constant(name: &str) -> Self {
        Term::Const(sym(name))
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    pub fn as_var(&self) -> Option<&Symbol> {
        match self {
            Term::Var(v) => Some(v),
            _ => None,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Const(c) | Term::Var(c) => f.write_str(c),
            Term::Num(n) => write!(f, "{n}"),
        }
    }
}

/// A value of the numerical extension of a database: a constant or a number.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Const(Symbol),
    Num(u32),
}

impl Value {
    pub fn from_term(t: &Term) -> Option<Value> {
        match t {
            Term::Const(c) => Some(Value::Const(c.clone())),
            Term::Num(n) => Some(Value::Num(*n)),
            Term::Var(_) => None,
        }
    }

    pub fn to_term(&self) -> Term {
        match self {
            Value::Const(c) => Term::Const(c.clone()),
            Value::Num(n) => Term::Num(*n),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Const(c) => f.write_str(c),
            Value::Num(n) => write!(f, "{n}"),
        }
    }
}

pub fn is_variable_name(name: &str) -> bool {
    name.chars().next().is_some_and(|c| c.is_ascii_uppercase())
        && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub predicate: Symbol,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(predicate: impl Into<Symbol>, args: Vec<Term>) -> Self {
        Atom {
            predicate: predicate.into(),
            args,
        }
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }

    pub fn vars(&self) -> impl Iterator<Item = &Symbol> {
        self.args.iter().filter_map(Term::as_var)
    }

    pub fn is_ground(&self) -> bool {
        !self.args.iter().any(Term::is_var)
    }

    fn rename(&self, map: &HashMap<Symbol, Symbol>) -> Atom {
        Atom {
            predicate: self.predicate.clone(),
            args: self
                .args
                .iter()
                .map(|t| match t {
                    Term::Var(v) => Term::Var(map.get(v).cloned().unwrap_or_else(|| v.clone())),
                    other => other.clone(),
                })
                .collect(),
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.predicate)?;
        if !self.args.is_empty() {
            f.write_str("(")?;
            for (i, a) in self.args.iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{a}")?;
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}

fn write_atoms(f: &mut fmt::Formatter<'_>, atoms: &[Atom]) -> fmt::Result {
    for (i, a) in atoms.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{a}")?;
    }
    Ok(())
}

/// Distinct variables of `atoms` in order of first occurrence.
pub fn vars_in_order<'a>(atoms: impl IntoIterator<Item = &'a Atom>) -> Vec<Symbol> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for a in atoms {
        for v in a.vars() {
            if seen.insert(v.clone()) {
                out.push(v.clone());
            }
        }
    }
    out
}

fn canonical_map(order: impl IntoIterator<Item = Symbol>) -> HashMap<Symbol, Symbol> {
    let mut map = HashMap::new();
    for v in order {
        let next = map.len();
        map.entry(v).or_insert_with(|| sym(&format!("V{next}")));
    }
    map
}

/// Records each predicate arity, failing on the first disagreement.
pub fn record_arity(schema: &mut Schema, atom: &Atom) -> Result<(), ModelError> {
    match schema.get(&atom.predicate) {
        Some(&expected) if expected != atom.arity() => Err(ModelError::ArityConflict {
            pred: atom.predicate.to_string(),
            expected,
            found: atom.arity(),
        }),
        Some(_) => Ok(()),
        None => {
            schema.insert(atom.predicate.clone(), atom.arity());
            Ok(())
        }
    }
}

/// A tuple-generating dependency `body -> exists Z: head`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Tgd {
    body: Vec<Atom>,
    head: Vec<Atom>,
    existentials: Vec<Symbol>,
}

impl Tgd {
    pub fn new(body: Vec<Atom>, head: Vec<Atom>, existentials: Vec<Symbol>) -> Result<Self, ModelError> {
        if body.is_empty() {
            return Err(ModelError::EmptyBody);
        }
        if head.is_empty() {
            return Err(ModelError::EmptyHead);
        }
        for a in body.iter().chain(&head) {
            for t in &a.args {
                match t {
                    Term::Const(c) => return Err(ModelError::ConstantInTgd(c.to_string())),
                    Term::Num(n) => return Err(ModelError::NumberNotAllowed(*n)),
                    Term::Var(v) if !is_variable_name(v) => {
                        return Err(ModelError::BadVariable(v.to_string()))
                    }
                    Term::Var(_) => {}
                }
            }
        }
        let body_vars: BTreeSet<Symbol> = body.iter().flat_map(|a| a.vars().cloned()).collect();
        let head_vars: BTreeSet<Symbol> = head.iter().flat_map(|a| a.vars().cloned()).collect();
        for z in &existentials {
            if !is_variable_name(z) {
                return Err(ModelError::BadVariable(z.to_string()));
            }
            if body_vars.contains(z) {
                return Err(ModelError::ExistentialInBody(z.to_string()));
            }
            if !head_vars.contains(z) {
                return Err(ModelError::UnusedExistential(z.to_string()));
            }
        }
        for v in &head_vars {
            if !body_vars.contains(v) && !existentials.contains(v) {
                return Err(ModelError::UnsafeHeadVariable(v.to_string()));
            }
        }
        let mut existentials = existentials;
        existentials.dedup();
        Ok(Tgd {
            body,
            head,
            existentials,
        })
    }

    pub fn body(&self) -> &[Atom] {
        &self.body
    }

    pub fn head(&self) -> &[Atom] {
        &self.head
    }

    pub fn existentials(&self) -> &[Symbol] {
        &self.existentials
    }

    /// One head atom and at most one existential variable.
    pub fn is_normal(&self) -> bool {
        self.head.len() == 1 && self.existentials.len() <= 1
    }

    pub fn is_linear(&self) -> bool {
        self.body.len() == 1
    }

    /// Head variables that also occur in the body, in head order.
    pub fn frontier(&self) -> Vec<Symbol> {
        vars_in_order(&self.head)
            .into_iter()
            .filter(|v| !self.existentials.contains(v))
            .collect()
    }

    pub fn atom_count(&self) -> usize {
        self.body.len() + self.head.len()
    }

    /// Alpha-canonical copy: variables renamed `V0, V1, ...` by first
    /// occurrence (body, then head).
    pub fn canonical(&self) -> Tgd {
        let map = canonical_map(vars_in_order(self.body.iter().chain(&self.head)));
        Tgd {
            body: self.body.iter().map(|a| a.rename(&map)).collect(),
            head: self.head.iter().map(|a| a.rename(&map)).collect(),
            existentials: self.existentials.iter().map(|z| map[z].clone()).collect(),
        }
    }

    pub fn alpha_eq(&self, other: &Tgd) -> bool {
        self.canonical() == other.canonical()
    }
}

impl fmt::Display for Tgd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_atoms(f, &self.body)?;
        f.write_str(" -> ")?;
        if !self.existentials.is_empty() {
            f.write_str("exists ")?;
            for (i, z) in self.existentials.iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                f.write_str(z)?;
            }
            f.write_str(": ")?;
        }
        write_atoms(f, &self.head)?;
        f.write_str(".")
    }
}

pub fn schema_of_tgds(sigma: &[Tgd]) -> Result<Schema, ModelError> {
    let mut schema = Schema::new();
    for t in sigma {
        for a in t.body().iter().chain(t.head()) {
            record_arity(&mut schema, a)?;
        }
    }
    Ok(schema)
}

/// A conjunctive query. Boolean iff `output` is empty.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ConjunctiveQuery {
    name: Symbol,
    atoms: Vec<Atom>,
    output: Vec<Symbol>,
}

impl ConjunctiveQuery {
    pub fn new(name: impl Into<Symbol>, atoms: Vec<Atom>, output: Vec<Symbol>) -> Result<Self, ModelError> {
        if atoms.is_empty() {
            return Err(ModelError::EmptyQuery);
        }
        for a in &atoms {
            for v in a.vars() {
                if !is_variable_name(v) {
                    return Err(ModelError::BadVariable(v.to_string()));
                }
            }
            if let Some(Term::Num(n)) = a.args.iter().find(|t| matches!(t, Term::Num(_))) {
                return Err(ModelError::NumberNotAllowed(*n));
            }
        }
        let vars: BTreeSet<&Symbol> = atoms.iter().flat_map(Atom::vars).collect();
        for o in &output {
            if !vars.contains(o) {
                return Err(ModelError::UnsafeOutputVariable(o.to_string()));
            }
        }
        Ok(ConjunctiveQuery {
            name: name.into(),
            atoms,
            output,
        })
    }

    /// Boolean query named `?`.
    pub fn boolean(atoms: Vec<Atom>) -> Result<Self, ModelError> {
        Self::new(sym("?"), atoms, Vec::new())
    }

    pub fn name(&self) -> &Symbol {
        &self.name
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn output(&self) -> &[Symbol] {
        &self.output
    }

    pub fn is_boolean(&self) -> bool {
        self.output.is_empty()
    }

    pub fn vars(&self) -> Vec<Symbol> {
        vars_in_order(&self.atoms)
    }

    /// Replace output variables by constants, yielding a Boolean query.
    pub fn instantiate(&self, values: &[Symbol]) -> ConjunctiveQuery {
        let sub: HashMap<&Symbol, &Symbol> = self.output.iter().zip(values).collect();
        let atoms = self
            .atoms
            .iter()
            .map(|a| Atom {
                predicate: a.predicate.clone(),
                args: a
                    .args
                    .iter()
                    .map(|t| match t {
                        Term::Var(v) => match sub.get(v) {
                            Some(c) => Term::Const((*c).clone()),
                            None => t.clone(),
                        },
                        _ => t.clone(),
                    })
                    .collect(),
            })
            .collect();
        ConjunctiveQuery {
            name: sym("?"),
            atoms,
            output: Vec::new(),
        }
    }

    pub fn canonical(&self) -> ConjunctiveQuery {
        let map = canonical_map(self.output.iter().cloned().chain(vars_in_order(&self.atoms)));
        ConjunctiveQuery {
            name: self.name.clone(),
            atoms: self.atoms.iter().map(|a| a.rename(&map)).collect(),
            output: self.output.iter().map(|v| map[v].clone()).collect(),
        }
    }

    pub fn alpha_eq(&self, other: &ConjunctiveQuery) -> bool {
        self.canonical() == other.canonical()
    }
}

impl fmt::Display for ConjunctiveQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.output.is_empty() && &*self.name == "?" {
            f.write_str("?")?;
        } else {
            f.write_str(&self.name)?;
            if !self.output.is_empty() {
                f.write_str("(")?;
                for (i, o) in self.output.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    f.write_str(o)?;
                }
                f.write_str(")")?;
            }
        }
        f.write_str(" :- ")?;
        write_atoms(f, &self.atoms)?;
        f.write_str(".")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct UnionQuery {
    disjuncts: Vec<ConjunctiveQuery>,
}

impl UnionQuery {
    pub fn new(disjuncts: Vec<ConjunctiveQuery>) -> Result<Self, ModelError> {
        let first = disjuncts.first().ok_or(ModelError::EmptyUnion)?;
        let arity = first.output.len();
        for d in &disjuncts {
            if d.output.len() != arity {
                return Err(ModelError::UnionArity(arity, d.output.len()));
            }
        }
        Ok(UnionQuery { disjuncts })
    }

    pub fn disjuncts(&self) -> &[ConjunctiveQuery] {
        &self.disjuncts
    }
}

/// A conjunctive query or a union of them.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Query {
    Conjunctive(ConjunctiveQuery),
    Union(UnionQuery),
}

impl Query {
    pub fn disjuncts(&self) -> &[ConjunctiveQuery] {
        match self {
            Query::Conjunctive(q) => std::slice::from_ref(q),
            Query::Union(u) => u.disjuncts(),
        }
    }

    pub fn output_arity(&self) -> usize {
        self.disjuncts()[0].output.len()
    }

    pub fn is_boolean(&self) -> bool {
        self.output_arity() == 0
    }

    /// Largest disjunct size, in atoms.
    pub fn max_atoms(&self) -> usize {
        self.disjuncts().iter().map(|d| d.atoms.len()).max().unwrap_or(0)
    }

    pub fn name(&self) -> &Symbol {
        &self.disjuncts()[0].name
    }

    /// Build from one or more disjuncts, collapsing a singleton union.
    pub fn from_disjuncts(mut ds: Vec<ConjunctiveQuery>) -> Result<Self, ModelError> {
        if ds.len() == 1 {
            Ok(Query::Conjunctive(ds.pop().unwrap()))
        } else {
            Ok(Query::Union(UnionQuery::new(ds)?))
        }
    }

    pub fn alpha_eq(&self, other: &Query) -> bool {
        let (a, b) = (self.disjuncts(), other.disjuncts());
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.alpha_eq(y))
    }
}

impl From<ConjunctiveQuery> for Query {
    fn from(q: ConjunctiveQuery) -> Self {
        Query::Conjunctive(q)
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, d) in self.disjuncts().iter().enumerate() {
            if i > 0 {
                f.write_str("\n")?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

/// A finite set of ground facts over constants, with its inferred schema.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Database {
    schema: Schema,
    facts: BTreeSet<Atom>,
}

impl Database {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_facts(facts: impl IntoIterator<Item = Atom>) -> Result<Self, ModelError> {
        let mut db = Database::new();
        for f in facts {
            db.insert(f)?;
        }
        Ok(db)
    }

    /// Adds a fact; duplicates are absorbed. Returns whether it was new.
    pub fn insert(&mut self, fact: Atom) -> Result<bool, ModelError> {
        if !fact.args.iter().all(|t| matches!(t, Term::Const(_))) {
            return Err(ModelError::NonGroundFact(fact.to_string()));
        }
        record_arity(&mut self.schema, &fact)?;
        Ok(self.facts.insert(fact))
    }

    /// Declares a predicate without adding facts.
    pub fn declare(&mut self, pred: Symbol, arity: usize) -> Result<(), ModelError> {
        record_arity(&mut self.schema, &Atom::new(pred, vec![Term::Num(0); arity]))
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn facts(&self) -> &BTreeSet<Atom> {
        &self.facts
    }

    pub fn len(&self) -> usize {
        self.facts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    pub fn relation<'a>(&'a self, pred: &'a str) -> impl Iterator<Item = &'a Atom> + 'a {
        self.facts.iter().filter(move |f| &*f.predicate == pred)
    }

    /// Constants occurring in facts.
    pub fn domain(&self) -> BTreeSet<Symbol> {
        self.facts
            .iter()
            .flat_map(|f| f.args.iter())
            .filter_map(|t| match t {
                Term::Const(c) => Some(c.clone()),
                _ => None,
            })
            .collect()
    }

    pub fn contains(&self, fact: &Atom) -> bool {
        self.facts.contains(fact)
    }

    pub fn without(&self, fact: &Atom) -> Database {
        let mut db = Database {
            schema: self.schema.clone(),
            facts: self.facts.clone(),
        };
        db.facts.remove(fact);
        db
    }
}

impl fmt::Display for Database {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for fact in &self.facts {
            writeln!(f, "{fact}.")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Rule {
    pub head: Atom,
    pub body: Vec<Atom>,
}

impl Rule {
    pub fn new(head: Atom, body: Vec<Atom>) -> Self {
        Rule { head, body }
    }

    pub fn fact(head: Atom) -> Self {
        Rule { head, body: Vec::new() }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.head)?;
        if !self.body.is_empty() {
            f.write_str(" :- ")?;
            write_atoms(f, &self.body)?;
        }
        f.write_str(".")
    }
}

/// A Datalog program with a designated goal predicate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatalogProgram {
    pub rules: Vec<Rule>,
    pub goal: Symbol,
    pub goal_arity: usize,
    /// Predicates read from the database.
    pub edb: BTreeSet<Symbol>,
    /// Largest number the program expects in its numeric extension.
    pub numeric_bound: Option<u32>,
}

impl DatalogProgram {
    pub fn new(goal: impl Into<Symbol>, goal_arity: usize) -> Self {
        DatalogProgram {
            rules: Vec::new(),
            goal: goal.into(),
            goal_arity,
            edb: BTreeSet::new(),
            numeric_bound: None,
        }
    }

    pub fn max_arity(&self) -> usize {
        max_arity(self)
    }

    pub fn is_nonrecursive(&self) -> bool {
        check_nonrecursive(self)
    }

    /// Predicates with at least one defining rule.
    pub fn idb(&self) -> BTreeSet<Symbol> {
        self.rules.iter().map(|r| r.head.predicate.clone()).collect()
    }

    pub fn atom_count(&self) -> usize {
        self.rules.iter().map(|r| 1 + r.body.len()).sum()
    }

    pub fn variable_count(&self) -> usize {
        self.rules
            .iter()
            .map(|r| vars_in_order(std::iter::once(&r.head).chain(&r.body)).len())
            .sum()
    }

    /// Head predicate → predicates in its rule bodies.
    pub fn dependencies(&self) -> BTreeMap<Symbol, BTreeSet<Symbol>> {
        let mut deps: BTreeMap<Symbol, BTreeSet<Symbol>> = BTreeMap::new();
        for r in &self.rules {
            let e = deps.entry(r.head.predicate.clone()).or_default();
            for b in &r.body {
                e.insert(b.predicate.clone());
            }
        }
        deps
    }

    /// IDB predicates in dependency order, or `None` when the program is
    /// recursive.
    pub fn topological_order(&self) -> Option<Vec<Symbol>> {
        let deps = self.dependencies();
        let mut state: BTreeMap<&Symbol, u8> = BTreeMap::new();
        let mut order = Vec::new();
        fn visit<'a>(
            p: &'a Symbol,
            deps: &'a BTreeMap<Symbol, BTreeSet<Symbol>>,
            state: &mut BTreeMap<&'a Symbol, u8>,
            order: &mut Vec<Symbol>,
        ) -> bool {
            match state.get(p) {
                Some(1) => return false,
                Some(_) => return true,
                None => {}
            }
            state.insert(p, 1);
            if let Some(ds) = deps.get(p) {
                for d in ds {
                    if deps.contains_key(d) && !visit(d, deps, state, order) {
                        return false;
                    }
                }
            }
            state.insert(p, 2);
            order.push(p.clone());
            true
        }
        for p in deps.keys() {
            if !visit(p, &deps, &mut state, &mut order) {
                return None;
            }
        }
        Some(order)
    }
}

impl fmt::Display for DatalogProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "%@goal {}/{}", self.goal, self.goal_arity)?;
        if let Some(n) = self.numeric_bound {
            writeln!(f, "%@numeric {n}")?;
        }
        for e in &self.edb {
            writeln!(f, "%@edb {e}")?;
        }
        for r in &self.rules {
            writeln!(f, "{r}")?;
        }
        Ok(())
    }
}

/// Maximum arity over every predicate occurring in the program's rules.
pub fn max_arity(program: &DatalogProgram) -> usize {
    program
        .rules
        .iter()
        .flat_map(|r| std::iter::once(&r.head).chain(&r.body))
        .map(Atom::arity)
        .max()
        .unwrap_or(0)
}

/// True iff the predicate dependency graph is acyclic.
pub fn check_nonrecursive(program: &DatalogProgram) -> bool {
    program.topological_order().is_some()
}

/// Which form of the rewritten program to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// One wide tuple relation of arity `a + k + 4`.
    Wide,
    /// Boolean gadgets and a tuple relation of arity `a + 1`.
    Reduced,
    /// Numbers replaced by vectors of 0/1 values.
    Bitvec,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Wide, Variant::Reduced, Variant::Bitvec];
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Wide => "wide",
            Variant::Reduced => "reduced",
            Variant::Bitvec => "bitvec",
        })
    }
}

impl std::str::FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "wide" => Ok(Variant::Wide),
            "reduced" => Ok(Variant::Reduced),
            "bitvec" => Ok(Variant::Bitvec),
            other => Err(format!("unknown variant `{other}` (expected wide|reduced|bitvec)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RewriteParams {
    /// Length of the guessed chase sequence.
    pub n_steps: u32,
    pub variant: Variant,
    /// How `n_steps` was chosen.
    pub gamma_note: String,
}

impl RewriteParams {
    pub fn new(n_steps: u32, variant: Variant) -> Self {
        RewriteParams {
            n_steps,
            variant,
            gamma_note: String::from("caller supplied"),
        }
    }

    /// The sequence must be at least as long as the rule count and the
    /// query size.
    pub fn min_steps(rule_count: usize, query_atoms: usize) -> u32 {
        rule_count.max(query_atoms).max(1) as u32
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(n: &str) -> Term {
        Term::var(n)
    }

    #[test]
    fn tgd_safety() {
        let body = vec![Atom::new(sym("R"), vec![v("X")])];
        let head = vec![Atom::new(sym("S"), vec![v("Y")])];
        assert_eq!(
            Tgd::new(body, head, vec![]),
            Err(ModelError::UnsafeHeadVariable("Y".into()))
        );
    }

    #[test]
    fn tgd_rejects_constants() {
        let body = vec![Atom::new(sym("R"), vec![Term::constant("a")])];
        let head = vec![Atom::new(sym("S"), vec![Term::constant("a")])];
        assert!(matches!(Tgd::new(body, head, vec![]), Err(ModelError::ConstantInTgd(_))));
    }

    #[test]
    fn alpha_equivalence() {
        let t1 = Tgd::new(
            vec![Atom::new(sym("R"), vec![v("X"), v("Y")])],
            vec![Atom::new(sym("S"), vec![v("Y"), v("Z")])],
            vec![sym("Z")],
        )
        .unwrap();
        let t2 = Tgd::new(
            vec![Atom::new(sym("R"), vec![v("A"), v("B")])],
            vec![Atom::new(sym("S"), vec![v("B"), v("C")])],
            vec![sym("C")],
        )
        .unwrap();
        assert!(t1.alpha_eq(&t2));
        assert_eq!(t1.canonical().to_string(), "R(V0,V1) -> exists V2: S(V1,V2).");
    }

    #[test]
    fn max_arity_examples() {
        let mut p = DatalogProgram::new("goal", 0);
        assert_eq!(max_arity(&p), 0);
        p.rules.push(Rule::new(
            Atom::new(sym("goal"), vec![]),
            vec![Atom::new(sym("One"), vec![v("X")])],
        ));
        assert_eq!(max_arity(&p), 1);
    }

    fn prop_rule(h: &str, b: &str) -> Rule {
        Rule::new(Atom::new(sym(h), vec![]), vec![Atom::new(sym(b), vec![])])
    }

    #[test]
    fn nonrecursive_examples() {
        let mut p = DatalogProgram::new("p", 0);
        p.rules = vec![prop_rule("p", "q"), prop_rule("q", "r")];
        assert!(check_nonrecursive(&p));
        p.rules = vec![prop_rule("p", "p")];
        assert!(!check_nonrecursive(&p));
    }

    #[test]
    fn database_domain_and_arity() {
        let f = |p: &str, args: &[&str]| Atom::new(sym(p), args.iter().map(|a| Term::constant(a)).collect());
        let db = Database::from_facts([f("R1", &["a", "b"]), f("R1", &["a", "b"]), f("R3", &["g", "h"])]).unwrap();
        assert_eq!(db.len(), 2);
        assert_eq!(db.domain().len(), 4);
        assert!(matches!(
            Database::from_facts([f("R1", &["a", "b"]), f("R1", &["a", "b", "c"])]),
            Err(ModelError::ArityConflict { .. })
        ));
    }
}
