//! Turns rule bodies into solver instances and materializes IDB
//! predicates in dependency order.

use std::cell::{Cell, RefCell};
use std::collections::{BTreeMap, HashMap, HashSet};
use std::sync::Arc;
use std::time::Instant;

use super::solver::{min_domain, values_ascending, Alt, ChoiceAlts, Con, Flow, Piece, Relation, Slot, Solver, Stop, Var};
use super::universe::{bits, Universe};
use super::EvalError;
use crate::gadgets::{self, GadgetKind, LT, NEQ, NUM, ONE, SUCC, ZERO};
use crate::model::{Atom, Database, DatalogProgram, Rule, Symbol, Term, Value};

/// How atoms of a predicate are evaluated.
#[derive(Debug, Clone)]
pub(crate) enum PredKind {
    Builtin(&'static str),
    /// Recognized gadget with the mask of its domain predicate.
    Gadget(GadgetKind, Vec<u64>),
    Table(Arc<Relation>),
    /// Too large to store; atoms become choices over the rules.
    Virtual,
}

pub(crate) struct Env {
    pub universe: Universe,
    pub kinds: HashMap<Symbol, PredKind>,
    pub rules: HashMap<Symbol, Vec<Rule>>,
    pub deadline: Option<Instant>,
    pub cap: usize,
    pub aborted: Cell<bool>,
    numbers: Vec<u64>,
    num: Vec<u64>,
    ext_domain: Vec<u64>,
    bool_mask: Vec<u64>,
    choices: RefCell<HashMap<(Symbol, Vec<Option<u32>>), Arc<ChoiceAlts>>>,
}

fn builtin_name(p: &str) -> Option<&'static str> {
    gadgets::BUILTINS.iter().copied().find(|b| *b == p)
}

fn builtin_arity(b: &str) -> usize {
    match b {
        NUM | ZERO | ONE => 1,
        _ => 2,
    }
}

/// Check arities, safety and predicate definitions.
pub(crate) fn validate(program: &DatalogProgram, db: &Database) -> Result<(), EvalError> {
    let mut arity: HashMap<Symbol, usize> = HashMap::new();
    let mut check = |a: &Atom| -> Result<(), EvalError> {
        let expected = builtin_name(&a.predicate).map(builtin_arity).or_else(|| arity.get(&a.predicate).copied());
        match expected {
            Some(e) if e != a.arity() => Err(EvalError::Arity {
                predicate: a.predicate.to_string(),
                expected: e,
                found: a.arity(),
            }),
            Some(_) => Ok(()),
            None => {
                arity.insert(a.predicate.clone(), a.arity());
                Ok(())
            }
        }
    };
    for f in db.facts() {
        check(f)?;
    }
    for r in &program.rules {
        check(&r.head)?;
        for b in &r.body {
            check(b)?;
        }
    }
    let idb = program.idb();
    for p in &idb {
        if builtin_name(p).is_some() {
            return Err(EvalError::Reserved(p.to_string()));
        }
    }
    for r in &program.rules {
        let body_vars: HashSet<&Symbol> = r.body.iter().flat_map(|a| a.vars()).collect();
        if let Some(v) = r.head.vars().find(|v| !body_vars.contains(v)) {
            return Err(EvalError::UnsafeRule {
                var: v.to_string(),
                rule: r.to_string(),
            });
        }
        for b in &r.body {
            let known = builtin_name(&b.predicate).is_some()
                || idb.contains(&b.predicate)
                || program.edb.contains(&b.predicate)
                || db.schema().contains_key(&b.predicate);
            if !known {
                return Err(EvalError::UnknownPredicate(b.predicate.to_string()));
            }
        }
    }
    if program.topological_order().is_none() {
        return Err(EvalError::Recursive);
    }
    Ok(())
}

/// IDB predicates the goal depends on, in dependency order.
pub(crate) fn needed_order(program: &DatalogProgram) -> Vec<Symbol> {
    let deps = program.dependencies();
    let mut needed: HashSet<Symbol> = HashSet::new();
    let mut stack = vec![program.goal.clone()];
    while let Some(p) = stack.pop() {
        if needed.insert(p.clone()) {
            if let Some(ds) = deps.get(&p) {
                stack.extend(ds.iter().cloned());
            }
        }
    }
    program
        .topological_order()
        .unwrap_or_default()
        .into_iter()
        .filter(|p| needed.contains(p))
        .collect()
}

impl Env {
    pub fn new(
        program: &DatalogProgram,
        db: &Database,
        bound: u32,
        extra_values: &[Value],
        deadline: Option<Instant>,
        cap: usize,
    ) -> Env {
        let mut universe = Universe::new(bound);
        for f in db.facts() {
            for t in &f.args {
                if let Some(v) = Value::from_term(t) {
                    universe.intern(&v);
                }
            }
        }
        for r in &program.rules {
            for a in std::iter::once(&r.head).chain(&r.body) {
                for t in &a.args {
                    if let Some(v) = Value::from_term(t) {
                        universe.intern(&v);
                    }
                }
            }
        }
        for v in extra_values {
            universe.intern(v);
        }
        let words = universe.words();
        // Neq ranges over every value the evaluation can produce.
        let ext_domain = bits::full(words, universe.len());
        let mut env = Env {
            numbers: bits::range(words, 0, bound),
            num: if bound >= 1 { bits::range(words, 1, bound) } else { bits::empty(words) },
            bool_mask: bits::range(words, 0, 1),
            ext_domain,
            universe,
            kinds: HashMap::new(),
            rules: HashMap::new(),
            deadline,
            cap,
            aborted: Cell::new(false),
            choices: RefCell::new(HashMap::new()),
        };
        for b in gadgets::BUILTINS {
            env.kinds.insert(crate::model::sym(b), PredKind::Builtin(b));
        }
        let mut edb: BTreeMap<Symbol, Relation> = BTreeMap::new();
        for f in db.facts() {
            let rel = edb.entry(f.predicate.clone()).or_insert_with(|| Relation::new(f.arity()));
            for t in &f.args {
                let v = Value::from_term(t).expect("ground fact");
                rel.data.push(env.universe.id(&v).unwrap());
            }
            if f.arity() == 0 {
                rel.data.push(0);
            }
        }
        for (p, _) in db.schema() {
            edb.entry(p.clone()).or_insert_with(|| Relation::new(db.schema()[p]));
        }
        for (p, rel) in edb {
            env.kinds.insert(p, PredKind::Table(Arc::new(rel)));
        }
        for r in &program.rules {
            env.rules.entry(r.head.predicate.clone()).or_default().push(r.clone());
        }
        env
    }

    fn empty(&self) -> Vec<u64> {
        bits::empty(self.universe.words())
    }

    /// Materialize (or classify) every needed IDB predicate except the goal.
    pub fn prepare(&mut self, order: &[Symbol], goal: &Symbol, arities: &HashMap<Symbol, usize>) -> Result<(), Stop> {
        for p in order {
            if p == goal {
                continue;
            }
            let rules = self.rules.get(p).cloned().unwrap_or_default();
            let refs: Vec<&Rule> = rules.iter().collect();
            if let Some(kind) = gadgets::recognize(p, &refs) {
                let dom = match &kind {
                    GadgetKind::IfThen { domain, .. } | GadgetKind::IfEq { domain } => self.unary_mask(domain),
                    _ => Some(self.bool_mask.clone()),
                };
                if let Some(dom) = dom {
                    self.kinds.insert(p.clone(), PredKind::Gadget(kind, dom));
                    continue;
                }
            }
            let arity = arities.get(p).copied().unwrap_or(0);
            match self.materialize(&rules, arity, self.cap) {
                Ok(rel) => {
                    self.kinds.insert(p.clone(), PredKind::Table(Arc::new(rel)));
                }
                Err(Stop::Overflow) => {
                    self.kinds.insert(p.clone(), PredKind::Virtual);
                }
                Err(Stop::Timeout) => return Err(Stop::Timeout),
            }
        }
        Ok(())
    }

    /// Membership mask of a materialized unary predicate or builtin.
    fn unary_mask(&self, p: &Symbol) -> Option<Vec<u64>> {
        match self.kinds.get(p)? {
            PredKind::Table(rel) if rel.arity == 1 => {
                let mut m = self.empty();
                for &x in &rel.data {
                    bits::set(&mut m, x);
                }
                Some(m)
            }
            PredKind::Builtin(NUM) => Some(self.num.clone()),
            _ => None,
        }
    }

    /// Union of the rules' answers, or `Overflow` past `cap` tuples.
    pub fn materialize(&self, rules: &[Rule], arity: usize, cap: usize) -> Result<Relation, Stop> {
        let mut rel = Relation::new(arity);
        let mut seen: HashSet<Vec<u32>> = HashSet::new();
        for rule in rules {
            for t in self.rule_answers(rule, &HashMap::new(), Some(cap))? {
                if seen.insert(t.clone()) {
                    if seen.len() > cap {
                        return Err(Stop::Overflow);
                    }
                    if arity == 0 {
                        rel.data.push(0);
                    } else {
                        rel.data.extend(t);
                    }
                }
            }
        }
        Ok(rel)
    }

    /// Head tuples derivable by one rule, optionally with some variables
    /// pre-bound.
    pub fn rule_answers(&self, rule: &Rule, fixed: &HashMap<Symbol, u32>, cap: Option<usize>) -> Result<Vec<Vec<u32>>, Stop> {
        let Some((mut s, vars)) = self.body_solver(&rule.body, fixed, false)? else {
            return Ok(Vec::new());
        };
        let head: Vec<HeadTerm> = rule
            .head
            .args
            .iter()
            .map(|t| match t {
                Term::Var(v) => HeadTerm::Var(vars[v]),
                other => HeadTerm::Const(self.universe.id(&Value::from_term(other).unwrap()).unwrap()),
            })
            .collect();
        let proj: Vec<Var> = dedup(head.iter().filter_map(|h| match h {
            HeadTerm::Var(v) => Some(*v),
            HeadTerm::Const(_) => None,
        }));
        let all: Vec<Var> = (0..s.num_vars() as Var).collect();
        let rows = enumerate(&mut s, &proj, &all, cap)?;
        Ok(rows
            .into_iter()
            .map(|vals| {
                head.iter()
                    .map(|h| match h {
                        HeadTerm::Const(c) => *c,
                        HeadTerm::Var(v) => vals[proj.iter().position(|p| p == v).unwrap()],
                    })
                    .collect()
            })
            .collect())
    }

    /// Solver over the atoms of a rule body; `None` when trivially
    /// unsatisfiable. Variables keep their names when `named`.
    pub fn body_solver(
        &self,
        body: &[Atom],
        fixed: &HashMap<Symbol, u32>,
        named: bool,
    ) -> Result<Option<(Solver<'_>, HashMap<Symbol, Var>)>, Stop> {
        let mut s = Solver::new(self);
        let words = self.universe.words();
        let full = bits::full(words, self.universe.len());
        let mut vars: HashMap<Symbol, Var> = HashMap::new();
        let mut consts: HashMap<u32, Var> = HashMap::new();
        for a in body {
            let mut args = Vec::with_capacity(a.arity());
            for t in &a.args {
                let v = match t {
                    Term::Var(x) => *vars.entry(x.clone()).or_insert_with(|| {
                        let init = match fixed.get(x) {
                            Some(&id) => bits::singleton(words, id),
                            None => full.clone(),
                        };
                        s.new_var(named.then(|| x.clone()), &init)
                    }),
                    other => {
                        let id = self.universe.id(&Value::from_term(other).unwrap()).unwrap();
                        *consts.entry(id).or_insert_with(|| s.new_var(None, &bits::singleton(words, id)))
                    }
                };
                args.push(v);
            }
            if !self.add_atom(&mut s, a, args)? {
                return Ok(None);
            }
        }
        for (x, &id) in fixed {
            if !vars.contains_key(x) && named {
                let v = s.new_var(Some(x.clone()), &bits::singleton(words, id));
                vars.insert(x.clone(), v);
            }
        }
        Ok(Some((s, vars)))
    }

    /// Post the constraint for one atom; false if it is unsatisfiable
    /// outright.
    fn add_atom(&self, s: &mut Solver, a: &Atom, args: Vec<Var>) -> Result<bool, Stop> {
        let kind = self.kinds.get(&a.predicate).cloned().unwrap_or(PredKind::Table(Arc::new(Relation::new(a.arity()))));
        let ok = match kind {
            PredKind::Builtin(b) => match b {
                NUM => s.restrict(args[0], &self.num),
                ZERO => s.assign(args[0], 0),
                ONE => s.assign(args[0], 1),
                LT | SUCC => {
                    let ok = s.restrict(args[0], &self.numbers) && s.restrict(args[1], &self.numbers);
                    s.add(if b == LT { Con::Lt(args[0], args[1]) } else { Con::Succ(args[0], args[1]) });
                    ok
                }
                NEQ => {
                    let ok = s.restrict(args[0], &self.ext_domain) && s.restrict(args[1], &self.ext_domain);
                    s.add(Con::Neq(args[0], args[1]));
                    ok
                }
                _ => unreachable!("unknown builtin"),
            },
            PredKind::Gadget(g, dom) => match g {
                GadgetKind::IfThen { .. } => {
                    let ok = args.iter().all(|&v| s.restrict(v, &dom));
                    s.add(Con::Implies(args));
                    ok
                }
                GadgetKind::IfEq { .. } => {
                    let ok = s.restrict(args[0], &dom) && s.restrict(args[1], &dom) && s.restrict(args[2], &self.bool_mask);
                    s.add(Con::IfEq(args[0], args[1], args[2]));
                    ok
                }
                GadgetKind::NotB => {
                    let ok = args.iter().all(|&v| s.restrict(v, &self.bool_mask));
                    s.add(Con::Not(args[0], args[1]));
                    ok
                }
                GadgetKind::OrB => {
                    let ok = args.iter().all(|&v| s.restrict(v, &self.bool_mask));
                    s.add(Con::Or(args[0], args[1], args[2]));
                    ok
                }
                GadgetKind::TrueB => s.assign(args[0], 1),
            },
            PredKind::Table(rel) => match rel.arity {
                0 => !rel.data.is_empty(),
                1 => {
                    let mut m = self.empty();
                    for &x in &rel.data {
                        bits::set(&mut m, x);
                    }
                    s.restrict(args[0], &m)
                }
                _ => {
                    s.add(Con::Table { rel, args });
                    true
                }
            },
            PredKind::Virtual => {
                let pattern: Vec<Option<u32>> = args.iter().map(|&v| s.value(v)).collect();
                let alts = self.choice_alts(&a.predicate, &pattern)?;
                if alts.alts.is_empty() {
                    false
                } else {
                    s.add(Con::Choice { args, alts });
                    true
                }
            }
        };
        Ok(ok)
    }

    /// Alternatives of a virtual predicate for the given constant arguments.
    pub fn choice_alts(&self, pred: &Symbol, pattern: &[Option<u32>]) -> Result<Arc<ChoiceAlts>, Stop> {
        let key = (pred.clone(), pattern.to_vec());
        if let Some(c) = self.choices.borrow().get(&key) {
            return Ok(Arc::clone(c));
        }
        let mut alts = Vec::new();
        for (ri, rule) in self.rules.get(pred).map(Vec::as_slice).unwrap_or(&[]).iter().enumerate() {
            if let Some(alt) = self.analyze_alt(ri, rule, pattern)? {
                alts.push(alt);
            }
        }
        let c = Arc::new(ChoiceAlts {
            pred: pred.clone(),
            alts,
        });
        self.choices.borrow_mut().insert(key, Arc::clone(&c));
        Ok(c)
    }

    /// Bind head variables to a (partial) tuple; `None` on a clash.
    fn bind_head(&self, head: &Atom, tuple: &[Option<u32>]) -> Option<HashMap<Symbol, u32>> {
        let mut fixed = HashMap::new();
        for (t, val) in head.args.iter().zip(tuple) {
            match (t, val) {
                (Term::Var(v), Some(x)) => {
                    if *fixed.entry(v.clone()).or_insert(*x) != *x {
                        return None;
                    }
                }
                (Term::Var(_), None) => {}
                (c, Some(x)) => {
                    if self.universe.id(&Value::from_term(c).unwrap()) != Some(*x) {
                        return None;
                    }
                }
                (_, None) => {}
            }
        }
        Some(fixed)
    }

    fn analyze_alt(&self, ri: usize, rule: &Rule, pattern: &[Option<u32>]) -> Result<Option<Alt>, Stop> {
        let Some(fixed) = self.bind_head(&rule.head, pattern) else {
            return Ok(None);
        };
        let Some((mut s, vars)) = self.body_solver(&rule.body, &fixed, false)? else {
            return Ok(None);
        };
        if !s.propagate() {
            return Ok(None);
        }
        let all: Vec<Var> = (0..s.num_vars() as Var).collect();
        if !s.solve(&mut |s| min_domain(s, &all).map(|v| (v, values_ascending(s, v))), &mut |_| {})? {
            return Ok(None);
        }
        // Components over unassigned variables.
        let n = s.num_vars();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            let mut y = x;
            while p[y] != r {
                let nx = p[y];
                p[y] = r;
                y = nx;
            }
            r
        }
        for c in s.constraints() {
            let open: Vec<usize> = scope_of(c).into_iter().filter(|&v| s.value(v).is_none()).map(|v| v as usize).collect();
            for w in open.windows(2) {
                let (a, b) = (find(&mut parent, w[0]), find(&mut parent, w[1]));
                parent[a] = b;
            }
        }
        let mut slots: Vec<Option<Slot>> = vec![None; rule.head.arity()];
        let mut by_root: BTreeMap<usize, Vec<(usize, Var)>> = BTreeMap::new();
        for (p, t) in rule.head.args.iter().enumerate() {
            match t {
                Term::Var(x) if pattern[p].is_none() => {
                    let v = vars[x];
                    match s.value(v) {
                        Some(val) => slots[p] = Some(Slot::Fixed(val)),
                        None => by_root.entry(find(&mut parent, v as usize)).or_default().push((p, v)),
                    }
                }
                Term::Var(x) => slots[p] = Some(Slot::Fixed(fixed[x])),
                c => slots[p] = Some(Slot::Fixed(self.universe.id(&Value::from_term(c).unwrap()).unwrap())),
            }
        }
        let mut pieces = Vec::new();
        let mut positions = Vec::new();
        let mut loose = false;
        for (root, members) in by_root {
            let hv: Vec<Var> = dedup(members.iter().map(|m| m.1));
            let comp: Vec<Var> = (0..n as Var).filter(|&v| s.value(v).is_none() && find(&mut parent, v as usize) == root).collect();
            let piece_idx = pieces.len();
            let pos: Vec<(usize, usize)> = members.iter().map(|&(p, v)| (p, hv.iter().position(|h| *h == v).unwrap())).collect();
            for &(p, idx) in &pos {
                slots[p] = Some(Slot::Piece { piece: piece_idx, idx });
            }
            match enumerate(&mut s, &hv, &comp, Some(self.cap)) {
                Ok(rows) => {
                    if hv.len() == 1 {
                        let mut d = self.empty();
                        for r in &rows {
                            bits::set(&mut d, r[0]);
                        }
                        pieces.push(Piece::Boxed(vec![d]));
                    } else {
                        pieces.push(Piece::Tuples {
                            width: hv.len(),
                            data: rows.into_iter().flatten().collect(),
                        });
                    }
                }
                Err(Stop::Overflow) => {
                    loose = true;
                    pieces.push(Piece::Boxed(hv.iter().map(|&v| s.dom(v).to_vec()).collect()));
                }
                Err(Stop::Timeout) => return Err(Stop::Timeout),
            }
            positions.push(pos);
        }
        Ok(Some(Alt {
            rule: ri,
            slots: slots.into_iter().map(|s| s.expect("every head position classified")).collect(),
            pieces,
            positions,
            loose,
        }))
    }

    /// Whether rule `ri` of `pred` derives exactly this tuple.
    pub fn alt_holds(&self, pred: &Symbol, ri: usize, tuple: &[u32]) -> bool {
        let rule = &self.rules[pred][ri];
        let pattern: Vec<Option<u32>> = tuple.iter().map(|&x| Some(x)).collect();
        let Some(fixed) = self.bind_head(&rule.head, &pattern) else {
            return false;
        };
        let res = (|| -> Result<bool, Stop> {
            let Some((mut s, _)) = self.body_solver(&rule.body, &fixed, false)? else {
                return Ok(false);
            };
            if !s.propagate() {
                return Ok(false);
            }
            let all: Vec<Var> = (0..s.num_vars() as Var).collect();
            s.solve(&mut |s| min_domain(s, &all).map(|v| (v, values_ascending(s, v))), &mut |_| {})
        })();
        match res {
            Ok(b) => b,
            Err(_) => {
                self.aborted.set(true);
                false
            }
        }
    }
}

enum HeadTerm {
    Var(Var),
    Const(u32),
}

pub(crate) fn dedup(it: impl IntoIterator<Item = Var>) -> Vec<Var> {
    let mut out: Vec<Var> = Vec::new();
    for v in it {
        if !out.contains(&v) {
            out.push(v);
        }
    }
    out
}

fn scope_of(c: &Con) -> Vec<Var> {
    match c {
        Con::Lt(a, b) | Con::Succ(a, b) | Con::Neq(a, b) | Con::Not(a, b) => vec![*a, *b],
        Con::IfEq(a, b, c) | Con::Or(a, b, c) => vec![*a, *b, *c],
        Con::Table { args, .. } | Con::Choice { args, .. } | Con::Implies(args) => args.clone(),
    }
}

/// Distinct values of `proj` over solutions, searching `rest` for a
/// completion of each. The solver is propagated first.
pub(crate) fn enumerate(s: &mut Solver, proj: &[Var], rest: &[Var], cap: Option<usize>) -> Result<Vec<Vec<u32>>, Stop> {
    if !s.propagate() {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    let rest = rest.to_vec();
    s.search(
        &mut |s| min_domain(s, proj).map(|v| (v, values_ascending(s, v))),
        &mut |s| {
            let found = s.solve(&mut |s| min_domain(s, &rest).map(|v| (v, values_ascending(s, v))), &mut |_| {})?;
            if found {
                out.push(proj.iter().map(|&v| s.value(v).unwrap()).collect());
                if cap.is_some_and(|c| out.len() > c) {
                    return Err(Stop::Overflow);
                }
            }
            Ok(Flow::Continue)
        },
    )?;
    Ok(out)
}
