//! Arity reduction: guarded implications become Boolean-gate chains and the
//! wide tuple relation T becomes the (a+1)-ary database-tuple relation Tp
//! plus constraint atoms.

use std::collections::{BTreeMap, HashMap};

use super::{atom, num, var, Context, ProgramSkeleton, RowVars, VarKind};
use crate::gadgets::{self, LT, NUM};
use crate::model::{sym, Atom, Rule, Symbol, Term};

/// Allocates Boolean variables and shares IfEq/NotB results per argument
/// pair.
pub(crate) struct GateBuilder<'n> {
    pub(crate) if_eq: &'n Symbol,
    pub(crate) not_b: &'n Symbol,
    pub(crate) or_b: &'n Symbol,
    pub(crate) true_b: &'n Symbol,
    prefix: &'static str,
    counter: usize,
    eq_cache: HashMap<(Term, Term), Term>,
    not_cache: HashMap<Term, Term>,
    pub(crate) atoms: Vec<Atom>,
    pub(crate) kinds: BTreeMap<Symbol, VarKind>,
}

impl<'n> GateBuilder<'n> {
    pub(crate) fn new(ctx: &'n Context, prefix: &'static str) -> Self {
        GateBuilder {
            if_eq: &ctx.names.if_eq,
            not_b: &ctx.names.not_b,
            or_b: &ctx.names.or_b,
            true_b: &ctx.names.true_b,
            prefix,
            counter: 0,
            eq_cache: HashMap::new(),
            not_cache: HashMap::new(),
            atoms: Vec::new(),
            kinds: BTreeMap::new(),
        }
    }

    pub(crate) fn snapshot(&self) -> (HashMap<(Term, Term), Term>, HashMap<Term, Term>) {
        (self.eq_cache.clone(), self.not_cache.clone())
    }

    pub(crate) fn restore(&mut self, snap: &(HashMap<(Term, Term), Term>, HashMap<Term, Term>)) {
        self.eq_cache = snap.0.clone();
        self.not_cache = snap.1.clone();
    }

    pub(crate) fn fresh(&mut self) -> Term {
        self.counter += 1;
        let name = sym(&format!("{}_{}", self.prefix, self.counter));
        self.kinds.insert(name.clone(), VarKind::Bool);
        Term::Var(name)
    }

    /// Boolean that is 1 iff `x = y`.
    pub(crate) fn eq(&mut self, x: &Term, y: &Term) -> Term {
        let key = if x <= y { (x.clone(), y.clone()) } else { (y.clone(), x.clone()) };
        if let Some(b) = self.eq_cache.get(&key) {
            return b.clone();
        }
        let b = self.fresh();
        self.atoms.push(atom(self.if_eq, vec![x.clone(), y.clone(), b.clone()]));
        self.eq_cache.insert(key, b.clone());
        b
    }

    pub(crate) fn not(&mut self, b: &Term) -> Term {
        if let Some(n) = self.not_cache.get(b) {
            return n.clone();
        }
        let n = self.fresh();
        self.atoms.push(atom(self.not_b, vec![b.clone(), n.clone()]));
        self.not_cache.insert(b.clone(), n.clone());
        n
    }

    pub(crate) fn or(&mut self, x: &Term, y: &Term) -> Term {
        let o = self.fresh();
        self.atoms.push(atom(self.or_b, vec![x.clone(), y.clone(), o.clone()]));
        o
    }

    /// `IfThenK(a1,b1,…,ak,bk,u1,u2)` as gates: `u1=u2 ∨ ⋁ aj≠bj` must be 1.
    pub(crate) fn implication(&mut self, args: &[Term]) {
        let n = args.len();
        let mut acc = self.eq(&args[n - 2], &args[n - 1]);
        for pair in args[..n - 2].chunks(2) {
            let e = self.eq(&pair[0], &pair[1]);
            let ne = self.not(&e);
            acc = self.or(&acc, &ne);
        }
        self.atoms.push(atom(self.true_b, vec![acc]));
    }
}

pub(crate) fn gate_rules(ctx: &Context) -> Vec<Rule> {
    let n = &ctx.names;
    let mut rules = gadgets::if_eq_rules(&n.if_eq, &n.dnum);
    rules.extend(gadgets::not_b_rules(&n.not_b));
    rules.extend(gadgets::or_b_rules(&n.or_b));
    rules.extend(gadgets::true_b_rules(&n.true_b));
    rules
}

/// REDUCED variant from a WIDE skeleton.
pub fn reduce_arity(wide: &ProgramSkeleton, ctx: &Context) -> ProgramSkeleton {
    let names = &ctx.names;
    let mut kinds = wide.kinds.clone();
    let mut g = GateBuilder::new(ctx, "B");
    let numeric = sym(NUM);
    let lt = sym(LT);

    let mut r_tuples = Vec::new();
    for row in &wide.rows {
        let RowVars { i, r, f, x, s, c } = row;
        let rp = var(format!("RP_{i}"));
        kinds.insert(sym(&format!("RP_{i}")), VarKind::Num);
        let (r, f, s) = (Term::Var(r.clone()), Term::Var(f.clone()), Term::Var(s.clone()));
        let mut tp_args = vec![rp.clone()];
        tp_args.extend(x.iter().map(|v| Term::Var(v.clone())));
        r_tuples.push(atom(&names.tp, tp_args));
        r_tuples.push(atom(&numeric, vec![r.clone()]));
        r_tuples.push(atom(&lt, vec![r.clone(), num(ctx.m + 1)]));
        // Database rows take their relation from Tp.
        let br = g.eq(&r, &rp);
        let o = g.or(&f, &br);
        g.atoms.push(atom(&g.true_b.clone(), vec![o]));
        // F = 1 exactly when Tp is read at 0 (any values).
        g.atoms.push(atom(&names.if_eq, vec![rp.clone(), num(0), f.clone()]));
        let nf = g.not(&f);
        r_tuples.push(atom(&lt, vec![s.clone(), num(ctx.ell + 1)]));
        g.atoms.push(atom(&names.if_eq, vec![s.clone(), num(0), nf.clone()]));
        for cj in c {
            let cj = Term::Var(cj.clone());
            r_tuples.push(atom(&lt, vec![cj.clone(), num(*i)]));
            g.atoms.push(atom(&names.if_eq, vec![cj, num(0), nf.clone()]));
        }
        r_tuples.append(&mut g.atoms);
    }

    let convert = |atoms: &[Atom], g: &mut GateBuilder| -> Vec<Atom> {
        let mut out = Vec::new();
        for a in atoms {
            if names.if_then.contains(&a.predicate) {
                g.implication(&a.args);
                out.append(&mut g.atoms);
            } else {
                out.push(a.clone());
            }
        }
        out
    };
    let r_chase = convert(&wide.r_chase, &mut g);
    // Gates created for one disjunct are not visible in the others.
    let snap = g.snapshot();
    let r_query: Vec<Vec<Atom>> = wide
        .r_query
        .iter()
        .map(|q| {
            g.restore(&snap);
            convert(q, &mut g)
        })
        .collect();
    kinds.extend(std::mem::take(&mut g.kinds));

    let mut p_tuples: Vec<Rule> = wide
        .p_tuples
        .iter()
        .filter(|r| r.head.predicate != names.t)
        .cloned()
        .collect();
    let xs: Vec<Term> = (1..=ctx.a).map(|p| var(format!("X{p}"))).collect();
    for rel in &ctx.u.relations {
        let mut head = vec![num(rel.number as u32)];
        head.extend(xs.iter().cloned());
        p_tuples.push(Rule::new(atom(&names.tp, head), vec![atom(&rel.padded, xs.clone())]));
    }
    let mut head = vec![num(0)];
    head.extend(xs.iter().cloned());
    p_tuples.push(Rule::new(
        atom(&names.tp, head),
        xs.iter().map(|x| atom(&names.dnum, vec![x.clone()])).collect(),
    ));

    ProgramSkeleton {
        r_tuples,
        r_chase,
        r_query,
        heads: wide.heads.clone(),
        p_tuples,
        p_chase: gate_rules(ctx),
        p_query: Vec::new(),
        kinds,
        rows: wide.rows.clone(),
        numeric_bound: wide.numeric_bound,
    }
}
