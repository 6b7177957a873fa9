//! Compile a uniformized problem into a nonrecursive Datalog program that
//! guesses an encoded chase sequence of length N, checks it, and matches
//! the query against it.

mod bitvec;
mod encoding;
mod reduce;

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::gadgets::{self, LT, NUM};
use crate::model::{sym, Atom, DatalogProgram, Query, RewriteParams, Rule, Symbol, Term, Tgd, Variant};
use crate::normalizer::{fresh_name, to_normal_form, uniformize, NormalizationReport, NormalizeError, UniformizedProblem};

pub use bitvec::{to_bitvector, BitVectorLayout};
pub use encoding::{decode_assignment, encode_witness, encoding_bindings, format_encoding_table, TupleEncoding};
pub use reduce::reduce_arity;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RewriteError {
    #[error("N = {n} is below the minimum {min} (max of rule count and query size)")]
    StepsTooSmall { n: u32, min: u32 },
    #[error("predicate {0} is reserved for the numeric extension")]
    ReservedPredicate(String),
    #[error(transparent)]
    Normalize(#[from] NormalizeError),
    #[error("bit width {width} exceeds the supported maximum {max}")]
    WidthTooLarge { width: u32, max: u32 },
}

/// How a goal-rule variable is typed in the encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    /// A step, relation or rule number.
    Num,
    /// An attribute value: a database constant or a null's number.
    Val,
    /// 0 or 1.
    Bool,
}

/// Predicate names used by the generated program, chosen to avoid the
/// problem's own predicates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Names {
    pub t: Symbol,
    pub tp: Symbol,
    pub dnum: Symbol,
    pub adom: Symbol,
    pub if_then: [Symbol; 3],
    pub if_eq: Symbol,
    pub not_b: Symbol,
    pub or_b: Symbol,
    pub true_b: Symbol,
    pub goal: Symbol,
    pub bv_num: Symbol,
    pub bv_lt: Symbol,
    pub bit: Symbol,
    pub dval: Symbol,
}

impl Names {
    fn allocate(taken: &BTreeSet<Symbol>) -> Names {
        let mut taken = taken.clone();
        let mut get = |base: &str| {
            let s = fresh_name(base, &taken);
            taken.insert(s.clone());
            s
        };
        Names {
            t: get("T"),
            tp: get("Tp"),
            dnum: get("DNum"),
            adom: get("adom"),
            if_then: [get("IfThen"), get("IfThen2"), get("IfThen3")],
            if_eq: get("IfEq"),
            not_b: get("NotB"),
            or_b: get("OrB"),
            true_b: get("TrueB"),
            goal: get("goal"),
            bv_num: get("BvNum"),
            bv_lt: get("BvLt"),
            bit: get("Bit"),
            dval: get("DVal"),
        }
    }
}

/// Per-step variables of the guessed sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowVars {
    pub i: u32,
    pub r: Symbol,
    pub f: Symbol,
    pub x: Vec<Symbol>,
    pub s: Symbol,
    pub c: Vec<Symbol>,
}

/// The goal rule split into its three parts, plus the supporting rules.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProgramSkeleton {
    pub r_tuples: Vec<Atom>,
    pub r_chase: Vec<Atom>,
    /// One query part per disjunct.
    pub r_query: Vec<Vec<Atom>>,
    /// Goal head per disjunct.
    pub heads: Vec<Atom>,
    pub p_tuples: Vec<Rule>,
    pub p_chase: Vec<Rule>,
    pub p_query: Vec<Rule>,
    pub kinds: BTreeMap<Symbol, VarKind>,
    pub rows: Vec<RowVars>,
    /// Extra numeric guard: every numeric value is at most this.
    pub numeric_bound: u32,
}

impl ProgramSkeleton {
    pub fn goal_rules(&self) -> Vec<Rule> {
        self.heads
            .iter()
            .zip(&self.r_query)
            .map(|(h, q)| {
                let mut body = self.r_tuples.clone();
                body.extend(self.r_chase.iter().cloned());
                body.extend(q.iter().cloned());
                Rule::new(h.clone(), body)
            })
            .collect()
    }

    pub fn into_program(self, ctx: &Context) -> DatalogProgram {
        let goal_arity = self.heads.first().map_or(0, Atom::arity);
        let mut p = DatalogProgram::new(ctx.names.goal.clone(), goal_arity);
        p.rules.extend(self.p_tuples.iter().cloned());
        p.rules.extend(self.p_chase.iter().cloned());
        p.rules.extend(self.p_query.iter().cloned());
        p.rules.extend(self.goal_rules());
        p.edb = ctx.u.relations.iter().map(|r| r.name.clone()).collect();
        p.numeric_bound = Some(self.numeric_bound);
        p
    }
}

/// Shared parameters of one construction.
#[derive(Debug, Clone)]
pub struct Context<'a> {
    pub u: &'a UniformizedProblem,
    pub n: u32,
    pub names: Names,
    pub m: u32,
    pub ell: u32,
    pub a: usize,
    pub k: usize,
    /// Largest number any guard mentions: max(N, m, ℓ) + 1.
    pub bound: u32,
}

impl<'a> Context<'a> {
    pub fn new(u: &'a UniformizedProblem, n: u32) -> Result<Context<'a>, RewriteError> {
        for r in &u.relations {
            if gadgets::is_builtin(&r.name) {
                return Err(RewriteError::ReservedPredicate(r.name.to_string()));
            }
        }
        let min = RewriteParams::min_steps(u.ell(), u.query_u.max_atoms());
        if n < min {
            return Err(RewriteError::StepsTooSmall { n, min });
        }
        let mut taken = u.used_names();
        taken.extend(gadgets::BUILTINS.iter().map(|b| sym(b)));
        let m = u.m() as u32;
        let ell = u.ell() as u32;
        Ok(Context {
            u,
            n,
            names: Names::allocate(&taken),
            m,
            ell,
            a: u.a,
            k: u.k,
            bound: n.max(m).max(ell) + 1,
        })
    }

    fn wide_arity(&self) -> usize {
        self.a + self.k + 4
    }
}

pub(crate) fn var(name: impl AsRef<str>) -> Term {
    Term::Var(sym(name.as_ref()))
}

fn num(n: u32) -> Term {
    Term::Num(n)
}

pub(crate) fn row_r(i: u32) -> String {
    format!("R_{i}")
}
pub(crate) fn row_f(i: u32) -> String {
    format!("F_{i}")
}
pub(crate) fn row_x(i: u32, p: usize) -> String {
    format!("X_{i}_{}", p + 1)
}
pub(crate) fn row_s(i: u32) -> String {
    format!("S_{i}")
}
pub(crate) fn row_c(i: u32, j: usize) -> String {
    format!("C_{i}_{}", j + 1)
}
pub(crate) fn query_pos(t: usize) -> String {
    format!("Q_{}", t + 1)
}

fn atom(p: &Symbol, args: Vec<Term>) -> Atom {
    Atom::new(p.clone(), args)
}

/// Guarded implication atom with `conds.len()` condition pairs.
fn if_then(ctx: &Context, conds: &[(Term, Term)], u1: Term, u2: Term) -> Atom {
    let mut args = Vec::with_capacity(conds.len() * 2 + 2);
    for (a, b) in conds {
        args.push(a.clone());
        args.push(b.clone());
    }
    args.push(u1);
    args.push(u2);
    atom(&ctx.names.if_then[conds.len() - 1], args)
}

/// Atoms `T(i, R_i, F_i, X_i.., S_i, C_i..)` and the rules filling T.
pub fn build_r_tuples(ctx: &Context, kinds: &mut BTreeMap<Symbol, VarKind>) -> (Vec<Atom>, Vec<Rule>, Vec<RowVars>) {
    let names = &ctx.names;
    let mut rules: Vec<Rule> = ctx.u.padding_rules.clone();
    rules.extend(domain_rules(ctx));
    let xs: Vec<Term> = (1..=ctx.a).map(|p| var(format!("X{p}"))).collect();
    for rel in &ctx.u.relations {
        let mut head = vec![var("Z"), num(rel.number as u32), num(0)];
        head.extend(xs.iter().cloned());
        head.push(num(0));
        head.extend((0..ctx.k).map(|_| num(0)));
        rules.push(Rule::new(
            atom(&names.t, head),
            vec![atom(&rel.padded, xs.clone()), atom(&sym(NUM), vec![var("Z")])],
        ));
    }
    if ctx.ell > 0 {
        let us: Vec<Term> = (1..=ctx.k).map(|j| var(format!("U{j}"))).collect();
        let mut head = vec![var("Z"), var("Y"), num(1)];
        head.extend(xs.iter().cloned());
        head.push(var("V"));
        head.extend(us.iter().cloned());
        let n_ = sym(NUM);
        let lt = sym(LT);
        let mut body = vec![atom(&n_, vec![var("Z")]), atom(&n_, vec![var("Y")])];
        body.extend(xs.iter().map(|x| atom(&names.dnum, vec![x.clone()])));
        body.push(atom(&n_, vec![var("V")]));
        body.extend(us.iter().map(|u| atom(&n_, vec![u.clone()])));
        body.push(atom(&lt, vec![var("Y"), num(ctx.m + 1)]));
        body.push(atom(&lt, vec![var("V"), num(ctx.ell + 1)]));
        body.extend(us.iter().map(|u| atom(&lt, vec![u.clone(), var("Z")])));
        rules.push(Rule::new(atom(&names.t, head), body));
    }

    let mut atoms = Vec::new();
    let mut rows = Vec::new();
    for i in 1..=ctx.n {
        let row = RowVars {
            i,
            r: sym(&row_r(i)),
            f: sym(&row_f(i)),
            x: (0..ctx.a).map(|p| sym(&row_x(i, p))).collect(),
            s: sym(&row_s(i)),
            c: (0..ctx.k).map(|j| sym(&row_c(i, j))).collect(),
        };
        kinds.insert(row.r.clone(), VarKind::Num);
        kinds.insert(row.f.clone(), VarKind::Bool);
        kinds.insert(row.s.clone(), VarKind::Num);
        for x in &row.x {
            kinds.insert(x.clone(), VarKind::Val);
        }
        for c in &row.c {
            kinds.insert(c.clone(), VarKind::Num);
        }
        let mut args = vec![num(i), Term::Var(row.r.clone()), Term::Var(row.f.clone())];
        args.extend(row.x.iter().map(|x| Term::Var(x.clone())));
        args.push(Term::Var(row.s.clone()));
        args.extend(row.c.iter().map(|c| Term::Var(c.clone())));
        atoms.push(atom(&names.t, args));
        rows.push(row);
    }
    (atoms, rules, rows)
}

/// `adom` projects every column of every relation; `DNum = Num ∪ adom ∪ {0}`.
fn domain_rules(ctx: &Context) -> Vec<Rule> {
    let names = &ctx.names;
    let mut rules = adom_rules(ctx);
    rules.push(Rule::new(atom(&names.dnum, vec![var("X")]), vec![atom(&sym(NUM), vec![var("X")])]));
    rules.push(Rule::new(atom(&names.dnum, vec![var("X")]), vec![atom(&names.adom, vec![var("X")])]));
    rules.push(Rule::fact(atom(&names.dnum, vec![num(0)])));
    rules
}

pub(crate) fn adom_rules(ctx: &Context) -> Vec<Rule> {
    let mut rules = Vec::new();
    for rel in &ctx.u.relations {
        let cols: Vec<Term> = (1..=rel.arity).map(|p| var(format!("X{p}"))).collect();
        for p in 0..rel.arity {
            rules.push(Rule::new(
                atom(&ctx.names.adom, vec![cols[p].clone()]),
                vec![atom(&rel.name, cols.clone())],
            ));
        }
    }
    rules
}

/// Occurrences `(atom index, position)` of each variable, in first-use order.
fn occurrences(atoms: &[Atom]) -> Vec<(Symbol, Vec<(usize, usize)>)> {
    let mut out: Vec<(Symbol, Vec<(usize, usize)>)> = Vec::new();
    for (j, a) in atoms.iter().enumerate() {
        for (p, t) in a.args.iter().enumerate() {
            if let Term::Var(v) = t {
                match out.iter_mut().find(|(w, _)| w == v) {
                    Some((_, occ)) => occ.push((j, p)),
                    None => out.push((v.clone(), vec![(j, p)])),
                }
            }
        }
    }
    out
}

/// Conditions (1)–(5) for every tgd and step, plus the gadget rules used.
pub fn build_r_chase(ctx: &Context, kinds: &mut BTreeMap<Symbol, VarKind>) -> (Vec<Atom>, Vec<Rule>) {
    let mut atoms = Vec::new();
    let mut used = [false; 3];
    let cross_with_if_then3 = ctx.wide_arity() >= 8;
    let rel = |name: &Symbol| num(ctx.u.relation_number(name).expect("numbered relation") as u32);
    for (ti, tgd) in ctx.u.sigma_u.iter().enumerate() {
        let t = num(ti as u32 + 1);
        let head = &tgd.head()[0];
        let body = tgd.body();
        let body_occ = occurrences(body);
        for i in 1..=ctx.n {
            let s_i = var(row_s(i));
            let x = |row: u32, p: usize| var(row_x(row, p));
            let c = |j: usize| var(row_c(i, j));
            // (1) head relation
            atoms.push(if_then(ctx, &[(s_i.clone(), t.clone())], var(row_r(i)), rel(&head.predicate)));
            used[0] = true;
            // (2) parent relations
            for (j, b) in body.iter().enumerate() {
                for jp in 1..i {
                    atoms.push(if_then(
                        ctx,
                        &[(s_i.clone(), t.clone()), (c(j), num(jp))],
                        var(row_r(jp)),
                        rel(&b.predicate),
                    ));
                    used[1] = true;
                }
            }
            // (3) the new null is the step number
            for (p, arg) in head.args.iter().enumerate() {
                if let Term::Var(v) = arg {
                    if tgd.existentials().contains(v) {
                        atoms.push(if_then(ctx, &[(s_i.clone(), t.clone())], x(i, p), num(i)));
                    }
                }
            }
            // (4) repeated body variables
            for (v, occ) in &body_occ {
                if occ.len() < 2 {
                    continue;
                }
                let crosses = occ.iter().any(|o| o.0 != occ[0].0);
                if crosses && !cross_with_if_then3 {
                    let w = format!("W_{i}_{}_{v}", ti + 1);
                    kinds.insert(sym(&w), VarKind::Val);
                    for &(j, p) in occ {
                        for jp in 1..i {
                            atoms.push(if_then(
                                ctx,
                                &[(s_i.clone(), t.clone()), (c(j), num(jp))],
                                x(jp, p),
                                var(&w),
                            ));
                            used[1] = true;
                        }
                    }
                    continue;
                }
                for (oi, &(j1, p1)) in occ.iter().enumerate() {
                    for &(j2, p2) in &occ[oi + 1..] {
                        if j1 == j2 {
                            for jp in 1..i {
                                atoms.push(if_then(
                                    ctx,
                                    &[(s_i.clone(), t.clone()), (c(j1), num(jp))],
                                    x(jp, p1),
                                    x(jp, p2),
                                ));
                                used[1] = true;
                            }
                        } else {
                            for jp1 in 1..i {
                                for jp2 in 1..i {
                                    atoms.push(if_then(
                                        ctx,
                                        &[(s_i.clone(), t.clone()), (c(j1), num(jp1)), (c(j2), num(jp2))],
                                        x(jp1, p1),
                                        x(jp2, p2),
                                    ));
                                    used[2] = true;
                                }
                            }
                        }
                    }
                }
            }
            // (5) body-to-head propagation
            for (v, occ) in &body_occ {
                for (hp, harg) in head.args.iter().enumerate() {
                    if harg.as_var() != Some(v) {
                        continue;
                    }
                    for &(j, p) in occ {
                        for jp in 1..i {
                            atoms.push(if_then(
                                ctx,
                                &[(s_i.clone(), t.clone()), (c(j), num(jp))],
                                x(jp, p),
                                x(i, hp),
                            ));
                            used[1] = true;
                        }
                    }
                }
            }
        }
    }
    let rules = (0..3)
        .filter(|&c| used[c])
        .flat_map(|c| gadgets::if_then_rules(&ctx.names.if_then[c], c + 1, &ctx.names.dnum))
        .collect();
    (atoms, rules)
}

/// Query atoms mapped to steps `Q_t`, with relation, join, constant and
/// output checks. Returns the body part and head per disjunct.
pub fn build_r_query(ctx: &Context, kinds: &mut BTreeMap<Symbol, VarKind>) -> (Vec<Vec<Atom>>, Vec<Atom>, bool) {
    let joins_with_if_then2 = ctx.wide_arity() >= 6;
    let mut parts = Vec::new();
    let mut heads = Vec::new();
    let mut uses_if_then2 = false;
    let num_p = sym(NUM);
    let lt = sym(LT);
    for cq in ctx.u.query_u.disjuncts() {
        let mut body = Vec::new();
        let x = |row: u32, p: usize| var(row_x(row, p));
        for t in 0..cq.atoms().len() {
            let q = var(query_pos(t));
            kinds.insert(sym(&query_pos(t)), VarKind::Num);
            body.push(atom(&num_p, vec![q.clone()]));
            body.push(atom(&lt, vec![q.clone(), num(ctx.n + 1)]));
        }
        for (t, a) in cq.atoms().iter().enumerate() {
            let q = var(query_pos(t));
            let r = num(ctx.u.relation_number(&a.predicate).expect("numbered relation") as u32);
            for i in 1..=ctx.n {
                body.push(if_then(ctx, &[(q.clone(), num(i))], var(row_r(i)), r.clone()));
            }
            for (p, arg) in a.args.iter().enumerate() {
                if let Term::Const(_) | Term::Num(_) = arg {
                    for i in 1..=ctx.n {
                        body.push(if_then(ctx, &[(q.clone(), num(i))], x(i, p), arg.clone()));
                    }
                }
            }
        }
        let occ = occurrences(cq.atoms());
        for (v, occ) in &occ {
            if occ.len() < 2 {
                continue;
            }
            let crosses = occ.iter().any(|o| o.0 != occ[0].0);
            if crosses && !joins_with_if_then2 {
                let w = format!("W_q_{v}");
                kinds.insert(sym(&w), VarKind::Val);
                for &(t, p) in occ {
                    for i in 1..=ctx.n {
                        body.push(if_then(ctx, &[(var(query_pos(t)), num(i))], x(i, p), var(&w)));
                    }
                }
                continue;
            }
            for (oi, &(t1, p1)) in occ.iter().enumerate() {
                for &(t2, p2) in &occ[oi + 1..] {
                    if t1 == t2 {
                        for i in 1..=ctx.n {
                            body.push(if_then(ctx, &[(var(query_pos(t1)), num(i))], x(i, p1), x(i, p2)));
                        }
                    } else {
                        for i in 1..=ctx.n {
                            for j in 1..=ctx.n {
                                body.push(if_then(
                                    ctx,
                                    &[(var(query_pos(t1)), num(i)), (var(query_pos(t2)), num(j))],
                                    x(i, p1),
                                    x(j, p2),
                                ));
                                uses_if_then2 = true;
                            }
                        }
                    }
                }
            }
        }
        let mut head_args = Vec::new();
        for (n, o) in cq.output().iter().enumerate() {
            let ov = format!("O_{}", n + 1);
            kinds.insert(sym(&ov), VarKind::Val);
            let (t, p) = occ.iter().find(|(v, _)| v == o).expect("output var occurs").1[0];
            for i in 1..=ctx.n {
                body.push(if_then(ctx, &[(var(query_pos(t)), num(i))], x(i, p), var(&ov)));
            }
            body.push(atom(&ctx.names.adom, vec![var(&ov)]));
            head_args.push(var(&ov));
        }
        parts.push(body);
        heads.push(atom(&ctx.names.goal, head_args));
    }
    (parts, heads, uses_if_then2)
}

/// The WIDE construction.
pub fn build_wide(ctx: &Context) -> ProgramSkeleton {
    let mut kinds = BTreeMap::new();
    let (r_tuples, p_tuples, rows) = build_r_tuples(ctx, &mut kinds);
    let (r_chase, mut p_chase) = build_r_chase(ctx, &mut kinds);
    let (r_query, heads, q_uses2) = build_r_query(ctx, &mut kinds);
    let defined: BTreeSet<Symbol> = p_chase.iter().map(|r| r.head.predicate.clone()).collect();
    let query_uses = [true, q_uses2, false];
    for c in 0..3 {
        if query_uses[c] && !defined.contains(&ctx.names.if_then[c]) {
            p_chase.extend(gadgets::if_then_rules(&ctx.names.if_then[c], c + 1, &ctx.names.dnum));
        }
    }
    ProgramSkeleton {
        r_tuples,
        r_chase,
        r_query,
        heads,
        p_tuples,
        p_chase,
        p_query: Vec::new(),
        kinds,
        rows,
        numeric_bound: ctx.bound,
    }
}

/// Build the program of the requested variant for a uniformized problem.
pub fn build_program(u: &UniformizedProblem, params: &RewriteParams) -> Result<DatalogProgram, RewriteError> {
    let ctx = Context::new(u, params.n_steps)?;
    let wide = build_wide(&ctx);
    let sk = match params.variant {
        Variant::Wide => wide,
        Variant::Reduced => reduce_arity(&wide, &ctx),
        Variant::Bitvec => {
            let layout = BitVectorLayout::for_bound(ctx.bound)?;
            to_bitvector(&reduce_arity(&wide, &ctx), &ctx, &layout)
        }
    };
    Ok(sk.into_program(&ctx))
}

/// Bit layout the BITVEC variant uses for `n` steps.
pub fn bitvec_layout(u: &UniformizedProblem, n: u32) -> Result<BitVectorLayout, RewriteError> {
    BitVectorLayout::for_bound(Context::new(u, n)?.bound)
}

/// Size figures of an emitted program, reported as `key=value` lines.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProgramStats {
    pub rules: usize,
    pub atoms: usize,
    pub max_arity: usize,
    pub variables: usize,
    pub goal_atoms: usize,
}

impl ProgramStats {
    pub fn of(p: &DatalogProgram) -> ProgramStats {
        ProgramStats {
            rules: p.rules.len(),
            atoms: p.atom_count(),
            max_arity: p.max_arity(),
            variables: p.variable_count(),
            goal_atoms: p
                .rules
                .iter()
                .filter(|r| r.head.predicate == p.goal)
                .map(|r| r.body.len())
                .max()
                .unwrap_or(0),
        }
    }

    pub fn to_key_value(&self) -> String {
        format!(
            "rules={}\natoms={}\nmax_arity={}\nvariables={}\ngoal_atoms={}\n",
            self.rules, self.atoms, self.max_arity, self.variables, self.goal_atoms
        )
    }
}

/// Result of the full pipeline from arbitrary tgds.
#[derive(Debug, Clone)]
pub struct Rewriting {
    pub program: DatalogProgram,
    pub problem: UniformizedProblem,
    pub normalization: NormalizationReport,
    pub normal_sigma: Vec<Tgd>,
    pub stats: ProgramStats,
}

/// Normalize, uniformize and build. Output queries yield a goal relation of
/// the output arity whose tuples are the certain answers.
pub fn rewrite(sigma: &[Tgd], q: &Query, params: &RewriteParams) -> Result<Rewriting, RewriteError> {
    let (normal_sigma, normalization) = to_normal_form(sigma);
    let problem = uniformize(&normal_sigma, q)?;
    let program = build_program(&problem, params)?;
    debug_assert!(program.is_nonrecursive());
    let stats = ProgramStats::of(&program);
    Ok(Rewriting {
        program,
        problem,
        normalization,
        normal_sigma,
        stats,
    })
}

/// Same as [`rewrite`]; named for the output-query use.
pub fn rewrite_certain_answers(sigma: &[Tgd], q: &Query, params: &RewriteParams) -> Result<Rewriting, RewriteError> {
    rewrite(sigma, q, params)
}

/// Arity of `Zero`-bounded numbers in the program (for callers building
/// the numerical extension).
pub fn numeric_bound(p: &DatalogProgram, n: u32) -> u32 {
    p.numeric_bound.unwrap_or(n).max(n)
}

#[cfg(test)]
mod tests;
