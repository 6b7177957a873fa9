//! Bit-vector variant: every number becomes `width` bits over {0,1}, so the
//! program needs no numeric domain beyond 0 and 1.

use std::collections::BTreeMap;

use super::reduce::{gate_rules, GateBuilder};
use super::{adom_rules, atom, var, Context, ProgramSkeleton, RewriteError, VarKind};
use crate::gadgets::{LT, NUM, ONE, ZERO};
use crate::model::{sym, Atom, Rule, Symbol, Term};

const MAX_WIDTH: u32 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BitVectorLayout {
    pub width: u32,
}

impl BitVectorLayout {
    /// Smallest width that represents every number in `0..=bound`.
    pub fn for_bound(bound: u32) -> Result<BitVectorLayout, RewriteError> {
        let width = (32 - bound.leading_zeros()).max(1);
        if width > MAX_WIDTH {
            return Err(RewriteError::WidthTooLarge { width, max: MAX_WIDTH });
        }
        Ok(BitVectorLayout { width })
    }

    /// Most significant bit first.
    pub fn bits(&self, n: u32) -> Vec<u32> {
        (0..self.width).rev().map(|b| (n >> b) & 1).collect()
    }

    fn bit_terms(&self, n: u32) -> Vec<Term> {
        self.bits(n).into_iter().map(Term::Num).collect()
    }
}

struct Expander<'a> {
    layout: BitVectorLayout,
    kinds: &'a BTreeMap<Symbol, VarKind>,
    new_kinds: BTreeMap<Symbol, VarKind>,
}

impl Expander<'_> {
    fn kind_of(&self, t: &Term) -> Option<VarKind> {
        t.as_var().map(|v| *self.kinds.get(v).unwrap_or(&VarKind::Num))
    }

    fn bit_vars(&mut self, base: &str) -> Vec<Term> {
        (1..=self.layout.width)
            .map(|b| {
                let name = sym(&format!("{base}_b{b}"));
                self.new_kinds.insert(name.clone(), VarKind::Bool);
                Term::Var(name)
            })
            .collect()
    }

    /// Components of a term read with the given kind.
    fn expand(&mut self, t: &Term, kind: VarKind) -> Vec<Term> {
        match (t, kind) {
            (Term::Var(v), _) => match self.kind_of(t).unwrap_or(kind) {
                VarKind::Bool => vec![t.clone()],
                VarKind::Num => self.bit_vars(v),
                VarKind::Val => {
                    let slot = sym(&format!("{v}_v"));
                    self.new_kinds.insert(slot.clone(), VarKind::Val);
                    let mut out = vec![Term::Var(slot)];
                    out.extend(self.bit_vars(v));
                    out
                }
            },
            (Term::Num(n), VarKind::Bool) => vec![Term::Num(*n)],
            (Term::Num(n), VarKind::Num) => self.layout.bit_terms(*n),
            (Term::Num(n), VarKind::Val) => {
                let mut out = vec![Term::Num(0)];
                out.extend(self.layout.bit_terms(*n));
                out
            }
            (Term::Const(_), _) => {
                let mut out = vec![t.clone()];
                out.extend(self.layout.bit_terms(0));
                out
            }
        }
    }

    /// Kind shared by the two sides of a comparison.
    fn pair_kind(&self, x: &Term, y: &Term) -> VarKind {
        self.kind_of(x).or_else(|| self.kind_of(y)).unwrap_or(
            if matches!(x, Term::Const(_)) || matches!(y, Term::Const(_)) {
                VarKind::Val
            } else {
                VarKind::Num
            },
        )
    }
}

/// BITVEC variant from a REDUCED skeleton.
pub fn to_bitvector(reduced: &ProgramSkeleton, ctx: &Context, layout: &BitVectorLayout) -> ProgramSkeleton {
    let names = &ctx.names;
    let mut ex = Expander {
        layout: *layout,
        kinds: &reduced.kinds,
        new_kinds: BTreeMap::new(),
    };
    let mut g = GateBuilder::new(ctx, "E");
    let numeric = sym(NUM);
    let lt = sym(LT);
    let zero = sym(ZERO);
    let rp_of: BTreeMap<Symbol, Symbol> = reduced
        .rows
        .iter()
        .map(|r| (sym(&format!("RP_{}", r.i)), r.f.clone()))
        .collect();

    let convert = |atoms: &[Atom], ex: &mut Expander, g: &mut GateBuilder| -> Vec<Atom> {
        let mut out = Vec::new();
        for a in atoms {
            let p = &a.predicate;
            if *p == names.tp {
                let mut args = ex.expand(&a.args[0], VarKind::Num);
                let mut zero_bits = Vec::new();
                for x in &a.args[1..] {
                    let comps = ex.expand(x, VarKind::Val);
                    args.push(comps[0].clone());
                    zero_bits.extend(comps[1..].iter().cloned());
                }
                out.push(atom(&names.tp, args));
                // Database rows carry constants, whose null bits are 0.
                let f = a.args[0].as_var().and_then(|v| rp_of.get(v)).map(|f| Term::Var(f.clone()));
                if let Some(f) = f {
                    for b in zero_bits {
                        let nb = g.not(&b);
                        let o = g.or(&f, &nb);
                        g.atoms.push(atom(g.true_b, vec![o]));
                    }
                }
            } else if *p == numeric {
                out.push(atom(&names.bv_num, ex.expand(&a.args[0], VarKind::Num)));
            } else if *p == lt {
                let mut args = ex.expand(&a.args[0], VarKind::Num);
                args.extend(ex.expand(&a.args[1], VarKind::Num));
                out.push(atom(&names.bv_lt, args));
            } else if *p == names.if_eq {
                let kind = ex.pair_kind(&a.args[0], &a.args[1]);
                let xs = ex.expand(&a.args[0], kind);
                let ys = ex.expand(&a.args[1], kind);
                let b = a.args[2].clone();
                if xs.len() == 1 {
                    g.atoms.push(atom(&names.if_eq, vec![xs[0].clone(), ys[0].clone(), b]));
                } else {
                    // b = AND of per-component equalities.
                    let negs: Vec<Term> = xs
                        .iter()
                        .zip(&ys)
                        .map(|(x, y)| {
                            let e = g.eq(x, y);
                            g.not(&e)
                        })
                        .collect();
                    let mut acc = negs[0].clone();
                    for n in &negs[1..] {
                        acc = g.or(&acc, n);
                    }
                    g.atoms.push(atom(&names.not_b, vec![acc, b]));
                }
            } else if *p == names.adom {
                let comps = ex.expand(&a.args[0], VarKind::Val);
                out.push(atom(&names.adom, vec![comps[0].clone()]));
                for b in &comps[1..] {
                    out.push(atom(&zero, vec![b.clone()]));
                }
            } else {
                out.push(a.clone());
            }
            out.append(&mut g.atoms);
        }
        out
    };

    let r_tuples = convert(&reduced.r_tuples, &mut ex, &mut g);
    let r_chase = convert(&reduced.r_chase, &mut ex, &mut g);
    let snap = g.snapshot();
    let r_query: Vec<Vec<Atom>> = reduced
        .r_query
        .iter()
        .map(|q| {
            g.restore(&snap);
            convert(q, &mut ex, &mut g)
        })
        .collect();
    let heads: Vec<Atom> = reduced
        .heads
        .iter()
        .map(|h| {
            let args = h.args.iter().map(|o| ex.expand(o, VarKind::Val)[0].clone()).collect();
            atom(&h.predicate, args)
        })
        .collect();
    let mut kinds = ex.new_kinds;
    kinds.extend(g.kinds);

    let mut p_tuples: Vec<Rule> = ctx.u.padding_rules.clone();
    p_tuples.extend(adom_rules(ctx));
    let x = var("X");
    p_tuples.push(Rule::new(atom(&names.dnum, vec![x.clone()]), vec![atom(&names.adom, vec![x.clone()])]));
    p_tuples.push(Rule::fact(atom(&names.dnum, vec![Term::Num(0)])));
    p_tuples.push(Rule::fact(atom(&names.dnum, vec![Term::Num(1)])));
    p_tuples.push(Rule::new(atom(&names.dval, vec![x.clone()]), vec![atom(&names.adom, vec![x.clone()])]));
    p_tuples.push(Rule::fact(atom(&names.dval, vec![Term::Num(0)])));
    let xs: Vec<Term> = (1..=ctx.a).map(|p| var(format!("X{p}"))).collect();
    for rel in &ctx.u.relations {
        let mut head = layout.bit_terms(rel.number as u32);
        head.extend(xs.iter().cloned());
        p_tuples.push(Rule::new(atom(&names.tp, head), vec![atom(&rel.padded, xs.clone())]));
    }
    let mut head = layout.bit_terms(0);
    head.extend(xs.iter().cloned());
    p_tuples.push(Rule::new(
        atom(&names.tp, head),
        xs.iter().map(|x| atom(&names.dval, vec![x.clone()])).collect(),
    ));
    for n in 1..=ctx.bound {
        p_tuples.push(Rule::fact(atom(&names.bv_num, layout.bit_terms(n))));
    }
    p_tuples.push(Rule::new(atom(&names.bit, vec![x.clone()]), vec![atom(&zero, vec![x.clone()])]));
    p_tuples.push(Rule::new(atom(&names.bit, vec![x.clone()]), vec![atom(&sym(ONE), vec![x])]));
    p_tuples.extend(bv_lt_rules(ctx, layout));

    ProgramSkeleton {
        r_tuples,
        r_chase,
        r_query,
        heads,
        p_tuples,
        p_chase: gate_rules(ctx),
        p_query: Vec::new(),
        kinds,
        rows: reduced.rows.clone(),
        numeric_bound: 1,
    }
}

/// `BvLt(x, y)`: at the first differing bit from the top, x has 0 and y 1.
fn bv_lt_rules(ctx: &Context, layout: &BitVectorLayout) -> Vec<Rule> {
    let w = layout.width as usize;
    let mut rules = Vec::new();
    for p in 0..w {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        let mut body = Vec::new();
        for q in 0..w {
            if q < p {
                let z = var(format!("Z{q}"));
                xs.push(z.clone());
                ys.push(z.clone());
                body.push(atom(&ctx.names.bit, vec![z]));
            } else if q == p {
                xs.push(Term::Num(0));
                ys.push(Term::Num(1));
            } else {
                let (a, b) = (var(format!("A{q}")), var(format!("B{q}")));
                body.push(atom(&ctx.names.bit, vec![a.clone()]));
                body.push(atom(&ctx.names.bit, vec![b.clone()]));
                xs.push(a);
                ys.push(b);
            }
        }
        xs.extend(ys);
        rules.push(Rule::new(atom(&ctx.names.bv_lt, xs), body));
    }
    rules
}
