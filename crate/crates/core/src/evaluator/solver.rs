//! Finite-domain constraint solver used to evaluate rule bodies: bitset
//! domains with a trail, a propagation queue and iterative depth-first
//! search.

use std::rc::Rc;
use std::sync::Arc;
use std::time::Instant;

use smallvec::SmallVec;

use super::builder::Env;
use super::universe::bits;
use crate::model::Symbol;

pub(crate) type Var = u32;
type Dom = SmallVec<[u64; 2]>;

/// Why a search stopped early.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Stop {
    Timeout,
    Overflow,
}

pub(crate) enum Flow {
    Stop,
    Continue,
}

/// Materialized relation over value ids, stored row-major.
#[derive(Debug, Clone, Default)]
pub(crate) struct Relation {
    pub arity: usize,
    pub data: Vec<u32>,
}

impl Relation {
    pub fn new(arity: usize) -> Relation {
        Relation { arity, data: Vec::new() }
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u32]> {
        self.data.chunks(self.arity.max(1))
    }
}

/// Where a head position of a rule alternative gets its value.
#[derive(Debug, Clone)]
pub(crate) enum Slot {
    Fixed(u32),
    Piece { piece: usize, idx: usize },
}

/// Independent part of an alternative: either a product of domains or an
/// explicit tuple list over the piece's variables.
#[derive(Debug, Clone)]
pub(crate) enum Piece {
    Boxed(Vec<Vec<u64>>),
    Tuples { width: usize, data: Vec<u32> },
}

/// One rule of a predicate that is not materialized, specialized to the
/// constant arguments of an atom.
#[derive(Debug, Clone)]
pub(crate) struct Alt {
    pub rule: usize,
    pub slots: Vec<Slot>,
    pub pieces: Vec<Piece>,
    /// Head positions of each piece, with the piece variable index.
    pub positions: Vec<Vec<(usize, usize)>>,
    /// Pieces over-approximate the rule; ground tuples need a recheck.
    pub loose: bool,
}

#[derive(Debug)]
pub(crate) struct ChoiceAlts {
    pub pred: Symbol,
    pub alts: Vec<Alt>,
}

pub(crate) enum Con {
    Table { rel: Arc<Relation>, args: Vec<Var> },
    Lt(Var, Var),
    Succ(Var, Var),
    Neq(Var, Var),
    /// `a1,b1,…,ak,bk,u1,u2`: if every `aj = bj` then `u1 = u2`.
    Implies(Vec<Var>),
    IfEq(Var, Var, Var),
    Not(Var, Var),
    Or(Var, Var, Var),
    Choice { args: Vec<Var>, alts: Arc<ChoiceAlts> },
}

impl Con {
    fn scope(&self) -> Vec<Var> {
        match self {
            Con::Lt(a, b) | Con::Succ(a, b) | Con::Neq(a, b) | Con::Not(a, b) => vec![*a, *b],
            Con::IfEq(a, b, c) | Con::Or(a, b, c) => vec![*a, *b, *c],
            Con::Table { args, .. } | Con::Choice { args, .. } | Con::Implies(args) => args.clone(),
        }
    }
}

struct Mark {
    trail: usize,
    saved: usize,
    epoch: u64,
}

pub(crate) struct Solver<'e> {
    pub env: &'e Env,
    pub words: usize,
    dom: Vec<u64>,
    pub names: Vec<Option<Symbol>>,
    cons: Rc<Vec<Con>>,
    watch: Vec<Vec<u32>>,
    stamp: Vec<u64>,
    epoch: u64,
    next_epoch: u64,
    trail: Vec<(Var, usize)>,
    saved: Vec<u64>,
    marks: Vec<Mark>,
    queue: Vec<u32>,
    queued: Vec<bool>,
    pub nodes: u64,
    pub deadline: Option<Instant>,
    pub failed: bool,
    /// Failure counts per constraint, used for variable weighting.
    pub weight: Vec<u32>,
}

impl<'e> Solver<'e> {
    pub fn new(env: &'e Env) -> Solver<'e> {
        Solver {
            env,
            words: env.universe.words(),
            dom: Vec::new(),
            names: Vec::new(),
            cons: Rc::new(Vec::new()),
            watch: Vec::new(),
            stamp: Vec::new(),
            epoch: 0,
            next_epoch: 0,
            trail: Vec::new(),
            saved: Vec::new(),
            marks: Vec::new(),
            queue: Vec::new(),
            queued: Vec::new(),
            nodes: 0,
            deadline: env.deadline,
            failed: false,
            weight: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.names.len()
    }

    pub fn new_var(&mut self, name: Option<Symbol>, init: &[u64]) -> Var {
        let v = self.names.len() as Var;
        self.names.push(name);
        self.dom.extend_from_slice(init);
        self.watch.push(Vec::new());
        self.stamp.push(u64::MAX);
        if bits::is_empty(init) {
            self.failed = true;
        }
        v
    }

    pub fn add(&mut self, con: Con) {
        let id = self.cons.len() as u32;
        for v in con.scope() {
            if !self.watch[v as usize].contains(&id) {
                self.watch[v as usize].push(id);
            }
        }
        Rc::get_mut(&mut self.cons).expect("constraints are added before search").push(con);
        self.queued.push(true);
        self.queue.push(id);
        self.weight.push(1);
    }

    pub fn constraints(&self) -> &[Con] {
        &self.cons
    }

    #[inline]
    pub fn dom(&self, v: Var) -> &[u64] {
        let s = v as usize * self.words;
        &self.dom[s..s + self.words]
    }

    #[inline]
    fn dom_copy(&self, v: Var) -> Dom {
        Dom::from_slice(self.dom(v))
    }

    #[inline]
    pub fn value(&self, v: Var) -> Option<u32> {
        bits::single(self.dom(v))
    }

    #[inline]
    pub fn size(&self, v: Var) -> u32 {
        bits::count(self.dom(v))
    }

    /// Replace the domain of `v` with `new` (a subset); false on wipeout.
    fn set(&mut self, v: Var, new: &[u64]) -> bool {
        let s = v as usize * self.words;
        if self.dom[s..s + self.words] == *new {
            return true;
        }
        if bits::is_empty(new) {
            return false;
        }
        if self.stamp[v as usize] != self.epoch {
            self.stamp[v as usize] = self.epoch;
            self.trail.push((v, self.saved.len()));
            self.saved.extend_from_slice(&self.dom[s..s + self.words]);
        }
        self.dom[s..s + self.words].copy_from_slice(new);
        for &c in &self.watch[v as usize] {
            if !self.queued[c as usize] {
                self.queued[c as usize] = true;
                self.queue.push(c);
            }
        }
        true
    }

    pub fn restrict(&mut self, v: Var, mask: &[u64]) -> bool {
        let mut d = self.dom_copy(v);
        bits::and_assign(&mut d, mask);
        self.set(v, &d)
    }

    pub fn assign(&mut self, v: Var, x: u32) -> bool {
        if !bits::has(self.dom(v), x) {
            return false;
        }
        let d = bits::singleton(self.words, x);
        self.set(v, &d)
    }

    pub fn remove(&mut self, v: Var, x: u32) -> bool {
        if !bits::has(self.dom(v), x) {
            return true;
        }
        let mut d = self.dom_copy(v);
        bits::clear(&mut d, x);
        self.set(v, &d)
    }

    pub fn push_level(&mut self) {
        self.marks.push(Mark {
            trail: self.trail.len(),
            saved: self.saved.len(),
            epoch: self.epoch,
        });
        self.next_epoch += 1;
        self.epoch = self.next_epoch;
    }

    pub fn pop_level(&mut self) {
        let m = self.marks.pop().expect("balanced levels");
        while self.trail.len() > m.trail {
            let (v, off) = self.trail.pop().unwrap();
            let s = v as usize * self.words;
            self.dom[s..s + self.words].copy_from_slice(&self.saved[off..off + self.words]);
        }
        self.saved.truncate(m.saved);
        self.epoch = m.epoch;
    }

    pub fn level(&self) -> usize {
        self.marks.len()
    }

    fn pop_to(&mut self, level: usize) {
        while self.marks.len() > level {
            self.pop_level();
        }
    }

    pub fn timed_out(&self) -> bool {
        self.env.aborted.get() || self.deadline.is_some_and(|d| Instant::now() >= d)
    }

    /// Run propagators to a fixpoint; false if some domain empties.
    pub fn propagate(&mut self) -> bool {
        if self.failed {
            return false;
        }
        let cons = Rc::clone(&self.cons);
        while let Some(c) = self.queue.pop() {
            self.queued[c as usize] = false;
            if !self.run(&cons[c as usize]) {
                self.weight[c as usize] += 1;
                for q in self.queue.drain(..) {
                    self.queued[q as usize] = false;
                }
                return false;
            }
        }
        true
    }

    fn run(&mut self, con: &Con) -> bool {
        match con {
            Con::Lt(x, y) => {
                let (Some(lo), Some(hi)) = (bits::min(self.dom(*x)), bits::max(self.dom(*y))) else {
                    return false;
                };
                if hi == 0 {
                    return false;
                }
                let mut dy = self.dom_copy(*y);
                bits::keep_from(&mut dy, lo + 1);
                let mut dx = self.dom_copy(*x);
                bits::keep_upto(&mut dx, hi - 1);
                self.set(*y, &dy) && self.set(*x, &dx)
            }
            Con::Succ(x, y) => {
                let bound = self.env.universe.bound;
                let mut ny = Dom::from_elem(0, self.words);
                for v in bits::iter(self.dom(*x)) {
                    if v < bound {
                        bits::set(&mut ny, v + 1);
                    }
                }
                if !self.restrict(*y, &ny) {
                    return false;
                }
                let mut nx = Dom::from_elem(0, self.words);
                for v in bits::iter(self.dom(*y)) {
                    if v >= 1 && v <= bound {
                        bits::set(&mut nx, v - 1);
                    }
                }
                self.restrict(*x, &nx)
            }
            Con::Neq(x, y) => {
                if let Some(v) = self.value(*x) {
                    if !self.remove(*y, v) {
                        return false;
                    }
                }
                if let Some(v) = self.value(*y) {
                    if !self.remove(*x, v) {
                        return false;
                    }
                }
                true
            }
            Con::Implies(args) => self.run_implies(args),
            Con::IfEq(x, y, b) => self.run_if_eq(*x, *y, *b),
            Con::Not(x, y) => {
                let mut ny = Dom::from_elem(0, self.words);
                for v in bits::iter(self.dom(*x)) {
                    if v <= 1 {
                        bits::set(&mut ny, 1 - v);
                    }
                }
                if !self.restrict(*y, &ny) {
                    return false;
                }
                let mut nx = Dom::from_elem(0, self.words);
                for v in bits::iter(self.dom(*y)) {
                    if v <= 1 {
                        bits::set(&mut nx, 1 - v);
                    }
                }
                self.restrict(*x, &nx)
            }
            Con::Or(x, y, z) => {
                let (dx, dy, dz) = (self.dom_copy(*x), self.dom_copy(*y), self.dom_copy(*z));
                let (mut sx, mut sy, mut sz) = (
                    Dom::from_elem(0, self.words),
                    Dom::from_elem(0, self.words),
                    Dom::from_elem(0, self.words),
                );
                for a in 0..2u32 {
                    for b in 0..2u32 {
                        let c = a | b;
                        if bits::has(&dx, a) && bits::has(&dy, b) && bits::has(&dz, c) {
                            bits::set(&mut sx, a);
                            bits::set(&mut sy, b);
                            bits::set(&mut sz, c);
                        }
                    }
                }
                self.restrict(*x, &sx) && self.restrict(*y, &sy) && self.restrict(*z, &sz)
            }
            Con::Table { rel, args } => self.run_table(rel, args),
            Con::Choice { args, alts } => self.run_choice(args, alts),
        }
    }

    fn run_implies(&mut self, args: &[Var]) -> bool {
        let n = args.len();
        let (u1, u2) = (args[n - 2], args[n - 1]);
        let mut unknown = None;
        let mut n_unknown = 0;
        for (j, pair) in args[..n - 2].chunks(2).enumerate() {
            let (da, db) = (self.dom(pair[0]), self.dom(pair[1]));
            if bits::disjoint(da, db) {
                return true;
            }
            match (bits::single(da), bits::single(db)) {
                (Some(x), Some(y)) if x == y => {}
                _ => {
                    n_unknown += 1;
                    unknown = Some(j);
                }
            }
        }
        match n_unknown {
            0 => {
                let d1 = self.dom_copy(u1);
                self.restrict(u2, &d1) && {
                    let d2 = self.dom_copy(u2);
                    self.restrict(u1, &d2)
                }
            }
            1 if bits::disjoint(self.dom(u1), self.dom(u2)) => {
                let j = unknown.unwrap();
                let (a, b) = (args[2 * j], args[2 * j + 1]);
                if let Some(x) = self.value(a) {
                    self.remove(b, x)
                } else if let Some(y) = self.value(b) {
                    self.remove(a, y)
                } else {
                    true
                }
            }
            _ => true,
        }
    }

    fn run_if_eq(&mut self, x: Var, y: Var, b: Var) -> bool {
        if bits::disjoint(self.dom(x), self.dom(y)) {
            return self.assign(b, 0);
        }
        if let (Some(p), Some(q)) = (self.value(x), self.value(y)) {
            if p == q && !self.assign(b, 1) {
                return false;
            }
        }
        match self.value(b) {
            Some(1) => {
                let dx = self.dom_copy(x);
                self.restrict(y, &dx) && {
                    let dy = self.dom_copy(y);
                    self.restrict(x, &dy)
                }
            }
            Some(0) => {
                if let Some(p) = self.value(x) {
                    if !self.remove(y, p) {
                        return false;
                    }
                }
                if let Some(q) = self.value(y) {
                    if !self.remove(x, q) {
                        return false;
                    }
                }
                true
            }
            _ => true,
        }
    }

    fn run_table(&mut self, rel: &Relation, args: &[Var]) -> bool {
        let w = self.words;
        let mut acc: SmallVec<[u64; 16]> = SmallVec::from_elem(0, w * args.len());
        let mut any = false;
        'rows: for row in rel.rows() {
            for (p, &v) in args.iter().enumerate() {
                if !bits::has(self.dom(v), row[p]) {
                    continue 'rows;
                }
            }
            any = true;
            for (p, &x) in row.iter().enumerate() {
                bits::set(&mut acc[p * w..(p + 1) * w], x);
            }
        }
        if !any {
            return false;
        }
        for (p, &v) in args.iter().enumerate() {
            if !self.restrict(v, &acc[p * w..(p + 1) * w]) {
                return false;
            }
        }
        true
    }

    fn run_choice(&mut self, args: &[Var], choice: &ChoiceAlts) -> bool {
        let w = self.words;
        let n = args.len();
        let mut acc: SmallVec<[u64; 16]> = SmallVec::from_elem(0, w * n);
        let mut exact_alive = false;
        let mut loose_alive: SmallVec<[usize; 4]> = SmallVec::new();
        let mut sup: Vec<Vec<Dom>> = Vec::new();
        'alts: for (ai, alt) in choice.alts.iter().enumerate() {
            for (p, slot) in alt.slots.iter().enumerate() {
                if let Slot::Fixed(x) = slot {
                    if !bits::has(self.dom(args[p]), *x) {
                        continue 'alts;
                    }
                }
            }
            sup.clear();
            for (pi, piece) in alt.pieces.iter().enumerate() {
                let pos = &alt.positions[pi];
                match piece {
                    Piece::Boxed(doms) => {
                        let mut s: Vec<Dom> = doms.iter().map(|d| Dom::from_slice(d)).collect();
                        for &(p, idx) in pos {
                            bits::and_assign(&mut s[idx], self.dom(args[p]));
                        }
                        if s.iter().any(|d| bits::is_empty(d)) {
                            continue 'alts;
                        }
                        sup.push(s);
                    }
                    Piece::Tuples { width, data } => {
                        let mut s: Vec<Dom> = vec![Dom::from_elem(0, w); *width];
                        let mut any = false;
                        'rows: for row in data.chunks(*width) {
                            for &(p, idx) in pos {
                                if !bits::has(self.dom(args[p]), row[idx]) {
                                    continue 'rows;
                                }
                            }
                            any = true;
                            for (idx, &x) in row.iter().enumerate() {
                                bits::set(&mut s[idx], x);
                            }
                        }
                        if !any {
                            continue 'alts;
                        }
                        sup.push(s);
                    }
                }
            }
            for (p, slot) in alt.slots.iter().enumerate() {
                let dst = &mut acc[p * w..(p + 1) * w];
                match slot {
                    Slot::Fixed(x) => bits::set(dst, *x),
                    Slot::Piece { piece, idx } => bits::or_assign(dst, &sup[*piece][*idx]),
                }
            }
            if alt.loose {
                loose_alive.push(ai);
            } else {
                exact_alive = true;
            }
        }
        if !exact_alive && loose_alive.is_empty() {
            return false;
        }
        for (p, &v) in args.iter().enumerate() {
            if !self.restrict(v, &acc[p * w..(p + 1) * w]) {
                return false;
            }
        }
        if !exact_alive && args.iter().all(|&v| self.value(v).is_some()) {
            let tuple: Vec<u32> = args.iter().map(|&v| self.value(v).unwrap()).collect();
            return loose_alive
                .iter()
                .any(|&ai| self.env.alt_holds(&choice.pred, choice.alts[ai].rule, &tuple));
        }
        true
    }

    /// Depth-first search from the current (propagated) state. `select`
    /// returns the next variable with its values in trial order, or `None`
    /// at a leaf, where `on_leaf` decides whether to stop. The state is
    /// restored before returning.
    pub fn search(
        &mut self,
        select: &mut dyn FnMut(&Solver) -> Option<(Var, Vec<u32>)>,
        on_leaf: &mut dyn FnMut(&mut Solver) -> Result<Flow, Stop>,
    ) -> Result<bool, Stop> {
        struct Frame {
            var: Var,
            values: Vec<u32>,
            next: usize,
            pushed: bool,
        }
        let base = self.level();
        let mut stack: Vec<Frame> = Vec::new();
        let result = 'outer: loop {
            self.nodes += 1;
            if self.nodes % 128 == 0 && self.timed_out() {
                break Err(Stop::Timeout);
            }
            match select(self) {
                None => match on_leaf(self) {
                    Ok(Flow::Stop) => break Ok(true),
                    Ok(Flow::Continue) => {}
                    Err(e) => break Err(e),
                },
                Some((var, values)) => stack.push(Frame {
                    var,
                    values,
                    next: 0,
                    pushed: false,
                }),
            }
            // Advance to the next untried value.
            loop {
                let Some(top) = stack.last_mut() else {
                    break 'outer Ok(false);
                };
                if top.pushed {
                    top.pushed = false;
                    self.pop_level();
                }
                let top = stack.last_mut().unwrap();
                if top.next >= top.values.len() {
                    stack.pop();
                    continue;
                }
                let (var, val) = (top.var, top.values[top.next]);
                top.next += 1;
                top.pushed = true;
                self.push_level();
                if self.assign(var, val) && self.propagate() {
                    break;
                }
            }
        };
        self.pop_to(base);
        result
    }

    /// Satisfiability from the current state; the first solution is passed
    /// to `capture`.
    pub fn solve(
        &mut self,
        select: &mut dyn FnMut(&Solver) -> Option<(Var, Vec<u32>)>,
        capture: &mut dyn FnMut(&Solver),
    ) -> Result<bool, Stop> {
        self.search(select, &mut |s| {
            capture(s);
            Ok(Flow::Stop)
        })
    }

    /// Values of every variable (all singletons at a leaf).
    pub fn snapshot(&self) -> Vec<Option<u32>> {
        (0..self.num_vars() as Var).map(|v| self.value(v)).collect()
    }
}

/// Smallest-domain unassigned variable among `vars` (ties: first listed).
pub(crate) fn min_domain(s: &Solver, vars: &[Var]) -> Option<Var> {
    let mut best: Option<(u32, Var)> = None;
    for &v in vars {
        let c = s.size(v);
        if c > 1 && best.is_none_or(|(bc, _)| c < bc) {
            best = Some((c, v));
            if c == 2 {
                break;
            }
        }
    }
    best.map(|(_, v)| v)
}

pub(crate) fn values_ascending(s: &Solver, v: Var) -> Vec<u32> {
    bits::iter(s.dom(v)).collect()
}

pub(crate) fn values_descending(s: &Solver, v: Var) -> Vec<u32> {
    let mut out: Vec<u32> = bits::iter(s.dom(v)).collect();
    out.reverse();
    out
}
