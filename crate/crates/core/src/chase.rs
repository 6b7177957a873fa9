//! Reference oracle: the oblivious chase with derivation levels, bounded
//! entailment with minimal witness sequences, and certain answers.
//!
//! Nulls created while chasing are numbered in creation order. Witness
//! sequences renumber their nulls by the witness step that creates them, so
//! under normal-form tgds null `j` is always introduced by step `j`. Tgds
//! with several head atoms or existentials are chased as a whole: one
//! trigger adds every head atom, and each atom counts as one step.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use crate::model::{Atom, ConjunctiveQuery, Database, Query, Symbol, Term, Tgd};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ChaseValue {
    Const(Symbol),
    Null(u32),
}

impl fmt::Display for ChaseValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChaseValue::Const(c) => f.write_str(c),
            ChaseValue::Null(n) => write!(f, "_{n}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ChaseAtom {
    pub predicate: Symbol,
    pub args: Vec<ChaseValue>,
}

impl ChaseAtom {
    pub fn from_fact(fact: &Atom) -> Option<ChaseAtom> {
        let args = fact
            .args
            .iter()
            .map(|t| match t {
                Term::Const(c) => Some(ChaseValue::Const(c.clone())),
                _ => None,
            })
            .collect::<Option<Vec<_>>>()?;
        Some(ChaseAtom {
            predicate: fact.predicate.clone(),
            args,
        })
    }

    pub fn has_null(&self) -> bool {
        self.args.iter().any(|a| matches!(a, ChaseValue::Null(_)))
    }
}

impl fmt::Display for ChaseAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.predicate)?;
        f.write_str("(")?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str(")")
    }
}

pub type Homomorphism = BTreeMap<Symbol, ChaseValue>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Provenance {
    Database,
    /// `rule` is a 0-based index into the tgd list; `parents` are 0-based
    /// positions of earlier steps, one per body atom.
    Derived {
        rule: usize,
        parents: Vec<usize>,
        homomorphism: Homomorphism,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChaseStep {
    pub atom: ChaseAtom,
    pub provenance: Provenance,
}

/// An ordered list of atoms, each from the database or derived by one tgd
/// application from earlier steps.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ChaseSequence {
    pub steps: Vec<ChaseStep>,
}

impl ChaseSequence {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn atoms(&self) -> impl Iterator<Item = &ChaseAtom> {
        self.steps.iter().map(|s| &s.atom)
    }

    /// One line per step: `index<TAB>atom<TAB>rule<TAB>parents`, all 1-based.
    pub fn to_trace(&self) -> String {
        let mut out = String::new();
        for (i, s) in self.steps.iter().enumerate() {
            match &s.provenance {
                Provenance::Database => out.push_str(&format!("{}\t{}\tdb\t-\n", i + 1, s.atom)),
                Provenance::Derived { rule, parents, .. } => {
                    let ps: Vec<String> = parents.iter().map(|p| (p + 1).to_string()).collect();
                    out.push_str(&format!("{}\t{}\t{}\t{}\n", i + 1, s.atom, rule + 1, ps.join(",")));
                }
            }
        }
        out
    }

    /// Re-derives every step and reports the first inconsistency.
    pub fn replay(&self, db: &Database, sigma: &[Tgd]) -> Result<(), String> {
        let mut state: Vec<ChaseAtom> = Vec::new();
        for (i, step) in self.steps.iter().enumerate() {
            match &step.provenance {
                Provenance::Database => {
                    let fact = Atom::new(
                        step.atom.predicate.clone(),
                        step.atom
                            .args
                            .iter()
                            .map(|v| match v {
                                ChaseValue::Const(c) => Ok(Term::Const(c.clone())),
                                ChaseValue::Null(_) => Err(format!("step {}: database atom with null", i + 1)),
                            })
                            .collect::<Result<_, _>>()?,
                    );
                    if !db.contains(&fact) {
                        return Err(format!("step {}: {} is not a database fact", i + 1, step.atom));
                    }
                }
                Provenance::Derived {
                    rule,
                    parents,
                    homomorphism,
                } => {
                    let tgd = sigma.get(*rule).ok_or_else(|| format!("step {}: no rule {}", i + 1, rule + 1))?;
                    if parents.len() != tgd.body().len() || parents.iter().any(|&p| p >= i) {
                        return Err(format!("step {}: bad parent list", i + 1));
                    }
                    let applicable = applicable_steps(&state, std::slice::from_ref(tgd));
                    if !applicable.iter().any(|(_, h)| h == homomorphism) {
                        return Err(format!("step {}: homomorphism not applicable", i + 1));
                    }
                    for (b, &p) in tgd.body().iter().zip(parents) {
                        if apply_hom(b, homomorphism, &[]).as_ref() != Some(&state[p]) {
                            return Err(format!("step {}: parent {} does not match body atom {b}", i + 1, p + 1));
                        }
                    }
                    let fits = if tgd.is_normal() {
                        let fresh: Vec<_> = tgd.existentials().iter().map(|z| (z.clone(), ChaseValue::Null(i as u32 + 1))).collect();
                        apply_hom(&tgd.head()[0], homomorphism, &fresh).as_ref() == Some(&step.atom)
                    } else {
                        tgd.head().iter().any(|h| head_fits(h, *rule, homomorphism, tgd.existentials(), &step.atom, &self.steps[..i]))
                    };
                    if !fits {
                        return Err(format!("step {}: atom does not match the rule head", i + 1));
                    }
                }
            }
            state.push(step.atom.clone());
        }
        Ok(())
    }
}

/// Does `atom` instantiate `head` under `h`, with existentials sent to
/// nulls that earlier steps mention only in sibling atoms of the same
/// trigger?
fn head_fits(head: &Atom, rule: usize, h: &Homomorphism, existentials: &[Symbol], atom: &ChaseAtom, earlier: &[ChaseStep]) -> bool {
    let sibling = |s: &ChaseStep| match &s.provenance {
        Provenance::Derived { rule: r, homomorphism, .. } => *r == rule && homomorphism == h,
        Provenance::Database => false,
    };
    if head.predicate != atom.predicate || head.arity() != atom.args.len() {
        return false;
    }
    let mut ext: HashMap<&Symbol, &ChaseValue> = HashMap::new();
    head.args.iter().zip(&atom.args).all(|(t, val)| match t {
        Term::Var(v) if existentials.contains(v) => {
            let new = matches!(val, ChaseValue::Null(_)) && earlier.iter().all(|s| sibling(s) || !s.atom.args.contains(val));
            new && *ext.entry(v).or_insert(val) == val
        }
        Term::Var(v) => h.get(v) == Some(val),
        Term::Const(c) => *val == ChaseValue::Const(c.clone()),
        Term::Num(_) => false,
    })
}

fn apply_hom(atom: &Atom, h: &Homomorphism, fresh: &[(Symbol, ChaseValue)]) -> Option<ChaseAtom> {
    let args = atom
        .args
        .iter()
        .map(|t| match t {
            Term::Var(v) => match fresh.iter().find(|(z, _)| z == v) {
                Some((_, val)) => Some(val.clone()),
                None => h.get(v).cloned(),
            },
            Term::Const(c) => Some(ChaseValue::Const(c.clone())),
            Term::Num(_) => None,
        })
        .collect::<Option<Vec<_>>>()?;
    Some(ChaseAtom {
        predicate: atom.predicate.clone(),
        args,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum PTerm {
    Var(usize),
    Const(usize),
}

/// Atom patterns with variables numbered `0..vars.len()`.
struct Pattern {
    atoms: Vec<(Symbol, Vec<PTerm>)>,
    vars: Vec<Symbol>,
    consts: Vec<ChaseValue>,
}

impl Pattern {
    fn compile(atoms: &[Atom]) -> Pattern {
        let mut vars: Vec<Symbol> = Vec::new();
        let mut consts: Vec<ChaseValue> = Vec::new();
        let compiled = atoms
            .iter()
            .map(|a| {
                let args = a
                    .args
                    .iter()
                    .map(|t| match t {
                        Term::Var(v) => PTerm::Var(match vars.iter().position(|x| x == v) {
                            Some(i) => i,
                            None => {
                                vars.push(v.clone());
                                vars.len() - 1
                            }
                        }),
                        Term::Const(c) => {
                            consts.push(ChaseValue::Const(c.clone()));
                            PTerm::Const(consts.len() - 1)
                        }
                        Term::Num(n) => {
                            // Numbers never occur in chase atoms; match nothing.
                            consts.push(ChaseValue::Null(u32::MAX - n));
                            PTerm::Const(consts.len() - 1)
                        }
                    })
                    .collect();
                (a.predicate.clone(), args)
            })
            .collect();
        Pattern {
            atoms: compiled,
            vars,
            consts,
        }
    }
}

/// Indexed atom store shared by trigger enumeration and query matching.
#[derive(Debug, Default, Clone)]
struct AtomStore {
    atoms: Vec<ChaseAtom>,
    by_pred: HashMap<Symbol, Vec<usize>>,
    by_value: HashMap<(Symbol, usize, ChaseValue), Vec<usize>>,
    lookup: HashMap<ChaseAtom, usize>,
}

impl AtomStore {
    fn push(&mut self, atom: ChaseAtom) -> usize {
        let idx = self.atoms.len();
        self.by_pred.entry(atom.predicate.clone()).or_default().push(idx);
        for (p, v) in atom.args.iter().enumerate() {
            self.by_value
                .entry((atom.predicate.clone(), p, v.clone()))
                .or_default()
                .push(idx);
        }
        self.lookup.insert(atom.clone(), idx);
        self.atoms.push(atom);
        idx
    }

    fn candidates(&self, pat: &Pattern, atom: usize, binding: &[Option<ChaseValue>]) -> &[usize] {
        let (pred, args) = &pat.atoms[atom];
        let mut best: &[usize] = self.by_pred.get(pred).map(Vec::as_slice).unwrap_or(&[]);
        for (p, t) in args.iter().enumerate() {
            let val = match t {
                PTerm::Var(v) => binding[*v].as_ref(),
                PTerm::Const(c) => Some(&pat.consts[*c]),
            };
            if let Some(val) = val {
                let list = self
                    .by_value
                    .get(&(pred.clone(), p, val.clone()))
                    .map(Vec::as_slice)
                    .unwrap_or(&[]);
                if list.len() < best.len() {
                    best = list;
                }
            }
        }
        best
    }

    /// Enumerate homomorphisms of `pat` into the store. `allowed(pos, idx)`
    /// restricts which atoms body position `pos` may map to. `emit` returns
    /// false to stop the search.
    fn homomorphisms(
        &self,
        pat: &Pattern,
        init: Vec<Option<ChaseValue>>,
        allowed: &dyn Fn(usize, usize) -> bool,
        emit: &mut dyn FnMut(&[Option<ChaseValue>], &[usize]) -> bool,
    ) {
        let mut binding = init;
        let mut image = vec![usize::MAX; pat.atoms.len()];
        let mut done = vec![false; pat.atoms.len()];
        self.search(pat, &mut binding, &mut image, &mut done, allowed, emit);
    }

    fn search(
        &self,
        pat: &Pattern,
        binding: &mut Vec<Option<ChaseValue>>,
        image: &mut Vec<usize>,
        done: &mut Vec<bool>,
        allowed: &dyn Fn(usize, usize) -> bool,
        emit: &mut dyn FnMut(&[Option<ChaseValue>], &[usize]) -> bool,
    ) -> bool {
        // Most constrained remaining atom first.
        let next = (0..pat.atoms.len())
            .filter(|&i| !done[i])
            .min_by_key(|&i| self.candidates(pat, i, binding).len());
        let Some(ai) = next else {
            return emit(binding, image);
        };
        let cands: Vec<usize> = self.candidates(pat, ai, binding).to_vec();
        done[ai] = true;
        let (_, args) = &pat.atoms[ai];
        for idx in cands {
            if !allowed(ai, idx) {
                continue;
            }
            let atom = &self.atoms[idx];
            if atom.args.len() != args.len() {
                continue;
            }
            let mut newly = Vec::new();
            let mut ok = true;
            for (t, val) in args.iter().zip(&atom.args) {
                match t {
                    PTerm::Const(c) => {
                        if &pat.consts[*c] != val {
                            ok = false;
                            break;
                        }
                    }
                    PTerm::Var(v) => match &binding[*v] {
                        Some(b) if b != val => {
                            ok = false;
                            break;
                        }
                        Some(_) => {}
                        None => {
                            binding[*v] = Some(val.clone());
                            newly.push(*v);
                        }
                    },
                }
            }
            if ok {
                image[ai] = idx;
                if !self.search(pat, binding, image, done, allowed, emit) {
                    for v in newly {
                        binding[v] = None;
                    }
                    done[ai] = false;
                    return false;
                }
            }
            for v in newly {
                binding[v] = None;
            }
        }
        done[ai] = false;
        true
    }
}

/// All body homomorphisms of every tgd into `state`, ordered by rule index
/// and then by the (positions of the) image atoms.
pub fn applicable_steps(state: &[ChaseAtom], sigma: &[Tgd]) -> Vec<(usize, Homomorphism)> {
    let mut store = AtomStore::default();
    for a in state {
        store.push(a.clone());
    }
    let mut out = Vec::new();
    for (ri, tgd) in sigma.iter().enumerate() {
        let pat = Pattern::compile(tgd.body());
        let mut found: Vec<(Vec<usize>, Homomorphism)> = Vec::new();
        store.homomorphisms(&pat, vec![None; pat.vars.len()], &|_, _| true, &mut |b, img| {
            let h = pat
                .vars
                .iter()
                .cloned()
                .zip(b.iter().map(|v| v.clone().expect("all body variables bound")))
                .collect();
            found.push((img.to_vec(), h));
            true
        });
        found.sort_by(|a, b| a.0.cmp(&b.0));
        found.dedup_by(|a, b| a.1 == b.1);
        out.extend(found.into_iter().map(|(_, h)| (ri, h)));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Derivation {
    pub rule: usize,
    pub parents: Vec<usize>,
    pub homomorphism: Homomorphism,
}

#[derive(Debug, Clone, Copy)]
pub struct ChaseConfig {
    /// Stop once this many atoms exist; the result is then marked truncated.
    pub atom_cap: usize,
}

impl Default for ChaseConfig {
    fn default() -> Self {
        ChaseConfig { atom_cap: 1_000_000 }
    }
}

/// The chase up to some derivation level, with every derivation found for
/// each atom.
#[derive(Debug, Clone)]
pub struct LeveledChase {
    store: AtomStore,
    levels: Vec<u32>,
    derivations: Vec<Vec<Derivation>>,
    /// Hit the atom cap before reaching the requested level.
    pub truncated: bool,
    /// No new atoms at the last computed level.
    pub saturated: bool,
}

impl LeveledChase {
    pub fn atoms(&self) -> &[ChaseAtom] {
        &self.store.atoms
    }

    pub fn level(&self, idx: usize) -> u32 {
        self.levels[idx]
    }

    pub fn level_of(&self, atom: &ChaseAtom) -> Option<u32> {
        self.store.lookup.get(atom).map(|&i| self.levels[i])
    }

    pub fn derivations(&self, idx: usize) -> &[Derivation] {
        &self.derivations[idx]
    }

    pub fn len(&self) -> usize {
        self.store.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.store.atoms.is_empty()
    }

    /// Atoms with level `<= level`.
    pub fn up_to(&self, level: u32) -> BTreeSet<ChaseAtom> {
        self.store
            .atoms
            .iter()
            .zip(&self.levels)
            .filter(|(_, &l)| l <= level)
            .map(|(a, _)| a.clone())
            .collect()
    }
}

/// Breadth-first oblivious chase up to `max_level`.
pub fn chase_to_level(db: &Database, sigma: &[Tgd], max_level: u32) -> LeveledChase {
    chase_with(db, sigma, max_level, ChaseConfig::default())
}

pub fn chase_with(db: &Database, sigma: &[Tgd], max_level: u32, config: ChaseConfig) -> LeveledChase {
    let mut chase = LeveledChase {
        store: AtomStore::default(),
        levels: Vec::new(),
        derivations: Vec::new(),
        truncated: false,
        saturated: false,
    };
    for fact in db.facts() {
        if let Some(a) = ChaseAtom::from_fact(fact) {
            chase.store.push(a);
            chase.levels.push(0);
            chase.derivations.push(Vec::new());
        }
    }
    let patterns: Vec<Pattern> = sigma.iter().map(|t| Pattern::compile(t.body())).collect();
    let mut next_null = 0u32;
    for level in 1..=max_level {
        let prev = level - 1;
        // Triggers whose newest body atom has level `prev`.
        let mut triggers: Vec<(usize, Vec<usize>, Vec<Option<ChaseValue>>)> = Vec::new();
        for (ri, pat) in patterns.iter().enumerate() {
            let levels = &chase.levels;
            let n_body = pat.atoms.len();
            for pivot in 0..n_body {
                let allowed = |pos: usize, idx: usize| {
                    let l = levels[idx];
                    if pos == pivot {
                        l == prev
                    } else if pos < pivot {
                        l < prev
                    } else {
                        l <= prev
                    }
                };
                chase
                    .store
                    .homomorphisms(pat, vec![None; pat.vars.len()], &allowed, &mut |b, img| {
                        triggers.push((ri, img.to_vec(), b.to_vec()));
                        true
                    });
            }
        }
        triggers.sort_by(|a, b| (a.0, &a.1).cmp(&(b.0, &b.1)));
        triggers.dedup_by(|a, b| a.0 == b.0 && a.1 == b.1);
        let mut added = false;
        for (ri, image, binding) in triggers {
            if chase.store.atoms.len() >= config.atom_cap {
                chase.truncated = true;
                return chase;
            }
            let tgd = &sigma[ri];
            let pat = &patterns[ri];
            let h: Homomorphism = pat
                .vars
                .iter()
                .cloned()
                .zip(binding.into_iter().map(|v| v.expect("bound")))
                .collect();
            let fresh: Vec<(Symbol, ChaseValue)> = tgd
                .existentials()
                .iter()
                .map(|z| {
                    next_null += 1;
                    (z.clone(), ChaseValue::Null(next_null))
                })
                .collect();
            for head in tgd.head() {
                let head = apply_hom(head, &h, &fresh).expect("safe tgd head");
                let derivation = Derivation {
                    rule: ri,
                    parents: image.clone(),
                    homomorphism: h.clone(),
                };
                match chase.store.lookup.get(&head) {
                    Some(&idx) => chase.derivations[idx].push(derivation),
                    None => {
                        chase.store.push(head);
                        chase.levels.push(level);
                        chase.derivations.push(vec![derivation]);
                        added = true;
                    }
                }
            }
        }
        if !added {
            chase.saturated = true;
            break;
        }
    }
    chase
}

/// A match of one query disjunct, and the shortest chase sequence that
/// contains its image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    pub disjunct: usize,
    /// Query variables mapped into the witness atoms (nulls renumbered).
    pub homomorphism: Homomorphism,
    pub sequence: ChaseSequence,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Entailment {
    Yes(Witness),
    /// No match within the step bound; `truncated` when the atom cap hit.
    Unknown { truncated: bool },
}

impl Entailment {
    pub fn is_yes(&self) -> bool {
        matches!(self, Entailment::Yes(_))
    }

    pub fn witness(&self) -> Option<&Witness> {
        match self {
            Entailment::Yes(w) => Some(w),
            Entailment::Unknown { .. } => None,
        }
    }
}

/// Does some chase sequence of at most `max_steps` atoms entail `q`?
pub fn entails(db: &Database, sigma: &[Tgd], q: &Query, max_steps: u32) -> Entailment {
    entails_with(db, sigma, q, max_steps, ChaseConfig::default())
}

pub fn entails_with(db: &Database, sigma: &[Tgd], q: &Query, max_steps: u32, config: ChaseConfig) -> Entailment {
    if max_steps == 0 {
        return Entailment::Unknown { truncated: false };
    }
    let chase = chase_with(db, sigma, max_steps - 1, config);
    let mut best: Option<(usize, Vec<usize>, Vec<Option<usize>>, Vec<Option<ChaseValue>>, usize)> = None;
    for (di, cq) in q.disjuncts().iter().enumerate() {
        let pat = Pattern::compile(cq.atoms());
        let mut finder = WitnessFinder::new(&chase);
        chase
            .store
            .homomorphisms(&pat, vec![None; pat.vars.len()], &|_, _| true, &mut |b, img| {
                let bound = best.as_ref().map_or(max_steps as usize, |x| x.1.len() - 1);
                if let Some((order, choice)) = finder.minimal(img, bound) {
                    best = Some((di, order, choice, b.to_vec(), img.len()));
                }
                true
            });
    }
    let Some((di, order, choice, binding, _)) = best else {
        return Entailment::Unknown {
            truncated: chase.truncated,
        };
    };
    let cq = &q.disjuncts()[di];
    let pat = Pattern::compile(cq.atoms());
    let (sequence, renumber) = build_sequence(&chase, &order, &choice);
    let homomorphism = pat
        .vars
        .iter()
        .cloned()
        .zip(binding.into_iter().map(|v| renumber_value(&v.expect("bound"), &renumber)))
        .collect();
    Entailment::Yes(Witness {
        disjunct: di,
        homomorphism,
        sequence,
    })
}

fn renumber_value(v: &ChaseValue, map: &HashMap<u32, u32>) -> ChaseValue {
    match v {
        ChaseValue::Null(n) => ChaseValue::Null(*map.get(n).unwrap_or(n)),
        c => c.clone(),
    }
}

/// Emit the chosen atoms in parent-first order and renumber nulls.
fn build_sequence(
    chase: &LeveledChase,
    order: &[usize],
    choice: &[Option<usize>],
) -> (ChaseSequence, HashMap<u32, u32>) {
    let pos: HashMap<usize, usize> = order.iter().enumerate().map(|(i, &a)| (a, i)).collect();
    // A null is named after the first step that mentions it; a second null
    // first seen at the same step (several existentials) gets a number past
    // the end of the sequence.
    let mut renumber: HashMap<u32, u32> = HashMap::new();
    let mut spare = order.len() as u32;
    for (i, &a) in order.iter().enumerate() {
        let mut first = true;
        for v in &chase.store.atoms[a].args {
            if let ChaseValue::Null(n) = v {
                if !renumber.contains_key(n) {
                    let id = if first {
                        i as u32 + 1
                    } else {
                        spare += 1;
                        spare
                    };
                    first = false;
                    renumber.insert(*n, id);
                }
            }
        }
    }
    let steps = order
        .iter()
        .enumerate()
        .map(|(i, &a)| {
            let atom = &chase.store.atoms[a];
            let atom = ChaseAtom {
                predicate: atom.predicate.clone(),
                args: atom.args.iter().map(|v| renumber_value(v, &renumber)).collect(),
            };
            let provenance = match choice[i] {
                None => Provenance::Database,
                Some(d) => {
                    let der = &chase.derivations[a][d];
                    Provenance::Derived {
                        rule: der.rule,
                        parents: der.parents.iter().map(|p| pos[p]).collect(),
                        homomorphism: der
                            .homomorphism
                            .iter()
                            .map(|(k, v)| (k.clone(), renumber_value(v, &renumber)))
                            .collect(),
                    }
                }
            };
            ChaseStep { atom, provenance }
        })
        .collect();
    (ChaseSequence { steps }, renumber)
}

/// Branch and bound search for the smallest set of chase atoms that contains
/// a given image and is closed under one acyclic choice of derivations.
struct WitnessFinder<'a> {
    chase: &'a LeveledChase,
    /// Lower bound on the closure size of each atom.
    cost: Vec<usize>,
}

impl<'a> WitnessFinder<'a> {
    fn new(chase: &'a LeveledChase) -> Self {
        let n = chase.len();
        let mut cost = vec![usize::MAX; n];
        // Atoms are created level by level, so a fixpoint over the creation
        // order converges quickly; alternative derivations may point forward.
        let mut changed = true;
        while changed {
            changed = false;
            for i in 0..n {
                let c = if chase.levels[i] == 0 {
                    1
                } else {
                    chase.derivations[i]
                        .iter()
                        .map(|d| d.parents.iter().map(|&p| cost[p]).max().unwrap_or(0).saturating_add(1))
                        .min()
                        .unwrap_or(usize::MAX)
                };
                if c < cost[i] {
                    cost[i] = c;
                    changed = true;
                }
            }
        }
        WitnessFinder { chase, cost }
    }

    /// Smallest witness of size `<= bound` containing `image`, as a
    /// parent-first atom order plus the derivation chosen for each.
    fn minimal(&mut self, image: &[usize], bound: usize) -> Option<(Vec<usize>, Vec<Option<usize>>)> {
        let mut roots: Vec<usize> = Vec::new();
        for &a in image {
            if !roots.contains(&a) {
                roots.push(a);
            }
        }
        if roots.iter().map(|&a| self.cost[a]).max().unwrap_or(0) > bound || roots.len() > bound {
            return None;
        }
        let mut state = BnbState {
            included: roots.iter().copied().collect(),
            chosen: HashMap::new(),
            pending: roots.clone(),
        };
        let mut best: Option<HashMap<usize, Option<usize>>> = None;
        let mut best_size = bound + 1;
        self.bnb(&mut state, &mut best, &mut best_size);
        let chosen = best?;
        let mut order = Vec::new();
        let mut seen = HashSet::new();
        for &r in &roots {
            self.post_order(r, &chosen, &mut seen, &mut order);
        }
        let choice = order.iter().map(|a| chosen[a]).collect();
        Some((order, choice))
    }

    fn post_order(&self, a: usize, chosen: &HashMap<usize, Option<usize>>, seen: &mut HashSet<usize>, out: &mut Vec<usize>) {
        if !seen.insert(a) {
            return;
        }
        if let Some(Some(d)) = chosen.get(&a) {
            for &p in &self.chase.derivations[a][*d].parents {
                self.post_order(p, chosen, seen, out);
            }
        }
        out.push(a);
    }

    fn depends_on(&self, from: usize, target: usize, chosen: &HashMap<usize, Option<usize>>) -> bool {
        let mut stack = vec![from];
        let mut seen = HashSet::new();
        while let Some(x) = stack.pop() {
            if x == target {
                return true;
            }
            if !seen.insert(x) {
                continue;
            }
            if let Some(Some(d)) = chosen.get(&x) {
                stack.extend(self.chase.derivations[x][*d].parents.iter().copied());
            }
        }
        false
    }

    fn bnb(&self, st: &mut BnbState, best: &mut Option<HashMap<usize, Option<usize>>>, best_size: &mut usize) {
        if st.included.len() >= *best_size {
            return;
        }
        let Some(a) = st.pending.pop() else {
            *best_size = st.included.len();
            *best = Some(st.chosen.clone());
            return;
        };
        if self.chase.levels[a] == 0 {
            st.chosen.insert(a, None);
            self.bnb(st, best, best_size);
            st.chosen.remove(&a);
            st.pending.push(a);
            return;
        }
        let mut options: Vec<usize> = (0..self.chase.derivations[a].len()).collect();
        options.sort_by_key(|&d| {
            let ps = &self.chase.derivations[a][d].parents;
            let new = ps.iter().filter(|p| !st.included.contains(p)).count();
            (new, ps.iter().map(|&p| self.cost[p]).max().unwrap_or(0))
        });
        for d in options {
            let parents = self.chase.derivations[a][d].parents.clone();
            if parents.iter().any(|&p| p == a || self.depends_on(p, a, &st.chosen)) {
                continue;
            }
            let mut added = Vec::new();
            for &p in &parents {
                if st.included.insert(p) {
                    added.push(p);
                }
            }
            let lb = parents.iter().map(|&p| self.cost[p]).max().unwrap_or(0).max(st.included.len());
            if lb < *best_size {
                st.chosen.insert(a, Some(d));
                let before = st.pending.len();
                for &p in &added {
                    if !st.chosen.contains_key(&p) {
                        st.pending.push(p);
                    }
                }
                self.bnb(st, best, best_size);
                st.pending.truncate(before);
                st.chosen.remove(&a);
            }
            for p in added {
                st.included.remove(&p);
            }
        }
        st.pending.push(a);
    }
}

struct BnbState {
    included: HashSet<usize>,
    chosen: HashMap<usize, Option<usize>>,
    pending: Vec<usize>,
}

/// Tuples over `dom(D)` whose Boolean instantiation of `q` is entailed
/// within `max_steps`. Nulls never appear in answers.
pub fn certain_answers_oracle(db: &Database, sigma: &[Tgd], q: &Query, max_steps: u32) -> BTreeSet<Vec<Symbol>> {
    certain_answers_with(db, sigma, q, max_steps, ChaseConfig::default())
}

pub fn certain_answers_with(
    db: &Database,
    sigma: &[Tgd],
    q: &Query,
    max_steps: u32,
    config: ChaseConfig,
) -> BTreeSet<Vec<Symbol>> {
    let mut out = BTreeSet::new();
    if max_steps == 0 {
        return out;
    }
    let chase = chase_with(db, sigma, max_steps - 1, config);
    for cq in q.disjuncts() {
        out.extend(answers_of(&chase, cq, max_steps));
    }
    out
}

fn answers_of(chase: &LeveledChase, cq: &ConjunctiveQuery, max_steps: u32) -> BTreeSet<Vec<Symbol>> {
    let pat = Pattern::compile(cq.atoms());
    let out_idx: Vec<usize> = cq
        .output()
        .iter()
        .map(|o| pat.vars.iter().position(|v| v == o).expect("output var in body"))
        .collect();
    let mut finder = WitnessFinder::new(chase);
    let mut answers = BTreeSet::new();
    chase
        .store
        .homomorphisms(&pat, vec![None; pat.vars.len()], &|_, _| true, &mut |b, img| {
            let tuple: Option<Vec<Symbol>> = out_idx
                .iter()
                .map(|&i| match &b[i] {
                    Some(ChaseValue::Const(c)) => Some(c.clone()),
                    _ => None,
                })
                .collect();
            if let Some(t) = tuple {
                if !answers.contains(&t) && finder.minimal(img, max_steps as usize).is_some() {
                    answers.insert(t);
                }
            }
            true
        });
    answers
}
