//! Seeded random instances. Every generator is a pure function of its seed.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dllite::{DlAxiom, TBox};
use crate::gadgets;
use crate::model::{sym, Atom, ConjunctiveQuery, Database, Query, Symbol, Term, Tgd};

/// Size limits for generated ontological instances.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Profile {
    pub name: &'static str,
    pub max_rules: usize,
    pub max_arity: usize,
    pub max_body: usize,
    pub max_head: usize,
    pub max_existentials: usize,
    pub max_facts: usize,
    pub max_query_atoms: usize,
    /// Force single-atom bodies regardless of `max_body`.
    pub linear_only: bool,
    /// N used for instances the oracle finds negative.
    pub steps: u32,
}

impl Profile {
    /// Single-atom bodies and heads.
    pub fn linear() -> Self {
        Profile {
            name: "linear",
            max_rules: 5,
            max_arity: 3,
            max_body: 1,
            max_head: 1,
            max_existentials: 1,
            max_facts: 15,
            max_query_atoms: 3,
            linear_only: true,
            steps: 6,
        }
    }

    /// Multi-atom bodies, single-atom heads.
    pub fn general() -> Self {
        Profile {
            name: "general",
            max_body: 2,
            linear_only: false,
            ..Profile::linear()
        }
    }

    /// Multi-atom heads with several existentials; used to exercise the
    /// normal form rather than the full pipeline.
    pub fn multi_head() -> Self {
        Profile {
            name: "multi-head",
            max_rules: 4,
            max_body: 2,
            max_head: 3,
            max_existentials: 2,
            max_facts: 10,
            linear_only: false,
            ..Profile::linear()
        }
    }

    pub fn by_name(name: &str) -> Option<Self> {
        [Profile::linear(), Profile::general(), Profile::multi_head()]
            .into_iter()
            .find(|p| p.name == name)
    }
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub seed: u64,
    pub sigma: Vec<Tgd>,
    pub db: Database,
    pub query: Query,
}

const CONSTS: [&str; 4] = ["a", "b", "c", "d"];
const VARS: [&str; 6] = ["X", "Y", "Z", "U", "V", "W"];

fn rng(seed: u64, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

fn signature(r: &mut ChaCha8Rng, p: &Profile) -> Vec<(Symbol, usize)> {
    (0..r.gen_range(2..=4))
        .map(|i| (sym(&format!("r{i}")), r.gen_range(1..=p.max_arity)))
        .collect()
}

fn var_atom(r: &mut ChaCha8Rng, (pred, arity): &(Symbol, usize), pool: &[&str]) -> Atom {
    Atom::new(pred.clone(), (0..*arity).map(|_| Term::var(pool.choose(r).unwrap())).collect())
}

fn random_tgd(r: &mut ChaCha8Rng, sig: &[(Symbol, usize)], p: &Profile) -> Tgd {
    loop {
        let max_body = if p.linear_only { 1 } else { p.max_body.max(1) };
        let body: Vec<Atom> = (0..r.gen_range(1..=max_body))
            .map(|_| {
                let s = sig.choose(r).unwrap().clone();
                var_atom(r, &s, &VARS[..3])
            })
            .collect();
        let body_vars: Vec<&str> = VARS[..3]
            .iter()
            .copied()
            .filter(|v| body.iter().any(|a| a.vars().any(|x| &**x == *v)))
            .collect();
        let n_ex = r.gen_range(0..=p.max_existentials);
        let ex: Vec<&str> = VARS[3..3 + n_ex].to_vec();
        let pool: Vec<&str> = body_vars.iter().chain(&ex).copied().collect();
        let head: Vec<Atom> = (0..r.gen_range(1..=p.max_head))
            .map(|_| {
                let s = sig.choose(r).unwrap().clone();
                var_atom(r, &s, &pool)
            })
            .collect();
        let used: Vec<Symbol> = ex
            .iter()
            .filter(|e| head.iter().any(|a| a.vars().any(|x| &**x == **e)))
            .map(|e| sym(e))
            .collect();
        if let Ok(t) = Tgd::new(body, head, used) {
            return t;
        }
    }
}

fn random_db(r: &mut ChaCha8Rng, sig: &[(Symbol, usize)], max_facts: usize) -> Database {
    let mut db = Database::new();
    for _ in 0..r.gen_range(1..=max_facts) {
        let (pred, arity) = sig.choose(r).unwrap();
        db.insert(Atom::new(pred.clone(), (0..*arity).map(|_| Term::constant(CONSTS.choose(r).unwrap())).collect()))
            .expect("consistent arities");
    }
    db
}

fn random_query_atoms(r: &mut ChaCha8Rng, sig: &[(Symbol, usize)], p: &Profile) -> Vec<Atom> {
    (0..r.gen_range(1..=p.max_query_atoms))
        .map(|_| {
            let (pred, arity) = sig.choose(r).unwrap().clone();
            let args = (0..arity)
                .map(|_| {
                    if r.gen_bool(0.1) {
                        Term::constant(CONSTS.choose(r).unwrap())
                    } else {
                        Term::var(VARS[..3].choose(r).unwrap())
                    }
                })
                .collect();
            Atom::new(pred, args)
        })
        .collect()
}

/// A random ontology, database and Boolean query.
pub fn gen_instance(seed: u64, p: &Profile) -> Instance {
    let mut r = rng(seed, 1);
    let sig = signature(&mut r, p);
    let sigma = (0..r.gen_range(1..=p.max_rules)).map(|_| random_tgd(&mut r, &sig, p)).collect();
    let db = random_db(&mut r, &sig, p.max_facts);
    let query = loop {
        let atoms = random_query_atoms(&mut r, &sig, p);
        if let Ok(q) = ConjunctiveQuery::boolean(atoms) {
            break Query::Conjunctive(q);
        }
    };
    Instance { seed, sigma, db, query }
}

/// Like [`gen_instance`] with one or two answer variables.
pub fn gen_output_instance(seed: u64, p: &Profile) -> Instance {
    let mut r = rng(seed, 2);
    let sig = signature(&mut r, p);
    let sigma = (0..r.gen_range(1..=p.max_rules)).map(|_| random_tgd(&mut r, &sig, p)).collect();
    let db = random_db(&mut r, &sig, p.max_facts);
    let query = loop {
        let atoms = random_query_atoms(&mut r, &sig, p);
        let mut vars: Vec<Symbol> = crate::model::vars_in_order(&atoms);
        if vars.is_empty() {
            continue;
        }
        vars.shuffle(&mut r);
        vars.truncate(r.gen_range(1..=2));
        if let Ok(q) = ConjunctiveQuery::new("q", atoms, vars) {
            break Query::Conjunctive(q);
        }
    };
    Instance { seed, sigma, db, query }
}

/// A nonrecursive Datalog program as text, facts as text, and N.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProgramCase {
    pub program: String,
    pub facts: String,
    pub n: u32,
}

const P_CONSTS: [&str; 5] = ["a", "b", "c", "0", "2"];
const P_VARS: [&str; 4] = ["X", "Y", "Z", "W"];

/// A layered program over `E/2`, `U/1`, `D/1`, the numeric builtins, a few
/// gadget predicates and earlier layers. Facts are meant to be read with
/// digit strings as constants.
pub fn gen_program(seed: u64) -> ProgramCase {
    let mut rng = rng(seed, 3);
    let term = |rng: &mut ChaCha8Rng| {
        if rng.gen_bool(0.2) {
            P_CONSTS.choose(rng).unwrap().to_string()
        } else {
            P_VARS.choose(rng).unwrap().to_string()
        }
    };
    let mut facts = String::new();
    for x in P_CONSTS {
        // `a` anchors U and E so both relations always exist.
        if rng.gen_bool(0.6) || x == "a" {
            facts += &format!("U({x}). ");
        }
        facts += &format!("D({x}). ");
        for y in P_CONSTS {
            if rng.gen_bool(0.25) || (x, y) == ("a", "b") {
                facts += &format!("E({x},{y}). ");
            }
        }
    }
    let mut preds: Vec<(String, usize)> = [
        ("E", 2),
        ("U", 1),
        ("Num", 1),
        ("Succ", 2),
        ("Lt", 2),
        ("Neq", 2),
        ("Zero", 1),
        ("One", 1),
        ("GI", 4),
        ("GE", 3),
        ("GN", 2),
        ("GO", 3),
    ]
    .iter()
    .map(|(p, a)| (p.to_string(), *a))
    .collect();
    let mut text = String::new();
    let layers = rng.gen_range(1..=3);
    for layer in 0..=layers {
        let (name, arity) = if layer == layers {
            ("ans".to_string(), rng.gen_range(0..=2))
        } else {
            (format!("p{layer}"), rng.gen_range(1..=2))
        };
        for _ in 0..rng.gen_range(1..=2) {
            let mut body = Vec::new();
            let mut vars = Vec::new();
            for _ in 0..rng.gen_range(1..=3) {
                let (p, a) = preds.choose(&mut rng).unwrap().clone();
                let args: Vec<String> = (0..a).map(|_| term(&mut rng)).collect();
                vars.extend(args.iter().filter(|t| P_VARS.contains(&t.as_str())).cloned());
                body.push(format!("{p}({})", args.join(",")));
            }
            let head: Vec<String> = (0..arity)
                .map(|_| {
                    vars.choose(&mut rng)
                        .cloned()
                        .unwrap_or_else(|| P_CONSTS.choose(&mut rng).unwrap().to_string())
                })
                .collect();
            let head = if arity == 0 {
                name.clone()
            } else {
                format!("{name}({})", head.join(","))
            };
            text += &format!("{head} :- {}.\n", body.join(", "));
        }
        if layer == layers {
            text = format!("%@goal ans/{arity}\n{text}");
        }
        preds.push((name, arity));
    }
    let g = |n: &str| sym(n);
    let mut gadget_rules = gadgets::if_then_rules(&g("GI"), 1, &g("D"));
    gadget_rules.extend(gadgets::if_eq_rules(&g("GE"), &g("D")));
    gadget_rules.extend(gadgets::not_b_rules(&g("GN")));
    gadget_rules.extend(gadgets::or_b_rules(&g("GO")));
    for r in gadget_rules {
        text += &format!("{r}\n");
    }
    ProgramCase {
        program: text,
        facts,
        n: rng.gen_range(1..=3),
    }
}

/// A DL-Lite TBox over concepts `A0..A3` and roles `P0..P2`, an ABox, and
/// an atomic Boolean query.
pub fn gen_tbox(seed: u64) -> (TBox, Database, Query) {
    let mut r = rng(seed, 4);
    let concepts: Vec<Symbol> = (0..4).map(|i| sym(&format!("A{i}"))).collect();
    let roles: Vec<Symbol> = (0..3).map(|i| sym(&format!("P{i}"))).collect();
    let mut tbox = TBox::default();
    for _ in 0..r.gen_range(1..=6) {
        let a = concepts.choose(&mut r).unwrap().clone();
        let b = concepts.choose(&mut r).unwrap().clone();
        let p = roles.choose(&mut r).unwrap().clone();
        let q = roles.choose(&mut r).unwrap().clone();
        tbox.axioms.push(match r.gen_range(0..7) {
            0 => DlAxiom::ConceptIncl(a, b),
            1 => DlAxiom::ExistRestrRight(a, p),
            2 => DlAxiom::ExistRestrRightInv(a, p),
            3 => DlAxiom::ExistRestrLeft(p, a),
            4 => DlAxiom::ExistRestrLeftInv(p, a),
            5 => DlAxiom::RoleIncl(p, q),
            _ => DlAxiom::RoleInclInv(p, q),
        });
    }
    let mut db = Database::new();
    for _ in 0..r.gen_range(1..=4) {
        let c = |r: &mut ChaCha8Rng| Term::constant(CONSTS[..3].choose(r).unwrap());
        let atom = if r.gen_bool(0.5) {
            Atom::new(concepts.choose(&mut r).unwrap().clone(), vec![c(&mut r)])
        } else {
            Atom::new(roles.choose(&mut r).unwrap().clone(), vec![c(&mut r), c(&mut r)])
        };
        db.insert(atom).expect("fixed arities");
    }
    let atom = if r.gen_bool(0.6) {
        Atom::new(concepts.choose(&mut r).unwrap().clone(), vec![Term::var("X")])
    } else {
        Atom::new(roles.choose(&mut r).unwrap().clone(), vec![Term::var("X"), Term::var("Y")])
    };
    let q = Query::Conjunctive(ConjunctiveQuery::boolean(vec![atom]).expect("safe"));
    (tbox, db, q)
}
