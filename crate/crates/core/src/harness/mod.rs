//! Random instance generation and differential verification of the
//! rewriting against the chase oracle.

mod gen;

use std::collections::BTreeSet;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::chase::{certain_answers_oracle, entails, Entailment};
use crate::evaluator::{evaluate_with, Answer, EvalConfig, EvalError};
use crate::model::{Atom, ConjunctiveQuery, Database, Query, RewriteParams, Symbol, Term, Tgd, Value, Variant};
use crate::normalizer::{to_normal_form, uniformize, UniformizedProblem};
use crate::rewriter::{rewrite, RewriteError};

pub use gen::{gen_instance, gen_output_instance, gen_program, gen_tbox, Instance, Profile, ProgramCase};

#[derive(Debug, Clone)]
pub struct VerifyConfig {
    /// Oracle budget used to classify an instance as positive or negative.
    pub oracle_steps: u32,
    /// N for instances the oracle finds negative.
    pub negative_steps: u32,
    pub eval_timeout: Option<Duration>,
    pub variants: Vec<Variant>,
    pub threads: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            oracle_steps: 10,
            negative_steps: Profile::linear().steps,
            eval_timeout: Some(Duration::from_secs(60)),
            variants: Variant::ALL.to_vec(),
            threads: std::thread::available_parallelism().map_or(1, |n| n.get()),
        }
    }
}

impl VerifyConfig {
    pub fn for_profile(p: &Profile) -> Self {
        VerifyConfig {
            negative_steps: p.steps,
            ..VerifyConfig::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    /// Program and oracle both positive, or equal answer sets.
    Agree,
    /// Both negative.
    Vacuous,
    /// Program true where the oracle found nothing.
    SoundnessBreach,
    /// Oracle positive, program false.
    CompletenessBreach,
    /// Output answer sets differ.
    Mismatch,
    Resource,
    Error,
}

impl Outcome {
    /// Not a failure; resource exhaustion is recorded but tolerated.
    pub fn is_ok(self) -> bool {
        matches!(self, Outcome::Agree | Outcome::Vacuous | Outcome::Resource)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VariantResult {
    pub variant: Variant,
    pub outcome: Outcome,
    /// Boolean answer, or the number of answer tuples.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub answer: Option<serde_json::Value>,
    pub rules: usize,
    pub atoms: usize,
    pub max_arity: usize,
    pub millis: u128,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub seed: u64,
    pub kind: &'static str,
    pub n: u32,
    /// `yes`, `unknown` or `truncated` at max_steps = n.
    pub oracle: &'static str,
    pub witness_len: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle_answers: Option<usize>,
    pub results: Vec<VariantResult>,
    /// Every variant agrees with the oracle (or ran out of resources).
    pub agree: bool,
    /// Every completed variant gave the same answer.
    pub coherent: bool,
}

impl Report {
    pub fn ok(&self) -> bool {
        self.agree && self.coherent
    }

    pub fn soundness_breaches(&self) -> usize {
        self.results.iter().filter(|r| r.outcome == Outcome::SoundnessBreach).count()
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("plain data")
    }
}

/// How N was picked for an instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NChoice {
    pub n: u32,
    pub witness_len: Option<usize>,
    pub truncated: bool,
}

fn problem(sigma: &[Tgd], q: &Query) -> Result<UniformizedProblem, RewriteError> {
    let (normal, _) = to_normal_form(sigma);
    Ok(uniformize(&normal, q)?)
}

fn floor_n(u: &UniformizedProblem) -> u32 {
    RewriteParams::min_steps(u.ell(), u.query_u.max_atoms())
}

/// Pick N from the data: two more than the longest shortest witness the
/// oracle finds within `oracle_steps` (over all answers for output
/// queries), else `negative_steps`. Never below the rewriting minimum.
pub fn auto_n(sigma: &[Tgd], db: &Database, q: &Query, oracle_steps: u32, negative_steps: u32) -> Result<NChoice, RewriteError> {
    let u = problem(sigma, q)?;
    Ok(choose_n(&u, db, oracle_steps, negative_steps))
}

fn choose_n(u: &UniformizedProblem, db: &Database, oracle_steps: u32, negative_steps: u32) -> NChoice {
    let floor = floor_n(u);
    let padded = u.pad_database(db);
    let (longest, truncated) = if u.query_u.is_boolean() {
        match entails(&padded, &u.sigma_u, &u.query_u, oracle_steps) {
            Entailment::Yes(w) => (Some(w.sequence.len()), false),
            Entailment::Unknown { truncated } => (None, truncated),
        }
    } else {
        let mut longest = None;
        for t in certain_answers_oracle(&padded, &u.sigma_u, &u.query_u, oracle_steps) {
            if let Some(w) = entails(&padded, &u.sigma_u, &instantiate(&u.query_u, &t), oracle_steps).witness() {
                longest = longest.max(Some(w.sequence.len()));
            }
        }
        (longest, false)
    };
    NChoice {
        n: longest.map_or(negative_steps, |w| w as u32 + 2).max(floor),
        witness_len: longest,
        truncated,
    }
}

/// The Boolean query asking whether `tuple` is an answer of `q`.
pub fn instantiate(q: &Query, tuple: &[Symbol]) -> Query {
    let ds = q
        .disjuncts()
        .iter()
        .map(|cq| {
            let subst = |t: &Term| match t {
                Term::Var(v) => cq
                    .output()
                    .iter()
                    .position(|o| o == v)
                    .map_or_else(|| t.clone(), |i| Term::Const(tuple[i].clone())),
                _ => t.clone(),
            };
            let atoms = cq
                .atoms()
                .iter()
                .map(|a| Atom::new(a.predicate.clone(), a.args.iter().map(subst).collect()))
                .collect();
            ConjunctiveQuery::boolean(atoms).expect("instantiation keeps safety")
        })
        .collect();
    Query::from_disjuncts(ds).expect("Boolean disjuncts")
}

fn to_symbols(answer: &Answer) -> BTreeSet<Vec<Symbol>> {
    match answer {
        Answer::Boolean(true) => [Vec::new()].into(),
        Answer::Boolean(false) => BTreeSet::new(),
        Answer::Tuples(ts) => ts
            .iter()
            .map(|t| {
                t.iter()
                    .map(|v| match v {
                        Value::Const(c) => c.clone(),
                        Value::Num(n) => crate::model::sym(&n.to_string()),
                    })
                    .collect()
            })
            .collect(),
    }
}

/// Run the oracle with `max_steps = n`, then rewrite, evaluate and compare
/// each variant.
pub fn verify(inst: &Instance, n: u32, variants: &[Variant], eval_timeout: Option<Duration>) -> Report {
    let boolean = inst.query.is_boolean();
    let mut report = Report {
        seed: inst.seed,
        kind: if boolean { "boolean" } else { "output" },
        n,
        oracle: "unknown",
        witness_len: None,
        oracle_answers: None,
        results: Vec::new(),
        agree: false,
        coherent: true,
    };
    let u = match problem(&inst.sigma, &inst.query) {
        Ok(u) => u,
        Err(e) => {
            report.results.push(VariantResult {
                variant: variants.first().copied().unwrap_or(Variant::Wide),
                outcome: Outcome::Error,
                answer: None,
                rules: 0,
                atoms: 0,
                max_arity: 0,
                millis: 0,
                detail: Some(e.to_string()),
            });
            return report;
        }
    };
    let padded = u.pad_database(&inst.db);
    let expected: BTreeSet<Vec<Symbol>> = if boolean {
        match entails(&padded, &u.sigma_u, &u.query_u, n) {
            Entailment::Yes(w) => {
                report.witness_len = Some(w.sequence.len());
                [Vec::new()].into()
            }
            Entailment::Unknown { truncated } => {
                if truncated {
                    report.oracle = "truncated";
                }
                BTreeSet::new()
            }
        }
    } else {
        let a = certain_answers_oracle(&padded, &u.sigma_u, &u.query_u, n);
        report.oracle_answers = Some(a.len());
        a
    };
    if !expected.is_empty() {
        report.oracle = "yes";
    }
    let eval_cfg = EvalConfig {
        timeout: eval_timeout,
        ..EvalConfig::default()
    };
    let mut seen: Option<BTreeSet<Vec<Symbol>>> = None;
    for &variant in variants {
        let start = Instant::now();
        let mut res = VariantResult {
            variant,
            outcome: Outcome::Error,
            answer: None,
            rules: 0,
            atoms: 0,
            max_arity: 0,
            millis: 0,
            detail: None,
        };
        match rewrite(&inst.sigma, &inst.query, &RewriteParams::new(n, variant)) {
            Err(e) => res.detail = Some(e.to_string()),
            Ok(rw) => {
                res.rules = rw.stats.rules;
                res.atoms = rw.stats.atoms;
                res.max_arity = rw.stats.max_arity;
                match evaluate_with(&rw.program, &inst.db, n, &eval_cfg) {
                    Err(EvalError::Resource { .. }) => res.outcome = Outcome::Resource,
                    Err(e) => res.detail = Some(e.to_string()),
                    Ok(ev) => {
                        let got = to_symbols(&ev.answer);
                        res.answer = Some(match &ev.answer {
                            Answer::Boolean(b) => serde_json::Value::Bool(*b),
                            Answer::Tuples(t) => serde_json::Value::from(t.len()),
                        });
                        res.outcome = match (got == expected, boolean, got.is_empty()) {
                            (true, true, true) => Outcome::Vacuous,
                            (true, _, _) => Outcome::Agree,
                            (false, true, false) => Outcome::SoundnessBreach,
                            (false, true, true) => Outcome::CompletenessBreach,
                            (false, false, _) if got.is_subset(&expected) => Outcome::CompletenessBreach,
                            (false, false, _) if expected.is_subset(&got) => Outcome::SoundnessBreach,
                            (false, false, _) => Outcome::Mismatch,
                        };
                        if !boolean && got != expected {
                            res.detail = Some(format!("program {got:?} oracle {expected:?}"));
                        }
                        if seen.get_or_insert_with(|| got.clone()) != &got {
                            report.coherent = false;
                        }
                    }
                }
            }
        }
        res.millis = start.elapsed().as_millis();
        report.results.push(res);
    }
    report.agree = report.results.iter().all(|r| r.outcome.is_ok());
    report
}

/// [`verify`] with N picked by [`auto_n`].
pub fn verify_auto(inst: &Instance, cfg: &VerifyConfig) -> Report {
    let n = match problem(&inst.sigma, &inst.query) {
        Ok(u) => choose_n(&u, &inst.db, cfg.oracle_steps, cfg.negative_steps).n,
        Err(_) => cfg.negative_steps,
    };
    verify(inst, n, &cfg.variants, cfg.eval_timeout)
}

/// [`verify_auto`] over many instances on `cfg.threads` workers; reports
/// come back sorted by seed.
pub fn verify_many(instances: &[Instance], cfg: &VerifyConfig) -> Vec<Report> {
    let next = AtomicUsize::new(0);
    let out: Mutex<Vec<Report>> = Mutex::new(Vec::with_capacity(instances.len()));
    std::thread::scope(|s| {
        for _ in 0..cfg.threads.clamp(1, instances.len().max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(inst) = instances.get(i) else { break };
                let r = verify_auto(inst, cfg);
                out.lock().expect("no worker panics while holding the lock").push(r);
            });
        }
    });
    let mut reports = out.into_inner().expect("workers joined");
    reports.sort_by_key(|r| r.seed);
    reports
}
