//! Subcommand implementations. Each returns the process exit code.

use std::fmt;
use std::io::Read;
use std::time::{Duration, Instant};

use ontoq_core::chase::{chase_to_level, entails, Entailment};
use ontoq_core::dllite::{compile_tbox as compile, parse_tbox, violation_query};
use ontoq_core::emitters::{to_fo_formula, to_sql, to_sql_with_facts};
use ontoq_core::evaluator::{evaluate_with, Answer, EvalConfig, EvalError, Evaluation};
use ontoq_core::harness::{self, gen_instance, gen_output_instance, Instance, Profile, VerifyConfig};
use ontoq_core::normalizer::{to_normal_form, uniformize};
use ontoq_core::rewriter::{decode_assignment, format_encoding_table, rewrite as rewrite_problem, Rewriting};
use ontoq_core::{
    parse_facts_with, parse_program, parse_query, parse_tgds, serialize_program, serialize_query, serialize_tgds, Database, Query,
    RewriteParams, Tgd, Variant,
};

use crate::{AnswerArgs, ChaseArgs, CompileTboxArgs, Emit, EvalArgs, NormalizeArgs, ProfileArg, QueryKind, RewriteArgs, VerifyArgs};

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or unreadable / malformed input.
    Usage(String),
    Resource(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Resource(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Resource(m) => f.write_str(m),
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn usage(e: impl fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn read(path: &str) -> Result<String> {
    if path == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).map_err(|e| usage(format!("stdin: {e}")))?;
        Ok(s)
    } else {
        std::fs::read_to_string(path).map_err(|e| usage(format!("{path}: {e}")))
    }
}

fn write_out(path: Option<&str>, text: &str) -> Result<()> {
    match path {
        None | Some("-") => {
            print!("{text}");
            Ok(())
        }
        Some(p) => std::fs::write(p, text).map_err(|e| usage(format!("{p}: {e}"))),
    }
}

fn load_tgds(path: &str) -> Result<Vec<Tgd>> {
    parse_tgds(&read(path)?).map_err(|e| usage(format!("{path}: {e}")))
}

fn load_query(path: &str) -> Result<Query> {
    parse_query(&read(path)?).map_err(|e| usage(format!("{path}: {e}")))
}

fn load_facts(path: &str, digits: bool) -> Result<Database> {
    parse_facts_with(&read(path)?, digits).map_err(|e| usage(format!("{path}: {e}")))
}

fn eval_config(timeout_ms: Option<u64>) -> EvalConfig {
    EvalConfig {
        timeout: timeout_ms.map(Duration::from_millis),
        ..EvalConfig::default()
    }
}

fn run_eval(program: &ontoq_core::DatalogProgram, db: &Database, n: u32, timeout_ms: Option<u64>) -> Result<Evaluation> {
    evaluate_with(program, db, n, &eval_config(timeout_ms)).map_err(|e| match e {
        EvalError::Resource { .. } => CliError::Resource(e.to_string()),
        e => usage(e),
    })
}

fn print_answer(answer: &Answer) {
    match answer {
        Answer::Boolean(b) => println!("{b}"),
        Answer::Tuples(ts) => {
            for t in ts {
                let row: Vec<String> = t.iter().map(|v| v.to_string()).collect();
                println!("{}", row.join(","));
            }
        }
    }
}

fn exit_for(answer: &Answer, exit_status: bool) -> u8 {
    match answer {
        Answer::Boolean(false) if exit_status => 1,
        _ => 0,
    }
}

/// Smallest N the rewriter accepts for this problem.
fn min_steps(sigma: &[Tgd], q: &Query) -> Result<u32> {
    let (normal, _) = to_normal_form(sigma);
    let u = uniformize(&normal, q).map_err(usage)?;
    Ok(RewriteParams::min_steps(u.ell(), u.query_u.max_atoms()))
}

fn build(sigma: &[Tgd], q: &Query, n: u32, variant: Variant) -> Result<Rewriting> {
    rewrite_problem(sigma, q, &RewriteParams::new(n, variant)).map_err(usage)
}

pub fn rewrite(a: RewriteArgs) -> Result<u8> {
    let sigma = load_tgds(&a.problem.tgds)?;
    let q = load_query(&a.problem.query)?;
    let n = match a.steps {
        Some(n) => n,
        None => min_steps(&sigma, &q)?,
    };
    let rw = build(&sigma, &q, n, a.problem.variant.into())?;
    let text = match a.emit {
        Emit::Dl => serialize_program(&rw.program),
        Emit::Sql => {
            let script = match &a.facts {
                Some(f) => to_sql_with_facts(&rw.program, &load_facts(f, a.digit_constants)?, n),
                None => to_sql(&rw.program, &Default::default(), n),
            }
            .map_err(usage)?;
            for (from, to) in &script.renamed {
                eprintln!("renamed {from} -> {to}");
            }
            script.text()
        }
        Emit::Fo => format!("{}\n", to_fo_formula(&rw.program).map_err(usage)?),
    };
    write_out(a.output.as_deref(), &text)?;
    if a.stats {
        eprint!("steps={n}\nvariant={}\n{}", Variant::from(a.problem.variant), rw.stats.to_key_value());
    }
    Ok(0)
}

pub fn eval(a: EvalArgs) -> Result<u8> {
    let program = parse_program(&read(&a.program)?).map_err(|e| usage(format!("{}: {e}", a.program)))?;
    let db = load_facts(&a.facts, a.digit_constants)?;
    let ev = run_eval(&program, &db, a.steps, a.timeout_ms)?;
    print_answer(&ev.answer);
    if a.trace {
        if let Some(asg) = &ev.assignment {
            for (var, val) in asg {
                println!("{var} = {val}");
            }
        }
    }
    if a.stats {
        eprint!("{}", ev.stats.to_key_value());
    }
    Ok(exit_for(&ev.answer, a.exit_status))
}

pub fn chase(a: ChaseArgs) -> Result<u8> {
    let sigma = load_tgds(&a.tgds)?;
    let db = load_facts(&a.facts, a.digit_constants)?;
    if let Some(qp) = &a.query {
        let q = load_query(qp)?;
        match entails(&db, &sigma, &q, a.max_steps) {
            Entailment::Yes(w) => {
                println!("true");
                print!("{}", w.sequence.to_trace());
            }
            Entailment::Unknown { truncated } => {
                println!("unknown");
                if truncated {
                    eprintln!("chase truncated at its atom cap");
                }
            }
        }
        return Ok(0);
    }
    let level = a.level.unwrap_or(a.max_steps.saturating_sub(1));
    let c = chase_to_level(&db, &sigma, level);
    for (i, atom) in c.atoms().iter().enumerate() {
        println!("{}\t{atom}", c.level(i));
    }
    Ok(0)
}

pub fn answer(a: AnswerArgs) -> Result<u8> {
    let sigma = load_tgds(&a.problem.tgds)?;
    let q = load_query(&a.problem.query)?;
    let db = load_facts(&a.facts, a.digit_constants)?;
    let variant: Variant = a.problem.variant.into();
    let n = match a.steps {
        Some(n) => n,
        None => {
            let negative = min_steps(&sigma, &q)? + 1;
            let c = harness::auto_n(&sigma, &db, &q, a.oracle_steps, negative).map_err(usage)?;
            eprintln!("auto-n: N={} (oracle witness length {:?})", c.n, c.witness_len);
            c.n
        }
    };
    let start = Instant::now();
    let rw = build(&sigma, &q, n, variant)?;
    let ev = run_eval(&rw.program, &db, n, a.timeout_ms)?;
    print_answer(&ev.answer);
    if a.trace {
        let u = &rw.problem;
        match ev.assignment.as_ref().and_then(|asg| decode_assignment(asg, n, u.a, u.k)) {
            Some(rows) => print!("{}", format_encoding_table(&rows)),
            None => eprintln!("no encoding to show"),
        }
    }
    if a.stats {
        eprint!("steps={n}\nvariant={variant}\n{}{}total_millis={}\n", rw.stats.to_key_value(), ev.stats.to_key_value(), start.elapsed().as_millis());
    }
    Ok(exit_for(&ev.answer, a.exit_status))
}

fn parse_seeds(s: &str) -> Result<std::ops::Range<u64>> {
    let bad = || usage(format!("--seeds expects COUNT or START..END, got `{s}`"));
    match s.split_once("..") {
        Some((lo, hi)) => Ok(lo.trim().parse().map_err(|_| bad())?..hi.trim().parse().map_err(|_| bad())?),
        None => Ok(0..s.trim().parse().map_err(|_| bad())?),
    }
}

pub fn verify(a: VerifyArgs) -> Result<u8> {
    let profile = match a.profile {
        ProfileArg::Linear => Profile::linear(),
        ProfileArg::General => Profile::general(),
        ProfileArg::MultiHead => Profile::multi_head(),
    };
    let seeds = parse_seeds(&a.seeds)?;
    let instances: Vec<Instance> = seeds
        .map(|s| match a.kind {
            QueryKind::Boolean => gen_instance(s, &profile),
            QueryKind::Output => gen_output_instance(s, &profile),
        })
        .collect();
    let mut cfg = VerifyConfig::for_profile(&profile);
    cfg.variants = a.variants.iter().map(|&v| v.into()).collect();
    cfg.eval_timeout = Some(Duration::from_millis(a.timeout_ms));
    if let Some(t) = a.threads {
        cfg.threads = t.max(1);
    }
    let start = Instant::now();
    let reports = match a.steps {
        Some(n) => instances
            .iter()
            .map(|i| harness::verify(i, n, &cfg.variants, cfg.eval_timeout))
            .collect(),
        None => harness::verify_many(&instances, &cfg),
    };
    let lines: String = reports.iter().map(|r| r.to_json_line() + "\n").collect();
    if let Some(path) = &a.report {
        write_out(Some(path), &lines)?;
    }
    let ok = reports.iter().filter(|r| r.ok()).count();
    let breaches: usize = reports.iter().map(|r| r.soundness_breaches()).sum();
    let positives = reports.iter().filter(|r| r.oracle == "yes").count();
    let resource = reports
        .iter()
        .flat_map(|r| &r.results)
        .filter(|v| v.outcome == harness::Outcome::Resource)
        .count();
    eprintln!(
        "instances={} agree={ok} positive={positives} soundness_breaches={breaches} resource={resource} millis={}",
        reports.len(),
        start.elapsed().as_millis()
    );
    Ok(if ok == reports.len() { 0 } else { 1 })
}

pub fn compile_tbox(a: CompileTboxArgs) -> Result<u8> {
    let tbox = parse_tbox(&read(&a.input)?).map_err(|e| usage(format!("{}: {e}", a.input)))?;
    write_out(a.output.as_deref(), &serialize_tgds(&compile(&tbox.axioms)))?;
    match (violation_query(&tbox.disjoint), &a.violation_query) {
        (Some(q), Some(path)) => write_out(Some(path), &serialize_query(&q))?,
        (Some(_), None) => eprintln!("note: {} disjointness axiom(s) ignored; use --violation-query to emit them", tbox.disjoint.len()),
        (None, _) => {}
    }
    Ok(0)
}

pub fn normalize(a: NormalizeArgs) -> Result<u8> {
    let sigma = load_tgds(&a.input)?;
    let (normal, report) = to_normal_form(&sigma);
    write_out(a.output.as_deref(), &serialize_tgds(&normal))?;
    if a.stats {
        let aux: Vec<String> = report.aux_predicates.iter().map(|p| p.to_string()).collect();
        eprint!("size_before={}\nsize_after={}\naux_predicates={}\n", report.size_before, report.size_after, aux.join(","));
    }
    Ok(0)
}
