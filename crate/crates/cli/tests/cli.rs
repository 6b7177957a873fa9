use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output, Stdio};

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn ontoq() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_ontoq"));
    // Keep the caller's environment from leaking into flag defaults.
    for (k, _) in std::env::vars() {
        if k.starts_with("ONTOQ_") {
            c.env_remove(k);
        }
    }
    c
}

fn run_with_stdin(mut cmd: Command, input: &str) -> Output {
    let mut child = cmd.stdin(Stdio::piped()).stdout(Stdio::piped()).stderr(Stdio::piped()).spawn().unwrap();
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn answer(facts: &str, variant: &str) -> Command {
    let mut c = ontoq();
    c.args(["answer", "--steps", "6", "--variant", variant])
        .arg("--tgds")
        .arg(data("example.tgd"))
        .arg("--query")
        .arg(data("example.cq"))
        .arg("--facts")
        .arg(data(facts));
    c
}

#[test]
fn answer_separates_positive_and_negative_data() {
    for v in ["wide", "reduced", "bitvec"] {
        let yes = answer("example.facts", v).output().unwrap();
        assert_eq!(stdout(&yes).trim(), "true", "{v}: {}", stderr(&yes));
        let no = answer("example-negative.facts", v).arg("--exit-status").output().unwrap();
        assert_eq!(stdout(&no).trim(), "false", "{v}");
        assert_eq!(no.status.code(), Some(1));
    }
}

#[test]
fn false_answers_exit_zero_without_the_flag() {
    let o = answer("example-negative.facts", "wide").output().unwrap();
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn trace_prints_the_decoded_encoding() {
    let o = answer("example.facts", "reduced").arg("--trace").output().unwrap();
    let out = stdout(&o);
    assert!(out.starts_with("true\n"), "{out}");
    assert!(out.lines().count() > 6, "{out}");
}

#[test]
fn stats_go_to_stderr() {
    let o = answer("example.facts", "reduced").arg("--stats").output().unwrap();
    assert_eq!(stdout(&o).trim(), "true");
    let err = stderr(&o);
    assert!(err.lines().any(|l| l == "max_arity=4"), "{err}");
    assert!(err.lines().any(|l| l == "steps=6"), "{err}");
}

#[test]
fn eval_reads_the_program_from_stdin() {
    let mut c = ontoq();
    c.args(["eval", "--program", "-", "--exit-status", "--facts"]).arg(data("example.facts"));
    let o = run_with_stdin(c, "goal :- R1(X,X).\n");
    assert_eq!(stdout(&o).trim(), "false");
    assert_eq!(o.status.code(), Some(1));

    let mut c = ontoq();
    c.args(["eval", "--program", "-", "--facts"]).arg(data("example.facts"));
    let o = run_with_stdin(c, "%@goal q/1\nq(X) :- R1(X,Y), R3(Z,X).\n");
    assert_eq!(stdout(&o), "a\n");
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn usage_errors_exit_two() {
    let o = ontoq().args(["answer", "--tgds", "x"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = ontoq()
        .args(["answer", "--steps", "6", "--tgds", "/nonexistent.tgd", "--query", "/nonexistent.cq", "--facts", "/nonexistent"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("error:"), "{}", stderr(&o));
    let mut c = ontoq();
    c.args(["eval", "--program", "-", "--facts"]).arg(data("example.facts"));
    let o = run_with_stdin(c, "goal :- missing(X).\n");
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn timeouts_exit_three() {
    let o = ontoq()
        .args(["answer", "--steps", "12", "--variant", "reduced", "--timeout-ms", "20"])
        .arg("--tgds")
        .arg(data("example.tgd"))
        .arg("--query")
        .arg(data("example.cq"))
        .arg("--facts")
        .arg(data("example-negative.facts"))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn environment_supplies_flag_defaults() {
    let o = ontoq()
        .arg("answer")
        .env("ONTOQ_TGDS", data("example.tgd"))
        .env("ONTOQ_QUERY", data("example.cq"))
        .env("ONTOQ_FACTS", data("example.facts"))
        .env("ONTOQ_STEPS", "6")
        .env("ONTOQ_VARIANT", "bitvec")
        .env("ONTOQ_STATS", "true")
        .output()
        .unwrap();
    assert_eq!(stdout(&o).trim(), "true", "{}", stderr(&o));
    assert!(stderr(&o).contains("variant=bitvec"));
}

#[test]
fn chase_prints_the_witness_trace() {
    let o = ontoq()
        .args(["chase", "--max-steps", "6"])
        .arg("--tgds")
        .arg(data("example.tgd"))
        .arg("--facts")
        .arg(data("example.facts"))
        .arg("--query")
        .arg(data("example.cq"))
        .output()
        .unwrap();
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "true");
    assert_eq!(lines[5], "5\tR5(a,g)\t4\t2,4");
    assert_eq!(lines.len(), 7);

    let o = ontoq()
        .args(["chase", "--max-steps", "5"])
        .arg("--tgds")
        .arg(data("example.tgd"))
        .arg("--facts")
        .arg(data("example.facts"))
        .arg("--query")
        .arg(data("example.cq"))
        .output()
        .unwrap();
    assert_eq!(stdout(&o).trim(), "unknown");
}

#[test]
fn rewrite_emits_each_format() {
    let base = |emit: &str| {
        let mut c = ontoq();
        c.args(["rewrite", "--steps", "6", "--emit", emit])
            .arg("--tgds")
            .arg(data("example.tgd"))
            .arg("--query")
            .arg(data("example.cq"));
        c
    };
    let dl = stdout(&base("dl").output().unwrap());
    assert!(dl.starts_with("%@goal goal/0\n"), "{dl}");
    assert!(dl.contains("%@numeric 7"));

    let sql = base("sql").arg("--facts").arg(data("example.facts")).output().unwrap();
    let text = stdout(&sql);
    assert!(text.contains("CREATE VIEW"), "{text}");
    assert!(text.contains("INSERT INTO"), "{text}");

    let fo = stdout(&base("fo").output().unwrap());
    assert!(!fo.trim().is_empty());

    // The emitted program parses back and evaluates like `answer`.
    let dir = std::env::temp_dir().join(format!("ontoq-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let prog = dir.join("example.dl");
    let o = base("dl").arg("-o").arg(&prog).output().unwrap();
    assert!(o.status.success());
    let o = ontoq()
        .args(["eval", "--steps", "6", "--program"])
        .arg(&prog)
        .arg("--facts")
        .arg(data("example.facts"))
        .output()
        .unwrap();
    assert_eq!(stdout(&o).trim(), "true", "{}", stderr(&o));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn compile_tbox_and_violation_query() {
    let dir = std::env::temp_dir().join(format!("ontoq-tbox-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let vq = dir.join("violation.cq");
    let mut c = ontoq();
    c.args(["compile-tbox", "-", "--violation-query"]).arg(&vq);
    let o = run_with_stdin(c, "A sub exists P.\nexists inv(P) sub B.\nP sub inv(S).\nA and B sub bottom.\n");
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o), "A(X) -> exists Y: P(X,Y).\nP(Y,X) -> B(X).\nP(X,Y) -> S(Y,X).\n");
    let q = std::fs::read_to_string(&vq).unwrap();
    assert!(q.contains("A(X)") && q.contains("B(X)"), "{q}");
    std::fs::remove_dir_all(&dir).ok();

    let mut c = ontoq();
    c.args(["compile-tbox", "-"]);
    let o = run_with_stdin(c, "A sub forall P.B.\n");
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn normalize_reports_sizes() {
    let mut c = ontoq();
    c.args(["normalize", "-", "--stats"]);
    let o = run_with_stdin(c, "A(X) -> exists Y: E(X,Y), F(Y).\n");
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 3, "{out}");
    assert!(out.lines().all(|l| l.contains("->")));
    let err = stderr(&o);
    assert!(err.contains("size_before=3") && err.contains("size_after=6"), "{err}");
}

#[test]
fn verify_writes_json_lines() {
    let o = ontoq().args(["verify", "--seeds", "3", "--report", "-"]).output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 3);
    for line in out.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(v.get("seed").is_some(), "{line}");
    }
    assert!(stderr(&o).contains("instances=3 agree=3"));
}
