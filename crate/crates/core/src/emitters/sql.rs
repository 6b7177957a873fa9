//! SQL view stacks: base tables for the database and the numeric
//! extension, one view per IDB predicate, and a final goal query.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::Write as _;

use super::EmitError;
use crate::gadgets::{self, LT, NEQ, NUM, ONE, SUCC, ZERO};
use crate::model::{Atom, Database, DatalogProgram, Schema, Symbol, Term, Value};
use crate::rewriter::numeric_bound;

/// Reserved words (SQL-92 plus a few common extensions) that cannot name a
/// table or view unquoted.
const KEYWORDS: &[&str] = &[
    "absolute", "action", "add", "all", "allocate", "alter", "and", "any", "are", "as", "asc", "assertion", "at",
    "authorization", "avg", "begin", "between", "bit", "both", "by", "cascade", "cascaded", "case", "cast", "catalog",
    "char", "character", "check", "close", "coalesce", "collate", "collation", "column", "commit", "connect",
    "connection", "constraint", "constraints", "continue", "convert", "corresponding", "count", "create", "cross",
    "current", "current_date", "current_time", "current_timestamp", "current_user", "cursor", "date", "day",
    "deallocate", "dec", "decimal", "declare", "default", "deferrable", "deferred", "delete", "desc", "describe",
    "descriptor", "diagnostics", "disconnect", "distinct", "domain", "double", "drop", "else", "end", "escape",
    "except", "exception", "exec", "execute", "exists", "external", "extract", "false", "fetch", "first", "float",
    "for", "foreign", "found", "from", "full", "get", "global", "go", "goto", "grant", "group", "having", "hour",
    "identity", "immediate", "in", "index", "indicator", "initially", "inner", "input", "insensitive", "insert", "int",
    "integer", "intersect", "interval", "into", "is", "isolation", "join", "key", "language", "last", "leading",
    "left", "level", "like", "limit", "local", "lower", "match", "max", "min", "minute", "module", "month", "names",
    "national", "natural", "nchar", "next", "no", "not", "null", "nullif", "numeric", "of", "offset", "on", "only",
    "open", "option", "or", "order", "outer", "output", "overlaps", "pad", "partial", "position", "precision",
    "prepare", "preserve", "primary", "prior", "privileges", "procedure", "public", "read", "real", "references",
    "relative", "restrict", "revoke", "right", "rollback", "rows", "schema", "scroll", "second", "section", "select",
    "session", "session_user", "set", "size", "smallint", "some", "space", "sql", "sqlcode", "sqlerror", "sqlstate",
    "substring", "sum", "system_user", "table", "temporary", "then", "time", "timestamp", "timezone_hour",
    "timezone_minute", "to", "trailing", "transaction", "translate", "translation", "trim", "true", "union", "unique",
    "unknown", "update", "upper", "usage", "user", "using", "value", "values", "varchar", "varying", "view", "when",
    "whenever", "where", "with", "work", "write", "year", "zone",
];

/// Text stored for a value. Numbers are decimal; constants spelled with
/// digits only (possible in numeric-domain fact files) get a `c:` prefix so
/// they never meet a number; so do constants already starting with `c:`.
pub fn sql_value(v: &Value) -> String {
    match v {
        Value::Num(n) => n.to_string(),
        Value::Const(c) if c.chars().all(|ch| ch.is_ascii_digit()) || c.starts_with("c:") => format!("c:{c}"),
        Value::Const(c) => c.to_string(),
    }
}

/// Inverse of [`sql_value`].
pub fn parse_sql_value(s: &str) -> Value {
    if let Some(c) = s.strip_prefix("c:") {
        Value::Const(c.into())
    } else if let Ok(n) = s.parse() {
        Value::Num(n)
    } else {
        Value::Const(s.into())
    }
}

fn literal(v: &Value) -> String {
    format!("'{}'", sql_value(v).replace('\'', "''"))
}

fn term_literal(t: &Term) -> String {
    literal(&Value::from_term(t).expect("ground term"))
}

/// Emitted script: DDL/DML statements plus the final goal query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SqlScript {
    /// CREATE/INSERT statements, `;`-terminated.
    pub setup: String,
    /// The goal query: `SELECT EXISTS(...)` for Boolean goals, else the
    /// goal relation.
    pub query: String,
    pub boolean: bool,
    /// Predicates renamed to avoid keywords or case clashes.
    pub renamed: Vec<(String, String)>,
}

impl SqlScript {
    pub fn text(&self) -> String {
        format!("{}{}\n", self.setup, self.query)
    }
}

struct Namer {
    used: HashSet<String>,
    map: BTreeMap<Symbol, String>,
    renamed: Vec<(String, String)>,
}

impl Namer {
    fn new() -> Namer {
        Namer {
            used: HashSet::new(),
            map: BTreeMap::new(),
            renamed: Vec::new(),
        }
    }

    fn name(&mut self, p: &Symbol) -> String {
        if let Some(n) = self.map.get(p) {
            return n.clone();
        }
        let base = p.to_string();
        let mut cand = base.clone();
        let mut k = 1;
        while KEYWORDS.contains(&cand.to_ascii_lowercase().as_str()) || self.used.contains(&cand.to_ascii_lowercase()) {
            cand = format!("{base}_{k}");
            k += 1;
        }
        if cand != base {
            self.renamed.push((base, cand.clone()));
        }
        self.used.insert(cand.to_ascii_lowercase());
        self.map.insert(p.clone(), cand.clone());
        cand
    }
}

fn columns(arity: usize) -> Vec<String> {
    if arity == 0 {
        vec!["c0".into()]
    } else {
        (1..=arity).map(|i| format!("c{i}")).collect()
    }
}

fn create_table(out: &mut String, name: &str, arity: usize) {
    let cols: Vec<String> = columns(arity).into_iter().map(|c| format!("{c} VARCHAR(255) NOT NULL")).collect();
    let _ = writeln!(out, "CREATE TABLE {name} ({});", cols.join(", "));
}

fn insert(out: &mut String, name: &str, rows: impl IntoIterator<Item = Vec<String>>) {
    for row in rows {
        let _ = writeln!(out, "INSERT INTO {name} VALUES ({});", row.join(", "));
    }
}

/// Emit the script for `program` over a database with the given schema.
pub fn to_sql(program: &DatalogProgram, schema: &Schema, n: u32) -> Result<SqlScript, EmitError> {
    emit(program, schema, None, n)
}

/// Like [`to_sql`], also inserting the facts of `db`.
pub fn to_sql_with_facts(program: &DatalogProgram, db: &Database, n: u32) -> Result<SqlScript, EmitError> {
    emit(program, db.schema(), Some(db), n)
}

fn emit(program: &DatalogProgram, schema: &Schema, db: Option<&Database>, n: u32) -> Result<SqlScript, EmitError> {
    let order = program.topological_order().ok_or(EmitError::Recursive)?;
    let idb: BTreeSet<Symbol> = program.idb();
    let mut arity: BTreeMap<Symbol, usize> = schema.clone();
    for r in &program.rules {
        for a in std::iter::once(&r.head).chain(&r.body) {
            arity.entry(a.predicate.clone()).or_insert(a.arity());
        }
    }
    if !arity.contains_key(&program.goal) {
        arity.insert(program.goal.clone(), program.goal_arity);
    }
    let m = numeric_bound(program, n);
    let mut namer = Namer::new();
    let mut out = String::new();

    // Numeric extension.
    let num = |i: u32| literal(&Value::Num(i));
    let builtin_rows: [(&str, usize, Vec<Vec<String>>); 5] = [
        (NUM, 1, (1..=m).map(|i| vec![num(i)]).collect()),
        (SUCC, 2, (0..m).map(|i| vec![num(i), num(i + 1)]).collect()),
        (LT, 2, (0..=m).flat_map(|i| (i + 1..=m).map(move |j| vec![num(i), num(j)])).collect()),
        (ZERO, 1, vec![vec![num(0)]]),
        (ONE, 1, vec![vec![num(1)]]),
    ];
    for (b, a, rows) in builtin_rows {
        let name = namer.name(&b.into());
        create_table(&mut out, &name, a);
        insert(&mut out, &name, rows);
    }

    // Database relations.
    for (p, &a) in &arity {
        if idb.contains(p) || gadgets::is_builtin(p) {
            continue;
        }
        let name = namer.name(p);
        create_table(&mut out, &name, a);
        if let Some(db) = db {
            insert(
                &mut out,
                &name,
                db.relation(p).map(|f| {
                    if f.arity() == 0 {
                        vec![num(1)]
                    } else {
                        f.args.iter().map(term_literal).collect()
                    }
                }),
            );
        }
    }

    // Extended domain, needed when a variable is only bound by Neq.
    let needs_dom = program.rules.iter().any(|r| !neq_only_vars(&r.body).is_empty());
    let dom_name = if needs_dom {
        let name = namer.name(&"Dom".into());
        let mut parts: Vec<String> = vec![format!("SELECT c1 FROM {}", namer.name(&NUM.into())), format!("SELECT c1 FROM {}", namer.name(&ZERO.into()))];
        for (p, &a) in &arity {
            if idb.contains(p) || gadgets::is_builtin(p) {
                continue;
            }
            for c in 1..=a {
                parts.push(format!("SELECT c{c} AS c1 FROM {}", namer.name(p)));
            }
        }
        let consts: BTreeSet<Value> = program
            .rules
            .iter()
            .flat_map(|r| std::iter::once(&r.head).chain(&r.body))
            .flat_map(|a| a.args.iter().filter_map(Value::from_term))
            .collect();
        let one = namer.name(&ONE.into());
        for c in consts {
            parts.push(format!("SELECT {} AS c1 FROM {one}", literal(&c)));
        }
        let _ = writeln!(out, "CREATE VIEW {name} (c1) AS\n  {};", parts.join("\n  UNION "));
        Some(name)
    } else {
        None
    };

    for p in &order {
        let name = namer.name(p);
        let a = arity[p];
        let mut selects = Vec::new();
        let mut aux = Vec::new();
        for r in program.rules.iter().filter(|r| &r.head.predicate == p) {
            selects.push(rule_select(&r.head, &r.body, &mut namer, dom_name.as_deref(), &mut aux));
        }
        for v in aux {
            let _ = writeln!(out, "{v}");
        }
        let cols = columns(a).join(", ");
        let _ = writeln!(out, "CREATE VIEW {name} ({cols}) AS\n  {};", selects.join("\n  UNION "));
    }

    let goal = namer.name(&program.goal);
    let boolean = program.goal_arity == 0;
    let query = if !idb.contains(&program.goal) {
        // A goal without rules is empty.
        if boolean {
            "SELECT 0 AS answer;".to_string()
        } else {
            format!("SELECT {} FROM {} WHERE 1 = 0;", columns(program.goal_arity).join(", "), namer.name(&ONE.into()))
        }
    } else if boolean {
        format!("SELECT EXISTS (SELECT 1 FROM {goal}) AS answer;")
    } else {
        let cols = columns(program.goal_arity).join(", ");
        format!("SELECT DISTINCT {cols} FROM {goal} ORDER BY {cols};")
    };
    Ok(SqlScript {
        setup: out,
        query,
        boolean,
        renamed: namer.renamed,
    })
}

/// Variables that occur in Neq atoms and nowhere else in the body.
fn neq_only_vars(body: &[Atom]) -> BTreeSet<Symbol> {
    let bound: BTreeSet<&Symbol> = body.iter().filter(|a| &*a.predicate != NEQ).flat_map(|a| a.vars()).collect();
    body.iter()
        .filter(|a| &*a.predicate == NEQ)
        .flat_map(|a| a.vars())
        .filter(|v| !bound.contains(v))
        .cloned()
        .collect()
}

/// Most tables joined by one SELECT; longer bodies continue in nested
/// `EXISTS` subqueries. SQLite caps a join at 64 tables.
pub(super) const MAX_JOIN: usize = 60;

/// Deepest `EXISTS` nesting emitted. SQLite's parser stack and expression
/// depth limits reject much deeper queries, so longer bodies fall back to a
/// chain of intermediate views.
pub(super) const MAX_NEST: usize = 3;

struct Source {
    table: String,
    args: Vec<Term>,
}

fn rule_select(head: &Atom, body: &[Atom], namer: &mut Namer, dom: Option<&str>, aux: &mut Vec<String>) -> String {
    let mut sources: Vec<Source> = body
        .iter()
        .filter(|a| &*a.predicate != NEQ)
        .map(|a| Source {
            table: namer.name(&a.predicate),
            args: a.args.clone(),
        })
        .collect();
    for v in neq_only_vars(body) {
        sources.push(Source {
            table: dom.expect("domain view emitted").to_string(),
            args: vec![Term::Var(v)],
        });
    }
    let neqs: Vec<(Term, Term)> = body
        .iter()
        .filter(|a| &*a.predicate == NEQ)
        .map(|a| (a.args[0].clone(), a.args[1].clone()))
        .collect();
    let one = namer.name(&ONE.into());
    if sources.len() > MAX_JOIN && sources.len() <= MAX_JOIN * MAX_NEST {
        // The outermost join must bind every head variable.
        let mut front = Vec::new();
        for t in &head.args {
            if let Some(i) = sources.iter().position(|s| s.args.contains(t)) {
                if t.is_var() && !front.contains(&i) {
                    front.push(i);
                }
            }
        }
        front.sort_unstable();
        let mut moved: Vec<Source> = front.iter().rev().map(|&i| sources.remove(i)).collect();
        moved.reverse();
        moved.extend(sources);
        sources = moved;
    }
    if sources.len() <= MAX_JOIN * MAX_NEST {
        let chunks: Vec<&[Source]> = if sources.is_empty() {
            vec![&[]]
        } else {
            sources.chunks(MAX_JOIN).collect()
        };
        return nested_select(&chunks, &head.args, &neqs, &one, &mut Scope::new(neqs.len()));
    }
    // Too deep for nesting: chain intermediate views that carry only the
    // variables needed further on.
    while sources.len() > MAX_JOIN {
        let rest = sources.split_off(MAX_JOIN);
        let later: BTreeSet<&Symbol> = rest
            .iter()
            .flat_map(|s| s.args.iter())
            .chain(&head.args)
            .chain(neqs.iter().flat_map(|(a, b)| [a, b]))
            .filter_map(|t| match t {
                Term::Var(v) => Some(v),
                _ => None,
            })
            .collect();
        let mut carried: Vec<Term> = Vec::new();
        for t in sources.iter().flat_map(|s| &s.args) {
            if let Term::Var(v) = t {
                if later.contains(v) && !carried.contains(t) {
                    carried.push(t.clone());
                }
            }
        }
        let name = namer.name(&format!("{}_part{}", head.predicate, aux.len() + 1).into());
        let cols = columns(carried.len()).join(", ");
        let select = nested_select(&[&sources], &carried, &[], &one, &mut Scope::new(0));
        aux.push(format!("CREATE VIEW {name} ({cols}) AS\n  {select};"));
        let mut next = vec![Source {
            table: name,
            args: carried,
        }];
        next.extend(rest);
        sources = next;
    }
    nested_select(&[&sources], &head.args, &neqs, &one, &mut Scope::new(neqs.len()))
}

struct Scope {
    col_of: BTreeMap<Symbol, String>,
    aliases: usize,
    /// Which Neq conditions some level already checks.
    placed: Vec<bool>,
}

impl Scope {
    fn new(neqs: usize) -> Scope {
        Scope {
            col_of: BTreeMap::new(),
            aliases: 0,
            placed: vec![false; neqs],
        }
    }
}

/// `SELECT DISTINCT` of `outputs` (as `c1..`, or a constant `c0` when
/// empty) over the join of the first chunk. Each further chunk becomes a
/// correlated `EXISTS` subquery nested in the previous one, so the engine
/// searches depth first instead of materializing partial joins.
fn nested_select(chunks: &[&[Source]], outputs: &[Term], neqs: &[(Term, Term)], one: &str, scope: &mut Scope) -> String {
    let mut from: Vec<String> = Vec::new();
    let mut conds: Vec<String> = Vec::new();
    for src in chunks[0] {
        let alias = format!("t{}", scope.aliases);
        scope.aliases += 1;
        from.push(format!("{} {alias}", src.table));
        for (i, t) in src.args.iter().enumerate() {
            let col = format!("{alias}.c{}", i + 1);
            match t {
                Term::Var(v) => match scope.col_of.get(v) {
                    Some(first) => conds.push(format!("{col} = {first}")),
                    None => {
                        scope.col_of.insert(v.clone(), col);
                    }
                },
                c => conds.push(format!("{col} = {}", term_literal(c))),
            }
        }
    }
    if from.is_empty() {
        from.push(format!("{one} t{}", scope.aliases));
        scope.aliases += 1;
    }
    let bound = |t: &Term, col_of: &BTreeMap<Symbol, String>| match t {
        Term::Var(v) => col_of.get(v).cloned(),
        c => Some(term_literal(c)),
    };
    for (k, (a, b)) in neqs.iter().enumerate() {
        if scope.placed[k] {
            continue;
        }
        if let (Some(x), Some(y)) = (bound(a, &scope.col_of), bound(b, &scope.col_of)) {
            conds.push(format!("{x} <> {y}"));
            scope.placed[k] = true;
        }
    }
    let sel: Vec<String> = if outputs.is_empty() {
        vec!["'1' AS c0".into()]
    } else {
        outputs
            .iter()
            .enumerate()
            .map(|(i, t)| format!("{} AS c{}", bound(t, &scope.col_of).expect("head variable bound in the outer join"), i + 1))
            .collect()
    };
    // Kept last so the subquery sits at the top of the AND chain, which
    // keeps the expression tree shallow.
    if chunks.len() > 1 {
        conds.push(format!("EXISTS ({})", nested_select(&chunks[1..], &[], neqs, one, scope)));
    }
    let mut s = format!("SELECT DISTINCT {} FROM {}", sel.join(", "), from.join(", "));
    if !conds.is_empty() {
        s += &format!(" WHERE {}", conds.join(" AND "));
    }
    s
}
