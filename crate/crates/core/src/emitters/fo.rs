//! First-order rendering of a nonrecursive program by inlining every IDB
//! predicate into the goal.
//!
//! ASCII syntax, loosest binding first:
//!
//! ```text
//! query   := '{' VAR (',' VAR)* '|' formula '}' | formula
//! formula := conj ('|' conj)*
//! conj    := unit ('&' unit)*
//! unit    := 'exists' VAR (',' VAR)* '(' formula ')'
//!          | '(' formula ')' | 'true' | 'false'
//!          | PRED ['(' term (',' term)* ')'] | term '=' term | term '!=' term
//! term    := VAR | const | number
//! ```
//!
//! Quantifiers range over the extended domain; `!=` is Neq.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use super::EmitError;
use crate::gadgets::NEQ;
use crate::model::{Atom, DatalogProgram, Rule, Symbol, Term, Value};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FoTerm {
    Var(Symbol),
    Val(Value),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Fo {
    True,
    False,
    Atom(Symbol, Vec<FoTerm>),
    Eq(FoTerm, FoTerm),
    Neq(FoTerm, FoTerm),
    And(Vec<Fo>),
    Or(Vec<Fo>),
    Exists(Vec<Symbol>, Box<Fo>),
}

/// A formula with its answer variables (empty for sentences).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoQuery {
    pub free: Vec<Symbol>,
    pub formula: Fo,
}

fn and(parts: Vec<Fo>) -> Fo {
    let mut out = Vec::new();
    for p in parts {
        match p {
            Fo::True => {}
            Fo::False => return Fo::False,
            Fo::And(inner) => out.extend(inner),
            other => out.push(other),
        }
    }
    match out.len() {
        0 => Fo::True,
        1 => out.pop().unwrap(),
        _ => Fo::And(out),
    }
}

fn or(parts: Vec<Fo>) -> Fo {
    let mut out = Vec::new();
    for p in parts {
        match p {
            Fo::False => {}
            Fo::True => return Fo::True,
            Fo::Or(inner) => out.extend(inner),
            other => out.push(other),
        }
    }
    match out.len() {
        0 => Fo::False,
        1 => out.pop().unwrap(),
        _ => Fo::Or(out),
    }
}

fn exists(vars: Vec<Symbol>, body: Fo) -> Fo {
    if vars.is_empty() || matches!(body, Fo::True | Fo::False) {
        body
    } else {
        Fo::Exists(vars, Box::new(body))
    }
}

fn fo_term(t: &Term, ren: &BTreeMap<Symbol, FoTerm>) -> FoTerm {
    match t {
        Term::Var(v) => ren[v].clone(),
        c => FoTerm::Val(Value::from_term(c).unwrap()),
    }
}

struct Inliner<'a> {
    rules: BTreeMap<Symbol, Vec<&'a Rule>>,
    used: HashSet<Symbol>,
    /// Next suffix to try per base name, so renaming stays linear.
    next: HashMap<Symbol, usize>,
}

impl Inliner<'_> {
    /// The rule's own name if still unused, else a numbered variant.
    fn fresh(&mut self, v: &Symbol) -> Symbol {
        let mut cand = v.clone();
        let k = self.next.entry(v.clone()).or_insert(1);
        while self.used.contains(&cand) {
            cand = format!("{v}_{k}").into();
            *k += 1;
        }
        self.used.insert(cand.clone());
        cand
    }

    /// Formula equivalent to `p(args)`.
    fn atom(&mut self, p: &Symbol, args: Vec<FoTerm>) -> Fo {
        if &**p == NEQ {
            return Fo::Neq(args[0].clone(), args[1].clone());
        }
        let Some(rules) = self.rules.get(p).cloned() else {
            return Fo::Atom(p.clone(), args);
        };
        let disjuncts = rules.iter().map(|r| self.rule(r, &args)).collect();
        or(disjuncts)
    }

    /// Rule body with the head unified against `args`.
    fn rule(&mut self, r: &Rule, args: &[FoTerm]) -> Fo {
        let mut ren: BTreeMap<Symbol, FoTerm> = BTreeMap::new();
        let mut eqs = Vec::new();
        for (t, a) in r.head.args.iter().zip(args) {
            match t {
                Term::Var(v) => match ren.get(v) {
                    Some(prev) => eqs.push(equal(prev.clone(), a.clone())),
                    None => {
                        ren.insert(v.clone(), a.clone());
                    }
                },
                c => eqs.push(equal(FoTerm::Val(Value::from_term(c).unwrap()), a.clone())),
            }
        }
        let mut bound = Vec::new();
        for v in r.body.iter().flat_map(Atom::vars) {
            if !ren.contains_key(v) {
                let f = self.fresh(v);
                bound.push(f.clone());
                ren.insert(v.clone(), FoTerm::Var(f));
            }
        }
        let mut parts = eqs;
        for b in &r.body {
            let bargs = b.args.iter().map(|t| fo_term(t, &ren)).collect();
            parts.push(self.atom(&b.predicate, bargs));
        }
        exists(bound, and(parts))
    }
}

fn equal(a: FoTerm, b: FoTerm) -> Fo {
    match (&a, &b) {
        (FoTerm::Val(x), FoTerm::Val(y)) => {
            if x == y {
                Fo::True
            } else {
                Fo::False
            }
        }
        _ if a == b => Fo::True,
        _ => Fo::Eq(a, b),
    }
}

/// Inline the program's definitions into one formula for the goal.
pub fn to_fo_formula(program: &DatalogProgram) -> Result<FoQuery, EmitError> {
    if program.topological_order().is_none() {
        return Err(EmitError::Recursive);
    }
    let mut rules: BTreeMap<Symbol, Vec<&Rule>> = BTreeMap::new();
    for r in &program.rules {
        rules.entry(r.head.predicate.clone()).or_default().push(r);
    }
    let has_goal_rules = rules.contains_key(&program.goal);
    let free: Vec<Symbol> = (1..=program.goal_arity).map(|i| Symbol::from(format!("Out{i}"))).collect();
    let mut inl = Inliner {
        rules,
        used: free.iter().cloned().collect(),
        next: HashMap::new(),
    };
    let args = free.iter().map(|v| FoTerm::Var(v.clone())).collect();
    let formula = if has_goal_rules {
        inl.atom(&program.goal, args)
    } else {
        Fo::False
    };
    Ok(FoQuery { free, formula })
}

impl fmt::Display for FoTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FoTerm::Var(v) => f.write_str(v),
            FoTerm::Val(v) => write!(f, "{v}"),
        }
    }
}

impl Fo {
    fn write(&self, f: &mut fmt::Formatter<'_>, ctx: u8) -> fmt::Result {
        // ctx: 0 = top/disjunct, 1 = conjunct.
        match self {
            Fo::True => f.write_str("true"),
            Fo::False => f.write_str("false"),
            Fo::Atom(p, args) => {
                f.write_str(p)?;
                if !args.is_empty() {
                    let a: Vec<String> = args.iter().map(|t| t.to_string()).collect();
                    write!(f, "({})", a.join(","))?;
                }
                Ok(())
            }
            Fo::Eq(a, b) => write!(f, "{a} = {b}"),
            Fo::Neq(a, b) => write!(f, "{a} != {b}"),
            Fo::And(parts) => {
                for (i, p) in parts.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" & ")?;
                    }
                    p.write(f, 1)?;
                }
                Ok(())
            }
            Fo::Or(parts) => {
                if ctx > 0 {
                    f.write_str("(")?;
                }
                for (i, p) in parts.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" | ")?;
                    }
                    p.write(f, 0)?;
                }
                if ctx > 0 {
                    f.write_str(")")?;
                }
                Ok(())
            }
            Fo::Exists(vars, body) => {
                let v: Vec<&str> = vars.iter().map(|v| &**v).collect();
                write!(f, "exists {} (", v.join(","))?;
                body.write(f, 0)?;
                f.write_str(")")
            }
        }
    }

    /// Maximum nesting of quantifier blocks.
    pub fn quantifier_depth(&self) -> usize {
        match self {
            Fo::Exists(_, b) => 1 + b.quantifier_depth(),
            Fo::And(ps) | Fo::Or(ps) => ps.iter().map(Fo::quantifier_depth).max().unwrap_or(0),
            _ => 0,
        }
    }

    /// Number of atomic subformulas.
    pub fn size(&self) -> usize {
        match self {
            Fo::Exists(_, b) => b.size(),
            Fo::And(ps) | Fo::Or(ps) => ps.iter().map(Fo::size).sum(),
            _ => 1,
        }
    }
}

impl fmt::Display for Fo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write(f, 0)
    }
}

impl fmt::Display for FoQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.free.is_empty() {
            write!(f, "{}", self.formula)
        } else {
            let v: Vec<&str> = self.free.iter().map(|v| &**v).collect();
            write!(f, "{{ {} | {} }}", v.join(","), self.formula)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("FO syntax error at byte {pos}: {message}")]
pub struct FoParseError {
    pub pos: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num(u32),
    Sym(&'static str),
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, FoParseError> {
    let b = text.as_bytes();
    let mut i = 0;
    let mut out = Vec::new();
    while i < b.len() {
        let c = b[i];
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() {
            let s = i;
            while i < b.len() && b[i].is_ascii_digit() {
                i += 1;
            }
            let n = text[s..i].parse().map_err(|_| FoParseError {
                pos: s,
                message: "number too large".into(),
            })?;
            out.push((Tok::Num(n), s));
        } else if c.is_ascii_alphabetic() || c == b'_' {
            let s = i;
            while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(text[s..i].to_string()), s));
        } else {
            let sym = ["!=", "(", ")", ",", "&", "|", "=", "{", "}"]
                .into_iter()
                .find(|s| text[i..].starts_with(s))
                .ok_or_else(|| FoParseError {
                    pos: i,
                    message: format!("unexpected `{}`", c as char),
                })?;
            out.push((Tok::Sym(sym), i));
            i += sym.len();
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    at: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|t| &t.0)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.at).map_or(self.end, |t| t.1)
    }

    fn err<T>(&self, message: &str) -> Result<T, FoParseError> {
        Err(FoParseError {
            pos: self.pos(),
            message: message.into(),
        })
    }

    fn eat(&mut self, s: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Sym(x)) if *x == s) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, s: &str) -> Result<(), FoParseError> {
        if self.eat(s) {
            Ok(())
        } else {
            self.err(&format!("expected `{s}`"))
        }
    }

    fn var_list(&mut self) -> Result<Vec<Symbol>, FoParseError> {
        let mut vars = Vec::new();
        loop {
            match self.peek() {
                Some(Tok::Ident(v)) if v.starts_with(|c: char| c.is_ascii_uppercase()) => {
                    vars.push(Symbol::from(v.as_str()));
                    self.at += 1;
                }
                _ => return self.err("expected a variable"),
            }
            if !self.eat(",") {
                return Ok(vars);
            }
        }
    }

    fn formula(&mut self) -> Result<Fo, FoParseError> {
        let mut parts = vec![self.conj()?];
        while self.eat("|") {
            parts.push(self.conj()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { Fo::Or(parts) })
    }

    fn conj(&mut self) -> Result<Fo, FoParseError> {
        let mut parts = vec![self.unit()?];
        while self.eat("&") {
            parts.push(self.unit()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { Fo::And(parts) })
    }

    fn term(&mut self) -> Result<FoTerm, FoParseError> {
        let t = match self.peek() {
            Some(Tok::Num(n)) => FoTerm::Val(Value::Num(*n)),
            Some(Tok::Ident(s)) if s.starts_with(|c: char| c.is_ascii_uppercase()) => FoTerm::Var(s.as_str().into()),
            Some(Tok::Ident(s)) => FoTerm::Val(Value::Const(s.as_str().into())),
            _ => return self.err("expected a term"),
        };
        self.at += 1;
        Ok(t)
    }

    fn comparison(&mut self, left: FoTerm) -> Result<Fo, FoParseError> {
        if self.eat("=") {
            Ok(Fo::Eq(left, self.term()?))
        } else if self.eat("!=") {
            Ok(Fo::Neq(left, self.term()?))
        } else {
            self.err("expected `=` or `!=`")
        }
    }

    fn unit(&mut self) -> Result<Fo, FoParseError> {
        if self.eat("(") {
            let f = self.formula()?;
            self.expect(")")?;
            return Ok(f);
        }
        match self.peek().cloned() {
            Some(Tok::Ident(s)) if s == "exists" => {
                self.at += 1;
                let vars = self.var_list()?;
                self.expect("(")?;
                let body = self.formula()?;
                self.expect(")")?;
                Ok(Fo::Exists(vars, Box::new(body)))
            }
            Some(Tok::Ident(s)) if s == "true" => {
                self.at += 1;
                Ok(Fo::True)
            }
            Some(Tok::Ident(s)) if s == "false" => {
                self.at += 1;
                Ok(Fo::False)
            }
            Some(Tok::Ident(s)) => {
                // Predicate or a term followed by a comparison.
                let next = self.toks.get(self.at + 1).map(|t| &t.0);
                if matches!(next, Some(Tok::Sym("=")) | Some(Tok::Sym("!="))) {
                    let left = self.term()?;
                    return self.comparison(left);
                }
                self.at += 1;
                let mut args = Vec::new();
                if self.eat("(") {
                    loop {
                        args.push(self.term()?);
                        if !self.eat(",") {
                            break;
                        }
                    }
                    self.expect(")")?;
                }
                Ok(Fo::Atom(s.as_str().into(), args))
            }
            Some(Tok::Num(_)) => {
                let left = self.term()?;
                self.comparison(left)
            }
            _ => self.err("expected a formula"),
        }
    }
}

/// Parse the ASCII syntax produced by [`FoQuery`]'s `Display`.
pub fn parse_fo(text: &str) -> Result<FoQuery, FoParseError> {
    let mut p = Parser {
        toks: lex(text)?,
        at: 0,
        end: text.len(),
    };
    let q = if p.eat("{") {
        let free = p.var_list()?;
        p.expect("|")?;
        let formula = p.formula()?;
        p.expect("}")?;
        FoQuery { free, formula }
    } else {
        FoQuery {
            free: Vec::new(),
            formula: p.formula()?,
        }
    };
    if p.at != p.toks.len() {
        return p.err("trailing input");
    }
    Ok(q)
}
