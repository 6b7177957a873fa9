//! Text formats for dependencies (`.tgd`), queries (`.cq`), facts (`.facts`)
//! and Datalog programs (`.dl`). The grammar is documented in
//! `docs/formats.md`.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::model::{
    is_variable_name, record_arity, sym, Atom, ConjunctiveQuery, Database, DatalogProgram, ModelError, Query,
    Rule, Schema, Symbol, Term, Tgd,
};

/// 1-based position in the input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Default)]
pub struct SourceSpan {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("{span}: {message}")]
    Syntax { span: SourceSpan, message: String },
    #[error("{span}: {source}")]
    Invalid {
        span: SourceSpan,
        #[source]
        source: ModelError,
    },
}

impl ParseError {
    pub fn span(&self) -> SourceSpan {
        match self {
            ParseError::Syntax { span, .. } | ParseError::Invalid { span, .. } => *span,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Number(u32),
    LParen,
    RParen,
    Comma,
    Dot,
    Colon,
    Arrow,
    Neck,
    Question,
    Pragma(String),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Number(n) => write!(f, "`{n}`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Dot => f.write_str("`.`"),
            Tok::Colon => f.write_str("`:`"),
            Tok::Arrow => f.write_str("`->`"),
            Tok::Neck => f.write_str("`:-`"),
            Tok::Question => f.write_str("`?`"),
            Tok::Pragma(_) => f.write_str("pragma"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, SourceSpan)>, ParseError> {
    let mut out = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let span = SourceSpan { line, column: col };
        let advance = |n: usize, i: &mut usize, col: &mut usize| {
            *i += n;
            *col += n;
        };
        match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => advance(1, &mut i, &mut col),
            '%' => {
                let start = i;
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
                let comment: String = chars[start..i].iter().collect();
                if let Some(rest) = comment.strip_prefix("%@") {
                    out.push((Tok::Pragma(rest.trim().to_string()), span));
                }
                col += i - start;
            }
            '(' => {
                out.push((Tok::LParen, span));
                advance(1, &mut i, &mut col);
            }
            ')' => {
                out.push((Tok::RParen, span));
                advance(1, &mut i, &mut col);
            }
            ',' => {
                out.push((Tok::Comma, span));
                advance(1, &mut i, &mut col);
            }
            '.' => {
                out.push((Tok::Dot, span));
                advance(1, &mut i, &mut col);
            }
            '?' => {
                out.push((Tok::Question, span));
                advance(1, &mut i, &mut col);
            }
            ':' if chars.get(i + 1) == Some(&'-') => {
                out.push((Tok::Neck, span));
                advance(2, &mut i, &mut col);
            }
            ':' => {
                out.push((Tok::Colon, span));
                advance(1, &mut i, &mut col);
            }
            '-' if chars.get(i + 1) == Some(&'>') => {
                out.push((Tok::Arrow, span));
                advance(2, &mut i, &mut col);
            }
            c if c.is_ascii_digit() => {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let s: String = chars[start..i].iter().collect();
                col += i - start;
                let n = s.parse::<u32>().map_err(|_| ParseError::Syntax {
                    span,
                    message: format!("number `{s}` is too large"),
                })?;
                out.push((Tok::Number(n), span));
            }
            c if c.is_ascii_alphabetic() => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                col += i - start;
                out.push((Tok::Ident(chars[start..i].iter().collect()), span));
            }
            other => {
                return Err(ParseError::Syntax {
                    span,
                    message: format!("unexpected character `{other}`"),
                })
            }
        }
    }
    out.push((
        Tok::Eof,
        SourceSpan {
            line,
            column: col,
        },
    ));
    Ok(out)
}

/// How bare numbers inside argument lists are read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum NumberMode {
    Reject,
    /// Digits become constant symbols (fresh copy of the numbers).
    AsConstant,
    AsNumber,
}

struct Parser {
    toks: Vec<(Tok, SourceSpan)>,
    pos: usize,
    numbers: NumberMode,
}

impl Parser {
    fn new(text: &str, numbers: NumberMode) -> Result<Self, ParseError> {
        Ok(Parser {
            toks: lex(text)?,
            pos: 0,
            numbers,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].0
    }

    fn span(&self) -> SourceSpan {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::Syntax {
            span: self.span(),
            message: message.into(),
        })
    }

    fn expect(&mut self, tok: Tok) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            self.err(format!("expected {tok}, found {}", self.peek()))
        }
    }

    fn at_eof(&self) -> bool {
        *self.peek() == Tok::Eof
    }

    fn skip_pragmas(&mut self) -> Vec<(String, SourceSpan)> {
        let mut out = Vec::new();
        while let Tok::Pragma(p) = self.peek().clone() {
            out.push((p, self.span()));
            self.bump();
        }
        out
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.bump() {
            Tok::Ident(s) => Ok(s),
            other => {
                self.pos -= 1;
                self.err(format!("expected identifier, found {other}"))
            }
        }
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                if is_variable_name(&s) {
                    Ok(Term::Var(sym(&s)))
                } else if s.starts_with(|c: char| c.is_ascii_lowercase()) {
                    Ok(Term::Const(sym(&s)))
                } else {
                    self.pos -= 1;
                    self.err(format!("invalid term `{s}`"))
                }
            }
            Tok::Number(n) => match self.numbers {
                NumberMode::AsNumber => {
                    self.bump();
                    Ok(Term::Num(n))
                }
                NumberMode::AsConstant => {
                    self.bump();
                    Ok(Term::Const(sym(&n.to_string())))
                }
                NumberMode::Reject => self.err(format!(
                    "number `{n}` not allowed here (numeric values require the numeric-domain mode)"
                )),
            },
            other => self.err(format!("expected term, found {other}")),
        }
    }

    fn atom(&mut self) -> Result<Atom, ParseError> {
        let pred = self.ident()?;
        let mut args = Vec::new();
        if *self.peek() == Tok::LParen {
            self.bump();
            if *self.peek() != Tok::RParen {
                loop {
                    args.push(self.term()?);
                    if *self.peek() == Tok::Comma {
                        self.bump();
                    } else {
                        break;
                    }
                }
            }
            self.expect(Tok::RParen)?;
        }
        Ok(Atom::new(sym(&pred), args))
    }

    fn atoms(&mut self) -> Result<Vec<Atom>, ParseError> {
        let mut out = vec![self.atom()?];
        while *self.peek() == Tok::Comma {
            self.bump();
            out.push(self.atom()?);
        }
        Ok(out)
    }

    fn var_list(&mut self) -> Result<Vec<Symbol>, ParseError> {
        let mut out = Vec::new();
        loop {
            let span = self.span();
            let v = self.ident()?;
            if !is_variable_name(&v) {
                return Err(ParseError::Syntax {
                    span,
                    message: format!("expected variable, found `{v}`"),
                });
            }
            out.push(sym(&v));
            if *self.peek() == Tok::Comma {
                self.bump();
            } else {
                return Ok(out);
            }
        }
    }
}

fn invalid(span: SourceSpan) -> impl FnOnce(ModelError) -> ParseError {
    move |source| ParseError::Invalid { span, source }
}

/// Parse `Body -> exists Z1,Z2: Head.` / `Body -> Head.` statements.
pub fn parse_tgds(text: &str) -> Result<Vec<Tgd>, ParseError> {
    let mut p = Parser::new(text, NumberMode::Reject)?;
    let mut schema = Schema::new();
    let mut out = Vec::new();
    loop {
        p.skip_pragmas();
        if p.at_eof() {
            return Ok(out);
        }
        let span = p.span();
        let body = p.atoms()?;
        p.expect(Tok::Arrow)?;
        let mut existentials = Vec::new();
        if matches!(p.peek(), Tok::Ident(s) if s == "exists") && matches!(p.peek_at(1), Tok::Ident(_)) {
            p.bump();
            existentials = p.var_list()?;
            p.expect(Tok::Colon)?;
        }
        let head = p.atoms()?;
        p.expect(Tok::Dot)?;
        for a in body.iter().chain(&head) {
            record_arity(&mut schema, a).map_err(invalid(span))?;
        }
        out.push(Tgd::new(body, head, existentials).map_err(invalid(span))?);
    }
}

/// Parse `? :- body.` (Boolean) or `q(X,..) :- body.` rules. Several rules
/// with the same head form a union.
pub fn parse_query(text: &str) -> Result<Query, ParseError> {
    let mut p = Parser::new(text, NumberMode::Reject)?;
    let mut disjuncts: Vec<ConjunctiveQuery> = Vec::new();
    let mut schema = Schema::new();
    loop {
        p.skip_pragmas();
        if p.at_eof() {
            break;
        }
        let span = p.span();
        let (name, output) = if *p.peek() == Tok::Question {
            p.bump();
            (sym("?"), Vec::new())
        } else {
            let name = p.ident()?;
            let mut output = Vec::new();
            if *p.peek() == Tok::LParen {
                p.bump();
                output = p.var_list()?;
                p.expect(Tok::RParen)?;
            }
            (sym(&name), output)
        };
        p.expect(Tok::Neck)?;
        let atoms = p.atoms()?;
        p.expect(Tok::Dot)?;
        for a in &atoms {
            record_arity(&mut schema, a).map_err(invalid(span))?;
        }
        if let Some(first) = disjuncts.first() {
            if first.name() != &name || first.output().len() != output.len() {
                return Err(ParseError::Syntax {
                    span,
                    message: format!("query rule head `{name}/{}` differs from `{}/{}`", output.len(), first.name(), first.output().len()),
                });
            }
        }
        disjuncts.push(ConjunctiveQuery::new(name, atoms, output).map_err(invalid(span))?);
    }
    if disjuncts.is_empty() {
        return p.err("expected at least one query rule");
    }
    Query::from_disjuncts(disjuncts).map_err(invalid(SourceSpan { line: 1, column: 1 }))
}

/// Parse ground facts `pred(c1,...,cn).`. Numbers are rejected.
pub fn parse_facts(text: &str) -> Result<Database, ParseError> {
    parse_facts_with(text, false)
}

/// Parse ground facts; with `numeric_domain` set, digit strings are accepted
/// and read as ordinary constant symbols (a fresh copy of the numbers).
pub fn parse_facts_with(text: &str, numeric_domain: bool) -> Result<Database, ParseError> {
    let mode = if numeric_domain {
        NumberMode::AsConstant
    } else {
        NumberMode::Reject
    };
    let mut p = Parser::new(text, mode)?;
    let mut db = Database::new();
    loop {
        p.skip_pragmas();
        if p.at_eof() {
            return Ok(db);
        }
        let span = p.span();
        let atom = p.atom()?;
        p.expect(Tok::Dot)?;
        if let Some(v) = atom.vars().next() {
            return Err(ParseError::Syntax {
                span,
                message: format!("variable `{v}` in fact"),
            });
        }
        db.insert(atom).map_err(invalid(span))?;
    }
}

/// Parse a Datalog program. Pragmas: `%@goal name/arity`, `%@numeric N`,
/// `%@edb name`.
pub fn parse_program(text: &str) -> Result<DatalogProgram, ParseError> {
    let mut p = Parser::new(text, NumberMode::AsNumber)?;
    let mut program = DatalogProgram::new(sym("goal"), 0);
    let mut rules = Vec::new();
    let mut schema = Schema::new();
    loop {
        for (pragma, span) in p.skip_pragmas() {
            apply_pragma(&mut program, &pragma, span)?;
        }
        if p.at_eof() {
            break;
        }
        let span = p.span();
        let head = p.atom()?;
        let body = if *p.peek() == Tok::Neck {
            p.bump();
            p.atoms()?
        } else {
            Vec::new()
        };
        p.expect(Tok::Dot)?;
        for a in std::iter::once(&head).chain(&body) {
            record_arity(&mut schema, a).map_err(invalid(span))?;
        }
        rules.push(Rule::new(head, body));
    }
    program.rules = rules;
    Ok(program)
}

fn apply_pragma(program: &mut DatalogProgram, pragma: &str, span: SourceSpan) -> Result<(), ParseError> {
    let bad = |m: &str| ParseError::Syntax {
        span,
        message: m.to_string(),
    };
    let mut parts = pragma.split_whitespace();
    match (parts.next(), parts.next()) {
        (Some("goal"), Some(spec)) => {
            let (name, arity) = spec.split_once('/').ok_or_else(|| bad("expected `%@goal name/arity`"))?;
            program.goal = sym(name);
            program.goal_arity = arity.parse().map_err(|_| bad("goal arity must be a number"))?;
        }
        (Some("numeric"), Some(n)) => {
            program.numeric_bound = Some(n.parse().map_err(|_| bad("numeric bound must be a number"))?);
        }
        (Some("edb"), Some(name)) => {
            program.edb.insert(sym(name));
        }
        _ => return Err(bad(&format!("unknown pragma `{pragma}`"))),
    }
    Ok(())
}

pub fn serialize_tgds(sigma: &[Tgd]) -> String {
    sigma.iter().map(|t| format!("{t}\n")).collect()
}

pub fn serialize_query(q: &Query) -> String {
    format!("{q}\n")
}

pub fn serialize_database(db: &Database) -> String {
    db.to_string()
}

pub fn serialize_program(p: &DatalogProgram) -> String {
    p.to_string()
}

/// Predicate names used by a tgd set, for collision checks.
pub fn predicates_of(sigma: &[Tgd]) -> BTreeSet<Symbol> {
    sigma
        .iter()
        .flat_map(|t| t.body().iter().chain(t.head()))
        .map(|a| a.predicate.clone())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    pub const EXAMPLE_TGDS: &str = "
        R1(X,Y) -> exists Z: R4(X,Y,Z).
        R2(Y,Z) -> exists X: R4(X,Y,Z).
        R3(X,Z) -> exists Y: R4(X,Y,Z).
        R4(X1,Y1,Z1), R4(X2,Y2,Z2) -> R5(X1,Z2).
    ";

    #[test]
    fn parses_sigma_one() {
        let t = parse_tgds("R1(X,Y) -> exists Z: R4(X,Y,Z).").unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t[0].body().len(), 1);
        assert_eq!(t[0].head()[0].to_string(), "R4(X,Y,Z)");
        assert_eq!(t[0].existentials(), &[sym("Z")]);
    }

    #[test]
    fn parses_two_atom_body() {
        let t = parse_tgds("R4(X1,Y1,Z1), R4(X2,Y2,Z2) -> R5(X1,Z2).").unwrap();
        assert_eq!(t[0].body().len(), 2);
        assert!(t[0].existentials().is_empty());
    }

    #[test]
    fn rejects_unsafe_head() {
        let e = parse_tgds("R(X) -> S(Y).").unwrap_err();
        assert!(matches!(
            e,
            ParseError::Invalid {
                source: ModelError::UnsafeHeadVariable(_),
                ..
            }
        ));
    }

    #[test]
    fn rejects_arity_conflict_across_statements() {
        let e = parse_tgds("R(X) -> S(X). R(X,Y) -> S(X).").unwrap_err();
        assert!(matches!(e, ParseError::Invalid { source: ModelError::ArityConflict { .. }, .. }));
    }

    #[test]
    fn syntax_error_has_span() {
        let e = parse_tgds("R(X) -> \n  S(X) S(X).").unwrap_err();
        assert_eq!(e.span(), SourceSpan { line: 2, column: 8 });
    }

    #[test]
    fn parses_queries() {
        let q = parse_query("? :- R5(X,Y), R3(Y,X).").unwrap();
        assert!(q.is_boolean());
        assert_eq!(q.disjuncts()[0].atoms().len(), 2);
        let q = parse_query("q(X) :- R1(X,Y).").unwrap();
        assert_eq!(q.disjuncts()[0].output(), &[sym("X")]);
        assert!(parse_query("q(Z) :- R1(X,Y).").is_err());
        let u = parse_query("q(X) :- A(X).\nq(Y) :- B(Y,Z).").unwrap();
        assert!(matches!(u, Query::Union(_)));
    }

    #[test]
    fn parses_facts() {
        let db = parse_facts("R1(a,b). R1(c,d). R2(e,g). R3(g,a). R3(g,h).").unwrap();
        assert_eq!(db.len(), 5);
        assert_eq!(db.schema()[&sym("R1")], 2);
        assert!(parse_facts("").unwrap().is_empty());
        assert!(parse_facts("R1(a,b). R1(a,b,c).").is_err());
        assert!(parse_facts("R1(a,X).").is_err());
        assert!(parse_facts("R1(a,5).").is_err());
        let db = parse_facts_with("R1(a,5).", true).unwrap();
        assert!(db.domain().contains(&sym("5")));
    }

    #[test]
    fn tgd_round_trip() {
        let sigma = parse_tgds(EXAMPLE_TGDS).unwrap();
        let again = parse_tgds(&serialize_tgds(&sigma)).unwrap();
        assert_eq!(sigma.len(), again.len());
        for (a, b) in sigma.iter().zip(&again) {
            assert!(a.alpha_eq(b));
        }
    }

    #[test]
    fn padded_tgds_round_trip() {
        let text = "
            R1(X,Y,X), R1(X,Y,X) -> exists Z: R4(X,Y,Z).
            R2(Y,Z,Y), R2(Y,Z,Y) -> exists X: R4(X,Y,Z).
            R3(X,Z,X), R3(X,Z,X) -> exists Y: R4(X,Y,Z).
            R4(X1,Y1,Z1), R4(X2,Y2,Z2) -> R5(X1,Z2,X1).
        ";
        let sigma = parse_tgds(text).unwrap();
        let again = parse_tgds(&serialize_tgds(&sigma)).unwrap();
        assert!(sigma.iter().zip(&again).all(|(a, b)| a.alpha_eq(b)));
    }

    #[test]
    fn empty_program_serializes_goal_comment() {
        let p = DatalogProgram::new(sym("goal"), 0);
        let s = serialize_program(&p);
        assert_eq!(s, "%@goal goal/0\n");
        assert!(!s.contains("goal."));
        let back = parse_program(&s).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn program_round_trip() {
        let text = "%@goal goal/0\n%@numeric 6\n%@edb R1\ngoal :- T(1,R,0,X), Lt(R,3).\nT(Z,1,0,X) :- R1(X), Num(Z).\n";
        let p = parse_program(text).unwrap();
        assert_eq!(p.numeric_bound, Some(6));
        assert_eq!(parse_program(&serialize_program(&p)).unwrap(), p);
    }
}
