//! The numeric encoding of a chase sequence, one row per step.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::{query_pos, row_c, row_f, row_r, row_s, row_x, BitVectorLayout};
use crate::chase::{ChaseValue, Provenance, Witness};
use crate::model::{sym, Database, Symbol, Term, Value, Variant};
use crate::normalizer::UniformizedProblem;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TupleEncoding {
    pub i: u32,
    pub r: u32,
    pub f: u32,
    pub x: Vec<Value>,
    pub s: u32,
    pub c: Vec<u32>,
}

/// Encode a witness found over the uniformized problem (padded database,
/// padded tgds), extended to `n` rows with database tuples. Also returns the
/// step each query atom maps to.
pub fn encode_witness(
    u: &UniformizedProblem,
    padded_db: &Database,
    witness: &Witness,
    n: u32,
) -> Result<(Vec<TupleEncoding>, Vec<u32>), String> {
    let steps = &witness.sequence.steps;
    if steps.len() > n as usize {
        return Err(format!("witness has {} steps, more than N = {n}", steps.len()));
    }
    let mut rows = Vec::new();
    for (idx, step) in steps.iter().enumerate() {
        let r = u
            .relation_number(&step.atom.predicate)
            .ok_or_else(|| format!("unknown relation {}", step.atom.predicate))? as u32;
        let x = step
            .atom
            .args
            .iter()
            .map(|v| match v {
                ChaseValue::Const(c) => Value::Const(c.clone()),
                ChaseValue::Null(j) => Value::Num(*j),
            })
            .collect();
        let (f, s, c) = match &step.provenance {
            Provenance::Database => (0, 0, vec![0; u.k]),
            Provenance::Derived { rule, parents, .. } => {
                (1, *rule as u32 + 1, parents.iter().map(|p| *p as u32 + 1).collect())
            }
        };
        rows.push(TupleEncoding {
            i: idx as u32 + 1,
            r,
            f,
            x,
            s,
            c,
        });
    }
    if rows.len() < n as usize {
        let filler = padded_db
            .facts()
            .iter()
            .find_map(|f| u.relation_number(&f.predicate).map(|r| (r, f)))
            .ok_or("no database tuple to extend the sequence with")?;
        while rows.len() < n as usize {
            rows.push(TupleEncoding {
                i: rows.len() as u32 + 1,
                r: filler.0 as u32,
                f: 0,
                x: filler.1.args.iter().filter_map(Value::from_term).collect(),
                s: 0,
                c: vec![0; u.k],
            });
        }
    }
    let cq = &u.query_u.disjuncts()[witness.disjunct];
    let mut q_rows = Vec::new();
    for a in cq.atoms() {
        let image: Vec<ChaseValue> = a
            .args
            .iter()
            .map(|t| match t {
                Term::Var(v) => witness.homomorphism.get(v).cloned().ok_or("unbound query variable"),
                Term::Const(c) => Ok(ChaseValue::Const(c.clone())),
                Term::Num(_) => Err("number in query"),
            })
            .collect::<Result<_, _>>()?;
        let pos = steps
            .iter()
            .position(|s| s.atom.predicate == a.predicate && s.atom.args == image)
            .ok_or("query image not in witness")?;
        q_rows.push(pos as u32 + 1);
    }
    Ok((rows, q_rows))
}

/// Variable bindings of the goal rule that realize an encoding.
pub fn encoding_bindings(
    rows: &[TupleEncoding],
    q_rows: &[u32],
    variant: Variant,
    layout: Option<BitVectorLayout>,
) -> BTreeMap<Symbol, Value> {
    let mut plain: Vec<(String, Value, bool)> = Vec::new();
    for row in rows {
        let i = row.i;
        plain.push((row_r(i), Value::Num(row.r), true));
        plain.push((row_f(i), Value::Num(row.f), false));
        plain.push((row_s(i), Value::Num(row.s), true));
        for (p, v) in row.x.iter().enumerate() {
            plain.push((row_x(i, p), v.clone(), true));
        }
        for (j, c) in row.c.iter().enumerate() {
            plain.push((row_c(i, j), Value::Num(*c), true));
        }
    }
    for (t, r) in q_rows.iter().enumerate() {
        plain.push((query_pos(t), Value::Num(*r), true));
    }
    let mut out = BTreeMap::new();
    for (name, value, expand) in plain {
        match (variant, layout) {
            (Variant::Bitvec, Some(layout)) if expand => {
                let (slot, n) = match &value {
                    Value::Const(_) => (Some(value.clone()), 0),
                    Value::Num(n) => (None, *n),
                };
                let is_val = name.starts_with("X_");
                if is_val {
                    out.insert(sym(&format!("{name}_v")), slot.unwrap_or(Value::Num(0)));
                }
                for (b, bit) in layout.bits(n).into_iter().enumerate() {
                    out.insert(sym(&format!("{name}_b{}", b + 1)), Value::Num(bit));
                }
            }
            _ => {
                out.insert(sym(&name), value);
            }
        }
    }
    out
}

/// Read an encoding back from a goal-rule assignment (any variant).
pub fn decode_assignment(assignment: &BTreeMap<Symbol, Value>, n: u32, a: usize, k: usize) -> Option<Vec<TupleEncoding>> {
    let num = |name: &str| -> Option<u32> {
        if let Some(Value::Num(v)) = assignment.get(name) {
            return Some(*v);
        }
        let mut acc = 0u32;
        let mut found = false;
        for b in 1.. {
            match assignment.get(format!("{name}_b{b}").as_str()) {
                Some(Value::Num(bit)) => {
                    acc = acc * 2 + bit;
                    found = true;
                }
                _ => break,
            }
        }
        found.then_some(acc)
    };
    let val = |name: &str| -> Option<Value> {
        if let Some(v) = assignment.get(name) {
            return Some(v.clone());
        }
        match assignment.get(format!("{name}_v").as_str())? {
            Value::Const(c) => Some(Value::Const(c.clone())),
            Value::Num(_) => num(name).map(Value::Num),
        }
    };
    (1..=n)
        .map(|i| {
            Some(TupleEncoding {
                i,
                r: num(&row_r(i))?,
                f: num(&row_f(i))?,
                x: (0..a).map(|p| val(&row_x(i, p))).collect::<Option<_>>()?,
                s: num(&row_s(i))?,
                c: (0..k).map(|j| num(&row_c(i, j))).collect::<Option<_>>()?,
            })
        })
        .collect()
}

/// Table in the layout `i r f x1..xa s c1..ck`.
pub fn format_encoding_table(rows: &[TupleEncoding]) -> String {
    let a = rows.first().map_or(0, |r| r.x.len());
    let k = rows.first().map_or(0, |r| r.c.len());
    let mut header = vec!["i".to_string(), "r".into(), "f".into()];
    header.extend((1..=a).map(|p| format!("x{p}")));
    header.push("s".into());
    header.extend((1..=k).map(|j| format!("c{j}")));
    let mut lines = vec![header];
    for r in rows {
        let mut l = vec![r.i.to_string(), r.r.to_string(), r.f.to_string()];
        l.extend(r.x.iter().map(|v| v.to_string()));
        l.push(r.s.to_string());
        l.extend(r.c.iter().map(|c| c.to_string()));
        lines.push(l);
    }
    let widths: Vec<usize> = (0..lines[0].len())
        .map(|c| lines.iter().map(|l| l[c].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for l in lines {
        let cells: Vec<String> = l.iter().zip(&widths).map(|(s, w)| format!("{s:>w$}")).collect();
        let _ = writeln!(out, "{}", cells.join(" "));
    }
    out
}
