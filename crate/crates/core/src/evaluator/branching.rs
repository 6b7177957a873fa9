//! Variable and value ordering for goal-rule search.
//!
//! Generic programs branch on min-domain, leaving gate outputs (variables
//! whose value is a function of others) until last. Goal rules that follow
//! the tuple encoding of a chase sequence get a demand-driven order: query
//! rows first, then the rows they depend on through parent indices, then
//! everything else.

use std::collections::{BTreeMap, BTreeSet};

use super::solver::{min_domain, values_ascending, values_descending, Con, Solver, Var};

/// A number held by one variable or by a group of bits (most significant
/// first).
#[derive(Debug, Clone, Default)]
struct Group {
    slot: Option<Var>,
    bits: Vec<Var>,
}

impl Group {
    fn push(&mut self, v: Var, bit: Option<u32>) {
        match bit {
            Some(k) => {
                let idx = (k as usize).saturating_sub(1);
                if self.bits.len() <= idx {
                    self.bits.resize(idx + 1, Var::MAX);
                }
                self.bits[idx] = v;
            }
            None => self.slot = Some(v),
        }
    }

    fn is_empty(&self) -> bool {
        self.slot.is_none() && self.bits.is_empty()
    }

    fn value(&self, s: &Solver) -> Option<u32> {
        if self.bits.is_empty() {
            return s.value(self.slot?).and_then(|id| s.env.universe.number(id));
        }
        let mut acc = 0u32;
        for &v in self.bits.iter().filter(|&&v| v != Var::MAX) {
            acc = acc * 2 + s.value(v)?;
        }
        Some(acc)
    }

    fn open(&self, s: &Solver) -> Option<Var> {
        self.slot
            .iter()
            .chain(&self.bits)
            .copied()
            .find(|&v| v != Var::MAX && s.value(v).is_none())
    }
}

#[derive(Debug, Default)]
struct Row {
    s: Group,
    c: BTreeMap<u32, Group>,
    f: Group,
    rp: Group,
    r: Group,
    x: BTreeMap<u32, Group>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Order {
    Asc,
    Desc,
}

enum Layout {
    Generic,
    Encoding {
        q: Vec<Group>,
        rows: BTreeMap<u32, Row>,
    },
}

pub(crate) struct Brancher {
    layout: Layout,
    plain: Vec<Var>,
    gates: Vec<Var>,
}

/// Split `NAME_i_j…` into a role and indices, stripping `_v`/`_bK`.
fn parse_name(name: &str) -> Option<(&str, Vec<u32>, Option<u32>)> {
    let mut parts: Vec<&str> = name.split('_').collect();
    let mut bit = None;
    if let Some(last) = parts.last() {
        if *last == "v" {
            parts.pop();
        } else if let Some(k) = last.strip_prefix('b').and_then(|k| k.parse().ok()) {
            bit = Some(k);
            parts.pop();
        }
    }
    let role = parts.first()?;
    if !matches!(*role, "Q" | "S" | "C" | "F" | "R" | "RP" | "X") {
        return None;
    }
    let idx = parts[1..].iter().map(|p| p.parse().ok()).collect::<Option<Vec<u32>>>()?;
    let expected = match *role {
        "C" | "X" => 2,
        _ => 1,
    };
    (idx.len() == expected).then_some((role, idx, bit))
}

impl Brancher {
    pub fn new(s: &Solver) -> Brancher {
        let mut gate_set = BTreeSet::new();
        for c in s.constraints() {
            match c {
                Con::IfEq(_, _, b) | Con::Or(_, _, b) | Con::Not(_, b) => {
                    gate_set.insert(*b);
                }
                _ => {}
            }
        }
        let all = 0..s.num_vars() as Var;
        let plain: Vec<Var> = all.clone().filter(|v| !gate_set.contains(v)).collect();
        let gates: Vec<Var> = gate_set.into_iter().collect();

        let mut q: BTreeMap<u32, Group> = BTreeMap::new();
        let mut rows: BTreeMap<u32, Row> = BTreeMap::new();
        for v in all {
            let Some(name) = &s.names[v as usize] else { continue };
            let Some((role, idx, bit)) = parse_name(name) else { continue };
            if role == "Q" {
                q.entry(idx[0]).or_default().push(v, bit);
                continue;
            }
            let row = rows.entry(idx[0]).or_default();
            let g = match role {
                "S" => &mut row.s,
                "F" => &mut row.f,
                "R" => &mut row.r,
                "RP" => &mut row.rp,
                "C" => row.c.entry(idx[1]).or_default(),
                _ => row.x.entry(idx[1]).or_default(),
            };
            g.push(v, bit);
        }
        let layout = if q.is_empty() || !rows.values().any(|r| !r.s.is_empty()) {
            Layout::Generic
        } else {
            Layout::Encoding {
                q: q.into_values().collect(),
                rows,
            }
        };
        Brancher { layout, plain, gates }
    }

    pub fn select(&self, s: &Solver) -> Option<(Var, Vec<u32>)> {
        if let Layout::Encoding { q, rows } = &self.layout {
            if let Some(pick) = self.select_encoding(s, q, rows) {
                return Some(pick);
            }
        }
        min_domain(s, &self.plain)
            .or_else(|| min_domain(s, &self.gates))
            .map(|v| (v, values_ascending(s, v)))
    }

    fn select_encoding(&self, s: &Solver, q: &[Group], rows: &BTreeMap<u32, Row>) -> Option<(Var, Vec<u32>)> {
        let pick = |v: Var, o: Order| {
            Some((
                v,
                match o {
                    Order::Asc => values_ascending(s, v),
                    Order::Desc => values_descending(s, v),
                },
            ))
        };
        for g in q {
            if let Some(v) = g.open(s) {
                return pick(v, Order::Desc);
            }
        }
        // Rows reachable from query rows through parent indices.
        let mut demanded: BTreeSet<u32> = q.iter().filter_map(|g| g.value(s)).collect();
        let mut stack: Vec<u32> = demanded.iter().copied().collect();
        while let Some(i) = stack.pop() {
            let Some(row) = rows.get(&i) else { continue };
            if row.s.value(s).is_some_and(|x| x != 0) {
                for c in row.c.values() {
                    if let Some(j) = c.value(s).filter(|&j| j != 0) {
                        if demanded.insert(j) {
                            stack.push(j);
                        }
                    }
                }
            }
        }
        for phase in [Phase::Structure, Phase::Kind, Phase::Values] {
            for i in demanded.iter().rev() {
                if let Some((v, o)) = rows.get(i).and_then(|row| row_open(s, row, phase)) {
                    return pick(v, o);
                }
            }
        }
        for phase in [Phase::Structure, Phase::Kind, Phase::Values] {
            for (i, row) in rows {
                if !demanded.contains(i) {
                    if let Some((v, o)) = row_open(s, row, phase) {
                        return pick(v, o);
                    }
                }
            }
        }
        None
    }
}

/// Rows are decided in three sweeps: derivation structure (rule and
/// parents), then relation and origin, then values.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Phase {
    Structure,
    Kind,
    Values,
}

fn row_open(s: &Solver, row: &Row, phase: Phase) -> Option<(Var, Order)> {
    match phase {
        Phase::Structure => {
            if let Some(v) = row.s.open(s) {
                return Some((v, Order::Asc));
            }
            row.c.values().find_map(|c| c.open(s)).map(|v| (v, Order::Desc))
        }
        Phase::Kind => [&row.f, &row.rp, &row.r].into_iter().find_map(|g| g.open(s)).map(|v| (v, Order::Asc)),
        Phase::Values => row.x.values().find_map(|g| g.open(s)).map(|v| (v, Order::Asc)),
    }
}
