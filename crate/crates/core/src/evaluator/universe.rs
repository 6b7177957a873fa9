//! Interned values and bitset domains over them.

use std::collections::HashMap;

use crate::model::Value;

/// Every value an evaluation can see. Numbers `0..=bound` take ids equal to
/// themselves, so numeric order is id order on that prefix.
#[derive(Debug, Clone)]
pub(crate) struct Universe {
    values: Vec<Value>,
    index: HashMap<Value, u32>,
    pub bound: u32,
}

impl Universe {
    pub fn new(bound: u32) -> Universe {
        let mut u = Universe {
            values: Vec::new(),
            index: HashMap::new(),
            bound,
        };
        for n in 0..=bound {
            u.intern(&Value::Num(n));
        }
        u
    }

    pub fn intern(&mut self, v: &Value) -> u32 {
        if let Some(&id) = self.index.get(v) {
            return id;
        }
        let id = self.values.len() as u32;
        self.values.push(v.clone());
        self.index.insert(v.clone(), id);
        id
    }

    pub fn id(&self, v: &Value) -> Option<u32> {
        self.index.get(v).copied()
    }

    pub fn value(&self, id: u32) -> &Value {
        &self.values[id as usize]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn words(&self) -> usize {
        self.values.len().div_ceil(64).max(1)
    }

    /// Number value of an id, if it is one of `0..=bound`.
    pub fn number(&self, id: u32) -> Option<u32> {
        (id <= self.bound).then_some(id)
    }
}

pub(crate) mod bits {
    pub fn empty(words: usize) -> Vec<u64> {
        vec![0; words]
    }

    pub fn full(words: usize, len: usize) -> Vec<u64> {
        let mut d = vec![0; words];
        for i in 0..len {
            set(&mut d, i as u32);
        }
        d
    }

    pub fn range(words: usize, lo: u32, hi: u32) -> Vec<u64> {
        let mut d = vec![0; words];
        for i in lo..=hi {
            set(&mut d, i);
        }
        d
    }

    pub fn singleton(words: usize, v: u32) -> Vec<u64> {
        let mut d = vec![0; words];
        set(&mut d, v);
        d
    }

    #[inline]
    pub fn set(d: &mut [u64], v: u32) {
        d[(v / 64) as usize] |= 1 << (v % 64);
    }

    #[inline]
    pub fn clear(d: &mut [u64], v: u32) {
        d[(v / 64) as usize] &= !(1 << (v % 64));
    }

    #[inline]
    pub fn has(d: &[u64], v: u32) -> bool {
        d.get((v / 64) as usize).is_some_and(|w| w >> (v % 64) & 1 == 1)
    }

    #[inline]
    pub fn is_empty(d: &[u64]) -> bool {
        d.iter().all(|w| *w == 0)
    }

    #[inline]
    pub fn count(d: &[u64]) -> u32 {
        d.iter().map(|w| w.count_ones()).sum()
    }

    /// The only member, if there is exactly one.
    #[inline]
    pub fn single(d: &[u64]) -> Option<u32> {
        let mut found = None;
        for (i, w) in d.iter().enumerate() {
            if *w != 0 {
                if found.is_some() || w.count_ones() != 1 {
                    return None;
                }
                found = Some(i as u32 * 64 + w.trailing_zeros());
            }
        }
        found
    }

    #[inline]
    pub fn min(d: &[u64]) -> Option<u32> {
        d.iter()
            .enumerate()
            .find(|(_, w)| **w != 0)
            .map(|(i, w)| i as u32 * 64 + w.trailing_zeros())
    }

    #[inline]
    pub fn max(d: &[u64]) -> Option<u32> {
        d.iter()
            .enumerate()
            .rev()
            .find(|(_, w)| **w != 0)
            .map(|(i, w)| i as u32 * 64 + 63 - w.leading_zeros())
    }

    #[inline]
    pub fn disjoint(a: &[u64], b: &[u64]) -> bool {
        a.iter().zip(b).all(|(x, y)| x & y == 0)
    }

    pub fn and_assign(a: &mut [u64], b: &[u64]) {
        for (x, y) in a.iter_mut().zip(b) {
            *x &= y;
        }
    }

    pub fn or_assign(a: &mut [u64], b: &[u64]) {
        for (x, y) in a.iter_mut().zip(b) {
            *x |= y;
        }
    }

    pub fn iter(d: &[u64]) -> impl Iterator<Item = u32> + '_ {
        d.iter().enumerate().flat_map(|(i, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let t = w.trailing_zeros();
                w &= w - 1;
                Some(i as u32 * 64 + t)
            })
        })
    }

    /// Members `>= lo`.
    pub fn keep_from(d: &mut [u64], lo: u32) {
        for (i, w) in d.iter_mut().enumerate() {
            let base = i as u32 * 64;
            if base + 64 <= lo {
                *w = 0;
            } else if base < lo {
                *w &= !0u64 << (lo - base);
            }
        }
    }

    /// Members `<= hi`.
    pub fn keep_upto(d: &mut [u64], hi: u32) {
        for (i, w) in d.iter_mut().enumerate() {
            let base = i as u32 * 64;
            if base > hi {
                *w = 0;
            } else if hi - base < 63 {
                *w &= (1u64 << (hi - base + 1)) - 1;
            }
        }
    }
}
