//! Max-priority queue of (possibly stale) upper bounds.
//!
//! Entries are never updated in place. Pushing an index again bumps its
//! version and leaves the old heap entry behind as garbage that `pop_max`
//! and `peek_max` discard when it surfaces. Submodularity only ever lowers
//! keys, so a stale entry is still a valid upper bound until then.
//!
//! Order is by key descending, then index ascending.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{DppError, Result};

#[derive(Clone, Copy, Debug)]
struct Entry {
    key: f64,
    index: usize,
    version: u64,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key
            .total_cmp(&other.key)
            .then_with(|| other.index.cmp(&self.index))
            .then_with(|| self.version.cmp(&other.version))
    }
}

/// `true` iff `(key, index)` ranks strictly above `other` in the queue order.
#[inline]
pub fn ranks_above(key: f64, index: usize, other: (usize, f64)) -> bool {
    match key.total_cmp(&other.1) {
        Ordering::Greater => true,
        Ordering::Less => false,
        Ordering::Equal => index < other.0,
    }
}

#[derive(Clone, Debug)]
pub struct LazyMaxQueue {
    heap: BinaryHeap<Entry>,
    versions: Vec<u64>,
    excluded: Vec<bool>,
    ops: u64,
}

impl LazyMaxQueue {
    /// Empty queue over indices `0..n`.
    pub fn new(n: usize) -> Self {
        Self {
            heap: BinaryHeap::new(),
            versions: vec![0; n],
            excluded: vec![false; n],
            ops: 0,
        }
    }

    /// Heapifies `keys[i]` for every index in O(n).
    pub fn build(keys: &[f64]) -> Self {
        let entries = keys
            .iter()
            .enumerate()
            .map(|(index, &key)| Entry {
                key,
                index,
                version: 0,
            })
            .collect::<Vec<_>>();
        Self {
            heap: BinaryHeap::from(entries),
            versions: vec![0; keys.len()],
            excluded: vec![false; keys.len()],
            ops: 0,
        }
    }

    /// Drops every entry, then heapifies the given `(index, key)` pairs.
    /// Exclusions are kept.
    pub fn rebuild<I: IntoIterator<Item = (usize, f64)>>(&mut self, items: I) {
        let mut entries = std::mem::take(&mut self.heap).into_vec();
        entries.clear();
        for (index, key) in items {
            self.versions[index] += 1;
            entries.push(Entry {
                key,
                index,
                version: self.versions[index],
            });
        }
        self.heap = BinaryHeap::from(entries);
    }

    pub fn push(&mut self, index: usize, key: f64) {
        self.versions[index] += 1;
        self.ops += 1;
        self.heap.push(Entry {
            key,
            index,
            version: self.versions[index],
        });
    }

    /// Marks `index` dead in this queue for good.
    pub fn exclude(&mut self, index: usize) {
        self.excluded[index] = true;
    }

    pub fn is_excluded(&self, index: usize) -> bool {
        self.excluded[index]
    }

    #[inline]
    fn is_live(&self, e: &Entry) -> bool {
        !self.excluded[e.index] && self.versions[e.index] == e.version
    }

    fn discard_dead_top(&mut self) {
        while let Some(top) = self.heap.peek() {
            if self.is_live(top) {
                break;
            }
            self.heap.pop();
        }
    }

    /// Removes and returns the live maximum, if any.
    pub fn try_pop_max(&mut self) -> Option<(usize, f64)> {
        self.discard_dead_top();
        let e = self.heap.pop()?;
        self.ops += 1;
        // The popped entry was the index's only live one.
        self.versions[e.index] += 1;
        Some((e.index, e.key))
    }

    pub fn pop_max(&mut self) -> Result<(usize, f64)> {
        self.try_pop_max().ok_or(DppError::EmptyQueue)
    }

    /// The live maximum without removing it.
    pub fn peek_entry(&mut self) -> Option<(usize, f64)> {
        self.discard_dead_top();
        self.heap.peek().map(|e| (e.index, e.key))
    }

    /// The live maximum key, or `−∞` when nothing is live.
    pub fn peek_max(&mut self) -> f64 {
        self.peek_entry().map_or(f64::NEG_INFINITY, |(_, k)| k)
    }

    /// Pushes plus pops performed so far.
    pub fn ops(&self) -> u64 {
        self.ops
    }

    /// Heap size including garbage entries.
    pub fn raw_len(&self) -> usize {
        self.heap.len()
    }
}
