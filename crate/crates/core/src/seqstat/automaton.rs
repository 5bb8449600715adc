//! Online suffix automaton tracking the longest repeated suffix.

use alloc::vec;
use alloc::vec::Vec;

const NONE: u32 = u32::MAX;

/// Alphabets at most this large use a flat transition table.
const DENSE_ALPHABET_LIMIT: usize = 8;

enum Transitions {
    Dense { width: usize, table: Vec<u32> },
    Sparse(Vec<Vec<(u32, u32)>>),
}

impl Transitions {
    fn new(alphabet_size: usize, capacity: usize) -> Self {
        if alphabet_size <= DENSE_ALPHABET_LIMIT {
            let width = alphabet_size.max(1);
            let mut table = Vec::with_capacity(capacity * width);
            table.resize(width, NONE);
            Transitions::Dense { width, table }
        } else {
            let mut rows = Vec::with_capacity(capacity);
            rows.push(Vec::new());
            Transitions::Sparse(rows)
        }
    }

    fn add_state(&mut self) {
        match self {
            Transitions::Dense { width, table } => table.resize(table.len() + *width, NONE),
            Transitions::Sparse(rows) => rows.push(Vec::new()),
        }
    }

    #[inline]
    fn get(&self, state: u32, symbol: u32) -> u32 {
        match self {
            Transitions::Dense { width, table } => table[state as usize * *width + symbol as usize],
            Transitions::Sparse(rows) => {
                let row = &rows[state as usize];
                match row.binary_search_by_key(&symbol, |&(c, _)| c) {
                    Ok(pos) => row[pos].1,
                    Err(_) => NONE,
                }
            }
        }
    }

    #[inline]
    fn set(&mut self, state: u32, symbol: u32, target: u32) {
        match self {
            Transitions::Dense { width, table } => table[state as usize * *width + symbol as usize] = target,
            Transitions::Sparse(rows) => {
                let row = &mut rows[state as usize];
                match row.binary_search_by_key(&symbol, |&(c, _)| c) {
                    Ok(pos) => row[pos].1 = target,
                    Err(pos) => row.insert(pos, (symbol, target)),
                }
            }
        }
    }

    fn copy_state(&mut self, from: u32, to: u32) {
        match self {
            Transitions::Dense { width, table } => {
                let (f, t) = (from as usize * *width, to as usize * *width);
                table.copy_within(f..f + *width, t);
            }
            Transitions::Sparse(rows) => {
                let row = rows[from as usize].clone();
                rows[to as usize] = row;
            }
        }
    }
}

/// Suffix automaton of a growing sequence.
///
/// After every [`push`](RepeatTracker::push) it exposes the length of the
/// longest suffix of the current prefix that occurs at least twice in it
/// (overlaps allowed), and the running maximum of that quantity, which is the
/// maximal repetition length of the prefix.
pub struct RepeatTracker {
    len: Vec<u32>,
    link: Vec<u32>,
    next: Transitions,
    alphabet_size: usize,
    last: u32,
    appended: usize,
    current: usize,
    max_repeat: usize,
}

impl RepeatTracker {
    pub fn new(alphabet_size: usize) -> Self {
        Self::with_capacity(alphabet_size, 0)
    }

    /// `expected_len` pre-allocates room for that many symbols.
    pub fn with_capacity(alphabet_size: usize, expected_len: usize) -> Self {
        let states = 2 * expected_len + 1;
        let mut len = Vec::with_capacity(states);
        let mut link = Vec::with_capacity(states);
        len.push(0);
        link.push(NONE);
        RepeatTracker {
            len,
            link,
            next: Transitions::new(alphabet_size, states),
            alphabet_size,
            last: 0,
            appended: 0,
            current: 0,
            max_repeat: 0,
        }
    }

    fn new_state(&mut self, len: u32, link: u32) -> u32 {
        let id = self.len.len() as u32;
        self.len.push(len);
        self.link.push(link);
        self.next.add_state();
        id
    }

    /// Appends `symbol` and returns the longest repeated suffix length.
    ///
    /// Panics if `symbol` is outside the alphabet given at construction.
    pub fn push(&mut self, symbol: u32) -> usize {
        assert!(
            (symbol as usize) < self.alphabet_size,
            "symbol {symbol} outside alphabet of size {}",
            self.alphabet_size
        );
        let cur = self.new_state(self.len[self.last as usize] + 1, NONE);
        let mut p = self.last;
        while p != NONE && self.next.get(p, symbol) == NONE {
            self.next.set(p, symbol, cur);
            p = self.link[p as usize];
        }
        if p == NONE {
            self.link[cur as usize] = 0;
        } else {
            let q = self.next.get(p, symbol);
            if self.len[p as usize] + 1 == self.len[q as usize] {
                self.link[cur as usize] = q;
            } else {
                let clone = self.new_state(self.len[p as usize] + 1, self.link[q as usize]);
                self.next.copy_state(q, clone);
                while p != NONE && self.next.get(p, symbol) == q {
                    self.next.set(p, symbol, clone);
                    p = self.link[p as usize];
                }
                self.link[q as usize] = clone;
                self.link[cur as usize] = clone;
            }
        }
        self.last = cur;
        self.appended += 1;
        self.current = self.len[self.link[cur as usize] as usize] as usize;
        self.max_repeat = self.max_repeat.max(self.current);
        self.current
    }

    /// Longest suffix of the current prefix occurring at least twice.
    pub fn repeated_suffix(&self) -> usize {
        self.current
    }

    /// Maximal repetition length of the current prefix.
    pub fn max_repeat(&self) -> usize {
        self.max_repeat
    }

    pub fn len(&self) -> usize {
        self.appended
    }

    pub fn is_empty(&self) -> bool {
        self.appended == 0
    }

    pub fn state_count(&self) -> usize {
        self.len.len()
    }
}

/// Running maximal repetition lengths `L2_1..L2_N` of `symbols`.
pub(crate) fn max_repeat_prefixes(symbols: &[u32], alphabet_size: usize) -> Vec<usize> {
    let mut tracker = RepeatTracker::with_capacity(alphabet_size, symbols.len());
    let mut out = vec![0; symbols.len()];
    for (slot, &s) in out.iter_mut().zip(symbols) {
        tracker.push(s);
        *slot = tracker.max_repeat();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn repeated_suffix_lengths() {
        let mut t = RepeatTracker::new(2);
        let got: Vec<usize> = [0, 1, 0, 1, 1].iter().map(|&c| t.push(c)).collect();
        // a, ab, aba -> "a", abab -> "ab", ababb -> "b"
        assert_eq!(got, [0, 0, 1, 2, 1]);
        assert_eq!(t.max_repeat(), 2);
        assert_eq!(t.len(), 5);
    }

    #[test]
    fn sparse_and_dense_agree() {
        let s: Vec<u32> = (0..300u32).map(|i| (i * i + 3 * i) % 7).collect();
        let dense = max_repeat_prefixes(&s, 7);
        let sparse = max_repeat_prefixes(&s, 40);
        assert_eq!(dense, sparse);
    }

    #[test]
    #[should_panic(expected = "outside alphabet")]
    fn rejects_foreign_symbol() {
        RepeatTracker::new(2).push(2);
    }
}
