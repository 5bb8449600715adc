//! Recurrence and repetition statistics of finite sequences.
//!
//! Internally positions are 0-based; the curves use the 1-based indexing of
//! the definitions: `L` curves are indexed by the prefix length `n` and `R`
//! curves by the block length `k`. An `R` value is the shift `i >= 1` of the
//! first qualifying block occurrence `X_{i+1}..X_{i+k}`.
//!
//! A finite sample cannot show an occurrence beyond its horizon. Such points
//! are reported as `N - k + 1` with `censored = true`, meaning the true value
//! is at least that large.

mod automaton;
mod oracle;
mod zarray;

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

pub use automaton::RepeatTracker;
pub use oracle::{brute_force_curve, DEFAULT_ORACLE_LIMIT};
pub use zarray::z_array;

/// Dense symbol id.
pub type Symbol = u32;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SeqError {
    #[error("symbol {symbol} at position {position} is not below the alphabet size {alphabet_size}")]
    SymbolOutOfRange {
        position: usize,
        symbol: Symbol,
        alphabet_size: u32,
    },
    #[error("alphabet size must be positive")]
    EmptyAlphabet,
    #[error("sequence of length {len} exceeds the oracle limit {limit}")]
    OracleLimit { len: usize, limit: usize },
    #[error("curves {left:?} and {right:?} are not a dual pair")]
    KindMismatch { left: CurveKind, right: CurveKind },
    #[error("curves cover different horizons ({left} vs {right})")]
    HorizonMismatch { left: usize, right: usize },
}

/// Finite sequence of dense symbol ids over an alphabet of size `D`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolSeq {
    symbols: Vec<Symbol>,
    alphabet_size: u32,
    declared: bool,
}

impl SymbolSeq {
    /// Sequence over a declared alphabet of size `alphabet_size`.
    pub fn new(symbols: Vec<Symbol>, alphabet_size: u32) -> Result<Self, SeqError> {
        if alphabet_size == 0 {
            return Err(SeqError::EmptyAlphabet);
        }
        if let Some((position, &symbol)) = symbols.iter().enumerate().find(|(_, &s)| s >= alphabet_size) {
            return Err(SeqError::SymbolOutOfRange {
                position,
                symbol,
                alphabet_size,
            });
        }
        Ok(SymbolSeq {
            symbols,
            alphabet_size,
            declared: true,
        })
    }

    /// Sequence whose alphabet size is the number of distinct observed ids.
    /// The ids must already be dense.
    pub fn from_observed(symbols: Vec<Symbol>) -> Result<Self, SeqError> {
        let mut seen: Vec<Symbol> = symbols.clone();
        seen.sort_unstable();
        seen.dedup();
        let alphabet_size = (seen.len() as u32).max(1);
        let mut seq = SymbolSeq::new(symbols, alphabet_size)?;
        seq.declared = false;
        Ok(seq)
    }

    /// Encodes arbitrary tokens through a fresh [`Dictionary`].
    pub fn from_tokens<T: Ord + Clone, I: IntoIterator<Item = T>>(tokens: I) -> (Self, Dictionary<T>) {
        let mut dict = Dictionary::new();
        let symbols: Vec<Symbol> = tokens.into_iter().map(|t| dict.encode(t)).collect();
        let alphabet_size = (dict.len() as u32).max(1);
        let seq = SymbolSeq {
            symbols,
            alphabet_size,
            declared: false,
        };
        (seq, dict)
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    pub fn alphabet_size(&self) -> u32 {
        self.alphabet_size
    }

    /// Whether the alphabet size was declared rather than observed.
    pub fn is_declared(&self) -> bool {
        self.declared
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// The shifted sequence `X_{i+1}, X_{i+2}, ...` (the shift applied `i` times).
    pub fn shift(&self, i: usize) -> SymbolSeq {
        SymbolSeq {
            symbols: self.symbols[i.min(self.len())..].to_vec(),
            alphabet_size: self.alphabet_size,
            declared: self.declared,
        }
    }

    /// First `n` symbols.
    pub fn prefix(&self, n: usize) -> SymbolSeq {
        SymbolSeq {
            symbols: self.symbols[..n.min(self.len())].to_vec(),
            alphabet_size: self.alphabet_size,
            declared: self.declared,
        }
    }
}

/// Maps external tokens to dense ids in order of first appearance.
#[derive(Debug, Clone, Default)]
pub struct Dictionary<T: Ord> {
    ids: BTreeMap<T, Symbol>,
    tokens: Vec<T>,
}

impl<T: Ord + Clone> Dictionary<T> {
    pub fn new() -> Self {
        Dictionary {
            ids: BTreeMap::new(),
            tokens: Vec::new(),
        }
    }

    pub fn encode(&mut self, token: T) -> Symbol {
        if let Some(&id) = self.ids.get(&token) {
            return id;
        }
        let id = self.tokens.len() as Symbol;
        self.tokens.push(token.clone());
        self.ids.insert(token, id);
        id
    }

    pub fn decode(&self, id: Symbol) -> Option<&T> {
        self.tokens.get(id as usize)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum CurveKind {
    /// Longest match length, indexed by `n`.
    L1,
    /// Maximal repetition length, indexed by `n`.
    L2,
    /// Recurrence time, indexed by `k`.
    R1,
    /// Repetition time, indexed by `k`.
    R2,
}

impl CurveKind {
    pub const ALL: [CurveKind; 4] = [CurveKind::L1, CurveKind::L2, CurveKind::R1, CurveKind::R2];

    pub fn is_length(self) -> bool {
        matches!(self, CurveKind::L1 | CurveKind::L2)
    }

    pub fn dual(self) -> CurveKind {
        match self {
            CurveKind::L1 => CurveKind::R1,
            CurveKind::R1 => CurveKind::L1,
            CurveKind::L2 => CurveKind::R2,
            CurveKind::R2 => CurveKind::L2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CurveKind::L1 => "L1",
            CurveKind::L2 => "L2",
            CurveKind::R1 => "R1",
            CurveKind::R2 => "R2",
        }
    }

    pub fn parse(s: &str) -> Option<CurveKind> {
        CurveKind::ALL.into_iter().find(|k| k.name().eq_ignore_ascii_case(s))
    }
}

/// A statistic value; `censored` means the true value is at least `value`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CensoredValue {
    pub value: u64,
    pub censored: bool,
}

impl CensoredValue {
    pub fn exact(value: u64) -> Self {
        CensoredValue { value, censored: false }
    }

    pub fn censored(value: u64) -> Self {
        CensoredValue { value, censored: true }
    }

    pub fn uncensored(self) -> Option<u64> {
        (!self.censored).then_some(self.value)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CurvePoint {
    pub index: u64,
    pub value: CensoredValue,
}

/// One of the four statistics as a function of its index.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StatCurve {
    kind: CurveKind,
    points: Vec<CurvePoint>,
}

impl StatCurve {
    /// Builds a curve from arbitrary points; they are sorted by index and a
    /// later duplicate replaces an earlier one.
    pub fn new(kind: CurveKind, mut points: Vec<CurvePoint>) -> Self {
        points.sort_by_key(|p| p.index);
        points.reverse();
        points.dedup_by_key(|p| p.index);
        points.reverse();
        StatCurve { kind, points }
    }

    /// Curve with indices `1..=values.len()`.
    pub(crate) fn from_dense(kind: CurveKind, values: Vec<(u64, bool)>) -> Self {
        let points = values
            .into_iter()
            .enumerate()
            .map(|(i, (value, censored))| CurvePoint {
                index: i as u64 + 1,
                value: CensoredValue { value, censored },
            })
            .collect();
        StatCurve { kind, points }
    }

    pub fn kind(&self) -> CurveKind {
        self.kind
    }

    pub fn points(&self) -> &[CurvePoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn get(&self, index: u64) -> Option<CensoredValue> {
        if let Some(p) = self.points.get((index as usize).wrapping_sub(1)) {
            if p.index == index {
                return Some(p.value);
            }
        }
        self.points
            .binary_search_by_key(&index, |p| p.index)
            .ok()
            .map(|pos| self.points[pos].value)
    }

    /// Mutable access, mainly for building negative controls.
    pub fn get_mut(&mut self, index: u64) -> Option<&mut CensoredValue> {
        let pos = self.points.binary_search_by_key(&index, |p| p.index).ok()?;
        Some(&mut self.points[pos].value)
    }

    /// Restriction of the curve to the given indices (missing ones are skipped).
    pub fn select(&self, indices: &[u64]) -> StatCurve {
        let points = indices
            .iter()
            .filter_map(|&index| self.get(index).map(|value| CurvePoint { index, value }))
            .collect();
        StatCurve::new(self.kind, points)
    }

    pub fn censored_count(&self) -> usize {
        self.points.iter().filter(|p| p.value.censored).count()
    }

    /// `L` curves non-decreasing; `R` curves non-decreasing over uncensored points.
    pub fn is_monotone(&self) -> bool {
        let mut prev = 0u64;
        for p in &self.points {
            if p.value.censored {
                continue;
            }
            if p.value.value < prev {
                return false;
            }
            prev = p.value.value;
        }
        true
    }
}

/// `L1_n` for `n = 1..=N`.
pub fn longest_match_curve(seq: &SymbolSeq) -> StatCurve {
    let z = z_array(seq.symbols());
    let n = z.len();
    // prefix_max[t] = max z[1..=t]
    let mut prefix_max = vec![0usize; n];
    for t in 1..n {
        prefix_max[t] = prefix_max[t - 1].max(z[t]);
    }
    let mut values = Vec::with_capacity(n);
    let mut best = 0usize;
    for len in 1..=n {
        // L1 grows by at most one per symbol: a match of length best + 1
        // needs a shift t <= len - best - 1 with z[t] >= best + 1.
        if len > best + 1 && prefix_max[len - best - 1] > best {
            best += 1;
        }
        values.push((best as u64, false));
    }
    StatCurve::from_dense(CurveKind::L1, values)
}

/// `L2_n` for `n = 1..=N`, read off an online suffix automaton.
pub fn maximal_repetition_curve(seq: &SymbolSeq) -> StatCurve {
    let values = automaton::max_repeat_prefixes(seq.symbols(), seq.alphabet_size() as usize)
        .into_iter()
        .map(|v| (v as u64, false))
        .collect();
    StatCurve::from_dense(CurveKind::L2, values)
}

/// `R1_k` for `k = 1..=N`.
pub fn recurrence_time_curve(seq: &SymbolSeq) -> StatCurve {
    let z = z_array(seq.symbols());
    let n = z.len();
    let mut first = vec![None; n + 1];
    let mut reached = 0usize;
    for (i, &zi) in z.iter().enumerate().skip(1) {
        while reached < zi {
            reached += 1;
            first[reached] = Some(i);
        }
    }
    StatCurve::from_dense(CurveKind::R1, censor(&first, n))
}

/// `R2_k` for `k = 1..=N`, from the `L2` curve through
/// `R2_k = min{m : L2_m >= k} - k`.
pub fn repetition_time_curve(seq: &SymbolSeq) -> StatCurve {
    repetition_from_l2(&maximal_repetition_curve(seq))
}

/// Dual `R` curve of a dense `L` curve covering `1..=N`.
pub(crate) fn repetition_from_l2(l2: &StatCurve) -> StatCurve {
    let n = l2.len();
    let mut first = vec![None; n + 1];
    let mut reached = 0usize;
    for p in l2.points() {
        let m = p.index as usize;
        while reached < p.value.value as usize {
            reached += 1;
            first[reached] = Some(m - reached);
        }
    }
    StatCurve::from_dense(CurveKind::R2, censor(&first, n))
}

fn censor(first: &[Option<usize>], n: usize) -> Vec<(u64, bool)> {
    (1..=n)
        .map(|k| match first[k] {
            Some(i) => (i as u64, false),
            None => ((n - k + 1) as u64, true),
        })
        .collect()
}

/// All four curves of one sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CurveSet {
    pub l1: StatCurve,
    pub l2: StatCurve,
    pub r1: StatCurve,
    pub r2: StatCurve,
}

impl CurveSet {
    pub fn compute(seq: &SymbolSeq) -> Self {
        let l2 = maximal_repetition_curve(seq);
        let r2 = repetition_from_l2(&l2);
        CurveSet {
            l1: longest_match_curve(seq),
            l2,
            r1: recurrence_time_curve(seq),
            r2,
        }
    }

    pub fn get(&self, kind: CurveKind) -> &StatCurve {
        match kind {
            CurveKind::L1 => &self.l1,
            CurveKind::L2 => &self.l2,
            CurveKind::R1 => &self.r1,
            CurveKind::R2 => &self.r2,
        }
    }
}

/// Computes the curve of the given kind with the fast algorithm.
pub fn curve(seq: &SymbolSeq, kind: CurveKind) -> StatCurve {
    match kind {
        CurveKind::L1 => longest_match_curve(seq),
        CurveKind::L2 => maximal_repetition_curve(seq),
        CurveKind::R1 => recurrence_time_curve(seq),
        CurveKind::R2 => repetition_time_curve(seq),
    }
}

/// Checks `R_k > n <=> L_{n+k} < k` for all `k >= 1`, `n >= 0`, `n + k <= N`.
///
/// A censored `R` value counts as `> n` only when its reported value is.
pub fn check_duality(l: &StatCurve, r: &StatCurve) -> Result<bool, SeqError> {
    if !l.kind().is_length() || r.kind() != l.kind().dual() {
        return Err(SeqError::KindMismatch {
            left: l.kind(),
            right: r.kind(),
        });
    }
    let n_total = l.len();
    if r.len() != n_total {
        return Err(SeqError::HorizonMismatch {
            left: n_total,
            right: r.len(),
        });
    }
    for k in 1..=n_total as u64 {
        let rk = match r.get(k) {
            Some(v) => v.value,
            None => return Ok(false),
        };
        for n in 0..=(n_total as u64 - k) {
            let l_value = match l.get(n + k) {
                Some(v) => v.value,
                None => return Ok(false),
            };
            if (rk > n) != (l_value < k) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Outcome of a check that may lack the data to decide.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decomposition {
    /// Both sides equal the given value.
    Holds(u64),
    Violated {
        repetition: u64,
        min_recurrence: u64,
    },
    /// `R2_k` is censored (or `k` exceeds the horizon).
    Inconclusive,
}

/// Checks `R2_k = min_{i >= 0} (i + R1_k evaluated on the sequence shifted by i)`.
///
/// Only shifts `i < R2_k` can attain the minimum; inner recurrence times are
/// evaluated within the horizon left after the shift.
pub fn check_min_decomposition(seq: &SymbolSeq, k: usize) -> Decomposition {
    if k == 0 || k > seq.len() {
        return Decomposition::Inconclusive;
    }
    let r2 = repetition_time_curve(seq);
    let repetition = match r2.get(k as u64).and_then(CensoredValue::uncensored) {
        Some(v) => v,
        None => return Decomposition::Inconclusive,
    };
    let mut min_recurrence = u64::MAX;
    for i in 0..repetition as usize {
        let shifted = seq.shift(i);
        if shifted.len() < k {
            break;
        }
        let r1 = recurrence_time_curve(&shifted);
        if let Some(v) = r1.get(k as u64) {
            min_recurrence = min_recurrence.min(i as u64 + v.value);
        }
    }
    if min_recurrence == repetition {
        Decomposition::Holds(repetition)
    } else {
        Decomposition::Violated {
            repetition,
            min_recurrence,
        }
    }
}
