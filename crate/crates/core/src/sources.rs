//! Stationary sources with exact block probabilities.
//!
//! IID, Markov and hidden Markov sources are started from their stationary
//! law, so sampled paths are stationary. Markov and hidden Markov chains are
//! checked for irreducibility and aperiodicity at construction. The copy
//! source is exploratory: it has no tractable law and is not known to be
//! stationary.
//!
//! Probabilities are combined in the log domain.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::math::{ln, ln_prob, log_add_exp};
use crate::seqstat::{Symbol, SymbolSeq};

/// Tolerance on row sums of probability vectors.
pub const ROW_SUM_TOLERANCE: f64 = 1e-12;
/// Tolerance on the stationarity residual `|pi P - pi|`.
pub const STATIONARY_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SourceError {
    #[error("{what}: row {row} sums to {sum}, expected 1")]
    NotNormalized { what: &'static str, row: usize, sum: f64 },
    #[error("{what}: entry ({row}, {col}) = {value} is not a probability")]
    InvalidEntry {
        what: &'static str,
        row: usize,
        col: usize,
        value: f64,
    },
    #[error("{what}: expected {expected} columns in row {row}, found {found}")]
    Shape {
        what: &'static str,
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("{what} is empty")]
    Empty { what: &'static str },
    #[error("transition matrix is reducible")]
    Reducible,
    #[error("transition matrix is periodic with period {period}")]
    Periodic { period: usize },
    #[error("stationary distribution residual {residual:e} exceeds tolerance")]
    Stationarity { residual: f64 },
    #[error("{operation} is not supported for {model} sources")]
    Unsupported {
        model: &'static str,
        operation: &'static str,
    },
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("symbol {symbol} is outside the alphabet of size {alphabet_size}")]
    SymbolOutOfRange { symbol: Symbol, alphabet_size: usize },
    #[error("conditioning event has probability zero")]
    ZeroProbabilityCondition,
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn from_rows(what: &'static str, rows: &[Vec<f64>]) -> Result<Self, SourceError> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.is_empty() || cols == 0 {
            return Err(SourceError::Empty { what });
        }
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (r, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(SourceError::Shape {
                    what,
                    row: r,
                    expected: cols,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Matrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    fn check_stochastic(&self, what: &'static str) -> Result<(), SourceError> {
        for r in 0..self.rows {
            check_distribution(what, r, self.row(r))?;
        }
        Ok(())
    }
}

fn check_distribution(what: &'static str, row: usize, p: &[f64]) -> Result<(), SourceError> {
    if p.is_empty() {
        return Err(SourceError::Empty { what });
    }
    for (col, &value) in p.iter().enumerate() {
        if !(0.0..=1.0).contains(&value) {
            return Err(SourceError::InvalidEntry { what, row, col, value });
        }
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
        return Err(SourceError::NotNormalized { what, row, sum });
    }
    Ok(())
}

/// Cumulative table for inverse-CDF sampling. Entries at and after the last
/// positive-mass symbol are `+inf` so rounding never selects a null symbol.
fn cumulative(p: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out: Vec<f64> = p
        .iter()
        .map(|&x| {
            acc += x;
            acc
        })
        .collect();
    if let Some(last) = p.iter().rposition(|&x| x > 0.0) {
        for c in &mut out[last..] {
            *c = f64::INFINITY;
        }
    }
    out
}

#[inline]
fn draw(cumulative: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let u: f64 = rng.random();
    cumulative.partition_point(|&c| c <= u).min(cumulative.len() - 1)
}

/// Reachability structure of the positive entries of a square matrix.
/// Returns `(irreducible, period)`; the period is only meaningful when
/// irreducible.
pub fn ergodicity(transition: &Matrix) -> (bool, usize) {
    let n = transition.rows();
    let reach = |forward: bool| {
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for v in 0..n {
                let w = if forward {
                    transition.get(u, v)
                } else {
                    transition.get(v, u)
                };
                if w > 0.0 && !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen.into_iter().all(|s| s)
    };
    if !(reach(true) && reach(false)) {
        return (false, 0);
    }
    // breadth-first levels; the period is the gcd of level[u] + 1 - level[v]
    let mut level = vec![usize::MAX; n];
    level[0] = 0;
    let mut queue = alloc::collections::VecDeque::from([0usize]);
    while let Some(u) = queue.pop_front() {
        for v in 0..n {
            if transition.get(u, v) > 0.0 && level[v] == usize::MAX {
                level[v] = level[u] + 1;
                queue.push_back(v);
            }
        }
    }
    let mut period = 0usize;
    for u in 0..n {
        for v in 0..n {
            if transition.get(u, v) > 0.0 {
                let d = (level[u] as isize + 1 - level[v] as isize).unsigned_abs();
                period = gcd(period, d);
            }
        }
    }
    (true, period)
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Stationary distribution of an irreducible aperiodic stochastic matrix.
pub fn stationary_distribution(transition: &Matrix) -> Result<Vec<f64>, SourceError> {
    transition.check_stochastic("transition")?;
    match ergodicity(transition) {
        (false, _) => Err(SourceError::Reducible),
        (true, p) if p != 1 => Err(SourceError::Periodic { period: p }),
        _ => solve_stationary(transition),
    }
}

/// Solves `pi (P - I) = 0`, `sum pi = 1` by Gaussian elimination with partial
/// pivoting. Requires irreducibility for uniqueness but not aperiodicity.
fn solve_stationary(transition: &Matrix) -> Result<Vec<f64>, SourceError> {
    let n = transition.rows();
    // a x = b with a = (P^T - I) and the last equation replaced by sum = 1
    let mut a = vec![0.0; n * n];
    let mut b = vec![0.0; n];
    for i in 0..n {
        for j in 0..n {
            a[i * n + j] = transition.get(j, i) - if i == j { 1.0 } else { 0.0 };
        }
    }
    for j in 0..n {
        a[(n - 1) * n + j] = 1.0;
    }
    b[n - 1] = 1.0;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| a[x * n + col].abs().total_cmp(&a[y * n + col].abs()))
            .unwrap();
        if a[pivot * n + col].abs() < 1e-300 {
            return Err(SourceError::Reducible);
        }
        if pivot != col {
            for j in 0..n {
                a.swap(pivot * n + j, col * n + j);
            }
            b.swap(pivot, col);
        }
        for row in col + 1..n {
            let f = a[row * n + col] / a[col * n + col];
            if f != 0.0 {
                for j in col..n {
                    a[row * n + j] -= f * a[col * n + j];
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut pi = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|j| a[row * n + j] * pi[j]).sum();
        pi[row] = (b[row] - s) / a[row * n + row];
    }
    for p in &mut pi {
        if *p < 0.0 {
            *p = 0.0;
        }
    }
    let total: f64 = pi.iter().sum();
    for p in &mut pi {
        *p /= total;
    }
    let residual = (0..n)
        .map(|j| ((0..n).map(|i| pi[i] * transition.get(i, j)).sum::<f64>() - pi[j]).abs())
        .fold(0.0, f64::max);
    if residual > STATIONARY_TOLERANCE {
        return Err(SourceError::Stationarity { residual });
    }
    Ok(pi)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Iid {
    probs: Vec<f64>,
    log_probs: Vec<f64>,
    cumulative: Vec<f64>,
}

impl Iid {
    fn new(probs: Vec<f64>) -> Result<Self, SourceError> {
        check_distribution("probs", 0, &probs)?;
        Ok(Iid {
            log_probs: probs.iter().map(|&p| ln_prob(p)).collect(),
            cumulative: cumulative(&probs),
            probs,
        })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn log_prob(&self, s: Symbol) -> f64 {
        self.log_probs[s as usize]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Markov {
    transition: Matrix,
    stationary: Vec<f64>,
    log_transition: Vec<f64>,
    log_stationary: Vec<f64>,
    cumulative_rows: Vec<Vec<f64>>,
    cumulative_stationary: Vec<f64>,
    period: usize,
}

impl Markov {
    fn new(transition: Matrix, allow_periodic: bool) -> Result<Self, SourceError> {
        if transition.rows() != transition.cols() {
            return Err(SourceError::Shape {
                what: "transition",
                row: 0,
                expected: transition.rows(),
                found: transition.cols(),
            });
        }
        transition.check_stochastic("transition")?;
        let (irreducible, period) = ergodicity(&transition);
        if !irreducible {
            return Err(SourceError::Reducible);
        }
        if period != 1 && !allow_periodic {
            return Err(SourceError::Periodic { period });
        }
        let stationary = solve_stationary(&transition)?;
        let d = transition.rows();
        Ok(Markov {
            log_transition: transition.data.iter().map(|&p| ln_prob(p)).collect(),
            log_stationary: stationary.iter().map(|&p| ln_prob(p)).collect(),
            cumulative_rows: (0..d).map(|r| cumulative(transition.row(r))).collect(),
            cumulative_stationary: cumulative(&stationary),
            stationary,
            transition,
            period,
        })
    }

    pub fn transition(&self) -> &Matrix {
        &self.transition
    }

    pub fn stationary(&self) -> &[f64] {
        &self.stationary
    }

    pub fn period(&self) -> usize {
        self.period
    }

    #[inline]
    pub fn log_transition(&self, from: Symbol, to: Symbol) -> f64 {
        self.log_transition[from as usize * self.transition.cols() + to as usize]
    }

    #[inline]
    pub fn log_stationary(&self, s: Symbol) -> f64 {
        self.log_stationary[s as usize]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hmm {
    transition: Matrix,
    emission: Matrix,
    stationary: Vec<f64>,
    cumulative_rows: Vec<Vec<f64>>,
    cumulative_emission: Vec<Vec<f64>>,
    cumulative_stationary: Vec<f64>,
}

impl Hmm {
    fn new(transition: Matrix, emission: Matrix) -> Result<Self, SourceError> {
        let stationary = stationary_distribution(&transition)?;
        if emission.rows() != transition.rows() {
            return Err(SourceError::Shape {
                what: "emission",
                row: emission.rows(),
                expected: transition.rows(),
                found: emission.rows(),
            });
        }
        emission.check_stochastic("emission")?;
        let states = transition.rows();
        Ok(Hmm {
            cumulative_rows: (0..states).map(|r| cumulative(transition.row(r))).collect(),
            cumulative_emission: (0..states).map(|r| cumulative(emission.row(r))).collect(),
            cumulative_stationary: cumulative(&stationary),
            stationary,
            transition,
            emission,
        })
    }

    pub fn transition(&self) -> &Matrix {
        &self.transition
    }

    pub fn emission(&self) -> &Matrix {
        &self.emission
    }

    pub fn stationary(&self) -> &[f64] {
        &self.stationary
    }

    pub fn states(&self) -> usize {
        self.transition.rows()
    }

    /// Filtering step: from `P(Z_t = s | past)` to the unnormalised joint of
    /// the next symbol and `Z_{t+1}`. Returns the log normaliser.
    pub(crate) fn advance(&self, posterior: &mut [f64], scratch: &mut [f64], symbol: Symbol, first: bool) -> f64 {
        let states = self.states();
        for (t, slot) in scratch.iter_mut().enumerate() {
            let prior = if first {
                self.stationary[t]
            } else {
                (0..states).map(|s| posterior[s] * self.transition.get(s, t)).sum()
            };
            *slot = prior * self.emission.get(t, symbol as usize);
        }
        let c: f64 = scratch.iter().sum();
        if c <= 0.0 {
            posterior.iter_mut().for_each(|p| *p = 0.0);
            return f64::NEG_INFINITY;
        }
        for (p, &s) in posterior.iter_mut().zip(scratch.iter()) {
            *p = s / c;
        }
        ln(c)
    }

    /// `P(y_1..y_m | Z_0 = s)` for every hidden state `s`, where `y_1` is
    /// emitted by `Z_1`.
    pub(crate) fn future_given_state(&self, future: &[Symbol]) -> Vec<f64> {
        let states = self.states();
        // beta(s) = P(y_{t+1}.. | Z_t = s), computed backwards
        let mut beta = vec![1.0; states];
        for &y in future.iter().rev() {
            let next: Vec<f64> = (0..states)
                .map(|s| {
                    (0..states)
                        .map(|t| self.transition.get(s, t) * self.emission.get(t, y as usize) * beta[t])
                        .sum()
                })
                .collect();
            beta = next;
        }
        beta
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CopySource {
    base: Iid,
    copy_prob: f64,
    max_copy_len: usize,
}

impl CopySource {
    pub fn base(&self) -> &Iid {
        &self.base
    }

    pub fn copy_prob(&self) -> f64 {
        self.copy_prob
    }

    pub fn max_copy_len(&self) -> usize {
        self.max_copy_len
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelKind {
    Iid(Iid),
    Markov(Markov),
    Hmm(Hmm),
    Copy(CopySource),
}

/// A stochastic source over the alphabet `0..D`.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceModel {
    label: String,
    kind: ModelKind,
}

impl SourceModel {
    pub fn iid(probs: Vec<f64>) -> Result<Self, SourceError> {
        let label = format!("iid{:?}", probs);
        Ok(SourceModel {
            label,
            kind: ModelKind::Iid(Iid::new(probs)?),
        })
    }

    /// Uniform IID source over `d` symbols.
    pub fn uniform(d: usize) -> Self {
        let mut m = SourceModel::iid(vec![1.0 / d as f64; d]).expect("uniform distribution");
        m.label = format!("uniform{d}");
        m
    }

    pub fn fair_coin() -> Self {
        SourceModel::uniform(2).with_label("fair-coin")
    }

    /// The source emitting symbol 0 forever, over a binary alphabet.
    pub fn constant() -> Self {
        SourceModel::iid(vec![1.0, 0.0])
            .expect("point mass")
            .with_label("constant")
    }

    /// Irreducible aperiodic Markov chain started from its stationary law.
    pub fn markov(rows: &[Vec<f64>]) -> Result<Self, SourceError> {
        let m = Markov::new(Matrix::from_rows("transition", rows)?, false)?;
        Ok(SourceModel {
            label: format!("markov{:?}", rows),
            kind: ModelKind::Markov(m),
        })
    }

    /// Irreducible Markov chain that may be periodic (for example a
    /// deterministic cycle). Started from its unique stationary law it is
    /// still stationary and ergodic, though not mixing.
    pub fn markov_allow_periodic(rows: &[Vec<f64>]) -> Result<Self, SourceError> {
        let m = Markov::new(Matrix::from_rows("transition", rows)?, true)?;
        Ok(SourceModel {
            label: format!("markov{:?}", rows),
            kind: ModelKind::Markov(m),
        })
    }

    /// Two-state chain with `P(1|0) = a`, `P(0|1) = b`.
    pub fn two_state(a: f64, b: f64) -> Result<Self, SourceError> {
        Ok(SourceModel::markov(&[vec![1.0 - a, a], vec![b, 1.0 - b]])?.with_label(format!("markov2(p10={a},p01={b})")))
    }

    /// Deterministic cycle `0 -> 1 -> ... -> d-1 -> 0`.
    pub fn cycle(d: usize) -> Self {
        let rows: Vec<Vec<f64>> = (0..d)
            .map(|i| (0..d).map(|j| if j == (i + 1) % d { 1.0 } else { 0.0 }).collect())
            .collect();
        SourceModel::markov_allow_periodic(&rows)
            .expect("cycle is irreducible")
            .with_label(format!("cycle{d}"))
    }

    pub fn hmm(transition: &[Vec<f64>], emission: &[Vec<f64>]) -> Result<Self, SourceError> {
        let h = Hmm::new(
            Matrix::from_rows("transition", transition)?,
            Matrix::from_rows("emission", emission)?,
        )?;
        Ok(SourceModel {
            label: format!("hmm{:?}/{:?}", transition, emission),
            kind: ModelKind::Hmm(h),
        })
    }

    pub fn copy_source(base: Vec<f64>, copy_prob: f64, max_copy_len: usize) -> Result<Self, SourceError> {
        if !(0.0..1.0).contains(&copy_prob) {
            return Err(SourceError::InvalidParameter {
                name: "copy_prob",
                reason: format!("{copy_prob} is not in [0, 1)"),
            });
        }
        if max_copy_len == 0 {
            return Err(SourceError::InvalidParameter {
                name: "max_copy_len",
                reason: "must be positive".into(),
            });
        }
        let base = Iid::new(base)?;
        Ok(SourceModel {
            label: format!("copy(p={copy_prob},max={max_copy_len})"),
            kind: ModelKind::Copy(CopySource {
                base,
                copy_prob,
                max_copy_len,
            }),
        })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn kind(&self) -> &ModelKind {
        &self.kind
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            ModelKind::Iid(_) => "iid",
            ModelKind::Markov(_) => "markov",
            ModelKind::Hmm(_) => "hmm",
            ModelKind::Copy(_) => "copy",
        }
    }

    pub fn alphabet_size(&self) -> usize {
        match &self.kind {
            ModelKind::Iid(m) => m.probs.len(),
            ModelKind::Markov(m) => m.transition.rows(),
            ModelKind::Hmm(m) => m.emission.cols(),
            ModelKind::Copy(m) => m.base.probs.len(),
        }
    }

    /// Whether block probabilities are available.
    pub fn is_tractable(&self) -> bool {
        !matches!(self.kind, ModelKind::Copy(_))
    }

    pub fn is_exploratory(&self) -> bool {
        matches!(self.kind, ModelKind::Copy(_))
    }

    /// Marginal law of a single symbol.
    pub fn marginal(&self) -> Vec<f64> {
        match &self.kind {
            ModelKind::Iid(m) => m.probs.clone(),
            ModelKind::Markov(m) => m.stationary.clone(),
            ModelKind::Hmm(m) => (0..m.emission.cols())
                .map(|x| (0..m.states()).map(|s| m.stationary[s] * m.emission.get(s, x)).sum())
                .collect(),
            ModelKind::Copy(m) => m.base.probs.clone(),
        }
    }

    pub(crate) fn unsupported(&self, operation: &'static str) -> SourceError {
        SourceError::Unsupported {
            model: self.kind_name(),
            operation,
        }
    }

    fn check_symbols(&self, block: &[Symbol]) -> Result<(), SourceError> {
        let d = self.alphabet_size();
        match block.iter().find(|&&s| s as usize >= d) {
            Some(&symbol) => Err(SourceError::SymbolOutOfRange {
                symbol,
                alphabet_size: d,
            }),
            None => Ok(()),
        }
    }

    /// `ln P(X_1..X_k = block)`.
    pub fn block_log_probability(&self, block: &[Symbol]) -> Result<f64, SourceError> {
        let mut total = 0.0;
        self.scan_prefixes(block, |lp| total = lp)?;
        Ok(total)
    }

    /// `ln P(X_1..X_k)` for every prefix length `k = 1..=block.len()`.
    pub fn prefix_log_probabilities(&self, block: &[Symbol]) -> Result<Vec<f64>, SourceError> {
        let mut out = Vec::with_capacity(block.len());
        self.scan_prefixes(block, |lp| out.push(lp))?;
        Ok(out)
    }

    fn scan_prefixes(&self, block: &[Symbol], mut f: impl FnMut(f64)) -> Result<(), SourceError> {
        self.check_symbols(block)?;
        let mut total = 0.0;
        match &self.kind {
            ModelKind::Iid(m) => {
                for &s in block {
                    total += m.log_prob(s);
                    f(total);
                }
            }
            ModelKind::Markov(m) => {
                for (t, &s) in block.iter().enumerate() {
                    total += if t == 0 {
                        m.log_stationary(s)
                    } else {
                        m.log_transition(block[t - 1], s)
                    };
                    f(total);
                }
            }
            ModelKind::Hmm(m) => {
                let mut posterior = vec![0.0; m.states()];
                let mut scratch = vec![0.0; m.states()];
                for (t, &s) in block.iter().enumerate() {
                    if total > f64::NEG_INFINITY {
                        total += m.advance(&mut posterior, &mut scratch, s, t == 0);
                    }
                    f(total);
                }
            }
            ModelKind::Copy(_) => return Err(self.unsupported("block probability")),
        }
        Ok(())
    }

    pub fn block_probability(&self, block: &[Symbol]) -> Result<f64, SourceError> {
        Ok(crate::math::exp(self.block_log_probability(block)?))
    }

    /// `ln P(X_1..X_k = past | X_{k+1}..X_{k+i} = future)`.
    ///
    /// For a Markov chain the future enters only through its first symbol:
    /// `P(past | future) = P(past) P(future_1 | past_k) / pi(future_1)`.
    pub fn conditional_log_probability(&self, past: &[Symbol], future: &[Symbol]) -> Result<f64, SourceError> {
        self.check_symbols(past)?;
        self.check_symbols(future)?;
        match &self.kind {
            ModelKind::Iid(_) => self.block_log_probability(past),
            ModelKind::Markov(m) => {
                let (Some(&y), Some(&x)) = (future.first(), past.last()) else {
                    return self.block_log_probability(past);
                };
                if m.stationary[y as usize] <= 0.0 {
                    return Err(SourceError::ZeroProbabilityCondition);
                }
                Ok(self.block_log_probability(past)? + m.log_transition(x, y) - m.log_stationary(y))
            }
            ModelKind::Hmm(_) => {
                let den = self.block_log_probability(future)?;
                if den == f64::NEG_INFINITY {
                    return Err(SourceError::ZeroProbabilityCondition);
                }
                let mut joint = Vec::with_capacity(past.len() + future.len());
                joint.extend_from_slice(past);
                joint.extend_from_slice(future);
                Ok(self.block_log_probability(&joint)? - den)
            }
            ModelKind::Copy(_) => Err(self.unsupported("conditional block probability")),
        }
    }

    pub fn conditional_block_probability(&self, past: &[Symbol], future: &[Symbol]) -> Result<f64, SourceError> {
        Ok(crate::math::exp(self.conditional_log_probability(past, future)?))
    }

    /// Visits every block of length `k` in lexicographic order with its log
    /// probability. For hidden Markov sources `posterior` holds
    /// `P(Z_k = s | block)`; for other sources it is empty.
    pub fn for_each_block<F>(&self, k: usize, mut f: F) -> Result<(), SourceError>
    where
        F: FnMut(&[Symbol], f64, &[f64]),
    {
        let d = self.alphabet_size();
        let states = match &self.kind {
            ModelKind::Hmm(m) => m.states(),
            ModelKind::Copy(_) => return Err(self.unsupported("block enumeration")),
            _ => 0,
        };
        let mut block = vec![0 as Symbol; k];
        let mut logp = vec![0.0; k + 1];
        let mut post = vec![vec![0.0; states]; k + 1];
        let mut scratch = vec![0.0; states];
        if k == 0 {
            f(&[], 0.0, &[]);
            return Ok(());
        }
        // iterative depth-first walk; depth t means block[..t] is fixed
        let mut depth = 0usize;
        let mut next_symbol = vec![0usize; k];
        loop {
            if next_symbol[depth] == d {
                next_symbol[depth] = 0;
                if depth == 0 {
                    break;
                }
                depth -= 1;
                continue;
            }
            let s = next_symbol[depth] as Symbol;
            next_symbol[depth] += 1;
            block[depth] = s;
            let step = match &self.kind {
                ModelKind::Iid(m) => m.log_prob(s),
                ModelKind::Markov(m) => {
                    if depth == 0 {
                        m.log_stationary(s)
                    } else {
                        m.log_transition(block[depth - 1], s)
                    }
                }
                ModelKind::Hmm(m) => {
                    let (prev, rest) = post.split_at_mut(depth + 1);
                    let cur = &mut rest[0];
                    cur.copy_from_slice(&prev[depth]);
                    m.advance(cur, &mut scratch, s, depth == 0)
                }
                ModelKind::Copy(_) => unreachable!(),
            };
            logp[depth + 1] = logp[depth] + step;
            if depth + 1 == k {
                f(&block, logp[k], &post[k]);
            } else {
                depth += 1;
            }
        }
        Ok(())
    }
}

/// Seed of one reproducible random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SeedSpec {
    pub master_seed: u64,
    pub stream_index: u64,
}

/// SplitMix64 finaliser (Steele, Lea and Flood), constants
/// `0x9E3779B97F4A7C15`, `0xBF58476D1CE4E5B9`, `0x94D049BB133111EB`.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

impl SeedSpec {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        SeedSpec {
            master_seed,
            stream_index,
        }
    }

    /// `splitmix64(master ^ splitmix64(stream_index))`.
    pub fn stream_seed(&self) -> u64 {
        splitmix64(self.master_seed ^ splitmix64(self.stream_index))
    }

    /// Another stream under the same master seed.
    pub fn stream(&self, index: u64) -> SeedSpec {
        SeedSpec::new(self.master_seed, index)
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.stream_seed())
    }
}

enum SamplerState {
    Start,
    Markov(Symbol),
    Hmm(usize),
    Copy {
        history: Vec<Symbol>,
        source: usize,
        run: usize,
        copying: bool,
    },
}

/// Infinite stream of symbols from a source.
pub struct Sampler<'a> {
    model: &'a SourceModel,
    rng: ChaCha8Rng,
    state: SamplerState,
}

impl<'a> Sampler<'a> {
    pub fn new(model: &'a SourceModel, seed: SeedSpec) -> Self {
        Sampler {
            model,
            rng: seed.rng(),
            state: SamplerState::initial(model),
        }
    }

    /// Starts a fresh independent path, continuing the same random stream.
    pub fn restart(&mut self) {
        self.state = SamplerState::initial(self.model);
    }
}

impl SamplerState {
    fn initial(model: &SourceModel) -> Self {
        match model.kind {
            ModelKind::Copy(_) => SamplerState::Copy {
                history: Vec::new(),
                source: 0,
                run: 0,
                copying: false,
            },
            _ => SamplerState::Start,
        }
    }
}

impl Iterator for Sampler<'_> {
    type Item = Symbol;

    fn next(&mut self) -> Option<Symbol> {
        let rng = &mut self.rng;
        let symbol = match (&self.model.kind, &mut self.state) {
            (ModelKind::Iid(m), _) => draw(&m.cumulative, rng) as Symbol,
            (ModelKind::Markov(m), state) => {
                let s = match *state {
                    SamplerState::Markov(prev) => draw(&m.cumulative_rows[prev as usize], rng),
                    _ => draw(&m.cumulative_stationary, rng),
                } as Symbol;
                *state = SamplerState::Markov(s);
                s
            }
            (ModelKind::Hmm(m), state) => {
                let z = match *state {
                    SamplerState::Hmm(prev) => draw(&m.cumulative_rows[prev], rng),
                    _ => draw(&m.cumulative_stationary, rng),
                };
                *state = SamplerState::Hmm(z);
                draw(&m.cumulative_emission[z], rng) as Symbol
            }
            (
                ModelKind::Copy(m),
                SamplerState::Copy {
                    history,
                    source,
                    run,
                    copying,
                },
            ) => {
                let t = history.len();
                let s = if t > 0 && rng.random::<f64>() < m.copy_prob {
                    if !(*copying && *run < m.max_copy_len) {
                        *source = rng.random_range(0..t);
                        *run = 0;
                        *copying = true;
                    }
                    let s = history[*source];
                    *source += 1;
                    *run += 1;
                    s
                } else {
                    *copying = false;
                    draw(&m.base.cumulative, rng) as Symbol
                };
                history.push(s);
                s
            }
            (ModelKind::Copy(_), _) => unreachable!("copy sampler state"),
        };
        Some(symbol)
    }
}

/// One sampled path of length `n`, deterministic in `(model, n, seed)`.
pub fn sample_path(model: &SourceModel, n: usize, seed: SeedSpec) -> SymbolSeq {
    let symbols: Vec<Symbol> = Sampler::new(model, seed).take(n).collect();
    SymbolSeq::new(symbols, model.alphabet_size() as u32).expect("sampled symbols lie in the alphabet")
}

/// Samples the exploratory copy source with the given parameters.
pub fn sample_copy_source(
    base: Vec<f64>,
    copy_prob: f64,
    max_copy_len: usize,
    n: usize,
    seed: SeedSpec,
) -> Result<SymbolSeq, SourceError> {
    let model = SourceModel::copy_source(base, copy_prob, max_copy_len)?;
    Ok(sample_path(&model, n, seed))
}

/// Log-sum-exp of block log probabilities; exposed for normalisation checks.
pub fn total_log_probability(model: &SourceModel, k: usize) -> Result<f64, SourceError> {
    let mut total = f64::NEG_INFINITY;
    model.for_each_block(k, |_, lp, _| total = log_add_exp(total, lp))?;
    Ok(total)
}
