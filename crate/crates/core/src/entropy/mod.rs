//! Rényi–Arimoto entropies of distributions and of blocks of stationary
//! sources.
//!
//! For `gamma` outside `{0, 1, inf}` the conditional entropy is Arimoto's
//!
//! ```text
//! H_g(X|Y) = g / (1 - g) * ln sum_y ( sum_x P(x, y)^g )^(1/g)
//! ```
//!
//! and the three limit orders use their closed forms: the log of the largest
//! conditional support, the Shannon conditional entropy and
//! `-ln sum_y max_x P(x, y)`. Orders within `1e-6` of one (other than one
//! itself) are rejected because the closed form loses all precision there.
//!
//! Block quantities are computed by enumeration up to a limit on the number of
//! enumerated blocks. Markov chains use dynamic programming where possible and
//! the fact that conditioning on `X_{k+1}..X_{k+i}` equals conditioning on
//! `X_{k+1}` alone.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::{exp, ln, log_add_exp, mean_var, powf, sqrt};
use crate::seqstat::{Symbol, SymbolSeq};
use crate::sources::{ModelKind, Sampler, SeedSpec, SourceError, SourceModel};

/// Default limit on `D^(k+i)` for enumeration.
pub const DEFAULT_ENUMERATION_LIMIT: u64 = 1 << 24;
/// Default truncation of the weighted conditional entropy sum.
pub const DEFAULT_TRUNCATION: u64 = 10_000;
/// Slack used when comparing entropies that may be equal in exact arithmetic.
pub const COMPARISON_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EntropyError {
    #[error("order {0} is not a valid Renyi order")]
    InvalidOrder(f64),
    #[error("invalid distribution: {0}")]
    InvalidDistribution(&'static str),
    #[error("{states} blocks exceed the enumeration limit {limit}")]
    EnumerationLimit { states: u64, limit: u64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
    #[error(transparent)]
    Source(#[from] SourceError),
}

/// Rényi order `gamma` in `[0, inf]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Order(f64);

impl Order {
    pub const HARTLEY: Order = Order(0.0);
    pub const SHANNON: Order = Order(1.0);
    pub const COLLISION: Order = Order(2.0);
    pub const MIN: Order = Order(f64::INFINITY);

    pub fn new(gamma: f64) -> Result<Self, EntropyError> {
        if gamma.is_nan() || gamma < 0.0 || (gamma != 1.0 && (gamma - 1.0).abs() < 1e-6) {
            return Err(EntropyError::InvalidOrder(gamma));
        }
        Ok(Order(gamma))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_min_entropy(self) -> bool {
        self.0 == f64::INFINITY
    }

    /// `gamma / (gamma - 1)`, the factor in front of `ln i` in the context
    /// length threshold (one for the min-entropy).
    pub fn threshold_factor(self) -> Result<f64, EntropyError> {
        if self.is_min_entropy() {
            Ok(1.0)
        } else if self.0 > 1.0 {
            Ok(self.0 / (self.0 - 1.0))
        } else {
            Err(EntropyError::InvalidOrder(self.0))
        }
    }
}

/// Entropy in nats as a certified interval; `lo == hi` for exact values.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EntropyValue {
    pub lo: f64,
    pub hi: f64,
}

impl EntropyValue {
    pub fn exact(v: f64) -> Self {
        let v = v.max(0.0);
        EntropyValue { lo: v, hi: v }
    }

    pub fn interval(lo: f64, hi: f64) -> Self {
        EntropyValue {
            lo: lo.max(0.0),
            hi: hi.max(0.0),
        }
    }

    pub fn is_exact(&self) -> bool {
        self.lo == self.hi
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, v: f64, slack: f64) -> bool {
        v >= self.lo - slack && v <= self.hi + slack
    }
}

fn check_distribution(p: &[f64]) -> Result<(), EntropyError> {
    if p.is_empty() {
        return Err(EntropyError::InvalidDistribution("empty"));
    }
    if p.iter().any(|&x| !(0.0..=1.0 + 1e-12).contains(&x)) {
        return Err(EntropyError::InvalidDistribution("entry outside [0, 1]"));
    }
    if (p.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(EntropyError::InvalidDistribution("does not sum to 1"));
    }
    Ok(())
}

/// Streaming accumulator for `H_g(X|Y)`: feed `P(x, y)` cell by cell.
struct Conditional {
    order: Order,
    support: Vec<u64>,
    power_sum: Vec<f64>,
    max: Vec<f64>,
    plogp: Vec<f64>,
    marginal: Vec<f64>,
}

impl Conditional {
    fn new(order: Order, ny: usize) -> Self {
        Conditional {
            order,
            support: vec![0; ny],
            power_sum: vec![0.0; ny],
            max: vec![0.0; ny],
            plogp: vec![0.0; ny],
            marginal: vec![0.0; ny],
        }
    }

    #[inline]
    fn add(&mut self, y: usize, p: f64) {
        if p <= 0.0 {
            return;
        }
        self.support[y] += 1;
        self.marginal[y] += p;
        let g = self.order.0;
        if g == 1.0 {
            self.plogp[y] += p * ln(p);
        } else if g.is_finite() && g != 0.0 {
            // power_sum[y] = sum (p / max[y])^g, rescaled when the max moves
            if p > self.max[y] {
                self.power_sum[y] = self.power_sum[y] * powf(self.max[y] / p, g) + 1.0;
            } else {
                self.power_sum[y] += powf(p / self.max[y], g);
            }
        }
        if p > self.max[y] {
            self.max[y] = p;
        }
    }

    fn finish(&self) -> EntropyValue {
        let g = self.order.0;
        let value = if g == 0.0 {
            let m = self.support.iter().copied().max().unwrap_or(0);
            ln((m.max(1)) as f64)
        } else if g == 1.0 {
            // H(X, Y) - H(Y)
            let joint: f64 = -self.plogp.iter().sum::<f64>();
            let marg: f64 = -self
                .marginal
                .iter()
                .filter(|&&p| p > 0.0)
                .map(|&p| p * ln(p))
                .sum::<f64>();
            joint - marg
        } else if g.is_infinite() {
            -ln(self.max.iter().sum::<f64>())
        } else {
            let log_norm = self
                .power_sum
                .iter()
                .zip(&self.max)
                .filter(|(&s, _)| s > 0.0)
                .map(|(&s, &m)| ln(m) + ln(s) / g)
                .fold(f64::NEG_INFINITY, log_add_exp);
            g / (1.0 - g) * log_norm
        };
        EntropyValue::exact(value)
    }
}

/// `H_g(X)` of a probability vector.
pub fn renyi_entropy(dist: &[f64], order: Order) -> Result<EntropyValue, EntropyError> {
    check_distribution(dist)?;
    let mut acc = Conditional::new(order, 1);
    for &p in dist {
        acc.add(0, p);
    }
    Ok(acc.finish())
}

/// Finite joint law of `(X, Y)`, stored row-major by `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct Joint2 {
    nx: usize,
    ny: usize,
    p: Vec<f64>,
}

impl Joint2 {
    pub fn new(nx: usize, ny: usize, p: Vec<f64>) -> Result<Self, EntropyError> {
        if p.len() != nx * ny {
            return Err(EntropyError::InvalidDistribution("shape does not match"));
        }
        check_distribution(&p)?;
        Ok(Joint2 { nx, ny, p })
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.p[x * self.ny + y]
    }

    pub fn marginal_x(&self) -> Vec<f64> {
        (0..self.nx)
            .map(|x| (0..self.ny).map(|y| self.get(x, y)).sum())
            .collect()
    }
}

/// Arimoto conditional entropy `H_g(X|Y)`.
pub fn conditional_renyi(joint: &Joint2, order: Order) -> EntropyValue {
    let mut acc = Conditional::new(order, joint.ny);
    for x in 0..joint.nx {
        for y in 0..joint.ny {
            acc.add(y, joint.get(x, y));
        }
    }
    acc.finish()
}

/// Finite joint law of several variables, row-major with the last variable
/// varying fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiJoint {
    dims: Vec<usize>,
    p: Vec<f64>,
}

impl MultiJoint {
    pub fn new(dims: Vec<usize>, p: Vec<f64>) -> Result<Self, EntropyError> {
        if dims.iter().product::<usize>() != p.len() {
            return Err(EntropyError::InvalidDistribution("shape does not match"));
        }
        check_distribution(&p)?;
        Ok(MultiJoint { dims, p })
    }

    /// `H_g(targets | given)`; variables in neither list are marginalised.
    pub fn conditional(&self, targets: &[usize], given: &[usize], order: Order) -> EntropyValue {
        let size = |vars: &[usize]| vars.iter().map(|&v| self.dims[v]).product::<usize>();
        let ny = size(given);
        let mut cells = vec![0.0; size(targets) * ny];
        let mut idx = vec![0usize; self.dims.len()];
        for &p in &self.p {
            let code = |vars: &[usize]| vars.iter().fold(0, |acc, &v| acc * self.dims[v] + idx[v]);
            cells[code(targets) * ny + code(given)] += p;
            // odometer increment, last variable fastest
            for v in (0..self.dims.len()).rev() {
                idx[v] += 1;
                if idx[v] < self.dims[v] {
                    break;
                }
                idx[v] = 0;
            }
        }
        let mut acc = Conditional::new(order, ny);
        for (c, &p) in cells.iter().enumerate() {
            acc.add(c % ny, p);
        }
        acc.finish()
    }
}

/// The four entropies in `H(X|Y,Z) <= H(X|Y) <= H(U,X|Y) <= H_0(U|Y) + H(X|Y,U)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainRule {
    pub x_given_yz: f64,
    pub x_given_y: f64,
    pub ux_given_y: f64,
    pub split_bound: f64,
    pub holds: bool,
}

/// Checks the generalised chain rule on a joint law of `(U, X, Y, Z)`.
pub fn check_chain_rule(joint: &MultiJoint, order: Order) -> Result<ChainRule, EntropyError> {
    if joint.dims.len() != 4 {
        return Err(EntropyError::InvalidArgument(
            "chain rule needs a joint of (U, X, Y, Z)",
        ));
    }
    let (u, x, y, z) = (0, 1, 2, 3);
    let x_given_yz = joint.conditional(&[x], &[y, z], order).lo;
    let x_given_y = joint.conditional(&[x], &[y], order).lo;
    let ux_given_y = joint.conditional(&[u, x], &[y], order).lo;
    let split_bound = joint.conditional(&[u], &[y], Order::HARTLEY).lo + joint.conditional(&[x], &[y, u], order).lo;
    let s = COMPARISON_SLACK;
    Ok(ChainRule {
        x_given_yz,
        x_given_y,
        ux_given_y,
        split_bound,
        holds: x_given_yz <= x_given_y + s && x_given_y <= ux_given_y + s && ux_given_y <= split_bound + s,
    })
}

fn enumeration_size(d: usize, len: usize, limit: u64) -> Result<u64, EntropyError> {
    let states = (d as u64).checked_pow(len as u32).unwrap_or(u64::MAX);
    if states > limit {
        Err(EntropyError::EnumerationLimit { states, limit })
    } else {
        Ok(states)
    }
}

fn require_tractable(model: &SourceModel, operation: &'static str) -> Result<(), EntropyError> {
    if model.is_tractable() {
        Ok(())
    } else {
        Err(model.unsupported(operation).into())
    }
}

/// `H_inf(X_1..X_k)` together with the lexicographically smallest modal block.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockMinEntropy {
    pub entropy: EntropyValue,
    pub modal_block: Vec<Symbol>,
}

const TIE: f64 = 1e-12;

/// Exact block min-entropy: closed form (IID), max-product dynamic
/// programming (Markov) or enumeration (hidden Markov).
pub fn block_min_entropy(model: &SourceModel, k: usize, limit: u64) -> Result<BlockMinEntropy, EntropyError> {
    require_tractable(model, "block min-entropy")?;
    match model.kind() {
        ModelKind::Iid(m) => {
            let (arg, &pmax) = m
                .probs()
                .iter()
                .enumerate()
                .fold((0, &0.0), |best, cur| if *cur.1 > *best.1 { cur } else { best });
            Ok(BlockMinEntropy {
                entropy: EntropyValue::exact(-(k as f64) * ln(pmax)),
                modal_block: vec![arg as Symbol; k],
            })
        }
        ModelKind::Markov(m) => {
            if k == 0 {
                return Ok(BlockMinEntropy {
                    entropy: EntropyValue::exact(0.0),
                    modal_block: Vec::new(),
                });
            }
            let d = model.alphabet_size();
            // tail[t][s]: best log probability of x_{t+1}..x_k given x_t = s
            let mut tail = vec![vec![0.0; d]; k];
            for t in (0..k - 1).rev() {
                for s in 0..d {
                    tail[t][s] = (0..d)
                        .map(|b| m.log_transition(s as Symbol, b as Symbol) + tail[t + 1][b])
                        .fold(f64::NEG_INFINITY, f64::max);
                }
            }
            let start = |s: usize| m.log_stationary(s as Symbol) + tail[0][s];
            let best = (0..d).map(start).fold(f64::NEG_INFINITY, f64::max);
            let mut block = Vec::with_capacity(k);
            let mut cur = (0..d).find(|&s| start(s) >= best - TIE).unwrap();
            block.push(cur as Symbol);
            for t in 1..k {
                let target = tail[t - 1][cur];
                cur = (0..d)
                    .find(|&b| m.log_transition(cur as Symbol, b as Symbol) + tail[t][b] >= target - TIE)
                    .unwrap();
                block.push(cur as Symbol);
            }
            Ok(BlockMinEntropy {
                entropy: EntropyValue::exact(-best),
                modal_block: block,
            })
        }
        ModelKind::Hmm(_) => {
            enumeration_size(model.alphabet_size(), k, limit)?;
            let mut best = f64::NEG_INFINITY;
            let mut modal = Vec::new();
            model.for_each_block(k, |b, lp, _| {
                if lp > best + TIE {
                    best = lp;
                    modal = b.to_vec();
                }
            })?;
            Ok(BlockMinEntropy {
                entropy: EntropyValue::exact(-best),
                modal_block: modal,
            })
        }
        ModelKind::Copy(_) => unreachable!(),
    }
}

/// `H_inf(X_1..X_k | X_{k+1}..X_{k+i})`; `i = 0` is unconditional.
pub fn conditional_min_entropy(
    model: &SourceModel,
    k: usize,
    i: usize,
    limit: u64,
) -> Result<EntropyValue, EntropyError> {
    require_tractable(model, "conditional min-entropy")?;
    if i == 0 || k == 0 {
        return Ok(block_min_entropy(model, k, limit)?.entropy);
    }
    match model.kind() {
        ModelKind::Iid(_) => Ok(block_min_entropy(model, k, limit)?.entropy),
        ModelKind::Markov(m) => {
            let d = model.alphabet_size();
            // forward max-product: best log P(x_1..x_t) with x_t = s
            let mut fwd: Vec<f64> = (0..d).map(|s| m.log_stationary(s as Symbol)).collect();
            for _ in 1..k {
                fwd = (0..d)
                    .map(|b| {
                        (0..d)
                            .map(|s| fwd[s] + m.log_transition(s as Symbol, b as Symbol))
                            .fold(f64::NEG_INFINITY, f64::max)
                    })
                    .collect();
            }
            let total = (0..d)
                .map(|y| {
                    (0..d)
                        .map(|s| fwd[s] + m.log_transition(s as Symbol, y as Symbol))
                        .fold(f64::NEG_INFINITY, f64::max)
                })
                .fold(f64::NEG_INFINITY, log_add_exp);
            Ok(EntropyValue::exact(-total))
        }
        ModelKind::Hmm(_) => conditional_block_entropy(model, k, i, Order::MIN, limit),
        ModelKind::Copy(_) => unreachable!(),
    }
}

/// `H_g(X_1..X_k | X_{k+1}..X_{k+i})` for any order.
pub fn conditional_block_entropy(
    model: &SourceModel,
    k: usize,
    i: usize,
    order: Order,
    limit: u64,
) -> Result<EntropyValue, EntropyError> {
    require_tractable(model, "conditional block entropy")?;
    let d = model.alphabet_size();
    match model.kind() {
        ModelKind::Iid(m) if i > 0 || order.is_min_entropy() => {
            // independent blocks: the conditioning is vacuous and orders add
            let _ = m;
            block_entropy(model, k, order, limit)
        }
        ModelKind::Markov(_) if order.is_min_entropy() => conditional_min_entropy(model, k, i, limit),
        ModelKind::Markov(m) if i > 0 => {
            // only X_{k+1} matters
            enumeration_size(d, k + 1, limit)?;
            let mut acc = Conditional::new(order, d);
            model.for_each_block(k, |b, lp, _| {
                let last = *b.last().unwrap_or(&0);
                for y in 0..d {
                    let lj = if k == 0 {
                        m.log_stationary(y as Symbol)
                    } else {
                        lp + m.log_transition(last, y as Symbol)
                    };
                    acc.add(y, exp(lj));
                }
            })?;
            Ok(acc.finish())
        }
        ModelKind::Hmm(h) if i > 0 => {
            enumeration_size(d, k + i, limit)?;
            let ny = (d as u64).pow(i as u32) as usize;
            let mut future = vec![0 as Symbol; i];
            let mut betas = Vec::with_capacity(ny);
            for code in 0..ny {
                let mut c = code;
                for slot in future.iter_mut().rev() {
                    *slot = (c % d) as Symbol;
                    c /= d;
                }
                betas.push(h.future_given_state(&future));
            }
            let mut acc = Conditional::new(order, ny);
            model.for_each_block(k, |_, lp, post| {
                let px = exp(lp);
                for (y, beta) in betas.iter().enumerate() {
                    let s: f64 = post.iter().zip(beta).map(|(a, b)| a * b).sum();
                    acc.add(y, px * s);
                }
            })?;
            Ok(acc.finish())
        }
        _ => block_entropy(model, k, order, limit),
    }
}

/// Unconditional `H_g(X_1..X_k)`.
pub fn block_entropy(model: &SourceModel, k: usize, order: Order, limit: u64) -> Result<EntropyValue, EntropyError> {
    require_tractable(model, "block entropy")?;
    if order.is_min_entropy() {
        return Ok(block_min_entropy(model, k, limit)?.entropy);
    }
    if let ModelKind::Iid(m) = model.kind() {
        let one = renyi_entropy(m.probs(), order)?;
        return Ok(EntropyValue::exact(k as f64 * one.lo));
    }
    if let (ModelKind::Markov(m), true) = (model.kind(), order == Order::SHANNON) {
        // H(X_1) + (k - 1) h_1
        if k == 0 {
            return Ok(EntropyValue::exact(0.0));
        }
        let h0 = renyi_entropy(m.stationary(), Order::SHANNON)?.lo;
        let rate = entropy_rate(model, Order::SHANNON)?.lo;
        return Ok(EntropyValue::exact(h0 + (k - 1) as f64 * rate));
    }
    if let ModelKind::Markov(m) = model.kind() {
        return Ok(markov_block_renyi(m, k, order));
    }
    enumeration_size(model.alphabet_size(), k, limit)?;
    let mut acc = Conditional::new(order, 1);
    model.for_each_block(k, |_, lp, _| acc.add(0, exp(lp)))?;
    Ok(acc.finish())
}

/// `H_g(X_1..X_k)` of a chain for finite `g != 1`:
/// `ln(pi^g Q^(k-1) 1) / (1 - g)` with `Q_ab = P_ab^g` (support indicator at
/// `g = 0`), renormalising each step.
fn markov_block_renyi(m: &crate::sources::Markov, k: usize, order: Order) -> EntropyValue {
    if k == 0 {
        return EntropyValue::exact(0.0);
    }
    let g = order.value();
    let pow = |x: f64| {
        if x <= 0.0 {
            0.0
        } else if g == 0.0 {
            1.0
        } else {
            powf(x, g)
        }
    };
    let p = m.transition();
    let d = p.rows();
    let mut v = vec![1.0; d];
    let mut log_scale = 0.0;
    for _ in 1..k {
        let w: Vec<f64> = (0..d).map(|a| (0..d).map(|b| pow(p.get(a, b)) * v[b]).sum()).collect();
        let norm = w.iter().copied().fold(0.0, f64::max);
        log_scale += ln(norm);
        v = w.into_iter().map(|x| x / norm).collect();
    }
    let total: f64 = m.stationary().iter().zip(&v).map(|(&pi, &x)| pow(pi) * x).sum();
    EntropyValue::exact((ln(total) + log_scale) / (1.0 - g))
}

/// Context length `I_k` at a given order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContextLengthValue {
    pub k: usize,
    pub order: Order,
    pub value: u64,
    /// `H_g(X_1..X_k | X_{k+1}..X_{k+I_k})`.
    pub entropy: EntropyValue,
}

/// Least `i >= 1` with `g/(g-1) ln i >= H_g(X_1..X_k | X_{k+1}..X_{k+i})`.
///
/// The threshold increases in `i` and the entropy does not, so the search
/// doubles `i` and then bisects. It never exceeds `D^k`.
pub fn context_length(
    model: &SourceModel,
    k: usize,
    order: Order,
    limit: u64,
) -> Result<ContextLengthValue, EntropyError> {
    let factor = order.threshold_factor()?;
    let d = model.alphabet_size() as u64;
    let bound = d.checked_pow(k as u32).unwrap_or(u64::MAX).max(1);
    let entropy_at = |i: u64| conditional_block_entropy(model, k, i as usize, order, limit);
    let satisfied = |i: u64, h: &EntropyValue| factor * ln(i as f64) >= h.hi - COMPARISON_SLACK;

    let mut hi = 1u64;
    let mut h_hi = entropy_at(1)?;
    while !satisfied(hi, &h_hi) {
        if hi >= bound {
            // unreachable in exact arithmetic: H_g <= k ln D
            break;
        }
        hi = hi.saturating_mul(2).min(bound);
        h_hi = entropy_at(hi)?;
    }
    let mut lo = hi / 2; // not satisfied (or zero)
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        let h = entropy_at(mid)?;
        if satisfied(mid, &h) {
            hi = mid;
            h_hi = h;
        } else {
            lo = mid;
        }
    }
    Ok(ContextLengthValue {
        k,
        order,
        value: hi,
        entropy: h_hi,
    })
}

/// Weighted conditional entropy `-ln sum_i e^{-H_inf(X_1..X_k|X_{k+1}..X_{k+i})} / (i (i+1))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedEntropyValue {
    pub k: usize,
    pub lo: f64,
    pub hi: f64,
    /// Number of summed terms.
    pub truncation: u64,
}

impl WeightedEntropyValue {
    pub fn as_entropy(&self) -> EntropyValue {
        EntropyValue::interval(self.lo, self.hi)
    }
}

/// Interval for the weighted conditional entropy from the first `truncation`
/// terms. The terms `e^{-H(i)}` do not decrease in `i` and are at most one,
/// so the tail `sum_{i > M}` lies in `[e^{-H(M)}, 1] / (M + 1)`. For IID and
/// Markov sources `H(i)` is constant for `i >= 1` and the value is exact.
/// Hidden Markov sources sum as many terms as the enumeration limit allows.
pub fn weighted_conditional_entropy(
    model: &SourceModel,
    k: usize,
    truncation: u64,
    limit: u64,
) -> Result<WeightedEntropyValue, EntropyError> {
    require_tractable(model, "weighted conditional entropy")?;
    if truncation == 0 {
        return Err(EntropyError::InvalidArgument("truncation must be positive"));
    }
    let constant_tail = matches!(model.kind(), ModelKind::Iid(_) | ModelKind::Markov(_));
    let mut sum = 0.0;
    let mut last = 0.0;
    let mut used = 0u64;
    if constant_tail {
        let h = conditional_min_entropy(model, k, 1, limit)?.lo;
        last = exp(-h);
        used = truncation;
        // sum_{i=1}^M 1/(i(i+1)) = 1 - 1/(M+1)
        sum = last * (1.0 - 1.0 / (truncation as f64 + 1.0));
    } else {
        for i in 1..=truncation {
            match conditional_min_entropy(model, k, i as usize, limit) {
                Ok(h) => {
                    last = exp(-h.lo);
                    sum += last / (i as f64 * (i as f64 + 1.0));
                    used = i;
                }
                Err(EntropyError::EnumerationLimit { .. }) if used > 0 => break,
                Err(e) => return Err(e),
            }
        }
    }
    let tail_weight = 1.0 / (used as f64 + 1.0);
    let lower_sum = sum + last * tail_weight;
    let upper_sum = if constant_tail { lower_sum } else { sum + tail_weight };
    Ok(WeightedEntropyValue {
        k,
        lo: (-ln(upper_sum)).max(0.0),
        hi: (-ln(lower_sum)).max(0.0),
        truncation: used,
    })
}

/// Shannon (`g = 1`) or collision (`g = 2`) entropy rate of an IID or Markov
/// source. The collision rate of a chain is `-ln rho(Q)` with `Q_ab = P_ab^2`.
pub fn entropy_rate(model: &SourceModel, order: Order) -> Result<EntropyValue, EntropyError> {
    if order != Order::SHANNON && order != Order::COLLISION {
        return Err(EntropyError::InvalidOrder(order.value()));
    }
    match model.kind() {
        ModelKind::Iid(m) => renyi_entropy(m.probs(), order),
        ModelKind::Markov(m) => {
            let p = m.transition();
            let d = p.rows();
            if order == Order::SHANNON {
                let h: f64 = (0..d)
                    .map(|a| {
                        m.stationary()[a] * p.row(a).iter().filter(|&&x| x > 0.0).map(|&x| -x * ln(x)).sum::<f64>()
                    })
                    .sum();
                Ok(EntropyValue::exact(h))
            } else {
                let q: Vec<f64> = (0..d * d)
                    .map(|c| {
                        let v = p.get(c / d, c % d);
                        v * v
                    })
                    .collect();
                Ok(EntropyValue::exact(-ln(spectral_radius(&q, d))))
            }
        }
        _ => Err(model.unsupported("entropy rate").into()),
    }
}

/// Perron root of a non-negative matrix by power iteration from the all-ones
/// vector.
fn spectral_radius(q: &[f64], d: usize) -> f64 {
    let mut v = vec![1.0 / d as f64; d];
    let mut rho = 0.0;
    for _ in 0..100_000 {
        let w: Vec<f64> = (0..d).map(|a| (0..d).map(|b| q[a * d + b] * v[b]).sum()).collect();
        let norm: f64 = w.iter().sum();
        let change: f64 = w.iter().zip(&v).map(|(x, y)| (x / norm - y).abs()).sum();
        v = w.into_iter().map(|x| x / norm).collect();
        let done = (norm - rho).abs() <= 1e-15 * norm && change <= 1e-14;
        rho = norm;
        if done {
            break;
        }
    }
    rho
}

/// How a varentropy was obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VarentropyMethod {
    Enumeration,
    ClosedForm,
    MonteCarlo { samples: usize },
}

/// `Var[-ln P(X_1..X_k)]` with the ratio `sqrt(Var) / H_1(X_1..X_k)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Varentropy {
    pub variance: EntropyValue,
    pub shannon: EntropyValue,
    pub ratio: f64,
    pub method: VarentropyMethod,
}

/// Exact varentropy by enumeration when `D^k` is within `limit`, the closed
/// form for IID sources, and otherwise a Monte-Carlo interval (three standard
/// errors) from `samples` independent blocks.
pub fn varentropy(
    model: &SourceModel,
    k: usize,
    limit: u64,
    samples: usize,
    seed: SeedSpec,
) -> Result<Varentropy, EntropyError> {
    require_tractable(model, "varentropy")?;
    let finish = |var: EntropyValue, h: f64, method| Varentropy {
        variance: var,
        shannon: EntropyValue::exact(h),
        ratio: if h > 0.0 { sqrt(var.mid()) / h } else { 0.0 },
        method,
    };
    if enumeration_size(model.alphabet_size(), k, limit).is_ok() {
        let (mut m1, mut m2) = (0.0, 0.0);
        model.for_each_block(k, |_, lp, _| {
            if lp > f64::NEG_INFINITY {
                let p = exp(lp);
                m1 += -p * lp;
                m2 += p * lp * lp;
            }
        })?;
        return Ok(finish(
            EntropyValue::exact(m2 - m1 * m1),
            m1,
            VarentropyMethod::Enumeration,
        ));
    }
    if let ModelKind::Iid(m) = model.kind() {
        let (h, v) = single_symbol_moments(m.probs());
        return Ok(finish(
            EntropyValue::exact(k as f64 * v),
            k as f64 * h,
            VarentropyMethod::ClosedForm,
        ));
    }
    if samples < 2 {
        return Err(EntropyError::InvalidArgument(
            "Monte-Carlo varentropy needs at least two samples",
        ));
    }
    let mut values = Vec::with_capacity(samples);
    let mut block = Vec::with_capacity(k);
    let base = seed.stream_seed();
    for j in 0..samples {
        block.clear();
        block.extend(Sampler::new(model, SeedSpec::new(base, j as u64)).take(k));
        values.push(-model.block_log_probability(&block)?);
    }
    let (mean, var) = mean_var(&values);
    let m4 = values
        .iter()
        .map(|x| {
            let e = (x - mean) * (x - mean);
            e * e
        })
        .sum::<f64>()
        / samples as f64;
    let se = sqrt(((m4 - var * var) / samples as f64).max(0.0));
    let h = block_entropy(model, k, Order::SHANNON, limit)
        .map(|v| v.lo)
        .unwrap_or(mean);
    Ok(finish(
        EntropyValue::interval(var - 3.0 * se, var + 3.0 * se),
        h,
        VarentropyMethod::MonteCarlo { samples },
    ))
}

/// Shannon entropy and varentropy of one symbol.
fn single_symbol_moments(p: &[f64]) -> (f64, f64) {
    let h: f64 = p.iter().filter(|&&x| x > 0.0).map(|&x| -x * ln(x)).sum();
    let m2: f64 = p.iter().filter(|&&x| x > 0.0).map(|&x| x * ln(x) * ln(x)).sum();
    (h, m2 - h * h)
}

/// Plug-in entropy of the empirical law of overlapping `k`-blocks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlugInEntropy {
    pub value: EntropyValue,
    pub blocks: usize,
    pub distinct: usize,
    /// Set when `D^k` is not small compared to the number of blocks; the
    /// plug-in estimator is then strongly biased downwards.
    pub undersampled: bool,
}

pub fn plug_in_entropy(seq: &SymbolSeq, k: usize, order: Order) -> Result<PlugInEntropy, EntropyError> {
    if k == 0 || k > seq.len() {
        return Err(EntropyError::InvalidArgument("block length must be in 1..=N"));
    }
    let s = seq.symbols();
    let d = seq.alphabet_size() as u64;
    let blocks = s.len() - k + 1;
    let mut counts: Vec<u64> = Vec::new();
    match d.checked_pow(k as u32) {
        Some(_) => {
            let mut codes: Vec<u64> = s
                .windows(k)
                .map(|w| w.iter().fold(0u64, |acc, &x| acc * d + x as u64))
                .collect();
            codes.sort_unstable();
            run_lengths(&codes, &mut counts);
        }
        None => {
            let mut windows: Vec<&[Symbol]> = s.windows(k).collect();
            windows.sort_unstable();
            run_lengths(&windows, &mut counts);
        }
    }
    let mut acc = Conditional::new(order, 1);
    for &c in &counts {
        acc.add(0, c as f64 / blocks as f64);
    }
    let space = d.checked_pow(k as u32).unwrap_or(u64::MAX);
    Ok(PlugInEntropy {
        value: acc.finish(),
        blocks,
        distinct: counts.len(),
        undersampled: space.saturating_mul(10) > blocks as u64,
    })
}

fn run_lengths<T: PartialEq>(sorted: &[T], out: &mut Vec<u64>) {
    let mut start = 0;
    for i in 1..=sorted.len() {
        if i == sorted.len() || sorted[i] != sorted[start] {
            out.push((i - start) as u64);
            start = i;
        }
    }
}

/// Largest pointwise ratio `P(x_1..x_{n+m}) / (P(x_1..x_n) P(x_{n+1}..x_{n+m}))`
/// over windows `n <= n_max`, `m <= m_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PmiBound {
    pub ratio: f64,
    /// `ln ratio`, a lower bound on the supremum over all windows.
    pub log_ratio: EntropyValue,
    pub window: (usize, usize),
}

pub fn pmi_bound_estimate(
    model: &SourceModel,
    n_max: usize,
    m_max: usize,
    limit: u64,
) -> Result<PmiBound, EntropyError> {
    require_tractable(model, "pointwise mutual information bound")?;
    if n_max == 0 || m_max == 0 {
        return Err(EntropyError::InvalidArgument("windows must be positive"));
    }
    let d = model.alphabet_size();
    enumeration_size(d, n_max + m_max, limit)?;
    let table = |len: usize| -> Result<Vec<f64>, EntropyError> {
        let mut out = Vec::with_capacity(d.pow(len as u32));
        model.for_each_block(len, |_, lp, _| out.push(lp))?;
        Ok(out)
    };
    let mut best = (f64::NEG_INFINITY, (1, 1));
    for n in 1..=n_max {
        let head = table(n)?;
        for m in 1..=m_max {
            let tail = table(m)?;
            let tail_size = d.pow(m as u32);
            let mut code = 0usize;
            model.for_each_block(n + m, |_, lp, _| {
                if lp > f64::NEG_INFINITY {
                    let r = lp - head[code / tail_size] - tail[code % tail_size];
                    if r > best.0 {
                        best = (r, (n, m));
                    }
                }
                code += 1;
            })?;
        }
    }
    Ok(PmiBound {
        ratio: exp(best.0),
        log_ratio: EntropyValue::interval(best.0, f64::INFINITY),
        window: best.1,
    })
}

/// Kind of an entropy table row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum RowKind {
    /// `H_g(X_1..X_k | X_{k+1}..X_{k+i})`, `i = 0` unconditional.
    Plain,
    /// Weighted conditional entropy; `i` holds the truncation.
    Weighted,
    /// Context length; `i` holds `I_k` and the value is the entropy at `I_k`.
    ContextLength,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyRow {
    pub order: Order,
    pub k: usize,
    pub i: u64,
    pub value: EntropyValue,
    pub kind: RowKind,
}

/// Values `H_g(X_1..X_k | X_{k+1}..X_{k+i})` over a grid, plus weighted
/// entropy and context length rows.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EntropyTable {
    pub rows: Vec<EntropyRow>,
}

impl EntropyTable {
    /// Builds the table; grid cells beyond the enumeration limit are skipped.
    pub fn build(
        model: &SourceModel,
        orders: &[Order],
        ks: &[usize],
        conditioning: &[usize],
        truncation: u64,
        limit: u64,
    ) -> Result<Self, EntropyError> {
        let mut rows = Vec::new();
        let skip_limit = |r: Result<(), EntropyError>| match r {
            Err(EntropyError::EnumerationLimit { .. }) => Ok(()),
            other => other,
        };
        for &k in ks {
            for &order in orders {
                for &i in conditioning {
                    skip_limit(conditional_block_entropy(model, k, i, order, limit).map(|value| {
                        rows.push(EntropyRow {
                            order,
                            k,
                            i: i as u64,
                            value,
                            kind: RowKind::Plain,
                        })
                    }))?;
                }
                if order.threshold_factor().is_ok() {
                    skip_limit(context_length(model, k, order, limit).map(|c| {
                        rows.push(EntropyRow {
                            order,
                            k,
                            i: c.value,
                            value: c.entropy,
                            kind: RowKind::ContextLength,
                        })
                    }))?;
                }
            }
            skip_limit(weighted_conditional_entropy(model, k, truncation, limit).map(|w| {
                rows.push(EntropyRow {
                    order: Order::MIN,
                    k,
                    i: w.truncation,
                    value: w.as_entropy(),
                    kind: RowKind::Weighted,
                })
            }))?;
        }
        Ok(EntropyTable { rows })
    }

    pub fn get(&self, order: Order, k: usize, i: u64) -> Option<EntropyValue> {
        self.rows
            .iter()
            .find(|r| r.kind == RowKind::Plain && r.order == order && r.k == k && r.i == i)
            .map(|r| r.value)
    }

    /// Monotonicity in the order and, for the min-entropy, in the
    /// conditioning length.
    pub fn is_consistent(&self) -> bool {
        let plain: Vec<&EntropyRow> = self.rows.iter().filter(|r| r.kind == RowKind::Plain).collect();
        plain.iter().all(|a| {
            plain.iter().all(|b| {
                if a.k != b.k {
                    return true;
                }
                let by_order = a.i == b.i && a.order.value() < b.order.value();
                let by_context = a.order.is_min_entropy() && b.order.is_min_entropy() && a.i < b.i;
                !(by_order || by_context) || a.value.hi >= b.value.lo - COMPARISON_SLACK
            })
        })
    }
}

/// Shannon entropy of a distribution in nats (shorthand).
pub fn shannon(dist: &[f64]) -> Result<f64, EntropyError> {
    Ok(renyi_entropy(dist, Order::SHANNON)?.lo)
}

/// `ln(sum exp)` helper re-exported for callers combining log probabilities.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    values.iter().copied().fold(f64::NEG_INFINITY, log_add_exp)
}

#[cfg(test)]
mod tests;
