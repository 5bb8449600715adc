//! Hilberg exponents, fits of the two growth laws and ensemble summaries of
//! `T`-increasing statistics.
//!
//! The Hilberg exponent of a sequence `a_k` is `limsup max(0, ln a_k / ln k)`.
//! A finite window cannot certify a limsup, so [`hilberg_exponent`] reports two
//! estimates: the largest ratio in the window and the clipped slope of a
//! log-log regression.

use alloc::vec::Vec;

use crate::math::{least_squares, ln, mean_var, sqrt};
use crate::seqstat::{curve, CurveKind, SeqError, StatCurve, SymbolSeq};
use crate::sources::{sample_path, SeedSpec, SourceError, SourceModel};

/// Fewest indices a window must hold for [`hilberg_exponent`].
pub const MIN_EXPONENT_POINTS: usize = 8;
/// Fewest usable points for [`fit_law`].
pub const MIN_LAW_POINTS: usize = 10;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HilbergError {
    #[error("window [{0}, {1}] is empty")]
    EmptyWindow(u64, u64),
    #[error("{found} usable points, need at least {required}")]
    TooFewPoints { found: usize, required: usize },
    #[error("value {value} at index {index} is negative or not finite")]
    InvalidValue { index: u64, value: f64 },
    #[error("{law:?} fits need a {expected} curve, got {found}")]
    WrongCurve {
        law: Law,
        expected: &'static str,
        found: &'static str,
    },
    #[error("statistic {0} is not supported here")]
    UnsupportedStatistic(&'static str),
    #[error("need at least two paths")]
    TooFewPaths,
    #[error(transparent)]
    Seq(#[from] SeqError),
    #[error(transparent)]
    Source(#[from] SourceError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum FitMethod {
    TailMax,
    LoglogRegression,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HilbergFit {
    pub exponent: f64,
    pub window: (u64, u64),
    pub method: FitMethod,
    /// Tail max: gap between the maximum and the ratio at the largest index.
    /// Regression: root mean square residual.
    pub residual: f64,
    pub points: usize,
}

/// Both finite-window estimates of one exponent.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HilbergEstimate {
    pub tail_max: HilbergFit,
    pub regression: HilbergFit,
}

impl HilbergEstimate {
    pub fn get(&self, method: FitMethod) -> &HilbergFit {
        match method {
            FitMethod::TailMax => &self.tail_max,
            FitMethod::LoglogRegression => &self.regression,
        }
    }
}

/// Estimates the Hilberg exponent of `(k, a_k)` pairs with `k` in `window`.
///
/// Indices below 2 carry no information (`ln 1 = 0`) and are skipped. Zero
/// values contribute 0 to the tail max and are left out of the regression;
/// with fewer than two positive values the regression exponent is 0.
pub fn hilberg_exponent(series: &[(u64, f64)], window: (u64, u64)) -> Result<HilbergEstimate, HilbergError> {
    let (lo, hi) = window;
    if lo > hi || hi < 2 {
        return Err(HilbergError::EmptyWindow(lo, hi));
    }
    let mut pts: Vec<(u64, f64)> = Vec::new();
    for &(k, a) in series {
        if !(a >= 0.0 && a.is_finite()) {
            return Err(HilbergError::InvalidValue { index: k, value: a });
        }
        if k >= lo.max(2) && k <= hi {
            pts.push((k, a));
        }
    }
    pts.sort_by_key(|p| p.0);
    if pts.len() < MIN_EXPONENT_POINTS {
        return Err(HilbergError::TooFewPoints {
            found: pts.len(),
            required: MIN_EXPONENT_POINTS,
        });
    }
    let ratio = |&(k, a): &(u64, f64)| if a > 0.0 { (ln(a) / ln(k as f64)).max(0.0) } else { 0.0 };
    let tail = pts.iter().map(ratio).fold(0.0, f64::max);
    let span = (pts[0].0, pts[pts.len() - 1].0);
    let tail_max = HilbergFit {
        exponent: tail,
        window: span,
        method: FitMethod::TailMax,
        residual: tail - ratio(&pts[pts.len() - 1]),
        points: pts.len(),
    };

    let (xs, ys): (Vec<f64>, Vec<f64>) = pts
        .iter()
        .filter(|p| p.1 > 0.0)
        .map(|&(k, a)| (ln(k as f64), ln(a)))
        .unzip();
    let (slope, rms) = if xs.len() >= 2 {
        let (slope, intercept, _) = least_squares(&xs, &ys);
        let sse: f64 = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| {
                let e = y - slope * x - intercept;
                e * e
            })
            .sum();
        (slope.max(0.0), sqrt(sse / xs.len() as f64))
    } else {
        (0.0, 0.0)
    };
    Ok(HilbergEstimate {
        tail_max,
        regression: HilbergFit {
            exponent: slope,
            window: span,
            method: FitMethod::LoglogRegression,
            residual: rms,
            points: xs.len(),
        },
    })
}

/// Uncensored points of a curve as `(index, value)` pairs.
pub fn curve_series(curve: &StatCurve) -> Vec<(u64, f64)> {
    curve
        .points()
        .iter()
        .filter_map(|p| p.value.uncensored().map(|v| (p.index, v as f64)))
        .collect()
}

/// `2, 4, 8, ...` up to `max`.
pub fn dyadic_grid(max: u64) -> Vec<u64> {
    core::iter::successors(Some(2u64), |&k| k.checked_mul(2))
        .take_while(|&k| k <= max)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Law {
    /// `L2_n ~ C (ln n)^alpha`.
    LogPower,
    /// `ln R2_k ~ C k^beta`.
    StretchedExp,
}

impl Law {
    pub fn name(self) -> &'static str {
        match self {
            Law::LogPower => "log_power",
            Law::StretchedExp => "stretched_exp",
        }
    }

    /// The curve kind the law describes.
    pub fn curve_kind(self) -> CurveKind {
        match self {
            Law::LogPower => CurveKind::L2,
            Law::StretchedExp => CurveKind::R2,
        }
    }

    /// Linearising coordinates, `None` when the point is unusable.
    fn coordinates(self, index: u64, value: f64) -> Option<(f64, f64)> {
        match self {
            Law::LogPower if index >= 3 && value > 0.0 => Some((ln(ln(index as f64)), ln(value))),
            Law::StretchedExp if index >= 1 && value > 1.0 => Some((ln(index as f64), ln(ln(value)))),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LawFit {
    pub law: Law,
    /// `alpha` for [`Law::LogPower`], `beta` for [`Law::StretchedExp`].
    pub parameter: f64,
    #[cfg_attr(feature = "serde", serde(rename = "C"))]
    pub c: f64,
    pub r_squared: f64,
    pub window: (u64, u64),
    pub points: usize,
    pub censored_fraction: f64,
}

/// Least-squares fit of a law to `(index, value)` pairs.
pub fn fit_law_points(law: Law, points: &[(u64, f64)]) -> Result<LawFit, HilbergError> {
    let (mut xs, mut ys, mut idx) = (Vec::new(), Vec::new(), Vec::new());
    for &(k, v) in points {
        if let Some((x, y)) = law.coordinates(k, v) {
            xs.push(x);
            ys.push(y);
            idx.push(k);
        }
    }
    if xs.len() < MIN_LAW_POINTS {
        return Err(HilbergError::TooFewPoints {
            found: xs.len(),
            required: MIN_LAW_POINTS,
        });
    }
    let (slope, intercept, r2) = least_squares(&xs, &ys);
    Ok(LawFit {
        law,
        parameter: slope,
        c: crate::math::exp(intercept),
        r_squared: r2,
        window: (*idx.iter().min().unwrap(), *idx.iter().max().unwrap()),
        points: xs.len(),
        censored_fraction: 0.0,
    })
}

/// Fits a law to the uncensored points of an `L2` or `R2` curve.
pub fn fit_law(curve: &StatCurve, law: Law) -> Result<LawFit, HilbergError> {
    if curve.kind() != law.curve_kind() {
        return Err(HilbergError::WrongCurve {
            law,
            expected: law.curve_kind().name(),
            found: curve.kind().name(),
        });
    }
    let mut fit = fit_law_points(law, &curve_series(curve))?;
    fit.censored_fraction = curve.censored_count() as f64 / curve.len() as f64;
    Ok(fit)
}

/// A statistic of a path indexed by `k` (or `n` for lengths).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Statistic {
    Curve(CurveKind),
    /// `-ln P(X_1..X_k)`.
    NegLogProb,
}

impl Statistic {
    pub const ALL: [Statistic; 5] = [
        Statistic::Curve(CurveKind::L1),
        Statistic::Curve(CurveKind::L2),
        Statistic::Curve(CurveKind::R1),
        Statistic::Curve(CurveKind::R2),
        Statistic::NegLogProb,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Statistic::Curve(k) => k.name(),
            Statistic::NegLogProb => "neglogp",
        }
    }

    pub fn parse(s: &str) -> Option<Statistic> {
        if s.eq_ignore_ascii_case("neglogp") {
            Some(Statistic::NegLogProb)
        } else {
            CurveKind::parse(s).map(Statistic::Curve)
        }
    }
}

/// Values of a statistic at every index `1..=N` of a path; `None` marks a
/// censored value.
fn statistic_values(
    seq: &SymbolSeq,
    stat: Statistic,
    model: Option<&SourceModel>,
) -> Result<Vec<Option<f64>>, HilbergError> {
    match stat {
        Statistic::Curve(kind) => Ok(curve(seq, kind)
            .points()
            .iter()
            .map(|p| p.value.uncensored().map(|v| v as f64))
            .collect()),
        Statistic::NegLogProb => {
            let model = model.ok_or(HilbergError::UnsupportedStatistic("neglogp without a model"))?;
            let out = model
                .prefix_log_probabilities(seq.symbols())?
                .into_iter()
                .map(|lp| Some(-lp))
                .collect();
            Ok(out)
        }
    }
}

/// Scale on which path values are aggregated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Scale {
    Linear,
    /// Natural logarithm of each value, e.g. `ln R1_k`.
    Log,
}

/// Per-index summary over Monte-Carlo paths.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EnsembleRow {
    pub index: u64,
    /// `sup{r : P(X < r) <= 1/2}` of the empirical law.
    pub median: f64,
    pub mean: f64,
    pub variance: f64,
    pub used: usize,
    pub censored: usize,
}

impl EnsembleRow {
    /// `sqrt(Var) / mean`.
    pub fn relative_spread(&self) -> f64 {
        if self.mean > 0.0 {
            sqrt(self.variance) / self.mean
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EnsembleSummary {
    pub statistic: Statistic,
    pub scale: Scale,
    pub paths: usize,
    pub rows: Vec<EnsembleRow>,
}

impl EnsembleSummary {
    pub fn median_series(&self) -> Vec<(u64, f64)> {
        self.rows
            .iter()
            .filter(|r| r.used > 0)
            .map(|r| (r.index, r.median))
            .collect()
    }

    pub fn mean_series(&self) -> Vec<(u64, f64)> {
        self.rows
            .iter()
            .filter(|r| r.used > 0)
            .map(|r| (r.index, r.mean))
            .collect()
    }
}

/// Empirical median `sup{r : #{x < r} <= m/2}`, which is the element of rank
/// `floor(m/2)`.
pub fn empirical_median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(|a, b| a.total_cmp(b));
    Some(values[values.len() / 2])
}

/// Median, mean and variance of `R1`, `R2` or `-ln P(X_1..X_k)` (or their
/// logarithms) at each `k` of `ks`, over `paths` independent paths of length
/// `n`. Path `j` uses stream `j` of `seed`.
pub fn ensemble_summary(
    model: &SourceModel,
    stat: Statistic,
    scale: Scale,
    ks: &[u64],
    paths: usize,
    n: usize,
    seed: SeedSpec,
) -> Result<EnsembleSummary, HilbergError> {
    if let Statistic::Curve(kind) = stat {
        if kind.is_length() {
            return Err(HilbergError::UnsupportedStatistic(kind.name()));
        }
    }
    if paths < 2 {
        return Err(HilbergError::TooFewPaths);
    }
    let mut samples: Vec<Vec<f64>> = ks.iter().map(|_| Vec::with_capacity(paths)).collect();
    let mut censored = alloc::vec![0usize; ks.len()];
    for j in 0..paths {
        let seq = sample_path(model, n, seed.stream(j as u64));
        let values = match stat {
            Statistic::NegLogProb => {
                let s = seq.symbols();
                ks.iter()
                    .map(|&k| {
                        let k = (k as usize).min(s.len());
                        model.block_log_probability(&s[..k]).map(|lp| Some(-lp))
                    })
                    .collect::<Result<Vec<_>, _>>()?
            }
            Statistic::Curve(kind) => {
                let c = curve(&seq, kind);
                ks.iter()
                    .map(|&k| c.get(k).and_then(|v| v.uncensored()).map(|v| v as f64))
                    .collect()
            }
        };
        for (slot, v) in values.into_iter().enumerate() {
            match v {
                Some(v) if scale == Scale::Log => samples[slot].push(ln(v)),
                Some(v) => samples[slot].push(v),
                None => censored[slot] += 1,
            }
        }
    }
    let rows = ks
        .iter()
        .zip(samples.iter_mut())
        .zip(&censored)
        .map(|((&k, vals), &c)| {
            let (mean, variance) = if vals.len() >= 2 {
                mean_var(vals)
            } else {
                (vals.first().copied().unwrap_or(0.0), 0.0)
            };
            EnsembleRow {
                index: k,
                median: empirical_median(vals).unwrap_or(0.0),
                mean,
                variance,
                used: vals.len(),
                censored: c,
            }
        })
        .collect();
    Ok(EnsembleSummary {
        statistic: stat,
        scale,
        paths,
        rows,
    })
}

/// Outcome of a `T`-increasing check.
#[derive(Debug, Clone, PartialEq)]
pub struct TIncreasingReport {
    /// Indices `k` with `J_{k+1}(x) < J_k(Tx)`.
    pub violations: Vec<u64>,
    /// Number of indices where both sides were uncensored.
    pub checked: usize,
}

impl TIncreasingReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

fn compare_shifted(x: &[Option<f64>], tx: &[Option<f64>], k_max: usize) -> TIncreasingReport {
    let mut report = TIncreasingReport {
        violations: Vec::new(),
        checked: 0,
    };
    // x[k] is J_{k+1}(x), tx[k - 1] is J_k(Tx)
    for k in 1..=k_max.min(tx.len()).min(x.len().saturating_sub(1)) {
        if let (Some(a), Some(b)) = (x[k], tx[k - 1]) {
            report.checked += 1;
            if a < b {
                report.violations.push(k as u64);
            }
        }
    }
    report
}

fn dense_values(c: &StatCurve) -> Vec<Option<f64>> {
    let len = c.points().last().map_or(0, |p| p.index as usize);
    let mut out = alloc::vec![None; len];
    for p in c.points() {
        out[p.index as usize - 1] = p.value.uncensored().map(|v| v as f64);
    }
    out
}

/// Checks `J_{k+1}(x) >= J_k(Tx)` on two curves, the second computed on the
/// sequence shifted by one symbol.
pub fn check_t_increasing_curves(
    x: &StatCurve,
    tx: &StatCurve,
    k_max: usize,
) -> Result<TIncreasingReport, HilbergError> {
    if x.kind() != tx.kind() {
        return Err(SeqError::KindMismatch {
            left: x.kind(),
            right: tx.kind(),
        }
        .into());
    }
    Ok(compare_shifted(&dense_values(x), &dense_values(tx), k_max))
}

/// `T`-increasing check of a statistic on one sequence. `-ln P` needs the
/// model that assigns the probabilities.
pub fn check_t_increasing_seq(
    seq: &SymbolSeq,
    stat: Statistic,
    k_max: usize,
    model: Option<&SourceModel>,
) -> Result<TIncreasingReport, HilbergError> {
    let x = statistic_values(seq, stat, model)?;
    let tx = statistic_values(&seq.shift(1), stat, model)?;
    Ok(compare_shifted(&x, &tx, k_max))
}

/// `T`-increasing check on one sampled path of length `n`.
pub fn check_t_increasing(
    model: &SourceModel,
    stat: Statistic,
    k_max: usize,
    n: usize,
    seed: SeedSpec,
) -> Result<TIncreasingReport, HilbergError> {
    let seq = sample_path(model, n, seed);
    check_t_increasing_seq(&seq, stat, k_max, Some(model))
}
