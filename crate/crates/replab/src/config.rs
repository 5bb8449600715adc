//! Run configuration: a single JSON document, overridden by `REPLAB_SEED`
//! and then by command-line flags.

use std::fmt;
use std::path::{Path, PathBuf};

use replab_core::entropy::Order;
use replab_core::verify::RhoRule;
use replab_core::SourceModel;
use serde::{Deserialize, Serialize};

pub const SEED_ENV: &str = "REPLAB_SEED";

/// A bad configuration value, reported with the exit code for usage errors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

pub fn config_error(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// One symbol per byte, alphabet of size 256.
    #[default]
    Bytes,
    /// Whitespace-separated tokens, alphabet built from the input.
    Tokens,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Kac,
    Kontoyiannis,
    Chenmoy,
    Prop1,
    Prop2,
    Prop3,
    Prop4,
    Theorems,
    All,
}

impl Suite {
    pub const EACH: [Suite; 8] = [
        Suite::Kac,
        Suite::Kontoyiannis,
        Suite::Chenmoy,
        Suite::Prop1,
        Suite::Prop2,
        Suite::Prop3,
        Suite::Prop4,
        Suite::Theorems,
    ];
}

/// A Rényi order in a config: a number or `"inf"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OrderSpec {
    Number(f64),
    Name(String),
}

impl OrderSpec {
    pub fn parse(s: &str) -> OrderSpec {
        match s.trim().parse::<f64>() {
            Ok(v) if v.is_finite() => OrderSpec::Number(v),
            _ => OrderSpec::Name(s.trim().to_string()),
        }
    }

    pub fn order(&self) -> anyhow::Result<Order> {
        let gamma = match self {
            OrderSpec::Number(v) => *v,
            OrderSpec::Name(n) => match n.to_ascii_lowercase().as_str() {
                "inf" | "infinity" | "min" => f64::INFINITY,
                other => other
                    .parse()
                    .map_err(|_| config_error(format!("orders: cannot parse {n:?} as an order")))?,
            },
        };
        Order::new(gamma).map_err(|e| config_error(format!("orders: {e}")))
    }
}

/// Source model as written in a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    #[serde(rename = "type")]
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probs: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transition: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub emission: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub copy_prob: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_copy_len: Option<usize>,
    /// Alphabet size for `uniform` and `cycle`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub allow_periodic: Option<bool>,
}

impl ModelSpec {
    fn of(kind: &str) -> Self {
        ModelSpec {
            kind: kind.to_string(),
            probs: None,
            transition: None,
            emission: None,
            copy_prob: None,
            max_copy_len: None,
            d: None,
            allow_periodic: None,
        }
    }

    /// Parses `--model`: inline JSON, or a shorthand such as `fair-coin`,
    /// `uniform:4`, `iid:0.3,0.7`, `two-state:0.1,0.2`,
    /// `markov:0.9,0.1;0.2,0.8`, `cycle:3`, `constant` or
    /// `copy:0.3,40[,p0,p1,...]`.
    pub fn parse(s: &str) -> anyhow::Result<Self> {
        let s = s.trim();
        if s.starts_with('{') {
            return serde_json::from_str(s).map_err(|e| config_error(format!("model: {e}")));
        }
        let (name, args) = s.split_once(':').unwrap_or((s, ""));
        let nums = |field: &str, text: &str| -> anyhow::Result<Vec<f64>> {
            text.split(',')
                .filter(|t| !t.trim().is_empty())
                .map(|t| {
                    t.trim()
                        .parse::<f64>()
                        .map_err(|_| config_error(format!("model.{field}: cannot parse {t:?} as a number")))
                })
                .collect()
        };
        let count = |text: &str| -> anyhow::Result<usize> {
            text.trim()
                .parse()
                .map_err(|_| config_error(format!("model.d: cannot parse {text:?} as an alphabet size")))
        };
        let name = name.replace('-', "_");
        let mut spec = ModelSpec::of(&name);
        match name.as_str() {
            "fair_coin" => {
                spec.kind = "uniform".into();
                spec.d = Some(2);
            }
            "constant" => {}
            "uniform" | "cycle" => spec.d = Some(count(args)?),
            "iid" => spec.probs = Some(nums("probs", args)?),
            "two_state" => {
                let v = nums("transition", args)?;
                if v.len() != 2 {
                    return Err(config_error("model: two-state needs a,b (P(1|0), P(0|1))"));
                }
                spec.kind = "markov".into();
                spec.transition = Some(vec![vec![1.0 - v[0], v[0]], vec![v[1], 1.0 - v[1]]]);
            }
            "markov" => {
                let rows = args
                    .split(';')
                    .map(|r| nums("transition", r))
                    .collect::<anyhow::Result<Vec<_>>>()?;
                spec.transition = Some(rows);
            }
            "copy" => {
                let v = nums("copy_prob", args)?;
                if v.len() < 2 {
                    return Err(config_error("model: copy needs copy_prob,max_copy_len[,base probs]"));
                }
                spec.copy_prob = Some(v[0]);
                spec.max_copy_len = Some(v[1] as usize);
                spec.probs = Some(if v.len() > 2 { v[2..].to_vec() } else { vec![0.5, 0.5] });
            }
            other => return Err(config_error(format!("model.type: unknown model {other:?}"))),
        }
        Ok(spec)
    }

    pub fn build(&self) -> anyhow::Result<SourceModel> {
        let need = |field: &str| config_error(format!("model.{field} is required for type {:?}", self.kind));
        let wrap = |e: replab_core::SourceError| config_error(format!("model: {e}"));
        match self.kind.as_str() {
            "iid" => {
                let p = self.probs.clone().ok_or_else(|| need("probs"))?;
                SourceModel::iid(p).map_err(wrap)
            }
            "uniform" => match self.d.ok_or_else(|| need("d"))? {
                0 => Err(config_error("model.d: alphabet size must be positive")),
                d => Ok(SourceModel::uniform(d)),
            },
            "constant" => Ok(SourceModel::constant()),
            "cycle" => match self.d.ok_or_else(|| need("d"))? {
                0 => Err(config_error("model.d: alphabet size must be positive")),
                d => Ok(SourceModel::cycle(d)),
            },
            "markov" => {
                let t = self.transition.as_ref().ok_or_else(|| need("transition"))?;
                if self.allow_periodic.unwrap_or(false) {
                    SourceModel::markov_allow_periodic(t)
                } else {
                    SourceModel::markov(t)
                }
                .map_err(wrap)
            }
            "hmm" => {
                let t = self.transition.as_ref().ok_or_else(|| need("transition"))?;
                let e = self.emission.as_ref().ok_or_else(|| need("emission"))?;
                SourceModel::hmm(t, e).map_err(wrap)
            }
            "copy" => {
                let p = self.probs.clone().ok_or_else(|| need("probs"))?;
                let c = self.copy_prob.ok_or_else(|| need("copy_prob"))?;
                let m = self.max_copy_len.ok_or_else(|| need("max_copy_len"))?;
                SourceModel::copy_source(p, c, m).map_err(wrap)
            }
            other => Err(config_error(format!(
                "model.type: unknown model {other:?} (expected iid, uniform, constant, cycle, markov, hmm or copy)"
            ))),
        }
    }
}

/// Every parameter of a run. Unset optional fields take per-command
/// defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: String,
    pub input: Option<PathBuf>,
    pub mode: Mode,
    pub model: Option<ModelSpec>,
    pub seed: u64,
    /// Horizon: sampled path length.
    pub n: Option<usize>,
    /// Indices `n` at which length curves are reported.
    pub n_grid: Option<String>,
    /// Block lengths `k`.
    pub k_grid: Option<String>,
    pub suite: Option<Suite>,
    /// Block length for the Kac and Chen-Moy checks.
    pub k: Option<usize>,
    pub block: Option<Vec<u32>>,
    pub trials: Option<usize>,
    pub paths: Option<usize>,
    pub rho: RhoRule,
    pub k0: usize,
    pub pass_fraction: f64,
    pub slack: f64,
    /// Signed relative perturbation of every theoretical bound (negative
    /// controls).
    pub perturbation: f64,
    pub orders: Vec<OrderSpec>,
    pub conditioning: Vec<usize>,
    pub truncation: u64,
    pub enumeration_limit: u64,
    pub bits: bool,
    pub output: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            command: String::new(),
            input: None,
            mode: Mode::Bytes,
            model: None,
            seed: 0,
            n: None,
            n_grid: None,
            k_grid: None,
            suite: None,
            k: None,
            block: None,
            trials: None,
            paths: None,
            rho: RhoRule::KPowMinus2,
            k0: 8,
            pass_fraction: 0.95,
            slack: 0.1,
            perturbation: 0.0,
            orders: vec![
                OrderSpec::Number(0.0),
                OrderSpec::Number(1.0),
                OrderSpec::Number(2.0),
                OrderSpec::Name("inf".into()),
            ],
            conditioning: vec![0, 1, 2],
            truncation: replab_core::entropy::DEFAULT_TRUNCATION,
            enumeration_limit: replab_core::entropy::DEFAULT_ENUMERATION_LIMIT,
            bits: false,
            output: PathBuf::from("replab-out"),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_error(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| config_error(format!("config {}: {e}", path.display())))
    }

    /// Applies `REPLAB_SEED` if set.
    pub fn apply_env(&mut self) -> anyhow::Result<()> {
        if let Ok(v) = std::env::var(SEED_ENV) {
            self.seed = v
                .trim()
                .parse()
                .map_err(|_| config_error(format!("{SEED_ENV}: cannot parse {v:?} as a seed")))?;
        }
        Ok(())
    }

    pub fn model(&self) -> anyhow::Result<SourceModel> {
        self.model
            .as_ref()
            .ok_or_else(|| config_error("a model is required (--model or \"model\" in the config)"))?
            .build()
    }

    pub fn orders(&self) -> anyhow::Result<Vec<Order>> {
        self.orders.iter().map(OrderSpec::order).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}

/// Parses a grid: `dyadic` (1, 2, 4, ... and `max`), `dyadic:M`, `a..=b`,
/// `a..b` or a comma list. Indices outside `1..=max` are dropped.
pub fn parse_grid(spec: &str, max: u64) -> anyhow::Result<Vec<u64>> {
    let bad = || config_error(format!("grid: cannot parse {spec:?}"));
    let spec = spec.trim();
    let mut out: Vec<u64> = if let Some(rest) = spec.strip_prefix("dyadic") {
        let cap = match rest.strip_prefix(':') {
            Some(m) => m.trim().parse::<u64>().map_err(|_| bad())?.min(max),
            None if rest.is_empty() => max,
            None => return Err(bad()),
        };
        let mut g: Vec<u64> = std::iter::successors(Some(1u64), |&k| k.checked_mul(2))
            .take_while(|&k| k <= cap)
            .collect();
        if cap >= 1 && g.last() != Some(&cap) {
            g.push(cap);
        }
        g
    } else if let Some((a, b)) = spec.split_once("..") {
        let (b, inclusive) = match b.strip_prefix('=') {
            Some(b) => (b, true),
            None => (b, false),
        };
        let a: u64 = a.trim().parse().map_err(|_| bad())?;
        let b: u64 = b.trim().parse().map_err(|_| bad())?;
        let end = if inclusive { b } else { b.saturating_sub(1) };
        (a..=end.min(max)).collect()
    } else {
        spec.split(',')
            .map(|t| t.trim().parse::<u64>().map_err(|_| bad()))
            .collect::<anyhow::Result<_>>()?
    };
    out.retain(|&k| k >= 1 && k <= max);
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// Parses `k_pow_minus_2` or `table:k=rho,k=rho,...`.
pub fn parse_rho(s: &str) -> anyhow::Result<RhoRule> {
    let s = s.trim();
    if s == "k_pow_minus_2" || s == "k^-2" {
        return Ok(RhoRule::KPowMinus2);
    }
    let bad = || {
        config_error(format!(
            "rho: cannot parse {s:?} (expected k_pow_minus_2 or table:k=rho,...)"
        ))
    };
    let table = s.strip_prefix("table:").ok_or_else(bad)?;
    let entries = table
        .split(',')
        .map(|e| {
            let (k, r) = e.split_once('=').ok_or_else(bad)?;
            let k: u64 = k.trim().parse().map_err(|_| bad())?;
            let r: f64 = r.trim().parse().map_err(|_| bad())?;
            if !(r > 0.0 && r.is_finite()) {
                return Err(config_error(format!("rho: value for k = {k} must be positive")));
            }
            Ok((k, r))
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    Ok(RhoRule::Table(entries))
}

/// Parses a comma-separated list of symbols.
pub fn parse_symbols(s: &str) -> anyhow::Result<Vec<u32>> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|_| config_error(format!("block: cannot parse {t:?} as a symbol")))
        })
        .collect()
}
